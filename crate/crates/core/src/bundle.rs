//! Subbundle and flag fields over the sphere.
//!
//! A subbundle of the trivial rank-d bundle is carried by a polynomial frame
//! per chart; the associated projector field and its first and mixed second
//! derivatives are evaluated exactly from the frame jets, so harmonicity and
//! holomorphicity residuals are limited only by conditioning, not by
//! differencing noise. Flag fields bundle several mutually orthogonal
//! subbundle fields and expose the blockwise connection components that the
//! twistor machinery consumes.

use num_complex::Complex64;

use crate::bipoly::{cleared_complement, BiPolyMatrix};
use crate::error::{Error, Result};
use crate::numeric::{self, CMatrix};
use crate::sphere::{Chart, ChartPoint, SphereGrid};
use crate::tol::ToleranceConfig;

/// Distance below which a query point is considered to sit on a registered
/// rank-drop point and gets moved off it.
const DROP_GUARD: f64 = 1e-6;
/// Radial nudge applied in that case.
const DROP_NUDGE: f64 = 1e-5;

/// Projector value with exact first and mixed second Wirtinger derivatives.
#[derive(Debug, Clone)]
pub struct ProjectorJet {
    pub p: CMatrix,
    pub dz: CMatrix,
    pub dzbar: CMatrix,
    pub dzdzbar: CMatrix,
}

impl ProjectorJet {
    pub fn ambient_dim(&self) -> usize {
        self.p.nrows()
    }

    pub fn constant(p: CMatrix) -> Self {
        let d = p.nrows();
        ProjectorJet {
            p,
            dz: CMatrix::zeros(d, d),
            dzbar: CMatrix::zeros(d, d),
            dzdzbar: CMatrix::zeros(d, d),
        }
    }

    /// Jet of the complementary projector I - P.
    pub fn complement(&self) -> ProjectorJet {
        let d = self.ambient_dim();
        ProjectorJet {
            p: CMatrix::identity(d, d) - &self.p,
            dz: -&self.dz,
            dzbar: -&self.dzbar,
            dzdzbar: -&self.dzdzbar,
        }
    }

    pub fn add(&self, other: &ProjectorJet) -> ProjectorJet {
        ProjectorJet {
            p: &self.p + &other.p,
            dz: &self.dz + &other.dz,
            dzbar: &self.dzbar + &other.dzbar,
            dzdzbar: &self.dzdzbar + &other.dzdzbar,
        }
    }

    /// Second-fundamental-form component (I-P)(dP/dz)P.
    pub fn a_prime(&self) -> CMatrix {
        let q = CMatrix::identity(self.ambient_dim(), self.ambient_dim()) - &self.p;
        q * &self.dz * &self.p
    }

    /// Component (I-P)(dP/dzbar)P; vanishes exactly when the subbundle is
    /// holomorphic.
    pub fn a_dblprime(&self) -> CMatrix {
        let q = CMatrix::identity(self.ambient_dim(), self.ambient_dim()) - &self.p;
        q * &self.dzbar * &self.p
    }

    /// Difference of the two operator compositions whose equality defines a
    /// harmonic bundle, applied to the full set of compressed constant
    /// ambient sections. The first-order parts cancel, so this is a matrix.
    pub fn harmonicity_defect(&self) -> CMatrix {
        let d = self.ambient_dim();
        let q = CMatrix::identity(d, d) - &self.p;
        // lhs: section -> A'( (0,1)-connection part of the section )
        let lhs = &q * &self.dz * &self.p * &self.dzbar;
        // rhs: (0,1)-connection part on the complement of A'(section)
        let rhs = &q
            * (-(&self.dzbar * &self.dz * &self.p)
                + &self.dzdzbar * &self.p
                + &self.dz * &self.dzbar);
        lhs - rhs
    }

    /// Independent harmonicity measure: the commutator of the mixed second
    /// derivative with the projector.
    pub fn commutator(&self) -> CMatrix {
        &self.dzdzbar * &self.p - &self.p * &self.dzdzbar
    }

    /// Conformally invariant energy density in the chart coordinate.
    pub fn energy_density(&self) -> f64 {
        let a = self.a_prime();
        let b = self.a_dblprime();
        2.0 * (numeric::frobenius(&a).powi(2) + numeric::frobenius(&b).powi(2))
    }

    /// Internal consistency of the jet: Hermitian projector, adjoint-paired
    /// first derivatives, Hermitian mixed second derivative.
    pub fn max_consistency_defect(&self) -> f64 {
        let h1 = numeric::frobenius(&(&self.p - self.p.adjoint()));
        let h2 = numeric::frobenius(&(&self.dzbar - self.dz.adjoint()));
        let h3 = numeric::frobenius(&(&self.dzdzbar - self.dzdzbar.adjoint()));
        let idem = numeric::frobenius(&(&self.p * &self.p - &self.p));
        h1.max(h2).max(h3).max(idem)
    }
}

/// Assemble the projector jet from the frame value and its derivative values
/// at a point. With G the frame, M = G*G and G+ = M^{-1}G*, the projector is
/// P = G G+ and
///
///   dP/dz = (I-P) Gz G+ + (G+)* (Gzbar)* (I-P),
///
/// differentiating once more in zbar gives the mixed second derivative in
/// terms of the same ingredients.
pub fn jet_from_frame_values(
    g: &CMatrix,
    gz: &CMatrix,
    gzb: &CMatrix,
    gzzb: &CMatrix,
    tol: &ToleranceConfig,
) -> Result<ProjectorJet> {
    // Rescaling a frame column by a constant rescales its derivatives the
    // same way and leaves the projector jet unchanged, so equilibrate the
    // columns first: the Gram condition then measures angles between the
    // columns rather than their relative scales.
    let mut g = g.clone();
    let mut gz = gz.clone();
    let mut gzb = gzb.clone();
    let mut gzzb = gzzb.clone();
    for j in 0..g.ncols() {
        let norm = g.column(j).norm();
        if norm > 0.0 {
            g.column_mut(j).unscale_mut(norm);
            gz.column_mut(j).unscale_mut(norm);
            gzb.column_mut(j).unscale_mut(norm);
            gzzb.column_mut(j).unscale_mut(norm);
        }
    }
    let (g, gz, gzb, gzzb) = (&g, &gz, &gzb, &gzzb);
    let d = g.nrows();
    let id = CMatrix::identity(d, d);
    let m = g.adjoint() * g;
    let minv = numeric::gram_inverse(&m, tol.rank_tol)?;
    let pinv = &minv * g.adjoint();
    let pinv_dag = pinv.adjoint();
    let p = g * &pinv;
    let q = &id - &p;

    let pz = &q * gz * &pinv + &pinv_dag * gzb.adjoint() * &q;
    let pzb = &q * gzb * &pinv + &pinv_dag * gz.adjoint() * &q;

    // derivatives of the pseudo-inverse
    let mz = gzb.adjoint() * g + g.adjoint() * gz;
    let mzb = gz.adjoint() * g + g.adjoint() * gzb;
    let pinv_z = -(&minv * &mz * &pinv) + &minv * gzb.adjoint();
    let pinv_zb = -(&minv * &mzb * &pinv) + &minv * gz.adjoint();

    let pzzb = -(&pzb * gz * &pinv)
        + &q * gzzb * &pinv
        + &q * gz * &pinv_zb
        + pinv_z.adjoint() * gzb.adjoint() * &q
        + &pinv_dag * gzzb.adjoint() * &q
        + &pinv_dag * gzb.adjoint() * (-&pzb);

    if !(numeric::is_finite(&p)
        && numeric::is_finite(&pz)
        && numeric::is_finite(&pzb)
        && numeric::is_finite(&pzzb))
    {
        return Err(Error::NonFiniteMatrix);
    }

    Ok(ProjectorJet {
        p,
        dz: pz,
        dzbar: pzb,
        dzdzbar: pzzb,
    })
}

/// Frame plus its formal derivatives in one chart, with the chart's
/// registered rank-drop points.
#[derive(Debug, Clone)]
struct ChartData {
    frame: BiPolyMatrix,
    dz: BiPolyMatrix,
    dzb: BiPolyMatrix,
    dzzb: BiPolyMatrix,
    drops: Vec<Complex64>,
}

impl ChartData {
    fn new(frame: BiPolyMatrix, rank: usize, tol: &ToleranceConfig) -> Self {
        let dz = frame.diff_z();
        let dzb = frame.diff_zbar();
        let dzzb = dz.diff_zbar();
        let drops = scan_rank_drops(&frame, rank, tol);
        ChartData {
            frame,
            dz,
            dzb,
            dzzb,
            drops,
        }
    }
}

/// Locate isolated points in the closed unit disc where the frame loses
/// column rank: coarse singular-value sweep, then local grid refinement of
/// every small-ratio cluster.
fn scan_rank_drops(frame: &BiPolyMatrix, rank: usize, tol: &ToleranceConfig) -> Vec<Complex64> {
    let ratio_at = |z: Complex64| -> f64 {
        let sv = numeric::singular_values(&frame.eval(z));
        if sv.is_empty() || sv[0] == 0.0 {
            return 0.0;
        }
        if sv.len() < rank {
            return 0.0;
        }
        sv[rank - 1] / sv[0]
    };
    let _ = tol;
    let mut candidates: Vec<Complex64> = Vec::new();
    let push_candidate = |z: Complex64, list: &mut Vec<Complex64>| {
        if !list.iter().any(|c| (c - z).norm() < 0.12) {
            list.push(z);
        }
    };
    let radial = 36;
    let angular = 56;
    for ir in 0..=radial {
        let r = ir as f64 / radial as f64;
        let steps = if ir == 0 { 1 } else { angular };
        for ia in 0..steps {
            let theta = 2.0 * std::f64::consts::PI * ia as f64 / steps as f64;
            let z = Complex64::from_polar(r, theta);
            if ratio_at(z) < 1e-3 {
                push_candidate(z, &mut candidates);
            }
        }
    }
    let mut drops = Vec::new();
    for c in candidates {
        let mut center = c;
        let mut radius = 0.06;
        for _ in 0..10 {
            let mut best = (ratio_at(center), center);
            for i in -3i32..=3 {
                for j in -3i32..=3 {
                    let z = center + Complex64::new(i as f64, j as f64) * (radius / 3.0);
                    let v = ratio_at(z);
                    if v < best.0 {
                        best = (v, z);
                    }
                }
            }
            center = best.1;
            radius /= 4.0;
        }
        if ratio_at(center) < 1e-5 && !drops.iter().any(|d: &Complex64| (d - center).norm() < 1e-4)
        {
            drops.push(center);
        }
    }
    drops
}

fn nudge_against(coord: Complex64, drops: &[Complex64]) -> Complex64 {
    let mut z = coord;
    for _ in 0..3 {
        if drops.iter().all(|d| (z - d).norm() >= DROP_GUARD) {
            return z;
        }
        z = if z.norm() > 1e-12 {
            z + z / z.norm() * DROP_NUDGE
        } else {
            Complex64::new(DROP_NUDGE, 0.0)
        };
    }
    z
}

/// Exact or finite-difference derivative evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DerivativeMode {
    Exact,
    FiniteDifference(f64),
}

/// Anything that evaluates to a projector field over the sphere.
pub trait ProjectorField {
    fn ambient_dim(&self) -> usize;
    fn rank(&self) -> usize;
    /// Move a query point off registered rank-drop points.
    fn resolve(&self, p: &ChartPoint) -> ChartPoint;
    /// Projector value at an already-resolved point.
    fn projector_at_raw(&self, p: &ChartPoint, tol: &ToleranceConfig) -> Result<CMatrix>;
    /// Exact jet at an already-resolved point.
    fn jet_at_raw(&self, p: &ChartPoint, tol: &ToleranceConfig) -> Result<ProjectorJet>;

    fn projector_at(&self, p: &ChartPoint, tol: &ToleranceConfig) -> Result<CMatrix> {
        self.projector_at_raw(&self.resolve(p), tol)
    }

    fn jet_at(&self, p: &ChartPoint, tol: &ToleranceConfig) -> Result<ProjectorJet> {
        self.jet_at_raw(&self.resolve(p), tol)
    }
}

/// Subbundle of the trivial bundle, presented by a polynomial frame on the
/// chart at zero; the chart-at-infinity frame is derived by substitution.
#[derive(Debug, Clone)]
pub struct SubbundleField {
    charts: [ChartData; 2],
    rank: usize,
    ambient_dim: usize,
}

impl SubbundleField {
    pub fn new(frame: BiPolyMatrix, tol: &ToleranceConfig) -> Result<Self> {
        let frame = frame.prune(tol.prune_tol);
        if frame.is_zero() {
            return Err(Error::ZeroColumn { col: 0 });
        }
        let ambient_dim = frame.nrows();
        let frame_inf = frame.chart_infinity();
        // numerical column rank, probed away from possible isolated drops
        let mut rank = 0;
        for &z in &[
            Complex64::new(0.31, 0.17),
            Complex64::new(-0.52, 0.44),
            Complex64::new(0.05, -0.71),
            Complex64::new(-0.13, -0.29),
        ] {
            rank = rank.max(numeric::rank(&frame.eval(z), tol.rank_tol));
        }
        if rank < frame.ncols() {
            return Err(Error::RankDeficient {
                expected: frame.ncols(),
                found: rank,
            });
        }
        let charts = [
            ChartData::new(frame, rank, tol),
            ChartData::new(frame_inf, rank, tol),
        ];
        Ok(SubbundleField {
            charts,
            rank,
            ambient_dim,
        })
    }

    fn chart_data(&self, chart: Chart) -> &ChartData {
        match chart {
            Chart::Zero => &self.charts[0],
            Chart::Infinity => &self.charts[1],
        }
    }

    pub fn frame(&self, chart: Chart) -> &BiPolyMatrix {
        &self.chart_data(chart).frame
    }

    pub fn rank_drop_points(&self, chart: Chart) -> &[Complex64] {
        &self.chart_data(chart).drops
    }

    /// Smallest relative singular-value margin of the frame over the grid;
    /// the conditioning floor for jet evaluation.
    pub fn min_frame_margin(&self, grid: &SphereGrid) -> f64 {
        let mut worst = f64::INFINITY;
        for node in grid.nodes() {
            let q = self.resolve(&node.point);
            let sv = numeric::singular_values(&self.chart_data(q.chart).frame.eval(q.coord));
            if sv.is_empty() || sv[0] == 0.0 || sv.len() < self.rank {
                return 0.0;
            }
            worst = worst.min(sv[self.rank - 1] / sv[0]);
        }
        worst
    }
}

impl ProjectorField for SubbundleField {
    fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    fn rank(&self) -> usize {
        self.rank
    }

    fn resolve(&self, p: &ChartPoint) -> ChartPoint {
        ChartPoint {
            chart: p.chart,
            coord: nudge_against(p.coord, &self.chart_data(p.chart).drops),
        }
    }

    fn projector_at_raw(&self, p: &ChartPoint, tol: &ToleranceConfig) -> Result<CMatrix> {
        let g = self.chart_data(p.chart).frame.eval(p.coord);
        let proj = numeric::span_projector(&g, tol.rank_tol)?;
        if numeric::rank(&g, tol.rank_tol) < self.rank {
            return Err(Error::RankDrop {
                count: 1,
                worst: numeric::singular_values(&g).last().copied().unwrap_or(0.0),
            });
        }
        Ok(proj)
    }

    fn jet_at_raw(&self, p: &ChartPoint, tol: &ToleranceConfig) -> Result<ProjectorJet> {
        let data = self.chart_data(p.chart);
        let z = p.coord;
        let zb = z.conj();
        jet_from_frame_values(
            &data.frame.eval_at(z, zb),
            &data.dz.eval_at(z, zb),
            &data.dzb.eval_at(z, zb),
            &data.dzzb.eval_at(z, zb),
            tol,
        )
        .map_err(|e| match e {
            Error::Singular { .. } => Error::RankDrop {
                count: 1,
                worst: numeric::singular_values(&data.frame.eval_at(z, zb))
                    .last()
                    .copied()
                    .unwrap_or(0.0),
            },
            other => other,
        })
    }
}

/// Moving flag: ordered, pointwise mutually orthogonal subbundle fields whose
/// ranks fill the ambient dimension.
#[derive(Debug, Clone)]
pub struct FlagField {
    pieces: Vec<SubbundleField>,
    type_vector: Vec<usize>,
    ambient_dim: usize,
}

impl FlagField {
    pub fn new(frames: Vec<BiPolyMatrix>, tol: &ToleranceConfig) -> Result<Self> {
        let pieces: Vec<SubbundleField> = frames
            .into_iter()
            .map(|f| SubbundleField::new(f, tol))
            .collect::<Result<_>>()?;
        Self::from_pieces(pieces, tol)
    }

    pub fn from_pieces(pieces: Vec<SubbundleField>, tol: &ToleranceConfig) -> Result<Self> {
        let ambient_dim = pieces
            .first()
            .map(|p| p.ambient_dim())
            .ok_or(Error::NotComplete {
                total_rank: 0,
                ambient: 0,
            })?;
        let type_vector: Vec<usize> = pieces.iter().map(|p| p.rank()).collect();
        let total: usize = type_vector.iter().sum();
        if total != ambient_dim || pieces.iter().any(|p| p.ambient_dim() != ambient_dim) {
            return Err(Error::NotComplete {
                total_rank: total,
                ambient: ambient_dim,
            });
        }
        let flag = FlagField {
            pieces,
            type_vector,
            ambient_dim,
        };
        // orthogonality and completeness, spot-checked across both charts
        for &chart in &[Chart::Zero, Chart::Infinity] {
            for &(re, im) in &[(0.37, 0.21), (-0.61, 0.33), (0.09, -0.83)] {
                let p = ChartPoint {
                    chart,
                    coord: Complex64::new(re, im),
                };
                let projectors: Vec<CMatrix> = flag
                    .pieces
                    .iter()
                    .map(|piece| piece.projector_at(&p, tol))
                    .collect::<Result<_>>()?;
                crate::flags::check_flag(&projectors, tol)?;
            }
        }
        Ok(flag)
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn type_vector(&self) -> &[usize] {
        &self.type_vector
    }

    pub fn piece(&self, i: usize) -> &SubbundleField {
        &self.pieces[i]
    }

    pub fn pieces(&self) -> &[SubbundleField] {
        &self.pieces
    }

    /// Move a point off the union of all pieces' rank-drop points, so every
    /// piece is evaluated at the same resolved coordinate.
    pub fn resolve(&self, p: &ChartPoint) -> ChartPoint {
        let drops: Vec<Complex64> = self
            .pieces
            .iter()
            .flat_map(|piece| piece.chart_data(p.chart).drops.iter().copied())
            .collect();
        ChartPoint {
            chart: p.chart,
            coord: nudge_against(p.coord, &drops),
        }
    }

    /// Jets of all pieces at one (resolved) point.
    pub fn jets_at(&self, p: &ChartPoint, tol: &ToleranceConfig) -> Result<Vec<ProjectorJet>> {
        let q = self.resolve(p);
        self.pieces.iter().map(|piece| piece.jet_at_raw(&q, tol)).collect()
    }

    /// View of the sum of the pieces selected by sigma as a projector field.
    pub fn sigma_field<'a>(
        &'a self,
        sigma: &'a crate::flags::SigmaSubset,
    ) -> Result<SigmaProjection<'a>> {
        if sigma.flag_length() != self.len() {
            return Err(Error::BadSigma {
                reason: format!(
                    "subset over {} parts applied to a flag field with {}",
                    sigma.flag_length(),
                    self.len()
                ),
            });
        }
        Ok(SigmaProjection { flag: self, sigma })
    }
}

/// Sum of a flag field's pieces over an index subset.
pub struct SigmaProjection<'a> {
    flag: &'a FlagField,
    sigma: &'a crate::flags::SigmaSubset,
}

impl ProjectorField for SigmaProjection<'_> {
    fn ambient_dim(&self) -> usize {
        self.flag.ambient_dim()
    }

    fn rank(&self) -> usize {
        self.sigma
            .indices()
            .iter()
            .map(|&i| self.flag.type_vector[i - 1])
            .sum()
    }

    fn resolve(&self, p: &ChartPoint) -> ChartPoint {
        self.flag.resolve(p)
    }

    fn projector_at_raw(&self, p: &ChartPoint, tol: &ToleranceConfig) -> Result<CMatrix> {
        let d = self.ambient_dim();
        let mut acc = CMatrix::zeros(d, d);
        for &i in self.sigma.indices() {
            acc += self.flag.pieces[i - 1].projector_at_raw(p, tol)?;
        }
        Ok(acc)
    }

    fn jet_at_raw(&self, p: &ChartPoint, tol: &ToleranceConfig) -> Result<ProjectorJet> {
        let d = self.ambient_dim();
        let mut acc = ProjectorJet::constant(CMatrix::zeros(d, d));
        for &i in self.sigma.indices() {
            acc = acc.add(&self.flag.pieces[i - 1].jet_at_raw(p, tol)?);
        }
        Ok(acc)
    }
}

/// Five-point-stencil jet from projector values alone; second-order accurate
/// in the step.
pub fn fd_jet<F: ProjectorField + ?Sized>(
    field: &F,
    p: &ChartPoint,
    h: f64,
    tol: &ToleranceConfig,
) -> Result<ProjectorJet> {
    let base = field.resolve(p);
    let at = |dz: Complex64| -> Result<CMatrix> {
        field.projector_at_raw(
            &ChartPoint {
                chart: base.chart,
                coord: base.coord + dz,
            },
            tol,
        )
    };
    let p0 = at(Complex64::new(0.0, 0.0))?;
    let px1 = at(Complex64::new(h, 0.0))?;
    let px0 = at(Complex64::new(-h, 0.0))?;
    let py1 = at(Complex64::new(0.0, h))?;
    let py0 = at(Complex64::new(0.0, -h))?;
    let dx = (&px1 - &px0) / Complex64::new(2.0 * h, 0.0);
    let dy = (&py1 - &py0) / Complex64::new(2.0 * h, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let dz = (&dx - &dy.map(|v| v * i)) / Complex64::new(2.0, 0.0);
    let dzbar = (&dx + &dy.map(|v| v * i)) / Complex64::new(2.0, 0.0);
    let lap = (&px1 + &px0 + &py1 + &py0 - &p0 * Complex64::new(4.0, 0.0))
        / Complex64::new(h * h, 0.0);
    Ok(ProjectorJet {
        p: p0,
        dz,
        dzbar,
        dzdzbar: lap / Complex64::new(4.0, 0.0),
    })
}

fn jet_with_mode<F: ProjectorField + ?Sized>(
    field: &F,
    p: &ChartPoint,
    tol: &ToleranceConfig,
    mode: DerivativeMode,
) -> Result<ProjectorJet> {
    match mode {
        DerivativeMode::Exact => field.jet_at(p, tol),
        DerivativeMode::FiniteDifference(h) => fd_jet(field, p, h, tol),
    }
}

/// Max over grid nodes of the harmonicity defect norm; at or below
/// residual_tol the field is declared harmonic.
pub fn harmonicity_residual<F: ProjectorField + ?Sized>(
    field: &F,
    grid: &SphereGrid,
    tol: &ToleranceConfig,
    mode: DerivativeMode,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for node in grid.nodes() {
        let jet = jet_with_mode(field, &node.point, tol, mode)?;
        worst = worst.max(numeric::frobenius(&jet.harmonicity_defect()));
    }
    Ok(worst)
}

/// Max over grid nodes of the commutator of the mixed second derivative with
/// the projector; an independent harmonicity oracle.
pub fn commutator_oracle<F: ProjectorField + ?Sized>(
    field: &F,
    grid: &SphereGrid,
    tol: &ToleranceConfig,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for node in grid.nodes() {
        let jet = field.jet_at(&node.point, tol)?;
        worst = worst.max(numeric::frobenius(&jet.commutator()));
    }
    Ok(worst)
}

/// Dirichlet energy: sphere integral of the conformally invariant density
/// 2(|A'|^2 + |A''|^2). Degree-d rational normal curves integrate to 2 pi d.
pub fn energy<F: ProjectorField + ?Sized>(
    field: &F,
    grid: &SphereGrid,
    tol: &ToleranceConfig,
) -> Result<f64> {
    let mut acc = 0.0;
    for node in grid.nodes() {
        let jet = field.jet_at(&node.point, tol)?;
        let e = jet.energy_density();
        if !e.is_finite() {
            return Err(Error::NonFinite {
                chart: match node.point.chart {
                    Chart::Zero => "0",
                    Chart::Infinity => "infinity",
                },
                coord: node.point.coord.to_string(),
            });
        }
        acc += node.weight * e;
    }
    Ok(acc)
}

/// Blockwise connection components of a flag field at a point: entries
/// indexed (i, j) zero-based hold pi_i (dP_j) pi_j for the two derivative
/// directions.
pub struct FlagComponents {
    pub a_prime: Vec<Vec<CMatrix>>,
    pub a_dblprime: Vec<Vec<CMatrix>>,
}

pub fn flag_components(jets: &[ProjectorJet]) -> FlagComponents {
    let n = jets.len();
    let mut a_prime = Vec::with_capacity(n);
    let mut a_dblprime = Vec::with_capacity(n);
    for i in 0..n {
        let mut rowp = Vec::with_capacity(n);
        let mut rowd = Vec::with_capacity(n);
        for j in 0..n {
            rowp.push(&jets[i].p * &jets[j].dz * &jets[j].p);
            rowd.push(&jets[i].p * &jets[j].dzbar * &jets[j].p);
        }
        a_prime.push(rowp);
        a_dblprime.push(rowd);
    }
    FlagComponents {
        a_prime,
        a_dblprime,
    }
}

/// Max over grid nodes of the compressed zero-curvature combination
/// pi_t [ sum_i (dzbar pi_i)(dz pi_s) - (dz pi_i)(dzbar pi_s) ] pi_s,
/// which vanishes for every smooth flag field; a end-to-end consistency
/// check of the jet pipeline. Indices are 1-based.
pub fn flatness_identity_check(
    flag: &FlagField,
    grid: &SphereGrid,
    s: usize,
    t: usize,
    tol: &ToleranceConfig,
) -> Result<f64> {
    assert!(s != t && s >= 1 && t >= 1 && s <= flag.len() && t <= flag.len());
    let mut worst = 0.0f64;
    for node in grid.nodes() {
        let jets = flag.jets_at(&node.point, tol)?;
        let d = flag.ambient_dim();
        let mut acc = CMatrix::zeros(d, d);
        for jet_i in &jets {
            acc += &jet_i.dzbar * &jets[s - 1].dz - &jet_i.dz * &jets[s - 1].dzbar;
        }
        let val = &jets[t - 1].p * acc * &jets[s - 1].p;
        worst = worst.max(numeric::frobenius(&val));
    }
    Ok(worst)
}

/// Classical construction of a new line bundle from a holomorphic one:
/// project the derivative of the generating column off the column itself,
/// cleared of denominators. The result is harmonic.
pub fn gauss_transform(col: &BiPolyMatrix, tol: &ToleranceConfig) -> Result<SubbundleField> {
    gauss_transform_frame(col).and_then(|g| SubbundleField::new(g, tol))
}

/// The polynomial frame produced by the construction above, before bundling.
pub fn gauss_transform_frame(col: &BiPolyMatrix) -> Result<BiPolyMatrix> {
    if col.ncols() != 1 {
        return Err(Error::ShapeMismatch {
            context: "gauss transform needs a single column",
            rows: col.nrows(),
            cols: col.ncols(),
        });
    }
    if !col.is_holomorphic() {
        return Err(Error::KmFrameInvalid {
            reason: "gauss transform input must be holomorphic".into(),
        });
    }
    let fp = col.diff_z();
    let ff = col.dagger().matmul(col).entry(0, 0).clone();
    let fpf = col.dagger().matmul(&fp).entry(0, 0).clone();
    let g = fp
        .scale_poly(&ff)
        .sub(&col.scale_poly(&fpf))
        .prune(1e-13);
    if g.is_zero() {
        return Err(Error::ZeroColumn { col: 0 });
    }
    Ok(g)
}

/// Flag of the osculating subspaces of a full holomorphic curve: piece k+1 is
/// the orthogonal complement of span(f, f', ..., f^(k-1)) inside
/// span(f, ..., f^(k)), with polynomial frames obtained by clearing Gram
/// denominators.
pub fn osculating_flag(curve: &BiPolyMatrix, tol: &ToleranceConfig) -> Result<FlagField> {
    if curve.ncols() != 1 {
        return Err(Error::ShapeMismatch {
            context: "osculating flag needs a single holomorphic column",
            rows: curve.nrows(),
            cols: curve.ncols(),
        });
    }
    if !curve.is_holomorphic() {
        return Err(Error::KmFrameInvalid {
            reason: "osculating flag input must be holomorphic".into(),
        });
    }
    let d = curve.nrows();
    let mut derivatives = vec![curve.clone()];
    for _ in 1..d {
        derivatives.push(derivatives.last().unwrap().diff_z());
    }
    let mut frames: Vec<BiPolyMatrix> = vec![curve.clone()];
    for k in 1..d {
        let host = BiPolyMatrix::from_columns(&derivatives[..k].to_vec())?;
        let piece = cleared_complement(&host, &derivatives[k]).prune(1e-12);
        if piece.is_zero() {
            return Err(Error::RankDeficient {
                expected: k + 1,
                found: k,
            });
        }
        frames.push(piece);
    }
    FlagField::new(frames, tol)
}

/// Apply the difference of the two harmonicity compositions to one explicit
/// section presented by its value and zbar-derivative at the point; used to
/// confirm the difference is tensorial (zeroth order) in the section.
pub fn harmonicity_defect_on_section(
    jet: &ProjectorJet,
    u: &CMatrix,
    uzb: &CMatrix,
) -> CMatrix {
    let d = jet.ambient_dim();
    let q = CMatrix::identity(d, d) - &jet.p;
    let lhs = &q * &jet.dz * &jet.p * (&jet.dzbar * u + &jet.p * uzb);
    let v_zb = -(&jet.dzbar * &jet.dz * &jet.p * u)
        + &jet.dzdzbar * &jet.p * u
        + &jet.dz * &jet.dzbar * u
        + &jet.dz * &jet.p * uzb;
    let rhs = &q * v_zb;
    lhs - rhs
}
