//! Twisted holomorphicity of moving flags and the constructive passage
//! between harmonic subbundle fields and flag fields.
//!
//! A flag field splits the trivial bundle into ordered orthogonal pieces.
//! For an index subset sigma, the flag map is sigma-twisted holomorphic when
//! the connection blocks vanish on a combinatorial set of ordered index
//! pairs: pairs on the same side of sigma moving down the flag, and pairs on
//! opposite sides moving up. Projecting such a flag onto the sigma-pieces
//! yields a harmonic bundle; conversely, a harmonic bundle presented with
//! explicit KM-holomorphic frames for itself and its complement lifts back
//! to a flag by merging the filtration pieces of both sides in ascending
//! degree order. The module also implements the length-reduction move search
//! and the certificate for bundles of length zero.

use crate::bipoly::{cleared_complement, BiPolyMatrix};
use crate::bundle::{
    energy, flag_components, harmonicity_residual, DerivativeMode, FlagField, ProjectorField,
    SubbundleField,
};
use crate::error::{Error, Result};
use crate::flags::SigmaSubset;
use crate::numeric::{self, CMatrix};
use crate::sphere::{integrate_sphere, Chart, ChartPoint, SphereGrid};
use crate::splitting::{
    complement_frames, hn_filtration, kernel_frame, projector_splitting_exponents,
    splitting_exponents, HolomorphicSubbundle,
};
use crate::tol::ToleranceConfig;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Flag-and-subset data for a twisted-holomorphicity check. In plain finite
/// mode every piece is an honest finite-rank block. In truncated mode two
/// designated slots stand for the infinite-dimensional in/out components of
/// a polarized model; the in-slot must be selected by sigma and the out-slot
/// must not.
#[derive(Debug, Clone)]
pub struct TwistorConfig {
    sigma: SigmaSubset,
    type_vector: Vec<usize>,
    designated: Option<(usize, usize)>,
}

impl TwistorConfig {
    pub fn finite(sigma: SigmaSubset, type_vector: Vec<usize>) -> Result<Self> {
        if sigma.flag_length() != type_vector.len() {
            return Err(Error::BadSigma {
                reason: format!(
                    "subset over {} parts paired with a type vector of length {}",
                    sigma.flag_length(),
                    type_vector.len()
                ),
            });
        }
        if type_vector.iter().any(|&r| r == 0) {
            return Err(Error::BadSigma {
                reason: "every flag piece must have positive rank in finite mode".to_string(),
            });
        }
        Ok(TwistorConfig {
            sigma,
            type_vector,
            designated: None,
        })
    }

    pub fn truncated(
        sigma: SigmaSubset,
        type_vector: Vec<usize>,
        in_index: usize,
        out_index: usize,
    ) -> Result<Self> {
        if sigma.flag_length() != type_vector.len() {
            return Err(Error::BadSigma {
                reason: format!(
                    "subset over {} parts paired with a type vector of length {}",
                    sigma.flag_length(),
                    type_vector.len()
                ),
            });
        }
        let n = type_vector.len();
        if in_index == 0 || in_index > n || out_index == 0 || out_index > n || in_index == out_index
        {
            return Err(Error::BadSigma {
                reason: format!("designated slots ({in_index}, {out_index}) out of range 1..={n}"),
            });
        }
        if !sigma.contains(in_index) {
            return Err(Error::BadSigma {
                reason: format!("designated in-slot {in_index} must be selected by sigma"),
            });
        }
        if sigma.contains(out_index) {
            return Err(Error::BadSigma {
                reason: format!("designated out-slot {out_index} must not be selected by sigma"),
            });
        }
        Ok(TwistorConfig {
            sigma,
            type_vector,
            designated: Some((in_index, out_index)),
        })
    }

    pub fn sigma(&self) -> &SigmaSubset {
        &self.sigma
    }

    pub fn type_vector(&self) -> &[usize] {
        &self.type_vector
    }

    pub fn designated(&self) -> Option<(usize, usize)> {
        self.designated
    }

    pub fn is_truncated(&self) -> bool {
        self.designated.is_some()
    }
}

/// Ordered index pairs (i, j), 1-based, whose connection blocks must vanish
/// for the flag map twisted by sigma to be holomorphic: i > j with i and j
/// on the same side of sigma, or i < j with i and j on opposite sides. For
/// each listed pair the requirement is A'_ij = 0 and A''_ji = 0, where
/// A'_ij compresses the z-derivative of piece j onto piece i and A''_ji
/// compresses the zbar-derivative of piece i onto piece j.
pub fn j2_forbidden_pairs(sigma: &SigmaSubset, n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 1..=n {
        for j in 1..=n {
            if i == j {
                continue;
            }
            let same_side = sigma.contains(i) == sigma.contains(j);
            if (i > j && same_side) || (i < j && !same_side) {
                out.push((i, j));
            }
        }
    }
    out
}

/// Per-pair maxima over the grid of the connection block norms: entry (i, j)
/// of the first matrix is the largest Frobenius norm of the compression of
/// the z-derivative of piece j onto piece i; the second matrix is the same
/// for the zbar-derivative. Indices are zero-based.
pub fn component_residuals(
    flag: &FlagField,
    grid: &SphereGrid,
    tol: &ToleranceConfig,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let n = flag.len();
    let mut ap = vec![vec![0.0f64; n]; n];
    let mut ad = vec![vec![0.0f64; n]; n];
    for node in grid.nodes() {
        let jets = flag.jets_at(&node.point, tol)?;
        let comps = flag_components(&jets);
        for i in 0..n {
            for j in 0..n {
                ap[i][j] = ap[i][j].max(numeric::frobenius(&comps.a_prime[i][j]));
                ad[i][j] = ad[i][j].max(numeric::frobenius(&comps.a_dblprime[i][j]));
            }
        }
    }
    Ok((ap, ad))
}

/// Worst forbidden connection block over the grid: at or below residual_tol
/// the flag map twisted by sigma is declared holomorphic.
pub fn j2_residual(
    flag: &FlagField,
    sigma: &SigmaSubset,
    grid: &SphereGrid,
    tol: &ToleranceConfig,
) -> Result<f64> {
    if sigma.flag_length() != flag.len() {
        return Err(Error::BadSigma {
            reason: format!(
                "subset over {} parts applied to a flag field with {}",
                sigma.flag_length(),
                flag.len()
            ),
        });
    }
    let pairs = j2_forbidden_pairs(sigma, flag.len());
    let (ap, ad) = component_residuals(flag, grid, tol)?;
    let mut worst = 0.0f64;
    for &(i, j) in &pairs {
        worst = worst.max(ap[i - 1][j - 1]).max(ad[j - 1][i - 1]);
    }
    Ok(worst)
}

/// Outcome of checking that a twisted-holomorphic flag projects to a
/// harmonic bundle. `flag_energy` is half the sum of the piece energies,
/// which counts each off-diagonal connection block once; `projected_energy`
/// is the energy of the sigma-projected bundle itself.
#[derive(Debug, Clone, Copy)]
pub struct TwistorReport {
    pub j2_residual: f64,
    pub harmonicity_residual: f64,
    pub flag_energy: f64,
    pub projected_energy: f64,
}

/// Verifies the projection statement: a flag field that is sigma-twisted
/// holomorphic must project onto a harmonic bundle. The twisted
/// holomorphicity is a precondition; the harmonicity residual and the
/// energies of both maps are reported for inspection.
pub fn verify_twistor_property(
    flag: &FlagField,
    sigma: &SigmaSubset,
    grid: &SphereGrid,
    tol: &ToleranceConfig,
) -> Result<TwistorReport> {
    let j2 = j2_residual(flag, sigma, grid, tol)?;
    if j2 > tol.residual_tol {
        return Err(Error::NotJ2Holomorphic {
            residual: j2,
            tol: tol.residual_tol,
        });
    }
    let mut piece_energy = 0.0;
    for piece in flag.pieces() {
        piece_energy += energy(piece, grid, tol)?;
    }
    let projected = flag.sigma_field(sigma)?;
    let harm = harmonicity_residual(&projected, grid, tol, DerivativeMode::Exact)?;
    let projected_energy = energy(&projected, grid, tol)?;
    Ok(TwistorReport {
        j2_residual: j2,
        harmonicity_residual: harm,
        flag_energy: 0.5 * piece_energy,
        projected_energy,
    })
}

/// A harmonic subbundle field together with an explicit decomposition of
/// itself and of its orthogonal complement into pointwise orthogonal KM
/// pieces. The pieces carry the holomorphic data that the flag lift needs;
/// the combined fields are what harmonicity and reconstruction are measured
/// against. The complement side is empty exactly when the bundle fills the
/// ambient space.
#[derive(Debug, Clone)]
pub struct PresentedBundle {
    pieces: Vec<SubbundleField>,
    perp_pieces: Vec<SubbundleField>,
    field: SubbundleField,
    perp_field: Option<SubbundleField>,
}

impl PresentedBundle {
    pub fn new(
        piece_frames: Vec<BiPolyMatrix>,
        perp_frames: Vec<BiPolyMatrix>,
        tol: &ToleranceConfig,
    ) -> Result<Self> {
        if piece_frames.is_empty() {
            return Err(Error::KmFrameInvalid {
                reason: "the bundle needs at least one piece".to_string(),
            });
        }
        let build = |frames: &[BiPolyMatrix], side: &str| -> Result<Vec<SubbundleField>> {
            frames
                .iter()
                .enumerate()
                .map(|(i, f)| {
                    SubbundleField::new(f.clone(), tol).map_err(|e| Error::KmFrameInvalid {
                        reason: format!("{side} piece {i}: {e}"),
                    })
                })
                .collect()
        };
        let pieces = build(&piece_frames, "bundle")?;
        let perp_pieces = build(&perp_frames, "complement")?;
        let field = SubbundleField::new(
            BiPolyMatrix::from_columns(&piece_frames)?,
            tol,
        )
        .map_err(|e| Error::KmFrameInvalid {
            reason: format!("combined bundle frame: {e}"),
        })?;
        let perp_field = if perp_frames.is_empty() {
            None
        } else {
            Some(
                SubbundleField::new(BiPolyMatrix::from_columns(&perp_frames)?, tol).map_err(
                    |e| Error::KmFrameInvalid {
                        reason: format!("combined complement frame: {e}"),
                    },
                )?,
            )
        };
        let bundle = PresentedBundle {
            pieces,
            perp_pieces,
            field,
            perp_field,
        };
        // all pieces together must be pointwise orthogonal and fill the
        // ambient space; spot-check across both charts
        for &chart in &[Chart::Zero, Chart::Infinity] {
            for &(re, im) in &[(0.37, 0.21), (-0.61, 0.33), (0.09, -0.83)] {
                let p = ChartPoint {
                    chart,
                    coord: Complex64::new(re, im),
                };
                let projectors: Vec<CMatrix> = bundle
                    .pieces
                    .iter()
                    .chain(bundle.perp_pieces.iter())
                    .map(|piece| piece.projector_at(&p, tol))
                    .collect::<Result<_>>()?;
                crate::flags::check_flag(&projectors, tol).map_err(|e| Error::KmFrameInvalid {
                    reason: format!("pieces do not decompose the ambient space: {e}"),
                })?;
            }
        }
        Ok(bundle)
    }

    /// Presentation of the sigma-projection of a flag field: the selected
    /// pieces carry the bundle, the others its complement.
    pub fn from_flag(
        flag: &FlagField,
        sigma: &SigmaSubset,
        tol: &ToleranceConfig,
    ) -> Result<Self> {
        if sigma.flag_length() != flag.len() {
            return Err(Error::BadSigma {
                reason: format!(
                    "subset over {} parts applied to a flag field with {}",
                    sigma.flag_length(),
                    flag.len()
                ),
            });
        }
        let mut piece_frames = Vec::new();
        let mut perp_frames = Vec::new();
        for i in 1..=flag.len() {
            let frame = flag.piece(i - 1).frame(Chart::Zero).clone();
            if sigma.contains(i) {
                piece_frames.push(frame);
            } else {
                perp_frames.push(frame);
            }
        }
        PresentedBundle::new(piece_frames, perp_frames, tol)
    }

    /// Presentation of a holomorphic subbundle: its own pieces come from the
    /// canonical filtration, and the complement pieces are conjugates of the
    /// filtration pieces of the pointwise kernel of the transposed frame.
    pub fn from_holomorphic(e: &HolomorphicSubbundle, tol: &ToleranceConfig) -> Result<Self> {
        let data = hn_filtration(e, tol)?;
        let piece_frames = complement_frames(&data, tol)?;
        let perp_frames = if e.rank() == e.ambient_dim() {
            Vec::new()
        } else {
            let (kframe, _) = kernel_frame(e.frame(), tol)?;
            let ksub = HolomorphicSubbundle::new(kframe, tol)?;
            let kdata = hn_filtration(&ksub, tol)?;
            complement_frames(&kdata, tol)?
                .into_iter()
                .map(|f| f.conj())
                .collect()
        };
        PresentedBundle::new(piece_frames, perp_frames, tol)
    }

    pub fn field(&self) -> &SubbundleField {
        &self.field
    }

    pub fn perp_field(&self) -> Option<&SubbundleField> {
        self.perp_field.as_ref()
    }

    pub fn pieces(&self) -> &[SubbundleField] {
        &self.pieces
    }

    pub fn perp_pieces(&self) -> &[SubbundleField] {
        &self.perp_pieces
    }

    pub fn rank(&self) -> usize {
        self.field.rank()
    }

    pub fn ambient_dim(&self) -> usize {
        self.field.ambient_dim()
    }
}

/// Curvature integral of the metric connection of a subbundle field: the
/// first Chern number, computed chartwise from the frame and its
/// derivatives. The result is a real number that must land on an integer
/// for a genuine smooth subbundle.
pub fn chern_number(
    piece: &SubbundleField,
    grid: &SphereGrid,
    _tol: &ToleranceConfig,
) -> Result<f64> {
    struct ChartFrames {
        f: BiPolyMatrix,
        fz: BiPolyMatrix,
        fzb: BiPolyMatrix,
        fzzb: BiPolyMatrix,
    }
    let prep = |chart: Chart| {
        let f = piece.frame(chart).clone();
        let fz = f.diff_z();
        let fzb = f.diff_zbar();
        let fzzb = fz.diff_zbar();
        ChartFrames { f, fz, fzb, fzzb }
    };
    let zero = prep(Chart::Zero);
    let infinity = prep(Chart::Infinity);
    let density = |p: &ChartPoint| -> f64 {
        let q = piece.resolve(p);
        let data = match q.chart {
            Chart::Zero => &zero,
            Chart::Infinity => &infinity,
        };
        let z = q.coord;
        let zb = z.conj();
        let x = data.f.eval_at(z, zb);
        let xz = data.fz.eval_at(z, zb);
        let xzb = data.fzb.eval_at(z, zb);
        let xzzb = data.fzzb.eval_at(z, zb);
        let g = x.adjoint() * &x;
        let gi = match g.try_inverse() {
            Some(v) => v,
            None => return f64::NAN,
        };
        // X* dX and the derivatives of the Gram matrix; the adjoint swaps
        // the derivative directions, so d/dz X* = (d/dzbar X)*
        let xdz = x.adjoint() * &xz;
        let xdzb = x.adjoint() * &xzb;
        let gz = xzb.adjoint() * &x + &xdz;
        let gzb = xz.adjoint() * &x + &xdzb;
        let az = &gi * &xdz;
        let azb = &gi * &xdzb;
        let dzb_xdz = xz.adjoint() * &xz + x.adjoint() * &xzzb;
        let dz_xdzb = xzb.adjoint() * &xzb + x.adjoint() * &xzzb;
        let dzb_az = &gi * &dzb_xdz - &gi * &gzb * &gi * &xdz;
        let dz_azb = &gi * &dz_xdzb - &gi * &gz * &gi * &xdzb;
        let f_zzb = dz_azb - dzb_az + &az * &azb - &azb * &az;
        f_zzb.trace().re / PI
    };
    integrate_sphere(grid, density)
}

/// Degree of a KM piece: the curvature integral divided by the rank, which
/// must be an integer because a piece splits as equal-degree lines.
pub fn piece_degree(
    piece: &SubbundleField,
    grid: &SphereGrid,
    tol: &ToleranceConfig,
) -> Result<i64> {
    let c1 = chern_number(piece, grid, tol)?;
    let per = c1 / piece.rank() as f64;
    let rounded = per.round();
    if (per - rounded).abs() > 0.05 {
        return Err(Error::KmFrameInvalid {
            reason: format!(
                "piece of rank {} has curvature integral {:.6}, not rank times an integer",
                piece.rank(),
                c1
            ),
        });
    }
    Ok(rounded as i64)
}

/// Evaluated frames of one piece in both charts, with zbar-derivatives.
struct PieceFrames {
    f0: BiPolyMatrix,
    f0_zb: BiPolyMatrix,
    f1: BiPolyMatrix,
    f1_zb: BiPolyMatrix,
}

impl PieceFrames {
    fn of(piece: &SubbundleField) -> Self {
        let f0 = piece.frame(Chart::Zero).clone();
        let f1 = piece.frame(Chart::Infinity).clone();
        PieceFrames {
            f0_zb: f0.diff_zbar(),
            f1_zb: f1.diff_zbar(),
            f0,
            f1,
        }
    }

    fn at(&self, p: &ChartPoint) -> (CMatrix, CMatrix) {
        let z = p.coord;
        let zb = z.conj();
        match p.chart {
            Chart::Zero => (self.f0.eval_at(z, zb), self.f0_zb.eval_at(z, zb)),
            Chart::Infinity => (self.f1.eval_at(z, zb), self.f1_zb.eval_at(z, zb)),
        }
    }
}

/// Worst leakage of zbar-derivatives of prefix sections outside the prefix
/// span, relative to the section scale. Pieces must be listed in ascending
/// degree; every prefix is then required to be closed under the
/// zbar-derivative inside the host, which is what makes the pieces a
/// genuine filtration of the host's KM structure. Nodes where a frame
/// drops rank are skipped; too many such nodes invalidate the check.
fn km_closure_residual(
    host: &SubbundleField,
    ordered: &[SubbundleField],
    grid: &SphereGrid,
    tol: &ToleranceConfig,
) -> Result<f64> {
    let frames: Vec<PieceFrames> = ordered.iter().map(PieceFrames::of).collect();
    let mut worst = 0.0f64;
    let mut skipped = 0usize;
    for node in grid.nodes() {
        let p = &node.point;
        let host_proj = match host.projector_at_raw(p, tol) {
            Ok(m) => m,
            Err(_) => {
                skipped += 1;
                continue;
            }
        };
        let piece_projs: Vec<CMatrix> = match ordered
            .iter()
            .map(|piece| piece.projector_at_raw(p, tol))
            .collect::<Result<_>>()
        {
            Ok(v) => v,
            Err(_) => {
                skipped += 1;
                continue;
            }
        };
        let d = host.ambient_dim();
        let mut prefix = CMatrix::zeros(d, d);
        for (k, proj) in piece_projs.iter().enumerate() {
            prefix += proj;
            let (u, uzb) = frames[k].at(p);
            for c in 0..u.ncols() {
                let ucol = u.column(c);
                let dcol = uzb.column(c);
                let v = &host_proj * dcol;
                let leak = &v - &prefix * &v;
                let scale = ucol.norm() + dcol.norm();
                if scale > 0.0 {
                    worst = worst.max(leak.norm() / scale);
                }
            }
        }
    }
    if skipped * 4 > grid.len() {
        return Err(Error::KmFrameInvalid {
            reason: format!(
                "piece frames drop rank at {skipped} of {} grid nodes",
                grid.len()
            ),
        });
    }
    Ok(worst)
}

/// Output of the flag lift: the assembled flag field, the subset marking
/// which pieces carry the input bundle, the merged (degree, rank) list in
/// ascending degree order, and the verification residuals.
#[derive(Debug, Clone)]
pub struct LiftResult {
    pub flag: FlagField,
    pub sigma: SigmaSubset,
    pub deltas: Vec<(i64, usize)>,
    pub j2_residual: f64,
    pub reconstruction_error: f64,
}

/// Groups same-side pieces of equal degree into single blocks, ascending by
/// degree.
fn group_by_degree(
    pieces: &[SubbundleField],
    grid: &SphereGrid,
    tol: &ToleranceConfig,
) -> Result<Vec<(i64, SubbundleField)>> {
    let mut tagged: Vec<(i64, usize)> = Vec::with_capacity(pieces.len());
    for (i, piece) in pieces.iter().enumerate() {
        tagged.push((piece_degree(piece, grid, tol)?, i));
    }
    tagged.sort_by_key(|&(deg, _)| deg);
    let mut out: Vec<(i64, SubbundleField)> = Vec::new();
    let mut idx = 0;
    while idx < tagged.len() {
        let deg = tagged[idx].0;
        let mut members = Vec::new();
        while idx < tagged.len() && tagged[idx].0 == deg {
            members.push(tagged[idx].1);
            idx += 1;
        }
        let field = if members.len() == 1 {
            pieces[members[0]].clone()
        } else {
            let frames: Vec<BiPolyMatrix> = members
                .iter()
                .map(|&i| pieces[i].frame(Chart::Zero).clone())
                .collect();
            SubbundleField::new(BiPolyMatrix::from_columns(&frames)?, tol).map_err(|e| {
                Error::KmFrameInvalid {
                    reason: format!("equal-degree pieces do not merge into one block: {e}"),
                }
            })?
        };
        out.push((deg, field));
    }
    Ok(out)
}

/// Lifts a presented harmonic bundle to a flag field: the filtration pieces
/// of the bundle and of its complement are ordered by degree, merged
/// ascending with bundle pieces preceding complement pieces on ties, and
/// assembled into a flag whose sigma-projection reproduces the input. The
/// twisted holomorphicity and the reconstruction are verified and reported;
/// exceeding the tolerance signals either numerical failure or a
/// presentation whose merged flag genuinely violates the block pattern.
pub fn twistor_lift(
    bundle: &PresentedBundle,
    grid: &SphereGrid,
    tol: &ToleranceConfig,
) -> Result<LiftResult> {
    let harm = harmonicity_residual(bundle.field(), grid, tol, DerivativeMode::Exact)?;
    if harm > tol.residual_tol {
        return Err(Error::NotHarmonic {
            residual: harm,
            tol: tol.residual_tol,
        });
    }
    let e_groups = group_by_degree(bundle.pieces(), grid, tol)?;
    let perp_groups = group_by_degree(bundle.perp_pieces(), grid, tol)?;

    let e_fields: Vec<SubbundleField> = e_groups.iter().map(|(_, f)| f.clone()).collect();
    let closure = km_closure_residual(bundle.field(), &e_fields, grid, tol)?;
    if closure > tol.residual_tol {
        return Err(Error::KmFrameInvalid {
            reason: format!(
                "bundle pieces are not a KM filtration: prefix closure residual {closure:.3e}"
            ),
        });
    }
    if let Some(perp) = bundle.perp_field() {
        let perp_fields: Vec<SubbundleField> =
            perp_groups.iter().map(|(_, f)| f.clone()).collect();
        let closure = km_closure_residual(perp, &perp_fields, grid, tol)?;
        if closure > tol.residual_tol {
            return Err(Error::KmFrameInvalid {
                reason: format!(
                    "complement pieces are not a KM filtration: prefix closure residual {closure:.3e}"
                ),
            });
        }
    }

    // merge ascending by degree; on equal degree the bundle piece comes
    // first, which is what makes sigma well defined
    let mut merged: Vec<(bool, i64, SubbundleField)> = Vec::new();
    let (mut a, mut b) = (0usize, 0usize);
    while a < e_groups.len() || b < perp_groups.len() {
        let take_e = match (e_groups.get(a), perp_groups.get(b)) {
            (Some(&(de, _)), Some(&(dp, _))) => de <= dp,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (None, None) => unreachable!(),
        };
        if take_e {
            let (deg, field) = e_groups[a].clone();
            merged.push((true, deg, field));
            a += 1;
        } else {
            let (deg, field) = perp_groups[b].clone();
            merged.push((false, deg, field));
            b += 1;
        }
    }
    let deltas: Vec<(i64, usize)> = merged.iter().map(|(_, d, f)| (*d, f.rank())).collect();
    let sigma_indices: Vec<usize> = merged
        .iter()
        .enumerate()
        .filter_map(|(pos, (is_e, _, _))| if *is_e { Some(pos + 1) } else { None })
        .collect();
    let n = merged.len();
    let flag_pieces: Vec<SubbundleField> = merged.into_iter().map(|(_, _, f)| f).collect();
    let flag = FlagField::from_pieces(flag_pieces, tol).map_err(|e| Error::KmFrameInvalid {
        reason: format!("merged pieces do not assemble into a flag: {e}"),
    })?;
    let sigma = SigmaSubset::new(sigma_indices, n)?;

    let j2 = j2_residual(&flag, &sigma, grid, tol)?;
    let projected = flag.sigma_field(&sigma)?;
    let mut recon = 0.0f64;
    let mut skipped = 0usize;
    for node in grid.nodes() {
        let lhs = match projected.projector_at_raw(&node.point, tol) {
            Ok(m) => m,
            Err(_) => {
                skipped += 1;
                continue;
            }
        };
        let rhs = match bundle.field().projector_at_raw(&node.point, tol) {
            Ok(m) => m,
            Err(_) => {
                skipped += 1;
                continue;
            }
        };
        recon = recon.max(numeric::frobenius(&(lhs - rhs)));
    }
    if skipped * 4 > grid.len() {
        return Err(Error::KmFrameInvalid {
            reason: format!(
                "reconstruction check skipped {skipped} of {} grid nodes",
                grid.len()
            ),
        });
    }
    if j2 > tol.residual_tol || recon > tol.residual_tol {
        return Err(Error::LiftResidualExceeded {
            j2,
            reconstruction: recon,
            tol: tol.residual_tol,
        });
    }
    Ok(LiftResult {
        flag,
        sigma,
        deltas,
        j2_residual: j2,
        reconstruction_error: recon,
    })
}

/// Maximum of the named jet-component norm of a field over the grid.
fn component_max(
    field: &SubbundleField,
    grid: &SphereGrid,
    tol: &ToleranceConfig,
    antiholomorphic_block: bool,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for node in grid.nodes() {
        let jet = field.jet_at(&node.point, tol)?;
        let m = if antiholomorphic_block {
            jet.a_prime()
        } else {
            jet.a_dblprime()
        };
        worst = worst.max(numeric::frobenius(&m));
    }
    Ok(worst)
}

/// Length of a presented bundle. When the combined field is pointwise
/// holomorphic or antiholomorphic the splitting exponents are recomputed
/// canonically from the projector, because a presentation's piece degrees
/// describe one filtration rather than the splitting type (a full trivial
/// bundle can be decomposed into pieces of degrees -2, 0, 2, yet its length
/// is 0). For genuinely mixed bundles the piece-degree spread is reported.
pub fn bundle_length(
    bundle: &PresentedBundle,
    grid: &SphereGrid,
    tol: &ToleranceConfig,
) -> Result<i64> {
    let field = bundle.field();
    let a_dbl = component_max(field, grid, tol, false)?;
    let a_pr = component_max(field, grid, tol, true)?;
    let frame = field.frame(Chart::Zero);
    let identity_degree = 2 * field.rank() * (frame.deg_z() + frame.deg_zbar() + 1) + 2;
    if a_dbl <= tol.residual_tol {
        let data = projector_splitting_exponents(
            field.ambient_dim(),
            field.rank(),
            identity_degree,
            |z| {
                field.projector_at_raw(
                    &ChartPoint {
                        chart: Chart::Zero,
                        coord: z,
                    },
                    tol,
                )
            },
            tol,
        )?;
        return Ok(data.length());
    }
    if a_pr <= tol.residual_tol {
        // the conjugate field is holomorphic in its own coordinate and has
        // the same exponent spread
        let data = projector_splitting_exponents(
            field.ambient_dim(),
            field.rank(),
            identity_degree,
            |w| {
                let p = field.projector_at_raw(
                    &ChartPoint {
                        chart: Chart::Zero,
                        coord: w.conj(),
                    },
                    tol,
                )?;
                Ok(p.map(|c| c.conj()))
            },
            tol,
        )?;
        return Ok(data.length());
    }
    let mut degs = Vec::with_capacity(bundle.pieces().len());
    for piece in bundle.pieces() {
        degs.push(piece_degree(piece, grid, tol)?);
    }
    let max = degs.iter().max().copied().unwrap_or(0);
    let min = degs.iter().min().copied().unwrap_or(0);
    Ok(max - min)
}

/// Record of one accepted length-reduction move.
#[derive(Debug, Clone)]
pub struct ReductionMove {
    pub host: &'static str,
    pub removed_degree: i64,
    pub removed_rank: usize,
    pub kind: &'static str,
    pub length_before: i64,
    pub length_after: i64,
    pub description: String,
}

/// One step of the length-reduction process: searches the four canonical
/// moves (remove the top or bottom degree piece of the bundle or of its
/// complement; the removed piece joins the other side) for the first one
/// whose removed piece is holomorphic or antiholomorphic, whose result is
/// harmonic, and whose result has strictly smaller length. Failures of all
/// candidates are reported verbatim, never patched.
pub fn reduce_length(
    bundle: &PresentedBundle,
    grid: &SphereGrid,
    tol: &ToleranceConfig,
) -> Result<(PresentedBundle, ReductionMove)> {
    let length_before = bundle_length(bundle, grid, tol)?;
    if length_before <= 0 {
        return Err(Error::LengthNotPositive);
    }
    let mut e_degs = Vec::with_capacity(bundle.pieces().len());
    for piece in bundle.pieces() {
        e_degs.push(piece_degree(piece, grid, tol)?);
    }
    let mut perp_degs = Vec::with_capacity(bundle.perp_pieces().len());
    for piece in bundle.perp_pieces() {
        perp_degs.push(piece_degree(piece, grid, tol)?);
    }
    let argmax = |v: &[i64]| -> Option<usize> {
        v.iter()
            .enumerate()
            .max_by_key(|&(_, d)| *d)
            .map(|(i, _)| i)
    };
    let argmin = |v: &[i64]| -> Option<usize> {
        v.iter()
            .enumerate()
            .min_by_key(|&(_, d)| *d)
            .map(|(i, _)| i)
    };
    let mut candidates: Vec<(&'static str, usize)> = Vec::new();
    if bundle.pieces().len() > 1 {
        if let Some(i) = argmax(&e_degs) {
            candidates.push(("bundle", i));
        }
        if let Some(i) = argmin(&e_degs) {
            if candidates.last() != Some(&("bundle", i)) {
                candidates.push(("bundle", i));
            }
        }
    }
    if !perp_degs.is_empty() {
        if let Some(i) = argmax(&perp_degs) {
            candidates.push(("complement", i));
        }
        if let Some(i) = argmin(&perp_degs) {
            if candidates.last() != Some(&("complement", i)) {
                candidates.push(("complement", i));
            }
        }
    }
    let mut notes: Vec<String> = Vec::new();
    for (host, idx) in candidates {
        let (moved, deg) = match host {
            "bundle" => (&bundle.pieces()[idx], e_degs[idx]),
            _ => (&bundle.perp_pieces()[idx], perp_degs[idx]),
        };
        let label = format!("remove the degree-{deg} piece from the {host}");
        let a_pr = component_max(moved, grid, tol, true)?;
        let a_dbl = component_max(moved, grid, tol, false)?;
        let kind = if a_dbl <= tol.residual_tol {
            "holomorphic"
        } else if a_pr <= tol.residual_tol {
            "antiholomorphic"
        } else {
            notes.push(format!(
                "{label}: piece is neither holomorphic nor antiholomorphic (A' {a_pr:.1e}, A'' {a_dbl:.1e})"
            ));
            continue;
        };
        let mut piece_frames: Vec<BiPolyMatrix> = bundle
            .pieces()
            .iter()
            .map(|p| p.frame(Chart::Zero).clone())
            .collect();
        let mut perp_frames: Vec<BiPolyMatrix> = bundle
            .perp_pieces()
            .iter()
            .map(|p| p.frame(Chart::Zero).clone())
            .collect();
        let moved_frame = match host {
            "bundle" => piece_frames.remove(idx),
            _ => perp_frames.remove(idx),
        };
        match host {
            "bundle" => perp_frames.push(moved_frame),
            _ => piece_frames.push(moved_frame),
        }
        let candidate = match PresentedBundle::new(piece_frames, perp_frames, tol) {
            Ok(c) => c,
            Err(e) => {
                notes.push(format!("{label}: result is not presentable ({e})"));
                continue;
            }
        };
        let harm =
            harmonicity_residual(candidate.field(), grid, tol, DerivativeMode::Exact)?;
        if harm > tol.residual_tol {
            notes.push(format!("{label}: result is not harmonic (residual {harm:.3e})"));
            continue;
        }
        let length_after = match bundle_length(&candidate, grid, tol) {
            Ok(l) => l,
            Err(e) => {
                notes.push(format!("{label}: result length not measurable ({e})"));
                continue;
            }
        };
        if length_after >= length_before {
            notes.push(format!(
                "{label}: length does not decrease ({length_before} -> {length_after})"
            ));
            continue;
        }
        let removed_rank = moved.rank();
        let description = format!(
            "removed the {kind} degree-{deg} piece of rank {removed_rank} from the {host}; length {length_before} -> {length_after}"
        );
        return Ok((
            candidate,
            ReductionMove {
                host,
                removed_degree: deg,
                removed_rank,
                kind,
                length_before,
                length_after,
                description,
            },
        ));
    }
    Err(Error::NoReducingMove {
        candidates: notes.join("; "),
    })
}

/// Sample points off the unit circle used for polynomial identity checks.
fn identity_probes() -> Vec<Complex64> {
    let mut out = Vec::with_capacity(48);
    for &radius in &[0.77f64, 1.29] {
        for k in 0..24 {
            let theta = 2.0 * PI * (k as f64 + 0.37) / 24.0;
            out.push(Complex64::from_polar(radius, theta));
        }
    }
    out
}

/// Picks pointwise independent cleared complements of the outer frame's
/// columns relative to the inner frame, normalized to unit coefficient
/// scale.
fn complement_columns(
    outer: &BiPolyMatrix,
    inner: &BiPolyMatrix,
    want: usize,
    tol: &ToleranceConfig,
) -> Result<BiPolyMatrix> {
    let probes = [
        Complex64::new(0.4371, 0.2913),
        Complex64::new(-0.6129, 0.4288),
        Complex64::new(0.18, -0.77),
    ];
    let mut picked: Vec<BiPolyMatrix> = Vec::new();
    for j in 0..outer.ncols() {
        if picked.len() == want {
            break;
        }
        let col = outer.column(j);
        let cand = cleared_complement(inner, &col).prune_shared(1e-12);
        if cand.is_zero() {
            continue;
        }
        let scale = cand.max_coeff_norm();
        let cand = cand.scale(Complex64::new(1.0 / scale, 0.0));
        let independent = probes.iter().all(|&z| {
            let mut m = CMatrix::zeros(outer.nrows(), picked.len() + 1);
            for (k, p) in picked.iter().enumerate() {
                m.set_column(k, &p.eval(z).column(0));
            }
            m.set_column(picked.len(), &cand.eval(z).column(0));
            numeric::rank(&m, tol.rank_tol) == picked.len() + 1
        });
        if independent {
            picked.push(cand);
        }
    }
    if picked.len() < want {
        return Err(Error::RankDeficient {
            expected: want,
            found: picked.len(),
        });
    }
    BiPolyMatrix::from_columns(&picked)
}

/// Certifies the canonical shape of a harmonic bundle of length zero: the
/// orthogonal complement E of a holomorphic subbundle F1 inside a
/// holomorphic subbundle F, where the z-derivative of every section of F1
/// stays inside F. The returned presentation carries E as its single piece
/// and F1 together with the complement of F as the other side. Zero length
/// is checked directly: a rank-one E or a pointwise (anti)holomorphic E has
/// computable exponents, and a single exponent block is required. With no
/// inner bundle the shape degenerates to E = F, which is accepted exactly
/// when F has a single exponent.
pub fn check_length_zero_form(
    f: &HolomorphicSubbundle,
    f1: Option<&HolomorphicSubbundle>,
    grid: &SphereGrid,
    tol: &ToleranceConfig,
) -> Result<PresentedBundle> {
    let d = f.ambient_dim();
    let outer_perp = |tol: &ToleranceConfig| -> Result<Vec<BiPolyMatrix>> {
        if f.rank() == d {
            Ok(Vec::new())
        } else {
            let (kframe, _) = kernel_frame(f.frame(), tol)?;
            Ok(vec![kframe.conj()])
        }
    };
    let inner = match f1 {
        None => {
            let data = splitting_exponents(f, tol)?;
            if data.exponents.len() != 1 {
                return Err(Error::ProfileInconsistent {
                    context: format!(
                        "bundle splits with exponents {:?}; zero length requires a single block",
                        data.exponent_pairs()
                    ),
                });
            }
            let presented =
                PresentedBundle::new(vec![f.frame().clone()], outer_perp(tol)?, tol)?;
            let harm =
                harmonicity_residual(presented.field(), grid, tol, DerivativeMode::Exact)?;
            if harm > tol.residual_tol {
                return Err(Error::NotHarmonic {
                    residual: harm,
                    tol: tol.residual_tol,
                });
            }
            return Ok(presented);
        }
        Some(inner) => inner,
    };
    if inner.ambient_dim() != d {
        return Err(Error::ShapeMismatch {
            context: "inner and outer bundles live in different ambient spaces",
            rows: inner.ambient_dim(),
            cols: d,
        });
    }
    if inner.rank() >= f.rank() {
        return Err(Error::ShapeMismatch {
            context: "inner bundle must have strictly smaller rank than the outer",
            rows: inner.rank(),
            cols: f.rank(),
        });
    }

    // containment and the derivative condition are polynomial identities,
    // so checking them at enough generic sample points decides them
    let probes = identity_probes();
    let mut usable = 0usize;
    let mut nested_worst = 0.0f64;
    let mut deriv_worst = 0.0f64;
    let inner_dz = inner.frame().diff_z();
    for &z in &probes {
        let fv = f.frame().eval(z);
        let iv = inner.frame().eval(z);
        if numeric::rank(&fv, tol.rank_tol) < f.rank()
            || numeric::rank(&iv, tol.rank_tol) < inner.rank()
        {
            continue;
        }
        usable += 1;
        let pf = numeric::span_projector(&fv, tol.rank_tol)?;
        for c in 0..iv.ncols() {
            let col = iv.column(c);
            let out = &col - &pf * &col;
            nested_worst = nested_worst.max(out.norm() / (col.norm() + 1.0));
        }
        let dv = inner_dz.eval(z);
        for c in 0..dv.ncols() {
            let col = dv.column(c);
            let out = &col - &pf * &col;
            deriv_worst = deriv_worst.max(out.norm() / (col.norm() + 1.0));
        }
    }
    if usable * 2 < probes.len() {
        return Err(Error::RankDeficientSampling {
            context: "frames drop rank at most identity probes".to_string(),
        });
    }
    if nested_worst > tol.residual_tol {
        return Err(Error::NotNested {
            context: "inner bundle leaves the outer bundle",
            residual: nested_worst,
        });
    }
    if deriv_worst > tol.residual_tol {
        return Err(Error::DerivativeConditionFailed {
            residual: deriv_worst,
        });
    }

    let e_rank = f.rank() - inner.rank();
    let e_frame = complement_columns(f.frame(), inner.frame(), e_rank, tol)?;
    let mut perp_frames = vec![inner.frame().clone()];
    perp_frames.extend(outer_perp(tol)?);
    let presented = PresentedBundle::new(vec![e_frame], perp_frames, tol)?;
    let harm = harmonicity_residual(presented.field(), grid, tol, DerivativeMode::Exact)?;
    if harm > tol.residual_tol {
        return Err(Error::NotHarmonic {
            residual: harm,
            tol: tol.residual_tol,
        });
    }
    if e_rank > 1 {
        let length = bundle_length(&presented, grid, tol)?;
        if length != 0 {
            return Err(Error::ProfileInconsistent {
                context: format!("complement has length {length}, not zero"),
            });
        }
    }
    Ok(presented)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::{gauss_transform, osculating_flag};
    use crate::sphere::make_grid;

    const ONE: Complex64 = Complex64::new(1.0, 0.0);
    const ZERO: Complex64 = Complex64::new(0.0, 0.0);

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn veronese2() -> BiPolyMatrix {
        let s = Complex64::new(2.0f64.sqrt(), 0.0);
        BiPolyMatrix::from_fn(3, 1, |i, _| match i {
            0 => crate::bipoly::BiPoly::poly_z(&[ONE]),
            1 => crate::bipoly::BiPoly::poly_z(&[ZERO, s]),
            _ => crate::bipoly::BiPoly::poly_z(&[ZERO, ZERO, ONE]),
        })
    }

    fn taut2() -> BiPolyMatrix {
        BiPolyMatrix::column_z(&[&[ONE], &[ZERO, ONE]])
    }

    fn mixed20() -> BiPolyMatrix {
        BiPolyMatrix::from_columns(&[
            BiPolyMatrix::column_z(&[&[ONE], &[ZERO, ONE], &[ZERO, ZERO, ONE]]),
            BiPolyMatrix::column_z(&[&[ZERO], &[ONE], &[ZERO]]),
        ])
        .unwrap()
    }

    fn sigma(indices: &[usize], n: usize) -> SigmaSubset {
        SigmaSubset::new(indices.to_vec(), n).unwrap()
    }

    #[test]
    fn forbidden_pairs_for_the_middle_slot() {
        let pairs = j2_forbidden_pairs(&sigma(&[2], 3), 3);
        let mut sorted = pairs.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![(1, 2), (2, 3), (3, 1)]);
    }

    #[test]
    fn constant_flag_is_twisted_holomorphic_for_any_subset() {
        let frames = vec![
            BiPolyMatrix::from_columns(&[
                BiPolyMatrix::column_z(&[&[ONE], &[ZERO], &[ZERO]]),
                BiPolyMatrix::column_z(&[&[ZERO], &[ONE], &[ZERO]]),
            ])
            .unwrap(),
            BiPolyMatrix::column_z(&[&[ZERO], &[ZERO], &[ONE]]),
        ];
        let flag = FlagField::new(frames, &tol()).unwrap();
        let grid = make_grid(6, 8);
        let report =
            verify_twistor_property(&flag, &sigma(&[1], 2), &grid, &tol()).unwrap();
        assert!(report.j2_residual < 1e-13);
        assert!(report.harmonicity_residual < 1e-13);
        assert!(report.flag_energy.abs() < 1e-13);
        assert!(report.projected_energy.abs() < 1e-13);
    }

    #[test]
    fn osculating_flag_passes_for_alternating_subsets_only() {
        let flag = osculating_flag(&veronese2(), &tol()).unwrap();
        let grid = make_grid(8, 10);
        let t = tol();
        let middle = j2_residual(&flag, &sigma(&[2], 3), &grid, &t).unwrap();
        assert!(middle < 1e-9, "middle subset residual {middle:.3e}");
        // complementary subsets impose the same block pattern
        let outer = j2_residual(&flag, &sigma(&[1, 3], 3), &grid, &t).unwrap();
        assert!(outer < 1e-9, "outer pair residual {outer:.3e}");
        for bad in [vec![1], vec![3], vec![1, 2], vec![2, 3]] {
            let r = j2_residual(&flag, &sigma(&bad, 3), &grid, &t).unwrap();
            assert!(r > 0.1, "subset {bad:?} unexpectedly passed: {r:.3e}");
        }
        let err = verify_twistor_property(&flag, &sigma(&[1], 3), &grid, &t).unwrap_err();
        assert!(matches!(err, Error::NotJ2Holomorphic { .. }));
    }

    #[test]
    fn projected_middle_bundle_is_harmonic_and_matches_the_gauss_transform() {
        let curve = veronese2();
        let flag = osculating_flag(&curve, &tol()).unwrap();
        let grid = make_grid(10, 12);
        let t = tol();
        let report = verify_twistor_property(&flag, &sigma(&[2], 3), &grid, &t).unwrap();
        assert!(report.harmonicity_residual < 1e-9);
        assert!(report.flag_energy > 0.0 && report.projected_energy > 0.0);
        let gauss = gauss_transform(&curve, &t).unwrap();
        let gauss_energy = energy(&gauss, &grid, &t).unwrap();
        assert!((report.projected_energy - gauss_energy).abs() < 1e-8);
        for &(re, im) in &[(0.31, -0.44), (-0.72, 0.15)] {
            let p = ChartPoint {
                chart: Chart::Zero,
                coord: Complex64::new(re, im),
            };
            let a = flag.piece(1).projector_at(&p, &t).unwrap();
            let b = gauss.projector_at(&p, &t).unwrap();
            assert!(numeric::frobenius(&(a - b)) < 1e-9);
        }
    }

    #[test]
    fn curvature_degrees_of_the_tautological_and_osculating_pieces() {
        let grid = make_grid(16, 12);
        let t = tol();
        let taut = SubbundleField::new(taut2(), &t).unwrap();
        let c1 = chern_number(&taut, &grid, &t).unwrap();
        assert!((c1 + 1.0).abs() < 1e-8, "tautological degree {c1}");
        assert_eq!(piece_degree(&taut, &grid, &t).unwrap(), -1);
        let flag = osculating_flag(&veronese2(), &t).unwrap();
        let degs: Vec<i64> = (0..3)
            .map(|i| piece_degree(flag.piece(i), &grid, &t).unwrap())
            .collect();
        assert_eq!(degs, vec![-2, 0, 2]);
    }

    #[test]
    fn lift_of_a_holomorphic_line_is_the_two_step_flag() {
        let t = tol();
        let e = HolomorphicSubbundle::new(taut2(), &t).unwrap();
        let presented = PresentedBundle::from_holomorphic(&e, &t).unwrap();
        let grid = make_grid(12, 12);
        let lift = twistor_lift(&presented, &grid, &t).unwrap();
        assert_eq!(lift.flag.len(), 2);
        assert_eq!(lift.sigma.indices(), &[1usize]);
        assert_eq!(lift.deltas, vec![(-1, 1), (1, 1)]);
        assert!(lift.j2_residual < 1e-9);
        assert!(lift.reconstruction_error < 1e-10);
    }

    #[test]
    fn lift_of_the_middle_veronese_recovers_the_osculating_flag() {
        let t = tol();
        let flag = osculating_flag(&veronese2(), &t).unwrap();
        let presented = PresentedBundle::from_flag(&flag, &sigma(&[2], 3), &t).unwrap();
        let grid = make_grid(12, 12);
        let lift = twistor_lift(&presented, &grid, &t).unwrap();
        assert_eq!(lift.sigma.indices(), &[2usize]);
        assert_eq!(lift.deltas, vec![(-2, 1), (0, 1), (2, 1)]);
        for &(re, im) in &[(0.27, 0.41), (-0.55, -0.12)] {
            let p = ChartPoint {
                chart: Chart::Zero,
                coord: Complex64::new(re, im),
            };
            for i in 0..3 {
                let a = lift.flag.piece(i).projector_at(&p, &t).unwrap();
                let b = flag.piece(i).projector_at(&p, &t).unwrap();
                assert!(numeric::frobenius(&(a - b)) < 1e-9);
            }
        }
    }

    #[test]
    fn lift_of_the_outer_pair_uses_the_complementary_subset() {
        let t = tol();
        let flag = osculating_flag(&veronese2(), &t).unwrap();
        let grid = make_grid(12, 12);
        let middle = PresentedBundle::from_flag(&flag, &sigma(&[2], 3), &t).unwrap();
        let outer = PresentedBundle::from_flag(&flag, &sigma(&[1, 3], 3), &t).unwrap();
        let lift_middle = twistor_lift(&middle, &grid, &t).unwrap();
        let lift_outer = twistor_lift(&outer, &grid, &t).unwrap();
        assert_eq!(lift_middle.sigma.indices(), &[2usize]);
        assert_eq!(lift_outer.sigma.indices(), &[1usize, 3]);
        assert_eq!(lift_middle.deltas, lift_outer.deltas);
    }

    #[test]
    fn corrupted_complement_presentation_is_rejected() {
        let t = tol();
        let flag = osculating_flag(&veronese2(), &t).unwrap();
        let u1 = flag.piece(0).frame(Chart::Zero).clone();
        let u2 = flag.piece(1).frame(Chart::Zero).clone();
        let u3 = flag.piece(2).frame(Chart::Zero).clone();
        let grid = make_grid(12, 12);
        // mixing the two complement directions of the tautological line
        // destroys the filtration property while keeping a valid orthogonal
        // decomposition
        let corrupt = u2.add(&u3);
        let other = cleared_complement(&corrupt, &u2).prune_shared(1e-12);
        let presented =
            PresentedBundle::new(vec![u1], vec![corrupt, other], &t).unwrap();
        let err = twistor_lift(&presented, &grid, &t).unwrap_err();
        assert!(matches!(err, Error::KmFrameInvalid { .. }), "got {err}");
    }

    #[test]
    fn merged_filtration_of_a_holomorphic_line_with_split_complement_fails_honestly() {
        // the complement of the tautological Veronese line splits into
        // pieces of degrees 0 and 2 that are connected by the derivative,
        // so the merged three-step flag genuinely violates the block
        // pattern; the lift reports this instead of coarsening the flag
        let t = tol();
        let flag = osculating_flag(&veronese2(), &t).unwrap();
        let presented = PresentedBundle::from_flag(&flag, &sigma(&[1], 3), &t).unwrap();
        let grid = make_grid(12, 12);
        let err = twistor_lift(&presented, &grid, &t).unwrap_err();
        assert!(matches!(err, Error::LiftResidualExceeded { .. }), "got {err}");
    }

    #[test]
    fn mixed_bundle_reduces_to_the_full_space_in_one_move() {
        let t = tol();
        let e = HolomorphicSubbundle::new(mixed20(), &t).unwrap();
        let presented = PresentedBundle::from_holomorphic(&e, &t).unwrap();
        let grid = make_grid(12, 12);
        assert_eq!(bundle_length(&presented, &grid, &t).unwrap(), 2);
        let (next, mv) = reduce_length(&presented, &grid, &t).unwrap();
        assert_eq!(mv.host, "complement");
        assert_eq!(mv.kind, "antiholomorphic");
        assert_eq!(mv.length_before, 2);
        assert_eq!(mv.length_after, 0);
        assert_eq!(next.rank(), 3);
        assert!(next.perp_field().is_none());
        assert_eq!(bundle_length(&next, &grid, &t).unwrap(), 0);
    }

    #[test]
    fn gauss_pair_sum_reduces_by_dropping_the_antiholomorphic_line() {
        let t = tol();
        let flag = osculating_flag(&veronese2(), &t).unwrap();
        let presented = PresentedBundle::from_flag(&flag, &sigma(&[1, 3], 3), &t).unwrap();
        let grid = make_grid(12, 12);
        assert_eq!(bundle_length(&presented, &grid, &t).unwrap(), 4);
        let (next, mv) = reduce_length(&presented, &grid, &t).unwrap();
        assert_eq!(mv.host, "bundle");
        assert_eq!(mv.kind, "antiholomorphic");
        assert_eq!(mv.removed_degree, 2);
        assert_eq!(mv.length_after, 0);
        let p = ChartPoint {
            chart: Chart::Zero,
            coord: Complex64::new(0.33, -0.21),
        };
        let a = next.field().projector_at(&p, &t).unwrap();
        let b = flag.piece(0).projector_at(&p, &t).unwrap();
        assert!(numeric::frobenius(&(a - b)) < 1e-9);
    }

    #[test]
    fn reduction_requires_positive_length() {
        let t = tol();
        let e = HolomorphicSubbundle::new(taut2(), &t).unwrap();
        let presented = PresentedBundle::from_holomorphic(&e, &t).unwrap();
        let grid = make_grid(10, 10);
        let err = reduce_length(&presented, &grid, &t).unwrap_err();
        assert!(matches!(err, Error::LengthNotPositive));
    }

    #[test]
    fn length_zero_certificates_of_the_harmonic_sequence() {
        let t = tol();
        let grid = make_grid(10, 12);
        let curve = veronese2();
        let jet2 = BiPolyMatrix::from_columns(&[curve.clone(), curve.diff_z()]).unwrap();
        let full = BiPolyMatrix::identity(3);
        let osc1 = HolomorphicSubbundle::new(curve.clone(), &t).unwrap();
        let osc2 = HolomorphicSubbundle::new(jet2, &t).unwrap();
        let triv = HolomorphicSubbundle::new(full, &t).unwrap();
        let flag = osculating_flag(&curve, &t).unwrap();
        let p = ChartPoint {
            chart: Chart::Zero,
            coord: Complex64::new(0.41, 0.17),
        };

        // the middle bundle is the complement of the curve inside its
        // two-jet span; the derivative condition holds because the
        // derivative of the curve is a section of the jet span
        let middle = check_length_zero_form(&osc2, Some(&osc1), &grid, &t).unwrap();
        let a = middle.field().projector_at(&p, &t).unwrap();
        let b = flag.piece(1).projector_at(&p, &t).unwrap();
        assert!(numeric::frobenius(&(a - b)) < 1e-9);

        // the last bundle is the complement of the two-jet span in the
        // full space, where the derivative condition is vacuous
        let last = check_length_zero_form(&triv, Some(&osc2), &grid, &t).unwrap();
        let a = last.field().projector_at(&p, &t).unwrap();
        let b = flag.piece(2).projector_at(&p, &t).unwrap();
        assert!(numeric::frobenius(&(a - b)) < 1e-9);

        // with no inner bundle the outer bundle itself must have a single
        // exponent
        let line = check_length_zero_form(&osc1, None, &grid, &t).unwrap();
        assert_eq!(line.rank(), 1);
        let err = check_length_zero_form(
            &HolomorphicSubbundle::new(mixed20(), &t).unwrap(),
            None,
            &grid,
            &t,
        )
        .unwrap_err();
        assert!(matches!(err, Error::ProfileInconsistent { .. }));
    }

    #[test]
    fn derivative_condition_failure_is_reported() {
        let t = tol();
        let grid = make_grid(8, 10);
        let outer = HolomorphicSubbundle::new(
            BiPolyMatrix::from_columns(&[
                BiPolyMatrix::column_z(&[&[ONE], &[ZERO, ONE], &[ZERO, ZERO, ONE]]),
                BiPolyMatrix::column_z(&[&[ZERO], &[ZERO], &[ONE]]),
            ])
            .unwrap(),
            &t,
        )
        .unwrap();
        let inner = HolomorphicSubbundle::new(
            BiPolyMatrix::column_z(&[&[ONE], &[ZERO, ONE], &[ZERO, ZERO, ONE]]),
            &t,
        )
        .unwrap();
        let err = check_length_zero_form(&outer, Some(&inner), &grid, &t).unwrap_err();
        assert!(matches!(err, Error::DerivativeConditionFailed { .. }), "got {err}");
    }

    #[test]
    fn nested_precondition_is_reported() {
        let t = tol();
        let grid = make_grid(8, 10);
        let outer = HolomorphicSubbundle::new(
            BiPolyMatrix::from_columns(&[
                BiPolyMatrix::column_z(&[&[ONE], &[ZERO], &[ZERO]]),
                BiPolyMatrix::column_z(&[&[ZERO], &[ONE], &[ZERO]]),
            ])
            .unwrap(),
            &t,
        )
        .unwrap();
        let inner = HolomorphicSubbundle::new(
            BiPolyMatrix::column_z(&[&[ZERO], &[ZERO], &[ONE]]),
            &t,
        )
        .unwrap();
        let err = check_length_zero_form(&outer, Some(&inner), &grid, &t).unwrap_err();
        assert!(matches!(err, Error::NotNested { .. }), "got {err}");
    }

    #[test]
    fn twistor_config_guards_the_designated_slots() {
        let s = sigma(&[1, 3], 4);
        assert!(TwistorConfig::finite(s.clone(), vec![1, 2, 1, 1]).is_ok());
        assert!(TwistorConfig::finite(s.clone(), vec![1, 0, 1, 1]).is_err());
        assert!(TwistorConfig::finite(s.clone(), vec![1, 2, 1]).is_err());
        assert!(TwistorConfig::truncated(s.clone(), vec![1, 2, 1, 1], 1, 4).is_ok());
        assert!(TwistorConfig::truncated(s.clone(), vec![1, 2, 1, 1], 2, 4).is_err());
        assert!(TwistorConfig::truncated(s.clone(), vec![1, 2, 1, 1], 1, 3).is_err());
        assert!(TwistorConfig::truncated(s, vec![1, 2, 1, 1], 1, 1).is_err());
    }
}
