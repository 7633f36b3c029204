//! Splitting type, section spaces, filtrations, and transition-function
//! factorization for holomorphic subbundles of the trivial bundle over the
//! sphere.
//!
//! A holomorphic subbundle is presented by a polynomial frame in the affine
//! coordinate z. Its isomorphism type is a direct sum of line-bundle powers;
//! we recover the exponents from the dimension profile of the spaces of
//! polynomial sections of bounded degree, build the canonical filtration from
//! a minimal polynomial frame, and factor loop-group style transition
//! functions through the same section machinery.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::bipoly::{BiPoly, BiPolyMatrix};
use crate::error::{Error, Result};
use crate::numeric::{self, CMatrix};
use crate::tol::ToleranceConfig;

const ONE_C: Complex64 = Complex64::new(1.0, 0.0);

/// Sample radii tried in order when building interpolation systems. The
/// fallbacks only matter when a frame drops rank exactly on the first circle.
const SECTION_RADII: [f64; 3] = [1.0, 0.9375, 1.0625];

/// Probe points used for generic-rank decisions on polynomial frames. Chosen
/// off the real and imaginary axes and away from roots of unity so that the
/// catalog's rank-drop loci miss them.
const RANK_PROBES: [(f64, f64); 2] = [(0.4371, 0.2913), (-0.6129, 0.4288)];

/// A holomorphic subbundle of the trivial bundle, presented by a polynomial
/// frame whose columns span the fibre at every point where they are
/// independent.
#[derive(Debug, Clone)]
pub struct HolomorphicSubbundle {
    frame: BiPolyMatrix,
    rank: usize,
    ambient_dim: usize,
}

impl HolomorphicSubbundle {
    /// Wraps a polynomial frame after checking that it is holomorphic (no
    /// conjugate variable anywhere), has no identically zero column, and has
    /// full column rank at generic points.
    pub fn new(frame: BiPolyMatrix, tol: &ToleranceConfig) -> Result<Self> {
        if !frame.is_holomorphic() {
            return Err(Error::KmFrameInvalid {
                reason: "holomorphic subbundle frame has conjugate-variable terms".to_string(),
            });
        }
        let frame = frame.prune(tol.prune_tol);
        let rank = frame.ncols();
        let ambient_dim = frame.nrows();
        if rank == 0 || ambient_dim == 0 || rank > ambient_dim {
            return Err(Error::ShapeMismatch {
                context: "holomorphic subbundle frame",
                rows: ambient_dim,
                cols: rank,
            });
        }
        for j in 0..rank {
            if frame.column(j).is_zero() {
                return Err(Error::ZeroColumn { col: j });
            }
        }
        let generic_rank = RANK_PROBES
            .iter()
            .map(|&(re, im)| numeric::rank(&frame.eval(Complex64::new(re, im)), tol.rank_tol))
            .max()
            .unwrap_or(0);
        if generic_rank < rank {
            return Err(Error::RankDeficient {
                expected: rank,
                found: generic_rank,
            });
        }
        Ok(Self {
            frame,
            rank,
            ambient_dim,
        })
    }

    pub fn frame(&self) -> &BiPolyMatrix {
        &self.frame
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    /// Largest z-degree appearing in the frame.
    pub fn degree(&self) -> usize {
        self.frame.deg_z()
    }

    /// The induced projector field on the sphere, for harmonicity and
    /// component checks.
    pub fn field(&self, tol: &ToleranceConfig) -> Result<crate::bundle::SubbundleField> {
        crate::bundle::SubbundleField::new(self.frame.clone(), tol)
    }
}

/// Splitting type of a holomorphic subbundle: distinct exponents in
/// descending order, their multiplicities, and (when computed) holomorphic
/// frames for the steps of the canonical filtration.
///
/// The exponent convention is the tautological-power scale: a minimal frame
/// column of degree c contributes exponent c, so the span of (1, z) has
/// exponent 1. On the dual degree scale the value is the negative of this.
#[derive(Debug, Clone)]
pub struct SplittingData {
    pub exponents: Vec<i64>,
    pub multiplicities: Vec<usize>,
    pub filtration_frames: Vec<BiPolyMatrix>,
}

impl SplittingData {
    /// Total rank, the sum of multiplicities.
    pub fn rank(&self) -> usize {
        self.multiplicities.iter().sum()
    }

    /// Exponents repeated by multiplicity, descending.
    pub fn flattened_exponents(&self) -> Vec<i64> {
        let mut out = Vec::with_capacity(self.rank());
        for (&e, &m) in self.exponents.iter().zip(&self.multiplicities) {
            out.extend(std::iter::repeat(e).take(m));
        }
        out
    }

    /// Pairs (exponent, multiplicity), descending by exponent.
    pub fn exponent_pairs(&self) -> Vec<(i64, usize)> {
        self.exponents
            .iter()
            .copied()
            .zip(self.multiplicities.iter().copied())
            .collect()
    }

    /// Spread between the largest and smallest exponent. Zero exactly when
    /// the bundle is a twist of a trivial bundle.
    pub fn length(&self) -> i64 {
        match (self.exponents.first(), self.exponents.last()) {
            (Some(&hi), Some(&lo)) => hi - lo,
            _ => 0,
        }
    }
}

fn unity_samples(count: usize, radius: f64) -> Vec<Complex64> {
    (0..count)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
            Complex64::from_polar(radius, theta)
        })
        .collect()
}

/// Builds the interpolation system whose nullspace is the coefficient space
/// of polynomial sections of degree at most m subject to pointwise linear
/// constraints, and returns an orthonormal basis of that nullspace.
///
/// `constraint` maps a sample point to a matrix C(z) with `s(z) in ker C(z)`
/// as the membership condition; `samples` must number at least one more than
/// the degree of the polynomial identities being enforced.
fn constrained_section_basis(
    ambient_dim: usize,
    m: usize,
    samples: &[Complex64],
    constraint: impl Fn(Complex64) -> Result<CMatrix>,
    tol: &ToleranceConfig,
) -> Result<CMatrix> {
    let cols = ambient_dim * (m + 1);
    let mut blocks: Vec<CMatrix> = Vec::with_capacity(samples.len());
    let mut block_rows = 0;
    for &z in samples {
        let c = constraint(z)?;
        if c.ncols() != ambient_dim {
            return Err(Error::ShapeMismatch {
                context: "section constraint block",
                rows: c.nrows(),
                cols: c.ncols(),
            });
        }
        block_rows += c.nrows();
        blocks.push(c);
    }
    let mut a = DMatrix::<Complex64>::zeros(block_rows, cols);
    let mut row0 = 0;
    for (&z, c) in samples.iter().zip(&blocks) {
        let mut zp = ONE_C;
        for p in 0..=m {
            for i in 0..ambient_dim {
                for r in 0..c.nrows() {
                    a[(row0 + r, p * ambient_dim + i)] = c[(r, i)] * zp;
                }
            }
            zp *= z;
        }
        row0 += c.nrows();
    }
    numeric::nullspace(&a, tol.rank_tol)
}

fn coefficient_column(v: &CMatrix, col: usize, ambient_dim: usize, m: usize) -> BiPolyMatrix {
    BiPolyMatrix::from_fn(ambient_dim, 1, |i, _| {
        let coeffs: Vec<Complex64> = (0..=m).map(|p| v[(p * ambient_dim + i, col)]).collect();
        BiPoly::poly_z(&coeffs)
    })
}

/// Polynomial sections of the subbundle with degree at most m, returned as
/// single-column polynomial matrices. The basis is orthonormal in
/// coefficient space.
///
/// Membership is enforced at sample points on a circle; there are enough of
/// them that the polynomial identities behind the constraints cannot vanish
/// at all samples without vanishing identically.
pub fn section_space(
    e: &HolomorphicSubbundle,
    m: usize,
    tol: &ToleranceConfig,
) -> Result<Vec<BiPolyMatrix>> {
    let d = e.ambient_dim;
    let deg_bound = e.rank * e.degree() + m;
    let count = deg_bound + 1;
    let mut last_err: Option<Error> = None;
    for &radius in &SECTION_RADII {
        let samples = unity_samples(count, radius);
        let full_rank = samples
            .iter()
            .all(|&z| numeric::rank(&e.frame.eval(z), tol.rank_tol) == e.rank);
        if !full_rank {
            last_err = Some(Error::RankDeficientSampling {
                context: format!("frame rank drops on the sample circle of radius {radius}"),
            });
            continue;
        }
        let basis = constrained_section_basis(
            d,
            m,
            &samples,
            |z| {
                let p = numeric::span_projector(&e.frame.eval(z), tol.rank_tol)?;
                Ok(CMatrix::identity(d, d) - p)
            },
            tol,
        )?;
        let sections = (0..basis.ncols())
            .map(|j| coefficient_column(&basis, j, d, m))
            .collect();
        return Ok(sections);
    }
    Err(last_err.unwrap_or(Error::RankDeficientSampling {
        context: "no admissible sample circle".to_string(),
    }))
}

/// Dimension of the section space of degree at most m.
pub fn section_dimension(
    e: &HolomorphicSubbundle,
    m: usize,
    tol: &ToleranceConfig,
) -> Result<usize> {
    section_space(e, m, tol).map(|basis| basis.len())
}

/// Shared profile walk: feeds increasing degrees to `dim_at` until the
/// increment saturates the rank, then converts increment jumps into the
/// exponent multiset (largest first).
fn exponents_from_profile(
    r: usize,
    max_m: usize,
    mut dim_at: impl FnMut(usize) -> Result<usize>,
) -> Result<SplittingData> {
    let mut prev_dim = 0usize;
    let mut prev_delta = 0usize;
    let mut counts: Vec<(i64, usize)> = Vec::new();
    for m in 0..=max_m {
        let dim = dim_at(m)?;
        if dim < prev_dim {
            return Err(Error::ProfileInconsistent {
                context: format!("dim V_{m} = {dim} dropped below dim V_{} = {prev_dim}", m - 1),
            });
        }
        let delta = dim - prev_dim;
        if delta < prev_delta {
            return Err(Error::ProfileInconsistent {
                context: format!("section increment fell from {prev_delta} to {delta} at degree {m}"),
            });
        }
        if delta > r {
            return Err(Error::ProfileInconsistent {
                context: format!("section increment {delta} exceeds rank {r} at degree {m}"),
            });
        }
        let new_here = delta - prev_delta;
        if new_here > 0 {
            counts.push((m as i64, new_here));
        }
        prev_dim = dim;
        prev_delta = delta;
        if delta == r {
            counts.reverse();
            let exponents = counts.iter().map(|&(e, _)| e).collect();
            let multiplicities = counts.iter().map(|&(_, b)| b).collect();
            return Ok(SplittingData {
                exponents,
                multiplicities,
                filtration_frames: Vec::new(),
            });
        }
    }
    Err(Error::ProfileInconsistent {
        context: format!("profile did not saturate rank {r} by degree {max_m}"),
    })
}

/// Splitting exponents with multiplicities, recovered from the section
/// dimension profile. The increment of dim V_m at degree m counts the
/// exponents that are at most m, so consecutive differences of the profile
/// give the multiset directly.
pub fn splitting_exponents(
    e: &HolomorphicSubbundle,
    tol: &ToleranceConfig,
) -> Result<SplittingData> {
    exponents_from_profile(e.rank, e.rank * e.degree() + 1, |m| {
        section_dimension(e, m, tol)
    })
}

/// Splitting exponents for a subbundle known only through a pointwise
/// projector, not a holomorphic frame. Sections of degree at most m are the
/// polynomial columns s with (I - P(z)) s(z) = 0 at enough circle samples.
/// `identity_degree` bounds the polynomial degree of the cleared membership
/// identities (a frame presentation would contribute rank times its frame
/// degree); it sets both the sample count and the saturation cap. Sample
/// circles where the projector cannot be evaluated fall through to the next
/// radius.
pub fn projector_splitting_exponents(
    ambient_dim: usize,
    rank: usize,
    identity_degree: usize,
    projector: impl Fn(Complex64) -> Result<CMatrix>,
    tol: &ToleranceConfig,
) -> Result<SplittingData> {
    exponents_from_profile(rank, identity_degree + 1, |m| {
        let count = identity_degree + m + 1;
        let mut last_err: Option<Error> = None;
        for &radius in &SECTION_RADII {
            let samples = unity_samples(count, radius);
            let attempt = constrained_section_basis(
                ambient_dim,
                m,
                &samples,
                |z| {
                    let p = projector(z)?;
                    let c = CMatrix::identity(ambient_dim, ambient_dim) - p;
                    // a full-space projector leaves pure roundoff; snap it
                    // to zero so the nullspace cutoff sees the genuinely
                    // unconstrained system instead of ranking noise
                    if c.norm() <= 1e-12 * ambient_dim as f64 {
                        return Ok(CMatrix::zeros(ambient_dim, ambient_dim));
                    }
                    Ok(c)
                },
                tol,
            );
            match attempt {
                Ok(basis) => return Ok(basis.ncols()),
                Err(e) => last_err = Some(e),
            }
        }
        Err(last_err.unwrap_or(Error::RankDeficientSampling {
            context: "no admissible sample circle for projector sections".to_string(),
        }))
    })
}

/// Reduces a candidate polynomial column against accepted minimal columns by
/// eliminating its leading coefficient vector, lowering its degree until the
/// leading vector is independent of the accepted leading vectors of lower or
/// equal degree. Returns None when the candidate reduces to zero.
fn reduce_column(
    candidate: &BiPolyMatrix,
    accepted: &[(BiPolyMatrix, usize, CMatrix)],
    tol: &ToleranceConfig,
) -> Option<(BiPolyMatrix, usize, CMatrix)> {
    let d = candidate.nrows();
    let mut cur = candidate.prune_shared(1e-12);
    loop {
        let scale = cur.max_coeff_norm();
        if scale < 1e-8 {
            return None;
        }
        let deg = cur.deg_z();
        let lead = CMatrix::from_fn(d, 1, |i, _| cur.entry(i, 0).coeff(deg, 0));
        if lead.norm() <= 1e-7 * scale {
            // The top-degree coefficients are elimination dust; strip them so
            // the recorded column degree reflects a genuine leading vector.
            let strip =
                BiPolyMatrix::from_fn(d, 1, |i, _| BiPoly::monomial(deg, 0, -lead[(i, 0)]));
            cur = cur.add(&strip).prune_shared(1e-12);
            if cur.is_zero() {
                return None;
            }
            continue;
        }
        let usable: Vec<&(BiPolyMatrix, usize, CMatrix)> =
            accepted.iter().filter(|(_, du, _)| *du <= deg).collect();
        if usable.is_empty() {
            return Some((cur, deg, lead));
        }
        let mut basis = CMatrix::zeros(d, usable.len());
        for (j, (_, _, lu)) in usable.iter().enumerate() {
            basis.set_column(j, &lu.column(0));
        }
        let svd = basis.clone().svd(true, true);
        let x = svd.solve(&lead, tol.rank_tol).ok()?;
        let residual = (&basis * &x) - &lead;
        if residual.norm() > 1e-9 * (lead.norm() + 1.0) {
            return Some((cur, deg, lead));
        }
        for (j, (u, du, _)) in usable.iter().enumerate() {
            let shift = BiPoly::monomial(deg - du, 0, -x[(j, 0)]);
            cur = cur.add(&u.scale_poly(&shift));
        }
        cur = cur.prune_shared(1e-12);
        if cur.is_zero() {
            return None;
        }
    }
}

/// Minimal polynomial frame of a bundle presented through a degree-graded
/// family of section bases. Returns the frame with columns in nondecreasing
/// degree order together with the column degrees.
fn minimal_basis(
    ambient_dim: usize,
    target_rank: usize,
    max_m: usize,
    mut sections_at: impl FnMut(usize) -> Result<Vec<BiPolyMatrix>>,
    tol: &ToleranceConfig,
) -> Result<(BiPolyMatrix, Vec<usize>)> {
    let probes: Vec<Complex64> = RANK_PROBES
        .iter()
        .map(|&(re, im)| Complex64::new(re, im))
        .collect();
    let mut accepted: Vec<(BiPolyMatrix, usize, CMatrix)> = Vec::new();
    for m in 0..=max_m {
        if accepted.len() == target_rank {
            break;
        }
        for candidate in sections_at(m)? {
            if accepted.len() == target_rank {
                break;
            }
            let Some((reduced, deg, lead)) = reduce_column(&candidate, &accepted, tol) else {
                continue;
            };
            let adds_rank = probes.iter().any(|&z| {
                let mut probe = CMatrix::zeros(ambient_dim, accepted.len() + 1);
                for (j, (u, _, _)) in accepted.iter().enumerate() {
                    probe.set_column(j, &u.eval(z).column(0));
                }
                probe.set_column(accepted.len(), &reduced.eval(z).column(0));
                numeric::rank(&probe, 1e-8) == accepted.len() + 1
            });
            if !adds_rank {
                continue;
            }
            let mut best = (0usize, 0usize, 0.0f64);
            for i in 0..ambient_dim {
                let e = reduced.entry(i, 0);
                for k in 0..=e.deg_z() {
                    let a = e.coeff(k, 0).norm();
                    if a > best.2 {
                        best = (i, k, a);
                    }
                }
            }
            let pivot = reduced.entry(best.0, 0).coeff(best.1, 0);
            let normalized = reduced.scale(pivot.inv()).prune(1e-12);
            let lead = lead.map(|c| c * pivot.inv());
            accepted.push((normalized, deg, lead));
        }
    }
    if accepted.len() != target_rank {
        return Err(Error::ProfileInconsistent {
            context: format!(
                "minimal frame search found {} of {} columns by degree {}",
                accepted.len(),
                target_rank,
                max_m
            ),
        });
    }
    accepted.sort_by_key(|&(_, deg, _)| deg);
    let degrees: Vec<usize> = accepted.iter().map(|&(_, d, _)| d).collect();
    let cols: Vec<BiPolyMatrix> = accepted.into_iter().map(|(u, _, _)| u).collect();
    let frame = BiPolyMatrix::from_columns(&cols)?;
    Ok((frame, degrees))
}

/// Minimal polynomial frame of the subbundle itself: a holomorphic frame
/// whose column degrees realize the splitting exponents.
pub fn minimal_frame(
    e: &HolomorphicSubbundle,
    tol: &ToleranceConfig,
) -> Result<(BiPolyMatrix, Vec<usize>)> {
    let max_m = e.rank * e.degree() + 1;
    minimal_basis(
        e.ambient_dim,
        e.rank,
        max_m,
        |m| section_space(e, m, tol),
        tol,
    )
}

/// Minimal polynomial frame of the pointwise kernel of F(z)^T for a
/// holomorphic frame F. The conjugate of the result frames the orthogonal
/// complement of the span of F, and its column degrees are the kernel's
/// minimal indices.
pub fn kernel_frame(
    frame: &BiPolyMatrix,
    tol: &ToleranceConfig,
) -> Result<(BiPolyMatrix, Vec<usize>)> {
    if !frame.is_holomorphic() {
        return Err(Error::KmFrameInvalid {
            reason: "kernel frame requested for a non-holomorphic frame".to_string(),
        });
    }
    let d = frame.nrows();
    let r = frame.ncols();
    if r >= d {
        return Err(Error::ShapeMismatch {
            context: "kernel frame of a full-rank square frame",
            rows: d,
            cols: r,
        });
    }
    let ft = frame.transpose();
    let max_m = r * frame.deg_z() + 1;
    minimal_basis(
        d,
        d - r,
        max_m,
        |m| {
            let count = frame.deg_z() + m + 1;
            let mut last_err: Option<Error> = None;
            for &radius in &SECTION_RADII {
                let samples = unity_samples(count, radius);
                let basis =
                    constrained_section_basis(d, m, &samples, |z| Ok(ft.eval(z)), tol)?;
                if basis.ncols() == 0 && m == max_m {
                    last_err = Some(Error::RankDeficientSampling {
                        context: "kernel section system had empty nullspace".to_string(),
                    });
                    continue;
                }
                return Ok((0..basis.ncols())
                    .map(|j| coefficient_column(&basis, j, d, m))
                    .collect());
            }
            Err(last_err.unwrap_or(Error::RankDeficientSampling {
                context: "no admissible sample circle for kernel sections".to_string(),
            }))
        },
        tol,
    )
}

/// Complete splitting data: exponents from the dimension profile plus frames
/// for the canonical filtration. Step i collects the minimal-frame columns
/// whose degree lies in the top i exponent groups, so recomputing exponents
/// of the i-th frame returns exactly those groups. The minimal column
/// degrees are cross-checked against the profile before the frames are
/// assembled.
pub fn hn_filtration(e: &HolomorphicSubbundle, tol: &ToleranceConfig) -> Result<SplittingData> {
    let mut data = splitting_exponents(e, tol)?;
    let (frame, degrees) = minimal_frame(e, tol)?;
    let mut from_degrees: Vec<i64> = degrees.iter().map(|&d| d as i64).collect();
    from_degrees.sort_unstable_by(|a, b| b.cmp(a));
    if from_degrees != data.flattened_exponents() {
        return Err(Error::ProfileInconsistent {
            context: format!(
                "minimal column degrees {:?} disagree with profile exponents {:?}",
                from_degrees,
                data.flattened_exponents()
            ),
        });
    }
    let mut frames = Vec::with_capacity(data.exponents.len());
    let mut cols: Vec<BiPolyMatrix> = Vec::new();
    for &beta in &data.exponents {
        for j in (0..frame.ncols()).rev() {
            if degrees[j] as i64 == beta {
                cols.push(frame.column(j));
            }
        }
        frames.push(BiPolyMatrix::from_columns(&cols)?);
    }
    data.filtration_frames = frames;
    Ok(data)
}

/// Frames for the successive orthogonal complements of the filtration steps:
/// piece i spans step i minus step i-1 pointwise. The first piece is the
/// first step itself; later pieces are polynomial complements inside the
/// next step and are no longer holomorphic in general.
pub fn complement_frames(data: &SplittingData, tol: &ToleranceConfig) -> Result<Vec<BiPolyMatrix>> {
    if data.filtration_frames.is_empty() {
        return Err(Error::ProfileInconsistent {
            context: "filtration frames not computed".to_string(),
        });
    }
    let mut out = Vec::with_capacity(data.filtration_frames.len());
    out.push(data.filtration_frames[0].clone());
    for i in 1..data.filtration_frames.len() {
        let prev = &data.filtration_frames[i - 1];
        let cur = &data.filtration_frames[i];
        let mut cols = Vec::new();
        for j in 0..cur.ncols() {
            let col = cur.column(j);
            let cleared = crate::bipoly::cleared_complement(prev, &col).prune(tol.prune_tol);
            if !cleared.is_zero() {
                cols.push(cleared);
            }
        }
        if cols.is_empty() {
            return Err(Error::ProfileInconsistent {
                context: format!("filtration step {i} has empty complement"),
            });
        }
        out.push(BiPolyMatrix::from_columns(&cols)?);
    }
    Ok(out)
}

/// Reparameterizes a holomorphic frame by a fractional linear substitution
/// z -> (a z + b) / (c z + d), clearing denominators per column. The result
/// frames the pulled-back bundle, so splitting exponents are unchanged.
pub fn mobius_reparam(
    frame: &BiPolyMatrix,
    a: Complex64,
    b: Complex64,
    c: Complex64,
    d: Complex64,
) -> Result<BiPolyMatrix> {
    let det = a * d - b * c;
    if det.norm() < 1e-12 {
        return Err(Error::Singular {
            context: "fractional linear substitution",
            margin: det.norm(),
        });
    }
    if !frame.is_holomorphic() {
        return Err(Error::KmFrameInvalid {
            reason: "reparameterization requires a holomorphic frame".to_string(),
        });
    }
    let num = BiPoly::from_terms(&[(1, 0, a), (0, 0, b)]);
    let den = BiPoly::from_terms(&[(1, 0, c), (0, 0, d)]);
    let mut out = BiPolyMatrix::zeros(frame.nrows(), frame.ncols());
    for j in 0..frame.ncols() {
        let col = frame.column(j);
        let deg = col.deg_z();
        let mut num_pow = vec![BiPoly::one()];
        let mut den_pow = vec![BiPoly::one()];
        for k in 0..deg {
            num_pow.push(num_pow[k].mul(&num));
            den_pow.push(den_pow[k].mul(&den));
        }
        for i in 0..frame.nrows() {
            let e = col.entry(i, 0);
            let mut acc = BiPoly::zero();
            for k in 0..=e.deg_z() {
                let ck = e.coeff(k, 0);
                if ck.norm() == 0.0 {
                    continue;
                }
                acc = acc.add(&num_pow[k].mul(&den_pow[deg - k]).scale(ck));
            }
            *out.entry_mut(i, j) = acc.prune(0.0);
        }
    }
    Ok(out)
}

/// A matrix of Laurent polynomials in z, stored with the second variable of
/// the underlying grid interpreted as 1/z.
#[derive(Debug, Clone)]
pub struct LaurentMatrix {
    inner: BiPolyMatrix,
}

impl LaurentMatrix {
    /// Wraps a coefficient grid whose (k, l) term means z^k z^{-l}.
    pub fn new(inner: BiPolyMatrix) -> Self {
        Self { inner }
    }

    /// A plain polynomial matrix viewed as a Laurent matrix.
    pub fn from_poly(m: &BiPolyMatrix) -> Result<Self> {
        if !m.is_holomorphic() {
            return Err(Error::KmFrameInvalid {
                reason: "Laurent promotion expects a z-polynomial matrix".to_string(),
            });
        }
        Ok(Self { inner: m.clone() })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            inner: BiPolyMatrix::identity(n),
        }
    }

    /// diag(z^{k_1}, ..., z^{k_n}) for signed powers.
    pub fn diag_powers(kappas: &[i64]) -> Self {
        let n = kappas.len();
        let inner = BiPolyMatrix::from_fn(n, n, |i, j| {
            if i != j {
                BiPoly::zero()
            } else if kappas[i] >= 0 {
                BiPoly::monomial(kappas[i] as usize, 0, ONE_C)
            } else {
                BiPoly::monomial(0, (-kappas[i]) as usize, ONE_C)
            }
        });
        Self { inner }
    }

    pub fn nrows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn inner(&self) -> &BiPolyMatrix {
        &self.inner
    }

    /// Largest positive power of z that can appear.
    pub fn pos_degree(&self) -> usize {
        self.inner.deg_z()
    }

    /// Largest power of 1/z that can appear.
    pub fn neg_degree(&self) -> usize {
        self.inner.deg_zbar()
    }

    /// Evaluation away from z = 0.
    pub fn eval(&self, z: Complex64) -> CMatrix {
        self.inner.eval_at(z, z.inv())
    }
}

/// Result of factoring a transition function f on the equatorial annulus as
/// f = f_zero * diag(z^kappa) * f_infinity, with f_zero polynomial in z and
/// f_infinity polynomial in w = 1/z.
#[derive(Debug, Clone)]
pub struct BirkhoffFactorization {
    pub f_zero: BiPolyMatrix,
    pub kappas: Vec<i64>,
    /// Stored as a polynomial matrix in w = 1/z.
    pub f_infinity: BiPolyMatrix,
    /// Largest deviation of the reassembled product from f at the annulus
    /// sample points.
    pub residual: f64,
    /// Smallest relative singular value of f_zero over the inner sample set.
    pub f_zero_margin: f64,
    /// Smallest relative singular value of f_infinity over the outer sample
    /// set.
    pub f_infinity_margin: f64,
}

impl BirkhoffFactorization {
    /// The diagonal middle factor.
    pub fn diagonal(&self) -> LaurentMatrix {
        LaurentMatrix::diag_powers(&self.kappas)
    }

    /// Evaluates the reassembled product at a point of the annulus.
    pub fn eval_product(&self, z: Complex64) -> CMatrix {
        let d = self.diagonal().eval(z);
        self.f_zero.eval(z) * d * self.f_infinity.eval(z.inv())
    }
}

const DFT_SIZE: usize = 256;

/// Laurent coefficients of f^{-1} on the unit circle, index m means the
/// coefficient of z^m, for |m| < DFT_SIZE / 2.
struct InverseSpectrum {
    coeffs: Vec<CMatrix>,
    half: i64,
    dim: usize,
    scale: f64,
}

impl InverseSpectrum {
    fn build(f: &LaurentMatrix, tol: &ToleranceConfig) -> Result<Self> {
        let n = DFT_SIZE;
        let dim = f.nrows();
        let mut inverses = Vec::with_capacity(n);
        for j in 0..n {
            let z = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / n as f64);
            let fz = f.eval(z);
            let sv = numeric::singular_values(&fz);
            let margin = sv.last().copied().unwrap_or(0.0) / sv.first().copied().unwrap_or(1.0);
            if margin < tol.rank_tol {
                return Err(Error::Singular {
                    context: "transition function on the unit circle",
                    margin,
                });
            }
            let inv = fz.try_inverse().ok_or(Error::Singular {
                context: "transition function on the unit circle",
                margin,
            })?;
            inverses.push(inv);
        }
        let half = (n / 2) as i64;
        let mut coeffs = Vec::with_capacity(n);
        for mi in 0..n {
            let m = if (mi as i64) < half {
                mi as i64
            } else {
                mi as i64 - n as i64
            };
            let mut acc = CMatrix::zeros(dim, dim);
            for (j, inv) in inverses.iter().enumerate() {
                let phase = Complex64::from_polar(
                    1.0,
                    -2.0 * std::f64::consts::PI * (m * j as i64) as f64 / n as f64,
                );
                acc += inv * (phase / n as f64);
            }
            coeffs.push(acc);
        }
        let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        Ok(Self {
            coeffs,
            half,
            dim,
            scale,
        })
    }

    fn coeff(&self, m: i64) -> CMatrix {
        if m >= self.half || m < -self.half {
            return CMatrix::zeros(self.dim, self.dim);
        }
        let idx = if m >= 0 {
            m as usize
        } else {
            (m + 2 * self.half) as usize
        };
        self.coeffs[idx].clone()
    }
}

/// Coefficient of z^k in f^{-1} s for a polynomial column s given by stacked
/// coefficients x with x_p in C^dim.
fn spectrum_apply(spec: &InverseSpectrum, x: &CMatrix, cap: usize, k: i64) -> CMatrix {
    let dim = spec.dim;
    let mut acc = CMatrix::zeros(dim, 1);
    for p in 0..=cap {
        let block = spec.coeff(k - p as i64);
        let xp = x.rows(p * dim, dim);
        acc += block * xp;
    }
    acc
}

/// Orthonormal coefficient basis of the space of polynomial columns s with
/// every power of z in f^{-1} s at most t. The degree of s is capped by the
/// positive degree of f plus t, which every such section satisfies.
fn glued_section_basis(
    spec: &InverseSpectrum,
    f: &LaurentMatrix,
    t: i64,
    tol: &ToleranceConfig,
) -> Result<Option<(CMatrix, usize)>> {
    let cap_i = f.pos_degree() as i64 + t;
    if cap_i < 0 {
        return Ok(None);
    }
    let cap = cap_i as usize;
    let dim = spec.dim;
    let k_hi = (cap as i64 + (f.pos_degree() + f.neg_degree()) as i64 + 16).min(spec.half - 1);
    if t + 1 > k_hi {
        return Err(Error::ProfileInconsistent {
            context: format!("no constraint frequencies available at level {t}"),
        });
    }
    let k_count = (k_hi - t) as usize;
    let mut a = CMatrix::zeros(k_count * dim, dim * (cap + 1));
    for (ki, k) in (t + 1..=k_hi).enumerate() {
        for p in 0..=cap {
            let block = spec.coeff(k - p as i64);
            for rr in 0..dim {
                for cc in 0..dim {
                    a[(ki * dim + rr, p * dim + cc)] = block[(rr, cc)];
                }
            }
        }
    }
    // The cutoff is anchored to the spectrum scale: a constraint matrix made
    // entirely of roundoff relative to that scale must rank as zero.
    let basis = numeric::nullspace_abs(&a, tol.rank_tol * spec.scale)?;
    Ok(Some((basis, cap)))
}

/// Factors an invertible transition function on the equatorial annulus into
/// a z-polynomial factor, a diagonal of integer powers of z, and a factor
/// polynomial in 1/z. The powers are recovered from the dimension profile of
/// the glued section spaces; the outer factors come from a section basis
/// adapted to the power levels. Fails honestly when the section data cannot
/// be completed or the factors lose invertibility on their half of the
/// sphere.
pub fn birkhoff_factorize(
    f: &LaurentMatrix,
    tol: &ToleranceConfig,
) -> Result<BirkhoffFactorization> {
    if f.nrows() != f.ncols() || f.nrows() == 0 {
        return Err(Error::ShapeMismatch {
            context: "transition function must be square",
            rows: f.nrows(),
            cols: f.ncols(),
        });
    }
    let dim = f.nrows();
    let spec = InverseSpectrum::build(f, tol)?;
    let span = (f.pos_degree() + f.neg_degree()) as i64 + 2;

    let dim_at = |t: i64| -> Result<usize> {
        Ok(glued_section_basis(&spec, f, t, tol)?
            .map(|(b, _)| b.ncols())
            .unwrap_or(0))
    };

    let t_lo = -span;
    if dim_at(t_lo)? != 0 {
        return Err(Error::ProfileInconsistent {
            context: format!("glued sections already present at level {t_lo}"),
        });
    }
    let mut kappas: Vec<i64> = Vec::new();
    let mut prev_dim = 0usize;
    let mut prev_delta = 0usize;
    let mut t = t_lo;
    loop {
        t += 1;
        if t > span {
            return Err(Error::ProfileInconsistent {
                context: format!("power profile did not saturate rank {dim} by level {span}"),
            });
        }
        let dim_t = dim_at(t)?;
        if dim_t < prev_dim {
            return Err(Error::ProfileInconsistent {
                context: format!("glued section dimension dropped at level {t}"),
            });
        }
        let delta = dim_t - prev_dim;
        if delta < prev_delta || delta > dim {
            return Err(Error::ProfileInconsistent {
                context: format!("glued section increment non-monotone at level {t}"),
            });
        }
        for _ in 0..delta - prev_delta {
            kappas.push(-t);
        }
        prev_dim = dim_t;
        prev_delta = delta;
        if delta == dim {
            break;
        }
    }

    // Greedy, level by level from the largest power down: pick sections whose
    // leading Laurent coefficient opens a new direction at infinity.
    let mut columns: Vec<(BiPolyMatrix, i64)> = Vec::new();
    let mut h = CMatrix::zeros(dim, 0);
    for &kappa in &kappas {
        let t_level = -kappa;
        let Some((basis, cap)) = glued_section_basis(&spec, f, t_level, tol)? else {
            return Err(Error::ReconstructionFailed {
                context: format!("no sections available at power level {kappa}"),
                error: 0.0,
            });
        };
        let owned_column = |j: usize| CMatrix::from_fn(basis.nrows(), 1, |r, _| basis[(r, j)]);
        let mut best: Option<(usize, f64, CMatrix)> = None;
        for j in 0..basis.ncols() {
            let x = owned_column(j);
            let lead = spectrum_apply(&spec, &x, cap, -kappa);
            let mut residual = lead.clone();
            if h.ncols() > 0 {
                residual -= &h * (h.adjoint() * &lead);
            }
            let score = residual.norm();
            if best.as_ref().map_or(true, |&(_, s, _)| score > s) {
                best = Some((j, score, lead));
            }
        }
        let Some((j, score, lead)) = best else {
            return Err(Error::ReconstructionFailed {
                context: format!("empty section basis at power level {kappa}"),
                error: 0.0,
            });
        };
        if score < 1e-8 {
            return Err(Error::ReconstructionFailed {
                context: format!("sections at power level {kappa} add no direction at infinity"),
                error: score,
            });
        }
        let x = owned_column(j);
        let col = coefficient_column(&x, 0, dim, cap).prune(1e-13);
        columns.push((col, kappa));
        let mut grown = CMatrix::zeros(dim, h.ncols() + 1);
        for c in 0..h.ncols() {
            grown.set_column(c, &h.column(c));
        }
        let mut residual = lead.clone();
        if h.ncols() > 0 {
            residual -= &h * (h.adjoint() * &lead);
        }
        let nrm = residual.norm();
        grown.set_column(h.ncols(), &(residual / Complex64::new(nrm, 0.0)).column(0));
        h = grown;
    }

    let f_zero = BiPolyMatrix::from_columns(
        &columns.iter().map(|(c, _)| c.clone()).collect::<Vec<_>>(),
    )?;

    // The factor at infinity is the inverse of V(w) whose columns are the
    // leading-normalized sections seen from the other chart. V is sampled
    // exactly on the unit circle and inverted pointwise; its inverse must be
    // a power series in w for the factorization to be valid, so the negative
    // frequencies of the sampled inverse are required to vanish.
    let n = DFT_SIZE;
    let mut v_inv_samples = Vec::with_capacity(n);
    for s in 0..n {
        let w = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * s as f64 / n as f64);
        let z = w.inv();
        let f_inv = f
            .eval(z)
            .try_inverse()
            .ok_or(Error::Singular {
                context: "transition function on the unit circle",
                margin: 0.0,
            })?;
        let mut v = CMatrix::zeros(dim, dim);
        for (jc, (col, kappa)) in columns.iter().enumerate() {
            let u = col.eval(z).column(0).into_owned();
            let scaled = (&f_inv * u) * w.powi(-(*kappa as i32));
            v.set_column(jc, &scaled.column(0));
        }
        let sv = numeric::singular_values(&v);
        let margin = sv.last().copied().unwrap_or(0.0) / sv.first().copied().unwrap_or(1.0);
        if margin < tol.rank_tol {
            return Err(Error::ReconstructionFailed {
                context: "section matrix singular on the unit circle".to_string(),
                error: margin,
            });
        }
        v_inv_samples.push(v.try_inverse().ok_or(Error::ReconstructionFailed {
            context: "section matrix singular on the unit circle".to_string(),
            error: margin,
        })?);
    }
    let keep = n * 5 / 8;
    let mut w_coeffs: Vec<CMatrix> = Vec::with_capacity(keep);
    let mut tail = 0.0f64;
    let scale = v_inv_samples.iter().map(|m| m.norm()).fold(0.0, f64::max);
    for mi in 0..n {
        let mut acc = CMatrix::zeros(dim, dim);
        for (j, g) in v_inv_samples.iter().enumerate() {
            let phase = Complex64::from_polar(
                1.0,
                -2.0 * std::f64::consts::PI * ((mi * j) % n) as f64 / n as f64,
            );
            acc += g * (phase / n as f64);
        }
        if mi < keep {
            w_coeffs.push(acc);
        } else {
            tail = tail.max(acc.norm());
        }
    }
    if tail > 1e-7 * scale.max(1.0) {
        return Err(Error::ReconstructionFailed {
            context: "factor at infinity is not a power series in 1/z".to_string(),
            error: tail,
        });
    }
    let f_infinity = BiPolyMatrix::from_fn(dim, dim, |i, j| {
        let coeffs: Vec<Complex64> = w_coeffs.iter().map(|c| c[(i, j)]).collect();
        BiPoly::poly_z(&coeffs)
    })
    .prune(1e-13);

    // Invertibility margins and the reassembly residual over the annulus.
    let diag = LaurentMatrix::diag_powers(&kappas);
    let mut residual = 0.0f64;
    let mut f_zero_margin = f64::INFINITY;
    let mut f_infinity_margin = f64::INFINITY;
    let rel_margin = |m: &CMatrix| {
        let sv = numeric::singular_values(m);
        sv.last().copied().unwrap_or(0.0) / sv.first().copied().unwrap_or(1.0).max(1e-300)
    };
    for &radius in &[0.0f64, 0.25, 0.5, 1.0, 2.0] {
        for a in 0..8 {
            let theta = 2.0 * std::f64::consts::PI * (a as f64 + 0.5) / 8.0;
            let z = Complex64::from_polar(radius.max(1e-12), theta);
            f_zero_margin = f_zero_margin.min(rel_margin(&f_zero.eval(z)));
            if radius == 0.0 {
                break;
            }
        }
    }
    for &radius in &[0.5, 1.0, 2.0, 4.0, f64::INFINITY] {
        for a in 0..8 {
            let theta = 2.0 * std::f64::consts::PI * (a as f64 + 0.5) / 8.0;
            let w = if radius.is_infinite() {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::from_polar(1.0 / radius, theta)
            };
            f_infinity_margin = f_infinity_margin.min(rel_margin(&f_infinity.eval(w)));
            if radius.is_infinite() {
                break;
            }
        }
    }
    for r_idx in 0..8 {
        let radius = 0.5 * (4.0f64).powf(r_idx as f64 / 7.0);
        for a in 0..8 {
            let theta = 2.0 * std::f64::consts::PI * (a as f64 + 0.37) / 8.0;
            let z = Complex64::from_polar(radius, theta);
            let product = f_zero.eval(z) * diag.eval(z) * f_infinity.eval(z.inv());
            residual = residual.max((f.eval(z) - product).norm());
        }
    }
    if f_zero_margin < tol.rank_tol || f_infinity_margin < tol.rank_tol {
        return Err(Error::ReconstructionFailed {
            context: "factor lost invertibility on its half of the sphere".to_string(),
            error: f_zero_margin.min(f_infinity_margin),
        });
    }

    Ok(BirkhoffFactorization {
        f_zero,
        kappas,
        f_infinity,
        residual,
        f_zero_margin,
        f_infinity_margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn bundle_from_cols(cols: &[&[&[Complex64]]]) -> HolomorphicSubbundle {
        let mats: Vec<BiPolyMatrix> = cols.iter().map(|c| BiPolyMatrix::column_z(c)).collect();
        let frame = BiPolyMatrix::from_columns(&mats).unwrap();
        HolomorphicSubbundle::new(frame, &tol()).unwrap()
    }

    fn constant_section() -> HolomorphicSubbundle {
        bundle_from_cols(&[&[&[ONE_C], &[]]])
    }

    fn tautological() -> HolomorphicSubbundle {
        bundle_from_cols(&[&[&[ONE_C], &[Complex64::new(0.0, 0.0), ONE_C]]])
    }

    fn mixed_rank_two() -> HolomorphicSubbundle {
        let zero = Complex64::new(0.0, 0.0);
        bundle_from_cols(&[
            &[&[ONE_C], &[zero, ONE_C], &[zero, zero, ONE_C]],
            &[&[zero], &[ONE_C], &[zero]],
        ])
    }

    #[test]
    fn section_dimensions_match_hand_enumeration() {
        let t = tol();
        assert_eq!(section_dimension(&constant_section(), 2, &t).unwrap(), 3);
        assert_eq!(section_dimension(&tautological(), 2, &t).unwrap(), 2);
        let zero = Complex64::new(0.0, 0.0);
        let shifted = bundle_from_cols(&[
            &[&[ONE_C], &[zero, ONE_C], &[zero]],
            &[&[zero], &[ONE_C], &[zero, ONE_C]],
        ]);
        assert_eq!(section_dimension(&shifted, 1, &t).unwrap(), 2);
    }

    #[test]
    fn sections_lie_in_the_bundle() {
        let t = tol();
        let e = mixed_rank_two();
        for s in section_space(&e, 2, &t).unwrap() {
            for &(re, im) in &[(0.3, 0.4), (-1.1, 0.2)] {
                let z = c(re, im);
                let sval = s.eval(z);
                let p = numeric::span_projector(&e.frame().eval(z), t.rank_tol).unwrap();
                let out = &sval - &p * &sval;
                assert!(out.norm() < 1e-10);
            }
        }
    }

    #[test]
    fn exponents_of_catalog_bundles() {
        let t = tol();
        let data = splitting_exponents(&constant_section(), &t).unwrap();
        assert_eq!(data.exponent_pairs(), vec![(0, 1)]);
        let data = splitting_exponents(&tautological(), &t).unwrap();
        assert_eq!(data.exponent_pairs(), vec![(1, 1)]);
        let data = splitting_exponents(&mixed_rank_two(), &t).unwrap();
        assert_eq!(data.exponent_pairs(), vec![(2, 1), (0, 1)]);
        assert_eq!(data.length(), 2);
        assert_eq!(data.flattened_exponents(), vec![2, 0]);
    }

    #[test]
    fn hidden_low_degree_sections_collapse_the_profile() {
        // span{(1,z,z^2),(0,0,1)} contains (1,z,0), the first column minus
        // z^2 times the second, which is a degree-one section; the exponents
        // are therefore (1,0) rather than the (2,0) the frame suggests.
        let t = tol();
        let zero = Complex64::new(0.0, 0.0);
        let e = bundle_from_cols(&[
            &[&[ONE_C], &[zero, ONE_C], &[zero, zero, ONE_C]],
            &[&[zero], &[zero], &[ONE_C]],
        ]);
        let data = splitting_exponents(&e, &t).unwrap();
        assert_eq!(data.exponent_pairs(), vec![(1, 1), (0, 1)]);
    }

    #[test]
    fn filtration_of_mixed_bundle_puts_the_degree_two_line_first() {
        let t = tol();
        let e = mixed_rank_two();
        let data = hn_filtration(&e, &t).unwrap();
        assert_eq!(data.filtration_frames.len(), 2);
        assert_eq!(data.exponent_pairs(), vec![(2, 1), (0, 1)]);
        let b1 = &data.filtration_frames[0];
        assert_eq!(b1.ncols(), 1);
        // The first step is a line bundle of exponent 2 inside the mixed
        // bundle. Its frame is not unique (adding any section of lower
        // exponent preserves both properties), so check containment and the
        // recomputed exponent rather than one particular representative.
        for &(re, im) in &[(0.2, 0.7), (-0.5, 0.1)] {
            let z = c(re, im);
            let pe = numeric::span_projector(&e.frame().eval(z), t.rank_tol).unwrap();
            let col = b1.eval(z);
            let out = &col - &pe * &col;
            assert!(out.norm() < 1e-9 * col.norm());
        }
        let sub = HolomorphicSubbundle::new(b1.clone(), &t).unwrap();
        let inner = splitting_exponents(&sub, &t).unwrap();
        assert_eq!(inner.exponent_pairs(), vec![(2, 1)]);
        let full = HolomorphicSubbundle::new(data.filtration_frames[1].clone(), &t).unwrap();
        let outer = splitting_exponents(&full, &t).unwrap();
        assert_eq!(outer.exponent_pairs(), vec![(2, 1), (0, 1)]);
    }

    #[test]
    fn trivial_bundle_has_single_step() {
        let t = tol();
        let e = HolomorphicSubbundle::new(BiPolyMatrix::identity(2), &t).unwrap();
        let data = hn_filtration(&e, &t).unwrap();
        assert_eq!(data.exponent_pairs(), vec![(0, 2)]);
        assert_eq!(data.filtration_frames.len(), 1);
        assert_eq!(data.length(), 0);
    }

    #[test]
    fn complement_frames_split_the_filtration() {
        let t = tol();
        let data = hn_filtration(&mixed_rank_two(), &t).unwrap();
        let pieces = complement_frames(&data, &t).unwrap();
        assert_eq!(pieces.len(), 2);
        let z = c(0.31, -0.44);
        let a = pieces[0].eval(z);
        let b = pieces[1].eval(z);
        let overlap = a.adjoint() * &b;
        assert!(overlap.norm() < 1e-9 * a.norm() * b.norm());
    }

    #[test]
    fn exponents_survive_basis_change_and_reparameterization() {
        let t = tol();
        let e = mixed_rank_two();
        // Right-multiply by a unimodular polynomial matrix.
        let mut u = BiPolyMatrix::identity(2);
        *u.entry_mut(1, 0) = BiPoly::from_terms(&[(0, 0, ONE_C), (1, 0, c(2.0, 0.0))]);
        let changed = HolomorphicSubbundle::new(e.frame().matmul(&u), &t).unwrap();
        assert_eq!(
            splitting_exponents(&changed, &t).unwrap().exponent_pairs(),
            vec![(2, 1), (0, 1)]
        );
        // Constant unitary rotation of the ambient space.
        let s = 0.6f64;
        let co = (1.0 - s * s).sqrt();
        let rot = BiPolyMatrix::from_fn(3, 3, |i, j| match (i, j) {
            (0, 0) => BiPoly::constant(c(co, 0.0)),
            (0, 2) => BiPoly::constant(c(s, 0.0)),
            (2, 0) => BiPoly::constant(c(-s, 0.0)),
            (2, 2) => BiPoly::constant(c(co, 0.0)),
            (1, 1) => BiPoly::one(),
            _ => BiPoly::zero(),
        });
        let rotated = HolomorphicSubbundle::new(rot.matmul(e.frame()), &t).unwrap();
        assert_eq!(
            splitting_exponents(&rotated, &t).unwrap().exponent_pairs(),
            vec![(2, 1), (0, 1)]
        );
        // Fractional linear reparameterization.
        let moved = mobius_reparam(e.frame(), c(2.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(3.0, 0.0))
            .unwrap();
        let moved = HolomorphicSubbundle::new(moved, &t).unwrap();
        assert_eq!(
            splitting_exponents(&moved, &t).unwrap().exponent_pairs(),
            vec![(2, 1), (0, 1)]
        );
    }

    #[test]
    fn minimal_degrees_sum_like_forney_indices() {
        let t = tol();
        let (_, degrees) = minimal_frame(&mixed_rank_two(), &t).unwrap();
        assert_eq!(degrees.iter().sum::<usize>(), 2);
        let (_, degrees) = minimal_frame(&tautological(), &t).unwrap();
        assert_eq!(degrees, vec![1]);
    }

    #[test]
    fn kernel_frame_of_tautological_line() {
        let t = tol();
        let frame = BiPolyMatrix::column_z(&[&[ONE_C], &[Complex64::new(0.0, 0.0), ONE_C]]);
        let (k, degrees) = kernel_frame(&frame, &t).unwrap();
        assert_eq!(degrees, vec![1]);
        for &(re, im) in &[(0.4, 0.3), (-0.8, 0.9)] {
            let z = c(re, im);
            let prod = frame.transpose().eval(z) * k.eval(z);
            assert!(prod.norm() < 1e-10);
        }
    }

    #[test]
    fn kernel_frame_of_plane_curve_row() {
        let t = tol();
        let zero = Complex64::new(0.0, 0.0);
        let frame = BiPolyMatrix::column_z(&[&[ONE_C], &[zero, ONE_C], &[zero, zero, ONE_C]]);
        let (k, degrees) = kernel_frame(&frame, &t).unwrap();
        assert_eq!(k.ncols(), 2);
        assert_eq!(degrees.iter().sum::<usize>(), 2);
        let z = c(0.7, -0.2);
        let prod = frame.transpose().eval(z) * k.eval(z);
        assert!(prod.norm() < 1e-10);
        assert_eq!(numeric::rank(&k.eval(z), t.rank_tol), 2);
    }

    #[test]
    fn factorization_of_identity_is_trivial() {
        let t = tol();
        let f = LaurentMatrix::identity(2);
        let fac = birkhoff_factorize(&f, &t).unwrap();
        assert_eq!(fac.kappas, vec![0, 0]);
        assert!(fac.residual < 1e-10);
        let z = c(0.9, 0.4);
        assert!((fac.f_zero.eval(z) - CMatrix::identity(2, 2)).norm() < 1e-9);
        assert!((fac.f_infinity.eval(z.inv()) - CMatrix::identity(2, 2)).norm() < 1e-9);
    }

    #[test]
    fn factorization_of_diagonal_power() {
        let t = tol();
        let inner = BiPolyMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => BiPoly::monomial(1, 0, ONE_C),
            (1, 1) => BiPoly::one(),
            _ => BiPoly::zero(),
        });
        let fac = birkhoff_factorize(&LaurentMatrix::new(inner), &t).unwrap();
        assert_eq!(fac.kappas, vec![1, 0]);
        assert!(fac.residual < 1e-9, "residual {}", fac.residual);
        assert!(fac.f_zero_margin > 1e-6);
        assert!(fac.f_infinity_margin > 1e-6);
    }

    #[test]
    fn factorization_of_unipotent_mix() {
        let t = tol();
        let inner = BiPolyMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => BiPoly::monomial(1, 0, ONE_C),
            (0, 1) => BiPoly::one(),
            (1, 1) => BiPoly::one(),
            _ => BiPoly::zero(),
        });
        let fac = birkhoff_factorize(&LaurentMatrix::new(inner), &t).unwrap();
        assert_eq!(fac.kappas, vec![1, 0]);
        assert!(fac.residual < 1e-9, "residual {}", fac.residual);
    }

    #[test]
    fn factorization_of_lower_triangular_square() {
        let t = tol();
        let inner = BiPolyMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => BiPoly::monomial(2, 0, ONE_C),
            (1, 0) => BiPoly::monomial(1, 0, ONE_C),
            (1, 1) => BiPoly::one(),
            _ => BiPoly::zero(),
        });
        let fac = birkhoff_factorize(&LaurentMatrix::new(inner), &t).unwrap();
        assert_eq!(fac.kappas, vec![1, 1]);
        assert!(fac.residual < 1e-9, "residual {}", fac.residual);
    }

    #[test]
    fn factorization_matches_negated_exponent_of_tautological_transition() {
        let t = tol();
        // The line spanned by (1, z) has exponent 1 and transition z^{-1}
        // from the chart-zero frame to the chart-infinity frame.
        let inner = BiPolyMatrix::from_fn(1, 1, |_, _| BiPoly::monomial(0, 1, ONE_C));
        let fac = birkhoff_factorize(&LaurentMatrix::new(inner), &t).unwrap();
        let data = splitting_exponents(&tautological(), &t).unwrap();
        assert_eq!(fac.kappas, vec![-data.exponents[0]]);
    }

    #[test]
    fn factorization_residual_matches_direct_product() {
        let t = tol();
        let inner = BiPolyMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => BiPoly::monomial(2, 0, ONE_C),
            (1, 0) => BiPoly::monomial(1, 0, ONE_C),
            (1, 1) => BiPoly::one(),
            _ => BiPoly::zero(),
        });
        let f = LaurentMatrix::new(inner);
        let fac = birkhoff_factorize(&f, &t).unwrap();
        for &(re, im) in &[(1.3, 0.2), (0.4, -0.5), (-1.7, 0.6)] {
            let z = c(re, im);
            assert!((fac.eval_product(z) - f.eval(z)).norm() < 1e-8);
        }
    }
}
