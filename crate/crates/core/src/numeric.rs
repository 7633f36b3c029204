//! Dense complex linear algebra helpers.
//!
//! Everything here is a thin layer over `nalgebra`'s complex SVD: rank
//! decisions, orthonormal column bases, orthogonal projectors and nullspaces,
//! all driven by a relative singular-value cutoff.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = nalgebra::DVector<Complex64>;

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|c| c.re.is_finite() && c.im.is_finite())
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn check_finite(m: &CMatrix) -> Result<()> {
    if is_finite(m) {
        Ok(())
    } else {
        Err(Error::NonFiniteMatrix)
    }
}

/// Singular values of `m`, descending.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let sv = m.clone().singular_values();
    let mut v: Vec<f64> = sv.iter().copied().collect();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    v
}

/// Numerical rank with cutoff `rank_tol * sigma_max`.
pub fn rank(m: &CMatrix, rank_tol: f64) -> usize {
    let sv = singular_values(m);
    let smax = sv.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rank_tol * smax).count()
}

/// Orthonormal basis of the column span, with the span's dimension decided by
/// `rank_tol`. Returns a matrix whose columns are orthonormal.
pub fn orthonormal_columns(m: &CMatrix, rank_tol: f64) -> Result<CMatrix> {
    check_finite(m)?;
    let svd = m.clone().svd(true, false);
    let u = svd.u.as_ref().expect("svd with u");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return Ok(CMatrix::zeros(m.nrows(), 0));
    }
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > rank_tol * smax)
        .collect();
    let mut out = CMatrix::zeros(m.nrows(), keep.len());
    for (k, &i) in keep.iter().enumerate() {
        out.set_column(k, &u.column(i));
    }
    Ok(out)
}

/// Orthonormal basis of the column span, failing unless the numerical rank
/// equals the column count.
pub fn orthonormal_frame(m: &CMatrix, rank_tol: f64) -> Result<CMatrix> {
    let q = orthonormal_columns(m, rank_tol)?;
    if q.ncols() != m.ncols() {
        return Err(Error::RankDeficient {
            expected: m.ncols(),
            found: q.ncols(),
        });
    }
    Ok(q)
}

/// Orthogonal projector onto the column span of `frame`. The frame must have
/// full column rank at the given tolerance.
pub fn orthonormal_projector(frame: &CMatrix, rank_tol: f64) -> Result<CMatrix> {
    let q = orthonormal_frame(frame, rank_tol)?;
    Ok(&q * q.adjoint())
}

/// Orthogonal projector onto the span, tolerating rank-deficient frames (the
/// span is whatever the columns actually generate).
pub fn span_projector(frame: &CMatrix, rank_tol: f64) -> Result<CMatrix> {
    let q = orthonormal_columns(frame, rank_tol)?;
    Ok(&q * q.adjoint())
}

/// Orthonormal basis of the (right) nullspace of `m`.
pub fn nullspace(m: &CMatrix, rank_tol: f64) -> Result<CMatrix> {
    check_finite(m)?;
    let smax = m.norm();
    nullspace_abs(m, rank_tol * smax)
}

/// Nullspace with an absolute singular-value cutoff. Use this when the
/// matrix may consist entirely of roundoff noise relative to an external
/// scale; the relative variant would rank such noise fully.
pub fn nullspace_abs(m: &CMatrix, cutoff: f64) -> Result<CMatrix> {
    check_finite(m)?;
    let n = m.ncols();
    // Pad with zero rows so the thin SVD still exposes all right singular
    // vectors when the system is wide.
    let work = if m.nrows() < n {
        let mut w = CMatrix::zeros(n, n);
        w.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
        w
    } else {
        m.clone()
    };
    let svd = work.clone().svd(false, true);
    let vt = svd.v_t.as_ref().expect("svd with v_t");
    let mut cols: Vec<usize> = Vec::new();
    for i in 0..svd.singular_values.len() {
        if svd.singular_values[i] <= cutoff {
            cols.push(i);
        }
    }
    let mut out = CMatrix::zeros(n, cols.len());
    for (k, &i) in cols.iter().enumerate() {
        out.set_column(k, &vt.row(i).adjoint());
    }
    Ok(out)
}

/// Verify that `p` is numerically an orthogonal projector of the expected rank.
pub fn check_projector(p: &CMatrix, expected_rank: usize, tol: f64) -> Result<()> {
    check_finite(p)?;
    if p.nrows() != p.ncols() {
        return Err(Error::ShapeMismatch {
            context: "projector must be square",
            rows: p.nrows(),
            cols: p.ncols(),
        });
    }
    let herm = frobenius(&(p - p.adjoint()));
    if herm > tol {
        return Err(Error::NotProjector {
            context: "not hermitian",
            residual: herm,
        });
    }
    let idem = frobenius(&(p * p - p));
    if idem > tol {
        return Err(Error::NotProjector {
            context: "not idempotent",
            residual: idem,
        });
    }
    let tr = p.trace().re;
    if (tr - expected_rank as f64).abs() > 1e-6 {
        return Err(Error::NotProjector {
            context: "trace does not match rank",
            residual: (tr - expected_rank as f64).abs(),
        });
    }
    Ok(())
}

/// Solve the small Hermitian positive-definite system `G x = b` columnwise via
/// an explicit inverse; `G` is a Gram matrix of a full-rank frame.
pub fn gram_inverse(g: &CMatrix, rank_tol: f64) -> Result<CMatrix> {
    check_finite(g)?;
    let sv = singular_values(g);
    let smax = sv.first().copied().unwrap_or(0.0);
    let smin = sv.last().copied().unwrap_or(0.0);
    if smax == 0.0 || smin <= rank_tol * smax {
        return Err(Error::Singular {
            context: "gram matrix",
            margin: if smax == 0.0 { 0.0 } else { smin / smax },
        });
    }
    g.clone().try_inverse().ok_or(Error::Singular {
        context: "gram matrix inversion",
        margin: smin / smax,
    })
}
