//! Pointwise Grassmannian and flag geometry.
//!
//! A point of the Grassmannian is carried by its orthogonal projector, a flag
//! by an ordered tuple of mutually orthogonal projectors summing to the
//! identity. An index subset sigma selects a coarse Grassmannian point from a
//! flag by summing the chosen projectors; the tangent space at a flag splits
//! into the blocks cut out by compressing an ambient matrix between two of
//! the summands.

use crate::error::{Error, Result};
use crate::numeric::{self, CMatrix};
use crate::tol::ToleranceConfig;

#[derive(Debug, Clone)]
pub struct GrassmannPoint {
    pub projector: CMatrix,
    pub rank: usize,
    pub ambient_dim: usize,
}

impl GrassmannPoint {
    pub fn from_projector(projector: CMatrix, tol: &ToleranceConfig) -> Result<Self> {
        let rank = projector.trace().re.round() as usize;
        numeric::check_projector(&projector, rank, tol.residual_tol)?;
        let ambient_dim = projector.nrows();
        Ok(GrassmannPoint {
            projector,
            rank,
            ambient_dim,
        })
    }

    pub fn from_frame(frame: &CMatrix, tol: &ToleranceConfig) -> Result<Self> {
        let p = numeric::orthonormal_projector(frame, tol.rank_tol)?;
        Self::from_projector(p, tol)
    }
}

#[derive(Debug, Clone)]
pub struct FlagPoint {
    pub projectors: Vec<CMatrix>,
    pub type_vector: Vec<usize>,
}

impl FlagPoint {
    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    pub fn ambient_dim(&self) -> usize {
        self.projectors.first().map_or(0, |p| p.nrows())
    }
}

/// Ordered index subset of {1, ..., n}, 1-based as written in flag notation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SigmaSubset {
    indices: Vec<usize>,
    n: usize,
}

impl SigmaSubset {
    pub fn new(indices: Vec<usize>, n: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::BadSigma {
                reason: "empty index subset".into(),
            });
        }
        if !indices.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::BadSigma {
                reason: format!("indices not strictly increasing: {indices:?}"),
            });
        }
        if indices[0] < 1 || *indices.last().unwrap() > n {
            return Err(Error::BadSigma {
                reason: format!("indices {indices:?} out of range 1..={n}"),
            });
        }
        if indices.len() == n {
            return Err(Error::BadSigma {
                reason: "subset must be proper".into(),
            });
        }
        Ok(SigmaSubset { indices, n })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn flag_length(&self) -> usize {
        self.n
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    pub fn complement(&self) -> SigmaSubset {
        let indices = (1..=self.n).filter(|i| !self.contains(*i)).collect();
        SigmaSubset {
            indices,
            n: self.n,
        }
    }
}

/// Build a flag from mutually orthogonal frames that together span the
/// ambient space.
pub fn make_flag(frames: &[CMatrix], tol: &ToleranceConfig) -> Result<FlagPoint> {
    let mut projectors = Vec::with_capacity(frames.len());
    let mut type_vector = Vec::with_capacity(frames.len());
    for f in frames {
        let p = numeric::orthonormal_projector(f, tol.rank_tol)?;
        type_vector.push(f.ncols());
        projectors.push(p);
    }
    check_flag(&projectors, tol)?;
    Ok(FlagPoint {
        projectors,
        type_vector,
    })
}

/// Verify mutual orthogonality and completeness of a projector tuple.
pub fn check_flag(projectors: &[CMatrix], tol: &ToleranceConfig) -> Result<()> {
    let d = projectors
        .first()
        .map(|p| p.nrows())
        .ok_or(Error::NotComplete {
            total_rank: 0,
            ambient: 0,
        })?;
    for (i, a) in projectors.iter().enumerate() {
        for (j, b) in projectors.iter().enumerate().skip(i + 1) {
            let overlap = numeric::frobenius(&(a * b));
            if overlap > tol.residual_tol * 10.0 {
                return Err(Error::NotOrthogonal { i, j, overlap });
            }
        }
    }
    let mut sum = CMatrix::zeros(d, d);
    for p in projectors {
        sum += p;
    }
    let defect = numeric::frobenius(&(sum - CMatrix::identity(d, d)));
    if defect > tol.residual_tol * 10.0 {
        let total: f64 = projectors.iter().map(|p| p.trace().re).sum();
        return Err(Error::NotComplete {
            total_rank: total.round() as usize,
            ambient: d,
        });
    }
    Ok(())
}

/// Sum the projectors selected by sigma.
pub fn project_sigma(flag: &FlagPoint, sigma: &SigmaSubset) -> Result<GrassmannPoint> {
    if sigma.flag_length() != flag.len() {
        return Err(Error::BadSigma {
            reason: format!(
                "subset over {} parts applied to a flag with {}",
                sigma.flag_length(),
                flag.len()
            ),
        });
    }
    let d = flag.ambient_dim();
    let mut projector = CMatrix::zeros(d, d);
    let mut rank = 0;
    for &i in sigma.indices() {
        projector += &flag.projectors[i - 1];
        rank += flag.type_vector[i - 1];
    }
    Ok(GrassmannPoint {
        projector,
        rank,
        ambient_dim: d,
    })
}

/// Real invariant inner product Re tr(a b†).
pub fn invariant_metric(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch {
            context: "invariant metric operands",
            rows: b.nrows(),
            cols: b.ncols(),
        });
    }
    Ok((a * b.adjoint()).trace().re)
}

#[derive(Debug, Clone)]
pub struct TangentBlock {
    pub i: usize,
    pub j: usize,
    pub block: CMatrix,
}

/// All off-diagonal compressions pi_i x pi_j of an ambient matrix. Indices
/// are 1-based to match flag notation.
pub fn tangent_blocks(flag: &FlagPoint, x: &CMatrix) -> Vec<TangentBlock> {
    let n = flag.len();
    let mut out = Vec::with_capacity(n * n - n);
    for i in 1..=n {
        for j in 1..=n {
            if i == j {
                continue;
            }
            let block = &flag.projectors[i - 1] * x * &flag.projectors[j - 1];
            out.push(TangentBlock { i, j, block });
        }
    }
    out
}
