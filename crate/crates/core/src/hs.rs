//! Finite truncation of a polarized separable Hilbert space and of the
//! Grassmannian of subspaces commensurable with its positive half.
//!
//! The model space keeps finitely many basis vectors on each side of the
//! polarization, indexed by nonzero integers whose sign gives the side:
//! indices -neg_count..=-1 span the negative half and 1..=pos_count the
//! positive half. A subspace is interesting through the two compressions
//! pr_plus and pr_minus onto the halves; the index of pr_plus restricted to
//! the subspace is its virtual dimension and labels the connected component
//! of the subspace in the Grassmannian. Virtual flags fix one incoming and
//! one outgoing slot of nominally infinite size; in the truncation those
//! slots are simply the large pieces, and the designated indices keep track
//! of which ones they are. The truncation-stability report checks that
//! these integer labels and the cross-polarization norms settle down as the
//! truncation is refined, which is what makes the finite model trustworthy.

use crate::error::{Error, Result};
use crate::numeric::{self, CMatrix};
use crate::tol::ToleranceConfig;
use num_complex::Complex64;

/// Convergence requirement on the cross-polarization norm between the two
/// finest truncations of a family.
const STABILITY_GAP: f64 = 1e-6;

/// Finite truncation of a polarized space: `neg_count` basis vectors on the
/// negative side and `pos_count` on the positive side. Rows of frames are
/// ordered negative-first: index -neg_count maps to row 0, index -1 to row
/// neg_count - 1, and index j >= 1 to row neg_count + j - 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruncatedPolarizedSpace {
    neg_count: usize,
    pos_count: usize,
}

impl TruncatedPolarizedSpace {
    pub fn new(neg_count: usize, pos_count: usize) -> Result<Self> {
        if neg_count == 0 || pos_count == 0 {
            return Err(Error::ShapeMismatch {
                context: "polarized truncation needs basis vectors on both sides",
                rows: neg_count,
                cols: pos_count,
            });
        }
        Ok(TruncatedPolarizedSpace {
            neg_count,
            pos_count,
        })
    }

    pub fn neg_count(&self) -> usize {
        self.neg_count
    }

    pub fn pos_count(&self) -> usize {
        self.pos_count
    }

    pub fn dim(&self) -> usize {
        self.neg_count + self.pos_count
    }

    /// Row of the basis vector with the given nonzero signed index.
    pub fn row_of(&self, index: i64) -> Result<usize> {
        let bad = || Error::BadBasisIndex {
            index,
            neg_count: self.neg_count,
            pos_count: self.pos_count,
        };
        if index < 0 {
            let k = (-index) as usize;
            if k > self.neg_count {
                return Err(bad());
            }
            Ok(self.neg_count - k)
        } else if index > 0 {
            let k = index as usize;
            if k > self.pos_count {
                return Err(bad());
            }
            Ok(self.neg_count + k - 1)
        } else {
            Err(bad())
        }
    }

    pub fn basis_vector(&self, index: i64) -> Result<CMatrix> {
        let mut v = CMatrix::zeros(self.dim(), 1);
        v[(self.row_of(index)?, 0)] = Complex64::new(1.0, 0.0);
        Ok(v)
    }
}

/// Point of the truncated Grassmannian: a subspace presented by a frame in
/// the basis of the truncation. The orthonormalized frame is kept alongside
/// so compressions onto the halves are well scaled.
#[derive(Debug, Clone)]
pub struct HSSubspacePoint {
    space: TruncatedPolarizedSpace,
    frame: CMatrix,
    onb: CMatrix,
}

impl HSSubspacePoint {
    pub fn new(
        space: TruncatedPolarizedSpace,
        frame: CMatrix,
        tol: &ToleranceConfig,
    ) -> Result<Self> {
        if frame.nrows() != space.dim() || frame.ncols() == 0 {
            return Err(Error::ShapeMismatch {
                context: "subspace frame rows must match the truncated dimension",
                rows: frame.nrows(),
                cols: frame.ncols(),
            });
        }
        let onb = numeric::orthonormal_frame(&frame, tol.rank_tol)?;
        Ok(HSSubspacePoint { space, frame, onb })
    }

    /// Span of the basis vectors with the given signed indices.
    pub fn from_indices(
        space: TruncatedPolarizedSpace,
        indices: &[i64],
        tol: &ToleranceConfig,
    ) -> Result<Self> {
        let mut frame = CMatrix::zeros(space.dim(), indices.len());
        for (c, &i) in indices.iter().enumerate() {
            frame[(space.row_of(i)?, c)] = Complex64::new(1.0, 0.0);
        }
        HSSubspacePoint::new(space, frame, tol)
    }

    /// The truncated positive half itself, the basepoint of the
    /// Grassmannian.
    pub fn positive_half(space: TruncatedPolarizedSpace, tol: &ToleranceConfig) -> Result<Self> {
        let indices: Vec<i64> = (1..=space.pos_count() as i64).collect();
        Self::from_indices(space, &indices, tol)
    }

    pub fn space(&self) -> &TruncatedPolarizedSpace {
        &self.space
    }

    pub fn frame(&self) -> &CMatrix {
        &self.frame
    }

    pub fn onb(&self) -> &CMatrix {
        &self.onb
    }

    pub fn dim(&self) -> usize {
        self.onb.ncols()
    }

    /// Compression of the orthonormal frame onto the positive half.
    pub fn pos_block(&self) -> CMatrix {
        self.onb
            .rows(self.space.neg_count(), self.space.pos_count())
            .into_owned()
    }

    /// Compression of the orthonormal frame onto the negative half.
    pub fn neg_block(&self) -> CMatrix {
        self.onb.rows(0, self.space.neg_count()).into_owned()
    }
}

/// Counts singular values above the rank cutoff, refusing to decide when
/// one falls within a factor 10 of the cutoff.
fn guarded_rank(block: &CMatrix, rank_tol: f64) -> Result<usize> {
    let sv = numeric::singular_values(block);
    let smax = sv.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return Ok(0);
    }
    let cutoff = rank_tol * smax;
    for &s in &sv {
        if s > cutoff / 10.0 && s < cutoff * 10.0 {
            return Err(Error::RankAmbiguous {
                value: s,
                cutoff,
            });
        }
    }
    Ok(sv.iter().filter(|&&s| s > cutoff).count())
}

/// Index of the compression onto the positive half: kernel dimension minus
/// cokernel dimension. This is the discrete label of the subspace's
/// connected component; it refuses to answer when the rank of the
/// compression is numerically ambiguous.
pub fn virtual_dimension(w: &HSSubspacePoint, tol: &ToleranceConfig) -> Result<i64> {
    let rank = guarded_rank(&w.pos_block(), tol.rank_tol)?;
    let kernel = w.dim() - rank;
    let cokernel = w.space().pos_count() - rank;
    Ok(kernel as i64 - cokernel as i64)
}

/// Index of the compression onto the negative half, the mirror label used
/// for outgoing slots and for the complement of a subspace.
pub fn out_virtual_dimension(w: &HSSubspacePoint, tol: &ToleranceConfig) -> Result<i64> {
    let rank = guarded_rank(&w.neg_block(), tol.rank_tol)?;
    let kernel = w.dim() - rank;
    let cokernel = w.space().neg_count() - rank;
    Ok(kernel as i64 - cokernel as i64)
}

/// Connected-component label of a subspace; subspaces with the same label
/// are joined by a continuous path of frames within the truncation.
pub fn component_of(w: &HSSubspacePoint, tol: &ToleranceConfig) -> Result<i64> {
    virtual_dimension(w, tol)
}

/// Orthogonal complement within the truncated space.
pub fn orthogonal_complement(
    w: &HSSubspacePoint,
    tol: &ToleranceConfig,
) -> Result<HSSubspacePoint> {
    let frame = numeric::nullspace(&w.onb().adjoint().into_owned(), tol.rank_tol)?;
    HSSubspacePoint::new(*w.space(), frame, tol)
}

/// Norms and invertibility data of an operator under the polarization
/// split. The cross blocks are the ones that must stay small for the
/// operator to respect the polarization; in a finite truncation they are
/// always finite, and the report exists to track their growth as the
/// truncation is refined.
#[derive(Debug, Clone, Copy)]
pub struct HSBlockReport {
    pub pos_to_pos: f64,
    pub neg_to_pos: f64,
    pub pos_to_neg: f64,
    pub neg_to_neg: f64,
    pub invertibility_margin: f64,
    pub invertible: bool,
}

pub fn hs_block_report(
    a: &CMatrix,
    space: &TruncatedPolarizedSpace,
    tol: &ToleranceConfig,
) -> Result<HSBlockReport> {
    let d = space.dim();
    if a.nrows() != d || a.ncols() != d {
        return Err(Error::ShapeMismatch {
            context: "operator must be square on the truncated space",
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    let nn = space.neg_count();
    let np = space.pos_count();
    let neg_to_neg = a.view((0, 0), (nn, nn)).norm();
    let pos_to_neg = a.view((0, nn), (nn, np)).norm();
    let neg_to_pos = a.view((nn, 0), (np, nn)).norm();
    let pos_to_pos = a.view((nn, nn), (np, np)).norm();
    let sv = numeric::singular_values(a);
    let smax = sv.first().copied().unwrap_or(0.0);
    let smin = sv.last().copied().unwrap_or(0.0);
    Ok(HSBlockReport {
        pos_to_pos,
        neg_to_pos,
        pos_to_neg,
        neg_to_neg,
        invertibility_margin: smin,
        invertible: smax > 0.0 && smin > tol.rank_tol * smax,
    })
}

/// One truncation level of a subspace family.
#[derive(Debug, Clone, Copy)]
pub struct TruncationRow {
    pub truncation: usize,
    pub virtual_dim: i64,
    pub neg_norm: f64,
}

/// Diagnostics of a family of subspaces under truncation refinement.
#[derive(Debug, Clone)]
pub struct TruncationReport {
    pub rows: Vec<TruncationRow>,
    pub stable_dimension: bool,
    pub converged: bool,
    pub stable: bool,
}

/// Evaluates a subspace family at each truncation level and reports whether
/// the virtual dimension is constant and the cross-polarization norm has
/// settled (successive levels within the stability gap). Instability is
/// reported in the result, not raised as an error.
pub fn truncation_stability(
    family: impl Fn(usize) -> Result<HSSubspacePoint>,
    levels: &[usize],
    tol: &ToleranceConfig,
) -> Result<TruncationReport> {
    if levels.len() < 2 || levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::ProfileInconsistent {
            context: format!("truncation levels must strictly increase, got {levels:?}"),
        });
    }
    let mut rows = Vec::with_capacity(levels.len());
    for &n in levels {
        let w = family(n)?;
        rows.push(TruncationRow {
            truncation: n,
            virtual_dim: virtual_dimension(&w, tol)?,
            neg_norm: w.neg_block().norm(),
        });
    }
    let stable_dimension = rows.iter().all(|r| r.virtual_dim == rows[0].virtual_dim);
    let converged = rows
        .windows(2)
        .last()
        .map(|w| (w[1].neg_norm - w[0].neg_norm).abs() <= STABILITY_GAP)
        .unwrap_or(false);
    Ok(TruncationReport {
        rows,
        stable_dimension,
        converged,
        stable: stable_dimension && converged,
    })
}

/// Ordered decomposition of the truncated space with two designated slots:
/// slot k is the incoming piece whose label is its virtual dimension, slot
/// l the outgoing piece labeled by the mirror index, and every other piece
/// counts by its honest dimension. All pieces must be pairwise orthogonal
/// and together fill the space.
#[derive(Debug, Clone)]
pub struct VirtualFlagPoint {
    parts: Vec<HSSubspacePoint>,
    type_vector: Vec<i64>,
    in_slot: usize,
    out_slot: usize,
}

impl VirtualFlagPoint {
    pub fn new(
        parts: Vec<HSSubspacePoint>,
        in_slot: usize,
        out_slot: usize,
        tol: &ToleranceConfig,
    ) -> Result<Self> {
        let n = parts.len();
        if n < 2 {
            return Err(Error::BadSigma {
                reason: "virtual flag needs at least the two designated pieces".to_string(),
            });
        }
        if in_slot == 0 || in_slot > n || out_slot == 0 || out_slot > n || in_slot == out_slot {
            return Err(Error::BadSigma {
                reason: format!("designated slots ({in_slot}, {out_slot}) out of range 1..={n}"),
            });
        }
        let space = *parts[0].space();
        if parts.iter().any(|p| *p.space() != space) {
            return Err(Error::ShapeMismatch {
                context: "virtual flag pieces live in different truncations",
                rows: space.dim(),
                cols: n,
            });
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let overlap = (parts[i].onb().adjoint() * parts[j].onb()).norm();
                if overlap > tol.residual_tol {
                    return Err(Error::NotOrthogonal {
                        i: i + 1,
                        j: j + 1,
                        overlap,
                    });
                }
            }
        }
        let total: usize = parts.iter().map(|p| p.dim()).sum();
        if total != space.dim() {
            return Err(Error::NotComplete {
                total_rank: total,
                ambient: space.dim(),
            });
        }
        let mut type_vector = Vec::with_capacity(n);
        for (idx, part) in parts.iter().enumerate() {
            let slot = idx + 1;
            let r = if slot == in_slot {
                virtual_dimension(part, tol)?
            } else if slot == out_slot {
                out_virtual_dimension(part, tol)?
            } else {
                part.dim() as i64
            };
            type_vector.push(r);
        }
        Ok(VirtualFlagPoint {
            parts,
            type_vector,
            in_slot,
            out_slot,
        })
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn part(&self, i: usize) -> &HSSubspacePoint {
        &self.parts[i]
    }

    pub fn parts(&self) -> &[HSSubspacePoint] {
        &self.parts
    }

    pub fn type_vector(&self) -> &[i64] {
        &self.type_vector
    }

    pub fn in_slot(&self) -> usize {
        self.in_slot
    }

    pub fn out_slot(&self) -> usize {
        self.out_slot
    }

    pub fn w_in(&self) -> &HSSubspacePoint {
        &self.parts[self.in_slot - 1]
    }

    pub fn w_out(&self) -> &HSSubspacePoint {
        &self.parts[self.out_slot - 1]
    }
}
