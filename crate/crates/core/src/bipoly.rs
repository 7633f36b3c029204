//! Polynomials in `z` and `conj(z)` with complex coefficients, and matrices of
//! them.
//!
//! These are the carriers for every frame in the crate: differentiation with
//! respect to either variable is exact, conjugation swaps the two variables,
//! and evaluation produces dense complex matrices for the pointwise linear
//! algebra. Matrices of bivariate polynomials support products, determinants
//! and adjugates so orthogonal complements can be formed without leaving the
//! polynomial world (scaling by the Gram determinant clears denominators).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numeric::CMatrix;

/// Coefficient grid for one polynomial: `coeffs[k * nzb + l]` multiplies
/// `z^k * conj(z)^l`.
#[derive(Debug, Clone, PartialEq)]
pub struct BiPoly {
    nz: usize,
    nzb: usize,
    coeffs: Vec<Complex64>,
}

pub const ZERO_C: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE_C: Complex64 = Complex64::new(1.0, 0.0);

impl BiPoly {
    pub fn zero() -> Self {
        BiPoly {
            nz: 1,
            nzb: 1,
            coeffs: vec![ZERO_C],
        }
    }

    pub fn constant(c: Complex64) -> Self {
        BiPoly {
            nz: 1,
            nzb: 1,
            coeffs: vec![c],
        }
    }

    pub fn one() -> Self {
        Self::constant(ONE_C)
    }

    /// Monomial `c * z^k * conj(z)^l`.
    pub fn monomial(k: usize, l: usize, c: Complex64) -> Self {
        let mut p = BiPoly {
            nz: k + 1,
            nzb: l + 1,
            coeffs: vec![ZERO_C; (k + 1) * (l + 1)],
        };
        p.coeffs[k * (l + 1) + l] = c;
        p
    }

    pub fn from_terms(terms: &[(usize, usize, Complex64)]) -> Self {
        let nz = terms.iter().map(|t| t.0 + 1).max().unwrap_or(1);
        let nzb = terms.iter().map(|t| t.1 + 1).max().unwrap_or(1);
        let mut p = BiPoly {
            nz,
            nzb,
            coeffs: vec![ZERO_C; nz * nzb],
        };
        for &(k, l, c) in terms {
            p.coeffs[k * nzb + l] += c;
        }
        p
    }

    /// Polynomial in `z` alone: `coeffs[k] * z^k`.
    pub fn poly_z(coeffs: &[Complex64]) -> Self {
        let nz = coeffs.len().max(1);
        let mut p = BiPoly {
            nz,
            nzb: 1,
            coeffs: vec![ZERO_C; nz],
        };
        for (k, &c) in coeffs.iter().enumerate() {
            p.coeffs[k] = c;
        }
        p
    }

    /// Polynomial in `conj(z)` alone: `coeffs[l] * conj(z)^l`.
    pub fn poly_zbar(coeffs: &[Complex64]) -> Self {
        let nzb = coeffs.len().max(1);
        let mut p = BiPoly {
            nz: 1,
            nzb,
            coeffs: vec![ZERO_C; nzb],
        };
        for (l, &c) in coeffs.iter().enumerate() {
            p.coeffs[l] = c;
        }
        p
    }

    pub fn coeff(&self, k: usize, l: usize) -> Complex64 {
        if k < self.nz && l < self.nzb {
            self.coeffs[k * self.nzb + l]
        } else {
            ZERO_C
        }
    }

    pub fn deg_z(&self) -> usize {
        for k in (0..self.nz).rev() {
            for l in 0..self.nzb {
                if self.coeffs[k * self.nzb + l] != ZERO_C {
                    return k;
                }
            }
        }
        0
    }

    pub fn deg_zbar(&self) -> usize {
        for l in (0..self.nzb).rev() {
            for k in 0..self.nz {
                if self.coeffs[k * self.nzb + l] != ZERO_C {
                    return l;
                }
            }
        }
        0
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == ZERO_C)
    }

    pub fn max_coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn add(&self, other: &BiPoly) -> BiPoly {
        let nz = self.nz.max(other.nz);
        let nzb = self.nzb.max(other.nzb);
        let mut out = BiPoly {
            nz,
            nzb,
            coeffs: vec![ZERO_C; nz * nzb],
        };
        for k in 0..nz {
            for l in 0..nzb {
                out.coeffs[k * nzb + l] = self.coeff(k, l) + other.coeff(k, l);
            }
        }
        out
    }

    pub fn sub(&self, other: &BiPoly) -> BiPoly {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> BiPoly {
        BiPoly {
            nz: self.nz,
            nzb: self.nzb,
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
        }
    }

    pub fn mul(&self, other: &BiPoly) -> BiPoly {
        let nz = self.nz + other.nz - 1;
        let nzb = self.nzb + other.nzb - 1;
        let mut out = BiPoly {
            nz,
            nzb,
            coeffs: vec![ZERO_C; nz * nzb],
        };
        for k1 in 0..self.nz {
            for l1 in 0..self.nzb {
                let a = self.coeffs[k1 * self.nzb + l1];
                if a == ZERO_C {
                    continue;
                }
                for k2 in 0..other.nz {
                    for l2 in 0..other.nzb {
                        let b = other.coeffs[k2 * other.nzb + l2];
                        if b == ZERO_C {
                            continue;
                        }
                        out.coeffs[(k1 + k2) * nzb + (l1 + l2)] += a * b;
                    }
                }
            }
        }
        out
    }

    /// Complex conjugate as a function of the point: swaps the roles of the
    /// two variables and conjugates coefficients. Applying it twice is the
    /// identity.
    pub fn conj(&self) -> BiPoly {
        let mut out = BiPoly {
            nz: self.nzb,
            nzb: self.nz,
            coeffs: vec![ZERO_C; self.nz * self.nzb],
        };
        for k in 0..self.nz {
            for l in 0..self.nzb {
                out.coeffs[l * out.nzb + k] = self.coeffs[k * self.nzb + l].conj();
            }
        }
        out
    }

    pub fn diff_z(&self) -> BiPoly {
        if self.nz == 1 {
            return BiPoly::zero();
        }
        let nz = self.nz - 1;
        let mut out = BiPoly {
            nz,
            nzb: self.nzb,
            coeffs: vec![ZERO_C; nz * self.nzb],
        };
        for k in 1..self.nz {
            for l in 0..self.nzb {
                out.coeffs[(k - 1) * self.nzb + l] =
                    self.coeffs[k * self.nzb + l] * Complex64::new(k as f64, 0.0);
            }
        }
        out
    }

    pub fn diff_zbar(&self) -> BiPoly {
        self.conj().diff_z().conj()
    }

    /// Evaluate with independent values for the two slots. For geometric use
    /// the second argument is `conj(z)`; the Laurent wrapper passes `1/z`.
    pub fn eval_at(&self, z: Complex64, zbar: Complex64) -> Complex64 {
        let mut acc = ZERO_C;
        for k in (0..self.nz).rev() {
            let mut row = ZERO_C;
            for l in (0..self.nzb).rev() {
                row = row * zbar + self.coeffs[k * self.nzb + l];
            }
            acc = acc * z + row;
        }
        acc
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.eval_at(z, z.conj())
    }

    /// Drop coefficients below `tol * max|coeff|` and trim the grid.
    pub fn prune(&self, tol: f64) -> BiPoly {
        let m = self.max_coeff_norm();
        if m == 0.0 {
            return BiPoly::zero();
        }
        self.prune_abs(tol * m)
    }

    /// Drops every coefficient whose norm is at most `cut` (an absolute
    /// threshold, unlike [`BiPoly::prune`] which scales by the entry's own
    /// largest coefficient) and trims the grid.
    pub fn prune_abs(&self, cut: f64) -> BiPoly {
        let mut p = self.clone();
        for c in p.coeffs.iter_mut() {
            if c.norm() <= cut {
                *c = ZERO_C;
            }
        }
        let dz = p.deg_z();
        let dzb = p.deg_zbar();
        let mut out = BiPoly {
            nz: dz + 1,
            nzb: dzb + 1,
            coeffs: vec![ZERO_C; (dz + 1) * (dzb + 1)],
        };
        for k in 0..=dz {
            for l in 0..=dzb {
                out.coeffs[k * (dzb + 1) + l] = p.coeff(k, l);
            }
        }
        out
    }
}

/// Coefficient tensor used by the scenario file format: indexed
/// `[row][col][k][l]` with each complex number as `[re, im]`.
pub type CoeffTensor = Vec<Vec<Vec<Vec<[f64; 2]>>>>;

#[derive(Debug, Clone, PartialEq)]
pub struct BiPolyMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<BiPoly>,
}

impl BiPolyMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        BiPolyMatrix {
            rows,
            cols,
            entries: vec![BiPoly::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            *m.entry_mut(i, i) = BiPoly::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> BiPoly) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        BiPolyMatrix {
            rows,
            cols,
            entries,
        }
    }

    /// Single column whose entries are polynomials in `z` alone; each inner
    /// slice lists the coefficients of one entry.
    pub fn column_z(entries: &[&[Complex64]]) -> Self {
        Self::from_fn(entries.len(), 1, |i, _| BiPoly::poly_z(entries[i]))
    }

    pub fn from_columns(cols: &[BiPolyMatrix]) -> Result<Self> {
        if cols.is_empty() {
            return Err(Error::ShapeMismatch {
                context: "from_columns needs at least one column",
                rows: 0,
                cols: 0,
            });
        }
        let rows = cols[0].rows;
        let mut total = 0;
        for c in cols {
            if c.rows != rows {
                return Err(Error::ShapeMismatch {
                    context: "from_columns row mismatch",
                    rows: c.rows,
                    cols: c.cols,
                });
            }
            total += c.cols;
        }
        let mut out = Self::zeros(rows, total);
        let mut at = 0;
        for c in cols {
            for j in 0..c.cols {
                for i in 0..rows {
                    *out.entry_mut(i, at + j) = c.entry(i, j).clone();
                }
            }
            at += c.cols;
        }
        Ok(out)
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn entry(&self, i: usize, j: usize) -> &BiPoly {
        &self.entries[i * self.cols + j]
    }

    pub fn entry_mut(&mut self, i: usize, j: usize) -> &mut BiPoly {
        &mut self.entries[i * self.cols + j]
    }

    pub fn column(&self, j: usize) -> BiPolyMatrix {
        Self::from_fn(self.rows, 1, |i, _| self.entry(i, j).clone())
    }

    pub fn map(&self, f: impl Fn(&BiPoly) -> BiPoly) -> BiPolyMatrix {
        BiPolyMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(f).collect(),
        }
    }

    pub fn add(&self, other: &BiPolyMatrix) -> BiPolyMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        BiPolyMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn sub(&self, other: &BiPolyMatrix) -> BiPolyMatrix {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> BiPolyMatrix {
        self.map(|p| p.scale(c))
    }

    pub fn scale_poly(&self, s: &BiPoly) -> BiPolyMatrix {
        self.map(|p| p.mul(s))
    }

    pub fn matmul(&self, other: &BiPolyMatrix) -> BiPolyMatrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        BiPolyMatrix::from_fn(self.rows, other.cols, |i, j| {
            let mut acc = BiPoly::zero();
            for k in 0..self.cols {
                acc = acc.add(&self.entry(i, k).mul(other.entry(k, j)));
            }
            acc
        })
    }

    pub fn transpose(&self) -> BiPolyMatrix {
        BiPolyMatrix::from_fn(self.cols, self.rows, |i, j| self.entry(j, i).clone())
    }

    /// Entrywise conjugation (swap of the two variables).
    pub fn conj(&self) -> BiPolyMatrix {
        self.map(|p| p.conj())
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> BiPolyMatrix {
        self.conj().transpose()
    }

    pub fn diff_z(&self) -> BiPolyMatrix {
        self.map(|p| p.diff_z())
    }

    pub fn diff_zbar(&self) -> BiPolyMatrix {
        self.map(|p| p.diff_zbar())
    }

    pub fn prune(&self, tol: f64) -> BiPolyMatrix {
        self.map(|p| p.prune(tol))
    }

    /// Prunes with a single threshold `tol * self.max_coeff_norm()` shared by
    /// every entry, so entries made of pure roundoff noise collapse to zero
    /// instead of keeping their own largest coefficient.
    pub fn prune_shared(&self, tol: f64) -> BiPolyMatrix {
        let cut = tol * self.max_coeff_norm();
        self.map(|p| p.prune_abs(cut))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|p| p.is_zero())
    }

    pub fn max_coeff_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|p| p.max_coeff_norm())
            .fold(0.0, f64::max)
    }

    pub fn deg_z(&self) -> usize {
        self.entries.iter().map(|p| p.deg_z()).max().unwrap_or(0)
    }

    pub fn deg_zbar(&self) -> usize {
        self.entries.iter().map(|p| p.deg_zbar()).max().unwrap_or(0)
    }

    /// True when no entry involves `conj(z)`.
    pub fn is_holomorphic(&self) -> bool {
        self.entries.iter().all(|p| p.prune(0.0).deg_zbar() == 0)
    }

    pub fn eval_at(&self, z: Complex64, zbar: Complex64) -> CMatrix {
        CMatrix::from_fn(self.rows, self.cols, |i, j| self.entry(i, j).eval_at(z, zbar))
    }

    pub fn eval(&self, z: Complex64) -> CMatrix {
        self.eval_at(z, z.conj())
    }

    /// Frame for the same pointwise spans in the chart at infinity: substitute
    /// `z = 1/w` and clear, per column, the minimal monomial `w^a * conj(w)^b`
    /// that makes all entries polynomial again.
    pub fn chart_infinity(&self) -> BiPolyMatrix {
        let mut out = Self::zeros(self.rows, self.cols);
        for j in 0..self.cols {
            let mut a = 0usize;
            let mut b = 0usize;
            for i in 0..self.rows {
                let p = self.entry(i, j).prune(0.0);
                if !p.is_zero() {
                    a = a.max(p.deg_z());
                    b = b.max(p.deg_zbar());
                }
            }
            for i in 0..self.rows {
                let p = self.entry(i, j).prune(0.0);
                let mut q = BiPoly {
                    nz: a + 1,
                    nzb: b + 1,
                    coeffs: vec![ZERO_C; (a + 1) * (b + 1)],
                };
                for k in 0..=p.deg_z() {
                    for l in 0..=p.deg_zbar() {
                        let c = p.coeff(k, l);
                        if c != ZERO_C {
                            q.coeffs[(a - k) * (b + 1) + (b - l)] = c;
                        }
                    }
                }
                *out.entry_mut(i, j) = q.prune(0.0);
            }
        }
        out
    }

    /// Determinant by cofactor expansion; intended for the small square
    /// matrices that appear as Gram blocks.
    pub fn det(&self) -> BiPoly {
        assert_eq!(self.rows, self.cols, "det of non-square matrix");
        let n = self.rows;
        match n {
            0 => BiPoly::one(),
            1 => self.entry(0, 0).clone(),
            _ => {
                let mut acc = BiPoly::zero();
                for i in 0..n {
                    let m = self.minor(i, 0).det();
                    let term = self.entry(i, 0).mul(&m);
                    if i % 2 == 0 {
                        acc = acc.add(&term);
                    } else {
                        acc = acc.sub(&term);
                    }
                }
                acc
            }
        }
    }

    fn minor(&self, skip_row: usize, skip_col: usize) -> BiPolyMatrix {
        let n = self.rows;
        BiPolyMatrix::from_fn(n - 1, n - 1, |i, j| {
            let ii = if i < skip_row { i } else { i + 1 };
            let jj = if j < skip_col { j } else { j + 1 };
            self.entry(ii, jj).clone()
        })
    }

    /// Adjugate: `adj(M) * M = det(M) * I`.
    pub fn adjugate(&self) -> BiPolyMatrix {
        assert_eq!(self.rows, self.cols, "adjugate of non-square matrix");
        let n = self.rows;
        if n == 0 {
            return BiPolyMatrix::zeros(0, 0);
        }
        if n == 1 {
            return BiPolyMatrix::identity(1);
        }
        BiPolyMatrix::from_fn(n, n, |i, j| {
            let m = self.minor(j, i).det();
            if (i + j) % 2 == 0 {
                m
            } else {
                m.scale(Complex64::new(-1.0, 0.0))
            }
        })
    }

    pub fn to_coeff_tensor(&self) -> CoeffTensor {
        let mut out = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            let mut row = Vec::with_capacity(self.cols);
            for j in 0..self.cols {
                let p = self.entry(i, j);
                let mut grid = Vec::with_capacity(p.nz);
                for k in 0..p.nz {
                    let mut line = Vec::with_capacity(p.nzb);
                    for l in 0..p.nzb {
                        let c = p.coeff(k, l);
                        line.push([c.re, c.im]);
                    }
                    grid.push(line);
                }
                row.push(grid);
            }
            out.push(row);
        }
        out
    }

    pub fn from_coeff_tensor(t: &CoeffTensor) -> Result<Self> {
        let rows = t.len();
        if rows == 0 {
            return Err(Error::ShapeMismatch {
                context: "empty coefficient tensor",
                rows: 0,
                cols: 0,
            });
        }
        let cols = t[0].len();
        if cols == 0 || t.iter().any(|r| r.len() != cols) {
            return Err(Error::ShapeMismatch {
                context: "ragged coefficient tensor",
                rows,
                cols,
            });
        }
        let mut out = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                let grid = &t[i][j];
                let mut terms = Vec::new();
                for (k, line) in grid.iter().enumerate() {
                    for (l, c) in line.iter().enumerate() {
                        if !c[0].is_finite() || !c[1].is_finite() {
                            return Err(Error::NonFiniteMatrix);
                        }
                        if c[0] != 0.0 || c[1] != 0.0 {
                            terms.push((k, l, Complex64::new(c[0], c[1])));
                        }
                    }
                }
                *out.entry_mut(i, j) = BiPoly::from_terms(&terms);
            }
        }
        Ok(out)
    }
}

/// `det(G) * (I - F G^{-1} F*) * v` for `G = F* F`: the orthogonal projection
/// of `v` away from the span of `F`, cleared of denominators so it stays
/// polynomial. The result spans the projection wherever `det G` is nonzero.
pub fn cleared_complement(frame: &BiPolyMatrix, v: &BiPolyMatrix) -> BiPolyMatrix {
    let gram = frame.dagger().matmul(frame);
    let det = gram.det();
    let adj = gram.adjugate();
    let coeff = frame.dagger().matmul(v);
    v.scale_poly(&det)
        .sub(&frame.matmul(&adj).matmul(&coeff))
        .prune(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eval_mixed_poly() {
        // 1 + 2 z zbar at z = 1+i: 1 + 2*2 = 5
        let p = BiPoly::from_terms(&[(0, 0, ONE_C), (1, 1, c(2.0, 0.0))]);
        let v = p.eval(c(1.0, 1.0));
        assert!((v - c(5.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn diff_z_of_z2_zbar() {
        let p = BiPoly::monomial(2, 1, ONE_C);
        let d = p.diff_z();
        assert_eq!(d.deg_z(), 1);
        assert!((d.coeff(1, 1) - c(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn conj_is_involutive_and_pointwise_conjugate() {
        let p = BiPoly::from_terms(&[(2, 0, c(1.0, -3.0)), (0, 1, c(0.5, 2.0))]);
        assert_eq!(p.conj().conj(), p);
        let z = c(0.3, -0.7);
        assert!((p.conj().eval(z) - p.eval(z).conj()).norm() < 1e-14);
    }

    #[test]
    fn diff_matches_finite_difference() {
        let p = BiPoly::from_terms(&[(3, 2, c(1.0, 0.5)), (1, 0, c(-2.0, 0.0)), (0, 2, c(0.0, 1.0))]);
        let z0 = c(0.4, 0.2);
        for &h in &[1e-3, 1e-4] {
            let hr = c(h, 0.0);
            let hi = c(0.0, h);
            // Wirtinger d/dz = (d/dx - i d/dy)/2 via central differences
            let dx = (p.eval(z0 + hr) - p.eval(z0 - hr)) / (2.0 * h);
            let dy = (p.eval(z0 + hi) - p.eval(z0 - hi)) / (2.0 * h);
            let fd = (dx - c(0.0, 1.0) * dy) / 2.0;
            let exact = p.diff_z().eval(z0);
            assert!(
                (fd - exact).norm() < 20.0 * h * h,
                "step {h}: fd {fd} vs exact {exact}"
            );
        }
    }

    #[test]
    fn chart_infinity_of_tautological() {
        // (1, z)^T -> (w, 1) after clearing w^1
        let f = BiPolyMatrix::column_z(&[&[ONE_C], &[ZERO_C, ONE_C]]);
        let g = f.chart_infinity();
        assert_eq!(g.entry(0, 0), &BiPoly::monomial(1, 0, ONE_C));
        assert_eq!(g.entry(1, 0), &BiPoly::one());
    }

    #[test]
    fn adjugate_times_matrix_is_det() {
        let m = BiPolyMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => BiPoly::one(),
            (0, 1) => BiPoly::monomial(1, 0, ONE_C),
            (1, 0) => BiPoly::monomial(0, 1, c(2.0, 0.0)),
            _ => BiPoly::from_terms(&[(0, 0, ONE_C), (1, 1, ONE_C)]),
        });
        let lhs = m.adjugate().matmul(&m).prune(1e-14);
        let det = m.det();
        let z = c(0.3, 0.8);
        let l = lhs.eval(z);
        let d = det.eval(z);
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { d } else { ZERO_C };
                assert!((l[(i, j)] - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn cleared_complement_of_tautological() {
        // projecting e2 away from span(1,z) gives a multiple of (-zbar, 1)
        let f = BiPolyMatrix::column_z(&[&[ONE_C], &[ZERO_C, ONE_C]]);
        let e2 = BiPolyMatrix::column_z(&[&[ZERO_C], &[ONE_C]]);
        let g = cleared_complement(&f, &e2);
        let z = c(0.5, -0.3);
        let v = g.eval(z);
        let ratio = v[(0, 0)] / v[(1, 0)];
        assert!((ratio - (-z.conj())).norm() < 1e-13);
    }

    #[test]
    fn coeff_tensor_round_trip() {
        let m = BiPolyMatrix::from_fn(2, 1, |i, _| {
            if i == 0 {
                BiPoly::from_terms(&[(1, 2, c(0.5, -1.5))])
            } else {
                BiPoly::one()
            }
        });
        let t = m.to_coeff_tensor();
        let back = BiPolyMatrix::from_coeff_tensor(&t).unwrap();
        let z = c(0.2, 0.9);
        assert!((m.eval(z) - back.eval(z)).norm() < 1e-15);
    }
}
