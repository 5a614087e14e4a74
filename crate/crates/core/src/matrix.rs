//! Dense complex matrices and the spectral primitives the rest of the crate
//! is built on.
//!
//! All tolerances here are relative to `max(1, λ_max)` unless stated
//! otherwise.

use std::ops::Deref;

use nalgebra::{ComplexField, DMatrix, DVector, Dyn, SymmetricEigen, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix, row/column storage handled by nalgebra.
pub type ComplexMatrix = DMatrix<Complex64>;

/// Dense complex column vector.
pub type ComplexVector = DVector<Complex64>;

/// Default Hermiticity tolerance (relative).
pub const HERM_TOL: f64 = 1e-10;
/// Default eigenvalue tolerance (relative).
pub const EIG_TOL: f64 = 1e-10;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Shorthand for a complex number.
#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Builds a real matrix, row-major.
pub fn real_matrix(rows: usize, cols: usize, entries: &[f64]) -> ComplexMatrix {
    assert_eq!(entries.len(), rows * cols);
    ComplexMatrix::from_row_iterator(rows, cols, entries.iter().map(|&x| c64(x, 0.0)))
}

/// Scales the input so that `λ_max`-relative tolerances are meaningful.
#[inline]
pub(crate) fn scale_of(lambda_max: f64) -> f64 {
    lambda_max.abs().max(1.0)
}

/// Square matrix equal to its conjugate transpose.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix(ComplexMatrix);

impl HermitianMatrix {
    /// Checks Hermiticity with the default tolerance.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        Self::with_tol(m, HERM_TOL)
    }

    /// Checks `‖M − M†‖_F ≤ tol·max(1, ‖M‖_F)`; the stored matrix is the
    /// exact Hermitian part of the input.
    pub fn with_tol(m: ComplexMatrix, tol: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "Hermitian matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let asymmetry = (&m - m.adjoint()).norm();
        if asymmetry > tol * m.norm().max(1.0) {
            return Err(Error::NotHermitian { asymmetry });
        }
        Ok(Self::hermitian_part(&m))
    }

    /// `(M + M†) / 2`, no checks.
    pub fn hermitian_part(m: &ComplexMatrix) -> Self {
        assert!(m.is_square(), "hermitian_part needs a square matrix");
        Self((m + m.adjoint()).scale(0.5))
    }

    pub fn identity(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(ComplexMatrix::zeros(dim, dim))
    }

    /// Real diagonal matrix.
    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = ComplexMatrix::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = c64(v, 0.0);
        }
        Self(m)
    }

    /// `|v⟩⟨v|` (not normalized).
    pub fn outer(v: &ComplexVector) -> Self {
        Self::hermitian_part(&(v * v.adjoint()))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self(self.0.scale(factor))
    }

    /// Real-weighted sum `self + factor·other`.
    pub fn add_scaled(&self, other: &HermitianMatrix, factor: f64) -> Self {
        Self(&self.0 + other.0.scale(factor))
    }

    /// `U·H·U†`; stays Hermitian for any `U`.
    pub fn conjugate_by(&self, u: &ComplexMatrix) -> Self {
        Self::hermitian_part(&(u * &self.0 * u.adjoint()))
    }

    /// Frobenius distance.
    pub fn distance(&self, other: &HermitianMatrix) -> f64 {
        (&self.0 - &other.0).norm()
    }

    /// `tr(self · other)`, real for Hermitian arguments.
    pub fn inner(&self, other: &HermitianMatrix) -> f64 {
        self.0.dotc(&other.0).re
    }

    pub fn eig(&self) -> Eigensystem {
        Eigensystem::of_hermitian(&self.0)
    }

    /// `P² = P` within `tol` (Frobenius).
    pub fn is_projection(&self, tol: f64) -> bool {
        (&self.0 * &self.0 - &self.0).norm() <= tol
    }
}

impl Deref for HermitianMatrix {
    type Target = ComplexMatrix;

    fn deref(&self) -> &ComplexMatrix {
        &self.0
    }
}

impl From<HermitianMatrix> for ComplexMatrix {
    fn from(h: HermitianMatrix) -> Self {
        h.0
    }
}

/// Spectral decomposition of a Hermitian matrix.
///
/// Eigenvalues are sorted in descending order. Inside a degenerate cluster
/// the eigenvector order is arbitrary; only spans are meaningful.
#[derive(Clone, Debug)]
pub struct Eigensystem {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns.
    pub eigenvectors: ComplexMatrix,
}

impl Eigensystem {
    fn of_hermitian(m: &ComplexMatrix) -> Self {
        let n = m.nrows();
        if n == 0 {
            return Self {
                eigenvalues: Vec::new(),
                eigenvectors: ComplexMatrix::zeros(0, 0),
            };
        }
        let sym = (m + m.adjoint()).scale(0.5);
        let SymmetricEigen {
            eigenvalues,
            eigenvectors,
        } = SymmetricEigen::new(sym);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eigenvalues[b].total_cmp(&eigenvalues[a]));
        let mut sorted = ComplexMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            sorted.set_column(dst, &eigenvectors.column(src));
        }
        Self {
            eigenvalues: order.iter().map(|&i| eigenvalues[i]).collect(),
            eigenvectors: sorted,
        }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn vector(&self, k: usize) -> ComplexVector {
        self.eigenvectors.column(k).into_owned()
    }

    /// `Σ_k f(λ_k) v_k v_k†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let mut scaled = self.eigenvectors.clone();
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            let w = f(lambda);
            scaled.column_mut(k).scale_mut(w);
        }
        HermitianMatrix::hermitian_part(&(scaled * self.eigenvectors.adjoint()))
    }

    pub fn reconstruct(&self) -> HermitianMatrix {
        self.map(|x| x)
    }

    /// Number of eigenvalues above `tol·max(1, λ_max)`.
    pub fn count_above(&self, tol: f64) -> usize {
        let cut = tol * scale_of(self.max());
        self.eigenvalues.iter().filter(|&&l| l > cut).count()
    }

    /// Columns spanning the eigenspace with eigenvalues above `tol·max(1, λ_max)`.
    pub fn range_basis(&self, tol: f64) -> ComplexMatrix {
        let r = self.count_above(tol);
        self.eigenvectors.columns(0, r).into_owned()
    }
}

/// Hermitian eigendecomposition of a general matrix, checking symmetry first.
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<Eigensystem> {
    Ok(HermitianMatrix::new(m.clone())?.eig())
}

/// Numerical rank of a PSD matrix.
pub fn rank_eps(h: &HermitianMatrix, tol: f64) -> Result<usize> {
    let eig = h.eig();
    let scale = scale_of(eig.max());
    if eig.min() < -tol * scale {
        return Err(Error::NotPsd {
            outcome: None,
            min_eigenvalue: eig.min(),
        });
    }
    Ok(eig.count_above(tol))
}

pub fn is_psd(h: &HermitianMatrix, tol: f64) -> bool {
    let eig = h.eig();
    eig.min() >= -tol * scale_of(eig.max())
}

/// Frobenius-nearest PSD matrix: negative eigenvalues clipped at zero.
pub fn psd_project(h: &HermitianMatrix) -> HermitianMatrix {
    h.eig().map(|l| l.max(0.0))
}

/// Square root of a PSD matrix. Eigenvalues within `EIG_TOL·max(1, λ_max)`
/// of zero are treated as zero so round-off does not turn into `√ε` noise.
pub fn psd_sqrt(h: &HermitianMatrix) -> HermitianMatrix {
    let eig = h.eig();
    let floor = EIG_TOL * scale_of(eig.max());
    eig.map(|l| if l > floor { l.sqrt() } else { 0.0 })
}

/// Pseudo-inverse square root; eigenvalues at or below `cutoff` map to zero.
pub fn psd_inv_sqrt(h: &HermitianMatrix, cutoff: f64) -> HermitianMatrix {
    h.eig()
        .map(|l| if l > cutoff { 1.0 / l.sqrt() } else { 0.0 })
}

/// Orthogonal projection onto the eigenspace above `tol·max(1, λ_max)`.
pub fn range_projection(h: &HermitianMatrix, tol: f64) -> HermitianMatrix {
    let basis = h.eig().range_basis(tol);
    HermitianMatrix::hermitian_part(&(&basis * basis.adjoint()))
}

/// Dimension of the linear span of `ops`.
///
/// This is the rank of the Gram matrix `G_ab = tr(ops_a† ops_b)`, computed
/// from the singular values of the stacked vectorizations so that the
/// threshold applies to `‖·‖_F` directly: `{M}` has rank zero iff
/// `‖M‖_F ≤ tol`.
pub fn gram_rank(ops: &[ComplexMatrix], tol: f64) -> usize {
    let Some(first) = ops.first() else {
        return 0;
    };
    let len = first.len();
    assert!(
        ops.iter().all(|m| m.shape() == first.shape()),
        "gram_rank needs operators of equal shape"
    );
    let stacked = ComplexMatrix::from_fn(len, ops.len(), |i, a| ops[a][i]);
    checked_svd(&stacked)
        .singular_values
        .iter()
        .filter(|&&s| s > tol)
        .count()
}

/// Singular value decomposition with a reconstruction check.
///
/// nalgebra's bidiagonal SVD occasionally returns inconsistent factors when
/// the input holds subnormal-scale round-off entries next to O(1) ones. Such
/// entries are flushed to zero first; if the factors still fail to
/// reconstruct the input, the transpose is decomposed instead.
pub fn checked_svd<T: ComplexField<RealField = f64>>(a: &DMatrix<T>) -> SVD<T, Dyn, Dyn> {
    let scale = a.iter().map(|z| z.clone().modulus()).fold(0.0, f64::max);
    let floor = scale * 1e-15;
    let clean = a.map(|z| if z.clone().modulus() < floor { T::zero() } else { z });
    let tol = 1e-12 * scale.max(1.0) * (a.nrows().max(a.ncols()) as f64);
    let error = |svd: &SVD<T, Dyn, Dyn>, m: &DMatrix<T>| {
        svd.clone().recompose().map_or(f64::INFINITY, |r| (r - m).norm())
    };
    let direct = clean.clone().svd(true, true);
    if error(&direct, &clean) <= tol {
        return direct;
    }
    let t = clean.adjoint();
    let flipped = t.clone().svd(true, true);
    if error(&flipped, &t) < error(&direct, &clean) {
        SVD {
            u: flipped.v_t.map(|v| v.adjoint()),
            v_t: flipped.u.map(|u| u.adjoint()),
            singular_values: flipped.singular_values,
        }
    } else {
        direct
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Matrix unit `|a⟩⟨b|` on `ℂⁿ`.
pub fn matrix_unit(n: usize, a: usize, b: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(n, n);
    m[(a, b)] = ONE;
    m
}

/// Standard basis vector.
pub fn basis_vector(n: usize, k: usize) -> ComplexVector {
    let mut v = ComplexVector::zeros(n);
    v[k] = ONE;
    v
}

/// Orthonormal basis (Hilbert–Schmidt) of the real space of Hermitian
/// `n×n` matrices, ordered to match [`vec_hermitian`] coordinates.
pub fn hermitian_basis(n: usize) -> Vec<HermitianMatrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        let mut m = ComplexMatrix::zeros(n, n);
        m[(i, i)] = ONE;
        out.push(HermitianMatrix(m));
        for j in i + 1..n {
            let mut re = ComplexMatrix::zeros(n, n);
            re[(i, j)] = c64(s, 0.0);
            re[(j, i)] = c64(s, 0.0);
            out.push(HermitianMatrix(re));
            let mut im = ComplexMatrix::zeros(n, n);
            im[(i, j)] = c64(0.0, s);
            im[(j, i)] = c64(0.0, -s);
            out.push(HermitianMatrix(im));
        }
    }
    out
}

/// Real coordinates of a Hermitian matrix in the [`hermitian_basis`].
///
/// The map is an isometry: `vec(X)·vec(Y) = tr(XY)`.
pub fn vec_hermitian(m: &ComplexMatrix, out: &mut [f64]) {
    let n = m.nrows();
    debug_assert_eq!(out.len(), n * n);
    let s = std::f64::consts::SQRT_2;
    let mut k = 0;
    for i in 0..n {
        out[k] = m[(i, i)].re;
        k += 1;
        for j in i + 1..n {
            // average both triangles so slightly non-Hermitian input maps to
            // its Hermitian part
            let z = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            out[k] = s * z.re;
            out[k + 1] = s * z.im;
            k += 2;
        }
    }
}

/// Inverse of [`vec_hermitian`].
pub fn unvec_hermitian(n: usize, coords: &[f64]) -> HermitianMatrix {
    debug_assert_eq!(coords.len(), n * n);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut m = ComplexMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        m[(i, i)] = c64(coords[k], 0.0);
        k += 1;
        for j in i + 1..n {
            let z = c64(s * coords[k], s * coords[k + 1]);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
            k += 2;
        }
    }
    HermitianMatrix(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checked_svd_survives_roundoff_entries() {
        // a rank-deficient system with a sprinkle of subnormal-scale noise
        let base = DMatrix::from_fn(13, 9, |i, j| ((i * 7 + j * 3) % 11) as f64 / 11.0 - 0.4);
        let mix = DMatrix::from_fn(9, 10, |i, j| if i == j || (j == 9 && i < 3) { 1.0 } else { 0.0 });
        let mut a = base * mix;
        for (i, j) in [(0, 2), (4, 7), (9, 1), (12, 9)] {
            a[(i, j)] = if a[(i, j)] == 0.0 { 1e-17 } else { a[(i, j)] };
        }
        let svd = checked_svd(&a);
        assert!((svd.clone().recompose().unwrap() - &a).norm() <= 1e-12);
        let s = &svd.singular_values;
        assert!(s.iter().zip(s.iter().skip(1)).all(|(x, y)| x >= y));
        assert!(s[9] < 1e-12 && s[8] > 1e-6);
    }

    fn herm(rows: usize, entries: &[(f64, f64)]) -> HermitianMatrix {
        let m = ComplexMatrix::from_row_iterator(
            rows,
            rows,
            entries.iter().map(|&(re, im)| c64(re, im)),
        );
        HermitianMatrix::new(m).unwrap()
    }

    fn trine() -> Vec<HermitianMatrix> {
        (0..3)
            .map(|j| {
                let theta = 2.0 * std::f64::consts::PI * j as f64 / 3.0;
                let v = ComplexVector::from_vec(vec![
                    c64((theta / 2.0).cos(), 0.0),
                    c64((theta / 2.0).sin(), 0.0),
                ]);
                HermitianMatrix::outer(&v).scale(2.0 / 3.0)
            })
            .collect()
    }

    #[test]
    fn eig_of_identity_and_diagonal() {
        let e = HermitianMatrix::identity(2).eig();
        assert_eq!(e.eigenvalues.len(), 2);
        assert!((e.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-14);

        let e = HermitianMatrix::diagonal(&[1.0, 3.0]).eig();
        assert!((e.eigenvalues[0] - 3.0).abs() < 1e-14);
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-14);
        assert!((e.eigenvectors[(1, 0)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eig_of_two_by_two_with_imaginary_offdiagonal() {
        // characteristic polynomial (1-λ)² - 1 = 0 → λ ∈ {2, 0}
        let h = herm(2, &[(1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (1.0, 0.0)]);
        let e = h.eig();
        assert!((e.eigenvalues[0] - 2.0).abs() < 1e-13);
        assert!(e.eigenvalues[1].abs() < 1e-13);
        assert!(e.reconstruct().distance(&h) < 1e-13);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = real_matrix(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(hermitian_eig(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank_eps(&HermitianMatrix::zeros(3), EIG_TOL).unwrap(), 0);
        let p0 = HermitianMatrix::outer(&basis_vector(3, 0));
        assert_eq!(rank_eps(&p0, EIG_TOL).unwrap(), 1);
        assert_eq!(rank_eps(&trine()[1], EIG_TOL).unwrap(), 1);
        let err = rank_eps(&HermitianMatrix::diagonal(&[1.0, -0.5]), EIG_TOL);
        assert!(matches!(err, Err(Error::NotPsd { .. })));
    }

    #[test]
    fn psd_checks() {
        assert!(is_psd(&HermitianMatrix::identity(2), EIG_TOL));
        assert!(!is_psd(&HermitianMatrix::diagonal(&[1.0, -1.0]), EIG_TOL));
        let sum = trine()
            .iter()
            .fold(HermitianMatrix::zeros(2), |acc, e| acc.add_scaled(e, 1.0));
        assert!(sum.distance(&HermitianMatrix::identity(2)) < 1e-14);
        assert!(is_psd(&sum, EIG_TOL));
    }

    #[test]
    fn psd_projection_examples() {
        let p = psd_project(&HermitianMatrix::diagonal(&[2.0, -1.0]));
        assert!(p.distance(&HermitianMatrix::diagonal(&[2.0, 0.0])) < 1e-14);
        let p = psd_project(&HermitianMatrix::diagonal(&[-1.0, -2.0]));
        assert!(p.norm() < 1e-14);
        let h = herm(2, &[(1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (1.0, 0.0)]);
        assert!(psd_project(&h).distance(&h) < 1e-12);
    }

    #[test]
    fn gram_rank_examples() {
        let id = ComplexMatrix::identity(2, 2);
        assert_eq!(gram_rank(&[id.clone(), id], 1e-10), 1);
        let units = [matrix_unit(2, 0, 0), matrix_unit(2, 1, 1)];
        assert_eq!(gram_rank(&units, 1e-10), 2);
        // Gram matrix of the trine projectors: 1 on the diagonal, 1/4 off it
        let projectors: Vec<_> = trine()
            .into_iter()
            .map(|e| e.scale(1.5).into_matrix())
            .collect();
        assert_eq!(gram_rank(&projectors, 1e-10), 3);
        assert_eq!(gram_rank(&[], 1e-10), 0);
    }

    #[test]
    fn hermitian_coordinates_are_isometric() {
        let basis = hermitian_basis(3);
        assert_eq!(basis.len(), 9);
        for (a, ga) in basis.iter().enumerate() {
            let mut v = vec![0.0; 9];
            vec_hermitian(ga, &mut v);
            for (b, gb) in basis.iter().enumerate() {
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((ga.inner(gb) - expected).abs() < 1e-14);
                assert!((v[b] - expected).abs() < 1e-14);
            }
            assert!(unvec_hermitian(3, &v).distance(ga) < 1e-14);
        }
    }
}
