//! Dense complex linear algebra shared by every other module.
//!
//! Matrices are `nalgebra` dense matrices over `Complex64`. The Hermitian
//! eigensolver wraps `nalgebra`'s Householder/QR routine and adds what the
//! rest of the crate relies on: ascending eigenvalues, a fixed phase for
//! every eigenvector, and explicit tolerance handling.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{shape_err, PomError, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Numerical slack used throughout the crate.
///
/// `eps_pos` bounds how negative an eigenvalue of a nominally positive
/// operator may be, `eps_eq` is the equality slack for identities,
/// `eps_rank` is the relative spectral cutoff for supports and pseudo-inverses
/// and `eps_match` is the Frobenius distance under which two rank-1 POM
/// elements are treated as the same element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub eps_pos: f64,
    pub eps_eq: f64,
    pub eps_rank: f64,
    pub eps_match: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            eps_pos: 1e-10,
            eps_eq: 1e-9,
            eps_rank: 1e-10,
            eps_match: 1e-8,
        }
    }
}

impl Tolerance {
    pub fn validate(&self) -> Result<()> {
        let all = [self.eps_pos, self.eps_eq, self.eps_rank, self.eps_match];
        if all.iter().all(|e| e.is_finite() && *e >= 0.0) {
            Ok(())
        } else {
            Err(PomError::Invalid(format!("tolerances must be non-negative: {self:?}")))
        }
    }
}

/// A possibly unnormalised ket.
#[derive(Debug, Clone, PartialEq)]
pub struct Ket(ComplexVector);

impl Ket {
    pub fn new(amplitudes: ComplexVector) -> Self {
        Self(amplitudes)
    }

    pub fn from_slice(amplitudes: &[Complex64]) -> Self {
        Self(ComplexVector::from_column_slice(amplitudes))
    }

    pub fn from_real(amplitudes: &[f64]) -> Self {
        Self(ComplexVector::from_iterator(
            amplitudes.len(),
            amplitudes.iter().map(|&x| Complex64::new(x, 0.0)),
        ))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(ComplexVector::zeros(dim))
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = ComplexVector::zeros(dim);
        v[index] = ONE;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitudes(&self) -> &ComplexVector {
        &self.0
    }

    pub fn into_inner(self) -> ComplexVector {
        self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Ket) -> Complex64 {
        self.0.dotc(&other.0)
    }

    /// `|self><self|`.
    pub fn projector(&self) -> ComplexMatrix {
        &self.0 * self.0.adjoint()
    }

    pub fn scaled(&self, factor: Complex64) -> Ket {
        Ket(&self.0 * factor)
    }

    pub fn normalized(&self) -> Option<Ket> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| Ket(&self.0 / Complex64::new(n, 0.0)))
    }

    /// Splits `self = phase * canonical` where the largest-magnitude
    /// component of `canonical` is real and positive.
    pub fn phase_canonical(&self) -> (Ket, Complex64) {
        match canonical_phase(self.0.as_slice()) {
            Some(phase) => (Ket(&self.0 * phase.conj()), phase),
            None => (self.clone(), ONE),
        }
    }
}

/// Unit phase of the first component whose magnitude is (up to rounding) the
/// largest one; `None` for the zero vector.
fn canonical_phase(v: &[Complex64]) -> Option<Complex64> {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return None;
    }
    let pivot = v.iter().find(|z| z.norm() >= max * (1.0 - 1e-9))?;
    Some(pivot / pivot.norm())
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn real_diagonal(values: &[f64]) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(values.len(), values.len());
    for (i, &v) in values.iter().enumerate() {
        m[(i, i)] = Complex64::new(v, 0.0);
    }
    m
}

pub fn frobenius_norm(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `max |M - M^dagger|` over entries.
pub fn hermiticity_defect(m: &ComplexMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn ensure_square(m: &ComplexMatrix, dim: usize) -> Result<()> {
    if m.nrows() == dim && m.ncols() == dim {
        Ok(())
    } else {
        Err(shape_err(
            format!("{dim}x{dim} matrix"),
            format!("{}x{}", m.nrows(), m.ncols()),
        ))
    }
}

pub fn ensure_hermitian(m: &ComplexMatrix, tol: &Tolerance) -> Result<()> {
    if !m.is_square() {
        return Err(shape_err("square matrix", format!("{}x{}", m.nrows(), m.ncols())));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(PomError::Numerics("non-finite matrix entry".into()));
    }
    let defect = hermiticity_defect(m);
    if defect <= tol.eps_eq * max_abs(m).max(1.0) {
        Ok(())
    } else {
        Err(PomError::Hermiticity { defect })
    }
}

/// `(M + M^dagger) / 2`.
pub fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Real part of the trace.
pub fn trace_re(m: &ComplexMatrix) -> f64 {
    m.diagonal().iter().map(|z| z.re).sum()
}

/// `<psi|M|psi>`.
pub fn expectation(m: &ComplexMatrix, psi: &ComplexVector) -> Complex64 {
    psi.dotc(&(m * psi))
}

/// Spectral decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, in the order of `values`.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, i: usize) -> Ket {
        Ket::new(self.vectors.column(i).into_owned())
    }

    /// `V f(diag(lambda)) V^dagger`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.dim();
        let mut scaled = self.vectors.clone();
        for (j, &lambda) in self.values.iter().enumerate() {
            let w = Complex64::new(f(lambda), 0.0);
            for i in 0..n {
                scaled[(i, j)] *= w;
            }
        }
        scaled * self.vectors.adjoint()
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map_spectrum(|x| x)
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }
}

/// Eigendecomposition of a Hermitian matrix with ascending eigenvalues and
/// eigenvectors whose largest-magnitude component is real and positive.
pub fn eig_hermitian(m: &ComplexMatrix, tol: &Tolerance) -> Result<HermitianEigen> {
    ensure_hermitian(m, tol)?;
    let n = m.nrows();
    if n == 0 {
        return Ok(HermitianEigen {
            values: Vec::new(),
            vectors: ComplexMatrix::zeros(0, 0),
        });
    }
    let sym = hermitian_part(m);
    let eig = sym
        .try_symmetric_eigen(f64::EPSILON, 1000 * n + 1000)
        .ok_or_else(|| PomError::Numerics(format!("eigensolver did not converge (n = {n})")))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut vectors = ComplexMatrix::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        values.push(eig.eigenvalues[src]);
        let col = eig.eigenvectors.column(src);
        let phase = canonical_phase(col.as_slice()).unwrap_or(ONE).conj();
        for i in 0..n {
            vectors[(i, dst)] = col[i] * phase;
        }
    }
    Ok(HermitianEigen { values, vectors })
}

/// Eigenvalues retained by the relative cutoff: `lambda > eps_rank * lambda_max`.
fn support_threshold(eig: &HermitianEigen, tol: &Tolerance) -> f64 {
    tol.eps_rank * eig.max().max(0.0)
}

fn check_psd(eig: &HermitianEigen, tol: &Tolerance) -> Result<()> {
    let lo = eig.min();
    if lo < -tol.eps_pos {
        Err(PomError::Positivity { eigenvalue: lo })
    } else {
        Ok(())
    }
}

/// Applies `f` to the retained part of the spectrum of a PSD matrix and
/// sends the rest to zero.
pub fn psd_function(m: &ComplexMatrix, tol: &Tolerance, f: impl Fn(f64) -> f64) -> Result<ComplexMatrix> {
    let eig = eig_hermitian(m, tol)?;
    check_psd(&eig, tol)?;
    let cut = support_threshold(&eig, tol);
    Ok(eig.map_spectrum(|l| if l > cut && l > 0.0 { f(l) } else { 0.0 }))
}

/// Pseudo-inverse of a PSD matrix on its numerical support.
pub fn pinv_psd(m: &ComplexMatrix, tol: &Tolerance) -> Result<ComplexMatrix> {
    psd_function(m, tol, |l| 1.0 / l)
}

/// Orthogonal projector onto the numerical support of a PSD matrix.
pub fn support_projector(m: &ComplexMatrix, tol: &Tolerance) -> Result<ComplexMatrix> {
    psd_function(m, tol, |_| 1.0)
}

pub fn psd_sqrt(m: &ComplexMatrix, tol: &Tolerance) -> Result<ComplexMatrix> {
    psd_function(m, tol, f64::sqrt)
}

/// Realises a Gram matrix: returns one vector per row of `g`, of dimension
/// `rank(g)`, with `<v_i|v_j> = g[(i, j)]`.
pub fn gram_embed(g: &ComplexMatrix, tol: &Tolerance) -> Result<Vec<Ket>> {
    let eig = eig_hermitian(g, tol)?;
    if eig.min() < -tol.eps_pos {
        return Err(PomError::NotAGram { eigenvalue: eig.min() });
    }
    let cut = support_threshold(&eig, tol);
    // Largest eigenvalues first.
    let kept: Vec<usize> = (0..eig.dim())
        .rev()
        .filter(|&r| eig.values[r] > cut && eig.values[r] > 0.0)
        .collect();
    let n = g.nrows();
    Ok((0..n)
        .map(|i| {
            Ket::new(ComplexVector::from_iterator(
                kept.len(),
                kept.iter().map(|&r| eig.vectors[(i, r)].conj() * eig.values[r].sqrt()),
            ))
        })
        .collect())
}

/// Stacks kets as the columns of a matrix.
pub fn columns(kets: &[Ket], dim: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(dim, kets.len());
    for (j, k) in kets.iter().enumerate() {
        m.set_column(j, k.amplitudes());
    }
    m
}

/// `i [X, Y]`.
pub fn commutator_i(x: &ComplexMatrix, y: &ComplexMatrix) -> ComplexMatrix {
    (x * y - y * x) * I
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn mat(rows: &[&[Complex64]]) -> ComplexMatrix {
        let n = rows.len();
        let m = rows[0].len();
        ComplexMatrix::from_fn(n, m, |i, j| rows[i][j])
    }

    #[test]
    fn eig_diagonal_sorts_ascending() {
        let tol = Tolerance::default();
        let eig = eig_hermitian(&real_diagonal(&[2.0, 1.0]), &tol).unwrap();
        assert_eq!(eig.values, vec![1.0, 2.0]);
        // permuted identity
        assert_abs_diff_eq!(eig.vectors[(1, 0)].re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(eig.vectors[(0, 1)].re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(eig.vectors[(0, 0)].norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn eig_pauli_x() {
        let tol = Tolerance::default();
        let m = mat(&[&[ZERO, ONE], &[ONE, ZERO]]);
        let eig = eig_hermitian(&m, &tol).unwrap();
        assert_abs_diff_eq!(eig.values[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(eig.values[1], 1.0, epsilon = 1e-14);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let expected = [[s, -s], [s, s]];
        for (col, want) in expected.iter().enumerate() {
            for row in 0..2 {
                assert_abs_diff_eq!(eig.vectors[(row, col)].re, want[row], epsilon = 1e-12);
                assert_abs_diff_eq!(eig.vectors[(row, col)].im, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn eig_identity_all_ones() {
        let eig = eig_hermitian(&identity(5), &Tolerance::default()).unwrap();
        assert!(eig.values.iter().all(|&l| (l - 1.0).abs() < 1e-14));
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = mat(&[&[ZERO, ONE], &[ZERO, ZERO]]);
        assert!(matches!(
            eig_hermitian(&m, &Tolerance::default()),
            Err(PomError::Hermiticity { .. })
        ));
    }

    #[test]
    fn eig_is_deterministic() {
        let m = mat(&[
            &[c(2.0), Complex64::new(0.5, 0.3), c(0.1)],
            &[Complex64::new(0.5, -0.3), c(-1.0), Complex64::new(0.0, 0.7)],
            &[c(0.1), Complex64::new(0.0, -0.7), c(0.4)],
        ]);
        let tol = Tolerance::default();
        let a = eig_hermitian(&m, &tol).unwrap();
        let b = eig_hermitian(&m, &tol).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.vectors, b.vectors);
        assert!(frobenius_norm(&(a.reconstruct() - &m)) < 1e-12);
    }

    #[test]
    fn pinv_examples() {
        let tol = Tolerance::default();
        let p = pinv_psd(&real_diagonal(&[2.0, 0.0]), &tol).unwrap();
        assert!(frobenius_norm(&(p - real_diagonal(&[0.5, 0.0]))) < 1e-14);
        let p = pinv_psd(&identity(3), &tol).unwrap();
        assert!(frobenius_norm(&(p - identity(3))) < 1e-14);
        let tight = Tolerance { eps_rank: 1e-12, ..tol };
        let p = pinv_psd(&real_diagonal(&[4.0, 1e-18]), &tight).unwrap();
        assert!(frobenius_norm(&(p - real_diagonal(&[0.25, 0.0]))) < 1e-14);
    }

    #[test]
    fn pinv_rejects_negative() {
        let err = pinv_psd(&real_diagonal(&[1.0, -0.1]), &Tolerance::default()).unwrap_err();
        assert!(matches!(err, PomError::Positivity { .. }));
    }

    #[test]
    fn pinv_of_zero_is_zero() {
        let p = pinv_psd(&ComplexMatrix::zeros(3, 3), &Tolerance::default()).unwrap();
        assert_eq!(max_abs(&p), 0.0);
    }

    #[test]
    fn gram_embed_examples() {
        let tol = Tolerance::default();
        let g = mat(&[&[c(1.0), c(0.5)], &[c(0.5), c(1.0)]]);
        let v = gram_embed(&g, &tol).unwrap();
        assert_eq!(v.len(), 2);
        assert_abs_diff_eq!(v[0].norm(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(v[1].norm(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(v[0].inner(&v[1]).re, 0.5, epsilon = 1e-14);

        // Cholesky oracle: L = [[1, 0], [0.5, sqrt(0.75)]] gives the same overlaps.
        let l = [[1.0, 0.0], [0.5, 0.75_f64.sqrt()]];
        let chol = |i: usize, j: usize| l[i][0] * l[j][0] + l[i][1] * l[j][1];
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(v[i].inner(&v[j]).re, chol(i, j), epsilon = 1e-14);
            }
        }

        let v = gram_embed(&identity(4), &tol).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(v[i].inner(&v[j]).norm(), want, epsilon = 1e-14);
            }
        }

        let ones = mat(&[&[c(1.0), c(1.0)], &[c(1.0), c(1.0)]]);
        let v = gram_embed(&ones, &tol).unwrap();
        assert_eq!(v[0].dim(), 1);
        assert_abs_diff_eq!((v[0].amplitudes()[0] - v[1].amplitudes()[0]).norm(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(v[0].norm(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn gram_embed_rejects_indefinite() {
        let g = mat(&[&[c(1.0), c(2.0)], &[c(2.0), c(1.0)]]);
        assert!(matches!(
            gram_embed(&g, &Tolerance::default()),
            Err(PomError::NotAGram { .. })
        ));
    }

    #[test]
    fn phase_canonical_splits() {
        let k = Ket::from_slice(&[Complex64::new(0.0, -0.2), Complex64::new(0.0, 0.9)]);
        let (canon, phase) = k.phase_canonical();
        assert_abs_diff_eq!(canon.amplitudes()[1].im, 0.0, epsilon = 1e-15);
        assert!(canon.amplitudes()[1].re > 0.0);
        assert!((canon.scaled(phase).amplitudes() - k.amplitudes()).norm() < 1e-15);
    }
}
