//! Extension of states and Hermitian operators from the system space `H` to
//! the outcome space `H_A` of a maximal POM, and projection back.
//!
//! With `K` the `dim x N` matrix whose columns are the POM kets, every map
//! here is a product with `K` or `K^dagger`:
//!
//! * `|psi_A) = K^dagger |psi>`
//! * `X_A = K^dagger X K`
//! * `E = K^dagger K`
//! * `|k> = K |k)`
//!
//! Completeness `K K^dagger = I` makes `K^dagger` an isometry, which is what
//! carries products and inner products across.

use crate::error::{shape_err, PomError, Result};
use crate::numerics::{
    ensure_hermitian, frobenius_norm, identity, real_diagonal, ComplexMatrix, Ket, Tolerance,
};
use crate::pom::{completeness_defect, MaximalPom, Observable, State};

/// The outcome space `H_A` of a maximal POM; basis order follows element order.
#[derive(Debug, Clone)]
pub struct ExtendedSpace {
    pom: MaximalPom,
    kets: ComplexMatrix,
}

/// The projector onto the physical sector of `H_A`.
#[derive(Debug, Clone, PartialEq)]
pub struct EProjector(pub ComplexMatrix);

impl EProjector {
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    /// `max(||E - E^dagger||_F, ||E^2 - E||_F)`.
    pub fn projector_defect(&self) -> f64 {
        let e = &self.0;
        frobenius_norm(&(e - e.adjoint())).max(frobenius_norm(&(e * e - e)))
    }
}

impl ExtendedSpace {
    pub fn new(pom: &MaximalPom, tol: &Tolerance) -> Result<Self> {
        let defect = completeness_defect(pom);
        if defect > tol.eps_eq {
            return Err(PomError::Invalid(format!(
                "POM is not complete (defect {defect:.3e}); cannot extend"
            )));
        }
        Ok(Self {
            kets: pom.ket_matrix(),
            pom: pom.clone(),
        })
    }

    pub fn pom(&self) -> &MaximalPom {
        &self.pom
    }

    pub fn source_dim(&self) -> usize {
        self.pom.dim()
    }

    pub fn outcome_count(&self) -> usize {
        self.pom.len()
    }

    pub fn outcomes(&self) -> Vec<f64> {
        self.pom.outcomes()
    }

    /// Columns are the kets `|a>`.
    pub fn ket_matrix(&self) -> &ComplexMatrix {
        &self.kets
    }

    fn check_source(&self, dim: usize) -> Result<()> {
        if dim == self.source_dim() {
            Ok(())
        } else {
            Err(shape_err(format!("dimension {}", self.source_dim()), dim))
        }
    }

    /// `|psi_A) = sum_a <a|psi> |a)`.
    pub fn extend_state(&self, psi: &State) -> Result<Ket> {
        self.check_source(psi.dim())?;
        Ok(Ket::new(self.kets.ad_mul(psi.vector())))
    }

    /// `A^ = sum_a a |a)(a|`.
    pub fn hat_operator(&self) -> ComplexMatrix {
        real_diagonal(&self.outcomes())
    }

    /// `E_{aa'} = <a|a'>`.
    pub fn e_projector(&self) -> EProjector {
        EProjector(self.kets.ad_mul(&self.kets))
    }

    /// `(X_A)_{aa'} = <a|X|a'>`.
    pub fn extend_hermitian(&self, x: &ComplexMatrix, tol: &Tolerance) -> Result<ComplexMatrix> {
        self.check_source(x.nrows())?;
        ensure_hermitian(x, tol)?;
        Ok(self.extend_operator(x))
    }

    /// [`Self::extend_hermitian`] without the Hermiticity check.
    pub fn extend_operator(&self, x: &ComplexMatrix) -> ComplexMatrix {
        self.kets.ad_mul(&(x * &self.kets))
    }

    /// `|k> = sum_a (a|k) |a>`.
    pub fn project_back(&self, k: &Ket) -> Result<Ket> {
        if k.dim() != self.outcome_count() {
            return Err(shape_err(format!("dimension {}", self.outcome_count()), k.dim()));
        }
        Ok(Ket::new(&self.kets * k.amplitudes()))
    }

    /// `|| sum_a |a><a| - I ||_F`.
    pub fn completeness_defect(&self) -> f64 {
        frobenius_norm(&(&self.kets * self.kets.adjoint() - identity(self.source_dim())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{eig_hermitian, ComplexVector};
    use crate::pom::{probabilities, MaximalPom};
    use crate::random::{random_hermitian, random_state, rng};
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    fn trine() -> MaximalPom {
        let w = (2.0_f64 / 3.0).sqrt();
        MaximalPom::from_pairs(
            (0..3)
                .map(|k| {
                    let t = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
                    (k as f64, Ket::from_real(&[w * t.cos(), w * t.sin()]))
                })
                .collect(),
        )
        .unwrap()
    }

    fn sigma_x_pom() -> MaximalPom {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        MaximalPom::from_pairs(vec![(1.0, Ket::from_real(&[s, s])), (-1.0, Ket::from_real(&[s, -s]))]).unwrap()
    }

    #[test]
    fn extend_state_examples() {
        let tol = Tolerance::default();
        let sp = ExtendedSpace::new(&sigma_x_pom(), &tol).unwrap();
        let psi = State::basis(2, 0);
        let ext = sp.extend_state(&psi).unwrap();
        assert_abs_diff_eq!(ext.norm(), 1.0, epsilon = 1e-15);

        let sp = ExtendedSpace::new(&trine(), &tol).unwrap();
        let ext = sp.extend_state(&psi).unwrap();
        assert_eq!(ext.dim(), 3);
        assert_abs_diff_eq!(ext.norm_sqr(), 1.0, epsilon = 1e-15);
        let e = sp.e_projector();
        let moved = e.matrix() * ext.amplitudes();
        assert!((moved - ext.amplitudes()).norm() < 1e-15);

        // psi orthogonal to the second trine ket
        let t = 2.0 * std::f64::consts::PI / 3.0;
        let orth = State::normalize(Ket::from_real(&[-t.sin(), t.cos()])).unwrap();
        let ext = sp.extend_state(&orth).unwrap();
        assert_abs_diff_eq!(ext.amplitudes()[1].norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn hat_operator_examples() {
        let tol = Tolerance::default();
        let sp = ExtendedSpace::new(&sigma_x_pom(), &tol).unwrap();
        assert_eq!(sp.hat_operator(), real_diagonal(&[1.0, -1.0]));
        let sp = ExtendedSpace::new(&trine(), &tol).unwrap();
        let ext = sp.extend_state(&State::basis(2, 0)).unwrap();
        let mean = ext.amplitudes().dotc(&(sp.hat_operator() * ext.amplitudes())).re;
        assert_abs_diff_eq!(mean, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn e_projector_examples() {
        let tol = Tolerance::default();
        let sp = ExtendedSpace::new(&sigma_x_pom(), &tol).unwrap();
        assert!(frobenius_norm(&(sp.e_projector().0 - identity(2))) < 1e-15);

        let sp = ExtendedSpace::new(&trine(), &tol).unwrap();
        let e = sp.e_projector();
        assert!(e.projector_defect() < 1e-14);
        let eig = eig_hermitian(e.matrix(), &tol).unwrap();
        let rank = eig.values.iter().filter(|&&l| l > 0.5).count();
        assert_eq!(rank, 2);
    }

    #[test]
    fn extend_hermitian_examples() {
        let tol = Tolerance::default();
        let sp = ExtendedSpace::new(&trine(), &tol).unwrap();
        let ia = sp.extend_hermitian(&identity(2), &tol).unwrap();
        assert!(frobenius_norm(&(ia - sp.e_projector().0)) < 1e-15);

        let sz = real_diagonal(&[1.0, -1.0]);
        let za = sp.extend_hermitian(&sz, &tol).unwrap();
        let mut r = rng(5);
        for _ in 0..100 {
            let psi = random_state(2, &mut r);
            let ext = sp.extend_state(&psi).unwrap();
            let lhs = ext.amplitudes().dotc(&(&za * ext.amplitudes())).re;
            let rhs = psi.vector().dotc(&(&sz * psi.vector())).re;
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-13);
        }

        let bad = ComplexMatrix::from_row_slice(
            2,
            2,
            &[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)],
        );
        assert!(matches!(sp.extend_hermitian(&bad, &tol), Err(PomError::Hermiticity { .. })));
        assert!(matches!(sp.extend_hermitian(&identity(3), &tol), Err(PomError::Shape { .. })));
    }

    #[test]
    fn project_back_examples() {
        let tol = Tolerance::default();
        let pom = trine();
        let sp = ExtendedSpace::new(&pom, &tol).unwrap();
        for (i, e) in pom.elements().iter().enumerate() {
            let k = sp.project_back(&Ket::basis(3, i)).unwrap();
            assert!((k.amplitudes() - e.ket.amplitudes()).norm() < 1e-15);
        }

        let mut r = rng(8);
        for _ in 0..20 {
            let psi = random_state(2, &mut r);
            let phi = random_state(2, &mut r);
            let psi_a = sp.extend_state(&psi).unwrap();
            let phi_a = sp.extend_state(&phi).unwrap();
            let back = sp.project_back(&psi_a).unwrap();
            assert_abs_diff_eq!((back.inner(phi.ket()) - psi_a.inner(&phi_a)).norm(), 0.0, epsilon = 1e-14);
            assert!((back.amplitudes() - psi.vector()).norm() < 1e-14);
        }

        // Any orthonormal basis of H_A maps to a complete set of kets on H.
        let basis = eig_hermitian(&random_hermitian(3, &mut r), &tol).unwrap();
        let mut sum = ComplexMatrix::zeros(2, 2);
        for j in 0..3 {
            let k = sp.project_back(&basis.vector(j)).unwrap();
            sum += k.projector();
        }
        assert!(frobenius_norm(&(sum - identity(2))) < 1e-10);
    }

    #[test]
    fn probability_transport() {
        let tol = Tolerance::default();
        let pom = trine();
        let sp = ExtendedSpace::new(&pom, &tol).unwrap();
        let mut r = rng(3);
        for _ in 0..20 {
            let psi = random_state(2, &mut r);
            let ext = sp.extend_state(&psi).unwrap();
            let p = probabilities(&pom, &psi).unwrap();
            for (a, pa) in p.iter().enumerate() {
                assert_abs_diff_eq!(ext.amplitudes()[a].norm_sqr(), *pa, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn algebra_is_preserved_on_the_physical_sector() {
        let tol = Tolerance::default();
        let sp = ExtendedSpace::new(&trine(), &tol).unwrap();
        let mut r = rng(4);
        for _ in 0..20 {
            let x = random_hermitian(2, &mut r);
            let y = random_hermitian(2, &mut r);
            let psi = random_state(2, &mut r);
            let xy_psi: ComplexVector = &x * &y * psi.vector();
            let lhs = sp.extend_state(&State::normalize(Ket::new(xy_psi.clone())).unwrap()).unwrap();
            let lhs = lhs.amplitudes() * Complex64::new(xy_psi.norm(), 0.0);
            let xa = sp.extend_hermitian(&x, &tol).unwrap();
            let ya = sp.extend_hermitian(&y, &tol).unwrap();
            let rhs = xa * ya * sp.extend_state(&psi).unwrap().amplitudes();
            assert!((lhs - rhs).norm() < 1e-9);
        }
    }

    #[test]
    fn rejects_incomplete_pom() {
        let pom = MaximalPom::from_pairs(vec![(0.0, Ket::from_real(&[1.0, 0.0]))]).unwrap();
        assert!(ExtendedSpace::new(&pom, &Tolerance::default()).is_err());
    }
}
