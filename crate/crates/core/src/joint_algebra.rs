//! Combinations of two POMs on their joint space, the commutator and the
//! generalised uncertainty relation.

use num_complex::Complex64;

use crate::algebra::{check_slots, spectral_pom, CombinedPom};
use crate::error::{PomError, Result};
use crate::expr::{Bindings, OpExpr, Slot};
use crate::joint::{build_joint_space, JointGram, JointSpace, Via};
use crate::numerics::{eig_hermitian, ensure_hermitian, frobenius_norm, ComplexMatrix, Tolerance, I};
use crate::pom::{variance, MaximalPom, State};

impl JointSpace {
    fn bindings<'a>(&'a self, xs: &'a [ComplexMatrix]) -> Bindings<'a> {
        Bindings { dim: self.joint_dim(), a: Some(self.a_hat()), b: Some(self.b_hat()), xs }
    }

    /// `K^ = g(A^, B^)` diagonalised; eigenvectors are mapped back through
    /// the first POM and checked against the second.
    pub fn combine(&self, g: &OpExpr, tol: &Tolerance) -> Result<CombinedPom> {
        if !g.is_hermitian() {
            return Err(PomError::Hermiticity { defect: f64::NAN });
        }
        check_slots(g, |s| matches!(s, Slot::A | Slot::B))?;
        let k_hat = g.eval(&self.bindings(&[]))?;
        ensure_hermitian(&k_hat, tol)?;
        let eig = eig_hermitian(&k_hat, tol)?;
        let back_a = self.isometry(Via::A).adjoint();
        let back_b = self.isometry(Via::B).adjoint();
        let gap = frobenius_norm(&((&back_a - &back_b) * &eig.vectors));
        if gap > tol.eps_eq * (self.joint_dim() as f64).sqrt().max(1.0) {
            return Err(PomError::RouteMismatch { what: "back-projection via A and via B".into(), gap });
        }
        Ok(CombinedPom {
            pom: spectral_pom(&eig, &back_a, tol)?,
            expr: g.clone(),
            operands: vec!["A".into(), "B".into()],
        })
    }

    /// `(psi_AB| g(A^, B^, X1_AB, ...) |psi_AB)`; `g` need not be Hermitian.
    pub fn expect(&self, g: &OpExpr, xs: &[ComplexMatrix], psi: &State, tol: &Tolerance) -> Result<Complex64> {
        let n = xs.len();
        check_slots(g, |s| match s {
            Slot::A | Slot::B => true,
            Slot::X(k) => k >= 1 && k <= n,
        })?;
        let mut extended = Vec::with_capacity(n);
        for x in xs {
            ensure_hermitian(x, tol)?;
            extended.push(self.extend_operator(x, tol)?);
        }
        let k_hat = g.eval(&self.bindings(&extended))?;
        let ext = self.extend_state(psi, Via::A)?;
        Ok(ext.amplitudes().dotc(&(k_hat * ext.amplitudes())))
    }
}

/// Combination `g(A, B)` of two maximal POMs as a new POM.
pub fn combine(a: &MaximalPom, b: &MaximalPom, g: &OpExpr, tol: &Tolerance) -> Result<CombinedPom> {
    build_joint_space(a, b, tol)?.combine(g, tol)
}

/// `<g(A, B)> = (psi_AB| g(A^, B^) |psi_AB)`, complex for non-Hermitian `g`.
pub fn expect_joint(a: &MaximalPom, b: &MaximalPom, g: &OpExpr, psi: &State, tol: &Tolerance) -> Result<Complex64> {
    build_joint_space(a, b, tol)?.expect(g, &[], psi, tol)
}

/// `<g(A, B, X1, ..., Xn)>` with each Hermitian `Xk` extended to `H_AB`.
pub fn expect_chain(
    a: &MaximalPom,
    b: &MaximalPom,
    xs: &[ComplexMatrix],
    g: &OpExpr,
    psi: &State,
    tol: &Tolerance,
) -> Result<Complex64> {
    build_joint_space(a, b, tol)?.expect(g, xs, psi, tol)
}

impl JointGram {
    /// `<i[A, B]>`, from `i<psi|A~ C0^+ B~ - B~ C0^+ A~|psi>` on `H` and from
    /// the joint-space inner products `(a|b)`; returns the former.
    pub fn commutator_expect(&self, psi: &State, tol: &Tolerance) -> Result<Complex64> {
        let joint = self.product_expectation(psi, |v| v, |v| v)?;
        let via_joint = I * (joint - joint.conj());

        let dec = &self.decomposition;
        let v = psi.vector();
        let (at, bt) = self.tilde_means();
        let ab = at.ad_mul(v).dotc(&(&dec.c0_pinv * (bt * v)));
        let ba = bt.ad_mul(v).dotc(&(&dec.c0_pinv * (at * v)));
        let closed = I * (ab - ba);

        let scale = self.outcome_scale().max(1.0);
        let gap = (closed - via_joint).norm();
        if gap > tol.eps_eq * scale {
            return Err(PomError::RouteMismatch { what: "commutator closed form vs joint space".into(), gap });
        }
        Ok(closed)
    }

    fn outcome_scale(&self) -> f64 {
        let max = |set: &[crate::joint::TildeElement]| set.iter().fold(0.0_f64, |m, t| m.max(t.outcome.abs()));
        max(&self.decomposition.only_a) * max(&self.decomposition.only_b)
    }

    pub fn uncertainty(&self, a: &MaximalPom, b: &MaximalPom, psi: &State, tol: &Tolerance) -> Result<UncertaintyReport> {
        let commutator = self.commutator_expect(psi, tol)?;
        let delta_a = variance(a, psi)?.max(0.0).sqrt();
        let delta_b = variance(b, psi)?.max(0.0).sqrt();
        let bound = 0.5 * commutator.norm();
        Ok(UncertaintyReport {
            delta_a,
            delta_b,
            bound,
            commutator_expectation: commutator,
            satisfied: delta_a * delta_b >= bound - tol.eps_eq,
        })
    }
}

/// `<i[A, B]>` for two POMs; real up to rounding.
pub fn commutator_expect(a: &MaximalPom, b: &MaximalPom, psi: &State, tol: &Tolerance) -> Result<Complex64> {
    JointGram::new(a, b, tol)?.commutator_expect(psi, tol)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyReport {
    pub delta_a: f64,
    pub delta_b: f64,
    pub bound: f64,
    pub commutator_expectation: Complex64,
    pub satisfied: bool,
}

/// `Delta A Delta B >= (1/2) |<psi|A~ C0^+ B~ - B~ C0^+ A~|psi>|`.
pub fn uncertainty(a: &MaximalPom, b: &MaximalPom, psi: &State, tol: &Tolerance) -> Result<UncertaintyReport> {
    JointGram::new(a, b, tol)?.uncertainty(a, b, psi, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{identity, Ket};
    use crate::pom::{mean_operator, probabilities};
    use crate::random::{random_hermitian, random_maximal_pom, random_pom_pair, random_projective_pom, random_state, rng};
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn sigma_z() -> MaximalPom {
        MaximalPom::from_pairs(vec![(1.0, Ket::basis(2, 0)), (-1.0, Ket::basis(2, 1))]).unwrap()
    }

    fn sigma_x() -> MaximalPom {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        MaximalPom::from_pairs(vec![(1.0, Ket::from_real(&[h, h])), (-1.0, Ket::from_real(&[h, -h]))]).unwrap()
    }

    fn sigma_y() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[Complex64::new(0.0, 0.0), -I, I, Complex64::new(0.0, 0.0)])
    }

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

    fn expr(s: &str) -> OpExpr {
        OpExpr::parse(s).unwrap()
    }

    #[test]
    fn difference_with_itself_is_point_mass() {
        let tol = Tolerance::default();
        let mut r = rng(1);
        let a = random_maximal_pom(3, 6, &mut r);
        let c = combine(&a, &a, &expr("a - b"), &tol).unwrap();
        let psi = random_state(3, &mut r);
        let dist = c.distribution(&psi, &tol).unwrap();
        let at_zero: f64 = dist.iter().filter(|(k, _)| k.abs() < 1e-9).map(|(_, p)| p).sum();
        assert!(at_zero >= 1.0 - 1e-9);
        assert_abs_diff_eq!(c.moment(2, &psi).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn pauli_sum_is_spectral() {
        let tol = Tolerance::default();
        let c = combine(&sigma_z(), &sigma_x(), &expr("a + b"), &tol).unwrap();
        let k = c.outcomes();
        assert_abs_diff_eq!(k[0], -2.0_f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(k[1], 2.0_f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn trine_sigma_z_moments() {
        let tol = Tolerance::default();
        let js = build_joint_space(&trine(), &sigma_z(), &tol).unwrap();
        let c = js.combine(&expr("sym(a, b)"), &tol).unwrap();
        let k_hat = (js.a_hat() * js.b_hat() + js.b_hat() * js.a_hat()) * Complex64::new(0.5, 0.0);
        let mut r = rng(2);
        for _ in 0..10 {
            let psi = random_state(2, &mut r);
            let ext = js.extend_state(&psi, Via::A).unwrap();
            let m1 = ext.amplitudes().dotc(&(&k_hat * ext.amplitudes())).re;
            let m2 = ext.amplitudes().dotc(&(&k_hat * &k_hat * ext.amplitudes())).re;
            assert_abs_diff_eq!(c.moment(1, &psi).unwrap(), m1, epsilon = 1e-9);
            assert_abs_diff_eq!(c.moment(2, &psi).unwrap(), m2, epsilon = 1e-9);
        }
    }

    #[test]
    fn expect_joint_examples() {
        let tol = Tolerance::default();
        let mut r = rng(3);
        let (a, b) = random_pom_pair(3, 5, 1, 4, &mut r);
        let psi = random_state(3, &mut r);
        let mean: f64 = probabilities(&a, &psi).unwrap().iter().zip(a.outcomes()).map(|(p, o)| p * o).sum();
        assert_abs_diff_eq!(expect_joint(&a, &b, &expr("a"), &psi, &tol).unwrap().re, mean, epsilon = 1e-12);

        let z = expect_joint(&sigma_z(), &sigma_x(), &expr("comm(a, b)"), &State::basis(2, 0), &tol).unwrap();
        assert_abs_diff_eq!(z.norm(), 0.0, epsilon = 1e-12);

        let d = expect_joint(&a, &a, &expr("a - b"), &psi, &tol).unwrap();
        assert_abs_diff_eq!(d.norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn product_with_trivial_c0_is_mean_operator_product() {
        let tol = Tolerance::default();
        let mut r = rng(4);
        let a = random_maximal_pom(3, 5, &mut r);
        let b = random_maximal_pom(3, 4, &mut r);
        let psi = random_state(3, &mut r);
        let got = expect_joint(&a, &b, &expr("a*b"), &psi, &tol).unwrap();
        let ab = mean_operator(&a, |v| v).unwrap() * mean_operator(&b, |v| v).unwrap();
        let want = psi.vector().dotc(&(ab * psi.vector()));
        assert_abs_diff_eq!((got - want).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn commutator_examples() {
        let tol = Tolerance::default();
        let mut r = rng(5);
        let a = random_maximal_pom(3, 5, &mut r);
        let psi = random_state(3, &mut r);
        assert_abs_diff_eq!(commutator_expect(&a, &a, &psi, &tol).unwrap().norm(), 0.0, epsilon = 1e-12);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let psi = State::normalize(Ket::from_slice(&[Complex64::new(h, 0.0), Complex64::new(0.0, h)])).unwrap();
        let z = commutator_expect(&sigma_z(), &sigma_x(), &psi, &tol).unwrap();
        assert_abs_diff_eq!(z.re, -2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(z.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn commutator_matches_embedded_space() {
        let tol = Tolerance::default();
        let mut r = rng(6);
        for _ in 0..20 {
            let (a, b) = random_pom_pair(4, 6, 2, 5, &mut r);
            let psi = random_state(4, &mut r);
            let closed = commutator_expect(&a, &b, &psi, &tol).unwrap();
            let embedded = expect_joint(&a, &b, &expr("comm(a, b)"), &psi, &tol).unwrap();
            assert_abs_diff_eq!((closed - embedded).norm(), 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn uncertainty_examples() {
        let tol = Tolerance::default();
        let mut r = rng(7);
        let a = random_maximal_pom(3, 5, &mut r);
        let psi = random_state(3, &mut r);
        let rep = uncertainty(&a, &a, &psi, &tol).unwrap();
        assert!(rep.bound < 1e-12 && rep.satisfied);

        let rep = uncertainty(&sigma_z(), &sigma_x(), &State::basis(2, 0), &tol).unwrap();
        assert_abs_diff_eq!(rep.delta_a, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.delta_b, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.bound, 0.0, epsilon = 1e-12);

        for _ in 0..200 {
            let d = r.random_range(2..=5);
            let (a, b) = random_pom_pair(d, d + 2, 1, d + 1, &mut r);
            let psi = random_state(d, &mut r);
            assert!(uncertainty(&a, &b, &psi, &tol).unwrap().satisfied);
        }
    }

    #[test]
    fn chain_examples() {
        let tol = Tolerance::default();
        let mut r = rng(8);
        let (a, b) = random_pom_pair(3, 5, 1, 4, &mut r);
        let psi = random_state(3, &mut r);
        let g = expr("sym(a, b) + a");
        assert_eq!(
            expect_chain(&a, &b, &[], &g, &psi, &tol).unwrap(),
            expect_joint(&a, &b, &g, &psi, &tol).unwrap()
        );

        let pa = random_projective_pom(3, &mut r);
        let pb = random_projective_pom(3, &mut r);
        let x = random_hermitian(3, &mut r);
        let got = expect_chain(&pa, &pb, &[x.clone()], &expr("a + b + x"), &psi, &tol).unwrap();
        let op = mean_operator(&pa, |v| v).unwrap() + mean_operator(&pb, |v| v).unwrap() + &x;
        assert_abs_diff_eq!((got - psi.vector().dotc(&(op * psi.vector()))).norm(), 0.0, epsilon = 1e-10);

    }

    fn fixed_state() -> State {
        State::normalize(Ket::from_slice(&[Complex64::new(0.6, 0.1), Complex64::new(-0.3, 0.7)])).unwrap()
    }

    #[test]
    fn chain_sym_matches_operator_oracle() {
        let tol = Tolerance::default();
        let t = trine();
        // <sym(a, x)> = Re <psi|A_bar X|psi> since (a|X_AB|psi_AB) = <a|X|psi>.
        let psi = fixed_state();
        let got = expect_chain(&t, &sigma_z(), &[sigma_y()], &expr("sym(a, x) + b"), &psi, &tol).unwrap();
        let v = psi.vector();
        let abar = mean_operator(&t, |v| v).unwrap();
        let bbar = mean_operator(&sigma_z(), |v| v).unwrap();
        let want = v.dotc(&(abar * sigma_y() * v)).re + v.dotc(&(bbar * v)).re;
        assert_abs_diff_eq!(got.re, want, epsilon = 1e-9);
        assert_abs_diff_eq!(got.im, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn chain_rejects_non_hermitian_and_unbound() {
        let tol = Tolerance::default();
        let psi = State::basis(2, 0);
        let bad = identity(2) * I;
        assert!(matches!(
            expect_chain(&trine(), &sigma_z(), &[bad], &expr("x"), &psi, &tol),
            Err(PomError::Hermiticity { .. })
        ));
        assert!(matches!(
            expect_chain(&trine(), &sigma_z(), &[], &expr("x2"), &psi, &tol),
            Err(PomError::UnboundSlot(_))
        ));
    }
}
