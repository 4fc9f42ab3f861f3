//! Algebraic combination `g(A, X)` of a maximal POM with a Hermitian
//! observable, and the deviation and distance built on it.

use crate::error::{shape_err, PomError, Result};
use crate::expr::{Bindings, OpExpr, Slot};
use crate::naimark::ExtendedSpace;
use crate::numerics::{
    eig_hermitian, ensure_hermitian, HermitianEigen, frobenius_norm, identity, trace_re, ComplexMatrix, Ket, Tolerance,
};
use crate::pom::{mean_operator, probabilities, MaximalElement, MaximalPom, Observable, State};

/// The POM `{|k><k|}` of a combination, with the expression that produced it.
///
/// Kets of eigenvectors that live outside the physical sector are zero; they
/// are kept so that element `i` always corresponds to eigenvector `i`.
#[derive(Debug, Clone)]
pub struct CombinedPom {
    pub pom: MaximalPom,
    pub expr: OpExpr,
    pub operands: Vec<String>,
}

impl CombinedPom {
    pub fn outcomes(&self) -> Vec<f64> {
        self.pom.outcomes()
    }

    pub fn probabilities(&self, psi: &State) -> Result<Vec<f64>> {
        probabilities(&self.pom, psi)
    }

    /// `sum_k k^m p(k|psi)`.
    pub fn moment(&self, m: i32, psi: &State) -> Result<f64> {
        Ok(self
            .probabilities(psi)?
            .iter()
            .zip(self.pom.elements())
            .map(|(p, e)| p * e.outcome.powi(m))
            .sum())
    }

    /// Outcome distribution with numerically equal outcomes merged, sorted by
    /// outcome. Outcomes closer than `eps_eq * max(1, |k|)` share a bin.
    pub fn distribution(&self, psi: &State, tol: &Tolerance) -> Result<Vec<(f64, f64)>> {
        let p = self.probabilities(psi)?;
        let mut pairs: Vec<(f64, f64)> = self.pom.elements().iter().map(|e| e.outcome).zip(p).collect();
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
        Ok(group_outcomes(&pairs, tol))
    }

    /// `|| sum_k |k><k| - I ||_F`.
    pub fn completeness_defect(&self) -> f64 {
        crate::pom::completeness_defect(&self.pom)
    }
}

/// Merges adjacent outcomes of a sorted list; the bin keeps its first outcome.
pub(crate) fn group_outcomes(sorted: &[(f64, f64)], tol: &Tolerance) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut anchor = f64::NAN;
    for &(k, p) in sorted {
        match out.last_mut() {
            Some(last) if (k - anchor).abs() <= tol.eps_eq * k.abs().max(1.0) => last.1 += p,
            _ => {
                anchor = k;
                out.push((k, p));
            }
        }
    }
    out
}

pub(crate) fn check_slots(g: &OpExpr, allowed: impl Fn(Slot) -> bool) -> Result<()> {
    match g.slots().into_iter().find(|s| !allowed(*s)) {
        Some(s) => Err(PomError::UnboundSlot(s.to_string())),
        None => Ok(()),
    }
}

/// Maps each eigenvector of a combination back through `back`
/// (`|k> = sum_a (a|k) |a>`) and checks completeness.
pub(crate) fn spectral_pom(eig: &HermitianEigen, back: &ComplexMatrix, tol: &Tolerance) -> Result<MaximalPom> {
    let dim = back.nrows();
    let kets = back * &eig.vectors;
    let elements = eig
        .values
        .iter()
        .enumerate()
        .map(|(j, &outcome)| MaximalElement {
            outcome,
            ket: Ket::new(kets.column(j).into_owned()),
        })
        .collect();
    let pom = MaximalPom::new(dim, elements)?;
    let defect = crate::pom::completeness_defect(&pom);
    if defect > tol.eps_eq {
        return Err(PomError::Numerics(format!(
            "combined POM is not complete (defect {defect:.3e})"
        )));
    }
    Ok(pom)
}

/// `g(A, X)`: builds `K^ = g(A^, X_A)` on `H_A`, diagonalises it and maps
/// the eigenvectors back to kets on `H`. Slots: `a` and `x`.
pub fn combine_with_hermitian(
    a: &MaximalPom,
    x: &ComplexMatrix,
    g: &OpExpr,
    tol: &Tolerance,
) -> Result<CombinedPom> {
    if !g.is_hermitian() {
        return Err(PomError::Hermiticity { defect: f64::NAN });
    }
    check_slots(g, |s| matches!(s, Slot::A | Slot::X(1)))?;
    let space = ExtendedSpace::new(a, tol)?;
    let k_hat = evaluate_on_extension(&space, x, g, tol)?;
    ensure_hermitian(&k_hat, tol)?;
    Ok(CombinedPom {
        pom: spectral_pom(&eig_hermitian(&k_hat, tol)?, space.ket_matrix(), tol)?,
        expr: g.clone(),
        operands: vec!["A".into(), "X".into()],
    })
}

fn evaluate_on_extension(
    space: &ExtendedSpace,
    x: &ComplexMatrix,
    g: &OpExpr,
    tol: &Tolerance,
) -> Result<ComplexMatrix> {
    let a_hat = space.hat_operator();
    let x_a = space.extend_hermitian(x, tol)?;
    let xs = [x_a];
    g.eval(&Bindings {
        dim: space.outcome_count(),
        a: Some(&a_hat),
        b: None,
        xs: &xs,
    })
}

/// `<g(A, X)> = (psi_A| g(A^, X_A) |psi_A)`, without diagonalising.
pub fn expect_g(a: &MaximalPom, x: &ComplexMatrix, g: &OpExpr, psi: &State, tol: &Tolerance) -> Result<f64> {
    if !g.is_hermitian() {
        return Err(PomError::Hermiticity { defect: f64::NAN });
    }
    check_slots(g, |s| matches!(s, Slot::A | Slot::X(1)))?;
    let space = ExtendedSpace::new(a, tol)?;
    let k_hat = evaluate_on_extension(&space, x, g, tol)?;
    let ext = space.extend_state(psi)?;
    Ok(ext.amplitudes().dotc(&(k_hat * ext.amplitudes())).re)
}

fn check_dims(a: &MaximalPom, x: &ComplexMatrix, tol: &Tolerance) -> Result<()> {
    if x.nrows() != a.dim() {
        return Err(shape_err(format!("{0}x{0} observable", a.dim()), format!("{}x{}", x.nrows(), x.ncols())));
    }
    ensure_hermitian(x, tol)
}

fn mean_and_second(a: &MaximalPom) -> Result<(ComplexMatrix, ComplexMatrix)> {
    Ok((mean_operator(a, |v| v)?, mean_operator(a, |v| v * v)?))
}

fn scale_of(a: &MaximalPom, x: &ComplexMatrix) -> f64 {
    let amax = a.outcomes().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    (frobenius_norm(x) + amax).powi(2).max(1.0)
}

/// Statistical deviation `<(X - A)^2>`.
///
/// Evaluated as `<psi|(X - A_bar)^2|psi> + <psi|A2_bar - A_bar^2|psi>` and as
/// `sum_a |<a|(X - a)|psi>|^2`; the first is returned after both agree.
pub fn deviation(a: &MaximalPom, x: &ComplexMatrix, psi: &State, tol: &Tolerance) -> Result<f64> {
    check_dims(a, x, tol)?;
    if psi.dim() != a.dim() {
        return Err(shape_err(format!("state of dimension {}", a.dim()), psi.dim()));
    }
    let (mean, second) = mean_and_second(a)?;
    let v = psi.vector();
    let diff = x - &mean;
    let mean_v = &mean * v;
    let operator_form = (&diff * v).norm_squared() + (v.dotc(&(&second * v)).re - mean_v.norm_squared());

    let xv = x * v;
    let outcome_form: f64 = a
        .elements()
        .iter()
        .map(|e| {
            let k = e.ket.amplitudes();
            (k.dotc(&xv) - k.dotc(v) * e.outcome).norm_sqr()
        })
        .sum();

    let gap = (operator_form - outcome_form).abs();
    if gap > tol.eps_eq * scale_of(a, x) {
        return Err(PomError::RouteMismatch { what: "deviation closed forms".into(), gap });
    }
    Ok(operator_form)
}

/// `d(A, X) = {tr[E (A^ - X_A)^2 E]}^{1/2}`, cross-checked against
/// `tr[(X - A_bar)^2 + A2_bar - A_bar^2]` on `H`.
pub fn distance(a: &MaximalPom, x: &ComplexMatrix, tol: &Tolerance) -> Result<f64> {
    check_dims(a, x, tol)?;
    let space = ExtendedSpace::new(a, tol)?;
    // The trace runs over the physical sector E H_A; outside it A^ carries
    // weight sum_a a^2 (1 - <a|a>) that no operator on H can reach.
    let e = space.e_projector();
    let extended = frobenius_norm(&((space.hat_operator() - space.extend_hermitian(x, tol)?) * e.matrix())).powi(2);

    let (mean, second) = mean_and_second(a)?;
    let diff = x - &mean;
    let on_h = frobenius_norm(&diff).powi(2) + trace_re(&(&second - &mean * &mean));

    let gap = (extended - on_h).abs();
    if gap > tol.eps_eq * scale_of(a, x) * (a.len() as f64) {
        return Err(PomError::RouteMismatch { what: "distance trace forms".into(), gap });
    }
    Ok(extended.max(0.0).sqrt())
}

/// Hilbert-Schmidt distance `||X - Y||_F` between Hermitian operators.
pub fn hs_distance(x: &ComplexMatrix, y: &ComplexMatrix) -> f64 {
    frobenius_norm(&(x - y))
}

/// `min_X d(A, X) = d(A, A_bar)`, returned with the minimiser `A_bar`.
///
/// Computed as `(1/2) sum_{a,a'} (a - a')^2 |<a|a'>|^2`, which equals
/// `tr[A2_bar - A_bar^2]` by completeness and has no cancellation for
/// projective POMs; the trace form is checked against it.
pub fn min_distance(a: &MaximalPom, tol: &Tolerance) -> Result<(f64, ComplexMatrix)> {
    let (mean, second) = mean_and_second(a)?;
    let trace_form = trace_re(&(&second - &mean * &mean));
    let el = a.elements();
    let mut pairwise = 0.0;
    for i in 0..el.len() {
        for j in i + 1..el.len() {
            pairwise += (el[i].outcome - el[j].outcome).powi(2) * el[i].ket.inner(&el[j].ket).norm_sqr();
        }
    }
    let gap = (trace_form - pairwise).abs();
    if gap > tol.eps_eq * scale_of(a, &identity(0)) * (a.len() as f64) {
        return Err(PomError::RouteMismatch { what: "minimum distance forms".into(), gap });
    }
    Ok((pairwise.sqrt(), mean))
}

/// `(A^, X_A)` on `H_A`, exposed for callers that want to build their own
/// expressions.
pub fn extended_operators(
    a: &MaximalPom,
    x: &ComplexMatrix,
    tol: &Tolerance,
) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let space = ExtendedSpace::new(a, tol)?;
    Ok((space.hat_operator(), space.extend_hermitian(x, tol)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::real_diagonal;
    use crate::random::{random_hermitian, random_maximal_pom, random_projective_pom, random_state, rng};
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    fn trine(outcomes: [f64; 3]) -> MaximalPom {
        let w = (2.0_f64 / 3.0).sqrt();
        MaximalPom::from_pairs(
            (0..3)
                .map(|k| {
                    let t = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
                    (outcomes[k], Ket::from_real(&[w * t.cos(), w * t.sin()]))
                })
                .collect(),
        )
        .unwrap()
    }

    fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(
            2,
            2,
            &[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        )
    }

    fn operator_of(a: &MaximalPom) -> ComplexMatrix {
        mean_operator(a, |v| v).unwrap()
    }

    #[test]
    fn projective_sum_is_spectral() {
        let tol = Tolerance::default();
        let mut r = rng(1);
        let a = random_projective_pom(3, &mut r);
        let x = random_hermitian(3, &mut r);
        let c = combine_with_hermitian(&a, &x, &OpExpr::parse("a + x").unwrap(), &tol).unwrap();
        let direct = eig_hermitian(&(operator_of(&a) + &x), &tol).unwrap();
        for (got, want) in c.outcomes().iter().zip(&direct.values) {
            assert_abs_diff_eq!(got, want, epsilon = 1e-10);
        }
        let psi = random_state(3, &mut r);
        let p = c.probabilities(&psi).unwrap();
        for j in 0..3 {
            let want = direct.vector(j).inner(psi.ket()).norm_sqr();
            assert_abs_diff_eq!(p[j], want, epsilon = 1e-10);
        }
    }

    #[test]
    fn second_slot_alone_reproduces_x() {
        let tol = Tolerance::default();
        let mut r = rng(2);
        let a = random_maximal_pom(3, 6, &mut r);
        let x = random_hermitian(3, &mut r);
        let g = OpExpr::parse("x").unwrap();
        let c = combine_with_hermitian(&a, &x, &g, &tol).unwrap();
        for _ in 0..10 {
            let psi = random_state(3, &mut r);
            let want = psi.vector().dotc(&(&x * psi.vector())).re;
            assert_abs_diff_eq!(expect_g(&a, &x, &g, &psi, &tol).unwrap(), want, epsilon = 1e-12);
            assert_abs_diff_eq!(c.moment(1, &psi).unwrap(), want, epsilon = 1e-10);
        }
    }

    #[test]
    fn first_slot_alone_is_outcome_mean() {
        let tol = Tolerance::default();
        let a = trine([0.0, 1.0, 2.0]);
        let psi = State::basis(2, 0);
        let got = expect_g(&a, &pauli_x(), &OpExpr::parse("a").unwrap(), &psi, &tol).unwrap();
        assert_abs_diff_eq!(got, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn trine_difference_moments() {
        let tol = Tolerance::default();
        let a = trine([0.0, 1.0, 2.0]);
        let sz = real_diagonal(&[1.0, -1.0]);
        let g = OpExpr::parse("a - x").unwrap();
        let c = combine_with_hermitian(&a, &sz, &g, &tol).unwrap();
        assert!(c.completeness_defect() < 1e-12);
        let space = ExtendedSpace::new(&a, &tol).unwrap();
        let k = space.hat_operator() - space.extend_hermitian(&sz, &tol).unwrap();
        let mut r = rng(3);
        for _ in 0..10 {
            let psi = random_state(2, &mut r);
            let ext = space.extend_state(&psi).unwrap();
            let m1 = ext.amplitudes().dotc(&(&k * ext.amplitudes())).re;
            let m2 = ext.amplitudes().dotc(&(&k * &k * ext.amplitudes())).re;
            assert_abs_diff_eq!(c.moment(1, &psi).unwrap(), m1, epsilon = 1e-10);
            assert_abs_diff_eq!(c.moment(2, &psi).unwrap(), m2, epsilon = 1e-10);
        }
    }

    #[test]
    fn commutator_dual_route() {
        let tol = Tolerance::default();
        let a = trine([0.0, 1.0, 2.0]);
        let g = OpExpr::parse("comm(a, x)").unwrap();
        let psi = State::basis(2, 0);
        let shortcut = expect_g(&a, &pauli_x(), &g, &psi, &tol).unwrap();
        let c = combine_with_hermitian(&a, &pauli_x(), &g, &tol).unwrap();
        assert_abs_diff_eq!(shortcut, c.moment(1, &psi).unwrap(), epsilon = 1e-9);
    }

    #[test]
    fn rejects_non_hermitian_and_foreign_slots() {
        let tol = Tolerance::default();
        let a = trine([0.0, 1.0, 2.0]);
        assert!(matches!(
            combine_with_hermitian(&a, &pauli_x(), &OpExpr::parse("a*x").unwrap(), &tol),
            Err(PomError::Hermiticity { .. })
        ));
        assert!(matches!(
            combine_with_hermitian(&a, &pauli_x(), &OpExpr::parse("a + b").unwrap(), &tol),
            Err(PomError::UnboundSlot(_))
        ));
    }

    #[test]
    fn deviation_examples() {
        let tol = Tolerance::default();
        let mut r = rng(4);
        let a = random_projective_pom(3, &mut r);
        let psi = random_state(3, &mut r);
        assert_abs_diff_eq!(deviation(&a, &operator_of(&a), &psi, &tol).unwrap(), 0.0, epsilon = 1e-12);

        let t = trine([0.0, 1.0, 2.0]);
        let mean = operator_of(&t);
        let second = mean_operator(&t, |v| v * v).unwrap();
        let psi = State::basis(2, 0);
        let v = psi.vector();
        let want = v.dotc(&((&second - &mean * &mean) * v)).re;
        let got = deviation(&t, &mean, &psi, &tol).unwrap();
        assert_abs_diff_eq!(got, want, epsilon = 1e-14);
        assert!(got > 0.0);
        // sum_a |<a|(X - a)|psi>|^2 evaluated by hand for X = A_bar.
        let xv = &mean * v;
        let by_hand: f64 = t
            .elements()
            .iter()
            .map(|e| (e.ket.amplitudes().dotc(&xv) - e.ket.amplitudes().dotc(v) * e.outcome).norm_sqr())
            .sum();
        assert_abs_diff_eq!(got, by_hand, epsilon = 1e-14);
    }

    #[test]
    fn distance_examples() {
        let tol = Tolerance::default();
        let mut r = rng(5);
        let a = random_projective_pom(4, &mut r);
        assert!(distance(&a, &operator_of(&a), &tol).unwrap() < 1e-10);

        let a = random_maximal_pom(3, 7, &mut r);
        let (dmin, mean) = min_distance(&a, &tol).unwrap();
        for _ in 0..20 {
            let x = random_hermitian(3, &mut r);
            let y = random_hermitian(3, &mut r);
            let dx = distance(&a, &x, &tol).unwrap();
            let dy = distance(&a, &y, &tol).unwrap();
            assert!(dx + dy >= hs_distance(&x, &y) - 1e-12);
            assert!(hs_distance(&x, &y) >= (dx - dy).abs() - 1e-12);
            assert_abs_diff_eq!(dx * dx, dmin * dmin + hs_distance(&mean, &x).powi(2), epsilon = 1e-9);
        }
    }

    #[test]
    fn min_distance_examples() {
        let tol = Tolerance::default();
        let mut r = rng(6);
        let a = random_projective_pom(3, &mut r);
        assert!(min_distance(&a, &tol).unwrap().0 <= 1e-10);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let coin = MaximalPom::from_pairs(vec![
            (0.0, Ket::from_real(&[h, 0.0])),
            (0.0, Ket::from_real(&[0.0, h])),
            (1.0, Ket::from_real(&[h, 0.0])),
            (1.0, Ket::from_real(&[0.0, h])),
        ])
        .unwrap();
        let (d, mean) = min_distance(&coin, &tol).unwrap();
        // tr[A2_bar - A_bar^2] = tr[I/2 - I/4] = 1/2
        assert_abs_diff_eq!(d, 0.5_f64.sqrt(), epsilon = 1e-14);
        assert!(frobenius_norm(&(mean - identity(2) * Complex64::new(0.5, 0.0))) < 1e-15);

        let a = random_maximal_pom(3, 6, &mut r);
        let (dmin, mean) = min_distance(&a, &tol).unwrap();
        for _ in 0..100 {
            let p = random_hermitian(3, &mut r) * Complex64::new(0.1, 0.0);
            assert!(distance(&a, &(&mean + p), &tol).unwrap() >= dmin - 1e-12);
        }
    }
}
