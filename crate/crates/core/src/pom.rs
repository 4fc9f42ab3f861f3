//! Probability operator measures: data model, validation, reduction to a
//! non-redundant form, maximal (rank-1) extension, and outcome statistics.

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{shape_err, PomError, Result};
use crate::numerics::{
    eig_hermitian, ensure_square, frobenius_norm, identity, ComplexMatrix, ComplexVector, Ket,
    Tolerance,
};

#[derive(Debug, Clone, PartialEq)]
pub struct PomElement {
    pub outcome: f64,
    pub operator: ComplexMatrix,
}

/// A POM `{A_a}` with real outcome labels. Construction checks shapes only;
/// positivity and completeness are reported by [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralPom {
    dim: usize,
    elements: Vec<PomElement>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaximalElement {
    pub outcome: f64,
    pub ket: Ket,
}

/// A POM whose elements are all rank one, `A_a = |a><a|`. Kets carry their
/// weight (they are not normalised).
#[derive(Debug, Clone, PartialEq)]
pub struct MaximalPom {
    dim: usize,
    elements: Vec<MaximalElement>,
}

/// A normalised pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct State(Ket);

fn check_outcome(outcome: f64) -> Result<()> {
    if outcome.is_finite() {
        Ok(())
    } else {
        Err(PomError::Invalid(format!("outcome {outcome} is not finite")))
    }
}

impl GeneralPom {
    pub fn new(dim: usize, elements: Vec<PomElement>) -> Result<Self> {
        if dim == 0 {
            return Err(PomError::Invalid("dimension must be positive".into()));
        }
        if elements.is_empty() {
            return Err(PomError::Invalid("a POM needs at least one element".into()));
        }
        for e in &elements {
            check_outcome(e.outcome)?;
            ensure_square(&e.operator, dim)?;
            if e.operator.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(PomError::Invalid("non-finite operator entry".into()));
            }
        }
        Ok(Self { dim, elements })
    }

    /// Builds a POM from `(outcome, operator)` pairs, inferring the dimension.
    pub fn from_pairs(pairs: Vec<(f64, ComplexMatrix)>) -> Result<Self> {
        let dim = pairs.first().map(|(_, m)| m.nrows()).unwrap_or(0);
        Self::new(
            dim,
            pairs
                .into_iter()
                .map(|(outcome, operator)| PomElement { outcome, operator })
                .collect(),
        )
    }

    pub fn elements(&self) -> &[PomElement] {
        &self.elements
    }
}

impl MaximalPom {
    pub fn new(dim: usize, elements: Vec<MaximalElement>) -> Result<Self> {
        if dim == 0 {
            return Err(PomError::Invalid("dimension must be positive".into()));
        }
        if elements.is_empty() {
            return Err(PomError::Invalid("a POM needs at least one element".into()));
        }
        for e in &elements {
            check_outcome(e.outcome)?;
            if e.ket.dim() != dim {
                return Err(shape_err(format!("ket of dimension {dim}"), e.ket.dim()));
            }
            if !e.ket.is_finite() {
                return Err(PomError::Invalid("non-finite ket amplitude".into()));
            }
        }
        Ok(Self { dim, elements })
    }

    pub fn from_pairs(pairs: Vec<(f64, Ket)>) -> Result<Self> {
        let dim = pairs.first().map(|(_, k)| k.dim()).unwrap_or(0);
        Self::new(
            dim,
            pairs
                .into_iter()
                .map(|(outcome, ket)| MaximalElement { outcome, ket })
                .collect(),
        )
    }

    pub fn elements(&self) -> &[MaximalElement] {
        &self.elements
    }

    pub fn outcomes(&self) -> Vec<f64> {
        self.elements.iter().map(|e| e.outcome).collect()
    }

    pub fn kets(&self) -> Vec<Ket> {
        self.elements.iter().map(|e| e.ket.clone()).collect()
    }

    /// `dim x N` matrix whose columns are the kets `|a>`.
    pub fn ket_matrix(&self) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.dim, self.elements.len());
        for (j, e) in self.elements.iter().enumerate() {
            m.set_column(j, e.ket.amplitudes());
        }
        m
    }

    pub fn to_general(&self) -> GeneralPom {
        GeneralPom {
            dim: self.dim,
            elements: self
                .elements
                .iter()
                .map(|e| PomElement {
                    outcome: e.outcome,
                    operator: e.ket.projector(),
                })
                .collect(),
        }
    }

    /// Whether the kets are mutually orthogonal, i.e. the POM is the spectral
    /// measure of a Hermitian operator.
    pub fn is_projective(&self, tol: &Tolerance) -> bool {
        let n = self.elements.len();
        (0..n).all(|i| {
            (i + 1..n).all(|j| {
                let a = &self.elements[i].ket;
                let b = &self.elements[j].ket;
                a.inner(b).norm() <= tol.eps_eq * a.norm().max(b.norm()).max(1e-300)
            })
        })
    }
}

impl State {
    /// Accepts kets whose norm is 1 within `tol.eps_eq`.
    pub fn new(ket: Ket, tol: &Tolerance) -> Result<Self> {
        let n = ket.norm();
        if !ket.is_finite() || (n - 1.0).abs() > tol.eps_eq {
            return Err(PomError::Invalid(format!("state norm is {n}, expected 1")));
        }
        Ok(Self(ket))
    }

    pub fn normalize(ket: Ket) -> Result<Self> {
        ket.normalized()
            .map(Self)
            .ok_or_else(|| PomError::Invalid("cannot normalise a zero or non-finite ket".into()))
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        Self(Ket::basis(dim, index))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn ket(&self) -> &Ket {
        &self.0
    }

    pub fn vector(&self) -> &ComplexVector {
        self.0.amplitudes()
    }
}

/// Common read access to general and maximal POMs.
pub trait Observable {
    fn dim(&self) -> usize;
    fn len(&self) -> usize;
    fn outcome(&self, i: usize) -> f64;
    /// `<psi|A_i|psi>`.
    fn element_probability(&self, i: usize, psi: &ComplexVector) -> f64;
    /// `acc += w * A_i`.
    fn accumulate(&self, i: usize, w: Complex64, acc: &mut ComplexMatrix);
    fn element_operator(&self, i: usize) -> ComplexMatrix;
    fn trace(&self, i: usize) -> f64;
    fn min_eigenvalue(&self, i: usize, tol: &Tolerance) -> Result<f64>;
    /// `Some(lambda)` when `A_i = lambda A_j` (lambda > 0) within tolerance.
    fn proportionality(&self, i: usize, j: usize, tol: &Tolerance) -> Option<f64>;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Observable for GeneralPom {
    fn dim(&self) -> usize {
        self.dim
    }
    fn len(&self) -> usize {
        self.elements.len()
    }
    fn outcome(&self, i: usize) -> f64 {
        self.elements[i].outcome
    }
    fn element_probability(&self, i: usize, psi: &ComplexVector) -> f64 {
        psi.dotc(&(&self.elements[i].operator * psi)).re
    }
    fn accumulate(&self, i: usize, w: Complex64, acc: &mut ComplexMatrix) {
        *acc += &self.elements[i].operator * w;
    }
    fn element_operator(&self, i: usize) -> ComplexMatrix {
        self.elements[i].operator.clone()
    }
    fn trace(&self, i: usize) -> f64 {
        self.elements[i].operator.diagonal().iter().map(|z| z.re).sum()
    }
    fn min_eigenvalue(&self, i: usize, tol: &Tolerance) -> Result<f64> {
        Ok(eig_hermitian(&self.elements[i].operator, tol)?.min())
    }
    fn proportionality(&self, i: usize, j: usize, tol: &Tolerance) -> Option<f64> {
        operator_proportionality(&self.elements[i].operator, &self.elements[j].operator, tol)
    }
}

impl Observable for MaximalPom {
    fn dim(&self) -> usize {
        self.dim
    }
    fn len(&self) -> usize {
        self.elements.len()
    }
    fn outcome(&self, i: usize) -> f64 {
        self.elements[i].outcome
    }
    fn element_probability(&self, i: usize, psi: &ComplexVector) -> f64 {
        self.elements[i].ket.amplitudes().dotc(psi).norm_sqr()
    }
    fn accumulate(&self, i: usize, w: Complex64, acc: &mut ComplexMatrix) {
        let k = self.elements[i].ket.amplitudes();
        acc.gerc(w, k, k, Complex64::new(1.0, 0.0)); // acc += w k k^dagger
    }
    fn element_operator(&self, i: usize) -> ComplexMatrix {
        self.elements[i].ket.projector()
    }
    fn trace(&self, i: usize) -> f64 {
        self.elements[i].ket.norm_sqr()
    }
    fn min_eigenvalue(&self, i: usize, _tol: &Tolerance) -> Result<f64> {
        Ok(if self.dim == 1 { self.elements[i].ket.norm_sqr() } else { 0.0 })
    }
    fn proportionality(&self, i: usize, j: usize, tol: &Tolerance) -> Option<f64> {
        ket_proportionality(&self.elements[i].ket, &self.elements[j].ket, tol)
    }
}

/// Least-squares scale `lambda = tr(B^dagger A) / tr(B^dagger B)`; the pair is
/// proportional when `||A - lambda B||_F <= eps_eq * max(||A||, ||B||)`.
pub fn operator_proportionality(a: &ComplexMatrix, b: &ComplexMatrix, tol: &Tolerance) -> Option<f64> {
    let na = frobenius_norm(a);
    let nb = frobenius_norm(b);
    if na <= tol.eps_eq || nb <= tol.eps_eq {
        return None;
    }
    let lambda = b.dotc(a).re / (nb * nb);
    if lambda <= 0.0 {
        return None;
    }
    let resid = frobenius_norm(&(a - b * Complex64::new(lambda, 0.0)));
    (resid <= tol.eps_eq * na.max(nb)).then_some(lambda)
}

/// `||a a^dagger - s b b^dagger||_F` computed entrywise.
fn rank_one_residual(a: &Ket, b: &Ket, s: f64) -> f64 {
    let (a, b) = (a.amplitudes(), b.amplitudes());
    let mut acc = 0.0;
    for i in 0..a.len() {
        for j in 0..a.len() {
            acc += (a[i] * a[j].conj() - b[i] * b[j].conj() * s).norm_sqr();
        }
    }
    acc.sqrt()
}

/// [`operator_proportionality`] specialised to rank-1 projectors. A cheap
/// overlap screen runs first; candidates are confirmed entrywise.
pub fn ket_proportionality(a: &Ket, b: &Ket, tol: &Tolerance) -> Option<f64> {
    let na = a.norm_sqr();
    let nb = b.norm_sqr();
    if na <= tol.eps_eq || nb <= tol.eps_eq {
        return None;
    }
    let overlap = a.inner(b).norm_sqr();
    let lambda = overlap / (nb * nb);
    // ||A - lambda B||^2 = |a|^4 - |<a|b>|^4 / |b|^4, screened loosely.
    let screen = na * na - overlap * overlap / (nb * nb);
    if screen > 1e-6 * na.max(nb).powi(2) {
        return None;
    }
    (rank_one_residual(a, b, lambda) <= tol.eps_eq * na.max(nb)).then_some(lambda)
}

/// `||a a^dagger - b b^dagger||_F`, accurate near zero.
pub fn projector_distance(a: &Ket, b: &Ket) -> f64 {
    let na = a.norm_sqr();
    let nb = b.norm_sqr();
    let screen = na * na + nb * nb - 2.0 * a.inner(b).norm_sqr();
    if screen > 1e-6 {
        return screen.max(0.0).sqrt();
    }
    rank_one_residual(a, b, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RedundantPair {
    pub first: usize,
    pub second: usize,
    /// `A_first = ratio * A_second`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub min_eigenvalues: Vec<f64>,
    /// `||sum_a A_a - I||_F`.
    pub completeness_defect: f64,
    pub redundant_pairs: Vec<RedundantPair>,
    pub zero_elements: Vec<usize>,
    pub positive: bool,
    pub complete: bool,
    pub pass: bool,
}

/// Checks positivity and completeness, and lists proportional element pairs.
/// Redundancy is reported but does not fail validation.
pub fn validate<O: Observable>(pom: &O, tol: &Tolerance) -> ValidationReport {
    let n = pom.len();
    let min_eigenvalues: Vec<f64> = (0..n)
        .map(|i| pom.min_eigenvalue(i, tol).unwrap_or(f64::NEG_INFINITY))
        .collect();
    let completeness_defect = completeness_defect(pom);
    let mut redundant_pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if let Some(ratio) = pom.proportionality(i, j, tol) {
                redundant_pairs.push(RedundantPair { first: i, second: j, ratio });
            }
        }
    }
    let zero_elements = (0..n).filter(|&i| pom.trace(i).abs() <= tol.eps_eq).collect();
    let positive = min_eigenvalues.iter().all(|&l| l >= -tol.eps_pos);
    let complete = completeness_defect <= tol.eps_eq;
    ValidationReport {
        min_eigenvalues,
        completeness_defect,
        redundant_pairs,
        zero_elements,
        positive,
        complete,
        pass: positive && complete,
    }
}

pub fn completeness_defect<O: Observable>(pom: &O) -> f64 {
    let d = pom.dim();
    let mut sum = -identity(d);
    for i in 0..pom.len() {
        pom.accumulate(i, Complex64::new(1.0, 0.0), &mut sum);
    }
    frobenius_norm(&sum)
}

/// Fails with [`PomError::Invalid`] unless the POM validates.
pub fn ensure_valid<O: Observable>(pom: &O, tol: &Tolerance) -> Result<()> {
    let report = validate(pom, tol);
    if report.pass {
        Ok(())
    } else if !report.positive {
        Err(PomError::Positivity {
            eigenvalue: report.min_eigenvalues.iter().copied().fold(f64::INFINITY, f64::min),
        })
    } else {
        Err(PomError::Invalid(format!(
            "completeness defect {:.3e} exceeds {:.1e}",
            report.completeness_defect, tol.eps_eq
        )))
    }
}

/// Fails with [`PomError::Redundancy`] on the first proportional pair.
pub fn ensure_nonredundant<O: Observable>(pom: &O, tol: &Tolerance) -> Result<()> {
    let n = pom.len();
    for i in 0..n {
        if pom.trace(i).abs() <= tol.eps_eq {
            return Err(PomError::Invalid(format!("element {i} is zero")));
        }
        for j in i + 1..n {
            if pom.proportionality(i, j, tol).is_some() {
                return Err(PomError::Redundancy { first: i, second: j });
            }
        }
    }
    Ok(())
}

fn check_state_dim<O: Observable>(pom: &O, psi: &State) -> Result<()> {
    if pom.dim() == psi.dim() {
        Ok(())
    } else {
        Err(shape_err(format!("state of dimension {}", pom.dim()), psi.dim()))
    }
}

/// `p(a|psi) = <psi|A_a|psi>`, one entry per element.
pub fn probabilities<O: Observable>(pom: &O, psi: &State) -> Result<Vec<f64>> {
    check_state_dim(pom, psi)?;
    Ok((0..pom.len()).map(|i| pom.element_probability(i, psi.vector())).collect())
}

/// `sum_a f(a) A_a`.
pub fn mean_operator<O: Observable>(pom: &O, f: impl Fn(f64) -> f64) -> Result<ComplexMatrix> {
    let mut acc = ComplexMatrix::zeros(pom.dim(), pom.dim());
    for i in 0..pom.len() {
        let a = pom.outcome(i);
        let w = f(a);
        if !w.is_finite() {
            return Err(PomError::Domain { outcome: a });
        }
        pom.accumulate(i, Complex64::new(w, 0.0), &mut acc);
    }
    Ok(acc)
}

/// `<f(A)>`, evaluated from the outcome distribution and from the mean
/// operator; the two must agree within `eps_eq`.
pub fn expect_f<O: Observable>(
    pom: &O,
    f: impl Fn(f64) -> f64,
    psi: &State,
    tol: &Tolerance,
) -> Result<f64> {
    let p = probabilities(pom, psi)?;
    let mut via_distribution = 0.0;
    let mut scale = 1.0_f64;
    for (i, pi) in p.iter().enumerate() {
        let a = pom.outcome(i);
        let w = f(a);
        if !w.is_finite() {
            return Err(PomError::Domain { outcome: a });
        }
        scale = scale.max(w.abs());
        via_distribution += w * pi;
    }
    let via_operator = psi.vector().dotc(&(mean_operator(pom, &f)? * psi.vector())).re;
    let gap = (via_distribution - via_operator).abs();
    if gap > tol.eps_eq * scale {
        return Err(PomError::RouteMismatch {
            what: "expectation via distribution vs mean operator".into(),
            gap,
        });
    }
    Ok(via_distribution)
}

/// `sum_a p(a) (a - mean)^2`.
pub fn variance<O: Observable>(pom: &O, psi: &State) -> Result<f64> {
    let p = probabilities(pom, psi)?;
    let mean: f64 = p.iter().enumerate().map(|(i, pi)| pi * pom.outcome(i)).sum();
    Ok(p
        .iter()
        .enumerate()
        .map(|(i, pi)| pi * (pom.outcome(i) - mean).powi(2))
        .sum())
}

/// `n` i.i.d. outcomes drawn from `p(a|psi)`, reproducible for a given seed.
pub fn sample<O: Observable>(pom: &O, psi: &State, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(PomError::Invalid("sample count must be at least 1".into()));
    }
    let weights: Vec<f64> = probabilities(pom, psi)?.into_iter().map(|p| p.max(0.0)).collect();
    let dist = WeightedIndex::new(&weights)
        .map_err(|e| PomError::Numerics(format!("cannot sample outcome distribution: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| pom.outcome(dist.sample(&mut rng))).collect())
}

/// Outcome of [`reduce_nonredundant`].
#[derive(Debug, Clone)]
pub struct Reduction {
    pub pom: GeneralPom,
    /// Indices of the input elements merged into each output element.
    pub groups: Vec<Vec<usize>>,
    pub warnings: Vec<String>,
}

/// Sums proportional elements. A merged element takes the outcome of its
/// largest-trace member (smallest outcome on ties); output order follows
/// first occurrence. Zero elements are dropped.
pub fn reduce_nonredundant(pom: &GeneralPom, tol: &Tolerance) -> Result<Reduction> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut warnings = Vec::new();
    for i in 0..pom.len() {
        if pom.trace(i).abs() <= tol.eps_eq {
            warnings.push(format!("dropped zero element {i} (outcome {})", pom.outcome(i)));
            continue;
        }
        match groups.iter_mut().find(|g| pom.proportionality(i, g[0], tol).is_some()) {
            Some(g) => g.push(i),
            None => groups.push(vec![i]),
        }
    }
    if groups.is_empty() {
        return Err(PomError::Invalid("all elements are zero".into()));
    }

    let mut elements = Vec::with_capacity(groups.len());
    for g in &groups {
        let mut operator = ComplexMatrix::zeros(pom.dim(), pom.dim());
        for &i in g {
            operator += &pom.elements[i].operator;
        }
        let lead = *g
            .iter()
            .max_by(|&&x, &&y| {
                pom.trace(x)
                    .total_cmp(&pom.trace(y))
                    .then(pom.outcome(y).total_cmp(&pom.outcome(x)))
            })
            .expect("non-empty group");
        let outcome = pom.outcome(lead);
        if g.iter().any(|&i| pom.outcome(i) != outcome) {
            let labels: Vec<String> = g.iter().map(|&i| pom.outcome(i).to_string()).collect();
            warnings.push(format!(
                "merged proportional elements {g:?} with differing outcomes [{}]; kept {outcome}",
                labels.join(", ")
            ));
        }
        elements.push(PomElement { outcome, operator });
    }
    Ok(Reduction {
        pom: GeneralPom::new(pom.dim(), elements)?,
        groups,
        warnings,
    })
}

/// Replaces every element by the back-to-back kets `sqrt(lambda_i) |v_i>` of
/// its eigendecomposition (eigenvalues above `eps_rank`, largest first).
pub fn maximal_extension(pom: &GeneralPom, tol: &Tolerance) -> Result<MaximalPom> {
    let mut elements = Vec::new();
    for e in &pom.elements {
        let eig = eig_hermitian(&e.operator, tol)?;
        if eig.min() < -tol.eps_pos {
            return Err(PomError::Positivity { eigenvalue: eig.min() });
        }
        for r in (0..eig.dim()).rev() {
            let lambda = eig.values[r];
            if lambda > tol.eps_rank {
                elements.push(MaximalElement {
                    outcome: e.outcome,
                    ket: eig.vector(r).scaled(Complex64::new(lambda.sqrt(), 0.0)),
                });
            }
        }
    }
    MaximalPom::new(pom.dim, elements)
}
