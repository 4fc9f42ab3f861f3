//! Seeded generators for random states, observables and POM pairs.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::numerics::{
    columns, eig_hermitian, identity, psd_function, support_projector, ComplexMatrix, ComplexVector, Ket,
    Tolerance,
};
use crate::pom::{MaximalElement, MaximalPom, State};

pub type InstanceRng = ChaCha8Rng;

pub fn rng(seed: u64) -> InstanceRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex_gaussian<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn random_ket<R: Rng>(dim: usize, rng: &mut R) -> Ket {
    Ket::new(ComplexVector::from_fn(dim, |_, _| complex_gaussian(rng)))
}

/// Uniformly distributed pure state.
pub fn random_state<R: Rng>(dim: usize, rng: &mut R) -> State {
    loop {
        if let Ok(s) = State::normalize(random_ket(dim, rng)) {
            return s;
        }
    }
}

pub fn random_hermitian<R: Rng>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(dim, dim, |_, _| complex_gaussian(rng));
    (&g + g.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Random PSD matrix `G G^dagger` of the given rank.
pub fn random_psd<R: Rng>(dim: usize, rank: usize, rng: &mut R) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(dim, rank, |_, _| complex_gaussian(rng));
    &g * g.adjoint()
}

/// Columns form a random orthonormal basis.
pub fn random_unitary<R: Rng>(dim: usize, rng: &mut R) -> ComplexMatrix {
    eig_hermitian(&random_hermitian(dim, rng), &Tolerance::default())
        .expect("random Hermitian matrices diagonalise")
        .vectors
}

fn random_outcome<R: Rng>(rng: &mut R) -> f64 {
    rng.random_range(-2.0..2.0)
}

/// Rescales arbitrary kets into a complete set: `a_k = S^{-1/2} v_k` with
/// `S = sum_k v_k v_k^dagger`, restricted to the support of `target` and
/// mapped so that `sum_k a_k a_k^dagger = target`.
fn complete_to<R: Rng>(target: &ComplexMatrix, count: usize, rng: &mut R) -> Vec<Ket> {
    let tol = Tolerance::default();
    let dim = target.nrows();
    let support = support_projector(target, &tol).expect("target is PSD");
    let raw: Vec<Ket> = (0..count)
        .map(|_| Ket::new(&support * random_ket(dim, rng).amplitudes()))
        .collect();
    let v = columns(&raw, dim);
    let s = &v * v.adjoint();
    let s_inv_half = psd_function(&s, &tol, |l| 1.0 / l.sqrt()).expect("frame operator is PSD");
    let t_half = psd_function(target, &tol, f64::sqrt).expect("target is PSD");
    let mapped = t_half * s_inv_half * v;
    (0..count).map(|j| Ket::new(mapped.column(j).into_owned())).collect()
}

/// Random maximal POM with `count >= dim` elements and random outcomes in
/// `[-2, 2)`. Non-redundant with probability one when `dim >= 2`.
pub fn random_maximal_pom<R: Rng>(dim: usize, count: usize, rng: &mut R) -> MaximalPom {
    assert!(count >= dim, "a complete maximal POM needs at least dim elements");
    let kets = complete_to(&identity(dim), count, rng);
    MaximalPom::new(
        dim,
        kets.into_iter()
            .map(|ket| MaximalElement { outcome: random_outcome(rng), ket })
            .collect(),
    )
    .expect("generated POM has consistent shapes")
}

/// Spectral POM of a random Hermitian operator with distinct eigenvalues.
pub fn random_projective_pom<R: Rng>(dim: usize, rng: &mut R) -> MaximalPom {
    let u = random_unitary(dim, rng);
    MaximalPom::new(
        dim,
        (0..dim)
            .map(|j| MaximalElement {
                outcome: random_outcome(rng),
                ket: Ket::new(u.column(j).into_owned()),
            })
            .collect(),
    )
    .expect("generated POM has consistent shapes")
}

/// A pair of maximal POMs sharing `shared` elements of the first one.
///
/// The second POM repeats the shared kets up to a random phase (with fresh
/// outcomes) and completes them with `extra` random kets spanning the rest
/// (at least the rank of the remainder, and exactly one if that rank is one).
pub fn random_pom_pair<R: Rng>(
    dim: usize,
    count_a: usize,
    shared: usize,
    extra: usize,
    rng: &mut R,
) -> (MaximalPom, MaximalPom) {
    let a = random_maximal_pom(dim, count_a, rng);
    let shared = shared.min(count_a);
    let mut b_elems = Vec::new();
    let mut c0 = identity(dim);
    for e in &a.elements()[..shared] {
        c0 -= e.ket.projector();
        let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        b_elems.push(MaximalElement {
            outcome: random_outcome(rng),
            ket: e.ket.scaled(Complex64::from_polar(1.0, theta)),
        });
    }
    let c0 = (&c0 + c0.adjoint()) * Complex64::new(0.5, 0.0);
    let rank = eig_hermitian(&c0, &Tolerance::default())
        .map(|e| e.values.iter().filter(|&&l| l > 1e-8).count())
        .unwrap_or(dim);
    if rank > 0 {
        // Two kets inside a one-dimensional support would be proportional.
        let count = if rank == 1 { 1 } else { extra.max(rank) };
        for ket in complete_to(&c0, count, rng) {
            b_elems.push(MaximalElement { outcome: random_outcome(rng), ket });
        }
    }
    // Shuffle so shared elements are not always first in B.
    for i in (1..b_elems.len()).rev() {
        let j = rng.random_range(0..=i);
        b_elems.swap(i, j);
    }
    let b = MaximalPom::new(dim, b_elems).expect("generated POM has consistent shapes");
    (a, b)
}
