//! Optical phase: discretised canonical phase POM, the number-phase
//! uncertainty bound and the heterodyne circular deviation.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use statrs::function::gamma::ln_gamma;

use crate::error::{PomError, Result};
use crate::joint::JointGram;
use crate::numerics::{ComplexMatrix, ComplexVector, Ket, Tolerance, I};
use crate::pom::{mean_operator, GeneralPom, MaximalElement, MaximalPom, PomElement, State};
use crate::random::complex_gaussian;

/// A state on the Fock space truncated to `|0>, ..., |d-1>`.
///
/// `tail` is the probability the untruncated state had beyond `|d-1>`; the
/// stored amplitudes are renormalised.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    state: State,
    pub tail: f64,
}

impl FockState {
    pub fn new(state: State) -> Self {
        FockState { state, tail: 0.0 }
    }

    pub fn from_amplitudes(amplitudes: &[Complex64]) -> Result<Self> {
        Ok(Self::new(State::normalize(Ket::from_slice(amplitudes))?))
    }

    pub fn vacuum(dim: usize) -> Self {
        Self::fock(0, dim)
    }

    /// `|n>` in dimension `dim > n`.
    pub fn fock(n: usize, dim: usize) -> Self {
        Self::new(State::basis(dim, n))
    }

    /// Coherent state `|alpha>` truncated so the neglected probability is
    /// below `max_tail`.
    pub fn coherent(alpha: Complex64, max_tail: f64) -> Self {
        let probs = coherent_probabilities(alpha.norm_sqr());
        let mut suffix = vec![0.0; probs.len() + 1];
        for n in (0..probs.len()).rev() {
            suffix[n] = suffix[n + 1] + probs[n];
        }
        let dim = (1..=probs.len()).find(|&d| suffix[d] < max_tail).unwrap_or(probs.len());
        Self::coherent_in(alpha, dim)
    }

    /// Coherent state `|alpha>` truncated to `dim` levels.
    pub fn coherent_in(alpha: Complex64, dim: usize) -> Self {
        let mean = alpha.norm_sqr();
        let probs = coherent_probabilities(mean);
        let kept: f64 = probs.iter().take(dim).sum();
        let far: f64 = probs.iter().skip(dim).sum();
        let theta = alpha.arg();
        let amps: Vec<Complex64> = (0..dim)
            .map(|n| {
                let p = probs.get(n).copied().unwrap_or(0.0);
                Complex64::from_polar(p.sqrt(), n as f64 * theta)
            })
            .collect();
        let state = State::normalize(Ket::from_slice(&amps)).unwrap_or_else(|_| State::basis(dim, 0));
        FockState { state, tail: far.max(1.0 - kept).max(0.0) }
    }

    /// Random state with complex Gaussian amplitudes under an envelope
    /// `exp(-n / (2 nbar))`, `nbar` drawn from `[0.5, 1]`. The envelope keeps
    /// the state well inside the truncation, as a physical state would be.
    pub fn random<R: Rng>(dim: usize, rng: &mut R) -> Self {
        let nbar: f64 = rng.random_range(0.5..1.0);
        Self::random_with_envelope(dim, nbar, rng)
    }

    /// Complex Gaussian amplitudes under the envelope `exp(-n / (2 nbar))`.
    pub fn random_with_envelope<R: Rng>(dim: usize, nbar: f64, rng: &mut R) -> Self {
        loop {
            let amps: Vec<Complex64> = (0..dim)
                .map(|n| complex_gaussian(rng) * (-(n as f64) / (2.0 * nbar)).exp())
                .collect();
            if let Ok(s) = Self::from_amplitudes(&amps) {
                return s;
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.state.dim()
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn amplitudes(&self) -> &ComplexVector {
        self.state.vector()
    }

    /// `|<n|psi>|^2`.
    pub fn photon_distribution(&self) -> Vec<f64> {
        self.amplitudes().iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.photon_distribution().iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }
}

/// Poisson weights `e^{-m} m^n / n!` up to well past the bulk.
fn coherent_probabilities(mean: f64) -> Vec<f64> {
    let last = (mean + 40.0 * mean.sqrt() + 60.0).ceil() as usize;
    (0..=last)
        .map(|n| {
            if mean == 0.0 {
                return if n == 0 { 1.0 } else { 0.0 };
            }
            let nf = n as f64;
            (-mean + nf * mean.ln() - ln_gamma(nf + 1.0)).exp()
        })
        .collect()
}

/// Phase angles `phi_j = -pi + 2 pi j / M`, `j = 1..M`; the last is `pi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseGrid {
    pub bins: usize,
}

impl PhaseGrid {
    pub fn new(bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(PomError::Invalid("phase grid needs at least one bin".into()));
        }
        Ok(PhaseGrid { bins })
    }

    pub fn angle(&self, j: usize) -> f64 {
        if j == self.bins {
            PI
        } else {
            -PI + 2.0 * PI * j as f64 / self.bins as f64
        }
    }

    pub fn angles(&self) -> Vec<f64> {
        (1..=self.bins).map(|j| self.angle(j)).collect()
    }
}

/// Kets `M^{-1/2} sum_{n<d} e^{i n phi_j} |n>` with outcomes `phi_j`.
///
/// Complete exactly when `M >= d`.
pub fn canonical_phase_pom(dim: usize, bins: usize) -> Result<MaximalPom> {
    if bins < dim {
        return Err(PomError::Alias { dim, bins });
    }
    let grid = PhaseGrid::new(bins)?;
    let norm = 1.0 / (bins as f64).sqrt();
    let elements = grid
        .angles()
        .into_iter()
        .enumerate()
        .map(|(idx, phi)| {
            let j = idx + 1;
            let ket = ComplexVector::from_fn(dim, |n, _| {
                // e^{i n phi_j} = (-1)^n e^{2 pi i n j / M}; reduce n j mod M first.
                let turns = ((n * j) % bins) as f64 / bins as f64;
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                Complex64::from_polar(norm * sign, 2.0 * PI * turns)
            });
            MaximalElement { outcome: phi, ket: Ket::new(ket) }
        })
        .collect();
    MaximalPom::new(dim, elements)
}

/// Projective photon-number POM `{|n><n| @ n}`.
pub fn number_pom(dim: usize) -> GeneralPom {
    let elements = (0..dim)
        .map(|n| PomElement { outcome: n as f64, operator: Ket::basis(dim, n).projector() })
        .collect();
    GeneralPom::new(dim, elements).expect("number POM is well formed")
}

/// [`number_pom`] in ket form.
pub fn number_pom_maximal(dim: usize) -> MaximalPom {
    MaximalPom::from_pairs((0..dim).map(|n| (n as f64, Ket::basis(dim, n))).collect())
        .expect("number POM is well formed")
}

/// `sum_n |n><n+1|` on `dim` levels.
pub fn shift_matrix(dim: usize) -> ComplexMatrix {
    let mut s = ComplexMatrix::zeros(dim, dim);
    for n in 0..dim.saturating_sub(1) {
        s[(n, n + 1)] = Complex64::new(1.0, 0.0);
    }
    s
}

/// Mean operator of `e^{i phi}` for the discrete canonical phase POM.
pub fn phase_exp_mean(dim: usize, bins: usize) -> Result<ComplexMatrix> {
    let pom = canonical_phase_pom(dim, bins)?;
    Ok(mean_operator(&pom, f64::cos)? + mean_operator(&pom, f64::sin)? * I)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NumberPhaseBound {
    /// `(1/2) |1 - 2 pi p(pi)|`.
    pub bound: f64,
    /// Estimated density `p(pi|psi)`.
    pub density_at_pi: f64,
    /// `(1/2) |<i[N, Phi]>|` on the joint number-phase space.
    pub algebraic: f64,
    /// Bound on `|bound - algebraic|` due to the finite grid.
    pub discretisation: f64,
}

/// Number-phase uncertainty machinery for one truncation and grid, reusable
/// across states.
#[derive(Debug, Clone)]
pub struct NumberPhase {
    dim: usize,
    bins: usize,
    joint: Option<JointGram>,
}

impl NumberPhase {
    pub fn new(dim: usize, bins: usize, tol: &Tolerance) -> Result<Self> {
        let phase = canonical_phase_pom(dim, bins)?;
        // For d = 1 every phase element is a multiple of |0><0| and both
        // observables are trivial.
        let joint = if dim >= 2 { Some(JointGram::new(&number_pom_maximal(dim), &phase, tol)?) } else { None };
        Ok(NumberPhase { dim, bins, joint })
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn bound(&self, psi: &FockState, tol: &Tolerance) -> Result<NumberPhaseBound> {
        if psi.dim() != self.dim {
            return Err(crate::error::shape_err(format!("state of dimension {}", self.dim), psi.dim()));
        }
        let amps = psi.amplitudes();
        // p_M = |<a_M|psi>|^2 = |sum_n (-1)^n psi_n|^2 / M at phi_M = pi.
        let u: Complex64 = amps.iter().enumerate().map(|(n, z)| if n % 2 == 0 { *z } else { -z }).sum();
        let bin_probability = u.norm_sqr() / self.bins as f64;
        let density_at_pi = bin_probability * self.bins as f64 / (2.0 * PI);
        let bound = 0.5 * (1.0 - 2.0 * PI * density_at_pi).abs();

        let algebraic = match &self.joint {
            Some(j) => 0.5 * j.commutator_expect(psi.state(), tol)?.norm(),
            None => 0.0,
        };
        let discretisation = discretisation_bound(amps, self.bins);
        let gap = (bound - algebraic).abs();
        if gap > discretisation + tol.eps_eq * self.dim as f64 {
            return Err(PomError::RouteMismatch { what: "number-phase bound vs grid estimate".into(), gap });
        }
        Ok(NumberPhaseBound { bound, density_at_pi, algebraic, discretisation })
    }
}

/// `(1/2)[(2 pi / M)|u||v| + sum_{n != m} |psi_n||psi_m| |1 - x cot x|]`
/// with `x = pi (n - m) / M`, `u = sum (-1)^n psi_n`, `v = sum n (-1)^n psi_n`.
///
/// On the grid, `(n - m) <n|Phi|m> = (-1)^k (pi k / M)(1 - i cot(pi k / M))`
/// for `k = n - m != 0`, which tends to the continuum value `-i (-1)^k`.
pub fn discretisation_bound(amps: &ComplexVector, bins: usize) -> f64 {
    let m = bins as f64;
    let sign = |n: usize| if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let u: Complex64 = amps.iter().enumerate().map(|(n, z)| z * sign(n)).sum();
    let v: Complex64 = amps.iter().enumerate().map(|(n, z)| z * (n as f64 * sign(n))).sum();
    let mut off = 0.0;
    for (n, zn) in amps.iter().enumerate() {
        for (k, zk) in amps.iter().enumerate() {
            if n != k {
                let x = PI * (n as f64 - k as f64) / m;
                off += zn.norm() * zk.norm() * (1.0 - x / x.tan()).abs();
            }
        }
    }
    0.5 * (2.0 * PI / m * u.norm() * v.norm() + off)
}

/// `(1/2)|1 - 2 pi p(pi|psi)|`, checked against the algebraic route.
pub fn number_phase_bound(psi: &FockState, bins: usize, tol: &Tolerance) -> Result<NumberPhaseBound> {
    NumberPhase::new(psi.dim(), bins, tol)?.bound(psi, tol)
}

/// `c_n = Gamma(n + 3/2) / (n! sqrt(n + 1))`.
pub fn heterodyne_coefficient(n: usize) -> f64 {
    let nf = n as f64;
    (ln_gamma(nf + 1.5) - ln_gamma(nf + 1.0) - 0.5 * (nf + 1.0).ln()).exp()
}

/// Mean operator of `e^{-i Phi_H}` for ideal heterodyne detection,
/// `sum_n c_n |n+1><n|`, truncated to `dim` levels.
pub fn heterodyne_exp_op(dim: usize) -> ComplexMatrix {
    let mut h = ComplexMatrix::zeros(dim, dim);
    for n in 0..dim.saturating_sub(1) {
        h[(n + 1, n)] = Complex64::new(heterodyne_coefficient(n), 0.0);
    }
    h
}

/// `delta_H = 1 - |<e^{i Phi} e^{-i Phi_H}>| = 1 - sum_n |psi_n|^2 c_n`.
///
/// The operator route pads the space by one level so that the product of
/// the shift and heterodyne operators is not cut off at the top.
pub fn circular_deviation(psi: &FockState, tol: &Tolerance) -> Result<f64> {
    let series: f64 = psi
        .photon_distribution()
        .iter()
        .enumerate()
        .map(|(n, p)| p * heterodyne_coefficient(n))
        .sum();
    let direct = 1.0 - series;

    let d = psi.dim() + 1;
    let mut padded = ComplexVector::zeros(d);
    padded.rows_mut(0, d - 1).copy_from(psi.amplitudes());
    let product = shift_matrix(d) * heterodyne_exp_op(d);
    let via_operators = 1.0 - padded.dotc(&(product * &padded)).norm();

    let gap = (direct - via_operators).abs();
    if gap > tol.eps_eq {
        return Err(PomError::RouteMismatch { what: "circular deviation series vs operators".into(), gap });
    }
    Ok(direct)
}

/// `<psi|(N + 1)^{-1}|psi> / 8`.
pub fn delta_asymptote(psi: &FockState) -> f64 {
    psi.photon_distribution()
        .iter()
        .enumerate()
        .map(|(n, p)| p / (8.0 * (n as f64 + 1.0)))
        .sum()
}
