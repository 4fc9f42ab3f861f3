//! Joint outcome space `H_AB` for two maximal POMs.
//!
//! Elements shared by both POMs (equal projectors) get private orthonormal
//! coordinates. The remaining kets `|a~>`, `|b~>` resolve the same operator
//! `C0 = I - sum_c |c><c|`, and their joint-space inner products are fixed to
//! `(a~|b~) = <a~|C0^+|b~>`.

use num_complex::Complex64;

use crate::error::{shape_err, PomError, Result};
use crate::numerics::{
    columns, eig_hermitian, frobenius_norm, gram_embed, hermitian_part, identity, pinv_psd, ComplexMatrix,
    Ket, Tolerance,
};
use crate::pom::{ensure_nonredundant, projector_distance, MaximalPom, Observable, State};

/// An element present in both POMs. `ket` is the phase-canonical form of the
/// first POM's ket; the original kets are `phase_a * ket` and `phase_b * ket`.
#[derive(Debug, Clone, PartialEq)]
pub struct CommonElement {
    pub index_a: usize,
    pub index_b: usize,
    pub outcome_a: f64,
    pub outcome_b: f64,
    pub ket: Ket,
    pub phase_a: Complex64,
    pub phase_b: Complex64,
}

/// An element of one POM with no partner in the other.
#[derive(Debug, Clone, PartialEq)]
pub struct TildeElement {
    /// Position in the originating POM.
    pub index: usize,
    pub outcome: f64,
    pub ket: Ket,
}

#[derive(Debug, Clone)]
pub struct CommonDecomposition {
    pub dim: usize,
    pub count_a: usize,
    pub count_b: usize,
    pub common: Vec<CommonElement>,
    pub only_a: Vec<TildeElement>,
    pub only_b: Vec<TildeElement>,
    pub c0: ComplexMatrix,
    pub c0_pinv: ComplexMatrix,
    /// Near-miss pairs that were not matched.
    pub warnings: Vec<String>,
}

impl CommonDecomposition {
    /// `sum_{a~} |a~><a~|`.
    pub fn tilde_sum_a(&self) -> ComplexMatrix {
        tilde_sum(&self.only_a, self.dim)
    }

    pub fn tilde_sum_b(&self) -> ComplexMatrix {
        tilde_sum(&self.only_b, self.dim)
    }

    pub fn tilde_kets_a(&self) -> ComplexMatrix {
        columns(&self.only_a.iter().map(|t| t.ket.clone()).collect::<Vec<_>>(), self.dim)
    }

    pub fn tilde_kets_b(&self) -> ComplexMatrix {
        columns(&self.only_b.iter().map(|t| t.ket.clone()).collect::<Vec<_>>(), self.dim)
    }

    /// `sum_{a~} a~ |a~><a~|`, the restriction of `A_bar` to the tilde set.
    pub fn tilde_mean_a(&self) -> ComplexMatrix {
        tilde_mean(&self.only_a, self.dim)
    }

    pub fn tilde_mean_b(&self) -> ComplexMatrix {
        tilde_mean(&self.only_b, self.dim)
    }
}

fn tilde_sum(set: &[TildeElement], dim: usize) -> ComplexMatrix {
    let mut acc = ComplexMatrix::zeros(dim, dim);
    for t in set {
        acc += t.ket.projector();
    }
    acc
}

fn tilde_mean(set: &[TildeElement], dim: usize) -> ComplexMatrix {
    let mut acc = ComplexMatrix::zeros(dim, dim);
    for t in set {
        acc += t.ket.projector() * Complex64::new(t.outcome, 0.0);
    }
    acc
}

/// Matches elements with equal projectors (`||aa^dagger - bb^dagger||_F <=
/// eps_match`) and splits both POMs into common and remaining parts.
pub fn common_elements(a: &MaximalPom, b: &MaximalPom, tol: &Tolerance) -> Result<CommonDecomposition> {
    if a.dim() != b.dim() {
        return Err(shape_err(format!("second POM on dimension {}", a.dim()), b.dim()));
    }
    ensure_nonredundant(a, tol)?;
    ensure_nonredundant(b, tol)?;
    let dim = a.dim();
    let (ea, eb) = (a.elements(), b.elements());

    let mut partner_of_b: Vec<Option<usize>> = vec![None; eb.len()];
    let mut common = Vec::new();
    let mut only_a = Vec::new();
    let mut warnings = Vec::new();
    for (i, ai) in ea.iter().enumerate() {
        let mut found = None;
        for (j, bj) in eb.iter().enumerate() {
            let dist = projector_distance(&ai.ket, &bj.ket);
            if dist <= tol.eps_match {
                if found.is_some() || partner_of_b[j].is_some() {
                    return Err(PomError::Match { index: i });
                }
                found = Some(j);
            } else if dist <= 10.0 * tol.eps_match {
                warnings.push(format!(
                    "elements {i} and {j} nearly coincide (projector distance {dist:.3e}) but are treated as distinct"
                ));
            }
        }
        match found {
            Some(j) => {
                partner_of_b[j] = Some(i);
                let (ket, phase_a) = ai.ket.phase_canonical();
                let overlap = ket.inner(&eb[j].ket);
                let phase_b = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { Complex64::new(1.0, 0.0) };
                common.push(CommonElement {
                    index_a: i,
                    index_b: j,
                    outcome_a: ai.outcome,
                    outcome_b: eb[j].outcome,
                    ket,
                    phase_a,
                    phase_b,
                });
            }
            None => only_a.push(TildeElement { index: i, outcome: ai.outcome, ket: ai.ket.clone() }),
        }
    }
    let only_b = eb
        .iter()
        .enumerate()
        .filter(|(j, _)| partner_of_b[*j].is_none())
        .map(|(j, e)| TildeElement { index: j, outcome: e.outcome, ket: e.ket.clone() })
        .collect();

    let mut c0 = identity(dim);
    for c in &common {
        c0 -= c.ket.projector();
    }
    let c0 = hermitian_part(&c0);
    let c0_pinv = pinv_psd(&c0, tol)?;
    Ok(CommonDecomposition {
        dim,
        count_a: ea.len(),
        count_b: eb.len(),
        common,
        only_a,
        only_b,
        c0,
        c0_pinv,
        warnings,
    })
}

/// `G[(i, j)] = <a~_i|C0^+|b~_j>`.
pub fn cross_gram(dec: &CommonDecomposition) -> ComplexMatrix {
    let ta = dec.tilde_kets_a();
    let tb = dec.tilde_kets_b();
    ta.ad_mul(&(&dec.c0_pinv * tb))
}

/// Largest singular value of `G`, from the smaller of `G G^dagger`, `G^dagger G`.
pub fn max_singular_value(g: &ComplexMatrix, tol: &Tolerance) -> Result<f64> {
    if g.nrows() == 0 || g.ncols() == 0 {
        return Ok(0.0);
    }
    let sq = if g.nrows() <= g.ncols() { g * g.adjoint() } else { g.ad_mul(g) };
    Ok(eig_hermitian(&hermitian_part(&sq), tol)?.max().max(0.0).sqrt())
}

/// `[[I, G], [G^dagger, I]]`.
pub fn joint_gram_matrix(g: &ComplexMatrix) -> ComplexMatrix {
    let (na, nb) = (g.nrows(), g.ncols());
    let mut j = identity(na + nb);
    j.view_mut((0, na), (na, nb)).copy_from(g);
    j.view_mut((na, 0), (nb, na)).copy_from(&g.adjoint());
    j
}

/// The joint space described by inner products only, without embedding.
///
/// Enough for expectations of products of `A^` and `B^`, and cheap for
/// POMs with thousands of elements.
#[derive(Debug, Clone)]
pub struct JointGram {
    pub decomposition: CommonDecomposition,
    pub g: ComplexMatrix,
    outcomes_a: Vec<f64>,
    outcomes_b: Vec<f64>,
    kets_a: ComplexMatrix,
    kets_b: ComplexMatrix,
    tilde_means: (ComplexMatrix, ComplexMatrix),
}

impl JointGram {
    pub fn new(a: &MaximalPom, b: &MaximalPom, tol: &Tolerance) -> Result<Self> {
        let decomposition = common_elements(a, b, tol)?;
        let g = cross_gram(&decomposition);
        let tilde_means = (decomposition.tilde_mean_a(), decomposition.tilde_mean_b());
        Ok(JointGram {
            decomposition,
            g,
            tilde_means,
            outcomes_a: a.outcomes(),
            outcomes_b: b.outcomes(),
            kets_a: a.ket_matrix(),
            kets_b: b.ket_matrix(),
        })
    }

    /// `1 - sigma_max(G)`, the smallest eigenvalue of the joint Gram matrix
    /// when both tilde sets are non-empty.
    pub fn min_gram_eigenvalue(&self, tol: &Tolerance) -> Result<f64> {
        if self.g.nrows() == 0 || self.g.ncols() == 0 {
            return Ok(1.0);
        }
        Ok(1.0 - max_singular_value(&self.g, tol)?)
    }

    /// `sum_{a~} a~ |a~><a~|` and `sum_{b~} b~ |b~><b~|`.
    pub fn tilde_means(&self) -> (&ComplexMatrix, &ComplexMatrix) {
        (&self.tilde_means.0, &self.tilde_means.1)
    }

    /// `(a|b)` for every element pair, in the original element orders.
    pub fn overlaps(&self) -> ComplexMatrix {
        let dec = &self.decomposition;
        let mut x = ComplexMatrix::zeros(dec.count_a, dec.count_b);
        for c in &dec.common {
            x[(c.index_a, c.index_b)] = c.phase_a.conj() * c.phase_b;
        }
        for (i, ta) in dec.only_a.iter().enumerate() {
            for (j, tb) in dec.only_b.iter().enumerate() {
                x[(ta.index, tb.index)] = self.g[(i, j)];
            }
        }
        x
    }

    /// `(psi_AB| f(A^) g(B^) |psi_AB)` for outcome functions `f`, `g`.
    pub fn product_expectation(
        &self,
        psi: &State,
        f: impl Fn(f64) -> f64,
        g: impl Fn(f64) -> f64,
    ) -> Result<Complex64> {
        if psi.dim() != self.decomposition.dim {
            return Err(shape_err(format!("state of dimension {}", self.decomposition.dim), psi.dim()));
        }
        let u = weighted_amplitudes(&self.kets_a, &self.outcomes_a, psi, &f);
        let w = weighted_amplitudes(&self.kets_b, &self.outcomes_b, psi, &g);
        Ok(u.dotc(&(self.overlaps() * w)))
    }
}

/// `f(a) <a|psi>` for each element.
fn weighted_amplitudes(
    kets: &ComplexMatrix,
    outcomes: &[f64],
    psi: &State,
    f: impl Fn(f64) -> f64,
) -> crate::numerics::ComplexVector {
    let mut v = kets.ad_mul(psi.vector());
    for (z, &o) in v.iter_mut().zip(outcomes) {
        *z *= f(o);
    }
    v
}

/// Which POM's expansion to use when extending a state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Via {
    A,
    B,
}

/// Explicitly embedded joint space with orthonormal coordinates.
#[derive(Debug, Clone)]
pub struct JointSpace {
    pub gram: JointGram,
    joint_dim: usize,
    /// Columns are the joint vectors `|a)`, in the first POM's order.
    va: ComplexMatrix,
    vb: ComplexMatrix,
    a_hat: ComplexMatrix,
    b_hat: ComplexMatrix,
    /// Isometries `H -> H_AB`, `psi |-> sum_a <a|psi> |a)`.
    iso_a: ComplexMatrix,
    iso_b: ComplexMatrix,
}

/// Builds `H_AB`: the joint Gram matrix of the tilde sets is embedded in its
/// numerical rank and the common elements take an orthogonal block.
pub fn build_joint_space(a: &MaximalPom, b: &MaximalPom, tol: &Tolerance) -> Result<JointSpace> {
    let gram = JointGram::new(a, b, tol)?;
    let dec = &gram.decomposition;
    let (na, nb, nc) = (dec.only_a.len(), dec.only_b.len(), dec.common.len());
    let embedded = gram_embed(&joint_gram_matrix(&gram.g), tol)?;
    let rank = embedded.first().map_or(0, Ket::dim);
    let joint_dim = nc + rank;

    let mut va = ComplexMatrix::zeros(joint_dim, dec.count_a);
    let mut vb = ComplexMatrix::zeros(joint_dim, dec.count_b);
    for (k, c) in dec.common.iter().enumerate() {
        va[(k, c.index_a)] = c.phase_a;
        vb[(k, c.index_b)] = c.phase_b;
    }
    for (t, v) in dec.only_a.iter().zip(&embedded[..na]) {
        va.view_mut((nc, t.index), (rank, 1)).copy_from(v.amplitudes());
    }
    for (t, v) in dec.only_b.iter().zip(&embedded[na..na + nb]) {
        vb.view_mut((nc, t.index), (rank, 1)).copy_from(v.amplitudes());
    }

    let a_hat = diag_in_basis(&va, &a.outcomes());
    let b_hat = diag_in_basis(&vb, &b.outcomes());
    let iso_a = va.clone() * a.ket_matrix().adjoint();
    let iso_b = vb.clone() * b.ket_matrix().adjoint();
    let gap = frobenius_norm(&(&iso_a - &iso_b));
    if gap > tol.eps_eq * (a.dim() as f64).sqrt().max(1.0) {
        return Err(PomError::RouteMismatch { what: "state extension via A and via B".into(), gap });
    }
    Ok(JointSpace { gram, joint_dim, va, vb, a_hat, b_hat, iso_a, iso_b })
}

/// `sum_j w_j v_j v_j^dagger` for the columns `v_j` of `v`.
fn diag_in_basis(v: &ComplexMatrix, weights: &[f64]) -> ComplexMatrix {
    let mut scaled = v.clone();
    for (j, &w) in weights.iter().enumerate() {
        scaled.column_mut(j).scale_mut(w);
    }
    scaled * v.adjoint()
}

impl JointSpace {
    pub fn joint_dim(&self) -> usize {
        self.joint_dim
    }

    pub fn source_dim(&self) -> usize {
        self.iso_a.ncols()
    }

    pub fn decomposition(&self) -> &CommonDecomposition {
        &self.gram.decomposition
    }

    pub fn cross_gram(&self) -> &ComplexMatrix {
        &self.gram.g
    }

    pub fn a_hat(&self) -> &ComplexMatrix {
        &self.a_hat
    }

    pub fn b_hat(&self) -> &ComplexMatrix {
        &self.b_hat
    }

    /// Joint vectors `|a)` as columns.
    pub fn basis_a(&self) -> &ComplexMatrix {
        &self.va
    }

    pub fn basis_b(&self) -> &ComplexMatrix {
        &self.vb
    }

    pub fn isometry(&self, via: Via) -> &ComplexMatrix {
        match via {
            Via::A => &self.iso_a,
            Via::B => &self.iso_b,
        }
    }

    /// Projector onto the physical sector `W W^dagger`.
    pub fn e_projector(&self) -> ComplexMatrix {
        &self.iso_a * self.iso_a.adjoint()
    }

    /// `|psi_A) = sum_c <c|psi> |c) + sum_{a~} <a~|psi> |a~)`, or the same
    /// expansion over the second POM.
    pub fn extend_state(&self, psi: &State, via: Via) -> Result<Ket> {
        if psi.dim() != self.source_dim() {
            return Err(shape_err(format!("state of dimension {}", self.source_dim()), psi.dim()));
        }
        Ok(Ket::new(self.isometry(via) * psi.vector()))
    }

    /// `X_AB = W X W^dagger`, computed through both POMs and compared.
    pub fn extend_operator(&self, x: &ComplexMatrix, tol: &Tolerance) -> Result<ComplexMatrix> {
        crate::numerics::ensure_square(x, self.source_dim())?;
        let via_a = &self.iso_a * x * self.iso_a.adjoint();
        let via_b = &self.iso_b * x * self.iso_b.adjoint();
        let gap = frobenius_norm(&(&via_a - &via_b));
        if gap > tol.eps_eq * frobenius_norm(x).max(1.0) {
            return Err(PomError::RouteMismatch { what: "operator extension via A and via B".into(), gap });
        }
        Ok(via_a)
    }
}

/// Extends `psi` into the joint space through the chosen POM's kets.
pub fn extend_state_joint(js: &JointSpace, psi: &State, via: Via) -> Result<Ket> {
    js.extend_state(psi, via)
}
