//! Algebra of positive operator measures (POMs).
//!
//! A maximal POM is realised as a projective measurement on its outcome
//! space `H_A`, where POM outcomes and Hermitian operators can be added,
//! multiplied and diagonalised. Two POMs share a joint space built from
//! their common elements and the Gram matrix of the rest.

pub mod algebra;
pub mod error;
pub mod expr;
pub mod joint;
pub mod joint_algebra;
pub mod naimark;
pub mod numerics;
pub mod phase;
pub mod pom;
pub mod random;

pub use algebra::{combine_with_hermitian, deviation, distance, expect_g, min_distance, CombinedPom};
pub use error::{PomError, Result};
pub use expr::{Bindings, OpExpr, Slot};
pub use naimark::{EProjector, ExtendedSpace};
pub use numerics::{ComplexMatrix, ComplexVector, HermitianEigen, Ket, Tolerance};
pub use pom::{
    GeneralPom, MaximalElement, MaximalPom, Observable, PomElement, State, ValidationReport,
};
pub use joint::{build_joint_space, common_elements, cross_gram, extend_state_joint, CommonDecomposition, JointGram, JointSpace, Via};
pub use joint_algebra::{combine, commutator_expect, expect_chain, expect_joint, uncertainty, UncertaintyReport};
pub use phase::{
    canonical_phase_pom, circular_deviation, delta_asymptote, heterodyne_exp_op, number_phase_bound, number_pom,
    FockState, NumberPhase, NumberPhaseBound, PhaseGrid,
};
