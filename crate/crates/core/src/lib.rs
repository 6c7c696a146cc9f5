//! Projective (nuclear) norm estimation for dense real and complex tensors
//! and for density matrices of multipartite quantum states.
//!
//! A target is approximated by `Σ_j C_j φ_j` with unit-norm rank-one terms
//! `φ_j`; minimizing the reconstruction error together with `Σ |C_j|` (and a
//! count of live coefficients) drives the decomposition toward one whose
//! coefficient mass is the projective norm. Fitting uses Adam on every real
//! coordinate with analytic gradients, from several random restarts.
//!
//! Everything numeric is generic over the real scalar type ([`Scalar`],
//! implemented for `f32` and `f64`); the `*64` aliases below are what the
//! command-line tool uses.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // negated comparisons also reject NaN

pub mod error;
pub mod linalg;
pub mod objectives;
pub mod optimizer;
pub mod scalar;
pub mod states;
pub mod tensor;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::{Field, Scalar, C};

pub use linalg::{hermitian_eigenvalues, singular_values, svd_nuclear_norm};
pub use objectives::{
    build_phi, build_phi_density, effective_rank, gradients, loss_arcpd, loss_density, loss_nrcpd,
    norm_estimate, reconstruct, CpModel, Decomposition, DensityCpModel, Gradients, LossBreakdown,
    LossKind, LossWeights,
};
pub use optimizer::{
    fit, fit_density, fit_symmetric, multi_restart, rank_upper_bound, rank_upper_bound_density,
    rank_upper_bound_symmetric, FitConfig, FitMode, FitResult, TraceRow,
};
pub use states::{separability_verdict, StateSpec, Verdict};
pub use tensor::{
    frobenius_norm, matricize, outer_product, rank_one_frobenius, symmetrize, Matrix, Tensor,
    Vector,
};

pub type Tensor64 = Tensor<f64>;
pub type Tensor32 = Tensor<f32>;
pub type Vector64 = Vector<f64>;
pub type Matrix64 = Matrix<f64>;
pub type CpModel64 = CpModel<f64>;
pub type DensityCpModel64 = DensityCpModel<f64>;
pub type FitConfig64 = FitConfig<f64>;
pub type FitResult64 = FitResult<f64>;
