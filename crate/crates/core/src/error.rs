use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid shape: {0}")]
    Shape(String),

    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: Vec<usize>,
        actual: Vec<usize>,
    },

    #[error("empty factor list")]
    EmptyFactors,

    #[error("factors mix real and complex fields")]
    MixedFields,

    #[error("invalid mode selection: {0}")]
    Modes(String),

    #[error("unequal mode dimensions {0:?}; a symmetric operation needs d_1 = ... = d_m")]
    UnequalDims(Vec<usize>),

    #[error(
        "jacobi iteration did not converge within {sweeps} sweeps (off-diagonal {residual:e})"
    )]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("term {term} has a degenerate factor (norm {norm:e} below floor)")]
    DegenerateCore { term: usize, norm: f64 },

    #[error("target tensor is zero")]
    ZeroTarget,

    #[error("target is not symmetric (max deviation {0:e})")]
    NotSymmetric(f64),

    #[error("target shape {0:?} is not an operator shape [d_1..d_m, d_1..d_m]")]
    NotOperator(Vec<usize>),

    #[error("field mismatch: target is {target}, configuration asks for {config}")]
    FieldMismatch {
        target: crate::Field,
        config: crate::Field,
    },

    #[error("optimization diverged: {0} degenerate-core re-initializations")]
    Diverged(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("malformed tensor file: {0}")]
    Format(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
