//! Initialization, Adam updates, the fitting loops and restart selection.

mod adam;
mod config;
mod fit;
mod init;
pub mod rng;

pub use adam::{adam_step, param_count, AdamState};
pub use config::FitConfig;
pub use fit::{
    default_rank, fit, fit_all, fit_density, fit_seeded, fit_symmetric, multi_restart,
    operator_parties, select_best, FitMode, FitResult, TraceRow, CONSOLIDATE_GAP, MERGE_GAP,
};
pub use init::{init_density_model, init_model, init_symmetric_model};

/// Candidate rank `∏ d_i / max d_i` for a general tensor.
pub fn rank_upper_bound(dims: &[usize]) -> usize {
    assert!(
        !dims.is_empty() && !dims.contains(&0),
        "dims must be nonempty and positive"
    );
    let max = *dims.iter().max().expect("nonempty");
    dims.iter().product::<usize>() / max
}

/// Candidate rank `d^(m-1)` for a symmetric order-`m` tensor.
pub fn rank_upper_bound_symmetric(d: usize, m: usize) -> usize {
    assert!(d >= 1 && m >= 1, "d and m must be positive");
    d.pow(m as u32 - 1)
}

/// Candidate rank `(∏ d_i / max d_i)^2` for an operator over parties `dims`.
pub fn rank_upper_bound_density(dims: &[usize]) -> usize {
    rank_upper_bound(dims).pow(2)
}
