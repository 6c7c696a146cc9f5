//! Independent cross-checks: exact order-2 answers, finite-difference
//! gradient audits, pure/density consistency and multi-start baselines.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::svd_nuclear_norm;
use crate::objectives::{
    evaluate, params_flat, set_params_flat, Decomposition, LossKind, LossWeights,
};
use crate::optimizer::rng::SplitRng;
use crate::optimizer::{
    fit_all, init_density_model, init_model, init_symmetric_model, multi_restart, FitConfig,
    FitMode, FitResult,
};
use crate::scalar::{Field, Scalar};
use crate::states::{density_from_pure, random_state};
use crate::tensor::{matricize, Tensor};

/// How a report's pass flag follows from its numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `|measured − reference| ≤ tolerance`.
    Within,
    /// `measured ≥ reference − tolerance`.
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub pass: bool,
    pub measured: f64,
    pub reference: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub details: String,
}

impl CheckReport {
    pub fn new(
        name: impl Into<String>,
        measured: f64,
        reference: f64,
        tolerance: f64,
        comparison: Comparison,
        details: impl Into<String>,
    ) -> Self {
        let mut r = Self {
            name: name.into(),
            pass: false,
            measured,
            reference,
            tolerance,
            comparison,
            details: details.into(),
        };
        r.pass = r.recompute_pass();
        r
    }

    pub fn recompute_pass(&self) -> bool {
        match self.comparison {
            Comparison::Within => (self.measured - self.reference).abs() <= self.tolerance,
            Comparison::AtLeast => self.measured >= self.reference - self.tolerance,
        }
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<4} {:<40} measured={:.9} reference={:.9} tol={:.1e} {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.reference,
            self.tolerance,
            self.details
        )
    }
}

/// Exact projective norm of an order-2 tensor: the sum of its singular values.
pub fn order2_reference<T: Scalar>(target: &Tensor<T>) -> Result<T> {
    if target.order() != 2 {
        return Err(Error::Shape(format!(
            "order-2 oracle needs a matrix, got shape {:?}",
            target.shape()
        )));
    }
    svd_nuclear_norm(&matricize(target, &[0])?)
}

/// Multi-restart fit of an order-2 tensor against its SVD nuclear norm,
/// relative tolerance 1e-2.
pub fn check_order2<T: Scalar>(target: &Tensor<T>, config: &FitConfig<T>) -> Result<CheckReport> {
    let reference = order2_reference(target)?.as_f64();
    let fit = multi_restart(target, config, FitMode::General)?;
    Ok(CheckReport::new(
        format!("order2 {:?}", target.shape()),
        fit.norm_estimate.as_f64(),
        reference,
        1e-2 * reference,
        Comparison::Within,
        format!(
            "rank={} recon={:.2e} converged={}",
            fit.nuclear_rank,
            fit.recon_error.as_f64(),
            fit.converged
        ),
    ))
}

/// Instances the gradient audit knows how to draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientCase {
    /// Nuclear-rank loss, general model.
    Nuclear { order: usize, field: Field },
    /// Adaptive-rank loss (no norm cost), general model.
    AdaptiveRank { order: usize, field: Field },
    /// Nuclear-rank loss, symmetric model.
    Symmetric { order: usize, field: Field },
    /// Operator model over `parties` parties.
    Density { parties: usize, field: Field },
}

impl fmt::Display for GradientCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GradientCase::Nuclear { order, field } => write!(f, "nrcpd order{order} {field}"),
            GradientCase::AdaptiveRank { order, field } => write!(f, "arcpd order{order} {field}"),
            GradientCase::Symmetric { order, field } => write!(f, "snrcpd order{order} {field}"),
            GradientCase::Density { parties, field } => {
                write!(f, "density {parties}-party {field}")
            }
        }
    }
}

/// Finite-difference step used by the gradient audit.
pub const FD_STEP: f64 = 1e-4;
/// Accepted relative error between analytic and finite-difference gradients.
pub const FD_REL_TOL: f64 = 1e-5;

/// Largest relative error `‖g_fd − g‖₂ / max(‖g‖₂, ‖g_fd‖₂)` over central
/// differences on every real coordinate (imaginary coordinates only for
/// complex models).
pub fn finite_difference_error<M: Decomposition<f64> + Clone>(
    target: &Tensor<f64>,
    model: &M,
    w: &LossWeights<f64>,
    h: f64,
) -> Result<f64> {
    let (_, grads) = evaluate(target, model, w)?;
    let analytic = grads.flat_real();
    let base = params_flat(model);
    let complex = model.field().is_complex();
    let mut probe = model.clone();
    let mut diff_sq = 0.0;
    let mut an_sq = 0.0;
    let mut fd_sq = 0.0;
    for k in 0..base.len() {
        if !complex && k % 2 == 1 {
            continue;
        }
        let mut p = base.clone();
        p[k] = base[k] + h;
        set_params_flat(&mut probe, &p);
        let up = evaluate(target, &probe, w)?.0.total;
        p[k] = base[k] - h;
        set_params_flat(&mut probe, &p);
        let down = evaluate(target, &probe, w)?.0.total;
        let fd = (up - down) / (2.0 * h);
        diff_sq += (fd - analytic[k]).powi(2);
        an_sq += analytic[k].powi(2);
        fd_sq += fd * fd;
    }
    let scale = an_sq.max(fd_sq).sqrt();
    Ok(if scale == 0.0 {
        0.0
    } else {
        diff_sq.sqrt() / scale
    })
}

fn safe_point<M: Decomposition<f64>>(model: &M) -> bool {
    model.coeffs().iter().all(|c| c.norm() > 0.1)
        && (0..model.rank()).all(|j| model.blocks(j).iter().all(|b| b.norm() > 0.5))
}

/// Draw a random instance for `case` from `seed`, resampling until every
/// coefficient exceeds 0.1 in magnitude and every core norm exceeds 0.5.
pub fn gradient_instance(case: GradientCase, seed: u64) -> Result<CheckReport> {
    let mut rng = SplitRng::with_stream(seed, 11);
    let dims_for = |rng: &mut SplitRng, order: usize| -> Vec<usize> {
        (0..order)
            .map(|_| 2 + (rng.next_u64() % 2) as usize)
            .collect()
    };
    let w = LossWeights::<f64>::default();
    for attempt in 0..1000u64 {
        let s = seed.wrapping_mul(1000).wrapping_add(attempt);
        let rank = 1 + (rng.next_u64() % 3) as usize;
        let (err, safe) = match case {
            GradientCase::Nuclear { order, field }
            | GradientCase::AdaptiveRank { order, field } => {
                let dims = dims_for(&mut rng, order);
                let target = random_state::<f64>(&dims, field, s)?;
                let model = init_model::<f64>(&dims, field, rank, s);
                let kind = if matches!(case, GradientCase::Nuclear { .. }) {
                    LossKind::NuclearRank
                } else {
                    LossKind::AdaptiveRank
                };
                if !safe_point(&model) {
                    continue;
                }
                (
                    finite_difference_error(&target, &model, &kind.weights(w), FD_STEP)?,
                    true,
                )
            }
            GradientCase::Symmetric { order, field } => {
                let d = 2 + (rng.next_u64() % 2) as usize;
                let target = random_state::<f64>(&vec![d; order], field, s)?;
                let model = init_symmetric_model::<f64>(d, order, field, rank, s);
                if !safe_point(&model) {
                    continue;
                }
                (finite_difference_error(&target, &model, &w, FD_STEP)?, true)
            }
            GradientCase::Density { parties, field } => {
                let dims = dims_for(&mut rng, parties);
                let shape: Vec<usize> = dims.iter().chain(&dims).copied().collect();
                let target = random_state::<f64>(&shape, field, s)?;
                let model = init_density_model::<f64>(&dims, field, rank, s);
                if !safe_point(&model) {
                    continue;
                }
                (finite_difference_error(&target, &model, &w, FD_STEP)?, true)
            }
        };
        if safe {
            return Ok(CheckReport::new(
                format!("gradient {case} seed={seed}"),
                err,
                0.0,
                FD_REL_TOL,
                Comparison::Within,
                format!("h={FD_STEP:e}"),
            ));
        }
    }
    Err(Error::Config(format!("no safe instance found for {case}")))
}

/// Audit the analytic gradient of one random instance.
pub fn check_gradient(case: GradientCase, seed: u64) -> Result<CheckReport> {
    gradient_instance(case, seed)
}

/// Fit `ψ` as a vector and `ψψ*` as an operator; the operator norm should
/// equal the square of the vector norm (within 0.03).
pub fn check_pure_density_consistency<T: Scalar>(
    psi: &Tensor<T>,
    config: &FitConfig<T>,
    density_config: &FitConfig<T>,
) -> Result<CheckReport> {
    let vec_fit = multi_restart(psi, config, FitMode::General)?;
    let rho = density_from_pure(psi)?;
    let rho_fit = multi_restart(&rho, density_config, FitMode::Density)?;
    let v = vec_fit.norm_estimate.as_f64();
    Ok(CheckReport::new(
        format!("pure/density {:?}", psi.shape()),
        rho_fit.norm_estimate.as_f64(),
        v * v,
        0.03,
        Comparison::Within,
        format!(
            "vector norm={v:.6} (conv {}), density recon={:.2e} (conv {})",
            vec_fit.converged,
            rho_fit.recon_error.as_f64(),
            rho_fit.converged
        ),
    ))
}

/// `norm_estimate ≥ ‖target‖_F − recon_error` (the projective norm dominates
/// the Frobenius norm).
pub fn check_frobenius_lower_bound<T: Scalar>(
    result: &FitResult<T>,
    target: &Tensor<T>,
) -> CheckReport {
    let reference = (target.frobenius_norm() - result.recon_error).as_f64();
    CheckReport::new(
        "frobenius lower bound",
        result.norm_estimate.as_f64(),
        reference,
        1e-10,
        Comparison::AtLeast,
        format!("recon={:.2e}", result.recon_error.as_f64()),
    )
}

/// One restart inside a multi-start oracle run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleRun {
    pub seed: u64,
    pub norm: f64,
    pub rank: usize,
    pub recon_error: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleOutcome {
    /// Minimum norm over converged runs.
    pub norm: f64,
    /// Nuclear rank of that run.
    pub rank: usize,
    pub seed: u64,
    pub runs: Vec<OracleRun>,
}

impl OracleOutcome {
    /// Minimum converged norm over the first `n` runs.
    pub fn prefix_min(&self, n: usize) -> Option<f64> {
        self.runs[..n.min(self.runs.len())]
            .iter()
            .filter(|r| r.converged)
            .map(|r| r.norm)
            .fold(None, |m, x| Some(m.map_or(x, |m: f64| m.min(x))))
    }
}

/// Recommended number of starts for locking reference constants.
pub const ORACLE_STARTS: usize = 64;

/// Brute-force baseline: `n_starts` restarts with `epoch_factor`× the
/// configured epoch budget; returns the smallest converged norm.
pub fn multi_start_oracle<T: Scalar>(
    target: &Tensor<T>,
    n_starts: usize,
    epoch_factor: usize,
    config: &FitConfig<T>,
    mode: FitMode,
) -> Result<OracleOutcome> {
    if n_starts == 0 {
        return Err(Error::Config("oracle needs at least one start".into()));
    }
    let mut cfg = config.clone();
    cfg.restarts = n_starts;
    cfg.max_epochs = config.max_epochs * epoch_factor.max(1);
    let runs: Vec<OracleRun> = fit_all(target, &cfg, mode)
        .into_iter()
        .enumerate()
        .filter_map(|(i, r)| {
            r.ok().map(|f| OracleRun {
                seed: cfg.seed.wrapping_add(i as u64),
                norm: f.norm_estimate.as_f64(),
                rank: f.nuclear_rank,
                recon_error: f.recon_error.as_f64(),
                converged: f.converged,
            })
        })
        .collect();
    let best = runs
        .iter()
        .filter(|r| r.converged)
        .min_by(|a, b| a.norm.partial_cmp(&b.norm).expect("finite norms"))
        .ok_or_else(|| Error::Config("no oracle start converged".into()))?;
    Ok(OracleOutcome {
        norm: best.norm,
        rank: best.rank,
        seed: best.seed,
        runs: runs.clone(),
    })
}

/// One entry of `fixtures/reference_norms.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceNorm {
    pub state: String,
    pub field: Field,
    pub norm: f64,
    pub rank: usize,
    pub oracle_seed: u64,
    pub n_starts: usize,
}

pub fn load_fixtures(path: &Path) -> Result<Vec<ReferenceNorm>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))
}

pub fn find_fixture<'a>(
    fixtures: &'a [ReferenceNorm],
    state: &str,
    field: Field,
) -> Option<&'a ReferenceNorm> {
    fixtures
        .iter()
        .find(|f| f.state == state && f.field == field)
}
