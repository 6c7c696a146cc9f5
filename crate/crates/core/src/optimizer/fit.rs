use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::objectives::{
    effective_rank, evaluate, loss, norm_estimate, snapshot, term_overlap, Decomposition,
    LossBreakdown, LossKind, LossWeights, ModelSnapshot, DEGENERACY_FLOOR,
};
use crate::scalar::{zero, Field, Scalar, C};
use crate::tensor::Tensor;

use super::adam::{adam_step_with, AdamState};
use super::init::{init_density_model, init_model, init_symmetric_model, random_core};
use super::rng::SplitRng;
use super::{rank_upper_bound, rank_upper_bound_density, rank_upper_bound_symmetric, FitConfig};

/// Which decomposition a fit uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FitMode {
    /// General CP terms (vector-form tensors).
    General,
    /// One shared core per term (symmetric tensors).
    Symmetric,
    /// Operator terms `⊗|a⟩⟨b|` (density matrices).
    Density,
}

/// One per-epoch sample of the objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow<T: Scalar> {
    pub epoch: usize,
    pub total_loss: T,
    pub recon_error: T,
    pub rank_count: usize,
    pub norm_sum: T,
}

impl<T: Scalar> TraceRow<T> {
    fn new(epoch: usize, b: &LossBreakdown<T>) -> Self {
        Self {
            epoch,
            total_loss: b.total,
            recon_error: b.recon,
            rank_count: b.rank_count,
            norm_sum: b.norm_sum,
        }
    }
}

/// Outcome of a fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult<T: Scalar> {
    /// `Σ |C_j|`.
    pub norm_estimate: T,
    /// Coefficients above the pruning tolerance.
    pub nuclear_rank: usize,
    pub recon_error: T,
    /// `recon_error <= recon_tol`.
    pub converged: bool,
    /// Nonzero final coefficients, in term order.
    pub coeffs: Vec<C<T>>,
    pub trace: Vec<TraceRow<T>>,
    pub restart_index: usize,
    /// Epochs actually run (early stopping may cut the budget).
    pub wall_epochs: usize,
    /// Candidate rank `R` the fit started from.
    pub rank_bound: usize,
    pub mode: FitMode,
    /// Restarts that ended in an error (multi-restart only).
    pub failed_restarts: usize,
    /// ‖target‖_F, kept for the verdict margin.
    pub target_norm: T,
    pub model: ModelSnapshot,
}

fn check_field<T: Scalar>(target: &Tensor<T>, config: &FitConfig<T>) -> Result<Field> {
    match config.field {
        None => Ok(target.field()),
        Some(Field::Real) if target.field().is_complex() => Err(Error::FieldMismatch {
            target: target.field(),
            config: Field::Real,
        }),
        Some(f) => Ok(f),
    }
}

/// Party dimensions of an operator-shaped tensor `[d_1..d_m, d_1..d_m]`.
pub fn operator_parties(shape: &[usize]) -> Result<Vec<usize>> {
    let m = shape.len() / 2;
    if !shape.len().is_multiple_of(2) || m == 0 || shape[..m] != shape[m..] {
        return Err(Error::NotOperator(shape.to_vec()));
    }
    Ok(shape[..m].to_vec())
}

fn prepare<T: Scalar>(target: &Tensor<T>, config: &FitConfig<T>) -> Result<Field> {
    config.validate()?;
    if target.frobenius_norm() == T::zero() {
        return Err(Error::ZeroTarget);
    }
    check_field(target, config)
}

/// Single fit with general CP terms (seed `config.seed`).
pub fn fit<T: Scalar>(target: &Tensor<T>, config: &FitConfig<T>) -> Result<FitResult<T>> {
    fit_seeded(target, config, FitMode::General, config.seed, 0)
}

/// Single fit with symmetric terms; the target must be symmetric to 1e-10.
pub fn fit_symmetric<T: Scalar>(target: &Tensor<T>, config: &FitConfig<T>) -> Result<FitResult<T>> {
    fit_seeded(target, config, FitMode::Symmetric, config.seed, 0)
}

/// Single fit of an operator-shaped tensor with `⊗|a⟩⟨b|` terms.
pub fn fit_density<T: Scalar>(target: &Tensor<T>, config: &FitConfig<T>) -> Result<FitResult<T>> {
    fit_seeded(target, config, FitMode::Density, config.seed, 0)
}

/// Default candidate rank for `mode` on `target`.
pub fn default_rank<T: Scalar>(target: &Tensor<T>, mode: FitMode) -> Result<usize> {
    Ok(match mode {
        FitMode::General => rank_upper_bound(target.shape()),
        FitMode::Symmetric => rank_upper_bound_symmetric(target.shape()[0], target.order()),
        FitMode::Density => rank_upper_bound_density(&operator_parties(target.shape())?),
    })
}

/// One fit in `mode` from the initialization drawn with `seed`.
pub fn fit_seeded<T: Scalar>(
    target: &Tensor<T>,
    config: &FitConfig<T>,
    mode: FitMode,
    seed: u64,
    restart_index: usize,
) -> Result<FitResult<T>> {
    let field = prepare(target, config)?;
    let rank = match config.rank_override {
        Some(r) => r,
        None => default_rank(target, mode)?,
    };
    match mode {
        FitMode::General => {
            let model = init_model(target.shape(), field, rank, seed);
            run(target, model, config, seed, restart_index, mode)
        }
        FitMode::Symmetric => {
            let defect = target.symmetry_defect()?;
            if defect > T::lit(1e-10) {
                return Err(Error::NotSymmetric(defect.as_f64()));
            }
            let model = init_symmetric_model(target.shape()[0], target.order(), field, rank, seed);
            run(target, model, config, seed, restart_index, mode)
        }
        FitMode::Density => {
            let parties = operator_parties(target.shape())?;
            let model = init_density_model(&parties, field, rank, seed);
            run(target, model, config, seed, restart_index, mode)
        }
    }
}

/// Re-randomize every block of term `j` whose norm fell below the floor.
fn reinit_term<T: Scalar, M: Decomposition<T>>(
    model: &mut M,
    adam: &mut AdamState<T>,
    rng: &mut SplitRng,
    j: usize,
) {
    let field = model.field();
    let floor = T::lit(DEGENERACY_FLOOR);
    let dead: Vec<usize> = model
        .blocks(j)
        .iter()
        .enumerate()
        .filter(|(_, v)| !(v.norm() >= floor))
        .map(|(b, _)| b)
        .collect();
    for b in dead {
        let dim = model.blocks(j)[b].dim();
        model.blocks_mut(j)[b] = random_core(rng, dim, field);
        adam.reset_block(model, j, b);
    }
}

/// Terms whose normalized tensors overlap by more than `1 − MERGE_GAP` in
/// magnitude are merged at pruning boundaries.
pub const MERGE_GAP: f64 = 1e-6;

/// Overlap gap for the post-fit merge of near-parallel terms.
pub const CONSOLIDATE_GAP: f64 = 1e-3;

/// Hard pruning: every `period` epochs a coefficient with `|C_j| < ε` is set
/// to 0 and held there for the next `period` epochs, with its Adam moments
/// cleared.
#[derive(Debug, Clone)]
pub(crate) struct Pruner<T: Scalar> {
    enabled: bool,
    period: usize,
    epsilon: T,
    // last epoch of each coefficient's freeze window (0 = never pruned)
    frozen_until: Vec<usize>,
}

impl<T: Scalar> Pruner<T> {
    pub(crate) fn new(config: &FitConfig<T>, rank: usize) -> Self {
        Self {
            enabled: config.pruning,
            period: config.prune_period,
            epsilon: config.weights.epsilon,
            frozen_until: vec![0; rank],
        }
    }

    pub(crate) fn is_frozen(&self, j: usize, epoch: usize) -> bool {
        self.frozen_until[j] != 0 && epoch <= self.frozen_until[j]
    }

    /// Apply after the update that completed epoch `epoch` (1-based).
    pub(crate) fn after_step<M: Decomposition<T>>(
        &mut self,
        epoch: usize,
        model: &mut M,
        adam: &mut AdamState<T>,
    ) {
        let boundary = self.enabled && epoch.is_multiple_of(self.period);
        if boundary {
            self.merge_parallel(epoch, model, adam);
        }
        for j in 0..self.frozen_until.len() {
            if boundary && !self.is_frozen(j, epoch) && model.coeffs()[j].norm() < self.epsilon {
                self.frozen_until[j] = epoch + self.period;
            }
            if self.is_frozen(j, epoch) {
                model.coeffs_mut()[j] = zero();
                adam.reset_coeff(model, j);
            }
        }
    }
}

impl<T: Scalar> Pruner<T> {
    /// Fold every live term whose `φ` is parallel to an earlier live term into
    /// that term (`C_i += ⟨φ_i, φ_j⟩ C_j`) and freeze the emptied slot. The
    /// coefficient mass cannot grow and the reconstruction moves by at most
    /// `|C_j| ‖φ_j − ⟨φ_i, φ_j⟩ φ_i‖`.
    fn merge_parallel<M: Decomposition<T>>(
        &mut self,
        epoch: usize,
        model: &mut M,
        adam: &mut AdamState<T>,
    ) {
        let rank = self.frozen_until.len();
        let threshold = T::one() - T::lit(MERGE_GAP);
        for i in 0..rank {
            if self.is_frozen(i, epoch) || model.coeffs()[i] == zero() {
                continue;
            }
            for j in i + 1..rank {
                if self.is_frozen(j, epoch) || model.coeffs()[j] == zero() {
                    continue;
                }
                let Ok(ov) = term_overlap(model, i, j) else {
                    continue;
                };
                if ov.norm() > threshold {
                    let cj = model.coeffs()[j];
                    model.coeffs_mut()[i] += ov * cj;
                    model.coeffs_mut()[j] = zero();
                    adam.reset_coeff(model, i);
                    adam.reset_coeff(model, j);
                    self.frozen_until[j] = epoch + self.period;
                }
            }
        }
    }
}

/// Term `j` folded into term `i`. Each block of `j` is phase-aligned with the
/// matching block of `i`; the new block of `i` is the coefficient-weighted
/// average of the two unit blocks (conjugated weights on blocks that enter
/// conjugated), and `C_i` the coefficient that best reproduces
/// `C_i φ_i + C_j φ_j` along the new direction. Unlike
/// `C_i += ⟨φ_i, φ_j⟩ C_j` this keeps the pair's sum to second order in the
/// angle between the terms.
pub(crate) fn blend<T: Scalar, M: Decomposition<T> + Clone>(
    model: &M,
    i: usize,
    j: usize,
) -> Result<M> {
    let one = C::new(T::one(), T::zero());
    let n_blocks = model.blocks(i).len();
    let mut conj_block = vec![false; n_blocks];
    for slot in 0..model.slot_count() {
        let (b, conj) = model.slot_source(slot);
        conj_block[b] = conj;
    }
    let mut units = Vec::with_capacity(n_blocks);
    let mut phases = Vec::with_capacity(n_blocks);
    for (u, v) in model.blocks(i).iter().zip(model.blocks(j)) {
        let (nu, nv) = (u.norm(), v.norm());
        if !(nu.min(nv) >= T::lit(DEGENERACY_FLOOR)) {
            return Err(Error::DegenerateCore {
                term: if nu < nv { i } else { j },
                norm: nu.min(nv).as_f64(),
            });
        }
        let ip: C<T> = u
            .as_slice()
            .iter()
            .zip(v.as_slice())
            .map(|(a, b)| a.conj() * b)
            .sum();
        let phase = if ip.norm() > T::zero() {
            ip.conj() / ip.norm()
        } else {
            one
        };
        units.push((one / nu, phase / nv));
        phases.push(phase);
    }
    // aligned φ_j' = g φ_j
    let g = (0..model.slot_count()).fold(one, |acc, slot| {
        let (b, conj) = model.slot_source(slot);
        acc * if conj { phases[b].conj() } else { phases[b] }
    });
    let (wi, wj) = (model.coeffs()[i], model.coeffs()[j] / g);
    let mut blocks = Vec::with_capacity(n_blocks);
    for (b, (u, v)) in model.blocks(i).iter().zip(model.blocks(j)).enumerate() {
        let (wi, wj) = if conj_block[b] {
            (wi.conj(), wj.conj())
        } else {
            (wi, wj)
        };
        let (si, sj) = (units[b].0 * wi, units[b].1 * wj);
        let data = u
            .as_slice()
            .iter()
            .zip(v.as_slice())
            .map(|(a, b)| *a * si + *b * sj)
            .collect();
        blocks.push(crate::tensor::Vector::new(data, u.field())?);
    }
    // ⟨φ_new, φ_i⟩ and ⟨φ_new, φ_j⟩, with the new term parked in the other slot.
    let mut probe = model.clone();
    probe.blocks_mut(j).clone_from_slice(&blocks);
    let with_i = term_overlap(&probe, j, i)?;
    let mut probe = model.clone();
    probe.blocks_mut(i).clone_from_slice(&blocks);
    let with_j = term_overlap(&probe, i, j)?;
    let c = model.coeffs()[i] * with_i + model.coeffs()[j] * with_j;
    probe.coeffs_mut()[i] = c;
    probe.coeffs_mut()[j] = zero();
    Ok(probe)
}

/// Final clean-up: fold each smaller term into the live term it is most
/// parallel to when they overlap by more than `1 − CONSOLIDATE_GAP`, keeping a
/// merge only if the reconstruction error stays within `recon_tol` (or does
/// not grow) and the coefficient mass does not grow.
fn consolidate<T: Scalar, M: Decomposition<T> + Clone>(
    target: &Tensor<T>,
    model: &mut M,
    weights: &LossWeights<T>,
    recon_tol: T,
) -> Result<()> {
    let threshold = T::one() - T::lit(CONSOLIDATE_GAP);
    let mut order: Vec<usize> = (0..model.rank())
        .filter(|&j| model.coeffs()[j] != zero())
        .collect();
    order.sort_by(|&a, &b| {
        model.coeffs()[b]
            .norm()
            .partial_cmp(&model.coeffs()[a].norm())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut recon = loss(target, model, weights, LossKind::NuclearRank)?.recon;
    for (pos, &j) in order.iter().enumerate().rev() {
        let mut best: Option<(usize, C<T>)> = None;
        for &i in &order[..pos] {
            if model.coeffs()[i] == zero() {
                continue;
            }
            let ov = term_overlap(model, i, j)?;
            if ov.norm() > threshold && best.is_none_or(|(_, b)| ov.norm() > b.norm()) {
                best = Some((i, ov));
            }
        }
        let Some((i, ov)) = best else { continue };
        let mass = norm_estimate(model.coeffs());
        let mut folded = model.clone();
        let cj = folded.coeffs()[j];
        folded.coeffs_mut()[i] += ov * cj;
        folded.coeffs_mut()[j] = zero();
        for trial in [blend(model, i, j)?, folded] {
            let r = loss(target, &trial, weights, LossKind::NuclearRank)?.recon;
            if (r <= recon_tol || r <= recon) && norm_estimate(trial.coeffs()) <= mass {
                *model = trial;
                recon = r;
                break;
            }
        }
    }
    Ok(())
}

fn run<T: Scalar, M: Decomposition<T> + Clone>(
    target: &Tensor<T>,
    mut model: M,
    config: &FitConfig<T>,
    seed: u64,
    restart_index: usize,
    mode: FitMode,
) -> Result<FitResult<T>> {
    let weights = LossKind::NuclearRank.weights(config.weights);
    let recon_tol = config.recon_tol_for(target.frobenius_norm());
    let rank = model.rank();
    let mut adam = AdamState::new(&model);
    let mut reinit_rng = SplitRng::with_stream(seed, 1);
    let mut reinits = 0usize;
    let mut pruner = Pruner::new(config, rank);
    let mut trace = Vec::with_capacity(config.max_epochs + 1);
    let mut stagnant = 0usize;
    let mut epochs_run = 0usize;
    let stagnation_floor = T::lit(1e-10);

    while epochs_run < config.max_epochs {
        let (breakdown, grads) = match evaluate(target, &model, &weights) {
            Ok(v) => v,
            Err(Error::DegenerateCore { term, .. }) => {
                reinits += 1;
                if reinits > config.max_reinit {
                    return Err(Error::Diverged(reinits));
                }
                reinit_term(&mut model, &mut adam, &mut reinit_rng, term);
                continue;
            }
            Err(e) => return Err(e),
        };
        trace.push(TraceRow::new(epochs_run, &breakdown));
        let delta = adam_step_with(
            &mut model,
            &grads,
            &mut adam,
            config,
            config.step_at(epochs_run),
        );
        epochs_run += 1;

        pruner.after_step(epochs_run, &mut model, &mut adam);

        if breakdown.recon < stagnation_floor && delta < stagnation_floor {
            stagnant += 1;
            if stagnant >= config.stagnation_window {
                break;
            }
        } else {
            stagnant = 0;
        }
    }

    if config.pruning {
        match consolidate(target, &mut model, &weights, recon_tol) {
            Ok(()) | Err(Error::DegenerateCore { .. }) => {}
            Err(e) => return Err(e),
        }
    }

    let final_breakdown = loop {
        match evaluate(target, &model, &weights) {
            Ok((b, _)) => break b,
            Err(Error::DegenerateCore { term, .. }) => {
                reinits += 1;
                if reinits > config.max_reinit {
                    return Err(Error::Diverged(reinits));
                }
                reinit_term(&mut model, &mut adam, &mut reinit_rng, term);
            }
            Err(e) => return Err(e),
        }
    };
    trace.push(TraceRow::new(epochs_run, &final_breakdown));

    let coeffs: Vec<C<T>> = model
        .coeffs()
        .iter()
        .copied()
        .filter(|c| *c != zero())
        .collect();
    Ok(FitResult {
        norm_estimate: norm_estimate(&coeffs),
        nuclear_rank: effective_rank(&coeffs, config.prune_tolerance),
        recon_error: final_breakdown.recon,
        converged: final_breakdown.recon <= recon_tol,
        coeffs,
        trace,
        restart_index,
        wall_epochs: epochs_run,
        rank_bound: rank,
        mode,
        failed_restarts: 0,
        target_norm: target.frobenius_norm(),
        model: snapshot(&model),
    })
}

/// Run `config.restarts` independent fits (seeds `seed + i`), concurrently.
/// Results come back in restart order.
pub fn fit_all<T: Scalar>(
    target: &Tensor<T>,
    config: &FitConfig<T>,
    mode: FitMode,
) -> Vec<Result<FitResult<T>>> {
    (0..config.restarts)
        .into_par_iter()
        .map(|i| fit_seeded(target, config, mode, config.seed.wrapping_add(i as u64), i))
        .collect()
}

/// Best of several fits: the smallest norm among converged runs (ties within
/// 1e-10 go to the lower restart index), else the smallest reconstruction
/// error flagged unconverged.
pub fn select_best<T: Scalar>(runs: Vec<Result<FitResult<T>>>) -> Result<FitResult<T>> {
    let failed = runs.iter().filter(|r| r.is_err()).count();
    let mut first_err = None;
    let mut ok = Vec::new();
    for r in runs {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    ok.sort_by_key(|r| r.restart_index);
    let tie = T::lit(1e-10);
    let mut best: Option<FitResult<T>> = None;
    for r in ok.iter().filter(|r| r.converged) {
        match &best {
            Some(b) if !(r.norm_estimate < b.norm_estimate - tie) => {}
            _ => best = Some(r.clone()),
        }
    }
    if best.is_none() {
        for r in &ok {
            match &best {
                Some(b) if !(r.recon_error < b.recon_error) => {}
                _ => best = Some(r.clone()),
            }
        }
    }
    match best {
        Some(mut b) => {
            b.failed_restarts = failed;
            Ok(b)
        }
        None => Err(first_err.unwrap_or(Error::Config("no restarts were run".into()))),
    }
}

/// Independent restarts reduced deterministically to the best result.
pub fn multi_restart<T: Scalar>(
    target: &Tensor<T>,
    config: &FitConfig<T>,
    mode: FitMode,
) -> Result<FitResult<T>> {
    config.validate()?;
    select_best(fit_all(target, config, mode))
}
