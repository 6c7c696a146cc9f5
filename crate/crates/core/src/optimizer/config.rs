use crate::error::{Error, Result};
use crate::objectives::LossWeights;
use crate::scalar::{Field, Scalar};

/// Everything that controls a fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig<T: Scalar> {
    pub weights: LossWeights<T>,
    /// Adam step size α.
    pub step_size: T,
    pub adam_beta1: T,
    pub adam_beta2: T,
    pub adam_eps: T,
    pub max_epochs: usize,
    /// Trailing fraction of the epoch budget over which the step size decays
    /// geometrically; 0 keeps α constant throughout.
    pub cooldown_fraction: T,
    /// Step-size multiplier reached at the last epoch of the cool-down.
    pub cooldown_factor: T,
    /// Coefficients above this magnitude count toward the nuclear rank.
    pub prune_tolerance: T,
    /// Pruning cadence in epochs; also the freeze window of a pruned slot.
    pub prune_period: usize,
    pub pruning: bool,
    pub restarts: usize,
    pub seed: u64,
    /// Absolute reconstruction error accepted as converged;
    /// `None` means `1e-4 · ‖target‖_F`.
    pub recon_tol: Option<T>,
    /// Replaces the default candidate rank.
    pub rank_override: Option<usize>,
    /// Field of the model; `None` follows the target.
    pub field: Option<Field>,
    /// Consecutive stagnant epochs before stopping early.
    pub stagnation_window: usize,
    /// Degenerate-core re-initializations tolerated before declaring divergence.
    pub max_reinit: usize,
}

impl<T: Scalar> Default for FitConfig<T> {
    fn default() -> Self {
        Self {
            weights: LossWeights::default(),
            step_size: T::lit(0.01),
            adam_beta1: T::lit(0.9),
            adam_beta2: T::lit(0.999),
            adam_eps: T::lit(1e-8),
            max_epochs: 20_000,
            cooldown_fraction: T::lit(0.25),
            cooldown_factor: T::lit(1e-3),
            prune_tolerance: T::lit(1e-2),
            prune_period: 500,
            pruning: true,
            restarts: 8,
            seed: 0,
            recon_tol: None,
            rank_override: None,
            field: None,
            stagnation_window: 200,
            max_reinit: 100,
        }
    }
}

impl<T: Scalar> FitConfig<T> {
    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        let (b1, b2) = (self.adam_beta1, self.adam_beta2);
        if !(T::zero() < b1 && b1 < b2 && b2 < T::one()) {
            return Err(Error::Config("need 0 < beta1 < beta2 < 1".into()));
        }
        if !(self.step_size > T::zero()) || !(self.adam_eps > T::zero()) {
            return Err(Error::Config(
                "step size and adam_eps must be positive".into(),
            ));
        }
        if !(self.prune_tolerance > T::zero()) {
            return Err(Error::Config("prune tolerance must be positive".into()));
        }
        if let Some(tol) = self.recon_tol {
            if !(tol > T::zero()) {
                return Err(Error::Config("recon_tol must be positive".into()));
            }
        }
        if self.max_epochs == 0 || self.restarts == 0 || self.prune_period == 0 {
            return Err(Error::Config(
                "max_epochs, restarts and prune_period must be positive".into(),
            ));
        }
        if !(self.cooldown_fraction >= T::zero() && self.cooldown_fraction <= T::one()) {
            return Err(Error::Config(
                "cool-down fraction must lie in [0, 1]".into(),
            ));
        }
        if !(self.cooldown_factor > T::zero() && self.cooldown_factor <= T::one()) {
            return Err(Error::Config("cool-down factor must lie in (0, 1]".into()));
        }
        if self.rank_override == Some(0) {
            return Err(Error::Config("rank override must be at least 1".into()));
        }
        Ok(())
    }

    /// Step size used at `epoch` (constant, then the geometric cool-down).
    pub fn step_at(&self, epoch: usize) -> T {
        let total = T::from_usize(self.max_epochs).expect("epoch count fits");
        let start = total * (T::one() - self.cooldown_fraction);
        let e = T::from_usize(epoch).expect("epoch fits");
        if self.cooldown_fraction == T::zero() || e < start {
            return self.step_size;
        }
        let progress = ((e - start) / (total - start)).min(T::one());
        self.step_size * self.cooldown_factor.powf(progress)
    }

    pub fn recon_tol_for(&self, target_norm: T) -> T {
        self.recon_tol.unwrap_or(T::lit(1e-4) * target_norm)
    }
}
