use crate::objectives::{Decomposition, Gradients};
use crate::scalar::Scalar;

use super::FitConfig;

/// Moment accumulators over every real coordinate of a model.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T: Scalar> {
    pub m: Vec<T>,
    pub v: Vec<T>,
    pub t: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new<M: Decomposition<T>>(model: &M) -> Self {
        let n = param_count(model);
        Self {
            m: vec![T::zero(); n],
            v: vec![T::zero(); n],
            t: 0,
        }
    }

    /// Forget the moments of one coefficient (used when it is pruned).
    pub(crate) fn reset_coeff<M: Decomposition<T>>(&mut self, model: &M, j: usize) {
        let base = param_count(model) - 2 * model.rank() + 2 * j;
        for k in base..base + 2 {
            self.m[k] = T::zero();
            self.v[k] = T::zero();
        }
    }

    /// Forget the moments of one block (used after re-randomizing it).
    pub(crate) fn reset_block<M: Decomposition<T>>(&mut self, model: &M, j: usize, b: usize) {
        let mut base = 0;
        for jj in 0..j {
            base += model.blocks(jj).iter().map(|v| 2 * v.dim()).sum::<usize>();
        }
        base += model.blocks(j)[..b]
            .iter()
            .map(|v| 2 * v.dim())
            .sum::<usize>();
        for k in base..base + 2 * model.blocks(j)[b].dim() {
            self.m[k] = T::zero();
            self.v[k] = T::zero();
        }
    }
}

/// Number of real coordinates (blocks then coefficients, re/im pairs).
pub fn param_count<T: Scalar, M: Decomposition<T>>(model: &M) -> usize {
    let blocks: usize = (0..model.rank())
        .map(|j| model.blocks(j).iter().map(|v| v.dim()).sum::<usize>())
        .sum();
    2 * (blocks + model.rank())
}

/// One bias-corrected Adam update applied independently to every real
/// coordinate. Returns the largest coordinate change.
pub fn adam_step<T: Scalar, M: Decomposition<T>>(
    model: &mut M,
    grads: &Gradients<T>,
    state: &mut AdamState<T>,
    config: &FitConfig<T>,
) -> T {
    adam_step_with(model, grads, state, config, config.step_size)
}

/// [`adam_step`] with an explicit step size.
pub(crate) fn adam_step_with<T: Scalar, M: Decomposition<T>>(
    model: &mut M,
    grads: &Gradients<T>,
    state: &mut AdamState<T>,
    config: &FitConfig<T>,
    alpha: T,
) -> T {
    state.t += 1;
    let t = i32::try_from(state.t).unwrap_or(i32::MAX);
    let (b1, b2) = (config.adam_beta1, config.adam_beta2);
    let c1 = T::one() - b1.powi(t);
    let c2 = T::one() - b2.powi(t);
    let eps = config.adam_eps;
    let mut k = 0usize;
    let mut max_delta = T::zero();

    let mut update = |p: &mut T, g: T, k: &mut usize| {
        let m = &mut state.m[*k];
        let v = &mut state.v[*k];
        *m = b1 * *m + (T::one() - b1) * g;
        *v = b2 * *v + (T::one() - b2) * g * g;
        let step = alpha * (*m / c1) / ((*v / c2).sqrt() + eps);
        *p -= step;
        max_delta = max_delta.max(step.abs());
        *k += 1;
    };

    for j in 0..model.rank() {
        for (block, gblock) in model.blocks_mut(j).iter_mut().zip(&grads.blocks[j]) {
            for (p, g) in block.as_mut_slice().iter_mut().zip(gblock) {
                update(&mut p.re, g.re, &mut k);
                update(&mut p.im, g.im, &mut k);
            }
        }
    }
    for (p, g) in model.coeffs_mut().iter_mut().zip(&grads.coeffs) {
        update(&mut p.re, g.re, &mut k);
        update(&mut p.im, g.im, &mut k);
    }
    max_delta
}
