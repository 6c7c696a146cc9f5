//! Decomposition models, the three loss functions and their analytic
//! gradients.
//!
//! Gradients of the real-valued loss with respect to a complex parameter `z`
//! are reported as `∂L/∂Re z + i ∂L/∂Im z`, i.e. twice the conjugate
//! Wirtinger derivative; its negative is the steepest-descent direction.

mod model;

pub use model::{snapshot, CpModel, Decomposition, DensityCpModel, ModelSnapshot};

use crate::error::{Error, Result};
use crate::scalar::{re, zero, Field, Scalar, C};
use crate::tensor::{next_index, norm2, outer_slices, Tensor};

/// Core norms below this make `φ_j` undefined.
pub const DEGENERACY_FLOOR: f64 = 1e-12;

/// Below this reconstruction error the `k1` term contributes no gradient.
pub const RECON_GRAD_FLOOR: f64 = 1e-14;

/// Regularization constants and the indicator threshold ε.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights<T: Scalar> {
    pub k1: T,
    pub k2: T,
    pub k3: T,
    pub epsilon: T,
}

impl<T: Scalar> Default for LossWeights<T> {
    fn default() -> Self {
        Self {
            k1: T::lit(100.0),
            k2: T::one(),
            k3: T::lit(10.0),
            epsilon: T::lit(1e-3),
        }
    }
}

impl<T: Scalar> LossWeights<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.k1 > T::zero()) || !(self.epsilon > T::zero()) {
            return Err(Error::Config("k1 and epsilon must be positive".into()));
        }
        if self.k2 < T::zero() || self.k3 < T::zero() {
            return Err(Error::Config("k2 and k3 must be nonnegative".into()));
        }
        Ok(())
    }

    /// Same weights with the norm cost switched off (adaptive-rank objective).
    pub fn without_norm_cost(self) -> Self {
        Self {
            k3: T::zero(),
            ..self
        }
    }
}

/// Loss value split into its terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown<T: Scalar> {
    /// Unweighted reconstruction error ‖target − reconstruction‖_F.
    pub recon: T,
    /// Number of coefficients with |C_j| > ε.
    pub rank_count: usize,
    /// Σ |C_j|.
    pub norm_sum: T,
    pub total: T,
}

impl<T: Scalar> LossBreakdown<T> {
    fn assemble(recon: T, coeffs: &[C<T>], w: &LossWeights<T>) -> Self {
        let rank_count = coeffs.iter().filter(|c| c.norm() > w.epsilon).count();
        let norm_sum = norm_estimate(coeffs);
        let total =
            w.k1 * recon + w.k2 * T::from_usize(rank_count).expect("count fits") + w.k3 * norm_sum;
        Self {
            recon,
            rank_count,
            norm_sum,
            total,
        }
    }
}

/// Gradient of the loss, shaped like the model's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T: Scalar> {
    /// `[term][block][entry]`, blocks in the model's own order.
    pub blocks: Vec<Vec<Vec<C<T>>>>,
    pub coeffs: Vec<C<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn zeros_like<M: Decomposition<T>>(model: &M) -> Self {
        Self {
            blocks: (0..model.rank())
                .map(|j| {
                    model
                        .blocks(j)
                        .iter()
                        .map(|v| vec![zero(); v.dim()])
                        .collect()
                })
                .collect(),
            coeffs: vec![zero(); model.rank()],
        }
    }

    /// Every real coordinate, in model order (blocks first, then coefficients).
    pub fn flat_real(&self) -> Vec<T> {
        self.blocks
            .iter()
            .flatten()
            .flatten()
            .chain(&self.coeffs)
            .flat_map(|z| [z.re, z.im])
            .collect()
    }

    pub fn max_abs(&self) -> T {
        self.flat_real()
            .into_iter()
            .fold(T::zero(), |m, x| m.max(x.abs()))
    }
}

/// Which objective is being minimized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// `k1‖T−T'‖ + k2 Σ 1{|C_j|>ε}`.
    AdaptiveRank,
    /// Adds the norm cost `k3 Σ|C_j|`.
    NuclearRank,
}

impl LossKind {
    pub fn weights<T: Scalar>(self, w: LossWeights<T>) -> LossWeights<T> {
        match self {
            LossKind::AdaptiveRank => w.without_norm_cost(),
            LossKind::NuclearRank => w,
        }
    }
}

/// Factors of term `j` per tensor mode (conjugation applied) and the
/// normalization `∏ ‖factor‖`.
fn term_factors<T: Scalar, M: Decomposition<T>>(
    model: &M,
    j: usize,
) -> Result<(Vec<Vec<C<T>>>, T)> {
    let blocks = model.blocks(j);
    let floor = T::lit(DEGENERACY_FLOOR);
    let block_norms: Vec<T> = blocks.iter().map(|b| b.norm()).collect();
    if let Some(&bad) = block_norms.iter().find(|&&n| !(n >= floor)) {
        return Err(Error::DegenerateCore {
            term: j,
            norm: bad.as_f64(),
        });
    }
    let mut factors = Vec::with_capacity(model.slot_count());
    let mut scale = T::one();
    for slot in 0..model.slot_count() {
        let (b, conj) = model.slot_source(slot);
        let v = blocks[b].as_slice();
        factors.push(if conj {
            v.iter().map(|z| z.conj()).collect()
        } else {
            v.to_vec()
        });
        scale *= block_norms[b];
    }
    Ok((factors, scale))
}

/// `⟨φ_i, φ_j⟩` (conjugate-linear in `φ_i`), from per-slot inner products.
pub fn term_overlap<T: Scalar, M: Decomposition<T>>(model: &M, i: usize, j: usize) -> Result<C<T>> {
    let (bi, bj) = (model.blocks(i), model.blocks(j));
    let mut acc = C::new(T::one(), T::zero());
    for slot in 0..model.slot_count() {
        let (b, conj) = model.slot_source(slot);
        let (u, v) = (&bi[b], &bj[b]);
        let n = u.norm() * v.norm();
        if !(n >= T::lit(DEGENERACY_FLOOR)) {
            return Err(Error::DegenerateCore {
                term: if u.norm() < v.norm() { i } else { j },
                norm: u.norm().min(v.norm()).as_f64(),
            });
        }
        let ip: C<T> = u
            .as_slice()
            .iter()
            .zip(v.as_slice())
            .map(|(a, b)| a.conj() * b)
            .sum();
        acc = acc * if conj { ip.conj() } else { ip } / n;
    }
    Ok(acc)
}

fn unit_term<T: Scalar, M: Decomposition<T>>(model: &M, j: usize) -> Result<Vec<C<T>>> {
    let (factors, scale) = term_factors(model, j)?;
    let slices: Vec<&[C<T>]> = factors.iter().map(Vec::as_slice).collect();
    let inv = T::one() / scale;
    Ok(outer_slices(&slices).into_iter().map(|z| z * inv).collect())
}

fn tensor_field<T: Scalar>(data: &[C<T>], hint: Field) -> Field {
    if hint == Field::Real && data.iter().all(|z| z.im == T::zero()) {
        Field::Real
    } else {
        Field::Complex
    }
}

/// The normalized rank-one term `φ_j` (or `Φ_j` for a density model).
pub fn term_tensor<T: Scalar, M: Decomposition<T>>(model: &M, j: usize) -> Result<Tensor<T>> {
    let data = unit_term(model, j)?;
    let field = tensor_field(&data, model.field());
    Tensor::new(model.target_shape(), data, field)
}

/// `φ_j = a_j^1 ⊗ ... ⊗ a_j^m / ∏ ‖a_j^i‖`.
pub fn build_phi<T: Scalar>(model: &CpModel<T>, j: usize) -> Result<Tensor<T>> {
    term_tensor(model, j)
}

/// `Φ_j = ⊗ |a_j^i⟩⟨b_j^i| / ∏ ‖a_j^i‖‖b_j^i‖`, unit trace norm.
pub fn build_phi_density<T: Scalar>(model: &DensityCpModel<T>, j: usize) -> Result<Tensor<T>> {
    term_tensor(model, j)
}

/// `Σ_j C_j φ_j`.
pub fn reconstruct<T: Scalar, M: Decomposition<T>>(model: &M) -> Result<Tensor<T>> {
    let shape = model.target_shape();
    let n: usize = shape.iter().product();
    let mut acc = vec![zero(); n];
    for (j, &c) in model.coeffs().iter().enumerate() {
        if c == zero() {
            // a zero coefficient contributes nothing, but its cores must still be valid
            term_factors(model, j)?;
            continue;
        }
        for (a, z) in acc.iter_mut().zip(unit_term(model, j)?) {
            *a += c * z;
        }
    }
    let field = tensor_field(&acc, model.field());
    Tensor::new(shape, acc, field)
}

fn check_shape<T: Scalar, M: Decomposition<T>>(target: &Tensor<T>, model: &M) -> Result<()> {
    let expected = model.target_shape();
    if target.shape() != expected.as_slice() {
        return Err(Error::ShapeMismatch {
            expected,
            actual: target.shape().to_vec(),
        });
    }
    Ok(())
}

/// Loss of `model` against `target` for the given objective.
pub fn loss<T: Scalar, M: Decomposition<T>>(
    target: &Tensor<T>,
    model: &M,
    w: &LossWeights<T>,
    kind: LossKind,
) -> Result<LossBreakdown<T>> {
    check_shape(target, model)?;
    let recon = reconstruct(model)?.sub(target)?.frobenius_norm();
    Ok(LossBreakdown::assemble(
        recon,
        model.coeffs(),
        &kind.weights(*w),
    ))
}

/// Adaptive-rank objective: reconstruction plus rank cost.
pub fn loss_arcpd<T: Scalar>(
    target: &Tensor<T>,
    model: &CpModel<T>,
    w: &LossWeights<T>,
) -> Result<LossBreakdown<T>> {
    loss(target, model, w, LossKind::AdaptiveRank)
}

/// Nuclear-rank objective: reconstruction, rank and norm cost. A symmetric
/// model gives the symmetric variant.
pub fn loss_nrcpd<T: Scalar>(
    target: &Tensor<T>,
    model: &CpModel<T>,
    w: &LossWeights<T>,
) -> Result<LossBreakdown<T>> {
    loss(target, model, w, LossKind::NuclearRank)
}

/// Nuclear-rank objective over operator terms.
pub fn loss_density<T: Scalar>(
    target: &Tensor<T>,
    model: &DensityCpModel<T>,
    w: &LossWeights<T>,
) -> Result<LossBreakdown<T>> {
    loss(target, model, w, LossKind::NuclearRank)
}

/// Gradient of the differentiable part of the loss (`k1` and `k3` terms).
/// The weights are used as given; pass `k3 = 0` for the adaptive-rank
/// objective.
pub fn gradients<T: Scalar, M: Decomposition<T>>(
    target: &Tensor<T>,
    model: &M,
    w: &LossWeights<T>,
) -> Result<Gradients<T>> {
    Ok(evaluate(target, model, w)?.1)
}

/// Loss breakdown and gradient in one pass (the weights are used as given).
pub fn evaluate<T: Scalar, M: Decomposition<T>>(
    target: &Tensor<T>,
    model: &M,
    w: &LossWeights<T>,
) -> Result<(LossBreakdown<T>, Gradients<T>)> {
    check_shape(target, model)?;
    let shape = model.target_shape();
    let slots = shape.len();
    let rank = model.rank();

    let mut terms = Vec::with_capacity(rank);
    for j in 0..rank {
        terms.push(term_factors(model, j)?);
    }

    // residual E = T' - T
    let mut residual: Vec<C<T>> = target.as_slice().iter().map(|z| -*z).collect();
    for (&c, (factors, scale)) in model.coeffs().iter().zip(&terms) {
        if c == zero() {
            continue;
        }
        let slices: Vec<&[C<T>]> = factors.iter().map(Vec::as_slice).collect();
        let k = c / *scale;
        for (e, z) in residual.iter_mut().zip(outer_slices(&slices)) {
            *e += k * z;
        }
    }
    let delta = norm2(&residual);
    let breakdown = LossBreakdown::assemble(delta, model.coeffs(), w);

    let mut grads = Gradients::zeros_like(model);
    let recon_active = delta >= T::lit(RECON_GRAD_FLOOR);
    let k1_over_delta = if recon_active {
        w.k1 / delta
    } else {
        T::zero()
    };

    for (j, (factors, scale)) in terms.iter().enumerate() {
        let c = model.coeffs()[j];
        if recon_active {
            // w_s[x] = Σ_{idx: idx_s = x} E[idx] ∏_{l≠s} conj(f_l[idx_l])
            let mut contracted: Vec<Vec<C<T>>> = shape.iter().map(|&d| vec![zero(); d]).collect();
            let mut idx = vec![0usize; slots];
            let mut prefix = vec![re(T::one()); slots + 1];
            let mut flat = 0usize;
            loop {
                for s in 0..slots {
                    prefix[s + 1] = prefix[s] * factors[s][idx[s]].conj();
                }
                let e = residual[flat];
                let mut suffix = re(T::one());
                for s in (0..slots).rev() {
                    contracted[s][idx[s]] += e * prefix[s] * suffix;
                    suffix *= factors[s][idx[s]].conj();
                }
                flat += 1;
                if !next_index(&mut idx, &shape) {
                    break;
                }
            }
            // ⟨u, E⟩ with u the unnormalized outer product
            let overlap = factors[0]
                .iter()
                .zip(&contracted[0])
                .fold(zero(), |acc: C<T>, (f, wv)| acc + f.conj() * wv);

            grads.coeffs[j] += overlap * (k1_over_delta / *scale);

            if c != zero() {
                let radial = (c * overlap.conj()).re;
                for s in 0..slots {
                    let f = &factors[s];
                    let fnorm_sq: T = f.iter().map(|z| z.norm_sqr()).sum();
                    let (block, conj) = model.slot_source(s);
                    let target_block = &mut grads.blocks[j][block];
                    for ((g, wv), fv) in target_block.iter_mut().zip(&contracted[s]).zip(f) {
                        let slot_grad =
                            (c.conj() * *wv - *fv * (radial / fnorm_sq)) * (k1_over_delta / *scale);
                        *g += if conj { slot_grad.conj() } else { slot_grad };
                    }
                }
            }
        }
        let mag = c.norm();
        if mag > T::zero() {
            grads.coeffs[j] += c * (w.k3 / mag);
        }
    }

    if model.field() == Field::Real {
        for z in grads
            .blocks
            .iter_mut()
            .flatten()
            .flatten()
            .chain(grads.coeffs.iter_mut())
        {
            z.im = T::zero();
        }
    }
    Ok((breakdown, grads))
}

/// Every real coordinate of `model` (blocks by term, then coefficients;
/// re/im interleaved). Real-field models still list their zero imaginary parts.
pub fn params_flat<T: Scalar, M: Decomposition<T>>(model: &M) -> Vec<T> {
    let mut out = Vec::new();
    for j in 0..model.rank() {
        for b in model.blocks(j) {
            out.extend(b.as_slice().iter().flat_map(|z| [z.re, z.im]));
        }
    }
    out.extend(model.coeffs().iter().flat_map(|z| [z.re, z.im]));
    out
}

/// Inverse of [`params_flat`].
pub fn set_params_flat<T: Scalar, M: Decomposition<T>>(model: &mut M, values: &[T]) {
    let mut it = values.iter().copied();
    let mut next = || it.next().expect("parameter vector long enough");
    for j in 0..model.rank() {
        for b in model.blocks_mut(j) {
            for z in b.as_mut_slice() {
                *z = C::new(next(), next());
            }
        }
    }
    for z in model.coeffs_mut() {
        *z = C::new(next(), next());
    }
}

/// Number of coefficients with magnitude strictly above `tolerance`.
pub fn effective_rank<T: Scalar>(coeffs: &[C<T>], tolerance: T) -> usize {
    coeffs.iter().filter(|c| c.norm() > tolerance).count()
}

/// `Σ |C_j|`, the projective norm estimate of a fitted model.
pub fn norm_estimate<T: Scalar>(coeffs: &[C<T>]) -> T {
    coeffs.iter().map(|c| c.norm()).sum()
}

#[cfg(test)]
mod tests;
