//! Benchmark states: pure vectors as tensors, mixed states as operator
//! tensors of shape `[d_1..d_m, d_1..d_m]` (kets first, bras last), in the
//! computational basis `|i⟩ = e_i`.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::optimizer::rng::SplitRng;
use crate::optimizer::{operator_parties, FitResult};
use crate::scalar::{re, zero, Field, Scalar, C};
use crate::tensor::{next_index, outer_product, symmetrize, Tensor, Vector};

fn lit<T: Scalar>(x: f64) -> T {
    T::lit(x)
}

/// Pure state from `(amplitude, basis index)` pairs on `n` qubits-like modes.
fn from_amplitudes<T: Scalar>(shape: Vec<usize>, amps: &[(f64, &[usize])]) -> Tensor<T> {
    let mut t = Tensor::zeros(shape, Field::Real);
    for &(a, idx) in amps {
        let cur = t.get(idx);
        t.set(idx, cur + re(lit(a)));
    }
    t
}

/// Bell state `(|00⟩ + |11⟩)/√2`.
pub fn bell<T: Scalar>() -> Tensor<T> {
    ghz(2).expect("n = 2 is valid")
}

/// `(|0…0⟩ + |1…1⟩)/√2` on `n ≥ 2` qubits.
pub fn ghz<T: Scalar>(n: usize) -> Result<Tensor<T>> {
    if n < 2 {
        return Err(Error::Param(format!("GHZ needs n >= 2, got {n}")));
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Ok(from_amplitudes(
        vec![2; n],
        &[(h, &vec![0; n]), (h, &vec![1; n])],
    ))
}

/// Uniform superposition of the `n` weight-one basis states.
pub fn w<T: Scalar>(n: usize) -> Result<Tensor<T>> {
    if n < 2 {
        return Err(Error::Param(format!("W needs n >= 2, got {n}")));
    }
    let a = 1.0 / (n as f64).sqrt();
    let idx: Vec<Vec<usize>> = (0..n)
        .map(|k| (0..n).map(|i| usize::from(i == k)).collect())
        .collect();
    let amps: Vec<(f64, &[usize])> = idx.iter().map(|v| (a, v.as_slice())).collect();
    Ok(from_amplitudes(vec![2; n], &amps))
}

/// `½(|001⟩ + |010⟩ + |100⟩ − |111⟩)`.
pub fn psi_b<T: Scalar>() -> Tensor<T> {
    from_amplitudes(
        vec![2, 2, 2],
        &[
            (0.5, &[0, 0, 1]),
            (0.5, &[0, 1, 0]),
            (0.5, &[1, 0, 0]),
            (-0.5, &[1, 1, 1]),
        ],
    )
}

fn normalized<T: Scalar>(t: Tensor<T>) -> Result<Tensor<T>> {
    let n = t.frobenius_norm();
    if n == T::zero() {
        return Err(Error::ZeroTarget);
    }
    Ok(t.scale(T::one() / n))
}

/// Normalized outer product of the given factors.
pub fn product_state<T: Scalar>(factors: &[Vector<T>]) -> Result<Tensor<T>> {
    normalized(outer_product(factors)?)
}

fn random_vector<T: Scalar>(rng: &mut SplitRng, dim: usize, field: Field) -> Vector<T> {
    let data: Vec<C<T>> = (0..dim)
        .map(|_| {
            let r = lit(rng.gaussian());
            let i = if field.is_complex() {
                lit(rng.gaussian())
            } else {
                T::zero()
            };
            C::new(r, i)
        })
        .collect();
    Vector::new(data, field).expect("nonempty")
}

/// Product of `m` seeded random unit vectors of dimension `d`.
pub fn random_product_state<T: Scalar>(
    m: usize,
    d: usize,
    field: Field,
    seed: u64,
) -> Result<Tensor<T>> {
    if m == 0 || d == 0 {
        return Err(Error::Param("product state needs m, d >= 1".into()));
    }
    let mut rng = SplitRng::with_stream(seed, 7);
    let factors: Vec<Vector<T>> = (0..m).map(|_| random_vector(&mut rng, d, field)).collect();
    product_state(&factors)
}

/// Unit-norm tensor with i.i.d. Gaussian entries.
pub fn random_state<T: Scalar>(dims: &[usize], field: Field, seed: u64) -> Result<Tensor<T>> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::Param(format!("bad dims {dims:?}")));
    }
    let n: usize = dims.iter().product();
    let mut rng = SplitRng::with_stream(seed, 5);
    let v = random_vector::<T>(&mut rng, n, field);
    normalized(Tensor::new(dims.to_vec(), v.as_slice().to_vec(), field)?)
}

/// Unit-norm symmetric tensor: a symmetrized Gaussian tensor.
pub fn random_symmetric_state<T: Scalar>(
    d: usize,
    m: usize,
    field: Field,
    seed: u64,
) -> Result<Tensor<T>> {
    let raw = random_state::<T>(&vec![d; m], field, seed)?;
    normalized(symmetrize(&raw)?)
}

/// `|ψ⟩⟨ψ|` as an operator tensor of shape `[dims, dims]`.
pub fn density_from_pure<T: Scalar>(psi: &Tensor<T>) -> Result<Tensor<T>> {
    let n = psi.frobenius_norm();
    if (n - T::one()).abs() > lit(1e-9) {
        return Err(Error::Param(format!(
            "pure state must have unit norm, got {n}"
        )));
    }
    let v = psi.as_slice();
    let data = v
        .iter()
        .flat_map(|a| v.iter().map(move |b| *a * b.conj()))
        .collect();
    let shape: Vec<usize> = psi.shape().iter().chain(psi.shape()).copied().collect();
    Ok(Tensor::new(shape, data, psi.field())?.narrowed())
}

/// Operator over parties `dims` built from a dense `D x D` matrix.
fn operator<T: Scalar>(dims: &[usize], matrix: Vec<C<T>>) -> Tensor<T> {
    let shape: Vec<usize> = dims.iter().chain(dims).copied().collect();
    Tensor::new(shape, matrix, Field::Complex)
        .expect("operator dimensions agree")
        .narrowed()
}

fn outer_vec<T: Scalar>(a: &[f64], b: &[f64], scale: f64) -> Vec<C<T>> {
    a.iter()
        .flat_map(|x| b.iter().map(move |y| re(lit(scale * x * y))))
        .collect()
}

fn add_into<T: Scalar>(acc: &mut [C<T>], other: &[C<T>]) {
    for (a, b) in acc.iter_mut().zip(other) {
        *a += *b;
    }
}

fn two_party_ket(d: usize, terms: &[(f64, usize, usize)]) -> Vec<f64> {
    let mut v = vec![0.0; d * d];
    for &(a, i, j) in terms {
        v[i * d + j] += a;
    }
    v
}

fn projector_sum<T: Scalar>(d: usize, pairs: &[(usize, usize)], weight: f64) -> Vec<C<T>> {
    let n = d * d;
    let mut m = vec![zero(); n * n];
    for &(i, j) in pairs {
        let k = i * d + j;
        m[k * n + k] += re(lit(weight));
    }
    m
}

/// Swap operator `V|ij⟩ = |ji⟩` on `ℂ^d ⊗ ℂ^d`, as a dense matrix.
pub fn swap_operator<T: Scalar>(d: usize) -> Vec<C<T>> {
    let n = d * d;
    let mut v = vec![zero(); n * n];
    for i in 0..d {
        for j in 0..d {
            v[(j * d + i) * n + (i * d + j)] = re(T::one());
        }
    }
    v
}

fn matmul<T: Scalar>(a: &[C<T>], b: &[C<T>], n: usize) -> Vec<C<T>> {
    let mut out = vec![zero(); n * n];
    for i in 0..n {
        for k in 0..n {
            let x = a[i * n + k];
            if x == zero() {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += x * b[k * n + j];
            }
        }
    }
    out
}

/// Two-qutrit family `2/7 |ψ₊⟩⟨ψ₊| + α/7 σ₊ + (5−α)/7 Vσ₊V`, `0 ≤ α ≤ 5`.
/// Separable exactly for `2 ≤ α ≤ 3`.
pub fn dps_3x3<T: Scalar>(alpha: f64) -> Result<Tensor<T>> {
    if !(0.0..=5.0).contains(&alpha) {
        return Err(Error::Param(format!(
            "alpha must lie in [0, 5], got {alpha}"
        )));
    }
    let d = 3;
    let s = 1.0 / 3f64.sqrt();
    let psi = two_party_ket(d, &[(s, 0, 0), (s, 1, 1), (s, 2, 2)]);
    let mut rho = outer_vec::<T>(&psi, &psi, 2.0 / 7.0);
    let sigma = projector_sum::<T>(d, &[(0, 1), (1, 2), (2, 0)], 1.0 / 3.0);
    let v = swap_operator::<T>(d);
    let swapped = matmul(&matmul(&v, &sigma, 9), &v, 9);
    let a: T = lit(alpha / 7.0);
    let b: T = lit((5.0 - alpha) / 7.0);
    for ((r, s1), s2) in rho.iter_mut().zip(&sigma).zip(&swapped) {
        *r += *s1 * a + *s2 * b;
    }
    Ok(operator(&[d, d], rho))
}

/// Two-ququart family `(|ψ₁⟩⟨ψ₁| + |ψ₂⟩⟨ψ₂| + α σ)/(2 + α)`, `α ≥ 0`;
/// entangled for every α.
pub fn dps_4x4<T: Scalar>(alpha: f64) -> Result<Tensor<T>> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::Param(format!("alpha must be >= 0, got {alpha}")));
    }
    let d = 4;
    let r2 = 2f64.sqrt();
    let psi1 = two_party_ket(d, &[(0.5, 0, 0), (0.5, 1, 1), (0.5 * r2, 2, 2)]);
    let psi2 = two_party_ket(d, &[(0.5, 0, 1), (0.5, 1, 0), (0.5 * r2, 3, 3)]);
    let norm = 1.0 / (2.0 + alpha);
    let mut rho = outer_vec::<T>(&psi1, &psi1, norm);
    add_into(&mut rho, &outer_vec::<T>(&psi2, &psi2, norm));
    let sigma_pairs = [
        (0, 2),
        (0, 3),
        (1, 2),
        (1, 3),
        (2, 0),
        (2, 1),
        (3, 0),
        (3, 1),
    ];
    add_into(
        &mut rho,
        &projector_sum::<T>(d, &sigma_pairs, alpha * norm / 8.0),
    );
    Ok(operator(&[d, d], rho))
}

/// Two-qutrit family with parameter `0 < a < 1` (9x9 matrix over `8a + 1`).
pub fn zzzg<T: Scalar>(a: f64) -> Result<Tensor<T>> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::Param(format!("a must lie in (0, 1), got {a}")));
    }
    let n = 9;
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = a;
    }
    for &i in &[0, 4, 8] {
        for &j in &[0, 4, 8] {
            m[i * n + j] = a;
        }
    }
    let h = (1.0 + a) / 2.0;
    let off = (1.0 - a * a).sqrt() / 2.0;
    m[6 * n + 6] = h;
    m[8 * n + 8] = h;
    m[6 * n + 8] = off;
    m[8 * n + 6] = off;
    let scale = 1.0 / (8.0 * a + 1.0);
    Ok(operator(
        &[3, 3],
        m.into_iter().map(|x| re(lit(x * scale))).collect(),
    ))
}

/// `p ρ + (1 − p) 𝕀/D` with `D` the total Hilbert-space dimension.
pub fn mix_white_noise<T: Scalar>(rho: &Tensor<T>, p: f64) -> Result<Tensor<T>> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Param(format!("p must lie in [0, 1], got {p}")));
    }
    let parties = operator_parties(rho.shape())?;
    let dim: usize = parties.iter().product();
    let noise: T = lit((1.0 - p) / dim as f64);
    let pp: T = lit(p);
    let mut data: Vec<C<T>> = rho.as_slice().iter().map(|z| *z * pp).collect();
    for k in 0..dim {
        data[k * dim + k] += re(noise);
    }
    Tensor::new(rho.shape().to_vec(), data, rho.field())
}

/// Trace of an operator tensor.
pub fn trace<T: Scalar>(rho: &Tensor<T>) -> Result<C<T>> {
    let parties = operator_parties(rho.shape())?;
    let dim: usize = parties.iter().product();
    Ok((0..dim)
        .map(|k| rho.as_slice()[k * dim + k])
        .fold(zero(), |a, b| a + b))
}

/// Largest `|ρ_xy − conj(ρ_yx)|` of an operator tensor.
pub fn hermiticity_defect<T: Scalar>(rho: &Tensor<T>) -> Result<T> {
    let parties = operator_parties(rho.shape())?;
    let dim: usize = parties.iter().product();
    let data = rho.as_slice();
    let mut worst = T::zero();
    for i in 0..dim {
        for j in 0..dim {
            worst = worst.max((data[i * dim + j] - data[j * dim + i].conj()).norm());
        }
    }
    Ok(worst)
}

/// The operator flattened to its `D x D` matrix.
pub fn operator_matrix<T: Scalar>(rho: &Tensor<T>) -> Result<crate::tensor::Matrix<T>> {
    let parties = operator_parties(rho.shape())?;
    let dim: usize = parties.iter().product();
    crate::tensor::Matrix::new(dim, dim, rho.as_slice().to_vec())
}

/// Outcome of the projective-norm separability test on a trace-one state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Separable,
    Entangled,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Separable => "separable",
            Verdict::Entangled => "entangled",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// A state is separable iff its projective norm is 1. A converged estimate
/// within `tol` of 1 reads as separable; "entangled" additionally needs the
/// excess to clear the relative reconstruction error.
pub fn separability_verdict<T: Scalar>(result: &FitResult<T>, tol: T) -> Verdict {
    if !result.converged {
        return Verdict::Inconclusive;
    }
    let excess = result.norm_estimate - T::one();
    if excess <= tol {
        return Verdict::Separable;
    }
    let margin = if result.target_norm > T::zero() {
        result.recon_error / result.target_norm
    } else {
        T::zero()
    };
    if excess > tol + margin {
        Verdict::Entangled
    } else {
        Verdict::Inconclusive
    }
}

/// Whether a named state is a vector or an operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateForm {
    Vector,
    Density,
}

/// A named benchmark state with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpec {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    pub field: Field,
}

/// Names accepted by [`StateSpec::build`].
pub const STATE_NAMES: &[&str] = &[
    "bell",
    "ghz",
    "w",
    "psi_b",
    "product",
    "random",
    "random_symmetric",
    "dps3",
    "dps4",
    "zzzg",
];

impl StateSpec {
    pub fn new(name: &str, field: Field) -> Self {
        Self {
            name: name.to_string(),
            params: BTreeMap::new(),
            field,
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    fn param(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).copied().unwrap_or(default)
    }

    fn count(&self, key: &str, default: usize) -> Result<usize> {
        let v = self.param(key, default as f64);
        if v < 0.0 || v.fract() != 0.0 || v > 64.0 {
            return Err(Error::Param(format!(
                "{key} must be a small nonnegative integer, got {v}"
            )));
        }
        Ok(v as usize)
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        match self.params.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(Error::Param(format!(
                "state `{}` takes no parameter `{k}` (allowed: {allowed:?})",
                self.name
            ))),
            None => Ok(()),
        }
    }

    pub fn form(&self) -> Result<StateForm> {
        match self.name.as_str() {
            "dps3" | "dps4" | "zzzg" => Ok(StateForm::Density),
            n if STATE_NAMES.contains(&n) => Ok(StateForm::Vector),
            other => Err(Error::Param(format!("unknown state `{other}`"))),
        }
    }

    /// Materialize the state. Vector states are tagged with the requested
    /// field (their entries are real unless randomly drawn over ℂ).
    pub fn build<T: Scalar>(&self) -> Result<Tensor<T>> {
        let t = match self.name.as_str() {
            "bell" => {
                self.check_keys(&[])?;
                bell()
            }
            "ghz" => {
                self.check_keys(&["n"])?;
                ghz(self.count("n", 3)?)?
            }
            "w" => {
                self.check_keys(&["n"])?;
                w(self.count("n", 3)?)?
            }
            "psi_b" => {
                self.check_keys(&[])?;
                psi_b()
            }
            "product" => {
                self.check_keys(&["m", "d", "seed"])?;
                random_product_state(
                    self.count("m", 2)?,
                    self.count("d", 2)?,
                    self.field,
                    self.param("seed", 0.0) as u64,
                )?
            }
            "random" => {
                self.check_keys(&["m", "d", "seed"])?;
                let dims = vec![self.count("d", 2)?; self.count("m", 4)?];
                random_state(&dims, self.field, self.param("seed", 0.0) as u64)?
            }
            "random_symmetric" => {
                self.check_keys(&["m", "d", "seed"])?;
                random_symmetric_state(
                    self.count("d", 2)?,
                    self.count("m", 4)?,
                    self.field,
                    self.param("seed", 0.0) as u64,
                )?
            }
            "dps3" => {
                self.check_keys(&["alpha"])?;
                dps_3x3(self.param("alpha", 2.5))?
            }
            "dps4" => {
                self.check_keys(&["alpha"])?;
                dps_4x4(self.param("alpha", 1.0))?
            }
            "zzzg" => {
                self.check_keys(&["a", "p"])?;
                mix_white_noise(&zzzg(self.param("a", 0.5))?, self.param("p", 1.0))?
            }
            other => return Err(Error::Param(format!("unknown state `{other}`"))),
        };
        Ok(if self.field.is_complex() {
            t.into_complex()
        } else {
            t
        })
    }
}

/// Iterate all multi-indices of `shape` (row-major).
pub fn indices(shape: &[usize]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx = vec![0; shape.len()];
    loop {
        out.push(idx.clone());
        if !next_index(&mut idx, shape) {
            break;
        }
    }
    out
}
