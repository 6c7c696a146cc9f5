use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Field, Scalar, C};
use crate::tensor::Vector;

/// A sum of `R` normalized rank-one terms with free coefficients.
///
/// Each term owns a list of parameter blocks; every mode ("slot") of the
/// target tensor reads one block, possibly conjugated. Implemented by
/// [`CpModel`] and [`DensityCpModel`] and consumed by the loss and gradient
/// routines.
pub trait Decomposition<T: Scalar> {
    /// Shape of the tensor this model reconstructs.
    fn target_shape(&self) -> Vec<usize>;

    fn rank(&self) -> usize {
        self.coeffs().len()
    }

    fn field(&self) -> Field;

    fn coeffs(&self) -> &[C<T>];

    fn coeffs_mut(&mut self) -> &mut [C<T>];

    /// Parameter blocks of term `j`.
    fn blocks(&self, j: usize) -> &[Vector<T>];

    fn blocks_mut(&mut self, j: usize) -> &mut [Vector<T>];

    /// Which block feeds tensor mode `slot`, and whether it enters conjugated.
    fn slot_source(&self, slot: usize) -> (usize, bool);

    fn slot_count(&self) -> usize {
        self.target_shape().len()
    }
}

/// Canonical polyadic model `Σ_j C_j φ_j`, `φ_j = ⊗_i a_j^i / ∏_i ‖a_j^i‖`.
///
/// In symmetric mode each term stores a single core reused in every mode.
#[derive(Debug, Clone, PartialEq)]
pub struct CpModel<T: Scalar> {
    dims: Vec<usize>,
    cores: Vec<Vec<Vector<T>>>,
    coeffs: Vec<C<T>>,
    field: Field,
    symmetric: bool,
}

fn model_field<T: Scalar>(blocks: &[Vec<Vector<T>>], coeffs: &[C<T>]) -> Field {
    let complex = blocks.iter().flatten().any(|v| v.field().is_complex())
        || coeffs.iter().any(|c| c.im != T::zero());
    if complex {
        Field::Complex
    } else {
        Field::Real
    }
}

impl<T: Scalar> CpModel<T> {
    pub fn new(
        dims: Vec<usize>,
        cores: Vec<Vec<Vector<T>>>,
        coeffs: Vec<C<T>>,
        symmetric: bool,
    ) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::Shape(format!("bad model dims {dims:?}")));
        }
        if coeffs.is_empty() || cores.len() != coeffs.len() {
            return Err(Error::Shape(format!(
                "{} core groups for {} coefficients (need R >= 1 of each)",
                cores.len(),
                coeffs.len()
            )));
        }
        if symmetric && dims.windows(2).any(|w| w[0] != w[1]) {
            return Err(Error::UnequalDims(dims));
        }
        for term in &cores {
            let expect: &[usize] = if symmetric { &dims[..1] } else { &dims };
            if term.len() != expect.len() || term.iter().zip(expect).any(|(v, &d)| v.dim() != d) {
                return Err(Error::ShapeMismatch {
                    expected: expect.to_vec(),
                    actual: term.iter().map(Vector::dim).collect(),
                });
            }
        }
        let field = model_field(&cores, &coeffs);
        Ok(Self {
            dims,
            cores,
            coeffs,
            field,
            symmetric,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn core(&self, j: usize, i: usize) -> &Vector<T> {
        if self.symmetric {
            &self.cores[j][0]
        } else {
            &self.cores[j][i]
        }
    }

    /// Widen the field (used when fitting a real target over ℂ). Never narrows.
    pub fn with_field(mut self, field: Field) -> Self {
        self.field = self.field.join(field);
        promote_blocks(&mut self.cores, self.field);
        self
    }

    pub fn snapshot(&self) -> ModelSnapshot {
        snapshot(self)
    }
}

impl<T: Scalar> Decomposition<T> for CpModel<T> {
    fn target_shape(&self) -> Vec<usize> {
        self.dims.clone()
    }

    fn field(&self) -> Field {
        self.field
    }

    fn coeffs(&self) -> &[C<T>] {
        &self.coeffs
    }

    fn coeffs_mut(&mut self) -> &mut [C<T>] {
        &mut self.coeffs
    }

    fn blocks(&self, j: usize) -> &[Vector<T>] {
        &self.cores[j]
    }

    fn blocks_mut(&mut self, j: usize) -> &mut [Vector<T>] {
        &mut self.cores[j]
    }

    fn slot_source(&self, slot: usize) -> (usize, bool) {
        if self.symmetric {
            (0, false)
        } else {
            (slot, false)
        }
    }
}

/// Operator model `Σ_j C_j Φ_j` with `Φ_j = ⊗_i |a_j^i⟩⟨b_j^i| / ∏_i ‖a_j^i‖‖b_j^i‖`.
///
/// The reconstructed tensor has shape `[d_1..d_m, d_1..d_m]`; ket entries fill
/// the first `m` modes, conjugated bra entries the last `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityCpModel<T: Scalar> {
    dims: Vec<usize>,
    // per term: kets a^1..a^m followed by bras b^1..b^m
    blocks: Vec<Vec<Vector<T>>>,
    coeffs: Vec<C<T>>,
    field: Field,
}

impl<T: Scalar> DensityCpModel<T> {
    pub fn new(
        dims: Vec<usize>,
        kets: Vec<Vec<Vector<T>>>,
        bras: Vec<Vec<Vector<T>>>,
        coeffs: Vec<C<T>>,
    ) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::Shape(format!("bad model dims {dims:?}")));
        }
        if coeffs.is_empty() || kets.len() != coeffs.len() || bras.len() != coeffs.len() {
            return Err(Error::Shape(format!(
                "{} kets / {} bras for {} coefficients",
                kets.len(),
                bras.len(),
                coeffs.len()
            )));
        }
        let mut blocks = Vec::with_capacity(coeffs.len());
        for (k, b) in kets.into_iter().zip(bras) {
            for side in [&k, &b] {
                if side.len() != dims.len() || side.iter().zip(&dims).any(|(v, &d)| v.dim() != d) {
                    return Err(Error::ShapeMismatch {
                        expected: dims.clone(),
                        actual: side.iter().map(Vector::dim).collect(),
                    });
                }
            }
            blocks.push(k.into_iter().chain(b).collect());
        }
        let field = model_field(&blocks, &coeffs);
        Ok(Self {
            dims,
            blocks,
            coeffs,
            field,
        })
    }

    pub fn parties(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn ket(&self, j: usize, i: usize) -> &Vector<T> {
        &self.blocks[j][i]
    }

    pub fn bra(&self, j: usize, i: usize) -> &Vector<T> {
        &self.blocks[j][self.dims.len() + i]
    }

    pub fn with_field(mut self, field: Field) -> Self {
        self.field = self.field.join(field);
        promote_blocks(&mut self.blocks, self.field);
        self
    }

    pub fn snapshot(&self) -> ModelSnapshot {
        snapshot(self)
    }
}

impl<T: Scalar> Decomposition<T> for DensityCpModel<T> {
    fn target_shape(&self) -> Vec<usize> {
        self.dims.iter().chain(&self.dims).copied().collect()
    }

    fn field(&self) -> Field {
        self.field
    }

    fn coeffs(&self) -> &[C<T>] {
        &self.coeffs
    }

    fn coeffs_mut(&mut self) -> &mut [C<T>] {
        &mut self.coeffs
    }

    fn blocks(&self, j: usize) -> &[Vector<T>] {
        &self.blocks[j]
    }

    fn blocks_mut(&mut self, j: usize) -> &mut [Vector<T>] {
        &mut self.blocks[j]
    }

    fn slot_source(&self, slot: usize) -> (usize, bool) {
        (slot, slot >= self.dims.len())
    }
}

fn promote_blocks<T: Scalar>(blocks: &mut [Vec<Vector<T>>], field: Field) {
    if field.is_complex() {
        for v in blocks.iter_mut().flatten() {
            *v = std::mem::replace(v, Vector::basis(1, 0, Field::Real)).into_complex();
        }
    }
}

/// Debug dump of a model's parameters.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ModelSnapshot {
    pub coeffs_re: Vec<f64>,
    pub coeffs_im: Vec<f64>,
    /// `[term][block][entry] = [re, im]`
    pub cores: Vec<Vec<Vec<[f64; 2]>>>,
}

/// Parameter dump of any decomposition.
pub fn snapshot<T: Scalar, M: Decomposition<T>>(model: &M) -> ModelSnapshot {
    ModelSnapshot {
        coeffs_re: model.coeffs().iter().map(|c| c.re.as_f64()).collect(),
        coeffs_im: model.coeffs().iter().map(|c| c.im.as_f64()).collect(),
        cores: (0..model.rank())
            .map(|j| {
                model
                    .blocks(j)
                    .iter()
                    .map(|v| {
                        v.as_slice()
                            .iter()
                            .map(|z| [z.re.as_f64(), z.im.as_f64()])
                            .collect()
                    })
                    .collect()
            })
            .collect(),
    }
}
