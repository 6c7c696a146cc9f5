use crate::objectives::{CpModel, DensityCpModel};
use crate::scalar::{Field, Scalar, C};
use crate::tensor::Vector;

use super::rng::SplitRng;

/// Core with i.i.d. `N(0, 1/d)` components (imaginary part too when complex).
pub(crate) fn random_core<T: Scalar>(rng: &mut SplitRng, dim: usize, field: Field) -> Vector<T> {
    let var = 1.0 / dim as f64;
    let data: Vec<C<T>> = (0..dim)
        .map(|_| C::new(T::lit(rng.normal(var)), T::zero()))
        .collect();
    let mut data = data;
    if field.is_complex() {
        for z in &mut data {
            z.im = T::lit(rng.normal(var));
        }
        Vector::complex(data)
    } else {
        Vector::new(data, Field::Real).expect("nonempty real core")
    }
}

fn random_coeffs<T: Scalar>(rng: &mut SplitRng, rank: usize, field: Field) -> Vec<C<T>> {
    let mut c: Vec<C<T>> = (0..rank)
        .map(|_| C::new(T::lit(rng.gaussian()), T::zero()))
        .collect();
    if field.is_complex() {
        for z in &mut c {
            z.im = T::lit(rng.gaussian());
        }
    }
    c
}

/// Random general CP model with `rank` terms.
pub fn init_model<T: Scalar>(dims: &[usize], field: Field, rank: usize, seed: u64) -> CpModel<T> {
    let mut rng = SplitRng::new(seed);
    let cores = (0..rank)
        .map(|_| {
            dims.iter()
                .map(|&d| random_core(&mut rng, d, field))
                .collect()
        })
        .collect();
    let coeffs = random_coeffs(&mut rng, rank, field);
    CpModel::new(dims.to_vec(), cores, coeffs, false)
        .expect("init shapes are consistent")
        .with_field(field)
}

/// Random symmetric model: one core of dimension `d` per term, order `m`.
pub fn init_symmetric_model<T: Scalar>(
    d: usize,
    m: usize,
    field: Field,
    rank: usize,
    seed: u64,
) -> CpModel<T> {
    let mut rng = SplitRng::new(seed);
    let cores = (0..rank)
        .map(|_| vec![random_core(&mut rng, d, field)])
        .collect();
    let coeffs = random_coeffs(&mut rng, rank, field);
    CpModel::new(vec![d; m], cores, coeffs, true)
        .expect("init shapes are consistent")
        .with_field(field)
}

/// Random operator model over parties with dimensions `dims`.
pub fn init_density_model<T: Scalar>(
    dims: &[usize],
    field: Field,
    rank: usize,
    seed: u64,
) -> DensityCpModel<T> {
    let mut rng = SplitRng::new(seed);
    let kets = (0..rank)
        .map(|_| {
            dims.iter()
                .map(|&d| random_core(&mut rng, d, field))
                .collect()
        })
        .collect();
    let bras = (0..rank)
        .map(|_| {
            dims.iter()
                .map(|&d| random_core(&mut rng, d, field))
                .collect()
        })
        .collect();
    let coeffs = random_coeffs(&mut rng, rank, field);
    DensityCpModel::new(dims.to_vec(), kets, bras, coeffs)
        .expect("init shapes are consistent")
        .with_field(field)
}
