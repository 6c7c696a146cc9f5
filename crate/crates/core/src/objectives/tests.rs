use super::*;
use crate::linalg::svd_nuclear_norm;
use crate::optimizer::{init_density_model, init_model, init_symmetric_model};
use crate::states::{bell, random_state};
use crate::tensor::{outer_product, permutations, Matrix, Vector};
use proptest::prelude::*;

const S: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn c(re: f64, im: f64) -> C<f64> {
    C::new(re, im)
}

fn e(d: usize, i: usize) -> Vector<f64> {
    Vector::basis(d, i, Field::Real)
}

fn bell_model() -> CpModel<f64> {
    CpModel::new(
        vec![2, 2],
        vec![vec![e(2, 0), e(2, 0)], vec![e(2, 1), e(2, 1)]],
        vec![c(S, 0.0), c(S, 0.0)],
        false,
    )
    .unwrap()
}

// Materialize every term, normalize by its own Frobenius norm and sum.
fn naive_reconstruct(model: &CpModel<f64>) -> Tensor<f64> {
    let shape = model.dims().to_vec();
    let mut acc = vec![c(0.0, 0.0); shape.iter().product()];
    for j in 0..model.rank() {
        let cores: Vec<Vector<f64>> = (0..shape.len()).map(|i| model.core(j, i).clone()).collect();
        let t = outer_product(&cores).unwrap();
        let n = t.frobenius_norm();
        for (a, z) in acc.iter_mut().zip(t.as_slice()) {
            *a += model.coeffs()[j] * *z / n;
        }
    }
    Tensor::new(shape, acc, Field::Complex).unwrap()
}

fn definitional_total(
    target: &Tensor<f64>,
    recon: &Tensor<f64>,
    coeffs: &[C<f64>],
    w: &LossWeights<f64>,
) -> f64 {
    let d: f64 = target
        .as_slice()
        .iter()
        .zip(recon.as_slice())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let count = coeffs.iter().filter(|z| z.norm() > w.epsilon).count() as f64;
    let l1: f64 = coeffs
        .iter()
        .map(|z| (z.re * z.re + z.im * z.im).sqrt())
        .sum();
    w.k1 * d + w.k2 * count + w.k3 * l1
}

#[test]
fn phi_of_basis_cores_is_basis_tensor() {
    let m = CpModel::new(
        vec![2, 3],
        vec![vec![e(2, 1), e(3, 2)]],
        vec![c(1.0, 0.0)],
        false,
    )
    .unwrap();
    let phi = build_phi(&m, 0).unwrap();
    for (k, z) in phi.as_slice().iter().enumerate() {
        let want = if k == 5 { 1.0 } else { 0.0 };
        assert_eq!(*z, c(want, 0.0));
    }
}

#[test]
fn phi_is_unit_and_positively_scale_invariant() {
    let m = init_model::<f64>(&[2, 3, 2], Field::Complex, 3, 7);
    for j in 0..3 {
        let phi = build_phi(&m, j).unwrap();
        assert!((phi.frobenius_norm() - 1.0).abs() < 1e-12);
    }
    let mut scaled = m.clone();
    for b in scaled.blocks_mut(1) {
        *b = b.scaled(c(5.0, 0.0));
    }
    let d = build_phi(&m, 1)
        .unwrap()
        .max_abs_diff(&build_phi(&scaled, 1).unwrap())
        .unwrap();
    assert!(d < 1e-12);
}

#[test]
fn unit_phase_scaling_multiplies_phi_by_power() {
    let m = init_model::<f64>(&[2, 2, 3], Field::Complex, 1, 3);
    let u = C::from_polar(1.0, 0.7);
    let mut scaled = m.clone();
    for b in scaled.blocks_mut(0) {
        *b = b.scaled(u);
    }
    let a = build_phi(&m, 0).unwrap();
    let b = build_phi(&scaled, 0).unwrap();
    let u3 = u * u * u;
    for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
        assert!((x * u3 - y).norm() < 1e-12);
        if x.norm() > 1e-8 {
            assert!(((y / x).norm() - 1.0).abs() < 1e-10);
        }
    }
}

#[test]
fn degenerate_core_is_reported() {
    let zero = Vector::real(&[0.0, 0.0]);
    let m = CpModel::new(
        vec![2, 2],
        vec![vec![e(2, 0), zero]],
        vec![c(1.0, 0.0)],
        false,
    )
    .unwrap();
    assert!(matches!(
        build_phi(&m, 0),
        Err(Error::DegenerateCore { term: 0, .. })
    ));
    assert!(matches!(reconstruct(&m), Err(Error::DegenerateCore { .. })));
}

#[test]
fn reconstructs_bell_from_known_terms() {
    let r = reconstruct(&bell_model()).unwrap();
    assert!(r.max_abs_diff(&bell()).unwrap() < 1e-12);
}

#[test]
fn single_basis_term_reconstructs_basis() {
    let m = CpModel::new(
        vec![2, 2],
        vec![vec![e(2, 0), e(2, 1)]],
        vec![c(1.0, 0.0)],
        false,
    )
    .unwrap();
    let r = reconstruct(&m).unwrap();
    assert_eq!(r.get(&[0, 1]), c(1.0, 0.0));
    assert!((r.frobenius_norm() - 1.0).abs() < 1e-15);
}

#[test]
fn reconstruct_matches_naive_sum() {
    for seed in 0..10 {
        let m = init_model::<f64>(&[3, 2, 2], Field::Complex, 4, seed);
        let d = reconstruct(&m)
            .unwrap()
            .max_abs_diff(&naive_reconstruct(&m))
            .unwrap();
        assert!(d < 1e-10, "seed {seed}: {d}");
    }
}

#[test]
fn symmetric_reconstruction_is_permutation_invariant() {
    let m = init_symmetric_model::<f64>(3, 3, Field::Complex, 4, 11);
    let r = reconstruct(&m).unwrap();
    for p in permutations(3) {
        assert!(r.permute_modes(&p).unwrap().max_abs_diff(&r).unwrap() < 1e-12);
    }
}

#[test]
fn density_phi_of_basis_is_matrix_unit() {
    let a = Vector::real(&[1.0, 0.0]);
    let b = Vector::real(&[0.0, 2.0]);
    let m = DensityCpModel::new(vec![2], vec![vec![a]], vec![vec![b]], vec![c(1.0, 0.0)]).unwrap();
    let phi = build_phi_density(&m, 0).unwrap();
    assert_eq!(phi.shape(), &[2, 2]);
    assert_eq!(phi.get(&[0, 1]), c(1.0, 0.0));
    assert_eq!(phi.frobenius_norm(), 1.0);
}

#[test]
fn density_phi_has_unit_trace_norm() {
    for seed in 0..5 {
        let m = init_density_model::<f64>(&[2, 3], Field::Complex, 2, seed);
        for j in 0..2 {
            let phi = build_phi_density(&m, j).unwrap();
            let mat = Matrix::new(6, 6, phi.as_slice().to_vec()).unwrap();
            assert!((svd_nuclear_norm(&mat).unwrap() - 1.0).abs() < 1e-10);
        }
    }
}

#[test]
fn arcpd_counts_only_rank() {
    let w = LossWeights::<f64>::default();
    let m = bell_model();
    let l = loss_arcpd(&bell(), &m, &w).unwrap();
    assert!(l.recon < 1e-15);
    assert_eq!(l.rank_count, 2);
    assert!((l.total - 2.0 * w.k2).abs() < 1e-12);

    let three = init_model::<f64>(&[2, 2], Field::Real, 3, 1);
    let t = reconstruct(&three).unwrap();
    let l = loss_arcpd(&t, &three, &w).unwrap();
    assert!((l.total - 3.0 * w.k2).abs() < 1e-10);

    let mut tiny = three.clone();
    for z in tiny.coeffs_mut() {
        *z *= 1e-6;
    }
    let t = reconstruct(&tiny).unwrap();
    assert!(loss_arcpd(&t, &tiny, &w).unwrap().total.abs() < 1e-12);
}

#[test]
fn nrcpd_adds_norm_cost() {
    let w = LossWeights {
        k1: 100.0,
        k2: 2.0,
        k3: 3.0,
        epsilon: 1e-3,
    };
    let l = loss_nrcpd(&bell(), &bell_model(), &w).unwrap();
    assert!((l.total - (2.0 * w.k2 + 2f64.sqrt() * w.k3)).abs() < 1e-12);
    assert!((l.norm_sum - 2f64.sqrt()).abs() < 1e-15);
}

#[test]
fn zero_model_against_zero_target() {
    let w = LossWeights::<f64>::default();
    let mut m = init_model::<f64>(&[2, 2], Field::Real, 2, 0);
    for z in m.coeffs_mut() {
        *z = c(0.0, 0.0);
    }
    let t = Tensor::zeros(vec![2, 2], Field::Real);
    assert_eq!(loss_nrcpd(&t, &m, &w).unwrap().total, 0.0);
    let g = gradients(&t, &m, &w).unwrap();
    assert_eq!(g.max_abs(), 0.0);

    let mut d = init_density_model::<f64>(&[2], Field::Real, 2, 0);
    for z in d.coeffs_mut() {
        *z = c(0.0, 0.0);
    }
    let t = Tensor::zeros(vec![2, 2], Field::Real);
    assert_eq!(loss_density(&t, &d, &w).unwrap().total, 0.0);
}

#[test]
fn density_exact_projector() {
    let w = LossWeights::<f64>::default();
    let m = DensityCpModel::new(
        vec![2],
        vec![vec![e(2, 0)]],
        vec![vec![e(2, 0)]],
        vec![c(1.0, 0.0)],
    )
    .unwrap();
    let t = Tensor::from_real(vec![2, 2], &[1.0, 0.0, 0.0, 0.0]).unwrap();
    let l = loss_density(&t, &m, &w).unwrap();
    assert_eq!(l.recon, 0.0);
    assert_eq!(l.norm_sum, 1.0);
}

#[test]
fn losses_match_definitions() {
    let w = LossWeights {
        k1: 7.0,
        k2: 0.5,
        k3: 1.5,
        epsilon: 0.3,
    };
    for seed in 0..8 {
        let m = init_model::<f64>(&[2, 3], Field::Complex, 3, seed);
        let t = random_state::<f64>(&[2, 3], Field::Complex, seed + 100).unwrap();
        let r = naive_reconstruct(&m);
        let want = definitional_total(&t, &r, m.coeffs(), &w);
        assert!((loss_nrcpd(&t, &m, &w).unwrap().total - want).abs() < 1e-10);
        let want0 = definitional_total(&t, &r, m.coeffs(), &w.without_norm_cost());
        assert!((loss_arcpd(&t, &m, &w).unwrap().total - want0).abs() < 1e-10);

        let d = init_density_model::<f64>(&[2], Field::Complex, 2, seed);
        let td = random_state::<f64>(&[2, 2], Field::Complex, seed).unwrap();
        let mut rd = vec![c(0.0, 0.0); 4];
        for j in 0..2 {
            let (a, b) = (d.ket(j, 0), d.bra(j, 0));
            let n = a.norm() * b.norm();
            for r in 0..2 {
                for s in 0..2 {
                    rd[r * 2 + s] += d.coeffs()[j] * a.as_slice()[r] * b.as_slice()[s].conj() / n;
                }
            }
        }
        let rd = Tensor::new(vec![2, 2], rd, Field::Complex).unwrap();
        let want = definitional_total(&td, &rd, d.coeffs(), &w);
        assert!((loss_density(&td, &d, &w).unwrap().total - want).abs() < 1e-10);
    }
}

#[test]
fn shape_mismatch_is_rejected() {
    let w = LossWeights::<f64>::default();
    let t = Tensor::zeros(vec![3, 2], Field::Real);
    assert!(matches!(
        loss_nrcpd(&t, &bell_model(), &w),
        Err(Error::ShapeMismatch { .. })
    ));
}

#[test]
fn exact_reconstruction_has_zero_recon_gradient() {
    let w = LossWeights {
        k3: 0.0,
        ..LossWeights::default()
    };
    let g = gradients(&bell(), &bell_model(), &w).unwrap();
    assert!(g.max_abs() < 1e-12);
}

#[test]
fn coefficient_gradient_of_norm_cost_is_unit_phase() {
    let w = LossWeights {
        k1: 1.0,
        k2: 0.0,
        k3: 2.0,
        epsilon: 1e-3,
    };
    let mut m = bell_model().with_field(Field::Complex);
    m.coeffs_mut()[0] = c(0.6, 0.8);
    m.coeffs_mut()[1] = c(0.0, 0.0);
    let t = reconstruct(&m).unwrap();
    let g = gradients(&t, &m, &w).unwrap();
    assert!((g.coeffs[0] - c(1.2, 1.6)).norm() < 1e-12);
    assert_eq!(g.coeffs[1], c(0.0, 0.0));
}

#[test]
fn recon_gradient_is_scale_free() {
    // ‖E‖ is 1-homogeneous, so its gradient in C is unchanged when the
    // target and every coefficient are scaled together.
    let w = LossWeights {
        k1: 1.0,
        k2: 0.0,
        k3: 0.0,
        epsilon: 1e-3,
    };
    let m = init_model::<f64>(&[2, 2], Field::Complex, 2, 4);
    let t = random_state::<f64>(&[2, 2], Field::Complex, 5).unwrap();
    let g1 = gradients(&t, &m, &w).unwrap();
    let mut m2 = m.clone();
    for z in m2.coeffs_mut() {
        *z *= 2.0;
    }
    let g2 = gradients(&t.scale(2.0), &m2, &w).unwrap();
    for (a, b) in g1.coeffs.iter().zip(&g2.coeffs) {
        assert!((a - b).norm() < 1e-12);
    }
}

#[test]
fn real_models_get_real_gradients() {
    let w = LossWeights::<f64>::default();
    let m = init_model::<f64>(&[2, 3], Field::Real, 3, 2);
    let t = random_state::<f64>(&[2, 3], Field::Real, 2).unwrap();
    let g = gradients(&t, &m, &w).unwrap();
    assert!(g
        .blocks
        .iter()
        .flatten()
        .flatten()
        .chain(&g.coeffs)
        .all(|z| z.im == 0.0));
}

fn fd_error<M: Decomposition<f64> + Clone>(t: &Tensor<f64>, m: &M, w: &LossWeights<f64>) -> f64 {
    let (_, g) = evaluate(t, m, w).unwrap();
    let base = params_flat(m);
    let an = g.flat_real();
    let mut probe = m.clone();
    let complex = m.field().is_complex();
    let (mut num, mut den) = (0.0f64, 0.0f64);
    for k in 0..base.len() {
        if !complex && k % 2 == 1 {
            continue;
        }
        let h = 1e-4;
        let mut p = base.clone();
        p[k] += h;
        set_params_flat(&mut probe, &p);
        let up = loss(t, &probe, w, LossKind::NuclearRank).unwrap().total;
        p[k] -= 2.0 * h;
        set_params_flat(&mut probe, &p);
        let down = loss(t, &probe, w, LossKind::NuclearRank).unwrap().total;
        let fd = (up - down) / (2.0 * h);
        num += (fd - an[k]).powi(2);
        den = den.max(an[k].abs()).max(fd.abs());
    }
    num.sqrt() / den.max(1e-300)
}

fn well_conditioned<M: Decomposition<f64>>(m: &M) -> bool {
    m.coeffs().iter().all(|z| z.norm() > 0.1)
        && (0..m.rank()).all(|j| m.blocks(j).iter().all(|b| b.norm() > 0.5))
}

#[test]
fn gradients_match_finite_differences() {
    let w = LossWeights::<f64>::default();
    let mut checked = 0;
    for seed in 0..40 {
        for field in [Field::Real, Field::Complex] {
            let t = random_state::<f64>(&[2, 3, 2], field, seed).unwrap();
            let m = init_model::<f64>(&[2, 3, 2], field, 2, seed);
            if well_conditioned(&m) {
                assert!(fd_error(&t, &m, &w) < 1e-5, "general seed {seed}");
                checked += 1;
            }
            let t = random_state::<f64>(&[3, 3], field, seed).unwrap();
            let m = init_symmetric_model::<f64>(3, 2, field, 2, seed);
            if well_conditioned(&m) {
                assert!(fd_error(&t, &m, &w) < 1e-5, "symmetric seed {seed}");
                checked += 1;
            }
            let t = random_state::<f64>(&[2, 2, 2, 2], field, seed).unwrap();
            let m = init_density_model::<f64>(&[2, 2], field, 2, seed);
            if well_conditioned(&m) {
                assert!(fd_error(&t, &m, &w) < 1e-5, "density seed {seed}");
                checked += 1;
            }
        }
    }
    assert!(checked >= 30, "only {checked} instances");
}

#[test]
fn params_round_trip() {
    let mut m = init_density_model::<f64>(&[2, 3], Field::Complex, 2, 9);
    let p = params_flat(&m);
    let orig = m.clone();
    set_params_flat(&mut m, &p);
    assert_eq!(m, orig);
    assert_eq!(p.len(), 2 * (2 * (2 + 3 + 2 + 3) + 2));
}

#[test]
fn effective_rank_examples() {
    assert_eq!(effective_rank(&[c(0.0, 0.0); 3], 1e-2), 0);
    assert_eq!(
        effective_rank(&[c(S, 0.0), c(0.0, S), c(1e-9, 0.0)], 1e-2),
        2
    );
}

#[test]
fn norm_estimate_examples() {
    assert!((norm_estimate(&[c(S, 0.0), c(S, 0.0)]) - 2f64.sqrt()).abs() < 1e-15);
    assert_eq!(norm_estimate(&[c(0.0, 0.0); 4]), 0.0);
    assert!((norm_estimate(&[c(3.0, 4.0), c(-1.0, 0.0)]) - 6.0).abs() < 1e-15);
}

#[test]
fn weights_validate() {
    assert!(LossWeights::<f64>::default().validate().is_ok());
    assert!(LossWeights {
        k1: 0.0,
        ..LossWeights::<f64>::default()
    }
    .validate()
    .is_err());
    assert!(LossWeights {
        k3: -1.0,
        ..LossWeights::<f64>::default()
    }
    .validate()
    .is_err());
}

#[test]
fn f32_models_evaluate() {
    let m = init_model::<f32>(&[2, 2], Field::Complex, 2, 1);
    let t = random_state::<f32>(&[2, 2], Field::Complex, 1).unwrap();
    let l = loss_nrcpd(&t, &m, &LossWeights::default()).unwrap();
    assert!(l.total.is_finite());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn total_is_sum_of_parts(seed in 0u64..10_000, rank in 1usize..4) {
        let w = LossWeights { k1: 3.0, k2: 0.25, k3: 1.75, epsilon: 0.2 };
        let m = init_model::<f64>(&[2, 2, 2], Field::Complex, rank, seed);
        let t = random_state::<f64>(&[2, 2, 2], Field::Complex, seed ^ 1).unwrap();
        for kind in [LossKind::AdaptiveRank, LossKind::NuclearRank] {
            let l = loss(&t, &m, &w, kind).unwrap();
            let kw = kind.weights(w);
            let parts = kw.k1 * l.recon + kw.k2 * l.rank_count as f64 + kw.k3 * l.norm_sum;
            prop_assert!((l.total - parts).abs() < 1e-12);
        }
    }

    #[test]
    fn norm_estimate_dominates_frobenius_gap(seed in 0u64..10_000, rank in 1usize..5) {
        let m = init_model::<f64>(&[3, 2], Field::Complex, rank, seed);
        let t = random_state::<f64>(&[3, 2], Field::Complex, seed).unwrap();
        let l = loss_nrcpd(&t, &m, &LossWeights::default()).unwrap();
        prop_assert!(l.norm_sum >= t.frobenius_norm() - l.recon - 1e-12);
    }

    #[test]
    fn effective_rank_nonincreasing(vals in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..12)) {
        let coeffs: Vec<C<f64>> = vals.iter().map(|&(a, b)| c(a, b)).collect();
        let mut mags: Vec<f64> = coeffs.iter().map(|z| z.norm()).collect();
        mags.sort_by(f64::total_cmp);
        let mut last = usize::MAX;
        for tol in mags.iter().map(|m| m.max(1e-9)) {
            let r = effective_rank(&coeffs, tol);
            prop_assert!(r <= last);
            last = r;
        }
    }

    #[test]
    fn phi_normalized(seed in 0u64..10_000) {
        let m = init_model::<f64>(&[2, 3, 2], Field::Complex, 1, seed);
        if let Ok(phi) = build_phi(&m, 0) {
            prop_assert!((phi.frobenius_norm() - 1.0).abs() < 1e-12);
        }
    }
}
