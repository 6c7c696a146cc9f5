use projnorm::tensor::{permutations, tensorize};
use projnorm::{
    frobenius_norm, matricize, outer_product, rank_one_frobenius, svd_nuclear_norm, symmetrize,
    Field, Matrix, Tensor, Vector, C,
};
use proptest::prelude::*;

fn c64() -> impl Strategy<Value = C<f64>> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| C::new(re, im))
}

fn vector(dim: usize) -> impl Strategy<Value = Vector<f64>> {
    prop::collection::vec(c64(), dim).prop_map(Vector::complex)
}

fn factors() -> impl Strategy<Value = Vec<Vector<f64>>> {
    prop::collection::vec(1usize..=4, 2..=4)
        .prop_flat_map(|dims| dims.into_iter().map(vector).collect::<Vec<_>>())
}

fn tensor() -> impl Strategy<Value = Tensor<f64>> {
    prop::collection::vec(1usize..=3, 2..=4).prop_flat_map(|shape| {
        let n: usize = shape.iter().product();
        prop::collection::vec(c64(), n)
            .prop_map(move |data| Tensor::new(shape.clone(), data, Field::Complex).unwrap())
    })
}

fn cube(m: usize) -> impl Strategy<Value = Tensor<f64>> {
    (2usize..=3).prop_flat_map(move |d| {
        prop::collection::vec(c64(), d.pow(m as u32))
            .prop_map(move |data| Tensor::new(vec![d; m], data, Field::Complex).unwrap())
    })
}

fn sorted_bits(data: &[C<f64>]) -> Vec<(u64, u64)> {
    let mut v: Vec<_> = data
        .iter()
        .map(|z| (z.re.to_bits(), z.im.to_bits()))
        .collect();
    v.sort_unstable();
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn cross_norm_factorizes(fs in factors()) {
        let direct = frobenius_norm(&outer_product(&fs).unwrap());
        prop_assert!((rank_one_frobenius(&fs) - direct).abs() <= 1e-10);
    }

    #[test]
    fn outer_product_entries(fs in factors()) {
        let t = outer_product(&fs).unwrap();
        for idx in projnorm::states::indices(t.shape()) {
            let mut p = C::new(1.0, 0.0);
            for (k, &i) in idx.iter().enumerate() {
                p *= fs[k].as_slice()[i];
            }
            prop_assert!((t.get(&idx) - p).norm() <= 1e-12);
        }
    }

    #[test]
    fn nuclear_norm_ignores_permutations(
        rows in 1usize..=5,
        cols in 1usize..=5,
        seed in any::<u64>(),
        data in prop::collection::vec(c64(), 25),
    ) {
        let m = Matrix::new(rows, cols, data[..rows * cols].to_vec()).unwrap();
        let rp = shuffled(rows, seed);
        let cp = shuffled(cols, seed.rotate_left(17));
        let a = svd_nuclear_norm(&m).unwrap();
        let b = svd_nuclear_norm(&m.permuted(&rp, &cp)).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a.max(1.0));
    }

    #[test]
    fn matricize_preserves_entries(t in tensor(), pick in any::<u64>()) {
        let m = t.order();
        let k = 1 + (pick as usize) % (m - 1);
        let modes: Vec<usize> = shuffled(m, pick)[..k].to_vec();
        let mat = matricize(&t, &modes).unwrap();
        prop_assert_eq!(sorted_bits(mat.as_slice()), sorted_bits(t.as_slice()));
        let back = tensorize(&mat, t.shape(), &modes, Field::Complex).unwrap();
        prop_assert_eq!(back, t);
    }

    #[test]
    fn symmetrize_is_transposition_invariant(t in (2usize..=4).prop_flat_map(cube)) {
        let s = symmetrize(&t).unwrap();
        let m = s.order();
        for k in 0..m - 1 {
            let mut perm: Vec<usize> = (0..m).collect();
            perm.swap(k, k + 1);
            prop_assert!(s.max_abs_diff(&s.permute_modes(&perm).unwrap()).unwrap() <= 1e-12);
        }
        let avg = permutations(m)
            .iter()
            .map(|p| t.permute_modes(p).unwrap())
            .reduce(|a, b| a.add(&b).unwrap())
            .unwrap()
            .scale(1.0 / permutations(m).len() as f64);
        prop_assert!(s.max_abs_diff(&avg).unwrap() <= 1e-12);
    }
}

fn shuffled(n: usize, seed: u64) -> Vec<usize> {
    let mut v: Vec<usize> = (0..n).collect();
    let mut s = seed | 1;
    for i in (1..n).rev() {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        v.swap(i, (s % (i as u64 + 1)) as usize);
    }
    v
}
