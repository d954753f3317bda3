mod support;

use bcddr::tensor::{cp_reconstruct, fold, khatri_rao, khatri_rao_except, mttkrp, unfold};
use bcddr::{DenseTensor, Matrix};
use proptest::prelude::*;
use support::*;

#[test]
fn mode_two_unfolding_of_2x2x2_matches_enumeration() {
    let t = DenseTensor::new(vec![2, 2, 2], (1..=8).map(f64::from).collect()).unwrap();
    let want = brute_unfold(&t, 1);
    // Enumerated by hand from t(i,j,k) = 4i + 2j + k + 1 with column i + 2k.
    assert_eq!(want, vec![vec![1.0, 5.0, 2.0, 6.0], vec![3.0, 7.0, 4.0, 8.0]]);
    let got = unfold(&t, 1).unwrap();
    assert!(matrix_close(&got, &want, 0.0));
}

#[test]
fn unfold_matches_definition_all_modes() {
    let mut rng = TestRng::new(1);
    for shape in [vec![3, 4], vec![2, 3, 4], vec![2, 1, 3, 2]] {
        let t = rng.tensor(&shape, -1.0, 1.0);
        for k in 0..shape.len() {
            assert!(matrix_close(&unfold(&t, k).unwrap(), &brute_unfold(&t, k), 0.0));
        }
    }
}

#[test]
fn khatri_rao_matches_four_index_loop() {
    let mut rng = TestRng::new(2);
    let a = rng.matrix(2, 2, -1.0, 1.0);
    let b = rng.matrix(3, 2, -1.0, 1.0);
    let kr = khatri_rao(&a, &b).unwrap();
    assert_eq!(kr.shape(), (6, 2));
    assert!(matrix_close(&kr, &brute_khatri_rao(&a, &b), 1e-15));
}

#[test]
fn mttkrp_matches_triple_loop() {
    let mut rng = TestRng::new(3);
    let t = rng.tensor(&[3, 4, 2], 0.0, 1.0);
    let factors = vec![rng.matrix(3, 2, 0.0, 1.0), rng.matrix(4, 2, 0.0, 1.0), rng.matrix(2, 2, 0.0, 1.0)];
    for k in 0..3 {
        let got = mttkrp(&t, &factors, k).unwrap();
        assert!(matrix_close(&got, &brute_mttkrp(&t, &factors, k), 1e-12), "mode {k}");
    }
}

#[test]
fn cp_reconstruct_matches_five_index_loop() {
    let mut rng = TestRng::new(4);
    let factors = vec![rng.matrix(3, 2, 0.0, 1.0), rng.matrix(2, 2, 0.0, 1.0), rng.matrix(4, 2, 0.0, 1.0)];
    let code = rng.matrix(2, 3, 0.0, 1.0);
    let got = cp_reconstruct(&factors, &code).unwrap();
    let want = brute_cp_reconstruct(&factors, &code);
    assert_eq!(got.shape(), want.shape());
    for (a, b) in got.data().iter().zip(want.data()) {
        assert!((a - b).abs() <= 1e-13 * (1.0 + b.abs()));
    }
}

#[test]
fn cp_with_ones_code_is_sum_of_outer_products() {
    let mut rng = TestRng::new(5);
    let factors = vec![rng.matrix(2, 3, 0.0, 1.0), rng.matrix(3, 3, 0.0, 1.0)];
    let t = cp_reconstruct(&factors, &Matrix::filled(3, 1, 1.0)).unwrap();
    let outer = factors[0].matmul(&factors[1].transpose()).unwrap();
    for (a, b) in t.data().iter().zip(outer.data()) {
        assert!((a - b).abs() < 1e-14);
    }
}

fn shape_strategy() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..5, 1..=4)
}

proptest! {
    #[test]
    fn fold_inverts_unfold(shape in shape_strategy(), seed in any::<u64>()) {
        let t = TestRng::new(seed).tensor(&shape, -2.0, 2.0);
        for k in 0..shape.len() {
            let back = fold(&unfold(&t, k).unwrap(), k, &shape).unwrap();
            prop_assert_eq!(&back, &t);
        }
    }

    #[test]
    fn mttkrp_is_unfold_times_khatri_rao(shape in prop::collection::vec(1usize..5, 2..=4), r in 1usize..4, seed in any::<u64>()) {
        let mut rng = TestRng::new(seed);
        let t = rng.tensor(&shape, 0.0, 1.0);
        let factors: Vec<Matrix> = shape.iter().map(|&d| rng.matrix(d, r, 0.0, 1.0)).collect();
        for k in 0..shape.len() {
            let direct = unfold(&t, k).unwrap().matmul(&khatri_rao_except(&factors, k).unwrap()).unwrap();
            let fast = mttkrp(&t, &factors, k).unwrap();
            let scale = direct.frobenius_norm().max(1e-300);
            prop_assert!(fast.distance(&direct) <= 1e-12 * scale);
        }
    }

    #[test]
    fn norm_is_absolutely_homogeneous(shape in shape_strategy(), a in -10.0f64..10.0, seed in any::<u64>()) {
        let t = TestRng::new(seed).tensor(&shape, -1.0, 1.0);
        let lhs = t.scale(a).frobenius_norm();
        let rhs = a.abs() * t.frobenius_norm();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
    }

    #[test]
    fn zero_code_annihilates(dims in prop::collection::vec(1usize..4, 1..=3), r in 1usize..3, t in 1usize..3, seed in any::<u64>()) {
        let mut rng = TestRng::new(seed);
        let factors: Vec<Matrix> = dims.iter().map(|&d| rng.matrix(d, r, 0.1, 1.0)).collect();
        let zero = cp_reconstruct(&factors, &Matrix::zeros(r, t)).unwrap();
        prop_assert_eq!(zero.frobenius_norm(), 0.0);
        let nonzero = cp_reconstruct(&factors, &Matrix::filled(r, t, 1.0)).unwrap();
        prop_assert!(nonzero.frobenius_norm() > 0.0);
    }
}
