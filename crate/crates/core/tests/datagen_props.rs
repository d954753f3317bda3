use bcddr::datagen::{sparse_surrogate, synthetic_lowrank, SynthSpec};
use bcddr::{ModelMode, NtfProblem};

#[test]
fn full_scale_synthetic_tensor() {
    let (x, truth) = synthetic_lowrank(&SynthSpec::lowrank(vec![100, 200, 300], 5, 1)).unwrap();
    assert_eq!(x.shape(), &[100, 200, 300]);
    assert!(x.is_nonnegative());
    assert_eq!(truth.rank(), 5);
    assert!(truth.factors.iter().all(|f| f.data().iter().all(|&v| (0.0..=1.0).contains(&v))));
}

#[test]
fn noiseless_ground_truth_fits_exactly() {
    let (x, truth) = synthetic_lowrank(&SynthSpec::lowrank(vec![20, 25, 30], 3, 4)).unwrap();
    let p = NtfProblem::new(x, 3, ModelMode::CpAbsorbed, None).unwrap();
    assert!(p.objective(&truth).unwrap() <= 1e-20);
}

#[test]
fn generation_is_deterministic_per_seed() {
    let spec = SynthSpec::lowrank(vec![7, 8, 9], 2, 42);
    let a = synthetic_lowrank(&spec).unwrap();
    let b = synthetic_lowrank(&spec).unwrap();
    assert_eq!(a, b);
    let other = synthetic_lowrank(&SynthSpec::lowrank(vec![7, 8, 9], 2, 43)).unwrap();
    assert_ne!(a.0, other.0);

    let noisy = SynthSpec {
        noise_level: 0.1,
        ..spec
    };
    let (n1, _) = synthetic_lowrank(&noisy).unwrap();
    let (n2, _) = synthetic_lowrank(&noisy).unwrap();
    assert_eq!(n1, n2);
    assert!(n1.is_nonnegative());
    assert_ne!(n1, a.0);
}

#[test]
fn surrogate_mean_matches_target() {
    let spec = SynthSpec::surrogate(vec![30, 100, 50], 9, 0.01, 0.00067);
    let x = sparse_surrogate(&spec).unwrap();
    assert_eq!(x.shape(), &[30, 100, 50]);
    assert!(x.is_nonnegative());
    let mean = x.data().iter().map(|v| v.abs()).sum::<f64>() / x.len() as f64;
    assert!((mean - 0.00067).abs() <= 0.05 * 0.00067, "{mean}");
    let nonzero = x.data().iter().filter(|&&v| v != 0.0).count() as f64 / x.len() as f64;
    assert!((nonzero - 0.01).abs() < 0.002, "{nonzero}");
    assert_eq!(x, sparse_surrogate(&spec).unwrap());
}

#[test]
fn invalid_specs_are_rejected() {
    assert!(synthetic_lowrank(&SynthSpec::lowrank(vec![3, 2], 3, 0)).is_err());
    assert!(synthetic_lowrank(&SynthSpec::lowrank(vec![3, 0], 1, 0)).is_err());
    assert!(sparse_surrogate(&SynthSpec::surrogate(vec![3, 3], 0, 0.0, 1.0)).is_err());
    assert!(sparse_surrogate(&SynthSpec::surrogate(vec![3, 3], 0, 0.5, -1.0)).is_err());
}
