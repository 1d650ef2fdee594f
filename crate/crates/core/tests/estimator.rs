mod common;

use common::{
    all_slice_svt, complex_l1_prox_oracle, naive_slice, nuclear_prox_oracle, random_tensor,
    rescaled_dense, rng,
};
use flost::{
    fit, generate_flost_truth, observed_slice, sample_observations, Dims, Observation,
    ObservationSet, RegularizationConfig, SamplingSpec, SpectralCache, SynthesisSpec,
};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

fn noisy_observations(dims: Dims, p: f64, seed: u64) -> ObservationSet {
    let x = random_tensor(dims, &mut rng(seed));
    sample_observations(&x, &SamplingSpec::new(p, 0.3, seed + 1)).unwrap()
}

#[test]
fn every_subproblem_is_solved() {
    let dims = Dims::new(4, 4, 4).unwrap();
    let mut r = rng(99);
    for case in 0..6u64 {
        let obs = noisy_observations(dims, 0.6, 10 * case);
        let k = r.random_range(1..=dims.half());
        let lambda1: Vec<f64> = (0..k).map(|_| r.random_range(0.05..2.0)).collect();
        let lambda2 = r.random_range(0.05..1.0);
        let cfg = RegularizationConfig {
            lambda1: lambda1.clone(),
            lambda2,
            ..RegularizationConfig::uniform(k, 0.0, 0.0)
        };
        let slices = fit(&obs, &cfg).unwrap().frequency_slices();
        let target = rescaled_dense(&obs);
        for (l, fitted) in slices.iter().enumerate() {
            let data = naive_slice(&target, l);
            let oracle = if l < k {
                nuclear_prox_oracle(&data, lambda1[l], case)
            } else {
                data.map(|z| complex_l1_prox_oracle(z, lambda2))
            };
            assert!((fitted - &oracle).norm() <= 1e-6, "case {case} slice {l}");
        }
    }
}

#[test]
fn sparse_slice_accumulation_matches_dense_transform() {
    let dims = Dims::new(3, 5, 9).unwrap();
    let obs = noisy_observations(dims, 0.4, 3);
    let dense = rescaled_dense(&obs);
    for l in 0..dims.t {
        let a = observed_slice(&obs, l).unwrap();
        assert!((a - naive_slice(&dense, l)).norm() < 1e-12);
    }
}

#[test]
fn cached_models_equal_direct_fits() {
    let dims = Dims::new(6, 5, 11).unwrap();
    let obs = noisy_observations(dims, 0.7, 17);
    let cache = SpectralCache::build(&obs, 3).unwrap();
    for (a, b) in [(0.1, 0.2), (1.0, 0.0), (3.0, 2.5)] {
        let cfg = RegularizationConfig::uniform(3, a, b);
        let direct = fit(&obs, &cfg).unwrap();
        assert_eq!(cache.model(&cfg).unwrap(), direct);
        assert_eq!(
            cache.model(&cfg).unwrap().reconstruct().unwrap().values(),
            direct.reconstruct().unwrap().values()
        );
    }
}

#[test]
fn full_lowrank_model_is_slicewise_svt() {
    for (t, seed) in [(7usize, 1u64), (8, 2), (1, 3), (2, 4)] {
        let dims = Dims::new(5, 4, t).unwrap();
        let obs = noisy_observations(dims, 0.5, seed);
        let cfg = RegularizationConfig::uniform(dims.half(), 0.8, 123.0);
        let est = fit(&obs, &cfg).unwrap().reconstruct().unwrap();
        let reference = all_slice_svt(&obs, 0.8);
        assert!(est.distance(&reference) <= 1e-12 * (1.0 + reference.frobenius_norm()));
    }
}

#[test]
fn zero_thresholds_reproduce_the_rescaled_data() {
    let dims = Dims::new(3, 4, 6).unwrap();
    let obs = noisy_observations(dims, 0.5, 8);
    let est = fit(&obs, &RegularizationConfig::uniform(2, 0.0, 0.0))
        .unwrap()
        .reconstruct()
        .unwrap();
    assert!(est.distance(&rescaled_dense(&obs)) < 1e-12);
}

#[test]
fn huge_thresholds_give_zero() {
    let dims = Dims::new(3, 4, 6).unwrap();
    let obs = noisy_observations(dims, 0.5, 8);
    let model = fit(&obs, &RegularizationConfig::uniform(2, 1e6, 1e6)).unwrap();
    assert_eq!(model.parameter_count(), 0);
    assert!(model
        .reconstruct()
        .unwrap()
        .values()
        .iter()
        .all(|&v| v == 0.0));
}

#[test]
fn empty_observations_fit_to_zero() {
    let dims = Dims::new(2, 2, 3).unwrap();
    let obs = ObservationSet::new(dims, vec![], 0.5).unwrap();
    let model = fit(&obs, &RegularizationConfig::uniform(1, 0.1, 0.1)).unwrap();
    assert!(model
        .reconstruct()
        .unwrap()
        .values()
        .iter()
        .all(|&v| v == 0.0));
}

#[test]
fn rejects_bad_observations() {
    let dims = Dims::new(2, 2, 2).unwrap();
    let e = |i, j, t, value| Observation { i, j, t, value };
    assert!(ObservationSet::new(dims, vec![e(2, 0, 0, 1.0)], 0.5).is_err());
    assert!(ObservationSet::new(dims, vec![e(0, 0, 0, 1.0), e(0, 0, 0, 2.0)], 0.5).is_err());
    assert!(ObservationSet::new(dims, vec![e(0, 0, 0, f64::NAN)], 0.5).is_err());
    assert!(ObservationSet::new(dims, vec![], 0.0).is_err());
    assert!(ObservationSet::new(dims, vec![], 1.5).is_err());
    let bad_k = RegularizationConfig::uniform(3, 0.1, 0.1);
    let obs = ObservationSet::new(dims, vec![e(0, 0, 0, 1.0)], 0.5).unwrap();
    assert!(fit(&obs, &bad_k).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn exact_recovery_without_noise(
        m in 2usize..=12, n in 2usize..=12, t in 1usize..=20, seed in any::<u64>(), r in 1usize..=3,
    ) {
        let dims = Dims::new(m, n, t).unwrap();
        let k = 1 + (seed as usize) % dims.half();
        let r = r.min(m.min(n));
        let s = SynthesisSpec::default_sparsity(dims, k);
        let truth = generate_flost_truth(&SynthesisSpec { dims, r, k, s, seed }).unwrap();
        let obs = sample_observations(&truth, &SamplingSpec::new(1.0, 0.0, seed)).unwrap();
        let est = fit(&obs, &RegularizationConfig::uniform(k, 0.0, 0.0)).unwrap().reconstruct().unwrap();
        prop_assert!(est.distance(&truth) <= 1e-10 * truth.frobenius_norm().max(1e-300));
    }

    #[test]
    fn fitted_ranks_never_increase_with_lambda(seed in any::<u64>(), a in 0.0f64..3.0, b in 0.0f64..3.0) {
        let dims = Dims::new(5, 6, 8).unwrap();
        let obs = noisy_observations(dims, 0.6, seed % 1000);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let m_lo = fit(&obs, &RegularizationConfig::uniform(3, lo, lo)).unwrap();
        let m_hi = fit(&obs, &RegularizationConfig::uniform(3, hi, hi)).unwrap();
        for (x, y) in m_lo.ranks().iter().zip(m_hi.ranks()) {
            prop_assert!(y <= *x);
        }
        prop_assert!(m_hi.tail_nnz() <= m_lo.tail_nnz());
    }

    #[test]
    fn reconstruction_is_real_and_finite(seed in any::<u64>()) {
        let mut r = rng(seed);
        let dims = Dims::new(r.random_range(1..6), r.random_range(1..6), r.random_range(1..12)).unwrap();
        let obs = noisy_observations(dims, 0.5, seed % 1000);
        let k = r.random_range(1..=dims.half());
        let cfg = RegularizationConfig::uniform(k, r.random_range(0.0..1.0), r.random_range(0.0..1.0));
        let est = fit(&obs, &cfg).unwrap().reconstruct().unwrap();
        prop_assert!(est.values().iter().all(|v| v.is_finite()));
    }
}

#[test]
fn descent_oracle_on_diagonal_input() {
    // sanity check for the factored-descent oracle
    let mut a = nalgebra::DMatrix::zeros(3, 3);
    a[(0, 0)] = Complex64::new(3.0, 0.0);
    a[(1, 1)] = Complex64::new(1.0, 0.0);
    let x = nuclear_prox_oracle(&a, 2.0, 4);
    assert!((x[(0, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-8);
    assert!(x[(1, 1)].norm() < 1e-8);
}
