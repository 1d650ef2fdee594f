mod common;

use common::{naive_dft, naive_idft, naive_slice, random_tensor, rng};
use flost::{
    conjugate_symmetrize, dft_slice, extract_slice, half_spectrum, mode3_dft, mode3_idft,
    DenseTensor3, Dims,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn dims_strategy() -> impl Strategy<Value = Dims> {
    (1usize..=8, 1usize..=8, 1usize..=16).prop_map(|(m, n, t)| Dims::new(m, n, t).unwrap())
}

fn tensor_strategy() -> impl Strategy<Value = DenseTensor3> {
    (dims_strategy(), any::<u64>()).prop_map(|(d, seed)| random_tensor(d, &mut rng(seed)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fast_transform_matches_direct_summation(x in tensor_strategy()) {
        let y = mode3_dft(&x);
        let direct = naive_dft(&x);
        for (l, slice) in direct.iter().enumerate() {
            let fast = y.slice(l).unwrap();
            prop_assert!((fast - slice).norm() <= 1e-12 * (1.0 + x.frobenius_norm()));
        }
    }

    #[test]
    fn roundtrip(x in tensor_strategy()) {
        let back = mode3_idft(&mode3_dft(&x)).unwrap();
        prop_assert!(back.distance(&x) <= 1e-10 * x.frobenius_norm());
    }

    #[test]
    fn parseval(x in tensor_strategy()) {
        let ny = mode3_dft(&x).frobenius_norm();
        prop_assert!((ny - x.frobenius_norm()).abs() <= 1e-12 * x.frobenius_norm());
    }

    #[test]
    fn conjugate_symmetry(x in tensor_strategy()) {
        let y = mode3_dft(&x);
        let t = x.dims().t;
        let scale = 1e-12 * (1.0 + x.frobenius_norm());
        for l in 1..t {
            let a = y.slice(l).unwrap();
            let b = y.slice(t - l).unwrap().map(|z| z.conj());
            prop_assert!((a - b).norm() <= scale);
        }
        prop_assert!(y.slice(0).unwrap().iter().all(|z| z.im.abs() <= scale));
    }

    #[test]
    fn slice_extraction_agrees(x in tensor_strategy(), pick in any::<prop::sample::Index>()) {
        let y = mode3_dft(&x);
        let l = pick.index(x.dims().t);
        let full = y.slice(l).unwrap();
        let tol = 1e-12 * (1.0 + full.norm());
        prop_assert!((extract_slice(&y, l).unwrap() - &full).norm() <= tol);
        prop_assert!((dft_slice(&x, l).unwrap() - &full).norm() <= tol);
    }

    #[test]
    fn linearity(d in dims_strategy(), s1 in any::<u64>(), s2 in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let x = random_tensor(d, &mut rng(s1));
        let z = random_tensor(d, &mut rng(s2));
        let combo = DenseTensor3::from_fn(d, |i, j, t| a * x.get(i, j, t) + b * z.get(i, j, t));
        let lhs = mode3_dft(&combo);
        let (yx, yz) = (mode3_dft(&x), mode3_dft(&z));
        let err: f64 = lhs
            .values()
            .iter()
            .zip(yx.values().iter().zip(yz.values()))
            .map(|(l, (p, q))| (l - (p * a + q * b)).norm_sqr())
            .sum::<f64>()
            .sqrt();
        prop_assert!(err <= 1e-12 * (1.0 + lhs.frobenius_norm()));
    }

    #[test]
    fn half_spectrum_rebuilds_the_tensor(x in tensor_strategy()) {
        let stack = conjugate_symmetrize(&half_spectrum(&x), x.dims().t).unwrap();
        let back = mode3_idft(&stack).unwrap();
        prop_assert!(back.distance(&x) <= 1e-10 * (1.0 + x.frobenius_norm()));

        let full: Vec<_> = (0..x.dims().t).map(|l| stack.slice(l).unwrap()).collect();
        let (direct, max_im) = naive_idft(&full);
        prop_assert!(direct.distance(&x) <= 1e-10 * (1.0 + x.frobenius_norm()));
        prop_assert!(max_im <= 1e-10 * (1.0 + x.frobenius_norm()));
    }
}

#[test]
fn two_point_tube() {
    let x = DenseTensor3::from_vec(Dims::new(1, 1, 2).unwrap(), vec![1.0, 3.0]).unwrap();
    let direct = naive_dft(&x);
    assert!((direct[0][(0, 0)].re - 2.0 * 2f64.sqrt()).abs() < 1e-15);
    assert!((direct[1][(0, 0)].re + 2f64.sqrt()).abs() < 1e-15);
    let y = mode3_dft(&x);
    assert!((y.get(0, 0, 0) - direct[0][(0, 0)]).norm() < 1e-15);
    assert!((y.get(0, 0, 1) - direct[1][(0, 0)]).norm() < 1e-15);
}

#[test]
fn dc_slice_of_constant_tubes() {
    let d = Dims::new(3, 2, 7).unwrap();
    let x = DenseTensor3::from_fn(d, |i, j, _| (i as f64) - 2.0 * j as f64);
    for l in 0..d.t {
        let s = naive_slice(&x, l);
        let y = dft_slice(&x, l).unwrap();
        assert!((y - &s).norm() < 1e-12);
        if l == 0 {
            let expected = DMatrix::from_fn(3, 2, |i, j| {
                Complex64::new(((i as f64) - 2.0 * j as f64) * 7f64.sqrt(), 0.0)
            });
            assert!((s - expected).norm() < 1e-12);
        } else {
            assert!(s.norm() < 1e-12);
        }
    }
}

#[test]
fn corrupted_stack_is_rejected() {
    let x = random_tensor(Dims::new(2, 2, 6).unwrap(), &mut rng(5));
    let mut front = half_spectrum(&x);
    front[1][(0, 0)] += Complex64::new(0.0, 1.0);
    let stack = conjugate_symmetrize(&front, 6).unwrap();
    // still consistent: the mirror is rebuilt from the edited slice
    assert!(mode3_idft(&stack).is_ok());
    let raw = flost::ComplexTensor3::from_vec(
        stack.dims(),
        stack
            .values()
            .iter()
            .enumerate()
            .map(|(k, z)| {
                if k == 1 {
                    z + Complex64::new(0.0, 1.0)
                } else {
                    *z
                }
            })
            .collect(),
    )
    .unwrap();
    assert!(matches!(
        mode3_idft(&raw),
        Err(flost::Error::SymmetryViolation { .. })
    ));
}
