#![allow(dead_code)]

//! Reference implementations used only by the test suites. None of these call
//! into the crate's transform code.

use std::f64::consts::PI;

use flost::{svt, ComplexMatrix, DenseTensor3, Dims, ObservationSet};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tensor(dims: Dims, rng: &mut ChaCha8Rng) -> DenseTensor3 {
    DenseTensor3::from_fn(dims, |_, _, _| rng.sample(StandardNormal))
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    DMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

pub fn rel_err(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    (a - b).norm() / (1.0 + b.norm())
}

/// `exp(-2πi k / T) / √T` with `k` reduced mod `T`.
fn twiddle(k: usize, t: usize) -> Complex64 {
    let angle = -2.0 * PI * (k % t) as f64 / t as f64;
    Complex64::from_polar(1.0 / (t as f64).sqrt(), angle)
}

/// Frequency slice `l` by direct summation over each tube.
pub fn naive_slice(x: &DenseTensor3, l: usize) -> ComplexMatrix {
    let d = x.dims();
    DMatrix::from_fn(d.m, d.n, |i, j| {
        (0..d.t).map(|t| twiddle(l * t, d.t) * x.get(i, j, t)).sum()
    })
}

/// All `T` slices by direct summation.
pub fn naive_dft(x: &DenseTensor3) -> Vec<ComplexMatrix> {
    (0..x.dims().t).map(|l| naive_slice(x, l)).collect()
}

/// Real tensor from a full frequency stack by direct summation. Imaginary
/// parts are returned alongside so callers can check them.
pub fn naive_idft(stack: &[ComplexMatrix]) -> (DenseTensor3, f64) {
    let t = stack.len();
    let (m, n) = stack[0].shape();
    let dims = Dims::new(m, n, t).unwrap();
    let mut max_im = 0.0f64;
    let x = DenseTensor3::from_fn(dims, |i, j, tt| {
        let z: Complex64 = (0..t)
            .map(|l| twiddle(l * tt, t).conj() * stack[l][(i, j)])
            .sum();
        max_im = max_im.max(z.im.abs());
        z.re
    });
    (x, max_im)
}

/// Minimizer of `½‖X - A‖²_F + τ‖X‖_*` found by gradient descent on the
/// factored objective `½‖L Rᴴ - A‖²_F + τ/2 (‖L‖²_F + ‖R‖²_F)`, whose minimum
/// value and minimizing product coincide with the convex problem.
pub fn nuclear_prox_oracle(a: &ComplexMatrix, tau: f64, seed: u64) -> ComplexMatrix {
    let (m, n) = a.shape();
    let q = m.min(n);
    let mut rng = rng(seed);
    let scale = (a.norm() / q as f64).sqrt().max(1e-3) * 0.5;
    let mut l = random_matrix(&mut rng, m, q) * Complex64::new(scale, 0.0);
    let mut r = random_matrix(&mut rng, n, q) * Complex64::new(scale, 0.0);
    let step = 0.25 / (a.norm() + tau);
    let t = Complex64::new(tau, 0.0);
    for _ in 0..400_000 {
        let resid = &l * r.adjoint() - a;
        let gl = &resid * &r + &l * t;
        let gr = resid.adjoint() * &l + &r * t;
        if gl.norm() + gr.norm() < 1e-13 {
            break;
        }
        l -= gl * Complex64::new(step, 0.0);
        r -= gr * Complex64::new(step, 0.0);
    }
    &l * r.adjoint()
}

/// Minimizer of `½(u - x)² + τ|u|` by repeated zooming grid search.
pub fn scalar_l1_prox_oracle(x: f64, tau: f64) -> f64 {
    let cost = |u: f64| 0.5 * (u - x) * (u - x) + tau * u.abs();
    let (mut lo, mut hi) = (-x.abs() - 1.0, x.abs() + 1.0);
    while hi - lo > 1e-13 {
        let steps = 200;
        let h = (hi - lo) / steps as f64;
        let best = (0..=steps)
            .map(|k| lo + h * k as f64)
            .min_by(|a, b| cost(*a).total_cmp(&cost(*b)))
            .unwrap();
        lo = best - h;
        hi = best + h;
    }
    0.5 * (lo + hi)
}

/// Minimizer of `½|u - z|² + τ(|Re u| + |Im u|)` over the complex plane.
pub fn complex_l1_prox_oracle(z: Complex64, tau: f64) -> Complex64 {
    Complex64::new(
        scalar_l1_prox_oracle(z.re, tau),
        scalar_l1_prox_oracle(z.im, tau),
    )
}

/// Dense `p⁻¹ P_Ω(Y)` built entry by entry.
pub fn rescaled_dense(obs: &ObservationSet) -> DenseTensor3 {
    let mut out = DenseTensor3::zeros(obs.dims());
    for e in obs.entries() {
        out.set(e.i, e.j, e.t, e.value / obs.p());
    }
    out
}

/// Shrink every one of the `T` frequency slices of `p⁻¹ P_Ω(Y)` with the same
/// threshold, with no sparse block and no use of conjugate symmetry. Only the
/// per-slice shrinkage comes from the crate.
pub fn all_slice_svt(obs: &ObservationSet, tau: f64) -> DenseTensor3 {
    let stack: Vec<ComplexMatrix> = naive_dft(&rescaled_dense(obs))
        .iter()
        .map(|slice| svt(slice, tau).unwrap().0)
        .collect();
    naive_idft(&stack).0
}
