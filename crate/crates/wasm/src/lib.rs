//! Browser bindings for the interactive demo page in `www/`.
//!
//! Three operations are exported: a completion session whose two threshold
//! scales can be moved live, the singular-value shrinkage of a noisy low-rank
//! matrix, and the soft-threshold response curve.

use flost::{
    complex_soft_threshold, dft_slice, generate_flost_truth, rescaled_projection, rmse,
    sample_observations, singular_values, svt, theorem_lambda_schedule, DenseTensor3, Dims,
    IndexSet, ObservationSet, RegularizationConfig, SamplingSpec, SpectralCache, SynthesisSpec,
};
use num_complex::Complex64;
use wasm_bindgen::prelude::*;

fn js(e: flost::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// A synthetic truth, one sampled observation set and the cached spectral
/// factorization, so refits at new thresholds cost only the shrinkage.
#[wasm_bindgen]
pub struct Demo {
    truth: DenseTensor3,
    obs: ObservationSet,
    mask: Vec<bool>,
    cache: SpectralCache,
    base: RegularizationConfig,
    estimate: DenseTensor3,
}

impl Demo {
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        m: usize,
        n: usize,
        t: usize,
        rank: usize,
        k: usize,
        p: f64,
        sigma: f64,
        seed: u64,
    ) -> flost::Result<Self> {
        let dims = Dims::new(m, n, t)?;
        let s = SynthesisSpec::default_sparsity(dims, k);
        let truth = generate_flost_truth(&SynthesisSpec {
            dims,
            r: rank,
            k,
            s,
            seed,
        })?;
        let obs = sample_observations(&truth, &SamplingSpec::new(p, sigma, seed.wrapping_add(1)))?;
        let cache = SpectralCache::build(&obs, k)?;
        let base = theorem_lambda_schedule(dims, obs.p(), obs.sup_norm(), 1.0, 1.0, k);
        Ok(Self {
            mask: obs.mask(),
            estimate: DenseTensor3::zeros(dims),
            truth,
            obs,
            cache,
            base,
        })
    }

    /// `[train RMSE, test RMSE, parameter count, sparse nonzeros, rank_0, .., rank_{K-1}]`.
    pub fn refit(&mut self, scale1: f64, scale2: f64) -> flost::Result<Vec<f64>> {
        let model = self.cache.model(&self.base.scaled(scale1, scale2))?;
        self.estimate = model.reconstruct()?;
        let score = |set: IndexSet| -> flost::Result<f64> {
            if set.is_empty() {
                Ok(f64::NAN)
            } else {
                Ok(rmse(&self.estimate, &self.truth, &set)?.value)
            }
        };
        let mut out = vec![
            score(IndexSet::observed(&self.obs))?,
            score(IndexSet::missing(&self.obs))?,
            model.parameter_count() as f64,
            model.tail_nnz() as f64,
        ];
        out.extend(model.ranks().iter().map(|&r| r as f64));
        Ok(out)
    }

    /// Truth, latest estimate and observation indicator along tube `(i, j)`,
    /// concatenated.
    pub fn tube_series(&self, i: usize, j: usize) -> flost::Result<Vec<f64>> {
        let d = self.truth.dims();
        if i >= d.m || j >= d.n {
            return Err(flost::Error::InvalidDims(format!(
                "tube ({i}, {j}) outside {d:?}"
            )));
        }
        let mut out = self.truth.tube(i, j).to_vec();
        out.extend_from_slice(self.estimate.tube(i, j));
        out.extend((0..d.t).map(|t| {
            if self.mask[d.index(i, j, t)] {
                1.0
            } else {
                0.0
            }
        }));
        Ok(out)
    }
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        m: usize,
        n: usize,
        t: usize,
        rank: usize,
        k: usize,
        p: f64,
        sigma: f64,
        seed: u32,
    ) -> Result<Demo, JsError> {
        Self::build(m, n, t, rank, k, p, sigma, seed as u64).map_err(js)
    }

    pub fn fit(&mut self, scale1: f64, scale2: f64) -> Result<Vec<f64>, JsError> {
        self.refit(scale1, scale2).map_err(js)
    }

    pub fn tube(&self, i: usize, j: usize) -> Result<Vec<f64>, JsError> {
        self.tube_series(i, j).map_err(js)
    }

    /// Unshrunk singular values of low-rank slice `l`.
    pub fn spectrum(&self, l: usize) -> Vec<f64> {
        self.cache
            .spectrum(l.min(self.cache.k().saturating_sub(1)))
            .to_vec()
    }

    #[wasm_bindgen(getter)]
    pub fn lambda1(&self) -> f64 {
        self.base.lambda1.first().copied().unwrap_or(0.0)
    }

    #[wasm_bindgen(getter)]
    pub fn lambda2(&self) -> f64 {
        self.base.lambda2
    }

    #[wasm_bindgen(getter)]
    pub fn observed(&self) -> usize {
        self.obs.len()
    }

    #[wasm_bindgen(getter)]
    pub fn dims(&self) -> Vec<usize> {
        let d = self.truth.dims();
        vec![d.m, d.n, d.t]
    }
}

/// Singular values of a rank-`rank` matrix plus noise, before and after
/// shrinkage at `tau`, concatenated.
pub fn shrinkage_spectrum(
    m: usize,
    n: usize,
    rank: usize,
    sigma: f64,
    tau: f64,
    seed: u64,
) -> flost::Result<Vec<f64>> {
    let dims = Dims::new(m, n, 1)?;
    let clean = generate_flost_truth(&SynthesisSpec {
        dims,
        r: rank,
        k: 1,
        s: 0,
        seed,
    })?;
    let noisy = sample_observations(&clean, &SamplingSpec::new(1.0, sigma, seed.wrapping_add(1)))?;
    let a = dft_slice(&rescaled_projection(&noisy), 0)?;
    let mut out = singular_values(&a)?;
    let (shrunk, _) = svt(&a, tau)?;
    out.extend(singular_values(&shrunk)?);
    Ok(out)
}

#[wasm_bindgen]
pub fn svt_spectrum(
    m: usize,
    n: usize,
    rank: usize,
    sigma: f64,
    tau: f64,
    seed: u32,
) -> Result<Vec<f64>, JsError> {
    shrinkage_spectrum(m, n, rank, sigma, tau, seed as u64).map_err(js)
}

/// Soft-threshold of `steps` real inputs evenly spaced on `[-extent, extent]`
/// (a single input sits at 0).
#[wasm_bindgen]
pub fn soft_threshold_curve(tau: f64, extent: f64, steps: usize) -> Vec<f64> {
    let (start, h) = match steps {
        0 | 1 => (0.0, 0.0),
        _ => (-extent, 2.0 * extent / (steps - 1) as f64),
    };
    (0..steps)
        .map(|k| complex_soft_threshold(Complex64::new(start + h * k as f64, 0.0), tau).re)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_thresholds_recover_observed_entries() {
        let mut demo = Demo::build(6, 5, 8, 2, 2, 1.0, 0.0, 3).unwrap();
        let stats = demo.refit(0.0, 0.0).unwrap();
        assert!(stats[0] < 1e-10);
        assert!(stats[1].is_nan());
        let tube = demo.tube_series(1, 2).unwrap();
        assert_eq!(tube.len(), 24);
        assert!(tube[..8]
            .iter()
            .zip(&tube[8..16])
            .all(|(a, b)| (a - b).abs() < 1e-10));
        assert!(tube[16..].iter().all(|&v| v == 1.0));
    }

    #[test]
    fn larger_scales_give_smaller_models() {
        let mut demo = Demo::build(10, 8, 12, 2, 2, 0.5, 0.1, 4).unwrap();
        let small = demo.refit(0.2, 0.2).unwrap();
        let large = demo.refit(5.0, 5.0).unwrap();
        assert!(large[2] <= small[2]);
        assert!(large[4..].iter().zip(&small[4..]).all(|(a, b)| a <= b));
        assert_eq!(demo.spectrum(0).len(), 8);
        assert!(demo.tube_series(10, 0).is_err());
    }

    #[test]
    fn shrinkage_subtracts_and_truncates() {
        let out = shrinkage_spectrum(7, 5, 2, 0.05, 0.3, 9).unwrap();
        let (before, after) = out.split_at(5);
        for (b, a) in before.iter().zip(after) {
            assert!((a - (b - 0.3).max(0.0)).abs() < 1e-10);
        }
    }

    #[test]
    fn soft_threshold_curve_shape() {
        let c = soft_threshold_curve(1.0, 2.0, 5);
        assert_eq!(c, vec![-1.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(soft_threshold_curve(1.0, 2.0, 1), vec![0.0]);
    }
}
