//! Synthetic ground truth and Bernoulli-sampled observations.
//!
//! A tensor is `(r, K, s)`-structured when its first `K` frequency slices have
//! rank at most `r` and the remaining independent slices `K..half` hold at most
//! `s` nonzero coefficients between them.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{Observation, ObservationSet};
use crate::prox::{singular_values, SvdFactors};
use crate::tensor::{
    conjugate_symmetrize, dft_slice, half_spectrum, mode3_idft, ComplexMatrix, DenseTensor3, Dims,
    SliceIndexPlan,
};

const MASK_STREAM: u64 = 0;
const NOISE_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthesisSpec {
    pub dims: Dims,
    pub r: usize,
    pub k: usize,
    pub s: usize,
    pub seed: u64,
}

impl SynthesisSpec {
    /// Sparsity used in the simulation study: 10% of the high-frequency coefficients.
    pub fn default_sparsity(dims: Dims, k: usize) -> usize {
        dims.half().saturating_sub(k) * dims.m * dims.n / 10
    }

    pub fn validate(&self) -> Result<SliceIndexPlan> {
        validate_structure(self.dims, self.r, self.k, self.s)
    }
}

fn validate_structure(dims: Dims, r: usize, k: usize, s: usize) -> Result<SliceIndexPlan> {
    let plan = SliceIndexPlan::new(dims.t, k)?;
    if r > dims.m.min(dims.n) {
        return Err(Error::InvalidConfig(format!(
            "rank {r} exceeds min(M, N) = {}",
            dims.m.min(dims.n)
        )));
    }
    let capacity = (plan.half - plan.k) * dims.m * dims.n;
    if s > capacity {
        return Err(Error::InvalidConfig(format!(
            "sparsity {s} exceeds the {capacity} high-frequency coefficients"
        )));
    }
    Ok(plan)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    #[default]
    Gaussian,
    /// Uniform on `[-√3 σ, √3 σ]`, which has standard deviation `σ`.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingSpec {
    pub p: f64,
    pub sigma: f64,
    pub seed: u64,
    #[serde(default)]
    pub noise: NoiseKind,
}

impl SamplingSpec {
    pub fn new(p: f64, sigma: f64, seed: u64) -> Self {
        Self {
            p,
            sigma,
            seed,
            noise: NoiseKind::Gaussian,
        }
    }
}

/// Draw an i.i.d. standard normal tensor and project it onto the structured set.
pub fn generate_flost_truth(spec: &SynthesisSpec) -> Result<DenseTensor3> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let raw = DenseTensor3::from_fn(spec.dims, |_, _, _| rng.sample(StandardNormal));
    flost_truncate(&raw, spec.r, spec.k, spec.s)
}

/// Keep the top-`r` SVD part of slices `0..K` and the `s` largest-modulus
/// coefficients pooled over slices `K..half`, then mirror and invert.
///
/// Ties in the top-`s` selection go to the smallest `(l, i, j)`.
pub fn flost_truncate(x: &DenseTensor3, r: usize, k: usize, s: usize) -> Result<DenseTensor3> {
    let dims = x.dims();
    let plan = validate_structure(dims, r, k, s)?;
    let mut slices = half_spectrum(x);
    for slice in slices.iter_mut().take(plan.k) {
        let factors = SvdFactors::decompose(slice)?;
        *slice = truncate_rank(&factors, r);
    }
    keep_largest(&mut slices[plan.k..], s);
    mode3_idft(&conjugate_symmetrize(&slices, dims.t)?)
}

fn truncate_rank(f: &SvdFactors, r: usize) -> ComplexMatrix {
    let keep = r.min(f.rank());
    SvdFactors {
        u: f.u.columns(0, keep).into_owned(),
        sigma: f.sigma[..keep].to_vec(),
        v: f.v.columns(0, keep).into_owned(),
    }
    .to_matrix()
}

fn keep_largest(tail: &mut [ComplexMatrix], s: usize) {
    let mut ranked: Vec<(f64, usize, usize, usize)> = Vec::new();
    for (offset, slice) in tail.iter().enumerate() {
        for i in 0..slice.nrows() {
            for j in 0..slice.ncols() {
                ranked.push((slice[(i, j)].norm(), offset, i, j));
            }
        }
    }
    let order = |a: &(f64, usize, usize, usize), b: &(f64, usize, usize, usize)| {
        b.0.total_cmp(&a.0)
            .then((a.1, a.2, a.3).cmp(&(b.1, b.2, b.3)))
    };
    if s < ranked.len() {
        if s > 0 {
            ranked.select_nth_unstable_by(s - 1, order);
        }
        ranked.truncate(s);
    }
    let mut mask: Vec<DMatrix<bool>> = tail
        .iter()
        .map(|m| DMatrix::from_element(m.nrows(), m.ncols(), false))
        .collect();
    for &(_, offset, i, j) in &ranked {
        mask[offset][(i, j)] = true;
    }
    for (slice, mask) in tail.iter_mut().zip(mask.iter()) {
        for (z, &keep) in slice.iter_mut().zip(mask.iter()) {
            if !keep {
                *z = Complex64::new(0.0, 0.0);
            }
        }
    }
}

/// Structure check computed from direct DFT rows: every slice `l < K` has at most
/// `r` singular values above `tol · σ_max`, and at most `s` coefficients in
/// slices `K..half` exceed `tol` in modulus.
pub fn is_flost(x: &DenseTensor3, r: usize, k: usize, s: usize, tol: f64) -> Result<bool> {
    let dims = x.dims();
    let plan = SliceIndexPlan::new(dims.t, k)?;
    for l in plan.lowrank_range() {
        let sv = singular_values(&dft_slice(x, l)?)?;
        let top = sv.first().copied().unwrap_or(0.0);
        let rank = sv.iter().filter(|&&v| v > tol * top).count();
        if top > 0.0 && rank > r {
            return Ok(false);
        }
    }
    let mut nnz = 0;
    for l in plan.sparse_range() {
        nnz += dft_slice(x, l)?.iter().filter(|z| z.norm() > tol).count();
    }
    Ok(nnz <= s)
}

/// Bernoulli(`p`) mask with additive noise on the kept entries.
///
/// Mask and noise come from two independent ChaCha streams of the same seed.
pub fn sample_observations(x: &DenseTensor3, spec: &SamplingSpec) -> Result<ObservationSet> {
    if !(spec.p > 0.0 && spec.p <= 1.0) {
        return Err(Error::InvalidProbability(spec.p));
    }
    if !(spec.sigma.is_finite() && spec.sigma >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "noise level {} must be >= 0",
            spec.sigma
        )));
    }
    let dims = x.dims();
    let mut mask_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    mask_rng.set_stream(MASK_STREAM);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    noise_rng.set_stream(NOISE_STREAM);
    let half_width = 3f64.sqrt() * spec.sigma;

    let mut entries = Vec::new();
    for (flat, &v) in x.values().iter().enumerate() {
        if mask_rng.random::<f64>() >= spec.p {
            continue;
        }
        let noise = match spec.noise {
            NoiseKind::Gaussian => spec.sigma * noise_rng.sample::<f64, _>(StandardNormal),
            NoiseKind::Uniform => noise_rng.random_range(-1.0..=1.0) * half_width,
        };
        let (i, j, t) = dims.unravel(flat);
        entries.push(Observation {
            i,
            j,
            t,
            value: v + noise,
        });
    }
    ObservationSet::new(dims, entries, spec.p)
}
