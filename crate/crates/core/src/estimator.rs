//! The completion estimator.
//!
//! Observed entries are rescaled by `1/p`, moved to the frequency domain, and each
//! of the `K + 1` subproblems is solved in closed form: singular value
//! soft-thresholding on the `K` low-frequency slices and entrywise complex
//! soft-thresholding on the high-frequency block. The subproblems share no state,
//! so they run as an ordered parallel map and the result does not depend on the
//! number of worker threads.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel;
use crate::prox::{complex_soft_threshold, singular_values, SvdFactors};
use crate::tensor::{
    conjugate_symmetrize, dft_row_table, dft_slice, half_spectrum, mode3_idft, ComplexMatrix,
    DenseTensor3, Dims, SliceIndexPlan,
};

/// Where the sampling probability of an [`ObservationSet`] came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PSource {
    Given,
    Estimated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub i: usize,
    pub j: usize,
    pub t: usize,
    pub value: f64,
}

/// Sparse set of observed entries `P_Ω(Y)` together with the sampling rate.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    dims: Dims,
    entries: Vec<Observation>,
    p: f64,
    p_source: PSource,
}

impl ObservationSet {
    /// Observations drawn with a known Bernoulli rate `p`.
    pub fn new(dims: Dims, entries: Vec<Observation>, p: f64) -> Result<Self> {
        Self::with_source(dims, entries, p, PSource::Given)
    }

    /// Observations whose rate is estimated as `|Ω| / (M N T)`.
    pub fn with_estimated_p(dims: Dims, entries: Vec<Observation>) -> Result<Self> {
        let p = estimate_p(dims, entries.len());
        Self::with_source(dims, entries, p, PSource::Estimated)
    }

    pub fn with_source(
        dims: Dims,
        entries: Vec<Observation>,
        p: f64,
        p_source: PSource,
    ) -> Result<Self> {
        check_probability(p)?;
        let mut seen = vec![false; dims.len()];
        for e in &entries {
            if !dims.contains(e.i, e.j, e.t) {
                return Err(Error::IndexOutOfRange {
                    i: e.i,
                    j: e.j,
                    t: e.t,
                });
            }
            if !e.value.is_finite() {
                return Err(Error::NonFinite(dims.index(e.i, e.j, e.t)));
            }
            let flat = dims.index(e.i, e.j, e.t);
            if std::mem::replace(&mut seen[flat], true) {
                return Err(Error::DuplicateIndex {
                    i: e.i,
                    j: e.j,
                    t: e.t,
                });
            }
        }
        Ok(Self {
            dims,
            entries,
            p,
            p_source,
        })
    }

    /// Every entry of `x`, as if sampled with `p = 1`.
    pub fn full(x: &DenseTensor3) -> Self {
        let dims = x.dims();
        let entries = (0..dims.len())
            .map(|flat| {
                let (i, j, t) = dims.unravel(flat);
                Observation {
                    i,
                    j,
                    t,
                    value: x.values()[flat],
                }
            })
            .collect();
        Self {
            dims,
            entries,
            p: 1.0,
            p_source: PSource::Given,
        }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn entries(&self) -> &[Observation] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The sampling probability used for rescaling.
    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn p_source(&self) -> PSource {
        self.p_source
    }

    /// Replace the sampling probability, marking it as given.
    pub fn with_p(mut self, p: f64) -> Result<Self> {
        check_probability(p)?;
        self.p = p;
        self.p_source = PSource::Given;
        Ok(self)
    }

    /// Largest observed magnitude, a data-driven stand-in for `σ ∨ γ`.
    pub fn sup_norm(&self) -> f64 {
        self.entries
            .iter()
            .fold(0.0, |acc, e| acc.max(e.value.abs()))
    }

    /// Membership mask over flat indices.
    pub fn mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.dims.len()];
        for e in &self.entries {
            mask[self.dims.index(e.i, e.j, e.t)] = true;
        }
        mask
    }
}

pub(crate) fn estimate_p(dims: Dims, count: usize) -> f64 {
    if count == 0 {
        1.0
    } else {
        count as f64 / dims.len() as f64
    }
}

fn check_probability(p: f64) -> Result<()> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidProbability(p))
    }
}

/// `p⁻¹ P_Ω(Y)` as a dense tensor.
pub fn rescaled_projection(obs: &ObservationSet) -> DenseTensor3 {
    let mut out = DenseTensor3::zeros(obs.dims);
    let inv_p = 1.0 / obs.p;
    for e in &obs.entries {
        out.set(e.i, e.j, e.t, e.value * inv_p);
    }
    out
}

/// Frequency slice `l` of `p⁻¹ P_Ω(Y)`, accumulated straight from the sparse
/// entries in `O(|Ω|)`.
pub fn observed_slice(obs: &ObservationSet, l: usize) -> Result<ComplexMatrix> {
    let dims = obs.dims;
    if l >= dims.t {
        return Err(Error::SliceOutOfRange {
            index: l,
            count: dims.t,
        });
    }
    let table = dft_row_table(dims.t);
    let inv_p = 1.0 / obs.p;
    let mut out = DMatrix::zeros(dims.m, dims.n);
    for e in &obs.entries {
        out[(e.i, e.j)] += table[(l * e.t) % dims.t] * (e.value * inv_p);
    }
    Ok(out)
}

/// Thresholds for the `K` low-rank slices and the sparse block, plus the
/// constants that generated them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularizationConfig {
    pub k: usize,
    pub lambda1: Vec<f64>,
    pub lambda2: f64,
    pub c1: f64,
    pub c2: f64,
    pub sigma_gamma: f64,
}

impl RegularizationConfig {
    /// Same `λ1` on every low-rank slice; schedule constants left at 1.
    pub fn uniform(k: usize, lambda1: f64, lambda2: f64) -> Self {
        Self {
            k,
            lambda1: vec![lambda1; k],
            lambda2,
            c1: 1.0,
            c2: 1.0,
            sigma_gamma: 1.0,
        }
    }

    /// Multiply every `λ1` by `scale1` and `λ2` by `scale2`.
    pub fn scaled(&self, scale1: f64, scale2: f64) -> Self {
        Self {
            lambda1: self.lambda1.iter().map(|l| l * scale1).collect(),
            lambda2: self.lambda2 * scale2,
            ..self.clone()
        }
    }

    pub fn plan(&self, t: usize) -> Result<SliceIndexPlan> {
        SliceIndexPlan::new(t, self.k)
    }

    pub fn validate(&self, dims: Dims) -> Result<SliceIndexPlan> {
        let plan = self.plan(dims.t)?;
        if self.lambda1.len() != self.k {
            return Err(Error::InvalidConfig(format!(
                "{} low-rank thresholds supplied for K = {}",
                self.lambda1.len(),
                self.k
            )));
        }
        let bad = |v: f64| !(v.is_finite() && v >= 0.0);
        if self.lambda1.iter().any(|&l| bad(l)) || bad(self.lambda2) {
            return Err(Error::InvalidConfig(
                "thresholds must be finite and nonnegative".into(),
            ));
        }
        Ok(plan)
    }
}

/// Thresholds at the smallest values allowed by the high-probability error bound:
///
/// `λ1 = C1 (σ∨γ) (√((M∨N) ln(M∨N)) / √p + √(ln³(M∨N)) / (p √T))`
///
/// `λ2 = C2 (σ∨γ) (√(ln(M∨N∨T)) / √p + ln(M∨N∨T) / (p √T))`
pub fn theorem_lambda_schedule(
    dims: Dims,
    p: f64,
    sigma_gamma: f64,
    c1: f64,
    c2: f64,
    k: usize,
) -> RegularizationConfig {
    let mn = dims.m.max(dims.n) as f64;
    let mnt = dims.m.max(dims.n).max(dims.t) as f64;
    let sqrt_t = (dims.t as f64).sqrt();
    let log_mn = mn.ln();
    let log_mnt = mnt.ln();
    let lambda1 =
        c1 * sigma_gamma * ((mn * log_mn).sqrt() / p.sqrt() + log_mn.powi(3).sqrt() / (p * sqrt_t));
    let lambda2 = c2 * sigma_gamma * (log_mnt.sqrt() / p.sqrt() + log_mnt / (p * sqrt_t));
    RegularizationConfig {
        k,
        lambda1: vec![lambda1; k],
        lambda2,
        c1,
        c2,
        sigma_gamma,
    }
}

/// One nonzero high-frequency coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEntry {
    pub l: usize,
    pub i: usize,
    pub j: usize,
    pub value: Complex64,
}

/// Fitted estimator in compressed frequency-domain form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlostModel {
    pub dims: Dims,
    pub k: usize,
    /// Shrunken factors of slices `0..K`.
    pub lowrank: Vec<SvdFactors>,
    /// Nonzero coefficients of slices `K..half`, ordered by `(l, i, j)`.
    pub tail: Vec<TailEntry>,
    pub config: RegularizationConfig,
    /// Sampling rate used for the `1/p` rescaling.
    pub p: f64,
}

impl FlostModel {
    pub fn ranks(&self) -> Vec<usize> {
        self.lowrank.iter().map(SvdFactors::rank).collect()
    }

    pub fn tail_nnz(&self) -> usize {
        self.tail.len()
    }

    /// `Σ_l r_l (M + N + 1) + 2 nnz(tail)`.
    pub fn parameter_count(&self) -> usize {
        let per_rank = self.dims.m + self.dims.n + 1;
        self.ranks().iter().map(|r| r * per_rank).sum::<usize>() + 2 * self.tail_nnz()
    }

    /// Dense frequency slices `0..half`.
    pub fn frequency_slices(&self) -> Vec<ComplexMatrix> {
        let Dims { m, n, .. } = self.dims;
        let mut slices: Vec<ComplexMatrix> =
            self.lowrank.iter().map(SvdFactors::to_matrix).collect();
        slices.extend((self.k..self.dims.half()).map(|_| DMatrix::zeros(m, n)));
        for e in &self.tail {
            slices[e.l][(e.i, e.j)] = e.value;
        }
        slices
    }

    /// Back to the time domain: mirror the half spectrum and invert the DFT.
    pub fn reconstruct(&self) -> Result<DenseTensor3> {
        let stack = conjugate_symmetrize(&self.frequency_slices(), self.dims.t)?;
        mode3_idft(&stack)
    }
}

/// Half spectrum of `p⁻¹ P_Ω(Y)` with the low-rank slices already decomposed.
///
/// Building this once and calling [`SpectralCache::model`] for several threshold
/// settings gives exactly the models [`fit`] would return for each of them.
#[derive(Debug, Clone)]
pub struct SpectralCache {
    dims: Dims,
    k: usize,
    p: f64,
    lowrank: Vec<SvdFactors>,
    tail: Vec<ComplexMatrix>,
}

impl SpectralCache {
    pub fn build(obs: &ObservationSet, k: usize) -> Result<Self> {
        let dims = obs.dims;
        let plan = SliceIndexPlan::new(dims.t, k)?;
        let mut spectrum = half_spectrum(&rescaled_projection(obs));
        let tail = spectrum.split_off(plan.k);
        let lowrank = parallel::map_range(plan.k, |l| {
            SvdFactors::decompose(&spectrum[l]).map_err(|e| match e {
                Error::SvdFailure { reason, .. } => Error::SvdFailure { slice: l, reason },
                Error::NonFinite(_) => Error::SvdFailure {
                    slice: l,
                    reason: e.to_string(),
                },
                other => other,
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dims,
            k,
            p: obs.p,
            lowrank,
            tail,
        })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Unshrunk singular values of low-rank slice `l`.
    pub fn spectrum(&self, l: usize) -> &[f64] {
        &self.lowrank[l].sigma
    }

    /// Raw (unthresholded) high-frequency slices `K..half`.
    pub fn tail_slices(&self) -> &[ComplexMatrix] {
        &self.tail
    }

    pub fn model(&self, cfg: &RegularizationConfig) -> Result<FlostModel> {
        if cfg.k != self.k {
            return Err(Error::InvalidConfig(format!(
                "config has K = {} but the cache was built for K = {}",
                cfg.k, self.k
            )));
        }
        cfg.validate(self.dims)?;
        let lowrank = parallel::map_range(self.k, |l| self.lowrank[l].shrink(cfg.lambda1[l]));
        let tail_slices = parallel::map_range(self.tail.len(), |offset| {
            let l = self.k + offset;
            let slice = &self.tail[offset];
            let mut entries = Vec::new();
            for i in 0..self.dims.m {
                for j in 0..self.dims.n {
                    let value = complex_soft_threshold(slice[(i, j)], cfg.lambda2);
                    if value.re != 0.0 || value.im != 0.0 {
                        entries.push(TailEntry { l, i, j, value });
                    }
                }
            }
            entries
        });
        Ok(FlostModel {
            dims: self.dims,
            k: self.k,
            lowrank,
            tail: tail_slices.into_iter().flatten().collect(),
            config: cfg.clone(),
            p: self.p,
        })
    }
}

/// Solve all `K + 1` frequency subproblems for the given thresholds.
pub fn fit(obs: &ObservationSet, cfg: &RegularizationConfig) -> Result<FlostModel> {
    cfg.validate(obs.dims)?;
    SpectralCache::build(obs, cfg.k)?.model(cfg)
}

/// Right-hand side of the squared-error bound, `16 (Σ_l λ²_{1,l} r_l + λ2² s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub bound_value: f64,
    /// `16 λ²_{1,l} r_l` per low-rank slice.
    pub lowrank_terms: Vec<f64>,
    /// `16 λ2² s`.
    pub sparse_term: f64,
}

pub fn error_bound(cfg: &RegularizationConfig, ranks: &[usize], s: usize) -> Result<BoundReport> {
    if ranks.len() != cfg.lambda1.len() {
        return Err(Error::InvalidConfig(format!(
            "{} ranks for {} low-rank thresholds",
            ranks.len(),
            cfg.lambda1.len()
        )));
    }
    let lowrank_terms: Vec<f64> = cfg
        .lambda1
        .iter()
        .zip(ranks)
        .map(|(l, &r)| 16.0 * l * l * r as f64)
        .collect();
    let sparse_term = 16.0 * cfg.lambda2 * cfg.lambda2 * s as f64;
    Ok(BoundReport {
        bound_value: lowrank_terms.iter().sum::<f64>() + sparse_term,
        lowrank_terms,
        sparse_term,
    })
}

/// Per-entry error rate `(Σ_l (M∨N) r_l + s) (σ∨γ)² / n` from the sample
/// complexity regime, without its logarithmic constant. `n` is the expected
/// number of observations `p M N T`.
pub fn corollary_rate(dims: Dims, ranks: &[usize], s: usize, n: f64, sigma_gamma: f64) -> f64 {
    let mn = dims.m.max(dims.n) as f64;
    let dof = ranks.iter().map(|&r| mn * r as f64).sum::<f64>() + s as f64;
    dof / n * sigma_gamma * sigma_gamma
}

/// Value of the penalized objective
/// `½‖X - p⁻¹P_Ω(Y)‖²_F + Σ_l λ_{1,l} ‖X ×₃ f_l‖_* + λ2 ‖X ×₃ F_1‖_1`.
pub fn objective(
    x: &DenseTensor3,
    obs: &ObservationSet,
    cfg: &RegularizationConfig,
) -> Result<f64> {
    let plan = cfg.validate(obs.dims)?;
    if x.dims() != obs.dims {
        return Err(Error::InvalidDims(
            "estimate and observations differ in shape".into(),
        ));
    }
    let fidelity = 0.5 * x.distance(&rescaled_projection(obs)).powi(2);
    let mut penalty = 0.0;
    for l in plan.lowrank_range() {
        let slice = dft_slice(x, l)?;
        penalty += cfg.lambda1[l] * singular_values(&slice)?.iter().sum::<f64>();
    }
    for l in plan.sparse_range() {
        let slice = dft_slice(x, l)?;
        penalty += cfg.lambda2 * slice.iter().map(|z| z.re.abs() + z.im.abs()).sum::<f64>();
    }
    Ok(fidelity + penalty)
}
