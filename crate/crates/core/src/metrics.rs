//! Error summaries: RMSE over index sets, above empirical percentiles of the
//! truth, and over consecutive time chunks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::ObservationSet;
use crate::tensor::{DenseTensor3, Dims};

/// A subset of tensor positions, stored as sorted flat indices.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexSet {
    dims: Dims,
    label: String,
    members: Vec<usize>,
}

impl IndexSet {
    pub fn all(dims: Dims) -> Self {
        Self {
            dims,
            label: "all".into(),
            members: (0..dims.len()).collect(),
        }
    }

    /// The observed positions `Ω`.
    pub fn observed(obs: &ObservationSet) -> Self {
        Self::from_mask(obs.dims(), "train", &obs.mask(), true)
    }

    /// The complement `Ω^C`.
    pub fn missing(obs: &ObservationSet) -> Self {
        Self::from_mask(obs.dims(), "test", &obs.mask(), false)
    }

    pub fn explicit(dims: Dims, label: &str, indices: &[(usize, usize, usize)]) -> Result<Self> {
        let mut members = Vec::with_capacity(indices.len());
        for &(i, j, t) in indices {
            if !dims.contains(i, j, t) {
                return Err(Error::IndexOutOfRange { i, j, t });
            }
            members.push(dims.index(i, j, t));
        }
        members.sort_unstable();
        members.dedup();
        Ok(Self {
            dims,
            label: label.into(),
            members,
        })
    }

    fn from_mask(dims: Dims, label: &str, mask: &[bool], want: bool) -> Self {
        let members = mask
            .iter()
            .enumerate()
            .filter_map(|(flat, &m)| (m == want).then_some(flat))
            .collect();
        Self {
            dims,
            label: label.into(),
            members,
        }
    }

    pub fn with_label(mut self, label: &str) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }
}

/// RMSE over a labelled set. `value` is NaN (serialized as `null`) when the set
/// is empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseReport {
    pub label: String,
    pub count: usize,
    #[serde(deserialize_with = "nullable_f64")]
    pub value: f64,
}

fn nullable_f64<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

impl RmseReport {
    pub fn absent(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            count: 0,
            value: f64::NAN,
        }
    }

    pub fn is_absent(&self) -> bool {
        self.count == 0
    }
}

fn check_shapes(est: &DenseTensor3, truth: &DenseTensor3, delta: &IndexSet) -> Result<()> {
    if est.dims() != truth.dims() || delta.dims != truth.dims() {
        return Err(Error::InvalidDims(
            "estimate, truth and index set differ in shape".into(),
        ));
    }
    Ok(())
}

fn rmse_over(est: &[f64], truth: &[f64], indices: impl Iterator<Item = usize>) -> (f64, usize) {
    let mut sum = 0.0;
    let mut count = 0;
    for idx in indices {
        let d = est[idx] - truth[idx];
        sum += d * d;
        count += 1;
    }
    if count == 0 {
        (f64::NAN, 0)
    } else {
        ((sum / count as f64).sqrt(), count)
    }
}

/// `‖P_Δ(est - truth)‖_F / √|Δ|`.
pub fn rmse(est: &DenseTensor3, truth: &DenseTensor3, delta: &IndexSet) -> Result<RmseReport> {
    check_shapes(est, truth, delta)?;
    if delta.is_empty() {
        return Err(Error::EmptySet);
    }
    let (value, count) = rmse_over(est.values(), truth.values(), delta.members.iter().copied());
    Ok(RmseReport {
        label: delta.label.clone(),
        count,
        value,
    })
}

/// Nearest-rank empirical quantile of `sorted`; `q = 0` maps to `-∞` so the strict
/// `>` comparison keeps every entry.
fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let rank = (q * sorted.len() as f64).ceil() as usize;
    if rank == 0 {
        f64::NEG_INFINITY
    } else {
        sorted[rank.min(sorted.len()) - 1]
    }
}

/// RMSE over the entries of `delta` whose truth value exceeds the `q`-th
/// empirical percentile of the whole truth tensor, for each `q`.
pub fn percentile_rmse(
    est: &DenseTensor3,
    truth: &DenseTensor3,
    delta: &IndexSet,
    quantiles: &[f64],
) -> Result<Vec<RmseReport>> {
    check_shapes(est, truth, delta)?;
    if let Some(&q) = quantiles.iter().find(|q| !(0.0..1.0).contains(*q)) {
        return Err(Error::InvalidConfig(format!("quantile {q} outside [0, 1)")));
    }
    let mut sorted = truth.values().to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let tv = truth.values();
    Ok(quantiles
        .iter()
        .map(|&q| {
            let threshold = nearest_rank(&sorted, q);
            let label = format!("{}@q{}", delta.label, q);
            let selected = delta
                .members
                .iter()
                .copied()
                .filter(|&idx| tv[idx] > threshold);
            let (value, count) = rmse_over(est.values(), tv, selected);
            if count == 0 {
                RmseReport::absent(label)
            } else {
                RmseReport {
                    label,
                    count,
                    value,
                }
            }
        })
        .collect())
}

/// One report per window `[c·len, (c+1)·len)` of the time axis; the last window
/// may be short.
pub fn chunked_rmse(
    est: &DenseTensor3,
    truth: &DenseTensor3,
    delta: &IndexSet,
    chunk_len: usize,
) -> Result<Vec<RmseReport>> {
    check_shapes(est, truth, delta)?;
    if chunk_len == 0 {
        return Err(Error::InvalidConfig(
            "chunk length must be at least 1".into(),
        ));
    }
    let t = truth.dims().t;
    let chunks = t.div_ceil(chunk_len);
    let mut sums = vec![0.0; chunks];
    let mut counts = vec![0usize; chunks];
    for &idx in &delta.members {
        let c = (idx % t) / chunk_len;
        let d = est.values()[idx] - truth.values()[idx];
        sums[c] += d * d;
        counts[c] += 1;
    }
    Ok((0..chunks)
        .map(|c| {
            let label = format!("{}@chunk{}", delta.label, c);
            if counts[c] == 0 {
                RmseReport::absent(label)
            } else {
                RmseReport {
                    label,
                    count: counts[c],
                    value: (sums[c] / counts[c] as f64).sqrt(),
                }
            }
        })
        .collect())
}

/// Circularly shift each frame along the second mode: entry `(i, j, t)` moves to
/// `(i, (j + offsets[t]) mod N, t)`.
pub fn localtime_shift(x: &DenseTensor3, offsets: &[i64]) -> Result<DenseTensor3> {
    let dims = x.dims();
    if offsets.len() != dims.t {
        return Err(Error::InvalidConfig(format!(
            "{} offsets for {} frames",
            offsets.len(),
            dims.t
        )));
    }
    let n = dims.n as i64;
    let mut out = DenseTensor3::zeros(dims);
    for i in 0..dims.m {
        for j in 0..dims.n {
            for (t, &off) in offsets.iter().enumerate() {
                let dest = (j as i64 + off).rem_euclid(n) as usize;
                out.set(i, dest, t, x.get(i, j, t));
            }
        }
    }
    Ok(out)
}

/// Train/test error summary written by the `evaluate` command.
///
/// `train` is the observed set and `test` its complement. Each list starts with the
/// plain RMSE and continues with percentile reports and, if requested, per-chunk
/// reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub train: Vec<RmseReport>,
    pub test: Vec<RmseReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub parameter_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fit_seconds: Option<f64>,
}

impl EvaluationReport {
    pub fn compute(
        est: &DenseTensor3,
        truth: &DenseTensor3,
        obs: &ObservationSet,
        quantiles: &[f64],
        chunk_len: Option<usize>,
    ) -> Result<Self> {
        let summarize = |delta: IndexSet| -> Result<Vec<RmseReport>> {
            check_shapes(est, truth, &delta)?;
            let mut out = vec![if delta.is_empty() {
                RmseReport::absent(delta.label.clone())
            } else {
                rmse(est, truth, &delta)?
            }];
            out.extend(percentile_rmse(est, truth, &delta, quantiles)?);
            if let Some(len) = chunk_len {
                out.extend(chunked_rmse(est, truth, &delta, len)?);
            }
            Ok(out)
        };
        Ok(Self {
            train: summarize(IndexSet::observed(obs))?,
            test: summarize(IndexSet::missing(obs))?,
            parameter_count: None,
            fit_seconds: None,
        })
    }
}
