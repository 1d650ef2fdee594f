//! Threshold selection by grid search on a held-out slice of the observations.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{estimate_p, ObservationSet, PSource, RegularizationConfig, SpectralCache};
use crate::parallel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningSpec {
    pub holdout_fraction: f64,
    /// `(scale1, scale2)` multipliers for `λ1` and `λ2`.
    pub grid: Vec<(f64, f64)>,
    pub seed: u64,
}

impl TuningSpec {
    pub fn new(grid: Vec<(f64, f64)>, seed: u64) -> Self {
        Self {
            holdout_fraction: 0.1,
            grid,
            seed,
        }
    }
}

/// Cartesian product of `steps` base-10 log-spaced multipliers in
/// `[10^log_min, 10^log_max]` for each of the two scales.
pub fn log_grid(log_min: f64, log_max: f64, steps: usize) -> Vec<(f64, f64)> {
    let axis: Vec<f64> = match steps {
        0 => vec![],
        1 => vec![10f64.powf(log_min)],
        _ => (0..steps)
            .map(|k| 10f64.powf(log_min + (log_max - log_min) * k as f64 / (steps - 1) as f64))
            .collect(),
    };
    axis.iter()
        .flat_map(|&a| axis.iter().map(move |&b| (a, b)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub scale1: f64,
    pub scale2: f64,
    pub validation_rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningResult {
    pub best: RegularizationConfig,
    pub best_row: GridRow,
    pub table: Vec<GridRow>,
}

impl TuningResult {
    /// `scale1,scale2,validation_rmse` with one row per grid point.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("scale1,scale2,validation_rmse\n");
        for row in &self.table {
            out.push_str(&format!(
                "{},{},{}\n",
                row.scale1, row.scale2, row.validation_rmse
            ));
        }
        out
    }
}

/// Randomly move `round(fraction · |Ω|)` entries into a validation set.
///
/// Both parts keep the original entry order. With a given `p`, the training part
/// is a Bernoulli sample at rate `p (1 - fraction)` and is labelled as such.
pub fn split_validation(
    obs: &ObservationSet,
    fraction: f64,
    seed: u64,
) -> Result<(ObservationSet, ObservationSet)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "holdout fraction {fraction} outside (0, 1)"
        )));
    }
    let n = obs.len();
    let n_val = (fraction * n as f64).round() as usize;
    if n_val == 0 || n_val >= n {
        return Err(Error::TooFewEntries(n));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut is_val = vec![false; n];
    for &idx in &order[..n_val] {
        is_val[idx] = true;
    }
    let (mut train, mut val) = (Vec::with_capacity(n - n_val), Vec::with_capacity(n_val));
    for (e, &v) in obs.entries().iter().zip(&is_val) {
        if v {
            val.push(*e);
        } else {
            train.push(*e);
        }
    }
    let dims = obs.dims();
    let (p_train, p_val) = match obs.p_source() {
        PSource::Given => (obs.p() * (1.0 - fraction), obs.p() * fraction),
        PSource::Estimated => (estimate_p(dims, train.len()), estimate_p(dims, val.len())),
    };
    Ok((
        ObservationSet::with_source(dims, train, p_train, obs.p_source())?,
        ObservationSet::with_source(dims, val, p_val, obs.p_source())?,
    ))
}

/// Fit on the training part for each grid point and score the reconstruction
/// against the held-out (noisy) observations. Ties go to the smallest
/// `(scale1, scale2)`.
pub fn grid_search(
    obs: &ObservationSet,
    base: &RegularizationConfig,
    spec: &TuningSpec,
) -> Result<TuningResult> {
    if spec.grid.is_empty() {
        return Err(Error::InvalidConfig("empty tuning grid".into()));
    }
    base.validate(obs.dims())?;
    let (train, val) = split_validation(obs, spec.holdout_fraction, spec.seed)?;
    let cache = SpectralCache::build(&train, base.k)?;
    let dims = obs.dims();

    let scored = parallel::map_range(spec.grid.len(), |g| {
        let (scale1, scale2) = spec.grid[g];
        let attach = |e: Error| Error::GridPoint {
            scale1,
            scale2,
            source: Box::new(e),
        };
        let est = cache
            .model(&base.scaled(scale1, scale2))
            .and_then(|m| m.reconstruct());
        let est = est.map_err(attach)?;
        let sq: f64 = val
            .entries()
            .iter()
            .map(|e| {
                let d = est.values()[dims.index(e.i, e.j, e.t)] - e.value;
                d * d
            })
            .sum();
        Ok(GridRow {
            scale1,
            scale2,
            validation_rmse: (sq / val.len() as f64).sqrt(),
        })
    });
    let table = scored.into_iter().collect::<Result<Vec<_>>>()?;

    let best_row = *table
        .iter()
        .min_by(|a, b| {
            a.validation_rmse
                .total_cmp(&b.validation_rmse)
                .then(a.scale1.total_cmp(&b.scale1))
                .then(a.scale2.total_cmp(&b.scale2))
        })
        .expect("grid is nonempty");
    Ok(TuningResult {
        best: base.scaled(best_row.scale1, best_row.scale2),
        best_row,
        table,
    })
}
