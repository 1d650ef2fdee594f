//! Tensor completion with Fourier low-rank and sparse structure.
//!
//! An `M x N x T` tensor is moved to the frequency domain along its time mode.
//! The first `K` frequency slices are modelled as low-rank matrices and the
//! remaining independent slices as a sparse block. Given Bernoulli-sampled noisy
//! entries, the estimator solves `K + 1` independent proximal problems in closed
//! form and transforms back.
//!
//! ```
//! use flost::{
//!     fit, generate_flost_truth, sample_observations, rmse, IndexSet, RegularizationConfig,
//!     SamplingSpec, SynthesisSpec, Dims,
//! };
//!
//! let dims = Dims::new(8, 8, 12).unwrap();
//! let truth = generate_flost_truth(&SynthesisSpec { dims, r: 2, k: 2, s: 20, seed: 1 }).unwrap();
//! let obs = sample_observations(&truth, &SamplingSpec::new(1.0, 0.0, 2)).unwrap();
//! let model = fit(&obs, &RegularizationConfig::uniform(2, 0.0, 0.0)).unwrap();
//! let est = model.reconstruct().unwrap();
//! assert!(rmse(&est, &truth, &IndexSet::all(dims)).unwrap().value < 1e-10);
//! ```

pub mod error;
pub mod estimator;
pub mod io;
pub mod metrics;
mod parallel;
pub mod prox;
pub mod synthesis;
pub mod tensor;
pub mod tuning;

pub use error::{Error, Result};
pub use estimator::{
    corollary_rate, error_bound, fit, objective, observed_slice, rescaled_projection,
    theorem_lambda_schedule, BoundReport, FlostModel, Observation, ObservationSet, PSource,
    RegularizationConfig, SpectralCache, TailEntry,
};
pub use metrics::{
    chunked_rmse, localtime_shift, percentile_rmse, rmse, EvaluationReport, IndexSet, RmseReport,
};
pub use prox::{
    complex_soft_threshold, singular_values, svt, svt_factors, threshold_stack, SvdFactors,
};
pub use synthesis::{
    flost_truncate, generate_flost_truth, is_flost, sample_observations, NoiseKind, SamplingSpec,
    SynthesisSpec,
};
pub use tensor::{
    conjugate_symmetrize, dft_slice, extract_slice, half_spectrum, mode3_dft, mode3_idft,
    ComplexMatrix, ComplexTensor3, DenseTensor3, Dims, SliceIndexPlan,
};
pub use tuning::{grid_search, log_grid, split_validation, GridRow, TuningResult, TuningSpec};
