use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use flost::io::{
    read_model, read_observations, read_tensor, write_model, write_observations, write_tensor,
    ModelFile,
};
use flost::{
    flost_truncate, generate_flost_truth, grid_search, log_grid, sample_observations,
    theorem_lambda_schedule, DenseTensor3, Dims, EvaluationReport, NoiseKind, ObservationSet,
    RegularizationConfig, SamplingSpec, SynthesisSpec, TuningResult, TuningSpec,
};
use serde::Serialize;

use crate::failure::Failure;
use crate::{
    EvaluateArgs, FitArgs, GenerateArgs, Noise, SampleArgs, ScheduleArgs, TruncateArgs, TuneArgs,
};

fn load_tensor(path: &Path) -> Result<DenseTensor3, Failure> {
    read_tensor(path).map_err(|e| Failure::from(e).context(path.display()))
}

fn load_observations(path: &Path, p: Option<f64>) -> Result<ObservationSet, Failure> {
    let obs = read_observations(path).map_err(|e| Failure::from(e).context(path.display()))?;
    match p {
        Some(p) => Ok(obs.with_p(p)?),
        None => Ok(obs),
    }
}

fn save_tensor(path: &Path, x: &DenseTensor3) -> Result<(), Failure> {
    write_tensor(path, x).map_err(|e| Failure::from(e).context(path.display()))
}

fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut w =
        BufWriter::new(File::create(path).map_err(|e| Failure::from(e).context(path.display()))?);
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| Failure::new(crate::failure::IO, e.to_string()).context(path.display()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn schedule(obs: &ObservationSet, k: usize, args: &ScheduleArgs) -> RegularizationConfig {
    let sigma_gamma = args.sigma_gamma.unwrap_or_else(|| obs.sup_norm());
    theorem_lambda_schedule(obs.dims(), obs.p(), sigma_gamma, args.c1, args.c2, k)
}

pub fn generate(a: GenerateArgs) -> Result<(), Failure> {
    let dims = Dims::new(a.m, a.n, a.t)?;
    let s = a
        .sparsity
        .unwrap_or_else(|| SynthesisSpec::default_sparsity(dims, a.k));
    let truth = generate_flost_truth(&SynthesisSpec {
        dims,
        r: a.rank,
        k: a.k,
        s,
        seed: a.seed,
    })?;
    save_tensor(&a.out, &truth)?;
    eprintln!(
        "generate: {}x{}x{} rank {} K {} s {} -> {}",
        a.m,
        a.n,
        a.t,
        a.rank,
        a.k,
        s,
        a.out.display()
    );
    Ok(())
}

pub fn truncate(a: TruncateArgs) -> Result<(), Failure> {
    let x = load_tensor(&a.input)?;
    let s = a
        .sparsity
        .unwrap_or_else(|| SynthesisSpec::default_sparsity(x.dims(), a.k));
    let out = flost_truncate(&x, a.rank, a.k, s)?;
    save_tensor(&a.out, &out)?;
    eprintln!(
        "truncate: kept {:.4} of the energy",
        out.frobenius_norm() / x.frobenius_norm().max(f64::MIN_POSITIVE)
    );
    Ok(())
}

pub fn sample(a: SampleArgs) -> Result<(), Failure> {
    let x = load_tensor(&a.input)?;
    let noise = match a.noise {
        Noise::Gaussian => NoiseKind::Gaussian,
        Noise::Uniform => NoiseKind::Uniform,
    };
    let obs = sample_observations(
        &x,
        &SamplingSpec {
            p: a.p,
            sigma: a.sigma,
            seed: a.seed,
            noise,
        },
    )?;
    write_observations(&a.out, &obs).map_err(|e| Failure::from(e).context(a.out.display()))?;
    eprintln!(
        "sample: {} of {} entries observed",
        obs.len(),
        x.dims().len()
    );
    Ok(())
}

pub fn fit(a: FitArgs) -> Result<(), Failure> {
    let obs = load_observations(&a.obs, a.p)?;
    let cfg = match (a.lambda1, a.lambda2) {
        (Some(l1), Some(l2)) => {
            let base = schedule(&obs, a.k, &a.schedule);
            RegularizationConfig {
                lambda1: vec![l1; a.k],
                lambda2: l2,
                ..base
            }
        }
        _ => schedule(&obs, a.k, &a.schedule).scaled(
            a.lambda1_scale.unwrap_or(1.0),
            a.lambda2_scale.unwrap_or(1.0),
        ),
    };
    let start = Instant::now();
    let model = flost::fit(&obs, &cfg)?;
    let estimate = model.reconstruct()?;
    let seconds = start.elapsed().as_secs_f64();
    save_tensor(&a.out_tensor, &estimate)?;
    eprintln!(
        "fit: {seconds:.3} s, ranks {:?}, {} sparse coefficients, {} parameters",
        model.ranks(),
        model.tail_nnz(),
        model.parameter_count()
    );
    if let Some(path) = &a.out_model {
        write_model(path, &ModelFile::new(model, Some(seconds)))
            .map_err(|e| Failure::from(e).context(path.display()))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct TuneReport<'a> {
    base: &'a RegularizationConfig,
    holdout_fraction: f64,
    seed: u64,
    #[serde(flatten)]
    result: &'a TuningResult,
}

pub fn tune(a: TuneArgs) -> Result<(), Failure> {
    let obs = load_observations(&a.obs, a.p)?;
    let base = schedule(&obs, a.k, &a.schedule);
    let grid = log_grid(a.grid_log_min, a.grid_log_max, a.grid_steps);
    let spec = TuningSpec {
        holdout_fraction: a.holdout,
        grid,
        seed: a.seed,
    };
    let result = grid_search(&obs, &base, &spec)?;
    save_json(
        &a.report,
        &TuneReport {
            base: &base,
            holdout_fraction: a.holdout,
            seed: a.seed,
            result: &result,
        },
    )?;
    if let Some(path) = &a.table {
        std::fs::write(path, result.to_csv())
            .map_err(|e| Failure::from(e).context(path.display()))?;
    }
    eprintln!(
        "tune: best validation RMSE {:.6}",
        result.best_row.validation_rmse
    );
    println!(
        "--lambda1-scale {} --lambda2-scale {}",
        result.best_row.scale1, result.best_row.scale2
    );
    Ok(())
}

pub fn evaluate(a: EvaluateArgs) -> Result<(), Failure> {
    let estimate = load_tensor(&a.estimate)?;
    let truth = load_tensor(&a.truth)?;
    let obs = load_observations(&a.obs, None)?;
    if estimate.dims() != truth.dims() || obs.dims() != truth.dims() {
        return Err(Failure::validation(format!(
            "inconsistent dims: estimate {:?}, truth {:?}, observations {:?}",
            estimate.dims(),
            truth.dims(),
            obs.dims()
        )));
    }
    let mut report = EvaluationReport::compute(&estimate, &truth, &obs, &a.quantiles, a.chunk_len)?;
    if let Some(path) = &a.model {
        let model = read_model(path).map_err(|e| Failure::from(e).context(path.display()))?;
        report.parameter_count = Some(model.parameter_count);
        report.fit_seconds = model.fit_seconds;
    }
    save_json(&a.report, &report)?;
    eprintln!(
        "evaluate: train RMSE {:.6}, test RMSE {:.6}",
        report.train[0].value, report.test[0].value
    );
    Ok(())
}
