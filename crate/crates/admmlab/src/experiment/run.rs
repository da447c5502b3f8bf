//! Experiment execution: parallel trials, one matched prediction, CSV files.

use std::fs;
use std::path::Path;

use rayon::prelude::*;

use super::{
    CdfRow, CdfTable, ExperimentError, ExperimentSpec, ResultRow, ResultTable, Source,
};
use crate::model::{self, generate_instance};
use crate::prediction::{predict_trajectory, PredictionConfig, PredictionTrajectory};
use crate::rng;
use crate::solver::{self, AdmmConfig, Trajectory};

/// Everything one experiment produces, before and after the files.
#[derive(Debug, Clone)]
pub struct ExperimentArtifacts {
    pub table: ResultTable,
    pub cdf: Option<CdfTable>,
    /// Exact two-sample KS distance between the pooled empirical estimates
    /// and the particle sample, per requested iteration. The CSV carries
    /// the gridded curves; this is computed from the raw samples.
    pub ks_exact: Vec<(usize, f64)>,
}

/// Run `trials` independent realizations through ADMM plus one prediction
/// trajectory, aggregate per-iteration metrics, and (optionally) write
/// `results.csv` / `cdf.csv` under `out_dir`.
///
/// On failure, whatever aggregated so far is flushed with a `failed` marker
/// row before the error is returned.
pub fn run_experiment(
    spec: &ExperimentSpec,
    out_dir: Option<&Path>,
) -> Result<ExperimentArtifacts, ExperimentError> {
    spec.validate()?;
    let prior = spec.prior();
    let reg = spec.regularizer();
    let lambda = spec.solver_lambda();
    let delta = spec.ratio();
    let config = AdmmConfig {
        rho: spec.rho,
        lambda,
        max_iter: spec.iters,
        record_estimates: spec.want_cdf,
    };
    let pred_config = PredictionConfig {
        particles: spec.particles,
        seed: spec.seed,
        snapshot_iters: spec.cdf_iters.clone(),
        ..PredictionConfig::default()
    };

    // The prediction is sequential in k; it runs concurrently with the pool
    // of independent trials.
    let (trial_results, pred_result) = rayon::join(
        || {
            (0..spec.trials as u64)
                .into_par_iter()
                .map(|t| {
                    let mut trial_rng = rng::trial_rng(spec.seed, t);
                    let instance = generate_instance(
                        prior,
                        spec.matrix,
                        spec.n,
                        delta,
                        spec.sigma_v2,
                        &mut trial_rng,
                    )?;
                    solver::run(&instance, &config, reg).map_err(ExperimentError::from)
                })
                .collect::<Vec<Result<Trajectory, ExperimentError>>>()
        },
        || {
            predict_trajectory(
                prior,
                reg,
                lambda,
                delta,
                spec.sigma_v2,
                spec.rho,
                spec.iters,
                &pred_config,
            )
        },
    );

    let mut first_error = None;
    let mut trajectories = Vec::with_capacity(trial_results.len());
    for r in trial_results {
        match r {
            Ok(t) => trajectories.push(t),
            Err(e) if first_error.is_none() => first_error = Some(e),
            Err(_) => {}
        }
    }
    let prediction = match pred_result {
        Ok(p) => Some(p),
        Err(e) => {
            if first_error.is_none() {
                first_error = Some(e.into());
            }
            None
        }
    };

    let mut table = ResultTable::default();
    aggregate_empirical(spec, &trajectories, &mut table);
    if let Some(pred) = &prediction {
        aggregate_prediction(spec, pred, &mut table);
    }

    if let Some(err) = first_error {
        table.rows.push(ResultRow::empty(Source::Failed, 0));
        if let Some(dir) = out_dir {
            fs::create_dir_all(dir)?;
            fs::write(dir.join("results.csv"), table.to_csv())?;
        }
        return Err(err);
    }

    let prediction = prediction.expect("no error recorded");
    let (cdf, ks_exact) = if spec.want_cdf {
        let (c, k) = build_cdf(spec, &trajectories, &prediction)?;
        (Some(c), k)
    } else {
        (None, Vec::new())
    };

    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("results.csv"), table.to_csv())?;
        if let Some(cdf) = &cdf {
            fs::write(dir.join("cdf.csv"), cdf.to_csv())?;
        }
    }

    Ok(ExperimentArtifacts {
        table,
        cdf,
        ks_exact,
    })
}

/// One experiment per value of the swept key, sharing the base seed so only
/// the swept parameter varies. Results land in `<out>/<param>=<value>/`.
pub fn sweep(
    base: &ExperimentSpec,
    param: &str,
    values: &[String],
    out_dir: Option<&Path>,
) -> Result<Vec<ExperimentArtifacts>, ExperimentError> {
    let mut artifacts = Vec::with_capacity(values.len());
    for value in values {
        let mut spec = base.clone();
        spec.set(param, value)?;
        spec.validate()?;
        let sub = out_dir.map(|d| d.join(format!("{param}={value}")));
        artifacts.push(run_experiment(&spec, sub.as_deref())?);
    }
    Ok(artifacts)
}

fn aggregate_empirical(spec: &ExperimentSpec, trajectories: &[Trajectory], table: &mut ResultTable) {
    if trajectories.is_empty() {
        return;
    }
    let trials = trajectories.len();
    for i in 0..spec.iters {
        let mse: Vec<f64> = trajectories.iter().map(|t| t.records[i].mse).collect();
        let (mse_mean, mse_stderr) = mean_stderr(&mse);
        let (ser_mean, ser_stderr) = if spec.want_ser {
            let ser: Vec<f64> = trajectories
                .iter()
                .filter_map(|t| t.records[i].ser)
                .collect();
            if ser.len() == trials {
                let (m, s) = mean_stderr(&ser);
                (Some(m), Some(s))
            } else {
                (None, None)
            }
        } else {
            (None, None)
        };
        table.rows.push(ResultRow {
            source: Source::Empirical,
            k: i + 1,
            mse_mean: Some(mse_mean),
            mse_stderr: Some(mse_stderr),
            ser_mean,
            ser_stderr,
            alpha_star: None,
            beta_star: None,
            particles: None,
            trials: Some(trials),
        });
    }
}

fn aggregate_prediction(
    spec: &ExperimentSpec,
    prediction: &PredictionTrajectory,
    table: &mut ResultTable,
) {
    for r in &prediction.records {
        table.rows.push(ResultRow {
            source: Source::Prediction,
            k: r.k,
            mse_mean: Some(r.mse_corollary),
            mse_stderr: None,
            ser_mean: if spec.want_ser { r.ser } else { None },
            ser_stderr: None,
            alpha_star: Some(r.alpha),
            beta_star: Some(r.beta),
            particles: Some(spec.particles),
            trials: None,
        });
    }
}

fn build_cdf(
    spec: &ExperimentSpec,
    trajectories: &[Trajectory],
    prediction: &PredictionTrajectory,
) -> Result<(CdfTable, Vec<(usize, f64)>), ExperimentError> {
    let grid = spec.cdf_grid.expect("validated").points();
    let mut rows = Vec::new();
    let mut ks_exact = Vec::new();
    for &k in &spec.cdf_iters {
        let mut pooled = Vec::with_capacity(trajectories.len() * spec.n);
        for t in trajectories {
            pooled.extend_from_slice(
                t.records[k - 1]
                    .estimate
                    .as_ref()
                    .expect("record_estimates was on"),
            );
        }
        let particles = prediction.records[k - 1]
            .snapshot
            .as_ref()
            .expect("snapshot_iters covered cdf_iters");
        let cdf_emp = model::empirical_cdf(&pooled, &grid)?;
        let cdf_pred = model::empirical_cdf(particles, &grid)?;
        ks_exact.push((k, model::ks_distance(&pooled, particles)?));
        for ((g, e), p) in grid.iter().zip(&cdf_emp).zip(&cdf_pred) {
            rows.push(CdfRow {
                k,
                grid_point: *g,
                cdf_empirical: *e,
                cdf_predicted: *p,
            });
        }
    }
    Ok((CdfTable { rows }, ks_exact))
}

fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}
