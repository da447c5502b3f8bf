//! Thin CLI over the experiment harness: emit spec templates, run cells,
//! sweep a parameter, and compare results against tolerances.
//!
//! Exit codes: 0 success/pass, 1 error, 2 tolerance failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use admmlab::experiment::{
    compare_report, run_experiment, sweep, CdfTable, ExperimentSpec, ResultTable, Scenario,
    Source, Tolerances,
};

#[derive(Parser)]
#[command(name = "admmlab", version, about = "ADMM compressed-sensing lab: empirical runs vs state-evolution prediction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioArg {
    SparseL1,
    BinaryBox,
}

impl From<ScenarioArg> for Scenario {
    fn from(s: ScenarioArg) -> Scenario {
        match s {
            ScenarioArg::SparseL1 => Scenario::SparseL1,
            ScenarioArg::BinaryBox => Scenario::BinaryBox,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print a commented experiment spec template (or write it to a file).
    Gen {
        #[arg(long, value_enum, default_value = "sparse-l1")]
        scenario: ScenarioArg,
        /// Write the template here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one experiment cell and write results.csv (and cdf.csv).
    Run {
        #[arg(long)]
        spec: PathBuf,
        /// Master seed; overrides the spec file.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (env ADMMLAB_OUT, default `.`).
        #[arg(long, env = "ADMMLAB_OUT", default_value = ".")]
        out: PathBuf,
        /// Worker threads for the trial pool (default: all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Spec override `key=value`; repeatable.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Run one experiment per value of a swept spec key.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        /// Spec key to sweep (e.g. rho, delta).
        #[arg(long)]
        param: String,
        /// Comma-separated values, one experiment each.
        #[arg(long, value_delimiter = ',')]
        values: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, env = "ADMMLAB_OUT", default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Check empirical-vs-prediction agreement of a written results table.
    Compare {
        /// Path to results.csv (default: <out>/results.csv).
        #[arg(long)]
        table: Option<PathBuf>,
        /// Path to cdf.csv (default: <out>/cdf.csv when present).
        #[arg(long)]
        cdf: Option<PathBuf>,
        #[arg(long, env = "ADMMLAB_OUT", default_value = ".")]
        out: PathBuf,
        /// MSE agreement tolerance in dB.
        #[arg(long, default_value_t = 1.0)]
        mse_db: f64,
        /// SER agreement tolerance, absolute.
        #[arg(long, default_value_t = 0.01)]
        ser_abs: f64,
        /// Gridded KS-distance tolerance.
        #[arg(long, default_value_t = 0.05)]
        ks: f64,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Gen { scenario, out } => {
            let text = ExperimentSpec::template(scenario.into());
            match out {
                Some(path) => {
                    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
                    println!("wrote {}", path.display());
                }
                None => print!("{text}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Run {
            spec,
            seed,
            out,
            workers,
            overrides,
        } => {
            configure_workers(workers)?;
            let spec = load_spec(&spec, seed, &overrides)?;
            let artifacts = run_experiment(&spec, Some(&out))?;
            print_summary(&artifacts.table);
            for (k, d) in &artifacts.ks_exact {
                println!("cdf k={k}: exact ks distance {d:.6}");
            }
            println!("results in {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep {
            spec,
            param,
            values,
            seed,
            out,
            workers,
            overrides,
        } => {
            configure_workers(workers)?;
            let base = load_spec(&spec, seed, &overrides)?;
            let artifacts = sweep(&base, &param, &values, Some(&out))?;
            for (value, a) in values.iter().zip(&artifacts) {
                println!("--- {param} = {value} ---");
                print_summary(&a.table);
            }
            println!("results in {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare {
            table,
            cdf,
            out,
            mse_db,
            ser_abs,
            ks,
        } => {
            let table_path = table.unwrap_or_else(|| out.join("results.csv"));
            let text = fs::read_to_string(&table_path)
                .with_context(|| format!("reading {}", table_path.display()))?;
            let table = ResultTable::parse_csv(&text)?;
            let cdf_path = cdf.unwrap_or_else(|| out.join("cdf.csv"));
            let cdf_table = match fs::read_to_string(&cdf_path) {
                Ok(text) => Some(CdfTable::parse_csv(&text)?),
                Err(_) => None,
            };
            let tolerances = Tolerances {
                mse_db,
                ser_abs,
                ks,
            };
            let report = compare_report(&table, cdf_table.as_ref(), &tolerances)?;
            print!("{}", report.render());
            Ok(if report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
    }
}

fn configure_workers(workers: Option<usize>) -> Result<()> {
    if let Some(n) = workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker pool")?;
    }
    Ok(())
}

fn load_spec(path: &Path, seed: Option<u64>, overrides: &[String]) -> Result<ExperimentSpec> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut spec = ExperimentSpec::parse(&text)?;
    for item in overrides {
        let (key, value) = item
            .split_once('=')
            .with_context(|| format!("override `{item}` is not key=value"))?;
        spec.set(key.trim(), value.trim())?;
    }
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    spec.validate()?;
    Ok(spec)
}

fn print_summary(table: &ResultTable) {
    for source in [Source::Empirical, Source::Prediction] {
        if let Some(last) = table.rows_for(source).last() {
            let mse = last.mse_mean.map(|v| format!("{v:.6e}")).unwrap_or_default();
            let ser = last
                .ser_mean
                .map(|v| format!(" ser={v:.6}"))
                .unwrap_or_default();
            println!("{} k={}: mse={mse}{ser}", source.as_str(), last.k);
        }
    }
}
