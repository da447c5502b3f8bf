//! Result tables and their CSV form.
//!
//! Floats are written with Rust's shortest round-trip formatting, so
//! `parse(write(t)) == t` bit for bit and reruns with the same seed produce
//! byte-identical files. Empty fields encode "not applicable" (empirical
//! rows carry no saddle point, prediction rows no trial spread).

use super::ExperimentError;

pub const RESULT_HEADER: &str =
    "source,k,mse_mean,mse_stderr,ser_mean,ser_stderr,alpha_star,beta_star,particles,trials";
pub const CDF_HEADER: &str = "k,grid_point,cdf_empirical,cdf_predicted";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Empirical,
    Prediction,
    /// Marker appended when a run aborted and partial rows were flushed.
    Failed,
}

impl Source {
    pub fn as_str(&self) -> &'static str {
        match self {
            Source::Empirical => "empirical",
            Source::Prediction => "prediction",
            Source::Failed => "failed",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "empirical" => Some(Source::Empirical),
            "prediction" => Some(Source::Prediction),
            "failed" => Some(Source::Failed),
            _ => None,
        }
    }
}

/// One `(source, k)` row of aggregated metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub source: Source,
    pub k: usize,
    pub mse_mean: Option<f64>,
    pub mse_stderr: Option<f64>,
    pub ser_mean: Option<f64>,
    pub ser_stderr: Option<f64>,
    pub alpha_star: Option<f64>,
    pub beta_star: Option<f64>,
    pub particles: Option<usize>,
    pub trials: Option<usize>,
}

impl ResultRow {
    pub fn empty(source: Source, k: usize) -> Self {
        ResultRow {
            source,
            k,
            mse_mean: None,
            mse_stderr: None,
            ser_mean: None,
            ser_stderr: None,
            alpha_star: None,
            beta_star: None,
            particles: None,
            trials: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn rows_for(&self, source: Source) -> impl Iterator<Item = &ResultRow> {
        self.rows.iter().filter(move |r| r.source == source)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(RESULT_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                r.source.as_str(),
                r.k,
                fmt_opt(r.mse_mean),
                fmt_opt(r.mse_stderr),
                fmt_opt(r.ser_mean),
                fmt_opt(r.ser_stderr),
                fmt_opt(r.alpha_star),
                fmt_opt(r.beta_star),
                fmt_opt_usize(r.particles),
                fmt_opt_usize(r.trials),
            ));
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<Self, ExperimentError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header == RESULT_HEADER => {}
            other => {
                return Err(ExperimentError::CsvParse {
                    line: 1,
                    msg: format!("expected header `{RESULT_HEADER}`, got {other:?}"),
                })
            }
        }
        let mut rows = Vec::new();
        for (idx, line) in lines {
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| ExperimentError::CsvParse { line: idx + 1, msg };
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 10 {
                return Err(err(format!("expected 10 fields, got {}", fields.len())));
            }
            let source = Source::parse(fields[0])
                .ok_or_else(|| err(format!("unknown source `{}`", fields[0])))?;
            let k = fields[1]
                .parse::<usize>()
                .map_err(|e| err(format!("k `{}`: {e}", fields[1])))?;
            rows.push(ResultRow {
                source,
                k,
                mse_mean: parse_opt(fields[2]).map_err(&err)?,
                mse_stderr: parse_opt(fields[3]).map_err(&err)?,
                ser_mean: parse_opt(fields[4]).map_err(&err)?,
                ser_stderr: parse_opt(fields[5]).map_err(&err)?,
                alpha_star: parse_opt(fields[6]).map_err(&err)?,
                beta_star: parse_opt(fields[7]).map_err(&err)?,
                particles: parse_opt_usize(fields[8]).map_err(&err)?,
                trials: parse_opt_usize(fields[9]).map_err(&err)?,
            });
        }
        Ok(ResultTable { rows })
    }
}

/// One CDF sample: both curves at one grid point of one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfRow {
    pub k: usize,
    pub grid_point: f64,
    pub cdf_empirical: f64,
    pub cdf_predicted: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CdfTable {
    pub rows: Vec<CdfRow>,
}

impl CdfTable {
    pub fn iterations(&self) -> Vec<usize> {
        let mut ks: Vec<usize> = self.rows.iter().map(|r| r.k).collect();
        ks.dedup();
        ks
    }

    /// Max absolute gap between the two gridded curves, per iteration.
    /// This is the KS distance restricted to the grid.
    pub fn grid_ks(&self) -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64)> = Vec::new();
        for r in &self.rows {
            let gap = (r.cdf_empirical - r.cdf_predicted).abs();
            match out.last_mut() {
                Some((k, d)) if *k == r.k => *d = d.max(gap),
                _ => out.push((r.k, gap)),
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CDF_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.k, r.grid_point, r.cdf_empirical, r.cdf_predicted
            ));
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<Self, ExperimentError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header == CDF_HEADER => {}
            other => {
                return Err(ExperimentError::CsvParse {
                    line: 1,
                    msg: format!("expected header `{CDF_HEADER}`, got {other:?}"),
                })
            }
        }
        let mut rows = Vec::new();
        for (idx, line) in lines {
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| ExperimentError::CsvParse { line: idx + 1, msg };
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(err(format!("expected 4 fields, got {}", fields.len())));
            }
            rows.push(CdfRow {
                k: fields[0].parse().map_err(|e| err(format!("k: {e}")))?,
                grid_point: fields[1].parse().map_err(|e| err(format!("grid: {e}")))?,
                cdf_empirical: fields[2].parse().map_err(|e| err(format!("empirical: {e}")))?,
                cdf_predicted: fields[3].parse().map_err(|e| err(format!("predicted: {e}")))?,
            });
        }
        Ok(CdfTable { rows })
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn fmt_opt_usize(v: Option<usize>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn parse_opt(s: &str) -> Result<Option<f64>, String> {
    if s.is_empty() {
        Ok(None)
    } else {
        s.parse::<f64>().map(Some).map_err(|e| format!("`{s}`: {e}"))
    }
}

fn parse_opt_usize(s: &str) -> Result<Option<usize>, String> {
    if s.is_empty() {
        Ok(None)
    } else {
        s.parse::<usize>().map(Some).map_err(|e| format!("`{s}`: {e}"))
    }
}
