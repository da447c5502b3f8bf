//! Mechanical pass/fail comparison between the empirical and prediction
//! rows of a result table.

use std::collections::BTreeMap;

use super::{CdfTable, ExperimentError, ResultTable, Source};

/// Agreement thresholds. Defaults match the reproduction targets used
/// throughout the test suite: 1 dB on MSE, 0.01 absolute on SER, 0.05 on
/// the KS distance.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub mse_db: f64,
    pub ser_abs: f64,
    pub ks: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            mse_db: 1.0,
            ser_abs: 0.01,
            ks: 0.05,
        }
    }
}

/// Per-iteration gaps; a gap is `None` when either side lacks the metric.
#[derive(Debug, Clone)]
pub struct CompareRow {
    pub k: usize,
    /// `|10 log10(mse_emp / mse_pred)|`.
    pub mse_gap_db: Option<f64>,
    pub ser_gap: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
    /// `(k, gridded KS distance, pass)` for each iteration in the CDF table.
    pub ks: Vec<(usize, f64, bool)>,
    pub pass: bool,
    pub tolerances: Tolerances,
}

impl CompareReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            out.push_str(&format!("k={:<4}", r.k));
            match r.mse_gap_db {
                Some(g) => out.push_str(&format!(" mse_gap_db={g:<12.6}")),
                None => out.push_str(" mse_gap_db=-           "),
            }
            match r.ser_gap {
                Some(g) => out.push_str(&format!(" ser_gap={g:<12.6}")),
                None => out.push_str(" ser_gap=-           "),
            }
            out.push_str(if r.pass { " [pass]\n" } else { " [FAIL]\n" });
        }
        for (k, d, pass) in &self.ks {
            out.push_str(&format!(
                "cdf k={k:<4} ks={d:<12.6} {}\n",
                if *pass { "[pass]" } else { "[FAIL]" }
            ));
        }
        out.push_str(&format!(
            "verdict: {} (tolerances: mse {} dB, ser {}, ks {})\n",
            if self.pass { "PASS" } else { "FAIL" },
            self.tolerances.mse_db,
            self.tolerances.ser_abs,
            self.tolerances.ks
        ));
        out
    }
}

/// Compare the two sources of `table` iteration by iteration; KS rows come
/// from the gridded CDF curves when provided.
pub fn compare_report(
    table: &ResultTable,
    cdf: Option<&CdfTable>,
    tolerances: &Tolerances,
) -> Result<CompareReport, ExperimentError> {
    let empirical: BTreeMap<usize, _> = table
        .rows_for(Source::Empirical)
        .map(|r| (r.k, r))
        .collect();
    let prediction: BTreeMap<usize, _> = table
        .rows_for(Source::Prediction)
        .map(|r| (r.k, r))
        .collect();
    if empirical.is_empty() {
        return Err(ExperimentError::MissingSource("empirical"));
    }
    if prediction.is_empty() {
        return Err(ExperimentError::MissingSource("prediction"));
    }

    let mut rows = Vec::new();
    let mut pass = true;
    for (k, emp) in &empirical {
        let Some(pred) = prediction.get(k) else {
            continue;
        };
        let mse_gap_db = match (emp.mse_mean, pred.mse_mean) {
            (Some(a), Some(b)) => Some(db_gap(a, b)),
            _ => None,
        };
        let ser_gap = match (emp.ser_mean, pred.ser_mean) {
            (Some(a), Some(b)) => Some((a - b).abs()),
            _ => None,
        };
        let row_pass = mse_gap_db.is_none_or(|g| g <= tolerances.mse_db)
            && ser_gap.is_none_or(|g| g <= tolerances.ser_abs);
        pass &= row_pass;
        rows.push(CompareRow {
            k: *k,
            mse_gap_db,
            ser_gap,
            pass: row_pass,
        });
    }

    let ks: Vec<(usize, f64, bool)> = cdf
        .map(|c| {
            c.grid_ks()
                .into_iter()
                .map(|(k, d)| (k, d, d <= tolerances.ks))
                .collect()
        })
        .unwrap_or_default();
    pass &= ks.iter().all(|(_, _, p)| *p);

    Ok(CompareReport {
        rows,
        ks,
        pass,
        tolerances: *tolerances,
    })
}

/// Absolute gap in decibels between two nonnegative quantities; zero values
/// are floored so identical inputs report a zero gap instead of NaN.
fn db_gap(a: f64, b: f64) -> f64 {
    const FLOOR: f64 = 1e-300;
    (10.0 * (a.max(FLOOR) / b.max(FLOOR)).log10()).abs()
}
