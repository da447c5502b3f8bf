//! Experiment cell description: a flat `key = value` text format, small
//! enough to diff, with every field overridable from the command line.

use super::ExperimentError;
use crate::model::{MatrixEnsemble, SignalPrior};
use crate::regularizer::SeparableRegularizer;

/// Which reconstruction problem the cell runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Bernoulli-Gaussian signal, l1 penalty.
    SparseL1,
    /// `{+1,-1}` signal, box relaxation (no penalty weight).
    BinaryBox,
}

impl Scenario {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scenario::SparseL1 => "sparse_l1",
            Scenario::BinaryBox => "binary_box",
        }
    }
}

/// Equally spaced CDF evaluation grid `lo, lo+step, ..., <= hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.hi - self.lo) / self.step).round() as usize;
        (0..=count).map(|i| self.lo + i as f64 * self.step).collect()
    }
}

/// One experiment cell. See [`ExperimentSpec::template`] for the on-disk
/// schema.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub scenario: Scenario,
    pub n: usize,
    /// Explicit measurement count; mutually exclusive with `delta`.
    pub m: Option<usize>,
    pub delta: Option<f64>,
    /// Zero-probability of the sparse prior (sparse_l1 only).
    pub p0: Option<f64>,
    pub sigma_v2: f64,
    pub rho: f64,
    /// Regularization weight (sparse_l1 only; binary_box has none).
    pub lambda: Option<f64>,
    pub iters: usize,
    pub trials: usize,
    pub particles: usize,
    pub matrix: MatrixEnsemble,
    pub seed: u64,
    pub want_mse: bool,
    pub want_ser: bool,
    pub want_cdf: bool,
    pub cdf_iters: Vec<usize>,
    pub cdf_grid: Option<GridSpec>,
}

impl ExperimentSpec {
    /// Baseline cell for a scenario; the sparse cell mirrors the
    /// sparse-recovery reference regime, the binary cell the middle
    /// measurement ratio of the SER study.
    pub fn base(scenario: Scenario) -> Self {
        match scenario {
            Scenario::SparseL1 => ExperimentSpec {
                scenario,
                n: 1000,
                m: None,
                delta: Some(0.9),
                p0: Some(0.8),
                sigma_v2: 0.001,
                rho: 0.1,
                lambda: Some(0.1),
                iters: 50,
                trials: 100,
                particles: 100_000,
                matrix: MatrixEnsemble::GaussianIid,
                seed: 0,
                want_mse: true,
                want_ser: false,
                want_cdf: false,
                cdf_iters: Vec::new(),
                cdf_grid: None,
            },
            Scenario::BinaryBox => ExperimentSpec {
                scenario,
                n: 500,
                m: None,
                delta: Some(0.8),
                p0: None,
                sigma_v2: 0.04,
                rho: 0.1,
                lambda: None,
                iters: 50,
                trials: 300,
                particles: 300_000,
                matrix: MatrixEnsemble::GaussianIid,
                seed: 0,
                want_mse: true,
                want_ser: true,
                want_cdf: false,
                cdf_iters: Vec::new(),
                cdf_grid: None,
            },
        }
    }

    /// Commented spec file for `admmlab gen`.
    pub fn template(scenario: Scenario) -> String {
        let base = Self::base(scenario);
        let mut out = String::new();
        out.push_str("# admmlab experiment spec: one `key = value` per line, `#` comments.\n");
        out.push_str("# Any key can be overridden on the CLI with --override key=value.\n\n");
        out.push_str(&format!(
            "scenario = {}        # sparse_l1 | binary_box\n",
            base.scenario.as_str()
        ));
        out.push_str(&format!("n = {}                  # signal dimension\n", base.n));
        out.push_str(&format!(
            "delta = {}             # measurement ratio M/N (or give `m = <count>` instead)\n",
            base.delta.unwrap()
        ));
        match scenario {
            Scenario::SparseL1 => {
                out.push_str(&format!(
                    "p0 = {}                # prior zero-probability\n",
                    base.p0.unwrap()
                ));
                out.push_str(&format!("sigma_v2 = {}        # noise variance\n", base.sigma_v2));
                out.push_str(&format!("rho = {}               # ADMM parameter\n", base.rho));
                out.push_str(&format!(
                    "lambda = {}            # l1 weight (sparse_l1 only)\n",
                    base.lambda.unwrap()
                ));
            }
            Scenario::BinaryBox => {
                out.push_str(&format!("sigma_v2 = {}         # noise variance\n", base.sigma_v2));
                out.push_str(&format!("rho = {}               # ADMM parameter\n", base.rho));
                out.push_str("# binary_box takes no lambda: the box indicator ignores it\n");
            }
        }
        out.push_str(&format!("iters = {}              # iterations on both sides\n", base.iters));
        out.push_str(&format!(
            "trials = {}            # independent (x, A, v) realizations\n",
            base.trials
        ));
        out.push_str(&format!(
            "particles = {}      # prediction ensemble size\n",
            base.particles
        ));
        out.push_str("matrix = gaussian       # gaussian | bernoulli\n");
        out.push_str(&format!("seed = {}\n", base.seed));
        let outputs = if base.want_ser { "mse,ser" } else { "mse" };
        out.push_str(&format!(
            "outputs = {outputs}           # comma list: mse[,ser][,cdf]\n"
        ));
        out.push_str("# cdf output needs both of:\n");
        out.push_str("# cdf_iters = 1,4,7\n");
        out.push_str("# cdf_grid = -1.5:1.5:0.01   # lo:hi:step\n");
        out
    }

    /// Parse a spec file.
    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        let mut scenario = None;
        let mut pairs = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ExperimentError::Parse {
                line: idx + 1,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim().to_ascii_lowercase();
            let value = value.trim().to_string();
            if key == "scenario" {
                scenario = Some(parse_scenario(&value)?);
            } else {
                pairs.push((key, value));
            }
        }
        let scenario = scenario.ok_or_else(|| ExperimentError::InvalidSpec(
            "missing required key `scenario`".into(),
        ))?;
        let mut spec = Self::base(scenario);
        // The scenario baseline fills the defaults; explicit keys override.
        spec.delta = None;
        for (key, value) in &pairs {
            spec.set(key, value)?;
        }
        if spec.m.is_none() && spec.delta.is_none() {
            spec.delta = Self::base(scenario).delta;
        }
        spec.validate()?;
        Ok(spec)
    }

    /// Apply one `key=value` override (also used by `--override`).
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ExperimentError> {
        let invalid = |msg: String| ExperimentError::InvalidValue {
            key: key.to_string(),
            msg,
        };
        match key {
            "scenario" => self.scenario = parse_scenario(value)?,
            "n" => self.n = parse_num(key, value)?,
            "m" => {
                self.m = Some(parse_num(key, value)?);
                self.delta = None;
            }
            "delta" => {
                self.delta = Some(parse_num(key, value)?);
                self.m = None;
            }
            "p0" => self.p0 = Some(parse_num(key, value)?),
            "sigma_v2" => self.sigma_v2 = parse_num(key, value)?,
            "rho" => self.rho = parse_num(key, value)?,
            "lambda" => self.lambda = Some(parse_num(key, value)?),
            "iters" => self.iters = parse_num(key, value)?,
            "trials" => self.trials = parse_num(key, value)?,
            "particles" => self.particles = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "matrix" => {
                self.matrix = match value {
                    "gaussian" => MatrixEnsemble::GaussianIid,
                    "bernoulli" => MatrixEnsemble::BernoulliPm,
                    other => return Err(invalid(format!("expected gaussian|bernoulli, got `{other}`"))),
                }
            }
            "outputs" => {
                self.want_mse = false;
                self.want_ser = false;
                self.want_cdf = false;
                for item in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    match item {
                        "mse" => self.want_mse = true,
                        "ser" => self.want_ser = true,
                        "cdf" => self.want_cdf = true,
                        other => return Err(invalid(format!("unknown output `{other}`"))),
                    }
                }
            }
            "cdf_iters" => {
                self.cdf_iters = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<usize>().map_err(|e| invalid(format!("`{s}`: {e}"))))
                    .collect::<Result<_, _>>()?;
            }
            "cdf_grid" => {
                let parts: Vec<&str> = value.split(':').collect();
                if parts.len() != 3 {
                    return Err(invalid(format!("expected lo:hi:step, got `{value}`")));
                }
                let nums: Vec<f64> = parts
                    .iter()
                    .map(|s| s.trim().parse::<f64>().map_err(|e| invalid(format!("`{s}`: {e}"))))
                    .collect::<Result<_, _>>()?;
                self.cdf_grid = Some(GridSpec {
                    lo: nums[0],
                    hi: nums[1],
                    step: nums[2],
                });
            }
            other => return Err(ExperimentError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let fail = |msg: String| Err(ExperimentError::InvalidSpec(msg));
        if self.n == 0 {
            return fail("n must be positive".into());
        }
        match (self.m, self.delta) {
            (Some(0), _) => return fail("m must be positive".into()),
            (None, Some(d)) if !(d > 0.0) => return fail(format!("delta must be positive, got {d}")),
            (None, None) => return fail("one of m or delta is required".into()),
            _ => {}
        }
        if self.measurements() < 1 {
            return fail("delta * n rounds to zero measurements".into());
        }
        if self.sigma_v2 < 0.0 {
            return fail(format!("sigma_v2 must be nonnegative, got {}", self.sigma_v2));
        }
        if !(self.rho > 0.0) {
            return fail(format!("rho must be positive, got {}", self.rho));
        }
        match self.scenario {
            Scenario::SparseL1 => {
                match self.p0 {
                    Some(p) if p > 0.0 && p < 1.0 => {}
                    other => return fail(format!("sparse_l1 needs p0 in (0, 1), got {other:?}")),
                }
                match self.lambda {
                    Some(l) if l > 0.0 => {}
                    other => return fail(format!("sparse_l1 needs lambda > 0, got {other:?}")),
                }
                if self.want_ser {
                    return fail("ser output needs a {+1,-1} signal; use scenario binary_box".into());
                }
            }
            Scenario::BinaryBox => {
                if self.lambda.is_some() {
                    return fail("binary_box forbids lambda (the box objective has none)".into());
                }
                if self.p0.is_some() {
                    return fail("p0 applies only to sparse_l1".into());
                }
            }
        }
        if self.trials == 0 || self.particles == 0 || self.iters == 0 {
            return fail("iters, trials and particles must be positive".into());
        }
        if self.want_cdf {
            if self.cdf_iters.is_empty() {
                return fail("cdf output needs cdf_iters".into());
            }
            if let Some(&bad) = self.cdf_iters.iter().find(|&&k| k == 0 || k > self.iters) {
                return fail(format!("cdf iteration {bad} outside 1..={}", self.iters));
            }
            match self.cdf_grid {
                Some(g) if g.lo < g.hi && g.step > 0.0 => {}
                other => return fail(format!("cdf grid must satisfy lo < hi, step > 0, got {other:?}")),
            }
        }
        Ok(())
    }

    /// Measurement count: explicit `m` or `round(delta * n)`.
    pub fn measurements(&self) -> usize {
        match (self.m, self.delta) {
            (Some(m), _) => m,
            (None, Some(d)) => (d * self.n as f64).round() as usize,
            (None, None) => 0,
        }
    }

    /// Actual ratio `M/N` used on both sides of the comparison.
    pub fn ratio(&self) -> f64 {
        self.measurements() as f64 / self.n as f64
    }

    pub fn prior(&self) -> SignalPrior {
        match self.scenario {
            Scenario::SparseL1 => SignalPrior::BernoulliGaussian {
                p0: self.p0.expect("validated"),
            },
            Scenario::BinaryBox => SignalPrior::BinaryPm1,
        }
    }

    pub fn regularizer(&self) -> SeparableRegularizer {
        match self.scenario {
            Scenario::SparseL1 => SeparableRegularizer::L1,
            Scenario::BinaryBox => SeparableRegularizer::BoxIndicator,
        }
    }

    /// Weight handed to the solver; the box indicator ignores it, so the
    /// binary scenario runs with 1.
    pub fn solver_lambda(&self) -> f64 {
        self.lambda.unwrap_or(1.0)
    }
}

fn parse_scenario(value: &str) -> Result<Scenario, ExperimentError> {
    match value {
        "sparse_l1" => Ok(Scenario::SparseL1),
        "binary_box" => Ok(Scenario::BinaryBox),
        other => Err(ExperimentError::InvalidValue {
            key: "scenario".into(),
            msg: format!("expected sparse_l1|binary_box, got `{other}`"),
        }),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ExperimentError>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| ExperimentError::InvalidValue {
        key: key.to_string(),
        msg: format!("`{value}`: {e}"),
    })
}
