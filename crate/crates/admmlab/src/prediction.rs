//! Scalar state-evolution prediction of ADMM.
//!
//! In the large-system limit the per-coordinate behavior of the ADMM
//! iterates decouples into a scalar stochastic process
//!
//! ```text
//! S_{k+1} = S_hat(alpha_k*, beta_k*)
//! Z_{k+1} = prox_{(lambda/rho) f}(S_{k+1} + W_k)
//! W_{k+1} = W_k + S_{k+1} - Z_{k+1}
//! ```
//!
//! driven by a fixed signal draw `X` and a standard Gaussian `H`, where
//! `(alpha_k*, beta_k*)` solves a two-variable min-max problem whose
//! expectation term we estimate over a particle ensemble. The optimizer
//! `alpha_k*` carries the predicted MSE of the tentative estimate:
//! `alpha^2 - sigma_v^2`.
//!
//! The expectation term is evaluated two ways: [`objective`] averages the
//! per-particle integrand directly (the reference semantics), while
//! [`SaddleObjective`] reduces the ensemble to three second moments once per
//! iteration and then evaluates in O(1). The two are algebraically
//! identical; the searches and oracles use the O(1) form.

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::model::{self, sign_plus, ModelError, SignalPrior};
use crate::regularizer::SeparableRegularizer;
use crate::search;

#[derive(Debug, Error, PartialEq)]
pub enum PredictionError {
    #[error(
        "saddle optimizer (alpha = {alpha}, beta = {beta}) lies within 2*tol of the search \
         boundary (alpha range {alpha_lo}..{alpha_hi}, beta range {beta_lo}..{beta_hi}); \
         widen the range"
    )]
    OptimumAtBoundary {
        alpha: f64,
        beta: f64,
        alpha_lo: f64,
        alpha_hi: f64,
        beta_lo: f64,
        beta_hi: f64,
    },
    #[error("saddle objective became non-finite")]
    NonFiniteObjective,
    #[error("SER prediction requires a {{+1,-1}} signal")]
    NonBinaryPrior,
    #[error("invalid prediction configuration: {0}")]
    InvalidConfig(String),
}

/// Monte-Carlo sample of the scalar process. `x` is drawn once and never
/// changes; `s`, `z`, `w` evolve with the iteration counter `k`.
#[derive(Debug, Clone)]
pub struct ParticleEnsemble {
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    pub z: Vec<f64>,
    pub w: Vec<f64>,
    pub k: usize,
}

impl ParticleEnsemble {
    pub fn particles(&self) -> usize {
        self.x.len()
    }
}

/// Optimizer of the per-iteration min-max objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddlePoint {
    pub alpha: f64,
    pub beta: f64,
    pub value: f64,
}

/// Knobs of the prediction engine.
#[derive(Debug, Clone)]
pub struct PredictionConfig {
    pub particles: usize,
    pub alpha_range: (f64, f64),
    pub beta_range: (f64, f64),
    /// Target bracket width of each ternary search.
    pub search_tol: f64,
    pub seed: u64,
    /// Redraw `H` every iteration instead of keeping one draw per particle
    /// for the whole trajectory.
    ///
    /// Default `false`: the process is driven by a single `(X, H)` pair per
    /// particle, mirroring the coupled system where the same measurement
    /// matrix enters every iteration; this is the mode that reproduces
    /// empirical ADMM. With fresh draws the dual state cannot settle and
    /// the predicted MSE stalls after the first iteration; the mode is kept
    /// for comparison.
    pub fresh_h: bool,
    /// Iterations whose particle sample should be kept for CDF comparisons.
    pub snapshot_iters: Vec<usize>,
}

impl Default for PredictionConfig {
    fn default() -> Self {
        PredictionConfig {
            particles: 100_000,
            alpha_range: (1e-4, 10.0),
            beta_range: (1e-4, 10.0),
            search_tol: 1e-6,
            seed: 0,
            fresh_h: false,
            snapshot_iters: Vec::new(),
        }
    }
}

impl PredictionConfig {
    pub fn validate(&self) -> Result<(), PredictionError> {
        if self.particles == 0 {
            return Err(PredictionError::InvalidConfig("particles = 0".into()));
        }
        for (name, (lo, hi)) in [("alpha", self.alpha_range), ("beta", self.beta_range)] {
            if !(lo > 0.0 && lo < hi && hi.is_finite()) {
                return Err(PredictionError::InvalidConfig(format!(
                    "{name} range {lo}..{hi}"
                )));
            }
        }
        if !(self.search_tol > 0.0) {
            return Err(PredictionError::InvalidConfig(format!(
                "search_tol = {}",
                self.search_tol
            )));
        }
        Ok(())
    }
}

/// One recorded prediction iteration. `mse_corollary` is
/// `alpha^2 - sigma_v^2` clamped at zero; the raw value is kept alongside
/// since Monte-Carlo noise can push it slightly negative.
#[derive(Debug, Clone)]
pub struct PredictionRecord {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub saddle_value: f64,
    pub mse_corollary: f64,
    pub mse_corollary_raw: f64,
    /// `mean((S_k - X)^2)` over the ensemble.
    pub mse_ensemble: f64,
    pub ser: Option<f64>,
    pub snapshot: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default)]
pub struct PredictionTrajectory {
    pub records: Vec<PredictionRecord>,
}

/// Fresh ensemble at `k = 0`: `x` i.i.d. from the prior, everything else 0.
pub fn init_ensemble<R: Rng + ?Sized>(
    prior: SignalPrior,
    particles: usize,
    rng: &mut R,
) -> ParticleEnsemble {
    assert!(particles >= 1);
    let x: Vec<f64> = (0..particles).map(|_| prior.sample(rng)).collect();
    ParticleEnsemble {
        x,
        s: vec![0.0; particles],
        z: vec![0.0; particles],
        w: vec![0.0; particles],
        k: 0,
    }
}

/// Decoupled per-particle estimate: the weighted average of
/// `x + (alpha/sqrt(delta)) h` (weight `beta sqrt(delta) / alpha`) and
/// `z - w` (weight `rho`).
pub fn decoupled_estimate(
    alpha: f64,
    beta: f64,
    x: f64,
    h: f64,
    z: f64,
    w: f64,
    delta: f64,
    rho: f64,
) -> f64 {
    let sqrt_delta = delta.sqrt();
    let q = beta * sqrt_delta / alpha;
    (q * (x + alpha / sqrt_delta * h) + rho * (z - w)) / (q + rho)
}

/// Per-particle term of the min-max objective, evaluated at the decoupled
/// estimate (which minimizes it).
pub fn particle_objective(
    alpha: f64,
    beta: f64,
    x: f64,
    h: f64,
    z: f64,
    w: f64,
    delta: f64,
    rho: f64,
) -> f64 {
    let s = decoupled_estimate(alpha, beta, x, h, z, w, delta, rho);
    let q = beta * delta.sqrt() / alpha;
    let e = s - x;
    0.5 * q * e * e - beta * h * e + 0.5 * rho * (s - z + w) * (s - z + w)
}

// Deterministic two-level sum: per-chunk partial sums combined in index
// order, so the result is independent of any parallel schedule upstream.
fn chunked_mean(values: &[f64]) -> f64 {
    const CHUNK: usize = 1024;
    let total: f64 = values
        .chunks(CHUNK)
        .map(|c| c.iter().sum::<f64>())
        .sum();
    total / values.len() as f64
}

/// The min-max objective with the expectation term reduced to second
/// moments of `(h, u)`, `u = z - w - x`. Exact, not an approximation: the
/// particle average of [`particle_objective`] is a rational function of
/// `mean(h^2)`, `mean(h u)`, `mean(u^2)`.
#[derive(Debug, Clone, Copy)]
pub struct SaddleObjective {
    sqrt_delta: f64,
    sigma_v2: f64,
    rho: f64,
    mean_hh: f64,
    mean_hu: f64,
    mean_uu: f64,
}

impl SaddleObjective {
    pub fn new(
        ensemble: &ParticleEnsemble,
        h_draws: &[f64],
        delta: f64,
        sigma_v2: f64,
        rho: f64,
    ) -> Self {
        assert_eq!(ensemble.particles(), h_draws.len());
        let p = ensemble.particles();
        let mut hh = vec![0.0; p];
        let mut hu = vec![0.0; p];
        let mut uu = vec![0.0; p];
        for i in 0..p {
            let u = ensemble.z[i] - ensemble.w[i] - ensemble.x[i];
            let h = h_draws[i];
            hh[i] = h * h;
            hu[i] = h * u;
            uu[i] = u * u;
        }
        SaddleObjective {
            sqrt_delta: delta.sqrt(),
            sigma_v2,
            rho,
            mean_hh: chunked_mean(&hh),
            mean_hu: chunked_mean(&hu),
            mean_uu: chunked_mean(&uu),
        }
    }

    /// Objective value at `(alpha, beta)`.
    pub fn value(&self, alpha: f64, beta: f64) -> f64 {
        let q = beta * self.sqrt_delta / alpha;
        let denom = q + self.rho;
        let inv2 = 1.0 / (denom * denom);
        // e = (beta h + rho u) / denom, d = (beta h - q u) / denom.
        let e2 = (beta * beta * self.mean_hh
            + 2.0 * beta * self.rho * self.mean_hu
            + self.rho * self.rho * self.mean_uu)
            * inv2;
        let he = (beta * self.mean_hh + self.rho * self.mean_hu) / denom;
        let d2 = (beta * beta * self.mean_hh - 2.0 * beta * q * self.mean_hu
            + q * q * self.mean_uu)
            * inv2;
        let expectation = 0.5 * q * e2 - beta * he + 0.5 * self.rho * d2;
        0.5 * alpha * beta * self.sqrt_delta + 0.5 * beta * self.sigma_v2 * self.sqrt_delta / alpha
            - 0.5 * beta * beta
            + expectation
    }

    /// `mean((S - X)^2)` the ensemble would have after evolving with
    /// `(alpha, beta)`.
    pub fn mean_squared_error(&self, alpha: f64, beta: f64) -> f64 {
        let q = beta * self.sqrt_delta / alpha;
        let denom = q + self.rho;
        (beta * beta * self.mean_hh
            + 2.0 * beta * self.rho * self.mean_hu
            + self.rho * self.rho * self.mean_uu)
            / (denom * denom)
    }
}

/// Reference form of the min-max objective: three analytic terms plus the
/// particle average of [`particle_objective`]. Deterministic given
/// `(ensemble, h_draws)`.
pub fn objective(
    alpha: f64,
    beta: f64,
    ensemble: &ParticleEnsemble,
    h_draws: &[f64],
    delta: f64,
    sigma_v2: f64,
    rho: f64,
) -> f64 {
    assert_eq!(ensemble.particles(), h_draws.len());
    let terms: Vec<f64> = (0..ensemble.particles())
        .map(|i| {
            particle_objective(
                alpha,
                beta,
                ensemble.x[i],
                h_draws[i],
                ensemble.z[i],
                ensemble.w[i],
                delta,
                rho,
            )
        })
        .collect();
    let sqrt_delta = delta.sqrt();
    0.5 * alpha * beta * sqrt_delta + 0.5 * beta * sigma_v2 * sqrt_delta / alpha
        - 0.5 * beta * beta
        + chunked_mean(&terms)
}

/// Nested ternary search for the saddle of the current iteration's
/// objective: outer minimization over `alpha`, inner maximization over
/// `beta`, each bracket narrowed to `search_tol`.
pub fn solve_saddle(
    ensemble: &ParticleEnsemble,
    h_draws: &[f64],
    delta: f64,
    sigma_v2: f64,
    rho: f64,
    config: &PredictionConfig,
) -> Result<SaddlePoint, PredictionError> {
    config.validate()?;
    let objective = SaddleObjective::new(ensemble, h_draws, delta, sigma_v2, rho);
    let candidate = search::saddle_point(
        |a, b| objective.value(a, b),
        config.alpha_range,
        config.beta_range,
        config.search_tol,
    );
    if !candidate.value.is_finite() || !candidate.alpha.is_finite() || !candidate.beta.is_finite() {
        return Err(PredictionError::NonFiniteObjective);
    }
    let margin = 2.0 * config.search_tol;
    let (alo, ahi) = config.alpha_range;
    let (blo, bhi) = config.beta_range;
    let near = |v: f64, bound: f64| (v - bound).abs() < margin;
    if near(candidate.alpha, alo)
        || near(candidate.alpha, ahi)
        || near(candidate.beta, blo)
        || near(candidate.beta, bhi)
    {
        return Err(PredictionError::OptimumAtBoundary {
            alpha: candidate.alpha,
            beta: candidate.beta,
            alpha_lo: alo,
            alpha_hi: ahi,
            beta_lo: blo,
            beta_hi: bhi,
        });
    }
    Ok(SaddlePoint {
        alpha: candidate.alpha,
        beta: candidate.beta,
        value: candidate.value,
    })
}

/// [`solve_saddle`] with the default recovery policy: on a boundary hit the
/// offending range end is widened (lower end halved, upper end doubled) up
/// to four times before the error is surfaced.
pub fn solve_saddle_widened(
    ensemble: &ParticleEnsemble,
    h_draws: &[f64],
    delta: f64,
    sigma_v2: f64,
    rho: f64,
    config: &PredictionConfig,
) -> Result<SaddlePoint, PredictionError> {
    let mut cfg = config.clone();
    for _ in 0..4 {
        match solve_saddle(ensemble, h_draws, delta, sigma_v2, rho, &cfg) {
            Err(PredictionError::OptimumAtBoundary { alpha, beta, .. }) => {
                let margin = 2.0 * cfg.search_tol;
                if (alpha - cfg.alpha_range.0).abs() < margin {
                    cfg.alpha_range.0 /= 2.0;
                }
                if (cfg.alpha_range.1 - alpha).abs() < margin {
                    cfg.alpha_range.1 *= 2.0;
                }
                if (beta - cfg.beta_range.0).abs() < margin {
                    cfg.beta_range.0 /= 2.0;
                }
                if (cfg.beta_range.1 - beta).abs() < margin {
                    cfg.beta_range.1 *= 2.0;
                }
            }
            other => return other,
        }
    }
    solve_saddle(ensemble, h_draws, delta, sigma_v2, rho, &cfg)
}

/// Advance every particle one iteration with the solved saddle point. Uses
/// the identical scalar prox as the empirical solver.
pub fn evolve(
    ensemble: &mut ParticleEnsemble,
    saddle: &SaddlePoint,
    h_draws: &[f64],
    reg: SeparableRegularizer,
    lambda: f64,
    rho: f64,
    delta: f64,
) {
    assert_eq!(ensemble.particles(), h_draws.len());
    let level = lambda / rho;
    for i in 0..ensemble.particles() {
        let s = decoupled_estimate(
            saddle.alpha,
            saddle.beta,
            ensemble.x[i],
            h_draws[i],
            ensemble.z[i],
            ensemble.w[i],
            delta,
            rho,
        );
        let z = reg.prox(level, s + ensemble.w[i]);
        ensemble.w[i] += s - z;
        ensemble.s[i] = s;
        ensemble.z[i] = z;
    }
    ensemble.k += 1;
}

/// Predicted symbol error rate: fraction of particles with
/// `sign(S) != X`, `sign(0) = +1`.
pub fn predicted_ser(ensemble: &ParticleEnsemble) -> Result<f64, PredictionError> {
    if ensemble.x.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(PredictionError::NonBinaryPrior);
    }
    let errors = ensemble
        .s
        .iter()
        .zip(&ensemble.x)
        .filter(|(&s, &x)| sign_plus(s) != x)
        .count();
    Ok(errors as f64 / ensemble.particles() as f64)
}

/// Empirical CDF of the particle `S` sample on the given grid.
pub fn predicted_cdf(ensemble: &ParticleEnsemble, grid: &[f64]) -> Result<Vec<f64>, ModelError> {
    model::empirical_cdf(&ensemble.s, grid)
}

/// Run the scalar process for `iters` iterations: per iteration draw `H`,
/// solve the saddle, evolve the ensemble, and record both MSE readings.
#[allow(clippy::too_many_arguments)]
pub fn predict_trajectory(
    prior: SignalPrior,
    reg: SeparableRegularizer,
    lambda: f64,
    delta: f64,
    sigma_v2: f64,
    rho: f64,
    iters: usize,
    config: &PredictionConfig,
) -> Result<PredictionTrajectory, PredictionError> {
    config.validate()?;
    let mut rng = crate::rng::prediction_rng(config.seed);
    let mut ensemble = init_ensemble(prior, config.particles, &mut rng);
    let binary = matches!(prior, SignalPrior::BinaryPm1);

    let mut h = vec![0.0; config.particles];
    if !config.fresh_h {
        fill_standard_normal(&mut h, &mut rng);
    }

    let mut trajectory = PredictionTrajectory::default();
    for k in 1..=iters {
        if config.fresh_h {
            fill_standard_normal(&mut h, &mut rng);
        }
        let saddle = solve_saddle_widened(&ensemble, &h, delta, sigma_v2, rho, config)?;
        evolve(&mut ensemble, &saddle, &h, reg, lambda, rho, delta);

        let sq_err: Vec<f64> = ensemble
            .s
            .iter()
            .zip(&ensemble.x)
            .map(|(s, x)| (s - x) * (s - x))
            .collect();
        let raw = saddle.alpha * saddle.alpha - sigma_v2;
        trajectory.records.push(PredictionRecord {
            k,
            alpha: saddle.alpha,
            beta: saddle.beta,
            saddle_value: saddle.value,
            mse_corollary: raw.max(0.0),
            mse_corollary_raw: raw,
            mse_ensemble: chunked_mean(&sq_err),
            ser: if binary {
                Some(predicted_ser(&ensemble)?)
            } else {
                None
            },
            snapshot: config
                .snapshot_iters
                .contains(&k)
                .then(|| ensemble.s.clone()),
        });
    }
    Ok(trajectory)
}

fn fill_standard_normal<R: Rng + ?Sized>(buf: &mut [f64], rng: &mut R) {
    for v in buf.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    const FIG2: (f64, f64, f64, f64) = (0.9, 0.8, 0.001, 0.1); // delta, p0, sigma_v2, rho

    fn fig2_setup(particles: usize, seed: u64) -> (ParticleEnsemble, Vec<f64>) {
        let (_, p0, _, _) = FIG2;
        let prior = SignalPrior::bernoulli_gaussian(p0).unwrap();
        let mut rng = stream_rng(seed, 0);
        let ensemble = init_ensemble(prior, particles, &mut rng);
        let mut h = vec![0.0; particles];
        fill_standard_normal(&mut h, &mut rng);
        (ensemble, h)
    }

    #[test]
    fn init_has_zero_states_and_prior_statistics() {
        let prior = SignalPrior::bernoulli_gaussian(0.8).unwrap();
        let ens = init_ensemble(prior, 100_000, &mut stream_rng(50, 0));
        assert!(ens.z.iter().all(|&v| v == 0.0));
        assert!(ens.w.iter().all(|&v| v == 0.0));
        assert!(ens.s.iter().all(|&v| v == 0.0));
        assert_eq!(ens.k, 0);
        let zero_frac = ens.x.iter().filter(|&&v| v == 0.0).count() as f64 / 100_000.0;
        assert!((zero_frac - 0.8).abs() < 0.01);
    }

    #[test]
    fn decoupled_estimate_limits() {
        // rho -> 0: pure noisy-signal term.
        let v = decoupled_estimate(0.5, 2.0, 1.0, 0.3, 7.0, 3.0, 0.8, 1e-12);
        assert!((v - (1.0 + 0.5 / 0.8f64.sqrt() * 0.3)).abs() < 1e-9);
        // beta -> 0: pure (z - w) term.
        let v = decoupled_estimate(0.5, 1e-12, 1.0, 0.3, 7.0, 3.0, 0.8, 0.7);
        assert!((v - 4.0).abs() < 1e-9);
        // direct evaluation at unit parameters.
        assert!((decoupled_estimate(1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn particle_objective_cases() {
        assert_eq!(particle_objective(1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.8, 0.5), 0.0);
        let j = particle_objective(1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0);
        assert!((j - 0.25).abs() < 1e-15);
    }

    #[test]
    fn particle_objective_is_minimum_over_candidates() {
        // Independent oracle: dense grid over candidate estimates of the
        // strongly convex per-particle integrand.
        let mut rng = stream_rng(51, 0);
        for _ in 0..20 {
            let alpha = 0.2 + rng.random::<f64>();
            let beta = 0.2 + rng.random::<f64>();
            let x = rng.random::<f64>() * 2.0 - 1.0;
            let h = rng.random::<f64>() * 2.0 - 1.0;
            let z = rng.random::<f64>() - 0.5;
            let w = rng.random::<f64>() - 0.5;
            let (delta, rho): (f64, f64) = (0.8, 0.3);
            let q = beta * delta.sqrt() / alpha;
            let integrand = |s: f64| {
                0.5 * q * (s - x) * (s - x) - beta * h * (s - x)
                    + 0.5 * rho * (s - z + w) * (s - z + w)
            };
            let mut grid_min = f64::INFINITY;
            let mut s = -4.0;
            while s <= 4.0 {
                grid_min = grid_min.min(integrand(s));
                s += 1e-4;
            }
            let j = particle_objective(alpha, beta, x, h, z, w, delta, rho);
            assert!((j - grid_min).abs() < 1e-6, "j {j} grid {grid_min}");
        }
    }

    #[test]
    fn fast_objective_matches_particle_average() {
        let (ensemble, h) = fig2_setup(5_000, 52);
        let (delta, _, sigma_v2, rho) = FIG2;
        let fast = SaddleObjective::new(&ensemble, &h, delta, sigma_v2, rho);
        for &(a, b) in &[(0.3, 0.5), (1.0, 1.0), (0.05, 2.0), (2.5, 0.01)] {
            let naive = objective(a, b, &ensemble, &h, delta, sigma_v2, rho);
            let quick = fast.value(a, b);
            assert!(
                (naive - quick).abs() <= 1e-10 * naive.abs().max(1.0),
                "({a}, {b}): {naive} vs {quick}"
            );
        }
    }

    #[test]
    fn objective_of_zero_ensemble_is_analytic() {
        let ens = ParticleEnsemble {
            x: vec![0.0; 100],
            s: vec![0.0; 100],
            z: vec![0.0; 100],
            w: vec![0.0; 100],
            k: 0,
        };
        let h = vec![0.0; 100];
        let (alpha, beta, delta) = (0.7, 1.3, 0.8);
        let got = objective(alpha, beta, &ens, &h, delta, 0.0, 0.5);
        let expected = 0.5 * alpha * beta * delta.sqrt() - 0.5 * beta * beta;
        assert!((got - expected).abs() < 1e-15);
    }

    #[test]
    fn objective_is_unimodal_along_both_axes() {
        // Concave in beta for fixed alpha; convex in alpha after maximizing
        // over beta. Checked as single-extremum profiles on a dense scan.
        let (ensemble, h) = fig2_setup(20_000, 53);
        let (delta, _, sigma_v2, rho) = FIG2;
        let obj = SaddleObjective::new(&ensemble, &h, delta, sigma_v2, rho);

        let alpha0 = 0.4;
        let betas: Vec<f64> = (1..400).map(|i| i as f64 * 0.01).collect();
        let profile: Vec<f64> = betas.iter().map(|&b| obj.value(alpha0, b)).collect();
        assert_eq!(direction_changes(&profile), 1, "beta profile not unimodal");

        let alphas: Vec<f64> = (1..400).map(|i| i as f64 * 0.005).collect();
        let outer: Vec<f64> = alphas
            .iter()
            .map(|&a| search::ternary_max(|b| obj.value(a, b), 1e-4, 10.0, 1e-7).1)
            .collect();
        let neg: Vec<f64> = outer.iter().map(|v| -v).collect();
        assert_eq!(direction_changes(&neg), 1, "alpha profile not unimodal");
    }

    // Number of sign changes of the discrete derivative; 1 for a profile
    // that rises then falls (or falls then rises).
    fn direction_changes(values: &[f64]) -> usize {
        let mut changes = 0;
        let mut last = 0i8;
        for w in values.windows(2) {
            let s = if w[1] > w[0] { 1 } else { -1 };
            if last != 0 && s != last {
                changes += 1;
            }
            last = s;
        }
        changes
    }

    #[test]
    fn saddle_matches_coarse_grid_oracle() {
        let (ensemble, h) = fig2_setup(10_000, 54);
        let (delta, _, sigma_v2, rho) = FIG2;
        let obj = SaddleObjective::new(&ensemble, &h, delta, sigma_v2, rho);
        let cfg = PredictionConfig {
            particles: 10_000,
            ..PredictionConfig::default()
        };
        let saddle = solve_saddle(&ensemble, &h, delta, sigma_v2, rho, &cfg).unwrap();

        // Exhaustive 2-D scan at step 1e-3 over a box around the optimizer.
        let step = 1e-3;
        let mut best = (f64::INFINITY, 0.0, 0.0);
        let mut a = (saddle.alpha - 0.05).max(1e-4);
        while a <= saddle.alpha + 0.05 {
            let mut inner: f64 = f64::NEG_INFINITY;
            let mut b = (saddle.beta - 0.05).max(1e-4);
            let mut best_b = b;
            while b <= saddle.beta + 0.05 {
                let v = obj.value(a, b);
                if v > inner {
                    inner = v;
                    best_b = b;
                }
                b += step;
            }
            if inner < best.0 {
                best = (inner, a, best_b);
            }
            a += step;
        }
        assert!((saddle.alpha - best.1).abs() <= 2e-3, "{} vs {}", saddle.alpha, best.1);
        assert!((saddle.beta - best.2).abs() <= 2e-3, "{} vs {}", saddle.beta, best.2);
        assert!((saddle.value - best.0).abs() <= 1e-4);
    }

    #[test]
    fn saddle_residual_at_optimizer() {
        let (ensemble, h) = fig2_setup(10_000, 55);
        let (delta, _, sigma_v2, rho) = FIG2;
        let obj = SaddleObjective::new(&ensemble, &h, delta, sigma_v2, rho);
        let cfg = PredictionConfig {
            particles: 10_000,
            ..PredictionConfig::default()
        };
        let sp = solve_saddle(&ensemble, &h, delta, sigma_v2, rho, &cfg).unwrap();
        let d = 10.0 * cfg.search_tol;
        assert!(obj.value(sp.alpha - d, sp.beta) >= sp.value - 1e-8);
        assert!(obj.value(sp.alpha + d, sp.beta) >= sp.value - 1e-8);
        assert!(obj.value(sp.alpha, sp.beta - d) <= sp.value + 1e-8);
        assert!(obj.value(sp.alpha, sp.beta + d) <= sp.value + 1e-8);
    }

    #[test]
    fn boundary_hit_is_reported_and_widening_recovers() {
        let (ensemble, h) = fig2_setup(2_000, 56);
        let (delta, _, sigma_v2, rho) = FIG2;
        let narrow = PredictionConfig {
            particles: 2_000,
            alpha_range: (1e-4, 0.05), // true optimizer sits well above this
            ..PredictionConfig::default()
        };
        let err = solve_saddle(&ensemble, &h, delta, sigma_v2, rho, &narrow).unwrap_err();
        assert!(matches!(err, PredictionError::OptimumAtBoundary { .. }));

        let widened = solve_saddle_widened(&ensemble, &h, delta, sigma_v2, rho, &narrow).unwrap();
        let free = PredictionConfig {
            particles: 2_000,
            ..PredictionConfig::default()
        };
        let reference = solve_saddle(&ensemble, &h, delta, sigma_v2, rho, &free).unwrap();
        assert!((widened.alpha - reference.alpha).abs() < 1e-4);
    }

    #[test]
    fn evolve_matches_rewritten_form_per_particle() {
        let (mut ensemble, h) = fig2_setup(500, 57);
        let (delta, _, sigma_v2, rho) = FIG2;
        let cfg = PredictionConfig {
            particles: 500,
            ..PredictionConfig::default()
        };
        let saddle = solve_saddle(&ensemble, &h, delta, sigma_v2, rho, &cfg).unwrap();
        let before = ensemble.clone();
        evolve(&mut ensemble, &saddle, &h, SeparableRegularizer::L1, 0.1, rho, delta);
        let q = saddle.beta * delta.sqrt() / saddle.alpha;
        for i in 0..500 {
            let rewritten = (q * before.x[i] + saddle.beta * h[i]
                + rho * (before.z[i] - before.w[i]))
                / (q + rho);
            let rel = (ensemble.s[i] - rewritten).abs() / rewritten.abs().max(1e-12);
            assert!(rel < 1e-12, "particle {i}: {} vs {rewritten}", ensemble.s[i]);
            // Dual identity, bitwise: the update computes w + (s - z).
            assert_eq!(
                ensemble.w[i],
                before.w[i] + (ensemble.s[i] - ensemble.z[i])
            );
        }
        assert_eq!(ensemble.k, 1);
    }

    #[test]
    fn evolve_with_vanishing_penalty_collapses_dual() {
        let (mut ensemble, h) = fig2_setup(1_000, 58);
        let (delta, _, sigma_v2, rho) = FIG2;
        let cfg = PredictionConfig {
            particles: 1_000,
            ..PredictionConfig::default()
        };
        for _ in 0..3 {
            let saddle = solve_saddle(&ensemble, &h, delta, sigma_v2, rho, &cfg).unwrap();
            evolve(&mut ensemble, &saddle, &h, SeparableRegularizer::L1, 1e-14, rho, delta);
            assert!(ensemble.w.iter().all(|&w| w.abs() < 1e-10));
        }
    }

    #[test]
    fn evolve_box_keeps_split_variable_feasible() {
        let mut rng = stream_rng(59, 0);
        let mut ensemble = init_ensemble(SignalPrior::BinaryPm1, 1_000, &mut rng);
        let mut h = vec![0.0; 1_000];
        fill_standard_normal(&mut h, &mut rng);
        let cfg = PredictionConfig {
            particles: 1_000,
            ..PredictionConfig::default()
        };
        for _ in 0..4 {
            let saddle = solve_saddle(&ensemble, &h, 0.8, 0.04, 0.1, &cfg).unwrap();
            evolve(
                &mut ensemble,
                &saddle,
                &h,
                SeparableRegularizer::BoxIndicator,
                1.0,
                0.1,
                0.8,
            );
            assert!(ensemble.z.iter().all(|&z| (-1.0..=1.0).contains(&z)));
        }
    }

    #[test]
    fn predicted_ser_cases() {
        let mut ens = init_ensemble(SignalPrior::BinaryPm1, 10_000, &mut stream_rng(60, 0));
        // k = 0: S = 0 and sign(0) = +1, so every X = -1 particle mismatches.
        let at_init = predicted_ser(&ens).unwrap();
        assert!((at_init - 0.5).abs() < 0.03, "ser {at_init}");
        ens.s.copy_from_slice(&ens.x);
        assert_eq!(predicted_ser(&ens).unwrap(), 0.0);
        for (s, x) in ens.s.iter_mut().zip(&ens.x) {
            *s = -x;
        }
        assert_eq!(predicted_ser(&ens).unwrap(), 1.0);

        let sparse = init_ensemble(
            SignalPrior::bernoulli_gaussian(0.5).unwrap(),
            100,
            &mut stream_rng(61, 0),
        );
        assert_eq!(
            predicted_ser(&sparse).unwrap_err(),
            PredictionError::NonBinaryPrior
        );
    }

    #[test]
    fn predicted_cdf_is_monotone_with_correct_tails() {
        let mut ens = init_ensemble(SignalPrior::BinaryPm1, 1_000, &mut stream_rng(62, 0));
        ens.s.copy_from_slice(&ens.x);
        let grid: Vec<f64> = (0..61).map(|i| -1.5 + 0.05 * i as f64).collect();
        let cdf = predicted_cdf(&ens, &grid).unwrap();
        assert_eq!(cdf[0], 0.0);
        assert_eq!(*cdf.last().unwrap(), 1.0);
        assert!(cdf.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn corollary_and_ensemble_mse_are_consistent() {
        // At the exact saddle the stationarity condition in alpha forces
        // mean((S - X)^2) = alpha^2 - sigma_v^2; tolerance covers the search
        // bracket. Checked along the sparse-recovery reference regime.
        let (delta, p0, sigma_v2, rho) = FIG2;
        let prior = SignalPrior::bernoulli_gaussian(p0).unwrap();
        let cfg = PredictionConfig {
            particles: 100_000,
            seed: 63,
            ..PredictionConfig::default()
        };
        let traj = predict_trajectory(
            prior,
            SeparableRegularizer::L1,
            0.1,
            delta,
            sigma_v2,
            rho,
            12,
            &cfg,
        )
        .unwrap();
        assert_eq!(traj.records.len(), 12);
        for r in &traj.records {
            let rel = (r.mse_ensemble - r.mse_corollary_raw).abs()
                / r.mse_corollary_raw.abs().max(1e-6);
            assert!(rel <= 0.03, "k {} rel {rel}", r.k);
            assert!(r.mse_corollary >= 0.0);
        }
    }

    #[test]
    fn trajectory_is_deterministic_given_seed() {
        let prior = SignalPrior::bernoulli_gaussian(0.8).unwrap();
        let cfg = PredictionConfig {
            particles: 5_000,
            seed: 64,
            ..PredictionConfig::default()
        };
        let run = |cfg: &PredictionConfig| {
            predict_trajectory(
                prior,
                SeparableRegularizer::L1,
                0.1,
                0.9,
                0.001,
                0.1,
                6,
                cfg,
            )
            .unwrap()
        };
        let a = run(&cfg);
        let b = run(&cfg);
        for (ra, rb) in a.records.iter().zip(&b.records) {
            assert_eq!(ra.alpha.to_bits(), rb.alpha.to_bits());
            assert_eq!(ra.beta.to_bits(), rb.beta.to_bits());
            assert_eq!(ra.mse_ensemble.to_bits(), rb.mse_ensemble.to_bits());
        }
    }

    #[test]
    fn halving_particles_moves_alpha_little() {
        let prior = SignalPrior::bernoulli_gaussian(0.8).unwrap();
        let mut alphas = Vec::new();
        for particles in [20_000, 10_000] {
            let cfg = PredictionConfig {
                particles,
                seed: 65,
                ..PredictionConfig::default()
            };
            let traj = predict_trajectory(
                prior,
                SeparableRegularizer::L1,
                0.1,
                0.9,
                0.001,
                0.1,
                5,
                &cfg,
            )
            .unwrap();
            alphas.push(traj.records.iter().map(|r| r.alpha).collect::<Vec<_>>());
        }
        for (a, b) in alphas[0].iter().zip(&alphas[1]) {
            assert!((a - b).abs() <= 0.1, "{a} vs {b}");
        }
    }

    #[test]
    fn fixed_h_mode_runs_and_differs_from_fresh() {
        let prior = SignalPrior::bernoulli_gaussian(0.8).unwrap();
        let base = PredictionConfig {
            particles: 5_000,
            seed: 66,
            fresh_h: true,
            ..PredictionConfig::default()
        };
        let fixed = PredictionConfig {
            fresh_h: false,
            ..base.clone()
        };
        let run = |cfg: &PredictionConfig| {
            predict_trajectory(
                prior,
                SeparableRegularizer::L1,
                0.1,
                0.9,
                0.001,
                0.1,
                4,
                cfg,
            )
            .unwrap()
        };
        let fresh_traj = run(&base);
        let fixed_traj = run(&fixed);
        // First iteration consumes the same draws, later ones diverge.
        assert_eq!(
            fresh_traj.records[0].alpha.to_bits(),
            fixed_traj.records[0].alpha.to_bits()
        );
        assert_ne!(fresh_traj.records[3].alpha, fixed_traj.records[3].alpha);
    }

    #[test]
    fn snapshots_recorded_only_at_requested_iterations() {
        let prior = SignalPrior::BinaryPm1;
        let cfg = PredictionConfig {
            particles: 1_000,
            seed: 67,
            snapshot_iters: vec![2],
            ..PredictionConfig::default()
        };
        let traj = predict_trajectory(
            prior,
            SeparableRegularizer::BoxIndicator,
            1.0,
            0.8,
            0.04,
            0.1,
            3,
            &cfg,
        )
        .unwrap();
        assert!(traj.records[0].snapshot.is_none());
        assert!(traj.records[1].snapshot.is_some());
        assert!(traj.records[2].snapshot.is_none());
    }
}
