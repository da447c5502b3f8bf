//! Random instances, signal priors, and the error metrics shared by the
//! empirical solver and the prediction engine.
//!
//! An instance is one realization of `y = A x + v` with `A` drawn from a
//! zero-mean ensemble normalized to entry variance `1/N` and `v` i.i.d.
//! Gaussian noise. Everything is deterministic given a seeded RNG.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("p0 must lie strictly inside (0, 1), got {0}")]
    InvalidZeroProbability(f64),
    #[error("requested {m} = round(delta * n) measurements; need at least 1")]
    EmptyMeasurement { m: usize },
    #[error("noise variance must be nonnegative, got {0}")]
    NegativeNoiseVariance(f64),
    #[error("vector lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("reference signal must have entries in {{+1, -1}}")]
    NotBinary,
    #[error("empty sample")]
    EmptySample,
    #[error("grid must be strictly increasing")]
    InvalidGrid,
}

/// Distribution of the entries of the unknown signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SignalPrior {
    /// Mass `p0` at exactly zero, otherwise a standard Gaussian draw.
    BernoulliGaussian { p0: f64 },
    /// `+1` or `-1` with equal probability.
    BinaryPm1,
}

impl SignalPrior {
    /// Sparse prior with zero-probability `p0 in (0, 1)`.
    pub fn bernoulli_gaussian(p0: f64) -> Result<Self, ModelError> {
        if !(p0 > 0.0 && p0 < 1.0) {
            return Err(ModelError::InvalidZeroProbability(p0));
        }
        Ok(SignalPrior::BernoulliGaussian { p0 })
    }

    /// One draw from the prior.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            SignalPrior::BernoulliGaussian { p0 } => {
                if rng.random::<f64>() < p0 {
                    0.0
                } else {
                    rng.sample(StandardNormal)
                }
            }
            SignalPrior::BinaryPm1 => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }
}

/// Distribution of the measurement-matrix entries (always variance `1/N`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixEnsemble {
    /// i.i.d. Gaussian, mean 0, variance `1/N`.
    GaussianIid,
    /// Uniform on `{+1/sqrt(N), -1/sqrt(N)}`.
    BernoulliPm,
}

/// One realization of the measurement model `y = A x + v`.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub x: DVector<f64>,
    pub a: DMatrix<f64>,
    pub v: DVector<f64>,
    pub y: DVector<f64>,
    pub n: usize,
    pub m: usize,
    /// Measurement ratio `m / n`.
    pub delta: f64,
    pub sigma_v2: f64,
}

/// i.i.d. signal vector of length `n`.
pub fn sample_signal<R: Rng + ?Sized>(prior: SignalPrior, n: usize, rng: &mut R) -> DVector<f64> {
    assert!(n >= 1, "signal length must be positive");
    DVector::from_fn(n, |_, _| prior.sample(rng))
}

/// `m x n` measurement matrix with i.i.d. entries of variance `1/n`.
pub fn sample_matrix<R: Rng + ?Sized>(
    ensemble: MatrixEnsemble,
    m: usize,
    n: usize,
    rng: &mut R,
) -> DMatrix<f64> {
    assert!(m >= 1 && n >= 1, "matrix dimensions must be positive");
    let scale = 1.0 / (n as f64).sqrt();
    // Row-major fill so the draw order is independent of the storage layout.
    let mut a = DMatrix::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            a[(i, j)] = match ensemble {
                MatrixEnsemble::GaussianIid => {
                    let g: f64 = rng.sample(StandardNormal);
                    g * scale
                }
                MatrixEnsemble::BernoulliPm => {
                    if rng.random::<bool>() {
                        scale
                    } else {
                        -scale
                    }
                }
            };
        }
    }
    a
}

/// Draw a full instance: `m = round(delta * n)`, `v ~ N(0, sigma_v2 I)`,
/// `y = A x + v`.
pub fn generate_instance<R: Rng + ?Sized>(
    prior: SignalPrior,
    ensemble: MatrixEnsemble,
    n: usize,
    delta: f64,
    sigma_v2: f64,
    rng: &mut R,
) -> Result<ProblemInstance, ModelError> {
    let m = (delta * n as f64).round() as usize;
    if m < 1 {
        return Err(ModelError::EmptyMeasurement { m });
    }
    if sigma_v2 < 0.0 {
        return Err(ModelError::NegativeNoiseVariance(sigma_v2));
    }
    let x = sample_signal(prior, n, rng);
    let a = sample_matrix(ensemble, m, n, rng);
    let sigma_v = sigma_v2.sqrt();
    let v = DVector::from_fn(m, |_, _| {
        let g: f64 = rng.sample(StandardNormal);
        g * sigma_v
    });
    let y = &a * &x + &v;
    Ok(ProblemInstance {
        x,
        a,
        v,
        y,
        n,
        m,
        delta: m as f64 / n as f64,
        sigma_v2,
    })
}

/// Mean-square error `(1/N) * sum (s_n - x_n)^2`.
pub fn mse(s: &[f64], x: &[f64]) -> Result<f64, ModelError> {
    if s.len() != x.len() {
        return Err(ModelError::LengthMismatch(s.len(), x.len()));
    }
    let sum: f64 = s.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sum / s.len() as f64)
}

/// Sign with the `sign(0) = +1` convention used throughout the crate.
pub fn sign_plus(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Symbol error rate: fraction of `sign(s_n) != x_n` against a `{+1,-1}`
/// reference.
pub fn ser(s: &[f64], x: &[f64]) -> Result<f64, ModelError> {
    if s.len() != x.len() {
        return Err(ModelError::LengthMismatch(s.len(), x.len()));
    }
    if x.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(ModelError::NotBinary);
    }
    let errors = s
        .iter()
        .zip(x)
        .filter(|(&sv, &xv)| sign_plus(sv) != xv)
        .count();
    Ok(errors as f64 / s.len() as f64)
}

/// Empirical CDF `P(t) = (1/N) * #{ v_n < t }` evaluated on a strictly
/// increasing grid.
pub fn empirical_cdf(values: &[f64], grid: &[f64]) -> Result<Vec<f64>, ModelError> {
    if values.is_empty() {
        return Err(ModelError::EmptySample);
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ModelError::InvalidGrid);
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    Ok(grid
        .iter()
        .map(|&t| sorted.partition_point(|&v| v < t) as f64 / n)
        .collect())
}

/// Exact two-sample Kolmogorov-Smirnov distance.
pub fn ks_distance(a: &[f64], b: &[f64]) -> Result<f64, ModelError> {
    if a.is_empty() || b.is_empty() {
        return Err(ModelError::EmptySample);
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_unstable_by(|x, y| x.total_cmp(y));
    sb.sort_unstable_by(|x, y| x.total_cmp(y));
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < sa.len() && j < sb.len() {
        let t = sa[i].min(sb[j]);
        while i < sa.len() && sa[i] <= t {
            i += 1;
        }
        while j < sb.len() && sb[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}
