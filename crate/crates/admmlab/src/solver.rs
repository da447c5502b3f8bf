//! Empirical ADMM for `min_s 0.5 ||y - A s||^2 + lambda f(s)`.
//!
//! The quadratic subproblem is solved through a factorization of
//! `A^T A + rho I` cached once per `(A, rho)`; in the compressed-sensing
//! regime `M < N` the matrix-inversion identity moves the factorization to
//! the smaller `A A^T + rho I` system. Iterations run a fixed budget with no
//! early stopping so empirical and predicted trajectories stay aligned.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use thiserror::Error;

use crate::model::{self, ProblemInstance};
use crate::regularizer::SeparableRegularizer;

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error("matrix contains non-finite entries")]
    NonFiniteMatrix,
    #[error("factorization of the regularized normal matrix failed")]
    FactorizationFailed,
    #[error("invalid ADMM configuration: {0}")]
    InvalidConfig(String),
}

/// Fixed parameters of one ADMM run.
#[derive(Debug, Clone)]
pub struct AdmmConfig {
    /// Augmented-Lagrangian parameter, `> 0`.
    pub rho: f64,
    /// Regularization weight, `> 0` (any value acts as identity for the
    /// box indicator).
    pub lambda: f64,
    pub max_iter: usize,
    /// Store an `s` snapshot per iteration for distribution comparisons.
    pub record_estimates: bool,
}

impl AdmmConfig {
    pub fn new(rho: f64, lambda: f64, max_iter: usize) -> Result<Self, SolverError> {
        let cfg = AdmmConfig {
            rho,
            lambda,
            max_iter,
            record_estimates: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(SolverError::InvalidConfig(format!("rho = {}", self.rho)));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(SolverError::InvalidConfig(format!("lambda = {}", self.lambda)));
        }
        Ok(())
    }
}

/// Iterate triple `(s, z, w)`; starts from `z = w = 0`.
#[derive(Debug, Clone)]
pub struct AdmmState {
    pub s: DVector<f64>,
    pub z: DVector<f64>,
    pub w: DVector<f64>,
    pub k: usize,
}

impl AdmmState {
    pub fn zero(n: usize) -> Self {
        AdmmState {
            s: DVector::zeros(n),
            z: DVector::zeros(n),
            w: DVector::zeros(n),
            k: 0,
        }
    }
}

/// Which system gets factorized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorizationPath {
    /// `M x M` path when `M < N`, otherwise direct.
    Auto,
    /// Factor `A^T A + rho I` (`N x N`).
    Direct,
    /// Factor `A A^T + rho I` (`M x M`) and apply the inversion identity.
    Woodbury,
}

#[derive(Debug)]
enum Factors {
    Direct(Cholesky<f64, Dyn>),
    Woodbury { chol: Cholesky<f64, Dyn>, a: DMatrix<f64> },
}

/// Cached solver for `(A^T A + rho I) u = b`.
#[derive(Debug)]
pub struct CachedSolver {
    n: usize,
    rho: f64,
    factors: Factors,
}

impl CachedSolver {
    /// Solve `(A^T A + rho I) u = b`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        assert_eq!(b.len(), self.n, "right-hand side has wrong dimension");
        match &self.factors {
            Factors::Direct(chol) => chol.solve(b),
            Factors::Woodbury { chol, a } => {
                // (A^T A + rho I)^-1 = (I - A^T (A A^T + rho I)^-1 A) / rho
                let ab = a * b;
                let t = chol.solve(&ab);
                (b - a.tr_mul(&t)) / self.rho
            }
        }
    }

    pub fn dimension(&self) -> usize {
        self.n
    }
}

/// Factor the regularized normal matrix once for a given `(A, rho)`.
pub fn prepare(a: &DMatrix<f64>, rho: f64) -> Result<CachedSolver, SolverError> {
    prepare_with(a, rho, FactorizationPath::Auto)
}

/// [`prepare`] with an explicit factorization path (used to cross-check the
/// two routes against each other).
pub fn prepare_with(
    a: &DMatrix<f64>,
    rho: f64,
    path: FactorizationPath,
) -> Result<CachedSolver, SolverError> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(SolverError::InvalidConfig(format!("rho = {rho}")));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(SolverError::NonFiniteMatrix);
    }
    let (m, n) = a.shape();
    let woodbury = match path {
        FactorizationPath::Auto => m < n,
        FactorizationPath::Direct => false,
        FactorizationPath::Woodbury => true,
    };
    let factors = if woodbury {
        let mut gram = a * a.transpose();
        for i in 0..m {
            gram[(i, i)] += rho;
        }
        let chol = gram.cholesky().ok_or(SolverError::FactorizationFailed)?;
        Factors::Woodbury { chol, a: a.clone() }
    } else {
        let mut gram = a.tr_mul(a);
        for i in 0..n {
            gram[(i, i)] += rho;
        }
        let chol = gram.cholesky().ok_or(SolverError::FactorizationFailed)?;
        Factors::Direct(chol)
    };
    Ok(CachedSolver { n, rho, factors })
}

/// One ADMM update from `state`, returning the next state.
pub fn admm_step(
    state: &AdmmState,
    instance: &ProblemInstance,
    config: &AdmmConfig,
    reg: SeparableRegularizer,
    solver: &CachedSolver,
) -> AdmmState {
    let aty = instance.a.tr_mul(&instance.y);
    step_with_aty(state, &aty, config, reg, solver)
}

fn step_with_aty(
    state: &AdmmState,
    aty: &DVector<f64>,
    config: &AdmmConfig,
    reg: SeparableRegularizer,
    solver: &CachedSolver,
) -> AdmmState {
    assert_eq!(state.z.len(), solver.dimension(), "state/solver dimension mismatch");
    let rhs = aty + config.rho * (&state.z - &state.w);
    let s = solver.solve(&rhs);
    let level = config.lambda / config.rho;
    let sw = &s + &state.w;
    let z = DVector::from_vec(reg.prox_vector(level, sw.as_slice()));
    let w = &state.w + (&s - &z);
    AdmmState {
        s,
        z,
        w,
        k: state.k + 1,
    }
}

/// Metrics of one recorded iteration. `mse`/`ser` follow the tentative
/// estimate `s`; the `z`-based values are kept alongside because the split
/// variable is what sign decisions would naturally use in the box case.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub k: usize,
    pub mse: f64,
    pub mse_z: f64,
    pub ser: Option<f64>,
    pub ser_z: Option<f64>,
    /// `||s - z||_2 / sqrt(N)`.
    pub primal_residual: f64,
    /// Composite objective evaluated at `z`.
    pub objective: f64,
    pub estimate: Option<Vec<f64>>,
}

/// Per-iteration records of one run; one entry per executed iteration.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub records: Vec<IterationRecord>,
}

impl Trajectory {
    pub fn mse_series(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.mse).collect()
    }
}

/// Composite objective `0.5 ||y - A s||^2 + lambda f(s)`.
pub fn objective(
    instance: &ProblemInstance,
    reg: SeparableRegularizer,
    lambda: f64,
    s: &DVector<f64>,
) -> f64 {
    let resid = &instance.y - &instance.a * s;
    0.5 * resid.norm_squared() + lambda * reg.penalty_value(s.as_slice())
}

/// Run `max_iter` ADMM iterations from `z = w = 0`, recording metrics at
/// every iteration.
pub fn run(
    instance: &ProblemInstance,
    config: &AdmmConfig,
    reg: SeparableRegularizer,
) -> Result<Trajectory, SolverError> {
    config.validate()?;
    let solver = prepare(&instance.a, config.rho)?;
    let aty = instance.a.tr_mul(&instance.y);
    let binary = instance.x.iter().all(|&v| v == 1.0 || v == -1.0);
    let sqrt_n = (instance.n as f64).sqrt();

    let mut state = AdmmState::zero(instance.n);
    let mut trajectory = Trajectory::default();
    for _ in 0..config.max_iter {
        state = step_with_aty(&state, &aty, config, reg, &solver);

        #[cfg(debug_assertions)]
        if state.k == 1 {
            check_rewritten_update(&state, instance, &solver);
        }

        let x = instance.x.as_slice();
        let record = IterationRecord {
            k: state.k,
            mse: model::mse(state.s.as_slice(), x).expect("dimensions fixed per run"),
            mse_z: model::mse(state.z.as_slice(), x).expect("dimensions fixed per run"),
            ser: binary.then(|| model::ser(state.s.as_slice(), x).expect("binary checked")),
            ser_z: binary.then(|| model::ser(state.z.as_slice(), x).expect("binary checked")),
            primal_residual: (&state.s - &state.z).norm() / sqrt_n,
            objective: objective(instance, reg, config.lambda, &state.z),
            estimate: config.record_estimates.then(|| state.s.as_slice().to_vec()),
        };
        trajectory.records.push(record);
    }
    Ok(trajectory)
}

// The s-update can be rewritten with y expanded into A x + v; both forms
// must produce the same vector from the initial state.
#[cfg(debug_assertions)]
fn check_rewritten_update(state: &AdmmState, instance: &ProblemInstance, solver: &CachedSolver) {
    let ax = &instance.a * &instance.x;
    // z0 = w0 = 0, so the rho (z - w) term drops out at the first step.
    let rhs = instance.a.tr_mul(&ax) + instance.a.tr_mul(&instance.v);
    let rewritten = solver.solve(&rhs);
    let diff = (&rewritten - &state.s).norm() / state.s.norm().max(1e-300);
    debug_assert!(diff < 1e-8, "rewritten s-update deviates: {diff}");
}
