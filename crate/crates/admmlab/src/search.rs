//! One-dimensional ternary search and the nested min-max search built on it.
//!
//! Ternary search assumes unimodality on the bracket; the prediction
//! objective is convex in `alpha` after maximizing out `beta` and concave in
//! `beta` for fixed `alpha`, so both levels qualify.

/// Minimize a unimodal function on `[lo, hi]` down to bracket width `tol`.
/// Returns `(argmin, value)`.
pub fn ternary_min<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    assert!(lo < hi && tol > 0.0);
    while hi - lo > tol {
        let third = (hi - lo) / 3.0;
        let m1 = lo + third;
        let m2 = hi - third;
        if f(m1) <= f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let mid = 0.5 * (lo + hi);
    (mid, f(mid))
}

/// Maximize a unimodal function on `[lo, hi]`; see [`ternary_min`].
pub fn ternary_max<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let (arg, neg) = ternary_min(|x| -f(x), lo, hi, tol);
    (arg, -neg)
}

/// Result of a nested min-max search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleCandidate {
    pub alpha: f64,
    pub beta: f64,
    pub value: f64,
}

/// Nested ternary search for `min_alpha max_beta f(alpha, beta)`.
///
/// The inner maximization is solved to `tol` before every outer evaluation,
/// matching the min-max order of the objective. No boundary diagnostics are
/// done here; callers decide whether a near-boundary optimizer is an error.
pub fn saddle_point<F: Fn(f64, f64) -> f64>(
    f: F,
    alpha_range: (f64, f64),
    beta_range: (f64, f64),
    tol: f64,
) -> SaddleCandidate {
    let inner_max = |alpha: f64| ternary_max(|beta| f(alpha, beta), beta_range.0, beta_range.1, tol);
    let (alpha, _) = ternary_min(|a| inner_max(a).1, alpha_range.0, alpha_range.1, tol);
    let (beta, value) = inner_max(alpha);
    SaddleCandidate { alpha, beta, value }
}
