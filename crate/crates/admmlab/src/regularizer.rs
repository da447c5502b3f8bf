//! Separable convex regularizers with elementwise proximity operators.
//!
//! Both the vector-valued ADMM solver and the scalar prediction process call
//! the same scalar prox; the vector form is derived coordinatewise so the two
//! sides cannot drift apart.

/// Soft threshold: `sign(r) * max(|r| - gamma, 0)`.
pub fn prox_l1(gamma: f64, r: f64) -> f64 {
    debug_assert!(gamma > 0.0);
    if r > gamma {
        r - gamma
    } else if r < -gamma {
        r + gamma
    } else {
        0.0
    }
}

/// Projection onto `[-1, 1]`; independent of `gamma`.
pub fn prox_box(gamma: f64, r: f64) -> f64 {
    debug_assert!(gamma > 0.0);
    r.clamp(-1.0, 1.0)
}

/// A convex penalty of the form `f(s) = sum_n f(s_n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeparableRegularizer {
    /// Absolute value per coordinate (the l1 norm in vector form).
    L1,
    /// Indicator of `[-1, 1]` per coordinate (box constraint).
    BoxIndicator,
}

impl SeparableRegularizer {
    /// Scalar penalty value; `+inf` marks an infeasible coordinate.
    pub fn penalty(&self, s: f64) -> f64 {
        match self {
            SeparableRegularizer::L1 => s.abs(),
            SeparableRegularizer::BoxIndicator => {
                if (-1.0..=1.0).contains(&s) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// Scalar prox: the minimizer of `f(u) + (1/(2 gamma)) (u - r)^2`.
    pub fn prox(&self, gamma: f64, r: f64) -> f64 {
        match self {
            SeparableRegularizer::L1 => prox_l1(gamma, r),
            SeparableRegularizer::BoxIndicator => prox_box(gamma, r),
        }
    }

    /// `sum_n f(s_n)`, reported without any multiplier.
    pub fn penalty_value(&self, s: &[f64]) -> f64 {
        s.iter().map(|&v| self.penalty(v)).sum()
    }

    /// Coordinatewise prox.
    pub fn prox_vector(&self, gamma: f64, r: &[f64]) -> Vec<f64> {
        r.iter().map(|&v| self.prox(gamma, v)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn l1_closed_form_cases() {
        assert_eq!(prox_l1(0.5, 1.2), 0.7);
        assert_eq!(prox_l1(0.5, -0.3), 0.0);
        assert_eq!(prox_l1(2.0, -5.0), -3.0);
    }

    #[test]
    fn box_closed_form_cases() {
        assert_eq!(prox_box(1.0, 1.5), 1.0);
        assert_eq!(prox_box(0.3, -2.0), -1.0);
        assert_eq!(prox_box(7.0, 0.37), 0.37);
    }

    #[test]
    fn penalty_values() {
        assert_eq!(SeparableRegularizer::L1.penalty_value(&[1.0, -2.0, 0.0]), 3.0);
        assert_eq!(
            SeparableRegularizer::BoxIndicator.penalty_value(&[0.5, -1.0]),
            0.0
        );
        assert_eq!(
            SeparableRegularizer::BoxIndicator.penalty_value(&[1.01]),
            f64::INFINITY
        );
    }

    #[test]
    fn prox_vector_matches_scalar_cases() {
        let l1 = SeparableRegularizer::L1.prox_vector(0.5, &[1.2, -0.3]);
        assert_eq!(l1, vec![0.7, 0.0]);
        let boxed = SeparableRegularizer::BoxIndicator.prox_vector(3.0, &[2.0, -2.0, 0.0]);
        assert_eq!(boxed, vec![1.0, -1.0, 0.0]);
    }

    #[test]
    fn vanishing_penalty_prox_is_identity() {
        let r = [1.2, -0.3, 0.0, 8.5];
        let out = SeparableRegularizer::L1.prox_vector(1e-12, &r);
        for (a, b) in out.iter().zip(&r) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    // Independent oracle: grid search of f(u) + (1/(2 gamma)) (u - r)^2.
    fn grid_prox(reg: SeparableRegularizer, gamma: f64, r: f64) -> f64 {
        // |prox(r) - r| <= gamma * sup|f'| = gamma for L1; the box minimizer
        // lives in [-1, 1]. Either way this bracket contains it.
        let (lo, hi) = match reg {
            SeparableRegularizer::L1 => (r - gamma - 0.5, r + gamma + 0.5),
            SeparableRegularizer::BoxIndicator => (-1.0, 1.0),
        };
        let step = 1e-4;
        let steps = ((hi - lo) / step).ceil() as usize;
        let mut best = (f64::INFINITY, lo);
        for i in 0..=steps {
            let u = lo + i as f64 * step;
            let val = reg.penalty(u) + (u - r) * (u - r) / (2.0 * gamma);
            if val < best.0 {
                best = (val, u);
            }
        }
        best.1
    }

    #[test]
    fn prox_agrees_with_grid_oracle() {
        let mut rng = crate::rng::stream_rng(21, 0);
        for reg in [SeparableRegularizer::L1, SeparableRegularizer::BoxIndicator] {
            for _ in 0..1000 {
                let gamma = 0.05 + 1.95 * rng.random::<f64>();
                let r = -3.0 + 6.0 * rng.random::<f64>();
                let expected = grid_prox(reg, gamma, r);
                let got = reg.prox(gamma, r);
                assert!(
                    (got - expected).abs() < 1e-4,
                    "{reg:?} gamma={gamma} r={r}: {got} vs {expected}"
                );
            }
        }
    }

    proptest! {
        #[test]
        fn prox_is_nonexpansive(
            gamma in 1e-3..5.0f64,
            a in -10.0..10.0f64,
            b in -10.0..10.0f64,
        ) {
            for reg in [SeparableRegularizer::L1, SeparableRegularizer::BoxIndicator] {
                let d = (reg.prox(gamma, a) - reg.prox(gamma, b)).abs();
                prop_assert!(d <= (a - b).abs() + 1e-15);
            }
        }

        #[test]
        fn prox_is_monotone(
            gamma in 1e-3..5.0f64,
            a in -10.0..10.0f64,
            b in -10.0..10.0f64,
        ) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            for reg in [SeparableRegularizer::L1, SeparableRegularizer::BoxIndicator] {
                prop_assert!(reg.prox(gamma, lo) <= reg.prox(gamma, hi));
            }
        }

        #[test]
        fn prox_vector_commutes_with_permutation(
            gamma in 1e-3..5.0f64,
            r in proptest::collection::vec(-5.0..5.0f64, 1..20),
        ) {
            for reg in [SeparableRegularizer::L1, SeparableRegularizer::BoxIndicator] {
                let forward = reg.prox_vector(gamma, &r);
                let mut reversed: Vec<f64> = r.clone();
                reversed.reverse();
                let mut back = reg.prox_vector(gamma, &reversed);
                back.reverse();
                prop_assert_eq!(&forward, &back);
            }
        }
    }
}
