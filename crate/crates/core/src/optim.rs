//! Plain SGD for the classical parameters and Adadelta for the quantum ones.

use crate::error::{Error, Result};

fn check_lengths(params: &[f64], grads: &[f64]) -> Result<()> {
    if params.len() != grads.len() {
        return Err(Error::shape(format!(
            "{} parameters but {} gradients",
            params.len(),
            grads.len()
        )));
    }
    Ok(())
}

/// Defaults to a rate of 0.1. The loss carries a `1/10` class-count factor, so
/// this equals a 0.01 step on the conventional cross-entropy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SgdConfig {
    pub learning_rate: f64,
}

impl SgdConfig {
    /// A zero rate is accepted so a step can be made a no-op.
    pub fn new(learning_rate: f64) -> Result<Self> {
        if !(learning_rate.is_finite() && learning_rate >= 0.0) {
            return Err(Error::Config(format!("invalid SGD learning rate {learning_rate}")));
        }
        Ok(SgdConfig { learning_rate })
    }
}

impl Default for SgdConfig {
    fn default() -> Self {
        SgdConfig {
            learning_rate: 0.1,
        }
    }
}

/// `params ← params − lr·grads`.
pub fn sgd_step(params: &mut [f64], grads: &[f64], config: &SgdConfig) -> Result<()> {
    check_lengths(params, grads)?;
    for (p, g) in params.iter_mut().zip(grads) {
        *p -= config.learning_rate * g;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdadeltaConfig {
    pub rho: f64,
    pub epsilon: f64,
    pub lr_scale: f64,
}

impl AdadeltaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::Config(format!("adadelta rho {} not in (0, 1)", self.rho)));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::Config(format!("adadelta epsilon {} must be > 0", self.epsilon)));
        }
        if !(self.lr_scale.is_finite() && self.lr_scale >= 0.0) {
            return Err(Error::Config(format!("adadelta lr scale {} must be ≥ 0", self.lr_scale)));
        }
        Ok(())
    }
}

impl Default for AdadeltaConfig {
    fn default() -> Self {
        AdadeltaConfig {
            rho: 0.95,
            epsilon: 1e-6,
            lr_scale: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdadeltaState {
    pub config: AdadeltaConfig,
    /// Running average of squared gradients.
    pub accum_grad_sq: Vec<f64>,
    /// Running average of squared updates.
    pub accum_update_sq: Vec<f64>,
}

impl AdadeltaState {
    pub fn new(config: AdadeltaConfig, num_params: usize) -> Result<Self> {
        config.validate()?;
        Ok(AdadeltaState {
            config,
            accum_grad_sq: vec![0.0; num_params],
            accum_update_sq: vec![0.0; num_params],
        })
    }

    /// One Adadelta update per coordinate:
    ///
    /// ```text
    /// E[g²] ← ρ·E[g²] + (1−ρ)·g²
    /// Δ     = −√(E[Δ²] + ε) / √(E[g²] + ε) · g
    /// E[Δ²] ← ρ·E[Δ²] + (1−ρ)·Δ²
    /// θ     ← θ + lr_scale·Δ
    /// ```
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        check_lengths(params, grads)?;
        if self.accum_grad_sq.len() != params.len() {
            return Err(Error::shape(format!(
                "adadelta state sized for {} parameters, got {}",
                self.accum_grad_sq.len(),
                params.len()
            )));
        }
        let AdadeltaConfig {
            rho,
            epsilon,
            lr_scale,
        } = self.config;
        for (((p, &g), eg), ed) in params
            .iter_mut()
            .zip(grads)
            .zip(&mut self.accum_grad_sq)
            .zip(&mut self.accum_update_sq)
        {
            *eg = rho * *eg + (1.0 - rho) * g * g;
            let delta = -((*ed + epsilon).sqrt() / (*eg + epsilon).sqrt()) * g;
            *ed = rho * *ed + (1.0 - rho) * delta * delta;
            *p += lr_scale * delta;
        }
        Ok(())
    }
}

pub fn adadelta_step(params: &mut [f64], grads: &[f64], state: &mut AdadeltaState) -> Result<()> {
    state.step(params, grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sgd_examples() {
        let cfg = SgdConfig::new(0.1).unwrap();
        let mut p = [1.0];
        sgd_step(&mut p, &[0.5], &cfg).unwrap();
        assert!((p[0] - 0.95).abs() < 1e-15);

        let mut p = [0.3, -2.0];
        sgd_step(&mut p, &[0.0, 0.0], &cfg).unwrap();
        assert_eq!(p, [0.3, -2.0]);

        let mut p = [1.0];
        sgd_step(&mut p, &[0.25], &cfg).unwrap();
        sgd_step(&mut p, &[0.25], &cfg).unwrap();
        assert!((p[0] - (1.0 - 2.0 * 0.1 * 0.25)).abs() < 1e-15);

        assert!(matches!(sgd_step(&mut p, &[1.0, 2.0], &cfg), Err(Error::Shape(_))));
        assert!(SgdConfig::new(f64::NAN).is_err());
        assert!(SgdConfig::new(-1.0).is_err());
    }

    #[test]
    fn adadelta_zero_grads_decay_accumulators() {
        let mut s = AdadeltaState::new(AdadeltaConfig::default(), 2).unwrap();
        s.accum_grad_sq = vec![1.0, 2.0];
        s.accum_update_sq = vec![0.5, 0.25];
        let mut p = [0.7, -0.1];
        s.step(&mut p, &[0.0, 0.0]).unwrap();
        assert_eq!(p, [0.7, -0.1]);
        assert_eq!(s.accum_grad_sq, vec![0.95, 1.9]);
        assert_eq!(s.accum_update_sq, vec![0.95 * 0.5, 0.95 * 0.25]);
    }

    #[test]
    fn adadelta_first_step_by_hand() {
        let mut s = AdadeltaState::new(AdadeltaConfig::default(), 1).unwrap();
        let mut p = [0.0];
        s.step(&mut p, &[1.0]).unwrap();
        // E[g²] = 0.05, Δ = −√1e-6 / √0.050001
        assert!((s.accum_grad_sq[0] - 0.05).abs() < 1e-15);
        let expected = -(1e-6f64).sqrt() / (0.05f64 + 1e-6).sqrt();
        assert!((p[0] - expected).abs() < 1e-15);
        assert!((p[0] + 0.004_472_1).abs() < 1e-7);
    }

    #[test]
    fn adadelta_is_self_normalizing() {
        let first = |g: f64| {
            let mut s = AdadeltaState::new(AdadeltaConfig::default(), 1).unwrap();
            let mut p = [0.0];
            s.step(&mut p, &[g]).unwrap();
            p[0]
        };
        let base = first(0.3);
        for c in [2.0, 10.0, 100.0] {
            assert!(first(0.3 * c).abs() < c * base.abs());
        }
    }

    #[test]
    fn adadelta_large_epsilon_limit() {
        let cfg = AdadeltaConfig {
            epsilon: 1e6,
            ..AdadeltaConfig::default()
        };
        let mut s = AdadeltaState::new(cfg, 1).unwrap();
        let mut p = [0.0];
        s.step(&mut p, &[0.8]).unwrap();
        assert!((p[0] - (-0.8)).abs() / 0.8 < 1e-3);
    }

    #[test]
    fn adadelta_state_length_checked() {
        let mut s = AdadeltaState::new(AdadeltaConfig::default(), 3).unwrap();
        assert!(s.step(&mut [0.0; 2], &[0.0; 2]).is_err());
        assert!(AdadeltaState::new(AdadeltaConfig { rho: 1.0, ..Default::default() }, 1).is_err());
    }

    proptest! {
        #[test]
        fn adadelta_accumulators_stay_nonnegative(
            grads in proptest::collection::vec(proptest::collection::vec(-1e3f64..1e3, 4), 1..20)
        ) {
            let mut s = AdadeltaState::new(AdadeltaConfig::default(), 4).unwrap();
            let mut p = [0.0; 4];
            for g in &grads {
                let before = (p, s.clone());
                s.step(&mut p, g).unwrap();
                let mut p2 = before.0;
                let mut s2 = before.1;
                s2.step(&mut p2, g).unwrap();
                prop_assert_eq!(p, p2);
                prop_assert!(s.accum_grad_sq.iter().chain(&s.accum_update_sq).all(|&a| a >= 0.0));
            }
        }

        #[test]
        fn sgd_is_linear_in_grads(
            g in proptest::collection::vec(-10f64..10.0, 5),
            k in -4f64..4.0,
        ) {
            let cfg = SgdConfig::new(0.05).unwrap();
            let mut a = [0.0; 5];
            sgd_step(&mut a, &g, &cfg).unwrap();
            let scaled: Vec<f64> = g.iter().map(|x| x * k).collect();
            let mut b = [0.0; 5];
            sgd_step(&mut b, &scaled, &cfg).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x * k - y).abs() < 1e-12);
            }
        }
    }
}
