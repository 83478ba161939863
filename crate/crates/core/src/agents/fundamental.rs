use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::kernel::{SimTime, NANOS_PER_SEC};

use super::AgentError;

/// Exogenous value signal observed (noisily) by value agents. Prices in cents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FundamentalModel {
    /// Ornstein-Uhlenbeck process. `kappa` is per second, `sigma` in cents per sqrt(second).
    Ou { mean: f64, kappa: f64, sigma: f64, initial: f64 },
    /// Piecewise-constant series of `(seconds, cents)` points with strictly increasing times.
    Series { points: Vec<(f64, f64)> },
}

impl Default for FundamentalModel {
    fn default() -> Self {
        FundamentalModel::Ou { mean: 100_000.0, kappa: 1e-3, sigma: 0.5, initial: 100_000.0 }
    }
}

impl FundamentalModel {
    pub fn validate(&self) -> Result<(), AgentError> {
        match self {
            FundamentalModel::Ou { mean, kappa, sigma, initial } => {
                if !(*mean > 0.0 && *initial > 0.0 && *kappa > 0.0 && *sigma >= 0.0) {
                    return Err(AgentError::InvalidConfig("OU fundamental needs mean, initial, kappa > 0 and sigma >= 0".into()));
                }
            }
            FundamentalModel::Series { points } => {
                if points.is_empty() {
                    return Err(AgentError::InvalidConfig("fundamental series is empty".into()));
                }
                if points.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(AgentError::InvalidConfig("fundamental series timestamps must increase strictly".into()));
                }
                if points.iter().any(|p| !(p.1 > 0.0)) {
                    return Err(AgentError::InvalidConfig("fundamental prices must be positive".into()));
                }
            }
        }
        Ok(())
    }

    /// Realize the model on a regular grid of `step_ns` covering `[0, until]`.
    pub fn realize<R: Rng + ?Sized>(&self, until: SimTime, step_ns: u64, rng: &mut R) -> FundamentalPath {
        let steps = (until.as_nanos() / step_ns) as usize + 1;
        let values = match self {
            FundamentalModel::Ou { mean, kappa, sigma, initial } => {
                let kappa_ns = kappa / NANOS_PER_SEC as f64;
                let sigma_ns = sigma / (NANOS_PER_SEC as f64).sqrt();
                let mut x = *initial;
                let mut out = Vec::with_capacity(steps);
                out.push(x);
                for _ in 1..steps {
                    x = ou_step(x, step_ns, kappa_ns, *mean, sigma_ns, rng).max(1.0);
                    out.push(x);
                }
                out
            }
            FundamentalModel::Series { points } => (0..steps)
                .map(|i| {
                    let t = (i as u64 * step_ns) as f64 / NANOS_PER_SEC as f64;
                    let k = points.partition_point(|p| p.0 <= t);
                    points[k.saturating_sub(1)].1
                })
                .collect(),
        };
        FundamentalPath { step_ns, values }
    }
}

/// Exact OU transition over `dt_ns` nanoseconds; `kappa` per ns, `sigma` in cents per sqrt(ns).
pub fn ou_step<R: Rng + ?Sized>(x: f64, dt_ns: u64, kappa: f64, mean: f64, sigma: f64, rng: &mut R) -> f64 {
    let dt = dt_ns as f64;
    let decay = (-kappa * dt).exp();
    let sd = sigma * ((1.0 - (-2.0 * kappa * dt).exp()) / (2.0 * kappa)).sqrt();
    let z: f64 = rng.sample(StandardNormal);
    mean + (x - mean) * decay + sd * z
}

/// A realized fundamental, sampled on a regular grid and held constant between points.
#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalPath {
    step_ns: u64,
    values: Vec<f64>,
}

impl FundamentalPath {
    pub fn constant(value: f64) -> Self {
        FundamentalPath { step_ns: u64::MAX, values: vec![value] }
    }

    pub fn at(&self, t: SimTime) -> f64 {
        let i = (t.as_nanos() / self.step_ns) as usize;
        self.values[i.min(self.values.len() - 1)]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fixed_point_and_full_reversion() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(ou_step(100.0, 10, 0.1, 100.0, 0.0, &mut rng), 100.0);
        let x = ou_step(500.0, 1_000_000, 1.0, 100.0, 0.0, &mut rng);
        assert!((x - 100.0).abs() < 1e-9);
    }

    #[test]
    fn one_step_moments_match_closed_form() {
        let (x0, mean, kappa, sigma, dt) = (103.0, 100.0, 2e-3, 0.7, 500u64);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| ou_step(x0, dt, kappa, mean, sigma, &mut rng)).collect();
        let m = draws.iter().sum::<f64>() / n as f64;
        let v = draws.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;

        let exp_mean = mean + (x0 - mean) * (-kappa * dt as f64).exp();
        let exp_var = sigma * sigma * (1.0 - (-2.0 * kappa * dt as f64).exp()) / (2.0 * kappa);
        let se_mean = (exp_var / n as f64).sqrt();
        // Var of the sample variance of a normal: 2 sigma^4 / (n - 1).
        let se_var = exp_var * (2.0 / (n - 1) as f64).sqrt();
        assert!((m - exp_mean).abs() < 3.0 * se_mean, "mean {m} vs {exp_mean}");
        assert!((v - exp_var).abs() < 3.0 * se_var, "var {v} vs {exp_var}");
    }

    #[test]
    fn series_is_piecewise_constant() {
        let model = FundamentalModel::Series { points: vec![(0.0, 100.0), (10.0, 110.0), (20.0, 90.0)] };
        model.validate().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let path = model.realize(SimTime::from_secs(30), NANOS_PER_SEC, &mut rng);
        assert_eq!(path.at(SimTime::from_secs(5)), 100.0);
        assert_eq!(path.at(SimTime::from_secs(10)), 110.0);
        assert_eq!(path.at(SimTime::from_secs(25)), 90.0);
        assert_eq!(path.at(SimTime::from_secs(1000)), 90.0);
    }

    #[test]
    fn invalid_models() {
        assert!(FundamentalModel::Series { points: vec![(1.0, 5.0), (1.0, 6.0)] }.validate().is_err());
        assert!(FundamentalModel::Series { points: vec![(1.0, -5.0)] }.validate().is_err());
        assert!(FundamentalModel::Ou { mean: 1.0, kappa: 0.0, sigma: 1.0, initial: 1.0 }.validate().is_err());
    }
}
