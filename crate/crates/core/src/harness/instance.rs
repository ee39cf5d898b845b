use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gmm_data::{capped_size, floor_log2, gen_sparse_dataset, Dataset};
use crate::numerics::RngStream;
use crate::objectives::GmmPosterior;

/// Value of the constant background term `C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum ConstantRule {
    Fixed {
        value: f64,
    },
    /// `(1 - sum_i lambda_i) / vol(B(0, R))`: a background density uniform
    /// on the ball of radius `R` that contains the data, with
    /// `lambda_i = c_lambda (2 pi sigma^2)^(d/2)`.
    UniformBall,
}

/// How a mixture posterior is built for dimension `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GmmSettings {
    /// `sigma = sigma_scale / sqrt(d)`.
    pub sigma_scale: f64,
    /// `c_lambda = sigma^2 / weight_denominator`.
    pub weight_denominator: f64,
    pub constant: ConstantRule,
    pub prior_m: f64,
    /// `N = min(2^d, n_max)`.
    pub n_max: usize,
}

impl Default for GmmSettings {
    fn default() -> Self {
        GmmSettings {
            sigma_scale: 1.0,
            weight_denominator: 1000.0,
            constant: ConstantRule::UniformBall,
            prior_m: 1.0,
            n_max: crate::gmm_data::DEFAULT_N_MAX,
        }
    }
}

impl GmmSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_scale > 0.0 && self.weight_denominator > 0.0 && self.prior_m > 0.0) {
            return Err(Error::invalid(
                "sigma_scale, weight_denominator and prior_m must be positive",
            ));
        }
        if self.n_max == 0 {
            return Err(Error::invalid("n_max must be positive"));
        }
        if let ConstantRule::Fixed { value } = self.constant {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::invalid("constant component must be >= 0"));
            }
        }
        Ok(())
    }
}

/// `ln vol(B(0, r))` in `d` dimensions.
pub fn ln_ball_volume(d: usize, r: f64) -> f64 {
    let half = d as f64 / 2.0;
    // ln Gamma(d/2 + 1) by the recurrence down to Gamma(1) or Gamma(3/2)
    let mut x = half + 1.0;
    let mut ln_gamma = 0.0;
    while x > 1.75 {
        x -= 1.0;
        ln_gamma += x.ln();
    }
    if x < 1.25 {
        // x == 1: Gamma(1) = 1
    } else {
        // x == 1.5 after the loop stops at Gamma(3/2) = sqrt(pi) / 2
        ln_gamma += 0.5 * std::f64::consts::PI.ln() - std::f64::consts::LN_2;
    }
    half * std::f64::consts::PI.ln() - ln_gamma + d as f64 * r.ln()
}

/// A sweep instance: the dataset and the posterior built on it.
#[derive(Debug, Clone)]
pub struct GmmInstance {
    pub dataset: Dataset,
    pub posterior: GmmPosterior<f64>,
    /// Radius `R = 2 floor(log2 d)` of the region holding the data.
    pub radius: f64,
}

/// Sparse dataset with `N = min(2^d, n_max)` points, `M = floor(log2 d)`
/// components and `R = 2 floor(log2 d)`.
pub fn build_instance(
    d: usize,
    settings: &GmmSettings,
    rng: &mut RngStream,
) -> Result<GmmInstance> {
    settings.validate()?;
    let (n, requested) = capped_size(d, settings.n_max);
    let mut dataset = gen_sparse_dataset(d, n, rng)?;
    if requested != n {
        dataset.n_requested = Some(requested);
    }
    let sigma = settings.sigma_scale / (d as f64).sqrt();
    dataset.sigma = sigma;
    let m = floor_log2(d);
    let radius = 2.0 * m as f64;
    let c = sigma * sigma / settings.weight_denominator;
    let constant = match settings.constant {
        ConstantRule::Fixed { value } => value,
        ConstantRule::UniformBall => {
            let ln_z = 0.5 * d as f64 * (2.0 * std::f64::consts::PI * sigma * sigma).ln();
            let lambda = m as f64 * c * ln_z.exp();
            if lambda >= 1.0 {
                return Err(Error::invalid(format!(
                    "component weights sum to {lambda} >= 1; no mass left for the background"
                )));
            }
            (1.0 - lambda) * (-ln_ball_volume(d, radius)).exp()
        }
    };
    let posterior = GmmPosterior::new(
        dataset.vectors(),
        sigma,
        m,
        c,
        constant,
        settings.prior_m,
        radius,
    )?;
    Ok(GmmInstance {
        dataset,
        posterior,
        radius,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_volumes() {
        let pi = std::f64::consts::PI;
        assert!((ln_ball_volume(1, 2.0) - 4f64.ln()).abs() < 1e-14);
        assert!((ln_ball_volume(2, 1.0) - pi.ln()).abs() < 1e-14);
        assert!((ln_ball_volume(3, 1.0) - (4.0 * pi / 3.0).ln()).abs() < 1e-14);
        assert!((ln_ball_volume(4, 1.0) - (pi * pi / 2.0).ln()).abs() < 1e-14);
        assert!((ln_ball_volume(5, 1.0) - (8.0 * pi * pi / 15.0).ln()).abs() < 1e-14);
    }

    #[test]
    fn instance_shapes() {
        let fixed = GmmSettings {
            constant: ConstantRule::Fixed { value: 1.0 },
            ..GmmSettings::default()
        };
        let inst = build_instance(5, &fixed, &mut RngStream::new(1, 0)).unwrap();
        assert_eq!(inst.posterior.constant_component, 1.0);
        assert_eq!(inst.posterior.n_points(), 32);
        assert_eq!(inst.posterior.mixtures, 2);
        assert_eq!(inst.radius, 4.0);
        assert!((inst.posterior.sigma - 1.0 / 5f64.sqrt()).abs() < 1e-15);
        assert!((inst.posterior.weight_coeff - 0.2 / 1000.0).abs() < 1e-18);
        let s = GmmSettings {
            n_max: 16,
            ..GmmSettings::default()
        };
        let inst = build_instance(5, &s, &mut RngStream::new(1, 0)).unwrap();
        assert_eq!(inst.dataset.n_requested, Some(32));
        assert_eq!(inst.posterior.n_points(), 16);
        // vol B(0, 4) in 5 dims = 8 pi^2 / 15 * 4^5
        let pi = std::f64::consts::PI;
        let lambda = 2.0 * (0.2 / 1000.0) * (2.0 * pi * 0.2f64).powf(2.5);
        let want = (1.0 - lambda) * 15.0 / (8.0 * pi * pi * 1024.0);
        assert!((inst.posterior.constant_component / want - 1.0).abs() < 1e-12);
    }
}
