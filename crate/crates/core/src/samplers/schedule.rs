use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::ObjectiveConstants;

/// Step size for ULA with the polynomial-mixing guarantee:
/// `c * exp(-16 L R^2) * (m / L) * (1 / L) * eps^2 / d`.
pub fn ula_theorem_stepsize(constants: &ObjectiveConstants, eps: f64, prefactor: f64) -> f64 {
    let ObjectiveConstants { l, m, r, dim } = *constants;
    prefactor * (-16.0 * l * r * r).exp() * (m / l) * (1.0 / l) * eps * eps / dim as f64
}

/// Step size for MALA:
/// `c * exp(-8 L R^2) * kappa^(-1/2) / L * (d ln kappa' + ln(1/eps))^(-1/2) * d^(-1/2)`
/// with `ln kappa' = max(ln kappa, ln 2)`, so a perfectly conditioned target
/// does not send the step to infinity as `eps -> 1`.
pub fn mala_theorem_stepsize(constants: &ObjectiveConstants, eps: f64, prefactor: f64) -> f64 {
    let ObjectiveConstants { l, m: _, r, dim } = *constants;
    let d = dim as f64;
    let kappa = constants.condition_number();
    let log_kappa = kappa.ln().max(std::f64::consts::LN_2);
    prefactor * (-8.0 * l * r * r).exp() * kappa.powf(-0.5) / l
        * (d * log_kappa + (1.0 / eps).ln()).powf(-0.5)
        * d.powf(-0.5)
}

/// How the step size `h^k` is chosen. Both theorem schedules are constant in
/// `k`; the iteration index is accepted so varying schedules can be added
/// without changing call sites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepSchedule {
    Constant { h: f64 },
    TheoremUla { prefactor: f64, eps: f64 },
    TheoremMala { prefactor: f64, eps: f64 },
}

impl StepSchedule {
    pub fn step_size(&self, constants: &ObjectiveConstants, _k: u64) -> Result<f64> {
        let h = match *self {
            StepSchedule::Constant { h } => h,
            StepSchedule::TheoremUla { prefactor, eps } => {
                check_eps(eps)?;
                ula_theorem_stepsize(constants, eps, prefactor)
            }
            StepSchedule::TheoremMala { prefactor, eps } => {
                check_eps(eps)?;
                mala_theorem_stepsize(constants, eps, prefactor)
            }
        };
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::invalid(format!(
                "step schedule produced a non-positive step size {h}"
            )));
        }
        Ok(h)
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "accuracy eps must lie in (0, 1), got {eps}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn consts(l: f64, m: f64, r: f64, dim: usize) -> ObjectiveConstants {
        ObjectiveConstants { l, m, r, dim }
    }

    #[test]
    fn ula_unit_case() {
        assert_eq!(
            ula_theorem_stepsize(&consts(1.0, 1.0, 0.0, 1), 1.0, 1.0),
            1.0
        );
    }

    #[test]
    fn ula_halves_with_dimension() {
        let a = ula_theorem_stepsize(&consts(2.0, 1.0, 0.3, 3), 0.4, 1.0);
        let b = ula_theorem_stepsize(&consts(2.0, 1.0, 0.3, 6), 0.4, 1.0);
        assert!((a / b - 2.0).abs() < 1e-14);
    }

    #[test]
    fn ula_worked_value() {
        // independent arithmetic: e^-8 * (1/2) * (1/2) * 0.25 / 4
        let expected = (-8.0f64).exp() * 0.015625;
        let got = ula_theorem_stepsize(&consts(2.0, 1.0, 0.5, 4), 0.5, 1.0);
        assert!((got - expected).abs() <= 1e-9 * expected);
        assert!((got - 5.2415e-6).abs() < 1e-9);
    }

    #[test]
    fn mala_worked_value() {
        let expected = 0.5 * 2f64.powf(-0.5) * (2f64.ln() + 1.0).powf(-0.5);
        let got = mala_theorem_stepsize(&consts(2.0, 1.0, 0.0, 1), (-1.0f64).exp(), 1.0);
        assert!((got - expected).abs() <= 1e-9 * expected);
        assert!((got - 0.2718).abs() < 1e-4);
    }

    #[test]
    fn mala_monotone_in_dim_and_radius() {
        let mut prev = f64::INFINITY;
        for d in 1..20 {
            let h = mala_theorem_stepsize(&consts(2.0, 1.0, 0.2, d), 0.1, 1.0);
            assert!(h < prev);
            prev = h;
        }
        let mut prev = f64::INFINITY;
        for i in 0..10 {
            let h = mala_theorem_stepsize(&consts(2.0, 1.0, 0.1 * i as f64, 3), 0.1, 1.0);
            assert!(h < prev);
            prev = h;
        }
    }

    #[test]
    fn unit_condition_number_is_guarded() {
        let h = mala_theorem_stepsize(&consts(1.0, 1.0, 0.0, 4), 0.999_999, 1.0);
        assert!(h.is_finite() && h > 0.0);
    }

    #[test]
    fn schedule_validates_output() {
        let c = consts(1.0, 1.0, 0.0, 1);
        assert!(StepSchedule::Constant { h: 0.0 }.step_size(&c, 0).is_err());
        assert!(StepSchedule::TheoremUla {
            prefactor: 1.0,
            eps: 1.5
        }
        .step_size(&c, 0)
        .is_err());
        assert_eq!(
            StepSchedule::Constant { h: 0.1 }.step_size(&c, 7).unwrap(),
            0.1
        );
    }
}
