//! Closed-form complexity bounds. Every hidden `O(.)` constant is an explicit
//! prefactor `c`.

use std::f64::consts::LN_2;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::{well_radius_for_gap, WELL_SHAPE_FACTOR};

/// `(m / 2) exp(-16 L R^2)`.
pub fn log_sobolev_lower_bound(m: f64, l: f64, r: f64) -> f64 {
    0.5 * m * (-16.0 * l * r * r).exp()
}

/// `c exp(32 L R^2) kappa^2 (d / eps^2) ln(d / eps^2)`, log floored at `ln 2`.
pub fn ula_mixing_bound(eps: f64, d: usize, l: f64, m: f64, r: f64, c: f64) -> f64 {
    let kappa = l / m;
    let ratio = d as f64 / (eps * eps);
    c * (32.0 * l * r * r).exp() * kappa * kappa * ratio * ratio.ln().max(LN_2)
}

/// `c (exp(40 L R^2) / m) kappa^(3/2) d^(1/2) (d ln kappa' + ln(1/eps))^(3/2)`
/// with `ln kappa' = max(ln kappa, ln 2)`.
pub fn mala_mixing_bound(eps: f64, d: usize, l: f64, m: f64, r: f64, c: f64) -> f64 {
    let kappa = l / m;
    let d = d as f64;
    let log_kappa = kappa.ln().max(LN_2);
    c * (40.0 * l * r * r).exp() / m
        * kappa.powf(1.5)
        * d.sqrt()
        * (d * log_kappa + (1.0 / eps).ln()).powf(1.5)
}

/// Rounds `x` down, treating values within a few ulps below an integer as
/// that integer, so `(3r - r) / (2r)` still counts as 1.
fn floor_tolerant(x: f64, ulps: f64) -> f64 {
    let near = x.round();
    if (x - near).abs() <= ulps * f64::EPSILON * near.abs().max(1.0) {
        near
    } else {
        x.floor()
    }
}

/// `floor(((R_outer - r) / (2r))^d)`, zero when `R_outer <= r`, saturating at
/// `u64::MAX`.
pub fn packing_number(r_outer: f64, r: f64, d: usize) -> u64 {
    if !(r_outer > r) || !(r > 0.0) {
        return 0;
    }
    let ratio = (r_outer - r) / (2.0 * r);
    let v = floor_tolerant(ratio.powi(d as i32), 8.0 * (d as f64 + 1.0));
    if v >= u64::MAX as f64 {
        u64::MAX
    } else {
        v as u64
    }
}

/// Which branch of the optimization lower bound applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptBoundRegime {
    /// `eps <= L R^2 / (64 (2 pi^2 + pi))`: the counting formula holds.
    Valid,
    /// `eps >= L R^2 / (36 (2 pi^2 + pi))`: only the trivial bound `T >= 1`.
    Fallback,
    /// Between the two thresholds. Neither statement covers it; `1` is
    /// reported.
    Gap,
}

/// Lower bound on the number of queries an optimizer needs, with the regime
/// that produced it.
pub fn optimization_lower_bound_with_regime(
    l: f64,
    r: f64,
    eps: f64,
    d: usize,
    p: f64,
) -> (f64, OptBoundRegime) {
    let scale = l * r * r / WELL_SHAPE_FACTOR;
    if eps <= scale / 64.0 {
        let base = r / 4.0 * (l / WELL_SHAPE_FACTOR).sqrt() / eps.sqrt() - 0.5;
        let count = floor_tolerant(base.max(0.0).powi(d as i32), 8.0 * (d as f64 + 1.0));
        (p * count, OptBoundRegime::Valid)
    } else if eps >= scale / 36.0 {
        (1.0, OptBoundRegime::Fallback)
    } else {
        (1.0, OptBoundRegime::Gap)
    }
}

/// `p floor((R/4 sqrt(L / (2 pi^2 + pi)) / sqrt(eps) - 1/2)^d)` in the valid
/// range, `1` otherwise.
pub fn optimization_lower_bound(l: f64, r: f64, eps: f64, d: usize, p: f64) -> f64 {
    optimization_lower_bound_with_regime(l, r, eps, d, p).0
}

/// Inverse temperature needed for the tempered sampler to find the secret
/// well with probability `p`, floored at zero.
pub fn beta_requirement(eps: f64, d: usize, l: f64, r: f64, p: f64) -> f64 {
    let arg = l * r * r / (4.0 * WELL_SHAPE_FACTOR * eps);
    let v = p.ln() / eps + d as f64 / (2.0 * eps) * arg.ln();
    if v.is_nan() {
        0.0
    } else {
        v.max(0.0)
    }
}

/// Inputs to [`BoundReport::compute`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    #[serde(rename = "L")]
    pub l: f64,
    pub m: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub eps: f64,
    pub d: usize,
    pub p: f64,
    pub prefactor_ula: f64,
    pub prefactor_mala: f64,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!(
                    "{name} must be positive and finite, got {v}"
                )))
            }
        };
        pos("L", self.l)?;
        pos("m", self.m)?;
        pos("prefactor_ula", self.prefactor_ula)?;
        pos("prefactor_mala", self.prefactor_mala)?;
        if !(self.r >= 0.0 && self.r.is_finite()) {
            return Err(Error::invalid(format!("R must be >= 0, got {}", self.r)));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::invalid(format!(
                "eps must lie in (0, 1), got {}",
                self.eps
            )));
        }
        if self.d == 0 {
            return Err(Error::invalid("d must be >= 1"));
        }
        if !(self.p >= 0.0 && self.p <= 1.0) {
            return Err(Error::invalid(format!(
                "p must lie in [0, 1], got {}",
                self.p
            )));
        }
        Ok(())
    }
}

/// Every bound for one parameter set, with the inputs echoed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub inputs: BoundInputs,
    pub rho_lower: f64,
    pub ula_mixing_upper: f64,
    pub mala_mixing_upper: f64,
    pub opt_queries_lower: f64,
    pub opt_regime: OptBoundRegime,
    /// Well count for the hard instance with outer radius `R/2` and well
    /// radius `sqrt((2 pi^2 + pi) eps / L)`.
    pub packing_eta: u64,
    pub beta_required: f64,
}

impl BoundReport {
    pub fn compute(inputs: BoundInputs) -> Result<Self> {
        inputs.validate()?;
        let BoundInputs {
            l,
            m,
            r,
            eps,
            d,
            p,
            prefactor_ula,
            prefactor_mala,
        } = inputs;
        let (opt, regime) = optimization_lower_bound_with_regime(l, r, eps, d, p);
        Ok(BoundReport {
            inputs,
            rho_lower: log_sobolev_lower_bound(m, l, r),
            ula_mixing_upper: ula_mixing_bound(eps, d, l, m, r, prefactor_ula),
            mala_mixing_upper: mala_mixing_bound(eps, d, l, m, r, prefactor_mala),
            opt_queries_lower: opt,
            opt_regime: regime,
            packing_eta: packing_number(r / 2.0, well_radius_for_gap(l, eps), d),
            beta_required: beta_requirement(eps, d, l, r, p.max(f64::MIN_POSITIVE)),
        })
    }
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = &self.inputs;
        let rows: [(&str, String); 15] = [
            ("L", format!("{}", i.l)),
            ("m", format!("{}", i.m)),
            ("R", format!("{}", i.r)),
            ("eps", format!("{}", i.eps)),
            ("d", format!("{}", i.d)),
            ("p", format!("{}", i.p)),
            ("prefactor_ula", format!("{}", i.prefactor_ula)),
            ("prefactor_mala", format!("{}", i.prefactor_mala)),
            ("rho_lower", format!("{:.6e}", self.rho_lower)),
            ("ula_mixing_upper", format!("{:.6e}", self.ula_mixing_upper)),
            (
                "mala_mixing_upper",
                format!("{:.6e}", self.mala_mixing_upper),
            ),
            (
                "opt_queries_lower",
                format!("{:.6e}", self.opt_queries_lower),
            ),
            (
                "opt_regime",
                match self.opt_regime {
                    OptBoundRegime::Valid => "valid".to_string(),
                    OptBoundRegime::Fallback => "fallback (T >= 1)".to_string(),
                    OptBoundRegime::Gap => "between thresholds, reporting 1".to_string(),
                },
            ),
            ("packing_eta", self.packing_eta.to_string()),
            ("beta_required", format!("{:.6e}", self.beta_required)),
        ];
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        for (k, v) in rows {
            writeln!(f, "{k:<width$}  {v}")?;
        }
        Ok(())
    }
}
