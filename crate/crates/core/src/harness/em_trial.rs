use serde::{Deserialize, Serialize};

use crate::diagnostics::projected_decrease;
use crate::error::{Error, Result};
use crate::numerics::RngStream;
use crate::objectives::GmmPosterior;
use crate::optimizers::{em_init_from_data, em_sweep};

/// When an EM run is abandoned for a fresh data initialization.
///
/// A run is restarted once, for `patience` consecutive iterations, its value
/// is still above `U* + value_tol` while the remaining decrease
/// extrapolated from the last three values is below
/// `stall_fraction * value_tol`: it is settling on a worse fixed point.
/// Iterations of abandoned runs stay on the bill.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RestartRule {
    pub enabled: bool,
    pub patience: u64,
    pub stall_fraction: f64,
}

impl Default for RestartRule {
    fn default() -> Self {
        RestartRule {
            enabled: true,
            patience: 10,
            stall_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmTrial {
    /// EM iterations spent, over all restarts.
    pub queries: u64,
    pub converged: bool,
    pub final_value: f64,
    pub restarts: u64,
}

/// EM from random data points until `U(mu) - U* < value_tol` or `budget`
/// iterations are spent.
pub fn em_trial(
    post: &GmmPosterior<f64>,
    optimum_value: f64,
    value_tol: f64,
    budget: u64,
    rule: &RestartRule,
    rng: &mut RngStream,
) -> Result<EmTrial> {
    if !(value_tol > 0.0) {
        return Err(Error::invalid("value tolerance must be positive"));
    }
    let target = optimum_value + value_tol;
    let stall_gap = rule.stall_fraction * value_tol;
    let mut queries = 0;
    let mut restarts = 0;
    let mut mu = em_init_from_data(post, rng, 0.0)?;
    let mut since_start = 0;
    let mut hist = [f64::INFINITY; 2];
    let mut stalled_for = 0;
    loop {
        let sweep = em_sweep(post, &mu).map_err(|e| Error::at_step(queries + 1, e))?;
        let u = sweep.value;
        if u < target && since_start > 0 {
            return Ok(EmTrial {
                queries,
                converged: true,
                final_value: u,
                restarts,
            });
        }
        if queries >= budget {
            return Ok(EmTrial {
                queries,
                converged: false,
                final_value: u,
                restarts,
            });
        }
        if rule.enabled {
            let stalled = projected_decrease(hist[0], hist[1], u) < stall_gap;
            stalled_for = if stalled { stalled_for + 1 } else { 0 };
            if stalled_for >= rule.patience {
                // the sweep that produced `u` is paid for even though its
                // update is discarded
                queries += 1;
                mu = em_init_from_data(post, rng, 0.0)?;
                restarts += 1;
                since_start = 0;
                hist = [f64::INFINITY; 2];
                stalled_for = 0;
                continue;
            }
        }
        hist = [hist[1], u];
        mu = sweep.next;
        since_start += 1;
        queries += 1;
    }
}
