//! Unadjusted and Metropolis-adjusted Langevin samplers.
//!
//! One ULA step moves `x <- x - h grad U(x) + xi` with `xi ~ N(0, 2h I)`.
//! MALA uses the same move as a proposal and accepts it with the
//! Metropolis-Hastings probability for the Langevin proposal kernel, which
//! makes `exp(-U)` exactly stationary.

mod chain;
mod schedule;

pub use chain::{
    initial_point, run_chain, write_samples_csv, ChainConfig, ChainRun, InitLaw, Sample,
    SamplerKind,
};
pub use schedule::{mala_theorem_stepsize, ula_theorem_stepsize, StepSchedule};

use crate::error::{Error, Result};
use crate::numerics::{RngStream, Scalar, Vector};
use crate::objectives::Objective;

/// Position of a chain plus its query counters.
///
/// `gradient_queries` is the accounting currency of the benchmark: +1 per
/// ULA step and +2 per MALA step (proposal drift and reverse drift). The
/// value and gradient at the current position are cached, so a MALA step
/// evaluates the objective only at the proposal.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState<T = f64> {
    pub position: Vector<T>,
    pub iteration: u64,
    pub gradient_queries: u64,
    pub value_queries: u64,
    pub accepted_count: u64,
    cache: Option<(T, Vector<T>)>,
}

impl<T: Scalar> ChainState<T> {
    pub fn new(position: Vector<T>) -> Self {
        ChainState {
            position,
            iteration: 0,
            gradient_queries: 0,
            value_queries: 0,
            accepted_count: 0,
            cache: None,
        }
    }

    /// Value and gradient at the current position, evaluating on a cache
    /// miss. Evaluations here are not charged to the query counters; the
    /// step functions do the accounting.
    pub fn evaluate<O: Objective<T> + ?Sized>(&mut self, obj: &O) -> Result<(T, &Vector<T>)> {
        if self.cache.is_none() {
            let (v, g) = obj.value_and_grad(&self.position)?;
            if !v.is_finite() || !g.is_finite() {
                return Err(Error::NonFinite("objective at the current position".into()));
            }
            self.cache = Some((v, g));
        }
        let (v, g) = self.cache.as_ref().expect("cache filled above");
        Ok((*v, g))
    }

    /// Cached `U` at the current position, if known.
    pub fn current_value(&self) -> Option<T> {
        self.cache.as_ref().map(|(v, _)| *v)
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.iteration == 0 {
            0.0
        } else {
            self.accepted_count as f64 / self.iteration as f64
        }
    }
}

fn check_step(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "step size must be positive, got {h}"
        )))
    }
}

/// One unadjusted Langevin step.
pub fn ula_step<T: Scalar, O: Objective<T> + ?Sized>(
    obj: &O,
    state: &mut ChainState<T>,
    h: f64,
    rng: &mut RngStream,
) -> Result<()> {
    check_step(h)?;
    let ht = T::lit(h);
    let noise_std = T::lit((2.0 * h).sqrt());
    state.evaluate(obj)?;
    let (_, grad) = state.cache.take().expect("evaluated");
    for (x, &g) in state.position.as_mut_slice().iter_mut().zip(grad.iter()) {
        *x = *x - ht * g + rng.gaussian(noise_std);
    }
    state.position.ensure_finite("ULA iterate")?;
    state.iteration += 1;
    state.gradient_queries += 1;
    state.value_queries += 1;
    Ok(())
}

/// Log of the MALA acceptance ratio for moving from `x` to `z`:
///
/// `A = -U(z) + U(x) - |x - z + h g(z)|^2 / (4h) + |z - x + h g(x)|^2 / (4h)`.
#[allow(clippy::too_many_arguments)]
pub fn mala_log_acceptance<T: Scalar>(
    x: &Vector<T>,
    value_x: T,
    grad_x: &Vector<T>,
    z: &Vector<T>,
    value_z: T,
    grad_z: &Vector<T>,
    h: f64,
) -> T {
    let ht = T::lit(h);
    let mut reverse = T::zero();
    let mut forward = T::zero();
    for k in 0..x.dim() {
        let r = x[k] - z[k] + ht * grad_z[k];
        let f = z[k] - x[k] + ht * grad_x[k];
        reverse = reverse + r * r;
        forward = forward + f * f;
    }
    let four_h = T::lit(4.0 * h);
    (value_x - value_z) - reverse / four_h + forward / four_h
}

/// One Metropolis-adjusted Langevin step. Returns whether the proposal was
/// accepted; on rejection the position is left untouched.
///
/// Proposal noise comes from `proposal_rng` and the accept/reject uniform
/// from `accept_rng`, so a MALA chain and a ULA chain driven by the same
/// proposal stream see identical Gaussian increments.
pub fn mala_step<T: Scalar, O: Objective<T> + ?Sized>(
    obj: &O,
    state: &mut ChainState<T>,
    h: f64,
    proposal_rng: &mut RngStream,
    accept_rng: &mut RngStream,
) -> Result<bool> {
    check_step(h)?;
    let ht = T::lit(h);
    let noise_std = T::lit((2.0 * h).sqrt());
    state.evaluate(obj)?;
    let (value_x, grad_x) = state.cache.clone().expect("evaluated");
    let proposal: Vector<T> = state
        .position
        .iter()
        .zip(grad_x.iter())
        .map(|(&x, &g)| x - ht * g + proposal_rng.gaussian(noise_std))
        .collect();
    let (value_z, grad_z) = obj.value_and_grad(&proposal)?;
    if !value_z.is_finite() || !grad_z.is_finite() {
        return Err(Error::NonFinite("objective at the MALA proposal".into()));
    }
    let log_a = mala_log_acceptance(
        &state.position,
        value_x,
        &grad_x,
        &proposal,
        value_z,
        &grad_z,
        h,
    );
    let u = accept_rng.uniform_open0();
    let accepted = u.ln() < log_a.as_f64();
    if accepted {
        state.position = proposal;
        state.cache = Some((value_z, grad_z));
        state.accepted_count += 1;
    }
    state.iteration += 1;
    state.gradient_queries += 2;
    state.value_queries += 1;
    Ok(accepted)
}
