use crate::diagnostics::{ConvergenceCriterion, RunningAverages, TrajectoryStats, View};
use crate::error::{Error, Result};
use crate::numerics::RngStream;
use crate::objectives::Objective;
use crate::samplers::{initial_point, mala_step, ula_step, ChainState, InitLaw, SamplerKind};

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerTrial {
    /// Gradient queries spent, including attempts abandoned after divergence.
    pub queries: u64,
    pub converged: bool,
    /// `U` at the last iterate.
    pub final_value: f64,
    /// Step size of the last attempt.
    pub step_size: f64,
    pub acceptance_rate: Option<f64>,
    /// Times the step size was halved.
    pub backoffs: u32,
}

/// Settings shared by every sampler trial of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerTrialSpec {
    pub kind: SamplerKind,
    pub step_size: f64,
    pub budget: u64,
    pub burn_in: f64,
    /// Averages are windowed in blocks of this many steps.
    pub block: usize,
    pub max_backoffs: u32,
}

fn queries_per_step(kind: SamplerKind) -> u64 {
    match kind {
        SamplerKind::Ula => 1,
        SamplerKind::Mala => 2,
    }
}

enum Attempt {
    Done(SamplerTrial),
    Diverged { queries: u64 },
}

fn attempt<O: Objective<f64> + ?Sized>(
    obj: &O,
    spec: &SamplerTrialSpec,
    h: f64,
    budget: u64,
    criterion: &ConvergenceCriterion,
    view: View<'_>,
    master: &RngStream,
) -> Result<Attempt> {
    let per = queries_per_step(spec.kind);
    let x0 = initial_point(obj, &InitLaw::GaussianOverL, &mut master.derive(0))?;
    let mut proposal = master.derive(1);
    let mut accept = master.derive(2);
    let mut state = ChainState::new(x0);
    let mut avg = RunningAverages::new(obj.dim(), spec.burn_in, spec.block)?;
    let mut value = match state.evaluate(obj) {
        Ok((u, _)) => u,
        Err(Error::NonFinite(_)) => return Ok(Attempt::Diverged { queries: 0 }),
        Err(e) => return Err(e),
    };
    let max_steps = budget / per;
    let mut converged = false;
    for _ in 0..max_steps {
        let stepped = match spec.kind {
            SamplerKind::Ula => ula_step(obj, &mut state, h, &mut proposal).map(|_| ()),
            SamplerKind::Mala => {
                mala_step(obj, &mut state, h, &mut proposal, &mut accept).map(|_| ())
            }
        };
        let evaluated = stepped.and_then(|_| state.evaluate(obj).map(|(u, _)| u));
        match evaluated {
            Ok(u) => value = u,
            Err(Error::NonFinite(_)) => {
                return Ok(Attempt::Diverged {
                    queries: state.gradient_queries.max(per),
                })
            }
            Err(e) => return Err(Error::at_step(state.iteration + 1, e)),
        }
        avg.push(value, &view(state.position.as_slice()));
        let (mean_value, mean) = avg.averages().expect("one step pushed");
        if criterion.check(TrajectoryStats::Averages {
            value: mean_value,
            mean: &mean,
        })? {
            converged = true;
            break;
        }
    }
    Ok(Attempt::Done(SamplerTrial {
        queries: state.gradient_queries,
        converged,
        final_value: value,
        step_size: h,
        acceptance_rate: match spec.kind {
            SamplerKind::Mala => Some(state.acceptance_rate()),
            SamplerKind::Ula => None,
        },
        backoffs: 0,
    }))
}

/// Runs a Langevin chain until the running averages of `U` and of
/// `view(x)` meet `criterion` or the query budget is spent. A chain that
/// leaves the finite range is restarted from scratch with half the step,
/// at most `max_backoffs` times; the queries it spent stay on the bill.
pub fn sampler_trial<O: Objective<f64> + ?Sized>(
    obj: &O,
    spec: &SamplerTrialSpec,
    criterion: &ConvergenceCriterion,
    view: View<'_>,
    master: &RngStream,
) -> Result<SamplerTrial> {
    if !(spec.step_size > 0.0 && spec.step_size.is_finite()) {
        return Err(Error::invalid(format!(
            "step size must be positive, got {}",
            spec.step_size
        )));
    }
    let mut h = spec.step_size;
    let mut spent = 0;
    for backoffs in 0..=spec.max_backoffs {
        match attempt(obj, spec, h, spec.budget - spent, criterion, view, master)? {
            Attempt::Done(mut t) => {
                t.queries += spent;
                t.backoffs = backoffs;
                return Ok(t);
            }
            Attempt::Diverged { queries } => {
                spent = (spent + queries).min(spec.budget);
                h /= 2.0;
            }
        }
    }
    Err(Error::NonFinite(format!(
        "chain diverged after {} step-size halvings (last h = {h:e})",
        spec.max_backoffs
    )))
}
