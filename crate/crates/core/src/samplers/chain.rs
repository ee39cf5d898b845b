use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{mala_step, ula_step, ChainState, StepSchedule};
use crate::error::{Error, Result};
use crate::numerics::{gaussian_vector, RngStream, Scalar, Vector};
use crate::objectives::Objective;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Ula,
    Mala,
}

/// Law of the initial point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitLaw {
    /// `x0 ~ N(0, I / L)` with `L` from the objective's constants.
    GaussianOverL,
    Fixed(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub schedule: StepSchedule,
    pub max_steps: u64,
    pub init: InitLaw,
    pub seed: u64,
    pub stream: u64,
    /// Keep every `thin`-th iterate in the sample stream; 0 keeps none.
    pub thin: u64,
}

impl ChainConfig {
    pub fn new(schedule: StepSchedule, max_steps: u64, seed: u64) -> Self {
        ChainConfig {
            schedule,
            max_steps,
            init: InitLaw::GaussianOverL,
            seed,
            stream: 0,
            thin: 1,
        }
    }

    fn master(&self) -> RngStream {
        RngStream::new(self.seed, self.stream)
    }

    /// Stream for the initial draw.
    pub fn init_stream(&self) -> RngStream {
        self.master().derive(0)
    }

    /// Stream for the Gaussian increments; shared by ULA and MALA.
    pub fn proposal_stream(&self) -> RngStream {
        self.master().derive(1)
    }

    /// Stream for MALA's accept/reject uniforms.
    pub fn accept_stream(&self) -> RngStream {
        self.master().derive(2)
    }
}

/// Draws the initial point of a chain.
pub fn initial_point<T: Scalar, O: Objective<T> + ?Sized>(
    obj: &O,
    init: &InitLaw,
    rng: &mut RngStream,
) -> Result<Vector<T>> {
    match init {
        InitLaw::GaussianOverL => {
            let l = obj.constants().l;
            gaussian_vector(rng, obj.dim(), T::lit((1.0 / l).sqrt()))
        }
        InitLaw::Fixed(x) => {
            let v = Vector::from_f64(x);
            v.ensure_dim(obj.dim())?;
            Ok(v)
        }
    }
}

/// A retained iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample<T = f64> {
    pub step: u64,
    pub position: Vector<T>,
}

/// Outcome of [`run_chain`].
#[derive(Debug, Clone, PartialEq)]
pub struct ChainRun<T = f64> {
    pub kind: SamplerKind,
    pub steps: u64,
    pub gradient_queries: u64,
    pub value_queries: u64,
    pub accepted: u64,
    /// Step at which the stop predicate first fired.
    pub converged_at: Option<u64>,
    pub step_size: f64,
    pub final_state: ChainState<T>,
}

impl<T: Scalar> ChainRun<T> {
    pub fn converged(&self) -> bool {
        self.converged_at.is_some()
    }

    pub fn acceptance_rate(&self) -> Option<f64> {
        match self.kind {
            SamplerKind::Mala if self.steps > 0 => Some(self.accepted as f64 / self.steps as f64),
            SamplerKind::Mala => Some(0.0),
            SamplerKind::Ula => None,
        }
    }
}

/// Runs a chain until `stop` fires after some step or `max_steps` is
/// reached. Step errors are reported with the 1-based index of the failing
/// step.
pub fn run_chain<T, O, F>(
    obj: &O,
    config: &ChainConfig,
    kind: SamplerKind,
    mut stop: F,
) -> Result<(ChainRun<T>, Vec<Sample<T>>)>
where
    T: Scalar,
    O: Objective<T> + ?Sized,
    F: FnMut(&ChainState<T>) -> bool,
{
    let constants = obj.constants();
    let h = config.schedule.step_size(&constants, 0)?;
    let x0 = initial_point(obj, &config.init, &mut config.init_stream())?;
    let mut state = ChainState::new(x0);
    let mut proposal = config.proposal_stream();
    let mut accept = config.accept_stream();
    let mut samples = Vec::new();
    let mut converged_at = None;
    for k in 0..config.max_steps {
        let h_k = if k == 0 {
            h
        } else {
            config.schedule.step_size(&constants, k)?
        };
        let outcome = match kind {
            SamplerKind::Ula => ula_step(obj, &mut state, h_k, &mut proposal).map(|_| ()),
            SamplerKind::Mala => {
                mala_step(obj, &mut state, h_k, &mut proposal, &mut accept).map(|_| ())
            }
        };
        outcome.map_err(|e| Error::at_step(k + 1, e))?;
        if config.thin > 0 && state.iteration % config.thin == 0 {
            samples.push(Sample {
                step: state.iteration,
                position: state.position.clone(),
            });
        }
        if stop(&state) {
            converged_at = Some(state.iteration);
            break;
        }
    }
    let run = ChainRun {
        kind,
        steps: state.iteration,
        gradient_queries: state.gradient_queries,
        value_queries: state.value_queries,
        accepted: state.accepted_count,
        converged_at,
        step_size: h,
        final_state: state,
    };
    Ok((run, samples))
}

/// Writes samples as CSV: `step,x0,x1,...`, one row per retained sample.
pub fn write_samples_csv<T: Scalar, W: Write>(out: W, samples: &[Sample<T>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let dim = samples.first().map(|s| s.position.dim()).unwrap_or(0);
    let mut header = vec!["step".to_string()];
    header.extend((0..dim).map(|j| format!("x{j}")));
    w.write_record(&header)?;
    for s in samples {
        let mut row = vec![s.step.to_string()];
        row.extend(s.position.iter().map(|v| format!("{:e}", v.as_f64())));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
