use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::instance::{build_instance, GmmSettings};
use super::records::{Outcome, RunRecord};
use crate::error::{Error, Result};
use crate::numerics::RngStream;
use crate::objectives::{
    hard_objective_relaxed, quadratic_objective, GmmPosterior, Objective, ObjectiveConstants,
    Pinned,
};
use crate::optimizers::{em_init_from_data, run_em, run_gd};
use crate::samplers::{
    initial_point, run_chain, ChainConfig, InitLaw, Sample, SamplerKind, StepSchedule,
};

/// Algorithms a single run can use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunAlgo {
    Ula,
    Mala,
    Em,
    Gd,
}

impl RunAlgo {
    pub fn name(self) -> &'static str {
        match self {
            RunAlgo::Ula => "ula",
            RunAlgo::Mala => "mala",
            RunAlgo::Em => "em",
            RunAlgo::Gd => "gd",
        }
    }
}

impl fmt::Display for RunAlgo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RunAlgo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [RunAlgo::Ula, RunAlgo::Mala, RunAlgo::Em, RunAlgo::Gd]
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown algorithm {s:?} (expected ula, mala, em or gd)"
                ))
            })
    }
}

/// Objectives a single run can target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    Quadratic,
    PackedWell,
    Gmm,
}

impl ObjectiveKind {
    pub fn name(self) -> &'static str {
        match self {
            ObjectiveKind::Quadratic => "quadratic",
            ObjectiveKind::PackedWell => "packed_well",
            ObjectiveKind::Gmm => "gmm",
        }
    }
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ObjectiveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quadratic" => Ok(ObjectiveKind::Quadratic),
            "packed_well" | "packed-well" => Ok(ObjectiveKind::PackedWell),
            "gmm" => Ok(ObjectiveKind::Gmm),
            _ => Err(Error::invalid(format!(
                "unknown objective {s:?} (expected quadratic, packed_well or gmm)"
            ))),
        }
    }
}

/// One fixed-length run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub algo: RunAlgo,
    pub objective: ObjectiveKind,
    pub dim: usize,
    /// Iterations (sampler steps, GD steps or EM sweeps).
    pub steps: u64,
    pub seed: u64,
    /// Step size; defaults to `0.5 / L`.
    pub step_size: Option<f64>,
    /// Curvature of the quadratic.
    pub curvature: f64,
    /// `(L, m, R, eps)` of the packed well.
    pub well: (f64, f64, f64, f64),
    pub gmm: GmmSettings,
    /// Keep every `thin`-th sampler iterate; 0 keeps none.
    pub thin: u64,
}

impl RunSpec {
    pub fn new(algo: RunAlgo, objective: ObjectiveKind, dim: usize, steps: u64, seed: u64) -> Self {
        RunSpec {
            algo,
            objective,
            dim,
            steps,
            seed,
            step_size: None,
            curvature: 1.0,
            well: (1.0, 0.25, 2.0, 0.02),
            gmm: GmmSettings::default(),
            thin: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingleRun {
    pub record: RunRecord,
    pub samples: Vec<Sample<f64>>,
}

fn record(spec: &RunSpec, mixtures: usize, n_data: usize) -> RunRecord {
    RunRecord {
        algo: spec.algo.name().to_string(),
        objective: spec.objective.name().to_string(),
        dim: spec.dim,
        mixtures,
        n_data,
        trial: 0,
        seed: spec.seed,
        step_size: None,
        queries: None,
        outcome: Outcome::Exhausted,
        wall_ms: 0,
        final_value: None,
        acceptance_rate: None,
        error: None,
    }
}

fn step_size(spec: &RunSpec, l: f64) -> Result<f64> {
    let h = spec.step_size.unwrap_or(0.5 / l);
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid(format!(
            "step size must be positive, got {h}"
        )));
    }
    Ok(h)
}

fn generic<O: Objective<f64>>(spec: &RunSpec, obj: &O, mut rec: RunRecord) -> Result<SingleRun> {
    let h = step_size(spec, obj.constants().l)?;
    rec.step_size = Some(h);
    match spec.algo {
        RunAlgo::Ula | RunAlgo::Mala => {
            let kind = if spec.algo == RunAlgo::Ula {
                SamplerKind::Ula
            } else {
                SamplerKind::Mala
            };
            let mut cfg = ChainConfig::new(StepSchedule::Constant { h }, spec.steps, spec.seed);
            cfg.thin = spec.thin;
            let (run, samples) = run_chain(obj, &cfg, kind, |_| false)?;
            rec.queries = Some(run.gradient_queries);
            rec.final_value = Some(obj.value(&run.final_state.position)?);
            rec.acceptance_rate = run.acceptance_rate();
            Ok(SingleRun {
                record: rec,
                samples,
            })
        }
        RunAlgo::Gd => {
            let x0 = initial_point(
                obj,
                &InitLaw::GaussianOverL,
                &mut RngStream::new(spec.seed, 0).derive(0),
            )?;
            let run = run_gd(obj, x0, h, spec.steps, |_, _, _| false)?;
            rec.queries = Some(run.gradient_queries);
            rec.final_value = run.values.last().copied();
            Ok(SingleRun {
                record: rec,
                samples: Vec::new(),
            })
        }
        RunAlgo::Em => Err(Error::invalid("EM needs the gmm objective")),
    }
}

/// Runs `spec.steps` iterations without a stopping rule. The record's
/// `converged` column is `false`: the whole budget is always spent.
pub fn run_single(spec: &RunSpec) -> Result<SingleRun> {
    if spec.steps == 0 {
        return Err(Error::invalid("steps must be at least 1"));
    }
    match spec.objective {
        ObjectiveKind::Quadratic => {
            let obj = quadratic_objective(spec.dim, spec.curvature)?;
            generic(spec, &obj, record(spec, 0, 0))
        }
        ObjectiveKind::PackedWell => {
            let (l, m, r, eps) = spec.well;
            let mut rng = RngStream::new(spec.seed, 0x3e11);
            let obj = hard_objective_relaxed::<f64>(l, m, r, eps, spec.dim, &mut rng, 1 << 16)?;
            generic(spec, &obj, record(spec, 0, 0))
        }
        ObjectiveKind::Gmm => {
            let inst = build_instance(spec.dim, &spec.gmm, &mut RngStream::new(spec.seed, 0xda7a))?;
            let post: GmmPosterior<f64> = inst.posterior;
            let rec = record(spec, post.mixtures, post.n_points());
            if spec.algo == RunAlgo::Em {
                let mut rng = RngStream::new(spec.seed, 0).derive(0);
                let mu0 = em_init_from_data(&post, &mut rng, 0.0)?;
                let run = run_em(&post, mu0, |_, _| false, spec.steps)?;
                let mut rec = rec;
                rec.queries = Some(run.gradient_query_equivalents);
                rec.final_value = Some(post.value(&run.final_state.mu)?);
                return Ok(SingleRun {
                    record: rec,
                    samples: Vec::new(),
                });
            }
            let l = post.constants().l.min(post.curvature_bound());
            let constants = ObjectiveConstants {
                l,
                ..post.constants()
            };
            generic(spec, &Pinned::with_constants(post, constants), rec)
        }
    }
}
