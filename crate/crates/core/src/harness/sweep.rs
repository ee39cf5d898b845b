use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::sync::Mutex;
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Algo, Cell, SweepConfig};
use super::em_trial::em_trial;
use super::instance::{build_instance, GmmInstance};
use super::plot::emit_plot;
use super::records::{append_csv, read_csv, sort_records, write_csv, Outcome, RunRecord};
use super::sampler_trial::{sampler_trial, SamplerTrialSpec};
use super::summary::{summarize, Summary};
use crate::diagnostics::{
    estimate_optimum, estimate_sampler_references, ConvergenceCriterion, OptimumReference,
    SamplerProtocol, SamplerReference,
};
use crate::error::{Error, Result};
use crate::numerics::RngStream;
use crate::objectives::{GmmPosterior, Objective, ObjectiveConstants, Pinned};
use crate::samplers::SamplerKind;

pub const OBJECTIVE_NAME: &str = "gmm_sparse";

/// Reference values of one dimension; failures are kept as messages so
/// they can be reported per cell.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DimReferences {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub optimum: Option<std::result::Result<OptimumReference, String>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ula: Option<std::result::Result<SamplerReference, String>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mala: Option<std::result::Result<SamplerReference, String>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
struct ReferenceCache {
    /// Serialized inputs the references depend on.
    fingerprint: String,
    dims: BTreeMap<usize, DimReferences>,
}

/// Everything the cells of one dimension share.
#[derive(Debug, Clone)]
pub struct PreparedDim {
    pub d: usize,
    pub instance: GmmInstance,
    /// The posterior with `L` pinned to the step-size curvature.
    pub target: Pinned<GmmPosterior<f64>>,
    pub step_size: f64,
    pub references: DimReferences,
}

/// `min(c alpha / C + 2m, N / sigma^2 + 2m)`: both bound the largest
/// Hessian eigenvalue of `U` from above.
pub fn step_curvature(post: &GmmPosterior<f64>) -> f64 {
    post.constants().l.min(post.curvature_bound())
}

fn dataset_stream(cfg: &SweepConfig, d: usize) -> RngStream {
    RngStream::new(cfg.seed, 0xda7a).derive(d as u64)
}

fn reference_seed(cfg: &SweepConfig, d: usize) -> u64 {
    RngStream::new(cfg.seed, 0x5ef).derive(d as u64).next_u64()
}

fn fingerprint(cfg: &SweepConfig) -> String {
    serde_json::json!({
        "seed": cfg.seed,
        "gmm": cfg.gmm,
        "step_scale": cfg.sampler.step_scale,
        "optimum": cfg.optimum_reference,
        "sampler": cfg.sampler_reference,
    })
    .to_string()
}

fn failure_message(e: Error) -> String {
    match e {
        Error::NonConvergentReference(msg) => msg,
        other => other.to_string(),
    }
}

fn sampler_protocol(cfg: &SweepConfig, d: usize, kind: SamplerKind) -> SamplerProtocol {
    SamplerProtocol {
        kind,
        seed: reference_seed(cfg, d),
        ..cfg.sampler_reference.clone()
    }
}

/// Builds the instance of dimension `d` and estimates the references the
/// listed algorithms need, reusing `cached` entries.
pub fn prepare_dim(
    cfg: &SweepConfig,
    d: usize,
    algos: &BTreeSet<Algo>,
    cached: DimReferences,
) -> Result<PreparedDim> {
    let instance = build_instance(d, &cfg.gmm, &mut dataset_stream(cfg, d))?;
    let post = instance.posterior.clone();
    let l = step_curvature(&post);
    let constants = ObjectiveConstants {
        l,
        ..post.constants()
    };
    let target = Pinned::with_constants(post.clone(), constants);
    let step_size = cfg.sampler.step_scale / l;
    let mut refs = cached;
    if algos.contains(&Algo::Em) && refs.optimum.is_none() {
        info!("d={d}: estimating optimum reference");
        let protocol = crate::diagnostics::OptimumProtocol {
            seed: reference_seed(cfg, d),
            ..cfg.optimum_reference.clone()
        };
        refs.optimum = Some(estimate_optimum(&post, &protocol).map_err(failure_message));
    }
    for (algo, kind) in [
        (Algo::Ula, SamplerKind::Ula),
        (Algo::Mala, SamplerKind::Mala),
    ] {
        let slot = match kind {
            SamplerKind::Ula => &mut refs.ula,
            SamplerKind::Mala => &mut refs.mala,
        };
        if algos.contains(&algo) && slot.is_none() {
            info!("d={d}: estimating {algo} reference at h = {step_size:e}");
            let protocol = sampler_protocol(cfg, d, kind);
            let view = |mu: &[f64]| post.canonical(mu);
            *slot = Some(
                estimate_sampler_references(&target, step_size, &protocol, &view)
                    .map_err(failure_message),
            );
        }
    }
    Ok(PreparedDim {
        d,
        instance,
        target,
        step_size,
        references: refs,
    })
}

fn base_record(cell: &Cell, prepared: &PreparedDim, seed: u64) -> RunRecord {
    let post = &prepared.instance.posterior;
    RunRecord {
        algo: cell.algo.name().to_string(),
        objective: OBJECTIVE_NAME.to_string(),
        dim: cell.d,
        mixtures: post.mixtures,
        n_data: post.n_points(),
        trial: cell.trial,
        seed,
        step_size: (cell.algo != Algo::Em).then_some(prepared.step_size),
        queries: None,
        outcome: Outcome::Error,
        wall_ms: 0,
        final_value: None,
        acceptance_rate: None,
        error: None,
    }
}

fn reference<T: Clone>(slot: &Option<std::result::Result<T, String>>, what: &str) -> Result<T> {
    match slot {
        Some(Ok(r)) => Ok(r.clone()),
        Some(Err(msg)) => Err(Error::NonConvergentReference(msg.clone())),
        None => Err(Error::MissingReference(what.to_string())),
    }
}

fn run_prepared(
    cfg: &SweepConfig,
    prepared: &PreparedDim,
    cell: &Cell,
    record: &mut RunRecord,
) -> Result<()> {
    let seed = record.seed;
    match cell.algo {
        Algo::Em => {
            let opt = reference(&prepared.references.optimum, "optimum")?;
            let t = em_trial(
                &prepared.instance.posterior,
                opt.value,
                cfg.em.value_tol,
                cfg.budget,
                &cfg.em.restart,
                &mut RngStream::new(seed, 0),
            )?;
            record.queries = Some(t.queries);
            record.outcome = if t.converged {
                Outcome::Converged
            } else {
                Outcome::Exhausted
            };
            record.final_value = Some(t.final_value);
        }
        Algo::Ula | Algo::Mala => {
            let (kind, slot) = match cell.algo {
                Algo::Ula => (SamplerKind::Ula, &prepared.references.ula),
                _ => (SamplerKind::Mala, &prepared.references.mala),
            };
            let r = reference(slot, cell.algo.name())?;
            let (vt, mt) = cfg.sampler.tolerance.resolve(&r);
            let criterion =
                ConvergenceCriterion::sampler(vt, mt, r.expected_value, r.expected_mean.clone())?;
            let spec = SamplerTrialSpec {
                kind,
                step_size: prepared.step_size,
                budget: cfg.budget,
                burn_in: cfg.sampler.burn_in,
                block: cfg.sampler.block,
                max_backoffs: cfg.sampler.max_backoffs,
            };
            let post = &prepared.instance.posterior;
            let view = |mu: &[f64]| post.canonical(mu);
            let t = sampler_trial(
                &prepared.target,
                &spec,
                &criterion,
                &view,
                &RngStream::new(seed, 0),
            )?;
            record.step_size = Some(t.step_size);
            record.queries = Some(t.queries);
            record.outcome = if t.converged {
                Outcome::Converged
            } else {
                Outcome::Exhausted
            };
            record.final_value = Some(t.final_value);
            record.acceptance_rate = t.acceptance_rate;
        }
    }
    Ok(())
}

/// Runs one cell on a prepared dimension. Failures become error records.
pub fn run_cell(cfg: &SweepConfig, prepared: &PreparedDim, cell: &Cell) -> RunRecord {
    let start = Instant::now();
    let mut record = base_record(cell, prepared, cell.seed(cfg.seed));
    if cfg.budget == 0 {
        record.queries = Some(0);
        record.outcome = Outcome::Exhausted;
    } else if let Err(e) = run_prepared(cfg, prepared, cell, &mut record) {
        warn!("{} d={} trial {}: {e}", cell.algo, cell.d, cell.trial);
        record.queries = None;
        record.final_value = None;
        record.acceptance_rate = None;
        record.outcome = Outcome::Error;
        record.error = Some(e.to_string());
    }
    if cfg.record_wall_time {
        record.wall_ms = start.elapsed().as_millis() as u64;
    }
    record
}

/// One cell from scratch: dataset, references, run. A zero budget returns
/// an exhausted record without estimating references.
pub fn run_experiment(cell: &Cell, cfg: &SweepConfig) -> Result<RunRecord> {
    let algos = if cfg.budget == 0 {
        BTreeSet::new()
    } else {
        BTreeSet::from([cell.algo])
    };
    let prepared = prepare_dim(cfg, cell.d, &algos, DimReferences::default())?;
    Ok(run_cell(cfg, &prepared, cell))
}

fn load_cache(cfg: &SweepConfig) -> ReferenceCache {
    let fp = fingerprint(cfg);
    let Some(path) = &cfg.output.references else {
        return ReferenceCache {
            fingerprint: fp,
            ..ReferenceCache::default()
        };
    };
    match fs::read_to_string(path)
        .ok()
        .and_then(|s| serde_json::from_str::<ReferenceCache>(&s).ok())
    {
        Some(c) if c.fingerprint == fp => c,
        _ => ReferenceCache {
            fingerprint: fp,
            ..ReferenceCache::default()
        },
    }
}

fn store_cache(cfg: &SweepConfig, cache: &ReferenceCache) -> Result<()> {
    if let Some(path) = &cfg.output.references {
        fs::write(path, serde_json::to_string_pretty(cache)?)?;
    }
    Ok(())
}

/// Completed records from an earlier, interrupted run of the same sweep.
fn load_completed(cfg: &SweepConfig, path: &Path) -> Vec<RunRecord> {
    let Ok(file) = fs::File::open(path) else {
        return Vec::new();
    };
    let records = match read_csv(file) {
        Ok(r) => r,
        Err(e) => {
            warn!("ignoring unreadable {}: {e}", path.display());
            return Vec::new();
        }
    };
    let wanted: BTreeMap<(String, usize, usize), u64> = cfg
        .cells()
        .iter()
        .map(|c| ((c.algo.name().to_string(), c.d, c.trial), c.seed(cfg.seed)))
        .collect();
    let mut seen = BTreeSet::new();
    records
        .into_iter()
        .filter(|r| r.outcome != Outcome::Error && r.objective == OBJECTIVE_NAME)
        .filter(|r| wanted.get(&(r.algo.clone(), r.dim, r.trial)) == Some(&r.seed))
        .filter(|r| seen.insert((r.algo.clone(), r.dim, r.trial)))
        .collect()
}

fn thread_count(cfg: &SweepConfig) -> usize {
    if cfg.workers > 0 {
        return cfg.workers;
    }
    std::env::var("SAMPLOPT_WORKERS")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n: &usize| n > 0)
        .unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub records: Vec<RunRecord>,
    pub summary: Summary,
    /// Cells skipped because an earlier run had completed them.
    pub resumed: usize,
}

/// Runs every cell of the sweep, resuming from the CSV output if it holds
/// completed cells of the same configuration, and writes the CSV, the
/// summary and the plot. Per-cell failures become error rows.
pub fn sweep(cfg: &SweepConfig) -> Result<SweepOutcome> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count(cfg))
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    pool.install(|| sweep_in_pool(cfg))
}

fn sweep_in_pool(cfg: &SweepConfig) -> Result<SweepOutcome> {
    let cells = cfg.cells();
    let mut done = match &cfg.output.csv {
        Some(p) => load_completed(cfg, p),
        None => Vec::new(),
    };
    let resumed = done.len();
    let finished: BTreeSet<(String, usize, usize)> = done
        .iter()
        .map(|r| (r.algo.clone(), r.dim, r.trial))
        .collect();
    let todo: Vec<Cell> = cells
        .into_iter()
        .filter(|c| !finished.contains(&(c.algo.name().to_string(), c.d, c.trial)))
        .collect();
    if resumed > 0 {
        info!(
            "resuming: {resumed} cells already done, {} to go",
            todo.len()
        );
    }

    let mut needs: BTreeMap<usize, BTreeSet<Algo>> = BTreeMap::new();
    for c in &todo {
        needs.entry(c.d).or_default().insert(c.algo);
    }
    let mut cache = load_cache(cfg);
    let prepared: Vec<Result<PreparedDim>> = needs
        .par_iter()
        .map(|(&d, algos)| {
            prepare_dim(
                cfg,
                d,
                algos,
                cache.dims.get(&d).cloned().unwrap_or_default(),
            )
        })
        .collect();
    let mut by_dim = BTreeMap::new();
    let mut failed_dims = BTreeMap::new();
    for (p, &d) in prepared.into_iter().zip(needs.keys()) {
        match p {
            Ok(p) => {
                cache.dims.insert(d, p.references.clone());
                by_dim.insert(d, p);
            }
            Err(e) => {
                failed_dims.insert(d, e.to_string());
            }
        }
    }
    store_cache(cfg, &cache)?;

    // rows are appended as cells finish so an interrupted sweep can resume
    let sink = match &cfg.output.csv {
        Some(path) => {
            let mut f = fs::File::create(path)?;
            write_csv(&mut f, &done)?;
            Some(Mutex::new(f))
        }
        None => None,
    };
    let fresh: Vec<RunRecord> = todo
        .par_iter()
        .map(|cell| {
            let record = match by_dim.get(&cell.d) {
                Some(p) => run_cell(cfg, p, cell),
                None => RunRecord {
                    algo: cell.algo.name().to_string(),
                    objective: OBJECTIVE_NAME.to_string(),
                    dim: cell.d,
                    mixtures: 0,
                    n_data: 0,
                    trial: cell.trial,
                    seed: cell.seed(cfg.seed),
                    step_size: None,
                    queries: None,
                    outcome: Outcome::Error,
                    wall_ms: 0,
                    final_value: None,
                    acceptance_rate: None,
                    error: Some(failed_dims.get(&cell.d).cloned().unwrap_or_default()),
                },
            };
            if let Some(sink) = &sink {
                let mut f = sink.lock().expect("csv sink poisoned");
                if let Err(e) = append_csv(&mut *f, &record) {
                    warn!("could not append to the CSV: {e}");
                }
            }
            record
        })
        .collect();
    done.extend(fresh);
    sort_records(&mut done);
    if let Some(path) = &cfg.output.csv {
        write_csv(fs::File::create(path)?, &done)?;
    }
    let summary = summarize(&done, Some(cfg.budget));
    if let Some(path) = &cfg.output.summary {
        fs::write(path, summary.to_json()?)?;
    }
    if let Some(path) = &cfg.output.plot {
        emit_plot(&summary, path)?;
    }
    Ok(SweepOutcome {
        records: done,
        summary,
        resumed,
    })
}
