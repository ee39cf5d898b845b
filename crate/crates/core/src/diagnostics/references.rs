//! Reference values for the sweep's convergence criteria: the optimum
//! `mu*` of a mixture posterior and the expectations of `U` and of the
//! position under a sampler's stationary law.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{RngStream, Vector};
use crate::objectives::{GmmPosterior, Objective};
use crate::optimizers::{em_init_from_data, run_em};
use crate::samplers::{initial_point, mala_step, ula_step, ChainState, InitLaw, SamplerKind};

/// Knobs of the optimum search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimumProtocol {
    /// Data points used as seeds of the single-component mode search
    /// (all of them when `N` is smaller).
    pub mode_seeds: usize,
    /// Extra modes beyond `M` whose combinations are polished.
    pub extra_modes: usize,
    /// Additional polished runs from random data initializations.
    pub random_restarts: usize,
    /// EM iterations per polish; multiplied by 10 on each retry.
    pub polish_iters: u64,
    /// Polishing stops once the projected remaining decrease of `U` is
    /// below this.
    pub polish_gap: f64,
    /// Largest gradient norm accepted at the reference optimum, relative to
    /// `max(1, |U|)`.
    pub stationarity_tol: f64,
    /// A deeper polish that lowers `U` by less than this settles the value.
    pub agreement: f64,
    pub retry_cap: usize,
    pub seed: u64,
}

impl Default for OptimumProtocol {
    fn default() -> Self {
        OptimumProtocol {
            mode_seeds: 4096,
            extra_modes: 3,
            random_restarts: 20,
            polish_iters: 100_000,
            polish_gap: 1e-10,
            stationarity_tol: 1e-8,
            agreement: 1e-8,
            retry_cap: 3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimumReference {
    pub mu: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    /// Distinct single-component modes found.
    pub modes: usize,
    pub candidates: usize,
}

/// Fixed point of the single-component EM map started at `start`:
/// `x <- sum_n w_n y_n / sum_n w_n` with `w_n = W_n / (W_n + C)`.
fn single_component_mode(post: &GmmPosterior<f64>, start: &[f64], max_iters: usize) -> Vec<f64> {
    let d = post.dim;
    let inv = 1.0 / (2.0 * post.sigma * post.sigma);
    let c = post.weight_coeff;
    let cc = post.constant_component;
    let mut x = start.to_vec();
    let mut acc = vec![0.0; d];
    for _ in 0..max_iters {
        acc.iter_mut().for_each(|a| *a = 0.0);
        let mut total = 0.0;
        for y in &post.data {
            let w = c * (-crate::numerics::dist_sq(y.as_slice(), &x) * inv).exp();
            let w = if cc > 0.0 { w / (w + cc) } else { 1.0 };
            total += w;
            for (a, v) in acc.iter_mut().zip(y.iter()) {
                *a += w * v;
            }
        }
        if total <= 0.0 {
            break;
        }
        let mut moved = 0.0;
        for (xi, a) in x.iter_mut().zip(&acc) {
            let nx = a / total;
            moved += (nx - *xi) * (nx - *xi);
            *xi = nx;
        }
        if moved.sqrt() < 1e-12 {
            break;
        }
    }
    x
}

/// Gain `sum_n ln(1 + W_n / C)` of a single component at `x`.
fn mode_gain(post: &GmmPosterior<f64>, x: &[f64]) -> f64 {
    let inv = 1.0 / (2.0 * post.sigma * post.sigma);
    let cc = post.constant_component.max(f64::MIN_POSITIVE);
    post.data
        .iter()
        .map(|y| {
            (post.weight_coeff * (-crate::numerics::dist_sq(y.as_slice(), x) * inv).exp() / cc)
                .ln_1p()
        })
        .sum()
}

/// Subsets of size `m` of `0..k`, in lexicographic order.
fn combinations(k: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0; m];
    fn rec(pos: usize, lo: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if pos == cur.len() {
            out.push(cur.clone());
            return;
        }
        for v in lo..k {
            cur[pos] = v;
            rec(pos + 1, v + 1, k, cur, out);
        }
    }
    rec(0, 0, k, &mut cur, &mut out);
    out
}

/// Remaining decrease of a linearly converging sequence estimated from its
/// last three values: `delta * r / (1 - r)` with `r` the ratio of the last two
/// decrements. Infinite when the decrements do not shrink or the history is
/// incomplete (non-finite entries).
pub fn projected_decrease(u2: f64, u1: f64, u0: f64) -> f64 {
    if !(u2.is_finite() && u1.is_finite() && u0.is_finite()) {
        return f64::INFINITY;
    }
    let (prev, last) = (u2 - u1, u1 - u0);
    if last <= 0.0 {
        return 0.0;
    }
    if prev <= last {
        return f64::INFINITY;
    }
    let r = last / prev;
    last * r / (1.0 - r)
}

/// Runs EM from `mu0` until the projected remaining decrease of `U` drops
/// below `gap`, or for `iters` iterations.
pub(crate) fn polish(
    post: &GmmPosterior<f64>,
    mu0: Vector,
    iters: u64,
    gap: f64,
) -> Result<(Vector, f64)> {
    let mut hist = [f64::INFINITY; 2];
    let run = run_em(
        post,
        mu0,
        |_, u| {
            let rest = projected_decrease(hist[0], hist[1], u);
            hist = [hist[1], u];
            rest < gap
        },
        iters,
    )?;
    let value = *run.values.last().expect("at least one value");
    Ok((run.final_state.mu, value))
}

/// Searches for the global minimizer of a mixture posterior.
///
/// Single-component EM from every seed point finds the modes of the
/// weighted kernel sum; every set of `M` distinct modes among the best `M + extra`
/// and a set of random data initializations are then polished with full EM.
/// The lowest polished value is the reference. It is accepted when it is
/// stationary to `stationarity_tol`, or when polishing it again with ten
/// times the iterations and a thousandth of the gap lowers `U` by less than
/// `agreement`; at most `retry_cap` such rounds are tried.
pub fn estimate_optimum(
    post: &GmmPosterior<f64>,
    protocol: &OptimumProtocol,
) -> Result<OptimumReference> {
    let n = post.n_points();
    let m = post.mixtures;
    let mut rng = RngStream::new(protocol.seed, 0x0b7);
    let seeds: Vec<usize> = if n <= protocol.mode_seeds {
        (0..n).collect()
    } else {
        let mut pool: Vec<usize> = (0..n).collect();
        for j in 0..protocol.mode_seeds {
            let p = j + rng.index(n - j);
            pool.swap(j, p);
        }
        pool.truncate(protocol.mode_seeds);
        pool
    };
    let mut modes: Vec<(Vec<f64>, f64)> = Vec::new();
    for &s in &seeds {
        let x = single_component_mode(post, post.data[s].as_slice(), 5000);
        if modes
            .iter()
            .all(|(y, _)| crate::numerics::dist_sq(y, &x).sqrt() > 1e-6)
        {
            let g = mode_gain(post, &x);
            modes.push((x, g));
        }
    }
    modes.sort_by(|a, b| b.1.total_cmp(&a.1));
    let k = modes.len().min(m + protocol.extra_modes);
    let mut starts: Vec<Vector> = combinations(k, m)
        .into_iter()
        .map(|set| {
            Vector::from_vec(
                set.iter()
                    .flat_map(|&i| modes[i].0.iter().copied())
                    .collect(),
            )
        })
        .collect();
    for _ in 0..protocol.random_restarts {
        starts.push(em_init_from_data(post, &mut rng, 0.0)?);
    }
    let candidates = starts.len();
    let mut iters = protocol.polish_iters;
    let mut gap = protocol.polish_gap;
    let mut best: Option<(Vector, f64)> = None;
    for s in &starts {
        let (mu, v) = polish(post, s.clone(), iters, gap)?;
        if best.as_ref().is_none_or(|(_, bv)| v < *bv) {
            best = Some((mu, v));
        }
    }
    let (mut mu, mut value) = best.expect("at least one start");
    for _ in 0..=protocol.retry_cap {
        let grad_norm = post.grad(&mu)?.norm();
        if grad_norm <= protocol.stationarity_tol * value.abs().max(1.0) {
            return Ok(OptimumReference {
                mu: mu.into_vec(),
                value,
                grad_norm,
                modes: modes.len(),
                candidates,
            });
        }
        // flat directions converge slowly; accept once a deeper polish no
        // longer moves the value
        iters = iters.saturating_mul(10);
        gap *= 1e-3;
        let (next, next_value) = polish(post, mu, iters, gap)?;
        let settled = value - next_value < protocol.agreement;
        mu = next;
        value = next_value.min(value);
        if settled {
            let grad_norm = post.grad(&mu)?.norm();
            return Ok(OptimumReference {
                mu: mu.into_vec(),
                value,
                grad_norm,
                modes: modes.len(),
                candidates,
            });
        }
    }
    Err(Error::NonConvergentReference(format!(
        "optimum value still moving after {} deeper polishes",
        protocol.retry_cap
    )))
}

/// How sampler tolerances are set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Tolerance {
    /// Fixed values for the `U` gap and the mean gap.
    Absolute { value: f64, mean: f64 },
    /// Fractions of the reference standard deviation of `U` and of the
    /// reference spread `sqrt(trace Cov)` of the position.
    Relative { fraction: f64 },
}

impl Tolerance {
    /// `(value_tol, mean_tol)` for a reference.
    pub fn resolve(&self, reference: &SamplerReference) -> (f64, f64) {
        match *self {
            Tolerance::Absolute { value, mean } => (value, mean),
            Tolerance::Relative { fraction } => {
                (fraction * reference.value_sd, fraction * reference.spread)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Tolerance::Absolute { value, mean } => value > 0.0 && mean > 0.0,
            Tolerance::Relative { fraction } => fraction > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid("tolerances must be positive"))
        }
    }
}

/// Knobs of the replicated long sampler runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerProtocol {
    pub kind: SamplerKind,
    pub replicas: usize,
    /// Steps per replica; multiplied by 10 on each retry.
    pub steps: u64,
    pub burn_in: f64,
    /// Replicas must agree within these tolerances.
    pub agreement: Tolerance,
    pub retry_cap: usize,
    pub seed: u64,
}

impl Default for SamplerProtocol {
    fn default() -> Self {
        SamplerProtocol {
            kind: SamplerKind::Ula,
            replicas: 4,
            steps: 20_000,
            burn_in: 0.1,
            agreement: Tolerance::Relative { fraction: 0.1 },
            retry_cap: 2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerReference {
    pub expected_value: f64,
    pub expected_mean: Vec<f64>,
    /// Standard deviation of `U` under the sampled law.
    pub value_sd: f64,
    /// `sqrt(trace Cov)` of the position.
    pub spread: f64,
    pub steps_per_replica: u64,
    pub replicas: usize,
}

struct ReplicaStats {
    value: f64,
    mean: Vec<f64>,
    value_sq: f64,
    norm_sq: f64,
    count: f64,
}

/// Maps a position to the statistic whose mean is tracked.
pub type View<'a> = &'a (dyn Fn(&[f64]) -> Vec<f64> + Sync);

fn replica<O: Objective<f64>>(
    obj: &O,
    kind: SamplerKind,
    h: f64,
    steps: u64,
    burn_in: f64,
    view: View<'_>,
    rng: RngStream,
) -> Result<ReplicaStats> {
    let x0 = initial_point(obj, &InitLaw::GaussianOverL, &mut rng.derive(0))?;
    let mut noise = rng.derive(1);
    let mut accept = rng.derive(2);
    let mut state = ChainState::new(x0);
    let skip = (burn_in * steps as f64).floor() as u64;
    let dim = obj.dim();
    let mut s = ReplicaStats {
        value: 0.0,
        mean: vec![0.0; dim],
        value_sq: 0.0,
        norm_sq: 0.0,
        count: 0.0,
    };
    for k in 0..steps {
        let (u, _) = state.evaluate(obj).map_err(|e| Error::at_step(k, e))?;
        if k >= skip {
            s.value += u;
            s.value_sq += u * u;
            let v = view(state.position.as_slice());
            for (a, x) in s.mean.iter_mut().zip(&v) {
                *a += x;
            }
            s.norm_sq += v.iter().map(|x| x * x).sum::<f64>();
            s.count += 1.0;
        }
        match kind {
            SamplerKind::Ula => ula_step(obj, &mut state, h, &mut noise).map(|_| ()),
            SamplerKind::Mala => mala_step(obj, &mut state, h, &mut noise, &mut accept).map(|_| ()),
        }
        .map_err(|e| Error::at_step(k + 1, e))?;
    }
    let c = s.count.max(1.0);
    s.value /= c;
    s.value_sq /= c;
    s.norm_sq /= c;
    s.mean.iter_mut().for_each(|a| *a /= c);
    Ok(s)
}

/// Expectations of `U` and of `view(x)` under the stationary law of the
/// protocol's sampler at step `h`, from independent replicas that must
/// agree with each other.
pub fn estimate_sampler_references<O: Objective<f64> + Sync>(
    obj: &O,
    h: f64,
    protocol: &SamplerProtocol,
    view: View<'_>,
) -> Result<SamplerReference> {
    protocol.agreement.validate()?;
    if protocol.replicas == 0 || protocol.steps == 0 {
        return Err(Error::invalid("need at least one replica and one step"));
    }
    let master = RngStream::new(protocol.seed, 0x5e7);
    let mut steps = protocol.steps;
    let mut worst = (0.0, 0.0);
    for _ in 0..=protocol.retry_cap {
        let reps: Vec<ReplicaStats> = {
            use rayon::prelude::*;
            (0..protocol.replicas)
                .into_par_iter()
                .map(|r| {
                    replica(
                        obj,
                        protocol.kind,
                        h,
                        steps,
                        protocol.burn_in,
                        view,
                        master.derive(r as u64),
                    )
                })
                .collect::<Result<Vec<_>>>()?
        };
        let n = reps.len() as f64;
        let value = reps.iter().map(|r| r.value).sum::<f64>() / n;
        let dim = reps[0].mean.len();
        let mean: Vec<f64> = (0..dim)
            .map(|j| reps.iter().map(|r| r.mean[j]).sum::<f64>() / n)
            .collect();
        let value_sq = reps.iter().map(|r| r.value_sq).sum::<f64>() / n;
        let norm_sq = reps.iter().map(|r| r.norm_sq).sum::<f64>() / n;
        let reference = SamplerReference {
            expected_value: value,
            value_sd: (value_sq - value * value).max(0.0).sqrt(),
            spread: (norm_sq - mean.iter().map(|v| v * v).sum::<f64>())
                .max(0.0)
                .sqrt(),
            expected_mean: mean,
            steps_per_replica: steps,
            replicas: reps.len(),
        };
        let (vtol, mtol) = protocol.agreement.resolve(&reference);
        let mut value_gap: f64 = 0.0;
        let mut mean_gap: f64 = 0.0;
        for a in &reps {
            for b in &reps {
                value_gap = value_gap.max((a.value - b.value).abs());
                mean_gap = mean_gap.max(crate::numerics::dist_sq(&a.mean, &b.mean).sqrt());
            }
        }
        if value_gap < vtol && mean_gap < mtol {
            return Ok(reference);
        }
        worst = (value_gap, mean_gap);
        steps = steps.saturating_mul(10);
    }
    Err(Error::NonConvergentReference(format!(
        "sampler replicas disagree (value gap {:.3e}, mean gap {:.3e}) after {} retries",
        worst.0, worst.1, protocol.retry_cap
    )))
}

/// Both reference sets for a mixture posterior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmReferences {
    pub optimum: OptimumReference,
    pub sampler: SamplerReference,
}

/// `(mu*, E[U], E[mu])` for a mixture posterior sampled by ULA at step `h`;
/// the mean is taken over label-canonical parameters.
pub fn estimate_references<O>(
    post: &GmmPosterior<f64>,
    sampler_target: &O,
    h: f64,
    optimum: &OptimumProtocol,
    sampler: &SamplerProtocol,
) -> Result<GmmReferences>
where
    O: Objective<f64> + Sync,
{
    Ok(GmmReferences {
        optimum: estimate_optimum(post, optimum)?,
        sampler: estimate_sampler_references(sampler_target, h, sampler, &|mu| post.canonical(mu))?,
    })
}
