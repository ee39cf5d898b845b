//! Correctness checks with known answers, run by `samplopt validate`.

use serde::{Deserialize, Serialize};

use crate::bounds::{
    beta_requirement, log_sobolev_lower_bound, mala_mixing_bound, optimization_lower_bound,
    packing_number, ula_mixing_bound,
};
use crate::diagnostics::{grid_density, histogram, tv_distance, GridSpec};
use crate::error::Result;
use crate::gmm_data::{
    adversarial_sigma, gen_adversarial_dataset, gen_sparse_dataset, validate_dataset, Dataset,
};
use crate::harness::{build_instance, GmmSettings};
use crate::numerics::{default_fd_step, finite_diff_grad, gaussian_vector, RngStream, Vector};
use crate::objectives::{
    hard_objective_new, hard_objective_relaxed, packing_centers, quadratic_objective, temper,
    GmmPosterior, Objective, PackedWellObjective,
};
use crate::optimizers::em_sweep;
use crate::samplers::{initial_point, mala_step, ula_step, ChainState, InitLaw, SamplerKind};

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl OracleCheck {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        OracleCheck {
            name: name.to_string(),
            passed,
            detail,
        }
    }

    fn failed(name: &str, err: crate::Error) -> Self {
        OracleCheck::new(name, false, format!("error: {err}"))
    }
}

/// Chain lengths and repetition counts of the suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleScale {
    pub gradient_points: usize,
    pub smoothness_pairs: usize,
    pub packing_cases: usize,
    /// Steps of each d = 1 packed-well chain.
    pub well_steps: u64,
    /// Steps of each quadratic chain.
    pub quadratic_steps: u64,
    pub trap_trials: usize,
    pub trap_iters: u64,
}

impl OracleScale {
    pub fn full() -> Self {
        OracleScale {
            gradient_points: 100,
            smoothness_pairs: 1000,
            packing_cases: 50,
            well_steps: 2_000_000,
            quadratic_steps: 1_000_000,
            trap_trials: 20,
            trap_iters: 1000,
        }
    }

    pub fn quick() -> Self {
        OracleScale {
            gradient_points: 30,
            smoothness_pairs: 200,
            packing_cases: 10,
            well_steps: 1_000_000,
            quadratic_steps: 300_000,
            trap_trials: 3,
            trap_iters: 200,
        }
    }
}

fn rel_err(g: &Vector, fd: &Vector) -> f64 {
    let diff = g.sub(fd).norm();
    if diff == 0.0 {
        0.0
    } else {
        diff / g.norm().max(1e-12)
    }
}

fn fd_error<O: Objective<f64> + ?Sized>(obj: &O, x: &Vector) -> Result<f64> {
    let g = obj.grad(x)?;
    let fd = finite_diff_grad(|v: &Vector| obj.value(v), x, default_fd_step(x))?;
    Ok(rel_err(&g, &fd))
}

/// Worst relative error `|grad - fd| / |grad|` over `points` random points of
/// each objective family, plain and tempered, in dimensions 1 to 10.
pub fn gradient_fidelity(points: usize, seed: u64) -> Result<Vec<(String, f64)>> {
    let mut rng = RngStream::new(seed, 0x9ad);
    let mut worst = vec![
        ("quadratic".to_string(), 0.0f64),
        ("packed_well".to_string(), 0.0),
        ("gmm".to_string(), 0.0),
        ("tempered quadratic".to_string(), 0.0),
        ("tempered packed_well".to_string(), 0.0),
        ("tempered gmm".to_string(), 0.0),
    ];
    let beta = 0.7;
    for k in 0..points {
        let d = 1 + k % 10;
        let q = quadratic_objective(d, 1.5)?;
        let x = gaussian_vector(&mut rng, d, 1.0)?;
        worst[0].1 = worst[0].1.max(fd_error(&q, &x)?);
        worst[3].1 = worst[3].1.max(fd_error(&temper(q, beta)?, &x)?);

        let well: PackedWellObjective<f64> =
            hard_objective_relaxed(1.0, 0.25, 2.0, 0.02, d, &mut rng, 64)?;
        let x = loop {
            // half the points near the secret well, the rest anywhere
            let x = if k % 2 == 0 {
                well.secret_center()
                    .add(&gaussian_vector(&mut rng, d, well.well_radius * 0.5)?)
            } else {
                gaussian_vector(&mut rng, d, 1.5)?
            };
            if well.boundary_distance(&x) > 1e-3 {
                break x;
            }
        };
        worst[1].1 = worst[1].1.max(fd_error(&well, &x)?);
        worst[4].1 = worst[4].1.max(fd_error(&temper(well, beta)?, &x)?);

        let d = d.max(2);
        let inst = build_instance(d.min(8), &GmmSettings::default(), &mut rng)?;
        let post = inst.posterior;
        let mut mu = Vec::with_capacity(post.param_dim());
        for _ in 0..post.mixtures {
            let y = &post.data[rng.index(post.n_points())];
            mu.extend(y.iter().map(|v| v + post.sigma * rng.normal()));
        }
        let mu = Vector::from_vec(mu);
        worst[2].1 = worst[2].1.max(fd_error(&post, &mu)?);
        worst[5].1 = worst[5].1.max(fd_error(&temper(post, beta)?, &mu)?);
    }
    Ok(worst)
}

/// Largest deviations found on the packed-well instance.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HardInstanceReport {
    pub bottom_error: f64,
    pub plateau_max_abs: f64,
    pub value_jump: f64,
    pub grad_jump: f64,
    /// Max of `|g(x) - g(z)| / (L |x - z|)`; at most 1 when smooth.
    pub smoothness_ratio: f64,
    /// Min of `<g(x) - g(z), x - z> / (m |x - z|^2)` over pairs on a ray
    /// outside `B(0, R)`; at least 1 when strongly convex there.
    pub convexity_ratio: f64,
}

fn unit(rng: &mut RngStream, d: usize) -> Result<Vector> {
    loop {
        let v = gaussian_vector(rng, d, 1.0)?;
        let n = v.norm();
        if n > 1e-6 {
            return Ok(v.scaled(1.0 / n));
        }
    }
}

/// Exactness of the packed-well construction: the secret bottom, the
/// plateau, continuity across both piece boundaries, smoothness and strong
/// convexity outside `R`.
pub fn hard_instance_report(pairs: usize, seed: u64) -> Result<HardInstanceReport> {
    let mut rng = RngStream::new(seed, 0x4a2d);
    let mut rep = HardInstanceReport {
        convexity_ratio: f64::INFINITY,
        ..HardInstanceReport::default()
    };
    for d in [1usize, 2, 3] {
        let (l, m, r, eps) = (4.0, 1.0, 2.0, 0.005);
        let obj: PackedWellObjective<f64> = hard_objective_new(l, m, r, eps, d, &mut rng, 1000)?;
        let c = obj.secret_center().clone();
        rep.bottom_error = rep.bottom_error.max((obj.value(&c)? + eps).abs());

        for (i, center) in obj.centers.iter().enumerate() {
            if i == obj.secret_index {
                continue;
            }
            let x = center.add(&unit(&mut rng, d)?.scaled(obj.well_radius * rng.uniform()));
            rep.plateau_max_abs = rep
                .plateau_max_abs
                .max(obj.value(&x)?.abs())
                .max(obj.grad(&x)?.norm());
        }

        let delta = 1e-10;
        for _ in 0..50 {
            let u = unit(&mut rng, d)?;
            for (base, rad) in [(c.clone(), obj.well_radius), (Vector::zeros(d), r / 2.0)] {
                let inner = base.add(&u.scaled(rad - delta));
                let outer = base.add(&u.scaled(rad + delta));
                if (obj.boundary_distance(&inner) - delta).abs() > 1e-6 {
                    // another boundary is nearby
                    continue;
                }
                rep.value_jump = rep
                    .value_jump
                    .max((obj.value(&inner)? - obj.value(&outer)?).abs());
                rep.grad_jump = rep
                    .grad_jump
                    .max(obj.grad(&inner)?.sub(&obj.grad(&outer)?).norm());
            }
        }

        for k in 0..pairs {
            // close pairs inside the secret well, far pairs anywhere in B(0, R)
            let (x, z) = if k % 2 == 0 {
                let x = c.add(&gaussian_vector(&mut rng, d, obj.well_radius * 0.7)?);
                let z = x.add(&gaussian_vector(&mut rng, d, obj.well_radius * 0.2)?);
                (x, z)
            } else {
                let x = unit(&mut rng, d)?.scaled(r * rng.uniform());
                let z = x.add(&unit(&mut rng, d)?.scaled(r * rng.uniform()));
                (x, z)
            };
            let dist = x.dist(&z);
            if dist > 0.0 {
                let ratio = obj.grad(&x)?.sub(&obj.grad(&z)?).norm() / (l * dist);
                rep.smoothness_ratio = rep.smoothness_ratio.max(ratio);
            }
            let u = unit(&mut rng, d)?;
            let (a, b) = (
                r * (1.0 + 2.0 * rng.uniform()),
                r * (1.0 + 2.0 * rng.uniform()),
            );
            let (x, z) = (u.scaled(a), u.scaled(b));
            let dist_sq = x.dist_sq(&z);
            if dist_sq > 1e-12 {
                let inner = obj.grad(&x)?.sub(&obj.grad(&z)?).dot(&x.sub(&z));
                rep.convexity_ratio = rep.convexity_ratio.min(inner / (m * dist_sq));
            }
        }
    }
    Ok(rep)
}

/// Worst violation over `cases` random packings: `(min pairwise distance
/// minus 2r, max overshoot of the container)`, both relative to `r`.
pub fn packing_report(cases: usize, seed: u64) -> Result<(f64, f64)> {
    let mut rng = RngStream::new(seed, 0x9ac);
    let mut gap = f64::INFINITY;
    let mut overshoot = f64::NEG_INFINITY;
    for _ in 0..cases {
        let d = 1 + rng.index(6);
        let r_outer = 0.5 + 2.5 * rng.uniform();
        let r = r_outer * (0.08 + 0.4 * rng.uniform());
        let centers: Vec<Vector> = packing_centers(r_outer, r, d, 5000)?;
        for (i, a) in centers.iter().enumerate() {
            overshoot = overshoot.max((a.norm() + r - r_outer) / r);
            for b in &centers[i + 1..] {
                gap = gap.min((a.dist(b) - 2.0 * r) / r);
            }
        }
    }
    Ok((gap, overshoot))
}

/// TV distance of a d = 1 chain histogram from the grid quadrature of
/// `exp(-U)`.
pub fn chain_tv<O: Objective<f64>>(
    obj: &O,
    kind: SamplerKind,
    h: f64,
    steps: u64,
    grid: &GridSpec,
    seed: u64,
) -> Result<(f64, f64)> {
    let exact = grid_density(obj, grid)?;
    let master = RngStream::new(seed, 0);
    let x0 = initial_point(obj, &InitLaw::GaussianOverL, &mut master.derive(0))?;
    let mut noise = master.derive(1);
    let mut accept = master.derive(2);
    let mut state = ChainState::new(x0);
    let burn = steps / 10;
    let mut kept = Vec::with_capacity((steps - burn) as usize);
    for k in 0..steps {
        match kind {
            SamplerKind::Ula => ula_step(obj, &mut state, h, &mut noise).map(|_| ())?,
            SamplerKind::Mala => {
                mala_step(obj, &mut state, h, &mut noise, &mut accept).map(|_| ())?
            }
        }
        if k >= burn {
            kept.push(state.position.as_slice()[0]);
        }
    }
    let hist = histogram(kept.iter().map(std::slice::from_ref), grid)?;
    Ok((tv_distance(&hist, &exact)?, state.acceptance_rate()))
}

/// The d = 1 packed well used by the sampler checks.
pub fn sampler_well() -> Result<PackedWellObjective<f64>> {
    hard_objective_relaxed(1.0, 0.25, 2.0, 0.02, 1, &mut RngStream::new(0, 0), 16)
}

/// Sample variance and acceptance rate of a chain on `U = x^2 / 2`.
pub fn quadratic_chain(kind: SamplerKind, h: f64, steps: u64, seed: u64) -> Result<(f64, f64)> {
    let obj = quadratic_objective(1, 1.0)?;
    let master = RngStream::new(seed, 0);
    let mut noise = master.derive(1);
    let mut accept = master.derive(2);
    let mut state = ChainState::new(Vector::zeros(1));
    let burn = steps / 100;
    let (mut s1, mut s2, mut n) = (0.0, 0.0, 0.0);
    for k in 0..steps {
        match kind {
            SamplerKind::Ula => ula_step(&obj, &mut state, h, &mut noise).map(|_| ())?,
            SamplerKind::Mala => {
                mala_step(&obj, &mut state, h, &mut noise, &mut accept).map(|_| ())?
            }
        }
        if k >= burn {
            let x = state.position.as_slice()[0];
            s1 += x;
            s2 += x * x;
            n += 1.0;
        }
    }
    let mean = s1 / n;
    Ok((s2 / n - mean * mean, state.acceptance_rate()))
}

/// The EM-trapping setup: separated points plus tight clusters, `C = 1`,
/// `c = sigma^2 / 3200`.
pub fn trap_posterior(rng: &mut RngStream) -> Result<(Dataset, GmmPosterior<f64>)> {
    let ds = gen_adversarial_dataset(16, 4, 64, rng)?;
    let sigma = adversarial_sigma(64);
    let post = GmmPosterior::new(
        ds.vectors(),
        sigma,
        4,
        sigma * sigma / 3200.0,
        1.0,
        1.0,
        1.0,
    )?;
    Ok((ds, post))
}

/// Largest distance from each component to the separated point it started
/// next to, after `iters` EM sweeps, over `trials` datasets.
pub fn em_trap_distance(trials: usize, iters: u64, seed: u64) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(trials);
    for t in 0..trials {
        let mut rng = RngStream::new(seed, t as u64);
        let (ds, post) = trap_posterior(&mut rng)?;
        let separated = ds.n - 9 * ds.m;
        let mut lone: Vec<usize> = (0..separated).filter(|i| !ds.anchors.contains(i)).collect();
        for j in 0..ds.m {
            let pick = j + rng.index(lone.len() - j);
            lone.swap(j, pick);
        }
        let targets: Vec<Vector> = lone[..ds.m].iter().map(|&i| post.data[i].clone()).collect();
        let mut mu = Vec::new();
        for y in &targets {
            let off = unit(&mut rng, ds.d)?.scaled(0.01 * rng.uniform());
            mu.extend(y.add(&off).iter());
        }
        let mut mu = Vector::from_vec(mu);
        for _ in 0..iters {
            mu = em_sweep(&post, &mu)?.next;
        }
        let worst = targets
            .iter()
            .enumerate()
            .map(|(i, y)| Vector::from_f64(post.component(&mu, i)).dist(y))
            .fold(0.0, f64::max);
        out.push(worst);
    }
    Ok(out)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * b.abs().max(1e-300)
}

/// The worked examples of the bound calculators: `(label, got, want)`.
pub fn bound_examples() -> Vec<(&'static str, f64, f64)> {
    let s = 2.0 * std::f64::consts::PI.powi(2) + std::f64::consts::PI;
    vec![
        (
            "rho(m=1,L=1,R=0)",
            log_sobolev_lower_bound(1.0, 1.0, 0.0),
            0.5,
        ),
        (
            "rho(m=2,L=1,R=0)",
            log_sobolev_lower_bound(2.0, 1.0, 0.0),
            1.0,
        ),
        (
            "rho(m=1,L=1,R=0.25)",
            log_sobolev_lower_bound(1.0, 1.0, 0.25),
            0.5 * (-1f64).exp(),
        ),
        (
            "ula(eps=0.5,d=4,L=1,m=0.5,R=0.5)",
            ula_mixing_bound(0.5, 4, 1.0, 0.5, 0.5, 1.0),
            8f64.exp() * 4.0 * 16.0 * 16f64.ln(),
        ),
        (
            "mala(eps=1/e,d=1,L=2,m=1,R=0)",
            mala_mixing_bound((-1f64).exp(), 1, 2.0, 1.0, 0.0, 1.0),
            2f64.powf(1.5) * (2f64.ln() + 1.0).powf(1.5),
        ),
        ("eta(1,0.1,2)", packing_number(1.0, 0.1, 2) as f64, 20.0),
        ("eta(3r,r,5)", packing_number(0.3, 0.1, 5) as f64, 1.0),
        (
            "T(L=2pi^2+pi,R=4,eps=1/16,d=2)",
            optimization_lower_bound(s, 4.0, 1.0 / 16.0, 2, 1.0),
            12.0,
        ),
        (
            "beta(L=4s,R=1,eps=0.5,d=2)",
            beta_requirement(0.5, 2, 4.0 * s, 1.0, 1.0),
            2.0 * 2f64.ln(),
        ),
    ]
}

fn sparse_round_trip() -> Result<bool> {
    let ds = gen_sparse_dataset(5, 32, &mut RngStream::new(3, 0))?;
    let back = Dataset::from_json(&ds.to_json()?)?;
    let adv = gen_adversarial_dataset(8, 2, 30, &mut RngStream::new(3, 1))?;
    let adv_back = Dataset::from_json(&adv.to_json()?)?;
    Ok(back == ds
        && adv_back == adv
        && validate_dataset(&back).is_empty()
        && validate_dataset(&adv_back).is_empty())
}

/// Runs every check. Failures to run a check are reported as failed checks.
pub fn oracle_suite(scale: &OracleScale, seed: u64) -> Vec<OracleCheck> {
    let mut out = Vec::new();

    match gradient_fidelity(scale.gradient_points, seed) {
        Ok(worst) => {
            for (name, err) in worst {
                out.push(OracleCheck::new(
                    &format!("gradient vs finite differences: {name}"),
                    err < 1e-5,
                    format!("max relative error {err:.2e}"),
                ));
            }
        }
        Err(e) => out.push(OracleCheck::failed("gradient vs finite differences", e)),
    }

    match hard_instance_report(scale.smoothness_pairs, seed) {
        Ok(r) => {
            out.push(OracleCheck::new(
                "packed well: bottom and plateau",
                r.bottom_error < 1e-12 && r.plateau_max_abs == 0.0,
                format!(
                    "|U(c) + eps| = {:.1e}, plateau max {:.1e}",
                    r.bottom_error, r.plateau_max_abs
                ),
            ));
            out.push(OracleCheck::new(
                "packed well: continuity across pieces",
                r.value_jump < 1e-9 && r.grad_jump < 1e-6,
                format!(
                    "value jump {:.1e}, gradient jump {:.1e}",
                    r.value_jump, r.grad_jump
                ),
            ));
            out.push(OracleCheck::new(
                "packed well: smoothness and convexity outside R",
                r.smoothness_ratio <= 1.0 + 1e-6 && r.convexity_ratio >= 1.0 - 1e-6,
                format!(
                    "max |dg| / (L |dx|) = {:.6}, min <dg, dx> / (m |dx|^2) = {:.6}",
                    r.smoothness_ratio, r.convexity_ratio
                ),
            ));
        }
        Err(e) => out.push(OracleCheck::failed("packed well", e)),
    }

    match packing_report(scale.packing_cases, seed) {
        Ok((gap, over)) => out.push(OracleCheck::new(
            "packing: separation and containment",
            gap >= -1e-12 && over <= 1e-12 && packing_number(1.0, 0.1, 2) == 20,
            format!("min (dist - 2r)/r = {gap:.2e}, max overshoot/r = {over:.2e}"),
        )),
        Err(e) => out.push(OracleCheck::failed("packing", e)),
    }

    let well = sampler_well().and_then(|w| Ok((GridSpec::line(-6.0, 6.0, 1200)?, w)));
    match well.and_then(|(grid, w)| {
        let ula = chain_tv(&w, SamplerKind::Ula, 1e-3, scale.well_steps, &grid, seed)?;
        let mala = chain_tv(&w, SamplerKind::Mala, 1e-3, scale.well_steps, &grid, seed)?;
        Ok((ula.0, mala.0))
    }) {
        Ok((ula, mala)) => {
            out.push(OracleCheck::new(
                "d=1 packed well: ULA histogram vs quadrature",
                ula < 0.05,
                format!("TV {ula:.4}"),
            ));
            out.push(OracleCheck::new(
                "d=1 packed well: MALA histogram vs quadrature",
                mala < 0.05 && mala <= ula + 0.01,
                format!("TV {mala:.4} (ULA {ula:.4})"),
            ));
        }
        Err(e) => out.push(OracleCheck::failed("d=1 packed well", e)),
    }

    let h = 0.1;
    match quadratic_chain(SamplerKind::Ula, h, scale.quadratic_steps, seed) {
        Ok((var, _)) => {
            let want = 1.0 / (1.0 - h / 2.0);
            out.push(OracleCheck::new(
                "quadratic: ULA stationary variance",
                (var / want - 1.0).abs() < 0.02,
                format!("variance {var:.4}, AR(1) value {want:.4}"),
            ));
        }
        Err(e) => out.push(OracleCheck::failed("quadratic: ULA", e)),
    }
    match quadratic_chain(SamplerKind::Mala, h, scale.quadratic_steps / 2, seed) {
        Ok((var, acc)) => out.push(OracleCheck::new(
            "quadratic: MALA variance and acceptance",
            (var - 1.0).abs() < 0.03 && acc > 0.5,
            format!("variance {var:.4}, acceptance {acc:.3}"),
        )),
        Err(e) => out.push(OracleCheck::failed("quadratic: MALA", e)),
    }

    match em_trap_distance(scale.trap_trials, scale.trap_iters, seed) {
        Ok(d) => {
            let held = d.iter().filter(|&&x| x <= 0.01).count();
            let worst = d.iter().copied().fold(0.0, f64::max);
            out.push(OracleCheck::new(
                "EM stays at separated points",
                held == d.len(),
                format!("{held}/{} trials held, worst distance {worst:.2e}", d.len()),
            ));
        }
        Err(e) => out.push(OracleCheck::failed("EM stays at separated points", e)),
    }

    let bad: Vec<String> = bound_examples()
        .into_iter()
        .filter(|(_, got, want)| !close(*got, *want))
        .map(|(label, got, want)| format!("{label}: {got} != {want}"))
        .collect();
    out.push(OracleCheck::new(
        "bound calculators: worked examples",
        bad.is_empty(),
        if bad.is_empty() {
            format!("{} examples", bound_examples().len())
        } else {
            bad.join("; ")
        },
    ));

    match sparse_round_trip() {
        Ok(ok) => out.push(OracleCheck::new(
            "datasets: JSON round trip and validation",
            ok,
            String::new(),
        )),
        Err(e) => out.push(OracleCheck::failed("datasets", e)),
    }
    out
}
