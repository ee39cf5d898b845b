//! Correctness oracles and convergence detection: grid quadrature of
//! `exp(-U)` in one or two dimensions, histograms and total variation,
//! windowed running averages, and the convergence criteria of the sweep.

mod references;

pub use references::{
    estimate_optimum, estimate_references, estimate_sampler_references, projected_decrease,
    GmmReferences, OptimumProtocol, OptimumReference, SamplerProtocol, SamplerReference, Tolerance,
    View,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Vector;
use crate::objectives::Objective;

/// Mass on the boundary cells above which [`grid_density`] warns.
pub const BOUNDARY_MASS_WARN: f64 = 1e-6;

/// One grid axis: `bins` equal cells covering `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() || bins == 0 {
            return Err(Error::invalid(format!(
                "bad grid axis [{lo}, {hi}) with {bins} bins"
            )));
        }
        Ok(Axis { lo, hi, bins })
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.bins as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.width()
    }

    /// Cell index of `x`, or `None` outside `[lo, hi)`.
    pub fn locate(&self, x: f64) -> Option<usize> {
        if !(x >= self.lo && x < self.hi) {
            return None;
        }
        let i = ((x - self.lo) / self.width()) as usize;
        Some(i.min(self.bins - 1))
    }
}

/// Product grid in one or two dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub axes: Vec<Axis>,
}

impl GridSpec {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(Error::invalid(format!(
                "grids are supported in 1 or 2 dimensions, got {}",
                axes.len()
            )));
        }
        Ok(GridSpec { axes })
    }

    pub fn line(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        GridSpec::new(vec![Axis::new(lo, hi, bins)?])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn cells(&self) -> usize {
        self.axes.iter().map(|a| a.bins).product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(Axis::width).product()
    }

    /// Row-major cell index (first axis slowest).
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        if x.len() != self.dim() {
            return None;
        }
        let mut idx = 0;
        for (a, &v) in self.axes.iter().zip(x) {
            idx = idx * a.bins + a.locate(v)?;
        }
        Some(idx)
    }

    pub fn center(&self, mut idx: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (k, a) in self.axes.iter().enumerate().rev() {
            out[k] = a.center(idx % a.bins);
            idx /= a.bins;
        }
        out
    }

    fn on_boundary(&self, mut idx: usize) -> bool {
        let mut edge = false;
        for a in self.axes.iter().rev() {
            let i = idx % a.bins;
            edge |= i == 0 || i + 1 == a.bins;
            idx /= a.bins;
        }
        edge
    }
}

/// Normalized cell probabilities on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDensity {
    pub spec: GridSpec,
    pub cells: Vec<f64>,
    /// Fraction of the input that fell outside the grid (histograms) or the
    /// mass on boundary cells (quadrature).
    pub clipped: f64,
}

/// Midpoint-rule discretization of `p* ~ exp(-U)`.
pub fn grid_density<O: Objective<f64>>(obj: &O, spec: &GridSpec) -> Result<GridDensity> {
    if obj.dim() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            got: obj.dim(),
        });
    }
    let n = spec.cells();
    let mut neg_u = Vec::with_capacity(n);
    for idx in 0..n {
        let u = obj.value(&Vector::from_vec(spec.center(idx)))?;
        if !u.is_finite() {
            return Err(Error::NonFinite(format!(
                "U is not finite at grid cell {idx}"
            )));
        }
        neg_u.push(-u);
    }
    let top = neg_u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut cells: Vec<f64> = neg_u.iter().map(|v| (v - top).exp()).collect();
    let total: f64 = cells.iter().sum();
    for c in &mut cells {
        *c /= total;
    }
    let boundary: f64 = (0..n)
        .filter(|&i| spec.on_boundary(i))
        .map(|i| cells[i])
        .sum();
    if boundary >= BOUNDARY_MASS_WARN {
        log::warn!("grid boundary cells carry {boundary:.3e} of the mass; widen the grid");
    }
    Ok(GridDensity {
        spec: spec.clone(),
        cells,
        clipped: boundary,
    })
}

/// Streaming histogram.
#[derive(Debug, Clone)]
pub struct Histogram {
    spec: GridSpec,
    counts: Vec<u64>,
    total: u64,
    clipped: u64,
}

impl Histogram {
    pub fn new(spec: GridSpec) -> Self {
        let n = spec.cells();
        Histogram {
            spec,
            counts: vec![0; n],
            total: 0,
            clipped: 0,
        }
    }

    pub fn add(&mut self, x: &[f64]) {
        self.total += 1;
        match self.spec.locate(x) {
            Some(i) => self.counts[i] += 1,
            None => self.clipped += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn clipped(&self) -> u64 {
        self.clipped
    }

    /// Cell frequencies among the samples that landed on the grid.
    pub fn density(&self) -> Result<GridDensity> {
        let inside = self.total - self.clipped;
        if inside == 0 {
            return Err(Error::invalid("no samples fell on the grid"));
        }
        Ok(GridDensity {
            spec: self.spec.clone(),
            cells: self
                .counts
                .iter()
                .map(|&c| c as f64 / inside as f64)
                .collect(),
            clipped: self.clipped as f64 / self.total as f64,
        })
    }
}

/// Histogram of a batch of samples.
pub fn histogram<'a, I>(samples: I, spec: &GridSpec) -> Result<GridDensity>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut h = Histogram::new(spec.clone());
    for s in samples {
        h.add(s);
    }
    h.density()
}

/// `(1/2) sum |p_i - q_i|` on a shared grid.
pub fn tv_distance(p: &GridDensity, q: &GridDensity) -> Result<f64> {
    if p.spec != q.spec || p.cells.len() != q.cells.len() {
        return Err(Error::GridMismatch(format!("{:?} vs {:?}", p.spec, q.spec)));
    }
    let s: f64 = p
        .cells
        .iter()
        .zip(&q.cells)
        .map(|(a, b)| (a - b).abs())
        .sum();
    Ok((0.5 * s).clamp(0.0, 1.0))
}

/// Running averages of `U` and of the position over a window that drops the
/// first `burn_in` fraction of the elapsed steps. The drop point is rounded
/// down to a multiple of `block` steps so only block prefix sums are stored.
#[derive(Debug, Clone)]
pub struct RunningAverages {
    dim: usize,
    block: usize,
    burn_in: f64,
    steps: usize,
    value_sum: f64,
    position_sum: Vec<f64>,
    /// Prefix sums at block boundaries: entry `b` covers steps `0..b*block`.
    value_prefix: Vec<f64>,
    position_prefix: Vec<Vec<f64>>,
}

impl RunningAverages {
    pub fn new(dim: usize, burn_in: f64, block: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&burn_in) || block == 0 {
            return Err(Error::invalid(
                "burn-in must lie in [0, 1) and block must be positive",
            ));
        }
        Ok(RunningAverages {
            dim,
            block,
            burn_in,
            steps: 0,
            value_sum: 0.0,
            position_sum: vec![0.0; dim],
            value_prefix: vec![0.0],
            position_prefix: vec![vec![0.0; dim]],
        })
    }

    pub fn push(&mut self, value: f64, position: &[f64]) {
        debug_assert_eq!(position.len(), self.dim);
        self.value_sum += value;
        for (s, &x) in self.position_sum.iter_mut().zip(position) {
            *s += x;
        }
        self.steps += 1;
        if self.steps.is_multiple_of(self.block) {
            self.value_prefix.push(self.value_sum);
            self.position_prefix.push(self.position_sum.clone());
        }
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of leading steps currently excluded.
    pub fn dropped(&self) -> usize {
        let want = (self.burn_in * self.steps as f64).floor() as usize;
        (want / self.block) * self.block
    }

    /// Window averages `(mean U, mean position)`; `None` before any step.
    pub fn averages(&self) -> Option<(f64, Vec<f64>)> {
        if self.steps == 0 {
            return None;
        }
        let b = self.dropped() / self.block;
        let count = (self.steps - b * self.block) as f64;
        let value = (self.value_sum - self.value_prefix[b]) / count;
        let pos = self
            .position_sum
            .iter()
            .zip(&self.position_prefix[b])
            .map(|(s, p)| (s - p) / count)
            .collect();
        Some((value, pos))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionKind {
    EmValue,
    SamplerValueAndMean,
}

/// Reference values the criteria compare against.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct References {
    /// `U` at the reference optimum.
    pub optimum_value: Option<f64>,
    pub optimum: Option<Vec<f64>>,
    /// Expected `U` under the sampled law.
    pub expected_value: Option<f64>,
    /// Expected position under the sampled law.
    pub expected_mean: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceCriterion {
    pub kind: CriterionKind,
    pub value_tol: f64,
    pub mean_tol: f64,
    pub references: References,
}

/// What a trajectory offers for a convergence check.
#[derive(Debug, Clone, Copy)]
pub enum TrajectoryStats<'a> {
    /// Current optimizer value `U(mu_K)`.
    Value(f64),
    /// Running averages of `U` and of the position.
    Averages { value: f64, mean: &'a [f64] },
}

impl ConvergenceCriterion {
    pub fn em_value(value_tol: f64, optimum_value: f64) -> Result<Self> {
        let c = ConvergenceCriterion {
            kind: CriterionKind::EmValue,
            value_tol,
            mean_tol: f64::INFINITY,
            references: References {
                optimum_value: Some(optimum_value),
                ..References::default()
            },
        };
        c.validate()?;
        Ok(c)
    }

    pub fn sampler(
        value_tol: f64,
        mean_tol: f64,
        expected_value: f64,
        expected_mean: Vec<f64>,
    ) -> Result<Self> {
        let c = ConvergenceCriterion {
            kind: CriterionKind::SamplerValueAndMean,
            value_tol,
            mean_tol,
            references: References {
                expected_value: Some(expected_value),
                expected_mean: Some(expected_mean),
                ..References::default()
            },
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.value_tol > 0.0) || !(self.mean_tol > 0.0) {
            return Err(Error::invalid("convergence tolerances must be positive"));
        }
        Ok(())
    }

    /// Whether the criterion fires for `stats`.
    pub fn check(&self, stats: TrajectoryStats<'_>) -> Result<bool> {
        let refs = &self.references;
        match (self.kind, stats) {
            (CriterionKind::EmValue, TrajectoryStats::Value(u)) => {
                let target = refs
                    .optimum_value
                    .ok_or_else(|| Error::MissingReference("optimum value".into()))?;
                Ok(u - target < self.value_tol)
            }
            (CriterionKind::SamplerValueAndMean, TrajectoryStats::Averages { value, mean }) => {
                let ev = refs
                    .expected_value
                    .ok_or_else(|| Error::MissingReference("expected value".into()))?;
                let em = refs
                    .expected_mean
                    .as_ref()
                    .ok_or_else(|| Error::MissingReference("expected mean".into()))?;
                if em.len() != mean.len() {
                    return Err(Error::DimensionMismatch {
                        expected: em.len(),
                        got: mean.len(),
                    });
                }
                let gap = mean
                    .iter()
                    .zip(em)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                Ok((value - ev).abs() < self.value_tol && gap < self.mean_tol)
            }
            (kind, _) => Err(Error::invalid(format!(
                "statistics do not match criterion {kind:?}"
            ))),
        }
    }

    /// First index `k` (counting from 1) at which the value criterion fires
    /// along an optimizer trajectory `values[0..]`, where `values[k]` is the
    /// value after `k` iterations.
    pub fn first_passage(&self, values: &[f64]) -> Result<Option<usize>> {
        for (k, &u) in values.iter().enumerate().skip(1) {
            if self.check(TrajectoryStats::Value(u))? {
                return Ok(Some(k));
            }
        }
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;
    use crate::objectives::quadratic_objective;
    use proptest::prelude::*;

    struct Flat(usize);

    impl Objective<f64> for Flat {
        fn constants(&self) -> crate::objectives::ObjectiveConstants {
            crate::objectives::ObjectiveConstants {
                l: 1.0,
                m: 1.0,
                r: 0.0,
                dim: self.0,
            }
        }
        fn dim(&self) -> usize {
            self.0
        }
        fn value(&self, _x: &Vector) -> Result<f64> {
            Ok(0.0)
        }
        fn grad(&self, x: &Vector) -> Result<Vector> {
            Ok(Vector::zeros(x.dim()))
        }
    }

    /// Standard normal CDF by composite Simpson quadrature of the density
    /// from -12, independent of any special-function library.
    fn normal_cdf(x: f64) -> f64 {
        let lo = -12.0;
        if x <= lo {
            return 0.0;
        }
        let n = 2000;
        let h = (x - lo) / n as f64;
        let f = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut s = f(lo) + f(x);
        for i in 1..n {
            s += f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn simpson_cdf_sanity() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-12);
        assert!((normal_cdf(1.0) - 0.841_344_746_068_543).abs() < 1e-10);
    }

    #[test]
    fn flat_density_is_uniform() {
        let g = grid_density(&Flat(1), &GridSpec::line(0.0, 1.0, 10).unwrap()).unwrap();
        assert!(g.cells.iter().all(|c| (c - 0.1).abs() < 1e-15));
    }

    #[test]
    fn quadratic_density_matches_normal_cdf() {
        let q = quadratic_objective(1, 1.0).unwrap();
        let spec = GridSpec::line(-8.0, 8.0, 1600).unwrap();
        let g = grid_density(&q, &spec).unwrap();
        assert!((g.cells.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let axis = spec.axes[0];
        for i in 0..1600 {
            let a = axis.lo + i as f64 * axis.width();
            let want = normal_cdf(a + axis.width()) - normal_cdf(a);
            assert!((g.cells[i] - want).abs() < 1e-4);
        }
        for i in 0..800 {
            assert!((g.cells[i] - g.cells[1599 - i]).abs() < 1e-15);
        }
    }

    #[test]
    fn two_dim_grid_layout() {
        let spec = GridSpec::new(vec![
            Axis::new(0.0, 2.0, 2).unwrap(),
            Axis::new(0.0, 3.0, 3).unwrap(),
        ])
        .unwrap();
        assert_eq!(spec.locate(&[1.5, 0.5]), Some(3));
        assert_eq!(spec.center(3), vec![1.5, 0.5]);
        assert_eq!(spec.locate(&[2.0, 0.5]), None);
        let q = quadratic_objective(2, 1.0).unwrap();
        let s = GridSpec::new(vec![Axis::new(-6.0, 6.0, 60).unwrap(); 2]).unwrap();
        let g = grid_density(&q, &s).unwrap();
        assert!((g.cells.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(grid_density(&quadratic_objective(3, 1.0).unwrap(), &s).is_err());
        assert!(GridSpec::new(vec![Axis::new(0.0, 1.0, 2).unwrap(); 3]).is_err());
    }

    #[test]
    fn tv_examples() {
        let spec = GridSpec::line(0.0, 2.0, 2).unwrap();
        let p = histogram([[0.5].as_slice(), [1.5].as_slice()], &spec).unwrap();
        let q = histogram([[0.5].as_slice()], &spec).unwrap();
        assert_eq!(tv_distance(&p, &p).unwrap(), 0.0);
        assert_eq!(tv_distance(&p, &q).unwrap(), 0.5);
        let r = histogram([[1.5].as_slice()], &spec).unwrap();
        assert_eq!(tv_distance(&q, &r).unwrap(), 1.0);
        let other = histogram([[0.5].as_slice()], &GridSpec::line(0.0, 2.0, 4).unwrap()).unwrap();
        assert!(matches!(
            tv_distance(&p, &other),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn histogram_counts_clipped() {
        let spec = GridSpec::line(0.0, 1.0, 4).unwrap();
        let mut h = Histogram::new(spec);
        for x in [-1.0, 0.1, 0.2, 1.0, 0.9] {
            h.add(&[x]);
        }
        assert_eq!(h.clipped(), 2);
        let d = h.density().unwrap();
        assert!((d.clipped - 0.4).abs() < 1e-15);
        assert!((d.cells.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn histogram_of_exact_draws_converges() {
        let q = quadratic_objective(1, 1.0).unwrap();
        let spec = GridSpec::line(-5.0, 5.0, 100).unwrap();
        let target = grid_density(&q, &spec).unwrap();
        let mut rng = RngStream::new(17, 0);
        let mut h = Histogram::new(spec);
        let n = 1_000_000;
        for _ in 0..n {
            h.add(&[rng.normal()]);
        }
        let tv = tv_distance(&h.density().unwrap(), &target).unwrap();
        // midpoint-rule bias is ~1e-4 here, far below the sampling term
        assert!(tv <= 3.0 * 2.0 * (100.0f64 / n as f64).sqrt(), "tv = {tv}");
    }

    fn random_density(rng: &mut RngStream, spec: &GridSpec) -> GridDensity {
        let raw: Vec<f64> = (0..spec.cells())
            .map(|_| rng.uniform() * rng.uniform())
            .collect();
        let s: f64 = raw.iter().sum();
        GridDensity {
            spec: spec.clone(),
            cells: raw.iter().map(|v| v / s).collect(),
            clipped: 0.0,
        }
    }

    proptest! {
        #[test]
        fn tv_is_a_metric(seed in any::<u64>(), bins in 1usize..40) {
            let spec = GridSpec::line(0.0, 1.0, bins).unwrap();
            let mut rng = RngStream::new(seed, 0);
            let (p, q, r) = (random_density(&mut rng, &spec), random_density(&mut rng, &spec), random_density(&mut rng, &spec));
            let pq = tv_distance(&p, &q).unwrap();
            prop_assert!((0.0..=1.0).contains(&pq));
            prop_assert_eq!(pq, tv_distance(&q, &p).unwrap());
            prop_assert_eq!(tv_distance(&p, &p).unwrap(), 0.0);
            prop_assert!(pq <= tv_distance(&p, &r).unwrap() + tv_distance(&r, &q).unwrap() + 1e-12);
            if bins > 1 {
                prop_assert!(pq > 0.0 || p.cells == q.cells);
            }
        }
    }

    #[test]
    fn running_averages_window() {
        let mut ra = RunningAverages::new(1, 0.1, 10).unwrap();
        assert!(ra.averages().is_none());
        for k in 0..100 {
            ra.push(k as f64, &[1.0]);
        }
        assert_eq!(ra.dropped(), 10);
        let (v, m) = ra.averages().unwrap();
        assert!((v - (10..100).sum::<usize>() as f64 / 90.0).abs() < 1e-12);
        assert_eq!(m, vec![1.0]);
        for k in 100..119 {
            ra.push(k as f64, &[1.0]);
        }
        // 11.9 rounds down to the block boundary at 10
        assert_eq!(ra.dropped(), 10);
    }

    #[test]
    fn criteria() {
        let em = ConvergenceCriterion::em_value(1e-6, -3.0).unwrap();
        assert!(em.check(TrajectoryStats::Value(-3.0)).unwrap());
        assert!(!em.check(TrajectoryStats::Value(-2.9)).unwrap());
        let traj = [0.0, -1.0, -2.5, -2.9999995, -3.0];
        assert_eq!(em.first_passage(&traj).unwrap(), Some(3));

        let s = ConvergenceCriterion::sampler(1e-3, 1e-2, 1.0, vec![0.0, 0.0]).unwrap();
        assert!(s
            .check(TrajectoryStats::Averages {
                value: 1.0,
                mean: &[0.0, 0.0]
            })
            .unwrap());
        assert!(!s
            .check(TrajectoryStats::Averages {
                value: 1.0,
                mean: &[0.1, 0.0]
            })
            .unwrap());
        assert!(s.check(TrajectoryStats::Value(1.0)).is_err());

        let mut missing = s.clone();
        missing.references.expected_mean = None;
        assert!(matches!(
            missing.check(TrajectoryStats::Averages {
                value: 1.0,
                mean: &[0.0, 0.0]
            }),
            Err(Error::MissingReference(_))
        ));
        assert!(ConvergenceCriterion::em_value(0.0, 1.0).is_err());
    }
}
