//! Synthetic datasets for the mixture experiments: sparse points for the
//! dimension sweep and the clustered adversarial layout that traps EM.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{RngStream, Vector};
use crate::objectives::packing_centers;

/// Norm bound of the separated points in the adversarial layout.
pub const ADVERSARIAL_RADIUS: f64 = 0.45;
/// Minimum pairwise distance of the separated points.
pub const ADVERSARIAL_SEPARATION: f64 = 0.11;
/// Satellites per anchor.
pub const SATELLITES: usize = 9;

/// Default cap on the number of generated points.
pub const DEFAULT_N_MAX: usize = 4096;

const TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Sparse,
    Adversarial,
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DatasetKind::Sparse => "sparse",
            DatasetKind::Adversarial => "adversarial",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub kind: DatasetKind,
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub sigma: f64,
    pub seed: u64,
    /// Indices of the cluster anchors (adversarial only).
    pub anchors: Vec<usize>,
    pub points: Vec<Vec<f64>>,
    /// Size asked for before the cap was applied, when it differs from `N`.
    #[serde(
        rename = "N_requested",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub n_requested: Option<usize>,
}

/// `floor(log2 d)` for `d >= 1`.
pub fn floor_log2(d: usize) -> usize {
    (usize::BITS - 1 - d.max(1).leading_zeros()) as usize
}

/// Requested sweep size `2^d` capped at `n_max`; returns `(N, requested)`.
pub fn capped_size(d: usize, n_max: usize) -> (usize, usize) {
    let requested = if d >= usize::BITS as usize - 1 {
        usize::MAX
    } else {
        1usize << d
    };
    (requested.min(n_max), requested)
}

/// `N` points in `R^d` with `floor(log2 d)` nonzero entries each, placed at
/// uniformly chosen coordinates and drawn uniformly from `[-1, 1]`.
/// Metadata follows the sweep setup: `M = floor(log2 d)`, `sigma = 1/sqrt(d)`.
pub fn gen_sparse_dataset(d: usize, n: usize, rng: &mut RngStream) -> Result<Dataset> {
    if d < 2 {
        return Err(Error::invalid(format!("sparse data needs d >= 2, got {d}")));
    }
    if n == 0 {
        return Err(Error::invalid("need N >= 1"));
    }
    let k = floor_log2(d);
    let mut points = Vec::with_capacity(n);
    let mut coords: Vec<usize> = (0..d).collect();
    for _ in 0..n {
        let mut y = vec![0.0; d];
        for j in 0..k {
            let pick = j + rng.index(d - j);
            coords.swap(j, pick);
        }
        for &c in &coords[..k] {
            y[c] = loop {
                // a zero draw would lose a nonzero entry
                let v = 2.0 * rng.uniform() - 1.0;
                if v != 0.0 {
                    break v;
                }
            };
        }
        points.push(y);
    }
    Ok(Dataset {
        kind: DatasetKind::Sparse,
        d,
        n,
        m: k,
        sigma: 1.0 / (d as f64).sqrt(),
        seed: rng.seed(),
        anchors: Vec::new(),
        points,
        n_requested: None,
    })
}

/// `0.01 / sqrt(log2 N)`.
pub fn adversarial_sigma(n: usize) -> f64 {
    0.01 / (n as f64).log2().sqrt()
}

fn uniform_in_ball(rng: &mut RngStream, d: usize, radius: f64) -> Vec<f64> {
    loop {
        let dir: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            let rad = radius * rng.uniform().powf(1.0 / d as f64);
            return dir.into_iter().map(|v| v * rad / norm).collect();
        }
    }
}

/// Separated points from a packing of `B(0, 0.45)` with spacing `0.11`,
/// followed by 9 satellites within `sigma/2` of each of `M` anchors chosen
/// among the separated points.
pub fn gen_adversarial_dataset(
    d: usize,
    m: usize,
    n: usize,
    rng: &mut RngStream,
) -> Result<Dataset> {
    if d == 0 || m == 0 {
        return Err(Error::invalid("need d >= 1 and M >= 1"));
    }
    if n < (SATELLITES + 1) * m {
        return Err(Error::invalid(format!(
            "need N >= 10 M, got N = {n}, M = {m}"
        )));
    }
    let separated = n - SATELLITES * m;
    let limit = separated.saturating_mul(16).clamp(4096, 1 << 16);
    let candidates: Vec<Vector> =
        packing_centers(ADVERSARIAL_RADIUS, ADVERSARIAL_SEPARATION / 2.0, d, limit)?;
    if candidates.len() < separated {
        return Err(Error::Infeasible(format!(
            "dimension {d} fits at most {} separated points, {separated} requested",
            candidates.len()
        )));
    }
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    for j in 0..separated {
        let pick = j + rng.index(order.len() - j);
        order.swap(j, pick);
    }
    let mut points: Vec<Vec<f64>> = order[..separated]
        .iter()
        .map(|&i| candidates[i].to_f64())
        .collect();
    let mut pool: Vec<usize> = (0..separated).collect();
    for j in 0..m {
        let pick = j + rng.index(separated - j);
        pool.swap(j, pick);
    }
    let anchors = pool[..m].to_vec();
    let sigma = adversarial_sigma(n);
    for &a in &anchors {
        for _ in 0..SATELLITES {
            let off = uniform_in_ball(rng, d, sigma / 2.0);
            let p = points[a].iter().zip(off).map(|(x, o)| x + o).collect();
            points.push(p);
        }
    }
    Ok(Dataset {
        kind: DatasetKind::Adversarial,
        d,
        n,
        m,
        sigma,
        seed: rng.seed(),
        anchors,
        points,
        n_requested: None,
    })
}

/// A broken dataset invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: String,
    pub indices: Vec<usize>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {:?}", self.rule, self.indices)
    }
}

fn norm(p: &[f64]) -> f64 {
    p.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Every invariant of the dataset's kind that fails; empty when valid.
pub fn validate_dataset(ds: &Dataset) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |rule: &str, indices: Vec<usize>| {
        out.push(Violation {
            rule: rule.to_string(),
            indices,
        })
    };
    if ds.points.len() != ds.n {
        push("point count differs from N", vec![]);
    }
    let wrong_dim: Vec<usize> = (0..ds.points.len())
        .filter(|&i| ds.points[i].len() != ds.d)
        .collect();
    if !wrong_dim.is_empty() {
        push("point dimension differs from d", wrong_dim);
        return out;
    }
    let non_finite: Vec<usize> = (0..ds.points.len())
        .filter(|&i| ds.points[i].iter().any(|v| !v.is_finite()))
        .collect();
    if !non_finite.is_empty() {
        push("non-finite coordinate", non_finite);
        return out;
    }
    match ds.kind {
        DatasetKind::Sparse => {
            let k = floor_log2(ds.d);
            for (i, p) in ds.points.iter().enumerate() {
                if p.iter().filter(|&&v| v != 0.0).count() != k {
                    push("nonzero count differs from floor(log2 d)", vec![i]);
                }
                if p.iter().any(|v| v.abs() > 1.0) {
                    push("entry outside [-1, 1]", vec![i]);
                }
            }
        }
        DatasetKind::Adversarial => {
            if ds.n < (SATELLITES + 1) * ds.m || ds.points.len() != ds.n {
                push("N below 10 M", vec![]);
                return out;
            }
            let separated = ds.n - SATELLITES * ds.m;
            let half = ds.sigma / 2.0;
            for i in 0..separated {
                if norm(&ds.points[i]) > ADVERSARIAL_RADIUS + TOL {
                    push("separated point norm above 0.45", vec![i]);
                }
            }
            for i in separated..ds.n {
                if norm(&ds.points[i]) > ADVERSARIAL_RADIUS + half + TOL {
                    push("cluster point norm above 0.45 + sigma/2", vec![i]);
                }
            }
            for i in 0..separated {
                for j in i + 1..separated {
                    if dist(&ds.points[i], &ds.points[j]) < ADVERSARIAL_SEPARATION - TOL {
                        push("separated points closer than 0.11", vec![i, j]);
                    }
                }
            }
            if ds.anchors.len() != ds.m {
                push("anchor count differs from M", vec![]);
            }
            let mut seen = std::collections::BTreeSet::new();
            for &a in &ds.anchors {
                if a >= separated {
                    push("anchor outside the separated group", vec![a]);
                } else if !seen.insert(a) {
                    push("repeated anchor", vec![a]);
                }
            }
            for (k, &a) in ds.anchors.iter().enumerate() {
                if a >= separated {
                    continue;
                }
                for s in 0..SATELLITES {
                    let i = separated + k * SATELLITES + s;
                    if i < ds.n && dist(&ds.points[i], &ds.points[a]) > half + TOL {
                        push("satellite farther than sigma/2 from its anchor", vec![i, a]);
                    }
                }
            }
        }
    }
    out
}

impl Dataset {
    pub fn vectors(&self) -> Vec<Vector> {
        self.points.iter().map(|p| Vector::from_f64(p)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses and validates.
    pub fn from_json(s: &str) -> Result<Self> {
        let ds: Dataset = serde_json::from_str(s)?;
        let violations = validate_dataset(&ds);
        if let Some(v) = violations.first() {
            return Err(Error::Format(format!(
                "dataset fails validation ({} violations, first: {v})",
                violations.len()
            )));
        }
        Ok(ds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floor_log2_values() {
        assert_eq!(floor_log2(1), 0);
        assert_eq!(floor_log2(2), 1);
        assert_eq!(floor_log2(8), 3);
        assert_eq!(floor_log2(15), 3);
        assert_eq!(floor_log2(16), 4);
        assert_eq!(capped_size(5, 4096), (32, 32));
        assert_eq!(capped_size(14, 4096), (4096, 16384));
    }

    #[test]
    fn sparse_support_sizes() {
        let mut rng = RngStream::new(1, 0);
        let ds = gen_sparse_dataset(8, 500, &mut rng).unwrap();
        assert!(ds
            .points
            .iter()
            .all(|p| p.iter().filter(|v| **v != 0.0).count() == 3));
        assert_eq!(ds.m, 3);
        let ds = gen_sparse_dataset(2, 500, &mut rng).unwrap();
        assert!(ds
            .points
            .iter()
            .all(|p| p.iter().filter(|v| **v != 0.0).count() == 1));
        assert!(validate_dataset(&ds).is_empty());
        assert!(gen_sparse_dataset(1, 10, &mut rng).is_err());
    }

    #[test]
    fn sparse_entries_are_centered_uniform() {
        let mut rng = RngStream::new(2, 0);
        let ds = gen_sparse_dataset(4, 50_000, &mut rng).unwrap();
        let nz: Vec<f64> = ds
            .points
            .iter()
            .flatten()
            .copied()
            .filter(|v| *v != 0.0)
            .collect();
        assert_eq!(nz.len(), 100_000);
        assert!(nz.iter().all(|v| v.abs() <= 1.0));
        let mean = nz.iter().sum::<f64>() / nz.len() as f64;
        // sd of the mean is 1/sqrt(3e5) ~ 0.0018
        assert!(mean.abs() < 0.01);
        // coordinate usage is uniform: each of 4 coordinates is used 2/4 of the time
        for c in 0..4 {
            let used = ds.points.iter().filter(|p| p[c] != 0.0).count() as f64 / 50_000.0;
            assert!((used - 0.5).abs() < 0.01);
        }
    }

    #[test]
    fn adversarial_layout_is_valid() {
        let mut rng = RngStream::new(3, 0);
        let ds = gen_adversarial_dataset(16, 4, 64, &mut rng).unwrap();
        assert!(validate_dataset(&ds).is_empty());
        assert_eq!(ds.points.len(), 64);
        let separated = 64 - 36;
        let mut a = ds.anchors.clone();
        a.sort();
        a.dedup();
        assert_eq!(a.len(), 4);
        assert!(a.iter().all(|&i| i < separated));
        let mut min = f64::INFINITY;
        for i in 0..separated {
            for j in 0..i {
                min = min.min(dist(&ds.points[i], &ds.points[j]));
            }
        }
        assert!(min >= 0.11 - 1e-12);
        assert!((ds.sigma - 0.01 / 6f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn adversarial_infeasible_and_bad_sizes() {
        let mut rng = RngStream::new(4, 0);
        match gen_adversarial_dataset(1, 1, 200, &mut rng) {
            Err(Error::Infeasible(msg)) => assert!(msg.contains("at most 7")),
            other => panic!("expected infeasible, got {other:?}"),
        }
        assert!(gen_adversarial_dataset(16, 4, 39, &mut rng).is_err());
    }

    #[test]
    fn validator_flags_broken_points() {
        let mut rng = RngStream::new(5, 0);
        let ds = gen_adversarial_dataset(16, 4, 64, &mut rng).unwrap();
        let free: Vec<usize> = (0..28).filter(|i| !ds.anchors.contains(i)).collect();

        let mut moved = ds.clone();
        moved.points[free[0]] = {
            let mut p = vec![0.0; 16];
            p[0] = 2.0;
            p
        };
        let v = validate_dataset(&moved);
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].indices, vec![free[0]]);

        let mut close = ds.clone();
        let (a, b) = (free[0], free[1]);
        let mut p = close.points[a].clone();
        let n = norm(&p);
        // step 0.05 toward the origin keeps the point inside the ball
        for v in &mut p {
            *v *= 1.0 - 0.05 / n;
        }
        close.points[b] = p;
        let v = validate_dataset(&close);
        assert!(v
            .iter()
            .any(|x| x.rule.contains("0.11") && x.indices == vec![a.min(b), a.max(b)]));
        assert!(v.iter().all(|x| x.indices.contains(&b)));

        let mut sparse = gen_sparse_dataset(8, 5, &mut rng).unwrap();
        sparse.points[2][0] = 0.0;
        sparse.points[2][1] = 0.0;
        sparse.points[2][2] = 0.0;
        assert!(!validate_dataset(&sparse).is_empty());
    }

    #[test]
    fn json_round_trip_and_determinism() {
        let a = gen_adversarial_dataset(8, 2, 30, &mut RngStream::new(9, 0)).unwrap();
        let b = gen_adversarial_dataset(8, 2, 30, &mut RngStream::new(9, 0)).unwrap();
        assert_eq!(a, b);
        let json = a.to_json().unwrap();
        assert!(json.contains("\"N\": 30"));
        assert_eq!(Dataset::from_json(&json).unwrap(), a);
        let s = gen_sparse_dataset(6, 40, &mut RngStream::new(9, 1)).unwrap();
        assert_eq!(Dataset::from_json(&s.to_json().unwrap()).unwrap(), s);
    }
}
