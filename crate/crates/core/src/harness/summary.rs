use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::QUERY_ACCOUNTING;
use super::records::{Outcome, RunRecord};
use crate::error::{Error, Result};

/// Aggregate of all trials of one `(algo, d)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub algo: String,
    pub dim: usize,
    pub trials: usize,
    pub converged: usize,
    pub exhausted: usize,
    pub errors: usize,
    /// Over converged and exhausted trials; exhausted ones count with the
    /// queries they spent.
    pub median_queries: Option<f64>,
    pub mean_queries: Option<f64>,
    pub exhausted_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellError {
    pub algo: String,
    pub dim: usize,
    pub trial: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub query_accounting: String,
    pub budget: Option<u64>,
    pub cells: Vec<CellSummary>,
    /// Log-log slope of median queries against `d`, per algorithm.
    pub slopes: BTreeMap<String, f64>,
    pub errors: Vec<CellError>,
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::invalid(
            "slope needs two points with positive coordinates",
        ));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("slope needs two distinct x values"));
    }
    Ok(sxy / sxx)
}

/// Aggregates records per `(algo, d)`. The result does not depend on the
/// order of `records`.
pub fn summarize(records: &[RunRecord], budget: Option<u64>) -> Summary {
    let mut groups: BTreeMap<(String, usize), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.algo.clone(), r.dim)).or_default().push(r);
    }
    let mut cells = Vec::new();
    let mut errors = Vec::new();
    for ((algo, dim), rs) in &groups {
        let count = |o: Outcome| rs.iter().filter(|r| r.outcome == o).count();
        let mut q: Vec<f64> = rs
            .iter()
            .filter(|r| r.outcome != Outcome::Error)
            .filter_map(|r| r.queries.map(|q| q as f64))
            .collect();
        let mean = (!q.is_empty()).then(|| q.iter().sum::<f64>() / q.len() as f64);
        let exhausted = count(Outcome::Exhausted);
        cells.push(CellSummary {
            algo: algo.clone(),
            dim: *dim,
            trials: rs.len(),
            converged: count(Outcome::Converged),
            exhausted,
            errors: count(Outcome::Error),
            median_queries: median(&mut q),
            mean_queries: mean,
            exhausted_fraction: exhausted as f64 / rs.len() as f64,
        });
        let mut errs: Vec<&&RunRecord> =
            rs.iter().filter(|r| r.outcome == Outcome::Error).collect();
        errs.sort_by_key(|r| r.trial);
        errors.extend(errs.into_iter().map(|r| CellError {
            algo: algo.clone(),
            dim: *dim,
            trial: r.trial,
            message: r.error.clone().unwrap_or_else(|| "unknown error".into()),
        }));
    }
    let mut slopes = BTreeMap::new();
    let mut by_algo: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    for c in &cells {
        if let Some(m) = c.median_queries {
            by_algo.entry(&c.algo).or_default().push((c.dim as f64, m));
        }
    }
    for (algo, pts) in by_algo {
        if let Ok(s) = loglog_slope(&pts) {
            slopes.insert(algo.to_string(), s);
        }
    }
    Summary {
        query_accounting: QUERY_ACCOUNTING.to_string(),
        budget,
        cells,
        slopes,
        errors,
    }
}

impl Summary {
    pub fn cell(&self, algo: &str, dim: usize) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.algo == algo && c.dim == dim)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
