use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::em_trial::RestartRule;
use super::instance::GmmSettings;
use crate::diagnostics::{OptimumProtocol, SamplerProtocol, Tolerance};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Em,
    Ula,
    Mala,
}

impl Algo {
    pub const ALL: [Algo; 3] = [Algo::Em, Algo::Ula, Algo::Mala];

    pub fn name(self) -> &'static str {
        match self {
            Algo::Em => "em",
            Algo::Ula => "ula",
            Algo::Mala => "mala",
        }
    }

    /// Gradient queries charged per iteration.
    pub fn queries_per_iteration(self) -> u64 {
        match self {
            Algo::Em | Algo::Ula => 1,
            Algo::Mala => 2,
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algo::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown algorithm {s:?} (expected em, ula or mala)"
                ))
            })
    }
}

/// Printed with every report.
pub const QUERY_ACCOUNTING: &str =
    "gradient queries: 1 per EM iteration (one E+M sweep), 1 per ULA step, 2 per MALA step";

/// Step size of the Langevin cells: `h = scale / L`, where `L` is the
/// smaller of the certified smoothness `c alpha / C + 2m` and the
/// curvature bound `N / sigma^2 + 2m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerSettings {
    pub step_scale: f64,
    pub burn_in: f64,
    /// Window granularity of the running averages.
    pub block: usize,
    pub tolerance: Tolerance,
    pub max_backoffs: u32,
}

impl Default for SamplerSettings {
    fn default() -> Self {
        SamplerSettings {
            step_scale: 0.5,
            burn_in: 0.1,
            block: 16,
            tolerance: Tolerance::Relative { fraction: 0.1 },
            max_backoffs: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmSettings {
    pub value_tol: f64,
    pub restart: RestartRule,
}

impl Default for EmSettings {
    fn default() -> Self {
        EmSettings {
            value_tol: 1e-6,
            restart: RestartRule::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    pub csv: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    pub plot: Option<PathBuf>,
    /// Reference values are cached here, keyed by dimension and sampler.
    pub references: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub dims: Vec<usize>,
    pub algos: Vec<Algo>,
    /// EM cells above this dimension are skipped.
    pub em_max_dim: usize,
    pub trials: usize,
    /// Gradient-query budget per run.
    pub budget: u64,
    pub seed: u64,
    pub gmm: GmmSettings,
    pub em: EmSettings,
    pub sampler: SamplerSettings,
    pub optimum_reference: OptimumProtocol,
    pub sampler_reference: SamplerProtocol,
    /// Worker threads; 0 uses the `SAMPLOPT_WORKERS` environment variable
    /// or else all cores.
    pub workers: usize,
    /// Record wall-clock times; off by default so outputs are reproducible
    /// byte for byte.
    pub record_wall_time: bool,
    pub output: OutputPaths,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            dims: (2..=16).collect(),
            algos: vec![Algo::Em, Algo::Ula],
            em_max_dim: 9,
            trials: 20,
            budget: 1_000_000,
            seed: 0,
            gmm: GmmSettings::default(),
            em: EmSettings::default(),
            sampler: SamplerSettings::default(),
            optimum_reference: OptimumProtocol::default(),
            sampler_reference: SamplerProtocol {
                steps: 100_000,
                agreement: Tolerance::Relative { fraction: 0.05 },
                retry_cap: 1,
                ..SamplerProtocol::default()
            },
            workers: 0,
            record_wall_time: false,
            output: OutputPaths::default(),
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if self.budget == 0 {
            return Err(Error::invalid("budget must be at least 1"));
        }
        if self.dims.is_empty() || self.algos.is_empty() {
            return Err(Error::invalid(
                "need at least one dimension and one algorithm",
            ));
        }
        if let Some(d) = self.dims.iter().find(|&&d| d < 2) {
            return Err(Error::invalid(format!(
                "dimensions must be at least 2, got {d}"
            )));
        }
        if !(self.em.value_tol > 0.0) {
            return Err(Error::invalid("EM value tolerance must be positive"));
        }
        if !(self.sampler.step_scale > 0.0 && self.sampler.step_scale.is_finite()) {
            return Err(Error::invalid("step scale must be positive"));
        }
        if !(0.0..1.0).contains(&self.sampler.burn_in) || self.sampler.block == 0 {
            return Err(Error::invalid(
                "burn-in must lie in [0, 1) and block must be positive",
            ));
        }
        self.sampler.tolerance.validate()?;
        self.sampler_reference.agreement.validate()?;
        self.gmm.validate()
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: SweepConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Cells `(algo, d, trial)` in canonical order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut dims = self.dims.clone();
        dims.sort_unstable();
        dims.dedup();
        let mut algos = self.algos.clone();
        algos.sort_unstable();
        algos.dedup();
        let mut out = Vec::new();
        for &algo in &algos {
            for &d in &dims {
                if algo == Algo::Em && d > self.em_max_dim {
                    continue;
                }
                for trial in 0..self.trials {
                    out.push(Cell { algo, d, trial });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    pub algo: Algo,
    pub d: usize,
    pub trial: usize,
}

impl Cell {
    /// Seed of the cell's random streams, derived from the master seed.
    pub fn seed(&self, master: u64) -> u64 {
        let tag = ((self.algo as u64) << 48) | ((self.d as u64) << 24) | self.trial as u64;
        crate::numerics::RngStream::new(master, 0xce11)
            .derive(tag)
            .next_u64()
    }
}
