use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 13] = [
    "algo",
    "objective",
    "dim",
    "mixtures",
    "n_data",
    "trial",
    "seed",
    "step_size",
    "queries",
    "converged",
    "wall_ms",
    "final_value",
    "acceptance_rate",
];

/// How a run ended. Written to the `converged` column as `true`, `false`
/// or `error`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Converged,
    Exhausted,
    Error,
}

impl Outcome {
    fn column(self) -> &'static str {
        match self {
            Outcome::Converged => "true",
            Outcome::Exhausted => "false",
            Outcome::Error => "error",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "true" => Ok(Outcome::Converged),
            "false" => Ok(Outcome::Exhausted),
            "error" => Ok(Outcome::Error),
            other => Err(Error::Format(format!("bad converged column {other:?}"))),
        }
    }
}

/// One benchmark run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub algo: String,
    pub objective: String,
    pub dim: usize,
    pub mixtures: usize,
    pub n_data: usize,
    pub trial: usize,
    pub seed: u64,
    /// Langevin step size; `None` for EM.
    pub step_size: Option<f64>,
    /// Gradient queries spent; `None` for error rows.
    pub queries: Option<u64>,
    pub outcome: Outcome,
    pub wall_ms: u64,
    pub final_value: Option<f64>,
    pub acceptance_rate: Option<f64>,
    /// Why the run failed; not part of the CSV.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

impl RunRecord {
    pub fn converged(&self) -> bool {
        self.outcome == Outcome::Converged
    }

    fn key(&self) -> (String, usize, usize) {
        (self.algo.clone(), self.dim, self.trial)
    }

    fn columns(&self) -> Vec<String> {
        fn opt<T: ToString>(v: Option<T>) -> String {
            v.map(|x| x.to_string()).unwrap_or_default()
        }
        vec![
            self.algo.clone(),
            self.objective.clone(),
            self.dim.to_string(),
            self.mixtures.to_string(),
            self.n_data.to_string(),
            self.trial.to_string(),
            self.seed.to_string(),
            opt(self.step_size),
            opt(self.queries),
            self.outcome.column().to_string(),
            self.wall_ms.to_string(),
            opt(self.final_value),
            opt(self.acceptance_rate),
        ]
    }

    fn from_columns(row: &csv::StringRecord) -> Result<Self> {
        if row.len() != CSV_HEADER.len() {
            return Err(Error::Format(format!(
                "expected {} columns, got {}",
                CSV_HEADER.len(),
                row.len()
            )));
        }
        fn num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
            s.parse()
                .map_err(|_| Error::Format(format!("bad {what} {s:?}")))
        }
        fn opt<T: std::str::FromStr>(s: &str, what: &str) -> Result<Option<T>> {
            if s.is_empty() {
                Ok(None)
            } else {
                num(s, what).map(Some)
            }
        }
        Ok(RunRecord {
            algo: row[0].to_string(),
            objective: row[1].to_string(),
            dim: num(&row[2], "dim")?,
            mixtures: num(&row[3], "mixtures")?,
            n_data: num(&row[4], "n_data")?,
            trial: num(&row[5], "trial")?,
            seed: num(&row[6], "seed")?,
            step_size: opt(&row[7], "step_size")?,
            queries: opt(&row[8], "queries")?,
            outcome: Outcome::parse(&row[9])?,
            wall_ms: num(&row[10], "wall_ms")?,
            final_value: opt(&row[11], "final_value")?,
            acceptance_rate: opt(&row[12], "acceptance_rate")?,
            error: None,
        })
    }
}

/// Sorts records by algorithm, dimension and trial.
pub fn sort_records(records: &mut [RunRecord]) {
    records.sort_by_key(|r| r.key());
}

/// Writes the header and `records` as CSV.
pub fn write_csv<W: Write>(out: W, records: &[RunRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record(r.columns())?;
    }
    w.flush()?;
    Ok(())
}

/// Appends one record to a CSV stream that already has its header.
pub fn append_csv<W: Write>(out: W, record: &RunRecord) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(record.columns())?;
    w.flush()?;
    Ok(())
}

/// Reads records written by [`write_csv`]; the header must match exactly.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<RunRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Format(format!(
            "unexpected CSV header {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    r.records()
        .map(|row| RunRecord::from_columns(&row?))
        .collect()
}
