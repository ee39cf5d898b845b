//! Sweeps comparing EM and Langevin query counts on mixture posteriors.

mod config;
mod em_trial;
mod instance;
mod oracles;
mod plot;
mod records;
mod sampler_trial;
mod single;
mod summary;
mod sweep;

pub use config::{
    Algo, Cell, EmSettings, OutputPaths, SamplerSettings, SweepConfig, QUERY_ACCOUNTING,
};
pub use em_trial::{em_trial, EmTrial, RestartRule};
pub use instance::{build_instance, ln_ball_volume, ConstantRule, GmmInstance, GmmSettings};
pub use oracles::{
    bound_examples, chain_tv, em_trap_distance, gradient_fidelity, hard_instance_report,
    oracle_suite, packing_report, quadratic_chain, sampler_well, trap_posterior,
    HardInstanceReport, OracleCheck, OracleScale,
};
pub use plot::{emit_plot, plot_axes, render_svg, PlotAxes};
pub use records::{append_csv, read_csv, sort_records, write_csv, Outcome, RunRecord, CSV_HEADER};
pub use sampler_trial::{sampler_trial, SamplerTrial, SamplerTrialSpec};
pub use single::{run_single, ObjectiveKind, RunAlgo, RunSpec, SingleRun};
pub use summary::{loglog_slope, median, summarize, CellError, CellSummary, Summary};
pub use sweep::{
    prepare_dim, run_cell, run_experiment, step_curvature, sweep, DimReferences, PreparedDim,
    SweepOutcome, OBJECTIVE_NAME,
};
