//! Metrics, workload generation, epoch sweep and approach comparison.

pub mod compare;
pub mod metrics;
pub mod workload;

pub use metrics::{f_measures_from_counts, gain, progressiveness, true_f_measures, FMeasures, ProgressConfig, Timeline, Weighting};
pub use workload::{gen_objects, write_generated, GenSpec, GeneratedFiles, Workload, KEY_SPAN, SELECTIVITY_KEY};
pub use compare::{compare, epoch_sweep, run_approach, run_session, score_runs, shared_horizon, sweep_workload, ApproachScore, Comparison, RunResult, SweepConfig, SweepResult, SweepRun};
