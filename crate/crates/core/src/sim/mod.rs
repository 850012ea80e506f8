//! Configuration, Monte-Carlo runner and CSV output.

mod config;
mod record;
mod run;

pub use config::{parse_range, ChannelSource, RunConfig, SplitMode};
pub use record::{emit_csv, parse_csv, read_csv, to_csv, wilson_interval, MetricRecord, CSV_COLUMNS};
pub use run::{run_scenario, snr_to_noise, trial_rng, CellSetup, Scenario, TrialOutcome};
