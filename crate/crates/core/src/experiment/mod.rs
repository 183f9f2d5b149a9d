//! Declarative experiments: configuration files, batch runs, parameter
//! sweeps and plot-data emission.

pub mod batch;
pub mod config;
pub mod csvio;
pub mod plot;
pub mod sweep;

pub use batch::{run_batch, run_experiment, BatchSummary, RowStatus, SummaryRow};
pub use config::{load_config, parse_config, write_config, ConfigError, ExperimentSpec};
pub use plot::{emit_plot_data, Figure};
pub use sweep::{sweep, SweepGrid, SweepRow};
