//! Configuration files, output formats and end-to-end runs for the
//! `rhomctdh-core` solver. The `rhomctdh` binary wraps these.

pub mod check;
pub mod config;
pub mod output;
pub mod run;

pub use config::{load_config, parse_config, Overrides};
pub use output::write_outputs;
pub use run::{run_experiment, run_ground_state, RunKind, RunOutput};
