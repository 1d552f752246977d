//! Monte Carlo size/power experiments, output emitters and oracle checks
//! around `hdlin-core`.

pub mod baseline;
pub mod cell;
pub mod config;
pub mod error;
pub mod experiment;
pub mod input;
pub mod oracle;
pub mod output;
pub mod presets;
pub mod seed;
pub mod summary;

pub use cell::{run_cell, CellOutcome, MethodRate};
pub use error::{HarnessError, Result};
pub use experiment::{run_experiment, ExperimentConfig};
pub use output::{emit_outputs, Format};
pub use presets::Preset;
pub use summary::{SummaryRow, SummaryTable};
