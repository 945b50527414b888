//! Parameter sweeps, rate fits, acceptance checks and reports on top of
//! `ibwave-core`.

pub mod checks;
pub mod config;
pub mod error;
pub mod fit;
pub mod record;
pub mod report;
pub mod study;
pub mod verify;

pub use config::ExperimentConfig;
pub use error::{LabError, Result};
pub use fit::{fit_loglog_slope, RateFit};
pub use record::RunRecord;
