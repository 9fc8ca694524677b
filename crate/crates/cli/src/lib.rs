//! Batch front-end: sweeps over the isotropic visibility, single-point
//! reports and optical network verification.

pub mod commands;
pub mod config;
pub mod optics;
pub mod point;
pub mod sweep;

pub use config::{Mode, SweepConfig};
pub use optics::{run_optics_verify, OpticsOutcome};
pub use sweep::{run_sweep, SweepRow, SweepRun, CSV_HEADER, ERROR_CELL};
