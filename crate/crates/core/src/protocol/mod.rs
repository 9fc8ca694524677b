//! Exact simulation of the steering and measurement-device-independent protocols.

mod lhs_model;
mod mdi;
mod montecarlo;
mod table;
mod witness;

pub use lhs_model::{lhs_table_via_quantum, LhsModel};
pub use mdi::{mdi_table, qrs_witness, MdiTable};
pub use montecarlo::{poisson_mc, CountsTable, McSummary, DEFAULT_TRIALS};
pub use table::{correlations, CorrelationTable, TABLE_TOL};
pub use witness::{critical_p, effective_visibility, steering_parameter, WitnessReport};
