//! Jones-calculus simulation of path-polarization networks: wave plates,
//! beam displacers and polarizing beam splitters acting on logical qudits
//! encoded in (path, polarization) modes.

mod builtin;
mod jones;
mod lm;
mod network;
mod verify;

pub use builtin::{alice_measurement_network, bsm_projector_network, builtin_network, BUILTIN_NETWORKS};
pub use jones::{hadamard, jones, phase_distance, phase_gate, rotation, solve_qhq, QhqAngles, WaveplateKind, UNITARY_TOL};
pub use network::{
    apply_network, effective_operators, transfer_matrix, Angle, Element, OpticalNetwork, PathPolState, Pol, Target,
    WaveplateElement,
};
pub use verify::{solve_angles, target_operators, verify_network, Verification};
