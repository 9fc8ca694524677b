//! States, measurements, the steering functional and the referee's question states.

mod functional;
mod povm;
mod questions;
mod states;

pub use functional::{steering_functional_two_mubs, SteeringFunctional};
pub use povm::{Povm, POVM_TOL};
pub use questions::{
    decompose, question_states, question_states_generic, question_states_qutrit,
    two_level_question_kets, QuestionStateSet, RECONSTRUCTION_TOL,
};
pub use states::{fourier_mub, isotropic, max_entangled, mub_kets, two_mubs, IsotropicState, MubSetting};
