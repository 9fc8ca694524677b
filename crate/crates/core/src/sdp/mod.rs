//! Semidefinite programs: a small dense interior-point solver, assemblages,
//! LHS membership and guessing-probability certification.

mod assemblage;
mod guess;
mod ipm;
mod lhs;
mod problem;

pub use assemblage::{assemblage, Assemblage, ASSEMBLAGE_TOL};
pub use guess::{
    guessing_probability, guessing_problem, ConstraintMode, GuessData, GuessingProgram, RandomnessResult, ZERO_CELL,
};
pub use lhs::{
    deterministic_strategies, lhs_bound_bruteforce, lhs_membership, witness_value, LhsDecision, MAX_STRATEGIES,
};
pub use problem::{
    compress, hermitian_basis, solve_sdp, Block, BlockKind, LinearFunctional, MatrixTerm, SdpProblem, SdpSolution, SdpStatus,
    Sense, SDP_TOL,
};
