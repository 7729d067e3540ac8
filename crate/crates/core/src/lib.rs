//! Dynamics, passive simulation, and swing-up trajectory optimization for
//! planar link chains with point masses (acrobots).
//!
//! The crate is organized around four layers:
//!
//! * [`dynamics`] — manipulator-equation terms `M(q) q̈ + C(q, q̇) q̇ = τ_g(q) + B u`,
//!   energies, and the first-order mass-matrix form of the equations of motion
//!   for 2-link and 3-link chains.
//! * [`integrator`] — fixed-step RK4 integration of mass-matrix ODEs, producing
//!   time-sampled [`integrator::Trajectory`] values.
//! * [`transcription`] — direct collocation of the swing-up optimal control
//!   problem into a boxed, constrained nonlinear program.
//! * [`nlp`] — an augmented-Lagrangian solver for that program.

pub mod dynamics;
pub mod integrator;
pub mod linalg;
pub mod nlp;
pub mod transcription;

pub use dynamics::{LinkChainParams, ManipulatorTerms, State};
pub use integrator::Trajectory;
pub use nlp::{solve, NlpProblem, SolveReport, SolveStatus, SolverOptions};
pub use transcription::{build_nlp, CollocationScheme, OcpSpec};
