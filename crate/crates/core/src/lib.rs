//! Lower bounds on the relative entropy of coherence from scarce measurement data.
//!
//! The bound `beta` is computed by gradient ascent on a concave Lagrange dual
//! ([`dual`]), checked against a brute-force constrained minimizer
//! ([`oracle`]), and exercised on a simulated photonic Werner-state
//! experiment ([`experiment`]).

// `!(x <= tol)` style checks are intentional: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dual;
pub mod error;
pub mod experiment;
pub mod hermitian;
pub mod optim;
pub mod oracle;
mod pool;
pub mod seeds;
pub mod simulation;
pub mod states;

pub use dual::{beta_bound, build_problem, solve, DualProblem, SolverConfig, SolverResult, SolverStatus};
pub use error::{CoreError, Result};
pub use experiment::{mixed_state, qst_linear_inversion, transmittances, AttenuatorBank, CountRecord, Setting};
pub use hermitian::{eigh, matrix_fn, tensor, trace_product, HermitianOperator, Pauli, PauliString, Spectrum};
pub use oracle::{alpha_direct, random_instance, relaxed_direct, scatter_alpha_beta, ObservableChoice, OracleConfig};
pub use seeds::derive_seed;
pub use simulation::{simulate_werner, SimulationRow, WernerScenario, REFERENCE_P_VALUES};
pub use states::{
    dephase, fidelity, random_density, rec, record_from_state, rel_entropy, werner, werner_rec_closed_form,
    DensityMatrix, MeasurementRecord,
};

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
