//! Simulation toolkit for controlled-Hamiltonian realizations of unitary
//! quantum gates.
//!
//! Three control schemes are implemented and stress-tested against each other:
//!
//! * counterdiabatic (CD) driving of an auxiliary qubit coupled block-wise to
//!   the computational register,
//! * Floquet-engineered (FE) periodic driving that stroboscopically mimics the
//!   CD dynamics with a reduced operator set,
//! * inverse engineering (IE), where the computational register is driven
//!   directly along a designed unitary path.
//!
//! The library evaluates gate infidelity over a fixed probe set, the
//! time-averaged energetic cost of each drive, robustness to timekeeping
//! errors, and degradation under Markovian dephasing. The `cli` module exposes
//! every experiment as a subcommand of the `qcg` binary.
//!
//! Module map:
//!
//! * [`linalg`]: dense complex operators, density matrices, eigensolver,
//!   matrix exponentials, norms (dims 2, 4, 8).
//! * [`ramps`]: control schedules lambda(t) and timekeeping-error deformation.
//! * [`hamiltonians`]: every drive Hamiltonian (bare auxiliary, CD, FE, IE,
//!   controlled-Z variants) plus the gauge-potential machinery.
//! * [`dynamics`]: unitary and Lindblad propagation.
//! * [`metrics`]: gate infidelity and cost functionals.
//! * [`experiments`]: sweep runners producing structured records.
//! * [`cli`]: config parsing, dispatch, CSV/JSON output.

pub mod cli;
pub mod dynamics;
mod error;
pub mod experiments;
pub mod hamiltonians;
pub mod linalg;
pub mod metrics;
pub mod ramps;

pub use error::{Error, Result};

/// Library version string embedded in JSON output bundles.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
