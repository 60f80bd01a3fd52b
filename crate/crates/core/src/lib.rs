//! Exact and rotating-wave dynamics of two-qubit quantum correlations in
//! Lorentzian bosonic baths.
//!
//! The crate simulates a pair of qubits coupled either to two independent
//! bosonic baths or to one common bath, each bath with a Lorentzian spectral
//! density centered near the qubit frequency. The exact reduced dynamics
//! (counter-rotating terms included) is obtained by integrating the hierarchy
//! equations of motion ([`heom`]); rotating-wave baselines come from the
//! closed-form X-state propagator and a pseudomode Lindblad equation
//! ([`rwa`]). Correlation functionals — Wootters concurrence, quantum
//! discord, mutual information — live in [`measures`].
//!
//! Conventions used throughout:
//!
//! * two-qubit basis order `|11⟩, |10⟩, |01⟩, |00⟩` (excited level first on
//!   each qubit), so every Bell-diagonal state of interest is an X-matrix;
//! * all frequencies in units of the qubit splitting ω₀, time in units of
//!   1/ω₀, and entropies in nats unless converted explicitly;
//! * density matrices are dense row-major [`CMatrix`] values.

pub mod heom;
pub mod measures;
pub mod model;
pub mod operators;
pub mod rwa;

use num_complex::Complex64;

/// Dense complex matrix, the workhorse type at every module boundary.
pub type CMatrix = ndarray::Array2<Complex64>;

/// Shorthand used in numerical kernels.
pub type C64 = Complex64;

/// Crate-wide error type.
///
/// The two variants mirror the two failure classes the command-line tool has
/// to distinguish: bad input (exit code 1) versus a numerical-tolerance abort
/// during an otherwise valid run (exit code 2).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed or inconsistent input: wrong dimensions, broken density
    /// matrix invariants, out-of-range parameters.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// A solver left its certified accuracy envelope: integration drift,
    /// Fock-cutoff violation, or a convergence search that ran out of road.
    #[error("numerical tolerance exceeded: {0}")]
    Numerical(String),
}

impl Error {
    /// True for failures of the running calculation rather than of its input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub use measures::DiscordResult;
pub use model::{BathSpec, InitialStateSpec, SystemSpec, Topology};
pub use operators::{HermitianEigen, Subsystem};
