//! Desk-scale laboratory for authorization-keyed quantum programs.
//!
//! The toolkit builds unitary programs that dispatch on a quantum key
//! register, encrypts them behind secret key-register rotations, obfuscates
//! the published gate sequence by randomized semantics-preserving rewriting,
//! and mechanically exercises the reduction that ties key forging to the
//! exact non-identity check problem.
//!
//! Pipeline overview:
//!
//! 1. [`pga`] extends a family of programs `{Uᵢ}` into one dispatching
//!    unitary `G` on key ⊗ input.
//! 2. [`keying`] encrypts `G` into `G′ = (L⊗I)·G·(R⊗I)` and issues key
//!    states `|φᵢ⟩ = R†|i,0…0⟩`.
//! 3. [`shuffle`] rewrites the gate sequence of `G′` into an equivalent,
//!    obfuscated one and estimates how well shuffling hides gate placement.
//! 4. [`protocol`] wraps the stages into party roles with a signed public
//!    artifact, a key ledger, and baseline attack demos.
//! 5. [`reduction`] drives the controlled-ization construction, the exact
//!    non-identity check oracle, the forged-key validator, and the planted
//!    distinguisher harness.
//!
//! All state is simulated exactly with [`sim`]; nothing here is, or claims
//! to be, actual quantum hardware.

pub mod circuit;
pub mod decompose;
pub mod formats;
pub mod keying;
pub mod pga;
pub mod protocol;
pub mod reduction;
pub mod seeds;
pub mod shuffle;
pub mod sim;

pub use circuit::{Gate, GateSequence, SequenceDigest};
pub use sim::{DensityMatrix, StateVector, UnitaryMatrix};

/// Aggregate error for callers that drive whole pipelines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] circuit::ParseError),
    #[error(transparent)]
    Circuit(#[from] circuit::CircuitError),
    #[error(transparent)]
    Sim(#[from] sim::SimError),
    #[error(transparent)]
    Pga(#[from] pga::PgaError),
    #[error(transparent)]
    Keying(#[from] keying::KeyingError),
    #[error(transparent)]
    Shuffle(#[from] shuffle::ShuffleError),
    #[error(transparent)]
    Reduction(#[from] reduction::ReductionError),
    #[error(transparent)]
    Protocol(#[from] protocol::ProtocolError),
    #[error(transparent)]
    Format(#[from] formats::FormatError),
}

pub type Result<T> = std::result::Result<T, Error>;
