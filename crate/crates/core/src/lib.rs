//! Numerical library for squeezed-light distillation and purification
//! protocols in truncated Fock space: displacement-augmented two-photon
//! subtraction, heralded Gaussification, Fock-filter purification, two-mode
//! decoupling, and homodyne-conditioned breeding — each closed form paired
//! with a brute-force oracle.

pub mod config;
pub mod error;
pub mod fock;
pub mod gaussian;
pub mod gaussification;
pub mod opt;
pub mod purification;
pub mod subtraction;
pub mod two_mode;

pub use config::DistillationConfig;
pub use error::{Error, Result};
pub use fock::{C64, CMatrix, CVector, State};
pub use gaussification::{GaussifyOptions, GaussifyRun};
pub use purification::PurifyRun;
pub use subtraction::{OptimizeOutcome, ProtocolOutcome, SubtractionParams};
pub use two_mode::{TmsvParams, TwoModeOutcome, TwoModeVec};
