//! Error type shared by every protocol operation in this crate.

use thiserror::Error;

/// Errors produced by state construction, channels, and protocol steps.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A Fock-space dimension below the minimum of 2 (or otherwise unusable).
    #[error("invalid dimension {dim}: {reason}")]
    InvalidDimension { dim: usize, reason: String },

    /// A physical parameter outside its allowed range.
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: String,
    },

    /// A conditional operation annihilated the state (heralding impossible).
    #[error("state annihilated: squared norm {norm_sq:.3e} below {tol:.3e}")]
    ZeroState { norm_sq: f64, tol: f64 },

    /// The requested computation does not fit the truncated basis.
    #[error(
        "truncation dimension {dim} too small (guard-band mass {tail_mass:.3e} \
         exceeds {tail_tol:.3e}); suggested dimension {suggested}"
    )]
    Truncation {
        dim: usize,
        suggested: usize,
        tail_mass: f64,
        tail_tol: f64,
    },

    /// A matrix that was required to be a density matrix is not one.
    #[error("invalid density matrix: {reason}")]
    InvalidState { reason: String },

    /// A closed form degenerates (denominator vanishes, state annihilated).
    #[error("degenerate parameters: {reason}")]
    DegenerateState { reason: String },

    /// A requested target variance cannot be reached by any parameter choice.
    #[error("target variance {target} unreachable (minimum achievable {minimum})")]
    UnreachableTarget { target: f64, minimum: f64 },

    /// Purification requires a nonzero 2-0 Fock coherence in the input.
    #[error("no squeezing extractable: |rho_20| = {coherence:.3e} is below {threshold:.3e}")]
    NoSqueezingExtractable { coherence: f64, threshold: f64 },

    /// Two-mode data combined with mismatched kinds or dimensions.
    #[error("shape mismatch: {reason}")]
    ShapeMismatch { reason: String },
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
