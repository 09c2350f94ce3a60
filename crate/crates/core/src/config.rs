//! Shared run configuration for the distillation protocols.

use crate::error::{Error, Result};
use crate::gaussian::{clean_dim_for_squeeze, DIM_CAP};
use serde::{Deserialize, Serialize};

/// Parameters selecting a protocol run; unset fields fall back to defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistillationConfig {
    /// Input squeeze parameter.
    pub r: f64,
    /// Displacement offset of the subtraction operator.
    pub delta_sq: f64,
    /// Tap beam-splitter transmittance.
    pub transmittance: f64,
    /// Heralding-detector efficiency.
    pub eta: f64,
    /// Target squeezed variance for optimization runs.
    pub target_vy: Option<f64>,
    /// Fock-space dimension; omitted means auto-raise to a clean size.
    pub dim: Option<usize>,
    /// Iteration budget for Gaussification runs.
    pub max_iters: usize,
    /// Convergence tolerance on the distance between successive iterates.
    pub conv_tol: f64,
}

impl Default for DistillationConfig {
    fn default() -> Self {
        DistillationConfig {
            r: 0.5,
            delta_sq: 0.0,
            transmittance: 0.9,
            eta: 1.0,
            target_vy: None,
            dim: None,
            max_iters: 30,
            conv_tol: 1e-10,
        }
    }
}

impl DistillationConfig {
    /// Checks every field against its protocol precondition.
    pub fn validate(&self) -> Result<()> {
        if !(self.r.is_finite() && self.r >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "r",
                value: self.r,
                reason: "squeeze parameter must be finite and nonnegative".into(),
            });
        }
        if !self.delta_sq.is_finite() {
            return Err(Error::InvalidParameter {
                name: "delta_sq",
                value: self.delta_sq,
                reason: "displacement offset must be finite".into(),
            });
        }
        if !(self.transmittance > 0.0 && self.transmittance <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "transmittance",
                value: self.transmittance,
                reason: "must lie in (0, 1]".into(),
            });
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "eta",
                value: self.eta,
                reason: "must lie in (0, 1]".into(),
            });
        }
        if let Some(target) = self.target_vy {
            if !(target > 0.0 && target < 1.0) {
                return Err(Error::InvalidParameter {
                    name: "target_vy",
                    value: target,
                    reason: "target squeezed variance must lie in (0, 1)".into(),
                });
            }
        }
        if let Some(dim) = self.dim {
            if !(3..=DIM_CAP).contains(&dim) {
                return Err(Error::InvalidDimension {
                    dim,
                    reason: format!("dimension must lie in [3, {DIM_CAP}]"),
                });
            }
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter {
                name: "max_iters",
                value: 0.0,
                reason: "iteration budget must be positive".into(),
            });
        }
        if !(self.conv_tol > 0.0 && self.conv_tol < 1.0) {
            return Err(Error::InvalidParameter {
                name: "conv_tol",
                value: self.conv_tol,
                reason: "convergence tolerance must lie in (0, 1)".into(),
            });
        }
        Ok(())
    }

    /// Explicit dimension, or the smallest clean size for the squeeze (with
    /// floor), auto-raised no further than the hard cap.
    pub fn resolve_dim(&self, floor: usize) -> Result<usize> {
        if let Some(dim) = self.dim {
            return Ok(dim);
        }
        let needed = clean_dim_for_squeeze(self.r).max(floor);
        if needed > DIM_CAP {
            return Err(Error::InvalidDimension {
                dim: needed,
                reason: format!(
                    "clean truncation of r = {} needs more than the hard cap {DIM_CAP}",
                    self.r
                ),
            });
        }
        Ok(needed)
    }
}
