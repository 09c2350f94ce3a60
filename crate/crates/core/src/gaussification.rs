//! Heralded iterative Gaussification: two copies of a state interfere on a
//! balanced beam splitter, one output is projected onto vacuum, and the other
//! is kept.  Includes pure-vector and density-matrix step maps, the iteration
//! driver with convergence/divergence detection, and the closed-form
//! convergence results for displaced two-photon-subtracted inputs.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{self, c, CMatrix, CVector, State, C64, GUARD_BAND, TAIL_TOL, TOL_ZERO};
use crate::gaussian;

/// Fitted tanh of the squeeze parameter at or above which the iteration diverges.
pub const DIVERGENCE_TANH: f64 = 1.0 - 1e-6;

/// Tail mass that, together with sustained variance growth, marks a runaway state.
pub const RUNAWAY_TAIL: f64 = 1e-3;

/// Consecutive anti-squeezed-variance increases required by the runaway tripwire.
pub const RUNAWAY_STEPS: usize = 5;

/// Stopping rules for the Gaussification iteration.
#[derive(Debug, Clone, Copy)]
pub struct GaussifyOptions {
    /// Maximum number of doubling steps.
    pub max_iters: usize,
    /// Distance between successive iterates that counts as converged.
    pub conv_tol: f64,
}

impl Default for GaussifyOptions {
    fn default() -> Self {
        GaussifyOptions { max_iters: 30, conv_tol: 1e-10 }
    }
}

/// Per-iteration diagnostics of a Gaussification run.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GaussifyTraceRow {
    /// Step index; 0 is the input state.
    pub step: usize,
    /// Variance of X at this iterate.
    pub v_x: f64,
    /// Variance of Y at this iterate.
    pub v_y: f64,
    /// Fidelity deficit to the covariance-matched Gaussian reference.
    pub residual: f64,
    /// Heralding probability of the step that produced this iterate (1 for the input).
    pub heralding_probability: f64,
}

/// Complete record of a Gaussification iteration.
#[derive(Debug, Clone)]
pub struct GaussifyRun {
    /// Normalized iterates, starting with the input state.
    pub iterates: Vec<State>,
    /// Heralding probability of each performed step.
    pub step_probabilities: Vec<f64>,
    /// Probability that all 2^k − 1 pairwise heralds of a k-step cascade succeed.
    pub cumulative_probability: f64,
    /// Natural log of the cumulative probability (finite even when the product underflows).
    pub ln_cumulative_probability: f64,
    /// True when successive iterates came closer than the convergence tolerance.
    pub converged: bool,
    /// True when the run was stopped by a divergence criterion.
    pub diverged: bool,
    /// Number of steps performed.
    pub steps: usize,
    /// (V_X, V_Y) of the last iterate.
    pub final_variances: (f64, f64),
    /// Gaussianity residual of the last iterate.
    pub final_residual: f64,
    /// Squeeze parameter fitted from the last iterate's level-2/level-0 amplitude ratio.
    pub fitted_r: Option<f64>,
    /// Level-2/level-0 amplitude ratio of the input state.
    pub sigma20_input: Option<C64>,
    /// Predicted converged tanh r, √2·|σ₂₀| of the input.
    pub predicted_tanh_r: Option<f64>,
    /// Per-iteration diagnostics, one row per iterate.
    pub trace: Vec<GaussifyTraceRow>,
}

/// √binom(m, k) computed incrementally along a row.
fn sqrt_binom_row(m: usize) -> Vec<f64> {
    let mut row = Vec::with_capacity(m + 1);
    let mut b = 1.0f64;
    row.push(1.0);
    for k in 0..m {
        b = b * (m - k) as f64 / (k + 1) as f64;
        row.push(b.sqrt());
    }
    row
}

/// One Gaussification step on a pure state: unnormalized output and heralding probability.
fn step_pure_raw(psi: &CVector) -> (CVector, f64) {
    let dim = psi.len();
    let mut out = CVector::zeros(dim);
    for m in 0..dim {
        let row = sqrt_binom_row(m);
        let mut acc = c(0.0);
        for k in 0..=m {
            acc += psi[k] * psi[m - k] * c(row[k]);
        }
        out[m] = acc * c(0.5f64.powf(m as f64 / 2.0));
    }
    let p = fock::norm_sq(&out);
    (out, p)
}

/// One Gaussification step on a density matrix: unnormalized output and heralding probability.
fn step_density_raw(rho: &CMatrix) -> (CMatrix, f64) {
    let dim = rho.nrows();
    let rows: Vec<Vec<f64>> = (0..dim).map(sqrt_binom_row).collect();
    let damp: Vec<f64> = (0..dim).map(|m| 0.5f64.powf(m as f64 / 2.0)).collect();
    let mut out = CMatrix::zeros(dim, dim);
    for m in 0..dim {
        for mp in 0..=m {
            let mut acc = c(0.0);
            for j in 0..=m {
                let w_j = rows[m][j];
                for jp in 0..=mp {
                    acc += rho[(j, jp)] * rho[(m - j, mp - jp)] * c(w_j * rows[mp][jp]);
                }
            }
            let val = acc * c(damp[m] * damp[mp]);
            out[(m, mp)] = val;
            if mp != m {
                out[(mp, m)] = val.conj();
            }
        }
    }
    let p = out.trace().re;
    (out, p)
}

/// Performs one step without the input-cleanliness gate.
fn step_unchecked(state: &State) -> Result<(State, f64)> {
    match state {
        State::Pure(v) => {
            let (raw, p) = step_pure_raw(v);
            if p <= TOL_ZERO {
                return Err(Error::ZeroState { norm_sq: p, tol: TOL_ZERO });
            }
            Ok((State::Pure(raw / c(p.sqrt())), p))
        }
        State::Mixed(m) => {
            let (raw, p) = step_density_raw(m);
            if p <= TOL_ZERO {
                return Err(Error::ZeroState { norm_sq: p, tol: TOL_ZERO });
            }
            Ok((State::Mixed(fock::hermitize(&(raw / c(p)))), p))
        }
    }
}

/// One Gaussification step: normalized output state and its heralding probability.
pub fn gaussify_step(state: &State) -> Result<(State, f64)> {
    let report = state.truncation_report(GUARD_BAND, TAIL_TOL);
    if !report.clean {
        return Err(Error::Truncation {
            dim: state.dim(),
            suggested: state.dim() + GUARD_BAND,
            tail_mass: report.tail_mass,
            tail_tol: report.tail_tol,
        });
    }
    step_unchecked(state)
}

fn trace_row(state: &State, step: usize, probability: f64) -> Result<GaussifyTraceRow> {
    let fit = gaussian::fit_gaussian(state)?;
    Ok(GaussifyTraceRow {
        step,
        v_x: fit.v_x,
        v_y: fit.v_y,
        residual: fit.residual,
        heralding_probability: probability,
    })
}

/// Cumulative heralding probability of a k-step cascade in log space.
fn cumulative_ln(probabilities: &[f64]) -> f64 {
    let k = probabilities.len() as u32;
    probabilities
        .iter()
        .enumerate()
        .map(|(i, &p)| 2f64.powi(k as i32 - 1 - i as i32) * p.ln())
        .sum()
}

/// Squeeze parameter read off a state's level-2/level-0 amplitude ratio, when it converges.
fn sigma_fitted_r(state: &State) -> Option<f64> {
    let sigma = state.sigma20().ok()?;
    let tanh = 2.0f64.sqrt() * sigma.norm();
    if tanh < 1.0 {
        Some(tanh.atanh())
    } else {
        None
    }
}

/// Runs the Gaussification iteration until convergence, divergence, or the step limit.
pub fn gaussify_iterate(input: &State, options: &GaussifyOptions) -> GaussifyRun {
    let sigma20_input = input.sigma20().ok();
    let predicted_tanh_r = sigma20_input.map(|s| 2.0f64.sqrt() * s.norm());

    let mut trace = Vec::new();
    let mut iterates = vec![input.clone()];
    let mut step_probabilities: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut diverged = false;

    if let Ok(row) = trace_row(input, 0, 1.0) {
        trace.push(row);
    }

    // The level-2/level-0 ratio is invariant under the step for even-parity
    // inputs, so a fitted tanh at or beyond 1 already certifies divergence.
    if predicted_tanh_r.is_some_and(|t| t >= DIVERGENCE_TANH) {
        diverged = true;
    } else {
        let mut growth_streak = 0usize;
        let mut last_vx = trace.last().map_or(f64::INFINITY, |row| row.v_x);
        for step in 1..=options.max_iters {
            let current = iterates.last().unwrap().clone();
            let (next, p) = match step_unchecked(&current) {
                Ok(pair) => pair,
                Err(_) => {
                    diverged = true;
                    break;
                }
            };
            step_probabilities.push(p);
            let distance = next.convergence_distance(&current);
            if let Ok(row) = trace_row(&next, step, p) {
                growth_streak = if row.v_x > last_vx { growth_streak + 1 } else { 0 };
                last_vx = row.v_x;
                trace.push(row);
            }
            let tail = next.tail_mass(GUARD_BAND);
            iterates.push(next);
            if distance < options.conv_tol {
                converged = true;
                break;
            }
            if growth_streak >= RUNAWAY_STEPS && tail > RUNAWAY_TAIL {
                diverged = true;
                break;
            }
            if iterates
                .last()
                .unwrap()
                .sigma20()
                .ok()
                .is_some_and(|s| 2.0f64.sqrt() * s.norm() >= DIVERGENCE_TANH)
            {
                diverged = true;
                break;
            }
        }
    }

    let final_state = iterates.last().unwrap();
    let (final_variances, final_residual) = match trace.last() {
        Some(row) => ((row.v_x, row.v_y), row.residual),
        None => ((f64::NAN, f64::NAN), f64::NAN),
    };
    let fitted_r = sigma_fitted_r(final_state);
    let ln_cum = cumulative_ln(&step_probabilities);
    GaussifyRun {
        steps: iterates.len() - 1,
        iterates,
        cumulative_probability: ln_cum.exp(),
        ln_cumulative_probability: ln_cum,
        step_probabilities,
        converged,
        diverged,
        final_variances,
        final_residual,
        fitted_r,
        sigma20_input,
        predicted_tanh_r,
        trace,
    }
}

/// Outcome of the closed-form convergence analysis of the Gaussified cascade.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SqueezePrediction {
    /// The cascade converges to a squeezed vacuum with this squeeze parameter.
    Converges {
        /// Converged squeeze parameter.
        r_g: f64,
    },
    /// The cascade diverges; the formal tanh lies at or beyond 1 in magnitude.
    Diverges {
        /// Formal tanh of the would-be squeeze parameter.
        tanh_r_g: f64,
    },
}

/// Closed-form squeeze parameter of the Gaussified subtracted state, or a divergence signal.
pub fn gaussified_squeeze(r: f64, delta_sq: f64) -> Result<SqueezePrediction> {
    let th = r.tanh();
    if (th - delta_sq).abs() <= TOL_ZERO {
        return Err(Error::DegenerateState {
            reason: format!(
                "vacuum amplitude annihilated at tanh r = delta_sq = {delta_sq}; \
                 the amplitude ratio is undefined"
            ),
        });
    }
    let tanh_r_g = (3.0 * th - delta_sq) * th / (th - delta_sq);
    if tanh_r_g.abs() < 1.0 {
        Ok(SqueezePrediction::Converges { r_g: tanh_r_g.atanh() })
    } else {
        Ok(SqueezePrediction::Diverges { tanh_r_g })
    }
}

/// Displacement offset that makes the Gaussified cascade converge to a target squeeze parameter.
pub fn delta_sq_for_target(r: f64, r_g: f64) -> Result<f64> {
    if !r.is_finite() || r <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "r",
            value: r,
            reason: "requires a positive squeeze parameter".into(),
        });
    }
    let th = r.tanh();
    let th_g = r_g.tanh();
    if (th_g - th).abs() <= TOL_ZERO {
        return Err(Error::InvalidParameter {
            name: "r_g",
            value: r_g,
            reason: "target squeeze parameter must differ from the input".into(),
        });
    }
    Ok((th_g - 3.0 * th) * th / (th_g - th))
}
