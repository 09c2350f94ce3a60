//! Loss channels, the mixed squeezed-state parameterization, the commutation
//! identity that bounds loss suppression by subtraction-plus-Gaussification,
//! effective tap parameters for lossy inputs, and the Fock-filter pipeline
//! that distills pure squeezed vacuum from states with level-0/2 coherence.

use crate::error::{Error, Result};
use crate::fock::{self, c, CMatrix, CVector, State, C64, GUARD_BAND, TAIL_TOL};
use crate::gaussification::{self, GaussifyOptions, GaussifyRun};
use crate::subtraction::ProtocolOutcome;

/// Kraus weight below which the loss-channel sum is truncated.
pub const KRAUS_CUTOFF: f64 = 1e-14;

fn check_transmittance(name: &'static str, value: f64) -> Result<()> {
    if !(value > 0.0 && value <= 1.0) {
        return Err(Error::InvalidParameter {
            name,
            value,
            reason: "must lie in (0, 1]".into(),
        });
    }
    Ok(())
}

fn diagonal_tail(rho: &CMatrix, guard: usize) -> f64 {
    let dim = rho.nrows();
    (dim.saturating_sub(guard)..dim).map(|n| rho[(n, n)].re).sum()
}

/// Photon-loss channel of transmittance T0 in Kraus form.
pub fn loss_channel(rho: &CMatrix, t0: f64) -> Result<CMatrix> {
    check_transmittance("t0", t0)?;
    let dim = rho.nrows();
    let tail = diagonal_tail(rho, GUARD_BAND);
    if tail > TAIL_TOL {
        return Err(Error::Truncation {
            dim,
            suggested: dim + GUARD_BAND,
            tail_mass: tail,
            tail_tol: TAIL_TOL,
        });
    }
    if t0 == 1.0 {
        return Ok(rho.clone());
    }

    // kappa[n] holds the amplitude <n-j|K_j|n> for the current j.
    let total = rho.trace().re;
    let mut out = CMatrix::zeros(dim, dim);
    let mut cumulative = 0.0;
    for j in 0..dim {
        let mut kappa = vec![0.0f64; dim];
        let mut log_binom = 0.0f64; // ln binom(n, j) accumulated over n
        for (n, k) in kappa.iter_mut().enumerate().skip(j) {
            if n > j {
                log_binom += (n as f64).ln() - ((n - j) as f64).ln();
            }
            *k = (0.5 * log_binom).exp()
                * t0.powf((n - j) as f64 / 2.0)
                * (1.0 - t0).powf(j as f64 / 2.0);
        }
        let mut weight = 0.0;
        for m in j..dim {
            for mp in j..dim {
                out[(m - j, mp - j)] += rho[(m, mp)] * c(kappa[m] * kappa[mp]);
            }
            weight += kappa[m] * kappa[m] * rho[(m, m)].re;
        }
        cumulative += weight;
        if total - cumulative < KRAUS_CUTOFF * total.max(1.0) {
            break;
        }
    }
    Ok(fock::hermitize(&out))
}

/// Applies the loss channel to either state kind, returning a density-backed state.
pub fn apply_loss(state: &State, t0: f64) -> Result<State> {
    if t0 == 1.0 {
        return Ok(state.clone());
    }
    Ok(State::Mixed(loss_channel(&state.to_density(), t0)?))
}

/// Variance parameterization of a lossy squeezed vacuum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedSqueezedParams {
    /// Anti-squeezed quadrature variance.
    pub v_x: f64,
    /// Squeezed quadrature variance.
    pub v_y: f64,
    /// Squeeze parameter of the underlying pure state.
    pub r0: f64,
    /// Effective loss-channel transmittance.
    pub t0: f64,
}

/// Variances of a squeezed vacuum after a loss channel: e^{±2r0}·T0 + 1 − T0.
pub fn variances_from_params(r0: f64, t0: f64) -> (f64, f64) {
    (
        (2.0 * r0).exp() * t0 + 1.0 - t0,
        (-2.0 * r0).exp() * t0 + 1.0 - t0,
    )
}

/// Inverts measured variances into the pure squeeze parameter and channel transmittance.
pub fn params_from_variances(v_x: f64, v_y: f64) -> Result<MixedSqueezedParams> {
    if v_x < 1.0 - 1e-12 || v_y > 1.0 + 1e-12 || v_y <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "v_y",
            value: v_y,
            reason: format!(
                "representable states need V_Y <= 1 <= V_X; got V_X = {v_x}, V_Y = {v_y}"
            ),
        });
    }
    if v_x * v_y < 1.0 - 1e-9 {
        return Err(Error::InvalidParameter {
            name: "v_x",
            value: v_x,
            reason: format!("V_X·V_Y = {} violates the uncertainty bound", v_x * v_y),
        });
    }
    // Vacuum pins the parameterization's removable singularity.
    if (v_x - 1.0).abs() <= 1e-12 && (v_y - 1.0).abs() <= 1e-12 {
        return Ok(MixedSqueezedParams { v_x, v_y, r0: 0.0, t0: 1.0 });
    }
    let t0 = ((v_x - 1.0) * (1.0 - v_y) / (v_x + v_y - 2.0)).min(1.0);
    let r0 = 0.5 * ((v_x - 1.0) / (1.0 - v_y)).ln();
    Ok(MixedSqueezedParams { v_x, v_y, r0, t0 })
}

/// Max elementwise deviation between subtract-then-lose and lose-then-subtract orderings.
pub fn check_commutation_identity(psi: &CVector, t0: f64, delta_sq: f64) -> Result<f64> {
    check_transmittance("t0", t0)?;
    let dim = psi.len();
    let rho = fock::outer(psi);
    let m_op = crate::subtraction::subtraction_operator(delta_sq, dim)?;
    let lhs = &m_op * loss_channel(&rho, t0)? * m_op.adjoint();

    let a = fock::annihilation(dim)?;
    let m_t = (&a * &a) * c(t0) - CMatrix::identity(dim, dim) * c(delta_sq);
    let rhs = loss_channel(&fock::hermitize(&(&m_t * &rho * m_t.adjoint())), t0)?;

    let dev = (&lhs - &rhs).iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(dev)
}

/// Lower bound on the squeezed variance reachable from a mixed state: (V_XV_Y−1)/(V_X+V_Y−2).
pub fn v_min_bound(v_x: f64, v_y: f64) -> Result<f64> {
    if v_x <= 0.0 || v_y <= 0.0 || v_x * v_y < 1.0 - 1e-9 {
        return Err(Error::InvalidParameter {
            name: "v_x",
            value: v_x,
            reason: format!("unphysical variance pair ({v_x}, {v_y})"),
        });
    }
    let excess = v_x + v_y - 2.0;
    if excess <= 1e-12 {
        return Ok(0.0);
    }
    Ok(((v_x * v_y - 1.0) / excess).max(0.0))
}

/// Effective tap transmittance and residual loss when the tap acts after a lossy channel.
pub fn effective_parameters(t: f64, t0: f64) -> Result<(f64, f64)> {
    check_transmittance("t", t)?;
    check_transmittance("t0", t0)?;
    let t_tilde = 1.0 - t0 * (1.0 - t);
    let t0_tilde = t0 * t / t_tilde;
    Ok((t_tilde, t0_tilde))
}

/// Removes the single-photon term with the diagonal filter n̂ − 1.
pub fn fock_filter(state: &State) -> Result<ProtocolOutcome> {
    let dim = state.dim();
    let filter = fock::number_operator(dim)? - CMatrix::identity(dim, dim);
    let (filtered, weight) = state.apply_conditional(&filter)?;
    let truncation = filtered.truncation_report(GUARD_BAND, TAIL_TOL);
    Ok(ProtocolOutcome {
        state: filtered,
        success_probability: weight,
        heralding: "single-photon term eliminated".into(),
        truncation,
    })
}

/// Record of a Fock-filter purification run.
#[derive(Debug, Clone)]
pub struct PurifyRun {
    /// Unnormalized weight of the Fock filter on the input.
    pub filter_weight: f64,
    /// Level-2/level-0 amplitude ratio after the filter, phase retained.
    pub sigma20_filtered: C64,
    /// Predicted tanh of the converged squeeze parameter, √2|σ₂₀| of the filtered state.
    pub predicted_tanh_r: f64,
    /// Predicted squeeze parameter when the prediction converges.
    pub predicted_r: Option<f64>,
    /// The Gaussification record that follows the filter.
    pub run: GaussifyRun,
}

/// Minimum |ρ₂₀| treated as usable coherence for squeezing extraction.
pub const COHERENCE_THRESHOLD: f64 = 1e-12;

/// Fock-filters the input and Gaussifies the result into a pure squeezed vacuum.
pub fn purify_pipeline(state: &State, options: &GaussifyOptions) -> Result<PurifyRun> {
    let rho20 = match state {
        State::Pure(v) => v[2] * v[0].conj(),
        State::Mixed(m) => m[(2, 0)],
    };
    if rho20.norm() <= COHERENCE_THRESHOLD {
        return Err(Error::NoSqueezingExtractable {
            coherence: rho20.norm(),
            threshold: COHERENCE_THRESHOLD,
        });
    }
    let filtered = fock_filter(state)?;
    let sigma20_filtered = filtered.state.sigma20()?;
    let predicted_tanh_r = 2.0f64.sqrt() * sigma20_filtered.norm();
    let predicted_r =
        if predicted_tanh_r < 1.0 { Some(predicted_tanh_r.atanh()) } else { None };
    let run = gaussification::gaussify_iterate(&filtered.state, options);
    Ok(PurifyRun {
        filter_weight: filtered.success_probability,
        sigma20_filtered,
        predicted_tanh_r,
        predicted_r,
        run,
    })
}
