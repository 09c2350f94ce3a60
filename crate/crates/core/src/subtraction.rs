//! Displacement-augmented two-photon subtraction: the conditional operator
//! â² − δ², its closed-form output variances and optimal offset, and the
//! heralded tap-beam-splitter implementation with a coherent ancilla,
//! including detector inefficiency and success-probability optimization.

use crate::error::{Error, Result};
use crate::fock::{
    self, c, CMatrix, CVector, State, TruncationReport, C64, GUARD_BAND, TAIL_TOL, TOL_ZERO,
};
use crate::gaussian;
use crate::opt;

/// Parameters of the heralded subtraction stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubtractionParams {
    /// Signed displacement offset δ²; negative values express an imaginary offset δ = i√|δ²|.
    pub delta_sq: f64,
    /// Tap beam-splitter transmittance T ∈ (0, 1].
    pub transmittance: f64,
    /// Detector efficiency η ∈ (0, 1] on the heralding arm.
    pub eta: f64,
}

impl SubtractionParams {
    /// Validates ranges and builds the parameter set.
    pub fn new(delta_sq: f64, transmittance: f64, eta: f64) -> Result<Self> {
        let params = SubtractionParams { delta_sq, transmittance, eta };
        params.validate()?;
        Ok(params)
    }

    /// Checks that every field lies in its admissible range.
    pub fn validate(&self) -> Result<()> {
        if !self.delta_sq.is_finite() {
            return Err(Error::InvalidParameter {
                name: "delta_sq",
                value: self.delta_sq,
                reason: "must be finite".into(),
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
        Ok(())
    }

    /// Canonical square root of δ²: real for δ² ≥ 0, positive-imaginary otherwise.
    pub fn delta(&self) -> C64 {
        if self.delta_sq >= 0.0 {
            c(self.delta_sq.sqrt())
        } else {
            C64::new(0.0, (-self.delta_sq).sqrt())
        }
    }

    /// Coherent ancilla amplitude α = √((1−T)/T)·δ matched to the tap ratio.
    pub fn alpha(&self) -> C64 {
        self.delta() * c(((1.0 - self.transmittance) / self.transmittance).sqrt())
    }

    /// The real square α² = ((1−T)/T)·δ² of the matched ancilla amplitude.
    pub fn alpha_sq(&self) -> f64 {
        (1.0 - self.transmittance) / self.transmittance * self.delta_sq
    }
}

/// Heralded output of a conditional protocol stage.
#[derive(Debug, Clone)]
pub struct ProtocolOutcome {
    /// Normalized conditional output state.
    pub state: State,
    /// Probability of the heralding event.
    pub success_probability: f64,
    /// Human-readable label of the heralding pattern.
    pub heralding: String,
    /// Guard-band diagnostics of the output state.
    pub truncation: TruncationReport,
}

/// Matrix of the displaced two-photon subtraction â² − δ².
pub fn subtraction_operator(delta_sq: f64, dim: usize) -> Result<CMatrix> {
    let a = fock::annihilation(dim)?;
    Ok(&a * &a - CMatrix::identity(dim, dim) * c(delta_sq))
}

/// Closed-form quadrature variances (V_X, V_Y) of the normalized subtracted squeezed vacuum.
pub fn subtracted_variances(r: f64, delta_sq: f64) -> Result<(f64, f64)> {
    let s = r.sinh();
    let ch = r.cosh();
    let den = 2.0 * s.powi(4) + (ch * s - delta_sq).powi(2);
    if den <= TOL_ZERO {
        return Err(Error::DegenerateState {
            reason: format!(
                "subtraction annihilates the squeezed vacuum at r = {r}, delta_sq = {delta_sq}"
            ),
        });
    }
    let v_x = (2.0 * r).exp() * (1.0 + 4.0 * s * s * (2.0 * s * s + ch * s - delta_sq) / den);
    let v_y = (-2.0 * r).exp() * (1.0 + 4.0 * s * s * (2.0 * s * s - ch * s + delta_sq) / den);
    Ok((v_x, v_y))
}

/// Displacement offset minimizing the squeezed-quadrature variance at squeeze parameter r.
pub fn optimal_delta_sq(r: f64) -> Result<f64> {
    if !r.is_finite() || r <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "r",
            value: r,
            reason: "optimal offset requires a positive squeeze parameter".into(),
        });
    }
    let s = r.sinh();
    Ok(r.cosh() * s - (2.0 + 6.0f64.sqrt()) * s * s)
}

/// Variance pair (V_X, V_Y) at the optimal offset; both ratios to e^{±2r} are constants.
pub fn optimal_variances(r: f64) -> Result<(f64, f64)> {
    if !r.is_finite() || r <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "r",
            value: r,
            reason: "optimal variances require a positive squeeze parameter".into(),
        });
    }
    let sqrt6 = 6.0f64.sqrt();
    let v_x = (2.0 * r).exp() * (7.0 + 2.0 * sqrt6) / (3.0 + sqrt6);
    let v_y = (-2.0 * r).exp() * 3.0 / (3.0 + sqrt6);
    Ok((v_x, v_y))
}

/// Variance reduction factor of the squeezed quadrature at the optimal offset, (3+√6)/3.
pub fn gain_factor() -> f64 {
    (3.0 + 6.0f64.sqrt()) / 3.0
}

/// The same gain expressed in decibels.
pub fn gain_db() -> f64 {
    10.0 * gain_factor().log10()
}

/// Optimally subtracted state in factored form: squeeze of [(2+√6)|0⟩ + √2|2⟩]/(2√(3+√6)).
pub fn factorized_subtracted_state(r: f64, dim: usize) -> Result<CVector> {
    let sqrt6 = 6.0f64.sqrt();
    let mut core = CVector::zeros(dim.max(3));
    core[0] = c(2.0 + sqrt6);
    core[2] = c(2.0f64.sqrt());
    core /= c(2.0 * (3.0 + sqrt6).sqrt());
    if dim < 3 {
        return Err(Error::InvalidDimension {
            dim,
            reason: "two-photon component needs at least three levels".into(),
        });
    }
    let s = gaussian::squeeze_operator(r, dim)?;
    Ok(&s * core)
}

/// Unnormalized tap-mode state heralded by a two-detector coincidence against a coherent ancilla.
pub fn coincidence_projection_state(alpha: C64, dim: usize) -> Result<CVector> {
    if dim < 3 {
        return Err(Error::InvalidDimension {
            dim,
            reason: "two-photon component needs at least three levels".into(),
        });
    }
    let mut omega = CVector::zeros(dim);
    omega[0] = alpha * alpha;
    omega[2] = c(-(2.0f64.sqrt()));
    Ok(omega * c(0.5 * (-alpha.norm_sqr() / 2.0).exp()))
}

/// Exact heralded operator of the tap stage: ((1−T)/(2T)) e^{−(1−T)|δ²|/(2T)} (â²−δ²) T^{n̂/2}.
pub fn tapped_operator(params: &SubtractionParams, dim: usize) -> Result<CMatrix> {
    params.validate()?;
    let t = params.transmittance;
    let prefactor = (1.0 - t) / (2.0 * t) * (-(1.0 - t) * params.delta_sq.abs() / (2.0 * t)).exp();
    let mut op = subtraction_operator(params.delta_sq, dim)?;
    for col in 0..dim {
        let damp = c(prefactor * t.powf(col as f64 / 2.0));
        for row in 0..dim {
            op[(row, col)] *= damp;
        }
    }
    Ok(op)
}

/// Applies the heralded tap-and-subtract stage to a pure input state.
pub fn tapped_subtraction(psi: &CVector, params: &SubtractionParams) -> Result<ProtocolOutcome> {
    let op = tapped_operator(params, psi.len())?;
    let (state, probability) = State::Pure(psi.clone()).apply_conditional(&op)?;
    let truncation = state.truncation_report(GUARD_BAND, TAIL_TOL);
    Ok(ProtocolOutcome {
        state,
        success_probability: probability,
        heralding: "two-detector coincidence on the tap arm".into(),
        truncation,
    })
}

/// Closed-form success probability of the heralded subtraction on a squeezed vacuum input.
pub fn success_probability(r: f64, transmittance: f64, delta_sq: f64) -> Result<f64> {
    let params = SubtractionParams::new(delta_sq, transmittance, 1.0)?;
    let t = params.transmittance;
    if t == 1.0 {
        return Ok(0.0);
    }
    let r_eff = (t * r.tanh()).atanh();
    let s = r_eff.sinh();
    let ch = r_eff.cosh();
    let bracket = (ch * ch + 2.0 * s * s) * s * s - 2.0 * delta_sq * ch * s + delta_sq * delta_sq;
    let prefactor = ((1.0 - t) / (2.0 * t)).powi(2)
        * (-(1.0 - t) * delta_sq.abs() / t).exp()
        / (r.cosh().powi(2) - t * t * r.sinh().powi(2)).sqrt();
    Ok(prefactor * bracket)
}

/// Herald weights on the tap mode after a loss channel: ⟨b'| of the coincidence functional.
fn lossy_herald_weights(alpha: C64, eta: f64, dim_b: usize) -> Result<CVector> {
    coincidence_projection_state(alpha * c(eta.sqrt()), dim_b)
}

/// Full two-mode simulation of the tap stage with detector efficiency on the heralding arm.
pub fn lossy_tapped_subtraction(
    psi: &CVector,
    params: &SubtractionParams,
    dim_b: usize,
) -> Result<ProtocolOutcome> {
    params.validate()?;
    if dim_b < 3 {
        return Err(Error::InvalidDimension {
            dim: dim_b,
            reason: "tap mode needs at least three levels".into(),
        });
    }
    let dim_a = psi.len();
    let theta = params.transmittance.sqrt().acos();
    let u = gaussian::beam_splitter(theta, dim_a, dim_b)?;
    let joint = &u * fock::tensor_vec(psi, &fock::vacuum(dim_b));
    let eta = params.eta;
    let omega = lossy_herald_weights(params.alpha(), eta, dim_b)?;

    // Herald amplitude after loss Kraus j on the tap: only the |0> and |2>
    // components of the coincidence functional survive, so each branch reads
    // two columns of the joint amplitude matrix.  The overall sign is fixed so
    // that the lossless branch reproduces the tapped operator exactly.
    let entry = |a: usize, b: usize| joint[a * dim_b + b];
    let mut branches: Vec<CVector> = Vec::new();
    for j in 0..dim_b {
        let loss_j = (1.0 - eta).powf(j as f64 / 2.0);
        let w0 = if j < dim_b { c(loss_j) } else { c(0.0) };
        let w2 = if j + 2 < dim_b {
            c(binomial(j + 2, j).sqrt() * eta * loss_j)
        } else {
            c(0.0)
        };
        let mut phi = CVector::zeros(dim_a);
        let mut mass = 0.0;
        for a in 0..dim_a {
            let mut amp = c(0.0);
            if w0.norm_sqr() > 0.0 {
                amp += omega[0] * w0 * entry(a, j);
            }
            if w2.norm_sqr() > 0.0 {
                amp += omega[2] * w2 * entry(a, j + 2);
            }
            phi[a] = -amp;
            mass += amp.norm_sqr();
        }
        if mass > 0.0 {
            branches.push(phi);
        }
        if eta == 1.0 {
            break;
        }
    }

    let probability: f64 = branches.iter().map(fock::norm_sq).sum();
    if probability <= TOL_ZERO {
        return Err(Error::ZeroState { norm_sq: probability, tol: TOL_ZERO });
    }
    let state = if branches.len() == 1 {
        State::Pure(branches[0].clone() / c(probability.sqrt()))
    } else {
        let mut rho = CMatrix::zeros(dim_a, dim_a);
        for phi in &branches {
            rho += fock::outer(phi);
        }
        State::Mixed(fock::hermitize(&(rho / c(probability))))
    };
    let truncation = state.truncation_report(GUARD_BAND, TAIL_TOL);
    Ok(ProtocolOutcome {
        state,
        success_probability: probability,
        heralding: format!("two-detector coincidence, detector efficiency {eta}"),
        truncation,
    })
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Effective squeeze parameter after noiseless attenuation by the tap: tanh r̃ = T tanh r.
pub fn reduced_squeeze(r: f64, transmittance: f64) -> f64 {
    (transmittance * r.tanh()).atanh()
}

/// Real roots δ² at which the heralded output reaches a requested squeezed variance.
pub fn solve_delta_sq_for_target(
    r: f64,
    transmittance: f64,
    target_vy: f64,
) -> Result<Vec<f64>> {
    if !target_vy.is_finite() || target_vy <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "target_vy",
            value: target_vy,
            reason: "target variance must be positive".into(),
        });
    }
    let r_eff = reduced_squeeze(r, transmittance);
    let s = r_eff.sinh();
    let ch = r_eff.cosh();
    let w = target_vy * (2.0 * r_eff).exp();
    let floor = 3.0 / (3.0 + 6.0f64.sqrt()) * (-2.0 * r_eff).exp();

    // Quadratic a·u² + b·u + c = 0 in u = δ², from clearing the variance
    // denominator 2s⁴ + (cs − u)².
    let a = w - 1.0;
    let b = -(2.0 * ch * s * (w - 1.0) + 4.0 * s * s);
    let cc = (w - 1.0) * (2.0 * s.powi(4) + ch * ch * s * s) - 8.0 * s.powi(4)
        + 4.0 * ch * s.powi(3);

    let scale = b * b + (4.0 * a * cc).abs();
    if a.abs() <= 1e-14 * (1.0 + b.abs()) {
        if b.abs() <= TOL_ZERO {
            return Err(Error::UnreachableTarget { target: target_vy, minimum: floor });
        }
        return Ok(vec![-cc / b]);
    }
    let disc = b * b - 4.0 * a * cc;
    if disc < -1e-12 * scale {
        return Err(Error::UnreachableTarget { target: target_vy, minimum: floor });
    }
    if disc <= 0.0 {
        return Ok(vec![-b / (2.0 * a)]);
    }
    let sqrt_disc = disc.sqrt();
    // Numerically stable root pairing.
    let q = -0.5 * (b + b.signum() * sqrt_disc);
    let mut roots = vec![q / a, cc / q];
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(roots)
}

/// Optimum of the heralded success probability at a fixed target variance.
#[derive(Debug, Clone, Copy)]
pub struct OptimizeOutcome {
    /// Optimal tap transmittance.
    pub transmittance: f64,
    /// Optimal displacement offset δ².
    pub delta_sq: f64,
    /// Matched coherent ancilla amplitude.
    pub alpha: C64,
    /// Real square α² of the matched amplitude.
    pub alpha_sq: f64,
    /// Maximized success probability.
    pub success_probability: f64,
    /// Requested squeezed-quadrature variance.
    pub target_vy: f64,
}

/// Best success probability over roots at a fixed transmittance, if the target is reachable.
fn best_at_transmittance(r: f64, transmittance: f64, target_vy: f64) -> Option<(f64, f64)> {
    let roots = solve_delta_sq_for_target(r, transmittance, target_vy).ok()?;
    roots
        .into_iter()
        .filter_map(|d2| success_probability(r, transmittance, d2).ok().map(|p| (p, d2)))
        .max_by(|x, y| x.0.partial_cmp(&y.0).unwrap())
}

/// Maximizes the heralded success probability over the tap transmittance for a target variance.
pub fn optimize_success(r: f64, target_vy: f64) -> Result<OptimizeOutcome> {
    if !r.is_finite() || r <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "r",
            value: r,
            reason: "optimization requires a positive squeeze parameter".into(),
        });
    }
    let floor = 3.0 / (3.0 + 6.0f64.sqrt()) * (-2.0 * r).exp();
    if !target_vy.is_finite() || target_vy <= floor {
        return Err(Error::UnreachableTarget { target: target_vy, minimum: floor });
    }

    const SCAN: usize = 128;
    let ts: Vec<f64> = (0..SCAN).map(|i| (i as f64 + 0.5) / SCAN as f64).collect();
    let mut best: Option<(usize, f64)> = None;
    for (i, &t) in ts.iter().enumerate() {
        if let Some((p, _)) = best_at_transmittance(r, t, target_vy) {
            if best.is_none_or(|(_, bp)| p > bp) {
                best = Some((i, p));
            }
        }
    }
    let (k, scan_p) = best.ok_or(Error::UnreachableTarget { target: target_vy, minimum: floor })?;
    let lo = if k == 0 { 1e-9 } else { ts[k - 1] };
    let hi = if k + 1 == SCAN { 1.0 - 1e-12 } else { ts[k + 1] };
    let objective =
        |t: f64| best_at_transmittance(r, t, target_vy).map_or(-1.0, |(p, _)| p);
    let (mut t_star, mut p_star) = opt::golden_section_max(objective, lo, hi, 1e-9);
    if scan_p > p_star {
        t_star = ts[k];
        p_star = scan_p;
    }
    let (_, delta_sq) = best_at_transmittance(r, t_star, target_vy)
        .ok_or(Error::UnreachableTarget { target: target_vy, minimum: floor })?;
    let params = SubtractionParams::new(delta_sq, t_star, 1.0)?;
    Ok(OptimizeOutcome {
        transmittance: t_star,
        delta_sq,
        alpha: params.alpha(),
        alpha_sq: params.alpha_sq(),
        success_probability: p_star,
        target_vy,
    })
}
