//! Two-mode squeezed vacuum distillation by joint photon subtraction with
//! beam-splitter decoupling, homodyne-conditioned breeding of squeezed
//! superposition states, and generalized subtraction with a squeezed ancilla.

use crate::error::{Error, Result};
use crate::fock::{
    self, c, hermitize, tensor_vec, CMatrix, CVector, Mode, State, C64, GUARD_BAND, TAIL_TOL,
    TOL_ZERO,
};
use crate::gaussian;
use crate::opt;
use crate::subtraction::ProtocolOutcome;

/// Squeeze parameter and its Schmidt ratio for a two-mode squeezed vacuum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TmsvParams {
    /// Squeeze parameter.
    pub r: f64,
    /// Schmidt ratio tanh r of the photon-number ladder.
    pub lambda: f64,
}

impl TmsvParams {
    /// Validates the squeeze parameter and derives the Schmidt ratio.
    pub fn new(r: f64) -> Result<Self> {
        let lambda = r.tanh();
        if !r.is_finite() || lambda.abs() >= 1.0 {
            return Err(Error::InvalidParameter {
                name: "r",
                value: r,
                reason: "squeeze parameter must be finite with |tanh r| < 1".into(),
            });
        }
        Ok(TmsvParams { r, lambda })
    }
}

/// Joint vector on two modes with index a * dim_b + b.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeVec {
    /// Levels kept on mode A.
    pub dim_a: usize,
    /// Levels kept on mode B.
    pub dim_b: usize,
    /// Amplitudes in A-major order.
    pub data: CVector,
}

impl TwoModeVec {
    /// Wraps a joint vector after checking its length.
    pub fn new(dim_a: usize, dim_b: usize, data: CVector) -> Result<Self> {
        if data.len() != dim_a * dim_b {
            return Err(Error::ShapeMismatch {
                reason: format!("vector length {} != {dim_a} x {dim_b}", data.len()),
            });
        }
        Ok(TwoModeVec { dim_a, dim_b, data })
    }

    /// Amplitude of the |a, b> component.
    pub fn amplitude(&self, a: usize, b: usize) -> C64 {
        self.data[a * self.dim_b + b]
    }

    /// Squared norm of the joint vector.
    pub fn norm_sq(&self) -> f64 {
        fock::norm_sq(&self.data)
    }

    /// Unit-normalized copy along with the squared norm it carried.
    pub fn normalized(&self) -> Result<(Self, f64)> {
        let (unit, weight) = fock::normalize_vec(&self.data)?;
        Ok((TwoModeVec { dim_a: self.dim_a, dim_b: self.dim_b, data: unit }, weight))
    }

    /// Reduced density matrix of the kept mode.
    pub fn reduced_density(&self, keep: Mode) -> CMatrix {
        let (da, db) = (self.dim_a, self.dim_b);
        match keep {
            Mode::A => {
                let mut rho = CMatrix::zeros(da, da);
                for m in 0..da {
                    for mp in 0..=m {
                        let mut acc = C64::new(0.0, 0.0);
                        for b in 0..db {
                            acc += self.data[m * db + b] * self.data[mp * db + b].conj();
                        }
                        rho[(m, mp)] = acc;
                        rho[(mp, m)] = acc.conj();
                    }
                }
                rho
            }
            Mode::B => {
                let mut rho = CMatrix::zeros(db, db);
                for n in 0..db {
                    for np in 0..=n {
                        let mut acc = C64::new(0.0, 0.0);
                        for a in 0..da {
                            acc += self.data[a * db + n] * self.data[a * db + np].conj();
                        }
                        rho[(n, np)] = acc;
                        rho[(np, n)] = acc.conj();
                    }
                }
                rho
            }
        }
    }

    /// Probability weight in the guard band of either mode.
    pub fn tail_mass(&self, guard: usize) -> f64 {
        let (da, db) = (self.dim_a, self.dim_b);
        let mut mass = 0.0;
        for a in 0..da {
            for b in 0..db {
                if a >= da.saturating_sub(guard) || b >= db.saturating_sub(guard) {
                    mass += self.data[a * db + b].norm_sqr();
                }
            }
        }
        mass
    }
}

/// Heralded outcome that remains a two-mode state.
#[derive(Debug, Clone)]
pub struct TwoModeOutcome {
    /// Normalized post-measurement joint state.
    pub state: TwoModeVec,
    /// Heralding weight of the condition (squared norm before normalizing).
    pub success_probability: f64,
    /// Human-readable description of the heralding condition.
    pub heralding: String,
}

/// Smallest per-mode dimension keeping the photon-number ladder tail clean.
pub fn clean_dim_for_tmsv(r: f64) -> usize {
    let lambda2 = r.tanh().powi(2);
    if lambda2 <= TOL_ZERO {
        return GUARD_BAND + 2;
    }
    let mut dim = GUARD_BAND + 2;
    while lambda2.powi((dim - GUARD_BAND) as i32) > TAIL_TOL {
        dim += 1;
    }
    dim
}

/// Two-mode squeezed vacuum as the normalized ladder sum over |n, n>.
pub fn tmsv_state(r: f64, dim: usize) -> Result<TwoModeVec> {
    fock::basis_state(dim, 0)?;
    let params = TmsvParams::new(r)?;
    let needed = clean_dim_for_tmsv(r);
    if dim < needed {
        let lambda2 = params.lambda * params.lambda;
        return Err(Error::Truncation {
            dim,
            suggested: needed,
            tail_mass: lambda2.powi((dim - GUARD_BAND.min(dim)) as i32),
            tail_tol: TAIL_TOL,
        });
    }
    let scale = (1.0 - params.lambda * params.lambda).sqrt();
    let mut data = CVector::zeros(dim * dim);
    for n in 0..dim {
        data[n * dim + n] = c(scale * params.lambda.powi(n as i32));
    }
    let (unit, _) = fock::normalize_vec(&data)?;
    TwoModeVec::new(dim, dim, unit)
}

/// Two-mode squeezed vacuum built by interfering two opposite single-mode
/// squeezed vacua on a balanced beam splitter.
pub fn tmsv_from_beamsplitter(r: f64, dim: usize) -> Result<TwoModeVec> {
    let minus = gaussian::squeezed_vacuum(-r, dim)?;
    let plus = gaussian::squeezed_vacuum(r, dim)?;
    let joint = tensor_vec(&minus, &plus);
    let mixed = gaussian::beam_splitter_apply(std::f64::consts::FRAC_PI_4, dim, dim, &joint)?;
    TwoModeVec::new(dim, dim, mixed)
}

/// Subtracts one photon from each mode and heralds on the joint click.
pub fn joint_subtract(state: &TwoModeVec) -> Result<TwoModeOutcome> {
    let (da, db) = (state.dim_a, state.dim_b);
    let mut data = CVector::zeros(da * db);
    for a in 0..da - 1 {
        for b in 0..db - 1 {
            data[a * db + b] = state.data[(a + 1) * db + (b + 1)]
                * c((((a + 1) * (b + 1)) as f64).sqrt());
        }
    }
    let raw = TwoModeVec::new(da, db, data)?;
    let (unit, weight) = raw.normalized()?;
    Ok(TwoModeOutcome {
        state: unit,
        success_probability: weight,
        heralding: "coincident single-photon subtraction on both modes".into(),
    })
}

/// Heralding weight of the joint subtraction on a photon-number ladder state.
pub fn joint_subtract_weight(r: f64) -> Result<f64> {
    let params = TmsvParams::new(r)?;
    let l2 = params.lambda * params.lambda;
    Ok(l2 * (1.0 + l2) / ((1.0 - l2) * (1.0 - l2)))
}

/// Decouples the modes on a balanced beam splitter and reduces to mode A.
pub fn decouple_and_reduce(state: &TwoModeVec) -> Result<CMatrix> {
    let mixed = gaussian::beam_splitter_apply(
        std::f64::consts::FRAC_PI_4,
        state.dim_a,
        state.dim_b,
        &state.data,
    )?;
    let joint = TwoModeVec::new(state.dim_a, state.dim_b, mixed)?;
    Ok(hermitize(&joint.reduced_density(Mode::A)))
}

/// Closed-form reduced density matrix of mode A after joint subtraction and decoupling.
pub fn decoupled_density_analytic(r: f64, dim: usize) -> Result<CMatrix> {
    let squeeze = gaussian::squeeze_operator(r, dim)?;
    let mut phi = CVector::zeros(dim);
    phi[0] = c(2.0f64.sqrt() * r.cosh());
    phi[2] = c(r.sinh());
    let vac = fock::vacuum(dim);
    let mut core = fock::outer(&phi) + fock::outer(&vac).map(|z| z * r.sinh().powi(2));
    core /= c(2.0 * (2.0 * r).cosh());
    Ok(hermitize(&(&squeeze * core * squeeze.adjoint())))
}

/// Purity of the decoupled reduced state: 1 - sinh^4 r / (2 cosh^2 2r).
pub fn two_mode_purity_analytic(r: f64) -> f64 {
    1.0 - r.sinh().powi(4) / (2.0 * (2.0 * r).cosh().powi(2))
}

/// Closed-form quadrature variances of the decoupled reduced state.
pub fn decoupled_variances_analytic(r: f64) -> (f64, f64) {
    let bracket = 2.0 * r.sinh() / (2.0 * r).cosh();
    (
        (2.0 * r).exp() * (1.0 + r.exp() * bracket),
        (-2.0 * r).exp() * (1.0 - (-r).exp() * bracket),
    )
}

/// Squeezed-variance comparison between the one-mode and two-mode protocols.
#[derive(Debug, Clone, Copy)]
pub struct ComparisonRecord {
    /// Input squeeze parameter.
    pub r: f64,
    /// Squeezed variance after two-photon subtraction on one mode.
    pub single_mode_vy: f64,
    /// Squeezed variance after joint subtraction and decoupling.
    pub two_mode_vy: f64,
    /// Squeezed variance of the unprocessed input.
    pub input_vy: f64,
}

/// Evaluates both closed forms at offset zero for the same squeeze parameter.
pub fn compare_single_vs_two_mode(r: f64) -> Result<ComparisonRecord> {
    if r <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "r",
            value: r,
            reason: "comparison needs a positive squeeze parameter".into(),
        });
    }
    let (_, single_mode_vy) = crate::subtraction::subtracted_variances(r, 0.0)?;
    let (_, two_mode_vy) = decoupled_variances_analytic(r);
    Ok(ComparisonRecord {
        r,
        single_mode_vy,
        two_mode_vy,
        input_vy: (-2.0 * r).exp(),
    })
}

/// Normalized closed form of the bred state: S(r)[(1 - 2e^{-2r}x^2)|0> + sqrt(2)|2>].
pub fn breed_target(r: f64, x: f64, dim: usize) -> Result<CVector> {
    let squeeze = gaussian::squeeze_operator(r, dim)?;
    let mut core = CVector::zeros(dim);
    core[0] = c(1.0 - 2.0 * (-2.0 * r).exp() * x * x);
    core[2] = c(2.0f64.sqrt());
    let (unit, _) = fock::normalize_vec(&(&squeeze * core))?;
    Ok(unit)
}

/// Interferes two squeezed single photons and conditions on a homodyne value.
pub fn breed_gkp(r: f64, x: f64, dim: usize) -> Result<ProtocolOutcome> {
    let squeeze = gaussian::squeeze_operator(r, dim)?;
    let one = fock::basis_state(dim, 1)?;
    let squeezed_one = &squeeze * one;
    let single = State::Pure(squeezed_one.clone());
    let report = single.truncation_report(GUARD_BAND, TAIL_TOL);
    if !report.clean {
        return Err(Error::Truncation {
            dim,
            suggested: dim + GUARD_BAND,
            tail_mass: report.tail_mass,
            tail_tol: TAIL_TOL,
        });
    }
    let joint = tensor_vec(&squeezed_one, &squeezed_one);
    let mixed = gaussian::beam_splitter_apply(std::f64::consts::FRAC_PI_4, dim, dim, &joint)?;
    let projector = gaussian::homodyne_projector(x, dim)?;
    let mut heralded = CVector::zeros(dim);
    for a in 0..dim {
        let mut acc = C64::new(0.0, 0.0);
        for b in 0..dim {
            acc += projector[b] * mixed[a * dim + b];
        }
        heralded[a] = acc;
    }
    let (unit, weight) = fock::normalize_vec(&heralded)?;
    let state = State::Pure(unit);
    let truncation = state.truncation_report(GUARD_BAND, TAIL_TOL);
    Ok(ProtocolOutcome {
        state,
        success_probability: weight,
        heralding: format!("homodyne condition x = {x} on the idler mode"),
        truncation,
    })
}

/// Two-photon subtraction generalized to a squeezed ancilla in the tap port.
pub fn generalized_subtraction(
    r_signal: f64,
    r_ancilla: f64,
    transmittance: f64,
    dim: usize,
) -> Result<ProtocolOutcome> {
    if !(transmittance > 0.0 && transmittance < 1.0) {
        return Err(Error::InvalidParameter {
            name: "transmittance",
            value: transmittance,
            reason: "tap interference needs T in (0, 1)".into(),
        });
    }
    let signal = gaussian::squeezed_vacuum(r_signal, dim)?;
    let ancilla = gaussian::squeezed_vacuum(r_ancilla, dim)?;
    let joint = tensor_vec(&signal, &ancilla);
    let theta = transmittance.sqrt().acos();
    let mixed = gaussian::beam_splitter_apply(theta, dim, dim, &joint)?;
    // Coincident single-photon clicks behind a balanced splitter on the tap
    // arm contract it onto its two-photon component with amplitude -sqrt(2)/2.
    let herald = c(-(2.0f64.sqrt()) / 2.0);
    let mut heralded = CVector::zeros(dim);
    for a in 0..dim {
        heralded[a] = herald * mixed[a * dim + 2];
    }
    let (unit, weight) = fock::normalize_vec(&heralded)?;
    let state = State::Pure(unit);
    let truncation = state.truncation_report(GUARD_BAND, TAIL_TOL);
    Ok(ProtocolOutcome {
        state,
        success_probability: weight,
        heralding: "two-detector coincidence after squeezed-ancilla interference".into(),
        truncation,
    })
}

/// Best squeeze parameter whose unsqueezing collapses a state onto levels {0, 2}.
#[derive(Debug, Clone, Copy)]
pub struct ManifoldCertificate {
    /// Squeeze parameter that minimizes the out-of-manifold mass.
    pub r_prime: f64,
    /// Relative probability weight outside levels {0, 2} after unsqueezing.
    pub residual: f64,
    /// Level-0 amplitude of the unsqueezed state.
    pub c0: C64,
    /// Level-2 amplitude of the unsqueezed state.
    pub c2: C64,
}

/// Certifies that a pure state lies on the squeezed {|0>, |2>} manifold.
pub fn certify_even_manifold(psi: &CVector) -> Result<ManifoldCertificate> {
    let dim = psi.len();
    fock::basis_state(dim, 2)?;
    let norm = fock::norm_sq(psi);
    if norm <= TOL_ZERO {
        return Err(Error::ZeroState { norm_sq: norm, tol: TOL_ZERO });
    }
    let residual_at = |r_prime: f64| -> f64 {
        let unsqueeze = gaussian::squeeze_operator_for_fit(-r_prime, dim)
            .expect("dimension already validated");
        let core = unsqueeze * psi;
        let kept = core[0].norm_sqr() + core[2].norm_sqr();
        (1.0 - kept / fock::norm_sq(&core)).max(0.0)
    };
    let coarse: Vec<f64> = (0..=60).map(|i| -1.5 + i as f64 * 0.05).collect();
    let mut best = 0usize;
    let mut best_val = f64::INFINITY;
    for (i, &rp) in coarse.iter().enumerate() {
        let v = residual_at(rp);
        if v < best_val {
            best_val = v;
            best = i;
        }
    }
    let lo = coarse[best.saturating_sub(1)];
    let hi = coarse[(best + 1).min(coarse.len() - 1)];
    let (r_prime, residual) = opt::golden_section_min(residual_at, lo, hi, 1e-9);
    let unsqueeze = gaussian::squeeze_operator_for_fit(-r_prime, dim)?;
    let core = unsqueeze * psi;
    let scale = c(1.0 / fock::norm_sq(&core).sqrt());
    Ok(ManifoldCertificate {
        r_prime,
        residual: residual.max(0.0),
        c0: core[0] * scale,
        c2: core[2] * scale,
    })
}

/// Least-squares fit of a position waveform to e^{-c x^2/2} (b0 + b2 x^2).
#[derive(Debug, Clone, Copy)]
pub struct WaveformFit {
    /// Gaussian envelope curvature.
    pub c: f64,
    /// Constant polynomial coefficient.
    pub b0: C64,
    /// Quadratic polynomial coefficient.
    pub b2: C64,
    /// Relative L2 misfit over the sample grid.
    pub relative_residual: f64,
}

fn waveform_on_grid(psi: &CVector, xs: &[f64]) -> Result<Vec<C64>> {
    let dim = psi.len();
    let mut values = Vec::with_capacity(xs.len());
    for &x in xs {
        let h = gaussian::homodyne_projector(x, dim)?;
        let mut acc = C64::new(0.0, 0.0);
        for n in 0..dim {
            acc += h[n] * psi[n];
        }
        values.push(acc);
    }
    Ok(values)
}

/// Fits the position representation of a state to the two-term Gaussian form.
pub fn fit_breeding_waveform(psi: &CVector, xs: &[f64]) -> Result<WaveformFit> {
    if xs.len() < 3 {
        return Err(Error::InvalidParameter {
            name: "xs",
            value: xs.len() as f64,
            reason: "waveform fit needs at least three sample points".into(),
        });
    }
    let wave = waveform_on_grid(psi, xs)?;
    let total: f64 = wave.iter().map(|w| w.norm_sqr()).sum();
    if total <= TOL_ZERO {
        return Err(Error::ZeroState { norm_sq: total, tol: TOL_ZERO });
    }
    let solve = |curvature: f64| -> (C64, C64, f64) {
        let (mut uu, mut uv, mut vv) = (0.0f64, 0.0f64, 0.0f64);
        let (mut uw, mut vw) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        for (i, &x) in xs.iter().enumerate() {
            let u = (-curvature * x * x / 2.0).exp();
            let v = x * x * u;
            uu += u * u;
            uv += u * v;
            vv += v * v;
            uw += wave[i] * c(u);
            vw += wave[i] * c(v);
        }
        let det = uu * vv - uv * uv;
        if det.abs() <= 1e-300 {
            return (C64::new(0.0, 0.0), C64::new(0.0, 0.0), 1.0);
        }
        let b0 = (uw * c(vv) - vw * c(uv)) / c(det);
        let b2 = (vw * c(uu) - uw * c(uv)) / c(det);
        let mut misfit = 0.0;
        for (i, &x) in xs.iter().enumerate() {
            let u = (-curvature * x * x / 2.0).exp();
            let model = b0 * c(u) + b2 * c(x * x * u);
            misfit += (wave[i] - model).norm_sqr();
        }
        (b0, b2, (misfit / total).sqrt())
    };
    let coarse: Vec<f64> = (1..=120).map(|i| i as f64 * 0.05).collect();
    let mut best = 0usize;
    let mut best_val = f64::INFINITY;
    for (i, &cc) in coarse.iter().enumerate() {
        let v = solve(cc).2;
        if v < best_val {
            best_val = v;
            best = i;
        }
    }
    let lo = coarse[best.saturating_sub(1)];
    let hi = coarse[(best + 1).min(coarse.len() - 1)];
    let (c_best, _) = opt::golden_section_min(|cc| solve(cc).2, lo, hi, 1e-10);
    let (b0, b2, relative_residual) = solve(c_best);
    Ok(WaveformFit { c: c_best, b0, b2, relative_residual })
}
