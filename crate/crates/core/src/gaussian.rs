//! Gaussian building blocks in the truncated Fock basis: squeezing,
//! displacement, rotation, beam splitters, quadrature statistics, homodyne
//! projection, and a covariance-matched Gaussianity fit.
//!
//! Quadrature convention: X = a + a^dag, Y = -i(a - a^dag), [X, Y] = 2i,
//! vacuum variance 1. Homodyne projectors use the scaled quadrature
//! x = X / sqrt(2).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{
    annihilation, c, hermitize, normalize_vec, number_operator, vacuum, C64, CMatrix, CVector,
    State, TruncationReport, GUARD_BAND, TAIL_TOL,
};

/// Hard cap on automatic dimension suggestions.
pub const DIM_CAP: usize = 200;

/// Squeeze factor e^{2r} for squeeze parameter r.
pub fn squeeze_factor(r: f64) -> f64 {
    (2.0 * r).exp()
}

/// Coefficients of the squeezed vacuum over even Fock states, untruncated series.
fn squeezed_vacuum_series(r: f64, dim: usize) -> Vec<f64> {
    let t = r.tanh();
    let mut amps = vec![0.0; dim];
    amps[0] = 1.0 / r.cosh().sqrt();
    let mut n = 2usize;
    while n < dim {
        let k = n as f64;
        amps[n] = amps[n - 2] * t * ((k - 1.0) / k).sqrt();
        n += 2;
    }
    amps
}

fn guard_mass(amps: &[f64], guard: usize) -> f64 {
    let start = amps.len().saturating_sub(guard);
    amps[start..].iter().map(|a| a * a).sum()
}

/// Smallest dimension at which `tail(dim)` drops below `tail_tol`, capped.
fn smallest_clean_dim(tail: impl Fn(usize) -> f64, tail_tol: f64) -> usize {
    let mut dim = 8usize;
    while dim <= DIM_CAP * 64 {
        if tail(dim) < tail_tol {
            return dim;
        }
        dim = dim * 3 / 2 + 2;
    }
    DIM_CAP * 64
}

/// Largest squeeze parameter whose vacuum output stays truncation-clean at `dim`.
pub fn max_clean_squeeze(dim: usize) -> f64 {
    let clean = |r: f64| guard_mass(&squeezed_vacuum_series(r, dim), GUARD_BAND) < TAIL_TOL;
    let (mut lo, mut hi) = (0.0f64, 10.0f64);
    if clean(hi) {
        return hi;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if clean(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Smallest dimension keeping the squeezed vacuum at `r` truncation-clean.
pub fn clean_dim_for_squeeze(r: f64) -> usize {
    smallest_clean_dim(
        |dim| guard_mass(&squeezed_vacuum_series(r, dim), GUARD_BAND),
        TAIL_TOL,
    )
}

/// Squeezed vacuum state from its closed-form Fock series, renormalized after truncation.
pub fn squeezed_vacuum(r: f64, dim: usize) -> Result<CVector> {
    crate::fock::basis_state(dim, 0)?;
    let amps = squeezed_vacuum_series(r, dim);
    let tail = guard_mass(&amps, GUARD_BAND);
    if tail >= TAIL_TOL {
        return Err(Error::Truncation {
            dim,
            suggested: clean_dim_for_squeeze(r),
            tail_mass: tail,
            tail_tol: TAIL_TOL,
        });
    }
    let v = CVector::from_fn(dim, |n, _| c(amps[n]));
    Ok(normalize_vec(&v)?.0)
}

fn coherent_series(alpha: C64, dim: usize) -> Vec<C64> {
    let mut amps = vec![C64::new(0.0, 0.0); dim];
    amps[0] = c((-alpha.norm_sqr() / 2.0).exp());
    for n in 1..dim {
        amps[n] = amps[n - 1] * alpha / c((n as f64).sqrt());
    }
    amps
}

/// Smallest dimension keeping the coherent state at `alpha` truncation-clean.
pub fn clean_dim_for_coherent(alpha: C64) -> usize {
    smallest_clean_dim(
        |dim| {
            coherent_series(alpha, dim)
                .iter()
                .skip(dim.saturating_sub(GUARD_BAND))
                .map(|z| z.norm_sqr())
                .sum()
        },
        TAIL_TOL,
    )
}

/// Coherent state from its Poissonian Fock series, renormalized after truncation.
pub fn coherent_state(alpha: C64, dim: usize) -> Result<CVector> {
    crate::fock::basis_state(dim, 0)?;
    let amps = coherent_series(alpha, dim);
    let tail: f64 = amps
        .iter()
        .skip(dim.saturating_sub(GUARD_BAND))
        .map(|z| z.norm_sqr())
        .sum();
    if tail >= TAIL_TOL {
        return Err(Error::Truncation {
            dim,
            suggested: clean_dim_for_coherent(alpha),
            tail_mass: tail,
            tail_tol: TAIL_TOL,
        });
    }
    let v = CVector::from_vec(amps);
    Ok(normalize_vec(&v)?.0)
}

/// Unitary squeeze operator exp[(r/2)(a^dag^2 - a^2)].
pub fn squeeze_operator(r: f64, dim: usize) -> Result<CMatrix> {
    let amps = squeezed_vacuum_series(r, dim);
    let tail = guard_mass(&amps, GUARD_BAND);
    if tail >= TAIL_TOL {
        return Err(Error::Truncation {
            dim,
            suggested: clean_dim_for_squeeze(r),
            tail_mass: tail,
            tail_tol: TAIL_TOL,
        });
    }
    let a = annihilation(dim)?;
    let ad = a.adjoint();
    let gen = (&ad * &ad - &a * &a).map(|z| z * (r / 2.0));
    Ok(gen.exp())
}

/// Unitary displacement operator exp(alpha a^dag - conj(alpha) a).
pub fn displacement_operator(alpha: C64, dim: usize) -> Result<CMatrix> {
    let tail: f64 = coherent_series(alpha, dim)
        .iter()
        .skip(dim.saturating_sub(GUARD_BAND))
        .map(|z| z.norm_sqr())
        .sum();
    if tail >= TAIL_TOL {
        return Err(Error::Truncation {
            dim,
            suggested: clean_dim_for_coherent(alpha),
            tail_mass: tail,
            tail_tol: TAIL_TOL,
        });
    }
    let a = annihilation(dim)?;
    let ad = a.adjoint();
    let gen = ad.map(|z| z * alpha) - a.map(|z| z * alpha.conj());
    Ok(gen.exp())
}

/// Phase-space rotation operator exp(-i phi n), mapping X to X cos phi + Y sin phi.
pub fn rotation_operator(phi: f64, dim: usize) -> Result<CMatrix> {
    let n = number_operator(dim)?;
    Ok(CMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            (C64::new(0.0, -phi) * n[(i, i)]).exp()
        } else {
            c(0.0)
        }
    }))
}

/// Beam-splitter unitary exp[theta(a^dag b - a b^dag)] with transmittance cos^2(theta),
/// built block-by-block so total photon number is conserved exactly.
pub fn beam_splitter(theta: f64, dim_a: usize, dim_b: usize) -> Result<CMatrix> {
    crate::fock::basis_state(dim_a, 0)?;
    crate::fock::basis_state(dim_b, 0)?;
    let n = dim_a * dim_b;
    let mut u = CMatrix::zeros(n, n);
    for total in 0..=(dim_a - 1 + dim_b - 1) {
        let k_min = total.saturating_sub(dim_b - 1);
        let k_max = total.min(dim_a - 1);
        let m = k_max - k_min + 1;
        let mut gen = nalgebra::DMatrix::<f64>::zeros(m, m);
        for k in k_min..k_max {
            // <k+1, total-k-1| a^dag b |k, total-k> = sqrt((k+1)(total-k))
            let g = (((k + 1) * (total - k)) as f64).sqrt() * theta;
            let row = k + 1 - k_min;
            let col = k - k_min;
            gen[(row, col)] = g;
            gen[(col, row)] = -g;
        }
        let block = gen.exp();
        for (bi, ki) in (k_min..=k_max).enumerate() {
            for (bj, kj) in (k_min..=k_max).enumerate() {
                let i = ki * dim_b + (total - ki);
                let j = kj * dim_b + (total - kj);
                u[(i, j)] = c(block[(bi, bj)]);
            }
        }
    }
    Ok(u)
}

/// Applies the beam splitter to a joint vector blockwise, never materializing
/// the full two-mode unitary; equals beam_splitter(theta) * input.
pub fn beam_splitter_apply(
    theta: f64,
    dim_a: usize,
    dim_b: usize,
    input: &CVector,
) -> Result<CVector> {
    crate::fock::basis_state(dim_a, 0)?;
    crate::fock::basis_state(dim_b, 0)?;
    if input.len() != dim_a * dim_b {
        return Err(Error::ShapeMismatch {
            reason: format!(
                "joint vector length {} != {} x {}",
                input.len(),
                dim_a,
                dim_b
            ),
        });
    }
    let mut out = CVector::zeros(dim_a * dim_b);
    for total in 0..=(dim_a - 1 + dim_b - 1) {
        let k_min = total.saturating_sub(dim_b - 1);
        let k_max = total.min(dim_a - 1);
        let m = k_max - k_min + 1;
        let mut gen = nalgebra::DMatrix::<f64>::zeros(m, m);
        for k in k_min..k_max {
            let g = (((k + 1) * (total - k)) as f64).sqrt() * theta;
            gen[(k + 1 - k_min, k - k_min)] = g;
            gen[(k - k_min, k + 1 - k_min)] = -g;
        }
        let block = gen.exp();
        for (bi, ki) in (k_min..=k_max).enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (bj, kj) in (k_min..=k_max).enumerate() {
                acc += c(block[(bi, bj)]) * input[kj * dim_b + (total - kj)];
            }
            out[ki * dim_b + (total - ki)] = acc;
        }
    }
    Ok(out)
}

/// Quadrature operators (X, Y) with [X, Y] = 2i.
pub fn quadrature_ops(dim: usize) -> Result<(CMatrix, CMatrix)> {
    let a = annihilation(dim)?;
    let ad = a.adjoint();
    let x = &a + &ad;
    let y = (&a - &ad).map(|z| z * C64::new(0.0, -1.0));
    Ok((x, y))
}

/// Quadrature means and variances with truncation diagnostics attached.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct VarianceReport {
    /// Variance of X.
    pub v_x: f64,
    /// Variance of Y.
    pub v_y: f64,
    /// Mean of X.
    pub mean_x: f64,
    /// Mean of Y.
    pub mean_y: f64,
    /// Guard-band diagnostics of the measured state.
    pub truncation: TruncationReport,
}

/// Means and variances of both quadratures for a normalized state.
pub fn quadrature_variances(state: &State) -> Result<VarianceReport> {
    let dim = state.dim();
    let (x, y) = quadrature_ops(dim)?;
    let mean_x = state.expectation(&x).re;
    let mean_y = state.expectation(&y).re;
    let xx = state.expectation(&(&x * &x)).re;
    let yy = state.expectation(&(&y * &y)).re;
    Ok(VarianceReport {
        v_x: xx - mean_x * mean_x,
        v_y: yy - mean_y * mean_y,
        mean_x,
        mean_y,
        truncation: state.truncation_report(GUARD_BAND, TAIL_TOL),
    })
}

/// Unnormalized Fock expansion of the eigenstate <n|x> of x = X/sqrt(2),
/// via the stable Hermite-function recurrence.
pub fn homodyne_projector(x: f64, dim: usize) -> Result<CVector> {
    crate::fock::basis_state(dim, 0)?;
    let mut psi = vec![0.0f64; dim];
    psi[0] = (std::f64::consts::PI).powf(-0.25) * (-x * x / 2.0).exp();
    if dim > 1 {
        psi[1] = x * 2f64.sqrt() * psi[0];
    }
    for n in 2..dim {
        let k = n as f64;
        psi[n] = x * (2.0 / k).sqrt() * psi[n - 1] - ((k - 1.0) / k).sqrt() * psi[n - 2];
    }
    Ok(CVector::from_fn(dim, |n, _| c(psi[n])))
}

/// Unnormalized Fock expansion of the eigenstate of y = Y/sqrt(2),
/// i.e. the x-projector rotated by a quarter period: <n|y> = i^n psi_n(y).
pub fn phase_homodyne_projector(y: f64, dim: usize) -> Result<CVector> {
    let base = homodyne_projector(y, dim)?;
    Ok(CVector::from_fn(dim, |n, _| {
        base[n] * C64::new(0.0, 1.0).powu(n as u32)
    }))
}

/// Finite-acceptance homodyne POVM element: rectangular integration of
/// |x'><x'| over a window of the given width centered at x.
pub fn homodyne_window_povm(x: f64, width: f64, points: usize, dim: usize) -> Result<CMatrix> {
    if width <= 0.0 || points == 0 {
        return Err(Error::InvalidParameter {
            name: "width",
            value: width,
            reason: "window width and point count must be positive".into(),
        });
    }
    let dx = width / points as f64;
    let mut povm = CMatrix::zeros(dim, dim);
    for i in 0..points {
        let xi = x - width / 2.0 + (i as f64 + 0.5) * dx;
        let proj = homodyne_projector(xi, dim)?;
        povm += crate::fock::outer(&proj).map(|z| z * dx);
    }
    Ok(hermitize(&povm))
}

/// Thermal state with mean photon number nbar.
pub fn thermal_state(nbar: f64, dim: usize) -> Result<CMatrix> {
    crate::fock::basis_state(dim, 0)?;
    if nbar < 0.0 {
        return Err(Error::InvalidParameter {
            name: "nbar",
            value: nbar,
            reason: "mean photon number must be nonnegative".into(),
        });
    }
    if nbar == 0.0 {
        return Ok(crate::fock::outer(&vacuum(dim)));
    }
    let q = nbar / (1.0 + nbar);
    let mut diag = CVector::zeros(dim);
    let mut p = 1.0 / (1.0 + nbar);
    for n in 0..dim {
        diag[n] = c(p);
        p *= q;
    }
    Ok(CMatrix::from_diagonal(&diag))
}

/// Covariance data and distance to the closest zero-mean Gaussian state.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GaussianFit {
    /// Variance of X.
    pub v_x: f64,
    /// Variance of Y.
    pub v_y: f64,
    /// Symmetrized covariance <{X,Y}>/2 - <X><Y>.
    pub cov_xy: f64,
    /// Angle of the principal squeezing axes.
    pub principal_angle: f64,
    /// Principal variances (major, minor).
    pub principal_variances: (f64, f64),
    /// Squeeze parameter of the covariance-matched Gaussian reference.
    pub r0: f64,
    /// Thermal occupation of the reference.
    pub nbar: f64,
    /// Fidelity deficit 1 - F(state, reference); near zero for Gaussian states.
    pub residual: f64,
}

/// Extract the covariance of a normalized state and measure its distance to the
/// zero-mean Gaussian (squeezed thermal) state with the same covariance.
pub fn fit_gaussian(state: &State) -> Result<GaussianFit> {
    let dim = state.dim();
    let (x, y) = quadrature_ops(dim)?;
    let mx = state.expectation(&x).re;
    let my = state.expectation(&y).re;
    let v_x = state.expectation(&(&x * &x)).re - mx * mx;
    let v_y = state.expectation(&(&y * &y)).re - my * my;
    let xy = (&x * &y + &y * &x).map(|z| z * 0.5);
    let cov_xy = state.expectation(&xy).re - mx * my;

    let half_diff = 0.5 * (v_x - v_y);
    let rad = (half_diff * half_diff + cov_xy * cov_xy).sqrt();
    let v_major = 0.5 * (v_x + v_y) + rad;
    let v_minor = (0.5 * (v_x + v_y) - rad).max(1e-12);
    let principal_angle = 0.5 * (2.0 * cov_xy).atan2(v_x - v_y);

    let nu = (v_major * v_minor).sqrt().max(1.0);
    let nbar = 0.5 * (nu - 1.0);
    let r0 = 0.25 * (v_major / v_minor).ln();

    let rot = rotation_operator(-principal_angle, dim)?;
    let sq = squeeze_operator_for_fit(r0, dim)?;
    let residual = if nbar < 1e-12 {
        let reference = &rot * (&sq * vacuum(dim));
        1.0 - state.fidelity_with(&State::Pure(reference))
    } else {
        let th = thermal_state(nbar, dim)?;
        let u = &rot * &sq;
        let reference = hermitize(&(&u * th * u.adjoint()));
        1.0 - state.fidelity_with(&State::Mixed(reference))
    };

    Ok(GaussianFit {
        v_x,
        v_y,
        cov_xy,
        principal_angle,
        principal_variances: (v_major, v_minor),
        r0,
        nbar,
        residual: residual.max(0.0),
    })
}

/// Squeeze operator without the truncation gate, for internal reference states.
pub(crate) fn squeeze_operator_for_fit(r: f64, dim: usize) -> Result<CMatrix> {
    let a = annihilation(dim)?;
    let ad = a.adjoint();
    let gen = (&ad * &ad - &a * &a).map(|z| z * (r / 2.0));
    Ok(gen.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{basis_state, norm_sq, tensor_vec, State};
    use approx::assert_abs_diff_eq;

    #[test]
    fn squeeze_operator_at_zero_is_identity() {
        let s = squeeze_operator(0.0, 8).unwrap();
        let dev = (&s - CMatrix::identity(8, 8)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(dev < 1e-12);
    }

    #[test]
    fn squeeze_operator_matches_closed_form_series() {
        let (r, dim) = (0.5, 40);
        let s = squeeze_operator(r, dim).unwrap();
        let from_op = s * vacuum(dim);
        let series = squeezed_vacuum(r, dim).unwrap();
        for n in 0..=10 {
            assert_abs_diff_eq!(from_op[n].re, series[n].re, epsilon = 1e-9);
            assert_abs_diff_eq!(from_op[n].im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn squeeze_operators_of_opposite_sign_invert_on_interior() {
        let (r, dim) = (0.7, 60);
        let prod = squeeze_operator(r, dim).unwrap() * squeeze_operator(-r, dim).unwrap();
        for i in 0..40 {
            for j in 0..40 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(prod[(i, j)].re, want, epsilon = 1e-9);
                assert_abs_diff_eq!(prod[(i, j)].im, 0.0, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn squeezed_vacuum_variances_follow_squeeze_factor() {
        for &r in &[0.2, 0.5, 0.9] {
            let v = squeezed_vacuum(r, 80).unwrap();
            let rep = quadrature_variances(&State::Pure(v)).unwrap();
            assert_abs_diff_eq!(rep.v_x, squeeze_factor(r), epsilon = 1e-8);
            assert_abs_diff_eq!(rep.v_y, squeeze_factor(-r), epsilon = 1e-8);
        }
    }

    #[test]
    fn vacuum_variances_are_unity() {
        let rep = quadrature_variances(&State::Pure(vacuum(10))).unwrap();
        assert_abs_diff_eq!(rep.v_x, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.v_y, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn oversqueezed_request_reports_suggested_dimension() {
        match squeezed_vacuum(2.0, 10) {
            Err(Error::Truncation { suggested, .. }) => {
                assert!(suggested > 10);
                assert!(squeezed_vacuum(2.0, suggested).is_ok());
            }
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn max_clean_squeeze_grows_with_dimension() {
        let r40 = max_clean_squeeze(40);
        let r80 = max_clean_squeeze(80);
        assert!(r80 > r40);
        assert!(squeezed_vacuum(r40 - 1e-6, 40).is_ok());
        assert!(squeezed_vacuum(r40 + 0.2, 40).is_err());
    }

    #[test]
    fn displacement_at_zero_is_identity() {
        let d = displacement_operator(c(0.0), 8).unwrap();
        let dev = (&d - CMatrix::identity(8, 8)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(dev < 1e-12);
    }

    #[test]
    fn displaced_vacuum_has_poissonian_amplitudes() {
        let alpha = c(0.5);
        let dim = 30;
        let d = displacement_operator(alpha, dim).unwrap();
        let v = d * vacuum(dim);
        let series = coherent_state(alpha, dim).unwrap();
        for n in 0..=8 {
            assert_abs_diff_eq!(v[n].re, series[n].re, epsilon = 1e-10);
            assert_abs_diff_eq!(v[n].im, series[n].im, epsilon = 1e-10);
        }
    }

    #[test]
    fn displacement_shifts_annihilation_on_interior() {
        let (delta, dim) = (0.3, 30);
        let d = displacement_operator(c(delta), dim).unwrap();
        let a = annihilation(dim).unwrap();
        let shifted = d.adjoint() * &a * &d;
        let want = &a + CMatrix::identity(dim, dim).map(|z| z * delta);
        for i in 0..20 {
            for j in 0..20 {
                assert_abs_diff_eq!(shifted[(i, j)].re, want[(i, j)].re, epsilon = 1e-9);
                assert_abs_diff_eq!(shifted[(i, j)].im, want[(i, j)].im, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn coherent_state_mean_follows_displacement() {
        let rep = quadrature_variances(&State::Pure(coherent_state(c(0.5), 30).unwrap())).unwrap();
        assert_abs_diff_eq!(rep.mean_x, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(rep.mean_y, 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(rep.v_x, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(rep.v_y, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn beam_splitter_at_zero_is_identity() {
        let u = beam_splitter(0.0, 4, 4).unwrap();
        let dev = (&u - CMatrix::identity(16, 16)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(dev < 1e-13);
    }

    #[test]
    fn balanced_beam_splitter_bunches_photon_pair() {
        let d = 4;
        let u = beam_splitter(std::f64::consts::FRAC_PI_4, d, d).unwrap();
        let v11 = tensor_vec(&basis_state(d, 1).unwrap(), &basis_state(d, 1).unwrap());
        let out = u * v11;
        let amp20 = out[2 * d];
        let amp02 = out[2];
        let amp11 = out[d + 1];
        assert_abs_diff_eq!(amp20.re, 1.0 / 2f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(amp02.re, -1.0 / 2f64.sqrt(), epsilon = 1e-12);
        assert!(amp11.norm() < 1e-13);
    }

    #[test]
    fn beam_splitter_is_unitary_and_number_conserving() {
        let (da, db) = (5, 4);
        let u = beam_splitter(0.7, da, db).unwrap();
        let dev = (&u * u.adjoint() - CMatrix::identity(da * db, da * db))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(dev < 1e-12);
        for a1 in 0..da {
            for b1 in 0..db {
                for a2 in 0..da {
                    for b2 in 0..db {
                        if a1 + b1 != a2 + b2 {
                            assert_eq!(u[(a1 * db + b1, a2 * db + b2)], c(0.0));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn blockwise_application_matches_the_full_unitary() {
        let (theta, da, db) = (0.7, 7, 5);
        let u = beam_splitter(theta, da, db).unwrap();
        let mut input = CVector::zeros(da * db);
        for (i, z) in input.iter_mut().enumerate() {
            let t = i as f64 * 0.37;
            *z = C64::new(t.cos(), t.sin());
        }
        let want = &u * &input;
        let got = beam_splitter_apply(theta, da, db, &input).unwrap();
        let dev = (&got - &want).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(dev < 1e-13, "deviation {dev}");
        assert!(beam_splitter_apply(theta, da, db, &CVector::zeros(3)).is_err());
    }

    #[test]
    fn beam_splitter_rotates_annihilation_operators() {
        let (theta, d) = (0.6, 6);
        let u = beam_splitter(theta, d, d).unwrap();
        let a = tensor_mat_local(&annihilation(d).unwrap(), &CMatrix::identity(d, d));
        let b = tensor_mat_local(&CMatrix::identity(d, d), &annihilation(d).unwrap());
        let got = u.adjoint() * &a * &u;
        let want = a.map(|z| z * theta.cos()) + b.map(|z| z * theta.sin());
        // exact on matrix elements between complete photon-number blocks
        for a1 in 0..d {
            for b1 in 0..d {
                for a2 in 0..d {
                    for b2 in 0..d {
                        if a1 + b1 > d - 1 || a2 + b2 > d - 1 {
                            continue;
                        }
                        let (i, j) = (a1 * d + b1, a2 * d + b2);
                        assert_abs_diff_eq!(got[(i, j)].re, want[(i, j)].re, epsilon = 1e-12);
                        assert_abs_diff_eq!(got[(i, j)].im, want[(i, j)].im, epsilon = 1e-12);
                    }
                }
            }
        }
    }

    fn tensor_mat_local(x: &CMatrix, y: &CMatrix) -> CMatrix {
        x.kronecker(y)
    }

    #[test]
    fn balanced_splitter_commutes_with_equal_squeezing() {
        let (r, d) = (0.4, 30);
        let u = beam_splitter(std::f64::consts::FRAC_PI_4, d, d).unwrap();
        let s = squeeze_operator(r, d).unwrap();
        let ss = tensor_mat_local(&s, &s);
        let v1 = &u * (&ss * tensor_vec(&vacuum(d), &vacuum(d)));
        let v2 = &ss * (&u * tensor_vec(&vacuum(d), &vacuum(d)));
        let f = v1.dotc(&v2).norm_sqr() / (norm_sq(&v1) * norm_sq(&v2));
        assert!(f > 1.0 - 1e-9);
    }

    #[test]
    fn homodyne_projector_odd_component_vanishes_at_origin() {
        let p = homodyne_projector(0.0, 10).unwrap();
        assert_eq!(p[1], c(0.0));
        assert!(p[0].re > 0.0);
    }

    #[test]
    fn homodyne_overlap_reproduces_squeezed_gaussian_wavefunction() {
        let (r, dim) = (0.3, 40);
        let psi = squeezed_vacuum(r, dim).unwrap();
        let sigma_sq = (2.0 * r).exp();
        let mut x = -3.0;
        while x <= 3.0 {
            let proj = homodyne_projector(x, dim).unwrap();
            let overlap: C64 = proj.dotc(&psi);
            let want = (std::f64::consts::PI * sigma_sq).powf(-0.25)
                * (-x * x / (2.0 * sigma_sq)).exp();
            assert_abs_diff_eq!(overlap.re, want, epsilon = 1e-8);
            assert_abs_diff_eq!(overlap.im, 0.0, epsilon = 1e-12);
            x += 0.5;
        }
    }

    #[test]
    fn homodyne_window_completeness_approaches_identity() {
        let dim = 10;
        let povm = homodyne_window_povm(0.0, 16.0, 400, dim).unwrap();
        let dev = (&povm - CMatrix::identity(dim, dim))
            .view((0, 0), (dim - 2, dim - 2))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(dev < 1e-6, "completeness deviation {dev}");
    }

    #[test]
    fn phase_homodyne_projector_rotates_fock_phases() {
        let y = 0.8;
        let p = phase_homodyne_projector(y, 6).unwrap();
        let base = homodyne_projector(y, 6).unwrap();
        assert_abs_diff_eq!(p[2].re, -base[2].re, epsilon = 1e-14);
        assert_abs_diff_eq!(p[1].im, base[1].re, epsilon = 1e-14);
    }

    #[test]
    fn rotation_by_quarter_period_swaps_quadratures() {
        let (r, dim) = (0.4, 40);
        let v = squeezed_vacuum(r, dim).unwrap();
        let rot = rotation_operator(std::f64::consts::FRAC_PI_2, dim).unwrap();
        let rep = quadrature_variances(&State::Pure(&rot * v)).unwrap();
        assert_abs_diff_eq!(rep.v_x, squeeze_factor(-r), epsilon = 1e-8);
        assert_abs_diff_eq!(rep.v_y, squeeze_factor(r), epsilon = 1e-8);
    }

    #[test]
    fn thermal_state_variance_matches_occupation() {
        let nbar = 0.4;
        let th = thermal_state(nbar, 60).unwrap();
        let rep = quadrature_variances(&State::Mixed(th)).unwrap();
        assert_abs_diff_eq!(rep.v_x, 2.0 * nbar + 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(rep.v_y, 2.0 * nbar + 1.0, epsilon = 1e-9);
    }

    #[test]
    fn gaussian_fit_accepts_squeezed_vacuum() {
        let v = squeezed_vacuum(0.5, 40).unwrap();
        let fit = fit_gaussian(&State::Pure(v)).unwrap();
        assert!(fit.residual < 1e-9, "residual {}", fit.residual);
        assert_abs_diff_eq!(fit.r0, 0.5, epsilon = 1e-7);
    }

    #[test]
    fn gaussian_fit_accepts_rotated_squeezed_vacuum() {
        let dim = 40;
        let v = squeezed_vacuum(0.4, dim).unwrap();
        for &phi in &[0.3, -0.7] {
            let rot = rotation_operator(phi, dim).unwrap();
            let fit = fit_gaussian(&State::Pure(&rot * &v)).unwrap();
            assert!(fit.residual < 1e-8, "phi {phi}: residual {}", fit.residual);
        }
    }

    #[test]
    fn gaussian_fit_accepts_squeezed_thermal() {
        let dim = 50;
        let s = squeeze_operator(0.3, dim).unwrap();
        let th = thermal_state(0.4, dim).unwrap();
        let rho = hermitize(&(&s * th * s.adjoint()));
        let fit = fit_gaussian(&State::Mixed(rho)).unwrap();
        assert!(fit.residual < 1e-6, "residual {}", fit.residual);
        assert_abs_diff_eq!(fit.nbar, 0.4, epsilon = 1e-6);
        assert_abs_diff_eq!(fit.r0, 0.3, epsilon = 1e-6);
    }

    #[test]
    fn gaussian_fit_rejects_photon_subtracted_state() {
        let dim = 40;
        let a = annihilation(dim).unwrap();
        let v = squeezed_vacuum(0.5, dim).unwrap();
        let (sub, _) = normalize_vec(&(&a * &a * v)).unwrap();
        let fit = fit_gaussian(&State::Pure(sub)).unwrap();
        assert!(fit.residual > 0.01, "residual {}", fit.residual);
    }
}
