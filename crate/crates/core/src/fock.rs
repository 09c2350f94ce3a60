//! Dense complex linear algebra over a truncated Fock basis |0>..|N-1>:
//! ladder operators, tensor products, partial traces, state metrics, and
//! numerical-hygiene helpers (normalization, truncation guards).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Complex scalar used everywhere in this crate.
pub type C64 = Complex64;
/// Dense complex matrix over the truncated Fock basis.
pub type CMatrix = DMatrix<C64>;
/// Dense complex vector over the truncated Fock basis.
pub type CVector = DVector<C64>;

/// Default truncation dimension.
pub const DEFAULT_DIM: usize = 40;
/// Default guard-band width used by truncation diagnostics.
pub const GUARD_BAND: usize = 5;
/// Default upper bound on guard-band probability mass.
pub const TAIL_TOL: f64 = 1e-9;
/// Tolerance on |<psi|psi> - 1| for a vector flagged as normalized.
pub const TOL_NORM: f64 = 1e-10;
/// Tolerance on Hermiticity of density matrices.
pub const TOL_HERM: f64 = 1e-10;
/// Tolerance on negative eigenvalues of density matrices.
pub const TOL_PSD: f64 = 1e-9;
/// Threshold below which a squared norm counts as zero (impossible heralding).
pub const TOL_ZERO: f64 = 1e-14;

/// Shorthand for a real number lifted to the complex scalar type.
#[inline]
pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Identifier for one mode of a two-mode system (index = a * dim_b + b).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// First tensor factor (major index).
    A,
    /// Second tensor factor (minor index).
    B,
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(Error::InvalidDimension {
            dim,
            reason: "need at least the two levels |0> and |1>".into(),
        });
    }
    Ok(())
}

/// Annihilation operator: <n-1| a |n> = sqrt(n).
pub fn annihilation(dim: usize) -> Result<CMatrix> {
    check_dim(dim)?;
    Ok(CMatrix::from_fn(dim, dim, |i, j| {
        if j == i + 1 {
            c((j as f64).sqrt())
        } else {
            c(0.0)
        }
    }))
}

/// Creation operator, the adjoint of [`annihilation`].
pub fn creation(dim: usize) -> Result<CMatrix> {
    Ok(annihilation(dim)?.adjoint())
}

/// Photon-number operator diag(0, 1, .., dim-1).
pub fn number_operator(dim: usize) -> Result<CMatrix> {
    check_dim(dim)?;
    Ok(CMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            c(i as f64)
        } else {
            c(0.0)
        }
    }))
}

/// Fock basis vector |n>.
pub fn basis_state(dim: usize, n: usize) -> Result<CVector> {
    check_dim(dim)?;
    if n >= dim {
        return Err(Error::InvalidDimension {
            dim,
            reason: format!("basis index {n} outside |0>..|{}>", dim - 1),
        });
    }
    let mut v = CVector::zeros(dim);
    v[n] = c(1.0);
    Ok(v)
}

/// Vacuum state |0>.
pub fn vacuum(dim: usize) -> CVector {
    let mut v = CVector::zeros(dim.max(1));
    v[0] = c(1.0);
    v
}

/// Outer product |v><v|.
pub fn outer(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

/// Kronecker product of two vectors with A-major ordering (index = a * dim_b + b).
pub fn tensor_vec(x: &CVector, y: &CVector) -> CVector {
    let k = x.kronecker(y);
    CVector::from_column_slice(k.as_slice())
}

/// Kronecker product of two matrices with A-major ordering.
pub fn tensor_mat(x: &CMatrix, y: &CMatrix) -> CMatrix {
    x.kronecker(y)
}

/// Partial trace of a two-mode density matrix, keeping the requested mode.
pub fn partial_trace(rho: &CMatrix, dim_a: usize, dim_b: usize, keep: Mode) -> Result<CMatrix> {
    let n = dim_a * dim_b;
    if rho.nrows() != n || rho.ncols() != n {
        return Err(Error::ShapeMismatch {
            reason: format!(
                "expected {n}x{n} for dims {dim_a}x{dim_b}, got {}x{}",
                rho.nrows(),
                rho.ncols()
            ),
        });
    }
    let out = match keep {
        Mode::A => CMatrix::from_fn(dim_a, dim_a, |i, j| {
            (0..dim_b).map(|b| rho[(i * dim_b + b, j * dim_b + b)]).sum()
        }),
        Mode::B => CMatrix::from_fn(dim_b, dim_b, |i, j| {
            (0..dim_a).map(|a| rho[(a * dim_b + i, a * dim_b + j)]).sum()
        }),
    };
    Ok(out)
}

/// Hermitian part (m + m^dagger)/2, used to suppress drift after channels.
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).map(|z| z * 0.5)
}

/// Squared norm of a vector as a real number.
pub fn norm_sq(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Normalize a vector, returning the unit vector and its prior squared norm.
pub fn normalize_vec(v: &CVector) -> Result<(CVector, f64)> {
    let n2 = norm_sq(v);
    if n2 < TOL_ZERO {
        return Err(Error::ZeroState {
            norm_sq: n2,
            tol: TOL_ZERO,
        });
    }
    Ok((v.map(|z| z / n2.sqrt()), n2))
}

/// Normalize a matrix by its trace, returning the unit-trace matrix and the prior trace.
pub fn normalize_mat(m: &CMatrix) -> Result<(CMatrix, f64)> {
    let t = m.trace().re;
    if t < TOL_ZERO {
        return Err(Error::ZeroState {
            norm_sq: t,
            tol: TOL_ZERO,
        });
    }
    Ok((m.map(|z| z / t), t))
}

/// Check Hermiticity, unit trace, and positive semidefiniteness of a density matrix.
pub fn validate_density(rho: &CMatrix) -> Result<()> {
    if rho.nrows() != rho.ncols() {
        return Err(Error::InvalidState {
            reason: format!("non-square {}x{}", rho.nrows(), rho.ncols()),
        });
    }
    let herm_dev = (rho - rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if herm_dev > TOL_HERM {
        return Err(Error::InvalidState {
            reason: format!("Hermiticity deviation {herm_dev:.3e}"),
        });
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > TOL_NORM.max(1e-9) || tr.im.abs() > TOL_NORM {
        return Err(Error::InvalidState {
            reason: format!("trace {tr} differs from 1"),
        });
    }
    let min_eig = hermitian_eigenvalues(&hermitize(rho))
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    if min_eig < -TOL_PSD {
        return Err(Error::InvalidState {
            reason: format!("negative eigenvalue {min_eig:.3e}"),
        });
    }
    Ok(())
}

/// Purity Tr(rho^2) of a valid density matrix.
pub fn purity(rho: &CMatrix) -> Result<f64> {
    validate_density(rho)?;
    Ok((rho * rho).trace().re)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Positive-semidefinite square root of a Hermitian matrix (negative modes clamped).
fn sqrtm_psd(m: &CMatrix) -> CMatrix {
    let se = hermitize(m).symmetric_eigen();
    let lam = se.eigenvalues.map(|x| c(x.max(0.0).sqrt()));
    &se.eigenvectors * CMatrix::from_diagonal(&lam) * se.eigenvectors.adjoint()
}

/// Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2 of two density matrices.
pub fn fidelity_mixed(rho: &CMatrix, sigma: &CMatrix) -> f64 {
    let sr = sqrtm_psd(rho);
    let inner = &sr * sigma * &sr;
    let tr: f64 = hermitian_eigenvalues(&inner)
        .into_iter()
        .map(|x| x.max(0.0).sqrt())
        .sum();
    (tr * tr).min(1.0 + 1e-9)
}

/// Trace distance (1/2)||a - b||_1 between two Hermitian matrices.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    0.5 * hermitian_eigenvalues(&hermitize(&(a - b)))
        .into_iter()
        .map(f64::abs)
        .sum::<f64>()
}

/// Diagnostics on probability mass in the top guard band of the basis.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TruncationReport {
    /// Probability mass on levels |N-guard>..|N-1>.
    pub tail_mass: f64,
    /// Guard-band width used.
    pub guard: usize,
    /// Threshold the tail mass was compared against.
    pub tail_tol: f64,
    /// True when the tail mass is below the threshold.
    pub clean: bool,
}

/// Pure-vector or density-matrix state over one truncated mode.
#[derive(Debug, Clone)]
pub enum State {
    /// Normalized (or conditionally produced) state vector.
    Pure(CVector),
    /// Density matrix.
    Mixed(CMatrix),
}

impl State {
    /// Truncation dimension of the underlying basis.
    pub fn dim(&self) -> usize {
        match self {
            State::Pure(v) => v.len(),
            State::Mixed(m) => m.nrows(),
        }
    }

    /// True for the vector representation.
    pub fn is_pure_kind(&self) -> bool {
        matches!(self, State::Pure(_))
    }

    /// Density-matrix form of the state.
    pub fn to_density(&self) -> CMatrix {
        match self {
            State::Pure(v) => outer(v),
            State::Mixed(m) => m.clone(),
        }
    }

    /// Expectation value of an operator in this state.
    pub fn expectation(&self, op: &CMatrix) -> C64 {
        match self {
            State::Pure(v) => v.dotc(&(op * v)),
            State::Mixed(m) => (m * op).trace(),
        }
    }

    /// Ratio rho_20 / rho_00 of Fock matrix elements (c_2/c_0 for pure states).
    pub fn sigma20(&self) -> Result<C64> {
        if self.dim() < 3 {
            return Err(Error::InvalidDimension {
                dim: self.dim(),
                reason: "need at least 3 levels for the 2-0 coherence".into(),
            });
        }
        let (num, den) = match self {
            State::Pure(v) => (v[2] * v[0].conj(), v[0].norm_sqr()),
            State::Mixed(m) => (m[(2, 0)], m[(0, 0)].re),
        };
        if den.abs() < TOL_ZERO {
            return Err(Error::DegenerateState {
                reason: "vanishing vacuum population; 2-0 ratio undefined".into(),
            });
        }
        Ok(num / den)
    }

    /// Probability mass in the top guard band.
    pub fn tail_mass(&self, guard: usize) -> f64 {
        let dim = self.dim();
        let start = dim.saturating_sub(guard);
        match self {
            State::Pure(v) => (start..dim).map(|n| v[n].norm_sqr()).sum(),
            State::Mixed(m) => (start..dim).map(|n| m[(n, n)].re).sum(),
        }
    }

    /// Guard-band diagnostics with the given width and threshold.
    pub fn truncation_report(&self, guard: usize, tail_tol: f64) -> TruncationReport {
        let tail_mass = self.tail_mass(guard);
        TruncationReport {
            tail_mass,
            guard,
            tail_tol,
            clean: tail_mass < tail_tol,
        }
    }

    /// Normalized copy plus the prior squared norm (vector) or trace (matrix).
    pub fn normalized(&self) -> Result<(State, f64)> {
        match self {
            State::Pure(v) => {
                let (u, w) = normalize_vec(v)?;
                Ok((State::Pure(u), w))
            }
            State::Mixed(m) => {
                let (u, w) = normalize_mat(m)?;
                Ok((State::Mixed(u), w))
            }
        }
    }

    /// Apply a unitary: U|psi> or U rho U^dagger.
    pub fn apply_unitary(&self, u: &CMatrix) -> State {
        match self {
            State::Pure(v) => State::Pure(u * v),
            State::Mixed(m) => State::Mixed(hermitize(&(u * m * u.adjoint()))),
        }
    }

    /// Apply a conditional (non-unitary) operator and renormalize,
    /// returning the outcome state and the heralding weight <O^dagger O>.
    pub fn apply_conditional(&self, op: &CMatrix) -> Result<(State, f64)> {
        match self {
            State::Pure(v) => {
                let w = op * v;
                let (u, weight) = normalize_vec(&w)?;
                Ok((State::Pure(u), weight))
            }
            State::Mixed(m) => {
                let w = hermitize(&(op * m * op.adjoint()));
                let (u, weight) = normalize_mat(&w)?;
                Ok((State::Mixed(u), weight))
            }
        }
    }

    /// Fidelity with another state (Uhlmann for mixed pairs).
    pub fn fidelity_with(&self, other: &State) -> f64 {
        match (self, other) {
            (State::Pure(a), State::Pure(b)) => a.dotc(b).norm_sqr(),
            (State::Pure(a), State::Mixed(b)) | (State::Mixed(b), State::Pure(a)) => {
                a.dotc(&(b * a)).re
            }
            (State::Mixed(a), State::Mixed(b)) => fidelity_mixed(a, b),
        }
    }

    /// Convergence metric: 1 - fidelity for pure pairs, trace distance otherwise.
    pub fn convergence_distance(&self, other: &State) -> f64 {
        match (self, other) {
            (State::Pure(a), State::Pure(b)) => 1.0 - a.dotc(b).norm_sqr(),
            _ => trace_distance(&self.to_density(), &other.to_density()),
        }
    }
}

/// JSON-friendly dump of a state or operator: {dim, kind, re[], im[]} (row-major).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateDump {
    /// Truncation dimension.
    pub dim: usize,
    /// "vector" or "matrix".
    pub kind: String,
    /// Real parts, row-major for matrices.
    pub re: Vec<f64>,
    /// Imaginary parts, row-major for matrices.
    pub im: Vec<f64>,
}

impl StateDump {
    /// Dump a vector.
    pub fn from_vector(v: &CVector) -> StateDump {
        StateDump {
            dim: v.len(),
            kind: "vector".into(),
            re: v.iter().map(|z| z.re).collect(),
            im: v.iter().map(|z| z.im).collect(),
        }
    }

    /// Dump a matrix in row-major order.
    pub fn from_matrix(m: &CMatrix) -> StateDump {
        let dim = m.nrows();
        let mut re = Vec::with_capacity(dim * dim);
        let mut im = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..m.ncols() {
                re.push(m[(i, j)].re);
                im.push(m[(i, j)].im);
            }
        }
        StateDump {
            dim,
            kind: "matrix".into(),
            re,
            im,
        }
    }

    /// Dump either representation of a state.
    pub fn from_state(s: &State) -> StateDump {
        match s {
            State::Pure(v) => StateDump::from_vector(v),
            State::Mixed(m) => StateDump::from_matrix(m),
        }
    }

    /// Rebuild the state, validating lengths.
    pub fn to_state(&self) -> Result<State> {
        let expect = match self.kind.as_str() {
            "vector" => self.dim,
            "matrix" => self.dim * self.dim,
            other => {
                return Err(Error::ShapeMismatch {
                    reason: format!("unknown kind {other:?}"),
                })
            }
        };
        if self.re.len() != expect || self.im.len() != expect {
            return Err(Error::ShapeMismatch {
                reason: format!(
                    "kind {} with dim {} needs {} entries, got {}/{}",
                    self.kind,
                    self.dim,
                    expect,
                    self.re.len(),
                    self.im.len()
                ),
            });
        }
        if self.kind == "vector" {
            Ok(State::Pure(CVector::from_fn(self.dim, |i, _| {
                C64::new(self.re[i], self.im[i])
            })))
        } else {
            Ok(State::Mixed(CMatrix::from_fn(self.dim, self.dim, |i, j| {
                C64::new(self.re[i * self.dim + j], self.im[i * self.dim + j])
            })))
        }
    }
}
