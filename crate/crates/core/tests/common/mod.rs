//! Seeded random-state generators shared by the integration suites.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sqdistill_core::fock::{self, CMatrix, CVector, C64};

/// Normalized pure state with support on the first `levels` Fock levels.
pub fn random_pure(dim: usize, levels: usize, seed: u64) -> CVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = CVector::zeros(dim);
    for n in 0..levels.min(dim) {
        v[n] = C64::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
    }
    fock::normalize_vec(&v).expect("random vector is nonzero").0
}

/// Normalized pure state supported on even levels only, with a vacuum anchor.
pub fn random_even_pure(dim: usize, levels: usize, seed: u64) -> CVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = CVector::zeros(dim);
    v[0] = C64::new(0.5 + rng.random_range(0.0..0.5), 0.0);
    for n in (2..levels.min(dim)).step_by(2) {
        v[n] = C64::new(rng.random_range(-0.4..0.4), rng.random_range(-0.4..0.4));
    }
    fock::normalize_vec(&v).expect("random vector is nonzero").0
}

/// Random rank-`rank` density matrix supported on the first `levels` levels.
pub fn random_density(dim: usize, levels: usize, rank: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rho = CMatrix::zeros(dim, dim);
    let mut weights = Vec::with_capacity(rank);
    for _ in 0..rank {
        weights.push(rng.random_range(0.1..1.0));
    }
    let total: f64 = weights.iter().sum();
    for (k, w) in weights.iter().enumerate() {
        let pure = random_pure(dim, levels, seed.wrapping_add(1000 + k as u64));
        rho += fock::outer(&pure).map(|z| z * (w / total));
    }
    fock::hermitize(&rho)
}
