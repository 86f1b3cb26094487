//! Shared fixtures for the benchmarks.

use klm_core::fock::{FockBasisState, PureState, QubitAmplitudes};
use klm_core::optics::ModeUnitary;
use klm_core::teleport::ResourceCoefficients;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_matrix(k: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..k * k)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

/// Unbalanced real coefficients `c_i ∝ i + 1`.
pub fn ramp_coefficients(n: usize) -> ResourceCoefficients {
    ResourceCoefficients::normalized((0..=n).map(|i| Complex64::new(i as f64 + 1.0, 0.0)).collect()).unwrap()
}

pub fn generic_qubit() -> QubitAmplitudes {
    QubitAmplitudes::normalized(Complex64::new(0.8, 0.0), Complex64::from_polar(0.6, 0.7)).unwrap()
}

/// A Haar-random interferometer and `|1,1,...,1>` on `modes` modes.
pub fn interferometer(modes: usize, seed: u64) -> (ModeUnitary, PureState) {
    let u = ModeUnitary::haar_random(modes, &mut ChaCha8Rng::seed_from_u64(seed));
    (u, PureState::basis(FockBasisState::new(vec![1; modes])))
}
