//! Seeded random sampling of states, unitaries and complex numbers.
//!
//! All randomness in the crate flows from [`SeededRng`], a SplitMix64 stream:
//! one 64-bit seed fixes every draw. Independent substreams (restarts,
//! candidates) are derived with [`substream`].

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::tensor::{Complex, PureState};

pub type SeededRng = rand_xoshiro::SplitMix64;

pub fn seeded(seed: u64) -> SeededRng {
    SeededRng::seed_from_u64(seed)
}

/// Deterministic child seed for stream `index` under `seed`.
pub fn substream(seed: u64, index: u64) -> SeededRng {
    // golden-ratio increment, same constant SplitMix64 uses internally
    seeded(seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Standard complex normal draw (independent `N(0,1)` parts).
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex {
    Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn complex_vector<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<Complex> {
    (0..len).map(|_| complex_normal(rng)).collect()
}

/// Haar-random pure state on the given dimensions.
pub fn random_state<R: Rng + ?Sized>(rng: &mut R, dims: &[usize]) -> Result<PureState> {
    let len = dims.iter().product();
    PureState::new(dims.to_vec(), complex_vector(rng, len))
}

/// Haar-random unitary via QR of a Ginibre matrix with phase correction.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DMatrix<Complex> {
    let g = DMatrix::from_fn(d, d, |_, _| complex_normal(rng));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..d {
        let diag = r[(j, j)];
        let phase = if diag.norm() > 0.0 {
            diag / diag.norm()
        } else {
            Complex::new(1.0, 0.0)
        };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::unitarity_defect;

    #[test]
    fn unitary_is_unitary() {
        let mut rng = seeded(3);
        for d in 2..5 {
            assert!(unitarity_defect(&random_unitary(&mut rng, d)) < 1e-12);
        }
    }

    #[test]
    fn streams_reproduce() {
        let draw = || {
            let mut r = substream(7, 2);
            (0..4).map(|_| r.random()).collect::<Vec<u64>>()
        };
        let (a, b) = (draw(), draw());
        assert_eq!(a, b);
        assert_ne!(substream(7, 2).random::<u64>(), substream(7, 3).random::<u64>());
    }
}
