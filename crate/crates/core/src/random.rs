//! Seeded generators for random states, operators and vectors.
//!
//! All randomness flows from a `u64` seed through ChaCha8, so every
//! construction is reproducible bit for bit across runs and platforms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matkernel::{Ket, Matrix, C64};

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent child seed for stream `index` of `master` (splitmix64 finalizer).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random unit vector.
pub fn random_ket<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Ket {
    Ket((0..d).map(|_| gaussian(rng)).collect()).normalized()
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn random_ginibre<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Matrix {
    Matrix::from_fn(d, |_, _| gaussian(rng))
}

pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Matrix {
    random_ginibre(d, rng).hermitian_part()
}

/// Full-rank density matrix `G G† / tr(G G†)`.
pub fn random_density<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Matrix {
    let g = random_ginibre(d, rng);
    let gg = &g * &g.dagger();
    let t = gg.trace().re;
    gg.scale_real(1.0 / t).hermitian_part()
}

/// Random pure state `|ψ⟩⟨ψ|`.
pub fn random_pure_density<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Matrix {
    Matrix::projector(&random_ket(d, rng))
}
