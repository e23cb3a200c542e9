//! Reproducible random streams.
//!
//! Every stream is ChaCha20 keyed by the 64-bit run seed (little-endian in
//! the first eight key bytes, the rest zero) with the ChaCha stream number
//! set to a caller-chosen identifier. The counter starts at zero, so stream
//! `(seed, id)` is fully determined by the cipher and independent of the
//! order in which streams are consumed.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

pub type LabRng = ChaCha20Rng;

pub fn stream(seed: u64, id: u64) -> LabRng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    let mut rng = ChaCha20Rng::from_seed(key);
    rng.set_stream(id);
    rng
}

/// Derives a sub-stream identifier from a tag and an index.
pub fn stream_id(tag: u32, index: u32) -> u64 {
    ((tag as u64) << 32) | index as u64
}

pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Standard complex Gaussian with `E|z|^2 = 1`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Complex64::new(s * normal(rng), s * normal(rng))
}

pub fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| 0).scan(stream(7, 3), |r, _| Some(r.random())).collect();
        let b: Vec<u64> = (0..4).map(|_| 0).scan(stream(7, 3), |r, _| Some(r.random())).collect();
        let c: Vec<u64> = (0..4).map(|_| 0).scan(stream(7, 4), |r, _| Some(r.random())).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn first_word_is_pinned() {
        // Guards against silent changes of the keying convention.
        let mut r = stream(0, 0);
        let x: u32 = r.random();
        assert_eq!(x, 0xade0_b876);
    }
}
