//! Random streams: xoshiro256++ seeded from a `u64` through SplitMix64.
//!
//! SplitMix64 step: `z += 0x9e3779b97f4a7c15; z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9;
//! z = (z ^ (z >> 27)) * 0x94d049bb133111eb; z ^ (z >> 31)`, four outputs fill the
//! state. Uniform doubles are `(next >> 11) * 2^-53`. Chunk streams are obtained
//! with the standard 2^128 jump.

use rand::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

pub type Stream = Xoshiro256PlusPlus;

pub fn stream(seed: u64) -> Stream {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// The `index`-th of a family of non-overlapping streams.
pub fn jumped_stream(seed: u64, index: usize) -> Stream {
    let mut s = stream(seed);
    for _ in 0..index {
        s.jump();
    }
    s
}

/// Uniform on `[0, 1)` with 53 random bits.
pub fn uniform(s: &mut Stream) -> f64 {
    (s.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproducible_and_in_range() {
        let mut a = stream(7);
        let mut b = stream(7);
        for _ in 0..1000 {
            let x = uniform(&mut a);
            assert_eq!(x, uniform(&mut b));
            assert!((0.0..1.0).contains(&x));
        }
        assert_ne!(jumped_stream(7, 1).next_u64(), stream(7).next_u64());
    }

    #[test]
    fn seeding_is_splitmix64() {
        let mut z: u64 = 42;
        let mut seed = [0u8; 32];
        for chunk in seed.chunks_mut(8) {
            z = z.wrapping_add(0x9e3779b97f4a7c15);
            let mut x = z;
            x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
            x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
            chunk.copy_from_slice(&(x ^ (x >> 31)).to_le_bytes());
        }
        let mut a = Xoshiro256PlusPlus::from_seed(seed);
        let mut b = stream(42);
        for _ in 0..16 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }
}
