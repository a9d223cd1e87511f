//! Deterministic point sets and seeded RNG construction.
//!
//! Direction sets are nested: the first `k` directions of a grid of size `m > k`
//! are exactly the grid of size `k`, so refining a grid can only lower a minimum
//! taken over it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Radical inverse of `index` in `base` (van der Corput / Halton coordinate).
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut value = 0.0;
    while index > 0 {
        value += (index % base) as f64 * scale;
        index /= base;
        scale *= inv;
    }
    value
}

pub fn halton(index: u64, dim: usize) -> Vec<f64> {
    assert!(dim <= PRIMES.len(), "halton dimension {dim} too large");
    PRIMES[..dim].iter().map(|&b| radical_inverse(index, b)).collect()
}

/// The `k`-th direction (0-based) of a nested low-discrepancy sequence on `S^{dim-1}`.
pub fn sphere_direction(k: u64, dim: usize) -> Vec<f64> {
    let index = k + 1;
    match dim {
        0 => Vec::new(),
        1 => vec![if index.is_multiple_of(2) { 1.0 } else { -1.0 }],
        2 => {
            let angle = std::f64::consts::TAU * radical_inverse(index, 2);
            vec![angle.cos(), angle.sin()]
        }
        3 => {
            let h = halton(index, 2);
            let z = 1.0 - 2.0 * h[0];
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = std::f64::consts::TAU * h[1];
            vec![r * phi.cos(), r * phi.sin(), z]
        }
        _ => {
            // Box-Muller on Halton coordinates, then normalize.
            let pairs = dim.div_ceil(2);
            let h = halton(index, 2 * pairs);
            let mut v = Vec::with_capacity(2 * pairs);
            for j in 0..pairs {
                let radius = (-2.0 * h[2 * j].max(f64::MIN_POSITIVE).ln()).sqrt();
                let angle = std::f64::consts::TAU * h[2 * j + 1];
                v.push(radius * angle.cos());
                v.push(radius * angle.sin());
            }
            v.truncate(dim);
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                let mut e = vec![0.0; dim];
                e[0] = 1.0;
                return e;
            }
            v.iter().map(|x| x / norm).collect()
        }
    }
}

/// SplitMix64 finalizer, used to derive independent stream seeds.
pub fn mix_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed
        .wrapping_add(a.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(b.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng(seed: u64, a: u64, b: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_seed(seed, a, b))
}
