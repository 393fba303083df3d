//! Seeded substreams and variate generation.
//!
//! Every replicate gets its own ChaCha8 stream: the key comes from the user
//! seed and the 64-bit stream id from the replicate index, so any replicate
//! can be regenerated in isolation and parallel schedules cannot change the
//! numbers drawn.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::special::normal_quantile_as241;

/// The generator for stream `stream` under `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream id for replicate `rep` of experiment cell `cell` (e.g. a grid
/// point of a power curve).
#[inline]
pub fn cell_stream(cell: u32, rep: u32) -> u64 {
    ((cell as u64) << 32) | rep as u64
}

/// Uniform on the open interval (0, 1): the midpoint of one of 2⁵³ equal cells.
#[inline]
pub fn uniform_open<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    ((rng.next_u64() >> 11) as f64 + 0.5) * SCALE
}

/// Standard normal by inversion, consuming exactly one `u64`.
#[inline]
pub fn std_normal<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    normal_quantile_as241(uniform_open(rng))
}

/// Exp(1) by inversion.
#[inline]
pub fn std_exponential<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    -uniform_open(rng).ln()
}

/// Central chi-square with integer degrees of freedom as a sum of squared
/// normals.
pub fn chisq<R: RngCore + ?Sized>(rng: &mut R, nu: u32) -> f64 {
    (0..nu).map(|_| std_normal(rng).powi(2)).sum()
}

/// `n` sorted uniforms via normalized exponential spacings; distributed as the
/// order statistics of an iid U(0, 1) sample, without a sort.
pub fn sorted_uniforms<R: RngCore + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let mut acc = 0.0;
    for _ in 0..n {
        acc += std_exponential(rng);
        out.push(acc);
    }
    let total = acc + std_exponential(rng);
    let inv = 1.0 / total;
    for v in &mut out {
        *v *= inv;
    }
    out
}
