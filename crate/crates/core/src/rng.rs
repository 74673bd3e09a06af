//! Reproducible random streams.
//!
//! Every Monte Carlo sample `i` draws from its own ChaCha8 stream selected by
//! `(seed, i)`. ChaCha runs in counter mode, so a sample's numbers do not
//! depend on how samples are split into batches or threads.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::normal;

/// Random stream for sample `index` under `seed`.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform on the open interval (0, 1) with 53 random bits.
#[inline]
pub fn open_uniform<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal by inverse-CDF transform.
#[inline]
pub fn std_normal<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    normal::inv_cdf(open_uniform(rng))
}

/// Poisson draw by sequential inversion of one uniform.
pub fn poisson_by_inversion(mean: f64, u: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let mut p = (-mean).exp();
    let mut cdf = p;
    let mut n = 0usize;
    while u > cdf && n < 10_000 {
        n += 1;
        p *= mean / n as f64;
        cdf += p;
        if p == 0.0 && cdf < u {
            // cdf stalled below u by rounding: u sits in the far tail
            break;
        }
    }
    n
}
