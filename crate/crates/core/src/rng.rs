//! Seeded random streams.
//!
//! Every random draw in the crate comes from a ChaCha20 generator keyed by a
//! 64-bit seed and a 64-bit stream index. Parallel work units (trials,
//! matrix columns) each own one stream, so results do not depend on
//! scheduling or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::C64;

/// Recorded in output metadata so runs can be reproduced.
pub const GENERATOR_ID: &str =
    "rand_chacha-0.9/ChaCha20Rng(seed_from_u64,set_stream)+rand_distr-0.5/StandardNormal";

pub type StreamRng = ChaCha20Rng;

pub fn substream(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Circular complex Gaussian with the given variance on each quadrature.
pub fn complex_normal<R: rand::Rng + ?Sized>(rng: &mut R, quadrature_variance: f64) -> C64 {
    let sd = quadrature_variance.sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(sd * re, sd * im)
}

pub fn normal<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}
