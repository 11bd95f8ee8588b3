//! Deterministic random streams.
//!
//! Every independently evolving component (each TX chain, each receiver
//! frontend, the OTA noise source, each Monte-Carlo trial) draws from its own
//! ChaCha8 stream keyed by `(seed, stream id)`. Components never share a
//! generator, so the order in which threads run them cannot change a result.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type SimRng = ChaCha8Rng;

/// Named substreams of one run seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    TxChain(usize),
    LocalRx,
    OtaRx,
    OtaNoise,
    /// Free-form stream for harnesses and tests.
    Custom(u64),
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::LocalRx => 1,
            Stream::OtaRx => 2,
            Stream::OtaNoise => 3,
            Stream::TxChain(m) => 0x100 + m as u64,
            Stream::Custom(k) => 0x1_0000_0000 + k,
        }
    }
}

pub fn stream(seed: u64, which: Stream) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which.id());
    rng
}

/// One draw from `N(0, variance)`.
#[inline]
pub fn gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    z * variance.sqrt()
}
