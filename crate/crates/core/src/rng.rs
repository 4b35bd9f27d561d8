//! Seeded, stream-split random numbers.
//!
//! Every replication owns one [`RngStream`] identified by `(seed, stream_id)`.
//! Internally it holds one ChaCha8 generator per [`Channel`]: all four share the
//! key derived from `seed` and use disjoint ChaCha stream numbers
//! `stream_id * 4 + channel`. ChaCha is counter based, so streams never overlap
//! and any stream can be reached without generating the ones before it.
//!
//! Separate channels keep the draw sequences of unrelated consumers apart: the
//! Gaussian mean samples of Thompson sampling come from [`Channel::Theta`]
//! whether or not the policy also draws precisions from [`Channel::Tau`], so
//! SRTS with `rho = 0` and mean-TS see exactly the same `theta` draws.
//!
//! Normal variates use the inverse-CDF method (one open-interval uniform per
//! draw), Gamma variates use the Marsaglia–Tsang sampler from `rand_distr`.
//! Sequences are reproducible within a build; they are not meant to match other
//! implementations.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use statrs::function::erf::erfc_inv;

/// Consumers of randomness inside one replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    /// Reward draws from the environment.
    Reward = 0,
    /// Gaussian mean samples of Thompson-sampling policies.
    Theta = 1,
    /// Gamma precision samples of SRTS.
    Tau = 2,
    /// Any other policy randomness (uniform-random baseline).
    Policy = 3,
}

const CHANNELS: usize = 4;

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    channels: [ChaCha8Rng; CHANNELS],
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let make = |c: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream_id.wrapping_mul(CHANNELS as u64).wrapping_add(c));
            rng
        };
        Self {
            seed,
            stream_id,
            channels: [make(0), make(1), make(2), make(3)],
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn channel(&mut self, channel: Channel) -> &mut ChaCha8Rng {
        &mut self.channels[channel as usize]
    }

    /// Uniform draw on the open interval (0, 1).
    pub fn uniform_open(&mut self, channel: Channel) -> f64 {
        let bits = self.channel(channel).next_u64() >> 11;
        (bits as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n` (Lemire's multiply-shift with rejection).
    pub fn below(&mut self, channel: Channel, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        let n = n as u64;
        let threshold = n.wrapping_neg() % n;
        loop {
            let x = self.channel(channel).next_u64();
            let m = (x as u128) * (n as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as usize;
            }
        }
    }

    pub fn standard_normal(&mut self, channel: Channel) -> f64 {
        let u = self.uniform_open(channel);
        inverse_normal_cdf(u)
    }

    pub fn normal(&mut self, channel: Channel, mean: f64, sd: f64) -> f64 {
        mean + sd * self.standard_normal(channel)
    }

    /// Gamma draw with the given shape and *rate* from [`Channel::Tau`].
    pub fn gamma_rate(&mut self, shape: f64, rate: f64) -> f64 {
        let dist = Gamma::new(shape, 1.0 / rate).expect("gamma shape and rate must be positive");
        dist.sample(self.channel(Channel::Tau))
    }
}

/// Standard normal quantile, `p` in (0, 1).
pub fn inverse_normal_cdf(p: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
}
