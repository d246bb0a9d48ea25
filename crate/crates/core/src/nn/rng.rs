//! Seeded, portable random generator.
//!
//! The generator is xoshiro256** (Blackman & Vigna). A 64-bit seed is expanded
//! into the 256-bit state by four successive splitmix64 outputs. Both
//! recurrences use only wrapping integer arithmetic, so a seed produces the
//! same stream on every platform.
//!
//! Independent streams are derived per purpose: the stream seed is the base
//! seed XOR a fixed 64-bit tag (see [`Stream::tag`]), expanded as above.

use rand_core::{impls, RngCore};
use serde::{Deserialize, Serialize};

/// Purpose of a derived stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stream {
    Init,
    Shuffle,
    Augment,
    Synth,
    Check,
}

impl Stream {
    pub fn tag(self) -> u64 {
        match self {
            Stream::Init => 0x494e_4954_0000_0001,
            Stream::Shuffle => 0x5348_5546_0000_0002,
            Stream::Augment => 0x4155_474d_0000_0003,
            Stream::Synth => 0x5359_4e54_0000_0004,
            Stream::Check => 0x4348_4543_0000_0005,
        }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rng {
    s: [u64; 4],
}

impl Rng {
    pub fn seed_from(seed: u64) -> Self {
        let mut sm = seed;
        let s = [
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
        ];
        Rng { s }
    }

    pub fn stream(seed: u64, purpose: Stream) -> Self {
        Self::seed_from(seed ^ purpose.tag())
    }

    pub fn state(&self) -> [u64; 4] {
        self.s
    }

    /// Restores a saved state. An all-zero state is a fixed point of the
    /// recurrence, so it is rejected.
    pub fn from_state(s: [u64; 4]) -> Option<Self> {
        (s != [0; 4]).then_some(Rng { s })
    }

    #[inline]
    pub fn next(&mut self) -> u64 {
        let result = self.s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.next() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `[0, n)` by rejection, free of modulo bias.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let x = self.next();
            if x < zone {
                return x % n;
            }
        }
    }

    /// Uniform integer in `[lo, hi]`.
    pub fn int_in(&mut self, lo: i64, hi: i64) -> i64 {
        assert!(lo <= hi);
        lo + self.below((hi - lo) as u64 + 1) as i64
    }

    pub fn normal(&mut self) -> f64 {
        rand_distr::Distribution::sample(&rand_distr::StandardNormal, self)
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}

impl RngCore for Rng {
    fn next_u32(&mut self) -> u32 {
        (self.next() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.next()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        impls::fill_bytes_via_next(self, dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand_core::Error> {
        self.fill_bytes(dest);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_reference_values() {
        // First outputs of splitmix64 seeded with 0, as published with the algorithm.
        let mut s = 0u64;
        assert_eq!(splitmix64(&mut s), 0xe220_a839_7b1d_cdaf);
        assert_eq!(splitmix64(&mut s), 0x6e78_9e6a_a1b9_65f4);
    }

    #[test]
    fn same_seed_same_stream() {
        let mut a = Rng::seed_from(42);
        let mut b = Rng::seed_from(42);
        for _ in 0..1000 {
            assert_eq!(a.next(), b.next());
        }
    }

    #[test]
    fn streams_differ_by_purpose() {
        let mut a = Rng::stream(7, Stream::Init);
        let mut b = Rng::stream(7, Stream::Shuffle);
        assert_ne!(a.next(), b.next());
    }

    #[test]
    fn state_round_trip() {
        let mut a = Rng::seed_from(3);
        a.next();
        let mut b = Rng::from_state(a.state()).unwrap();
        assert_eq!(a.next(), b.next());
        assert!(Rng::from_state([0; 4]).is_none());
    }

    #[test]
    fn uniform_range_and_moments() {
        let mut r = Rng::seed_from(1);
        let n = 20_000;
        let xs: Vec<f64> = (0..n).map(|_| r.uniform()).collect();
        assert!(xs.iter().all(|&x| (0.0..1.0).contains(&x)));
        let mean = xs.iter().sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.01);
        let zs: Vec<f64> = (0..n).map(|_| r.normal()).collect();
        let zmean = zs.iter().sum::<f64>() / n as f64;
        let zvar = zs.iter().map(|z| (z - zmean).powi(2)).sum::<f64>() / n as f64;
        assert!(zmean.abs() < 0.03 && (zvar - 1.0).abs() < 0.05);
    }

    #[test]
    fn int_in_covers_bounds() {
        let mut r = Rng::seed_from(9);
        let mut seen = [false; 5];
        for _ in 0..500 {
            let v = r.int_in(-2, 2);
            seen[(v + 2) as usize] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }
}
