//! Counter-based random numbers (Philox4x32-10).
//!
//! Every output is a pure function of `(key, counter)`, so a simulation
//! can hand each pulse its own substream and generate pulses in any order
//! or on any number of threads without changing a single bit of output.

use core::f64::consts::TAU;

const MUL0: u32 = 0xD251_1F53;
const MUL1: u32 = 0xCD9E_8D57;
const WEYL0: u32 = 0x9E37_79B9;
const WEYL1: u32 = 0xBB67_AE85;

#[inline]
fn mulhilo(a: u32, b: u32) -> (u32, u32) {
    let p = u64::from(a) * u64::from(b);
    ((p >> 32) as u32, p as u32)
}

/// The raw Philox4x32 bijection with 10 rounds.
pub fn philox4x32_10(mut ctr: [u32; 4], mut key: [u32; 2]) -> [u32; 4] {
    for round in 0..10 {
        if round > 0 {
            key[0] = key[0].wrapping_add(WEYL0);
            key[1] = key[1].wrapping_add(WEYL1);
        }
        let (hi0, lo0) = mulhilo(MUL0, ctr[0]);
        let (hi1, lo1) = mulhilo(MUL1, ctr[2]);
        ctr = [hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0];
    }
    ctr
}

/// One substream: the 64-bit key comes from the seed, the upper half of the
/// counter selects the stream and the lower half counts blocks within it.
#[derive(Debug, Clone)]
pub struct Philox {
    key: [u32; 2],
    stream: u64,
    block: u64,
    buf: [u32; 4],
    used: usize,
}

impl Philox {
    pub fn new(seed: u64, stream: u64) -> Self {
        Philox {
            key: [seed as u32, (seed >> 32) as u32],
            stream,
            block: 0,
            buf: [0; 4],
            used: 4,
        }
    }

    fn refill(&mut self) {
        let ctr = [
            self.block as u32,
            (self.block >> 32) as u32,
            self.stream as u32,
            (self.stream >> 32) as u32,
        ];
        self.buf = philox4x32_10(ctr, self.key);
        self.block = self.block.wrapping_add(1);
        self.used = 0;
    }

    #[inline]
    pub fn next_u32(&mut self) -> u32 {
        if self.used == 4 {
            self.refill();
        }
        let v = self.buf[self.used];
        self.used += 1;
        v
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let lo = u64::from(self.next_u32());
        let hi = u64::from(self.next_u32());
        (hi << 32) | lo
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `(0, 1]`.
    #[inline]
    pub fn uniform_open0(&mut self) -> f64 {
        1.0 - self.uniform()
    }

    /// Uniform integer in `0..n` by rejection, free of modulo bias.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        let zone = u64::MAX - (u64::MAX - n + 1) % n;
        loop {
            let v = self.next_u64();
            if v <= zone {
                return v % n;
            }
        }
    }

    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Standard normal variate (Box–Muller, cosine branch only).
    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        let r = libm::sqrt(-2.0 * libm::log(self.uniform_open0()));
        r * libm::cos(TAU * self.uniform())
    }

    #[inline]
    pub fn normal(&mut self, mean: f64, variance: f64) -> f64 {
        if variance == 0.0 {
            mean
        } else {
            mean + libm::sqrt(variance) * self.standard_normal()
        }
    }

    /// Poisson variate by sequential inversion. The search stops at
    /// `μ + 12√μ + 20`; the mass beyond that point is below 1e-12 for every
    /// `μ`, and a draw landing there returns the cutoff.
    pub fn poisson(&mut self, mean: f64) -> u64 {
        if mean <= 0.0 {
            return 0;
        }
        let u = self.uniform();
        let cutoff = libm::floor(mean + 12.0 * libm::sqrt(mean) + 20.0) as u64;
        let ln_mean = libm::log(mean);
        let mut cumulative = 0.0;
        for k in 0..cutoff {
            let kf = k as f64;
            cumulative += libm::exp(kf * ln_mean - mean - libm::lgamma(kf + 1.0));
            if u < cumulative {
                return k;
            }
        }
        cutoff
    }
}
