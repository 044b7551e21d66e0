//! Deterministic pseudo-random data for property suites and diagnostics.
//!
//! The flows themselves are deterministic; randomized checks draw everything
//! from this one seeded generator so runs reproduce bit-for-bit.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::spectral::PeriodicField;

/// xorshift64* generator; quality is ample for test-field synthesis.
#[derive(Debug, Clone)]
pub struct SmallRng {
    state: u64,
}

impl SmallRng {
    pub fn new(seed: u64) -> Self {
        SmallRng { state: if seed == 0 { 0x9e3779b97f4a7c15 } else { seed } }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545f4914f6cdd1d)
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in `[lo, hi)`.
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Symmetric uniform in `[-amp, amp)`.
    pub fn sym(&mut self, amp: f64) -> f64 {
        self.range(-amp, amp)
    }
}

/// Random real trigonometric polynomial of the given degree with mode
/// amplitudes decaying like `1/(1+k)`; sup norm is O(`amp`).
pub fn trig_poly(rng: &mut SmallRng, n: usize, degree: usize, amp: f64) -> PeriodicField {
    let mut vals = alloc::vec![0.0; n];
    let mean = rng.sym(amp);
    for v in vals.iter_mut() {
        *v = mean;
    }
    for k in 1..=degree.min(n / 2 - 1) {
        let ck = rng.sym(amp) / (1.0 + k as f64);
        let sk = rng.sym(amp) / (1.0 + k as f64);
        for (j, v) in vals.iter_mut().enumerate() {
            let th = core::f64::consts::TAU * k as f64 * j as f64 / n as f64;
            *v += ck * th.cos() + sk * th.sin();
        }
    }
    PeriodicField::from_values(vals)
}

/// Random point on the unit sphere in `dim` ambient dimensions.
pub fn unit_point(rng: &mut SmallRng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sym(1.0)).collect();
        let n2: f64 = v.iter().map(|x| x * x).sum();
        if n2 > 1e-3 && n2 < 1.0 {
            let n = n2.sqrt();
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}
