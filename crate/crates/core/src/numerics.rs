//! FFT, special functions and seeded random streams.

use std::f64::consts::{FRAC_2_SQRT_PI, SQRT_2};
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;

use crate::error::{config, Error, Result};

pub type C64 = Complex64;

/// Unitary FFT of a fixed size: both directions are scaled by 1/sqrt(N).
#[derive(Clone)]
pub struct Fft {
    n: usize,
    scale: f64,
    fwd: Arc<dyn rustfft::Fft<f64>>,
    inv: Arc<dyn rustfft::Fft<f64>>,
}

impl std::fmt::Debug for Fft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft").field("n", &self.n).finish()
    }
}

impl Fft {
    pub fn new(n: usize) -> Result<Self> {
        if !n.is_power_of_two() || n < 2 {
            return config(format!("FFT size must be a power of two >= 2, got {n}"));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            n,
            scale: 1.0 / (n as f64).sqrt(),
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn forward_in_place(&self, buf: &mut [C64]) {
        assert_eq!(buf.len(), self.n, "FFT buffer length");
        self.fwd.process(buf);
        buf.iter_mut().for_each(|x| *x *= self.scale);
    }

    pub fn inverse_in_place(&self, buf: &mut [C64]) {
        assert_eq!(buf.len(), self.n, "FFT buffer length");
        self.inv.process(buf);
        buf.iter_mut().for_each(|x| *x *= self.scale);
    }

    pub fn forward(&self, x: &[C64]) -> Vec<C64> {
        let mut v = x.to_vec();
        self.forward_in_place(&mut v);
        v
    }

    pub fn inverse(&self, x: &[C64]) -> Vec<C64> {
        let mut v = x.to_vec();
        self.inverse_in_place(&mut v);
        v
    }
}

/// One-shot unitary transform; plans a new FFT on every call.
pub fn fft(x: &[C64], inverse: bool) -> Result<Vec<C64>> {
    let plan = Fft::new(x.len())?;
    Ok(if inverse { plan.inverse(x) } else { plan.forward(x) })
}

pub fn erf(x: f64) -> f64 {
    statrs::function::erf::erf(x)
}

pub fn erfc(x: f64) -> f64 {
    statrs::function::erf::erfc(x)
}

/// Inverse error function on (-1, 1), polished with Newton steps.
pub fn erf_inv(p: f64) -> Result<f64> {
    if !(p.abs() < 1.0) {
        return Err(Error::Domain(format!("erf_inv needs |p| < 1, got {p}")));
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    let a = p.abs();
    let mut x = statrs::function::erf::erf_inv(a);
    for _ in 0..2 {
        let d = FRAC_2_SQRT_PI * (-x * x).exp();
        if d == 0.0 {
            break;
        }
        // erfc keeps relative precision in the tail where erf saturates.
        x -= ((1.0 - a) - erfc(x)) / d;
    }
    let x = x.copysign(p);
    Ok(x)
}

pub fn bessel_j0(x: f64) -> f64 {
    libm::j0(x)
}

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal upper tail Q(x).
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// A (seed, stream) pair naming an independent ChaCha8 sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(self.stream);
        r
    }

    /// Child stream keyed by `tag`, independent of the parent and of other tags.
    pub fn substream(&self, tag: u64) -> Self {
        Self {
            seed: mix_seed(&[self.seed, self.stream, tag]),
            stream: tag,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Order-sensitive hash of a tuple of integers.
pub fn mix_seed(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x6a09_e667_f3bc_c908, |h, &p| splitmix64(h ^ splitmix64(p)))
}

pub fn gaussian_samples<R: Rng + ?Sized>(rng: &mut R, n: usize, sigma: f64) -> Result<Vec<f64>> {
    if !(sigma >= 0.0) {
        return config(format!("standard deviation must be >= 0, got {sigma}"));
    }
    if sigma == 0.0 {
        return Ok(vec![0.0; n]);
    }
    Ok((0..n).map(|_| sigma * rng.sample::<f64, _>(StandardNormal)).collect())
}

/// Circularly symmetric complex Gaussian samples with E|z|^2 = `variance`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, n: usize, variance: f64) -> Result<Vec<C64>> {
    if !(variance >= 0.0) {
        return config(format!("variance must be >= 0, got {variance}"));
    }
    let s = (variance / 2.0).sqrt();
    Ok((0..n)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C64::new(s * re, s * im)
        })
        .collect())
}
