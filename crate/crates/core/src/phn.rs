//! Oscillator phase-noise traces: free-running (Wiener) and PLL-stabilised (AR(1)).

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{config, Error, Result};

/// Free-running oscillator described by its per-symbol growth rate `beta_t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WienerPhnParams {
    pub beta_t: f64,
    pub n_fft: usize,
    pub n_cp: usize,
}

impl WienerPhnParams {
    pub fn new(beta_t: f64, n_fft: usize, n_cp: usize) -> Result<Self> {
        let p = Self { beta_t, n_fft, n_cp };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta_t >= 0.0) || !self.beta_t.is_finite() {
            return config(format!("beta_t must be finite and >= 0, got {}", self.beta_t));
        }
        if self.n_fft == 0 {
            return config("n_fft must be positive");
        }
        Ok(())
    }

    /// Per-sample increment variance in rad^2.
    pub fn sigma_eps_sq(&self) -> f64 {
        sigma_eps_sq(self.beta_t, self.n_fft)
    }
}

pub fn sigma_eps_sq(beta_t: f64, n_fft: usize) -> f64 {
    2.0 * PI * beta_t / n_fft as f64
}

/// RMS phase drift over one symbol, in degrees.
pub fn rms_drift_degrees(beta_t: f64) -> f64 {
    (2.0 * PI * beta_t).sqrt().to_degrees()
}

/// PLL-stabilised oscillator.
///
/// The phase follows `theta(n+1) = (1 - gamma) theta(n) + eps(n)` with
/// `gamma = 2 pi f_pll / f_s` and `Var eps = 2 pi (beta_t_vco + beta_t_ref) / N`.
/// `f_lp`, `f_pd`, `f_c` and `f_ref` are validated and carried but do not
/// enter the discretisation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PllPhnParams {
    pub beta_t_vco: f64,
    pub beta_t_ref: f64,
    pub f_lp: f64,
    pub f_pd: f64,
    pub f_pll: f64,
    pub f_c: f64,
    pub f_ref: f64,
    pub f_s: f64,
    pub n_fft: usize,
    pub n_cp: usize,
}

impl PllPhnParams {
    /// 20 kHz loop and detector bandwidths, 100 kHz PLL bandwidth,
    /// 5 GHz carrier, 100 MHz reference, 25 MHz sampling.
    pub fn reference(beta_t_vco: f64, n_fft: usize, n_cp: usize) -> Self {
        Self {
            beta_t_vco,
            beta_t_ref: 2f64.powi(-9),
            f_lp: 20e3,
            f_pd: 20e3,
            f_pll: 100e3,
            f_c: 5e9,
            f_ref: 100e6,
            f_s: 25e6,
            n_fft,
            n_cp,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("f_lp", self.f_lp),
            ("f_pd", self.f_pd),
            ("f_pll", self.f_pll),
            ("f_c", self.f_c),
            ("f_ref", self.f_ref),
            ("f_s", self.f_s),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return config(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.beta_t_vco >= 0.0) || !(self.beta_t_ref >= 0.0) {
            return config("PLL beta_t values must be >= 0");
        }
        if self.n_fft == 0 {
            return config("n_fft must be positive");
        }
        let g = self.reversion_rate();
        if g >= 2.0 {
            return config(format!("PLL reversion rate {g} >= 2 makes the recursion unstable"));
        }
        Ok(())
    }

    pub fn reversion_rate(&self) -> f64 {
        2.0 * PI * self.f_pll / self.f_s
    }

    pub fn drive_variance(&self) -> f64 {
        2.0 * PI * (self.beta_t_vco + self.beta_t_ref) / self.n_fft as f64
    }

    /// Long-run variance of the recursion.
    pub fn stationary_variance(&self) -> f64 {
        let a = 1.0 - self.reversion_rate();
        self.drive_variance() / (1.0 - a * a)
    }
}

/// Phase trace for a run of OFDM symbols, CP samples included.
///
/// Symbol `m` occupies samples `m (N + Ncp) .. (m + 1)(N + Ncp)`; the first
/// `Ncp` of those fall in the cyclic prefix.
#[derive(Clone, Debug, PartialEq)]
pub struct PhnTrace {
    theta: Vec<f64>,
    n_fft: usize,
    n_cp: usize,
}

impl PhnTrace {
    pub fn zeros(n_symbols: usize, n_fft: usize, n_cp: usize) -> Self {
        Self {
            theta: vec![0.0; n_symbols * (n_fft + n_cp)],
            n_fft,
            n_cp,
        }
    }

    pub fn from_samples(theta: Vec<f64>, n_fft: usize, n_cp: usize) -> Result<Self> {
        let len = n_fft + n_cp;
        if len == 0 || !theta.len().is_multiple_of(len) {
            return Err(Error::Framing(format!(
                "trace of {} samples is not a whole number of {len}-sample symbols",
                theta.len()
            )));
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return config("phase trace contains non-finite samples");
        }
        Ok(Self { theta, n_fft, n_cp })
    }

    pub fn n_symbols(&self) -> usize {
        self.theta.len() / (self.n_fft + self.n_cp)
    }

    pub fn samples(&self) -> &[f64] {
        &self.theta
    }

    /// All N + Ncp samples of symbol `m`.
    pub fn symbol(&self, m: usize) -> &[f64] {
        let len = self.n_fft + self.n_cp;
        &self.theta[m * len..(m + 1) * len]
    }

    /// The N samples of symbol `m` that survive CP removal.
    pub fn body(&self, m: usize) -> &[f64] {
        &self.symbol(m)[self.n_cp..]
    }
}

pub fn gen_wiener<R: Rng + ?Sized>(params: &WienerPhnParams, n_symbols: usize, rng: &mut R) -> Result<PhnTrace> {
    params.validate()?;
    if n_symbols == 0 {
        return config("need at least one symbol");
    }
    let mut trace = PhnTrace::zeros(n_symbols, params.n_fft, params.n_cp);
    let s = params.sigma_eps_sq().sqrt();
    if s == 0.0 {
        return Ok(trace);
    }
    let mut acc = 0.0;
    for t in trace.theta.iter_mut() {
        acc += s * rng.sample::<f64, _>(StandardNormal);
        *t = acc;
    }
    Ok(trace)
}

pub fn gen_pll<R: Rng + ?Sized>(params: &PllPhnParams, n_symbols: usize, rng: &mut R) -> Result<PhnTrace> {
    params.validate()?;
    if n_symbols == 0 {
        return config("need at least one symbol");
    }
    let mut trace = PhnTrace::zeros(n_symbols, params.n_fft, params.n_cp);
    let s = params.drive_variance().sqrt();
    if s == 0.0 {
        return Ok(trace);
    }
    let a = 1.0 - params.reversion_rate();
    // Start in the stationary distribution so there is no transient.
    let mut th = params.stationary_variance().sqrt() * rng.sample::<f64, _>(StandardNormal);
    for t in trace.theta.iter_mut() {
        *t = th;
        th = a * th + s * rng.sample::<f64, _>(StandardNormal);
    }
    Ok(trace)
}
