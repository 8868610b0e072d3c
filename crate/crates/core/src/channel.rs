//! Rayleigh fading with a Jakes Doppler spectrum and exponential delay
//! profile, and the correlation matrices the MMSE estimators are built from.
//!
//! Each realisation sums `n_taps` paths with uniform phases and Doppler
//! shifts `f_d cos(xi)` with uniform `xi`. Two delay profiles are offered:
//! one path per integer sample delay with exponentially decaying power
//! (the default), or equal-power paths whose delays follow an exponential
//! law truncated to `[0, n_taps)`. Either way
//! `E[H_m(k) H_{m-d}(l)^*] = J0(2 pi f_d d) R_f(k - l)` holds exactly, with
//! `R_f` the profile's own frequency correlation.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{config, Error, Result};
use crate::numerics::{bessel_j0, C64};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// How path delays and powers are laid out.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DelayProfile {
    /// Path `i` sits at delay `i` samples with power proportional to `exp(-i / tau_rms)`.
    #[default]
    Tapped,
    /// Equal-power paths with delays drawn from a truncated exponential law.
    Continuous,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelParams {
    pub f_c: f64,
    pub f_s: f64,
    /// RMS delay spread in samples.
    pub tau_rms: f64,
    /// Terminal speed in m/s.
    pub speed: f64,
    pub n_taps: usize,
    pub n_fft: usize,
    pub n_cp: usize,
    pub profile: DelayProfile,
    /// Replaces the Doppler derived from speed and carrier when set.
    pub doppler_override: Option<f64>,
}

impl ChannelParams {
    /// 5 GHz carrier, 25 MHz sampling, 120 ns RMS delay spread, 7 km/h, 10 paths.
    pub fn reference(n_fft: usize, n_cp: usize) -> Self {
        Self {
            f_c: 5e9,
            f_s: 25e6,
            tau_rms: 120e-9 * 25e6,
            speed: 7.0 / 3.6,
            n_taps: 10,
            n_fft,
            n_cp,
            profile: DelayProfile::Tapped,
            doppler_override: None,
        }
    }

    pub fn with_doppler(mut self, doppler_norm: f64) -> Self {
        self.doppler_override = Some(doppler_norm);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_rms > 0.0) || !self.tau_rms.is_finite() {
            return config(format!("tau_rms must be positive, got {}", self.tau_rms));
        }
        if self.n_taps == 0 || self.n_taps > self.n_cp {
            return config(format!(
                "need 1 <= n_taps <= n_cp, got n_taps = {}, n_cp = {}",
                self.n_taps, self.n_cp
            ));
        }
        if !(self.f_s > 0.0) || !(self.f_c > 0.0) || !(self.speed >= 0.0) {
            return config("carrier and sampling rates must be positive and speed >= 0");
        }
        if let Some(fd) = self.doppler_override {
            if !(fd >= 0.0) || !fd.is_finite() {
                return config(format!("Doppler must be finite and >= 0, got {fd}"));
            }
        }
        Ok(())
    }

    /// OFDM symbol duration including CP, in seconds.
    pub fn symbol_duration(&self) -> f64 {
        (self.n_fft + self.n_cp) as f64 / self.f_s
    }

    /// Maximum Doppler shift normalised to the symbol rate.
    pub fn doppler_norm(&self) -> f64 {
        self.doppler_override
            .unwrap_or(self.speed * self.f_c / SPEED_OF_LIGHT * self.symbol_duration())
    }
}

/// Path parameters of one realisation. Delays are in samples, Doppler shifts
/// in cycles per symbol.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelPaths {
    pub amplitudes: Vec<f64>,
    pub phases: Vec<f64>,
    pub dopplers: Vec<f64>,
    pub delays: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    pub paths: ChannelPaths,
    /// `freq_response[m][k]` is H_m(k).
    pub freq_response: Vec<Vec<C64>>,
}

impl ChannelRealization {
    /// A channel with H = 1 everywhere.
    pub fn flat(n_symbols: usize, n_fft: usize) -> Self {
        Self {
            paths: ChannelPaths {
                amplitudes: vec![1.0],
                phases: vec![0.0],
                dopplers: vec![0.0],
                delays: vec![0.0],
            },
            freq_response: vec![vec![C64::new(1.0, 0.0); n_fft]; n_symbols],
        }
    }
}

/// Normalised tap powers of the tapped profile.
pub fn tap_powers(tau_rms: f64, n_taps: usize) -> Vec<f64> {
    let p: Vec<f64> = (0..n_taps).map(|i| (-(i as f64) / tau_rms).exp()).collect();
    let total: f64 = p.iter().sum();
    p.into_iter().map(|x| x / total).collect()
}

fn sample_delay<R: Rng + ?Sized>(rng: &mut R, tau_rms: f64, max: f64) -> f64 {
    let u: f64 = rng.gen();
    let tail = (-max / tau_rms).exp();
    (-tau_rms * (1.0 - u * (1.0 - tail)).ln()).min(max)
}

pub fn gen_channel<R: Rng + ?Sized>(
    params: &ChannelParams,
    n_symbols: usize,
    rng: &mut R,
) -> Result<ChannelRealization> {
    params.validate()?;
    let l = params.n_taps;
    let fd = params.doppler_norm();
    let mut phases = Vec::with_capacity(l);
    let mut dopplers = Vec::with_capacity(l);
    let mut delays = Vec::with_capacity(l);
    for i in 0..l {
        phases.push(2.0 * PI * rng.gen::<f64>());
        dopplers.push(fd * (2.0 * PI * rng.gen::<f64>()).cos());
        delays.push(match params.profile {
            DelayProfile::Tapped => i as f64,
            DelayProfile::Continuous => sample_delay(rng, params.tau_rms, l as f64),
        });
    }
    let amplitudes = match params.profile {
        DelayProfile::Tapped => tap_powers(params.tau_rms, l).into_iter().map(f64::sqrt).collect(),
        DelayProfile::Continuous => vec![1.0 / (l as f64).sqrt(); l],
    };
    let paths = ChannelPaths {
        amplitudes,
        phases,
        dopplers,
        delays,
    };
    let n = params.n_fft;
    // Per-path frequency responses do not change between symbols.
    let path_resp: Vec<Vec<C64>> = paths
        .delays
        .iter()
        .zip(&paths.amplitudes)
        .map(|(&tau, &amp)| {
            (0..n)
                .map(|k| C64::from_polar(amp, -2.0 * PI * k as f64 * tau / n as f64))
                .collect()
        })
        .collect();
    let freq_response = (0..n_symbols)
        .map(|m| {
            let mut h = vec![C64::new(0.0, 0.0); n];
            for (i, resp) in path_resp.iter().enumerate() {
                let rot = C64::from_polar(1.0, paths.phases[i] + 2.0 * PI * paths.dopplers[i] * m as f64);
                h.iter_mut().zip(resp).for_each(|(a, &b)| *a += rot * b);
            }
            h
        })
        .collect();
    Ok(ChannelRealization { paths, freq_response })
}

/// Frequency correlation at a separation of `delta` subcarriers.
pub fn freq_corr(params: &ChannelParams, delta: f64) -> C64 {
    let x = 2.0 * PI * delta / params.n_fft as f64;
    match params.profile {
        DelayProfile::Tapped => tap_powers(params.tau_rms, params.n_taps)
            .iter()
            .enumerate()
            .map(|(i, &p)| C64::from_polar(p, -x * i as f64))
            .sum(),
        DelayProfile::Continuous => exp_pdp_corr(params.n_taps as f64, params.tau_rms, x),
    }
}

/// Closed-form frequency correlation of a continuous exponential delay
/// profile truncated to `[0, l)`, at angular bin separation `x`.
pub fn exp_pdp_corr(l: f64, tau: f64, x: f64) -> C64 {
    let num = C64::new(1.0, 0.0) - (C64::new(-l / tau, -l * x)).exp();
    let den = (1.0 - (-l / tau).exp()) * C64::new(1.0, x * tau);
    num / den
}

/// Time correlation at a lag of `lag` symbols.
pub fn time_corr(params: &ChannelParams, lag: f64) -> f64 {
    bessel_j0(2.0 * PI * params.doppler_norm() * lag)
}

/// A subcarrier `bin` of the symbol `lag` symbols before the current one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridPoint {
    pub lag: usize,
    pub bin: usize,
}

/// E[H(a) H(b)^*] for every pair of grid points.
pub fn corr_matrix(params: &ChannelParams, rows: &[GridPoint], cols: &[GridPoint]) -> DMatrix<C64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| {
        let (a, b) = (rows[i], cols[j]);
        let rt = time_corr(params, a.lag as f64 - b.lag as f64);
        freq_corr(params, a.bin as f64 - b.bin as f64) * rt
    })
}

pub fn freq_corr_matrix(params: &ChannelParams, bins_a: &[usize], bins_b: &[usize]) -> DMatrix<C64> {
    let pts = |b: &[usize]| b.iter().map(|&bin| GridPoint { lag: 0, bin }).collect::<Vec<_>>();
    corr_matrix(params, &pts(bins_a), &pts(bins_b))
}

/// Grid points of the current symbol and `depth - 1` earlier ones, current first.
pub fn stacked_points(depth: usize, bins: &[usize]) -> Vec<GridPoint> {
    (0..depth)
        .flat_map(|lag| bins.iter().map(move |&bin| GridPoint { lag, bin }))
        .collect()
}

/// Correlation of `bins` stacked over `depth` symbols, checked to be PSD.
pub fn joint_corr_matrix(params: &ChannelParams, depth: usize, bins: &[usize]) -> Result<DMatrix<C64>> {
    if depth == 0 {
        return config("depth must be >= 1");
    }
    let pts = stacked_points(depth, bins);
    let r = corr_matrix(params, &pts, &pts);
    let min_eig = r
        .clone()
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if min_eig < -1e-9 {
        return Err(Error::Internal(format!(
            "correlation matrix not PSD (min eigenvalue {min_eig:e})"
        )));
    }
    Ok(r)
}
