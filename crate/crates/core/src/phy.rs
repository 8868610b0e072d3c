//! OFDM transmitter and receiver front end, Gray QAM, and the link model
//! (channel, phase rotation, complex Gaussian noise).

use std::f64::consts::FRAC_1_SQRT_2;

use rand::Rng;

use crate::coding::{conv_encode, BlockInterleaver, TAIL_BITS};
use crate::error::{config, Error, Result};
use crate::numerics::{complex_gaussian, Fft, C64};

pub const PILOT_VALUE: C64 = C64::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2);

#[derive(Clone, Debug, PartialEq)]
pub struct OfdmParams {
    pub n_fft: usize,
    pub n_cp: usize,
    pub n_pilots: usize,
    pub bits_per_symbol: usize,
    pub pilot_indices: Vec<usize>,
    pub pilot_value: C64,
    pub data_indices: Vec<usize>,
}

impl OfdmParams {
    pub fn new(n_fft: usize, n_cp: usize, n_pilots: usize, bits_per_symbol: usize) -> Result<Self> {
        check_order(bits_per_symbol)?;
        if !n_fft.is_power_of_two() || n_fft < 2 {
            return config(format!("n_fft must be a power of two, got {n_fft}"));
        }
        if n_cp > n_fft {
            return config("cyclic prefix longer than the symbol");
        }
        if n_pilots == 0 || n_pilots >= n_fft || !n_fft.is_multiple_of(n_pilots) {
            return config(format!("n_pilots = {n_pilots} must divide n_fft = {n_fft}"));
        }
        let stride = n_fft / n_pilots;
        let pilot_indices: Vec<usize> = (0..n_pilots).map(|i| i * stride).collect();
        let data_indices = (0..n_fft).filter(|k| k % stride != 0).collect();
        Ok(Self {
            n_fft,
            n_cp,
            n_pilots,
            bits_per_symbol,
            pilot_indices,
            pilot_value: PILOT_VALUE,
            data_indices,
        })
    }

    /// 64 subcarriers, 16-sample CP, 8 pilots.
    pub fn standard(bits_per_symbol: usize) -> Result<Self> {
        Self::new(64, 16, 8, bits_per_symbol)
    }

    pub fn symbol_len(&self) -> usize {
        self.n_fft + self.n_cp
    }

    pub fn bits_per_ofdm_symbol(&self) -> usize {
        self.data_indices.len() * self.bits_per_symbol
    }

    /// Place data symbols on the data bins and pilots on the pilot bins.
    pub fn build_grid(&self, data: &[C64]) -> Result<Vec<C64>> {
        if data.len() != self.data_indices.len() {
            return Err(Error::Framing(format!(
                "{} data symbols for {} data bins",
                data.len(),
                self.data_indices.len()
            )));
        }
        let mut g = vec![C64::new(0.0, 0.0); self.n_fft];
        for &p in &self.pilot_indices {
            g[p] = self.pilot_value;
        }
        for (&k, &s) in self.data_indices.iter().zip(data) {
            g[k] = s;
        }
        Ok(g)
    }

    pub fn extract_data(&self, grid: &[C64]) -> Vec<C64> {
        self.data_indices.iter().map(|&k| grid[k]).collect()
    }
}

fn check_order(m: usize) -> Result<()> {
    if !matches!(m, 2 | 4 | 6) {
        return config(format!("bits per QAM symbol must be 2, 4 or 6, got {m}"));
    }
    Ok(())
}

fn qam_scale(m: usize) -> f64 {
    1.0 / (2.0 * ((1u32 << m) as f64 - 1.0) / 3.0).sqrt()
}

/// Gray-labelled square QAM with unit average energy. The first half of each
/// label selects the in-phase level, a leading 0 giving a positive value.
pub fn qam_map(bits: &[u8], m: usize) -> Result<Vec<C64>> {
    check_order(m)?;
    if !bits.len().is_multiple_of(m) {
        return Err(Error::Framing(format!("{} bits is not a multiple of {m}", bits.len())));
    }
    let h = m / 2;
    let top = ((1usize << h) - 1) as f64;
    let scale = qam_scale(m);
    let axis = |b: &[u8]| {
        let g = b.iter().fold(0usize, |acc, &x| (acc << 1) | (x & 1) as usize);
        let mut i = g;
        let mut s = g >> 1;
        while s != 0 {
            i ^= s;
            s >>= 1;
        }
        (top - 2.0 * i as f64) * scale
    };
    Ok(bits
        .chunks_exact(m)
        .map(|c| C64::new(axis(&c[..h]), axis(&c[h..])))
        .collect())
}

/// Nearest-point decision followed by the inverse labelling.
pub fn qam_hard_demap(symbols: &[C64], m: usize) -> Result<Vec<u8>> {
    check_order(m)?;
    let h = m / 2;
    let top = (1usize << h) - 1;
    let scale = qam_scale(m);
    let mut out = Vec::with_capacity(symbols.len() * m);
    let axis = |v: f64, out: &mut Vec<u8>| {
        let i = ((top as f64 - v / scale) / 2.0).round().clamp(0.0, top as f64) as usize;
        let g = i ^ (i >> 1);
        for b in (0..h).rev() {
            out.push(((g >> b) & 1) as u8);
        }
    };
    for s in symbols {
        axis(s.re, &mut out);
        axis(s.im, &mut out);
    }
    Ok(out)
}

/// Nearest constellation point for each symbol.
pub fn qam_slice(symbols: &[C64], m: usize) -> Result<Vec<C64>> {
    qam_map(&qam_hard_demap(symbols, m)?, m)
}

/// IFFT and cyclic prefix.
pub fn ofdm_modulate(grid: &[C64], params: &OfdmParams, fft: &Fft) -> Result<Vec<C64>> {
    if grid.len() != params.n_fft {
        return Err(Error::Framing(format!(
            "grid of {} bins, expected {}",
            grid.len(),
            params.n_fft
        )));
    }
    let body = fft.inverse(grid);
    let mut out = Vec::with_capacity(params.symbol_len());
    out.extend_from_slice(&body[params.n_fft - params.n_cp..]);
    out.extend_from_slice(&body);
    Ok(out)
}

/// Drop the cyclic prefix, returning the N body samples.
pub fn strip_cp<'a>(rx: &'a [C64], params: &OfdmParams) -> Result<&'a [C64]> {
    if rx.len() != params.symbol_len() {
        return Err(Error::Framing(format!(
            "received {} samples, expected {}",
            rx.len(),
            params.symbol_len()
        )));
    }
    Ok(&rx[params.n_cp..])
}

pub fn ofdm_demodulate(rx: &[C64], params: &OfdmParams, fft: &Fft) -> Result<Vec<C64>> {
    Ok(fft.forward(strip_cp(rx, params)?))
}

/// How energy per bit is counted when converting Eb/N0 to a noise variance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum EbConvention {
    /// Pilot energy is charged to the information bits.
    #[default]
    WithPilots,
    /// Only data subcarriers count.
    DataOnly,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseModel {
    /// Complex noise variance per time sample (and per bin, the FFT being unitary).
    pub sigma_w_sq: f64,
}

impl NoiseModel {
    /// Unit symbol energy; the CP is never charged.
    pub fn from_ebn0(ebn0_db: f64, params: &OfdmParams, code_rate: f64, convention: EbConvention) -> Result<Self> {
        if !ebn0_db.is_finite() || !(code_rate > 0.0 && code_rate <= 1.0) {
            return config(format!("bad Eb/N0 {ebn0_db} dB or code rate {code_rate}"));
        }
        let ebn0 = 10f64.powf(ebn0_db / 10.0);
        let mut bits_per_energy = params.bits_per_symbol as f64 * code_rate;
        if convention == EbConvention::WithPilots {
            bits_per_energy *= params.data_indices.len() as f64 / params.n_fft as f64;
        }
        Ok(Self {
            sigma_w_sq: 1.0 / (ebn0 * bits_per_energy),
        })
    }

    pub fn noiseless() -> Self {
        Self { sigma_w_sq: 0.0 }
    }
}

/// Pass one OFDM symbol (CP included) through the channel `h` (None for
/// H = 1), rotate sample n by `phase[n]`, and add noise.
pub fn apply_link<R: Rng + ?Sized>(
    tx: &[C64],
    h: Option<&[C64]>,
    phase: &[f64],
    noise: &NoiseModel,
    fft: &Fft,
    rng: &mut R,
) -> Result<Vec<C64>> {
    let n = fft.len();
    if tx.len() < n || phase.len() != tx.len() {
        return Err(Error::Framing(format!(
            "{} samples with {} phases for FFT size {n}",
            tx.len(),
            phase.len()
        )));
    }
    let n_cp = tx.len() - n;
    let mut y = match h {
        None => tx.to_vec(),
        Some(h) => {
            if h.len() != n {
                return Err(Error::Framing(format!("channel has {} bins, expected {n}", h.len())));
            }
            // With the CP absorbing the channel memory, linear convolution
            // equals circular convolution of the body.
            let mut body = fft.forward(&tx[n_cp..]);
            body.iter_mut().zip(h).for_each(|(x, &g)| *x *= g);
            fft.inverse_in_place(&mut body);
            let mut out = Vec::with_capacity(tx.len());
            out.extend_from_slice(&body[n - n_cp..]);
            out.extend_from_slice(&body);
            out
        }
    };
    for (s, &t) in y.iter_mut().zip(phase) {
        if t != 0.0 {
            *s *= C64::from_polar(1.0, t);
        }
    }
    if noise.sigma_w_sq > 0.0 {
        let w = complex_gaussian(rng, y.len(), noise.sigma_w_sq)?;
        y.iter_mut().zip(w).for_each(|(s, w)| *s += w);
    }
    Ok(y)
}

/// Bit and symbol layout of one frame.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameLayout {
    pub ofdm: OfdmParams,
    pub n_symbols: usize,
    pub coded: bool,
}

impl FrameLayout {
    pub fn new(ofdm: OfdmParams, n_symbols: usize, coded: bool) -> Result<Self> {
        if n_symbols == 0 {
            return config("a frame needs at least one OFDM symbol");
        }
        let l = Self { ofdm, n_symbols, coded };
        if coded && l.coded_len() < 2 * TAIL_BITS + 2 {
            return config("frame too short for the terminated code");
        }
        Ok(l)
    }

    pub fn coded_len(&self) -> usize {
        self.n_symbols * self.ofdm.bits_per_ofdm_symbol()
    }

    pub fn info_len(&self) -> usize {
        if self.coded {
            self.coded_len() / 2 - TAIL_BITS
        } else {
            self.coded_len()
        }
    }

    pub fn code_rate(&self) -> f64 {
        if self.coded {
            0.5
        } else {
            1.0
        }
    }

    pub fn interleaver(&self) -> Result<BlockInterleaver> {
        BlockInterleaver::new(
            self.n_symbols,
            self.ofdm.bits_per_ofdm_symbol(),
            self.ofdm.bits_per_symbol,
        )
    }

    /// Codeword (or raw bits) for `info`, padded with zeros when the code
    /// leaves a spare bit, then interleaved.
    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>> {
        if info.len() != self.info_len() {
            return Err(Error::Framing(format!(
                "{} information bits, frame carries {}",
                info.len(),
                self.info_len()
            )));
        }
        if !self.coded {
            return Ok(info.to_vec());
        }
        let mut c = conv_encode(info);
        c.resize(self.coded_len(), 0);
        self.interleaver()?.interleave(&c)
    }

    /// Map interleaved coded bits onto per-symbol grids with pilots.
    pub fn modulate_bits(&self, coded: &[u8]) -> Result<Vec<Vec<C64>>> {
        if coded.len() != self.coded_len() {
            return Err(Error::Framing(format!(
                "{} coded bits, expected {}",
                coded.len(),
                self.coded_len()
            )));
        }
        coded
            .chunks_exact(self.ofdm.bits_per_ofdm_symbol())
            .map(|c| self.ofdm.build_grid(&qam_map(c, self.ofdm.bits_per_symbol)?))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub info_bits: Vec<u8>,
    pub coded_bits: Vec<u8>,
    pub grid: Vec<Vec<C64>>,
    pub samples: Vec<Vec<C64>>,
}

impl Frame {
    pub fn build(layout: &FrameLayout, info_bits: Vec<u8>, fft: &Fft) -> Result<Self> {
        let coded_bits = layout.encode(&info_bits)?;
        let grid = layout.modulate_bits(&coded_bits)?;
        let samples = grid
            .iter()
            .map(|g| ofdm_modulate(g, &layout.ofdm, fft))
            .collect::<Result<_>>()?;
        Ok(Self {
            info_bits,
            coded_bits,
            grid,
            samples,
        })
    }

    pub fn random<R: Rng + ?Sized>(layout: &FrameLayout, fft: &Fft, rng: &mut R) -> Result<Self> {
        let info = (0..layout.info_len()).map(|_| rng.gen::<u8>() & 1).collect();
        Self::build(layout, info, fft)
    }
}
