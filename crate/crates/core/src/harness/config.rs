//! Flat `key = value` experiment configuration.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::channel::{ChannelParams, DelayProfile};
use crate::error::{config, Error, Result};
use crate::phn::{PllPhnParams, WienerPhnParams};
use crate::phy::{EbConvention, OfdmParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhnModel {
    None,
    Wiener,
    Pll,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChannelModel {
    Awgn,
    Rayleigh,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReceiverKind {
    /// Best-match codebook receiver.
    Proposed,
    /// Zero-forcing with the true channel and no phase correction.
    Ideal,
}

/// One experiment. Keys in the text form are the field names.
#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub label: String,
    pub bits_per_symbol: usize,
    pub n_fft: usize,
    pub n_cp: usize,
    pub n_pilots: usize,
    pub symbols_per_frame: usize,
    pub coded: bool,
    pub q: usize,
    pub j: usize,
    pub phn_model: PhnModel,
    pub beta_t: f64,
    pub pll_beta_t_ref: f64,
    pub pll_f_lp: f64,
    pub pll_f_pd: f64,
    pub pll_f_pll: f64,
    pub pll_f_ref: f64,
    pub channel: ChannelModel,
    pub known_channel: bool,
    pub delay_profile: DelayProfile,
    pub tau_rms: f64,
    pub speed_kmh: f64,
    pub f_c: f64,
    pub f_s: f64,
    pub n_taps: usize,
    pub doppler: Option<f64>,
    pub receiver: ReceiverKind,
    pub depth: usize,
    pub n_iters: usize,
    pub align_history: bool,
    pub circulant: bool,
    pub ebn0_db: Vec<f64>,
    pub eb_convention: EbConvention,
    pub max_frames: usize,
    pub min_bits: u64,
    pub target_errors: u64,
    pub batch_frames: usize,
    pub seed: u64,
    pub beta_t_hat: Option<f64>,
    pub doppler_hat: Option<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            label: String::new(),
            bits_per_symbol: 4,
            n_fft: 64,
            n_cp: 16,
            n_pilots: 8,
            symbols_per_frame: 20,
            coded: true,
            q: 3,
            j: 4,
            phn_model: PhnModel::Wiener,
            beta_t: 0.01,
            pll_beta_t_ref: 2f64.powi(-9),
            pll_f_lp: 20e3,
            pll_f_pd: 20e3,
            pll_f_pll: 100e3,
            pll_f_ref: 100e6,
            channel: ChannelModel::Rayleigh,
            known_channel: false,
            delay_profile: DelayProfile::Tapped,
            tau_rms: 3.0,
            speed_kmh: 7.0,
            f_c: 5e9,
            f_s: 25e6,
            n_taps: 10,
            doppler: None,
            receiver: ReceiverKind::Proposed,
            depth: 3,
            n_iters: 2,
            align_history: true,
            circulant: false,
            ebn0_db: vec![10.0, 12.0, 14.0, 16.0],
            eb_convention: EbConvention::WithPilots,
            max_frames: 2000,
            min_bits: 0,
            target_errors: 200,
            batch_frames: 16,
            seed: 1,
            beta_t_hat: None,
            doppler_hat: None,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("cannot parse {key} = {v:?}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => config(format!("{key} expects true or false, got {v:?}")),
    }
}

fn parse_opt(key: &str, v: &str) -> Result<Option<f64>> {
    if v.is_empty() || v == "none" {
        Ok(None)
    } else {
        parse(key, v).map(Some)
    }
}

fn opt_str(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), |x| x.to_string())
}

impl SimConfig {
    /// Every key accepted by `set`, in canonical order.
    pub const KEYS: &'static [&'static str] = &[
        "label",
        "bits_per_symbol",
        "n_fft",
        "n_cp",
        "n_pilots",
        "symbols_per_frame",
        "coded",
        "q",
        "j",
        "phn_model",
        "beta_t",
        "pll_beta_t_ref",
        "pll_f_lp",
        "pll_f_pd",
        "pll_f_pll",
        "pll_f_ref",
        "channel",
        "known_channel",
        "delay_profile",
        "tau_rms",
        "speed_kmh",
        "f_c",
        "f_s",
        "n_taps",
        "doppler",
        "receiver",
        "depth",
        "n_iters",
        "align_history",
        "circulant",
        "ebn0_db",
        "eb_convention",
        "max_frames",
        "min_bits",
        "target_errors",
        "batch_frames",
        "seed",
        "beta_t_hat",
        "doppler_hat",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "label" => self.label = v.to_string(),
            "bits_per_symbol" => self.bits_per_symbol = parse(key, v)?,
            "n_fft" => self.n_fft = parse(key, v)?,
            "n_cp" => self.n_cp = parse(key, v)?,
            "n_pilots" => self.n_pilots = parse(key, v)?,
            "symbols_per_frame" => self.symbols_per_frame = parse(key, v)?,
            "coded" => self.coded = parse_bool(key, v)?,
            "q" => self.q = parse(key, v)?,
            "j" => self.j = parse(key, v)?,
            "phn_model" => {
                self.phn_model = match v {
                    "none" => PhnModel::None,
                    "wiener" => PhnModel::Wiener,
                    "pll" => PhnModel::Pll,
                    _ => return config(format!("phn_model must be none, wiener or pll, got {v:?}")),
                }
            }
            "beta_t" => self.beta_t = parse(key, v)?,
            "pll_beta_t_ref" => self.pll_beta_t_ref = parse(key, v)?,
            "pll_f_lp" => self.pll_f_lp = parse(key, v)?,
            "pll_f_pd" => self.pll_f_pd = parse(key, v)?,
            "pll_f_pll" => self.pll_f_pll = parse(key, v)?,
            "pll_f_ref" => self.pll_f_ref = parse(key, v)?,
            "channel" => {
                self.channel = match v {
                    "awgn" => ChannelModel::Awgn,
                    "rayleigh" => ChannelModel::Rayleigh,
                    _ => return config(format!("channel must be awgn or rayleigh, got {v:?}")),
                }
            }
            "known_channel" => self.known_channel = parse_bool(key, v)?,
            "delay_profile" => {
                self.delay_profile = match v {
                    "tapped" => DelayProfile::Tapped,
                    "continuous" => DelayProfile::Continuous,
                    _ => return config(format!("delay_profile must be tapped or continuous, got {v:?}")),
                }
            }
            "tau_rms" => self.tau_rms = parse(key, v)?,
            "speed_kmh" => self.speed_kmh = parse(key, v)?,
            "f_c" => self.f_c = parse(key, v)?,
            "f_s" => self.f_s = parse(key, v)?,
            "n_taps" => self.n_taps = parse(key, v)?,
            "doppler" => self.doppler = parse_opt(key, v)?,
            "receiver" => {
                self.receiver = match v {
                    "proposed" => ReceiverKind::Proposed,
                    "ideal" => ReceiverKind::Ideal,
                    _ => return config(format!("receiver must be proposed or ideal, got {v:?}")),
                }
            }
            "depth" => self.depth = parse(key, v)?,
            "n_iters" => self.n_iters = parse(key, v)?,
            "align_history" => self.align_history = parse_bool(key, v)?,
            "circulant" => self.circulant = parse_bool(key, v)?,
            "ebn0_db" => self.ebn0_db = v.split(',').map(|s| parse(key, s.trim())).collect::<Result<_>>()?,
            "eb_convention" => {
                self.eb_convention = match v {
                    "with_pilots" => EbConvention::WithPilots,
                    "data_only" => EbConvention::DataOnly,
                    _ => return config(format!("eb_convention must be with_pilots or data_only, got {v:?}")),
                }
            }
            "max_frames" => self.max_frames = parse(key, v)?,
            "min_bits" => self.min_bits = parse(key, v)?,
            "target_errors" => self.target_errors = parse(key, v)?,
            "batch_frames" => self.batch_frames = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "beta_t_hat" => self.beta_t_hat = parse_opt(key, v)?,
            "doppler_hat" => self.doppler_hat = parse_opt(key, v)?,
            _ => return config(format!("unknown configuration key {key:?}")),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let s = match key {
            "label" => self.label.clone(),
            "bits_per_symbol" => self.bits_per_symbol.to_string(),
            "n_fft" => self.n_fft.to_string(),
            "n_cp" => self.n_cp.to_string(),
            "n_pilots" => self.n_pilots.to_string(),
            "symbols_per_frame" => self.symbols_per_frame.to_string(),
            "coded" => self.coded.to_string(),
            "q" => self.q.to_string(),
            "j" => self.j.to_string(),
            "phn_model" => match self.phn_model {
                PhnModel::None => "none",
                PhnModel::Wiener => "wiener",
                PhnModel::Pll => "pll",
            }
            .into(),
            "beta_t" => self.beta_t.to_string(),
            "pll_beta_t_ref" => self.pll_beta_t_ref.to_string(),
            "pll_f_lp" => self.pll_f_lp.to_string(),
            "pll_f_pd" => self.pll_f_pd.to_string(),
            "pll_f_pll" => self.pll_f_pll.to_string(),
            "pll_f_ref" => self.pll_f_ref.to_string(),
            "channel" => match self.channel {
                ChannelModel::Awgn => "awgn",
                ChannelModel::Rayleigh => "rayleigh",
            }
            .into(),
            "known_channel" => self.known_channel.to_string(),
            "delay_profile" => match self.delay_profile {
                DelayProfile::Tapped => "tapped",
                DelayProfile::Continuous => "continuous",
            }
            .into(),
            "tau_rms" => self.tau_rms.to_string(),
            "speed_kmh" => self.speed_kmh.to_string(),
            "f_c" => self.f_c.to_string(),
            "f_s" => self.f_s.to_string(),
            "n_taps" => self.n_taps.to_string(),
            "doppler" => opt_str(self.doppler),
            "receiver" => match self.receiver {
                ReceiverKind::Proposed => "proposed",
                ReceiverKind::Ideal => "ideal",
            }
            .into(),
            "depth" => self.depth.to_string(),
            "n_iters" => self.n_iters.to_string(),
            "align_history" => self.align_history.to_string(),
            "circulant" => self.circulant.to_string(),
            "ebn0_db" => self.ebn0_db.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","),
            "eb_convention" => match self.eb_convention {
                EbConvention::WithPilots => "with_pilots",
                EbConvention::DataOnly => "data_only",
            }
            .into(),
            "max_frames" => self.max_frames.to_string(),
            "min_bits" => self.min_bits.to_string(),
            "target_errors" => self.target_errors.to_string(),
            "batch_frames" => self.batch_frames.to_string(),
            "seed" => self.seed.to_string(),
            "beta_t_hat" => opt_str(self.beta_t_hat),
            "doppler_hat" => opt_str(self.doppler_hat),
            _ => return None,
        };
        Some(s)
    }

    /// Parse `key = value` lines; `#` starts a comment.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = Self::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
            c.set(k.trim(), v)?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for k in Self::KEYS {
            let _ = writeln!(s, "{k} = {}", self.get(k).expect("listed key"));
        }
        s
    }

    /// Short digest of every field except the label.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for k in Self::KEYS.iter().filter(|k| **k != "label") {
            h.update(format!("{k}={}\n", self.get(k).expect("listed key")));
        }
        h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.ofdm()?;
        if self.symbols_per_frame == 0 {
            return config("symbols_per_frame must be positive");
        }
        if self.q == 0 || self.j == 0 || self.j > self.n_fft {
            return config(format!("bad codebook shape q = {}, j = {}", self.q, self.j));
        }
        if self.depth == 0 {
            return config("depth must be >= 1");
        }
        if self.ebn0_db.windows(2).any(|w| !(w[0] < w[1])) {
            return config("ebn0_db must be strictly increasing");
        }
        if self.ebn0_db.iter().any(|x| !x.is_finite()) {
            return config("ebn0_db values must be finite");
        }
        if self.max_frames == 0 || self.batch_frames == 0 {
            return config("max_frames and batch_frames must be positive");
        }
        match self.phn_model {
            PhnModel::None => {}
            PhnModel::Wiener => self.wiener()?.validate()?,
            PhnModel::Pll => self.pll().validate()?,
        }
        if let Some(b) = self.beta_t_hat {
            if !(b >= 0.0) {
                return config("beta_t_hat must be >= 0");
            }
        }
        if self.channel == ChannelModel::Rayleigh {
            self.channel_params().validate()?;
            self.estimator_channel().validate()?;
        }
        Ok(())
    }

    pub fn ofdm(&self) -> Result<OfdmParams> {
        OfdmParams::new(self.n_fft, self.n_cp, self.n_pilots, self.bits_per_symbol)
    }

    pub fn wiener(&self) -> Result<WienerPhnParams> {
        WienerPhnParams::new(self.beta_t, self.n_fft, self.n_cp)
    }

    pub fn pll(&self) -> PllPhnParams {
        PllPhnParams {
            beta_t_vco: self.beta_t,
            beta_t_ref: self.pll_beta_t_ref,
            f_lp: self.pll_f_lp,
            f_pd: self.pll_f_pd,
            f_pll: self.pll_f_pll,
            f_c: self.f_c,
            f_ref: self.pll_f_ref,
            f_s: self.f_s,
            n_fft: self.n_fft,
            n_cp: self.n_cp,
        }
    }

    /// Phase-noise growth rate the codebook is designed for.
    pub fn design_beta_t(&self) -> f64 {
        self.beta_t_hat.unwrap_or(match self.phn_model {
            PhnModel::Pll => self.beta_t + self.pll_beta_t_ref,
            _ => self.beta_t,
        })
    }

    /// The channel the link actually applies.
    pub fn channel_params(&self) -> ChannelParams {
        ChannelParams {
            f_c: self.f_c,
            f_s: self.f_s,
            tau_rms: self.tau_rms,
            speed: self.speed_kmh / 3.6,
            n_taps: self.n_taps,
            n_fft: self.n_fft,
            n_cp: self.n_cp,
            profile: self.delay_profile,
            doppler_override: self.doppler,
        }
    }

    /// The channel model the estimator assumes. A flat link is modelled as a
    /// single path with negligible spread.
    pub fn estimator_channel(&self) -> ChannelParams {
        let mut p = self.channel_params();
        if self.channel == ChannelModel::Awgn {
            p.tau_rms = 1e-3;
            p.n_taps = 1;
            p.doppler_override = Some(0.0);
        }
        if let Some(fd) = self.doppler_hat {
            p.doppler_override = Some(fd);
        }
        p
    }
}
