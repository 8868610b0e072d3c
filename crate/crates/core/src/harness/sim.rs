//! Monte-Carlo runners.

use std::time::Instant;

use crate::channel::{gen_channel, ChannelRealization};
use crate::codebook::{analytic_mse, simulated_mse, Codebook, CodebookDesign};
use crate::compensator::{DerotationPath, MmseEstimator, OpCounts, Receiver, ReceiverConfig};
use crate::error::Result;
use crate::harness::config::{ChannelModel, PhnModel, ReceiverKind, SimConfig};
use crate::numerics::{mix_seed, Fft, RngStream, C64};
use crate::phn::{gen_pll, gen_wiener, PhnTrace};
use crate::phy::{apply_link, qam_hard_demap, Frame, FrameLayout, NoiseModel};

/// BER estimate at one Eb/N0.
#[derive(Clone, Debug, PartialEq)]
pub struct PointResult {
    pub ebn0_db: f64,
    pub ber: f64,
    pub stderr: f64,
    pub bits: u64,
    pub errors: u64,
    pub frames: u64,
    /// Share of final-pass selections that picked the all-zero trajectory.
    pub zero_fraction: Option<f64>,
    /// Mean |eta H_est - H|^2 over bins of the final pass, each symbol's
    /// common phase removed first. Only set when estimating.
    pub channel_mse: Option<f64>,
    pub ops: OpCounts,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimResult {
    pub config: SimConfig,
    pub config_hash: String,
    pub points: Vec<PointResult>,
    pub wall_time_s: f64,
}

/// Everything fixed for one Eb/N0 point.
struct PointContext {
    cfg: SimConfig,
    layout: FrameLayout,
    fft: Fft,
    noise: NoiseModel,
    receiver: Option<Receiver>,
    zero_index: Option<usize>,
}

#[derive(Default)]
struct FrameStats {
    bits: u64,
    errors: u64,
    selections: u64,
    zero_hits: u64,
    chan_err: f64,
    chan_bins: u64,
    /// Sum over frames of the squared per-frame BER.
    ber_sq: f64,
    ops: OpCounts,
}

/// Per-frame seed derived from (master seed, point index, frame index).
pub fn frame_seed(master: u64, point: usize, frame: usize) -> u64 {
    mix_seed(&[master, point as u64, frame as u64])
}

impl PointContext {
    fn new(cfg: &SimConfig, ebn0_db: f64) -> Result<Self> {
        let ofdm = cfg.ofdm()?;
        let layout = FrameLayout::new(ofdm.clone(), cfg.symbols_per_frame, cfg.coded)?;
        let fft = Fft::new(cfg.n_fft)?;
        let noise = NoiseModel::from_ebn0(ebn0_db, &ofdm, layout.code_rate(), cfg.eb_convention)?;
        let (receiver, zero_index) = match cfg.receiver {
            ReceiverKind::Ideal => (None, None),
            ReceiverKind::Proposed => {
                let design = CodebookDesign::new(
                    cfg.n_fft,
                    cfg.j,
                    cfg.q,
                    crate::phn::sigma_eps_sq(cfg.design_beta_t(), cfg.n_fft),
                )?;
                let cb = Codebook::build(design)?;
                let zero = cb.zero_index();
                let estimator = if cfg.known_channel {
                    None
                } else {
                    Some(MmseEstimator::new(
                        &cfg.estimator_channel(),
                        &ofdm,
                        noise.sigma_w_sq,
                        cfg.depth,
                    )?)
                };
                let rc = ReceiverConfig {
                    n_iters: cfg.n_iters,
                    depth: cfg.depth,
                    path: if cfg.circulant {
                        DerotationPath::Circulant
                    } else {
                        DerotationPath::TimeDomain
                    },
                    align_history: cfg.align_history,
                };
                (Some(Receiver::new(layout.clone(), cb, estimator, rc)?), zero)
            }
        };
        Ok(Self {
            cfg: cfg.clone(),
            layout,
            fft,
            noise,
            receiver,
            zero_index,
        })
    }

    fn frame(&self, seed: u64) -> Result<FrameStats> {
        let cfg = &self.cfg;
        let base = RngStream::new(seed, 0);
        let n_sym = cfg.symbols_per_frame;
        let frame = Frame::random(&self.layout, &self.fft, &mut base.substream(1).rng())?;
        let phn = match cfg.phn_model {
            PhnModel::None => PhnTrace::zeros(n_sym, cfg.n_fft, cfg.n_cp),
            PhnModel::Wiener => gen_wiener(&cfg.wiener()?, n_sym, &mut base.substream(2).rng())?,
            PhnModel::Pll => gen_pll(&cfg.pll(), n_sym, &mut base.substream(2).rng())?,
        };
        let chan = match cfg.channel {
            ChannelModel::Awgn => ChannelRealization::flat(n_sym, cfg.n_fft),
            ChannelModel::Rayleigh => gen_channel(&cfg.channel_params(), n_sym, &mut base.substream(3).rng())?,
        };
        let mut noise_rng = base.substream(4).rng();
        let h_of = |m: usize| -> Option<&[C64]> {
            match cfg.channel {
                ChannelModel::Awgn => None,
                ChannelModel::Rayleigh => Some(&chan.freq_response[m]),
            }
        };
        let rx = (0..n_sym)
            .map(|m| {
                apply_link(
                    &frame.samples[m],
                    h_of(m),
                    phn.symbol(m),
                    &self.noise,
                    &self.fft,
                    &mut noise_rng,
                )
            })
            .collect::<Result<Vec<_>>>()?;

        let mut st = FrameStats::default();
        let decoded = match &self.receiver {
            None => self.ideal(&rx, &chan)?,
            Some(r) => {
                let known = cfg.known_channel.then_some(&chan.freq_response[..]);
                let out = r.receive_frame(&rx, known, &mut st.ops)?;
                if let Some(last) = out.diagnostics.last() {
                    st.selections = last.len() as u64;
                    st.zero_hits = last.iter().filter(|d| Some(d.k_star) == self.zero_index).count() as u64;
                    if let Some(est) = &out.channel_est {
                        for ((h_est, h), d) in est.iter().zip(&chan.freq_response).zip(last) {
                            // The estimate carries the symbol's common phase; remove it first.
                            let c: C64 = h_est.iter().zip(h).map(|(a, b)| b.conj() * a * d.eta).sum();
                            let align = if c.norm() > 0.0 {
                                c.conj() / c.norm()
                            } else {
                                C64::new(1.0, 0.0)
                            };
                            for (a, b) in h_est.iter().zip(h) {
                                st.chan_err += (a * d.eta * align - b).norm_sqr();
                            }
                            st.chan_bins += h.len() as u64;
                        }
                    }
                }
                out.info_bits
            }
        };
        st.bits = frame.info_bits.len() as u64;
        st.errors = decoded.iter().zip(&frame.info_bits).filter(|(a, b)| a != b).count() as u64;
        Ok(st)
    }

    /// Zero-forcing with the true channel; no phase correction.
    fn ideal(&self, rx: &[Vec<C64>], chan: &ChannelRealization) -> Result<Vec<u8>> {
        let o = &self.layout.ofdm;
        let mut bits = Vec::with_capacity(self.layout.coded_len());
        for (m, r) in rx.iter().enumerate() {
            let y = crate::phy::ofdm_demodulate(r, o, &self.fft)?;
            let eq: Vec<C64> = o
                .data_indices
                .iter()
                .map(|&k| y[k] / chan.freq_response[m][k])
                .collect();
            bits.extend(qam_hard_demap(&eq, o.bits_per_symbol)?);
        }
        if !self.layout.coded {
            return Ok(bits);
        }
        let coded = self.layout.interleaver()?.deinterleave(&bits)?;
        let n_code = 2 * (self.layout.info_len() + crate::coding::TAIL_BITS);
        crate::coding::viterbi_decode(&coded[..n_code])
    }
}

fn run_batch(ctx: &PointContext, seeds: &[u64]) -> Result<Vec<FrameStats>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        seeds.par_iter().map(|&s| ctx.frame(s)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        seeds.iter().map(|&s| ctx.frame(s)).collect()
    }
}

/// Simulate one Eb/N0 point. Frames run in fixed-size batches; after each
/// batch the point stops once `target_errors` errors and `min_bits` bits have
/// been seen, or the frame budget is spent.
pub fn run_point(cfg: &SimConfig, point_index: usize, ebn0_db: f64) -> Result<PointResult> {
    let ctx = PointContext::new(cfg, ebn0_db)?;
    let mut total = FrameStats::default();
    let mut frames = 0usize;
    while frames < cfg.max_frames {
        let n = cfg.batch_frames.min(cfg.max_frames - frames);
        let seeds: Vec<u64> = (frames..frames + n)
            .map(|f| frame_seed(cfg.seed, point_index, f))
            .collect();
        for st in run_batch(&ctx, &seeds)? {
            total.bits += st.bits;
            total.errors += st.errors;
            total.ber_sq += (st.errors as f64 / st.bits as f64).powi(2);
            total.selections += st.selections;
            total.zero_hits += st.zero_hits;
            total.chan_err += st.chan_err;
            total.chan_bins += st.chan_bins;
            total.ops += st.ops;
        }
        frames += n;
        if cfg.target_errors > 0 && total.errors >= cfg.target_errors && total.bits >= cfg.min_bits {
            break;
        }
    }
    let ber = total.errors as f64 / total.bits as f64;
    Ok(PointResult {
        ebn0_db,
        ber,
        stderr: standard_error(ber, total.bits, total.ber_sq, frames),
        bits: total.bits,
        errors: total.errors,
        frames: frames as u64,
        zero_fraction: (ctx.zero_index.is_some() && total.selections > 0)
            .then(|| total.zero_hits as f64 / total.selections as f64),
        channel_mse: (total.chan_bins > 0).then(|| total.chan_err / total.chan_bins as f64),
        ops: total.ops,
    })
}

/// The larger of the binomial standard error and the between-frame one.
/// Coded errors arrive in bursts, so the second is usually the honest figure.
fn standard_error(ber: f64, bits: u64, ber_sq: f64, frames: usize) -> f64 {
    let binomial = (ber * (1.0 - ber) / bits as f64).sqrt();
    if frames < 2 {
        return binomial;
    }
    let n = frames as f64;
    let var = ((ber_sq - n * ber * ber) / (n - 1.0)).max(0.0);
    binomial.max((var / n).sqrt())
}

pub fn run_ber(cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    let start = Instant::now();
    let points = cfg
        .ebn0_db
        .iter()
        .enumerate()
        .map(|(i, &e)| run_point(cfg, i, e))
        .collect::<Result<_>>()?;
    Ok(SimResult {
        config: cfg.clone(),
        config_hash: cfg.hash(),
        points,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// One cell of the codebook MSE table, normalised by the CPE-only MSE.
#[derive(Clone, Debug, PartialEq)]
pub struct MseRow {
    pub q: usize,
    pub j: usize,
    pub k: usize,
    pub analytic: f64,
    pub simulated: f64,
    pub simulated_se: f64,
    /// Control-variate estimate; lower variance than `simulated`.
    pub simulated_cv: f64,
    pub simulated_cv_se: f64,
    pub realizations: usize,
}

/// Codebook MSE table settings.
#[derive(Clone, Debug, PartialEq)]
pub struct MseConfig {
    pub n_fft: usize,
    pub beta_t: f64,
    pub cells: Vec<(usize, usize)>,
    pub realizations: usize,
    /// Realisations used when K reaches `large_k`.
    pub large_k_realizations: usize,
    pub large_k: usize,
    pub seed: u64,
}

impl Default for MseConfig {
    fn default() -> Self {
        let cells = [1, 2, 4, 5, 8]
            .iter()
            .flat_map(|&j| (2..=6).map(move |q| (q, j)))
            .collect();
        Self {
            n_fft: 64,
            beta_t: 0.01,
            cells,
            realizations: 5000,
            large_k_realizations: 500,
            large_k: 16384,
            seed: 1,
        }
    }
}

pub fn run_mse(cfg: &MseConfig) -> Result<Vec<MseRow>> {
    let se = crate::phn::sigma_eps_sq(cfg.beta_t, cfg.n_fft);
    cfg.cells
        .iter()
        .enumerate()
        .map(|(i, &(q, j))| {
            let design = CodebookDesign::new(cfg.n_fft, j, q, se)?;
            let cb = Codebook::build(design)?;
            let k = cb.len();
            let n = if k >= cfg.large_k {
                cfg.large_k_realizations
            } else {
                cfg.realizations
            };
            let est = simulated_mse(&cb, n, RngStream::new(cfg.seed, i as u64))?;
            let d = cb.design();
            Ok(MseRow {
                q,
                j,
                k,
                analytic: d.normalize(analytic_mse(d)),
                simulated: d.normalize(est.mean),
                simulated_se: d.normalize(est.std_err),
                simulated_cv: d.normalize(est.cv_mean),
                simulated_cv_se: d.normalize(est.cv_std_err),
                realizations: n,
            })
        })
        .collect()
}

/// Closed-form and measured complex operation counts per OFDM symbol.
#[derive(Clone, Debug, PartialEq)]
pub struct OpReport {
    pub k: usize,
    pub n_fft: usize,
    pub n_iters: usize,
    pub formula_muls: u64,
    pub formula_adds: u64,
    pub measured_time_domain: OpCounts,
    pub measured_circulant: OpCounts,
}

/// Multiplications for K trajectories over i feedback iterations.
pub fn formula_muls(k: u64, n: u64, iters: u64) -> u64 {
    (iters + 1) * (k * (2 * n * n + 6 * n + 1) + n)
}

pub fn formula_adds(k: u64, n: u64, iters: u64) -> u64 {
    (iters + 1) * (k * n * (3 * n - 2) - k + n - 1)
}

/// Instrumented single-frame run of `cfg` at its first Eb/N0, through both
/// de-rotation paths. Decoding is not counted.
pub fn count_ops(cfg: &SimConfig) -> Result<OpReport> {
    cfg.validate()?;
    let ebn0 = cfg.ebn0_db.first().copied().unwrap_or(20.0);
    let mut measured = [OpCounts::default(); 2];
    let mut k = 0;
    for (slot, circ) in [false, true].into_iter().enumerate() {
        let mut c = cfg.clone();
        c.receiver = ReceiverKind::Proposed;
        c.circulant = circ;
        let ctx = PointContext::new(&c, ebn0)?;
        k = ctx.receiver.as_ref().map_or(0, |r| r.codebook().len());
        let st = ctx.frame(frame_seed(c.seed, 0, 0))?;
        let per = c.symbols_per_frame as u64;
        measured[slot] = OpCounts {
            muls: st.ops.muls / per,
            adds: st.ops.adds / per,
        };
    }
    let (kk, n, i) = (k as u64, cfg.n_fft as u64, cfg.n_iters as u64);
    Ok(OpReport {
        k,
        n_fft: cfg.n_fft,
        n_iters: cfg.n_iters,
        formula_muls: formula_muls(kk, n, i),
        formula_adds: formula_adds(kk, n, i),
        measured_time_domain: measured[0],
        measured_circulant: measured[1],
    })
}
