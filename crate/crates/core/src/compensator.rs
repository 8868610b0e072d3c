//! Best-match phase-noise compensation: de-rotate the received symbol by each
//! codebook trajectory, fit a complex gain per candidate, keep the candidate
//! whose equalised symbols sit closest to the references, and optionally
//! iterate with decoder feedback.

use nalgebra::DMatrix;

use crate::channel::{corr_matrix, stacked_points, ChannelParams, GridPoint};
use crate::codebook::Codebook;
use crate::coding::viterbi_decode;
use crate::error::{config, Error, Result};
use crate::numerics::{Fft, C64};
use crate::phy::{qam_hard_demap, strip_cp, FrameLayout, OfdmParams};

/// Channel-estimate magnitude below which a bin is left out of gain and cost sums.
pub const CHANNEL_FLOOR: f64 = 1e-6;

/// Smallest diagonal loading used when building MMSE gains.
pub const MIN_LOADING: f64 = 1e-9;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Complex multiply and add counters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpCounts {
    pub muls: u64,
    pub adds: u64,
}

impl OpCounts {
    fn fft(&mut self, n: usize) {
        let stages = n.trailing_zeros() as u64;
        self.muls += n as u64 / 2 * stages;
        self.adds += n as u64 * stages;
    }
    fn matvec(&mut self, rows: usize, cols: usize) {
        self.muls += (rows * cols) as u64;
        self.adds += (rows * (cols - 1)) as u64;
    }
}

impl std::ops::AddAssign for OpCounts {
    fn add_assign(&mut self, o: Self) {
        self.muls += o.muls;
        self.adds += o.adds;
    }
}

/// How the per-trajectory de-rotation is carried out.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DerotationPath {
    /// Multiply the time samples by e^{-j phi_k}, then FFT.
    #[default]
    TimeDomain,
    /// Multiply the FFT of the samples by the circulant matrix of e^{-j phi_k}.
    Circulant,
}

/// Precomputed de-rotation for every trajectory of a codebook.
#[derive(Clone, Debug)]
pub struct Derotator {
    n: usize,
    k: usize,
    rot: Vec<C64>,
    circ: Vec<C64>,
    fft: Fft,
}

impl Derotator {
    pub fn new(codebook: &Codebook) -> Result<Self> {
        let n = codebook.n_fft();
        let fft = Fft::new(n)?;
        let k = codebook.len();
        let mut rot = Vec::with_capacity(k * n);
        let mut circ = Vec::with_capacity(k * n);
        for i in 0..k {
            let r = codebook.derotation(i);
            // Ytilde(a) = sum_b c((a - b) mod N) Y(b) with c = fft(r) / sqrt(N).
            let s = 1.0 / (n as f64).sqrt();
            circ.extend(fft.forward(&r).into_iter().map(|x| x * s));
            rot.extend(r);
        }
        Ok(Self { n, k, rot, circ, fft })
    }

    pub fn len(&self) -> usize {
        self.k
    }

    pub fn is_empty(&self) -> bool {
        self.k == 0
    }

    pub fn n_fft(&self) -> usize {
        self.n
    }

    pub fn fft(&self) -> &Fft {
        &self.fft
    }

    /// Time-domain path: `out = FFT(e^{-j phi_k} y)`.
    pub fn derotate_time(&self, k: usize, y: &[C64], out: &mut [C64], ops: &mut OpCounts) {
        let r = &self.rot[k * self.n..(k + 1) * self.n];
        out.iter_mut().zip(y.iter().zip(r)).for_each(|(o, (a, b))| *o = a * b);
        self.fft.forward_in_place(out);
        ops.muls += self.n as u64;
        ops.fft(self.n);
    }

    /// Frequency-domain path: circulant product applied to `big_y = FFT(y)`.
    pub fn derotate_freq(&self, k: usize, big_y: &[C64], out: &mut [C64], ops: &mut OpCounts) {
        let n = self.n;
        let c = &self.circ[k * n..(k + 1) * n];
        for (a, o) in out.iter_mut().enumerate() {
            let mut acc = ZERO;
            for (b, y) in big_y.iter().enumerate() {
                acc += c[(a + n - b) % n] * y;
            }
            *o = acc;
        }
        ops.matvec(n, n);
    }
}

/// De-rotated spectra of one received symbol under every trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct DerotatedGrid {
    n: usize,
    bins: Vec<C64>,
}

impl DerotatedGrid {
    pub fn len(&self) -> usize {
        self.bins.len() / self.n
    }
    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }
    pub fn candidate(&self, k: usize) -> &[C64] {
        &self.bins[k * self.n..(k + 1) * self.n]
    }
}

/// `y` is the CP-stripped time-domain symbol.
pub fn derotate_all(y: &[C64], derotator: &Derotator, path: DerotationPath) -> Result<DerotatedGrid> {
    let n = derotator.n;
    if y.len() != n {
        return Err(Error::Framing(format!("{} samples for FFT size {n}", y.len())));
    }
    let mut bins = vec![ZERO; derotator.k * n];
    let mut ops = OpCounts::default();
    let big_y = match path {
        DerotationPath::Circulant => Some(derotator.fft.forward(y)),
        DerotationPath::TimeDomain => None,
    };
    for (k, out) in bins.chunks_exact_mut(n).enumerate() {
        match &big_y {
            Some(yf) => derotator.derotate_freq(k, yf, out, &mut ops),
            None => derotator.derotate_time(k, y, out, &mut ops),
        }
    }
    Ok(DerotatedGrid { n, bins })
}

/// Least-squares complex gain over `bins`; bins whose channel is below
/// `CHANNEL_FLOOR` are skipped.
pub fn cpe_gain(derotated: &[C64], channel: &[C64], refs: &[C64], bins: &[usize]) -> Result<C64> {
    let mut num = ZERO;
    let mut den = 0.0;
    for &b in bins {
        if channel[b].norm() < CHANNEL_FLOOR {
            continue;
        }
        num += refs[b].conj() * derotated[b] / channel[b];
        den += refs[b].norm_sqr();
    }
    if den == 0.0 {
        return Err(Error::Estimation("no usable bins for the gain estimate".into()));
    }
    Ok(num / den)
}

/// `out[b] = derotated[b] / (eta channel[b])`, zero on faded bins.
pub fn equalize(derotated: &[C64], channel: &[C64], eta: C64, out: &mut [C64]) {
    let inv = if eta.norm_sqr() > 0.0 { eta.inv() } else { ZERO };
    for ((o, &y), &h) in out.iter_mut().zip(derotated).zip(channel) {
        *o = if h.norm() < CHANNEL_FLOOR { ZERO } else { y * inv / h };
    }
}

/// Squared distance between equalised symbols and references over `bins`.
pub fn symbol_cost(equalized: &[C64], channel: &[C64], refs: &[C64], bins: &[usize]) -> f64 {
    bins.iter()
        .filter(|&&b| channel[b].norm() >= CHANNEL_FLOOR)
        .map(|&b| (equalized[b] - refs[b]).norm_sqr())
        .sum()
}

/// Index of the smallest cost; ties go to the smaller index, NaN never wins.
pub fn select_trajectory(costs: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, &c) in costs.iter().enumerate() {
        if c < best.1 {
            best = (k, c);
        }
    }
    if !best.1.is_finite() {
        best.1 = costs.first().copied().unwrap_or(f64::INFINITY);
    }
    best
}

/// Per-bin LS channel estimates at `bins`, in the order given.
pub fn ls_channel(derotated: &[C64], refs: &[C64], bins: &[usize]) -> Result<Vec<C64>> {
    bins.iter()
        .map(|&b| {
            if refs[b].norm_sqr() == 0.0 {
                config(format!("reference symbol at bin {b} is zero"))
            } else {
                Ok(derotated[b] / refs[b])
            }
        })
        .collect()
}

/// Linear MMSE gains `R_ho (R_oo + lambda I)^{-1}` stored row-major.
#[derive(Clone, Debug)]
struct Gain {
    rows: usize,
    cols: usize,
    g: Vec<C64>,
}

impl Gain {
    fn new(params: &ChannelParams, out: &[GridPoint], obs: &[GridPoint], loading: f64) -> Result<Self> {
        let r_oo = corr_matrix(params, obs, obs) + DMatrix::identity(obs.len(), obs.len()) * C64::new(loading, 0.0);
        let r_ho = corr_matrix(params, out, obs);
        let chol = r_oo
            .cholesky()
            .ok_or_else(|| Error::Internal("loaded correlation matrix is not positive definite".into()))?;
        // (R_oo + lambda I) is Hermitian, so G^H = (R_oo + lambda I)^{-1} R_ho^H.
        let gh = chol.solve(&r_ho.adjoint());
        let g = gh.adjoint();
        let mut flat = Vec::with_capacity(g.nrows() * g.ncols());
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                flat.push(g[(i, j)]);
            }
        }
        Ok(Self {
            rows: g.nrows(),
            cols: g.ncols(),
            g: flat,
        })
    }

    /// `out = G[:, col0..col0 + x.len()] x`.
    fn apply_block(&self, col0: usize, x: &[C64], out: &mut [C64], ops: &mut OpCounts) {
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.g[i * self.cols + col0..i * self.cols + col0 + x.len()];
            *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
        ops.matvec(self.rows, x.len());
    }
}

/// Which observations feed the MMSE estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MmseMode {
    PilotOnly,
    FullGrid,
    /// Current symbol plus up to `d - 1` earlier ones.
    MultiSymbol(usize),
}

/// MMSE channel estimators for one channel model and noise level.
#[derive(Clone, Debug)]
pub struct MmseEstimator {
    n: usize,
    pilot: Gain,
    /// `multi[d - 1]` maps d stacked full-grid LS vectors, current symbol first.
    multi: Vec<Gain>,
}

impl MmseEstimator {
    /// `loading` is sigma_w^2 / E_s; `depth` is the largest number of stacked symbols.
    pub fn new(params: &ChannelParams, ofdm: &OfdmParams, loading: f64, depth: usize) -> Result<Self> {
        if depth == 0 {
            return config("estimator depth must be >= 1");
        }
        if ofdm.n_fft != params.n_fft {
            return config("channel and OFDM parameters disagree on n_fft");
        }
        let lam = loading.max(MIN_LOADING);
        let all: Vec<usize> = (0..ofdm.n_fft).collect();
        let cur = stacked_points(1, &all);
        let pilot = Gain::new(params, &cur, &stacked_points(1, &ofdm.pilot_indices), lam)?;
        let multi = (1..=depth)
            .map(|d| Gain::new(params, &cur, &stacked_points(d, &all), lam))
            .collect::<Result<_>>()?;
        Ok(Self {
            n: ofdm.n_fft,
            pilot,
            multi,
        })
    }

    pub fn depth(&self) -> usize {
        self.multi.len()
    }

    pub fn pilot_only(&self, ls_pilots: &[C64], out: &mut [C64], ops: &mut OpCounts) {
        self.pilot.apply_block(0, ls_pilots, out, ops);
    }

    /// Contribution of the current symbol's LS vector when `d` symbols are stacked.
    pub fn current(&self, d: usize, ls: &[C64], out: &mut [C64], ops: &mut OpCounts) {
        self.multi[d - 1].apply_block(0, ls, out, ops);
    }

    /// Contribution of earlier LS vectors, `past[0]` being the previous symbol.
    pub fn history(&self, past: &[&[C64]], ops: &mut OpCounts) -> Vec<C64> {
        let d = past.len() + 1;
        let mut acc = vec![ZERO; self.n];
        let mut tmp = vec![ZERO; self.n];
        for (lag, ls) in past.iter().enumerate() {
            self.multi[d - 1].apply_block((lag + 1) * self.n, ls, &mut tmp, ops);
            acc.iter_mut().zip(&tmp).for_each(|(a, b)| *a += b);
            ops.adds += self.n as u64;
        }
        acc
    }

    /// Single-call interface for the three estimator variants.
    pub fn estimate(&self, ls: &[C64], mode: MmseMode, past: &[&[C64]]) -> Result<Vec<C64>> {
        let mut ops = OpCounts::default();
        let mut out = vec![ZERO; self.n];
        match mode {
            MmseMode::PilotOnly => {
                if ls.len() != self.pilot.cols {
                    return Err(Error::Framing("pilot LS vector has the wrong length".into()));
                }
                self.pilot_only(ls, &mut out, &mut ops);
            }
            MmseMode::FullGrid => self.current(1, ls, &mut out, &mut ops),
            MmseMode::MultiSymbol(d) => {
                if d == 0 || d > self.depth() || past.len() + 1 < d {
                    return config(format!("cannot stack {d} symbols"));
                }
                self.current(d, ls, &mut out, &mut ops);
                let h = self.history(&past[..d - 1], &mut ops);
                out.iter_mut().zip(h).for_each(|(a, b)| *a += b);
            }
        }
        Ok(out)
    }
}

/// Outcome of the best-match search for one symbol.
#[derive(Clone, Debug, PartialEq)]
pub struct SelectionResult {
    pub k_star: usize,
    pub eta: C64,
    /// Equalised spectrum, all N bins.
    pub symbols: Vec<C64>,
    pub channel_est: Option<Vec<C64>>,
    /// Full-grid LS estimate of the winner, kept for multi-symbol history.
    pub ls: Option<Vec<C64>>,
    pub cost_min: f64,
    pub cost_max: f64,
}

/// Receiver settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReceiverConfig {
    /// Decoder feedback iterations after the pilot-only pass.
    pub n_iters: usize,
    /// Symbols stacked by the multi-symbol estimator in feedback passes.
    pub depth: usize,
    pub path: DerotationPath,
    /// Rotate earlier symbols' contribution onto the current symbol's phase
    /// before adding it to the multi-symbol estimate.
    pub align_history: bool,
}

impl Default for ReceiverConfig {
    fn default() -> Self {
        Self {
            n_iters: 2,
            depth: 3,
            path: DerotationPath::TimeDomain,
            align_history: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymbolDiag {
    pub k_star: usize,
    pub eta: C64,
    pub cost_min: f64,
    pub cost_max: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameOutput {
    /// Decoded information bits (hard decisions when uncoded).
    pub info_bits: Vec<u8>,
    /// Final equalised spectra.
    pub symbols: Vec<Vec<C64>>,
    /// Channel estimates of the final pass, when estimating.
    pub channel_est: Option<Vec<Vec<C64>>>,
    /// `diagnostics[pass][symbol]`.
    pub diagnostics: Vec<Vec<SymbolDiag>>,
}

type Candidate = (usize, f64, C64, Vec<C64>, Vec<C64>, Vec<C64>);

enum Channel<'a> {
    Known(&'a [C64]),
    Pilot,
    Full { d: usize, past: Option<Vec<C64>> },
}

/// The best-match receiver for one frame layout and codebook.
#[derive(Clone, Debug)]
pub struct Receiver {
    layout: FrameLayout,
    codebook: Codebook,
    derot: Derotator,
    estimator: Option<MmseEstimator>,
    cfg: ReceiverConfig,
    all_bins: Vec<usize>,
}

impl Receiver {
    /// `estimator` is None for a receiver that is handed the true channel.
    pub fn new(
        layout: FrameLayout,
        codebook: Codebook,
        estimator: Option<MmseEstimator>,
        cfg: ReceiverConfig,
    ) -> Result<Self> {
        if codebook.n_fft() != layout.ofdm.n_fft {
            return config("codebook and OFDM parameters disagree on n_fft");
        }
        if cfg.depth == 0 {
            return config("depth must be >= 1");
        }
        if let Some(e) = &estimator {
            if e.depth() < cfg.depth {
                return config("estimator was built for fewer stacked symbols than requested");
            }
        }
        let derot = Derotator::new(&codebook)?;
        let all_bins = (0..layout.ofdm.n_fft).collect();
        Ok(Self {
            layout,
            codebook,
            derot,
            estimator,
            cfg,
            all_bins,
        })
    }

    pub fn codebook(&self) -> &Codebook {
        &self.codebook
    }

    pub fn layout(&self) -> &FrameLayout {
        &self.layout
    }

    pub fn config(&self) -> &ReceiverConfig {
        &self.cfg
    }

    pub fn estimates_channel(&self) -> bool {
        self.estimator.is_some()
    }

    fn pilot_refs(&self) -> Vec<C64> {
        let o = &self.layout.ofdm;
        let mut r = vec![ZERO; o.n_fft];
        for &p in &o.pilot_indices {
            r[p] = o.pilot_value;
        }
        r
    }

    /// Search all trajectories for one CP-stripped symbol `y`.
    fn select(
        &self,
        y: &[C64],
        refs: &[C64],
        bins: &[usize],
        chan: &Channel<'_>,
        ops: &mut OpCounts,
    ) -> Result<SelectionResult> {
        let n = self.layout.ofdm.n_fft;
        let pilots = &self.layout.ofdm.pilot_indices;
        let big_y = match self.cfg.path {
            DerotationPath::Circulant => {
                ops.fft(n);
                Some(self.derot.fft.forward(y))
            }
            DerotationPath::TimeDomain => None,
        };
        let mut yt = vec![ZERO; n];
        let mut h = vec![ZERO; n];
        let mut eq = vec![ZERO; n];
        let mut ls = Vec::new();
        // (k, cost, eta, equalised, channel, LS)
        let mut best: Option<Candidate> = None;
        let (mut cmin, mut cmax) = (f64::INFINITY, f64::NEG_INFINITY);
        for k in 0..self.derot.len() {
            match &big_y {
                Some(yf) => self.derot.derotate_freq(k, yf, &mut yt, ops),
                None => self.derot.derotate_time(k, y, &mut yt, ops),
            }
            let hk: &[C64] = match chan {
                Channel::Known(hk) => hk,
                Channel::Pilot => {
                    let est = self.estimator.as_ref().expect("pilot estimate needs an estimator");
                    ls = ls_channel(&yt, refs, pilots)?;
                    ops.muls += pilots.len() as u64;
                    est.pilot_only(&ls, &mut h, ops);
                    &h
                }
                Channel::Full { d, past } => {
                    let est = self.estimator.as_ref().expect("full estimate needs an estimator");
                    ls = ls_channel(&yt, refs, &self.all_bins)?;
                    ops.muls += n as u64;
                    est.current(*d, &ls, &mut h, ops);
                    if let Some(p) = past {
                        let rot = if self.cfg.align_history {
                            let c: C64 = p.iter().zip(&h).map(|(a, b)| a.conj() * b).sum();
                            ops.muls += n as u64;
                            ops.adds += n as u64;
                            if c.norm() > 0.0 {
                                c / c.norm()
                            } else {
                                C64::new(1.0, 0.0)
                            }
                        } else {
                            C64::new(1.0, 0.0)
                        };
                        h.iter_mut().zip(p).for_each(|(a, b)| *a += rot * b);
                        ops.muls += n as u64;
                        ops.adds += n as u64;
                    }
                    &h
                }
            };
            let eta = cpe_gain(&yt, hk, refs, bins)?;
            ops.muls += 3 * bins.len() as u64;
            ops.adds += 2 * bins.len() as u64;
            equalize(&yt, hk, eta, &mut eq);
            ops.muls += n as u64 + 1;
            let cost = symbol_cost(&eq, hk, refs, bins);
            ops.muls += bins.len() as u64;
            ops.adds += 2 * bins.len() as u64;
            let cost = if cost.is_nan() { f64::INFINITY } else { cost };
            cmin = cmin.min(cost);
            cmax = cmax.max(cost);
            if best.as_ref().is_none_or(|b| cost < b.1) {
                best = Some((k, cost, eta, eq.clone(), hk.to_vec(), ls.clone()));
            }
        }
        let (k_star, _, eta, symbols, hk, ls) = best.ok_or_else(|| Error::Estimation("codebook is empty".into()))?;
        let estimating = !matches!(chan, Channel::Known(_));
        let full = matches!(chan, Channel::Full { .. });
        Ok(SelectionResult {
            k_star,
            eta,
            symbols,
            channel_est: estimating.then_some(hk),
            ls: full.then_some(ls),
            cost_min: cmin,
            cost_max: cmax,
        })
    }

    /// Best-match search on pilots with the channel known.
    pub fn receive_symbol_known(&self, rx: &[C64], channel: &[C64]) -> Result<SelectionResult> {
        let y = strip_cp(rx, &self.layout.ofdm)?;
        if channel.len() != self.layout.ofdm.n_fft {
            return Err(Error::Framing("channel length does not match n_fft".into()));
        }
        let refs = self.pilot_refs();
        let mut ops = OpCounts::default();
        self.select(
            y,
            &refs,
            &self.layout.ofdm.pilot_indices,
            &Channel::Known(channel),
            &mut ops,
        )
    }

    /// Full receiver on one frame of CP-carrying symbols. `known` supplies the
    /// true channel per symbol; otherwise the MMSE estimator is used.
    pub fn receive_frame(
        &self,
        rx: &[Vec<C64>],
        known: Option<&[Vec<C64>]>,
        ops: &mut OpCounts,
    ) -> Result<FrameOutput> {
        let layout = &self.layout;
        let o = &layout.ofdm;
        if rx.len() != layout.n_symbols {
            return Err(Error::Framing(format!(
                "frame has {} symbols, layout expects {}",
                rx.len(),
                layout.n_symbols
            )));
        }
        if known.is_none() && self.estimator.is_none() {
            return config("receiver has neither a known channel nor an estimator");
        }
        if let Some(k) = known {
            if k.len() != rx.len() {
                return Err(Error::Framing("known channel does not cover the frame".into()));
            }
        }
        let bodies: Vec<&[C64]> = rx.iter().map(|r| strip_cp(r, o)).collect::<Result<_>>()?;
        let pilot_refs = self.pilot_refs();
        let mut diagnostics = Vec::with_capacity(self.cfg.n_iters + 1);

        let mut results = Vec::with_capacity(rx.len());
        for (m, y) in bodies.iter().enumerate() {
            let chan = match known {
                Some(h) => Channel::Known(&h[m]),
                None => Channel::Pilot,
            };
            results.push(self.select(y, &pilot_refs, &o.pilot_indices, &chan, ops)?);
        }
        diagnostics.push(diag(&results));
        let mut info = self.decide(&results)?;

        for _ in 0..self.cfg.n_iters {
            let refs = layout.modulate_bits(&layout.encode(&info)?)?;
            let mut next: Vec<SelectionResult> = Vec::with_capacity(rx.len());
            for (m, y) in bodies.iter().enumerate() {
                let chan = match known {
                    Some(h) => Channel::Known(&h[m]),
                    None => {
                        let d = self.cfg.depth.min(m + 1);
                        let past = (d > 1).then(|| {
                            let prev: Vec<&[C64]> = (1..d)
                                .map(|lag| next[m - lag].ls.as_deref().expect("full-grid pass keeps LS"))
                                .collect();
                            self.estimator.as_ref().expect("checked above").history(&prev, ops)
                        });
                        Channel::Full { d, past }
                    }
                };
                next.push(self.select(y, &refs[m], &self.all_bins, &chan, ops)?);
            }
            diagnostics.push(diag(&next));
            info = self.decide(&next)?;
            results = next;
        }

        let channel_est = results
            .iter()
            .map(|r| r.channel_est.clone())
            .collect::<Option<Vec<_>>>();
        Ok(FrameOutput {
            info_bits: info,
            symbols: results.into_iter().map(|r| r.symbols).collect(),
            channel_est,
            diagnostics,
        })
    }

    /// Hard decisions on the data bins, then decoding when the frame is coded.
    fn decide(&self, results: &[SelectionResult]) -> Result<Vec<u8>> {
        let o = &self.layout.ofdm;
        let mut bits = Vec::with_capacity(self.layout.coded_len());
        for r in results {
            bits.extend(qam_hard_demap(&o.extract_data(&r.symbols), o.bits_per_symbol)?);
        }
        if !self.layout.coded {
            return Ok(bits);
        }
        let coded = self.layout.interleaver()?.deinterleave(&bits)?;
        let n_code = 2 * (self.layout.info_len() + crate::coding::TAIL_BITS);
        viterbi_decode(&coded[..n_code])
    }
}

fn diag(results: &[SelectionResult]) -> Vec<SymbolDiag> {
    results
        .iter()
        .map(|r| SymbolDiag {
            k_star: r.k_star,
            eta: r.eta,
            cost_min: r.cost_min,
            cost_max: r.cost_max,
        })
        .collect()
}
