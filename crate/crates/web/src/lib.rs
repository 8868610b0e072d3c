//! Browser demo. Three operations, each returning JSON:
//!
//! * `phn_trace`: one symbol of Wiener phase noise and the codebook
//!   trajectory that fits it best;
//! * `mse_cell`: analytic and simulated fit error for one (Q, J);
//! * `constellation`: equalised 16-QAM points with CPE-only and best-match
//!   correction on an AWGN link.
//!
//! The plain Rust functions are usable (and tested) natively; the
//! `#[wasm_bindgen]` wrappers only serialise.

use phn_codebook::codebook::{analytic_mse, best_match, simulated_mse, Codebook, CodebookDesign};
use phn_codebook::compensator::{Receiver, ReceiverConfig};
use phn_codebook::numerics::{Fft, RngStream};
use phn_codebook::phn::{gen_wiener, sigma_eps_sq, WienerPhnParams};
use phn_codebook::phy::{apply_link, EbConvention, Frame, FrameLayout, NoiseModel, OfdmParams};
use phn_codebook::{Error, Result, C64};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const N_FFT: usize = 64;
const N_CP: usize = 16;
/// Largest codebook the page will build; keeps each call well under a second.
pub const MAX_K: usize = 4096;
pub const MAX_REALIZATIONS: usize = 20_000;
pub const MAX_SYMBOLS: usize = 200;

fn codebook(q: usize, j: usize, beta_t: f64) -> Result<Codebook> {
    let design = CodebookDesign::new(N_FFT, j, q, sigma_eps_sq(beta_t, N_FFT))?;
    match design.codebook_size() {
        Some(k) if k <= MAX_K => Codebook::build(design),
        _ => Err(Error::Domain(format!(
            "Q = {q}, J = {j} gives more than {MAX_K} trajectories"
        ))),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceView {
    pub theta: Vec<f64>,
    /// Best trajectory plus its fitted offset.
    pub fit: Vec<f64>,
    pub k_star: usize,
    pub k: usize,
    /// Mean phase, the CPE-only estimate.
    pub cpe: f64,
    pub mse_fit: f64,
    pub mse_cpe: f64,
}

pub fn trace_view(beta_t: f64, q: usize, j: usize, seed: u64) -> Result<TraceView> {
    let cb = codebook(q, j, beta_t)?;
    let mut rng = RngStream::new(seed, 0).rng();
    let trace = gen_wiener(&WienerPhnParams::new(beta_t, N_FFT, N_CP)?, 1, &mut rng)?;
    let theta = trace.body(0).to_vec();
    let (k_star, offset, rss) = best_match(&cb, &theta)?;
    let fit = cb.trajectory(k_star).iter().map(|t| t + offset).collect();
    let n = theta.len() as f64;
    let cpe = theta.iter().sum::<f64>() / n;
    let mse_cpe = theta.iter().map(|t| (t - cpe).powi(2)).sum::<f64>() / n;
    Ok(TraceView {
        theta,
        fit,
        k_star,
        k: cb.len(),
        cpe,
        mse_fit: rss / n,
        mse_cpe,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct MseCell {
    pub q: usize,
    pub j: usize,
    pub k: usize,
    /// Both normalised by the CPE-only error.
    pub analytic: f64,
    pub simulated: f64,
    pub simulated_se: f64,
    pub realizations: usize,
}

pub fn mse_cell(q: usize, j: usize, beta_t: f64, realizations: usize, seed: u64) -> Result<MseCell> {
    if realizations == 0 || realizations > MAX_REALIZATIONS {
        return Err(Error::Domain(format!("realisations must be in 1..={MAX_REALIZATIONS}")));
    }
    let cb = codebook(q, j, beta_t)?;
    let d = cb.design();
    let est = simulated_mse(&cb, realizations, RngStream::new(seed, 1))?;
    Ok(MseCell {
        q,
        j,
        k: cb.len(),
        analytic: d.normalize(analytic_mse(d)),
        simulated: d.normalize(est.cv_mean),
        simulated_se: d.normalize(est.cv_std_err),
        realizations,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstellationView {
    /// Equalised data symbols as [re, im].
    pub cpe_only: Vec<[f64; 2]>,
    pub best_match: Vec<[f64; 2]>,
    /// Error vector magnitude against the sent symbols, in dB.
    pub evm_cpe_db: f64,
    pub evm_best_db: f64,
    pub k: usize,
}

pub fn constellation(
    beta_t: f64,
    ebn0_db: f64,
    q: usize,
    j: usize,
    n_symbols: usize,
    seed: u64,
) -> Result<ConstellationView> {
    if n_symbols == 0 || n_symbols > MAX_SYMBOLS {
        return Err(Error::Domain(format!("symbols must be in 1..={MAX_SYMBOLS}")));
    }
    let ofdm = OfdmParams::new(N_FFT, N_CP, 8, 4)?;
    let layout = FrameLayout::new(ofdm.clone(), n_symbols, false)?;
    let fft = Fft::new(N_FFT)?;
    let stream = RngStream::new(seed, 2);
    let mut rng = stream.rng();
    let frame = Frame::random(&layout, &fft, &mut rng)?;
    let phn = gen_wiener(&WienerPhnParams::new(beta_t, N_FFT, N_CP)?, n_symbols, &mut rng)?;
    let noise = NoiseModel::from_ebn0(ebn0_db, &ofdm, 1.0, EbConvention::WithPilots)?;
    let rx = frame
        .samples
        .iter()
        .enumerate()
        .map(|(m, s)| apply_link(s, None, phn.symbol(m), &noise, &fft, &mut rng))
        .collect::<Result<Vec<_>>>()?;

    let ones = vec![C64::new(1.0, 0.0); N_FFT];
    let cfg = ReceiverConfig {
        n_iters: 0,
        ..ReceiverConfig::default()
    };
    let run = |cb: Codebook| -> Result<(Vec<[f64; 2]>, f64)> {
        let receiver = Receiver::new(layout.clone(), cb, None, cfg)?;
        let (mut pts, mut err, mut pow) = (Vec::new(), 0.0, 0.0);
        for (m, y) in rx.iter().enumerate() {
            let sel = receiver.receive_symbol_known(y, &ones)?;
            let got = ofdm.extract_data(&sel.symbols);
            let sent = ofdm.extract_data(&frame.grid[m]);
            for (g, s) in got.iter().zip(&sent) {
                err += (g - s).norm_sqr();
                pow += s.norm_sqr();
                pts.push([g.re, g.im]);
            }
        }
        Ok((pts, 10.0 * (err / pow).log10()))
    };
    let cpe_cb = codebook(1, 1, beta_t)?;
    let best_cb = codebook(q, j, beta_t)?;
    let k = best_cb.len();
    let (cpe_only, evm_cpe_db) = run(cpe_cb)?;
    let (best_match, evm_best_db) = run(best_cb)?;
    Ok(ConstellationView {
        cpe_only,
        best_match,
        evm_cpe_db,
        evm_best_db,
        k,
    })
}

fn to_js<T: Serialize>(r: Result<T>) -> std::result::Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn phn_trace(beta_t: f64, q: usize, j: usize, seed: u32) -> std::result::Result<String, JsError> {
    to_js(trace_view(beta_t, q, j, seed.into()))
}

#[wasm_bindgen(js_name = mseCell)]
pub fn mse_cell_js(
    q: usize,
    j: usize,
    beta_t: f64,
    realizations: usize,
    seed: u32,
) -> std::result::Result<String, JsError> {
    to_js(mse_cell(q, j, beta_t, realizations, seed.into()))
}

#[wasm_bindgen(js_name = constellation)]
pub fn constellation_js(
    beta_t: f64,
    ebn0_db: f64,
    q: usize,
    j: usize,
    n_symbols: usize,
    seed: u32,
) -> std::result::Result<String, JsError> {
    to_js(constellation(beta_t, ebn0_db, q, j, n_symbols, seed.into()))
}
