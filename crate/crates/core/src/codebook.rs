//! Piecewise-constant trajectory codebooks built from equiprobable Gaussian
//! quantisation of segment-to-segment phase steps, plus their MSE.
//!
//! A symbol of N samples is cut into J segments. Every trajectory is 0 on the
//! first segment and moves by one of Q quantisation points at each later
//! segment boundary, giving K = Q^(J-1) trajectories.
//!
//! When J does not divide N the first J-1 segments have floor(N/J) samples and
//! the last one takes the remainder. The quantiser is then designed for a
//! segment of ceil(N/J) samples.

use std::f64::consts::SQRT_2;
use std::io::{BufRead, Write};

use num_complex::Complex64;

use crate::error::{config, Error, Result};
use crate::numerics::{erf_inv, erfc, norm_pdf, RngStream};
use crate::phn::WienerPhnParams;

/// Largest codebook `Codebook::build` accepts.
pub const DEFAULT_CODEBOOK_CAP: usize = 1_000_000;

/// Variance of the step between the means of two adjacent L-sample segments
/// of a Wiener walk.
pub fn step_variance(sigma_eps_sq: f64, seg_len: f64) -> f64 {
    (2.0 * seg_len * seg_len + 1.0) / (3.0 * seg_len) * sigma_eps_sq
}

/// Variance of the step from the last sample of one segment to the mean of the
/// next L-sample segment.
pub fn anchored_step_variance(sigma_eps_sq: f64, seg_len: f64) -> f64 {
    (seg_len + 1.0) * (2.0 * seg_len + 1.0) / (6.0 * seg_len) * sigma_eps_sq
}

/// Segment lengths for J segments over N samples.
pub fn segment_lengths(n_fft: usize, n_segments: usize) -> Vec<usize> {
    let base = n_fft / n_segments;
    let mut lens = vec![base; n_segments];
    lens[n_segments - 1] = n_fft - base * (n_segments - 1);
    lens
}

/// The Q-1 finite edges of Q equiprobable regions for N(0, sigma_x^2), ascending.
pub fn region_boundaries(q: usize, sigma_x: f64) -> Result<Vec<f64>> {
    if q == 0 {
        return config("number of regions must be >= 1");
    }
    if !(sigma_x >= 0.0) {
        return config(format!("sigma_x must be >= 0, got {sigma_x}"));
    }
    let mut upper = Vec::with_capacity(q / 2);
    for i in (q / 2 + 1)..q {
        // Upper half only; the lower half mirrors it exactly.
        let p = 2.0 * i as f64 / q as f64 - 1.0;
        upper.push(SQRT_2 * sigma_x * erf_inv(p)?);
    }
    let mut b: Vec<f64> = upper.iter().rev().map(|x| -x).collect();
    if q.is_multiple_of(2) {
        b.push(0.0);
    }
    b.extend(upper);
    Ok(b)
}

/// Probability of (a, b) under N(0, 1), accurate in either tail.
fn std_mass(a: f64, b: f64) -> f64 {
    let c = |x: f64| 0.5 * erfc(x / SQRT_2);
    if a >= 0.0 {
        c(a) - c(b)
    } else if b <= 0.0 {
        c(-b) - c(-a)
    } else {
        1.0 - c(-a) - c(b)
    }
}

fn region(boundaries: &[f64], i: usize) -> (f64, f64) {
    let a = if i == 0 { f64::NEG_INFINITY } else { boundaries[i - 1] };
    let b = boundaries.get(i).copied().unwrap_or(f64::INFINITY);
    (a, b)
}

/// Conditional mean of N(0, sigma_x^2) within each region.
pub fn quantization_points(boundaries: &[f64], sigma_x: f64) -> Vec<f64> {
    let q = boundaries.len() + 1;
    let mut pts = vec![0.0; q];
    if sigma_x == 0.0 {
        return pts;
    }
    for i in q.div_ceil(2)..q {
        let (a, b) = region(boundaries, i);
        let (u, v) = (a / sigma_x, b / sigma_x);
        let x = sigma_x * (norm_pdf(u) - norm_pdf(v)) / std_mass(u, v);
        pts[i] = x;
        pts[q - 1 - i] = -x;
    }
    pts
}

/// Mass of N(0, sigma^2) in each region. With sigma = 0 all mass sits in the
/// region holding 0 (the upper one when 0 is an edge).
pub fn region_probabilities(boundaries: &[f64], sigma: f64) -> Vec<f64> {
    let q = boundaries.len() + 1;
    if sigma == 0.0 {
        let hit = zero_region(boundaries);
        return (0..q).map(|i| if i == hit { 1.0 } else { 0.0 }).collect();
    }
    (0..q)
        .map(|i| {
            let (a, b) = region(boundaries, i);
            std_mass(a / sigma, b / sigma)
        })
        .collect()
}

fn zero_region(boundaries: &[f64]) -> usize {
    boundaries.iter().take_while(|&&b| b <= 0.0).count()
}

/// E[(Y - q(Y))^2] for Y ~ N(0, sigma^2) through the quantiser (boundaries, points).
pub fn quantizer_mse(boundaries: &[f64], points: &[f64], sigma: f64) -> f64 {
    assert_eq!(points.len(), boundaries.len() + 1);
    if sigma == 0.0 {
        let i = zero_region(boundaries);
        return points[i] * points[i];
    }
    let xphi = |x: f64| if x.is_finite() { x * norm_pdf(x) } else { 0.0 };
    points
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let (a, b) = region(boundaries, i);
            let (u, v) = (a / sigma, b / sigma);
            let p = std_mass(u, v);
            let m1 = sigma * (norm_pdf(u) - norm_pdf(v));
            let m2 = sigma * sigma * (p + xphi(u) - xphi(v));
            m2 - 2.0 * x * m1 + x * x * p
        })
        .sum::<f64>()
        .max(0.0)
}

/// Quantiser and segmentation for one (N, J, Q, sigma_eps^2) choice.
#[derive(Clone, Debug, PartialEq)]
pub struct CodebookDesign {
    n_fft: usize,
    n_segments: usize,
    n_regions: usize,
    seg_lens: Vec<usize>,
    design_len: usize,
    sigma_eps_sq: f64,
    sigma_x_sq: f64,
    boundaries: Vec<f64>,
    points: Vec<f64>,
    probs: Vec<f64>,
}

impl CodebookDesign {
    pub fn new(n_fft: usize, n_segments: usize, n_regions: usize, sigma_eps_sq: f64) -> Result<Self> {
        if n_segments == 0 || n_segments > n_fft {
            return config(format!("need 1 <= J <= N, got J = {n_segments}, N = {n_fft}"));
        }
        if n_regions == 0 {
            return config("Q must be >= 1");
        }
        if !(sigma_eps_sq >= 0.0) || !sigma_eps_sq.is_finite() {
            return config(format!("sigma_eps^2 must be finite and >= 0, got {sigma_eps_sq}"));
        }
        let design_len = n_fft.div_ceil(n_segments);
        let sigma_x_sq = step_variance(sigma_eps_sq, design_len as f64);
        let sigma_x = sigma_x_sq.sqrt();
        let boundaries = region_boundaries(n_regions, sigma_x)?;
        let points = quantization_points(&boundaries, sigma_x);
        let probs = vec![1.0 / n_regions as f64; n_regions];
        Ok(Self {
            n_fft,
            n_segments,
            n_regions,
            seg_lens: segment_lengths(n_fft, n_segments),
            design_len,
            sigma_eps_sq,
            sigma_x_sq,
            boundaries,
            points,
            probs,
        })
    }

    pub fn for_wiener(params: &WienerPhnParams, n_segments: usize, n_regions: usize) -> Result<Self> {
        params.validate()?;
        Self::new(params.n_fft, n_segments, n_regions, params.sigma_eps_sq())
    }

    pub fn n_fft(&self) -> usize {
        self.n_fft
    }
    pub fn n_segments(&self) -> usize {
        self.n_segments
    }
    pub fn n_regions(&self) -> usize {
        self.n_regions
    }
    /// Nominal segment length N / J.
    pub fn seg_len(&self) -> f64 {
        self.n_fft as f64 / self.n_segments as f64
    }
    pub fn seg_lens(&self) -> &[usize] {
        &self.seg_lens
    }
    /// Segment length the quantiser is designed for.
    pub fn design_len(&self) -> usize {
        self.design_len
    }
    pub fn sigma_eps_sq(&self) -> f64 {
        self.sigma_eps_sq
    }
    pub fn sigma_x_sq(&self) -> f64 {
        self.sigma_x_sq
    }
    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }
    pub fn points(&self) -> &[f64] {
        &self.points
    }
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Q^(J-1), or None on overflow.
    pub fn codebook_size(&self) -> Option<usize> {
        u32::try_from(self.n_segments - 1)
            .ok()
            .and_then(|e| self.n_regions.checked_pow(e))
    }

    /// MSE of CPE-only correction, (N^2 - 1) sigma_eps^2 / 6.
    pub fn cpe_only_mse(&self) -> f64 {
        let n = self.n_fft as f64;
        (n * n - 1.0) / 6.0 * self.sigma_eps_sq
    }

    /// Divide a raw MSE by the CPE-only MSE. Zero phase noise maps to 0.
    pub fn normalize(&self, mse: f64) -> f64 {
        let d = self.cpe_only_mse();
        if d == 0.0 {
            0.0
        } else {
            mse / d
        }
    }
}

/// Quantisation error variance of the design's own step distribution.
pub fn quantization_error_variance(design: &CodebookDesign) -> f64 {
    quantizer_mse(design.boundaries(), design.points(), design.sigma_x_sq().sqrt())
}

/// Closed-form MSE in rad^2: within-segment spread plus quantisation error of
/// the J-1 anchored steps, each weighted by N/J samples.
pub fn analytic_mse(design: &CodebookDesign) -> f64 {
    let se = design.sigma_eps_sq();
    let spread: f64 = design
        .seg_lens()
        .iter()
        .map(|&l| ((l * l) as f64 - 1.0) / 6.0 * se)
        .sum();
    let sigma_y = anchored_step_variance(se, design.design_len() as f64).sqrt();
    let q = quantizer_mse(design.boundaries(), design.points(), sigma_y);
    spread + design.seg_len() * (design.n_segments() - 1) as f64 * q
}

/// The K trajectories of a design, stored as one level per segment.
#[derive(Clone, Debug, PartialEq)]
pub struct Codebook {
    design: CodebookDesign,
    levels: Vec<f64>,
    starts: Vec<usize>,
}

impl Codebook {
    pub fn build(design: CodebookDesign) -> Result<Self> {
        Self::build_with_cap(design, DEFAULT_CODEBOOK_CAP)
    }

    pub fn build_with_cap(design: CodebookDesign, cap: usize) -> Result<Self> {
        let k = match design.codebook_size() {
            Some(k) if k <= cap => k,
            _ => {
                return config(format!(
                    "codebook Q^(J-1) = {}^{} exceeds the cap of {cap}",
                    design.n_regions(),
                    design.n_segments() - 1
                ))
            }
        };
        let (q, j) = (design.n_regions(), design.n_segments());
        let mut levels = vec![0.0; k * j];
        let mut digits = vec![0usize; j];
        for row in levels.chunks_exact_mut(j) {
            for s in 1..j {
                row[s] = row[s - 1] + design.points()[digits[s]];
            }
            // Odometer increment: the last segment's step varies fastest.
            for s in (1..j).rev() {
                digits[s] += 1;
                if digits[s] < q {
                    break;
                }
                digits[s] = 0;
            }
        }
        let starts = segment_starts(&design);
        Ok(Self { design, levels, starts })
    }

    pub fn design(&self) -> &CodebookDesign {
        &self.design
    }

    pub fn len(&self) -> usize {
        self.levels.len() / self.design.n_segments()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn n_fft(&self) -> usize {
        self.design.n_fft()
    }

    /// Per-segment levels of trajectory `k`.
    pub fn levels(&self, k: usize) -> &[f64] {
        let j = self.design.n_segments();
        &self.levels[k * j..(k + 1) * j]
    }

    /// First sample of each segment.
    pub fn segment_starts(&self) -> &[usize] {
        &self.starts
    }

    /// Trajectory `k` expanded to N samples.
    pub fn trajectory(&self, k: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_fft());
        for (lev, &len) in self.levels(k).iter().zip(self.design.seg_lens()) {
            out.extend(std::iter::repeat_n(*lev, len));
        }
        out
    }

    /// e^{-j phi_k(n)} for trajectory `k`.
    pub fn derotation(&self, k: usize) -> Vec<Complex64> {
        self.trajectory(k)
            .into_iter()
            .map(|p| Complex64::from_polar(1.0, -p))
            .collect()
    }

    /// Index of the all-zero trajectory, which exists for odd Q or J = 1.
    pub fn zero_index(&self) -> Option<usize> {
        let (q, j) = (self.design.n_regions(), self.design.n_segments());
        if j == 1 {
            return Some(0);
        }
        if q % 2 == 0 {
            return None;
        }
        let mid = q / 2;
        Some((1..j).fold(0, |acc, _| acc * q + mid))
    }

    /// Text export: a header line, then K rows of N phases.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        let d = &self.design;
        writeln!(
            w,
            "# codebook Q={} J={} N={} sigma_eps_sq={:e} K={}",
            d.n_regions(),
            d.n_segments(),
            d.n_fft(),
            d.sigma_eps_sq(),
            self.len()
        )?;
        for k in 0..self.len() {
            let row: Vec<String> = self.trajectory(k).iter().map(|p| format!("{p:e}")).collect();
            writeln!(w, "{}", row.join(" "))?;
        }
        Ok(())
    }

    /// Read a table written by `write_text`. Rows must be piecewise constant
    /// over the segment layout named in the header.
    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Config("empty codebook file".into()))??;
        let field = |key: &str| -> Result<&str> {
            header
                .split_whitespace()
                .find_map(|t| t.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
                .ok_or_else(|| Error::Config(format!("codebook header lacks {key}")))
        };
        let parse_usize = |key: &str| -> Result<usize> {
            field(key)?
                .parse()
                .map_err(|_| Error::Config(format!("bad {key} in codebook header")))
        };
        let q = parse_usize("Q")?;
        let j = parse_usize("J")?;
        let n = parse_usize("N")?;
        let k = parse_usize("K")?;
        let se: f64 = field("sigma_eps_sq")?
            .parse()
            .map_err(|_| Error::Config("bad sigma_eps_sq in codebook header".into()))?;
        let design = CodebookDesign::new(n, j, q, se)?;
        let starts = segment_starts(&design);
        let mut levels = Vec::with_capacity(k * j);
        for (row_idx, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let phases: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Config(format!("row {row_idx}: {e}")))?;
            if phases.len() != n {
                return Err(Error::Framing(format!(
                    "row {row_idx} has {} phases, expected {n}",
                    phases.len()
                )));
            }
            for (s, &len) in design.seg_lens().iter().enumerate() {
                let seg = &phases[starts[s]..starts[s] + len];
                if seg.iter().any(|&p| p != seg[0]) {
                    return config(format!("row {row_idx} is not constant on segment {s}"));
                }
                levels.push(seg[0]);
            }
        }
        if levels.len() != k * j {
            return Err(Error::Framing(format!(
                "expected {k} trajectories, found {}",
                levels.len() / j
            )));
        }
        Ok(Self { design, levels, starts })
    }
}

/// Best trajectory for one symbol's phase samples with a free constant
/// offset. Returns `(k, offset, residual sum of squares)`; ties go to the
/// smaller index.
pub fn best_match(codebook: &Codebook, theta: &[f64]) -> Result<(usize, f64, f64)> {
    let n = codebook.n_fft();
    if theta.len() != n {
        return Err(Error::Framing(format!("{} phase samples for N = {n}", theta.len())));
    }
    let mut best = (0, 0.0, f64::INFINITY);
    for k in 0..codebook.len() {
        let traj = codebook.trajectory(k);
        let offset = theta.iter().zip(&traj).map(|(t, p)| t - p).sum::<f64>() / n as f64;
        let rss: f64 = theta.iter().zip(&traj).map(|(t, p)| (t - p - offset).powi(2)).sum();
        if rss < best.2 {
            best = (k, offset, rss);
        }
    }
    Ok(best)
}

fn segment_starts(design: &CodebookDesign) -> Vec<usize> {
    design
        .seg_lens()
        .iter()
        .scan(0, |acc, &l| {
            let s = *acc;
            *acc += l;
            Some(s)
        })
        .collect()
}

/// Monte-Carlo MSE of best-match fitting, in rad^2.
///
/// `cv_mean` uses the CPE-only fit of the same realisations, whose mean is
/// known exactly, as a control variate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MseEstimate {
    pub realizations: usize,
    pub mean: f64,
    pub std_err: f64,
    pub cv_mean: f64,
    pub cv_std_err: f64,
}

#[derive(Default, Clone, Copy)]
struct Moments {
    n: f64,
    m: f64,
    mm: f64,
    c: f64,
    cc: f64,
    mc: f64,
}

impl Moments {
    fn add(&mut self, o: &Moments) {
        self.n += o.n;
        self.m += o.m;
        self.mm += o.mm;
        self.c += o.c;
        self.cc += o.cc;
        self.mc += o.mc;
    }
}

const MSE_CHUNK: usize = 64;

pub fn simulated_mse(codebook: &Codebook, n_realizations: usize, rng: RngStream) -> Result<MseEstimate> {
    if n_realizations == 0 {
        return config("need at least one realisation");
    }
    let d = codebook.design();
    let (n, j) = (d.n_fft(), d.n_segments());
    let nf = n as f64;
    // Per-trajectory constant part of the fit cost.
    let offsets: Vec<f64> = (0..codebook.len())
        .map(|k| {
            let lv = codebook.levels(k);
            let (s1, s2) = lv
                .iter()
                .zip(d.seg_lens())
                .fold((0.0, 0.0), |(a, b), (&x, &l)| (a + l as f64 * x, b + l as f64 * x * x));
            s2 - s1 * s1 / nf
        })
        .collect();
    let sigma = d.sigma_eps_sq().sqrt();
    let starts = codebook.segment_starts();

    let chunk = |c: usize| -> Moments {
        use rand::Rng;
        use rand_distr::StandardNormal;
        let mut r = rng.substream(c as u64).rng();
        let count = MSE_CHUNK.min(n_realizations - c * MSE_CHUNK);
        let mut theta = vec![0.0; n];
        let mut seg = vec![0.0; j];
        let mut mom = Moments::default();
        for _ in 0..count {
            let mut acc = 0.0;
            for t in theta.iter_mut() {
                acc += sigma * r.sample::<f64, _>(StandardNormal);
                *t = acc;
            }
            let mean = theta.iter().sum::<f64>() / nf;
            let tt: f64 = theta.iter().map(|t| (t - mean) * (t - mean)).sum();
            for (s, (&st, &len)) in starts.iter().zip(d.seg_lens()).enumerate() {
                seg[s] = theta[st..st + len].iter().map(|t| t - mean).sum();
            }
            let mut best = f64::INFINITY;
            for (lv, &off) in codebook.levels.chunks_exact(j).zip(&offsets) {
                let dot: f64 = lv.iter().zip(&seg).map(|(a, b)| a * b).sum();
                let cost = off - 2.0 * dot;
                if cost < best {
                    best = cost;
                }
            }
            let m = (tt + best).max(0.0);
            mom.n += 1.0;
            mom.m += m;
            mom.mm += m * m;
            mom.c += tt;
            mom.cc += tt * tt;
            mom.mc += m * tt;
        }
        mom
    };

    let n_chunks = n_realizations.div_ceil(MSE_CHUNK);
    #[cfg(feature = "parallel")]
    let parts: Vec<Moments> = {
        use rayon::prelude::*;
        (0..n_chunks).into_par_iter().map(chunk).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<Moments> = (0..n_chunks).map(chunk).collect();

    let mut t = Moments::default();
    parts.iter().for_each(|p| t.add(p));
    let nr = t.n;
    let mean = t.m / nr;
    let var_m = (t.mm / nr - mean * mean).max(0.0);
    let mean_c = t.c / nr;
    let var_c = (t.cc / nr - mean_c * mean_c).max(0.0);
    let cov = t.mc / nr - mean * mean_c;
    let (cv_mean, cv_var) = if var_c > 0.0 {
        let beta = cov / var_c;
        (
            mean - beta * (mean_c - d.cpe_only_mse()),
            (var_m - 2.0 * beta * cov + beta * beta * var_c).max(0.0),
        )
    } else {
        (mean, var_m)
    };
    let denom = (nr - 1.0).max(1.0);
    Ok(MseEstimate {
        realizations: n_realizations,
        mean,
        std_err: (var_m * nr / denom / nr).sqrt(),
        cv_mean,
        cv_std_err: (cv_var * nr / denom / nr).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_layout() {
        assert_eq!(segment_lengths(64, 4), vec![16; 4]);
        assert_eq!(segment_lengths(64, 5), vec![12, 12, 12, 12, 16]);
        assert_eq!(segment_lengths(64, 1), vec![64]);
    }

    #[test]
    fn boundary_counts() {
        assert!(region_boundaries(1, 1.0).unwrap().is_empty());
        assert_eq!(region_boundaries(2, 1.0).unwrap(), vec![0.0]);
        assert_eq!(region_boundaries(5, 1.0).unwrap().len(), 4);
        assert!(region_boundaries(0, 1.0).is_err());
    }

    #[test]
    fn sizes() {
        let d = CodebookDesign::new(64, 4, 3, 1e-3).unwrap();
        assert_eq!(d.codebook_size(), Some(27));
        let cb = Codebook::build(d).unwrap();
        assert_eq!(cb.len(), 27);
        assert_eq!(cb.zero_index(), Some(13));
        assert!(cb.levels(13).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn cap_enforced() {
        let d = CodebookDesign::new(64, 8, 6, 1e-3).unwrap();
        assert!(Codebook::build_with_cap(d, 1000).is_err());
    }

    #[test]
    fn zero_noise_design_is_flat() {
        let d = CodebookDesign::new(64, 4, 3, 0.0).unwrap();
        assert!(d.points().iter().all(|&p| p == 0.0));
        assert_eq!(analytic_mse(&d), 0.0);
        assert_eq!(d.normalize(0.0), 0.0);
    }

    #[test]
    fn text_round_trip() {
        let d = CodebookDesign::new(64, 5, 2, 1e-3).unwrap();
        let cb = Codebook::build(d).unwrap();
        let mut buf = Vec::new();
        cb.write_text(&mut buf).unwrap();
        let back = Codebook::read_text(&buf[..]).unwrap();
        assert_eq!(back.len(), 16);
        for k in 0..16 {
            assert_eq!(back.levels(k), cb.levels(k));
        }
    }
}
