use phn_codebook::codebook::{
    analytic_mse, anchored_step_variance, best_match, quantization_points, quantizer_mse, region_boundaries,
    region_probabilities, segment_lengths, simulated_mse, step_variance, Codebook, CodebookDesign,
};
use phn_codebook::numerics::{norm_pdf, RngStream};
use phn_codebook::phn::{gen_wiener, sigma_eps_sq, WienerPhnParams};
use proptest::prelude::*;

/// Variance of sum_i c_i w_i for unit-variance white w, where the two
/// statistics are linear in the increments of a walk of `len` samples.
fn linear_stat_variance(a: &[f64], b: &[f64]) -> f64 {
    // theta_n = sum_{i <= n} w_i; stat = sum_n (b_n - a_n) theta_n.
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    (0..d.len()).map(|i| d[i..].iter().sum::<f64>().powi(2)).sum()
}

/// Simpson integral of f over [a, b].
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let n = 20_000;
    let h = (b - a) / n as f64;
    let s: f64 = (0..=n)
        .map(|i| {
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * f(a + i as f64 * h)
        })
        .sum();
    s * h / 3.0
}

fn clip(x: f64, s: f64) -> f64 {
    x.clamp(-12.0 * s, 12.0 * s)
}

#[test]
fn step_variances_from_walk_coefficients() {
    for l in [1usize, 4, 13, 16, 32] {
        let lf = l as f64;
        // Mean of samples 0..l against mean of samples l..2l.
        let mut a = vec![1.0 / lf; l];
        a.extend(vec![0.0; l]);
        let mut b = vec![0.0; l];
        b.extend(vec![1.0 / lf; l]);
        assert!(
            (linear_stat_variance(&a, &b) - step_variance(1.0, lf)).abs() < 1e-12,
            "L {l}"
        );
        // Last sample of the first segment against the mean of the next.
        let mut a = vec![0.0; 2 * l];
        a[l - 1] = 1.0;
        assert!(
            (linear_stat_variance(&a, &b) - anchored_step_variance(1.0, lf)).abs() < 1e-12,
            "L {l}"
        );
    }
}

proptest! {
    #[test]
    fn regions_are_equiprobable(q in 1usize..12, sigma in 0.01f64..5.0) {
        let b = region_boundaries(q, sigma).unwrap();
        prop_assert_eq!(b.len(), q - 1);
        prop_assert!(b.windows(2).all(|w| w[0] < w[1]));
        for (x, y) in b.iter().zip(b.iter().rev()) {
            prop_assert!((x + y).abs() < 1e-12 * sigma.max(1.0));
        }
        for p in region_probabilities(&b, sigma) {
            prop_assert!((p - 1.0 / q as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn segments_cover_the_symbol(n in 1usize..300, j in 1usize..20) {
        prop_assume!(j <= n);
        let l = segment_lengths(n, j);
        prop_assert_eq!(l.len(), j);
        prop_assert_eq!(l.iter().sum::<usize>(), n);
        prop_assert!(l[..j - 1].iter().all(|&x| x == n / j));
        prop_assert!(l[j - 1] >= n / j);
    }

    #[test]
    fn best_match_is_the_least_squares_fit(
        seed in 0u64..1000,
        q in 1usize..5,
        j in 1usize..5,
    ) {
        let cb = Codebook::build(CodebookDesign::new(32, j, q, 0.01).unwrap()).unwrap();
        let mut rng = RngStream::new(seed, 0).rng();
        let theta = gen_wiener(&WienerPhnParams::new(0.05, 32, 0).unwrap(), 1, &mut rng).unwrap().body(0).to_vec();
        let (k, off, rss) = best_match(&cb, &theta).unwrap();
        // Residual after removing the mean of (theta - trajectory).
        let fit = |k: usize| {
            let d: Vec<f64> = theta.iter().zip(cb.trajectory(k)).map(|(a, b)| a - b).collect();
            let m = d.iter().sum::<f64>() / d.len() as f64;
            (m, d.iter().map(|x| x * x).sum::<f64>() - 32.0 * m * m)
        };
        let (m, r) = fit(k);
        prop_assert!((m - off).abs() < 1e-12);
        prop_assert!((r - rss).abs() < 1e-9);
        for other in 0..cb.len() {
            prop_assert!(fit(other).1 >= rss - 1e-9);
        }
    }
}

#[test]
fn points_and_error_match_numerical_integration() {
    for q in 1..=7 {
        let s = 0.37;
        let b = region_boundaries(q, s).unwrap();
        let pts = quantization_points(&b, s);
        let pdf = |x: f64| norm_pdf(x / s) / s;
        let mut total = 0.0;
        for i in 0..q {
            let lo = clip(if i == 0 { f64::NEG_INFINITY } else { b[i - 1] }, s);
            let hi = clip(b.get(i).copied().unwrap_or(f64::INFINITY), s);
            let mass = simpson(pdf, lo, hi);
            let mean = simpson(|x| x * pdf(x), lo, hi) / mass;
            assert!((mean - pts[i]).abs() < 1e-9, "Q {q} region {i}");
            total += simpson(|x| (x - pts[i]).powi(2) * pdf(x), lo, hi);
        }
        assert!((total - quantizer_mse(&b, &pts, s)).abs() < 1e-9, "Q {q}");
    }
}

#[test]
fn codebook_layout() {
    let d = CodebookDesign::new(64, 4, 3, sigma_eps_sq(0.01, 64)).unwrap();
    let pts = d.points().to_vec();
    let cb = Codebook::build(d).unwrap();
    assert_eq!(cb.len(), 27);
    assert_eq!(cb.segment_starts(), &[0, 16, 32, 48]);
    for k in 0..cb.len() {
        let lv = cb.levels(k);
        assert_eq!(lv[0], 0.0);
        // Steps in base-Q digits, last segment fastest.
        let digits = [k / 9, (k / 3) % 3, k % 3];
        for s in 1..4 {
            assert!((lv[s] - lv[s - 1] - pts[digits[s - 1]]).abs() < 1e-15);
        }
        let t = cb.trajectory(k);
        assert_eq!(t.len(), 64);
        for (i, &x) in t.iter().enumerate() {
            assert_eq!(x, lv[i / 16]);
        }
        for (z, x) in cb.derotation(k).iter().zip(&t) {
            assert!((z.norm() - 1.0).abs() < 1e-15);
            assert!((z.arg() + x).abs() < 1e-12);
        }
    }
    let z = cb.zero_index().unwrap();
    assert!(cb.trajectory(z).iter().all(|&x| x == 0.0));
}

#[test]
fn uneven_segments_keep_the_remainder_last() {
    let cb = Codebook::build(CodebookDesign::new(64, 5, 2, 0.001).unwrap()).unwrap();
    assert_eq!(cb.design().seg_lens(), &[12, 12, 12, 12, 16]);
    assert_eq!(cb.design().design_len(), 13);
    assert_eq!(cb.len(), 16);
    assert_eq!(cb.zero_index(), None);
}

#[test]
fn text_round_trip() {
    let cb = Codebook::build(CodebookDesign::new(64, 3, 4, sigma_eps_sq(0.02, 64)).unwrap()).unwrap();
    let mut buf = Vec::new();
    cb.write_text(&mut buf).unwrap();
    let back = Codebook::read_text(buf.as_slice()).unwrap();
    assert_eq!(back.len(), cb.len());
    for k in 0..cb.len() {
        for (a, b) in back.trajectory(k).iter().zip(cb.trajectory(k)) {
            assert!((a - b).abs() < 1e-12);
        }
    }
    assert!(Codebook::read_text(&b"not a codebook\n"[..]).is_err());
}

#[test]
fn single_segment_equals_common_phase_only() {
    for q in 1..6 {
        let d = CodebookDesign::new(64, 1, q, sigma_eps_sq(0.01, 64)).unwrap();
        assert!((d.normalize(analytic_mse(&d)) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn fast_simulation_agrees_with_direct_search() {
    let bt = 0.01;
    let cb = Codebook::build(CodebookDesign::new(64, 4, 3, sigma_eps_sq(bt, 64)).unwrap()).unwrap();
    let n = 1500;
    let fast = simulated_mse(&cb, n, RngStream::new(5, 0)).unwrap();
    let params = WienerPhnParams::new(bt, 64, 16).unwrap();
    let mut rng = RngStream::new(6, 0).rng();
    let errs: Vec<f64> = (0..n)
        .map(|_| {
            let t = gen_wiener(&params, 1, &mut rng).unwrap();
            best_match(&cb, t.body(0)).unwrap().2
        })
        .collect();
    let mean = errs.iter().sum::<f64>() / n as f64;
    let se = (errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n * (n - 1)) as f64).sqrt();
    let gap = (fast.mean - mean).abs();
    assert!(
        gap < 4.0 * (se * se + fast.std_err * fast.std_err).sqrt(),
        "{} vs {mean}",
        fast.mean
    );
    assert!(fast.cv_std_err < fast.std_err);
}
