//! Monte-Carlo checks of the samplers, generators and metrics.

use fmcmsn::distributions::{cmsn_logpdf, sample_cmsn, CmsnParams};
use fmcmsn::partition::{marginal_observed, MissPattern};
use fmcmsn::sim::{ari, confusion_rates, generate_part_a, generate_part_b, inject_mar_detailed, Case, Proximity};
use fmcmsn::DataMatrix;
use nalgebra::{dmatrix, dvector, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mean_sd(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}

fn skewness(x: &[f64]) -> f64 {
    let (m, s) = mean_sd(x);
    x.iter().map(|a| ((a - m) / s).powi(3)).sum::<f64>() / x.len() as f64
}

#[test]
fn symmetric_draws_have_normal_moments() {
    let sigma = dmatrix![2.0, 0.6, -0.3; 0.6, 1.0, 0.2; -0.3, 0.2, 0.5];
    let mu = dvector![1.0, -2.0, 0.5];
    let params = CmsnParams::new(mu.clone(), sigma.clone(), DVector::zeros(3), 1.0, 5.0).unwrap();
    let n = 200_000;
    let (x, good) = sample_cmsn(&params, n, 3).unwrap();
    assert!(good.iter().all(|&g| g));
    let nf = n as f64;
    for j in 0..3 {
        let se = (sigma[(j, j)] / nf).sqrt();
        assert!((x.column(j).mean() - mu[j]).abs() < 3.0 * se, "mean {j}");
    }
    for j in 0..3 {
        for k in 0..=j {
            let cov = (0..n).map(|i| (x[(i, j)] - mu[j]) * (x[(i, k)] - mu[k])).sum::<f64>() / nf;
            let se = ((sigma[(j, j)] * sigma[(k, k)] + sigma[(j, k)].powi(2)) / nf).sqrt();
            assert!((cov - sigma[(j, k)]).abs() < 3.0 * se, "cov ({j},{k}): {cov} vs {}", sigma[(j, k)]);
        }
    }
}

#[test]
fn univariate_skew_normal_mean() {
    let params = CmsnParams::new(dvector![0.0], dmatrix![1.0], dvector![10.0], 1.0, 2.0).unwrap();
    let (x, _) = sample_cmsn(&params, 100_000, 8).unwrap();
    let xs: Vec<f64> = x.column(0).iter().copied().collect();
    let delta = 10.0 / 101f64.sqrt();
    let want = (2.0 / std::f64::consts::PI).sqrt() * delta;
    let (m, s) = mean_sd(&xs);
    assert!(skewness(&xs) > 0.0);
    assert!((m - want).abs() < 3.0 * s / (xs.len() as f64).sqrt(), "mean {m} vs {want}");
}

/// Histogram of one coordinate against the density of the returned marginal.
#[test]
fn marginal_matches_histogram() {
    let params = CmsnParams::new(dvector![0.5, -1.0], dmatrix![2.0, -0.8; -0.8, 1.5], dvector![3.0, -2.0], 0.85, 6.0).unwrap();
    let marg = marginal_observed(&params, &MissPattern::from_mask(&[true, false]).unwrap()).unwrap().to_cmsn().unwrap();
    let n = 1_000_000;
    let (x, _) = sample_cmsn(&params, n, 21).unwrap();
    let (lo, width, bins) = (-8.0, 0.25, 72);
    let mut counts = vec![0usize; bins];
    for i in 0..n {
        let k = ((x[(i, 0)] - lo) / width).floor();
        if k >= 0.0 && (k as usize) < bins {
            counts[k as usize] += 1;
        }
    }
    let dens = |t: f64| cmsn_logpdf(&dvector![t], &marg).unwrap().exp();
    let mut worst = 0.0f64;
    for (k, &c) in counts.iter().enumerate() {
        let a = lo + k as f64 * width;
        // Simpson on 8 panels inside the bin
        let h = width / 8.0;
        let prob = (0..=8)
            .map(|m| {
                let w = if m == 0 || m == 8 { 1.0 } else if m % 2 == 1 { 4.0 } else { 2.0 };
                w * dens(a + m as f64 * h)
            })
            .sum::<f64>()
            * h
            / 3.0;
        let se = (prob * (1.0 - prob) / n as f64).sqrt().max(1.0 / n as f64);
        worst = worst.max((c as f64 / n as f64 - prob).abs() / se);
    }
    assert!(worst < 4.5, "largest bin deviation {worst} standard errors");
}

#[test]
fn case_b_good_fraction() {
    let (_, truth) = generate_part_a(Case::B, 300, Proximity::Far, 5).unwrap();
    assert_eq!(truth.labels.len(), 300);
    let good = truth.good_flags.iter().filter(|&&g| g).count() as f64 / 300.0;
    let want: f64 = 0.9 * 0.3 + 0.8 * 0.7;
    let se = (want * (1.0 - want) / 300.0).sqrt();
    assert!((good - want).abs() < 3.0 * se, "good fraction {good}");
}

#[test]
fn part_b_skews_only_the_last_coordinate() {
    let (data, truth) = generate_part_b(Case::A, 1000, 9).unwrap();
    let rows: Vec<usize> = (0..1000).filter(|&i| !truth.noise_rows[i]).collect();
    let tol = 4.0 * (6.0 / rows.len() as f64).sqrt();
    for j in 0..10 {
        let col: Vec<f64> = rows.iter().map(|&i| data.get(i, j).unwrap()).collect();
        let s = skewness(&col);
        if j == 9 {
            assert!(s > tol, "coordinate 10 skewness {s}");
        } else {
            assert!(s.abs() < tol, "coordinate {} skewness {s}", j + 1);
        }
    }
}

#[test]
fn ari_of_independent_labelings_is_near_zero() {
    let mut r = ChaCha8Rng::seed_from_u64(1);
    let mean = (0..100)
        .map(|_| {
            let a: Vec<u8> = (0..1000).map(|_| r.random_range(0..3)).collect();
            let b: Vec<u8> = (0..1000).map(|_| r.random_range(0..4)).collect();
            ari(&a, &b).unwrap()
        })
        .sum::<f64>()
        / 100.0;
    assert!(mean.abs() < 0.02, "mean ARI {mean}");
}

#[test]
fn random_flags_give_fpr_near_rate() {
    let mut r = ChaCha8Rng::seed_from_u64(2);
    let n = 20_000;
    let q = 0.07;
    let truth: Vec<bool> = (0..n).map(|_| r.random::<f64>() < 0.1).collect();
    let pred: Vec<bool> = (0..n).map(|_| r.random::<f64>() < q).collect();
    let good = truth.iter().filter(|&&b| !b).count() as f64;
    let fpr = confusion_rates(&pred, &truth).unwrap().fpr.unwrap();
    assert!((fpr - q).abs() < 3.0 * (q * (1.0 - q) / good).sqrt(), "fpr {fpr}");
}

#[test]
fn mar_selection_depends_on_observed_values() {
    let mut r = ChaCha8Rng::seed_from_u64(4);
    let n = 5000;
    let x = DMatrix::from_fn(n, 3, |_, _| r.random::<f64>() * 4.0 - 2.0);
    let inj = inject_mar_detailed(&DataMatrix::complete(&x).unwrap(), 0.4, 6).unwrap();
    let s: Vec<f64> = inj.selected.iter().map(|&b| f64::from(u8::from(b))).collect();
    let c: Vec<f64> = (0..n).map(|i| x[(i, inj.conditioning[i])]).collect();
    let (ms, ss) = mean_sd(&s);
    let (mc, sc) = mean_sd(&c);
    let corr = s.iter().zip(&c).map(|(a, b)| (a - ms) * (b - mc)).sum::<f64>() / ((n as f64 - 1.0) * ss * sc);
    assert!(corr.abs() > 1.96 / (n as f64).sqrt(), "point-biserial r = {corr}");
    for i in 0..n {
        if inj.selected[i] {
            assert!(inj.mask[i * 3 + inj.conditioning[i]], "row {i} masked its conditioning coordinate");
        }
    }
}
