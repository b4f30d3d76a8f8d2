mod common;

use brbs_core::estimate::{
    ci_mm, ci_rho, ci_rho_fisher, ci_rho_kx, ci_wald_ml, fit_ml, fit_mm, loglik, mm_asymptotic_se,
    mm_from_means, observed_information, profile_loglik, rho_hat_given, Init, ParamValues,
};
use brbs_core::io::read_sample_csv;
use brbs_core::numerics::fd_hessian;
use brbs_core::sampling::{sample_brbs, SeededStream};
use brbs_core::{
    BivariateSample, BrbsError, BrbsParams, FitReport, Method, MlOptions, Param, Technique,
};
use proptest::prelude::*;

fn sample_from_scores(eta: [f64; 4], scores: &[(f64, f64)]) -> BivariateSample {
    let p = BrbsParams::new(eta[0], eta[1], eta[2], eta[3], 0.0).unwrap();
    BivariateSample::new(
        scores
            .iter()
            .map(|&(x, y)| (p.margin1().a_inverse(x), p.margin2().a_inverse(y)))
            .collect(),
    )
    .unwrap()
}

fn standardize(v: &mut [f64]) {
    let ms = (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt();
    v.iter_mut().for_each(|x| *x /= ms);
}

/// The constant-free log-likelihood with the quadratic form entering negatively.
fn kernel(theta: &BrbsParams, sample: &BivariateSample) -> f64 {
    let r = theta.rho();
    let n = sample.n() as f64;
    let m = [theta.margin1(), theta.margin2()];
    let mut quad = 0.0;
    let mut jac = 0.0;
    for &(t1, t2) in sample.rows() {
        let mut ab = [(0.0, 0.0); 2];
        for (k, &t) in [t1, t2].iter().enumerate() {
            let (mu, d) = (m[k].mu(), m[k].delta());
            let a = ((d + 1.0) * t / (d * mu)).sqrt();
            let b = (d * mu / ((d + 1.0) * t)).sqrt();
            ab[k] = (a, b);
            quad += d * d * mu / ((d + 1.0) * t) - 2.0 * d * a * b + (d + 1.0) * t / mu;
            jac += (a + b).ln();
        }
        let (d1, d2) = (m[0].delta(), m[1].delta());
        quad -= 2.0 * r * (d1 * d2).sqrt() * (ab[0].0 - ab[0].1) * (ab[1].0 - ab[1].1);
    }
    -0.5 * n * (1.0 - r * r).ln() - quad / (4.0 * (1.0 - r * r))
        + 0.5 * n * (m[0].delta().ln() + m[1].delta().ln())
        + jac
}

fn stiffness() -> Option<BivariateSample> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/stiffness.csv");
    std::path::Path::new(path)
        .exists()
        .then(|| read_sample_csv(path).unwrap())
}

#[test]
fn loglik_reductions_and_constant() {
    let theta = BrbsParams::new(2.0, 1.0, 1.5, 0.4, 0.0).unwrap();
    let d = sample_brbs(50, &theta, SeededStream::new(1, 0)).unwrap();
    let s = BivariateSample::new(d.clone()).unwrap();
    let marg: f64 = d
        .iter()
        .map(|&(a, b)| theta.margin1().ln_pdf(a).unwrap() + theta.margin2().ln_pdf(b).unwrap())
        .sum();
    assert!((loglik(&theta, &s).unwrap() - marg).abs() < 1e-10);

    let at = (theta.margin1().beta(), theta.margin2().beta());
    let two = BivariateSample::new(vec![at, at]).unwrap();
    let single = theta.ln_pdf(at.0, at.1).unwrap();
    assert!((loglik(&theta, &two).unwrap() - 2.0 * single).abs() < 1e-13);

    for &r in &[-0.7, 0.0, 0.45] {
        let th = theta.with_rho(r).unwrap();
        let logs: f64 = s.rows().iter().map(|(a, b)| a.ln() + b.ln()).sum();
        let offset = -(s.n() as f64) * (16.0 * std::f64::consts::PI).ln() - logs;
        let diff = loglik(&th, &s).unwrap() - kernel(&th, &s);
        assert!((diff - offset).abs() < 1e-9, "rho {r}: {diff} vs {offset}");
    }
}

#[test]
fn rho_hat_examples() {
    let eta = [1.0, 2.0, 0.8, 3.0];
    let xs = [-1.3, -0.2, 0.4, 0.9, 2.1];
    let prop: Vec<(f64, f64)> = xs.iter().map(|&x| (x, 1.7 * x)).collect();
    assert!((rho_hat_given(eta, &sample_from_scores(eta, &prop)).unwrap() - 1.0).abs() < 1e-12);
    let anti = sample_from_scores(eta, &[(1.0, -1.0), (-1.0, 1.0)]);
    assert!((rho_hat_given(eta, &anti).unwrap() + 1.0).abs() < 1e-12);
    assert!(matches!(
        profile_loglik(eta, &anti),
        Err(BrbsError::Degenerate(_))
    ));

    let theta = BrbsParams::new(1.0, 2.0, 0.8, 3.0, 0.5).unwrap();
    let s = BivariateSample::new(sample_brbs(10_000, &theta, SeededStream::new(4, 0)).unwrap())
        .unwrap();
    assert!((rho_hat_given(eta, &s).unwrap() - 0.5).abs() < 0.02);

    let at = (theta.margin1().beta(), theta.margin2().beta());
    let flat = BivariateSample::new(vec![at, at, at]).unwrap();
    assert!(matches!(
        rho_hat_given(eta, &flat),
        Err(BrbsError::Degenerate(_))
    ));
}

#[test]
fn profile_properties() {
    let theta = BrbsParams::new(1.0, 2.0, 0.8, 3.0, 0.6).unwrap();
    let s =
        BivariateSample::new(sample_brbs(80, &theta, SeededStream::new(6, 0)).unwrap()).unwrap();
    let mut rng = SeededStream::new(6, 1).rng();
    for _ in 0..3 {
        let eta: [f64; 4] = std::array::from_fn(|_| 0.5 + 2.0 * rng.uniform());
        let prof = profile_loglik(eta, &s).unwrap();
        let at = |r: f64| {
            loglik(
                &BrbsParams::new(eta[0], eta[1], eta[2], eta[3], r).unwrap(),
                &s,
            )
            .unwrap()
        };
        let rh = rho_hat_given(eta, &s).unwrap();
        assert!((prof - at(rh)).abs() < 1e-12 * prof.abs().max(1.0));
    }

    // with unit mean-square scores the cross product is the exact maximizer in ρ
    let eta = [1.0, 2.0, 0.8, 3.0];
    let mut rng = SeededStream::new(6, 2).rng();
    let mut x: Vec<f64> = (0..60).map(|_| rng.normal()).collect();
    let mut y: Vec<f64> = x.iter().map(|v| 0.6 * v + 0.8 * rng.normal()).collect();
    standardize(&mut x);
    standardize(&mut y);
    let scores: Vec<(f64, f64)> = x.into_iter().zip(y).collect();
    let s = sample_from_scores(eta, &scores);
    let at = |r: f64| {
        loglik(
            &BrbsParams::new(eta[0], eta[1], eta[2], eta[3], r).unwrap(),
            &s,
        )
        .unwrap()
    };
    let (mut best, mut arg) = (f64::NEG_INFINITY, 0.0);
    for i in 0..=19_998 {
        let r = -0.9999 + 1e-4 * i as f64;
        let v = at(r);
        if v > best {
            (best, arg) = (v, r);
        }
    }
    let rh = rho_hat_given(eta, &s).unwrap();
    assert!((arg - rh).abs() < 1e-4);
    assert!((profile_loglik(eta, &s).unwrap() - best).abs() < 1e-6);
    assert!(profile_loglik(eta, &s).unwrap() >= at(0.0));
}

#[test]
fn moment_estimates() {
    let (mu, d) = mm_from_means(1906.10, 1857.55).unwrap();
    assert_eq!(mu, 1906.10);
    assert!((d - 77.03).abs() < 0.15);
    let (_, d) = mm_from_means(1749.53, 1699.99).unwrap();
    assert!((d - 69.13).abs() < 0.15);
    assert!(mm_from_means(2.0, 2.0).is_err());
    assert!(mm_from_means(-1.0, 2.0).is_err());

    let constant = BivariateSample::new(vec![(1.0, 1.0), (1.0, 2.0), (1.0, 3.0)]).unwrap();
    assert!(fit_mm(&constant).is_err());

    let theta = BrbsParams::new(3.0, 0.5, 2.0, 0.7, -0.3).unwrap();
    let s =
        BivariateSample::new(sample_brbs(200, &theta, SeededStream::new(7, 0)).unwrap()).unwrap();
    let f = fit_mm(&s).unwrap();
    assert_eq!(f.method, Method::Mm);
    let (m1, d1) = mm_from_means(
        s.arithmetic_mean(brbs_core::Margin::First),
        s.harmonic_mean(brbs_core::Margin::First),
    )
    .unwrap();
    assert_eq!(
        (f.estimates.margin1().mu(), f.estimates.margin1().delta()),
        (m1, d1)
    );
    let eta = [
        m1,
        f.estimates.margin2().mu(),
        d1,
        f.estimates.margin2().delta(),
    ];
    assert_eq!(f.estimates.rho(), rho_hat_given(eta, &s).unwrap());
    assert!(f.std_errors.rho.is_none());

    // permuting rows changes nothing
    let mut rows = s.rows().to_vec();
    rows.reverse();
    rows.swap(3, 77);
    let g = fit_mm(&BivariateSample::new(rows).unwrap()).unwrap();
    for (a, b) in f.estimates.to_array().iter().zip(g.estimates.to_array()) {
        assert!((a - b).abs() <= 1e-13 * a.abs());
    }
}

#[test]
fn asymptotic_standard_errors() {
    let p = BrbsParams::new(1906.10, 1749.53, 77.03, 69.13, 0.9).unwrap();
    let se = mm_asymptotic_se(&p, 30).unwrap();
    assert!((se.mu1.unwrap() - 56.247).abs() < 0.01);
    assert!((se.delta1.unwrap() - 19.889).abs() < 0.01);
    assert!(se.rho.is_none());
    let big = mm_asymptotic_se(&p, 30_000_000).unwrap();
    assert!(big.mu1.unwrap() < 0.1 && big.delta1.unwrap() < 0.04);
    assert!(mm_asymptotic_se(&p, 0).is_err());
}

#[test]
fn delta_estimator_variance() {
    // n·Var(δ̃) → 2δ²
    let delta = 1.5;
    let theta = BrbsParams::new(1.0, 1.0, delta, delta, 0.3).unwrap();
    let n = 200;
    let v: Vec<f64> = (0..2000)
        .map(|rep| {
            let s =
                BivariateSample::new(sample_brbs(n, &theta, SeededStream::new(11, rep)).unwrap())
                    .unwrap();
            (n as f64).sqrt() * (fit_mm(&s).unwrap().estimates.margin1().delta() - delta)
        })
        .collect();
    let ratio = common::var(&v) / (2.0 * delta * delta);
    assert!((ratio - 1.0).abs() < 0.1, "{ratio}");
}

#[test]
fn ml_fit_improves_on_moments() {
    let theta = BrbsParams::new(2.0, 2.0, 0.25, 0.25, 0.5).unwrap();
    for seed in 0..5 {
        let s =
            BivariateSample::new(sample_brbs(100, &theta, SeededStream::new(13, seed)).unwrap())
                .unwrap();
        let mm = fit_mm(&s).unwrap();
        let e = mm.estimates.to_array();
        let start = profile_loglik([e[0], e[1], e[2], e[3]], &s).unwrap();
        let ml = fit_ml(&s, &MlOptions::default()).unwrap();
        let m = ml.estimates.to_array();
        assert!(profile_loglik([m[0], m[1], m[2], m[3]], &s).unwrap() >= start);
        assert!(ml.loglik >= mm.loglik);
        assert!(ml.estimates.rho().abs() <= 1.0);
        assert!(ml.warnings.is_empty(), "{:?}", ml.warnings);
        // no ρ does better than ρ̂ at the fitted η
        let at = |r: f64| loglik(&ml.estimates.with_rho(r).unwrap(), &s).unwrap();
        let (lo, hi) = ((m[4] - 0.05).max(-0.999), (m[4] + 0.05).min(0.999));
        let grid_best = (0..=10_000)
            .map(|i| at(lo + (hi - lo) * i as f64 / 10_000.0))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(
            ml.loglik >= grid_best - 1e-8,
            "{} vs {grid_best}",
            ml.loglik
        );
        let explicit = MlOptions {
            init: Init::Explicit([e[0], e[1], e[2], e[3]]),
            ..MlOptions::default()
        };
        let again = fit_ml(&s, &explicit).unwrap();
        assert!((again.loglik - ml.loglik).abs() < 1e-8);
    }
    let tiny = BivariateSample::new(vec![(1.0, 2.0), (2.0, 1.0)]).unwrap();
    assert!(matches!(
        fit_ml(&tiny, &MlOptions::default()),
        Err(BrbsError::SampleTooSmall { .. })
    ));
    let s =
        BivariateSample::new(sample_brbs(50, &theta, SeededStream::new(13, 9)).unwrap()).unwrap();
    let capped = MlOptions {
        max_iter: 3,
        ..MlOptions::default()
    };
    assert!(matches!(
        fit_ml(&s, &capped),
        Err(BrbsError::NonConvergence { .. })
    ));
}

#[test]
#[allow(clippy::needless_range_loop)]
fn information_matrix() {
    // exact quadratic: Hessian recovered by second differences
    let h = [[4.0, 1.0, -0.5], [1.0, 3.0, 0.2], [-0.5, 0.2, 2.0]];
    let f = |x: &[f64]| -> f64 {
        let mut v = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                v += 0.5 * h[i][j] * x[i] * x[j];
            }
        }
        v + x[0] - 2.0 * x[2]
    };
    let got = fd_hessian(&f, &[0.3, -1.2, 2.0], &[1e-3, 1e-3, 1e-3]);
    for i in 0..3 {
        for j in 0..3 {
            assert!((got[i][j] - h[i][j]).abs() < 1e-8);
        }
    }

    let theta = BrbsParams::new(2.0, 1.0, 1.0, 3.0, 0.0).unwrap();
    let n = 5000;
    let s =
        BivariateSample::new(sample_brbs(n, &theta, SeededStream::new(21, 0)).unwrap()).unwrap();
    let fit = fit_ml(&s, &MlOptions::default()).unwrap();
    let j = observed_information(&fit.estimates, &s).unwrap();
    for a in 0..5 {
        for b in 0..5 {
            assert!((j[a][b] - j[b][a]).abs() <= 1e-6 * j[a][b].abs().max(1.0));
        }
    }
    // μ₁ and μ₂ decouple at ρ = 0: the scaled cross term is O(n^{-1/2})
    let cross = j[0][1] / (j[0][0] * j[1][1]).sqrt();
    assert!(cross.abs() < 4.0 / (n as f64).sqrt(), "{cross}");

    let s =
        BivariateSample::new(sample_brbs(500, &theta, SeededStream::new(21, 1)).unwrap()).unwrap();
    let ml = fit_ml(&s, &MlOptions::default()).unwrap();
    let mm = fit_mm(&s).unwrap();
    for p in [Param::Mu1, Param::Mu2] {
        let (a, b) = (ml.std_errors.get(p).unwrap(), mm.std_errors.get(p).unwrap());
        assert!((a / b - 1.0).abs() < 0.25, "{p}: {a} vs {b}");
    }
}

fn report_with_rho_se() -> FitReport {
    FitReport {
        method: Method::Ml,
        n: 100,
        estimates: BrbsParams::new(1.0, 1.0, 1.0, 1.0, 0.0).unwrap(),
        std_errors: ParamValues::from_array([
            Some(0.1),
            Some(0.1),
            Some(0.2),
            Some(0.2),
            Some(1.0),
        ]),
        loglik: -1.0,
        intervals: Vec::new(),
        iterations: None,
        warnings: Vec::new(),
    }
}

#[test]
fn wald_intervals() {
    let f = report_with_rho_se();
    let ci = ci_wald_ml(&f, 0.95).unwrap();
    let r = ci.iter().find(|c| c.param == Param::Rho).unwrap();
    assert!(
        (r.lower + 1.959963984540054).abs() < 1e-12 && (r.upper - 1.959963984540054).abs() < 1e-12
    );
    assert_eq!(r.technique, Technique::Wald);
    let narrow = ci_wald_ml(&f, 0.90).unwrap();
    for (a, b) in narrow.iter().zip(&ci) {
        assert!(a.upper - a.lower < b.upper - b.lower);
        assert!(a.lower <= a.upper);
    }
    let mut missing = f.clone();
    missing.std_errors.delta2 = None;
    assert!(matches!(
        ci_wald_ml(&missing, 0.95),
        Err(BrbsError::IntervalUnavailable(_))
    ));
    assert!(ci_wald_ml(&f, 1.0).is_err());
}

#[test]
fn moment_intervals() {
    let mut f = report_with_rho_se();
    f.method = Method::Mm;
    f.n = 50;
    f.estimates = BrbsParams::new(1.0, 1.0, 2.0, 2.0, 0.0).unwrap();
    let ci = ci_mm(&f, 0.95).unwrap();
    let d = ci.iter().find(|c| c.param == Param::Delta1).unwrap();
    let w = 1.959963984540054 * (2.0f64 / 50.0).sqrt();
    assert!((d.lower - 2.0 / (1.0 + w)).abs() < 1e-12 && (d.upper - 2.0 / (1.0 - w)).abs() < 1e-12);
    assert!((d.lower - 1.437).abs() < 1e-3 && (d.upper - 3.289).abs() < 1e-3);
    let tiny = ci_mm(&f, 1e-9).unwrap();
    assert!(tiny.iter().all(|c| (c.upper - c.lower) < 1e-8));
    f.n = 2;
    assert!(matches!(
        ci_mm(&f, 0.99),
        Err(BrbsError::IntervalUnavailable(_))
    ));
}

#[test]
fn correlation_intervals() {
    let (lo, hi) = ci_rho_fisher(0.0, 103, 0.95).unwrap();
    assert!((hi - (1.959963984540054f64 / 10.0).tanh()).abs() < 1e-12);
    assert!((hi - 0.1936).abs() < 1e-4 && (lo + hi).abs() < 1e-15);
    assert!(ci_rho_fisher(0.2, 3, 0.95).is_err());
    assert!(ci_rho_fisher(1.0, 30, 0.95).is_err());

    let (lo, hi) = ci_rho_kx(0.0, 40, 0.95, 100_000, SeededStream::new(31, 0)).unwrap();
    assert!((lo + hi).abs() < 0.005, "({lo}, {hi})");
    for &r in &[-0.95, 0.3, 0.99] {
        let (lo, hi) = ci_rho_kx(r, 20, 0.99, 10_000, SeededStream::new(31, 1)).unwrap();
        assert!(-1.0 < lo && lo < hi && hi < 1.0);
    }
    assert!(ci_rho_kx(0.5, 40, 0.95, 100, SeededStream::new(1, 0)).is_err());
    let a = ci_rho_kx(0.4, 40, 0.9, 20_000, SeededStream::new(2, 0)).unwrap();
    let b = ci_rho_kx(0.4, 40, 0.9, 20_000, SeededStream::new(2, 0)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn stiffness_fit() {
    let Some(s) = stiffness() else {
        eprintln!("data/stiffness.csv not present, skipping");
        return;
    };
    let ml = fit_ml(&s, &MlOptions::default()).unwrap();
    assert!((ml.loglik + 400.648).abs() < 0.01);
    let mm = fit_mm(&s).unwrap();
    assert!((mm.estimates.margin1().delta() - 77.030).abs() < 5e-4);
    assert!((mm.estimates.margin2().delta() - 69.134).abs() < 5e-4);

    // ρ̂ from the 4-D profile against the full likelihood's maximizer in ρ
    let e = ml.estimates.to_array();
    let at = |r: f64| loglik(&BrbsParams::new(e[0], e[1], e[2], e[3], r).unwrap(), &s).unwrap();
    let (mut best, mut arg) = (f64::NEG_INFINITY, 0.0);
    for i in 0..15_000 {
        let r = 0.85 + 1e-5 * i as f64;
        let v = at(r);
        if v > best {
            (best, arg) = (v, r);
        }
    }
    assert!((arg - e[4]).abs() < 1e-5);
    assert!((best - ml.loglik).abs() < 1e-8);

    let ci = ci_rho(&mm, &[0.95], Some((200_000, SeededStream::new(1, 0)))).unwrap();
    let fi = ci.iter().find(|c| c.technique == Technique::Fi).unwrap();
    assert!(
        (fi.lower - 0.813).abs() < 2e-3 && (fi.upper - 0.955).abs() < 2e-3,
        "{fi:?}"
    );
    let kx = ci.iter().find(|c| c.technique == Technique::Kx).unwrap();
    assert!(kx.lower < mm.estimates.rho() && mm.estimates.rho() < kx.upper);
}

#[test]
fn fit_report_round_trips_through_json() {
    let theta = BrbsParams::new(2.0, 1.0, 0.6, 4.0, 0.7).unwrap();
    let s =
        BivariateSample::new(sample_brbs(60, &theta, SeededStream::new(5, 0)).unwrap()).unwrap();
    let mut f = fit_ml(&s, &MlOptions::default()).unwrap();
    f.intervals = ci_wald_ml(&f, 0.9).unwrap();
    let js = serde_json::to_string(&f).unwrap();
    let back: FitReport = serde_json::from_str(&js).unwrap();
    assert_eq!(back, f);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rho_hat_is_a_correlation(seed in any::<u64>(), r in -0.99f64..0.99, n in 3usize..40) {
        let theta = BrbsParams::new(1.0, 3.0, 0.5, 2.0, r).unwrap();
        let s = BivariateSample::new(sample_brbs(n, &theta, SeededStream::new(seed, 0)).unwrap()).unwrap();
        let mut rng = SeededStream::new(seed, 1).rng();
        let eta: [f64; 4] = std::array::from_fn(|_| 0.2 + 5.0 * rng.uniform());
        let rh = rho_hat_given(eta, &s).unwrap();
        prop_assert!(rh.abs() <= 1.0);
    }

    #[test]
    fn moment_fit_scales_exactly(seed in any::<u64>(), b1 in 0.01f64..100.0, b2 in 0.01f64..100.0) {
        let theta = BrbsParams::new(1.0, 3.0, 0.5, 2.0, 0.4).unwrap();
        let s = BivariateSample::new(sample_brbs(30, &theta, SeededStream::new(seed, 0)).unwrap()).unwrap();
        let f = fit_mm(&s).unwrap().estimates.to_array();
        let g = fit_mm(&s.scaled(b1, b2).unwrap()).unwrap().estimates.to_array();
        prop_assert!((g[0] / (b1 * f[0]) - 1.0).abs() < 1e-13);
        prop_assert!((g[1] / (b2 * f[1]) - 1.0).abs() < 1e-13);
        for i in 2..5 {
            prop_assert!((g[i] - f[i]).abs() <= 1e-12 * f[i].abs().max(1.0));
        }
    }
}
