use brbs_core::{BrbsParams, RbsParams};
use brbs_web::{joint_grid, marginal_curves, simulate_and_fit};
use serde_json::Value;

#[test]
fn joint_grid_is_row_major_in_t2() {
    let p = BrbsParams::new(1.0, 2.0, 3.0, 4.0, 0.5).unwrap();
    let n = 7;
    let g = joint_grid(&p, "pdf", 0.2, 3.0, 0.4, 5.0, n).unwrap();
    assert_eq!(g.len(), n * n);
    let t = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (n - 1) as f64;
    for i in 0..n {
        for j in 0..n {
            let want = p.pdf(t(0.2, 3.0, j), t(0.4, 5.0, i)).unwrap();
            assert_eq!(g[i * n + j], want);
        }
    }
    let h = joint_grid(&p, "hazard", 0.2, 3.0, 0.4, 5.0, n).unwrap();
    assert_eq!(h[n + 2], p.hazard(t(0.2, 3.0, 2), t(0.4, 5.0, 1)).unwrap());
}

#[test]
fn joint_grid_rejects_bad_input() {
    let p = BrbsParams::new(1.0, 1.0, 1.0, 1.0, 0.0).unwrap();
    assert!(joint_grid(&p, "cdf", 0.1, 1.0, 0.1, 1.0, 5).is_err());
    assert!(joint_grid(&p, "pdf", 0.0, 1.0, 0.1, 1.0, 5).is_err());
    assert!(joint_grid(&p, "pdf", 0.1, 1.0, 0.1, 1.0, 1).is_err());
    assert!(joint_grid(&p, "pdf", 0.1, 1.0, 2.0, 1.0, 5).is_err());
    assert!(joint_grid(&p, "pdf", 0.1, 1.0, 0.1, 1.0, 10_000).is_err());
}

#[test]
fn marginal_curves_match_library() {
    let m = RbsParams::new(2.0, 0.5).unwrap();
    let v: Value = serde_json::from_str(&marginal_curves(&m, 0.5, 4.0, 8).unwrap()).unwrap();
    let t: Vec<f64> = serde_json::from_value(v["t"].clone()).unwrap();
    assert_eq!(t.len(), 8);
    assert_eq!((t[0], t[7]), (0.5, 4.0));
    for (i, &x) in t.iter().enumerate() {
        assert_eq!(v["pdf"][i].as_f64().unwrap(), m.pdf(x).unwrap());
        assert_eq!(v["cdf"][i].as_f64().unwrap(), m.cdf(x).unwrap());
        assert_eq!(v["hazard"][i].as_f64().unwrap(), m.hazard(x).unwrap());
    }
}

#[test]
fn simulate_and_fit_reports_both_fits() {
    let p = BrbsParams::new(1.0, 1.5, 4.0, 6.0, 0.6).unwrap();
    let s = simulate_and_fit(&p, 300, 11).unwrap();
    assert_eq!(s, simulate_and_fit(&p, 300, 11).unwrap());
    let v: Value = serde_json::from_str(&s).unwrap();
    assert_eq!(v["sample"].as_array().unwrap().len(), 300);
    assert_eq!(v["truth"]["rho"], 0.6);
    let ml = v["ml"]["loglik"].as_f64().unwrap();
    let mm = v["mm"]["loglik"].as_f64().unwrap();
    assert!(ml >= mm);
    assert!((v["ml"]["estimates"]["rho"].as_f64().unwrap() - 0.6).abs() < 0.15);
    let pv = v["ks_pvalue"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&pv));
    assert!(simulate_and_fit(&p, 4, 1).is_err());
    assert!(simulate_and_fit(&p, 100_000, 1).is_err());
}
