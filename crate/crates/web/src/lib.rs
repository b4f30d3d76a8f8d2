//! Browser bindings for the demo page in `www/`.
//!
//! The plain functions are what the native tests exercise; the
//! `#[wasm_bindgen]` wrappers only convert errors.

use brbs_core::estimate::{fit_ml, fit_mm};
use brbs_core::gof::gof_report;
use brbs_core::sampling::sample_brbs;
use brbs_core::{BivariateSample, BrbsParams, MlOptions, RbsParams, Result, SeededStream};
use serde_json::json;
use wasm_bindgen::prelude::*;

pub const MAX_GRID: usize = 400;
pub const MAX_SAMPLE: usize = 5000;

fn linspace(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
    lo + (hi - lo) * i as f64 / (n - 1) as f64
}

fn check_grid(lo: f64, hi: f64, n: usize) -> Result<()> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) || !(2..=MAX_GRID).contains(&n) {
        return Err(brbs_core::BrbsError::Domain(format!(
            "need 0 < lo < hi and 2 <= n <= {MAX_GRID}"
        )));
    }
    Ok(())
}

/// Row-major n×n values of the joint pdf (`what = "pdf"`) or hazard over
/// [lo1, hi1] × [lo2, hi2]; row i holds t2 fixed at its i-th grid value.
#[allow(clippy::too_many_arguments)]
pub fn joint_grid(
    theta: &BrbsParams,
    what: &str,
    lo1: f64,
    hi1: f64,
    lo2: f64,
    hi2: f64,
    n: usize,
) -> Result<Vec<f64>> {
    check_grid(lo1, hi1, n)?;
    check_grid(lo2, hi2, n)?;
    let f: fn(&BrbsParams, f64, f64) -> Result<f64> = match what {
        "pdf" => BrbsParams::pdf,
        "hazard" => BrbsParams::hazard,
        _ => {
            return Err(brbs_core::BrbsError::Domain(format!(
                "unknown surface '{what}'"
            )))
        }
    };
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        let t2 = linspace(lo2, hi2, n, i);
        for j in 0..n {
            out.push(f(theta, linspace(lo1, hi1, n, j), t2)?);
        }
    }
    Ok(out)
}

/// JSON `{t, pdf, cdf, hazard}` for one margin on a grid.
pub fn marginal_curves(margin: &RbsParams, lo: f64, hi: f64, n: usize) -> Result<String> {
    check_grid(lo, hi, n)?;
    let t: Vec<f64> = (0..n).map(|i| linspace(lo, hi, n, i)).collect();
    let pdf = t
        .iter()
        .map(|&x| margin.pdf(x))
        .collect::<Result<Vec<_>>>()?;
    let cdf = t
        .iter()
        .map(|&x| margin.cdf(x))
        .collect::<Result<Vec<_>>>()?;
    let hazard = t
        .iter()
        .map(|&x| margin.hazard(x))
        .collect::<Result<Vec<_>>>()?;
    Ok(json!({ "t": t, "pdf": pdf, "cdf": cdf, "hazard": hazard }).to_string())
}

/// Draws n pairs, fits both estimators and runs the distance KS test at the
/// ML fit. Returns JSON with the sample, both fits and the test result.
pub fn simulate_and_fit(theta: &BrbsParams, n: usize, seed: u64) -> Result<String> {
    if !(5..=MAX_SAMPLE).contains(&n) {
        return Err(brbs_core::BrbsError::Domain(format!(
            "sample size must lie in [5, {MAX_SAMPLE}]"
        )));
    }
    let rows = sample_brbs(n, theta, SeededStream::new(seed, 0))?;
    let sample = BivariateSample::new(rows.clone())?;
    let mm = fit_mm(&sample)?;
    let ml = fit_ml(&sample, &MlOptions::default())?;
    let gof = gof_report(&ml.estimates, &sample)?;
    Ok(json!({
        "truth": theta,
        "sample": rows,
        "mm": mm,
        "ml": ml,
        "ks_statistic": gof.ks_statistic,
        "ks_pvalue": gof.ks_pvalue,
    })
    .to_string())
}

fn js(e: brbs_core::BrbsError) -> JsError {
    JsError::new(&e.to_string())
}

fn params(
    mu1: f64,
    mu2: f64,
    d1: f64,
    d2: f64,
    rho: f64,
) -> std::result::Result<BrbsParams, JsError> {
    BrbsParams::new(mu1, mu2, d1, d2, rho).map_err(js)
}

#[wasm_bindgen(js_name = jointGrid)]
#[allow(clippy::too_many_arguments)]
pub fn joint_grid_js(
    mu1: f64,
    mu2: f64,
    delta1: f64,
    delta2: f64,
    rho: f64,
    what: &str,
    lo1: f64,
    hi1: f64,
    lo2: f64,
    hi2: f64,
    n: usize,
) -> std::result::Result<Vec<f64>, JsError> {
    let theta = params(mu1, mu2, delta1, delta2, rho)?;
    joint_grid(&theta, what, lo1, hi1, lo2, hi2, n).map_err(js)
}

#[wasm_bindgen(js_name = marginalCurves)]
pub fn marginal_curves_js(
    mu: f64,
    delta: f64,
    lo: f64,
    hi: f64,
    n: usize,
) -> std::result::Result<String, JsError> {
    let m = RbsParams::new(mu, delta).map_err(js)?;
    marginal_curves(&m, lo, hi, n).map_err(js)
}

#[wasm_bindgen(js_name = simulateAndFit)]
#[allow(clippy::too_many_arguments)]
pub fn simulate_and_fit_js(
    mu1: f64,
    mu2: f64,
    delta1: f64,
    delta2: f64,
    rho: f64,
    n: usize,
    seed: u32,
) -> std::result::Result<String, JsError> {
    let theta = params(mu1, mu2, delta1, delta2, rho)?;
    simulate_and_fit(&theta, n, u64::from(seed)).map_err(js)
}
