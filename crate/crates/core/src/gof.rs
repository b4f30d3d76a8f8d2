//! Goodness-of-fit diagnostics: Mahalanobis distances, KS normality test of
//! their Wilson–Hilferty transforms, PP/QQ data with bands and TTT curves.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::brbs::BrbsParams;
use crate::error::{BrbsError, Result};
use crate::estimate::BivariateSample;
use crate::numerics::{norm_cdf, norm_quantile, wilson_hilferty};
use crate::rbs::RbsParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub distances: Vec<f64>,
    pub transformed: Vec<f64>,
    pub ks_statistic: f64,
    pub ks_pvalue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpData {
    /// (i/(n+1), F(t₍ᵢ₎)) for the sorted column.
    pub pp_points: Vec<(f64, f64)>,
    /// Acceptance band (lower, upper) around the empirical coordinate.
    pub bands: Vec<(f64, f64)>,
    /// (theoretical quantile F⁻¹(i/(n+1)), t₍ᵢ₎).
    pub qq_points: Vec<(f64, f64)>,
    pub band_level: f64,
}

/// Dᵢ = (x₁² − 2ρx₁x₂ + x₂²)/(1−ρ²) with xₖ the standardized scores.
pub fn mahalanobis_distances(theta: &BrbsParams, sample: &BivariateSample) -> Result<Vec<f64>> {
    let rho = theta.rho();
    let om = (1.0 - rho) * (1.0 + rho);
    if !(om > 0.0) {
        return Err(BrbsError::domain("correlation matrix is singular"));
    }
    let (m1, m2) = (theta.margin1(), theta.margin2());
    Ok(sample
        .rows()
        .iter()
        .map(|&(t1, t2)| {
            let x = m1.a(t1);
            let y = m2.a(t2);
            ((x * x - 2.0 * rho * x * y + y * y) / om).max(0.0)
        })
        .collect())
}

/// Asymptotic Kolmogorov upper tail P(K > λ).
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi theta form converges fast for small λ
        let c = -PI * PI / (8.0 * lambda * lambda);
        let s: f64 = (1..=20)
            .map(|j| {
                let k = (2 * j - 1) as f64;
                (c * k * k).exp()
            })
            .sum();
        (1.0 - (2.0 * PI).sqrt() / lambda * s).clamp(0.0, 1.0)
    } else {
        let s: f64 = (1..=100)
            .map(|j| {
                let jf = j as f64;
                let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * jf * jf * lambda * lambda).exp()
            })
            .sum();
        (2.0 * s).clamp(0.0, 1.0)
    }
}

/// Two-sided one-sample KS statistic of `data` against `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(data: &[f64], cdf: F) -> f64 {
    let mut v = data.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

fn effective_n(n: usize) -> f64 {
    let rn = (n as f64).sqrt();
    rn + 0.12 + 0.11 / rn
}

/// KS p-value with the √n + 0.12 + 0.11/√n small-sample correction.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    kolmogorov_sf(effective_n(n) * d)
}

/// KS distance D with P(D > d) = 1 − level, from the corrected asymptotic law.
pub fn ks_critical(n: usize, level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(BrbsError::domain(format!(
            "level must lie in (0, 1), got {level}"
        )));
    }
    let alpha = 1.0 - level;
    let (mut lo, mut hi) = (1e-3, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_sf(mid) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi) / effective_n(n))
}

/// KS test of Wilson–Hilferty transformed χ²₂ distances against N(0, 1).
pub fn wh_normality_ks(distances: &[f64]) -> Result<(f64, f64)> {
    let (_, d, p) = wh_transform_ks(distances)?;
    Ok((d, p))
}

fn wh_transform_ks(distances: &[f64]) -> Result<(Vec<f64>, f64, f64)> {
    if distances.len() < 5 {
        return Err(BrbsError::SampleTooSmall {
            required: 5,
            actual: distances.len(),
        });
    }
    let z = distances
        .iter()
        .map(|&d| wilson_hilferty(d, 2))
        .collect::<Result<Vec<_>>>()?;
    let d = ks_statistic(&z, norm_cdf);
    let p = ks_pvalue(d, z.len());
    Ok((z, d, p))
}

pub fn gof_report(theta: &BrbsParams, sample: &BivariateSample) -> Result<GofReport> {
    let distances = mahalanobis_distances(theta, sample)?;
    let (transformed, ks_statistic, ks_pvalue) = wh_transform_ks(&distances)?;
    Ok(GofReport {
        distances,
        transformed,
        ks_statistic,
        ks_pvalue,
    })
}

/// PP coordinates (i/(n+1), F(t₍ᵢ₎)) with KS bands, plus the QQ set.
pub fn pp_data(marginal: &RbsParams, column: &[f64], band_level: f64) -> Result<PpData> {
    if column.len() < 2 {
        return Err(BrbsError::SampleTooSmall {
            required: 2,
            actual: column.len(),
        });
    }
    let mut v = column.to_vec();
    if v.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(BrbsError::domain(
            "PP data needs positive finite observations",
        ));
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let half = ks_critical(n, band_level)?;
    let mut pp_points = Vec::with_capacity(n);
    let mut bands = Vec::with_capacity(n);
    let mut qq_points = Vec::with_capacity(n);
    for (i, &t) in v.iter().enumerate() {
        let e = (i + 1) as f64 / (n + 1) as f64;
        pp_points.push((e, marginal.cdf(t)?));
        bands.push(((e - half).max(0.0), (e + half).min(1.0)));
        qq_points.push((marginal.a_inverse(norm_quantile(e)), t));
    }
    Ok(PpData {
        pp_points,
        bands,
        qq_points,
        band_level,
    })
}

/// Scaled total time on test curve (k/n, Wₙ(k/n)), k = 1..n.
pub fn ttt_data(column: &[f64]) -> Result<Vec<(f64, f64)>> {
    if column.len() < 2 {
        return Err(BrbsError::SampleTooSmall {
            required: 2,
            actual: column.len(),
        });
    }
    if column.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(BrbsError::domain(
            "TTT data needs positive finite observations",
        ));
    }
    let mut v = column.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let total: f64 = v.iter().sum();
    let mut partial = 0.0;
    Ok(v.iter()
        .enumerate()
        .map(|(i, &t)| {
            let k = i + 1;
            partial += t;
            let w = if k == n {
                1.0
            } else {
                (partial + (n - k) as f64 * t) / total
            };
            (k as f64 / n as f64, w)
        })
        .collect())
}
