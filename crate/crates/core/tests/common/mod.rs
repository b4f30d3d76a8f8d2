//! Reference computations for the integration tests. Nothing here calls the
//! library's numerics, so agreement is a genuine cross-check.
#![allow(dead_code)]

use std::f64::consts::PI;

pub fn phi(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Φ(x) from the power series 1/2 + φ(x) Σ x^(2k+1)/(2k+1)!! for |x| ≤ 5 and
/// the Laplace continued fraction for the tail beyond.
pub fn norm_cdf(x: f64) -> f64 {
    if x.abs() <= 5.0 {
        let mut term = x;
        let mut sum = x;
        let mut k = 1.0;
        while term.abs() > 1e-17 * sum.abs().max(1e-300) {
            term *= x * x / (2.0 * k + 1.0);
            sum += term;
            k += 1.0;
        }
        0.5 + phi(x) * sum
    } else {
        let z = x.abs();
        // Q(z) = φ(z) / (z + 1/(z + 2/(z + 3/(z + ...))))
        let mut frac = z;
        for k in (1..200).rev() {
            frac = z + k as f64 / frac;
        }
        let q = phi(z) / frac;
        if x > 0.0 {
            1.0 - q
        } else {
            q
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Adaptive Simpson quadrature on [a, b].
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    // pre-split so narrow peaks are not missed by the first coarse estimate
    let pieces = 64;
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|i| {
            let (x0, x1) = (a + i as f64 * h, a + (i + 1) as f64 * h);
            let (f0, f1, fm) = (f(x0), f(x1), f(0.5 * (x0 + x1)));
            let whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
            simpson_step(&f, x0, x1, f0, fm, f1, whole, tol / pieces as f64, 40)
        })
        .sum()
}

/// Φ₂(h, k; ρ) = ∫_{-∞}^{h} φ(x) Φ((k − ρx)/√(1−ρ²)) dx.
pub fn bvn_cdf(h: f64, k: f64, rho: f64) -> f64 {
    let s = (1.0 - rho * rho).sqrt();
    let lo = -12.0f64;
    if h <= lo {
        return 0.0;
    }
    simpson(
        |x| phi(x) * norm_cdf((k - rho * x) / s),
        lo,
        h.min(12.0),
        1e-14,
    )
}

/// a(t) = (√(t/β) − √(β/t))/α from classical parameters.
pub fn a(t: f64, alpha: f64, beta: f64) -> f64 {
    ((t / beta).sqrt() - (beta / t).sqrt()) / alpha
}

/// Inverse of `a`.
pub fn a_inv(s: f64, alpha: f64, beta: f64) -> f64 {
    let x = alpha * s;
    0.25 * beta * (x + (x * x + 4.0).sqrt()).powi(2)
}

/// Birnbaum–Saunders density in classical parameters, written out directly.
pub fn bs_pdf(t: f64, alpha: f64, beta: f64) -> f64 {
    let z = a(t, alpha, beta);
    let da = ((t / beta).sqrt() + (beta / t).sqrt()) / (2.0 * alpha * t);
    phi(z) * da
}

/// Classical (α, β) from mean and precision.
pub fn classical(mu: f64, delta: f64) -> (f64, f64) {
    ((2.0 / delta).sqrt(), mu * delta / (delta + 1.0))
}

/// Sorted-sample KS distance against a continuous CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(data: &[f64], cdf: F) -> f64 {
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

/// Asymptotic 1% KS critical value 1.6276/√n.
pub fn ks_crit_1pct(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn var(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
}
