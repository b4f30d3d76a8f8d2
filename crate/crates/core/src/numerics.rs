//! Scalar special functions, the bivariate normal CDF and quadrature helpers.

use std::collections::HashMap;
use std::f64::consts::{PI, SQRT_2};
use std::sync::{Arc, Mutex, OnceLock};

use libm::erfc;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc_inv;
use statrs::function::gamma::gamma_lr;

use crate::error::{BrbsError, Result};

pub const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Half-width of the truncated real line used for expectations over N(0, 1).
/// φ(38.5) is below the smallest normal double.
pub const Z_MAX: f64 = 38.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    node_count: usize,
    abs_tol: f64,
    rel_tol: f64,
}

impl QuadratureSpec {
    pub fn new(node_count: usize, abs_tol: f64, rel_tol: f64) -> Result<Self> {
        if node_count < 16 {
            return Err(BrbsError::domain(format!(
                "quadrature node_count must be at least 16, got {node_count}"
            )));
        }
        if !(abs_tol > 0.0 && abs_tol.is_finite()) || !(rel_tol > 0.0 && rel_tol.is_finite()) {
            return Err(BrbsError::domain("quadrature tolerances must be positive"));
        }
        Ok(Self {
            node_count,
            abs_tol,
            rel_tol,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn abs_tol(&self) -> f64 {
        self.abs_tol
    }

    pub fn rel_tol(&self) -> f64 {
        self.rel_tol
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            node_count: 128,
            abs_tol: 1e-10,
            rel_tol: 1e-10,
        }
    }
}

fn check_finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(BrbsError::domain(format!("{name} must be finite, got {x}")))
    }
}

#[inline]
pub(crate) fn phi(z: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * z * z).exp()
}

#[inline]
pub(crate) fn norm_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// ln Φ(−x), accurate far into the upper tail where Φ(−x) underflows.
pub(crate) fn ln_norm_sf(x: f64) -> f64 {
    if x < 30.0 {
        norm_cdf(-x).ln()
    } else {
        let r = 1.0 / (x * x);
        -0.5 * x * x - LN_SQRT_2PI - x.ln() + (1.0 - r + 3.0 * r * r - 15.0 * r * r * r).ln()
    }
}

pub(crate) fn norm_quantile(p: f64) -> f64 {
    let mut x = -SQRT_2 * erfc_inv(2.0 * p);
    // one Newton step tightens erfc_inv's last few ulps
    let d = phi(x);
    if d > 1e-300 && x.is_finite() {
        x -= (norm_cdf(x) - p) / d;
    }
    x
}

pub fn std_normal_pdf(z: f64) -> Result<f64> {
    check_finite("z", z)?;
    Ok(phi(z))
}

pub fn std_normal_cdf(z: f64) -> Result<f64> {
    if z.is_nan() {
        return Err(BrbsError::domain("z must not be NaN"));
    }
    if z == f64::INFINITY {
        return Ok(1.0);
    }
    if z == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    Ok(norm_cdf(z))
}

pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(BrbsError::domain(format!(
            "probability must lie in (0, 1), got {p}"
        )));
    }
    Ok(norm_quantile(p))
}

fn check_rho(rho: f64) -> Result<()> {
    if rho.is_finite() && rho.abs() < 1.0 {
        Ok(())
    } else {
        Err(BrbsError::domain(format!(
            "correlation must lie in (-1, 1), got {rho}"
        )))
    }
}

pub fn bvn_pdf(u: f64, v: f64, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    check_finite("u", u)?;
    check_finite("v", v)?;
    Ok(ln_bvn_pdf(u, v, rho).exp())
}

#[inline]
pub(crate) fn ln_bvn_pdf(u: f64, v: f64, rho: f64) -> f64 {
    let om = (1.0 - rho) * (1.0 + rho);
    let q = (u * u - 2.0 * rho * u * v + v * v) / om;
    -2.0 * LN_SQRT_2PI - 0.5 * om.ln() - 0.5 * q
}

/// P(U ≤ h, V ≤ k) for a standard bivariate normal pair with correlation `rho`.
pub fn bvn_cdf(h: f64, k: f64, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    if h.is_nan() || k.is_nan() {
        return Err(BrbsError::domain("bvn_cdf limits must not be NaN"));
    }
    Ok(bvn_lower(h, k, rho))
}

pub(crate) fn bvn_lower(h: f64, k: f64, rho: f64) -> f64 {
    if h == f64::NEG_INFINITY || k == f64::NEG_INFINITY {
        return 0.0;
    }
    if h == f64::INFINITY {
        return if k == f64::INFINITY { 1.0 } else { norm_cdf(k) };
    }
    if k == f64::INFINITY {
        return norm_cdf(h);
    }
    bvnd(-h, -k, rho).clamp(0.0, 1.0)
}

/// P(U > h, V > k), computed directly rather than through 1 − F₁ − F₂ + F.
pub(crate) fn bvn_upper(h: f64, k: f64, rho: f64) -> f64 {
    bvn_lower(-h, -k, rho)
}

// Gauss–Legendre (weight, abscissa) half-tables used by Genz's BVND.
#[allow(clippy::excessive_precision)]
const GL6: [(f64, f64); 3] = [
    (0.1713244923791705, -0.9324695142031522),
    (0.3607615730481384, -0.6612093864662647),
    (0.4679139345726904, -0.2386191860831970),
];
#[allow(clippy::excessive_precision)]
const GL12: [(f64, f64); 6] = [
    (0.4717533638651177e-01, -0.9815606342467191),
    (0.1069393259953183, -0.9041172563704750),
    (0.1600783285433464, -0.7699026741943050),
    (0.2031674267230659, -0.5873179542866171),
    (0.2334925365383547, -0.3678314989981802),
    (0.2491470458134029, -0.1252334085114692),
];
#[allow(clippy::excessive_precision)]
const GL20: [(f64, f64); 10] = [
    (0.1761400713915212e-01, -0.9931285991850949),
    (0.4060142980038694e-01, -0.9639719272779138),
    (0.6267204833410906e-01, -0.9122344282513259),
    (0.8327674157670475e-01, -0.8391169718222188),
    (0.1019301198172404, -0.7463319064601508),
    (0.1181945319615184, -0.6360536807265150),
    (0.1316886384491766, -0.5108670019508271),
    (0.1420961093183821, -0.3737060887154196),
    (0.1491729864726037, -0.2277858511416451),
    (0.1527533871307259, -0.7652652113349733e-01),
];

/// Genz's BVND: upper orthant probability P(X > dh, Y > dk), finite arguments.
fn bvnd(dh: f64, dk: f64, r: f64) -> f64 {
    let quad: &[(f64, f64)] = if r.abs() < 0.3 {
        &GL6
    } else if r.abs() < 0.75 {
        &GL12
    } else {
        &GL20
    };
    let h = dh;
    let mut k = dk;
    let mut hk = h * k;
    let mut bvn = 0.0;
    if r.abs() < 0.925 {
        if r != 0.0 {
            let hs = 0.5 * (h * h + k * k);
            let asr = r.asin();
            for &(w, x) in quad {
                for sx in [x, -x] {
                    let sn = (0.5 * asr * (sx + 1.0)).sin();
                    bvn += w * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
                }
            }
            bvn *= asr / (4.0 * PI);
        }
        return bvn + norm_cdf(-h) * norm_cdf(-k);
    }

    if r < 0.0 {
        k = -k;
        hk = -hk;
    }
    if r.abs() < 1.0 {
        let as_ = (1.0 - r) * (1.0 + r);
        let mut a = as_.sqrt();
        let bs = (h - k) * (h - k);
        let c = (4.0 - hk) / 8.0;
        let d = (12.0 - hk) / 16.0;
        bvn = a
            * (-0.5 * (bs / as_ + hk)).exp()
            * (1.0 - c * (bs - as_) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as_ * as_ / 5.0);
        if hk > -160.0 {
            let b = bs.sqrt();
            bvn -= (-0.5 * hk).exp()
                * (2.0 * PI).sqrt()
                * norm_cdf(-b / a)
                * b
                * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
        }
        a *= 0.5;
        for &(w, x) in quad {
            for sx in [x, -x] {
                let xs = (a * (sx + 1.0)).powi(2);
                let rs = (1.0 - xs).sqrt();
                let t1 = (-0.5 * bs / xs - hk / (1.0 + rs)).exp() / rs;
                let t2 = (-0.5 * (bs / xs + hk)).exp() * (1.0 + c * xs * (1.0 + d * xs));
                bvn += a * w * (t1 - t2);
            }
        }
        bvn = -bvn / (2.0 * PI);
    }
    if r > 0.0 {
        bvn + norm_cdf(-h.max(k))
    } else {
        -bvn + (norm_cdf(-h) - norm_cdf(-k)).max(0.0)
    }
}

/// Regularized lower incomplete gamma P(dof/2, x/2).
pub fn chi2_cdf(x: f64, dof: u32) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(BrbsError::domain(format!(
            "chi-square argument must be >= 0, got {x}"
        )));
    }
    if dof == 0 {
        return Err(BrbsError::domain("degrees of freedom must be positive"));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    Ok(gamma_lr(f64::from(dof) / 2.0, x / 2.0))
}

pub fn wilson_hilferty(d: f64, dof: u32) -> Result<f64> {
    if d.is_nan() || d < 0.0 {
        return Err(BrbsError::domain(format!("distance must be >= 0, got {d}")));
    }
    if dof == 0 {
        return Err(BrbsError::domain("degrees of freedom must be positive"));
    }
    let k = f64::from(dof);
    Ok(((d / k).cbrt() - (1.0 - 2.0 / (9.0 * k))) * (4.5 * k).sqrt())
}

type Rule = Arc<Vec<(f64, f64)>>;

/// Gauss–Legendre nodes and weights on [−1, 1], cached per order.
pub(crate) fn gauss_legendre(n: usize) -> Rule {
    static CACHE: OnceLock<Mutex<HashMap<usize, Rule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(n)
        .or_insert_with(|| Arc::new(legendre_rule(n)))
        .clone()
}

fn legendre_rule(n: usize) -> Vec<(f64, f64)> {
    let nf = n as f64;
    let mut out = Vec::with_capacity(n);
    for i in 1..=n {
        let mut x = (PI * (i as f64 - 0.25) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((x, w));
    }
    out
}

fn apply_rule<F: Fn(f64) -> f64>(f: &F, rule: &[(f64, f64)], a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for &(x, w) in rule {
        acc += w * f(mid + half * x);
    }
    acc * half
}

/// Adaptive Gauss–Legendre integration of `f` over the finite interval [a, b].
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<f64> {
    integrate_with_breaks(&f, &[a, b], spec)
}

fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: &F,
    breaks: &[f64],
    spec: &QuadratureSpec,
) -> Result<f64> {
    let (a, b) = (breaks[0], breaks[breaks.len() - 1]);
    if !a.is_finite() || !b.is_finite() {
        return Err(BrbsError::domain("integration limits must be finite"));
    }
    if a == b {
        return Ok(0.0);
    }
    let rule = gauss_legendre(spec.node_count);
    let budget = spec.node_count * 4096;
    let total_width = (b - a).abs();
    let mut evals = 0usize;
    let mut sum = CompensatedSum::default();
    let mut residual = 0.0;
    let mut stack: Vec<(f64, f64, f64)> = Vec::new();
    for w in breaks.windows(2) {
        let whole = apply_rule(f, &rule, w[0], w[1]);
        evals += spec.node_count;
        stack.push((w[0], w[1], whole));
    }
    while let Some((lo, hi, whole)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = apply_rule(f, &rule, lo, mid);
        let right = apply_rule(f, &rule, mid, hi);
        evals += 2 * spec.node_count;
        let refined = left + right;
        if !refined.is_finite() {
            return Err(BrbsError::numerical(
                format!("non-finite integrand on [{lo}, {hi}]"),
                f64::INFINITY,
            ));
        }
        let err = (refined - whole).abs();
        let local_abs = spec.abs_tol * (hi - lo).abs() / total_width;
        let tiny = (hi - lo).abs() <= 1e-13 * (1.0 + mid.abs());
        if err <= local_abs.max(spec.rel_tol * refined.abs()) || tiny {
            sum.add(refined);
            residual += err;
            continue;
        }
        if evals > budget {
            residual += err;
            return Err(BrbsError::numerical(
                "adaptive quadrature exhausted its node budget",
                residual,
            ));
        }
        stack.push((lo, mid, left));
        stack.push((mid, hi, right));
    }
    Ok(sum.value())
}

/// ∫_{lo}^{hi} g(z) φ(z) dz with the limits clipped to [−Z_MAX, Z_MAX].
pub fn integrate_normal_weighted<F: Fn(f64) -> f64>(
    g: F,
    lo: f64,
    hi: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if lo.is_nan() || hi.is_nan() {
        return Err(BrbsError::domain("integration limits must not be NaN"));
    }
    let lo = lo.max(-Z_MAX);
    let hi = hi.min(Z_MAX);
    if lo >= hi {
        return Ok(0.0);
    }
    let mut breaks = vec![lo];
    for p in [-8.0, 0.0, 8.0] {
        if p > lo && p < hi {
            breaks.push(p);
        }
    }
    breaks.push(hi);
    let h = |z: f64| g(z) * phi(z);
    integrate_with_breaks(&h, &breaks, spec)
}

/// E[g(Z)] for Z ~ N(0, 1).
pub fn expect_over_standard_normal<F: Fn(f64) -> f64>(g: F, spec: &QuadratureSpec) -> Result<f64> {
    integrate_normal_weighted(g, -Z_MAX, Z_MAX, spec)
}

/// Central-difference gradient with per-coordinate steps.
pub fn fd_gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], steps: &[f64]) -> Vec<f64> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            xp[i] = x[i] + steps[i];
            let fp = f(&xp);
            xp[i] = x[i] - steps[i];
            let fm = f(&xp);
            xp[i] = x[i];
            (fp - fm) / (2.0 * steps[i])
        })
        .collect()
}

/// Central-difference Hessian with per-coordinate steps; exact for quadratics
/// up to rounding.
pub fn fd_hessian<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], steps: &[f64]) -> Vec<Vec<f64>> {
    let d = x.len();
    let f0 = f(x);
    let mut h = vec![vec![0.0; d]; d];
    let mut xp = x.to_vec();
    for i in 0..d {
        xp[i] = x[i] + steps[i];
        let fp = f(&xp);
        xp[i] = x[i] - steps[i];
        let fm = f(&xp);
        xp[i] = x[i];
        h[i][i] = (fp - 2.0 * f0 + fm) / (steps[i] * steps[i]);
        for j in 0..i {
            let mut corner = |si: f64, sj: f64| {
                xp[i] = x[i] + si * steps[i];
                xp[j] = x[j] + sj * steps[j];
                let v = f(&xp);
                xp[i] = x[i];
                xp[j] = x[j];
                v
            };
            let v = (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0) + corner(-1.0, -1.0))
                / (4.0 * steps[i] * steps[j]);
            h[i][j] = v;
            h[j][i] = v;
        }
    }
    h
}

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}
