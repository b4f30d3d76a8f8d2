//! Bivariate reparameterized Birnbaum–Saunders distribution.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{BrbsError, Result};
use crate::numerics::{
    bvn_lower, bvn_upper, expect_over_standard_normal, integrate, integrate_normal_weighted,
    ln_bvn_pdf, ln_norm_sf, norm_cdf, phi, QuadratureSpec, Z_MAX,
};
use crate::rbs::RbsParams;

/// Threshold used by the unimodality hypothesis.
pub const TAU0: f64 = 9.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Margin {
    First,
    Second,
}

impl Margin {
    pub fn other(self) -> Self {
        match self {
            Margin::First => Margin::Second,
            Margin::Second => Margin::First,
        }
    }
}

/// Which coordinates to invert in [`BrbsParams::reciprocal_params`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reciprocal {
    Both,
    First,
    Second,
}

/// Conditioning event on T₂ for the conditional reliability functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Conditioning {
    /// T₂ > t₂
    Exceeds,
    /// T₂ = t₂
    Equals,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBrbs", into = "RawBrbs")]
pub struct BrbsParams {
    margin1: RbsParams,
    margin2: RbsParams,
    rho: f64,
}

#[derive(Serialize, Deserialize)]
struct RawBrbs {
    mu1: f64,
    mu2: f64,
    delta1: f64,
    delta2: f64,
    rho: f64,
}

impl TryFrom<RawBrbs> for BrbsParams {
    type Error = BrbsError;
    fn try_from(r: RawBrbs) -> Result<Self> {
        BrbsParams::new(r.mu1, r.mu2, r.delta1, r.delta2, r.rho)
    }
}

impl From<BrbsParams> for RawBrbs {
    fn from(p: BrbsParams) -> Self {
        RawBrbs {
            mu1: p.margin1.mu(),
            mu2: p.margin2.mu(),
            delta1: p.margin1.delta(),
            delta2: p.margin2.delta(),
            rho: p.rho,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeResult {
    pub c: f64,
    pub t1: f64,
    pub t2: f64,
    /// ‖∇ ln f‖ with respect to (ln t₁, ln t₂), i.e. the gradient relative to
    /// the density value.
    pub gradient_norm: f64,
    pub hypothesis1_holds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hypothesis1Report {
    /// ρ < min(α₂/α₁, α₁/α₂)
    pub condition1: bool,
    /// α₁ > τ₀/(1−ρ²)·max(1/α₁ − ρ/α₂, 1/α₂ − ρ/α₁)
    pub condition2: bool,
    /// The same bound applied to α₂; informational only.
    pub condition2_alpha2: bool,
    pub holds: bool,
}

impl BrbsParams {
    pub fn new(mu1: f64, mu2: f64, delta1: f64, delta2: f64, rho: f64) -> Result<Self> {
        Self::from_margins(
            RbsParams::new(mu1, delta1)?,
            RbsParams::new(mu2, delta2)?,
            rho,
        )
    }

    pub fn from_margins(margin1: RbsParams, margin2: RbsParams, rho: f64) -> Result<Self> {
        if !(rho.is_finite() && rho.abs() < 1.0) {
            return Err(BrbsError::domain(format!(
                "rho must lie in (-1, 1), got {rho}"
            )));
        }
        Ok(Self {
            margin1,
            margin2,
            rho,
        })
    }

    pub fn margin1(&self) -> &RbsParams {
        &self.margin1
    }

    pub fn margin2(&self) -> &RbsParams {
        &self.margin2
    }

    pub fn margin(&self, m: Margin) -> &RbsParams {
        match m {
            Margin::First => &self.margin1,
            Margin::Second => &self.margin2,
        }
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// (μ₁, μ₂, δ₁, δ₂, ρ)
    pub fn to_array(&self) -> [f64; 5] {
        [
            self.margin1.mu(),
            self.margin2.mu(),
            self.margin1.delta(),
            self.margin2.delta(),
            self.rho,
        ]
    }

    pub fn with_rho(&self, rho: f64) -> Result<Self> {
        Self::from_margins(self.margin1, self.margin2, rho)
    }

    #[inline]
    fn s(&self) -> f64 {
        ((1.0 - self.rho) * (1.0 + self.rho)).sqrt()
    }

    /// (a_j(t) − ρ a_k(w)) / √(1−ρ²) where k is the other margin.
    pub fn c_fn(&self, j: Margin, t: f64, w: f64) -> Result<f64> {
        let aj = self.margin(j).a_transform(t)?;
        let ak = self.margin(j.other()).a_transform(w)?;
        Ok((aj - self.rho * ak) / self.s())
    }

    #[inline]
    fn c_raw(&self, aj: f64, ak: f64) -> f64 {
        (aj - self.rho * ak) / self.s()
    }

    fn scores(&self, t1: f64, t2: f64) -> Result<(f64, f64)> {
        Ok((self.margin1.a_transform(t1)?, self.margin2.a_transform(t2)?))
    }

    pub(crate) fn ln_pdf_unchecked(&self, t1: f64, t2: f64) -> f64 {
        ln_bvn_pdf(self.margin1.a(t1), self.margin2.a(t2), self.rho)
            + self.margin1.ln_a1(t1)
            + self.margin2.ln_a1(t2)
    }

    pub fn ln_pdf(&self, t1: f64, t2: f64) -> Result<f64> {
        self.scores(t1, t2)?;
        Ok(self.ln_pdf_unchecked(t1, t2))
    }

    pub fn pdf(&self, t1: f64, t2: f64) -> Result<f64> {
        Ok(self.ln_pdf(t1, t2)?.exp())
    }

    pub fn cdf(&self, t1: f64, t2: f64) -> Result<f64> {
        let (z1, z2) = self.scores(t1, t2)?;
        Ok(bvn_lower(z1, z2, self.rho))
    }

    /// P(T₁ > t₁, T₂ > t₂), evaluated as the upper orthant of Φ₂ (algebraically
    /// the inclusion–exclusion identity, without its cancellation).
    pub fn sf(&self, t1: f64, t2: f64) -> Result<f64> {
        let (z1, z2) = self.scores(t1, t2)?;
        Ok(bvn_upper(z1, z2, self.rho))
    }

    /// The same survival function by one-dimensional quadrature of
    /// f₁(w){1 − Φ(c₂,₁(t₂, w))} over w > t₁.
    pub fn sf_integral(&self, t1: f64, t2: f64, spec: &QuadratureSpec) -> Result<f64> {
        let (z1, z2) = self.scores(t1, t2)?;
        integrate_normal_weighted(|z| norm_cdf(-self.c_raw(z2, z)), z1, Z_MAX, spec)
    }

    /// Bivariate hazard f(t₁,t₂)/S(t₁,t₂).
    pub fn hazard(&self, t1: f64, t2: f64) -> Result<f64> {
        let lp = self.ln_pdf(t1, t2)?;
        let s = self.sf(t1, t2)?;
        if s <= 0.0 {
            return Err(BrbsError::numerical(
                format!("survival function underflows at ({t1}, {t2})"),
                s,
            ));
        }
        Ok((lp - s.ln()).exp())
    }

    /// Density of T₁ given T₂ = t₂.
    pub fn conditional_pdf(&self, t1: f64, t2: f64) -> Result<f64> {
        let (z1, z2) = self.scores(t1, t2)?;
        let s = self.s();
        Ok(phi(self.c_raw(z1, z2)) * self.margin1.a1(t1) / s)
    }

    /// E[T₁ | T₂ = t₂], the mean of a₁⁻¹(X) with X ~ N(ρa₂(t₂), 1−ρ²).
    pub fn conditional_mean(&self, t2: f64, spec: &QuadratureSpec) -> Result<f64> {
        let z2 = self.margin2.a_transform(t2)?;
        expect_a_inverse_normal(self.rho * z2, self.s(), &self.margin1, spec)
    }

    /// R = P(T₁ < T₂) = E[Φ(−c₂,₁(T₁, T₁))], integrated over z = a₁(T₁).
    pub fn reliability(&self, spec: &QuadratureSpec) -> Result<f64> {
        let m1 = self.margin1;
        let m2 = self.margin2;
        integrate_normal_weighted(
            |z| {
                let t = m1.a_inverse(z);
                norm_cdf(-self.c_raw(m2.a(t), z))
            },
            -Z_MAX,
            Z_MAX,
            spec,
        )
    }

    /// E[T₁T₂]. Writing Tₖ = βₖ(1 + αₖ²Zₖ²/2 + αₖgₖ(Zₖ)) with
    /// gₖ(z) = z√(1 + αₖ²z²/4), the even part has the closed form
    /// (β₁β₂/4)[4 + 2(α₁²+α₂²) + α₁²α₂²(1+2ρ²)]; the cross term
    /// β₁β₂α₁α₂E[g₁(Z₁)g₂(Z₂)] vanishes only at ρ = 0 and is integrated
    /// numerically.
    pub fn product_moment(&self, spec: &QuadratureSpec) -> Result<f64> {
        let (a1, b1) = self.margin1.to_classical();
        let (a2, b2) = self.margin2.to_classical();
        let (q1, q2) = (a1 * a1, a2 * a2);
        let even = 0.25 * (4.0 + 2.0 * (q1 + q2) + q1 * q2 * (1.0 + 2.0 * self.rho * self.rho));
        let cross = if self.rho == 0.0 {
            0.0
        } else {
            let (rho, s) = (self.rho, self.s());
            let inner = |z1: f64| {
                expect_over_standard_normal(|u| odd_part(a2, rho * z1 + s * u), spec)
                    .unwrap_or(f64::NAN)
            };
            let e = expect_over_standard_normal(|z1| odd_part(a1, z1) * inner(z1), spec)?;
            if !e.is_finite() {
                return Err(BrbsError::numerical(
                    "cross moment quadrature failed",
                    f64::NAN,
                ));
            }
            a1 * a2 * e
        };
        Ok(b1 * b2 * (even + cross))
    }

    pub fn covariance(&self, spec: &QuadratureSpec) -> Result<f64> {
        Ok(self.product_moment(spec)? - self.margin1.mu() * self.margin2.mu())
    }

    pub fn correlation(&self, spec: &QuadratureSpec) -> Result<f64> {
        let v = self.margin1.variance() * self.margin2.variance();
        Ok(self.covariance(spec)? / v.sqrt())
    }

    fn theta(&self, j: Margin) -> f64 {
        let aj = self.margin(j).alpha();
        let ak = self.margin(j.other()).alpha();
        (1.0 / aj - self.rho / ak) / (1.0 - self.rho * self.rho)
    }

    /// Coefficients (b, c, d) of the monic cubic c³ + bc² + cc + d whose
    /// positive root locates the critical point along t = cβ. `First` gives
    /// p(c), `Second` gives q(c).
    pub fn mode_cubic(&self, j: Margin) -> [f64; 3] {
        let r = self.margin(j).alpha() / self.theta(j);
        [1.0 + r, 3.0 * r - 1.0, -1.0]
    }

    pub fn hypothesis1_check(&self) -> Hypothesis1Report {
        let a1 = self.margin1.alpha();
        let a2 = self.margin2.alpha();
        let rho = self.rho;
        let condition1 = rho < (a2 / a1).min(a1 / a2);
        let bound = TAU0 / (1.0 - rho * rho) * (1.0 / a1 - rho / a2).max(1.0 / a2 - rho / a1);
        let condition2 = a1 > bound;
        let condition2_alpha2 = a2 > bound;
        Hypothesis1Report {
            condition1,
            condition2,
            condition2_alpha2,
            holds: condition1 && condition2,
        }
    }

    /// Critical point of the joint density along the ray (cβ₁, cβ₂).
    ///
    /// Both cubics are solved and must share their positive root; when they
    /// have several positive roots the one with the largest density is kept.
    pub fn mode_find(&self) -> Result<ModeResult> {
        let pick = |j: Margin| -> Result<f64> {
            let [b, c, d] = self.mode_cubic(j);
            let roots: Vec<f64> = cubic_real_roots(b, c, d)
                .into_iter()
                .filter(|&r| r > 0.0)
                .collect();
            roots
                .into_iter()
                .map(|c| {
                    let v = self.ln_pdf_unchecked(c * self.margin1.beta(), c * self.margin2.beta());
                    (c, v)
                })
                .max_by(|x, y| x.1.total_cmp(&y.1))
                .map(|x| x.0)
                .ok_or_else(|| BrbsError::Inconsistent("mode cubic has no positive root".into()))
        };
        let cp = pick(Margin::First)?;
        let cq = pick(Margin::Second)?;
        if (cp - cq).abs() > 1e-8 {
            return Err(BrbsError::Inconsistent(format!(
                "the two stationarity cubics disagree: {cp} vs {cq}"
            )));
        }
        let t1 = cp * self.margin1.beta();
        let t2 = cp * self.margin2.beta();
        Ok(ModeResult {
            c: cp,
            t1,
            t2,
            gradient_norm: self.log_gradient_norm(t1, t2),
            hypothesis1_holds: self.hypothesis1_check().holds,
        })
    }

    /// ‖∇ ln f‖ in (ln t₁, ln t₂) by central differences.
    pub fn log_gradient_norm(&self, t1: f64, t2: f64) -> f64 {
        let h = 1e-5;
        let f = |u1: f64, u2: f64| self.ln_pdf_unchecked(u1.exp(), u2.exp());
        let (u1, u2) = (t1.ln(), t2.ln());
        let g1 = (f(u1 + h, u2) - f(u1 - h, u2)) / (2.0 * h);
        let g2 = (f(u1, u2 + h) - f(u1, u2 - h)) / (2.0 * h);
        g1.hypot(g2)
    }

    /// S(t₁,t₂)/E[T₁T₂]. Use [`Equilibrium`] to evaluate many points, since
    /// the product moment is recomputed on every call here.
    pub fn equilibrium_pdf(&self, t1: f64, t2: f64, spec: &QuadratureSpec) -> Result<f64> {
        Equilibrium::new(*self, spec)?.pdf(t1, t2)
    }

    /// Local dependence ∂² ln f/∂t₁∂t₂ = ρ/(1−ρ²) a₁′(t₁) a₂′(t₂).
    pub fn ldf(&self, t1: f64, t2: f64) -> Result<f64> {
        self.scores(t1, t2)?;
        Ok(self.rho / (1.0 - self.rho * self.rho) * self.margin1.a1(t1) * self.margin2.a1(t2))
    }

    /// Parameters of (1/T₁, 1/T₂), (1/T₁, T₂) or (T₁, 1/T₂).
    pub fn reciprocal_params(&self, which: Reciprocal) -> Self {
        let (m1, m2, rho) = match which {
            Reciprocal::Both => (
                self.margin1.reciprocal(),
                self.margin2.reciprocal(),
                self.rho,
            ),
            Reciprocal::First => (self.margin1.reciprocal(), self.margin2, -self.rho),
            Reciprocal::Second => (self.margin1, self.margin2.reciprocal(), -self.rho),
        };
        Self {
            margin1: m1,
            margin2: m2,
            rho,
        }
    }

    /// Survival function of T₁ under the conditioning event on T₂.
    pub fn conditional_sf(&self, t1: f64, t2: f64, cond: Conditioning) -> Result<f64> {
        let (z1, z2) = self.scores(t1, t2)?;
        match cond {
            Conditioning::Exceeds => {
                let p = norm_cdf(-z2);
                check_event(p, t2)?;
                Ok(bvn_upper(z1, z2, self.rho) / p)
            }
            Conditioning::Equals => Ok(norm_cdf(-self.c_raw(z1, z2))),
        }
    }

    /// Hazard of T₁ under the conditioning event on T₂.
    pub fn conditional_hazard(&self, t1: f64, t2: f64, cond: Conditioning) -> Result<f64> {
        let (z1, z2) = self.scores(t1, t2)?;
        match cond {
            Conditioning::Exceeds => {
                check_event(norm_cdf(-z2), t2)?;
                let s = bvn_upper(z1, z2, self.rho);
                check_event(s, t1)?;
                let num = self.margin1.ln_pdf_unchecked(t1) + ln_norm_sf(self.c_raw(z2, z1));
                Ok((num - s.ln()).exp())
            }
            Conditioning::Equals => {
                let c = self.c_raw(z1, z2);
                let ln_f =
                    -0.5 * c * c - 0.5 * (2.0 * PI).ln() + self.margin1.ln_a1(t1) - self.s().ln();
                Ok((ln_f - ln_norm_sf(c)).exp())
            }
        }
    }

    /// Mean residual life of T₁ at t₁ under the conditioning event on T₂.
    pub fn conditional_mrf(
        &self,
        t1: f64,
        t2: f64,
        cond: Conditioning,
        spec: &QuadratureSpec,
    ) -> Result<f64> {
        let (z1, z2) = self.scores(t1, t2)?;
        let m1 = self.margin1;
        let jac = |z: f64| 1.0 / m1.a1(m1.a_inverse(z));
        let (num, den) = match cond {
            Conditioning::Exceeds => {
                check_event(norm_cdf(-z2), t2)?;
                let den = bvn_upper(z1, z2, self.rho);
                check_event(den, t1)?;
                let hi = Z_MAX.max(z1 + 1.0);
                let num = integrate_tail(|z| bvn_upper(z, z2, self.rho) * jac(z), z1, hi, spec)?;
                (num, den)
            }
            Conditioning::Equals => {
                let den = norm_cdf(-self.c_raw(z1, z2));
                check_event(den, t1)?;
                // Φ(−c) is negligible once c exceeds Z_MAX
                let hi = (Z_MAX * self.s() + self.rho * z2).max(z1 + 1.0);
                let num = integrate_tail(|z| norm_cdf(-self.c_raw(z, z2)) * jac(z), z1, hi, spec)?;
                (num, den)
            }
        };
        Ok(num / den)
    }
}

/// Equilibrium density S(t₁,t₂)/E[T₁T₂] with the product moment computed once.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    params: BrbsParams,
    product_moment: f64,
}

impl Equilibrium {
    pub fn new(params: BrbsParams, spec: &QuadratureSpec) -> Result<Self> {
        Ok(Self {
            params,
            product_moment: params.product_moment(spec)?,
        })
    }

    pub fn product_moment(&self) -> f64 {
        self.product_moment
    }

    pub fn pdf(&self, t1: f64, t2: f64) -> Result<f64> {
        Ok(self.params.sf(t1, t2)? / self.product_moment)
    }
}

fn integrate_tail<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, spec: &QuadratureSpec) -> Result<f64> {
    // split the range so the bulk near lo gets its own panels
    let mid = (lo + 8.0).min(hi);
    let head = integrate(&f, lo, mid, spec)?;
    let tail = if mid < hi {
        integrate(&f, mid, hi, spec)?
    } else {
        0.0
    };
    Ok(head + tail)
}

fn check_event(p: f64, at: f64) -> Result<()> {
    if p < 1e-300 {
        Err(BrbsError::numerical(
            format!("conditioning probability underflows at {at}"),
            p,
        ))
    } else {
        Ok(())
    }
}

fn odd_part(alpha: f64, x: f64) -> f64 {
    x * (1.0 + 0.25 * alpha * alpha * x * x).sqrt()
}

/// E[a⁻¹(X)] for X ~ N(b, σ²):
/// β[1 + α²(σ² + b²)/2 + αE[X√(1 + α²X²/4)]]. The last expectation is odd
/// in b and vanishes only at b = 0; σ = 0 gives a⁻¹(b).
pub fn expect_a_inverse_normal(
    b: f64,
    sigma: f64,
    p: &RbsParams,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if !b.is_finite() || !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(BrbsError::domain(format!(
            "need finite b and sigma >= 0, got ({b}, {sigma})"
        )));
    }
    if sigma == 0.0 {
        return Ok(p.a_inverse(b));
    }
    let (a, beta) = p.to_classical();
    let odd = if b == 0.0 {
        0.0
    } else {
        expect_over_standard_normal(|z| odd_part(a, b + sigma * z), spec)?
    };
    Ok(beta * (1.0 + 0.5 * a * a * (sigma * sigma + b * b) + a * odd))
}

/// Real roots of x³ + bx² + cx + d, ascending.
pub fn cubic_real_roots(b: f64, c: f64, d: f64) -> Vec<f64> {
    let shift = b / 3.0;
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let disc = -(4.0 * p * p * p + 27.0 * q * q);
    let mut roots = if disc > 0.0 {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let th = arg.acos() / 3.0;
        (0..3)
            .map(|k| m * (th - 2.0 * PI * k as f64 / 3.0).cos() - shift)
            .collect::<Vec<_>>()
    } else {
        let s = (q * q / 4.0 + p * p * p / 27.0).max(0.0).sqrt();
        vec![(-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt() - shift]
    };
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let f = ((*r + b) * *r + c) * *r + d;
            let df = (3.0 * *r + 2.0 * b) * *r + c;
            if df != 0.0 {
                *r -= f / df;
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    roots
}
