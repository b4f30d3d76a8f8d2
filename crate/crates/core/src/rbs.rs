//! Univariate Birnbaum–Saunders distribution in its mean/precision form.

use serde::{Deserialize, Serialize};

use crate::error::{BrbsError, Result};
use crate::numerics::{ln_norm_sf, norm_cdf, norm_quantile, LN_SQRT_2PI};

/// RBS(μ, δ): mean μ > 0 and precision δ > 0. The classical shape and scale
/// are α = √(2/δ) and β = μδ/(δ+1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRbs", into = "RawRbs")]
pub struct RbsParams {
    mu: f64,
    delta: f64,
    alpha: f64,
    beta: f64,
}

#[derive(Serialize, Deserialize)]
struct RawRbs {
    mu: f64,
    delta: f64,
}

impl TryFrom<RawRbs> for RbsParams {
    type Error = BrbsError;
    fn try_from(r: RawRbs) -> Result<Self> {
        RbsParams::new(r.mu, r.delta)
    }
}

impl From<RbsParams> for RawRbs {
    fn from(p: RbsParams) -> Self {
        RawRbs {
            mu: p.mu,
            delta: p.delta,
        }
    }
}

/// First three derivatives of the a-transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ADerivs {
    pub first: f64,
    pub second: f64,
    pub third: f64,
}

impl RbsParams {
    pub fn new(mu: f64, delta: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(BrbsError::domain(format!(
                "mu must be positive and finite, got {mu}"
            )));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(BrbsError::domain(format!(
                "delta must be positive and finite, got {delta}"
            )));
        }
        Ok(Self {
            mu,
            delta,
            alpha: (2.0 / delta).sqrt(),
            beta: mu * delta / (delta + 1.0),
        })
    }

    pub fn from_classical(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) || !(beta > 0.0 && beta.is_finite()) {
            return Err(BrbsError::domain(format!(
                "alpha and beta must be positive and finite, got ({alpha}, {beta})"
            )));
        }
        let delta = 2.0 / (alpha * alpha);
        let mu = beta * (1.0 + 0.5 * alpha * alpha);
        Self::new(mu, delta)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn to_classical(&self) -> (f64, f64) {
        (self.alpha, self.beta)
    }

    #[inline]
    pub(crate) fn a(&self, t: f64) -> f64 {
        (t - self.beta) / (self.alpha * (t * self.beta).sqrt())
    }

    /// ln a′(t) = −ln(2αt) + ln(√(t/β) + √(β/t)).
    #[inline]
    pub(crate) fn ln_a1(&self, t: f64) -> f64 {
        let r = (t / self.beta).sqrt();
        ((r + 1.0 / r) / (2.0 * self.alpha * t)).ln()
    }

    #[inline]
    pub(crate) fn a1(&self, t: f64) -> f64 {
        let r = (t / self.beta).sqrt();
        (r + 1.0 / r) / (2.0 * self.alpha * t)
    }

    pub fn a_transform(&self, t: f64) -> Result<f64> {
        check_t(t)?;
        Ok(self.a(t))
    }

    /// (β/4)[αs + √(α²s² + 4)]², written to avoid cancellation for s < 0.
    pub fn a_inverse(&self, s: f64) -> f64 {
        let x = self.alpha * s;
        let root = (x * x + 4.0).sqrt();
        if x >= 0.0 {
            0.25 * self.beta * (x + root).powi(2)
        } else {
            4.0 * self.beta / (root - x).powi(2)
        }
    }

    pub fn a_derivs(&self, t: f64) -> Result<ADerivs> {
        check_t(t)?;
        let (a, b) = (self.alpha, self.beta);
        let u = 1.0 / (b * t).sqrt();
        let v = (b / t).sqrt() / t;
        Ok(ADerivs {
            first: (u + v) / (2.0 * a),
            second: -(u + 3.0 * v) / (4.0 * a * t),
            third: 3.0 * (u + 5.0 * v) / (8.0 * a * t * t),
        })
    }

    pub(crate) fn ln_pdf_unchecked(&self, t: f64) -> f64 {
        let z = self.a(t);
        -0.5 * z * z - LN_SQRT_2PI + self.ln_a1(t)
    }

    pub fn ln_pdf(&self, t: f64) -> Result<f64> {
        check_t(t)?;
        Ok(self.ln_pdf_unchecked(t))
    }

    pub fn pdf(&self, t: f64) -> Result<f64> {
        Ok(self.ln_pdf(t)?.exp())
    }

    pub fn cdf(&self, t: f64) -> Result<f64> {
        check_t(t)?;
        Ok(norm_cdf(self.a(t)))
    }

    pub fn sf(&self, t: f64) -> Result<f64> {
        check_t(t)?;
        Ok(norm_cdf(-self.a(t)))
    }

    pub fn hazard(&self, t: f64) -> Result<f64> {
        check_t(t)?;
        Ok((self.ln_pdf_unchecked(t) - ln_norm_sf(self.a(t))).exp())
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(BrbsError::domain(format!(
                "probability must lie in (0, 1), got {p}"
            )));
        }
        Ok(self.a_inverse(norm_quantile(p)))
    }

    pub fn mean(&self) -> f64 {
        self.mu
    }

    pub fn variance(&self) -> f64 {
        let d1 = self.delta + 1.0;
        self.mu * self.mu * (2.0 * self.delta + 5.0) / (d1 * d1)
    }

    /// Raw moments of order 1 and 2.
    pub fn moment(&self, order: u32) -> Result<f64> {
        match order {
            1 => Ok(self.mu),
            2 => Ok(self.mu * self.mu + self.variance()),
            _ => Err(BrbsError::domain(format!(
                "closed-form moments are available for orders 1 and 2, got {order}"
            ))),
        }
    }

    /// E[1/T] = (δ+1)²/(μδ²).
    pub fn inverse_mean(&self) -> f64 {
        (self.delta + 1.0).powi(2) / (self.mu * self.delta * self.delta)
    }

    /// Density of a⁻¹(√U) with U ~ χ²₃, namely 2a²(u)f(u) on u ≥ β. Since
    /// √U > 0 the variable never falls below β.
    pub fn chi3_weighted_pdf(&self, u: f64) -> Result<f64> {
        check_t(u)?;
        let z = self.a(u);
        if z <= 0.0 {
            return Ok(0.0);
        }
        Ok((2.0f64.ln() + 2.0 * z.abs().ln() + self.ln_pdf_unchecked(u)).exp())
    }

    /// Law of bT for b > 0.
    pub fn scaled(&self, b: f64) -> Result<Self> {
        if !(b > 0.0 && b.is_finite()) {
            return Err(BrbsError::domain(format!(
                "scale factor must be positive, got {b}"
            )));
        }
        Self::new(b * self.mu, self.delta)
    }

    /// Law of 1/T: same α, scale 1/β, so μ′ = μ/β².
    pub fn reciprocal(&self) -> Self {
        Self::new(self.mu / (self.beta * self.beta), self.delta)
            .expect("reciprocal of valid parameters is valid")
    }
}

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(BrbsError::domain(format!(
            "argument must be positive and finite, got {t}"
        )))
    }
}
