//! Maximum-likelihood and modified-moment estimation with interval estimates.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{Matrix4, Matrix5, Vector4};
use serde::{Deserialize, Serialize};

use crate::brbs::{BrbsParams, Margin};
use crate::error::{BrbsError, Result};
use crate::numerics::{fd_gradient, fd_hessian, norm_quantile, CompensatedSum};
use crate::rbs::RbsParams;
use crate::sampling::SeededStream;

/// Paired positive observations (t₁ᵢ, t₂ᵢ), at least two rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BivariateSample {
    rows: Vec<(f64, f64)>,
}

impl BivariateSample {
    pub fn new(rows: Vec<(f64, f64)>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(BrbsError::SampleTooSmall {
                required: 2,
                actual: rows.len(),
            });
        }
        for (i, &(a, b)) in rows.iter().enumerate() {
            if !(a > 0.0 && a.is_finite() && b > 0.0 && b.is_finite()) {
                return Err(BrbsError::domain(format!(
                    "row {} must hold two positive finite values, got ({a}, {b})",
                    i + 1
                )));
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[(f64, f64)] {
        &self.rows
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn column(&self, m: Margin) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| match m {
                Margin::First => r.0,
                Margin::Second => r.1,
            })
            .collect()
    }

    pub fn arithmetic_mean(&self, m: Margin) -> f64 {
        let s: CompensatedSum = self.column(m).into_iter().collect();
        s.value() / self.n() as f64
    }

    pub fn harmonic_mean(&self, m: Margin) -> f64 {
        let s: CompensatedSum = self.column(m).into_iter().map(|t| 1.0 / t).collect();
        self.n() as f64 / s.value()
    }

    /// Multiplies the first column by `b1` and the second by `b2`.
    pub fn scaled(&self, b1: f64, b2: f64) -> Result<Self> {
        Self::new(self.rows.iter().map(|&(x, y)| (b1 * x, b2 * y)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ml,
    Mm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Technique {
    /// θ̂ ± z·SE from the observed information.
    Wald,
    /// Closed-form intervals around the moment estimators of μ and δ.
    Mm,
    /// Fisher z-transform interval for ρ.
    Fi,
    /// Krishnamoorthy–Xia Monte Carlo pivot interval for ρ.
    Kx,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Param {
    Mu1,
    Mu2,
    Delta1,
    Delta2,
    Rho,
}

impl Param {
    pub const ALL: [Param; 5] = [
        Param::Mu1,
        Param::Mu2,
        Param::Delta1,
        Param::Delta2,
        Param::Rho,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Ml => "ml",
            Method::Mm => "mm",
        })
    }
}

impl fmt::Display for Technique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Technique::Wald => "wald",
            Technique::Mm => "mm",
            Technique::Fi => "fi",
            Technique::Kx => "kx",
        })
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Param::Mu1 => "mu1",
            Param::Mu2 => "mu2",
            Param::Delta1 => "delta1",
            Param::Delta2 => "delta2",
            Param::Rho => "rho",
        })
    }
}

/// One value per model parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamValues<T> {
    pub mu1: T,
    pub mu2: T,
    pub delta1: T,
    pub delta2: T,
    pub rho: T,
}

impl<T: Copy> ParamValues<T> {
    pub fn from_array(a: [T; 5]) -> Self {
        Self {
            mu1: a[0],
            mu2: a[1],
            delta1: a[2],
            delta2: a[3],
            rho: a[4],
        }
    }

    pub fn to_array(&self) -> [T; 5] {
        [self.mu1, self.mu2, self.delta1, self.delta2, self.rho]
    }

    pub fn get(&self, p: Param) -> T {
        self.to_array()[p.index()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalEstimate {
    pub param: Param,
    pub technique: Technique,
    pub level: f64,
    pub lower: f64,
    pub upper: f64,
}

impl IntervalEstimate {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub method: Method,
    pub n: usize,
    pub estimates: BrbsParams,
    pub std_errors: ParamValues<Option<f64>>,
    pub loglik: f64,
    pub intervals: Vec<IntervalEstimate>,
    pub iterations: Option<usize>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Init {
    Mm,
    /// (μ₁, μ₂, δ₁, δ₂)
    Explicit([f64; 4]),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub init: Init,
}

impl Default for MlOptions {
    fn default() -> Self {
        Self {
            max_iter: 5000,
            tol: 1e-10,
            init: Init::Mm,
        }
    }
}

fn check_eta(eta: &[f64; 4]) -> Result<()> {
    if eta.iter().all(|&v| v > 0.0 && v.is_finite()) {
        Ok(())
    } else {
        Err(BrbsError::domain(format!(
            "mu and delta components must be positive and finite, got {eta:?}"
        )))
    }
}

fn margins(eta: &[f64; 4]) -> Result<(RbsParams, RbsParams)> {
    check_eta(eta)?;
    Ok((
        RbsParams::new(eta[0], eta[2])?,
        RbsParams::new(eta[1], eta[3])?,
    ))
}

/// Sufficient sums of the standardized scores at a fixed η.
struct ScoreSums {
    n: f64,
    sxx: f64,
    syy: f64,
    sxy: f64,
    ln_jac: f64,
}

fn score_sums(eta: &[f64; 4], sample: &BivariateSample) -> Result<ScoreSums> {
    let (m1, m2) = margins(eta)?;
    let (mut sxx, mut syy, mut sxy, mut lj) = (
        CompensatedSum::default(),
        CompensatedSum::default(),
        CompensatedSum::default(),
        CompensatedSum::default(),
    );
    for &(t1, t2) in sample.rows() {
        let x = m1.a(t1);
        let y = m2.a(t2);
        sxx.add(x * x);
        syy.add(y * y);
        sxy.add(x * y);
        lj.add(m1.ln_a1(t1) + m2.ln_a1(t2));
    }
    Ok(ScoreSums {
        n: sample.n() as f64,
        sxx: sxx.value(),
        syy: syy.value(),
        sxy: sxy.value(),
        ln_jac: lj.value(),
    })
}

impl ScoreSums {
    fn rho_hat(&self) -> Result<f64> {
        let den = (self.sxx * self.syy).sqrt();
        if !(den > 0.0) || !den.is_finite() {
            return Err(BrbsError::Degenerate(
                "standardized scores of a margin are all zero".into(),
            ));
        }
        Ok((self.sxy / den).clamp(-1.0, 1.0))
    }

    fn loglik(&self, rho: f64) -> f64 {
        let om = (1.0 - rho) * (1.0 + rho);
        -self.n * (2.0 * PI).ln()
            - 0.5 * self.n * om.ln()
            - (self.sxx - 2.0 * rho * self.sxy + self.syy) / (2.0 * om)
            + self.ln_jac
    }
}

/// Σᵢ ln f(t₁ᵢ, t₂ᵢ; θ) with every normalizing constant included.
pub fn loglik(theta: &BrbsParams, sample: &BivariateSample) -> Result<f64> {
    let mut acc = CompensatedSum::default();
    for (i, &(t1, t2)) in sample.rows().iter().enumerate() {
        let v = theta.ln_pdf_unchecked(t1, t2);
        if !v.is_finite() {
            return Err(BrbsError::numerical(
                format!("log-density is not finite at row {}", i + 1),
                v,
            ));
        }
        acc.add(v);
    }
    Ok(acc.value())
}

/// Conditional ML estimate of ρ at fixed η = (μ₁, μ₂, δ₁, δ₂): the normalized
/// cross product of the standardized scores.
pub fn rho_hat_given(eta: [f64; 4], sample: &BivariateSample) -> Result<f64> {
    score_sums(&eta, sample)?.rho_hat()
}

/// Log-likelihood with ρ replaced by [`rho_hat_given`].
pub fn profile_loglik(eta: [f64; 4], sample: &BivariateSample) -> Result<f64> {
    let s = score_sums(&eta, sample)?;
    let rho = s.rho_hat()?;
    if rho.abs() >= 1.0 {
        return Err(BrbsError::Degenerate(
            "scores are perfectly correlated; likelihood is unbounded".into(),
        ));
    }
    Ok(s.loglik(rho))
}

/// (μ̃ₖ, δ̃ₖ) from the arithmetic mean s and harmonic mean r of one margin.
pub fn mm_from_means(s: f64, r: f64) -> Result<(f64, f64)> {
    if !(s > 0.0 && r > 0.0 && s.is_finite() && r.is_finite()) {
        return Err(BrbsError::domain(format!(
            "means must be positive and finite, got ({s}, {r})"
        )));
    }
    let g = (s / r).sqrt() - 1.0;
    if !(g > 0.0) {
        return Err(BrbsError::Degenerate(format!(
            "arithmetic mean {s} does not exceed harmonic mean {r}; the margin is constant"
        )));
    }
    Ok((s, 1.0 / g))
}

fn mm_eta(sample: &BivariateSample) -> Result<[f64; 4]> {
    let (mu1, d1) = mm_from_means(
        sample.arithmetic_mean(Margin::First),
        sample.harmonic_mean(Margin::First),
    )?;
    let (mu2, d2) = mm_from_means(
        sample.arithmetic_mean(Margin::Second),
        sample.harmonic_mean(Margin::Second),
    )?;
    Ok([mu1, mu2, d1, d2])
}

/// Large-sample standard errors of the moment estimators.
pub fn mm_asymptotic_se(params: &BrbsParams, n: usize) -> Result<ParamValues<Option<f64>>> {
    if n == 0 {
        return Err(BrbsError::domain("n must be at least 1"));
    }
    let rn = (n as f64).sqrt();
    let se_mu = |m: &RbsParams| m.mu() * (2.0 * m.delta() + 5.0).sqrt() / ((m.delta() + 1.0) * rn);
    let se_delta = |m: &RbsParams| m.delta() * (2.0 / n as f64).sqrt();
    Ok(ParamValues {
        mu1: Some(se_mu(params.margin1())),
        mu2: Some(se_mu(params.margin2())),
        delta1: Some(se_delta(params.margin1())),
        delta2: Some(se_delta(params.margin2())),
        rho: None,
    })
}

pub fn fit_mm(sample: &BivariateSample) -> Result<FitReport> {
    let eta = mm_eta(sample)?;
    let rho = rho_hat_given(eta, sample)?;
    if rho.abs() >= 1.0 {
        return Err(BrbsError::Degenerate("moment estimate of rho is ±1".into()));
    }
    let estimates = BrbsParams::new(eta[0], eta[1], eta[2], eta[3], rho)?;
    Ok(FitReport {
        method: Method::Mm,
        n: sample.n(),
        estimates,
        std_errors: mm_asymptotic_se(&estimates, sample.n())?,
        loglik: loglik(&estimates, sample)?,
        intervals: Vec::new(),
        iterations: None,
        warnings: Vec::new(),
    })
}

struct NmOutcome {
    x: Vec<f64>,
    f: f64,
    iterations: usize,
    converged: bool,
}

fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: &F,
    x0: &[f64],
    step: f64,
    max_iter: usize,
    tol: f64,
) -> NmOutcome {
    let d = x0.len();
    let mut pts: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..d {
        let mut p = x0.to_vec();
        p[i] += step;
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| f(p)).collect();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let mut order: Vec<usize> = (0..=d).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();

        let spread = vals[d] - vals[0];
        let diam = pts[1..]
            .iter()
            .flat_map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if vals[0].is_finite() && spread <= tol * (vals[0].abs() + 1e-8) && diam <= 1e-6 {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..d)
            .map(|j| pts[..d].iter().map(|p| p[j]).sum::<f64>() / d as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            (0..d)
                .map(|j| centroid[j] + t * (pts[d][j] - centroid[j]))
                .collect()
        };
        let xr = along(-1.0);
        let fr = f(&xr);
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = f(&xe);
            if fe < fr {
                pts[d] = xe;
                vals[d] = fe;
            } else {
                pts[d] = xr;
                vals[d] = fr;
            }
            continue;
        }
        if fr < vals[d - 1] {
            pts[d] = xr;
            vals[d] = fr;
            continue;
        }
        let (xc, fc) = if fr < vals[d] {
            let xc = along(-0.5);
            let fc = f(&xc);
            (xc, fc)
        } else {
            let xc = along(0.5);
            let fc = f(&xc);
            (xc, fc)
        };
        if fc < vals[d].min(fr) {
            pts[d] = xc;
            vals[d] = fc;
            continue;
        }
        for i in 1..=d {
            for j in 0..d {
                pts[i][j] = pts[0][j] + 0.5 * (pts[i][j] - pts[0][j]);
            }
            vals[i] = f(&pts[i]);
        }
    }
    let best = (0..=d)
        .min_by(|&a, &b| vals[a].total_cmp(&vals[b]))
        .unwrap_or(0);
    NmOutcome {
        x: pts[best].clone(),
        f: vals[best],
        iterations,
        converged,
    }
}

/// Newton steps on a smooth objective using finite-difference derivatives.
/// Returns the final point, its value and whether the last step fell below
/// `step_tol`.
fn newton_polish<F: Fn(&[f64]) -> f64>(
    f: &F,
    x0: &[f64],
    f0: f64,
    step_tol: f64,
) -> (Vec<f64>, f64, bool) {
    let mut x = x0.to_vec();
    let mut fx = f0;
    let h = [1e-4; 4];
    for _ in 0..30 {
        let g = fd_gradient(f, &x, &h);
        let hm = fd_hessian(f, &x, &h);
        let hmat = Matrix4::from_fn(|i, j| hm[i][j]);
        let Some(chol) = hmat.cholesky() else {
            return (x, fx, false);
        };
        let s = chol.solve(&-Vector4::from_column_slice(&g));
        let size = s.amax();
        if !size.is_finite() {
            return (x, fx, false);
        }
        if size < step_tol {
            return (x, fx, true);
        }
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..20 {
            let xn: Vec<f64> = x.iter().zip(s.iter()).map(|(a, b)| a + t * b).collect();
            let fnew = f(&xn);
            if fnew <= fx {
                x = xn;
                fx = fnew;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // the objective is flat to rounding along the Newton direction
            return (x, fx, t * size < step_tol || size < 1e-6);
        }
    }
    (x, fx, false)
}

/// Maximum-likelihood fit: simplex search on the profile log-likelihood in
/// log-parameters, then a finite-difference Newton polish.
pub fn fit_ml(sample: &BivariateSample, options: &MlOptions) -> Result<FitReport> {
    if sample.n() < 3 {
        return Err(BrbsError::SampleTooSmall {
            required: 3,
            actual: sample.n(),
        });
    }
    let start = match options.init {
        Init::Mm => mm_eta(sample)?,
        Init::Explicit(e) => {
            check_eta(&e)?;
            e
        }
    };
    let obj = |u: &[f64]| -> f64 {
        let eta = [u[0].exp(), u[1].exp(), u[2].exp(), u[3].exp()];
        match profile_loglik(eta, sample) {
            Ok(v) if v.is_finite() => -v,
            _ => f64::INFINITY,
        }
    };
    let u0: Vec<f64> = start.iter().map(|v| v.ln()).collect();
    if !obj(&u0).is_finite() {
        return Err(BrbsError::numerical(
            "profile log-likelihood is not finite at the starting point",
            f64::NAN,
        ));
    }
    let nm = nelder_mead(&obj, &u0, 0.1, options.max_iter, options.tol);
    let eta_of = |u: &[f64]| [u[0].exp(), u[1].exp(), u[2].exp(), u[3].exp()];
    if !nm.converged {
        return Err(BrbsError::NonConvergence {
            iterations: nm.iterations,
            best_value: -nm.f,
            best_eta: eta_of(&nm.x),
        });
    }
    let (u, _, polished) = newton_polish(&obj, &nm.x, nm.f, 1e-8);
    let mut warnings = Vec::new();
    if !polished {
        warnings.push("final Newton polish did not reach the step tolerance".to_string());
    }
    let eta = eta_of(&u);
    let rho = rho_hat_given(eta, sample)?;
    let estimates = BrbsParams::new(eta[0], eta[1], eta[2], eta[3], rho)?;
    let ll = loglik(&estimates, sample)?;
    let std_errors = match observed_information(&estimates, sample)
        .and_then(|j| covariance_from_information(&j))
    {
        Ok(cov) => ParamValues::from_array(std::array::from_fn(|i| Some(cov[i][i].sqrt()))),
        Err(e) => {
            warnings.push(format!("standard errors omitted: {e}"));
            ParamValues::from_array([None; 5])
        }
    };
    Ok(FitReport {
        method: Method::Ml,
        n: sample.n(),
        estimates,
        std_errors,
        loglik: ll,
        intervals: Vec::new(),
        iterations: Some(nm.iterations),
        warnings,
    })
}

const INFO_STEP: f64 = 1e-4;

/// Negative Hessian of [`loglik`] on the natural scale (μ₁, μ₂, δ₁, δ₂, ρ),
/// differentiated numerically in (ln μ₁, ln μ₂, ln δ₁, ln δ₂, ρ).
pub fn observed_information(theta: &BrbsParams, sample: &BivariateSample) -> Result<[[f64; 5]; 5]> {
    let th = theta.to_array();
    if 1.0 - th[4].abs() <= 10.0 * INFO_STEP {
        return Err(BrbsError::domain(format!(
            "rho = {} is too close to ±1 for finite differences",
            th[4]
        )));
    }
    let u0 = [th[0].ln(), th[1].ln(), th[2].ln(), th[3].ln(), th[4]];
    let f = |u: &[f64]| -> f64 {
        BrbsParams::new(u[0].exp(), u[1].exp(), u[2].exp(), u[3].exp(), u[4])
            .and_then(|p| loglik(&p, sample))
            .unwrap_or(f64::NAN)
    };
    let steps = [INFO_STEP; 5];
    let hu = fd_hessian(&f, &u0, &steps);
    let gu = fd_gradient(&f, &u0, &steps);
    let scale = [th[0], th[1], th[2], th[3], 1.0];
    let mut j = [[0.0; 5]; 5];
    for a in 0..5 {
        for b in 0..5 {
            let mut v = hu[a][b];
            if a == b && a < 4 {
                v -= gu[a];
            }
            j[a][b] = -v / (scale[a] * scale[b]);
        }
    }
    for a in 0..5 {
        for b in 0..a {
            let m = 0.5 * (j[a][b] + j[b][a]);
            j[a][b] = m;
            j[b][a] = m;
        }
    }
    if j.iter().flatten().any(|v| !v.is_finite()) {
        return Err(BrbsError::numerical(
            "non-finite second differences in the observed information",
            f64::NAN,
        ));
    }
    Ok(j)
}

/// Inverse of a positive-definite information matrix.
pub fn covariance_from_information(j: &[[f64; 5]; 5]) -> Result<[[f64; 5]; 5]> {
    let m = Matrix5::from_fn(|a, b| j[a][b]);
    let chol = m.cholesky().ok_or_else(|| {
        BrbsError::numerical("observed information is not positive definite", f64::NAN)
    })?;
    let inv = chol.inverse();
    Ok(std::array::from_fn(|a| {
        std::array::from_fn(|b| inv[(a, b)])
    }))
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(BrbsError::domain(format!(
            "level must lie in (0, 1), got {level}"
        )))
    }
}

/// θ̂ ± z_{1−γ/2}·SE for every parameter with a standard error.
pub fn ci_wald_ml(fit: &FitReport, level: f64) -> Result<Vec<IntervalEstimate>> {
    check_level(level)?;
    let z = norm_quantile(0.5 + 0.5 * level);
    let est = fit.estimates.to_array();
    let mut out = Vec::with_capacity(5);
    for p in Param::ALL {
        let se = fit
            .std_errors
            .get(p)
            .ok_or_else(|| BrbsError::IntervalUnavailable(format!("no standard error for {p}")))?;
        let e = est[p.index()];
        out.push(IntervalEstimate {
            param: p,
            technique: Technique::Wald,
            level,
            lower: e - z * se,
            upper: e + z * se,
        });
    }
    Ok(out)
}

fn sorted_pair(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Intervals x̃/(1 + z·√(v/n)) for z at both tails, returned ascending.
fn mm_ratio_interval(est: f64, v: f64, n: usize, level: f64) -> Result<(f64, f64)> {
    let z = norm_quantile(0.5 + 0.5 * level);
    let w = (v / n as f64).sqrt();
    let lo_den = 1.0 - z * w;
    if lo_den <= 0.0 {
        return Err(BrbsError::IntervalUnavailable(format!(
            "1 - z*sqrt(h/n) = {lo_den} is not positive"
        )));
    }
    Ok(sorted_pair(est / (1.0 + z * w), est / lo_den))
}

/// Moment-based intervals for μₖ and δₖ.
pub fn ci_mm(fit: &FitReport, level: f64) -> Result<Vec<IntervalEstimate>> {
    check_level(level)?;
    let h = |x: f64| (2.0 * x + 5.0) / ((x + 1.0) * (x + 1.0));
    let e = &fit.estimates;
    let mut out = Vec::with_capacity(4);
    for (param, est, v) in [
        (Param::Mu1, e.margin1().mu(), h(e.margin1().delta())),
        (Param::Mu2, e.margin2().mu(), h(e.margin2().delta())),
        (Param::Delta1, e.margin1().delta(), 2.0),
        (Param::Delta2, e.margin2().delta(), 2.0),
    ] {
        let (lower, upper) = mm_ratio_interval(est, v, fit.n, level)?;
        out.push(IntervalEstimate {
            param,
            technique: Technique::Mm,
            level,
            lower,
            upper,
        });
    }
    Ok(out)
}

/// tanh(atanh ρ̃ ± z/√(n−3)).
pub fn ci_rho_fisher(rho_tilde: f64, n: usize, level: f64) -> Result<(f64, f64)> {
    check_level(level)?;
    if n < 4 {
        return Err(BrbsError::SampleTooSmall {
            required: 4,
            actual: n,
        });
    }
    if !(rho_tilde.abs() < 1.0) {
        return Err(BrbsError::Degenerate(format!(
            "correlation estimate {rho_tilde} must lie strictly inside (-1, 1)"
        )));
    }
    let z = norm_quantile(0.5 + 0.5 * level);
    let c = rho_tilde.atanh();
    let w = z / ((n - 3) as f64).sqrt();
    Ok(((c - w).tanh(), (c + w).tanh()))
}

/// Sorted Monte Carlo pivots Q for the Krishnamoorthy–Xia interval.
pub fn kx_pivots(rho_tilde: f64, n: usize, m: usize, stream: SeededStream) -> Result<Vec<f64>> {
    if n < 3 {
        return Err(BrbsError::SampleTooSmall {
            required: 3,
            actual: n,
        });
    }
    if m < 10_000 {
        return Err(BrbsError::domain(format!(
            "KX needs at least 10000 replications, got {m}"
        )));
    }
    if !(rho_tilde.abs() < 1.0) {
        return Err(BrbsError::Degenerate(format!(
            "correlation estimate {rho_tilde} must lie strictly inside (-1, 1)"
        )));
    }
    let rb = rho_tilde / ((1.0 - rho_tilde) * (1.0 + rho_tilde)).sqrt();
    let (d1, d2) = ((n - 1) as u32, (n - 2) as u32);
    let mut rng = stream.rng();
    let mut q: Vec<f64> = (0..m)
        .map(|_| {
            let z0 = rng.normal();
            let u1 = rng.chi2(d1);
            let u2 = rng.chi2(d2);
            let num = rb * u2.sqrt() - z0;
            num / (num * num + u1).sqrt()
        })
        .collect();
    q.sort_by(f64::total_cmp);
    Ok(q)
}

/// Linear-interpolation percentile of sorted data.
pub fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn kx_interval_from_pivots(sorted: &[f64], level: f64) -> Result<(f64, f64)> {
    check_level(level)?;
    let g = 0.5 * (1.0 - level);
    Ok((
        percentile_sorted(sorted, g),
        percentile_sorted(sorted, 1.0 - g),
    ))
}

pub fn ci_rho_kx(
    rho_tilde: f64,
    n: usize,
    level: f64,
    m: usize,
    stream: SeededStream,
) -> Result<(f64, f64)> {
    check_level(level)?;
    let q = kx_pivots(rho_tilde, n, m, stream)?;
    kx_interval_from_pivots(&q, level)
}

/// FI and KX intervals for ρ around the estimate in `fit`.
pub fn ci_rho(
    fit: &FitReport,
    levels: &[f64],
    kx_reps: Option<(usize, SeededStream)>,
) -> Result<Vec<IntervalEstimate>> {
    let rho = fit.estimates.rho();
    let mut out = Vec::new();
    for &level in levels {
        let (lower, upper) = ci_rho_fisher(rho, fit.n, level)?;
        out.push(IntervalEstimate {
            param: Param::Rho,
            technique: Technique::Fi,
            level,
            lower,
            upper,
        });
    }
    if let Some((m, stream)) = kx_reps {
        let q = kx_pivots(rho, fit.n, m, stream)?;
        for &level in levels {
            let (lower, upper) = kx_interval_from_pivots(&q, level)?;
            out.push(IntervalEstimate {
                param: Param::Rho,
                technique: Technique::Kx,
                level,
                lower,
                upper,
            });
        }
    }
    Ok(out)
}
