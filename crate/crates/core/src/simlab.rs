//! Monte Carlo harness for bias/MSE and interval-coverage studies.
//!
//! Replication `r` of cell `c` always draws from stream
//! `(seed, (c << 32) | r)`, so results do not depend on how replications are
//! split across threads or shards. Per-replication outcomes are collected in
//! replication order and reduced with compensated sums.

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::brbs::BrbsParams;
use crate::error::{BrbsError, Result};
use crate::estimate::{
    ci_mm, ci_rho_fisher, ci_wald_ml, fit_ml, fit_mm, kx_interval_from_pivots, kx_pivots,
    BivariateSample, FitReport, Method, MlOptions, Param, Technique,
};
use crate::numerics::CompensatedSum;
use crate::sampling::{sample_brbs, SeededStream};

/// Share of failed fits above which a cell is flagged as degraded.
pub const DEGRADED_FAILURE_RATE: f64 = 0.05;

const KX_STREAM_TAG: u64 = 1 << 63;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Study {
    BiasMse,
    Coverage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_values: Vec<usize>,
    pub rho_values: Vec<f64>,
    /// Common mean of both margins.
    pub mu: f64,
    /// Common precision of both margins.
    pub delta: f64,
    pub replications: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub techniques: Vec<Technique>,
    pub levels: Vec<f64>,
    pub kx_reps: usize,
    pub ml_options: MlOptions,
}

impl SimConfig {
    fn preset(mu: f64, delta: f64) -> Self {
        Self {
            n_values: vec![10, 50, 100],
            rho_values: vec![0.0, 0.25, 0.5, 0.95],
            mu,
            delta,
            replications: 2000,
            seed: 20_240_601,
            methods: vec![Method::Ml, Method::Mm],
            techniques: vec![Technique::Wald, Technique::Mm, Technique::Fi, Technique::Kx],
            levels: vec![0.90, 0.95],
            kx_reps: 50_000,
            ml_options: MlOptions::default(),
        }
    }

    /// Bias/MSE grid with δ = 0.25, μ = 2.
    pub fn low_precision() -> Self {
        Self::preset(2.0, 0.25)
    }

    /// Bias/MSE grid with δ = 2, μ = 2.
    pub fn high_precision() -> Self {
        Self::preset(2.0, 2.0)
    }

    /// Coverage grid with μ = 1, δ = 0.5.
    pub fn coverage_grid() -> Self {
        Self::preset(1.0, 0.5)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications < 100 {
            return Err(BrbsError::domain(format!(
                "at least 100 replications are required, got {}",
                self.replications
            )));
        }
        if self.replications as u64 >= 1 << 32 {
            return Err(BrbsError::domain("replications must be below 2^32"));
        }
        if self.n_values.is_empty() || self.rho_values.is_empty() {
            return Err(BrbsError::domain("the scenario grid is empty"));
        }
        if let Some(&n) = self.n_values.iter().find(|&&n| n < 4) {
            return Err(BrbsError::domain(format!(
                "sample sizes must be at least 4, got {n}"
            )));
        }
        if self.methods.is_empty() {
            return Err(BrbsError::domain("no estimation method selected"));
        }
        if self.techniques.contains(&Technique::Kx) && self.kx_reps < 10_000 {
            return Err(BrbsError::domain(format!(
                "KX needs at least 10000 replications, got {}",
                self.kx_reps
            )));
        }
        for &l in &self.levels {
            if !(l > 0.0 && l < 1.0) {
                return Err(BrbsError::domain(format!(
                    "level must lie in (0, 1), got {l}"
                )));
            }
        }
        self.cells().map(|_| ())
    }

    /// Cells in (n, ρ) row-major order.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        let mut out = Vec::new();
        for &n in &self.n_values {
            for &rho in &self.rho_values {
                out.push(Cell {
                    index: out.len() as u64,
                    n,
                    params: BrbsParams::new(self.mu, self.mu, self.delta, self.delta, rho)?,
                });
            }
        }
        Ok(out)
    }

    fn uses(&self, m: Method) -> bool {
        self.methods.contains(&m)
    }

    /// The intervals scored in a coverage study, in a fixed order.
    fn interval_keys(&self) -> Vec<IntervalKey> {
        let mut keys = Vec::new();
        for &technique in &self.techniques {
            let (method, params): (Method, &[Param]) = match technique {
                Technique::Wald => (Method::Ml, &Param::ALL),
                Technique::Mm => (Method::Mm, &Param::ALL[..4]),
                Technique::Fi | Technique::Kx => (Method::Mm, &Param::ALL[4..]),
            };
            if !self.uses(method) {
                continue;
            }
            for &level in &self.levels {
                for &param in params {
                    keys.push(IntervalKey {
                        method,
                        technique,
                        param,
                        level,
                    });
                }
            }
        }
        keys
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub index: u64,
    pub n: usize,
    pub params: BrbsParams,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct IntervalKey {
    method: Method,
    technique: Technique,
    param: Param,
    level: f64,
}

// serde_json writes NaN as null
fn null_as_nan<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasMseEntry {
    pub method: Method,
    pub param: Param,
    #[serde(deserialize_with = "null_as_nan")]
    pub bias: f64,
    #[serde(deserialize_with = "null_as_nan")]
    pub mse: f64,
    pub successes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageEntry {
    pub method: Method,
    pub technique: Technique,
    pub param: Param,
    pub level: f64,
    /// Percentage of scored replications whose interval covers the truth.
    /// NaN (null in JSON) when no replication could be scored.
    #[serde(deserialize_with = "null_as_nan")]
    pub coverage: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureCount {
    pub method: Method,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub n: usize,
    pub rho: f64,
    pub mu: f64,
    pub delta: f64,
    pub replications: usize,
    pub failed_fits: Vec<FailureCount>,
    pub degraded: bool,
    pub bias_mse: Vec<BiasMseEntry>,
    pub coverage: Vec<CoverageEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub study: Study,
    pub seed: u64,
    pub cells: Vec<CellReport>,
    pub warnings: Vec<String>,
}

/// Result of one replication: estimates per method (None on failure) and,
/// for coverage runs, one hit/miss per interval key (None when unavailable).
#[derive(Debug, Clone)]
struct RepOutcome {
    estimates: Vec<Option<[f64; 5]>>,
    hits: Vec<Option<bool>>,
}

fn replicate(
    config: &SimConfig,
    cell: &Cell,
    rep: u64,
    study: Study,
    keys: &[IntervalKey],
) -> RepOutcome {
    let id = (cell.index << 32) | rep;
    let rows = sample_brbs(cell.n, &cell.params, SeededStream::new(config.seed, id));
    let sample = rows.and_then(BivariateSample::new);
    let fit = |m: Method| -> Option<FitReport> {
        let s = sample.as_ref().ok()?;
        match m {
            Method::Ml => fit_ml(s, &config.ml_options).ok(),
            Method::Mm => fit_mm(s).ok(),
        }
    };
    let fits: Vec<(Method, Option<FitReport>)> =
        config.methods.iter().map(|&m| (m, fit(m))).collect();
    let estimates = fits
        .iter()
        .map(|(_, f)| f.as_ref().map(|r| r.estimates.to_array()))
        .collect();
    if study == Study::BiasMse {
        return RepOutcome {
            estimates,
            hits: Vec::new(),
        };
    }

    let truth = cell.params.to_array();
    let find = |m: Method| {
        fits.iter()
            .find(|(fm, _)| *fm == m)
            .and_then(|(_, f)| f.as_ref())
    };
    let kx = if keys.iter().any(|k| k.technique == Technique::Kx) {
        find(Method::Mm).and_then(|f| {
            kx_pivots(
                f.estimates.rho(),
                f.n,
                config.kx_reps,
                SeededStream::new(config.seed, id | KX_STREAM_TAG),
            )
            .ok()
        })
    } else {
        None
    };
    let hits = keys
        .iter()
        .map(|k| {
            let f = find(k.method)?;
            let truth = truth[k.param.index()];
            let (lo, hi) = match k.technique {
                Technique::Wald => {
                    let iv = ci_wald_ml(f, k.level).ok()?;
                    let iv = iv.iter().find(|i| i.param == k.param)?;
                    (iv.lower, iv.upper)
                }
                Technique::Mm => {
                    let iv = ci_mm(f, k.level).ok()?;
                    let iv = iv.iter().find(|i| i.param == k.param)?;
                    (iv.lower, iv.upper)
                }
                Technique::Fi => ci_rho_fisher(f.estimates.rho(), f.n, k.level).ok()?,
                Technique::Kx => kx_interval_from_pivots(kx.as_ref()?, k.level).ok()?,
            };
            Some(lo <= truth && truth <= hi)
        })
        .collect();
    RepOutcome { estimates, hits }
}

fn run_range(
    config: &SimConfig,
    cell: &Cell,
    reps: Range<u64>,
    study: Study,
    keys: &[IntervalKey],
) -> Vec<RepOutcome> {
    reps.into_par_iter()
        .map(|r| replicate(config, cell, r, study, keys))
        .collect()
}

fn summarize(
    config: &SimConfig,
    cell: &Cell,
    outcomes: &[RepOutcome],
    study: Study,
    keys: &[IntervalKey],
) -> CellReport {
    let truth = cell.params.to_array();
    let mut failed_fits = Vec::new();
    let mut bias_mse = Vec::new();
    let mut degraded = false;
    for (mi, &method) in config.methods.iter().enumerate() {
        let ok: Vec<&[f64; 5]> = outcomes
            .iter()
            .filter_map(|o| o.estimates[mi].as_ref())
            .collect();
        let failures = outcomes.len() - ok.len();
        failed_fits.push(FailureCount {
            method,
            count: failures,
        });
        degraded |= failures as f64 > DEGRADED_FAILURE_RATE * outcomes.len() as f64;
        if study != Study::BiasMse {
            continue;
        }
        for p in Param::ALL {
            let i = p.index();
            let mut b = CompensatedSum::default();
            let mut m = CompensatedSum::default();
            for e in &ok {
                let d = e[i] - truth[i];
                b.add(d);
                m.add(d * d);
            }
            let k = ok.len() as f64;
            bias_mse.push(BiasMseEntry {
                method,
                param: p,
                bias: if ok.is_empty() {
                    f64::NAN
                } else {
                    b.value() / k
                },
                mse: if ok.is_empty() {
                    f64::NAN
                } else {
                    m.value() / k
                },
                successes: ok.len(),
            });
        }
    }
    let coverage = keys
        .iter()
        .enumerate()
        .map(|(ki, k)| {
            let scored: Vec<bool> = outcomes.iter().filter_map(|o| o.hits[ki]).collect();
            let trials = scored.len();
            if trials as f64 <= (1.0 - DEGRADED_FAILURE_RATE) * outcomes.len() as f64 {
                degraded = true;
            }
            let covered = scored.iter().filter(|&&h| h).count();
            CoverageEntry {
                method: k.method,
                technique: k.technique,
                param: k.param,
                level: k.level,
                coverage: if trials == 0 {
                    f64::NAN
                } else {
                    100.0 * covered as f64 / trials as f64
                },
                trials,
            }
        })
        .collect();
    CellReport {
        n: cell.n,
        rho: cell.params.rho(),
        mu: config.mu,
        delta: config.delta,
        replications: outcomes.len(),
        failed_fits,
        degraded,
        bias_mse,
        coverage,
    }
}

/// Runs a study with the replications of every cell split into `shards`
/// contiguous blocks. The result is identical for every shard count.
pub fn run_study_sharded(config: &SimConfig, study: Study, shards: usize) -> Result<SimReport> {
    config.validate()?;
    let shards = shards.max(1) as u64;
    let keys = if study == Study::Coverage {
        config.interval_keys()
    } else {
        Vec::new()
    };
    let reps = config.replications as u64;
    let mut cells = Vec::new();
    let mut warnings = Vec::new();
    for cell in config.cells()? {
        let mut outcomes = Vec::with_capacity(config.replications);
        for s in 0..shards {
            let range = (s * reps / shards)..((s + 1) * reps / shards);
            outcomes.extend(run_range(config, &cell, range, study, &keys));
        }
        let report = summarize(config, &cell, &outcomes, study, &keys);
        if report.degraded {
            warnings.push(format!(
                "cell n={} rho={} is degraded: more than {}% of fits or intervals failed",
                report.n,
                report.rho,
                DEGRADED_FAILURE_RATE * 100.0
            ));
        }
        cells.push(report);
    }
    Ok(SimReport {
        study,
        seed: config.seed,
        cells,
        warnings,
    })
}

pub fn run_bias_mse(config: &SimConfig) -> Result<SimReport> {
    run_study_sharded(config, Study::BiasMse, 1)
}

pub fn run_coverage(config: &SimConfig) -> Result<SimReport> {
    run_study_sharded(config, Study::Coverage, 1)
}
