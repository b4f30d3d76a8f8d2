//! Reproducible random variates.
//!
//! Every stream is a ChaCha8 generator keyed by `seed` with `stream_id` as its
//! stream selector, so any replication can be regenerated on its own without
//! touching the others.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::brbs::BrbsParams;
use crate::error::{BrbsError, Result};
use crate::numerics::norm_quantile;
use crate::rbs::RbsParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeededStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl SeededStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn rng(&self) -> StreamRng {
        let mut inner = ChaCha8Rng::seed_from_u64(self.seed);
        inner.set_stream(self.stream_id);
        StreamRng { inner }
    }
}

pub struct StreamRng {
    inner: ChaCha8Rng,
}

const TWO_POW_M53: f64 = 1.0 / 9_007_199_254_740_992.0;

impl StreamRng {
    /// Uniform on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        ((self.inner.next_u64() >> 11) as f64 + 0.5) * TWO_POW_M53
    }

    /// Standard normal by inversion.
    pub fn normal(&mut self) -> f64 {
        norm_quantile(self.uniform())
    }

    pub fn chi2(&mut self, dof: u32) -> f64 {
        if dof <= 4 {
            (0..dof)
                .map(|_| {
                    let z = self.normal();
                    z * z
                })
                .sum()
        } else {
            Gamma::new(f64::from(dof) / 2.0, 2.0)
                .expect("positive shape")
                .sample(&mut self.inner)
        }
    }

    pub fn rbs(&mut self, p: &RbsParams) -> f64 {
        p.a_inverse(self.normal())
    }

    pub fn brbs(&mut self, p: &BrbsParams) -> (f64, f64) {
        let z1 = self.normal();
        let w = self.normal();
        let rho = p.rho();
        let z2 = rho * z1 + ((1.0 - rho) * (1.0 + rho)).sqrt() * w;
        (p.margin1().a_inverse(z1), p.margin2().a_inverse(z2))
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        Err(BrbsError::domain("sample size must be at least 1"))
    } else {
        Ok(())
    }
}

pub fn sample_rbs(n: usize, p: &RbsParams, stream: SeededStream) -> Result<Vec<f64>> {
    check_n(n)?;
    let mut rng = stream.rng();
    Ok((0..n).map(|_| rng.rbs(p)).collect())
}

pub fn sample_brbs(n: usize, p: &BrbsParams, stream: SeededStream) -> Result<Vec<(f64, f64)>> {
    check_n(n)?;
    let mut rng = stream.rng();
    Ok((0..n).map(|_| rng.brbs(p)).collect())
}

pub fn sample_chi2(n: usize, dof: u32, stream: SeededStream) -> Result<Vec<f64>> {
    check_n(n)?;
    if dof == 0 {
        return Err(BrbsError::domain("degrees of freedom must be positive"));
    }
    let mut rng = stream.rng();
    Ok((0..n).map(|_| rng.chi2(dof)).collect())
}
