//! Reparameterized bivariate Birnbaum–Saunders (BRBS) distribution: evaluation,
//! sampling, estimation, goodness of fit and a Monte Carlo study harness.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// small fixed-size matrices read better with explicit indices
#![allow(clippy::needless_range_loop)]

pub mod brbs;
pub mod error;
pub mod estimate;
pub mod gof;
pub mod io;
pub mod numerics;
pub mod rbs;
pub mod sampling;
pub mod simlab;

pub use brbs::{
    BrbsParams, Conditioning, Equilibrium, Hypothesis1Report, Margin, ModeResult, Reciprocal,
};
pub use error::{BrbsError, Result};
pub use estimate::{
    BivariateSample, FitReport, IntervalEstimate, Method, MlOptions, Param, Technique,
};
pub use numerics::QuadratureSpec;
pub use rbs::RbsParams;
pub use sampling::SeededStream;
