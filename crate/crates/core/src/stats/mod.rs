//! Two-sample tests and classification metrics.

mod ball;
mod ks;
mod metrics;

pub use ball::{ball_divergence_statistic, ball_divergence_test, BallPool, MIN_PERMUTATIONS};
pub use ks::{kolmogorov_survival, ks_statistic, ks_two_sample, KsMethod};
pub use metrics::{cohen_kappa, metrics, ConfusionMatrix, EvalReport, Metrics};

use alloc::format;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TestMethod {
    KsAsymptotic,
    KsExact,
    BallPermutation,
}

/// Outcome of a two-sample test.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub method: TestMethod,
    pub n: usize,
    pub m: usize,
    pub permutations: Option<usize>,
}

impl TestResult {
    /// True when the null hypothesis is not rejected at level `alpha`.
    pub fn accepts(&self, alpha: f64) -> bool {
        self.p_value > alpha
    }
}

fn check_finite(values: &[f64], which: &str) -> Result<()> {
    if let Some(i) = values.iter().position(|v| v.is_nan()) {
        return Err(Error::Data(format!("{which} sample has NaN at index {i}")));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Data(format!("{which} sample has an infinite value at index {i}")));
    }
    Ok(())
}
