//! Distribution representations with a shared CDF/quantile contract.
//!
//! Quantiles use the left-continuous generalized inverse
//! `inf { w : F(w) >= alpha }` throughout.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

/// Sum-to-one tolerance for probability vectors.
pub const PROB_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistError {
    #[error("support must be non-empty")]
    EmptySupport,
    #[error("support and probability vectors have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("support must be strictly increasing")]
    SupportNotIncreasing,
    #[error("probabilities must be finite and non-negative, got {0}")]
    InvalidProbability(f64),
    #[error("probabilities sum to {0}, expected 1")]
    NotNormalized(f64),
    #[error("sample must be non-empty")]
    EmptySample,
    #[error("sample values must be finite and sorted ascending")]
    UnsortedSample,
    #[error("quantile level must lie in (0, 1), got {0}")]
    InvalidQuantileLevel(f64),
    #[error("uniform distribution requires a < b, got [{0}, {1}]")]
    InvalidUniformRange(f64, f64),
}

/// Common CDF/quantile contract shared by all distribution representations.
pub trait Cdf {
    /// Right-continuous, nondecreasing CDF value at `w`.
    fn cdf(&self, w: f64) -> f64;

    /// Generalized inverse `inf { w : F(w) >= alpha }` for `alpha` in (0, 1).
    fn quantile(&self, alpha: f64) -> Result<f64, DistError>;
}

fn check_alpha(alpha: f64) -> Result<(), DistError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(DistError::InvalidQuantileLevel(alpha));
    }
    Ok(())
}

/// Probability mass function on an ordered finite support.
///
/// Categorical values must be encoded as ordered reals before construction;
/// only the order of the support matters to downstream consumers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDist {
    support: Vec<f64>,
    probs: Vec<f64>,
}

impl DiscreteDist {
    pub fn new(support: Vec<f64>, probs: Vec<f64>) -> Result<Self, DistError> {
        if support.is_empty() {
            return Err(DistError::EmptySupport);
        }
        if support.len() != probs.len() {
            return Err(DistError::LengthMismatch(support.len(), probs.len()));
        }
        if support.windows(2).any(|w| !(w[0] < w[1])) || support.iter().any(|v| !v.is_finite()) {
            return Err(DistError::SupportNotIncreasing);
        }
        for &p in &probs {
            if !p.is_finite() || p < 0.0 {
                return Err(DistError::InvalidProbability(p));
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(DistError::NotNormalized(total));
        }
        Ok(Self { support, probs })
    }

    /// Uniform pmf over the given support.
    pub fn uniform(support: Vec<f64>) -> Result<Self, DistError> {
        let n = support.len();
        if n == 0 {
            return Err(DistError::EmptySupport);
        }
        let probs = vec![1.0 / n as f64; n];
        Self::new(support, probs)
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// CDF at the predecessor of support point `index`; 0 before the first.
    pub fn cdf_before(&self, index: usize) -> f64 {
        self.probs[..index].iter().sum()
    }

    pub fn expectation(&self) -> f64 {
        self.support
            .iter()
            .zip(&self.probs)
            .map(|(w, p)| w * p)
            .sum()
    }
}

impl Cdf for DiscreteDist {
    fn cdf(&self, w: f64) -> f64 {
        self.support
            .iter()
            .zip(&self.probs)
            .take_while(|(v, _)| **v <= w)
            .map(|(_, p)| p)
            .sum()
    }

    fn quantile(&self, alpha: f64) -> Result<f64, DistError> {
        check_alpha(alpha)?;
        let mut acc = 0.0;
        for (v, p) in self.support.iter().zip(&self.probs) {
            acc += p;
            if acc >= alpha {
                return Ok(*v);
            }
        }
        // Rounding can leave acc marginally below alpha at the last point.
        Ok(*self.support.last().expect("non-empty support"))
    }
}

/// Sorted sample of outcome draws used as an empirical distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleDist {
    values: Vec<f64>,
}

impl SampleDist {
    /// Wraps an already-sorted sample; rejects unsorted or non-finite input.
    pub fn new(values: Vec<f64>) -> Result<Self, DistError> {
        if values.is_empty() {
            return Err(DistError::EmptySample);
        }
        if values.iter().any(|v| !v.is_finite()) || values.windows(2).any(|w| w[0] > w[1]) {
            return Err(DistError::UnsortedSample);
        }
        Ok(Self { values })
    }

    /// Sorts the draws, then wraps them.
    pub fn from_unsorted(mut values: Vec<f64>) -> Result<Self, DistError> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(DistError::UnsortedSample);
        }
        values.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite values"));
        Self::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

impl Cdf for SampleDist {
    fn cdf(&self, w: f64) -> f64 {
        let count = self.values.partition_point(|v| *v <= w);
        count as f64 / self.values.len() as f64
    }

    fn quantile(&self, alpha: f64) -> Result<f64, DistError> {
        check_alpha(alpha)?;
        let k = self.values.len() as f64;
        let rank = (alpha * k).ceil() as usize;
        let idx = rank.max(1).min(self.values.len()) - 1;
        Ok(self.values[idx])
    }
}

/// Closed-form distributions used as estimator test oracles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnalyticDist {
    StandardNormal,
    Uniform { a: f64, b: f64 },
}

impl AnalyticDist {
    pub fn uniform(a: f64, b: f64) -> Result<Self, DistError> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(DistError::InvalidUniformRange(a, b));
        }
        Ok(Self::Uniform { a, b })
    }

    fn normal() -> Normal {
        Normal::new(0.0, 1.0).expect("standard normal parameters")
    }
}

impl Cdf for AnalyticDist {
    fn cdf(&self, w: f64) -> f64 {
        match self {
            Self::StandardNormal => Self::normal().cdf(w),
            Self::Uniform { a, b } => ((w - a) / (b - a)).clamp(0.0, 1.0),
        }
    }

    fn quantile(&self, alpha: f64) -> Result<f64, DistError> {
        check_alpha(alpha)?;
        Ok(match self {
            Self::StandardNormal => Self::normal().inverse_cdf(alpha),
            Self::Uniform { a, b } => a + alpha * (b - a),
        })
    }
}
