//! Sensitivity models and their per-node density-ratio bounds.
//!
//! A sensitivity specification assigns each confounded node either a
//! parametric restriction (a sensitivity parameter `gamma >= 1` together
//! with a weight function over treatment/covariate values) or explicit
//! density-ratio bounds `s_minus <= 1 <= s_plus`. Both reduce to a
//! [`RatioBounds`] value holding the ratio bounds and the mass-split
//! quantiles `c_plus`/`c_minus` consumed by the shift machinery.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Ratio bounds closer than this are treated as the identity shift.
pub const DEGENERATE_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("sensitivity parameter must satisfy gamma >= 1, got {0}")]
    GammaBelowOne(f64),
    #[error("weight value must lie in [0, 1], got {0}")]
    WeightOutOfRange(f64),
    #[error("node '{0}' uses a propensity weight but no propensity was supplied")]
    MissingPropensity(String),
    #[error("node '{0}' uses a lookup table but no covariate value was supplied")]
    MissingCovariate(String),
    #[error("node '{0}' uses a treatment-binned table but no treatment value was supplied")]
    MissingTreatment(String),
    #[error("no sensitivity entry for node '{0}'")]
    MissingEntry(String),
    #[error("explicit bounds must satisfy 0 < s_minus <= 1 <= s_plus, got ({0}, {1})")]
    InvalidExplicit(f64, f64),
    #[error("invalid lookup table: {0}")]
    InvalidTable(String),
}

/// Whether the treatment is discrete or continuous; controls the sharpness
/// diagnostic and how estimators condition on the treatment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreatmentKind {
    Discrete,
    Continuous,
}

/// Piecewise-constant lookup over covariate (and optionally treatment) bins.
///
/// `x_edges` are interior cut points: a value `x` falls into the bin equal to
/// the number of edges `<= x`. With `a_edges` present, `values` is laid out
/// row-major as `[a_bin][x_bin]`. Tables bin on the first covariate
/// coordinate and a scalar treatment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LookupTable<T> {
    pub x_edges: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_edges: Option<Vec<f64>>,
    pub values: Vec<T>,
}

impl<T: Copy> LookupTable<T> {
    fn validate(&self) -> Result<(), ModelError> {
        if self.x_edges.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(ModelError::InvalidTable(
                "x_edges must be strictly increasing".into(),
            ));
        }
        if let Some(a_edges) = &self.a_edges {
            if a_edges.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(ModelError::InvalidTable(
                    "a_edges must be strictly increasing".into(),
                ));
            }
        }
        let x_bins = self.x_edges.len() + 1;
        let a_bins = self.a_edges.as_ref().map_or(1, |e| e.len() + 1);
        if self.values.len() != x_bins * a_bins {
            return Err(ModelError::InvalidTable(format!(
                "expected {} cell values, got {}",
                x_bins * a_bins,
                self.values.len()
            )));
        }
        Ok(())
    }

    fn lookup(&self, node: &str, ctx: &NodeContext) -> Result<T, ModelError> {
        let x = ctx
            .covariate
            .ok_or_else(|| ModelError::MissingCovariate(node.to_string()))?;
        let x_bin = self.x_edges.partition_point(|e| *e <= x);
        let a_bin = match &self.a_edges {
            None => 0,
            Some(edges) => {
                let a = ctx
                    .treatment
                    .ok_or_else(|| ModelError::MissingTreatment(node.to_string()))?;
                edges.partition_point(|e| *e <= a)
            }
        };
        let x_bins = self.x_edges.len() + 1;
        Ok(self.values[a_bin * x_bins + x_bin])
    }
}

/// Weight function of a parametric sensitivity entry.
///
/// The weight tightens the restriction per (treatment, covariate) pair:
/// weight 1 forces unconfoundedness there, weight 0 applies the full
/// `gamma` restriction everywhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightFn {
    /// Uniform zero weight: the restriction used for continuous and
    /// time-varying treatments.
    ConstantZero,
    /// Weight equal to the observed propensity P(a | x); the classical
    /// binary-treatment restriction.
    Propensity,
    /// Constant weight in [0, 1].
    Constant { value: f64 },
    /// User grid over (treatment, covariate) bins, values in [0, 1].
    Table(LookupTable<f64>),
}

impl WeightFn {
    pub fn eval(&self, node: &str, ctx: &NodeContext) -> Result<f64, ModelError> {
        let q = match self {
            Self::ConstantZero => 0.0,
            Self::Propensity => ctx
                .propensity
                .ok_or_else(|| ModelError::MissingPropensity(node.to_string()))?,
            Self::Constant { value } => *value,
            Self::Table(table) => table.lookup(node, ctx)?,
        };
        if !(0.0..=1.0).contains(&q) {
            return Err(ModelError::WeightOutOfRange(q));
        }
        Ok(q)
    }

    fn validate(&self) -> Result<(), ModelError> {
        match self {
            Self::Constant { value } if !(0.0..=1.0).contains(value) => {
                Err(ModelError::WeightOutOfRange(*value))
            }
            Self::Table(table) => {
                table.validate()?;
                if let Some(bad) = table.values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                    return Err(ModelError::WeightOutOfRange(*bad));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Per-node confounding restriction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SensitivityEntry {
    /// Parametric restriction: `gamma >= 1` plus a weight function.
    Weighted { gamma: f64, weight: WeightFn },
    /// Explicit density-ratio bounds.
    Explicit { s_minus: f64, s_plus: f64 },
    /// Explicit bounds varying over (treatment, covariate) bins; each cell
    /// holds `(s_minus, s_plus)`.
    ExplicitTable(LookupTable<(f64, f64)>),
}

impl SensitivityEntry {
    fn validate(&self) -> Result<(), ModelError> {
        match self {
            Self::Weighted { gamma, weight } => {
                if !(*gamma >= 1.0) {
                    return Err(ModelError::GammaBelowOne(*gamma));
                }
                weight.validate()
            }
            Self::Explicit { s_minus, s_plus } => check_explicit(*s_minus, *s_plus),
            Self::ExplicitTable(table) => {
                table.validate()?;
                for (s_minus, s_plus) in &table.values {
                    check_explicit(*s_minus, *s_plus)?;
                }
                Ok(())
            }
        }
    }
}

fn check_explicit(s_minus: f64, s_plus: f64) -> Result<(), ModelError> {
    if !(s_minus > 0.0 && s_minus <= 1.0 && s_plus >= 1.0 && s_plus.is_finite()) {
        return Err(ModelError::InvalidExplicit(s_minus, s_plus));
    }
    Ok(())
}

/// Evaluation context for a sensitivity entry: the treatment and covariate
/// the bound is requested at, plus the propensity where a weight needs one.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NodeContext {
    pub treatment: Option<f64>,
    pub covariate: Option<f64>,
    pub propensity: Option<f64>,
}

impl NodeContext {
    pub fn with_propensity(propensity: f64) -> Self {
        Self {
            propensity: Some(propensity),
            ..Self::default()
        }
    }
}

/// Density-ratio bounds for one node together with the shift quantiles.
///
/// `c_plus` is the CDF level below which mass is deflated by `1/s_plus` in
/// the right-shift; `c_minus` plays the symmetric role for the left-shift.
/// Both lie in [0, 1] and satisfy the normalization identities
/// `c_plus/s_plus + (1 - c_plus)/s_minus = 1` and
/// `c_minus/s_minus + (1 - c_minus)/s_plus = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioBounds {
    pub s_minus: f64,
    pub s_plus: f64,
    pub c_plus: f64,
    pub c_minus: f64,
}

impl RatioBounds {
    /// Bounds from a sensitivity parameter and an evaluated weight.
    ///
    /// The quantiles take the closed form `gamma / (1 + gamma)` and
    /// `1 / (1 + gamma)` independent of the weight; this form is exact even
    /// as `gamma -> 1`, where the generic quantile formula degenerates.
    pub fn from_gamma(gamma: f64, weight: f64) -> Result<Self, ModelError> {
        if !(gamma >= 1.0) || !gamma.is_finite() {
            return Err(ModelError::GammaBelowOne(gamma));
        }
        if !(0.0..=1.0).contains(&weight) {
            return Err(ModelError::WeightOutOfRange(weight));
        }
        let s_minus = 1.0 / ((1.0 - gamma) * weight + gamma);
        let s_plus = 1.0 / ((1.0 - 1.0 / gamma) * weight + 1.0 / gamma);
        Ok(Self {
            s_minus,
            s_plus,
            c_plus: gamma / (1.0 + gamma),
            c_minus: 1.0 / (1.0 + gamma),
        })
    }

    /// Bounds from explicit ratio limits.
    pub fn from_explicit(s_minus: f64, s_plus: f64) -> Result<Self, ModelError> {
        check_explicit(s_minus, s_plus)?;
        if s_plus - s_minus < DEGENERATE_EPS {
            // 0/0 in the quantile formula; any split works because both
            // ratio factors are 1, so keep the gamma -> 1 limit value.
            return Ok(Self {
                s_minus,
                s_plus,
                c_plus: 0.5,
                c_minus: 0.5,
            });
        }
        let c_plus = (1.0 - s_minus) * s_plus / (s_plus - s_minus);
        let c_minus = s_minus * (s_plus - 1.0) / (s_plus - s_minus);
        Ok(Self {
            s_minus,
            s_plus,
            c_plus,
            c_minus,
        })
    }

    /// The no-confounding bounds (identity shift).
    pub fn identity() -> Self {
        Self {
            s_minus: 1.0,
            s_plus: 1.0,
            c_plus: 0.5,
            c_minus: 0.5,
        }
    }

    /// True when the bounds admit no shift; downstream operations return the
    /// input distribution unchanged.
    pub fn is_degenerate(&self) -> bool {
        self.s_plus - self.s_minus < DEGENERATE_EPS
    }
}

/// Sensitivity restrictions for every confounded node referenced by queries.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SensitivitySpec {
    entries: BTreeMap<String, SensitivityEntry>,
}

impl SensitivitySpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(
        &mut self,
        node: impl Into<String>,
        entry: SensitivityEntry,
    ) -> Result<(), ModelError> {
        entry.validate()?;
        self.entries.insert(node.into(), entry);
        Ok(())
    }

    /// Convenience constructor applying the same parametric entry to every
    /// listed node.
    pub fn uniform(
        nodes: &[&str],
        gamma: f64,
        weight: WeightFn,
    ) -> Result<Self, ModelError> {
        let mut spec = Self::new();
        for node in nodes {
            spec.insert(
                *node,
                SensitivityEntry::Weighted {
                    gamma,
                    weight: weight.clone(),
                },
            )?;
        }
        Ok(spec)
    }

    pub fn entry(&self, node: &str) -> Option<&SensitivityEntry> {
        self.entries.get(node)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Validates every entry; used after deserializing from a config file.
    pub fn validate(&self) -> Result<(), ModelError> {
        for entry in self.entries.values() {
            entry.validate()?;
        }
        Ok(())
    }

    /// Resolves the node's entry to concrete ratio bounds at the given
    /// evaluation context.
    pub fn ratio_bounds(&self, node: &str, ctx: &NodeContext) -> Result<RatioBounds, ModelError> {
        let entry = self
            .entries
            .get(node)
            .ok_or_else(|| ModelError::MissingEntry(node.to_string()))?;
        match entry {
            SensitivityEntry::Weighted { gamma, weight } => {
                RatioBounds::from_gamma(*gamma, weight.eval(node, ctx)?)
            }
            SensitivityEntry::Explicit { s_minus, s_plus } => {
                RatioBounds::from_explicit(*s_minus, *s_plus)
            }
            SensitivityEntry::ExplicitTable(table) => {
                let (s_minus, s_plus) = table.lookup(node, ctx)?;
                RatioBounds::from_explicit(s_minus, s_plus)
            }
        }
    }
}

/// Sharpness diagnostic: the bounds are attained by a compatible model when
/// the treatment is continuous, or when it is discrete and
/// `1/s_plus >= P(a | x)`. Diagnostic only; never blocks bound computation.
pub fn is_sharp(bounds: &RatioBounds, propensity: f64, kind: TreatmentKind) -> bool {
    match kind {
        TreatmentKind::Continuous => true,
        TreatmentKind::Discrete => 1.0 / bounds.s_plus >= propensity,
    }
}
