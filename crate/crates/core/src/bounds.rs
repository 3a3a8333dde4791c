//! Causal-effect bounds composed from shifted distributions.
//!
//! For queries without mediators the bound is the functional of the shifted
//! outcome distribution. With mediators, the outcome bound is computed for
//! every mediator combination and each mediator distribution is shifted
//! along the permutation that orders its downstream bounds ascending; the
//! per-level accumulation walks the chain back to the first mediator.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dist::{DiscreteDist, DistError, SampleDist};
use crate::functionals::{apply_discrete, functional_bound_sampled, Functional, FunctionalError};
use crate::model::{is_sharp, ModelError, NodeContext, RatioBounds, SensitivitySpec, TreatmentKind};
use crate::seed::derive_seed;
use crate::shift::{shift_discrete, Direction};

const OUTCOME_STREAM: u64 = 0x0b;
const AVERAGE_STREAM: u64 = 0xa6;

/// Node label a query's outcome is keyed under in the sensitivity spec.
pub const OUTCOME_NODE: &str = "y";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("query shape invalid: {0}")]
    QueryShape(String),
    #[error("mediator distribution has empty support for prefix {0:?}")]
    EmptyMediatorSupport(Vec<f64>),
    #[error("estimation backend failed: {0}")]
    Estimation(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Functional(#[from] FunctionalError),
}

/// A causal query: covariates, one treatment per mediator plus one for the
/// outcome, the functional, and the mediator labels in causal order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CausalQuery {
    pub x: Vec<f64>,
    pub treatments: Vec<f64>,
    pub functional: Functional,
    pub mediators: Vec<String>,
}

impl CausalQuery {
    pub fn new(
        x: Vec<f64>,
        treatments: Vec<f64>,
        functional: Functional,
        mediators: Vec<String>,
    ) -> Result<Self, BoundsError> {
        if treatments.len() != mediators.len() + 1 {
            return Err(BoundsError::QueryShape(format!(
                "expected {} treatments for {} mediators, got {}",
                mediators.len() + 1,
                mediators.len(),
                treatments.len()
            )));
        }
        functional.validate()?;
        Ok(Self {
            x,
            treatments,
            functional,
            mediators,
        })
    }

    pub fn num_mediators(&self) -> usize {
        self.mediators.len()
    }

    /// Treatment applied when generating the outcome.
    pub fn outcome_treatment(&self) -> f64 {
        *self.treatments.last().expect("at least one treatment")
    }

    pub fn with_x(&self, x: Vec<f64>) -> Self {
        Self {
            x,
            ..self.clone()
        }
    }
}

/// Outcome distribution produced by a conditional model.
#[derive(Debug, Clone)]
pub enum OutcomeDist {
    Discrete(DiscreteDist),
    Sampled(SampleDist),
}

/// Conditional ingredients a bound computation consumes: mediator pmfs, an
/// outcome distribution per cell, and optionally the treatment propensity.
///
/// Implementations must be deterministic given the seed passed to
/// [`ConditionalModel::outcome`].
pub trait ConditionalModel: Sync {
    /// Pmf of mediator `index` (0-based) given covariates, the preceding
    /// mediator values, and the treatment it is generated under.
    fn mediator_pmf(
        &self,
        index: usize,
        x: &[f64],
        m_prev: &[f64],
        a: f64,
    ) -> Result<DiscreteDist, BoundsError>;

    /// Outcome distribution given covariates, all mediator values, and the
    /// outcome treatment. `k` is the requested draw count for sampled
    /// outcomes; discrete outcomes may ignore it.
    fn outcome(
        &self,
        x: &[f64],
        m: &[f64],
        a: f64,
        k: usize,
        seed: u64,
    ) -> Result<OutcomeDist, BoundsError>;

    /// Propensity of treatment value `a` at covariates `x`, when available.
    fn propensity(&self, a: f64, x: &[f64]) -> Option<f64>;

    fn treatment_kind(&self) -> TreatmentKind;
}

/// Evaluation knobs for bound computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalConfig {
    /// Draws per outcome cell for sampled outcomes.
    pub k: usize,
    /// Root seed; per-cell seeds are derived from it.
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { k: 10_000, seed: 0 }
    }
}

fn node_context(model: &dyn ConditionalModel, x: &[f64], a: f64) -> NodeContext {
    NodeContext {
        treatment: Some(a),
        covariate: x.first().copied(),
        propensity: model.propensity(a, x),
    }
}

fn outcome_bound(
    model: &dyn ConditionalModel,
    query: &CausalQuery,
    spec: &SensitivitySpec,
    dir: Direction,
    cfg: &EvalConfig,
    m: &[f64],
    path: &[u64],
) -> Result<f64, BoundsError> {
    let a = query.outcome_treatment();
    let bounds = spec.ratio_bounds(OUTCOME_NODE, &node_context(model, &query.x, a))?;
    let seed = derive_seed(cfg.seed, path);
    match model.outcome(&query.x, m, a, cfg.k, seed)? {
        OutcomeDist::Discrete(pmf) => {
            let shifted = shift_discrete(&pmf, &bounds, dir)?;
            Ok(apply_discrete(&query.functional, &shifted)?)
        }
        OutcomeDist::Sampled(sample) => {
            Ok(functional_bound_sampled(&query.functional, &sample, &bounds, dir)?)
        }
    }
}

/// Bound for a query without mediators: the functional of the shifted
/// outcome distribution.
pub fn bound_no_mediators(
    model: &dyn ConditionalModel,
    query: &CausalQuery,
    spec: &SensitivitySpec,
    dir: Direction,
    cfg: &EvalConfig,
) -> Result<f64, BoundsError> {
    if query.num_mediators() != 0 {
        return Err(BoundsError::QueryShape(
            "query has mediators; use bound_with_mediators".into(),
        ));
    }
    outcome_bound(model, query, spec, dir, cfg, &[], &[OUTCOME_STREAM])
}

/// Recursive accumulation over the mediator chain.
///
/// At level `i` (0-based mediator index) the downstream bound is computed
/// for every support value, the support is permuted ascending by downstream
/// bound (ties broken by support value), and the permuted pmf is shifted
/// before taking the weighted sum.
fn level_bound(
    model: &dyn ConditionalModel,
    query: &CausalQuery,
    spec: &SensitivitySpec,
    dir: Direction,
    cfg: &EvalConfig,
    i: usize,
    m_prefix: &mut Vec<f64>,
    path: &mut Vec<u64>,
) -> Result<f64, BoundsError> {
    if i == query.num_mediators() {
        return outcome_bound(model, query, spec, dir, cfg, m_prefix, path);
    }
    let a_i = query.treatments[i];
    let pmf = model.mediator_pmf(i, &query.x, m_prefix, a_i)?;
    if pmf.len() == 0 || pmf.probs().iter().sum::<f64>() <= 0.0 {
        return Err(BoundsError::EmptyMediatorSupport(m_prefix.clone()));
    }
    let support = pmf.support().to_vec();

    let mut downstream = Vec::with_capacity(support.len());
    for (j, &value) in support.iter().enumerate() {
        m_prefix.push(value);
        path.push(j as u64 + 1);
        let q = level_bound(model, query, spec, dir, cfg, i + 1, m_prefix, path)?;
        path.pop();
        m_prefix.pop();
        downstream.push(q);
    }

    // Ascending permutation by downstream bound, ties by support value.
    let mut order: Vec<usize> = (0..support.len()).collect();
    order.sort_by(|&a, &b| {
        downstream[a]
            .partial_cmp(&downstream[b])
            .expect("finite downstream bounds")
            .then(support[a].partial_cmp(&support[b]).expect("finite support"))
    });

    let node_bounds = spec.ratio_bounds(
        &query.mediators[i],
        &node_context(model, &query.x, a_i),
    )?;
    let permuted_probs: Vec<f64> = order.iter().map(|&j| pmf.probs()[j]).collect();
    let positions: Vec<f64> = (0..support.len()).map(|j| j as f64).collect();
    let permuted = DiscreteDist::new(positions, permuted_probs)?;
    let shifted = shift_discrete(&permuted, &node_bounds, dir)?;

    Ok(order
        .iter()
        .zip(shifted.probs())
        .map(|(&j, p)| downstream[j] * p)
        .sum())
}

/// Bound for a query with at least one mediator.
pub fn bound_with_mediators(
    model: &dyn ConditionalModel,
    query: &CausalQuery,
    spec: &SensitivitySpec,
    dir: Direction,
    cfg: &EvalConfig,
) -> Result<f64, BoundsError> {
    if query.num_mediators() == 0 {
        return Err(BoundsError::QueryShape(
            "query has no mediators; use bound_no_mediators".into(),
        ));
    }
    let mut prefix = Vec::new();
    let mut path = vec![OUTCOME_STREAM];
    level_bound(model, query, spec, dir, cfg, 0, &mut prefix, &mut path)
}

/// Single-direction bound, dispatching on the mediator count.
pub fn bound(
    model: &dyn ConditionalModel,
    query: &CausalQuery,
    spec: &SensitivitySpec,
    dir: Direction,
    cfg: &EvalConfig,
) -> Result<f64, BoundsError> {
    if query.num_mediators() == 0 {
        bound_no_mediators(model, query, spec, dir, cfg)
    } else {
        bound_with_mediators(model, query, spec, dir, cfg)
    }
}

/// Per-node diagnostics attached to a bounds result.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeDiagnostics {
    pub node: String,
    pub bounds: RatioBounds,
    /// Sharpness flag when the propensity is known; `None` otherwise.
    pub sharp: Option<bool>,
}

/// Two-sided bound with the per-node ratio bounds that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsResult {
    pub lower: f64,
    pub upper: f64,
    pub nodes: Vec<NodeDiagnostics>,
    pub k: usize,
    pub seed: u64,
}

/// Computes both directions plus diagnostics.
pub fn compute_bounds(
    model: &dyn ConditionalModel,
    query: &CausalQuery,
    spec: &SensitivitySpec,
    cfg: &EvalConfig,
) -> Result<BoundsResult, BoundsError> {
    let upper = bound(model, query, spec, Direction::Upper, cfg)?;
    let lower = bound(model, query, spec, Direction::Lower, cfg)?;

    let mut nodes = Vec::new();
    for (i, label) in query
        .mediators
        .iter()
        .map(String::as_str)
        .chain(std::iter::once(OUTCOME_NODE))
        .enumerate()
    {
        let a = query.treatments[i];
        let ctx = node_context(model, &query.x, a);
        let node_bounds = spec.ratio_bounds(label, &ctx)?;
        let sharp = ctx
            .propensity
            .map(|p| is_sharp(&node_bounds, p, model.treatment_kind()));
        nodes.push(NodeDiagnostics {
            node: label.to_string(),
            bounds: node_bounds,
            sharp,
        });
    }

    Ok(BoundsResult {
        lower,
        upper,
        nodes,
        k: cfg.k,
        seed: cfg.seed,
    })
}

/// Average of per-covariate bounds over an empirical covariate sample.
pub fn bound_average(
    model: &dyn ConditionalModel,
    query: &CausalQuery,
    spec: &SensitivitySpec,
    dir: Direction,
    xs: &[Vec<f64>],
    cfg: &EvalConfig,
) -> Result<f64, BoundsError> {
    if xs.is_empty() {
        return Err(BoundsError::QueryShape(
            "covariate sample must be non-empty".into(),
        ));
    }
    let per_x: Result<Vec<f64>, BoundsError> = xs
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let sub_cfg = EvalConfig {
                k: cfg.k,
                seed: derive_seed(cfg.seed, &[AVERAGE_STREAM, i as u64]),
            };
            bound(model, &query.with_x(x.clone()), spec, dir, &sub_cfg)
        })
        .collect();
    let per_x = per_x?;
    Ok(per_x.iter().sum::<f64>() / per_x.len() as f64)
}

/// Difference bounds between two queries sharing covariates and functional:
/// upper is the first query's upper minus the second's lower, and vice
/// versa.
pub fn bound_difference(
    model: &dyn ConditionalModel,
    query1: &CausalQuery,
    query2: &CausalQuery,
    spec: &SensitivitySpec,
    cfg: &EvalConfig,
) -> Result<(f64, f64), BoundsError> {
    if query1.x != query2.x
        || query1.functional != query2.functional
        || query1.mediators != query2.mediators
    {
        return Err(BoundsError::QueryShape(
            "difference queries must share covariates, functional, and mediators".into(),
        ));
    }
    let upper = bound(model, query1, spec, Direction::Upper, cfg)?
        - bound(model, query2, spec, Direction::Lower, cfg)?;
    let lower = bound(model, query1, spec, Direction::Lower, cfg)?
        - bound(model, query2, spec, Direction::Upper, cfg)?;
    Ok((lower, upper))
}
