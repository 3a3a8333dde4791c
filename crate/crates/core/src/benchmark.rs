//! End-to-end validity harness: simulate a benchmark SCM, fit the
//! conditional model from the sample, choose sensitivity parameters from the
//! oracle, and check that the oracle effect falls inside the bounds across a
//! covariate grid.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bounds::{compute_bounds, BoundsError, CausalQuery, EvalConfig};
use crate::estimate::{FitConfig, FitError, FittedModel, ObservedData};
use crate::functionals::Functional;
use crate::model::{ModelError, SensitivityEntry, SensitivitySpec, TreatmentKind, WeightFn};
use crate::seed::derive_seed;
use crate::synth::{
    oracle_effect, oracle_gamma, sample_dataset, ScmConfig, ScmNode, ScmTreatment, SynthError,
};

const GRID_STREAM: u64 = 0x6d;

#[derive(Debug, Error)]
pub enum BenchmarkError {
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid benchmark configuration: {0}")]
    InvalidConfig(String),
}

/// Evenly spaced grid over `[lo, hi]` inclusive.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect()
}

fn scm_node(label: &str) -> Result<ScmNode, BenchmarkError> {
    match label {
        "m1" => Ok(ScmNode::M1),
        "m2" => Ok(ScmNode::M2),
        "y" => Ok(ScmNode::Y),
        other => Err(BenchmarkError::InvalidConfig(format!(
            "unknown benchmark node '{other}'"
        ))),
    }
}

/// Configuration of one validity run.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationConfig {
    pub scm: ScmConfig,
    /// Observational sample size.
    pub n: usize,
    /// Covariate grid points over [-1, 1].
    pub grid_points: usize,
    /// Multiplier applied to the per-node maximum oracle sensitivity
    /// parameter.
    pub gamma_margin: f64,
    /// Coverage slack added on both sides of the interval.
    pub delta: f64,
    /// Outcome draws per bound evaluation.
    pub k: usize,
    /// Monte Carlo draws for the oracle effect.
    pub n_mc: usize,
    pub fit: FitConfig,
    pub treatments: Vec<f64>,
    pub mediators: Vec<String>,
    pub functional: Functional,
}

/// Per-grid-point outcome of a validity run.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationRow {
    pub x: f64,
    /// Oracle sensitivity parameters at this grid point, aligned with
    /// [`ValidationReport::node_order`].
    pub gamma_stars: Vec<f64>,
    pub lower: f64,
    pub upper: f64,
    pub oracle: f64,
    pub covered: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    /// Confounded nodes in query order (mediators then outcome).
    pub node_order: Vec<String>,
    /// Sensitivity parameters used for the bounds (margin times the grid
    /// maximum of the oracle parameter, floored at 1).
    pub gammas: Vec<f64>,
    pub rows: Vec<ValidationRow>,
    /// Fraction of grid points whose oracle effect lies inside the slack
    /// interval.
    pub coverage: f64,
}

fn treatment_kind(scm: &ScmConfig) -> TreatmentKind {
    match scm.treatment {
        ScmTreatment::Binary => TreatmentKind::Discrete,
        ScmTreatment::Continuous => TreatmentKind::Continuous,
    }
}

/// Runs the simulate/fit/bound/compare loop and reports per-point coverage.
pub fn run_validation(cfg: &ValidationConfig) -> Result<ValidationReport, BenchmarkError> {
    if cfg.treatments.len() != cfg.mediators.len() + 1 {
        return Err(BenchmarkError::InvalidConfig(
            "one treatment per mediator plus one for the outcome".into(),
        ));
    }
    let dataset = sample_dataset(&cfg.scm, cfg.n)?;
    let data = ObservedData::from_dataset(&dataset, cfg.mediators.len());
    let kind = treatment_kind(&cfg.scm);
    let model = FittedModel::fit(&data, &cfg.fit, kind)?;
    let grid = linspace(-1.0, 1.0, cfg.grid_points);

    let node_order: Vec<String> = cfg
        .mediators
        .iter()
        .cloned()
        .chain(std::iter::once("y".to_string()))
        .collect();

    // Oracle sensitivity parameters per node per grid point.
    let mut gamma_star_rows = vec![Vec::with_capacity(node_order.len()); grid.len()];
    let mut gammas = Vec::with_capacity(node_order.len());
    for (i, label) in node_order.iter().enumerate() {
        let node = scm_node(label)?;
        let a = cfg.treatments[i];
        let mut max_star: f64 = 1.0;
        for (row, &x) in gamma_star_rows.iter_mut().zip(&grid) {
            let star = oracle_gamma(&cfg.scm, node, x, a)?;
            row.push(star);
            max_star = max_star.max(star);
        }
        gammas.push(cfg.gamma_margin * max_star);
    }

    let weight = match kind {
        TreatmentKind::Discrete => WeightFn::Propensity,
        TreatmentKind::Continuous => WeightFn::ConstantZero,
    };
    let mut spec = SensitivitySpec::new();
    for (label, gamma) in node_order.iter().zip(&gammas) {
        spec.insert(
            label.clone(),
            SensitivityEntry::Weighted {
                gamma: *gamma,
                weight: weight.clone(),
            },
        )?;
    }

    let rows: Result<Vec<ValidationRow>, BenchmarkError> = grid
        .par_iter()
        .enumerate()
        .map(|(i, &x)| {
            let query = CausalQuery::new(
                vec![x],
                cfg.treatments.clone(),
                cfg.functional,
                cfg.mediators.clone(),
            )?;
            let eval = EvalConfig {
                k: cfg.k,
                seed: derive_seed(cfg.scm.seed, &[GRID_STREAM, i as u64]),
            };
            let result = compute_bounds(&model, &query, &spec, &eval)?;
            let oracle = oracle_effect(&cfg.scm, &query, cfg.n_mc)?;
            let covered = oracle >= result.lower - cfg.delta && oracle <= result.upper + cfg.delta;
            Ok(ValidationRow {
                x,
                gamma_stars: gamma_star_rows[i].clone(),
                lower: result.lower,
                upper: result.upper,
                oracle,
                covered,
            })
        })
        .collect();
    let rows = rows?;
    let coverage = rows.iter().filter(|r| r.covered).count() as f64 / rows.len() as f64;

    Ok(ValidationReport {
        node_order,
        gammas,
        rows,
        coverage,
    })
}

/// Mean interval lengths of the plain and covariate-weighted restrictions
/// on the locally confounded benchmark variant.
#[derive(Debug, Clone, Serialize)]
pub struct WeightedComparisonRow {
    pub gamma: f64,
    pub plain_mean_length: f64,
    pub weighted_mean_length: f64,
}

/// Compares interval lengths under the zero-weight restriction against an
/// indicator weight that switches confounding off for positive covariates.
pub fn run_weighted_comparison(
    seed: u64,
    n: usize,
    grid_points: usize,
    gammas: &[f64],
    treatment_value: f64,
    k: usize,
    fit: &FitConfig,
) -> Result<Vec<WeightedComparisonRow>, BenchmarkError> {
    use crate::model::LookupTable;
    use crate::synth::ScmPreset;

    let scm = ScmConfig::preset(ScmPreset::SettingIWeighted, ScmTreatment::Continuous, seed);
    let dataset = sample_dataset(&scm, n)?;
    let data = ObservedData::from_dataset(&dataset, 0);
    let model = FittedModel::fit(&data, fit, TreatmentKind::Continuous)?;
    let grid = linspace(-1.0, 1.0, grid_points);

    let mut out = Vec::with_capacity(gammas.len());
    for (gi, &gamma) in gammas.iter().enumerate() {
        let mut plain = SensitivitySpec::new();
        plain.insert(
            "y",
            SensitivityEntry::Weighted {
                gamma,
                weight: WeightFn::ConstantZero,
            },
        )?;
        let mut weighted = SensitivitySpec::new();
        weighted.insert(
            "y",
            SensitivityEntry::Weighted {
                gamma,
                weight: WeightFn::Table(LookupTable {
                    x_edges: vec![0.0],
                    a_edges: None,
                    values: vec![0.0, 1.0],
                }),
            },
        )?;

        let lengths: Result<Vec<(f64, f64)>, BenchmarkError> = grid
            .par_iter()
            .enumerate()
            .map(|(i, &x)| {
                let query = CausalQuery::new(
                    vec![x],
                    vec![treatment_value],
                    Functional::Expectation,
                    vec![],
                )?;
                let eval = EvalConfig {
                    k,
                    seed: derive_seed(scm.seed, &[GRID_STREAM, gi as u64, i as u64]),
                };
                let plain_res = compute_bounds(&model, &query, &plain, &eval)?;
                let weighted_res = compute_bounds(&model, &query, &weighted, &eval)?;
                Ok((
                    plain_res.upper - plain_res.lower,
                    weighted_res.upper - weighted_res.lower,
                ))
            })
            .collect();
        let lengths = lengths?;
        let m = lengths.len() as f64;
        out.push(WeightedComparisonRow {
            gamma,
            plain_mean_length: lengths.iter().map(|l| l.0).sum::<f64>() / m,
            weighted_mean_length: lengths.iter().map(|l| l.1).sum::<f64>() / m,
        });
    }
    Ok(out)
}
