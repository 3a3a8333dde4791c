//! Command implementations.

use std::io::Write;
use std::path::PathBuf;

use serde::Serialize;

use csa_core::benchmark::{linspace, run_validation, ValidationConfig};
use csa_core::bounds::{
    bound_average, bound_difference, compute_bounds, CausalQuery, EvalConfig, NodeDiagnostics,
};
use csa_core::estimate::{FittedModel, ObservedData};
use csa_core::functionals::Functional;
use csa_core::model::{SensitivityEntry, SensitivitySpec};
use csa_core::seed::{derive_seed, derived_rng};
use csa_core::shift::Direction;
use csa_core::synth::{oracle_effect, oracle_gamma, sample_dataset, ScmNode, ScmTreatment};
use csa_core::dist::{Cdf, SampleDist};

use crate::config::{
    config_hash, BoundConfig, Command, QueryConfig, RunConfig, SweepSpec,
};
use crate::data::read_csv;
use crate::error::CliError;

const BOOTSTRAP_STREAM: u64 = 0xb0;
const EVAL_STREAM: u64 = 0xe1;

/// Executes the configured command, writing to the configured output path
/// (or stdout when none is given).
pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    if let Some(threads) = cfg.threads {
        // A process has one global pool; later calls keep the first size.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let bytes = match cfg.command {
        Command::Simulate => simulate(cfg)?,
        Command::Oracle => oracle(cfg)?,
        Command::Bound => bound_command(cfg, None)?,
        Command::Sweep => {
            let sweep = cfg.section(&cfg.sweep, "sweep")?.clone();
            bound_command(cfg, Some(&sweep))?
        }
        Command::Validate => validate(cfg)?,
    };
    write_output(&cfg.output, &bytes)
}

fn write_output(path: &Option<PathBuf>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(path) => {
            std::fs::write(path, bytes)?;
            Ok(())
        }
        None => {
            std::io::stdout().write_all(bytes)?;
            Ok(())
        }
    }
}

fn to_pretty_json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut bytes =
        serde_json::to_vec_pretty(value).map_err(|e| CliError::Numeric(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn simulate(cfg: &RunConfig) -> Result<Vec<u8>, CliError> {
    let section = cfg.section(&cfg.simulate, "simulate")?;
    let scm = section.scm.resolve(cfg.seed)?;
    let dataset = sample_dataset(&scm, section.n)?;
    let mut bytes = Vec::new();
    dataset.write_csv(
        &mut bytes,
        section.include_hidden,
        scm.treatment == ScmTreatment::Binary,
    )?;
    Ok(bytes)
}

fn query_nodes(query: &QueryConfig) -> Vec<(String, f64)> {
    let mut nodes: Vec<(String, f64)> = query
        .mediators
        .iter()
        .zip(&query.treatments)
        .map(|(m, a)| (m.clone(), *a))
        .collect();
    nodes.push((
        "y".to_string(),
        *query.treatments.last().expect("validated query"),
    ));
    nodes
}

fn scm_node(label: &str) -> Result<ScmNode, CliError> {
    match label {
        "m1" => Ok(ScmNode::M1),
        "m2" => Ok(ScmNode::M2),
        "y" => Ok(ScmNode::Y),
        other => Err(CliError::Config(format!("unknown node '{other}'"))),
    }
}

#[derive(Serialize)]
struct OracleRecord {
    config_hash: String,
    seed: u64,
    n_mc: usize,
    x: Vec<f64>,
    treatments: Vec<f64>,
    functional: Functional,
    mediators: Vec<String>,
    oracle: f64,
    gamma_star: Vec<(String, f64)>,
}

fn oracle(cfg: &RunConfig) -> Result<Vec<u8>, CliError> {
    let section = cfg.section(&cfg.oracle, "oracle")?;
    let scm = section.scm.resolve(cfg.seed)?;
    let hash = config_hash(cfg)?;
    let nodes = query_nodes(&section.query);

    let eval_point = |x: Vec<f64>| -> Result<OracleRecord, CliError> {
        let query = CausalQuery::new(
            x.clone(),
            section.query.treatments.clone(),
            section.query.functional,
            section.query.mediators.clone(),
        )?;
        let oracle = oracle_effect(&scm, &query, section.n_mc)?;
        let mut gamma_star = Vec::new();
        for (label, a) in &nodes {
            gamma_star.push((
                label.clone(),
                oracle_gamma(&scm, scm_node(label)?, x[0], *a)?,
            ));
        }
        Ok(OracleRecord {
            config_hash: hash.clone(),
            seed: cfg.seed,
            n_mc: section.n_mc,
            x,
            treatments: section.query.treatments.clone(),
            functional: section.query.functional,
            mediators: section.query.mediators.clone(),
            oracle,
            gamma_star,
        })
    };

    match &section.grid {
        None => {
            let x = section
                .query
                .x
                .clone()
                .ok_or_else(|| CliError::Config("oracle query needs 'x' or a grid".into()))?;
            to_pretty_json(&eval_point(x)?)
        }
        Some(grid) => {
            let mut out = Vec::new();
            let mut header = String::from("config_hash,seed,n_mc,x,oracle");
            for (label, _) in &nodes {
                header.push_str(&format!(",gamma_star_{label}"));
            }
            writeln!(out, "{header}")?;
            for x in linspace(grid.min, grid.max, grid.points) {
                let rec = eval_point(vec![x])?;
                let mut line = format!(
                    "{},{},{},{},{}",
                    rec.config_hash, rec.seed, rec.n_mc, x, rec.oracle
                );
                for (_, g) in &rec.gamma_star {
                    line.push_str(&format!(",{g}"));
                }
                writeln!(out, "{line}")?;
            }
            Ok(out)
        }
    }
}

#[derive(Serialize, Clone)]
struct BootstrapSummary {
    replicates: usize,
    lower_ci: [f64; 2],
    upper_ci: [f64; 2],
    /// Set when the replicate count is too small for stable percentiles.
    small_b_warning: bool,
}

#[derive(Serialize)]
struct BoundRecord {
    config_hash: String,
    seed: u64,
    k: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    x: Option<Vec<f64>>,
    treatments: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    contrast_treatments: Option<Vec<f64>>,
    functional: Functional,
    mediators: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    averaged: bool,
    lower: f64,
    upper: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    nodes: Option<Vec<NodeDiagnostics>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bootstrap: Option<BootstrapSummary>,
}

/// Applies a swept sensitivity parameter to the listed nodes.
fn apply_sweep_gamma(
    base: &SensitivitySpec,
    nodes: &[String],
    gamma: f64,
) -> Result<SensitivitySpec, CliError> {
    let mut spec = base.clone();
    for node in nodes {
        let entry = base
            .entry(node)
            .ok_or_else(|| CliError::Config(format!("sweep node '{node}' has no entry")))?;
        match entry {
            SensitivityEntry::Weighted { weight, .. } => {
                spec.insert(
                    node.clone(),
                    SensitivityEntry::Weighted {
                        gamma,
                        weight: weight.clone(),
                    },
                )?;
            }
            _ => {
                return Err(CliError::Config(format!(
                    "sweep node '{node}' must use a weighted entry"
                )))
            }
        }
    }
    Ok(spec)
}

/// Deterministically thins covariate rows for averaged bounds.
fn covariate_sample(data: &ObservedData, max_rows: usize) -> Vec<Vec<f64>> {
    let n = data.len();
    let take = max_rows.max(1).min(n);
    (0..take)
        .map(|i| {
            let row = i * n / take;
            data.x.iter().map(|col| col[row]).collect()
        })
        .collect()
}

struct Evaluation {
    lower: f64,
    upper: f64,
    nodes: Option<Vec<NodeDiagnostics>>,
}

fn evaluate(
    model: &FittedModel,
    section: &BoundConfig,
    spec: &SensitivitySpec,
    x: Option<&[f64]>,
    xs_average: Option<&[Vec<f64>]>,
    eval: &EvalConfig,
) -> Result<Evaluation, CliError> {
    let query = CausalQuery::new(
        x.map(|x| x.to_vec()).unwrap_or_else(|| vec![0.0]),
        section.query.treatments.clone(),
        section.query.functional,
        section.query.mediators.clone(),
    )?;
    if let Some(xs) = xs_average {
        if let Some(contrast) = &section.contrast_treatments {
            let query2 = CausalQuery::new(
                query.x.clone(),
                contrast.clone(),
                section.query.functional,
                section.query.mediators.clone(),
            )?;
            let upper = bound_average(model, &query, spec, Direction::Upper, xs, eval)?
                - bound_average(model, &query2, spec, Direction::Lower, xs, eval)?;
            let lower = bound_average(model, &query, spec, Direction::Lower, xs, eval)?
                - bound_average(model, &query2, spec, Direction::Upper, xs, eval)?;
            return Ok(Evaluation {
                lower,
                upper,
                nodes: None,
            });
        }
        let upper = bound_average(model, &query, spec, Direction::Upper, xs, eval)?;
        let lower = bound_average(model, &query, spec, Direction::Lower, xs, eval)?;
        return Ok(Evaluation {
            lower,
            upper,
            nodes: None,
        });
    }
    if let Some(contrast) = &section.contrast_treatments {
        let query2 = CausalQuery::new(
            query.x.clone(),
            contrast.clone(),
            section.query.functional,
            section.query.mediators.clone(),
        )?;
        let (lower, upper) = bound_difference(model, &query, &query2, spec, eval)?;
        return Ok(Evaluation {
            lower,
            upper,
            nodes: None,
        });
    }
    let result = compute_bounds(model, &query, spec, eval)?;
    Ok(Evaluation {
        lower: result.lower,
        upper: result.upper,
        nodes: Some(result.nodes),
    })
}

fn resample(data: &ObservedData, seed: u64) -> ObservedData {
    use rand::RngExt;
    let n = data.len();
    let mut rng = derived_rng(seed, &[BOOTSTRAP_STREAM]);
    let picks: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    let gather = |col: &Vec<f64>| picks.iter().map(|&i| col[i]).collect::<Vec<f64>>();
    ObservedData {
        x: data.x.iter().map(gather).collect(),
        a: gather(&data.a),
        mediators: data.mediators.iter().map(gather).collect(),
        y: gather(&data.y),
    }
}

fn percentile_interval(values: &[f64]) -> Result<[f64; 2], CliError> {
    let sample = SampleDist::from_unsorted(values.to_vec())?;
    Ok([sample.quantile(0.025)?, sample.quantile(0.975)?])
}

#[allow(clippy::too_many_arguments)]
fn bootstrap_summary(
    data: &ObservedData,
    section: &BoundConfig,
    spec: &SensitivitySpec,
    x: Option<&[f64]>,
    use_average: bool,
    replicates: usize,
    seed: u64,
) -> Result<BootstrapSummary, CliError> {
    if replicates == 0 {
        return Err(CliError::Config("bootstrap replicates must be >= 1".into()));
    }
    let mut lowers = Vec::with_capacity(replicates);
    let mut uppers = Vec::with_capacity(replicates);
    for b in 0..replicates {
        let replicate_seed = derive_seed(seed, &[BOOTSTRAP_STREAM, b as u64]);
        let redata = resample(data, replicate_seed);
        let model = FittedModel::fit(&redata, &section.fit, section.treatment)?;
        let xs = use_average.then(|| covariate_sample(&redata, section.average_rows));
        let eval = EvalConfig {
            k: section.k,
            seed: derive_seed(replicate_seed, &[EVAL_STREAM]),
        };
        let evaluation = evaluate(&model, section, spec, x, xs.as_deref(), &eval)?;
        lowers.push(evaluation.lower);
        uppers.push(evaluation.upper);
    }
    Ok(BootstrapSummary {
        replicates,
        lower_ci: percentile_interval(&lowers)?,
        upper_ci: percentile_interval(&uppers)?,
        small_b_warning: replicates < 20,
    })
}

fn bound_command(cfg: &RunConfig, sweep: Option<&SweepSpec>) -> Result<Vec<u8>, CliError> {
    let section = cfg.section(&cfg.bound, "bound")?;
    section
        .sensitivity
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    section.query.functional.validate()?;
    if section.query.treatments.len() != section.query.mediators.len() + 1 {
        return Err(CliError::Config(
            "query needs one treatment per mediator plus one for the outcome".into(),
        ));
    }
    if let Some(contrast) = &section.contrast_treatments {
        if contrast.len() != section.query.treatments.len() {
            return Err(CliError::Config(
                "contrast_treatments must match the query's treatment count".into(),
            ));
        }
    }
    let hash = config_hash(cfg)?;
    let data = read_csv(&section.data, &section.columns)?;
    let model = FittedModel::fit(&data, &section.fit, section.treatment)?;

    let gammas: Vec<Option<f64>> = match sweep {
        Some(sweep) => sweep.gammas.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    let points: Vec<Option<Vec<f64>>> = if section.average {
        vec![None]
    } else {
        match &section.grid {
            Some(grid) => linspace(grid.min, grid.max, grid.points)
                .into_iter()
                .map(|x| Some(vec![x]))
                .collect(),
            None => {
                let x = section
                    .query
                    .x
                    .clone()
                    .ok_or_else(|| CliError::Config("bound query needs 'x' or a grid".into()))?;
                vec![Some(x)]
            }
        }
    };
    let xs_average = section
        .average
        .then(|| covariate_sample(&data, section.average_rows));

    let mut records = Vec::new();
    for gamma in &gammas {
        let spec = match (gamma, sweep) {
            (Some(g), Some(sweep)) => apply_sweep_gamma(&section.sensitivity, &sweep.nodes, *g)?,
            _ => section.sensitivity.clone(),
        };
        for (pi, point) in points.iter().enumerate() {
            let eval = EvalConfig {
                k: section.k,
                seed: derive_seed(cfg.seed, &[EVAL_STREAM, pi as u64]),
            };
            let evaluation = evaluate(
                &model,
                section,
                &spec,
                point.as_deref(),
                xs_average.as_deref(),
                &eval,
            )?;
            if !(evaluation.lower.is_finite() && evaluation.upper.is_finite()) {
                return Err(CliError::Numeric("non-finite bound".into()));
            }
            let bootstrap = match &section.bootstrap {
                Some(b) => Some(bootstrap_summary(
                    &data,
                    section,
                    &spec,
                    point.as_deref(),
                    section.average,
                    b.replicates,
                    cfg.seed,
                )?),
                None => None,
            };
            records.push(BoundRecord {
                config_hash: hash.clone(),
                seed: cfg.seed,
                k: section.k,
                x: point.clone(),
                treatments: section.query.treatments.clone(),
                contrast_treatments: section.contrast_treatments.clone(),
                functional: section.query.functional,
                mediators: section.query.mediators.clone(),
                gamma: *gamma,
                averaged: section.average,
                lower: evaluation.lower,
                upper: evaluation.upper,
                nodes: evaluation.nodes,
                bootstrap,
            });
        }
    }

    if records.len() == 1 && sweep.is_none() && section.grid.is_none() {
        return to_pretty_json(&records[0]);
    }
    records_to_csv(&records)
}

fn records_to_csv(records: &[BoundRecord]) -> Result<Vec<u8>, CliError> {
    let mut out = Vec::new();
    let with_ci = records.iter().any(|r| r.bootstrap.is_some());
    let mut header = String::from("config_hash,seed,k,gamma,x,treatments,lower,upper,sharp");
    if with_ci {
        header.push_str(",lower_ci_lo,lower_ci_hi,upper_ci_lo,upper_ci_hi,small_b_warning");
    }
    writeln!(out, "{header}")?;
    for r in records {
        let x = r
            .x
            .as_ref()
            .map(|x| {
                x.iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join("|")
            })
            .unwrap_or_else(|| "avg".into());
        let treatments = r
            .treatments
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join("|");
        let gamma = r.gamma.map(|g| g.to_string()).unwrap_or_default();
        let sharp = r
            .nodes
            .as_ref()
            .map(|nodes| {
                nodes
                    .iter()
                    .map(|n| {
                        format!(
                            "{}={}",
                            n.node,
                            n.sharp.map(|s| s.to_string()).unwrap_or_else(|| "na".into())
                        )
                    })
                    .collect::<Vec<_>>()
                    .join(";")
            })
            .unwrap_or_default();
        let mut line = format!(
            "{},{},{},{},{},{},{},{},{}",
            r.config_hash, r.seed, r.k, gamma, x, treatments, r.lower, r.upper, sharp
        );
        if with_ci {
            match &r.bootstrap {
                Some(b) => line.push_str(&format!(
                    ",{},{},{},{},{}",
                    b.lower_ci[0], b.lower_ci[1], b.upper_ci[0], b.upper_ci[1], b.small_b_warning
                )),
                None => line.push_str(",,,,,"),
            }
        }
        writeln!(out, "{line}")?;
    }
    Ok(out)
}

#[derive(Serialize)]
struct ValidateSummary {
    config_hash: String,
    seed: u64,
    coverage: f64,
    nodes: Vec<String>,
    gammas: Vec<f64>,
}

fn validate(cfg: &RunConfig) -> Result<Vec<u8>, CliError> {
    let section = cfg.section(&cfg.validate, "validate")?;
    let scm = section.scm.resolve(cfg.seed)?;
    let hash = config_hash(cfg)?;
    let report = run_validation(&ValidationConfig {
        scm,
        n: section.n,
        grid_points: section.grid_points,
        gamma_margin: section.gamma_margin,
        delta: section.delta,
        k: section.k,
        n_mc: section.n_mc,
        fit: section.fit,
        treatments: section.treatments.clone(),
        mediators: section.mediators.clone(),
        functional: section.functional,
    })?;

    let mut out = Vec::new();
    let mut header = String::from("config_hash,seed,x");
    for node in &report.node_order {
        header.push_str(&format!(",gamma_star_{node}"));
    }
    header.push_str(",lower,upper,oracle,covered");
    writeln!(out, "{header}")?;
    for row in &report.rows {
        let mut line = format!("{},{},{}", hash, cfg.seed, row.x);
        for g in &row.gamma_stars {
            line.push_str(&format!(",{g}"));
        }
        line.push_str(&format!(
            ",{},{},{},{}",
            row.lower, row.upper, row.oracle, row.covered
        ));
        writeln!(out, "{line}")?;
    }

    let summary = ValidateSummary {
        config_hash: hash,
        seed: cfg.seed,
        coverage: report.coverage,
        nodes: report.node_order.clone(),
        gammas: report.gammas.clone(),
    };
    eprintln!(
        "{}",
        serde_json::to_string(&summary).map_err(|e| CliError::Numeric(e.to_string()))?
    );
    Ok(out)
}
