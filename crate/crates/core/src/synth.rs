//! Synthetic SCM benchmark: data generation, Monte Carlo oracle effects,
//! and oracle sensitivity parameters.
//!
//! The data-generating process has a scalar covariate, a binary or
//! continuous treatment, two binary mediators, and a continuous outcome.
//! Three hidden binary confounders act between the treatment and the
//! mediators/outcome; their strengths are the `gamma_*` parameters and the
//! node noise levels are the `rho_*` parameters. Presets pin the benchmark
//! settings.

use rand::distr::Distribution;
use rand::{Rng, RngExt};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, Normal};
use thiserror::Error;

use crate::bounds::CausalQuery;
use crate::dist::Cdf;
use crate::dist::SampleDist;
use crate::functionals::Functional;
use crate::seed::derived_rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("noise level must be positive, got {0}")]
    InvalidNoise(f64),
    #[error("invalid Beta parameters at row {row}: alpha = beta = {alpha} <= 0")]
    InvalidBetaParams { alpha: f64, row: usize },
    #[error("degenerate propensity at x = {x}, a = {a}")]
    DegeneratePropensity { x: f64, a: f64 },
    #[error("binary treatment value must be 0 or 1, got {0}")]
    NonBinaryTreatment(f64),
    #[error("unknown node '{0}'")]
    UnknownNode(String),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("sample size must be at least 1")]
    EmptyRequest,
}

/// Treatment mechanism of the synthetic SCM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScmTreatment {
    Binary,
    Continuous,
}

/// Where the hidden confounders act on the treatment mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfoundedRegion {
    /// Confounding everywhere (the default benchmark settings).
    All,
    /// Confounding only for covariates below zero (the weighted-restriction
    /// benchmark variant).
    NegativeX,
}

/// Benchmark presets pinning the confounding and noise parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScmPreset {
    #[serde(rename = "setting_i")]
    SettingI,
    #[serde(rename = "setting_ii")]
    SettingII,
    #[serde(rename = "setting_iii")]
    SettingIII,
    #[serde(rename = "setting_i_weighted")]
    SettingIWeighted,
}

/// Hidden-confounder nodes of the synthetic SCM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScmNode {
    M1,
    M2,
    Y,
}

/// Full parameterization of the synthetic data-generating process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScmConfig {
    pub treatment: ScmTreatment,
    pub gamma_m1: f64,
    pub gamma_m2: f64,
    pub gamma_y: f64,
    pub rho_m1: f64,
    pub rho_m2: f64,
    pub rho_y: f64,
    #[serde(default = "default_region")]
    pub region: ConfoundedRegion,
    #[serde(default)]
    pub seed: u64,
}

fn default_region() -> ConfoundedRegion {
    ConfoundedRegion::All
}

impl ScmConfig {
    /// Loads a preset. For `SettingI` the outcome noise depends on the
    /// treatment kind; `SettingIWeighted` is continuous-only and confines
    /// confounding to negative covariates.
    pub fn preset(preset: ScmPreset, treatment: ScmTreatment, seed: u64) -> Self {
        let (gamma, rho, region, treatment) = match preset {
            ScmPreset::SettingI => {
                let rho_y = match treatment {
                    ScmTreatment::Binary => 2.0,
                    ScmTreatment::Continuous => 1.0,
                };
                ((0.0, 0.0, 1.5), (0.2, 0.2, rho_y), ConfoundedRegion::All, treatment)
            }
            ScmPreset::SettingII => (
                (1.5, 0.0, 1.5),
                (1.0, 0.2, 1.0),
                ConfoundedRegion::All,
                treatment,
            ),
            ScmPreset::SettingIII => (
                (1.5, 1.5, 1.5),
                (0.2, 0.2, 1.0),
                ConfoundedRegion::All,
                treatment,
            ),
            ScmPreset::SettingIWeighted => (
                (0.0, 0.0, 1.5),
                (0.2, 0.2, 1.0),
                ConfoundedRegion::NegativeX,
                ScmTreatment::Continuous,
            ),
        };
        Self {
            treatment,
            gamma_m1: gamma.0,
            gamma_m2: gamma.1,
            gamma_y: gamma.2,
            rho_m1: rho.0,
            rho_m2: rho.1,
            rho_y: rho.2,
            region,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        for rho in [self.rho_m1, self.rho_m2, self.rho_y] {
            if !(rho > 0.0) || !rho.is_finite() {
                return Err(SynthError::InvalidNoise(rho));
            }
        }
        Ok(())
    }

    fn confounding_scale(&self, x: f64) -> f64 {
        match self.region {
            ConfoundedRegion::All => 1.0,
            ConfoundedRegion::NegativeX => {
                if x < 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// P(A = 1 | x, u) for the binary mechanism.
    fn binary_propensity(&self, x: f64, u: [f64; 3]) -> f64 {
        let scale = self.confounding_scale(x);
        let z = 3.0 * x
            + scale * (self.gamma_m1 * u[0] + self.gamma_m2 * u[1] + self.gamma_y * u[2]);
        sigmoid(z)
    }

    /// Shared Beta shape for the continuous mechanism.
    fn beta_shape(&self, x: f64, u: [f64; 3]) -> f64 {
        let scale = self.confounding_scale(x);
        2.0 + x
            + scale
                * (self.gamma_m1 * (u[0] - 0.5)
                    + self.gamma_m2 * (u[1] - 0.5)
                    + self.gamma_y * (u[2] - 0.5))
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn mediator_base(x: f64, a: f64) -> f64 {
    a * x.sin() + (1.0 - a) * (4.0 * x).sin()
}

/// Mean outcome as a function of covariate, treatment, and mediators.
fn outcome_mean(x: f64, a: f64, m1: f64, m2: f64) -> f64 {
    let s1 = x.sin();
    let s4 = (4.0 * x).sin();
    let s8 = (8.0 * x).sin();
    a * m1 * m2 * s1 + (1.0 - a) * m1 * m2 * s4
        + a * m1 * (1.0 - m2) * s8
        + (1.0 - a) * m1 * (1.0 - m2) * s1
        - a * (1.0 - m1) * m2 * s1
        - (1.0 - a) * (1.0 - m1) * m2 * s4
        - a * (1.0 - m1) * (1.0 - m2) * s8
        - (1.0 - a) * (1.0 - m1) * (1.0 - m2) * s1
}

fn assign_m1(cfg: &ScmConfig, x: f64, a: f64, u: f64, eps: f64) -> f64 {
    let z = mediator_base(x, a) + cfg.rho_m1 * ((u - 0.5) + eps);
    if z > 0.0 {
        1.0
    } else {
        0.0
    }
}

fn assign_m2(cfg: &ScmConfig, x: f64, a: f64, m1: f64, u: f64, eps: f64) -> f64 {
    let z = (2.0 * m1 - 1.0) * mediator_base(x, a) + cfg.rho_m2 * ((u - 0.5) + eps);
    if z > 0.0 {
        1.0
    } else {
        0.0
    }
}

fn assign_y(cfg: &ScmConfig, x: f64, a: f64, m1: f64, m2: f64, u: f64, eps: f64) -> f64 {
    outcome_mean(x, a, m1, m2) + cfg.rho_y * ((u - 0.5) + eps)
}

/// Column-oriented i.i.d. draws from the SCM, including the hidden
/// confounders for oracle use.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Vec<f64>,
    pub a: Vec<f64>,
    pub m1: Vec<f64>,
    pub m2: Vec<f64>,
    pub y: Vec<f64>,
    pub u_m1: Vec<f64>,
    pub u_m2: Vec<f64>,
    pub u_y: Vec<f64>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Writes the dataset as CSV. Real-valued columns carry 17 significant
    /// digits; binary columns are written as integers.
    pub fn write_csv<W: std::io::Write>(
        &self,
        mut w: W,
        include_hidden: bool,
        binary_treatment: bool,
    ) -> std::io::Result<()> {
        if include_hidden {
            writeln!(w, "x,a,m1,m2,y,u_m1,u_m2,u_y")?;
        } else {
            writeln!(w, "x,a,m1,m2,y")?;
        }
        let real = |v: f64| format!("{v:.16e}");
        let bin = |v: f64| format!("{}", v as i64);
        for i in 0..self.len() {
            let a = if binary_treatment {
                bin(self.a[i])
            } else {
                real(self.a[i])
            };
            if include_hidden {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{}",
                    real(self.x[i]),
                    a,
                    bin(self.m1[i]),
                    bin(self.m2[i]),
                    real(self.y[i]),
                    bin(self.u_m1[i]),
                    bin(self.u_m2[i]),
                    bin(self.u_y[i]),
                )?;
            } else {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    real(self.x[i]),
                    a,
                    bin(self.m1[i]),
                    bin(self.m2[i]),
                    real(self.y[i]),
                )?;
            }
        }
        Ok(())
    }
}

// Stream tags for the per-column, per-row generators.
const COL_X: u64 = 1;
const COL_U_M1: u64 = 2;
const COL_U_M2: u64 = 3;
const COL_U_Y: u64 = 4;
const COL_A: u64 = 5;
const COL_EPS_M1: u64 = 6;
const COL_EPS_M2: u64 = 7;
const COL_EPS_Y: u64 = 8;
const ORACLE_STREAM: u64 = 100;

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal parameters")
}

/// Draws `n` i.i.d. rows from the configured SCM.
///
/// Every column/row pair has its own derived random stream, so the draws
/// are reproducible, order-independent, and unaffected by adding columns.
/// Continuous treatments with a non-positive Beta shape are an error; the
/// shape is never clamped.
pub fn sample_dataset(cfg: &ScmConfig, n: usize) -> Result<Dataset, SynthError> {
    cfg.validate()?;
    if n == 0 {
        return Err(SynthError::EmptyRequest);
    }
    let normal = std_normal();
    let rows: Result<Vec<[f64; 8]>, SynthError> = (0..n)
        .into_par_iter()
        .map(|i| {
            let row = i as u64;
            let draw = |col: u64| -> f64 {
                derived_rng(cfg.seed, &[col, row]).random::<f64>()
            };
            let x = -1.0 + 2.0 * draw(COL_X);
            let u_m1 = if draw(COL_U_M1) < 0.5 { 0.0 } else { 1.0 };
            let u_m2 = if draw(COL_U_M2) < 0.5 { 0.0 } else { 1.0 };
            let u_y = if draw(COL_U_Y) < 0.5 { 0.0 } else { 1.0 };
            let u = [u_m1, u_m2, u_y];
            let a = match cfg.treatment {
                ScmTreatment::Binary => {
                    let p = cfg.binary_propensity(x, u);
                    if draw(COL_A) < p {
                        1.0
                    } else {
                        0.0
                    }
                }
                ScmTreatment::Continuous => {
                    let shape = cfg.beta_shape(x, u);
                    if !(shape > 0.0) {
                        return Err(SynthError::InvalidBetaParams {
                            alpha: shape,
                            row: i,
                        });
                    }
                    let beta = Beta::new(shape, shape).expect("positive shape");
                    beta.sample(&mut derived_rng(cfg.seed, &[COL_A, row]))
                }
            };
            let eps = |col: u64| normal.sample(&mut derived_rng(cfg.seed, &[col, row]));
            let m1 = assign_m1(cfg, x, a, u_m1, eps(COL_EPS_M1));
            let m2 = assign_m2(cfg, x, a, m1, u_m2, eps(COL_EPS_M2));
            let y = assign_y(cfg, x, a, m1, m2, u_y, eps(COL_EPS_Y));
            Ok([x, a, m1, m2, y, u_m1, u_m2, u_y])
        })
        .collect();
    let rows = rows?;
    let mut ds = Dataset {
        x: Vec::with_capacity(n),
        a: Vec::with_capacity(n),
        m1: Vec::with_capacity(n),
        m2: Vec::with_capacity(n),
        y: Vec::with_capacity(n),
        u_m1: Vec::with_capacity(n),
        u_m2: Vec::with_capacity(n),
        u_y: Vec::with_capacity(n),
    };
    for r in rows {
        ds.x.push(r[0]);
        ds.a.push(r[1]);
        ds.m1.push(r[2]);
        ds.m2.push(r[3]);
        ds.y.push(r[4]);
        ds.u_m1.push(r[5]);
        ds.u_m2.push(r[6]);
        ds.u_y.push(r[7]);
    }
    Ok(ds)
}

/// Checks that the query's mediators are a causal prefix of the SCM chain
/// and returns the chain length.
fn chain_length(query: &CausalQuery) -> Result<usize, SynthError> {
    let chain = ["m1", "m2"];
    if query.mediators.len() > chain.len() {
        return Err(SynthError::InvalidQuery(
            "the synthetic SCM has two mediators".into(),
        ));
    }
    for (label, expected) in query.mediators.iter().zip(chain) {
        if label != expected {
            return Err(SynthError::InvalidQuery(format!(
                "mediators must be a causal prefix of [m1, m2], got '{label}'"
            )));
        }
    }
    Ok(query.mediators.len())
}

/// Interventional draws of the full mediator/outcome chain with listed
/// mediators held fixed and the rest simulated.
fn simulate_chain<R: Rng>(
    cfg: &ScmConfig,
    x: f64,
    a: f64,
    fixed: &[f64],
    rng: &mut R,
    normal: &Normal,
) -> (f64, f64) {
    let m1 = if !fixed.is_empty() {
        fixed[0]
    } else {
        let u: f64 = rng.random();
        let u = if u < 0.5 { 0.0 } else { 1.0 };
        assign_m1(cfg, x, a, u, normal.sample(rng))
    };
    let m2 = if fixed.len() > 1 {
        fixed[1]
    } else {
        let u: f64 = rng.random();
        let u = if u < 0.5 { 0.0 } else { 1.0 };
        assign_m2(cfg, x, a, m1, u, normal.sample(rng))
    };
    (m1, m2)
}

/// Monte Carlo estimate of the causal query under the true SCM.
///
/// Hidden confounders and noise are drawn from their priors (do-intervention
/// semantics), the listed mediators are enumerated over their joint support,
/// and the functional is applied to interventional outcome draws per
/// mediator combination.
pub fn oracle_effect(cfg: &ScmConfig, query: &CausalQuery, n_mc: usize) -> Result<f64, SynthError> {
    cfg.validate()?;
    if n_mc == 0 {
        return Err(SynthError::EmptyRequest);
    }
    let x = *query
        .x
        .first()
        .ok_or_else(|| SynthError::InvalidQuery("query must carry a covariate value".into()))?;
    let ell = chain_length(query)?;
    let normal = std_normal();

    let combos: Vec<Vec<f64>> = (0..(1usize << ell))
        .map(|bits| (0..ell).map(|i| ((bits >> i) & 1) as f64).collect())
        .collect();

    let totals: Result<Vec<f64>, SynthError> = combos
        .par_iter()
        .enumerate()
        .map(|(combo_idx, m_fixed)| {
            // Probability of this mediator combination under the
            // per-mediator interventions.
            let mut weight = 1.0;
            for i in 0..ell {
                let a_i = query.treatments[i];
                let mut rng = derived_rng(
                    cfg.seed,
                    &[ORACLE_STREAM, combo_idx as u64, i as u64 + 1],
                );
                let mut hits = 0usize;
                for _ in 0..n_mc {
                    let (m1, m2) = simulate_chain(cfg, x, a_i, &m_fixed[..i], &mut rng, &normal);
                    let value = if i == 0 { m1 } else { m2 };
                    if value == m_fixed[i] {
                        hits += 1;
                    }
                }
                weight *= hits as f64 / n_mc as f64;
            }
            if weight == 0.0 {
                return Ok(0.0);
            }
            // Outcome draws under the final intervention.
            let a_out = query.outcome_treatment();
            let mut rng = derived_rng(cfg.seed, &[ORACLE_STREAM, combo_idx as u64, 0]);
            let mut draws = Vec::with_capacity(n_mc);
            for _ in 0..n_mc {
                let (m1, m2) = simulate_chain(cfg, x, a_out, m_fixed, &mut rng, &normal);
                let u: f64 = rng.random();
                let u = if u < 0.5 { 0.0 } else { 1.0 };
                draws.push(assign_y(cfg, x, a_out, m1, m2, u, normal.sample(&mut rng)));
            }
            let sample = SampleDist::from_unsorted(draws)
                .map_err(|e| SynthError::InvalidQuery(e.to_string()))?;
            let value = match query.functional {
                Functional::Expectation => sample.mean(),
                Functional::Quantile { alpha } => sample
                    .quantile(alpha)
                    .map_err(|e| SynthError::InvalidQuery(e.to_string()))?,
            };
            Ok(weight * value)
        })
        .collect();
    Ok(totals?.iter().sum())
}

fn u_combos() -> [[f64; 3]; 8] {
    let mut combos = [[0.0; 3]; 8];
    for (bits, combo) in combos.iter_mut().enumerate() {
        for j in 0..3 {
            combo[j] = ((bits >> j) & 1) as f64;
        }
    }
    combos
}

/// Treatment density/probability at `a` given `x` and one hidden
/// confounder pinned to `value`, marginalizing the others; and the fully
/// marginal law at `a` given `x`.
fn treatment_density(
    cfg: &ScmConfig,
    node: ScmNode,
    value: f64,
    x: f64,
    a: f64,
) -> Result<(f64, f64), SynthError> {
    let node_idx = match node {
        ScmNode::M1 => 0,
        ScmNode::M2 => 1,
        ScmNode::Y => 2,
    };
    let mut pinned_sum = 0.0;
    let mut pinned_count = 0.0;
    let mut marginal_sum = 0.0;
    for u in u_combos() {
        let density = match cfg.treatment {
            ScmTreatment::Binary => {
                if a != 0.0 && a != 1.0 {
                    return Err(SynthError::NonBinaryTreatment(a));
                }
                let p = cfg.binary_propensity(x, u);
                if a == 1.0 {
                    p
                } else {
                    1.0 - p
                }
            }
            ScmTreatment::Continuous => {
                let shape = cfg.beta_shape(x, u);
                if !(shape > 0.0) {
                    return Err(SynthError::InvalidBetaParams {
                        alpha: shape,
                        row: 0,
                    });
                }
                use statrs::distribution::Continuous;
                Beta::new(shape, shape).expect("positive shape").pdf(a)
            }
        };
        marginal_sum += density;
        if u[node_idx] == value {
            pinned_sum += density;
            pinned_count += 1.0;
        }
    }
    Ok((pinned_sum / pinned_count, marginal_sum / 8.0))
}

/// Smallest sensitivity parameter making the true SCM compatible with the
/// restriction at `(x, a)` for the given node.
///
/// The treatment law given each hidden-confounder value has closed form
/// (a mixture over the remaining confounders), so the density ratio is
/// evaluated exactly and inverted through the binary or continuous
/// parameterization.
pub fn oracle_gamma(cfg: &ScmConfig, node: ScmNode, x: f64, a: f64) -> Result<f64, SynthError> {
    cfg.validate()?;
    let (p0, marginal) = treatment_density(cfg, node, 0.0, x, a)?;
    let (p1, _) = treatment_density(cfg, node, 1.0, x, a)?;
    if !(marginal > 0.0) || !marginal.is_finite() {
        return Err(SynthError::DegeneratePropensity { x, a });
    }
    let r_plus = (p0 / marginal).max(p1 / marginal);
    let r_minus = (p0 / marginal).min(p1 / marginal);
    let (gamma_plus, gamma_minus) = match cfg.treatment {
        ScmTreatment::Binary => {
            if marginal >= 1.0 || r_plus * marginal >= 1.0 {
                return Err(SynthError::DegeneratePropensity { x, a });
            }
            let gamma_plus = r_plus * (1.0 - marginal) / (1.0 - r_plus * marginal);
            let gamma_minus = (1.0 / r_minus - marginal) / (1.0 - marginal);
            (gamma_plus, gamma_minus)
        }
        ScmTreatment::Continuous => (r_plus, 1.0 / r_minus),
    };
    Ok(gamma_plus.max(gamma_minus).max(1.0))
}
