//! Run configuration: a single JSON document selecting a command plus the
//! command's section. Unknown keys are rejected everywhere.
//!
//! ```json
//! {
//!   "command": "bound",
//!   "seed": 7,
//!   "output": "bounds.json",
//!   "bound": {
//!     "data": "obs.csv",
//!     "columns": { "x": ["x"], "a": "a", "mediators": ["m1"], "y": "y" },
//!     "treatment": "discrete",
//!     "sensitivity": {
//!       "m1": { "type": "weighted", "gamma": 2.0, "weight": { "kind": "propensity" } },
//!       "y": { "type": "weighted", "gamma": 1.5, "weight": { "kind": "constant_zero" } }
//!     },
//!     "query": {
//!       "x": [0.0],
//!       "treatments": [1.0, 0.0],
//!       "functional": { "kind": "expectation" },
//!       "mediators": ["m1"]
//!     }
//!   }
//! }
//! ```

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use csa_core::estimate::FitConfig;
use csa_core::functionals::Functional;
use csa_core::model::{SensitivitySpec, TreatmentKind};
use csa_core::synth::{ConfoundedRegion, ScmConfig, ScmPreset, ScmTreatment};

use crate::error::CliError;

fn default_seed() -> u64 {
    0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Bound,
    Sweep,
    Simulate,
    Oracle,
    Validate,
}

/// Top-level run configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<BoundConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validate: Option<ValidateConfig>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Section lookup with a config error naming the missing section.
    pub fn section<'a, T>(&self, section: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
        section
            .as_ref()
            .ok_or_else(|| CliError::Config(format!("command requires a '{name}' section")))
    }
}

/// Synthetic-SCM selection: a preset, optional parameter overrides, or a
/// fully custom parameterization.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScmSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<ScmPreset>,
    pub treatment: ScmTreatment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_m1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_m2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_y: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_m1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_m2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_y: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<ConfoundedRegion>,
}

impl ScmSpec {
    pub fn resolve(&self, seed: u64) -> Result<ScmConfig, CliError> {
        let mut cfg = match self.preset {
            Some(preset) => ScmConfig::preset(preset, self.treatment, seed),
            None => {
                let require = |v: Option<f64>, name: &str| {
                    v.ok_or_else(|| {
                        CliError::Config(format!("scm without preset requires '{name}'"))
                    })
                };
                ScmConfig {
                    treatment: self.treatment,
                    gamma_m1: require(self.gamma_m1, "gamma_m1")?,
                    gamma_m2: require(self.gamma_m2, "gamma_m2")?,
                    gamma_y: require(self.gamma_y, "gamma_y")?,
                    rho_m1: require(self.rho_m1, "rho_m1")?,
                    rho_m2: require(self.rho_m2, "rho_m2")?,
                    rho_y: require(self.rho_y, "rho_y")?,
                    region: ConfoundedRegion::All,
                    seed,
                }
            }
        };
        if self.preset.is_some() {
            // Presets may be tweaked field by field.
            if let Some(v) = self.gamma_m1 {
                cfg.gamma_m1 = v;
            }
            if let Some(v) = self.gamma_m2 {
                cfg.gamma_m2 = v;
            }
            if let Some(v) = self.gamma_y {
                cfg.gamma_y = v;
            }
            if let Some(v) = self.rho_m1 {
                cfg.rho_m1 = v;
            }
            if let Some(v) = self.rho_m2 {
                cfg.rho_m2 = v;
            }
            if let Some(v) = self.rho_y {
                cfg.rho_y = v;
            }
        }
        if let Some(region) = self.region {
            cfg.region = region;
        }
        cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub scm: ScmSpec,
    pub n: usize,
    /// Write the hidden-confounder columns as well.
    #[serde(default)]
    pub include_hidden: bool,
}

/// Covariate grid over an interval.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub points: usize,
    #[serde(default = "default_grid_min")]
    pub min: f64,
    #[serde(default = "default_grid_max")]
    pub max: f64,
}

fn default_grid_min() -> f64 {
    -1.0
}

fn default_grid_max() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryConfig {
    /// Covariate point; may be omitted when a grid is supplied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    pub treatments: Vec<f64>,
    pub functional: Functional,
    #[serde(default)]
    pub mediators: Vec<String>,
}

fn default_n_mc() -> usize {
    100_000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub scm: ScmSpec,
    pub query: QueryConfig,
    #[serde(default = "default_n_mc")]
    pub n_mc: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnRoles {
    pub x: Vec<String>,
    pub a: String,
    #[serde(default)]
    pub mediators: Vec<String>,
    pub y: String,
}

fn default_k() -> usize {
    10_000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapConfig {
    pub replicates: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundConfig {
    pub data: PathBuf,
    pub columns: ColumnRoles,
    pub treatment: TreatmentKind,
    #[serde(default)]
    pub fit: FitConfig,
    pub sensitivity: SensitivitySpec,
    pub query: QueryConfig,
    /// Second treatment vector for an effect-difference query.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contrast_treatments: Option<Vec<f64>>,
    #[serde(default = "default_k")]
    pub k: usize,
    /// Evaluate over a covariate grid instead of a single point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    /// Average the bound over the dataset's covariate rows.
    #[serde(default)]
    pub average: bool,
    /// Row cap for the covariate average.
    #[serde(default = "default_average_rows")]
    pub average_rows: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bootstrap: Option<BootstrapConfig>,
}

fn default_average_rows() -> usize {
    500
}

/// Sensitivity-parameter sweep applied to the listed nodes on top of the
/// `bound` section.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub nodes: Vec<String>,
    pub gammas: Vec<f64>,
}

fn default_validate_n() -> usize {
    50_000
}

fn default_grid_points() -> usize {
    21
}

fn default_gamma_margin() -> f64 {
    1.05
}

fn default_delta() -> f64 {
    0.05
}

fn default_functional() -> Functional {
    Functional::Expectation
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateConfig {
    pub scm: ScmSpec,
    #[serde(default = "default_validate_n")]
    pub n: usize,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default = "default_gamma_margin")]
    pub gamma_margin: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_n_mc")]
    pub n_mc: usize,
    #[serde(default)]
    pub fit: FitConfig,
    pub treatments: Vec<f64>,
    #[serde(default)]
    pub mediators: Vec<String>,
    #[serde(default = "default_functional")]
    pub functional: Functional,
}

/// Hex SHA-256 of the resolved configuration's canonical JSON; echoed into
/// every output record for provenance.
///
/// Execution details that cannot influence computed values (thread count,
/// output location) are normalized out so the hash identifies the run's
/// scientific inputs.
pub fn config_hash(cfg: &RunConfig) -> Result<String, CliError> {
    use sha2::{Digest, Sha256};
    let mut normalized = cfg.clone();
    normalized.threads = None;
    normalized.output = None;
    let canonical =
        serde_json::to_vec(&normalized).map_err(|e| CliError::Config(e.to_string()))?;
    let digest = Sha256::digest(&canonical);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}
