//! Conditional estimators fitted from observational data.
//!
//! Mediator pmfs come from smoothed frequency counts over binned-covariate
//! cells, outcome distributions from k-nearest-neighbour resampling with
//! Gaussian kernel jitter, and propensities from binned frequencies. These
//! are deliberately simple plug-in estimators: the bound machinery only
//! needs valid pmfs and sorted conditional samples.

use std::collections::HashMap;

use rand::distr::Distribution;
use rand::RngExt;
use statrs::distribution::Normal;
use thiserror::Error;

use crate::bounds::{BoundsError, ConditionalModel, OutcomeDist};
use crate::dist::{DiscreteDist, DistError, SampleDist};
use crate::model::TreatmentKind;
use crate::seed::derived_rng;

/// Propensity estimates are clipped into `[PROPENSITY_CLIP, 1 - PROPENSITY_CLIP]`.
pub const PROPENSITY_CLIP: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("dataset must be non-empty")]
    EmptyDataset,
    #[error("column lengths disagree")]
    LengthMismatch,
    #[error("invalid fit configuration: {0}")]
    InvalidConfig(String),
    #[error("value {value} of '{column}' never occurs in the training data")]
    UnseenCategory { column: String, value: f64 },
    #[error("no training rows in stratum {0}")]
    EmptyStratum(String),
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// Knobs for the plug-in estimators.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct FitConfig {
    /// Equal-width bins over the first covariate column.
    pub x_bins: usize,
    /// Neighbour count for conditional outcome resampling.
    pub knn_k: usize,
    /// Cells with fewer (effective) rows fall back to the marginal pmf.
    pub min_cell_count: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            x_bins: 32,
            knn_k: 2_000,
            min_cell_count: 30,
        }
    }
}

impl FitConfig {
    fn validate(&self) -> Result<(), FitError> {
        if self.x_bins == 0 || self.knn_k == 0 || self.min_cell_count == 0 {
            return Err(FitError::InvalidConfig(
                "x_bins, knn_k, and min_cell_count must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Column-oriented observational data: covariate columns, a treatment
/// column, the mediator columns referenced by queries (causal order), and
/// the outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedData {
    pub x: Vec<Vec<f64>>,
    pub a: Vec<f64>,
    pub mediators: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

impl ObservedData {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn validate(&self) -> Result<(), FitError> {
        if self.y.is_empty() || self.x.is_empty() {
            return Err(FitError::EmptyDataset);
        }
        let n = self.y.len();
        if self.a.len() != n
            || self.x.iter().any(|c| c.len() != n)
            || self.mediators.iter().any(|c| c.len() != n)
        {
            return Err(FitError::LengthMismatch);
        }
        Ok(())
    }

    /// View of a synthetic dataset exposing the first `n_mediators`
    /// mediator columns.
    pub fn from_dataset(ds: &crate::synth::Dataset, n_mediators: usize) -> Self {
        let mut mediators = Vec::new();
        if n_mediators >= 1 {
            mediators.push(ds.m1.clone());
        }
        if n_mediators >= 2 {
            mediators.push(ds.m2.clone());
        }
        Self {
            x: vec![ds.x.clone()],
            a: ds.a.clone(),
            mediators,
            y: ds.y.clone(),
        }
    }
}

/// Equal-width binning over an observed range.
#[derive(Debug, Clone, PartialEq)]
struct Binning {
    min: f64,
    width: f64,
    bins: usize,
}

impl Binning {
    fn fit(values: &[f64], bins: usize) -> Self {
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let span = (max - min).max(f64::MIN_POSITIVE);
        Self {
            min,
            width: span / bins as f64,
            bins,
        }
    }

    fn bin(&self, v: f64) -> usize {
        if v <= self.min {
            return 0;
        }
        (((v - self.min) / self.width) as usize).min(self.bins - 1)
    }
}

fn key_of(values: &[f64]) -> Vec<u64> {
    values.iter().map(|v| v.to_bits()).collect()
}

fn sorted_unique(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite column values"));
    v.dedup();
    v
}

fn silverman_bandwidth(values: &[f64]) -> f64 {
    let m = values.len();
    if m < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / m as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
    let sd = var.sqrt();
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite outcome values"));
    let q = |p: f64| sorted[((p * (m - 1) as f64).round() as usize).min(m - 1)];
    let iqr = q(0.75) - q(0.25);
    let scale = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    0.9 * scale * (m as f64).powf(-0.2)
}

/// Conditional pmf estimator: smoothed frequency counts per
/// (covariate-bin, mediator-prefix, treatment) cell with a marginal
/// fallback for thin cells.
#[derive(Debug, Clone)]
pub struct PmfEstimator {
    support: Vec<f64>,
    binning: Binning,
    treatment: TreatmentKind,
    min_cell_count: f64,
    /// Discrete treatments: exact counts per (x-bin, prefix, a) cell.
    cells: HashMap<(usize, Vec<u64>, u64), Vec<f64>>,
    /// Continuous treatments: row indices per (x-bin, prefix) stratum plus
    /// the rows needed for kernel weighting.
    strata: HashMap<(usize, Vec<u64>), Vec<usize>>,
    a_values: Vec<f64>,
    target_values: Vec<f64>,
    a_bandwidth: f64,
    marginal_counts: Vec<f64>,
    prefix_supports: Vec<Vec<f64>>,
    a_support: Vec<f64>,
}

impl PmfEstimator {
    fn support_index(&self, value: f64) -> Option<usize> {
        self.support
            .iter()
            .position(|s| s.to_bits() == value.to_bits())
    }

    fn smoothed(&self, counts: &[f64]) -> Result<DiscreteDist, FitError> {
        let total: f64 = counts.iter().sum();
        let s = self.support.len() as f64;
        let probs = counts.iter().map(|c| (c + 1.0) / (total + s)).collect();
        Ok(DiscreteDist::new(self.support.clone(), probs)?)
    }

    /// Estimated pmf plus a flag marking a marginal fallback.
    pub fn estimate(
        &self,
        x: &[f64],
        m_prev: &[f64],
        a: f64,
    ) -> Result<(DiscreteDist, bool), FitError> {
        for (i, (value, support)) in m_prev.iter().zip(&self.prefix_supports).enumerate() {
            if !support.iter().any(|s| s.to_bits() == value.to_bits()) {
                return Err(FitError::UnseenCategory {
                    column: format!("mediator {i}"),
                    value: *value,
                });
            }
        }
        let x0 = x.first().copied().unwrap_or(0.0);
        let x_bin = self.binning.bin(x0);
        let prefix = key_of(m_prev);
        let counts: Option<Vec<f64>> = match self.treatment {
            TreatmentKind::Discrete => {
                if !self.a_support.iter().any(|s| s.to_bits() == a.to_bits()) {
                    return Err(FitError::UnseenCategory {
                        column: "a".into(),
                        value: a,
                    });
                }
                self.cells
                    .get(&(x_bin, prefix, a.to_bits()))
                    .cloned()
                    .filter(|c| c.iter().sum::<f64>() >= self.min_cell_count)
            }
            TreatmentKind::Continuous => {
                self.strata.get(&(x_bin, prefix)).and_then(|rows| {
                    let h = self.a_bandwidth.max(1e-6);
                    let mut counts = vec![0.0; self.support.len()];
                    let mut total = 0.0;
                    for &r in rows {
                        let d = (self.a_values[r] - a) / h;
                        let w = (-0.5 * d * d).exp();
                        total += w;
                        if let Some(idx) = self.support_index(self.target_values[r]) {
                            counts[idx] += w;
                        }
                    }
                    (total >= self.min_cell_count).then_some(counts)
                })
            }
        };
        match counts {
            Some(counts) => Ok((self.smoothed(&counts)?, false)),
            None => Ok((self.smoothed(&self.marginal_counts)?, true)),
        }
    }
}

/// Fits the pmf of mediator column `target` conditioned on the covariate
/// bin, the preceding mediator columns, and the treatment.
pub fn fit_conditional_pmf(
    data: &ObservedData,
    target: usize,
    cfg: &FitConfig,
    treatment: TreatmentKind,
) -> Result<PmfEstimator, FitError> {
    data.validate()?;
    cfg.validate()?;
    let target_col = data
        .mediators
        .get(target)
        .ok_or_else(|| FitError::InvalidConfig(format!("no mediator column {target}")))?;
    let support = sorted_unique(target_col);
    let binning = Binning::fit(&data.x[0], cfg.x_bins);
    let prefix_cols = &data.mediators[..target];

    let mut cells: HashMap<(usize, Vec<u64>, u64), Vec<f64>> = HashMap::new();
    let mut strata: HashMap<(usize, Vec<u64>), Vec<usize>> = HashMap::new();
    let mut marginal_counts = vec![0.0; support.len()];
    for i in 0..data.len() {
        let idx = support
            .iter()
            .position(|s| s.to_bits() == target_col[i].to_bits())
            .expect("support covers all observed values");
        marginal_counts[idx] += 1.0;
        let x_bin = binning.bin(data.x[0][i]);
        let prefix: Vec<u64> = prefix_cols.iter().map(|c| c[i].to_bits()).collect();
        match treatment {
            TreatmentKind::Discrete => {
                let counts = cells
                    .entry((x_bin, prefix, data.a[i].to_bits()))
                    .or_insert_with(|| vec![0.0; support.len()]);
                counts[idx] += 1.0;
            }
            TreatmentKind::Continuous => {
                strata.entry((x_bin, prefix)).or_default().push(i);
            }
        }
    }

    Ok(PmfEstimator {
        support,
        binning,
        treatment,
        min_cell_count: cfg.min_cell_count as f64,
        cells,
        strata,
        a_values: data.a.clone(),
        target_values: target_col.clone(),
        a_bandwidth: silverman_bandwidth(&data.a),
        marginal_counts,
        prefix_supports: prefix_cols.iter().map(|c| sorted_unique(c)).collect(),
        a_support: sorted_unique(&data.a),
    })
}

/// Conditional outcome sampler: k-nearest-neighbour resampling in the
/// covariate/treatment space within the exact mediator stratum, with
/// Gaussian jitter at the neighbourhood's Silverman bandwidth.
#[derive(Debug, Clone)]
pub struct OutcomeSampler {
    treatment: TreatmentKind,
    knn_k: usize,
    /// Rows per (mediator stratum, treatment value) for discrete
    /// treatments; treatment key 0 for continuous.
    strata: HashMap<(Vec<u64>, u64), Vec<usize>>,
    x: Vec<Vec<f64>>,
    a: Vec<f64>,
    y: Vec<f64>,
    x_scales: Vec<f64>,
    a_scale: f64,
}

const SAMPLER_STREAM: u64 = 0x5a;

impl OutcomeSampler {
    fn stratum_key(&self, m: &[f64], a: f64) -> (Vec<u64>, u64) {
        let a_key = match self.treatment {
            TreatmentKind::Discrete => a.to_bits(),
            TreatmentKind::Continuous => 0,
        };
        (key_of(m), a_key)
    }

    /// Draws `k` jittered outcome values; deterministic for a given seed.
    pub fn sample(
        &self,
        x: &[f64],
        m: &[f64],
        a: f64,
        k: usize,
        seed: u64,
    ) -> Result<SampleDist, FitError> {
        let rows = self
            .strata
            .get(&self.stratum_key(m, a))
            .filter(|rows| !rows.is_empty())
            .ok_or_else(|| FitError::EmptyStratum(format!("m = {m:?}, a = {a}")))?;

        let mut scored: Vec<(f64, usize)> = rows
            .iter()
            .map(|&r| {
                let mut d = 0.0;
                for (j, (col, scale)) in self.x.iter().zip(&self.x_scales).enumerate() {
                    let q = x.get(j).copied().unwrap_or(0.0);
                    let dx = (col[r] - q) / scale;
                    d += dx * dx;
                }
                if self.treatment == TreatmentKind::Continuous {
                    let da = (self.a[r] - a) / self.a_scale;
                    d += da * da;
                }
                (d, r)
            })
            .collect();
        let m_count = self.knn_k.min(scored.len());
        // Ties broken by row index so neighbour selection is deterministic.
        scored.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
        let neighbours: Vec<f64> = scored[..m_count].iter().map(|&(_, r)| self.y[r]).collect();

        let h = silverman_bandwidth(&neighbours);
        let normal = Normal::new(0.0, 1.0).expect("standard normal parameters");
        let mut rng = derived_rng(seed, &[SAMPLER_STREAM]);
        let mut draws = Vec::with_capacity(k);
        for _ in 0..k {
            let idx = rng.random_range(0..neighbours.len());
            let jitter = if h > 0.0 {
                h * normal.sample(&mut rng)
            } else {
                0.0
            };
            draws.push(neighbours[idx] + jitter);
        }
        Ok(SampleDist::from_unsorted(draws)?)
    }
}

fn column_scale(values: &[f64]) -> f64 {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n.max(2) as f64;
    let sd = var.sqrt();
    if sd > 0.0 {
        sd
    } else {
        1.0
    }
}

/// Fits the outcome sampler conditioned on all mediator columns and the
/// treatment.
pub fn fit_outcome_sampler(
    data: &ObservedData,
    cfg: &FitConfig,
    treatment: TreatmentKind,
) -> Result<OutcomeSampler, FitError> {
    data.validate()?;
    cfg.validate()?;
    let mut strata: HashMap<(Vec<u64>, u64), Vec<usize>> = HashMap::new();
    for i in 0..data.len() {
        let m_key: Vec<u64> = data.mediators.iter().map(|c| c[i].to_bits()).collect();
        let a_key = match treatment {
            TreatmentKind::Discrete => data.a[i].to_bits(),
            TreatmentKind::Continuous => 0,
        };
        strata.entry((m_key, a_key)).or_default().push(i);
    }
    Ok(OutcomeSampler {
        treatment,
        knn_k: cfg.knn_k,
        strata,
        x: data.x.clone(),
        a: data.a.clone(),
        y: data.y.clone(),
        x_scales: data.x.iter().map(|c| column_scale(c)).collect(),
        a_scale: column_scale(&data.a),
    })
}

/// Binned propensity estimator for discrete treatments.
#[derive(Debug, Clone)]
pub struct PropensityEstimator {
    binning: Binning,
    bin_counts: Vec<HashMap<u64, f64>>,
    bin_totals: Vec<f64>,
    marginal: HashMap<u64, f64>,
    n: f64,
}

impl PropensityEstimator {
    /// Clipped estimate of P(a | x) plus a flag marking a marginal
    /// fallback for empty bins.
    pub fn estimate(&self, a: f64, x: &[f64]) -> Result<(f64, bool), FitError> {
        let x0 = x.first().copied().unwrap_or(0.0);
        let bin = self.binning.bin(x0);
        let (p, fallback) = if self.bin_totals[bin] > 0.0 {
            let count = self.bin_counts[bin].get(&a.to_bits()).copied().unwrap_or(0.0);
            (count / self.bin_totals[bin], false)
        } else {
            let count = self.marginal.get(&a.to_bits()).copied().unwrap_or(0.0);
            (count / self.n, true)
        };
        Ok((p.clamp(PROPENSITY_CLIP, 1.0 - PROPENSITY_CLIP), fallback))
    }
}

/// Fits the binned propensity model; requires a discrete treatment.
pub fn fit_propensity(data: &ObservedData, cfg: &FitConfig) -> Result<PropensityEstimator, FitError> {
    data.validate()?;
    cfg.validate()?;
    let binning = Binning::fit(&data.x[0], cfg.x_bins);
    let mut bin_counts = vec![HashMap::new(); cfg.x_bins];
    let mut bin_totals = vec![0.0; cfg.x_bins];
    let mut marginal: HashMap<u64, f64> = HashMap::new();
    for i in 0..data.len() {
        let bin = binning.bin(data.x[0][i]);
        *bin_counts[bin].entry(data.a[i].to_bits()).or_insert(0.0) += 1.0;
        bin_totals[bin] += 1.0;
        *marginal.entry(data.a[i].to_bits()).or_insert(0.0) += 1.0;
    }
    Ok(PropensityEstimator {
        binning,
        bin_counts,
        bin_totals,
        marginal,
        n: data.len() as f64,
    })
}

/// The fitted conditional model plugged into the bound computation.
#[derive(Debug, Clone)]
pub struct FittedModel {
    pmfs: Vec<PmfEstimator>,
    outcome: OutcomeSampler,
    propensity: Option<PropensityEstimator>,
    treatment: TreatmentKind,
}

impl FittedModel {
    /// Fits every component: one pmf per mediator column, the outcome
    /// sampler, and (for discrete treatments) the propensity model.
    pub fn fit(
        data: &ObservedData,
        cfg: &FitConfig,
        treatment: TreatmentKind,
    ) -> Result<Self, FitError> {
        data.validate()?;
        let pmfs = (0..data.mediators.len())
            .map(|i| fit_conditional_pmf(data, i, cfg, treatment))
            .collect::<Result<Vec<_>, _>>()?;
        let outcome = fit_outcome_sampler(data, cfg, treatment)?;
        let propensity = match treatment {
            TreatmentKind::Discrete => Some(fit_propensity(data, cfg)?),
            TreatmentKind::Continuous => None,
        };
        Ok(Self {
            pmfs,
            outcome,
            propensity,
            treatment,
        })
    }
}

impl ConditionalModel for FittedModel {
    fn mediator_pmf(
        &self,
        index: usize,
        x: &[f64],
        m_prev: &[f64],
        a: f64,
    ) -> Result<DiscreteDist, BoundsError> {
        let estimator = self
            .pmfs
            .get(index)
            .ok_or_else(|| BoundsError::Estimation(format!("no fitted mediator {index}")))?;
        estimator
            .estimate(x, m_prev, a)
            .map(|(pmf, _)| pmf)
            .map_err(|e| BoundsError::Estimation(e.to_string()))
    }

    fn outcome(
        &self,
        x: &[f64],
        m: &[f64],
        a: f64,
        k: usize,
        seed: u64,
    ) -> Result<OutcomeDist, BoundsError> {
        self.outcome
            .sample(x, m, a, k, seed)
            .map(OutcomeDist::Sampled)
            .map_err(|e| BoundsError::Estimation(e.to_string()))
    }

    fn propensity(&self, a: f64, x: &[f64]) -> Option<f64> {
        self.propensity
            .as_ref()
            .and_then(|p| p.estimate(a, x).ok())
            .map(|(p, _)| p)
    }

    fn treatment_kind(&self) -> TreatmentKind {
        self.treatment
    }
}
