//! Sharp partial-identification bounds for causal effects under unobserved
//! confounding restricted by a marginal sensitivity model.
//!
//! The crate is organised around a small pipeline:
//!
//! * [`model`] — sensitivity specifications and the per-node density-ratio
//!   bounds (s⁻, s⁺) with their shift quantiles (c⁺, c⁻).
//! * [`dist`] — discrete, empirical-sample, and analytic distributions with a
//!   shared CDF/quantile contract.
//! * [`shift`] — maximally right-/left-shifted distributions induced by a set
//!   of ratio bounds.
//! * [`functionals`] — monotone functionals (expectation, quantiles) and
//!   their importance-sampling estimators on shifted distributions.
//! * [`bounds`] — composition into causal-effect bounds: no-mediator queries,
//!   mediator chains, covariate averages, and effect differences.
//! * [`synth`] — a synthetic SCM benchmark with Monte Carlo oracle effects
//!   and oracle sensitivity parameters.
//! * [`estimate`] — sample-based conditional estimators (binned pmfs,
//!   k-nearest-neighbour outcome resampling, propensities) that plug into the
//!   bound computation.
//! * [`benchmark`] — the end-to-end validity check: simulate, fit, bound, and
//!   compare against the oracle.

pub mod benchmark;
pub mod bounds;
pub mod dist;
pub mod estimate;
pub mod functionals;
pub mod model;
pub mod seed;
pub mod shift;
pub mod synth;

pub use bounds::{BoundsResult, CausalQuery, ConditionalModel, EvalConfig, OutcomeDist};
pub use dist::{AnalyticDist, Cdf, DiscreteDist, SampleDist};
pub use functionals::Functional;
pub use model::{RatioBounds, SensitivityEntry, SensitivitySpec, TreatmentKind, WeightFn};
pub use shift::Direction;
