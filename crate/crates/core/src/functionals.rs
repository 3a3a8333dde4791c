//! Monotone functionals and their importance-sampling estimators.
//!
//! The sampled estimators operate on sorted order statistics. For the
//! right-shift the first `floor(k * c_plus)` draws carry weight
//! `1/(s_plus * k)` and the remainder `1/(s_minus * k)`; the left-shift
//! swaps the roles using `c_minus`. Summation is sequential in index order
//! so results are deterministic for a given sorted input.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{Cdf, DiscreteDist, DistError, SampleDist};
use crate::model::RatioBounds;
use crate::shift::Direction;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FunctionalError {
    #[error("quantile level must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// A monotone functional mapping a distribution to a scalar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Functional {
    Expectation,
    Quantile { alpha: f64 },
}

impl Functional {
    pub fn validate(&self) -> Result<(), FunctionalError> {
        match self {
            Self::Expectation => Ok(()),
            Self::Quantile { alpha } => {
                if *alpha > 0.0 && *alpha < 1.0 {
                    Ok(())
                } else {
                    Err(FunctionalError::InvalidAlpha(*alpha))
                }
            }
        }
    }
}

/// Applies the functional to a discrete distribution.
pub fn apply_discrete(f: &Functional, pmf: &DiscreteDist) -> Result<f64, FunctionalError> {
    match f {
        Functional::Expectation => Ok(pmf.expectation()),
        Functional::Quantile { alpha } => Ok(pmf.quantile(*alpha)?),
    }
}

fn split_index(k: usize, c: f64) -> usize {
    ((k as f64) * c).floor() as usize
}

fn direction_split(bounds: &RatioBounds, dir: Direction) -> (f64, f64, f64) {
    match dir {
        Direction::Upper => (bounds.c_plus, bounds.s_plus, bounds.s_minus),
        Direction::Lower => (bounds.c_minus, bounds.s_minus, bounds.s_plus),
    }
}

/// Expectation of the shifted distribution estimated from sorted draws.
///
/// Reduces to the plain sample mean when the bounds are degenerate.
pub fn expectation_bound_sampled(
    sample: &SampleDist,
    bounds: &RatioBounds,
    dir: Direction,
) -> f64 {
    if bounds.is_degenerate() {
        return sample.mean();
    }
    let values = sample.values();
    let k = values.len();
    let (c, s_first, s_second) = direction_split(bounds, dir);
    let cut = split_index(k, c).min(k);
    let head: f64 = values[..cut].iter().sum();
    let tail: f64 = values[cut..].iter().sum();
    let kf = k as f64;
    head / (s_first * kf) + tail / (s_second * kf)
}

/// A quantile estimate together with a saturation flag.
///
/// `saturated` is set when index truncation caps the estimated shifted CDF
/// below the requested level, in which case the largest draw is returned.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileEstimate {
    pub value: f64,
    pub saturated: bool,
}

/// Quantile of the shifted distribution estimated from sorted draws.
///
/// Builds the reweighted empirical CDF and returns the smallest draw at
/// which it reaches `alpha`.
pub fn quantile_bound_sampled(
    sample: &SampleDist,
    bounds: &RatioBounds,
    alpha: f64,
    dir: Direction,
) -> Result<QuantileEstimate, FunctionalError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(FunctionalError::InvalidAlpha(alpha));
    }
    let values = sample.values();
    let k = values.len();
    if bounds.is_degenerate() {
        return Ok(QuantileEstimate {
            value: sample.quantile(alpha)?,
            saturated: false,
        });
    }
    let (c, s_first, s_second) = direction_split(bounds, dir);
    let cut = split_index(k, c).min(k);
    let kf = k as f64;
    // Walk distinct values; ties share a CDF value, so advance to the end of
    // each tie block before evaluating.
    let mut i = 0;
    while i < k {
        let mut j = i + 1;
        while j < k && values[j] == values[i] {
            j += 1;
        }
        // j draws are <= values[i]; the first `cut` of them sit in the
        // reweighted head block.
        let head = j.min(cut) as f64;
        let tail = j.saturating_sub(cut) as f64;
        let cdf = head / (s_first * kf) + tail / (s_second * kf);
        if cdf >= alpha {
            return Ok(QuantileEstimate {
                value: values[i],
                saturated: false,
            });
        }
        i = j;
    }
    Ok(QuantileEstimate {
        value: *values.last().expect("non-empty sample"),
        saturated: true,
    })
}

/// Applies the functional to the shifted distribution of a sorted sample.
pub fn functional_bound_sampled(
    f: &Functional,
    sample: &SampleDist,
    bounds: &RatioBounds,
    dir: Direction,
) -> Result<f64, FunctionalError> {
    match f {
        Functional::Expectation => Ok(expectation_bound_sampled(sample, bounds, dir)),
        Functional::Quantile { alpha } => {
            Ok(quantile_bound_sampled(sample, bounds, *alpha, dir)?.value)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shift::shift_discrete;
    use proptest::prelude::*;

    fn half_two() -> RatioBounds {
        RatioBounds::from_explicit(0.5, 2.0).unwrap()
    }

    #[test]
    fn discrete_expectation_examples() {
        let shifted =
            DiscreteDist::new(vec![1.0, 2.0, 3.0, 4.0], vec![0.125, 0.125, 0.25, 0.5]).unwrap();
        assert!(
            (apply_discrete(&Functional::Expectation, &shifted).unwrap() - 3.125).abs() < 1e-12
        );

        let flat = DiscreteDist::uniform(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((apply_discrete(&Functional::Expectation, &flat).unwrap() - 2.5).abs() < 1e-12);

        let left =
            DiscreteDist::new(vec![1.0, 2.0, 3.0, 4.0], vec![0.5, 0.25, 0.125, 0.125]).unwrap();
        assert_eq!(
            apply_discrete(&Functional::Quantile { alpha: 0.5 }, &left).unwrap(),
            1.0
        );
    }

    #[test]
    fn sampled_expectation_identity_is_mean() {
        let s = SampleDist::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let id = RatioBounds::identity();
        assert_eq!(expectation_bound_sampled(&s, &id, Direction::Upper), 2.5);
        assert_eq!(expectation_bound_sampled(&s, &id, Direction::Lower), 2.5);
    }

    #[test]
    fn sampled_quantile_identity_is_empirical() {
        let s = SampleDist::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let id = RatioBounds::identity();
        let est = quantile_bound_sampled(&s, &id, 0.5, Direction::Upper).unwrap();
        assert_eq!(est.value, 2.0);
        assert!(!est.saturated);
    }

    #[test]
    fn degenerate_sample_returns_constant() {
        // Quantiles of a constant sample are the constant for any bounds.
        let s = SampleDist::new(vec![5.0; 8]).unwrap();
        let b = half_two();
        for dir in [Direction::Upper, Direction::Lower] {
            for alpha in [0.1, 0.5, 0.9] {
                assert_eq!(
                    quantile_bound_sampled(&s, &b, alpha, dir).unwrap().value,
                    5.0
                );
            }
        }
        // The expectation weights only total 1 when the quantile split hits
        // an integer index; k = 9 with c = 2/3 and 1/3 does.
        let s = SampleDist::new(vec![5.0; 9]).unwrap();
        for dir in [Direction::Upper, Direction::Lower] {
            assert!((expectation_bound_sampled(&s, &b, dir) - 5.0).abs() < 1e-12);
        }
    }

    #[test]
    fn replicated_sample_matches_discrete_shift() {
        // A sample that replicates each support value proportionally to its
        // mass turns the sampled estimator into the exact discrete bound.
        let pmf =
            DiscreteDist::new(vec![-1.0, 0.5, 2.0, 6.0], vec![0.2, 0.3, 0.4, 0.1]).unwrap();
        let reps = 1000usize;
        let mut draws = Vec::new();
        for (v, p) in pmf.support().iter().zip(pmf.probs()) {
            draws.extend(std::iter::repeat(*v).take((p * reps as f64).round() as usize));
        }
        let sample = SampleDist::from_unsorted(draws).unwrap();
        let bounds = RatioBounds::from_gamma(3.0, 0.0).unwrap();
        for dir in [Direction::Upper, Direction::Lower] {
            let exact = shift_discrete(&pmf, &bounds, dir).unwrap().expectation();
            let sampled = expectation_bound_sampled(&sample, &bounds, dir);
            assert!(
                (exact - sampled).abs() < 5.0 / reps as f64,
                "{dir:?}: {exact} vs {sampled}"
            );
        }
    }

    #[test]
    fn lower_quantile_can_saturate() {
        // Small k and a quantile near 1 cap the reweighted CDF below alpha.
        let s = SampleDist::new(vec![1.0, 2.0, 3.0]).unwrap();
        let b = RatioBounds::from_gamma(5.0, 0.0).unwrap();
        let est = quantile_bound_sampled(&s, &b, 0.999, Direction::Lower).unwrap();
        assert_eq!(est.value, 3.0);
        assert!(est.saturated);
    }

    #[test]
    fn invalid_alpha_rejected() {
        let s = SampleDist::new(vec![1.0]).unwrap();
        assert!(quantile_bound_sampled(&s, &half_two(), 0.0, Direction::Upper).is_err());
        assert!(quantile_bound_sampled(&s, &half_two(), 1.0, Direction::Upper).is_err());
    }

    prop_compose! {
        fn sorted_sample()(
            raw in proptest::collection::vec(-10.0f64..10.0, 1..200)
        ) -> SampleDist {
            SampleDist::from_unsorted(raw).unwrap()
        }
    }

    // Index truncation biases the estimator by one reweighted draw; exact
    // order relations hold up to that slack.
    fn truncation_slack(sample: &SampleDist, bounds: &RatioBounds) -> f64 {
        let max_abs = sample
            .values()
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()));
        2.0 * max_abs * (1.0 / bounds.s_minus - 1.0 / bounds.s_plus) / sample.len() as f64
    }

    proptest! {
        #[test]
        fn upper_at_least_lower(sample in sorted_sample(), gamma in 1.0f64..10.0, q in 0.0f64..=1.0) {
            let b = RatioBounds::from_gamma(gamma, q).unwrap();
            let up = expectation_bound_sampled(&sample, &b, Direction::Upper);
            let lo = expectation_bound_sampled(&sample, &b, Direction::Lower);
            prop_assert!(up >= lo - truncation_slack(&sample, &b));
        }

        #[test]
        fn expectation_monotone_in_gamma(sample in sorted_sample(), gamma in 1.0f64..10.0, step in 0.01f64..10.0) {
            let lo = RatioBounds::from_gamma(gamma, 0.0).unwrap();
            let hi = RatioBounds::from_gamma(gamma + step, 0.0).unwrap();
            let slack = truncation_slack(&sample, &hi);
            prop_assert!(
                expectation_bound_sampled(&sample, &hi, Direction::Upper)
                    >= expectation_bound_sampled(&sample, &lo, Direction::Upper) - slack
            );
            prop_assert!(
                expectation_bound_sampled(&sample, &hi, Direction::Lower)
                    <= expectation_bound_sampled(&sample, &lo, Direction::Lower) + slack
            );
        }
    }

    #[test]
    fn quantile_upper_at_least_lower_aligned_split() {
        // Sample sizes where the quantile split is exact, so the order
        // relation between directions holds without truncation slack.
        let raw: Vec<f64> = (0..300).map(|i| ((i * 37) % 101) as f64 / 7.0 - 6.0).collect();
        let sample = SampleDist::from_unsorted(raw).unwrap();
        let b = RatioBounds::from_gamma(2.0, 0.0).unwrap();
        for alpha in [0.1, 0.25, 0.5, 0.75, 0.9] {
            let qu = quantile_bound_sampled(&sample, &b, alpha, Direction::Upper).unwrap();
            let ql = quantile_bound_sampled(&sample, &b, alpha, Direction::Lower).unwrap();
            assert!(qu.value >= ql.value, "alpha={alpha}");
        }
    }
}
