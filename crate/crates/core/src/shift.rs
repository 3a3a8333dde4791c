//! Maximally shifted interventional distributions.
//!
//! Given ratio bounds for a node, the right-shift deflates observational
//! mass below the quantile `c_plus` by `1/s_plus` and inflates mass above it
//! by `1/s_minus`; the left-shift swaps the roles using `c_minus`. The
//! resulting CDFs bracket every interventional CDF a compatible model can
//! produce.

use serde::{Deserialize, Serialize};

use crate::dist::{Cdf, DiscreteDist, DistError};
use crate::model::RatioBounds;

/// Shift direction: `Upper` right-shifts (largest effect), `Lower`
/// left-shifts (smallest effect).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Upper,
    Lower,
}

impl Direction {
    /// Quantile, leading factor (below the quantile), and trailing factor
    /// (above it) for this direction.
    fn split(self, bounds: &RatioBounds) -> (f64, f64, f64) {
        match self {
            Direction::Upper => (bounds.c_plus, 1.0 / bounds.s_plus, 1.0 / bounds.s_minus),
            Direction::Lower => (bounds.c_minus, 1.0 / bounds.s_minus, 1.0 / bounds.s_plus),
        }
    }
}

/// Shifted pmf of a discrete distribution.
///
/// Mass at support points whose CDF stays strictly below the quantile is
/// scaled by the leading factor, mass strictly above by the trailing factor,
/// and the straddling point takes the boundary mixture. Points where the
/// CDF hits the quantile exactly fall to the straddle branch; the mixture is
/// continuous there, so the convention only fixes which expression runs.
pub fn shift_discrete(
    pmf: &DiscreteDist,
    bounds: &RatioBounds,
    dir: Direction,
) -> Result<DiscreteDist, DistError> {
    if bounds.is_degenerate() {
        return Ok(pmf.clone());
    }
    let (c, below, above) = dir.split(bounds);
    let mut shifted = Vec::with_capacity(pmf.len());
    let mut cum_prev = 0.0;
    for &p in pmf.probs() {
        let cum = cum_prev + p;
        let mass = if cum < c {
            p * below
        } else if cum_prev > c {
            p * above
        } else {
            (c - cum_prev) * below + (cum - c) * above
        };
        shifted.push(mass);
        cum_prev = cum;
    }
    DiscreteDist::new(pmf.support().to_vec(), shifted)
}

/// Maps a base CDF value to the shifted CDF value.
pub fn shift_cdf_value(f: f64, bounds: &RatioBounds, dir: Direction) -> f64 {
    if bounds.is_degenerate() {
        return f;
    }
    let (c, below, above) = dir.split(bounds);
    let shifted = if f <= c {
        f * below
    } else {
        c * below + (f - c) * above
    };
    shifted.clamp(0.0, 1.0)
}

/// Inverse of [`shift_cdf_value`]: the base CDF level whose shifted CDF
/// equals `alpha`.
pub fn shift_quantile_level(alpha: f64, bounds: &RatioBounds, dir: Direction) -> f64 {
    if bounds.is_degenerate() {
        return alpha;
    }
    let (c, below, above) = dir.split(bounds);
    let split = c * below;
    let level = if alpha <= split {
        alpha / below
    } else {
        c + (alpha - split) / above
    };
    level.clamp(0.0, 1.0)
}

/// Evaluates the shifted CDF of a base distribution at `w`.
pub fn shift_cdf<D: Cdf>(base: &D, bounds: &RatioBounds, dir: Direction, w: f64) -> f64 {
    shift_cdf_value(base.cdf(w), bounds, dir)
}

/// A base distribution viewed through a shift; implements the CDF/quantile
/// contract so functionals can consume it directly.
#[derive(Debug, Clone)]
pub struct ShiftedCdf<'a, D: Cdf> {
    pub base: &'a D,
    pub bounds: RatioBounds,
    pub direction: Direction,
}

impl<'a, D: Cdf> ShiftedCdf<'a, D> {
    pub fn new(base: &'a D, bounds: RatioBounds, direction: Direction) -> Self {
        Self {
            base,
            bounds,
            direction,
        }
    }
}

impl<D: Cdf> Cdf for ShiftedCdf<'_, D> {
    fn cdf(&self, w: f64) -> f64 {
        shift_cdf_value(self.base.cdf(w), &self.bounds, self.direction)
    }

    fn quantile(&self, alpha: f64) -> Result<f64, DistError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(DistError::InvalidQuantileLevel(alpha));
        }
        let level = shift_quantile_level(alpha, &self.bounds, self.direction);
        // The mapped level can land on 0 or 1 exactly; nudge inside the open
        // interval expected by the base quantile.
        let level = level.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
        self.base.quantile(level)
    }
}
