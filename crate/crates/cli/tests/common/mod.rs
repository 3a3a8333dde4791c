//! Shared oracles and fixtures for the acceptance suite. Everything here is
//! deliberately independent of the library's shift/bound implementations.

use csa_core::bounds::{BoundsError, ConditionalModel, OutcomeDist};
use csa_core::dist::DiscreteDist;
use csa_core::model::TreatmentKind;

/// Greedy fractional-knapsack optimum of the expectation over the ratio
/// polytope `{ p~ : p/s_plus <= p~ <= p/s_minus, sum = 1 }`.
///
/// Starts every point at its floor and pours the remaining mass into the
/// most favourable support values first.
pub fn knapsack_expectation(
    support: &[f64],
    probs: &[f64],
    s_minus: f64,
    s_plus: f64,
    maximize: bool,
) -> f64 {
    let n = support.len();
    let mut mass: Vec<f64> = probs.iter().map(|p| p / s_plus).collect();
    let mut leftover = 1.0 - mass.iter().sum::<f64>();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| support[a].partial_cmp(&support[b]).unwrap());
    if maximize {
        order.reverse();
    }
    for idx in order {
        if leftover <= 0.0 {
            break;
        }
        let cap = probs[idx] / s_minus - mass[idx];
        let add = cap.min(leftover);
        mass[idx] += add;
        leftover -= add;
    }
    support.iter().zip(&mass).map(|(v, m)| v * m).sum()
}

/// Exact linear-program optimum over the ratio polytope by enumerating its
/// vertices (all coordinates at a box face except one balancing the sum).
pub fn vertex_optimum(
    values: &[f64],
    probs: &[f64],
    s_minus: f64,
    s_plus: f64,
    maximize: bool,
) -> f64 {
    let n = values.len();
    let lo: Vec<f64> = probs.iter().map(|p| p / s_plus).collect();
    let hi: Vec<f64> = probs.iter().map(|p| p / s_minus).collect();
    let mut best = if maximize {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    };
    for free in 0..n {
        for mask in 0..(1u32 << (n - 1)) {
            let mut total = 0.0;
            let mut value = 0.0;
            let mut bit = 0;
            for i in 0..n {
                if i == free {
                    continue;
                }
                let take_hi = (mask >> bit) & 1 == 1;
                bit += 1;
                let p = if take_hi { hi[i] } else { lo[i] };
                total += p;
                value += values[i] * p;
            }
            let p_free = 1.0 - total;
            if p_free < lo[free] - 1e-12 || p_free > hi[free] + 1e-12 {
                continue;
            }
            value += values[free] * p_free;
            best = if maximize {
                best.max(value)
            } else {
                best.min(value)
            };
        }
    }
    best
}

type PmfFn = Box<dyn Fn(&[f64], f64) -> DiscreteDist + Sync>;
type OutcomeFn = Box<dyn Fn(&[f64], &[f64], f64) -> OutcomeDist + Sync>;

/// Table-driven conditional model for constructed test instances.
pub struct TableModel {
    pub pmfs: Vec<PmfFn>,
    pub outcome: OutcomeFn,
    pub propensity: Option<f64>,
    pub kind: TreatmentKind,
}

impl ConditionalModel for TableModel {
    fn mediator_pmf(
        &self,
        index: usize,
        _x: &[f64],
        m_prev: &[f64],
        a: f64,
    ) -> Result<DiscreteDist, BoundsError> {
        Ok((self.pmfs[index])(m_prev, a))
    }

    fn outcome(
        &self,
        x: &[f64],
        m: &[f64],
        a: f64,
        _k: usize,
        _seed: u64,
    ) -> Result<OutcomeDist, BoundsError> {
        Ok((self.outcome)(x, m, a))
    }

    fn propensity(&self, _a: f64, _x: &[f64]) -> Option<f64> {
        self.propensity
    }

    fn treatment_kind(&self) -> TreatmentKind {
        self.kind
    }
}

/// Random pmf over a strictly increasing support.
pub fn random_pmf(rng: &mut impl rand::RngExt, size: usize, value_span: f64) -> DiscreteDist {
    let mut support = Vec::with_capacity(size);
    let mut v = rng.random_range(-value_span..value_span);
    for _ in 0..size {
        support.push(v);
        v += rng.random_range(0.05..1.0) * value_span / size as f64 + 1e-6;
    }
    let raw: Vec<f64> = (0..size).map(|_| rng.random_range(0.01..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let probs: Vec<f64> = raw.iter().map(|p| p / total).collect();
    DiscreteDist::new(support, probs).expect("constructed pmf is valid")
}
