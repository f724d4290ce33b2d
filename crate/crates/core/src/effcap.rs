//! Effective capacity of a per-state rate field.
//!
//! For block fading with i.i.d. blocks the bandwidth-normalized effective
//! capacity is `-(1 / beta) log2 E[2^(-beta R)]` bits/s/Hz.

use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

use crate::error::{invalid, Error, Result};
use crate::fading::{classify, ChannelConfig, SecrecyRegion};
use crate::quadrature::{pairwise_sum, StateGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RateKind {
    Common,
    Confidential,
}

/// Instantaneous rates, one per grid point, in bits/s/Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct RateField {
    kind: RateKind,
    rates: Vec<f64>,
}

impl RateField {
    pub fn new(grid: &StateGrid, kind: RateKind, rates: Vec<f64>) -> Result<Self> {
        if rates.len() != grid.len() {
            return Err(invalid(
                "rates",
                format!("expected {} entries, got {}", grid.len(), rates.len()),
            ));
        }
        for (p, &r) in grid.points().iter().zip(&rates) {
            if !(r.is_finite() && r >= 0.0) {
                return Err(invalid("rates", format!("rate {r} at {:?}", p.z)));
            }
            if kind == RateKind::Confidential
                && r != 0.0
                && classify(p.z, grid.gamma()) == SecrecyRegion::Insecure
            {
                return Err(invalid(
                    "rates",
                    format!("confidential rate {r} in insecure state {:?}", p.z),
                ));
            }
        }
        Ok(Self { kind, rates })
    }

    /// Builds a field by evaluating `rate` at every grid point.
    pub fn from_fn<F>(grid: &StateGrid, kind: RateKind, rate: F) -> Result<Self>
    where
        F: Fn(crate::fading::FadingState) -> f64,
    {
        let rates = grid.points().iter().map(|p| rate(p.z)).collect();
        Self::new(grid, kind, rates)
    }

    pub fn kind(&self) -> RateKind {
        self.kind
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }
}

/// A pair of bandwidth-normalized effective capacities (common, confidential).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThroughputPoint {
    pub c0: f64,
    pub c1: f64,
}

impl ThroughputPoint {
    pub fn new(c0: f64, c1: f64) -> Self {
        Self { c0, c1 }
    }
}

/// `-(1/beta) log2 E[2^(-beta R)]`, evaluated with a max shift so large
/// `beta * R` does not underflow.
pub fn effective_capacity(cfg: &ChannelConfig, grid: &StateGrid, rates: &RateField) -> Result<f64> {
    if !(cfg.theta > 0.0) {
        return Err(Error::NonPositiveTheta(cfg.theta));
    }
    Ok(effective_capacity_weighted(
        cfg.beta(),
        &grid.weights(),
        rates.rates(),
    ))
}

/// Effective capacity over explicit weights, which need not sum exactly to 1
/// (the expectation is taken with respect to the normalized weights).
pub(crate) fn effective_capacity_weighted(beta: f64, weights: &[f64], rates: &[f64]) -> f64 {
    debug_assert_eq!(weights.len(), rates.len());
    let total = pairwise_sum(weights);
    let r_min = weights
        .iter()
        .zip(rates)
        .filter(|(w, _)| **w > 0.0)
        .map(|(_, r)| *r)
        .fold(f64::INFINITY, f64::min);
    // E[2^(-beta R)] = 2^(-beta r_min) * E[2^(-beta (R - r_min))]
    let k = beta * LN_2;
    let terms: Vec<f64> = weights
        .iter()
        .zip(rates)
        .map(|(w, r)| w * (-k * (r - r_min)).exp_m1())
        .collect();
    let shifted = pairwise_sum(&terms) / total;
    r_min - shifted.ln_1p() / k
}

/// Weighted mean rate, the `theta -> 0` limit of the effective capacity.
pub fn ergodic_limit(grid: &StateGrid, rates: &RateField) -> f64 {
    ergodic_weighted(&grid.weights(), rates.rates())
}

pub(crate) fn ergodic_weighted(weights: &[f64], rates: &[f64]) -> f64 {
    let terms: Vec<f64> = weights.iter().zip(rates).map(|(w, r)| w * r).collect();
    pairwise_sum(&terms) / pairwise_sum(weights)
}

/// Effective capacity for `theta > 0`, ergodic mean for `theta == 0`.
pub fn throughput(cfg: &ChannelConfig, grid: &StateGrid, rates: &RateField) -> Result<f64> {
    if cfg.is_ergodic() {
        Ok(ergodic_limit(grid, rates))
    } else {
        effective_capacity(cfg, grid, rates)
    }
}
