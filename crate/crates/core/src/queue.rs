//! Monte Carlo check of the queue-length decay rate.
//!
//! A constant arrival of `a` bits per block is served by `T B R(z)` bits in a
//! block with fading state `z`, and the backlog follows the Lindley recursion
//! `Q <- max(Q + a - s, 0)`. If `a = T B C(theta)` the tail of `Q` decays like
//! `exp(-theta q)` with `q` in bits.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fading::{ChannelConfig, FadingDistribution, FadingState};

/// Exceedances required at every level used in the slope fit.
pub const MIN_EXCEEDANCES: usize = 100;
/// Number of automatically placed tail levels.
pub const DEFAULT_TAIL_LEVELS: usize = 12;
const CHUNK: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub blocks: usize,
    pub seed: u64,
    /// Bits per block.
    pub arrival_rate: f64,
    /// Leading blocks excluded from the tail statistics.
    pub warmup: usize,
    /// Queue thresholds in bits; placed from the sample quantiles when `None`.
    pub tail_levels: Option<Vec<f64>>,
}

impl SimConfig {
    /// Warmup defaults to 1% of the run.
    pub fn new(blocks: usize, seed: u64, arrival_rate: f64) -> Result<Self> {
        let s = Self {
            blocks,
            seed,
            arrival_rate,
            warmup: blocks / 100,
            tail_levels: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.blocks <= self.warmup {
            return Err(invalid(
                "blocks",
                format!("must exceed warmup ({} <= {})", self.blocks, self.warmup),
            ));
        }
        if !(self.arrival_rate > 0.0 && self.arrival_rate.is_finite()) {
            return Err(invalid(
                "arrival_rate",
                format!("must be > 0, got {}", self.arrival_rate),
            ));
        }
        if let Some(levels) = &self.tail_levels {
            if levels.windows(2).any(|w| w[0] >= w[1]) || levels.iter().any(|q| !(*q > 0.0)) {
                return Err(invalid(
                    "tail_levels",
                    "must be positive and strictly increasing",
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailPoint {
    /// Threshold `q`, bits.
    pub level: f64,
    /// Empirical `P(Q >= q)`.
    pub probability: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    /// Negated least-squares slope of `ln P(Q >= q)` against `q`.
    pub decay: f64,
    /// All levels, including those left out of the fit.
    pub points: Vec<TailPoint>,
    /// Index of the first level used in the fit.
    pub fit_start: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailReport {
    pub blocks: usize,
    pub warmup: usize,
    pub seed: u64,
    pub arrival_rate: f64,
    /// Sample mean of the service, bits per block.
    pub mean_service: f64,
    /// Arrivals exceed the mean service; no fit is attempted.
    pub unstable: bool,
    pub prob_nonempty: f64,
    pub mean_queue: f64,
    pub fit: Option<DecayFit>,
    pub fit_error: Option<String>,
}

/// Lindley recursion from an empty queue; returns the backlog after each
/// block past `warmup` and the mean service over all blocks.
pub fn lindley_trace<I>(arrival: f64, services: I, warmup: usize) -> (Vec<f64>, f64)
where
    I: IntoIterator<Item = f64>,
{
    let mut q: f64 = 0.0;
    let mut trace = Vec::new();
    let mut total = 0.0;
    let mut n = 0usize;
    for s in services {
        q = (q + arrival - s).max(0.0);
        if n >= warmup {
            trace.push(q);
        }
        total += s;
        n += 1;
    }
    (trace, if n > 0 { total / n as f64 } else { 0.0 })
}

/// Simulates `sim.blocks` i.i.d. fading blocks drawn from `dist` with rate
/// `rate(z)` in bits/s/Hz. The run is a pure function of the seed.
pub fn simulate_queue<F>(
    cfg: &ChannelConfig,
    dist: &FadingDistribution,
    rate: F,
    sim: &SimConfig,
) -> Result<TailReport>
where
    F: Fn(FadingState) -> f64 + Sync,
{
    cfg.validate()?;
    sim.validate()?;
    let tb = cfg.symbols_per_block();
    let mut rng = ChaCha8Rng::seed_from_u64(sim.seed);
    let mut states = Vec::with_capacity(CHUNK);
    let mut services = Vec::with_capacity(sim.blocks);
    let mut remaining = sim.blocks;
    while remaining > 0 {
        let n = remaining.min(CHUNK);
        states.clear();
        states.extend((0..n).map(|_| dist.sample(&mut rng)));
        let chunk: Vec<f64> = states.par_iter().map(|z| tb * rate(*z)).collect();
        if let Some(bad) = chunk.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
            return Err(invalid(
                "rate",
                format!("service {bad} is not a finite nonnegative value"),
            ));
        }
        services.extend(chunk);
        remaining -= n;
    }
    simulate_with_services(sim, services)
}

/// Runs the recursion on an explicit service sequence (bits per block), e.g.
/// a forced schedule. Only the first `sim.blocks` entries are used.
pub fn simulate_with_services<I>(sim: &SimConfig, services: I) -> Result<TailReport>
where
    I: IntoIterator<Item = f64>,
{
    sim.validate()?;
    let (trace, mean_service) = lindley_trace(
        sim.arrival_rate,
        services.into_iter().take(sim.blocks),
        sim.warmup,
    );
    if trace.is_empty() {
        return Err(invalid("services", "no blocks after warmup"));
    }
    let n = trace.len() as f64;
    let prob_nonempty = trace.iter().filter(|q| **q > 0.0).count() as f64 / n;
    let mean_queue = trace.iter().sum::<f64>() / n;
    let unstable = sim.arrival_rate > mean_service;
    let (fit, fit_error) = if unstable {
        (None, Some("arrival rate exceeds mean service".to_string()))
    } else {
        match estimate_decay(&trace, sim.tail_levels.as_deref()) {
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        }
    };
    Ok(TailReport {
        blocks: sim.blocks,
        warmup: sim.warmup,
        seed: sim.seed,
        arrival_rate: sim.arrival_rate,
        mean_service,
        unstable,
        prob_nonempty,
        mean_queue,
        fit,
        fit_error,
    })
}

/// Thresholds at exceedance probabilities spaced geometrically from
/// `min(0.1, P(Q > 0) / 2)` down to `200 / N`, read off the sorted samples.
pub fn default_tail_levels(sorted: &[f64]) -> Vec<f64> {
    let n = sorted.len();
    if n == 0 {
        return Vec::new();
    }
    let positive = n - sorted.partition_point(|q| *q <= 0.0);
    let p_hi = (0.1f64).min(0.5 * positive as f64 / n as f64);
    let p_lo = 2.0 * MIN_EXCEEDANCES as f64 / n as f64;
    if !(p_hi > p_lo) {
        return Vec::new();
    }
    let k = DEFAULT_TAIL_LEVELS;
    let mut levels: Vec<f64> = (0..k)
        .map(|i| {
            let p = p_hi * (p_lo / p_hi).powf(i as f64 / (k - 1) as f64);
            let idx = ((1.0 - p) * n as f64).floor() as usize;
            sorted[idx.min(n - 1)]
        })
        .filter(|q| *q > 0.0)
        .collect();
    levels.dedup();
    levels
}

/// Fits the decay rate of `P(Q >= q)` over the upper half of the levels.
pub fn estimate_decay(samples: &[f64], levels: Option<&[f64]>) -> Result<DecayFit> {
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(|a, b| a.total_cmp(b));
    let levels = match levels {
        Some(l) => l.to_vec(),
        None => default_tail_levels(&sorted),
    };
    if levels.len() < 2 {
        if let Some(&level) = levels.first() {
            let count = sorted.len() - sorted.partition_point(|q| *q < level);
            if count < MIN_EXCEEDANCES {
                return Err(Error::SparseTail {
                    level,
                    count,
                    required: MIN_EXCEEDANCES,
                });
            }
        } else if sorted.last().is_none_or(|q| *q <= 0.0) {
            return Err(Error::SparseTail {
                level: 0.0,
                count: 0,
                required: MIN_EXCEEDANCES,
            });
        }
        return Err(Error::TooFewTailLevels(levels.len()));
    }
    let n = sorted.len() as f64;
    let points: Vec<TailPoint> = levels
        .iter()
        .map(|&level| {
            let count = sorted.len() - sorted.partition_point(|q| *q < level);
            TailPoint {
                level,
                probability: count as f64 / n,
                count,
            }
        })
        .collect();
    let fit_start = (points.len() / 2).min(points.len() - 2);
    let used = &points[fit_start..];
    if let Some(p) = used.iter().find(|p| p.count < MIN_EXCEEDANCES) {
        return Err(Error::SparseTail {
            level: p.level,
            count: p.count,
            required: MIN_EXCEEDANCES,
        });
    }
    let k = used.len() as f64;
    let mx = used.iter().map(|p| p.level).sum::<f64>() / k;
    let my = used.iter().map(|p| p.probability.ln()).sum::<f64>() / k;
    let sxy: f64 = used
        .iter()
        .map(|p| (p.level - mx) * (p.probability.ln() - my))
        .sum();
    let sxx: f64 = used.iter().map(|p| (p.level - mx).powi(2)).sum();
    Ok(DecayFit {
        decay: -sxy / sxx,
        points,
        fit_start,
    })
}
