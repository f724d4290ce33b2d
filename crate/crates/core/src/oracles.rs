//! Slow reference implementations for cross-checking the solvers.
//!
//! Nothing here calls into `roots` or the solver modules: the searches are
//! plain scans, golden sections and hand-written bisections.

use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::LN_2;

use crate::bcc::PCState;
use crate::error::{invalid, Error, Result};
use crate::fading::{classify, ChannelConfig, FadingState, SecrecyRegion};
use crate::policy::PowerPolicy;
use crate::quadrature::{pairwise_sum, StateGrid};

/// Largest instance accepted by the brute-force searches.
pub const MAX_BRUTE_FORCE_STATES: usize = 9;
/// Power levels per state in [`brute_force_wiretap`].
pub const WIRETAP_LEVELS: usize = 20_000;
/// Scan points per axis in [`brute_force_pc_state`].
pub const PC_SCAN: usize = 2000;
const MAX_PC_RECENTRES: usize = 50;

/// Small joint distribution for exhaustive searches.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteInstance {
    pub states: Vec<FadingState>,
    pub probs: Vec<f64>,
    pub budget: f64,
    pub gamma: f64,
    pub beta: f64,
}

impl DiscreteInstance {
    pub fn new(
        states: Vec<FadingState>,
        probs: Vec<f64>,
        budget: f64,
        gamma: f64,
        beta: f64,
    ) -> Result<Self> {
        if states.is_empty() || states.len() != probs.len() {
            return Err(invalid("states", "need one probability per state"));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(invalid("probs", "must be finite and > 0"));
        }
        if (probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(invalid("probs", "must sum to 1"));
        }
        for (name, v) in [("budget", budget), ("gamma", gamma), ("beta", beta)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, format!("must be > 0, got {v}")));
            }
        }
        Ok(Self {
            states,
            probs,
            budget,
            gamma,
            beta,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleWiretap {
    pub power: Vec<f64>,
    pub throughput: f64,
}

fn secrecy_bits(gamma: f64, z: FadingState, mu: f64) -> f64 {
    if z.z_m > gamma * z.z_e {
        ((1.0 + mu * z.z_m) / (1.0 + mu * gamma * z.z_e)).log2()
    } else {
        0.0
    }
}

fn wiretap_objective(inst: &DiscreteInstance, power: &[f64]) -> f64 {
    // -(1/beta) log2 E[2^(-beta R)]
    let e: f64 = inst
        .states
        .iter()
        .zip(&inst.probs)
        .zip(power)
        .map(|((z, p), mu)| p * (-inst.beta * secrecy_bits(inst.gamma, *z, *mu) * LN_2).exp())
        .sum();
    -e.log2() / inst.beta
}

/// Exhaustive search over a dense power grid per state. For each multiplier
/// on a scan (refined around the budget crossing) every state picks its best
/// level; the best budget-feasible selection wins.
pub fn brute_force_wiretap(inst: &DiscreteInstance) -> Result<OracleWiretap> {
    if inst.states.len() > MAX_BRUTE_FORCE_STATES {
        return Err(Error::InstanceTooLarge(format!(
            "{} states (limit {MAX_BRUTE_FORCE_STATES})",
            inst.states.len()
        )));
    }
    let n = inst.states.len();
    let secure: Vec<bool> = inst
        .states
        .iter()
        .map(|z| classify(*z, inst.gamma) == SecrecyRegion::Secure)
        .collect();
    if !secure.iter().any(|&s| s) {
        return Ok(OracleWiretap {
            power: vec![0.0; n],
            throughput: 0.0,
        });
    }
    // level k of state i is k * step[i]; values 2^(-beta R) precomputed
    let step: Vec<f64> = inst
        .probs
        .iter()
        .map(|p| inst.budget / p / (WIRETAP_LEVELS - 1) as f64)
        .collect();
    let table: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..WIRETAP_LEVELS)
                .map(|k| {
                    let r = secrecy_bits(inst.gamma, inst.states[i], k as f64 * step[i]);
                    (-inst.beta * r * LN_2).exp()
                })
                .collect()
        })
        .collect();
    // argmin_k table[i][k] + nu * k * step[i]
    let pick = |nu: f64| -> Vec<usize> {
        (0..n)
            .map(|i| {
                if !secure[i] {
                    return 0;
                }
                let mut best = (f64::INFINITY, 0);
                for (k, v) in table[i].iter().enumerate() {
                    let f = v + nu * k as f64 * step[i];
                    if f < best.0 {
                        best = (f, k);
                    }
                }
                best.1
            })
            .collect()
    };
    let spend = |levels: &[usize]| -> f64 {
        levels
            .iter()
            .enumerate()
            .map(|(i, &k)| inst.probs[i] * k as f64 * step[i])
            .sum()
    };
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut consider = |levels: Vec<usize>| {
        if spend(&levels) <= inst.budget * (1.0 + 1e-12) {
            let power: Vec<f64> = levels
                .iter()
                .enumerate()
                .map(|(i, &k)| k as f64 * step[i])
                .collect();
            let t = wiretap_objective(inst, &power);
            if best.as_ref().is_none_or(|b| t > b.0) {
                best = Some((t, levels));
            }
        }
    };
    // multipliers above beta * ln2 * max margin switch every state off
    let max_margin = inst
        .states
        .iter()
        .map(|z| z.z_m - inst.gamma * z.z_e)
        .fold(0.0, f64::max);
    let (mut lo, mut hi) = ((1e-12f64).ln(), (2.0 * inst.beta * LN_2 * max_margin).ln());
    for _round in 0..6 {
        let scan = 200;
        let mut crossing = (lo, hi);
        let mut prev_feasible = None;
        for j in 0..=scan {
            let ln_nu = lo + (hi - lo) * j as f64 / scan as f64;
            let levels = pick(ln_nu.exp());
            let feasible = spend(&levels) <= inst.budget * (1.0 + 1e-12);
            if feasible && prev_feasible == Some(false) {
                crossing = (lo + (hi - lo) * (j - 1) as f64 / scan as f64, ln_nu);
            }
            prev_feasible = Some(feasible);
            consider(levels);
        }
        (lo, hi) = crossing;
    }
    let (throughput, levels) = best.expect("the zero policy is always feasible");
    Ok(OracleWiretap {
        power: levels
            .iter()
            .enumerate()
            .map(|(i, &k)| k as f64 * step[i])
            .collect(),
        throughput,
    })
}

/// Ergodic (`theta = 0`) optimum of the confidential rate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErgodicSecrecy {
    pub policy: PowerPolicy,
    /// `E[R1]`, bits/s/Hz.
    pub rate: f64,
    /// Water level `nu` of the stationarity condition.
    pub nu: f64,
}

/// Positive root of `c ab mu^2 + c (a + b) mu + c - (a - b) = 0`, or 0 when
/// the margin does not exceed `c`.
fn ergodic_level(a: f64, b: f64, c: f64) -> f64 {
    let m = a - b;
    if m <= c {
        return 0.0;
    }
    let q = c * a * b;
    let r = c * (a + b);
    let s = c - m;
    -2.0 * s / (r + (r * r - 4.0 * q * s).sqrt())
}

/// Maximizes `E[log2(1 + mu z_M) - log2(1 + gamma mu z_E)]` over the grid
/// with `E[mu] = avg_snr`, by bisection on the water level.
pub fn ergodic_secrecy_power(cfg: &ChannelConfig, grid: &StateGrid) -> Result<ErgodicSecrecy> {
    cfg.validate()?;
    let gamma = grid.gamma();
    let levels = |c: f64| -> Vec<f64> {
        grid.points()
            .iter()
            .map(|p| ergodic_level(p.z.z_m, gamma * p.z.z_e, c))
            .collect()
    };
    let mean = |v: &[f64]| -> f64 {
        let t: Vec<f64> = grid
            .points()
            .iter()
            .zip(v)
            .map(|(p, x)| p.weight * x)
            .collect();
        pairwise_sum(&t) / grid.total_weight()
    };
    let max_margin = grid
        .points()
        .iter()
        .filter(|p| p.weight > 0.0)
        .map(|p| p.z.margin(gamma))
        .fold(0.0, f64::max);
    if !(max_margin > 0.0) {
        return Err(Error::BracketFailure {
            context: "ergodic water level".into(),
            reason: "no secure state".into(),
        });
    }
    let (mut lo, mut hi) = (max_margin, max_margin);
    while mean(&levels(lo)) <= cfg.avg_snr {
        lo *= 0.5;
        if lo < 1e-300 {
            return Err(Error::BracketFailure {
                context: "ergodic water level".into(),
                reason: "budget not reachable".into(),
            });
        }
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if mean(&levels(mid)) > cfg.avg_snr {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-15 {
            break;
        }
    }
    let c = (lo * hi).sqrt();
    let mu1 = levels(c);
    let rates: Vec<f64> = grid
        .points()
        .iter()
        .zip(&mu1)
        .map(|(p, &mu)| secrecy_bits(gamma, p.z, mu))
        .collect();
    let rate = mean(&rates);
    Ok(ErgodicSecrecy {
        policy: PowerPolicy {
            mu0: vec![0.0; grid.len()],
            mu1,
        },
        rate,
        nu: c / LN_2,
    })
}

/// Per-state Lagrangian with the constant `1 / (beta alpha)` terms dropped.
fn pc_objective(
    beta: f64,
    gamma: f64,
    z: FadingState,
    a1: f64,
    a2: f64,
    mu0: f64,
    mu1: f64,
) -> f64 {
    let b = gamma * z.z_e;
    let (u0, u1) = if z.z_m > b {
        (
            1.0 + mu0 * b / (1.0 + mu1 * b),
            (1.0 + mu1 * z.z_m) / (1.0 + mu1 * b),
        )
    } else {
        (1.0 + mu0 * z.z_m, 1.0)
    };
    // u^(-beta)/beta - 1/beta; tends to -ln u as beta -> 0
    let t = |u: f64, alpha: f64| {
        if alpha.is_infinite() {
            0.0
        } else {
            (-beta * u.ln()).exp_m1() / (beta * alpha)
        }
    };
    mu0 + mu1 + t(u0, a1) + t(u1, a2)
}

/// Dense two-dimensional scan of the per-state Lagrangian, followed by two
/// local rescans at finer resolution. Lowest index wins ties.
pub fn brute_force_pc_state(
    cfg: &ChannelConfig,
    z: FadingState,
    pc: &PCState,
) -> Result<(f64, f64)> {
    cfg.validate()?;
    pc.validate()?;
    let beta = cfg.beta();
    if !(beta > 0.0) {
        return Err(Error::NonPositiveTheta(cfg.theta));
    }
    let gamma = cfg.gamma;
    let (a1, a2) = (pc.alpha1(), pc.alpha2());
    let f = |m0: f64, m1: f64| pc_objective(beta, gamma, z, a1, a2, m0, m1);
    // beyond these the partial derivatives are positive
    let max0 = if a1.is_finite() { 1.0 / a1 } else { 0.0 };
    let margin = z.z_m - gamma * z.z_e;
    let max1 = if margin > 0.0 && a2.is_finite() {
        margin / (a2 * z.z_m)
    } else {
        0.0
    };
    // returns the argmin and whether it sits on an interior window edge
    let scan = |lo0: f64, hi0: f64, lo1: f64, hi1: f64| -> (f64, f64, bool) {
        let n = PC_SCAN;
        let x = |k: usize, lo: f64, hi: f64| lo + (hi - lo) * k as f64 / (n - 1) as f64;
        let rows: Vec<(f64, usize, usize)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let m0 = x(i, lo0, hi0);
                let mut best = (f64::INFINITY, i, 0);
                for j in 0..n {
                    let v = f(m0, x(j, lo1, hi1));
                    if v < best.0 {
                        best = (v, i, j);
                    }
                }
                best
            })
            .collect();
        let mut best = rows[0];
        for r in &rows[1..] {
            if r.0 < best.0 {
                best = *r;
            }
        }
        let edge =
            |k: usize, lo: f64, hi: f64, max: f64| (k == 0 && lo > 0.0) || (k == n - 1 && hi < max);
        let on_edge = edge(best.1, lo0, hi0, max0) || edge(best.2, lo1, hi1, max1);
        (x(best.1, lo0, hi0), x(best.2, lo1, hi1), on_edge)
    };
    let (mut m0, mut m1, _) = scan(0.0, max0, 0.0, max1);
    let (mut h0, mut h1) = (max0 / (PC_SCAN - 1) as f64, max1 / (PC_SCAN - 1) as f64);
    // Zoom twice. A minimum on a narrow diagonal valley can lie several
    // coarse cells away, so a window whose argmin lands on its edge is
    // re-centred at the same size before shrinking.
    let mut zooms = 0;
    for _ in 0..MAX_PC_RECENTRES {
        let (lo0, hi0) = ((m0 - 2.0 * h0).max(0.0), (m0 + 2.0 * h0).min(max0));
        let (lo1, hi1) = ((m1 - 2.0 * h1).max(0.0), (m1 + 2.0 * h1).min(max1));
        let on_edge;
        (m0, m1, on_edge) = scan(lo0, hi0, lo1, hi1);
        if on_edge {
            continue;
        }
        h0 = (hi0 - lo0) / (PC_SCAN - 1) as f64;
        h1 = (hi1 - lo1) / (PC_SCAN - 1) as f64;
        zooms += 1;
        if zooms == 2 {
            break;
        }
    }
    Ok((m0, m1))
}

/// Golden-section minimizer of a unimodal function on `[lo, hi]`.
fn golden_min<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol * (1.0 + lo.abs()) {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
    }
    let mid = 0.5 * (lo + hi);
    // the minimum may sit at the left end (zero power)
    if f(0.0) <= f(mid) && lo <= tol {
        0.0
    } else {
        mid
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommonOnly {
    pub power: Vec<f64>,
    /// Effective capacity of the common message, bits/s/Hz.
    pub throughput: f64,
}

/// Single-message effective-capacity maximization for the common message
/// alone: it must reach both receivers, so the gain is `min(z_M, gamma z_E)`.
/// Per-state golden sections on `(1 + mu g)^(-beta) + nu mu`, with `nu`
/// bisected to meet the budget.
pub fn common_only_effective_capacity(cfg: &ChannelConfig, grid: &StateGrid) -> Result<CommonOnly> {
    cfg.validate()?;
    let beta = cfg.beta();
    if !(beta > 0.0) {
        return Err(Error::NonPositiveTheta(cfg.theta));
    }
    let gamma = grid.gamma();
    let gains: Vec<f64> = grid
        .points()
        .iter()
        .map(|p| p.z.z_m.min(gamma * p.z.z_e))
        .collect();
    let powers = |nu: f64| -> Vec<f64> {
        gains
            .par_iter()
            .map(|&g| {
                // zero power is optimal when the slope at 0 is below nu
                if beta * g <= nu {
                    return 0.0;
                }
                let obj = |mu: f64| (-beta * (mu * g).ln_1p()).exp() + nu * mu;
                golden_min(obj, 0.0, beta / nu, 1e-12)
            })
            .collect()
    };
    let spend = |mu: &[f64]| {
        let t: Vec<f64> = grid
            .points()
            .iter()
            .zip(mu)
            .map(|(p, m)| p.weight * m)
            .collect();
        pairwise_sum(&t)
    };
    let g_max = gains.iter().cloned().fold(0.0, f64::max);
    let (mut lo, mut hi) = (beta * g_max, beta * g_max);
    while spend(&powers(lo)) <= cfg.avg_snr {
        lo *= 0.25;
        if lo < 1e-300 {
            return Err(Error::BracketFailure {
                context: "common-only water level".into(),
                reason: "budget not reachable".into(),
            });
        }
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if spend(&powers(mid)) > cfg.avg_snr {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-13 {
            break;
        }
    }
    let power = powers((lo * hi).sqrt());
    let terms: Vec<f64> = grid
        .points()
        .iter()
        .zip(gains.iter().zip(&power))
        .map(|(p, (g, mu))| p.weight * (-beta * (mu * g).ln_1p()).exp())
        .collect();
    let e = pairwise_sum(&terms) / grid.total_weight();
    Ok(CommonOnly {
        power,
        throughput: -e.log2() / beta,
    })
}
