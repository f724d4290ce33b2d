//! Common plus confidential messages: power control maximizing
//! `lambda0 * C0 + lambda1 * C1` and tracing of the throughput region.
//!
//! Given the power price `kappa` and the normalizers `(phi0, phi1)`, the
//! Lagrangian separates across states. Each state minimizes
//!
//! ```text
//! mu0 + mu1 + u0^(-beta) / (beta alpha1) + u1^(-beta) / (beta alpha2)
//! ```
//!
//! where `2^R0 = u0` and `2^R1 = u1`, `alpha1 = kappa phi0 ln2 / lambda0` and
//! `alpha2 = kappa phi1 ln2 / lambda1`. Only the stationarity conditions are
//! used, so `beta = 0` (ergodic rates, `phi = 1`) needs no special casing.

use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::LN_2;

use crate::effcap::{effective_capacity_weighted, ergodic_weighted, ThroughputPoint};
use crate::error::{invalid, Error, Result};
use crate::fading::{classify, ChannelConfig, FadingState, SecrecyRegion};
use crate::policy::PowerPolicy;
use crate::quadrature::{pairwise_sum, StateGrid};
use crate::roots::{brent, Tolerance};

const STATE_TOLERANCE: Tolerance = Tolerance::new(1e-13, 0.0, 300);
/// `|E[mu0 + mu1] / avg_snr - 1|` accepted by the price search.
pub const BUDGET_TOLERANCE: f64 = 1e-10;
/// Fixed point stops once neither normalizer moves by more than this.
pub const PHI_TOLERANCE: f64 = 1e-6;
pub const MAX_PHI_ITERATIONS: usize = 100;
/// Plain substitution for this many iterations, then damped by one half.
pub const UNDAMPED_ITERATIONS: usize = 20;

/// Multipliers of one Lagrangian iterate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PCState {
    pub lambda0: f64,
    pub lambda1: f64,
    pub kappa: f64,
    pub phi0: f64,
    pub phi1: f64,
}

impl PCState {
    pub fn new(lambda0: f64, lambda1: f64, kappa: f64, phi0: f64, phi1: f64) -> Result<Self> {
        let s = Self {
            lambda0,
            lambda1,
            kappa,
            phi0,
            phi1,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        check_weights(self.lambda0, self.lambda1)?;
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(invalid("kappa", format!("must be > 0, got {}", self.kappa)));
        }
        for (name, phi) in [("phi0", self.phi0), ("phi1", self.phi1)] {
            if !(phi > 0.0 && phi <= 1.0) {
                return Err(invalid(name, format!("must lie in (0, 1], got {phi}")));
            }
        }
        Ok(())
    }

    /// Common-message activation level; infinite when `lambda0 = 0`.
    pub fn alpha1(&self) -> f64 {
        alpha(self.kappa, self.phi0, self.lambda0)
    }

    /// Confidential-message activation level; infinite when `lambda1 = 0`.
    pub fn alpha2(&self) -> f64 {
        alpha(self.kappa, self.phi1, self.lambda1)
    }
}

fn alpha(kappa: f64, phi: f64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        f64::INFINITY
    } else {
        kappa * phi * LN_2 / lambda
    }
}

fn check_weights(lambda0: f64, lambda1: f64) -> Result<()> {
    if !(lambda0 >= 0.0 && lambda1 >= 0.0 && lambda0.is_finite() && lambda1.is_finite()) {
        return Err(invalid(
            "lambda",
            format!("weights must be finite and >= 0, got ({lambda0}, {lambda1})"),
        ));
    }
    if lambda0 + lambda1 == 0.0 {
        return Err(invalid("lambda", "lambda0 and lambda1 cannot both be 0"));
    }
    Ok(())
}

/// Which case of the per-state logic produced a power pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Branch {
    /// `z_M <= gamma z_E`: common message only, limited by `z_M`.
    Insecure,
    /// Secure, margin at most `alpha2`: common message only, limited by `z_E`.
    CommonOnly,
    /// Secure, confidential power positive and common power zero.
    ConfidentialOnly,
    /// Secure, both powers from the joint conditions.
    Both,
    /// Secure, margin above `alpha2` but the joint condition has no positive
    /// confidential root: common message only.
    JointFallback,
}

/// `[ (g / alpha1)^(1/(beta+1)) - 1 ]^+ / g`, the common power against a
/// receiver with gain `g` when no confidential power is spent.
fn common_power(beta: f64, g: f64, alpha1: f64) -> f64 {
    if !(g > 0.0) || alpha1.is_infinite() {
        return 0.0;
    }
    let ln_ratio = (g / alpha1).ln();
    if ln_ratio <= 0.0 {
        return 0.0;
    }
    (ln_ratio / (beta + 1.0)).exp_m1() / g
}

/// `ln` of `u1^(-beta-1) (a - b) / (alpha2 (1 + b mu)^2)`, the confidential
/// marginal utility per unit power; strictly decreasing in `mu`.
#[inline]
fn ln_confidential_gain(beta: f64, a: f64, b: f64, ln_alpha2: f64, mu: f64) -> f64 {
    let ln_u1 = (mu * a).ln_1p() - (mu * b).ln_1p();
    (a - b).ln() - ln_alpha2 - (beta + 1.0) * ln_u1 - 2.0 * (mu * b).ln_1p()
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct StatePower {
    mu0: f64,
    mu1: f64,
    branch: Branch,
}

fn pc_state_power(
    beta: f64,
    gamma: f64,
    z: FadingState,
    alpha1: f64,
    alpha2: f64,
) -> Result<StatePower> {
    let a = z.z_m;
    let b = gamma * z.z_e;
    if classify(z, gamma) == SecrecyRegion::Insecure {
        return Ok(StatePower {
            mu0: common_power(beta, a, alpha1),
            mu1: 0.0,
            branch: Branch::Insecure,
        });
    }
    let m = a - b;
    if m <= alpha2 {
        return Ok(StatePower {
            mu0: common_power(beta, b, alpha1),
            mu1: 0.0,
            branch: Branch::CommonOnly,
        });
    }
    let ln_alpha2 = alpha2.ln();
    let hi = 2.0 * (m / alpha2 - 1.0) / a;
    let mu1_c = brent(
        |mu| ln_confidential_gain(beta, a, b, ln_alpha2, mu),
        0.0,
        hi,
        STATE_TOLERANCE,
        0.0,
        "confidential power (common power zero)",
    )
    .map_err(|e| at_state(e, z))?
    .x;
    // With mu0 = 0 the common marginal utility is A / alpha1, A = b / (1 + b mu1).
    if b < alpha1 || mu1_c > 1.0 / alpha1 - 1.0 / b {
        return Ok(StatePower {
            mu0: 0.0,
            mu1: mu1_c,
            branch: Branch::ConfidentialOnly,
        });
    }
    let ln_alpha1 = alpha1.ln();
    let joint = |mu: f64| {
        let ln_a = b.ln() - (mu * b).ln_1p();
        ln_confidential_gain(beta, a, b, ln_alpha2, mu) - (ln_a - ln_alpha1) / (beta + 1.0)
    };
    if joint(0.0) <= 0.0 {
        return Ok(StatePower {
            mu0: common_power(beta, b, alpha1),
            mu1: 0.0,
            branch: Branch::JointFallback,
        });
    }
    let mu1 = brent(
        joint,
        0.0,
        mu1_c,
        STATE_TOLERANCE,
        0.0,
        "joint power condition",
    )
    .map_err(|e| at_state(e, z))?
    .x;
    let big_a = b / (1.0 + b * mu1);
    let mu0 = ((big_a / alpha1).ln() / (beta + 1.0)).exp_m1().max(0.0) / big_a;
    Ok(StatePower {
        mu0,
        mu1,
        branch: Branch::Both,
    })
}

fn at_state(e: Error, z: FadingState) -> Error {
    match e {
        Error::RootNotConverged {
            context,
            lo,
            hi,
            f_lo,
            f_hi,
            iterations,
        } => Error::RootNotConverged {
            context: format!("{context} at (z_M = {}, z_E = {})", z.z_m, z.z_e),
            lo,
            hi,
            f_lo,
            f_hi,
            iterations,
        },
        other => other,
    }
}

/// Optimal `(mu0, mu1)` at one state for the given multipliers.
pub fn state_power_pc(cfg: &ChannelConfig, z: FadingState, pc: &PCState) -> Result<(f64, f64)> {
    state_power_pc_branch(cfg, z, pc).map(|(mu0, mu1, _)| (mu0, mu1))
}

/// [`state_power_pc`] together with the case that produced it.
pub fn state_power_pc_branch(
    cfg: &ChannelConfig,
    z: FadingState,
    pc: &PCState,
) -> Result<(f64, f64, Branch)> {
    cfg.validate()?;
    pc.validate()?;
    let s = pc_state_power(cfg.beta(), cfg.gamma, z, pc.alpha1(), pc.alpha2())?;
    Ok((s.mu0, s.mu1, s.branch))
}

/// Per-state objective, `beta > 0`. Exposed for diagnostics and oracles.
pub fn state_lagrangian(
    beta: f64,
    gamma: f64,
    z: FadingState,
    pc: &PCState,
    mu0: f64,
    mu1: f64,
) -> f64 {
    let (u0, u1) = state_rates(gamma, z, mu0, mu1);
    let term = |u: f64, alpha: f64| {
        if alpha.is_infinite() {
            0.0
        } else {
            (-beta * u.ln()).exp() / (beta * alpha)
        }
    };
    mu0 + mu1 + term(u0, pc.alpha1()) + term(u1, pc.alpha2())
}

/// `(2^R0, 2^R1)` at one state.
fn state_rates(gamma: f64, z: FadingState, mu0: f64, mu1: f64) -> (f64, f64) {
    let b = gamma * z.z_e;
    match classify(z, gamma) {
        SecrecyRegion::Insecure => (1.0 + mu0 * z.z_m, 1.0),
        SecrecyRegion::Secure => (
            1.0 + mu0 * b / (1.0 + mu1 * b),
            (1.0 + mu1 * z.z_m) / (1.0 + mu1 * b),
        ),
    }
}

/// Largest violation of the stationarity conditions over the grid: the
/// partial derivatives of the per-state objective must vanish where the
/// corresponding power is positive and be nonnegative where it is zero.
pub fn kkt_residual(
    cfg: &ChannelConfig,
    grid: &StateGrid,
    pc: &PCState,
    policy: &PowerPolicy,
) -> f64 {
    let beta = cfg.beta();
    let gamma = cfg.gamma;
    let (alpha1, alpha2) = (pc.alpha1(), pc.alpha2());
    let mut worst: f64 = 0.0;
    for (i, p) in grid.points().iter().enumerate() {
        if p.weight == 0.0 {
            continue;
        }
        let (mu0, mu1) = (policy.mu0[i], policy.mu1[i]);
        let z = p.z;
        let (u0, u1) = state_rates(gamma, z, mu0, mu1);
        let secure = classify(z, gamma) == SecrecyRegion::Secure;
        let b = gamma * z.z_e;
        let g0 = if secure { b / (1.0 + mu1 * b) } else { z.z_m };
        let inv1 = if alpha1.is_infinite() {
            0.0
        } else {
            1.0 / alpha1
        };
        let d0 = 1.0 - inv1 * (-(beta + 1.0) * u0.ln()).exp() * g0;
        worst = worst.max(if mu0 > 0.0 { d0.abs() } else { (-d0).max(0.0) });
        if secure {
            let inv2 = if alpha2.is_infinite() {
                0.0
            } else {
                1.0 / alpha2
            };
            let conf = inv2 * (-(beta + 1.0) * u1.ln()).exp() * (z.z_m - b)
                / ((1.0 + mu1 * b) * (1.0 + mu1 * b));
            let cross = inv1 * (-(beta + 1.0) * u0.ln()).exp() * mu0 * g0 * g0;
            let d1 = 1.0 + cross - conf;
            worst = worst.max(if mu1 > 0.0 { d1.abs() } else { (-d1).max(0.0) });
        }
    }
    worst
}

/// Converged solution of the weighted problem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PCSolution {
    pub policy: PowerPolicy,
    pub point: ThroughputPoint,
    /// Final multipliers, with the weights normalized to sum to one.
    pub state: PCState,
    pub average_power: f64,
    pub phi_iterations: usize,
    /// Power evaluations spent on the price search, summed over iterations.
    pub kappa_evaluations: usize,
    /// Last fixed-point step `max(|d phi0|, |d phi1|)`.
    pub phi_step: f64,
}

struct Evaluator<'a> {
    grid: &'a StateGrid,
    beta: f64,
    gamma: f64,
    avg_snr: f64,
    lambda0: f64,
    lambda1: f64,
    evaluations: usize,
}

impl Evaluator<'_> {
    fn powers(&self, kappa: f64, phi0: f64, phi1: f64) -> Result<Vec<StatePower>> {
        let a1 = alpha(kappa, phi0, self.lambda0);
        let a2 = alpha(kappa, phi1, self.lambda1);
        self.grid
            .points()
            .par_iter()
            .map(|p| {
                if p.weight > 0.0 {
                    pc_state_power(self.beta, self.gamma, p.z, a1, a2)
                } else {
                    Ok(StatePower {
                        mu0: 0.0,
                        mu1: 0.0,
                        branch: Branch::Insecure,
                    })
                }
            })
            .collect()
    }

    fn average_power(&mut self, kappa: f64, phi0: f64, phi1: f64) -> Result<f64> {
        self.evaluations += 1;
        let powers = self.powers(kappa, phi0, phi1)?;
        let terms: Vec<f64> = self
            .grid
            .points()
            .iter()
            .zip(&powers)
            .map(|(p, s)| p.weight * (s.mu0 + s.mu1))
            .collect();
        Ok(pairwise_sum(&terms))
    }

    /// Price at which no state receives power.
    fn kappa_ceiling(&self, phi0: f64, phi1: f64) -> f64 {
        let mut top: f64 = 0.0;
        for p in self.grid.points().iter().filter(|p| p.weight > 0.0) {
            top = top.max(self.lambda0 * p.z.z_m.max(self.gamma * p.z.z_e) / (phi0 * LN_2));
            top = top.max(self.lambda1 * p.z.margin(self.gamma) / (phi1 * LN_2));
        }
        top
    }

    fn solve_kappa(&mut self, guess: Option<f64>, phi0: f64, phi1: f64) -> Result<f64> {
        let ceiling = self.kappa_ceiling(phi0, phi1);
        if !(ceiling > 0.0) {
            return Err(Error::BracketFailure {
                context: "power price".into(),
                reason: "no state can carry a positive rate".into(),
            });
        }
        let target = self.avg_snr;
        let start = guess
            .filter(|k| *k > 0.0 && *k < ceiling)
            .unwrap_or(0.5 * ceiling);
        let (mut lo, mut hi) = (start, start);
        let mut steps = 0;
        if self.average_power(start, phi0, phi1)? > target {
            // power decreases in kappa; walk up, never beyond the ceiling
            loop {
                lo = hi;
                hi = (hi * 2.0).min(ceiling);
                if hi == ceiling || self.average_power(hi, phi0, phi1)? <= target {
                    break;
                }
                steps += 1;
                if steps > 200 {
                    unreachable!("ceiling reached within 200 doublings");
                }
            }
        } else {
            loop {
                hi = lo;
                lo *= 0.5;
                if self.average_power(lo, phi0, phi1)? > target {
                    break;
                }
                steps += 1;
                if steps > 2000 || lo == 0.0 {
                    return Err(Error::BracketFailure {
                        context: "power price".into(),
                        reason: format!("average power stays below {target} down to kappa = {lo}"),
                    });
                }
            }
        }
        let mut failure = None;
        let root = brent(
            |ln_k| match self.average_power(ln_k.exp(), phi0, phi1) {
                Ok(p) => p / target - 1.0,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            },
            lo.ln(),
            hi.ln(),
            Tolerance::new(0.0, 1e-15, 200),
            BUDGET_TOLERANCE,
            "power price",
        );
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(root?.x.exp())
    }

    /// `(E[u0^-beta], E[u1^-beta])` over the normalized grid weights.
    fn normalizers(&self, powers: &[StatePower]) -> (f64, f64) {
        let total = self.grid.total_weight();
        let mut t0 = Vec::with_capacity(powers.len());
        let mut t1 = Vec::with_capacity(powers.len());
        for (p, s) in self.grid.points().iter().zip(powers) {
            let (u0, u1) = state_rates(self.gamma, p.z, s.mu0, s.mu1);
            t0.push(p.weight * (-self.beta * u0.ln()).exp());
            t1.push(p.weight * (-self.beta * u1.ln()).exp());
        }
        (pairwise_sum(&t0) / total, pairwise_sum(&t1) / total)
    }
}

/// Solves the weighted problem from scratch.
pub fn solve_pc(
    cfg: &ChannelConfig,
    grid: &StateGrid,
    lambda0: f64,
    lambda1: f64,
) -> Result<PCSolution> {
    solve_pc_from(cfg, grid, lambda0, lambda1, None)
}

/// Solves the weighted problem, starting the price search and the fixed
/// point from `warm` when given (typically a neighbouring boundary point).
pub fn solve_pc_from(
    cfg: &ChannelConfig,
    grid: &StateGrid,
    lambda0: f64,
    lambda1: f64,
    warm: Option<&PCState>,
) -> Result<PCSolution> {
    cfg.validate()?;
    check_weights(lambda0, lambda1)?;
    if (cfg.gamma - grid.gamma()).abs() > 1e-12 * cfg.gamma {
        return Err(invalid(
            "gamma",
            format!(
                "grid built for gamma = {}, config has {}",
                grid.gamma(),
                cfg.gamma
            ),
        ));
    }
    let scale = lambda0 + lambda1;
    let mut ev = Evaluator {
        grid,
        beta: cfg.beta(),
        gamma: cfg.gamma,
        avg_snr: cfg.avg_snr,
        lambda0: lambda0 / scale,
        lambda1: lambda1 / scale,
        evaluations: 0,
    };
    let (mut phi0, mut phi1) = warm.map_or((1.0, 1.0), |w| (w.phi0, w.phi1));
    let mut kappa_guess = warm.map(|w| w.kappa * scale_ratio(w, ev.lambda0, ev.lambda1));
    let mut step = f64::INFINITY;
    for it in 1..=MAX_PHI_ITERATIONS {
        let kappa = ev.solve_kappa(kappa_guess, phi0, phi1)?;
        kappa_guess = Some(kappa);
        let powers = ev.powers(kappa, phi0, phi1)?;
        let (new0, new1) = ev.normalizers(&powers);
        step = (new0 - phi0).abs().max((new1 - phi1).abs());
        if step < PHI_TOLERANCE {
            return finish(cfg, grid, &mut ev, kappa, phi0, phi1, powers, it, step);
        }
        if it <= UNDAMPED_ITERATIONS {
            (phi0, phi1) = (new0, new1);
        } else {
            (phi0, phi1) = (0.5 * (phi0 + new0), 0.5 * (phi1 + new1));
        }
    }
    Err(Error::FixedPointNotConverged {
        iterations: MAX_PHI_ITERATIONS,
        phi0,
        phi1,
        step,
    })
}

/// Keeps the warm-start `alpha`s roughly fixed when the weights change.
fn scale_ratio(warm: &PCState, lambda0: f64, lambda1: f64) -> f64 {
    let total = warm.lambda0 + warm.lambda1;
    let (w0, w1) = (warm.lambda0 / total, warm.lambda1 / total);
    let r = |new: f64, old: f64| {
        if old > 0.0 && new > 0.0 {
            new / old
        } else {
            1.0
        }
    };
    (r(lambda0, w0) * r(lambda1, w1)).sqrt()
}

#[allow(clippy::too_many_arguments)]
fn finish(
    cfg: &ChannelConfig,
    grid: &StateGrid,
    ev: &mut Evaluator<'_>,
    kappa: f64,
    phi0: f64,
    phi1: f64,
    powers: Vec<StatePower>,
    iterations: usize,
    step: f64,
) -> Result<PCSolution> {
    let policy = PowerPolicy {
        mu0: powers.iter().map(|s| s.mu0).collect(),
        mu1: powers.iter().map(|s| s.mu1).collect(),
    };
    let average_power = policy.average_power(grid)?;
    let (mut r0, mut r1) = (
        Vec::with_capacity(grid.len()),
        Vec::with_capacity(grid.len()),
    );
    for (p, s) in grid.points().iter().zip(&powers) {
        let (u0, u1) = state_rates(cfg.gamma, p.z, s.mu0, s.mu1);
        r0.push(u0.log2());
        r1.push(u1.log2().max(0.0));
    }
    let weights = grid.weights();
    let point = if cfg.is_ergodic() {
        ThroughputPoint::new(
            ergodic_weighted(&weights, &r0),
            ergodic_weighted(&weights, &r1),
        )
    } else {
        let beta = cfg.beta();
        ThroughputPoint::new(
            effective_capacity_weighted(beta, &weights, &r0),
            effective_capacity_weighted(beta, &weights, &r1),
        )
    };
    Ok(PCSolution {
        policy,
        point,
        state: PCState {
            lambda0: ev.lambda0,
            lambda1: ev.lambda1,
            kappa,
            phi0,
            phi1,
        },
        average_power,
        phi_iterations: iterations,
        kappa_evaluations: ev.evaluations,
        phi_step: step,
    })
}

/// Per-grid-point branch labels for a solved policy.
pub fn branches(cfg: &ChannelConfig, grid: &StateGrid, pc: &PCState) -> Result<Vec<Branch>> {
    let (beta, gamma) = (cfg.beta(), cfg.gamma);
    let (a1, a2) = (pc.alpha1(), pc.alpha2());
    grid.points()
        .par_iter()
        .map(|p| pc_state_power(beta, gamma, p.z, a1, a2).map(|s| s.branch))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryPoint {
    pub lambda0: f64,
    /// `None` when the solve at this weight failed; see `error`.
    pub point: Option<ThroughputPoint>,
    pub phi_iterations: usize,
    pub average_power: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionBoundary {
    /// In increasing `lambda0` order, `lambda1 = 1 - lambda0`.
    pub points: Vec<BoundaryPoint>,
}

impl RegionBoundary {
    pub fn valid_points(&self) -> Vec<ThroughputPoint> {
        self.points.iter().filter_map(|p| p.point).collect()
    }

    pub fn failures(&self) -> Vec<(f64, String)> {
        self.points
            .iter()
            .filter_map(|p| p.error.clone().map(|e| (p.lambda0, e)))
            .collect()
    }

    /// Confidential-axis end (`lambda0 = 0`).
    pub fn c1_intercept(&self) -> Option<f64> {
        self.points.first().and_then(|p| p.point).map(|p| p.c1)
    }

    /// Common-axis end (`lambda0 = 1`).
    pub fn c0_intercept(&self) -> Option<f64> {
        self.points.last().and_then(|p| p.point).map(|p| p.c0)
    }

    /// Height of the region, i.e. the largest `C1` achievable together with
    /// a common rate of at least `c0`, on the piecewise-linear boundary.
    pub fn height(&self, c0: f64) -> f64 {
        upper_height(&sorted_envelope(&self.valid_points()), c0)
    }

    /// Whether `point` lies in the region below the traced boundary,
    /// allowing `tol` in the confidential direction.
    pub fn contains(&self, point: ThroughputPoint, tol: f64) -> bool {
        point.c1 <= self.height(point.c0) + tol
    }
}

/// `lambda0 = k / (n - 1)` for `k = 0..n`, each solved with a warm start from
/// its predecessor. Failed points are recorded and the sweep continues.
pub fn trace_region(
    cfg: &ChannelConfig,
    grid: &StateGrid,
    n_points: usize,
) -> Result<RegionBoundary> {
    if n_points < 3 {
        return Err(invalid("n_points", format!("must be >= 3, got {n_points}")));
    }
    cfg.validate()?;
    let mut warm: Option<PCState> = None;
    let mut points = Vec::with_capacity(n_points);
    for k in 0..n_points {
        let lambda0 = k as f64 / (n_points - 1) as f64;
        let lambda1 = 1.0 - lambda0;
        let solved = solve_pc_from(cfg, grid, lambda0, lambda1, warm.as_ref())
            .or_else(|_| solve_pc(cfg, grid, lambda0, lambda1));
        points.push(match solved {
            Ok(sol) => {
                warm = Some(sol.state);
                BoundaryPoint {
                    lambda0,
                    point: Some(sol.point),
                    phi_iterations: sol.phi_iterations,
                    average_power: sol.average_power,
                    error: None,
                }
            }
            Err(e) => BoundaryPoint {
                lambda0,
                point: None,
                phi_iterations: 0,
                average_power: f64::NAN,
                error: Some(e.to_string()),
            },
        });
    }
    Ok(RegionBoundary { points })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityReport {
    /// Largest amount by which a chord midpoint rises above the boundary.
    pub max_violation: f64,
    pub pairs_checked: usize,
    pub note: Option<String>,
}

impl ConvexityReport {
    pub fn is_convex(&self, tol: f64) -> bool {
        self.max_violation <= tol
    }
}

/// Points sorted by `C0`, keeping the larger `C1` on ties.
fn sorted_envelope(points: &[ThroughputPoint]) -> Vec<ThroughputPoint> {
    let mut pts: Vec<ThroughputPoint> = points.to_vec();
    pts.sort_by(|a, b| a.c0.total_cmp(&b.c0).then(b.c1.total_cmp(&a.c1)));
    pts.dedup_by(|later, earlier| later.c0 == earlier.c0);
    pts
}

/// `max_{x >= c0} curve(x)` for the linear interpolant through `pts`.
fn upper_height(pts: &[ThroughputPoint], c0: f64) -> f64 {
    let Some(last) = pts.last() else {
        return f64::NEG_INFINITY;
    };
    if c0 > last.c0 {
        return f64::NEG_INFINITY;
    }
    let mut best = f64::NEG_INFINITY;
    for w in pts.windows(2) {
        let (p, q) = (w[0], w[1]);
        if q.c0 < c0 {
            continue;
        }
        let at = if p.c0 >= c0 {
            p.c1
        } else {
            p.c1 + (q.c1 - p.c1) * (c0 - p.c0) / (q.c0 - p.c0)
        };
        best = best.max(at).max(q.c1);
    }
    if pts.len() == 1 || pts[0].c0 >= c0 {
        best = best.max(pts[0].c1);
    }
    best
}

/// Audits every chord between boundary points against the piecewise-linear
/// region they trace. Fewer than three points are vacuously convex.
pub fn check_convexity(points: &[ThroughputPoint]) -> ConvexityReport {
    if points.len() < 3 {
        return ConvexityReport {
            max_violation: 0.0,
            pairs_checked: 0,
            note: Some(format!(
                "only {} boundary point(s); convexity holds vacuously",
                points.len()
            )),
        };
    }
    let env = sorted_envelope(points);
    let mut worst: f64 = 0.0;
    let mut pairs = 0;
    for (i, p) in points.iter().enumerate() {
        for q in &points[i + 1..] {
            let mid = ThroughputPoint::new(0.5 * (p.c0 + q.c0), 0.5 * (p.c1 + q.c1));
            worst = worst.max(mid.c1 - upper_height(&env, mid.c0));
            pairs += 1;
        }
    }
    ConvexityReport {
        max_violation: worst.max(0.0),
        pairs_checked: pairs,
        note: None,
    }
}
