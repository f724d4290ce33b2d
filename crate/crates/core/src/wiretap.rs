//! Confidential-only transmission (no common messages): optimal power control
//! with full CSI (both gains known) and with main-channel CSI only.
//!
//! Both solvers work with the normalized multiplier `nu = lambda / beta`. In
//! that form the per-state stationarity condition for full CSI reads
//!
//! ```text
//! x^(-beta) * (z_M - gamma z_E) / ((1 + mu z_M)(1 + gamma mu z_E)) = nu,
//! x = (1 + mu z_M) / (1 + gamma mu z_E)
//! ```
//!
//! whose left side is strictly decreasing in `mu` on the secure region and
//! equals the margin `z_M - gamma z_E` at `mu = 0`. Power is therefore
//! positive exactly when the margin exceeds `nu`. The same form stays valid at
//! `theta = 0`, where it reduces to the ergodic (opportunistic) condition.

use rayon::prelude::*;
use serde::Serialize;

use crate::effcap::{effective_capacity_weighted, ergodic_weighted};
use crate::error::{invalid, Error, Result};
use crate::fading::{classify, ChannelConfig, FadingState, SecrecyRegion};
use crate::policy::PowerPolicy;
use crate::quadrature::{pairwise_sum, StateGrid};
use crate::roots::{bisect, brent, Tolerance};

/// Per-state power: relative bracket width on `mu`.
pub const STATE_TOLERANCE: Tolerance = Tolerance::new(1e-12, 0.0, 200);
/// Outer multiplier search stops once `|E[mu] / avg_snr - 1|` is below this.
pub const BUDGET_TOLERANCE: f64 = 1e-10;
const OUTER_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CsiMode {
    /// Power adapted to both z_M and z_E.
    Full,
    /// Power adapted to z_M only.
    Main,
}

/// Decomposition of `E[2^(-beta R1)]` into the inactive mass, the mass of
/// active-but-insecure states, and the policy term over active secure states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThroughputTerms {
    pub inactive_mass: f64,
    pub insecure_active_mass: f64,
    pub policy_term: f64,
}

impl ThroughputTerms {
    /// `-(1/beta) log2` of the total, normalized by the grid mass.
    pub fn throughput(&self, beta: f64, total_weight: f64) -> f64 {
        let e = (self.inactive_mass + self.insecure_active_mass + self.policy_term) / total_weight;
        -e.log2() / beta
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WiretapSolution {
    pub mode: CsiMode,
    /// Transmit power at each grid point. Under main CSI this is `mu(z_M)`
    /// and is spent on insecure states too.
    pub power: Vec<f64>,
    /// Main CSI only: power per main-channel cell.
    pub main_power: Option<Vec<f64>>,
    /// Lagrange multiplier of the power constraint, `beta * nu`.
    pub lambda: f64,
    /// Full CSI: `nu = lambda / beta`, the margin above which power is positive.
    /// Main CSI: `alpha`, the main-channel gain above which power is positive.
    pub threshold: f64,
    /// Normalized multiplier `nu`.
    pub nu: f64,
    pub beta: f64,
    /// Effective secure throughput, bits/s/Hz (ergodic mean when `theta = 0`).
    pub throughput: f64,
    pub average_power: f64,
    pub outer_iterations: usize,
    pub terms: ThroughputTerms,
}

impl WiretapSolution {
    pub fn budget_residual(&self, avg_snr: f64) -> f64 {
        (self.average_power - avg_snr).abs() / avg_snr
    }

    /// `(mu0, mu1) = (0, power)` restricted to secure states, i.e. the power
    /// that actually carries confidential data.
    pub fn confidential_policy(&self, grid: &StateGrid) -> PowerPolicy {
        let mu1 = grid
            .points()
            .iter()
            .zip(&self.power)
            .map(|(p, &mu)| match classify(p.z, grid.gamma()) {
                SecrecyRegion::Secure => mu,
                SecrecyRegion::Insecure => 0.0,
            })
            .collect();
        PowerPolicy {
            mu0: vec![0.0; grid.len()],
            mu1,
        }
    }

    /// Secrecy rate at each grid point under this policy.
    pub fn rates(&self, grid: &StateGrid) -> Vec<f64> {
        grid.points()
            .iter()
            .zip(&self.power)
            .map(|(p, &mu)| crate::fading::secrecy_rate_unchecked(grid.gamma(), p.z, mu))
            .collect()
    }
}

#[inline]
fn log_ratio(mu: f64, a: f64, b: f64) -> f64 {
    (mu * a).ln_1p() - (mu * b).ln_1p()
}

/// Left side of the stationarity condition for one state, `a = z_M`,
/// `b = gamma z_E`, `margin = a - b > 0`.
#[inline]
fn marginal_gain(beta: f64, a: f64, b: f64, margin: f64, mu: f64) -> f64 {
    (-beta * log_ratio(mu, a, b)).exp() * margin / ((1.0 + mu * a) * (1.0 + mu * b))
}

/// Optimal full-CSI power at `z` for the normalized multiplier `nu > 0`.
pub(crate) fn full_csi_power(beta: f64, gamma: f64, z: FadingState, nu: f64) -> Result<f64> {
    let margin = z.margin(gamma);
    if margin <= nu {
        return Ok(0.0);
    }
    let (a, b) = (z.z_m, gamma * z.z_e);
    // marginal_gain(mu) <= margin / (1 + mu a), which drops below nu here
    let hi = 2.0 * (margin / nu - 1.0) / a;
    let root = brent(
        |mu| marginal_gain(beta, a, b, margin, mu) - nu,
        0.0,
        hi,
        STATE_TOLERANCE,
        0.0,
        "full-CSI state power",
    )
    .map_err(|e| with_state(e, z))?;
    Ok(root.x.max(f64::MIN_POSITIVE))
}

fn with_state(e: Error, z: FadingState) -> Error {
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

/// Optimal full-CSI power at one state for the Lagrange multiplier `lambda`.
pub fn full_csi_state_power(cfg: &ChannelConfig, z: FadingState, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid("lambda", format!("must be > 0, got {lambda}")));
    }
    if !(cfg.theta > 0.0) {
        return Err(Error::NonPositiveTheta(cfg.theta));
    }
    let beta = cfg.beta();
    full_csi_power(beta, cfg.gamma, z, lambda / beta)
}

/// Eavesdropper pieces `(z_E, mass)` of the secure part of a main-channel cell.
type Pieces = Vec<(f64, f64)>;

fn main_condition(beta: f64, gamma: f64, z_m: f64, pieces: &[(f64, f64)], mu: f64) -> f64 {
    let terms: Vec<f64> = pieces
        .iter()
        .map(|&(z_e, mass)| {
            let b = gamma * z_e;
            mass * marginal_gain(beta, z_m, b, z_m - b, mu)
        })
        .collect();
    pairwise_sum(&terms)
}

/// `∫_0^{z_M/gamma} (z_M - gamma z_E) p_E dz_E`, the zero-power value of the
/// main-CSI condition.
fn activation_integral(gamma: f64, z_m: f64, pieces: &[(f64, f64)]) -> f64 {
    let terms: Vec<f64> = pieces
        .iter()
        .map(|&(z_e, mass)| mass * (z_m - gamma * z_e))
        .collect();
    pairwise_sum(&terms)
}

fn main_csi_power(beta: f64, gamma: f64, z_m: f64, pieces: &[(f64, f64)], nu: f64) -> Result<f64> {
    let g0 = activation_integral(gamma, z_m, pieces);
    if g0 <= nu {
        return Ok(0.0);
    }
    let hi = 2.0 * (g0 / nu - 1.0) / z_m;
    let root = brent(
        |mu| main_condition(beta, gamma, z_m, pieces, mu) - nu,
        0.0,
        hi,
        STATE_TOLERANCE,
        0.0,
        "main-CSI power",
    )
    .map_err(|e| with_state(e, FadingState::new(z_m, f64::NAN)))?;
    Ok(root.x.max(f64::MIN_POSITIVE))
}

fn secure_pieces_at(grid: &StateGrid, z_m: f64) -> Pieces {
    let gamma = grid.gamma();
    grid.eve_axis()
        .pieces(z_m / gamma)
        .into_iter()
        .filter(|&(z_e, _, below)| {
            below && classify(FadingState::new(z_m, z_e), gamma) == SecrecyRegion::Secure
        })
        .map(|(z_e, mass, _)| (z_e, mass))
        .collect()
}

/// Optimal main-CSI power at main-channel gain `z_m` for the multiplier
/// `lambda`, with the inner integral over `z_E < z_m / gamma` taken on the
/// eavesdropper axis of `grid`.
pub fn main_csi_state_power(
    cfg: &ChannelConfig,
    grid: &StateGrid,
    z_m: f64,
    lambda: f64,
) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid("lambda", format!("must be > 0, got {lambda}")));
    }
    if !(cfg.theta > 0.0) {
        return Err(Error::NonPositiveTheta(cfg.theta));
    }
    let beta = cfg.beta();
    main_csi_power(
        beta,
        grid.gamma(),
        z_m,
        &secure_pieces_at(grid, z_m),
        lambda / beta,
    )
}

/// Main-channel gain above which main-CSI power is positive: the root of
/// `∫_0^{z/gamma} (z - gamma z_E) p_E dz_E = nu`.
pub fn main_csi_activation_threshold(grid: &StateGrid, nu: f64) -> Result<f64> {
    if !(nu > 0.0) {
        return Ok(0.0);
    }
    let gamma = grid.gamma();
    let g = |z: f64| activation_integral(gamma, z, &secure_pieces_at(grid, z)) - nu;
    let mut hi = nu.max(1.0);
    let mut steps = 0;
    while g(hi) <= 0.0 {
        hi *= 2.0;
        steps += 1;
        if steps > 200 {
            return Err(Error::BracketFailure {
                context: "main-CSI activation threshold".into(),
                reason: format!("integral below {nu} up to z_M = {hi}"),
            });
        }
    }
    Ok(bisect(
        g,
        0.0,
        hi,
        Tolerance::new(1e-14, 0.0, 400),
        "activation threshold",
    )?
    .x)
}

/// Searches `nu` so that `average_power(nu) == avg_snr`; `average_power` is
/// continuous and decreasing, zero at `nu >= nu_max`.
fn solve_multiplier<F>(
    avg_snr: f64,
    nu_max: f64,
    mut average_power: F,
    context: &str,
) -> Result<(f64, usize)>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(nu_max > 0.0) {
        return Err(Error::BracketFailure {
            context: context.to_string(),
            reason: "no state with positive secrecy margin".into(),
        });
    }
    let mut lo = nu_max * 0.5;
    let mut steps = 0;
    loop {
        if average_power(lo)? > avg_snr {
            break;
        }
        lo *= 0.25;
        steps += 1;
        if steps > 400 || lo == 0.0 {
            return Err(Error::BracketFailure {
                context: context.to_string(),
                reason: format!("average power stays below {avg_snr} down to nu = {lo}"),
            });
        }
    }
    // Brent on ln(nu); the closure cannot propagate errors, so stash the first.
    let mut failure = None;
    let root = brent(
        |ln_nu| match average_power(ln_nu.exp()) {
            Ok(p) => p / avg_snr - 1.0,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        lo.ln(),
        nu_max.ln(),
        Tolerance::new(0.0, 1e-15, OUTER_MAX_ITER),
        BUDGET_TOLERANCE,
        context,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let root = root?;
    Ok((root.x.exp(), root.iterations))
}

fn check_cfg(cfg: &ChannelConfig, grid: &StateGrid) -> Result<()> {
    cfg.validate()?;
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
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn finish(
    cfg: &ChannelConfig,
    grid: &StateGrid,
    mode: CsiMode,
    power: Vec<f64>,
    main_power: Option<Vec<f64>>,
    nu: f64,
    threshold: f64,
    outer_iterations: usize,
) -> Result<WiretapSolution> {
    let beta = cfg.beta();
    let gamma = cfg.gamma;
    let average_power = grid.expect_values(&power)?;

    let mut inactive = Vec::new();
    let mut insecure_active = Vec::new();
    let mut policy = Vec::new();
    let mut rates = Vec::with_capacity(grid.len());
    for (p, &mu) in grid.points().iter().zip(&power) {
        let secure = classify(p.z, gamma) == SecrecyRegion::Secure;
        if mu == 0.0 {
            inactive.push(p.weight);
        } else if !secure {
            insecure_active.push(p.weight);
        } else {
            let lr = log_ratio(mu, p.z.z_m, gamma * p.z.z_e);
            policy.push(p.weight * (-beta * lr).exp());
        }
        rates.push(if secure && mu > 0.0 {
            log_ratio(mu, p.z.z_m, gamma * p.z.z_e).max(0.0) / std::f64::consts::LN_2
        } else {
            0.0
        });
    }
    let terms = ThroughputTerms {
        inactive_mass: pairwise_sum(&inactive),
        insecure_active_mass: pairwise_sum(&insecure_active),
        policy_term: pairwise_sum(&policy),
    };
    let weights = grid.weights();
    let throughput = if cfg.is_ergodic() {
        ergodic_weighted(&weights, &rates)
    } else {
        effective_capacity_weighted(beta, &weights, &rates)
    };
    Ok(WiretapSolution {
        mode,
        power,
        main_power,
        lambda: beta * nu,
        threshold,
        nu,
        beta,
        throughput,
        average_power,
        outer_iterations,
        terms,
    })
}

/// Full-CSI optimum: per-state power from the stationarity condition, with the
/// multiplier chosen so the average power constraint holds with equality.
///
/// `theta = 0` is accepted and yields the ergodic optimum.
pub fn solve_full_csi(cfg: &ChannelConfig, grid: &StateGrid) -> Result<WiretapSolution> {
    check_cfg(cfg, grid)?;
    let beta = cfg.beta();
    let gamma = cfg.gamma;
    let powers_at = |nu: f64| -> Result<Vec<f64>> {
        grid.points()
            .par_iter()
            .map(|p| {
                if p.weight > 0.0 {
                    full_csi_power(beta, gamma, p.z, nu)
                } else {
                    Ok(0.0)
                }
            })
            .collect()
    };
    let nu_max = grid
        .points()
        .iter()
        .filter(|p| p.weight > 0.0)
        .map(|p| p.z.margin(gamma))
        .fold(0.0, f64::max);
    let (nu, iterations) = solve_multiplier(
        cfg.avg_snr,
        nu_max,
        |nu| grid.expect_values(&powers_at(nu)?),
        "full-CSI multiplier",
    )?;
    let power = powers_at(nu)?;
    finish(cfg, grid, CsiMode::Full, power, None, nu, nu, iterations)
}

/// Main-CSI optimum: one power level per main-channel cell, solving the
/// integral condition over `z_E < z_M / gamma`.
pub fn solve_main_csi(cfg: &ChannelConfig, grid: &StateGrid) -> Result<WiretapSolution> {
    check_cfg(cfg, grid)?;
    if !grid.is_product_form() {
        return Err(Error::UnsupportedDistribution(
            "main-CSI power control needs independent marginals".into(),
        ));
    }
    let beta = cfg.beta();
    let gamma = cfg.gamma;
    let cells: Vec<(f64, f64, Pieces)> = (0..grid.main_cell_count())
        .map(|i| {
            let range = grid.main_cell_range(i);
            let pts = &grid.points()[range];
            let z_m = pts[0].z.z_m;
            let mass = pairwise_sum(&pts.iter().map(|p| p.weight).collect::<Vec<_>>());
            let pieces = pts
                .iter()
                .filter(|p| classify(p.z, gamma) == SecrecyRegion::Secure)
                .map(|p| (p.z.z_e, p.eve_mass))
                .collect();
            (z_m, mass, pieces)
        })
        .collect();
    let cell_powers = |nu: f64| -> Result<Vec<f64>> {
        cells
            .par_iter()
            .map(|(z_m, mass, pieces)| {
                if *mass > 0.0 {
                    main_csi_power(beta, gamma, *z_m, pieces, nu)
                } else {
                    Ok(0.0)
                }
            })
            .collect()
    };
    let nu_max = cells
        .iter()
        .filter(|c| c.1 > 0.0)
        .map(|(z_m, _, pieces)| activation_integral(gamma, *z_m, pieces))
        .fold(0.0, f64::max);
    let (nu, iterations) = solve_multiplier(
        cfg.avg_snr,
        nu_max,
        |nu| {
            let powers = cell_powers(nu)?;
            let terms: Vec<f64> = cells.iter().zip(&powers).map(|(c, mu)| c.1 * mu).collect();
            Ok(pairwise_sum(&terms))
        },
        "main-CSI multiplier",
    )?;
    let main_power = cell_powers(nu)?;
    let power = grid
        .points()
        .iter()
        .map(|p| main_power[p.main_cell])
        .collect();
    let alpha = main_csi_activation_threshold(grid, nu)?;
    finish(
        cfg,
        grid,
        CsiMode::Main,
        power,
        Some(main_power),
        nu,
        alpha,
        iterations,
    )
}

pub fn solve(cfg: &ChannelConfig, grid: &StateGrid, mode: CsiMode) -> Result<WiretapSolution> {
    match mode {
        CsiMode::Full => solve_full_csi(cfg, grid),
        CsiMode::Main => solve_main_csi(cfg, grid),
    }
}
