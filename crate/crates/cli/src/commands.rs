use secrecy_effcap::bcc::{self, check_convexity, trace_region};
use secrecy_effcap::wiretap::{self, CsiMode, WiretapSolution};
use secrecy_effcap::{
    build_grid, secrecy_rate, simulate_queue, ChannelConfig, FadingDistribution, FadingState,
    SimConfig, StateGrid,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{ChannelArgs, ModeArg, PolicyArgs, RegionArgs, SimulateArgs, WiretapArgs};
use crate::error::{validation, CliError, CliResult};
use crate::output::{emit, Table};

/// Fully resolved physical configuration, echoed into every output.
#[derive(Debug, Serialize)]
struct Resolved {
    theta: f64,
    snr_db: f64,
    avg_snr: f64,
    gamma: f64,
    frame_t_s: f64,
    bandwidth_hz: f64,
    beta: f64,
    grid_n: usize,
    fading: &'static str,
}

fn config(ch: &ChannelArgs, theta: f64, snr_db: f64) -> CliResult<ChannelConfig> {
    if !(ch.frame_ms > 0.0) {
        return Err(validation(format!(
            "--frame-ms must be > 0, got {}",
            ch.frame_ms
        )));
    }
    Ok(ChannelConfig::from_snr_db(ch.gamma, snr_db, theta)?
        .with_frame(ch.frame_ms * 1e-3, ch.bandwidth_hz)?)
}

fn resolved(ch: &ChannelArgs, cfg: &ChannelConfig, snr_db: f64) -> Resolved {
    Resolved {
        theta: cfg.theta,
        snr_db,
        avg_snr: cfg.avg_snr,
        gamma: cfg.gamma,
        frame_t_s: cfg.frame_t,
        bandwidth_hz: cfg.bandwidth_b,
        beta: cfg.beta(),
        grid_n: ch.grid_n,
        fading: "rayleigh, E[z_M] = E[z_E] = 1",
    }
}

fn single(values: &[f64], flag: &str) -> CliResult<f64> {
    match values {
        [v] => Ok(*v),
        _ => Err(validation(format!(
            "{flag} takes a single value for this command"
        ))),
    }
}

fn grid(ch: &ChannelArgs) -> CliResult<StateGrid> {
    let dist = FadingDistribution::rayleigh(1.0, 1.0)?;
    Ok(build_grid(&dist, ch.grid_n, ch.gamma)?)
}

pub fn region(args: &RegionArgs) -> CliResult<()> {
    if args.points < 3 {
        return Err(validation(format!(
            "--points must be >= 3, got {}",
            args.points
        )));
    }
    let ch = &args.channel;
    let snr_db = single(&ch.snr_db, "--snr-db")?;
    let cfg = config(ch, single(&ch.theta, "--theta")?, snr_db)?;
    let grid = grid(ch)?;
    let boundary = trace_region(&cfg, &grid, args.points)?;

    let mut table = Table::new(&["lambda0", "C0_bits_per_s_per_Hz", "C1_bits_per_s_per_Hz"]);
    for p in &boundary.points {
        let (c0, c1) = p.point.map_or((f64::NAN, f64::NAN), |t| (t.c0, t.c1));
        table.push(vec![p.lambda0, c0, c1]);
    }
    let failures = boundary.failures();
    let meta = json!({
        "command": "region",
        "config": resolved(ch, &cfg, snr_db),
        "points": args.points,
        "diagnostics": boundary.points.iter().map(|p| json!({
            "lambda0": p.lambda0,
            "phi_iterations": p.phi_iterations,
            "average_power": p.average_power,
            "budget_residual": (p.average_power - cfg.avg_snr).abs() / cfg.avg_snr,
            "error": p.error,
        })).collect::<Vec<_>>(),
        "convexity": check_convexity(&boundary.valid_points()),
        "failures": failures,
    });
    emit(&args.output, &table, &meta)?;
    if failures.is_empty() {
        Ok(())
    } else {
        let at: Vec<String> = failures
            .iter()
            .map(|(l, _)| format!("lambda0 = {l}"))
            .collect();
        Err(CliError::PartialFailure(at.join(", ")))
    }
}

fn solution_summary(sol: &WiretapSolution, avg_snr: f64) -> Value {
    json!({
        "throughput": sol.throughput,
        "lambda": sol.lambda,
        "threshold": sol.threshold,
        "average_power": sol.average_power,
        "budget_residual": sol.budget_residual(avg_snr),
        "outer_iterations": sol.outer_iterations,
        "terms": sol.terms,
    })
}

pub fn wiretap(args: &WiretapArgs) -> CliResult<()> {
    let ch = &args.channel;
    let sweep_snr = match (ch.theta.len() > 1, ch.snr_db.len() > 1) {
        (true, true) => return Err(validation("sweep either --theta or --snr-db, not both")),
        (_, sweep_snr) => sweep_snr,
    };
    let grid = grid(ch)?;
    let (want_full, want_main) = match args.mode {
        ModeArg::Full => (true, false),
        ModeArg::Main => (false, true),
        ModeArg::Both => (true, true),
    };
    let values = if sweep_snr { &ch.snr_db } else { &ch.theta };
    let mut table = Table::new(&["sweep_value", "throughput_full", "throughput_main"]);
    let mut rows = Vec::new();
    for &v in values {
        let (theta, snr_db) = if sweep_snr {
            (ch.theta[0], v)
        } else {
            (v, ch.snr_db[0])
        };
        let cfg = config(ch, theta, snr_db)?;
        let full = want_full
            .then(|| wiretap::solve_full_csi(&cfg, &grid))
            .transpose()?;
        let main = want_main
            .then(|| wiretap::solve_main_csi(&cfg, &grid))
            .transpose()?;
        table.push(vec![
            v,
            full.as_ref().map_or(f64::NAN, |s| s.throughput),
            main.as_ref().map_or(f64::NAN, |s| s.throughput),
        ]);
        rows.push(json!({
            "config": resolved(ch, &cfg, snr_db),
            "full": full.as_ref().map(|s| solution_summary(s, cfg.avg_snr)),
            "main": main.as_ref().map(|s| solution_summary(s, cfg.avg_snr)),
        }));
    }
    let meta = json!({
        "command": "wiretap",
        "sweep": if sweep_snr { "snr_db" } else { "theta" },
        "mode": args.mode,
        "rows": rows,
    });
    emit(&args.output, &table, &meta)
}

pub fn policy(args: &PolicyArgs) -> CliResult<()> {
    let ch = &args.channel;
    let snr_db = single(&ch.snr_db, "--snr-db")?;
    let cfg = config(ch, single(&ch.theta, "--theta")?, snr_db)?;
    let grid = grid(ch)?;
    let (policy, diagnostics) = match args.lambda0 {
        Some(l0) => {
            if !(0.0..=1.0).contains(&l0) {
                return Err(validation(format!(
                    "--lambda0 must lie in [0, 1], got {l0}"
                )));
            }
            let sol = bcc::solve_pc(&cfg, &grid, l0, 1.0 - l0)?;
            let d = json!({
                "problem": "broadcast",
                "lambda0": l0,
                "point": sol.point,
                "multipliers": sol.state,
                "alpha1": sol.state.alpha1(),
                "alpha2": sol.state.alpha2(),
                "average_power": sol.average_power,
                "phi_iterations": sol.phi_iterations,
                "kkt_residual": bcc::kkt_residual(&cfg, &grid, &sol.state, &sol.policy),
            });
            (sol.policy, d)
        }
        None => {
            let mode = match args.mode.unwrap_or(ModeArg::Full) {
                ModeArg::Full => CsiMode::Full,
                ModeArg::Main => CsiMode::Main,
                ModeArg::Both => return Err(validation("--mode must be full or main here")),
            };
            let sol = wiretap::solve(&cfg, &grid, mode)?;
            let d = json!({
                "problem": "wiretap",
                "mode": mode,
                "solution": solution_summary(&sol, cfg.avg_snr),
            });
            (sol.confidential_policy(&grid), d)
        }
    };
    let mut table = Table::new(&["z_M", "z_E", "mu0", "mu1"]);
    for (i, p) in grid.points().iter().enumerate() {
        table.push(vec![p.z.z_m, p.z.z_e, policy.mu0[i], policy.mu1[i]]);
    }
    let meta = json!({
        "command": "policy",
        "config": resolved(ch, &cfg, snr_db),
        "diagnostics": diagnostics,
        "note": "one row per grid point; grid points carry unequal probability weights",
    });
    emit(&args.output, &table, &meta)
}

pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    let ch = &args.channel;
    let snr_db = single(&ch.snr_db, "--snr-db")?;
    let theta = single(&ch.theta, "--theta")?;
    if !(theta > 0.0) {
        return Err(validation("simulation needs --theta > 0"));
    }
    if !(args.arrival_ratio > 0.0 && args.arrival_ratio.is_finite()) {
        return Err(validation("--arrival-ratio must be > 0"));
    }
    let cfg = config(ch, theta, snr_db)?;
    let grid = grid(ch)?;
    let sol = wiretap::solve_full_csi(&cfg, &grid)?;
    let arrival = args.arrival_ratio * cfg.symbols_per_block() * sol.throughput;
    let sim = SimConfig::new(args.blocks, args.seed, arrival)?;
    let lambda = sol.lambda;
    let rate = |z: FadingState| {
        wiretap::full_csi_state_power(&cfg, z, lambda)
            .and_then(|mu| secrecy_rate(&cfg, z, mu))
            .unwrap_or(f64::NAN)
    };
    let dist = FadingDistribution::rayleigh(1.0, 1.0)?;
    let report = simulate_queue(&cfg, &dist, rate, &sim)?;
    let decay = report.fit.as_ref().map(|f| f.decay);

    let mut table = Table::new(&["level_bits", "probability", "count"]);
    if let Some(fit) = &report.fit {
        for p in &fit.points {
            table.push(vec![p.level, p.probability, p.count as f64]);
        }
    }
    let meta = json!({
        "command": "simulate",
        "config": resolved(ch, &cfg, snr_db),
        "policy": "full CSI",
        "effective_capacity": sol.throughput,
        "arrival_ratio": args.arrival_ratio,
        "arrival_bits_per_block": arrival,
        "target_theta": theta,
        "fitted_decay": decay,
        "relative_error": decay.map(|d| (d - theta).abs() / theta),
        "report": report,
    });
    emit(&args.output, &table, &meta)?;
    if report.unstable {
        return Err(CliError::Unstable(format!(
            "arrival {arrival:.6} bits/block exceeds mean service {:.6}",
            report.mean_service
        )));
    }
    Ok(())
}
