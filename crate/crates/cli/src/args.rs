use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "secrecy-effcap",
    version,
    about = "Power control and effective secure throughput for fading broadcast channels with confidential messages"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Trace the (common, confidential) effective throughput region boundary.
    Region(RegionArgs),
    /// Confidential-only throughput with full and main-channel CSI over a sweep.
    Wiretap(WiretapArgs),
    /// Dump the optimal power allocation over the state grid.
    Policy(PolicyArgs),
    /// Simulate the transmit buffer and fit the queue-tail decay rate.
    Simulate(SimulateArgs),
}

/// Physical and discretization parameters shared by every command.
#[derive(Debug, Clone, Args, Serialize)]
pub struct ChannelArgs {
    /// QoS exponent(s) in 1/bit; comma-separated for a sweep. 0 = ergodic.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0.01",
        allow_hyphen_values = true
    )]
    pub theta: Vec<f64>,
    /// Average SNR in dB; comma-separated for a sweep.
    #[arg(
        long = "snr-db",
        value_delimiter = ',',
        default_value = "0",
        allow_hyphen_values = true
    )]
    pub snr_db: Vec<f64>,
    /// Noise power ratio N1/N2.
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Block duration in milliseconds.
    #[arg(long = "frame-ms", default_value_t = 2.0)]
    pub frame_ms: f64,
    /// Bandwidth in Hz.
    #[arg(long = "bandwidth-hz", default_value_t = 1e5)]
    pub bandwidth_hz: f64,
    /// Cells per fading axis.
    #[arg(long = "grid-n", default_value_t = 200)]
    pub grid_n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; CSV output also gets a JSON sidecar next to it.
    /// Writes to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Full,
    Main,
    Both,
}

#[derive(Debug, Args)]
pub struct RegionArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    /// Number of weights lambda0 in [0, 1] (at least 3).
    #[arg(long, default_value_t = 21)]
    pub points: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct WiretapArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[arg(long, value_enum, default_value_t = ModeArg::Both)]
    pub mode: ModeArg,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct PolicyArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    /// Weight of the common message; selects the broadcast problem with
    /// lambda1 = 1 - lambda0.
    #[arg(long, conflicts_with = "mode")]
    pub lambda0: Option<f64>,
    /// Confidential-only policy with full or main-channel CSI (default full).
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[arg(long, default_value_t = 10_000_000)]
    pub blocks: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Arrival rate as a multiple of T * B * C(theta) under the full-CSI policy.
    #[arg(long = "arrival-ratio", default_value_t = 1.0)]
    pub arrival_ratio: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}
