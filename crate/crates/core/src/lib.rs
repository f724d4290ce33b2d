//! Power control and effective secure throughput for block-fading broadcast
//! channels with confidential messages under statistical QoS constraints.
//!
//! The joint fading law of the legitimate and eavesdropper channels is
//! discretized in [`quadrature`] and effective capacities are evaluated in
//! [`effcap`]. The power allocation problems live in [`wiretap`] (one
//! confidential message) and [`bcc`] (a common plus a confidential message).

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` deliberately rejects NaN

pub mod bcc;
pub mod effcap;
pub mod error;
pub mod fading;
pub mod oracles;
pub mod policy;
pub mod quadrature;
pub mod queue;
pub mod roots;
pub mod wiretap;

pub use bcc::{
    check_convexity, solve_pc, state_power_pc, trace_region, ConvexityReport, PCSolution, PCState,
    RegionBoundary,
};
pub use effcap::{effective_capacity, throughput, RateField, RateKind, ThroughputPoint};
pub use error::{Error, Result};
pub use fading::{
    classify, common_rate, secrecy_rate, ChannelConfig, FadingDistribution, FadingState, Marginal,
    SecrecyRegion,
};
pub use policy::PowerPolicy;
pub use quadrature::{build_grid, grid_from_states, StateGrid};
pub use queue::{estimate_decay, simulate_queue, SimConfig, TailReport};
pub use wiretap::{solve_full_csi, solve_main_csi, CsiMode, WiretapSolution};
