//! Latency model and joint beamforming / power-allocation optimizer for a
//! flying base station (FBS) that tours offshore wind turbines.
//!
//! The FBS flies a shortest route over its waypoints. At each waypoint it
//! admits the assigned turbines, receives their uplink tasks, computes, and
//! returns results on the downlink. Total latency is flight time plus the
//! per-waypoint access, uplink, compute and downlink times.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common case.

pub mod access;
pub mod channel;
pub mod error;
pub mod linalg;
pub mod link;
pub mod optimizer;
pub mod pipeline;
pub mod rng;
pub mod routing;
pub mod scalar;
pub mod scenario;

pub use error::Error;
pub use optimizer::{SolverOptions, Strategy};
pub use pipeline::{access_compare, compare_baselines, run_pipeline, sweep_power};
pub use scalar::Real;
pub use scenario::{load_scenario, ScenarioConfig};

pub type ChannelMatrix = channel::ChannelMatrix<f64>;
pub type WaypointChannels = channel::WaypointChannels<f64>;
pub type WaypointProblem = optimizer::WaypointProblem<f64>;
pub type WaypointDesign = optimizer::WaypointDesign<f64>;
pub type LatencyBreakdown = link::LatencyBreakdown<f64>;
pub type PipelineRun = pipeline::PipelineRun<f64>;
pub type Route = routing::Route<f64>;

pub type ChannelMatrixF32 = channel::ChannelMatrix<f32>;
pub type WaypointProblemF32 = optimizer::WaypointProblem<f32>;
pub type LatencyBreakdownF32 = link::LatencyBreakdown<f32>;
