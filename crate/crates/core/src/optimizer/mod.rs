//! Per-waypoint joint beamforming and power design by alternating
//! optimization, plus the three baselines.
//!
//! Each block update maximizes a quadratic-transform surrogate of the rates
//! subject to linearized SINR floors, solved by the interior-point method in
//! [`convex`]. Uplink rounds update the turbine beams then the FBS beams;
//! downlink rounds update the FBS beams, the turbine beams, then the power
//! split. The FP coefficients are refreshed immediately before each block.

mod baseline;
mod blocks;
pub mod convex;
pub mod fp;
mod newton;
mod waypoint;

use serde::{Deserialize, Serialize};

use crate::error::ScenarioError;
use crate::scalar::Real;

pub use baseline::{
    baseline_equal_power, baseline_equal_power_design, baseline_omni_turbine, baseline_random_beams,
    baseline_random_beams_design, design_waypoint, omni_beams, random_unit_vector, Strategy, WaypointDesign,
};
pub use convex::{convex_subproblem_solve, BarrierOptions};
pub use fp::{
    alpha_update, beta_update, surrogate_sinr, surrogate_sinr_downlink, taylor_sinr_constraint, TaylorConstraint,
};
pub use waypoint::{
    design_downlink, design_downlink_from, design_uplink, solve_downlink_waypoint, solve_uplink_waypoint, BlockPlan, DownlinkDesign,
    UplinkDesign, WaypointProblem,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub max_outer_iterations: usize,
    /// Relative objective change between rounds that ends the AO loop.
    pub convergence_tol: f64,
    /// Relative duality-gap target of each block solve.
    pub inner_subproblem_tol: f64,
    pub max_newton_iterations: usize,
    /// Armijo sufficient-increase fraction for the Newton line search.
    pub armijo: f64,
    /// Backtracking shrink factor.
    pub backtrack: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_outer_iterations: 50,
            convergence_tol: 1e-7,
            inner_subproblem_tol: 1e-9,
            max_newton_iterations: 2000,
            armijo: 1e-4,
            backtrack: 0.5,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |field: &str, reason: &str| Err(ScenarioError::field(&format!("solver.{field}"), reason));
        if self.max_outer_iterations == 0 {
            return bad("max_outer_iterations", "must be ≥ 1");
        }
        if !(self.convergence_tol > 0.0) {
            return bad("convergence_tol", "must be > 0");
        }
        if !(self.inner_subproblem_tol > 0.0) {
            return bad("inner_subproblem_tol", "must be > 0");
        }
        if self.max_newton_iterations == 0 {
            return bad("max_newton_iterations", "must be ≥ 1");
        }
        if !(self.armijo > 0.0 && self.armijo < 0.5) {
            return bad("armijo", "must lie in (0, 0.5)");
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return bad("backtrack", "must lie in (0, 1)");
        }
        Ok(())
    }

    pub fn barrier<T: Real>(&self) -> BarrierOptions<T> {
        BarrierOptions {
            tol: T::of(self.inner_subproblem_tol),
            max_newton_iterations: self.max_newton_iterations,
            armijo: T::of(self.armijo),
            backtrack: T::of(self.backtrack),
            ..BarrierOptions::default()
        }
    }
}

/// Progress record of one AO run.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct FpState<T> {
    /// Completed outer rounds.
    pub iterations: usize,
    /// Uplink FP coefficients used by the last block.
    pub alpha: Vec<T>,
    /// Downlink FP coefficients used by the last block.
    pub beta: Vec<T>,
    /// Uplink rate floor (1/s) of the last beam block.
    pub tau: Option<T>,
    /// Downlink rate floor (1/s) of the last block.
    pub gamma: Option<T>,
    /// Objective at the start and after every round.
    pub objective_trace: Vec<T>,
    /// Largest relative SINR-floor shortfall at the same points.
    pub violation_trace: Vec<T>,
    /// Block names in update order within a round.
    pub block_order: Vec<&'static str>,
    /// Block solves that hit the Newton budget.
    pub unconverged_subproblems: usize,
    /// Block candidates discarded by the accept rule.
    pub rejected_updates: usize,
    pub converged: bool,
}

impl<T: Real> FpState<T> {
    /// Index of the first feasible trace entry.
    pub fn first_feasible(&self) -> Option<usize> {
        self.violation_trace.iter().position(|v| *v <= T::zero())
    }
}
