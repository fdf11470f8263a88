//! Reference designs the proposed optimizer is compared against, and a
//! single entry point that designs a waypoint under any strategy.

use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::waypoint::{design_downlink, design_uplink, BlockPlan, DownlinkDesign, UplinkDesign, WaypointProblem};
use super::SolverOptions;
use crate::error::OptimizerError;
use crate::linalg::{cnorm, CVector};
use crate::link::{BeamformerSet, PowerAllocation, WaypointLatency};
use crate::rng::{substream_rng, Substream};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Proposed,
    EqualPower,
    RandomBeam,
    Omni,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::Proposed,
        Strategy::EqualPower,
        Strategy::RandomBeam,
        Strategy::Omni,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Proposed => "proposed",
            Strategy::EqualPower => "equal-power",
            Strategy::RandomBeam => "random-beam",
            Strategy::Omni => "omni",
        }
    }
}

/// `P_dl,k = P_comp,k = P_j / (2K)`.
pub fn baseline_equal_power<T: Real>(k: usize, budget: T) -> PowerAllocation<T> {
    PowerAllocation::equal_split(k, budget)
}

/// Uniform draw from the unit sphere of `C^dim`.
pub fn random_unit_vector<T: Real, R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CVector<T> {
    loop {
        let v: CVector<T> = (0..dim)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex::new(T::of(re), T::of(im))
            })
            .collect();
        let n = cnorm(&v);
        if n > T::zero() {
            return v.into_iter().map(|c| c / n).collect();
        }
    }
}

/// Independent uniform beams for every link of a waypoint with `k`
/// turbines, an `n`-element FBS and `m`-element turbines.
pub fn baseline_random_beams<T: Real>(seed: u64, waypoint_id: u32, k: usize, n: usize, m: usize) -> BeamformerSet<T> {
    let mut rng = substream_rng(seed, Substream::Baselines, waypoint_id as u64);
    let mut draw = |dim: usize| -> Vec<CVector<T>> { (0..k).map(|_| random_unit_vector(&mut rng, dim)).collect() };
    BeamformerSet {
        fbs_uplink: draw(n),
        turbine_uplink: draw(m),
        fbs_downlink: draw(n),
        turbine_downlink: draw(m),
    }
}

/// `k` copies of the uniform unit vector `1/√m`.
pub fn omni_beams<T: Real>(k: usize, m: usize) -> Vec<CVector<T>> {
    let e = Complex::new(T::one() / T::of_usize(m).sqrt(), T::zero());
    vec![vec![e; m]; k]
}

/// Uplink and downlink designs of one waypoint under one strategy.
#[derive(Clone, Debug, PartialEq)]
pub struct WaypointDesign<T> {
    pub waypoint_id: u32,
    pub strategy: Strategy,
    pub uplink: UplinkDesign<T>,
    pub downlink: DownlinkDesign<T>,
    /// Every uplink and downlink SINR meets the floor. Only the random-beam
    /// baseline can return false.
    pub floor_met: bool,
}

impl<T: Real> WaypointDesign<T> {
    pub fn beams(&self) -> BeamformerSet<T> {
        BeamformerSet {
            fbs_uplink: self.uplink.fbs.clone(),
            turbine_uplink: self.uplink.turbine.clone(),
            fbs_downlink: self.downlink.fbs.clone(),
            turbine_downlink: self.downlink.turbine.clone(),
        }
    }

    pub fn latency(&self, connect: T) -> WaypointLatency<T> {
        WaypointLatency {
            waypoint_id: self.waypoint_id,
            connect,
            uplink: self.uplink.latency.seconds,
            compute: self.downlink.compute,
            downlink: self.downlink.transmission.seconds,
        }
    }
}

/// Equal split with both beam collections optimized.
pub fn baseline_equal_power_design<T: Real>(
    problem: &WaypointProblem<T>,
    options: &SolverOptions,
) -> Result<WaypointDesign<T>, OptimizerError> {
    let uplink = design_uplink(problem, BlockPlan::FULL, options)?;
    let split = baseline_equal_power(problem.len(), problem.power_budget);
    let downlink = design_downlink(problem, BlockPlan::FULL, Some(split), options)?;
    Ok(finish(problem, Strategy::EqualPower, uplink, downlink))
}

/// Turbine beams fixed to `1/√M`; FBS beams and the power split optimized.
pub fn baseline_omni_turbine<T: Real>(
    problem: &WaypointProblem<T>,
    options: &SolverOptions,
) -> Result<WaypointDesign<T>, OptimizerError> {
    let m = problem.uplink[0].cols();
    let mut fixed = problem.clone();
    fixed.init_turbine = omni_beams(problem.len(), m);
    let plan = BlockPlan {
        turbine_beams: false,
        ..BlockPlan::FULL
    };
    let uplink = design_uplink(&fixed, plan, options)?;
    let downlink = design_downlink(&fixed, plan, None, options)?;
    Ok(finish(problem, Strategy::Omni, uplink, downlink))
}

/// Random beams on both links. The uplink is only evaluated; the downlink
/// power split is still optimized, under the SINR floor when that is
/// attainable and without it otherwise.
pub fn baseline_random_beams_design<T: Real>(
    problem: &WaypointProblem<T>,
    seed: u64,
    options: &SolverOptions,
) -> Result<WaypointDesign<T>, OptimizerError> {
    let n = problem.uplink[0].rows();
    let m = problem.uplink[0].cols();
    let beams = baseline_random_beams(seed, problem.waypoint_id, problem.len(), n, m);
    let fixed = BlockPlan {
        fbs_beams: false,
        turbine_beams: false,
        power: false,
        enforce_floor: false,
    };
    let mut up = problem.clone();
    up.init_fbs = beams.fbs_uplink;
    up.init_turbine = beams.turbine_uplink;
    let uplink = design_uplink(&up, fixed, options)?;

    let mut down = problem.clone();
    down.init_fbs = beams.fbs_downlink;
    down.init_turbine = beams.turbine_downlink;
    let power_only = BlockPlan {
        power: true,
        enforce_floor: true,
        ..fixed
    };
    let downlink = match design_downlink(&down, power_only, None, options) {
        Err(OptimizerError::Infeasible { .. }) => design_downlink(
            &down,
            BlockPlan {
                enforce_floor: false,
                ..power_only
            },
            None,
            options,
        )?,
        other => other?,
    };
    Ok(finish(problem, Strategy::RandomBeam, uplink, downlink))
}

fn finish<T: Real>(
    problem: &WaypointProblem<T>,
    strategy: Strategy,
    uplink: UplinkDesign<T>,
    downlink: DownlinkDesign<T>,
) -> WaypointDesign<T> {
    WaypointDesign {
        waypoint_id: problem.waypoint_id,
        strategy,
        floor_met: uplink.feasible && downlink.feasible,
        uplink,
        downlink,
    }
}

/// Designs one waypoint under `strategy`. `seed` only affects the
/// random-beam baseline.
pub fn design_waypoint<T: Real>(
    problem: &WaypointProblem<T>,
    strategy: Strategy,
    seed: u64,
    options: &SolverOptions,
) -> Result<WaypointDesign<T>, OptimizerError> {
    match strategy {
        Strategy::Proposed => {
            let uplink = design_uplink(problem, BlockPlan::FULL, options)?;
            let downlink = design_downlink(problem, BlockPlan::FULL, None, options)?;
            Ok(finish(problem, strategy, uplink, downlink))
        }
        Strategy::EqualPower => baseline_equal_power_design(problem, options),
        Strategy::RandomBeam => baseline_random_beams_design(problem, seed, options),
        Strategy::Omni => baseline_omni_turbine(problem, options),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_split_examples() {
        let a = baseline_equal_power(1, 10.0);
        assert_eq!((a.downlink[0], a.compute[0]), (5.0, 5.0));
        let b = baseline_equal_power(5, 10.0);
        assert!(b.downlink.iter().chain(&b.compute).all(|p| *p == 1.0));
        assert_eq!(b.total(), 10.0);
    }

    #[test]
    fn random_beams_are_unit_and_reproducible() {
        let a = baseline_random_beams::<f64>(3, 1, 4, 16, 9);
        let b = baseline_random_beams::<f64>(3, 1, 4, 16, 9);
        assert_eq!(a, b);
        assert!((a.max_norm() - 1.0).abs() < 1e-12);
        for v in a.fbs_uplink.iter().chain(&a.turbine_downlink) {
            assert!((cnorm(v) - 1.0).abs() < 1e-12);
        }
        assert_ne!(a, baseline_random_beams::<f64>(4, 1, 4, 16, 9));
    }

    #[test]
    fn omni_examples() {
        let v = omni_beams::<f64>(2, 9);
        assert!((cnorm(&v[0]) - 1.0).abs() < 1e-15);
        assert_eq!(omni_beams::<f64>(1, 1)[0], vec![Complex::new(1.0, 0.0)]);
    }
}
