//! End-to-end evaluation: route, access, per-waypoint design and latency
//! aggregation, plus the power sweep and the comparison tables.

use rayon::prelude::*;
use serde::Serialize;

use crate::access::waypoint_connection_time;
use crate::channel::WaypointChannels;
use crate::error::Error;
use crate::link::{total_latency, LatencyBreakdown, WaypointLatency};
use crate::optimizer::{
    design_downlink, design_downlink_from, design_uplink, design_waypoint, BlockPlan, Strategy, WaypointDesign,
    WaypointProblem,
};
use crate::routing::{plan_scenario_route, Route};
use crate::scalar::{dbm_to_watts, Real};
use crate::scenario::{AccessProcedure, ScenarioConfig, Waypoint};

#[derive(Clone, Debug, PartialEq)]
pub struct WaypointRun<T> {
    pub waypoint_id: u32,
    pub connect: T,
    /// `None` for a waypoint without turbines.
    pub design: Option<WaypointDesign<T>>,
}

impl<T: Real> WaypointRun<T> {
    pub fn latency(&self) -> WaypointLatency<T> {
        match &self.design {
            Some(d) => d.latency(self.connect),
            None => WaypointLatency {
                waypoint_id: self.waypoint_id,
                connect: self.connect,
                uplink: T::zero(),
                compute: T::zero(),
                downlink: T::zero(),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineRun<T> {
    pub strategy: Strategy,
    pub route: Route<T>,
    /// Ordered by waypoint id.
    pub waypoints: Vec<WaypointRun<T>>,
    pub breakdown: LatencyBreakdown<T>,
}

impl<T: Real> PipelineRun<T> {
    /// Every designed link meets the SINR floor.
    pub fn floor_met(&self) -> bool {
        self.waypoints
            .iter()
            .filter_map(|w| w.design.as_ref())
            .all(|d| d.floor_met)
    }

    /// AO traces as CSV: one row per (waypoint, direction, iteration).
    pub fn convergence_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["waypoint_id", "direction", "iteration", "objective", "violation"])
            .unwrap();
        w.write_record(["", "", "", "s", ""]).unwrap();
        for run in &self.waypoints {
            let Some(d) = &run.design else { continue };
            for (direction, state) in [("uplink", &d.uplink.state), ("downlink", &d.downlink.state)] {
                for (i, (obj, vio)) in state.objective_trace.iter().zip(&state.violation_trace).enumerate() {
                    w.write_record([
                        run.waypoint_id.to_string(),
                        direction.to_string(),
                        i.to_string(),
                        obj.as_f64().to_string(),
                        vio.as_f64().to_string(),
                    ])
                    .unwrap();
                }
            }
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }
}

fn sorted_waypoints(config: &ScenarioConfig) -> Vec<&Waypoint> {
    let mut wps: Vec<&Waypoint> = config.waypoints.iter().collect();
    wps.sort_by_key(|w| w.id);
    wps
}

fn problem_for<T: Real>(config: &ScenarioConfig, waypoint: &Waypoint) -> Result<WaypointProblem<T>, Error> {
    let channels = WaypointChannels::<T>::build(config, waypoint, config.rng_seed)?;
    Ok(WaypointProblem::from_channels(config, waypoint, &channels))
}

/// Runs the full pipeline under `strategy`. Waypoints are designed in
/// parallel; results do not depend on the thread count.
pub fn run_pipeline<T: Real>(config: &ScenarioConfig, strategy: Strategy) -> Result<PipelineRun<T>, Error> {
    config.validate()?;
    let route = plan_scenario_route::<T>(config)?;
    let waypoints = sorted_waypoints(config)
        .into_par_iter()
        .map(|wp| -> Result<WaypointRun<T>, Error> {
            let connect = waypoint_connection_time(config, wp, config.access_procedure);
            let design = if wp.assigned_turbines.is_empty() {
                None
            } else {
                let problem = problem_for(config, wp)?;
                Some(design_waypoint(&problem, strategy, config.rng_seed, &config.solver)?)
            };
            Ok(WaypointRun {
                waypoint_id: wp.id,
                connect,
                design,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let breakdown = total_latency(route.flight_duration, waypoints.iter().map(WaypointRun::latency).collect());
    Ok(PipelineRun {
        strategy,
        route,
        waypoints,
        breakdown,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow<T> {
    pub waypoint_id: u32,
    pub power_dbm: f64,
    /// Compute + downlink latency at this waypoint.
    pub downlink_service: T,
    /// Time from departure until this waypoint's service completes.
    pub cumulative_latency: T,
}

/// Proposed design at every budget in `powers_dbm` (applied to all
/// waypoints). Budgets are visited in increasing order, each continuing from
/// the design at the previous budget. Rows are grouped by waypoint with
/// powers in the order given.
pub fn sweep_power<T: Real>(config: &ScenarioConfig, powers_dbm: &[f64]) -> Result<Vec<SweepRow<T>>, Error> {
    config.validate()?;
    let route = plan_scenario_route::<T>(config)?;
    let mut ascending: Vec<usize> = (0..powers_dbm.len()).collect();
    ascending.sort_by(|a, b| powers_dbm[*a].total_cmp(&powers_dbm[*b]));

    let wps = sorted_waypoints(config);
    // Per waypoint: connect + uplink, and compute + downlink per power.
    let services = wps
        .par_iter()
        .map(|wp| -> Result<(T, Vec<T>), Error> {
            let connect = waypoint_connection_time::<T>(config, wp, config.access_procedure);
            if wp.assigned_turbines.is_empty() {
                return Ok((connect, vec![T::zero(); powers_dbm.len()]));
            }
            let mut problem = problem_for::<T>(config, wp)?;
            let uplink = design_uplink(&problem, BlockPlan::FULL, &config.solver)?;
            let mut per_power = vec![T::zero(); powers_dbm.len()];
            let mut previous = None;
            for &i in &ascending {
                problem.power_budget = T::of(dbm_to_watts(powers_dbm[i]));
                let design = match &previous {
                    None => design_downlink(&problem, BlockPlan::FULL, None, &config.solver)?,
                    Some(prev) => design_downlink_from(&problem, BlockPlan::FULL, prev, &config.solver)?,
                };
                per_power[i] = design.objective();
                previous = Some(design);
            }
            Ok((connect + uplink.latency.seconds, per_power))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut rows = Vec::with_capacity(wps.len() * powers_dbm.len());
    for (j, wp) in wps.iter().enumerate() {
        let arrival = route.arrival_time(wp.id).unwrap_or(route.flight_duration);
        for (i, &dbm) in powers_dbm.iter().enumerate() {
            let earlier: T = services[..=j].iter().map(|(fixed, per)| *fixed + per[i]).sum();
            rows.push(SweepRow {
                waypoint_id: wp.id,
                power_dbm: dbm,
                downlink_service: services[j].1[i],
                cumulative_latency: arrival + earlier,
            });
        }
    }
    Ok(rows)
}

pub fn sweep_csv<T: Real>(rows: &[SweepRow<T>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["waypoint_id", "power_dbm", "downlink_service", "cumulative_latency"])
        .unwrap();
    w.write_record(["", "dBm", "s", "s"]).unwrap();
    for r in rows {
        w.write_record([
            r.waypoint_id.to_string(),
            r.power_dbm.to_string(),
            r.downlink_service.as_f64().to_string(),
            r.cumulative_latency.as_f64().to_string(),
        ])
        .unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StrategyRow<T> {
    pub strategy: Strategy,
    pub total: T,
    pub components: WaypointLatency<T>,
    pub floor_met: bool,
}

/// Runs each strategy on the same channels.
pub fn compare_baselines<T: Real>(
    config: &ScenarioConfig,
    strategies: &[Strategy],
) -> Result<Vec<StrategyRow<T>>, Error> {
    strategies
        .iter()
        .map(|s| {
            let run = run_pipeline::<T>(config, *s)?;
            Ok(StrategyRow {
                strategy: *s,
                total: run.breakdown.total,
                components: run.breakdown.component_sums(),
                floor_met: run.floor_met(),
            })
        })
        .collect()
}

pub fn baselines_csv<T: Real>(rows: &[StrategyRow<T>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["strategy", "total", "connect", "uplink", "compute", "downlink", "floor_met"])
        .unwrap();
    w.write_record(["", "s", "s", "s", "s", "s", ""]).unwrap();
    for r in rows {
        let c = &r.components;
        w.write_record([
            r.strategy.name().to_string(),
            r.total.as_f64().to_string(),
            c.connect.as_f64().to_string(),
            c.uplink.as_f64().to_string(),
            c.compute.as_f64().to_string(),
            c.downlink.as_f64().to_string(),
            r.floor_met.to_string(),
        ])
        .unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AccessRow<T> {
    pub waypoint_id: u32,
    pub turbines: usize,
    pub rap: T,
    pub edt: T,
}

/// T^connect per waypoint under both access procedures.
pub fn access_compare<T: Real>(config: &ScenarioConfig) -> Vec<AccessRow<T>> {
    sorted_waypoints(config)
        .into_iter()
        .map(|wp| AccessRow {
            waypoint_id: wp.id,
            turbines: wp.assigned_turbines.len(),
            rap: waypoint_connection_time(config, wp, AccessProcedure::FourStepRap),
            edt: waypoint_connection_time(config, wp, AccessProcedure::TwoStepEdt),
        })
        .collect()
}

pub fn access_csv<T: Real>(rows: &[AccessRow<T>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["waypoint_id", "turbines", "rap", "edt"]).unwrap();
    w.write_record(["", "", "s", "s"]).unwrap();
    for r in rows {
        w.write_record([
            r.waypoint_id.to_string(),
            r.turbines.to_string(),
            r.rap.as_f64().to_string(),
            r.edt.as_f64().to_string(),
        ])
        .unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}
