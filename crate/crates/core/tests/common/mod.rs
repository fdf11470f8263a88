//! Oracles and fixtures shared by the integration test targets. Oracles are
//! written from the model definitions and never call the code under test.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use fbs_core::channel::WaypointChannels;
use fbs_core::linalg::CMatrix;
use fbs_core::optimizer::WaypointProblem;
use fbs_core::pipeline::PipelineRun;
use fbs_core::scenario::{desk_scenario, ScenarioConfig};
use fbs_core::{run_pipeline, Strategy};
use nalgebra::{Complex, DMatrix};
use rand::Rng;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// `20 log10(4π d f / c)`.
pub fn fspl_oracle(distance: f64, frequency: f64) -> f64 {
    20.0 * (4.0 * std::f64::consts::PI * distance * frequency / SPEED_OF_LIGHT).log10()
}

/// Largest singular value through nalgebra's SVD.
pub fn sigma_max(m: &CMatrix<f64>) -> f64 {
    let dense = DMatrix::from_fn(m.rows(), m.cols(), |r, c| {
        let z = m.get(r, c);
        Complex::new(z.re, z.im)
    });
    dense.singular_values().max()
}

/// Undirected weighted graph as an edge map keyed by `(min, max)`.
pub type EdgeMap = BTreeMap<(u32, u32), f64>;

/// Random connected graph on nodes `1..=n`: a random spanning tree plus
/// extra edges with probability `density`. Lengths are small integers so
/// sums are exact.
pub fn random_connected_graph<R: Rng>(rng: &mut R, n: u32, density: f64) -> EdgeMap {
    let mut edges = EdgeMap::new();
    for node in 2..=n {
        let parent = rng.random_range(1..node);
        edges.insert((parent, node), rng.random_range(1..20) as f64);
    }
    for a in 1..=n {
        for b in a + 1..=n {
            if !edges.contains_key(&(a, b)) && rng.random_bool(density) {
                edges.insert((a, b), rng.random_range(1..20) as f64);
            }
        }
    }
    edges
}

/// Shortest `src → dst` length by enumerating every simple path.
pub fn brute_force_shortest(edges: &EdgeMap, src: u32, dst: u32) -> f64 {
    fn walk(edges: &EdgeMap, here: u32, dst: u32, seen: &mut BTreeSet<u32>, len: f64, best: &mut f64) {
        if here == dst {
            *best = best.min(len);
            return;
        }
        for (&(a, b), &w) in edges {
            let next = match (a == here, b == here) {
                (true, _) => b,
                (_, true) => a,
                _ => continue,
            };
            if seen.insert(next) {
                walk(edges, next, dst, seen, len + w, best);
                seen.remove(&next);
            }
        }
    }
    let mut best = f64::INFINITY;
    let mut seen = BTreeSet::from([src]);
    walk(edges, src, dst, &mut seen, 0.0, &mut best);
    best
}

/// Desk scenario reduced to waypoint 1 serving only turbine 1.
pub fn single_turbine_problem(seed: u64) -> (ScenarioConfig, WaypointProblem<f64>) {
    let mut config = desk_scenario(seed);
    config.waypoints.truncate(1);
    config.waypoints[0].assigned_turbines.truncate(1);
    config.turbines.retain(|t| t.id == 1);
    let wp = config.waypoints[0].clone();
    let channels = WaypointChannels::<f64>::build(&config, &wp, seed).unwrap();
    let problem = WaypointProblem::from_channels(&config, &wp, &channels);
    (config, problem)
}

/// Single-turbine downlink latency with gain `g = |vᴴGw|²` when `p_comp`
/// of the budget goes to computing and the rest to transmission.
pub fn single_user_downlink_latency(problem: &WaypointProblem<f64>, gain: f64, p_comp: f64) -> f64 {
    let d_ul = problem.uplink_payload_bits[0];
    let d_dl = problem.downlink_payload_bits[0];
    let compute = problem.compute_intensity * d_ul * (problem.processor_coefficient / p_comp).cbrt();
    let snr = gain * (problem.power_budget - p_comp) / problem.noise_power;
    compute + d_dl / (problem.bandwidth * (1.0 + snr).log2())
}

/// Minimum of [`single_user_downlink_latency`] over `points` interior
/// grid points of the compute share.
pub fn grid_search_split(problem: &WaypointProblem<f64>, gain: f64, points: usize) -> (f64, f64) {
    let budget = problem.power_budget;
    (1..=points)
        .map(|i| {
            let p_comp = budget * i as f64 / (points + 1) as f64;
            (single_user_downlink_latency(problem, gain, p_comp), p_comp)
        })
        .fold((f64::INFINITY, 0.0), |best, x| if x.0 < best.0 { x } else { best })
}

/// Desk-scale seeds used by the suite-level checks.
pub const DESK_SEEDS: std::ops::Range<u64> = 0..20;

pub fn desk_run(seed: u64, strategy: Strategy) -> PipelineRun<f64> {
    run_pipeline::<f64>(&desk_scenario(seed), strategy).unwrap()
}

/// Service latency Σ_j (uplink + compute + downlink).
pub fn service(run: &PipelineRun<f64>) -> f64 {
    run.breakdown.per_waypoint.iter().map(|w| w.service()).sum()
}

/// Trace is non-increasing up to `slack` relative.
pub fn non_increasing(trace: &[f64], slack: f64) -> bool {
    trace.windows(2).all(|p| p[1] <= p[0] + slack * p[0].abs().max(1.0))
}

/// Some pair of consecutive trace entries differs by less than `tol`
/// relative within the first `rounds` rounds.
pub fn settles_within(trace: &[f64], tol: f64, rounds: usize) -> bool {
    trace
        .windows(2)
        .take(rounds)
        .any(|p| (p[0] - p[1]).abs() <= tol * p[0].abs())
}
