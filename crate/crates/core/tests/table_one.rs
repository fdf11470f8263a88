//! The recorded 173-turbine run against the scenario it was produced from.

use fbs_core::access::waypoint_connection_time;
use fbs_core::routing::plan_scenario_route;
use fbs_core::scenario::table_one_scenario;
use fbs_core::{load_scenario, run_pipeline, Strategy};
use serde_json::Value;

const DIR: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data");

fn recorded() -> Value {
    let text = std::fs::read_to_string(format!("{DIR}/table_one_run.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn scenario_file_matches_the_preset() {
    let text = std::fs::read_to_string(format!("{DIR}/table_one.toml")).unwrap();
    assert_eq!(load_scenario(&text).unwrap(), table_one_scenario());
}

#[test]
fn recorded_run_is_consistent_with_its_scenario() {
    let config = table_one_scenario();
    let run = recorded();
    let b = &run["breakdown"];
    assert_eq!(run["seed"], config.rng_seed);
    assert_eq!(run["turbines"], config.turbines.len());

    let route = plan_scenario_route::<f64>(&config).unwrap();
    assert!((b["flight"].as_f64().unwrap() - route.flight_duration).abs() < 1e-9);

    let per = b["per_waypoint"].as_array().unwrap();
    assert_eq!(per.len(), config.waypoints.len());
    let mut sum = route.flight_duration;
    for (w, wp) in per.iter().zip(&config.waypoints) {
        assert_eq!(w["waypoint_id"], wp.id);
        let connect: f64 = waypoint_connection_time(&config, wp, config.access_procedure);
        assert!((w["connect"].as_f64().unwrap() - connect).abs() <= 1e-12 * connect);
        for key in ["connect", "uplink", "compute", "downlink"] {
            let x = w[key].as_f64().unwrap();
            assert!(x > 0.0, "waypoint {} {key}", wp.id);
            sum += x;
        }
    }
    let total = b["total"].as_f64().unwrap();
    assert!((sum - total).abs() <= 1e-9 * total);
}

/// Takes about 20 minutes on one core.
#[test]
#[ignore]
fn rerun_reproduces_recorded_total() {
    let run = run_pipeline::<f64>(&table_one_scenario(), Strategy::Proposed).unwrap();
    let total = recorded()["breakdown"]["total"].as_f64().unwrap();
    assert!((run.breakdown.total - total).abs() <= 1e-6 * total, "{} vs {total}", run.breakdown.total);
}
