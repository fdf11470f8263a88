//! Invariants over generated inputs.

mod common;

use common::{brute_force_shortest, random_connected_graph};
use fbs_core::access::{connection_time, AccessTiming};
use fbs_core::channel::{
    angles_between, build_channel_pair_with, free_space_path_loss_db, steering, ura_zeta, NlosDraw,
};
use fbs_core::link::{
    compute_latency, rate, task_compute_latency, total_latency, transmission_latency, CrossGains, WaypointLatency,
};
use fbs_core::optimizer::taylor_sinr_constraint;
use fbs_core::routing::{dijkstra, plan_mission, WaypointGraph};
use fbs_core::scenario::{
    desk_scenario, generate_synthetic_layout, load_scenario, AccessProcedure, Area, ArrayGeometry, Position3D,
};
use num_complex::Complex;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn complex_vec(len: usize) -> impl Strategy<Value = Vec<Complex<f64>>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), len).prop_map(|v| v.into_iter().map(|(a, b)| Complex::new(a, b)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn doubling_distance_adds_six_db(d in 1.0..1e5f64, f in 1e8..1e11f64) {
        let a: f64 = free_space_path_loss_db(d, f).unwrap();
        let b: f64 = free_space_path_loss_db(2.0 * d, f).unwrap();
        prop_assert!((b - a - 20.0 * 2f64.log10()).abs() < 1e-9);
    }

    #[test]
    fn steering_entries_are_unit_modulus(
        nx in 1usize..6, ny in 1usize..6,
        x in -5e3..5e3f64, y in -5e3..5e3f64, z in 1.0..2e3f64,
    ) {
        let g = ArrayGeometry::new(nx, ny);
        let angles = angles_between::<f64>(&Position3D::new(0.0, 0.0, 0.0), &Position3D::new(x, y, z)).unwrap();
        let a = steering(&g, &ura_zeta(&g, &angles)).unwrap();
        prop_assert_eq!(a.entries.len(), nx * ny);
        for e in &a.entries {
            prop_assert!((e.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn channel_norm_scales_with_path_loss_amplitude(seed in any::<u64>(), delta_db in -20.0..20.0f64) {
        let base = desk_scenario(seed);
        let mut louder = base.clone();
        louder.rx_gain_db += delta_db;
        let (t, w) = (&base.turbines[0], &base.waypoints[0]);
        let (h0, _) = build_channel_pair_with::<f64>(t, w, &base, seed, NlosDraw::Independent).unwrap();
        let (h1, _) = build_channel_pair_with::<f64>(t, w, &louder, seed, NlosDraw::Independent).unwrap();
        let ratio = h1.entries.frobenius_norm() / h0.entries.frobenius_norm();
        prop_assert!((ratio - 10f64.powf(delta_db / 20.0)).abs() < 1e-9 * ratio);
    }

    #[test]
    fn reciprocal_draws_give_equal_norms(seed in any::<u64>()) {
        let config = desk_scenario(seed);
        let (h, g) = build_channel_pair_with::<f64>(&config.turbines[0], &config.waypoints[0], &config, seed, NlosDraw::Reciprocal).unwrap();
        let (a, b) = (h.entries.frobenius_norm(), g.entries.frobenius_norm());
        prop_assert!((a - b).abs() < 1e-12 * a);
    }

    #[test]
    fn generated_layouts_partition_and_round_trip(
        n in 1usize..40, j in 1usize..6, seed in any::<u64>(),
        width in 1e3..6e4f64, height in 1e3..2e4f64,
    ) {
        prop_assume!(n >= j);
        let config = generate_synthetic_layout(n, j, Area::new(width, height), seed).unwrap();
        let mut assigned: Vec<u32> = config.waypoints.iter().flat_map(|w| w.assigned_turbines.clone()).collect();
        assigned.sort_unstable();
        let ids: Vec<u32> = config.turbines.iter().map(|t| t.id).collect();
        prop_assert_eq!(&assigned, &ids);
        prop_assert_eq!(&generate_synthetic_layout(n, j, Area::new(width, height), seed).unwrap(), &config);
        let text = config.to_toml();
        let back = load_scenario(&text).unwrap();
        prop_assert_eq!(&back, &config);
        prop_assert_eq!(back.to_toml(), text);
    }

    #[test]
    fn edt_never_exceeds_rap(
        airtime in 0.0..1e-2f64, prop_delay in 0.0..1e-4f64, processing in 0.0..1e-2f64, n in 1usize..50,
    ) {
        let timing = |procedure| AccessTiming {
            procedure,
            per_message_airtime: airtime,
            propagation_delay: prop_delay,
            processing_delay_per_node: processing,
        };
        let rap = connection_time(&timing(AccessProcedure::FourStepRap), n);
        let edt = connection_time(&timing(AccessProcedure::TwoStepEdt), n);
        prop_assert!(edt <= rap);
        let one = connection_time(&timing(AccessProcedure::TwoStepEdt), 1);
        prop_assert!((edt - n as f64 * one).abs() <= 1e-12 * edt.max(1e-300));
    }

    #[test]
    fn sinr_is_phase_invariant(
        h in complex_vec(6), w in complex_vec(3), v in complex_vec(2), phase in -3.2..3.2f64,
    ) {
        let mat = fbs_core::linalg::CMatrix::from_fn(3, 2, |r, c| h[r * 2 + c]);
        let channels = vec![mat.clone(), mat];
        let rot = Complex::from_polar(1.0, phase);
        let w2: Vec<Complex<f64>> = w.iter().map(|x| x * rot).collect();
        let ws = vec![w.clone(), w.clone()];
        let vs = vec![v.clone(), v.clone()];
        let a = CrossGains::uplink(&channels, &ws, &vs).sinrs(&[1.0, 0.5], 0.1);
        let b = CrossGains::uplink(&channels, &[w2, w], &vs).sinrs(&[1.0, 0.5], 0.1);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-12 * x.max(1.0));
        }
    }

    #[test]
    fn raising_a_rate_never_raises_transmission_latency(
        rates in prop::collection::vec(0.01..10.0f64, 1..6), pick in any::<prop::sample::Index>(), boost in 0.0..5.0f64,
    ) {
        let ids: Vec<u32> = (1..=rates.len() as u32).collect();
        let bits = vec![1.0; rates.len()];
        let before = transmission_latency(&ids, &rates, &bits, 1.0).unwrap().seconds;
        let mut faster = rates.clone();
        faster[pick.index(rates.len())] += boost;
        let after = transmission_latency(&ids, &faster, &bits, 1.0).unwrap().seconds;
        prop_assert!(after <= before);
    }

    #[test]
    fn compute_latency_is_decreasing_and_convex(p in 0.01..100.0f64, h in 1e-3..1.0f64) {
        let f = |x: f64| task_compute_latency(x, 1.0, 0.8, 1.0);
        prop_assert!(f(p + h) < f(p));
        prop_assert!(f(p - h.min(p / 2.0)) + f(p + h.min(p / 2.0)) > 2.0 * f(p));
        let total = compute_latency(&[1, 2], &[p, p], 1.0, 0.8, &[1.0, 1.0]).unwrap();
        prop_assert!((total - 2.0 * f(p)).abs() < 1e-12 * total);
    }

    #[test]
    fn total_is_flight_plus_components(
        flight in 0.0..1e4f64, parts in prop::collection::vec((0.0..10.0f64, 0.0..10.0f64, 0.0..10.0f64, 0.0..10.0f64), 0..8),
    ) {
        let per: Vec<WaypointLatency<f64>> = parts
            .iter()
            .enumerate()
            .map(|(i, &(connect, uplink, compute, downlink))| WaypointLatency { waypoint_id: i as u32, connect, uplink, compute, downlink })
            .collect();
        let hand = flight + parts.iter().map(|p| p.0 + p.1 + p.2 + p.3).sum::<f64>();
        let b = total_latency(flight, per);
        prop_assert!((b.total - hand).abs() <= 1e-9 * hand.max(1.0));
    }

    #[test]
    fn rate_is_increasing(a in 0.0..1e6f64, b in 0.0..1e6f64) {
        prop_assume!(a < b);
        prop_assert!(rate(a) < rate(b));
    }

    #[test]
    fn taylor_form_is_tight_at_anchor_and_a_lower_bound(
        h in complex_vec(6), w in complex_vec(3), v0 in complex_vec(2), dv in complex_vec(2), step in 1e-4..1.0f64,
    ) {
        let mat = fbs_core::linalg::CMatrix::from_fn(3, 2, |r, c| h[r * 2 + c]);
        let c = taylor_sinr_constraint(0, &[mat], &[w], std::slice::from_ref(&v0), &[1.3], 0.1, 0.5);
        let at_anchor = c.linearized_lhs(&v0);
        prop_assert!((at_anchor - c.true_lhs(&v0)).abs() <= 1e-12 * at_anchor.max(1.0));
        let v: Vec<Complex<f64>> = v0.iter().zip(&dv).map(|(a, d)| a + d * step).collect();
        prop_assert!(c.linearized_lhs(&v) <= c.true_lhs(&v) + 1e-12);
    }

    #[test]
    fn flight_time_scales_inversely_with_speed(speed in 1.0..200.0f64, factor in 1.1..5.0f64) {
        let g = WaypointGraph::<f64>::with_edges([1, 2, 3], [(1, 2, 1000.0), (2, 3, 2500.0), (1, 3, 4000.0)]).unwrap();
        let slow = plan_mission(&g, &[1, 3, 2], speed).unwrap().flight_duration;
        let fast = plan_mission(&g, &[1, 3, 2], speed * factor).unwrap().flight_duration;
        prop_assert!((slow / fast - factor).abs() < 1e-9 * factor);
    }

    #[test]
    fn legs_are_optimal_and_extra_edges_never_lengthen(seed in any::<u64>(), n in 2u32..=7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = random_connected_graph(&mut rng, n, 0.3);
        let graph = |e: &common::EdgeMap| WaypointGraph::<f64>::with_edges(1..=n, e.iter().map(|(&(a, b), &w)| (a, b, w))).unwrap();
        let before: Vec<f64> = (1..=n).map(|d| dijkstra(&graph(&edges), 1, d).unwrap().length).collect();
        for (d, len) in (1..=n).zip(&before) {
            prop_assert_eq!(*len, brute_force_shortest(&edges, 1, d));
        }
        let missing = (1..=n).flat_map(|a| (a + 1..=n).map(move |b| (a, b))).find(|k| !edges.contains_key(k));
        if let Some(key) = missing {
            edges.insert(key, 1.0);
            for (d, len) in (1..=n).zip(&before) {
                prop_assert!(dijkstra(&graph(&edges), 1, d).unwrap().length <= *len);
            }
        }
    }
}

#[test]
fn mean_channel_energy_matches_array_size() {
    let mut config = desk_scenario(0);
    for epsilon in [0.0, 1.0, 10.0] {
        config.rician_factor = epsilon;
        let (t, w) = (&config.turbines[0], &config.waypoints[0]);
        let draws = 400;
        let mut mean = 0.0;
        let mut amplitude = 0.0;
        for seed in 0..draws {
            let (h, _) = build_channel_pair_with::<f64>(t, w, &config, seed, NlosDraw::Independent).unwrap();
            amplitude = h.path_loss.total_amplitude;
            let f = h.entries.frobenius_norm();
            mean += f * f / draws as f64;
        }
        let expected = amplitude * amplitude * 16.0 * 9.0;
        assert!((mean / expected - 1.0).abs() < 0.03, "ε={epsilon}: {mean} vs {expected}");
    }
}
