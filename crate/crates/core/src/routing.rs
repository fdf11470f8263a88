//! Route planning over the waypoint graph and flight duration.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use serde::Serialize;

use crate::error::RoutingError;
use crate::scalar::Real;
use crate::scenario::ScenarioConfig;

/// Undirected weighted graph over waypoint ids.
#[derive(Clone, Debug, PartialEq)]
pub struct WaypointGraph<T> {
    nodes: Vec<u32>,
    adjacency: BTreeMap<u32, Vec<(u32, T)>>,
}

impl<T: Real> WaypointGraph<T> {
    pub fn new(nodes: impl IntoIterator<Item = u32>) -> Self {
        let mut nodes: Vec<u32> = nodes.into_iter().collect();
        nodes.sort_unstable();
        nodes.dedup();
        let adjacency = nodes.iter().map(|&n| (n, Vec::new())).collect();
        Self { nodes, adjacency }
    }

    pub fn with_edges(
        nodes: impl IntoIterator<Item = u32>,
        edges: impl IntoIterator<Item = (u32, u32, T)>,
    ) -> Result<Self, RoutingError> {
        let mut g = Self::new(nodes);
        for (a, b, length) in edges {
            g.add_edge(a, b, length)?;
        }
        Ok(g)
    }

    /// Adds an undirected edge. A repeated edge keeps the shorter length.
    pub fn add_edge(&mut self, a: u32, b: u32, length: T) -> Result<(), RoutingError> {
        if !(length > T::zero() && length.is_finite()) {
            return Err(RoutingError::BadEdge {
                a,
                b,
                length: length.as_f64(),
            });
        }
        for n in [a, b] {
            if !self.adjacency.contains_key(&n) {
                return Err(RoutingError::UnknownNode(n));
            }
        }
        for (from, to) in [(a, b), (b, a)] {
            let list = self.adjacency.get_mut(&from).unwrap();
            match list.iter_mut().find(|(n, _)| *n == to) {
                Some(e) => e.1 = e.1.min(length),
                None => list.push((to, length)),
            }
            list.sort_by_key(|(n, _)| *n);
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[u32] {
        &self.nodes
    }

    pub fn neighbors(&self, node: u32) -> &[(u32, T)] {
        self.adjacency.get(&node).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn edge_length(&self, a: u32, b: u32) -> Option<T> {
        self.neighbors(a).iter().find(|(n, _)| *n == b).map(|(_, l)| *l)
    }

    /// Complete graph over the scenario's waypoints with horizontal
    /// distances as lengths, or the scenario's explicit edge list.
    pub fn from_scenario(config: &ScenarioConfig) -> Result<Self, RoutingError> {
        let ids = config.waypoints.iter().map(|w| w.id);
        match &config.route_edges {
            Some(edges) => Self::with_edges(ids, edges.iter().map(|e| (e.a, e.b, T::of(e.length)))),
            None => {
                let mut g = Self::new(ids);
                for (i, a) in config.waypoints.iter().enumerate() {
                    for b in &config.waypoints[i + 1..] {
                        let d = a.position.horizontal_distance(&b.position);
                        if d > 0.0 {
                            g.add_edge(a.id, b.id, T::of(d))?;
                        }
                    }
                }
                Ok(g)
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Entry<T> {
    dist: T,
    node: u32,
}

impl<T: PartialOrd> Eq for Entry<T> {}

impl<T: PartialOrd> PartialOrd for Entry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: PartialOrd> Ord for Entry<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on distance, then on node id.
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// Single-source shortest distances.
fn distances_from<T: Real>(graph: &WaypointGraph<T>, src: u32) -> BTreeMap<u32, T> {
    let mut dist = BTreeMap::new();
    let mut heap = BinaryHeap::new();
    dist.insert(src, T::zero());
    heap.push(Entry { dist: T::zero(), node: src });
    while let Some(Entry { dist: d, node }) = heap.pop() {
        if dist.get(&node).is_some_and(|best| d > *best) {
            continue;
        }
        for &(next, w) in graph.neighbors(node) {
            let nd = d + w;
            if dist.get(&next).is_none_or(|best| nd < *best) {
                dist.insert(next, nd);
                heap.push(Entry { dist: nd, node: next });
            }
        }
    }
    dist
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShortestPath<T> {
    pub nodes: Vec<u32>,
    pub length: T,
}

/// Minimum-length path from `src` to `dst`. Among equally short paths the
/// lexicographically smallest node sequence is returned.
pub fn dijkstra<T: Real>(graph: &WaypointGraph<T>, src: u32, dst: u32) -> Result<ShortestPath<T>, RoutingError> {
    for n in [src, dst] {
        if !graph.adjacency.contains_key(&n) {
            return Err(RoutingError::UnknownNode(n));
        }
    }
    let from_src = distances_from(graph, src);
    let Some(&total) = from_src.get(&dst) else {
        return Err(RoutingError::Unreachable { from: src, to: dst });
    };
    let to_dst = distances_from(graph, dst);
    let slack = total * T::of(1e-12);

    let mut nodes = vec![src];
    let mut length = T::zero();
    let mut here = src;
    while here != dst {
        let d_here = from_src[&here];
        let (next, w) = graph
            .neighbors(here)
            .iter()
            .copied()
            .find(|(n, w)| {
                to_dst
                    .get(n)
                    .is_some_and(|rest| d_here + *w + *rest <= total + slack && *rest < to_dst[&here])
            })
            .expect("a tight edge exists on every shortest path");
        nodes.push(next);
        length = length + w;
        here = next;
    }
    Ok(ShortestPath { nodes, length })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RouteStop<T> {
    pub waypoint_id: u32,
    pub cumulative_distance: T,
    pub cumulative_time: T,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Route<T> {
    pub nodes: Vec<u32>,
    pub total_length: T,
    /// T^f in seconds.
    pub flight_duration: T,
    pub stops: Vec<RouteStop<T>>,
}

impl<T: Real> Route<T> {
    /// Time of first arrival at `waypoint`.
    pub fn arrival_time(&self, waypoint: u32) -> Option<T> {
        self.stops
            .iter()
            .find(|s| s.waypoint_id == waypoint)
            .map(|s| s.cumulative_time)
    }

    /// CSV with a header row and a units row.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["step", "waypoint_id", "cumulative_distance", "cumulative_time"])
            .unwrap();
        w.write_record(["", "", "m", "s"]).unwrap();
        for (i, s) in self.stops.iter().enumerate() {
            w.write_record([
                i.to_string(),
                s.waypoint_id.to_string(),
                s.cumulative_distance.as_f64().to_string(),
                s.cumulative_time.as_f64().to_string(),
            ])
            .unwrap();
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }
}

/// Chains shortest legs between consecutive waypoints of `visit_order`.
pub fn plan_mission<T: Real>(
    graph: &WaypointGraph<T>,
    visit_order: &[u32],
    cruise_speed: T,
) -> Result<Route<T>, RoutingError> {
    if !(cruise_speed > T::zero() && cruise_speed.is_finite()) {
        return Err(RoutingError::BadSpeed(cruise_speed.as_f64()));
    }
    let (&first, _) = visit_order.split_first().ok_or(RoutingError::EmptyVisitOrder)?;
    if !graph.adjacency.contains_key(&first) {
        return Err(RoutingError::UnknownNode(first));
    }
    let mut nodes = vec![first];
    let mut stops = vec![RouteStop {
        waypoint_id: first,
        cumulative_distance: T::zero(),
        cumulative_time: T::zero(),
    }];
    let mut total = T::zero();
    for pair in visit_order.windows(2) {
        let leg = dijkstra(graph, pair[0], pair[1])?;
        for hop in leg.nodes.windows(2) {
            total = total + graph.edge_length(hop[0], hop[1]).unwrap();
            nodes.push(hop[1]);
            stops.push(RouteStop {
                waypoint_id: hop[1],
                cumulative_distance: total,
                cumulative_time: total / cruise_speed,
            });
        }
    }
    Ok(Route {
        nodes,
        total_length: total,
        flight_duration: total / cruise_speed,
        stops,
    })
}

/// Route over every waypoint in id order.
pub fn plan_scenario_route<T: Real>(config: &ScenarioConfig) -> Result<Route<T>, RoutingError> {
    let graph = WaypointGraph::<T>::from_scenario(config)?;
    let mut order: Vec<u32> = config.waypoints.iter().map(|w| w.id).collect();
    order.sort_unstable();
    plan_mission(&graph, &order, T::of(config.uav_cruise_speed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> WaypointGraph<f64> {
        WaypointGraph::with_edges([1, 2, 3], [(1, 2, 1.0), (2, 3, 1.0), (1, 3, 3.0)]).unwrap()
    }

    #[test]
    fn same_node_is_empty_path() {
        let p = dijkstra(&triangle(), 2, 2).unwrap();
        assert_eq!(p.nodes, vec![2]);
        assert_eq!(p.length, 0.0);
    }

    #[test]
    fn detour_beats_direct_edge() {
        let p = dijkstra(&triangle(), 1, 3).unwrap();
        assert_eq!(p.nodes, vec![1, 2, 3]);
        assert_eq!(p.length, 2.0);
    }

    #[test]
    fn ties_take_smallest_sequence() {
        let g = WaypointGraph::with_edges([1, 2, 3, 4], [(1, 3, 1.0), (3, 4, 1.0), (1, 2, 1.0), (2, 4, 1.0)]).unwrap();
        assert_eq!(dijkstra(&g, 1, 4).unwrap().nodes, vec![1, 2, 4]);
        assert_eq!(dijkstra(&g, 4, 1).unwrap().nodes, vec![4, 2, 1]);
    }

    #[test]
    fn unreachable_and_unknown() {
        let g = WaypointGraph::with_edges([1, 2, 3], [(1, 2, 1.0)]).unwrap();
        assert_eq!(dijkstra(&g, 1, 3), Err(RoutingError::Unreachable { from: 1, to: 3 }));
        assert_eq!(dijkstra(&g, 1, 9), Err(RoutingError::UnknownNode(9)));
        assert!(matches!(
            WaypointGraph::with_edges([1, 2], [(1, 2, 0.0)]),
            Err(RoutingError::BadEdge { .. })
        ));
    }

    #[test]
    fn single_waypoint_mission_has_no_flight() {
        let r = plan_mission(&WaypointGraph::<f64>::new([5]), &[5], 10.0).unwrap();
        assert_eq!(r.flight_duration, 0.0);
        assert_eq!(r.nodes, vec![5]);
    }

    #[test]
    fn mission_sums_legs() {
        let pts = [(0.0, 0.0), (3.0, 4.0), (3.0, 10.0)];
        let mut g = WaypointGraph::<f64>::new([1, 2, 3]);
        for i in 0..3 {
            for j in i + 1..3 {
                let d = f64::hypot(pts[i].0 - pts[j].0, pts[i].1 - pts[j].1);
                g.add_edge(i as u32 + 1, j as u32 + 1, d).unwrap();
            }
        }
        let r = plan_mission(&g, &[1, 2, 3], 2.0).unwrap();
        assert_eq!(r.total_length, 5.0 + 6.0);
        assert_eq!(r.flight_duration, 5.5);
        assert_eq!(r.arrival_time(2), Some(2.5));
        assert!(plan_mission(&g, &[], 1.0).is_err());
    }

    #[test]
    fn route_csv_has_units_row() {
        let r = plan_mission(&triangle(), &[1, 3], 2.0).unwrap();
        let csv = r.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "step,waypoint_id,cumulative_distance,cumulative_time");
        assert_eq!(lines[1], ",,m,s");
        assert_eq!(lines.len(), 2 + 3);
    }
}
