use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use crate::energy::{arc_energy, EnergyParams};
use crate::instance::{Instance, VehicleType};

use super::PathGenConfig;

#[derive(Debug, Clone)]
pub struct SearchArc {
    pub index: usize,
    pub head: usize,
    pub time_h: f64,
    pub length_km: f64,
    pub energy_kwh: f64,
    pub ferry: bool,
}

/// Network restricted to one OD pair and vehicle type, with lower bounds on
/// what remains to be done from every node.
#[derive(Debug, Clone)]
pub struct SearchGraph {
    pub origin: usize,
    pub destination: usize,
    pub out: Vec<Vec<SearchArc>>,
    pub allowed: Vec<bool>,
    /// Station index at a node, if any.
    pub station: Vec<Option<usize>>,
    /// Charger rating per station, kW.
    pub station_kw: Vec<f64>,
    pub lb_time: Vec<f64>,
    pub lb_driving: Vec<f64>,
    /// Least energy to reach a station node, or the destination with the
    /// arrival reserve still on board.
    pub lb_energy: Vec<f64>,
    pub shortest_km: f64,
    pub battery_kwh: f64,
    pub departure_kwh: f64,
    pub reserve_kwh: f64,
}

/// Dijkstra over `adj` (node -> [(next, weight)]) from several sources.
pub(crate) fn dijkstra(adj: &[Vec<(usize, f64)>], sources: &[(usize, f64)]) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    let mut heap = BinaryHeap::new();
    for &(s, d0) in sources {
        if d0 < dist[s] {
            dist[s] = d0;
            heap.push(Reverse((ordered(d0), s)));
        }
    }
    while let Some(Reverse((d, u))) = heap.pop() {
        let d = f64::from_bits(d);
        if d > dist[u] {
            continue;
        }
        for &(v, w) in &adj[u] {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Reverse((ordered(nd), v)));
            }
        }
    }
    dist
}

// Non-negative floats order like their bit patterns.
fn ordered(x: f64) -> u64 {
    debug_assert!(x >= 0.0);
    x.to_bits()
}

impl SearchGraph {
    pub fn build(
        inst: &Instance,
        origin: usize,
        destination: usize,
        vehicle: &VehicleType,
        cfg: &PathGenConfig,
    ) -> SearchGraph {
        let n = inst.network.nodes.len();
        let nodes = inst.node_index();
        let zones = inst.station_zones();
        let station_kw: Vec<f64> = zones.iter().map(|&z| inst.power_zones[z].charger_kw).collect();
        let mut station = vec![None; n];
        for (i, s) in inst.stations.iter().enumerate() {
            station[nodes[s.node.as_str()]] = Some(i);
        }
        let params = EnergyParams::for_vehicle(vehicle, &inst.energy, 400.0);

        let mut fwd_len = vec![Vec::new(); n];
        let mut rev_len = vec![Vec::new(); n];
        for a in &inst.network.arcs {
            let (u, v) = (nodes[a.tail.as_str()], nodes[a.head.as_str()]);
            fwd_len[u].push((v, a.length_km));
            rev_len[v].push((u, a.length_km));
        }
        let from_o = dijkstra(&fwd_len, &[(origin, 0.0)]);
        let to_d = dijkstra(&rev_len, &[(destination, 0.0)]);
        let shortest_km = from_o[destination];
        let cap = (1.0 + cfg.detour_distance_factor) * shortest_km + 1e-9;
        let allowed: Vec<bool> = (0..n)
            .map(|i| shortest_km.is_finite() && from_o[i] + to_d[i] <= cap)
            .collect();

        let mut out = vec![Vec::new(); n];
        let mut rev_time = vec![Vec::new(); n];
        let mut rev_drive = vec![Vec::new(); n];
        let mut rev_energy = vec![Vec::new(); n];
        for (index, a) in inst.network.arcs.iter().enumerate() {
            let (u, v) = (nodes[a.tail.as_str()], nodes[a.head.as_str()]);
            if !allowed[u] || !allowed[v] {
                continue;
            }
            let arc = SearchArc {
                index,
                head: v,
                time_h: a.travel_time_h(),
                length_km: a.length_km,
                energy_kwh: arc_energy(a, &params),
                ferry: a.is_ferry(),
            };
            rev_time[v].push((u, arc.time_h));
            rev_drive[v].push((u, if arc.ferry { 0.0 } else { arc.time_h }));
            rev_energy[v].push((u, arc.energy_kwh));
            out[u].push(arc);
        }
        let lb_time = dijkstra(&rev_time, &[(destination, 0.0)]);
        let lb_driving = dijkstra(&rev_drive, &[(destination, 0.0)]);
        let reserve_kwh = vehicle.arrival_reserve_kwh();
        let mut targets: Vec<(usize, f64)> = (0..n)
            .filter(|&i| allowed[i] && station[i].is_some())
            .map(|i| (i, 0.0))
            .collect();
        targets.push((destination, reserve_kwh));
        let lb_energy = dijkstra(&rev_energy, &targets);

        SearchGraph {
            origin,
            destination,
            out,
            allowed,
            station,
            station_kw,
            lb_time,
            lb_driving,
            lb_energy,
            shortest_km,
            battery_kwh: vehicle.battery_kwh(),
            departure_kwh: vehicle.departure_energy_kwh(),
            reserve_kwh,
        }
    }

    pub fn node_count(&self) -> usize {
        self.out.len()
    }
}

/// Shortest road distance for every OD pair, km.
pub fn shortest_distances(inst: &Instance) -> HashMap<(usize, usize), f64> {
    let nodes = inst.node_index();
    let mut adj = vec![Vec::new(); inst.network.nodes.len()];
    for a in &inst.network.arcs {
        adj[nodes[a.tail.as_str()]].push((nodes[a.head.as_str()], a.length_km));
    }
    let mut out = HashMap::new();
    for q in &inst.od_pairs {
        let (o, d) = (nodes[q.origin.as_str()], nodes[q.destination.as_str()]);
        out.entry((o, d)).or_insert_with(|| dijkstra(&adj, &[(o, 0.0)])[d]);
    }
    out
}
