//! Charging-station paths for every OD pair and vehicle type.
//!
//! A label-setting search walks the network tracking effective time, driving
//! time, rest status, battery and per-station charging. Surviving labels at the
//! destination become [`Path`]s, each carrying the charger-hours it needs at
//! every station it charges at.

pub mod graph;
pub mod label;
pub mod replay;

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::PathError;
use crate::instance::{Instance, RegulationParams};

pub use graph::SearchGraph;
pub use label::{dominates, extend_label, finish, is_feasible, station_options, Event, Label};
pub use replay::{replay_path, ReplayReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ChargePolicy {
    #[default]
    JustEnough,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathGenConfig {
    pub detour_time_factor: f64,
    pub max_extra_stops: u32,
    pub detour_distance_factor: f64,
    pub max_charging_stops: u32,
    pub ferry_counts_as_break: bool,
    pub charge_policy: ChargePolicy,
}

impl PathGenConfig {
    pub fn from_regulations(reg: &RegulationParams) -> Self {
        PathGenConfig {
            detour_time_factor: reg.detour_time_factor,
            max_extra_stops: reg.max_extra_stops,
            detour_distance_factor: reg.detour_distance_factor,
            max_charging_stops: reg.max_charging_stops,
            ferry_counts_as_break: false,
            charge_policy: ChargePolicy::JustEnough,
        }
    }
}

/// A break taken on the road: position in the arc list, hours of driving
/// into that arc, and break length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadBreak {
    pub arc_pos: usize,
    pub offset_h: f64,
    pub break_h: f64,
}

/// A stop at a station node after `arc_pos` arcs have been driven.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationStop {
    pub arc_pos: usize,
    pub station: usize,
    pub charge_h: f64,
    pub break_h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    /// Stations charged at, in visit order (indices into the instance).
    pub stations: Vec<usize>,
    /// Charger-hours per vehicle at each station.
    pub utilization: Vec<f64>,
    pub distance_km: f64,
    pub time_h: f64,
    pub detour: f64,
    pub energy_kwh: f64,
    /// Arc indices in driving order.
    pub arcs: Vec<usize>,
    pub road_breaks: Vec<RoadBreak>,
    pub stops: Vec<StationStop>,
}

impl Path {
    pub fn stop_count(&self) -> usize {
        self.stations.len()
    }

    pub fn utilization_at(&self, station: usize) -> Option<f64> {
        self.stations.iter().position(|&s| s == station).map(|k| self.utilization[k])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdVehiclePaths {
    pub od: usize,
    pub vehicle: usize,
    pub od_id: String,
    pub vehicle_id: String,
    pub shortest_km: f64,
    pub paths: Vec<Path>,
}

/// All generated paths, one entry per (OD pair, vehicle type) in OD-major
/// order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSet {
    pub station_ids: Vec<String>,
    pub config: PathGenConfig,
    pub entries: Vec<OdVehiclePaths>,
}

impl PathSet {
    pub fn vehicles(&self) -> usize {
        self.entries
            .iter()
            .map(|e| e.vehicle + 1)
            .max()
            .unwrap_or(0)
    }

    pub fn get(&self, od: usize, vehicle: usize) -> &OdVehiclePaths {
        let nv = self.vehicles();
        let e = &self.entries[od * nv + vehicle];
        debug_assert!(e.od == od && e.vehicle == vehicle);
        e
    }

    pub fn path_count(&self) -> usize {
        self.entries.iter().map(|e| e.paths.len()).sum()
    }

    /// Check that the set was built for this instance.
    pub fn check(&self, inst: &Instance) -> Result<(), String> {
        let want = inst.od_pairs.len() * inst.vehicle_types.len();
        if self.entries.len() != want {
            return Err(format!("path set has {} entries, instance needs {want}", self.entries.len()));
        }
        let ids: Vec<&str> = inst.stations.iter().map(|s| s.id.as_str()).collect();
        if self.station_ids.iter().map(String::as_str).ne(ids.iter().copied()) {
            return Err("path set lists different stations than the instance".into());
        }
        let nv = inst.vehicle_types.len();
        for (k, e) in self.entries.iter().enumerate() {
            if e.od != k / nv || e.vehicle != k % nv {
                return Err(format!("path set entry {k} is out of order"));
            }
            if e.od_id != inst.od_pairs[e.od].id || e.vehicle_id != inst.vehicle_types[e.vehicle].id {
                return Err(format!("path set entry {k} names a different OD pair or vehicle"));
            }
            if e.paths.iter().flat_map(|p| &p.stations).any(|&s| s >= ids.len()) {
                return Err(format!("path set entry {k} uses an unknown station"));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("path set serialises")
    }

    pub fn from_json(text: &str) -> Result<PathSet, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }
}

pub fn utilization_factor(charge_h: f64) -> f64 {
    charge_h
}

fn label_path(l: &Label, g: &SearchGraph, inst: &Instance) -> Path {
    let mut arcs = Vec::new();
    let mut road_breaks = Vec::new();
    let mut stops: Vec<StationStop> = Vec::new();
    for ev in label::trail_events(&l.trail) {
        match ev {
            Event::Arc { arc, breaks, .. } => {
                for (offset_h, break_h) in breaks {
                    road_breaks.push(RoadBreak { arc_pos: arcs.len(), offset_h, break_h });
                }
                arcs.push(arc);
            }
            Event::Stop { station, break_h, .. } => {
                stops.push(StationStop { arc_pos: arcs.len(), station, charge_h: 0.0, break_h });
            }
            Event::Settle { station, hours } => {
                if let Some(s) = stops.iter_mut().rev().find(|s| s.station == station) {
                    s.charge_h = hours;
                }
            }
        }
    }
    let _ = inst;
    Path {
        stations: l.charges.iter().map(|c| c.0).collect(),
        utilization: l.charges.iter().map(|c| utilization_factor(c.1)).collect(),
        distance_km: l.distance,
        time_h: l.time,
        detour: if g.shortest_km > 0.0 { l.distance / g.shortest_km - 1.0 } else { 0.0 },
        energy_kwh: l.energy,
        arcs,
        road_breaks,
        stops,
    }
}

fn path_dominates(a: &Path, b: &Path) -> bool {
    if a.time_h > b.time_h {
        return false;
    }
    let mut strict = a.time_h < b.time_h;
    for (k, &s) in a.stations.iter().enumerate() {
        match b.utilization_at(s) {
            Some(ub) if a.utilization[k] <= ub => strict |= a.utilization[k] < ub,
            _ => return false,
        }
    }
    strict || a.stations.len() < b.stations.len()
}

/// Turn feasible destination labels into the final path list: drop dominated
/// ones, keep the fastest per station set, then apply the time and stop
/// filters relative to the fastest route and the distance cap.
pub fn select_paths(finished: &[Label], g: &SearchGraph, inst: &Instance, cfg: &PathGenConfig) -> Vec<Path> {
    let all: Vec<Path> = finished.iter().map(|l| label_path(l, g, inst)).collect();
    let kept: Vec<&Path> = all
        .iter()
        .filter(|b| !all.iter().any(|a| path_dominates(a, b)))
        .collect();
    let mut by_set: BTreeMap<Vec<usize>, &Path> = BTreeMap::new();
    for p in kept {
        let mut key = p.stations.clone();
        key.sort_unstable();
        let better = |cur: &Path| {
            p.time_h
                .total_cmp(&cur.time_h)
                .then_with(|| p.utilization.iter().sum::<f64>().total_cmp(&cur.utilization.iter().sum::<f64>()))
                .then_with(|| p.stations.cmp(&cur.stations))
                .is_lt()
        };
        match by_set.get(&key) {
            Some(cur) if !better(cur) => {}
            _ => {
                by_set.insert(key, p);
            }
        }
    }
    let mut paths: Vec<Path> = by_set.into_values().cloned().collect();
    let Some(fastest) = paths
        .iter()
        .min_by(|a, b| a.time_h.total_cmp(&b.time_h).then(a.stop_count().cmp(&b.stop_count())))
        .cloned()
    else {
        return Vec::new();
    };
    let time_cap = (1.0 + cfg.detour_time_factor) * fastest.time_h;
    let stop_cap = fastest.stop_count() + cfg.max_extra_stops as usize;
    let dist_cap = (1.0 + cfg.detour_distance_factor) * g.shortest_km + 1e-9;
    paths.retain(|p| p.time_h <= time_cap + 1e-12 && p.stop_count() <= stop_cap && p.distance_km <= dist_cap);
    paths.sort_by(|a, b| a.time_h.total_cmp(&b.time_h).then_with(|| a.stations.cmp(&b.stations)));
    paths
}

struct Store {
    labels: Vec<Option<Label>>,
    at_node: Vec<Vec<usize>>,
}

impl Store {
    /// Keep `l` unless an existing label is at least as good; evict labels it
    /// strictly beats.
    fn insert(&mut self, l: Label) -> Option<usize> {
        let node = l.node;
        for &id in &self.at_node[node] {
            if let Some(e) = &self.labels[id] {
                if dominates(e, &l, false) {
                    return None;
                }
            }
        }
        let labels = &mut self.labels;
        self.at_node[node].retain(|&id| match &labels[id] {
            Some(e) if dominates(&l, e, true) => {
                labels[id] = None;
                false
            }
            Some(_) => true,
            None => false,
        });
        let id = self.labels.len();
        self.labels.push(Some(l));
        self.at_node[node].push(id);
        Some(id)
    }
}

/// Feasible destination labels found by label setting with dominance.
pub fn search(g: &SearchGraph, reg: &RegulationParams, cfg: &PathGenConfig) -> Vec<Label> {
    let mut finished = Vec::new();
    if !g.shortest_km.is_finite() {
        return finished;
    }
    let mut store = Store { labels: Vec::new(), at_node: vec![Vec::new(); g.node_count()] };
    let mut heap = BinaryHeap::new();
    let start = Label::initial(g);
    if !is_feasible(&start, g, reg, cfg) {
        return finished;
    }
    for l in station_options(&start, g, reg, cfg) {
        if is_feasible(&l, g, reg, cfg) {
            if let Some(id) = store.insert(l) {
                heap.push(Reverse((store.labels[id].as_ref().unwrap().time_lower().to_bits(), id)));
            }
        }
    }
    while let Some(Reverse((_, id))) = heap.pop() {
        let Some(cur) = store.labels[id].clone() else {
            continue;
        };
        for arc in &g.out[cur.node] {
            let Some(next) = extend_label(&cur, arc, reg, cfg) else {
                continue;
            };
            if next.node == g.destination {
                if is_feasible(&next, g, reg, cfg) {
                    if let Some(f) = finish(&next, g) {
                        if f.time <= reg.max_trip_h {
                            finished.push(f);
                        }
                    }
                }
                continue;
            }
            for opt in station_options(&next, g, reg, cfg) {
                if !is_feasible(&opt, g, reg, cfg) {
                    continue;
                }
                if let Some(nid) = store.insert(opt) {
                    let key = store.labels[nid].as_ref().unwrap().time_lower().to_bits();
                    heap.push(Reverse((key, nid)));
                }
            }
        }
    }
    finished
}

pub fn generate_paths(inst: &Instance, od: usize, vehicle: usize, cfg: &PathGenConfig) -> Result<OdVehiclePaths, PathError> {
    let q = inst.od_pairs.get(od).ok_or(PathError::UnknownOdPair(od))?;
    let v = inst.vehicle_types.get(vehicle).ok_or(PathError::UnknownVehicle(vehicle))?;
    let nodes = inst.node_index();
    let g = SearchGraph::build(inst, nodes[q.origin.as_str()], nodes[q.destination.as_str()], v, cfg);
    let finished = search(&g, &inst.regulations, cfg);
    Ok(OdVehiclePaths {
        od,
        vehicle,
        od_id: q.id.clone(),
        vehicle_id: v.id.clone(),
        shortest_km: g.shortest_km,
        paths: select_paths(&finished, &g, inst, cfg),
    })
}

/// Paths for every (OD pair, vehicle type), computed in parallel.
pub fn generate_all(inst: &Instance, cfg: &PathGenConfig) -> PathSet {
    let nv = inst.vehicle_types.len();
    let jobs: Vec<(usize, usize)> = (0..inst.od_pairs.len()).flat_map(|q| (0..nv).map(move |v| (q, v))).collect();
    let entries = jobs
        .par_iter()
        .map(|&(q, v)| generate_paths(inst, q, v, cfg).expect("indices in range"))
        .collect();
    PathSet {
        station_ids: inst.stations.iter().map(|s| s.id.clone()).collect(),
        config: cfg.clone(),
        entries,
    }
}
