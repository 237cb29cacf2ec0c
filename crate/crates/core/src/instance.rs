//! Instance data: road network, OD demand, vehicle classes, candidate
//! stations, power-grid zones and the planning horizon.

pub mod synth;

use std::collections::{HashMap, HashSet};
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::InstanceError;

pub use synth::{synth_instance, SynthSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeKind {
    Junction,
    OdNode,
    StationNode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub lat: f64,
    pub lon: f64,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArcCategory {
    Road,
    Ferry,
}

/// Directed arc. Climb and descent are the total elevation gained and lost
/// when travelling from tail to head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadArc {
    pub tail: String,
    pub head: String,
    pub category: ArcCategory,
    pub length_km: f64,
    pub speed_kmh: f64,
    #[serde(default)]
    pub climb_m: f64,
    #[serde(default)]
    pub descent_m: f64,
}

impl RoadArc {
    pub fn travel_time_h(&self) -> f64 {
        self.length_km / self.speed_kmh
    }

    pub fn is_ferry(&self) -> bool {
        self.category == ArcCategory::Ferry
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub nodes: Vec<Node>,
    pub arcs: Vec<RoadArc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdPair {
    pub id: String,
    pub origin: String,
    pub destination: String,
    /// Heavy-duty vehicles per hour, all drivetrains.
    pub base_flow: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleType {
    pub id: String,
    pub range_km: f64,
    pub depot_charging: bool,
    pub consumption_kwh_per_km: f64,
    pub mass_t: f64,
    pub departure_deduction_km: f64,
    pub arrival_reserve_km: f64,
    pub initial_soc: f64,
}

impl VehicleType {
    pub fn battery_kwh(&self) -> f64 {
        self.range_km * self.consumption_kwh_per_km
    }

    /// Energy on board when entering the network at the origin.
    pub fn departure_energy_kwh(&self) -> f64 {
        self.initial_soc * self.battery_kwh()
            - self.departure_deduction_km * self.consumption_kwh_per_km
    }

    pub fn arrival_reserve_kwh(&self) -> f64 {
        self.arrival_reserve_km * self.consumption_kwh_per_km
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateStation {
    pub id: String,
    pub node: String,
    pub zone: String,
    pub max_chargers: u32,
    /// Station preparation cost per period (MNOK).
    pub prep_cost: Vec<f64>,
    /// Cost per charger installed in a period (MNOK).
    pub charger_cost: Vec<f64>,
    /// Chargers committed before optimisation, per period.
    pub preplanned: Vec<u32>,
    #[serde(default)]
    pub exists_at_start: bool,
}

impl CandidateStation {
    /// First period with pre-planned chargers.
    pub fn preplanned_period(&self) -> Option<usize> {
        self.preplanned.iter().position(|&p| p > 0)
    }

    /// Stations with pre-planned chargers hold their own grid connection and
    /// are left out of zone limits.
    pub fn grid_exempt(&self) -> bool {
        self.preplanned_period().is_some()
    }

    pub fn preplanned_total(&self) -> u32 {
        self.preplanned.iter().sum()
    }

    pub fn preplanned_in(&self, periods: Range<usize>) -> u32 {
        self.preplanned[periods].iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerZone {
    pub id: String,
    pub stations: Vec<String>,
    pub initial_capacity_mw: f64,
    pub charger_kw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanningHorizon {
    pub periods: Vec<String>,
    pub first_stage_len: usize,
    pub budgets: Vec<f64>,
    pub carryover: f64,
}

impl PlanningHorizon {
    pub fn len(&self) -> usize {
        self.periods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.periods.is_empty()
    }

    pub fn first_stage(&self) -> Range<usize> {
        0..self.first_stage_len
    }

    pub fn second_stage(&self) -> Range<usize> {
        self.first_stage_len..self.periods.len()
    }

    pub fn all(&self) -> Range<usize> {
        0..self.periods.len()
    }

    pub fn last_first_stage(&self) -> usize {
        self.first_stage_len - 1
    }
}

fn default_max_trip() -> f64 {
    13.0
}
fn default_split_first() -> f64 {
    0.25
}
fn default_split_second() -> f64 {
    0.5
}
fn default_distance_factor() -> f64 {
    0.3
}

/// Driving-time rules and route-choice limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegulationParams {
    pub continuous_driving_h: f64,
    pub break_h: f64,
    #[serde(default = "default_split_first")]
    pub split_first_h: f64,
    #[serde(default = "default_split_second")]
    pub split_second_h: f64,
    pub daily_driving_h: f64,
    pub max_charging_stops: u32,
    pub max_extra_stops: u32,
    pub detour_time_factor: f64,
    #[serde(default = "default_distance_factor")]
    pub detour_distance_factor: f64,
    #[serde(default = "default_max_trip")]
    pub max_trip_h: f64,
}

impl Default for RegulationParams {
    fn default() -> Self {
        RegulationParams {
            continuous_driving_h: 4.5,
            break_h: 0.75,
            split_first_h: 0.25,
            split_second_h: 0.5,
            daily_driving_h: 10.0,
            max_charging_stops: 3,
            max_extra_stops: 1,
            detour_time_factor: 0.2,
            detour_distance_factor: 0.3,
            max_trip_h: 13.0,
        }
    }
}

fn default_regen() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergySettings {
    #[serde(default = "default_regen")]
    pub regen_efficiency: f64,
}

impl Default for EnergySettings {
    fn default() -> Self {
        EnergySettings { regen_efficiency: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    #[serde(default)]
    pub name: String,
    pub network: Network,
    pub od_pairs: Vec<OdPair>,
    pub vehicle_types: Vec<VehicleType>,
    pub stations: Vec<CandidateStation>,
    pub power_zones: Vec<PowerZone>,
    pub horizon: PlanningHorizon,
    /// Share of each vehicle type (columns) in each period (rows).
    pub fleet_mix: Vec<Vec<f64>>,
    #[serde(default)]
    pub regulations: RegulationParams,
    #[serde(default)]
    pub energy: EnergySettings,
}

impl Instance {
    pub fn from_json(text: &str) -> Result<Instance, InstanceError> {
        let inst: Instance =
            serde_json::from_str(text).map_err(|e| InstanceError::Parse(e.to_string()))?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn load(path: &Path) -> Result<Instance, InstanceError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| InstanceError::Io(format!("{}: {e}", path.display())))?;
        Instance::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serialises")
    }

    pub fn save(&self, path: &Path) -> Result<(), InstanceError> {
        std::fs::write(path, self.to_json() + "\n")
            .map_err(|e| InstanceError::Io(format!("{}: {e}", path.display())))
    }

    pub fn node_index(&self) -> HashMap<&str, usize> {
        self.network
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.as_str(), i))
            .collect()
    }

    pub fn zone_index(&self) -> HashMap<&str, usize> {
        self.power_zones
            .iter()
            .enumerate()
            .map(|(i, z)| (z.id.as_str(), i))
            .collect()
    }

    /// Zone index of every station.
    pub fn station_zones(&self) -> Vec<usize> {
        let zones = self.zone_index();
        self.stations.iter().map(|s| zones[s.zone.as_str()]).collect()
    }

    /// Station index keyed by network node index.
    pub fn station_at_node(&self) -> HashMap<usize, usize> {
        let nodes = self.node_index();
        self.stations
            .iter()
            .enumerate()
            .map(|(i, s)| (nodes[s.node.as_str()], i))
            .collect()
    }

    pub fn validate(&self) -> Result<(), InstanceError> {
        let bad = |msg: String| Err(InstanceError::Invalid(msg));
        let n_periods = self.horizon.len();

        let mut ids = HashSet::new();
        for n in &self.network.nodes {
            if !ids.insert(n.id.as_str()) {
                return bad(format!("duplicate node {}", n.id));
            }
        }
        let nodes = self.node_index();
        for a in &self.network.arcs {
            for end in [&a.tail, &a.head] {
                if !nodes.contains_key(end.as_str()) {
                    return bad(format!("unknown node {end}"));
                }
            }
            if a.tail == a.head {
                return bad(format!("arc {} -> {} is a loop", a.tail, a.head));
            }
            if !(a.length_km > 0.0 && a.length_km.is_finite()) {
                return bad(format!("arc {} -> {} has non-positive length", a.tail, a.head));
            }
            if !(a.speed_kmh > 0.0 && a.speed_kmh.is_finite()) {
                return bad(format!("arc {} -> {} has non-positive speed", a.tail, a.head));
            }
            if a.climb_m < 0.0 || a.descent_m < 0.0 {
                return bad(format!("arc {} -> {} has negative elevation change", a.tail, a.head));
            }
        }

        if n_periods == 0 {
            return bad("horizon has no periods".into());
        }
        let h = &self.horizon;
        if h.first_stage_len == 0 || h.first_stage_len >= n_periods {
            return bad(format!(
                "first stage must cover between 1 and {} periods, got {}",
                n_periods - 1,
                h.first_stage_len
            ));
        }
        if h.budgets.len() != n_periods {
            return bad(format!("budgets have {} entries, horizon has {n_periods}", h.budgets.len()));
        }
        if h.budgets.iter().any(|b| *b < 0.0 || !b.is_finite()) {
            return bad("budgets must be finite and non-negative".into());
        }
        if !(0.0..=1.0).contains(&h.carryover) {
            return bad(format!("carry-over factor {} outside [0, 1]", h.carryover));
        }

        let mut od_ids = HashSet::new();
        let mut od_ends = HashSet::new();
        for q in &self.od_pairs {
            if !od_ids.insert(q.id.as_str()) {
                return bad(format!("duplicate od pair {}", q.id));
            }
            for end in [&q.origin, &q.destination] {
                if !nodes.contains_key(end.as_str()) {
                    return bad(format!("unknown node {end}"));
                }
            }
            if q.origin == q.destination {
                return bad(format!("od pair {} has identical origin and destination", q.id));
            }
            if !od_ends.insert((q.origin.as_str(), q.destination.as_str())) {
                return bad(format!("od pair {} repeats {} -> {}", q.id, q.origin, q.destination));
            }
            if q.base_flow < 0.0 || !q.base_flow.is_finite() {
                return bad(format!("od pair {} has negative flow", q.id));
            }
        }

        if self.vehicle_types.is_empty() {
            return bad("no vehicle types".into());
        }
        let mut v_ids = HashSet::new();
        for v in &self.vehicle_types {
            if !v_ids.insert(v.id.as_str()) {
                return bad(format!("duplicate vehicle type {}", v.id));
            }
            if v.range_km <= 0.0 || v.consumption_kwh_per_km <= 0.0 || v.mass_t < 0.0 {
                return bad(format!("vehicle type {} has non-positive range or consumption", v.id));
            }
            if !(v.initial_soc > 0.0 && v.initial_soc <= 1.0) {
                return bad(format!("vehicle type {} has initial charge outside (0, 1]", v.id));
            }
            if v.departure_deduction_km < 0.0 || v.arrival_reserve_km < 0.0 {
                return bad(format!("vehicle type {} has negative reserve", v.id));
            }
            if v.departure_deduction_km + v.arrival_reserve_km >= v.range_km {
                return bad(format!("vehicle type {} reserves exceed its range", v.id));
            }
        }

        let zones = self.zone_index();
        if zones.len() != self.power_zones.len() {
            return bad("duplicate power zone id".into());
        }
        for z in &self.power_zones {
            if z.initial_capacity_mw < 0.0 || z.charger_kw <= 0.0 {
                return bad(format!("power zone {} has invalid capacity or rating", z.id));
            }
        }
        let mut s_ids = HashSet::new();
        let mut s_nodes = HashSet::new();
        for s in &self.stations {
            if !s_ids.insert(s.id.as_str()) {
                return bad(format!("duplicate station {}", s.id));
            }
            let Some(&ni) = nodes.get(s.node.as_str()) else {
                return bad(format!("unknown node {}", s.node));
            };
            if self.network.nodes[ni].kind != NodeKind::StationNode {
                return bad(format!("station {} sits on node {} which is not a station node", s.id, s.node));
            }
            if !s_nodes.insert(s.node.as_str()) {
                return bad(format!("node {} hosts more than one station", s.node));
            }
            let Some(&zi) = zones.get(s.zone.as_str()) else {
                return bad(format!("unknown power zone {}", s.zone));
            };
            if !self.power_zones[zi].stations.iter().any(|m| *m == s.id) {
                return bad(format!("power zone {} does not list station {}", s.zone, s.id));
            }
            if s.max_chargers == 0 {
                return bad(format!("station {} allows no chargers", s.id));
            }
            for (name, len) in [
                ("preparation costs", s.prep_cost.len()),
                ("charger costs", s.charger_cost.len()),
                ("pre-planned chargers", s.preplanned.len()),
            ] {
                if len != n_periods {
                    return bad(format!("station {} has {len} {name}, horizon has {n_periods}", s.id));
                }
            }
            if s.prep_cost.iter().chain(&s.charger_cost).any(|c| *c < 0.0 || !c.is_finite()) {
                return bad(format!("station {} has a negative cost", s.id));
            }
            if s.preplanned_total() > s.max_chargers {
                return bad(format!("station {} pre-plans more chargers than it can hold", s.id));
            }
            if s.exists_at_start && s.preplanned[0] == 0 {
                return bad(format!("existing station {} has no chargers in the first period", s.id));
            }
            let attached = self.network.arcs.iter().any(|a| a.tail == s.node)
                && self.network.arcs.iter().any(|a| a.head == s.node);
            if !attached {
                return bad(format!("station node {} has no access arcs", s.node));
            }
        }
        for z in &self.power_zones {
            for m in &z.stations {
                match self.stations.iter().find(|s| s.id == *m) {
                    None => return bad(format!("power zone {} lists unknown station {m}", z.id)),
                    Some(s) if s.zone != z.id => {
                        return bad(format!("station {m} is listed in zone {} but belongs to {}", z.id, s.zone))
                    }
                    _ => {}
                }
            }
        }

        if self.fleet_mix.len() != n_periods {
            return bad(format!("fleet mix has {} rows, horizon has {n_periods}", self.fleet_mix.len()));
        }
        for (t, row) in self.fleet_mix.iter().enumerate() {
            if row.len() != self.vehicle_types.len() {
                return bad(format!("fleet mix row {t} has {} shares for {} vehicle types", row.len(), self.vehicle_types.len()));
            }
            if row.iter().any(|s| *s < 0.0) || (row.iter().sum::<f64>() - 1.0).abs() > 1e-6 {
                return bad(format!("fleet mix row {t} does not sum to one"));
            }
        }

        let r = &self.regulations;
        let positive = [
            r.continuous_driving_h,
            r.break_h,
            r.split_first_h,
            r.split_second_h,
            r.daily_driving_h,
            r.max_trip_h,
        ];
        if positive.iter().any(|v| !(*v > 0.0)) || r.detour_time_factor < 0.0 || r.detour_distance_factor < 0.0 {
            return bad("regulation parameters must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.energy.regen_efficiency) {
            return bad("regenerative efficiency outside [0, 1]".into());
        }

        self.check_connected()
    }

    /// Every OD node and station node must share one weakly connected
    /// component.
    fn check_connected(&self) -> Result<(), InstanceError> {
        let nodes = self.node_index();
        let n = self.network.nodes.len();
        let mut adj = vec![Vec::new(); n];
        for a in &self.network.arcs {
            let (u, v) = (nodes[a.tail.as_str()], nodes[a.head.as_str()]);
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut relevant: Vec<usize> = self
            .od_pairs
            .iter()
            .flat_map(|q| [nodes[q.origin.as_str()], nodes[q.destination.as_str()]])
            .chain(self.stations.iter().map(|s| nodes[s.node.as_str()]))
            .collect();
        relevant.sort_unstable();
        relevant.dedup();
        let Some(&start) = relevant.first() else {
            return Ok(());
        };
        let mut seen = vec![false; n];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        match relevant.iter().find(|&&i| !seen[i]) {
            Some(&i) => Err(InstanceError::Invalid(format!(
                "node {} is disconnected from node {}",
                self.network.nodes[i].id, self.network.nodes[start].id
            ))),
            None => Ok(()),
        }
    }
}

/// Fleet shares where the 300 km class falls linearly from 90 % to 50 % of
/// the fleet, each class split evenly between depot and non-depot charging.
/// Columns follow [300 depot, 300 non-depot, 500 depot, 500 non-depot].
pub fn default_fleet_mix(periods: usize) -> Vec<Vec<f64>> {
    (0..periods)
        .map(|t| {
            let frac = if periods > 1 { t as f64 / (periods - 1) as f64 } else { 0.0 };
            let short = 0.9 - 0.4 * frac;
            let long = 1.0 - short;
            vec![short / 2.0, short / 2.0, long / 2.0, long / 2.0]
        })
        .collect()
}

/// The four vehicle classes used throughout: 300 km and 500 km range, with
/// and without depot charging.
pub fn default_vehicle_types() -> Vec<VehicleType> {
    let make = |id: &str, range: f64, depot: bool| VehicleType {
        id: id.into(),
        range_km: range,
        depot_charging: depot,
        consumption_kwh_per_km: 1.5,
        mass_t: 30.0,
        departure_deduction_km: 30.0,
        arrival_reserve_km: 30.0,
        initial_soc: if depot { 1.0 } else { 0.5 },
    };
    vec![
        make("v300d", 300.0, true),
        make("v300n", 300.0, false),
        make("v500d", 500.0, true),
        make("v500n", 500.0, false),
    ]
}
