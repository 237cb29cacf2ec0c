//! Small seeded cases for tests, benchmarks and the bundled CLI fixture.

use rand::Rng;

use crate::instance::synth::{synth_instance, SynthSpec};
use crate::instance::Instance;
use crate::pathgen::{generate_all, PathGenConfig, PathSet};
use crate::problem::{FirstStageSolution, Problem};
use crate::scenario::{build_scenarios, ScenarioConfig, ScenarioSet};

#[derive(Debug, Clone)]
pub struct Case {
    pub inst: Instance,
    pub paths: PathSet,
    pub scen: ScenarioSet,
}

impl Case {
    pub fn problem(&self) -> Problem {
        Problem::new(&self.inst, &self.paths, &self.scen).expect("fixture is consistent")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseSpec {
    pub junctions: usize,
    pub od_nodes: usize,
    pub max_od_pairs: Option<usize>,
    pub stations: usize,
    pub existing_stations: usize,
    pub zones: usize,
    pub t1: usize,
    pub t2: usize,
    pub max_chargers: u32,
    pub budget: f64,
    pub scenarios: usize,
    pub area_km: f64,
}

impl Default for CaseSpec {
    fn default() -> Self {
        CaseSpec {
            junctions: 8,
            od_nodes: 3,
            max_od_pairs: Some(3),
            stations: 3,
            existing_stations: 1,
            zones: 2,
            t1: 2,
            t2: 2,
            max_chargers: 3,
            budget: 4.0,
            scenarios: 3,
            area_km: 420.0,
        }
    }
}

impl CaseSpec {
    /// Small enough for the monolith, long enough trips that the tree needs
    /// integer cuts.
    pub fn desk() -> Self {
        CaseSpec { junctions: 10, budget: 3.0, scenarios: 4, area_km: 600.0, ..CaseSpec::default() }
    }
}

/// Synthetic instance, full path generation and sampled scenarios from one
/// seed.
pub fn case(spec: &CaseSpec, seed: u64) -> Case {
    let synth = SynthSpec {
        junctions: spec.junctions,
        od_nodes: spec.od_nodes,
        max_od_pairs: spec.max_od_pairs,
        stations: spec.stations,
        existing_stations: spec.existing_stations,
        zones: spec.zones,
        first_stage_len: spec.t1,
        second_stage_len: spec.t2,
        budget_per_period: spec.budget,
        max_chargers: spec.max_chargers,
        area_km: spec.area_km,
        ..SynthSpec::default()
    };
    let inst = synth_instance(&synth, seed).expect("synthetic spec is valid");
    let paths = generate_all(&inst, &PathGenConfig::from_regulations(&inst.regulations));
    let scen = build_scenarios(&inst, spec.scenarios, seed ^ 0x5eed, &ScenarioConfig::synthetic(inst.horizon.len()))
        .expect("scenario config is valid");
    Case { inst, paths, scen }
}

/// Random first stage that passes `check(prob, bounds)`. Stations are
/// opened and filled greedily in random order until budget or room runs
/// out, so budget-tight and loose points both occur.
pub fn random_first_stage(prob: &Problem, rng: &mut impl Rng, bounds: bool) -> FirstStageSolution {
    let (n, tt, t1) = (prob.n_stations, prob.n_periods, prob.t1);
    for _ in 0..1000 {
        let mut x = vec![vec![0u8; tt]; n];
        let mut z = vec![vec![0u32; t1]; n];
        for i in 0..n {
            let must = prob.committed_deadline(i);
            if must.is_some() || rng.gen_bool(0.6) {
                let last = must.unwrap_or(tt - 1);
                x[i][rng.gen_range(0..=last)] = 1;
            }
            z[i].clone_from(&prob.preplanned[i][..t1].to_vec());
        }
        for _ in 0..rng.gen_range(0..=3 * n) {
            let i = rng.gen_range(0..n);
            let t = rng.gen_range(0..t1);
            z[i][t] += 1;
            let cand = FirstStageSolution::complete(prob, x.clone(), z.clone());
            if cand.check(prob, bounds).is_err() {
                z[i][t] -= 1;
            }
        }
        let fs = FirstStageSolution::complete(prob, x, z);
        if fs.check(prob, bounds).is_ok() {
            return fs;
        }
    }
    panic!("no feasible first stage found by sampling");
}

/// One OD pair of a hand-made case: paths as (station, U) lists, a constant
/// first-stage flow, and a constant second-stage flow per scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyOd {
    pub paths: Vec<Vec<(usize, f64)>>,
    pub first_flow: f64,
    pub flows: Vec<f64>,
}

/// Hand-made case with one vehicle type and one power zone.
#[derive(Debug, Clone, PartialEq)]
pub struct ToySpec {
    pub t1: usize,
    pub t2: usize,
    pub stations: usize,
    pub ods: Vec<ToyOd>,
    pub capacity: u32,
    /// Pre-planned chargers per station and period; empty means none.
    pub preplanned: Vec<Vec<u32>>,
    pub budget: f64,
    pub carryover: f64,
    pub prep_cost: f64,
    pub charger_cost: f64,
    /// Zone limit in every period.
    pub limit: u32,
}

impl Default for ToySpec {
    fn default() -> Self {
        ToySpec {
            t1: 1,
            t2: 1,
            stations: 1,
            ods: vec![ToyOd { paths: vec![vec![(0, 1.0)]], first_flow: 1.0, flows: vec![1.0] }],
            capacity: 4,
            preplanned: Vec::new(),
            budget: 10.0,
            carryover: 1.0,
            prep_cost: 1.0,
            charger_cost: 1.0,
            limit: 100,
        }
    }
}

pub fn toy(spec: &ToySpec) -> Case {
    use crate::instance::*;
    use crate::pathgen::{OdVehiclePaths, Path};
    use crate::scenario::{AdoptionEnvelope, GridIncrements};

    let periods = spec.t1 + spec.t2;
    let n_od = spec.ods.len();
    let mut nodes: Vec<Node> = (0..=n_od)
        .map(|k| Node { id: format!("o{k}"), lat: 60.0, lon: 10.0 + k as f64 * 0.1, kind: NodeKind::OdNode })
        .collect();
    let mut arcs: Vec<RoadArc> = (0..n_od)
        .map(|k| RoadArc {
            tail: format!("o{k}"),
            head: format!("o{}", k + 1),
            category: ArcCategory::Road,
            length_km: 100.0,
            speed_kmh: 80.0,
            climb_m: 0.0,
            descent_m: 0.0,
        })
        .collect();
    let mut stations = Vec::new();
    for i in 0..spec.stations {
        nodes.push(Node { id: format!("s{i}"), lat: 60.0, lon: 10.0, kind: NodeKind::StationNode });
        arcs.push(RoadArc {
            tail: "o0".into(),
            head: format!("s{i}"),
            category: ArcCategory::Road,
            length_km: 1.0,
            speed_kmh: 50.0,
            climb_m: 0.0,
            descent_m: 0.0,
        });
        let preplanned = spec.preplanned.get(i).cloned().unwrap_or_else(|| vec![0; periods]);
        stations.push(CandidateStation {
            id: format!("cs{i}"),
            node: format!("s{i}"),
            zone: "r0".into(),
            max_chargers: spec.capacity,
            prep_cost: vec![spec.prep_cost; periods],
            charger_cost: vec![spec.charger_cost; periods],
            exists_at_start: preplanned[0] > 0,
            preplanned,
        });
    }
    let mut vehicle = default_vehicle_types().remove(0);
    vehicle.id = "v".into();
    let inst = Instance {
        name: "toy".into(),
        network: Network { nodes, arcs },
        od_pairs: (0..n_od)
            .map(|k| OdPair { id: format!("q{k}"), origin: format!("o{k}"), destination: format!("o{}", k + 1), base_flow: 1.0 })
            .collect(),
        vehicle_types: vec![vehicle],
        power_zones: vec![PowerZone {
            id: "r0".into(),
            stations: stations.iter().map(|s| s.id.clone()).collect(),
            initial_capacity_mw: 0.0,
            charger_kw: 400.0,
        }],
        stations,
        horizon: PlanningHorizon {
            periods: (0..periods).map(|t| format!("p{t}")).collect(),
            first_stage_len: spec.t1,
            budgets: vec![spec.budget; periods],
            carryover: spec.carryover,
        },
        fleet_mix: vec![vec![1.0]; periods],
        regulations: RegulationParams::default(),
        energy: EnergySettings::default(),
    };
    let entries = spec
        .ods
        .iter()
        .enumerate()
        .map(|(q, od)| OdVehiclePaths {
            od: q,
            vehicle: 0,
            od_id: format!("q{q}"),
            vehicle_id: "v".into(),
            shortest_km: 100.0,
            paths: od
                .paths
                .iter()
                .map(|visits| Path {
                    stations: visits.iter().map(|v| v.0).collect(),
                    utilization: visits.iter().map(|v| v.1).collect(),
                    distance_km: 100.0,
                    time_h: 1.25,
                    detour: 0.0,
                    energy_kwh: 150.0,
                    arcs: vec![q],
                    road_breaks: Vec::new(),
                    stops: Vec::new(),
                })
                .collect(),
        })
        .collect();
    let paths = PathSet {
        station_ids: inst.stations.iter().map(|s| s.id.clone()).collect(),
        config: PathGenConfig::from_regulations(&inst.regulations),
        entries,
    };
    let count = spec.ods.first().map_or(1, |od| od.flows.len());
    let scen = ScenarioSet {
        seed: 0,
        generator: "toy".into(),
        config: ScenarioConfig { envelope: AdoptionEnvelope::constant(periods, 1.0), grid: GridIncrements { min_mw: 0.0, max_mw: 0.0 } },
        first_stage_len: spec.t1,
        periods,
        probabilities: vec![1.0 / count as f64; count],
        adoption: vec![vec![1.0; spec.t2]; count],
        increments: vec![vec![vec![0.0; spec.t2]]; count],
        first_stage_capacity: vec![0.0],
        first_demand: spec.ods.iter().map(|od| vec![vec![od.first_flow; spec.t1]]).collect(),
        first_limits: vec![vec![spec.limit; spec.t1]],
        demand: (0..count).map(|s| spec.ods.iter().map(|od| vec![vec![od.flows[s]; spec.t2]]).collect()).collect(),
        limits: vec![vec![vec![spec.limit; spec.t2]]; count],
    };
    Case { inst, paths, scen }
}
