use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::*;

/// Shape of a generated instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub junctions: usize,
    pub od_nodes: usize,
    /// Keep only the first pairs in nesting order.
    pub max_od_pairs: Option<usize>,
    pub stations: usize,
    pub existing_stations: usize,
    pub zones: usize,
    pub first_stage_len: usize,
    pub second_stage_len: usize,
    pub budget_per_period: f64,
    pub carryover: f64,
    pub max_chargers: u32,
    pub area_km: f64,
    /// Extra links from every junction to its nearest neighbours, on top of a
    /// spanning tree.
    pub nearest_links: usize,
    pub ferry_share: f64,
    pub flow_min: f64,
    pub flow_max: f64,
    pub prep_cost: f64,
    pub charger_cost: f64,
    pub zone_capacity_min_mw: f64,
    pub zone_capacity_max_mw: f64,
    pub start_year: u32,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            junctions: 20,
            od_nodes: 5,
            max_od_pairs: None,
            stations: 6,
            existing_stations: 1,
            zones: 3,
            first_stage_len: 3,
            second_stage_len: 3,
            budget_per_period: 20.0,
            carryover: 0.95,
            max_chargers: 8,
            area_km: 450.0,
            nearest_links: 2,
            ferry_share: 0.0,
            flow_min: 2.0,
            flow_max: 12.0,
            prep_cost: 2.0,
            charger_cost: 1.7,
            zone_capacity_min_mw: 0.4,
            zone_capacity_max_mw: 2.0,
            start_year: 2025,
        }
    }
}

const NETWORK_STREAM: u64 = 1;
const OD_STREAM: u64 = 2;
const STATION_STREAM: u64 = 3;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn round_to(x: f64, step: f64) -> f64 {
    (x / step).round() * step
}

/// Deterministic synthetic instance. The network, OD weights and station
/// layout come from separate random streams, so instances that differ only in
/// the OD count share everything else and their OD pairs nest.
pub fn synth_instance(spec: &SynthSpec, seed: u64) -> Result<Instance, InstanceError> {
    let n = spec.junctions;
    if n < 2 {
        return Err(InstanceError::Invalid("a network needs at least two junctions".into()));
    }
    if spec.od_nodes > n {
        return Err(InstanceError::Invalid(format!(
            "requested {} OD nodes but the network has only {n} nodes",
            spec.od_nodes
        )));
    }
    if spec.stations > n {
        return Err(InstanceError::Invalid(format!(
            "requested {} stations but the network has only {n} junctions",
            spec.stations
        )));
    }
    if spec.existing_stations > spec.stations {
        return Err(InstanceError::Invalid("more existing stations than stations".into()));
    }
    if spec.stations > 0 && spec.zones == 0 {
        return Err(InstanceError::Invalid("stations need at least one power zone".into()));
    }
    if spec.first_stage_len == 0 || spec.second_stage_len == 0 {
        return Err(InstanceError::Invalid("both stages need at least one period".into()));
    }

    let mut rng = stream(seed, NETWORK_STREAM);
    let pos: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.gen_range(0.0..spec.area_km), rng.gen_range(0.0..spec.area_km)))
        .collect();
    let alt: Vec<f64> = (0..n).map(|_| round_to(rng.gen_range(0.0..800.0), 1.0)).collect();
    let dist = |a: usize, b: usize| ((pos[a].0 - pos[b].0).powi(2) + (pos[a].1 - pos[b].1).powi(2)).sqrt();

    // Prim spanning tree plus nearest-neighbour links.
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut in_tree = vec![false; n];
    let mut best = vec![(f64::INFINITY, usize::MAX); n];
    in_tree[0] = true;
    for v in 1..n {
        best[v] = (dist(0, v), 0);
    }
    for _ in 1..n {
        let v = (0..n)
            .filter(|&v| !in_tree[v])
            .min_by(|&a, &b| best[a].0.total_cmp(&best[b].0).then(a.cmp(&b)))
            .expect("vertex left");
        in_tree[v] = true;
        edges.push((best[v].1.min(v), best[v].1.max(v)));
        for u in 0..n {
            if !in_tree[u] && dist(v, u) < best[u].0 {
                best[u] = (dist(v, u), v);
            }
        }
    }
    for a in 0..n {
        let mut others: Vec<usize> = (0..n).filter(|&b| b != a).collect();
        others.sort_by(|&x, &y| dist(a, x).total_cmp(&dist(a, y)).then(x.cmp(&y)));
        for &b in others.iter().take(spec.nearest_links) {
            edges.push((a.min(b), a.max(b)));
        }
    }
    edges.sort_unstable();
    edges.dedup();

    let node_id = |i: usize| format!("n{i}");
    let to_latlon = |(x, y): (f64, f64)| {
        let lat = 58.0 + y / 111.0;
        let lon = 8.0 + x / (111.0 * 59f64.to_radians().cos());
        (round_to(lat, 1e-5), round_to(lon, 1e-5))
    };

    let mut arcs = Vec::new();
    for &(a, b) in &edges {
        let ferry = spec.ferry_share > 0.0 && rng.gen_bool(spec.ferry_share.min(1.0));
        let length = round_to((dist(a, b) * 1.15).max(5.0), 0.1);
        let wiggle = round_to(rng.gen_range(0.0..60.0), 1.0);
        let rise = alt[b] - alt[a];
        for (tail, head, up) in [(a, b, rise), (b, a, -rise)] {
            let (climb, descent) = if ferry {
                (0.0, 0.0)
            } else {
                (up.max(0.0) + wiggle, (-up).max(0.0) + wiggle)
            };
            arcs.push(RoadArc {
                tail: node_id(tail),
                head: node_id(head),
                category: if ferry { ArcCategory::Ferry } else { ArcCategory::Road },
                length_km: length,
                speed_kmh: if ferry { 20.0 } else { 60.0 },
                climb_m: climb,
                descent_m: descent,
            });
        }
    }

    // OD nodes: prefix of a fixed permutation, weights drawn for every node.
    let mut od_rng = stream(seed, OD_STREAM);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut od_rng);
    let weight: Vec<f64> = (0..n).map(|_| od_rng.gen_range(0.0..1.0)).collect();
    let od_set = &order[..spec.od_nodes];
    let mut kinds = vec![NodeKind::Junction; n];
    for &v in od_set {
        kinds[v] = NodeKind::OdNode;
    }
    let mut pairs = Vec::new();
    for hi in 0..od_set.len() {
        for lo in 0..hi {
            pairs.push((od_set[lo], od_set[hi]));
            pairs.push((od_set[hi], od_set[lo]));
        }
    }
    if let Some(limit) = spec.max_od_pairs {
        pairs.truncate(limit);
    }
    let od_pairs = pairs
        .iter()
        .map(|&(o, d)| {
            let w = (weight[o] + weight[d]) / 2.0;
            OdPair {
                id: format!("{}-{}", node_id(o), node_id(d)),
                origin: node_id(o),
                destination: node_id(d),
                base_flow: round_to(spec.flow_min + w * (spec.flow_max - spec.flow_min), 0.01),
            }
        })
        .collect();

    let mut nodes: Vec<Node> = (0..n)
        .map(|i| {
            let (lat, lon) = to_latlon(pos[i]);
            Node { id: node_id(i), lat, lon, kind: kinds[i] }
        })
        .collect();

    let periods = spec.first_stage_len + spec.second_stage_len;
    let mut st_rng = stream(seed, STATION_STREAM);
    let mut hosts: Vec<usize> = (0..n).collect();
    hosts.shuffle(&mut st_rng);
    let mut stations = Vec::new();
    let mut zones: Vec<PowerZone> = (0..if spec.stations > 0 { spec.zones } else { 0 })
        .map(|r| PowerZone {
            id: format!("r{r}"),
            stations: Vec::new(),
            initial_capacity_mw: 0.0,
            charger_kw: 400.0,
        })
        .collect();
    for z in zones.iter_mut() {
        z.initial_capacity_mw =
            round_to(st_rng.gen_range(spec.zone_capacity_min_mw..=spec.zone_capacity_max_mw), 0.1);
    }
    for k in 0..spec.stations {
        let host = hosts[k];
        let access = round_to(st_rng.gen_range(1.0..3.0), 0.1);
        let sid = format!("s{k}");
        let (lat, lon) = to_latlon((pos[host].0 + access / 2.0, pos[host].1));
        nodes.push(Node { id: sid.clone(), lat, lon, kind: NodeKind::StationNode });
        for (tail, head) in [(node_id(host), sid.clone()), (sid.clone(), node_id(host))] {
            arcs.push(RoadArc {
                tail,
                head,
                category: ArcCategory::Road,
                length_km: access,
                speed_kmh: 50.0,
                climb_m: 0.0,
                descent_m: 0.0,
            });
        }
        let existing = k < spec.existing_stations;
        let mut preplanned = vec![0; periods];
        if existing {
            preplanned[0] = st_rng.gen_range(1..=2u32).min(spec.max_chargers);
        }
        let zone = k % spec.zones;
        let id = format!("cs{k}");
        zones[zone].stations.push(id.clone());
        stations.push(CandidateStation {
            id,
            node: sid,
            zone: format!("r{zone}"),
            max_chargers: spec.max_chargers,
            prep_cost: vec![if existing { 0.0 } else { spec.prep_cost }; periods],
            charger_cost: vec![spec.charger_cost; periods],
            preplanned,
            exists_at_start: existing,
        });
    }

    let inst = Instance {
        name: format!("synth-{}n-{}od-{}cs-seed{seed}", n, spec.od_nodes, spec.stations),
        network: Network { nodes, arcs },
        od_pairs,
        vehicle_types: default_vehicle_types(),
        stations,
        power_zones: zones,
        horizon: PlanningHorizon {
            periods: (0..periods).map(|t| (spec.start_year + t as u32).to_string()).collect(),
            first_stage_len: spec.first_stage_len,
            budgets: vec![spec.budget_per_period; periods],
            carryover: spec.carryover,
        },
        fleet_mix: default_fleet_mix(periods),
        regulations: RegulationParams::default(),
        energy: EnergySettings::default(),
    };
    inst.validate()?;
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_instance() {
        let spec = SynthSpec::default();
        assert_eq!(synth_instance(&spec, 7).unwrap(), synth_instance(&spec, 7).unwrap());
        assert_ne!(synth_instance(&spec, 7).unwrap(), synth_instance(&spec, 8).unwrap());
    }

    #[test]
    fn od_sets_nest() {
        let small = SynthSpec { od_nodes: 3, ..SynthSpec::default() };
        let large = SynthSpec { od_nodes: 6, ..SynthSpec::default() };
        let a = synth_instance(&small, 11).unwrap();
        let b = synth_instance(&large, 11).unwrap();
        assert_eq!(a.od_pairs.len(), 6);
        assert_eq!(b.od_pairs.len(), 30);
        for q in &a.od_pairs {
            assert!(b.od_pairs.contains(q), "{} missing", q.id);
        }
        assert_eq!(a.network.arcs, b.network.arcs);
        assert_eq!(a.stations, b.stations);
    }

    #[test]
    fn too_many_od_nodes() {
        let spec = SynthSpec { junctions: 12, od_nodes: 20, ..SynthSpec::default() };
        assert!(synth_instance(&spec, 1).is_err());
    }

    #[test]
    fn pair_limit_keeps_prefix() {
        let spec = SynthSpec { od_nodes: 4, max_od_pairs: Some(3), ..SynthSpec::default() };
        let inst = synth_instance(&spec, 3).unwrap();
        assert_eq!(inst.od_pairs.len(), 3);
        let full = synth_instance(&SynthSpec { od_nodes: 4, ..SynthSpec::default() }, 3).unwrap();
        assert_eq!(&full.od_pairs[..3], &inst.od_pairs[..]);
    }
}
