use cslp_core::instance::{synth_instance, Instance, SynthSpec};
use cslp_core::oracle::exhaustive_paths;
use cslp_core::pathgen::{generate_all, generate_paths, replay_path, OdVehiclePaths, PathGenConfig, PathSet};
use proptest::prelude::*;

fn graph(seed: u64, stations: usize, area_km: f64) -> Instance {
    let spec = SynthSpec {
        junctions: 7,
        od_nodes: 3,
        stations,
        existing_stations: 0,
        zones: 2,
        first_stage_len: 1,
        second_stage_len: 1,
        area_km,
        ..SynthSpec::default()
    };
    synth_instance(&spec, seed).unwrap()
}

fn signature(p: &OdVehiclePaths) -> Vec<(Vec<usize>, f64)> {
    let mut v: Vec<_> = p.paths.iter().map(|p| (p.stations.clone(), p.time_h)).collect();
    v.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    v
}

fn same(a: &OdVehiclePaths, b: &OdVehiclePaths) -> bool {
    let (sa, sb) = (signature(a), signature(b));
    sa.len() == sb.len() && sa.iter().zip(&sb).all(|(x, y)| x.0 == y.0 && (x.1 - y.1).abs() <= 1e-9)
}

#[test]
fn label_search_matches_enumeration() {
    let mut charging = 0;
    for seed in 0..12 {
        let inst = graph(seed, 2 + (seed as usize % 3), 450.0 + 50.0 * (seed % 5) as f64);
        let cfg = PathGenConfig::from_regulations(&inst.regulations);
        for q in 0..inst.od_pairs.len() {
            for v in 0..inst.vehicle_types.len() {
                let got = generate_paths(&inst, q, v, &cfg).unwrap();
                let want = exhaustive_paths(&inst, q, v, &cfg);
                assert!(same(&got, &want), "seed {seed} od {q} vehicle {v}: {:?} vs {:?}", signature(&got), signature(&want));
                charging += got.paths.iter().filter(|p| !p.stations.is_empty()).count();
            }
        }
    }
    assert!(charging > 0, "family never needs charging");
}

#[test]
fn generated_paths_replay_cleanly() {
    for seed in 0..6 {
        let inst = graph(seed, 4, 700.0);
        let cfg = PathGenConfig::from_regulations(&inst.regulations);
        let ps = generate_all(&inst, &cfg);
        for e in &ps.entries {
            for p in &e.paths {
                let r = replay_path(&inst, e.od, e.vehicle, p, &cfg);
                assert!(r.ok(), "seed {seed} {} {}: {:?}", e.od_id, e.vehicle_id, r.violations);
                assert!((r.time_h - p.time_h).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn path_file_roundtrip() {
    let inst = graph(3, 3, 600.0);
    let ps = generate_all(&inst, &PathGenConfig::from_regulations(&inst.regulations));
    let back = PathSet::from_json(&ps.to_json()).unwrap();
    assert_eq!(ps, back);
    back.check(&inst).unwrap();
}

#[test]
fn unknown_indices_are_errors() {
    let inst = graph(1, 2, 500.0);
    let cfg = PathGenConfig::from_regulations(&inst.regulations);
    assert!(generate_paths(&inst, 99, 0, &cfg).is_err());
    assert!(generate_paths(&inst, 0, 99, &cfg).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn paths_respect_route_limits(seed in 0u64..10_000, area in 300.0f64..800.0) {
        let inst = graph(seed, 3, area);
        let cfg = PathGenConfig::from_regulations(&inst.regulations);
        let ps = generate_all(&inst, &cfg);
        for e in &ps.entries {
            let fastest = e.paths.iter().min_by(|a, b| a.time_h.total_cmp(&b.time_h)).map_or(0, |p| p.stop_count());
            let quickest = e.paths.iter().map(|p| p.time_h).fold(f64::INFINITY, f64::min);
            for p in &e.paths {
                prop_assert!(p.time_h <= quickest * (1.0 + cfg.detour_time_factor) + 1e-9);
                prop_assert!(p.detour <= cfg.detour_distance_factor + 1e-9);
                prop_assert!(p.stop_count() as u32 <= cfg.max_charging_stops);
                prop_assert!(p.stop_count() <= fastest + cfg.max_extra_stops as usize);
                prop_assert!(p.time_h <= inst.regulations.max_trip_h + 1e-9);
                prop_assert!(p.utilization.iter().all(|&u| u > 0.0));
                prop_assert_eq!(p.stations.len(), p.utilization.len());
            }
        }
    }
}
