use cslp_core::error::InstanceError;
use cslp_core::instance::{synth_instance, Instance, SynthSpec};
use proptest::prelude::*;

fn base() -> Instance {
    synth_instance(&SynthSpec::default(), 11).unwrap()
}

fn rejects(mutate: impl FnOnce(&mut Instance), needle: &str) {
    let mut inst = base();
    mutate(&mut inst);
    match inst.validate() {
        Err(InstanceError::Invalid(m)) => assert!(m.contains(needle), "message '{m}' lacks '{needle}'"),
        other => panic!("expected rejection mentioning '{needle}', got {other:?}"),
    }
}

#[test]
fn corrupted_instances_name_the_broken_rule() {
    rejects(|i| i.network.arcs[0].length_km = 0.0, "non-positive length");
    rejects(|i| i.horizon.budgets.pop().map(|_| ()).unwrap(), "budgets have");
    rejects(|i| i.horizon.carryover = 1.5, "carry-over");
    rejects(|i| i.od_pairs[0].base_flow = -1.0, "negative flow");
    rejects(|i| i.od_pairs[0].destination = i.od_pairs[0].origin.clone(), "identical origin");
    rejects(|i| i.stations[0].zone = "nowhere".into(), "unknown power zone");
    rejects(|i| i.stations[0].max_chargers = 0, "allows no chargers");
    rejects(|i| i.vehicle_types.clear(), "no vehicle types");
    rejects(
        |i| {
            i.network.nodes.push(i.network.nodes[0].clone());
        },
        "duplicate node",
    );
}

#[test]
fn json_roundtrip_is_exact() {
    let inst = base();
    let back = Instance::from_json(&inst.to_json()).unwrap();
    assert_eq!(inst, back);
}

#[test]
fn malformed_json_is_a_parse_error() {
    assert!(matches!(Instance::from_json("{\"name\": 3}"), Err(InstanceError::Parse(_))));
    assert!(matches!(Instance::load(std::path::Path::new("/nonexistent/x.json")), Err(InstanceError::Io(_))));
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn synthetic_instances_validate(seed in any::<u64>(), junctions in 3usize..25, stations in 1usize..6, zones in 1usize..4) {
        let spec = SynthSpec {
            junctions,
            od_nodes: 2.min(junctions),
            stations: stations.min(junctions),
            existing_stations: 0,
            zones,
            ..SynthSpec::default()
        };
        let inst = synth_instance(&spec, seed).unwrap();
        prop_assert!(inst.validate().is_ok());
        prop_assert_eq!(inst.horizon.len(), spec.first_stage_len + spec.second_stage_len);
        prop_assert_eq!(inst, synth_instance(&spec, seed).unwrap());
    }
}
