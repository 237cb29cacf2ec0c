//! Brute-force reference routines for tests. Compiled only for tests or with
//! the `oracle` feature.

use crate::instance::Instance;
use crate::pathgen::{
    extend_label, finish, is_feasible, select_paths, station_options, Label, OdVehiclePaths, PathGenConfig, SearchGraph,
};

/// Every feasible destination label, found by depth-first enumeration with
/// no dominance pruning.
pub fn enumerate_labels(g: &SearchGraph, inst: &Instance, cfg: &PathGenConfig) -> Vec<Label> {
    let reg = &inst.regulations;
    let mut out = Vec::new();
    if !g.shortest_km.is_finite() {
        return out;
    }
    let start = Label::initial(g);
    if !is_feasible(&start, g, reg, cfg) {
        return out;
    }
    let mut stack: Vec<Label> = station_options(&start, g, reg, cfg)
        .into_iter()
        .filter(|l| is_feasible(l, g, reg, cfg))
        .collect();
    while let Some(cur) = stack.pop() {
        for arc in &g.out[cur.node] {
            let Some(next) = extend_label(&cur, arc, reg, cfg) else {
                continue;
            };
            if next.node == g.destination {
                if is_feasible(&next, g, reg, cfg) {
                    if let Some(f) = finish(&next, g) {
                        if f.time <= reg.max_trip_h {
                            out.push(f);
                        }
                    }
                }
                continue;
            }
            stack.extend(
                station_options(&next, g, reg, cfg)
                    .into_iter()
                    .filter(|l| is_feasible(l, g, reg, cfg)),
            );
        }
    }
    out
}

/// Reference path set for one (OD pair, vehicle type).
pub fn exhaustive_paths(inst: &Instance, od: usize, vehicle: usize, cfg: &PathGenConfig) -> OdVehiclePaths {
    let q = &inst.od_pairs[od];
    let v = &inst.vehicle_types[vehicle];
    let nodes = inst.node_index();
    let g = SearchGraph::build(inst, nodes[q.origin.as_str()], nodes[q.destination.as_str()], v, cfg);
    let labels = enumerate_labels(&g, inst, cfg);
    OdVehiclePaths {
        od,
        vehicle,
        od_id: q.id.clone(),
        vehicle_id: v.id.clone(),
        shortest_km: g.shortest_km,
        paths: select_paths(&labels, &g, inst, cfg),
    }
}
