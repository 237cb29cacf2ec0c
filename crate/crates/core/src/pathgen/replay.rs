use crate::energy::{arc_energy, EnergyParams};
use crate::instance::{Instance, RegulationParams};

use super::{Path, PathGenConfig};

const TOL: f64 = 1e-6;

/// Outcome of driving a path forward event by event.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayReport {
    pub max_continuous_h: f64,
    pub driving_h: f64,
    pub min_battery_kwh: f64,
    pub final_battery_kwh: f64,
    pub time_h: f64,
    pub energy_kwh: f64,
    pub charging_stops: usize,
    pub violations: Vec<String>,
}

impl ReplayReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

struct Rest<'a> {
    reg: &'a RegulationParams,
    continuous: f64,
    split: bool,
    max_continuous: f64,
}

impl Rest<'_> {
    fn drive(&mut self, h: f64) {
        self.continuous += h;
        self.max_continuous = self.max_continuous.max(self.continuous);
    }

    fn pause(&mut self, h: f64) {
        if h >= self.reg.break_h - TOL || (self.split && h >= self.reg.split_second_h - TOL) {
            self.continuous = 0.0;
            self.split = false;
        } else if h >= self.reg.split_first_h - TOL {
            self.split = true;
        }
    }
}

/// Re-drive a path from its recorded arcs, breaks and charging stops and
/// check every regulation along the way.
pub fn replay_path(inst: &Instance, od: usize, vehicle: usize, path: &Path, cfg: &PathGenConfig) -> ReplayReport {
    let reg = &inst.regulations;
    let v = &inst.vehicle_types[vehicle];
    let q = &inst.od_pairs[od];
    let zones = inst.station_zones();
    let params = EnergyParams::for_vehicle(v, &inst.energy, 400.0);
    let mut violations = Vec::new();
    let mut rest = Rest { reg, continuous: 0.0, split: false, max_continuous: 0.0 };
    let mut battery = v.departure_energy_kwh();
    let mut min_battery = battery;
    let (mut time, mut driving, mut energy) = (0.0, 0.0, 0.0);
    let mut node = q.origin.as_str();
    let mut charging_stops = 0;

    for pos in 0..=path.arcs.len() {
        for s in path.stops.iter().filter(|s| s.arc_pos == pos) {
            let st = &inst.stations[s.station];
            if st.node != node {
                violations.push(format!("stop at {} while at node {node}", st.node));
            }
            if s.charge_h > 0.0 {
                charging_stops += 1;
                battery += s.charge_h * inst.power_zones[zones[s.station]].charger_kw;
                if battery > v.battery_kwh() + TOL {
                    violations.push(format!("battery overfilled at {}", st.id));
                }
            }
            time += s.charge_h.max(s.break_h);
            rest.pause(s.break_h);
        }
        let Some(&ai) = path.arcs.get(pos) else { break };
        let arc = &inst.network.arcs[ai];
        if arc.tail != node {
            violations.push(format!("arc {ai} does not start at {node}"));
        }
        let t = arc.travel_time_h();
        if arc.is_ferry() {
            if cfg.ferry_counts_as_break {
                rest.pause(t);
            }
        } else {
            let mut done = 0.0;
            for b in path.road_breaks.iter().filter(|b| b.arc_pos == pos) {
                rest.drive(b.offset_h - done);
                rest.pause(b.break_h);
                time += b.break_h;
                done = b.offset_h;
            }
            rest.drive(t - done);
            driving += t;
        }
        time += t;
        let e = arc_energy(arc, &params);
        energy += e;
        battery -= e;
        min_battery = min_battery.min(battery);
        node = arc.head.as_str();
    }

    if node != q.destination {
        violations.push(format!("path ends at {node}, not {}", q.destination));
    }
    if rest.max_continuous > reg.continuous_driving_h + TOL {
        violations.push(format!("{:.3} h driven without a break", rest.max_continuous));
    }
    if driving > reg.daily_driving_h + TOL {
        violations.push(format!("{driving:.3} h of driving exceeds the daily cap"));
    }
    if min_battery < -TOL {
        violations.push(format!("battery falls to {min_battery:.3} kWh"));
    }
    if battery < v.arrival_reserve_kwh() - TOL {
        violations.push(format!("arrives with {battery:.3} kWh, below the reserve"));
    }
    if charging_stops > cfg.max_charging_stops as usize {
        violations.push(format!("{charging_stops} charging stops exceed the cap"));
    }
    if charging_stops != path.stations.len() {
        violations.push("charging stops do not match the station sequence".into());
    }
    if time > reg.max_trip_h + TOL {
        violations.push(format!("trip takes {time:.3} h"));
    }
    if (time - path.time_h).abs() > TOL {
        violations.push(format!("replayed time {time} differs from recorded {}", path.time_h));
    }
    if (energy - path.energy_kwh).abs() > TOL {
        violations.push(format!("replayed energy {energy} differs from recorded {}", path.energy_kwh));
    }
    ReplayReport {
        max_continuous_h: rest.max_continuous,
        driving_h: driving,
        min_battery_kwh: min_battery,
        final_battery_kwh: battery,
        time_h: time,
        energy_kwh: energy,
        charging_stops,
        violations,
    }
}
