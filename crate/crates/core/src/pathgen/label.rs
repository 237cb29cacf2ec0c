use std::rc::Rc;

use crate::instance::RegulationParams;

use super::graph::{SearchArc, SearchGraph};
use super::{ChargePolicy, PathGenConfig};

/// Something that happened along a partial route, kept for replay.
#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    /// An arc was driven. `breaks` holds (driving hours into the arc, break
    /// length) for every break forced while on it.
    Arc { arc: usize, head: usize, breaks: Vec<(f64, f64)> },
    /// A stop at a station node. `charge` marks a charging stop whose amount
    /// is settled later by a `Settle` event.
    Stop { node: usize, station: usize, charge: bool, break_h: f64 },
    /// Charging hours finally delivered at an earlier charging stop.
    Settle { station: usize, hours: f64 },
}

#[derive(Debug)]
pub struct Trail {
    pub event: Event,
    pub prev: Option<Rc<Trail>>,
}

pub fn trail_events(trail: &Option<Rc<Trail>>) -> Vec<Event> {
    let mut out = Vec::new();
    let mut cur = trail.clone();
    while let Some(t) = cur {
        out.push(t.event.clone());
        cur = t.prev.clone();
    }
    out.reverse();
    out
}

/// Charging stop whose amount is not yet known: the truck is treated as if
/// it left with a full battery, and the energy actually needed is settled at
/// the next charging stop or at the destination.
#[derive(Debug, Clone, PartialEq)]
pub struct Pending {
    pub station: usize,
    pub arrival_kwh: f64,
    pub break_h: f64,
    pub used_kwh: f64,
    pub charger_kw: f64,
}

impl Pending {
    /// Energy that must be charged if the truck arrives empty at the next
    /// charge point.
    fn deficit(&self) -> f64 {
        self.used_kwh - self.arrival_kwh
    }

    /// Deficit net of what the break already paid for in time.
    fn time_deficit(&self) -> f64 {
        self.deficit() - self.break_h * self.charger_kw
    }

    /// Hours still to be added to effective time if `extra_kwh` more must be
    /// on board at the next charge point.
    fn extra_hours(&self, extra_kwh: f64) -> f64 {
        ((self.time_deficit() + extra_kwh) / self.charger_kw).max(0.0)
    }

    fn charge_hours(&self, extra_kwh: f64) -> f64 {
        ((self.deficit() + extra_kwh) / self.charger_kw).max(0.0)
    }
}

#[derive(Debug, Clone)]
pub struct Label {
    pub node: usize,
    pub time: f64,
    pub driving: f64,
    pub since_break: f64,
    pub split_credit: bool,
    /// Battery in kWh; while a charge is pending this assumes the pending stop
    /// filled the battery.
    pub battery: f64,
    pub stops: u32,
    /// Settled charging hours per station, in visit order.
    pub charges: Vec<(usize, f64)>,
    pub pending: Option<Pending>,
    pub distance: f64,
    pub energy: f64,
    /// Nodes seen since the last charging stop.
    pub visited: Vec<u64>,
    pub trail: Option<Rc<Trail>>,
}

fn bit_test(bits: &[u64], i: usize) -> bool {
    bits[i / 64] >> (i % 64) & 1 == 1
}

fn bit_set(bits: &mut [u64], i: usize) {
    bits[i / 64] |= 1 << (i % 64);
}

fn bits_subset(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x & !y == 0)
}

impl Label {
    pub fn initial(g: &SearchGraph) -> Label {
        let mut visited = vec![0u64; g.node_count().div_ceil(64)];
        bit_set(&mut visited, g.origin);
        Label {
            node: g.origin,
            time: 0.0,
            driving: 0.0,
            since_break: 0.0,
            split_credit: false,
            battery: g.departure_kwh,
            stops: 0,
            charges: Vec::new(),
            pending: None,
            distance: 0.0,
            energy: 0.0,
            visited,
            trail: None,
        }
    }

    fn push(&mut self, event: Event) {
        self.trail = Some(Rc::new(Trail { event, prev: self.trail.take() }));
    }

    /// Effective time including the least charging still owed.
    pub fn time_lower(&self) -> f64 {
        self.time + self.pending.as_ref().map_or(0.0, |p| p.extra_hours(0.0))
    }

    fn has_charged_at(&self, station: usize) -> bool {
        self.charges.iter().any(|c| c.0 == station)
            || self.pending.as_ref().is_some_and(|p| p.station == station)
    }

    fn charge_at(&self, station: usize) -> f64 {
        self.charges.iter().find(|c| c.0 == station).map_or(0.0, |c| c.1)
    }

    /// Close the pending stop given the energy that must be on board when the
    /// truck reaches the current point, then return the real battery level.
    fn settle(&mut self, extra_kwh: f64) {
        if let Some(p) = self.pending.take() {
            let hours = p.charge_hours(extra_kwh);
            self.time += p.extra_hours(extra_kwh);
            if hours > 0.0 {
                self.charges.push((p.station, hours));
            } else {
                self.stops -= 1;
            }
            self.battery = p.arrival_kwh + hours * p.charger_kw - p.used_kwh;
            self.push(Event::Settle { station: p.station, hours });
        }
    }
}

fn break_length(credit: bool, reg: &RegulationParams) -> f64 {
    if credit {
        reg.split_second_h
    } else {
        reg.break_h
    }
}

/// Drive one arc. Breaks are inserted where the continuous-driving cap would
/// otherwise be exceeded. Returns `None` if the battery runs out or the node
/// was already seen since the last charging stop.
pub fn extend_label(l: &Label, arc: &SearchArc, reg: &RegulationParams, cfg: &PathGenConfig) -> Option<Label> {
    if bit_test(&l.visited, arc.head) {
        return None;
    }
    let mut n = l.clone();
    let mut breaks = Vec::new();
    if arc.ferry {
        n.time += arc.time_h;
        if cfg.ferry_counts_as_break && arc.time_h >= reg.break_h {
            n.since_break = 0.0;
            n.split_credit = false;
        }
    } else {
        let mut left = arc.time_h;
        let mut into = 0.0;
        while n.since_break + left > reg.continuous_driving_h {
            let part = reg.continuous_driving_h - n.since_break;
            into += part;
            left -= part;
            let b = break_length(n.split_credit, reg);
            breaks.push((into, b));
            n.time += b;
            n.since_break = 0.0;
            n.split_credit = false;
        }
        n.since_break += left;
        n.time += arc.time_h;
        n.driving += arc.time_h;
    }
    n.battery -= arc.energy_kwh;
    if let Some(p) = n.pending.as_mut() {
        p.used_kwh += arc.energy_kwh;
    }
    if n.battery < 0.0 {
        return None;
    }
    n.distance += arc.length_km;
    n.energy += arc.energy_kwh;
    n.node = arc.head;
    bit_set(&mut n.visited, arc.head);
    n.push(Event::Arc { arc: arc.index, head: arc.head, breaks });
    Some(n)
}

/// Choices available on arrival at a station node: pass through (with or
/// without the short split break) or stop to charge with no break, the short
/// split break, or a full break overlapping the charge.
pub fn station_options(l: &Label, g: &SearchGraph, reg: &RegulationParams, cfg: &PathGenConfig) -> Vec<Label> {
    let Some(station) = g.station[l.node] else {
        return vec![l.clone()];
    };
    let mut out = vec![l.clone()];
    if !l.split_credit && l.since_break > 0.0 {
        let mut s = l.clone();
        s.time += reg.split_first_h;
        s.split_credit = true;
        s.push(Event::Stop { node: l.node, station, charge: false, break_h: reg.split_first_h });
        out.push(s);
    }
    if l.has_charged_at(station) || l.stops >= cfg.max_charging_stops {
        return out;
    }
    let mut breaks = vec![0.0];
    if !l.split_credit && l.since_break > 0.0 {
        breaks.push(reg.split_first_h);
    }
    if l.since_break > 0.0 {
        breaks.push(break_length(l.split_credit, reg));
    }
    let kw = g.station_kw[station];
    for (k, &b) in breaks.iter().enumerate() {
        let mut c = l.clone();
        c.settle(0.0);
        let full_break = k > 0 && k == breaks.len() - 1;
        if full_break {
            c.since_break = 0.0;
            c.split_credit = false;
        } else if b > 0.0 {
            c.split_credit = true;
        }
        c.stops += 1;
        c.push(Event::Stop { node: l.node, station, charge: true, break_h: b });
        match cfg.charge_policy {
            ChargePolicy::JustEnough => {
                c.time += b;
                c.pending = Some(Pending {
                    station,
                    arrival_kwh: c.battery,
                    break_h: b,
                    used_kwh: 0.0,
                    charger_kw: kw,
                });
                c.battery = g.battery_kwh;
            }
            ChargePolicy::Full => {
                let hours = (g.battery_kwh - c.battery) / kw;
                if hours <= 0.0 {
                    continue;
                }
                c.time += hours.max(b);
                c.battery = g.battery_kwh;
                c.charges.push((station, hours));
                c.push(Event::Settle { station, hours });
            }
        }
        c.visited.iter_mut().for_each(|w| *w = 0);
        bit_set(&mut c.visited, l.node);
        out.push(c);
    }
    out
}

/// Close the label at the destination. Fails if the arrival reserve cannot
/// be met.
pub fn finish(l: &Label, g: &SearchGraph) -> Option<Label> {
    // Before settling, the battery assumes the pending stop filled it up, so
    // this is the most the truck can have on arrival.
    if l.battery < g.reserve_kwh - 1e-9 {
        return None;
    }
    let mut f = l.clone();
    f.settle(g.reserve_kwh);
    Some(f)
}

/// Caps that every partial route must respect, with lower bounds on what is
/// still left to drive.
pub fn is_feasible(l: &Label, g: &SearchGraph, reg: &RegulationParams, cfg: &PathGenConfig) -> bool {
    l.battery >= 0.0
        && l.since_break <= reg.continuous_driving_h
        && l.driving + g.lb_driving[l.node] <= reg.daily_driving_h
        && l.time_lower() + g.lb_time[l.node] <= reg.max_trip_h
        && l.stops <= cfg.max_charging_stops
        && l.battery >= g.lb_energy[l.node]
}

/// `a` is at least as good as `b` on every resource. With `strict`, it must
/// also be better on at least one.
pub fn dominates(a: &Label, b: &Label, strict: bool) -> bool {
    if a.node != b.node
        || a.time > b.time
        || a.driving > b.driving
        || a.since_break > b.since_break
        || (b.split_credit && !a.split_credit)
        || a.battery < b.battery
        || a.stops > b.stops
        || !bits_subset(&a.visited, &b.visited)
    {
        return false;
    }
    let pend = match (&a.pending, &b.pending) {
        (None, None) => Some(false),
        (Some(pa), Some(pb)) if pa.station == pb.station => {
            if pa.deficit() > pb.deficit() || pa.time_deficit() > pb.time_deficit() {
                None
            } else {
                Some(pa.deficit() < pb.deficit() || pa.time_deficit() < pb.time_deficit())
            }
        }
        _ => None,
    };
    let Some(pend_strict) = pend else {
        return false;
    };
    let mut charge_strict = a.charges.len() < b.charges.len();
    for &(s, h) in &a.charges {
        let hb = b.charge_at(s);
        if h > hb {
            return false;
        }
        charge_strict |= h < hb;
    }
    if !strict {
        return true;
    }
    a.time < b.time
        || a.driving < b.driving
        || a.since_break < b.since_break
        || (a.split_credit && !b.split_credit)
        || a.battery > b.battery
        || a.stops < b.stops
        || pend_strict
        || charge_strict
        || a.visited != b.visited
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(reserve: f64) -> SearchGraph {
        SearchGraph {
            origin: 0,
            destination: 1,
            out: vec![Vec::new(); 2],
            allowed: vec![true; 2],
            station: vec![None; 2],
            station_kw: vec![100.0],
            lb_time: vec![0.0; 2],
            lb_driving: vec![0.0; 2],
            lb_energy: vec![0.0; 2],
            shortest_km: 0.0,
            battery_kwh: 300.0,
            departure_kwh: 300.0,
            reserve_kwh: reserve,
        }
    }

    fn pending(used: f64) -> Label {
        let mut l = Label::initial(&graph(45.0));
        l.stops = 1;
        l.pending = Some(Pending { station: 0, arrival_kwh: 10.0, break_h: 0.0, used_kwh: used, charger_kw: 100.0 });
        l.battery = 300.0 - used;
        l
    }

    #[test]
    fn pending_charge_tops_up_to_the_reserve() {
        let f = finish(&pending(200.0), &graph(45.0)).unwrap();
        assert!((f.battery - 45.0).abs() < 1e-9);
        assert_eq!(f.charges, vec![(0, 2.35)]);
    }

    #[test]
    fn reserve_beyond_a_full_battery_is_rejected() {
        // Would need 10 + 290 kWh charged onto a 300 kWh battery.
        assert!(finish(&pending(280.0), &graph(45.0)).is_none());
    }
}
