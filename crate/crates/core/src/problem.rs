//! Index tables shared by the monolithic model and the decomposition.

use serde::{Deserialize, Serialize};

use crate::error::DecompError;
use crate::instance::Instance;
use crate::pathgen::PathSet;
use crate::scenario::ScenarioSet;

/// One path of one (OD pair, vehicle type) with the stations it charges at.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRef {
    pub q: usize,
    pub v: usize,
    pub h: usize,
    pub visits: Vec<(usize, f64)>,
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub inst: Instance,
    pub scen: ScenarioSet,
    pub n_stations: usize,
    pub n_periods: usize,
    /// |T₁|; second-stage periods are `t1..n_periods`.
    pub t1: usize,
    pub paths: Vec<PathRef>,
    /// Indices into `paths` per (q, v).
    pub by_qv: Vec<Vec<Vec<usize>>>,
    /// (path index, U) for every path charging at a station.
    pub visits: Vec<Vec<(usize, f64)>>,
    pub zone: Vec<usize>,
    pub exempt: Vec<bool>,
    /// Stations counted against each zone limit.
    pub zone_members: Vec<Vec<usize>>,
    pub capacity: Vec<u32>,
    pub preplanned: Vec<Vec<u32>>,
    /// F^MAX per station and scenario.
    pub fmax: Vec<Vec<f64>>,
    /// Bound on all chargers ever built at a station: the most chargers any
    /// scenario can use plus the committed ones.
    pub charger_bound: Vec<u32>,
}

/// Flat position of each first-stage quantity in a point vector:
/// x̃ for every period, then z̃ and w̃ for the first stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layout {
    pub n_stations: usize,
    pub n_periods: usize,
    pub t1: usize,
}

impl Layout {
    pub fn x(&self, i: usize, t: usize) -> usize {
        i * self.n_periods + t
    }

    pub fn z(&self, i: usize, t: usize) -> usize {
        self.n_stations * self.n_periods + i * self.t1 + t
    }

    pub fn w(&self, t: usize) -> usize {
        self.n_stations * (self.n_periods + self.t1) + t
    }

    pub fn len(&self) -> usize {
        self.n_stations * (self.n_periods + self.t1) + self.t1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn f_max(visits: &[(usize, f64)], paths: &[PathRef], scen: &ScenarioSet, s: usize) -> f64 {
    let mut best: Vec<((usize, usize), f64)> = Vec::new();
    for &(p, u) in visits {
        let key = (paths[p].q, paths[p].v);
        match best.iter_mut().find(|e| e.0 == key) {
            Some(e) => e.1 = e.1.max(u),
            None => best.push((key, u)),
        }
    }
    best.iter()
        .map(|&((q, v), u)| {
            let peak = (0..scen.periods).map(|t| scen.flow(s, q, v, t)).fold(0.0, f64::max);
            u * peak
        })
        .sum()
}

fn bound_from(fmax: &[Vec<f64>], inst: &Instance) -> Vec<u32> {
    fmax.iter()
        .zip(&inst.stations)
        .map(|(f, st)| {
            let peak = f.iter().map(|f| (f - 1e-9).ceil().max(0.0) as u32).max().unwrap_or(0);
            peak + st.preplanned_total()
        })
        .collect()
}

impl Problem {
    pub fn new(inst: &Instance, paths: &PathSet, scen: &ScenarioSet) -> Result<Problem, DecompError> {
        paths.check(inst).map_err(DecompError::Input)?;
        scen.check(inst).map_err(|e| DecompError::Input(e.to_string()))?;
        let n_stations = inst.stations.len();
        let nq = inst.od_pairs.len();
        let nv = inst.vehicle_types.len();
        let mut refs = Vec::new();
        let mut by_qv = vec![vec![Vec::new(); nv]; nq];
        let mut visits = vec![Vec::new(); n_stations];
        for e in &paths.entries {
            for (h, path) in e.paths.iter().enumerate() {
                let p = refs.len();
                let vs: Vec<(usize, f64)> = path.stations.iter().copied().zip(path.utilization.iter().copied()).collect();
                for &(i, u) in &vs {
                    visits[i].push((p, u));
                }
                by_qv[e.od][e.vehicle].push(p);
                refs.push(PathRef { q: e.od, v: e.vehicle, h, visits: vs });
            }
        }
        let zone = inst.station_zones();
        let exempt: Vec<bool> = inst.stations.iter().map(|s| s.grid_exempt()).collect();
        let mut zone_members = vec![Vec::new(); inst.power_zones.len()];
        for i in 0..n_stations {
            if !exempt[i] {
                zone_members[zone[i]].push(i);
            }
        }
        let fmax: Vec<Vec<f64>> =
            (0..n_stations).map(|i| (0..scen.count()).map(|s| f_max(&visits[i], &refs, scen, s)).collect()).collect();
        let charger_bound = bound_from(&fmax, inst);
        Ok(Problem {
            inst: inst.clone(),
            scen: scen.clone(),
            n_stations,
            n_periods: inst.horizon.len(),
            t1: inst.horizon.first_stage_len,
            paths: refs,
            by_qv,
            visits,
            zone,
            exempt,
            zone_members,
            capacity: inst.stations.iter().map(|s| s.max_chargers).collect(),
            preplanned: inst.stations.iter().map(|s| s.preplanned.clone()).collect(),
            fmax,
            charger_bound,
        })
    }

    /// Same instance and paths with another scenario set.
    pub fn with_scenarios(&self, scen: &ScenarioSet) -> Result<Problem, DecompError> {
        scen.check(&self.inst).map_err(|e| DecompError::Input(e.to_string()))?;
        let fmax: Vec<Vec<f64>> = (0..self.n_stations)
            .map(|i| (0..scen.count()).map(|s| f_max(&self.visits[i], &self.paths, scen, s)).collect())
            .collect();
        let charger_bound = bound_from(&fmax, &self.inst);
        Ok(Problem { scen: scen.clone(), fmax, charger_bound, ..self.clone() })
    }

    pub fn layout(&self) -> Layout {
        Layout { n_stations: self.n_stations, n_periods: self.n_periods, t1: self.t1 }
    }

    pub fn scenarios(&self) -> usize {
        self.scen.count()
    }

    pub fn second_stage(&self) -> std::ops::Range<usize> {
        self.t1..self.n_periods
    }

    pub fn prep_cost(&self, i: usize, t: usize) -> f64 {
        self.inst.stations[i].prep_cost[t]
    }

    pub fn charger_cost(&self, i: usize, t: usize) -> f64 {
        self.inst.stations[i].charger_cost[t]
    }

    pub fn budget(&self, t: usize) -> f64 {
        self.inst.horizon.budgets[t]
    }

    pub fn carryover(&self) -> f64 {
        self.inst.horizon.carryover
    }

    /// B_t plus the cost of committed chargers, which the budget rows put on the
    /// right-hand side.
    pub fn budget_rhs(&self, t: usize) -> f64 {
        self.budget(t) + (0..self.n_stations).map(|i| self.charger_cost(i, t) * self.preplanned[i][t] as f64).sum::<f64>()
    }

    /// Committed chargers at a station over the second stage.
    pub fn committed_late(&self, i: usize) -> u32 {
        self.preplanned[i][self.t1..].iter().sum()
    }

    /// Last period by which a station with committed second-stage chargers
    /// must be prepared.
    pub fn committed_deadline(&self, i: usize) -> Option<usize> {
        (self.t1..self.n_periods).find(|&t| self.preplanned[i][t] > 0)
    }

    pub fn first_flow(&self, q: usize, v: usize, t: usize) -> f64 {
        self.scen.first_demand[q][v][t]
    }

    pub fn flow(&self, s: usize, q: usize, v: usize, t: usize) -> f64 {
        self.scen.flow(s, q, v, t)
    }

    /// Bound on θ^s: all second-stage demand of a scenario.
    pub fn recourse_bound(&self, s: usize) -> f64 {
        self.scen.demand[s].iter().flatten().flatten().sum()
    }

    /// Unused first-stage budget implied by preparations and chargers.
    pub fn first_slack(&self, x: &[Vec<u8>], z: &[Vec<u32>]) -> Vec<f64> {
        let a = self.carryover();
        let mut w = Vec::with_capacity(self.t1);
        for t in 0..self.t1 {
            let spend: f64 = (0..self.n_stations)
                .map(|i| self.prep_cost(i, t) * x[i][t] as f64 + self.charger_cost(i, t) * z[i][t] as f64)
                .sum();
            let prev = if t == 0 { 0.0 } else { a * w[t - 1] };
            w.push(self.budget_rhs(t) + prev - spend);
        }
        w
    }

    /// Second-stage budget left if only committed chargers are built. It is
    /// the same in every scenario and must stay nonnegative.
    pub fn reserve_slack(&self, x: &[Vec<u8>], w_last: f64) -> Vec<f64> {
        let a = self.carryover();
        let mut prev = w_last;
        self.second_stage()
            .map(|t| {
                let spend: f64 = (0..self.n_stations).map(|i| self.prep_cost(i, t) * x[i][t] as f64).sum();
                prev = self.budget(t) + a * prev - spend;
                prev
            })
            .collect()
    }
}

/// x̃, z̃ and w̃. The charger bits b̃ follow from z̃.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstStageSolution {
    /// x̃[i][t] over all periods.
    pub x: Vec<Vec<u8>>,
    /// z̃[i][t] over first-stage periods.
    pub z: Vec<Vec<u32>>,
    /// w̃[t] over first-stage periods.
    pub w: Vec<f64>,
}

impl FirstStageSolution {
    /// Fill in w̃ from the budget equations.
    pub fn complete(prob: &Problem, x: Vec<Vec<u8>>, z: Vec<Vec<u32>>) -> FirstStageSolution {
        let w = prob.first_slack(&x, &z);
        FirstStageSolution { x, z, w }
    }

    pub fn zero(prob: &Problem) -> FirstStageSolution {
        let x = vec![vec![0; prob.n_periods]; prob.n_stations];
        let z = vec![vec![0; prob.t1]; prob.n_stations];
        FirstStageSolution::complete(prob, x, z)
    }

    /// Read a point vector, rounding the integer parts.
    pub fn from_point(prob: &Problem, point: &[f64]) -> FirstStageSolution {
        let l = prob.layout();
        let x = (0..prob.n_stations)
            .map(|i| (0..prob.n_periods).map(|t| (point[l.x(i, t)].round().max(0.0)) as u8).collect())
            .collect();
        let z = (0..prob.n_stations)
            .map(|i| (0..prob.t1).map(|t| (point[l.z(i, t)].round().max(0.0)) as u32).collect())
            .collect();
        let w = (0..prob.t1).map(|t| point[l.w(t)]).collect();
        FirstStageSolution { x, z, w }
    }

    pub fn to_point(&self, prob: &Problem) -> Vec<f64> {
        let l = prob.layout();
        let mut p = vec![0.0; l.len()];
        for i in 0..prob.n_stations {
            for t in 0..prob.n_periods {
                p[l.x(i, t)] = self.x[i][t] as f64;
            }
            for t in 0..prob.t1 {
                p[l.z(i, t)] = self.z[i][t] as f64;
            }
        }
        for t in 0..prob.t1 {
            p[l.w(t)] = self.w[t];
        }
        p
    }

    /// b̃[i][t][k] = 1 for the first z̃_it chargers.
    pub fn binarization(&self, capacity: &[u32]) -> Vec<Vec<Vec<u8>>> {
        self.z
            .iter()
            .zip(capacity)
            .map(|(zi, &k)| zi.iter().map(|&z| (0..k).map(|j| u8::from(j < z)).collect()).collect())
            .collect()
    }

    pub fn prepared(&self, i: usize) -> bool {
        self.x[i].iter().any(|&v| v == 1)
    }

    pub fn total_chargers(&self, i: usize) -> u32 {
        self.z[i].iter().sum()
    }

    /// Key for caching subproblem results; w̃ follows from x̃ and z̃.
    pub fn key(&self) -> Vec<u32> {
        self.x.iter().flatten().map(|&v| v as u32).chain(self.z.iter().flatten().copied()).collect()
    }

    pub fn digest(&self) -> String {
        let mut h: u64 = 0xcbf29ce484222325;
        for v in self.key() {
            for b in v.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        }
        format!("{h:016x}")
    }

    /// Master constraints that involve only x̃, z̃ and w̃. With `bounds`,
    /// also the charger bounds and the induced constraints.
    pub fn check(&self, prob: &Problem, bounds: bool) -> Result<(), String> {
        let (n, tt, t1) = (prob.n_stations, prob.n_periods, prob.t1);
        if self.x.len() != n || self.z.len() != n || self.w.len() != t1 {
            return Err("first-stage dimensions do not match the instance".into());
        }
        if self.x.iter().any(|r| r.len() != tt) || self.z.iter().any(|r| r.len() != t1) {
            return Err("first-stage dimensions do not match the horizon".into());
        }
        let tol = 1e-6;
        for i in 0..n {
            let id = &prob.inst.stations[i].id;
            if self.x[i].iter().any(|&v| v > 1) || self.x[i].iter().map(|&v| v as u32).sum::<u32>() > 1 {
                return Err(format!("station {id} prepared more than once"));
            }
            let mut cum = 0;
            let mut open = 0;
            for t in 0..t1 {
                cum += self.z[i][t];
                open += self.x[i][t] as u32;
                if cum > prob.capacity[i] * open {
                    return Err(format!("station {id} exceeds its space in period {t}"));
                }
                if self.z[i][t] < prob.preplanned[i][t] {
                    return Err(format!("station {id} builds fewer than the committed chargers in period {t}"));
                }
            }
            if let Some(d) = prob.committed_deadline(i) {
                if !self.x[i][..=d].contains(&1) {
                    return Err(format!("station {id} is not prepared before its committed chargers"));
                }
                if cum + prob.committed_late(i) > prob.capacity[i] {
                    return Err(format!("station {id} has no room for its committed chargers"));
                }
            }
            if bounds && cum + prob.committed_late(i) > prob.charger_bound[i] * self.prepared(i) as u32 {
                return Err(format!("station {id} exceeds the useful charger bound"));
            }
        }
        for (r, members) in prob.zone_members.iter().enumerate() {
            let mut cum = 0;
            for t in 0..t1 {
                cum += members.iter().map(|&i| self.z[i][t]).sum::<u32>();
                if cum > prob.scen.first_limits[r][t] {
                    return Err(format!("zone {} over its limit in period {t}", prob.inst.power_zones[r].id));
                }
            }
        }
        let w = prob.first_slack(&self.x, &self.z);
        for t in 0..t1 {
            if w[t] < -tol {
                return Err(format!("budget exceeded in period {t}"));
            }
            if (w[t] - self.w[t]).abs() > tol * (1.0 + w[t].abs()) {
                return Err(format!("unused budget in period {t} is inconsistent"));
            }
        }
        let last = if t1 > 0 { self.w[t1 - 1] } else { 0.0 };
        if prob.reserve_slack(&self.x, last).iter().any(|&r| r < -tol) {
            return Err("later preparations overrun the second-stage budget".into());
        }
        Ok(())
    }
}
