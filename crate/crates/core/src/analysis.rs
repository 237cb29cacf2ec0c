//! Post-solve analyses: value of the stochastic solution, budget sweeps with
//! coverage elasticities, detour histograms and CO₂ accounting.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{AnalysisError, DecompError};
use crate::lshaped::{branch_and_cut, evaluate_first_stage, relative_gap, Evaluation, LShapedOptions};
use crate::mipcore::deterministic::{build_deterministic_equivalent, extract_first_stage, DeOptions};
use crate::mipcore::{SolveOptions, SolverOracle};
use crate::pathgen::PathSet;
use crate::problem::{FirstStageSolution, Problem};
use crate::scenario::expected_value_scenario;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VssReport {
    pub z_sp: f64,
    pub ub_sp: f64,
    pub z_eev: f64,
    pub lower: f64,
    pub upper: f64,
    pub ev_gap: f64,
    pub sp_gap: f64,
    /// A solve stopped on a time or node limit.
    pub limit_affected: bool,
    /// All scenarios coincide, so the EV problem is the stochastic problem.
    pub degenerate: bool,
    pub ev_solution: FirstStageSolution,
    pub sp_solution: FirstStageSolution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VssOptions {
    pub ev_gap: f64,
    pub ev_time_limit_s: Option<f64>,
    pub sp: LShapedOptions,
}

impl Default for VssOptions {
    fn default() -> Self {
        VssOptions { ev_gap: 0.01, ev_time_limit_s: None, sp: LShapedOptions::default() }
    }
}

fn degenerate(prob: &Problem) -> bool {
    let sc = &prob.scen;
    (1..sc.count()).all(|s| sc.demand[s] == sc.demand[0] && sc.limits[s] == sc.limits[0])
}

fn ratio(num: f64, den: f64) -> f64 {
    if den.abs() <= 1e-12 {
        0.0
    } else {
        num / den
    }
}

/// Solve the expected-value problem, evaluate its first stage under every
/// scenario, solve the stochastic problem, and bound the VSS from both sides.
pub fn vss(prob: &Problem, oracle: &dyn SolverOracle, opts: &VssOptions) -> Result<VssReport, DecompError> {
    let sp = branch_and_cut(prob, oracle, &opts.sp)?;
    let degenerate = degenerate(prob);
    let (ev_solution, ev_gap, ev_limited) = if degenerate {
        (sp.solution.clone(), sp.log.gap, sp.log.status != "optimal")
    } else {
        let ev = prob.with_scenarios(&expected_value_scenario(&prob.scen))?;
        let de = build_deterministic_equivalent(&ev, &DeOptions::default());
        let so = SolveOptions { rel_gap: opts.ev_gap, time_limit_s: opts.ev_time_limit_s, ..SolveOptions::default() };
        let r = oracle.solve(&de, &so)?;
        let limited = r.status != crate::mipcore::SolveStatus::Optimal;
        let gap = r.gap();
        let r = r.into_solution()?;
        (extract_first_stage(&de, &ev, &r.x)?, gap, limited)
    };
    let eev = evaluate_first_stage(prob, &ev_solution, oracle, opts.sp.threads)?.objective;
    // The EV first stage is feasible, so it is a valid lower bound as well.
    let z_sp = if degenerate { sp.log.lb } else { sp.log.lb.max(eev) };
    let z_eev = if degenerate { z_sp } else { eev };
    let ub_sp = sp.log.ub.max(z_sp);
    Ok(VssReport {
        z_sp,
        ub_sp,
        z_eev,
        lower: ratio(z_sp - z_eev, z_sp),
        upper: ratio(ub_sp - z_eev, ub_sp),
        ev_gap,
        sp_gap: relative_gap(z_sp, ub_sp),
        limit_affected: ev_limited || sp.log.status != "optimal",
        degenerate,
        ev_solution,
        sp_solution: sp.solution,
    })
}

/// Coverage–budget elasticity between two sweep points.
pub fn elasticity(d_i: f64, d_j: f64, b_i: f64, b_j: f64) -> Result<f64, AnalysisError> {
    if !(d_i.is_finite() && d_j.is_finite() && b_i.is_finite() && b_j.is_finite()) {
        return Err(AnalysisError::Degenerate("inputs must be finite".into()));
    }
    if b_j == b_i {
        return Err(AnalysisError::Degenerate("budgets are equal".into()));
    }
    if d_i + d_j <= 0.0 {
        return Err(AnalysisError::Degenerate("no coverage at either point".into()));
    }
    if b_i + b_j <= 0.0 {
        return Err(AnalysisError::Degenerate("both budgets are zero".into()));
    }
    Ok((d_j - d_i) / (d_j + d_i) * ((b_j + b_i) / (b_j - b_i)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    /// Budget change per period; `None` drops the budget limit.
    pub delta: Option<f64>,
    /// Mean budget per period after the change.
    pub budget: Option<f64>,
    /// Expected covered vehicles per hour, summed over periods.
    pub covered: f64,
    /// `covered` over expected total demand.
    pub share: f64,
    pub stations: usize,
    pub chargers: u32,
    /// Proven upper bound on coverage.
    pub bound: f64,
    pub gap: f64,
    pub status: String,
    pub error: Option<String>,
    pub solution: Option<FirstStageSolution>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub points: Vec<SweepPoint>,
    /// Between each point and the next; `None` where undefined.
    pub elasticities: Vec<Option<f64>>,
    /// Stations prepared in the first stage at every budget level.
    pub no_regrets: Vec<String>,
}

/// Budgets shifted by `delta` per period and floored at zero, or large enough
/// to build everything.
pub fn shifted_budgets(prob: &Problem, delta: Option<f64>) -> Vec<f64> {
    let base = &prob.inst.horizon.budgets;
    match delta {
        Some(d) => base.iter().map(|b| (b + d).max(0.0)).collect(),
        None => {
            let all: f64 = prob
                .inst
                .stations
                .iter()
                .map(|s| {
                    let prep = s.prep_cost.iter().copied().fold(0.0, f64::max);
                    let ch = s.charger_cost.iter().copied().fold(0.0, f64::max);
                    prep + ch * s.max_chargers as f64
                })
                .sum();
            vec![all + 1.0; base.len()]
        }
    }
}

fn with_budgets(prob: &Problem, budgets: Vec<f64>) -> Problem {
    let mut p = prob.clone();
    p.inst.horizon.budgets = budgets;
    p
}

/// A plan that fits a budget also fits any budget that is at least as large
/// in every period, so each point adopts a cheaper point's plan when that
/// covers more. Coverage then never drops as the budget grows.
fn carry_forward(prob: &Problem, deltas: &[Option<f64>], points: &mut [SweepPoint], oracle: &dyn SolverOracle) -> Result<(), DecompError> {
    let budgets: Vec<Vec<f64>> = deltas.iter().map(|&d| shifted_budgets(prob, d)).collect();
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| budgets[a].iter().sum::<f64>().total_cmp(&budgets[b].iter().sum::<f64>()));
    let total = prob.scen.expected_total_demand();
    for (k, &j) in order.iter().enumerate() {
        let p = with_budgets(prob, budgets[j].clone());
        for &i in &order[..k] {
            let fits = budgets[i].iter().zip(&budgets[j]).all(|(a, b)| a <= b);
            let Some(fs) = points[i].solution.clone() else { continue };
            if !fits || points[i].covered <= points[j].covered + 1e-9 {
                continue;
            }
            let fs = FirstStageSolution::complete(&p, fs.x, fs.z);
            if fs.check(&p, false).is_err() {
                continue;
            }
            let value = evaluate_first_stage(&p, &fs, oracle, 1)?.objective;
            if value > points[j].covered {
                let pt = &mut points[j];
                pt.covered = value;
                pt.share = ratio(value, total);
                pt.bound = pt.bound.max(value);
                pt.gap = relative_gap(value, pt.bound);
                pt.stations = (0..p.n_stations).filter(|&i| fs.x[i][..p.t1].contains(&1)).count();
                pt.chargers = fs.z.iter().flatten().sum();
                pt.solution = Some(fs);
            }
        }
    }
    Ok(())
}

/// Solve each budget variant. A failing point is recorded and the sweep
/// goes on.
pub fn budget_sweep(
    prob: &Problem,
    deltas: &[Option<f64>],
    oracle: &dyn SolverOracle,
    opts: &LShapedOptions,
    threads: usize,
) -> Result<SweepReport, DecompError> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build().map_err(|e| DecompError::Input(e.to_string()))?;
    let total = prob.scen.expected_total_demand();
    let inner = LShapedOptions { threads: 1, ..opts.clone() };
    let points: Vec<SweepPoint> = pool.install(|| {
        deltas
            .par_iter()
            .map(|&delta| {
                let budgets = shifted_budgets(prob, delta);
                let mean = budgets.iter().sum::<f64>() / budgets.len().max(1) as f64;
                let budget = delta.map(|_| mean);
                let p = with_budgets(prob, budgets);
                match branch_and_cut(&p, oracle, &inner) {
                    Ok(r) => {
                        let fs = r.solution;
                        let stations = (0..p.n_stations).filter(|&i| fs.x[i][..p.t1].contains(&1)).count();
                        let chargers = fs.z.iter().flatten().sum();
                        SweepPoint {
                            delta,
                            budget,
                            covered: r.log.lb,
                            share: ratio(r.log.lb, total),
                            stations,
                            chargers,
                            bound: r.log.ub,
                            gap: r.log.gap,
                            status: r.log.status,
                            error: None,
                            solution: Some(fs),
                        }
                    }
                    Err(e) => SweepPoint {
                        delta,
                        budget,
                        covered: 0.0,
                        share: 0.0,
                        stations: 0,
                        chargers: 0,
                        bound: f64::INFINITY,
                        gap: f64::INFINITY,
                        status: "failed".into(),
                        error: Some(e.to_string()),
                        solution: None,
                    },
                }
            })
            .collect()
    });
    let mut points = points;
    carry_forward(prob, deltas, &mut points, oracle)?;
    let elasticities = points
        .windows(2)
        .map(|w| match (&w[0], &w[1]) {
            (a, b) if a.error.is_none() && b.error.is_none() => match (a.budget, b.budget) {
                (Some(bi), Some(bj)) => elasticity(a.covered, b.covered, bi, bj).ok(),
                _ => None,
            },
            _ => None,
        })
        .collect();
    Ok(SweepReport { no_regrets: no_regrets(prob, &points), points, elasticities })
}

/// Stations without committed chargers that every solved level prepares in
/// the first stage. Levels that prepare no such station are skipped.
pub fn no_regrets(prob: &Problem, points: &[SweepPoint]) -> Vec<String> {
    let decision = |i: usize| prob.preplanned[i].iter().all(|&p| p == 0);
    let chosen: Vec<Vec<usize>> = points
        .iter()
        .filter_map(|p| p.solution.as_ref())
        .map(|fs| (0..prob.n_stations).filter(|&i| decision(i) && fs.x[i][..prob.t1].contains(&1)).collect::<Vec<_>>())
        .filter(|v| !v.is_empty())
        .collect();
    if chosen.is_empty() {
        return Vec::new();
    }
    (0..prob.n_stations)
        .filter(|i| chosen.iter().all(|c| c.contains(i)))
        .map(|i| prob.inst.stations[i].id.clone())
        .collect()
}

/// Covered flow per path and period: exact in the first stage, expected
/// over scenarios in the second.
pub fn covered_flows(prob: &Problem, eval: &Evaluation) -> Vec<Vec<f64>> {
    prob.paths
        .iter()
        .enumerate()
        .map(|(p, pr)| {
            (0..prob.n_periods)
                .map(|t| {
                    if t < prob.t1 {
                        prob.first_flow(pr.q, pr.v, t) * eval.first_flows[p][t]
                    } else {
                        (0..prob.scenarios())
                            .map(|s| prob.scen.probabilities[s] * prob.flow(s, pr.q, pr.v, t) * eval.scenarios[s].flows[p][t - prob.t1])
                            .sum()
                    }
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetourBucket {
    pub lo: f64,
    pub hi: f64,
    pub mass: f64,
}

/// Covered flow by relative detour, in buckets of `width` starting at 0.
pub fn detour_distribution(prob: &Problem, paths: &PathSet, eval: &Evaluation, width: f64) -> Vec<DetourBucket> {
    let width = if width > 0.0 { width } else { 0.01 };
    let flows = covered_flows(prob, eval);
    let mut mass: Vec<f64> = Vec::new();
    for (p, pr) in prob.paths.iter().enumerate() {
        let detour = paths.get(pr.q, pr.v).paths[pr.h].detour.max(0.0);
        let k = (detour / width + 1e-9).floor() as usize;
        if mass.len() <= k {
            mass.resize(k + 1, 0.0);
        }
        mass[k] += flows[p].iter().sum::<f64>();
    }
    if mass.is_empty() {
        mass.push(0.0);
    }
    mass.iter().enumerate().map(|(k, &m)| DetourBucket { lo: k as f64 * width, hi: (k + 1) as f64 * width, mass: m }).collect()
}

/// Emission factors. The defaults are placeholders, not sourced values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmissionParams {
    pub electricity_g_per_kwh: f64,
    pub diesel_g_per_km: f64,
}

impl Default for EmissionParams {
    fn default() -> Self {
        EmissionParams { electricity_g_per_kwh: 19.0, diesel_g_per_km: 950.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Co2Period {
    pub period: String,
    pub electric: f64,
    pub diesel: f64,
    pub baseline: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Co2Report {
    pub periods: Vec<Co2Period>,
    pub electric: f64,
    pub diesel: f64,
    pub baseline: f64,
    pub ratio: f64,
}

/// Emissions per period in grams per hour of flow: covered trips run on
/// electricity along their path, the rest on diesel along the shortest route.
pub fn co2_report(prob: &Problem, paths: &PathSet, eval: &Evaluation, params: &EmissionParams) -> Result<Co2Report, AnalysisError> {
    if params.electricity_g_per_kwh < 0.0 || params.diesel_g_per_km < 0.0 {
        return Err(AnalysisError::Degenerate("emission factors must be nonnegative".into()));
    }
    let flows = covered_flows(prob, eval);
    let nq = prob.inst.od_pairs.len();
    let nv = prob.inst.vehicle_types.len();
    let mut periods = Vec::new();
    for t in 0..prob.n_periods {
        let mut electric = 0.0;
        for (p, pr) in prob.paths.iter().enumerate() {
            electric += flows[p][t] * paths.get(pr.q, pr.v).paths[pr.h].energy_kwh * params.electricity_g_per_kwh;
        }
        let (mut diesel, mut baseline) = (0.0, 0.0);
        for q in 0..nq {
            for v in 0..nv {
                let km = paths.get(q, v).shortest_km;
                if !km.is_finite() {
                    continue;
                }
                let demand = if t < prob.t1 {
                    prob.first_flow(q, v, t)
                } else {
                    (0..prob.scenarios()).map(|s| prob.scen.probabilities[s] * prob.flow(s, q, v, t)).sum()
                };
                let covered: f64 = prob.by_qv[q][v].iter().map(|&p| flows[p][t]).sum();
                diesel += (demand - covered).max(0.0) * km * params.diesel_g_per_km;
                baseline += demand * km * params.diesel_g_per_km;
            }
        }
        periods.push(Co2Period {
            period: prob.inst.horizon.periods[t].clone(),
            electric,
            diesel,
            baseline,
            ratio: if baseline > 0.0 { (electric + diesel) / baseline } else { 1.0 },
        });
    }
    let electric: f64 = periods.iter().map(|p| p.electric).sum();
    let diesel: f64 = periods.iter().map(|p| p.diesel).sum();
    let baseline: f64 = periods.iter().map(|p| p.baseline).sum();
    let ratio = if baseline > 0.0 { (electric + diesel) / baseline } else { 1.0 };
    Ok(Co2Report { periods, electric, diesel, baseline, ratio })
}
