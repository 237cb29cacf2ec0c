//! Integer L-shaped method: master with recourse estimates, scenario
//! subproblems, linear and integer optimality cuts, and a best-first
//! branch-and-cut driver that alternates between the two cut families.

mod cuts;
mod master;
mod subproblem;

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use cuts::{generic_cut, integer_cut, linear_cut, Cut, CutKind, CutPool, CutVar};
pub use master::{build_master, Master, MasterOptions};
pub use subproblem::{DualSolution, SubResult, Subproblem};

use crate::error::DecompError;
use crate::mipcore::deterministic::{build_deterministic_equivalent, extract_first_stage, DeOptions};
use crate::mipcore::{LinearModel, LpSession, RowSense, SolveOptions, SolveStatus, SolverOracle, VarKind};
use crate::problem::{FirstStageSolution, Problem};
use crate::scenario::expected_value_scenario;

/// (UB − LB) / UB, or 0 when the bounds meet.
pub fn relative_gap(lb: f64, ub: f64) -> f64 {
    if !lb.is_finite() || !ub.is_finite() {
        return f64::INFINITY;
    }
    let d = ub - lb;
    if d <= 1e-9 * (1.0 + ub.abs()) {
        0.0
    } else if ub > 0.0 {
        d / ub
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LShapedOptions {
    pub rel_gap: f64,
    pub time_limit_s: Option<f64>,
    pub node_limit: Option<usize>,
    pub warm_start: bool,
    /// Defaults to a third of the time limit.
    pub warm_start_time_s: Option<f64>,
    /// Defaults to an eighteenth of the time limit.
    pub root_time_s: Option<f64>,
    /// Time for the tree alone; defaults to whatever the limit leaves.
    pub tree_time_s: Option<f64>,
    pub root_iterations: usize,
    pub threads: usize,
    pub valid_inequalities: bool,
}

impl Default for LShapedOptions {
    fn default() -> Self {
        LShapedOptions {
            rel_gap: 1e-4,
            time_limit_s: None,
            node_limit: None,
            warm_start: true,
            warm_start_time_s: None,
            root_time_s: None,
            tree_time_s: None,
            root_iterations: 200,
            threads: 1,
            valid_inequalities: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub time_s: f64,
    pub lb: f64,
    pub ub: f64,
    pub gap: f64,
    pub nodes: usize,
    pub cuts_linear: usize,
    pub cuts_integer: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveLog {
    pub lb: f64,
    pub ub: f64,
    pub gap: f64,
    pub nodes: usize,
    pub cuts_linear: usize,
    pub cuts_integer: usize,
    /// "optimal", "time-limit" or "node-limit".
    pub status: String,
    /// Master LP bound after each root iteration.
    pub root_bounds: Vec<f64>,
    pub root_bound: f64,
    pub subproblem_time_s: f64,
    pub warm_start_s: f64,
    pub root_s: f64,
    pub tree_s: f64,
    pub trace: Vec<TracePoint>,
}

/// Recourse of one scenario at a fixed first stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOutcome {
    pub value: f64,
    /// z^s per station and second-stage period.
    pub chargers: Vec<Vec<u32>>,
    /// w^s per second-stage period.
    pub slack: Vec<f64>,
    /// y^s per path (problem order) and second-stage period.
    pub flows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub first_value: f64,
    /// ỹ per path and first-stage period.
    pub first_flows: Vec<Vec<f64>>,
    pub scenarios: Vec<ScenarioOutcome>,
    pub objective: f64,
}

/// Best first-stage flow given x̃ and z̃.
pub fn first_stage_flows(prob: &Problem, fs: &FirstStageSolution, oracle: &dyn SolverOracle) -> Result<(f64, Vec<Vec<f64>>), DecompError> {
    let t1 = prob.t1;
    let mut m = LinearModel::new("first_flows");
    let y: Vec<Vec<usize>> = prob
        .paths
        .iter()
        .enumerate()
        .map(|(p, pr)| {
            (0..t1).map(|t| m.add_var(format!("y_{p}_{t}"), VarKind::Continuous, 0.0, 1.0, prob.first_flow(pr.q, pr.v, t), None)).collect()
        })
        .collect();
    for i in 0..prob.n_stations {
        let mut cum = 0.0;
        for t in 0..t1 {
            cum += fs.z[i][t] as f64;
            let coefs: Vec<(usize, f64)> = prob.visits[i]
                .iter()
                .map(|&(p, u)| (y[p][t], prob.first_flow(prob.paths[p].q, prob.paths[p].v, t) * u))
                .filter(|c| c.1 != 0.0)
                .collect();
            if !coefs.is_empty() {
                m.add_row(format!("cap_{i}_{t}"), coefs, RowSense::Le, cum, None);
            }
        }
    }
    for per_v in &prob.by_qv {
        for pp in per_v.iter().filter(|pp| !pp.is_empty()) {
            for t in 0..t1 {
                m.add_row(format!("flow_{t}"), pp.iter().map(|&p| (y[p][t], 1.0)).collect(), RowSense::Le, 1.0, None);
            }
        }
    }
    let r = oracle.solve(&m, &SolveOptions::lp())?.into_solution()?;
    let flows = y.iter().map(|cols| cols.iter().map(|&j| r.x[j]).collect()).collect();
    Ok((r.objective, flows))
}

/// Scenario subproblems with caches, solved in parallel on a fixed-size
/// pool. Results are collected in scenario order.
pub struct Evaluator<'a> {
    pub prob: &'a Problem,
    oracle: &'a dyn SolverOracle,
    pub subs: Vec<Subproblem>,
    pool: rayon::ThreadPool,
    upper: Option<Vec<f64>>,
    lp_cache: HashMap<Vec<u32>, Vec<(f64, Cut)>>,
    int_cache: HashMap<Vec<u32>, Vec<f64>>,
    first_cache: HashMap<Vec<u32>, f64>,
    pub sub_time_s: f64,
}

impl<'a> Evaluator<'a> {
    pub fn new(prob: &'a Problem, oracle: &'a dyn SolverOracle, threads: usize, bound_chargers: bool) -> Result<Self, DecompError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build()
            .map_err(|e| DecompError::Input(e.to_string()))?;
        let subs = pool.install(|| (0..prob.scenarios()).into_par_iter().map(|s| Subproblem::build(prob, s, bound_chargers)).collect());
        Ok(Evaluator {
            prob,
            oracle,
            subs,
            pool,
            upper: None,
            lp_cache: HashMap::new(),
            int_cache: HashMap::new(),
            first_cache: HashMap::new(),
            sub_time_s: 0.0,
        })
    }

    /// LP recourse values and linear cuts at a point.
    pub fn lp_cuts(&mut self, point: &[f64], origin: &str) -> Result<Vec<(f64, Cut)>, DecompError> {
        let start = Instant::now();
        let (prob, oracle, subs) = (self.prob, self.oracle, &self.subs);
        let out: Result<Vec<(f64, Cut)>, DecompError> = self.pool.install(|| {
            subs.par_iter()
                .map(|sub| {
                    let r = sub.solve(point, true, oracle, &SolveOptions::lp())?;
                    let d = sub.duals(prob, &r.result)?;
                    Ok((r.value, linear_cut(&d, prob, origin)))
                })
                .collect()
        });
        self.sub_time_s += start.elapsed().as_secs_f64();
        out
    }

    fn lp_cuts_cached(&mut self, fs: &FirstStageSolution) -> Result<Vec<(f64, Cut)>, DecompError> {
        let key = fs.key();
        if let Some(v) = self.lp_cache.get(&key) {
            return Ok(v.clone());
        }
        let v = self.lp_cuts(&fs.to_point(self.prob), &fs.digest())?;
        self.lp_cache.insert(key, v.clone());
        Ok(v)
    }

    /// Integer recourse values Q^s at a binary point.
    pub fn int_values(&mut self, fs: &FirstStageSolution) -> Result<Vec<f64>, DecompError> {
        let key = fs.key();
        if let Some(v) = self.int_cache.get(&key) {
            return Ok(v.clone());
        }
        let start = Instant::now();
        let point = fs.to_point(self.prob);
        let (oracle, subs) = (self.oracle, &self.subs);
        let v: Vec<f64> = self.pool.install(|| {
            subs.par_iter()
                .map(|sub| Ok(sub.solve(&point, false, oracle, &SolveOptions::exact())?.value))
                .collect::<Result<Vec<f64>, DecompError>>()
        })?;
        self.sub_time_s += start.elapsed().as_secs_f64();
        self.int_cache.insert(key, v.clone());
        Ok(v)
    }

    pub fn first_value(&mut self, fs: &FirstStageSolution) -> Result<f64, DecompError> {
        let key = fs.key();
        if let Some(&v) = self.first_cache.get(&key) {
            return Ok(v);
        }
        let v = first_stage_flows(self.prob, fs, self.oracle)?.0;
        self.first_cache.insert(key, v);
        Ok(v)
    }

    /// U_s: the smaller of the total-demand bound and the best LP recourse of the
    /// scenario over all first stages.
    pub fn upper_bounds(&mut self) -> Result<Vec<f64>, DecompError> {
        if let Some(u) = &self.upper {
            return Ok(u.clone());
        }
        let (prob, oracle) = (self.prob, self.oracle);
        let u: Vec<f64> = self.pool.install(|| {
            (0..prob.scenarios())
                .into_par_iter()
                .map(|s| {
                    let de = build_deterministic_equivalent(prob, &DeOptions { scenarios: Some(vec![s]), recourse_only: true });
                    let r = oracle.solve(&de, &SolveOptions::lp())?.into_solution()?;
                    Ok(prob.recourse_bound(s).min(r.objective + 1e-6 * (1.0 + r.objective.abs())))
                })
                .collect::<Result<Vec<f64>, DecompError>>()
        })?;
        self.upper = Some(u.clone());
        Ok(u)
    }
}

/// Value of a first stage with every scenario recourse solved exactly, as
/// in the full model (no charger bounds on the recourse).
pub fn evaluate_first_stage(prob: &Problem, fs: &FirstStageSolution, oracle: &dyn SolverOracle, threads: usize) -> Result<Evaluation, DecompError> {
    fs.check(prob, false).map_err(DecompError::InfeasibleFirstStage)?;
    let (first_value, first_flows) = first_stage_flows(prob, fs, oracle)?;
    let point = fs.to_point(prob);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build().map_err(|e| DecompError::Input(e.to_string()))?;
    let scenarios: Vec<ScenarioOutcome> = pool.install(|| {
        (0..prob.scenarios())
            .into_par_iter()
            .map(|s| {
                let sub = Subproblem::build(prob, s, false);
                let r = sub.solve(&point, false, oracle, &SolveOptions::exact())?;
                let x = &r.result.x;
                Ok(ScenarioOutcome {
                    value: r.value,
                    chargers: sub.z.iter().map(|cols| cols.iter().map(|&j| x[j].round().max(0.0) as u32).collect()).collect(),
                    slack: sub.w.iter().map(|&j| x[j]).collect(),
                    flows: sub.y.iter().map(|cols| cols.iter().map(|&j| x[j]).collect()).collect(),
                })
            })
            .collect::<Result<Vec<_>, DecompError>>()
    })?;
    let objective = first_value + scenarios.iter().zip(&prob.scen.probabilities).map(|(o, p)| p * o.value).sum::<f64>();
    Ok(Evaluation { first_value, first_flows, scenarios, objective })
}

/// Remove chargers that no scenario can use, latest first, so that an
/// outside first stage satisfies the master's charger bounds.
pub fn project_to_master(prob: &Problem, fs: &FirstStageSolution) -> FirstStageSolution {
    let mut z = fs.z.clone();
    for i in 0..prob.n_stations {
        let open = fs.prepared(i) as u32;
        let room = (prob.capacity[i].min(prob.charger_bound[i]) * open).saturating_sub(prob.committed_late(i));
        let mut total: u32 = z[i].iter().sum();
        for t in (0..prob.t1).rev() {
            while total > room && z[i][t] > prob.preplanned[i][t] {
                z[i][t] -= 1;
                total -= 1;
            }
        }
    }
    FirstStageSolution::complete(prob, fs.x.clone(), z)
}

#[derive(Debug, Clone)]
struct Node {
    id: usize,
    bound: f64,
    fixes: Vec<(usize, f64, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Node {
    fn cmp(&self, o: &Self) -> Ordering {
        self.bound.total_cmp(&o.bound).then_with(|| o.id.cmp(&self.id))
    }
}

struct Run<'a> {
    prob: &'a Problem,
    oracle: &'a dyn SolverOracle,
    master: Master,
    session: Box<dyn LpSession>,
    pool: CutPool,
    eval: Evaluator<'a>,
    lb: f64,
    ub: f64,
    incumbent: Option<FirstStageSolution>,
    nodes: usize,
    trace: Vec<TracePoint>,
    start: Instant,
}

fn violation_tol(q: f64) -> f64 {
    1e-6 * (1.0 + q.abs())
}

impl<'a> Run<'a> {
    fn new(prob: &'a Problem, oracle: &'a dyn SolverOracle, opts: &LShapedOptions) -> Result<Self, DecompError> {
        let master = build_master(prob, MasterOptions { valid_inequalities: opts.valid_inequalities });
        let session = oracle.session(&master.model)?;
        let eval = Evaluator::new(prob, oracle, opts.threads, opts.valid_inequalities)?;
        Ok(Run {
            prob,
            oracle,
            master,
            session,
            pool: CutPool::default(),
            eval,
            lb: f64::NEG_INFINITY,
            ub: f64::INFINITY,
            incumbent: None,
            nodes: 0,
            trace: Vec::new(),
            start: Instant::now(),
        })
    }

    fn add_cut(&mut self, cut: Cut) -> bool {
        let (coefs, rhs) = self.master.cut_row(&cut);
        if self.pool.insert(cut) {
            self.session.add_row(&coefs, RowSense::Le, rhs);
            true
        } else {
            false
        }
    }

    fn record(&mut self) {
        let p = TracePoint {
            time_s: self.start.elapsed().as_secs_f64(),
            lb: self.lb,
            ub: self.ub,
            gap: relative_gap(self.lb, self.ub),
            nodes: self.nodes,
            cuts_linear: self.pool.count(CutKind::Linear),
            cuts_integer: self.pool.count(CutKind::Integer),
        };
        if self.trace.last().is_none_or(|l| l.lb != p.lb || l.ub != p.ub || l.nodes != p.nodes) {
            self.trace.push(p);
        }
    }

    /// Evaluate an integer point exactly, update the incumbent, and return
    /// Q^s per scenario.
    fn certify(&mut self, fs: &FirstStageSolution) -> Result<Vec<f64>, DecompError> {
        let q = self.eval.int_values(fs)?;
        let value = self.eval.first_value(fs)? + q.iter().zip(&self.prob.scen.probabilities).map(|(q, p)| p * q).sum::<f64>();
        if value > self.lb {
            self.lb = value;
            self.incumbent = Some(fs.clone());
            self.record();
        }
        Ok(q)
    }

    /// Cheapest plan: committed stations only, prepared as late as allowed
    /// or else at the start, with their pre-planned chargers.
    fn fallback(&mut self) -> Result<(), DecompError> {
        let prob = self.prob;
        let z: Vec<Vec<u32>> = (0..prob.n_stations).map(|i| prob.preplanned[i][..prob.t1].to_vec()).collect();
        for late in [true, false] {
            let mut x = vec![vec![0u8; prob.n_periods]; prob.n_stations];
            for (i, row) in x.iter_mut().enumerate() {
                let due = match (prob.inst.stations[i].preplanned_period(), prob.committed_deadline(i)) {
                    (Some(a), Some(b)) => Some(a.min(b)),
                    (a, b) => a.or(b),
                };
                if let Some(d) = due {
                    row[if late { d } else { 0 }] = 1;
                }
            }
            let fs = FirstStageSolution::complete(prob, x, z.clone());
            if fs.check(prob, self.master_bounds()).is_ok() {
                self.certify(&fs)?;
                return Ok(());
            }
        }
        Ok(())
    }

    fn warm_start(&mut self, time_s: Option<f64>) -> Result<Option<FirstStageSolution>, DecompError> {
        let ev = expected_value_scenario(&self.prob.scen);
        let ev_prob = self.prob.with_scenarios(&ev)?;
        let de = build_deterministic_equivalent(&ev_prob, &DeOptions::default());
        let opts = SolveOptions { time_limit_s: time_s, ..SolveOptions::default() };
        let r = self.oracle.solve(&de, &opts)?;
        if !r.has_solution() {
            log::warn!("expected-value problem gave no solution for the warm start");
            return Ok(None);
        }
        let fs = project_to_master(self.prob, &extract_first_stage(&de, &ev_prob, &r.x)?);
        if let Err(e) = fs.check(self.prob, self.master_bounds()) {
            log::warn!("warm start discarded: {e}");
            return Ok(None);
        }
        for (_, cut) in self.eval.lp_cuts_cached(&fs)? {
            self.add_cut(cut);
        }
        self.certify(&fs)?;
        Ok(Some(fs))
    }

    fn master_bounds(&self) -> bool {
        self.master.model.rows.iter().any(|r| matches!(r.tag, Some(crate::mipcore::RowTag::MasterCharger { .. })))
    }

    fn root(&mut self, iterations: usize, deadline: Option<Instant>) -> Result<Vec<f64>, DecompError> {
        let mut bounds = Vec::new();
        for _ in 0..iterations {
            let r = self.session.solve(&lp_opts(deadline))?;
            if r.status != SolveStatus::Optimal {
                break;
            }
            bounds.push(r.objective);
            let point = self.master.point(self.prob, &r.x);
            let cuts = self.eval.lp_cuts(&point, "root")?;
            let mut added = false;
            for (q, cut) in cuts {
                let theta = r.x[self.master.theta[cut.s]];
                if theta > q + violation_tol(q) {
                    added |= self.add_cut(cut);
                }
            }
            if !added || deadline.is_some_and(|d| Instant::now() >= d) {
                break;
            }
        }
        Ok(bounds)
    }

    fn fractional(&self, x: &[f64]) -> Option<(usize, f64)> {
        let pick = |cols: &mut dyn Iterator<Item = usize>| {
            let mut best: Option<(usize, f64)> = None;
            for j in cols {
                let f = (x[j] - x[j].floor()).min(x[j].ceil() - x[j]);
                if f > 1e-6 && best.is_none_or(|b| f > b.1 + 1e-12) {
                    best = Some((j, f));
                }
            }
            best.map(|(j, _)| (j, x[j]))
        };
        pick(&mut self.master.cols.x.iter().flatten().copied())
            .or_else(|| pick(&mut self.master.bits.iter().flatten().flatten().copied()))
    }

    fn tree(&mut self, opts: &LShapedOptions, root_bound: f64, deadline: Option<Instant>) -> Result<String, DecompError> {
        let mut heap = BinaryHeap::new();
        heap.push(Node { id: 0, bound: root_bound, fixes: Vec::new() });
        let mut next_id = 1;
        let mut applied: Vec<usize> = Vec::new();
        let mut closed = f64::NEG_INFINITY;
        let status;
        let prune = |bound: f64, lb: f64| bound <= lb + (opts.rel_gap * bound.abs()).max(1e-9);
        loop {
            let open = heap.peek().map_or(closed.max(self.lb), |n| n.bound.max(self.lb));
            self.ub = self.ub.min(open);
            self.record();
            if heap.is_empty() || relative_gap(self.lb, self.ub) <= opts.rel_gap {
                if heap.is_empty() {
                    self.ub = self.ub.min(closed.max(self.lb));
                }
                status = "optimal";
                break;
            }
            if opts.node_limit.is_some_and(|n| self.nodes >= n) {
                status = "node-limit";
                break;
            }
            if deadline.is_some_and(|d| Instant::now() >= d) {
                status = "time-limit";
                break;
            }
            let node = heap.pop().expect("heap is not empty");
            if prune(node.bound, self.lb) {
                closed = closed.max(node.bound);
                continue;
            }
            self.nodes += 1;
            for &j in &applied {
                self.session.set_bounds(j, 0.0, 1.0);
            }
            applied.clear();
            for &(j, lo, hi) in &node.fixes {
                self.session.set_bounds(j, lo, hi);
                applied.push(j);
            }
            loop {
                let r = self.session.solve(&lp_opts(deadline))?;
                match r.status {
                    SolveStatus::Infeasible => break,
                    SolveStatus::Optimal => {}
                    _ if deadline.is_some_and(|d| Instant::now() >= d) => {
                        heap.push(node.clone());
                        break;
                    }
                    other => {
                        // Give up on the node but keep its bound.
                        log::warn!("master LP ended {other:?} at node {}; node dropped", node.id);
                        closed = closed.max(node.bound);
                        break;
                    }
                }
                let bound = r.objective;
                if prune(bound, self.lb) {
                    closed = closed.max(bound);
                    break;
                }
                if let Some((j, v)) = self.fractional(&r.x) {
                    let mut down = node.fixes.clone();
                    down.push((j, 0.0, v.floor()));
                    let mut up = node.fixes.clone();
                    up.push((j, v.ceil(), 1.0));
                    heap.push(Node { id: next_id, bound, fixes: down });
                    heap.push(Node { id: next_id + 1, bound, fixes: up });
                    next_id += 2;
                    break;
                }
                let point = self.master.point(self.prob, &r.x);
                let cand = FirstStageSolution::from_point(self.prob, &point);
                let fs = FirstStageSolution::complete(self.prob, cand.x, cand.z);
                let theta: Vec<f64> = self.master.theta.iter().map(|&j| r.x[j]).collect();
                let mut added = false;
                for (q, cut) in self.eval.lp_cuts_cached(&fs)? {
                    if theta[cut.s] > q + violation_tol(q) {
                        added |= self.add_cut(cut);
                    }
                }
                if added {
                    continue;
                }
                let q = self.certify(&fs)?;
                let u = self.eval.upper_bounds()?;
                for s in 0..q.len() {
                    if theta[s] > q[s] + violation_tol(q[s]) {
                        added |= self.add_cut(integer_cut(self.prob, &fs, q[s], u[s], s)?);
                    }
                }
                if !added {
                    closed = closed.max(bound.min(self.lb.max(bound - violation_tol(bound))));
                    break;
                }
                if deadline.is_some_and(|d| Instant::now() >= d) {
                    heap.push(Node { bound, ..node.clone() });
                    break;
                }
            }
        }
        self.record();
        Ok(status.to_string())
    }
}

fn lp_opts(deadline: Option<Instant>) -> SolveOptions {
    let mut o = SolveOptions::lp();
    o.time_limit_s = deadline.map(|d| d.saturating_duration_since(Instant::now()).as_secs_f64().max(1e-3));
    o
}

/// Linear L-shaped phase on the LP relaxation. Returns the cut pool and the
/// master LP bound at each iteration.
pub fn root_strengthen(prob: &Problem, oracle: &dyn SolverOracle, opts: &LShapedOptions) -> Result<(CutPool, Vec<f64>), DecompError> {
    let mut run = Run::new(prob, oracle, opts)?;
    let deadline = opts.root_time_s.map(|s| Instant::now() + std::time::Duration::from_secs_f64(s));
    let bounds = run.root(opts.root_iterations, deadline)?;
    Ok((run.pool, bounds))
}

/// Solve the expected-value problem, map its first stage into the master and
/// return it with one linear cut per scenario at that point.
pub fn warm_start(prob: &Problem, oracle: &dyn SolverOracle, time_limit_s: Option<f64>) -> Result<Option<(FirstStageSolution, Vec<Cut>)>, DecompError> {
    let mut run = Run::new(prob, oracle, &LShapedOptions::default())?;
    Ok(run.warm_start(time_limit_s)?.map(|fs| (fs, run.pool.cuts)))
}

#[derive(Debug, Clone)]
pub struct LShapedResult {
    pub solution: FirstStageSolution,
    pub log: SolveLog,
    pub pool: Vec<Cut>,
}

pub fn branch_and_cut(prob: &Problem, oracle: &dyn SolverOracle, opts: &LShapedOptions) -> Result<LShapedResult, DecompError> {
    let start = Instant::now();
    let mut run = Run::new(prob, oracle, opts)?;
    run.start = start;
    let total = opts.time_limit_s;
    let secs = |s: f64| std::time::Duration::from_secs_f64(s.max(0.0));

    let t0 = Instant::now();
    if opts.warm_start {
        run.warm_start(opts.warm_start_time_s.or(total.map(|t| t / 3.0)))?;
    }
    let warm_s = t0.elapsed().as_secs_f64();

    let t0 = Instant::now();
    let root_deadline = opts.root_time_s.or(total.map(|t| t / 18.0)).map(|s| t0 + secs(s));
    let root_bounds = run.root(opts.root_iterations, root_deadline)?;
    let root_s = t0.elapsed().as_secs_f64();
    let root_bound = root_bounds.last().copied().unwrap_or(f64::INFINITY);

    let t0 = Instant::now();
    let tree_deadline = match (opts.tree_time_s, total) {
        (Some(t), _) => Some(t0 + secs(t)),
        (None, Some(t)) => Some(start + secs(t)),
        (None, None) => None,
    };
    let status = run.tree(opts, root_bound, tree_deadline)?;
    let tree_s = t0.elapsed().as_secs_f64();

    if run.incumbent.is_none() {
        run.fallback()?;
    }
    let solution = run.incumbent.clone().ok_or_else(|| DecompError::Solver(crate::error::SolverError::NoSolution("no feasible first stage found".into())))?;
    let log = SolveLog {
        lb: run.lb,
        ub: run.ub,
        gap: relative_gap(run.lb, run.ub),
        nodes: run.nodes,
        cuts_linear: run.pool.count(CutKind::Linear),
        cuts_integer: run.pool.count(CutKind::Integer),
        status,
        root_bound: if root_bound.is_finite() { root_bound } else { run.trace.first().map_or(run.ub, |p| p.ub) },
        root_bounds,
        subproblem_time_s: run.eval.sub_time_s,
        warm_start_s: warm_s,
        root_s,
        tree_s,
        trace: run.trace,
    };
    Ok(LShapedResult { solution, log, pool: run.pool.cuts })
}
