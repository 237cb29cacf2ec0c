use std::time::Instant;

use highs::{Col, HighsModelStatus, Model, RowProblem, Sense};
use serde::{Deserialize, Serialize};

use super::model::{LinearModel, RowSense, VarKind};
use crate::error::SolverError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    FeasibleWithGap,
    Infeasible,
    Unbounded,
    /// A resource limit stopped the solve before any solution was found.
    Limit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Solve the LP relaxation regardless of variable kinds.
    pub relax: bool,
    pub time_limit_s: Option<f64>,
    pub rel_gap: f64,
    pub abs_gap: f64,
    pub node_limit: Option<u64>,
    pub feasibility_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { relax: false, time_limit_s: None, rel_gap: 1e-4, abs_gap: 1e-6, node_limit: None, feasibility_tol: 1e-6 }
    }
}

impl SolveOptions {
    pub fn lp() -> Self {
        SolveOptions { relax: true, ..Default::default() }
    }

    /// Settings for solves whose value must be exact up to tolerance.
    pub fn exact() -> Self {
        SolveOptions { rel_gap: 1e-9, abs_gap: 1e-9, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    /// Row duals; present only for LP solves. For a maximisation, duals of
    /// `<=` rows are nonnegative and duals of `>=` rows nonpositive.
    pub row_duals: Option<Vec<f64>>,
    /// Reduced costs, with the same sign convention.
    pub col_duals: Option<Vec<f64>>,
    pub objective: f64,
    /// Best proven upper bound on the optimum.
    pub bound: f64,
    pub wall_s: f64,
}

impl SolveResult {
    pub fn has_solution(&self) -> bool {
        matches!(self.status, SolveStatus::Optimal | SolveStatus::FeasibleWithGap)
    }

    /// Relative gap, 0 for an optimal solve.
    pub fn gap(&self) -> f64 {
        if self.status == SolveStatus::Optimal {
            0.0
        } else {
            crate::lshaped::relative_gap(self.objective, self.bound)
        }
    }

    pub fn into_solution(self) -> Result<SolveResult, SolverError> {
        match self.status {
            SolveStatus::Optimal | SolveStatus::FeasibleWithGap => Ok(self),
            SolveStatus::Infeasible => Err(SolverError::Infeasible),
            SolveStatus::Unbounded => Err(SolverError::Unbounded),
            SolveStatus::Limit => Err(SolverError::NoSolution("resource limit reached".into())),
        }
    }
}

/// Incrementally modified LP, used for the master problem where rows are
/// added and bounds change between solves.
pub trait LpSession {
    fn add_row(&mut self, coefs: &[(usize, f64)], sense: RowSense, rhs: f64);
    fn set_bounds(&mut self, col: usize, lb: f64, ub: f64);
    fn solve(&mut self, opts: &SolveOptions) -> Result<SolveResult, SolverError>;
}

/// The solver contract. LP solves must return row and column duals; MIP
/// support is required only for monolithic solves and integer subproblems.
pub trait SolverOracle: Sync {
    fn name(&self) -> &str;
    fn solve(&self, model: &LinearModel, opts: &SolveOptions) -> Result<SolveResult, SolverError>;
    fn session(&self, model: &LinearModel) -> Result<Box<dyn LpSession>, SolverError>;
}

/// HiGHS through its C API, single-threaded per model so that concurrent
/// solves stay reproducible.
#[derive(Debug, Clone, Default)]
pub struct HighsOracle;

fn bounds_for(sense: RowSense, rhs: f64) -> (f64, f64) {
    match sense {
        RowSense::Le => (f64::NEG_INFINITY, rhs),
        RowSense::Ge => (rhs, f64::INFINITY),
        RowSense::Eq => (rhs, rhs),
    }
}

fn build(model: &LinearModel, relax: bool) -> Result<(Model, Vec<Col>), SolverError> {
    model.check().map_err(SolverError::Backend)?;
    let mut pb = RowProblem::default();
    let cols: Vec<Col> = model
        .vars
        .iter()
        .map(|v| {
            let integer = !relax && v.kind != VarKind::Continuous;
            pb.add_column_with_integrality(v.obj, v.lb..=v.ub, integer)
        })
        .collect();
    for row in &model.rows {
        let (lo, hi) = bounds_for(row.sense, row.rhs);
        pb.add_row(lo..=hi, row.coefs.iter().map(|&(j, a)| (cols[j], a)));
    }
    let mut m = pb.try_optimise(Sense::Maximise).map_err(|e| SolverError::Backend(format!("{e:?}")))?;
    m.make_quiet();
    Ok((m, cols))
}

fn configure(m: &mut Model, opts: &SolveOptions) {
    m.set_option("threads", 1);
    m.set_option("random_seed", 0);
    m.set_option("primal_feasibility_tolerance", opts.feasibility_tol);
    m.set_option("dual_feasibility_tolerance", opts.feasibility_tol * 1e-1);
    m.set_option("mip_feasibility_tolerance", opts.feasibility_tol);
    m.set_option("mip_rel_gap", opts.rel_gap);
    m.set_option("mip_abs_gap", opts.abs_gap);
    m.set_option("time_limit", opts.time_limit_s.unwrap_or(f64::INFINITY).max(0.0));
    if let Some(n) = opts.node_limit {
        m.set_option("mip_max_nodes", n.min(i32::MAX as u64) as i32);
    }
}

fn run(m: Model, n_cols: usize, is_mip: bool, start: Instant) -> Result<(SolveResult, Model), SolverError> {
    let solved = m.try_solve().map_err(|e| SolverError::Backend(format!("{e:?}")))?;
    let status = solved.status();
    let sol = solved.get_solution();
    let has_primal = matches!(
        solved.primal_solution_status(),
        highs::HighsSolutionStatus::Feasible
    ) && sol.columns().len() == n_cols;
    let objective = solved.objective_value();
    let mip_bound = if is_mip { solved.double_info_value(c"mip_dual_bound").ok() } else { None };
    let st = match status {
        HighsModelStatus::Optimal => SolveStatus::Optimal,
        HighsModelStatus::ModelEmpty => SolveStatus::Optimal,
        HighsModelStatus::Infeasible => SolveStatus::Infeasible,
        HighsModelStatus::Unbounded | HighsModelStatus::UnboundedOrInfeasible => SolveStatus::Unbounded,
        HighsModelStatus::ReachedTimeLimit
        | HighsModelStatus::ReachedIterationLimit
        | HighsModelStatus::ReachedSolutionLimit
        | HighsModelStatus::ReachedInterrupt
        | HighsModelStatus::ReachedMemoryLimit
        | HighsModelStatus::ObjectiveBound
        | HighsModelStatus::ObjectiveTarget
        | HighsModelStatus::Unknown => {
            if has_primal && is_mip {
                SolveStatus::FeasibleWithGap
            } else {
                SolveStatus::Limit
            }
        }
        other => return Err(SolverError::Backend(format!("HiGHS status {other:?}"))),
    };
    let x = if st == SolveStatus::Optimal || st == SolveStatus::FeasibleWithGap {
        sol.columns().to_vec()
    } else {
        Vec::new()
    };
    let (row_duals, col_duals) = if !is_mip && st == SolveStatus::Optimal {
        (Some(sol.dual_rows().to_vec()), Some(sol.dual_columns().to_vec()))
    } else {
        (None, None)
    };
    let objective = if x.is_empty() { f64::NEG_INFINITY } else { objective };
    let bound = match st {
        SolveStatus::Optimal if !is_mip => objective,
        SolveStatus::Optimal | SolveStatus::FeasibleWithGap => mip_bound.unwrap_or(objective).max(objective),
        SolveStatus::Unbounded => f64::INFINITY,
        SolveStatus::Infeasible => f64::NEG_INFINITY,
        SolveStatus::Limit => mip_bound.filter(|b| b.is_finite()).unwrap_or(f64::INFINITY),
    };
    let result = SolveResult { status: st, x, row_duals, col_duals, objective, bound, wall_s: start.elapsed().as_secs_f64() };
    Ok((result, Model::from(solved)))
}

impl SolverOracle for HighsOracle {
    fn name(&self) -> &str {
        "highs"
    }

    fn solve(&self, model: &LinearModel, opts: &SolveOptions) -> Result<SolveResult, SolverError> {
        let start = Instant::now();
        let is_mip = !opts.relax && model.is_mip();
        if model.vars.is_empty() {
            return Ok(SolveResult {
                status: SolveStatus::Optimal,
                x: Vec::new(),
                row_duals: Some(vec![0.0; model.rows.len()]),
                col_duals: Some(Vec::new()),
                objective: model.obj_offset,
                bound: model.obj_offset,
                wall_s: 0.0,
            });
        }
        let (mut m, _) = build(model, opts.relax)?;
        configure(&mut m, opts);
        let (mut r, _) = run(m, model.vars.len(), is_mip, start)?;
        if r.has_solution() {
            r.objective += model.obj_offset;
        }
        if r.bound.is_finite() {
            r.bound += model.obj_offset;
        }
        Ok(r)
    }

    fn session(&self, model: &LinearModel) -> Result<Box<dyn LpSession>, SolverError> {
        let (m, cols) = build(model, true)?;
        Ok(Box::new(HighsSession { model: Some(m), cols, offset: model.obj_offset, used_s: 0.0 }))
    }
}

struct HighsSession {
    model: Option<Model>,
    cols: Vec<Col>,
    offset: f64,
    /// HiGHS measures its time limit over all solves of one model.
    used_s: f64,
}

impl LpSession for HighsSession {
    fn add_row(&mut self, coefs: &[(usize, f64)], sense: RowSense, rhs: f64) {
        let (lo, hi) = bounds_for(sense, rhs);
        let cols = &self.cols;
        if let Some(m) = self.model.as_mut() {
            m.add_row(lo..=hi, coefs.iter().map(|&(j, a)| (cols[j], a)));
        }
    }

    fn set_bounds(&mut self, col: usize, lb: f64, ub: f64) {
        if let Some(m) = self.model.as_mut() {
            m.change_column_bounds(self.cols[col], lb..=ub);
        }
    }

    fn solve(&mut self, opts: &SolveOptions) -> Result<SolveResult, SolverError> {
        let start = Instant::now();
        let mut m = self.model.take().ok_or_else(|| SolverError::Backend("session lost its model".into()))?;
        let opts = SolveOptions { time_limit_s: opts.time_limit_s.map(|t| t + self.used_s), ..opts.clone() };
        configure(&mut m, &opts);
        let (mut r, m) = run(m, self.cols.len(), false, start)?;
        self.model = Some(m);
        self.used_s += start.elapsed().as_secs_f64();
        if r.has_solution() {
            r.objective += self.offset;
            r.bound += self.offset;
        }
        Ok(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mipcore::model::VarKind;

    #[test]
    fn textbook_lp_and_dual() {
        let mut m = LinearModel::new("lp");
        let x = m.add_var("x".into(), VarKind::Continuous, 0.0, f64::INFINITY, 1.0, None);
        m.add_row("c".into(), vec![(x, 1.0)], RowSense::Le, 3.0, None);
        let r = HighsOracle.solve(&m, &SolveOptions::lp()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective - 3.0).abs() < 1e-9);
        assert!((r.row_duals.unwrap()[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ge_row_dual_is_nonpositive() {
        // max -x s.t. x >= 2
        let mut m = LinearModel::new("lp");
        let x = m.add_var("x".into(), VarKind::Continuous, 0.0, f64::INFINITY, -1.0, None);
        m.add_row("c".into(), vec![(x, 1.0)], RowSense::Ge, 2.0, None);
        let r = HighsOracle.solve(&m, &SolveOptions::lp()).unwrap();
        assert!((r.objective + 2.0).abs() < 1e-9);
        assert!((r.row_duals.unwrap()[0] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_system() {
        let mut m = LinearModel::new("inf");
        let x = m.add_var("x".into(), VarKind::Continuous, 0.0, f64::INFINITY, 1.0, None);
        m.add_row("c".into(), vec![(x, 1.0)], RowSense::Le, -1.0, None);
        let r = HighsOracle.solve(&m, &SolveOptions::lp()).unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible);
        assert!(r.into_solution().is_err());
    }

    #[test]
    fn knapsack_matches_enumeration() {
        let value = [6.0, 10.0, 12.0];
        let weight = [1.0, 2.0, 3.0];
        let cap = 5.0;
        let mut m = LinearModel::new("knap");
        let cols: Vec<usize> =
            (0..3).map(|k| m.add_var(format!("x{k}"), VarKind::Binary, 0.0, 1.0, value[k], None)).collect();
        m.add_row("w".into(), cols.iter().zip(weight).map(|(&j, w)| (j, w)).collect(), RowSense::Le, cap, None);
        let r = HighsOracle.solve(&m, &SolveOptions::exact()).unwrap();
        let mut best = 0.0f64;
        for mask in 0..8u32 {
            let pick = |k: usize| (mask >> k & 1) as f64;
            let w: f64 = (0..3).map(|k| pick(k) * weight[k]).sum();
            if w <= cap {
                best = best.max((0..3).map(|k| pick(k) * value[k]).sum());
            }
        }
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective - best).abs() < 1e-9);
        assert!(r.row_duals.is_none());
        let lp = HighsOracle.solve(&m, &SolveOptions::lp()).unwrap();
        assert!(lp.objective >= r.objective - 1e-9);
    }

    #[test]
    fn session_adds_rows_and_changes_bounds() {
        let mut m = LinearModel::new("s");
        let x = m.add_var("x".into(), VarKind::Continuous, 0.0, 10.0, 1.0, None);
        let y = m.add_var("y".into(), VarKind::Continuous, 0.0, 10.0, 1.0, None);
        let mut s = HighsOracle.session(&m).unwrap();
        assert!((s.solve(&SolveOptions::lp()).unwrap().objective - 20.0).abs() < 1e-9);
        s.add_row(&[(x, 1.0), (y, 1.0)], RowSense::Le, 4.0);
        assert!((s.solve(&SolveOptions::lp()).unwrap().objective - 4.0).abs() < 1e-9);
        s.set_bounds(x, 0.0, 1.0);
        s.set_bounds(y, 0.0, 1.0);
        assert!((s.solve(&SolveOptions::lp()).unwrap().objective - 2.0).abs() < 1e-9);
    }
}
