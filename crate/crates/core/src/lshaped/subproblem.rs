use serde::{Deserialize, Serialize};

use crate::error::{DecompError, SolverError};
use crate::mipcore::{LinearModel, RowSense, RowTag, SolveOptions, SolveResult, SolverOracle, VarKind, VarTag};
use crate::problem::Problem;

/// Recourse problem of one scenario with right-hand sides that are affine
/// in the first-stage point.
#[derive(Debug, Clone)]
pub struct Subproblem {
    pub s: usize,
    pub model: LinearModel,
    pub rhs_const: Vec<f64>,
    /// Per row, (first-stage layout index, coefficient) terms of the RHS.
    pub rhs_terms: Vec<Vec<(usize, f64)>>,
    /// y columns per (path, second-stage period offset).
    pub y: Vec<Vec<usize>>,
    /// z columns per (station, second-stage period offset).
    pub z: Vec<Vec<usize>>,
    pub w: Vec<usize>,
}

/// Multipliers of a solved LP subproblem, named after the rows they belong
/// to. Second-stage periods are indexed from 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualSolution {
    pub s: usize,
    /// Budget.
    pub alpha: Vec<f64>,
    /// Flow, per (q, v, period).
    pub eta: Vec<Vec<Vec<f64>>>,
    /// Path share upper bounds, per (path, period).
    pub lambda: Vec<Vec<f64>>,
    /// Charging capacity, per (station, period).
    pub kappa: Vec<Vec<f64>>,
    /// Space, per (station, period).
    pub varpi: Vec<Vec<f64>>,
    /// Zone limits, per (zone, period).
    pub rho: Vec<Vec<f64>>,
    /// Committed chargers, per (station, period). Nonpositive.
    pub zeta: Vec<Vec<f64>>,
    /// Charger bound, per station.
    pub phi: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct SubResult {
    pub value: f64,
    pub result: SolveResult,
}

impl Subproblem {
    /// Build the template. `bound_chargers` adds the per-station charger
    /// bound, with the same bound the master uses.
    pub fn build(prob: &Problem, s: usize, bound_chargers: bool) -> Subproblem {
        let l = prob.layout();
        let (n, tt, t1) = (prob.n_stations, prob.n_periods, prob.t1);
        let mut m = LinearModel::new(&format!("recourse_{s}"));
        let mut rhs_const = Vec::new();
        let mut rhs_terms: Vec<Vec<(usize, f64)>> = Vec::new();
        let y: Vec<Vec<usize>> = prob
            .paths
            .iter()
            .enumerate()
            .map(|(p, pr)| {
                (t1..tt)
                    .map(|t| {
                        let tag = VarTag::Flow { s, q: pr.q, v: pr.v, h: pr.h, t };
                        let obj = prob.flow(s, pr.q, pr.v, t);
                        m.add_var(format!("y_{p}_{t}"), VarKind::Continuous, 0.0, 1.0, obj, Some(tag))
                    })
                    .collect()
            })
            .collect();
        let z: Vec<Vec<usize>> = (0..n)
            .map(|i| {
                (t1..tt)
                    .map(|t| m.add_var(format!("z_{i}_{t}"), VarKind::Integer, 0.0, f64::INFINITY, 0.0, Some(VarTag::Chargers { s, i, t })))
                    .collect()
            })
            .collect();
        let w: Vec<usize> = (t1..tt)
            .map(|t| m.add_var(format!("w_{t}"), VarKind::Continuous, 0.0, f64::INFINITY, 0.0, Some(VarTag::Slack { s, t })))
            .collect();

        let mut push = |m: &mut LinearModel, name: String, coefs, sense, c: f64, terms: Vec<(usize, f64)>, tag| {
            m.add_row(name, coefs, sense, c, Some(tag));
            rhs_const.push(c);
            rhs_terms.push(terms);
        };

        for i in 0..n {
            for t in t1..tt {
                let k = t - t1;
                let mut coefs: Vec<(usize, f64)> = prob.visits[i]
                    .iter()
                    .map(|&(p, u)| (y[p][k], prob.flow(s, prob.paths[p].q, prob.paths[p].v, t) * u))
                    .filter(|c| c.1 != 0.0)
                    .collect();
                if coefs.is_empty() {
                    continue;
                }
                coefs.extend((0..=k).map(|kk| (z[i][kk], -1.0)));
                let terms = (0..t1).map(|tau| (l.z(i, tau), 1.0)).collect();
                push(&mut m, format!("cap_{i}_{t}"), coefs, RowSense::Le, 0.0, terms, RowTag::Capacity { s, i, t });
            }
        }
        for i in 0..n {
            let cap = prob.capacity[i] as f64;
            for t in t1..tt {
                let k = t - t1;
                let coefs = (0..=k).map(|kk| (z[i][kk], 1.0)).collect();
                let mut terms: Vec<(usize, f64)> = (0..=t).map(|tau| (l.x(i, tau), cap)).collect();
                terms.extend((0..t1).map(|tau| (l.z(i, tau), -1.0)));
                push(&mut m, format!("space_{i}_{t}"), coefs, RowSense::Le, 0.0, terms, RowTag::Spatial { s, i, t });
            }
        }
        for (r, members) in prob.zone_members.iter().enumerate() {
            if members.is_empty() {
                continue;
            }
            for t in t1..tt {
                let k = t - t1;
                let coefs = members.iter().flat_map(|&i| (0..=k).map(move |kk| (i, kk))).map(|(i, kk)| (z[i][kk], 1.0)).collect();
                let terms = members.iter().flat_map(|&i| (0..t1).map(move |tau| (l.z(i, tau), -1.0))).collect();
                let c = prob.scen.limits[s][r][k] as f64;
                push(&mut m, format!("grid_{r}_{t}"), coefs, RowSense::Le, c, terms, RowTag::Grid { s, r, t });
            }
        }
        for (q, per_v) in prob.by_qv.iter().enumerate() {
            for (v, pp) in per_v.iter().enumerate() {
                if pp.is_empty() {
                    continue;
                }
                for t in t1..tt {
                    let coefs = pp.iter().map(|&p| (y[p][t - t1], 1.0)).collect();
                    push(&mut m, format!("flow_{q}_{v}_{t}"), coefs, RowSense::Le, 1.0, Vec::new(), RowTag::FlowCap { s, q, v, t });
                }
            }
        }
        let a = prob.carryover();
        for t in t1..tt {
            let k = t - t1;
            let mut coefs: Vec<(usize, f64)> =
                (0..n).map(|i| (z[i][k], prob.charger_cost(i, t))).filter(|c| c.1 != 0.0).collect();
            coefs.push((w[k], 1.0));
            let mut terms: Vec<(usize, f64)> =
                (0..n).map(|i| (l.x(i, t), -prob.prep_cost(i, t))).filter(|c| c.1 != 0.0).collect();
            if k == 0 {
                if a != 0.0 {
                    terms.push((l.w(t1 - 1), a));
                }
            } else if a != 0.0 {
                coefs.push((w[k - 1], -a));
            }
            push(&mut m, format!("budget_{t}"), coefs, RowSense::Eq, prob.budget_rhs(t), terms, RowTag::Budget { s, t });
        }
        for i in 0..n {
            for t in t1..tt {
                let p = prob.preplanned[i][t];
                if p > 0 {
                    let coefs = vec![(z[i][t - t1], 1.0)];
                    push(&mut m, format!("prep_{i}_{t}"), coefs, RowSense::Ge, p as f64, Vec::new(), RowTag::Preplan { s, i, t });
                }
            }
        }
        if bound_chargers {
            for i in 0..n {
                let coefs = z[i].iter().map(|&j| (j, 1.0)).collect();
                let bound = prob.charger_bound[i] as f64;
                let mut terms: Vec<(usize, f64)> = (0..tt).map(|tau| (l.x(i, tau), bound)).collect();
                terms.extend((0..t1).map(|tau| (l.z(i, tau), -1.0)));
                push(&mut m, format!("bound_{i}"), coefs, RowSense::Le, 0.0, terms, RowTag::RecourseCharger { s, i });
            }
        }
        Subproblem { s, model: m, rhs_const, rhs_terms, y, z, w }
    }

    /// The model with right-hand sides evaluated at a first-stage point.
    pub fn instantiate(&self, point: &[f64]) -> LinearModel {
        let mut m = self.model.clone();
        for (r, row) in m.rows.iter_mut().enumerate() {
            row.rhs = self.rhs_const[r] + self.rhs_terms[r].iter().map(|&(j, a)| a * point[j]).sum::<f64>();
        }
        m
    }

    pub fn solve(&self, point: &[f64], relaxed: bool, oracle: &dyn SolverOracle, opts: &SolveOptions) -> Result<SubResult, DecompError> {
        let m = self.instantiate(point);
        let mut o = opts.clone();
        o.relax = relaxed;
        let r = oracle.solve(&m, &o)?;
        match r.status {
            crate::mipcore::SolveStatus::Infeasible => Err(DecompError::RecourseInfeasible(self.s)),
            _ => {
                let r = r.into_solution().map_err(|e| match e {
                    SolverError::Infeasible => DecompError::RecourseInfeasible(self.s),
                    e => DecompError::Solver(e),
                })?;
                Ok(SubResult { value: r.objective, result: r })
            }
        }
    }

    /// Multipliers of an LP solve sorted by row family. Values are clamped to
    /// the sign their row sense allows.
    pub fn duals(&self, prob: &Problem, r: &SolveResult) -> Result<DualSolution, DecompError> {
        let rd = r.row_duals.as_ref().ok_or_else(|| DecompError::Input("subproblem was not solved as an LP".into()))?;
        let cd = r.col_duals.as_ref().ok_or_else(|| DecompError::Input("subproblem was not solved as an LP".into()))?;
        let (n, t1) = (prob.n_stations, prob.t1);
        let k2 = prob.n_periods - t1;
        let nq = prob.by_qv.len();
        let nv = prob.by_qv.first().map_or(0, |x| x.len());
        let mut d = DualSolution {
            s: self.s,
            alpha: vec![0.0; k2],
            eta: vec![vec![vec![0.0; k2]; nv]; nq],
            lambda: self.y.iter().map(|cols| cols.iter().map(|&j| cd[j].max(0.0)).collect()).collect(),
            kappa: vec![vec![0.0; k2]; n],
            varpi: vec![vec![0.0; k2]; n],
            rho: vec![vec![0.0; k2]; prob.zone_members.len()],
            zeta: vec![vec![0.0; k2]; n],
            phi: vec![0.0; n],
            objective: r.objective,
        };
        for (row, &pi) in self.model.rows.iter().zip(rd) {
            let pi = match row.sense {
                RowSense::Le => pi.max(0.0),
                RowSense::Ge => pi.min(0.0),
                RowSense::Eq => pi,
            };
            match row.tag {
                Some(RowTag::Budget { t, .. }) => d.alpha[t - t1] = pi,
                Some(RowTag::FlowCap { q, v, t, .. }) => d.eta[q][v][t - t1] = pi,
                Some(RowTag::Capacity { i, t, .. }) => d.kappa[i][t - t1] = pi,
                Some(RowTag::Spatial { i, t, .. }) => d.varpi[i][t - t1] = pi,
                Some(RowTag::Grid { r, t, .. }) => d.rho[r][t - t1] = pi,
                Some(RowTag::Preplan { i, t, .. }) => d.zeta[i][t - t1] = pi,
                Some(RowTag::RecourseCharger { i, .. }) => d.phi[i] = pi,
                _ => return Err(DecompError::Input(format!("unexpected row {} in subproblem", row.name))),
            }
        }
        Ok(d)
    }
}
