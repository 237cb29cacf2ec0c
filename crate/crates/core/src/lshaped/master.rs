use super::cuts::{Cut, CutVar};
use crate::mipcore::deterministic::{add_first_stage, FirstStageColumns};
use crate::mipcore::{LinearModel, RowSense, RowTag, VarKind, VarTag};
use crate::problem::Problem;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MasterOptions {
    /// Add the per-station charger bounds. Off only for comparisons against
    /// the plain deterministic equivalent.
    pub valid_inequalities: bool,
}

impl Default for MasterOptions {
    fn default() -> Self {
        MasterOptions { valid_inequalities: true }
    }
}

#[derive(Debug, Clone)]
pub struct Master {
    pub model: LinearModel,
    pub cols: FirstStageColumns,
    pub theta: Vec<usize>,
    /// b̃ columns per (station, first-stage period, k).
    pub bits: Vec<Vec<Vec<usize>>>,
}

/// First-stage problem with recourse estimates θ^s bounded by total demand,
/// the charger binarization with ordered bits, and the constraints that keep
/// every scenario subproblem feasible.
pub fn build_master(prob: &Problem, opts: MasterOptions) -> Master {
    let mut m = LinearModel::new("master");
    let cols = add_first_stage(&mut m, prob, true);
    let (n, tt, t1) = (prob.n_stations, prob.n_periods, prob.t1);
    let theta: Vec<usize> = (0..prob.scenarios())
        .map(|s| {
            let p = prob.scen.probabilities[s];
            m.add_var(format!("theta_{s}"), VarKind::Continuous, 0.0, f64::INFINITY, p, Some(VarTag::Recourse { s }))
        })
        .collect();
    for (s, &j) in theta.iter().enumerate() {
        m.add_row(format!("thetab_{s}"), vec![(j, 1.0)], RowSense::Le, prob.recourse_bound(s), Some(RowTag::RecourseBound { s }));
    }
    let bits: Vec<Vec<Vec<usize>>> = (0..n)
        .map(|i| {
            (0..t1)
                .map(|t| {
                    (0..prob.capacity[i] as usize)
                        .map(|k| m.add_var(format!("b_{i}_{t}_{k}"), VarKind::Binary, 0.0, 1.0, 0.0, Some(VarTag::ChargerBit { i, t, k })))
                        .collect()
                })
                .collect()
        })
        .collect();
    for i in 0..n {
        for t in 0..t1 {
            let mut coefs: Vec<(usize, f64)> = bits[i][t].iter().map(|&j| (j, 1.0)).collect();
            coefs.push((cols.z[i][t], -1.0));
            m.add_row(format!("bin_{i}_{t}"), coefs, RowSense::Eq, 0.0, Some(RowTag::Binarize { i, t }));
            for k in 1..bits[i][t].len() {
                let coefs = vec![(bits[i][t][k - 1], 1.0), (bits[i][t][k], -1.0)];
                m.add_row(format!("ord_{i}_{t}_{k}"), coefs, RowSense::Ge, 0.0, Some(RowTag::BitOrder { i, t, k }));
            }
        }
    }
    if opts.valid_inequalities {
        for i in 0..n {
            let bound = prob.charger_bound[i] as f64;
            let mut coefs: Vec<(usize, f64)> = cols.z[i].iter().map(|&j| (j, 1.0)).collect();
            coefs.extend(cols.x[i].iter().map(|&j| (j, -bound)));
            m.add_row(format!("vi_{i}"), coefs, RowSense::Le, 0.0, Some(RowTag::MasterCharger { i }));
        }
    }
    for i in 0..n {
        let Some(deadline) = prob.committed_deadline(i) else { continue };
        let coefs = (0..=deadline).map(|t| (cols.x[i][t], 1.0)).collect();
        m.add_row(format!("copen_{i}"), coefs, RowSense::Ge, 1.0, Some(RowTag::CommittedOpen { i }));
        let room = if opts.valid_inequalities { prob.capacity[i].min(prob.charger_bound[i]) } else { prob.capacity[i] } as f64;
        let mut coefs: Vec<(usize, f64)> = cols.z[i].iter().map(|&j| (j, 1.0)).collect();
        coefs.extend(cols.x[i].iter().map(|&j| (j, -room)));
        let rhs = -(prob.committed_late(i) as f64);
        m.add_row(format!("croom_{i}"), coefs, RowSense::Le, rhs, Some(RowTag::CommittedRoom { i }));
    }
    let a = prob.carryover();
    let mut prev = cols.w[t1 - 1];
    for t in t1..tt {
        let wr = m.add_var(format!("wr_{t}"), VarKind::Continuous, 0.0, f64::INFINITY, 0.0, Some(VarTag::ReserveSlack { t }));
        let mut coefs: Vec<(usize, f64)> =
            (0..n).map(|i| (cols.x[i][t], prob.prep_cost(i, t))).filter(|c| c.1 != 0.0).collect();
        coefs.push((wr, 1.0));
        if a != 0.0 {
            coefs.push((prev, -a));
        }
        m.add_row(format!("reserve_{t}"), coefs, RowSense::Eq, prob.budget(t), Some(RowTag::ReserveBudget { t }));
        prev = wr;
    }
    Master { model: m, cols, theta, bits }
}

impl Master {
    /// Cut as a master row: θ^s − Σ coef · var ≤ intercept.
    pub fn cut_row(&self, cut: &Cut) -> (Vec<(usize, f64)>, f64) {
        let mut coefs = vec![(self.theta[cut.s], 1.0)];
        for &(v, a) in &cut.terms {
            let j = match v {
                CutVar::X { i, t } => self.cols.x[i][t],
                CutVar::Z { i, t } => self.cols.z[i][t],
                CutVar::W { t } => self.cols.w[t],
                CutVar::B { i, t, k } => self.bits[i][t][k],
            };
            coefs.push((j, -a));
        }
        (coefs, cut.intercept)
    }

    /// First-stage point vector in problem layout from master columns.
    pub fn point(&self, prob: &Problem, x: &[f64]) -> Vec<f64> {
        let l = prob.layout();
        let mut p = vec![0.0; l.len()];
        for i in 0..prob.n_stations {
            for t in 0..prob.n_periods {
                p[l.x(i, t)] = x[self.cols.x[i][t]];
            }
            for t in 0..prob.t1 {
                p[l.z(i, t)] = x[self.cols.z[i][t]];
            }
        }
        for t in 0..prob.t1 {
            p[l.w(t)] = x[self.cols.w[t]];
        }
        p
    }

    /// Value of the first-stage flow terms of the objective.
    pub fn first_value(&self, x: &[f64]) -> f64 {
        self.model.objective(x) - self.theta.iter().map(|&j| self.model.vars[j].obj * x[j]).sum::<f64>()
    }
}
