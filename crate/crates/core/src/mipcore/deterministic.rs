use super::model::{LinearModel, RowSense, RowTag, VarKind, VarTag};
use crate::error::DecompError;
use crate::instance::Instance;
use crate::pathgen::PathSet;
use crate::problem::{FirstStageSolution, Problem};
use crate::scenario::ScenarioSet;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DeOptions {
    /// Keep only these scenarios, with probabilities rescaled to sum to one.
    pub scenarios: Option<Vec<usize>>,
    /// Drop first-stage flow from the objective.
    pub recourse_only: bool,
}

/// Columns of the first-stage variables in a built model.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstStageColumns {
    pub x: Vec<Vec<usize>>,
    pub z: Vec<Vec<usize>>,
    pub w: Vec<usize>,
}

/// The full model over every scenario, as written.
pub fn deterministic_equivalent(inst: &Instance, paths: &PathSet, scen: &ScenarioSet) -> Result<LinearModel, DecompError> {
    let prob = Problem::new(inst, paths, scen)?;
    Ok(build_deterministic_equivalent(&prob, &DeOptions::default()))
}

pub(crate) fn add_first_stage(m: &mut LinearModel, prob: &Problem, first_objective: bool) -> FirstStageColumns {
    let (n, tt, t1) = (prob.n_stations, prob.n_periods, prob.t1);
    let x: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..tt)
                .map(|t| m.add_var(format!("x_{i}_{t}"), VarKind::Binary, 0.0, 1.0, 0.0, Some(VarTag::Prepare { i, t })))
                .collect()
        })
        .collect();
    let z: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..t1)
                .map(|t| {
                    let ub = prob.capacity[i] as f64;
                    m.add_var(format!("zf_{i}_{t}"), VarKind::Integer, 0.0, ub, 0.0, Some(VarTag::FirstChargers { i, t }))
                })
                .collect()
        })
        .collect();
    let w: Vec<usize> = (0..t1)
        .map(|t| m.add_var(format!("wf_{t}"), VarKind::Continuous, 0.0, f64::INFINITY, 0.0, Some(VarTag::FirstSlack { t })))
        .collect();
    let y: Vec<Vec<usize>> = prob
        .paths
        .iter()
        .enumerate()
        .map(|(p, pr)| {
            (0..t1)
                .map(|t| {
                    let obj = if first_objective { prob.first_flow(pr.q, pr.v, t) } else { 0.0 };
                    let tag = VarTag::FirstFlow { q: pr.q, v: pr.v, h: pr.h, t };
                    m.add_var(format!("yf_{p}_{t}"), VarKind::Continuous, 0.0, 1.0, obj, Some(tag))
                })
                .collect()
        })
        .collect();

    for i in 0..n {
        let coefs = x[i].iter().map(|&j| (j, 1.0)).collect();
        m.add_row(format!("open_{i}"), coefs, RowSense::Le, 1.0, Some(RowTag::OpenOnce { i }));
    }
    for i in 0..n {
        if prob.visits[i].is_empty() {
            continue;
        }
        for t in 0..t1 {
            let mut coefs: Vec<(usize, f64)> = prob.visits[i]
                .iter()
                .map(|&(p, u)| (y[p][t], prob.first_flow(prob.paths[p].q, prob.paths[p].v, t) * u))
                .filter(|c| c.1 != 0.0)
                .collect();
            if coefs.is_empty() {
                continue;
            }
            coefs.extend((0..=t).map(|tau| (z[i][tau], -1.0)));
            m.add_row(format!("capf_{i}_{t}"), coefs, RowSense::Le, 0.0, Some(RowTag::FirstCapacity { i, t }));
        }
    }
    for i in 0..n {
        let k = prob.capacity[i] as f64;
        for t in 0..t1 {
            let mut coefs: Vec<(usize, f64)> = (0..=t).map(|tau| (z[i][tau], 1.0)).collect();
            coefs.extend((0..=t).map(|tau| (x[i][tau], -k)));
            m.add_row(format!("spacef_{i}_{t}"), coefs, RowSense::Le, 0.0, Some(RowTag::FirstSpatial { i, t }));
        }
    }
    for (r, members) in prob.zone_members.iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        for t in 0..t1 {
            let coefs = members.iter().flat_map(|&i| (0..=t).map(move |tau| (i, tau))).map(|(i, tau)| (z[i][tau], 1.0)).collect();
            let rhs = prob.scen.first_limits[r][t] as f64;
            m.add_row(format!("gridf_{r}_{t}"), coefs, RowSense::Le, rhs, Some(RowTag::FirstGrid { r, t }));
        }
    }
    for (q, per_v) in prob.by_qv.iter().enumerate() {
        for (v, ps) in per_v.iter().enumerate() {
            if ps.is_empty() {
                continue;
            }
            for t in 0..t1 {
                let coefs = ps.iter().map(|&p| (y[p][t], 1.0)).collect();
                m.add_row(format!("flowf_{q}_{v}_{t}"), coefs, RowSense::Le, 1.0, Some(RowTag::FirstFlowCap { q, v, t }));
            }
        }
    }
    let a = prob.carryover();
    for t in 0..t1 {
        let mut coefs: Vec<(usize, f64)> = Vec::new();
        for i in 0..n {
            coefs.push((x[i][t], prob.prep_cost(i, t)));
            coefs.push((z[i][t], prob.charger_cost(i, t)));
        }
        coefs.push((w[t], 1.0));
        if t > 0 {
            coefs.push((w[t - 1], -a));
        }
        coefs.retain(|c| c.1 != 0.0);
        m.add_row(format!("budgetf_{t}"), coefs, RowSense::Eq, prob.budget_rhs(t), Some(RowTag::FirstBudget { t }));
    }
    for i in 0..n {
        for t in 0..t1 {
            let p = prob.preplanned[i][t];
            if p > 0 {
                m.add_row(format!("prepf_{i}_{t}"), vec![(z[i][t], 1.0)], RowSense::Ge, p as f64, Some(RowTag::FirstPreplan { i, t }));
            }
        }
    }
    FirstStageColumns { x, z, w }
}

/// Deterministic equivalent for the selected scenarios. Rows
/// without flow terms on their left-hand side, and zone rows without
/// counted stations, are omitted because they cannot bind.
pub fn build_deterministic_equivalent(prob: &Problem, opts: &DeOptions) -> LinearModel {
    let mut m = LinearModel::new("deterministic_equivalent");
    let fs = add_first_stage(&mut m, prob, !opts.recourse_only);
    let scenarios: Vec<usize> = opts.scenarios.clone().unwrap_or_else(|| (0..prob.scenarios()).collect());
    let mass: f64 = scenarios.iter().map(|&s| prob.scen.probabilities[s]).sum();
    let (n, tt, t1) = (prob.n_stations, prob.n_periods, prob.t1);
    let a = prob.carryover();
    for &s in &scenarios {
        let ps = prob.scen.probabilities[s] / mass;
        let y: Vec<Vec<usize>> = prob
            .paths
            .iter()
            .enumerate()
            .map(|(p, pr)| {
                (t1..tt)
                    .map(|t| {
                        let tag = VarTag::Flow { s, q: pr.q, v: pr.v, h: pr.h, t };
                        let obj = ps * prob.flow(s, pr.q, pr.v, t);
                        m.add_var(format!("y_{s}_{p}_{t}"), VarKind::Continuous, 0.0, 1.0, obj, Some(tag))
                    })
                    .collect()
            })
            .collect();
        let z: Vec<Vec<usize>> = (0..n)
            .map(|i| {
                (t1..tt)
                    .map(|t| {
                        let tag = VarTag::Chargers { s, i, t };
                        m.add_var(format!("z_{s}_{i}_{t}"), VarKind::Integer, 0.0, f64::INFINITY, 0.0, Some(tag))
                    })
                    .collect()
            })
            .collect();
        let w: Vec<usize> = (t1..tt)
            .map(|t| m.add_var(format!("w_{s}_{t}"), VarKind::Continuous, 0.0, f64::INFINITY, 0.0, Some(VarTag::Slack { s, t })))
            .collect();

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
                coefs.extend(fs.z[i].iter().map(|&j| (j, -1.0)));
                coefs.extend((0..=k).map(|kk| (z[i][kk], -1.0)));
                m.add_row(format!("cap_{s}_{i}_{t}"), coefs, RowSense::Le, 0.0, Some(RowTag::Capacity { s, i, t }));
            }
        }
        for i in 0..n {
            let cap = prob.capacity[i] as f64;
            for t in t1..tt {
                let k = t - t1;
                let mut coefs: Vec<(usize, f64)> = fs.z[i].iter().map(|&j| (j, 1.0)).collect();
                coefs.extend((0..=k).map(|kk| (z[i][kk], 1.0)));
                coefs.extend((0..=t).map(|tau| (fs.x[i][tau], -cap)));
                m.add_row(format!("space_{s}_{i}_{t}"), coefs, RowSense::Le, 0.0, Some(RowTag::Spatial { s, i, t }));
            }
        }
        for (r, members) in prob.zone_members.iter().enumerate() {
            if members.is_empty() {
                continue;
            }
            for t in t1..tt {
                let k = t - t1;
                let mut coefs: Vec<(usize, f64)> = Vec::new();
                for &i in members {
                    coefs.extend(fs.z[i].iter().map(|&j| (j, 1.0)));
                    coefs.extend((0..=k).map(|kk| (z[i][kk], 1.0)));
                }
                let rhs = prob.scen.limits[s][r][k] as f64;
                m.add_row(format!("grid_{s}_{r}_{t}"), coefs, RowSense::Le, rhs, Some(RowTag::Grid { s, r, t }));
            }
        }
        for (q, per_v) in prob.by_qv.iter().enumerate() {
            for (v, pp) in per_v.iter().enumerate() {
                if pp.is_empty() {
                    continue;
                }
                for t in t1..tt {
                    let coefs = pp.iter().map(|&p| (y[p][t - t1], 1.0)).collect();
                    m.add_row(format!("flow_{s}_{q}_{v}_{t}"), coefs, RowSense::Le, 1.0, Some(RowTag::FlowCap { s, q, v, t }));
                }
            }
        }
        for t in t1..tt {
            let k = t - t1;
            let mut coefs: Vec<(usize, f64)> = Vec::new();
            for i in 0..n {
                coefs.push((fs.x[i][t], prob.prep_cost(i, t)));
                coefs.push((z[i][k], prob.charger_cost(i, t)));
            }
            coefs.push((w[k], 1.0));
            coefs.push((if k == 0 { fs.w[t1 - 1] } else { w[k - 1] }, -a));
            coefs.retain(|c| c.1 != 0.0);
            m.add_row(format!("budget_{s}_{t}"), coefs, RowSense::Eq, prob.budget_rhs(t), Some(RowTag::Budget { s, t }));
        }
        for i in 0..n {
            for t in t1..tt {
                let p = prob.preplanned[i][t];
                if p > 0 {
                    let tag = RowTag::Preplan { s, i, t };
                    m.add_row(format!("prep_{s}_{i}_{t}"), vec![(z[i][t - t1], 1.0)], RowSense::Ge, p as f64, Some(tag));
                }
            }
        }
    }
    m
}

/// Columns of x̃, z̃ and w̃ in a model built by this crate.
pub fn first_stage_columns(model: &LinearModel, prob: &Problem) -> Result<FirstStageColumns, DecompError> {
    let miss = || DecompError::Input("model lacks first-stage variables for this instance".into());
    let x = (0..prob.n_stations)
        .map(|i| (0..prob.n_periods).map(|t| model.var(VarTag::Prepare { i, t }).ok_or_else(miss)).collect())
        .collect::<Result<Vec<Vec<usize>>, _>>()?;
    let z = (0..prob.n_stations)
        .map(|i| (0..prob.t1).map(|t| model.var(VarTag::FirstChargers { i, t }).ok_or_else(miss)).collect())
        .collect::<Result<Vec<Vec<usize>>, _>>()?;
    let w = (0..prob.t1).map(|t| model.var(VarTag::FirstSlack { t }).ok_or_else(miss)).collect::<Result<Vec<usize>, _>>()?;
    Ok(FirstStageColumns { x, z, w })
}

/// Pin x̃, z̃ and w̃ to the given values.
pub fn fix_first_stage(model: &LinearModel, prob: &Problem, sol: &FirstStageSolution) -> Result<LinearModel, DecompError> {
    if sol.x.len() != prob.n_stations
        || sol.x.iter().any(|r| r.len() != prob.n_periods)
        || sol.z.len() != prob.n_stations
        || sol.z.iter().any(|r| r.len() != prob.t1)
        || sol.w.len() != prob.t1
    {
        return Err(DecompError::Input("first-stage solution does not match the model dimensions".into()));
    }
    let cols = first_stage_columns(model, prob)?;
    let mut m = model.clone();
    let mut pin = |j: usize, v: f64| {
        m.vars[j].lb = v;
        m.vars[j].ub = v;
    };
    for i in 0..prob.n_stations {
        for t in 0..prob.n_periods {
            pin(cols.x[i][t], sol.x[i][t] as f64);
        }
        for t in 0..prob.t1 {
            pin(cols.z[i][t], sol.z[i][t] as f64);
        }
    }
    for t in 0..prob.t1 {
        pin(cols.w[t], sol.w[t]);
    }
    Ok(m)
}

/// First-stage decisions read off a solved model.
pub fn extract_first_stage(model: &LinearModel, prob: &Problem, x: &[f64]) -> Result<FirstStageSolution, DecompError> {
    let cols = first_stage_columns(model, prob)?;
    let xs = cols.x.iter().map(|r| r.iter().map(|&j| x[j].round().clamp(0.0, 1.0) as u8).collect()).collect();
    let zs = cols.z.iter().map(|r| r.iter().map(|&j| x[j].round().max(0.0) as u32).collect()).collect();
    Ok(FirstStageSolution::complete(prob, xs, zs))
}
