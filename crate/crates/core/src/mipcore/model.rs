use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VarKind {
    Continuous,
    Integer,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

/// Model symbol behind a variable. Periods are global indices into the
/// planning horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VarTag {
    /// x̃_it, station prepared in period t.
    Prepare { i: usize, t: usize },
    /// z̃_it, first-stage chargers.
    FirstChargers { i: usize, t: usize },
    /// ỹ_qvht
    FirstFlow { q: usize, v: usize, h: usize, t: usize },
    /// w̃_t
    FirstSlack { t: usize },
    /// y^s_qvht
    Flow { s: usize, q: usize, v: usize, h: usize, t: usize },
    /// z^s_it
    Chargers { s: usize, i: usize, t: usize },
    /// w^s_t
    Slack { s: usize, t: usize },
    /// θ^s
    Recourse { s: usize },
    /// b̃_itk, k counted from 0.
    ChargerBit { i: usize, t: usize, k: usize },
    /// Budget left in a second-stage period if only committed chargers are
    /// built. Scenario independent.
    ReserveSlack { t: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RowTag {
    OpenOnce { i: usize },
    FirstCapacity { i: usize, t: usize },
    Capacity { s: usize, i: usize, t: usize },
    FirstSpatial { i: usize, t: usize },
    Spatial { s: usize, i: usize, t: usize },
    FirstGrid { r: usize, t: usize },
    Grid { s: usize, r: usize, t: usize },
    FirstFlowCap { q: usize, v: usize, t: usize },
    FlowCap { s: usize, q: usize, v: usize, t: usize },
    FirstBudget { t: usize },
    Budget { s: usize, t: usize },
    FirstPreplan { i: usize, t: usize },
    Preplan { s: usize, i: usize, t: usize },
    /// Charger bound in the master.
    MasterCharger { i: usize },
    /// Charger bound in a scenario subproblem.
    RecourseCharger { s: usize, i: usize },
    RecourseBound { s: usize },
    Binarize { i: usize, t: usize },
    BitOrder { i: usize, t: usize, k: usize },
    /// Station with committed second-stage chargers must be prepared in time.
    CommittedOpen { i: usize },
    /// Room left for committed second-stage chargers.
    CommittedRoom { i: usize },
    ReserveBudget { t: usize },
    Cut { id: usize },
    Fixing { col: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lb: f64,
    pub ub: f64,
    pub obj: f64,
    pub tag: Option<VarTag>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub name: String,
    pub coefs: Vec<(usize, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
    pub tag: Option<RowTag>,
}

impl Row {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coefs.iter().map(|&(j, a)| a * x[j]).sum()
    }
}

/// A maximisation model with tagged variables and rows.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub name: String,
    pub vars: Vec<Variable>,
    pub rows: Vec<Row>,
    /// Constant added to the objective.
    pub obj_offset: f64,
    #[serde(skip)]
    var_index: HashMap<VarTag, usize>,
    #[serde(skip)]
    row_index: HashMap<RowTag, usize>,
}

impl LinearModel {
    pub fn new(name: &str) -> Self {
        LinearModel { name: name.to_string(), ..Default::default() }
    }

    pub fn add_var(&mut self, name: String, kind: VarKind, lb: f64, ub: f64, obj: f64, tag: Option<VarTag>) -> usize {
        let j = self.vars.len();
        let (lb, ub) = match kind {
            VarKind::Binary => (lb.max(0.0), ub.min(1.0)),
            _ => (lb, ub),
        };
        if let Some(t) = tag {
            self.var_index.insert(t, j);
        }
        self.vars.push(Variable { name, kind, lb, ub, obj, tag });
        j
    }

    pub fn add_row(&mut self, name: String, coefs: Vec<(usize, f64)>, sense: RowSense, rhs: f64, tag: Option<RowTag>) -> usize {
        let r = self.rows.len();
        if let Some(t) = tag {
            self.row_index.insert(t, r);
        }
        self.rows.push(Row { name, coefs, sense, rhs, tag });
        r
    }

    pub fn var(&self, tag: VarTag) -> Option<usize> {
        self.var_index.get(&tag).copied()
    }

    pub fn row(&self, tag: RowTag) -> Option<usize> {
        self.row_index.get(&tag).copied()
    }

    /// Rebuild the tag lookups, e.g. after deserialising.
    pub fn reindex(&mut self) {
        self.var_index = self.vars.iter().enumerate().filter_map(|(j, v)| v.tag.map(|t| (t, j))).collect();
        self.row_index = self.rows.iter().enumerate().filter_map(|(r, row)| row.tag.map(|t| (t, r))).collect();
    }

    pub fn is_mip(&self) -> bool {
        self.vars.iter().any(|v| v.kind != VarKind::Continuous)
    }

    /// Same model with every integrality requirement dropped.
    pub fn relaxed(&self) -> LinearModel {
        let mut m = self.clone();
        for v in &mut m.vars {
            v.kind = VarKind::Continuous;
        }
        m
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.obj_offset + self.vars.iter().zip(x).map(|(v, &xj)| v.obj * xj).sum::<f64>()
    }

    /// Rows, bounds and integrality all hold within `tol`.
    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        self.violations(x, tol).is_empty()
    }

    pub fn violations(&self, x: &[f64], tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        if x.len() != self.vars.len() {
            out.push(format!("point has {} entries, model has {} variables", x.len(), self.vars.len()));
            return out;
        }
        for (v, &xj) in self.vars.iter().zip(x) {
            if xj < v.lb - tol || xj > v.ub + tol {
                out.push(format!("{} = {xj} outside [{}, {}]", v.name, v.lb, v.ub));
            }
            if v.kind != VarKind::Continuous && (xj - xj.round()).abs() > tol {
                out.push(format!("{} = {xj} is not integral", v.name));
            }
        }
        for row in &self.rows {
            let a = row.activity(x);
            let bad = match row.sense {
                RowSense::Le => a > row.rhs + tol,
                RowSense::Ge => a < row.rhs - tol,
                RowSense::Eq => (a - row.rhs).abs() > tol,
            };
            if bad {
                out.push(format!("{}: activity {a} vs rhs {}", row.name, row.rhs));
            }
        }
        out
    }

    /// Every row refers to declared variables and every bound pair is ordered.
    pub fn check(&self) -> Result<(), String> {
        let n = self.vars.len();
        for row in &self.rows {
            if let Some(&(j, _)) = row.coefs.iter().find(|&&(j, _)| j >= n) {
                return Err(format!("row {} refers to undeclared variable {j}", row.name));
            }
        }
        for v in &self.vars {
            if v.lb > v.ub || v.lb.is_nan() || v.ub.is_nan() {
                return Err(format!("variable {} has bounds [{}, {}]", v.name, v.lb, v.ub));
            }
        }
        Ok(())
    }

    /// CPLEX LP text, for inspection with external tools.
    pub fn to_lp_string(&self) -> String {
        let mut s = String::new();
        let term = |s: &mut String, a: f64, name: &str, first: bool| {
            if a < 0.0 {
                let _ = write!(s, " - {} {name}", -a);
            } else if first {
                let _ = write!(s, " {a} {name}");
            } else {
                let _ = write!(s, " + {a} {name}");
            }
        };
        s.push_str("\\ ");
        s.push_str(&self.name);
        s.push_str("\nMaximize\n obj:");
        let mut first = true;
        for v in self.vars.iter().filter(|v| v.obj != 0.0) {
            term(&mut s, v.obj, &v.name, first);
            first = false;
        }
        if self.obj_offset != 0.0 || first {
            term(&mut s, self.obj_offset, "", first);
        }
        s.push_str("\nSubject To\n");
        for row in &self.rows {
            let _ = write!(s, " {}:", row.name);
            if row.coefs.is_empty() {
                s.push_str(" 0 ");
                s.push_str(&self.vars.first().map_or("x0".to_string(), |v| v.name.clone()));
            }
            for (k, &(j, a)) in row.coefs.iter().enumerate() {
                term(&mut s, a, &self.vars[j].name, k == 0);
            }
            let op = match row.sense {
                RowSense::Le => "<=",
                RowSense::Ge => ">=",
                RowSense::Eq => "=",
            };
            let _ = writeln!(s, " {op} {}", row.rhs);
        }
        s.push_str("Bounds\n");
        for v in &self.vars {
            let lb = if v.lb.is_finite() { v.lb.to_string() } else { "-inf".into() };
            let ub = if v.ub.is_finite() { v.ub.to_string() } else { "+inf".into() };
            let _ = writeln!(s, " {lb} <= {} <= {ub}", v.name);
        }
        let ints: Vec<&str> = self.vars.iter().filter(|v| v.kind == VarKind::Integer).map(|v| v.name.as_str()).collect();
        let bins: Vec<&str> = self.vars.iter().filter(|v| v.kind == VarKind::Binary).map(|v| v.name.as_str()).collect();
        if !ints.is_empty() {
            let _ = writeln!(s, "General\n {}", ints.join(" "));
        }
        if !bins.is_empty() {
            let _ = writeln!(s, "Binary\n {}", bins.join(" "));
        }
        s.push_str("End\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feasibility_and_lookup() {
        let mut m = LinearModel::new("t");
        let x = m.add_var("x".into(), VarKind::Integer, 0.0, 5.0, 1.0, Some(VarTag::Recourse { s: 0 }));
        let y = m.add_var("y".into(), VarKind::Continuous, 0.0, 1.0, 2.0, None);
        m.add_row("c".into(), vec![(x, 1.0), (y, 1.0)], RowSense::Le, 3.0, Some(RowTag::RecourseBound { s: 0 }));
        assert_eq!(m.var(VarTag::Recourse { s: 0 }), Some(x));
        assert_eq!(m.row(RowTag::RecourseBound { s: 0 }), Some(0));
        assert!(m.is_feasible(&[2.0, 1.0], 1e-9));
        assert!(!m.is_feasible(&[2.5, 0.0], 1e-9));
        assert!(!m.is_feasible(&[3.0, 1.0], 1e-9));
        assert_eq!(m.objective(&[2.0, 1.0]), 4.0);
        let lp = m.to_lp_string();
        assert!(lp.contains("c: 1 x + 1 y <= 3"));
        assert!(lp.contains("General\n x"));
    }

    #[test]
    fn check_catches_bad_reference() {
        let mut m = LinearModel::new("t");
        m.add_row("c".into(), vec![(3, 1.0)], RowSense::Le, 1.0, None);
        assert!(m.check().is_err());
    }
}
