use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::subproblem::{DualSolution, Subproblem};
use crate::error::DecompError;
use crate::mipcore::SolveResult;
use crate::problem::{FirstStageSolution, Problem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CutKind {
    Linear,
    Integer,
}

/// First-stage symbol carrying a cut coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CutVar {
    X { i: usize, t: usize },
    Z { i: usize, t: usize },
    W { t: usize },
    B { i: usize, t: usize, k: usize },
}

/// θ^s ≤ intercept + Σ coef · var.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cut {
    pub kind: CutKind,
    pub s: usize,
    pub intercept: f64,
    pub terms: Vec<(CutVar, f64)>,
    /// Digest of the first-stage point the cut was generated at.
    pub origin: String,
}

impl Cut {
    /// Right-hand side at a first-stage point given as x̃, z̃, w̃ and bits.
    pub fn rhs(&self, fs: &FirstStageSolution, bits: &[Vec<Vec<u8>>]) -> f64 {
        self.intercept
            + self
                .terms
                .iter()
                .map(|&(v, a)| {
                    a * match v {
                        CutVar::X { i, t } => fs.x[i][t] as f64,
                        CutVar::Z { i, t } => fs.z[i][t] as f64,
                        CutVar::W { t } => fs.w[t],
                        CutVar::B { i, t, k } => bits[i][t][k] as f64,
                    }
                })
                .sum::<f64>()
    }

    /// Right-hand side at a fractional point; bit values come from `bits`.
    pub fn rhs_at(&self, prob: &Problem, point: &[f64], bits: &dyn Fn(usize, usize, usize) -> f64) -> f64 {
        let l = prob.layout();
        self.intercept
            + self
                .terms
                .iter()
                .map(|&(v, a)| {
                    a * match v {
                        CutVar::X { i, t } => point[l.x(i, t)],
                        CutVar::Z { i, t } => point[l.z(i, t)],
                        CutVar::W { t } => point[l.w(t)],
                        CutVar::B { i, t, k } => bits(i, t, k),
                    }
                })
                .sum::<f64>()
    }

    fn key(&self) -> (usize, CutKind, Vec<i64>) {
        let q = |v: f64| (v * 1e8).round() as i64;
        let mut k = vec![q(self.intercept)];
        let mut terms = self.terms.clone();
        terms.sort_by(|a, b| a.0.cmp(&b.0));
        for (v, a) in terms {
            if q(a) != 0 {
                let code = match v {
                    CutVar::X { i, t } => (0, i, t, 0),
                    CutVar::Z { i, t } => (1, i, t, 0),
                    CutVar::W { t } => (2, 0, t, 0),
                    CutVar::B { i, t, k } => (3, i, t, k),
                };
                k.extend([code.0, code.1 as i64, code.2 as i64, code.3 as i64, q(a)]);
            }
        }
        (self.s, self.kind, k)
    }
}

fn push(terms: &mut Vec<(CutVar, f64)>, v: CutVar, a: f64) {
    if a != 0.0 {
        terms.push((v, a));
    }
}

/// Linear optimality cut from named multipliers:
/// e = Σ(B + ΣC^V P)α + Ση + Σλ + ΣLρ + ΣPζ,
/// X_iτ = K_i Σ_{t≥τ} ϖ_it + M_i φ_i − C^F_iτ α_τ (last term for τ in T₂),
/// Z_iτ = Σκ_it − Σϖ_it − Σρ_{r(i)t} − φ_i,
/// W = A α_{t₀} on the last first-stage period.
pub fn linear_cut(dual: &DualSolution, prob: &Problem, origin: &str) -> Cut {
    let (n, tt, t1) = (prob.n_stations, prob.n_periods, prob.t1);
    let k2 = tt - t1;
    let mut e = 0.0;
    for k in 0..k2 {
        let t = t1 + k;
        e += prob.budget_rhs(t) * dual.alpha[k];
        for (r, rho) in dual.rho.iter().enumerate() {
            e += prob.scen.limits[dual.s][r][k] as f64 * rho[k];
        }
        for i in 0..n {
            e += prob.preplanned[i][t] as f64 * dual.zeta[i][k];
        }
    }
    e += dual.eta.iter().flatten().flatten().sum::<f64>();
    e += dual.lambda.iter().flatten().sum::<f64>();

    let mut terms = Vec::new();
    for i in 0..n {
        let k_i = prob.capacity[i] as f64;
        let m_i = prob.charger_bound[i] as f64;
        for tau in 0..tt {
            let mut c: f64 = (0..k2).filter(|&k| t1 + k >= tau).map(|k| k_i * dual.varpi[i][k]).sum();
            c += m_i * dual.phi[i];
            if tau >= t1 {
                c -= prob.prep_cost(i, tau) * dual.alpha[tau - t1];
            }
            push(&mut terms, CutVar::X { i, t: tau }, c);
        }
        let mut zc: f64 = dual.kappa[i].iter().sum::<f64>() - dual.varpi[i].iter().sum::<f64>() - dual.phi[i];
        if !prob.exempt[i] {
            zc -= dual.rho[prob.zone[i]].iter().sum::<f64>();
        }
        for tau in 0..t1 {
            push(&mut terms, CutVar::Z { i, t: tau }, zc);
        }
    }
    if k2 > 0 {
        push(&mut terms, CutVar::W { t: t1 - 1 }, prob.carryover() * dual.alpha[0]);
    }
    Cut { kind: CutKind::Linear, s: dual.s, intercept: e, terms, origin: origin.to_string() }
}

/// The same cut computed without naming rows: each row dual times its
/// affine right-hand side, plus the active column upper bounds.
pub fn generic_cut(sub: &Subproblem, prob: &Problem, r: &SolveResult, origin: &str) -> Result<Cut, DecompError> {
    use crate::mipcore::RowSense;
    let rd = r.row_duals.as_ref().ok_or_else(|| DecompError::Input("no duals".into()))?;
    let cd = r.col_duals.as_ref().ok_or_else(|| DecompError::Input("no duals".into()))?;
    let l = prob.layout();
    let mut dense = vec![0.0; l.len()];
    let mut e = 0.0;
    for (row, (&pi, (c, terms))) in sub.model.rows.iter().zip(rd.iter().zip(sub.rhs_const.iter().zip(&sub.rhs_terms))) {
        let pi = match row.sense {
            RowSense::Le => pi.max(0.0),
            RowSense::Ge => pi.min(0.0),
            RowSense::Eq => pi,
        };
        e += pi * c;
        for &(j, a) in terms {
            dense[j] += pi * a;
        }
    }
    for (v, &d) in sub.model.vars.iter().zip(cd) {
        if d > 0.0 && v.ub.is_finite() {
            e += d * v.ub;
        }
    }
    let mut terms = Vec::new();
    for i in 0..prob.n_stations {
        for t in 0..prob.n_periods {
            push(&mut terms, CutVar::X { i, t }, dense[l.x(i, t)]);
        }
        for t in 0..prob.t1 {
            push(&mut terms, CutVar::Z { i, t }, dense[l.z(i, t)]);
        }
    }
    for t in 0..prob.t1 {
        push(&mut terms, CutVar::W { t }, dense[l.w(t)]);
    }
    Ok(Cut { kind: CutKind::Linear, s: sub.s, intercept: e, terms, origin: origin.to_string() })
}

/// Integer optimality cut at a binary point with recourse value `q` and
/// global bound `u`.
pub fn integer_cut(prob: &Problem, fs: &FirstStageSolution, q: f64, u: f64, s: usize) -> Result<Cut, DecompError> {
    if u < q - 1e-7 * (1.0 + q.abs()) {
        return Err(DecompError::CutBound { bound: u, q });
    }
    let u = u.max(q);
    let slope = q - u;
    let bits = fs.binarization(&prob.capacity);
    let mut ones = 0usize;
    let mut terms = Vec::new();
    for i in 0..prob.n_stations {
        for t in 0..prob.n_periods {
            let on = fs.x[i][t] == 1;
            ones += on as usize;
            push(&mut terms, CutVar::X { i, t }, if on { slope } else { -slope });
        }
        for t in 0..prob.t1 {
            for (k, &b) in bits[i][t].iter().enumerate() {
                ones += (b == 1) as usize;
                push(&mut terms, CutVar::B { i, t, k }, if b == 1 { slope } else { -slope });
            }
        }
    }
    Ok(Cut { kind: CutKind::Integer, s, intercept: q - slope * ones as f64, terms, origin: fs.digest() })
}

/// All cuts added so far, without duplicates.
#[derive(Debug, Clone, Default)]
pub struct CutPool {
    pub cuts: Vec<Cut>,
    seen: HashSet<(usize, CutKind, Vec<i64>)>,
}

impl CutPool {
    /// Returns false if an identical cut is already pooled.
    pub fn insert(&mut self, cut: Cut) -> bool {
        if self.seen.insert(cut.key()) {
            self.cuts.push(cut);
            true
        } else {
            false
        }
    }

    pub fn len(&self) -> usize {
        self.cuts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }

    pub fn count(&self, kind: CutKind) -> usize {
        self.cuts.iter().filter(|c| c.kind == kind).count()
    }
}
