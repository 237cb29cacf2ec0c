use cslp_core::fixtures::{case, random_first_stage, toy, CaseSpec, ToyOd, ToySpec};
use cslp_core::lshaped::*;
use cslp_core::mipcore::{build_deterministic_equivalent, DeOptions, HighsOracle, SolveOptions, SolverOracle};
use cslp_core::problem::{f_max, FirstStageSolution, PathRef};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

#[test]
fn fmax_examples() {
    let two = toy(&ToySpec {
        ods: vec![
            ToyOd { paths: vec![vec![(0, 0.25)]], first_flow: 8.0, flows: vec![8.0] },
            ToyOd { paths: vec![vec![(0, 1.0)]], first_flow: 1.0, flows: vec![1.0] },
        ],
        stations: 2,
        ..ToySpec::default()
    });
    let prob = two.problem();
    assert!(close(prob.fmax[0][0], 3.0, 1e-12));
    assert_eq!(prob.fmax[1][0], 0.0);

    let one = toy(&ToySpec {
        t2: 2,
        ods: vec![ToyOd { paths: vec![vec![(0, 0.5)]], first_flow: 1.0, flows: vec![4.0] }],
        ..ToySpec::default()
    });
    let prob = one.problem();
    let paths = vec![PathRef { q: 0, v: 0, h: 0, visits: vec![(0, 0.5)] }];
    assert!(close(f_max(&[(0, 0.5)], &paths, &prob.scen, 0), 2.0, 1e-12));
    assert_eq!(f_max(&[], &paths, &prob.scen, 0), 0.0);
}

#[test]
fn theta_bound_is_total_second_stage_demand() {
    let c = toy(&ToySpec {
        t2: 3,
        ods: vec![
            ToyOd { paths: vec![vec![(0, 1.0)]], first_flow: 1.0, flows: vec![3.0, 1.0] },
            ToyOd { paths: vec![vec![(0, 1.0)]], first_flow: 1.0, flows: vec![1.0, 1.0] },
        ],
        ..ToySpec::default()
    });
    let prob = c.problem();
    assert!(close(prob.recourse_bound(0), 12.0, 1e-12));
    let master = build_master(&prob, MasterOptions::default());
    let row = master.model.row(cslp_core::mipcore::RowTag::RecourseBound { s: 0 }).unwrap();
    assert!(close(master.model.rows[row].rhs, 12.0, 1e-12));
}

#[test]
fn zero_demand_gives_zero() {
    let mut c = case(&CaseSpec::default(), 1);
    for d in c.scen.first_demand.iter_mut().flatten().flatten() {
        *d = 0.0;
    }
    for d in c.scen.demand.iter_mut().flatten().flatten().flatten() {
        *d = 0.0;
    }
    let prob = c.problem();
    let (pool, bounds) = root_strengthen(&prob, &HighsOracle, &LShapedOptions::default()).unwrap();
    assert_eq!(bounds.len(), 1);
    assert!(pool.is_empty());
    let r = branch_and_cut(&prob, &HighsOracle, &LShapedOptions::default()).unwrap();
    assert!(r.log.lb.abs() < 1e-9 && r.log.ub.abs() < 1e-9);
}

#[test]
fn subproblem_examples() {
    let spec = ToySpec {
        t1: 1,
        t2: 3,
        ods: vec![ToyOd { paths: vec![vec![(0, 1.0)]], first_flow: 3.0, flows: vec![3.0] }],
        budget: 0.0,
        prep_cost: 0.0,
        charger_cost: 0.0,
        ..ToySpec::default()
    };
    let prob = toy(&spec).problem();
    let sub = Subproblem::build(&prob, 0, false);
    let zero = FirstStageSolution::zero(&prob);
    let r = sub.solve(&zero.to_point(&prob), false, &HighsOracle, &SolveOptions::exact()).unwrap();
    assert!(r.value.abs() < 1e-9);

    // Chargers are free here; with one charger and no second-stage builds
    // the recourse covers one vehicle per period.
    let spec = ToySpec { charger_cost: 1.0, ..spec };
    let prob = toy(&spec).problem();
    let sub = Subproblem::build(&prob, 0, false);
    let mut x = vec![vec![0u8; 4]];
    x[0][0] = 1;
    let fs = FirstStageSolution::complete(&prob, x, vec![vec![1]]);
    let fs = FirstStageSolution { w: vec![0.0], ..fs };
    let r = sub.solve(&fs.to_point(&prob), false, &HighsOracle, &SolveOptions::exact()).unwrap();
    assert!(close(r.value, 3.0, 1e-9), "{}", r.value);
}

#[test]
fn relaxed_recourse_bounds_integer_recourse() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for seed in 0..3 {
        let prob = case(&CaseSpec::default(), seed).problem();
        for _ in 0..10 {
            let fs = random_first_stage(&prob, &mut rng, true);
            let p = fs.to_point(&prob);
            for s in 0..prob.scenarios() {
                let sub = Subproblem::build(&prob, s, true);
                let lp = sub.solve(&p, true, &HighsOracle, &SolveOptions::lp()).unwrap().value;
                let ip = sub.solve(&p, false, &HighsOracle, &SolveOptions::exact()).unwrap().value;
                assert!(lp >= ip - 1e-6);
            }
        }
    }
}

#[test]
fn linear_cut_is_tight_and_matches_generic_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for seed in 0..4 {
        let prob = case(&CaseSpec::default(), seed).problem();
        for _ in 0..10 {
            let fs = random_first_stage(&prob, &mut rng, true);
            let p = fs.to_point(&prob);
            let bits = fs.binarization(&prob.capacity);
            for s in 0..prob.scenarios() {
                let sub = Subproblem::build(&prob, s, true);
                let r = sub.solve(&p, true, &HighsOracle, &SolveOptions::lp()).unwrap();
                let d = sub.duals(&prob, &r.result).unwrap();
                assert!(d.alpha.iter().all(|a| a.is_finite()));
                assert!(d.zeta.iter().flatten().all(|&z| z <= 0.0));
                assert!(d.kappa.iter().flatten().chain(d.varpi.iter().flatten()).chain(&d.phi).all(|&v| v >= 0.0));
                let named = linear_cut(&d, &prob, "t");
                let generic = generic_cut(&sub, &prob, &r.result, "t").unwrap();
                let a = named.rhs(&fs, &bits);
                let b = generic.rhs(&fs, &bits);
                assert!(close(a, r.value, 1e-6), "seed {seed} s {s}: named {a} vs Q {}", r.value);
                assert!(close(b, r.value, 1e-6), "seed {seed} s {s}: generic {b} vs Q {}", r.value);
                // Same affine function: compare at other points too.
                for _ in 0..3 {
                    let other = random_first_stage(&prob, &mut rng, true);
                    let ob = other.binarization(&prob.capacity);
                    assert!(close(named.rhs(&other, &ob), generic.rhs(&other, &ob), 1e-6));
                }
            }
        }
    }
}

#[test]
fn linear_cuts_stay_above_recourse() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for seed in 0..2 {
        let prob = case(&CaseSpec::default(), seed).problem();
        let r = branch_and_cut(&prob, &HighsOracle, &LShapedOptions::default()).unwrap();
        let linear: Vec<&Cut> = r.pool.iter().filter(|c| c.kind == CutKind::Linear).collect();
        assert!(!linear.is_empty());
        for _ in 0..30 {
            let fs = random_first_stage(&prob, &mut rng, true);
            let p = fs.to_point(&prob);
            let bits = fs.binarization(&prob.capacity);
            let q: Vec<f64> = (0..prob.scenarios())
                .map(|s| Subproblem::build(&prob, s, true).solve(&p, true, &HighsOracle, &SolveOptions::lp()).unwrap().value)
                .collect();
            for c in &linear {
                assert!(c.rhs(&fs, &bits) >= q[c.s] - 1e-6 * (1.0 + q[c.s].abs()));
            }
        }
    }
}

#[test]
fn integer_cut_algebra() {
    let prob = case(&CaseSpec::default(), 0).problem();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let fs = loop {
        let fs = random_first_stage(&prob, &mut rng, true);
        if fs.z.iter().flatten().any(|&z| z > 0) {
            break fs;
        }
    };
    let (q, u) = (3.5, 7.25);
    let cut = integer_cut(&prob, &fs, q, u, 0).unwrap();
    let bits = fs.binarization(&prob.capacity);
    assert!(close(cut.rhs(&fs, &bits), q, 1e-12));
    let (i, t) = (0..prob.n_stations).flat_map(|i| (0..prob.t1).map(move |t| (i, t))).find(|&(i, t)| fs.z[i][t] > 0).unwrap();
    let mut flipped = bits.clone();
    let k = fs.z[i][t] as usize - 1;
    flipped[i][t][k] = 0;
    assert!(close(cut.rhs(&fs, &flipped), u, 1e-12));
    assert!(matches!(integer_cut(&prob, &fs, 2.0, 1.0, 0), Err(cslp_core::error::DecompError::CutBound { .. })));
}

#[test]
fn root_phase_matches_lp_of_deterministic_equivalent() {
    // Without committed chargers after the first stage the master adds
    // nothing the relaxation would not imply.
    let spec = CaseSpec { scenarios: 1, existing_stations: 0, ..CaseSpec::default() };
    for seed in 0..3 {
        let prob = case(&spec, seed).problem();
        let opts = LShapedOptions { valid_inequalities: false, ..LShapedOptions::default() };
        let (_, bounds) = root_strengthen(&prob, &HighsOracle, &opts).unwrap();
        let de = build_deterministic_equivalent(&prob, &DeOptions::default());
        let lp = HighsOracle.solve(&de, &SolveOptions::lp()).unwrap().objective;
        let last = *bounds.last().unwrap();
        assert!(close(last, lp, 1e-6), "seed {seed}: master {last} vs DE {lp}");
        assert!(bounds.windows(2).all(|w| w[1] <= w[0] + 1e-7), "{bounds:?}");
    }
}

#[test]
fn master_relaxation_dominates_before_cuts() {
    let prob = case(&CaseSpec { stations: 2, ..CaseSpec::default() }, 4).problem();
    let master = build_master(&prob, MasterOptions::default());
    let m = HighsOracle.solve(&master.model, &SolveOptions::lp()).unwrap().objective;
    let de = build_deterministic_equivalent(&prob, &DeOptions::default());
    let lp = HighsOracle.solve(&de, &SolveOptions::lp()).unwrap().objective;
    assert!(m >= lp - 1e-6);
}

#[test]
fn decomposition_matches_monolith() {
    for seed in 0..6 {
        let prob = case(&CaseSpec::default(), seed).problem();
        let de = build_deterministic_equivalent(&prob, &DeOptions::default());
        let mono = HighsOracle.solve(&de, &SolveOptions::exact()).unwrap().objective;
        let opts = LShapedOptions { rel_gap: 1e-9, ..LShapedOptions::default() };
        let r = branch_and_cut(&prob, &HighsOracle, &opts).unwrap();
        assert_eq!(r.log.status, "optimal");
        assert!(close(r.log.lb, mono, 1e-6), "seed {seed}: L-shaped {} vs monolith {mono}", r.log.lb);
        let eval = evaluate_first_stage(&prob, &r.solution, &HighsOracle, 1).unwrap();
        assert!(close(eval.objective, mono, 1e-6));
        let bits = r.solution.binarization(&prob.capacity);
        for i in 0..prob.n_stations {
            for t in 0..prob.t1 {
                assert_eq!(bits[i][t].iter().map(|&b| b as u32).sum::<u32>(), r.solution.z[i][t]);
            }
        }
        for w in r.log.trace.windows(2) {
            assert!(w[1].lb >= w[0].lb && w[1].ub <= w[0].ub, "seed {seed}: trace not monotone");
        }
    }
}

#[test]
fn node_cap_returns_root_bound() {
    let prob = case(&CaseSpec::default(), 3).problem();
    let opts = LShapedOptions { node_limit: Some(1), warm_start: false, rel_gap: 1e-12, ..LShapedOptions::default() };
    let r = branch_and_cut(&prob, &HighsOracle, &opts);
    if let Ok(r) = r {
        assert!(r.log.nodes <= 1);
        assert!(r.log.ub <= r.log.root_bound + 1e-9);
        if r.log.status == "node-limit" {
            assert!(close(r.log.ub, r.log.root_bound, 1e-9) || r.log.ub < r.log.root_bound);
        }
    }
}

#[test]
fn certain_future_closes_at_the_root() {
    let c = case(&CaseSpec { scenarios: 1, ..CaseSpec::default() }, 5);
    let prob = c.problem();
    let (fs, cuts) = warm_start(&prob, &HighsOracle, None).unwrap().unwrap();
    assert_eq!(cuts.len(), 1);
    assert!(fs.check(&prob, true).is_ok());
    let r = branch_and_cut(&prob, &HighsOracle, &LShapedOptions::default()).unwrap();
    let de = build_deterministic_equivalent(&prob, &DeOptions::default());
    let mono = HighsOracle.solve(&de, &SolveOptions::exact()).unwrap().objective;
    let first = r.log.trace.first().unwrap();
    assert!(close(first.lb, mono, 1e-4), "warm start {} vs optimum {mono}", first.lb);
}

#[test]
fn gap_formula() {
    assert!((relative_gap(59.20156, 61.43652) * 100.0 - 3.64).abs() < 0.01);
    assert_eq!(relative_gap(2.0, 2.0), 0.0);
}

#[test]
fn cold_start_without_nodes_still_returns_a_plan() {
    let prob = case(&CaseSpec::desk(), 2).problem();
    let opts = LShapedOptions { warm_start: false, node_limit: Some(0), ..LShapedOptions::default() };
    let r = branch_and_cut(&prob, &HighsOracle, &opts).unwrap();
    assert_eq!(r.log.status, "node-limit");
    assert!(r.solution.check(&prob, false).is_ok());
    assert!(r.log.lb <= r.log.ub + 1e-9);
}
