use cslp_core::fixtures::{case, random_first_stage, toy, CaseSpec, ToyOd, ToySpec};
use cslp_core::mipcore::{build_deterministic_equivalent, fix_first_stage, DeOptions, HighsOracle, SolveOptions, SolveStatus, SolverOracle, VarTag};
use cslp_core::problem::FirstStageSolution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn solve(m: &cslp_core::mipcore::LinearModel) -> cslp_core::mipcore::SolveResult {
    HighsOracle.solve(m, &SolveOptions::exact()).unwrap()
}

#[test]
fn variable_count_of_smallest_model() {
    let c = toy(&ToySpec::default());
    let de = build_deterministic_equivalent(&c.problem(), &DeOptions::default());
    assert_eq!(de.vars.len(), 8);
    assert!(de.check().is_ok());
}

#[test]
fn zero_budget_builds_nothing() {
    let c = toy(&ToySpec { budget: 0.0, ..ToySpec::default() });
    let r = solve(&build_deterministic_equivalent(&c.problem(), &DeOptions::default()));
    assert_eq!(r.status, SolveStatus::Optimal);
    assert!(r.objective.abs() < 1e-9);

    // Trips that need no charging stay covered; nothing else is.
    for seed in 0..3 {
        let c = case(&CaseSpec { budget: 0.0, existing_stations: 0, ..CaseSpec::default() }, seed);
        let prob = c.problem();
        let r = solve(&build_deterministic_equivalent(&prob, &DeOptions::default()));
        let free: f64 = (0..prob.n_periods)
            .map(|t| {
                let mut pairs: Vec<(usize, usize)> =
                    prob.paths.iter().filter(|p| p.visits.is_empty()).map(|p| (p.q, p.v)).collect();
                pairs.dedup();
                pairs
                    .iter()
                    .map(|&(q, v)| {
                        if t < prob.t1 {
                            prob.first_flow(q, v, t)
                        } else {
                            (0..prob.scenarios()).map(|s| prob.scen.probabilities[s] * prob.flow(s, q, v, t)).sum()
                        }
                    })
                    .sum::<f64>()
            })
            .sum();
        assert!((r.objective - free).abs() < 1e-6, "seed {seed}: {} vs {free}", r.objective);
    }
}

#[test]
fn preplanned_chargers_cover_their_share() {
    let spec = ToySpec {
        ods: vec![ToyOd { paths: vec![vec![(0, 1.0)]], first_flow: 5.0, flows: vec![5.0] }],
        preplanned: vec![vec![2, 0]],
        budget: 0.0,
        prep_cost: 0.0,
        ..ToySpec::default()
    };
    let c = toy(&spec);
    let prob = c.problem();
    let de = build_deterministic_equivalent(&prob, &DeOptions::default());
    let r = solve(&de);
    // 2 of 5 vehicles per period in both periods.
    assert!((r.objective - 4.0).abs() < 1e-6, "{}", r.objective);
    let yf = de.var(VarTag::FirstFlow { q: 0, v: 0, h: 0, t: 0 }).unwrap();
    let y = de.var(VarTag::Flow { s: 0, q: 0, v: 0, h: 0, t: 1 }).unwrap();
    assert!((r.x[yf] - 0.4).abs() < 1e-6 && (r.x[y] - 0.4).abs() < 1e-6);
}

#[test]
fn relaxation_bounds_the_integer_optimum() {
    for seed in 0..4 {
        let c = case(&CaseSpec::default(), seed);
        let de = build_deterministic_equivalent(&c.problem(), &DeOptions::default());
        let ip = solve(&de);
        let lp = HighsOracle.solve(&de, &SolveOptions::lp()).unwrap();
        assert!(lp.objective >= ip.objective - 1e-6, "seed {seed}: {} < {}", lp.objective, ip.objective);
    }
}

#[test]
fn more_budget_or_grid_never_hurts() {
    for seed in 0..3 {
        let base = CaseSpec::default();
        let mut last = f64::NEG_INFINITY;
        for budget in [0.0, 2.0, 4.0, 8.0] {
            let c = case(&CaseSpec { budget, ..base.clone() }, seed);
            let v = solve(&build_deterministic_equivalent(&c.problem(), &DeOptions::default())).objective;
            assert!(v >= last - 1e-6, "seed {seed} budget {budget}: {v} < {last}");
            last = v;
        }
        let c = case(&base, seed);
        let v0 = solve(&build_deterministic_equivalent(&c.problem(), &DeOptions::default())).objective;
        let mut more = c.clone();
        for l in more.scen.first_limits.iter_mut().flatten() {
            *l += 2;
        }
        for l in more.scen.limits.iter_mut().flatten().flatten() {
            *l += 2;
        }
        let v1 = solve(&build_deterministic_equivalent(&more.problem(), &DeOptions::default())).objective;
        assert!(v1 >= v0 - 1e-6, "seed {seed}: grid {v1} < {v0}");
    }
}

#[test]
fn every_feasible_first_stage_has_a_recourse() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut done = 0;
    for seed in 0..4 {
        let c = case(&CaseSpec::default(), seed);
        let prob = c.problem();
        let de = build_deterministic_equivalent(&prob, &DeOptions::default());
        for _ in 0..50 {
            let fs = random_first_stage(&prob, &mut rng, false);
            let r = solve(&fix_first_stage(&de, &prob, &fs).unwrap());
            assert_eq!(r.status, SolveStatus::Optimal, "seed {seed}: {fs:?}");
            done += 1;
        }
    }
    assert_eq!(done, 200);
}

#[test]
fn fixing_reproduces_or_zeroes() {
    let c = case(&CaseSpec { existing_stations: 0, ..CaseSpec::default() }, 2);
    let prob = c.problem();
    let de = build_deterministic_equivalent(&prob, &DeOptions::default());
    let opt = solve(&de);
    let fs = cslp_core::mipcore::extract_first_stage(&de, &prob, &opt.x).unwrap();
    let again = solve(&fix_first_stage(&de, &prob, &fs).unwrap());
    assert!((again.objective - opt.objective).abs() <= 1e-6 * (1.0 + opt.objective.abs()));

    let t = toy(&ToySpec { t2: 2, ..ToySpec::default() });
    let tp = t.problem();
    let tde = build_deterministic_equivalent(&tp, &DeOptions::default());
    let zero = solve(&fix_first_stage(&tde, &tp, &FirstStageSolution::zero(&tp)).unwrap());
    assert!(zero.objective.abs() < 1e-9);

    let bad = FirstStageSolution { x: vec![], z: vec![], w: vec![] };
    assert!(fix_first_stage(&de, &prob, &bad).is_err());
}
