use cslp_core::analysis::*;
use cslp_core::fixtures::{case, toy, CaseSpec, ToyOd, ToySpec};
use cslp_core::lshaped::{evaluate_first_stage, LShapedOptions};
use cslp_core::mipcore::HighsOracle;
use cslp_core::problem::FirstStageSolution;

#[test]
fn elasticity_from_rounded_percentages() {
    let d = 77.49;
    let e1 = elasticity(0.20 * d, 0.73 * d, 0.0, 5.0).unwrap();
    let e2 = elasticity(0.73 * d, 0.85 * d, 5.0, 10.0).unwrap();
    assert!((e1 - 0.59).abs() <= 0.05, "{e1}");
    assert!((e1 - 0.57).abs() < 0.005, "{e1}");
    assert!((e2 - 0.21).abs() <= 0.05, "{e2}");
    assert!((e2 - 0.23).abs() < 0.005, "{e2}");
    assert_eq!(elasticity(4.0, 4.0, 1.0, 2.0).unwrap(), 0.0);
    assert!(elasticity(1.0, 2.0, 3.0, 3.0).is_err());
    assert!(elasticity(0.0, 0.0, 1.0, 2.0).is_err());
    assert!(elasticity(1.0, 2.0, 0.0, 0.0).is_err());
}

#[test]
fn vss_interval() {
    for seed in 0..3 {
        let prob = case(&CaseSpec::default(), seed).problem();
        let opts = VssOptions { sp: LShapedOptions { rel_gap: 1e-6, ..LShapedOptions::default() }, ..VssOptions::default() };
        let r = vss(&prob, &HighsOracle, &opts).unwrap();
        assert!(r.lower >= -0.002 && r.lower <= r.upper + 1e-12, "seed {seed}: {r:?}");
        assert!(r.z_eev <= r.ub_sp + 1e-9);
    }
    let prob = case(&CaseSpec { scenarios: 1, ..CaseSpec::default() }, 4).problem();
    let r = vss(&prob, &HighsOracle, &VssOptions::default()).unwrap();
    assert!(r.degenerate);
    assert_eq!(r.lower, 0.0);
}

#[test]
fn sweep_extremes_and_monotone_coverage() {
    let spec = ToySpec {
        t2: 2,
        ods: vec![ToyOd { paths: vec![vec![(0, 1.0)]], first_flow: 2.0, flows: vec![3.0, 4.0] }],
        budget: 2.0,
        ..ToySpec::default()
    };
    let prob = toy(&spec).problem();
    let r = budget_sweep(&prob, &[Some(-2.0), Some(0.0), Some(2.0), None], &HighsOracle, &LShapedOptions::default(), 2).unwrap();
    assert_eq!(r.points[0].covered, 0.0);
    assert_eq!(r.points[0].stations, 0);
    let best = r.points.iter().map(|p| p.covered).fold(0.0, f64::max);
    assert_eq!(r.points[3].covered, best);
    assert!(r.points.windows(2).all(|w| w[1].covered >= w[0].covered - 1e-9));
    assert_eq!(r.elasticities.len(), 3);
    assert!(r.elasticities[2].is_none());

    let prob = case(&CaseSpec::default(), 2).problem();
    let deltas: Vec<Option<f64>> = [-3.0, -2.0, -1.0, 0.0, 2.0].iter().map(|&d| Some(d)).collect();
    let r = budget_sweep(&prob, &deltas, &HighsOracle, &LShapedOptions { rel_gap: 1e-3, ..LShapedOptions::default() }, 1).unwrap();
    assert!(r.points.iter().all(|p| p.gap <= 0.005));
    assert!(r.points.windows(2).all(|w| w[1].covered >= w[0].covered - 1e-6 * (1.0 + w[0].covered)));
}

#[test]
fn detour_histogram() {
    let spec = ToySpec {
        stations: 2,
        ods: vec![ToyOd { paths: vec![vec![(0, 1.0)], vec![(1, 1.0)]], first_flow: 2.0, flows: vec![2.0] }],
        preplanned: vec![vec![1, 0], vec![1, 0]],
        budget: 0.0,
        prep_cost: 0.0,
        ..ToySpec::default()
    };
    let mut c = toy(&spec);
    c.paths.entries[0].paths[1].detour = 0.10;
    c.paths.entries[0].paths[1].distance_km = 110.0;
    let prob = c.problem();
    let fs = FirstStageSolution::complete(&prob, vec![vec![1, 0], vec![1, 0]], vec![vec![1], vec![1]]);
    let eval = evaluate_first_stage(&prob, &fs, &HighsOracle, 1).unwrap();
    let h = detour_distribution(&prob, &c.paths, &eval, 0.01);
    let total: f64 = h.iter().map(|b| b.mass).sum();
    assert!((total - eval.objective).abs() < 1e-9);
    assert!((h[0].mass - 2.0).abs() < 1e-9 && (h[10].mass - 2.0).abs() < 1e-9, "{h:?}");
    assert!(h.iter().all(|b| b.mass >= 0.0));

    // Only the short path: everything in the first bucket.
    c.paths.entries[0].paths.truncate(1);
    let prob = c.problem();
    let fs = FirstStageSolution::complete(&prob, vec![vec![1, 0], vec![1, 0]], vec![vec![1], vec![1]]);
    let eval = evaluate_first_stage(&prob, &fs, &HighsOracle, 1).unwrap();
    let h = detour_distribution(&prob, &c.paths, &eval, 0.01);
    assert_eq!(h.len(), 1);
    assert!((h[0].mass - eval.objective).abs() < 1e-9);
}

#[test]
fn co2_extremes() {
    let none = toy(&ToySpec { budget: 0.0, ..ToySpec::default() });
    let prob = none.problem();
    let eval = evaluate_first_stage(&prob, &FirstStageSolution::zero(&prob), &HighsOracle, 1).unwrap();
    let r = co2_report(&prob, &none.paths, &eval, &EmissionParams::default()).unwrap();
    assert!((r.ratio - 1.0).abs() < 1e-12);

    let full = toy(&ToySpec { preplanned: vec![vec![2, 0]], budget: 0.0, prep_cost: 0.0, ..ToySpec::default() });
    let prob = full.problem();
    let fs = FirstStageSolution::complete(&prob, vec![vec![1, 0]], vec![vec![2]]);
    let eval = evaluate_first_stage(&prob, &fs, &HighsOracle, 1).unwrap();
    let zero = EmissionParams { electricity_g_per_kwh: 0.0, ..EmissionParams::default() };
    assert!(co2_report(&prob, &full.paths, &eval, &zero).unwrap().ratio.abs() < 1e-12);
    // 150 kWh over 100 km: 1.5 kWh/km at 190/1.5 g/kWh is 20 % of 950 g/km.
    let fifth = EmissionParams { electricity_g_per_kwh: 0.2 * 950.0 / 1.5, ..EmissionParams::default() };
    let r = co2_report(&prob, &full.paths, &eval, &fifth).unwrap();
    assert!((r.ratio - 0.2).abs() < 1e-9, "{}", r.ratio);
    assert!(co2_report(&prob, &full.paths, &eval, &EmissionParams { diesel_g_per_km: -1.0, ..EmissionParams::default() }).is_err());
}
