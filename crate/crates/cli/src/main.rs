//! `cslp`: instance synthesis, path and scenario generation, solving and
//! analysis for charging-station location under uncertainty.

mod config;
mod manifest;
mod svg;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use cslp_core::analysis::{budget_sweep, co2_report, detour_distribution, vss, VssOptions};
use cslp_core::error::{DecompError, InstanceError};
use cslp_core::instance::{synth_instance, Instance};
use cslp_core::lshaped::{branch_and_cut, evaluate_first_stage, relative_gap, Evaluation, LShapedOptions, ScenarioOutcome, TracePoint};
use cslp_core::mipcore::{build_deterministic_equivalent, extract_first_stage, DeOptions, HighsOracle, SolveOptions, SolveStatus, SolverOracle};
use cslp_core::pathgen::{generate_all, PathGenConfig, PathSet};
use cslp_core::problem::{FirstStageSolution, Problem};
use cslp_core::scenario::{build_scenarios, ScenarioConfig, ScenarioSet};

use config::{parse_delta, Config};
use manifest::Manifest;

#[derive(Parser, Debug)]
#[command(name = "cslp", version, about = "Charging-station location for electric trucks under uncertainty")]
struct Cli {
    /// TOML configuration; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, global = true)]
    quiet: bool,
    /// Also draw the CSV outputs as SVG charts.
    #[arg(long, global = true)]
    svg: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug, Clone)]
struct Inputs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    paths: PathBuf,
    #[arg(long)]
    scenarios: PathBuf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    Monolith,
    Lshaped,
}

#[derive(Args, Debug, Clone)]
struct SolveArgs {
    #[arg(long, value_enum)]
    method: Option<Method>,
    #[arg(long)]
    gap: Option<f64>,
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    node_limit: Option<usize>,
    #[arg(long)]
    no_warm_start: bool,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Generate a synthetic instance.
    Synth {
        #[arg(long)]
        junctions: Option<usize>,
        #[arg(long)]
        stations: Option<usize>,
        #[arg(long)]
        od_nodes: Option<usize>,
        #[arg(long, default_value = "instance.json")]
        out: PathBuf,
    },
    /// Check an instance and, optionally, path and scenario files against it.
    Validate {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        paths: Option<PathBuf>,
        #[arg(long)]
        scenarios: Option<PathBuf>,
    },
    /// Generate charging paths for every OD pair and vehicle type.
    Paths {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value = "paths.json")]
        out: PathBuf,
    },
    /// Sample the scenario set.
    Scenarios {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long, default_value = "scenarios.json")]
        out: PathBuf,
    },
    Solve {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        solve: SolveArgs,
        #[arg(long, default_value = "solution.json")]
        out: PathBuf,
        #[arg(long, default_value = "log.csv")]
        log: PathBuf,
    },
    /// Bounds on the value of the stochastic solution.
    Vss {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        solve: SolveArgs,
        #[arg(long, default_value_t = 0.01)]
        ev_gap: f64,
        #[arg(long, default_value = "vss.json")]
        out: PathBuf,
    },
    /// Solve budget variants and report coverage elasticities.
    Sweep {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        solve: SolveArgs,
        /// Comma-separated budget changes per period; "inf" drops the limit.
        #[arg(long, allow_hyphen_values = true)]
        deltas: Option<String>,
        #[arg(long, default_value = "sweep.csv")]
        out: PathBuf,
    },
    /// Covered flow by relative detour.
    Detours {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        solution: PathBuf,
        #[arg(long)]
        width: Option<f64>,
        #[arg(long, default_value = "detour.csv")]
        out: PathBuf,
    },
    /// Emissions against an all-diesel baseline.
    Co2 {
        #[arg(long)]
        solution: PathBuf,
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, default_value = "co2.csv")]
        out: PathBuf,
    },
    /// Summary of a solution with detour and emission figures.
    Report {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        solution: PathBuf,
        #[arg(long, default_value = "report.json")]
        out: PathBuf,
    },
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::Synth { .. } => "synth",
            Cmd::Validate { .. } => "validate",
            Cmd::Paths { .. } => "paths",
            Cmd::Scenarios { .. } => "scenarios",
            Cmd::Solve { .. } => "solve",
            Cmd::Vss { .. } => "vss",
            Cmd::Sweep { .. } => "sweep",
            Cmd::Detours { .. } => "detours",
            Cmd::Co2 { .. } => "co2",
            Cmd::Report { .. } => "report",
        }
    }
}

/// Failure classes with distinct exit codes.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Io(String),
    Validation(String),
    Solver(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Io(_) => 3,
            Failure::Validation(_) => 4,
            Failure::Solver(_) => 5,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (kind, msg) = match self {
            Failure::Usage(m) => ("usage", m),
            Failure::Io(m) => ("io", m),
            Failure::Validation(m) => ("validation", m),
            Failure::Solver(m) => ("solver", m),
        };
        write!(f, "error[{kind}]: {msg}")
    }
}

impl From<InstanceError> for Failure {
    fn from(e: InstanceError) -> Self {
        match e {
            InstanceError::Io(m) => Failure::Io(m),
            e => Failure::Validation(e.to_string()),
        }
    }
}

impl From<DecompError> for Failure {
    fn from(e: DecompError) -> Self {
        match e {
            DecompError::Input(m) => Failure::Validation(m),
            DecompError::InfeasibleFirstStage(m) => Failure::Validation(format!("first stage violates constraints: {m}")),
            e => Failure::Solver(e.to_string()),
        }
    }
}

type Res<T> = Result<T, Failure>;

struct Ctx {
    cfg: Config,
    out_dir: PathBuf,
    quiet: bool,
    svg: bool,
    manifest: Manifest,
}

impl Ctx {
    fn out(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.out_dir.join(p)
        }
    }

    fn write(&mut self, p: &Path, text: &str) -> Res<PathBuf> {
        let path = self.out(p);
        std::fs::write(&path, text).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?;
        self.manifest.output(&path, text.as_bytes());
        Ok(path)
    }

    fn read(&mut self, p: &Path) -> Res<String> {
        let text = std::fs::read_to_string(p).map_err(|e| Failure::Io(format!("cannot read {}: {e}", p.display())))?;
        self.manifest.input(p, text.as_bytes());
        Ok(text)
    }

    fn say(&self, msg: impl fmt::Display) {
        if !self.quiet {
            println!("{msg}");
        }
    }

    fn instance(&mut self, p: &Path) -> Res<Instance> {
        let text = self.read(p)?;
        let inst = Instance::from_json(&text)?;
        inst.validate()?;
        Ok(inst)
    }

    fn paths(&mut self, p: &Path, inst: &Instance) -> Res<PathSet> {
        let text = self.read(p)?;
        let ps = PathSet::from_json(&text).map_err(|e| Failure::Validation(format!("malformed path file {}: {e}", p.display())))?;
        ps.check(inst).map_err(Failure::Validation)?;
        Ok(ps)
    }

    fn scenarios(&mut self, p: &Path, inst: &Instance) -> Res<ScenarioSet> {
        let text = self.read(p)?;
        let sc = ScenarioSet::from_json(&text).map_err(|e| Failure::Validation(format!("malformed scenario file {}: {e}", p.display())))?;
        sc.check(inst).map_err(|e| Failure::Validation(e.to_string()))?;
        Ok(sc)
    }

    fn load(&mut self, i: &Inputs) -> Res<(Problem, PathSet)> {
        let inst = self.instance(&i.instance)?;
        let paths = self.paths(&i.paths, &inst)?;
        let scen = self.scenarios(&i.scenarios, &inst)?;
        Ok((Problem::new(&inst, &paths, &scen)?, paths))
    }

    fn solution(&mut self, p: &Path, prob: &Problem) -> Res<FirstStageSolution> {
        let text = self.read(p)?;
        let v: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Failure::Validation(format!("malformed solution file {}: {e}", p.display())))?;
        let fs: FirstStageSolution = serde_json::from_value(v.get("first_stage").cloned().unwrap_or(v))
            .map_err(|e| Failure::Validation(format!("solution file {} lacks a first stage: {e}", p.display())))?;
        fs.check(prob, false).map_err(|e| Failure::Validation(format!("solution does not fit the instance: {e}")))?;
        Ok(fs)
    }

    fn lshaped(&self, a: &SolveArgs) -> LShapedOptions {
        let s = &self.cfg.solve;
        LShapedOptions {
            rel_gap: a.gap.unwrap_or(s.gap),
            time_limit_s: a.time_limit.or(s.time_limit),
            node_limit: a.node_limit.or(s.node_limit),
            warm_start: s.warm_start && !a.no_warm_start,
            root_iterations: s.root_iterations,
            threads: self.cfg.threads,
            valid_inequalities: s.valid_inequalities,
            ..LShapedOptions::default()
        }
    }

    fn chart(&mut self, csv_path: &Path, svg: String) -> Res<()> {
        if self.svg {
            self.write(&csv_path.with_extension("svg"), &svg)?;
        }
        Ok(())
    }
}

/// Child seed for one module, so streams stay independent of call order.
fn derive_seed(seed: u64, label: &str) -> u64 {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    h.update(label.as_bytes());
    h.update(seed.to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("value serialises");
    s.push('\n');
    s
}

fn csv_text(header: &[&str], rows: Vec<Vec<String>>) -> Res<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Failure::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        "inf".into()
    }
}

#[derive(Serialize)]
struct Prepared {
    station: String,
    period: String,
    chargers: u32,
}

#[derive(Serialize)]
struct SolutionFile {
    instance: String,
    method: String,
    status: String,
    objective: f64,
    bound: f64,
    gap: f64,
    nodes: usize,
    cuts_linear: usize,
    cuts_integer: usize,
    root_bound: Option<f64>,
    first_value: f64,
    prepared: Vec<Prepared>,
    first_stage: FirstStageSolution,
    scenarios: Vec<ScenarioSummary>,
}

#[derive(Serialize)]
struct ScenarioSummary {
    objective: f64,
    chargers: Vec<Vec<u32>>,
    slack: Vec<f64>,
}

impl From<&ScenarioOutcome> for ScenarioSummary {
    fn from(o: &ScenarioOutcome) -> Self {
        ScenarioSummary { objective: o.value, chargers: o.chargers.clone(), slack: o.slack.clone() }
    }
}

fn prepared(prob: &Problem, fs: &FirstStageSolution) -> Vec<Prepared> {
    let mut out = Vec::new();
    for i in 0..prob.n_stations {
        if let Some(t) = fs.x[i].iter().position(|&v| v == 1) {
            out.push(Prepared {
                station: prob.inst.stations[i].id.clone(),
                period: prob.inst.horizon.periods[t].clone(),
                chargers: fs.total_chargers(i),
            });
        }
    }
    out
}

struct Solved {
    method: Method,
    status: String,
    fs: FirstStageSolution,
    eval: Evaluation,
    bound: f64,
    nodes: usize,
    cuts: (usize, usize),
    root_bound: Option<f64>,
    trace: Vec<TracePoint>,
}

fn solve_problem(prob: &Problem, method: Method, opts: &LShapedOptions, threads: usize) -> Res<Solved> {
    let oracle = HighsOracle;
    match method {
        Method::Lshaped => {
            let r = branch_and_cut(prob, &oracle, opts)?;
            let eval = evaluate_first_stage(prob, &r.solution, &oracle, threads)?;
            Ok(Solved {
                method,
                status: r.log.status,
                fs: r.solution,
                eval,
                bound: r.log.ub,
                nodes: r.log.nodes,
                cuts: (r.log.cuts_linear, r.log.cuts_integer),
                root_bound: Some(r.log.root_bound),
                trace: r.log.trace,
            })
        }
        Method::Monolith => {
            let de = build_deterministic_equivalent(prob, &DeOptions::default());
            let so = SolveOptions { rel_gap: opts.rel_gap, time_limit_s: opts.time_limit_s, node_limit: opts.node_limit.map(|n| n as u64), ..SolveOptions::default() };
            let start = Instant::now();
            let r = oracle.solve(&de, &so).map_err(|e| Failure::Solver(e.to_string()))?;
            let status = match r.status {
                SolveStatus::Optimal => "optimal",
                SolveStatus::Limit | SolveStatus::FeasibleWithGap => "limit",
                SolveStatus::Infeasible => "infeasible",
                SolveStatus::Unbounded => "unbounded",
            }
            .to_string();
            let bound = r.bound;
            let r = r.into_solution().map_err(|e| Failure::Solver(e.to_string()))?;
            let fs = extract_first_stage(&de, prob, &r.x)?;
            let eval = evaluate_first_stage(prob, &fs, &oracle, threads)?;
            let lb = eval.objective;
            let point = TracePoint {
                time_s: start.elapsed().as_secs_f64(),
                lb,
                ub: bound.max(lb),
                gap: relative_gap(lb, bound.max(lb)),
                nodes: 0,
                cuts_linear: 0,
                cuts_integer: 0,
            };
            Ok(Solved { method, status, fs, eval, bound: bound.max(lb), nodes: 0, cuts: (0, 0), root_bound: None, trace: vec![point] })
        }
    }
}

fn run(cli: Cli) -> Res<()> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::Io(format!("cannot read {}: {e}", p.display())))?;
            toml::from_str::<Config>(&text).map_err(|e| Failure::Validation(format!("bad config {}: {e}", p.display())))?
        }
        None => Config::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.threads {
        cfg.threads = t.max(1);
    }
    if cfg.solver.backend != "highs" {
        return Err(Failure::Usage(format!("unknown solver backend '{}'", cfg.solver.backend)));
    }
    std::fs::create_dir_all(&cli.out_dir).map_err(|e| Failure::Io(format!("cannot create {}: {e}", cli.out_dir.display())))?;
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let manifest = Manifest::new(cli.cmd.name(), &argv, &cfg);
    let mut ctx = Ctx { cfg, out_dir: cli.out_dir.clone(), quiet: cli.quiet, svg: cli.svg, manifest };
    if let Some(p) = &cli.config {
        let text = std::fs::read(p).map_err(|e| Failure::Io(e.to_string()))?;
        ctx.manifest.input(p, &text);
    }
    let start = Instant::now();

    match cli.cmd {
        Cmd::Synth { junctions, stations, od_nodes, out } => {
            let mut spec = ctx.cfg.synth.clone();
            spec.junctions = junctions.unwrap_or(spec.junctions);
            spec.stations = stations.unwrap_or(spec.stations);
            spec.od_nodes = od_nodes.unwrap_or(spec.od_nodes);
            let inst = synth_instance(&spec, derive_seed(ctx.cfg.seed, "synth"))?;
            let p = ctx.write(&out, &inst.to_json())?;
            ctx.say(format_args!("wrote {} ({} nodes, {} OD pairs, {} stations)", p.display(), inst.network.nodes.len(), inst.od_pairs.len(), inst.stations.len()));
        }
        Cmd::Validate { instance, paths, scenarios } => {
            let inst = ctx.instance(&instance)?;
            if let Some(p) = paths {
                ctx.paths(&p, &inst)?;
            }
            if let Some(s) = scenarios {
                ctx.scenarios(&s, &inst)?;
            }
            ctx.say(format_args!("{}: valid", instance.display()));
        }
        Cmd::Paths { instance, out } => {
            let inst = ctx.instance(&instance)?;
            let cfg = PathGenConfig::from_regulations(&inst.regulations);
            let pool = rayon::ThreadPoolBuilder::new().num_threads(ctx.cfg.threads).build().map_err(|e| Failure::Usage(e.to_string()))?;
            let ps = pool.install(|| generate_all(&inst, &cfg));
            let p = ctx.write(&out, &ps.to_json())?;
            ctx.say(format_args!("wrote {} ({} paths)", p.display(), ps.path_count()));
        }
        Cmd::Scenarios { instance, count, out } => {
            let inst = ctx.instance(&instance)?;
            let sec = ctx.cfg.scenarios.clone();
            let sc = ScenarioConfig {
                envelope: sec.envelope.unwrap_or_else(|| cslp_core::scenario::AdoptionEnvelope::synthetic(inst.horizon.len())),
                grid: sec.grid,
            };
            let n = count.unwrap_or(sec.count);
            let set = build_scenarios(&inst, n, derive_seed(ctx.cfg.seed, "scenarios"), &sc).map_err(|e| Failure::Validation(e.to_string()))?;
            let p = ctx.write(&out, &set.to_json())?;
            ctx.say(format_args!("wrote {} ({n} scenarios)", p.display()));
        }
        Cmd::Solve { inputs, solve, out, log } => {
            let (prob, _) = ctx.load(&inputs)?;
            let method = solve.method.unwrap_or(if ctx.cfg.solve.method == "monolith" { Method::Monolith } else { Method::Lshaped });
            let opts = ctx.lshaped(&solve);
            let s = solve_problem(&prob, method, &opts, ctx.cfg.threads)?;
            ctx.manifest.phase("solve", start.elapsed().as_secs_f64());
            let file = SolutionFile {
                instance: prob.inst.name.clone(),
                method: format!("{:?}", s.method).to_lowercase(),
                status: s.status.clone(),
                objective: s.eval.objective,
                bound: s.bound,
                gap: relative_gap(s.eval.objective, s.bound),
                nodes: s.nodes,
                cuts_linear: s.cuts.0,
                cuts_integer: s.cuts.1,
                root_bound: s.root_bound,
                first_value: s.eval.first_value,
                prepared: prepared(&prob, &s.fs),
                first_stage: s.fs.clone(),
                scenarios: s.eval.scenarios.iter().map(ScenarioSummary::from).collect(),
            };
            let p = ctx.write(&out, &json(&file))?;
            let rows = s
                .trace
                .iter()
                .map(|t| {
                    vec![format!("{:.3}", t.time_s), num(t.lb), num(t.ub), num(t.gap), t.nodes.to_string(), t.cuts_linear.to_string(), t.cuts_integer.to_string()]
                })
                .collect();
            let text = csv_text(&["time", "LB", "UB", "gap", "nodes", "cuts_linear", "cuts_integer"], rows)?;
            let lp = ctx.out(&log);
            std::fs::write(&lp, text).map_err(|e| Failure::Io(format!("cannot write {}: {e}", lp.display())))?;
            ctx.say(format_args!(
                "{}: objective {:.6}, bound {:.6}, gap {:.4}%, status {}, wrote {}",
                file.method,
                file.objective,
                file.bound,
                100.0 * file.gap,
                file.status,
                p.display()
            ));
        }
        Cmd::Vss { inputs, solve, ev_gap, out } => {
            let (prob, _) = ctx.load(&inputs)?;
            let opts = VssOptions { ev_gap, ev_time_limit_s: solve.time_limit.or(ctx.cfg.solve.time_limit), sp: ctx.lshaped(&solve) };
            let r = vss(&prob, &HighsOracle, &opts)?;
            ctx.manifest.phase("vss", start.elapsed().as_secs_f64());
            let p = ctx.write(&out, &json(&r))?;
            ctx.say(format_args!("VSS in [{:.4}%, {:.4}%], wrote {}", 100.0 * r.lower, 100.0 * r.upper, p.display()));
        }
        Cmd::Sweep { inputs, solve, deltas, out } => {
            let (prob, _) = ctx.load(&inputs)?;
            let list: Vec<String> = match deltas {
                Some(d) => d.split(',').map(str::to_string).collect(),
                None => ctx.cfg.sweep.deltas.clone(),
            };
            let deltas = list.iter().map(|d| parse_delta(d)).collect::<Result<Vec<_>, _>>().map_err(Failure::Usage)?;
            let opts = ctx.lshaped(&solve);
            let r = budget_sweep(&prob, &deltas, &HighsOracle, &opts, ctx.cfg.threads)?;
            ctx.manifest.phase("sweep", start.elapsed().as_secs_f64());
            let label = |d: Option<f64>| d.map_or("inf".to_string(), num);
            let rows = r
                .points
                .iter()
                .enumerate()
                .map(|(k, p)| {
                    vec![
                        label(p.delta),
                        p.budget.map_or("inf".into(), num),
                        num(p.covered),
                        num(p.share),
                        p.stations.to_string(),
                        p.chargers.to_string(),
                        num(p.gap),
                        r.elasticities.get(k).copied().flatten().map_or(String::new(), num),
                        p.status.clone(),
                    ]
                })
                .collect();
            let text = csv_text(&["delta", "budget", "D", "share", "stations", "chargers", "gap", "elasticity", "status"], rows)?;
            let path = ctx.write(&out, &text)?;
            ctx.write(&out.with_extension("json"), &json(&r))?;
            let pts: Vec<(String, f64)> = r.points.iter().map(|p| (label(p.delta), p.covered)).collect();
            ctx.chart(&out, svg::line_chart("Covered demand by budget change", "budget change per period", "covered demand", &pts))?;
            ctx.say(format_args!("{} budget levels, no-regrets stations {:?}, wrote {}", r.points.len(), r.no_regrets, path.display()));
        }
        Cmd::Detours { inputs, solution, width, out } => {
            let (prob, paths) = ctx.load(&inputs)?;
            let fs = ctx.solution(&solution, &prob)?;
            let eval = evaluate_first_stage(&prob, &fs, &HighsOracle, ctx.cfg.threads)?;
            let h = detour_distribution(&prob, &paths, &eval, width.unwrap_or(ctx.cfg.detours.bucket_width));
            let rows = h.iter().map(|b| vec![num(b.lo), num(b.hi), num(b.mass)]).collect();
            let path = ctx.write(&out, &csv_text(&["bucket_lo", "bucket_hi", "flow"], rows)?)?;
            let bars: Vec<(String, f64)> = h.iter().map(|b| (format!("{:.0}%", 100.0 * b.lo), b.mass)).collect();
            ctx.chart(&out, svg::bar_chart("Covered flow by detour", "relative detour", "covered flow", &bars))?;
            ctx.say(format_args!("{} buckets, wrote {}", h.len(), path.display()));
        }
        Cmd::Co2 { solution, inputs, out } => {
            let (prob, paths) = ctx.load(&inputs)?;
            let fs = ctx.solution(&solution, &prob)?;
            let eval = evaluate_first_stage(&prob, &fs, &HighsOracle, ctx.cfg.threads)?;
            let r = co2_report(&prob, &paths, &eval, &ctx.cfg.emissions).map_err(|e| Failure::Validation(e.to_string()))?;
            let mut rows: Vec<Vec<String>> =
                r.periods.iter().map(|p| vec![p.period.clone(), num(p.electric), num(p.diesel), num(p.baseline), num(p.ratio)]).collect();
            rows.push(vec!["total".into(), num(r.electric), num(r.diesel), num(r.baseline), num(r.ratio)]);
            let path = ctx.write(&out, &csv_text(&["period", "electric", "diesel", "baseline", "ratio"], rows)?)?;
            let bars: Vec<(String, f64)> = r.periods.iter().map(|p| (p.period.clone(), p.ratio)).collect();
            ctx.chart(&out, svg::bar_chart("Emissions relative to all-diesel", "period", "ratio", &bars))?;
            ctx.say(format_args!("emissions at {:.2}% of the diesel baseline, wrote {}", 100.0 * r.ratio, path.display()));
        }
        Cmd::Report { inputs, solution, out } => {
            let (prob, paths) = ctx.load(&inputs)?;
            let fs = ctx.solution(&solution, &prob)?;
            let eval = evaluate_first_stage(&prob, &fs, &HighsOracle, ctx.cfg.threads)?;
            let report = build_report(&ctx, &prob, &paths, &fs, &eval)?;
            let p = ctx.write(&out, &json(&report))?;
            ctx.write(&out.with_extension("md"), &report.markdown())?;
            ctx.say(format_args!("covered {:.2}% of expected demand, wrote {}", 100.0 * report.covered_share, p.display()));
        }
    }
    ctx.manifest.phase("total", start.elapsed().as_secs_f64());
    ctx.manifest.save(&ctx.out_dir)
}

#[derive(Serialize)]
struct Report {
    instance: String,
    objective: f64,
    expected_demand: f64,
    covered_share: f64,
    first_stage_covered: f64,
    scenario_objectives: Vec<f64>,
    prepared: Vec<Prepared>,
    first_stage_chargers: u32,
    mean_second_stage_chargers: f64,
    covered_within_5pct_detour: f64,
    co2_ratio: f64,
}

impl Report {
    fn markdown(&self) -> String {
        let mut s = format!("# Solution report: {}\n\n", self.instance);
        s += &format!("- Expected covered demand: {:.4} ({:.2}% of {:.4})\n", self.objective, 100.0 * self.covered_share, self.expected_demand);
        s += &format!("- First-stage covered demand: {:.4}\n", self.first_stage_covered);
        s += &format!("- First-stage chargers: {}; mean second-stage chargers: {:.2}\n", self.first_stage_chargers, self.mean_second_stage_chargers);
        s += &format!("- Covered flow within 5% detour: {:.2}%\n", 100.0 * self.covered_within_5pct_detour);
        s += &format!("- Emissions relative to all-diesel: {:.2}%\n\n", 100.0 * self.co2_ratio);
        s += "| station | prepared | chargers (first stage) |\n|---|---|---|\n";
        for p in &self.prepared {
            s += &format!("| {} | {} | {} |\n", p.station, p.period, p.chargers);
        }
        s
    }
}

fn build_report(ctx: &Ctx, prob: &Problem, paths: &PathSet, fs: &FirstStageSolution, eval: &Evaluation) -> Res<Report> {
    let total = prob.scen.expected_total_demand();
    let hist = detour_distribution(prob, paths, eval, 0.01);
    let mass: f64 = hist.iter().map(|b| b.mass).sum();
    let near: f64 = hist.iter().filter(|b| b.hi <= 0.05 + 1e-12).map(|b| b.mass).sum();
    let co2 = co2_report(prob, paths, eval, &ctx.cfg.emissions).map_err(|e| Failure::Validation(e.to_string()))?;
    let second: f64 = eval
        .scenarios
        .iter()
        .zip(&prob.scen.probabilities)
        .map(|(o, p)| p * o.chargers.iter().flatten().sum::<u32>() as f64)
        .sum();
    Ok(Report {
        instance: prob.inst.name.clone(),
        objective: eval.objective,
        expected_demand: total,
        covered_share: if total > 0.0 { eval.objective / total } else { 0.0 },
        first_stage_covered: eval.first_value,
        scenario_objectives: eval.scenarios.iter().map(|o| o.value).collect(),
        prepared: prepared(prob, fs),
        first_stage_chargers: fs.z.iter().flatten().sum(),
        mean_second_stage_chargers: second,
        covered_within_5pct_detour: if mass > 0.0 { near / mass } else { 0.0 },
        co2_ratio: co2.ratio,
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = if cli.quiet { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}
