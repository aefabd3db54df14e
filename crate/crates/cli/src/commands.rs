use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::json;
use smrp::experiments::{
    benchmark_point, dropped_ratio, solve, sweep_sigma, sweep_time_limit, BenchmarkConfig, Method, SigmaSweepConfig,
    SolveError, SolveOptions, Solved,
};
use smrp::feasibility::check_feasibility;
use smrp::generator::{generate_instance, generate_samples, GeneratorConfig, SampleConfig};
use smrp::io::{parse_instance, parse_plan, to_json, InstanceDocument, IoError, PlanDocument, SampleSpec, TraceDocument, SCHEMA_VERSION};
use smrp::lns::{initialize, max_drop_excess, LnsError};
use smrp::model::{Instance, Mode, ObjectiveBreakdown, Plan, TimeSamples};
use smrp::objective::{dropped_requests, evaluate};
use smrp::oracle::OracleError;
use smrp::seed::{derive_seed, tag};
use smrp::simulator::{simulate, Inflation, SimConfig};

use crate::output::{emit, read, write_csv};
use crate::{
    BenchmarkArgs, CheckArgs, Command, EvalArgs, GenerateArgs, PlanArgs, SampleArgs, SimulateArgs, SweepSigmaArgs,
    SweepTimelimitArgs,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_INFEASIBLE: u8 = 2;
pub const EXIT_TRIVIAL_TIMEOUT: u8 = 3;
pub const EXIT_USAGE: u8 = 4;

/// Bad arguments or unusable input files.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

pub fn exit_code_for(e: &anyhow::Error) -> u8 {
    if e.chain().any(|c| c.is::<Usage>() || c.is::<IoError>()) {
        EXIT_USAGE
    } else {
        EXIT_FAILURE
    }
}

pub fn run(command: Command) -> Result<u8> {
    match command {
        Command::Generate(a) => generate(a),
        Command::Plan(a) => plan(a),
        Command::Check(a) => check(a),
        Command::Eval(a) => eval(a),
        Command::Simulate(a) => simulate_cmd(a),
        Command::SweepTimelimit(a) => sweep_timelimit(a),
        Command::SweepSigma(a) => sweep_sigma_cmd(a),
        Command::Benchmark(a) => benchmark(a),
    }
}

fn load_instance(path: &Path) -> Result<InstanceDocument> {
    parse_instance(&read(path)?).with_context(|| format!("loading instance {}", path.display()))
}

fn load_plan(path: &Path) -> Result<PlanDocument> {
    parse_plan(&read(path)?).with_context(|| format!("loading plan {}", path.display()))
}

fn parse_method(name: &str) -> Result<Method> {
    name.parse::<Method>().map_err(usage)
}

fn budget(seconds: Option<f64>) -> Result<Option<Duration>> {
    match seconds {
        None => Ok(None),
        Some(s) if s > 0.0 && s.is_finite() => Ok(Some(Duration::from_secs_f64(s))),
        Some(s) => Err(usage(format!("--budget-seconds must be positive, got {s}"))),
    }
}

/// Scenarios for a stochastic method: `--sigma` draws fresh ones from the
/// seed, otherwise the instance's samples section is used.
fn resolve_samples(
    doc: &InstanceDocument,
    args: &SampleArgs,
    seed: u64,
    mode: Mode,
) -> Result<(Option<TimeSamples>, Option<SampleConfig>)> {
    if mode != Mode::Stochastic {
        return Ok((None, None));
    }
    let draw = |cfg: SampleConfig| -> Result<(Option<TimeSamples>, Option<SampleConfig>)> {
        let s = generate_samples(&doc.instance, &cfg).map_err(|e| usage(e.to_string()))?;
        Ok((Some(s), Some(cfg)))
    };
    if let Some(sigma) = args.sigma {
        return draw(SampleConfig {
            sigma_rel: sigma,
            n_scenarios: args.scenarios.unwrap_or(SampleConfig::default().n_scenarios),
            seed: derive_seed(seed, &[tag::SAMPLES]),
        });
    }
    match &doc.samples {
        None => Err(usage(
            "stochastic methods need a samples section in the instance or --sigma",
        )),
        Some(SampleSpec::Generate(cfg)) => draw(SampleConfig {
            n_scenarios: args.scenarios.unwrap_or(cfg.n_scenarios),
            ..*cfg
        }),
        Some(SampleSpec::Explicit(s)) => {
            if args.scenarios.is_some() {
                return Err(usage("--scenarios cannot resize explicit samples; pass --sigma to redraw"));
            }
            s.validate(&doc.instance).map_err(|e| usage(e.to_string()))?;
            Ok((Some(s.clone()), None))
        }
    }
}

fn plan_document(
    doc: &InstanceDocument,
    method: Method,
    seed: u64,
    samples: Option<SampleConfig>,
    plan: Plan,
    objective: ObjectiveBreakdown,
    optimal: Option<bool>,
) -> PlanDocument {
    PlanDocument {
        version: SCHEMA_VERSION.into(),
        instance_id: doc.id.clone(),
        method: method.name().into(),
        seed,
        mode: method.mode(),
        samples,
        max_drop_excess: max_drop_excess(&doc.instance, &plan),
        plan,
        objective,
        optimal,
    }
}

fn generate(args: GenerateArgs) -> Result<u8> {
    let mut config: GeneratorConfig = match &args.config {
        Some(p) => serde_json::from_str(&read(p)?).map_err(|e| usage(format!("generator config: {e}")))?,
        None => GeneratorConfig::default(),
    };
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(n) = args.robots {
        config.n_robots = n;
    }
    if let Some(n) = args.humans {
        config.n_humans = n;
    }
    if let Some(n) = args.pois {
        config.n_pois = n;
    }
    if let Some(s) = args.samples.sigma {
        config.samples.sigma_rel = s;
    }
    if let Some(n) = args.samples.scenarios {
        config.samples.n_scenarios = n;
    }
    config.samples.seed = derive_seed(config.seed, &[tag::SAMPLES]);
    let instance = generate_instance(&config).map_err(|e| usage(e.to_string()))?;
    let mut doc = InstanceDocument::new(instance);
    doc.id = Some(format!(
        "gen-{}-{}-{}-s{}",
        config.n_robots, config.n_humans, config.n_pois, config.seed
    ));
    if args.samples.sigma.is_some() || args.samples.scenarios.is_some() {
        doc.samples = Some(SampleSpec::Generate(config.samples));
    }
    doc.generator = Some(config.clone());
    emit(args.out.as_deref(), &to_json(&doc))?;
    if let Some(out) = &args.out {
        let manifest = json!({
            "version": SCHEMA_VERSION,
            "command": "generate",
            "instance": out.file_name().map(|n| n.to_string_lossy().into_owned()),
            "id": doc.id,
            "rng": "ChaCha8 streams seeded by SplitMix64-derived sub-seeds",
            "generator": config,
        });
        let mut path = out.clone().into_os_string();
        path.push(".manifest.json");
        emit(Some(Path::new(&path)), &to_json(&manifest))?;
    }
    Ok(EXIT_OK)
}

fn trivial_plan(instance: &Instance, seed: u64) -> Option<Plan> {
    initialize(instance, seed).ok()
}

fn all_dropped(instance: &Instance, plan: &Plan) -> bool {
    instance.total_requests() > 0 && dropped_requests(instance, plan).is_ok_and(|d| d.total == instance.total_requests())
}

fn certificate(kind: &str, detail: impl Serialize) -> String {
    to_json(&json!({ "version": SCHEMA_VERSION, "status": kind, "detail": detail }))
}

fn plan(args: PlanArgs) -> Result<u8> {
    let method = parse_method(&args.method)?;
    let budget = budget(args.budget_seconds)?;
    let doc = load_instance(&args.instance)?;
    let (samples, sample_config) = resolve_samples(&doc, &args.samples, args.seed, method.mode())?;
    let options = SolveOptions {
        seed: args.seed,
        budget,
        ..SolveOptions::default()
    };
    let inst = &doc.instance;
    let solved: Solved = match solve(inst, samples.as_ref(), method, &options) {
        Ok(s) => s,
        Err(SolveError::Oracle(
            e @ (OracleError::NoIncumbent | OracleError::TooManyAssignments(_) | OracleError::TooManyCandidates { .. }),
        )) => {
            eprintln!("{method}: {e}; emitting the trivial plan");
            let Some(plan) = trivial_plan(inst, args.seed) else {
                eprint!("{}", certificate("infeasible", "no assignment fits the team capacities"));
                return Ok(EXIT_INFEASIBLE);
            };
            let objective = evaluate(inst, samples.as_ref(), &plan, method.mode())?;
            let pd = plan_document(&doc, method, args.seed, sample_config, plan, objective, Some(false));
            emit(args.out.as_deref(), &to_json(&pd))?;
            return Ok(EXIT_TRIVIAL_TIMEOUT);
        }
        Err(
            e @ (SolveError::Oracle(OracleError::NoFeasibleAssignment)
            | SolveError::Lns(LnsError::CapacityShortfall { .. } | LnsError::Unpackable)),
        ) => {
            eprint!("{}", certificate("infeasible", e.to_string()));
            return Ok(EXIT_INFEASIBLE);
        }
        Err(e) => return Err(e.into()),
    };

    if let Some(path) = &args.trace {
        let text = match &solved.trace {
            Some(t) => to_json(&TraceDocument {
                version: SCHEMA_VERSION.into(),
                method: method.name().into(),
                seed: args.seed,
                trace: if args.timings { t.clone() } else { t.clone().without_timings() },
            }),
            None => to_json(&json!({
                "version": SCHEMA_VERSION,
                "method": method.name(),
                "seed": args.seed,
                "assignments_routed": solved.iterations,
                "optimal": solved.optimal,
            })),
        };
        emit(Some(path), &text)?;
    }

    let report = check_feasibility(inst, &solved.plan)?;
    let trivial = solved.timed_out && all_dropped(inst, &solved.plan);
    eprintln!(
        "{method}: dropped {}/{} requests, weighted total {}",
        solved.objective.dropped_requests,
        inst.total_requests(),
        solved.objective.weighted_total
    );
    let pd = plan_document(
        &doc,
        method,
        args.seed,
        sample_config,
        solved.plan,
        solved.objective,
        solved.optimal,
    );
    emit(args.out.as_deref(), &to_json(&pd))?;
    if !report.ok() {
        eprint!("{}", certificate("infeasible", &report.violations));
        return Ok(EXIT_INFEASIBLE);
    }
    Ok(if trivial { EXIT_TRIVIAL_TIMEOUT } else { EXIT_OK })
}

/// Samples a stored plan was optimized against.
fn plan_samples(doc: &InstanceDocument, pd: &PlanDocument) -> Result<Option<TimeSamples>> {
    if pd.mode != Mode::Stochastic {
        return Ok(None);
    }
    match &pd.samples {
        Some(cfg) => Ok(Some(generate_samples(&doc.instance, cfg).map_err(|e| usage(e.to_string()))?)),
        None => match doc.time_samples()? {
            Some(s) => Ok(Some(s)),
            None => Err(usage("stochastic plan carries no sample settings and the instance has no samples")),
        },
    }
}

fn objectives_match(a: &ObjectiveBreakdown, b: &ObjectiveBreakdown) -> bool {
    let close = |x: f64, y: f64| (x - y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1.0);
    a.mode == b.mode
        && a.dropped_requests == b.dropped_requests
        && close(a.time_term, b.time_term)
        && close(a.saa_penalty, b.saa_penalty)
        && close(a.weighted_total, b.weighted_total)
}

fn check(args: CheckArgs) -> Result<u8> {
    let doc = load_instance(&args.instance)?;
    let pd = load_plan(&args.plan)?;
    let report = match check_feasibility(&doc.instance, &pd.plan) {
        Ok(r) => r,
        Err(e) => {
            eprint!("{}", certificate("malformed_plan", e.to_string()));
            return Ok(EXIT_INFEASIBLE);
        }
    };
    let samples = plan_samples(&doc, &pd)?;
    let recomputed = evaluate(&doc.instance, samples.as_ref(), &pd.plan, pd.mode)?;
    let matches = objectives_match(&recomputed, &pd.objective);
    let out = json!({
        "version": SCHEMA_VERSION,
        "feasible": report.ok(),
        "violations": report.violations,
        "objective_matches": matches,
        "objective": recomputed,
    });
    emit(args.out.as_deref(), &to_json(&out))?;
    Ok(if report.ok() && matches { EXIT_OK } else { EXIT_INFEASIBLE })
}

fn eval(args: EvalArgs) -> Result<u8> {
    let doc = load_instance(&args.instance)?;
    let pd = load_plan(&args.plan)?;
    let inst = &doc.instance;
    let drops = dropped_requests(inst, &pd.plan).map_err(|e| usage(e.to_string()))?;
    let samples = if args.samples.sigma.is_some() || doc.samples.is_some() {
        resolve_samples(&doc, &args.samples, args.seed, Mode::Stochastic)?.0
    } else {
        plan_samples(&doc, &pd)?
    };
    let stochastic = samples
        .as_ref()
        .map(|s| evaluate(inst, Some(s), &pd.plan, Mode::Stochastic))
        .transpose()?;
    let out = json!({
        "version": SCHEMA_VERSION,
        "deterministic": evaluate(inst, None, &pd.plan, Mode::Deterministic)?,
        "stochastic": stochastic,
        "dropped_per_human": drops.per_human,
        "dropped_ratio": dropped_ratio(inst, &pd.plan),
        "max_drop_excess": max_drop_excess(inst, &pd.plan),
    });
    emit(args.out.as_deref(), &to_json(&out))?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct SimRow<'a> {
    schema: &'static str,
    instance_id: &'a str,
    rate: f64,
    sigma_rel: f64,
    robot: usize,
    mean_terminal: f64,
    std_terminal: f64,
    overrun_probability: f64,
}

fn parse_inflation(table: &[String]) -> Result<Inflation> {
    if table.is_empty() {
        return Ok(Inflation::Reciprocal);
    }
    let points = table
        .iter()
        .map(|entry| {
            let (r, m) = entry
                .split_once(':')
                .ok_or_else(|| usage(format!("inflation entry {entry:?} is not rate:multiplier")))?;
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| usage(format!("{entry:?}: {e}")));
            Ok((parse(r)?, parse(m)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Inflation::Table(points))
}

fn simulate_cmd(args: SimulateArgs) -> Result<u8> {
    let doc = load_instance(&args.instance)?;
    let pd = load_plan(&args.plan)?;
    let inflation = parse_inflation(&args.inflation_table)?;
    let mut summaries = Vec::new();
    let mut traces = Vec::new();
    for &rate in &args.rate {
        // Every rate replays the same random stream.
        let cfg = SimConfig {
            sigma_rel: args.sigma,
            correct_action_rate: rate,
            trials: args.trials,
            seed: args.seed,
            inflation: inflation.clone(),
        };
        let sim = simulate(&doc.instance, &pd.plan, &cfg).map_err(|e| usage(e.to_string()))?;
        summaries.push(sim.summary);
        traces.push(sim.trace);
    }
    let id = doc.id.clone().unwrap_or_default();
    let out = json!({
        "version": SCHEMA_VERSION,
        "instance_id": doc.id,
        "inflation": inflation,
        "inflation_note": "travel-time multiplier is a modelling assumption, configurable with --inflation-table",
        "summaries": summaries,
    });
    emit(args.out.as_deref(), &to_json(&out))?;
    if let Some(path) = &args.trace {
        emit(Some(path), &to_json(&json!({ "version": SCHEMA_VERSION, "rates": args.rate, "traces": traces })))?;
    }
    if let Some(path) = &args.csv {
        let rows: Vec<SimRow> = summaries
            .iter()
            .flat_map(|s| {
                let id = id.as_str();
                s.robots.iter().map(move |r| SimRow {
                    schema: SCHEMA_VERSION,
                    instance_id: id,
                    rate: s.correct_action_rate,
                    sigma_rel: s.sigma_rel,
                    robot: r.robot,
                    mean_terminal: r.mean_terminal,
                    std_terminal: r.std_terminal,
                    overrun_probability: r.overrun_probability,
                })
            })
            .collect();
        write_csv(Some(path), &rows, args.append)?;
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct LimitRow<'a> {
    schema: &'static str,
    instance_id: &'a str,
    method: &'a str,
    seed: u64,
    tour_time_limit: f64,
    dropped: usize,
    total_requests: usize,
    dropped_ratio: f64,
    weighted_total: f64,
}

fn sweep_timelimit(args: SweepTimelimitArgs) -> Result<u8> {
    let method = parse_method(&args.method)?;
    let budget = budget(args.budget_seconds)?;
    let doc = load_instance(&args.instance)?;
    let (samples, sample_config) = resolve_samples(&doc, &args.samples, args.seed, method.mode())?;
    let options = SolveOptions {
        seed: args.seed,
        budget,
        ..SolveOptions::default()
    };
    let (rows, plans) = match sweep_time_limit(&doc.instance, samples.as_ref(), &args.limits, method, &options) {
        Ok(r) => r,
        Err(SolveError::Input(msg)) => return Err(usage(msg)),
        Err(e) => return Err(e.into()),
    };
    let id = doc.id.clone().unwrap_or_default();
    let csv_rows: Vec<LimitRow> = rows
        .iter()
        .map(|r| LimitRow {
            schema: SCHEMA_VERSION,
            instance_id: &id,
            method: method.name(),
            seed: args.seed,
            tour_time_limit: r.tour_time_limit,
            dropped: r.dropped,
            total_requests: r.total_requests,
            dropped_ratio: r.dropped_ratio,
            weighted_total: r.weighted_total,
        })
        .collect();
    write_csv(args.out.as_deref(), &csv_rows, args.append)?;
    if let Some(dir) = &args.plans_dir {
        fs::create_dir_all(dir)?;
        for (i, (inst, plan)) in plans.into_iter().enumerate() {
            let mut idoc = InstanceDocument::new(inst);
            idoc.id = doc.id.as_ref().map(|d| format!("{d}-limit{i}"));
            idoc.samples = doc.samples.clone();
            let objective = evaluate(&idoc.instance, samples.as_ref(), &plan, method.mode())?;
            let pd = plan_document(&idoc, method, args.seed, sample_config, plan, objective, None);
            emit(Some(&dir.join(format!("limit-{i}.instance.json"))), &to_json(&idoc))?;
            emit(Some(&dir.join(format!("limit-{i}.plan.json"))), &to_json(&pd))?;
        }
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct SigmaCsvRow<'a> {
    schema: &'static str,
    instance_id: &'a str,
    method: &'a str,
    sigma_ground_truth: f64,
    sigma_est: f64,
    seed: u64,
    dropped_ratio: f64,
    overrun_probability: f64,
}

fn sweep_sigma_cmd(args: SweepSigmaArgs) -> Result<u8> {
    let method = parse_method(&args.method)?;
    let budget = budget(args.budget_seconds)?;
    let doc = load_instance(&args.instance)?;
    if args.estimates.iter().any(|s| !(*s >= 0.0)) || !(args.ground_truth >= 0.0) {
        bail!(Usage("sigmas must be non-negative".into()));
    }
    let config = SigmaSweepConfig {
        ground_truth_sigma: args.ground_truth,
        estimated_sigmas: args.estimates.clone(),
        seeds: args.seeds,
        n_scenarios: args.scenarios,
        trials: args.trials,
        correct_action_rate: args.rate,
        inflation: Inflation::Reciprocal,
    };
    let options = SolveOptions {
        seed: args.seed,
        budget,
        ..SolveOptions::default()
    };
    let (rows, _) = match sweep_sigma(&doc.instance, method, &config, &options) {
        Ok(r) => r,
        Err(SolveError::Input(msg)) => return Err(usage(msg)),
        Err(e) => return Err(e.into()),
    };
    let id = doc.id.clone().unwrap_or_default();
    let csv_rows: Vec<SigmaCsvRow> = rows
        .iter()
        .map(|r| SigmaCsvRow {
            schema: SCHEMA_VERSION,
            instance_id: &id,
            method: method.name(),
            sigma_ground_truth: args.ground_truth,
            sigma_est: r.sigma_est,
            seed: r.seed,
            dropped_ratio: r.dropped_ratio,
            overrun_probability: r.overrun_probability,
        })
        .collect();
    write_csv(args.out.as_deref(), &csv_rows, args.append)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct BenchCsvRow<'a> {
    schema: &'static str,
    n_robots: usize,
    n_humans: usize,
    n_pois: usize,
    method: &'a str,
    dropped_ratio: f64,
    wall_seconds: f64,
    iterations: u64,
    trivial: bool,
    status: &'a str,
}

fn benchmark(args: BenchmarkArgs) -> Result<u8> {
    let mut config: BenchmarkConfig = match &args.config {
        Some(p) => serde_json::from_str(&read(p)?).map_err(|e| usage(format!("benchmark config: {e}")))?,
        None => BenchmarkConfig::default(),
    };
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(b) = args.budget_seconds {
        budget(Some(b))?;
        config.budget_seconds = b;
    }
    if !args.method.is_empty() {
        config.methods = args.method.iter().map(|m| parse_method(m)).collect::<Result<_>>()?;
    }
    if let Some(n) = args.scenarios {
        config.samples.n_scenarios = n;
    }
    if let Some(s) = args.sigma {
        config.samples.sigma_rel = s;
    }
    if !(config.budget_seconds > 0.0) {
        bail!(Usage("budget_seconds must be positive".into()));
    }
    if let Some(dir) = &args.plans_dir {
        fs::create_dir_all(dir)?;
    }
    let mut rows = Vec::new();
    for (i, point) in config.points.iter().enumerate() {
        for &method in &config.methods {
            let outcome = benchmark_point(&config, i, point, method).map_err(|e| match e {
                SolveError::Generator(g) => usage(g.to_string()),
                other => other.into(),
            })?;
            eprintln!(
                "{}/{}/{} {}: ratio {:.3} in {:.1}s ({})",
                point.n_robots,
                point.n_humans,
                point.n_pois,
                method,
                outcome.row.dropped_ratio,
                outcome.row.wall_seconds,
                outcome.row.status
            );
            if let (Some(dir), Some(solved)) = (&args.plans_dir, &outcome.solved) {
                write_benchmark_files(dir, i, method, config.seed, &outcome.instance, outcome.samples, solved)?;
            }
            rows.push(outcome.row);
        }
    }
    let csv_rows: Vec<BenchCsvRow> = rows
        .iter()
        .map(|r| BenchCsvRow {
            schema: SCHEMA_VERSION,
            n_robots: r.n_robots,
            n_humans: r.n_humans,
            n_pois: r.n_pois,
            method: r.method.name(),
            dropped_ratio: r.dropped_ratio,
            wall_seconds: r.wall_seconds,
            iterations: r.iterations,
            trivial: r.trivial,
            status: &r.status,
        })
        .collect();
    write_csv(args.out.as_deref(), &csv_rows, args.append)?;
    Ok(EXIT_OK)
}

/// File stem of the instance and plan written for grid point `index`.
pub fn benchmark_stem(dir: &Path, index: usize, method: Method) -> PathBuf {
    dir.join(format!("point{index}-{method}"))
}

fn write_benchmark_files(
    dir: &Path,
    index: usize,
    method: Method,
    seed: u64,
    instance: &Instance,
    samples: Option<SampleConfig>,
    solved: &Solved,
) -> Result<()> {
    let mut idoc = InstanceDocument::new(instance.clone());
    idoc.id = Some(format!("bench-point{index}"));
    let pd = plan_document(&idoc, method, seed, samples, solved.plan.clone(), solved.objective, solved.optimal);
    let stem = benchmark_stem(dir, index, method);
    emit(Some(&stem.with_extension("instance.json")), &to_json(&idoc))?;
    emit(Some(&stem.with_extension("plan.json")), &to_json(&pd))?;
    Ok(())
}
