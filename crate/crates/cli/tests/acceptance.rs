//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails. Pass criterion names (e.g. `c5`) to run a subset.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use smrp::experiments::{
    benchmark_point, dropped_ratio, sigma_means, solve, sweep_sigma, sweep_time_limit, BenchmarkConfig, GridPoint,
    Method, SigmaSweepConfig, SolveOptions,
};
use smrp::feasibility::check_feasibility;
use smrp::generator::{generate_instance, generate_samples, GeneratorConfig, SampleConfig};
use smrp::lns::{lns_solve, LnsConfig};
use smrp::matching::{merge_pairs, solve_matching, MatchingCosts, UNBOUNDED_DROP};
use smrp::model::{Instance, Mode, Plan};
use smrp::oracle::{solve_exact, OracleLimits};
use smrp::routing::{solve_routing_exact, RoutingSubproblem};
use smrp::seed::derive_seed;
use smrp::simulator::{simulate, SimConfig};
use smrp_testkit::{
    best_route, candidate_pois, close, flat_optimum, matching_by_enumeration, route_feasible, small_config,
    small_instance, Universe,
};
use tempfile::TempDir;

/// Plans emitted by criteria 1 to 7, checked together at the end.
#[derive(Default)]
struct Closure {
    checked: usize,
    failures: Vec<String>,
}

impl Closure {
    fn check(&mut self, what: &str, instance: &Instance, plan: &Plan) {
        self.checked += 1;
        match check_feasibility(instance, plan) {
            Ok(r) if r.ok() => {}
            Ok(r) => self.failures.push(format!("{what}: {} violations", r.violations.len())),
            Err(e) => self.failures.push(format!("{what}: {e}")),
        }
    }
}

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t <= limit, format!("took {:.1}s, limit {}s", t.as_secs_f64(), limit.as_secs()))
}

fn pick(seed: u64, i: u64, n: u64) -> usize {
    (derive_seed(seed, &[i]) % n) as usize
}

fn oracle_equivalence(closure: &mut Closure) -> Outcome {
    let start = Instant::now();
    let (mut compared, mut solved, mut matched) = (0, 0, 0);
    let mut worst: f64 = 1.0;
    for i in 0..100u64 {
        let seed = derive_seed(0xacce, &[1, i]);
        let (n_v, n_l, n_m) = (1 + pick(seed, 1, 2), 1 + pick(seed, 2, 4), 1 + pick(seed, 3, 5));
        let inst = small_instance(seed, n_v, n_l, n_m);
        let samples = generate_samples(&inst, &SampleConfig { sigma_rel: 0.3, n_scenarios: 5, seed }).unwrap();
        for (mode, universe) in [(Mode::Deterministic, Universe::AllPois), (Mode::Stochastic, Universe::Candidates)] {
            let flat = flat_optimum(&inst, Some(&samples), mode, universe);
            let oracle = solve_exact(&inst, Some(&samples), mode, OracleLimits::default());
            match (&flat, &oracle) {
                (Some((best, _)), Ok(res)) => {
                    closure.check("oracle", &inst, &res.plan);
                    ensure(res.optimal && res.max_drop_excess == 0, format!("instance {i}: oracle not optimal"))?;
                    ensure(
                        close(res.objective.weighted_total, *best),
                        format!("instance {i} {mode:?}: oracle {} flat {best}", res.objective.weighted_total),
                    )?;
                    compared += 1;
                }
                (None, Ok(res)) => ensure(res.max_drop_excess > 0, format!("instance {i}: flat found no feasible plan"))?,
                (None, Err(_)) => {}
                (Some((best, _)), Err(e)) => return Err(format!("instance {i}: oracle failed ({e}), flat {best}")),
            }
        }

        let Ok(o) = solve_exact(&inst, None, Mode::Deterministic, OracleLimits::default()) else { continue };
        if o.max_drop_excess > 0 {
            continue;
        }
        let lns = lns_solve(&inst, None, &LnsConfig { seed, restarts: 3, ..LnsConfig::default() })
            .map_err(|e| format!("instance {i}: lns failed ({e})"))?;
        closure.check("lns", &inst, &lns.plan);
        ensure(lns.max_drop_excess == 0, format!("instance {i}: lns infeasible"))?;
        let (a, b) = (o.objective.weighted_total, lns.objective.weighted_total);
        solved += 1;
        if close(a, b) {
            matched += 1;
        }
        if a > 0.0 {
            worst = worst.max(b / a);
        }
    }
    within(start, Duration::from_secs(300))?;
    let rate = matched as f64 / solved as f64;
    let summary = format!("{compared} exact comparisons; lns matched {matched}/{solved}, worst ratio {worst:.4}");
    ensure(rate >= 0.8 && worst <= 1.1, summary.clone())?;
    Ok(summary)
}

fn matching_exactness() -> Outcome {
    let start = Instant::now();
    for i in 0..200u64 {
        let seed = derive_seed(0xacce, &[2, i]);
        let (n_l, n_v) = (1 + pick(seed, 1, 8), 1 + pick(seed, 2, 4));
        let cost = (0..n_l)
            .map(|l| (0..n_v).map(|k| pick(seed, 100 + (l * 8 + k) as u64, 6)).collect())
            .collect();
        let capacity = (0..n_v).map(|k| 1 + pick(seed, 200 + k as u64, 4)).collect();
        let pairs: Vec<_> = (0..pick(seed, 3, 4) as u64)
            .map(|j| (pick(seed, 300 + 2 * j, n_l as u64), pick(seed, 301 + 2 * j, n_l as u64)))
            .filter(|(a, b)| a != b)
            .collect();
        let max_drop = match pick(seed, 4, 6) {
            5 => UNBOUNDED_DROP,
            m => m,
        };
        let costs = MatchingCosts { cost, capacity, groups: merge_pairs(n_l, &pairs), max_drop };
        let expected = matching_by_enumeration(&costs);
        match solve_matching(&costs) {
            Ok(sol) => {
                ensure(Some(sol.total_cost) == expected, format!("case {i}: flow {} vs {expected:?}", sol.total_cost))?;
                ensure(costs.assignment_cost(&sol.assignment) == Some(sol.total_cost), format!("case {i}: cost mismatch"))?;
            }
            Err(_) => ensure(expected.is_none(), format!("case {i}: flow failed, enumeration {expected:?}"))?,
        }
    }
    within(start, Duration::from_secs(60))?;
    Ok("200/200 cases agree".into())
}

fn routing_exactness(closure: &mut Closure) -> Outcome {
    let start = Instant::now();
    let mut with_windows = 0;
    for i in 0..200u64 {
        let seed = derive_seed(0xacce, &[3, i]);
        let mode = if i % 2 == 0 { Mode::Deterministic } else { Mode::Stochastic };
        let n_humans = 1 + pick(seed, 1, 3);
        let cfg = GeneratorConfig {
            window_fraction: 0.3,
            n_sequence_deps: 1 + pick(seed, 2, 2),
            ..small_config(seed, 1, n_humans, 6)
        };
        let inst = generate_instance(&cfg).unwrap();
        with_windows += usize::from(!inst.time_windows.is_empty());
        let samples = generate_samples(&inst, &SampleConfig { sigma_rel: 0.3, n_scenarios: 6, seed }).unwrap();
        let team: Vec<usize> = (0..n_humans).collect();
        let universe = match mode {
            Mode::Deterministic => (0..inst.n_pois).collect(),
            Mode::Stochastic => candidate_pois(&inst, &team),
        };
        let (e, c, _) = best_route(&inst, Some(&samples), mode, 0, &team, &universe).ok_or("empty route rejected")?;
        let sub = RoutingSubproblem::new(&inst, Some(&samples), 0, &team);
        let sol = solve_routing_exact(&sub, mode, 10).map_err(|e| format!("case {i}: {e}"))?;
        ensure(
            sol.max_drop_excess == e && close(sol.objective.total, c),
            format!("case {i} {mode:?}: b&b ({}, {}) vs enumeration ({e}, {c})", sol.max_drop_excess, sol.objective.total),
        )?;
        ensure(route_feasible(&inst, 0, &sol.route), format!("case {i}: infeasible route"))?;
        if sol.max_drop_excess == 0 {
            let plan = Plan::from_routes(&inst, vec![0; n_humans], vec![sol.route]);
            closure.check("routing", &inst, &plan);
        }
    }
    within(start, Duration::from_secs(300))?;
    Ok(format!("200/200 cases agree, {with_windows} with windows"))
}

fn scalability(closure: &mut Closure) -> Outcome {
    let start = Instant::now();
    let cfg = BenchmarkConfig::default();
    let points = cfg.points.clone();
    let last = points.len() - 1;
    let mut lines = Vec::new();
    let mut lns_ratio = vec![f64::NAN; points.len()];
    for (i, point) in points.iter().enumerate() {
        let out = benchmark_point(&cfg, i, point, Method::DLns).map_err(|e| e.to_string())?;
        if let Some(s) = &out.solved {
            closure.check("benchmark d-lns", &out.instance, &s.plan);
        }
        lns_ratio[i] = out.row.dropped_ratio;
        if i == last {
            ensure(
                !out.row.trivial && out.row.dropped_ratio < 1.0,
                format!("largest point trivial ({})", out.row.status),
            )?;
            ensure(out.row.wall_seconds <= 120.0, format!("largest point took {:.1}s", out.row.wall_seconds))?;
            lines.push(format!("d-lns {} in {:.1}s", describe(point), out.row.wall_seconds));
        }
    }
    // Exact rows get a shorter budget; they cannot finish at these sizes either way.
    let exact_cfg = BenchmarkConfig { budget_seconds: 30.0, ..cfg };
    for (i, point) in points.iter().enumerate() {
        for method in [Method::DEs, Method::SEs] {
            let out = benchmark_point(&exact_cfg, i, point, method).map_err(|e| e.to_string())?;
            if let Some(s) = &out.solved {
                closure.check("benchmark exact", &out.instance, &s.plan);
            }
            if point.n_humans >= 50 {
                ensure(
                    out.row.trivial || out.row.status == "timeout",
                    format!("{method} finished {} ({})", describe(point), out.row.status),
                )?;
                ensure(
                    lns_ratio[i] <= out.row.dropped_ratio,
                    format!("{method} beat d-lns at {}", describe(point)),
                )?;
            }
        }
    }
    lines.push("exact methods trivial beyond 4/10/10".into());
    eprintln!("  scalability took {:.1}s", start.elapsed().as_secs_f64());
    Ok(lines.join("; "))
}

fn describe(p: &GridPoint) -> String {
    format!("{}/{}/{}", p.n_robots, p.n_humans, p.n_pois)
}

fn min_tour(inst: &Instance) -> f64 {
    (0..inst.n_robots())
        .flat_map(|k| {
            (0..inst.n_pois)
                .map(move |p| inst.travel(k, inst.start(), p) + inst.visit(k, p) + inst.travel(k, p, inst.terminal()))
        })
        .fold(f64::INFINITY, f64::min)
}

fn trade_off(closure: &mut Closure) -> Outcome {
    let start = Instant::now();
    let inst = generate_instance(&GeneratorConfig { window_fraction: 0.0, seed: 1, ..GeneratorConfig::default() }).unwrap();
    let shortest = min_tour(&inst);
    let mut limits = vec![0.5 * shortest, 100.0, 150.0, 200.0, 300.0, 400.0, 600.0, 1e6];
    limits.sort_by(f64::total_cmp);
    ensure(limits[1] > shortest, "sweep does not straddle the shortest tour")?;
    let samples = generate_samples(&inst, &SampleConfig { sigma_rel: 0.3, n_scenarios: 20, seed: 1 }).unwrap();
    let mut curves = Vec::new();
    for (method, slack) in [(Method::DLns, 0.0), (Method::SLns, 0.05)] {
        let (rows, plans) = sweep_time_limit(&inst, Some(&samples), &limits, method, &SolveOptions::default())
            .map_err(|e| e.to_string())?;
        for (i, p) in &plans {
            closure.check("sweep", i, p);
        }
        let ratios: Vec<f64> = rows.iter().map(|r| r.dropped_ratio).collect();
        let shown: Vec<String> = ratios.iter().map(|r| format!("{r:.2}")).collect();
        ensure(ratios.windows(2).all(|w| w[1] <= w[0] + slack), format!("{method} not decreasing: {shown:?}"))?;
        ensure(ratios[0] == 1.0, format!("{method}: ratio {} below the shortest tour", ratios[0]))?;
        ensure(*ratios.last().unwrap() == 0.0, format!("{method}: drops remain at an unbounded limit"))?;
        curves.push(format!("{method} [{}]", shown.join(" ")));
    }
    within(start, Duration::from_secs(120))?;
    Ok(curves.join("; "))
}

fn uncertainty_instance(margin: f64) -> Instance {
    generate_instance(&GeneratorConfig {
        window_fraction: 0.0,
        weight_time: 100.0,
        penalty_margin_fraction: margin,
        seed: 1,
        ..GeneratorConfig::default()
    })
    .unwrap()
}

fn uncertainty(closure: &mut Closure) -> Outcome {
    let start = Instant::now();
    let inst = uncertainty_instance(0.1);
    let cfg = SigmaSweepConfig::default();
    let (rows, plans) = sweep_sigma(&inst, Method::SLns, &cfg, &SolveOptions::default()).map_err(|e| e.to_string())?;
    for p in &plans {
        closure.check("sigma sweep", &inst, p);
    }
    let means = sigma_means(&rows);
    let shown: Vec<String> = means.iter().map(|(s, d, o)| format!("{s}:{d:.3}/{o:.3}")).collect();
    for w in means.windows(2) {
        ensure(w[1].1 >= w[0].1 - 0.05, format!("dropped ratio falls: {shown:?}"))?;
        ensure(w[1].2 <= w[0].2 + 0.05, format!("overrun rises: {shown:?}"))?;
    }
    let at = |s: f64| means.iter().find(|m| m.0 == s).map(|m| m.2).unwrap();
    ensure(at(0.3) < at(0.0), format!("no separation at 0.3: {shown:?}"))?;
    within(start, Duration::from_secs(600))?;
    Ok(shown.join(" "))
}

fn robustness(closure: &mut Closure) -> Outcome {
    let start = Instant::now();
    let inst = uncertainty_instance(0.2);
    let samples = generate_samples(&inst, &SampleConfig { sigma_rel: 0.4, n_scenarios: 50, seed: 7 }).unwrap();
    let solved = solve(&inst, Some(&samples), Method::SLns, &SolveOptions { seed: 7, ..SolveOptions::default() })
        .map_err(|e| e.to_string())?;
    closure.check("robustness", &inst, &solved.plan);
    ensure(dropped_ratio(&inst, &solved.plan) < 1.0, "plan drops everything")?;
    let mut prev: Option<Vec<f64>> = None;
    let mut shown = Vec::new();
    for rate in [1.0, 0.9, 0.8] {
        let sim = simulate(&inst, &solved.plan, &SimConfig { correct_action_rate: rate, trials: 200, seed: 11, ..SimConfig::default() })
            .map_err(|e| e.to_string())?;
        let p = sim.summary.overrun_probability;
        shown.push(format!("{rate}:{p:.3}"));
        ensure(p < 0.2, format!("overrun {p} at rate {rate}"))?;
        let means: Vec<f64> = sim.summary.robots.iter().map(|r| r.mean_terminal).collect();
        if let Some(prev) = &prev {
            ensure(means.iter().zip(prev).all(|(m, q)| *m >= q - 1e-9), format!("mean terminal fell at rate {rate}"))?;
        }
        prev = Some(means);
    }
    within(start, Duration::from_secs(300))?;
    Ok(format!("overrun by rate {}", shown.join(" ")))
}

fn smrp(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_smrp"))
        .current_dir(dir)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(
        out.status.code() == Some(0),
        format!("smrp {} exited {:?}: {}", args.join(" "), out.status.code(), String::from_utf8_lossy(&out.stderr)),
    )
}

fn run_commands(dir: &Path) -> Result<(), String> {
    fs::write(dir.join("grid.json"), r#"{"points": [{"n_robots": 2, "n_humans": 4, "n_pois": 5}], "budget_seconds": 10}"#)
        .map_err(|e| e.to_string())?;
    fs::create_dir_all(dir.join("sweep")).map_err(|e| e.to_string())?;
    fs::create_dir_all(dir.join("bench")).map_err(|e| e.to_string())?;
    let steps: &[&[&str]] = &[
        &["generate", "--seed", "5", "--robots", "3", "--humans", "8", "--pois", "8", "--scenarios", "10", "--out", "inst.json"],
        &["plan", "inst.json", "--method", "d-lns", "--seed", "2", "--out", "d.json", "--trace", "d.trace.json"],
        &["plan", "inst.json", "--method", "s-lns", "--seed", "2", "--out", "s.json", "--trace", "s.trace.json"],
        &["plan", "inst.json", "--method", "d-es", "--seed", "2", "--out", "e.json", "--trace", "e.trace.json"],
        &["check", "inst.json", "s.json", "--out", "check.json"],
        &["eval", "inst.json", "d.json", "--out", "eval.json"],
        &["simulate", "inst.json", "s.json", "--rate", "1.0,0.8", "--trials", "30", "--seed", "3", "--out", "sim.json", "--trace", "sim.trace.json", "--csv", "sim.csv"],
        &["sweep-timelimit", "inst.json", "--limits", "100,300,1000", "--seed", "4", "--out", "sweep.csv", "--plans-dir", "sweep"],
        &["sweep-sigma", "inst.json", "--estimates", "0,0.3", "--seeds", "2", "--scenarios", "10", "--trials", "20", "--out", "sigma.csv"],
        &["benchmark", "--config", "grid.json", "--seed", "6", "--method", "d-lns,s-es", "--scenarios", "5", "--out", "bench.csv", "--plans-dir", "bench"],
    ];
    for args in steps {
        smrp(dir, args)?;
    }
    Ok(())
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(files(&path));
        } else {
            out.push(path);
        }
    }
    out.sort();
    out
}

/// Benchmark rows carry measured wall time, which is dropped before comparing.
fn comparable(path: &Path) -> Vec<u8> {
    let bytes = fs::read(path).unwrap();
    if path.file_name().is_some_and(|n| n == "bench.csv") {
        let text = String::from_utf8(bytes).unwrap();
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let col = rdr.headers().unwrap().iter().position(|h| h == "wall_seconds").unwrap();
        let rows: Vec<String> = rdr
            .records()
            .map(|r| r.unwrap().iter().enumerate().filter(|(i, _)| *i != col).map(|(_, f)| f).collect::<Vec<_>>().join(","))
            .collect();
        return rows.join("\n").into_bytes();
    }
    bytes
}

fn determinism() -> Outcome {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    run_commands(a.path())?;
    run_commands(b.path())?;
    let (fa, fb) = (files(a.path()), files(b.path()));
    let rel = |d: &TempDir, f: &[PathBuf]| f.iter().map(|p| p.strip_prefix(d.path()).unwrap().to_path_buf()).collect::<Vec<_>>();
    ensure(rel(&a, &fa) == rel(&b, &fb), "runs wrote different file sets")?;
    for (x, y) in fa.iter().zip(&fb) {
        ensure(comparable(x) == comparable(y), format!("{} differs", x.strip_prefix(a.path()).unwrap().display()))?;
    }
    Ok(format!("{} output files identical across runs", fa.len()))
}

fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let wanted = |id: &str| filters.is_empty() || filters.iter().any(|f| f == id);
    let mut closure = Closure::default();
    let mut failed = 0;
    let mut report = |id: &str, name: &str, run: &mut dyn FnMut(&mut Closure) -> Outcome, closure: &mut Closure| {
        if !wanted(id) {
            return;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(|| run(closure))).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("PASS {id} {name}: {msg} ({secs:.1}s)"),
            Err(msg) => {
                failed += 1;
                println!("FAIL {id} {name}: {msg} ({secs:.1}s)");
            }
        }
    };
    report("c1", "oracle equivalence", &mut oracle_equivalence, &mut closure);
    report("c2", "matching exactness", &mut |_| matching_exactness(), &mut closure);
    report("c3", "routing exactness", &mut routing_exactness, &mut closure);
    report("c4", "scalability", &mut scalability, &mut closure);
    report("c5", "time-limit trade-off", &mut trade_off, &mut closure);
    report("c6", "uncertainty trade-off", &mut uncertainty, &mut closure);
    report("c7", "robustness margin", &mut robustness, &mut closure);
    report("c8", "determinism", &mut |_| determinism(), &mut closure);
    report(
        "c9",
        "feasibility closure",
        &mut |c: &mut Closure| {
            ensure(c.checked > 0, "no plans were checked")?;
            ensure(c.failures.is_empty(), c.failures.join("; "))?;
            Ok(format!("{} plans, zero violations", c.checked))
        },
        &mut closure,
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
