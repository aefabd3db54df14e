//! Solver dispatch, parameter sweeps and benchmark rows.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generator::{generate_instance, generate_samples, GeneratorConfig, GeneratorError, SampleConfig};
use crate::lns::{lns_solve, LnsConfig, LnsError, LnsTrace};
use crate::model::{Instance, Mode, ObjectiveBreakdown, Plan, TimeSamples};
use crate::objective::dropped_requests;
use crate::oracle::{solve_exact, OracleError, OracleLimits};
use crate::seed::{derive_seed, tag};
use crate::simulator::{simulate, Inflation, SimConfig, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "d-lns")]
    DLns,
    #[serde(rename = "d-es")]
    DEs,
    #[serde(rename = "s-es")]
    SEs,
    #[serde(rename = "s-lns")]
    SLns,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::DLns, Method::DEs, Method::SEs, Method::SLns];

    pub fn mode(self) -> Mode {
        match self {
            Method::DLns | Method::DEs => Mode::Deterministic,
            Method::SEs | Method::SLns => Mode::Stochastic,
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, Method::DEs | Method::SEs)
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::DLns => "d-lns",
            Method::DEs => "d-es",
            Method::SEs => "s-es",
            Method::SLns => "s-lns",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown method {s:?}; expected one of d-lns, d-es, s-es, s-lns"))
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("method {0} needs time samples")]
    MissingSamples(Method),
    #[error(transparent)]
    Lns(#[from] LnsError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Simulation(#[from] SimError),
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error("{0}")]
    Input(String),
}

/// Knobs shared by every method.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SolveOptions {
    pub seed: u64,
    pub budget: Option<Duration>,
    pub lns: LnsConfig,
    pub oracle: OracleLimits,
}

#[derive(Debug, Clone)]
pub struct Solved {
    pub plan: Plan,
    pub objective: ObjectiveBreakdown,
    pub max_drop_excess: usize,
    pub iterations: u64,
    /// Exact methods only.
    pub optimal: Option<bool>,
    pub trace: Option<LnsTrace>,
    pub timed_out: bool,
}

pub fn solve(
    instance: &Instance,
    samples: Option<&TimeSamples>,
    method: Method,
    options: &SolveOptions,
) -> Result<Solved, SolveError> {
    let mode = method.mode();
    if mode == Mode::Stochastic && samples.is_none() {
        return Err(SolveError::MissingSamples(method));
    }
    let samples = if mode == Mode::Stochastic { samples } else { None };
    if method.is_exact() {
        let mut limits = options.oracle;
        if let Some(b) = options.budget {
            limits.wall_time = limits.wall_time.min(b);
        }
        let res = solve_exact(instance, samples, mode, limits)?;
        Ok(Solved {
            plan: res.plan,
            objective: res.objective,
            max_drop_excess: res.max_drop_excess,
            iterations: res.assignments_routed,
            optimal: Some(res.optimal),
            trace: None,
            timed_out: !res.optimal,
        })
    } else {
        let cfg = LnsConfig {
            seed: options.seed,
            mode,
            time_budget: options.budget.or(options.lns.time_budget),
            ..options.lns
        };
        let res = lns_solve(instance, samples, &cfg)?;
        Ok(Solved {
            plan: res.plan,
            objective: res.objective,
            max_drop_excess: res.max_drop_excess,
            iterations: res.trace.iterations() as u64,
            optimal: None,
            timed_out: res.trace.timed_out,
            trace: Some(res.trace),
        })
    }
}

pub fn dropped_ratio(instance: &Instance, plan: &Plan) -> f64 {
    let total = instance.total_requests();
    if total == 0 {
        return 0.0;
    }
    dropped_requests(instance, plan).map_or(1.0, |d| d.total as f64 / total as f64)
}

/// Copy of `instance` with every robot's tour time limit set to `limit`.
pub fn with_time_limit(instance: &Instance, limit: f64) -> Instance {
    let mut inst = instance.clone();
    for r in &mut inst.robots {
        r.tour_time_limit = limit;
        r.penalty_margin = r.penalty_margin.min(limit);
    }
    inst.big_time = inst.big_time.max(10.0 * limit + 1.0);
    inst
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeLimitRow {
    pub tour_time_limit: f64,
    pub dropped: usize,
    pub total_requests: usize,
    pub dropped_ratio: f64,
    pub weighted_total: f64,
}

/// Re-solves `instance` at each tour time limit, in input order.
pub fn sweep_time_limit(
    instance: &Instance,
    samples: Option<&TimeSamples>,
    limits: &[f64],
    method: Method,
    options: &SolveOptions,
) -> Result<(Vec<TimeLimitRow>, Vec<(Instance, Plan)>), SolveError> {
    if limits.windows(2).any(|w| w[1] < w[0]) {
        return Err(SolveError::Input("time limits must be ascending".into()));
    }
    if limits.iter().any(|&l| !(l > 0.0)) {
        return Err(SolveError::Input("time limits must be positive".into()));
    }
    let mut rows = Vec::with_capacity(limits.len());
    let mut plans = Vec::with_capacity(limits.len());
    for (i, &limit) in limits.iter().enumerate() {
        let inst = with_time_limit(instance, limit);
        let opts = SolveOptions {
            seed: derive_seed(options.seed, &[tag::SWEEP, i as u64]),
            ..*options
        };
        let solved = solve(&inst, samples, method, &opts)?;
        let drops = dropped_requests(&inst, &solved.plan).map_or(0, |d| d.total);
        rows.push(TimeLimitRow {
            tour_time_limit: limit,
            dropped: drops,
            total_requests: inst.total_requests(),
            dropped_ratio: dropped_ratio(&inst, &solved.plan),
            weighted_total: solved.objective.weighted_total,
        });
        plans.push((inst, solved.plan));
    }
    Ok((rows, plans))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaSweepConfig {
    pub ground_truth_sigma: f64,
    pub estimated_sigmas: Vec<f64>,
    pub seeds: usize,
    pub n_scenarios: usize,
    pub trials: usize,
    pub correct_action_rate: f64,
    pub inflation: Inflation,
}

impl Default for SigmaSweepConfig {
    fn default() -> Self {
        Self {
            ground_truth_sigma: 0.3,
            estimated_sigmas: vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.6, 1.0],
            seeds: 5,
            n_scenarios: 50,
            trials: 200,
            correct_action_rate: 1.0,
            inflation: Inflation::Reciprocal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaRow {
    pub sigma_est: f64,
    pub seed: u64,
    pub dropped_ratio: f64,
    pub overrun_probability: f64,
}

/// Plans against scenarios drawn at each estimated sigma, then replays every
/// plan under the ground-truth sigma. One row per (sigma, seed).
pub fn sweep_sigma(
    instance: &Instance,
    method: Method,
    config: &SigmaSweepConfig,
    options: &SolveOptions,
) -> Result<(Vec<SigmaRow>, Vec<Plan>), SolveError> {
    if method.mode() != Mode::Stochastic {
        return Err(SolveError::Input("the sigma sweep needs a stochastic method".into()));
    }
    let mut rows = Vec::new();
    let mut plans = Vec::new();
    for &sigma in &config.estimated_sigmas {
        for s in 0..config.seeds {
            let seed = derive_seed(options.seed, &[tag::SWEEP, s as u64]);
            let samples = generate_samples(
                instance,
                &SampleConfig {
                    sigma_rel: sigma,
                    n_scenarios: config.n_scenarios,
                    seed,
                },
            )?;
            let opts = SolveOptions { seed, ..*options };
            let solved = solve(instance, Some(&samples), method, &opts)?;
            let sim = simulate(
                instance,
                &solved.plan,
                &SimConfig {
                    sigma_rel: config.ground_truth_sigma,
                    correct_action_rate: config.correct_action_rate,
                    trials: config.trials,
                    seed: derive_seed(seed, &[tag::SIMULATION]),
                    inflation: config.inflation.clone(),
                },
            )?;
            rows.push(SigmaRow {
                sigma_est: sigma,
                seed: s as u64,
                dropped_ratio: sim.summary.dropped_ratio,
                overrun_probability: sim.summary.overrun_probability,
            });
            plans.push(solved.plan);
        }
    }
    Ok((rows, plans))
}

/// Mean dropped ratio and overrun probability per estimated sigma, in order.
pub fn sigma_means(rows: &[SigmaRow]) -> Vec<(f64, f64, f64)> {
    let mut out: Vec<(f64, f64, f64, usize)> = Vec::new();
    for r in rows {
        match out.iter_mut().find(|e| e.0 == r.sigma_est) {
            Some(e) => {
                e.1 += r.dropped_ratio;
                e.2 += r.overrun_probability;
                e.3 += 1;
            }
            None => out.push((r.sigma_est, r.dropped_ratio, r.overrun_probability, 1)),
        }
    }
    out.into_iter()
        .map(|(s, d, o, n)| (s, d / n as f64, o / n as f64))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub n_robots: usize,
    pub n_humans: usize,
    pub n_pois: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkConfig {
    pub points: Vec<GridPoint>,
    pub methods: Vec<Method>,
    pub budget_seconds: f64,
    pub seed: u64,
    /// Template for every generated instance; sizes and seed are overridden.
    pub generator: GeneratorConfig,
    pub samples: SampleConfig,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        let grid = [(4, 10, 10), (10, 50, 20), (20, 100, 30), (50, 250, 50)];
        Self {
            points: grid
                .into_iter()
                .map(|(n_robots, n_humans, n_pois)| GridPoint {
                    n_robots,
                    n_humans,
                    n_pois,
                })
                .collect(),
            methods: vec![Method::DLns, Method::DEs, Method::SEs],
            budget_seconds: 120.0,
            seed: 0,
            generator: GeneratorConfig::default(),
            samples: SampleConfig {
                n_scenarios: 20,
                ..SampleConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub n_robots: usize,
    pub n_humans: usize,
    pub n_pois: usize,
    pub method: Method,
    pub dropped_ratio: f64,
    pub wall_seconds: f64,
    pub iterations: u64,
    pub trivial: bool,
    /// `ok`, `timeout`, or the reason no plan was produced.
    pub status: String,
}

/// Result of one grid point and method, with the plan when one was found.
pub struct BenchmarkOutcome {
    pub row: BenchmarkRow,
    pub instance: Instance,
    /// Scenario settings the stochastic methods planned against.
    pub samples: Option<SampleConfig>,
    pub solved: Option<Solved>,
}

pub fn benchmark_instance(config: &BenchmarkConfig, index: usize, point: &GridPoint) -> Result<Instance, SolveError> {
    let gen = GeneratorConfig {
        n_robots: point.n_robots,
        n_humans: point.n_humans,
        n_pois: point.n_pois,
        seed: derive_seed(config.seed, &[tag::INSTANCE, index as u64]),
        ..config.generator.clone()
    };
    Ok(generate_instance(&gen)?)
}

/// Runs one method on one grid point. Failures to produce a plan become
/// trivial rows rather than errors.
pub fn benchmark_point(
    config: &BenchmarkConfig,
    index: usize,
    point: &GridPoint,
    method: Method,
) -> Result<BenchmarkOutcome, SolveError> {
    let instance = benchmark_instance(config, index, point)?;
    let sample_config = (method.mode() == Mode::Stochastic).then(|| SampleConfig {
        seed: derive_seed(config.seed, &[tag::SAMPLES, index as u64]),
        ..config.samples
    });
    let samples = sample_config.as_ref().map(|c| generate_samples(&instance, c)).transpose()?;
    // Exact methods search until the budget runs out rather than refusing
    // large assignment spaces up front.
    let options = SolveOptions {
        seed: derive_seed(config.seed, &[tag::RESTART, index as u64]),
        budget: Some(Duration::from_secs_f64(config.budget_seconds)),
        oracle: OracleLimits {
            max_assignments: u64::MAX,
            ..OracleLimits::default()
        },
        ..SolveOptions::default()
    };
    let started = Instant::now();
    let result = solve(&instance, samples.as_ref(), method, &options);
    let wall_seconds = started.elapsed().as_secs_f64();
    let base = BenchmarkRow {
        n_robots: point.n_robots,
        n_humans: point.n_humans,
        n_pois: point.n_pois,
        method,
        dropped_ratio: 1.0,
        wall_seconds,
        iterations: 0,
        trivial: true,
        status: String::new(),
    };
    Ok(match result {
        Ok(s) => {
            let ratio = dropped_ratio(&instance, &s.plan);
            let all_dropped = dropped_requests(&instance, &s.plan).map_or(true, |d| d.total == instance.total_requests());
            BenchmarkOutcome {
                row: BenchmarkRow {
                    dropped_ratio: ratio,
                    iterations: s.iterations,
                    trivial: all_dropped && instance.total_requests() > 0,
                    status: if s.timed_out { "timeout".into() } else { "ok".into() },
                    ..base
                },
                instance,
                samples: sample_config,
                solved: Some(s),
            }
        }
        Err(SolveError::Oracle(e)) => BenchmarkOutcome {
            row: BenchmarkRow {
                status: status_for(&e),
                ..base
            },
            instance,
            samples: sample_config,
            solved: None,
        },
        Err(e) => return Err(e),
    })
}

fn status_for(e: &OracleError) -> String {
    match e {
        OracleError::TooManyAssignments(_) => "assignment-limit".into(),
        OracleError::TooManyCandidates { .. } => "routing-limit".into(),
        OracleError::NoIncumbent => "timeout".into(),
        other => format!("error: {other}"),
    }
}
