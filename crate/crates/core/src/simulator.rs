//! Monte Carlo replay of a plan under random travel and visit times.
//!
//! A correct-action rate below one stretches expected travel times through a
//! configurable multiplier; realized times are Gaussian around the stretched
//! nominal values and clamped at zero. Robots wait for windows to open as in
//! the nominal schedule.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Instance, Plan, PlanError, PoiId, RobotId, TIME_TOLERANCE};
use crate::objective::dropped_requests;
use crate::seed::{rng_from, tag};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("invalid simulation config: {0}")]
    Config(String),
}

/// Travel-time multiplier as a function of the correct-action rate.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "points")]
pub enum Inflation {
    /// `1 / r`.
    #[default]
    Reciprocal,
    /// Piecewise-linear through `(rate, multiplier)` points, flat outside them.
    Table(Vec<(f64, f64)>),
}

impl Inflation {
    pub fn multiplier(&self, rate: f64) -> f64 {
        match self {
            Inflation::Reciprocal => 1.0 / rate,
            Inflation::Table(points) => {
                let mut pts = points.clone();
                pts.sort_by(|a, b| a.0.total_cmp(&b.0));
                match pts.as_slice() {
                    [] => 1.0,
                    [only] => only.1,
                    _ => {
                        if rate <= pts[0].0 {
                            return pts[0].1;
                        }
                        for w in pts.windows(2) {
                            let ((r0, m0), (r1, m1)) = (w[0], w[1]);
                            if rate <= r1 {
                                let f = if r1 > r0 { (rate - r0) / (r1 - r0) } else { 1.0 };
                                return m0 + f * (m1 - m0);
                            }
                        }
                        pts[pts.len() - 1].1
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub sigma_rel: f64,
    pub correct_action_rate: f64,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub inflation: Inflation,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            sigma_rel: 0.3,
            correct_action_rate: 1.0,
            trials: 100,
            seed: 0,
            inflation: Inflation::Reciprocal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotRun {
    /// Realized service start at the start node, each POI, then the terminal.
    pub arrivals: Vec<f64>,
    pub terminal: f64,
    pub overrun: bool,
    pub window_misses: Vec<PoiId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    /// `trials[trial][robot]`.
    pub trials: Vec<Vec<RobotRun>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotSummary {
    pub robot: RobotId,
    pub mean_terminal: f64,
    pub std_terminal: f64,
    pub overrun_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub sigma_rel: f64,
    pub correct_action_rate: f64,
    pub travel_multiplier: f64,
    pub trials: usize,
    pub robots: Vec<RobotSummary>,
    /// Mean overrun probability over robots with a non-empty route.
    pub overrun_probability: f64,
    pub dropped_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Simulation {
    pub summary: SimSummary,
    pub trace: ExecutionTrace,
}

fn draw(rng: &mut impl Rng, mean: f64, sd: f64) -> f64 {
    if sd > 0.0 {
        Normal::new(mean, sd).expect("finite positive deviation").sample(rng).max(0.0)
    } else {
        mean.max(0.0)
    }
}

/// Aggregates a trace; `plan` supplies which routes are non-empty.
pub fn summarize(instance: &Instance, plan: &Plan, config: &SimConfig, trace: &ExecutionTrace) -> Result<SimSummary, SimError> {
    let drops = dropped_requests(instance, plan)?;
    let n = trace.trials.len();
    let robots: Vec<RobotSummary> = (0..instance.n_robots())
        .map(|k| {
            let times: Vec<f64> = trace.trials.iter().map(|t| t[k].terminal).collect();
            let mean = times.iter().sum::<f64>() / n.max(1) as f64;
            let var = if n > 1 {
                times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1) as f64
            } else {
                0.0
            };
            let overruns = trace.trials.iter().filter(|t| t[k].overrun).count();
            RobotSummary {
                robot: k,
                mean_terminal: mean,
                std_terminal: var.sqrt(),
                overrun_probability: overruns as f64 / n.max(1) as f64,
            }
        })
        .collect();
    let active: Vec<&RobotSummary> = robots.iter().filter(|r| !plan.routes[r.robot].is_empty()).collect();
    let overrun_probability = if active.is_empty() {
        0.0
    } else {
        active.iter().map(|r| r.overrun_probability).sum::<f64>() / active.len() as f64
    };
    let total = instance.total_requests();
    Ok(SimSummary {
        sigma_rel: config.sigma_rel,
        correct_action_rate: config.correct_action_rate,
        travel_multiplier: config.inflation.multiplier(config.correct_action_rate),
        trials: n,
        robots,
        overrun_probability,
        dropped_ratio: if total == 0 { 0.0 } else { drops.total as f64 / total as f64 },
    })
}

/// Replays `plan` for `config.trials` independent trials.
pub fn simulate(instance: &Instance, plan: &Plan, config: &SimConfig) -> Result<Simulation, SimError> {
    plan.validate_structure(instance)?;
    if config.trials == 0 {
        return Err(SimError::Config("trials must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&config.correct_action_rate) || !(config.sigma_rel >= 0.0) {
        return Err(SimError::Config("rate must lie in [0, 1] and sigma_rel be non-negative".into()));
    }
    let multiplier = config.inflation.multiplier(config.correct_action_rate);
    if !multiplier.is_finite() {
        return Err(SimError::Config(format!("travel multiplier {multiplier} is not finite")));
    }
    let windows = instance.window_table();
    let (s, u) = (instance.start(), instance.terminal());
    let sigma = config.sigma_rel;
    let trials = (0..config.trials)
        .map(|trial| {
            let mut rng = rng_from(config.seed, &[tag::SIMULATION, trial as u64]);
            (0..instance.n_robots())
                .map(|k| {
                    let route = &plan.routes[k];
                    let limit = instance.robots[k].tour_time_limit;
                    let mut arrivals = Vec::with_capacity(route.len() + 2);
                    let mut window_misses = Vec::new();
                    let mut t = 0.0;
                    let mut prev = s;
                    arrivals.push(t);
                    for &p in route.iter().chain(std::iter::once(&u)) {
                        let v_nom = instance.visit(k, prev);
                        let tr_nom = instance.travel(k, prev, p);
                        let v = draw(&mut rng, v_nom, sigma * v_nom);
                        let tr = draw(&mut rng, tr_nom * multiplier, sigma * tr_nom);
                        t += v + tr;
                        if let Some(Some(w)) = windows.get(p) {
                            t = t.max(w.t_min);
                            if t > w.t_max + TIME_TOLERANCE {
                                window_misses.push(p);
                            }
                        }
                        arrivals.push(t);
                        prev = p;
                    }
                    RobotRun {
                        arrivals,
                        terminal: t,
                        overrun: t > limit + TIME_TOLERANCE,
                        window_misses,
                    }
                })
                .collect()
        })
        .collect();
    let trace = ExecutionTrace { trials };
    Ok(Simulation {
        summary: summarize(instance, plan, config, &trace)?,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{generate_instance, GeneratorConfig};
    use crate::lns::{lns_solve, LnsConfig};

    fn solved() -> (Instance, Plan) {
        let inst = generate_instance(&GeneratorConfig {
            seed: 4,
            ..GeneratorConfig::default()
        })
        .unwrap();
        let plan = lns_solve(&inst, None, &LnsConfig::default()).unwrap().plan;
        (inst, plan)
    }

    #[test]
    fn noiseless_replay_matches_nominal_schedule() {
        let (inst, plan) = solved();
        let cfg = SimConfig {
            sigma_rel: 0.0,
            trials: 5,
            ..SimConfig::default()
        };
        let sim = simulate(&inst, &plan, &cfg).unwrap();
        for trial in &sim.trace.trials {
            for (k, run) in trial.iter().enumerate() {
                assert_eq!(run.arrivals, plan.schedule[k]);
                assert!(!run.overrun);
            }
        }
        assert_eq!(sim.summary.overrun_probability, 0.0);
    }

    #[test]
    fn lower_rate_inflates_travel() {
        assert_eq!(Inflation::Reciprocal.multiplier(0.5), 2.0);
        let table = Inflation::Table(vec![(0.7, 1.6), (1.0, 1.0)]);
        assert!((table.multiplier(0.85) - 1.3).abs() < 1e-12);
        assert_eq!(table.multiplier(0.2), 1.6);
    }

    #[test]
    fn seeded_replays_repeat() {
        let (inst, plan) = solved();
        let cfg = SimConfig {
            trials: 20,
            seed: 5,
            ..SimConfig::default()
        };
        assert_eq!(simulate(&inst, &plan, &cfg).unwrap(), simulate(&inst, &plan, &cfg).unwrap());
    }
}
