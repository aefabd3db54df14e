//! Single-robot routing with the team fixed.
//!
//! A subproblem selects and orders the POIs one robot visits, trading the
//! demand its team drops against either the nominal terminal time or the
//! sample-average overrun past the penalty threshold. Two solvers share one
//! compiled view of the subproblem: an exact branch-and-bound for small
//! candidate sets and an insertion plus local-search heuristic.

mod compiled;
mod exact;
mod heuristic;

pub use exact::{solve_routing_exact, ExactSolver, DEFAULT_EXACT_CAP};
pub use heuristic::solve_routing_heuristic;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::feasibility::ConstraintFamily;
use crate::model::{
    nominal_schedule, HumanId, Instance, Mode, PoiId, RobotId, TimeSamples, TimeWindow, TIME_TOLERANCE,
};
use crate::objective::expected_overrun;

/// Which scenarios the tour time limit binds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitPolicy {
    /// Only the nominal schedule must finish within the limit.
    #[default]
    Nominal,
    /// The nominal schedule and every sampled scenario must finish within the limit.
    AllScenarios,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RoutingError {
    #[error("{candidates} candidate POIs exceed the exact solver cap of {cap}; use the heuristic")]
    CapExceeded { candidates: usize, cap: usize },
    #[error("robot {robot} has no feasible route, not even the empty one")]
    NoFeasibleRoute { robot: RobotId },
    #[error("stochastic routing needs time samples")]
    MissingSamples,
}

/// First constraint a route breaks during the forward pass.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("{family} at {node:?}: {detail}")]
pub struct ScheduleError {
    pub family: ConstraintFamily,
    /// Offending POI, `None` for the terminal.
    pub node: Option<PoiId>,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct RoutingSubproblem<'a> {
    pub robot: RobotId,
    pub instance: &'a Instance,
    pub samples: Option<&'a TimeSamples>,
    /// Team members requesting each POI.
    pub demand: Vec<u32>,
    pub windows: Vec<Option<TimeWindow>>,
    pub prerequisites: Vec<Vec<PoiId>>,
    pub tour_time_limit: f64,
    pub penalty_threshold: f64,
    pub weight_drop: f64,
    pub weight_time: f64,
    /// Request sets of the team members, for the per-human drop limit.
    pub team_requests: Vec<Vec<PoiId>>,
    /// Per-human drop limit, `None` when it cannot bind.
    pub max_drop: Option<usize>,
    pub limit_policy: LimitPolicy,
}

impl<'a> RoutingSubproblem<'a> {
    pub fn new(instance: &'a Instance, samples: Option<&'a TimeSamples>, robot: RobotId, team: &[HumanId]) -> Self {
        let mut demand = vec![0u32; instance.n_pois];
        let team_requests: Vec<Vec<PoiId>> = team.iter().map(|&l| instance.humans[l].requests.clone()).collect();
        for reqs in &team_requests {
            for &p in reqs {
                demand[p] += 1;
            }
        }
        let largest = team_requests.iter().map(Vec::len).max().unwrap_or(0);
        let robot_spec = &instance.robots[robot];
        Self {
            robot,
            instance,
            samples,
            demand,
            windows: instance.window_table(),
            prerequisites: instance.prerequisites(),
            tour_time_limit: robot_spec.tour_time_limit,
            penalty_threshold: robot_spec.penalty_threshold(),
            weight_drop: instance.weight_drop,
            weight_time: instance.weight_time,
            team_requests,
            max_drop: (instance.max_drop_per_human < largest).then_some(instance.max_drop_per_human),
            limit_policy: LimitPolicy::Nominal,
        }
    }

    pub fn without_max_drop(mut self) -> Self {
        self.max_drop = None;
        self
    }

    pub fn with_limit_policy(mut self, policy: LimitPolicy) -> Self {
        self.limit_policy = policy;
        self
    }

    /// Demanded POIs plus every transitive prerequisite, ascending.
    pub fn candidates(&self) -> Vec<PoiId> {
        let mut keep = vec![false; self.demand.len()];
        let mut stack: Vec<PoiId> = (0..self.demand.len()).filter(|&p| self.demand[p] > 0).collect();
        while let Some(p) = stack.pop() {
            if !std::mem::replace(&mut keep[p], true) {
                stack.extend(self.prerequisites[p].iter().copied());
            }
        }
        (0..keep.len()).filter(|&p| keep[p]).collect()
    }

    pub fn total_demand(&self) -> u32 {
        self.demand.iter().sum()
    }

    /// Summed amount by which team members exceed the drop limit on `route`.
    pub fn max_drop_excess(&self, route: &[PoiId]) -> usize {
        let Some(limit) = self.max_drop else { return 0 };
        self.team_requests
            .iter()
            .map(|reqs| reqs.iter().filter(|p| !route.contains(p)).count().saturating_sub(limit))
            .sum()
    }
}

/// Objective of one robot's route.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RouteObjective {
    pub dropped_demand: u32,
    pub terminal_time: f64,
    pub saa_penalty: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RoutingStats {
    pub nodes: u64,
    pub pruned_by_bound: u64,
    pub pruned_by_dominance: u64,
    pub incumbent_updates: u64,
    pub moves_evaluated: u64,
    pub moves_accepted: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouteSolution {
    pub route: Vec<PoiId>,
    pub schedule: Vec<f64>,
    pub objective: RouteObjective,
    pub max_drop_excess: usize,
    pub stats: RoutingStats,
}

/// Nominal forward pass that fails at the first violated constraint.
pub fn schedule_route(sub: &RoutingSubproblem<'_>, route: &[PoiId]) -> Result<Vec<f64>, ScheduleError> {
    let inst = sub.instance;
    let mut seen = vec![false; inst.n_pois];
    for &p in route {
        if p >= inst.n_pois || std::mem::replace(&mut seen[p], true) {
            return Err(ScheduleError {
                family: ConstraintFamily::ScheduleConsistency,
                node: Some(p),
                detail: "unknown or repeated POI".into(),
            });
        }
    }
    let mut served = vec![false; inst.n_pois];
    for &p in route {
        if let Some(&missing) = sub.prerequisites[p].iter().find(|&&i| !served[i]) {
            return Err(ScheduleError {
                family: if route.contains(&missing) {
                    ConstraintFamily::SequenceOrder
                } else {
                    ConstraintFamily::SequenceVisit
                },
                node: Some(p),
                detail: format!("prerequisite {missing} not served before"),
            });
        }
        served[p] = true;
    }
    let schedule = nominal_schedule(inst, &sub.windows, sub.robot, route);
    for (idx, &p) in route.iter().enumerate() {
        if let Some(w) = sub.windows[p] {
            if schedule[idx + 1] > w.t_max + TIME_TOLERANCE {
                return Err(ScheduleError {
                    family: ConstraintFamily::TimeWindow,
                    node: Some(p),
                    detail: format!("service at {} after window close {}", schedule[idx + 1], w.t_max),
                });
            }
        }
    }
    let terminal = schedule[schedule.len() - 1];
    if terminal > sub.tour_time_limit + TIME_TOLERANCE {
        return Err(ScheduleError {
            family: ConstraintFamily::TimeLimit,
            node: None,
            detail: format!("terminal time {terminal} exceeds limit {}", sub.tour_time_limit),
        });
    }
    Ok(schedule)
}

/// Scenario terminal times of `route`, or `None` without samples.
fn scenario_times(sub: &RoutingSubproblem<'_>, route: &[PoiId]) -> Option<Vec<f64>> {
    sub.samples
        .map(|s| crate::model::scenario_terminal_times(sub.instance, &sub.windows, s, sub.robot, route))
}

/// Evaluates a complete route from scratch.
///
/// Fails if the route breaks a timing or sequence constraint, or, under
/// [`LimitPolicy::AllScenarios`], if any scenario overruns the limit. The
/// drop limit is not enforced here; see [`RoutingSubproblem::max_drop_excess`].
pub fn evaluate_route(
    sub: &RoutingSubproblem<'_>,
    mode: Mode,
    route: &[PoiId],
) -> Result<RouteObjective, ScheduleError> {
    let schedule = schedule_route(sub, route)?;
    let terminal = schedule[schedule.len() - 1];
    let served: u32 = route.iter().map(|&p| sub.demand[p]).sum();
    let dropped_demand = sub.total_demand() - served;
    let scen = scenario_times(sub, route);
    if sub.limit_policy == LimitPolicy::AllScenarios {
        if let Some(t) = scen.as_ref().and_then(|v| v.iter().copied().find(|&t| t > sub.tour_time_limit + TIME_TOLERANCE)) {
            return Err(ScheduleError {
                family: ConstraintFamily::TimeLimit,
                node: None,
                detail: format!("scenario terminal time {t} exceeds limit {}", sub.tour_time_limit),
            });
        }
    }
    let saa_penalty = scen
        .as_ref()
        .map(|t| expected_overrun(t, sub.penalty_threshold))
        .unwrap_or(0.0);
    let time_value = match mode {
        Mode::Deterministic => terminal,
        Mode::Stochastic => saa_penalty,
    };
    Ok(RouteObjective {
        dropped_demand,
        terminal_time: terminal,
        saa_penalty,
        total: sub.weight_drop * f64::from(dropped_demand) + sub.weight_time * time_value,
    })
}

/// Relative tolerance used when comparing objective values.
pub fn objective_eps(reference: f64) -> f64 {
    1e-9 * (1.0 + reference.abs())
}

/// Strict preference between two routes: lower drop-limit excess, then lower
/// objective, then shorter, then lexicographically smaller.
pub(crate) fn route_better(a: (usize, f64, &[PoiId]), b: (usize, f64, &[PoiId])) -> bool {
    if a.0 != b.0 {
        return a.0 < b.0;
    }
    let eps = objective_eps(b.1);
    if a.1 < b.1 - eps {
        return true;
    }
    if a.1 > b.1 + eps {
        return false;
    }
    if a.2.len() != b.2.len() {
        return a.2.len() < b.2.len();
    }
    a.2 < b.2
}

fn check_mode(sub: &RoutingSubproblem<'_>, mode: Mode) -> Result<(), RoutingError> {
    if sub.samples.is_none() && (mode == Mode::Stochastic || sub.limit_policy == LimitPolicy::AllScenarios) {
        return Err(RoutingError::MissingSamples);
    }
    Ok(())
}
