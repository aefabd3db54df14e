//! Exhaustive solver for small instances.
//!
//! Enumerates every capacity-respecting group-to-robot assignment in
//! reflected Gray order, so consecutive assignments differ in one group, and
//! routes each team with the exact routing solver. Route optima are cached
//! per robot and team demand.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matching::merge_pairs;
use crate::model::{HumanId, Instance, Mode, ObjectiveBreakdown, Plan, PoiId, RobotId, TimeSamples, TIME_TOLERANCE};
use crate::objective::{evaluate, EvalError};
use crate::routing::{objective_eps, solve_routing_exact, RoutingError, RoutingSubproblem};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleLimits {
    /// Upper bound on robots^groups, the size of the assignment space;
    /// `u64::MAX` disables the check.
    pub max_assignments: u64,
    /// Largest candidate set a single team may need routed. Assignments
    /// needing more are skipped and the result is not proven optimal.
    pub max_candidates: usize,
    pub wall_time: Duration,
}

impl Default for OracleLimits {
    fn default() -> Self {
        Self {
            max_assignments: 1_000_000,
            max_candidates: 10,
            wall_time: Duration::from_secs(120),
        }
    }
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("assignment space of {0} exceeds the limit")]
    TooManyAssignments(u128),
    #[error("a team needs {candidates} candidate POIs routed, above the limit of {limit}")]
    TooManyCandidates { candidates: usize, limit: usize },
    #[error("no assignment fits the team capacities")]
    NoFeasibleAssignment,
    #[error("time limit reached before any plan was found")]
    NoIncumbent,
    #[error("stochastic mode needs time samples")]
    MissingSamples,
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub plan: Plan,
    pub objective: ObjectiveBreakdown,
    /// Summed per-human excess over the drop limit; zero for feasible plans.
    pub max_drop_excess: usize,
    /// Whether the search finished, proving the plan optimal.
    pub optimal: bool,
    pub assignments_routed: u64,
    pub assignments_pruned: u64,
}

#[derive(Clone)]
struct TeamCost {
    excess: usize,
    total: f64,
    route: Vec<PoiId>,
}

#[derive(Hash, PartialEq, Eq)]
struct CacheKey {
    robot: RobotId,
    demand: Vec<u32>,
    /// Sorted member request sets, only when the drop limit can bind.
    members: Option<Vec<Vec<PoiId>>>,
}

struct Search<'a> {
    instance: &'a Instance,
    samples: Option<&'a TimeSamples>,
    mode: Mode,
    limits: OracleLimits,
    groups: Vec<Vec<HumanId>>,
    /// `reachable[k][p]`: robot `k` can serve POI `p` alone within its limit.
    reachable: Vec<Vec<bool>>,
    cache: HashMap<CacheKey, TeamCost>,
}

impl Search<'_> {
    fn team_cost(&mut self, robot: RobotId, team: &[HumanId]) -> Result<TeamCost, OracleError> {
        let sub = RoutingSubproblem::new(self.instance, self.samples, robot, team);
        let members = sub.max_drop.map(|_| {
            let mut m: Vec<Vec<PoiId>> = sub.team_requests.clone();
            m.iter_mut().for_each(|r| r.sort_unstable());
            m.sort();
            m
        });
        let key = CacheKey {
            robot,
            demand: sub.demand.clone(),
            members,
        };
        if let Some(hit) = self.cache.get(&key) {
            return Ok(hit.clone());
        }
        let candidates = sub.candidates().len();
        if candidates > self.limits.max_candidates {
            return Err(OracleError::TooManyCandidates {
                candidates,
                limit: self.limits.max_candidates,
            });
        }
        let sol = solve_routing_exact(&sub, self.mode, self.limits.max_candidates)?;
        let cost = TeamCost {
            excess: sol.max_drop_excess,
            total: sol.objective.total,
            route: sol.route,
        };
        self.cache.insert(key, cost.clone());
        Ok(cost)
    }

    /// Lower bound on (excess, total) from demand no robot tour can reach.
    fn bound(&self, teams: &[Vec<HumanId>]) -> (usize, f64) {
        let inst = self.instance;
        let mut excess = 0;
        let mut total = 0.0;
        for (k, team) in teams.iter().enumerate() {
            for &l in team {
                let lost = inst.humans[l].requests.iter().filter(|&&p| !self.reachable[k][p]).count();
                excess += lost.saturating_sub(inst.max_drop_per_human);
                total += inst.weight_drop * lost as f64;
            }
            if self.mode == Mode::Deterministic {
                total += inst.weight_time * inst.travel(k, inst.start(), inst.terminal());
            }
        }
        (excess, total)
    }
}

fn reachability(instance: &Instance) -> Vec<Vec<bool>> {
    let windows = instance.window_table();
    let (s, u) = (instance.start(), instance.terminal());
    (0..instance.n_robots())
        .map(|k| {
            let limit = instance.robots[k].tour_time_limit;
            (0..instance.n_pois)
                .map(|p| {
                    let mut t = instance.travel(k, s, p);
                    if let Some(w) = windows[p] {
                        t = t.max(w.t_min);
                        if t > w.t_max + TIME_TOLERANCE {
                            return false;
                        }
                    }
                    t + instance.visit(k, p) + instance.travel(k, p, u) <= limit + TIME_TOLERANCE
                })
                .collect()
        })
        .collect()
}

fn lex_better(a: (usize, f64), b: (usize, f64)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1 - objective_eps(b.1))
}

/// Globally optimal plan by exhaustion, within `limits`.
///
/// Plans are ranked by drop-limit excess first, then by objective, so an
/// instance whose drop limit cannot be met still yields its least-violating
/// plan. Ties keep the first assignment in enumeration order.
pub fn solve_exact(
    instance: &Instance,
    samples: Option<&TimeSamples>,
    mode: Mode,
    limits: OracleLimits,
) -> Result<OracleResult, OracleError> {
    if mode == Mode::Stochastic && samples.is_none() {
        return Err(OracleError::MissingSamples);
    }
    if instance.n_robots() == 0 {
        return Err(OracleError::NoFeasibleAssignment);
    }
    let started = Instant::now();
    let groups = merge_pairs(instance.n_humans(), &instance.human_pairs);
    let n_groups = groups.len();
    let n_robots = instance.n_robots();
    let space = (n_robots as u128).checked_pow(n_groups as u32).unwrap_or(u128::MAX);
    if limits.max_assignments != u64::MAX && space > u128::from(limits.max_assignments) {
        return Err(OracleError::TooManyAssignments(space));
    }
    let mut search = Search {
        instance,
        samples,
        mode,
        limits,
        reachable: reachability(instance),
        groups,
        cache: HashMap::new(),
    };
    let capacity: Vec<usize> = instance.robots.iter().map(|r| r.team_capacity).collect();
    let sizes: Vec<usize> = search.groups.iter().map(Vec::len).collect();

    // Loopless reflected mixed-radix Gray code over group digits.
    let mut digit = vec![0usize; n_groups];
    let mut dir = vec![true; n_groups];
    let mut focus: Vec<usize> = (0..=n_groups).collect();
    let mut load = vec![0usize; n_robots];
    load[0] = sizes.iter().sum();

    let mut best: Option<(usize, f64, Vec<RobotId>, Vec<Vec<PoiId>>)> = None;
    let mut routed = 0u64;
    let mut pruned = 0u64;
    let mut finished = true;
    // First team too large to route exactly; its assignments are skipped.
    let mut skipped: Option<OracleError> = None;
    loop {
        if started.elapsed() >= limits.wall_time {
            finished = false;
            break;
        }
        if load.iter().zip(&capacity).all(|(l, c)| l <= c) {
            let mut teams: Vec<Vec<HumanId>> = vec![Vec::new(); n_robots];
            for (g, &k) in digit.iter().enumerate() {
                teams[k].extend_from_slice(&search.groups[g]);
            }
            teams.iter_mut().for_each(|t| t.sort_unstable());
            let lb = search.bound(&teams);
            if best.as_ref().is_some_and(|b| lex_better((b.0, b.1), lb)) {
                pruned += 1;
            } else {
                routed += 1;
                let mut excess = 0;
                let mut total = 0.0;
                let mut routes = Vec::with_capacity(n_robots);
                let mut routable = true;
                for (k, team) in teams.iter().enumerate() {
                    match search.team_cost(k, team) {
                        Ok(c) => {
                            excess += c.excess;
                            total += c.total;
                            routes.push(c.route);
                        }
                        Err(e @ OracleError::TooManyCandidates { .. }) => {
                            skipped.get_or_insert(e);
                            routable = false;
                            break;
                        }
                        Err(e) => return Err(e),
                    }
                }
                if routable && best.as_ref().is_none_or(|b| lex_better((excess, total), (b.0, b.1))) {
                    let mut assignment = vec![0; instance.n_humans()];
                    for (k, team) in teams.iter().enumerate() {
                        for &l in team {
                            assignment[l] = k;
                        }
                    }
                    best = Some((excess, total, assignment, routes));
                }
            }
        }
        if n_robots <= 1 || n_groups == 0 {
            break;
        }
        let j = focus[0];
        focus[0] = 0;
        if j == n_groups {
            break;
        }
        let old = digit[j];
        digit[j] = if dir[j] { old + 1 } else { old - 1 };
        load[old] -= sizes[j];
        load[digit[j]] += sizes[j];
        if digit[j] == 0 || digit[j] == n_robots - 1 {
            dir[j] = !dir[j];
            focus[j] = focus[j + 1];
            focus[j + 1] = j + 1;
        }
    }

    let Some((excess, _, assignment, routes)) = best else {
        if let Some(e) = skipped {
            return Err(e);
        }
        return Err(if finished {
            OracleError::NoFeasibleAssignment
        } else {
            OracleError::NoIncumbent
        });
    };
    let plan = Plan::from_routes(instance, assignment, routes);
    let objective = evaluate(instance, samples, &plan, mode)?;
    Ok(OracleResult {
        plan,
        objective,
        max_drop_excess: excess,
        optimal: finished && skipped.is_none(),
        assignments_routed: routed,
        assignments_pruned: pruned,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{HumanSpec, RobotSpec, TravelMatrix};
    use std::collections::BTreeMap;

    fn line(n_robots: usize, limit: f64, humans: Vec<Vec<usize>>) -> Instance {
        let pos: [f64; _] = [10.0, 20.0, 0.0, 0.0];
        let travel = TravelMatrix::from_fn(4, |i, j| (pos[i] - pos[j]).abs());
        let robot = RobotSpec {
            tour_time_limit: limit,
            team_capacity: humans.len(),
            penalty_margin: 0.0,
        };
        Instance {
            n_pois: 2,
            robots: vec![robot; n_robots],
            humans: humans.into_iter().map(|requests| HumanSpec { requests }).collect(),
            travel_time: vec![travel; n_robots],
            visit_time: vec![vec![5.0; 2]; n_robots],
            time_windows: BTreeMap::new(),
            sequence_deps: vec![],
            human_pairs: vec![],
            weight_drop: 1000.0,
            weight_time: 1.0,
            max_drop_per_human: 2,
            big_time: 1e4,
            coordinates: None,
        }
    }

    #[test]
    fn reachable_pair_is_fully_served() {
        let inst = line(1, 100.0, vec![vec![0, 1]]);
        let res = solve_exact(&inst, None, Mode::Deterministic, OracleLimits::default()).unwrap();
        assert!(res.optimal);
        assert_eq!(res.objective.dropped_requests, 0);
        assert_eq!(res.plan.routes[0], vec![0, 1]);
        assert!((res.objective.weighted_total - 50.0).abs() < 1e-9);
    }

    #[test]
    fn tight_limit_forces_the_trivial_plan() {
        let inst = line(2, 15.0, vec![vec![0, 1], vec![1]]);
        let res = solve_exact(&inst, None, Mode::Deterministic, OracleLimits::default()).unwrap();
        assert!(res.plan.routes.iter().all(Vec::is_empty));
        assert_eq!(res.objective.dropped_requests, inst.total_requests());
    }

    #[test]
    fn space_limit_is_enforced() {
        let inst = line(2, 100.0, vec![vec![0]; 5]);
        let limits = OracleLimits {
            max_assignments: 16,
            ..OracleLimits::default()
        };
        assert!(matches!(
            solve_exact(&inst, None, Mode::Deterministic, limits),
            Err(OracleError::TooManyAssignments(32))
        ));
    }

    #[test]
    fn identical_robots_are_interchangeable() {
        let inst = line(3, 45.0, vec![vec![0], vec![1], vec![0, 1]]);
        let a = solve_exact(&inst, None, Mode::Deterministic, OracleLimits::default()).unwrap();
        let mut swapped = inst.clone();
        swapped.robots.rotate_left(1);
        let b = solve_exact(&swapped, None, Mode::Deterministic, OracleLimits::default()).unwrap();
        assert!((a.objective.weighted_total - b.objective.weighted_total).abs() < 1e-9);
    }
}
