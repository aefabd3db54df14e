//! Alternating matching and routing search.
//!
//! Each iteration solves the matching with every route fixed, then re-routes
//! each robot with its new team fixed. Sub-solve results replace the incumbent
//! only when they improve it, so the objective never goes up within a restart.

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matching::{build_costs, merge_pairs, solve_matching_with_limit, MatchingError, UNBOUNDED_DROP};
use crate::model::{HumanId, Instance, Mode, ObjectiveBreakdown, Plan, PoiId, RobotId, TimeSamples};
use crate::objective::{dropped_requests, evaluate, EvalError};
use crate::routing::{
    evaluate_route, solve_routing_exact, solve_routing_heuristic, LimitPolicy, RoutingError, RoutingSubproblem,
};
use crate::seed::{derive_seed, rng_from, tag};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LnsConfig {
    pub max_iterations: usize,
    pub seed: u64,
    pub mode: Mode,
    /// Robots whose candidate set is at most this large are routed exactly;
    /// zero routes everything heuristically.
    pub exact_cap: usize,
    /// Accepted-move budget of the routing heuristic.
    pub heuristic_budget: usize,
    pub restarts: usize,
    pub tolerance: f64,
    pub limit_policy: LimitPolicy,
    /// Wall-clock budget over all restarts.
    pub time_budget: Option<Duration>,
    /// Single-group relocations are tried only when groups times robots is
    /// at most this; team merges are always tried.
    #[serde(default = "default_relocation_limit")]
    pub relocation_limit: usize,
    /// Flow relaxations allowed per matching step.
    #[serde(default = "default_matching_relaxations")]
    pub matching_relaxations: usize,
}

fn default_matching_relaxations() -> usize {
    16
}

fn default_relocation_limit() -> usize {
    256
}

impl Default for LnsConfig {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            seed: 0,
            mode: Mode::Deterministic,
            exact_cap: 8,
            heuristic_budget: 200,
            restarts: 3,
            tolerance: 1e-9,
            limit_policy: LimitPolicy::Nominal,
            time_budget: None,
            relocation_limit: default_relocation_limit(),
            matching_relaxations: default_matching_relaxations(),
        }
    }
}

#[derive(Debug, Error)]
pub enum LnsError {
    #[error("team capacities ({capacity}) cannot hold all {humans} humans")]
    CapacityShortfall { capacity: usize, humans: usize },
    #[error("no packing of the human groups fits the team capacities")]
    Unpackable,
    #[error("stochastic mode needs time samples")]
    MissingSamples,
    #[error("invalid configuration: {0}")]
    Config(&'static str),
    #[error(transparent)]
    Matching(#[from] MatchingError),
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteDelta {
    pub robot: RobotId,
    pub added: Vec<PoiId>,
    pub removed: Vec<PoiId>,
    /// Same POI set in a different order.
    pub reordered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: ObjectiveBreakdown,
    /// Summed amount by which humans exceed the per-human drop limit.
    pub max_drop_excess: usize,
    pub matching_changed: bool,
    /// Drop limit the matching actually used, when it had to be relaxed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relaxed_max_drop: Option<usize>,
    pub route_deltas: Vec<RouteDelta>,
    /// Team move applied after the alternating step stalled.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub team_move: Option<TeamMove>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeamMove {
    pub from: RobotId,
    pub to: RobotId,
    pub humans: Vec<HumanId>,
    /// Humans moved the other way in a swap.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub swapped: Vec<HumanId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartTrace {
    pub seed: u64,
    /// Iteration 0 is the random initialization.
    pub iterations: Vec<IterationRecord>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LnsTrace {
    pub restarts: Vec<RestartTrace>,
    pub best_restart: usize,
    pub timed_out: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_seconds: Option<f64>,
}

impl LnsTrace {
    /// Drops wall-clock fields so traces of identical runs compare equal.
    pub fn without_timings(mut self) -> Self {
        self.wall_seconds = None;
        for r in &mut self.restarts {
            for it in &mut r.iterations {
                it.wall_seconds = None;
            }
        }
        self
    }

    pub fn iterations(&self) -> usize {
        self.restarts.iter().map(|r| r.iterations.len().saturating_sub(1)).sum()
    }
}

#[derive(Debug, Clone)]
pub struct LnsResult {
    pub plan: Plan,
    pub objective: ObjectiveBreakdown,
    pub max_drop_excess: usize,
    pub trace: LnsTrace,
}

/// Random capacity- and pair-respecting assignment with empty routes.
pub fn initialize(instance: &Instance, seed: u64) -> Result<Plan, LnsError> {
    let capacity: usize = instance.robots.iter().map(|r| r.team_capacity).sum();
    if capacity < instance.n_humans() {
        return Err(LnsError::CapacityShortfall {
            capacity,
            humans: instance.n_humans(),
        });
    }
    let groups = merge_pairs(instance.n_humans(), &instance.human_pairs);
    let mut rng = rng_from(seed, &[tag::RESTART]);
    for _ in 0..32 {
        let mut order: Vec<usize> = (0..groups.len()).collect();
        order.shuffle(&mut rng);
        let mut left: Vec<usize> = instance.robots.iter().map(|r| r.team_capacity).collect();
        let mut assignment = vec![0; instance.n_humans()];
        let mut ok = true;
        for g in order {
            let size = groups[g].len();
            let fits: Vec<RobotId> = (0..left.len()).filter(|&k| left[k] >= size).collect();
            if fits.is_empty() {
                ok = false;
                break;
            }
            let k = fits[rng.random_range(0..fits.len())];
            left[k] -= size;
            for &l in &groups[g] {
                assignment[l] = k;
            }
        }
        if ok {
            let routes = vec![Vec::new(); instance.n_robots()];
            return Ok(Plan::from_routes(instance, assignment, routes));
        }
    }
    // Largest groups first into the roomiest robot.
    let mut order: Vec<usize> = (0..groups.len()).collect();
    order.sort_by_key(|&g| std::cmp::Reverse(groups[g].len()));
    let mut left: Vec<usize> = instance.robots.iter().map(|r| r.team_capacity).collect();
    let mut assignment = vec![0; instance.n_humans()];
    for g in order {
        let k = (0..left.len()).max_by_key(|&k| (left[k], std::cmp::Reverse(k))).unwrap_or(0);
        if left.is_empty() || left[k] < groups[g].len() {
            return Err(LnsError::Unpackable);
        }
        left[k] -= groups[g].len();
        for &l in &groups[g] {
            assignment[l] = k;
        }
    }
    Ok(Plan::from_routes(instance, assignment, vec![Vec::new(); instance.n_robots()]))
}

/// Summed per-human excess over the drop limit.
pub fn max_drop_excess(instance: &Instance, plan: &Plan) -> usize {
    dropped_requests(instance, plan)
        .map(|d| {
            d.per_human
                .iter()
                .map(|&n| n.saturating_sub(instance.max_drop_per_human))
                .sum()
        })
        .unwrap_or(usize::MAX)
}

#[derive(Clone, Copy)]
struct Score {
    excess: usize,
    total: f64,
}

impl Score {
    fn better_than(self, other: Score, tol: f64) -> bool {
        self.excess < other.excess || (self.excess == other.excess && self.total < other.total - tol)
    }
}

struct Context<'a> {
    instance: &'a Instance,
    samples: Option<&'a TimeSamples>,
    config: &'a LnsConfig,
    deadline: Option<Instant>,
    started: Instant,
}

impl Context<'_> {
    fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    fn score(&self, plan: &Plan) -> Result<(Score, ObjectiveBreakdown), LnsError> {
        let obj = evaluate(self.instance, self.samples, plan, self.config.mode)?;
        let excess = max_drop_excess(self.instance, plan);
        Ok((Score { excess, total: obj.weighted_total }, obj))
    }

    fn record(&self, iteration: usize, plan: &Plan) -> Result<(Score, IterationRecord), LnsError> {
        let (score, objective) = self.score(plan)?;
        Ok((
            score,
            IterationRecord {
                iteration,
                objective,
                max_drop_excess: score.excess,
                matching_changed: false,
                relaxed_max_drop: None,
                route_deltas: Vec::new(),
                team_move: None,
                wall_seconds: Some(self.started.elapsed().as_secs_f64()),
            },
        ))
    }

    /// Matching step. Relaxes the drop limit one step at a time while no
    /// assignment satisfies it, falling back to no limit and then to the
    /// current assignment.
    fn rematch(&self, plan: &Plan) -> (Vec<RobotId>, Option<usize>) {
        let costs = build_costs(self.instance, &plan.routes);
        let ceiling = costs.max_cost();
        let mut level = self.instance.max_drop_per_human;
        loop {
            match solve_matching_with_limit(&costs.with_max_drop(level), self.config.matching_relaxations) {
                Ok(sol) => {
                    let relaxed = (level != self.instance.max_drop_per_human).then_some(level);
                    return (sol.assignment, relaxed);
                }
                Err(_) if level == UNBOUNDED_DROP => return (plan.assignment.clone(), Some(UNBOUNDED_DROP)),
                Err(_) => {
                    level = if level >= ceiling { UNBOUNDED_DROP } else { level + 1 };
                }
            }
        }
    }

    /// Best route for `robot` given its team, never worse than `current`.
    fn reroute(&self, robot: RobotId, team: &[usize], current: &[PoiId], seed: u64) -> Result<Vec<PoiId>, LnsError> {
        let cfg = self.config;
        let sub = RoutingSubproblem::new(self.instance, self.samples, robot, team).with_limit_policy(cfg.limit_policy);
        let exact = sub.candidates().len() <= cfg.exact_cap;
        let sol = if exact {
            solve_routing_exact(&sub, cfg.mode, cfg.exact_cap)?
        } else {
            solve_routing_heuristic(&sub, cfg.mode, cfg.heuristic_budget, seed, Some(current))?
        };
        let keep_current = match evaluate_route(&sub, cfg.mode, current) {
            Ok(obj) => {
                let cur = Score {
                    excess: sub.max_drop_excess(current),
                    total: obj.total,
                };
                let new = Score {
                    excess: sol.max_drop_excess,
                    total: sol.objective.total,
                };
                !new.better_than(cur, cfg.tolerance)
            }
            Err(_) => false,
        };
        Ok(if keep_current { current.to_vec() } else { sol.route })
    }

    fn run_restart(&self, restart: usize) -> Result<(Plan, Score, RestartTrace), LnsError> {
        let cfg = self.config;
        let seed = derive_seed(cfg.seed, &[tag::RESTART, restart as u64]);
        let mut plan = initialize(self.instance, seed)?;
        let (mut score, first) = self.record(0, &plan)?;
        let mut trace = RestartTrace {
            seed,
            iterations: vec![first],
            converged: false,
        };
        let n_robots = self.instance.n_robots();
        for iteration in 1..=cfg.max_iterations {
            if self.expired() {
                break;
            }
            let before = score;

            let (assignment, relaxed) = self.rematch(&plan);
            let mut matching_changed = false;
            if assignment != plan.assignment {
                let cand = Plan::from_routes(self.instance, assignment, plan.routes.clone());
                let (s, _) = self.score(&cand)?;
                if s.better_than(score, cfg.tolerance) {
                    plan = cand;
                    score = s;
                    matching_changed = true;
                }
            }

            let teams = plan.teams(n_robots);
            let new_routes = self.route_all(&teams, &plan.routes, seed, iteration)?;
            let route_deltas = deltas(&plan.routes, &new_routes);
            let cand = Plan::from_routes(self.instance, plan.assignment.clone(), new_routes);
            let (s, _) = self.score(&cand)?;
            if !score.better_than(s, cfg.tolerance) {
                plan = cand;
                score = s;
            }

            let stalled = score.excess == before.excess && (before.total - score.total).abs() < cfg.tolerance;
            let team_move = if stalled { self.move_teams(&mut plan, &mut score, seed, iteration)? } else { None };

            let (_, mut rec) = self.record(iteration, &plan)?;
            rec.matching_changed = matching_changed;
            rec.relaxed_max_drop = relaxed;
            rec.route_deltas = route_deltas;
            let moved = team_move.is_some();
            rec.team_move = team_move;
            trace.iterations.push(rec);
            if stalled && !moved {
                trace.converged = true;
                break;
            }
        }
        Ok((plan, score, trace))
    }

    /// First improving team move: a whole team joins another robot, or, on
    /// small instances, one group changes robot or two groups trade. Both affected
    /// robots are rerouted.
    fn move_teams(&self, plan: &mut Plan, score: &mut Score, seed: u64, iteration: usize) -> Result<Option<TeamMove>, LnsError> {
        let inst = self.instance;
        let n = inst.n_robots();
        let teams = plan.teams(n);
        let groups = merge_pairs(inst.n_humans(), &inst.human_pairs);
        let cap = |k: RobotId| inst.robots[k].team_capacity;
        // (from, to, humans moving from -> to, humans moving back)
        let mut moves: Vec<(RobotId, RobotId, Vec<HumanId>, Vec<HumanId>)> = Vec::new();
        for from in 0..n {
            for to in 0..n {
                if from != to && !teams[from].is_empty() && teams[to].len() + teams[from].len() <= cap(to) {
                    moves.push((from, to, teams[from].clone(), Vec::new()));
                }
            }
        }
        let small = groups.len() * n <= self.config.relocation_limit;
        if small {
            for g in &groups {
                let from = plan.assignment[g[0]];
                if g.len() == teams[from].len() {
                    continue;
                }
                for to in (0..n).filter(|&to| to != from && teams[to].len() + g.len() <= cap(to)) {
                    moves.push((from, to, g.clone(), Vec::new()));
                }
            }
        }
        if small && groups.len() * groups.len() <= self.config.relocation_limit {
            for (i, g) in groups.iter().enumerate() {
                for h in &groups[i + 1..] {
                    let (from, to) = (plan.assignment[g[0]], plan.assignment[h[0]]);
                    if from != to
                        && teams[to].len() + g.len() - h.len() <= cap(to)
                        && teams[from].len() + h.len() - g.len() <= cap(from)
                    {
                        moves.push((from, to, g.clone(), h.clone()));
                    }
                }
            }
        }
        for (i, (from, to, humans, back)) in moves.into_iter().enumerate() {
            if self.expired() {
                break;
            }
            let mut assignment = plan.assignment.clone();
            humans.iter().for_each(|&l| assignment[l] = to);
            back.iter().for_each(|&l| assignment[l] = from);
            let mut new_teams = teams.clone();
            new_teams[from].retain(|l| !humans.contains(l));
            new_teams[to].retain(|l| !back.contains(l));
            new_teams[from].extend_from_slice(&back);
            new_teams[to].extend_from_slice(&humans);
            new_teams[from].sort_unstable();
            new_teams[to].sort_unstable();
            let move_seed = derive_seed(seed, &[tag::ROUTING, iteration as u64, n as u64 + i as u64]);
            let mut routes = plan.routes.clone();
            for k in [from, to] {
                let current: Vec<PoiId> = if k == from && new_teams[k].is_empty() { Vec::new() } else { plan.routes[k].clone() };
                routes[k] = self.reroute(k, &new_teams[k], &current, move_seed)?;
            }
            let cand = Plan::from_routes(inst, assignment, routes);
            let (s, _) = self.score(&cand)?;
            if s.better_than(*score, self.config.tolerance) {
                *plan = cand;
                *score = s;
                return Ok(Some(TeamMove { from, to, humans, swapped: back }));
            }
        }
        Ok(None)
    }

    /// Routes every robot, in parallel when there are several.
    fn route_all(
        &self,
        teams: &[Vec<usize>],
        routes: &[Vec<PoiId>],
        seed: u64,
        iteration: usize,
    ) -> Result<Vec<Vec<PoiId>>, LnsError> {
        let n = teams.len();
        let route_seed = |k: usize| derive_seed(seed, &[tag::ROUTING, iteration as u64, k as u64]);
        let workers = std::thread::available_parallelism().map_or(1, |p| p.get()).min(n);
        if workers <= 1 {
            return (0..n).map(|k| self.reroute(k, &teams[k], &routes[k], route_seed(k))).collect();
        }
        let mut out: Vec<Option<Result<Vec<PoiId>, LnsError>>> = (0..n).map(|_| None).collect();
        std::thread::scope(|scope| {
            for (w, slots) in out.chunks_mut(n.div_ceil(workers)).enumerate() {
                let base = w * n.div_ceil(workers);
                scope.spawn(move || {
                    for (i, slot) in slots.iter_mut().enumerate() {
                        let k = base + i;
                        *slot = Some(self.reroute(k, &teams[k], &routes[k], route_seed(k)));
                    }
                });
            }
        });
        out.into_iter().map(|r| r.expect("every robot routed")).collect()
    }
}

fn deltas(old: &[Vec<PoiId>], new: &[Vec<PoiId>]) -> Vec<RouteDelta> {
    old.iter()
        .zip(new)
        .enumerate()
        .filter(|(_, (a, b))| a != b)
        .map(|(robot, (a, b))| {
            let added: Vec<PoiId> = b.iter().copied().filter(|p| !a.contains(p)).collect();
            let removed: Vec<PoiId> = a.iter().copied().filter(|p| !b.contains(p)).collect();
            RouteDelta {
                robot,
                reordered: added.is_empty() && removed.is_empty(),
                added,
                removed,
            }
        })
        .collect()
}

/// Runs the alternating search from several random starts and returns the
/// best plan found.
pub fn lns_solve(instance: &Instance, samples: Option<&TimeSamples>, config: &LnsConfig) -> Result<LnsResult, LnsError> {
    if config.max_iterations == 0 {
        return Err(LnsError::Config("max_iterations must be at least 1"));
    }
    if config.restarts == 0 {
        return Err(LnsError::Config("restarts must be at least 1"));
    }
    if config.mode == Mode::Stochastic && samples.is_none() {
        return Err(LnsError::MissingSamples);
    }
    let started = Instant::now();
    let ctx = Context {
        instance,
        samples,
        config,
        deadline: config.time_budget.map(|b| started + b),
        started,
    };
    let mut best: Option<(Plan, Score, usize)> = None;
    let mut restarts = Vec::with_capacity(config.restarts);
    let mut timed_out = false;
    for r in 0..config.restarts {
        if r > 0 && ctx.expired() {
            timed_out = true;
            break;
        }
        let (plan, score, trace) = ctx.run_restart(r)?;
        if !trace.converged && ctx.expired() {
            timed_out = true;
        }
        restarts.push(trace);
        if best.as_ref().is_none_or(|(_, b, _)| score.better_than(*b, config.tolerance)) {
            best = Some((plan, score, r));
        }
    }
    let (plan, score, best_restart) = best.expect("at least one restart runs");
    let objective = evaluate(instance, samples, &plan, config.mode)?;
    Ok(LnsResult {
        plan,
        objective,
        max_drop_excess: score.excess,
        trace: LnsTrace {
            restarts,
            best_restart,
            timed_out,
            wall_seconds: Some(started.elapsed().as_secs_f64()),
        },
    })
}
