//! Brute-force reference implementations used as test oracles.
//!
//! Nothing here shares code with the solvers beyond the data types: schedules,
//! objectives and constraint checks are recomputed from the instance fields.

use std::collections::HashMap;

use smrp::generator::{generate_instance, GeneratorConfig};
use smrp::matching::MatchingCosts;
use smrp::model::{HumanId, Instance, Mode, Plan, PoiId, RobotId, TimeSamples};

pub const TOL: f64 = 1e-6;

/// Relative-or-absolute float equality at `1e-9`.
pub fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Element-wise [`close`] for equal-length slices.
pub fn close_all(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| close(*x, *y))
}

/// Calls `f` on every vector in `0..base` of length `len`.
pub fn for_each_tuple(base: usize, len: usize, mut f: impl FnMut(&[usize])) {
    if base == 0 {
        if len == 0 {
            f(&[]);
        }
        return;
    }
    let mut v = vec![0usize; len];
    loop {
        f(&v);
        let mut i = 0;
        loop {
            if i == len {
                return;
            }
            v[i] += 1;
            if v[i] < base {
                break;
            }
            v[i] = 0;
            i += 1;
        }
    }
}

/// Every ordered selection of distinct elements of `universe`, the empty one included.
pub fn all_routes(universe: &[PoiId]) -> Vec<Vec<PoiId>> {
    fn rec(universe: &[PoiId], used: &mut Vec<bool>, cur: &mut Vec<PoiId>, out: &mut Vec<Vec<PoiId>>) {
        out.push(cur.clone());
        for i in 0..universe.len() {
            if !used[i] {
                used[i] = true;
                cur.push(universe[i]);
                rec(universe, used, cur, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(universe, &mut vec![false; universe.len()], &mut Vec::new(), &mut out);
    out
}

/// Minimum matching cost over all assignments, `None` if none is admissible.
pub fn matching_by_enumeration(costs: &MatchingCosts) -> Option<usize> {
    let n_l = costs.cost.len();
    let n_v = costs.capacity.len();
    let mut best: Option<usize> = None;
    for_each_tuple(n_v, n_l, |a| {
        let mut load = vec![0; n_v];
        let mut total = 0;
        for (l, &k) in a.iter().enumerate() {
            if costs.cost[l][k] > costs.max_drop {
                return;
            }
            load[k] += 1;
            total += costs.cost[l][k];
        }
        if load.iter().zip(&costs.capacity).any(|(n, c)| n > c) {
            return;
        }
        if costs.groups.iter().any(|g| g.iter().any(|&l| a[l] != a[g[0]])) {
            return;
        }
        best = Some(best.map_or(total, |b| b.min(total)));
    });
    best
}

fn window(instance: &Instance, p: usize) -> Option<(f64, f64)> {
    instance.time_windows.get(&p).map(|w| (w.t_min, w.t_max))
}

fn walk(instance: &Instance, route: &[PoiId]) -> Vec<usize> {
    let mut nodes = vec![instance.n_pois];
    nodes.extend_from_slice(route);
    nodes.push(instance.n_pois + 1);
    nodes
}

fn visit_time(instance: &Instance, k: RobotId, node: usize) -> f64 {
    if node < instance.n_pois {
        instance.visit_time[k][node]
    } else {
        0.0
    }
}

/// Nominal service start at each node of `start, route..., terminal`.
pub fn replay_schedule(instance: &Instance, k: RobotId, route: &[PoiId]) -> Vec<f64> {
    let nodes = walk(instance, route);
    let mut out = vec![0.0];
    for w in nodes.windows(2) {
        let mut t = out[out.len() - 1] + visit_time(instance, k, w[0]) + instance.travel_time[k].get(w[0], w[1]);
        if let Some((lo, _)) = window(instance, w[1]) {
            t = t.max(lo);
        }
        out.push(t);
    }
    out
}

/// Terminal time of `route` in scenario `xi`.
pub fn replay_scenario(instance: &Instance, samples: &TimeSamples, k: RobotId, route: &[PoiId], xi: usize) -> f64 {
    let s = samples.n_scenarios;
    let n = instance.n_pois + 2;
    let nodes = walk(instance, route);
    let mut t = 0.0;
    for w in nodes.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a < instance.n_pois {
            t += samples.visit[k][a * s + xi];
        }
        t += samples.travel[k][(a * n + b) * s + xi];
        if let Some((lo, _)) = window(instance, b) {
            t = t.max(lo);
        }
    }
    t
}

/// Mean of `[T - alpha]^+` over the scenarios.
pub fn saa_overrun(instance: &Instance, samples: &TimeSamples, k: RobotId, route: &[PoiId]) -> f64 {
    let alpha = instance.robots[k].tour_time_limit - instance.robots[k].penalty_margin;
    (0..samples.n_scenarios)
        .map(|xi| (replay_scenario(instance, samples, k, route, xi) - alpha).max(0.0))
        .sum::<f64>()
        / samples.n_scenarios as f64
}

/// Whether `route` alone satisfies the per-robot constraints (limit,
/// windows, prerequisites present and earlier).
pub fn route_feasible(instance: &Instance, k: RobotId, route: &[PoiId]) -> bool {
    let sched = replay_schedule(instance, k, route);
    if sched[sched.len() - 1] > instance.robots[k].tour_time_limit + TOL {
        return false;
    }
    for (i, &p) in route.iter().enumerate() {
        if let Some((lo, hi)) = window(instance, p) {
            if sched[i + 1] < lo - TOL || sched[i + 1] > hi + TOL {
                return false;
            }
        }
    }
    instance.sequence_deps.iter().all(|&(a, b)| match route.iter().position(|&p| p == b) {
        None => true,
        Some(pb) => route.iter().position(|&p| p == a).is_some_and(|pa| pa < pb),
    })
}

fn dropped_of(instance: &Instance, human: HumanId, route: &[PoiId]) -> usize {
    instance.humans[human].requests.iter().filter(|p| !route.contains(p)).count()
}

/// Per-robot objective: drop cost of the team plus the time or overrun term.
pub fn route_cost(
    instance: &Instance,
    samples: Option<&TimeSamples>,
    mode: Mode,
    k: RobotId,
    team: &[HumanId],
    route: &[PoiId],
) -> f64 {
    let dropped: usize = team.iter().map(|&l| dropped_of(instance, l, route)).sum();
    let time = match mode {
        Mode::Deterministic => *replay_schedule(instance, k, route).last().unwrap(),
        Mode::Stochastic => saa_overrun(instance, samples.expect("stochastic mode needs samples"), k, route),
    };
    instance.weight_drop * dropped as f64 + instance.weight_time * time
}

/// Amount by which team members exceed the per-human drop limit.
pub fn route_excess(instance: &Instance, team: &[HumanId], route: &[PoiId]) -> usize {
    team.iter()
        .map(|&l| dropped_of(instance, l, route).saturating_sub(instance.max_drop_per_human))
        .sum()
}

/// Demanded POIs of `team` plus their transitive prerequisites.
pub fn candidate_pois(instance: &Instance, team: &[HumanId]) -> Vec<PoiId> {
    let mut keep = vec![false; instance.n_pois];
    let mut stack: Vec<PoiId> = team.iter().flat_map(|&l| instance.humans[l].requests.clone()).collect();
    while let Some(p) = stack.pop() {
        if !keep[p] {
            keep[p] = true;
            stack.extend(instance.sequence_deps.iter().filter(|d| d.1 == p).map(|d| d.0));
        }
    }
    (0..instance.n_pois).filter(|&p| keep[p]).collect()
}

/// Best `(excess, cost, route)` for one robot and team over every ordered
/// subset of `universe`, ranked by drop-limit excess then cost.
pub fn best_route(
    instance: &Instance,
    samples: Option<&TimeSamples>,
    mode: Mode,
    k: RobotId,
    team: &[HumanId],
    universe: &[PoiId],
) -> Option<(usize, f64, Vec<PoiId>)> {
    let mut best: Option<(usize, f64, Vec<PoiId>)> = None;
    for route in all_routes(universe) {
        if !route_feasible(instance, k, &route) {
            continue;
        }
        let e = route_excess(instance, team, &route);
        let c = route_cost(instance, samples, mode, k, team, &route);
        let better = match &best {
            None => true,
            Some((be, bc, _)) => e < *be || (e == *be && c < *bc),
        };
        if better {
            best = Some((e, c, route));
        }
    }
    best
}

/// Which POIs the flat enumeration may route.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Universe {
    AllPois,
    /// Only the team's demanded POIs and their prerequisites.
    Candidates,
}

/// Optimal weighted total over every feasible plan, by enumerating all
/// assignments and, per robot, every ordered POI subset. No bounding.
pub fn flat_optimum(
    instance: &Instance,
    samples: Option<&TimeSamples>,
    mode: Mode,
    universe: Universe,
) -> Option<(f64, Plan)> {
    let n_v = instance.robots.len();
    let n_l = instance.humans.len();
    let all: Vec<PoiId> = (0..instance.n_pois).collect();
    let mut memo: HashMap<(RobotId, Vec<HumanId>), Option<(f64, Vec<PoiId>)>> = HashMap::new();
    let mut best: Option<(f64, Plan)> = None;
    for_each_tuple(n_v, n_l, |a| {
        if instance.human_pairs.iter().any(|&(x, y)| a[x] != a[y]) {
            return;
        }
        let mut teams = vec![Vec::new(); n_v];
        for (l, &k) in a.iter().enumerate() {
            teams[k].push(l);
        }
        if teams.iter().enumerate().any(|(k, t)| t.len() > instance.robots[k].team_capacity) {
            return;
        }
        let mut total = 0.0;
        let mut routes = Vec::with_capacity(n_v);
        for (k, team) in teams.into_iter().enumerate() {
            let entry = memo.entry((k, team.clone())).or_insert_with(|| {
                let uni = match universe {
                    Universe::AllPois => all.clone(),
                    Universe::Candidates => candidate_pois(instance, &team),
                };
                best_route(instance, samples, mode, k, &team, &uni)
                    .filter(|(e, _, _)| *e == 0)
                    .map(|(_, c, r)| (c, r))
            });
            match entry {
                None => return,
                Some((c, r)) => {
                    total += *c;
                    routes.push(r.clone());
                }
            }
        }
        if best.as_ref().is_none_or(|(b, _)| total < *b) {
            best = Some((total, Plan::from_routes(instance, a.to_vec(), routes)));
        }
    });
    best
}

/// Weighted total of `plan` recomputed from scratch.
pub fn plan_objective(instance: &Instance, samples: Option<&TimeSamples>, mode: Mode, plan: &Plan) -> f64 {
    let mut teams = vec![Vec::new(); instance.robots.len()];
    for (l, &k) in plan.assignment.iter().enumerate() {
        teams[k].push(l);
    }
    (0..instance.robots.len())
        .map(|k| route_cost(instance, samples, mode, k, &teams[k], &plan.routes[k]))
        .sum()
}

/// Full constraint check, including that the stored schedule matches a replay.
pub fn plan_feasible(instance: &Instance, plan: &Plan) -> bool {
    let n_v = instance.robots.len();
    if plan.assignment.len() != instance.humans.len() || plan.routes.len() != n_v || plan.schedule.len() != n_v {
        return false;
    }
    if plan.assignment.iter().any(|&k| k >= n_v) {
        return false;
    }
    for (k, route) in plan.routes.iter().enumerate() {
        let mut sorted = route.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != route.len() || route.iter().any(|&p| p >= instance.n_pois) {
            return false;
        }
        let replay = replay_schedule(instance, k, route);
        if replay.len() != plan.schedule[k].len()
            || replay.iter().zip(&plan.schedule[k]).any(|(a, b)| (a - b).abs() > TOL)
        {
            return false;
        }
        if !route_feasible(instance, k, route) {
            return false;
        }
        let team = plan.assignment.iter().filter(|&&r| r == k).count();
        if team > instance.robots[k].team_capacity {
            return false;
        }
    }
    let drops_ok = (0..instance.humans.len())
        .all(|l| dropped_of(instance, l, &plan.routes[plan.assignment[l]]) <= instance.max_drop_per_human);
    drops_ok && instance.human_pairs.iter().all(|&(a, b)| plan.assignment[a] == plan.assignment[b])
}

/// Generator settings for a small instance whose constraint mix varies with `seed`.
pub fn small_config(seed: u64, n_robots: usize, n_humans: usize, n_pois: usize) -> GeneratorConfig {
    let bits = smrp::seed::derive_seed(seed, &[0x7e57]);
    let pick = |shift: u32, n: u64| ((bits >> shift) % n) as usize;
    GeneratorConfig {
        n_robots,
        n_humans,
        n_pois,
        seed,
        request_probability: [0.3, 0.5, 0.7][pick(0, 3)],
        tour_time_limit: [120.0, 180.0, 250.0, 400.0][pick(8, 4)],
        window_fraction: [0.0, 0.2, 0.4][pick(16, 3)],
        n_sequence_deps: pick(24, 3),
        pair_fraction: [0.0, 0.5][pick(32, 2)],
        capacity_slack: pick(40, 2),
        max_drop_per_human: [None, Some(1), Some(2)][pick(48, 3)],
        ..GeneratorConfig::default()
    }
}

pub fn small_instance(seed: u64, n_robots: usize, n_humans: usize, n_pois: usize) -> Instance {
    generate_instance(&small_config(seed, n_robots, n_humans, n_pois)).expect("valid small config")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn route_enumeration_counts() {
        // sum_{k=0..3} 3!/(3-k)! = 1 + 3 + 6 + 6
        assert_eq!(all_routes(&[0, 1, 2]).len(), 16);
        let mut n = 0;
        for_each_tuple(3, 2, |_| n += 1);
        assert_eq!(n, 9);
    }
}
