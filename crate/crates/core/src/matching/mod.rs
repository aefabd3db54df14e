//! Human-to-robot matching with all routes fixed.
//!
//! Each human's cost on a robot is the number of its requests that robot's
//! route skips. The assignment problem without pair constraints is solved
//! exactly as a min-cost flow. Pair constraints merge humans into groups that
//! must share a robot; when the flow relaxation splits a group, the solver
//! branches on that group's robot and re-solves the flow with the group
//! pinned, so the returned optimum is exact.

mod flow;

pub use flow::MinCostFlow;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{HumanId, Instance, PoiId, RobotId};

/// `max_drop` value meaning "no per-human drop limit".
pub const UNBOUNDED_DROP: usize = usize::MAX;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatchingError {
    #[error("no admissible robot for group {group:?}: {reason}")]
    Infeasible { group: Vec<HumanId>, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchingCosts {
    /// `cost[l][k]`: requests of human `l` not on robot `k`'s route.
    pub cost: Vec<Vec<usize>>,
    pub capacity: Vec<usize>,
    /// Transitive closure of the pair constraints; partitions the humans.
    pub groups: Vec<Vec<HumanId>>,
    pub max_drop: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchingSolution {
    pub assignment: Vec<RobotId>,
    pub total_cost: usize,
    /// Flow relaxations solved, including the root.
    pub relaxations: usize,
    /// False when the relaxation limit cut the branching short.
    pub optimal: bool,
}

impl MatchingCosts {
    pub fn n_humans(&self) -> usize {
        self.cost.len()
    }

    pub fn n_robots(&self) -> usize {
        self.capacity.len()
    }

    pub fn with_max_drop(&self, max_drop: usize) -> Self {
        Self {
            max_drop,
            ..self.clone()
        }
    }

    /// Largest per-human cost, the level at which `max_drop` stops binding.
    pub fn max_cost(&self) -> usize {
        self.cost.iter().flatten().copied().max().unwrap_or(0)
    }

    /// Total cost of `assignment`; `None` if it breaks a constraint.
    pub fn assignment_cost(&self, assignment: &[RobotId]) -> Option<usize> {
        if assignment.len() != self.n_humans() {
            return None;
        }
        let mut load = vec![0usize; self.n_robots()];
        let mut total = 0;
        for (l, &k) in assignment.iter().enumerate() {
            if k >= self.n_robots() || self.cost[l][k] > self.max_drop {
                return None;
            }
            load[k] += 1;
            total += self.cost[l][k];
        }
        if load.iter().zip(&self.capacity).any(|(n, c)| n > c) {
            return None;
        }
        for g in &self.groups {
            if g.iter().any(|&l| assignment[l] != assignment[g[0]]) {
                return None;
            }
        }
        Some(total)
    }

    /// Robots that can take group `g` whole without breaking the drop limit.
    fn admissible(&self, g: usize) -> Vec<RobotId> {
        let members = &self.groups[g];
        (0..self.n_robots())
            .filter(|&k| self.capacity[k] >= members.len())
            .filter(|&k| members.iter().all(|&l| self.cost[l][k] <= self.max_drop))
            .collect()
    }
}

/// Groups humans by the transitive closure of `pairs`, each group sorted,
/// groups ordered by their smallest member.
pub fn merge_pairs(n_humans: usize, pairs: &[(HumanId, HumanId)]) -> Vec<Vec<HumanId>> {
    let mut parent: Vec<usize> = (0..n_humans).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(a, b) in pairs {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut groups: Vec<Vec<HumanId>> = Vec::new();
    let mut slot = vec![usize::MAX; n_humans];
    for l in 0..n_humans {
        let r = find(&mut parent, l);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(l);
    }
    groups
}

pub fn build_costs(instance: &Instance, routes: &[Vec<PoiId>]) -> MatchingCosts {
    let visited: Vec<Vec<bool>> = routes
        .iter()
        .map(|r| {
            let mut v = vec![false; instance.n_pois];
            for &p in r {
                v[p] = true;
            }
            v
        })
        .collect();
    let cost = instance
        .humans
        .iter()
        .map(|h| {
            visited
                .iter()
                .map(|v| h.requests.iter().filter(|&&p| !v[p]).count())
                .collect()
        })
        .collect();
    MatchingCosts {
        cost,
        capacity: instance.robots.iter().map(|r| r.team_capacity).collect(),
        groups: merge_pairs(instance.n_humans(), &instance.human_pairs),
        max_drop: instance.max_drop_per_human,
    }
}

struct Relaxation {
    cost: usize,
    assignment: Vec<RobotId>,
}

/// Solves the flow relaxation with some groups pinned to a robot.
///
/// Costs are scaled so that among equal-cost optima the one with the
/// smallest sum of robot ids wins.
fn relax(costs: &MatchingCosts, allowed: &[Vec<RobotId>]) -> Option<Relaxation> {
    let (n_l, n_v) = (costs.n_humans(), costs.n_robots());
    let scale = (n_l * n_v + 1) as i64;
    let source = 0;
    let sink = 1 + n_l + n_v;
    let mut net = MinCostFlow::new(sink + 1);
    let mut arcs = Vec::new();
    for (g, members) in costs.groups.iter().enumerate() {
        for &l in members {
            net.add_arc(source, 1 + l, 1, 0);
            for &k in &allowed[g] {
                let c = costs.cost[l][k] as i64 * scale + k as i64;
                arcs.push((l, k, net.add_arc(1 + l, 1 + n_l + k, 1, c)));
            }
        }
    }
    for (k, &cap) in costs.capacity.iter().enumerate() {
        net.add_arc(1 + n_l + k, sink, cap as i64, 0);
    }
    let (flow, _) = net.solve(source, sink, n_l as i64);
    if flow < n_l as i64 {
        return None;
    }
    let mut assignment = vec![usize::MAX; n_l];
    for (l, k, arc) in arcs {
        if net.flow_on(arc) > 0 {
            assignment[l] = k;
        }
    }
    let cost = assignment.iter().enumerate().map(|(l, &k)| costs.cost[l][k]).sum();
    Some(Relaxation { cost, assignment })
}

/// Relaxations after which [`solve_matching`] stops branching and returns
/// its incumbent.
pub const DEFAULT_RELAXATION_LIMIT: usize = 2_000;

/// Minimum-cost assignment under capacity, pair and drop-limit constraints,
/// exact unless the default relaxation limit is reached.
pub fn solve_matching(costs: &MatchingCosts) -> Result<MatchingSolution, MatchingError> {
    solve_matching_with_limit(costs, DEFAULT_RELAXATION_LIMIT)
}

fn first_split(costs: &MatchingCosts, assignment: &[RobotId]) -> Option<usize> {
    costs
        .groups
        .iter()
        .position(|m| m.iter().any(|&l| assignment[l] != assignment[m[0]]))
}

/// Pins every split group to the robot, among those its members landed on,
/// where the group costs least, and re-solves until nothing is split.
fn dive(costs: &MatchingCosts, mut allowed: Vec<Vec<RobotId>>, mut rel: Relaxation, count: &mut usize) -> Option<Relaxation> {
    loop {
        let mut pinned = false;
        for (g, members) in costs.groups.iter().enumerate() {
            if members.iter().all(|&l| rel.assignment[l] == rel.assignment[members[0]]) {
                continue;
            }
            let k = members
                .iter()
                .map(|&l| rel.assignment[l])
                .min_by_key(|&k| (members.iter().map(|&l| costs.cost[l][k]).sum::<usize>(), k))
                .expect("groups are non-empty");
            allowed[g] = vec![k];
            pinned = true;
        }
        if !pinned {
            return Some(rel);
        }
        *count += 1;
        rel = relax(costs, &allowed)?;
    }
}

/// As [`solve_matching`] with an explicit relaxation budget. `optimal` in
/// the result tells whether the branching finished.
pub fn solve_matching_with_limit(costs: &MatchingCosts, limit: usize) -> Result<MatchingSolution, MatchingError> {
    let n_groups = costs.groups.len();
    let admissible: Vec<Vec<RobotId>> = (0..n_groups).map(|g| costs.admissible(g)).collect();
    if let Some(g) = admissible.iter().position(Vec::is_empty) {
        return Err(MatchingError::Infeasible {
            group: costs.groups[g].clone(),
            reason: "every robot is over capacity or exceeds the drop limit".into(),
        });
    }
    let total_capacity: usize = costs.capacity.iter().sum();
    if total_capacity < costs.n_humans() {
        return Err(MatchingError::Infeasible {
            group: costs.groups.last().cloned().unwrap_or_default(),
            reason: format!("total capacity {total_capacity} below {} humans", costs.n_humans()),
        });
    }

    let mut relaxations = 1;
    let mut best: Option<(usize, Vec<RobotId>)> = None;
    let Some(root) = relax(costs, &admissible) else {
        return Err(infeasible(costs));
    };
    let root_bound = root.cost;
    if first_split(costs, &root.assignment).is_some() {
        if let Some(rel) = dive(costs, admissible.clone(), root, &mut relaxations) {
            best = Some((rel.cost, rel.assignment));
        }
    } else {
        best = Some((root.cost, root.assignment));
    }

    // Depth-first over "group g on robot k" / "group g not on robot k".
    let mut stack = Vec::new();
    if best.as_ref().is_none_or(|(c, _)| *c > root_bound) {
        stack.push(admissible);
    }
    let mut finished = true;
    while let Some(allowed) = stack.pop() {
        if relaxations >= limit.max(1) {
            finished = false;
            break;
        }
        relaxations += 1;
        let Some(rel) = relax(costs, &allowed) else { continue };
        if best.as_ref().is_some_and(|(c, _)| rel.cost >= *c) {
            continue;
        }
        match first_split(costs, &rel.assignment) {
            None => {
                let done = rel.cost == root_bound;
                best = Some((rel.cost, rel.assignment));
                if done {
                    stack.clear();
                }
            }
            Some(g) => {
                let k = rel.assignment[costs.groups[g][0]];
                let mut without = allowed.clone();
                without[g].retain(|&r| r != k);
                let mut pinned = allowed;
                pinned[g] = vec![k];
                if !without[g].is_empty() {
                    stack.push(without);
                }
                stack.push(pinned);
            }
        }
    }

    match best {
        Some((total_cost, assignment)) => Ok(MatchingSolution {
            assignment,
            total_cost,
            relaxations,
            optimal: finished,
        }),
        None if finished => Err(infeasible(costs)),
        None => Err(MatchingError::Infeasible {
            group: Vec::new(),
            reason: format!("no assignment found within {limit} relaxations"),
        }),
    }
}

fn infeasible(costs: &MatchingCosts) -> MatchingError {
    MatchingError::Infeasible {
        group: costs
            .groups
            .iter()
            .max_by_key(|g| g.len())
            .cloned()
            .unwrap_or_default(),
        reason: "capacities cannot hold every group whole".into(),
    }
}
