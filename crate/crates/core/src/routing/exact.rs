//! Exact branch-and-bound over elementary routes.

use std::collections::HashMap;

use crate::model::{Mode, PoiId, TIME_TOLERANCE};

use super::compiled::Compiled;
use super::{
    check_mode, evaluate_route, objective_eps, route_better, schedule_route, RouteSolution, RoutingError,
    RoutingStats, RoutingSubproblem,
};

/// Largest candidate set the exact solver accepts by default.
pub const DEFAULT_EXACT_CAP: usize = 10;

/// Non-dominated labels kept per (visited set, last node).
const PARETO_CAP: usize = 8;

struct Incumbent {
    excess: usize,
    total: f64,
    route: Vec<usize>,
}

/// Depth-first search in lexicographic order with reachability bounds and
/// label dominance on (visited set, last node).
pub struct ExactSolver<'s, 'a> {
    sub: &'s RoutingSubproblem<'a>,
    mode: Mode,
    c: Compiled,
    sp: Vec<f64>,
    /// Per node and scenario: visit time plus the cheapest outgoing sampled travel.
    min_out: Vec<f64>,
    prereq_mask: Vec<u64>,
    memo: HashMap<(u64, usize), Vec<Vec<f64>>>,
    best: Option<Incumbent>,
    stats: RoutingStats,
}

impl<'s, 'a> ExactSolver<'s, 'a> {
    pub fn new(sub: &'s RoutingSubproblem<'a>, mode: Mode, cap: usize) -> Result<Self, RoutingError> {
        check_mode(sub, mode)?;
        let c = Compiled::new(sub, mode);
        let cap = cap.min(64);
        if c.m > cap {
            return Err(RoutingError::CapExceeded { candidates: c.m, cap });
        }
        let sp = c.shortest_paths();
        let ns = c.n_scenarios();
        let mut min_out = vec![0.0; c.nodes * ns];
        if let Some(s) = &c.scen {
            for a in 0..c.nodes {
                for i in 0..ns {
                    let cheapest = (0..c.nodes)
                        .filter(|&b| b != a && b != c.start())
                        .map(|b| s.travel[(a * c.nodes + b) * ns + i])
                        .fold(f64::INFINITY, f64::min);
                    min_out[a * ns + i] = s.visit[a * ns + i] + cheapest;
                }
            }
        }
        let prereq_mask = c.prereq.iter().map(|ps| ps.iter().fold(0u64, |m, &q| m | (1 << q))).collect();
        Ok(Self {
            sub,
            mode,
            c,
            sp,
            min_out,
            prereq_mask,
            memo: HashMap::new(),
            best: None,
            stats: RoutingStats::default(),
        })
    }

    /// Lower bound on the excess and objective of every route extending the
    /// state `(mask, last, t, scen)`, including closing it immediately.
    fn bound(&self, mask: u64, last: usize, t: f64, scen: &[f64]) -> (usize, f64) {
        let c = &self.c;
        let n = c.nodes;
        let u = c.terminal();
        let base = t + c.visit[last];
        let mut reach = mask;
        let mut served = 0u32;
        for q in 0..c.m {
            if mask >> q & 1 == 1 {
                served += c.demand[q];
                continue;
            }
            let arrival = (base + self.sp[last * n + q]).max(c.t_min[q]);
            if arrival <= c.t_max[q] + TIME_TOLERANCE
                && arrival + c.visit[q] + self.sp[q * n + u] <= c.limit + TIME_TOLERANCE
            {
                reach |= 1 << q;
                served += c.demand[q];
            }
        }
        let excess = c.excess(|q| reach >> q & 1 == 1);
        let time_lb = match self.mode {
            Mode::Deterministic => base + self.sp[last * n + u],
            Mode::Stochastic => {
                let ns = c.n_scenarios();
                let shifted: Vec<f64> = (0..ns).map(|i| scen[i] + self.min_out[last * ns + i]).collect();
                c.mean_overrun(&shifted)
            }
        };
        let dropped = c.total_demand - served;
        (excess, c.weight_drop * f64::from(dropped) + c.weight_time * time_lb)
    }

    fn dominated(&mut self, key: (u64, usize), label: &[f64]) -> bool {
        let list = self.memo.entry(key).or_default();
        if list.iter().any(|e| e.iter().zip(label).all(|(a, b)| a <= b)) {
            return true;
        }
        list.retain(|e| !label.iter().zip(e).all(|(a, b)| a <= b));
        if list.len() < PARETO_CAP {
            list.push(label.to_vec());
        }
        false
    }

    fn dfs(&mut self, mask: u64, last: usize, t: f64, route: &mut Vec<usize>, bufs: &mut [Vec<f64>]) {
        self.stats.nodes += 1;
        let (cur, rest) = bufs.split_first_mut().expect("one buffer per depth");
        let (lb_excess, lb_total) = self.bound(mask, last, t, cur);
        if let Some(b) = &self.best {
            if lb_excess > b.excess || (lb_excess == b.excess && lb_total > b.total + objective_eps(b.total)) {
                self.stats.pruned_by_bound += 1;
                return;
            }
        }

        let c = &self.c;
        let u = c.terminal();
        let terminal = c.step(t, last, u);
        let next = &mut rest[0];
        c.step_scenarios(cur, last, u, next);
        if c.within_limit(terminal, next) {
            let served: u32 = route.iter().map(|&q| c.demand[q]).sum();
            let total = c.objective(served, terminal, next).total;
            let excess = c.excess(|q| mask >> q & 1 == 1);
            let better = match &self.best {
                None => true,
                Some(b) => route_better((excess, total, route), (b.excess, b.total, &b.route)),
            };
            if better {
                self.stats.incumbent_updates += 1;
                self.best = Some(Incumbent {
                    excess,
                    total,
                    route: route.clone(),
                });
            }
        }

        let mut label = Vec::with_capacity(1 + self.c.n_scenarios());
        for q in 0..self.c.m {
            let c = &self.c;
            if mask >> q & 1 == 1 || self.prereq_mask[q] & !mask != 0 {
                continue;
            }
            let arrival = c.step(t, last, q);
            if arrival > c.t_max[q] + TIME_TOLERANCE
                || arrival + c.visit[q] + self.sp[q * c.nodes + u] > c.limit + TIME_TOLERANCE
            {
                continue;
            }
            let next = &mut rest[0];
            c.step_scenarios(cur, last, q, next);
            if c.strict && next.iter().any(|&x| x > c.limit + TIME_TOLERANCE) {
                continue;
            }
            let child = mask | 1 << q;
            label.clear();
            label.push(arrival);
            label.extend_from_slice(next);
            if self.dominated((child, q), &label) {
                self.stats.pruned_by_dominance += 1;
                continue;
            }
            route.push(q);
            self.dfs(child, q, arrival, route, rest);
            route.pop();
        }
    }

    /// Lower bound on the objective of any feasible route that starts with
    /// `prefix`, or `None` if the prefix itself cannot be extended feasibly.
    pub fn prefix_bound(&self, prefix: &[PoiId]) -> Option<f64> {
        let c = &self.c;
        let ns = c.n_scenarios();
        let mut cur = vec![0.0; ns];
        let mut next = vec![0.0; ns];
        let (mut mask, mut last, mut t) = (0u64, c.start(), 0.0);
        for &p in prefix {
            let q = c.pois.binary_search(&p).ok()?;
            if mask >> q & 1 == 1 || self.prereq_mask[q] & !mask != 0 {
                return None;
            }
            t = c.step(t, last, q);
            if t > c.t_max[q] + TIME_TOLERANCE {
                return None;
            }
            c.step_scenarios(&cur, last, q, &mut next);
            std::mem::swap(&mut cur, &mut next);
            mask |= 1 << q;
            last = q;
        }
        Some(self.bound(mask, last, t, &cur).1)
    }

    pub fn solve(mut self) -> Result<RouteSolution, RoutingError> {
        let depth = self.c.m + 2;
        let ns = self.c.n_scenarios();
        let mut bufs = vec![vec![0.0; ns]; depth];
        let mut route = Vec::with_capacity(self.c.m);
        self.dfs(0, self.c.start(), 0.0, &mut route, &mut bufs);
        let robot = self.sub.robot;
        let best = self.best.take().ok_or(RoutingError::NoFeasibleRoute { robot })?;
        let route = self.c.to_global(&best.route);
        let schedule = schedule_route(self.sub, &route).map_err(|_| RoutingError::NoFeasibleRoute { robot })?;
        let objective = evaluate_route(self.sub, self.mode, &route).map_err(|_| RoutingError::NoFeasibleRoute { robot })?;
        Ok(RouteSolution {
            max_drop_excess: self.sub.max_drop_excess(&route),
            route,
            schedule,
            objective,
            stats: self.stats,
        })
    }
}

/// Optimal route for `sub`, ties broken toward shorter then lexicographically
/// smaller routes.
pub fn solve_routing_exact(sub: &RoutingSubproblem<'_>, mode: Mode, cap: usize) -> Result<RouteSolution, RoutingError> {
    ExactSolver::new(sub, mode, cap)?.solve()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TimeWindow;
    use crate::routing::test_support::planar;

    #[test]
    fn serves_everything_when_time_allows() {
        let inst = planar(&[(10.0, 0.0), (10.0, 10.0), (0.0, 10.0)], 1.0, 1000.0, vec![vec![0, 1, 2]]);
        let sub = RoutingSubproblem::new(&inst, None, 0, &[0]);
        let sol = solve_routing_exact(&sub, Mode::Deterministic, DEFAULT_EXACT_CAP).unwrap();
        assert_eq!(sol.objective.dropped_demand, 0);
        assert!((sol.objective.terminal_time - 43.0).abs() < 1e-9);
        // Both directions around the square cost the same; the smaller wins.
        assert_eq!(sol.route, vec![0, 1, 2]);
    }

    #[test]
    fn drops_what_does_not_fit() {
        let inst = planar(&[(10.0, 0.0), (100.0, 0.0)], 0.0, 50.0, vec![vec![0, 1]]);
        let sub = RoutingSubproblem::new(&inst, None, 0, &[0]);
        let sol = solve_routing_exact(&sub, Mode::Deterministic, DEFAULT_EXACT_CAP).unwrap();
        assert_eq!(sol.route, vec![0]);
        assert_eq!(sol.objective.dropped_demand, 1);
    }

    #[test]
    fn waits_for_window_and_respects_order() {
        let mut inst = planar(&[(10.0, 0.0), (20.0, 0.0)], 0.0, 1000.0, vec![vec![0, 1]]);
        inst.time_windows.insert(0, TimeWindow { t_min: 50.0, t_max: 60.0 });
        inst.sequence_deps = vec![(1, 0)];
        let sub = RoutingSubproblem::new(&inst, None, 0, &[0]);
        let sol = solve_routing_exact(&sub, Mode::Deterministic, DEFAULT_EXACT_CAP).unwrap();
        assert_eq!(sol.route, vec![1, 0]);
        assert_eq!(sol.schedule, vec![0.0, 20.0, 50.0, 60.0]);
    }

    #[test]
    fn cap_is_enforced() {
        let pts: Vec<(f64, f64)> = (0..5).map(|i| (i as f64, 1.0)).collect();
        let inst = planar(&pts, 0.0, 1000.0, vec![(0..5).collect()]);
        let sub = RoutingSubproblem::new(&inst, None, 0, &[0]);
        assert_eq!(
            solve_routing_exact(&sub, Mode::Deterministic, 3).unwrap_err(),
            RoutingError::CapExceeded { candidates: 5, cap: 3 }
        );
    }

    #[test]
    fn empty_route_over_limit_is_infeasible() {
        let mut inst = planar(&[(10.0, 0.0)], 0.0, 1000.0, vec![vec![0]]);
        inst.robots[0].tour_time_limit = -1.0;
        let sub = RoutingSubproblem::new(&inst, None, 0, &[0]);
        assert_eq!(
            solve_routing_exact(&sub, Mode::Deterministic, 5).unwrap_err(),
            RoutingError::NoFeasibleRoute { robot: 0 }
        );
    }

    #[test]
    fn stochastic_needs_samples() {
        let inst = planar(&[(10.0, 0.0)], 0.0, 1000.0, vec![vec![0]]);
        let sub = RoutingSubproblem::new(&inst, None, 0, &[0]);
        assert_eq!(
            solve_routing_exact(&sub, Mode::Stochastic, 5).unwrap_err(),
            RoutingError::MissingSamples
        );
    }
}
