//! Insertion construction followed by first-improvement local search.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{Mode, PoiId, TIME_TOLERANCE};

use super::compiled::Compiled;
use super::{
    check_mode, evaluate_route, route_better, schedule_route, RouteSolution, RoutingError, RoutingStats,
    RoutingSubproblem,
};

#[derive(Debug, Clone, Copy)]
enum Move {
    Insert { q: usize, at: usize },
    Drop { at: usize },
    SwapOut { at: usize, q: usize },
    TwoOpt { i: usize, j: usize },
    OrOpt { from: usize, len: usize, to: usize },
}

/// Service times along a route: slot 0 is the start, slot `i + 1` is
/// `route[i]`, the last slot is the terminal.
#[derive(Clone, Default)]
struct Times {
    nominal: Vec<f64>,
    scen: Vec<f64>,
}

#[derive(Clone, Copy, PartialEq)]
struct Score {
    excess: usize,
    total: f64,
    terminal: f64,
}

struct Search<'c> {
    c: &'c Compiled,
    ns: usize,
    /// Transitive prerequisites of each candidate, in dependency order.
    closure: Vec<Vec<usize>>,
    route: Vec<usize>,
    times: Times,
    score: Score,
    scratch: Times,
    pos: Vec<usize>,
    stats: RoutingStats,
}

impl<'c> Search<'c> {
    fn new(c: &'c Compiled) -> Self {
        let closure = (0..c.m).map(|q| prerequisite_closure(c, q)).collect();
        Self {
            c,
            ns: c.n_scenarios(),
            closure,
            route: Vec::new(),
            times: Times::default(),
            score: Score {
                excess: usize::MAX,
                total: f64::INFINITY,
                terminal: f64::INFINITY,
            },
            scratch: Times::default(),
            pos: vec![usize::MAX; c.m],
            stats: RoutingStats::default(),
        }
    }

    /// Evaluates `route` into `scratch`, reusing the first `keep` route
    /// positions of the current times.
    fn evaluate(&mut self, route: &[usize], keep: usize) -> Option<Score> {
        let c = self.c;
        let ns = self.ns;
        let keep = keep.min(self.route.len()).min(route.len());
        self.pos.iter_mut().for_each(|p| *p = usize::MAX);
        for (i, &q) in route.iter().enumerate() {
            if self.pos[q] != usize::MAX {
                return None;
            }
            self.pos[q] = i;
        }
        for (i, &q) in route.iter().enumerate() {
            if c.prereq[q].iter().any(|&p| self.pos[p] >= i) {
                return None;
            }
        }

        let slots = route.len() + 2;
        let reuse = if self.times.nominal.is_empty() { 1 } else { keep + 1 };
        self.scratch.nominal.clear();
        self.scratch.scen.clear();
        if self.times.nominal.is_empty() {
            self.scratch.nominal.push(0.0);
            self.scratch.scen.resize(ns, 0.0);
        } else {
            self.scratch.nominal.extend_from_slice(&self.times.nominal[..reuse]);
            self.scratch.scen.extend_from_slice(&self.times.scen[..reuse * ns]);
        }
        self.scratch.nominal.resize(slots, 0.0);
        self.scratch.scen.resize(slots * ns, 0.0);

        let node = |slot: usize| -> usize {
            if slot == 0 {
                c.start()
            } else if slot == slots - 1 {
                c.terminal()
            } else {
                route[slot - 1]
            }
        };
        for slot in reuse..slots {
            let (from, to) = (node(slot - 1), node(slot));
            let t = c.step(self.scratch.nominal[slot - 1], from, to);
            if to < c.m && t > c.t_max[to] + TIME_TOLERANCE {
                return None;
            }
            self.scratch.nominal[slot] = t;
            if ns > 0 {
                let (head, tail) = self.scratch.scen.split_at_mut(slot * ns);
                c.step_scenarios(&head[(slot - 1) * ns..], from, to, &mut tail[..ns]);
            }
        }
        let terminal = self.scratch.nominal[slots - 1];
        let scen_terminal = &self.scratch.scen[(slots - 1) * ns..];
        if !c.within_limit(terminal, scen_terminal) {
            return None;
        }
        let served: u32 = route.iter().map(|&q| c.demand[q]).sum();
        let total = c.objective(served, terminal, scen_terminal).total;
        let pos = &self.pos;
        let excess = c.excess(|q| pos[q] != usize::MAX);
        Some(Score { excess, total, terminal })
    }

    fn better(&self, a: Score, ra: &[usize], b: Score, rb: &[usize]) -> bool {
        route_better((a.excess, a.total, ra), (b.excess, b.total, rb))
    }

    /// Replaces the current route if `cand` scores better.
    fn try_accept(&mut self, cand: Vec<usize>, keep: usize) -> bool {
        self.stats.moves_evaluated += 1;
        let Some(score) = self.evaluate(&cand, keep) else { return false };
        if self.times.nominal.is_empty() || self.better(score, &cand, self.score, &self.route) {
            self.route = cand;
            self.score = score;
            std::mem::swap(&mut self.times, &mut self.scratch);
            return true;
        }
        false
    }

    fn set_route(&mut self, route: Vec<usize>) -> bool {
        self.times.nominal.clear();
        match self.evaluate(&route, 0) {
            Some(score) => {
                self.route = route;
                self.score = score;
                std::mem::swap(&mut self.times, &mut self.scratch);
                true
            }
            None => false,
        }
    }

    /// Route with `q` and its missing prerequisites inserted as a block at `at`.
    fn with_bundle(&self, q: usize, at: usize) -> Option<Vec<usize>> {
        let in_route = |p: usize| self.route.contains(&p);
        let mut block: Vec<usize> = self.closure[q].iter().copied().filter(|&p| !in_route(p)).collect();
        block.push(q);
        // Prerequisites already routed must come before the block.
        if self.closure[q]
            .iter()
            .any(|&p| self.route.iter().position(|&r| r == p).is_some_and(|i| i >= at))
        {
            return None;
        }
        let mut r = Vec::with_capacity(self.route.len() + block.len());
        r.extend_from_slice(&self.route[..at]);
        r.extend_from_slice(&block);
        r.extend_from_slice(&self.route[at..]);
        Some(r)
    }

    /// Greedy insertion: repeatedly add the bundle with the best objective gain
    /// per unit of added nominal time.
    fn construct(&mut self) {
        loop {
            let mut best: Option<(usize, f64, Vec<usize>, Score)> = None;
            for q in 0..self.c.m {
                if self.route.contains(&q) || self.c.demand[q] == 0 {
                    continue;
                }
                for at in 0..=self.route.len() {
                    let Some(cand) = self.with_bundle(q, at) else { continue };
                    self.stats.moves_evaluated += 1;
                    let Some(s) = self.evaluate(&cand, at) else { continue };
                    let excess_gain = self.score.excess.saturating_sub(s.excess);
                    if s.excess > self.score.excess {
                        continue;
                    }
                    let gain = self.score.total - s.total;
                    if excess_gain == 0 && gain <= super::objective_eps(self.score.total) {
                        continue;
                    }
                    let ratio = gain / ((s.terminal - self.score.terminal).max(0.0) + 1.0);
                    let take = match &best {
                        None => true,
                        Some((be, br, _, _)) => excess_gain > *be || (excess_gain == *be && ratio > *br),
                    };
                    if take {
                        best = Some((excess_gain, ratio, cand, s));
                    }
                }
            }
            let Some((_, _, cand, _)) = best else { break };
            let keep = first_difference(&self.route, &cand);
            if !self.try_accept(cand, keep) {
                break;
            }
            self.stats.moves_accepted += 1;
        }
    }

    fn moves(&self) -> Vec<Move> {
        let n = self.route.len();
        let mut out = Vec::new();
        for q in 0..self.c.m {
            if self.c.demand[q] > 0 && !self.route.contains(&q) {
                out.extend((0..=n).map(|at| Move::Insert { q, at }));
                out.extend((0..n).map(|at| Move::SwapOut { at, q }));
            }
        }
        out.extend((0..n).map(|at| Move::Drop { at }));
        for i in 0..n {
            for j in i + 1..n {
                out.push(Move::TwoOpt { i, j });
            }
        }
        for len in 1..=3.min(n) {
            for from in 0..=n - len {
                for to in 0..=n - len {
                    if to != from {
                        out.push(Move::OrOpt { from, len, to });
                    }
                }
            }
        }
        out
    }

    fn apply(&self, mv: Move) -> Option<(Vec<usize>, usize)> {
        let r = &self.route;
        match mv {
            Move::Insert { q, at } => self.with_bundle(q, at).map(|v| (v, at)),
            Move::Drop { at } => {
                let mut gone = vec![false; self.c.m];
                gone[r[at]] = true;
                for &q in &r[at + 1..] {
                    if self.c.prereq[q].iter().any(|&p| gone[p]) {
                        gone[q] = true;
                    }
                }
                Some((r.iter().copied().filter(|&q| !gone[q]).collect(), at))
            }
            Move::SwapOut { at, q } => {
                let mut v = r.clone();
                v[at] = q;
                Some((v, at))
            }
            Move::TwoOpt { i, j } => {
                let mut v = r.clone();
                v[i..=j].reverse();
                Some((v, i))
            }
            Move::OrOpt { from, len, to } => {
                let mut v = r.clone();
                let seg: Vec<usize> = v.drain(from..from + len).collect();
                v.splice(to..to, seg);
                Some((v, from.min(to)))
            }
        }
    }

    fn local_search(&mut self, budget: usize, rng: &mut ChaCha8Rng) {
        while (self.stats.moves_accepted as usize) < budget {
            let mut moves = self.moves();
            moves.shuffle(rng);
            let mut improved = false;
            for mv in moves {
                let Some((cand, keep)) = self.apply(mv) else { continue };
                if self.try_accept(cand, keep) {
                    self.stats.moves_accepted += 1;
                    improved = true;
                    break;
                }
            }
            if !improved {
                break;
            }
        }
    }
}

fn first_difference(a: &[usize], b: &[usize]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

/// Transitive prerequisites of `q`, each listed after its own prerequisites.
fn prerequisite_closure(c: &Compiled, q: usize) -> Vec<usize> {
    fn visit(c: &Compiled, q: usize, seen: &mut [bool], out: &mut Vec<usize>) {
        for &p in &c.prereq[q] {
            if !std::mem::replace(&mut seen[p], true) {
                visit(c, p, seen, out);
                out.push(p);
            }
        }
    }
    let mut seen = vec![false; c.m];
    let mut out = Vec::new();
    visit(c, q, &mut seen, &mut out);
    out
}

/// Heuristic route for `sub`.
///
/// `budget` caps the number of accepted improving moves. A feasible
/// `warm_start` seeds the search; the result is never worse than the warm
/// start or the empty route.
pub fn solve_routing_heuristic(
    sub: &RoutingSubproblem<'_>,
    mode: Mode,
    budget: usize,
    seed: u64,
    warm_start: Option<&[PoiId]>,
) -> Result<RouteSolution, RoutingError> {
    check_mode(sub, mode)?;
    let robot = sub.robot;
    let c = Compiled::new(sub, mode);
    let mut search = Search::new(&c);
    if !search.set_route(Vec::new()) {
        return Err(RoutingError::NoFeasibleRoute { robot });
    }
    let empty = (search.score, Vec::new());

    let mut warm: Option<(Score, Vec<usize>)> = None;
    if let Some(ws) = warm_start {
        let mut local: Vec<usize> = ws.iter().filter_map(|p| c.pois.binary_search(p).ok()).collect();
        while !local.is_empty() && !search.set_route(local.clone()) {
            local.pop();
        }
        if !local.is_empty() {
            warm = Some((search.score, local));
        } else {
            search.set_route(Vec::new());
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if warm.is_none() {
        search.construct();
    }
    search.local_search(budget, &mut rng);

    let mut best = (search.score, search.route.clone());
    for alt in warm.into_iter().chain(std::iter::once(empty)) {
        if search.better(alt.0, &alt.1, best.0, &best.1) {
            best = alt;
        }
    }
    let route = c.to_global(&best.1);
    let schedule = schedule_route(sub, &route).map_err(|_| RoutingError::NoFeasibleRoute { robot })?;
    let objective = evaluate_route(sub, mode, &route).map_err(|_| RoutingError::NoFeasibleRoute { robot })?;
    Ok(RouteSolution {
        max_drop_excess: sub.max_drop_excess(&route),
        route,
        schedule,
        objective,
        stats: search.stats,
    })
}
