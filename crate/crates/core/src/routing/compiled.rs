//! Dense local view of a routing subproblem over its candidate POIs.
//!
//! Local node ids: candidates are `0..m` in ascending POI order, the start is
//! `m` and the terminal is `m + 1`.

use crate::model::{Mode, PoiId, TIME_TOLERANCE};

use super::{LimitPolicy, RouteObjective, RoutingSubproblem};

pub(crate) struct Scenarios {
    pub n: usize,
    /// `((from * nodes) + to) * n + scenario`
    pub travel: Vec<f64>,
    /// `node * n + scenario`, zero rows for start and terminal.
    pub visit: Vec<f64>,
}

pub(crate) struct Compiled {
    pub pois: Vec<PoiId>,
    pub m: usize,
    pub nodes: usize,
    pub travel: Vec<f64>,
    pub visit: Vec<f64>,
    pub t_min: Vec<f64>,
    pub t_max: Vec<f64>,
    pub prereq: Vec<Vec<usize>>,
    pub demand: Vec<u32>,
    pub total_demand: u32,
    /// Local request lists of each team member.
    pub members: Vec<Vec<usize>>,
    pub max_drop: Option<usize>,
    pub scen: Option<Scenarios>,
    pub limit: f64,
    pub threshold: f64,
    pub weight_drop: f64,
    pub weight_time: f64,
    pub strict: bool,
    pub mode: Mode,
}

impl Compiled {
    pub fn new(sub: &RoutingSubproblem<'_>, mode: Mode) -> Self {
        let inst = sub.instance;
        let k = sub.robot;
        let pois = sub.candidates();
        let m = pois.len();
        let nodes = m + 2;
        let mut local_of = vec![usize::MAX; inst.n_pois];
        for (c, &p) in pois.iter().enumerate() {
            local_of[p] = c;
        }
        let global = |c: usize| -> usize {
            if c < m {
                pois[c]
            } else if c == m {
                inst.start()
            } else {
                inst.terminal()
            }
        };
        let mut travel = vec![0.0; nodes * nodes];
        for a in 0..nodes {
            for b in 0..nodes {
                travel[a * nodes + b] = inst.travel(k, global(a), global(b));
            }
        }
        let visit = (0..nodes).map(|c| inst.visit(k, global(c))).collect();
        let t_min = pois
            .iter()
            .map(|&p| sub.windows[p].map_or(f64::NEG_INFINITY, |w| w.t_min))
            .collect();
        let t_max = pois
            .iter()
            .map(|&p| sub.windows[p].map_or(f64::INFINITY, |w| w.t_max))
            .collect();
        let prereq = pois
            .iter()
            .map(|&p| sub.prerequisites[p].iter().map(|&i| local_of[i]).collect())
            .collect();
        let demand: Vec<u32> = pois.iter().map(|&p| sub.demand[p]).collect();
        let members = sub
            .team_requests
            .iter()
            .map(|reqs| reqs.iter().map(|&p| local_of[p]).collect())
            .collect();
        let scen = sub.samples.map(|s| {
            let n = s.n_scenarios;
            let mut tr = Vec::with_capacity(nodes * nodes * n);
            for a in 0..nodes {
                for b in 0..nodes {
                    tr.extend_from_slice(s.travel_row(k, global(a), global(b)));
                }
            }
            let mut vi = Vec::with_capacity(nodes * n);
            for c in 0..nodes {
                match s.visit_row(k, global(c)) {
                    Some(row) => vi.extend_from_slice(row),
                    None => vi.extend(std::iter::repeat_n(0.0, n)),
                }
            }
            Scenarios { n, travel: tr, visit: vi }
        });
        Self {
            pois,
            m,
            nodes,
            travel,
            visit,
            t_min,
            t_max,
            prereq,
            total_demand: demand.iter().sum(),
            demand,
            members,
            max_drop: sub.max_drop,
            // Scenario times are only tracked when something reads them.
            scen: if mode == Mode::Stochastic || sub.limit_policy == LimitPolicy::AllScenarios {
                scen
            } else {
                None
            },
            limit: sub.tour_time_limit,
            threshold: sub.penalty_threshold,
            weight_drop: sub.weight_drop,
            weight_time: sub.weight_time,
            strict: sub.limit_policy == LimitPolicy::AllScenarios,
            mode,
        }
    }

    #[inline]
    pub fn start(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn terminal(&self) -> usize {
        self.m + 1
    }

    #[inline]
    pub fn travel(&self, a: usize, b: usize) -> f64 {
        self.travel[a * self.nodes + b]
    }

    /// Nominal service start at `to` after serving `from` starting at `t`.
    #[inline]
    pub fn step(&self, t: f64, from: usize, to: usize) -> f64 {
        let a = t + self.visit[from] + self.travel(from, to);
        if to < self.m {
            a.max(self.t_min[to])
        } else {
            a
        }
    }

    /// Per-scenario version of [`Compiled::step`], writing into `out`.
    #[inline]
    pub fn step_scenarios(&self, times: &[f64], from: usize, to: usize, out: &mut [f64]) {
        let Some(s) = &self.scen else { return };
        let n = s.n;
        let tr = &s.travel[(from * self.nodes + to) * n..][..n];
        let vi = &s.visit[from * n..][..n];
        let floor = if to < self.m { self.t_min[to] } else { f64::NEG_INFINITY };
        for i in 0..n {
            out[i] = (times[i] + vi[i] + tr[i]).max(floor);
        }
    }

    pub fn n_scenarios(&self) -> usize {
        self.scen.as_ref().map_or(0, |s| s.n)
    }

    pub fn mean_overrun(&self, times: &[f64]) -> f64 {
        if times.is_empty() {
            return 0.0;
        }
        times.iter().map(|t| (t - self.threshold).max(0.0)).sum::<f64>() / times.len() as f64
    }

    /// Objective of a closed route given its nominal and scenario terminal times.
    pub fn objective(&self, served: u32, terminal: f64, scen_terminal: &[f64]) -> RouteObjective {
        let dropped_demand = self.total_demand - served;
        let saa_penalty = self.mean_overrun(scen_terminal);
        let time_value = match self.mode {
            Mode::Deterministic => terminal,
            Mode::Stochastic => saa_penalty,
        };
        RouteObjective {
            dropped_demand,
            terminal_time: terminal,
            saa_penalty,
            total: self.weight_drop * f64::from(dropped_demand) + self.weight_time * time_value,
        }
    }

    /// Whether terminal times respect the limit under the active policy.
    pub fn within_limit(&self, terminal: f64, scen_terminal: &[f64]) -> bool {
        terminal <= self.limit + TIME_TOLERANCE
            && (!self.strict || scen_terminal.iter().all(|&t| t <= self.limit + TIME_TOLERANCE))
    }

    /// Summed drop-limit excess given a per-local-node "served" predicate.
    pub fn excess(&self, served: impl Fn(usize) -> bool) -> usize {
        let Some(limit) = self.max_drop else { return 0 };
        self.members
            .iter()
            .map(|reqs| reqs.iter().filter(|&&c| !served(c)).count().saturating_sub(limit))
            .sum()
    }

    pub fn to_global(&self, local: &[usize]) -> Vec<PoiId> {
        local.iter().map(|&c| self.pois[c]).collect()
    }

    /// All-pairs shortest walk times between local nodes, counting visit
    /// times at intermediate candidates but not at the endpoints' own visit.
    ///
    /// `sp[a][b]` lower-bounds the time from finishing service at `a` to
    /// arriving at `b` along any route through candidates.
    pub fn shortest_paths(&self) -> Vec<f64> {
        let n = self.nodes;
        let mut d = self.travel.clone();
        for c in 0..self.m {
            let via = self.visit[c];
            for a in 0..n {
                let ac = d[a * n + c];
                if !ac.is_finite() {
                    continue;
                }
                for b in 0..n {
                    let cand = ac + via + d[c * n + b];
                    if cand < d[a * n + b] {
                        d[a * n + b] = cand;
                    }
                }
            }
        }
        d
    }
}
