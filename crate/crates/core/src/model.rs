//! Problem and solution data types.
//!
//! Node numbering follows the tour graph: POIs are `0..n_pois`, the start
//! node is `n_pois` and the terminal node is `n_pois + 1`. Start and terminal
//! are always distinct ids, even when they share a physical location.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute slack applied to every time comparison, in seconds.
pub const TIME_TOLERANCE: f64 = 1e-6;

pub type PoiId = usize;
pub type RobotId = usize;
pub type HumanId = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("instance has no robots")]
    NoRobots,
    #[error("{what} has length {found}, expected {expected}")]
    Dimension {
        what: String,
        expected: usize,
        found: usize,
    },
    #[error("negative or non-finite time in {what}")]
    InvalidTime { what: String },
    #[error("robot {robot}: {reason}")]
    InvalidRobot { robot: RobotId, reason: String },
    #[error("human {human} requests unknown or duplicate POI {poi}")]
    InvalidRequest { human: HumanId, poi: PoiId },
    #[error("time window on POI {poi} is invalid")]
    InvalidWindow { poi: PoiId },
    #[error("sequence dependency ({0}, {1}) references an unknown POI or is a self-loop")]
    InvalidDependency(PoiId, PoiId),
    #[error("sequence dependencies contain a cycle through POI {0}")]
    CyclicDependencies(PoiId),
    #[error("human pair ({0}, {1}) references an unknown human")]
    InvalidPair(HumanId, HumanId),
    #[error("big_time {big_time} must exceed every tour time limit (max {max_limit})")]
    BigTimeTooSmall { big_time: f64, max_limit: f64 },
    #[error("weights must be finite and non-negative")]
    InvalidWeights,
}

/// A square matrix of nominal travel times, stored row-major.
///
/// Serialized as a nested array `[[t_00, t_01, ...], ...]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct TravelMatrix {
    n: usize,
    data: Vec<f64>,
}

impl TravelMatrix {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.n + j] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

impl TryFrom<Vec<Vec<f64>>> for TravelMatrix {
    type Error = String;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self, Self::Error> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(format!("travel matrix row {i} has {} entries, expected {n}", row.len()));
            }
            data.extend(row);
        }
        Ok(Self { n, data })
    }
}

impl From<TravelMatrix> for Vec<Vec<f64>> {
    fn from(m: TravelMatrix) -> Self {
        m.data.chunks(m.n.max(1)).take(m.n).map(<[f64]>::to_vec).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotSpec {
    pub tour_time_limit: f64,
    pub team_capacity: usize,
    pub penalty_margin: f64,
}

impl RobotSpec {
    /// Terminal time above which the expected-overrun penalty applies.
    #[inline]
    pub fn penalty_threshold(&self) -> f64 {
        self.tour_time_limit - self.penalty_margin
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HumanSpec {
    pub requests: Vec<PoiId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub t_min: f64,
    pub t_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub n_pois: usize,
    pub robots: Vec<RobotSpec>,
    pub humans: Vec<HumanSpec>,
    /// One matrix per robot over all `n_pois + 2` nodes.
    pub travel_time: Vec<TravelMatrix>,
    /// One row per robot over the POIs.
    pub visit_time: Vec<Vec<f64>>,
    /// Serialized as a list of `{poi, t_min, t_max}` entries.
    #[serde(default, with = "window_list")]
    pub time_windows: BTreeMap<PoiId, TimeWindow>,
    /// `(i, j)`: POI `i` is a prerequisite of POI `j`.
    #[serde(default)]
    pub sequence_deps: Vec<(PoiId, PoiId)>,
    #[serde(default)]
    pub human_pairs: Vec<(HumanId, HumanId)>,
    pub weight_drop: f64,
    pub weight_time: f64,
    pub max_drop_per_human: usize,
    pub big_time: f64,
    /// Planar node positions, carried for plotting only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coordinates: Option<Vec<[f64; 2]>>,
}

mod window_list {
    use super::{PoiId, TimeWindow};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::collections::BTreeMap;

    #[derive(Serialize, Deserialize)]
    struct Entry {
        poi: PoiId,
        t_min: f64,
        t_max: f64,
    }

    pub fn serialize<S: Serializer>(map: &BTreeMap<PoiId, TimeWindow>, s: S) -> Result<S::Ok, S::Error> {
        let entries: Vec<Entry> = map
            .iter()
            .map(|(&poi, w)| Entry {
                poi,
                t_min: w.t_min,
                t_max: w.t_max,
            })
            .collect();
        entries.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<PoiId, TimeWindow>, D::Error> {
        let entries = Vec::<Entry>::deserialize(d)?;
        let mut map = BTreeMap::new();
        for e in entries {
            let w = TimeWindow {
                t_min: e.t_min,
                t_max: e.t_max,
            };
            if map.insert(e.poi, w).is_some() {
                return Err(serde::de::Error::custom(format!("duplicate time window for POI {}", e.poi)));
            }
        }
        Ok(map)
    }
}

impl Instance {
    #[inline]
    pub fn n_robots(&self) -> usize {
        self.robots.len()
    }

    #[inline]
    pub fn n_humans(&self) -> usize {
        self.humans.len()
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.n_pois + 2
    }

    #[inline]
    pub fn start(&self) -> usize {
        self.n_pois
    }

    #[inline]
    pub fn terminal(&self) -> usize {
        self.n_pois + 1
    }

    #[inline]
    pub fn travel(&self, robot: RobotId, from: usize, to: usize) -> f64 {
        self.travel_time[robot].get(from, to)
    }

    /// Visit time at any node; zero at start and terminal.
    #[inline]
    pub fn visit(&self, robot: RobotId, node: usize) -> f64 {
        if node < self.n_pois {
            self.visit_time[robot][node]
        } else {
            0.0
        }
    }

    pub fn total_requests(&self) -> usize {
        self.humans.iter().map(|h| h.requests.len()).sum()
    }

    /// Time windows as a dense per-POI table.
    pub fn window_table(&self) -> Vec<Option<TimeWindow>> {
        let mut table = vec![None; self.n_pois];
        for (&poi, &w) in &self.time_windows {
            if poi < self.n_pois {
                table[poi] = Some(w);
            }
        }
        table
    }

    /// Direct prerequisites of each POI.
    pub fn prerequisites(&self) -> Vec<Vec<PoiId>> {
        let mut pre = vec![Vec::new(); self.n_pois];
        for &(i, j) in &self.sequence_deps {
            if j < self.n_pois && !pre[j].contains(&i) {
                pre[j].push(i);
            }
        }
        for p in &mut pre {
            p.sort_unstable();
        }
        pre
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let n_nodes = self.n_nodes();
        if self.robots.is_empty() {
            return Err(ModelError::NoRobots);
        }
        let dim = |what: &str, expected, found| -> Result<(), ModelError> {
            if expected != found {
                Err(ModelError::Dimension {
                    what: what.to_string(),
                    expected,
                    found,
                })
            } else {
                Ok(())
            }
        };
        dim("travel_time", self.n_robots(), self.travel_time.len())?;
        dim("visit_time", self.n_robots(), self.visit_time.len())?;
        for k in 0..self.n_robots() {
            dim(&format!("travel_time[{k}]"), n_nodes, self.travel_time[k].size())?;
            dim(&format!("visit_time[{k}]"), self.n_pois, self.visit_time[k].len())?;
            if self.travel_time[k].as_slice().iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
                return Err(ModelError::InvalidTime {
                    what: format!("travel_time[{k}]"),
                });
            }
            if self.visit_time[k].iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
                return Err(ModelError::InvalidTime {
                    what: format!("visit_time[{k}]"),
                });
            }
        }
        if let Some(coords) = &self.coordinates {
            dim("coordinates", n_nodes, coords.len())?;
        }
        for (k, r) in self.robots.iter().enumerate() {
            let bad = |reason: &str| ModelError::InvalidRobot {
                robot: k,
                reason: reason.to_string(),
            };
            if !(r.tour_time_limit.is_finite() && r.tour_time_limit > 0.0) {
                return Err(bad("tour_time_limit must be positive"));
            }
            if r.team_capacity < 1 {
                return Err(bad("team_capacity must be at least 1"));
            }
            if !(r.penalty_margin >= 0.0 && r.penalty_margin <= r.tour_time_limit) {
                return Err(bad("penalty_margin must lie in [0, tour_time_limit]"));
            }
        }
        for (l, h) in self.humans.iter().enumerate() {
            for (idx, &p) in h.requests.iter().enumerate() {
                if p >= self.n_pois || h.requests[..idx].contains(&p) {
                    return Err(ModelError::InvalidRequest { human: l, poi: p });
                }
            }
        }
        for (&poi, w) in &self.time_windows {
            if poi >= self.n_pois || !(w.t_min.is_finite() && w.t_max.is_finite()) || w.t_min > w.t_max {
                return Err(ModelError::InvalidWindow { poi });
            }
        }
        for &(i, j) in &self.sequence_deps {
            if i >= self.n_pois || j >= self.n_pois || i == j {
                return Err(ModelError::InvalidDependency(i, j));
            }
        }
        if let Some(p) = find_cycle(self.n_pois, &self.sequence_deps) {
            return Err(ModelError::CyclicDependencies(p));
        }
        for &(a, b) in &self.human_pairs {
            if a >= self.n_humans() || b >= self.n_humans() {
                return Err(ModelError::InvalidPair(a, b));
            }
        }
        let max_limit = self.robots.iter().map(|r| r.tour_time_limit).fold(0.0, f64::max);
        if !(self.big_time > max_limit) {
            return Err(ModelError::BigTimeTooSmall {
                big_time: self.big_time,
                max_limit,
            });
        }
        let ok = |w: f64| w.is_finite() && w >= 0.0;
        if !ok(self.weight_drop) || !ok(self.weight_time) {
            return Err(ModelError::InvalidWeights);
        }
        Ok(())
    }
}

/// Returns a node on a cycle of the directed relation, if any.
fn find_cycle(n: usize, edges: &[(usize, usize)]) -> Option<usize> {
    let mut adj = vec![Vec::new(); n];
    let mut indeg = vec![0usize; n];
    for &(i, j) in edges {
        adj[i].push(j);
        indeg[j] += 1;
    }
    let mut queue: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut seen = 0;
    while let Some(v) = queue.pop() {
        seen += 1;
        for &w in &adj[v] {
            indeg[w] -= 1;
            if indeg[w] == 0 {
                queue.push(w);
            }
        }
    }
    if seen == n {
        None
    } else {
        (0..n).find(|&v| indeg[v] > 0)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplesError {
    #[error("time samples contain no scenarios")]
    NoScenarios,
    #[error("time samples do not match the instance: {0}")]
    Shape(String),
    #[error("time samples contain a negative or non-finite value")]
    InvalidValue,
}

/// Sampled travel and visit times, one value per scenario.
///
/// `travel[k]` is flat and row-major over `(from, to, scenario)` for all
/// `n_pois + 2` nodes; `visit[k]` is flat over `(poi, scenario)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSamples {
    pub n_scenarios: usize,
    pub travel: Vec<Vec<f64>>,
    pub visit: Vec<Vec<f64>>,
}

impl TimeSamples {
    /// One scenario equal to the nominal times of `instance`.
    pub fn nominal(instance: &Instance) -> Self {
        let n = instance.n_nodes();
        let travel = (0..instance.n_robots())
            .map(|k| instance.travel_time[k].as_slice().to_vec())
            .collect();
        let visit = instance.visit_time.clone();
        debug_assert!(instance.travel_time.iter().all(|m| m.size() == n));
        Self {
            n_scenarios: 1,
            travel,
            visit,
        }
    }

    #[inline]
    fn n_nodes(&self, robot: RobotId) -> usize {
        let s = self.n_scenarios.max(1);
        self.visit[robot].len() / s + 2
    }

    /// All scenario values of the travel time on edge `(from, to)`.
    #[inline]
    pub fn travel_row(&self, robot: RobotId, from: usize, to: usize) -> &[f64] {
        let s = self.n_scenarios;
        let n = self.n_nodes(robot);
        let base = (from * n + to) * s;
        &self.travel[robot][base..base + s]
    }

    /// All scenario values of the visit time at `node`; `None` for start and terminal.
    #[inline]
    pub fn visit_row(&self, robot: RobotId, node: usize) -> Option<&[f64]> {
        let s = self.n_scenarios;
        let n_pois = self.n_nodes(robot) - 2;
        (node < n_pois).then(|| &self.visit[robot][node * s..(node + 1) * s])
    }

    pub fn validate(&self, instance: &Instance) -> Result<(), SamplesError> {
        if self.n_scenarios == 0 {
            return Err(SamplesError::NoScenarios);
        }
        let n = instance.n_nodes();
        let s = self.n_scenarios;
        if self.travel.len() != instance.n_robots() || self.visit.len() != instance.n_robots() {
            return Err(SamplesError::Shape("robot count".into()));
        }
        for k in 0..instance.n_robots() {
            if self.travel[k].len() != n * n * s {
                return Err(SamplesError::Shape(format!("travel[{k}] length")));
            }
            if self.visit[k].len() != instance.n_pois * s {
                return Err(SamplesError::Shape(format!("visit[{k}] length")));
            }
        }
        let valid = |v: &f64| v.is_finite() && *v >= 0.0;
        if !self.travel.iter().flatten().all(valid) || !self.visit.iter().flatten().all(valid) {
            return Err(SamplesError::InvalidValue);
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlanError {
    #[error("plan assigns {found} humans, instance has {expected}")]
    AssignmentLength { expected: usize, found: usize },
    #[error("plan has {found} routes, instance has {expected} robots")]
    RouteCount { expected: usize, found: usize },
    #[error("human {human} is assigned to unknown robot {robot}")]
    UnknownRobot { human: HumanId, robot: RobotId },
    #[error("route of robot {robot} contains unknown POI {poi}")]
    UnknownPoi { robot: RobotId, poi: PoiId },
    #[error("route of robot {robot} visits POI {poi} more than once")]
    DuplicatePoi { robot: RobotId, poi: PoiId },
    #[error("schedule of robot {robot} has {found} entries, expected {expected}")]
    ScheduleLength {
        robot: RobotId,
        expected: usize,
        found: usize,
    },
}

/// A solved matching and routing.
///
/// `schedule[k]` lists the nominal service start time at every node of the
/// walk `start, routes[k][0], ..., terminal`, so it has `routes[k].len() + 2`
/// entries. Service starts at the later of arrival and the window opening.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub assignment: Vec<RobotId>,
    pub routes: Vec<Vec<PoiId>>,
    pub schedule: Vec<Vec<f64>>,
}

impl Plan {
    /// Builds a plan whose schedules are the nominal forward pass of each route.
    pub fn from_routes(instance: &Instance, assignment: Vec<RobotId>, routes: Vec<Vec<PoiId>>) -> Self {
        let windows = instance.window_table();
        let schedule = routes
            .iter()
            .enumerate()
            .map(|(k, r)| nominal_schedule(instance, &windows, k, r))
            .collect();
        Self {
            assignment,
            routes,
            schedule,
        }
    }

    pub fn validate_structure(&self, instance: &Instance) -> Result<(), PlanError> {
        if self.assignment.len() != instance.n_humans() {
            return Err(PlanError::AssignmentLength {
                expected: instance.n_humans(),
                found: self.assignment.len(),
            });
        }
        if self.routes.len() != instance.n_robots() {
            return Err(PlanError::RouteCount {
                expected: instance.n_robots(),
                found: self.routes.len(),
            });
        }
        if self.schedule.len() != instance.n_robots() {
            return Err(PlanError::RouteCount {
                expected: instance.n_robots(),
                found: self.schedule.len(),
            });
        }
        for (l, &k) in self.assignment.iter().enumerate() {
            if k >= instance.n_robots() {
                return Err(PlanError::UnknownRobot { human: l, robot: k });
            }
        }
        for (k, route) in self.routes.iter().enumerate() {
            let mut seen = vec![false; instance.n_pois];
            for &p in route {
                if p >= instance.n_pois {
                    return Err(PlanError::UnknownPoi { robot: k, poi: p });
                }
                if std::mem::replace(&mut seen[p], true) {
                    return Err(PlanError::DuplicatePoi { robot: k, poi: p });
                }
            }
            if self.schedule[k].len() != route.len() + 2 {
                return Err(PlanError::ScheduleLength {
                    robot: k,
                    expected: route.len() + 2,
                    found: self.schedule[k].len(),
                });
            }
        }
        Ok(())
    }

    /// Members of each robot's team, in human id order.
    pub fn teams(&self, n_robots: usize) -> Vec<Vec<HumanId>> {
        let mut teams = vec![Vec::new(); n_robots];
        for (l, &k) in self.assignment.iter().enumerate() {
            if k < n_robots {
                teams[k].push(l);
            }
        }
        teams
    }

    /// Nominal terminal time of robot `k`.
    pub fn terminal_time(&self, robot: RobotId) -> f64 {
        *self.schedule[robot].last().unwrap_or(&0.0)
    }
}

/// Forward pass over `start, route..., terminal` with nominal times.
///
/// No constraint is checked here; arrival before a window opening waits
/// until `t_min`.
pub fn nominal_schedule(
    instance: &Instance,
    windows: &[Option<TimeWindow>],
    robot: RobotId,
    route: &[PoiId],
) -> Vec<f64> {
    let mut out = Vec::with_capacity(route.len() + 2);
    let mut t = 0.0;
    let mut prev = instance.start();
    out.push(t);
    for &p in route.iter().chain(std::iter::once(&instance.terminal())) {
        t += instance.visit(robot, prev) + instance.travel(robot, prev, p);
        if let Some(Some(w)) = windows.get(p) {
            t = t.max(w.t_min);
        }
        out.push(t);
        prev = p;
    }
    out
}

/// Terminal time of `route` in every scenario, waiting at window openings.
pub fn scenario_terminal_times(
    instance: &Instance,
    windows: &[Option<TimeWindow>],
    samples: &TimeSamples,
    robot: RobotId,
    route: &[PoiId],
) -> Vec<f64> {
    let mut times = vec![0.0; samples.n_scenarios];
    let mut prev = instance.start();
    for &p in route.iter().chain(std::iter::once(&instance.terminal())) {
        let travel = samples.travel_row(robot, prev, p);
        match samples.visit_row(robot, prev) {
            Some(visit) => {
                for ((t, v), d) in times.iter_mut().zip(visit).zip(travel) {
                    *t += v + d;
                }
            }
            None => {
                for (t, d) in times.iter_mut().zip(travel) {
                    *t += d;
                }
            }
        }
        if let Some(Some(w)) = windows.get(p) {
            for t in &mut times {
                *t = t.max(w.t_min);
            }
        }
        prev = p;
    }
    times
}

/// Deterministic or sample-average objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Deterministic,
    Stochastic,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Deterministic => f.write_str("deterministic"),
            Mode::Stochastic => f.write_str("stochastic"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBreakdown {
    pub mode: Mode,
    pub dropped_requests: usize,
    /// Sum of nominal terminal times over robots.
    pub time_term: f64,
    /// Sample-average expected overrun past the penalty threshold, summed over robots.
    pub saa_penalty: f64,
    pub weighted_total: f64,
}
