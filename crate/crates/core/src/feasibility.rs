//! Constraint checking for complete plans.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{HumanId, Instance, Plan, PlanError, PoiId, RobotId, TIME_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintFamily {
    /// Successive service times disagree with the nominal forward pass.
    ScheduleConsistency,
    TimeLimit,
    TimeWindow,
    /// A POI is visited without its prerequisite.
    SequenceVisit,
    /// A prerequisite is served after the POI that depends on it.
    SequenceOrder,
    TeamCapacity,
    MaxDrop,
    HumanPair,
}

impl fmt::Display for ConstraintFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ConstraintFamily::ScheduleConsistency => "schedule_consistency",
            ConstraintFamily::TimeLimit => "time_limit",
            ConstraintFamily::TimeWindow => "time_window",
            ConstraintFamily::SequenceVisit => "sequence_visit",
            ConstraintFamily::SequenceOrder => "sequence_order",
            ConstraintFamily::TeamCapacity => "team_capacity",
            ConstraintFamily::MaxDrop => "max_drop",
            ConstraintFamily::HumanPair => "human_pair",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub family: ConstraintFamily,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub robot: Option<RobotId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub human: Option<HumanId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub poi: Option<PoiId>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.family)?;
        if let Some(k) = self.robot {
            write!(f, " robot={k}")?;
        }
        if let Some(l) = self.human {
            write!(f, " human={l}")?;
        }
        if let Some(p) = self.poi {
            write!(f, " poi={p}")?;
        }
        write!(f, ": {}", self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, family: ConstraintFamily) -> usize {
        self.violations.iter().filter(|v| v.family == family).count()
    }

    /// Same report without violations of `family`.
    pub fn without(&self, family: ConstraintFamily) -> FeasibilityReport {
        FeasibilityReport {
            violations: self.violations.iter().filter(|v| v.family != family).cloned().collect(),
        }
    }
}

/// Checks every constraint family of the model against `plan`.
///
/// Structural defects (unknown ids, duplicate POIs, mis-sized schedules) are
/// returned as `Err`; constraint violations are collected in the report.
pub fn check_feasibility(instance: &Instance, plan: &Plan) -> Result<FeasibilityReport, PlanError> {
    plan.validate_structure(instance)?;
    let windows = instance.window_table();
    let mut out = Vec::new();
    let mut push = |family, robot, human, poi, detail: String| {
        out.push(Violation {
            family,
            robot,
            human,
            poi,
            detail,
        })
    };

    for (k, route) in plan.routes.iter().enumerate() {
        let sched = &plan.schedule[k];
        let nodes: Vec<usize> = std::iter::once(instance.start())
            .chain(route.iter().copied())
            .chain(std::iter::once(instance.terminal()))
            .collect();

        if sched[0] < -TIME_TOLERANCE {
            push(
                ConstraintFamily::ScheduleConsistency,
                Some(k),
                None,
                None,
                format!("start time {} is negative", sched[0]),
            );
        }
        for idx in 1..nodes.len() {
            let (prev, node) = (nodes[idx - 1], nodes[idx]);
            let mut expected = sched[idx - 1] + instance.visit(k, prev) + instance.travel(k, prev, node);
            if let Some(Some(w)) = windows.get(node) {
                expected = expected.max(w.t_min);
            }
            if (sched[idx] - expected).abs() > TIME_TOLERANCE {
                let poi = (node < instance.n_pois).then_some(node);
                push(
                    ConstraintFamily::ScheduleConsistency,
                    Some(k),
                    None,
                    poi,
                    format!("time {} at step {idx}, forward pass gives {expected}", sched[idx]),
                );
                break;
            }
        }

        let limit = instance.robots[k].tour_time_limit;
        let terminal = sched[sched.len() - 1];
        if terminal > limit + TIME_TOLERANCE {
            push(
                ConstraintFamily::TimeLimit,
                Some(k),
                None,
                None,
                format!("terminal time {terminal} exceeds limit {limit}"),
            );
        }

        let mut position = vec![None; instance.n_pois];
        for (idx, &p) in route.iter().enumerate() {
            position[p] = Some(idx + 1);
            if let Some(w) = windows[p] {
                let t = sched[idx + 1];
                if t < w.t_min - TIME_TOLERANCE || t > w.t_max + TIME_TOLERANCE {
                    push(
                        ConstraintFamily::TimeWindow,
                        Some(k),
                        None,
                        Some(p),
                        format!("service at {t} outside [{}, {}]", w.t_min, w.t_max),
                    );
                }
            }
        }
        for &(i, j) in &instance.sequence_deps {
            let Some(pj) = position[j] else { continue };
            match position[i] {
                None => push(
                    ConstraintFamily::SequenceVisit,
                    Some(k),
                    None,
                    Some(j),
                    format!("POI {j} visited without prerequisite {i}"),
                ),
                Some(pi) if sched[pi] > sched[pj] + TIME_TOLERANCE => push(
                    ConstraintFamily::SequenceOrder,
                    Some(k),
                    None,
                    Some(j),
                    format!("prerequisite {i} served at {} after POI {j} at {}", sched[pi], sched[pj]),
                ),
                Some(_) => {}
            }
        }
    }

    let mut load = vec![0usize; instance.n_robots()];
    for &k in &plan.assignment {
        load[k] += 1;
    }
    for (k, &n) in load.iter().enumerate() {
        let cap = instance.robots[k].team_capacity;
        if n > cap {
            push(
                ConstraintFamily::TeamCapacity,
                Some(k),
                None,
                None,
                format!("team of {n} exceeds capacity {cap}"),
            );
        }
    }

    let visited: Vec<Vec<bool>> = plan
        .routes
        .iter()
        .map(|r| {
            let mut v = vec![false; instance.n_pois];
            r.iter().for_each(|&p| v[p] = true);
            v
        })
        .collect();
    for (l, h) in instance.humans.iter().enumerate() {
        let k = plan.assignment[l];
        let dropped = h.requests.iter().filter(|&&p| !visited[k][p]).count();
        if dropped > instance.max_drop_per_human {
            push(
                ConstraintFamily::MaxDrop,
                Some(k),
                Some(l),
                None,
                format!("{dropped} dropped requests exceed {}", instance.max_drop_per_human),
            );
        }
    }

    for &(a, b) in &instance.human_pairs {
        if plan.assignment[a] != plan.assignment[b] {
            push(
                ConstraintFamily::HumanPair,
                None,
                Some(a),
                None,
                format!(
                    "paired with human {b} but assigned to robot {} vs {}",
                    plan.assignment[a], plan.assignment[b]
                ),
            );
        }
    }

    Ok(FeasibilityReport { violations: out })
}
