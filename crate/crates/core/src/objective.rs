//! Objective evaluation for complete plans.

use thiserror::Error;

use crate::model::{
    scenario_terminal_times, Instance, Mode, ObjectiveBreakdown, Plan, PlanError, SamplesError, TimeSamples,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Samples(#[from] SamplesError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DropReport {
    pub total: usize,
    pub per_human: Vec<usize>,
}

/// Requested POIs that the assigned robot's route does not visit.
pub fn dropped_requests(instance: &Instance, plan: &Plan) -> Result<DropReport, PlanError> {
    plan.validate_structure(instance)?;
    let mut visited = vec![vec![false; instance.n_pois]; instance.n_robots()];
    for (k, route) in plan.routes.iter().enumerate() {
        for &p in route {
            visited[k][p] = true;
        }
    }
    let per_human: Vec<usize> = instance
        .humans
        .iter()
        .zip(&plan.assignment)
        .map(|(h, &k)| h.requests.iter().filter(|&&p| !visited[k][p]).count())
        .collect();
    Ok(DropReport {
        total: per_human.iter().sum(),
        per_human,
    })
}

/// Mean of `[t - threshold]^+` over scenarios.
pub fn expected_overrun(times: &[f64], threshold: f64) -> f64 {
    if times.is_empty() {
        return 0.0;
    }
    times.iter().map(|t| (t - threshold).max(0.0)).sum::<f64>() / times.len() as f64
}

pub fn evaluate_deterministic(instance: &Instance, plan: &Plan) -> Result<ObjectiveBreakdown, PlanError> {
    let drops = dropped_requests(instance, plan)?;
    let time_term: f64 = (0..instance.n_robots()).map(|k| plan.terminal_time(k)).sum();
    Ok(ObjectiveBreakdown {
        mode: Mode::Deterministic,
        dropped_requests: drops.total,
        time_term,
        saa_penalty: 0.0,
        weighted_total: instance.weight_drop * drops.total as f64 + instance.weight_time * time_term,
    })
}

/// Sample-average objective: the time term is replaced by the mean overrun
/// of each robot's sampled terminal time past its penalty threshold.
pub fn evaluate_stochastic(
    instance: &Instance,
    samples: &TimeSamples,
    plan: &Plan,
) -> Result<ObjectiveBreakdown, EvalError> {
    let drops = dropped_requests(instance, plan)?;
    samples.validate(instance)?;
    let windows = instance.window_table();
    let mut saa_penalty = 0.0;
    let mut time_term = 0.0;
    for (k, route) in plan.routes.iter().enumerate() {
        let times = scenario_terminal_times(instance, &windows, samples, k, route);
        saa_penalty += expected_overrun(&times, instance.robots[k].penalty_threshold());
        time_term += plan.terminal_time(k);
    }
    Ok(ObjectiveBreakdown {
        mode: Mode::Stochastic,
        dropped_requests: drops.total,
        time_term,
        saa_penalty,
        weighted_total: instance.weight_drop * drops.total as f64 + instance.weight_time * saa_penalty,
    })
}

pub fn evaluate(
    instance: &Instance,
    samples: Option<&TimeSamples>,
    plan: &Plan,
    mode: Mode,
) -> Result<ObjectiveBreakdown, EvalError> {
    match (mode, samples) {
        (Mode::Deterministic, _) => Ok(evaluate_deterministic(instance, plan)?),
        (Mode::Stochastic, Some(s)) => evaluate_stochastic(instance, s, plan),
        (Mode::Stochastic, None) => Err(SamplesError::NoScenarios.into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{HumanSpec, RobotSpec, TravelMatrix};
    use std::collections::BTreeMap;

    fn one_robot(requests: Vec<usize>) -> Instance {
        // POI 0 ten seconds from the depot in each direction.
        let pos: [f64; _] = [10.0, 30.0, 50.0, 0.0, 0.0];
        Instance {
            n_pois: 3,
            robots: vec![RobotSpec {
                tour_time_limit: 500.0,
                team_capacity: 4,
                penalty_margin: 50.0,
            }],
            humans: vec![HumanSpec { requests }],
            travel_time: vec![TravelMatrix::from_fn(5, |i, j| (pos[i] - pos[j]).abs())],
            visit_time: vec![vec![5.0; 3]],
            time_windows: BTreeMap::new(),
            sequence_deps: vec![],
            human_pairs: vec![],
            weight_drop: 1000.0,
            weight_time: 1.0,
            max_drop_per_human: 3,
            big_time: 1e6,
            coordinates: None,
        }
    }

    #[test]
    fn dropped_counts() {
        let inst = one_robot(vec![1, 2]);
        let plan = Plan::from_routes(&inst, vec![0], vec![vec![1, 2, 0]]);
        assert_eq!(dropped_requests(&inst, &plan).unwrap().total, 0);

        let inst = one_robot(vec![0, 1, 2]);
        let plan = Plan::from_routes(&inst, vec![0], vec![vec![1]]);
        let report = dropped_requests(&inst, &plan).unwrap();
        assert_eq!(report.total, 2);
        assert_eq!(report.per_human, vec![2]);
    }

    #[test]
    fn deterministic_hand_summed_chain() {
        let inst = one_robot(vec![0]);
        let plan = Plan::from_routes(&inst, vec![0], vec![vec![0]]);
        let obj = evaluate_deterministic(&inst, &plan).unwrap();
        assert_eq!(obj.dropped_requests, 0);
        assert_eq!(obj.time_term, 25.0);
        assert_eq!(obj.weighted_total, 25.0);
    }

    #[test]
    fn deterministic_zero_when_nothing_requested() {
        let inst = one_robot(vec![]);
        let plan = Plan::from_routes(&inst, vec![0], vec![vec![]]);
        assert_eq!(evaluate_deterministic(&inst, &plan).unwrap().weighted_total, 0.0);
    }

    #[test]
    fn saa_penalty_averages_positive_parts() {
        // Two scenarios ending at alpha + 4 and alpha - 2.
        let inst = one_robot(vec![0]);
        let alpha = inst.robots[0].penalty_threshold();
        let mut samples = TimeSamples::nominal(&inst);
        samples.n_scenarios = 2;
        samples.travel[0] = samples.travel[0].iter().flat_map(|&t| [t, t]).collect();
        samples.visit[0] = samples.visit[0].iter().flat_map(|&t| [t, t]).collect();
        let n = inst.n_nodes();
        let s_u = (inst.start() * n + inst.terminal()) * 2;
        samples.travel[0][s_u] = alpha + 4.0;
        samples.travel[0][s_u + 1] = alpha - 2.0;
        let plan = Plan::from_routes(&inst, vec![0], vec![vec![]]);
        let obj = evaluate_stochastic(&inst, &samples, &plan).unwrap();
        assert!((obj.saa_penalty - 2.0).abs() < 1e-12);
        assert!((obj.weighted_total - (1000.0 + 2.0)).abs() < 1e-9);
    }

    #[test]
    fn saa_penalty_zero_before_threshold() {
        let inst = one_robot(vec![0, 1]);
        let samples = TimeSamples::nominal(&inst);
        let plan = Plan::from_routes(&inst, vec![0], vec![vec![0, 1]]);
        let obj = evaluate_stochastic(&inst, &samples, &plan).unwrap();
        assert_eq!(obj.saa_penalty, 0.0);
        assert_eq!(obj.dropped_requests, 0);
    }

    #[test]
    fn empty_samples_are_rejected() {
        let inst = one_robot(vec![0]);
        let mut samples = TimeSamples::nominal(&inst);
        samples.n_scenarios = 0;
        let plan = Plan::from_routes(&inst, vec![0], vec![vec![]]);
        assert_eq!(
            evaluate_stochastic(&inst, &samples, &plan),
            Err(EvalError::Samples(SamplesError::NoScenarios))
        );
    }

    #[test]
    fn malformed_plan_is_rejected_by_both_evaluators() {
        let inst = one_robot(vec![0]);
        let plan = Plan {
            assignment: vec![],
            routes: vec![vec![]],
            schedule: vec![vec![0.0, 0.0]],
        };
        assert!(evaluate_deterministic(&inst, &plan).is_err());
        assert!(evaluate_stochastic(&inst, &TimeSamples::nominal(&inst), &plan).is_err());
    }
}
