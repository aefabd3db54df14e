use proptest::prelude::*;
use smrp::generator::{generate_samples, SampleConfig};
use smrp::model::{Mode, TimeSamples};
use smrp::routing::{
    evaluate_route, schedule_route, solve_routing_exact, solve_routing_heuristic, ExactSolver, RoutingSubproblem,
};
use smrp_testkit::{all_routes, best_route, candidate_pois, close, close_all, replay_schedule, route_cost, route_feasible, small_instance};

fn samples_for(inst: &smrp::model::Instance, seed: u64) -> TimeSamples {
    generate_samples(
        inst,
        &SampleConfig {
            sigma_rel: 0.3,
            n_scenarios: 6,
            seed,
        },
    )
    .unwrap()
}

fn check_exact(seed: u64, n_humans: usize, mode: Mode) -> Result<(), TestCaseError> {
    let inst = small_instance(seed, 1, n_humans, 6);
    let samples = samples_for(&inst, seed);
    let team: Vec<usize> = (0..n_humans).collect();
    let sub = RoutingSubproblem::new(&inst, Some(&samples), 0, &team);
    // Undemanded POIs can only help when sampled times break the triangle inequality.
    let universe = match mode {
        Mode::Deterministic => (0..inst.n_pois).collect(),
        Mode::Stochastic => candidate_pois(&inst, &team),
    };
    let (e, c, _) = best_route(&inst, Some(&samples), mode, 0, &team, &universe).expect("empty route is feasible");
    let sol = solve_routing_exact(&sub, mode, 10).unwrap();
    prop_assert_eq!(sol.max_drop_excess, e);
    prop_assert!(close(sol.objective.total, c), "exact {} vs enumeration {}", sol.objective.total, c);
    prop_assert!(route_feasible(&inst, 0, &sol.route));
    prop_assert!(close_all(&sol.schedule, &replay_schedule(&inst, 0, &sol.route)));
    prop_assert!(close(route_cost(&inst, Some(&samples), mode, 0, &team, &sol.route), sol.objective.total));

    let heur = solve_routing_heuristic(&sub, mode, 200, seed, None).unwrap();
    prop_assert!(route_feasible(&inst, 0, &heur.route));
    prop_assert!(
        heur.max_drop_excess > e || (heur.max_drop_excess == e && heur.objective.total >= c - 1e-9 * c.abs().max(1.0))
    );
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn exact_routing_matches_enumeration_deterministic(seed in any::<u64>(), n_humans in 1usize..=3) {
        check_exact(seed, n_humans, Mode::Deterministic)?;
    }

    #[test]
    fn exact_routing_matches_enumeration_stochastic(seed in any::<u64>(), n_humans in 1usize..=3) {
        check_exact(seed, n_humans, Mode::Stochastic)?;
    }

    #[test]
    fn prefix_bound_never_exceeds_completions(seed in any::<u64>(), stochastic in any::<bool>()) {
        let mode = if stochastic { Mode::Stochastic } else { Mode::Deterministic };
        let inst = small_instance(seed, 1, 2, 5);
        let samples = samples_for(&inst, seed);
        let team = [0, 1];
        let sub = RoutingSubproblem::new(&inst, Some(&samples), 0, &team);
        let solver = ExactSolver::new(&sub, mode, 10).unwrap();
        for route in all_routes(&sub.candidates()) {
            let Ok(obj) = evaluate_route(&sub, mode, &route) else { continue };
            for cut in 0..=route.len() {
                let bound = solver.prefix_bound(&route[..cut]);
                prop_assert!(bound.is_some(), "feasible prefix {:?} rejected", &route[..cut]);
                prop_assert!(bound.unwrap() <= obj.total + 1e-9 * obj.total.abs().max(1.0));
            }
        }
    }

    #[test]
    fn schedule_route_agrees_with_replay(seed in any::<u64>()) {
        let inst = small_instance(seed, 1, 2, 4);
        let sub = RoutingSubproblem::new(&inst, None, 0, &[0, 1]);
        for route in all_routes(&(0..inst.n_pois).collect::<Vec<_>>()) {
            match schedule_route(&sub, &route) {
                Ok(s) => {
                    prop_assert!(route_feasible(&inst, 0, &route));
                    prop_assert!(close_all(&s, &replay_schedule(&inst, 0, &route)));
                }
                Err(_) => prop_assert!(!route_feasible(&inst, 0, &route)),
            }
        }
    }
}
