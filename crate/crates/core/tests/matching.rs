use proptest::prelude::*;
use smrp::matching::{merge_pairs, solve_matching, MatchingCosts, UNBOUNDED_DROP};
use smrp_testkit::matching_by_enumeration;

fn costs_strategy() -> impl Strategy<Value = MatchingCosts> {
    (1usize..=8, 1usize..=4).prop_flat_map(|(n_l, n_v)| {
        (
            prop::collection::vec(prop::collection::vec(0usize..6, n_v), n_l),
            prop::collection::vec(1usize..=4, n_v),
            prop::collection::vec((0..n_l, 0..n_l), 0..=3),
            prop_oneof![Just(UNBOUNDED_DROP), 0usize..5],
        )
            .prop_map(move |(cost, capacity, pairs, max_drop)| {
                let pairs: Vec<_> = pairs.into_iter().filter(|(a, b)| a != b).collect();
                MatchingCosts {
                    cost,
                    capacity,
                    groups: merge_pairs(n_l, &pairs),
                    max_drop,
                }
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn flow_matches_enumeration(costs in costs_strategy()) {
        let expected = matching_by_enumeration(&costs);
        match solve_matching(&costs) {
            Ok(sol) => {
                prop_assert_eq!(Some(sol.total_cost), expected);
                prop_assert_eq!(costs.assignment_cost(&sol.assignment), Some(sol.total_cost));
            }
            Err(_) => prop_assert_eq!(expected, None),
        }
    }

    #[test]
    fn groups_partition_humans(n in 1usize..12, pairs in prop::collection::vec((0usize..12, 0usize..12), 0..6)) {
        let pairs: Vec<_> = pairs.into_iter().filter(|&(a, b)| a < n && b < n && a != b).collect();
        let groups = merge_pairs(n, &pairs);
        let mut all: Vec<usize> = groups.iter().flatten().copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        for &(a, b) in &pairs {
            prop_assert!(groups.iter().any(|g| g.contains(&a) && g.contains(&b)));
        }
    }
}

#[test]
fn pair_forces_shared_robot_at_extra_cost() {
    // Alone, human 0 prefers robot 0 and human 1 robot 1; paired they share.
    let costs = MatchingCosts {
        cost: vec![vec![0, 3], vec![2, 0]],
        capacity: vec![2, 2],
        groups: vec![vec![0, 1]],
        max_drop: UNBOUNDED_DROP,
    };
    let sol = solve_matching(&costs).unwrap();
    assert_eq!(sol.total_cost, 2);
    assert_eq!(sol.assignment, vec![0, 0]);
}

#[test]
fn drop_limit_can_make_matching_infeasible() {
    let costs = MatchingCosts {
        cost: vec![vec![3, 3]],
        capacity: vec![1, 1],
        groups: vec![vec![0]],
        max_drop: 2,
    };
    assert!(solve_matching(&costs).is_err());
    assert_eq!(matching_by_enumeration(&costs), None);
}
