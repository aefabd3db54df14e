use smrp::generator::{generate_instance, GeneratorConfig};
use smrp::lns::{lns_solve, LnsConfig};
use smrp::model::{Instance, Plan};
use smrp::simulator::{simulate, summarize, Inflation, SimConfig};

fn solved(seed: u64) -> (Instance, Plan) {
    let inst = generate_instance(&GeneratorConfig { seed, ..GeneratorConfig::default() }).unwrap();
    let plan = lns_solve(&inst, None, &LnsConfig { seed, ..LnsConfig::default() }).unwrap().plan;
    (inst, plan)
}

#[test]
fn summary_reaggregates_from_trace() {
    let (inst, plan) = solved(1);
    let cfg = SimConfig { trials: 300, seed: 7, ..SimConfig::default() };
    let sim = simulate(&inst, &plan, &cfg).unwrap();
    assert_eq!(summarize(&inst, &plan, &cfg, &sim.trace).unwrap(), sim.summary);

    let n = sim.trace.trials.len() as f64;
    let mut active = Vec::new();
    for k in 0..inst.n_robots() {
        let mean = sim.trace.trials.iter().map(|t| t[k].terminal).sum::<f64>() / n;
        let p = sim.trace.trials.iter().filter(|t| t[k].terminal > inst.robots[k].tour_time_limit + 1e-6).count() as f64 / n;
        let r = &sim.summary.robots[k];
        assert!((r.mean_terminal - mean).abs() <= 1e-9 * mean.max(1.0));
        assert_eq!(r.overrun_probability, p);
        if !plan.routes[k].is_empty() {
            active.push(p);
        }
    }
    if !active.is_empty() {
        let mean_p = active.iter().sum::<f64>() / active.len() as f64;
        assert!((sim.summary.overrun_probability - mean_p).abs() < 1e-12);
    }
}

#[test]
fn trial_means_shrink_like_inverse_root_n() {
    let (inst, plan) = solved(2);
    let k = (0..inst.n_robots()).max_by_key(|&k| plan.routes[k].len()).unwrap();
    assert!(!plan.routes[k].is_empty());
    let spread = |trials: usize| {
        let means: Vec<f64> = (0..40)
            .map(|seed| {
                let s = simulate(&inst, &plan, &SimConfig { trials, seed, ..SimConfig::default() }).unwrap();
                s.summary.robots[k].mean_terminal
            })
            .collect();
        let m = means.iter().sum::<f64>() / means.len() as f64;
        (means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (means.len() - 1) as f64).sqrt()
    };
    let (small, large) = (spread(25), spread(400));
    // Sixteen times the trials should cut the spread about four times.
    let ratio = small / large;
    assert!((2.5..6.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn lower_rates_never_shorten_a_trial() {
    let (inst, plan) = solved(3);
    let run = |rate: f64| {
        simulate(&inst, &plan, &SimConfig { correct_action_rate: rate, trials: 100, seed: 5, ..SimConfig::default() }).unwrap()
    };
    let rates = [1.0, 0.9, 0.75, 0.5];
    let sims: Vec<_> = rates.iter().map(|&r| run(r)).collect();
    for w in sims.windows(2) {
        for (a, b) in w[0].trace.trials.iter().zip(&w[1].trace.trials) {
            for (x, y) in a.iter().zip(b) {
                assert!(y.terminal >= x.terminal - 1e-9);
            }
        }
        assert!(w[1].summary.overrun_probability >= w[0].summary.overrun_probability);
    }
}

#[test]
fn inflation_table_interpolates() {
    let t = Inflation::Table(vec![(0.5, 2.0), (1.0, 1.0)]);
    assert_eq!(t.multiplier(1.0), 1.0);
    assert_eq!(t.multiplier(0.75), 1.5);
    assert_eq!(t.multiplier(0.2), 2.0);
    assert_eq!(Inflation::Reciprocal.multiplier(0.5), 2.0);
}

#[test]
fn zero_trials_is_rejected() {
    let (inst, plan) = solved(4);
    assert!(simulate(&inst, &plan, &SimConfig { trials: 0, ..SimConfig::default() }).is_err());
}
