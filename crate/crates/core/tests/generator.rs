use smrp::generator::{generate_instance, generate_samples, GeneratorConfig, SampleConfig};

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}

#[test]
fn sample_moments_converge_to_nominal() {
    let inst = generate_instance(&GeneratorConfig {
        n_robots: 2,
        n_humans: 2,
        n_pois: 3,
        seed: 21,
        ..GeneratorConfig::default()
    })
    .unwrap();
    let sigma = 0.3;
    let s = generate_samples(&inst, &SampleConfig { sigma_rel: sigma, n_scenarios: 10_000, seed: 3 }).unwrap();
    let n = inst.n_nodes();
    for k in 0..inst.n_robots() {
        for i in 0..n {
            for j in 0..n {
                let nominal = inst.travel(k, i, j);
                if nominal <= 0.0 {
                    continue;
                }
                let (m, sd) = mean_sd(s.travel_row(k, i, j));
                assert!((m - nominal).abs() <= 0.02 * nominal, "travel {i}->{j}: mean {m} vs {nominal}");
                assert!((sd - sigma * nominal).abs() <= 0.05 * sigma * nominal, "travel {i}->{j}: sd {sd}");
            }
        }
        for p in 0..inst.n_pois {
            let nominal = inst.visit(k, p);
            let (m, sd) = mean_sd(s.visit_row(k, p).unwrap());
            assert!((m - nominal).abs() <= 0.02 * nominal, "visit {p}: mean {m} vs {nominal}");
            assert!((sd - sigma * nominal).abs() <= 0.05 * sigma * nominal, "visit {p}: sd {sd}");
        }
    }
}

#[test]
fn samples_are_never_negative() {
    let inst = generate_instance(&GeneratorConfig::default()).unwrap();
    let s = generate_samples(&inst, &SampleConfig { sigma_rel: 2.0, n_scenarios: 50, seed: 1 }).unwrap();
    assert!(s.travel.iter().chain(&s.visit).flatten().all(|&t| t >= 0.0));
}

#[test]
fn request_rate_matches_probability() {
    let cfg = GeneratorConfig {
        n_humans: 200,
        n_pois: 50,
        request_probability: 0.3,
        seed: 8,
        ..GeneratorConfig::default()
    };
    let inst = generate_instance(&cfg).unwrap();
    let rate = inst.total_requests() as f64 / (200.0 * 50.0);
    assert!((rate - 0.3).abs() < 0.02, "{rate}");
}

#[test]
fn travel_times_obey_the_triangle_inequality() {
    for seed in 0..5 {
        let inst = generate_instance(&GeneratorConfig { seed, ..GeneratorConfig::default() }).unwrap();
        let n = inst.n_nodes();
        for i in 0..n {
            for j in 0..n {
                for m in 0..n {
                    assert!(inst.travel(0, i, j) <= inst.travel(0, i, m) + inst.travel(0, m, j) + 1e-9);
                }
            }
        }
    }
}
