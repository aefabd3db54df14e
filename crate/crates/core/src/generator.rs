//! Random instances and time samples.
//!
//! POIs are uniform in a square with the depot at its centre; travel times
//! are Euclidean distances over a common speed and identical for every robot.
//! All draws come from ChaCha8 streams derived from the configured seed.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{HumanSpec, Instance, RobotSpec, TimeSamples, TimeWindow, TravelMatrix};
use crate::seed::{rng_from, tag};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeneratorError {
    #[error("invalid generator config: {0}")]
    Config(String),
}

/// Gaussian scenario settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SampleConfig {
    /// Standard deviation as a fraction of the nominal value.
    pub sigma_rel: f64,
    pub n_scenarios: usize,
    pub seed: u64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            sigma_rel: 0.3,
            n_scenarios: 100,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub n_robots: usize,
    pub n_humans: usize,
    pub n_pois: usize,
    pub seed: u64,
    /// Side of the square POIs are drawn from.
    pub area: f64,
    pub speed: f64,
    pub request_probability: f64,
    pub visit_time_range: [f64; 2],
    pub tour_time_limit: f64,
    /// Penalty margin as a fraction of the tour time limit.
    pub penalty_margin_fraction: f64,
    /// Team capacity is `ceil(n_humans / n_robots) + capacity_slack`.
    pub capacity_slack: usize,
    /// Defaults to `n_pois`, which never binds.
    pub max_drop_per_human: Option<usize>,
    pub window_fraction: f64,
    pub n_sequence_deps: usize,
    /// Fraction of humans placed in pairs.
    pub pair_fraction: f64,
    pub weight_drop: f64,
    pub weight_time: f64,
    pub samples: SampleConfig,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            n_robots: 4,
            n_humans: 10,
            n_pois: 10,
            seed: 0,
            area: 100.0,
            speed: 1.0,
            request_probability: 0.3,
            visit_time_range: [10.0, 30.0],
            tour_time_limit: 300.0,
            penalty_margin_fraction: 0.1,
            capacity_slack: 1,
            max_drop_per_human: None,
            window_fraction: 0.1,
            n_sequence_deps: 2,
            pair_fraction: 0.1,
            weight_drop: 1000.0,
            weight_time: 1.0,
            samples: SampleConfig::default(),
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), GeneratorError> {
        let bad = |m: &str| Err(GeneratorError::Config(m.into()));
        if self.n_robots == 0 {
            return bad("n_robots must be positive");
        }
        let probability = |p: f64| (0.0..=1.0).contains(&p);
        if !probability(self.request_probability)
            || !probability(self.window_fraction)
            || !probability(self.pair_fraction)
            || !probability(self.penalty_margin_fraction)
        {
            return bad("probabilities and fractions must lie in [0, 1]");
        }
        if !(self.area >= 0.0 && self.speed > 0.0) {
            return bad("area must be non-negative and speed positive");
        }
        let [lo, hi] = self.visit_time_range;
        if !(0.0 <= lo && lo <= hi) {
            return bad("visit_time_range must be ordered and non-negative");
        }
        if !(self.tour_time_limit > 0.0) {
            return bad("tour_time_limit must be positive");
        }
        if !(self.samples.sigma_rel >= 0.0) || self.samples.n_scenarios == 0 {
            return bad("sigma_rel must be non-negative and n_scenarios positive");
        }
        Ok(())
    }

    pub fn team_capacity(&self) -> usize {
        self.n_humans.div_ceil(self.n_robots) + self.capacity_slack
    }
}

/// Instance drawn from `config`; coordinates of POIs, start and terminal are
/// kept for plotting.
pub fn generate_instance(config: &GeneratorConfig) -> Result<Instance, GeneratorError> {
    config.validate()?;
    let mut rng = rng_from(config.seed, &[tag::INSTANCE]);
    let n = config.n_pois;
    let centre = config.area / 2.0;
    let mut coords: Vec<[f64; 2]> = (0..n)
        .map(|_| [rng.random::<f64>() * config.area, rng.random::<f64>() * config.area])
        .collect();
    coords.push([centre, centre]);
    coords.push([centre, centre]);
    let travel = TravelMatrix::from_fn(n + 2, |i, j| {
        let (dx, dy) = (coords[i][0] - coords[j][0], coords[i][1] - coords[j][1]);
        (dx * dx + dy * dy).sqrt() / config.speed
    });
    let [lo, hi] = config.visit_time_range;
    let visit: Vec<f64> = (0..n).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect();

    let humans: Vec<HumanSpec> = (0..config.n_humans)
        .map(|_| HumanSpec {
            requests: (0..n).filter(|_| rng.random_bool(config.request_probability)).collect(),
        })
        .collect();

    let limit = config.tour_time_limit;
    let n_windows = (config.window_fraction * n as f64).round() as usize;
    let mut pois: Vec<usize> = (0..n).collect();
    pois.shuffle(&mut rng);
    let mut windows = BTreeMap::new();
    for &p in pois.iter().take(n_windows) {
        let t_min = rng.random::<f64>() * limit / 2.0;
        let width = limit / 4.0 + rng.random::<f64>() * limit / 4.0;
        // Keep every window reachable straight from the start.
        let earliest = travel.get(n, p);
        windows.insert(p, TimeWindow { t_min, t_max: (t_min + width).max(earliest) });
    }

    // Orient each dependency from lower to higher id so the relation stays acyclic.
    let mut deps = Vec::new();
    let possible = n * n.saturating_sub(1) / 2;
    while deps.len() < config.n_sequence_deps.min(possible) {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b {
            let pair = (a.min(b), a.max(b));
            if !deps.contains(&pair) {
                deps.push(pair);
            }
        }
    }

    let n_paired = ((config.pair_fraction * config.n_humans as f64).round() as usize) & !1;
    let mut people: Vec<usize> = (0..config.n_humans).collect();
    people.shuffle(&mut rng);
    let pairs: Vec<(usize, usize)> = people[..n_paired]
        .chunks(2)
        .map(|c| (c[0].min(c[1]), c[0].max(c[1])))
        .collect();

    let robot = RobotSpec {
        tour_time_limit: limit,
        team_capacity: config.team_capacity().max(if pairs.is_empty() { 1 } else { 2 }),
        penalty_margin: config.penalty_margin_fraction * limit,
    };
    Ok(Instance {
        n_pois: n,
        robots: vec![robot; config.n_robots],
        humans,
        travel_time: vec![travel; config.n_robots],
        visit_time: vec![visit; config.n_robots],
        time_windows: windows,
        sequence_deps: deps,
        human_pairs: pairs,
        weight_drop: config.weight_drop,
        weight_time: config.weight_time,
        max_drop_per_human: config.max_drop_per_human.unwrap_or(n),
        big_time: 10.0 * limit + 4.0 * config.area / config.speed,
        coordinates: Some(coords),
    })
}

/// Draws `Normal(nominal, sigma_rel * nominal)` for every edge, POI and
/// scenario, independently per robot, clamping negative draws to zero.
pub fn generate_samples(instance: &Instance, config: &SampleConfig) -> Result<TimeSamples, GeneratorError> {
    if !(config.sigma_rel >= 0.0) || config.n_scenarios == 0 {
        return Err(GeneratorError::Config(
            "sigma_rel must be non-negative and n_scenarios positive".into(),
        ));
    }
    let s = config.n_scenarios;
    let mut rng = rng_from(config.seed, &[tag::SAMPLES]);
    let mut draw = |nominal: f64, out: &mut Vec<f64>| {
        let sd = config.sigma_rel * nominal;
        if sd > 0.0 {
            let normal = Normal::new(nominal, sd).expect("finite positive deviation");
            out.extend((0..s).map(|_| normal.sample(&mut rng).max(0.0)));
        } else {
            out.extend(std::iter::repeat_n(nominal, s));
        }
    };
    let mut travel = Vec::with_capacity(instance.n_robots());
    let mut visit = Vec::with_capacity(instance.n_robots());
    for k in 0..instance.n_robots() {
        let mut tr = Vec::with_capacity(instance.n_nodes().pow(2) * s);
        for &t in instance.travel_time[k].as_slice() {
            draw(t, &mut tr);
        }
        let mut vi = Vec::with_capacity(instance.n_pois * s);
        for &t in &instance.visit_time[k] {
            draw(t, &mut vi);
        }
        travel.push(tr);
        visit.push(vi);
    }
    Ok(TimeSamples {
        n_scenarios: s,
        travel,
        visit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_json() {
        let cfg = GeneratorConfig {
            seed: 9,
            ..GeneratorConfig::default()
        };
        let a = serde_json::to_string(&generate_instance(&cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&generate_instance(&cfg).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn generated_instances_validate() {
        for seed in 0..30 {
            let cfg = GeneratorConfig {
                seed,
                n_robots: 3,
                n_humans: 9,
                n_pois: 12,
                n_sequence_deps: 4,
                window_fraction: 0.3,
                pair_fraction: 0.4,
                ..GeneratorConfig::default()
            };
            let inst = generate_instance(&cfg).unwrap();
            inst.validate().unwrap();
            generate_samples(&inst, &SampleConfig { n_scenarios: 3, ..cfg.samples }).unwrap().validate(&inst).unwrap();
        }
    }

    #[test]
    fn full_request_probability() {
        let cfg = GeneratorConfig {
            request_probability: 1.0,
            ..GeneratorConfig::default()
        };
        let inst = generate_instance(&cfg).unwrap();
        assert_eq!(inst.total_requests(), cfg.n_humans * cfg.n_pois);
    }

    #[test]
    fn zero_sigma_gives_nominal_samples() {
        let inst = generate_instance(&GeneratorConfig::default()).unwrap();
        let cfg = SampleConfig {
            sigma_rel: 0.0,
            n_scenarios: 4,
            seed: 1,
        };
        let s = generate_samples(&inst, &cfg).unwrap();
        let n = inst.n_nodes();
        for i in 0..n {
            for j in 0..n {
                assert!(s.travel_row(0, i, j).iter().all(|&t| t == inst.travel(0, i, j)));
            }
        }
        for p in 0..inst.n_pois {
            assert!(s.visit_row(1, p).unwrap().iter().all(|&t| t == inst.visit(1, p)));
        }
    }

    #[test]
    fn samples_are_never_negative() {
        let inst = generate_instance(&GeneratorConfig::default()).unwrap();
        let cfg = SampleConfig {
            sigma_rel: 2.0,
            n_scenarios: 50,
            seed: 3,
        };
        let s = generate_samples(&inst, &cfg).unwrap();
        assert!(s.travel.iter().flatten().chain(s.visit.iter().flatten()).all(|&t| t >= 0.0));
    }
}
