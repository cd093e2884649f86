//! Planner checks shared with acceptance.

use rand::{Rng, SeedableRng};
use uavdc::config::ExperimentConfig;
use uavdc::harness::{build_scenario, run_baseline_episode, BaselineMethod};
use uavdc::planners::{aco_tour, open_tour_length, AcoConfig};
use uavdc::seeds::SimRng;

use super::brute_force_open_tour;

pub struct AcoReport {
    pub within_5pct: usize,
    pub instances: usize,
    pub worst_ratio: f64,
}

/// Random instances with 2 to 8 nodes on a 1000 m square.
pub fn aco_vs_brute_force(instances: usize, seed: u64) -> AcoReport {
    let mut rng = SimRng::seed_from_u64(seed);
    let mut within = 0;
    let mut worst = 1.0f64;
    for i in 0..instances {
        let k = rng.random_range(2..=8usize);
        let nodes: Vec<[f64; 2]> = (0..k)
            .map(|_| [rng.random_range(0.0..1000.0), rng.random_range(0.0..1000.0)])
            .collect();
        let start = [rng.random_range(0.0..1000.0), rng.random_range(0.0..1000.0)];
        let cfg = AcoConfig {
            seed: seed * 1000 + i as u64,
            ..AcoConfig::default()
        };
        let order = aco_tour(&nodes, start, &cfg).unwrap();
        let mut sorted = order.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..k).collect::<Vec<_>>(), "ACO order must be a permutation");
        let ratio = open_tour_length(&nodes, start, &order) / brute_force_open_tour(&nodes, start);
        worst = worst.max(ratio);
        if ratio <= 1.05 {
            within += 1;
        }
    }
    AcoReport {
        within_5pct: within,
        instances,
        worst_ratio: worst,
    }
}

/// Flat map with `k` nodes; node layout and fading depend on `seed`.
pub fn flat_config(seed: u64, k: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        seed,
        ..ExperimentConfig::default()
    };
    cfg.map.buildings = false;
    cfg.scenario.num_nodes = k;
    cfg
}

/// Served count and whether the mission finished, for one Scan run per seed.
pub fn scan_runs(seeds: std::ops::RangeInclusive<u64>, k: usize) -> Vec<(u64, usize, bool)> {
    seeds
        .map(|seed| {
            let cfg = flat_config(seed, k);
            let sc = build_scenario(&cfg).unwrap();
            let records = run_baseline_episode(&cfg, &sc, BaselineMethod::Scan, 1).unwrap();
            let served = records.iter().map(|r| r.served_count).sum();
            let finished = records.last().is_some_and(|r| r.terminated);
            (seed, served, finished)
        })
        .collect()
}
