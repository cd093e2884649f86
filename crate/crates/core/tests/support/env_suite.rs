//! Property-based invariant checks over random scenarios and action streams.

use std::cell::Cell;
use std::sync::Arc;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::SeedableRng;
use uavdc::channel::RadioConfig;
use uavdc::citymap::{generate_city, CityMap, ItuParams};
use uavdc::env::{place_nodes, Action, Env, Scenario, ScenarioParams};
use uavdc::seeds::SimRng;

#[derive(Debug, Clone)]
pub struct Case {
    pub seed: u64,
    pub buildings: bool,
    pub area_side: f64,
    pub num_nodes: usize,
    pub k_up: usize,
    pub n_max: usize,
    pub altitude: f64,
    pub actions: Vec<(f64, f64)>,
}

pub fn case_strategy() -> impl Strategy<Value = Case> {
    (
        any::<u64>(),
        any::<bool>(),
        200.0..1000.0f64,
        1usize..=12,
        1usize..=6,
        5usize..=80,
        60.0..130.0f64,
    )
        .prop_flat_map(|(seed, buildings, area_side, num_nodes, k_up, n_max, altitude)| {
            prop::collection::vec((0.0..=std::f64::consts::TAU, 0.0..=1.0f64), n_max..=n_max).prop_map(move |actions| {
                Case {
                    seed,
                    buildings,
                    area_side,
                    num_nodes,
                    k_up,
                    n_max,
                    altitude,
                    actions,
                }
            })
        })
}

/// Run one episode of `case` and check every per-step invariant. Returns the
/// number of steps taken.
pub fn check_case(case: &Case) -> Result<usize, TestCaseError> {
    let map = if case.buildings {
        generate_city(
            ItuParams {
                area_side: case.area_side,
                ..ItuParams::default()
            },
            case.seed,
        )
        .unwrap()
    } else {
        CityMap::flat(case.area_side)
    };
    let map = Arc::new(map);
    let mut rng = SimRng::seed_from_u64(case.seed ^ 0x5eed);
    let nodes = place_nodes(&map, case.num_nodes, &mut rng);
    let params = ScenarioParams {
        num_nodes: case.num_nodes,
        k_up: case.k_up,
        n_max: case.n_max,
        altitude: case.altitude,
        ..ScenarioParams::default()
    };
    let scenario = Arc::new(Scenario::new(map, nodes, RadioConfig::default(), params).unwrap());
    let mut env = Env::new(scenario, case.seed.wrapping_add(1), case.seed.wrapping_add(2));
    env.reset();
    let k = case.num_nodes;
    let d = case.area_side;
    let mut served_before = vec![false; k];
    let mut elapsed = 0.0;
    let mut steps = 0;
    for &(heading, frac) in &case.actions {
        if env.state().over {
            break;
        }
        let action = Action {
            heading,
            speed: frac * params.v_max,
        };
        let res = env.step(action).map_err(|e| TestCaseError::fail(e.to_string()))?;
        steps += 1;
        let st = env.state();
        let [x, y] = st.position;
        prop_assert!(
            (0.0..=d).contains(&x) && (0.0..=d).contains(&y),
            "position {:?} outside [0,{}]²",
            st.position,
            d
        );
        for (i, (&before, &now)) in served_before.iter().zip(&st.served).enumerate() {
            prop_assert!(!before || now, "served flag {} was cleared", i);
        }
        prop_assert!(res.info.served.len() <= case.k_up);
        prop_assert_eq!(res.info.hover_time == 0.0, res.info.served.is_empty());
        prop_assert!(
            res.reward > -1.0 && res.reward <= 1.0 + case.n_max as f64,
            "reward {}",
            res.reward
        );
        let all = st.served_count() == k;
        prop_assert_eq!(res.terminated, all);
        if st.step >= case.n_max && !all {
            prop_assert!(
                res.episode_over && !res.terminated,
                "truncation must not mark completion"
            );
        }
        prop_assert_eq!(res.episode_over, all || st.step >= case.n_max);
        elapsed += res.info.step_duration;
        prop_assert!((st.elapsed - elapsed).abs() <= 1e-9 * elapsed.max(1.0));
        prop_assert_eq!(res.observation.len(), 2 * k + 3);
        served_before.clone_from(&st.served);
    }
    Ok(steps)
}

/// Run `cases` random episodes; returns the total number of checked steps.
pub fn run_suite(cases: u32, seed: u64) -> Result<usize, String> {
    let mut runner = TestRunner::new_with_rng(
        Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        },
        proptest::test_runner::TestRng::from_seed(proptest::test_runner::RngAlgorithm::ChaCha, &seed_bytes(seed)),
    );
    let total = Cell::new(0usize);
    runner
        .run(&case_strategy(), |case| {
            total.set(total.get() + check_case(&case)?);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok(total.get())
}

fn seed_bytes(seed: u64) -> [u8; 32] {
    let mut out = [0u8; 32];
    for (i, chunk) in out.chunks_mut(8).enumerate() {
        chunk.copy_from_slice(&(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(i as u64)).to_le_bytes());
    }
    out
}
