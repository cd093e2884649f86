//! Non-learning baselines driven through the same environment as the learner.

mod aco;
mod rrt;

pub use aco::{aco_tour, open_tour_length, AcoConfig};
pub use rrt::{grow_rrt, rrt_navigate, RrtConfig};

use crate::channel::{coverage_radius, RadioConfig};
use crate::env::{Action, Env, StepRecord};
use crate::error::{Error, Result};

/// Waypoints with a commanded cruise speed for the leg that ends at each one.
#[derive(Debug, Clone, PartialEq)]
pub struct WaypointPlan {
    pub waypoints: Vec<[f64; 2]>,
    pub speeds: Vec<f64>,
}

impl WaypointPlan {
    pub fn new(waypoints: Vec<[f64; 2]>, speed: f64) -> WaypointPlan {
        let speeds = vec![speed; waypoints.len()];
        WaypointPlan { waypoints, speeds }
    }

    pub fn length(&self) -> f64 {
        self.waypoints.windows(2).map(|w| dist(w[0], w[1])).sum()
    }

    pub fn within(&self, area_side: f64) -> bool {
        self.waypoints
            .iter()
            .all(|p| p.iter().all(|&c| (0.0..=area_side).contains(&c)))
    }
}

pub(crate) fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Boustrophedon track over `[0,D]²` from the lower-left to the upper-left
/// corner. Passes run along x and are stacked in y with a uniform pitch no
/// larger than `spacing`; an odd pass count gets a closing leg back to x = 0.
pub fn scan_plan(area_side: f64, spacing: f64, speed: f64) -> Result<WaypointPlan> {
    if !(spacing > 0.0 && spacing <= area_side) {
        return Err(Error::invalid(format!(
            "scan spacing {spacing} must be in (0, {area_side}]"
        )));
    }
    let gaps = (area_side / spacing - 1e-9).ceil().max(1.0) as usize;
    let pitch = area_side / gaps as f64;
    let mut waypoints = Vec::with_capacity(2 * gaps + 3);
    for i in 0..=gaps {
        let y = if i == gaps { area_side } else { i as f64 * pitch };
        if i % 2 == 0 {
            waypoints.push([0.0, y]);
            waypoints.push([area_side, y]);
        } else {
            waypoints.push([area_side, y]);
            waypoints.push([0.0, y]);
        }
    }
    if gaps.is_multiple_of(2) {
        waypoints.push([0.0, area_side]);
    }
    Ok(WaypointPlan::new(waypoints, speed))
}

/// Horizontal radius of the disk in which a LoS link at unit fading gain
/// meets the SNR threshold.
pub fn coverage_radius_estimate(altitude: f64, radio: &RadioConfig) -> f64 {
    coverage_radius(altitude, radio)
}

/// Fly the plan through the environment until it is exhausted or the
/// episode ends. The environment must already be reset.
pub fn execute_waypoints(env: &mut Env, plan: &WaypointPlan) -> Result<Vec<StepRecord>> {
    const ARRIVED: f64 = 1e-6;
    let v_max = env.scenario().params.v_max;
    let delta_ft = env.scenario().params.delta_ft;
    let mut records = Vec::new();
    let mut i = 0;
    while i < plan.waypoints.len() && !env.state().over {
        let target = plan.waypoints[i];
        let pos = env.state().position;
        let d = dist(pos, target);
        if d <= ARRIVED {
            i += 1;
            continue;
        }
        let speed = plan.speeds[i].min(v_max).min(d / delta_ft);
        let action = Action::toward(pos, target, speed);
        let res = env.step(action)?;
        records.push(env.record(action, &res));
    }
    Ok(records)
}
