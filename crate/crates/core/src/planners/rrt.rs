use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dist;
use crate::env::{Action, Env, StepRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RrtConfig {
    /// Tree extension length; `None` means one flight step at full speed.
    pub step_size: Option<f64>,
    pub goal_bias: f64,
    pub max_nodes: usize,
    /// Radius of the goal disk; `None` means the estimated coverage radius.
    pub goal_radius: Option<f64>,
    pub seed: u64,
}

impl Default for RrtConfig {
    fn default() -> Self {
        RrtConfig {
            step_size: None,
            goal_bias: 0.1,
            max_nodes: 5000,
            goal_radius: None,
            seed: 0,
        }
    }
}

impl RrtConfig {
    pub fn validate(&self) -> Result<()> {
        if self.step_size.is_some_and(|s| !(s > 0.0)) {
            return Err(Error::invalid("RRT step size must be positive"));
        }
        if !(0.0..=1.0).contains(&self.goal_bias) {
            return Err(Error::invalid("RRT goal bias must be in [0,1]"));
        }
        if self.goal_radius.is_some_and(|r| !(r >= 0.0)) {
            return Err(Error::invalid("RRT goal radius must be non-negative"));
        }
        if self.max_nodes == 0 {
            return Err(Error::invalid("RRT needs a positive node budget"));
        }
        Ok(())
    }
}

/// Grow a tree over the free square `[0,D]²` from `from` until a vertex
/// lands within `goal_radius` of `goal`. Returns the path excluding the root,
/// or `None` once `max_nodes` vertices exist.
#[allow(clippy::too_many_arguments)]
pub fn grow_rrt<R: Rng + ?Sized>(
    from: [f64; 2],
    goal: [f64; 2],
    goal_radius: f64,
    step: f64,
    goal_bias: f64,
    max_nodes: usize,
    area_side: f64,
    rng: &mut R,
) -> Option<Vec<[f64; 2]>> {
    if dist(from, goal) <= goal_radius {
        return Some(Vec::new());
    }
    let mut verts: Vec<([f64; 2], usize)> = vec![(from, usize::MAX)];
    while verts.len() < max_nodes {
        let sample = if rng.random::<f64>() < goal_bias {
            goal
        } else {
            [rng.random_range(0.0..=area_side), rng.random_range(0.0..=area_side)]
        };
        let (near_idx, near_d) = verts
            .iter()
            .enumerate()
            .map(|(i, (p, _))| (i, dist(*p, sample)))
            .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
        if near_d <= 1e-12 {
            continue;
        }
        let near = verts[near_idx].0;
        let t = (step / near_d).min(1.0);
        let new = [near[0] + t * (sample[0] - near[0]), near[1] + t * (sample[1] - near[1])];
        verts.push((new, near_idx));
        if dist(new, goal) <= goal_radius {
            let mut path = Vec::new();
            let mut i = verts.len() - 1;
            while i != 0 {
                path.push(verts[i].0);
                i = verts[i].1;
            }
            path.reverse();
            return Some(path);
        }
    }
    None
}

/// Visit nodes in `order`, planning an RRT toward the coverage disk of the
/// current head and dropping every node the environment reports as served.
/// Once inside the disk (or when the tree budget runs out) the UAV closes in
/// on the head in a straight line. The environment must already be reset.
pub fn rrt_navigate<R: Rng + ?Sized>(
    env: &mut Env,
    order: &[usize],
    cfg: &RrtConfig,
    rng: &mut R,
) -> Result<Vec<StepRecord>> {
    cfg.validate()?;
    let params = env.scenario().params;
    let step = cfg.step_size.unwrap_or(params.v_max * params.delta_ft);
    let goal_radius = cfg
        .goal_radius
        .unwrap_or_else(|| super::coverage_radius_estimate(params.altitude, &env.scenario().radio));
    let area = env.scenario().area_side();
    let mut seq: Vec<usize> = order.iter().copied().filter(|&k| !env.state().served[k]).collect();
    let mut records = Vec::new();

    let fly = |env: &mut Env, to: [f64; 2], records: &mut Vec<StepRecord>| -> Result<()> {
        let pos = env.state().position;
        let speed = params.v_max.min(dist(pos, to) / params.delta_ft);
        let action = Action::toward(pos, to, speed);
        let res = env.step(action)?;
        records.push(env.record(action, &res));
        Ok(())
    };

    while !seq.is_empty() && !env.state().over {
        let head = seq[0];
        let goal = env.scenario().nodes[head];
        let path = grow_rrt(
            env.state().position,
            goal,
            goal_radius,
            step,
            cfg.goal_bias,
            cfg.max_nodes,
            area,
            rng,
        );
        let mut waypoints = path.unwrap_or_default().into_iter();
        let mut waypoint = waypoints.next();
        while seq.first() == Some(&head) && !env.state().over {
            // straight-line pursuit once the tree path is used up
            let to = waypoint.unwrap_or(goal);
            fly(env, to, &mut records)?;
            if waypoint.is_some_and(|w| dist(env.state().position, w) <= 1e-6) {
                waypoint = waypoints.next();
            }
            seq.retain(|&k| !env.state().served[k]);
        }
    }
    Ok(records)
}
