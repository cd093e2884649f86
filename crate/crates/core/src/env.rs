//! Data-collection MDP.
//!
//! Each step is: move (or cancel at the border) → sample every link and
//! wake nodes that clear the SNR threshold → serve up to `k_up` unserved
//! awake nodes with the best SNR → hover until the slowest upload finishes
//! → update the pheromone and the shaped reward.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::channel::{self, LinkSample, RadioConfig};
use crate::citymap::CityMap;
use crate::error::{Error, Result};
use crate::seeds::SimRng;

/// Guard added to the rate in the hover-time denominator.
pub const RATE_GUARD: f64 = 1e-12;

/// Positions this close outside the area are snapped back instead of
/// counting as a border violation.
const BOUNDARY_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioParams {
    pub num_nodes: usize,
    /// UAV flight altitude, m.
    pub altitude: f64,
    /// File size per node, bits.
    pub d_file: f64,
    /// Maximum nodes served in one step.
    pub k_up: usize,
    pub v_max: f64,
    /// Flight time per step, s.
    pub delta_ft: f64,
    pub n_max: usize,
    pub kappa_cov: f64,
    pub kappa_dis: f64,
    /// Border penalty; `1/K` when absent.
    pub p_ob: Option<f64>,
    /// Fixed start position; uniform over the area when absent.
    pub fixed_start: Option<[f64; 2]>,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            num_nodes: 40,
            altitude: 95.0,
            d_file: 10.0e6,
            k_up: 6,
            v_max: 20.0,
            delta_ft: 2.5,
            n_max: 200,
            kappa_cov: 10.0,
            kappa_dis: 1.0,
            p_ob: None,
            fixed_start: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub map: Arc<CityMap>,
    pub nodes: Vec<[f64; 2]>,
    pub radio: RadioConfig,
    pub params: ScenarioParams,
}

/// Uniform node placement over the area, skipping building footprints so
/// every node can be reached by a LoS link from directly overhead.
pub fn place_nodes<R: Rng + ?Sized>(map: &CityMap, count: usize, rng: &mut R) -> Vec<[f64; 2]> {
    let d = map.area_side();
    let mut nodes = Vec::with_capacity(count);
    while nodes.len() < count {
        let x = rng.random_range(0.0..=d);
        let y = rng.random_range(0.0..=d);
        if !map.inside_footprint(x, y) {
            nodes.push([x, y]);
        }
    }
    nodes
}

impl Scenario {
    pub fn new(
        map: Arc<CityMap>,
        nodes: Vec<[f64; 2]>,
        radio: RadioConfig,
        params: ScenarioParams,
    ) -> Result<Scenario> {
        let s = Scenario {
            map,
            nodes,
            radio,
            params,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.radio.validate()?;
        let d = self.area_side();
        let p = &self.params;
        if self.nodes.is_empty() {
            return Err(Error::invalid("scenario needs at least one node"));
        }
        if self
            .nodes
            .iter()
            .any(|n| !(0.0..=d).contains(&n[0]) || !(0.0..=d).contains(&n[1]))
        {
            return Err(Error::invalid("node outside the area"));
        }
        if p.k_up < 1 {
            return Err(Error::invalid("k_up must be at least 1"));
        }
        if !(p.v_max > 0.0) || !(p.delta_ft > 0.0) || !(p.altitude > 0.0) || !(p.d_file > 0.0) {
            return Err(Error::invalid("v_max, delta_ft, altitude and d_file must be positive"));
        }
        if p.n_max < 1 {
            return Err(Error::invalid("n_max must be at least 1"));
        }
        if let Some([x, y]) = p.fixed_start {
            if !(0.0..=d).contains(&x) || !(0.0..=d).contains(&y) {
                return Err(Error::invalid("fixed start outside the area"));
            }
        }
        Ok(())
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn area_side(&self) -> f64 {
        self.map.area_side()
    }

    pub fn p_ob(&self) -> f64 {
        self.params.p_ob.unwrap_or(1.0 / self.num_nodes() as f64)
    }

    pub fn obs_dim(&self) -> usize {
        2 * self.num_nodes() + 3
    }

    /// Distance covered by one step at full speed.
    pub fn step_length(&self) -> f64 {
        self.params.v_max * self.params.delta_ft
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Action {
    /// Heading in (0, 2π] rad from the x axis.
    pub heading: f64,
    /// Horizontal speed, m/s.
    pub speed: f64,
}

impl Action {
    /// Map a normalized action in [-1,1]² to heading and speed.
    pub fn from_normalized(u: [f64; 2], v_max: f64) -> Action {
        let u0 = u[0].clamp(-1.0, 1.0);
        let u1 = u[1].clamp(-1.0, 1.0);
        Action {
            heading: std::f64::consts::PI * (u0 + 1.0),
            speed: v_max * (u1 + 1.0) / 2.0,
        }
    }

    /// Heading pointing from `from` to `to`, in (0, 2π].
    pub fn toward(from: [f64; 2], to: [f64; 2], speed: f64) -> Action {
        let mut heading = (to[1] - from[1]).atan2(to[0] - from[0]);
        if heading <= 0.0 {
            heading += std::f64::consts::TAU;
        }
        Action { heading, speed }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub position: [f64; 2],
    pub step: usize,
    pub served: Vec<bool>,
    pub awake: Vec<bool>,
    pub zeta: f64,
    pub elapsed: f64,
    pub terminated: bool,
    pub over: bool,
}

impl EnvState {
    pub fn served_count(&self) -> usize {
        self.served.iter().filter(|&&c| c).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServedNode {
    pub index: usize,
    pub los: bool,
    pub snr_linear: f64,
    pub rate_bps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    pub served: Vec<ServedNode>,
    pub hover_time: f64,
    pub step_duration: f64,
    pub boundary_violation: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub episode_over: bool,
    pub terminated: bool,
    pub info: StepInfo,
}

/// One row of the per-step episode log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub n: usize,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
    pub served_count: usize,
    pub served_los: usize,
    pub hover_time_s: f64,
    pub step_duration_s: f64,
    pub zeta: f64,
    pub reward: f64,
    pub done: bool,
    pub terminated: bool,
}

impl StepRecord {
    pub const CSV_HEADER: &'static str =
        "n,x,y,heading,speed,served,hover_time_s,step_duration_s,zeta,reward,done_flag,terminated_flag";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.n,
            self.x,
            self.y,
            self.heading,
            self.speed,
            self.served_count,
            self.hover_time_s,
            self.step_duration_s,
            self.zeta,
            self.reward,
            self.done as u8,
            self.terminated as u8
        )
    }
}

/// Apply one move. Out-of-area targets cancel the move.
pub fn move_uav(position: [f64; 2], action: Action, delta_ft: f64, area_side: f64) -> ([f64; 2], bool) {
    let step = delta_ft * action.speed;
    let x = position[0] + step * action.heading.cos();
    let y = position[1] + step * action.heading.sin();
    let inside = |v: f64| (-BOUNDARY_SLACK..=area_side + BOUNDARY_SLACK).contains(&v);
    if inside(x) && inside(y) {
        ([x.clamp(0.0, area_side), y.clamp(0.0, area_side)], false)
    } else {
        (position, true)
    }
}

/// Sample the link to every node from `position`.
pub fn sample_links<R: Rng + ?Sized>(scenario: &Scenario, position: [f64; 2], rng: &mut R) -> Vec<LinkSample> {
    let h = scenario.params.altitude;
    let uav = [position[0], position[1], h];
    scenario
        .nodes
        .iter()
        .map(|n| {
            let dx = position[0] - n[0];
            let dy = position[1] - n[1];
            let d = (dx * dx + dy * dy + h * h).sqrt();
            let los = scenario.map.is_los(&uav, &[n[0], n[1], 0.0]);
            channel::sample_link(los, d, &scenario.radio, rng).expect("altitude is positive so distance is positive")
        })
        .collect()
}

/// Wake flags and the served set for one step.
///
/// Awake nodes are those clearing the threshold; candidates are awake and
/// not yet served; at most `k_up` candidates with the largest SNR are
/// served, ties going to the lower index.
pub fn wake_and_select(
    links: &[LinkSample],
    served_before: &[bool],
    radio: &RadioConfig,
    k_up: usize,
) -> (Vec<bool>, Vec<usize>) {
    let threshold = radio.snr_threshold_linear();
    let awake: Vec<bool> = links.iter().map(|l| l.snr_linear >= threshold).collect();
    let mut candidates: Vec<usize> = (0..links.len()).filter(|&k| awake[k] && !served_before[k]).collect();
    candidates.sort_by(|&a, &b| links[b].snr_linear.total_cmp(&links[a].snr_linear).then(a.cmp(&b)));
    candidates.truncate(k_up);
    (awake, candidates)
}

/// Time needed for the slowest of the served nodes to upload its file.
pub fn hover_time(served: &[usize], links: &[LinkSample], radio: &RadioConfig, d_file: f64) -> f64 {
    served
        .iter()
        .map(|&k| d_file / (links[k].rate_bps(radio) + RATE_GUARD))
        .fold(0.0, f64::max)
}

pub fn update_pheromone(
    zeta_prev: f64,
    served_count: usize,
    boundary_violation: bool,
    kappa_cov: f64,
    kappa_dis: f64,
    p_ob: f64,
) -> f64 {
    let penalty = if boundary_violation { p_ob } else { 0.0 };
    zeta_prev + served_count as f64 * kappa_cov - kappa_dis - penalty
}

/// Logistic squashing of the pheromone into (-1, 1).
pub fn r_tanh(zeta: f64, num_nodes: usize, kappa_cov: f64) -> f64 {
    2.0 / (1.0 + (-zeta / (num_nodes as f64 * kappa_cov)).exp()) - 1.0
}

/// Shaped reward for step index `n`; completion adds the remaining-step bonus.
pub fn shaped_reward(zeta: f64, completed: bool, n: usize, num_nodes: usize, kappa_cov: f64, n_max: usize) -> f64 {
    let base = r_tanh(zeta, num_nodes, kappa_cov);
    if completed {
        base + n_max.saturating_sub(n) as f64
    } else {
        base
    }
}

pub struct Env {
    scenario: Arc<Scenario>,
    state: EnvState,
    fading_rng: SimRng,
    start_rng: SimRng,
}

impl Env {
    pub fn new(scenario: Arc<Scenario>, fading_seed: u64, start_seed: u64) -> Env {
        let k = scenario.num_nodes();
        Env {
            state: EnvState {
                position: [0.0, 0.0],
                step: 0,
                served: vec![false; k],
                awake: vec![false; k],
                zeta: 0.0,
                elapsed: 0.0,
                terminated: false,
                over: true,
            },
            scenario,
            fading_rng: SimRng::seed_from_u64(fading_seed),
            start_rng: SimRng::seed_from_u64(start_seed),
        }
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn state(&self) -> &EnvState {
        &self.state
    }

    pub fn obs_dim(&self) -> usize {
        self.scenario.obs_dim()
    }

    pub fn reset(&mut self) -> Vec<f64> {
        let d = self.scenario.area_side();
        let position = match self.scenario.params.fixed_start {
            Some(p) => p,
            None => [
                self.start_rng.random_range(0.0..=d),
                self.start_rng.random_range(0.0..=d),
            ],
        };
        let links = sample_links(&self.scenario, position, &mut self.fading_rng);
        let threshold = self.scenario.radio.snr_threshold_linear();
        let k = self.scenario.num_nodes();
        self.state = EnvState {
            position,
            step: 0,
            served: vec![false; k],
            awake: links.iter().map(|l| l.snr_linear >= threshold).collect(),
            zeta: 0.0,
            elapsed: 0.0,
            terminated: false,
            over: false,
        };
        self.observation()
    }

    /// `[b_1..b_K, c_1..c_K, x/D, y/D, zeta/(K·kappa_cov)]`.
    pub fn observation(&self) -> Vec<f64> {
        let s = &self.state;
        let d = self.scenario.area_side();
        let k = self.scenario.num_nodes();
        let mut obs = Vec::with_capacity(2 * k + 3);
        obs.extend(s.awake.iter().map(|&b| b as u8 as f64));
        obs.extend(s.served.iter().map(|&c| c as u8 as f64));
        obs.push(s.position[0] / d);
        obs.push(s.position[1] / d);
        obs.push(s.zeta / (k as f64 * self.scenario.params.kappa_cov));
        obs
    }

    pub fn step(&mut self, action: Action) -> Result<StepResult> {
        if self.state.over {
            return Err(Error::EpisodeOver);
        }
        let p = self.scenario.params;
        if !(0.0..=std::f64::consts::TAU).contains(&action.heading) || !(0.0..=p.v_max + 1e-9).contains(&action.speed) {
            return Err(Error::invalid(format!(
                "action out of bounds: heading {} speed {}",
                action.heading, action.speed
            )));
        }
        let (position, violation) = move_uav(self.state.position, action, p.delta_ft, self.scenario.area_side());
        let links = sample_links(&self.scenario, position, &mut self.fading_rng);
        let (awake, served_now) = wake_and_select(&links, &self.state.served, &self.scenario.radio, p.k_up);
        let hover = hover_time(&served_now, &links, &self.scenario.radio, p.d_file);
        for &k in &served_now {
            self.state.served[k] = true;
        }
        let k = self.scenario.num_nodes();
        let zeta = update_pheromone(
            self.state.zeta,
            served_now.len(),
            violation,
            p.kappa_cov,
            p.kappa_dis,
            self.scenario.p_ob(),
        );
        let completed = self.state.served_count() == k;
        let n = self.state.step;
        let reward = shaped_reward(zeta, completed, n, k, p.kappa_cov, p.n_max);
        let duration = p.delta_ft + hover;

        self.state.position = position;
        self.state.awake = awake;
        self.state.zeta = zeta;
        self.state.elapsed += duration;
        self.state.step = n + 1;
        self.state.terminated = completed;
        self.state.over = completed || self.state.step >= p.n_max;

        let served = served_now
            .iter()
            .map(|&i| ServedNode {
                index: i,
                los: links[i].los,
                snr_linear: links[i].snr_linear,
                rate_bps: links[i].rate_bps(&self.scenario.radio),
            })
            .collect();
        Ok(StepResult {
            observation: self.observation(),
            reward,
            episode_over: self.state.over,
            terminated: completed,
            info: StepInfo {
                served,
                hover_time: hover,
                step_duration: duration,
                boundary_violation: violation,
            },
        })
    }

    /// Build the log row for a step that was just taken.
    pub fn record(&self, action: Action, result: &StepResult) -> StepRecord {
        StepRecord {
            n: self.state.step - 1,
            x: self.state.position[0],
            y: self.state.position[1],
            heading: action.heading,
            speed: action.speed,
            served_count: result.info.served.len(),
            served_los: result.info.served.iter().filter(|s| s.los).count(),
            hover_time_s: result.info.hover_time,
            step_duration_s: result.info.step_duration,
            zeta: self.state.zeta,
            reward: result.reward,
            done: result.episode_over,
            terminated: result.terminated,
        }
    }
}
