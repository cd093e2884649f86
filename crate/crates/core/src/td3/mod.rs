//! TD3 learner for the data-collection MDP.
//!
//! Twin critics with clipped double-Q targets, target-policy smoothing,
//! delayed actor updates and Polyak-averaged target networks. Each of the
//! actor and the two critics carries its own dimension-spread input stage,
//! and the bootstrap term is masked only on true task completion.

pub mod replay;
pub mod spread;

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::env::{Action, Env};
use crate::error::{Error, Result};
use crate::nn::Activation;
use crate::seeds::SimRng;

pub use replay::{Batch, ReplayBuffer, Transition};
pub use spread::{SpreadAdam, SpreadGrads, SpreadNet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Td3Config {
    /// Training episodes.
    pub episodes: usize,
    pub gamma: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Updates start once the buffer holds more than this many transitions.
    pub warmup: usize,
    /// Initial exploration noise std in normalized action units.
    pub exploration_std: f64,
    /// Per-episode multiplicative decay of the exploration std.
    pub exploration_decay: f64,
    pub target_noise_std: f64,
    pub target_noise_clip: f64,
    pub policy_delay: usize,
    pub learning_rate: f64,
    pub hidden_units: usize,
    pub hidden_layers: usize,
    /// Scale applied to the actor's output layer at initialization.
    pub actor_output_scale: f64,
}

impl Default for Td3Config {
    fn default() -> Self {
        Td3Config {
            episodes: 8000,
            gamma: 0.99,
            tau: 0.005,
            batch_size: 256,
            buffer_capacity: 100_000,
            warmup: 2000,
            exploration_std: 0.6,
            exploration_decay: 0.999,
            target_noise_std: 0.2,
            target_noise_clip: 0.5,
            policy_delay: 2,
            learning_rate: 1e-4,
            hidden_units: 400,
            hidden_layers: 2,
            actor_output_scale: 1e-2,
        }
    }
}

impl Td3Config {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::invalid("gamma must be in (0,1)"));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::invalid("tau must be in (0,1]"));
        }
        if self.batch_size == 0 || self.batch_size > self.warmup || self.warmup > self.buffer_capacity {
            return Err(Error::invalid("need 0 < batch_size <= warmup <= buffer_capacity"));
        }
        if self.policy_delay < 1 {
            return Err(Error::invalid("policy_delay must be at least 1"));
        }
        if self.hidden_units == 0 || self.hidden_layers == 0 {
            return Err(Error::invalid("networks need at least one hidden layer"));
        }
        if !(self.learning_rate > 0.0) || !(self.exploration_std >= 0.0) || !(self.target_noise_std >= 0.0) {
            return Err(Error::invalid(
                "learning rate must be positive and noise scales non-negative",
            ));
        }
        Ok(())
    }

    fn hidden(&self) -> Vec<usize> {
        vec![self.hidden_units; self.hidden_layers]
    }
}

/// Deterministic policy over a batch of observations.
pub trait Policy {
    fn actions(&self, obs: ArrayView2<f64>) -> Result<Array2<f64>>;
}

/// State-action value estimate over a batch.
pub trait QFunction {
    fn q_values(&self, obs: ArrayView2<f64>, actions: ArrayView2<f64>) -> Result<Array1<f64>>;
}

impl Policy for SpreadNet {
    fn actions(&self, obs: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.predict(obs, None)
    }
}

impl QFunction for SpreadNet {
    fn q_values(&self, obs: ArrayView2<f64>, actions: ArrayView2<f64>) -> Result<Array1<f64>> {
        self.predict_column(obs, Some(actions))
    }
}

/// Target action with clipped Gaussian smoothing, kept inside [-1,1].
pub fn smoothed_target_actions<P: Policy + ?Sized, R: Rng + ?Sized>(
    policy: &P,
    next_obs: ArrayView2<f64>,
    noise_std: f64,
    noise_clip: f64,
    rng: &mut R,
) -> Result<Array2<f64>> {
    let mut a = policy.actions(next_obs)?;
    a.mapv_inplace(|v| {
        let eps: f64 = StandardNormal.sample(rng);
        (v + (eps * noise_std).clamp(-noise_clip, noise_clip)).clamp(-1.0, 1.0)
    });
    Ok(a)
}

/// `y = r + (1 − d)·γ·min(q1, q2)`.
pub fn td_targets(
    rewards: ArrayView1<f64>,
    done: ArrayView1<f64>,
    q1: ArrayView1<f64>,
    q2: ArrayView1<f64>,
    gamma: f64,
) -> Array1<f64> {
    let mut y = Array1::zeros(rewards.len());
    for i in 0..rewards.len() {
        y[i] = if done[i] > 0.5 {
            rewards[i]
        } else {
            rewards[i] + (1.0 - done[i]) * gamma * q1[i].min(q2[i])
        };
    }
    y
}

#[allow(clippy::too_many_arguments)]
pub fn compute_target<P, Q1, Q2, R>(
    target_actor: &P,
    target_q1: &Q1,
    target_q2: &Q2,
    batch: &Batch,
    gamma: f64,
    noise_std: f64,
    noise_clip: f64,
    rng: &mut R,
) -> Result<Array1<f64>>
where
    P: Policy + ?Sized,
    Q1: QFunction + ?Sized,
    Q2: QFunction + ?Sized,
    R: Rng + ?Sized,
{
    let next_actions = smoothed_target_actions(target_actor, batch.next_obs.view(), noise_std, noise_clip, rng)?;
    let q1 = target_q1.q_values(batch.next_obs.view(), next_actions.view())?;
    let q2 = target_q2.q_values(batch.next_obs.view(), next_actions.view())?;
    Ok(td_targets(
        batch.rewards.view(),
        batch.done.view(),
        q1.view(),
        q2.view(),
        gamma,
    ))
}

/// Mean squared error and its gradient w.r.t. the predictions.
pub fn mse_with_grad(pred: &Array2<f64>, target: &Array1<f64>) -> (f64, Array2<f64>) {
    let n = target.len() as f64;
    let diff = &pred.column(0) - target;
    let loss = diff.iter().map(|d| d * d).sum::<f64>() / n;
    let grad = (diff * (2.0 / n)).insert_axis(Axis(1));
    (loss, grad)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    pub q1_loss: f64,
    pub q2_loss: f64,
    pub actor_grad_norm: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Agent {
    pub config: Td3Config,
    pub num_nodes: usize,
    pub v_max: f64,
    pub actor: SpreadNet,
    pub actor_target: SpreadNet,
    pub critic1: SpreadNet,
    pub critic2: SpreadNet,
    pub critic1_target: SpreadNet,
    pub critic2_target: SpreadNet,
    pub actor_opt: SpreadAdam,
    pub critic1_opt: SpreadAdam,
    pub critic2_opt: SpreadAdam,
    pub noise_scale: f64,
    pub episodes_done: u64,
    pub critic_updates: u64,
    pub actor_updates: u64,
}

impl Agent {
    pub fn new<R: Rng + ?Sized>(num_nodes: usize, v_max: f64, config: Td3Config, rng: &mut R) -> Result<Agent> {
        config.validate()?;
        if num_nodes == 0 {
            return Err(Error::invalid("agent needs at least one node"));
        }
        let hidden = config.hidden();
        let mut actor = SpreadNet::new(num_nodes, 0, &hidden, 2, Activation::Tanh, rng);
        actor.body.scale_output_layer(config.actor_output_scale);
        let critic1 = SpreadNet::new(num_nodes, 2, &hidden, 1, Activation::Identity, rng);
        let critic2 = SpreadNet::new(num_nodes, 2, &hidden, 1, Activation::Identity, rng);
        let lr = config.learning_rate;
        Ok(Agent {
            actor_opt: SpreadAdam::new(&actor, lr),
            critic1_opt: SpreadAdam::new(&critic1, lr),
            critic2_opt: SpreadAdam::new(&critic2, lr),
            actor_target: actor.clone(),
            critic1_target: critic1.clone(),
            critic2_target: critic2.clone(),
            actor,
            critic1,
            critic2,
            noise_scale: config.exploration_std,
            num_nodes,
            v_max,
            config,
            episodes_done: 0,
            critic_updates: 0,
            actor_updates: 0,
        })
    }

    pub fn obs_dim(&self) -> usize {
        2 * self.num_nodes + spread::LOW_DIM
    }

    /// Actor output in [-1,1]².
    pub fn raw_action(&self, obs: &[f64]) -> Result<[f64; 2]> {
        let view = ArrayView2::from_shape((1, obs.len()), obs).map_err(|_| Error::DimensionMismatch {
            expected: self.obs_dim(),
            got: obs.len(),
        })?;
        let a = self.actor.predict(view, None)?;
        Ok([a[[0, 0]], a[[0, 1]]])
    }

    /// Returns the normalized action (what gets stored) and its physical mapping.
    pub fn select_action<R: Rng + ?Sized>(
        &self,
        obs: &[f64],
        explore: bool,
        rng: &mut R,
    ) -> Result<([f64; 2], Action)> {
        let mut u = self.raw_action(obs)?;
        if explore {
            for v in &mut u {
                let eps: f64 = StandardNormal.sample(rng);
                *v = (*v + self.noise_scale * eps).clamp(-1.0, 1.0);
            }
        }
        Ok((u, Action::from_normalized(u, self.v_max)))
    }

    pub fn end_episode(&mut self) {
        self.noise_scale *= self.config.exploration_decay;
        self.episodes_done += 1;
    }

    pub fn compute_target<R: Rng + ?Sized>(&self, batch: &Batch, rng: &mut R) -> Result<Array1<f64>> {
        compute_target(
            &self.actor_target,
            &self.critic1_target,
            &self.critic2_target,
            batch,
            self.config.gamma,
            self.config.target_noise_std,
            self.config.target_noise_clip,
            rng,
        )
    }

    /// One regression step of each critic toward `targets`; returns the
    /// pre-step losses.
    pub fn critic_step(&mut self, batch: &Batch, targets: &Array1<f64>) -> Result<(f64, f64)> {
        let mut losses = [0.0; 2];
        let critics = [
            (&mut self.critic1, &mut self.critic1_opt),
            (&mut self.critic2, &mut self.critic2_opt),
        ];
        for (i, (critic, opt)) in critics.into_iter().enumerate() {
            let (q, cache) = critic.forward(batch.obs.view(), Some(batch.actions.view()))?;
            let (loss, grad) = mse_with_grad(&q, targets);
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!(
                    "critic {} loss after {} critic updates (max |target| {:e})",
                    i + 1,
                    self.critic_updates,
                    targets.iter().fold(0.0f64, |m, v| m.max(v.abs()))
                )));
            }
            let (grads, _) = critic.backward(&cache, grad.view())?;
            opt.step(critic, &grads)?;
            losses[i] = loss;
        }
        self.critic_updates += 1;
        Ok((losses[0], losses[1]))
    }

    pub fn critic_update<R: Rng + ?Sized>(&mut self, batch: &Batch, rng: &mut R) -> Result<(f64, f64)> {
        let y = self.compute_target(batch, rng)?;
        self.critic_step(batch, &y)
    }

    /// Deterministic policy gradient step ascending the first critic's value,
    /// followed by soft updates of all target networks. Returns the actor
    /// gradient norm.
    pub fn actor_update(&mut self, batch: &Batch) -> Result<f64> {
        let (actions, actor_cache) = self.actor.forward(batch.obs.view(), None)?;
        let (q, critic_cache) = self.critic1.forward(batch.obs.view(), Some(actions.view()))?;
        let grad_q = Array2::from_elem(q.raw_dim(), -1.0 / batch.len() as f64);
        let (_, d_actions) = self.critic1.backward(&critic_cache, grad_q.view())?;
        let d_actions = d_actions.expect("critics take the action as extra input");
        let (grads, _) = self.actor.backward(&actor_cache, d_actions.view())?;
        if !grads.is_finite() {
            return Err(Error::NonFinite("actor gradient".into()));
        }
        self.actor_opt.step(&mut self.actor, &grads)?;
        self.actor_updates += 1;
        self.soft_update_targets();
        Ok(grads.norm())
    }

    pub fn soft_update_targets(&mut self) {
        let tau = self.config.tau;
        self.actor_target.soft_update_from(&self.actor, tau);
        self.critic1_target.soft_update_from(&self.critic1, tau);
        self.critic2_target.soft_update_from(&self.critic2, tau);
    }

    /// One learning step from the buffer: critics every call, actor and
    /// targets every `policy_delay`-th call.
    pub fn update<R: Rng + ?Sized>(&mut self, buffer: &ReplayBuffer, rng: &mut R) -> Result<UpdateStats> {
        let batch = buffer.sample(self.config.batch_size, rng)?;
        let (q1_loss, q2_loss) = self.critic_update(&batch, rng)?;
        let actor_grad_norm = if self.critic_updates.is_multiple_of(self.config.policy_delay as u64) {
            Some(self.actor_update(&batch)?)
        } else {
            None
        };
        Ok(UpdateStats {
            q1_loss,
            q2_loss,
            actor_grad_norm,
        })
    }

    fn networks(&self) -> [(&'static str, &SpreadNet, Option<&SpreadAdam>); 6] {
        [
            ("actor", &self.actor, Some(&self.actor_opt)),
            ("actor_target", &self.actor_target, None),
            ("critic1", &self.critic1, Some(&self.critic1_opt)),
            ("critic1_target", &self.critic1_target, None),
            ("critic2", &self.critic2, Some(&self.critic2_opt)),
            ("critic2_target", &self.critic2_target, None),
        ]
    }

    /// Write one JSON file per network plus `manifest.json`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut files = BTreeMap::new();
        for (name, net, opt) in self.networks() {
            let file = format!("{name}.json");
            let body = serde_json::to_string(&NetworkFile {
                network: net.clone(),
                optimizer: opt.cloned(),
            })?;
            let path = dir.join(&file);
            std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
            files.insert(name.to_string(), file);
        }
        let manifest = CheckpointManifest {
            format_version: CHECKPOINT_FORMAT,
            num_nodes: self.num_nodes,
            v_max: self.v_max,
            episodes_done: self.episodes_done,
            critic_updates: self.critic_updates,
            actor_updates: self.actor_updates,
            noise_scale: self.noise_scale,
            config: self.config.clone(),
            networks: files,
        };
        let path = dir.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(&manifest)?).map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: &Path) -> Result<Agent> {
        let manifest_path = dir.join("manifest.json");
        if !manifest_path.exists() {
            return Err(Error::MissingCheckpoint(dir.to_path_buf()));
        }
        let text = std::fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
        let manifest: CheckpointManifest = serde_json::from_str(&text)?;
        if manifest.format_version != CHECKPOINT_FORMAT {
            return Err(Error::Serde(format!(
                "unsupported checkpoint format {}",
                manifest.format_version
            )));
        }
        let read = |name: &str| -> Result<NetworkFile> {
            let file = manifest
                .networks
                .get(name)
                .ok_or_else(|| Error::Serde(format!("checkpoint manifest lacks `{name}`")))?;
            let path = dir.join(file);
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            Ok(serde_json::from_str(&text)?)
        };
        let with_opt = |name: &str| -> Result<(SpreadNet, SpreadAdam)> {
            let f = read(name)?;
            let opt = f
                .optimizer
                .ok_or_else(|| Error::Serde(format!("`{name}` is missing its optimizer state")))?;
            Ok((f.network, opt))
        };
        let (actor, actor_opt) = with_opt("actor")?;
        let (critic1, critic1_opt) = with_opt("critic1")?;
        let (critic2, critic2_opt) = with_opt("critic2")?;
        let agent = Agent {
            config: manifest.config,
            num_nodes: manifest.num_nodes,
            v_max: manifest.v_max,
            actor,
            actor_target: read("actor_target")?.network,
            critic1,
            critic2,
            critic1_target: read("critic1_target")?.network,
            critic2_target: read("critic2_target")?.network,
            actor_opt,
            critic1_opt,
            critic2_opt,
            noise_scale: manifest.noise_scale,
            episodes_done: manifest.episodes_done,
            critic_updates: manifest.critic_updates,
            actor_updates: manifest.actor_updates,
        };
        if agent.actor.num_nodes != agent.num_nodes {
            return Err(Error::DimensionMismatch {
                expected: agent.num_nodes,
                got: agent.actor.num_nodes,
            });
        }
        Ok(agent)
    }
}

const CHECKPOINT_FORMAT: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct NetworkFile {
    network: SpreadNet,
    optimizer: Option<SpreadAdam>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointManifest {
    format_version: u32,
    num_nodes: usize,
    v_max: f64,
    episodes_done: u64,
    critic_updates: u64,
    actor_updates: u64,
    noise_scale: f64,
    config: Td3Config,
    networks: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub episode: u64,
    pub accumulated_reward: f64,
    pub steps: usize,
    pub mission_time_s: f64,
    pub completed: bool,
    pub q1_loss_mean: Option<f64>,
    pub q2_loss_mean: Option<f64>,
    pub noise_scale: f64,
}

impl EpisodeLog {
    pub const CSV_HEADER: &'static str =
        "episode,accumulated_reward,steps,mission_time_s,completed,q1_loss_mean,q2_loss_mean,noise_scale";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{}",
            self.episode,
            self.accumulated_reward,
            self.steps,
            self.mission_time_s,
            self.completed as u8,
            opt(self.q1_loss_mean),
            opt(self.q2_loss_mean),
            self.noise_scale
        )
    }
}

/// Interaction loop: agent, replay buffer and the two training streams.
pub struct Trainer {
    pub agent: Agent,
    pub buffer: ReplayBuffer,
    explore_rng: SimRng,
    replay_rng: SimRng,
}

impl Trainer {
    pub fn new(agent: Agent, explore_seed: u64, replay_seed: u64) -> Trainer {
        let buffer = ReplayBuffer::new(agent.config.buffer_capacity);
        Trainer {
            agent,
            buffer,
            explore_rng: SimRng::seed_from_u64(explore_seed),
            replay_rng: SimRng::seed_from_u64(replay_seed),
        }
    }

    fn ready(&self) -> bool {
        self.buffer.len() > self.agent.config.warmup && self.buffer.len() >= self.agent.config.batch_size
    }

    /// Run one exploring episode, storing transitions and learning after
    /// every environment step once the buffer is warm.
    pub fn run_episode(&mut self, env: &mut Env) -> Result<EpisodeLog> {
        let mut obs = env.reset();
        let noise_scale = self.agent.noise_scale;
        let mut total_reward = 0.0;
        let (mut q1_sum, mut q2_sum, mut n_updates) = (0.0, 0.0, 0usize);
        loop {
            let (u, action) = self.agent.select_action(&obs, true, &mut self.explore_rng)?;
            let res = env.step(action)?;
            total_reward += res.reward;
            self.buffer.push(Transition {
                obs: std::mem::take(&mut obs),
                action: u,
                reward: res.reward,
                next_obs: res.observation.clone(),
                done: res.terminated,
            });
            if self.ready() {
                let stats = self.agent.update(&self.buffer, &mut self.replay_rng)?;
                q1_sum += stats.q1_loss;
                q2_sum += stats.q2_loss;
                n_updates += 1;
            }
            obs = res.observation;
            if res.episode_over {
                break;
            }
        }
        let log = EpisodeLog {
            episode: self.agent.episodes_done,
            accumulated_reward: total_reward,
            steps: env.state().step,
            mission_time_s: env.state().elapsed,
            completed: env.state().terminated,
            q1_loss_mean: (n_updates > 0).then(|| q1_sum / n_updates as f64),
            q2_loss_mean: (n_updates > 0).then(|| q2_sum / n_updates as f64),
            noise_scale,
        };
        self.agent.end_episode();
        Ok(log)
    }

    pub fn train(
        &mut self,
        env: &mut Env,
        episodes: usize,
        mut on_episode: impl FnMut(&EpisodeLog),
    ) -> Result<Vec<EpisodeLog>> {
        let mut logs = Vec::with_capacity(episodes);
        for _ in 0..episodes {
            let log = self.run_episode(env)?;
            on_episode(&log);
            logs.push(log);
        }
        Ok(logs)
    }
}
