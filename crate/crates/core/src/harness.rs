//! Experiment orchestration: building scenarios from a configuration,
//! training, evaluation over independent realizations, baselines, sweeps,
//! and CSV emission.
//!
//! Realization `i` (1-based) of an evaluation or baseline batch draws its
//! fading and start position from index `EVAL_INDEX_BASE + i` of the
//! corresponding streams, so every method sees the same realizations.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::citymap::{generate_city, CityMap};
use crate::config::ExperimentConfig;
use crate::env::{place_nodes, Action, Env, Scenario, StepRecord};
use crate::error::{Error, Result};
use crate::metrics::{EpisodeMetrics, Summary};
use crate::planners::{
    aco_tour, coverage_radius_estimate, execute_waypoints, rrt_navigate, scan_plan, AcoConfig, WaypointPlan,
};
use crate::seeds::{derive_seed, rng_for, SeedLabel, SimRng};
use crate::td3::{Agent, EpisodeLog, Trainer};

pub const MANIFEST_PREFIX: &str = "# manifest_sha256=";
pub const EVAL_INDEX_BASE: u64 = 1000;

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub version: String,
    pub command: String,
    pub config: ExperimentConfig,
    pub seeds: BTreeMap<String, u64>,
    pub outputs: Vec<PathBuf>,
    pub hash: String,
}

impl RunManifest {
    pub fn new(command: &str, config: &ExperimentConfig) -> Result<RunManifest> {
        let seeds: BTreeMap<String, u64> = SeedLabel::ALL
            .iter()
            .map(|&l| (l.as_str().to_string(), derive_seed(config.seed, l, 0)))
            .collect();
        let version = env!("CARGO_PKG_VERSION").to_string();
        // where files live does not change what a run computes
        let mut hashed = config.clone();
        hashed.output_dir = PathBuf::new();
        hashed.evaluation.checkpoint = None;
        let canonical = serde_json::to_string(&(&version, command, &hashed, &seeds))?;
        let hash = format!("{:x}", Sha256::digest(canonical.as_bytes()));
        Ok(RunManifest {
            version,
            command: command.to_string(),
            config: config.clone(),
            seeds,
            outputs: Vec::new(),
            hash,
        })
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(format!("manifest_{}.json", self.command));
        std::fs::write(&path, serde_json::to_string_pretty(self)?).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

/// Write a CSV whose first line carries the manifest hash.
pub fn write_csv<I>(path: &Path, hash: &str, header: &str, rows: I) -> Result<()>
where
    I: IntoIterator<Item = String>,
{
    let mut out = String::new();
    let _ = writeln!(out, "{MANIFEST_PREFIX}{hash}");
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn build_map(cfg: &ExperimentConfig) -> Result<CityMap> {
    if let Some(file) = &cfg.map.file {
        return CityMap::load(file);
    }
    if cfg.map.buildings {
        generate_city(cfg.city, derive_seed(cfg.seed, SeedLabel::Map, 0))
    } else {
        let mut map = CityMap::flat(cfg.city.area_side);
        map.params = cfg.city;
        map.seed = derive_seed(cfg.seed, SeedLabel::Map, 0);
        Ok(map)
    }
}

/// Map, node layout and parameters shared by every run of a configuration.
pub fn build_scenario(cfg: &ExperimentConfig) -> Result<Arc<Scenario>> {
    let map = Arc::new(build_map(cfg)?);
    let mut rng = rng_for(cfg.seed, SeedLabel::NodePlacement, 0);
    let nodes = place_nodes(&map, cfg.scenario.num_nodes, &mut rng);
    Ok(Arc::new(Scenario::new(map, nodes, cfg.radio, cfg.scenario)?))
}

fn with_params(scenario: &Scenario, params: crate::env::ScenarioParams) -> Result<Arc<Scenario>> {
    Ok(Arc::new(Scenario::new(
        Arc::clone(&scenario.map),
        scenario.nodes.clone(),
        scenario.radio,
        params,
    )?))
}

/// Environment for evaluation realization `i`.
pub fn realization_env(scenario: Arc<Scenario>, master: u64, i: u64) -> Env {
    Env::new(
        scenario,
        derive_seed(master, SeedLabel::Fading, EVAL_INDEX_BASE + i),
        derive_seed(master, SeedLabel::StartPosition, EVAL_INDEX_BASE + i),
    )
}

/// Run the noise-free actor for one episode.
pub fn rollout_agent(env: &mut Env, agent: &Agent) -> Result<Vec<StepRecord>> {
    let mut obs = env.reset();
    let mut records = Vec::new();
    while !env.state().over {
        let u = agent.raw_action(&obs)?;
        let action = Action::from_normalized(u, agent.v_max);
        let res = env.step(action)?;
        records.push(env.record(action, &res));
        obs = res.observation;
    }
    Ok(records)
}

/// Uniform random actions in normalized space.
pub fn rollout_random<R: Rng + ?Sized>(env: &mut Env, rng: &mut R) -> Result<Vec<StepRecord>> {
    env.reset();
    let v_max = env.scenario().params.v_max;
    let mut records = Vec::new();
    while !env.state().over {
        let u = [rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)];
        let action = Action::from_normalized(u, v_max);
        let res = env.step(action)?;
        records.push(env.record(action, &res));
    }
    Ok(records)
}

/// One row of the per-run results table.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub method: String,
    pub seed: u64,
    pub num_nodes: usize,
    pub metrics: EpisodeMetrics,
}

impl RunRow {
    pub const CSV_HEADER: &'static str =
        "method,seed,K,mission_time_s,flight_energy_J,total_energy_J,served_count,steps";

    pub fn csv_row(&self) -> String {
        let m = &self.metrics;
        format!(
            "{},{},{},{},{},{},{},{}",
            self.method,
            self.seed,
            self.num_nodes,
            m.mission_time_s,
            m.energy.flight_j,
            m.energy.total_j(),
            m.served_count,
            m.steps
        )
    }
}

fn step_log_rows(records: &[StepRecord]) -> impl Iterator<Item = String> + '_ {
    records.iter().map(StepRecord::csv_row)
}

/// Seeded network initialization plus the training loop, with no file output.
pub fn train_agent(
    cfg: &ExperimentConfig,
    scenario: Arc<Scenario>,
    on_episode: impl FnMut(&EpisodeLog),
) -> Result<(Agent, Vec<EpisodeLog>)> {
    let mut init_rng = rng_for(cfg.seed, SeedLabel::NetworkInit, 0);
    let agent = Agent::new(
        scenario.num_nodes(),
        scenario.params.v_max,
        cfg.td3.clone(),
        &mut init_rng,
    )?;
    let mut trainer = Trainer::new(
        agent,
        derive_seed(cfg.seed, SeedLabel::Exploration, 0),
        derive_seed(cfg.seed, SeedLabel::Replay, 0),
    );
    let mut env = Env::new(
        scenario,
        derive_seed(cfg.seed, SeedLabel::Fading, 0),
        derive_seed(cfg.seed, SeedLabel::StartPosition, 0),
    );
    let logs = trainer.train(&mut env, cfg.td3.episodes, on_episode)?;
    Ok((trainer.agent, logs))
}

/// Deterministic-actor episodes over realizations `1..=n`, in order.
pub fn evaluate_agent(
    cfg: &ExperimentConfig,
    scenario: &Arc<Scenario>,
    agent: &Agent,
    n: usize,
) -> Result<Vec<Vec<StepRecord>>> {
    if agent.num_nodes != scenario.num_nodes() {
        return Err(Error::DimensionMismatch {
            expected: scenario.num_nodes(),
            got: agent.num_nodes,
        });
    }
    (1..=n as u64)
        .into_par_iter()
        .map(|i| {
            let mut env = realization_env(Arc::clone(scenario), cfg.seed, i);
            rollout_agent(&mut env, agent)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineMethod {
    Scan,
    Aco,
    Rrt,
}

impl BaselineMethod {
    pub const ALL: [BaselineMethod; 3] = [BaselineMethod::Scan, BaselineMethod::Aco, BaselineMethod::Rrt];

    pub fn as_str(self) -> &'static str {
        match self {
            BaselineMethod::Scan => "scan",
            BaselineMethod::Aco => "aco",
            BaselineMethod::Rrt => "rrt",
        }
    }
}

/// One baseline mission on realization `i`. Scan always starts from the
/// lower-left corner; the other methods share the realization's start.
pub fn run_baseline_episode(
    cfg: &ExperimentConfig,
    scenario: &Arc<Scenario>,
    method: BaselineMethod,
    i: u64,
) -> Result<Vec<StepRecord>> {
    let mut params = scenario.params;
    params.n_max = cfg.baselines.max_steps;
    if method == BaselineMethod::Scan {
        params.fixed_start = Some([0.0, 0.0]);
    }
    let sc = with_params(scenario, params)?;
    let mut env = realization_env(Arc::clone(&sc), cfg.seed, i);
    env.reset();
    let start = env.state().position;
    let aco_order = || {
        let aco = AcoConfig {
            seed: derive_seed(cfg.seed, SeedLabel::Aco, i),
            ..cfg.baselines.aco.clone()
        };
        aco_tour(&sc.nodes, start, &aco)
    };
    match method {
        BaselineMethod::Scan => {
            let spacing = cfg
                .baselines
                .scan_spacing
                .unwrap_or_else(|| std::f64::consts::SQRT_2 * coverage_radius_estimate(params.altitude, &sc.radio))
                .min(sc.area_side());
            if !(spacing > 0.0) {
                return Err(Error::invalid("coverage radius is zero; set baselines.scan_spacing"));
            }
            let plan = scan_plan(sc.area_side(), spacing, params.v_max)?;
            execute_waypoints(&mut env, &plan)
        }
        BaselineMethod::Aco => {
            let order = aco_order()?;
            let plan = WaypointPlan::new(order.iter().map(|&k| sc.nodes[k]).collect(), params.v_max);
            execute_waypoints(&mut env, &plan)
        }
        BaselineMethod::Rrt => {
            let order = aco_order()?;
            let rrt = crate::planners::RrtConfig {
                seed: derive_seed(cfg.seed, SeedLabel::Rrt, i),
                ..cfg.baselines.rrt.clone()
            };
            let mut rng = SimRng::seed_from_u64(rrt.seed);
            rrt_navigate(&mut env, &order, &rrt, &mut rng)
        }
    }
}

fn rows_and_summary(
    cfg: &ExperimentConfig,
    method: &str,
    k: usize,
    runs: &[Vec<StepRecord>],
) -> (Vec<RunRow>, Summary) {
    let metrics: Vec<EpisodeMetrics> = runs
        .iter()
        .map(|r| EpisodeMetrics::from_records(r, &cfg.power, cfg.scenario.delta_ft))
        .collect();
    let summary = Summary::from_episodes(method, k, &metrics);
    let rows = metrics
        .into_iter()
        .enumerate()
        .map(|(i, m)| RunRow {
            method: method.to_string(),
            seed: i as u64 + 1,
            num_nodes: k,
            metrics: m,
        })
        .collect();
    (rows, summary)
}

fn out_dir(cfg: &ExperimentConfig) -> Result<&Path> {
    let dir = cfg.output_dir.as_path();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    Ok(dir)
}

fn finish(mut manifest: RunManifest, dir: &Path, outputs: Vec<PathBuf>) -> Result<PathBuf> {
    manifest.outputs = outputs;
    manifest.write(dir)
}

pub fn cmd_generate_map(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let dir = out_dir(cfg)?;
    let manifest = RunManifest::new("generate-map", cfg)?;
    let map = build_map(cfg)?;
    let path = dir.join("map.json");
    map.save(&path)?;
    let outputs = vec![path];
    finish(manifest, dir, outputs.clone())?;
    Ok(outputs)
}

pub fn cmd_train(cfg: &ExperimentConfig, mut progress: impl FnMut(&EpisodeLog)) -> Result<Vec<PathBuf>> {
    let dir = out_dir(cfg)?;
    let manifest = RunManifest::new("train", cfg)?;
    let scenario = build_scenario(cfg)?;
    let (agent, logs) = train_agent(cfg, scenario, |log| progress(log))?;
    let log_path = dir.join("training_log.csv");
    write_csv(
        &log_path,
        &manifest.hash,
        EpisodeLog::CSV_HEADER,
        logs.iter().map(EpisodeLog::csv_row),
    )?;
    let ckpt = dir.join("checkpoint");
    agent.save(&ckpt)?;
    let outputs = vec![log_path, ckpt];
    finish(manifest, dir, outputs.clone())?;
    Ok(outputs)
}

fn checkpoint_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.evaluation
        .checkpoint
        .clone()
        .unwrap_or_else(|| cfg.output_dir.join("checkpoint"))
}

pub fn cmd_evaluate(cfg: &ExperimentConfig) -> Result<(Vec<PathBuf>, Summary)> {
    let dir = out_dir(cfg)?;
    let manifest = RunManifest::new("evaluate", cfg)?;
    let agent = Agent::load(&checkpoint_dir(cfg))?;
    let scenario = build_scenario(cfg)?;
    let runs = evaluate_agent(cfg, &scenario, &agent, cfg.evaluation.realizations)?;
    let k = scenario.num_nodes();
    let (rows, summary) = rows_and_summary(cfg, "td3", k, &runs);
    let mut outputs = Vec::new();
    let eval_path = dir.join("evaluation.csv");
    write_csv(
        &eval_path,
        &manifest.hash,
        RunRow::CSV_HEADER,
        rows.iter().map(RunRow::csv_row),
    )?;
    outputs.push(eval_path);
    let summary_path = dir.join("summary.csv");
    write_csv(&summary_path, &manifest.hash, Summary::CSV_HEADER, [summary.csv_row()])?;
    outputs.push(summary_path);
    if cfg.evaluation.step_logs {
        for (i, run) in runs.iter().enumerate() {
            let p = dir.join("episodes").join(format!("td3_{:03}.csv", i + 1));
            write_csv(&p, &manifest.hash, StepRecord::CSV_HEADER, step_log_rows(run))?;
            outputs.push(p);
        }
    }
    finish(manifest, dir, outputs.clone())?;
    Ok((outputs, summary))
}

pub fn cmd_baseline(cfg: &ExperimentConfig, methods: &[BaselineMethod]) -> Result<(Vec<PathBuf>, Vec<Summary>)> {
    let dir = out_dir(cfg)?;
    let manifest = RunManifest::new("baseline", cfg)?;
    let scenario = build_scenario(cfg)?;
    let k = scenario.num_nodes();
    let n = cfg.evaluation.realizations as u64;
    let mut all_rows = Vec::new();
    let mut summaries = Vec::new();
    let mut outputs = Vec::new();
    for &method in methods {
        let runs: Vec<Vec<StepRecord>> = (1..=n)
            .into_par_iter()
            .map(|i| run_baseline_episode(cfg, &scenario, method, i))
            .collect::<Result<_>>()?;
        let (rows, summary) = rows_and_summary(cfg, method.as_str(), k, &runs);
        all_rows.extend(rows);
        summaries.push(summary);
        if cfg.evaluation.step_logs {
            for (i, run) in runs.iter().enumerate() {
                let p = dir
                    .join("episodes")
                    .join(format!("{}_{:03}.csv", method.as_str(), i + 1));
                write_csv(&p, &manifest.hash, StepRecord::CSV_HEADER, step_log_rows(run))?;
                outputs.push(p);
            }
        }
    }
    let rows_path = dir.join("baseline.csv");
    write_csv(
        &rows_path,
        &manifest.hash,
        RunRow::CSV_HEADER,
        all_rows.iter().map(RunRow::csv_row),
    )?;
    let summary_path = dir.join("baseline_summary.csv");
    write_csv(
        &summary_path,
        &manifest.hash,
        Summary::CSV_HEADER,
        summaries.iter().map(Summary::csv_row),
    )?;
    outputs.insert(0, summary_path);
    outputs.insert(0, rows_path);
    finish(manifest, dir, outputs.clone())?;
    Ok((outputs, summaries))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    GammaBuffer,
    NeuronsBuffer,
    Altitude,
}

impl SweepKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepKind::GammaBuffer => "gamma-buffer",
            SweepKind::NeuronsBuffer => "neurons-buffer",
            SweepKind::Altitude => "altitude",
        }
    }
}

/// Train and evaluate one configuration cell.
pub fn train_and_evaluate(cfg: &ExperimentConfig) -> Result<Summary> {
    let scenario = build_scenario(cfg)?;
    let (agent, _) = train_agent(cfg, Arc::clone(&scenario), |_| {})?;
    let runs = evaluate_agent(cfg, &scenario, &agent, cfg.evaluation.realizations)?;
    Ok(rows_and_summary(cfg, "td3", scenario.num_nodes(), &runs).1)
}

pub fn cmd_sweep(cfg: &ExperimentConfig, kind: SweepKind) -> Result<Vec<PathBuf>> {
    let dir = out_dir(cfg)?;
    let manifest = RunManifest::new(&format!("sweep-{}", kind.as_str()), cfg)?;
    let s = &cfg.sweep;
    let (header, cells): (&str, Vec<(String, ExperimentConfig)>) = match kind {
        SweepKind::GammaBuffer => (
            "gamma,buffer_size",
            grid(
                &s.gammas,
                &s.buffer_sizes,
                |c, &g, &b| {
                    c.td3.gamma = g;
                    c.td3.buffer_capacity = b;
                    c.td3.hidden_units = s.gamma_sweep_hidden_units;
                    format!("{g},{b}")
                },
                cfg,
            ),
        ),
        SweepKind::NeuronsBuffer => (
            "hidden_units,buffer_size",
            grid(
                &s.hidden_units,
                &s.buffer_sizes,
                |c, &h, &b| {
                    c.td3.hidden_units = h;
                    c.td3.buffer_capacity = b;
                    format!("{h},{b}")
                },
                cfg,
            ),
        ),
        SweepKind::Altitude => (
            "altitude",
            s.altitudes
                .iter()
                .map(|&h| {
                    let mut c = cfg.clone();
                    c.scenario.altitude = h;
                    (format!("{h}"), c)
                })
                .collect(),
        ),
    };
    for (_, c) in &cells {
        c.validate()?;
    }
    let summaries: Vec<Summary> = cells
        .par_iter()
        .map(|(_, c)| train_and_evaluate(c))
        .collect::<Result<_>>()?;
    let path = dir.join(format!("sweep_{}.csv", kind.as_str().replace('-', "_")));
    let header = format!("{header},mean_completion_time_s,std,mean_flight_energy_J,mean_los_ratio,completion_rate");
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let rows = cells.iter().zip(&summaries).map(|((key, _), s)| {
        format!(
            "{key},{},{},{},{},{}",
            opt(s.mean_completion_time_s),
            opt(s.std_completion_time_s),
            s.mean_flight_energy_j,
            opt(s.mean_los_ratio),
            s.completion_rate
        )
    });
    write_csv(&path, &manifest.hash, &header, rows)?;
    finish(manifest, dir, vec![path.clone()])?;
    Ok(vec![path])
}

fn grid<A, B>(
    rows: &[A],
    cols: &[B],
    mut apply: impl FnMut(&mut ExperimentConfig, &A, &B) -> String,
    base: &ExperimentConfig,
) -> Vec<(String, ExperimentConfig)> {
    let mut out = Vec::with_capacity(rows.len() * cols.len());
    for a in rows {
        for b in cols {
            let mut c = base.clone();
            let key = apply(&mut c, a, b);
            out.push((key, c));
        }
    }
    out
}
