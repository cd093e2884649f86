//! Experiment configuration. Every field is optional in the TOML file and
//! falls back to the defaults below; unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::RadioConfig;
use crate::citymap::ItuParams;
use crate::env::ScenarioParams;
use crate::error::{Error, Result};
use crate::metrics::PowerModelParams;
use crate::planners::{AcoConfig, RrtConfig};
use crate::td3::Td3Config;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; every random stream is derived from it.
    pub seed: u64,
    pub output_dir: PathBuf,
    pub map: MapSource,
    pub city: ItuParams,
    pub radio: RadioConfig,
    pub scenario: ScenarioParams,
    pub td3: Td3Config,
    pub baselines: BaselineConfig,
    pub evaluation: EvaluationConfig,
    pub sweep: SweepConfig,
    pub power: PowerModelParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 1,
            output_dir: PathBuf::from("runs"),
            map: MapSource::default(),
            city: ItuParams::default(),
            radio: RadioConfig::default(),
            scenario: ScenarioParams::default(),
            td3: Td3Config::default(),
            baselines: BaselineConfig::default(),
            evaluation: EvaluationConfig::default(),
            sweep: SweepConfig::default(),
            power: PowerModelParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapSource {
    /// Generate buildings; `false` gives an empty map of the same size.
    pub buildings: bool,
    /// Load this map JSON instead of generating one.
    pub file: Option<PathBuf>,
}

impl Default for MapSource {
    fn default() -> Self {
        MapSource {
            buildings: true,
            file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    /// Scan strip spacing in metres; `None` uses `√2 ×` the coverage radius.
    pub scan_spacing: Option<f64>,
    /// Step cap for baseline missions, replacing `scenario.n_max`.
    pub max_steps: usize,
    /// The `seed` field is replaced per realization by the harness.
    pub aco: AcoConfig,
    /// The `seed` field is replaced per realization by the harness.
    pub rrt: RrtConfig,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            scan_spacing: None,
            max_steps: 2000,
            aco: AcoConfig::default(),
            rrt: RrtConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub realizations: usize,
    /// Checkpoint directory; `<output_dir>/checkpoint` when absent.
    pub checkpoint: Option<PathBuf>,
    /// Also write the per-step log of every realization.
    pub step_logs: bool,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            realizations: 25,
            checkpoint: None,
            step_logs: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub gammas: Vec<f64>,
    pub buffer_sizes: Vec<usize>,
    pub hidden_units: Vec<usize>,
    /// Hidden width used by the discount-factor sweep.
    pub gamma_sweep_hidden_units: usize,
    pub altitudes: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            gammas: vec![0.8, 0.9, 0.99],
            buffer_sizes: vec![50_000, 75_000, 100_000, 125_000, 150_000],
            hidden_units: vec![200, 400, 600],
            gamma_sweep_hidden_units: 200,
            altitudes: vec![75.0, 85.0, 95.0, 105.0, 115.0],
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        ExperimentConfig::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Check every section; failures surface as configuration errors.
    pub fn validate(&self) -> Result<()> {
        let wrap = |section: &str, r: Result<()>| {
            r.map_err(|e| match e {
                Error::InvalidParameter(msg) => Error::Config(format!("[{section}] {msg}")),
                other => other,
            })
        };
        wrap("city", self.city.validate())?;
        wrap("radio", self.radio.validate())?;
        wrap("td3", self.td3.validate())?;
        wrap("power", self.power.validate())?;
        wrap("baselines.aco", self.baselines.aco.validate())?;
        wrap("baselines.rrt", self.baselines.rrt.validate())?;
        let s = &self.scenario;
        if s.num_nodes == 0 || s.k_up == 0 || s.n_max == 0 {
            return Err(Error::Config(
                "[scenario] num_nodes, k_up and n_max must be positive".into(),
            ));
        }
        if !(s.altitude > 0.0 && s.v_max > 0.0 && s.delta_ft > 0.0 && s.d_file > 0.0) {
            return Err(Error::Config(
                "[scenario] altitude, v_max, delta_ft and d_file must be positive".into(),
            ));
        }
        if let Some([x, y]) = s.fixed_start {
            let d = self.city.area_side;
            if !(0.0..=d).contains(&x) || !(0.0..=d).contains(&y) {
                return Err(Error::Config("[scenario] fixed_start lies outside the area".into()));
            }
        }
        if self.evaluation.realizations == 0 {
            return Err(Error::Config("[evaluation] realizations must be positive".into()));
        }
        if self.baselines.max_steps == 0 {
            return Err(Error::Config("[baselines] max_steps must be positive".into()));
        }
        if self
            .baselines
            .scan_spacing
            .is_some_and(|v| !(v > 0.0 && v <= self.city.area_side))
        {
            return Err(Error::Config(
                "[baselines] scan_spacing must be in (0, area_side]".into(),
            ));
        }
        Ok(())
    }
}
