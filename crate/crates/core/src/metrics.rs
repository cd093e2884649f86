//! Rotary-wing propulsion power and mission-level metrics.

use serde::{Deserialize, Serialize};

use crate::env::StepRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerModelParams {
    /// Blade profile power in hover, W.
    pub p0: f64,
    /// Induced power in hover, W.
    pub p1: f64,
    /// Rotor blade tip speed, m/s.
    pub u_tip: f64,
    /// Mean rotor induced velocity in hover, m/s.
    pub v0: f64,
    /// Fuselage drag ratio.
    pub d0: f64,
    /// Rotor solidity.
    pub s: f64,
    /// Air density, kg/m³.
    pub rho: f64,
    /// Rotor disc area, m².
    pub area: f64,
}

impl Default for PowerModelParams {
    fn default() -> Self {
        PowerModelParams {
            p0: 79.8563,
            p1: 88.6279,
            u_tip: 120.0,
            v0: 4.03,
            d0: 0.6,
            s: 0.05,
            rho: 1.225,
            area: 0.503,
        }
    }
}

impl PowerModelParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.p0, self.p1, self.u_tip, self.v0, self.d0, self.s, self.rho, self.area,
        ];
        if all.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(Error::invalid(
                "power model parameters must be finite and strictly positive",
            ))
        }
    }
}

pub fn blade_profile_power(v: f64, p: &PowerModelParams) -> f64 {
    p.p0 * (1.0 + 3.0 * v * v / (p.u_tip * p.u_tip))
}

pub fn induced_power(v: f64, p: &PowerModelParams) -> f64 {
    let r = v * v / (2.0 * p.v0 * p.v0);
    // sqrt(1 + r²) − r, rewritten to avoid cancellation at high speed
    let inner = 1.0 / ((1.0 + r * r).sqrt() + r);
    p.p1 * inner.sqrt()
}

pub fn parasite_power(v: f64, p: &PowerModelParams) -> f64 {
    0.5 * p.d0 * p.rho * p.s * p.area * v * v * v
}

/// Level-flight propulsion power at horizontal speed `v`.
pub fn propulsion_power(v: f64, p: &PowerModelParams) -> f64 {
    blade_profile_power(v, p) + induced_power(v, p) + parasite_power(v, p)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Energy {
    pub flight_j: f64,
    pub hover_j: f64,
}

impl Energy {
    pub fn total_j(&self) -> f64 {
        self.flight_j + self.hover_j
    }
}

impl std::ops::Add for Energy {
    type Output = Energy;
    fn add(self, o: Energy) -> Energy {
        Energy {
            flight_j: self.flight_j + o.flight_j,
            hover_j: self.hover_j + o.hover_j,
        }
    }
}

/// Flight energy at the commanded speed over each flight interval, hover
/// energy at P(0) over each hover interval.
pub fn episode_energy(records: &[StepRecord], params: &PowerModelParams, delta_ft: f64) -> Energy {
    let p_hover = propulsion_power(0.0, params);
    records.iter().fold(Energy::default(), |acc, r| Energy {
        flight_j: acc.flight_j + propulsion_power(r.speed, params) * delta_ft,
        hover_j: acc.hover_j + p_hover * r.hover_time_s,
    })
}

/// Fraction of servings that used a LoS link; `None` when nothing was served.
pub fn los_coverage_ratio(records: &[StepRecord]) -> Option<f64> {
    let served: usize = records.iter().map(|r| r.served_count).sum();
    let los: usize = records.iter().map(|r| r.served_los).sum();
    (served > 0).then(|| los as f64 / served as f64)
}

pub fn mission_time(records: &[StepRecord]) -> f64 {
    records.iter().map(|r| r.step_duration_s).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeMetrics {
    pub mission_time_s: f64,
    pub energy: Energy,
    pub los_ratio: Option<f64>,
    pub served_count: usize,
    pub steps: usize,
    pub completed: bool,
}

impl EpisodeMetrics {
    pub fn from_records(records: &[StepRecord], params: &PowerModelParams, delta_ft: f64) -> EpisodeMetrics {
        EpisodeMetrics {
            mission_time_s: mission_time(records),
            energy: episode_energy(records, params, delta_ft),
            los_ratio: los_coverage_ratio(records),
            served_count: records.iter().map(|r| r.served_count).sum(),
            steps: records.len(),
            completed: records.last().is_some_and(|r| r.terminated),
        }
    }
}

/// Sample mean and standard deviation (n−1 denominator; zero for n < 2).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub method: String,
    pub num_nodes: usize,
    /// Over completed episodes only; `None` when none completed.
    pub mean_completion_time_s: Option<f64>,
    pub std_completion_time_s: Option<f64>,
    pub mean_flight_energy_j: f64,
    pub mean_los_ratio: Option<f64>,
    pub completion_rate: f64,
}

impl Summary {
    pub const CSV_HEADER: &'static str =
        "method,K,mean_completion_time_s,std,mean_flight_energy_J,mean_los_ratio,completion_rate";

    pub fn from_episodes(method: &str, num_nodes: usize, episodes: &[EpisodeMetrics]) -> Summary {
        let times: Vec<f64> = episodes
            .iter()
            .filter(|e| e.completed)
            .map(|e| e.mission_time_s)
            .collect();
        let (mean_t, std_t) = if times.is_empty() {
            (None, None)
        } else {
            let (m, s) = mean_std(&times);
            (Some(m), Some(s))
        };
        let flight: Vec<f64> = episodes.iter().map(|e| e.energy.flight_j).collect();
        let ratios: Vec<f64> = episodes.iter().filter_map(|e| e.los_ratio).collect();
        let completed = episodes.iter().filter(|e| e.completed).count();
        Summary {
            method: method.to_string(),
            num_nodes,
            mean_completion_time_s: mean_t,
            std_completion_time_s: std_t,
            mean_flight_energy_j: mean_std(&flight).0,
            mean_los_ratio: (!ratios.is_empty()).then(|| mean_std(&ratios).0),
            completion_rate: if episodes.is_empty() {
                0.0
            } else {
                completed as f64 / episodes.len() as f64
            },
        }
    }

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{}",
            self.method,
            self.num_nodes,
            opt(self.mean_completion_time_s),
            opt(self.std_completion_time_s),
            self.mean_flight_energy_j,
            opt(self.mean_los_ratio),
            self.completion_rate
        )
    }
}
