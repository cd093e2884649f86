//! Ground-to-air link budget: free-space pathloss plus a LoS/NLoS excess
//! loss, unit-power small-scale fading (Rician under LoS, Rayleigh under
//! NLoS), and the resulting SNR and Shannon rate.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light used by the pathloss formula, m/s.
pub const SPEED_OF_LIGHT: f64 = 2.998e8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioConfig {
    /// Carrier frequency, Hz.
    pub fc: f64,
    pub eta_los: f64,
    pub eta_nlos: f64,
    /// Node transmit power, dBm.
    pub p_tx: f64,
    /// Receiver noise power, dBm.
    pub p_noise: f64,
    /// Wake-up SNR threshold, dB.
    pub snr_threshold_db: f64,
    /// Per-node bandwidth, Hz.
    pub bandwidth: f64,
    pub rician_k_db: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        RadioConfig {
            fc: 2.0e9,
            eta_los: 0.1,
            eta_nlos: 21.0,
            p_tx: 10.0,
            p_noise: -75.0,
            snr_threshold_db: 0.0,
            bandwidth: 10.0e6,
            rician_k_db: 15.0,
        }
    }
}

impl RadioConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.fc > 0.0) {
            return Err(Error::invalid("carrier frequency must be positive"));
        }
        if !(self.bandwidth > 0.0) {
            return Err(Error::invalid("bandwidth must be positive"));
        }
        if !(self.eta_nlos >= self.eta_los) {
            return Err(Error::invalid("eta_nlos must be >= eta_los"));
        }
        Ok(())
    }

    /// Linear SNR threshold.
    pub fn snr_threshold_linear(&self) -> f64 {
        db_to_linear(self.snr_threshold_db)
    }

    /// Linear Rician factor.
    pub fn rician_k(&self) -> f64 {
        db_to_linear(self.rician_k_db)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSample {
    pub los: bool,
    pub pathloss_db: f64,
    pub small_scale: Complex64,
    pub snr_linear: f64,
}

impl LinkSample {
    /// Shannon rate the link would get if served.
    pub fn rate_bps(&self, cfg: &RadioConfig) -> f64 {
        rate(self.snr_linear, cfg)
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn free_space_pathloss(d: f64, fc: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::invalid(format!("distance must be positive, got {d}")));
    }
    Ok(20.0 * d.log10() + 20.0 * fc.log10() + 20.0 * (4.0 * std::f64::consts::PI / SPEED_OF_LIGHT).log10())
}

pub fn pathloss(los: bool, d: f64, cfg: &RadioConfig) -> Result<f64> {
    let excess = if los { cfg.eta_los } else { cfg.eta_nlos };
    Ok(free_space_pathloss(d, cfg.fc)? + excess)
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Unit-power fading coefficient.
pub fn sample_small_scale<R: Rng + ?Sized>(los: bool, cfg: &RadioConfig, rng: &mut R) -> Complex64 {
    if !los {
        return complex_normal(rng);
    }
    let k = cfg.rician_k();
    let phase = rng.random::<f64>() * std::f64::consts::TAU;
    let specular = Complex64::from_polar(1.0, phase);
    if k.is_infinite() {
        return specular;
    }
    let diffuse = complex_normal(rng);
    specular * (k / (k + 1.0)).sqrt() + diffuse * (1.0 / (k + 1.0)).sqrt()
}

/// Linear SNR given pathloss and the fading coefficient.
pub fn snr(pathloss_db: f64, small_scale: Complex64, cfg: &RadioConfig) -> f64 {
    db_to_linear(cfg.p_tx - pathloss_db - cfg.p_noise) * small_scale.norm_sqr()
}

pub fn rate(snr_linear: f64, cfg: &RadioConfig) -> f64 {
    cfg.bandwidth * (1.0 + snr_linear.max(0.0)).log2()
}

/// Full link draw for a UAV–node pair whose LoS state is already known.
pub fn sample_link<R: Rng + ?Sized>(los: bool, distance: f64, cfg: &RadioConfig, rng: &mut R) -> Result<LinkSample> {
    let pathloss_db = pathloss(los, distance, cfg)?;
    let small_scale = sample_small_scale(los, cfg, rng);
    Ok(LinkSample {
        los,
        pathloss_db,
        small_scale,
        snr_linear: snr(pathloss_db, small_scale, cfg),
    })
}

/// Largest horizontal distance at which a LoS link with unit fading gain
/// still meets the SNR threshold from altitude `altitude`. Zero when even
/// the point directly overhead falls short.
pub fn coverage_radius(altitude: f64, cfg: &RadioConfig) -> f64 {
    let budget_db = cfg.p_tx - cfg.p_noise - cfg.snr_threshold_db - cfg.eta_los;
    let fspl_at_1m = 20.0 * cfg.fc.log10() + 20.0 * (4.0 * std::f64::consts::PI / SPEED_OF_LIGHT).log10();
    let slant = 10f64.powf((budget_db - fspl_at_1m) / 20.0);
    if slant <= altitude {
        0.0
    } else {
        (slant * slant - altitude * altitude).sqrt()
    }
}
