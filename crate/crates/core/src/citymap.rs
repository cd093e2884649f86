//! Statistical urban environment and exact line-of-sight queries.
//!
//! Buildings are square prisms laid on a regular grid: the cell pitch and
//! footprint side follow from the built-up ratio `alpha` and the density
//! `beta`, and heights are Rayleigh distributed with mean `lambda_mean`,
//! clipped to `height_clip`.

use std::path::Path;

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeds::SimRng;

pub type Point3 = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ItuParams {
    /// Fraction of land covered by buildings.
    pub alpha: f64,
    /// Buildings per square kilometre.
    pub beta: f64,
    /// Mean building height in metres.
    pub lambda_mean: f64,
    /// `[h_min, h_max]` in metres.
    pub height_clip: [f64; 2],
    /// Side length of the square area in metres.
    pub area_side: f64,
}

impl Default for ItuParams {
    fn default() -> Self {
        ItuParams {
            alpha: 0.3,
            beta: 144.0,
            lambda_mean: 50.0,
            height_clip: [10.0, 50.0],
            area_side: 1000.0,
        }
    }
}

impl ItuParams {
    pub fn validate(&self) -> Result<()> {
        let [h_min, h_max] = self.height_clip;
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!("alpha must be in (0,1), got {}", self.alpha)));
        }
        if !(self.beta > 0.0) {
            return Err(Error::invalid(format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.lambda_mean > 0.0) {
            return Err(Error::invalid("lambda_mean must be positive"));
        }
        if !(h_min > 0.0 && h_min <= h_max) {
            return Err(Error::invalid(format!(
                "height_clip must satisfy 0 < h_min <= h_max, got [{h_min}, {h_max}]"
            )));
        }
        if !(self.area_side > 0.0) {
            return Err(Error::invalid("area_side must be positive"));
        }
        Ok(())
    }

    /// Grid cell pitch in metres.
    pub fn pitch(&self) -> f64 {
        1000.0 / self.beta.sqrt()
    }

    /// Building footprint side in metres.
    pub fn footprint_side(&self) -> f64 {
        1000.0 * (self.alpha / self.beta).sqrt()
    }

    /// Number of grid cells along one side of the area.
    pub fn cells_per_side(&self) -> usize {
        // tolerance absorbs D/S landing a hair under an integer
        (self.area_side / self.pitch() + 1e-9).floor() as usize
    }

    /// Rayleigh scale giving mean `lambda_mean`.
    pub fn rayleigh_scale(&self) -> f64 {
        self.lambda_mean * (2.0 / std::f64::consts::PI).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Building {
    pub x0: f64,
    pub y0: f64,
    pub w: f64,
    pub h: f64,
}

impl Building {
    pub fn min_corner(&self) -> Point3 {
        [self.x0, self.y0, 0.0]
    }

    pub fn max_corner(&self) -> Point3 {
        [self.x0 + self.w, self.y0 + self.w, self.h]
    }

    /// Whether a ground point lies in the closed footprint.
    pub fn footprint_contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x0 + self.w && y >= self.y0 && y <= self.y0 + self.w
    }

    fn strictly_contains(&self, p: &Point3) -> bool {
        p[0] > self.x0
            && p[0] < self.x0 + self.w
            && p[1] > self.y0
            && p[1] < self.y0 + self.w
            && p[2] > 0.0
            && p[2] < self.h
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CityMap {
    pub seed: u64,
    pub params: ItuParams,
    pub buildings: Vec<Building>,
}

/// Draw one Rayleigh variate with the given scale by inverting the CDF.
pub fn sample_rayleigh<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    scale * (-2.0 * (1.0 - u).ln()).sqrt()
}

pub fn generate_city(params: ItuParams, seed: u64) -> Result<CityMap> {
    params.validate()?;
    let pitch = params.pitch();
    let side = params.footprint_side();
    if side >= pitch {
        return Err(Error::invalid(format!(
            "footprint side {side:.3} m leaves no street gap at pitch {pitch:.3} m"
        )));
    }
    let n = params.cells_per_side();
    let offset = (params.area_side - n as f64 * pitch) / 2.0;
    let margin = (pitch - side) / 2.0;
    let scale = params.rayleigh_scale();
    let [h_min, h_max] = params.height_clip;

    let mut rng = SimRng::seed_from_u64(seed);
    let mut buildings = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let h = sample_rayleigh(scale, &mut rng).clamp(h_min, h_max);
            buildings.push(Building {
                x0: offset + i as f64 * pitch + margin,
                y0: offset + j as f64 * pitch + margin,
                w: side,
                h,
            });
        }
    }
    Ok(CityMap {
        seed,
        params,
        buildings,
    })
}

/// Closed segment vs closed axis-aligned box, slab method.
pub fn segment_intersects_box(p: &Point3, q: &Point3, lo: &Point3, hi: &Point3) -> bool {
    let mut t_enter = 0.0f64;
    let mut t_exit = 1.0f64;
    for axis in 0..3 {
        let d = q[axis] - p[axis];
        if d == 0.0 {
            if p[axis] < lo[axis] || p[axis] > hi[axis] {
                return false;
            }
            continue;
        }
        let inv = 1.0 / d;
        let mut ta = (lo[axis] - p[axis]) * inv;
        let mut tb = (hi[axis] - p[axis]) * inv;
        if ta > tb {
            std::mem::swap(&mut ta, &mut tb);
        }
        t_enter = t_enter.max(ta);
        t_exit = t_exit.min(tb);
        if t_enter > t_exit {
            return false;
        }
    }
    true
}

impl CityMap {
    /// A map with no buildings.
    pub fn flat(area_side: f64) -> CityMap {
        CityMap {
            seed: 0,
            params: ItuParams {
                area_side,
                ..ItuParams::default()
            },
            buildings: Vec::new(),
        }
    }

    pub fn area_side(&self) -> f64 {
        self.params.area_side
    }

    pub fn max_height(&self) -> f64 {
        self.buildings.iter().map(|b| b.h).fold(0.0, f64::max)
    }

    /// True iff the closed segment `p`–`q` touches no building prism.
    pub fn is_los(&self, p: &Point3, q: &Point3) -> bool {
        let (x_lo, x_hi) = (p[0].min(q[0]), p[0].max(q[0]));
        let (y_lo, y_hi) = (p[1].min(q[1]), p[1].max(q[1]));
        let z_lo = p[2].min(q[2]);
        !self.buildings.iter().any(|b| {
            // bounding-box prefilter
            if b.x0 > x_hi || b.x0 + b.w < x_lo || b.y0 > y_hi || b.y0 + b.w < y_lo || b.h < z_lo {
                return false;
            }
            segment_intersects_box(p, q, &b.min_corner(), &b.max_corner())
        })
    }

    /// Sampling oracle: blocked iff one of `n_samples` evenly spaced points on
    /// the segment (endpoints included) lies strictly inside a prism.
    pub fn los_brute_oracle(&self, p: &Point3, q: &Point3, n_samples: usize) -> bool {
        assert!(n_samples >= 2, "need at least two samples");
        for s in 0..n_samples {
            let t = s as f64 / (n_samples - 1) as f64;
            let pt = [
                p[0] + t * (q[0] - p[0]),
                p[1] + t * (q[1] - p[1]),
                p[2] + t * (q[2] - p[2]),
            ];
            if self.buildings.iter().any(|b| b.strictly_contains(&pt)) {
                return false;
            }
        }
        true
    }

    /// Whether a ground point lies inside any building footprint.
    pub fn inside_footprint(&self, x: f64, y: f64) -> bool {
        self.buildings.iter().any(|b| b.footprint_contains(x, y))
    }

    pub fn footprint_fraction(&self) -> f64 {
        let area: f64 = self.buildings.iter().map(|b| b.w * b.w).sum();
        area / (self.area_side() * self.area_side())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<CityMap> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<CityMap> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        CityMap::from_json(&s)
    }
}
