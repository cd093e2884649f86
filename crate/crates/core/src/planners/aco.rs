use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use super::dist;
use crate::error::{Error, Result};
use crate::seeds::SimRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcoConfig {
    /// Ants per iteration; `None` means one per node.
    pub ants: Option<usize>,
    pub iterations: usize,
    pub evaporation: f64,
    /// Pheromone exponent.
    pub alpha: f64,
    /// Inverse-distance exponent.
    pub beta: f64,
    pub seed: u64,
}

impl Default for AcoConfig {
    fn default() -> Self {
        AcoConfig {
            ants: None,
            iterations: 200,
            evaporation: 0.5,
            alpha: 1.0,
            beta: 2.0,
            seed: 0,
        }
    }
}

impl AcoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ants == Some(0) || self.iterations == 0 {
            return Err(Error::invalid("ACO needs at least one ant and one iteration"));
        }
        if !(self.evaporation > 0.0 && self.evaporation < 1.0) {
            return Err(Error::invalid("ACO evaporation must be in (0,1)"));
        }
        if !(self.alpha > 0.0 && self.beta > 0.0) {
            return Err(Error::invalid("ACO exponents must be positive"));
        }
        Ok(())
    }
}

/// Length of the open path `start → nodes[order[0]] → …`.
pub fn open_tour_length(nodes: &[[f64; 2]], start: [f64; 2], order: &[usize]) -> f64 {
    let mut at = start;
    let mut total = 0.0f64;
    for &i in order {
        total += dist(at, nodes[i]);
        at = nodes[i];
    }
    total
}

/// Ant-system search for a short open tour from `start` over every node.
///
/// Vertex `K` of the pheromone matrix stands for the start point. Each
/// iteration evaporates globally and then deposits `1/L` along the best tour
/// found so far.
pub fn aco_tour(nodes: &[[f64; 2]], start: [f64; 2], cfg: &AcoConfig) -> Result<Vec<usize>> {
    cfg.validate()?;
    let k = nodes.len();
    if k <= 1 {
        return Ok((0..k).collect());
    }
    let point = |i: usize| if i == k { start } else { nodes[i] };
    let n = k + 1;
    let mut heuristic = vec![0.0f64; n * n];
    for a in 0..n {
        for b in 0..n {
            if a != b {
                heuristic[a * n + b] = (1.0 / dist(point(a), point(b)).max(1e-9)).powf(cfg.beta);
            }
        }
    }
    let mut pheromone = vec![1.0f64; n * n];
    let mut rng = SimRng::seed_from_u64(cfg.seed);
    let ants = cfg.ants.unwrap_or(k);
    let mut best: Vec<usize> = (0..k).collect();
    let mut best_len = open_tour_length(nodes, start, &best);
    let mut weights = vec![0.0f64; k];
    let mut visited = vec![false; k];
    let mut tour = Vec::with_capacity(k);

    for _ in 0..cfg.iterations {
        for _ in 0..ants {
            visited.fill(false);
            tour.clear();
            let mut at = k;
            for _ in 0..k {
                let mut total = 0.0f64;
                for j in 0..k {
                    weights[j] = if visited[j] {
                        0.0
                    } else {
                        pheromone[at * n + j].powf(cfg.alpha) * heuristic[at * n + j]
                    };
                    total += weights[j];
                }
                let next = if total > 0.0 && total.is_finite() {
                    let mut r = rng.random::<f64>() * total;
                    let mut pick = None;
                    for (j, &w) in weights.iter().enumerate().take(k) {
                        if w > 0.0 {
                            pick = Some(j);
                            if r < w {
                                break;
                            }
                            r -= w;
                        }
                    }
                    pick.expect("at least one unvisited node")
                } else {
                    (0..k).find(|&j| !visited[j]).expect("at least one unvisited node")
                };
                visited[next] = true;
                tour.push(next);
                at = next;
            }
            let len = open_tour_length(nodes, start, &tour);
            if len < best_len {
                best_len = len;
                best.clone_from(&tour);
            }
        }
        for t in &mut pheromone {
            *t *= 1.0 - cfg.evaporation;
        }
        let deposit = 1.0 / best_len.max(1e-9);
        let mut at = k;
        for &j in &best {
            pheromone[at * n + j] += deposit;
            pheromone[j * n + at] += deposit;
            at = j;
        }
    }
    Ok(best)
}
