//! Shared oracles for the integration tests.
//!
//! The finite-difference checks evaluate networks with a plain nested-loop
//! forward pass written here, independent of the library's matrix code.

#![allow(dead_code)]

use uavdc::config::ExperimentConfig;
use uavdc::nn::{Activation, DenseNet};
use uavdc::td3::SpreadNet;

pub mod cli_suite;
pub mod env_suite;
pub mod gradients;
pub mod planner_suite;
pub mod td3_suite;

pub const FD_STEP: f64 = 1e-5;

fn act(a: Activation, z: f64) -> f64 {
    match a {
        Activation::Relu => z.max(0.0),
        Activation::Tanh => z.tanh(),
        Activation::Identity => z,
    }
}

/// Forward one row; also records the sign of every relu pre-activation.
pub fn naive_forward_row(net: &DenseNet, x: &[f64], signs: &mut Vec<bool>) -> Vec<f64> {
    let mut cur = x.to_vec();
    for layer in &net.layers {
        let (fan_in, fan_out) = layer.weights.dim();
        assert_eq!(cur.len(), fan_in);
        let mut next = vec![0.0; fan_out];
        for (j, out) in next.iter_mut().enumerate() {
            let mut z = layer.bias[j];
            for (i, xi) in cur.iter().enumerate() {
                z += xi * layer.weights[[i, j]];
            }
            if layer.activation == Activation::Relu {
                signs.push(z > 0.0);
            }
            *out = act(layer.activation, z);
        }
        cur = next;
    }
    cur
}

/// `Σ g ⊙ f(x)` over a batch, with the relu sign pattern.
pub fn naive_dense_loss(net: &DenseNet, xs: &[Vec<f64>], g: &[Vec<f64>]) -> (f64, Vec<bool>) {
    let mut signs = Vec::new();
    let mut loss = 0.0;
    for (x, gr) in xs.iter().zip(g) {
        let y = naive_forward_row(net, x, &mut signs);
        loss += y.iter().zip(gr).map(|(a, b)| a * b).sum::<f64>();
    }
    (loss, signs)
}

/// Same for a spread network: `[b, c]` pass through, the last three entries
/// go through the spread stage, and `extra` is appended.
pub fn naive_spread_loss(
    net: &SpreadNet,
    obs: &[Vec<f64>],
    extra: Option<&[Vec<f64>]>,
    g: &[Vec<f64>],
) -> (f64, Vec<bool>) {
    let k2 = 2 * net.num_nodes;
    let mut signs = Vec::new();
    let mut loss = 0.0;
    for (r, (o, gr)) in obs.iter().zip(g).enumerate() {
        let lifted = naive_forward_row(&net.spread, &o[k2..], &mut signs);
        let mut input = o[..k2].to_vec();
        input.extend(lifted);
        if let Some(e) = extra {
            input.extend_from_slice(&e[r]);
        }
        let y = naive_forward_row(&net.body, &input, &mut signs);
        loss += y.iter().zip(gr).map(|(a, b)| a * b).sum::<f64>();
    }
    (loss, signs)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FdReport {
    pub max_rel_err: f64,
    pub checked: usize,
    pub skipped: usize,
}

impl FdReport {
    pub fn merge(self, o: FdReport) -> FdReport {
        FdReport {
            max_rel_err: self.max_rel_err.max(o.max_rel_err),
            checked: self.checked + o.checked,
            skipped: self.skipped + o.skipped,
        }
    }
}

pub fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-6)
}

/// Central differences of `eval` over `n` scalar coordinates reached through
/// `coord`. Coordinates where the relu sign pattern differs between the two
/// probes sit on a kink and are skipped.
pub fn fd_compare<T: Clone>(
    base: &T,
    n: usize,
    coord: impl Fn(&mut T, usize) -> &mut f64,
    eval: impl Fn(&T) -> (f64, Vec<bool>),
    analytic: &[f64],
) -> FdReport {
    assert_eq!(analytic.len(), n);
    let mut report = FdReport::default();
    for (i, &a) in analytic.iter().enumerate() {
        let mut plus = base.clone();
        *coord(&mut plus, i) += FD_STEP;
        let mut minus = base.clone();
        *coord(&mut minus, i) -= FD_STEP;
        let (lp, sp) = eval(&plus);
        let (lm, sm) = eval(&minus);
        if sp != sm {
            report.skipped += 1;
            continue;
        }
        let numeric = (lp - lm) / (2.0 * FD_STEP);
        report.max_rel_err = report.max_rel_err.max(rel_err(a, numeric));
        report.checked += 1;
    }
    report
}

/// Shortest open path from `start` through every node, by enumeration.
pub fn brute_force_open_tour(nodes: &[[f64; 2]], start: [f64; 2]) -> f64 {
    fn d(a: [f64; 2], b: [f64; 2]) -> f64 {
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
    }
    fn rec(nodes: &[[f64; 2]], at: [f64; 2], used: &mut [bool], acc: f64, best: &mut f64) {
        if acc >= *best {
            return;
        }
        if used.iter().all(|&u| u) {
            *best = acc;
            return;
        }
        for i in 0..nodes.len() {
            if !used[i] {
                used[i] = true;
                rec(nodes, nodes[i], used, acc + d(at, nodes[i]), best);
                used[i] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    rec(nodes, start, &mut vec![false; nodes.len()], 0.0, &mut best);
    if nodes.is_empty() {
        0.0
    } else {
        best
    }
}

/// Small flat scenario used by the end-to-end tests.
pub fn toy_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.map.buildings = false;
    cfg.city.area_side = 300.0;
    cfg.scenario.num_nodes = 5;
    cfg
}
