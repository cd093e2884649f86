//! Dimension-spread input stage.
//!
//! An observation is `[b (K), c (K), x̂, ŷ, ζ̂]`. The three low-dimensional
//! entries go through a trainable dense layer with `2K` units, and the
//! result is concatenated after the `2K` indicator entries, giving a
//! `4K`-wide input for the network body. Critics append the action after
//! that.

use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Activation, Adam, DenseNet, ForwardCache, Gradients};

/// Number of low-dimensional observation entries (position and pheromone).
pub const LOW_DIM: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadNet {
    pub num_nodes: usize,
    /// Width of the extra input appended after the spread features (the action, for critics).
    pub extra_dim: usize,
    pub spread: DenseNet,
    pub body: DenseNet,
}

#[derive(Debug, Clone)]
pub struct SpreadCache {
    spread: ForwardCache,
    body: ForwardCache,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpreadGrads {
    pub spread: Gradients,
    pub body: Gradients,
}

impl SpreadGrads {
    pub fn norm(&self) -> f64 {
        (self.spread.norm_sq() + self.body.norm_sq()).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.spread.is_finite() && self.body.is_finite()
    }
}

impl SpreadNet {
    pub fn new<R: Rng + ?Sized>(
        num_nodes: usize,
        extra_dim: usize,
        hidden: &[usize],
        output_dim: usize,
        output_activation: Activation,
        rng: &mut R,
    ) -> SpreadNet {
        let spread = DenseNet::new(&[LOW_DIM, 2 * num_nodes], Activation::Relu, Activation::Relu, rng);
        let mut sizes = vec![4 * num_nodes + extra_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(output_dim);
        let body = DenseNet::new(&sizes, Activation::Relu, output_activation, rng);
        SpreadNet {
            num_nodes,
            extra_dim,
            spread,
            body,
        }
    }

    pub fn obs_dim(&self) -> usize {
        2 * self.num_nodes + LOW_DIM
    }

    pub fn body_input_dim(&self) -> usize {
        4 * self.num_nodes + self.extra_dim
    }

    fn check(&self, obs: &ArrayView2<f64>, extra: Option<&ArrayView2<f64>>) -> Result<()> {
        if obs.ncols() != self.obs_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.obs_dim(),
                got: obs.ncols(),
            });
        }
        let got = extra.map_or(0, |e| e.ncols());
        if got != self.extra_dim || extra.is_some_and(|e| e.nrows() != obs.nrows()) {
            return Err(Error::DimensionMismatch {
                expected: self.extra_dim,
                got,
            });
        }
        Ok(())
    }

    /// The `4K`-wide spread representation of a batch of observations.
    pub fn spread_input(&self, obs: ArrayView2<f64>) -> Result<Array2<f64>> {
        if obs.ncols() != self.obs_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.obs_dim(),
                got: obs.ncols(),
            });
        }
        let k2 = 2 * self.num_nodes;
        let lifted = self.spread.predict(obs.slice(s![.., k2..]))?;
        Ok(concatenate![Axis(1), obs.slice(s![.., ..k2]), lifted])
    }

    fn body_input(&self, obs: &ArrayView2<f64>, lifted: &Array2<f64>, extra: Option<&ArrayView2<f64>>) -> Array2<f64> {
        let k2 = 2 * self.num_nodes;
        match extra {
            Some(e) => concatenate![Axis(1), obs.slice(s![.., ..k2]), *lifted, *e],
            None => concatenate![Axis(1), obs.slice(s![.., ..k2]), *lifted],
        }
    }

    pub fn forward(&self, obs: ArrayView2<f64>, extra: Option<ArrayView2<f64>>) -> Result<(Array2<f64>, SpreadCache)> {
        self.check(&obs, extra.as_ref())?;
        let k2 = 2 * self.num_nodes;
        let (lifted, spread_cache) = self.spread.forward(obs.slice(s![.., k2..]))?;
        let input = self.body_input(&obs, &lifted, extra.as_ref());
        let (out, body_cache) = self.body.forward(input.view())?;
        Ok((
            out,
            SpreadCache {
                spread: spread_cache,
                body: body_cache,
            },
        ))
    }

    pub fn predict(&self, obs: ArrayView2<f64>, extra: Option<ArrayView2<f64>>) -> Result<Array2<f64>> {
        self.check(&obs, extra.as_ref())?;
        let k2 = 2 * self.num_nodes;
        let lifted = self.spread.predict(obs.slice(s![.., k2..]))?;
        let input = self.body_input(&obs, &lifted, extra.as_ref());
        self.body.predict(input.view())
    }

    /// Parameter gradients for both stages, plus the gradient w.r.t. the
    /// extra input when there is one.
    pub fn backward(
        &self,
        cache: &SpreadCache,
        grad_out: ArrayView2<f64>,
    ) -> Result<(SpreadGrads, Option<Array2<f64>>)> {
        let (body_grads, d_input) = self.body.backward(&cache.body, grad_out)?;
        let k2 = 2 * self.num_nodes;
        let d_lifted = d_input.slice(s![.., k2..2 * k2]);
        let (spread_grads, _) = self.spread.backward(&cache.spread, d_lifted)?;
        let d_extra = (self.extra_dim > 0).then(|| d_input.slice(s![.., 2 * k2..]).to_owned());
        Ok((
            SpreadGrads {
                spread: spread_grads,
                body: body_grads,
            },
            d_extra,
        ))
    }

    pub fn soft_update_from(&mut self, source: &SpreadNet, tau: f64) {
        self.spread.soft_update_from(&source.spread, tau);
        self.body.soft_update_from(&source.body, tau);
    }

    pub fn param_distance(&self, other: &SpreadNet) -> f64 {
        let a = self.spread.param_distance(&other.spread);
        let b = self.body.param_distance(&other.body);
        (a * a + b * b).sqrt()
    }

    pub fn num_params(&self) -> usize {
        self.spread.num_params() + self.body.num_params()
    }

    /// Flat parameter access: spread stage first, then the body.
    pub fn param_mut(&mut self, index: usize) -> &mut f64 {
        let n = self.spread.num_params();
        if index < n {
            self.spread.param_mut(index)
        } else {
            self.body.param_mut(index - n)
        }
    }

    /// Scalar outputs as a vector; for single-output networks.
    pub fn predict_column(&self, obs: ArrayView2<f64>, extra: Option<ArrayView2<f64>>) -> Result<Array1<f64>> {
        Ok(self.predict(obs, extra)?.column(0).to_owned())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadAdam {
    pub spread: Adam,
    pub body: Adam,
}

impl SpreadAdam {
    pub fn new(net: &SpreadNet, lr: f64) -> SpreadAdam {
        SpreadAdam {
            spread: Adam::new(&net.spread, lr),
            body: Adam::new(&net.body, lr),
        }
    }

    pub fn step(&mut self, net: &mut SpreadNet, grads: &SpreadGrads) -> Result<()> {
        self.spread.step(&mut net.spread, &grads.spread)?;
        self.body.step(&mut net.body, &grads.body)
    }
}
