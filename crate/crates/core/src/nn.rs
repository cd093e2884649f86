//! Dense feedforward networks with an explicit backward pass and an Adam
//! optimizer. Batches are row-major: one sample per row.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    fn apply(self, z: &mut Array2<f64>) {
        match self {
            Activation::Relu => z.mapv_inplace(|v| v.max(0.0)),
            Activation::Tanh => z.mapv_inplace(f64::tanh),
            Activation::Identity => {}
        }
    }

    /// Derivative expressed through the activation's output.
    fn scale_by_derivative(self, grad: &mut Array2<f64>, out: &Array2<f64>) {
        match self {
            Activation::Relu => Zip::from(grad).and(out).for_each(|g, &o| {
                if o <= 0.0 {
                    *g = 0.0
                }
            }),
            Activation::Tanh => Zip::from(grad).and(out).for_each(|g, &o| *g *= 1.0 - o * o),
            Activation::Identity => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    /// `fan_in × fan_out`.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn fan_in(&self) -> usize {
        self.weights.nrows()
    }

    pub fn fan_out(&self) -> usize {
        self.weights.ncols()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseNet {
    pub layers: Vec<DenseLayer>,
}

/// Per-layer inputs and post-activation outputs from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub inputs: Vec<Array2<f64>>,
    pub outputs: Vec<Array2<f64>>,
}

/// Gradients shaped like the network's parameters, `(dW, db)` per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<(Array2<f64>, Array1<f64>)>,
}

impl Gradients {
    pub fn zeros_like(net: &DenseNet) -> Gradients {
        Gradients {
            layers: net
                .layers
                .iter()
                .map(|l| (Array2::zeros(l.weights.raw_dim()), Array1::zeros(l.bias.len())))
                .collect(),
        }
    }

    pub fn scale(&mut self, a: f64) {
        for (w, b) in &mut self.layers {
            *w *= a;
            *b *= a;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|(w, b)| w.iter().chain(b.iter()).all(|v| v.is_finite()))
    }

    pub fn norm_sq(&self) -> f64 {
        self.layers
            .iter()
            .map(|(w, b)| w.iter().chain(b.iter()).map(|v| v * v).sum::<f64>())
            .sum()
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|(w, b)| w.iter().chain(b.iter()).copied().collect::<Vec<_>>())
            .collect()
    }
}

impl DenseNet {
    /// Uniform `±1/√fan_in` initialization. `sizes` lists every layer width,
    /// input first.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], hidden: Activation, output: Activation, rng: &mut R) -> DenseNet {
        assert!(sizes.len() >= 2, "a network needs at least an input and an output size");
        let last = sizes.len() - 2;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let bound = 1.0 / (w[0] as f64).sqrt();
                DenseLayer {
                    weights: Array2::from_shape_simple_fn((w[0], w[1]), || rng.random_range(-bound..=bound)),
                    bias: Array1::from_shape_simple_fn(w[1], || rng.random_range(-bound..=bound)),
                    activation: if i == last { output } else { hidden },
                }
            })
            .collect();
        DenseNet { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map(DenseLayer::fan_out).unwrap_or(0)
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }

    /// Multiply the output layer's parameters by `factor`.
    pub fn scale_output_layer(&mut self, factor: f64) {
        if let Some(l) = self.layers.last_mut() {
            l.weights *= factor;
            l.bias *= factor;
        }
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.ncols(),
            });
        }
        Ok(())
    }

    fn layer_forward(layer: &DenseLayer, x: &ArrayView2<f64>) -> Array2<f64> {
        let mut z = x.dot(&layer.weights);
        z += &layer.bias;
        layer.activation.apply(&mut z);
        z
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> Result<(Array2<f64>, ForwardCache)> {
        self.check_input(&x)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut outputs: Vec<Array2<f64>> = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let input = if i == 0 { x.to_owned() } else { outputs[i - 1].clone() };
            let out = Self::layer_forward(layer, &input.view());
            inputs.push(input);
            outputs.push(out);
        }
        let y = outputs.last().cloned().expect("network has layers");
        Ok((y, ForwardCache { inputs, outputs }))
    }

    /// Forward pass without keeping activations.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(&x)?;
        let mut cur = Self::layer_forward(&self.layers[0], &x);
        for layer in &self.layers[1..] {
            cur = Self::layer_forward(layer, &cur.view());
        }
        Ok(cur)
    }

    pub fn forward_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let view = ArrayView2::from_shape((1, x.len()), x).expect("contiguous slice");
        Ok(self.predict(view)?.into_raw_vec_and_offset().0)
    }

    /// Gradients of `Σ grad_out ⊙ output` w.r.t. every parameter and the input.
    pub fn backward(&self, cache: &ForwardCache, grad_out: ArrayView2<f64>) -> Result<(Gradients, Array2<f64>)> {
        let last = cache.outputs.last().expect("cache has layers");
        if grad_out.dim() != last.dim() || cache.outputs.len() != self.layers.len() {
            return Err(Error::DimensionMismatch {
                expected: last.ncols(),
                got: grad_out.ncols(),
            });
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut delta = grad_out.to_owned();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            layer.activation.scale_by_derivative(&mut delta, &cache.outputs[i]);
            let dw = cache.inputs[i].t().dot(&delta);
            let db = delta.sum_axis(Axis(0));
            let d_in = delta.dot(&layer.weights.t());
            grads.push((dw, db));
            delta = d_in;
        }
        grads.reverse();
        Ok((Gradients { layers: grads }, delta))
    }

    /// Polyak averaging toward `source`: `self ← τ·source + (1−τ)·self`.
    pub fn soft_update_from(&mut self, source: &DenseNet, tau: f64) {
        for (dst, src) in self.layers.iter_mut().zip(&source.layers) {
            Zip::from(&mut dst.weights)
                .and(&src.weights)
                .for_each(|d, &s| *d = tau * s + (1.0 - tau) * *d);
            Zip::from(&mut dst.bias)
                .and(&src.bias)
                .for_each(|d, &s| *d = tau * s + (1.0 - tau) * *d);
        }
    }

    /// Euclidean distance between parameter vectors.
    pub fn param_distance(&self, other: &DenseNet) -> f64 {
        self.layers
            .iter()
            .zip(&other.layers)
            .map(|(a, b)| {
                let dw: f64 = a
                    .weights
                    .iter()
                    .zip(b.weights.iter())
                    .map(|(x, y)| (x - y).powi(2))
                    .sum();
                let db: f64 = a.bias.iter().zip(b.bias.iter()).map(|(x, y)| (x - y).powi(2)).sum();
                dw + db
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Flat parameter access in layer order, weights (row-major) before biases.
    pub fn param_mut(&mut self, index: usize) -> &mut f64 {
        let mut idx = index;
        for layer in &mut self.layers {
            let nw = layer.weights.len();
            if idx < nw {
                let cols = layer.weights.ncols();
                return &mut layer.weights[[idx / cols, idx % cols]];
            }
            idx -= nw;
            if idx < layer.bias.len() {
                return &mut layer.bias[idx];
            }
            idx -= layer.bias.len();
        }
        panic!("parameter index {index} out of range");
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    m: Vec<(Array2<f64>, Array1<f64>)>,
    v: Vec<(Array2<f64>, Array1<f64>)>,
}

impl Adam {
    pub fn new(net: &DenseNet, lr: f64) -> Adam {
        let zeros = Gradients::zeros_like(net).layers;
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    /// One descent step along `grads`.
    pub fn step(&mut self, net: &mut DenseNet, grads: &Gradients) -> Result<()> {
        if !grads.is_finite() {
            return Err(Error::NonFinite("gradient".into()));
        }
        if grads.layers.len() != net.layers.len() || self.m.len() != net.layers.len() {
            return Err(Error::DimensionMismatch {
                expected: net.layers.len(),
                got: grads.layers.len(),
            });
        }
        self.step += 1;
        let (b1, b2, eps, lr) = (self.beta1, self.beta2, self.eps, self.lr);
        let c1 = 1.0 - b1.powi(self.step as i32);
        let c2 = 1.0 - b2.powi(self.step as i32);
        let update = |p: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        };
        for (((layer, (gw, gb)), (mw, mb)), (vw, vb)) in net
            .layers
            .iter_mut()
            .zip(&grads.layers)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            if layer.weights.dim() != gw.dim() || layer.bias.len() != gb.len() {
                return Err(Error::DimensionMismatch {
                    expected: layer.weights.len(),
                    got: gw.len(),
                });
            }
            Zip::from(&mut layer.weights)
                .and(mw)
                .and(vw)
                .and(gw)
                .for_each(|p, m, v, &g| update(p, m, v, g));
            Zip::from(&mut layer.bias)
                .and(mb)
                .and(vb)
                .and(gb)
                .for_each(|p, m, v, &g| update(p, m, v, g));
        }
        if !net.is_finite() {
            return Err(Error::NonFinite("parameters after optimizer step".into()));
        }
        Ok(())
    }
}
