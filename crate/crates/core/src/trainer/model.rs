//! Fully connected multi-label classifier: tanh hidden layers, one logistic
//! output per attribute. Parameters live in one flat vector, layer by layer,
//! weights (row-major, `out x in`) before biases.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifierModel {
    dims: Vec<usize>,
    params: Vec<f64>,
}

/// Activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    /// Output of each hidden layer, row-major `n x width`.
    pub hidden: Vec<Vec<f64>>,
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn param_count(dims: &[usize]) -> usize {
    dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl ClassifierModel {
    /// `dims` = input width, hidden widths..., output width.
    pub fn zeros(dims: &[usize]) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::Input(format!("invalid layer widths {dims:?}")));
        }
        Ok(ClassifierModel { dims: dims.to_vec(), params: vec![0.0; param_count(dims)] })
    }

    /// Xavier-uniform weights, zero biases.
    pub fn random(dims: &[usize], rng: &mut impl Rng) -> Result<Self> {
        let mut model = Self::zeros(dims)?;
        for l in 0..model.n_layers() {
            let (fan_in, fan_out) = (model.dims[l], model.dims[l + 1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let (w, _) = model.layer_range(l);
            for p in &mut model.params[w] {
                *p = rng.random_range(-limit..limit);
            }
        }
        Ok(model)
    }

    pub fn from_parts(dims: Vec<usize>, params: Vec<f64>) -> Result<Self> {
        let mut model = Self::zeros(&dims)?;
        if params.len() != model.params.len() {
            return Err(Error::Dimension(format!(
                "{} parameters for layer widths {dims:?}, expected {}",
                params.len(),
                model.params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Input("model parameters must be finite".into()));
        }
        model.params = params;
        Ok(model)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_layers(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().expect("at least two widths")
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Index ranges of layer `l`'s weights and biases in the flat vector.
    fn layer_range(&self, l: usize) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        let start: usize = param_count(&self.dims[..=l]);
        let (i, o) = (self.dims[l], self.dims[l + 1]);
        (start..start + i * o, start + i * o..start + i * o + o)
    }

    fn affine(&self, l: usize, input: &[f64], n: usize) -> Vec<f64> {
        let (wr, br) = self.layer_range(l);
        let (w, b) = (&self.params[wr], &self.params[br]);
        let (fan_in, fan_out) = (self.dims[l], self.dims[l + 1]);
        let mut out = vec![0.0; n * fan_out];
        for r in 0..n {
            let x = &input[r * fan_in..(r + 1) * fan_in];
            let y = &mut out[r * fan_out..(r + 1) * fan_out];
            for o in 0..fan_out {
                let row = &w[o * fan_in..(o + 1) * fan_in];
                let mut acc = b[o];
                for (wi, xi) in row.iter().zip(x) {
                    acc += wi * xi;
                }
                y[o] = acc;
            }
        }
        out
    }

    /// Forward pass over `n` row-major input rows.
    pub fn forward(&self, x: &[f64], n: usize) -> Result<ForwardPass> {
        if x.len() != n * self.input_dim() {
            return Err(Error::Dimension(format!(
                "{} inputs for {n} rows of width {}",
                x.len(),
                self.input_dim()
            )));
        }
        let mut hidden: Vec<Vec<f64>> = Vec::with_capacity(self.n_layers() - 1);
        for l in 0..self.n_layers() - 1 {
            let input: &[f64] = if l == 0 { x } else { &hidden[l - 1] };
            let mut a = self.affine(l, input, n);
            a.iter_mut().for_each(|v| *v = v.tanh());
            hidden.push(a);
        }
        let last = self.n_layers() - 1;
        let logits = self.affine(last, hidden.last().map_or(x, |h| h.as_slice()), n);
        let probs = logits.iter().map(|&z| sigmoid(z)).collect();
        Ok(ForwardPass { hidden, logits, probs })
    }

    /// Gradient of a loss with respect to all parameters, given its gradient
    /// with respect to the logits of `pass`.
    pub fn backward(&self, x: &[f64], n: usize, pass: &ForwardPass, dlogits: &[f64]) -> Vec<f64> {
        let mut grad = vec![0.0; self.params.len()];
        let mut delta = dlogits.to_vec();
        for l in (0..self.n_layers()).rev() {
            let input = if l == 0 { x } else { &pass.hidden[l - 1] };
            let (fan_in, fan_out) = (self.dims[l], self.dims[l + 1]);
            let (wr, br) = self.layer_range(l);
            {
                let (gw, gb) = grad.split_at_mut(br.start);
                let gw = &mut gw[wr.clone()];
                let gb = &mut gb[..fan_out];
                for r in 0..n {
                    let d = &delta[r * fan_out..(r + 1) * fan_out];
                    let a = &input[r * fan_in..(r + 1) * fan_in];
                    for o in 0..fan_out {
                        gb[o] += d[o];
                        let row = &mut gw[o * fan_in..(o + 1) * fan_in];
                        for (g, ai) in row.iter_mut().zip(a) {
                            *g += d[o] * ai;
                        }
                    }
                }
            }
            if l > 0 {
                let w = &self.params[wr];
                let mut prev = vec![0.0; n * fan_in];
                for r in 0..n {
                    let d = &delta[r * fan_out..(r + 1) * fan_out];
                    let p = &mut prev[r * fan_in..(r + 1) * fan_in];
                    for o in 0..fan_out {
                        let row = &w[o * fan_in..(o + 1) * fan_in];
                        for (pi, wi) in p.iter_mut().zip(row) {
                            *pi += d[o] * wi;
                        }
                    }
                    let a = &input[r * fan_in..(r + 1) * fan_in];
                    for (pi, ai) in p.iter_mut().zip(a) {
                        *pi *= 1.0 - ai * ai;
                    }
                }
                delta = prev;
            }
        }
        grad
    }

    pub fn predict_proba(&self, x: &[f64], n: usize) -> Result<Vec<f64>> {
        Ok(self.forward(x, n)?.probs)
    }
}
