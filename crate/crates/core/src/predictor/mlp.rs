//! Fully connected network with leaky-rectifier hidden layers and a linear
//! output layer, stored as one flat parameter vector.
//!
//! Layer `l` keeps its weights input-major (`w[i * out + o]`), so a forward
//! pass accumulates one contiguous output row per nonzero input. Occupancy
//! inputs are mostly zero and get skipped outright.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

pub const LEAKY_SLOPE: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

/// Per-layer outputs kept for backpropagation; `post[0]` is the input.
#[derive(Debug, Clone, Default)]
pub struct Activations {
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
}

impl Activations {
    pub fn output(&self) -> &[f64] {
        self.post.last().map_or(&[], Vec::as_slice)
    }
}

fn leaky(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        LEAKY_SLOPE * x
    }
}

fn leaky_grad(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        LEAKY_SLOPE
    }
}

impl Mlp {
    pub fn param_count_for(sizes: &[usize]) -> usize {
        sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::Config(format!("invalid layer sizes {sizes:?}")));
        }
        Ok(Mlp {
            sizes: sizes.to_vec(),
            params: vec![0.0; Self::param_count_for(sizes)],
        })
    }

    /// He-normal initialization for rectified layers, fan-in normal for the
    /// linear output layer, zero biases.
    pub fn random<R: Rng>(sizes: &[usize], rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(sizes)?;
        let last = sizes.len() - 2;
        for l in 0..sizes.len() - 1 {
            let fan_in = sizes[l] as f64;
            let gain = if l == last { 1.0 } else { 2.0 };
            let normal = Normal::new(0.0, (gain / fan_in).sqrt()).expect("positive std");
            let (w, _) = net.layer_ranges(l);
            for p in &mut net.params[w] {
                *p = normal.sample(rng);
            }
        }
        Ok(net)
    }

    pub fn from_params(sizes: &[usize], params: Vec<f64>) -> Result<Self> {
        let expected = Self::param_count_for(sizes);
        if params.len() != expected {
            return Err(Error::Dimension {
                expected,
                actual: params.len(),
            });
        }
        let mut net = Self::zeros(sizes)?;
        net.params = params;
        Ok(net)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_len(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_len(&self) -> usize {
        *self.sizes.last().expect("at least two layers")
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Index ranges of layer `l`'s weights and biases within the parameters.
    pub fn layer_ranges(&self, l: usize) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        let mut off = 0;
        for w in self.sizes.windows(2).take(l) {
            off += w[0] * w[1] + w[1];
        }
        let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
        let w = off..off + n_in * n_out;
        let b = w.end..w.end + n_out;
        (w, b)
    }

    pub fn forward(&self, input: &[f64], acts: &mut Activations) -> Result<()> {
        if input.len() != self.input_len() {
            return Err(Error::Dimension {
                expected: self.input_len(),
                actual: input.len(),
            });
        }
        let layers = self.sizes.len() - 1;
        acts.pre.resize_with(layers, Vec::new);
        acts.post.resize_with(layers + 1, Vec::new);
        acts.post[0].clear();
        acts.post[0].extend_from_slice(input);
        for l in 0..layers {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let (wr, br) = self.layer_ranges(l);
            let w = &self.params[wr];
            let (before, after) = acts.post.split_at_mut(l + 1);
            let x = &before[l];
            let z = &mut acts.pre[l];
            z.clear();
            z.extend_from_slice(&self.params[br]);
            for (i, &xi) in x.iter().enumerate().take(n_in) {
                if xi == 0.0 {
                    continue;
                }
                let row = &w[i * n_out..(i + 1) * n_out];
                for (zo, wo) in z.iter_mut().zip(row) {
                    *zo += xi * wo;
                }
            }
            let y = &mut after[0];
            y.clear();
            if l + 1 == layers {
                y.extend_from_slice(z);
            } else {
                y.extend(z.iter().map(|&v| leaky(v)));
            }
        }
        Ok(())
    }

    /// Accumulates the parameter gradient of a loss whose gradient with
    /// respect to the network output is `out_grad`, for the pass recorded in
    /// `acts`. `scratch` is reused between calls.
    pub fn backward(&self, acts: &Activations, out_grad: &[f64], grad: &mut [f64], scratch: &mut (Vec<f64>, Vec<f64>)) {
        debug_assert_eq!(grad.len(), self.params.len());
        let layers = self.sizes.len() - 1;
        let (delta, next) = scratch;
        delta.clear();
        delta.extend_from_slice(out_grad);
        for l in (0..layers).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            if l + 1 != layers {
                for (d, &z) in delta.iter_mut().zip(&acts.pre[l]) {
                    *d *= leaky_grad(z);
                }
            }
            let (wr, br) = self.layer_ranges(l);
            for (g, d) in grad[br].iter_mut().zip(delta.iter()) {
                *g += d;
            }
            let x = &acts.post[l];
            let w = &self.params[wr.clone()];
            let gw = &mut grad[wr];
            for (i, &xi) in x.iter().enumerate().take(n_in) {
                if xi == 0.0 {
                    continue;
                }
                let row = &mut gw[i * n_out..(i + 1) * n_out];
                for (g, d) in row.iter_mut().zip(delta.iter()) {
                    *g += xi * d;
                }
            }
            if l > 0 {
                next.clear();
                next.extend((0..n_in).map(|i| {
                    let row = &w[i * n_out..(i + 1) * n_out];
                    row.iter().zip(delta.iter()).map(|(a, b)| a * b).sum::<f64>()
                }));
                std::mem::swap(delta, next);
            }
        }
    }
}
