//! Dense feed-forward classifiers.

mod io;
mod train;

pub use io::{decode_weights, encode_weights, load_weights, save_weights};
pub use train::{cross_entropy, pgd_attack, train, per_sample_ce, TrainConfig, TrainMode, TrainOutcome};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Tape, Tensor, Var};

/// Fully connected layer computing `W x + b`, `W` stored `[out, in]`
/// row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub in_dim: usize,
    pub out_dim: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Dense(Dense),
    Relu,
    Tanh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    fn layer(self) -> Layer {
        match self {
            Activation::Relu => Layer::Relu,
            Activation::Tanh => Layer::Tanh,
        }
    }
}

/// Ordered stack of layers mapping `[.., input_dim]` to `[.., class_count]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    input_dim: usize,
    class_count: usize,
    layers: Vec<Layer>,
}

/// Tape of one forward pass plus the handles needed to differentiate it.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub tape: Tape,
    pub input: Var,
    pub logits: Var,
    /// `(W, b)` handles for each dense layer in order.
    pub params: Vec<(Var, Var)>,
}

/// Weight and bias gradients of one dense layer.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrad {
    pub w: Tensor,
    pub b: Tensor,
}

impl ForwardPass {
    pub fn logits(&self) -> &Tensor {
        self.tape.value(self.logits)
    }

    /// Gradients of the scalar `output` with respect to every dense layer.
    pub fn param_grads(&self, output: Var) -> Result<Vec<DenseGrad>> {
        let g = self.tape.backward(output, 1.0)?;
        Ok(self
            .params
            .iter()
            .map(|&(w, b)| DenseGrad {
                w: g.wrt(w),
                b: g.wrt(b),
            })
            .collect())
    }

    pub fn input_grad(&self, output: Var, adjoint: f64) -> Result<Tensor> {
        Ok(self.tape.backward(output, adjoint)?.wrt(self.input))
    }
}

impl Classifier {
    /// Validates that layer dimensions compose and that the last dense layer
    /// emits `class_count` outputs.
    pub fn new(input_dim: usize, class_count: usize, layers: Vec<Layer>) -> Result<Self> {
        if input_dim == 0 || class_count < 2 {
            return Err(Error::Schema(format!(
                "need input_dim ≥ 1 and class_count ≥ 2, got {input_dim}, {class_count}"
            )));
        }
        let mut width = input_dim;
        let mut saw_dense = false;
        for (i, layer) in layers.iter().enumerate() {
            if let Layer::Dense(d) = layer {
                if d.in_dim != width {
                    return Err(Error::Schema(format!(
                        "layer {i}: dense expects {} inputs but receives {width}",
                        d.in_dim
                    )));
                }
                if d.out_dim == 0 || d.w.len() != d.in_dim * d.out_dim || d.b.len() != d.out_dim {
                    return Err(Error::Schema(format!(
                        "layer {i}: W has {} values and b has {} for {}x{}",
                        d.w.len(),
                        d.b.len(),
                        d.out_dim,
                        d.in_dim
                    )));
                }
                if d.w.iter().chain(&d.b).any(|v| !v.is_finite()) {
                    return Err(Error::Schema(format!("layer {i}: non-finite weight")));
                }
                width = d.out_dim;
                saw_dense = true;
            }
        }
        if !saw_dense || width != class_count {
            return Err(Error::Schema(format!(
                "network output width {width} does not match class_count {class_count}"
            )));
        }
        Ok(Self {
            input_dim,
            class_count,
            layers,
        })
    }

    /// MLP with Glorot-uniform weights and zero biases. `widths` lists every
    /// layer width including input and output.
    pub fn mlp(widths: &[usize], activation: Activation, seed: u64) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::param("an MLP needs at least input and output widths"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::new();
        for (i, pair) in widths.windows(2).enumerate() {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let w = (0..fan_in * fan_out)
                .map(|_| rng.random_range(-bound..bound))
                .collect();
            layers.push(Layer::Dense(Dense {
                in_dim: fan_in,
                out_dim: fan_out,
                w,
                b: vec![0.0; fan_out],
            }));
            if i + 2 < widths.len() {
                layers.push(activation.layer());
            }
        }
        Self::new(widths[0], *widths.last().unwrap(), layers)
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn dense_layers(&self) -> impl Iterator<Item = &Dense> {
        self.layers.iter().filter_map(|l| match l {
            Layer::Dense(d) => Some(d),
            _ => None,
        })
    }

    pub fn dense_layers_mut(&mut self) -> impl Iterator<Item = &mut Dense> {
        self.layers.iter_mut().filter_map(|l| match l {
            Layer::Dense(d) => Some(d),
            _ => None,
        })
    }

    /// Records the network on a fresh tape. `x` is `[D]` or `[N, D]`.
    pub fn forward(&self, x: &Tensor) -> Result<ForwardPass> {
        if x.shape().is_empty() || x.shape().len() > 2 || x.cols() != self.input_dim {
            return Err(Error::dim(format!(
                "input shape {:?} does not match input dimension {}",
                x.shape(),
                self.input_dim
            )));
        }
        let mut tape = Tape::new();
        let input = tape.input(x.clone())?;
        let mut h = input;
        let mut params = Vec::new();
        for layer in &self.layers {
            h = match layer {
                Layer::Dense(d) => {
                    let w = tape.param(Tensor::from_parts_unchecked(
                        vec![d.out_dim, d.in_dim],
                        d.w.clone(),
                    ));
                    let b = tape.param(Tensor::from_parts_unchecked(vec![d.out_dim], d.b.clone()));
                    params.push((w, b));
                    let z = tape.matmul_t(h, w)?;
                    tape.add_bias(z, b)?
                }
                Layer::Relu => tape.relu(h)?,
                Layer::Tanh => tape.tanh(h)?,
            };
        }
        Ok(ForwardPass {
            tape,
            input,
            logits: h,
            params,
        })
    }

    /// Logits without keeping the tape.
    pub fn logits(&self, x: &Tensor) -> Result<Tensor> {
        let pass = self.forward(x)?;
        Ok(pass.logits().clone())
    }

    /// Argmax class of each row.
    pub fn predict(&self, x: &Tensor) -> Result<Vec<usize>> {
        let z = self.logits(x)?;
        Ok(z
            .row_iter()
            .map(|r| {
                let mut best = 0;
                for (i, &v) in r.iter().enumerate() {
                    if v > r[best] {
                        best = i;
                    }
                }
                best
            })
            .collect())
    }

    /// Fraction of rows whose argmax matches `labels`.
    pub fn accuracy(&self, x: &Tensor, labels: &[usize]) -> Result<f64> {
        let pred = self.predict(x)?;
        let hits = pred.iter().zip(labels).filter(|(a, b)| a == b).count();
        Ok(hits as f64 / labels.len().max(1) as f64)
    }

    /// Zeroes the final dense layer, making every logit constant.
    pub fn zero_head(&mut self) {
        if let Some(d) = self.dense_layers_mut().last() {
            d.w.iter_mut().for_each(|v| *v = 0.0);
            d.b.iter_mut().for_each(|v| *v = 0.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(w: Vec<f64>, b: Vec<f64>) -> Classifier {
        Classifier::new(
            2,
            2,
            vec![Layer::Dense(Dense {
                in_dim: 2,
                out_dim: 2,
                w,
                b,
            })],
        )
        .unwrap()
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let net = single(vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 0.0]);
        let z = net.logits(&Tensor::vector(vec![1.0, 2.0]).unwrap()).unwrap();
        assert_eq!(z.data(), &[1.0, 2.0]);
    }

    #[test]
    fn hand_matrix_product() {
        let net = single(vec![1.0, 0.0, 0.0, -1.0], vec![0.0, 0.0]);
        let z = net.logits(&Tensor::vector(vec![3.0, 4.0]).unwrap()).unwrap();
        assert_eq!(z.data(), &[3.0, -4.0]);
    }

    #[test]
    fn wrong_input_width_is_dimension_error() {
        let net = single(vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 0.0]);
        assert!(matches!(
            net.forward(&Tensor::vector(vec![1.0, 2.0, 3.0]).unwrap()),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn mismatched_layers_are_schema_errors() {
        let bad = Classifier::new(
            2,
            2,
            vec![
                Layer::Dense(Dense {
                    in_dim: 2,
                    out_dim: 3,
                    w: vec![0.0; 6],
                    b: vec![0.0; 3],
                }),
                Layer::Dense(Dense {
                    in_dim: 4,
                    out_dim: 2,
                    w: vec![0.0; 8],
                    b: vec![0.0; 2],
                }),
            ],
        );
        assert!(matches!(bad, Err(Error::Schema(_))));
        assert!(Classifier::new(2, 3, vec![Layer::Relu]).is_err());
    }

    #[test]
    fn mse_weight_gradient_is_outer_product() {
        let net = single(vec![0.5, -1.0, 2.0, 0.25], vec![0.1, -0.2]);
        let x = Tensor::vector(vec![1.5, -2.0]).unwrap();
        let target = Tensor::vector(vec![0.3, 0.7]).unwrap();
        let mut pass = net.forward(&x).unwrap();
        let z = pass.logits().clone();
        let t = pass.tape.leaf(target.clone());
        let r = pass.tape.sub(pass.logits, t).unwrap();
        let sq = pass.tape.mul(r, r).unwrap();
        let loss = pass.tape.sum_all(sq).unwrap();
        let g = pass.param_grads(loss).unwrap();
        // d/dW ‖Wx + b − t‖² = 2 (z − t) xᵀ
        let resid: Vec<f64> = z.data().iter().zip(target.data()).map(|(a, b)| 2.0 * (a - b)).collect();
        let mut expect = Vec::new();
        for r in &resid {
            for xi in x.data() {
                expect.push(r * xi);
            }
        }
        assert_eq!(g[0].w.data(), expect.as_slice());
        assert_eq!(g[0].b.data(), resid.as_slice());
        assert_eq!(pass.tape.grad_params().unwrap()[0], g[0].w);
    }

    #[test]
    fn zero_residual_gives_zero_gradients() {
        let net = single(vec![1.0, 2.0, 3.0, 4.0], vec![0.0, 1.0]);
        let x = Tensor::vector(vec![1.0, 1.0]).unwrap();
        let mut pass = net.forward(&x).unwrap();
        let t = pass.tape.leaf(pass.logits().clone());
        let r = pass.tape.sub(pass.logits, t).unwrap();
        let sq = pass.tape.mul(r, r).unwrap();
        let loss = pass.tape.sum_all(sq).unwrap();
        for g in pass.param_grads(loss).unwrap() {
            assert!(g.w.data().iter().chain(g.b.data()).all(|&v| v == 0.0));
        }
    }

    #[test]
    fn mlp_is_seeded() {
        let a = Classifier::mlp(&[4, 8, 3], Activation::Relu, 9).unwrap();
        let b = Classifier::mlp(&[4, 8, 3], Activation::Relu, 9).unwrap();
        let c = Classifier::mlp(&[4, 8, 3], Activation::Relu, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.layers().len(), 3);
    }
}
