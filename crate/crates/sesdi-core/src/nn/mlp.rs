//! MLP layers with manual forward/backward passes.
//!
//! All training math is f64. The batch variants treat each matrix row as one
//! independent input; gradients accumulate over rows in row order, which
//! keeps results bit-identical no matter how callers schedule work.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::matrix::{gemm_nn, gemm_nt, gemm_tn_acc, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    z
                } else {
                    0.0
                }
            }
            Activation::Identity => z,
        }
    }

    /// Derivative as a gate on the cached pre-activation. The ReLU
    /// subgradient at exactly 0 is 0.
    fn gate(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// Architecture of one MLP: `layer_dims[0]` is the input width, each later
/// entry one layer's output width, with a per-layer activation flag.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpSpec {
    pub layer_dims: Vec<usize>,
    pub activations: Vec<Activation>,
}

impl MlpSpec {
    /// ReLU on every hidden layer, identity on the last.
    pub fn relu_head(dims: &[usize]) -> Self {
        let n_layers = dims.len() - 1;
        let mut activations = vec![Activation::Relu; n_layers];
        if let Some(last) = activations.last_mut() {
            *last = Activation::Identity;
        }
        MlpSpec {
            layer_dims: dims.to_vec(),
            activations,
        }
    }

    /// ReLU on every layer, including the last.
    pub fn all_relu(dims: &[usize]) -> Self {
        MlpSpec {
            layer_dims: dims.to_vec(),
            activations: vec![Activation::Relu; dims.len() - 1],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_dims.len() < 2 {
            return Err(Error::param("MLP needs at least one layer"));
        }
        if self.activations.len() != self.layer_dims.len() - 1 {
            return Err(Error::param(format!(
                "{} activations for {} layers",
                self.activations.len(),
                self.layer_dims.len() - 1
            )));
        }
        if self.layer_dims.contains(&0) {
            return Err(Error::param("zero-width layer"));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    pub fn n_layers(&self) -> usize {
        self.layer_dims.len() - 1
    }

    pub fn param_count(&self) -> usize {
        self.layer_dims
            .windows(2)
            .map(|w| w[0] * w[1] + w[1])
            .sum()
    }
}

/// One dense layer: `weights` is out x in, `bias` has one entry per output.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

/// Learnable parameters of an MLP. Also used as the gradient container,
/// since gradients mirror the parameter shapes exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub layers: Vec<DenseLayer>,
}

impl MlpParams {
    /// Uniform init in +-sqrt(6 / (fan_in + fan_out)), biases zero.
    pub fn init(spec: &MlpSpec, rng: &mut ChaCha8Rng) -> Result<Self> {
        spec.validate()?;
        let mut layers = Vec::with_capacity(spec.n_layers());
        for w in spec.layer_dims.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let weights = Matrix::from_fn(fan_out, fan_in, |_, _| rng.random_range(-limit..limit));
            layers.push(DenseLayer {
                weights,
                bias: vec![0.0; fan_out],
            });
        }
        Ok(MlpParams { layers })
    }

    pub fn zeros(spec: &MlpSpec) -> Result<Self> {
        spec.validate()?;
        let layers = spec
            .layer_dims
            .windows(2)
            .map(|w| DenseLayer {
                weights: Matrix::zeros(w[1], w[0]),
                bias: vec![0.0; w[1]],
            })
            .collect();
        Ok(MlpParams { layers })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().weights.rows()
    }

    pub fn matches(&self, spec: &MlpSpec) -> bool {
        self.layers.len() == spec.n_layers()
            && self
                .layers
                .iter()
                .zip(spec.layer_dims.windows(2))
                .all(|(l, w)| l.weights.cols() == w[0] && l.weights.rows() == w[1])
    }

    /// self += alpha * other, elementwise over every weight and bias.
    pub fn add_scaled(&mut self, other: &MlpParams, alpha: f64) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weights.add_scaled(&b.weights, alpha);
            for (x, y) in a.bias.iter_mut().zip(&b.bias) {
                *x += alpha * y;
            }
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for l in &mut self.layers {
            l.weights.scale(alpha);
            for b in &mut l.bias {
                *b *= alpha;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.is_finite() && l.bias.iter().all(|b| b.is_finite()))
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.rows() * l.weights.cols() + l.bias.len())
            .sum()
    }

    /// Visit every scalar parameter mutably, in a fixed canonical order.
    pub fn for_each_param_mut(&mut self, mut f: impl FnMut(&mut f64)) {
        for l in &mut self.layers {
            for w in l.weights.data_mut() {
                f(w);
            }
            for b in &mut l.bias {
                f(b);
            }
        }
    }

    /// Visit every scalar parameter, in the same canonical order.
    pub fn for_each_param(&self, mut f: impl FnMut(f64)) {
        for l in &self.layers {
            for w in l.weights.data() {
                f(*w);
            }
            for b in &l.bias {
                f(*b);
            }
        }
    }
}

/// Everything the backward pass needs from a forward pass: the input to each
/// layer and each layer's pre-activations.
#[derive(Debug, Clone)]
pub struct MlpCache {
    pub layer_inputs: Vec<Matrix>,
    pub pre_acts: Vec<Matrix>,
    pub activations: Vec<Activation>,
}

/// Batch forward: each row of `input` is one sample.
pub fn mlp_forward_batch(params: &MlpParams, input: &Matrix, spec: &MlpSpec) -> Result<(Matrix, MlpCache)> {
    if input.cols() != params.input_dim() {
        return Err(Error::shape(format!(
            "input width {} != first layer width {}",
            input.cols(),
            params.input_dim()
        )));
    }
    if !params.matches(spec) {
        return Err(Error::shape("params do not match spec"));
    }
    let n = input.rows();
    let mut layer_inputs = Vec::with_capacity(params.layers.len());
    let mut pre_acts = Vec::with_capacity(params.layers.len());
    let mut current = input.clone();
    for (layer, act) in params.layers.iter().zip(&spec.activations) {
        let out_dim = layer.weights.rows();
        let mut z = Matrix::zeros(n, out_dim);
        gemm_nt(&current, &layer.weights, &mut z);
        for r in 0..n {
            let row = z.row_mut(r);
            for (zv, b) in row.iter_mut().zip(&layer.bias) {
                *zv += b;
            }
        }
        layer_inputs.push(current);
        pre_acts.push(z.clone());
        for v in z.data_mut() {
            *v = act.apply(*v);
        }
        current = z;
    }
    let cache = MlpCache {
        layer_inputs,
        pre_acts,
        activations: spec.activations.clone(),
    };
    Ok((current, cache))
}

/// Batch backward. Returns parameter gradients (summed over rows) and the
/// gradient with respect to the input, row for row.
pub fn mlp_backward_batch(
    params: &MlpParams,
    cache: &MlpCache,
    grad_output: &Matrix,
) -> Result<(MlpParams, Matrix)> {
    let n_layers = params.layers.len();
    if cache.layer_inputs.len() != n_layers || cache.pre_acts.len() != n_layers {
        return Err(Error::shape("cache does not match params"));
    }
    if grad_output.cols() != params.output_dim()
        || grad_output.rows() != cache.layer_inputs[0].rows()
    {
        return Err(Error::shape(format!(
            "grad output {}x{} does not match cached forward",
            grad_output.rows(),
            grad_output.cols()
        )));
    }
    let mut grads = MlpParams {
        layers: params
            .layers
            .iter()
            .map(|l| DenseLayer {
                weights: Matrix::zeros(l.weights.rows(), l.weights.cols()),
                bias: vec![0.0; l.bias.len()],
            })
            .collect(),
    };
    let mut delta = grad_output.clone();
    for li in (0..n_layers).rev() {
        let z = &cache.pre_acts[li];
        if z.rows() != delta.rows() || z.cols() != delta.cols() {
            return Err(Error::shape("stale cache: pre-activation shape mismatch"));
        }
        let act = cache.activations[li];
        for (d, zv) in delta.data_mut().iter_mut().zip(z.data()) {
            *d *= act.gate(*zv);
        }
        let input = &cache.layer_inputs[li];
        gemm_tn_acc(&delta, input, &mut grads.layers[li].weights);
        for r in 0..delta.rows() {
            for (gb, d) in grads.layers[li].bias.iter_mut().zip(delta.row(r)) {
                *gb += d;
            }
        }
        let mut next = Matrix::zeros(delta.rows(), params.layers[li].weights.cols());
        gemm_nn(&delta, &params.layers[li].weights, &mut next);
        delta = next;
    }
    Ok((grads, delta))
}

/// Single-vector forward; thin wrapper over the batch path so both share one
/// code path (and therefore identical rounding).
pub fn mlp_forward(params: &MlpParams, spec: &MlpSpec, input: &[f64]) -> Result<(Vec<f64>, MlpCache)> {
    let x = Matrix::from_vec(1, input.len(), input.to_vec())?;
    let (y, cache) = mlp_forward_batch(params, &x, spec)?;
    Ok((y.data().to_vec(), cache))
}

/// Single-vector backward matching [`mlp_forward`].
pub fn mlp_backward(
    params: &MlpParams,
    cache: &MlpCache,
    grad_output: &[f64],
) -> Result<(MlpParams, Vec<f64>)> {
    let g = Matrix::from_vec(1, grad_output.len(), grad_output.to_vec())?;
    let (grads, gi) = mlp_backward_batch(params, cache, &g)?;
    Ok((grads, gi.data().to_vec()))
}
