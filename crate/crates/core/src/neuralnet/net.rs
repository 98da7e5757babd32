use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{gemm, Matrix};
use crate::posegen::Axis;
use crate::scalar::Scalar;

/// Encoder hidden widths; the last hidden layer uses tanh, the others ReLU.
pub const ENCODER_HIDDEN: [usize; 5] = [1024, 512, 256, 128, 64];
/// Latent width of the encoder: three coefficients per rotation axis.
pub const ENCODER_OUTPUT: usize = 9;
pub const HEAD_INPUT: usize = 3;
pub const HEAD_HIDDEN: [usize; 2] = [64, 64];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply<T: Scalar>(self, z: T) -> T {
        match self {
            Activation::Relu => z.max(T::zero()),
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    #[inline]
    fn derivative<T: Scalar>(self, z: T, a: T) -> T {
        match self {
            Activation::Relu => {
                if z > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Tanh => T::one() - a * a,
            Activation::Identity => T::one(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetRole {
    Encoder,
    HeadYaw,
    HeadPitch,
    HeadRoll,
    Generic,
}

impl NetRole {
    pub fn head(axis: Axis) -> Self {
        match axis {
            Axis::Yaw => NetRole::HeadYaw,
            Axis::Pitch => NetRole::HeadPitch,
            Axis::Roll => NetRole::HeadRoll,
        }
    }
}

/// Affine map followed by an elementwise activation. `weights` is `out x in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer<T> {
    pub weights: Matrix<T>,
    pub bias: Vec<T>,
    pub activation: Activation,
}

impl<T: Scalar> DenseLayer<T> {
    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn param_count(&self) -> usize {
        self.weights.rows() * self.weights.cols() + self.bias.len()
    }
}

/// Summary of the run that produced a network's weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub samples: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub standardized: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseNet<T> {
    pub role: NetRole,
    /// Seed of the weight initialization.
    pub seed: u64,
    pub layers: Vec<DenseLayer<T>>,
    #[serde(default)]
    pub training: Option<TrainingMeta>,
}

/// Per-layer parameter gradients, same shapes as the layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad<T> {
    pub weights: Matrix<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> DenseNet<T> {
    /// Fully connected net with widths `dims[0] → dims[1] → …` and one activation
    /// per layer. Weights are uniform in `±sqrt(6 / fan_in)`, biases zero.
    pub fn new(role: NetRole, dims: &[usize], activations: &[Activation], seed: u64) -> Result<Self> {
        if dims.len() < 2 || activations.len() != dims.len() - 1 {
            return Err(Error::InvalidArgument(format!(
                "{} widths need {} activations, got {}",
                dims.len(),
                dims.len().saturating_sub(1),
                activations.len()
            )));
        }
        if dims.contains(&0) {
            return Err(Error::InvalidArgument("layer widths must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = dims
            .windows(2)
            .zip(activations)
            .map(|(w, &activation)| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / fan_in as f64).sqrt();
                let weights = Matrix::from_fn(fan_out, fan_in, |_, _| T::lit(rng.random_range(-limit..limit)));
                DenseLayer { weights, bias: vec![T::zero(); fan_out], activation }
            })
            .collect();
        Ok(Self { role, seed, layers, training: None })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(DenseLayer::param_count).sum()
    }

    /// `(widths, activations)`, enough to compare architectures.
    pub fn architecture(&self) -> (Vec<usize>, Vec<Activation>) {
        let mut dims = vec![self.input_dim()];
        dims.extend(self.layers.iter().map(DenseLayer::out_dim));
        (dims, self.layers.iter().map(|l| l.activation).collect())
    }

    /// Checks dimension chaining, bias lengths and finiteness.
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Empty("network layers".into()));
        }
        for (k, l) in self.layers.iter().enumerate() {
            let (r, c) = l.weights.shape();
            if r == 0 || c == 0 || l.weights.as_slice().len() != r * c {
                return Err(Error::Shape(format!("layer {k}: malformed {r}x{c} weight matrix")));
            }
            if l.bias.len() != r {
                return Err(Error::Shape(format!("layer {k}: bias length {} for {r} outputs", l.bias.len())));
            }
            if k > 0 && self.layers[k - 1].out_dim() != c {
                return Err(Error::Shape(format!(
                    "layer {k} expects {c} inputs, previous layer emits {}",
                    self.layers[k - 1].out_dim()
                )));
            }
            if l.weights.as_slice().iter().chain(&l.bias).any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("layer {k} parameters")));
            }
        }
        Ok(())
    }

    /// Single-sample forward pass.
    pub fn forward(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.input_dim() {
            return Err(Error::Shape(format!("input length {} != {}", x.len(), self.input_dim())));
        }
        let mut cur = x.to_vec();
        for l in &self.layers {
            let mut next = l.weights.matvec(&cur)?;
            for (v, &b) in next.iter_mut().zip(&l.bias) {
                *v = l.activation.apply(*v + b);
            }
            cur = next;
        }
        Ok(cur)
    }

    /// Row-wise forward pass over a `batch x input_dim` matrix.
    pub fn forward_batch(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        self.check_batch(x)?;
        let mut cur = x.clone();
        for l in &self.layers {
            cur = affine(&cur, l);
            for r in 0..cur.rows() {
                for v in cur.row_mut(r) {
                    *v = l.activation.apply(*v);
                }
            }
        }
        Ok(cur)
    }

    fn check_batch(&self, x: &Matrix<T>) -> Result<()> {
        if x.cols() != self.input_dim() {
            return Err(Error::Shape(format!("input width {} != {}", x.cols(), self.input_dim())));
        }
        Ok(())
    }

    /// Mean squared error over every entry of the batch output.
    pub fn loss(&self, x: &Matrix<T>, y: &Matrix<T>) -> Result<T> {
        let out = self.forward_batch(x)?;
        check_targets(&out, y)?;
        Ok(mse(&out, y))
    }

    /// Mean squared error and its gradient with respect to every parameter.
    pub fn gradients(&self, x: &Matrix<T>, y: &Matrix<T>) -> Result<(T, Vec<LayerGrad<T>>)> {
        self.check_batch(x)?;
        if x.rows() == 0 {
            return Err(Error::Empty("training batch".into()));
        }
        // keep pre-activations and outputs of every layer
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post: Vec<Matrix<T>> = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            let z = affine(post.last().unwrap_or(x), l);
            let a = z.map(|v| l.activation.apply(v));
            pre.push(z);
            post.push(a);
        }
        let out = post.last().expect("at least one layer");
        check_targets(out, y)?;
        let loss = mse(out, y);
        let scale = T::lit(2.0) / T::from_usize_lossy(out.rows() * out.cols());
        let mut delta = Matrix::from_fn(out.rows(), out.cols(), |i, j| scale * (out[(i, j)] - y[(i, j)]));

        let mut grads = Vec::with_capacity(self.layers.len());
        for k in (0..self.layers.len()).rev() {
            let l = &self.layers[k];
            let (z, a) = (&pre[k], &post[k]);
            for (d, (&zv, &av)) in delta.as_mut_slice().iter_mut().zip(z.as_slice().iter().zip(a.as_slice())) {
                *d *= l.activation.derivative(zv, av);
            }
            let input = if k == 0 { x } else { &post[k - 1] };
            let mut gw = Matrix::zeros(l.out_dim(), l.in_dim());
            gemm(&delta, true, input, false, &mut gw, false);
            let mut gb = vec![T::zero(); l.out_dim()];
            for r in 0..delta.rows() {
                for (g, &d) in gb.iter_mut().zip(delta.row(r)) {
                    *g += d;
                }
            }
            if k > 0 {
                let mut back = Matrix::zeros(delta.rows(), l.in_dim());
                gemm(&delta, false, &l.weights, false, &mut back, false);
                delta = back;
            }
            grads.push(LayerGrad { weights: gw, bias: gb });
        }
        grads.reverse();
        Ok((loss, grads))
    }
}

/// `x·Wᵀ + b` for a batch.
fn affine<T: Scalar>(x: &Matrix<T>, l: &DenseLayer<T>) -> Matrix<T> {
    let mut z = Matrix::zeros(x.rows(), l.out_dim());
    for r in 0..z.rows() {
        z.row_mut(r).copy_from_slice(&l.bias);
    }
    gemm(x, false, &l.weights, true, &mut z, true);
    z
}

fn check_targets<T: Scalar>(out: &Matrix<T>, y: &Matrix<T>) -> Result<()> {
    if out.shape() != y.shape() {
        return Err(Error::Shape(format!("targets {:?} for outputs {:?}", y.shape(), out.shape())));
    }
    Ok(())
}

fn mse<T: Scalar>(out: &Matrix<T>, y: &Matrix<T>) -> T {
    let n = T::from_usize_lossy(out.rows() * out.cols());
    out.as_slice().iter().zip(y.as_slice()).map(|(&o, &t)| (o - t) * (o - t)).sum::<T>() / n
}

/// Landmark encoder: `input_dim → 1024 → 512 → 256 → 128 → 64 → 9`.
pub fn build_encoder<T: Scalar>(input_dim: usize, seed: u64) -> Result<DenseNet<T>> {
    if input_dim == 0 {
        return Err(Error::InvalidArgument("encoder input dimension must be positive".into()));
    }
    let mut dims = vec![input_dim];
    dims.extend(ENCODER_HIDDEN);
    dims.push(ENCODER_OUTPUT);
    let acts = [
        Activation::Relu,
        Activation::Relu,
        Activation::Relu,
        Activation::Relu,
        Activation::Tanh,
        Activation::Identity,
    ];
    DenseNet::new(NetRole::Encoder, &dims, &acts, seed)
}

/// Angle regressor for one axis: `3 → 64 → 64 → 1`.
pub fn build_head<T: Scalar>(axis: Axis, seed: u64) -> DenseNet<T> {
    build_head_for(axis, HEAD_INPUT, seed).expect("fixed head architecture is valid")
}

/// Head architecture for a latent block of `input_dim` coefficients.
pub fn build_head_for<T: Scalar>(axis: Axis, input_dim: usize, seed: u64) -> Result<DenseNet<T>> {
    let dims = [input_dim, HEAD_HIDDEN[0], HEAD_HIDDEN[1], 1];
    let acts = [Activation::Relu, Activation::Relu, Activation::Identity];
    DenseNet::new(NetRole::head(axis), &dims, &acts, seed)
}
