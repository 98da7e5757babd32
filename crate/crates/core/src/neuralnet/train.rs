use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::net::{DenseNet, TrainingMeta};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Loss {
    #[default]
    Mse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Seeds the per-epoch shuffles.
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub loss: Loss,
    /// Train on z-scored inputs and targets, then fold the affine maps back into
    /// the first and last layers so the returned net consumes raw inputs.
    pub standardize: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 64,
            epochs: 200,
            seed: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            loss: Loss::Mse,
            standardize: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("training {what}")));
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return bad("learning rate must be finite and non-negative");
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("moment decay rates must lie in [0, 1)");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport<T> {
    /// Loss over the full training set before the first update.
    pub initial_loss: T,
    /// Sample-weighted mean of batch losses, one entry per epoch.
    pub epoch_losses: Vec<T>,
    /// Loss over the full training set after the last update.
    pub final_loss: T,
}

struct Adam<T> {
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
    step: i32,
}

impl<T: Scalar> Adam<T> {
    fn new(net: &DenseNet<T>) -> Self {
        let sizes: Vec<usize> = net.layers.iter().map(|l| l.param_count()).collect();
        Self {
            m: sizes.iter().map(|&n| vec![T::zero(); n]).collect(),
            v: sizes.iter().map(|&n| vec![T::zero(); n]).collect(),
            step: 0,
        }
    }
}

struct AdamStep<T> {
    b1: T,
    b2: T,
    lr: T,
    eps: T,
    c1: T,
    c2: T,
}

impl<T: Scalar> AdamStep<T> {
    /// Plain slices and a branch-free flush so the loop vectorizes.
    #[inline]
    fn apply(&self, p: &mut [T], g: &[T], m: &mut [T], v: &mut [T]) {
        let (one, tiny) = (T::one(), T::min_positive_value());
        let n = p.len();
        let (g, m, v) = (&g[..n], &mut m[..n], &mut v[..n]);
        for i in 0..n {
            let gi = g[i];
            let mi = self.b1 * m[i] + (one - self.b1) * gi;
            // dead units decay m geometrically; subnormals would stall every later step
            let mi = if mi.abs() < tiny { T::zero() } else { mi };
            let vi = self.b2 * v[i] + (one - self.b2) * gi * gi;
            m[i] = mi;
            v[i] = vi;
            p[i] -= self.lr * (mi / self.c1) / ((vi / self.c2).sqrt() + self.eps);
        }
    }
}

/// Mini-batch Adam on the mean squared error. Bit-deterministic for a given
/// `(net, data, cfg)`.
pub fn train<T: Scalar>(
    net: &mut DenseNet<T>,
    inputs: &Matrix<T>,
    targets: &Matrix<T>,
    cfg: &TrainConfig,
) -> Result<TrainReport<T>> {
    cfg.validate()?;
    net.validate()?;
    if inputs.rows() == 0 {
        return Err(Error::Empty("training set".into()));
    }
    if inputs.rows() != targets.rows() || inputs.cols() != net.input_dim() || targets.cols() != net.output_dim() {
        return Err(Error::Shape(format!(
            "inputs {:?} / targets {:?} for a {}→{} net",
            inputs.shape(),
            targets.shape(),
            net.input_dim(),
            net.output_dim()
        )));
    }
    if inputs.as_slice().iter().chain(targets.as_slice()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("training data".into()));
    }
    let report = if cfg.standardize {
        let initial_loss = net.loss(inputs, targets)?;
        let (xs, x_aff) = zscore(inputs);
        let (ys, y_aff) = zscore(targets);
        unfold_affines(net, &x_aff, &y_aff);
        let r = run(net, &xs, &ys, cfg);
        fold_affines(net, &x_aff, &y_aff);
        let mut r = r?;
        // report losses in target units
        let s2 = y_aff.iter().map(|&(_, s)| s * s).sum::<T>() / T::from_usize_lossy(y_aff.len());
        r.initial_loss = initial_loss;
        r.final_loss = net.loss(inputs, targets)?;
        for l in &mut r.epoch_losses {
            *l *= s2;
        }
        r
    } else {
        run(net, inputs, targets, cfg)?
    };
    net.training = Some(TrainingMeta {
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        learning_rate: cfg.learning_rate,
        seed: cfg.seed,
        samples: inputs.rows(),
        initial_loss: report.initial_loss.as_f64(),
        final_loss: report.final_loss.as_f64(),
        standardized: cfg.standardize,
    });
    Ok(report)
}

fn run<T: Scalar>(net: &mut DenseNet<T>, x: &Matrix<T>, y: &Matrix<T>, cfg: &TrainConfig) -> Result<TrainReport<T>> {
    let n = x.rows();
    let initial_loss = net.loss(x, y)?;
    if !initial_loss.is_finite() {
        return Err(Error::Divergence("non-finite loss before training".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut adam = Adam::new(net);
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let (b1, b2) = (T::lit(cfg.beta1), T::lit(cfg.beta2));
    let (lr, eps) = (T::lit(cfg.learning_rate), T::lit(cfg.epsilon));

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = T::zero();
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let xb = Matrix::from_fn(chunk.len(), x.cols(), |i, j| x[(chunk[i], j)]);
            let yb = Matrix::from_fn(chunk.len(), y.cols(), |i, j| y[(chunk[i], j)]);
            let (loss, grads) = net.gradients(&xb, &yb)?;
            if !loss.is_finite() {
                return Err(Error::Divergence(format!("loss became {loss} at epoch {epoch}, batch {b}")));
            }
            total += loss * T::from_usize_lossy(chunk.len());

            adam.step += 1;
            let h = AdamStep {
                b1,
                b2,
                lr,
                eps,
                c1: T::one() - b1.powi(adam.step),
                c2: T::one() - b2.powi(adam.step),
            };
            for (k, (layer, g)) in net.layers.iter_mut().zip(&grads).enumerate() {
                let nw = g.weights.as_slice().len();
                let (mw, mb) = adam.m[k].split_at_mut(nw);
                let (vw, vb) = adam.v[k].split_at_mut(nw);
                h.apply(layer.weights.as_mut_slice(), g.weights.as_slice(), mw, vw);
                h.apply(&mut layer.bias, &g.bias, mb, vb);
            }
        }
        let mean = total / T::from_usize_lossy(n);
        log::debug!("epoch {}/{}: loss {:.6e}", epoch + 1, cfg.epochs, mean.as_f64());
        epoch_losses.push(mean);
    }
    let final_loss = net.loss(x, y)?;
    if !final_loss.is_finite() {
        return Err(Error::Divergence("non-finite loss after training".into()));
    }
    Ok(TrainReport { initial_loss, epoch_losses, final_loss })
}

/// Column-wise z-scores plus `(mean, std)` per column; constant columns keep std 1.
fn zscore<T: Scalar>(m: &Matrix<T>) -> (Matrix<T>, Vec<(T, T)>) {
    let n = T::from_usize_lossy(m.rows());
    let aff: Vec<(T, T)> = (0..m.cols())
        .map(|j| {
            let col = m.column(j);
            let mean = col.iter().copied().sum::<T>() / n;
            let var = col.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
            let sd = var.sqrt();
            (mean, if sd > T::lit(1e-12) * (mean.abs() + T::one()) { sd } else { T::one() })
        })
        .collect();
    let z = Matrix::from_fn(m.rows(), m.cols(), |i, j| (m[(i, j)] - aff[j].0) / aff[j].1);
    (z, aff)
}

/// Rewrites a raw-space net so it acts on standardized data (inverse of [`fold_affines`]).
fn unfold_affines<T: Scalar>(net: &mut DenseNet<T>, x_aff: &[(T, T)], y_aff: &[(T, T)]) {
    let first = &mut net.layers[0];
    for r in 0..first.weights.rows() {
        let row = first.weights.row_mut(r);
        let mut shift = T::zero();
        for (w, &(mu, sd)) in row.iter_mut().zip(x_aff) {
            shift += *w * mu;
            *w *= sd;
        }
        first.bias[r] += shift;
    }
    let last = net.layers.last_mut().expect("validated net");
    for (r, &(mu, sd)) in y_aff.iter().enumerate() {
        for w in last.weights.row_mut(r) {
            *w /= sd;
        }
        last.bias[r] = (last.bias[r] - mu) / sd;
    }
}

/// Absorbs input standardization into the first layer and target
/// de-standardization into the last one.
fn fold_affines<T: Scalar>(net: &mut DenseNet<T>, x_aff: &[(T, T)], y_aff: &[(T, T)]) {
    let first = &mut net.layers[0];
    for r in 0..first.weights.rows() {
        let row = first.weights.row_mut(r);
        let mut shift = T::zero();
        for (w, &(mu, sd)) in row.iter_mut().zip(x_aff) {
            *w /= sd;
            shift += *w * mu;
        }
        first.bias[r] -= shift;
    }
    let last = net.layers.last_mut().expect("validated net");
    for (r, &(mu, sd)) in y_aff.iter().enumerate() {
        for w in last.weights.row_mut(r) {
            *w *= sd;
        }
        last.bias[r] = last.bias[r] * sd + mu;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuralnet::{Activation, NetRole};

    fn toy() -> (Matrix<f64>, Matrix<f64>) {
        let x = Matrix::from_fn(50, 3, |i, j| ((i * 7 + j * 3) % 11) as f64 / 5.0 - 1.0);
        let y = Matrix::from_fn(50, 1, |i, _| (x[(i, 0)] - 0.5 * x[(i, 2)]).sin());
        (x, y)
    }

    #[test]
    fn zero_learning_rate_leaves_weights() {
        let (x, y) = toy();
        let mut net = DenseNet::new(NetRole::Generic, &[3, 8, 1], &[Activation::Relu, Activation::Identity], 2).unwrap();
        let before = net.layers.clone();
        let cfg = TrainConfig { learning_rate: 0.0, epochs: 5, batch_size: 7, ..Default::default() };
        train(&mut net, &x, &y, &cfg).unwrap();
        assert_eq!(net.layers, before);
    }

    #[test]
    fn same_seed_same_history() {
        let (x, y) = toy();
        let cfg = TrainConfig { epochs: 20, batch_size: 8, seed: 4, ..Default::default() };
        let run = || {
            let mut net = DenseNet::new(NetRole::Generic, &[3, 8, 1], &[Activation::Tanh, Activation::Identity], 5).unwrap();
            let r = train(&mut net, &x, &y, &cfg).unwrap();
            (r.epoch_losses, net)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn standardization_round_trips_exactly_enough() {
        let (x, y) = toy();
        let net = DenseNet::new(NetRole::Generic, &[3, 4, 1], &[Activation::Tanh, Activation::Identity], 1).unwrap();
        let (_, xa) = zscore(&x);
        let (_, ya) = zscore(&y);
        let mut copy = net.clone();
        unfold_affines(&mut copy, &xa, &ya);
        fold_affines(&mut copy, &xa, &ya);
        let (a, b) = (net.forward_batch(&x).unwrap(), copy.forward_batch(&x).unwrap());
        for (p, q) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_config_and_shapes() {
        let (x, y) = toy();
        let mut net = DenseNet::new(NetRole::Generic, &[3, 1], &[Activation::Identity], 0).unwrap();
        let bad = TrainConfig { batch_size: 0, ..Default::default() };
        assert!(train(&mut net, &x, &y, &bad).is_err());
        let wrong = Matrix::zeros(50, 2);
        assert!(train(&mut net, &x, &wrong, &TrainConfig::default()).is_err());
    }

    #[test]
    fn divergence_is_reported() {
        let (x, y) = toy();
        let mut net = DenseNet::new(NetRole::Generic, &[3, 1], &[Activation::Identity], 0).unwrap();
        let cfg = TrainConfig { learning_rate: 1e308, epochs: 3, ..Default::default() };
        assert!(matches!(train(&mut net, &x, &y, &cfg), Err(Error::Divergence(_))));
    }
}
