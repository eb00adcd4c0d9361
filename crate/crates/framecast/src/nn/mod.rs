//! Minimal dense-network kernel: forward/backward for small fixed MLPs,
//! MSE loss, SGD with momentum, and a finite-difference gradient check.
//!
//! Everything is `f64` internally; 32-bit floats appear only on the wire.
//! Backprop is hand-derived for the dense-layer chain rather than a general
//! tape: the three networks in this crate are all small fixed MLPs.

mod checkpoint;
mod train;

pub use checkpoint::{read_mlp, read_mlp_from_slice, write_mlp, CHECKPOINT_MAGIC};
pub(crate) use checkpoint::read_mlp_inner as read_embedded_mlp;
pub use train::{fit_regression, FitReport, Fitted};

/// Cursor over raw bytes for container formats that embed checkpoints.
pub(crate) fn checkpoint_cursor(bytes: &[u8]) -> checkpoint::Cursor<'_> {
    checkpoint::Cursor::new(bytes)
}

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("layer dims do not chain: layer {index} takes {in_dim} but previous emits {prev_out}")]
    BrokenChain {
        index: usize,
        in_dim: usize,
        prev_out: usize,
    },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
    Sigmoid,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Relu => {
                if z > 0.0 {
                    z
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
        }
    }

    /// Derivative at pre-activation `z`.
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => {
                let s = 1.0 / (1.0 + (-z).exp());
                s * (1.0 - s)
            }
        }
    }

    pub(crate) fn id(self) -> u8 {
        match self {
            Activation::Identity => 0,
            Activation::Relu => 1,
            Activation::Sigmoid => 2,
        }
    }

    pub(crate) fn from_id(id: u8) -> Option<Self> {
        match id {
            0 => Some(Activation::Identity),
            1 => Some(Activation::Relu),
            2 => Some(Activation::Sigmoid),
            _ => None,
        }
    }
}

/// One dense layer: `out = act(W x + b)` with `W` stored row-major,
/// one row per output unit.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn zeros(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        DenseLayer {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
            activation,
        }
    }

    /// Weights uniform in ±sqrt(6 / (fan_in + fan_out)), bias zero.
    pub fn seeded(in_dim: usize, out_dim: usize, activation: Activation, rng: &mut ChaCha8Rng) -> Self {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit);
        let weights = (0..in_dim * out_dim).map(|_| dist.sample(rng)).collect();
        DenseLayer {
            in_dim,
            out_dim,
            weights,
            bias: vec![0.0; out_dim],
            activation,
        }
    }
}

/// A chain of dense layers. An empty chain is the identity function.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Mlp {
    pub layers: Vec<DenseLayer>,
}

impl Mlp {
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self, NnError> {
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[1].in_dim != pair[0].out_dim {
                return Err(NnError::BrokenChain {
                    index: i + 1,
                    in_dim: pair[1].in_dim,
                    prev_out: pair[0].out_dim,
                });
            }
        }
        Ok(Mlp { layers })
    }

    /// Build a seeded MLP from a dim chain: `dims.len() == activations.len() + 1`.
    pub fn seeded(dims: &[usize], activations: &[Activation], seed: u64) -> Self {
        assert_eq!(dims.len(), activations.len() + 1, "dim chain mismatch");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = activations
            .iter()
            .enumerate()
            .map(|(i, &act)| DenseLayer::seeded(dims[i], dims[i + 1], act, &mut rng))
            .collect();
        Mlp { layers }
    }

    pub fn in_dim(&self) -> Option<usize> {
        self.layers.first().map(|l| l.in_dim)
    }

    pub fn out_dim(&self) -> Option<usize> {
        self.layers.last().map(|l| l.out_dim)
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }
}

/// Per-layer values captured by [`forward`], sufficient for [`backward`].
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    layers: Vec<LayerTrace>,
    pub output: Vec<f64>,
}

#[derive(Debug, Clone)]
struct LayerTrace {
    /// Input to the layer (the previous layer's post-activation).
    input: Vec<f64>,
    /// Pre-activation `W x + b`.
    preact: Vec<f64>,
}

/// Parameter gradients, same shapes as the network's layers.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
}

#[derive(Debug, Clone)]
pub struct LayerGrad {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        Gradients {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGrad {
                    weights: vec![0.0; l.weights.len()],
                    bias: vec![0.0; l.bias.len()],
                })
                .collect(),
        }
    }

    pub fn accumulate(&mut self, other: &Gradients) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.weights.iter_mut().zip(&b.weights) {
                *x += *y;
            }
            for (x, y) in a.bias.iter_mut().zip(&b.bias) {
                *x += *y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for layer in &mut self.layers {
            for w in &mut layer.weights {
                *w *= factor;
            }
            for b in &mut layer.bias {
                *b *= factor;
            }
        }
    }
}

/// Run the network, capturing the trace needed for [`backward`].
pub fn forward(net: &Mlp, input: &[f64]) -> Result<(Vec<f64>, ForwardTrace), NnError> {
    if let Some(expected) = net.in_dim() {
        if input.len() != expected {
            return Err(NnError::DimensionMismatch {
                expected,
                got: input.len(),
                context: "forward input",
            });
        }
    }
    if input.iter().any(|v| !v.is_finite()) {
        return Err(NnError::NonFinite("forward input"));
    }

    let mut current = input.to_vec();
    let mut traces = Vec::with_capacity(net.layers.len());
    for layer in &net.layers {
        let mut preact = vec![0.0; layer.out_dim];
        for (r, z) in preact.iter_mut().enumerate() {
            let row = &layer.weights[r * layer.in_dim..(r + 1) * layer.in_dim];
            let mut acc = layer.bias[r];
            for (w, x) in row.iter().zip(&current) {
                acc += w * x;
            }
            *z = acc;
        }
        let post: Vec<f64> = preact.iter().map(|&z| layer.activation.apply(z)).collect();
        traces.push(LayerTrace {
            input: std::mem::replace(&mut current, post),
            preact,
        });
    }
    let trace = ForwardTrace {
        layers: traces,
        output: current.clone(),
    };
    Ok((current, trace))
}

/// Backpropagate `loss_grad` (dL/d output) through the trace.
///
/// Returns the parameter gradients and the gradient with respect to the
/// network input, so callers can chain networks (decoder into encoder).
pub fn backward(
    net: &Mlp,
    trace: &ForwardTrace,
    loss_grad: &[f64],
) -> Result<(Gradients, Vec<f64>), NnError> {
    if trace.layers.len() != net.layers.len() {
        return Err(NnError::DimensionMismatch {
            expected: net.layers.len(),
            got: trace.layers.len(),
            context: "trace depth",
        });
    }
    if loss_grad.len() != trace.output.len() {
        return Err(NnError::DimensionMismatch {
            expected: trace.output.len(),
            got: loss_grad.len(),
            context: "loss gradient",
        });
    }

    let mut grads = Vec::with_capacity(net.layers.len());
    let mut upstream = loss_grad.to_vec();
    for (layer, ltrace) in net.layers.iter().zip(&trace.layers).rev() {
        // dz = upstream ⊙ act'(z)
        let dz: Vec<f64> = upstream
            .iter()
            .zip(&ltrace.preact)
            .map(|(&g, &z)| g * layer.activation.derivative(z))
            .collect();
        let mut dw = vec![0.0; layer.in_dim * layer.out_dim];
        for (r, &d) in dz.iter().enumerate() {
            let row = &mut dw[r * layer.in_dim..(r + 1) * layer.in_dim];
            for (slot, x) in row.iter_mut().zip(&ltrace.input) {
                *slot = d * x;
            }
        }
        // Gradient w.r.t. the layer input: Wᵀ dz.
        let mut dx = vec![0.0; layer.in_dim];
        for (r, &d) in dz.iter().enumerate() {
            let row = &layer.weights[r * layer.in_dim..(r + 1) * layer.in_dim];
            for (slot, w) in dx.iter_mut().zip(row) {
                *slot += w * d;
            }
        }
        grads.push(LayerGrad { weights: dw, bias: dz });
        upstream = dx;
    }
    grads.reverse();
    Ok((Gradients { layers: grads }, upstream))
}

/// Mean squared error and its gradient: `loss = mean((pred - target)^2)`,
/// `grad = 2 (pred - target) / n`.
pub fn mse_loss(pred: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>), NnError> {
    if pred.len() != target.len() {
        return Err(NnError::DimensionMismatch {
            expected: target.len(),
            got: pred.len(),
            context: "mse operands",
        });
    }
    let n = pred.len().max(1) as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; pred.len()];
    for (i, (&p, &t)) in pred.iter().zip(target).enumerate() {
        let d = p - t;
        loss += d * d;
        grad[i] = 2.0 * d / n;
    }
    Ok((loss / n, grad))
}

/// Training hyperparameters shared by the autoencoder and predictor loops.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 15,
            learning_rate: 0.05,
            momentum: 0.9,
            batch_size: 16,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        if self.epochs == 0 {
            return Err(NnError::Checkpoint("epochs must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(NnError::NonFinite("learning rate must be > 0"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(NnError::NonFinite("momentum must be in [0, 1)"));
        }
        if self.batch_size == 0 {
            return Err(NnError::Checkpoint("batch size must be >= 1".into()));
        }
        Ok(())
    }
}

/// SGD with momentum. Velocity persists for the optimizer's lifetime:
/// `v ← momentum·v + g`, `p ← p − lr·v`.
#[derive(Debug, Clone)]
pub struct SgdMomentum {
    velocity: Gradients,
    pub learning_rate: f64,
    pub momentum: f64,
}

impl SgdMomentum {
    pub fn new(net: &Mlp, learning_rate: f64, momentum: f64) -> Self {
        SgdMomentum {
            velocity: Gradients::zeros_like(net),
            learning_rate,
            momentum,
        }
    }

    pub fn step(&mut self, net: &mut Mlp, grads: &Gradients) -> Result<(), NnError> {
        if grads.layers.len() != net.layers.len() {
            return Err(NnError::DimensionMismatch {
                expected: net.layers.len(),
                got: grads.layers.len(),
                context: "sgd gradients",
            });
        }
        for ((layer, grad), vel) in net
            .layers
            .iter_mut()
            .zip(&grads.layers)
            .zip(&mut self.velocity.layers)
        {
            if grad.weights.len() != layer.weights.len() || grad.bias.len() != layer.bias.len() {
                return Err(NnError::DimensionMismatch {
                    expected: layer.weights.len(),
                    got: grad.weights.len(),
                    context: "sgd layer shape",
                });
            }
            for ((p, &g), v) in layer
                .weights
                .iter_mut()
                .zip(&grad.weights)
                .zip(&mut vel.weights)
            {
                *v = self.momentum * *v + g;
                *p -= self.learning_rate * *v;
                if !p.is_finite() {
                    return Err(NnError::NonFinite("sgd weight update"));
                }
            }
            for ((p, &g), v) in layer.bias.iter_mut().zip(&grad.bias).zip(&mut vel.bias) {
                *v = self.momentum * *v + g;
                *p -= self.learning_rate * *v;
                if !p.is_finite() {
                    return Err(NnError::NonFinite("sgd bias update"));
                }
            }
        }
        Ok(())
    }
}

/// Compare analytic gradients against central differences of the MSE loss.
///
/// Returns the maximum of `|a − n| / max(|a|, |n|, 1e-8)` over every
/// parameter. A degenerate network with no parameters returns 0.
pub fn finite_diff_check(
    net: &Mlp,
    input: &[f64],
    target: &[f64],
    epsilon: f64,
) -> Result<f64, NnError> {
    assert!(epsilon > 0.0, "epsilon must be positive");
    let (pred, trace) = forward(net, input)?;
    let (_, loss_grad) = mse_loss(&pred, target)?;
    let (analytic, _) = backward(net, &trace, &loss_grad)?;

    let loss_at = |perturbed: &Mlp| -> Result<f64, NnError> {
        let (pred, _) = forward(perturbed, input)?;
        Ok(mse_loss(&pred, target)?.0)
    };

    let mut worst = 0.0_f64;
    let mut scratch = net.clone();
    for li in 0..net.layers.len() {
        for wi in 0..net.layers[li].weights.len() {
            let original = scratch.layers[li].weights[wi];
            scratch.layers[li].weights[wi] = original + epsilon;
            let plus = loss_at(&scratch)?;
            scratch.layers[li].weights[wi] = original - epsilon;
            let minus = loss_at(&scratch)?;
            scratch.layers[li].weights[wi] = original;
            let numeric = (plus - minus) / (2.0 * epsilon);
            let a = analytic.layers[li].weights[wi];
            worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8));
        }
        for bi in 0..net.layers[li].bias.len() {
            let original = scratch.layers[li].bias[bi];
            scratch.layers[li].bias[bi] = original + epsilon;
            let plus = loss_at(&scratch)?;
            scratch.layers[li].bias[bi] = original - epsilon;
            let minus = loss_at(&scratch)?;
            scratch.layers[li].bias[bi] = original;
            let numeric = (plus - minus) / (2.0 * epsilon);
            let a = analytic.layers[li].bias[bi];
            worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layer(in_dim: usize, out_dim: usize, w: &[f64], b: &[f64], act: Activation) -> DenseLayer {
        DenseLayer {
            in_dim,
            out_dim,
            weights: w.to_vec(),
            bias: b.to_vec(),
            activation: act,
        }
    }

    #[test]
    fn zero_net_outputs_depend_on_activation() {
        for (act, expected) in [
            (Activation::Identity, 0.0),
            (Activation::Relu, 0.0),
            (Activation::Sigmoid, 0.5),
        ] {
            let net = Mlp::new(vec![DenseLayer::zeros(3, 2, act)]).unwrap();
            let (out, _) = forward(&net, &[1.0, -2.0, 3.0]).unwrap();
            assert_eq!(out, vec![expected; 2]);
        }
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let net = Mlp::new(vec![layer(
            2,
            2,
            &[1.0, 0.0, 0.0, 1.0],
            &[0.0, 0.0],
            Activation::Identity,
        )])
        .unwrap();
        let (out, _) = forward(&net, &[0.25, -7.0]).unwrap();
        assert_eq!(out, vec![0.25, -7.0]);
    }

    #[test]
    fn relu_clamps_negative_preactivation() {
        let net = Mlp::new(vec![layer(1, 1, &[-2.0], &[0.0], Activation::Relu)]).unwrap();
        let (out, _) = forward(&net, &[3.0]).unwrap();
        assert_eq!(out, vec![0.0]);
    }

    #[test]
    fn forward_rejects_bad_input() {
        let net = Mlp::new(vec![DenseLayer::zeros(2, 1, Activation::Identity)]).unwrap();
        assert!(matches!(
            forward(&net, &[1.0]),
            Err(NnError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            forward(&net, &[1.0, f64::NAN]),
            Err(NnError::NonFinite(_))
        ));
    }

    // Hand-expanded chain rule on a 2x2 identity layer under MSE:
    //   W = [[1, 2], [3, -1]], b = [0.5, -0.5], x = [0.25, -1], y = [0, 1]
    //   pred = Wx + b = [-1.25, 1.25], loss = (1.5625 + 0.0625)/2 = 0.8125
    //   dL/dpred = 2(pred - y)/2 = [-1.25, 0.25]
    //   dW = dz xᵀ = [[-0.3125, 1.25], [0.0625, -0.25]], db = [-1.25, 0.25]
    //   dx = Wᵀ dz = [-0.5, -2.75]
    #[test]
    fn backward_matches_hand_computation() {
        let net = Mlp::new(vec![layer(
            2,
            2,
            &[1.0, 2.0, 3.0, -1.0],
            &[0.5, -0.5],
            Activation::Identity,
        )])
        .unwrap();
        let x = [0.25, -1.0];
        let y = [0.0, 1.0];
        let (pred, trace) = forward(&net, &x).unwrap();
        let (loss, loss_grad) = mse_loss(&pred, &y).unwrap();
        assert_eq!(loss, 0.8125);
        assert_eq!(loss_grad, vec![-1.25, 0.25]);
        let (grads, input_grad) = backward(&net, &trace, &loss_grad).unwrap();
        assert_eq!(grads.layers[0].weights, vec![-0.3125, 1.25, 0.0625, -0.25]);
        assert_eq!(grads.layers[0].bias, vec![-1.25, 0.25]);
        assert_eq!(input_grad, vec![-0.5, -2.75]);
    }

    #[test]
    fn backward_zero_loss_grad_gives_zero_gradients() {
        let net = Mlp::seeded(&[3, 4, 2], &[Activation::Relu, Activation::Sigmoid], 9);
        let (_, trace) = forward(&net, &[0.1, 0.2, 0.3]).unwrap();
        let (grads, input_grad) = backward(&net, &trace, &[0.0, 0.0]).unwrap();
        assert!(grads.layers.iter().all(|l| l.weights.iter().all(|&w| w == 0.0)));
        assert!(input_grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn mse_basics() {
        let (loss, grad) = mse_loss(&[1.0, 0.0], &[0.0, 0.0]).unwrap();
        assert_eq!(loss, 0.5);
        assert_eq!(grad, vec![1.0, 0.0]);

        let (loss, grad) = mse_loss(&[0.3, 0.7], &[0.3, 0.7]).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(grad, vec![0.0, 0.0]);
    }

    #[test]
    fn mse_matches_scalar_loop_oracle() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pred: Vec<f64> = (0..10).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let target: Vec<f64> = (0..10).map(|_| rng.gen_range(-2.0..2.0)).collect();
        // Independent scalar loop.
        let mut expected = 0.0;
        for i in 0..10 {
            let d = pred[i] - target[i];
            expected += d * d;
        }
        expected /= 10.0;
        let (loss, _) = mse_loss(&pred, &target).unwrap();
        assert!((loss - expected).abs() < 1e-15);
    }

    #[test]
    fn sgd_single_step_without_momentum() {
        let mut net = Mlp::new(vec![layer(1, 1, &[1.0], &[0.0], Activation::Identity)]).unwrap();
        let mut opt = SgdMomentum::new(&net, 0.1, 0.0);
        let grads = Gradients {
            layers: vec![LayerGrad {
                weights: vec![2.0],
                bias: vec![0.0],
            }],
        };
        opt.step(&mut net, &grads).unwrap();
        assert!((net.layers[0].weights[0] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn sgd_zero_grads_leave_parameters_unchanged() {
        let mut net = Mlp::seeded(&[2, 3], &[Activation::Sigmoid], 4);
        let before = net.clone();
        let mut opt = SgdMomentum::new(&net, 0.5, 0.9);
        let zeros = Gradients::zeros_like(&net);
        opt.step(&mut net, &zeros).unwrap();
        assert_eq!(net, before);
    }

    #[test]
    fn sgd_momentum_recurrence_expands() {
        // Two steps with momentum 0.9 and fixed grad g: v1 = g, v2 = 1.9 g,
        // so the second delta is lr * 1.9 g.
        let g = 0.4;
        let lr = 0.1;
        let mut net = Mlp::new(vec![layer(1, 1, &[1.0], &[0.0], Activation::Identity)]).unwrap();
        let mut opt = SgdMomentum::new(&net, lr, 0.9);
        let grads = Gradients {
            layers: vec![LayerGrad {
                weights: vec![g],
                bias: vec![0.0],
            }],
        };
        opt.step(&mut net, &grads).unwrap();
        let after_first = net.layers[0].weights[0];
        assert!((after_first - (1.0 - lr * g)).abs() < 1e-15);
        opt.step(&mut net, &grads).unwrap();
        let second_delta = after_first - net.layers[0].weights[0];
        assert!((second_delta - lr * 1.9 * g).abs() < 1e-15);
    }

    #[test]
    fn finite_diff_small_random_net() {
        let net = Mlp::seeded(
            &[4, 6, 3],
            &[Activation::Relu, Activation::Sigmoid],
            123,
        );
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        use rand::Rng;
        let input: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let target: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..1.0)).collect();
        let err = finite_diff_check(&net, &input, &target, 1e-4).unwrap();
        assert!(err < 1e-4, "relative error {err}");
    }

    #[test]
    fn finite_diff_linear_net_is_near_exact() {
        // Identity activations make the loss quadratic in every parameter, so
        // the central difference is exact up to rounding.
        let net = Mlp::seeded(&[3, 2], &[Activation::Identity], 42);
        let err = finite_diff_check(&net, &[0.3, -0.6, 0.9], &[0.2, 0.8], 1e-4).unwrap();
        assert!(err < 1e-7, "relative error {err}");
    }

    #[test]
    fn finite_diff_degenerate_empty_net() {
        let net = Mlp::default();
        let err = finite_diff_check(&net, &[0.5, 0.5], &[0.0, 1.0], 1e-4).unwrap();
        assert_eq!(err, 0.0);
    }

    #[test]
    fn gradient_sweep_over_random_architectures() {
        // Depth <= 3, width <= 16, all activation kinds.
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let acts = [Activation::Identity, Activation::Relu, Activation::Sigmoid];
        for case in 0..100 {
            let depth = rng.gen_range(1..=3);
            let mut dims = vec![rng.gen_range(1..=16)];
            let mut layer_acts = Vec::new();
            for _ in 0..depth {
                dims.push(rng.gen_range(1..=16));
                layer_acts.push(acts[rng.gen_range(0..acts.len())]);
            }
            let net = Mlp::seeded(&dims, &layer_acts, 5000 + case);
            let input: Vec<f64> = (0..dims[0]).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let target: Vec<f64> = (0..*dims.last().unwrap())
                .map(|_| rng.gen_range(0.0..1.0))
                .collect();
            let err = finite_diff_check(&net, &input, &target, 1e-4).unwrap();
            assert!(err < 1e-4, "case {case}: relative error {err}");
        }
    }

    #[test]
    fn seeded_init_is_deterministic_and_bounded() {
        let a = Mlp::seeded(&[8, 4], &[Activation::Relu], 77);
        let b = Mlp::seeded(&[8, 4], &[Activation::Relu], 77);
        assert_eq!(a, b);
        let limit = (6.0 / 12.0_f64).sqrt();
        assert!(a.layers[0].weights.iter().all(|w| w.abs() <= limit));
        assert!(a.layers[0].bias.iter().all(|&b| b == 0.0));
    }
}
