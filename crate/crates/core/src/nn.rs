//! Dense feed-forward network with exact backpropagation.
//!
//! The paper configuration is a 4-layer perceptron counting the input layer:
//! k inputs -> 32 tanh -> 32 tanh -> 1 sigmoid, trained with mini-batch Adam
//! on binary cross-entropy. Dropout is the inverted kind: surviving hidden
//! activations are scaled by 1/(1-rate) at train time so inference is a
//! plain forward pass.

use crate::error::{Error, Result};
use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// All probabilities are clamped this far away from {0, 1} before logs.
const PROB_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Sigmoid,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => tanh_act(x),
            Activation::Sigmoid => sigmoid_act(x),
        }
    }

    /// Derivative expressed through the activation's own output.
    pub fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Sigmoid => a * (1.0 - a),
        }
    }
}

/// tanh(x) = (e^x - e^-x) / (e^x + e^-x), in (-1, 1).
pub fn tanh_act(x: f64) -> f64 {
    x.tanh()
}

/// sig(x) = 1 / (1 + e^-x), in (0, 1). Saturates gracefully at extreme x.
pub fn sigmoid_act(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// out x in, row r holds the weights feeding output unit r.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn in_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.nrows()
    }
}

/// Ordered dense layers; consecutive dimensions chain.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layers: Vec<DenseLayer>,
}

/// Training hyperparameters. Defaults are the published configuration:
/// Adam with lr 1e-5, beta1 0.90, beta2 0.99, dropout 0.45, batch 15,
/// 3000 epochs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub dropout_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-5,
            beta1: 0.90,
            beta2: 0.99,
            epsilon: 1e-8,
            dropout_rate: 0.45,
            batch_size: 15,
            epochs: 3000,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::InvalidArg(format!(
                "dropout rate {} outside [0, 1)",
                self.dropout_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArg("batch size must be >= 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidArg("epochs must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) || !(0.0..1.0).contains(&self.beta1)
            || !(0.0..1.0).contains(&self.beta2) || !(self.epsilon > 0.0)
        {
            return Err(Error::InvalidArg("bad optimizer hyperparameters".into()));
        }
        Ok(())
    }
}

/// Builds a model with the given layer sizes, tanh hidden units and a
/// sigmoid output. Weights are uniform in +-sqrt(6/(fan_in+fan_out)),
/// biases zero; fully determined by the seed.
pub fn init_model(dims: &[usize], seed: u64) -> Result<MlpModel> {
    if dims.len() < 2 {
        return Err(Error::InvalidArg(format!(
            "need at least input and output sizes, got {dims:?}"
        )));
    }
    if dims.iter().any(|&d| d == 0) {
        return Err(Error::InvalidArg(format!("zero-width layer in {dims:?}")));
    }
    let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
    let mut layers = Vec::with_capacity(dims.len() - 1);
    for w in dims.windows(2) {
        let (fan_in, fan_out) = (w[0], w[1]);
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let mut weights = Vec::with_capacity(fan_out * fan_in);
        for _ in 0..fan_out * fan_in {
            weights.push(bound * (2.0 * rng.random::<f64>() - 1.0));
        }
        let activation = if layers.len() == dims.len() - 2 {
            Activation::Sigmoid
        } else {
            Activation::Tanh
        };
        layers.push(DenseLayer {
            weights: Array2::from_shape_vec((fan_out, fan_in), weights)
                .expect("shape matches generated length"),
            bias: Array1::zeros(fan_out),
            activation,
        });
    }
    Ok(MlpModel { layers })
}

impl MlpModel {
    pub fn from_layers(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidArg("model needs at least one layer".into()));
        }
        for pair in layers.windows(2) {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::DimMismatch {
                    context: "consecutive layer sizes",
                    expected: pair[0].out_dim(),
                    actual: pair[1].in_dim(),
                });
            }
        }
        Ok(MlpModel { layers })
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").out_dim()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// Forward pass over a batch, keeping every intermediate activation
    /// (needed by [`backward`]). With `dropout` set, hidden activations are
    /// masked and rescaled; the output layer is never dropped.
    pub fn forward(
        &self,
        batch: &Array2<f64>,
        mut dropout: Option<(f64, &mut ChaCha8Rng)>,
    ) -> Result<ForwardPass> {
        if batch.ncols() != self.input_dim() {
            return Err(Error::DimMismatch {
                context: "forward input width",
                expected: self.input_dim(),
                actual: batch.ncols(),
            });
        }
        if let Some((rate, _)) = dropout {
            if !(0.0..1.0).contains(&rate) {
                return Err(Error::InvalidArg(format!("dropout rate {rate} outside [0, 1)")));
            }
        }
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        let mut pre_dropout: Vec<Option<Array2<f64>>> = Vec::with_capacity(self.layers.len());
        let mut masks: Vec<Option<Array2<f64>>> = Vec::with_capacity(self.layers.len());
        activations.push(batch.clone());
        for (idx, layer) in self.layers.iter().enumerate() {
            let pre = activations[idx].dot(&layer.weights.t()) + &layer.bias;
            let act = pre.mapv(|z| layer.activation.apply(z));
            let last = idx == self.layers.len() - 1;
            match (&mut dropout, last) {
                (Some((rate, rng)), false) if *rate > 0.0 => {
                    let keep_scale = 1.0 / (1.0 - *rate);
                    let mask = Array2::from_shape_fn(act.raw_dim(), |_| {
                        if rng.random::<f64>() < *rate {
                            0.0
                        } else {
                            keep_scale
                        }
                    });
                    let dropped = &act * &mask;
                    pre_dropout.push(Some(act));
                    masks.push(Some(mask));
                    activations.push(dropped);
                }
                _ => {
                    pre_dropout.push(None);
                    masks.push(None);
                    activations.push(act);
                }
            }
        }
        Ok(ForwardPass { activations, pre_dropout, masks })
    }

    /// Output probabilities from a clean (no dropout) forward pass.
    pub fn probabilities(&self, batch: &Array2<f64>) -> Result<Array1<f64>> {
        let pass = self.forward(batch, None)?;
        Ok(pass.output().column(0).to_owned())
    }
}

/// Cached activations (index 0 is the input batch) and dropout masks from
/// one forward call. `activations[i + 1]` is what layer i + 1 consumes, so
/// it is post-dropout; the pre-dropout value is kept separately for masked
/// layers because the activation derivatives need it.
pub struct ForwardPass {
    pub activations: Vec<Array2<f64>>,
    pub pre_dropout: Vec<Option<Array2<f64>>>,
    pub masks: Vec<Option<Array2<f64>>>,
}

impl ForwardPass {
    pub fn output(&self) -> &Array2<f64> {
        self.activations.last().expect("at least input + output")
    }
}

/// Mean binary cross-entropy, with probabilities clamped away from {0, 1}.
pub fn bce_loss(probs: &Array1<f64>, labels: &[u8]) -> Result<f64> {
    if probs.is_empty() {
        return Err(Error::InvalidArg("bce_loss over empty input".into()));
    }
    if probs.len() != labels.len() {
        return Err(Error::DimMismatch {
            context: "probabilities vs labels",
            expected: labels.len(),
            actual: probs.len(),
        });
    }
    let mut total = 0.0;
    for (&p, &y) in probs.iter().zip(labels) {
        let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        total -= if y == 1 { p.ln() } else { (1.0 - p).ln() };
    }
    Ok(total / probs.len() as f64)
}

/// Per-layer parameter gradients, same shapes as the model.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub bias: Vec<Array1<f64>>,
}

/// Exact gradients of [`bce_loss`] for the batch cached in `pass`,
/// including the dropout masking and rescaling applied on the way forward.
pub fn backward(model: &MlpModel, pass: &ForwardPass, labels: &[u8]) -> Result<Gradients> {
    let n_layers = model.layers.len();
    if pass.activations.len() != n_layers + 1 || pass.masks.len() != n_layers {
        return Err(Error::DimMismatch {
            context: "forward cache depth",
            expected: n_layers + 1,
            actual: pass.activations.len(),
        });
    }
    let batch = pass.activations[0].nrows();
    if labels.len() != batch {
        return Err(Error::DimMismatch {
            context: "labels vs batch",
            expected: batch,
            actual: labels.len(),
        });
    }
    let output = pass.output();
    if output.ncols() != 1 {
        return Err(Error::DimMismatch {
            context: "output width",
            expected: 1,
            actual: output.ncols(),
        });
    }

    // sigmoid + cross-entropy collapses to (p - y) / m at the output
    let m = batch as f64;
    let mut delta = Array2::zeros((batch, 1));
    for (i, &y) in labels.iter().enumerate() {
        delta[[i, 0]] = (output[[i, 0]] - y as f64) / m;
    }

    let mut grads_w = vec![Array2::zeros((0, 0)); n_layers];
    let mut grads_b = vec![Array1::zeros(0); n_layers];
    for idx in (0..n_layers).rev() {
        let layer = &model.layers[idx];
        let input = &pass.activations[idx];
        grads_w[idx] = delta.t().dot(input);
        grads_b[idx] = delta.sum_axis(Axis(0));
        if idx > 0 {
            let mut upstream = delta.dot(&layer.weights);
            if let Some(mask) = &pass.masks[idx - 1] {
                upstream *= mask;
            }
            // derivative needs the activation before masking
            let prev = pass.pre_dropout[idx - 1]
                .as_ref()
                .unwrap_or(&pass.activations[idx]);
            let act = model.layers[idx - 1].activation;
            delta = ndarray::Zip::from(&upstream)
                .and(prev)
                .map_collect(|&u, &a| u * act.derivative_from_output(a));
        }
    }
    Ok(Gradients { weights: grads_w, bias: grads_b })
}

/// First/second moment accumulators plus the step counter.
#[derive(Debug, Clone)]
pub struct AdamState {
    m_weights: Vec<Array2<f64>>,
    v_weights: Vec<Array2<f64>>,
    m_bias: Vec<Array1<f64>>,
    v_bias: Vec<Array1<f64>>,
    t: u64,
}

impl AdamState {
    /// Zero-initialized moments shaped like `model`.
    pub fn new(model: &MlpModel) -> Self {
        let m_weights: Vec<_> = model
            .layers
            .iter()
            .map(|l| Array2::zeros(l.weights.raw_dim()))
            .collect();
        let m_bias: Vec<_> = model
            .layers
            .iter()
            .map(|l| Array1::zeros(l.bias.raw_dim()))
            .collect();
        AdamState {
            v_weights: m_weights.clone(),
            m_weights,
            v_bias: m_bias.clone(),
            m_bias,
            t: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

/// One Adam update:
/// t' = t+1; m' = b1 m + (1-b1) g; v' = b2 v + (1-b2) g^2;
/// theta' = theta - lr * (m'/(1-b1^t')) / (sqrt(v'/(1-b2^t')) + eps).
pub fn adam_step(
    model: &mut MlpModel,
    grads: &Gradients,
    state: &mut AdamState,
    cfg: &TrainConfig,
) -> Result<()> {
    if grads.weights.len() != model.layers.len() || grads.bias.len() != model.layers.len() {
        return Err(Error::DimMismatch {
            context: "gradient layers",
            expected: model.layers.len(),
            actual: grads.weights.len(),
        });
    }
    for (idx, (gw, gb)) in grads.weights.iter().zip(&grads.bias).enumerate() {
        if gw.iter().chain(gb.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "gradient",
                context: format!("layer {idx}"),
            });
        }
    }

    state.t += 1;
    let t = state.t as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);

    for (idx, layer) in model.layers.iter_mut().enumerate() {
        let gw = &grads.weights[idx];
        let gb = &grads.bias[idx];

        let mw = &mut state.m_weights[idx];
        let vw = &mut state.v_weights[idx];
        ndarray::Zip::from(&mut *mw).and(gw).for_each(|m, &g| {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
        });
        ndarray::Zip::from(&mut *vw).and(gw).for_each(|v, &g| {
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
        });
        ndarray::Zip::from(&mut layer.weights)
            .and(&*mw)
            .and(&*vw)
            .for_each(|w, &m, &v| {
                *w -= cfg.learning_rate * (m / bc1) / ((v / bc2).sqrt() + cfg.epsilon);
            });

        let mb = &mut state.m_bias[idx];
        let vb = &mut state.v_bias[idx];
        ndarray::Zip::from(&mut *mb).and(gb).for_each(|m, &g| {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
        });
        ndarray::Zip::from(&mut *vb).and(gb).for_each(|v, &g| {
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
        });
        ndarray::Zip::from(&mut layer.bias)
            .and(&*mb)
            .and(&*vb)
            .for_each(|b, &m, &v| {
                *b -= cfg.learning_rate * (m / bc1) / ((v / bc2).sqrt() + cfg.epsilon);
            });
    }
    Ok(())
}

/// Hard labels: 1 iff the output probability is >= 0.5.
pub fn predict(model: &MlpModel, x: &Array2<f64>) -> Result<Vec<u8>> {
    let probs = model.probabilities(x)?;
    Ok(probs.iter().map(|&p| u8::from(p >= 0.5)).collect())
}

// --- model JSON: a list of layers with row-major weights ---

#[derive(Serialize, Deserialize)]
struct LayerDoc {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
    activation: Activation,
}

impl Serialize for MlpModel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let docs: Vec<LayerDoc> = self
            .layers
            .iter()
            .map(|l| LayerDoc {
                weights: l.weights.rows().into_iter().map(|r| r.to_vec()).collect(),
                bias: l.bias.to_vec(),
                activation: l.activation,
            })
            .collect();
        docs.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for MlpModel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as DeError;
        let docs = Vec::<LayerDoc>::deserialize(deserializer)?;
        let mut layers = Vec::with_capacity(docs.len());
        for doc in docs {
            let rows = doc.weights.len();
            let cols = doc.weights.first().map_or(0, Vec::len);
            if rows == 0 || cols == 0 || doc.weights.iter().any(|r| r.len() != cols) {
                return Err(D::Error::custom("ragged or empty weight matrix"));
            }
            if doc.bias.len() != rows {
                return Err(D::Error::custom("bias length disagrees with weights"));
            }
            let flat: Vec<f64> = doc.weights.into_iter().flatten().collect();
            layers.push(DenseLayer {
                weights: Array2::from_shape_vec((rows, cols), flat)
                    .map_err(|e| D::Error::custom(e.to_string()))?,
                bias: Array1::from_vec(doc.bias),
                activation: doc.activation,
            });
        }
        MlpModel::from_layers(layers).map_err(|e| D::Error::custom(e.to_string()))
    }
}
