//! Feed-forward network: input dropout, ReLU hidden layers, one sigmoid output,
//! class-weighted binary cross-entropy, minibatch SGD with early stopping.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fewer training rows than this is refused.
pub const MIN_SAMPLES: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpParams {
    pub hidden: Vec<usize>,
    pub dropout: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub patience: usize,
    pub max_epochs: usize,
    pub validation_fraction: f64,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self {
            hidden: vec![12, 6],
            dropout: 0.2,
            learning_rate: 0.001,
            batch_size: 256,
            patience: 15,
            max_epochs: 500,
            validation_fraction: 0.2,
        }
    }
}

/// Dense layer, `weights[out][in]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(row, b)| b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    /// Hidden layers then the single-unit output layer.
    pub layers: Vec<Layer>,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `-y ln s(z) - (1 - y) ln(1 - s(z))` without forming `s(z)`.
fn bce_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

struct Trace {
    /// Input to each layer (the network input after dropout first).
    inputs: Vec<Vec<f64>>,
    logit: f64,
}

impl Mlp {
    /// Uniform fan-in initialization, bound `sqrt(6 / fan_in)`, zero biases.
    pub fn init(n_in: usize, hidden: &[usize], rng: &mut ChaCha8Rng) -> Self {
        let mut sizes = vec![n_in];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let layers = sizes
            .windows(2)
            .map(|w| {
                let bound = (6.0 / w[0] as f64).sqrt();
                Layer {
                    weights: (0..w[1])
                        .map(|_| (0..w[0]).map(|_| rng.random_range(-bound..bound)).collect())
                        .collect(),
                    bias: vec![0.0; w[1]],
                }
            })
            .collect();
        Self { layers }
    }

    fn trace(&self, x: &[f64], mask: Option<&[f64]>) -> Trace {
        let mut a: Vec<f64> = match mask {
            Some(m) => x.iter().zip(m).map(|(v, k)| v * k).collect(),
            None => x.to_vec(),
        };
        let mut inputs = Vec::with_capacity(self.layers.len());
        let last = self.layers.len() - 1;
        for (li, layer) in self.layers.iter().enumerate() {
            let z = layer.forward(&a);
            inputs.push(std::mem::take(&mut a));
            a = if li < last {
                z.into_iter().map(|v| v.max(0.0)).collect()
            } else {
                z
            };
        }
        Trace { inputs, logit: a[0] }
    }

    pub fn logit(&self, x: &[f64]) -> f64 {
        self.trace(x, None).logit
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(x))
    }

    pub fn n_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.bias.len() * (l.weights[0].len() + 1))
            .sum()
    }

    /// Parameters flattened layer by layer: weights row-major, then biases.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            for row in &l.weights {
                out.extend_from_slice(row);
            }
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_params(&mut self, p: &[f64]) {
        let mut k = 0;
        for l in &mut self.layers {
            for row in &mut l.weights {
                let n = row.len();
                row.copy_from_slice(&p[k..k + n]);
                k += n;
            }
            let n = l.bias.len();
            l.bias.copy_from_slice(&p[k..k + n]);
            k += n;
        }
    }

    /// Batch loss `sum_i w_i bce_i / B` and its gradient in `params()` order.
    /// `masks` are per-sample input multipliers (dropout); `None` disables dropout.
    pub fn loss_and_gradient(&self, x: &[&[f64]], y: &[u8], w: &[f64], masks: Option<&[Vec<f64>]>) -> (f64, Vec<f64>) {
        let b = x.len() as f64;
        let mut grads: Vec<(Vec<Vec<f64>>, Vec<f64>)> = self
            .layers
            .iter()
            .map(|l| {
                (
                    vec![vec![0.0; l.weights[0].len()]; l.bias.len()],
                    vec![0.0; l.bias.len()],
                )
            })
            .collect();
        let mut loss = 0.0;
        for (s, xi) in x.iter().enumerate() {
            let t = self.trace(xi, masks.map(|m| m[s].as_slice()));
            let yi = y[s] as f64;
            loss += w[s] * bce_logit(t.logit, yi);
            // delta for the current layer's pre-activations
            let mut delta = vec![w[s] * (sigmoid(t.logit) - yi) / b];
            for li in (0..self.layers.len()).rev() {
                let input = &t.inputs[li];
                let (gw, gb) = &mut grads[li];
                for (o, d) in delta.iter().enumerate() {
                    gb[o] += d;
                    for (g, a) in gw[o].iter_mut().zip(input) {
                        *g += d * a;
                    }
                }
                if li == 0 {
                    break;
                }
                let layer = &self.layers[li];
                delta = (0..input.len())
                    .map(|k| {
                        if input[k] <= 0.0 {
                            0.0
                        } else {
                            delta.iter().enumerate().map(|(o, d)| d * layer.weights[o][k]).sum()
                        }
                    })
                    .collect();
            }
        }
        let mut flat = Vec::with_capacity(self.n_params());
        for (gw, gb) in grads {
            for row in gw {
                flat.extend(row);
            }
            flat.extend(gb);
        }
        (loss / b, flat)
    }

    /// Weighted mean loss over a set, without dropout.
    pub fn mean_loss(&self, x: &[&[f64]], y: &[u8], w: &[f64]) -> f64 {
        x.iter()
            .zip(y)
            .zip(w)
            .map(|((xi, &yi), wi)| wi * bce_logit(self.logit(xi), yi as f64))
            .sum::<f64>()
            / x.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlpFit {
    pub n_validation: usize,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_validation_loss: f64,
}

/// Stratified split: `fraction` of each class, rounded, goes to validation.
fn stratified_split(y: &[u8], fraction: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for class in [0u8, 1] {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        idx.shuffle(rng);
        let k = (idx.len() as f64 * fraction).round() as usize;
        val.extend_from_slice(&idx[..k]);
        train.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

pub fn train_mlp(x: &[Vec<f64>], y: &[u8], sample_weight: &[f64], p: &MlpParams, seed: u64) -> Result<(Mlp, MlpFit)> {
    super::require_both_classes(y)?;
    if x.len() < MIN_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "MLP needs at least {MIN_SAMPLES} samples, got {}",
            x.len()
        )));
    }
    if !(0.0..1.0).contains(&p.dropout)
        || !(0.0..1.0).contains(&p.validation_fraction)
        || p.batch_size == 0
        || p.hidden.contains(&0)
        || !(p.learning_rate > 0.0 && p.learning_rate.is_finite())
    {
        return Err(Error::InvalidSpec(format!("MLP hyperparameters {p:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = x[0].len();
    let mut net = Mlp::init(d, &p.hidden, &mut rng);
    let (mut train, val) = stratified_split(y, p.validation_fraction, &mut rng);
    if val.is_empty() {
        return Err(Error::InsufficientData("validation split is empty".into()));
    }
    let vx: Vec<&[f64]> = val.iter().map(|&i| x[i].as_slice()).collect();
    let vy: Vec<u8> = val.iter().map(|&i| y[i]).collect();
    let vw: Vec<f64> = val.iter().map(|&i| sample_weight[i]).collect();

    let keep = 1.0 - p.dropout;
    let mut best = (net.params(), net.mean_loss(&vx, &vy, &vw), 0usize);
    let mut since_best = 0;
    let mut epochs_run = 0;
    let mut params = net.params();
    for epoch in 1..=p.max_epochs {
        epochs_run = epoch;
        train.shuffle(&mut rng);
        for batch in train.chunks(p.batch_size) {
            let bx: Vec<&[f64]> = batch.iter().map(|&i| x[i].as_slice()).collect();
            let by: Vec<u8> = batch.iter().map(|&i| y[i]).collect();
            let bw: Vec<f64> = batch.iter().map(|&i| sample_weight[i]).collect();
            let masks: Vec<Vec<f64>> = (0..batch.len())
                .map(|_| {
                    (0..d)
                        .map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
                        .collect()
                })
                .collect();
            let masks = (p.dropout > 0.0).then_some(masks.as_slice());
            let (loss, grad) = net.loss_and_gradient(&bx, &by, &bw, masks);
            if !loss.is_finite() {
                return Err(Error::Divergence(format!(
                    "training loss became {loss} in epoch {epoch}"
                )));
            }
            for (v, g) in params.iter_mut().zip(&grad) {
                *v -= p.learning_rate * g;
            }
            net.set_params(&params);
        }
        let val_loss = net.mean_loss(&vx, &vy, &vw);
        if !val_loss.is_finite() {
            return Err(Error::Divergence(format!(
                "validation loss became {val_loss} in epoch {epoch}"
            )));
        }
        if val_loss < best.1 {
            best = (params.clone(), val_loss, epoch);
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= p.patience {
                break;
            }
        }
    }
    net.set_params(&best.0);
    Ok((
        net,
        MlpFit {
            n_validation: val.len(),
            epochs_run,
            best_epoch: best.2,
            best_validation_loss: best.1,
        },
    ))
}
