use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ops::softmax;
use super::optim::RmsProp;
use super::tensor::Batch;
use super::{BnnError, Model, Scalar};
use crate::hdcore::{hash64, HdVector};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub rms_decay: f64,
    pub rms_epsilon: f64,
    pub batch_size: usize,
    pub epochs: u32,
    /// Straight-through gradient clip for `sign`.
    pub clip_value: f64,
    /// Seed for models the harness builds. Shuffling and dropout follow the
    /// seed stored in the model itself.
    pub rng_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            rms_decay: 0.9,
            rms_epsilon: 1e-8,
            batch_size: 4,
            epochs: 30,
            clip_value: 1.0,
            rng_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), BnnError> {
        if self.learning_rate.is_nan() || self.learning_rate < 0.0 {
            return Err(BnnError::InvalidConfig("learning rate must be non-negative".into()));
        }
        if self.clip_value.is_nan() || self.clip_value <= 0.0 {
            return Err(BnnError::InvalidConfig("clip value must be positive".into()));
        }
        if self.batch_size < 2 {
            return Err(BnnError::InvalidConfig("batch size must be at least 2".into()));
        }
        if !(0.0..1.0).contains(&self.rms_decay) {
            return Err(BnnError::InvalidConfig("rmsprop decay must lie in [0, 1)".into()));
        }
        Ok(())
    }

    fn optimizer(&self) -> RmsProp {
        RmsProp { learning_rate: self.learning_rate, decay: self.rms_decay, epsilon: self.rms_epsilon }
    }
}

/// Per-epoch training curve.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainHistory {
    pub loss: Vec<f64>,
    /// Training-set micro-F1 (accuracy) from the training-mode logits.
    pub train_f1: Vec<f64>,
    /// Wall-clock seconds per epoch; not deterministic.
    pub epoch_seconds: Vec<f64>,
}

fn epoch_rng(seed: u64, epoch: u32) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(hash64(seed, &format!("epoch-{epoch}")))
}

/// Splits shuffled indices into batches; a trailing single sample joins the
/// previous batch so batch statistics always see two or more samples.
fn batches(order: &[usize], size: usize) -> Vec<&[usize]> {
    let mut out: Vec<&[usize]> = order.chunks(size).collect();
    if out.len() > 1 && out.last().is_some_and(|b| b.len() == 1) {
        out.pop();
        let start = (out.len() - 1) * size;
        *out.last_mut().unwrap() = &order[start..];
    }
    out
}

fn argmax<S: Scalar>(v: &[S]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Runs `cfg.epochs` further epochs of mini-batch RMSProp. Shuffling and
/// dropout draw from a stream keyed by the model seed and the absolute
/// epoch index, so a reloaded checkpoint continues exactly where it left off.
pub fn train<S: Scalar>(
    model: &mut Model<S>,
    data: &[(HdVector, usize)],
    cfg: &TrainConfig,
) -> Result<TrainHistory, BnnError> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(BnnError::EmptyDataset);
    }
    if data.len() < 2 && model.architecture().batchnorm {
        return Err(BnnError::DegenerateBatch(data.len()));
    }
    let classes = model.num_classes();
    let mut inputs = Vec::with_capacity(data.len());
    for (x, label) in data {
        if *label >= classes {
            return Err(BnnError::LabelOutOfRange { label: *label, classes });
        }
        inputs.push(model.input_vector(x)?);
    }

    let opt = cfg.optimizer();
    let clip = S::from_f64(cfg.clip_value);
    let clipped = model.clipped_params();
    let mut history = TrainHistory::default();
    for _ in 0..cfg.epochs {
        let start = Instant::now();
        let mut rng = epoch_rng(model.rng_seed(), model.epochs_done);
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for batch in batches(&order, cfg.batch_size) {
            let x = Batch::from_vectors(&batch.iter().map(|&i| inputs[i].clone()).collect::<Vec<_>>());
            let labels: Vec<usize> = batch.iter().map(|&i| data[i].1).collect();
            let step = model.loss_and_gradients(&x, &labels, clip, &mut rng)?;
            loss_sum += step.loss * batch.len() as f64;
            correct += step.logits.iter().zip(&labels).filter(|(l, &y)| argmax(l) == y).count();
            let mut accum = std::mem::take(&mut model.optimizer);
            for (((p, g), s), &c) in model.params_mut().into_iter().zip(&step.grads).zip(accum.iter_mut()).zip(&clipped) {
                opt.step(p, g, s, c);
            }
            model.optimizer = accum;
        }
        model.epochs_done += 1;
        history.loss.push(loss_sum / data.len() as f64);
        history.train_f1.push(correct as f64 / data.len() as f64);
        history.epoch_seconds.push(start.elapsed().as_secs_f64());
    }
    Ok(history)
}

/// Eval-mode label and class probabilities; ties go to the lowest index.
pub fn predict<S: Scalar>(model: &Model<S>, input: &HdVector) -> Result<(usize, Vec<f64>), BnnError> {
    let logits = model.logits(input)?;
    Ok((argmax(&logits), softmax(&logits)))
}

/// Eval-mode labels for many inputs, evaluated in chunks.
pub fn predict_many<S: Scalar>(model: &Model<S>, inputs: &[HdVector]) -> Result<Vec<usize>, BnnError> {
    let mut out = Vec::with_capacity(inputs.len());
    for chunk in inputs.chunks(32) {
        let vs = chunk.iter().map(|x| model.input_vector(x)).collect::<Result<Vec<_>, _>>()?;
        for l in model.forward_eval(&Batch::from_vectors(&vs))? {
            out.push(argmax(&l));
        }
    }
    Ok(out)
}

/// Label for raw logits (lowest index on ties).
pub fn label_of<S: Scalar>(logits: &[S]) -> usize {
    argmax(logits)
}
