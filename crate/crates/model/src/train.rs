//! AdamW training of the transformer on a fixed token corpus.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sentgraph_core::{stream_rng, TokenSeq};

use crate::error::{ModelError, Result};
use crate::lm::mean_nll;
use crate::ngram::NGramModel;
use crate::transformer::{Dropout, Real, TinyTransformer};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub peak_lr: f64,
    /// Final learning rate as a fraction of the peak.
    pub min_lr_ratio: f64,
    pub warmup_frac: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub grad_clip: f64,
    pub dropout: f64,
    /// Validation loss is measured every `eval_every` steps and after the last.
    pub eval_every: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            steps: 2000,
            batch_size: 32,
            peak_lr: 3e-3,
            min_lr_ratio: 0.1,
            warmup_frac: 0.05,
            weight_decay: 0.1,
            beta1: 0.9,
            beta2: 0.95,
            eps: 1e-8,
            grad_clip: 1.0,
            dropout: 0.1,
            eval_every: 100,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(ModelError::Config(m.into()));
        if self.steps == 0 || self.batch_size == 0 || self.eval_every == 0 {
            return bad("steps, batch_size and eval_every must be positive");
        }
        if !(self.peak_lr > 0.0 && self.eps > 0.0 && self.grad_clip > 0.0) {
            return bad("peak_lr, eps and grad_clip must be positive");
        }
        if !(0.0..=1.0).contains(&self.min_lr_ratio) || self.weight_decay < 0.0 {
            return bad("min_lr_ratio must lie in [0, 1] and weight_decay be nonnegative");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("betas must lie in [0, 1)");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        if !(0.0..1.0).contains(&self.warmup_frac) || self.warmup_steps() >= self.steps && self.steps > 1 {
            return bad("warmup must be shorter than the run");
        }
        Ok(())
    }

    pub fn warmup_steps(&self) -> usize {
        ((self.warmup_frac * self.steps as f64).ceil() as usize).max(1)
    }

    /// Learning rate used for update `step` (0-based): linear warmup to the
    /// peak, then cosine decay to `min_lr_ratio * peak` at the last step.
    pub fn lr_at(&self, step: usize) -> f64 {
        let warmup = self.warmup_steps();
        if step < warmup {
            return self.peak_lr * (step + 1) as f64 / warmup as f64;
        }
        let span = (self.steps - warmup).max(1) as f64;
        let progress = ((step - warmup) as f64 / span).min(1.0);
        let floor = self.min_lr_ratio * self.peak_lr;
        floor + 0.5 * (self.peak_lr - floor) * (1.0 + (std::f64::consts::PI * progress).cos())
    }
}

/// One row of the loss curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossPoint {
    pub step: usize,
    pub train_nll: f64,
    pub val_nll: Option<f64>,
}

pub fn loss_csv(curve: &[LossPoint]) -> String {
    let mut out = String::from("step,train_nll,val_nll\n");
    for p in curve {
        let val = p.val_nll.map(|v| format!("{v:.6}")).unwrap_or_default();
        out.push_str(&format!("{},{:.6},{}\n", p.step, p.train_nll, val));
    }
    out
}

pub fn check_tokens(seqs: &[TokenSeq], vocab_size: usize) -> Result<()> {
    for s in seqs {
        if let Some(&token) = s.tokens.iter().find(|&&t| t as usize >= vocab_size) {
            return Err(ModelError::Token { token, vocab_size });
        }
    }
    Ok(())
}

/// Mean per-token NLL over `seqs`, sequences cut to the context window.
pub fn transformer_nll<T: Real>(model: &TinyTransformer<T>, seqs: &[TokenSeq]) -> f64 {
    let parts: Vec<(f64, usize)> = seqs.par_iter().map(|s| model.sequence_loss(&s.tokens)).collect();
    let (loss, count) = parts.iter().fold((0.0, 0), |(l, c), &(pl, pc)| (l + pl, c + pc));
    if count == 0 {
        0.0
    } else {
        loss / count as f64
    }
}

struct AdamW<T> {
    m: Vec<T>,
    v: Vec<T>,
    decay: Vec<bool>,
    t: i32,
}

impl<T: Real> AdamW<T> {
    fn new(model: &TinyTransformer<T>) -> Self {
        let mut decay = vec![false; model.param_count()];
        for info in model.tensors() {
            decay[info.range()].iter_mut().for_each(|d| *d = info.decay);
        }
        AdamW { m: vec![T::zero(); decay.len()], v: vec![T::zero(); decay.len()], decay, t: 0 }
    }

    fn update(&mut self, params: &mut [T], grad: &[T], lr: f64, cfg: &TrainConfig) {
        self.t += 1;
        let (b1, b2) = (T::of(cfg.beta1), T::of(cfg.beta2));
        let c1 = T::of(1.0 - cfg.beta1.powi(self.t));
        let c2 = T::of(1.0 - cfg.beta2.powi(self.t));
        let (lr, wd, eps) = (T::of(lr), T::of(cfg.weight_decay), T::of(cfg.eps));
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = b1 * self.m[i] + (T::one() - b1) * g;
            self.v[i] = b2 * self.v[i] + (T::one() - b2) * g * g;
            let step = (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + eps);
            let decay = if self.decay[i] { wd * params[i] } else { T::zero() };
            params[i] -= lr * (step + decay);
        }
    }
}

/// Trains `model` in place. The curve starts with the untrained model at
/// step 0; training steps are numbered from 1. Each step draws `batch_size` sequences
/// uniformly with replacement; per-sequence gradients are computed in
/// parallel and summed in batch order, so results do not depend on the
/// thread count.
pub fn train_transformer<T: Real>(
    model: &mut TinyTransformer<T>,
    train: &[TokenSeq],
    val: &[TokenSeq],
    cfg: &TrainConfig,
    mut on_point: impl FnMut(&LossPoint),
) -> Result<Vec<LossPoint>> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(ModelError::EmptyCorpus);
    }
    check_tokens(train, model.config.vocab_size)?;
    check_tokens(val, model.config.vocab_size)?;
    let mut batch_rng = stream_rng(cfg.seed, 0);
    let mut opt = AdamW::new(model);
    let start = LossPoint {
        step: 0,
        train_nll: transformer_nll(model, train),
        val_nll: (!val.is_empty()).then(|| transformer_nll(model, val)),
    };
    on_point(&start);
    let mut curve = vec![start];
    for step in 0..cfg.steps {
        let batch: Vec<usize> = (0..cfg.batch_size).map(|_| batch_rng.gen_range(0..train.len())).collect();
        let first_stream = 1 + (step * cfg.batch_size) as u64;
        let model_ref = &*model;
        let grads: Vec<_> = batch
            .par_iter()
            .enumerate()
            .map(|(i, &idx)| {
                let mut rng = stream_rng(cfg.seed, first_stream + i as u64);
                let dropout = Dropout { rng: &mut rng, p: cfg.dropout };
                model_ref.sequence_grad(&train[idx].tokens, Some(dropout))
            })
            .collect();
        let mut grad = vec![T::zero(); model.param_count()];
        let (mut loss, mut count) = (0.0, 0usize);
        for g in &grads {
            loss += g.loss_sum;
            count += g.count;
            grad.iter_mut().zip(&g.grad).for_each(|(a, &b)| *a += b);
        }
        let train_nll = loss / count.max(1) as f64;
        if !train_nll.is_finite() {
            return Err(ModelError::Diverged { step, loss: train_nll });
        }
        let scale = T::of(1.0 / count.max(1) as f64);
        grad.iter_mut().for_each(|g| *g *= scale);
        let norm = grad.iter().map(|g| g.to_f64().unwrap().powi(2)).sum::<f64>().sqrt();
        if !norm.is_finite() {
            return Err(ModelError::Diverged { step, loss: norm });
        }
        if norm > cfg.grad_clip {
            let s = T::of(cfg.grad_clip / norm);
            grad.iter_mut().for_each(|g| *g *= s);
        }
        opt.update(&mut model.params, &grad, cfg.lr_at(step), cfg);

        let last = step + 1 == cfg.steps;
        let val_nll = ((step + 1) % cfg.eval_every == 0 || last)
            .then(|| transformer_nll(model, val))
            .filter(|_| !val.is_empty());
        let point = LossPoint { step: step + 1, train_nll, val_nll };
        on_point(&point);
        curve.push(point);
    }
    Ok(curve)
}

/// Fits the n-gram counts in a single pass. The curve has the untrained
/// model at step 0 and the fitted one at step 1.
pub fn train_ngram(model: &mut NGramModel, train: &[TokenSeq], val: &[TokenSeq]) -> Result<Vec<LossPoint>> {
    if train.is_empty() {
        return Err(ModelError::EmptyCorpus);
    }
    check_tokens(train, model.vocab_size)?;
    check_tokens(val, model.vocab_size)?;
    let val_of = |m: &NGramModel| (!val.is_empty()).then(|| mean_nll(m, val));
    let before = LossPoint { step: 0, train_nll: mean_nll(model, train), val_nll: val_of(model) };
    model.fit(train);
    let after = LossPoint { step: 1, train_nll: mean_nll(model, train), val_nll: val_of(model) };
    Ok(vec![before, after])
}
