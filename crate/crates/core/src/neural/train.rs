//! Adam training loop with warmup schedule, dev-set early stopping and
//! best-checkpoint selection.

use std::path::Path;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::Batch;
use super::{noam_rate, Real, TrainConfig, Transformer, TransformerConfig};
use crate::{Error, Result};

/// One (source ids, target ids) pair; the target includes `Begin` and `End`.
pub type Pair = (Vec<usize>, Vec<usize>);

const STREAM_SPLIT: u64 = 1;
const STREAM_BATCHES: u64 = 2;
const STREAM_DROPOUT: u64 = 3;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub steps: usize,
    pub learning_rate: f64,
    pub train_loss: f64,
    pub dev_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<F: Real> {
    /// Parameters from the epoch with the lowest dev loss.
    pub model: Transformer<F>,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

pub struct Adam<F: Real> {
    m: Vec<Array2<F>>,
    v: Vec<Array2<F>>,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    t: i32,
}

impl<F: Real> Adam<F> {
    pub fn new(model: &Transformer<F>, cfg: &TrainConfig) -> Self {
        let zeros: Vec<Array2<F>> = model
            .named_parameters()
            .iter()
            .map(|(_, p)| Array2::zeros(p.dim()))
            .collect();
        Adam {
            m: zeros.clone(),
            v: zeros,
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            epsilon: cfg.epsilon,
            t: 0,
        }
    }

    pub fn step(&mut self, model: &mut Transformer<F>, grad: &mut Transformer<F>, lr: f64) {
        self.t += 1;
        let c = |x: f64| F::from_f64(x).unwrap();
        let (b1, b2) = (c(self.beta1), c(self.beta2));
        let (one_b1, one_b2) = (c(1.0 - self.beta1), c(1.0 - self.beta2));
        let corr1 = c(1.0 - self.beta1.powi(self.t));
        let corr2 = c(1.0 - self.beta2.powi(self.t));
        let (lr, eps) = (c(lr), c(self.epsilon));
        let grads = grad.parameters_mut();
        for (((p, g), m), v) in model
            .parameters_mut()
            .into_iter()
            .zip(grads)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            ndarray::Zip::from(p)
                .and(&*g)
                .and(m)
                .and(v)
                .for_each(|p, &g, m, v| {
                    *m = b1 * *m + one_b1 * g;
                    *v = b2 * *v + one_b2 * g * g;
                    let mh = *m / corr1;
                    let vh = *v / corr2;
                    *p -= lr * mh / (vh.sqrt() + eps);
                });
        }
    }
}

pub struct Trainer {
    pub model: TransformerConfig,
    pub train: TrainConfig,
}

impl Trainer {
    pub fn new(model: TransformerConfig, train: TrainConfig) -> Self {
        Trainer { model, train }
    }

    /// Seeded split into (train, dev). Dev gets `round(n * dev_fraction)`
    /// pairs, at least one when `n >= 2` and the fraction is positive.
    pub fn split(&self, pairs: &[Pair]) -> (Vec<Pair>, Vec<Pair>) {
        let n = pairs.len();
        let mut dev_n = (n as f64 * self.train.dev_fraction).round() as usize;
        if self.train.dev_fraction > 0.0 && n >= 2 {
            dev_n = dev_n.clamp(1, n - 1);
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut stream(self.train.seed, STREAM_SPLIT));
        let dev = order[..dev_n].iter().map(|&i| pairs[i].clone()).collect();
        let train = order[dev_n..].iter().map(|&i| pairs[i].clone()).collect();
        (train, dev)
    }

    pub fn train<F: Real>(
        &self,
        pairs: &[Pair],
        src_vocab: usize,
        tgt_vocab: usize,
    ) -> Result<TrainOutcome<F>> {
        let (train, dev) = self.split(pairs);
        self.fit(&train, &dev, src_vocab, tgt_vocab)
    }

    /// Trains on `train`, selecting the epoch with the lowest `dev` loss.
    /// With an empty dev set the training loss is used instead.
    pub fn fit<F: Real>(
        &self,
        train: &[Pair],
        dev: &[Pair],
        src_vocab: usize,
        tgt_vocab: usize,
    ) -> Result<TrainOutcome<F>> {
        if train.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let cfg = &self.train;
        let mut model: Transformer<F> =
            Transformer::new(self.model.clone(), src_vocab, tgt_vocab, cfg.seed);
        let mut adam = Adam::new(&model, cfg);
        let mut batch_rng = stream(cfg.seed, STREAM_BATCHES);
        let mut dropout_rng = stream(cfg.seed, STREAM_DROPOUT);
        let dev_batches = batches(dev, &(0..dev.len()).collect::<Vec<_>>(), cfg.batch_size);

        let mut history = Vec::new();
        let mut best = (f64::INFINITY, model.clone(), 0usize);
        let mut step = 0usize;
        let mut stale = 0usize;
        let mut stopped_early = false;
        let mut order: Vec<usize> = (0..train.len()).collect();
        for epoch in 1..=cfg.max_epochs {
            order.shuffle(&mut batch_rng);
            let mut total = 0.0;
            let mut tokens = 0usize;
            let mut lr = 0.0;
            for batch in batches(train, &order, cfg.batch_size) {
                step += 1;
                lr = noam_rate(self.model.width, cfg.warmup_steps, step);
                let (loss, mut grad) = model.loss_and_gradients(&batch, Some(&mut dropout_rng));
                let loss = loss.to_f64().unwrap();
                if !loss.is_finite() {
                    return Err(Error::NonFiniteLoss { epoch, step, lr });
                }
                let n = batch.target_tokens();
                total += loss * n as f64;
                tokens += n;
                adam.step(&mut model, &mut grad, lr);
            }
            let train_loss = total / tokens.max(1) as f64;
            let dev_loss = if dev.is_empty() {
                train_loss
            } else {
                mean_loss(&model, &dev_batches)
            };
            if !dev_loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, step, lr });
            }
            history.push(EpochRecord {
                epoch,
                steps: step,
                learning_rate: lr,
                train_loss,
                dev_loss,
            });
            if dev_loss < best.0 {
                best = (dev_loss, model.clone(), epoch);
                stale = 0;
            } else {
                stale += 1;
                if stale >= cfg.patience {
                    stopped_early = true;
                    break;
                }
            }
        }
        Ok(TrainOutcome {
            model: best.1,
            history,
            best_epoch: best.2,
            stopped_early,
        })
    }
}

fn batches(pairs: &[Pair], order: &[usize], size: usize) -> Vec<Batch> {
    order
        .chunks(size.max(1))
        .map(|chunk| {
            let rows: Vec<&Pair> = chunk.iter().map(|&i| &pairs[i]).collect();
            Batch::new(&rows.iter().map(|(s, t)| (s, t)).collect::<Vec<_>>())
        })
        .collect()
}

/// Token-weighted evaluation-mode loss over pre-built batches.
pub fn mean_loss<F: Real>(model: &Transformer<F>, batches: &[Batch]) -> f64 {
    let mut total = 0.0;
    let mut tokens = 0usize;
    for b in batches {
        let n = b.target_tokens();
        total += model.loss(b).to_f64().unwrap() * n as f64;
        tokens += n;
    }
    total / tokens.max(1) as f64
}

pub fn write_history(path: &Path, history: &[EpochRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Checkpoint(format!("{other:?}")),
    })?;
    for r in history {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
