//! Minibatch Adam training on binary cross-entropy, with a held-out split
//! whose accuracy is reported but never steers the run.

use crate::adam::{AdamOpts, AdamState};
use crate::derive_seed;
use crate::loss::bce_with_logits;
use crate::model::{ArchConfig, Model};
use crate::tensor::{Scalar, Tensor};
use crate::ShapeMismatch;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Class {
    Point,
    Cycle,
}

impl Class {
    /// Index into the [point, cycle] logit pair.
    pub fn index(self) -> usize {
        match self {
            Class::Point => 0,
            Class::Cycle => 1,
        }
    }

    pub fn targets<S: Scalar>(self) -> [S; 2] {
        match self {
            Class::Point => [S::ONE, S::ZERO],
            Class::Cycle => [S::ZERO, S::ONE],
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct TrainSet<S> {
    pub inputs: Vec<Tensor<S>>,
    pub labels: Vec<Class>,
}

impl<S> TrainSet<S> {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn push(&mut self, input: Tensor<S>, label: Class) {
        self.inputs.push(input);
        self.labels.push(label);
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TrainOpts {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Fraction held out for reported accuracy; 0 trains on everything.
    pub val_fraction: f64,
}

impl Default for TrainOpts {
    fn default() -> Self {
        Self { lr: 1e-4, epochs: 20, batch_size: 64, seed: 0, val_fraction: 0.1 }
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training set is empty")]
    EmptyDataset,
    #[error("training split contains a single class")]
    DegenerateLabels,
    #[error(transparent)]
    Shape(#[from] ShapeMismatch),
}

/// Losses are per-sample totals (twice the per-element mean), so a fresh
/// model scores about 2·ln 2.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub batch_losses: Vec<f64>,
    pub epoch_losses: Vec<f64>,
    /// Accuracy on the held-out split after each epoch; empty when none.
    pub val_accuracy: Vec<f64>,
    /// Accuracy on the training split after the final epoch (no dropout).
    pub final_train_accuracy: f64,
    pub train_size: usize,
    pub val_size: usize,
    pub steps: u64,
}

/// Seed streams: 0 init, 1 split shuffle, 2 dropout masks, 3 epoch order.
pub fn train<S: Scalar>(
    arch: ArchConfig,
    data: &TrainSet<S>,
    opts: &TrainOpts,
) -> Result<(Model<S>, TrainReport), TrainError> {
    if data.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    assert_eq!(data.inputs.len(), data.labels.len());
    assert!(opts.batch_size >= 1 && opts.epochs >= 1);
    assert!((0.0..1.0).contains(&opts.val_fraction));

    let n = data.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(opts.seed, 1)));
    let n_val = (n as f64 * opts.val_fraction) as usize;
    let (val_idx, train_idx) = idx.split_at(n_val);
    let first = data.labels[train_idx[0]];
    if train_idx.iter().all(|&i| data.labels[i] == first) {
        return Err(TrainError::DegenerateLabels);
    }

    let mut model = Model::init(arch, derive_seed(opts.seed, 0));
    let mut drop_rng = ChaCha8Rng::seed_from_u64(derive_seed(opts.seed, 2));
    let mut order_rng = ChaCha8Rng::seed_from_u64(derive_seed(opts.seed, 3));
    let adam_opts = AdamOpts { lr: opts.lr, ..AdamOpts::default() };
    let mut adam: Vec<AdamState<S>> =
        model.trainables().iter().map(|t| AdamState::new(t.numel())).collect();

    let mut report = TrainReport {
        batch_losses: Vec::new(),
        epoch_losses: Vec::with_capacity(opts.epochs),
        val_accuracy: Vec::new(),
        final_train_accuracy: 0.0,
        train_size: train_idx.len(),
        val_size: n_val,
        steps: 0,
    };
    let mut order = train_idx.to_vec();
    for _epoch in 0..opts.epochs {
        order.shuffle(&mut order_rng);
        let mut epoch_sum = 0.0;
        for chunk in order.chunks(opts.batch_size) {
            model.sn_iterate();
            let nw = model.normalized_weights();
            let mut acc: Vec<Tensor<S>> =
                model.trainables().iter().map(|t| Tensor::zeros(t.shape.clone())).collect();
            let mut batch_sum = 0.0;
            for &si in chunk {
                let fwd = model.forward(&nw, &data.inputs[si], Some(&mut drop_rng))?;
                let targets = data.labels[si].targets::<S>();
                let (loss, dlogits) = bce_with_logits(&fwd.head.logits, &targets);
                batch_sum += loss;
                let grads = model.backward(&nw, &fwd, &dlogits);
                for (a, g) in acc.iter_mut().zip(&grads) {
                    for (av, gv) in a.data.iter_mut().zip(&g.data) {
                        *av += *gv;
                    }
                }
            }
            let scale = S::from_f64(1.0 / chunk.len() as f64);
            report.steps += 1;
            for ((param, st), g) in model.trainables_mut().into_iter().zip(&mut adam).zip(&acc) {
                let scaled: Vec<S> = g.data.iter().map(|&v| v * scale).collect();
                st.step(&mut param.data, &scaled, &adam_opts, report.steps);
            }
            epoch_sum += batch_sum;
            report.batch_losses.push(2.0 * batch_sum / chunk.len() as f64);
        }
        report.epoch_losses.push(2.0 * epoch_sum / order.len() as f64);
        if n_val > 0 {
            let nw = model.normalized_weights();
            let mut correct = 0usize;
            for &vi in val_idx {
                let p = model.predict_with(&nw, &data.inputs[vi], 0, 0)?;
                correct += usize::from(p.label == data.labels[vi].index());
            }
            report.val_accuracy.push(correct as f64 / n_val as f64);
        }
    }
    {
        let nw = model.normalized_weights();
        let mut correct = 0usize;
        for &ti in train_idx {
            let p = model.predict_with(&nw, &data.inputs[ti], 0, 0)?;
            correct += usize::from(p.label == data.labels[ti].index());
        }
        report.final_train_accuracy = correct as f64 / train_idx.len() as f64;
    }
    Ok((model, report))
}

/// Label accuracy under MC-dropout prediction; sample i draws its mask
/// stream from derive_seed(seed, i), so set order does not matter.
pub fn eval_accuracy<S: Scalar>(
    model: &Model<S>,
    set: &TrainSet<S>,
    mc: usize,
    seed: u64,
) -> Result<f64, ShapeMismatch> {
    assert!(!set.is_empty());
    let nw = model.normalized_weights();
    let mut correct = 0usize;
    for (i, (input, label)) in set.inputs.iter().zip(&set.labels).enumerate() {
        let p = model.predict_with(&nw, input, mc, derive_seed(seed, i as u64))?;
        correct += usize::from(p.label == label.index());
    }
    Ok(correct as f64 / set.len() as f64)
}
