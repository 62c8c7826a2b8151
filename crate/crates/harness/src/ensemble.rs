//! Training re-run ensembles with on-disk resume, covering the full model
//! and its ablated variants.

use std::path::PathBuf;

use dynamics::seed::derive;
use dynamics::warp::augmented_sample;
use dynamics::zoo::{DynClass, SystemName};
use nnet::checkpoint;
use nnet::model::{ArchConfig, InputMode, Model};
use nnet::train::{train, Class, TrainOpts, TrainSet};

use crate::config::ExperimentConfig;
use crate::evalsets::{input_tensor, zoo_eval_set};
use crate::HarnessError;

/// Seed-stream tags; each experiment surface draws from its own stream.
pub mod tags {
    /// Training re-runs, offset by variant.
    pub const TRAIN: u64 = 0x54_52_41;
    /// Plain (unaugmented) SO training fields.
    pub const PLAIN_TRAIN: u64 = 0x50_4C_54;
    /// Per-sample MC-dropout prediction streams.
    pub const PREDICT: u64 = 0x50_52_44;
}

/// Model variants of the ablation table; `Full` is the main ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Full,
    NoAttention,
    FromVectors,
    NoAugmentation,
    CnnBaseline,
}

pub const ABLATIONS: [Variant; 4] =
    [Variant::NoAttention, Variant::FromVectors, Variant::NoAugmentation, Variant::CnnBaseline];

impl Variant {
    pub fn id(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoAttention => "no_attention",
            Variant::FromVectors => "from_vectors",
            Variant::NoAugmentation => "no_augmentation",
            Variant::CnnBaseline => "cnn_baseline",
        }
    }

    fn index(self) -> u64 {
        match self {
            Variant::Full => 0,
            Variant::NoAttention => 1,
            Variant::FromVectors => 2,
            Variant::NoAugmentation => 3,
            Variant::CnnBaseline => 4,
        }
    }

    pub fn attends(self) -> bool {
        !matches!(self, Variant::NoAttention | Variant::CnnBaseline)
    }

    pub fn input_mode(self) -> InputMode {
        match self {
            Variant::FromVectors | Variant::CnnBaseline => InputMode::Vectors,
            _ => InputMode::Angles,
        }
    }

    /// Whether training data is the augmented SO set (vs plain SO fields).
    pub fn augmented(self) -> bool {
        !matches!(self, Variant::NoAugmentation | Variant::CnnBaseline)
    }

    pub fn arch(self, base: &ArchConfig) -> ArchConfig {
        ArchConfig { attention: self.attends(), input_mode: self.input_mode(), ..base.clone() }
    }
}

/// A variant's trained re-runs; `seeds[k]` initialized and shuffled run k.
pub struct Ensemble {
    pub variant: Variant,
    pub models: Vec<Model<f32>>,
    pub seeds: Vec<u64>,
}

impl Ensemble {
    /// MC-dropout stream for one (run, sample) prediction.
    pub fn predict_seed(&self, run: usize, sample: u64) -> u64 {
        derive(derive(self.seeds[run], tags::PREDICT), sample)
    }
}

pub fn train_seed(cfg: &ExperimentConfig, variant: Variant, run: u64) -> u64 {
    derive(cfg.seed, tags::TRAIN + variant.index() * 1024 + run)
}

fn checkpoint_dir(cfg: &ExperimentConfig, variant: Variant) -> PathBuf {
    cfg.out_dir.join("models").join(cfg.hash()).join(variant.id())
}

/// The variant's training set. Augmented variants read the shared augmented
/// SO stream; unaugmented ones rasterize plain SO fields. Vector-input
/// variants keep the raw velocity planes instead of angles.
pub fn training_set(
    cfg: &ExperimentConfig,
    variant: Variant,
) -> Result<TrainSet<f32>, HarnessError> {
    let mut set = TrainSet::default();
    if variant.augmented() {
        for i in 0..cfg.train.train_samples {
            let (sample, _) = augmented_sample(cfg.seed, i as u64, 0.0);
            let label = class_of(sample.label.expect("augmented samples are labeled"));
            let input = match variant.input_mode() {
                InputMode::Angles => {
                    nnet::tensor::Tensor::new(vec![1, 64, 64], sample.angles.clone())
                }
                InputMode::Vectors => {
                    let (u, v) = sample.raw.as_ref().expect("generator keeps raw rasters");
                    let mut data = Vec::with_capacity(2 * u.len());
                    data.extend_from_slice(u);
                    data.extend_from_slice(v);
                    nnet::tensor::Tensor::new(vec![2, 64, 64], data)
                }
            };
            set.push(input, label);
        }
    } else {
        let fields = zoo_eval_set(
            SystemName::SimpleOscillator,
            cfg.train.train_samples,
            derive(cfg.seed, tags::PLAIN_TRAIN),
        )?;
        for f in &fields {
            set.push(input_tensor(variant.input_mode(), &f.clean), class_of(f.label));
        }
    }
    Ok(set)
}

pub fn class_of(label: DynClass) -> Class {
    match label {
        DynClass::PointAttractor => Class::Point,
        DynClass::PeriodicAttractor => Class::Cycle,
    }
}

/// Loads the variant's re-runs from the config's checkpoint store, training
/// and saving any that are missing. Checkpoints live under the config hash,
/// so parameter changes never resume stale weights.
pub fn ensure_ensemble(
    cfg: &ExperimentConfig,
    variant: Variant,
    runs: usize,
) -> Result<Ensemble, HarnessError> {
    let dir = checkpoint_dir(cfg, variant);
    std::fs::create_dir_all(&dir)?;
    let mut models = Vec::with_capacity(runs);
    let mut seeds = Vec::with_capacity(runs);
    let mut data: Option<TrainSet<f32>> = None;

    for run in 0..runs {
        let path = dir.join(format!("run{run}.ckpt"));
        let seed = train_seed(cfg, variant, run as u64);
        if path.is_file() {
            let (model, stored_seed) = checkpoint::load(&path)?;
            if stored_seed != seed {
                return Err(HarnessError::Config(format!(
                    "checkpoint {} carries seed {stored_seed}, expected {seed}",
                    path.display()
                )));
            }
            models.push(model);
            seeds.push(seed);
            continue;
        }
        let set = match &data {
            Some(set) => set,
            None => data.insert(training_set(cfg, variant)?),
        };
        let opts = TrainOpts {
            lr: cfg.train.lr,
            epochs: cfg.train.epochs,
            batch_size: cfg.train.batch_size,
            seed,
            val_fraction: 0.0,
        };
        let arch = variant.arch(&cfg.arch()?);
        let (model, report) = train(arch, set, &opts)?;
        eprintln!(
            "trained {}/run{run}: {} steps, final loss {:.4}, train accuracy {:.3}",
            variant.id(),
            report.steps,
            report.epoch_losses.last().copied().unwrap_or(f64::NAN),
            report.final_train_accuracy,
        );
        checkpoint::save(&model, seed, &path)?;
        models.push(model);
        seeds.push(seed);
    }
    Ok(Ensemble { variant, models, seeds })
}
