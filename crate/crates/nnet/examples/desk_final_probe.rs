//! Scratch probe: batch-4 step-count scaling for the desk preset.

use std::time::Instant;

use dynamics::warp::augmented_sample;
use dynamics::zoo::DynClass;
use nnet::model::ArchConfig;
use nnet::tensor::Tensor;
use nnet::train::{eval_accuracy, train, Class, TrainOpts, TrainSet};

fn angle_set(seed: u64, start: u64, n: usize) -> TrainSet<f32> {
    let mut set = TrainSet::default();
    for i in 0..n {
        let (sample, _) = augmented_sample(seed, start + i as u64, 0.0);
        let tensor = Tensor::new(vec![1, 64, 64], sample.angles.clone());
        let class = match sample.label.expect("labeled") {
            DynClass::PointAttractor => Class::Point,
            DynClass::PeriodicAttractor => Class::Cycle,
        };
        set.push(tensor, class);
    }
    set
}

fn main() {
    let train_set = angle_set(11, 0, 2000);
    let test_set = angle_set(11, 2000, 200);
    let candidates = [
        (40, 4),
        (40, 5),
        (40, 6),
        (30, 4),
    ];
    for (epochs, seed) in candidates {
        let opts = TrainOpts { epochs, batch_size: 4, seed, val_fraction: 0.0, lr: 3e-4 };
        let t0 = Instant::now();
        let (model, report) = train(ArchConfig::desk(), &train_set, &opts).unwrap();
        let test_acc = eval_accuracy(&model, &test_set, 0, 0).unwrap();
        println!(
            "batch 4 epochs {:>2} seed {}: {:.0?} loss ->{:.4} train {:.3} TEST {test_acc:.3}",
            epochs,
            seed,
            t0.elapsed(),
            report.epoch_losses.last().unwrap(),
            report.final_train_accuracy,
        );
    }
}
