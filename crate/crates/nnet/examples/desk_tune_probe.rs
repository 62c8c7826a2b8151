//! Scratch probe: three candidate desk presets against the 0.80 floor.

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
    let test_set = angle_set(12, 10_000, 200);
    let candidates = [
        TrainOpts { epochs: 20, batch_size: 4, seed: 3, val_fraction: 0.1, lr: 1e-4 },
        TrainOpts { epochs: 40, batch_size: 8, seed: 3, val_fraction: 0.1, lr: 1e-4 },
        TrainOpts { epochs: 20, batch_size: 8, seed: 3, val_fraction: 0.1, lr: 3e-4 },
    ];
    for opts in candidates {
        let t0 = Instant::now();
        let (model, report) = train(ArchConfig::desk(), &train_set, &opts).unwrap();
        let test_acc = eval_accuracy(&model, &test_set, 0, 0).unwrap();
        println!(
            "batch {:>2} epochs {:>2} lr {:.0e}: {:.0?} steps {} loss ->{:.4} val last4 {:?} train {:.3} TEST {test_acc:.3}",
            opts.batch_size,
            opts.epochs,
            opts.lr,
            t0.elapsed(),
            report.steps,
            report.epoch_losses.last().unwrap(),
            &report.val_accuracy[opts.epochs - 4..],
            report.final_train_accuracy,
        );
    }
}
