//! Scratch probe: criterion-style desk run (2000 augmented samples, paper
//! optimizer constants) plus a learning-rate sensitivity scan on 200 samples.

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
    // Learning-rate scan first: cheap, tells whether the stack can learn at all.
    let small = angle_set(11, 0, 200);
    for lr in [1e-4, 3e-4, 1e-3] {
        let opts = TrainOpts { epochs: 40, batch_size: 16, seed: 3, val_fraction: 0.0, lr };
        let t0 = Instant::now();
        let (model, report) = train(ArchConfig::desk(), &small, &opts).unwrap();
        let acc = eval_accuracy(&model, &small, 0, 0).unwrap();
        println!(
            "lr {lr:.0e} steps {}: {:.0?}  loss {:.4} -> {:.4}  train acc {acc:.3}",
            report.steps,
            t0.elapsed(),
            report.epoch_losses[0],
            report.epoch_losses.last().unwrap(),
        );
    }

    // Full-size dry run at paper constants.
    let train_set = angle_set(11, 0, 2000);
    let test_set = angle_set(12, 10_000, 200);
    let opts = TrainOpts { epochs: 20, batch_size: 64, seed: 3, val_fraction: 0.1, lr: 1e-4 };
    let t0 = Instant::now();
    let (model, report) = train(ArchConfig::desk(), &train_set, &opts).unwrap();
    let dt = t0.elapsed();
    let test_acc = eval_accuracy(&model, &test_set, 0, 0).unwrap();
    println!(
        "desk dry run: {dt:.0?} steps {} losses {:.4} -> {:.4} val {:?} train {:.3} TEST {test_acc:.3}",
        report.steps,
        report.epoch_losses[0],
        report.epoch_losses.last().unwrap(),
        &report.val_accuracy[report.val_accuracy.len().saturating_sub(3)..],
        report.final_train_accuracy,
    );
}
