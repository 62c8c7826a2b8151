//! Scratch probe: desk-profile accuracy as a function of batch size at the
//! fixed optimizer constants (lr 1e-4, 20 epochs).

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
    for batch in [16usize, 8] {
        let opts = TrainOpts { epochs: 20, batch_size: batch, seed: 3, val_fraction: 0.1, lr: 1e-4 };
        let t0 = Instant::now();
        let (model, report) = train(ArchConfig::desk(), &train_set, &opts).unwrap();
        let test_acc = eval_accuracy(&model, &test_set, 0, 0).unwrap();
        println!(
            "batch {batch:>2}: {:.0?} steps {} loss {:.4}->{:.4} val last5 {:?} train {:.3} TEST {test_acc:.3}",
            t0.elapsed(),
            report.steps,
            report.epoch_losses[0],
            report.epoch_losses.last().unwrap(),
            &report.val_accuracy[15..],
            report.final_train_accuracy,
        );
    }
}
