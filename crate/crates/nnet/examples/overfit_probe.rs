//! Scratch probe: how fast the desk classifier memorizes 200 augmented
//! oscillator fields, and what one epoch costs in wall time.

use std::time::Instant;

use dynamics::warp::augmented_sample;
use dynamics::zoo::DynClass;
use nnet::model::ArchConfig;
use nnet::tensor::Tensor;
use nnet::train::{eval_accuracy, train, Class, TrainOpts, TrainSet};

fn angle_set(seed: u64, n: usize) -> TrainSet<f32> {
    let mut set = TrainSet::default();
    for i in 0..n {
        let (sample, _) = augmented_sample(seed, i as u64, 0.0);
        let tensor = Tensor::new(vec![1, 64, 64], sample.angles.clone());
        let class = match sample.label.expect("augmented samples are labeled") {
            DynClass::PointAttractor => Class::Point,
            DynClass::PeriodicAttractor => Class::Cycle,
        };
        set.push(tensor, class);
    }
    set
}

fn main() {
    let build = Instant::now();
    let set = angle_set(11, 200);
    let points = set.labels.iter().filter(|l| **l == Class::Point).count();
    println!("built 200 samples in {:.1?} ({points} point / {} cycle)", build.elapsed(), 200 - points);

    for epochs in [5usize, 10, 20, 40] {
        let opts = TrainOpts { epochs, batch_size: 64, seed: 3, val_fraction: 0.0, lr: 1e-4 };
        let t0 = Instant::now();
        let (model, report) = train(ArchConfig::desk(), &set, &opts).unwrap();
        let dt = t0.elapsed();
        let acc = eval_accuracy(&model, &set, 0, 0).unwrap();
        println!(
            "epochs {epochs:>3}: {dt:.1?} ({:.2?}/epoch)  first {:.4}  last {:.4}  train acc {:.3}",
            dt / epochs as u32,
            report.batch_losses[0],
            report.epoch_losses.last().unwrap(),
            acc,
        );
    }
}
