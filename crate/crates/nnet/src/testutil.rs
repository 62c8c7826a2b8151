//! Shared numeric oracles for unit tests.

use crate::tensor::Tensor;

/// Top singular value by long power iteration on WᵀW from a fixed dense
/// start vector; independent of the incremental estimator under test.
pub fn top_singular_value(w: &Tensor<f64>, rows: usize, cols: usize) -> f64 {
    assert_eq!(w.numel(), rows * cols);
    let mut v: Vec<f64> = (0..cols).map(|j| 1.0 + 0.1 * j as f64).collect();
    let mut lambda = 0.0;
    for _ in 0..500 {
        let mut t = vec![0.0; rows];
        for i in 0..rows {
            for j in 0..cols {
                t[i] += w.data[i * cols + j] * v[j];
            }
        }
        let mut nv = vec![0.0; cols];
        for i in 0..rows {
            for j in 0..cols {
                nv[j] += w.data[i * cols + j] * t[i];
            }
        }
        let norm = nv.iter().map(|e| e * e).sum::<f64>().sqrt();
        lambda = norm;
        for e in nv.iter_mut() {
            *e /= norm;
        }
        v = nv;
    }
    lambda.sqrt()
}

/// Central-difference check of `analytic` against `loss` over every entry of
/// `param`; returns the max relative error with a 1e-8 denominator floor.
pub fn gradcheck<F>(param: &Tensor<f64>, analytic: &Tensor<f64>, mut loss: F) -> f64
where
    F: FnMut(&Tensor<f64>) -> f64,
{
    assert_eq!(param.shape, analytic.shape);
    let eps = 1e-4;
    let mut worst = 0.0f64;
    let mut probe = param.clone();
    for i in 0..param.numel() {
        let orig = probe.data[i];
        probe.data[i] = orig + eps;
        let up = loss(&probe);
        probe.data[i] = orig - eps;
        let down = loss(&probe);
        probe.data[i] = orig;
        let fd = (up - down) / (2.0 * eps);
        let an = analytic.data[i];
        let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    worst
}
