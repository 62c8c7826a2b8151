//! Adam with bias correction. One state per parameter tensor; the step
//! counter lives with the caller so every tensor shares the same t.

use crate::tensor::Scalar;

#[derive(Debug, Clone, Copy)]
pub struct AdamOpts {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamOpts {
    fn default() -> Self {
        Self { lr: 1e-4, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

#[derive(Debug, Clone)]
pub struct AdamState<S> {
    m: Vec<S>,
    v: Vec<S>,
}

impl<S: Scalar> AdamState<S> {
    pub fn new(len: usize) -> Self {
        Self { m: vec![S::ZERO; len], v: vec![S::ZERO; len] }
    }

    /// Applies one update in place. `t` is the 1-based global step count.
    pub fn step(&mut self, param: &mut [S], grad: &[S], opts: &AdamOpts, t: u64) {
        assert_eq!(param.len(), self.m.len());
        assert_eq!(grad.len(), self.m.len());
        assert!(t >= 1);
        let b1 = S::from_f64(opts.beta1);
        let b2 = S::from_f64(opts.beta2);
        let ob1 = S::from_f64(1.0 - opts.beta1);
        let ob2 = S::from_f64(1.0 - opts.beta2);
        let c1 = S::from_f64(1.0 / (1.0 - opts.beta1.powi(t as i32)));
        let c2 = S::from_f64(1.0 / (1.0 - opts.beta2.powi(t as i32)));
        let lr = S::from_f64(opts.lr);
        let eps = S::from_f64(opts.eps);
        for i in 0..param.len() {
            let g = grad[i];
            self.m[i] = b1 * self.m[i] + ob1 * g;
            self.v[i] = b2 * self.v[i] + ob2 * g * g;
            let mhat = self.m[i] * c1;
            let vhat = self.v[i] * c2;
            param[i] -= lr * mhat / (vhat.sqrt() + eps);
        }
    }
}
