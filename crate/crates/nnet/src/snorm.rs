//! Spectral normalization with a persistent power-iteration state.
//!
//! The weight actually applied is W̄ = W/σ̂ where σ̂ = uᵀWv and (u, v) are the
//! running singular-vector estimates. u and v are treated as constants in the
//! backward pass, so the gradient w.r.t. the raw weight is
//! (G − (Σ G⊙W̄)·uvᵀ)/σ̂ for G = ∂L/∂W̄.

use crate::tensor::{Scalar, Tensor};
use rand::Rng;

const NORM_EPS: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct SpectralState<S> {
    pub u: Vec<S>,
    pub v: Vec<S>,
}

fn normalize<S: Scalar>(x: &mut [S]) {
    let mut sq = 0.0;
    for &e in x.iter() {
        sq += (e * e).to_f64();
    }
    let inv = S::from_f64(1.0 / (sq.sqrt() + NORM_EPS));
    for e in x.iter_mut() {
        *e *= inv;
    }
}

impl<S: Scalar> SpectralState<S> {
    /// Fresh state with a random unit u; call `iterate` a few times before
    /// trusting the estimate.
    pub fn init<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let mut u: Vec<S> = (0..rows).map(|_| S::from_f64(rng.gen_range(-1.0..1.0))).collect();
        normalize(&mut u);
        Self { u, v: vec![S::ZERO; cols] }
    }

    /// One power-iteration update on the matrix view (rows, cols) of `w`.
    pub fn iterate(&mut self, w: &Tensor<S>) {
        let (rows, cols) = (self.u.len(), self.v.len());
        debug_assert_eq!(w.numel(), rows * cols);
        for j in 0..cols {
            let mut acc = S::ZERO;
            for i in 0..rows {
                acc += w.data[i * cols + j] * self.u[i];
            }
            self.v[j] = acc;
        }
        normalize(&mut self.v);
        for i in 0..rows {
            let row = &w.data[i * cols..(i + 1) * cols];
            let mut acc = S::ZERO;
            for (wj, vj) in row.iter().zip(&self.v) {
                acc += *wj * *vj;
            }
            self.u[i] = acc;
        }
        normalize(&mut self.u);
    }

    /// Current estimate σ̂ = uᵀWv of the top singular value.
    pub fn sigma(&self, w: &Tensor<S>) -> S {
        let cols = self.v.len();
        let mut acc = S::ZERO;
        for (i, &ui) in self.u.iter().enumerate() {
            let row = &w.data[i * cols..(i + 1) * cols];
            let mut wv = S::ZERO;
            for (wj, vj) in row.iter().zip(&self.v) {
                wv += *wj * *vj;
            }
            acc += ui * wv;
        }
        acc
    }

    /// W̄ = W/σ̂ together with σ̂.
    pub fn normalized(&self, w: &Tensor<S>) -> (Tensor<S>, S) {
        let sigma = self.sigma(w);
        let inv = S::ONE / sigma;
        let mut out = w.clone();
        for e in out.data.iter_mut() {
            *e *= inv;
        }
        (out, sigma)
    }

    /// Gradient w.r.t. the raw W given the gradient `g` w.r.t. W̄.
    pub fn grad_through(&self, g: &Tensor<S>, w_bar: &Tensor<S>, sigma: S) -> Tensor<S> {
        let cols = self.v.len();
        let mut dot = S::ZERO;
        for (ge, we) in g.data.iter().zip(&w_bar.data) {
            dot += *ge * *we;
        }
        let inv = S::ONE / sigma;
        let mut out = g.clone();
        for i in 0..self.u.len() {
            let coef = dot * self.u[i];
            let row = &mut out.data[i * cols..(i + 1) * cols];
            for (oj, vj) in row.iter_mut().zip(&self.v) {
                *oj = (*oj - coef * *vj) * inv;
            }
        }
        out
    }
}
