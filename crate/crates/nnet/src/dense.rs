//! Fully connected layer, rectifier activations, and inverted dropout.

use crate::tensor::{Scalar, Tensor};
use rand::Rng;

/// y = W·x + b for a single feature vector; `w` is (out, in).
pub fn linear_fwd<S: Scalar>(x: &[S], w: &Tensor<S>, b: &[S]) -> Vec<S> {
    let (out, inp) = (w.shape[0], w.shape[1]);
    assert_eq!(x.len(), inp, "linear input width");
    assert_eq!(b.len(), out, "linear bias width");
    let mut y = b.to_vec();
    for (o, yo) in y.iter_mut().enumerate() {
        let row = &w.data[o * inp..(o + 1) * inp];
        let mut acc = S::ZERO;
        for (xi, wi) in x.iter().zip(row) {
            acc += *xi * *wi;
        }
        *yo += acc;
    }
    y
}

/// Returns dx and accumulates dW, db into the provided buffers.
pub fn linear_bwd<S: Scalar>(
    x: &[S],
    w: &Tensor<S>,
    dy: &[S],
    dw: &mut Tensor<S>,
    db: &mut [S],
) -> Vec<S> {
    let (out, inp) = (w.shape[0], w.shape[1]);
    assert_eq!(dy.len(), out);
    let mut dx = vec![S::ZERO; inp];
    for (o, &g) in dy.iter().enumerate() {
        db[o] += g;
        let wrow = &w.data[o * inp..(o + 1) * inp];
        let dwrow = &mut dw.data[o * inp..(o + 1) * inp];
        for i in 0..inp {
            dwrow[i] += g * x[i];
            dx[i] += g * wrow[i];
        }
    }
    dx
}

/// In-place leaky rectifier; the derivative at exactly 0 takes the slope.
pub fn leaky_relu<S: Scalar>(x: &mut [S], slope: S) {
    for v in x.iter_mut() {
        if *v < S::ZERO {
            *v *= slope;
        }
    }
}

/// dx from the PRE-activation values.
pub fn leaky_relu_bwd<S: Scalar>(pre: &[S], dy: &[S], slope: S) -> Vec<S> {
    pre.iter().zip(dy).map(|(&p, &g)| if p > S::ZERO { g } else { g * slope }).collect()
}

/// Inverted dropout: zero with probability `rate`, scale survivors by
/// 1/(1−rate). rate 0 is the identity and draws nothing.
pub fn dropout_fwd<S: Scalar, R: Rng>(x: &[S], rate: f64, rng: &mut R) -> (Vec<S>, Vec<bool>) {
    assert!((0.0..1.0).contains(&rate));
    if rate == 0.0 {
        return (x.to_vec(), vec![true; x.len()]);
    }
    let scale = S::from_f64(1.0 / (1.0 - rate));
    let mut keep = vec![false; x.len()];
    let y = x
        .iter()
        .zip(keep.iter_mut())
        .map(|(&v, k)| {
            *k = rng.gen_range(0.0..1.0) >= rate;
            if *k {
                v * scale
            } else {
                S::ZERO
            }
        })
        .collect();
    (y, keep)
}

pub fn dropout_bwd<S: Scalar>(dy: &[S], keep: &[bool], rate: f64) -> Vec<S> {
    let scale = S::from_f64(1.0 / (1.0 - rate));
    dy.iter().zip(keep).map(|(&g, &k)| if k { g * scale } else { S::ZERO }).collect()
}
