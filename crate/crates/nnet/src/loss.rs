//! Binary cross-entropy on logits, averaged over every element.

use crate::tensor::{sigmoid, softplus, Scalar};

/// Returns (mean loss, d loss / d logits). Each element contributes
/// softplus(z) − t·z, which is finite for any logit magnitude; the sum is
/// accumulated in f64 regardless of S.
pub fn bce_with_logits<S: Scalar>(logits: &[S], targets: &[S]) -> (f64, Vec<S>) {
    assert_eq!(logits.len(), targets.len());
    assert!(!logits.is_empty());
    let n = logits.len() as f64;
    let inv = S::from_f64(1.0 / n);
    let mut total = 0.0;
    let grad = logits
        .iter()
        .zip(targets)
        .map(|(&z, &t)| {
            total += (softplus(z) - t * z).to_f64();
            (sigmoid(z) - t) * inv
        })
        .collect();
    (total / n, grad)
}
