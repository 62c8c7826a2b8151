//! Logistic regression on standardized features, the read-out for the
//! polynomial-coefficient baseline. Full-batch gradient descent from zero
//! weights, so a refit on the same data is bitwise identical.

use dynamics::zoo::DynClass;

use crate::FitError;

#[derive(Debug, Clone, Copy)]
pub struct LinearOpts {
    pub lr: f64,
    pub epochs: usize,
}

impl Default for LinearOpts {
    fn default() -> Self {
        Self { lr: 0.1, epochs: 500 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearClassifier {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Per-feature standardization frozen at fit time.
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl LinearClassifier {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Logit for the periodic class.
    pub fn score(&self, features: &[f64]) -> f64 {
        assert_eq!(features.len(), self.dim(), "feature dimension is fixed at fit time");
        let mut z = self.bias;
        for i in 0..features.len() {
            z += self.weights[i] * (features[i] - self.mean[i]) / self.std[i];
        }
        z
    }
}

pub fn linear_fit(
    features: &[Vec<f64>],
    labels: &[DynClass],
    opts: &LinearOpts,
) -> Result<LinearClassifier, FitError> {
    assert_eq!(features.len(), labels.len());
    assert!(!features.is_empty());
    let n = features.len();
    let d = features[0].len();
    assert!(features.iter().all(|f| f.len() == d));
    if labels.iter().all(|l| *l == labels[0]) {
        return Err(FitError::DegenerateLabels);
    }

    let mut mean = vec![0.0; d];
    for f in features {
        for (m, x) in mean.iter_mut().zip(f) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut std = vec![0.0; d];
    for f in features {
        for (s, (x, m)) in std.iter_mut().zip(f.iter().zip(&mean)) {
            *s += (x - m) * (x - m);
        }
    }
    for s in &mut std {
        // Constant features carry no signal; unit scale keeps them inert.
        *s = (*s / n as f64).sqrt();
        if *s == 0.0 {
            *s = 1.0;
        }
    }

    let standardized: Vec<Vec<f64>> = features
        .iter()
        .map(|f| f.iter().zip(mean.iter().zip(&std)).map(|(x, (m, s))| (x - m) / s).collect())
        .collect();
    let targets: Vec<f64> = labels
        .iter()
        .map(|l| if *l == DynClass::PeriodicAttractor { 1.0 } else { 0.0 })
        .collect();

    let mut weights = vec![0.0; d];
    let mut bias = 0.0;
    for _ in 0..opts.epochs {
        let mut gw = vec![0.0; d];
        let mut gb = 0.0;
        for (x, t) in standardized.iter().zip(&targets) {
            let mut z = bias;
            for i in 0..d {
                z += weights[i] * x[i];
            }
            let err = sigmoid(z) - t;
            for i in 0..d {
                gw[i] += err * x[i];
            }
            gb += err;
        }
        for i in 0..d {
            weights[i] -= opts.lr * gw[i] / n as f64;
        }
        bias -= opts.lr * gb / n as f64;
    }
    Ok(LinearClassifier { weights, bias, mean, std })
}

pub fn linear_predict(model: &LinearClassifier, features: &[f64]) -> DynClass {
    if model.score(features) > 0.0 {
        DynClass::PeriodicAttractor
    } else {
        DynClass::PointAttractor
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
