//! Accuracy, dispersion, rank correlation, and monotone smoothing.

use dynamics::zoo::DynClass;

/// Binary confusion counts; periodic is the positive class.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct Confusion {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn tally(preds: &[DynClass], truths: &[DynClass]) -> Confusion {
        assert_eq!(preds.len(), truths.len());
        let mut c = Confusion::default();
        for (&p, &t) in preds.iter().zip(truths) {
            match (p, t) {
                (DynClass::PeriodicAttractor, DynClass::PeriodicAttractor) => c.tp += 1,
                (DynClass::PointAttractor, DynClass::PointAttractor) => c.tn += 1,
                (DynClass::PeriodicAttractor, DynClass::PointAttractor) => c.fp += 1,
                (DynClass::PointAttractor, DynClass::PeriodicAttractor) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        assert!(self.total() > 0, "accuracy of an empty tally");
        (self.tp + self.tn) as f64 / self.total() as f64
    }
}

pub fn accuracy(preds: &[DynClass], truths: &[DynClass]) -> f64 {
    Confusion::tally(preds, truths).accuracy()
}

/// Mean and sample standard deviation (n−1); std is 0 for a single value.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    assert!(!xs.is_empty());
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Fractional ranks (1-based) with ties sharing the average rank.
fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).expect("finite values"));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = shared;
        }
        i = j + 1;
    }
    ranks
}

pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    if x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Spearman rank correlation with average ranks on ties; `None` when either
/// side is constant (the correlation is undefined).
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    if x.len() < 2 {
        return None;
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Best non-increasing fit under squared loss (pool adjacent violators).
pub fn isotonic_decreasing(xs: &[f64]) -> Vec<f64> {
    // PAV on the reversed sequence yields the non-decreasing fit, which
    // reverses back to the non-increasing one.
    let mut blocks: Vec<(f64, f64)> = Vec::with_capacity(xs.len());
    for &x in xs.iter().rev() {
        blocks.push((x, 1.0));
        while blocks.len() >= 2 {
            let (m2, w2) = blocks[blocks.len() - 1];
            let (m1, w1) = blocks[blocks.len() - 2];
            if m1 <= m2 {
                break;
            }
            blocks.truncate(blocks.len() - 2);
            blocks.push(((m1 * w1 + m2 * w2) / (w1 + w2), w1 + w2));
        }
    }
    let mut fit: Vec<f64> =
        blocks.iter().flat_map(|&(m, w)| std::iter::repeat(m).take(w as usize)).collect();
    fit.reverse();
    fit
}
