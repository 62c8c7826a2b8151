//! Self-attention over spatial positions: 1×1 projections, softmax over
//! source positions, residual output gated by a learned scalar initialized
//! at zero. Query/key channels are C/8 and value channels C/2, floored at 1.

use crate::tensor::{gemm_a_bt_acc, gemm_acc, gemm_at_b_acc, Scalar, Tensor};
use crate::ShapeMismatch;

/// Projection weights for one attention block on C-channel features.
#[derive(Debug, Clone, PartialEq)]
pub struct AttnWeights<S> {
    /// (qk, C) where qk = max(C/8, 1).
    pub wq: Tensor<S>,
    pub wk: Tensor<S>,
    /// (vc, C) where vc = max(C/2, 1).
    pub wv: Tensor<S>,
    /// (C, vc), back to the residual width.
    pub wo: Tensor<S>,
    /// Residual gain, shape [1]; zero at init so a fresh block is identity.
    pub gamma: Tensor<S>,
}

pub fn qk_channels(c: usize) -> usize {
    (c / 8).max(1)
}

pub fn v_channels(c: usize) -> usize {
    (c / 2).max(1)
}

/// Forward cache; `weights` holds the row-stochastic attention map (row j =
/// weights over source positions for output position j).
pub struct AttnCache<S> {
    pub f: Vec<S>,
    pub g: Vec<S>,
    pub h: Vec<S>,
    pub weights: Vec<S>,
    pub o_pre: Vec<S>,
    pub o: Vec<S>,
    pub c: usize,
    pub n: usize,
}

/// y = x + γ·Wo·(V · Aᵀ) where A is the row-softmaxed score matrix.
/// `x` is (C, N) with N the flattened spatial size.
pub fn attn_fwd<S: Scalar>(
    x: &Tensor<S>,
    w: &AttnWeights<S>,
) -> Result<(Tensor<S>, AttnCache<S>), ShapeMismatch> {
    let [c, n]: [usize; 2] = x.shape.clone().try_into().map_err(|_| ShapeMismatch {
        context: format!("attention input must be rank 2, got {:?}", x.shape),
    })?;
    let (qk, vc) = (qk_channels(c), v_channels(c));
    if w.wq.shape != [qk, c] || w.wk.shape != [qk, c] || w.wv.shape != [vc, c]
        || w.wo.shape != [c, vc] || w.gamma.shape != [1]
    {
        return Err(ShapeMismatch {
            context: format!("attention weights inconsistent with {c} channels"),
        });
    }

    let mut f = vec![S::ZERO; qk * n];
    let mut g = vec![S::ZERO; qk * n];
    let mut h = vec![S::ZERO; vc * n];
    gemm_acc(qk, c, n, &w.wq.data, &x.data, &mut f);
    gemm_acc(qk, c, n, &w.wk.data, &x.data, &mut g);
    gemm_acc(vc, c, n, &w.wv.data, &x.data, &mut h);

    // Scores transposed up front: row j holds g_j · f_i over sources i, so a
    // plain row softmax yields the row-stochastic map.
    let mut weights = vec![S::ZERO; n * n];
    gemm_at_b_acc(n, qk, n, &g, &f, &mut weights);
    for row in weights.chunks_exact_mut(n) {
        let max = row.iter().fold(S::from_f64(f64::NEG_INFINITY), |m, &v| m.max(v));
        let mut total = S::ZERO;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        for v in row.iter_mut() {
            *v /= total;
        }
    }

    let mut o_pre = vec![S::ZERO; vc * n];
    gemm_a_bt_acc(vc, n, n, &h, &weights, &mut o_pre);
    let mut o = vec![S::ZERO; c * n];
    gemm_acc(c, vc, n, &w.wo.data, &o_pre, &mut o);

    let gamma = w.gamma.data[0];
    let mut y = x.clone();
    for (yv, &ov) in y.data.iter_mut().zip(&o) {
        *yv += gamma * ov;
    }
    y.assert_finite("attn_fwd");
    Ok((y, AttnCache { f, g, h, weights, o_pre, o, c, n }))
}

/// Gradients for input and all five weights.
pub struct AttnGrads<S> {
    pub dx: Tensor<S>,
    pub dwq: Tensor<S>,
    pub dwk: Tensor<S>,
    pub dwv: Tensor<S>,
    pub dwo: Tensor<S>,
    pub dgamma: Tensor<S>,
}

pub fn attn_bwd<S: Scalar>(
    x: &Tensor<S>,
    w: &AttnWeights<S>,
    cache: &AttnCache<S>,
    dy: &Tensor<S>,
) -> AttnGrads<S> {
    let (c, n) = (cache.c, cache.n);
    let (qk, vc) = (qk_channels(c), v_channels(c));
    assert_eq!(dy.numel(), c * n, "attn_bwd grad shape");

    let gamma = w.gamma.data[0];
    let mut dgamma = S::ZERO;
    for (dv, &ov) in dy.data.iter().zip(&cache.o) {
        dgamma += *dv * ov;
    }
    let do_: Vec<S> = dy.data.iter().map(|&d| gamma * d).collect();

    let mut dwo = Tensor::zeros(vec![c, vc]);
    gemm_a_bt_acc(c, n, vc, &do_, &cache.o_pre, &mut dwo.data);
    let mut do_pre = vec![S::ZERO; vc * n];
    gemm_at_b_acc(vc, c, n, &w.wo.data, &do_, &mut do_pre);

    // o_pre = h·Aᵀ: dh = do_pre·A, dA[j,i] = Σ_c do_pre[c,j]·h[c,i].
    let mut dh = vec![S::ZERO; vc * n];
    gemm_acc(vc, n, n, &do_pre, &cache.weights, &mut dh);
    let mut dmap = vec![S::ZERO; n * n];
    gemm_at_b_acc(n, vc, n, &do_pre, &cache.h, &mut dmap);

    // Row-softmax backward on each attention row.
    for (arow, drow) in cache.weights.chunks_exact(n).zip(dmap.chunks_exact_mut(n)) {
        let mut dot = S::ZERO;
        for (&a, &d) in arow.iter().zip(drow.iter()) {
            dot += a * d;
        }
        for (&a, d) in arow.iter().zip(drow.iter_mut()) {
            *d = a * (*d - dot);
        }
    }

    // scores[j,i] = g_j·f_i: df = g·dS, dg = f·dSᵀ.
    let mut df = vec![S::ZERO; qk * n];
    gemm_acc(qk, n, n, &cache.g, &dmap, &mut df);
    let mut dg = vec![S::ZERO; qk * n];
    gemm_a_bt_acc(qk, n, n, &cache.f, &dmap, &mut dg);

    let mut dwq = Tensor::zeros(vec![qk, c]);
    gemm_a_bt_acc(qk, n, c, &df, &x.data, &mut dwq.data);
    let mut dwk = Tensor::zeros(vec![qk, c]);
    gemm_a_bt_acc(qk, n, c, &dg, &x.data, &mut dwk.data);
    let mut dwv = Tensor::zeros(vec![vc, c]);
    gemm_a_bt_acc(vc, n, c, &dh, &x.data, &mut dwv.data);

    let mut dx = dy.clone();
    gemm_at_b_acc(c, qk, n, &w.wq.data, &df, &mut dx.data);
    gemm_at_b_acc(c, qk, n, &w.wk.data, &dg, &mut dx.data);
    gemm_at_b_acc(c, vc, n, &w.wv.data, &dh, &mut dx.data);

    AttnGrads { dx, dwq, dwk, dwv, dwo, dgamma: Tensor::new(vec![1], vec![dgamma]) }
}
