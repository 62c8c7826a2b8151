//! The classifier: four stride-2 conv blocks under spectral normalization,
//! self-attention on the last two feature maps, and a dropout MLP head read
//! out with Monte Carlo averaging.

use crate::attn::{attn_bwd, attn_fwd, qk_channels, v_channels, AttnCache, AttnWeights};
use crate::conv::{conv2d_bwd, conv2d_fwd, conv_out, Col};
use crate::dense::{dropout_bwd, dropout_fwd, leaky_relu, leaky_relu_bwd, linear_bwd, linear_fwd};
use crate::snorm::SpectralState;
use crate::tensor::{sigmoid, Scalar, Tensor};
use crate::{derive_seed, ShapeMismatch};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const STRIDE: usize = 2;
pub const PAD: usize = 1;
/// Power iterations run on every fresh spectral state before first use.
pub const SN_WARMUP: usize = 5;
const BLOCKS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InputMode {
    /// One channel holding the flow angle of each cell.
    Angles,
    /// Two channels holding the raw (u, v) components.
    Vectors,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchConfig {
    pub channels: [usize; 4],
    pub attention: bool,
    pub input_mode: InputMode,
    /// Square input resolution.
    pub input_hw: usize,
    pub hidden: usize,
    pub latent: usize,
    pub dropout: f64,
    pub leaky_slope: f64,
}

impl ArchConfig {
    pub fn desk() -> Self {
        Self {
            channels: [16, 32, 64, 128],
            attention: true,
            input_mode: InputMode::Angles,
            input_hw: 64,
            hidden: 64,
            latent: 10,
            dropout: 0.9,
            leaky_slope: 0.01,
        }
    }

    pub fn paper() -> Self {
        Self { channels: [64, 128, 256, 512], ..Self::desk() }
    }

    pub fn in_channels(&self) -> usize {
        match self.input_mode {
            InputMode::Angles => 1,
            InputMode::Vectors => 2,
        }
    }

    /// Spatial side lengths: input plus each block's output.
    pub fn spatial_sizes(&self) -> [usize; 5] {
        let mut s = [self.input_hw; 5];
        for i in 0..BLOCKS {
            s[i + 1] = conv_out(s[i], STRIDE, PAD);
        }
        s
    }

    pub fn flat_len(&self) -> usize {
        let last = self.spatial_sizes()[BLOCKS];
        self.channels[3] * last * last
    }

    /// Attention sits after the activations of the last two blocks.
    pub fn has_attn(&self, block: usize) -> bool {
        self.attention && block >= 2
    }
}

#[derive(Debug, Clone)]
pub struct ConvBlock<S> {
    pub w: Tensor<S>,
    pub sn: SpectralState<S>,
}

#[derive(Debug, Clone)]
pub struct AttnBlock<S> {
    pub w: AttnWeights<S>,
    /// States for wq, wk, wv, wo in that order.
    pub sn: [SpectralState<S>; 4],
}

#[derive(Debug, Clone)]
pub struct LinearLayer<S> {
    pub w: Tensor<S>,
    pub b: Tensor<S>,
}

#[derive(Debug, Clone)]
pub struct Model<S> {
    pub arch: ArchConfig,
    pub convs: Vec<ConvBlock<S>>,
    pub attns: Vec<Option<AttnBlock<S>>>,
    pub l1: LinearLayer<S>,
    pub l2: LinearLayer<S>,
    pub l3: LinearLayer<S>,
}

/// Weights actually applied in a forward pass: every spectrally normalized
/// tensor divided by its current σ̂ estimate, paired with that σ̂.
pub struct NormalizedWeights<S> {
    pub convs: Vec<(Tensor<S>, S)>,
    pub attns: Vec<Option<(AttnWeights<S>, [S; 4])>>,
}

pub struct Trunk<S> {
    pub cols: Vec<Col<S>>,
    /// Conv outputs before the activation.
    pub pre: Vec<Tensor<S>>,
    /// Flattened (C, N) inputs handed to attention blocks.
    pub attn_in: Vec<Option<Tensor<S>>>,
    pub attn_cache: Vec<Option<AttnCache<S>>>,
    pub flat: Vec<S>,
}

pub struct Head<S> {
    pub h1_pre: Vec<S>,
    /// Dropout mask; None when the pass ran without dropout.
    pub keep: Option<Vec<bool>>,
    pub h1_post: Vec<S>,
    pub h2_pre: Vec<S>,
    pub h2_post: Vec<S>,
    /// [point, cycle]
    pub logits: Vec<S>,
}

pub struct Forward<S> {
    pub trunk: Trunk<S>,
    pub head: Head<S>,
}

/// Averaged prediction for one field. `probs` are the per-class sigmoids of
/// the averaged logits; `label` is 0 for point, 1 for cycle (argmax, ties to
/// point).
#[derive(Debug, Clone, Serialize)]
pub struct ClassProbs {
    pub point_logit: f64,
    pub cycle_logit: f64,
    pub probs: [f64; 2],
    pub label: usize,
}

fn kaiming<S: Scalar, R: Rng>(shape: Vec<usize>, fan_in: usize, rng: &mut R) -> Tensor<S> {
    let bound = 1.0 / (fan_in as f64).sqrt();
    let n: usize = shape.iter().product();
    // Drawn in f64 and cast so f32 and f64 models share init bits.
    let data = (0..n).map(|_| S::from_f64(rng.gen_range(-bound..bound))).collect();
    Tensor::new(shape, data)
}

fn fresh_sn<S: Scalar, R: Rng>(w: &Tensor<S>, rows: usize, cols: usize, rng: &mut R) -> SpectralState<S> {
    let mut sn = SpectralState::init(rows, cols, rng);
    for _ in 0..SN_WARMUP {
        sn.iterate(w);
    }
    sn
}

impl<S: Scalar> Model<S> {
    /// Builds and initializes a model; the same seed yields bitwise-identical
    /// parameters.
    pub fn init(arch: ArchConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut convs = Vec::with_capacity(BLOCKS);
        let mut attns = Vec::with_capacity(BLOCKS);
        let mut c_in = arch.in_channels();
        for (i, &c_out) in arch.channels.iter().enumerate() {
            let w = kaiming(vec![c_out, c_in, 3, 3], c_in * 9, &mut rng);
            let sn = fresh_sn(&w, c_out, c_in * 9, &mut rng);
            convs.push(ConvBlock { w, sn });
            attns.push(arch.has_attn(i).then(|| {
                let (qk, vc) = (qk_channels(c_out), v_channels(c_out));
                let wq = kaiming(vec![qk, c_out], c_out, &mut rng);
                let sq = fresh_sn(&wq, qk, c_out, &mut rng);
                let wk = kaiming(vec![qk, c_out], c_out, &mut rng);
                let sk = fresh_sn(&wk, qk, c_out, &mut rng);
                let wv = kaiming(vec![vc, c_out], c_out, &mut rng);
                let sv = fresh_sn(&wv, vc, c_out, &mut rng);
                let wo = kaiming(vec![c_out, vc], vc, &mut rng);
                let so = fresh_sn(&wo, c_out, vc, &mut rng);
                AttnBlock {
                    w: AttnWeights { wq, wk, wv, wo, gamma: Tensor::zeros(vec![1]) },
                    sn: [sq, sk, sv, so],
                }
            }));
            c_in = c_out;
        }
        // Linear biases share the weight's fan-in bound; a nonzero bias keeps
        // rectifier units trainable even when the trunk output is small.
        let flat = arch.flat_len();
        let l1 = LinearLayer {
            w: kaiming(vec![arch.hidden, flat], flat, &mut rng),
            b: kaiming(vec![arch.hidden], flat, &mut rng),
        };
        let l2 = LinearLayer {
            w: kaiming(vec![arch.latent, arch.hidden], arch.hidden, &mut rng),
            b: kaiming(vec![arch.latent], arch.hidden, &mut rng),
        };
        let l3 = LinearLayer {
            w: kaiming(vec![2, arch.latent], arch.latent, &mut rng),
            b: kaiming(vec![2], arch.latent, &mut rng),
        };
        Model { arch, convs, attns, l1, l2, l3 }
    }

    /// One power-iteration update on every spectral state; the training loop
    /// calls this once per batch before computing gradients.
    pub fn sn_iterate(&mut self) {
        for blk in &mut self.convs {
            blk.sn.iterate(&blk.w);
        }
        for attn in self.attns.iter_mut().flatten() {
            let ws = [&attn.w.wq, &attn.w.wk, &attn.w.wv, &attn.w.wo];
            for (sn, w) in attn.sn.iter_mut().zip(ws) {
                sn.iterate(w);
            }
        }
    }

    pub fn normalized_weights(&self) -> NormalizedWeights<S> {
        let convs = self.convs.iter().map(|b| b.sn.normalized(&b.w)).collect();
        let attns = self
            .attns
            .iter()
            .map(|a| {
                a.as_ref().map(|attn| {
                    let (wq, s0) = attn.sn[0].normalized(&attn.w.wq);
                    let (wk, s1) = attn.sn[1].normalized(&attn.w.wk);
                    let (wv, s2) = attn.sn[2].normalized(&attn.w.wv);
                    let (wo, s3) = attn.sn[3].normalized(&attn.w.wo);
                    (AttnWeights { wq, wk, wv, wo, gamma: attn.w.gamma.clone() }, [s0, s1, s2, s3])
                })
            })
            .collect();
        NormalizedWeights { convs, attns }
    }

    pub fn trunk(
        &self,
        nw: &NormalizedWeights<S>,
        input: &Tensor<S>,
    ) -> Result<Trunk<S>, ShapeMismatch> {
        let want = vec![self.arch.in_channels(), self.arch.input_hw, self.arch.input_hw];
        if input.shape != want {
            return Err(ShapeMismatch {
                context: format!("model expects input {:?}, got {:?}", want, input.shape),
            });
        }
        let slope = S::from_f64(self.arch.leaky_slope);
        let spatial = self.arch.spatial_sizes();
        let mut cols = Vec::with_capacity(BLOCKS);
        let mut pre = Vec::with_capacity(BLOCKS);
        let mut attn_in = Vec::with_capacity(BLOCKS);
        let mut attn_cache = Vec::with_capacity(BLOCKS);
        let mut x = input.clone();
        for i in 0..BLOCKS {
            let (out, col) = conv2d_fwd(&x, &nw.convs[i].0, STRIDE, PAD)?;
            cols.push(col);
            pre.push(out.clone());
            let mut act = out;
            leaky_relu(&mut act.data, slope);
            if let Some((wa, _)) = &nw.attns[i] {
                let c = self.arch.channels[i];
                let s = spatial[i + 1];
                let flat_in = Tensor::new(vec![c, s * s], act.data);
                let (y, cache) = attn_fwd(&flat_in, wa)?;
                attn_in.push(Some(flat_in));
                attn_cache.push(Some(cache));
                x = Tensor::new(vec![c, s, s], y.data);
            } else {
                attn_in.push(None);
                attn_cache.push(None);
                x = act;
            }
        }
        debug_assert_eq!(x.numel(), self.arch.flat_len());
        Ok(Trunk { cols, pre, attn_in, attn_cache, flat: x.data })
    }

    /// MLP head; dropout runs only when a mask rng is supplied and the
    /// configured rate is nonzero.
    pub fn head(&self, flat: &[S], dropout_rng: Option<&mut ChaCha8Rng>) -> Head<S> {
        let h1_pre = linear_fwd(flat, &self.l1.w, &self.l1.b.data);
        let mut a = h1_pre.clone();
        leaky_relu(&mut a, S::ZERO);
        let (h1_post, keep) = match dropout_rng {
            Some(rng) if self.arch.dropout > 0.0 => {
                let (d, k) = dropout_fwd(&a, self.arch.dropout, rng);
                (d, Some(k))
            }
            _ => (a, None),
        };
        let h2_pre = linear_fwd(&h1_post, &self.l2.w, &self.l2.b.data);
        let mut h2_post = h2_pre.clone();
        leaky_relu(&mut h2_post, S::ZERO);
        let logits = linear_fwd(&h2_post, &self.l3.w, &self.l3.b.data);
        Head { h1_pre, keep, h1_post, h2_pre, h2_post, logits }
    }

    pub fn forward(
        &self,
        nw: &NormalizedWeights<S>,
        input: &Tensor<S>,
        dropout_rng: Option<&mut ChaCha8Rng>,
    ) -> Result<Forward<S>, ShapeMismatch> {
        let trunk = self.trunk(nw, input)?;
        let head = self.head(&trunk.flat, dropout_rng);
        Ok(Forward { trunk, head })
    }

    /// Gradients for every trainable tensor, in `trainable_names` order.
    pub fn backward(
        &self,
        nw: &NormalizedWeights<S>,
        fwd: &Forward<S>,
        dlogits: &[S],
    ) -> Vec<Tensor<S>> {
        let head = &fwd.head;
        let mut g_l3w = Tensor::zeros(self.l3.w.shape.clone());
        let mut g_l3b = Tensor::zeros(self.l3.b.shape.clone());
        let dh2_post = linear_bwd(&head.h2_post, &self.l3.w, dlogits, &mut g_l3w, &mut g_l3b.data);
        let dh2_pre = leaky_relu_bwd(&head.h2_pre, &dh2_post, S::ZERO);

        let mut g_l2w = Tensor::zeros(self.l2.w.shape.clone());
        let mut g_l2b = Tensor::zeros(self.l2.b.shape.clone());
        let dh1_post = linear_bwd(&head.h1_post, &self.l2.w, &dh2_pre, &mut g_l2w, &mut g_l2b.data);
        let da = match &head.keep {
            Some(keep) => dropout_bwd(&dh1_post, keep, self.arch.dropout),
            None => dh1_post,
        };
        let dh1_pre = leaky_relu_bwd(&head.h1_pre, &da, S::ZERO);

        let mut g_l1w = Tensor::zeros(self.l1.w.shape.clone());
        let mut g_l1b = Tensor::zeros(self.l1.b.shape.clone());
        let dflat = linear_bwd(&fwd.trunk.flat, &self.l1.w, &dh1_pre, &mut g_l1w, &mut g_l1b.data);

        let slope = S::from_f64(self.arch.leaky_slope);
        let spatial = self.arch.spatial_sizes();
        let last = spatial[BLOCKS];
        let mut dt = Tensor::new(vec![self.arch.channels[3], last, last], dflat);
        let mut conv_g: Vec<Option<Tensor<S>>> = (0..BLOCKS).map(|_| None).collect();
        let mut attn_g: Vec<Option<[Tensor<S>; 5]>> = (0..BLOCKS).map(|_| None).collect();
        for i in (0..BLOCKS).rev() {
            if let (Some(ab), Some((wa, sig)), Some(cache), Some(xin)) = (
                &self.attns[i],
                &nw.attns[i],
                &fwd.trunk.attn_cache[i],
                &fwd.trunk.attn_in[i],
            ) {
                let c = self.arch.channels[i];
                let s = spatial[i + 1];
                let dy = Tensor::new(vec![c, s * s], dt.data);
                let ag = attn_bwd(xin, wa, cache, &dy);
                let through = |j: usize, g: &Tensor<S>, wbar: &Tensor<S>| {
                    ab.sn[j].grad_through(g, wbar, sig[j])
                };
                attn_g[i] = Some([
                    through(0, &ag.dwq, &wa.wq),
                    through(1, &ag.dwk, &wa.wk),
                    through(2, &ag.dwv, &wa.wv),
                    through(3, &ag.dwo, &wa.wo),
                    ag.dgamma,
                ]);
                dt = Tensor::new(vec![c, s, s], ag.dx.data);
            }
            let dpre = leaky_relu_bwd(&fwd.trunk.pre[i].data, &dt.data, slope);
            let dpre_t = Tensor::new(fwd.trunk.pre[i].shape.clone(), dpre);
            let (dinput, dwbar) = conv2d_bwd(&fwd.trunk.cols[i], &nw.convs[i].0, &dpre_t);
            conv_g[i] =
                Some(self.convs[i].sn.grad_through(&dwbar, &nw.convs[i].0, nw.convs[i].1));
            dt = dinput;
        }

        let mut out = Vec::new();
        for i in 0..BLOCKS {
            out.push(conv_g[i].take().expect("conv gradient"));
            if let Some(gs) = attn_g[i].take() {
                out.extend(gs);
            }
        }
        out.extend([g_l1w, g_l1b, g_l2w, g_l2b, g_l3w, g_l3b]);
        out
    }

    /// Averaged MC-dropout prediction. Pass i draws its mask from
    /// derive_seed(seed, i); logits accumulate in f64 in pass order, so the
    /// result is bitwise reproducible. mc = 0 runs a single dropless pass.
    pub fn predict(
        &self,
        input: &Tensor<S>,
        mc: usize,
        seed: u64,
    ) -> Result<ClassProbs, ShapeMismatch> {
        let nw = self.normalized_weights();
        self.predict_with(&nw, input, mc, seed)
    }

    pub fn predict_with(
        &self,
        nw: &NormalizedWeights<S>,
        input: &Tensor<S>,
        mc: usize,
        seed: u64,
    ) -> Result<ClassProbs, ShapeMismatch> {
        let trunk = self.trunk(nw, input)?;
        let mut acc = [0.0f64; 2];
        if mc == 0 {
            let h = self.head(&trunk.flat, None);
            acc = [h.logits[0].to_f64(), h.logits[1].to_f64()];
        } else {
            for i in 0..mc {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64));
                let h = self.head(&trunk.flat, Some(&mut rng));
                acc[0] += h.logits[0].to_f64();
                acc[1] += h.logits[1].to_f64();
            }
            acc[0] /= mc as f64;
            acc[1] /= mc as f64;
        }
        Ok(ClassProbs {
            point_logit: acc[0],
            cycle_logit: acc[1],
            probs: [sigmoid(acc[0]), sigmoid(acc[1])],
            label: usize::from(acc[1] > acc[0]),
        })
    }

    pub fn trainables(&self) -> Vec<&Tensor<S>> {
        let mut out = Vec::new();
        for (c, a) in self.convs.iter().zip(&self.attns) {
            out.push(&c.w);
            if let Some(ab) = a {
                out.extend([&ab.w.wq, &ab.w.wk, &ab.w.wv, &ab.w.wo, &ab.w.gamma]);
            }
        }
        for l in [&self.l1, &self.l2, &self.l3] {
            out.push(&l.w);
            out.push(&l.b);
        }
        out
    }

    pub fn trainables_mut(&mut self) -> Vec<&mut Tensor<S>> {
        let mut out = Vec::new();
        for (c, a) in self.convs.iter_mut().zip(self.attns.iter_mut()) {
            out.push(&mut c.w);
            if let Some(ab) = a {
                out.extend([
                    &mut ab.w.wq,
                    &mut ab.w.wk,
                    &mut ab.w.wv,
                    &mut ab.w.wo,
                    &mut ab.w.gamma,
                ]);
            }
        }
        for l in [&mut self.l1, &mut self.l2, &mut self.l3] {
            out.push(&mut l.w);
            out.push(&mut l.b);
        }
        out
    }

    pub fn trainable_names(arch: &ArchConfig) -> Vec<String> {
        let mut out = Vec::new();
        for i in 0..BLOCKS {
            out.push(format!("conv{}.w", i + 1));
            if arch.has_attn(i) {
                for part in ["wq", "wk", "wv", "wo", "gamma"] {
                    out.push(format!("attn{}.{part}", i + 1));
                }
            }
        }
        for l in 1..=3 {
            out.push(format!("mlp{l}.w"));
            out.push(format!("mlp{l}.b"));
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.trainables().iter().map(|t| t.numel()).sum()
    }

    /// Everything a checkpoint persists, in order: each weight followed by
    /// its spectral state (u, then v) when it has one, gains and biases bare.
    pub fn entries(&self) -> Vec<(String, Vec<usize>, &[S])> {
        let mut out: Vec<(String, Vec<usize>, &[S])> = Vec::new();
        for (i, (c, a)) in self.convs.iter().zip(&self.attns).enumerate() {
            let base = format!("conv{}", i + 1);
            out.push((format!("{base}.w"), c.w.shape.clone(), &c.w.data));
            out.push((format!("{base}.u"), vec![c.sn.u.len()], &c.sn.u));
            out.push((format!("{base}.v"), vec![c.sn.v.len()], &c.sn.v));
            if let Some(ab) = a {
                let ws = [("wq", &ab.w.wq), ("wk", &ab.w.wk), ("wv", &ab.w.wv), ("wo", &ab.w.wo)];
                for ((name, w), sn) in ws.into_iter().zip(&ab.sn) {
                    out.push((format!("attn{}.{name}", i + 1), w.shape.clone(), &w.data));
                    out.push((format!("attn{}.{name}.u", i + 1), vec![sn.u.len()], &sn.u));
                    out.push((format!("attn{}.{name}.v", i + 1), vec![sn.v.len()], &sn.v));
                }
                out.push((
                    format!("attn{}.gamma", i + 1),
                    ab.w.gamma.shape.clone(),
                    &ab.w.gamma.data,
                ));
            }
        }
        for (l, layer) in [(1, &self.l1), (2, &self.l2), (3, &self.l3)] {
            out.push((format!("mlp{l}.w"), layer.w.shape.clone(), &layer.w.data));
            out.push((format!("mlp{l}.b"), layer.b.shape.clone(), &layer.b.data));
        }
        out
    }

    pub fn entries_mut(&mut self) -> Vec<(String, Vec<usize>, &mut [S])> {
        let mut out: Vec<(String, Vec<usize>, &mut [S])> = Vec::new();
        for (i, (c, a)) in self.convs.iter_mut().zip(self.attns.iter_mut()).enumerate() {
            let base = format!("conv{}", i + 1);
            out.push((format!("{base}.w"), c.w.shape.clone(), &mut c.w.data));
            out.push((format!("{base}.u"), vec![c.sn.u.len()], &mut c.sn.u));
            out.push((format!("{base}.v"), vec![c.sn.v.len()], &mut c.sn.v));
            if let Some(ab) = a {
                let ws = [
                    ("wq", &mut ab.w.wq),
                    ("wk", &mut ab.w.wk),
                    ("wv", &mut ab.w.wv),
                    ("wo", &mut ab.w.wo),
                ];
                for ((name, w), sn) in ws.into_iter().zip(ab.sn.iter_mut()) {
                    out.push((format!("attn{}.{name}", i + 1), w.shape.clone(), &mut w.data));
                    out.push((format!("attn{}.{name}.u", i + 1), vec![sn.u.len()], &mut sn.u));
                    out.push((format!("attn{}.{name}.v", i + 1), vec![sn.v.len()], &mut sn.v));
                }
                out.push((
                    format!("attn{}.gamma", i + 1),
                    ab.w.gamma.shape.clone(),
                    &mut ab.w.gamma.data,
                ));
            }
        }
        for (l, layer) in [(1, &mut self.l1), (2, &mut self.l2), (3, &mut self.l3)] {
            out.push((format!("mlp{l}.w"), layer.w.shape.clone(), &mut layer.w.data));
            out.push((format!("mlp{l}.b"), layer.b.shape.clone(), &mut layer.b.data));
        }
        out
    }
}
