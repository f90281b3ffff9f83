//! A small decoder-only transformer with hand-written backpropagation.
//!
//! Pre-norm blocks: `x += Attn(LN1(x))`, `x += MLP(LN2(x))`, then a final
//! layer norm and an output projection (optionally tied to the token
//! embedding). Attention is causal multi-head; the MLP uses the tanh GELU.
//! All parameters live in one flat buffer, tensor by tensor in declaration
//! order, which is also the checkpoint order.

use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sentgraph_core::vocab::PAD;

use crate::lm::{DecodeSession, LanguageModel};

/// Floating-point type the model runs in: `f64` for gradient checks, `f32`
/// for training and sampling.
pub trait Real:
    Float + FromPrimitive + AddAssign + SubAssign + MulAssign + DivAssign + Sum + Default + Debug + Send + Sync + 'static
{
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite constant")
    }
}

impl Real for f32 {}
impl Real for f64 {}

const LN_EPS: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransformerConfig {
    pub vocab_size: usize,
    pub context: usize,
    pub width: usize,
    pub layers: usize,
    pub heads: usize,
    /// Hidden width of the MLP is `mlp_ratio * width`.
    pub mlp_ratio: usize,
    pub tied: bool,
}

impl TransformerConfig {
    pub fn new(vocab_size: usize) -> Self {
        TransformerConfig {
            vocab_size,
            context: 512,
            width: 128,
            layers: 2,
            heads: 4,
            mlp_ratio: 4,
            tied: false,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.vocab_size == 0 || self.context == 0 || self.width == 0 || self.heads == 0 || self.mlp_ratio == 0 {
            return Err("transformer dimensions must be positive".into());
        }
        if self.width % self.heads != 0 {
            return Err(format!("width {} is not divisible by {} heads", self.width, self.heads));
        }
        Ok(())
    }

    fn hidden(&self) -> usize {
        self.mlp_ratio * self.width
    }
}

/// A named parameter tensor inside the flat buffer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TensorInfo {
    pub name: String,
    pub offset: usize,
    pub shape: Vec<usize>,
    /// Receives weight decay (matrices and embeddings).
    pub decay: bool,
}

impl TensorInfo {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct LayerOffsets {
    ln1_g: usize,
    ln1_b: usize,
    qkv_w: usize,
    qkv_b: usize,
    proj_w: usize,
    proj_b: usize,
    ln2_g: usize,
    ln2_b: usize,
    fc_w: usize,
    fc_b: usize,
    out_w: usize,
    out_b: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Layout {
    wte: usize,
    wpe: usize,
    layers: Vec<LayerOffsets>,
    lnf_g: usize,
    lnf_b: usize,
    head: Option<usize>,
    tensors: Vec<TensorInfo>,
    total: usize,
}

impl Layout {
    fn new(cfg: &TransformerConfig) -> Layout {
        let (v, t, c, h) = (cfg.vocab_size, cfg.context, cfg.width, cfg.hidden());
        let mut tensors = Vec::new();
        let mut total = 0;
        let mut add = |name: String, shape: Vec<usize>, decay: bool| {
            let offset = total;
            total += shape.iter().product::<usize>();
            tensors.push(TensorInfo { name, offset, shape, decay });
            offset
        };
        let wte = add("wte".into(), vec![v, c], true);
        let wpe = add("wpe".into(), vec![t, c], true);
        let mut layers = Vec::new();
        for l in 0..cfg.layers {
            let p = |s: &str| format!("h{l}.{s}");
            layers.push(LayerOffsets {
                ln1_g: add(p("ln1.g"), vec![c], false),
                ln1_b: add(p("ln1.b"), vec![c], false),
                qkv_w: add(p("attn.qkv.w"), vec![c, 3 * c], true),
                qkv_b: add(p("attn.qkv.b"), vec![3 * c], false),
                proj_w: add(p("attn.proj.w"), vec![c, c], true),
                proj_b: add(p("attn.proj.b"), vec![c], false),
                ln2_g: add(p("ln2.g"), vec![c], false),
                ln2_b: add(p("ln2.b"), vec![c], false),
                fc_w: add(p("mlp.fc.w"), vec![c, h], true),
                fc_b: add(p("mlp.fc.b"), vec![h], false),
                out_w: add(p("mlp.proj.w"), vec![h, c], true),
                out_b: add(p("mlp.proj.b"), vec![c], false),
            });
        }
        let lnf_g = add("lnf.g".into(), vec![c], false);
        let lnf_b = add("lnf.b".into(), vec![c], false);
        let head = (!cfg.tied).then(|| add("lm_head".into(), vec![c, v], true));
        Layout { wte, wpe, layers, lnf_g, lnf_b, head, tensors, total }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TinyTransformer<T: Real> {
    pub config: TransformerConfig,
    layout: Layout,
    pub params: Vec<T>,
}

/// Loss and gradient of one sequence (gradient of the summed NLL).
pub struct SeqGrad<T> {
    pub loss_sum: f64,
    pub count: usize,
    pub grad: Vec<T>,
}

impl<T: Real> TinyTransformer<T> {
    /// GPT-2 style initialization: N(0, 0.02) weights, residual output
    /// projections scaled by `1/sqrt(2 * layers)`, unit norms, zero biases.
    pub fn init(config: TransformerConfig, rng: &mut ChaCha8Rng) -> Result<Self, String> {
        config.validate()?;
        let layout = Layout::new(&config);
        let mut params = vec![T::zero(); layout.total];
        let base = Normal::new(0.0, 0.02).expect("valid std");
        let resid = Normal::new(0.0, 0.02 / (2.0 * config.layers.max(1) as f64).sqrt()).expect("valid std");
        for t in &layout.tensors {
            let slice = &mut params[t.range()];
            if t.name.ends_with(".g") {
                slice.iter_mut().for_each(|x| *x = T::one());
            } else if t.decay {
                let dist = if t.name.ends_with("proj.w") { &resid } else { &base };
                slice.iter_mut().for_each(|x| *x = T::of(dist.sample(rng)));
            }
        }
        Ok(TinyTransformer { config, layout, params })
    }

    pub fn from_params(config: TransformerConfig, params: Vec<T>) -> Result<Self, String> {
        config.validate()?;
        let layout = Layout::new(&config);
        if params.len() != layout.total {
            return Err(format!("expected {} parameters, got {}", layout.total, params.len()));
        }
        Ok(TinyTransformer { config, layout, params })
    }

    pub fn tensors(&self) -> &[TensorInfo] {
        &self.layout.tensors
    }

    pub fn param_count(&self) -> usize {
        self.layout.total
    }

    /// Same weights in another precision.
    pub fn cast<U: Real>(&self) -> TinyTransformer<U> {
        TinyTransformer {
            config: self.config,
            layout: self.layout.clone(),
            params: self.params.iter().map(|x| U::of(x.to_f64().unwrap())).collect(),
        }
    }

    fn head_matrix(&self) -> (&[T], bool) {
        match self.layout.head {
            Some(h) => (&self.params[h..h + self.config.width * self.config.vocab_size], false),
            None => (&self.params[self.layout.wte..self.layout.wte + self.config.vocab_size * self.config.width], true),
        }
    }

    /// Logits for every position of `tokens` (at most `context` long), row
    /// `t` predicting token `t + 1`.
    pub fn forward_logits(&self, tokens: &[u32]) -> Vec<T> {
        self.forward(tokens, None).logits
    }

    fn forward(&self, tokens: &[u32], mut dropout: Option<Dropout<'_>>) -> Cache<T> {
        let cfg = &self.config;
        let (n, c, hid, v) = (tokens.len(), cfg.width, cfg.hidden(), cfg.vocab_size);
        assert!(n <= cfg.context, "sequence longer than the context window");
        let p = &self.params;
        let mut x = vec![T::zero(); n * c];
        for (t, &tok) in tokens.iter().enumerate() {
            let e = &p[self.layout.wte + tok as usize * c..][..c];
            let pe = &p[self.layout.wpe + t * c..][..c];
            for j in 0..c {
                x[t * c + j] = e[j] + pe[j];
            }
        }
        let mut layers = Vec::with_capacity(cfg.layers);
        for lo in &self.layout.layers {
            let (h1, ln1) = layer_norm(&x, &p[lo.ln1_g..][..c], &p[lo.ln1_b..][..c], n, c);
            let mut qkv = vec![T::zero(); n * 3 * c];
            matmul(&mut qkv, &h1, &p[lo.qkv_w..][..c * 3 * c], Some(&p[lo.qkv_b..][..3 * c]), n, c, 3 * c);
            let (y, att) = attention(&qkv, n, c, cfg.heads);
            let mut a = vec![T::zero(); n * c];
            matmul(&mut a, &y, &p[lo.proj_w..][..c * c], Some(&p[lo.proj_b..][..c]), n, c, c);
            let mask1 = dropout.as_mut().and_then(|d| d.mask(n * c));
            if let Some(m) = &mask1 {
                a.iter_mut().zip(m).for_each(|(a, &m)| *a *= m);
            }
            x.iter_mut().zip(&a).for_each(|(x, &a)| *x += a);
            let (h2, ln2) = layer_norm(&x, &p[lo.ln2_g..][..c], &p[lo.ln2_b..][..c], n, c);
            let mut u = vec![T::zero(); n * hid];
            matmul(&mut u, &h2, &p[lo.fc_w..][..c * hid], Some(&p[lo.fc_b..][..hid]), n, c, hid);
            let f: Vec<T> = u.iter().map(|&z| gelu(z)).collect();
            let mut z = vec![T::zero(); n * c];
            matmul(&mut z, &f, &p[lo.out_w..][..hid * c], Some(&p[lo.out_b..][..c]), n, hid, c);
            let mask2 = dropout.as_mut().and_then(|d| d.mask(n * c));
            if let Some(m) = &mask2 {
                z.iter_mut().zip(m).for_each(|(z, &m)| *z *= m);
            }
            x.iter_mut().zip(&z).for_each(|(x, &z)| *x += z);
            layers.push(LayerCache { ln1, h1, qkv, att, y, mask1, ln2, h2, u, f, mask2 });
        }
        let (hf, lnf) = layer_norm(&x, &p[self.layout.lnf_g..][..c], &p[self.layout.lnf_b..][..c], n, c);
        let mut logits = vec![T::zero(); n * v];
        let (w, tied) = self.head_matrix();
        if tied {
            matmul_bt(&mut logits, &hf, w, n, c, v);
        } else {
            matmul(&mut logits, &hf, w, None, n, c, v);
        }
        Cache { layers, lnf, hf, logits }
    }

    /// Summed NLL of `tokens[1..]` given their prefixes, and its gradient.
    /// PAD targets are skipped.
    pub fn sequence_grad(&self, tokens: &[u32], dropout: Option<Dropout<'_>>) -> SeqGrad<T> {
        let cfg = &self.config;
        let n = tokens.len().saturating_sub(1).min(cfg.context);
        let mut grad = vec![T::zero(); self.layout.total];
        if n == 0 {
            return SeqGrad { loss_sum: 0.0, count: 0, grad };
        }
        let inputs = &tokens[..n];
        let targets = &tokens[1..=n];
        let cache = self.forward(inputs, dropout);
        let (c, hid, v) = (cfg.width, cfg.hidden(), cfg.vocab_size);
        let p = &self.params;

        let mut loss_sum = 0.0;
        let mut count = 0;
        let mut dlogits = vec![T::zero(); n * v];
        for t in 0..n {
            if targets[t] == PAD {
                continue;
            }
            let row = &cache.logits[t * v..][..v];
            let probs = softmax_row(row);
            let target = targets[t] as usize;
            loss_sum += nll(row, target);
            count += 1;
            let d = &mut dlogits[t * v..][..v];
            d.copy_from_slice(&probs);
            d[target] -= T::one();
        }

        let mut dhf = vec![T::zero(); n * c];
        match self.layout.head {
            Some(h) => {
                let w = &p[h..][..c * v];
                matmul_back_input(&mut dhf, &dlogits, w, n, c, v);
                matmul_back_weight(&mut grad[h..][..c * v], &cache.hf, &dlogits, n, c, v);
            }
            None => {
                let w = &p[self.layout.wte..][..v * c];
                // logits = hf · wteᵀ
                matmul(&mut dhf, &dlogits, w, None, n, v, c);
                matmul_back_weight(&mut grad[self.layout.wte..][..v * c], &dlogits, &cache.hf, n, v, c);
            }
        }
        let mut dx = vec![T::zero(); n * c];
        {
            let (gg, gb) = split_pair(&mut grad, self.layout.lnf_g, self.layout.lnf_b, c);
            layer_norm_back(&mut dx, &dhf, &cache.lnf, &p[self.layout.lnf_g..][..c], gg, gb, n, c);
        }

        for (lo, lc) in self.layout.layers.iter().zip(&cache.layers).rev() {
            // MLP branch.
            let mut dz = dx.clone();
            if let Some(m) = &lc.mask2 {
                dz.iter_mut().zip(m).for_each(|(d, &m)| *d *= m);
            }
            bias_back(&mut grad[lo.out_b..][..c], &dz, n, c);
            matmul_back_weight(&mut grad[lo.out_w..][..hid * c], &lc.f, &dz, n, hid, c);
            let mut df = vec![T::zero(); n * hid];
            matmul_back_input(&mut df, &dz, &p[lo.out_w..][..hid * c], n, hid, c);
            let du: Vec<T> = df.iter().zip(&lc.u).map(|(&d, &u)| d * gelu_grad(u)).collect();
            bias_back(&mut grad[lo.fc_b..][..hid], &du, n, hid);
            matmul_back_weight(&mut grad[lo.fc_w..][..c * hid], &lc.h2, &du, n, c, hid);
            let mut dh2 = vec![T::zero(); n * c];
            matmul_back_input(&mut dh2, &du, &p[lo.fc_w..][..c * hid], n, c, hid);
            {
                let (gg, gb) = split_pair(&mut grad, lo.ln2_g, lo.ln2_b, c);
                layer_norm_back(&mut dx, &dh2, &lc.ln2, &p[lo.ln2_g..][..c], gg, gb, n, c);
            }

            // Attention branch.
            let mut da = dx.clone();
            if let Some(m) = &lc.mask1 {
                da.iter_mut().zip(m).for_each(|(d, &m)| *d *= m);
            }
            bias_back(&mut grad[lo.proj_b..][..c], &da, n, c);
            matmul_back_weight(&mut grad[lo.proj_w..][..c * c], &lc.y, &da, n, c, c);
            let mut dy = vec![T::zero(); n * c];
            matmul_back_input(&mut dy, &da, &p[lo.proj_w..][..c * c], n, c, c);
            let dqkv = attention_back(&dy, &lc.qkv, &lc.att, n, c, cfg.heads);
            bias_back(&mut grad[lo.qkv_b..][..3 * c], &dqkv, n, 3 * c);
            matmul_back_weight(&mut grad[lo.qkv_w..][..c * 3 * c], &lc.h1, &dqkv, n, c, 3 * c);
            let mut dh1 = vec![T::zero(); n * c];
            matmul_back_input(&mut dh1, &dqkv, &p[lo.qkv_w..][..c * 3 * c], n, c, 3 * c);
            {
                let (gg, gb) = split_pair(&mut grad, lo.ln1_g, lo.ln1_b, c);
                layer_norm_back(&mut dx, &dh1, &lc.ln1, &p[lo.ln1_g..][..c], gg, gb, n, c);
            }
        }

        for (t, &tok) in inputs.iter().enumerate() {
            let row = &dx[t * c..][..c];
            let e = &mut grad[self.layout.wte + tok as usize * c..][..c];
            e.iter_mut().zip(row).for_each(|(g, &d)| *g += d);
            let pe = &mut grad[self.layout.wpe + t * c..][..c];
            pe.iter_mut().zip(row).for_each(|(g, &d)| *g += d);
        }
        SeqGrad { loss_sum, count, grad }
    }

    /// Summed NLL of `tokens[1..]` without gradients.
    pub fn sequence_loss(&self, tokens: &[u32]) -> (f64, usize) {
        let n = tokens.len().saturating_sub(1).min(self.config.context);
        if n == 0 {
            return (0.0, 0);
        }
        let v = self.config.vocab_size;
        let logits = self.forward_logits(&tokens[..n]);
        let mut loss = 0.0;
        let mut count = 0;
        for t in 0..n {
            let target = tokens[t + 1];
            if target == PAD {
                continue;
            }
            loss += nll(&logits[t * v..][..v], target as usize);
            count += 1;
        }
        (loss, count)
    }
}

/// Two disjoint `len`-long mutable windows of `buf`; `a < b`.
fn split_pair<T>(buf: &mut [T], a: usize, b: usize, len: usize) -> (&mut [T], &mut [T]) {
    debug_assert!(a + len <= b);
    let (lo, hi) = buf.split_at_mut(b);
    (&mut lo[a..a + len], &mut hi[..len])
}

struct LayerCache<T> {
    ln1: LnCache<T>,
    h1: Vec<T>,
    qkv: Vec<T>,
    att: Vec<T>,
    y: Vec<T>,
    mask1: Option<Vec<T>>,
    ln2: LnCache<T>,
    h2: Vec<T>,
    u: Vec<T>,
    f: Vec<T>,
    mask2: Option<Vec<T>>,
}

struct Cache<T> {
    layers: Vec<LayerCache<T>>,
    lnf: LnCache<T>,
    hf: Vec<T>,
    logits: Vec<T>,
}

struct LnCache<T> {
    xhat: Vec<T>,
    rstd: Vec<T>,
}

/// Residual dropout during training: rate `p` with inverted scaling.
pub struct Dropout<'a> {
    pub rng: &'a mut ChaCha8Rng,
    pub p: f64,
}

impl Dropout<'_> {
    fn mask<T: Real>(&mut self, len: usize) -> Option<Vec<T>> {
        if self.p <= 0.0 {
            return None;
        }
        let keep = T::of(1.0 / (1.0 - self.p));
        Some((0..len).map(|_| if self.rng.gen::<f64>() < self.p { T::zero() } else { keep }).collect())
    }
}

/// `out[r] = bias + a[r] · w` with `a: rows×k`, `w: k×n`.
fn matmul<T: Real>(out: &mut [T], a: &[T], w: &[T], bias: Option<&[T]>, rows: usize, k: usize, n: usize) {
    for r in 0..rows {
        let o = &mut out[r * n..][..n];
        match bias {
            Some(b) => o.copy_from_slice(b),
            None => o.iter_mut().for_each(|x| *x = T::zero()),
        }
        let ar = &a[r * k..][..k];
        for (kk, &av) in ar.iter().enumerate() {
            let wr = &w[kk * n..][..n];
            for (x, &wv) in o.iter_mut().zip(wr) {
                *x += av * wv;
            }
        }
    }
}

/// `out[r] = a[r] · bᵀ` with `a: rows×k`, `b: n×k`.
fn matmul_bt<T: Real>(out: &mut [T], a: &[T], b: &[T], rows: usize, k: usize, n: usize) {
    for r in 0..rows {
        let ar = &a[r * k..][..k];
        for j in 0..n {
            out[r * n + j] = dot(ar, &b[j * k..][..k]);
        }
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let mut s = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        s += x * y;
    }
    s
}

/// `da[r] += dout[r] · wᵀ` for `w: k×n`.
fn matmul_back_input<T: Real>(da: &mut [T], dout: &[T], w: &[T], rows: usize, k: usize, n: usize) {
    for r in 0..rows {
        let dr = &dout[r * n..][..n];
        for kk in 0..k {
            da[r * k + kk] += dot(dr, &w[kk * n..][..n]);
        }
    }
}

/// `dw += aᵀ · dout` for `a: rows×k`, `dout: rows×n`.
fn matmul_back_weight<T: Real>(dw: &mut [T], a: &[T], dout: &[T], rows: usize, k: usize, n: usize) {
    for r in 0..rows {
        let dr = &dout[r * n..][..n];
        for kk in 0..k {
            let av = a[r * k + kk];
            let row = &mut dw[kk * n..][..n];
            for (g, &d) in row.iter_mut().zip(dr) {
                *g += av * d;
            }
        }
    }
}

fn bias_back<T: Real>(db: &mut [T], dout: &[T], rows: usize, n: usize) {
    for r in 0..rows {
        for (g, &d) in db.iter_mut().zip(&dout[r * n..][..n]) {
            *g += d;
        }
    }
}

fn layer_norm<T: Real>(x: &[T], g: &[T], b: &[T], rows: usize, c: usize) -> (Vec<T>, LnCache<T>) {
    let mut out = vec![T::zero(); rows * c];
    let mut xhat = vec![T::zero(); rows * c];
    let mut rstd = vec![T::zero(); rows];
    let cf = T::of(c as f64);
    for r in 0..rows {
        let xr = &x[r * c..][..c];
        let mean = xr.iter().copied().sum::<T>() / cf;
        let var = xr.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / cf;
        let rs = T::one() / (var + T::of(LN_EPS)).sqrt();
        rstd[r] = rs;
        for j in 0..c {
            let h = (xr[j] - mean) * rs;
            xhat[r * c + j] = h;
            out[r * c + j] = g[j] * h + b[j];
        }
    }
    (out, LnCache { xhat, rstd })
}

#[allow(clippy::too_many_arguments)]
fn layer_norm_back<T: Real>(
    dx: &mut [T],
    dout: &[T],
    cache: &LnCache<T>,
    g: &[T],
    dg: &mut [T],
    db: &mut [T],
    rows: usize,
    c: usize,
) {
    let cf = T::of(c as f64);
    for r in 0..rows {
        let d = &dout[r * c..][..c];
        let xh = &cache.xhat[r * c..][..c];
        let mut mean_d = T::zero();
        let mut mean_dx = T::zero();
        for j in 0..c {
            let dxh = d[j] * g[j];
            mean_d += dxh;
            mean_dx += dxh * xh[j];
            dg[j] += d[j] * xh[j];
            db[j] += d[j];
        }
        mean_d /= cf;
        mean_dx /= cf;
        let rs = cache.rstd[r];
        for j in 0..c {
            let dxh = d[j] * g[j];
            dx[r * c + j] += rs * (dxh - mean_d - xh[j] * mean_dx);
        }
    }
}

const GELU_K: f64 = 0.797_884_560_802_865_4; // sqrt(2 / pi)
const GELU_A: f64 = 0.044_715;

fn gelu<T: Real>(x: T) -> T {
    let inner = T::of(GELU_K) * (x + T::of(GELU_A) * x * x * x);
    T::of(0.5) * x * (T::one() + inner.tanh())
}

fn gelu_grad<T: Real>(x: T) -> T {
    let inner = T::of(GELU_K) * (x + T::of(GELU_A) * x * x * x);
    let th = inner.tanh();
    let dinner = T::of(GELU_K) * (T::one() + T::of(3.0 * GELU_A) * x * x);
    T::of(0.5) * (T::one() + th) + T::of(0.5) * x * (T::one() - th * th) * dinner
}

/// `-log softmax(row)[target]`, computed in f64; NaN inputs stay NaN.
fn nll<T: Real>(row: &[T], target: usize) -> f64 {
    let max = row.iter().map(|x| x.to_f64().unwrap()).fold(f64::NEG_INFINITY, f64::max);
    let lse = row.iter().map(|x| (x.to_f64().unwrap() - max).exp()).sum::<f64>().ln() + max;
    lse - row[target].to_f64().unwrap()
}

fn softmax_row<T: Real>(row: &[T]) -> Vec<T> {
    let max = row.iter().copied().fold(T::neg_infinity(), T::max);
    let mut out: Vec<T> = row.iter().map(|&x| (x - max).exp()).collect();
    let total: T = out.iter().copied().sum();
    out.iter_mut().for_each(|p| *p /= total);
    out
}

/// Causal attention for query position `t` of one head: fills `probs[..=t]`
/// and adds the weighted values into `out`.
fn attend_row<'a, T: Real>(
    q: &[T],
    keys: impl Fn(usize) -> &'a [T],
    values: impl Fn(usize) -> &'a [T],
    t: usize,
    probs: &mut [T],
    out: &mut [T],
) {
    let scale = T::one() / T::of(q.len() as f64).sqrt();
    let mut max = T::neg_infinity();
    for s in 0..=t {
        let score = dot(q, keys(s)) * scale;
        probs[s] = score;
        max = max.max(score);
    }
    let mut total = T::zero();
    for p in probs[..=t].iter_mut() {
        *p = (*p - max).exp();
        total += *p;
    }
    for p in probs[..=t].iter_mut() {
        *p /= total;
    }
    for s in 0..=t {
        let w = probs[s];
        for (o, &v) in out.iter_mut().zip(values(s)) {
            *o += w * v;
        }
    }
}

/// Returns the concatenated head outputs `[n, c]` and attention weights
/// `[heads, n, n]` (upper triangle zero).
fn attention<T: Real>(qkv: &[T], n: usize, c: usize, heads: usize) -> (Vec<T>, Vec<T>) {
    let d = c / heads;
    let mut y = vec![T::zero(); n * c];
    let mut att = vec![T::zero(); heads * n * n];
    for h in 0..heads {
        for t in 0..n {
            let q = &qkv[t * 3 * c + h * d..][..d];
            let (probs, out) = (&mut att[(h * n + t) * n..][..n], &mut y[t * c + h * d..][..d]);
            attend_row(
                q,
                |s| &qkv[s * 3 * c + c + h * d..][..d],
                |s| &qkv[s * 3 * c + 2 * c + h * d..][..d],
                t,
                probs,
                out,
            );
        }
    }
    (y, att)
}

fn attention_back<T: Real>(dy: &[T], qkv: &[T], att: &[T], n: usize, c: usize, heads: usize) -> Vec<T> {
    let d = c / heads;
    let scale = T::one() / T::of(d as f64).sqrt();
    let mut dqkv = vec![T::zero(); n * 3 * c];
    let mut datt = vec![T::zero(); n];
    for h in 0..heads {
        for t in 0..n {
            let probs = &att[(h * n + t) * n..][..n];
            let dout = &dy[t * c + h * d..][..d];
            let mut weighted = T::zero();
            for s in 0..=t {
                let v = &qkv[s * 3 * c + 2 * c + h * d..][..d];
                datt[s] = dot(dout, v);
                weighted += datt[s] * probs[s];
                let dv = &mut dqkv[s * 3 * c + 2 * c + h * d..][..d];
                for (g, &o) in dv.iter_mut().zip(dout) {
                    *g += probs[s] * o;
                }
            }
            for s in 0..=t {
                let dscore = probs[s] * (datt[s] - weighted) * scale;
                for j in 0..d {
                    let qj = qkv[t * 3 * c + h * d + j];
                    let kj = qkv[s * 3 * c + c + h * d + j];
                    dqkv[t * 3 * c + h * d + j] += dscore * kj;
                    dqkv[s * 3 * c + c + h * d + j] += dscore * qj;
                }
            }
        }
    }
    dqkv
}

impl<T: Real> LanguageModel for TinyTransformer<T> {
    fn vocab_size(&self) -> usize {
        self.config.vocab_size
    }

    fn context_limit(&self) -> usize {
        self.config.context
    }

    fn logits(&self, context: &[u32]) -> Vec<f64> {
        let ctx = crate::lm::window(context, self.config.context);
        if ctx.is_empty() {
            return vec![0.0; self.config.vocab_size];
        }
        let v = self.config.vocab_size;
        let all = self.forward_logits(ctx);
        all[(ctx.len() - 1) * v..].iter().map(|x| x.to_f64().unwrap()).collect()
    }

    fn session(&self) -> Box<dyn DecodeSession + '_> {
        Box::new(KvSession::new(self))
    }

    fn as_dyn(&self) -> &dyn LanguageModel {
        self
    }
}

/// Incremental decoding with cached keys and values. Within the context
/// window every step computes exactly what the full forward pass computes
/// for the newest position; past the window it falls back to recomputing on
/// the last `context` tokens.
pub struct KvSession<'a, T: Real> {
    model: &'a TinyTransformer<T>,
    tokens: Vec<u32>,
    /// Per layer: `[pos, c]` keys and values.
    keys: Vec<Vec<T>>,
    values: Vec<Vec<T>>,
    last: Option<Vec<f64>>,
}

impl<'a, T: Real> KvSession<'a, T> {
    pub fn new(model: &'a TinyTransformer<T>) -> Self {
        let layers = model.config.layers;
        KvSession { model, tokens: Vec::new(), keys: vec![Vec::new(); layers], values: vec![Vec::new(); layers], last: None }
    }

    fn step(&mut self, tok: u32) -> Vec<f64> {
        let m = self.model;
        let cfg = &m.config;
        let (c, hid, v, heads) = (cfg.width, cfg.hidden(), cfg.vocab_size, cfg.heads);
        let d = c / heads;
        let p = &m.params;
        let t = self.tokens.len() - 1;
        let mut x: Vec<T> = (0..c)
            .map(|j| p[m.layout.wte + tok as usize * c + j] + p[m.layout.wpe + t * c + j])
            .collect();
        for (l, lo) in m.layout.layers.iter().enumerate() {
            let (h1, _) = layer_norm(&x, &p[lo.ln1_g..][..c], &p[lo.ln1_b..][..c], 1, c);
            let mut qkv = vec![T::zero(); 3 * c];
            matmul(&mut qkv, &h1, &p[lo.qkv_w..][..c * 3 * c], Some(&p[lo.qkv_b..][..3 * c]), 1, c, 3 * c);
            self.keys[l].extend_from_slice(&qkv[c..2 * c]);
            self.values[l].extend_from_slice(&qkv[2 * c..]);
            let (keys, values) = (&self.keys[l], &self.values[l]);
            let mut y = vec![T::zero(); c];
            let mut probs = vec![T::zero(); t + 1];
            for h in 0..heads {
                attend_row(
                    &qkv[h * d..][..d],
                    |s| &keys[s * c + h * d..][..d],
                    |s| &values[s * c + h * d..][..d],
                    t,
                    &mut probs,
                    &mut y[h * d..][..d],
                );
            }
            let mut a = vec![T::zero(); c];
            matmul(&mut a, &y, &p[lo.proj_w..][..c * c], Some(&p[lo.proj_b..][..c]), 1, c, c);
            x.iter_mut().zip(&a).for_each(|(x, &a)| *x += a);
            let (h2, _) = layer_norm(&x, &p[lo.ln2_g..][..c], &p[lo.ln2_b..][..c], 1, c);
            let mut u = vec![T::zero(); hid];
            matmul(&mut u, &h2, &p[lo.fc_w..][..c * hid], Some(&p[lo.fc_b..][..hid]), 1, c, hid);
            let f: Vec<T> = u.iter().map(|&z| gelu(z)).collect();
            let mut z = vec![T::zero(); c];
            matmul(&mut z, &f, &p[lo.out_w..][..hid * c], Some(&p[lo.out_b..][..c]), 1, hid, c);
            x.iter_mut().zip(&z).for_each(|(x, &z)| *x += z);
        }
        let (hf, _) = layer_norm(&x, &p[m.layout.lnf_g..][..c], &p[m.layout.lnf_b..][..c], 1, c);
        let mut logits = vec![T::zero(); v];
        let (w, tied) = m.head_matrix();
        if tied {
            matmul_bt(&mut logits, &hf, w, 1, c, v);
        } else {
            matmul(&mut logits, &hf, w, None, 1, c, v);
        }
        logits.iter().map(|x| x.to_f64().unwrap()).collect()
    }
}

impl<T: Real> DecodeSession for KvSession<'_, T> {
    fn push(&mut self, token: u32) {
        self.tokens.push(token);
        self.last = if self.tokens.len() <= self.model.config.context { Some(self.step(token)) } else { None };
    }

    fn logits(&mut self) -> Vec<f64> {
        match &self.last {
            Some(l) => l.clone(),
            None => self.model.logits(&self.tokens),
        }
    }
}
