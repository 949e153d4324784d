//! Building blocks with explicit forward caches and hand-written backward
//! passes. Activations are row-major `(rows, features)` matrices where a row
//! is one token position of one sequence in the batch.

use ndarray::{s, Array1, Array2, Axis, Zip};
use rand::Rng;

use super::Real;

pub(crate) fn cst<F: Real>(x: f64) -> F {
    F::from_f64(x).expect("representable constant")
}

/// Visits parameters in a fixed, documented order.
pub trait Parameters<F: Real> {
    fn visit<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Array2<F>)>);
    fn visit_mut<'a>(&'a mut self, out: &mut Vec<&'a mut Array2<F>>);
}

fn glorot<F: Real, R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Array2<F> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || cst(rng.gen_range(-bound..bound)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Linear<F: Real> {
    pub w: Array2<F>,
    pub b: Array2<F>,
}

impl<F: Real> Linear<F> {
    pub fn new<R: Rng>(input: usize, output: usize, rng: &mut R) -> Self {
        Linear {
            w: glorot(input, output, rng),
            b: Array2::zeros((1, output)),
        }
    }

    pub fn forward(&self, x: &Array2<F>) -> Array2<F> {
        let mut y = x.dot(&self.w);
        y += &self.b;
        y
    }

    /// Accumulates parameter gradients into `grad`, returns d(loss)/dx.
    pub fn backward(&self, x: &Array2<F>, dy: &Array2<F>, grad: &mut Linear<F>) -> Array2<F> {
        grad.w += &x.t().dot(dy);
        grad.b += &dy.sum_axis(Axis(0)).insert_axis(Axis(0));
        dy.dot(&self.w.t())
    }
}

impl<F: Real> Parameters<F> for Linear<F> {
    fn visit<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Array2<F>)>) {
        out.push((format!("{prefix}.w"), &self.w));
        out.push((format!("{prefix}.b"), &self.b));
    }

    fn visit_mut<'a>(&'a mut self, out: &mut Vec<&'a mut Array2<F>>) {
        out.push(&mut self.w);
        out.push(&mut self.b);
    }
}

pub const LAYER_NORM_EPS: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct LayerNorm<F: Real> {
    pub gain: Array2<F>,
    pub bias: Array2<F>,
}

#[derive(Debug, Clone)]
pub struct LayerNormCache<F: Real> {
    normed: Array2<F>,
    inv_std: Array1<F>,
}

impl<F: Real> LayerNorm<F> {
    pub fn new(width: usize) -> Self {
        LayerNorm {
            gain: Array2::ones((1, width)),
            bias: Array2::zeros((1, width)),
        }
    }

    pub fn forward(&self, x: &Array2<F>) -> (Array2<F>, LayerNormCache<F>) {
        let width = cst::<F>(x.ncols() as f64);
        let eps = cst::<F>(LAYER_NORM_EPS);
        let mut normed = x.clone();
        let mut inv_std = Array1::zeros(x.nrows());
        for (mut row, is) in normed.rows_mut().into_iter().zip(inv_std.iter_mut()) {
            let mean = row.sum() / width;
            row.mapv_inplace(|v| v - mean);
            let var = row.fold(F::zero(), |acc, &v| acc + v * v) / width;
            *is = F::one() / (var + eps).sqrt();
            let s = *is;
            row.mapv_inplace(|v| v * s);
        }
        let mut y = &normed * &self.gain;
        y += &self.bias;
        (y, LayerNormCache { normed, inv_std })
    }

    pub fn backward(
        &self,
        cache: &LayerNormCache<F>,
        dy: &Array2<F>,
        grad: &mut LayerNorm<F>,
    ) -> Array2<F> {
        grad.gain += &(dy * &cache.normed).sum_axis(Axis(0)).insert_axis(Axis(0));
        grad.bias += &dy.sum_axis(Axis(0)).insert_axis(Axis(0));
        let dnormed = dy * &self.gain;
        let width = cst::<F>(dy.ncols() as f64);
        let mut dx = Array2::zeros(dy.raw_dim());
        Zip::from(dx.rows_mut())
            .and(dnormed.rows())
            .and(cache.normed.rows())
            .and(&cache.inv_std)
            .for_each(|mut dx, dn, n, &is| {
                let sum_dn = dn.sum();
                let sum_dn_n = dn.dot(&n);
                Zip::from(&mut dx).and(&dn).and(&n).for_each(|d, &g, &v| {
                    *d = is / width * (width * g - sum_dn - v * sum_dn_n);
                });
            });
        dx
    }
}

impl<F: Real> Parameters<F> for LayerNorm<F> {
    fn visit<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Array2<F>)>) {
        out.push((format!("{prefix}.gain"), &self.gain));
        out.push((format!("{prefix}.bias"), &self.bias));
    }

    fn visit_mut<'a>(&'a mut self, out: &mut Vec<&'a mut Array2<F>>) {
        out.push(&mut self.gain);
        out.push(&mut self.bias);
    }
}

/// Inverted dropout. `mask` holds 0 or 1/(1-p) per element; `None` means the
/// layer was an identity (evaluation, or p = 0).
#[derive(Debug, Clone)]
pub struct DropoutMask<F: Real> {
    mask: Option<Array2<F>>,
}

impl<F: Real> DropoutMask<F> {
    pub fn sample<R: Rng>(shape: (usize, usize), p: f64, rng: Option<&mut R>) -> Self {
        match rng {
            Some(rng) if p > 0.0 => {
                let keep = cst::<F>(1.0 / (1.0 - p));
                let mask = Array2::from_shape_simple_fn(shape, || {
                    if rng.gen::<f64>() < p {
                        F::zero()
                    } else {
                        keep
                    }
                });
                DropoutMask { mask: Some(mask) }
            }
            _ => DropoutMask { mask: None },
        }
    }

    pub fn apply(&self, x: Array2<F>) -> Array2<F> {
        match &self.mask {
            Some(m) => x * m,
            None => x,
        }
    }
}

/// Which keys each query may attend to.
#[derive(Debug, Clone)]
pub struct AttentionMask {
    /// `batch * key_len` flags, false at padding.
    pub key_valid: Vec<bool>,
    pub causal: bool,
}

impl AttentionMask {
    fn allowed(&self, b: usize, key_len: usize, i: usize, j: usize) -> bool {
        self.key_valid[b * key_len + j] && (!self.causal || j <= i)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiHeadAttention<F: Real> {
    pub query: Linear<F>,
    pub key: Linear<F>,
    pub value: Linear<F>,
    pub output: Linear<F>,
    pub heads: usize,
}

#[derive(Debug, Clone)]
pub struct AttentionCache<F: Real> {
    xq: Array2<F>,
    xkv: Array2<F>,
    q: Array2<F>,
    k: Array2<F>,
    v: Array2<F>,
    /// Softmax weights, one `(query_len, key_len)` block per (sequence, head).
    probs: Vec<Array2<F>>,
    context: Array2<F>,
}

impl<F: Real> MultiHeadAttention<F> {
    pub fn new<R: Rng>(width: usize, heads: usize, rng: &mut R) -> Self {
        MultiHeadAttention {
            query: Linear::new(width, width, rng),
            key: Linear::new(width, width, rng),
            value: Linear::new(width, width, rng),
            output: Linear::new(width, width, rng),
            heads,
        }
    }

    /// `xq` is `(batch * query_len, width)`, `xkv` is `(batch * key_len, width)`.
    pub fn forward(
        &self,
        xq: &Array2<F>,
        xkv: &Array2<F>,
        batch: usize,
        mask: &AttentionMask,
    ) -> (Array2<F>, AttentionCache<F>) {
        let (lq, lk) = (xq.nrows() / batch, xkv.nrows() / batch);
        let width = xq.ncols();
        let dk = width / self.heads;
        let scale = cst::<F>(1.0 / (dk as f64).sqrt());
        let q = self.query.forward(xq);
        let k = self.key.forward(xkv);
        let v = self.value.forward(xkv);
        let mut context = Array2::zeros((batch * lq, width));
        let mut probs = Vec::with_capacity(batch * self.heads);
        for b in 0..batch {
            for h in 0..self.heads {
                let cols = h * dk..(h + 1) * dk;
                let qb = q.slice(s![b * lq..(b + 1) * lq, cols.clone()]);
                let kb = k.slice(s![b * lk..(b + 1) * lk, cols.clone()]);
                let vb = v.slice(s![b * lk..(b + 1) * lk, cols.clone()]);
                let mut scores = qb.dot(&kb.t());
                for (i, mut row) in scores.rows_mut().into_iter().enumerate() {
                    let mut max = F::neg_infinity();
                    for (j, s) in row.iter_mut().enumerate() {
                        if mask.allowed(b, lk, i, j) {
                            *s *= scale;
                            max = max.max(*s);
                        } else {
                            *s = F::neg_infinity();
                        }
                    }
                    let mut total = F::zero();
                    for s in row.iter_mut() {
                        *s = if s.is_finite() {
                            (*s - max).exp()
                        } else {
                            F::zero()
                        };
                        total += *s;
                    }
                    if total > F::zero() {
                        row.mapv_inplace(|p| p / total);
                    }
                }
                context
                    .slice_mut(s![b * lq..(b + 1) * lq, cols])
                    .assign(&scores.dot(&vb));
                probs.push(scores);
            }
        }
        let y = self.output.forward(&context);
        (
            y,
            AttentionCache {
                xq: xq.clone(),
                xkv: xkv.clone(),
                q,
                k,
                v,
                probs,
                context,
            },
        )
    }

    /// Returns (d/dxq, d/dxkv).
    pub fn backward(
        &self,
        cache: &AttentionCache<F>,
        dy: &Array2<F>,
        batch: usize,
        grad: &mut MultiHeadAttention<F>,
    ) -> (Array2<F>, Array2<F>) {
        let (lq, lk) = (cache.xq.nrows() / batch, cache.xkv.nrows() / batch);
        let width = cache.xq.ncols();
        let dk = width / self.heads;
        let scale = cst::<F>(1.0 / (dk as f64).sqrt());
        let dcontext = self.output.backward(&cache.context, dy, &mut grad.output);
        let mut dq = Array2::zeros(cache.q.raw_dim());
        let mut dk_ = Array2::zeros(cache.k.raw_dim());
        let mut dv = Array2::zeros(cache.v.raw_dim());
        for b in 0..batch {
            for h in 0..self.heads {
                let cols = h * dk..(h + 1) * dk;
                let rq = b * lq..(b + 1) * lq;
                let rk = b * lk..(b + 1) * lk;
                let p = &cache.probs[b * self.heads + h];
                let dctx = dcontext.slice(s![rq.clone(), cols.clone()]);
                let vb = cache.v.slice(s![rk.clone(), cols.clone()]);
                let qb = cache.q.slice(s![rq.clone(), cols.clone()]);
                let kb = cache.k.slice(s![rk.clone(), cols.clone()]);
                dv.slice_mut(s![rk.clone(), cols.clone()])
                    .assign(&p.t().dot(&dctx));
                let dp = dctx.dot(&vb.t());
                let mut ds = &dp * p;
                for (mut row, prow) in ds.rows_mut().into_iter().zip(p.rows()) {
                    let dot = row.sum();
                    Zip::from(&mut row).and(&prow).for_each(|d, &pv| {
                        *d = (*d - pv * dot) * scale;
                    });
                }
                dq.slice_mut(s![rq, cols.clone()]).assign(&ds.dot(&kb));
                dk_.slice_mut(s![rk, cols]).assign(&ds.t().dot(&qb));
            }
        }
        let dxq = self.query.backward(&cache.xq, &dq, &mut grad.query);
        let mut dxkv = self.key.backward(&cache.xkv, &dk_, &mut grad.key);
        dxkv += &self.value.backward(&cache.xkv, &dv, &mut grad.value);
        (dxq, dxkv)
    }
}

impl<F: Real> Parameters<F> for MultiHeadAttention<F> {
    fn visit<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Array2<F>)>) {
        self.query.visit(&format!("{prefix}.query"), out);
        self.key.visit(&format!("{prefix}.key"), out);
        self.value.visit(&format!("{prefix}.value"), out);
        self.output.visit(&format!("{prefix}.output"), out);
    }

    fn visit_mut<'a>(&'a mut self, out: &mut Vec<&'a mut Array2<F>>) {
        self.query.visit_mut(out);
        self.key.visit_mut(out);
        self.value.visit_mut(out);
        self.output.visit_mut(out);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedForward<F: Real> {
    pub inner: Linear<F>,
    pub outer: Linear<F>,
}

#[derive(Debug, Clone)]
pub struct FeedForwardCache<F: Real> {
    x: Array2<F>,
    pre: Array2<F>,
    hidden: Array2<F>,
    dropout: DropoutMask<F>,
}

impl<F: Real> FeedForward<F> {
    pub fn new<R: Rng>(width: usize, hidden: usize, rng: &mut R) -> Self {
        FeedForward {
            inner: Linear::new(width, hidden, rng),
            outer: Linear::new(hidden, width, rng),
        }
    }

    pub fn forward(
        &self,
        x: &Array2<F>,
        dropout: DropoutMask<F>,
    ) -> (Array2<F>, FeedForwardCache<F>) {
        let pre = self.inner.forward(x);
        let hidden = dropout.apply(pre.mapv(|v| v.max(F::zero())));
        let y = self.outer.forward(&hidden);
        (
            y,
            FeedForwardCache {
                x: x.clone(),
                pre,
                hidden,
                dropout,
            },
        )
    }

    pub fn backward(
        &self,
        cache: &FeedForwardCache<F>,
        dy: &Array2<F>,
        grad: &mut FeedForward<F>,
    ) -> Array2<F> {
        let dhidden = self.outer.backward(&cache.hidden, dy, &mut grad.outer);
        let mut dpre = cache.dropout.apply(dhidden);
        Zip::from(&mut dpre).and(&cache.pre).for_each(|d, &p| {
            if p <= F::zero() {
                *d = F::zero();
            }
        });
        self.inner.backward(&cache.x, &dpre, &mut grad.inner)
    }
}

impl<F: Real> Parameters<F> for FeedForward<F> {
    fn visit<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Array2<F>)>) {
        self.inner.visit(&format!("{prefix}.inner"), out);
        self.outer.visit(&format!("{prefix}.outer"), out);
    }

    fn visit_mut<'a>(&'a mut self, out: &mut Vec<&'a mut Array2<F>>) {
        self.inner.visit_mut(out);
        self.outer.visit_mut(out);
    }
}

/// Token embedding scaled by sqrt(width) plus a sinusoidal position code.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding<F: Real> {
    pub table: Array2<F>,
}

impl<F: Real> Embedding<F> {
    pub fn new<R: Rng>(vocab: usize, width: usize, rng: &mut R) -> Self {
        Embedding {
            table: glorot(vocab, width, rng),
        }
    }

    pub fn forward(&self, ids: &[usize], seq_len: usize) -> Array2<F> {
        let width = self.table.ncols();
        let scale = cst::<F>((width as f64).sqrt());
        let mut out = Array2::zeros((ids.len(), width));
        for (r, &id) in ids.iter().enumerate() {
            let pos = r % seq_len;
            let mut row = out.row_mut(r);
            row.assign(&self.table.row(id));
            row.mapv_inplace(|v| v * scale);
            for (c, v) in row.iter_mut().enumerate() {
                *v += cst(positional(pos, c, width));
            }
        }
        out
    }

    pub fn backward(&self, ids: &[usize], dy: &Array2<F>, grad: &mut Embedding<F>) {
        let scale = cst::<F>((self.table.ncols() as f64).sqrt());
        for (r, &id) in ids.iter().enumerate() {
            let mut g = grad.table.row_mut(id);
            g.scaled_add(scale, &dy.row(r));
        }
    }
}

impl<F: Real> Parameters<F> for Embedding<F> {
    fn visit<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Array2<F>)>) {
        out.push((format!("{prefix}.table"), &self.table));
    }

    fn visit_mut<'a>(&'a mut self, out: &mut Vec<&'a mut Array2<F>>) {
        out.push(&mut self.table);
    }
}

/// Sinusoidal position encoding: sin on even features, cos on odd ones.
pub fn positional(pos: usize, feature: usize, width: usize) -> f64 {
    let pair = (feature / 2 * 2) as f64;
    let angle = pos as f64 / 10000f64.powf(pair / width as f64);
    if feature.is_multiple_of(2) {
        angle.sin()
    } else {
        angle.cos()
    }
}
