//! Post-norm encoder-decoder transformer.

use ndarray::{Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::layers::{
    AttentionCache, AttentionMask, DropoutMask, Embedding, FeedForward, FeedForwardCache,
    LayerNorm, LayerNormCache, Linear, MultiHeadAttention, Parameters,
};
use super::{Real, TransformerConfig};
use crate::seqcodec::PAD_ID;

/// Padded batch of (source, target) id sequences. Targets include `Begin`
/// and `End`; the decoder reads `tgt_in = target[..n-1]` and predicts
/// `tgt_out = target[1..]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    pub size: usize,
    pub src_len: usize,
    pub tgt_len: usize,
    pub src: Vec<usize>,
    pub tgt_in: Vec<usize>,
    pub tgt_out: Vec<usize>,
}

impl Batch {
    pub fn new<S: AsRef<[usize]>, T: AsRef<[usize]>>(pairs: &[(S, T)]) -> Batch {
        let size = pairs.len();
        let src_len = pairs
            .iter()
            .map(|(s, _)| s.as_ref().len())
            .max()
            .unwrap_or(0);
        let tgt_len = pairs
            .iter()
            .map(|(_, t)| t.as_ref().len().saturating_sub(1))
            .max()
            .unwrap_or(0);
        let mut src = vec![PAD_ID; size * src_len];
        let mut tgt_in = vec![PAD_ID; size * tgt_len];
        let mut tgt_out = vec![PAD_ID; size * tgt_len];
        for (b, (s, t)) in pairs.iter().enumerate() {
            let (s, t) = (s.as_ref(), t.as_ref());
            src[b * src_len..b * src_len + s.len()].copy_from_slice(s);
            if t.len() >= 2 {
                let n = t.len() - 1;
                tgt_in[b * tgt_len..b * tgt_len + n].copy_from_slice(&t[..n]);
                tgt_out[b * tgt_len..b * tgt_len + n].copy_from_slice(&t[1..]);
            }
        }
        Batch {
            size,
            src_len,
            tgt_len,
            src,
            tgt_in,
            tgt_out,
        }
    }

    /// Decoder-only batch: every row shares `prefix` as decoder input.
    fn for_prefixes(src: &[usize], prefixes: &[Vec<usize>]) -> Batch {
        let size = prefixes.len();
        let tgt_len = prefixes.iter().map(Vec::len).max().unwrap_or(0);
        let mut tgt_in = vec![PAD_ID; size * tgt_len];
        for (b, p) in prefixes.iter().enumerate() {
            tgt_in[b * tgt_len..b * tgt_len + p.len()].copy_from_slice(p);
        }
        Batch {
            size,
            src_len: src.len(),
            tgt_len,
            src: src.repeat(size),
            tgt_in,
            tgt_out: vec![PAD_ID; size * tgt_len],
        }
    }

    fn src_mask(&self) -> AttentionMask {
        AttentionMask {
            key_valid: self.src.iter().map(|&t| t != PAD_ID).collect(),
            causal: false,
        }
    }

    fn tgt_mask(&self) -> AttentionMask {
        AttentionMask {
            key_valid: self.tgt_in.iter().map(|&t| t != PAD_ID).collect(),
            causal: true,
        }
    }

    pub fn target_tokens(&self) -> usize {
        self.tgt_out.iter().filter(|&&t| t != PAD_ID).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderLayer<F: Real> {
    pub attention: MultiHeadAttention<F>,
    pub norm1: LayerNorm<F>,
    pub feed_forward: FeedForward<F>,
    pub norm2: LayerNorm<F>,
}

#[derive(Debug, Clone)]
struct EncoderCache<F: Real> {
    attention: AttentionCache<F>,
    drop1: DropoutMask<F>,
    norm1: LayerNormCache<F>,
    feed_forward: FeedForwardCache<F>,
    drop2: DropoutMask<F>,
    norm2: LayerNormCache<F>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoderLayer<F: Real> {
    pub self_attention: MultiHeadAttention<F>,
    pub norm1: LayerNorm<F>,
    pub cross_attention: MultiHeadAttention<F>,
    pub norm2: LayerNorm<F>,
    pub feed_forward: FeedForward<F>,
    pub norm3: LayerNorm<F>,
}

#[derive(Debug, Clone)]
struct DecoderCache<F: Real> {
    self_attention: AttentionCache<F>,
    drop1: DropoutMask<F>,
    norm1: LayerNormCache<F>,
    cross_attention: AttentionCache<F>,
    drop2: DropoutMask<F>,
    norm2: LayerNormCache<F>,
    feed_forward: FeedForwardCache<F>,
    drop3: DropoutMask<F>,
    norm3: LayerNormCache<F>,
}

struct Dropper<'r> {
    p: f64,
    rng: Option<&'r mut ChaCha8Rng>,
}

impl Dropper<'_> {
    fn mask<F: Real>(&mut self, shape: (usize, usize)) -> DropoutMask<F> {
        DropoutMask::sample(shape, self.p, self.rng.as_deref_mut())
    }
}

impl<F: Real> EncoderLayer<F> {
    fn new(cfg: &TransformerConfig, rng: &mut ChaCha8Rng) -> Self {
        EncoderLayer {
            attention: MultiHeadAttention::new(cfg.width, cfg.heads, rng),
            norm1: LayerNorm::new(cfg.width),
            feed_forward: FeedForward::new(cfg.width, cfg.ff_width, rng),
            norm2: LayerNorm::new(cfg.width),
        }
    }

    fn forward(
        &self,
        x: &Array2<F>,
        batch: usize,
        mask: &AttentionMask,
        drop: &mut Dropper,
    ) -> (Array2<F>, EncoderCache<F>) {
        let (a, attention) = self.attention.forward(x, x, batch, mask);
        let drop1 = drop.mask(a.dim());
        let (h1, norm1) = self.norm1.forward(&(x + &drop1.apply(a)));
        let (f, feed_forward) = self.feed_forward.forward(
            &h1,
            drop.mask((h1.nrows(), self.feed_forward.inner.w.ncols())),
        );
        let drop2 = drop.mask(f.dim());
        let (y, norm2) = self.norm2.forward(&(&h1 + &drop2.apply(f)));
        (
            y,
            EncoderCache {
                attention,
                drop1,
                norm1,
                feed_forward,
                drop2,
                norm2,
            },
        )
    }

    fn backward(
        &self,
        cache: &EncoderCache<F>,
        dy: &Array2<F>,
        batch: usize,
        grad: &mut EncoderLayer<F>,
    ) -> Array2<F> {
        let d_res2 = self.norm2.backward(&cache.norm2, dy, &mut grad.norm2);
        let df = cache.drop2.apply(d_res2.clone());
        let mut dh1 = d_res2;
        dh1 += &self
            .feed_forward
            .backward(&cache.feed_forward, &df, &mut grad.feed_forward);
        let d_res1 = self.norm1.backward(&cache.norm1, &dh1, &mut grad.norm1);
        let da = cache.drop1.apply(d_res1.clone());
        let (dq, dkv) = self
            .attention
            .backward(&cache.attention, &da, batch, &mut grad.attention);
        d_res1 + dq + dkv
    }
}

impl<F: Real> DecoderLayer<F> {
    fn new(cfg: &TransformerConfig, rng: &mut ChaCha8Rng) -> Self {
        DecoderLayer {
            self_attention: MultiHeadAttention::new(cfg.width, cfg.heads, rng),
            norm1: LayerNorm::new(cfg.width),
            cross_attention: MultiHeadAttention::new(cfg.width, cfg.heads, rng),
            norm2: LayerNorm::new(cfg.width),
            feed_forward: FeedForward::new(cfg.width, cfg.ff_width, rng),
            norm3: LayerNorm::new(cfg.width),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn forward(
        &self,
        x: &Array2<F>,
        memory: &Array2<F>,
        batch: usize,
        self_mask: &AttentionMask,
        cross_mask: &AttentionMask,
        drop: &mut Dropper,
    ) -> (Array2<F>, DecoderCache<F>) {
        let (a, self_attention) = self.self_attention.forward(x, x, batch, self_mask);
        let drop1 = drop.mask(a.dim());
        let (h1, norm1) = self.norm1.forward(&(x + &drop1.apply(a)));
        let (c, cross_attention) = self.cross_attention.forward(&h1, memory, batch, cross_mask);
        let drop2 = drop.mask(c.dim());
        let (h2, norm2) = self.norm2.forward(&(&h1 + &drop2.apply(c)));
        let (f, feed_forward) = self.feed_forward.forward(
            &h2,
            drop.mask((h2.nrows(), self.feed_forward.inner.w.ncols())),
        );
        let drop3 = drop.mask(f.dim());
        let (y, norm3) = self.norm3.forward(&(&h2 + &drop3.apply(f)));
        (
            y,
            DecoderCache {
                self_attention,
                drop1,
                norm1,
                cross_attention,
                drop2,
                norm2,
                feed_forward,
                drop3,
                norm3,
            },
        )
    }

    /// Returns (d/dx, d/dmemory).
    fn backward(
        &self,
        cache: &DecoderCache<F>,
        dy: &Array2<F>,
        batch: usize,
        grad: &mut DecoderLayer<F>,
    ) -> (Array2<F>, Array2<F>) {
        let d_res3 = self.norm3.backward(&cache.norm3, dy, &mut grad.norm3);
        let df = cache.drop3.apply(d_res3.clone());
        let mut dh2 = d_res3;
        dh2 += &self
            .feed_forward
            .backward(&cache.feed_forward, &df, &mut grad.feed_forward);
        let d_res2 = self.norm2.backward(&cache.norm2, &dh2, &mut grad.norm2);
        let dc = cache.drop2.apply(d_res2.clone());
        let (dq, dmem) = self.cross_attention.backward(
            &cache.cross_attention,
            &dc,
            batch,
            &mut grad.cross_attention,
        );
        let dh1 = d_res2 + dq;
        let d_res1 = self.norm1.backward(&cache.norm1, &dh1, &mut grad.norm1);
        let da = cache.drop1.apply(d_res1.clone());
        let (dq, dkv) = self.self_attention.backward(
            &cache.self_attention,
            &da,
            batch,
            &mut grad.self_attention,
        );
        (d_res1 + dq + dkv, dmem)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transformer<F: Real> {
    pub config: TransformerConfig,
    pub src_vocab: usize,
    pub tgt_vocab: usize,
    pub src_embed: Embedding<F>,
    pub tgt_embed: Embedding<F>,
    pub encoder: Vec<EncoderLayer<F>>,
    pub decoder: Vec<DecoderLayer<F>>,
    pub projection: Linear<F>,
}

/// Intermediates of one training forward pass.
pub struct ForwardCache<F: Real> {
    src_drop: DropoutMask<F>,
    tgt_drop: DropoutMask<F>,
    encoder: Vec<EncoderCache<F>>,
    decoder: Vec<DecoderCache<F>>,
    decoder_out: Array2<F>,
}

impl<F: Real> Transformer<F> {
    /// Glorot-uniform weights, zero biases, unit layer-norm gains; fully
    /// determined by `seed`.
    pub fn new(config: TransformerConfig, src_vocab: usize, tgt_vocab: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let src_embed = Embedding::new(src_vocab, config.width, &mut rng);
        let tgt_embed = Embedding::new(tgt_vocab, config.width, &mut rng);
        let encoder = (0..config.encoder_layers)
            .map(|_| EncoderLayer::new(&config, &mut rng))
            .collect();
        let decoder = (0..config.decoder_layers)
            .map(|_| DecoderLayer::new(&config, &mut rng))
            .collect();
        let projection = Linear::new(config.width, tgt_vocab, &mut rng);
        Transformer {
            config,
            src_vocab,
            tgt_vocab,
            src_embed,
            tgt_embed,
            encoder,
            decoder,
            projection,
        }
    }

    /// A copy of `self` with every parameter set to zero.
    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for p in z.parameters_mut() {
            p.fill(F::zero());
        }
        z
    }

    pub fn named_parameters(&self) -> Vec<(String, &Array2<F>)> {
        let mut out = Vec::new();
        self.src_embed.visit("src_embed", &mut out);
        self.tgt_embed.visit("tgt_embed", &mut out);
        for (i, l) in self.encoder.iter().enumerate() {
            l.attention
                .visit(&format!("encoder.{i}.attention"), &mut out);
            l.norm1.visit(&format!("encoder.{i}.norm1"), &mut out);
            l.feed_forward
                .visit(&format!("encoder.{i}.feed_forward"), &mut out);
            l.norm2.visit(&format!("encoder.{i}.norm2"), &mut out);
        }
        for (i, l) in self.decoder.iter().enumerate() {
            l.self_attention
                .visit(&format!("decoder.{i}.self_attention"), &mut out);
            l.norm1.visit(&format!("decoder.{i}.norm1"), &mut out);
            l.cross_attention
                .visit(&format!("decoder.{i}.cross_attention"), &mut out);
            l.norm2.visit(&format!("decoder.{i}.norm2"), &mut out);
            l.feed_forward
                .visit(&format!("decoder.{i}.feed_forward"), &mut out);
            l.norm3.visit(&format!("decoder.{i}.norm3"), &mut out);
        }
        self.projection.visit("projection", &mut out);
        out
    }

    /// Same order as [`Transformer::named_parameters`].
    pub fn parameters_mut(&mut self) -> Vec<&mut Array2<F>> {
        let mut out = Vec::new();
        self.src_embed.visit_mut(&mut out);
        self.tgt_embed.visit_mut(&mut out);
        for l in &mut self.encoder {
            l.attention.visit_mut(&mut out);
            l.norm1.visit_mut(&mut out);
            l.feed_forward.visit_mut(&mut out);
            l.norm2.visit_mut(&mut out);
        }
        for l in &mut self.decoder {
            l.self_attention.visit_mut(&mut out);
            l.norm1.visit_mut(&mut out);
            l.cross_attention.visit_mut(&mut out);
            l.norm2.visit_mut(&mut out);
            l.feed_forward.visit_mut(&mut out);
            l.norm3.visit_mut(&mut out);
        }
        self.projection.visit_mut(&mut out);
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.named_parameters().iter().map(|(_, p)| p.len()).sum()
    }

    fn check_ids(&self, batch: &Batch) {
        assert!(
            batch.src.iter().all(|&t| t < self.src_vocab),
            "source id out of vocabulary range"
        );
        assert!(
            batch
                .tgt_in
                .iter()
                .chain(&batch.tgt_out)
                .all(|&t| t < self.tgt_vocab),
            "target id out of vocabulary range"
        );
    }

    /// Log-probabilities `(batch * tgt_len, tgt_vocab)`. Dropout is active
    /// only when `rng` is given.
    pub fn forward(
        &self,
        batch: &Batch,
        rng: Option<&mut ChaCha8Rng>,
    ) -> (Array2<F>, ForwardCache<F>) {
        self.check_ids(batch);
        let mut drop = Dropper {
            p: self.config.dropout,
            rng,
        };
        let src_mask = batch.src_mask();
        let tgt_mask = batch.tgt_mask();
        let src_drop = drop.mask((batch.src.len(), self.config.width));
        let mut x = src_drop.apply(self.src_embed.forward(&batch.src, batch.src_len));
        let mut encoder = Vec::with_capacity(self.encoder.len());
        for layer in &self.encoder {
            let (y, c) = layer.forward(&x, batch.size, &src_mask, &mut drop);
            encoder.push(c);
            x = y;
        }
        let memory = x;
        let tgt_drop = drop.mask((batch.tgt_in.len(), self.config.width));
        let mut h = tgt_drop.apply(self.tgt_embed.forward(&batch.tgt_in, batch.tgt_len));
        let mut decoder = Vec::with_capacity(self.decoder.len());
        for layer in &self.decoder {
            let (y, c) = layer.forward(&h, &memory, batch.size, &tgt_mask, &src_mask, &mut drop);
            decoder.push(c);
            h = y;
        }
        let logits = self.projection.forward(&h);
        (
            log_softmax(logits),
            ForwardCache {
                src_drop,
                tgt_drop,
                encoder,
                decoder,
                decoder_out: h,
            },
        )
    }

    /// Mean token negative log-likelihood and exact parameter gradients.
    pub fn loss_and_gradients(
        &self,
        batch: &Batch,
        rng: Option<&mut ChaCha8Rng>,
    ) -> (F, Transformer<F>) {
        let (log_probs, cache) = self.forward(batch, rng);
        let loss = nll_loss(&log_probs, &batch.tgt_out);
        let mut grad = self.zeros_like();
        let count = batch.target_tokens().max(1);
        let inv = F::one() / F::from_usize(count).unwrap();
        // d loss / d logits = (softmax - one_hot) / count on non-pad rows.
        let mut dlogits = log_probs.mapv(|v| v.exp() * inv);
        for (r, &gold) in batch.tgt_out.iter().enumerate() {
            if gold == PAD_ID {
                dlogits.row_mut(r).fill(F::zero());
            } else {
                dlogits[[r, gold]] -= inv;
            }
        }
        let mut dh = self
            .projection
            .backward(&cache.decoder_out, &dlogits, &mut grad.projection);
        let mut dmemory: Array2<F> = Array2::zeros((batch.src.len(), self.config.width));
        for (i, layer) in self.decoder.iter().enumerate().rev() {
            let (dx, dmem) =
                layer.backward(&cache.decoder[i], &dh, batch.size, &mut grad.decoder[i]);
            dh = dx;
            dmemory += &dmem;
        }
        let dh = cache.tgt_drop.apply(dh);
        self.tgt_embed
            .backward(&batch.tgt_in, &dh, &mut grad.tgt_embed);
        let mut dx = dmemory;
        for (i, layer) in self.encoder.iter().enumerate().rev() {
            dx = layer.backward(&cache.encoder[i], &dx, batch.size, &mut grad.encoder[i]);
        }
        let dx = cache.src_drop.apply(dx);
        self.src_embed
            .backward(&batch.src, &dx, &mut grad.src_embed);
        (loss, grad)
    }

    /// Evaluation-mode loss.
    pub fn loss(&self, batch: &Batch) -> F {
        let (log_probs, _) = self.forward(batch, None);
        nll_loss(&log_probs, &batch.tgt_out)
    }

    /// Next-token log-probabilities at every position of `tgt_prefix`,
    /// shape `(tgt_prefix.len(), tgt_vocab)`.
    pub fn log_probs(&self, src: &[usize], tgt_prefix: &[usize]) -> Array2<F> {
        let batch = Batch::for_prefixes(src, &[tgt_prefix.to_vec()]);
        self.forward(&batch, None).0
    }

    /// Log-probabilities of the token following each prefix. All prefixes
    /// share one source sequence.
    pub fn next_token_log_probs(&self, src: &[usize], prefixes: &[Vec<usize>]) -> Array2<F> {
        let batch = Batch::for_prefixes(src, prefixes);
        let (lp, _) = self.forward(&batch, None);
        let mut out = Array2::zeros((prefixes.len(), self.tgt_vocab));
        for (b, p) in prefixes.iter().enumerate() {
            out.row_mut(b)
                .assign(&lp.row(b * batch.tgt_len + p.len() - 1));
        }
        out
    }
}

pub fn log_softmax<F: Real>(mut logits: Array2<F>) -> Array2<F> {
    for mut row in logits.rows_mut() {
        let max = row.fold(F::neg_infinity(), |m, &v| m.max(v));
        let lse = row.fold(F::zero(), |acc, &v| acc + (v - max).exp()).ln() + max;
        row.mapv_inplace(|v| v - lse);
    }
    logits
}

/// Mean negative log-likelihood over non-pad gold positions.
pub fn nll_loss<F: Real>(log_probs: &Array2<F>, gold: &[usize]) -> F {
    let mut total = F::zero();
    let mut count = 0usize;
    for (row, &g) in log_probs.axis_iter(Axis(0)).zip(gold) {
        if g != PAD_ID {
            total -= row[g];
            count += 1;
        }
    }
    if count == 0 {
        F::zero()
    } else {
        total / F::from_usize(count).unwrap()
    }
}
