//! The batched transformer forward pass against a scalar reimplementation
//! that reads nothing but the named parameter tensors.

use std::collections::HashMap;

use charnaming::neural::{Transformer, TransformerConfig};
use ndarray::Array2;

type Mat = Vec<Vec<f64>>;

struct Params(HashMap<String, Array2<f64>>);

impl Params {
    fn of(model: &Transformer<f64>) -> Params {
        Params(
            model
                .named_parameters()
                .into_iter()
                .map(|(n, a)| (n, a.clone()))
                .collect(),
        )
    }

    fn get(&self, name: &str) -> &Array2<f64> {
        self.0
            .get(name)
            .unwrap_or_else(|| panic!("no tensor {name}"))
    }

    fn linear(&self, prefix: &str, x: &Mat) -> Mat {
        let w = self.get(&format!("{prefix}.w"));
        let b = self.get(&format!("{prefix}.b"));
        x.iter()
            .map(|row| {
                (0..w.ncols())
                    .map(|j| b[[0, j]] + (0..w.nrows()).map(|i| row[i] * w[[i, j]]).sum::<f64>())
                    .collect()
            })
            .collect()
    }

    fn norm(&self, prefix: &str, x: &Mat) -> Mat {
        let g = self.get(&format!("{prefix}.gain"));
        let b = self.get(&format!("{prefix}.bias"));
        x.iter()
            .map(|row| {
                let n = row.len() as f64;
                let mu = row.iter().sum::<f64>() / n;
                let var = row.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n;
                row.iter()
                    .enumerate()
                    .map(|(j, v)| (v - mu) / (var + 1e-5).sqrt() * g[[0, j]] + b[[0, j]])
                    .collect()
            })
            .collect()
    }

    fn attention(&self, prefix: &str, xq: &Mat, xkv: &Mat, heads: usize, causal: bool) -> Mat {
        let q = self.linear(&format!("{prefix}.query"), xq);
        let k = self.linear(&format!("{prefix}.key"), xkv);
        let v = self.linear(&format!("{prefix}.value"), xkv);
        let width = q[0].len();
        let dk = width / heads;
        let mut ctx = vec![vec![0.0; width]; xq.len()];
        for h in 0..heads {
            let cols = h * dk..(h + 1) * dk;
            for i in 0..xq.len() {
                let keys = if causal { i + 1 } else { xkv.len() };
                let scores: Vec<f64> = (0..keys)
                    .map(|j| {
                        cols.clone().map(|c| q[i][c] * k[j][c]).sum::<f64>() / (dk as f64).sqrt()
                    })
                    .collect();
                let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let z: f64 = scores.iter().map(|s| (s - max).exp()).sum();
                for (j, s) in scores.iter().enumerate() {
                    let p = (s - max).exp() / z;
                    for c in cols.clone() {
                        ctx[i][c] += p * v[j][c];
                    }
                }
            }
        }
        self.linear(&format!("{prefix}.output"), &ctx)
    }

    fn feed_forward(&self, prefix: &str, x: &Mat) -> Mat {
        let h: Mat = self
            .linear(&format!("{prefix}.inner"), x)
            .into_iter()
            .map(|r| r.into_iter().map(|v| v.max(0.0)).collect())
            .collect();
        self.linear(&format!("{prefix}.outer"), &h)
    }

    fn embed(&self, name: &str, ids: &[usize]) -> Mat {
        let t = self.get(&format!("{name}.table"));
        let d = t.ncols();
        ids.iter()
            .enumerate()
            .map(|(pos, &id)| {
                (0..d)
                    .map(|c| {
                        let angle = pos as f64 / 10000f64.powf((c - c % 2) as f64 / d as f64);
                        let pe = if c % 2 == 0 { angle.sin() } else { angle.cos() };
                        t[[id, c]] * (d as f64).sqrt() + pe
                    })
                    .collect()
            })
            .collect()
    }
}

fn add(a: &Mat, b: &Mat) -> Mat {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + q).collect())
        .collect()
}

fn naive_log_probs(model: &Transformer<f64>, src: &[usize], prefix: &[usize]) -> Mat {
    let p = Params::of(model);
    let cfg = &model.config;
    let mut x = p.embed("src_embed", src);
    for i in 0..cfg.encoder_layers {
        let a = p.attention(&format!("encoder.{i}.attention"), &x, &x, cfg.heads, false);
        x = p.norm(&format!("encoder.{i}.norm1"), &add(&x, &a));
        let f = p.feed_forward(&format!("encoder.{i}.feed_forward"), &x);
        x = p.norm(&format!("encoder.{i}.norm2"), &add(&x, &f));
    }
    let memory = x;
    let mut y = p.embed("tgt_embed", prefix);
    for i in 0..cfg.decoder_layers {
        let a = p.attention(
            &format!("decoder.{i}.self_attention"),
            &y,
            &y,
            cfg.heads,
            true,
        );
        y = p.norm(&format!("decoder.{i}.norm1"), &add(&y, &a));
        let c = p.attention(
            &format!("decoder.{i}.cross_attention"),
            &y,
            &memory,
            cfg.heads,
            false,
        );
        y = p.norm(&format!("decoder.{i}.norm2"), &add(&y, &c));
        let f = p.feed_forward(&format!("decoder.{i}.feed_forward"), &y);
        y = p.norm(&format!("decoder.{i}.norm3"), &add(&y, &f));
    }
    p.linear("projection", &y)
        .into_iter()
        .map(|logits| {
            let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
            logits.into_iter().map(|l| l - lse).collect()
        })
        .collect()
}

fn micro(seed: u64) -> Transformer<f64> {
    let cfg = TransformerConfig {
        encoder_layers: 2,
        decoder_layers: 2,
        heads: 2,
        width: 4,
        ff_width: 6,
        dropout: 0.0,
        max_decode_len: 8,
    };
    Transformer::new(cfg, 9, 7, seed)
}

#[test]
fn forward_pass_matches_scalar_oracle() {
    for seed in 0..10 {
        let model = micro(seed);
        let src = [1, 4 + seed as usize % 5, 5, 2];
        let prefix = [1, 3 + seed as usize % 4, 4];
        let got = model.log_probs(&src, &prefix);
        let want = naive_log_probs(&model, &src, &prefix);
        assert_eq!(got.dim(), (prefix.len(), 7));
        for (r, row) in want.iter().enumerate() {
            for (c, w) in row.iter().enumerate() {
                approx::assert_abs_diff_eq!(got[[r, c]], *w, epsilon = 1e-10);
            }
        }
    }
}

#[test]
fn padded_batch_rows_match_unpadded_sequences() {
    // A short sequence batched next to a longer one must score as if alone.
    let model = micro(3);
    let long = model.next_token_log_probs(&[1, 4, 5, 6, 7, 2], &[vec![1, 3, 4, 5]]);
    let short_alone = model.next_token_log_probs(&[1, 4, 2], &[vec![1]]);
    let both = model.next_token_log_probs(&[1, 4, 2], &[vec![1], vec![1, 3, 4]]);
    for c in 0..7 {
        approx::assert_abs_diff_eq!(both[[0, c]], short_alone[[0, c]], epsilon = 1e-12);
    }
    assert!(long.iter().all(|v| v.is_finite()));
}
