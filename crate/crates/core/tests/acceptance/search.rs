//! Beam search against exhaustive enumeration, and memorisation of a small
//! corpus.

use charnaming::neural::train::{Pair, Trainer};
use charnaming::neural::{beam_search, greedy_decode, TrainConfig, Transformer, TransformerConfig};
use charnaming::seqcodec::{BEGIN_ID, END_ID, PAD_ID};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sequence_score(
    model: &Transformer<f64>,
    src: &[usize],
    tokens: &[usize],
    complete: bool,
) -> f64 {
    let mut prefix = vec![BEGIN_ID];
    prefix.extend_from_slice(tokens);
    let lp = model.log_probs(src, &prefix);
    let mut next: Vec<usize> = tokens.to_vec();
    if complete {
        next.push(END_ID);
    }
    next.iter().enumerate().map(|(i, &t)| lp[[i, t]]).sum()
}

/// Every complete sequence of at most `max_len` steps, best first.
fn exhaustive(model: &Transformer<f64>, src: &[usize], max_len: usize) -> Vec<(f64, Vec<usize>)> {
    let symbols: Vec<usize> = (0..model.tgt_vocab)
        .filter(|&t| t != PAD_ID && t != BEGIN_ID && t != END_ID)
        .collect();
    let mut all = Vec::new();
    let mut frontier: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..max_len {
        let mut grown = Vec::new();
        for seq in &frontier {
            all.push((sequence_score(model, src, seq, true), seq.clone()));
            for &s in &symbols {
                let mut longer = seq.clone();
                longer.push(s);
                grown.push(longer);
            }
        }
        frontier = grown;
    }
    all.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    all
}

pub fn wide_beam_finds_the_exhaustive_optimum() {
    let cfg = TransformerConfig {
        width: 8,
        ff_width: 16,
        ..TransformerConfig::tiny()
    };
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vocab = rng.gen_range(4..=6);
        let max_len = rng.gen_range(2..=4);
        let model: Transformer<f64> = Transformer::new(cfg.clone(), 7, vocab, seed);
        let src: Vec<usize> = (0..3).map(|_| rng.gen_range(4..7)).collect();

        let width = vocab.pow(max_len as u32);
        let beam = beam_search(&model, &src, width, max_len);
        let best = beam
            .iter()
            .find(|h| h.complete)
            .expect("some complete hypothesis");
        let oracle = &exhaustive(&model, &src, max_len)[0];
        assert_eq!(best.tokens, oracle.1, "seed {seed}");
        approx::assert_abs_diff_eq!(best.score, oracle.0, epsilon = 1e-9);
        approx::assert_abs_diff_eq!(
            best.score,
            sequence_score(&model, &src, &best.tokens, true),
            epsilon = 1e-9
        );
    }
}

pub fn narrow_beam_never_beats_the_optimum() {
    let model: Transformer<f64> = Transformer::new(TransformerConfig::tiny(), 7, 6, 5);
    let oracle = exhaustive(&model, &[4, 5], 4)[0].0;
    for w in 1..4 {
        let best = beam_search(&model, &[4, 5], w, 4)
            .into_iter()
            .find(|h| h.complete)
            .map_or(f64::NEG_INFINITY, |h| h.score);
        assert!(best <= oracle + 1e-12);
    }
}

/// Exact-sequence greedy accuracy on the training corpus.
pub fn memorises_fifty_pairs() -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    // Distinct sources: identical inputs with different targets cannot both be memorised.
    let mut seen = std::collections::HashSet::new();
    let mut pairs: Vec<Pair> = Vec::new();
    while pairs.len() < 50 {
        let src: Vec<usize> = (0..rng.gen_range(2..=3))
            .map(|_| rng.gen_range(4..12))
            .collect();
        let mut tgt = vec![BEGIN_ID];
        tgt.extend((0..rng.gen_range(1..=3)).map(|_| rng.gen_range(4..10)));
        tgt.push(END_ID);
        if seen.insert(src.clone()) {
            pairs.push((src, tgt));
        }
    }

    let trainer = Trainer::new(
        TransformerConfig {
            encoder_layers: 2,
            decoder_layers: 2,
            heads: 4,
            width: 32,
            ff_width: 64,
            ..TransformerConfig::tiny()
        },
        TrainConfig {
            max_epochs: 200,
            batch_size: 16,
            warmup_steps: 800,
            patience: 200,
            ..TrainConfig::default()
        },
    );
    let outcome = trainer.fit::<f32>(&pairs, &[], 12, 10).unwrap();
    let exact = pairs
        .iter()
        .filter(|(src, tgt)| greedy_decode(&outcome.model, src, 6).tokens == tgt[1..tgt.len() - 1])
        .count();
    let rate = exact as f64 / pairs.len() as f64;
    assert!(
        rate > 0.95,
        "exact-sequence accuracy {rate} after {} epochs",
        outcome.history.len()
    );
    rate
}
