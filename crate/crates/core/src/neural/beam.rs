//! Beam search over target token ids.

use std::cmp::Ordering;

use super::{Real, Transformer};
use crate::seqcodec::{BEGIN_ID, END_ID, PAD_ID};

#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    /// Generated tokens, without `Begin` and without `End`.
    pub tokens: Vec<usize>,
    /// Sum of token log-probabilities, `End` included when `complete`.
    pub score: f64,
    /// False if the length limit cut the hypothesis off before `End`.
    pub complete: bool,
}

fn rank(a: &(f64, Vec<usize>), b: &(f64, Vec<usize>)) -> Ordering {
    b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1))
}

/// Beam search without length normalisation. `Pad` and `Begin` are never
/// generated. Equal scores are broken by the lexicographically smaller
/// token sequence. Returns at most `width` finished hypotheses, best first.
pub fn beam_search<F: Real>(
    model: &Transformer<F>,
    src: &[usize],
    width: usize,
    max_len: usize,
) -> Vec<Hypothesis> {
    assert!(width > 0, "beam width must be positive");
    let mut alive: Vec<(f64, Vec<usize>)> = vec![(0.0, vec![BEGIN_ID])];
    let mut finished: Vec<Hypothesis> = Vec::new();
    for step in 1..=max_len.max(1) {
        let prefixes: Vec<Vec<usize>> = alive.iter().map(|(_, p)| p.clone()).collect();
        let lp = model.next_token_log_probs(src, &prefixes);
        let mut candidates = Vec::with_capacity(alive.len() * model.tgt_vocab);
        for (b, (score, prefix)) in alive.iter().enumerate() {
            for tok in 0..model.tgt_vocab {
                if tok == PAD_ID || tok == BEGIN_ID {
                    continue;
                }
                let mut seq = prefix.clone();
                seq.push(tok);
                candidates.push((score + lp[[b, tok]].to_f64().unwrap(), seq));
            }
        }
        candidates.sort_by(rank);
        candidates.truncate(width);
        alive.clear();
        for (score, seq) in candidates {
            if *seq.last().unwrap() == END_ID {
                finished.push(Hypothesis {
                    tokens: seq[1..seq.len() - 1].to_vec(),
                    score,
                    complete: true,
                });
            } else if step == max_len.max(1) {
                finished.push(Hypothesis {
                    tokens: seq[1..].to_vec(),
                    score,
                    complete: false,
                });
            } else {
                alive.push((score, seq));
            }
        }
        // Scores only decrease, so nothing alive can overtake the best finished.
        let best_finished = finished
            .iter()
            .map(|h| h.score)
            .fold(f64::NEG_INFINITY, f64::max);
        if alive.is_empty() || alive.iter().all(|(s, _)| *s < best_finished) {
            break;
        }
    }
    finished.sort_by(|a, b| {
        b.complete
            .cmp(&a.complete)
            .then_with(|| rank(&(a.score, a.tokens.clone()), &(b.score, b.tokens.clone())))
    });
    finished.truncate(width);
    finished
}

pub fn greedy_decode<F: Real>(model: &Transformer<F>, src: &[usize], max_len: usize) -> Hypothesis {
    beam_search(model, src, 1, max_len).swap_remove(0)
}
