//! Accuracy, answer types, overlap, correlations and cross-entropy for a
//! group of simulated responders.

use charnaming::eval::{compare, production_profile, AnswerSet, AnswerType, ResponderKind};
use charnaming::synth::{synthetic_lexicon, SynthConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Responders who read the phonetic radical with probability `p_radical`,
/// otherwise the semantic radical or the gold reading.
fn responders(
    lex: &charnaming::lexicon::Lexicon,
    n: usize,
    p_radical: f64,
    seed: u64,
) -> Vec<AnswerSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let mut s = AnswerSet::new(format!("r{i}"), ResponderKind::Human);
            for e in lex.test_entries() {
                let roll: f64 = rng.gen();
                let p = if roll < p_radical {
                    lex.radical_pinyin(e.phonetic_radical()).unwrap().clone()
                } else if roll < p_radical + 0.05 {
                    lex.radical_pinyin(e.semantic_radical()).unwrap().clone()
                } else {
                    e.pinyins[0].clone()
                };
                s.answers.insert(e.glyph.clone(), p);
            }
            s
        })
        .collect()
}

fn main() -> charnaming::Result<()> {
    let lex = synthetic_lexicon(&SynthConfig::default())?;
    let humans = responders(&lex, 20, 0.5, 1);
    let models = responders(&lex, 10, 0.6, 2);
    let report = compare(&lex, &models, Some(&humans))?;

    let h = report.human.as_ref().unwrap();
    println!(
        "human accuracy {:.1}% ({:.1}-{:.1})",
        100.0 * h.accuracy.mean,
        100.0 * h.accuracy.min,
        100.0 * h.accuracy.max
    );
    println!("human saliency effect r = {:?}", h.saliency_r);
    println!("model accuracy {:.1}%", 100.0 * report.model.accuracy.mean);

    let c = report.comparison.as_ref().unwrap();
    println!(
        "character accuracy model vs human: r {:?}, rho {:?}",
        c.accuracy_pearson, c.accuracy_spearman
    );
    println!(
        "model-human overlap {:.1}% over {} pairs",
        100.0 * c.overlap.mean,
        c.overlap.n
    );
    println!(
        "cross-entropy pooled {:.3}, per character {:.3}",
        c.cross_entropy.pooled, c.cross_entropy.per_character
    );

    let prof = production_profile(&humans, &lex);
    println!();
    println!("{:<13} human  model", "type");
    for (i, t) in AnswerType::FIVE.iter().enumerate() {
        println!(
            "{:<13} {:5.1}  {:5.1}",
            t.token(),
            100.0 * prof.type_means()[i],
            100.0 * report.model.type_means[i]
        );
    }
    Ok(())
}
