//! Beam search versus greedy decoding on a model fitted to a toy mapping.

use charnaming::neural::train::{Pair, Trainer};
use charnaming::neural::{beam_search, greedy_decode, TrainConfig, TransformerConfig};

fn main() -> charnaming::Result<()> {
    // Source ids 4..8 map to the reversed sequence; targets carry Begin=1, End=2.
    let pairs: Vec<Pair> = (4..8)
        .flat_map(|a| (4..8).map(move |b| (vec![a, b], vec![1, b, a, 2])))
        .collect();
    let trainer = Trainer::new(
        TransformerConfig::tiny(),
        TrainConfig {
            max_epochs: 150,
            batch_size: 4,
            warmup_steps: 40,
            patience: 150,
            ..TrainConfig::default()
        },
    );
    let outcome = trainer.fit::<f32>(&pairs, &[], 8, 8)?;
    let model = outcome.model;

    for src in [[4, 5], [7, 6], [5, 5]] {
        let greedy = greedy_decode(&model, &src, 6);
        println!(
            "source {src:?}  greedy {:?} ({:.3})",
            greedy.tokens, greedy.score
        );
        for (rank, h) in beam_search(&model, &src, 3, 6).iter().enumerate() {
            println!(
                "  beam #{rank}: {:?} log-prob {:.3} complete {}",
                h.tokens, h.score, h.complete
            );
        }
    }
    Ok(())
}
