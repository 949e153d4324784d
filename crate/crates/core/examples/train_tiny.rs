//! Train a small transformer on a synthetic lexicon, save a checkpoint and
//! name the held-out characters.

use charnaming::eval::{responder_accuracy, AnswerSet, ResponderKind};
use charnaming::neural::{Checkpoint, TrainConfig, TransformerConfig};
use charnaming::runner::{predict, train_model};
use charnaming::seqcodec::{ModelVariant, SequenceCodec};
use charnaming::synth::{synthetic_lexicon, SynthConfig};

fn main() -> charnaming::Result<()> {
    let lex = synthetic_lexicon(&SynthConfig::default())?;
    let variant: ModelVariant = "exp2/all/base/-tone/-shuffle".parse()?;
    let model = TransformerConfig {
        width: 32,
        ff_width: 64,
        ..TransformerConfig::tiny()
    };
    let train = TrainConfig {
        max_epochs: 15,
        warmup_steps: 100,
        ..TrainConfig::default()
    };

    let ck = train_model(&lex, &variant, 7, &model, &train)?;
    for r in &ck.header.history {
        println!(
            "epoch {:>2}  train {:.3}  dev {:.3}  lr {:.2e}",
            r.epoch, r.train_loss, r.dev_loss, r.learning_rate
        );
    }
    println!(
        "best epoch {}, {} parameters",
        ck.header.best_epoch,
        ck.model.parameter_count()
    );

    let path = std::env::temp_dir().join("charnaming-tiny.ckpt");
    ck.save(&path)?;
    let ck = Checkpoint::load(&path)?;
    println!("checkpoint written to {}", path.display());

    let codec = SequenceCodec::new(&lex);
    let rows = predict(&lex, &ck, &variant, lex.test_set(), 3)?;
    let mut answers = AnswerSet::new("tiny", ResponderKind::Model);
    for r in rows.iter().filter(|r| r.rank == 0) {
        let toks: Vec<String> = r.tokens.split(' ').map(String::from).collect();
        let parsed = codec.decode_output(&toks, &variant);
        let gold: Vec<String> = lex
            .entry(&r.glyph)
            .unwrap()
            .pinyins
            .iter()
            .map(|p| p.to_string())
            .collect();
        println!("{}  {:<28} gold {}", r.glyph, r.tokens, gold.join(","));
        if let Some(p) = parsed.pinyin {
            answers.answers.insert(r.glyph.clone(), p);
        }
    }
    println!(
        "test accuracy {:.1}%",
        100.0 * responder_accuracy(&answers, &lex)
    );
    Ok(())
}
