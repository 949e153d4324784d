//! A reduced experiment matrix end to end: prepare, train in parallel,
//! evaluate against simulated humans and render plots.
//!
//! Output goes to `$CHARNAMING_OUT` (default `./charnaming-out`). Running
//! the example twice reuses every cached run.

use charnaming::eval::{AnswerSet, ResponderKind};
use charnaming::neural::{TrainConfig, TransformerConfig};
use charnaming::runner::evaluate::{evaluate, headline};
use charnaming::runner::prepare::prepare;
use charnaming::runner::report::report;
use charnaming::runner::{default_output_root, run_matrix, ExperimentPlan};
use charnaming::seqcodec::{InputMode, ModelVariant};
use charnaming::synth::{synthetic_lexicon, SynthConfig};

fn main() -> charnaming::Result<()> {
    let out = default_output_root();
    let data = out.join("synthetic-data");
    synthetic_lexicon(&SynthConfig::default())?.write_dir(&data)?;
    let (lex, _) = prepare(
        &data.join("characters.tsv"),
        &data.join("radicals.tsv"),
        &data.join("test_chars.txt"),
        None,
        &out,
    )?;

    for mode in [InputMode::Ortho, InputMode::OrthoPinyin] {
        let mut plan = ExperimentPlan::new(mode, &out);
        plan.variants = ModelVariant::expand("all/*/-tone/-shuffle", mode)?;
        plan.seeds = 2;
        plan.model = TransformerConfig::tiny();
        plan.train = TrainConfig {
            max_epochs: 8,
            warmup_steps: 100,
            ..TrainConfig::default()
        };
        let outcome = run_matrix(&lex, &plan)?;
        println!(
            "{}: {} runs, {} trained, {} reused, {} failed",
            mode.token(),
            outcome.entries.len(),
            outcome.trained,
            outcome.reused,
            outcome.failed()
        );
    }

    // Simulated humans: always the phonetic radical's reading.
    let humans: Vec<AnswerSet> = (0..5)
        .map(|i| {
            let mut s = AnswerSet::new(format!("h{i}"), ResponderKind::Human);
            for e in lex.test_entries() {
                s.answers.insert(
                    e.glyph.clone(),
                    lex.radical_pinyin(e.phonetic_radical()).unwrap().clone(),
                );
            }
            s
        })
        .collect();
    let metrics = evaluate(&lex, &out, Some(&humans))?;
    print!("{}", headline(&metrics));
    for p in report(&out)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}
