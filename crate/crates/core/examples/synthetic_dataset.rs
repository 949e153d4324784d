//! Write a synthetic dataset plus a human answer file, ready for the CLI:
//!
//! ```text
//! cargo run --example synthetic_dataset -- /tmp/synth
//! charnaming prepare --chars /tmp/synth/characters.tsv --radicals /tmp/synth/radicals.tsv \
//!     --tests /tmp/synth/test_chars.txt --human /tmp/synth/human_answers.csv
//! ```

use std::fmt::Write as _;
use std::path::PathBuf;

use charnaming::phonology::format_pinyin;
use charnaming::synth::{synthetic_lexicon, SynthConfig};

fn main() -> anyhow::Result<()> {
    let dir = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| "synthetic-data".into()),
    );
    let lex = synthetic_lexicon(&SynthConfig::default())?;
    lex.write_dir(&dir)?;

    let mut csv = String::from("participant_id,glyph,knows_character,answer_pinyin\n");
    for p in 0..8 {
        for (i, e) in lex.test_entries().enumerate() {
            let answer = if (i + p) % 3 == 0 {
                e.pinyins[0].clone()
            } else {
                lex.radical_pinyin(e.phonetic_radical()).unwrap().clone()
            };
            writeln!(csv, "p{p},{},0,{}", e.glyph, format_pinyin(&answer, true))?;
        }
    }
    std::fs::write(dir.join("human_answers.csv"), csv)?;
    println!(
        "wrote {} characters, {} test characters to {}",
        lex.entries().len(),
        lex.test_set().len(),
        dir.display()
    );
    Ok(())
}
