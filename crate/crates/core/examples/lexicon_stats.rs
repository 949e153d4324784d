//! Saliency, consistency and regularity on the 青 family of characters.

use std::path::PathBuf;

use charnaming::lexicon::Lexicon;
use charnaming::phonology::RegularityType;

fn main() -> charnaming::Result<()> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/fixtures/qing");
    let lex = Lexicon::load_dir(&dir)?;

    println!("saliency of 青: {:.2}", lex.saliency("青")?);
    for e in lex.entries() {
        let readings: Vec<String> = lex
            .regularity_of(e)
            .iter()
            .map(|(p, r)| format!("{p} {}", r.token()))
            .collect();
        println!(
            "{}  phonetic {} on the {:<5}  consistency {:.2}  {}",
            e.glyph,
            e.phonetic_radical(),
            e.phonetic_side.token(),
            lex.consistency(e),
            readings.join(", ")
        );
    }

    let sets = lex.build_training_sets();
    let dist = lex.regularity_distribution(&sets.all);
    println!();
    for (r, share) in RegularityType::ALL.iter().zip(dist) {
        println!("{:<13} {:5.1}%", r.token(), share);
    }
    let report = lex.validate_test_selection();
    println!(
        "test characters {:?}, selection warnings {}",
        lex.test_set(),
        report.violations.len()
    );
    Ok(())
}
