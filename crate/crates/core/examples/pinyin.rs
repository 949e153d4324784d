//! Parse, normalise and compare pinyin syllables.

use charnaming::phonology::{
    classify_regularity, format_pinyin, normalize_spelling, phonetic_distance, Pinyin,
};

fn main() -> charnaming::Result<()> {
    for raw in ["qing1", "zhuang4", "er2", "a5", "lǜ", "nüe4", "xu:3"] {
        let p = Pinyin::parse(&normalize_spelling(raw))?;
        println!(
            "{raw:>8} -> onset {:<3} final {:<5} tone {}  ({})",
            p.onset,
            p.fin,
            p.tone.value(),
            format_pinyin(&p, true)
        );
    }

    let radical = Pinyin::parse("qing1")?;
    println!();
    for reading in ["qing2", "qian4", "jing1", "cai1"] {
        let p = Pinyin::parse(reading)?;
        println!(
            "{reading} against qing1: {:<12} distance {}",
            classify_regularity(&p, &radical).token(),
            phonetic_distance(&p, &radical)
        );
    }
    Ok(())
}
