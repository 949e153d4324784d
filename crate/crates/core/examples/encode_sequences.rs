//! Model input and output sequences for 烙 under several variants, and
//! decoding of generated output back into pinyin.

use std::path::PathBuf;

use charnaming::lexicon::Lexicon;
use charnaming::seqcodec::{ModelVariant, SequenceCodec};

fn main() -> charnaming::Result<()> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/fixtures/shan");
    let lex = Lexicon::load_dir(&dir)?;
    let codec = SequenceCodec::new(&lex);
    let entry = lex.entry("烙").expect("fixture glyph");

    for spec in [
        "exp1/all/base/-tone/-shuffle",
        "exp1/all/label_s/-tone/-shuffle",
        "exp1/all/label_mr/+tone/-shuffle",
        "exp1/all+freq/label_sr/-tone/+shuffle",
        "exp2/all/base/+tone/-shuffle",
    ] {
        let v: ModelVariant = spec.parse()?;
        let input = codec.encode_input(entry, &v);
        let output = codec.encode_output(entry, &entry.pinyins[0], &v);
        let parsed = codec.decode_output(&output, &v);
        println!("{spec}");
        println!("  in : {}", input.join(", "));
        println!("  out: {}", output.join(", "));
        println!("  decoded: {:?}", parsed.pinyin.map(|p| p.to_string()));
    }
    Ok(())
}
