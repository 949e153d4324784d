//! Encode/decode round trips over every entry of a synthetic lexicon and
//! every model variant, plus text and file round trips.

use charnaming::lexicon::Lexicon;
use charnaming::phonology::{format_pinyin, RegularityType, Tone};
use charnaming::runner::{prepare_data, read_predictions, write_predictions, PredictionRow};
use charnaming::seqcodec::{InputMode, ModelVariant, SequenceCodec, UNK};
use charnaming::synth::{synthetic_lexicon, SynthConfig};

fn fixture() -> Lexicon {
    synthetic_lexicon(&SynthConfig {
        characters: 100,
        phonetic_radicals: 12,
        semantic_radicals: 6,
        test_characters: 6,
        seed: 3,
        ..SynthConfig::default()
    })
    .unwrap()
}

fn every_variant() -> Vec<ModelVariant> {
    let mut v = ModelVariant::all(InputMode::Ortho);
    v.extend(ModelVariant::all(InputMode::OrthoPinyin));
    v
}

pub fn there_are_eighty_variants_per_experiment_and_names_round_trip() {
    let all = every_variant();
    assert_eq!(all.len(), 160);
    for v in &all {
        assert_eq!(v.to_string().parse::<ModelVariant>().unwrap(), *v);
    }
}

pub fn output_sequences_decode_to_their_reading_and_labels() {
    let lex = fixture();
    assert_eq!(lex.entries().len(), 100);
    let codec = SequenceCodec::new(&lex);
    for v in every_variant() {
        for e in lex.entries() {
            for p in &e.pinyins {
                let seq = codec.encode_output(e, p, &v);
                let parsed = codec.decode_output(&seq, &v);
                assert!(parsed.valid, "{v} {} {seq:?}", e.glyph);
                let want = if v.with_tone {
                    p.clone()
                } else {
                    p.with_tone(Tone::NEUTRAL)
                };
                assert_eq!(parsed.pinyin.as_ref(), Some(&want));
                assert_eq!(
                    parsed.position_label.is_some(),
                    v.label_scheme.has_position()
                );
                assert_eq!(
                    parsed.regularity_label.is_some(),
                    v.label_scheme.has_regularity()
                );
                if let (Some(side), Some(r)) = (parsed.position_label, parsed.regularity_label) {
                    let radical = lex.radical_pinyin(e.radical(side)).unwrap();
                    let same = p.same_syllable(radical);
                    assert_eq!(r == RegularityType::Regular, same);
                }
            }
        }
    }
}

pub fn vocabulary_ids_round_trip_every_training_sequence() {
    let lex = fixture();
    let sets = lex.build_training_sets();
    let codec = SequenceCodec::new(&lex);
    for v in every_variant() {
        let data = prepare_data(&lex, &v);
        let examples = codec.examples(sets.get(v.training_set()), &v);
        assert!(!examples.is_empty());
        for ex in &examples {
            assert_eq!(
                data.tgt_vocab.decode(&data.tgt_vocab.encode(&ex.target)),
                ex.target
            );
            let src = data.src_vocab.decode(&data.src_vocab.encode(&ex.source));
            for (a, b) in ex.source.iter().zip(&src) {
                assert!(a == b || b == UNK, "{v}: {a} became {b}");
            }
        }
    }
}

pub fn pinyin_text_round_trips_over_the_inventory() {
    let lex = fixture();
    let inv = lex.inventory();
    for syl in inv.syllables() {
        for t in Tone::ALL {
            let p =
                charnaming::phonology::parse_pinyin(&format!("{syl}{}", t.value()), inv).unwrap();
            let text = format_pinyin(&p, true);
            assert_eq!(
                charnaming::phonology::parse_pinyin(&text, inv).unwrap(),
                p,
                "{text}"
            );
        }
    }
}

pub fn lexicon_and_predictions_round_trip_through_files() {
    let tmp = tempfile::tempdir().unwrap();
    let lex = fixture();
    lex.write_dir(tmp.path()).unwrap();
    let back = Lexicon::load_dir(tmp.path()).unwrap();
    assert_eq!(back.entries(), lex.entries());
    assert_eq!(back.test_set(), lex.test_set());
    assert_eq!(back.fingerprint(), lex.fingerprint());

    let rows: Vec<PredictionRow> = lex
        .test_set()
        .iter()
        .enumerate()
        .map(|(i, g)| PredictionRow {
            variant: "exp1/all/base/-tone/-shuffle".into(),
            seed: i as u64,
            glyph: g.clone(),
            rank: i % 3,
            tokens: "Begin m a End".into(),
            score: -0.125 * i as f64,
        })
        .collect();
    let path = tmp.path().join("p.csv");
    write_predictions(&path, &rows).unwrap();
    assert_eq!(read_predictions(&path).unwrap(), rows);
}
