//! Acceptance criteria, one verdict line each.
//!
//! The property criteria run everywhere. Reproduction criteria need the
//! released dataset: set `CHARNAMING_DATA` to a directory with
//! `characters.tsv`, `radicals.tsv`, `test_chars.txt` and
//! `human_answers.csv`. The model-side ones also read `metrics.json` and the
//! manifests of a completed matrix under `$CHARNAMING_OUT`. Criteria whose
//! inputs are missing print SKIP with the reason and do not fail the run.

mod data;
mod determinism;
mod gradient_check;
mod oracles;
mod round_trips;
mod search;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;

use charnaming::lexicon::Lexicon;
use charnaming::seqcodec::{ModelVariant, SequenceCodec};

use data::{Dataset, MatrixResults};

pub enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Criterion<'a> = Box<dyn FnOnce() -> Verdict + 'a>;

fn judge(f: impl FnOnce() -> Verdict) -> Verdict {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(v) => v,
        Err(e) => Verdict::Fail(
            e.downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()),
        ),
    }
}

fn fixture(name: &str) -> Lexicon {
    Lexicon::load_dir(
        &PathBuf::from(env!("CARGO_MANIFEST_DIR"))
            .join("data/fixtures")
            .join(name),
    )
    .unwrap()
}

fn worked_examples() -> Verdict {
    let qing = fixture("qing");
    assert_eq!(format!("{:.2}", qing.saliency("青").unwrap()), "0.33");
    assert_eq!(
        format!("{:.2}", qing.consistency(qing.entry("精").unwrap())),
        "0.25"
    );

    let shan = fixture("shan");
    let codec = SequenceCodec::new(&shan);
    let lao = shan.entry("烙").unwrap();
    let luo = &lao.pinyins[0];
    let v = |s: &str| s.parse::<ModelVariant>().unwrap();
    let input = |s: &str| codec.encode_input(lao, &v(s)).join(", ");
    let output = |s: &str| codec.encode_output(lao, luo, &v(s)).join(", ");
    let expected = [
        (input("exp1/all/base/-tone/-shuffle"), "Begin, 火, 各, End"),
        (output("exp1/all/base/-tone/-shuffle"), "Begin, l, uo, End"),
        (
            output("exp1/all/label_m/-tone/-shuffle"),
            "Begin, right, l, uo, End",
        ),
        (
            output("exp1/all/label_s/-tone/-shuffle"),
            "Begin, left, l, uo, End",
        ),
        (
            output("exp1/all/label_mr/-tone/-shuffle"),
            "Begin, right, irregular, l, uo, End",
        ),
        (
            output("exp1/all/label_sr/-tone/-shuffle"),
            "Begin, left, rhyming, l, uo, End",
        ),
        (
            input("exp1/all+freq/base/-tone/-shuffle"),
            "Begin, 火, 各, high, End",
        ),
        (output("exp1/all/base/-tone/+shuffle"), "Begin, uo, l, End"),
        (
            output("exp1/all/base/+tone/-shuffle"),
            "Begin, l, uo, 4, End",
        ),
        (
            input("exp2/all/base/-tone/-shuffle"),
            "Begin, 火, h, uo, 3, End, 各, g, e, 4, End",
        ),
    ];
    for (got, want) in &expected {
        assert_eq!(got, want);
    }
    Verdict::Pass(format!(
        "青 saliency, 精 consistency, {} 烙 encodings",
        expected.len()
    ))
}

fn with_dataset(
    data: Option<&Dataset>,
    f: impl FnOnce(&Dataset) -> charnaming::Result<Verdict>,
) -> Verdict {
    match data {
        None => Verdict::Skip(format!(
            "{} not set to the released dataset",
            data::DATA_ENV
        )),
        Some(d) => f(d).unwrap_or_else(|e| Verdict::Fail(e.to_string())),
    }
}

fn with_matrix(
    results: &Result<MatrixResults, String>,
    f: impl FnOnce(&MatrixResults) -> Verdict,
) -> Verdict {
    match results {
        Ok(r) => f(r),
        Err(why) => Verdict::Skip(why.clone()),
    }
}

fn main() -> ExitCode {
    let dataset = Dataset::from_env();
    let matrix = match &dataset {
        Some(d) => MatrixResults::load(d),
        None => Err(format!(
            "{} not set to the released dataset",
            data::DATA_ENV
        )),
    };

    let criteria: Vec<(&str, Criterion)> = vec![
        (
            "lexicon statistics",
            Box::new(|| with_dataset(dataset.as_ref(), data::lexicon_statistics)),
        ),
        (
            "test-set validation",
            Box::new(|| with_dataset(dataset.as_ref(), data::test_selection)),
        ),
        (
            "human answer statistics",
            Box::new(|| with_dataset(dataset.as_ref(), data::human_statistics)),
        ),
        ("worked micro-examples", Box::new(worked_examples)),
        (
            "base model accuracy",
            Box::new(|| {
                with_matrix(&matrix, |r| {
                    data::base_accuracy(r).unwrap_or_else(|e| Verdict::Fail(e.to_string()))
                })
            }),
        ),
        (
            "directional model claims",
            Box::new(|| with_matrix(&matrix, data::directional_claims)),
        ),
        (
            "model-human overlap gain",
            Box::new(|| with_matrix(&matrix, data::overlap_gain)),
        ),
        (
            "gradient check",
            Box::new(|| {
                let plain = gradient_check::gradients_match_finite_differences();
                let dropout = gradient_check::gradients_match_with_fixed_dropout_masks();
                Verdict::Pass(format!("max relative error {:.1e}", plain.max(dropout)))
            }),
        ),
        (
            "overfit sanity",
            Box::new(|| {
                let rate = search::memorises_fifty_pairs();
                Verdict::Pass(format!("{:.0}% exact on 50 pairs", 100.0 * rate))
            }),
        ),
        (
            "beam search oracle",
            Box::new(|| {
                search::wide_beam_finds_the_exhaustive_optimum();
                search::narrow_beam_never_beats_the_optimum();
                Verdict::Pass("20 models match exhaustive search".into())
            }),
        ),
        (
            "oracle equivalence",
            Box::new(|| {
                oracles::regularity_matches_string_segmentation();
                oracles::saliency_matches_full_scan();
                oracles::consistency_matches_full_scan();
                oracles::overlap_matches_counting();
                oracles::answer_types_and_profiles_match_counting();
                oracles::correlations_match_textbook_formulas();
                Verdict::Pass(format!("6 statistics x {} cases", oracles::CASES))
            }),
        ),
        (
            "round trips",
            Box::new(|| {
                round_trips::pinyin_text_round_trips_over_the_inventory();
                round_trips::there_are_eighty_variants_per_experiment_and_names_round_trip();
                round_trips::output_sequences_decode_to_their_reading_and_labels();
                round_trips::vocabulary_ids_round_trip_every_training_sequence();
                round_trips::lexicon_and_predictions_round_trip_through_files();
                Verdict::Pass("inventory x tones, 100 entries x 160 variants".into())
            }),
        ),
        (
            "determinism",
            Box::new(|| {
                determinism::repeated_training_is_bit_identical();
                determinism::matrix_outputs_do_not_depend_on_job_count();
                Verdict::Pass("checkpoints and predictions bit-identical".into())
            }),
        ),
    ];

    let mut failed = 0;
    for (name, check) in criteria {
        let (tag, detail) = match judge(check) {
            Verdict::Pass(d) => ("PASS", d),
            Verdict::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Verdict::Skip(d) => ("SKIP", d),
        };
        println!("{tag}  {name}: {detail}");
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
