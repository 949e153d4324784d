//! Same inputs and seed, same bytes: checkpoints, predictions and matrix
//! outputs do not depend on repetition or on the number of parallel jobs.

use std::fs;

use charnaming::lexicon::Lexicon;
use charnaming::neural::{TrainConfig, TransformerConfig};
use charnaming::runner::{derive_seed, predict, run_matrix, train_model, ExperimentPlan};
use charnaming::seqcodec::{InputMode, ModelVariant};
use charnaming::synth::{synthetic_lexicon, SynthConfig};

fn lexicon() -> Lexicon {
    synthetic_lexicon(&SynthConfig {
        characters: 120,
        phonetic_radicals: 10,
        semantic_radicals: 6,
        test_characters: 5,
        seed: 5,
        ..SynthConfig::default()
    })
    .unwrap()
}

fn train_config() -> TrainConfig {
    TrainConfig {
        max_epochs: 4,
        warmup_steps: 20,
        ..TrainConfig::default()
    }
}

pub fn repeated_training_is_bit_identical() {
    let lex = lexicon();
    let cfg = TransformerConfig {
        dropout: 0.1,
        ..TransformerConfig::tiny()
    };
    for spec in [
        "exp1/all/label_sr/+tone/+shuffle",
        "exp2/all+freq/base/-tone/-shuffle",
    ] {
        let v: ModelVariant = spec.parse().unwrap();
        let seed = derive_seed(0, &v, 1);
        let a = train_model(&lex, &v, seed, &cfg, &train_config()).unwrap();
        let b = train_model(&lex, &v, seed, &cfg, &train_config()).unwrap();
        assert_eq!(a.to_bytes().unwrap(), b.to_bytes().unwrap(), "{spec}");
        let pa = predict(&lex, &a, &v, lex.test_set(), 3).unwrap();
        let pb = predict(&lex, &b, &v, lex.test_set(), 3).unwrap();
        assert_eq!(pa, pb);

        let other = train_model(&lex, &v, seed + 1, &cfg, &train_config()).unwrap();
        assert_ne!(a.to_bytes().unwrap(), other.to_bytes().unwrap());
    }
}

pub fn matrix_outputs_do_not_depend_on_job_count() {
    let lex = lexicon();
    let tmp = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for jobs in [1, 3] {
        let mut plan =
            ExperimentPlan::new(InputMode::Ortho, &tmp.path().join(format!("jobs{jobs}")));
        plan.variants = ModelVariant::expand(
            "all/base/*/-shuffle,high/label_m/-tone/+shuffle",
            InputMode::Ortho,
        )
        .unwrap();
        plan.seeds = 2;
        plan.jobs = jobs;
        plan.model = TransformerConfig::tiny();
        plan.train = train_config();
        let outcome = run_matrix(&lex, &plan).unwrap();
        assert_eq!(outcome.failed(), 0);
        let files: Vec<(String, Vec<u8>, String)> = outcome
            .entries
            .iter()
            .map(|e| {
                (
                    e.cache_key.clone(),
                    fs::read(plan.out_dir.join(&e.checkpoint)).unwrap(),
                    fs::read_to_string(plan.out_dir.join(&e.predictions)).unwrap(),
                )
            })
            .collect();
        outputs.push(files);
    }
    assert_eq!(outputs[0].len(), 6);
    assert_eq!(outputs[0], outputs[1]);
}
