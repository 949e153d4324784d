use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use charnaming::eval::load_human_answers;
use charnaming::neural::{Checkpoint, TrainConfig, TransformerConfig};
use charnaming::runner::evaluate::evaluate;
use charnaming::runner::prepare::{prepare, render_summary, PreparedPaths};
use charnaming::runner::report::report;
use charnaming::runner::{default_output_root, predict, prepare_data, run_matrix, ExperimentPlan};
use charnaming::seqcodec::{InputMode, ModelVariant};
use charnaming::Error;

#[derive(Parser)]
#[command(
    version,
    about = "Unknown Chinese character naming: data, models and comparison with human answers"
)]
struct Cli {
    /// Output root; defaults to $CHARNAMING_OUT or ./charnaming-out.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// 2+2 layers, width 128, 4 heads.
    Full,
    /// One layer each side, width 16; for smoke tests.
    Tiny,
}

#[derive(Subcommand)]
enum Command {
    /// Validate the dataset, copy it into the output root and summarise it.
    Prepare {
        #[arg(long)]
        chars: PathBuf,
        #[arg(long)]
        radicals: PathBuf,
        #[arg(long)]
        tests: PathBuf,
        #[arg(long)]
        human: Option<PathBuf>,
    },
    /// Train and predict every (variant, seed) run of one experiment.
    Matrix {
        #[arg(long, value_parser = ["1", "2"])]
        exp: String,
        /// Comma-separated variant patterns; `*` matches any field.
        #[arg(long, default_value = "*/*/*/*")]
        variants: String,
        #[arg(long, default_value_t = 5)]
        seeds: usize,
        /// Parallel runs; defaults to the number of cores.
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long, default_value_t = 0)]
        master_seed: u64,
        #[arg(long, value_enum, default_value_t = Preset::Full)]
        preset: Preset,
        #[arg(long)]
        max_epochs: Option<usize>,
    },
    /// Compute metrics.json and report tables from completed runs.
    Evaluate {
        /// Human answers CSV; defaults to the prepared copy if present.
        #[arg(long)]
        human: Option<PathBuf>,
    },
    /// Render plots and a summary from metrics.json.
    Report,
    /// Beam hypotheses of one checkpoint for lexicon glyphs or LEFT+RIGHT pairs.
    Infer {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long = "glyph", required = true)]
        glyphs: Vec<String>,
    },
}

enum Failure {
    Validation(Error),
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Validation(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = cli.out.unwrap_or_else(default_output_root);
    match run(cli.command, &out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command, out: &Path) -> Result<(), Failure> {
    match command {
        Command::Prepare {
            chars,
            radicals,
            tests,
            human,
        } => {
            let (_, summary) = prepare(&chars, &radicals, &tests, human.as_deref(), out)?;
            print!("{}", render_summary(&summary));
        }
        Command::Matrix {
            exp,
            variants,
            seeds,
            jobs,
            master_seed,
            preset,
            max_epochs,
        } => {
            let lex = PreparedPaths::new(out).load_lexicon()?;
            let mode = if exp == "1" {
                InputMode::Ortho
            } else {
                InputMode::OrthoPinyin
            };
            let mut plan = ExperimentPlan::new(mode, out);
            plan.variants = ModelVariant::expand(&variants, mode)?;
            plan.seeds = seeds;
            plan.master_seed = master_seed;
            if let Some(j) = jobs {
                plan.jobs = j;
            }
            plan.model = match preset {
                Preset::Full => TransformerConfig::default(),
                Preset::Tiny => TransformerConfig::tiny(),
            };
            plan.train = TrainConfig {
                max_epochs: max_epochs.unwrap_or(TrainConfig::default().max_epochs),
                ..TrainConfig::default()
            };
            let outcome = run_matrix(&lex, &plan)?;
            println!(
                "{} runs: {} trained, {} reused, {} failed",
                outcome.entries.len(),
                outcome.trained,
                outcome.reused,
                outcome.failed()
            );
            if outcome.failed() > 0 {
                return Err(Failure::Run(format!(
                    "{} runs failed; see the manifest",
                    outcome.failed()
                )));
            }
        }
        Command::Evaluate { human } => {
            let paths = PreparedPaths::new(out);
            let lex = paths.load_lexicon()?;
            let human_path = human.or_else(|| Some(paths.human()).filter(|p| p.exists()));
            let human = human_path
                .map(|p| load_human_answers(&p, &lex))
                .transpose()?;
            let metrics = evaluate(&lex, out, human.as_deref())?;
            print!("{}", charnaming::runner::evaluate::headline(&metrics));
        }
        Command::Report => {
            for p in report(out)? {
                println!("{}", p.display());
            }
        }
        Command::Infer { ckpt, glyphs } => {
            let lex = PreparedPaths::new(out).load_lexicon()?;
            let ck = Checkpoint::load(&ckpt)?;
            let spec = ck
                .header
                .variant
                .clone()
                .ok_or_else(|| Error::Checkpoint("checkpoint has no model variant".into()))?;
            let variant: ModelVariant = spec.parse()?;
            let data = prepare_data(&lex, &variant);
            ck.verify_vocabularies(&data.src_vocab, &data.tgt_vocab)?;
            let rows = predict(
                &lex,
                &ck,
                &variant,
                &glyphs,
                TrainConfig::default().beam_width,
            )?;
            println!("glyph\trank\tscore\ttokens");
            for r in rows {
                println!("{}\t{}\t{:.4}\t{}", r.glyph, r.rank, r.score, r.tokens);
            }
        }
    }
    Ok(())
}
