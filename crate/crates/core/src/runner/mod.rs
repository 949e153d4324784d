//! Experiment orchestration: data preparation, the seeded variant × seed
//! training matrix with a resumable manifest, evaluation tables and plots.
//!
//! Output layout under the output root:
//!
//! ```text
//! prepared/            validated lexicon, summary, saliency table
//! exp1/manifest.jsonl  one JSON line per finished or failed run
//! exp1/runs/<variant>/seed<i>/{model.ckpt,predictions.csv,history.csv}
//! exp1/predictions.csv merged predictions of all completed runs
//! metrics.json, tables/, plots/
//! ```

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::lexicon::Lexicon;
use crate::neural::train::{write_history, Pair, Trainer};
use crate::neural::{beam_search, Checkpoint, TrainConfig, TransformerConfig};
use crate::seqcodec::{InputMode, ModelVariant, SequenceCodec, Vocabulary, BEGIN, END};
use crate::{Error, Result};

pub mod evaluate;
pub mod prepare;
pub mod report;

/// Environment variable naming the output root.
pub const OUTPUT_ENV: &str = "CHARNAMING_OUT";
/// Bumped whenever a change invalidates cached runs.
pub const CODE_VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "+r1");

pub fn default_output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("charnaming-out"))
}

fn digest(parts: &[&str]) -> [u8; 32] {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0u8]);
    }
    h.finalize().into()
}

/// Per-run seed from (master seed, variant, seed index). Independent of
/// which other variants are in the plan.
pub fn derive_seed(master: u64, variant: &ModelVariant, index: usize) -> u64 {
    let d = digest(&[
        &master.to_string(),
        &variant.to_string(),
        &index.to_string(),
    ]);
    u64::from_le_bytes(d[..8].try_into().unwrap())
}

/// Cache key of one run; a completed manifest entry with the same key is
/// reused instead of retrained.
pub fn cache_key(
    variant: &ModelVariant,
    seed: u64,
    lexicon_fingerprint: &str,
    model: &TransformerConfig,
    train: &TrainConfig,
) -> String {
    let d = digest(&[
        &variant.to_string(),
        &seed.to_string(),
        lexicon_fingerprint,
        CODE_VERSION,
        &serde_json::to_string(model).unwrap(),
        &serde_json::to_string(train).unwrap(),
    ]);
    d[..8].iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub input_mode: InputMode,
    pub variants: Vec<ModelVariant>,
    pub seeds: usize,
    pub master_seed: u64,
    pub out_dir: PathBuf,
    pub jobs: usize,
    pub model: TransformerConfig,
    pub train: TrainConfig,
}

impl ExperimentPlan {
    /// All 80 variants, 5 seeds, one job per available core.
    pub fn new(input_mode: InputMode, out_root: &Path) -> ExperimentPlan {
        ExperimentPlan {
            input_mode,
            variants: ModelVariant::all(input_mode),
            seeds: 5,
            master_seed: 0,
            out_dir: out_root.join(input_mode.token()),
            jobs: std::thread::available_parallelism().map_or(1, |n| n.get()),
            model: TransformerConfig::default(),
            train: TrainConfig::default(),
        }
    }

    /// (variant, seed index) pairs in plan order.
    pub fn runs(&self) -> Vec<(ModelVariant, usize)> {
        self.variants
            .iter()
            .flat_map(|v| (0..self.seeds).map(move |i| (*v, i)))
            .collect()
    }

    pub fn run_dir(&self, variant: &ModelVariant, index: usize) -> PathBuf {
        self.out_dir
            .join("runs")
            .join(variant.slug())
            .join(format!("seed{index}"))
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.out_dir.join("manifest.jsonl")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Completed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub variant: String,
    pub seed_index: usize,
    pub seed: u64,
    pub cache_key: String,
    /// Paths relative to the experiment directory.
    pub checkpoint: PathBuf,
    pub predictions: PathBuf,
    pub status: RunStatus,
    pub error: Option<String>,
    pub wall_seconds: f64,
    pub dev_loss: Option<f64>,
    pub best_epoch: Option<usize>,
}

/// Append-only JSON-lines run log. Later lines supersede earlier ones for
/// the same (variant, seed index).
#[derive(Debug)]
pub struct Manifest {
    path: PathBuf,
    entries: Vec<ManifestEntry>,
}

impl Manifest {
    /// Opens an existing manifest or starts an empty one. A torn final line
    /// left by an interrupted write is cut off the file.
    pub fn open(path: &Path) -> Result<Manifest> {
        let mut entries = Vec::new();
        if path.exists() {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            if !text.is_empty() && !text.ends_with('\n') {
                let keep = text.rfind('\n').map_or(0, |i| i + 1);
                let f = OpenOptions::new()
                    .write(true)
                    .open(path)
                    .map_err(|e| Error::io(path, e))?;
                f.set_len(keep as u64).map_err(|e| Error::io(path, e))?;
            }
            let complete = &text[..text.rfind('\n').map_or(0, |i| i + 1)];
            for (i, line) in complete.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let entry = serde_json::from_str(line).map_err(|e| Error::Load {
                    file: path.display().to_string(),
                    row: i + 1,
                    msg: e.to_string(),
                })?;
                entries.push(entry);
            }
        }
        Ok(Manifest {
            path: path.to_path_buf(),
            entries,
        })
    }

    pub fn append(&mut self, entry: ManifestEntry) -> Result<()> {
        if let Some(dir) = self.path.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|e| Error::io(&self.path, e))?;
        let mut line = serde_json::to_string(&entry)?;
        line.push('\n');
        f.write_all(line.as_bytes())
            .map_err(|e| Error::io(&self.path, e))?;
        self.entries.push(entry);
        Ok(())
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn latest(&self, variant: &str, seed_index: usize) -> Option<&ManifestEntry> {
        self.entries
            .iter()
            .rev()
            .find(|e| e.variant == variant && e.seed_index == seed_index)
    }

    /// Latest entry per run, ordered by (variant, seed index).
    pub fn current(&self) -> Vec<&ManifestEntry> {
        let mut map = std::collections::BTreeMap::new();
        for e in &self.entries {
            map.insert((e.variant.clone(), e.seed_index), e);
        }
        map.into_values().collect()
    }
}

/// One beam hypothesis for one test glyph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub variant: String,
    pub seed: u64,
    pub glyph: String,
    pub rank: usize,
    /// Space-separated output tokens including `Begin` and, for finished
    /// hypotheses, `End`.
    pub tokens: String,
    pub score: f64,
}

/// Training pairs and vocabularies of one variant.
pub struct PreparedData {
    pub src_vocab: Vocabulary,
    pub tgt_vocab: Vocabulary,
    pub pairs: Vec<Pair>,
}

pub fn prepare_data(lex: &Lexicon, variant: &ModelVariant) -> PreparedData {
    let codec = SequenceCodec::new(lex);
    let sets = lex.build_training_sets();
    let examples = codec.examples(sets.get(variant.training_set()), variant);
    let (src_vocab, tgt_vocab) = codec.build_vocabs(&examples);
    let pairs = examples
        .iter()
        .map(|e| (src_vocab.encode(&e.source), tgt_vocab.encode(&e.target)))
        .collect();
    PreparedData {
        src_vocab,
        tgt_vocab,
        pairs,
    }
}

/// Trains one (variant, seed) model and packages it as a checkpoint.
pub fn train_model(
    lex: &Lexicon,
    variant: &ModelVariant,
    seed: u64,
    model: &TransformerConfig,
    train: &TrainConfig,
) -> Result<Checkpoint> {
    let data = prepare_data(lex, variant);
    let trainer = Trainer::new(
        model.clone(),
        TrainConfig {
            seed,
            ..train.clone()
        },
    );
    let outcome = trainer.train::<f32>(&data.pairs, data.src_vocab.len(), data.tgt_vocab.len())?;
    Ok(Checkpoint::new(
        outcome.model,
        data.src_vocab,
        data.tgt_vocab,
        Some(variant.to_string()),
        Some(lex.fingerprint()),
        seed,
        outcome.best_epoch,
        outcome.history,
    ))
}

/// Source tokens for a query: a lexicon glyph, or `L+R` naming two
/// radicals directly.
pub fn query_source(
    codec: &SequenceCodec,
    query: &str,
    variant: &ModelVariant,
) -> Result<Vec<String>> {
    let lex = codec.lexicon();
    if let Some(e) = lex.entry(query) {
        return Ok(codec.encode_input(e, variant));
    }
    match query.split_once('+') {
        Some((l, r)) if !l.is_empty() && !r.is_empty() => {
            let bucket = variant
                .with_freq()
                .then(|| lex.bucket_boundaries().bucket(1));
            Ok(codec.encode_radicals(l, r, bucket, variant))
        }
        _ => Err(Error::Variant {
            spec: query.to_string(),
            msg: "not a lexicon character and not a LEFT+RIGHT radical pair".into(),
        }),
    }
}

/// Beam hypotheses for each query.
pub fn predict(
    lex: &Lexicon,
    checkpoint: &Checkpoint,
    variant: &ModelVariant,
    queries: &[String],
    beam_width: usize,
) -> Result<Vec<PredictionRow>> {
    let codec = SequenceCodec::new(lex);
    let h = &checkpoint.header;
    let mut rows = Vec::new();
    for q in queries {
        let src = h.src_vocab.encode(&query_source(&codec, q, variant)?);
        let hyps = beam_search(
            &checkpoint.model,
            &src,
            beam_width,
            checkpoint.model.config.max_decode_len,
        );
        for (rank, hyp) in hyps.iter().take(beam_width).enumerate() {
            let mut toks = vec![BEGIN.to_string()];
            toks.extend(h.tgt_vocab.decode(&hyp.tokens));
            if hyp.complete {
                toks.push(END.to_string());
            }
            rows.push(PredictionRow {
                variant: variant.to_string(),
                seed: h.seed,
                glyph: q.clone(),
                rank,
                tokens: toks.join(" "),
                score: hyp.score,
            });
        }
    }
    Ok(rows)
}

pub fn write_predictions(path: &Path, rows: &[PredictionRow]) -> Result<()> {
    let tmp = path.with_extension("csv.tmp");
    {
        let mut w = csv::Writer::from_path(&tmp).map_err(|e| csv_io(&tmp, e))?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_io(path, e))?;
    let rows = r
        .deserialize()
        .collect::<std::result::Result<Vec<PredictionRow>, _>>()?;
    Ok(rows)
}

pub(crate) fn csv_io(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Load {
            file: path.display().to_string(),
            row: 0,
            msg: format!("{other:?}"),
        },
    }
}

fn rel(base: &Path, p: &Path) -> PathBuf {
    p.strip_prefix(base).unwrap_or(p).to_path_buf()
}

/// Trains, checkpoints and predicts one run. Failures become a `Failed`
/// manifest entry instead of an error.
pub fn execute_run(
    lex: &Lexicon,
    plan: &ExperimentPlan,
    variant: &ModelVariant,
    index: usize,
) -> ManifestEntry {
    let start = Instant::now();
    let seed = derive_seed(plan.master_seed, variant, index);
    let key = cache_key(variant, seed, &lex.fingerprint(), &plan.model, &plan.train);
    let dir = plan.run_dir(variant, index);
    let ckpt_path = dir.join("model.ckpt");
    let pred_path = dir.join("predictions.csv");
    let result = (|| -> Result<Checkpoint> {
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let ck = train_model(lex, variant, seed, &plan.model, &plan.train)?;
        write_history(&dir.join("history.csv"), &ck.header.history)?;
        ck.save(&ckpt_path)?;
        let rows = predict(lex, &ck, variant, lex.test_set(), plan.train.beam_width)?;
        write_predictions(&pred_path, &rows)?;
        Ok(ck)
    })();
    let (status, error, dev_loss, best_epoch) = match &result {
        Ok(ck) => {
            let best = ck
                .header
                .history
                .iter()
                .find(|r| r.epoch == ck.header.best_epoch);
            (
                RunStatus::Completed,
                None,
                best.map(|r| r.dev_loss),
                Some(ck.header.best_epoch),
            )
        }
        Err(e) => (RunStatus::Failed, Some(e.to_string()), None, None),
    };
    ManifestEntry {
        variant: variant.to_string(),
        seed_index: index,
        seed,
        cache_key: key,
        checkpoint: rel(&plan.out_dir, &ckpt_path),
        predictions: rel(&plan.out_dir, &pred_path),
        status,
        error,
        wall_seconds: start.elapsed().as_secs_f64(),
        dev_loss,
        best_epoch,
    }
}

/// Whether `entry` can stand in for a fresh run with `key`.
pub fn is_cache_hit(plan: &ExperimentPlan, entry: Option<&ManifestEntry>, key: &str) -> bool {
    entry.is_some_and(|e| {
        e.status == RunStatus::Completed
            && e.cache_key == key
            && plan.out_dir.join(&e.checkpoint).exists()
            && plan.out_dir.join(&e.predictions).exists()
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixOutcome {
    /// Entries for every planned run, in plan order.
    pub entries: Vec<ManifestEntry>,
    pub trained: usize,
    pub reused: usize,
}

impl MatrixOutcome {
    pub fn failed(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| e.status == RunStatus::Failed)
            .count()
    }
}

/// Runs every planned (variant, seed) pair not already cached, `plan.jobs`
/// at a time. Each run is single-threaded; manifest appends are serialised.
pub fn run_matrix(lex: &Lexicon, plan: &ExperimentPlan) -> Result<MatrixOutcome> {
    fs::create_dir_all(&plan.out_dir).map_err(|e| Error::io(&plan.out_dir, e))?;
    let manifest = Manifest::open(&plan.manifest_path())?;
    let fingerprint = lex.fingerprint();
    let runs = plan.runs();
    let mut todo = Vec::new();
    let mut done: Vec<Option<ManifestEntry>> = vec![None; runs.len()];
    for (slot, (v, i)) in runs.iter().enumerate() {
        let key = cache_key(
            v,
            derive_seed(plan.master_seed, v, *i),
            &fingerprint,
            &plan.model,
            &plan.train,
        );
        let prior = manifest.latest(&v.to_string(), *i);
        if is_cache_hit(plan, prior, &key) {
            done[slot] = prior.cloned();
        } else {
            todo.push(slot);
        }
    }
    let reused = runs.len() - todo.len();
    let manifest = Mutex::new(manifest);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.jobs.max(1))
        .build()
        .map_err(|e| Error::Checkpoint(format!("thread pool: {e}")))?;
    let fresh: Vec<(usize, Result<ManifestEntry>)> = pool.install(|| {
        todo.par_iter()
            .map(|&slot| {
                let (v, i) = &runs[slot];
                let entry = execute_run(lex, plan, v, *i);
                let logged = manifest.lock().unwrap().append(entry.clone());
                (slot, logged.map(|_| entry))
            })
            .collect()
    });
    let trained = fresh.len();
    for (slot, entry) in fresh {
        done[slot] = Some(entry?);
    }
    Ok(MatrixOutcome {
        entries: done
            .into_iter()
            .map(|e| e.expect("every run resolved"))
            .collect(),
        trained,
        reused,
    })
}
