//! Lexicon validation and dataset summary.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::eval::load_human_answers;
use crate::lexicon::{FrequencyBucket, Lexicon, TestSelectionReport, TrainingSet};
use crate::phonology::RegularityType;
use crate::{Error, Result};

pub const SALIENCY_BINS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSetSummary {
    pub name: String,
    pub characters: usize,
    /// Character-level regularity percentages in regular, alliterating,
    /// rhyming, irregular order.
    pub regularity: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadicalSaliency {
    pub radical: String,
    pub hosts: usize,
    pub saliency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconSummary {
    pub fingerprint: String,
    pub entries: usize,
    pub radicals: usize,
    pub used_radicals: usize,
    pub right_side_share: f64,
    pub training_sets: Vec<TrainingSetSummary>,
    /// Frequency buckets of the training characters.
    pub bucket_counts: BTreeMap<String, usize>,
    pub median_frequency: u64,
    pub upper_quartile_frequency: u64,
    pub test_selection: TestSelectionReport,
    /// Phonetic radicals of the test characters, in first-use order.
    pub test_radicals: Vec<RadicalSaliency>,
    /// Counts of test characters per saliency bin `[k/10, (k+1)/10)`, the
    /// last bin closed.
    pub saliency_histogram: [usize; SALIENCY_BINS],
    pub human_responders: Option<usize>,
}

pub fn saliency_bin(s: f64) -> usize {
    ((s * SALIENCY_BINS as f64).floor() as usize).min(SALIENCY_BINS - 1)
}

pub fn summarize_lexicon(lex: &Lexicon) -> Result<LexiconSummary> {
    let sets = lex.build_training_sets();
    let training_sets = [TrainingSet::All, TrainingSet::Mid, TrainingSet::High]
        .into_iter()
        .map(|t| TrainingSetSummary {
            name: format!("{t:?}").to_lowercase(),
            characters: sets.get(t).len(),
            regularity: lex.regularity_distribution(sets.get(t)),
        })
        .collect();
    let mut bucket_counts: BTreeMap<String, usize> = FrequencyBucket::ALL
        .iter()
        .map(|b| (b.token().to_string(), 0))
        .collect();
    let bounds = lex.bucket_boundaries();
    for &i in sets.get(TrainingSet::All) {
        let b = bounds.bucket(lex.entries()[i].frequency);
        *bucket_counts.get_mut(b.token()).unwrap() += 1;
    }
    let mut test_radicals: Vec<RadicalSaliency> = Vec::new();
    let mut saliency_histogram = [0usize; SALIENCY_BINS];
    for e in lex.test_entries() {
        let r = e.phonetic_radical();
        let s = lex.saliency(r)?;
        saliency_histogram[saliency_bin(s)] += 1;
        if !test_radicals.iter().any(|t| t.radical == r) {
            test_radicals.push(RadicalSaliency {
                radical: r.to_string(),
                hosts: lex.phonetic_hosts(r).len(),
                saliency: s,
            });
        }
    }
    Ok(LexiconSummary {
        fingerprint: lex.fingerprint(),
        entries: lex.entries().len(),
        radicals: lex.radicals().len(),
        used_radicals: lex.used_radicals().len(),
        right_side_share: lex.right_side_share(),
        training_sets,
        bucket_counts,
        median_frequency: bounds.median,
        upper_quartile_frequency: bounds.upper_quartile,
        test_selection: lex.validate_test_selection(),
        test_radicals,
        saliency_histogram,
        human_responders: None,
    })
}

pub fn render_summary(s: &LexiconSummary) -> String {
    let mut out = String::new();
    let pct = |x: f64| format!("{x:.1}");
    let _ = writeln!(out, "lexicon {}", s.fingerprint);
    let _ = writeln!(
        out,
        "characters {}  radicals {}  (used {})",
        s.entries, s.radicals, s.used_radicals
    );
    let _ = writeln!(
        out,
        "phonetic radical on the right: {}%",
        pct(s.right_side_share)
    );
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:<6} {:>6} {:>8} {:>13} {:>8} {:>10}",
        "set", "chars", "regular", "alliterating", "rhyming", "irregular"
    );
    for t in &s.training_sets {
        let r = t.regularity;
        let _ = writeln!(
            out,
            "{:<6} {:>6} {:>8} {:>13} {:>8} {:>10}",
            t.name,
            t.characters,
            pct(r[0]),
            pct(r[1]),
            pct(r[2]),
            pct(r[3])
        );
    }
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "frequency buckets (median {}, upper quartile {}):",
        s.median_frequency, s.upper_quartile_frequency
    );
    for b in FrequencyBucket::ALL {
        let _ = writeln!(out, "  {:<5} {}", b.token(), s.bucket_counts[b.token()]);
    }
    let t = &s.test_selection;
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "test characters {}  gold readings {}",
        t.characters, t.pinyins
    );
    for (i, r) in RegularityType::ALL.iter().enumerate() {
        let _ = writeln!(
            out,
            "  {:<13} readings {:>3}  characters {:>3}",
            r.token(),
            t.pinyin_counts[i],
            t.character_counts[i]
        );
    }
    let _ = writeln!(out, "mean test-radical saliency {:.3}", t.mean_saliency);
    for v in &t.violations {
        let _ = writeln!(out, "  selection warning: {} {}", v.glyph, v.reason);
    }
    if let Some(n) = s.human_responders {
        let _ = writeln!(out, "human responders {n}");
    }
    out
}

/// Paths of the copied dataset inside the output root.
pub struct PreparedPaths {
    pub dir: PathBuf,
}

impl PreparedPaths {
    pub fn new(out_root: &Path) -> PreparedPaths {
        PreparedPaths {
            dir: out_root.join("prepared"),
        }
    }

    pub fn human(&self) -> PathBuf {
        self.dir.join("human_answers.csv")
    }

    pub fn summary_json(&self) -> PathBuf {
        self.dir.join("summary.json")
    }

    pub fn load_lexicon(&self) -> Result<Lexicon> {
        Lexicon::load_dir(&self.dir)
    }
}

/// Validates the inputs, copies them under `out_root/prepared` and writes
/// `summary.json`, `summary.txt` and `saliency.csv`.
pub fn prepare(
    chars: &Path,
    radicals: &Path,
    tests: &Path,
    human: Option<&Path>,
    out_root: &Path,
) -> Result<(Lexicon, LexiconSummary)> {
    let lex = Lexicon::load(chars, radicals, tests)?;
    let mut summary = summarize_lexicon(&lex)?;
    if let Some(h) = human {
        summary.human_responders = Some(load_human_answers(h, &lex)?.len());
    }
    let paths = PreparedPaths::new(out_root);
    lex.write_dir(&paths.dir)?;
    if let Some(h) = human {
        let dst = paths.human();
        fs::copy(h, &dst).map_err(|e| Error::io(&dst, e))?;
    }
    write_text(
        &paths.summary_json(),
        &serde_json::to_string_pretty(&summary)?,
    )?;
    write_text(&paths.dir.join("summary.txt"), &render_summary(&summary))?;
    let mut w = csv::Writer::from_path(paths.dir.join("saliency.csv"))
        .map_err(|e| super::csv_io(&paths.dir, e))?;
    for r in &summary.test_radicals {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(&paths.dir, e))?;
    Ok((lex, summary))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
