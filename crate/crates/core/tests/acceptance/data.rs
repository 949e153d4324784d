//! Criteria that need the released lexicon and human answers, and for the
//! model-side ones a completed experiment matrix.

use std::path::{Path, PathBuf};
use std::time::Instant;

use charnaming::eval::{load_human_answers, summarize, GroupSummary};
use charnaming::lexicon::Lexicon;
use charnaming::runner::evaluate::Metrics;
use charnaming::runner::prepare::summarize_lexicon;
use charnaming::runner::report::read_metrics;
use charnaming::runner::{default_output_root, ExperimentPlan, Manifest};
use charnaming::seqcodec::InputMode;

use crate::Verdict;

pub const DATA_ENV: &str = "CHARNAMING_DATA";

/// Collects failed comparisons; a criterion passes when none failed.
#[derive(Default)]
struct Checks {
    failed: Vec<String>,
    passed: usize,
}

impl Checks {
    fn near(&mut self, what: &str, got: f64, want: f64, tol: f64) {
        if (got - want).abs() <= tol {
            self.passed += 1;
        } else {
            self.failed
                .push(format!("{what} {got:.4} (want {want} ± {tol})"));
        }
    }

    fn equal<T: PartialEq + std::fmt::Debug>(&mut self, what: &str, got: T, want: T) {
        if got == want {
            self.passed += 1;
        } else {
            self.failed.push(format!("{what} {got:?} (want {want:?})"));
        }
    }

    fn holds(&mut self, what: &str, ok: bool) {
        if ok {
            self.passed += 1;
        } else {
            self.failed.push(what.to_string());
        }
    }

    fn verdict(self) -> Verdict {
        if self.failed.is_empty() {
            Verdict::Pass(format!("{} checks", self.passed))
        } else {
            Verdict::Fail(self.failed.join("; "))
        }
    }
}

pub struct Dataset {
    pub dir: PathBuf,
}

impl Dataset {
    pub fn from_env() -> Option<Dataset> {
        let dir = PathBuf::from(std::env::var_os(DATA_ENV)?);
        dir.join("characters.tsv")
            .exists()
            .then_some(Dataset { dir })
    }

    fn lexicon(&self) -> charnaming::Result<Lexicon> {
        Lexicon::load_dir(&self.dir)
    }

    fn humans(&self, lex: &Lexicon) -> charnaming::Result<GroupSummary> {
        summarize(
            &load_human_answers(&self.dir.join("human_answers.csv"), lex)?,
            lex,
        )
    }
}

pub fn lexicon_statistics(data: &Dataset) -> charnaming::Result<Verdict> {
    let start = Instant::now();
    let lex = data.lexicon()?;
    let s = summarize_lexicon(&lex)?;
    let elapsed = start.elapsed().as_secs_f64();
    let mut c = Checks::default();
    c.equal("entries", s.entries, 4341);
    c.equal("radicals", s.radicals, 660);
    let expected = [
        ("all", 4281, [42.7, 7.8, 23.6, 25.9]),
        ("mid", 2140, [43.3, 8.1, 23.3, 25.3]),
        ("high", 1070, [42.1, 8.7, 22.5, 26.7]),
    ];
    for (t, (name, size, pct)) in s.training_sets.iter().zip(expected) {
        c.equal(&format!("{name} size"), t.characters, size);
        for (k, want) in pct.iter().enumerate() {
            c.near(
                &format!("{name} regularity[{k}] %"),
                t.regularity[k],
                *want,
                0.1,
            );
        }
    }
    for (bucket, want) in [("rare", 1025), ("low", 1116), ("mid", 1070), ("high", 1070)] {
        c.equal(&format!("{bucket} bucket"), s.bucket_counts[bucket], want);
    }
    c.holds(
        &format!("runtime {elapsed:.1}s exceeds 10s"),
        elapsed < 10.0,
    );
    Ok(c.verdict())
}

pub fn test_selection(data: &Dataset) -> charnaming::Result<Verdict> {
    let lex = data.lexicon()?;
    let t = lex.validate_test_selection();
    let mut c = Checks::default();
    c.equal("test characters", t.characters, 60);
    c.equal("gold readings", t.pinyins, 88);
    c.equal(
        "reading regularity counts",
        t.pinyin_counts,
        [30, 6, 24, 28],
    );
    c.near("mean test-radical saliency", t.mean_saliency, 0.43, 0.01);
    Ok(c.verdict())
}

pub fn human_statistics(data: &Dataset) -> charnaming::Result<Verdict> {
    let lex = data.lexicon()?;
    let h = data.humans(&lex)?;
    let mut c = Checks::default();
    c.near("mean accuracy %", 100.0 * h.accuracy.mean, 45.3, 0.1);
    c.near("min accuracy %", 100.0 * h.accuracy.min, 26.7, 0.05);
    c.near("max accuracy %", 100.0 * h.accuracy.max, 68.3, 0.05);
    c.equal("zero-accuracy characters", h.zero_accuracy_characters, 8);
    c.near("saliency r", h.saliency_r.unwrap_or(f64::NAN), 0.62, 0.02);
    let var: Vec<f64> = h.variability.iter().map(|&v| v as f64).collect();
    c.near(
        "answers per character",
        charnaming::eval::mean(&var),
        6.7,
        0.05,
    );
    c.equal(
        "answers per character min",
        h.variability.iter().min().copied(),
        Some(2),
    );
    c.equal(
        "answers per character max",
        h.variability.iter().max().copied(),
        Some(15),
    );
    c.near(
        "variability-saliency r",
        h.variability_saliency_r.unwrap_or(f64::NAN),
        -0.51,
        0.02,
    );
    let overlap = h.internal_overlap.expect("more than one responder");
    c.near("human-human overlap %", 100.0 * overlap.mean, 50.2, 0.2);
    c.equal("overlap pairs", overlap.n, 1485);
    for (k, want) in [58.0, 6.8, 13.0, 20.6, 1.6].iter().enumerate() {
        c.near(
            &format!("type mean[{k}] %"),
            100.0 * h.type_means[k],
            *want,
            0.5,
        );
    }
    match h.profile.glyphs.iter().position(|g| g == "煔") {
        Some(i) => {
            for (k, want) in [36.4, 1.8, 3.6, 34.6, 23.6].iter().enumerate() {
                let got = (1000.0 * h.profile.shares[i][k]).round() / 10.0;
                c.near(&format!("煔 share[{k}] %"), got, *want, 1e-9);
            }
        }
        None => c.holds("煔 is not a test character", false),
    }
    Ok(c.verdict())
}

/// Metrics of a completed two-experiment matrix over the same lexicon.
pub struct MatrixResults {
    pub metrics: Metrics,
    pub out_root: PathBuf,
}

impl MatrixResults {
    pub fn load(data: &Dataset) -> Result<MatrixResults, String> {
        let out_root = default_output_root();
        let path = out_root.join("metrics.json");
        let metrics =
            read_metrics(&path).map_err(|_| format!("no metrics at {}", path.display()))?;
        let lex = data.lexicon().map_err(|e| e.to_string())?;
        if metrics.lexicon_fingerprint != lex.fingerprint() {
            return Err("metrics.json was computed on a different lexicon".into());
        }
        if metrics.human.is_none()
            || metrics.experiment("exp1").is_none()
            || metrics.experiment("exp2").is_none()
        {
            return Err("metrics.json lacks human answers or one of the experiments".into());
        }
        Ok(MatrixResults { metrics, out_root })
    }
}

fn manifest_seconds(out_root: &Path, variant: &str) -> charnaming::Result<Vec<f64>> {
    let plan = ExperimentPlan::new(InputMode::Ortho, out_root);
    let m = Manifest::open(&plan.manifest_path())?;
    Ok(m.current()
        .into_iter()
        .filter(|e| e.variant == variant)
        .map(|e| e.wall_seconds)
        .collect())
}

pub fn base_accuracy(r: &MatrixResults) -> charnaming::Result<Verdict> {
    let spec = "exp1/all/base/-tone/-shuffle";
    let e1 = r.metrics.experiment("exp1").unwrap();
    let mut c = Checks::default();
    match e1.variants.iter().find(|v| v.variant == spec) {
        Some(v) => {
            c.equal("seeds", v.accuracy.n, 5);
            c.near("mean accuracy %", 100.0 * v.accuracy.mean, 49.3, 5.0);
        }
        None => c.holds("base variant missing", false),
    }
    let secs = manifest_seconds(&r.out_root, spec)?;
    let slowest = secs.iter().copied().fold(0.0, f64::max);
    c.holds(
        &format!("slowest run took {slowest:.0}s"),
        !secs.is_empty() && slowest < 300.0,
    );
    Ok(c.verdict())
}

fn mean_accuracy_where(r: &MatrixResults, exp: &str, tone: bool) -> f64 {
    let marker = if tone { "/+tone/" } else { "/-tone/" };
    let accs: Vec<f64> = r
        .metrics
        .experiment(exp)
        .unwrap()
        .variants
        .iter()
        .filter(|v| v.variant.contains(marker))
        .map(|v| v.accuracy.mean)
        .collect();
    charnaming::eval::mean(&accs)
}

pub fn directional_claims(r: &MatrixResults) -> Verdict {
    let (e1, e2) = (
        r.metrics.experiment("exp1").unwrap(),
        r.metrics.experiment("exp2").unwrap(),
    );
    let human = r.metrics.human.as_ref().unwrap();
    let mut c = Checks::default();
    let gain = 100.0 * (e2.grand_mean_accuracy - e1.grand_mean_accuracy);
    c.holds(
        &format!("pinyin input gains {gain:.1} points, under 3"),
        gain >= 3.0,
    );
    let (with, without) = (
        mean_accuracy_where(r, "exp1", true),
        mean_accuracy_where(r, "exp1", false),
    );
    c.holds(
        &format!("tone raises exp1 accuracy {without:.3} -> {with:.3}"),
        with <= without,
    );
    for (e, floor) in [(e1, 0.6), (e2, 0.7)] {
        let sal = e.report.model.saliency_r.unwrap_or(f64::NAN);
        c.holds(
            &format!("{} saliency r {sal:.2} outside [0.3, 0.7]", e.experiment),
            (0.3..=0.7).contains(&sal),
        );
        let r_acc = e
            .report
            .comparison
            .as_ref()
            .and_then(|x| x.accuracy_pearson)
            .unwrap_or(f64::NAN);
        c.holds(
            &format!(
                "{} model-human accuracy r {r_acc:.2} below {floor}",
                e.experiment
            ),
            r_acc >= floor,
        );
        let sem = e.report.model.type_means[4];
        c.holds(
            &format!(
                "{} semantic P_p {sem:.3} not below human {:.3}",
                e.experiment, human.type_means[4]
            ),
            sem < human.type_means[4],
        );
    }
    c.verdict()
}

pub fn overlap_gain(r: &MatrixResults) -> Verdict {
    let overlap = |exp: &str| {
        r.metrics
            .experiment(exp)
            .and_then(|e| e.report.comparison.as_ref())
            .map_or(f64::NAN, |c| c.overlap.mean)
    };
    let gain = 100.0 * (overlap("exp2") - overlap("exp1"));
    let mut c = Checks::default();
    c.holds(
        &format!("model-human overlap gain {gain:.1} points, under 3"),
        gain >= 3.0,
    );
    c.verdict()
}
