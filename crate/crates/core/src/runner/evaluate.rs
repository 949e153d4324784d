//! Metrics over completed runs and the report tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::prepare::write_text;
use super::{
    read_predictions, write_predictions, Manifest, PredictionRow, RunStatus, CODE_VERSION,
};
use crate::eval::{
    compare, cross_overlaps, mean, pairwise_overlaps, responder_accuracy, AnswerSet, AnswerType,
    ComparisonReport, GroupSummary, ResponderKind, Spread,
};
use crate::lexicon::Lexicon;
use crate::seqcodec::{DataCondition, InputMode, LabelScheme, ModelVariant, SequenceCodec};
use crate::{Error, Result};

/// Points of the overlap-density grid on [0, 1].
pub const DENSITY_POINTS: usize = 101;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantMetrics {
    pub variant: String,
    /// Accuracy per seed, keyed by the run seed.
    pub run_accuracy: BTreeMap<u64, f64>,
    pub accuracy: Spread,
    pub human_overlap: Option<Spread>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentMetrics {
    pub experiment: String,
    pub runs: usize,
    pub failed_runs: usize,
    pub grand_mean_accuracy: f64,
    pub variants: Vec<VariantMetrics>,
    /// All runs of the experiment pooled as one responder group.
    pub report: ComparisonReport,
    /// Variant with the highest mean overlap with humans.
    pub best_variant: Option<String>,
    pub best_overlap: Option<Spread>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySeries {
    pub label: String,
    pub pairs: usize,
    pub density: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub code_version: String,
    pub lexicon_fingerprint: String,
    pub glyphs: Vec<String>,
    pub saliency: Vec<f64>,
    pub human: Option<GroupSummary>,
    pub experiments: Vec<ExperimentMetrics>,
    /// Gaussian kernel densities of overlap rates on an evenly spaced grid
    /// over [0, 1] with [`DENSITY_POINTS`] points.
    pub overlap_density: Vec<DensitySeries>,
}

impl Metrics {
    pub fn experiment(&self, token: &str) -> Option<&ExperimentMetrics> {
        self.experiments.iter().find(|e| e.experiment == token)
    }
}

pub fn density_grid() -> Vec<f64> {
    (0..DENSITY_POINTS)
        .map(|i| i as f64 / (DENSITY_POINTS - 1) as f64)
        .collect()
}

/// Gaussian KDE with Silverman's bandwidth (floored at 0.01).
pub fn kernel_density(values: &[f64], grid: &[f64]) -> Vec<f64> {
    if values.is_empty() {
        return vec![0.0; grid.len()];
    }
    let s = Spread::of(values);
    let h = (1.06 * s.sd * (values.len() as f64).powf(-0.2)).max(0.01);
    let norm = 1.0 / (values.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    grid.iter()
        .map(|&x| {
            norm * values
                .iter()
                .map(|v| (-0.5 * ((x - v) / h).powi(2)).exp())
                .sum::<f64>()
        })
        .collect()
}

/// One answer set per (variant, seed) from rank-0 rows. Hypotheses that do
/// not parse under the variant grammar are left missing.
pub fn answer_sets_from_predictions(
    lex: &Lexicon,
    rows: &[PredictionRow],
) -> Result<Vec<(ModelVariant, u64, AnswerSet)>> {
    let codec = SequenceCodec::new(lex);
    let mut sets: BTreeMap<(ModelVariant, u64), AnswerSet> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.rank == 0) {
        let v: ModelVariant = r.variant.parse()?;
        let set = sets.entry((v, r.seed)).or_insert_with(|| {
            AnswerSet::new(format!("{}#{}", r.variant, r.seed), ResponderKind::Model)
        });
        let toks: Vec<String> = r.tokens.split(' ').map(String::from).collect();
        if let Some(p) = codec.decode_output(&toks, &v).pinyin {
            set.answers.insert(r.glyph.clone(), p);
        }
    }
    Ok(sets.into_iter().map(|((v, s), a)| (v, s, a)).collect())
}

/// Completed runs' predictions merged into `<exp>/predictions.csv`.
/// Returns the rows and the number of failed runs.
pub fn collect_predictions(exp_dir: &Path) -> Result<(Vec<PredictionRow>, usize)> {
    let manifest = Manifest::open(&exp_dir.join("manifest.jsonl"))?;
    let mut rows = Vec::new();
    let mut failed = 0;
    for e in manifest.current() {
        match e.status {
            RunStatus::Completed => rows.extend(read_predictions(&exp_dir.join(&e.predictions))?),
            RunStatus::Failed => failed += 1,
        }
    }
    write_predictions(&exp_dir.join("predictions.csv"), &rows)?;
    Ok((rows, failed))
}

pub fn experiment_metrics(
    lex: &Lexicon,
    mode: InputMode,
    rows: &[PredictionRow],
    failed_runs: usize,
    human: Option<&[AnswerSet]>,
) -> Result<ExperimentMetrics> {
    let runs = answer_sets_from_predictions(lex, rows)?;
    if let Some((v, _, _)) = runs.iter().find(|(v, _, _)| v.input_mode != mode) {
        return Err(Error::Variant {
            spec: v.to_string(),
            msg: format!("found among {} predictions", mode.token()),
        });
    }
    let all_sets: Vec<AnswerSet> = runs.iter().map(|(_, _, a)| a.clone()).collect();
    if all_sets.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let glyphs = lex.test_set();
    let mut variants = Vec::new();
    for v in ModelVariant::all(mode) {
        let sets: Vec<&AnswerSet> = runs
            .iter()
            .filter(|(rv, _, _)| *rv == v)
            .map(|(_, _, a)| a)
            .collect();
        if sets.is_empty() {
            continue;
        }
        let run_accuracy: BTreeMap<u64, f64> = runs
            .iter()
            .filter(|(rv, _, _)| *rv == v)
            .map(|(_, s, a)| (*s, responder_accuracy(a, lex)))
            .collect();
        let accs: Vec<f64> = run_accuracy.values().copied().collect();
        let owned: Vec<AnswerSet> = sets.into_iter().cloned().collect();
        variants.push(VariantMetrics {
            variant: v.to_string(),
            accuracy: Spread::of(&accs),
            run_accuracy,
            human_overlap: human.map(|h| Spread::of(&cross_overlaps(&owned, h, glyphs))),
        });
    }
    let best = variants
        .iter()
        .filter_map(|v| v.human_overlap.map(|o| (v, o)))
        .max_by(|a, b| {
            a.1.mean
                .total_cmp(&b.1.mean)
                .then_with(|| b.0.variant.cmp(&a.0.variant))
        });
    let per_run: Vec<f64> = variants
        .iter()
        .flat_map(|v| v.run_accuracy.values().copied())
        .collect();
    Ok(ExperimentMetrics {
        experiment: mode.token().to_string(),
        runs: all_sets.len(),
        failed_runs,
        grand_mean_accuracy: mean(&per_run),
        best_variant: best.map(|(v, _)| v.variant.clone()),
        best_overlap: best.map(|(_, o)| o),
        report: compare(lex, &all_sets, human)?,
        variants,
    })
}

fn overlap_series(
    lex: &Lexicon,
    rows_by_exp: &[(InputMode, Vec<PredictionRow>)],
    metrics: &[ExperimentMetrics],
    human: Option<&[AnswerSet]>,
) -> Result<Vec<DensitySeries>> {
    let grid = density_grid();
    let glyphs = lex.test_set();
    let mut out = Vec::new();
    let mut push = |label: String, values: Vec<f64>| {
        out.push(DensitySeries {
            label,
            pairs: values.len(),
            density: kernel_density(&values, &grid),
        })
    };
    if let Some(h) = human {
        push("human-human".into(), pairwise_overlaps(h, glyphs));
    }
    for ((mode, rows), m) in rows_by_exp.iter().zip(metrics) {
        let runs = answer_sets_from_predictions(lex, rows)?;
        let sets: Vec<AnswerSet> = runs.iter().map(|(_, _, a)| a.clone()).collect();
        match human {
            Some(h) => {
                push(
                    format!("{} all-human", mode.token()),
                    cross_overlaps(&sets, h, glyphs),
                );
                if let Some(best) = &m.best_variant {
                    let best_sets: Vec<AnswerSet> = runs
                        .iter()
                        .filter(|(v, _, _)| &v.to_string() == best)
                        .map(|(_, _, a)| a.clone())
                        .collect();
                    push(
                        format!("{} best-human", mode.token()),
                        cross_overlaps(&best_sets, h, glyphs),
                    );
                }
            }
            None => push(
                format!("{} model-model", mode.token()),
                pairwise_overlaps(&sets, glyphs),
            ),
        }
    }
    Ok(out)
}

/// Metrics for every experiment directory under `out_root` that has a
/// manifest; writes `metrics.json` and `tables/`.
pub fn evaluate(lex: &Lexicon, out_root: &Path, human: Option<&[AnswerSet]>) -> Result<Metrics> {
    let mut rows_by_exp = Vec::new();
    let mut experiments = Vec::new();
    for mode in [InputMode::Ortho, InputMode::OrthoPinyin] {
        let dir = out_root.join(mode.token());
        if !dir.join("manifest.jsonl").exists() {
            continue;
        }
        let (rows, failed) = collect_predictions(&dir)?;
        if rows.is_empty() {
            continue;
        }
        experiments.push(experiment_metrics(lex, mode, &rows, failed, human)?);
        rows_by_exp.push((mode, rows));
    }
    if experiments.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let overlap_density = overlap_series(lex, &rows_by_exp, &experiments, human)?;
    let first = &experiments[0].report;
    let metrics = Metrics {
        code_version: CODE_VERSION.to_string(),
        lexicon_fingerprint: lex.fingerprint(),
        glyphs: first.glyphs.clone(),
        saliency: first.saliency.clone(),
        human: first.human.clone(),
        experiments,
        overlap_density,
    };
    write_text(
        &out_root.join("metrics.json"),
        &serde_json::to_string_pretty(&metrics)?,
    )?;
    write_tables(&metrics, &out_root.join("tables"))?;
    Ok(metrics)
}

fn pct(x: f64) -> String {
    format!("{:.1}", 100.0 * x)
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), |v| format!("{v:.2}"))
}

const CONDITIONS: [(bool, bool, &str); 4] = [
    (false, false, "-T-S"),
    (false, true, "-T+S"),
    (true, false, "+T-S"),
    (true, true, "+T+S"),
];

fn variant_cell<T>(
    m: &ExperimentMetrics,
    data: DataCondition,
    label: LabelScheme,
    tone: bool,
    shuffle: bool,
    f: impl Fn(&VariantMetrics) -> Option<T>,
) -> Option<T> {
    let mode = if m.experiment == "exp1" {
        InputMode::Ortho
    } else {
        InputMode::OrthoPinyin
    };
    let key = ModelVariant {
        input_mode: mode,
        data,
        label_scheme: label,
        with_tone: tone,
        with_shuffle: shuffle,
    }
    .to_string();
    m.variants.iter().find(|v| v.variant == key).and_then(f)
}

/// Mean accuracy per variant: rows data × label, columns tone/shuffle.
pub fn accuracy_table(m: &ExperimentMetrics) -> (String, String) {
    let mut txt = String::new();
    let mut csv = String::from("data,label,condition,mean_accuracy,sd,runs\n");
    let _ = writeln!(txt, "{} mean test accuracy (%) over seeds", m.experiment);
    let _ = writeln!(
        txt,
        "{:<9} {:<9} {:>6} {:>6} {:>6} {:>6}",
        "data", "label", "-T-S", "-T+S", "+T-S", "+T+S"
    );
    for data in DataCondition::ALL {
        for label in LabelScheme::ALL {
            let mut line = format!("{:<9} {:<9}", data.token(), label.token());
            for (tone, shuffle, name) in CONDITIONS {
                match variant_cell(m, data, label, tone, shuffle, |v| Some(v.accuracy)) {
                    Some(a) => {
                        let _ = write!(line, " {:>6}", pct(a.mean));
                        let _ = writeln!(
                            csv,
                            "{},{},{},{},{},{}",
                            data.token(),
                            label.token(),
                            name,
                            a.mean,
                            a.sd,
                            a.n
                        );
                    }
                    None => {
                        let _ = write!(line, " {:>6}", "-");
                    }
                }
            }
            let _ = writeln!(txt, "{line}");
        }
    }
    let _ = writeln!(
        txt,
        "grand mean {}% over {} runs ({} failed)",
        pct(m.grand_mean_accuracy),
        m.runs,
        m.failed_runs
    );
    (txt, csv)
}

/// Mean model-human overlap per variant, both experiments side by side.
pub fn overlap_variant_table(exps: &[ExperimentMetrics]) -> (String, String) {
    let mut txt = String::new();
    let mut csv = String::from("experiment,data,label,condition,mean_overlap,sd,pairs\n");
    let _ = write!(txt, "{:<9} {:<9}", "data", "label");
    for (_, _, name) in CONDITIONS {
        for e in exps {
            let _ = write!(txt, " {:>16}", format!("{name} {}", e.experiment));
        }
    }
    let _ = writeln!(txt);
    for data in DataCondition::ALL {
        for label in LabelScheme::ALL {
            let _ = write!(txt, "{:<9} {:<9}", data.token(), label.token());
            for (tone, shuffle, name) in CONDITIONS {
                for e in exps {
                    match variant_cell(e, data, label, tone, shuffle, |v| v.human_overlap) {
                        Some(o) => {
                            let _ = write!(txt, " {:>16}", format!("{:.2} ({:.2})", o.mean, o.sd));
                            let _ = writeln!(
                                csv,
                                "{},{},{},{},{},{},{}",
                                e.experiment,
                                data.token(),
                                label.token(),
                                name,
                                o.mean,
                                o.sd,
                                o.n
                            );
                        }
                        None => {
                            let _ = write!(txt, " {:>16}", "-");
                        }
                    }
                }
            }
            let _ = writeln!(txt);
        }
    }
    (txt, csv)
}

/// Human-human and model-human overlap summary.
pub fn overlap_summary_table(metrics: &Metrics) -> (String, String) {
    let mut txt = String::new();
    let mut csv = String::from("group,mean,sd,min,max,pairs\n");
    let mut row = |name: &str, s: &Spread| {
        let _ = writeln!(
            txt,
            "{:<22} {:>5} ({:>4})  {}-{}  n={}",
            name,
            pct(s.mean),
            pct(s.sd),
            pct(s.min),
            pct(s.max),
            s.n
        );
        let _ = writeln!(
            csv,
            "{name},{},{},{},{},{}",
            s.mean, s.sd, s.min, s.max, s.n
        );
    };
    if let Some(s) = metrics
        .human
        .as_ref()
        .and_then(|h| h.internal_overlap.as_ref())
    {
        row("human-human", s);
    }
    for e in &metrics.experiments {
        if let Some(c) = &e.report.comparison {
            row(&format!("{} all-human", e.experiment), &c.overlap);
        }
        if let Some(b) = &e.best_overlap {
            row(&format!("{} best-human", e.experiment), b);
        }
        if let Some(s) = &e.report.model.internal_overlap {
            row(&format!("{} model-model", e.experiment), s);
        }
    }
    (txt, csv)
}

/// Mean production probability per answer type with correlations to humans.
pub fn production_table(metrics: &Metrics) -> (String, String) {
    let mut txt = String::new();
    let mut csv = String::from("group,type,mean,sd,spearman,pearson\n");
    let _ = write!(txt, "{:<13}", "type");
    if metrics.human.is_some() {
        let _ = write!(txt, " {:>13}", "human");
    }
    for e in &metrics.experiments {
        let _ = write!(txt, " {:>13} {:>6} {:>6}", e.experiment, "rho", "r");
    }
    let _ = writeln!(txt);
    for (i, t) in AnswerType::FIVE.iter().enumerate() {
        let _ = write!(txt, "{:<13}", t.token());
        if let Some(h) = &metrics.human {
            let _ = write!(
                txt,
                " {:>13}",
                format!("{} ({})", pct(h.type_means[i]), pct(h.type_sds[i]))
            );
            let _ = writeln!(
                csv,
                "human,{},{},{},,",
                t.token(),
                h.type_means[i],
                h.type_sds[i]
            );
        }
        for e in &metrics.experiments {
            let g = &e.report.model;
            let (rho, r) = e
                .report
                .comparison
                .as_ref()
                .map_or((None, None), |c| (c.type_spearman[i], c.type_pearson[i]));
            let _ = write!(
                txt,
                " {:>13} {:>6} {:>6}",
                format!("{} ({})", pct(g.type_means[i]), pct(g.type_sds[i])),
                opt(rho),
                opt(r)
            );
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{}",
                e.experiment,
                t.token(),
                g.type_means[i],
                g.type_sds[i],
                rho.map_or(String::new(), |v| v.to_string()),
                r.map_or(String::new(), |v| v.to_string())
            );
        }
        let _ = writeln!(txt);
    }
    (txt, csv)
}

/// Headline numbers: accuracies, saliency effects, cross-entropy.
pub fn headline(metrics: &Metrics) -> String {
    let mut txt = String::new();
    if let Some(h) = &metrics.human {
        let _ = writeln!(
            txt,
            "human: {} responders, accuracy {}% ({}-{}%), {} characters at 0%, saliency r {}",
            h.responders,
            pct(h.accuracy.mean),
            pct(h.accuracy.min),
            pct(h.accuracy.max),
            h.zero_accuracy_characters,
            opt(h.saliency_r)
        );
        let v: Vec<f64> = h.variability.iter().map(|&x| x as f64).collect();
        let s = Spread::of(&v);
        let _ = writeln!(
            txt,
            "human answers per character: mean {:.1}, min {}, max {}, saliency r {}",
            s.mean,
            s.min,
            s.max,
            opt(h.variability_saliency_r)
        );
    }
    for e in &metrics.experiments {
        let m = &e.report.model;
        let _ = writeln!(
            txt,
            "{}: {} runs, grand mean accuracy {}%, saliency r {}, semantic P_p {}%",
            e.experiment,
            e.runs,
            pct(e.grand_mean_accuracy),
            opt(m.saliency_r),
            pct(m.type_means[4])
        );
        if let Some(c) = &e.report.comparison {
            let _ = writeln!(
                txt,
                "{}: character accuracy vs human r {} rho {}; H(human, model) pooled {:.3}, per character {:.3}",
                e.experiment,
                opt(c.accuracy_pearson),
                opt(c.accuracy_spearman),
                c.cross_entropy.pooled,
                c.cross_entropy.per_character
            );
        }
    }
    txt
}

pub fn write_tables(metrics: &Metrics, dir: &Path) -> Result<()> {
    for e in &metrics.experiments {
        let (t, c) = accuracy_table(e);
        write_text(&dir.join(format!("accuracy_{}.txt", e.experiment)), &t)?;
        write_text(&dir.join(format!("accuracy_{}.csv", e.experiment)), &c)?;
    }
    if metrics.human.is_some() {
        let (t, c) = overlap_variant_table(&metrics.experiments);
        write_text(&dir.join("overlap_by_variant.txt"), &t)?;
        write_text(&dir.join("overlap_by_variant.csv"), &c)?;
    }
    let (t, c) = overlap_summary_table(metrics);
    write_text(&dir.join("overlap_summary.txt"), &t)?;
    write_text(&dir.join("overlap_summary.csv"), &c)?;
    let (t, c) = production_table(metrics);
    write_text(&dir.join("production.txt"), &t)?;
    write_text(&dir.join("production.csv"), &c)?;
    write_text(&dir.join("headline.txt"), &headline(metrics))?;
    Ok(())
}
