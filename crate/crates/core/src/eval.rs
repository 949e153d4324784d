//! Human and model answer statistics: accuracy, answer types, production
//! probabilities, overlap, correlations and cross-entropy.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::lexicon::{CharacterEntry, Lexicon};
use crate::phonology::{
    classify_regularity, normalize_spelling, parse_pinyin, Pinyin, RegularityType,
};
use crate::{Error, Result};

/// Floor applied to model probabilities before taking logarithms.
pub const CROSS_ENTROPY_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResponderKind {
    Human,
    Model,
}

/// One responder's answers. A test glyph without an entry counts as a
/// missing or unparseable answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerSet {
    pub responder_id: String,
    pub kind: ResponderKind,
    pub answers: BTreeMap<String, Pinyin>,
    /// Glyphs the responder claimed to know. Recorded only.
    #[serde(default)]
    pub known: BTreeSet<String>,
}

impl AnswerSet {
    pub fn new(responder_id: impl Into<String>, kind: ResponderKind) -> AnswerSet {
        AnswerSet {
            responder_id: responder_id.into(),
            kind,
            answers: BTreeMap::new(),
            known: BTreeSet::new(),
        }
    }

    pub fn answer(&self, glyph: &str) -> Option<&Pinyin> {
        self.answers.get(glyph)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnswerType {
    Regular,
    Alliterating,
    Rhyming,
    Irregular,
    Semantic,
    Invalid,
}

impl AnswerType {
    pub const ALL: [AnswerType; 6] = [
        AnswerType::Regular,
        AnswerType::Alliterating,
        AnswerType::Rhyming,
        AnswerType::Irregular,
        AnswerType::Semantic,
        AnswerType::Invalid,
    ];
    /// The five types that enter correlations and cross-entropy.
    pub const FIVE: [AnswerType; 5] = [
        AnswerType::Regular,
        AnswerType::Alliterating,
        AnswerType::Rhyming,
        AnswerType::Irregular,
        AnswerType::Semantic,
    ];

    pub fn token(self) -> &'static str {
        match self {
            AnswerType::Regular => "regular",
            AnswerType::Alliterating => "alliterating",
            AnswerType::Rhyming => "rhyming",
            AnswerType::Irregular => "irregular",
            AnswerType::Semantic => "semantic",
            AnswerType::Invalid => "invalid",
        }
    }
}

impl From<RegularityType> for AnswerType {
    fn from(r: RegularityType) -> Self {
        match r {
            RegularityType::Regular => AnswerType::Regular,
            RegularityType::Alliterating => AnswerType::Alliterating,
            RegularityType::Rhyming => AnswerType::Rhyming,
            RegularityType::Irregular => AnswerType::Irregular,
        }
    }
}

/// Correct iff onset and final match any gold reading; tone is ignored.
pub fn score_answer(answer: Option<&Pinyin>, entry: &CharacterEntry) -> bool {
    answer.is_some_and(|a| entry.pinyins.iter().any(|g| g.same_syllable(a)))
}

/// Fraction of the test characters this responder named correctly.
pub fn responder_accuracy(set: &AnswerSet, lex: &Lexicon) -> f64 {
    let n = lex.test_set().len();
    if n == 0 {
        return 0.0;
    }
    let correct = lex
        .test_entries()
        .filter(|e| score_answer(set.answer(&e.glyph), e))
        .count();
    correct as f64 / n as f64
}

/// Per test character (in test-set order), the fraction of responders who
/// named it correctly.
pub fn character_accuracy(sets: &[AnswerSet], lex: &Lexicon) -> Vec<f64> {
    lex.test_entries()
        .map(|e| {
            let hits = sets
                .iter()
                .filter(|s| score_answer(s.answer(&e.glyph), e))
                .count();
            ratio(hits, sets.len())
        })
        .collect()
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Regular against the true phonetic radical wins; otherwise a match with
/// the semantic radical's reading is `semantic`; otherwise the regularity
/// against the phonetic radical.
pub fn classify_answer_type(
    answer: Option<&Pinyin>,
    entry: &CharacterEntry,
    lex: &Lexicon,
) -> AnswerType {
    let Some(answer) = answer else {
        return AnswerType::Invalid;
    };
    let regularity = lex
        .radical_pinyin(entry.phonetic_radical())
        .map_or(RegularityType::Irregular, |r| {
            classify_regularity(answer, r)
        });
    if regularity == RegularityType::Regular {
        return AnswerType::Regular;
    }
    if lex
        .radical_pinyin(entry.semantic_radical())
        .is_some_and(|s| s.same_syllable(answer))
    {
        return AnswerType::Semantic;
    }
    regularity.into()
}

/// Per test character, the share of responders producing each answer type,
/// indexed by `AnswerType as usize`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductionProfile {
    pub glyphs: Vec<String>,
    pub shares: Vec<[f64; 6]>,
}

impl ProductionProfile {
    pub fn share(&self, char_index: usize, t: AnswerType) -> f64 {
        self.shares[char_index][t as usize]
    }

    /// Per-type mean over characters, in [`AnswerType::FIVE`] order.
    pub fn type_means(&self) -> [f64; 5] {
        let mut out = [0.0; 5];
        for (i, t) in AnswerType::FIVE.iter().enumerate() {
            out[i] = mean(&self.type_column(*t));
        }
        out
    }

    pub fn type_sds(&self) -> [f64; 5] {
        let mut out = [0.0; 5];
        for (i, t) in AnswerType::FIVE.iter().enumerate() {
            out[i] = sample_sd(&self.type_column(*t));
        }
        out
    }

    pub fn type_column(&self, t: AnswerType) -> Vec<f64> {
        self.shares.iter().map(|s| s[t as usize]).collect()
    }

    pub fn invalid_mean(&self) -> f64 {
        mean(&self.type_column(AnswerType::Invalid))
    }
}

pub fn production_profile(sets: &[AnswerSet], lex: &Lexicon) -> ProductionProfile {
    let mut glyphs = Vec::new();
    let mut shares = Vec::new();
    for e in lex.test_entries() {
        let mut counts = [0usize; 6];
        for s in sets {
            counts[classify_answer_type(s.answer(&e.glyph), e, lex) as usize] += 1;
        }
        glyphs.push(e.glyph.clone());
        shares.push(counts.map(|c| ratio(c, sets.len())));
    }
    ProductionProfile { glyphs, shares }
}

/// Number of distinct tone-ignored answers per test character. Missing
/// answers are not counted.
pub fn answer_variability(sets: &[AnswerSet], lex: &Lexicon) -> Vec<usize> {
    lex.test_entries()
        .map(|e| {
            sets.iter()
                .filter_map(|s| s.answer(&e.glyph))
                .map(Pinyin::toneless)
                .collect::<BTreeSet<_>>()
                .len()
        })
        .collect()
}

/// Fraction of `glyphs` where both responders gave the same tone-ignored
/// answer. Missing answers never match.
pub fn overlap_rate(a: &AnswerSet, b: &AnswerSet, glyphs: &[String]) -> f64 {
    let same = glyphs
        .iter()
        .filter(|g| match (a.answer(g), b.answer(g)) {
            (Some(x), Some(y)) => x.same_syllable(y),
            _ => false,
        })
        .count();
    ratio(same, glyphs.len())
}

/// Overlap over all unordered pairs within one group.
pub fn pairwise_overlaps(sets: &[AnswerSet], glyphs: &[String]) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            out.push(overlap_rate(&sets[i], &sets[j], glyphs));
        }
    }
    out
}

/// Overlap over all pairs across two groups.
pub fn cross_overlaps(a: &[AnswerSet], b: &[AnswerSet], glyphs: &[String]) -> Vec<f64> {
    a.iter()
        .flat_map(|x| b.iter().map(move |y| overlap_rate(x, y, glyphs)))
        .collect()
}

/// Pearson correlation. `None` when fewer than three points or either
/// vector is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Ok(None);
    }
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    Ok(Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)))
}

/// Spearman correlation: Pearson over average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

/// 1-based ranks; tied values share the mean of their positions.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// `H(p, q) = -Σ p_i ln q_i` with `q` floored at `epsilon` and renormalised.
pub fn cross_entropy(p: &[f64], q: &[f64], epsilon: f64) -> f64 {
    let floored: Vec<f64> = q.iter().map(|v| v.max(epsilon)).collect();
    let z: f64 = floored.iter().sum();
    p.iter()
        .zip(&floored)
        .filter(|(pi, _)| **pi > 0.0)
        .map(|(pi, qi)| -pi * (qi / z).ln())
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossEntropy {
    /// Cross-entropy between the type means pooled over characters.
    pub pooled: f64,
    /// Mean of the per-character cross-entropies.
    pub per_character: f64,
}

fn five(shares: &[f64; 6]) -> [f64; 5] {
    let mut v = [0.0; 5];
    v.copy_from_slice(&shares[..5]);
    let z: f64 = v.iter().sum();
    if z > 0.0 {
        v.iter_mut().for_each(|x| *x /= z);
    }
    v
}

/// Both aggregations over the five types; invalid mass is dropped and each
/// distribution renormalised before flooring.
pub fn cross_entropy_profiles(
    human: &ProductionProfile,
    model: &ProductionProfile,
    epsilon: f64,
) -> Result<CrossEntropy> {
    if human.glyphs != model.glyphs {
        return Err(Error::LengthMismatch(
            human.glyphs.len(),
            model.glyphs.len(),
        ));
    }
    let pooled_of = |p: &ProductionProfile| {
        let mut acc = [0.0; 6];
        for s in &p.shares {
            for (a, v) in acc.iter_mut().zip(s) {
                *a += v;
            }
        }
        five(&acc)
    };
    let pooled = cross_entropy(&pooled_of(human), &pooled_of(model), epsilon);
    let per: Vec<f64> = human
        .shares
        .iter()
        .zip(&model.shares)
        .map(|(h, m)| cross_entropy(&five(h), &five(m), epsilon))
        .collect();
    Ok(CrossEntropy {
        pooled,
        per_character: mean(&per),
    })
}

/// Phonetic-radical saliency of each test character, in test-set order.
pub fn test_saliency(lex: &Lexicon) -> Result<Vec<f64>> {
    lex.test_entries()
        .map(|e| lex.saliency(e.phonetic_radical()))
        .collect()
}

/// Pearson r between per-character accuracy and phonetic-radical saliency.
pub fn saliency_effect(character_accuracy: &[f64], lex: &Lexicon) -> Result<Option<f64>> {
    pearson(character_accuracy, &test_saliency(lex)?)
}

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        x.iter().sum::<f64>() / x.len() as f64
    }
}

/// Sample standard deviation (n - 1 denominator); zero below two values.
pub fn sample_sd(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

impl Spread {
    pub fn of(x: &[f64]) -> Spread {
        Spread {
            n: x.len(),
            mean: mean(x),
            sd: sample_sd(x),
            min: x.iter().copied().fold(f64::INFINITY, f64::min),
            max: x.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Statistics of one group of responders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub responders: usize,
    pub accuracy: Spread,
    pub character_accuracy: Vec<f64>,
    pub zero_accuracy_characters: usize,
    pub saliency_r: Option<f64>,
    pub variability: Vec<usize>,
    pub variability_saliency_r: Option<f64>,
    pub profile: ProductionProfile,
    pub type_means: [f64; 5],
    pub type_sds: [f64; 5],
    pub invalid_mean: f64,
    pub internal_overlap: Option<Spread>,
}

pub fn summarize(sets: &[AnswerSet], lex: &Lexicon) -> Result<GroupSummary> {
    let accuracies: Vec<f64> = sets.iter().map(|s| responder_accuracy(s, lex)).collect();
    let character_accuracy = character_accuracy(sets, lex);
    let saliency = test_saliency(lex)?;
    let variability = answer_variability(sets, lex);
    let var_f: Vec<f64> = variability.iter().map(|&v| v as f64).collect();
    let profile = production_profile(sets, lex);
    let overlaps = pairwise_overlaps(sets, lex.test_set());
    Ok(GroupSummary {
        responders: sets.len(),
        accuracy: Spread::of(&accuracies),
        zero_accuracy_characters: character_accuracy.iter().filter(|&&a| a == 0.0).count(),
        saliency_r: pearson(&character_accuracy, &saliency)?,
        character_accuracy,
        variability_saliency_r: pearson(&var_f, &saliency)?,
        variability,
        type_means: profile.type_means(),
        type_sds: profile.type_sds(),
        invalid_mean: profile.invalid_mean(),
        profile,
        internal_overlap: (!overlaps.is_empty()).then(|| Spread::of(&overlaps)),
    })
}

/// Model group compared against a human group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanComparison {
    pub accuracy_pearson: Option<f64>,
    pub accuracy_spearman: Option<f64>,
    pub overlap: Spread,
    /// Per-type Pearson r of production probabilities across characters.
    pub type_pearson: [Option<f64>; 5],
    pub type_spearman: [Option<f64>; 5],
    pub cross_entropy: CrossEntropy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub glyphs: Vec<String>,
    pub saliency: Vec<f64>,
    pub model: GroupSummary,
    pub human: Option<GroupSummary>,
    pub comparison: Option<HumanComparison>,
}

pub fn compare(
    lex: &Lexicon,
    model: &[AnswerSet],
    human: Option<&[AnswerSet]>,
) -> Result<ComparisonReport> {
    let model_summary = summarize(model, lex)?;
    let (human_summary, comparison) = match human {
        Some(h) => {
            let hs = summarize(h, lex)?;
            let mut type_pearson = [None; 5];
            let mut type_spearman = [None; 5];
            for (i, t) in AnswerType::FIVE.iter().enumerate() {
                let (a, b) = (
                    hs.profile.type_column(*t),
                    model_summary.profile.type_column(*t),
                );
                type_pearson[i] = pearson(&a, &b)?;
                type_spearman[i] = spearman(&a, &b)?;
            }
            let cmp = HumanComparison {
                accuracy_pearson: pearson(
                    &hs.character_accuracy,
                    &model_summary.character_accuracy,
                )?,
                accuracy_spearman: spearman(
                    &hs.character_accuracy,
                    &model_summary.character_accuracy,
                )?,
                overlap: Spread::of(&cross_overlaps(model, h, lex.test_set())),
                type_pearson,
                type_spearman,
                cross_entropy: cross_entropy_profiles(
                    &hs.profile,
                    &model_summary.profile,
                    CROSS_ENTROPY_EPSILON,
                )?,
            };
            (Some(hs), Some(cmp))
        }
        None => (None, None),
    };
    Ok(ComparisonReport {
        glyphs: lex.test_set().to_vec(),
        saliency: test_saliency(lex)?,
        model: model_summary,
        human: human_summary,
        comparison,
    })
}

/// Parses a typed answer after spelling normalisation; `None` if it is not
/// a syllable of the inventory.
pub fn parse_answer(raw: &str, lex: &Lexicon) -> Option<Pinyin> {
    let norm = normalize_spelling(raw.trim());
    if norm.is_empty() {
        return None;
    }
    parse_pinyin(&norm, lex.inventory()).ok()
}

#[derive(Debug, Deserialize)]
struct HumanRow {
    participant_id: String,
    glyph: String,
    knows_character: String,
    #[serde(default)]
    answer_pinyin: String,
}

/// Reads `participant_id, glyph, knows_character, answer_pinyin` rows.
/// Unparseable answers are left missing. Glyphs outside the test set and
/// duplicate answers are load errors.
pub fn load_human_answers(path: &Path, lex: &Lexicon) -> Result<Vec<AnswerSet>> {
    let file_name = path.display().to_string();
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Load {
                file: file_name.clone(),
                row: 0,
                msg: format!("{other:?}"),
            },
        })?;
    let mut sets: BTreeMap<String, AnswerSet> = BTreeMap::new();
    let mut seen: BTreeSet<(String, String)> = BTreeSet::new();
    for (i, row) in rdr.deserialize::<HumanRow>().enumerate() {
        let row_no = i + 2;
        let load_err = |msg: String| Error::Load {
            file: file_name.clone(),
            row: row_no,
            msg,
        };
        let row = row.map_err(|e| load_err(e.to_string()))?;
        if !lex.is_test(&row.glyph) {
            return Err(load_err(format!("{} is not a test character", row.glyph)));
        }
        if !seen.insert((row.participant_id.clone(), row.glyph.clone())) {
            return Err(load_err(format!(
                "duplicate answer for {} by {}",
                row.glyph, row.participant_id
            )));
        }
        let knows = match row.knows_character.as_str() {
            "1" => true,
            "0" | "" => false,
            other => {
                return Err(load_err(format!(
                    "knows_character must be 0 or 1, got {other}"
                )))
            }
        };
        let set = sets
            .entry(row.participant_id.clone())
            .or_insert_with(|| AnswerSet::new(row.participant_id.clone(), ResponderKind::Human));
        if knows {
            set.known.insert(row.glyph.clone());
        }
        if let Some(p) = parse_answer(&row.answer_pinyin, lex) {
            set.answers.insert(row.glyph, p);
        }
    }
    Ok(sets.into_values().collect())
}
