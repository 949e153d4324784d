//! Model variants, token vocabularies, and the input/output sequence formats
//! for both experiments.
//!
//! Input (orthography only):      `Begin, 火, 各, End`
//! Input (orthography + pinyin):  `Begin, 火, h, uo, 3, End, 各, g, e, 4, End`
//! Output:                        `Begin, [side], [regularity], onset, final, [tone], End`
//!
//! A frequency-bucket token, when present, sits just before the last `End`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lexicon::{
    hex16, BucketBoundaries, CharacterEntry, FrequencyBucket, Lexicon, Side, TrainingSet,
};
use crate::phonology::{classify_regularity, Pinyin, RegularityType, Tone};

pub const PAD: &str = "<pad>";
pub const BEGIN: &str = "Begin";
pub const END: &str = "End";
pub const UNK: &str = "<unk>";
pub const SPECIALS: [&str; 4] = [PAD, BEGIN, END, UNK];

pub const PAD_ID: usize = 0;
pub const BEGIN_ID: usize = 1;
pub const END_ID: usize = 2;
pub const UNK_ID: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum InputMode {
    /// Radical glyphs only (Experiment 1).
    Ortho,
    /// Radical glyphs followed by their onset, final and tone (Experiment 2).
    OrthoPinyin,
}

impl InputMode {
    pub fn token(self) -> &'static str {
        match self {
            InputMode::Ortho => "exp1",
            InputMode::OrthoPinyin => "exp2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LabelScheme {
    Base,
    LabelM,
    LabelS,
    LabelMr,
    LabelSr,
}

impl LabelScheme {
    pub const ALL: [LabelScheme; 5] = [
        LabelScheme::Base,
        LabelScheme::LabelM,
        LabelScheme::LabelS,
        LabelScheme::LabelMr,
        LabelScheme::LabelSr,
    ];

    pub fn token(self) -> &'static str {
        match self {
            LabelScheme::Base => "base",
            LabelScheme::LabelM => "label_m",
            LabelScheme::LabelS => "label_s",
            LabelScheme::LabelMr => "label_mr",
            LabelScheme::LabelSr => "label_sr",
        }
    }

    pub fn has_position(self) -> bool {
        self != LabelScheme::Base
    }

    pub fn has_regularity(self) -> bool {
        matches!(self, LabelScheme::LabelMr | LabelScheme::LabelSr)
    }

    /// Position label follows phonetic similarity instead of the dictionary.
    pub fn by_similarity(self) -> bool {
        matches!(self, LabelScheme::LabelS | LabelScheme::LabelSr)
    }
}

/// Training data condition: the three frequency subsets, plus ALL with a
/// frequency-bucket input token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DataCondition {
    All,
    Mid,
    High,
    AllFreq,
}

impl DataCondition {
    pub const ALL: [DataCondition; 4] = [
        DataCondition::All,
        DataCondition::Mid,
        DataCondition::High,
        DataCondition::AllFreq,
    ];

    pub fn token(self) -> &'static str {
        match self {
            DataCondition::All => "all",
            DataCondition::Mid => "mid",
            DataCondition::High => "high",
            DataCondition::AllFreq => "all+freq",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModelVariant {
    pub input_mode: InputMode,
    pub data: DataCondition,
    pub label_scheme: LabelScheme,
    pub with_tone: bool,
    pub with_shuffle: bool,
}

impl ModelVariant {
    pub fn base(input_mode: InputMode) -> ModelVariant {
        ModelVariant {
            input_mode,
            data: DataCondition::All,
            label_scheme: LabelScheme::Base,
            with_tone: false,
            with_shuffle: false,
        }
    }

    pub fn with_freq(&self) -> bool {
        self.data == DataCondition::AllFreq
    }

    pub fn training_set(&self) -> TrainingSet {
        match self.data {
            DataCondition::All | DataCondition::AllFreq => TrainingSet::All,
            DataCondition::Mid => TrainingSet::Mid,
            DataCondition::High => TrainingSet::High,
        }
    }

    /// The 80 admissible variants of one experiment, in table order.
    pub fn all(input_mode: InputMode) -> Vec<ModelVariant> {
        let mut out = Vec::with_capacity(80);
        for data in DataCondition::ALL {
            for label_scheme in LabelScheme::ALL {
                for with_tone in [false, true] {
                    for with_shuffle in [false, true] {
                        out.push(ModelVariant {
                            input_mode,
                            data,
                            label_scheme,
                            with_tone,
                            with_shuffle,
                        });
                    }
                }
            }
        }
        out
    }

    /// Expands a comma-separated list of variant patterns. Each pattern is a
    /// variant string in which any field may be `*`; the experiment field may
    /// be omitted, in which case `input_mode` is used.
    pub fn expand(patterns: &str, input_mode: InputMode) -> Result<Vec<ModelVariant>> {
        let mut out: Vec<ModelVariant> = Vec::new();
        for pat in patterns.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let mut fields: Vec<&str> = pat.split('/').collect();
            if fields.len() == 4 {
                fields.insert(0, input_mode.token());
            }
            if fields.len() != 5 {
                return Err(variant_err(pat, "expected exp/data/label/±tone/±shuffle"));
            }
            let candidates = [InputMode::Ortho, InputMode::OrthoPinyin]
                .into_iter()
                .flat_map(ModelVariant::all);
            let mut matched = false;
            for v in candidates {
                let parts = v.fields();
                if fields
                    .iter()
                    .zip(parts.iter())
                    .all(|(f, p)| *f == "*" || f == p)
                {
                    matched = true;
                    if !out.contains(&v) {
                        out.push(v);
                    }
                }
            }
            if !matched {
                return Err(variant_err(pat, "matches no variant"));
            }
        }
        Ok(out)
    }

    fn fields(&self) -> [&'static str; 5] {
        [
            self.input_mode.token(),
            self.data.token(),
            self.label_scheme.token(),
            if self.with_tone { "+tone" } else { "-tone" },
            if self.with_shuffle {
                "+shuffle"
            } else {
                "-shuffle"
            },
        ]
    }

    /// Filesystem-safe form of the variant string.
    pub fn slug(&self) -> String {
        self.to_string()
            .replace('/', "_")
            .replace('+', "p")
            .replace('-', "m")
    }
}

fn variant_err(spec: &str, msg: &str) -> Error {
    Error::Variant {
        spec: spec.to_string(),
        msg: msg.to_string(),
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.fields().join("/"))
    }
}

impl FromStr for ModelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<ModelVariant> {
        let parts: Vec<&str> = s.trim().split('/').collect();
        if parts.len() != 5 {
            return Err(variant_err(s, "expected exp/data/label/±tone/±shuffle"));
        }
        let input_mode = match parts[0] {
            "exp1" => InputMode::Ortho,
            "exp2" => InputMode::OrthoPinyin,
            _ => return Err(variant_err(s, "experiment must be exp1 or exp2")),
        };
        let data = DataCondition::ALL
            .into_iter()
            .find(|d| d.token() == parts[1])
            .ok_or_else(|| variant_err(s, "data must be all, mid, high or all+freq"))?;
        let label_scheme = LabelScheme::ALL
            .into_iter()
            .find(|l| l.token() == parts[2])
            .ok_or_else(|| variant_err(s, "unknown label scheme"))?;
        let flag = |tok: &str, name: &str| match tok.strip_suffix(name) {
            Some("+") => Ok(true),
            Some("-") => Ok(false),
            _ => Err(variant_err(s, &format!("expected +{name} or -{name}"))),
        };
        Ok(ModelVariant {
            input_mode,
            data,
            label_scheme,
            with_tone: flag(parts[3], "tone")?,
            with_shuffle: flag(parts[4], "shuffle")?,
        })
    }
}

impl Serialize for ModelVariant {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ModelVariant {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Token/id bijection with the four reserved specials at ids 0..4.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    tokens: Vec<String>,
    ids: HashMap<String, usize>,
}

impl From<Vec<String>> for Vocabulary {
    fn from(tokens: Vec<String>) -> Vocabulary {
        Vocabulary::from_tokens(tokens)
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Vec<String> {
        v.tokens
    }
}

impl Vocabulary {
    /// Specials first, then every kept token in sorted order. A token seen only
    /// once is dropped (and will map to `<unk>`) unless `exempt` says otherwise.
    pub fn build<'a, I, S>(sequences: I, exempt: impl Fn(&str) -> bool) -> Vocabulary
    where
        I: IntoIterator<Item = &'a S>,
        S: AsRef<[String]> + 'a + ?Sized,
    {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for seq in sequences {
            for tok in seq.as_ref() {
                *counts.entry(tok.as_str()).or_default() += 1;
            }
        }
        let kept = counts
            .into_iter()
            .filter(|(tok, c)| !SPECIALS.contains(tok) && (*c > 1 || exempt(tok)))
            .map(|(tok, _)| tok.to_string());
        Self::from_tokens(SPECIALS.iter().map(|s| s.to_string()).chain(kept).collect())
    }

    pub fn from_tokens(tokens: Vec<String>) -> Vocabulary {
        let ids = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary { tokens, ids }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn contains(&self, tok: &str) -> bool {
        self.ids.contains_key(tok)
    }

    pub fn id(&self, tok: &str) -> usize {
        self.ids.get(tok).copied().unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: usize) -> &str {
        self.tokens.get(id).map(String::as_str).unwrap_or(UNK)
    }

    pub fn encode(&self, seq: &[String]) -> Vec<usize> {
        seq.iter().map(|t| self.id(t)).collect()
    }

    pub fn decode(&self, ids: &[usize]) -> Vec<String> {
        ids.iter().map(|&i| self.token(i).to_string()).collect()
    }

    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for t in &self.tokens {
            h.update(t.as_bytes());
            h.update(b"\n");
        }
        hex16(&h.finalize())
    }
}

/// Model output decoded against a variant's output grammar.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedAnswer {
    pub position_label: Option<Side>,
    pub regularity_label: Option<RegularityType>,
    pub pinyin: Option<Pinyin>,
    pub valid: bool,
}

impl ParsedAnswer {
    fn invalid() -> ParsedAnswer {
        ParsedAnswer {
            position_label: None,
            regularity_label: None,
            pinyin: None,
            valid: false,
        }
    }
}

/// One (character, reading) training pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub glyph: String,
    pub source: Vec<String>,
    pub target: Vec<String>,
}

/// Encoder/decoder for token sequences over one lexicon.
#[derive(Debug, Clone)]
pub struct SequenceCodec<'a> {
    lex: &'a Lexicon,
    boundaries: BucketBoundaries,
    symbols: HashSet<String>,
}

impl<'a> SequenceCodec<'a> {
    pub fn new(lex: &'a Lexicon) -> SequenceCodec<'a> {
        let inv = lex.inventory();
        let symbols = SPECIALS
            .iter()
            .map(|s| s.to_string())
            .chain(inv.initials().iter().cloned())
            .chain(inv.finals().iter().cloned())
            .chain(Tone::ALL.iter().map(|t| t.token()))
            .chain(FrequencyBucket::ALL.iter().map(|b| b.token().to_string()))
            .chain(
                [Side::Left, Side::Right]
                    .iter()
                    .map(|s| s.token().to_string()),
            )
            .chain(RegularityType::ALL.iter().map(|r| r.token().to_string()))
            .collect();
        SequenceCodec {
            lex,
            boundaries: lex.bucket_boundaries(),
            symbols,
        }
    }

    pub fn lexicon(&self) -> &'a Lexicon {
        self.lex
    }

    /// True for the closed alphabet of non-glyph tokens; only radical glyphs
    /// are subject to the singleton-to-`<unk>` rule.
    pub fn is_symbolic(&self, tok: &str) -> bool {
        self.symbols.contains(tok)
    }

    pub fn encode_input(&self, entry: &CharacterEntry, variant: &ModelVariant) -> Vec<String> {
        let bucket = variant
            .with_freq()
            .then(|| self.boundaries.bucket(entry.frequency));
        self.encode_radicals(&entry.left_radical, &entry.right_radical, bucket, variant)
    }

    /// Input sequence for an arbitrary radical pair. Radicals without a known
    /// reading get `<unk>` pinyin tokens in the pinyin-augmented mode.
    pub fn encode_radicals(
        &self,
        left: &str,
        right: &str,
        bucket: Option<FrequencyBucket>,
        variant: &ModelVariant,
    ) -> Vec<String> {
        let mut seq = vec![BEGIN.to_string()];
        match variant.input_mode {
            InputMode::Ortho => {
                seq.push(left.to_string());
                seq.push(right.to_string());
            }
            InputMode::OrthoPinyin => {
                for (i, r) in [left, right].into_iter().enumerate() {
                    seq.push(r.to_string());
                    match self.lex.radical_pinyin(r) {
                        Some(p) => {
                            seq.push(p.onset.clone());
                            seq.push(p.fin.clone());
                            seq.push(p.tone.token());
                        }
                        None => seq.extend([UNK, UNK, UNK].map(String::from)),
                    }
                    if i == 0 {
                        seq.push(END.to_string());
                    }
                }
            }
        }
        if let Some(b) = bucket {
            seq.push(b.token().to_string());
        }
        seq.push(END.to_string());
        seq
    }

    pub fn encode_output(
        &self,
        entry: &CharacterEntry,
        target: &Pinyin,
        variant: &ModelVariant,
    ) -> Vec<String> {
        let mut seq = vec![BEGIN.to_string()];
        let scheme = variant.label_scheme;
        if scheme.has_position() {
            let side = if scheme.by_similarity() {
                self.lex.similarity_side(entry, target)
            } else {
                entry.phonetic_side
            };
            seq.push(side.token().to_string());
            if scheme.has_regularity() {
                let radical_py = self
                    .lex
                    .radical_pinyin(entry.radical(side))
                    .expect("lexicon radicals are complete");
                seq.push(classify_regularity(target, radical_py).token().to_string());
            }
        }
        if variant.with_shuffle {
            seq.push(target.fin.clone());
            seq.push(target.onset.clone());
        } else {
            seq.push(target.onset.clone());
            seq.push(target.fin.clone());
        }
        if variant.with_tone {
            seq.push(target.tone.token());
        }
        seq.push(END.to_string());
        seq
    }

    /// Strict parse of an output sequence under the variant's grammar.
    pub fn decode_output(&self, tokens: &[String], variant: &ModelVariant) -> ParsedAnswer {
        let inv = self.lex.inventory();
        let mut it = tokens.iter().map(String::as_str);
        let mut out = ParsedAnswer::invalid();
        if it.next() != Some(BEGIN) {
            return out;
        }
        let scheme = variant.label_scheme;
        if scheme.has_position() {
            match it.next().and_then(Side::from_token) {
                Some(s) => out.position_label = Some(s),
                None => return ParsedAnswer::invalid(),
            }
            if scheme.has_regularity() {
                match it.next().and_then(RegularityType::from_token) {
                    Some(r) => out.regularity_label = Some(r),
                    None => return ParsedAnswer::invalid(),
                }
            }
        }
        let (a, b) = match (it.next(), it.next()) {
            (Some(a), Some(b)) => (a, b),
            _ => return ParsedAnswer::invalid(),
        };
        let (onset, fin) = if variant.with_shuffle { (b, a) } else { (a, b) };
        if !inv.is_initial(onset) || !inv.is_final(fin) {
            return ParsedAnswer::invalid();
        }
        let mut tone = Tone::NEUTRAL;
        if variant.with_tone {
            match it
                .next()
                .and_then(|t| t.parse::<u8>().ok())
                .and_then(Tone::new)
            {
                Some(t) => tone = t,
                None => return ParsedAnswer::invalid(),
            }
        }
        if it.next() != Some(END) || it.next().is_some() {
            return ParsedAnswer::invalid();
        }
        out.pinyin = Some(Pinyin::new(onset, fin, tone));
        out.valid = true;
        out
    }

    /// One example per reading of every listed entry.
    pub fn examples(&self, indices: &[usize], variant: &ModelVariant) -> Vec<Example> {
        let entries = self.lex.entries();
        let mut out = Vec::new();
        for &i in indices {
            let e = &entries[i];
            let source = self.encode_input(e, variant);
            for p in &e.pinyins {
                out.push(Example {
                    glyph: e.glyph.clone(),
                    source: source.clone(),
                    target: self.encode_output(e, p, variant),
                });
            }
        }
        out
    }

    /// Source and target vocabularies from a variant's training examples.
    pub fn build_vocabs(&self, examples: &[Example]) -> (Vocabulary, Vocabulary) {
        let src = Vocabulary::build(examples.iter().map(|e| &e.source), |t| self.is_symbolic(t));
        let tgt = Vocabulary::build(examples.iter().map(|e| &e.target), |_| true);
        (src, tgt)
    }
}
