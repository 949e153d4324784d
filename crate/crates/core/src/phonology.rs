//! Mandarin syllables as (onset, final, tone) triples.
//!
//! The inventory of onsets and finals is shipped as a text file
//! (`data/inventory.txt`) and validated when it is loaded. The null onset is
//! an explicit token, [`NULL_ONSET`], so every syllable has the same
//! two-segment shape.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::path::Path;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Token standing in for a syllable without a consonantal onset.
pub const NULL_ONSET: &str = "∅";

const STANDARD_INVENTORY: &str = include_str!("../data/inventory.txt");

pub const INITIAL_COUNT: usize = 24;
pub const FINAL_COUNT: usize = 34;

/// Onset and final alphabets plus the list of attested toneless syllables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhonInventory {
    initials: Vec<String>,
    finals: Vec<String>,
    syllables: BTreeSet<String>,
}

impl PhonInventory {
    /// The inventory compiled into the crate.
    pub fn standard() -> Arc<PhonInventory> {
        static STANDARD: OnceLock<Arc<PhonInventory>> = OnceLock::new();
        STANDARD
            .get_or_init(|| {
                Arc::new(
                    PhonInventory::from_text(STANDARD_INVENTORY)
                        .expect("bundled inventory is valid"),
                )
            })
            .clone()
    }

    pub fn load(path: &Path) -> Result<PhonInventory> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    /// Parses the three-section text format (`INITIALS`, `FINALS`, `SYLLABLES`).
    /// Blank lines and `#` comments are ignored.
    pub fn from_text(text: &str) -> Result<PhonInventory> {
        let mut section = None;
        let (mut initials, mut finals, mut syllables) = (Vec::new(), Vec::new(), Vec::new());
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match line {
                "INITIALS" | "FINALS" | "SYLLABLES" => {
                    section = Some(line.to_string());
                    continue;
                }
                _ => {}
            }
            let target = match section.as_deref() {
                Some("INITIALS") => &mut initials,
                Some("FINALS") => &mut finals,
                Some("SYLLABLES") => &mut syllables,
                _ => {
                    return Err(Error::Inventory(format!(
                        "line {}: token {line:?} outside of any section",
                        lineno + 1
                    )))
                }
            };
            target.push(line.to_string());
        }
        let inv = PhonInventory {
            initials,
            finals,
            syllables: syllables.into_iter().collect(),
        };
        inv.validate()?;
        Ok(inv)
    }

    fn validate(&self) -> Result<()> {
        if self.initials.len() != INITIAL_COUNT {
            return Err(Error::Inventory(format!(
                "expected {INITIAL_COUNT} initials, found {}",
                self.initials.len()
            )));
        }
        if self.finals.len() != FINAL_COUNT {
            return Err(Error::Inventory(format!(
                "expected {FINAL_COUNT} finals, found {}",
                self.finals.len()
            )));
        }
        let ini: HashSet<&str> = self.initials.iter().map(String::as_str).collect();
        let fin: HashSet<&str> = self.finals.iter().map(String::as_str).collect();
        if ini.len() != self.initials.len() || fin.len() != self.finals.len() {
            return Err(Error::Inventory("duplicate token in inventory".into()));
        }
        if let Some(shared) = ini.intersection(&fin).next() {
            return Err(Error::Inventory(format!(
                "token {shared:?} is both an initial and a final"
            )));
        }
        if !ini.contains(NULL_ONSET) {
            return Err(Error::Inventory(
                "null onset token missing from initials".into(),
            ));
        }
        // Every attested syllable must have exactly one onset/final split and
        // that split must be the longest-match one.
        for syl in &self.syllables {
            let splits: Vec<&str> = self
                .spelled_initials()
                .chain(std::iter::once(""))
                .filter(|i| syl.starts_with(i) && fin.contains(&syl[i.len()..]))
                .collect();
            let longest = self.longest_initial(syl);
            if splits.len() != 1 || splits[0] != longest {
                return Err(Error::Inventory(format!(
                    "syllable {syl:?} has ambiguous onset/final segmentation"
                )));
            }
        }
        Ok(())
    }

    fn spelled_initials(&self) -> impl Iterator<Item = &str> {
        self.initials
            .iter()
            .map(String::as_str)
            .filter(|i| *i != NULL_ONSET)
    }

    fn longest_initial<'a>(&'a self, s: &str) -> &'a str {
        self.spelled_initials()
            .filter(|i| s.starts_with(i))
            .max_by_key(|i| i.len())
            .unwrap_or("")
    }

    pub fn initials(&self) -> &[String] {
        &self.initials
    }

    pub fn finals(&self) -> &[String] {
        &self.finals
    }

    pub fn syllables(&self) -> impl Iterator<Item = &str> {
        self.syllables.iter().map(String::as_str)
    }

    pub fn is_initial(&self, tok: &str) -> bool {
        self.initials.iter().any(|i| i == tok)
    }

    pub fn is_final(&self, tok: &str) -> bool {
        self.finals.iter().any(|f| f == tok)
    }

    pub fn is_attested(&self, p: &Pinyin) -> bool {
        self.syllables.contains(&p.toneless())
    }
}

/// Tone 1-4, or 0 for neutral/unspecified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Tone(u8);

impl Tone {
    pub const NEUTRAL: Tone = Tone(0);
    pub const ALL: [Tone; 5] = [Tone(1), Tone(2), Tone(3), Tone(4), Tone(0)];

    pub fn new(t: u8) -> Option<Tone> {
        (t <= 4).then_some(Tone(t))
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn token(self) -> String {
        self.0.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pinyin {
    pub onset: String,
    pub fin: String,
    pub tone: Tone,
}

impl Pinyin {
    pub fn new(onset: impl Into<String>, fin: impl Into<String>, tone: Tone) -> Pinyin {
        Pinyin {
            onset: onset.into(),
            fin: fin.into(),
            tone,
        }
    }

    pub fn parse(s: &str) -> Result<Pinyin> {
        parse_pinyin(s, &PhonInventory::standard())
    }

    /// Same onset and final; tone ignored.
    pub fn same_syllable(&self, other: &Pinyin) -> bool {
        self.onset == other.onset && self.fin == other.fin
    }

    pub fn with_tone(&self, tone: Tone) -> Pinyin {
        Pinyin {
            tone,
            ..self.clone()
        }
    }

    pub fn toneless(&self) -> String {
        format_pinyin(self, false)
    }
}

impl fmt::Display for Pinyin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_pinyin(self, true))
    }
}

/// Segments a romanized syllable by longest-matching initial.
///
/// A trailing `5` is read as the neutral tone.
pub fn parse_pinyin(s: &str, inv: &PhonInventory) -> Result<Pinyin> {
    let invalid = || Error::InvalidSyllable(s.to_string());
    let (body, tone) = match s.as_bytes().last() {
        Some(d @ b'0'..=b'5') => (&s[..s.len() - 1], Tone((d - b'0') % 5)),
        Some(_) => (s, Tone::NEUTRAL),
        None => return Err(invalid()),
    };
    if body.is_empty() || !body.bytes().all(|b| b.is_ascii_lowercase()) {
        return Err(invalid());
    }
    let onset = inv.longest_initial(body);
    let fin = &body[onset.len()..];
    if !inv.is_final(fin) {
        return Err(invalid());
    }
    let onset = if onset.is_empty() { NULL_ONSET } else { onset };
    Ok(Pinyin::new(onset, fin, tone))
}

pub fn format_pinyin(p: &Pinyin, with_tone: bool) -> String {
    let mut out = String::with_capacity(8);
    if p.onset != NULL_ONSET {
        out.push_str(&p.onset);
    }
    out.push_str(&p.fin);
    if with_tone && p.tone != Tone::NEUTRAL {
        out.push_str(&p.tone.token());
    }
    out
}

/// Rewrites keyboard or diacritic pinyin into the canonical spelling the
/// parser expects: lowercase ASCII, `v` for u-umlaut, tone as a trailing digit.
pub fn normalize_spelling(raw: &str) -> String {
    let mut body = String::new();
    let mut tone: Option<char> = None;
    let lowered = raw.trim().to_lowercase().replace("u:", "v");
    for c in lowered.chars() {
        let (base, t) = match c {
            'ā' => ('a', '1'),
            'á' => ('a', '2'),
            'ǎ' => ('a', '3'),
            'à' => ('a', '4'),
            'ē' => ('e', '1'),
            'é' => ('e', '2'),
            'ě' => ('e', '3'),
            'è' => ('e', '4'),
            'ī' => ('i', '1'),
            'í' => ('i', '2'),
            'ǐ' => ('i', '3'),
            'ì' => ('i', '4'),
            'ō' => ('o', '1'),
            'ó' => ('o', '2'),
            'ǒ' => ('o', '3'),
            'ò' => ('o', '4'),
            'ū' => ('u', '1'),
            'ú' => ('u', '2'),
            'ǔ' => ('u', '3'),
            'ù' => ('u', '4'),
            'ǖ' => ('v', '1'),
            'ǘ' => ('v', '2'),
            'ǚ' => ('v', '3'),
            'ǜ' => ('v', '4'),
            'ü' => ('v', '0'),
            c if c.is_ascii_digit() => {
                tone = Some(c);
                continue;
            }
            c if c.is_whitespace() || c == '\'' => continue,
            c => (c, '0'),
        };
        body.push(base);
        if t != '0' {
            tone = Some(t);
        }
    }
    // u-umlaut is written u after j/q/x/y and v after n/l.
    let fixed = match body.as_bytes().first() {
        Some(b'j' | b'q' | b'x' | b'y') => body.replacen('v', "u", 1),
        Some(b'n' | b'l') if body.len() == 3 && body.ends_with("ue") => format!("{}ve", &body[..1]),
        _ => body,
    };
    match tone {
        Some(t) => format!("{fixed}{t}"),
        None => fixed,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegularityType {
    Regular,
    Alliterating,
    Rhyming,
    Irregular,
}

impl RegularityType {
    pub const ALL: [RegularityType; 4] = [
        RegularityType::Regular,
        RegularityType::Alliterating,
        RegularityType::Rhyming,
        RegularityType::Irregular,
    ];

    pub fn token(self) -> &'static str {
        match self {
            RegularityType::Regular => "regular",
            RegularityType::Alliterating => "alliterating",
            RegularityType::Rhyming => "rhyming",
            RegularityType::Irregular => "irregular",
        }
    }

    pub fn from_token(tok: &str) -> Option<RegularityType> {
        Self::ALL.into_iter().find(|r| r.token() == tok)
    }
}

impl fmt::Display for RegularityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Relation of a character reading to its phonetic radical's reading, tone ignored.
pub fn classify_regularity(char_py: &Pinyin, radical_py: &Pinyin) -> RegularityType {
    match (
        char_py.onset == radical_py.onset,
        char_py.fin == radical_py.fin,
    ) {
        (true, true) => RegularityType::Regular,
        (true, false) => RegularityType::Alliterating,
        (false, true) => RegularityType::Rhyming,
        (false, false) => RegularityType::Irregular,
    }
}

const FULL_MISMATCH: f64 = 10.0;
const NEAR_MISMATCH: f64 = 4.0;
const TONE_MISMATCH: f64 = 1.0;

/// Place-of-articulation class of an onset.
fn onset_class(onset: &str) -> Option<u8> {
    Some(match onset {
        "b" | "p" | "m" | "f" => 0,
        "d" | "t" | "n" | "l" => 1,
        "g" | "k" | "h" => 2,
        "j" | "q" | "x" => 3,
        "zh" | "ch" | "sh" | "r" => 4,
        "z" | "c" | "s" => 5,
        "y" | "w" => 6,
        _ => return None,
    })
}

/// Main vowel of a final.
fn final_nucleus(fin: &str) -> Option<char> {
    Some(match fin {
        "iu" => 'o',
        "ui" | "un" => 'e',
        "er" => 'e',
        f if f.contains('a') => 'a',
        f if f.contains('o') => 'o',
        f if f.contains('e') => 'e',
        f if f.starts_with('i') => 'i',
        "u" => 'u',
        "v" => 'v',
        _ => return None,
    })
}

/// Weighted mismatch distance between two syllables.
///
/// Onset and final mismatches cost 10, reduced to 4 when the onsets share a
/// place class or the finals share a main vowel; a tone mismatch costs 1.
pub fn phonetic_distance(a: &Pinyin, b: &Pinyin) -> f64 {
    let onset = if a.onset == b.onset {
        0.0
    } else {
        match (onset_class(&a.onset), onset_class(&b.onset)) {
            (Some(x), Some(y)) if x == y => NEAR_MISMATCH,
            _ => FULL_MISMATCH,
        }
    };
    let fin = if a.fin == b.fin {
        0.0
    } else {
        match (final_nucleus(&a.fin), final_nucleus(&b.fin)) {
            (Some(x), Some(y)) if x == y => NEAR_MISMATCH,
            _ => FULL_MISMATCH,
        }
    };
    let tone = if a.tone == b.tone { 0.0 } else { TONE_MISMATCH };
    onset + fin + tone
}
