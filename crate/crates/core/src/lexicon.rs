//! Phono-semantic character lexicon: loading, regularity, saliency,
//! consistency, frequency buckets, and the ALL/MID/HIGH training subsets.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::phonology::{
    classify_regularity, normalize_spelling, parse_pinyin, phonetic_distance, PhonInventory,
    Pinyin, RegularityType,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn token(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }

    pub fn from_token(s: &str) -> Option<Side> {
        match s {
            "left" | "l" | "L" => Some(Side::Left),
            "right" | "r" | "R" => Some(Side::Right),
            _ => None,
        }
    }

    pub fn other(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// One left-right phono-semantic compound.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharacterEntry {
    pub glyph: String,
    pub left_radical: String,
    pub right_radical: String,
    pub phonetic_side: Side,
    pub pinyins: Vec<Pinyin>,
    pub frequency: u64,
}

impl CharacterEntry {
    pub fn radical(&self, side: Side) -> &str {
        match side {
            Side::Left => &self.left_radical,
            Side::Right => &self.right_radical,
        }
    }

    pub fn phonetic_radical(&self) -> &str {
        self.radical(self.phonetic_side)
    }

    pub fn semantic_radical(&self) -> &str {
        self.radical(self.phonetic_side.other())
    }

    /// True when one of the gold readings has the same onset and final as `p`.
    pub fn has_reading(&self, p: &Pinyin) -> bool {
        self.pinyins.iter().any(|g| g.same_syllable(p))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RadicalEntry {
    pub glyph: String,
    pub canonical_pinyin: Pinyin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrequencyBucket {
    Rare,
    Low,
    Mid,
    High,
}

impl FrequencyBucket {
    pub const ALL: [FrequencyBucket; 4] = [
        FrequencyBucket::Rare,
        FrequencyBucket::Low,
        FrequencyBucket::Mid,
        FrequencyBucket::High,
    ];

    pub fn token(self) -> &'static str {
        match self {
            FrequencyBucket::Rare => "rare",
            FrequencyBucket::Low => "low",
            FrequencyBucket::Mid => "mid",
            FrequencyBucket::High => "high",
        }
    }
}

/// Upper bounds (inclusive) of the `low` and `mid` buckets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BucketBoundaries {
    pub median: u64,
    pub upper_quartile: u64,
}

impl BucketBoundaries {
    /// Nearest-rank percentiles of the given frequencies; a value equal to a
    /// boundary stays in the lower bucket.
    pub fn from_frequencies(freqs: &[u64]) -> BucketBoundaries {
        if freqs.is_empty() {
            return BucketBoundaries {
                median: 1,
                upper_quartile: 1,
            };
        }
        let mut sorted = freqs.to_vec();
        sorted.sort_unstable();
        let rank = |q: f64| {
            let r = (q * sorted.len() as f64).ceil() as usize;
            sorted[r.clamp(1, sorted.len()) - 1]
        };
        BucketBoundaries {
            median: rank(0.5),
            upper_quartile: rank(0.75),
        }
    }

    pub fn bucket(&self, frequency: u64) -> FrequencyBucket {
        if frequency <= 1 {
            FrequencyBucket::Rare
        } else if frequency <= self.median {
            FrequencyBucket::Low
        } else if frequency <= self.upper_quartile {
            FrequencyBucket::Mid
        } else {
            FrequencyBucket::High
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TrainingSet {
    All,
    Mid,
    High,
}

/// Indices into [`Lexicon::entries`] for each training subset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingSets {
    pub all: Vec<usize>,
    pub mid: Vec<usize>,
    pub high: Vec<usize>,
}

impl TrainingSets {
    pub fn get(&self, set: TrainingSet) -> &[usize] {
        match set {
            TrainingSet::All => &self.all,
            TrainingSet::Mid => &self.mid,
            TrainingSet::High => &self.high,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionViolation {
    pub glyph: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSelectionReport {
    pub characters: usize,
    pub pinyins: usize,
    /// Per-reading regularity counts in `RegularityType::ALL` order.
    pub pinyin_counts: [usize; 4],
    /// Per-character counts using the best reading.
    pub character_counts: [usize; 4],
    pub mean_saliency: f64,
    pub violations: Vec<SelectionViolation>,
}

pub struct Lexicon {
    entries: Vec<CharacterEntry>,
    index: HashMap<String, usize>,
    radicals: BTreeMap<String, RadicalEntry>,
    test_set: Vec<String>,
    test_members: HashSet<String>,
    inventory: Arc<PhonInventory>,
    phonetic_hosts: HashMap<String, Vec<usize>>,
}

impl fmt::Debug for Lexicon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Lexicon")
            .field("entries", &self.entries.len())
            .field("radicals", &self.radicals.len())
            .field("test_set", &self.test_set.len())
            .finish()
    }
}

fn load_err(file: &Path, row: usize, msg: impl Into<String>) -> Error {
    Error::Load {
        file: file.display().to_string(),
        row,
        msg: msg.into(),
    }
}

fn tsv_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .has_headers(true)
        .flexible(true)
        .quoting(false)
        .from_reader(file))
}

fn parse_reading(s: &str, inv: &PhonInventory) -> Result<Pinyin> {
    parse_pinyin(&normalize_spelling(s), inv)
}

impl Lexicon {
    /// Reads `characters.tsv`, `radicals.tsv` and `test_chars.txt`.
    pub fn load(
        character_file: &Path,
        radical_file: &Path,
        test_list_file: &Path,
    ) -> Result<Lexicon> {
        Self::load_with_inventory(
            character_file,
            radical_file,
            test_list_file,
            PhonInventory::standard(),
        )
    }

    pub fn load_dir(dir: &Path) -> Result<Lexicon> {
        Self::load(
            &dir.join("characters.tsv"),
            &dir.join("radicals.tsv"),
            &dir.join("test_chars.txt"),
        )
    }

    pub fn load_with_inventory(
        character_file: &Path,
        radical_file: &Path,
        test_list_file: &Path,
        inventory: Arc<PhonInventory>,
    ) -> Result<Lexicon> {
        let mut radicals = BTreeMap::new();
        let mut rdr = tsv_reader(radical_file)?;
        expect_header(&mut rdr, radical_file, &["glyph", "pinyin"])?;
        for (i, rec) in rdr.records().enumerate() {
            let row = i + 2;
            let rec = rec?;
            let glyph = field(&rec, 0, radical_file, row, "glyph")?;
            let readings = field(&rec, 1, radical_file, row, "pinyin")?;
            let first = readings.split(',').next().unwrap_or("").trim();
            let canonical_pinyin = parse_reading(first, &inventory)
                .map_err(|e| load_err(radical_file, row, e.to_string()))?;
            if radicals
                .insert(
                    glyph.to_string(),
                    RadicalEntry {
                        glyph: glyph.to_string(),
                        canonical_pinyin,
                    },
                )
                .is_some()
            {
                return Err(load_err(
                    radical_file,
                    row,
                    format!("duplicate radical {glyph}"),
                ));
            }
        }

        let mut entries = Vec::new();
        let mut seen = HashSet::new();
        let mut rdr = tsv_reader(character_file)?;
        expect_header(
            &mut rdr,
            character_file,
            &[
                "glyph",
                "left_radical",
                "right_radical",
                "phonetic_side",
                "pinyins",
                "frequency",
            ],
        )?;
        for (i, rec) in rdr.records().enumerate() {
            let row = i + 2;
            let rec = rec?;
            let f = |idx, name| field(&rec, idx, character_file, row, name);
            let glyph = f(0, "glyph")?.to_string();
            let left_radical = f(1, "left_radical")?.to_string();
            let right_radical = f(2, "right_radical")?.to_string();
            let side_tok = f(3, "phonetic_side")?;
            let phonetic_side = Side::from_token(side_tok).ok_or_else(|| {
                load_err(
                    character_file,
                    row,
                    format!("bad phonetic_side {side_tok:?}"),
                )
            })?;
            let mut pinyins: Vec<Pinyin> = Vec::new();
            for s in f(4, "pinyins")?
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
            {
                let p = parse_reading(s, &inventory)
                    .map_err(|e| load_err(character_file, row, e.to_string()))?;
                if !pinyins.iter().any(|q| q.same_syllable(&p)) {
                    pinyins.push(p);
                }
            }
            if pinyins.is_empty() {
                return Err(load_err(character_file, row, "no pinyin readings"));
            }
            let freq_tok = f(5, "frequency")?;
            let frequency = freq_tok.trim().parse::<u64>().map_err(|_| {
                load_err(character_file, row, format!("bad frequency {freq_tok:?}"))
            })?;
            for r in [&left_radical, &right_radical] {
                if !radicals.contains_key(r) {
                    return Err(load_err(
                        character_file,
                        row,
                        format!("radical {r} has no reading in {}", radical_file.display()),
                    ));
                }
            }
            if !seen.insert(glyph.clone()) {
                return Err(load_err(
                    character_file,
                    row,
                    format!("duplicate glyph {glyph}"),
                ));
            }
            entries.push(CharacterEntry {
                glyph,
                left_radical,
                right_radical,
                phonetic_side,
                pinyins,
                frequency,
            });
        }

        let text =
            std::fs::read_to_string(test_list_file).map_err(|e| Error::io(test_list_file, e))?;
        let mut test_set = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let g = line.trim();
            if g.is_empty() || g.starts_with('#') {
                continue;
            }
            if !seen.contains(g) {
                return Err(load_err(
                    test_list_file,
                    i + 1,
                    format!("test character {g} is not in the lexicon"),
                ));
            }
            if test_set.iter().any(|t| t == g) {
                return Err(load_err(
                    test_list_file,
                    i + 1,
                    format!("duplicate test character {g}"),
                ));
            }
            test_set.push(g.to_string());
        }
        Self::from_parts(
            entries,
            radicals.into_values().collect(),
            test_set,
            inventory,
        )
    }

    /// Assembles a lexicon from in-memory parts, enforcing referential integrity.
    pub fn from_parts(
        entries: Vec<CharacterEntry>,
        radicals: Vec<RadicalEntry>,
        test_set: Vec<String>,
        inventory: Arc<PhonInventory>,
    ) -> Result<Lexicon> {
        let mut radical_map = BTreeMap::new();
        for r in radicals {
            if radical_map.contains_key(&r.glyph) {
                return Err(Error::Load {
                    file: "<radicals>".into(),
                    row: radical_map.len() + 1,
                    msg: format!("duplicate radical {}", r.glyph),
                });
            }
            radical_map.insert(r.glyph.clone(), r);
        }
        let mut index = HashMap::new();
        let mut phonetic_hosts: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, e) in entries.iter().enumerate() {
            let err = |msg: String| Error::Load {
                file: "<characters>".into(),
                row: i + 1,
                msg,
            };
            if e.pinyins.is_empty() {
                return Err(err(format!("{} has no readings", e.glyph)));
            }
            for r in [&e.left_radical, &e.right_radical] {
                if !radical_map.contains_key(r) {
                    return Err(err(format!("radical {r} of {} has no reading", e.glyph)));
                }
            }
            if index.insert(e.glyph.clone(), i).is_some() {
                return Err(err(format!("duplicate glyph {}", e.glyph)));
            }
            phonetic_hosts
                .entry(e.phonetic_radical().to_string())
                .or_default()
                .push(i);
        }
        let mut test_members = HashSet::new();
        for (i, g) in test_set.iter().enumerate() {
            if !index.contains_key(g) || !test_members.insert(g.clone()) {
                return Err(Error::Load {
                    file: "<test set>".into(),
                    row: i + 1,
                    msg: format!("test character {g} missing or duplicated"),
                });
            }
        }
        Ok(Lexicon {
            entries,
            index,
            radicals: radical_map,
            test_set,
            test_members,
            inventory,
            phonetic_hosts,
        })
    }

    pub fn entries(&self) -> &[CharacterEntry] {
        &self.entries
    }

    pub fn entry(&self, glyph: &str) -> Option<&CharacterEntry> {
        self.index.get(glyph).map(|&i| &self.entries[i])
    }

    pub fn radicals(&self) -> &BTreeMap<String, RadicalEntry> {
        &self.radicals
    }

    pub fn radical_pinyin(&self, glyph: &str) -> Option<&Pinyin> {
        self.radicals.get(glyph).map(|r| &r.canonical_pinyin)
    }

    pub fn test_set(&self) -> &[String] {
        &self.test_set
    }

    pub fn test_entries(&self) -> impl Iterator<Item = &CharacterEntry> {
        self.test_set.iter().map(|g| &self.entries[self.index[g]])
    }

    pub fn is_test(&self, glyph: &str) -> bool {
        self.test_members.contains(glyph)
    }

    pub fn inventory(&self) -> &Arc<PhonInventory> {
        &self.inventory
    }

    /// Radicals that occur in some entry, i.e. the decomposition alphabet.
    pub fn used_radicals(&self) -> HashSet<&str> {
        self.entries
            .iter()
            .flat_map(|e| [e.left_radical.as_str(), e.right_radical.as_str()])
            .collect()
    }

    /// Entries whose phonetic radical is `radical`.
    pub fn phonetic_hosts(&self, radical: &str) -> &[usize] {
        self.phonetic_hosts
            .get(radical)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Regularity of each reading against the true phonetic radical.
    pub fn regularity_of(&self, entry: &CharacterEntry) -> Vec<(Pinyin, RegularityType)> {
        let radical_py = &self.radicals[entry.phonetic_radical()].canonical_pinyin;
        entry
            .pinyins
            .iter()
            .map(|p| (p.clone(), classify_regularity(p, radical_py)))
            .collect()
    }

    /// Character-level type: the best reading under regular > alliterating >
    /// rhyming > irregular.
    pub fn character_regularity(&self, entry: &CharacterEntry) -> RegularityType {
        self.regularity_of(entry)
            .into_iter()
            .map(|(_, r)| r)
            .min()
            .expect("entries have at least one reading")
    }

    /// Fraction of host characters with at least one regular reading.
    pub fn saliency(&self, radical: &str) -> Result<f64> {
        let hosts = self.phonetic_hosts(radical);
        if hosts.is_empty() {
            return Err(Error::UndefinedSaliency(radical.to_string()));
        }
        let regular = hosts
            .iter()
            .filter(|&&i| self.character_regularity(&self.entries[i]) == RegularityType::Regular)
            .count();
        Ok(regular as f64 / hosts.len() as f64)
    }

    /// Fraction of characters sharing the entry's phonetic radical that also
    /// share one of its readings (tone ignored). The entry counts itself.
    pub fn consistency(&self, entry: &CharacterEntry) -> f64 {
        let hosts = self.phonetic_hosts(entry.phonetic_radical());
        if hosts.is_empty() {
            return 1.0;
        }
        let sharing = hosts
            .iter()
            .filter(|&&i| {
                let other = &self.entries[i];
                other.glyph == entry.glyph || other.pinyins.iter().any(|p| entry.has_reading(p))
            })
            .count();
        let self_counted = hosts.iter().any(|&i| self.entries[i].glyph == entry.glyph);
        let total = hosts.len() + usize::from(!self_counted);
        (sharing + usize::from(!self_counted)) as f64 / total as f64
    }

    pub fn training_indices(&self) -> Vec<usize> {
        (0..self.entries.len())
            .filter(|&i| !self.is_test(&self.entries[i].glyph))
            .collect()
    }

    pub fn bucket_boundaries(&self) -> BucketBoundaries {
        let freqs: Vec<u64> = self
            .training_indices()
            .into_iter()
            .map(|i| self.entries[i].frequency)
            .collect();
        BucketBoundaries::from_frequencies(&freqs)
    }

    /// Buckets for every entry, test characters included, using boundaries
    /// taken from the training set.
    pub fn frequency_buckets(&self) -> BTreeMap<String, FrequencyBucket> {
        let b = self.bucket_boundaries();
        self.entries
            .iter()
            .map(|e| (e.glyph.clone(), b.bucket(e.frequency)))
            .collect()
    }

    /// ALL is every non-test entry; MID and HIGH are the top halves and
    /// quarters by frequency (ties broken by glyph code point).
    pub fn build_training_sets(&self) -> TrainingSets {
        let all = self.training_indices();
        let mut ranked = all.clone();
        ranked.sort_by(|&a, &b| {
            let (ea, eb) = (&self.entries[a], &self.entries[b]);
            eb.frequency
                .cmp(&ea.frequency)
                .then_with(|| ea.glyph.cmp(&eb.glyph))
        });
        let mut mid = ranked[..all.len() / 2].to_vec();
        let mut high = ranked[..all.len() / 4].to_vec();
        mid.sort_unstable();
        high.sort_unstable();
        TrainingSets { all, mid, high }
    }

    /// Character-level regularity percentages in `RegularityType::ALL` order.
    pub fn regularity_distribution(&self, indices: &[usize]) -> [f64; 4] {
        let mut counts = [0usize; 4];
        for &i in indices {
            counts[self.character_regularity(&self.entries[i]) as usize] += 1;
        }
        let n = indices.len().max(1) as f64;
        counts.map(|c| 100.0 * c as f64 / n)
    }

    /// Checks the test characters against the selection criteria: corpus
    /// frequency below 5 and a phonetic radical shared with more than four
    /// other characters.
    pub fn validate_test_selection(&self) -> TestSelectionReport {
        let mut pinyin_counts = [0usize; 4];
        let mut character_counts = [0usize; 4];
        let mut violations = Vec::new();
        let mut pinyins = 0;
        let mut saliency_sum = 0.0;
        for e in self.test_entries() {
            for (_, r) in self.regularity_of(e) {
                pinyin_counts[r as usize] += 1;
                pinyins += 1;
            }
            character_counts[self.character_regularity(e) as usize] += 1;
            if e.frequency >= 5 {
                violations.push(SelectionViolation {
                    glyph: e.glyph.clone(),
                    reason: format!("frequency {} is not below 5", e.frequency),
                });
            }
            let others = self.phonetic_hosts(e.phonetic_radical()).len() - 1;
            if others <= 4 {
                violations.push(SelectionViolation {
                    glyph: e.glyph.clone(),
                    reason: format!(
                        "phonetic radical {} appears in only {others} other characters",
                        e.phonetic_radical()
                    ),
                });
            }
            saliency_sum += self.saliency(e.phonetic_radical()).unwrap_or(0.0);
        }
        TestSelectionReport {
            characters: self.test_set.len(),
            pinyins,
            pinyin_counts,
            character_counts,
            mean_saliency: saliency_sum / self.test_set.len().max(1) as f64,
            violations,
        }
    }

    /// Side whose radical reading is closest to `reading`; ties go to the
    /// true phonetic side.
    pub fn similarity_side(&self, entry: &CharacterEntry, reading: &Pinyin) -> Side {
        let dist = |side: Side| {
            phonetic_distance(
                reading,
                &self.radicals[entry.radical(side)].canonical_pinyin,
            )
        };
        let truth = entry.phonetic_side;
        if dist(truth.other()) < dist(truth) {
            truth.other()
        } else {
            truth
        }
    }

    /// Similarity-based phonetic side using the character's first reading.
    pub fn label_phonetic_side_by_similarity(&self, entry: &CharacterEntry) -> Side {
        self.similarity_side(entry, &entry.pinyins[0])
    }

    /// Percentage of entries whose phonetic radical is on the right.
    pub fn right_side_share(&self) -> f64 {
        let right = self
            .entries
            .iter()
            .filter(|e| e.phonetic_side == Side::Right)
            .count();
        100.0 * right as f64 / self.entries.len().max(1) as f64
    }

    /// Content hash over entries, radical readings and the test list.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for e in &self.entries {
            let readings: Vec<String> = e.pinyins.iter().map(|p| p.to_string()).collect();
            h.update(format!(
                "{}\t{}\t{}\t{}\t{}\t{}\n",
                e.glyph,
                e.left_radical,
                e.right_radical,
                e.phonetic_side,
                readings.join(","),
                e.frequency
            ));
        }
        for r in self.radicals.values() {
            h.update(format!("{}\t{}\n", r.glyph, r.canonical_pinyin));
        }
        for t in &self.test_set {
            h.update(format!("T{t}\n"));
        }
        hex16(&h.finalize())
    }

    /// Writes the three TSV/text files that [`Lexicon::load_dir`] reads.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let write = |name: &str, body: String| -> Result<()> {
            let path = dir.join(name);
            let mut f = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            f.write_all(body.as_bytes())
                .map_err(|e| Error::io(&path, e))
        };
        let mut chars =
            String::from("glyph\tleft_radical\tright_radical\tphonetic_side\tpinyins\tfrequency\n");
        for e in &self.entries {
            let readings: Vec<String> = e.pinyins.iter().map(|p| p.to_string()).collect();
            chars.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\n",
                e.glyph,
                e.left_radical,
                e.right_radical,
                e.phonetic_side,
                readings.join(","),
                e.frequency
            ));
        }
        write("characters.tsv", chars)?;
        let mut rads = String::from("glyph\tpinyin\n");
        for r in self.radicals.values() {
            rads.push_str(&format!("{}\t{}\n", r.glyph, r.canonical_pinyin));
        }
        write("radicals.tsv", rads)?;
        let mut tests = String::new();
        for t in &self.test_set {
            tests.push_str(t);
            tests.push('\n');
        }
        write("test_chars.txt", tests)
    }
}

pub(crate) fn hex16(bytes: &[u8]) -> String {
    bytes[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn expect_header(rdr: &mut csv::Reader<std::fs::File>, path: &Path, cols: &[&str]) -> Result<()> {
    let header = rdr.headers()?.clone();
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    if got.len() < cols.len() || got[..cols.len()] != *cols {
        return Err(load_err(
            path,
            1,
            format!("expected header {:?}, found {:?}", cols, got),
        ));
    }
    Ok(())
}

fn field<'r>(
    rec: &'r csv::StringRecord,
    idx: usize,
    path: &Path,
    row: usize,
    name: &str,
) -> Result<&'r str> {
    rec.get(idx)
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .ok_or_else(|| load_err(path, row, format!("missing column {name}")))
}
