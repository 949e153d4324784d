//! Seeded synthetic lexicons with the statistical shape of the real data:
//! phonetic radicals shared by many characters, per-radical regularity
//! rates, polyphones, a long-tailed frequency distribution and a test set
//! that satisfies the selection criteria.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lexicon::{CharacterEntry, Lexicon, RadicalEntry, Side};
use crate::phonology::{parse_pinyin, PhonInventory, Pinyin, Tone};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub characters: usize,
    pub phonetic_radicals: usize,
    pub semantic_radicals: usize,
    pub test_characters: usize,
    pub polyphone_rate: f64,
    /// Probability that the phonetic radical is on the right.
    pub right_share: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            characters: 400,
            phonetic_radicals: 40,
            semantic_radicals: 20,
            test_characters: 12,
            polyphone_rate: 0.1,
            right_share: 0.8,
            seed: 0,
        }
    }
}

fn glyph(base: u32, i: usize) -> String {
    char::from_u32(base + i as u32)
        .expect("CJK code point")
        .to_string()
}

struct Syllables {
    all: Vec<Pinyin>,
    by_onset: HashMap<String, Vec<Pinyin>>,
    by_final: HashMap<String, Vec<Pinyin>>,
}

impl Syllables {
    fn new(inv: &PhonInventory) -> Syllables {
        let all: Vec<Pinyin> = inv
            .syllables()
            .filter_map(|s| parse_pinyin(s, inv).ok())
            .collect();
        let mut by_onset: HashMap<String, Vec<Pinyin>> = HashMap::new();
        let mut by_final: HashMap<String, Vec<Pinyin>> = HashMap::new();
        for p in &all {
            by_onset.entry(p.onset.clone()).or_default().push(p.clone());
            by_final.entry(p.fin.clone()).or_default().push(p.clone());
        }
        Syllables {
            all,
            by_onset,
            by_final,
        }
    }

    fn random(&self, rng: &mut ChaCha8Rng) -> Pinyin {
        toned(self.all.choose(rng).unwrap(), rng)
    }

    /// A reading of a character hosting `base`; regular with probability
    /// `saliency`, otherwise alliterating, rhyming or irregular.
    fn derive(&self, base: &Pinyin, saliency: f64, rng: &mut ChaCha8Rng) -> Pinyin {
        let roll: f64 = rng.gen();
        let rest = (roll - saliency) / (1.0 - saliency).max(1e-9);
        let pool: Vec<&Pinyin> = if roll < saliency {
            return toned(base, rng);
        } else if rest < 0.15 {
            self.by_onset[&base.onset]
                .iter()
                .filter(|p| p.fin != base.fin)
                .collect()
        } else if rest < 0.55 {
            self.by_final[&base.fin]
                .iter()
                .filter(|p| p.onset != base.onset)
                .collect()
        } else {
            self.all
                .iter()
                .filter(|p| p.onset != base.onset && p.fin != base.fin)
                .collect()
        };
        match pool.choose(rng) {
            Some(p) => toned(p, rng),
            None => self.random(rng),
        }
    }
}

fn toned(p: &Pinyin, rng: &mut ChaCha8Rng) -> Pinyin {
    p.with_tone(Tone::new(rng.gen_range(1..=4)).unwrap())
}

fn frequency(rng: &mut ChaCha8Rng) -> u64 {
    if rng.gen_bool(0.25) {
        1
    } else {
        rng.gen_range(0.0f64..9.0).exp().floor().max(2.0) as u64
    }
}

/// Builds a lexicon deterministically from `cfg`. Test characters have
/// frequency below 5 and a phonetic radical with more than four other
/// hosts whenever the configuration leaves enough room for that.
pub fn synthetic_lexicon(cfg: &SynthConfig) -> Result<Lexicon> {
    let inv = PhonInventory::standard();
    let syl = Syllables::new(&inv);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut radicals = Vec::new();
    let mut phonetic = Vec::new();
    for i in 0..cfg.phonetic_radicals {
        let g = glyph(0x4E00, i);
        let p = syl.random(&mut rng);
        radicals.push(RadicalEntry {
            glyph: g.clone(),
            canonical_pinyin: p.clone(),
        });
        phonetic.push((g, p, rng.gen_range(0.1..0.9)));
    }
    let semantic: Vec<String> = (0..cfg.semantic_radicals)
        .map(|i| glyph(0x5E00, i))
        .collect();
    for g in &semantic {
        radicals.push(RadicalEntry {
            glyph: g.clone(),
            canonical_pinyin: syl.random(&mut rng),
        });
    }

    // Zipf-like host counts: radical k is picked with weight 1/(k+1).
    let weights: Vec<f64> = (0..phonetic.len())
        .map(|k| 1.0 / (k as f64 + 1.0))
        .collect();
    let total: f64 = weights.iter().sum();
    let mut entries = Vec::with_capacity(cfg.characters);
    for i in 0..cfg.characters {
        let mut x = rng.gen_range(0.0..total);
        let mut k = 0;
        while k + 1 < weights.len() && x >= weights[k] {
            x -= weights[k];
            k += 1;
        }
        let (pg, pp, sal) = &phonetic[k];
        let sg = semantic.choose(&mut rng).unwrap().clone();
        let side = if rng.gen_bool(cfg.right_share) {
            Side::Right
        } else {
            Side::Left
        };
        let (left, right) = match side {
            Side::Right => (sg, pg.clone()),
            Side::Left => (pg.clone(), sg),
        };
        let mut pinyins = vec![syl.derive(pp, *sal, &mut rng)];
        if rng.gen_bool(cfg.polyphone_rate) {
            let extra = syl.derive(pp, *sal, &mut rng);
            if !pinyins[0].same_syllable(&extra) {
                pinyins.push(extra);
            }
        }
        entries.push(CharacterEntry {
            glyph: glyph(0x6000, i),
            left_radical: left,
            right_radical: right,
            phonetic_side: side,
            pinyins,
            frequency: frequency(&mut rng),
        });
    }

    let mut hosts: HashMap<String, usize> = HashMap::new();
    for e in &entries {
        *hosts.entry(e.phonetic_radical().to_string()).or_default() += 1;
    }
    let mut eligible: Vec<usize> = (0..entries.len())
        .filter(|&i| hosts[entries[i].phonetic_radical()] > 5)
        .collect();
    eligible.shuffle(&mut rng);
    let mut test_set = Vec::new();
    for &i in eligible.iter().take(cfg.test_characters) {
        entries[i].frequency = rng.gen_range(1..5);
        test_set.push(entries[i].glyph.clone());
    }
    Lexicon::from_parts(entries, radicals, test_set, inv)
}
