//! Lexicon statistics and evaluation metrics against brute-force
//! reimplementations over randomly generated inputs.

use std::collections::{BTreeSet, HashMap};

use charnaming::eval::{
    average_ranks, classify_answer_type, overlap_rate, pairwise_overlaps, pearson,
    production_profile, spearman, AnswerSet, AnswerType, ResponderKind,
};
use charnaming::lexicon::{CharacterEntry, Lexicon, RadicalEntry, Side};
use charnaming::phonology::{classify_regularity, PhonInventory, Pinyin, RegularityType};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const CASES: u64 = 120;

/// A small pool with many shared onsets and finals, so every regularity
/// type is common.
const SYLLABLES: [&str; 16] = [
    "ma", "mo", "man", "ba", "ban", "bo", "pa", "pan", "qing", "jing", "qian", "ting", "an", "e",
    "zhang", "chang",
];

fn syllable(rng: &mut impl Rng) -> Pinyin {
    let s = SYLLABLES.choose(rng).unwrap();
    Pinyin::parse(&format!("{s}{}", rng.gen_range(1..=4))).unwrap()
}

fn glyph(base: u32, i: usize) -> String {
    char::from_u32(base + i as u32).unwrap().to_string()
}

fn random_lexicon(seed: u64) -> Lexicon {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_radicals = rng.gen_range(3..8);
    let radicals: Vec<RadicalEntry> = (0..n_radicals)
        .map(|i| RadicalEntry {
            glyph: glyph(0x4E00, i),
            canonical_pinyin: syllable(&mut rng),
        })
        .collect();
    let n_chars = rng.gen_range(5..30);
    let entries: Vec<CharacterEntry> = (0..n_chars)
        .map(|i| {
            let mut pinyins: Vec<Pinyin> = (0..rng.gen_range(1..=2))
                .map(|_| syllable(&mut rng))
                .collect();
            pinyins.dedup();
            CharacterEntry {
                glyph: glyph(0x6000, i),
                left_radical: radicals.choose(&mut rng).unwrap().glyph.clone(),
                right_radical: radicals.choose(&mut rng).unwrap().glyph.clone(),
                phonetic_side: if rng.gen_bool(0.7) {
                    Side::Right
                } else {
                    Side::Left
                },
                pinyins,
                frequency: rng.gen_range(1..1000),
            }
        })
        .collect();
    let mut test: Vec<String> = entries.iter().map(|e| e.glyph.clone()).collect();
    test.shuffle(&mut rng);
    test.truncate(rng.gen_range(1..=n_chars.min(8)));
    Lexicon::from_parts(entries, radicals, test, PhonInventory::standard()).unwrap()
}

fn strip_tone(p: &Pinyin) -> String {
    p.to_string()
        .trim_end_matches(|c: char| c.is_ascii_digit())
        .to_string()
}

/// Onset by longest prefix over the inventory, final as the remainder.
fn split(p: &Pinyin, inv: &PhonInventory) -> (String, String) {
    let s = strip_tone(p);
    let onset = inv
        .initials()
        .iter()
        .filter(|i| i.as_str() != "∅" && s.starts_with(i.as_str()))
        .max_by_key(|i| i.len())
        .cloned();
    match onset {
        Some(o) => (o.clone(), s[o.len()..].to_string()),
        None => ("∅".into(), s),
    }
}

fn naive_regularity(a: &Pinyin, radical: &Pinyin, inv: &PhonInventory) -> RegularityType {
    let (ao, af) = split(a, inv);
    let (ro, rf) = split(radical, inv);
    match (ao == ro, af == rf) {
        (true, true) => RegularityType::Regular,
        (true, false) => RegularityType::Alliterating,
        (false, true) => RegularityType::Rhyming,
        (false, false) => RegularityType::Irregular,
    }
}

fn phonetic_of(e: &CharacterEntry) -> &str {
    if e.phonetic_side == Side::Left {
        &e.left_radical
    } else {
        &e.right_radical
    }
}

fn radical_reading<'a>(lex: &'a Lexicon, glyph: &str) -> &'a Pinyin {
    &lex.radicals()[glyph].canonical_pinyin
}

pub fn regularity_matches_string_segmentation() {
    let inv = PhonInventory::standard();
    for seed in 0..CASES {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..10 {
            let (a, b) = (syllable(&mut rng), syllable(&mut rng));
            assert_eq!(
                classify_regularity(&a, &b),
                naive_regularity(&a, &b, &inv),
                "{a} vs {b}"
            );
        }
    }
}

pub fn saliency_matches_full_scan() {
    for seed in 0..CASES {
        let lex = random_lexicon(seed);
        for r in lex.radicals().keys() {
            let hosts: Vec<&CharacterEntry> = lex
                .entries()
                .iter()
                .filter(|e| phonetic_of(e) == r)
                .collect();
            let got = lex.saliency(r);
            if hosts.is_empty() {
                assert!(got.is_err());
                continue;
            }
            let reading = strip_tone(radical_reading(&lex, r));
            let regular = hosts
                .iter()
                .filter(|e| e.pinyins.iter().any(|p| strip_tone(p) == reading))
                .count();
            approx::assert_abs_diff_eq!(
                got.unwrap(),
                regular as f64 / hosts.len() as f64,
                epsilon = 1e-12
            );
        }
    }
}

pub fn consistency_matches_full_scan() {
    for seed in 0..CASES {
        let lex = random_lexicon(seed);
        for e in lex.entries() {
            let own: BTreeSet<String> = e.pinyins.iter().map(strip_tone).collect();
            let family: Vec<&CharacterEntry> = lex
                .entries()
                .iter()
                .filter(|o| phonetic_of(o) == phonetic_of(e))
                .collect();
            let sharing = family
                .iter()
                .filter(|o| o.pinyins.iter().any(|p| own.contains(&strip_tone(p))))
                .count();
            approx::assert_abs_diff_eq!(
                lex.consistency(e),
                sharing as f64 / family.len() as f64,
                epsilon = 1e-12
            );
        }
    }
}

fn random_answers(lex: &Lexicon, rng: &mut ChaCha8Rng, n: usize) -> Vec<AnswerSet> {
    (0..n)
        .map(|i| {
            let mut s = AnswerSet::new(format!("r{i}"), ResponderKind::Human);
            for g in lex.test_set() {
                match rng.gen_range(0..4) {
                    0 => {}
                    1 => {
                        let e = lex.entry(g).unwrap();
                        s.answers
                            .insert(g.clone(), radical_reading(lex, phonetic_of(e)).clone());
                    }
                    2 => {
                        let e = lex.entry(g).unwrap();
                        let sem = if e.phonetic_side == Side::Left {
                            &e.right_radical
                        } else {
                            &e.left_radical
                        };
                        s.answers
                            .insert(g.clone(), radical_reading(lex, sem).clone());
                    }
                    _ => {
                        s.answers.insert(g.clone(), syllable(rng));
                    }
                }
            }
            s
        })
        .collect()
}

fn naive_type(lex: &Lexicon, e: &CharacterEntry, answer: Option<&Pinyin>) -> AnswerType {
    let inv = PhonInventory::standard();
    let Some(a) = answer else {
        return AnswerType::Invalid;
    };
    let sem = if e.phonetic_side == Side::Left {
        &e.right_radical
    } else {
        &e.left_radical
    };
    match naive_regularity(a, radical_reading(lex, phonetic_of(e)), &inv) {
        RegularityType::Regular => AnswerType::Regular,
        _ if strip_tone(a) == strip_tone(radical_reading(lex, sem)) => AnswerType::Semantic,
        RegularityType::Alliterating => AnswerType::Alliterating,
        RegularityType::Rhyming => AnswerType::Rhyming,
        RegularityType::Irregular => AnswerType::Irregular,
    }
}

pub fn answer_types_and_profiles_match_counting() {
    for seed in 0..CASES {
        let lex = random_lexicon(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 1000);
        let n = rng.gen_range(1..8);
        let sets = random_answers(&lex, &mut rng, n);
        let profile = production_profile(&sets, &lex);
        for (c, g) in lex.test_set().iter().enumerate() {
            let e = lex.entry(g).unwrap();
            let mut counts: HashMap<AnswerType, usize> = HashMap::new();
            for s in &sets {
                let t = naive_type(&lex, e, s.answers.get(g));
                assert_eq!(classify_answer_type(s.answers.get(g), e, &lex), t);
                *counts.entry(t).or_default() += 1;
            }
            for t in AnswerType::ALL {
                let want = counts.get(&t).copied().unwrap_or(0) as f64 / sets.len() as f64;
                approx::assert_abs_diff_eq!(profile.share(c, t), want, epsilon = 1e-12);
            }
        }
    }
}

pub fn overlap_matches_counting() {
    for seed in 0..CASES {
        let lex = random_lexicon(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 2000);
        let sets = random_answers(&lex, &mut rng, 4);
        let glyphs = lex.test_set();
        let mut pairs = Vec::new();
        for i in 0..sets.len() {
            for j in i + 1..sets.len() {
                let same = glyphs
                    .iter()
                    .filter(
                        |g| match (sets[i].answers.get(*g), sets[j].answers.get(*g)) {
                            (Some(a), Some(b)) => strip_tone(a) == strip_tone(b),
                            _ => false,
                        },
                    )
                    .count();
                let want = same as f64 / glyphs.len() as f64;
                approx::assert_abs_diff_eq!(
                    overlap_rate(&sets[i], &sets[j], glyphs),
                    want,
                    epsilon = 1e-12
                );
                pairs.push(want);
            }
        }
        assert_eq!(pairwise_overlaps(&sets, glyphs), pairs);
    }
}

fn naive_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sy): (f64, f64) = (x.iter().sum(), y.iter().sum());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

/// Rank = 1 + number of smaller values + half the number of other equal values.
fn naive_ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|v| {
            let less = x.iter().filter(|u| *u < v).count() as f64;
            let equal = x.iter().filter(|u| *u == v).count() as f64;
            1.0 + less + (equal - 1.0) / 2.0
        })
        .collect()
}

pub fn correlations_match_textbook_formulas() {
    for seed in 0..CASES {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(3..30);
        // Coarse values force ties.
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0..6) as f64 / 5.0).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|v| v * rng.gen_range(-1.0..1.0) + rng.gen_range(0..3) as f64)
            .collect();
        assert_eq!(average_ranks(&x), naive_ranks(&x));
        let constant = |v: &[f64]| v.iter().all(|a| *a == v[0]);
        if constant(&x) || constant(&y) {
            assert_eq!(pearson(&x, &y).unwrap(), None);
            continue;
        }
        approx::assert_abs_diff_eq!(
            pearson(&x, &y).unwrap().unwrap(),
            naive_pearson(&x, &y),
            epsilon = 1e-9
        );
        let rho = naive_pearson(&naive_ranks(&x), &naive_ranks(&y));
        approx::assert_abs_diff_eq!(spearman(&x, &y).unwrap().unwrap(), rho, epsilon = 1e-9);
    }
}
