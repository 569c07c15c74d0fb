//! Reverse-direction trigram model.
//!
//! Every line `v1 .. vn` is read backwards: the two words `vn, vn-1` predict
//! `vn-2`, and so on until the first two words (reversed) predict the start
//! sentinel. Generating from a rhyme pair therefore builds a line from its
//! rhyming end towards its beginning.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, Line};
use crate::rhyme::{NormalizationTable, RhymePair};
use crate::START_TOKEN;

/// Default cap on generated line length, seed words included.
pub const DEFAULT_MAX_LEN: usize = 10;

#[derive(Debug, Error)]
pub enum NgramError {
    #[error("no line with at least two tokens to train on")]
    NoTrainableLines,
    #[error("context ({0}, {1}) was never observed in training")]
    UnseenContext(String, String),
    #[error("temperature must be a positive finite number, got {0}")]
    Temperature(f64),
    #[error("max_len must be at least 2, got {0}")]
    MaxLen(usize),
    #[error("failed to read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid model JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported model version {0} (expected 1)")]
    Version(u32),
    #[error("invalid model: {0}")]
    Invalid(String),
}

type Id = u32;

/// Maximum-likelihood trigram counts over reversed lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrigramModel {
    vocab: Vec<String>,
    ids: HashMap<String, Id>,
    counts: BTreeMap<(Id, Id), BTreeMap<Id, u64>>,
}

const START_ID: Id = 0;

/// `[v1..vn]` ↦ `([vn, vn-1] → vn-2), …, ([v2, v1] → START)`.
pub fn reverse_decompose(line: &Line) -> Vec<([&str; 2], &str)> {
    let rev: Vec<&str> = line.tokens().iter().rev().map(String::as_str).collect();
    if rev.len() < 2 {
        return Vec::new();
    }
    (0..rev.len() - 1)
        .map(|i| {
            let target = rev.get(i + 2).copied().unwrap_or(START_TOKEN);
            ([rev[i], rev[i + 1]], target)
        })
        .collect()
}

/// Number of lines long enough to contribute trigrams.
pub fn trainable_line_count(corpus: &Corpus) -> usize {
    corpus.lines().filter(|l| l.len() >= 2).count()
}

pub fn train(corpus: &Corpus, norm: &NormalizationTable) -> Result<TrigramModel, NgramError> {
    let lines: Vec<Line> = corpus.lines().map(|l| l.normalized(norm)).collect();
    if !lines.iter().any(|l| l.len() >= 2) {
        return Err(NgramError::NoTrainableLines);
    }
    let mut words: Vec<&str> = lines
        .iter()
        .flat_map(|l| l.tokens().iter().map(String::as_str))
        .collect();
    words.sort_unstable();
    words.dedup();
    let vocab: Vec<String> = std::iter::once(START_TOKEN)
        .chain(words)
        .map(str::to_owned)
        .collect();
    let ids = index_vocab(&vocab);

    let mut counts: BTreeMap<(Id, Id), BTreeMap<Id, u64>> = BTreeMap::new();
    for line in &lines {
        for ([w1, w2], w3) in reverse_decompose(line) {
            *counts
                .entry((ids[w1], ids[w2]))
                .or_default()
                .entry(ids[w3])
                .or_insert(0) += 1;
        }
    }
    Ok(TrigramModel { vocab, ids, counts })
}

fn index_vocab(vocab: &[String]) -> HashMap<String, Id> {
    vocab
        .iter()
        .enumerate()
        .map(|(i, w)| (w.clone(), i as Id))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    temperature: f64,
    pub rng_seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            temperature: 1.0,
            rng_seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn new(temperature: f64, rng_seed: u64) -> Result<Self, NgramError> {
        if !(temperature.is_finite() && temperature > 0.0) {
            return Err(NgramError::Temperature(temperature));
        }
        Ok(SamplerConfig {
            temperature,
            rng_seed,
        })
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.rng_seed)
    }
}

impl TrigramModel {
    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn context_count(&self) -> usize {
        self.counts.len()
    }

    /// `count(w1, w2 → w3)`, zero if unseen.
    pub fn count(&self, w1: &str, w2: &str, w3: &str) -> u64 {
        let (Some(a), Some(b), Some(c)) = (self.ids.get(w1), self.ids.get(w2), self.ids.get(w3))
        else {
            return 0;
        };
        self.counts
            .get(&(*a, *b))
            .and_then(|m| m.get(c))
            .copied()
            .unwrap_or(0)
    }

    /// All stored trigrams as `(w1, w2, w3, count)`, ordered by id.
    pub fn trigrams(&self) -> impl Iterator<Item = (&str, &str, &str, u64)> {
        self.counts.iter().flat_map(move |(&(a, b), next)| {
            next.iter().map(move |(&c, &n)| {
                (
                    self.vocab[a as usize].as_str(),
                    self.vocab[b as usize].as_str(),
                    self.vocab[c as usize].as_str(),
                    n,
                )
            })
        })
    }

    /// Observed contexts as word pairs.
    pub fn contexts(&self) -> impl Iterator<Item = (&str, &str)> {
        self.counts.keys().map(|&(a, b)| {
            (
                self.vocab[a as usize].as_str(),
                self.vocab[b as usize].as_str(),
            )
        })
    }

    fn continuations(&self, w1: &str, w2: &str) -> Result<&BTreeMap<Id, u64>, NgramError> {
        let unseen = || NgramError::UnseenContext(w1.to_owned(), w2.to_owned());
        let a = *self.ids.get(w1).ok_or_else(unseen)?;
        let b = *self.ids.get(w2).ok_or_else(unseen)?;
        self.counts.get(&(a, b)).ok_or_else(unseen)
    }

    pub fn next_distribution(
        &self,
        w1: &str,
        w2: &str,
    ) -> Result<BTreeMap<String, f64>, NgramError> {
        let next = self.continuations(w1, w2)?;
        let total: u64 = next.values().sum();
        Ok(next
            .iter()
            .map(|(&id, &n)| (self.vocab[id as usize].clone(), n as f64 / total as f64))
            .collect())
    }

    /// Draws the word preceding `(w1, w2)` with probabilities raised to
    /// `1 / temperature` and renormalized.
    pub fn sample_next<R: Rng + ?Sized>(
        &self,
        w1: &str,
        w2: &str,
        cfg: &SamplerConfig,
        rng: &mut R,
    ) -> Result<&str, NgramError> {
        let id = self.sample_id(self.continuations(w1, w2)?, cfg.temperature, rng);
        Ok(&self.vocab[id as usize])
    }

    fn sample_id<R: Rng + ?Sized>(
        &self,
        next: &BTreeMap<Id, u64>,
        temperature: f64,
        rng: &mut R,
    ) -> Id {
        if next.len() == 1 {
            return *next.keys().next().unwrap();
        }
        // exp((ln c - ln c_max) / T) keeps the largest weight at 1, so tiny
        // temperatures degrade to argmax instead of overflowing.
        let max = next.values().copied().max().unwrap() as f64;
        let weights: Vec<f64> = next
            .values()
            .map(|&c| (((c as f64).ln() - max.ln()) / temperature).exp())
            .collect();
        let dist = WeightedIndex::new(&weights).expect("largest weight is 1");
        *next.keys().nth(dist.sample(rng)).unwrap()
    }

    /// Emits words starting from the reversed seed `[final, penultimate]`
    /// until the start sentinel is drawn or `max_len` words are held. The
    /// result is in emission (reversed) order.
    pub fn generate_reversed<R: Rng + ?Sized>(
        &self,
        seed: &RhymePair,
        max_len: usize,
        cfg: &SamplerConfig,
        rng: &mut R,
    ) -> Result<Vec<String>, NgramError> {
        if max_len < 2 {
            return Err(NgramError::MaxLen(max_len));
        }
        let unseen =
            || NgramError::UnseenContext(seed.final_word.clone(), seed.penultimate.clone());
        let first = *self.ids.get(&seed.final_word).ok_or_else(unseen)?;
        let second = *self.ids.get(&seed.penultimate).ok_or_else(unseen)?;
        if !self.counts.contains_key(&(first, second)) {
            return Err(unseen());
        }
        let mut emitted = vec![first, second];
        while emitted.len() < max_len {
            let ctx = (emitted[emitted.len() - 2], emitted[emitted.len() - 1]);
            let next = self.counts.get(&ctx).ok_or_else(|| {
                NgramError::UnseenContext(
                    self.vocab[ctx.0 as usize].clone(),
                    self.vocab[ctx.1 as usize].clone(),
                )
            })?;
            let id = self.sample_id(next, cfg.temperature, rng);
            if id == START_ID {
                break;
            }
            emitted.push(id);
        }
        Ok(emitted
            .into_iter()
            .map(|id| self.vocab[id as usize].clone())
            .collect())
    }

    /// Generates a line ending in `seed.penultimate seed.final_word`.
    pub fn generate_line<R: Rng + ?Sized>(
        &self,
        seed: &RhymePair,
        max_len: usize,
        cfg: &SamplerConfig,
        rng: &mut R,
    ) -> Result<Line, NgramError> {
        let mut words = self.generate_reversed(seed, max_len, cfg, rng)?;
        words.reverse();
        Ok(Line::from_tokens(words))
    }

    pub fn to_json(&self) -> String {
        let trigrams: Vec<(Id, Id, Id, u64)> = self
            .counts
            .iter()
            .flat_map(|(&(a, b), next)| next.iter().map(move |(&c, &n)| (a, b, c, n)))
            .collect();
        let file = ModelFileOut {
            version: 1,
            start_token: START_TOKEN,
            vocab: &self.vocab,
            trigrams,
        };
        serde_json::to_string(&file).expect("model serializes")
    }

    pub fn from_json(json: &str) -> Result<Self, NgramError> {
        let file: ModelFileIn = serde_json::from_str(json)?;
        if file.version != 1 {
            return Err(NgramError::Version(file.version));
        }
        if file.start_token != START_TOKEN {
            return Err(NgramError::Invalid(format!(
                "start token must be {START_TOKEN:?}, found {:?}",
                file.start_token
            )));
        }
        if file.vocab.first().map(String::as_str) != Some(START_TOKEN) {
            return Err(NgramError::Invalid(
                "vocab must begin with the start token".into(),
            ));
        }
        let ids = index_vocab(&file.vocab);
        if ids.len() != file.vocab.len() {
            return Err(NgramError::Invalid("duplicate vocabulary entries".into()));
        }
        if file.vocab.iter().any(|w| w.is_empty()) {
            return Err(NgramError::Invalid("empty vocabulary entry".into()));
        }
        let size = file.vocab.len() as i64;
        let mut counts: BTreeMap<(Id, Id), BTreeMap<Id, u64>> = BTreeMap::new();
        for (i, [a, b, c, n]) in file.trigrams.into_iter().enumerate() {
            if [a, b, c].iter().any(|&id| id < 0 || id >= size) {
                return Err(NgramError::Invalid(format!("trigram {i}: id out of range")));
            }
            if n < 1 {
                return Err(NgramError::Invalid(format!(
                    "trigram {i}: count {n} is not positive"
                )));
            }
            if a == START_ID as i64 || b == START_ID as i64 {
                return Err(NgramError::Invalid(format!(
                    "trigram {i}: start token used as context"
                )));
            }
            let slot = counts
                .entry((a as Id, b as Id))
                .or_default()
                .insert(c as Id, n as u64);
            if slot.is_some() {
                return Err(NgramError::Invalid(format!("trigram {i}: duplicate entry")));
            }
        }
        Ok(TrigramModel {
            vocab: file.vocab,
            ids,
            counts,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), NgramError> {
        std::fs::write(path, self.to_json() + "\n").map_err(|source| NgramError::Write {
            path: path.to_owned(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, NgramError> {
        let json = std::fs::read_to_string(path).map_err(|source| NgramError::Read {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&json)
    }
}

#[derive(Serialize)]
struct ModelFileOut<'a> {
    version: u32,
    start_token: &'a str,
    vocab: &'a [String],
    trigrams: Vec<(Id, Id, Id, u64)>,
}

#[derive(Deserialize)]
struct ModelFileIn {
    version: u32,
    start_token: String,
    vocab: Vec<String>,
    trigrams: Vec<[i64; 4]>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{reverse_windows, tokenize_line, Song};
    use proptest::prelude::*;

    fn corpus_of(lines: &[&str]) -> Corpus {
        Corpus::from_songs([
            Song::new("t", None, lines.iter().map(|l| tokenize_line(l)).collect()).unwrap(),
        ])
    }

    fn single_line_model() -> TrigramModel {
        train(
            &corpus_of(&["Kaise Tumhe Roka Karun"]),
            &NormalizationTable::empty(),
        )
        .unwrap()
    }

    fn pair(pen: &str, fin: &str) -> RhymePair {
        RhymePair {
            penultimate: pen.into(),
            final_word: fin.into(),
            group: crate::rhyme::SoundGroup::U,
        }
    }

    #[test]
    fn decompose_examples() {
        assert_eq!(
            reverse_decompose(&tokenize_line("kaise tumhe roka karun")),
            vec![
                (["karun", "roka"], "tumhe"),
                (["roka", "tumhe"], "kaise"),
                (["tumhe", "kaise"], START_TOKEN),
            ]
        );
        assert_eq!(
            reverse_decompose(&tokenize_line("a b")),
            vec![(["b", "a"], START_TOKEN)]
        );
        assert!(reverse_decompose(&tokenize_line("solo")).is_empty());
    }

    #[test]
    fn train_single_line() {
        let m = single_line_model();
        assert_eq!(m.context_count(), 3);
        assert!(m.trigrams().all(|(_, _, _, n)| n == 1));
        assert_eq!(m.vocab().len(), 5);
        assert_eq!(m.count("karun", "roka", "tumhe"), 1);
    }

    #[test]
    fn train_counts_scale() {
        let once = single_line_model();
        let twice = train(
            &corpus_of(&["kaise tumhe roka karun", "kaise tumhe roka karun"]),
            &NormalizationTable::empty(),
        )
        .unwrap();
        for (a, b, c, n) in once.trigrams() {
            assert_eq!(twice.count(a, b, c), 2 * n);
            assert_eq!(
                twice.next_distribution(a, b).unwrap(),
                once.next_distribution(a, b).unwrap()
            );
        }
    }

    #[test]
    fn train_requires_two_token_line() {
        assert!(matches!(
            train(&corpus_of(&["ek", "do"]), &NormalizationTable::empty()),
            Err(NgramError::NoTrainableLines)
        ));
    }

    #[test]
    fn train_normalizes_tokens() {
        let norm = NormalizationTable::new([("humey", "humein")]).unwrap();
        let m = train(&corpus_of(&["saath humey"]), &norm).unwrap();
        assert_eq!(m.count("humein", "saath", START_TOKEN), 1);
        assert!(!m.vocab().iter().any(|w| w == "humey"));
    }

    #[test]
    fn distribution_examples() {
        let m = single_line_model();
        assert_eq!(
            m.next_distribution("karun", "roka").unwrap(),
            BTreeMap::from([("tumhe".to_owned(), 1.0)])
        );
        let m = train(
            &corpus_of(&["x a b", "x a b", "x a b", "y a b"]),
            &NormalizationTable::empty(),
        )
        .unwrap();
        let d = m.next_distribution("b", "a").unwrap();
        assert_eq!(d["x"], 0.75);
        assert_eq!(d["y"], 0.25);
        assert!(matches!(
            m.next_distribution("zz", "qq"),
            Err(NgramError::UnseenContext(..))
        ));
    }

    #[test]
    fn sample_single_outcome() {
        let m = single_line_model();
        for seed in 0..20 {
            let cfg = SamplerConfig::new(1.0, seed).unwrap();
            assert_eq!(
                m.sample_next("karun", "roka", &cfg, &mut cfg.rng())
                    .unwrap(),
                "tumhe"
            );
        }
    }

    #[test]
    fn sample_frequency_and_greedy_limit() {
        let m = train(
            &corpus_of(&["x a b", "x a b", "x a b", "y a b"]),
            &NormalizationTable::empty(),
        )
        .unwrap();
        let cfg = SamplerConfig::new(1.0, 11).unwrap();
        let mut rng = cfg.rng();
        let draws = 100_000;
        let xs = (0..draws)
            .filter(|_| m.sample_next("b", "a", &cfg, &mut rng).unwrap() == "x")
            .count();
        let freq = xs as f64 / draws as f64;
        assert!((freq - 0.75).abs() < 0.01, "{freq}");

        let cold = SamplerConfig::new(1e-9, 3).unwrap();
        let mut rng = cold.rng();
        for _ in 0..1000 {
            assert_eq!(m.sample_next("b", "a", &cold, &mut rng).unwrap(), "x");
        }
    }

    #[test]
    fn rejects_bad_temperature() {
        for t in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(SamplerConfig::new(t, 0).is_err());
        }
    }

    #[test]
    fn generate_reconstructs_worked_example() {
        let m = single_line_model();
        let cfg = SamplerConfig::default();
        let line = m
            .generate_line(
                &pair("roka", "karun"),
                DEFAULT_MAX_LEN,
                &cfg,
                &mut cfg.rng(),
            )
            .unwrap();
        assert_eq!(line.to_string(), "kaise tumhe roka karun");
        let short = m
            .generate_line(&pair("roka", "karun"), 2, &cfg, &mut cfg.rng())
            .unwrap();
        assert_eq!(short.to_string(), "roka karun");
        assert!(matches!(
            m.generate_line(&pair("roka", "karun"), 1, &cfg, &mut cfg.rng()),
            Err(NgramError::MaxLen(1))
        ));
        assert!(matches!(
            m.generate_line(&pair("kaise", "karun"), 10, &cfg, &mut cfg.rng()),
            Err(NgramError::UnseenContext(..))
        ));
    }

    #[test]
    fn cyclic_corpus_truncates_at_max_len() {
        // Reversed, this line cycles c b a c b a ...; (b, a) continues to c
        // four times and reaches START once, so greedy decoding never stops.
        let m = train(
            &corpus_of(&["a b c a b c a b c a b c a b c"]),
            &NormalizationTable::empty(),
        )
        .unwrap();
        let d = m.next_distribution("b", "a").unwrap();
        assert_eq!(d["c"], 0.8);
        assert_eq!(d[START_TOKEN], 0.2);

        let greedy = SamplerConfig::new(1e-6, 9).unwrap();
        let mut rng = greedy.rng();
        for max_len in 2..=20 {
            let line = m
                .generate_line(&pair("b", "c"), max_len, &greedy, &mut rng)
                .unwrap();
            assert_eq!(line.len(), max_len);
            assert_eq!(line.last(), Some("c"));
        }
    }

    #[test]
    fn model_round_trip() {
        let m = train(
            &corpus_of(&["kaise tumhe roka karun", "tum hi ho", "ab tum hi ho"]),
            &NormalizationTable::empty(),
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        m.save(&path).unwrap();
        let back = TrigramModel::load(&path).unwrap();
        assert_eq!(back, m);
        for (a, b) in m.contexts() {
            assert_eq!(
                back.next_distribution(a, b).unwrap(),
                m.next_distribution(a, b).unwrap()
            );
        }
        // byte-stable
        back.save(&path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), m.to_json() + "\n");
    }

    #[test]
    fn model_load_validation() {
        let ok = r#"{"version":1,"start_token":"<start>","vocab":["<start>","a","b"],"trigrams":[[2,1,0,1]]}"#;
        TrigramModel::from_json(ok).unwrap();
        let cases = [
            (
                r#"{"version":99,"start_token":"<start>","vocab":["<start>"],"trigrams":[]}"#,
                "version",
            ),
            (
                r#"{"version":1,"start_token":"<start>","vocab":["<start>","a","b"],"trigrams":[[2,1,0,-3]]}"#,
                "count",
            ),
            (
                r#"{"version":1,"start_token":"<start>","vocab":["<start>","a","b"],"trigrams":[[2,1,0,0]]}"#,
                "count",
            ),
            (
                r#"{"version":1,"start_token":"<start>","vocab":["<start>","a","b"],"trigrams":[[2,7,0,1]]}"#,
                "range",
            ),
            (
                r#"{"version":1,"start_token":"<start>","vocab":["<start>","a","b"],"trigrams":[[0,1,2,1]]}"#,
                "start",
            ),
            (
                r#"{"version":1,"start_token":"<start>","vocab":["a","<start>"],"trigrams":[]}"#,
                "begin",
            ),
            (
                r#"{"version":1,"start_token":"<s>","vocab":["<s>"],"trigrams":[]}"#,
                "start token",
            ),
            (
                r#"{"version":1,"start_token":"<start>","vocab":["<start>","a","a"],"trigrams":[]}"#,
                "duplicate",
            ),
            (
                r#"{"version":1,"start_token":"<start>","vocab":["<start>","a","b"],"trigrams":[[2,1,0,1],[2,1,0,2]]}"#,
                "duplicate",
            ),
        ];
        for (json, what) in cases {
            let err = TrigramModel::from_json(json).unwrap_err();
            assert!(err.to_string().contains(what), "{what}: {err}");
        }
        assert!(matches!(
            TrigramModel::from_json("{"),
            Err(NgramError::Json(_))
        ));
    }

    proptest! {
        #[test]
        fn decompose_agrees_with_context_two_windows(len in 0usize..10) {
            let line = Line::from_tokens((0..len).map(|i| format!("w{i}")));
            let windows: Vec<([&str; 2], &str)> = reverse_windows(&line, 2)
                .into_iter()
                .map(|(ctx, t)| ([ctx[0], ctx[1]], t))
                .collect();
            prop_assert_eq!(reverse_decompose(&line), windows);
        }

        #[test]
        fn emission_order_reverses_to_line(seed in 0u64..500) {
            let m = train(
                &corpus_of(&["a b c d", "b c d", "x b c d", "c b c d", "d c b c d"]),
                &NormalizationTable::empty(),
            ).unwrap();
            let cfg = SamplerConfig::new(1.0, seed).unwrap();
            let emitted = m.generate_reversed(&pair("c", "d"), 10, &cfg, &mut cfg.rng()).unwrap();
            let line = m.generate_line(&pair("c", "d"), 10, &cfg, &mut cfg.rng()).unwrap();
            let mut reversed: Vec<String> = line.tokens().to_vec();
            reversed.reverse();
            prop_assert_eq!(reversed, emitted);
        }
    }
}
