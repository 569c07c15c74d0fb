#![allow(dead_code)]

use std::collections::HashMap;

use bollyrics::corpus::{Corpus, Line, Song};
use bollyrics::START_TOKEN;
use rand::seq::SliceRandom;
use rand::Rng;

/// Fifteen words spanning ten sound groups plus a few unclassifiable ones.
pub const WORDS: [&str; 15] = [
    "tujhe", "jaana", "hoon", "zindagi", "dil", "pyaar", "sanam", "raat", "yaad", "main", "tu",
    "mera", "sab", "ho", "ek",
];

pub fn synthetic_corpus<R: Rng>(rng: &mut R, max_lines: usize, vocab: usize) -> Corpus {
    let words = &WORDS[..vocab.min(WORDS.len())];
    let n_lines = rng.gen_range(1..=max_lines);
    let lines: Vec<Line> = (0..n_lines)
        .map(|_| {
            let len = rng.gen_range(1..=8);
            Line::from_tokens((0..len).map(|_| *words.choose(rng).unwrap()))
        })
        .collect();
    Corpus::from_songs(Song::new("synthetic", None, lines))
}

pub fn fixture_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

/// Trigram counts recomputed with explicit index arithmetic over each
/// line read right to left.
pub fn naive_trigram_counts(corpus: &Corpus) -> HashMap<(String, String, String), u64> {
    let mut counts = HashMap::new();
    for line in corpus.lines() {
        let t = line.tokens();
        let n = t.len();
        if n < 2 {
            continue;
        }
        // positions are 1-based in the original order: context (v_k, v_{k-1}) → v_{k-2}
        for k in (2..=n).rev() {
            let w1 = t[k - 1].clone();
            let w2 = t[k - 2].clone();
            let w3 = if k >= 3 {
                t[k - 3].clone()
            } else {
                START_TOKEN.to_owned()
            };
            *counts.entry((w1, w2, w3)).or_insert(0) += 1;
        }
    }
    counts
}
