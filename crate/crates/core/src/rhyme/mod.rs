//! Word-final sound classification for romanized Hindi and the rhyme-pair
//! index built from line endings.

mod index;
mod normalize;
mod rules;

pub use index::{build_index, extract_pair, RhymeIndex, RhymePair};
pub use normalize::NormalizationTable;
pub use rules::{default_rule_table, RhymeRule, RuleKind, RuleTable};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RhymeError {
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
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported version {0} (expected 1)")]
    Version(u32),
    #[error("invalid rule: {0}")]
    Rule(String),
    #[error("normalization table line {line}: {reason}")]
    Normalization { line: usize, reason: String },
    #[error("invalid rhyme index: {0}")]
    Index(String),
}

/// The thirteen word-final Devanagari sound classes used as rhyme buckets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SoundGroup {
    /// ए
    E,
    /// अ/आ
    A,
    /// उ/ऊ
    U,
    /// इ/ई
    I,
    D,
    K,
    H,
    R,
    M,
    T,
    L,
    B,
    P,
}

impl SoundGroup {
    pub const ALL: [SoundGroup; 13] = [
        SoundGroup::E,
        SoundGroup::A,
        SoundGroup::U,
        SoundGroup::I,
        SoundGroup::D,
        SoundGroup::K,
        SoundGroup::H,
        SoundGroup::R,
        SoundGroup::M,
        SoundGroup::T,
        SoundGroup::L,
        SoundGroup::B,
        SoundGroup::P,
    ];

    pub fn label(self) -> &'static str {
        match self {
            SoundGroup::E => "E",
            SoundGroup::A => "A",
            SoundGroup::U => "U",
            SoundGroup::I => "I",
            SoundGroup::D => "D",
            SoundGroup::K => "K",
            SoundGroup::H => "H",
            SoundGroup::R => "R",
            SoundGroup::M => "M",
            SoundGroup::T => "T",
            SoundGroup::L => "L",
            SoundGroup::B => "B",
            SoundGroup::P => "P",
        }
    }

    pub fn devanagari(self) -> &'static str {
        match self {
            SoundGroup::E => "ए",
            SoundGroup::A => "अ/आ",
            SoundGroup::U => "उ/ऊ",
            SoundGroup::I => "इ/ई",
            SoundGroup::D => "द",
            SoundGroup::K => "क",
            SoundGroup::H => "ह",
            SoundGroup::R => "र",
            SoundGroup::M => "म",
            SoundGroup::T => "त",
            SoundGroup::L => "ल",
            SoundGroup::B => "ब",
            SoundGroup::P => "प",
        }
    }
}

impl std::fmt::Display for SoundGroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for SoundGroup {
    type Err = RhymeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SoundGroup::ALL
            .into_iter()
            .find(|g| g.label() == s)
            .ok_or_else(|| RhymeError::Rule(format!("unknown sound group {s:?}")))
    }
}
