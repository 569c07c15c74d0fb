//! Song assembly: rhyme scheme parsing, sound-group allocation and
//! paragraph generation from rhyme-pair seeds.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Line;
use crate::ngram::{NgramError, SamplerConfig, TrigramModel};
use crate::rhyme::{RhymeIndex, RuleTable, SoundGroup};
use crate::START_TOKEN;

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("rhyme scheme is empty")]
    EmptyScheme,
    #[error("invalid character {0:?} in rhyme scheme (only letters A-Z allowed)")]
    InvalidCharacter(char),
    #[error("rhyme scheme has {0} distinct letters but there are only 13 sound groups")]
    TooManyLetters(usize),
    #[error("rhyme scheme needs {needed} distinct sound groups but the rhyme index has only {available} non-empty groups")]
    InsufficientGroups { needed: usize, available: usize },
    #[error("sound group {0} has no rhyme pairs")]
    EmptyGroup(SoundGroup),
    #[error("paragraph count must be at least 1")]
    NoParagraphs,
    #[error(transparent)]
    Model(#[from] NgramError),
    #[error("invalid song: {0}")]
    InvalidSong(String),
}

/// Uppercase scheme letters, e.g. `ABAB`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RhymeScheme {
    letters: Vec<char>,
}

impl RhymeScheme {
    pub fn letters(&self) -> &[char] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Distinct letters in order of first appearance.
    pub fn distinct(&self) -> Vec<char> {
        let mut seen = BTreeSet::new();
        self.letters
            .iter()
            .copied()
            .filter(|c| seen.insert(*c))
            .collect()
    }
}

impl std::fmt::Display for RhymeScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.letters.iter().try_for_each(|c| write!(f, "{c}"))
    }
}

impl std::str::FromStr for RhymeScheme {
    type Err = GenerateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_scheme(s)
    }
}

pub fn parse_scheme(text: &str) -> Result<RhymeScheme, GenerateError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(GenerateError::EmptyScheme);
    }
    let letters = text
        .chars()
        .map(|c| {
            if c.is_ascii_alphabetic() {
                Ok(c.to_ascii_uppercase())
            } else {
                Err(GenerateError::InvalidCharacter(c))
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let scheme = RhymeScheme { letters };
    let distinct = scheme.distinct().len();
    if distinct > SoundGroup::ALL.len() {
        return Err(GenerateError::TooManyLetters(distinct));
    }
    Ok(scheme)
}

/// Injective map from scheme letter to sound group.
pub type GroupAllocation = BTreeMap<char, SoundGroup>;

/// Assigns each distinct letter a different non-empty group, uniformly at
/// random.
pub fn allocate_groups<R: Rng + ?Sized>(
    scheme: &RhymeScheme,
    index: &RhymeIndex,
    rng: &mut R,
) -> Result<GroupAllocation, GenerateError> {
    let letters = scheme.distinct();
    let mut groups = index.non_empty_groups();
    if letters.len() > groups.len() {
        return Err(GenerateError::InsufficientGroups {
            needed: letters.len(),
            available: groups.len(),
        });
    }
    let (chosen, _) = groups.partial_shuffle(rng, letters.len());
    Ok(letters.into_iter().zip(chosen.iter().copied()).collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedSong {
    scheme: RhymeScheme,
    allocation: GroupAllocation,
    paragraphs: Vec<Vec<Line>>,
}

/// Knobs for [`generate_song`] beyond the scheme itself.
#[derive(Debug, Clone, Copy)]
pub struct SongOptions {
    pub paragraphs: usize,
    pub max_len: usize,
    pub sampler: SamplerConfig,
}

impl Default for SongOptions {
    fn default() -> Self {
        SongOptions {
            paragraphs: 4,
            max_len: crate::ngram::DEFAULT_MAX_LEN,
            sampler: SamplerConfig::default(),
        }
    }
}

/// Draws one allocation for the whole song, then for every line a pair
/// uniformly (with replacement) from the letter's group, and grows the
/// line backwards from it.
pub fn generate_song<R: Rng + ?Sized>(
    model: &TrigramModel,
    index: &RhymeIndex,
    scheme: &RhymeScheme,
    opts: &SongOptions,
    rng: &mut R,
) -> Result<GeneratedSong, GenerateError> {
    if opts.paragraphs == 0 {
        return Err(GenerateError::NoParagraphs);
    }
    let allocation = allocate_groups(scheme, index, rng)?;
    let mut paragraphs = Vec::with_capacity(opts.paragraphs);
    for _ in 0..opts.paragraphs {
        let mut lines = Vec::with_capacity(scheme.len());
        for letter in scheme.letters() {
            let group = allocation[letter];
            let seed = index
                .pairs(group)
                .choose(rng)
                .ok_or(GenerateError::EmptyGroup(group))?;
            lines.push(model.generate_line(seed, opts.max_len, &opts.sampler, rng)?);
        }
        paragraphs.push(lines);
    }
    Ok(GeneratedSong {
        scheme: scheme.clone(),
        allocation,
        paragraphs,
    })
}

impl GeneratedSong {
    /// Validates the structural invariants: non-empty paragraphs of
    /// exactly `scheme.len()` non-empty lines, and an injective allocation
    /// covering every scheme letter.
    pub fn new(
        scheme: RhymeScheme,
        allocation: GroupAllocation,
        paragraphs: Vec<Vec<Line>>,
    ) -> Result<Self, GenerateError> {
        let bad = |m: String| Err(GenerateError::InvalidSong(m));
        if paragraphs.is_empty() {
            return bad("song has no paragraphs".into());
        }
        for letter in scheme.distinct() {
            if !allocation.contains_key(&letter) {
                return bad(format!("letter {letter} has no allocated group"));
            }
        }
        if allocation.len() != scheme.distinct().len() {
            return bad("allocation has letters not in the scheme".into());
        }
        let groups: BTreeSet<_> = allocation.values().collect();
        if groups.len() != allocation.len() {
            return bad("two letters share a sound group".into());
        }
        for (p, para) in paragraphs.iter().enumerate() {
            if para.len() != scheme.len() {
                return bad(format!(
                    "paragraph {} has {} lines, scheme has {}",
                    p + 1,
                    para.len(),
                    scheme.len()
                ));
            }
            if let Some(i) = para.iter().position(Line::is_empty) {
                return bad(format!("paragraph {} line {} is empty", p + 1, i + 1));
            }
        }
        Ok(GeneratedSong {
            scheme,
            allocation,
            paragraphs,
        })
    }

    pub fn scheme(&self) -> &RhymeScheme {
        &self.scheme
    }

    pub fn allocation(&self) -> &GroupAllocation {
        &self.allocation
    }

    pub fn paragraphs(&self) -> &[Vec<Line>] {
        &self.paragraphs
    }

    /// Every `(paragraph, line)` position (1-based) whose last word does not
    /// classify into its letter's group.
    pub fn conformance_violations(&self, table: &RuleTable) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (p, para) in self.paragraphs.iter().enumerate() {
            for (i, (line, letter)) in para.iter().zip(self.scheme.letters()).enumerate() {
                let want = self.allocation.get(letter).copied();
                if line.last().and_then(|w| table.classify(w)) != want {
                    out.push((p + 1, i + 1));
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&SongJson::from(self)).expect("song serializes")
    }

    pub fn from_json(json: &str) -> Result<Self, GenerateError> {
        let raw: SongJson =
            serde_json::from_str(json).map_err(|e| GenerateError::InvalidSong(e.to_string()))?;
        let scheme = parse_scheme(&raw.scheme)?;
        let mut allocation = GroupAllocation::new();
        for (key, group) in raw.allocation {
            let letter = match parse_scheme(&key)?.letters() {
                [c] => *c,
                _ => {
                    return Err(GenerateError::InvalidSong(format!(
                        "allocation key {key:?} is not a single letter"
                    )))
                }
            };
            allocation.insert(letter, group);
        }
        let paragraphs = raw
            .paragraphs
            .into_iter()
            .map(|para| {
                para.into_iter()
                    .map(|tokens| {
                        let n = tokens.len();
                        let line = Line::from_tokens(tokens);
                        if line.len() == n {
                            Ok(line)
                        } else {
                            Err(GenerateError::InvalidSong(
                                "tokens must be non-empty and free of whitespace".into(),
                            ))
                        }
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        GeneratedSong::new(scheme, allocation, paragraphs)
    }
}

/// Interchange form: `{"scheme": "ABAB", "allocation": {"A": "I", ...},
/// "paragraphs": [[["tok", ...], ...], ...]}`.
#[derive(Serialize, Deserialize)]
struct SongJson {
    scheme: String,
    allocation: BTreeMap<String, SoundGroup>,
    paragraphs: Vec<Vec<Vec<String>>>,
}

impl From<&GeneratedSong> for SongJson {
    fn from(song: &GeneratedSong) -> Self {
        SongJson {
            scheme: song.scheme.to_string(),
            allocation: song
                .allocation
                .iter()
                .map(|(c, g)| (c.to_string(), *g))
                .collect(),
            paragraphs: song
                .paragraphs
                .iter()
                .map(|p| p.iter().map(|l| l.tokens().to_vec()).collect())
                .collect(),
        }
    }
}

/// Plain-text layout: one line per lyric line, paragraphs separated by a
/// blank line, no trailing newline.
pub fn render(song: &GeneratedSong, show_start_token: bool) -> String {
    let mut out = String::new();
    for (p, para) in song.paragraphs.iter().enumerate() {
        assert!(!para.is_empty(), "paragraph {} is empty", p + 1);
        if p > 0 {
            out.push_str("\n\n");
        }
        for (i, line) in para.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            if show_start_token {
                out.push_str(START_TOKEN);
                out.push(' ');
            }
            out.push_str(&line.to_string());
        }
    }
    out
}
