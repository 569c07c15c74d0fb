//! Lyrics corpus ingestion, tokenization and summary statistics.
//!
//! The on-disk corpus is JSONL, one song per line:
//!
//! ```text
//! {"title": "Agar Tum Saath Ho", "year": 2015, "lyrics": ["Kaise Tumhe Roka Karun", ...]}
//! ```

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rhyme::NormalizationTable;
use crate::START_TOKEN;

#[derive(Debug, Error)]
pub enum CorpusError {
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
    #[error("{0}")]
    Record(RecordError),
    #[error("corpus is empty")]
    Empty,
    #[error("context length must be at least 1")]
    ContextLength,
}

/// A rejected corpus record, identified by its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordError {
    pub line: usize,
    pub reason: String,
}

impl std::fmt::Display for RecordError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "record on line {}: {}", self.line, self.reason)
    }
}

/// One tokenized lyric line. Tokens are lowercase and whitespace-free.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Line {
    tokens: Vec<String>,
}

impl Line {
    /// Builds a line from tokens that are already clean. Empty tokens and
    /// tokens containing whitespace are dropped.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens = tokens
            .into_iter()
            .map(Into::into)
            .filter(|t: &String| !t.is_empty() && !t.chars().any(char::is_whitespace))
            .collect();
        Line { tokens }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn last(&self) -> Option<&str> {
        self.tokens.last().map(String::as_str)
    }

    pub fn normalized(&self, norm: &NormalizationTable) -> Line {
        Line {
            tokens: self
                .tokens
                .iter()
                .map(|t| norm.normalize(t).to_owned())
                .collect(),
        }
    }
}

impl std::fmt::Display for Line {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.tokens.join(" "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Song {
    title: String,
    year: Option<i32>,
    lines: Vec<Line>,
}

impl Song {
    /// Returns `None` if the title is blank or no line has any tokens.
    pub fn new(title: impl Into<String>, year: Option<i32>, lines: Vec<Line>) -> Option<Self> {
        let title = title.into().trim().to_owned();
        let lines: Vec<Line> = lines.into_iter().filter(|l| !l.is_empty()).collect();
        if title.is_empty() || lines.is_empty() {
            return None;
        }
        Some(Song { title, year, lines })
    }

    pub fn title(&self) -> &str {
        &self.title
    }

    pub fn year(&self) -> Option<i32> {
        self.year
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }
}

/// Deduplicated collection of songs, in first-seen order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    songs: Vec<Song>,
}

impl Corpus {
    /// Builds a corpus, keeping only the first song for each normalized title.
    pub fn from_songs(songs: impl IntoIterator<Item = Song>) -> Self {
        let mut seen = HashSet::new();
        let songs = songs
            .into_iter()
            .filter(|s| seen.insert(title_key(&s.title)))
            .collect();
        Corpus { songs }
    }

    pub fn songs(&self) -> &[Song] {
        &self.songs
    }

    pub fn is_empty(&self) -> bool {
        self.songs.is_empty()
    }

    pub fn lines(&self) -> impl Iterator<Item = &Line> {
        self.songs.iter().flat_map(|s| s.lines.iter())
    }

    /// Applies the normalization table to every token.
    pub fn normalized(&self, norm: &NormalizationTable) -> Corpus {
        let songs = self
            .songs
            .iter()
            .map(|s| Song {
                title: s.title.clone(),
                year: s.year,
                lines: s.lines.iter().map(|l| l.normalized(norm)).collect(),
            })
            .collect();
        Corpus { songs }
    }
}

/// Deduplication key: lowercased with runs of whitespace collapsed.
pub fn title_key(title: &str) -> String {
    title
        .split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Lowercases, splits on whitespace and trims non-alphanumeric characters
/// from both ends of every chunk. Word-internal apostrophes and hyphens
/// survive.
pub fn tokenize_line(raw: &str) -> Line {
    let tokens = raw
        .split_whitespace()
        .map(|chunk| {
            chunk
                .to_lowercase()
                .trim_matches(|c: char| !c.is_alphanumeric())
                .to_owned()
        })
        .filter(|t| !t.is_empty())
        .collect();
    Line { tokens }
}

#[derive(Debug, Deserialize)]
struct RawSong {
    title: String,
    #[serde(default)]
    year: Option<i32>,
    lyrics: Vec<String>,
}

/// Result of reading a corpus file. In lenient mode bad records are
/// collected in `rejected` instead of aborting.
#[derive(Debug, Clone)]
pub struct LoadReport {
    pub corpus: Corpus,
    pub rejected: Vec<RecordError>,
    pub duplicates: usize,
}

pub fn load_corpus(path: &Path, strict: bool) -> Result<LoadReport, CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Read {
        path: path.to_owned(),
        source,
    })?;
    read_corpus(BufReader::new(file), strict).map_err(|e| match e {
        CorpusError::Read { source, .. } => CorpusError::Read {
            path: path.to_owned(),
            source,
        },
        other => other,
    })
}

pub fn read_corpus<R: BufRead>(reader: R, strict: bool) -> Result<LoadReport, CorpusError> {
    let mut songs = Vec::new();
    let mut rejected = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| CorpusError::Read {
            path: PathBuf::new(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        match parse_record(&line) {
            Ok(song) => songs.push(song),
            Err(reason) => {
                let err = RecordError {
                    line: lineno,
                    reason,
                };
                if strict {
                    return Err(CorpusError::Record(err));
                }
                rejected.push(err);
            }
        }
    }
    let total = songs.len();
    let corpus = Corpus::from_songs(songs);
    let duplicates = total - corpus.songs.len();
    Ok(LoadReport {
        corpus,
        rejected,
        duplicates,
    })
}

fn parse_record(line: &str) -> Result<Song, String> {
    let raw: RawSong = serde_json::from_str(line).map_err(|e| e.to_string())?;
    if raw.title.trim().is_empty() {
        return Err("empty title".into());
    }
    let lines = raw.lyrics.iter().map(|l| tokenize_line(l)).collect();
    Song::new(raw.title, raw.year, lines).ok_or_else(|| "no lyric lines with words".into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub song_count: usize,
    pub line_count: usize,
    pub avg_lines_per_song: f64,
    pub token_count: usize,
    pub unique_token_count: usize,
    pub year_min: Option<i32>,
    pub year_max: Option<i32>,
    pub per_year_histogram: BTreeMap<i32, usize>,
}

pub fn compute_stats(corpus: &Corpus) -> Result<CorpusStats, CorpusError> {
    if corpus.is_empty() {
        return Err(CorpusError::Empty);
    }
    let mut line_count = 0;
    let mut token_count = 0;
    let mut unique = HashSet::new();
    let mut per_year_histogram = BTreeMap::new();
    for song in &corpus.songs {
        line_count += song.lines.len();
        for line in &song.lines {
            token_count += line.len();
            unique.extend(line.tokens.iter().map(String::as_str));
        }
        if let Some(year) = song.year {
            *per_year_histogram.entry(year).or_insert(0) += 1;
        }
    }
    let song_count = corpus.songs.len();
    Ok(CorpusStats {
        song_count,
        line_count,
        avg_lines_per_song: line_count as f64 / song_count as f64,
        token_count,
        unique_token_count: unique.len(),
        year_min: per_year_histogram.keys().next().copied(),
        year_max: per_year_histogram.keys().next_back().copied(),
        per_year_histogram,
    })
}

/// Published figures for the full Bollywood lyrics dataset, used only to
/// report how far a locally tokenized copy drifts from them.
pub const REFERENCE_STATS: ReferenceStats = ReferenceStats {
    song_count: 10_229,
    line_count: 366_219,
    avg_lines_per_song: 35.80,
    token_count: 2_094_427,
    unique_token_count: 71_135,
    year_min: 1934,
    year_max: 2019,
};

#[derive(Debug, Clone, Copy)]
pub struct ReferenceStats {
    pub song_count: usize,
    pub line_count: usize,
    pub avg_lines_per_song: f64,
    pub token_count: usize,
    pub unique_token_count: usize,
    pub year_min: i32,
    pub year_max: i32,
}

impl ReferenceStats {
    /// Returns one `(field, expected, actual)` triple per field that differs.
    pub fn discrepancies(&self, stats: &CorpusStats) -> Vec<(&'static str, String, String)> {
        let mut out = Vec::new();
        let mut check = |name, expected: String, actual: String| {
            if expected != actual {
                out.push((name, expected, actual));
            }
        };
        check(
            "song_count",
            self.song_count.to_string(),
            stats.song_count.to_string(),
        );
        check(
            "line_count",
            self.line_count.to_string(),
            stats.line_count.to_string(),
        );
        check(
            "avg_lines_per_song",
            format!("{:.2}", self.avg_lines_per_song),
            format!("{:.2}", stats.avg_lines_per_song),
        );
        check(
            "token_count",
            self.token_count.to_string(),
            stats.token_count.to_string(),
        );
        check(
            "unique_token_count",
            self.unique_token_count.to_string(),
            stats.unique_token_count.to_string(),
        );
        check(
            "year_min",
            self.year_min.to_string(),
            stats.year_min.map_or("-".into(), |y| y.to_string()),
        );
        check(
            "year_max",
            self.year_max.to_string(),
            stats.year_max.map_or("-".into(), |y| y.to_string()),
        );
        out
    }
}

/// Token vocabulary shared with external trainers. Id 0 is always the
/// start sentinel, the rest are sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabFile {
    pub version: u32,
    pub start_token: String,
    pub tokens: Vec<String>,
}

/// One training window: ids of the context (in reversed order) and the
/// id of the word that precedes it in the original line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceRecord {
    pub context: Vec<u32>,
    pub target: u32,
}

/// Reversed windows of `context_len` tokens over a line, each predicting
/// the next token of the reversed sequence. The final window targets the
/// start sentinel. Lines shorter than `context_len` yield nothing.
pub fn reverse_windows(line: &Line, context_len: usize) -> Vec<(Vec<&str>, &str)> {
    let n = line.len();
    if context_len == 0 || n < context_len {
        return Vec::new();
    }
    let reversed: Vec<&str> = line
        .tokens
        .iter()
        .rev()
        .map(String::as_str)
        .chain(std::iter::once(START_TOKEN))
        .collect();
    (0..=n - context_len)
        .map(|i| {
            (
                reversed[i..i + context_len].to_vec(),
                reversed[i + context_len],
            )
        })
        .collect()
}

pub fn build_vocab(corpus: &Corpus) -> VocabFile {
    let words: BTreeSet<&str> = corpus
        .lines()
        .flat_map(|l| l.tokens.iter().map(String::as_str))
        .collect();
    let tokens = std::iter::once(START_TOKEN)
        .chain(words)
        .map(str::to_owned)
        .collect();
    VocabFile {
        version: 1,
        start_token: START_TOKEN.to_owned(),
        tokens,
    }
}

/// Writes the vocabulary and the reversed training windows. Returns the
/// number of windows written.
pub fn export_sequences(
    corpus: &Corpus,
    vocab_out: &Path,
    seq_out: &Path,
    context_len: usize,
) -> Result<usize, CorpusError> {
    if corpus.is_empty() {
        return Err(CorpusError::Empty);
    }
    if context_len == 0 {
        return Err(CorpusError::ContextLength);
    }
    let vocab = build_vocab(corpus);
    let ids: std::collections::HashMap<&str, u32> = vocab
        .tokens
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_str(), i as u32))
        .collect();

    let write_err = |path: &Path| {
        let path = path.to_owned();
        move |source| CorpusError::Write { path, source }
    };

    let json = serde_json::to_string_pretty(&vocab).expect("vocab serializes");
    std::fs::write(vocab_out, json + "\n").map_err(write_err(vocab_out))?;

    let file = File::create(seq_out).map_err(write_err(seq_out))?;
    let mut out = BufWriter::new(file);
    let mut written = 0;
    for line in corpus.lines() {
        for (context, target) in reverse_windows(line, context_len) {
            let record = SequenceRecord {
                context: context.iter().map(|t| ids[t]).collect(),
                target: ids[target],
            };
            serde_json::to_writer(&mut out, &record).expect("record serializes");
            out.write_all(b"\n").map_err(write_err(seq_out))?;
            written += 1;
        }
    }
    out.flush().map_err(write_err(seq_out))?;
    Ok(written)
}
