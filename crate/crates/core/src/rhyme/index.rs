use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{NormalizationTable, RhymeError, RuleTable, SoundGroup};
use crate::corpus::{Corpus, Line};

/// The last two words of a lyric line, filed under the final word's group.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RhymePair {
    pub penultimate: String,
    pub final_word: String,
    pub group: SoundGroup,
}

pub fn extract_pair(line: &Line, table: &RuleTable) -> Option<RhymePair> {
    let [.., penultimate, final_word] = line.tokens() else {
        return None;
    };
    let group = table.classify(final_word)?;
    Some(RhymePair {
        penultimate: penultimate.clone(),
        final_word: final_word.clone(),
        group,
    })
}

/// Rhyme pairs per sound group. Duplicates are kept so uniform draws are
/// weighted by corpus frequency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RhymeIndex {
    groups: BTreeMap<SoundGroup, Vec<RhymePair>>,
}

impl Default for RhymeIndex {
    fn default() -> Self {
        RhymeIndex {
            groups: SoundGroup::ALL.iter().map(|&g| (g, Vec::new())).collect(),
        }
    }
}

impl RhymeIndex {
    pub fn insert(&mut self, pair: RhymePair) {
        self.groups.entry(pair.group).or_default().push(pair);
    }

    pub fn pairs(&self, group: SoundGroup) -> &[RhymePair] {
        self.groups.get(&group).map_or(&[], Vec::as_slice)
    }

    /// Groups holding at least one pair, in canonical group order.
    pub fn non_empty_groups(&self) -> Vec<SoundGroup> {
        self.groups
            .iter()
            .filter(|(_, v)| !v.is_empty())
            .map(|(g, _)| *g)
            .collect()
    }

    pub fn total_pairs(&self) -> usize {
        self.groups.values().map(Vec::len).sum()
    }

    pub fn to_json(&self) -> String {
        let file = IndexFile {
            version: 1,
            groups: self
                .groups
                .iter()
                .map(|(g, pairs)| {
                    let pairs = pairs
                        .iter()
                        .map(|p| [p.penultimate.clone(), p.final_word.clone()])
                        .collect();
                    (*g, pairs)
                })
                .collect(),
        };
        serde_json::to_string(&file).expect("rhyme index serializes")
    }

    pub fn from_json(json: &str) -> Result<Self, RhymeError> {
        let file: IndexFile = serde_json::from_str(json)?;
        if file.version != 1 {
            return Err(RhymeError::Version(file.version));
        }
        let mut index = RhymeIndex::default();
        for (group, pairs) in file.groups {
            for [penultimate, final_word] in pairs {
                if penultimate.is_empty() || final_word.is_empty() {
                    return Err(RhymeError::Index(format!(
                        "empty word in a pair under group {group}"
                    )));
                }
                index.insert(RhymePair {
                    penultimate,
                    final_word,
                    group,
                });
            }
        }
        Ok(index)
    }

    pub fn save(&self, path: &Path) -> Result<(), RhymeError> {
        std::fs::write(path, self.to_json() + "\n").map_err(|source| RhymeError::Write {
            path: path.to_owned(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, RhymeError> {
        let json = std::fs::read_to_string(path).map_err(|source| RhymeError::Read {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&json)
    }

    /// Checks that every stored pair sits under its final word's group.
    pub fn validate(&self, table: &RuleTable) -> Result<(), RhymeError> {
        for (group, pairs) in &self.groups {
            for p in pairs {
                if table.classify(&p.final_word) != Some(*group) {
                    return Err(RhymeError::Index(format!(
                        "{:?} is filed under {group} but classifies as {:?}",
                        p.final_word,
                        table.classify(&p.final_word)
                    )));
                }
            }
        }
        Ok(())
    }
}

/// On-disk layout: `{"version": 1, "groups": {"U": [["roka", "karun"], ...], ...}}`.
#[derive(Serialize, Deserialize)]
struct IndexFile {
    version: u32,
    groups: BTreeMap<SoundGroup, Vec<[String; 2]>>,
}

pub fn build_index(corpus: &Corpus, table: &RuleTable, norm: &NormalizationTable) -> RhymeIndex {
    let mut index = RhymeIndex::default();
    for line in corpus.lines() {
        if let Some(pair) = extract_pair(&line.normalized(norm), table) {
            index.insert(pair);
        }
    }
    index
}
