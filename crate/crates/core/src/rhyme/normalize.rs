use std::collections::HashMap;
use std::path::Path;

use super::RhymeError;

/// Single-step spelling normalization: variant → canonical.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NormalizationTable {
    map: HashMap<String, String>,
}

impl NormalizationTable {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Fails if any canonical form is also a variant, since lookups are
    /// never chained.
    pub fn new<I, K, V>(entries: I) -> Result<Self, RhymeError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        let mut map = HashMap::new();
        for (i, (k, v)) in entries.into_iter().enumerate() {
            let (k, v) = (k.into(), v.into());
            if let Some(prev) = map.get(&k) {
                if prev != &v {
                    return Err(RhymeError::Normalization {
                        line: i + 1,
                        reason: format!("{k:?} mapped to both {prev:?} and {v:?}"),
                    });
                }
            }
            map.insert(k, v);
        }
        let table = NormalizationTable { map };
        table.check_chains()?;
        Ok(table)
    }

    fn check_chains(&self) -> Result<(), RhymeError> {
        let mut chained: Vec<&String> = self
            .map
            .values()
            .filter(|v| self.map.contains_key(*v))
            .collect();
        chained.sort();
        match chained.first() {
            None => Ok(()),
            Some(v) => Err(RhymeError::Normalization {
                line: 0,
                reason: format!("canonical form {v:?} is itself a variant (chained mapping)"),
            }),
        }
    }

    /// Parses `variant<TAB>canonical` lines. Blank lines and lines starting
    /// with `#` are skipped.
    pub fn from_tsv(text: &str) -> Result<Self, RhymeError> {
        let mut entries: Vec<(String, String)> = Vec::new();
        let mut seen: HashMap<String, (usize, String)> = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = raw.split('\t').map(str::trim).collect();
            let [variant, canonical] = cols[..] else {
                return Err(RhymeError::Normalization {
                    line,
                    reason: format!("expected 2 tab-separated columns, found {}", cols.len()),
                });
            };
            if variant.is_empty() || canonical.is_empty() {
                return Err(RhymeError::Normalization {
                    line,
                    reason: "empty column".into(),
                });
            }
            let (variant, canonical) = (variant.to_lowercase(), canonical.to_lowercase());
            if let Some((first, prev)) = seen.get(&variant) {
                if prev != &canonical {
                    return Err(RhymeError::Normalization {
                        line,
                        reason: format!("{variant:?} already mapped to {prev:?} on line {first}"),
                    });
                }
            }
            seen.insert(variant.clone(), (line, canonical.clone()));
            entries.push((variant, canonical));
        }
        let table = NormalizationTable {
            map: entries.into_iter().collect(),
        };
        if let Err(RhymeError::Normalization { reason, .. }) = table.check_chains() {
            let culprit = table
                .map
                .values()
                .find(|v| table.map.contains_key(*v))
                .and_then(|v| seen.get(v))
                .map_or(0, |(line, _)| *line);
            return Err(RhymeError::Normalization {
                line: culprit,
                reason,
            });
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self, RhymeError> {
        let text = std::fs::read_to_string(path).map_err(|source| RhymeError::Read {
            path: path.to_owned(),
            source,
        })?;
        Self::from_tsv(&text)
    }

    /// Bundled seed table of common spelling variants.
    pub fn bundled() -> Self {
        Self::from_tsv(include_str!("../../data/normalization.tsv"))
            .expect("bundled normalization table is valid")
    }

    pub fn normalize<'a>(&'a self, word: &'a str) -> &'a str {
        self.map.get(word).map_or(word, String::as_str)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}
