use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{RhymeError, SoundGroup};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    Suffix,
    WholeWord,
}

/// A single ending rule. `pattern` is stored without the leading hyphen
/// used in rule files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RhymeRule {
    pub kind: RuleKind,
    pub pattern: String,
    pub group: SoundGroup,
    pub exceptions: BTreeSet<String>,
}

impl RhymeRule {
    pub fn suffix(pattern: &str, group: SoundGroup, exceptions: &[&str]) -> Self {
        RhymeRule {
            kind: RuleKind::Suffix,
            pattern: pattern.trim_start_matches('-').to_owned(),
            group,
            exceptions: exceptions.iter().map(|e| (*e).to_owned()).collect(),
        }
    }

    pub fn whole_word(word: &str, group: SoundGroup) -> Self {
        RhymeRule {
            kind: RuleKind::WholeWord,
            pattern: word.to_owned(),
            group,
            exceptions: BTreeSet::new(),
        }
    }

    fn matches(&self, word: &str) -> bool {
        match self.kind {
            RuleKind::WholeWord => word == self.pattern,
            RuleKind::Suffix => word.ends_with(&self.pattern) && !self.exceptions.contains(word),
        }
    }
}

/// Ordered rule list. Whole-word rules win over suffix rules; among
/// suffix rules the longest matching pattern wins, ties going to the
/// earlier rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleTable {
    rules: Vec<RhymeRule>,
    whole_words: HashMap<String, usize>,
    // indices into `rules`, longest pattern first, stable on table order
    suffix_order: Vec<usize>,
}

impl RuleTable {
    pub fn new(rules: Vec<RhymeRule>) -> Result<Self, RhymeError> {
        let mut whole_words = HashMap::new();
        for (i, rule) in rules.iter().enumerate() {
            if rule.pattern.is_empty() {
                return Err(RhymeError::Rule("empty pattern".into()));
            }
            if rule.pattern.chars().any(char::is_whitespace) {
                return Err(RhymeError::Rule(format!(
                    "pattern {:?} contains whitespace",
                    rule.pattern
                )));
            }
            if rule.kind == RuleKind::WholeWord {
                if !rule.exceptions.is_empty() {
                    return Err(RhymeError::Rule(format!(
                        "whole-word rule {:?} cannot carry exceptions",
                        rule.pattern
                    )));
                }
                if whole_words.insert(rule.pattern.clone(), i).is_some() {
                    return Err(RhymeError::Rule(format!(
                        "duplicate whole-word rule {:?}",
                        rule.pattern
                    )));
                }
            }
        }
        let mut suffix_order: Vec<usize> = rules
            .iter()
            .enumerate()
            .filter(|(_, r)| r.kind == RuleKind::Suffix)
            .map(|(i, _)| i)
            .collect();
        suffix_order.sort_by_key(|&i| std::cmp::Reverse(rules[i].pattern.len()));
        Ok(RuleTable {
            rules,
            whole_words,
            suffix_order,
        })
    }

    pub fn rules(&self) -> &[RhymeRule] {
        &self.rules
    }

    /// The rule that decides `word`'s group, if any.
    pub fn matching_rule(&self, word: &str) -> Option<&RhymeRule> {
        if let Some(&i) = self.whole_words.get(word) {
            return Some(&self.rules[i]);
        }
        self.suffix_order
            .iter()
            .map(|&i| &self.rules[i])
            .find(|r| r.matches(word))
    }

    pub fn classify(&self, word: &str) -> Option<SoundGroup> {
        self.matching_rule(word).map(|r| r.group)
    }

    pub fn from_json(json: &str) -> Result<Self, RhymeError> {
        let file: RuleFile = serde_json::from_str(json)?;
        if file.version != 1 {
            return Err(RhymeError::Version(file.version));
        }
        let mut rules: Vec<RhymeRule> = file
            .whole_words
            .iter()
            .map(|(w, g)| RhymeRule::whole_word(w, *g))
            .collect();
        for s in &file.suffixes {
            let exceptions: Vec<&str> = s.exceptions.iter().map(String::as_str).collect();
            rules.push(RhymeRule::suffix(&s.pattern, s.group, &exceptions));
        }
        RuleTable::new(rules)
    }

    pub fn load(path: &Path) -> Result<Self, RhymeError> {
        let json = std::fs::read_to_string(path).map_err(|source| RhymeError::Read {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&json)
    }

    pub fn to_json(&self) -> String {
        let mut file = RuleFile {
            version: 1,
            whole_words: BTreeMap::new(),
            suffixes: Vec::new(),
        };
        for rule in &self.rules {
            match rule.kind {
                RuleKind::WholeWord => {
                    file.whole_words.insert(rule.pattern.clone(), rule.group);
                }
                RuleKind::Suffix => file.suffixes.push(SuffixEntry {
                    pattern: format!("-{}", rule.pattern),
                    group: rule.group,
                    exceptions: rule.exceptions.iter().cloned().collect(),
                }),
            }
        }
        serde_json::to_string_pretty(&file).expect("rule table serializes")
    }
}

#[derive(Serialize, Deserialize)]
struct RuleFile {
    version: u32,
    #[serde(default)]
    whole_words: BTreeMap<String, SoundGroup>,
    #[serde(default)]
    suffixes: Vec<SuffixEntry>,
}

#[derive(Serialize, Deserialize)]
struct SuffixEntry {
    pattern: String,
    group: SoundGroup,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    exceptions: Vec<String>,
}

/// Built-in romanized ending table for the thirteen sound groups.
pub fn default_rule_table() -> RuleTable {
    use SoundGroup::*;
    let rules = vec![
        RhymeRule::whole_word("hai", E),
        RhymeRule::whole_word("hain", E),
        RhymeRule::suffix("ein", E, &[]),
        RhymeRule::suffix("e", E, &[]),
        RhymeRule::suffix("ey", E, &[]),
        RhymeRule::suffix("aa", A, &[]),
        RhymeRule::suffix("a", A, &[]),
        RhymeRule::suffix("yan", A, &[]),
        RhymeRule::suffix("yaan", A, &[]),
        RhymeRule::suffix("uan", A, &[]),
        RhymeRule::suffix("u", U, &[]),
        RhymeRule::suffix("oo", U, &[]),
        RhymeRule::suffix("oon", U, &[]),
        RhymeRule::suffix("uun", U, &[]),
        RhymeRule::suffix("un", U, &[]),
        RhymeRule::suffix("i", I, &["hai", "mai", "jai"]),
        RhymeRule::suffix("ee", I, &[]),
        RhymeRule::suffix("iin", I, &[]),
        RhymeRule::suffix("in", I, &["hain", "main"]),
        RhymeRule::suffix("d", D, &[]),
        RhymeRule::suffix("k", K, &[]),
        RhymeRule::suffix("h", H, &[]),
        RhymeRule::suffix("r", R, &[]),
        RhymeRule::suffix("m", M, &[]),
        RhymeRule::suffix("t", T, &[]),
        RhymeRule::suffix("l", L, &[]),
        RhymeRule::suffix("b", B, &[]),
        RhymeRule::suffix("p", P, &[]),
    ];
    RuleTable::new(rules).expect("built-in table is valid")
}
