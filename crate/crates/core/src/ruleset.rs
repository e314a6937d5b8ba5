//! Chunk rules and their canonical ordering.
//!
//! A rule file holds one rule per line: the POS tags joined by single
//! spaces, the head offset and the corpus frequency, separated by tabs.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::treebank::PUNCT;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ChunkRule {
    pub pos_sequence: Vec<String>,
    /// 0-based index of the head within `pos_sequence`.
    pub head_offset: usize,
    pub frequency: usize,
}

impl ChunkRule {
    pub fn new<S: AsRef<str>>(pos: &[S], head_offset: usize, frequency: usize) -> Result<Self> {
        let rule = ChunkRule {
            pos_sequence: pos.iter().map(|p| p.as_ref().to_owned()).collect(),
            head_offset,
            frequency,
        };
        rule.check()?;
        Ok(rule)
    }

    fn check(&self) -> Result<()> {
        if self.pos_sequence.len() < 2 {
            return Err(Error::InvalidRule(format!(
                "'{}' is shorter than 2",
                self.pattern()
            )));
        }
        if self.head_offset >= self.pos_sequence.len() {
            return Err(Error::InvalidRule(format!(
                "'{}' has head offset {} out of range",
                self.pattern(),
                self.head_offset
            )));
        }
        if self.pos_sequence.iter().any(|p| p == PUNCT || p.is_empty()) {
            return Err(Error::InvalidRule(format!(
                "'{}' contains punctuation or an empty tag",
                self.pattern()
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.pos_sequence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pos_sequence.is_empty()
    }

    pub fn head_pos(&self) -> &str {
        &self.pos_sequence[self.head_offset]
    }

    /// POS tags joined by spaces.
    pub fn pattern(&self) -> String {
        self.pos_sequence.join(" ")
    }

    fn canonical_cmp(&self, other: &Self) -> Ordering {
        other
            .len()
            .cmp(&self.len())
            .then(other.frequency.cmp(&self.frequency))
            .then_with(|| self.pos_sequence.cmp(&other.pos_sequence))
    }
}

impl fmt::Display for ChunkRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}",
            self.pattern(),
            self.head_offset,
            self.frequency
        )
    }
}

/// Rules with unique POS sequences, kept sorted by descending length, then
/// descending frequency, then POS sequence.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RuleSet {
    rules: Vec<ChunkRule>,
}

impl RuleSet {
    pub fn new(mut rules: Vec<ChunkRule>) -> Result<Self> {
        let mut seen = HashSet::new();
        for rule in &rules {
            rule.check()?;
            if !seen.insert(&rule.pos_sequence) {
                return Err(Error::DuplicateRule(rule.pattern()));
            }
        }
        rules.sort_by(ChunkRule::canonical_cmp);
        Ok(RuleSet { rules })
    }

    pub fn empty() -> Self {
        RuleSet::default()
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn rules(&self) -> &[ChunkRule] {
        &self.rules
    }

    pub fn get(&self, idx: usize) -> Option<&ChunkRule> {
        self.rules.get(idx)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ChunkRule> {
        self.rules.iter()
    }

    pub fn position(&self, pos: &[&str]) -> Option<usize> {
        self.rules.iter().position(|r| r.pos_sequence == pos)
    }

    /// The rules whose bit is set; canonical order is preserved.
    pub fn subset(&self, bits: &[bool]) -> RuleSet {
        assert_eq!(bits.len(), self.rules.len(), "mask length mismatch");
        RuleSet {
            rules: self
                .rules
                .iter()
                .zip(bits)
                .filter(|(_, &b)| b)
                .map(|(r, _)| r.clone())
                .collect(),
        }
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for rule in &self.rules {
            out.push_str(&rule.to_string());
            out.push('\n');
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut rules = Vec::new();
        let mut seen = HashSet::new();
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(Error::parse(
                    lineno,
                    format!("expected 3 tab-separated columns, found {}", cols.len()),
                ));
            }
            let pos: Vec<&str> = cols[0].split(' ').collect();
            let head_offset = cols[1]
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad head offset '{}'", cols[1])))?;
            let frequency = cols[2]
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad frequency '{}'", cols[2])))?;
            let rule = ChunkRule::new(&pos, head_offset, frequency)
                .map_err(|e| Error::parse(lineno, e.to_string()))?;
            if !seen.insert(rule.pos_sequence.clone()) {
                return Err(Error::parse(
                    lineno,
                    format!("duplicate rule '{}'", rule.pattern()),
                ));
            }
            rules.push(rule);
        }
        RuleSet::new(rules)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RuleSet::from_tsv(&text)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }
}

impl<'a> IntoIterator for &'a RuleSet {
    type Item = &'a ChunkRule;
    type IntoIter = std::slice::Iter<'a, ChunkRule>;

    fn into_iter(self) -> Self::IntoIter {
        self.rules.iter()
    }
}
