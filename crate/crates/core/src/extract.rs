//! Base-level subtree detection and candidate-rule extraction.
//!
//! A chunk is a head together with a contiguous run of its dependents in
//! which every dependent is a leaf. Overlapping candidates are resolved in
//! favour of the maximal span.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::ruleset::{ChunkRule, RuleSet};
use crate::treebank::{validate_tree, Sentence, Treebank, PUNCT};

pub const DEFAULT_MIN_FREQ: usize = 5;

/// A 1-based inclusive token span with the head position inside it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChunkSpan {
    pub start: usize,
    pub end: usize,
    /// 0-based position of the head within the span.
    pub head_offset: usize,
}

impl ChunkSpan {
    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn head(&self) -> usize {
        self.start + self.head_offset
    }

    pub fn contains(&self, other: &ChunkSpan) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn overlaps(&self, other: &ChunkSpan) -> bool {
        self.start <= other.end && other.start <= self.end
    }
}

/// Head and child-count lookups over a validated sentence.
#[derive(Clone, Debug)]
pub struct TreeView {
    heads: Vec<usize>,
    children: Vec<usize>,
}

impl TreeView {
    pub fn new(sentence: &Sentence) -> Result<Self> {
        let violations = validate_tree(sentence);
        if !violations.is_empty() {
            return Err(Error::InvalidTree {
                sentence: 0,
                violations,
            });
        }
        Ok(Self::from_heads(sentence.heads()))
    }

    /// Builds a view from a head vector without validating it.
    pub(crate) fn from_heads(heads: Vec<usize>) -> Self {
        let mut children = vec![0; heads.len() + 1];
        for &h in &heads {
            children[h] += 1;
        }
        TreeView { heads, children }
    }

    pub fn len(&self) -> usize {
        self.heads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heads.is_empty()
    }

    /// Governor of 1-based token `i`.
    pub fn head(&self, i: usize) -> usize {
        self.heads[i - 1]
    }

    pub fn is_leaf(&self, i: usize) -> bool {
        self.children[i] == 0
    }

    /// If `[start, end]` is a base-level subtree, the 0-based head offset.
    pub fn base_span_head(&self, start: usize, end: usize) -> Option<usize> {
        if end <= start || end > self.len() {
            return None;
        }
        let mut head = None;
        for i in start..=end {
            let h = self.head(i);
            if h < start || h > end {
                if head.replace(i).is_some() {
                    return None;
                }
            }
        }
        let head = head?;
        let ok = (start..=end)
            .filter(|&i| i != head)
            .all(|i| self.head(i) == head && self.is_leaf(i));
        ok.then(|| head - start)
    }
}

/// All spans meeting the chunk criteria: a head plus a contiguous run of
/// its leaf dependents, at least two tokens long. Sorted by (start, end).
pub fn base_subtrees(sentence: &Sentence) -> Result<Vec<ChunkSpan>> {
    let view = TreeView::new(sentence)?;
    Ok(base_subtrees_in(&view))
}

pub(crate) fn base_subtrees_in(view: &TreeView) -> Vec<ChunkSpan> {
    let n = view.len();
    let attached = |i: usize, h: usize| view.head(i) == h && view.is_leaf(i);
    let mut spans = Vec::new();
    for h in 1..=n {
        let mut left = h;
        while left > 1 && attached(left - 1, h) {
            left -= 1;
        }
        let mut right = h;
        while right < n && attached(right + 1, h) {
            right += 1;
        }
        for start in left..=h {
            for end in h..=right {
                if end > start {
                    spans.push(ChunkSpan {
                        start,
                        end,
                        head_offset: h - start,
                    });
                }
            }
        }
    }
    spans.sort();
    spans
}

/// Keeps maximal spans only. Spans contained in another candidate are
/// dropped first; remaining overlaps go to the longer span, then the
/// leftmost. The result is non-overlapping and sorted by start.
pub fn maximal_spans(spans: &[ChunkSpan]) -> Vec<ChunkSpan> {
    let mut uncontained: Vec<ChunkSpan> = Vec::new();
    for (i, s) in spans.iter().enumerate() {
        let dominated = spans.iter().enumerate().any(|(j, o)| {
            (o.start, o.end) != (s.start, s.end) && o.contains(s)
                || (j < i && (o.start, o.end) == (s.start, s.end))
        });
        if !dominated {
            uncontained.push(*s);
        }
    }
    uncontained.sort_by(|a, b| b.len().cmp(&a.len()).then(a.start.cmp(&b.start)));

    let mut kept: Vec<ChunkSpan> = Vec::new();
    for s in uncontained {
        if kept.iter().all(|k| !k.overlaps(&s)) {
            kept.push(s);
        }
    }
    kept.sort();
    kept
}

#[derive(Default)]
struct RuleCounts {
    frequency: usize,
    heads: BTreeMap<usize, usize>,
}

/// Counts the POS sequences of maximal base-level spans over a training
/// treebank. Sequences containing punctuation or seen fewer than
/// `min_freq` times are dropped; each rule's head offset is the majority
/// offset, earliest on ties.
pub fn extract_candidate_rules(treebank: &Treebank, min_freq: usize) -> Result<RuleSet> {
    let mut counts: BTreeMap<Vec<String>, RuleCounts> = BTreeMap::new();
    for (idx, sentence) in treebank.sentences.iter().enumerate() {
        let view = TreeView::new(sentence).map_err(|e| with_sentence(e, idx + 1))?;
        for span in maximal_spans(&base_subtrees_in(&view)) {
            let pos = &sentence.tokens[span.start - 1..span.end];
            if pos.iter().any(|t| t.upos == PUNCT) {
                continue;
            }
            let key: Vec<String> = pos.iter().map(|t| t.upos.clone()).collect();
            let entry = counts.entry(key).or_default();
            entry.frequency += 1;
            *entry.heads.entry(span.head_offset).or_default() += 1;
        }
    }

    let mut rules = Vec::new();
    for (pos, c) in counts {
        if c.frequency < min_freq {
            continue;
        }
        let head_offset = c
            .heads
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .map(|(&off, _)| off)
            .unwrap_or(0);
        rules.push(ChunkRule::new(&pos, head_offset, c.frequency)?);
    }
    RuleSet::new(rules)
}

pub(crate) fn with_sentence(err: Error, sentence: usize) -> Error {
    match err {
        Error::InvalidTree { violations, .. } => Error::InvalidTree {
            sentence,
            violations,
        },
        other => other,
    }
}
