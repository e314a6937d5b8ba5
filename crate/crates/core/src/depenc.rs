//! Dependency trees as one label per token.
//!
//! A label names the head by its UPOS tag and its rank among tokens with
//! that tag, counted outward from the dependent: `+1,nsubj,VERB` is the
//! first VERB to the right. The root token is labeled `0,<rel>,ROOT`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::treebank::{find_cycles, validate_tree, Sentence, PUNCT};

pub const ROOT_POS: &str = "ROOT";
/// Relation given to a token promoted to root by the decoder.
pub const ROOT_RELATION: &str = "root";

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DepLabel {
    /// Signed rank of the head among same-POS tokens; 0 for the root.
    pub offset: i32,
    pub relation: String,
    pub head_pos: String,
}

impl DepLabel {
    pub fn root(relation: &str) -> Self {
        DepLabel {
            offset: 0,
            relation: relation.to_owned(),
            head_pos: ROOT_POS.to_owned(),
        }
    }

    pub fn is_root(&self) -> bool {
        self.offset == 0
    }
}

impl fmt::Display for DepLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.offset > 0 {
            write!(f, "+{},{},{}", self.offset, self.relation, self.head_pos)
        } else {
            write!(f, "{},{},{}", self.offset, self.relation, self.head_pos)
        }
    }
}

impl FromStr for DepLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Model(format!("invalid dependency label '{}'", s));
        let mut parts = s.split(',');
        let (Some(off), Some(rel), Some(pos), None) =
            (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(bad());
        };
        let offset: i32 = off.parse().map_err(|_| bad())?;
        if rel.is_empty() || pos.is_empty() || (offset == 0) != (pos == ROOT_POS) {
            return Err(bad());
        }
        Ok(DepLabel {
            offset,
            relation: rel.to_owned(),
            head_pos: pos.to_owned(),
        })
    }
}

/// Labels every token of a well-formed tree.
pub fn encode(sentence: &Sentence) -> Result<Vec<DepLabel>> {
    let violations = validate_tree(sentence);
    if !violations.is_empty() {
        return Err(Error::InvalidTree {
            sentence: 0,
            violations,
        });
    }
    let pos = sentence.upos();
    Ok(sentence
        .tokens
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let dep = i + 1;
            if t.head == 0 {
                return DepLabel::root(&t.deprel);
            }
            let head_pos = pos[t.head - 1];
            let offset = if t.head > dep {
                (dep + 1..=t.head).filter(|&j| pos[j - 1] == head_pos).count() as i32
            } else {
                -((t.head..dep).filter(|&j| pos[j - 1] == head_pos).count() as i32)
            };
            DepLabel {
                offset,
                relation: t.deprel.clone(),
                head_pos: head_pos.to_owned(),
            }
        })
        .collect())
}

/// Heads (1-based, 0 = root) and relations recovered from labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decoded {
    pub heads: Vec<usize>,
    pub relations: Vec<String>,
}

fn nth_in_direction(pos: &[String], dep: usize, target: &str, offset: i32) -> Option<usize> {
    let n = offset.unsigned_abs() as usize;
    let mut candidates: Box<dyn Iterator<Item = usize>> = if offset > 0 {
        Box::new(dep + 1..=pos.len())
    } else {
        Box::new((1..dep).rev())
    };
    candidates.by_ref().filter(|&j| pos[j - 1] == target).nth(n - 1)
}

fn nearest(pos: &[String], dep: usize, target: &str, offset: i32) -> Option<usize> {
    let right = (dep + 1..=pos.len()).find(|&j| pos[j - 1] == target);
    let left = (1..dep).rev().find(|&j| pos[j - 1] == target);
    let stated = if offset > 0 { right } else { left };
    stated.or(match (left, right) {
        (Some(l), Some(r)) => Some(if dep - l <= r - dep { l } else { r }),
        (l, r) => l.or(r),
    })
}

/// Turns labels into a single-rooted acyclic tree for any input.
///
/// Unresolvable labels fall back to the nearest token with the named POS in
/// the stated direction, then in either direction, then to the root. With no
/// root label the first fully unresolved token (else token 1) becomes root;
/// with several, the first is kept and the others attach to it. Cycles are
/// broken by attaching their lowest-index token to the root.
pub fn decode(pos: &[String], labels: &[DepLabel]) -> Result<Decoded> {
    if pos.len() != labels.len() {
        return Err(Error::LengthMismatch {
            expected: pos.len(),
            found: labels.len(),
        });
    }
    let n = labels.len();
    if n == 0 {
        return Ok(Decoded {
            heads: Vec::new(),
            relations: Vec::new(),
        });
    }

    let mut heads: Vec<Option<usize>> = vec![None; n];
    let mut relations: Vec<String> = labels.iter().map(|l| l.relation.clone()).collect();
    let mut roots = Vec::new();
    let mut first_failed = None;
    for (i, label) in labels.iter().enumerate() {
        let dep = i + 1;
        if label.is_root() {
            roots.push(dep);
            continue;
        }
        let head = nth_in_direction(pos, dep, &label.head_pos, label.offset)
            .or_else(|| nearest(pos, dep, &label.head_pos, label.offset));
        if head.is_none() && first_failed.is_none() {
            first_failed = Some(dep);
        }
        heads[i] = head;
    }

    let root = match roots.first() {
        Some(&r) => r,
        None => {
            let r = first_failed.unwrap_or(1);
            relations[r - 1] = ROOT_RELATION.to_owned();
            r
        }
    };
    let mut out: Vec<usize> = heads.iter().map(|h| h.unwrap_or(root)).collect();
    for &r in &roots {
        out[r - 1] = root;
    }
    out[root - 1] = 0;

    loop {
        let cycles = find_cycles(&out);
        if cycles.is_empty() {
            break;
        }
        for cycle in cycles {
            out[cycle[0] - 1] = root;
        }
    }
    Ok(Decoded {
        heads: out,
        relations,
    })
}

/// Copy of `sentence` with heads and relations decoded from `labels`,
/// resolved against `pos` (which may differ from the sentence's own UPOS).
pub fn decode_sentence(sentence: &Sentence, pos: &[String], labels: &[DepLabel]) -> Result<Sentence> {
    if sentence.len() != labels.len() {
        return Err(Error::LengthMismatch {
            expected: sentence.len(),
            found: labels.len(),
        });
    }
    let decoded = decode(pos, labels)?;
    let mut out = sentence.clone();
    for (t, (h, r)) in out
        .tokens
        .iter_mut()
        .zip(decoded.heads.into_iter().zip(decoded.relations))
    {
        t.head = h;
        t.deprel = r;
    }
    Ok(out)
}

/// Attachment scores, excluding punctuation.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ParseScore {
    pub uas: f64,
    pub las: f64,
    pub scored: usize,
    pub head_correct: usize,
    pub both_correct: usize,
}

impl ParseScore {
    fn from_counts(scored: usize, head_correct: usize, both_correct: usize) -> Self {
        let ratio = |a: usize| if scored == 0 { 0.0 } else { a as f64 / scored as f64 };
        ParseScore {
            uas: ratio(head_correct),
            las: ratio(both_correct),
            scored,
            head_correct,
            both_correct,
        }
    }

    pub fn merge(self, other: ParseScore) -> ParseScore {
        ParseScore::from_counts(
            self.scored + other.scored,
            self.head_correct + other.head_correct,
            self.both_correct + other.both_correct,
        )
    }
}

/// Compares heads and relations token by token; tokens whose gold UPOS is
/// PUNCT are skipped.
pub fn score(gold: &Sentence, pred: &Sentence) -> Result<ParseScore> {
    if gold.len() != pred.len() {
        return Err(Error::LengthMismatch {
            expected: gold.len(),
            found: pred.len(),
        });
    }
    let (mut scored, mut heads, mut both) = (0, 0, 0);
    for (g, p) in gold.tokens.iter().zip(&pred.tokens) {
        if g.form != p.form {
            return Err(Error::TokenizationMismatch {
                token: g.id,
            });
        }
        if g.upos == PUNCT {
            continue;
        }
        scored += 1;
        if g.head == p.head {
            heads += 1;
            if g.deprel == p.deprel {
                both += 1;
            }
        }
    }
    Ok(ParseScore::from_counts(scored, heads, both))
}

pub fn score_corpus(gold: &[Sentence], pred: &[Sentence]) -> Result<ParseScore> {
    if gold.len() != pred.len() {
        return Err(Error::LengthMismatch {
            expected: gold.len(),
            found: pred.len(),
        });
    }
    gold.iter()
        .zip(pred)
        .try_fold(ParseScore::default(), |acc, (g, p)| Ok(acc.merge(score(g, p)?)))
}
