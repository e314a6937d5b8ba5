//! Rule application, IOB labelings and compression statistics.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::extract::{with_sentence, TreeView};
use crate::ruleset::RuleSet;
use crate::treebank::{Sentence, Treebank};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IobTag {
    Outside,
    Begin(String),
    Inside(String),
}

impl IobTag {
    pub fn chunk_type(&self) -> Option<&str> {
        match self {
            IobTag::Outside => None,
            IobTag::Begin(t) | IobTag::Inside(t) => Some(t),
        }
    }

    /// Whether `self` may directly follow `prev` (`None` = sentence start).
    pub fn may_follow(&self, prev: Option<&IobTag>) -> bool {
        match self {
            IobTag::Inside(t) => matches!(
                prev,
                Some(IobTag::Begin(p)) | Some(IobTag::Inside(p)) if p == t
            ),
            _ => true,
        }
    }
}

impl fmt::Display for IobTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IobTag::Outside => f.write_str("O"),
            IobTag::Begin(t) => write!(f, "B-{}", t),
            IobTag::Inside(t) => write!(f, "I-{}", t),
        }
    }
}

impl FromStr for IobTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "O" => Ok(IobTag::Outside),
            _ => match s.split_once('-') {
                Some(("B", t)) if !t.is_empty() => Ok(IobTag::Begin(t.to_owned())),
                Some(("I", t)) if !t.is_empty() => Ok(IobTag::Inside(t.to_owned())),
                _ => Err(Error::Model(format!("invalid IOB tag '{}'", s))),
            },
        }
    }
}

/// A chunk as a 1-based inclusive span tagged with its head POS.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LabeledSpan {
    pub start: usize,
    pub end: usize,
    pub head_pos: String,
}

impl LabeledSpan {
    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ChunkLabeling {
    labels: Vec<IobTag>,
    spans: Vec<LabeledSpan>,
}

impl ChunkLabeling {
    pub fn outside(n: usize) -> Self {
        ChunkLabeling {
            labels: vec![IobTag::Outside; n],
            spans: Vec::new(),
        }
    }

    /// Builds a labeling from tags, rejecting `I-X` without a preceding
    /// `B-X`/`I-X`.
    pub fn from_labels(labels: Vec<IobTag>) -> Result<Self> {
        if let Some(bad) = first_ill_formed(&labels) {
            return Err(Error::Model(format!(
                "ill-formed IOB sequence at token {}",
                bad + 1
            )));
        }
        let spans = spans_from_labels(&labels);
        Ok(ChunkLabeling { labels, spans })
    }

    /// Builds a labeling from non-overlapping spans over `n` tokens.
    pub fn from_spans(n: usize, spans: Vec<LabeledSpan>) -> Result<Self> {
        let mut labels = vec![IobTag::Outside; n];
        let mut spans = spans;
        spans.sort();
        for s in &spans {
            if s.start == 0 || s.end > n || s.end < s.start {
                return Err(Error::Model(format!(
                    "span [{}, {}] out of range",
                    s.start, s.end
                )));
            }
            if labels[s.start - 1..s.end]
                .iter()
                .any(|l| *l != IobTag::Outside)
            {
                return Err(Error::Model("overlapping spans".into()));
            }
            labels[s.start - 1] = IobTag::Begin(s.head_pos.clone());
            for l in &mut labels[s.start..s.end] {
                *l = IobTag::Inside(s.head_pos.clone());
            }
        }
        Ok(ChunkLabeling { labels, spans })
    }

    pub fn parse_tags<S: AsRef<str>>(tags: &[S]) -> Result<Self> {
        let labels = tags
            .iter()
            .map(|t| t.as_ref().parse())
            .collect::<Result<Vec<_>>>()?;
        Self::from_labels(labels)
    }

    pub fn labels(&self) -> &[IobTag] {
        &self.labels
    }

    pub fn spans(&self) -> &[LabeledSpan] {
        &self.spans
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn tag_strings(&self) -> Vec<String> {
        self.labels.iter().map(ToString::to_string).collect()
    }
}

/// MISC key under which chunk tags are stored in CoNLL-U.
pub const CHUNK_MISC_KEY: &str = "Chunk";

/// Reads the `Chunk=` MISC tags of every sentence.
pub fn read_chunk_layer(treebank: &Treebank) -> Result<Vec<ChunkLabeling>> {
    treebank
        .sentences
        .iter()
        .enumerate()
        .map(|(si, s)| {
            let tags = s
                .tokens
                .iter()
                .map(|t| {
                    t.misc_value(CHUNK_MISC_KEY).ok_or_else(|| {
                        Error::Missing(format!(
                            "sentence {} token {} has no {}= tag in MISC",
                            si + 1,
                            t.id,
                            CHUNK_MISC_KEY
                        ))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            ChunkLabeling::parse_tags(&tags).map_err(|e| {
                Error::Missing(format!("sentence {}: {}", si + 1, e))
            })
        })
        .collect()
}

pub fn first_ill_formed(labels: &[IobTag]) -> Option<usize> {
    let mut prev = None;
    for (i, l) in labels.iter().enumerate() {
        if !l.may_follow(prev) {
            return Some(i);
        }
        prev = Some(l);
    }
    None
}

fn spans_from_labels(labels: &[IobTag]) -> Vec<LabeledSpan> {
    let mut spans: Vec<LabeledSpan> = Vec::new();
    for (i, l) in labels.iter().enumerate() {
        match l {
            IobTag::Begin(t) => spans.push(LabeledSpan {
                start: i + 1,
                end: i + 1,
                head_pos: t.clone(),
            }),
            IobTag::Inside(_) => {
                if let Some(last) = spans.last_mut() {
                    last.end = i + 1;
                }
            }
            IobTag::Outside => {}
        }
    }
    spans
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MatchMode {
    /// A pattern match becomes a chunk only if it is also a base-level
    /// subtree of the gold tree.
    TreeValidated,
    /// Every pattern match becomes a chunk.
    PatternOnly,
}

impl FromStr for MatchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tree" | "tree-validated" | "tree_validated" => Ok(MatchMode::TreeValidated),
            "pattern" | "pattern-only" | "pattern_only" => Ok(MatchMode::PatternOnly),
            _ => Err(Error::Missing(format!("unknown match mode '{}'", s))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct RuleMatch {
    rule: u32,
    start: u32,
    len: u32,
}

/// Every accepted match of every rule of a ruleset over a treebank,
/// ordered by application priority (rule rank, then start).
///
/// Labeling with any subset of the rules only has to walk this list, so a
/// treebank is matched once and relabeled cheaply for each rule subset.
#[derive(Clone, Debug)]
pub struct MatchIndex {
    head_pos: Vec<String>,
    sentences: Vec<(usize, Vec<RuleMatch>)>,
}

impl MatchIndex {
    pub fn build(treebank: &Treebank, rules: &RuleSet, mode: MatchMode) -> Result<Self> {
        let mut by_pattern: HashMap<&[String], usize> = HashMap::new();
        let mut lengths: Vec<usize> = Vec::new();
        for (idx, rule) in rules.iter().enumerate() {
            by_pattern.insert(&rule.pos_sequence, idx);
            if !lengths.contains(&rule.len()) {
                lengths.push(rule.len());
            }
        }

        let mut sentences = Vec::with_capacity(treebank.len());
        for (sidx, sentence) in treebank.sentences.iter().enumerate() {
            let view = match mode {
                MatchMode::TreeValidated => Some(
                    TreeView::new(sentence).map_err(|e| with_sentence(e, sidx + 1))?,
                ),
                MatchMode::PatternOnly => None,
            };
            sentences.push((
                sentence.len(),
                sentence_matches(sentence, &by_pattern, &lengths, view.as_ref()),
            ));
        }
        Ok(MatchIndex {
            head_pos: rules.iter().map(|r| r.head_pos().to_owned()).collect(),
            sentences,
        })
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn rule_count(&self) -> usize {
        self.head_pos.len()
    }

    /// Labels sentence `sent` using the rules whose bit is set.
    pub fn label(&self, sent: usize, active: &[bool]) -> ChunkLabeling {
        let (n, matches) = &self.sentences[sent];
        let mut claimed = vec![false; *n];
        let mut spans = Vec::new();
        for m in matches {
            if !active[m.rule as usize] {
                continue;
            }
            let (start, end) = (m.start as usize, (m.start + m.len) as usize);
            if claimed[start..end].iter().any(|&c| c) {
                continue;
            }
            claimed[start..end].iter_mut().for_each(|c| *c = true);
            spans.push(LabeledSpan {
                start: start + 1,
                end,
                head_pos: self.head_pos[m.rule as usize].clone(),
            });
        }
        ChunkLabeling::from_spans(*n, spans).expect("claimed spans never overlap")
    }

    pub fn label_all(&self, active: &[bool]) -> Vec<ChunkLabeling> {
        assert_eq!(active.len(), self.rule_count(), "mask length mismatch");
        (0..self.len()).map(|i| self.label(i, active)).collect()
    }
}

fn sentence_matches(
    sentence: &Sentence,
    by_pattern: &HashMap<&[String], usize>,
    lengths: &[usize],
    view: Option<&TreeView>,
) -> Vec<RuleMatch> {
    let tags: Vec<String> = sentence.tokens.iter().map(|t| t.upos.clone()).collect();
    let mut matches = Vec::new();
    for &len in lengths {
        if len > tags.len() {
            continue;
        }
        for start in 0..=tags.len() - len {
            let Some(&rule) = by_pattern.get(&tags[start..start + len]) else {
                continue;
            };
            if let Some(view) = view {
                if view.base_span_head(start + 1, start + len).is_none() {
                    continue;
                }
            }
            matches.push(RuleMatch {
                rule: rule as u32,
                start: start as u32,
                len: len as u32,
            });
        }
    }
    matches.sort_by_key(|m| (m.rule, m.start));
    matches
}

/// Applies a ruleset to one sentence, longest (highest-ranked) rule first
/// and left to right within a rule; claimed tokens are never relabeled.
pub fn apply_ruleset(sentence: &Sentence, rules: &RuleSet, mode: MatchMode) -> Result<ChunkLabeling> {
    let tb = Treebank::new(vec![sentence.clone()]);
    let index = MatchIndex::build(&tb, rules, mode)?;
    Ok(index.label(0, &vec![true; rules.len()]))
}

pub fn annotate_treebank(
    treebank: &Treebank,
    rules: &RuleSet,
    mode: MatchMode,
) -> Result<Vec<ChunkLabeling>> {
    let index = MatchIndex::build(treebank, rules, mode)?;
    Ok(index.label_all(&vec![true; rules.len()]))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompressionStats {
    pub c_tokens: usize,
    pub c_chunks: usize,
    pub c_out: usize,
    pub sentences: usize,
    /// Tokens per unit, where a unit is a chunk or an out-of-chunk token.
    pub r: f64,
    pub chunks_per_sentence: f64,
}

impl CompressionStats {
    fn from_counts(c_tokens: usize, c_chunks: usize, c_out: usize, sentences: usize) -> Self {
        let units = c_chunks + c_out;
        CompressionStats {
            c_tokens,
            c_chunks,
            c_out,
            sentences,
            r: if units == 0 {
                1.0
            } else {
                c_tokens as f64 / units as f64
            },
            chunks_per_sentence: if sentences == 0 {
                0.0
            } else {
                c_chunks as f64 / sentences as f64
            },
        }
    }

    /// Counts B tags as chunks and O tags as outside tokens.
    pub fn from_labels(labelings: &[ChunkLabeling]) -> Self {
        let (mut tokens, mut chunks, mut out) = (0, 0, 0);
        for l in labelings {
            tokens += l.len();
            for tag in l.labels() {
                match tag {
                    IobTag::Begin(_) => chunks += 1,
                    IobTag::Outside => out += 1,
                    IobTag::Inside(_) => {}
                }
            }
        }
        Self::from_counts(tokens, chunks, out, labelings.len())
    }

    /// Counts spans as chunks and the tokens they leave uncovered as outside.
    pub fn from_spans(labelings: &[ChunkLabeling]) -> Self {
        let (mut tokens, mut chunks, mut covered) = (0, 0, 0);
        for l in labelings {
            tokens += l.len();
            chunks += l.spans().len();
            covered += l.spans().iter().map(LabeledSpan::len).sum::<usize>();
        }
        Self::from_counts(tokens, chunks, tokens - covered, labelings.len())
    }
}

/// Compression rate of a labeled treebank: tokens / (chunks + outside tokens).
pub fn compression_rate(treebank: &Treebank, labelings: &[ChunkLabeling]) -> Result<CompressionStats> {
    check_alignment(treebank, labelings)?;
    Ok(CompressionStats::from_labels(labelings))
}

/// A subset's compression rate as a proportion of the full ruleset's:
/// `(r_subset - 1) / (r_all - 1)`.
pub fn compression_proportion(r_subset: f64, r_all: f64) -> Result<f64> {
    if !(r_all > 1.0) {
        return Err(Error::DegenerateRuleset(r_all));
    }
    Ok((r_subset - 1.0) / (r_all - 1.0))
}

fn check_alignment(treebank: &Treebank, labelings: &[ChunkLabeling]) -> Result<()> {
    if treebank.len() != labelings.len() {
        return Err(Error::LengthMismatch {
            expected: treebank.len(),
            found: labelings.len(),
        });
    }
    for (s, l) in treebank.sentences.iter().zip(labelings) {
        if s.len() != l.len() {
            return Err(Error::LengthMismatch {
                expected: s.len(),
                found: l.len(),
            });
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChunkStats {
    pub compression: CompressionStats,
    pub rules_matched: usize,
    /// Match count per POS pattern, most frequent first.
    pub per_rule: Vec<(String, usize)>,
}

impl ChunkStats {
    pub fn to_text(&self) -> String {
        let c = &self.compression;
        format!(
            "sentences={}\ntokens={}\nchunks={}\noutside={}\nr={:.4}\nchunks_per_sentence={:.2}\nrules_matched={}\n",
            c.sentences, c.c_tokens, c.c_chunks, c.c_out, c.r, c.chunks_per_sentence, self.rules_matched
        )
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("pattern\tmatches\n");
        for (pattern, count) in &self.per_rule {
            out.push_str(&format!("{}\t{}\n", pattern, count));
        }
        out
    }
}

pub fn chunk_stats(treebank: &Treebank, labelings: &[ChunkLabeling]) -> Result<ChunkStats> {
    check_alignment(treebank, labelings)?;
    let mut per_rule: BTreeMap<String, usize> = BTreeMap::new();
    for (s, l) in treebank.sentences.iter().zip(labelings) {
        for span in l.spans() {
            let pattern = s.tokens[span.start - 1..span.end]
                .iter()
                .map(|t| t.upos.as_str())
                .collect::<Vec<_>>()
                .join(" ");
            *per_rule.entry(pattern).or_default() += 1;
        }
    }
    let mut per_rule: Vec<(String, usize)> = per_rule.into_iter().collect();
    per_rule.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(ChunkStats {
        compression: CompressionStats::from_labels(labelings),
        rules_matched: per_rule.len(),
        per_rule,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ruleset::ChunkRule;
    use crate::treebank::Token;
    use approx::assert_relative_eq;

    fn rule(p: &str, head: usize, freq: usize) -> ChunkRule {
        ChunkRule::new(&p.split(' ').collect::<Vec<_>>(), head, freq).unwrap()
    }

    fn flat(tags: &[&str]) -> Sentence {
        // everything attached to the last token; only used in pattern mode
        let n = tags.len();
        Sentence::new(
            tags.iter()
                .enumerate()
                .map(|(i, t)| Token::new(i + 1, "w", t, if i + 1 == n { 0 } else { n }, "dep"))
                .collect(),
        )
    }

    fn tags(l: &ChunkLabeling) -> Vec<String> {
        l.tag_strings()
    }

    #[test]
    fn det_adj_noun_gets_noun_suffix() {
        let rs = RuleSet::new(vec![rule("DET ADJ NOUN", 2, 5)]).unwrap();
        let s = flat(&["DET", "ADJ", "NOUN"]);
        for mode in [MatchMode::TreeValidated, MatchMode::PatternOnly] {
            let l = apply_ruleset(&s, &rs, mode).unwrap();
            assert_eq!(tags(&l), ["B-NOUN", "I-NOUN", "I-NOUN"]);
        }
    }

    #[test]
    fn empty_ruleset_is_all_outside() {
        let s = flat(&["DET", "NOUN", "VERB"]);
        let l = apply_ruleset(&s, &RuleSet::empty(), MatchMode::PatternOnly).unwrap();
        assert_eq!(tags(&l), ["O", "O", "O"]);
        assert!(l.spans().is_empty());
    }

    #[test]
    fn longest_rule_claims_first() {
        // A B C A B with rules {A B C (head C), A B (head B)}
        let rs = RuleSet::new(vec![rule("A B", 1, 100), rule("A B C", 2, 1)]).unwrap();
        let s = flat(&["A", "B", "C", "A", "B"]);
        let l = apply_ruleset(&s, &rs, MatchMode::PatternOnly).unwrap();
        assert_eq!(tags(&l), ["B-C", "I-C", "I-C", "B-B", "I-B"]);
    }

    #[test]
    fn equal_length_rules_go_by_frequency() {
        // A B C: "A B" (freq 9) and "B C" (freq 3) overlap on B
        let rs = RuleSet::new(vec![rule("B C", 1, 3), rule("A B", 1, 9)]).unwrap();
        let l = apply_ruleset(&flat(&["A", "B", "C"]), &rs, MatchMode::PatternOnly).unwrap();
        assert_eq!(tags(&l), ["B-B", "I-B", "O"]);
    }

    #[test]
    fn same_rule_scans_left_to_right() {
        let rs = RuleSet::new(vec![rule("N N", 1, 3)]).unwrap();
        let l = apply_ruleset(&flat(&["N", "N", "N"]), &rs, MatchMode::PatternOnly).unwrap();
        assert_eq!(tags(&l), ["B-N", "I-N", "O"]);
    }

    #[test]
    fn unknown_tags_never_match() {
        let rs = RuleSet::new(vec![rule("XYZ NOUN", 1, 3)]).unwrap();
        let l = apply_ruleset(&flat(&["DET", "NOUN"]), &rs, MatchMode::PatternOnly).unwrap();
        assert_eq!(tags(&l), ["O", "O"]);
    }

    #[test]
    fn tree_mode_rejects_non_subtrees() {
        // DET NOUN where DET hangs off the verb, not the noun
        let s = Sentence::new(vec![
            Token::new(1, "the", "DET", 3, "det"),
            Token::new(2, "dog", "NOUN", 3, "nsubj"),
            Token::new(3, "ran", "VERB", 0, "root"),
        ]);
        let rs = RuleSet::new(vec![rule("DET NOUN", 1, 3)]).unwrap();
        let tree = apply_ruleset(&s, &rs, MatchMode::TreeValidated).unwrap();
        assert_eq!(tags(&tree), ["O", "O", "O"]);
        let pattern = apply_ruleset(&s, &rs, MatchMode::PatternOnly).unwrap();
        assert_eq!(tags(&pattern), ["B-NOUN", "I-NOUN", "O"]);
    }

    #[test]
    fn ill_formed_sequences_rejected() {
        assert!(ChunkLabeling::parse_tags(&["O", "I-NOUN"]).is_err());
        assert!(ChunkLabeling::parse_tags(&["B-VERB", "I-NOUN"]).is_err());
        assert!(ChunkLabeling::parse_tags(&["I-NOUN"]).is_err());
        let l = ChunkLabeling::parse_tags(&["B-NOUN", "I-NOUN", "B-NOUN", "O"]).unwrap();
        assert_eq!(l.spans().len(), 2);
    }

    fn labeling(tags: &[&str]) -> ChunkLabeling {
        ChunkLabeling::parse_tags(tags).unwrap()
    }

    #[test]
    fn compression_hand_case() {
        // 10 tokens, 2 chunks covering 6 tokens, 4 outside -> 10 / 6
        let l = labeling(&[
            "B-NOUN", "I-NOUN", "I-NOUN", "O", "O", "B-VERB", "I-VERB", "I-VERB", "O", "O",
        ]);
        let stats = CompressionStats::from_labels(&[l.clone()]);
        assert_eq!((stats.c_tokens, stats.c_chunks, stats.c_out), (10, 2, 4));
        assert_relative_eq!(stats.r, 10.0 / 6.0, epsilon = 1e-12);
        assert_eq!(stats, CompressionStats::from_spans(&[l]));
    }

    #[test]
    fn no_chunks_means_unit_rate() {
        let stats = CompressionStats::from_labels(&[ChunkLabeling::outside(7)]);
        assert_eq!(stats.r, 1.0);
    }

    #[test]
    fn whole_sentence_chunks() {
        let ls = vec![
            labeling(&["B-X", "I-X", "I-X"]),
            labeling(&["B-Y", "I-Y"]),
        ];
        let stats = CompressionStats::from_labels(&ls);
        assert_relative_eq!(stats.r, 5.0 / 2.0);
    }

    #[test]
    fn proportion_cases() {
        assert_eq!(compression_proportion(1.8, 1.8).unwrap(), 1.0);
        assert_eq!(compression_proportion(1.0, 1.8).unwrap(), 0.0);
        assert_relative_eq!(compression_proportion(1.5, 2.0).unwrap(), 0.5);
        assert!(matches!(
            compression_proportion(1.0, 1.0),
            Err(Error::DegenerateRuleset(_))
        ));
    }

    #[test]
    fn stats_report() {
        let s = flat(&["DET", "NOUN", "VERB", "DET", "NOUN"]);
        let tb = Treebank::new(vec![s]);
        let l = labeling(&["B-NOUN", "I-NOUN", "O", "B-NOUN", "I-NOUN"]);
        let stats = chunk_stats(&tb, &[l]).unwrap();
        assert_eq!(stats.compression.chunks_per_sentence, 2.0);
        assert_eq!(stats.rules_matched, 1);
        assert_eq!(stats.per_rule, vec![("DET NOUN".to_owned(), 2)]);
        assert!(stats.to_text().contains("chunks_per_sentence=2.00"));

        let zero = chunk_stats(&tb, &[ChunkLabeling::outside(5)]).unwrap();
        assert_eq!(zero.compression.chunks_per_sentence, 0.0);
        assert!(chunk_stats(&tb, &[]).is_err());
    }

    #[test]
    fn chunk_layer_from_misc() {
        let mut s = Sentence::new(vec![
            Token::new(1, "the", "DET", 2, "det"),
            Token::new(2, "dog", "NOUN", 3, "nsubj"),
            Token::new(3, "ran", "VERB", 0, "root"),
        ]);
        for (t, tag) in s.tokens.iter_mut().zip(["B-NOUN", "I-NOUN", "O"]) {
            t.set_misc(CHUNK_MISC_KEY, tag);
        }
        let tb = Treebank::new(vec![s.clone()]);
        let l = read_chunk_layer(&tb).unwrap();
        assert_eq!(l[0].tag_strings(), ["B-NOUN", "I-NOUN", "O"]);

        s.tokens[0].set_misc(CHUNK_MISC_KEY, "I-NOUN");
        assert!(read_chunk_layer(&Treebank::new(vec![s.clone()])).is_err());
        s.tokens[0].misc.clear();
        assert!(read_chunk_layer(&Treebank::new(vec![s])).is_err());
    }
}
