//! CoNLL-U reading, tree validation and writing.
//!
//! Only syntactic words take part in rule, chunk and encoding logic.
//! Multiword-token ranges (`3-4`) and empty nodes (`5.1`) are kept as raw
//! lines so that a parsed treebank writes back unchanged.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const PUNCT: &str = "PUNCT";

const EMPTY: &str = "_";

/// Ordered `key=value` morphological features.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Features(Vec<(String, String)>);

impl Features {
    pub fn new() -> Self {
        Features(Vec::new())
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.iter().find(|(k, _)| *k == key).map(|(_, v)| v)
    }

    pub fn insert(&mut self, key: impl Into<String>, value: impl Into<String>) {
        let key = key.into();
        let value = value.into();
        match self.0.iter_mut().find(|(k, _)| *k == key) {
            Some(slot) => slot.1 = value,
            None => self.0.push((key, value)),
        }
    }
}

impl FromStr for Features {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s == EMPTY {
            return Ok(Features::new());
        }
        let mut feats = Vec::new();
        for item in s.split('|') {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| format!("malformed feature '{}'", item))?;
            if k.is_empty() {
                return Err(format!("malformed feature '{}'", item));
            }
            feats.push((k.to_owned(), v.to_owned()));
        }
        Ok(Features(feats))
    }
}

impl fmt::Display for Features {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str(EMPTY);
        }
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            write!(f, "{}={}", k, v)?;
        }
        Ok(())
    }
}

/// A syntactic word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub id: usize,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    pub xpos: String,
    pub feats: Features,
    /// Governor index, 0 for the root.
    pub head: usize,
    pub deprel: String,
    pub deps: String,
    pub misc: Vec<String>,
}

impl Token {
    /// A token with only the columns the toolkit relies on filled in.
    pub fn new(id: usize, form: &str, upos: &str, head: usize, deprel: &str) -> Self {
        Token {
            id,
            form: form.to_owned(),
            lemma: EMPTY.to_owned(),
            upos: upos.to_owned(),
            xpos: EMPTY.to_owned(),
            feats: Features::new(),
            head,
            deprel: deprel.to_owned(),
            deps: EMPTY.to_owned(),
            misc: Vec::new(),
        }
    }

    pub fn misc_value(&self, key: &str) -> Option<&str> {
        self.misc
            .iter()
            .filter_map(|item| item.split_once('='))
            .find(|(k, _)| *k == key)
            .map(|(_, v)| v)
    }

    pub fn set_misc(&mut self, key: &str, value: &str) {
        let item = format!("{}={}", key, value);
        match self
            .misc
            .iter_mut()
            .find(|it| it.split_once('=').map(|(k, _)| k) == Some(key))
        {
            Some(slot) => *slot = item,
            None => self.misc.push(item),
        }
    }

    fn misc_column(&self) -> String {
        if self.misc.is_empty() {
            EMPTY.to_owned()
        } else {
            self.misc.join("|")
        }
    }
}

/// A raw multiword-token or empty-node line, positioned after `after`
/// syntactic words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtraLine {
    pub after: usize,
    pub line: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Sentence {
    pub comments: Vec<String>,
    pub tokens: Vec<Token>,
    pub extras: Vec<ExtraLine>,
}

impl Sentence {
    pub fn new(tokens: Vec<Token>) -> Self {
        Sentence {
            tokens,
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn sent_id(&self) -> Option<&str> {
        self.comment_value("sent_id")
    }

    pub fn text(&self) -> Option<&str> {
        self.comment_value("text")
    }

    fn comment_value(&self, key: &str) -> Option<&str> {
        self.comments.iter().find_map(|c| {
            let (k, v) = c.trim_start_matches('#').split_once('=')?;
            (k.trim() == key).then(|| v.trim())
        })
    }

    pub fn upos(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.upos.as_str()).collect()
    }

    pub fn heads(&self) -> Vec<usize> {
        self.tokens.iter().map(|t| t.head).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Dev,
    Test,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Treebank {
    pub sentences: Vec<Sentence>,
    pub split: Option<Split>,
}

impl Treebank {
    pub fn new(sentences: Vec<Sentence>) -> Self {
        Treebank {
            sentences,
            split: None,
        }
    }

    pub fn with_split(mut self, split: Split) -> Self {
        self.split = Some(split);
        self
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Sentence::len).sum()
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        parse_conllu(&text)
    }
}

/// Parses CoNLL-U text. Errors carry 1-based line numbers.
pub fn parse_conllu(text: &str) -> Result<Treebank> {
    let mut sentences = Vec::new();
    let mut current = Sentence::default();
    let mut open = false;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            if open {
                sentences.push(std::mem::take(&mut current));
                open = false;
            }
            continue;
        }
        open = true;
        if line.starts_with('#') {
            current.comments.push(line.to_owned());
            continue;
        }

        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(Error::parse(
                lineno,
                format!("expected 10 tab-separated columns, found {}", cols.len()),
            ));
        }
        let id = cols[0];
        if id.contains('-') || id.contains('.') {
            current.extras.push(ExtraLine {
                after: current.tokens.len(),
                line: line.to_owned(),
            });
            continue;
        }
        let id: usize = id
            .parse()
            .map_err(|_| Error::parse(lineno, format!("non-integer id '{}'", cols[0])))?;
        let head: usize = cols[6]
            .parse()
            .map_err(|_| Error::parse(lineno, format!("non-integer head '{}'", cols[6])))?;
        let feats = cols[5]
            .parse()
            .map_err(|e: String| Error::parse(lineno, e))?;
        let misc = if cols[9] == EMPTY {
            Vec::new()
        } else {
            cols[9].split('|').map(str::to_owned).collect()
        };
        current.tokens.push(Token {
            id,
            form: cols[1].to_owned(),
            lemma: cols[2].to_owned(),
            upos: cols[3].to_owned(),
            xpos: cols[4].to_owned(),
            feats,
            head,
            deprel: cols[7].to_owned(),
            deps: cols[8].to_owned(),
            misc,
        });
    }
    if open {
        sentences.push(current);
    }
    Ok(Treebank::new(sentences))
}

/// A per-token annotation layer written into MISC as `key=value`.
#[derive(Clone, Copy, Debug)]
pub struct MiscLayer<'a> {
    pub key: &'a str,
    /// One value vector per sentence, one value per syntactic word.
    pub values: &'a [Vec<String>],
}

pub fn write_conllu(treebank: &Treebank) -> String {
    write_conllu_annotated(treebank, &[])
}

pub fn write_conllu_annotated(treebank: &Treebank, layers: &[MiscLayer<'_>]) -> String {
    let mut out = String::new();
    for (sidx, sentence) in treebank.sentences.iter().enumerate() {
        for comment in &sentence.comments {
            out.push_str(comment);
            out.push('\n');
        }
        let mut extras = sentence.extras.iter().peekable();
        for (tidx, token) in sentence.tokens.iter().enumerate() {
            while let Some(extra) = extras.next_if(|e| e.after <= tidx) {
                out.push_str(&extra.line);
                out.push('\n');
            }
            let misc = if layers.is_empty() {
                token.misc_column()
            } else {
                let mut token = token.clone();
                for layer in layers {
                    if let Some(value) = layer.values.get(sidx).and_then(|v| v.get(tidx)) {
                        token.set_misc(layer.key, value);
                    }
                }
                token.misc_column()
            };
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                token.id,
                token.form,
                token.lemma,
                token.upos,
                token.xpos,
                token.feats,
                token.head,
                token.deprel,
                token.deps,
                misc
            ));
        }
        for extra in extras {
            out.push_str(&extra.line);
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    Empty,
    NonContiguousId { position: usize, id: usize },
    HeadOutOfRange { token: usize, head: usize },
    SelfHead { token: usize },
    NoRoot,
    MultipleRoots(Vec<usize>),
    Cycle(Vec<usize>),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |ids: &[usize]| {
            ids.iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        match self {
            Violation::Empty => write!(f, "empty sentence"),
            Violation::NonContiguousId { position, id } => {
                write!(f, "token at position {} has id {}", position, id)
            }
            Violation::HeadOutOfRange { token, head } => {
                write!(f, "token {} has head {} out of range", token, head)
            }
            Violation::SelfHead { token } => write!(f, "token {} is its own head", token),
            Violation::NoRoot => write!(f, "no root"),
            Violation::MultipleRoots(ids) => write!(f, "multiple roots: {}", join(ids)),
            Violation::Cycle(ids) => write!(f, "cycle: {}", join(ids)),
        }
    }
}

/// Checks ids, head ranges, single root and acyclicity. An empty result
/// means the sentence is a well-formed tree.
pub fn validate_tree(sentence: &Sentence) -> Vec<Violation> {
    let n = sentence.len();
    if n == 0 {
        return vec![Violation::Empty];
    }
    let mut violations = Vec::new();
    for (pos, token) in sentence.tokens.iter().enumerate() {
        if token.id != pos + 1 {
            violations.push(Violation::NonContiguousId {
                position: pos + 1,
                id: token.id,
            });
        }
    }
    let heads = sentence.heads();
    let mut heads_ok = true;
    for (i, &h) in heads.iter().enumerate() {
        if h > n {
            violations.push(Violation::HeadOutOfRange { token: i + 1, head: h });
            heads_ok = false;
        } else if h == i + 1 {
            violations.push(Violation::SelfHead { token: i + 1 });
            heads_ok = false;
        }
    }

    let roots: Vec<usize> = (1..=n).filter(|&i| heads[i - 1] == 0).collect();
    match roots.len() {
        0 => violations.push(Violation::NoRoot),
        1 => {}
        _ => violations.push(Violation::MultipleRoots(roots)),
    }

    if heads_ok {
        violations.extend(find_cycles(&heads).into_iter().map(Violation::Cycle));
    }
    violations
}

/// Cycles in a 1-based head vector (0 = root), each listed in ascending
/// order. Heads must be in range and not self-referential.
pub(crate) fn find_cycles(heads: &[usize]) -> Vec<Vec<usize>> {
    // 0 unvisited, 1 on current path, 2 done
    let n = heads.len();
    let mut state = vec![0u8; n + 1];
    let mut cycles = Vec::new();
    for start in 1..=n {
        if state[start] != 0 {
            continue;
        }
        let mut path = Vec::new();
        let mut cur = start;
        while cur != 0 && state[cur] == 0 {
            state[cur] = 1;
            path.push(cur);
            cur = heads[cur - 1];
        }
        if cur != 0 && state[cur] == 1 {
            let pos = path.iter().position(|&t| t == cur).unwrap();
            let mut cycle = path[pos..].to_vec();
            cycle.sort_unstable();
            cycles.push(cycle);
        }
        for t in path {
            state[t] = 2;
        }
    }
    cycles
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::FIG1;

    fn chain(heads: &[usize]) -> Sentence {
        Sentence::new(
            heads
                .iter()
                .enumerate()
                .map(|(i, &h)| Token::new(i + 1, "w", "X", h, "dep"))
                .collect(),
        )
    }

    #[test]
    fn parses_three_token_sentence() {
        let text = "1\ta\ta\tDET\t_\t_\t2\tdet\t_\t_\n2\tb\tb\tNOUN\t_\t_\t3\tnsubj\t_\t_\n3\tc\tc\tVERB\t_\t_\t0\troot\t_\t_\n";
        let tb = parse_conllu(text).unwrap();
        assert_eq!(tb.len(), 1);
        assert_eq!(tb.sentences[0].len(), 3);
        assert_eq!(tb.sentences[0].tokens[1].deprel, "nsubj");
    }

    #[test]
    fn figure_sentence_upos() {
        let tb = parse_conllu(FIG1).unwrap();
        let s = &tb.sentences[0];
        assert_eq!(
            s.upos(),
            ["PRON", "NOUN", "AUX", "ADV", "NUM", "NOUN", "ADJ", "PUNCT"]
        );
        assert_eq!(s.sent_id(), Some("fig1"));
        assert_eq!(s.text(), Some("Their son was only ten months old."));
        assert!(validate_tree(s).is_empty());
    }

    #[test]
    fn wrong_column_count_names_line() {
        let text = "1\ta\ta\tDET\t_\t_\t2\tdet\t_\t_\n2\tb\tb\tNOUN\t_\t_\t0\troot\t_\n";
        match parse_conllu(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {:?}", other),
        }
    }

    #[test]
    fn non_integer_head_is_error() {
        let text = "1\ta\ta\tDET\t_\t_\tx\tdet\t_\t_\n";
        assert!(matches!(parse_conllu(text), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn multiword_and_empty_nodes_round_trip() {
        let text = "# c\n1-2\tdon't\t_\t_\t_\t_\t_\t_\t_\t_\n1\tdo\tdo\tAUX\t_\t_\t3\taux\t_\t_\n2\tn't\tnot\tPART\t_\t_\t3\tadvmod\t_\t_\n3\tgo\tgo\tVERB\t_\t_\t0\troot\t_\t_\n3.1\tgo\tgo\tVERB\t_\t_\t_\t_\t3:conj\t_\n\n";
        let tb = parse_conllu(text).unwrap();
        let s = &tb.sentences[0];
        assert_eq!(s.len(), 3);
        assert_eq!(s.extras.len(), 2);
        assert_eq!(write_conllu(&tb), text);
    }

    #[test]
    fn figure_round_trips_exactly() {
        let tb = parse_conllu(FIG1).unwrap();
        assert_eq!(write_conllu(&tb), FIG1);
    }

    #[test]
    fn chunk_layer_in_misc() {
        let tb = parse_conllu(FIG1).unwrap();
        let mut labels = vec!["O".to_owned(); 8];
        labels[0] = "B-NOUN".into();
        labels[1] = "I-NOUN".into();
        let values = vec![labels];
        let out = write_conllu_annotated(
            &tb,
            &[MiscLayer {
                key: "Chunk",
                values: &values,
            }],
        );
        let back = parse_conllu(&out).unwrap();
        let toks = &back.sentences[0].tokens;
        assert_eq!(toks[0].misc_value("Chunk"), Some("B-NOUN"));
        assert_eq!(toks[6].misc_value("SpaceAfter"), Some("No"));
        assert_eq!(toks[6].misc_value("Chunk"), Some("O"));
        assert!(out.contains("Chunk=B-NOUN"));
    }

    #[test]
    fn empty_treebank_writes_nothing() {
        assert_eq!(write_conllu(&Treebank::default()), "");
        assert!(parse_conllu("").unwrap().is_empty());
    }

    #[test]
    fn validates_chain() {
        // 1 -> 2 -> 3 -> root
        assert!(validate_tree(&chain(&[2, 3, 0])).is_empty());
    }

    #[test]
    fn detects_multiple_roots() {
        let v = validate_tree(&chain(&[0, 0]));
        assert_eq!(v, vec![Violation::MultipleRoots(vec![1, 2])]);
        assert!(v[0].to_string().starts_with("multiple roots"));
    }

    #[test]
    fn detects_cycle() {
        let v = validate_tree(&chain(&[2, 1, 0]));
        assert_eq!(v, vec![Violation::Cycle(vec![1, 2])]);
        assert!(v[0].to_string().starts_with("cycle"));
    }

    #[test]
    fn detects_range_and_self_head() {
        let v = validate_tree(&chain(&[0, 2, 9]));
        assert!(v.contains(&Violation::SelfHead { token: 2 }));
        assert!(v.contains(&Violation::HeadOutOfRange { token: 3, head: 9 }));
    }
}
