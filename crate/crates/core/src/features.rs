//! Token feature templates for the perceptron labelers.

use crate::treebank::Sentence;

/// Per-token input columns. An empty column is absent.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SeqInput {
    pub forms: Vec<String>,
    pub pos: Vec<String>,
    pub feats: Vec<String>,
    pub chunks: Vec<String>,
}

impl SeqInput {
    /// Forms, gold UPOS and gold feature bundles of a sentence.
    pub fn from_sentence(sentence: &Sentence) -> Self {
        SeqInput {
            forms: sentence.tokens.iter().map(|t| t.form.clone()).collect(),
            pos: sentence.tokens.iter().map(|t| t.upos.clone()).collect(),
            feats: sentence.tokens.iter().map(|t| t.feats.to_string()).collect(),
            chunks: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }
}

fn at(col: &[String], i: isize) -> &str {
    if i < 0 {
        "<s>"
    } else {
        col.get(i as usize).map(String::as_str).unwrap_or("</s>")
    }
}

/// Collapsed character classes: `Dog-2` becomes `Xx-d`.
pub fn word_shape(word: &str) -> String {
    let mut out = String::new();
    let mut last = None;
    for c in word.chars() {
        let class = if c.is_uppercase() {
            'X'
        } else if c.is_lowercase() {
            'x'
        } else if c.is_ascii_digit() {
            'd'
        } else {
            c
        };
        if last != Some(class) {
            out.push(class);
            last = Some(class);
        }
    }
    out
}

fn affixes(word: &str, out: &mut Vec<String>) {
    let chars: Vec<char> = word.chars().collect();
    for n in 1..=3.min(chars.len()) {
        out.push(format!("pre{}={}", n, chars[..n].iter().collect::<String>()));
        out.push(format!(
            "suf{}={}",
            n,
            chars[chars.len() - n..].iter().collect::<String>()
        ));
    }
}

fn lexical(input: &SeqInput, i: usize, out: &mut Vec<String>) {
    let w = &input.forms[i];
    let lw = w.to_lowercase();
    out.push("bias".to_owned());
    out.push(format!("w={}", w));
    out.push(format!("lw={}", lw));
    out.push(format!("shape={}", word_shape(w)));
    affixes(&lw, out);
    let i = i as isize;
    out.push(format!("lw-1={}", at(&input.forms, i - 1).to_lowercase()));
    out.push(format!("lw+1={}", at(&input.forms, i + 1).to_lowercase()));
}

fn pos_window(pos: &[String], i: usize, out: &mut Vec<String>) {
    let i = i as isize;
    let p = |d: isize| at(pos, i + d);
    for d in -2..=2 {
        out.push(format!("p[{}]={}", d, p(d)));
    }
    for d in -2..=1 {
        out.push(format!("pp[{}]={}|{}", d, p(d), p(d + 1)));
    }
    for d in -2..=0 {
        out.push(format!("ppp[{}]={}|{}|{}", d, p(d), p(d + 1), p(d + 2)));
    }
}

/// Word form, lowercase form, shape, affixes and a +-2 POS window with
/// bigrams and trigrams.
pub fn chunker_features(input: &SeqInput, i: usize, out: &mut Vec<String>) {
    lexical(input, i, out);
    pos_window(&input.pos, i, out);
    let lw = input.forms[i].to_lowercase();
    out.push(format!("lw|p={}|{}", lw, input.pos[i]));
}

/// Lexical features only; history features are added by the decoder.
pub fn tagger_features(input: &SeqInput, i: usize, out: &mut Vec<String>) {
    lexical(input, i, out);
    let ii = i as isize;
    out.push(format!("lw-2={}", at(&input.forms, ii - 2).to_lowercase()));
    out.push(format!("lw+2={}", at(&input.forms, ii + 2).to_lowercase()));
    out.push(format!("suf3+1={}", suffix(at(&input.forms, ii + 1), 3)));
}

fn suffix(word: &str, n: usize) -> String {
    let chars: Vec<char> = word.to_lowercase().chars().collect();
    chars[chars.len().saturating_sub(n)..].iter().collect()
}

/// Features for dependency labels: lexical context plus whichever of the
/// POS, feats and chunk columns are present.
pub fn deplabel_features(input: &SeqInput, i: usize, out: &mut Vec<String>) {
    lexical(input, i, out);
    let ii = i as isize;
    out.push(format!("lw-2={}", at(&input.forms, ii - 2).to_lowercase()));
    out.push(format!("lw+2={}", at(&input.forms, ii + 2).to_lowercase()));
    if !input.pos.is_empty() {
        pos_window(&input.pos, i, out);
        out.push(format!("lw|p={}|{}", input.forms[i].to_lowercase(), input.pos[i]));
        // Distance to the nearest verb or noun on each side, by POS.
        for target in ["VERB", "NOUN", "AUX"] {
            let left = (0..i).rev().position(|j| input.pos[j] == target);
            let right = (i + 1..input.len()).position(|j| input.pos[j] == target);
            out.push(format!("near{}={}|{}", target, bucket(left), bucket(right)));
        }
    }
    if !input.feats.is_empty() {
        for d in -1..=1 {
            out.push(format!("f[{}]={}", d, at(&input.feats, ii + d)));
        }
        out.push(format!("f|p={}|{}", input.feats[i], at(&input.pos, ii)));
    }
    if !input.chunks.is_empty() {
        for d in -2..=2 {
            out.push(format!("c[{}]={}", d, at(&input.chunks, ii + d)));
        }
        out.push(format!("cc={}|{}", at(&input.chunks, ii), at(&input.chunks, ii + 1)));
    }
}

fn bucket(d: Option<usize>) -> &'static str {
    match d {
        None => "-",
        Some(0) => "1",
        Some(1) => "2",
        Some(2..=3) => "3",
        Some(_) => "4+",
    }
}
