//! Averaged perceptron weights shared by the chunker, the taggers and the
//! dependency labeler.
//!
//! Weights are stored sparsely per feature. Averaging is lazy: each weight
//! remembers when it last changed, so an update only touches the weights
//! involved.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

const MAGIC: &str = "depchunk-model";
const VERSION: u32 = 1;
const START: &str = "<s>";

#[derive(Clone, Copy, Debug, Default)]
struct Cell {
    weight: f64,
    total: f64,
    stamp: u64,
}

impl Cell {
    fn add(&mut self, delta: f64, now: u64) {
        self.total += (now - self.stamp) as f64 * self.weight;
        self.stamp = now;
        self.weight += delta;
    }

    fn averaged(&self, now: u64) -> f64 {
        if now == 0 {
            return self.weight;
        }
        (self.total + (now - self.stamp) as f64 * self.weight) / now as f64
    }
}

/// Interns feature strings to dense ids.
#[derive(Clone, Debug, Default)]
pub struct Interner {
    ids: HashMap<String, u32>,
    names: Vec<String>,
}

impl Interner {
    pub fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.ids.insert(name.to_owned(), id);
        self.names.push(name.to_owned());
        id
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.ids.get(name).copied()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }
}

/// Weights under training.
#[derive(Clone, Debug)]
pub struct Trainer {
    n_labels: usize,
    rows: Vec<Vec<(u32, Cell)>>,
    /// `(n_labels + 1) x n_labels`; the last row is the start state.
    transitions: Option<Vec<Cell>>,
    clock: u64,
}

impl Trainer {
    pub fn new(n_labels: usize, with_transitions: bool) -> Self {
        Trainer {
            n_labels,
            rows: Vec::new(),
            transitions: with_transitions
                .then(|| vec![Cell::default(); (n_labels + 1) * n_labels]),
            clock: 0,
        }
    }

    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    /// Advances the averaging clock by one training instance.
    pub fn tick(&mut self) {
        self.clock += 1;
    }

    pub fn score(&self, feats: &[u32], scores: &mut [f64]) {
        scores.iter_mut().for_each(|s| *s = 0.0);
        for &f in feats {
            if let Some(row) = self.rows.get(f as usize) {
                for (label, cell) in row {
                    scores[*label as usize] += cell.weight;
                }
            }
        }
    }

    pub fn update(&mut self, feats: &[u32], label: usize, delta: f64) {
        let now = self.clock;
        for &f in feats {
            let f = f as usize;
            if f >= self.rows.len() {
                self.rows.resize_with(f + 1, Vec::new);
            }
            let row = &mut self.rows[f];
            let label = label as u32;
            match row.binary_search_by_key(&label, |(l, _)| *l) {
                Ok(pos) => row[pos].1.add(delta, now),
                Err(pos) => {
                    let mut cell = Cell {
                        stamp: now,
                        ..Cell::default()
                    };
                    cell.add(delta, now);
                    row.insert(pos, cell_entry(label, cell));
                }
            }
        }
    }

    /// `prev = None` is the start state.
    pub fn transition(&self, prev: Option<usize>, label: usize) -> f64 {
        self.transitions
            .as_ref()
            .map(|t| t[self.transition_index(prev, label)].weight)
            .unwrap_or(0.0)
    }

    pub fn update_transition(&mut self, prev: Option<usize>, label: usize, delta: f64) {
        let idx = self.transition_index(prev, label);
        let now = self.clock;
        if let Some(t) = self.transitions.as_mut() {
            t[idx].add(delta, now);
        }
    }

    fn transition_index(&self, prev: Option<usize>, label: usize) -> usize {
        prev.unwrap_or(self.n_labels) * self.n_labels + label
    }

    /// Current averaged weights.
    pub fn averaged(&self) -> Weights {
        let now = self.clock;
        Weights {
            n_labels: self.n_labels,
            rows: self
                .rows
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|(l, c)| (*l, c.averaged(now)))
                        .filter(|(_, w)| *w != 0.0)
                        .collect()
                })
                .collect(),
            transitions: self
                .transitions
                .as_ref()
                .map(|t| t.iter().map(|c| c.averaged(now)).collect()),
        }
    }
}

fn cell_entry(label: u32, cell: Cell) -> (u32, Cell) {
    (label, cell)
}

/// Frozen weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Weights {
    n_labels: usize,
    rows: Vec<Vec<(u32, f64)>>,
    transitions: Option<Vec<f64>>,
}

impl Weights {
    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    pub fn score(&self, feats: &[u32], scores: &mut [f64]) {
        scores.iter_mut().for_each(|s| *s = 0.0);
        for &f in feats {
            if let Some(row) = self.rows.get(f as usize) {
                for (label, w) in row {
                    scores[*label as usize] += w;
                }
            }
        }
    }

    pub fn transition(&self, prev: Option<usize>, label: usize) -> f64 {
        self.transitions
            .as_ref()
            .map(|t| t[prev.unwrap_or(self.n_labels) * self.n_labels + label])
            .unwrap_or(0.0)
    }

    pub fn has_transitions(&self) -> bool {
        self.transitions.is_some()
    }
}

/// Emission and transition scoring used by Viterbi decoding.
pub trait Scorer {
    fn n_labels(&self) -> usize;
    fn score(&self, feats: &[u32], scores: &mut [f64]);
    fn transition(&self, prev: Option<usize>, label: usize) -> f64;
}

impl Scorer for Trainer {
    fn n_labels(&self) -> usize {
        self.n_labels
    }
    fn score(&self, feats: &[u32], scores: &mut [f64]) {
        Trainer::score(self, feats, scores)
    }
    fn transition(&self, prev: Option<usize>, label: usize) -> f64 {
        Trainer::transition(self, prev, label)
    }
}

impl Scorer for Weights {
    fn n_labels(&self) -> usize {
        self.n_labels
    }
    fn score(&self, feats: &[u32], scores: &mut [f64]) {
        Weights::score(self, feats, scores)
    }
    fn transition(&self, prev: Option<usize>, label: usize) -> f64 {
        Weights::transition(self, prev, label)
    }
}

/// First-order Viterbi restricted to `allowed(prev, label)` transitions.
/// Ties resolve to the lowest label index.
pub fn viterbi<S, A>(scorer: &S, feats: &[Vec<u32>], allowed: A) -> Vec<usize>
where
    S: Scorer,
    A: Fn(Option<usize>, usize) -> bool,
{
    let n = feats.len();
    let k = scorer.n_labels();
    if n == 0 || k == 0 {
        return Vec::new();
    }
    let mut emit = vec![0.0; k];
    let mut delta = vec![f64::NEG_INFINITY; n * k];
    let mut back = vec![usize::MAX; n * k];

    scorer.score(&feats[0], &mut emit);
    for y in 0..k {
        if allowed(None, y) {
            delta[y] = emit[y] + scorer.transition(None, y);
        }
    }
    for t in 1..n {
        scorer.score(&feats[t], &mut emit);
        for y in 0..k {
            let mut best = f64::NEG_INFINITY;
            let mut arg = usize::MAX;
            for p in 0..k {
                let prev = delta[(t - 1) * k + p];
                if prev == f64::NEG_INFINITY || !allowed(Some(p), y) {
                    continue;
                }
                let s = prev + scorer.transition(Some(p), y);
                if s > best {
                    best = s;
                    arg = p;
                }
            }
            if arg != usize::MAX {
                delta[t * k + y] = best + emit[y];
                back[t * k + y] = arg;
            }
        }
    }

    let mut path = vec![0; n];
    let mut best = f64::NEG_INFINITY;
    for y in 0..k {
        if delta[(n - 1) * k + y] > best {
            best = delta[(n - 1) * k + y];
            path[n - 1] = y;
        }
    }
    for t in (1..n).rev() {
        path[t - 1] = back[t * k + path[t]];
    }
    path
}

pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// A trained model: label and feature vocabularies plus averaged weights.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearModel {
    pub kind: String,
    pub meta: Vec<(String, String)>,
    labels: Vec<String>,
    features: HashMap<String, u32>,
    weights: Weights,
}

impl LinearModel {
    pub fn new(kind: &str, labels: Vec<String>, interner: &Interner, weights: Weights) -> Self {
        LinearModel {
            kind: kind.to_owned(),
            meta: Vec::new(),
            labels,
            features: interner.ids.clone(),
            weights,
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Maps feature strings to ids, dropping unseen features.
    pub fn lookup<S: AsRef<str>>(&self, feats: &[S]) -> Vec<u32> {
        feats
            .iter()
            .filter_map(|f| self.features.get(f.as_ref()).copied())
            .collect()
    }

    pub fn feature_id(&self, feat: &str) -> Option<u32> {
        self.features.get(feat).copied()
    }

    /// Flat text form: a header, the label set, then one
    /// `(feature, label, weight)` triple per non-zero weight.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{}\t{}\t{}", MAGIC, VERSION, self.kind).unwrap();
        for (k, v) in &self.meta {
            writeln!(out, "meta\t{}\t{}", k, v).unwrap();
        }
        writeln!(out, "labels\t{}", self.labels.join("\t")).unwrap();
        if let Some(t) = &self.weights.transitions {
            let k = self.labels.len();
            for (i, &w) in t.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let prev = if i / k == k {
                    START
                } else {
                    &self.labels[i / k]
                };
                writeln!(out, "T\t{}\t{}\t{}", prev, self.labels[i % k], w).unwrap();
            }
        }
        let mut names: Vec<(&String, &u32)> = self.features.iter().collect();
        names.sort();
        for (name, &id) in names {
            if let Some(row) = self.weights.rows.get(id as usize) {
                for (l, w) in row {
                    writeln!(out, "F\t{}\t{}\t{}", name, self.labels[*l as usize], w).unwrap();
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::Model("empty model file".into()))?;
        let head: Vec<&str> = header.split('\t').collect();
        if head.len() != 3 || head[0] != MAGIC {
            return Err(Error::parse(1, "not a model file"));
        }
        if head[1] != VERSION.to_string() {
            return Err(Error::parse(1, format!("unsupported model version {}", head[1])));
        }
        let kind = head[2].to_owned();
        let mut meta = Vec::new();
        let mut labels: Option<Vec<String>> = None;
        let mut interner = Interner::default();
        let mut rows: Vec<Vec<(u32, f64)>> = Vec::new();
        let mut transitions: Option<Vec<f64>> = None;

        for (idx, line) in lines {
            let lineno = idx + 1;
            let cols: Vec<&str> = line.split('\t').collect();
            let need = |n: usize| {
                if cols.len() == n {
                    Ok(())
                } else {
                    Err(Error::parse(lineno, format!("expected {} columns", n)))
                }
            };
            match cols[0] {
                "meta" => {
                    need(3)?;
                    meta.push((cols[1].to_owned(), cols[2].to_owned()));
                }
                "labels" => labels = Some(cols[1..].iter().map(|s| s.to_string()).collect()),
                "T" | "F" => {
                    need(4)?;
                    let labels = labels
                        .as_ref()
                        .ok_or_else(|| Error::parse(lineno, "weights before label set"))?;
                    let label = labels
                        .iter()
                        .position(|l| l == cols[2])
                        .ok_or_else(|| Error::parse(lineno, format!("unknown label '{}'", cols[2])))?;
                    let w: f64 = cols[3]
                        .parse()
                        .map_err(|_| Error::parse(lineno, format!("bad weight '{}'", cols[3])))?;
                    let k = labels.len();
                    if cols[0] == "T" {
                        let prev = if cols[1] == START {
                            k
                        } else {
                            labels.iter().position(|l| l == cols[1]).ok_or_else(|| {
                                Error::parse(lineno, format!("unknown label '{}'", cols[1]))
                            })?
                        };
                        transitions.get_or_insert_with(|| vec![0.0; (k + 1) * k])
                            [prev * k + label] = w;
                    } else {
                        let id = interner.intern(cols[1]) as usize;
                        if id >= rows.len() {
                            rows.resize_with(id + 1, Vec::new);
                        }
                        rows[id].push((label as u32, w));
                    }
                }
                _ => return Err(Error::parse(lineno, format!("unknown record '{}'", cols[0]))),
            }
        }
        let labels = labels.ok_or_else(|| Error::Model("missing label set".into()))?;
        for row in &mut rows {
            row.sort_by_key(|(l, _)| *l);
        }
        let wants_transitions = meta.iter().any(|(k, v)| k == "transitions" && v == "true");
        if wants_transitions && transitions.is_none() {
            transitions = Some(vec![0.0; (labels.len() + 1) * labels.len()]);
        }
        Ok(LinearModel {
            kind,
            meta,
            weights: Weights {
                n_labels: labels.len(),
                rows,
                transitions,
            },
            labels,
            features: interner.ids,
        })
    }
}
