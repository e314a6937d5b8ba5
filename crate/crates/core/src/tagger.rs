//! Greedy left-to-right averaged-perceptron taggers.
//!
//! The same learner predicts UPOS tags, whole feature bundles and
//! dependency labels; only the feature template and the use of previous
//! predictions as features differ.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::{deplabel_features, tagger_features, SeqInput};
use crate::perceptron::{argmax, Interner, LinearModel, Trainer, Weights};
use crate::treebank::{Sentence, Treebank};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TagTask {
    Pos,
    Feats,
}

impl TagTask {
    pub fn name(self) -> &'static str {
        match self {
            TagTask::Pos => "pos",
            TagTask::Feats => "feats",
        }
    }

    fn kind(self) -> &'static str {
        match self {
            TagTask::Pos => "pos-tagger",
            TagTask::Feats => "feats-tagger",
        }
    }

    /// Gold tags of a sentence; feats are the whole bundle string.
    pub fn gold(self, sentence: &Sentence) -> Vec<String> {
        sentence
            .tokens
            .iter()
            .map(|t| match self {
                TagTask::Pos => t.upos.clone(),
                TagTask::Feats => t.feats.to_string(),
            })
            .collect()
    }

    /// Errors when the treebank carries no annotation for this task.
    pub fn check_available(self, treebank: &Treebank) -> Result<()> {
        let present = treebank.sentences.iter().any(|s| match self {
            TagTask::Pos => s.tokens.iter().any(|t| t.upos != "_"),
            TagTask::Feats => s.tokens.iter().any(|t| !t.feats.is_empty()),
        });
        if present {
            Ok(())
        } else {
            Err(Error::UnsupportedTask {
                task: self.name().into(),
                reason: format!("the treebank has no {} annotation", self.name()),
            })
        }
    }
}

impl FromStr for TagTask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pos" | "upos" => Ok(TagTask::Pos),
            "feats" => Ok(TagTask::Feats),
            _ => Err(Error::UnsupportedTask {
                task: s.into(),
                reason: "expected pos or feats".into(),
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TaggerConfig {
    pub epochs: usize,
    pub seed: u64,
    /// Keep the epoch with the best dev accuracy instead of the last one.
    pub best_epoch: bool,
}

impl Default for TaggerConfig {
    fn default() -> Self {
        TaggerConfig {
            epochs: 10,
            seed: 0,
            best_epoch: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Template {
    Tagger,
    DepLabel,
}

impl Template {
    fn apply(self, input: &SeqInput, i: usize, out: &mut Vec<String>) {
        match self {
            Template::Tagger => tagger_features(input, i, out),
            Template::DepLabel => deplabel_features(input, i, out),
        }
    }

    fn for_kind(kind: &str) -> Option<(Template, bool)> {
        match kind {
            "pos-tagger" | "feats-tagger" => Some((Template::Tagger, true)),
            "dep-labeler" => Some((Template::DepLabel, false)),
            _ => None,
        }
    }
}

/// One training or evaluation sequence.
pub(crate) struct Example {
    pub input: SeqInput,
    pub gold: Vec<String>,
}

const START: u32 = u32::MAX;

fn history_names(labels: &[String], p1: u32, p2: u32) -> [String; 2] {
    let name = |l: u32| {
        if l == START {
            "<s>"
        } else {
            labels[l as usize].as_str()
        }
    };
    [
        format!("t-1={}", name(p1)),
        format!("t-2|t-1={}|{}", name(p2), name(p1)),
    ]
}

fn static_features(template: Template, input: &SeqInput, mut id: impl FnMut(&str) -> Option<u32>) -> Vec<Vec<u32>> {
    let mut buf = Vec::new();
    (0..input.len())
        .map(|i| {
            buf.clear();
            template.apply(input, i, &mut buf);
            buf.iter().filter_map(|f| id(f)).collect()
        })
        .collect()
}

/// Greedy decoding; `history` maps the two previous predictions to extra
/// feature ids.
fn decode(
    n_labels: usize,
    statics: &[Vec<u32>],
    score: impl Fn(&[u32], &mut [f64]),
    mut history: Option<&mut dyn FnMut(u32, u32) -> Vec<u32>>,
) -> Vec<usize> {
    let mut scores = vec![0.0; n_labels];
    let mut out = Vec::with_capacity(statics.len());
    let mut feats = Vec::new();
    for (t, s) in statics.iter().enumerate() {
        feats.clear();
        feats.extend_from_slice(s);
        if let Some(h) = history.as_mut() {
            let p1 = if t >= 1 { out[t - 1] as u32 } else { START };
            let p2 = if t >= 2 { out[t - 2] as u32 } else { START };
            feats.extend(h(p1, p2));
        }
        score(&feats, &mut scores);
        out.push(argmax(&scores));
    }
    out
}

pub(crate) fn train_greedy(
    kind: &str,
    train: &[Example],
    dev: Option<&[Example]>,
    cfg: &TaggerConfig,
) -> Result<(GreedyModel, Option<f64>)> {
    let (template, history) =
        Template::for_kind(kind).ok_or_else(|| Error::Model(format!("unknown model kind '{}'", kind)))?;
    if train.iter().all(|e| e.gold.is_empty()) {
        return Err(Error::EmptyTraining);
    }
    let mut labels: Vec<String> = train.iter().flat_map(|e| e.gold.iter().cloned()).collect();
    labels.sort();
    labels.dedup();
    let label_id: HashMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let gold: Vec<Vec<usize>> = train
        .iter()
        .map(|e| e.gold.iter().map(|l| label_id[l.as_str()]).collect())
        .collect();

    let mut interner = Interner::default();
    let statics: Vec<Vec<Vec<u32>>> = train
        .iter()
        .map(|e| static_features(template, &e.input, |f| Some(interner.intern(f))))
        .collect();
    let dev_statics: Vec<Vec<Vec<u32>>> = dev
        .unwrap_or_default()
        .iter()
        .map(|e| static_features(template, &e.input, |f| interner.get(f)))
        .collect();
    // Every history feature is interned up front so that ids are stable.
    let mut hist_ids: HashMap<(u32, u32), [u32; 2]> = HashMap::new();
    if history {
        let all: Vec<u32> = (0..labels.len() as u32).chain(std::iter::once(START)).collect();
        for &p1 in &all {
            for &p2 in &all {
                let [a, b] = history_names(&labels, p1, p2);
                hist_ids.insert((p1, p2), [interner.intern(&a), interner.intern(&b)]);
            }
        }
    }

    let k = labels.len();
    let mut trainer = Trainer::new(k, false);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut best: Option<(f64, Weights)> = None;
    let mut scores = vec![0.0; k];
    let mut feats: Vec<u32> = Vec::new();

    for _ in 0..cfg.epochs.max(1) {
        order.shuffle(&mut rng);
        for &s in &order {
            let mut prev = (START, START);
            for (t, stat) in statics[s].iter().enumerate() {
                feats.clear();
                feats.extend_from_slice(stat);
                if history {
                    feats.extend_from_slice(&hist_ids[&prev]);
                }
                trainer.score(&feats, &mut scores);
                let pred = argmax(&scores);
                let g = gold[s][t];
                if pred != g {
                    trainer.update(&feats, g, 1.0);
                    trainer.update(&feats, pred, -1.0);
                }
                trainer.tick();
                prev = (pred as u32, prev.0);
            }
        }
        if let Some(dev) = dev {
            let weights = trainer.averaged();
            let mut hist = |p1: u32, p2: u32| hist_ids[&(p1, p2)].to_vec();
            let (mut correct, mut total) = (0usize, 0usize);
            for (e, stat) in dev.iter().zip(&dev_statics) {
                let path = decode(
                    k,
                    stat,
                    |f, s| weights.score(f, s),
                    if history { Some(&mut hist) } else { None },
                );
                total += path.len();
                correct += path.iter().zip(&e.gold).filter(|(p, g)| labels[**p] == **g).count();
            }
            let acc = if total == 0 { 0.0 } else { correct as f64 / total as f64 };
            if best.as_ref().map_or(true, |(b, _)| acc > *b) || !cfg.best_epoch {
                best = Some((acc, weights));
            }
        }
    }

    let (dev_acc, weights) = match best {
        Some((acc, w)) => (Some(acc), w),
        None => (None, trainer.averaged()),
    };
    let mut model = LinearModel::new(kind, labels, &interner, weights);
    model.meta = vec![
        ("epochs".into(), cfg.epochs.to_string()),
        ("seed".into(), cfg.seed.to_string()),
    ];
    Ok((GreedyModel::from_linear(model)?, dev_acc))
}

/// A trained greedy tagger or dependency labeler.
#[derive(Clone, Debug, PartialEq)]
pub struct GreedyModel {
    model: LinearModel,
    template: Template,
    history: bool,
}

impl GreedyModel {
    fn from_linear(model: LinearModel) -> Result<Self> {
        let (template, history) = Template::for_kind(&model.kind)
            .ok_or_else(|| Error::Model(format!("unknown model kind '{}'", model.kind)))?;
        Ok(GreedyModel {
            model,
            template,
            history,
        })
    }

    pub fn kind(&self) -> &str {
        &self.model.kind
    }

    pub fn labels(&self) -> &[String] {
        self.model.labels()
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.model.meta(key)
    }

    pub(crate) fn set_meta(&mut self, key: &str, value: &str) {
        self.model.meta.retain(|(k, _)| k != key);
        self.model.meta.push((key.into(), value.into()));
    }

    pub fn predict_input(&self, input: &SeqInput) -> Vec<String> {
        let statics = static_features(self.template, input, |f| self.model.feature_id(f));
        let labels = self.model.labels();
        let mut hist = |p1: u32, p2: u32| {
            let names = history_names(labels, p1, p2);
            self.model.lookup(&names)
        };
        let weights = self.model.weights();
        decode(
            labels.len(),
            &statics,
            |f, s| weights.score(f, s),
            if self.history { Some(&mut hist) } else { None },
        )
        .into_iter()
        .map(|y| labels[y].clone())
        .collect()
    }

    pub fn to_text(&self) -> String {
        self.model.to_text()
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::from_linear(LinearModel::from_text(text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

/// A POS or feats tagger.
#[derive(Clone, Debug, PartialEq)]
pub struct TaggerModel {
    pub task: TagTask,
    inner: GreedyModel,
}

impl TaggerModel {
    /// Tags from word forms alone.
    pub fn predict(&self, sentence: &Sentence) -> Vec<String> {
        let input = SeqInput {
            forms: sentence.tokens.iter().map(|t| t.form.clone()).collect(),
            ..SeqInput::default()
        };
        self.inner.predict_input(&input)
    }

    pub fn predict_treebank(&self, treebank: &Treebank) -> Vec<Vec<String>> {
        treebank.sentences.iter().map(|s| self.predict(s)).collect()
    }

    pub fn to_text(&self) -> String {
        self.inner.to_text()
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let inner = GreedyModel::from_text(text)?;
        let task = match inner.kind() {
            "pos-tagger" => TagTask::Pos,
            "feats-tagger" => TagTask::Feats,
            other => return Err(Error::Model(format!("'{}' is not a tagger model", other))),
        };
        Ok(TaggerModel { task, inner })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.inner.save(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

fn tag_examples(task: TagTask, treebank: &Treebank) -> Vec<Example> {
    treebank
        .sentences
        .iter()
        .map(|s| Example {
            input: SeqInput {
                forms: s.tokens.iter().map(|t| t.form.clone()).collect(),
                ..SeqInput::default()
            },
            gold: task.gold(s),
        })
        .collect()
}

/// Trains a tagger for `task`; with dev data, also returns dev accuracy of
/// the returned weights.
pub fn train_tagger(
    task: TagTask,
    train: &Treebank,
    dev: Option<&Treebank>,
    cfg: &TaggerConfig,
) -> Result<(TaggerModel, Option<f64>)> {
    if train.token_count() == 0 {
        return Err(Error::EmptyTraining);
    }
    task.check_available(train)?;
    let train_ex = tag_examples(task, train);
    let dev_ex = dev.map(|d| tag_examples(task, d));
    let (inner, acc) = train_greedy(task.kind(), &train_ex, dev_ex.as_deref(), cfg)?;
    Ok((TaggerModel { task, inner }, acc))
}

/// Token-level exact-match accuracy.
pub fn accuracy(gold: &[Vec<String>], pred: &[Vec<String>]) -> Result<f64> {
    if gold.len() != pred.len() {
        return Err(Error::LengthMismatch {
            expected: gold.len(),
            found: pred.len(),
        });
    }
    let (mut correct, mut total) = (0usize, 0usize);
    for (g, p) in gold.iter().zip(pred) {
        if g.len() != p.len() {
            return Err(Error::LengthMismatch {
                expected: g.len(),
                found: p.len(),
            });
        }
        total += g.len();
        correct += g.iter().zip(p).filter(|(a, b)| a == b).count();
    }
    Ok(if total == 0 { 0.0 } else { correct as f64 / total as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::FIG1;
    use crate::treebank::parse_conllu;

    #[test]
    fn memorizes_tiny_corpus() {
        let tb = parse_conllu(FIG1).unwrap();
        let cfg = TaggerConfig::default();
        for task in [TagTask::Pos, TagTask::Feats] {
            let (model, acc) = train_tagger(task, &tb, Some(&tb), &cfg).unwrap();
            assert!(acc.unwrap() >= 0.95, "{:?} {:?}", task, acc);
            let gold: Vec<Vec<String>> = tb.sentences.iter().map(|s| task.gold(s)).collect();
            assert!(accuracy(&gold, &model.predict_treebank(&tb)).unwrap() >= 0.95);
            let back = TaggerModel::from_text(&model.to_text()).unwrap();
            assert_eq!(back.predict_treebank(&tb), model.predict_treebank(&tb));
            assert_eq!(back.task, task);
        }
    }

    #[test]
    fn missing_feats_is_unsupported() {
        let mut tb = parse_conllu(FIG1).unwrap();
        for t in &mut tb.sentences[0].tokens {
            t.feats = Default::default();
        }
        assert!(matches!(
            train_tagger(TagTask::Feats, &tb, None, &TaggerConfig::default()),
            Err(Error::UnsupportedTask { .. })
        ));
    }

    #[test]
    fn deterministic_given_seed() {
        let tb = parse_conllu(FIG1).unwrap();
        let cfg = TaggerConfig {
            epochs: 3,
            seed: 11,
            best_epoch: false,
        };
        let a = train_tagger(TagTask::Pos, &tb, None, &cfg).unwrap().0;
        let b = train_tagger(TagTask::Pos, &tb, None, &cfg).unwrap().0;
        assert_eq!(a.to_text(), b.to_text());
    }

    #[test]
    fn accuracy_counts_tokens() {
        let g = vec![vec!["A".to_string(), "B".to_string()], vec!["C".to_string()]];
        let p = vec![vec!["A".to_string(), "X".to_string()], vec!["C".to_string()]];
        assert!((accuracy(&g, &p).unwrap() - 2.0 / 3.0).abs() < 1e-12);
    }
}
