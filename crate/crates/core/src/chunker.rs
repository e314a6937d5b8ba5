//! Averaged-perceptron IOB chunker with Viterbi decoding restricted to legal
//! IOB transitions.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::annotate::{ChunkLabeling, IobTag};
use crate::error::{Error, Result};
use crate::features::{chunker_features, SeqInput};
use crate::perceptron::{viterbi, Interner, LinearModel, Trainer, Weights};
use crate::treebank::Treebank;

const KIND: &str = "chunker";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChunkerConfig {
    pub epochs: usize,
    pub seed: u64,
    /// Keep the epoch with the best dev F1 instead of the last one.
    pub best_epoch: bool,
}

impl Default for ChunkerConfig {
    fn default() -> Self {
        ChunkerConfig {
            epochs: 5,
            seed: 0,
            best_epoch: true,
        }
    }
}

/// Exact-match span scores.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct F1Score {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub correct: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl F1Score {
    /// When there is nothing to find and nothing was predicted, precision,
    /// recall and F1 are all 1.
    pub fn from_counts(correct: usize, predicted: usize, gold: usize) -> Self {
        if predicted == 0 && gold == 0 {
            return F1Score {
                precision: 1.0,
                recall: 1.0,
                f1: 1.0,
                ..F1Score::default()
            };
        }
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(correct, predicted);
        let recall = ratio(correct, gold);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        F1Score {
            precision,
            recall,
            f1,
            correct,
            predicted,
            gold,
        }
    }
}

/// A predicted span is correct iff a gold span has the same start, end and
/// head POS.
pub fn span_f1(gold: &ChunkLabeling, pred: &ChunkLabeling) -> Result<F1Score> {
    if gold.len() != pred.len() {
        return Err(Error::LengthMismatch {
            expected: gold.len(),
            found: pred.len(),
        });
    }
    let correct = pred
        .spans()
        .iter()
        .filter(|s| gold.spans().binary_search(s).is_ok())
        .count();
    Ok(F1Score::from_counts(
        correct,
        pred.spans().len(),
        gold.spans().len(),
    ))
}

/// Micro-averaged span F1 over a corpus.
pub fn corpus_f1(gold: &[ChunkLabeling], pred: &[ChunkLabeling]) -> Result<F1Score> {
    if gold.len() != pred.len() {
        return Err(Error::LengthMismatch {
            expected: gold.len(),
            found: pred.len(),
        });
    }
    let (mut correct, mut predicted, mut total) = (0, 0, 0);
    for (g, p) in gold.iter().zip(pred) {
        let s = span_f1(g, p)?;
        correct += s.correct;
        predicted += s.predicted;
        total += s.gold;
    }
    Ok(F1Score::from_counts(correct, predicted, total))
}

fn featurize(input: &SeqInput, mut id: impl FnMut(&str) -> Option<u32>) -> Vec<Vec<u32>> {
    let mut buf = Vec::new();
    (0..input.len())
        .map(|i| {
            buf.clear();
            chunker_features(input, i, &mut buf);
            buf.iter().filter_map(|f| id(f)).collect()
        })
        .collect()
}

/// Train and dev sentences turned into feature ids once, so that many
/// chunkers can be trained on different labelings of the same text.
#[derive(Clone, Debug)]
pub struct ChunkerCorpus {
    interner: Interner,
    train: Vec<Vec<Vec<u32>>>,
    dev: Vec<Vec<Vec<u32>>>,
}

/// Result of one training run.
#[derive(Clone, Debug)]
pub struct Fit {
    pub tags: Vec<IobTag>,
    pub weights: Weights,
    /// Dev F1 after each epoch; empty without dev data.
    pub epoch_f1: Vec<F1Score>,
    /// Dev F1 of the returned weights.
    pub dev_f1: Option<F1Score>,
    pub epoch: usize,
}

impl ChunkerCorpus {
    pub fn new(train: &Treebank, dev: Option<&Treebank>) -> Self {
        let mut interner = Interner::default();
        let train = train
            .sentences
            .iter()
            .map(|s| featurize(&SeqInput::from_sentence(s), |f| Some(interner.intern(f))))
            .collect();
        let dev = dev
            .map(|d| {
                d.sentences
                    .iter()
                    .map(|s| featurize(&SeqInput::from_sentence(s), |f| interner.get(f)))
                    .collect()
            })
            .unwrap_or_default();
        ChunkerCorpus {
            interner,
            train,
            dev,
        }
    }

    pub fn train_len(&self) -> usize {
        self.train.len()
    }

    pub fn dev_len(&self) -> usize {
        self.dev.len()
    }

    /// Trains on `train_labels`; with `dev_labels`, scores every epoch on dev.
    pub fn fit(
        &self,
        train_labels: &[ChunkLabeling],
        dev_labels: Option<&[ChunkLabeling]>,
        cfg: &ChunkerConfig,
    ) -> Result<Fit> {
        check_lengths(&self.train, train_labels)?;
        if let Some(d) = dev_labels {
            check_lengths(&self.dev, d)?;
        }
        if train_labels.iter().all(|l| l.is_empty()) {
            return Err(Error::EmptyTraining);
        }

        let mut tags: Vec<IobTag> = train_labels
            .iter()
            .flat_map(|l| l.labels().iter().cloned())
            .chain(std::iter::once(IobTag::Outside))
            .collect();
        tags.sort();
        tags.dedup();
        let allowed = transition_table(&tags);
        let k = tags.len();
        let legal = |p: Option<usize>, y: usize| allowed[p.unwrap_or(k) * k + y];
        let gold: Vec<Vec<usize>> = train_labels
            .iter()
            .map(|l| {
                l.labels()
                    .iter()
                    .map(|t| tags.binary_search(t).expect("tag collected above"))
                    .collect()
            })
            .collect();

        let mut trainer = Trainer::new(k, true);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut order: Vec<usize> = (0..self.train.len()).collect();
        let mut best: Option<(F1Score, Weights, usize)> = None;
        let mut epoch_f1 = Vec::new();

        for epoch in 1..=cfg.epochs.max(1) {
            order.shuffle(&mut rng);
            for &s in &order {
                let feats = &self.train[s];
                if feats.is_empty() {
                    continue;
                }
                let pred = viterbi(&trainer, feats, legal);
                let gold = &gold[s];
                if pred != *gold {
                    update(&mut trainer, feats, gold, &pred);
                }
                trainer.tick();
            }
            if let Some(dev_labels) = dev_labels {
                let weights = trainer.averaged();
                let score = self.score_dev(&weights, &tags, &allowed, dev_labels)?;
                epoch_f1.push(score);
                let improves = best.as_ref().map_or(true, |(b, _, _)| score.f1 > b.f1);
                if improves || !cfg.best_epoch {
                    best = Some((score, weights, epoch));
                }
            }
        }

        let (dev_f1, weights, epoch) = match best {
            Some((score, weights, epoch)) => (Some(score), weights, epoch),
            None => (None, trainer.averaged(), cfg.epochs.max(1)),
        };
        Ok(Fit {
            tags,
            weights,
            epoch_f1,
            dev_f1,
            epoch,
        })
    }

    fn score_dev(
        &self,
        weights: &Weights,
        tags: &[IobTag],
        allowed: &[bool],
        gold: &[ChunkLabeling],
    ) -> Result<F1Score> {
        let k = tags.len();
        let preds: Vec<ChunkLabeling> = self
            .dev
            .iter()
            .map(|feats| {
                let path = viterbi(weights, feats, |p, y| allowed[p.unwrap_or(k) * k + y]);
                to_labeling(tags, &path)
            })
            .collect();
        corpus_f1(gold, &preds)
    }

    /// Wraps a fit into a standalone model.
    pub fn model(&self, fit: Fit, cfg: &ChunkerConfig) -> ChunkerModel {
        let labels = fit.tags.iter().map(ToString::to_string).collect();
        let mut model = LinearModel::new(KIND, labels, &self.interner, fit.weights);
        model.meta = vec![
            ("transitions".into(), "true".into()),
            ("epochs".into(), cfg.epochs.to_string()),
            ("seed".into(), cfg.seed.to_string()),
            ("epoch".into(), fit.epoch.to_string()),
        ];
        ChunkerModel::from_linear(model).expect("tags came from well-formed labelings")
    }
}

fn check_lengths(feats: &[Vec<Vec<u32>>], labels: &[ChunkLabeling]) -> Result<()> {
    if feats.len() != labels.len() {
        return Err(Error::LengthMismatch {
            expected: feats.len(),
            found: labels.len(),
        });
    }
    for (f, l) in feats.iter().zip(labels) {
        if f.len() != l.len() {
            return Err(Error::LengthMismatch {
                expected: f.len(),
                found: l.len(),
            });
        }
    }
    Ok(())
}

fn update(trainer: &mut Trainer, feats: &[Vec<u32>], gold: &[usize], pred: &[usize]) {
    for t in 0..gold.len() {
        if gold[t] != pred[t] {
            trainer.update(&feats[t], gold[t], 1.0);
            trainer.update(&feats[t], pred[t], -1.0);
        }
        let gp = (t > 0).then(|| gold[t - 1]);
        let pp = (t > 0).then(|| pred[t - 1]);
        if (gp, gold[t]) != (pp, pred[t]) {
            trainer.update_transition(gp, gold[t], 1.0);
            trainer.update_transition(pp, pred[t], -1.0);
        }
    }
}

/// `(k + 1) x k` legality table; the last row is the sentence start.
fn transition_table(tags: &[IobTag]) -> Vec<bool> {
    let k = tags.len();
    let mut table = vec![false; (k + 1) * k];
    for p in 0..=k {
        for y in 0..k {
            let prev = (p < k).then(|| &tags[p]);
            table[p * k + y] = tags[y].may_follow(prev);
        }
    }
    table
}

fn to_labeling(tags: &[IobTag], path: &[usize]) -> ChunkLabeling {
    ChunkLabeling::from_labels(path.iter().map(|&y| tags[y].clone()).collect())
        .expect("constrained decoding yields well-formed tags")
}

/// Trains a chunker; with dev data the reported F1 is the dev score of the
/// returned weights.
pub fn train_chunker(
    train: &Treebank,
    train_labels: &[ChunkLabeling],
    dev: Option<(&Treebank, &[ChunkLabeling])>,
    cfg: &ChunkerConfig,
) -> Result<(ChunkerModel, Option<F1Score>)> {
    if train.token_count() == 0 {
        return Err(Error::EmptyTraining);
    }
    let corpus = ChunkerCorpus::new(train, dev.map(|d| d.0));
    let fit = corpus.fit(train_labels, dev.map(|d| d.1), cfg)?;
    let f1 = fit.dev_f1;
    Ok((corpus.model(fit, cfg), f1))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChunkerModel {
    model: LinearModel,
    tags: Vec<IobTag>,
    allowed: Vec<bool>,
}

impl ChunkerModel {
    fn from_linear(model: LinearModel) -> Result<Self> {
        if model.kind != KIND {
            return Err(Error::Model(format!(
                "expected a {} model, found '{}'",
                KIND, model.kind
            )));
        }
        let tags = model
            .labels()
            .iter()
            .map(|l| l.parse())
            .collect::<Result<Vec<IobTag>>>()?;
        for t in &tags {
            if let IobTag::Inside(x) = t {
                if !tags.contains(&IobTag::Begin(x.clone())) {
                    return Err(Error::Model(format!("label set has {} but no B-{}", t, x)));
                }
            }
        }
        let allowed = transition_table(&tags);
        Ok(ChunkerModel {
            model,
            tags,
            allowed,
        })
    }

    pub fn tags(&self) -> &[IobTag] {
        &self.tags
    }

    pub fn predict_input(&self, input: &SeqInput) -> ChunkLabeling {
        let feats: Vec<Vec<u32>> = featurize(input, |f| self.model.feature_id(f));
        let k = self.tags.len();
        let path = viterbi(self.model.weights(), &feats, |p, y| {
            self.allowed[p.unwrap_or(k) * k + y]
        });
        to_labeling(&self.tags, &path)
    }

    /// Labels a sentence from its forms and UPOS column.
    pub fn predict(&self, sentence: &crate::treebank::Sentence) -> ChunkLabeling {
        self.predict_input(&SeqInput::from_sentence(sentence))
    }

    pub fn predict_treebank(&self, treebank: &Treebank) -> Vec<ChunkLabeling> {
        treebank.sentences.iter().map(|s| self.predict(s)).collect()
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
        Self::from_text(&text).map_err(|e| match e {
            Error::Parse { line, message } => Error::Parse {
                line,
                message: format!("{}: {}", path.display(), message),
            },
            other => other,
        })
    }
}
