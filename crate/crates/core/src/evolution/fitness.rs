use crate::annotate::{compression_proportion, CompressionStats, MatchIndex, MatchMode};
use crate::chunker::{ChunkerConfig, ChunkerCorpus};
use crate::error::{Error, Result};
use crate::ruleset::RuleSet;
use crate::treebank::Treebank;

use super::Genome;

/// The two fitness components of one genome.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub f1: f64,
    pub r_prop: f64,
}

impl Evaluation {
    pub const ZERO: Evaluation = Evaluation {
        f1: 0.0,
        r_prop: 0.0,
    };
}

/// Scores genomes. Implementations must be deterministic in
/// `(genome, seed)`; evaluations may run on several threads at once.
pub trait FitnessEvaluator: Sync {
    fn n_genes(&self) -> usize;
    fn evaluate(&self, genome: &Genome, seed: u64) -> Result<Evaluation>;
}

/// Trains a chunker on the train set annotated with the genome's rules and
/// reports its dev F1, plus the dev compression rate relative to the full
/// candidate set.
pub struct ChunkerFitness {
    train: MatchIndex,
    dev: MatchIndex,
    corpus: ChunkerCorpus,
    r_all: f64,
    epochs: usize,
    best_epoch: bool,
}

impl ChunkerFitness {
    pub fn new(
        candidates: &RuleSet,
        train: &Treebank,
        dev: &Treebank,
        epochs: usize,
        best_epoch: bool,
    ) -> Result<Self> {
        if candidates.is_empty() {
            return Err(Error::Missing("empty candidate ruleset".into()));
        }
        if dev.is_empty() {
            return Err(Error::EmptyTreebank);
        }
        let train_index = MatchIndex::build(train, candidates, MatchMode::TreeValidated)?;
        let dev_index = MatchIndex::build(dev, candidates, MatchMode::TreeValidated)?;
        let all = dev_index.label_all(&vec![true; candidates.len()]);
        let r_all = CompressionStats::from_labels(&all).r;
        if !(r_all > 1.0) {
            return Err(Error::DegenerateRuleset(r_all));
        }
        Ok(ChunkerFitness {
            train: train_index,
            dev: dev_index,
            corpus: ChunkerCorpus::new(train, Some(dev)),
            r_all,
            epochs,
            best_epoch,
        })
    }

    /// Compression rate of the full candidate set on dev.
    pub fn r_all(&self) -> f64 {
        self.r_all
    }
}

impl FitnessEvaluator for ChunkerFitness {
    fn n_genes(&self) -> usize {
        self.train.rule_count()
    }

    fn evaluate(&self, genome: &Genome, seed: u64) -> Result<Evaluation> {
        if genome.popcount() == 0 {
            return Ok(Evaluation::ZERO);
        }
        let train = self.train.label_all(genome.bits());
        if train.iter().all(|l| l.spans().is_empty()) {
            return Ok(Evaluation::ZERO);
        }
        let dev = self.dev.label_all(genome.bits());
        let r = CompressionStats::from_labels(&dev).r;
        let r_prop = compression_proportion(r, self.r_all)?;
        let cfg = ChunkerConfig {
            epochs: self.epochs,
            seed,
            best_epoch: self.best_epoch,
        };
        let fit = self.corpus.fit(&train, Some(&dev), &cfg)?;
        Ok(Evaluation {
            f1: fit.dev_f1.map(|s| s.f1).unwrap_or(0.0),
            r_prop,
        })
    }
}
