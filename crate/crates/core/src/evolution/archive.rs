use std::cmp::Ordering;
use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ruleset::RuleSet;

use super::Genome;

#[derive(Clone, Debug, PartialEq)]
pub struct Individual {
    pub genome: Genome,
    pub f1: f64,
    pub r_prop: f64,
    pub fitness: f64,
    /// Generation in which the genome was first evaluated.
    pub generation: usize,
}

#[derive(Serialize, Deserialize)]
struct Record {
    generation: usize,
    genome: String,
    f1: f64,
    r_prop: f64,
    fitness: f64,
}

/// Fitness descending, then fewer active rules, then the given order.
pub(crate) fn rank(a: &Individual, b: &Individual) -> Ordering {
    b.fitness
        .total_cmp(&a.fitness)
        .then(a.genome.popcount().cmp(&b.genome.popcount()))
}

/// Every distinct genome evaluated during a run, in first-evaluation order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Archive {
    individuals: Vec<Individual>,
    seen: HashSet<Genome>,
}

impl Archive {
    pub fn new() -> Self {
        Archive::default()
    }

    /// Adds `ind` unless its genome is already archived; returns whether it
    /// was added.
    pub fn insert(&mut self, ind: Individual) -> bool {
        if self.seen.contains(&ind.genome) {
            return false;
        }
        self.seen.insert(ind.genome.clone());
        self.individuals.push(ind);
        true
    }

    pub fn individuals(&self) -> &[Individual] {
        &self.individuals
    }

    pub fn len(&self) -> usize {
        self.individuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.individuals.is_empty()
    }

    pub fn best(&self) -> Option<&Individual> {
        let mut ranked: Vec<&Individual> = self.individuals.iter().collect();
        ranked.sort_by(|a, b| rank(a, b));
        ranked.first().copied()
    }

    /// Running maximum of fitness over insertion order.
    pub fn best_so_far(&self) -> Vec<f64> {
        let mut best = f64::NEG_INFINITY;
        self.individuals
            .iter()
            .map(|i| {
                best = best.max(i.fitness);
                best
            })
            .collect()
    }

    /// Distinct genomes ranked by fitness, highest first.
    pub fn ranked(&self) -> Vec<&Individual> {
        let mut ranked: Vec<&Individual> = self.individuals.iter().collect();
        ranked.sort_by(|a, b| rank(a, b));
        ranked
    }

    /// One JSON object per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for i in &self.individuals {
            let record = Record {
                generation: i.generation,
                genome: i.genome.to_string(),
                f1: i.f1,
                r_prop: i.r_prop,
                fitness: i.fitness,
            };
            out.push_str(&serde_json::to_string(&record).expect("plain record"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut archive = Archive::new();
        let mut width = None;
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let r: Record =
                serde_json::from_str(line).map_err(|e| Error::parse(lineno, e.to_string()))?;
            let genome: Genome = r
                .genome
                .parse()
                .map_err(|e: Error| Error::parse(lineno, e.to_string()))?;
            if *width.get_or_insert(genome.len()) != genome.len() {
                return Err(Error::parse(lineno, "genome length differs from earlier lines"));
            }
            archive.insert(Individual {
                genome,
                f1: r.f1,
                r_prop: r.r_prop,
                fitness: r.fitness,
                generation: r.generation,
            });
        }
        Ok(archive)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_jsonl(&text).map_err(|e| match e {
            Error::Parse { line, message } => Error::Parse {
                line,
                message: format!("{}: {}", path.display(), message),
            },
            other => other,
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_jsonl()).map_err(|e| Error::io(path, e))
    }
}

/// Outcome of a consensus vote.
#[derive(Clone, Debug, PartialEq)]
pub struct Consensus {
    pub rules: RuleSet,
    /// Number of genomes that voted; below `top_n` when the archive is small.
    pub voters: usize,
    /// Votes per candidate rule.
    pub votes: Vec<usize>,
}

/// Keeps candidate rule `i` iff it is active in at least
/// `threshold * n` of the `n = min(top_n, archive size)` best distinct
/// genomes.
pub fn consensus_ruleset(
    archive: &Archive,
    candidates: &RuleSet,
    top_n: usize,
    threshold: f64,
) -> Result<Consensus> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::Missing(format!(
            "threshold must be a fraction in [0, 1], got {}",
            threshold
        )));
    }
    if archive.is_empty() {
        return Err(Error::Missing("empty archive".into()));
    }
    let width = archive.individuals[0].genome.len();
    if width != candidates.len() {
        return Err(Error::LengthMismatch {
            expected: candidates.len(),
            found: width,
        });
    }
    if archive.len() < top_n {
        log::warn!(
            "archive holds {} distinct genomes, fewer than the requested {}; using all of them",
            archive.len(),
            top_n
        );
    }
    let top: Vec<&Individual> = archive.ranked().into_iter().take(top_n).collect();
    let mut votes = vec![0usize; width];
    for ind in &top {
        for (v, &b) in votes.iter_mut().zip(ind.genome.bits()) {
            *v += b as usize;
        }
    }
    let needed = threshold * top.len() as f64 - 1e-9;
    let keep: Vec<bool> = votes.iter().map(|&v| v as f64 >= needed).collect();
    Ok(Consensus {
        rules: candidates.subset(&keep),
        voters: top.len(),
        votes,
    })
}
