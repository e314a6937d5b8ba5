//! Genetic search over rule subsets.
//!
//! Each generation is evaluated, the k best individuals are replicated into
//! an offspring pool, adjacent pairs are crossed over, individuals are
//! mutated, and the offspring replace the population. Evaluations run in
//! parallel but are merged by slot, so results do not depend on the thread
//! count.

mod archive;
mod config;
mod fitness;
mod genome;

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub use archive::{consensus_ruleset, Archive, Consensus, Individual};
pub use config::EvolutionConfig;
pub use fitness::{ChunkerFitness, Evaluation, FitnessEvaluator};
pub use genome::{crossover, crossover_at, init_population, mutate, Genome};

/// Indices of the `k` fittest individuals, ties going to fewer active rules
/// and then to the lower index.
pub fn k_best_select(population: &[Individual], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..population.len()).collect();
    idx.sort_by(|&a, &b| archive::rank(&population[a], &population[b]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// The selected parents repeated in order until the pool has `size` members.
pub fn offspring_pool(population: &[Individual], parents: &[usize], size: usize) -> Vec<Genome> {
    (0..size)
        .map(|i| population[parents[i % parents.len()]].genome.clone())
        .collect()
}

/// Chunker-training seed for the individual in `slot` of `generation`.
pub fn evaluation_seed(seed: u64, generation: usize, slot: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((generation as u64) << 32) | slot as u64);
    rng.next_u64()
}

/// Per-generation summary.
#[derive(Clone, Debug, PartialEq)]
pub struct GenerationStats {
    pub generation: usize,
    pub mean_fitness: f64,
    pub max_fitness: f64,
    pub mean_f1: f64,
    pub mean_r_prop: f64,
    /// Best fitness over this and all earlier generations.
    pub best_so_far: f64,
    /// Genomes trained this generation (cache misses).
    pub evaluated: usize,
    pub p_mutate: f64,
    pub p_crossover: f64,
}

impl GenerationStats {
    pub const TSV_HEADER: &'static str = "generation\tmean_fitness\tmax_fitness\tmean_f1\tmean_r_prop\tbest_so_far\tevaluated\tp_mutate\tp_crossover";

    pub fn to_tsv_row(&self) -> String {
        format!(
            "{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{}\t{:.2}\t{:.2}",
            self.generation,
            self.mean_fitness,
            self.max_fitness,
            self.mean_f1,
            self.mean_r_prop,
            self.best_so_far,
            self.evaluated,
            self.p_mutate,
            self.p_crossover
        )
    }
}

pub fn progress_tsv(stats: &[GenerationStats]) -> String {
    let mut out = String::new();
    writeln!(out, "{}", GenerationStats::TSV_HEADER).unwrap();
    for s in stats {
        writeln!(out, "{}", s.to_tsv_row()).unwrap();
    }
    out
}

#[derive(Clone, Debug)]
pub struct EvolutionRun {
    pub archive: Archive,
    pub progress: Vec<GenerationStats>,
    /// The last population, in slot order.
    pub population: Vec<Individual>,
}

struct Evaluator<'a, E: FitnessEvaluator> {
    fitness: &'a E,
    cfg: &'a EvolutionConfig,
    cache: HashMap<Genome, Evaluation>,
    pool: rayon::ThreadPool,
}

impl<E: FitnessEvaluator> Evaluator<'_, E> {
    /// Evaluates a population; each uncached genome is trained once, with
    /// the seed of the lowest slot holding it.
    fn run(&mut self, genomes: Vec<Genome>, generation: usize) -> Result<(Vec<Individual>, usize)> {
        let mut todo: Vec<(usize, &Genome)> = Vec::new();
        let mut queued = std::collections::HashSet::new();
        for (slot, g) in genomes.iter().enumerate() {
            if !self.cache.contains_key(g) && queued.insert(g) {
                todo.push((slot, g));
            }
        }
        let seed = self.cfg.seed;
        let fitness = self.fitness;
        let results: Vec<Result<Evaluation>> = self.pool.install(|| {
            todo.par_iter()
                .map(|(slot, g)| fitness.evaluate(g, evaluation_seed(seed, generation, *slot)))
                .collect()
        });
        let evaluated = todo.len();
        for ((_, g), r) in todo.iter().zip(results) {
            self.cache.insert((*g).clone(), r?);
        }
        let population = genomes
            .into_iter()
            .map(|genome| {
                let e = self.cache[&genome];
                Individual {
                    fitness: self.cfg.weight_f1 * e.f1 + self.cfg.weight_compression * e.r_prop,
                    f1: e.f1,
                    r_prop: e.r_prop,
                    generation,
                    genome,
                }
            })
            .collect();
        Ok((population, evaluated))
    }
}

fn summarize(
    population: &[Individual],
    generation: usize,
    evaluated: usize,
    best_so_far: f64,
    p_mutate: f64,
    p_crossover: f64,
) -> GenerationStats {
    let n = population.len() as f64;
    let mean = |f: fn(&Individual) -> f64| population.iter().map(f).sum::<f64>() / n;
    let max_fitness = population
        .iter()
        .map(|i| i.fitness)
        .fold(f64::NEG_INFINITY, f64::max);
    GenerationStats {
        generation,
        mean_fitness: mean(|i| i.fitness),
        max_fitness,
        mean_f1: mean(|i| i.f1),
        mean_r_prop: mean(|i| i.r_prop),
        best_so_far: best_so_far.max(max_fitness),
        evaluated,
        p_mutate,
        p_crossover,
    }
}

/// Runs the search with `jobs` evaluation threads. The result depends only
/// on the config (including its seed), never on `jobs`.
pub fn evolve<E: FitnessEvaluator>(
    fitness: &E,
    cfg: &EvolutionConfig,
    jobs: usize,
) -> Result<EvolutionRun> {
    cfg.validate()?;
    let n_genes = fitness.n_genes();
    if n_genes == 0 {
        return Err(Error::Missing("empty candidate ruleset".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Evaluation(e.to_string()))?;
    let mut evaluator = Evaluator {
        fitness,
        cfg,
        cache: HashMap::new(),
        pool,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut archive = Archive::new();
    let mut progress = Vec::new();

    let initial = init_population(n_genes, cfg.population_size, &mut rng);
    let (mut population, evaluated) = evaluator.run(initial, 0)?;
    for ind in &population {
        archive.insert(ind.clone());
    }
    progress.push(summarize(
        &population,
        0,
        evaluated,
        f64::NEG_INFINITY,
        cfg.p_mutate,
        cfg.p_crossover,
    ));
    log::info!("generation 0: {}", progress[0].to_tsv_row());

    for generation in 1..=cfg.generations {
        // Linear decay after every completed generation, clamped at 0.
        let decayed = |p: f64| (p - cfg.decay * (generation - 1) as f64).max(0.0);
        let (p_mutate, p_crossover) = (decayed(cfg.p_mutate), decayed(cfg.p_crossover));
        let parents = k_best_select(&population, cfg.k_best);
        let mut offspring = offspring_pool(&population, &parents, cfg.population_size);
        for i in (0..offspring.len().saturating_sub(1)).step_by(2) {
            if rng.gen_bool(p_crossover) {
                let (a, b) =
                    crossover(&offspring[i], &offspring[i + 1], cfg.crossover_points, &mut rng);
                offspring[i] = a;
                offspring[i + 1] = b;
            }
        }
        for g in offspring.iter_mut() {
            if rng.gen_bool(p_mutate) {
                *g = mutate(g, cfg.p_mutate_gene, &mut rng);
            }
        }
        let (next, evaluated) = evaluator.run(offspring, generation)?;
        population = next;
        for ind in &population {
            archive.insert(ind.clone());
        }
        let best = progress.last().map_or(f64::NEG_INFINITY, |s: &GenerationStats| s.best_so_far);
        let stats = summarize(&population, generation, evaluated, best, p_mutate, p_crossover);
        log::info!("generation {}: {}", generation, stats.to_tsv_row());
        progress.push(stats);
    }

    Ok(EvolutionRun {
        archive,
        progress,
        population,
    })
}
