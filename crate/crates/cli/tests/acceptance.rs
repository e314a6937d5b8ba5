//! Acceptance checks, one line each.
//!
//! Criteria needing the UD English-EWT treebank read it from `UD_EWT_DIR`
//! (default `data/UD_English-EWT` in the workspace). Without the files they
//! are reported as blocked failures and do not fail the run; every other
//! failure does.

use std::collections::BTreeSet;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use depchunk::annotate::{
    annotate_treebank, compression_proportion, ChunkLabeling, CompressionStats, MatchIndex, MatchMode,
};
use depchunk::chunker::{train_chunker, ChunkerConfig};
use depchunk::depenc::{decode, decode_sentence, encode, score_corpus, DepLabel};
use depchunk::evolution::{
    consensus_ruleset, evolve, Archive, ChunkerFitness, Evaluation, EvolutionConfig, FitnessEvaluator,
    Genome, Individual,
};
use depchunk::experiment::{run_experiment, ExperimentConfig, FeatureSet, FeatureSource, Task};
use depchunk::extract::{base_subtrees, extract_candidate_rules, maximal_spans};
use depchunk::ruleset::{ChunkRule, RuleSet};
use depchunk::synthetic::{planted_corpus, random_tree, PlantedCorpus, PlantedSpec};
use depchunk::treebank::{write_conllu, Sentence, Treebank};
use depchunk::Result;

// Tolerances and budgets.
const EWT_RULES: f64 = 512.0;
const EWT_RULES_TOLERANCE: f64 = 0.10;
const EXTRACT_BUDGET: Duration = Duration::from_secs(60);
const ORACLE_SENTENCES: usize = 500;
const ORACLE_MAX_LEN: usize = 10;
const HAND_R: f64 = 1.6667;
const HAND_R_EPS: f64 = 1e-4;
const EXACT_EPS: f64 = 1e-9;
const EVOLVE_SEEDS: u64 = 10;
const EVOLVE_SEEDS_NEEDED: usize = 9;
const EVOLVE_OPTIMUM_SHARE: f64 = 0.95;
const EVOLVE_BUDGET: Duration = Duration::from_secs(600);
const PLANTED_SEEDS: u64 = 3;
const PLANTED_MAX_NOISE: usize = 2;
const RANDOM_ARCHIVES: usize = 1000;
const FUZZ_SEQUENCES: usize = 10_000;
const CHUNKER_F1_FLOOR: f64 = 0.70;

enum Outcome {
    Pass(String),
    Fail(String),
    Blocked(String),
}

const UPOS: &[&str] = &[
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM", "PART", "PRON", "PROPN",
    "PUNCT", "SCONJ", "SYM", "VERB", "X",
];

fn ewt_dir() -> PathBuf {
    std::env::var_os("UD_EWT_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/UD_English-EWT"))
}

fn ewt_file(split: &str) -> std::result::Result<PathBuf, Outcome> {
    let p = ewt_dir().join(format!("en_ewt-ud-{}.conllu", split));
    if p.is_file() {
        Ok(p)
    } else {
        Err(Outcome::Blocked(format!("{} not found (set UD_EWT_DIR)", p.display())))
    }
}

macro_rules! need {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(o) => return o,
        }
    };
}

fn read_ewt(split: &str) -> std::result::Result<Treebank, Outcome> {
    let p = ewt_file(split)?;
    Treebank::read(&p).map_err(|e| Outcome::Fail(format!("reading {}: {}", p.display(), e)))
}

fn scratch_dir() -> tempfile::TempDir {
    tempfile::tempdir().expect("temporary directory")
}

fn depchunk(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_depchunk"))
        .args(args)
        .output()
        .expect("running depchunk")
}

fn candidate_rules() -> Outcome {
    let train = need!(ewt_file("train"));
    let dir = scratch_dir();
    let out = dir.path().join("rules.tsv");
    let start = Instant::now();
    let run = depchunk(&[
        "extract",
        "--train",
        train.to_str().unwrap(),
        "--min-freq",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    let took = start.elapsed();
    if !run.status.success() {
        return Outcome::Fail(format!("extract failed: {}", String::from_utf8_lossy(&run.stderr)));
    }
    let n = std::fs::read_to_string(&out).unwrap().lines().filter(|l| !l.is_empty()).count();
    let lo = EWT_RULES * (1.0 - EWT_RULES_TOLERANCE);
    let hi = EWT_RULES * (1.0 + EWT_RULES_TOLERANCE);
    let detail = format!("{} rules (accepted {:.0}..={:.0}) in {:.1?}", n, lo, hi, took);
    if (lo..=hi).contains(&(n as f64)) && took < EXTRACT_BUDGET {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

/// Every (start, end, head) span whose non-head tokens attach to the head
/// and have no dependents, keeping only those not inside another.
fn brute_force_maximal(s: &Sentence) -> BTreeSet<(usize, usize, usize)> {
    let heads = s.heads();
    let n = heads.len();
    let has_dependent = |i: usize| heads.iter().any(|&h| h == i);
    let mut all = BTreeSet::new();
    for start in 1..=n {
        for end in start + 1..=n {
            for head in start..=end {
                if (start..=end).all(|i| i == head || (heads[i - 1] == head && !has_dependent(i))) {
                    all.insert((start, end, head));
                }
            }
        }
    }
    all.iter()
        .filter(|&&(a, b, _)| !all.iter().any(|&(c, d, _)| (c, d) != (a, b) && c <= a && b <= d))
        .copied()
        .collect()
}

fn criteria_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut mismatches = 0;
    let mut spans = 0;
    for _ in 0..ORACLE_SENTENCES {
        let n = rng.gen_range(1..=ORACLE_MAX_LEN);
        let s = random_tree(n, UPOS, &mut rng);
        let got: BTreeSet<_> = maximal_spans(&base_subtrees(&s).unwrap())
            .iter()
            .map(|sp| (sp.start, sp.end, sp.head()))
            .collect();
        let want = brute_force_maximal(&s);
        spans += want.len();
        if got != want {
            mismatches += 1;
        }
    }
    let detail = format!(
        "{} sentences of <= {} tokens, {} maximal spans, {} mismatches",
        ORACLE_SENTENCES, ORACLE_MAX_LEN, spans, mismatches
    );
    if mismatches == 0 {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn compression_arithmetic() -> Outcome {
    let c = planted_corpus(&PlantedSpec {
        train_sentences: 10,
        dev_sentences: 50,
        ..PlantedSpec::default()
    });
    let r_all = CompressionStats::from_labels(
        &annotate_treebank(&c.dev, &c.rules, MatchMode::TreeValidated).unwrap(),
    )
    .r;
    let r_empty = CompressionStats::from_labels(
        &annotate_treebank(&c.dev, &RuleSet::empty(), MatchMode::TreeValidated).unwrap(),
    )
    .r;
    let p_empty = compression_proportion(r_empty, r_all).unwrap();
    let p_full = compression_proportion(r_all, r_all).unwrap();
    let hand = ChunkLabeling::parse_tags(&["B-NOUN", "I-NOUN", "I-NOUN", "O", "O", "B-VERB", "I-VERB", "I-VERB", "O", "O"])
        .unwrap();
    let hand_stats = CompressionStats::from_labels(&[hand]);
    let ok = (r_empty - 1.0).abs() < EXACT_EPS
        && p_empty == 0.0
        && p_full == 1.0
        && hand_stats.c_tokens == 10
        && hand_stats.c_chunks == 2
        && hand_stats.c_out == 4
        && (hand_stats.r - 10.0 / 6.0).abs() < EXACT_EPS
        && (hand_stats.r - HAND_R).abs() < HAND_R_EPS;
    let detail = format!(
        "empty r={} r%={}; full r%={}; 10 tokens/2 chunks/4 outside r={:.10}",
        r_empty, p_empty, p_full, hand_stats.r
    );
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

/// Fitness of every genome over a small candidate set, computed once with
/// one fixed chunker seed so that search and enumeration see the same
/// deterministic function.
struct Enumerated {
    n: usize,
    table: Vec<Evaluation>,
}

impl Enumerated {
    fn build(fitness: &ChunkerFitness, n: usize) -> Result<Self> {
        let table = (0u32..1 << n)
            .map(|mask| fitness.evaluate(&Self::genome(n, mask), 0))
            .collect::<Result<Vec<_>>>()?;
        Ok(Enumerated { n, table })
    }

    fn genome(n: usize, mask: u32) -> Genome {
        Genome::new((0..n).map(|i| mask >> i & 1 == 1).collect())
    }

    fn mask(g: &Genome) -> usize {
        g.bits().iter().enumerate().map(|(i, &b)| (b as usize) << i).sum()
    }
}

impl FitnessEvaluator for Enumerated {
    fn n_genes(&self) -> usize {
        self.n
    }

    fn evaluate(&self, genome: &Genome, _seed: u64) -> Result<Evaluation> {
        Ok(self.table[Self::mask(genome)])
    }
}

fn evolution_vs_exhaustive(archives: &mut Vec<(Archive, RuleSet)>) -> Outcome {
    let start = Instant::now();
    let c = planted_corpus(&PlantedSpec {
        signal_rules: 4,
        noise_rules: 8,
        train_sentences: 80,
        dev_sentences: 40,
        seed: 12,
        ..PlantedSpec::default()
    });
    let n = c.rules.len();
    let cfg = EvolutionConfig {
        population_size: 50,
        generations: 20,
        ..EvolutionConfig::default()
    };
    let fitness = ChunkerFitness::new(&c.rules, &c.train, &c.dev, cfg.chunker_epochs, cfg.best_epoch).unwrap();
    let table = Enumerated::build(&fitness, n).unwrap();
    let optimum = table
        .table
        .iter()
        .map(|e| cfg.weight_f1 * e.f1 + cfg.weight_compression * e.r_prop)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut reached = 0;
    let mut shares = Vec::new();
    for seed in 0..EVOLVE_SEEDS {
        let run = evolve(&table, &EvolutionConfig { seed, ..cfg.clone() }, 1).unwrap();
        let best = run.archive.best().unwrap().fitness;
        shares.push(best / optimum);
        if best >= EVOLVE_OPTIMUM_SHARE * optimum {
            reached += 1;
        }
        archives.push((run.archive, c.rules.clone()));
    }
    let took = start.elapsed();
    let detail = format!(
        "{} rules, optimum {:.4} over {} subsets; >= {:.0}% of it in {}/{} seeds (worst {:.3}) in {:.1?}",
        n,
        optimum,
        1u32 << n,
        EVOLVE_OPTIMUM_SHARE * 100.0,
        reached,
        EVOLVE_SEEDS,
        shares.iter().cloned().fold(f64::INFINITY, f64::min),
        took
    );
    if reached >= EVOLVE_SEEDS_NEEDED && took < EVOLVE_BUDGET {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn planted_recovery(archives: &mut Vec<(Archive, RuleSet)>) -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for seed in 0..PLANTED_SEEDS {
        let c: PlantedCorpus = planted_corpus(&PlantedSpec {
            train_sentences: 200,
            dev_sentences: 100,
            seed,
            ..PlantedSpec::default()
        });
        let cfg = EvolutionConfig {
            generations: 10,
            decay: 0.0,
            seed,
            ..EvolutionConfig::default()
        };
        let fitness = ChunkerFitness::new(&c.rules, &c.train, &c.dev, cfg.chunker_epochs, cfg.best_epoch).unwrap();
        let run = evolve(&fitness, &cfg, 1).unwrap();
        let cons = consensus_ruleset(&run.archive, &c.rules, 100, 0.95).unwrap();
        let signal = cons.rules.iter().filter(|r| c.is_signal(r)).count();
        let noise = cons.rules.len() - signal;
        ok &= signal == c.signal.len() && noise <= PLANTED_MAX_NOISE;
        lines.push(format!("seed {}: {}/{} signal, {} noise", seed, signal, c.signal.len(), noise));
        archives.push((run.archive, c.rules.clone()));
    }
    let detail = lines.join("; ");
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn consensus_monotonicity(archives: &[(Archive, RuleSet)]) -> Outcome {
    let patterns = |a: &Archive, rules: &RuleSet, t: f64| -> BTreeSet<String> {
        consensus_ruleset(a, rules, 100, t)
            .unwrap()
            .rules
            .iter()
            .map(ChunkRule::pattern)
            .collect()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut random = Vec::new();
    for _ in 0..RANDOM_ARCHIVES {
        let n_genes = rng.gen_range(1..30);
        let rules = RuleSet::new(
            (0..n_genes)
                .map(|i| ChunkRule::new(&[format!("T{}", i), "X".into()], 1, 5 + i).unwrap())
                .collect(),
        )
        .unwrap();
        let mut a = Archive::new();
        for g in 0..rng.gen_range(1..250) {
            let f = rng.gen_range(0..30) as f64 / 20.0;
            a.insert(Individual {
                genome: Genome::random(n_genes, &mut rng),
                f1: f,
                r_prop: 0.0,
                fitness: f,
                generation: g / 50,
            });
        }
        random.push((a, rules));
    }
    let mut violations = 0;
    let mut sizes = Vec::new();
    for (a, rules) in archives.iter().chain(&random) {
        let high = patterns(a, rules, 0.95);
        let low = patterns(a, rules, 0.75);
        if !high.is_subset(&low) {
            violations += 1;
        }
        sizes.push((high.len(), low.len()));
    }
    let detail = format!(
        "{} evolved + {} random archives, {} violations",
        archives.len(),
        random.len(),
        violations
    );
    if violations == 0 {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn is_tree(heads: &[usize]) -> bool {
    heads.iter().filter(|&&h| h == 0).count() == 1
        && (1..=heads.len()).all(|start| {
            let mut node = start;
            for _ in 0..=heads.len() {
                if node == 0 {
                    return true;
                }
                node = heads[node - 1];
            }
            false
        })
}

fn dependency_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut bad = 0;
    for _ in 0..FUZZ_SEQUENCES {
        let n = rng.gen_range(1..=25);
        let pos: Vec<String> = (0..n).map(|_| UPOS[rng.gen_range(0..6)].to_owned()).collect();
        let labels: Vec<DepLabel> = (0..n)
            .map(|_| {
                if rng.gen_bool(0.1) {
                    DepLabel::root("root")
                } else {
                    let mag = rng.gen_range(1..=4);
                    DepLabel {
                        offset: if rng.gen_bool(0.5) { mag } else { -mag },
                        relation: "dep".into(),
                        head_pos: UPOS[rng.gen_range(0..8)].into(),
                    }
                }
            })
            .collect();
        match decode(&pos, &labels) {
            Ok(d) if is_tree(&d.heads) => {}
            _ => bad += 1,
        }
    }
    let fuzz = format!("fuzz: {}/{} sequences decoded to trees", FUZZ_SEQUENCES - bad, FUZZ_SEQUENCES);
    if bad > 0 {
        return Outcome::Fail(fuzz);
    }
    let dev = match read_ewt("dev") {
        Ok(tb) => tb,
        Err(Outcome::Blocked(m)) => return Outcome::Blocked(format!("{}; {}", fuzz, m)),
        Err(o) => return o,
    };
    let mut decoded = Vec::with_capacity(dev.len());
    for s in &dev.sentences {
        let pos: Vec<String> = s.tokens.iter().map(|t| t.upos.clone()).collect();
        let labels = encode(s).unwrap();
        decoded.push(decode_sentence(s, &pos, &labels).unwrap());
    }
    let score = score_corpus(&dev.sentences, &decoded).unwrap();
    let identical = dev.sentences == decoded;
    let detail = format!(
        "{}; en-ewt dev UAS {:.2} LAS {:.2} over {} scored tokens",
        fuzz,
        score.uas * 100.0,
        score.las * 100.0,
        score.scored
    );
    if score.head_correct == score.scored && score.both_correct == score.scored && identical {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn evolve_determinism() -> Outcome {
    let dir = scratch_dir();
    let c = planted_corpus(&PlantedSpec {
        train_sentences: 60,
        dev_sentences: 30,
        seed: 8,
        ..PlantedSpec::default()
    });
    let path = |name: &str| dir.path().join(name).to_str().unwrap().to_owned();
    std::fs::write(path("train.conllu"), write_conllu(&c.train)).unwrap();
    std::fs::write(path("dev.conllu"), write_conllu(&c.dev)).unwrap();
    std::fs::write(path("rules.tsv"), c.rules.to_tsv()).unwrap();
    std::fs::write(path("evo.cfg"), "population_size = 30\ngenerations = 4\n").unwrap();
    let mut archives = Vec::new();
    for jobs in ["1", "8"] {
        let archive = path(&format!("archive-{}.jsonl", jobs));
        let run = depchunk(&[
            "evolve", "--rules", &path("rules.tsv"), "--train", &path("train.conllu"), "--dev",
            &path("dev.conllu"), "--config", &path("evo.cfg"), "--seed", "7", "--jobs", jobs,
            "--archive", &archive,
        ]);
        if !run.status.success() {
            return Outcome::Fail(format!("evolve --jobs {} failed: {}", jobs, String::from_utf8_lossy(&run.stderr)));
        }
        archives.push(std::fs::read(&archive).unwrap());
    }
    let detail = format!("archives of {} and {} bytes", archives[0].len(), archives[1].len());
    if archives[0] == archives[1] && !archives[0].is_empty() {
        Outcome::Pass(format!("{}, byte-identical", detail))
    } else {
        Outcome::Fail(format!("{}, differ", detail))
    }
}

fn chunker_floor() -> Outcome {
    let train = need!(read_ewt("train"));
    let dev = need!(read_ewt("dev"));
    let rules = extract_candidate_rules(&train, 5).unwrap();
    let train_l = MatchIndex::build(&train, &rules, MatchMode::TreeValidated)
        .unwrap()
        .label_all(&vec![true; rules.len()]);
    let dev_l = annotate_treebank(&dev, &rules, MatchMode::TreeValidated).unwrap();
    let cfg = ChunkerConfig {
        epochs: 5,
        ..ChunkerConfig::default()
    };
    let (_, f1) = train_chunker(&train, &train_l, Some((&dev, &dev_l)), &cfg).unwrap();
    let f1 = f1.unwrap();
    let detail = format!("{} rules, dev span F1 {:.2} (floor {:.2})", rules.len(), f1.f1 * 100.0, CHUNKER_F1_FLOOR * 100.0);
    if f1.f1 >= CHUNKER_F1_FLOOR {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn direction_check() -> Outcome {
    let train = need!(read_ewt("train"));
    let dev = need!(read_ewt("dev"));
    let cfg = ExperimentConfig {
        tasks: [Task::Pos, Task::DepLabels].into_iter().collect(),
        feature_sets: vec![FeatureSet::none(), FeatureSet::of(&[FeatureSource::Pos])],
        ..ExperimentConfig::default()
    };
    let out = run_experiment(&train, &dev, &dev, &cfg).unwrap();
    let uas = |set: &str| -> f64 { out.report.get("parse", set, "uas").unwrap().parse().unwrap() };
    let (none, pos) = (uas("none"), uas("pos"));
    let detail = format!("dev UAS no features {:.2}, predicted POS {:.2}", none, pos);
    if pos > none {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

struct Runner {
    only: Option<Vec<u32>>,
    outcomes: Vec<Outcome>,
}

impl Runner {
    fn run(&mut self, id: u32, name: &str, f: impl FnOnce() -> Outcome) {
        if self.only.as_ref().is_some_and(|ids| !ids.contains(&id)) {
            return;
        }
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::Fail(format!("panicked: {}", msg))
        });
        let took = start.elapsed();
        let (tag, detail) = match &outcome {
            Outcome::Pass(d) => ("PASS", d.as_str()),
            Outcome::Fail(d) => ("FAIL", d.as_str()),
            Outcome::Blocked(d) => ("FAIL (blocked)", d.as_str()),
        };
        println!("{} [{:>2}] {}: {} [{:.1?}]", tag, id, name, detail, took);
        self.outcomes.push(outcome);
    }
}

fn main() -> ExitCode {
    // libtest flags such as filters are accepted and ignored.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    panic::set_hook(Box::new(|_| {}));
    // ACCEPTANCE_ONLY=2,7 runs a subset of the criteria.
    let only = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let mut r = Runner { only, outcomes: Vec::new() };
    let mut archives = Vec::new();
    r.run(1, "candidate-rule count on en-ewt train", candidate_rules);
    r.run(2, "base-subtree criteria oracle", criteria_oracle);
    r.run(3, "compression arithmetic", compression_arithmetic);
    r.run(4, "evolution vs exhaustive optimum", || evolution_vs_exhaustive(&mut archives));
    r.run(5, "planted-rule recovery", || planted_recovery(&mut archives));
    r.run(6, "consensus monotonicity", || consensus_monotonicity(&archives));
    r.run(7, "dependency encoding round trip", dependency_round_trip);
    r.run(8, "evolve determinism across --jobs", evolve_determinism);
    r.run(9, "chunker learnability floor", chunker_floor);
    r.run(10, "POS features raise UAS", direction_check);
    let outcomes = r.outcomes;
    let passed = outcomes.iter().filter(|o| matches!(o, Outcome::Pass(_))).count();
    let failed = outcomes.iter().filter(|o| matches!(o, Outcome::Fail(_))).count();
    let blocked = outcomes.len() - passed - failed;
    println!("acceptance: {} passed, {} failed, {} blocked", passed, failed, blocked);
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
