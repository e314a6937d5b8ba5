use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use depchunk::annotate::{
    annotate_treebank, chunk_stats, read_chunk_layer, ChunkLabeling, MatchMode, CHUNK_MISC_KEY,
};
use depchunk::chunker::{corpus_f1, train_chunker, ChunkerConfig, ChunkerModel};
use depchunk::depenc::{decode_sentence, encode, score_corpus, DepLabel};
use depchunk::evolution::{
    consensus_ruleset, evolve, progress_tsv, Archive, ChunkerFitness, EvolutionConfig,
};
use depchunk::experiment::{run_experiment, ExperimentConfig, FeatureSet, Report, Runtime, Task};
use depchunk::extract::{extract_candidate_rules, DEFAULT_MIN_FREQ};
use depchunk::ruleset::RuleSet;
use depchunk::tagger::{train_tagger, TagTask, TaggerConfig};
use depchunk::treebank::{write_conllu, write_conllu_annotated, MiscLayer, Treebank};

/// MISC key for dependency labels written by `encode-deps`.
const DEP_MISC_KEY: &str = "DepLabel";

const FORMATS: &str = "\
File formats:
  treebank   CoNLL-U (10 columns; multiword and empty-node lines are kept)
  ruleset    TSV, one rule per line: POS sequence (space separated), head offset, frequency
  chunks     CoNLL-U with Chunk=B-X / I-X / O in the MISC column
  deplabels  CoNLL-U with DepLabel=<+n|-n|0>,<relation>,<head POS> in MISC
  archive    JSON lines: generation, genome (0/1 string), f1, r_prop, fitness
  config     key = value lines, # comments (keys as in EvolutionConfig)
  report     TSV with columns section, name, metric, value
  model      plain-text weight file written by the train-* commands";

#[derive(Parser)]
#[command(name = "depchunk", version, about = "Dependency-based chunk rules, evolutionary rule selection and dependency labeling", after_help = FORMATS)]
struct Cli {
    /// More log output on stderr (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract candidate chunk rules from a treebank.
    #[command(after_help = FORMATS)]
    Extract {
        /// Training treebank (CoNLL-U).
        #[arg(long)]
        train: PathBuf,
        /// Minimum number of occurrences for a rule to be kept.
        #[arg(long, default_value_t = DEFAULT_MIN_FREQ)]
        min_freq: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Label a treebank with chunk tags from a ruleset.
    #[command(after_help = FORMATS)]
    Annotate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        rules: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Tree)]
        mode: Mode,
        #[command(flatten)]
        out: OutArg,
    },
    /// Chunk statistics: compression rate and chunks per sentence.
    #[command(after_help = FORMATS)]
    Stats {
        #[arg(long)]
        input: PathBuf,
        /// Ruleset to apply; without it the Chunk= tags in the input are used.
        #[arg(long)]
        rules: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Mode::Tree)]
        mode: Mode,
        /// Print per-pattern match counts (TSV) instead of the summary.
        #[arg(long)]
        per_rule: bool,
        #[command(flatten)]
        out: OutArg,
    },
    /// Search for a good subset of candidate rules with a genetic algorithm.
    #[command(after_help = FORMATS)]
    Evolve(EvolveArgs),
    /// Rules present in a given fraction of the best archived rulesets.
    #[command(after_help = FORMATS)]
    Consensus {
        #[arg(long)]
        archive: PathBuf,
        /// The candidate ruleset the archive's genomes index into.
        #[arg(long)]
        rules: PathBuf,
        /// Number of best distinct rulesets that vote.
        #[arg(long, default_value_t = 100)]
        top: usize,
        /// Fraction of voters a rule needs, e.g. 0.75.
        #[arg(long, value_parser = parse_fraction)]
        threshold: f64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Train a chunker.
    #[command(after_help = FORMATS)]
    TrainChunker {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        dev: Option<PathBuf>,
        /// Label train and dev with this ruleset (tree-validated); without it
        /// the Chunk= tags in the inputs are used.
        #[arg(long)]
        rules: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        epochs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Keep the final epoch instead of the best one on dev.
        #[arg(long)]
        last_epoch: bool,
        #[arg(long)]
        model: PathBuf,
    },
    /// Predict chunk tags with a trained chunker.
    #[command(after_help = FORMATS)]
    Chunk {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Score the predictions against the input labeled with this ruleset (on stderr).
        #[arg(long)]
        gold_rules: Option<PathBuf>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Encode dependency trees as per-token labels.
    #[command(after_help = FORMATS)]
    EncodeDeps {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
    /// Decode per-token dependency labels back into trees.
    #[command(after_help = FORMATS)]
    DecodeDeps {
        /// CoNLL-U with DepLabel= tags in MISC; heads are resolved against its UPOS column.
        #[arg(long)]
        input: PathBuf,
        /// Gold treebank to score the decoded trees against (UAS/LAS on stderr).
        #[arg(long)]
        gold: Option<PathBuf>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Train a POS or morphological-feature tagger.
    #[command(after_help = FORMATS)]
    TrainTagger {
        #[arg(long, value_parser = parse_tag_task)]
        task: TagTask,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        dev: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        epochs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        last_epoch: bool,
        #[arg(long)]
        model: PathBuf,
    },
    /// Train taggers, chunker and dependency labelers and report scores.
    #[command(after_help = FORMATS)]
    Experiment(ExperimentArgs),
    /// Render a saved TSV report.
    #[command(after_help = FORMATS)]
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Args)]
struct OutArg {
    /// Output file; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvolveArgs {
    /// Candidate ruleset.
    #[arg(long)]
    rules: PathBuf,
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    dev: PathBuf,
    /// Evolution config file; unset keys keep their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config key (repeatable), e.g. --set generations=40.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Evaluation threads; results do not depend on it.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: u64,
    /// Where to write every evaluated ruleset (JSON lines).
    #[arg(long)]
    archive: PathBuf,
    /// Per-generation statistics (TSV).
    #[arg(long)]
    progress: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    dev: PathBuf,
    /// Evaluation treebank.
    #[arg(long)]
    test: PathBuf,
    /// Named chunk ruleset, NAME=PATH (repeatable); the best on dev is used.
    #[arg(long = "rules", value_name = "NAME=PATH", value_parser = parse_named_path)]
    rulesets: Vec<(String, PathBuf)>,
    /// Comma-separated tasks: pos, feats, chunks, deplabels.
    #[arg(long, value_delimiter = ',', value_parser = parse_task, default_value = "pos,deplabels")]
    tasks: Vec<Task>,
    /// Comma-separated parser feature sets, each none or sources joined by +.
    #[arg(long, value_delimiter = ',', value_parser = parse_feature_set, default_value = "none,pos")]
    features: Vec<FeatureSet>,
    #[arg(long, default_value_t = 10)]
    epochs: usize,
    #[arg(long, default_value_t = 5)]
    chunker_epochs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run-time feature columns: predicted, or gold as a diagnostic.
    #[arg(long, value_enum, default_value_t = RuntimeArg::Predicted)]
    runtime: RuntimeArg,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Also write the report as TSV here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Directory for predicted treebanks (CoNLL-U), one file per prediction set.
    #[arg(long)]
    predictions: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    /// Matches must be base-level subtrees of the gold tree.
    Tree,
    /// Every pattern match is a chunk.
    Pattern,
}

impl From<Mode> for MatchMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Tree => MatchMode::TreeValidated,
            Mode::Pattern => MatchMode::PatternOnly,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Tsv,
}

#[derive(Clone, Copy, ValueEnum)]
enum RuntimeArg {
    Predicted,
    Gold,
}

fn parse_fraction(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{}' is not a number", s))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{} is not a fraction in [0, 1] (write 0.75, not 75)", v))
    }
}

fn parse_named_path(s: &str) -> Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((name, path)) if !name.is_empty() && !path.is_empty() => {
            Ok((name.to_owned(), PathBuf::from(path)))
        }
        _ => Err(format!("expected NAME=PATH, got '{}'", s)),
    }
}

fn parse_task(s: &str) -> Result<Task, String> {
    s.parse().map_err(|e: depchunk::Error| e.to_string())
}

fn parse_tag_task(s: &str) -> Result<TagTask, String> {
    s.parse().map_err(|e: depchunk::Error| e.to_string())
}

fn parse_feature_set(s: &str) -> Result<FeatureSet, String> {
    s.parse().map_err(|e: depchunk::Error| e.to_string())
}

/// Usage problems exit with 1, everything touching data with 2.
enum Failure {
    Usage(String),
    Data(String),
}

impl From<depchunk::Error> for Failure {
    fn from(e: depchunk::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

type CliResult<T = ()> = std::result::Result<T, Failure>;

fn emit(out: &OutArg, text: &str) -> CliResult {
    match &out.out {
        Some(path) => write_file(path, text),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Data(format!("stdout: {}", e))),
    }
}

fn write_file(path: &Path, text: &str) -> CliResult {
    fs::write(path, text).map_err(|e| Failure::Data(format!("{}: {}", path.display(), e)))
}

fn read_treebank(path: &Path) -> CliResult<Treebank> {
    Ok(Treebank::read(path)?)
}

fn read_rules(path: &Path) -> CliResult<RuleSet> {
    RuleSet::read(path).map_err(|e| Failure::Data(format!("{}: {}", path.display(), e)))
}

fn chunk_layer(tb: &Treebank, rules: Option<&Path>, mode: MatchMode) -> CliResult<Vec<ChunkLabeling>> {
    Ok(match rules {
        Some(p) => annotate_treebank(tb, &read_rules(p)?, mode)?,
        None => read_chunk_layer(tb)?,
    })
}

fn with_chunks(tb: &Treebank, labelings: &[ChunkLabeling]) -> String {
    let values: Vec<Vec<String>> = labelings.iter().map(ChunkLabeling::tag_strings).collect();
    write_conllu_annotated(
        tb,
        &[MiscLayer {
            key: CHUNK_MISC_KEY,
            values: &values,
        }],
    )
}

fn run(cmd: Command) -> CliResult {
    match cmd {
        Command::Extract {
            train,
            min_freq,
            out,
        } => {
            if min_freq == 0 {
                return Err(Failure::Usage("--min-freq must be at least 1".into()));
            }
            let tb = read_treebank(&train)?;
            let rules = extract_candidate_rules(&tb, min_freq)?;
            info!("{} rules from {} sentences", rules.len(), tb.len());
            emit(&out, &rules.to_tsv())
        }
        Command::Annotate {
            input,
            rules,
            mode,
            out,
        } => {
            let tb = read_treebank(&input)?;
            let labelings = annotate_treebank(&tb, &read_rules(&rules)?, mode.into())?;
            emit(&out, &with_chunks(&tb, &labelings))
        }
        Command::Stats {
            input,
            rules,
            mode,
            per_rule,
            out,
        } => {
            let tb = read_treebank(&input)?;
            let mut text = String::new();
            let labelings = match &rules {
                Some(p) => {
                    let rs = read_rules(p)?;
                    text.push_str(&format!("rules={}\n", rs.len()));
                    annotate_treebank(&tb, &rs, mode.into())?
                }
                None => read_chunk_layer(&tb)?,
            };
            let stats = chunk_stats(&tb, &labelings)?;
            if per_rule {
                emit(&out, &stats.to_tsv())
            } else {
                text.push_str(&stats.to_text());
                emit(&out, &text)
            }
        }
        Command::Evolve(args) => run_evolve(args),
        Command::Consensus {
            archive,
            rules,
            top,
            threshold,
            out,
        } => {
            if top == 0 {
                return Err(Failure::Usage("--top must be at least 1".into()));
            }
            let archive = Archive::read(&archive)?;
            let candidates = read_rules(&rules)?;
            let c = consensus_ruleset(&archive, &candidates, top, threshold)?;
            info!(
                "{} of {} rules kept by {} voters at threshold {}",
                c.rules.len(),
                candidates.len(),
                c.voters,
                threshold
            );
            emit(&out, &c.rules.to_tsv())
        }
        Command::TrainChunker {
            train,
            dev,
            rules,
            epochs,
            seed,
            last_epoch,
            model,
        } => {
            if epochs == 0 {
                return Err(Failure::Usage("--epochs must be at least 1".into()));
            }
            let train_tb = read_treebank(&train)?;
            let mode = MatchMode::TreeValidated;
            let train_labels = chunk_layer(&train_tb, rules.as_deref(), mode)?;
            let dev = match &dev {
                Some(p) => {
                    let tb = read_treebank(p)?;
                    let labels = chunk_layer(&tb, rules.as_deref(), mode)?;
                    Some((tb, labels))
                }
                None => None,
            };
            let cfg = ChunkerConfig {
                epochs,
                seed,
                best_epoch: !last_epoch,
            };
            let (m, f1) = train_chunker(
                &train_tb,
                &train_labels,
                dev.as_ref().map(|(tb, l)| (tb, l.as_slice())),
                &cfg,
            )?;
            m.save(&model)?;
            if let Some(f) = f1 {
                println!(
                    "dev\tprecision={:.2}\trecall={:.2}\tf1={:.2}",
                    f.precision * 100.0,
                    f.recall * 100.0,
                    f.f1 * 100.0
                );
            }
            Ok(())
        }
        Command::Chunk {
            model,
            input,
            gold_rules,
            out,
        } => {
            let m = ChunkerModel::load(&model)?;
            let tb = read_treebank(&input)?;
            let pred = m.predict_treebank(&tb);
            if let Some(p) = gold_rules {
                let gold = annotate_treebank(&tb, &read_rules(&p)?, MatchMode::TreeValidated)?;
                let f = corpus_f1(&gold, &pred)?;
                eprintln!(
                    "precision={:.2} recall={:.2} f1={:.2}",
                    f.precision * 100.0,
                    f.recall * 100.0,
                    f.f1 * 100.0
                );
            }
            emit(&out, &with_chunks(&tb, &pred))
        }
        Command::EncodeDeps { input, out } => {
            let tb = read_treebank(&input)?;
            let values = tb
                .sentences
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    encode(s)
                        .map(|ls| ls.iter().map(ToString::to_string).collect())
                        .map_err(|e| Failure::Data(format!("sentence {}: {}", i + 1, e)))
                })
                .collect::<CliResult<Vec<Vec<String>>>>()?;
            emit(
                &out,
                &write_conllu_annotated(
                    &tb,
                    &[MiscLayer {
                        key: DEP_MISC_KEY,
                        values: &values,
                    }],
                ),
            )
        }
        Command::DecodeDeps { input, gold, out } => {
            let tb = read_treebank(&input)?;
            let mut decoded = Vec::with_capacity(tb.len());
            for (i, s) in tb.sentences.iter().enumerate() {
                let at = |m: String| Failure::Data(format!("sentence {}: {}", i + 1, m));
                let labels = s
                    .tokens
                    .iter()
                    .map(|t| {
                        t.misc_value(DEP_MISC_KEY)
                            .ok_or_else(|| at(format!("token {} has no {}= tag", t.id, DEP_MISC_KEY)))?
                            .parse::<DepLabel>()
                            .map_err(|e| at(e.to_string()))
                    })
                    .collect::<CliResult<Vec<_>>>()?;
                let pos: Vec<String> = s.tokens.iter().map(|t| t.upos.clone()).collect();
                let mut d = decode_sentence(s, &pos, &labels).map_err(|e| at(e.to_string()))?;
                for t in &mut d.tokens {
                    t.misc.retain(|m| !m.starts_with(&format!("{}=", DEP_MISC_KEY)));
                }
                decoded.push(d);
            }
            if let Some(g) = gold {
                let gold = read_treebank(&g)?;
                let score = score_corpus(&gold.sentences, &decoded)?;
                eprintln!(
                    "UAS={:.2} LAS={:.2} scored={}",
                    score.uas * 100.0,
                    score.las * 100.0,
                    score.scored
                );
            }
            emit(&out, &write_conllu(&Treebank::new(decoded)))
        }
        Command::TrainTagger {
            task,
            train,
            dev,
            epochs,
            seed,
            last_epoch,
            model,
        } => {
            if epochs == 0 {
                return Err(Failure::Usage("--epochs must be at least 1".into()));
            }
            let train_tb = read_treebank(&train)?;
            let dev_tb = dev.as_deref().map(read_treebank).transpose()?;
            let cfg = TaggerConfig {
                epochs,
                seed,
                best_epoch: !last_epoch,
            };
            let (m, acc) = train_tagger(task, &train_tb, dev_tb.as_ref(), &cfg)?;
            m.save(&model)?;
            if let Some(a) = acc {
                println!("dev\t{}_accuracy={:.2}", task.name(), a * 100.0);
            }
            Ok(())
        }
        Command::Experiment(args) => run_experiment_cmd(args),
        Command::Report { input, format } => {
            let text = fs::read_to_string(&input)
                .map_err(|e| Failure::Data(format!("{}: {}", input.display(), e)))?;
            let report = Report::from_tsv(&text)
                .map_err(|e| Failure::Data(format!("{}: {}", input.display(), e)))?;
            let out = OutArg { out: None };
            match format {
                Format::Text => emit(&out, &report.to_text()),
                Format::Tsv => emit(&out, &report.to_tsv()),
            }
        }
    }
}

fn run_evolve(args: EvolveArgs) -> CliResult {
    let mut cfg = match &args.config {
        Some(p) => EvolutionConfig::read(p)
            .map_err(|e| Failure::Data(format!("{}: {}", p.display(), e)))?,
        None => EvolutionConfig::default(),
    };
    for kv in &args.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("--set expects KEY=VALUE, got '{}'", kv)))?;
        cfg.set(k.trim(), v.trim()).map_err(Failure::Usage)?;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;

    let candidates = read_rules(&args.rules)?;
    let train = read_treebank(&args.train)?;
    let dev = read_treebank(&args.dev)?;
    let fitness = ChunkerFitness::new(&candidates, &train, &dev, cfg.chunker_epochs, cfg.best_epoch)?;
    let run = evolve(&fitness, &cfg, args.jobs as usize)?;
    run.archive.write(&args.archive)?;
    if let Some(p) = &args.progress {
        write_file(p, &progress_tsv(&run.progress))?;
    }
    if let Some(best) = run.archive.best() {
        println!(
            "best\tgeneration={}\trules={}\tfitness={:.4}\tf1={:.4}\tr_prop={:.4}",
            best.generation,
            best.genome.popcount(),
            best.fitness,
            best.f1,
            best.r_prop
        );
    }
    Ok(())
}

fn run_experiment_cmd(args: ExperimentArgs) -> CliResult {
    if args.epochs == 0 || args.chunker_epochs == 0 {
        return Err(Failure::Usage("epoch counts must be at least 1".into()));
    }
    let rulesets = args
        .rulesets
        .iter()
        .map(|(name, p)| Ok((name.clone(), read_rules(p)?)))
        .collect::<CliResult<Vec<_>>>()?;
    let cfg = ExperimentConfig {
        tasks: args.tasks.iter().copied().collect(),
        feature_sets: args.features.clone(),
        rulesets,
        seed: args.seed,
        epochs: args.epochs,
        chunker_epochs: args.chunker_epochs,
        runtime: match args.runtime {
            RuntimeArg::Predicted => Runtime::Predicted,
            RuntimeArg::Gold => Runtime::Gold,
        },
    };
    let train = read_treebank(&args.train)?;
    let dev = read_treebank(&args.dev)?;
    let test = read_treebank(&args.test)?;
    let start = Instant::now();
    let outcome = run_experiment(&train, &dev, &test, &cfg)?;
    eprintln!("wall-clock: {:.1}s", start.elapsed().as_secs_f64());
    if let Some(p) = &args.report {
        write_file(p, &outcome.report.to_tsv())?;
    }
    if let Some(dir) = &args.predictions {
        fs::create_dir_all(dir).map_err(|e| Failure::Data(format!("{}: {}", dir.display(), e)))?;
        for (name, tb) in &outcome.predictions {
            write_file(&dir.join(format!("{}.conllu", name)), &write_conllu(tb))?;
        }
    }
    let out = OutArg { out: None };
    match args.format {
        Format::Text => emit(&out, &outcome.report.to_text()),
        Format::Tsv => emit(&out, &outcome.report.to_tsv()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let start = Instant::now();
    let result = run(cli.command);
    info!("finished in {:.2?}", start.elapsed());
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {}", m);
            ExitCode::from(1)
        }
        Err(Failure::Data(m)) => {
            eprintln!("error: {}", m);
            ExitCode::from(2)
        }
    }
}
