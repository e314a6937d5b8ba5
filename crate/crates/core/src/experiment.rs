//! Feature-augmented dependency labeling experiments.
//!
//! A dependency labeler is trained on gold POS, feats and chunk columns and
//! evaluated with columns predicted by the taggers and the chunker, once per
//! feature set. Predictions of the shared inputs are made once, so every
//! row of a report sees the same predicted columns.

use std::collections::BTreeSet;
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::annotate::{annotate_treebank, chunk_stats, ChunkLabeling, MatchMode, CHUNK_MISC_KEY};
use crate::chunker::{corpus_f1, train_chunker, ChunkerConfig, ChunkerModel};
use crate::depenc::{decode_sentence, encode, score_corpus, DepLabel, ParseScore};
use crate::error::{Error, Result};
use crate::extract::with_sentence;
use crate::features::SeqInput;
use crate::ruleset::RuleSet;
use crate::tagger::{accuracy, train_greedy, train_tagger, Example, GreedyModel, TagTask, TaggerConfig, TaggerModel};
use crate::treebank::{Sentence, Treebank};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureSource {
    Pos,
    Feats,
    Chunks,
}

impl FeatureSource {
    pub fn name(self) -> &'static str {
        match self {
            FeatureSource::Pos => "pos",
            FeatureSource::Feats => "feats",
            FeatureSource::Chunks => "chunks",
        }
    }
}

/// Input columns given to the dependency labeler besides word forms.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureSet(BTreeSet<FeatureSource>);

impl FeatureSet {
    pub fn none() -> Self {
        FeatureSet::default()
    }

    pub fn of(sources: &[FeatureSource]) -> Self {
        FeatureSet(sources.iter().copied().collect())
    }

    pub fn contains(&self, s: FeatureSource) -> bool {
        self.0.contains(&s)
    }

    pub fn iter(&self) -> impl Iterator<Item = FeatureSource> + '_ {
        self.0.iter().copied()
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("none");
        }
        let names: Vec<&str> = self.iter().map(FeatureSource::name).collect();
        f.write_str(&names.join("+"))
    }
}

impl FromStr for FeatureSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "none" || s.is_empty() {
            return Ok(FeatureSet::none());
        }
        let mut set = BTreeSet::new();
        for part in s.split('+') {
            set.insert(match part {
                "pos" => FeatureSource::Pos,
                "feats" => FeatureSource::Feats,
                "chunks" => FeatureSource::Chunks,
                _ => {
                    return Err(Error::Missing(format!(
                        "unknown feature source '{}' (expected pos, feats or chunks)",
                        part
                    )))
                }
            });
        }
        Ok(FeatureSet(set))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Task {
    Pos,
    Feats,
    Chunks,
    DepLabels,
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pos" => Ok(Task::Pos),
            "feats" => Ok(Task::Feats),
            "chunks" => Ok(Task::Chunks),
            "deplabels" | "deps" => Ok(Task::DepLabels),
            _ => Err(Error::Missing(format!(
                "unknown task '{}' (expected pos, feats, chunks or deplabels)",
                s
            ))),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Pos => "pos",
            Task::Feats => "feats",
            Task::Chunks => "chunks",
            Task::DepLabels => "deplabels",
        })
    }
}

/// Per-sentence label columns.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Columns {
    pub pos: Option<Vec<Vec<String>>>,
    pub feats: Option<Vec<Vec<String>>>,
    pub chunks: Option<Vec<Vec<String>>>,
}

impl Columns {
    /// Gold POS and feats of a treebank, plus optional chunk labelings.
    pub fn gold(treebank: &Treebank, chunks: Option<&[ChunkLabeling]>) -> Self {
        Columns {
            pos: Some(treebank.sentences.iter().map(|s| TagTask::Pos.gold(s)).collect()),
            feats: Some(treebank.sentences.iter().map(|s| TagTask::Feats.gold(s)).collect()),
            chunks: chunks.map(|c| c.iter().map(ChunkLabeling::tag_strings).collect()),
        }
    }

    fn inputs(&self, treebank: &Treebank, features: &FeatureSet) -> Result<Vec<SeqInput>> {
        let pick = |src: FeatureSource, col: &Option<Vec<Vec<String>>>| -> Result<Option<Vec<Vec<String>>>> {
            if !features.contains(src) {
                return Ok(None);
            }
            col.clone().map(Some).ok_or_else(|| {
                Error::Missing(format!("no {} column available for the dependency labeler", src.name()))
            })
        };
        let pos = pick(FeatureSource::Pos, &self.pos)?;
        let feats = pick(FeatureSource::Feats, &self.feats)?;
        let chunks = pick(FeatureSource::Chunks, &self.chunks)?;
        Ok(treebank
            .sentences
            .iter()
            .enumerate()
            .map(|(i, s)| SeqInput {
                forms: s.tokens.iter().map(|t| t.form.clone()).collect(),
                pos: pos.as_ref().map(|c| c[i].clone()).unwrap_or_default(),
                feats: feats.as_ref().map(|c| c[i].clone()).unwrap_or_default(),
                chunks: chunks.as_ref().map(|c| c[i].clone()).unwrap_or_default(),
            })
            .collect())
    }
}

/// Predicts dependency labels from forms and a fixed set of columns.
#[derive(Clone, Debug, PartialEq)]
pub struct DepLabeler {
    pub features: FeatureSet,
    inner: GreedyModel,
}

impl DepLabeler {
    pub fn train(
        train: &Treebank,
        columns: &Columns,
        features: &FeatureSet,
        cfg: &TaggerConfig,
    ) -> Result<Self> {
        if train.token_count() == 0 {
            return Err(Error::EmptyTraining);
        }
        let inputs = columns.inputs(train, features)?;
        let mut examples = Vec::with_capacity(train.len());
        for (i, (s, input)) in train.sentences.iter().zip(inputs).enumerate() {
            let gold = encode(s).map_err(|e| with_sentence(e, i + 1))?;
            examples.push(Example {
                input,
                gold: gold.iter().map(ToString::to_string).collect(),
            });
        }
        let (mut inner, _) = train_greedy("dep-labeler", &examples, None, cfg)?;
        inner.set_meta("features", &features.to_string());
        Ok(DepLabeler {
            features: features.clone(),
            inner,
        })
    }

    pub fn predict_labels(&self, treebank: &Treebank, columns: &Columns) -> Result<Vec<Vec<DepLabel>>> {
        let inputs = columns.inputs(treebank, &self.features)?;
        inputs
            .iter()
            .map(|input| {
                self.inner
                    .predict_input(input)
                    .iter()
                    .map(|l| l.parse())
                    .collect()
            })
            .collect()
    }

    /// Parses each sentence, resolving heads against `decode_pos`.
    pub fn parse(&self, treebank: &Treebank, columns: &Columns, decode_pos: &[Vec<String>]) -> Result<Vec<Sentence>> {
        let labels = self.predict_labels(treebank, columns)?;
        treebank
            .sentences
            .iter()
            .zip(labels.iter().zip(decode_pos))
            .map(|(s, (l, p))| decode_sentence(s, p, l))
            .collect()
    }

    pub fn to_text(&self) -> String {
        self.inner.to_text()
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let inner = GreedyModel::from_text(text)?;
        if inner.kind() != "dep-labeler" {
            return Err(Error::Model(format!("'{}' is not a dependency labeler", inner.kind())));
        }
        let features = inner.meta("features").unwrap_or("none").parse()?;
        Ok(DepLabeler { features, inner })
    }
}

/// Where run-time input columns come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Runtime {
    Predicted,
    /// Diagnostic: gold columns at run time too.
    Gold,
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub tasks: BTreeSet<Task>,
    pub feature_sets: Vec<FeatureSet>,
    /// Candidate chunk rulesets by name; the one whose chunker scores the
    /// best dev F1 supplies the chunk column.
    pub rulesets: Vec<(String, RuleSet)>,
    pub seed: u64,
    pub epochs: usize,
    pub chunker_epochs: usize,
    pub runtime: Runtime,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            tasks: [Task::Pos, Task::DepLabels].into_iter().collect(),
            feature_sets: vec![FeatureSet::none(), FeatureSet::of(&[FeatureSource::Pos])],
            rulesets: Vec::new(),
            seed: 0,
            epochs: 10,
            chunker_epochs: 5,
            runtime: Runtime::Predicted,
        }
    }
}

impl ExperimentConfig {
    fn needs(&self, src: FeatureSource) -> bool {
        self.feature_sets.iter().any(|f| f.contains(src))
    }
}

/// One `section / name / metric / value` line of a report. Values are
/// stored already formatted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReportRow {
    pub section: String,
    pub name: String,
    pub metric: String,
    pub value: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Report {
    pub rows: Vec<ReportRow>,
}

const REPORT_HEADER: &str = "section\tname\tmetric\tvalue";

impl Report {
    fn push(&mut self, section: &str, name: &str, metric: &str, value: String) {
        self.rows.push(ReportRow {
            section: section.into(),
            name: name.into(),
            metric: metric.into(),
            value,
        });
    }

    fn percent(&mut self, section: &str, name: &str, metric: &str, ratio: f64) {
        self.push(section, name, metric, format!("{:.2}", ratio * 100.0));
    }

    pub fn get(&self, section: &str, name: &str, metric: &str) -> Option<&str> {
        self.rows
            .iter()
            .find(|r| r.section == section && r.name == name && r.metric == metric)
            .map(|r| r.value.as_str())
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{}", REPORT_HEADER).unwrap();
        for r in &self.rows {
            writeln!(out, "{}\t{}\t{}\t{}", r.section, r.name, r.metric, r.value).unwrap();
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h == REPORT_HEADER => {}
            _ => return Err(Error::parse(1, format!("expected header '{}'", REPORT_HEADER))),
        }
        let mut report = Report::default();
        for (idx, line) in lines {
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 4 {
                return Err(Error::parse(idx + 1, format!("expected 4 columns, found {}", cols.len())));
            }
            report.push(cols[0], cols[1], cols[2], cols[3].to_owned());
        }
        Ok(report)
    }

    /// Human-readable form, one block per section.
    pub fn to_text(&self) -> String {
        let w_name = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(0);
        let w_metric = self.rows.iter().map(|r| r.metric.len()).max().unwrap_or(0);
        let mut out = String::new();
        let mut section: Option<&str> = None;
        for r in &self.rows {
            if section != Some(&r.section) {
                if section.is_some() {
                    out.push('\n');
                }
                writeln!(out, "[{}]", r.section).unwrap();
                section = Some(&r.section);
            }
            writeln!(
                out,
                "  {:<wn$}  {:<wm$}  {}",
                r.name,
                r.metric,
                r.value,
                wn = w_name,
                wm = w_metric
            )
            .unwrap();
        }
        out
    }
}

/// A report plus the predictions it was computed from, as named treebanks
/// (predicted UPOS, feats, `Chunk=` MISC tags and parses).
#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub report: Report,
    pub predictions: Vec<(String, Treebank)>,
}

fn check_nonempty(name: &str, tb: &Treebank) -> Result<()> {
    if tb.token_count() == 0 {
        return Err(Error::Missing(format!("{} treebank is empty", name)));
    }
    Ok(())
}

/// Trains the taggers, the chunker and one dependency labeler per feature
/// set on `train`, selects models on `dev` and scores everything on `eval`.
pub fn run_experiment(
    train: &Treebank,
    dev: &Treebank,
    eval: &Treebank,
    cfg: &ExperimentConfig,
) -> Result<ExperimentOutcome> {
    check_nonempty("train", train)?;
    check_nonempty("dev", dev)?;
    check_nonempty("evaluation", eval)?;
    let deps = cfg.tasks.contains(&Task::DepLabels);
    let want_pos = cfg.tasks.contains(&Task::Pos) || deps;
    let want_feats = cfg.tasks.contains(&Task::Feats) || (deps && cfg.needs(FeatureSource::Feats));
    let want_chunks = cfg.tasks.contains(&Task::Chunks) || (deps && cfg.needs(FeatureSource::Chunks));
    if want_chunks && cfg.rulesets.is_empty() {
        return Err(Error::Missing("chunk features requested but no ruleset given".into()));
    }
    if want_feats {
        TagTask::Feats.check_available(train)?;
    }

    let tcfg = TaggerConfig {
        epochs: cfg.epochs,
        seed: cfg.seed,
        best_epoch: true,
    };
    let mut report = Report::default();
    report.push("config", "seed", "value", cfg.seed.to_string());
    report.push("config", "epochs", "value", cfg.epochs.to_string());
    report.push("config", "chunker_epochs", "value", cfg.chunker_epochs.to_string());
    report.push(
        "config",
        "tasks",
        "value",
        cfg.tasks.iter().map(ToString::to_string).collect::<Vec<_>>().join(","),
    );
    report.push(
        "config",
        "runtime",
        "value",
        match cfg.runtime {
            Runtime::Predicted => "predicted".into(),
            Runtime::Gold => "gold".into(),
        },
    );
    for (name, tb) in [("train", train), ("dev", dev), ("eval", eval)] {
        report.push("data", name, "sentences", tb.len().to_string());
        report.push("data", name, "tokens", tb.token_count().to_string());
    }

    let gold_eval = Columns::gold(eval, None);
    let mut predicted = eval.clone();

    let pos_pred = if want_pos {
        let (tagger, _) = train_tagger(TagTask::Pos, train, Some(dev), &tcfg)?;
        let pred = tagger.predict_treebank(eval);
        if cfg.tasks.contains(&Task::Pos) {
            report.percent("tagging", "pos", "accuracy", accuracy(gold_eval.pos.as_ref().unwrap(), &pred)?);
        }
        for (s, tags) in predicted.sentences.iter_mut().zip(&pred) {
            for (t, p) in s.tokens.iter_mut().zip(tags) {
                t.upos = p.clone();
            }
        }
        Some(pred)
    } else {
        None
    };

    let feats_pred = if want_feats {
        let (tagger, _): (TaggerModel, _) = train_tagger(TagTask::Feats, train, Some(dev), &tcfg)?;
        let pred = tagger.predict_treebank(eval);
        if cfg.tasks.contains(&Task::Feats) {
            report.percent("tagging", "feats", "accuracy", accuracy(gold_eval.feats.as_ref().unwrap(), &pred)?);
        }
        for (s, tags) in predicted.sentences.iter_mut().zip(&pred) {
            for (t, p) in s.tokens.iter_mut().zip(tags) {
                t.feats = p.parse().unwrap_or_default();
            }
        }
        Some(pred)
    } else {
        None
    };

    // Chunker: one per candidate ruleset, the best on dev is kept.
    let mut chunk_train: Option<Vec<ChunkLabeling>> = None;
    let mut chunk_eval_gold: Option<Vec<ChunkLabeling>> = None;
    let mut chunks_pred: Option<Vec<Vec<String>>> = None;
    if want_chunks {
        let ccfg = ChunkerConfig {
            epochs: cfg.chunker_epochs,
            seed: cfg.seed,
            best_epoch: true,
        };
        let mut best: Option<(f64, String, ChunkerModel, Vec<ChunkLabeling>, RuleSet)> = None;
        for (name, rules) in &cfg.rulesets {
            let train_l = annotate_treebank(train, rules, MatchMode::TreeValidated)?;
            let dev_l = annotate_treebank(dev, rules, MatchMode::TreeValidated)?;
            let (model, f1) = train_chunker(train, &train_l, Some((dev, &dev_l)), &ccfg)?;
            let f1 = f1.map(|s| s.f1).unwrap_or(0.0);
            report.push("chunks", name, "rules", rules.len().to_string());
            report.percent("chunks", name, "dev_f1", f1);
            if best.as_ref().map_or(true, |b| f1 > b.0) {
                best = Some((f1, name.clone(), model, train_l, rules.clone()));
            }
        }
        let (_, name, model, train_l, rules) = best.expect("at least one ruleset");
        report.push("chunks", "selected", "ruleset", name.clone());
        let gold_l = annotate_treebank(eval, &rules, MatchMode::TreeValidated)?;
        let pred_l = model.predict_treebank(&predicted);
        let f1 = corpus_f1(&gold_l, &pred_l)?;
        report.percent("chunks", "eval", "precision", f1.precision);
        report.percent("chunks", "eval", "recall", f1.recall);
        report.percent("chunks", "eval", "f1", f1.f1);
        let stats = chunk_stats(eval, &gold_l)?;
        report.push("chunk_stats", &name, "rules", rules.len().to_string());
        report.push("chunk_stats", &name, "chunks", stats.compression.c_chunks.to_string());
        report.push("chunk_stats", &name, "r", format!("{:.2}", stats.compression.r));
        report.push(
            "chunk_stats",
            &name,
            "chunks_per_sentence",
            format!("{:.2}", stats.compression.chunks_per_sentence),
        );
        for (s, l) in predicted.sentences.iter_mut().zip(&pred_l) {
            for (t, tag) in s.tokens.iter_mut().zip(l.tag_strings()) {
                t.set_misc(CHUNK_MISC_KEY, &tag);
            }
        }
        chunks_pred = Some(pred_l.iter().map(ChunkLabeling::tag_strings).collect());
        chunk_train = Some(train_l);
        chunk_eval_gold = Some(gold_l);
    }

    let mut predictions = vec![("tagged".to_owned(), predicted.clone())];

    if deps {
        let train_cols = Columns::gold(train, chunk_train.as_deref());
        let (run_cols, decode_pos) = match cfg.runtime {
            Runtime::Gold => (
                Columns::gold(eval, chunk_eval_gold.as_deref()),
                gold_eval.pos.clone().unwrap(),
            ),
            Runtime::Predicted => (
                Columns {
                    pos: pos_pred.clone(),
                    feats: feats_pred.clone(),
                    chunks: chunks_pred.clone(),
                },
                pos_pred.clone().expect("POS tagger trained for parsing"),
            ),
        };
        for features in &cfg.feature_sets {
            let labeler = DepLabeler::train(train, &train_cols, features, &tcfg)?;
            let parsed = labeler.parse(eval, &run_cols, &decode_pos)?;
            let score: ParseScore = score_corpus(&eval.sentences, &parsed)?;
            let name = features.to_string();
            report.percent("parse", &name, "uas", score.uas);
            report.percent("parse", &name, "las", score.las);
            let mut out = predicted.clone();
            for (o, p) in out.sentences.iter_mut().zip(&parsed) {
                for (t, pt) in o.tokens.iter_mut().zip(&p.tokens) {
                    t.head = pt.head;
                    t.deprel = pt.deprel.clone();
                }
            }
            predictions.push((format!("parse-{}", name), out));
        }
    }

    Ok(ExperimentOutcome { report, predictions })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feature_set_names() {
        for s in ["none", "pos", "feats", "pos+feats+chunks", "pos+chunks"] {
            assert_eq!(s.parse::<FeatureSet>().unwrap().to_string(), s);
        }
        assert_eq!("chunks+pos".parse::<FeatureSet>().unwrap().to_string(), "pos+chunks");
        assert!("pos+lemma".parse::<FeatureSet>().is_err());
    }

    #[test]
    fn report_tsv_round_trip() {
        let mut r = Report::default();
        r.push("config", "seed", "value", "7".into());
        r.percent("parse", "pos", "uas", 0.84876);
        assert_eq!(r.get("parse", "pos", "uas"), Some("84.88"));
        let tsv = r.to_tsv();
        assert_eq!(Report::from_tsv(&tsv).unwrap(), r);
        assert!(Report::from_tsv("nope\n").is_err());
        let text = r.to_text();
        assert!(text.contains("[parse]"));
        assert!(text.contains("84.88"));
    }
}
