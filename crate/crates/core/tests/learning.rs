use depchunk::annotate::{annotate_treebank, first_ill_formed, MatchMode};
use depchunk::chunker::{corpus_f1, train_chunker, ChunkerConfig};
use depchunk::evolution::{ChunkerFitness, FitnessEvaluator, Genome};
use depchunk::experiment::{
    run_experiment, ExperimentConfig, FeatureSet, FeatureSource, Report, Runtime, Task,
};
use depchunk::extract::extract_candidate_rules;
use depchunk::synthetic::{planted_corpus, toy_english, PlantedCorpus, PlantedSpec};
use depchunk::tagger::{accuracy, train_tagger, TagTask, TaggerConfig};
use depchunk::treebank::Treebank;
use depchunk::Error;

fn small_planted() -> PlantedCorpus {
    planted_corpus(&PlantedSpec {
        train_sentences: 120,
        dev_sentences: 60,
        ..PlantedSpec::default()
    })
}

fn signal_genome(c: &PlantedCorpus) -> Genome {
    let mut bits = vec![false; c.rules.len()];
    for &i in &c.signal {
        bits[i] = true;
    }
    Genome::new(bits)
}

#[test]
fn chunker_learns_signal_rules() {
    let c = small_planted();
    let rules = c.rules.subset(signal_genome(&c).bits());
    let train = annotate_treebank(&c.train, &rules, MatchMode::TreeValidated).unwrap();
    let dev = annotate_treebank(&c.dev, &rules, MatchMode::TreeValidated).unwrap();
    let (model, f1) = train_chunker(&c.train, &train, Some((&c.dev, &dev)), &ChunkerConfig::default()).unwrap();
    assert!(f1.unwrap().f1 >= 0.99, "{:?}", f1);
    let pred = model.predict_treebank(&c.dev);
    assert!(corpus_f1(&dev, &pred).unwrap().f1 >= 0.99);
}

#[test]
fn chunker_output_is_well_formed_on_unseen_input() {
    let train = toy_english(150, 1);
    let rules = extract_candidate_rules(&train, 2).unwrap();
    let labels = annotate_treebank(&train, &rules, MatchMode::TreeValidated).unwrap();
    let (model, _) = train_chunker(&train, &labels, None, &ChunkerConfig::default()).unwrap();
    let c = small_planted();
    for s in c.dev.sentences.iter().take(20) {
        let l = model.predict(s);
        assert_eq!(l.len(), s.len());
        assert_eq!(first_ill_formed(l.labels()), None);
    }
    let empty = depchunk::treebank::Sentence::new(Vec::new());
    assert!(model.predict(&empty).is_empty());
}

#[test]
fn noise_rules_lower_fitness() {
    let c = small_planted();
    let f = ChunkerFitness::new(&c.rules, &c.train, &c.dev, 5, true).unwrap();
    let signal = f.evaluate(&signal_genome(&c), 1).unwrap();
    let all = f.evaluate(&Genome::ones(c.rules.len()), 1).unwrap();
    assert!(signal.f1 > all.f1 + 0.1, "{:?} vs {:?}", signal, all);
    assert_eq!(all.r_prop, 1.0);
    let none = f.evaluate(&Genome::zeros(c.rules.len()), 1).unwrap();
    assert_eq!((none.f1, none.r_prop), (0.0, 0.0));
}

#[test]
fn tagger_memorizes_small_corpus() {
    let tb = toy_english(60, 9);
    for task in [TagTask::Pos, TagTask::Feats] {
        let (model, acc) = train_tagger(task, &tb, Some(&tb), &TaggerConfig::default()).unwrap();
        assert!(acc.unwrap() >= 0.95, "{:?}: {:?}", task, acc);
        let gold: Vec<Vec<String>> = tb.sentences.iter().map(|s| task.gold(s)).collect();
        assert!(accuracy(&gold, &model.predict_treebank(&tb)).unwrap() >= 0.95);
    }
}

#[test]
fn feats_task_needs_feats() {
    let c = small_planted();
    let err = train_tagger(TagTask::Feats, &c.train, None, &TaggerConfig::default()).unwrap_err();
    assert!(matches!(err, Error::UnsupportedTask { .. }), "{}", err);
}

fn experiment_config(runtime: Runtime, rules: &Treebank) -> ExperimentConfig {
    ExperimentConfig {
        tasks: [Task::Pos, Task::Feats, Task::Chunks, Task::DepLabels].into_iter().collect(),
        feature_sets: vec![
            FeatureSet::none(),
            FeatureSet::of(&[FeatureSource::Pos]),
            FeatureSet::of(&[FeatureSource::Pos, FeatureSource::Feats, FeatureSource::Chunks]),
        ],
        rulesets: vec![
            ("min2".into(), extract_candidate_rules(rules, 2).unwrap()),
            ("min20".into(), extract_candidate_rules(rules, 20).unwrap()),
        ],
        seed: 4,
        runtime,
        ..ExperimentConfig::default()
    }
}

fn uas(r: &Report, set: &str) -> f64 {
    r.get("parse", set, "uas").unwrap().parse().unwrap()
}

#[test]
fn experiment_is_deterministic_and_round_trips() {
    let (train, dev, test) = (toy_english(250, 1), toy_english(80, 2), toy_english(80, 3));
    let cfg = experiment_config(Runtime::Predicted, &train);
    let a = run_experiment(&train, &dev, &test, &cfg).unwrap();
    let b = run_experiment(&train, &dev, &test, &cfg).unwrap();
    let tsv = a.report.to_tsv();
    assert_eq!(tsv, b.report.to_tsv());
    assert_eq!(Report::from_tsv(&tsv).unwrap(), a.report);
    let selected = a.report.get("chunks", "selected", "ruleset").unwrap();
    assert!(a.report.get("chunk_stats", selected, "chunks_per_sentence").is_some());
    let names: Vec<&str> = a.predictions.iter().map(|(n, _)| n.as_str()).collect();
    assert!(names.contains(&"tagged"));
    assert!(names.contains(&"parse-pos"));
}

#[test]
fn gold_inputs_parse_at_least_as_well() {
    let (train, dev, test) = (toy_english(250, 1), toy_english(80, 2), toy_english(80, 3));
    let pred = run_experiment(&train, &dev, &test, &experiment_config(Runtime::Predicted, &train)).unwrap();
    let gold = run_experiment(&train, &dev, &test, &experiment_config(Runtime::Gold, &train)).unwrap();
    for set in ["none", "pos", "pos+feats+chunks"] {
        assert!(uas(&gold.report, set) >= uas(&pred.report, set), "{}", set);
    }
    // Ambiguous forms make POS information useful on this grammar.
    assert!(uas(&pred.report, "pos") > uas(&pred.report, "none"));
}

#[test]
fn report_without_parse_task_has_no_parse_rows() {
    let (train, dev) = (toy_english(60, 1), toy_english(20, 2));
    let cfg = ExperimentConfig {
        tasks: [Task::Pos].into_iter().collect(),
        ..ExperimentConfig::default()
    };
    let out = run_experiment(&train, &dev, &dev, &cfg).unwrap();
    assert!(out.report.rows.iter().all(|r| r.section != "parse"));
    assert!(out.report.get("tagging", "pos", "accuracy").is_some());
}

#[test]
fn experiment_rejects_empty_input() {
    let tb = toy_english(20, 1);
    let empty = Treebank::default();
    let cfg = ExperimentConfig::default();
    assert!(run_experiment(&empty, &tb, &tb, &cfg).is_err());
    assert!(run_experiment(&tb, &tb, &empty, &cfg).is_err());
    let chunks = ExperimentConfig {
        tasks: [Task::Chunks].into_iter().collect(),
        ..ExperimentConfig::default()
    };
    assert!(run_experiment(&tb, &tb, &tb, &chunks).is_err());
}
