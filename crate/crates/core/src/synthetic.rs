//! Synthetic treebanks with known structure, for testing rule selection and
//! the learners without a real corpus.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ruleset::{ChunkRule, RuleSet};
use crate::treebank::{Features, Sentence, Token, Treebank};

/// Shape of a planted-signal corpus.
#[derive(Clone, Debug)]
pub struct PlantedSpec {
    pub signal_rules: usize,
    pub noise_rules: usize,
    pub signal_len: usize,
    pub train_sentences: usize,
    pub dev_sentences: usize,
    /// Segments per sentence after the leading signal chunk, inclusive.
    pub segments: (usize, usize),
    /// Chance that a segment is a single filler token.
    pub filler: f64,
    /// Chance that a noise occurrence is a valid one-level subtree.
    pub noise_valid: f64,
    pub seed: u64,
}

impl Default for PlantedSpec {
    fn default() -> Self {
        PlantedSpec {
            signal_rules: 5,
            noise_rules: 20,
            signal_len: 3,
            train_sentences: 300,
            dev_sentences: 150,
            segments: (4, 8),
            filler: 0.2,
            noise_valid: 0.5,
            seed: 0,
        }
    }
}

/// Train and dev treebanks plus the candidate rules planted in them.
///
/// Signal rules always occur as one-level subtrees, so annotating with them
/// is perfectly learnable from POS. Noise rules occur as subtrees only part
/// of the time, with nothing in the words or tags telling the cases apart.
#[derive(Clone, Debug)]
pub struct PlantedCorpus {
    pub train: Treebank,
    pub dev: Treebank,
    pub rules: RuleSet,
    /// Positions in `rules` of the signal rules.
    pub signal: Vec<usize>,
}

impl PlantedCorpus {
    pub fn is_signal(&self, rule: &ChunkRule) -> bool {
        rule.pos_sequence[0].starts_with('S')
    }
}

const ROOT_TAG: &str = "VERB";
const FILLER_TAG: &str = "X";

fn signal_tags(i: usize, len: usize) -> Vec<String> {
    (0..len).map(|k| format!("S{}{}", i, (b'A' + k as u8) as char)).collect()
}

fn noise_tags(j: usize) -> Vec<String> {
    vec![format!("N{}A", j), format!("N{}B", j)]
}

struct Builder {
    tokens: Vec<Token>,
}

impl Builder {
    fn push(&mut self, rng: &mut ChaCha8Rng, tag: &str, head: usize, rel: &str) -> usize {
        let id = self.tokens.len() + 1;
        let form = format!("w{}", rng.gen_range(0..40));
        self.tokens.push(Token::new(id, &form, tag, head, rel));
        id
    }

    /// Dependents first, head last, head attached to the root token.
    fn signal(&mut self, rng: &mut ChaCha8Rng, tags: &[String]) {
        let head = self.tokens.len() + tags.len();
        for tag in &tags[..tags.len() - 1] {
            self.push(rng, tag, head, "dep");
        }
        self.push(rng, &tags[tags.len() - 1], 1, "dep");
    }
}

fn planted_sentence(spec: &PlantedSpec, signals: &[Vec<String>], noises: &[Vec<String>], rng: &mut ChaCha8Rng) -> Sentence {
    let mut b = Builder { tokens: Vec::new() };
    b.push(rng, ROOT_TAG, 0, "root");
    // A signal head right after the root keeps the root out of any window.
    let first = rng.gen_range(0..signals.len());
    b.signal(rng, &signals[first]);
    let n_rules = signals.len() + noises.len();
    for _ in 0..rng.gen_range(spec.segments.0..=spec.segments.1) {
        if rng.gen_bool(spec.filler) {
            b.push(rng, FILLER_TAG, 1, "dep");
            continue;
        }
        let r = rng.gen_range(0..n_rules);
        if r < signals.len() {
            b.signal(rng, &signals[r]);
        } else {
            let tags = &noises[r - signals.len()];
            if rng.gen_bool(spec.noise_valid) {
                b.signal(rng, tags);
            } else {
                b.push(rng, &tags[0], 1, "dep");
                b.push(rng, &tags[1], 1, "dep");
            }
        }
    }
    Sentence::new(b.tokens)
}

pub fn planted_corpus(spec: &PlantedSpec) -> PlantedCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let signals: Vec<Vec<String>> = (0..spec.signal_rules).map(|i| signal_tags(i, spec.signal_len)).collect();
    let noises: Vec<Vec<String>> = (0..spec.noise_rules).map(noise_tags).collect();
    let train = Treebank::new(
        (0..spec.train_sentences)
            .map(|_| planted_sentence(spec, &signals, &noises, &mut rng))
            .collect(),
    );
    let dev = Treebank::new(
        (0..spec.dev_sentences)
            .map(|_| planted_sentence(spec, &signals, &noises, &mut rng))
            .collect(),
    );

    let count = |tags: &[String]| -> usize {
        train
            .sentences
            .iter()
            .map(|s| {
                let upos = s.upos();
                upos.windows(tags.len()).filter(|w| w.iter().zip(tags).all(|(a, b)| *a == b)).count()
            })
            .sum::<usize>()
            .max(1)
    };
    let rules: Vec<ChunkRule> = signals
        .iter()
        .chain(&noises)
        .map(|tags| ChunkRule::new(tags, tags.len() - 1, count(tags)).expect("well-formed planted rule"))
        .collect();
    let rules = RuleSet::new(rules).expect("distinct planted rules");
    let signal = rules
        .iter()
        .enumerate()
        .filter(|(_, r)| r.pos_sequence[0].starts_with('S'))
        .map(|(i, _)| i)
        .collect();
    PlantedCorpus {
        train,
        dev,
        rules,
        signal,
    }
}

struct Lexicon {
    det: &'static [(&'static str, &'static str)],
    adj: &'static [&'static str],
    noun: &'static [(&'static str, &'static str)],
    propn: &'static [&'static str],
    pron: &'static [(&'static str, &'static str)],
    verb: &'static [(&'static str, &'static str)],
    aux: &'static [(&'static str, &'static str)],
    adp: &'static [&'static str],
    num: &'static [&'static str],
    adv: &'static [&'static str],
}

// Some forms are deliberately both nouns and verbs.
const LEX: Lexicon = Lexicon {
    det: &[("the", "Definite=Def|PronType=Art"), ("a", "Definite=Ind|PronType=Art"), ("this", "Number=Sing|PronType=Dem")],
    adj: &["big", "old", "red", "quiet", "new", "small", "happy"],
    noun: &[
        ("dog", "Number=Sing"),
        ("dogs", "Number=Plur"),
        ("cat", "Number=Sing"),
        ("house", "Number=Sing"),
        ("houses", "Number=Plur"),
        ("book", "Number=Sing"),
        ("run", "Number=Sing"),
        ("walks", "Number=Plur"),
        ("park", "Number=Sing"),
        ("time", "Number=Sing"),
        ("watch", "Number=Sing"),
        ("plays", "Number=Plur"),
        ("cook", "Number=Sing"),
        ("garden", "Number=Sing"),
        ("train", "Number=Sing"),
        ("letters", "Number=Plur"),
    ],
    propn: &["Alice", "Bob", "Paris", "Kim"],
    pron: &[("she", "Case=Nom|Number=Sing|Person=3|PronType=Prs"), ("they", "Case=Nom|Number=Plur|Person=3|PronType=Prs"), ("it", "Case=Nom|Number=Sing|Person=3|PronType=Prs")],
    verb: &[
        ("saw", "Mood=Ind|Tense=Past|VerbForm=Fin"),
        ("likes", "Mood=Ind|Number=Sing|Person=3|Tense=Pres|VerbForm=Fin"),
        ("book", "Mood=Ind|Tense=Pres|VerbForm=Fin"),
        ("walks", "Mood=Ind|Number=Sing|Person=3|Tense=Pres|VerbForm=Fin"),
        ("run", "VerbForm=Inf"),
        ("found", "Mood=Ind|Tense=Past|VerbForm=Fin"),
        ("park", "VerbForm=Inf"),
        ("watch", "VerbForm=Inf"),
        ("plays", "Mood=Ind|Number=Sing|Person=3|Tense=Pres|VerbForm=Fin"),
        ("cook", "VerbForm=Inf"),
        ("train", "VerbForm=Inf"),
    ],
    aux: &[("will", "VerbForm=Fin"), ("can", "VerbForm=Fin"), ("did", "Mood=Ind|Tense=Past|VerbForm=Fin")],
    adp: &["in", "near", "with", "for"],
    num: &["two", "three", "ten"],
    adv: &["often", "never", "quickly", "still"],
};

fn pick<'a, T>(rng: &mut ChaCha8Rng, xs: &'a [T]) -> &'a T {
    xs.choose(rng).expect("non-empty lexicon class")
}

struct EnglishBuilder {
    tokens: Vec<Token>,
}

impl EnglishBuilder {
    fn push(&mut self, form: &str, upos: &str, feats: &str, deprel: &str) -> usize {
        let id = self.tokens.len() + 1;
        let mut t = Token::new(id, form, upos, 0, deprel);
        t.feats = feats.parse().unwrap_or_else(|_| Features::default());
        self.tokens.push(t);
        id
    }

    fn attach(&mut self, dep: usize, head: usize) {
        self.tokens[dep - 1].head = head;
    }

    /// Pushes a noun phrase, returning its head and its dependents.
    fn np(&mut self, rng: &mut ChaCha8Rng, rel: &str) -> (usize, Vec<usize>) {
        let mut deps = Vec::new();
        let head = match rng.gen_range(0..6) {
            0 => {
                let (w, f) = pick(rng, LEX.pron);
                self.push(w, "PRON", f, rel)
            }
            1 => {
                let w = pick(rng, LEX.propn);
                self.push(w, "PROPN", "Number=Sing", rel)
            }
            2 => {
                deps.push(self.push(pick(rng, LEX.num), "NUM", "NumType=Card", "nummod"));
                let (w, f) = pick(rng, LEX.noun);
                self.push(w, "NOUN", f, rel)
            }
            k => {
                let (d, df) = pick(rng, LEX.det);
                deps.push(self.push(d, "DET", df, "det"));
                if k == 5 {
                    deps.push(self.push(pick(rng, LEX.adj), "ADJ", "Degree=Pos", "amod"));
                }
                if rng.gen_bool(0.2) {
                    let (w, f) = pick(rng, LEX.noun);
                    deps.push(self.push(w, "NOUN", f, "compound"));
                }
                let (w, f) = pick(rng, LEX.noun);
                self.push(w, "NOUN", f, rel)
            }
        };
        for &d in &deps {
            self.attach(d, head);
        }
        (head, deps)
    }
}

fn english_sentence(rng: &mut ChaCha8Rng, idx: usize) -> Sentence {
    let mut b = EnglishBuilder { tokens: Vec::new() };
    let (subj, _) = b.np(rng, "nsubj");
    let aux = rng.gen_bool(0.3).then(|| {
        let (w, f) = pick(rng, LEX.aux);
        b.push(w, "AUX", f, "aux")
    });
    let adv = rng.gen_bool(0.25).then(|| b.push(pick(rng, LEX.adv), "ADV", "_", "advmod"));
    let (v, vf) = pick(rng, LEX.verb);
    let verb = b.push(v, "VERB", vf, "root");
    let mut attach_to_verb = vec![subj];
    attach_to_verb.extend(aux);
    attach_to_verb.extend(adv);
    let obj = rng.gen_bool(0.7).then(|| b.np(rng, "obj").0);
    attach_to_verb.extend(obj);
    if rng.gen_bool(0.5) {
        let adp = b.push(pick(rng, LEX.adp), "ADP", "_", "case");
        // The attachment of a PP after an object is not predictable from
        // the words.
        let to_noun = obj.is_some() && rng.gen_bool(0.4);
        let (pp, _) = b.np(rng, if to_noun { "nmod" } else { "obl" });
        b.attach(adp, pp);
        match obj {
            Some(o) if to_noun => b.attach(pp, o),
            _ => attach_to_verb.push(pp),
        }
    }
    let punct = b.push(".", "PUNCT", "_", "punct");
    attach_to_verb.push(punct);
    for d in attach_to_verb {
        b.attach(d, verb);
    }
    let mut s = Sentence::new(b.tokens);
    s.comments.push(format!("# sent_id = toy-{}", idx + 1));
    let text: Vec<&str> = s.tokens.iter().map(|t| t.form.as_str()).collect();
    s.comments.push(format!("# text = {}", text.join(" ")));
    s
}

/// Simple English-like sentences (subject, optional auxiliary and adverb,
/// verb, optional object and prepositional phrase) with full UD annotation.
pub fn toy_english(sentences: usize, seed: u64) -> Treebank {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Treebank::new((0..sentences).map(|i| english_sentence(&mut rng, i)).collect())
}

/// A sentence of `n` tokens with uniformly random tags from `tags` and a
/// random tree (each token after the first attaches to a random earlier
/// token, then positions are shuffled).
pub fn random_tree(n: usize, tags: &[&str], rng: &mut impl Rng) -> Sentence {
    let mut order: Vec<usize> = (1..=n).collect();
    order.shuffle(rng);
    // order[k] is the position of the k-th node in generation order
    let mut heads = vec![0usize; n];
    for k in 1..n {
        let parent = order[rng.gen_range(0..k)];
        heads[order[k] - 1] = parent;
    }
    let tokens = (0..n)
        .map(|i| {
            let tag = tags[rng.gen_range(0..tags.len())];
            let rel = if heads[i] == 0 { "root" } else { "dep" };
            Token::new(i + 1, &format!("t{}", i + 1), tag, heads[i], rel)
        })
        .collect();
    Sentence::new(tokens)
}
