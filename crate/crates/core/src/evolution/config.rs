use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Genetic-algorithm hyperparameters, readable from a flat `key = value`
/// file.
#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionConfig {
    pub population_size: usize,
    pub generations: usize,
    pub k_best: usize,
    pub p_mutate: f64,
    pub p_mutate_gene: f64,
    pub p_crossover: f64,
    /// Subtracted from `p_mutate` and `p_crossover` after every generation.
    pub decay: f64,
    pub crossover_points: usize,
    pub weight_f1: f64,
    pub weight_compression: f64,
    pub seed: u64,
    pub chunker_epochs: usize,
    pub best_epoch: bool,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            population_size: 100,
            generations: 4,
            k_best: 5,
            p_mutate: 0.5,
            p_mutate_gene: 0.05,
            p_crossover: 0.5,
            decay: 0.1,
            crossover_points: 1,
            weight_f1: 1.0,
            weight_compression: 0.5,
            seed: 0,
            chunker_epochs: 5,
            best_epoch: true,
        }
    }
}

const KEYS: &[&str] = &[
    "population_size",
    "generations",
    "k_best",
    "p_mutate",
    "p_mutate_gene",
    "p_crossover",
    "decay",
    "crossover_points",
    "weight_f1",
    "weight_compression",
    "seed",
    "chunker_epochs",
    "best_epoch",
];

impl EvolutionConfig {
    /// Overrides defaults with the keys present in `text`. Blank lines and
    /// lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = EvolutionConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(lineno, "expected key = value"))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|msg| Error::config(lineno, msg))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Sets one key; the error is a message for the caller to locate.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
            v.parse()
                .map_err(|_| format!("invalid value '{}' for {}", v, key))
        }
        match key {
            "population_size" => self.population_size = num(key, value)?,
            "generations" => self.generations = num(key, value)?,
            "k_best" => self.k_best = num(key, value)?,
            "p_mutate" => self.p_mutate = num(key, value)?,
            "p_mutate_gene" => self.p_mutate_gene = num(key, value)?,
            "p_crossover" => self.p_crossover = num(key, value)?,
            "decay" => self.decay = num(key, value)?,
            "crossover_points" => self.crossover_points = num(key, value)?,
            "weight_f1" => self.weight_f1 = num(key, value)?,
            "weight_compression" => self.weight_compression = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "chunker_epochs" => self.chunker_epochs = num(key, value)?,
            "best_epoch" => self.best_epoch = num(key, value)?,
            _ => {
                return Err(format!(
                    "unknown key '{}' (known: {})",
                    key,
                    KEYS.join(", ")
                ))
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::config(0, m));
        for (name, p) in [
            ("p_mutate", self.p_mutate),
            ("p_mutate_gene", self.p_mutate_gene),
            ("p_crossover", self.p_crossover),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{} must be in [0, 1], got {}", name, p));
            }
        }
        if !(self.decay >= 0.0) {
            return bad(format!("decay must be non-negative, got {}", self.decay));
        }
        if self.population_size == 0 {
            return bad("population_size must be at least 1".into());
        }
        if self.k_best == 0 || self.k_best > self.population_size {
            return bad(format!(
                "k_best must be in [1, population_size], got {}",
                self.k_best
            ));
        }
        if self.crossover_points == 0 {
            return bad("crossover_points must be at least 1".into());
        }
        if self.chunker_epochs == 0 {
            return bad("chunker_epochs must be at least 1".into());
        }
        Ok(())
    }

    /// The config in the same `key = value` form `parse` reads.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| writeln!(out, "{} = {}", k, v).unwrap();
        put("population_size", self.population_size.to_string());
        put("generations", self.generations.to_string());
        put("k_best", self.k_best.to_string());
        put("p_mutate", self.p_mutate.to_string());
        put("p_mutate_gene", self.p_mutate_gene.to_string());
        put("p_crossover", self.p_crossover.to_string());
        put("decay", self.decay.to_string());
        put("crossover_points", self.crossover_points.to_string());
        put("weight_f1", self.weight_f1.to_string());
        put("weight_compression", self.weight_compression.to_string());
        put("seed", self.seed.to_string());
        put("chunker_epochs", self.chunker_epochs.to_string());
        put("best_epoch", self.best_epoch.to_string());
        out
    }
}
