use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::treebank::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("sentence {sentence}: invalid tree ({})", join_violations(.violations))]
    InvalidTree {
        sentence: usize,
        violations: Vec<Violation>,
    },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("duplicate rule '{0}'")]
    DuplicateRule(String),

    #[error("invalid rule: {0}")]
    InvalidRule(String),

    #[error("degenerate ruleset: the full candidate set produces no chunks (r_all = {0})")]
    DegenerateRuleset(f64),

    #[error("empty training data")]
    EmptyTraining,

    #[error("empty treebank")]
    EmptyTreebank,

    #[error("length mismatch: {expected} vs {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("tokenization mismatch at token {token}")]
    TokenizationMismatch { token: usize },

    #[error("unsupported task '{task}': {reason}")]
    UnsupportedTask { task: String, reason: String },

    #[error("model: {0}")]
    Model(String),

    #[error("config{}: {message}", line_suffix(*line))]
    Config { line: usize, message: String },

    #[error("missing input: {0}")]
    Missing(String),

    #[error("evaluation failed: {0}")]
    Evaluation(String),
}

impl Error {
    pub fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub fn config(line: usize, message: impl Into<String>) -> Self {
        Error::Config {
            line,
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

fn join_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

fn line_suffix(line: usize) -> String {
    if line == 0 {
        String::new()
    } else {
        format!(" line {}", line)
    }
}
