//! Chunk-rule extraction and evolutionary rule selection over Universal
//! Dependencies treebanks, plus dependency parsing as sequence labelling.

pub mod annotate;
pub mod chunker;
pub mod depenc;
pub mod error;
pub mod evolution;
pub mod experiment;
pub mod extract;
pub mod features;
pub mod perceptron;
pub mod ruleset;
pub mod synthetic;
pub mod tagger;
pub mod treebank;

#[cfg(test)]
mod fixtures;

pub use error::{Error, Result};
