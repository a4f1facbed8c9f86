//! Node2Vec: biased second-order random walks fed to skip-gram with negative sampling.

mod alias;
mod skipgram;
mod walks;

pub use alias::AliasTable;
pub use skipgram::{train_skipgram, train_skipgram_with_stats, TrainStats};
pub use walks::{generate_walks, transition_weight, WalkGraph, WalkSet};

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::SocialGraph;

#[derive(Debug, Error, PartialEq)]
pub enum EmbedError {
    #[error("invalid node2vec config: {0}")]
    InvalidConfig(String),
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("walk set has no (center, context) pairs")]
    EmptyWalks,
    #[error("nodes {from} and {to} are not adjacent")]
    NotAnEdge { from: usize, to: usize },
    #[error("non-finite embedding value after epoch {epoch}")]
    NonFinite { epoch: usize },
    #[error("embedding file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Node2VecConfig {
    pub dimensions: usize,
    pub walk_length: usize,
    pub walks_per_node: usize,
    pub return_p: f64,
    pub in_out_q: f64,
    pub window: usize,
    pub negatives_per_positive: usize,
    pub epochs: usize,
    pub initial_lr: f64,
    pub seed: u64,
}

impl Default for Node2VecConfig {
    fn default() -> Self {
        Node2VecConfig {
            dimensions: 100,
            walk_length: 25,
            walks_per_node: 10,
            return_p: 0.3,
            in_out_q: 1.0,
            window: 10,
            negatives_per_positive: 5,
            epochs: 5,
            initial_lr: 0.025,
            seed: 0,
        }
    }
}

impl Node2VecConfig {
    pub fn validate(&self) -> Result<(), EmbedError> {
        let bad = |m: &str| Err(EmbedError::InvalidConfig(m.to_string()));
        if self.dimensions < 1 {
            return bad("dimensions must be >= 1");
        }
        if self.walk_length < 2 {
            return bad("walk_length must be >= 2");
        }
        if !(self.return_p > 0.0) || !(self.in_out_q > 0.0) {
            return bad("return_p and in_out_q must be > 0");
        }
        if self.window < 1 {
            return bad("window must be >= 1");
        }
        if !(self.initial_lr > 0.0) {
            return bad("initial_lr must be > 0");
        }
        Ok(())
    }
}

/// One embedding row per node, in node order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    ids: Vec<String>,
    dim: usize,
    values: Vec<f64>,
    index: HashMap<String, usize>,
}

impl EmbeddingMatrix {
    pub fn new(ids: Vec<String>, dim: usize, values: Vec<f64>) -> Self {
        assert_eq!(ids.len() * dim, values.len(), "embedding shape mismatch");
        let index = ids.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        EmbeddingMatrix {
            ids,
            dim,
            values,
            index,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.index.get(id).map(|&i| self.row(i))
    }

    pub fn cosine(&self, a: usize, b: usize) -> f64 {
        let (x, y) = (self.row(a), self.row(b));
        let dot: f64 = x.iter().zip(y).map(|(p, q)| p * q).sum();
        let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if nx == 0.0 || ny == 0.0 {
            0.0
        } else {
            dot / (nx * ny)
        }
    }

    /// Text format: `<node_count> <dim>` header, then `<id> <v1> ... <vdim>` per node.
    pub fn write(&self, path: &Path) -> Result<(), EmbedError> {
        let mut out = format!("{} {}\n", self.len(), self.dim);
        for (i, id) in self.ids.iter().enumerate() {
            out.push_str(id);
            for v in self.row(i) {
                write!(out, " {v:?}").unwrap();
            }
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| EmbedError::Format(format!("{}: {e}", path.display())))
    }

    pub fn read(path: &Path) -> Result<Self, EmbedError> {
        let text = fs::read_to_string(path).map_err(|e| EmbedError::Format(format!("{}: {e}", path.display())))?;
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| EmbedError::Format("missing header".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| EmbedError::Format("bad header".into())))
            .collect::<Result<_, _>>()?;
        let [count, dim] = dims[..] else {
            return Err(EmbedError::Format("header must be `<count> <dim>`".into()));
        };
        let mut ids = Vec::with_capacity(count);
        let mut values = Vec::with_capacity(count * dim);
        for (ln, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(' ');
            ids.push(parts.next().unwrap_or_default().to_string());
            let before = values.len();
            for p in parts {
                values.push(
                    p.parse::<f64>()
                        .map_err(|_| EmbedError::Format(format!("line {}: bad number", ln + 2)))?,
                );
            }
            if values.len() - before != dim {
                return Err(EmbedError::Format(format!("line {}: expected {dim} values", ln + 2)));
            }
        }
        if ids.len() != count {
            return Err(EmbedError::Format(format!("expected {count} rows, found {}", ids.len())));
        }
        Ok(EmbeddingMatrix::new(ids, dim, values))
    }
}

/// Walks then skip-gram.
pub fn embed(g: &SocialGraph, cfg: &Node2VecConfig) -> Result<EmbeddingMatrix, EmbedError> {
    let walks = generate_walks(g, cfg)?;
    train_skipgram(&walks, cfg)
}
