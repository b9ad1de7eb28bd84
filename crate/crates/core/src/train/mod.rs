//! Training: losses, optimizer, negative sampling, and the retriever and
//! reranker training loops.

pub mod adam;
pub mod checkpoint;
pub mod gradcheck;
pub mod loss;
pub mod negatives;
mod reranker;
mod retriever;

use std::collections::HashMap;

use thiserror::Error;

use crate::corpus::{Corpus, QRel, Query};

pub use negatives::{sample_negatives, NegativeStrategy, SectionRef};
pub use reranker::{retrieve_pools, train_reranker, RerankObjective, RetrievalContext};
pub use retriever::{encode_dense, train_retriever};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("embedding {0} has zero norm")]
    ZeroNormEmbedding(usize),
    #[error("document {0:?} has a single section; in-document negatives need at least two")]
    InsufficientNegatives(String),
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),
    #[error("training data: {0}")]
    Data(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    pub batch_size: usize,
    pub lr: f32,
    pub epochs: usize,
    /// Sections sampled per positive document during retriever training.
    pub sections_per_doc: usize,
    pub features: usize,
    pub d_emb: usize,
    pub seed: u64,
    pub negative_strategy: NegativeStrategy,
    pub top_k_pool: usize,
    pub bce_eps: f64,
    pub objective: RerankObjective,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            batch_size: 32,
            lr: 1e-3,
            epochs: 10,
            sections_per_doc: 4,
            features: 1 << 16,
            d_emb: 256,
            seed: 0,
            negative_strategy: NegativeStrategy::InDocument,
            top_k_pool: 25,
            bce_eps: loss::BCE_EPS,
            objective: RerankObjective::SectionBce,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::InvalidHyperparams(m.into()));
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return bad("lr must be finite and >= 0");
        }
        if self.sections_per_doc == 0 {
            return bad("sections_per_doc must be >= 1");
        }
        if self.features < 2 || !self.features.is_power_of_two() {
            return bad("features must be a power of two >= 2");
        }
        if self.d_emb < 2 {
            return bad("d_emb must be >= 2");
        }
        if self.top_k_pool == 0 {
            return bad("top_k_pool must be >= 1");
        }
        if !(self.bce_eps > 0.0 && self.bce_eps < 0.5) {
            return bad("bce_eps must be in (0, 0.5)");
        }
        Ok(())
    }
}

/// Per-epoch mean batch losses and the optimizer step count.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub epoch_losses: Vec<f64>,
    pub steps: u64,
}

/// One supervised (query, document, optional section) pair, by position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabeledPair {
    pub query: usize,
    pub doc: usize,
    pub section: Option<usize>,
}

/// Resolves qrels into positional pairs, in qrel order. Qrels for queries not
/// in `queries` are ignored; every query must have at least one qrel.
pub fn labeled_pairs(corpus: &Corpus, queries: &[Query], qrels: &[QRel]) -> Result<Vec<LabeledPair>, TrainError> {
    let qpos: HashMap<&str, usize> = queries.iter().enumerate().map(|(i, q)| (q.query_id.as_str(), i)).collect();
    let mut covered = vec![false; queries.len()];
    let mut pairs = Vec::new();
    for r in qrels {
        let Some(&query) = qpos.get(r.query_id.as_str()) else { continue };
        let doc = corpus
            .position(&r.doc_id)
            .ok_or_else(|| TrainError::Data(format!("qrel names unknown document {:?}", r.doc_id)))?;
        let section = match &r.section_id {
            Some(sid) => Some(
                corpus.docs()[doc]
                    .sections
                    .iter()
                    .position(|s| &s.section_id == sid)
                    .ok_or_else(|| TrainError::Data(format!("qrel names unknown section {}#{sid}", r.doc_id)))?,
            ),
            None => None,
        };
        covered[query] = true;
        pairs.push(LabeledPair { query, doc, section });
    }
    if let Some(i) = covered.iter().position(|c| !c) {
        return Err(TrainError::Data(format!("query {:?} has no relevance label", queries[i].query_id)));
    }
    Ok(pairs)
}

/// Groups `order` into batches of at most `size` items with distinct keys.
/// An item whose key already appears in the batch being filled is deferred
/// to a later batch, keeping relative order otherwise.
pub fn assemble_batches(order: &[usize], key: impl Fn(usize) -> usize, size: usize) -> Vec<Vec<usize>> {
    let mut pending: Vec<usize> = order.to_vec();
    let mut batches = Vec::new();
    while !pending.is_empty() {
        let mut batch = Vec::with_capacity(size);
        let mut keys = Vec::with_capacity(size);
        let mut rest = Vec::with_capacity(pending.len());
        for item in pending {
            let k = key(item);
            if batch.len() < size && !keys.contains(&k) {
                batch.push(item);
                keys.push(k);
            } else {
                rest.push(item);
            }
        }
        batches.push(batch);
        pending = rest;
    }
    batches
}

macro_rules! str_enum {
    ($ty:ident { $($variant:ident => $s:literal),+ $(,)? }) => {
        impl $ty {
            pub const ALL: &'static [$ty] = &[$($ty::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self { $($ty::$variant => $s),+ }
            }
        }

        impl ::std::fmt::Display for $ty {
            fn fmt(&self, f: &mut ::std::fmt::Formatter<'_>) -> ::std::fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl ::std::str::FromStr for $ty {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $($s => Ok($ty::$variant),)+
                    other => Err(format!("unknown {} {other:?}", stringify!($ty))),
                }
            }
        }
    };
}
pub(crate) use str_enum;
