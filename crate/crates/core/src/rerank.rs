//! Query–section relevance scoring and section reranking.
//!
//! The default scorer is a logistic classifier over a three-block hashed pair
//! representation: query features, section features, and their overlap
//! (element-wise minimum of absolute counts). The overlap block is what lets
//! a linear model express query-dependent relevance.

use std::cmp::Ordering;

use thiserror::Error;

use crate::corpus::{Document, Query, Section};
use crate::encoder::{EncoderBackend, HashEncoder};
use crate::index::cosine;
use crate::tokenize::{hash_features, tokenize_query, tokenize_section, FeatureVector, EOQ, SEP};
use crate::train::loss::sigmoid;

#[derive(Debug, Error)]
pub enum RerankError {
    #[error("feature dimension mismatch: scorer expects {expected}, features have {actual}")]
    DimMismatch { expected: usize, actual: usize },
}

/// Logistic classifier weights over `3F` pair features.
#[derive(Debug, Clone, PartialEq)]
pub struct RerankerParams {
    pub features: usize,
    pub w: Vec<f32>,
    pub b: f32,
    pub seed: u64,
}

impl RerankerParams {
    /// All-zero weights: every pair scores 0.5.
    pub fn zeros(features: usize, seed: u64) -> Self {
        Self { features, w: vec![0.0; 3 * features], b: 0.0, seed }
    }

    pub fn logit(&self, x: &FeatureVector) -> Result<f64, RerankError> {
        if x.dim != self.w.len() {
            return Err(RerankError::DimMismatch { expected: self.w.len(), actual: x.dim });
        }
        Ok(x.entries.iter().map(|&(i, c)| self.w[i as usize] as f64 * c as f64).sum::<f64>() + self.b as f64)
    }
}

/// Query features as used inside a pair: `[EOQ]` becomes `[SEP]`.
pub fn pair_query_features(q: &Query, features: usize) -> FeatureVector {
    let mut ts = tokenize_query(q);
    if let Some(last) = ts.tokens.last_mut() {
        debug_assert_eq!(last, EOQ);
        *last = SEP.to_string();
    }
    hash_features(&ts, features)
}

/// Combines precomputed query-pair and section features into the `3F`
/// layout `[query | section | overlap]`.
pub fn combine_pair(fq: &FeatureVector, fs: &FeatureVector) -> FeatureVector {
    assert_eq!(fq.dim, fs.dim);
    let f = fq.dim as u32;
    let mut entries = Vec::with_capacity(fq.entries.len() * 2 + fs.entries.len());
    entries.extend_from_slice(&fq.entries);
    entries.extend(fs.entries.iter().map(|&(b, c)| (b + f, c)));
    // Both lists are sorted by bucket; merge to find shared buckets.
    let (mut i, mut j) = (0, 0);
    while i < fq.entries.len() && j < fs.entries.len() {
        let (bq, cq) = fq.entries[i];
        let (bs, cs) = fs.entries[j];
        match bq.cmp(&bs) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                entries.push((bq + 2 * f, cq.abs().min(cs.abs())));
                i += 1;
                j += 1;
            }
        }
    }
    FeatureVector { dim: 3 * fq.dim, entries }
}

pub fn pair_features(q: &Query, s: &Section, features: usize) -> FeatureVector {
    combine_pair(&pair_query_features(q, features), &hash_features(&tokenize_section(s), features))
}

/// `σ(w·x + b)` for the pair `(q, s)`.
pub fn score_pair(params: &RerankerParams, q: &Query, s: &Section) -> Result<f64, RerankError> {
    Ok(sigmoid(params.logit(&pair_features(q, s, params.features))?))
}

/// A trained section scorer.
#[derive(Debug, Clone, PartialEq)]
pub enum Reranker {
    /// Pairwise logistic classifier (BCE-trained).
    Classifier(RerankerParams),
    /// Dual encoder over sections (contrastively trained); scores are
    /// `(1 + cos) / 2`.
    SectionEncoder(HashEncoder),
}

impl Reranker {
    pub fn features(&self) -> usize {
        match self {
            Reranker::Classifier(p) => p.features,
            Reranker::SectionEncoder(e) => e.features,
        }
    }

    /// Monotone relevance keys: the classifier's logit, or the section
    /// encoder's cosine (-1 for a zero embedding). Ranking uses these so that
    /// probabilities saturated to 1.0 still order correctly.
    pub fn raw_scores(&self, q: &Query, sections: &[&Section]) -> Vec<f64> {
        match self {
            Reranker::Classifier(p) => {
                let fq = pair_query_features(q, p.features);
                sections
                    .iter()
                    .map(|s| {
                        let x = combine_pair(&fq, &hash_features(&tokenize_section(s), p.features));
                        p.logit(&x).expect("pair width matches params")
                    })
                    .collect()
            }
            Reranker::SectionEncoder(enc) => {
                let zq = enc.encode_query(q).expect("hash encoder is infallible");
                sections
                    .iter()
                    .map(|s| {
                        let zs = enc.encode_sections(std::slice::from_ref(*s)).expect("hash encoder is infallible");
                        cosine(&zq, &zs[0]).unwrap_or(-1.0)
                    })
                    .collect()
            }
        }
    }

    /// Maps a raw key to a relevance probability in [0, 1].
    pub fn probability(&self, raw: f64) -> f64 {
        match self {
            Reranker::Classifier(_) => sigmoid(raw),
            Reranker::SectionEncoder(_) => (1.0 + raw) / 2.0,
        }
    }

    /// Relevance probability of every section against one query.
    pub fn score_sections(&self, q: &Query, sections: &[&Section]) -> Vec<f64> {
        self.raw_scores(q, sections).into_iter().map(|r| self.probability(r)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedSection {
    pub doc_id: String,
    pub section_id: String,
    pub score: f64,
}

/// Scores all sections of all `docs` and sorts by relevance descending (raw
/// key, see [`Reranker::raw_scores`]), ties by
/// `(doc_id, section_id)` ascending.
pub fn rerank_sections(reranker: &Reranker, q: &Query, docs: &[&Document]) -> Vec<RankedSection> {
    let sections: Vec<(&Document, &Section)> =
        docs.iter().flat_map(|d| d.sections.iter().map(move |s| (*d, s))).collect();
    let refs: Vec<&Section> = sections.iter().map(|(_, s)| *s).collect();
    let raw = reranker.raw_scores(q, &refs);
    let mut keyed: Vec<(f64, RankedSection)> = sections
        .iter()
        .zip(raw)
        .map(|((d, s), r)| {
            let score = reranker.probability(r);
            (r, RankedSection { doc_id: d.doc_id.clone(), section_id: s.section_id.clone(), score })
        })
        .collect();
    keyed.sort_by(|(ra, a), (rb, b)| {
        rb.total_cmp(ra)
            .then_with(|| a.doc_id.cmp(&b.doc_id))
            .then_with(|| a.section_id.cmp(&b.section_id))
    });
    keyed.into_iter().map(|(_, r)| r).collect()
}

/// The highest-scoring section of a single document.
pub fn classify_gold_doc(reranker: &Reranker, q: &Query, doc: &Document) -> String {
    rerank_sections(reranker, q, &[doc]).swap_remove(0).section_id
}
