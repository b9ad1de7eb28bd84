
use super::{str_enum, TrainError};
use crate::corpus::Corpus;

/// How reranker negatives are chosen for a labeled (query, section) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NegativeStrategy {
    /// The other sections of the gold document.
    InDocument,
    /// The positive sections of the other items in the batch.
    InBatch,
    /// Every section of the top retrieved documents except the labeled one.
    TopK,
}

str_enum!(NegativeStrategy { InDocument => "in_document", InBatch => "in_batch", TopK => "top_k" });

/// A section addressed by corpus position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SectionRef {
    pub doc: usize,
    pub section: usize,
}

/// Negatives for `positive`.
///
/// `batch` holds the positives of the whole batch (including `positive`);
/// `retrieved` holds the corpus positions of the documents retrieved for the
/// query, best first, already cut to the pool size.
pub fn sample_negatives(
    strategy: NegativeStrategy,
    corpus: &Corpus,
    positive: SectionRef,
    batch: &[SectionRef],
    retrieved: Option<&[usize]>,
) -> Result<Vec<SectionRef>, TrainError> {
    let doc = &corpus.docs()[positive.doc];
    match strategy {
        NegativeStrategy::InDocument => {
            if doc.sections.len() < 2 {
                return Err(TrainError::InsufficientNegatives(doc.doc_id.clone()));
            }
            Ok((0..doc.sections.len())
                .filter(|&s| s != positive.section)
                .map(|section| SectionRef { doc: positive.doc, section })
                .collect())
        }
        NegativeStrategy::InBatch => Ok(batch.iter().copied().filter(|r| *r != positive).collect()),
        NegativeStrategy::TopK => {
            let retrieved = retrieved
                .ok_or_else(|| TrainError::Data("top_k negatives need a retrieval index".into()))?;
            Ok(retrieved
                .iter()
                .flat_map(|&d| (0..corpus.docs()[d].sections.len()).map(move |section| SectionRef { doc: d, section }))
                .filter(|r| *r != positive)
                .collect())
        }
    }
}
