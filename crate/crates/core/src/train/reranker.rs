use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::adam::Adam;
use super::loss::{bce_reranker_loss, sigmoid};
use super::negatives::{sample_negatives, SectionRef};
use super::retriever::{corpus_section_features, train_dual, DualItem, TRAIN_STREAM};
use super::{assemble_batches, labeled_pairs, str_enum, Hyperparams, LabeledPair, NegativeStrategy, TrainError, TrainLog};
use crate::corpus::{Corpus, QRel, Query, Section};
use crate::encoder::{EncoderBackend, HashEncoder};
use crate::index::Index;
use crate::rerank::{combine_pair, pair_query_features, Reranker, RerankerParams};
use crate::tokenize::{hash_features, tokenize_section, FeatureVector};

/// Reranker training objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RerankObjective {
    /// Query paired with each section individually, binary cross-entropy.
    SectionBce,
    /// Sections as retrieval units under the in-batch contrastive loss.
    Contrastive,
    /// Query paired with windows of consecutive sections of the gold
    /// document, binary cross-entropy; a window is positive when it contains
    /// the gold section.
    DocumentBce,
}

str_enum!(RerankObjective { SectionBce => "section_bce", Contrastive => "contrastive", DocumentBce => "document_bce" });

/// Sections per training window under [`RerankObjective::DocumentBce`].
pub const DOCUMENT_WINDOW: usize = 2;

/// Retriever used to mine `top_k` negatives.
#[derive(Clone, Copy)]
pub struct RetrievalContext<'a> {
    pub backend: &'a dyn EncoderBackend,
    pub index: &'a Index,
}

/// Trains a section reranker on (query, gold section) pairs.
///
/// `retrieval` is required for [`NegativeStrategy::TopK`] and ignored
/// otherwise. Negative strategies apply to [`RerankObjective::SectionBce`];
/// the contrastive objective always uses in-batch negatives and the
/// document objective always uses the gold document's other windows.
pub fn train_reranker(
    corpus: &Corpus,
    queries: &[Query],
    qrels: &[QRel],
    hp: &Hyperparams,
    retrieval: Option<RetrievalContext<'_>>,
) -> Result<(Reranker, TrainLog), TrainError> {
    hp.validate()?;
    let pairs: Vec<LabeledPair> = labeled_pairs(corpus, queries, qrels)?
        .into_iter()
        .filter(|p| p.section.is_some())
        .collect();
    if pairs.is_empty() {
        return Err(TrainError::Data("reranker training needs section-level labels".into()));
    }
    let f = hp.features;
    match hp.objective {
        RerankObjective::Contrastive => {
            let qfeats: Vec<FeatureVector> =
                queries.par_iter().map(|q| hash_features(&crate::tokenize::tokenize_query(q), f)).collect();
            let (sfeats, offsets) = corpus_section_features(corpus, f);
            let items: Vec<DualItem> = pairs
                .iter()
                .map(|p| DualItem { query: p.query, sections: vec![offsets[p.doc] + p.section.unwrap()], key: p.doc })
                .collect();
            let mut enc = HashEncoder::new(f, hp.d_emb, hp.seed);
            let log = train_dual(&mut enc, &items, &qfeats, &sfeats, hp, None)?;
            Ok((Reranker::SectionEncoder(enc), log))
        }
        RerankObjective::SectionBce => {
            let qfeats: Vec<FeatureVector> = queries.par_iter().map(|q| pair_query_features(q, f)).collect();
            let (sfeats, offsets) = corpus_section_features(corpus, f);
            let retrieved = match hp.negative_strategy {
                NegativeStrategy::TopK => {
                    let ctx = retrieval.ok_or_else(|| TrainError::Data("top_k negatives need a retrieval index".into()))?;
                    Some(retrieve_pools(corpus, queries, &pairs, ctx, hp.top_k_pool)?)
                }
                _ => None,
            };
            let positive = |p: &LabeledPair| SectionRef { doc: p.doc, section: p.section.unwrap() };
            let examples = |batch: &[usize], k: usize| -> Result<Vec<(FeatureVector, f64)>, TrainError> {
                let p = &pairs[batch[k]];
                let pos = positive(p);
                let batch_pos: Vec<SectionRef> = batch.iter().map(|&i| positive(&pairs[i])).collect();
                let pool = retrieved.as_ref().map(|r| r[batch[k]].as_slice());
                let negs = sample_negatives(hp.negative_strategy, corpus, pos, &batch_pos, pool)?;
                let fq = &qfeats[p.query];
                let feat = |r: SectionRef| combine_pair(fq, &sfeats[offsets[r.doc] + r.section]);
                let mut out = vec![(feat(pos), 1.0)];
                out.extend(negs.into_iter().map(|r| (feat(r), 0.0)));
                Ok(out)
            };
            let (params, log) = train_classifier(hp, pairs.len(), |i| pairs[i].doc, examples)?;
            Ok((Reranker::Classifier(params), log))
        }
        RerankObjective::DocumentBce => {
            let qfeats: Vec<FeatureVector> = queries.par_iter().map(|q| pair_query_features(q, f)).collect();
            let windows = document_windows(corpus, f);
            let examples = |batch: &[usize], k: usize| -> Result<Vec<(FeatureVector, f64)>, TrainError> {
                let p = &pairs[batch[k]];
                let gold = p.section.unwrap();
                let fq = &qfeats[p.query];
                Ok(windows[p.doc]
                    .iter()
                    .map(|(range, fs)| (combine_pair(fq, fs), if range.contains(&gold) { 1.0 } else { 0.0 }))
                    .collect())
            };
            let (params, log) = train_classifier(hp, pairs.len(), |i| pairs[i].doc, examples)?;
            Ok((Reranker::Classifier(params), log))
        }
    }
}

/// Per document: each window of up to [`DOCUMENT_WINDOW`] consecutive
/// sections, merged into one section, with the section indices it covers.
fn document_windows(corpus: &Corpus, f: usize) -> Vec<Vec<(std::ops::Range<usize>, FeatureVector)>> {
    corpus
        .docs()
        .par_iter()
        .map(|d| {
            let n = d.sections.len();
            let count = n.saturating_sub(DOCUMENT_WINDOW) + 1;
            (0..count)
                .map(|start| {
                    let range = start..(start + DOCUMENT_WINDOW).min(n);
                    let merged = Section {
                        section_id: String::new(),
                        heading: d.sections[range.clone()].iter().map(|s| s.heading.as_str()).collect::<Vec<_>>().join(" "),
                        segments: d.sections[range.clone()].iter().flat_map(|s| s.segments.clone()).collect(),
                    };
                    (range, hash_features(&tokenize_section(&merged), f))
                })
                .collect()
        })
        .collect()
}

/// Corpus positions of the top-`pool` documents retrieved for each pair's
/// query.
pub fn retrieve_pools(
    corpus: &Corpus,
    queries: &[Query],
    pairs: &[LabeledPair],
    ctx: RetrievalContext<'_>,
    pool: usize,
) -> Result<Vec<Vec<usize>>, TrainError> {
    let mut cache: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut out = Vec::with_capacity(pairs.len());
    for p in pairs {
        if let Some(hit) = cache.get(&p.query) {
            out.push(hit.clone());
            continue;
        }
        let zq = ctx.backend.encode_query(&queries[p.query]).map_err(|e| TrainError::Data(format!("encoding query: {e}")))?;
        let hits = ctx.index.search(&zq, pool).map_err(|e| TrainError::Data(format!("retrieval: {e}")))?;
        let docs = hits
            .iter()
            .map(|(id, _)| corpus.position(id).ok_or_else(|| TrainError::Data(format!("index names unknown document {id:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        cache.insert(p.query, docs.clone());
        out.push(docs);
    }
    Ok(out)
}

/// Grouped-BCE training of the logistic pair classifier. `examples(batch, k)`
/// yields the labeled pair features of batch item `k`; each item's examples
/// form one group weighted `1/(B·S_k)`.
fn train_classifier<E>(
    hp: &Hyperparams,
    num_items: usize,
    key: impl Fn(usize) -> usize,
    examples: E,
) -> Result<(RerankerParams, TrainLog), TrainError>
where
    E: Fn(&[usize], usize) -> Result<Vec<(FeatureVector, f64)>, TrainError> + Sync,
{
    let width = 3 * hp.features;
    // Flat parameters: weights followed by the bias.
    let mut params = vec![0f32; width + 1];
    let mut grad = vec![0f32; width + 1];
    let mut opt = Adam::new(width + 1, hp.lr);
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    rng.set_stream(TRAIN_STREAM);
    let mut log = TrainLog::default();

    for _ in 0..hp.epochs {
        let mut order: Vec<usize> = (0..num_items).collect();
        order.shuffle(&mut rng);
        let batches = assemble_batches(&order, &key, hp.batch_size);
        let (mut total, mut counted) = (0.0, 0usize);
        for batch in batches {
            let groups: Vec<Vec<(FeatureVector, f64)>> =
                (0..batch.len()).into_par_iter().map(|k| examples(&batch, k)).collect::<Result<_, _>>()?;
            let logits: Vec<Vec<f64>> = groups
                .par_iter()
                .map(|g| {
                    g.iter()
                        .map(|(x, _)| {
                            x.entries.iter().map(|&(i, c)| params[i as usize] as f64 * c as f64).sum::<f64>()
                                + params[width] as f64
                        })
                        .collect()
                })
                .collect();
            let scores: Vec<Vec<f64>> = logits.iter().map(|l| l.iter().map(|&z| sigmoid(z)).collect()).collect();
            let labels: Vec<Vec<f64>> = groups.iter().map(|g| g.iter().map(|(_, y)| *y).collect()).collect();
            let (loss, _) = bce_reranker_loss(&scores, &labels, hp.bce_eps)?;

            // dL/dz = w·(σ(z) − y): the score gradient chained through σ.
            grad.fill(0.0);
            let b = batch.len() as f64;
            for (g, s) in groups.iter().zip(&scores) {
                let w = 1.0 / (b * g.len() as f64);
                for ((x, y), &p) in g.iter().zip(s) {
                    let dz = w * (p - y);
                    for &(i, c) in &x.entries {
                        grad[i as usize] += (dz * c as f64) as f32;
                    }
                    grad[width] += dz as f32;
                }
            }
            opt.step(&mut params, &grad);
            log.steps += 1;
            total += loss;
            counted += 1;
        }
        log.epoch_losses.push(if counted > 0 { total / counted as f64 } else { 0.0 });
    }
    let b = params[width];
    params.truncate(width);
    Ok((RerankerParams { features: hp.features, w: params, b, seed: hp.seed }, log))
}
