use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::adam::Adam;
use super::loss::contrastive_loss;
use super::{assemble_batches, labeled_pairs, Hyperparams, TrainError, TrainLog};
use crate::corpus::{Corpus, QRel, Query};
use crate::encoder::HashEncoder;
use crate::index::pick_sections;
use crate::tokenize::{hash_features, tokenize_query, tokenize_section, FeatureVector};

/// RNG stream used for shuffling and section sampling; stream 0 of the same
/// seed initializes the weights.
pub(super) const TRAIN_STREAM: u64 = 1;

/// `W · fv` in f64 for a bucket-major matrix with rows of width `d`.
pub fn encode_dense(w: &[f32], d: usize, fv: &FeatureVector) -> Vec<f64> {
    let mut z = vec![0f64; d];
    for &(b, c) in &fv.entries {
        let row = &w[b as usize * d..(b as usize + 1) * d];
        for (zi, &wi) in z.iter_mut().zip(row) {
            *zi += c as f64 * wi as f64;
        }
    }
    z
}

/// Adds `scale · c · g` to row `b` of `grad` for every entry `(b, c)` of `fv`.
fn scatter(grad: &mut [f32], d: usize, fv: &FeatureVector, g: &[f64], scale: f64) {
    for &(b, c) in &fv.entries {
        let row = &mut grad[b as usize * d..(b as usize + 1) * d];
        let s = scale * c as f64;
        for (ri, gi) in row.iter_mut().zip(g) {
            *ri += (s * gi) as f32;
        }
    }
}

/// Features of every section in the corpus, flattened in corpus order, and
/// the offset of each document's first section.
pub(super) fn corpus_section_features(corpus: &Corpus, features: usize) -> (Vec<FeatureVector>, Vec<usize>) {
    let mut offsets = Vec::with_capacity(corpus.len() + 1);
    let mut total = 0;
    for d in corpus.docs() {
        offsets.push(total);
        total += d.sections.len();
    }
    offsets.push(total);
    let feats = corpus
        .docs()
        .par_iter()
        .flat_map_iter(|d| d.sections.iter().map(|s| hash_features(&tokenize_section(s), features)))
        .collect();
    (feats, offsets)
}

/// A contrastive training item: a query and the sections whose mean
/// embedding is its positive. `key` identifies the positive for batch
/// de-duplication.
pub(super) struct DualItem {
    pub query: usize,
    pub sections: Vec<usize>,
    pub key: usize,
}

/// Trains both projections of `enc` with the in-batch contrastive loss.
/// With `section_limit`, each positive is the mean of that many sections
/// sampled afresh every time the item is visited.
pub(super) fn train_dual(
    enc: &mut HashEncoder,
    items: &[DualItem],
    qfeats: &[FeatureVector],
    sfeats: &[FeatureVector],
    hp: &Hyperparams,
    section_limit: Option<usize>,
) -> Result<TrainLog, TrainError> {
    let d = enc.d_emb;
    let n = enc.features * d;
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    rng.set_stream(TRAIN_STREAM);
    let mut opt_q = Adam::new(n, hp.lr);
    let mut opt_s = Adam::new(n, hp.lr);
    let mut gq = vec![0f32; n];
    let mut gs = vec![0f32; n];
    let mut log = TrainLog::default();

    for _ in 0..hp.epochs {
        let mut order: Vec<usize> = (0..items.len()).collect();
        order.shuffle(&mut rng);
        let batches = assemble_batches(&order, |i| items[i].key, hp.batch_size);
        let (mut total, mut counted) = (0.0, 0usize);
        for batch in batches {
            let picks: Vec<Vec<usize>> = batch
                .iter()
                .map(|&i| {
                    let it = &items[i];
                    pick_sections(it.sections.len(), section_limit, &mut rng).into_iter().map(|k| it.sections[k]).collect()
                })
                .collect();
            // A single-item batch has loss 0 and no gradient.
            if batch.len() < 2 {
                continue;
            }
            let zq: Vec<Vec<f64>> = batch.par_iter().map(|&i| encode_dense(&enc.w_q, d, &qfeats[items[i].query])).collect();
            let zd: Vec<Vec<f64>> = picks
                .par_iter()
                .map(|p| {
                    let mut mean = vec![0f64; d];
                    for &s in p {
                        for (m, z) in mean.iter_mut().zip(encode_dense(&enc.w_s, d, &sfeats[s])) {
                            *m += z;
                        }
                    }
                    mean.iter_mut().for_each(|m| *m /= p.len() as f64);
                    mean
                })
                .collect();
            let (loss, dq, dd) = contrastive_loss(&zq, &zd)?;

            gq.fill(0.0);
            gs.fill(0.0);
            for (k, &i) in batch.iter().enumerate() {
                scatter(&mut gq, d, &qfeats[items[i].query], &dq[k], 1.0);
                let inv = 1.0 / picks[k].len() as f64;
                for &s in &picks[k] {
                    scatter(&mut gs, d, &sfeats[s], &dd[k], inv);
                }
            }
            opt_q.step(&mut enc.w_q, &gq);
            opt_s.step(&mut enc.w_s, &gs);
            log.steps += 1;
            total += loss;
            counted += 1;
        }
        log.epoch_losses.push(if counted > 0 { total / counted as f64 } else { 0.0 });
    }
    Ok(log)
}

/// Trains a fresh dual encoder on (query, gold document) pairs, each
/// document embedded as the mean of `sections_per_doc` sampled sections.
pub fn train_retriever(
    corpus: &Corpus,
    queries: &[Query],
    qrels: &[QRel],
    hp: &Hyperparams,
) -> Result<(HashEncoder, TrainLog), TrainError> {
    hp.validate()?;
    let pairs = labeled_pairs(corpus, queries, qrels)?;
    let qfeats: Vec<FeatureVector> = queries.par_iter().map(|q| hash_features(&tokenize_query(q), hp.features)).collect();
    let (sfeats, offsets) = corpus_section_features(corpus, hp.features);
    let items: Vec<DualItem> = pairs
        .iter()
        .map(|p| DualItem { query: p.query, sections: (offsets[p.doc]..offsets[p.doc + 1]).collect(), key: p.doc })
        .collect();
    let mut enc = HashEncoder::new(hp.features, hp.d_emb, hp.seed);
    let log = train_dual(&mut enc, &items, &qfeats, &sfeats, hp, Some(hp.sections_per_doc))?;
    Ok((enc, log))
}
