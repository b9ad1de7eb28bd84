//! Experiment runners: document retrieval, section reranking, granularity
//! and format comparisons, classification accuracy, and learning curves.

use std::collections::{HashMap, HashSet};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::metrics::{first_relevant_rank, mean, mrr_at_k, recall_at_k};
use super::report::{EvalReport, QueryRow};
use super::synth::SynthData;
use super::EvalError;
use crate::corpus::{Corpus, DocFormat, Document, QRel, Query, Section};
use crate::encoder::{EncoderBackend, HashEncoder};
use crate::index::{build_index, Index};
use crate::rerank::{classify_gold_doc, rerank_sections, Reranker};
use crate::train::{train_reranker, train_retriever, Hyperparams, RetrievalContext};

/// Default rerank pool: sections of this many top retrieved documents.
pub const RERANK_POOL: usize = 25;
/// Cut-offs reported for document retrieval.
pub const DOC_KS: [usize; 4] = [1, 10, 20, 100];
/// Cut-offs reported for section retrieval.
pub const SECTION_KS: [usize; 3] = [1, 10, 20];
const MRR_K: usize = 10;
/// RNG stream for learning-curve subsampling.
const SUBSAMPLE_STREAM: u64 = 2;

/// Identifier of a section across the corpus: `doc_id#section_id`.
pub fn section_key(doc_id: &str, section_id: &str) -> String {
    format!("{doc_id}#{section_id}")
}

/// Relevant document ids per query; every query must have one.
fn relevant_docs(queries: &[Query], qrels: &[QRel]) -> Result<Vec<HashSet<String>>, EvalError> {
    let mut by_query: HashMap<&str, HashSet<String>> = HashMap::new();
    for r in qrels {
        by_query.entry(&r.query_id).or_default().insert(r.doc_id.clone());
    }
    queries
        .iter()
        .map(|q| by_query.remove(q.query_id.as_str()).ok_or_else(|| EvalError::NoRelevant(q.query_id.clone())))
        .collect()
}

/// Relevant section keys per query; every query must have one.
fn relevant_sections(queries: &[Query], qrels: &[QRel]) -> Result<Vec<HashSet<String>>, EvalError> {
    let mut by_query: HashMap<&str, HashSet<String>> = HashMap::new();
    for r in qrels {
        if let Some(s) = &r.section_id {
            by_query.entry(&r.query_id).or_default().insert(section_key(&r.doc_id, s));
        }
    }
    queries
        .iter()
        .map(|q| by_query.remove(q.query_id.as_str()).ok_or_else(|| EvalError::NoRelevant(q.query_id.clone())))
        .collect()
}

/// Fills R@K for `ks` and MRR@10 from ranked id lists.
fn score_rankings(seed: u64, queries: &[Query], ranked: &[Vec<String>], relevant: &[HashSet<String>], ks: &[usize]) -> EvalReport {
    let mut report = EvalReport::new(seed);
    for &k in ks {
        let v: Vec<f64> = ranked.iter().zip(relevant).map(|(r, rel)| recall_at_k(r, rel, k)).collect();
        report.metrics.insert(format!("R@{k}"), mean(&v));
    }
    let mrr: Vec<f64> = ranked.iter().zip(relevant).map(|(r, rel)| mrr_at_k(r, rel, MRR_K)).collect();
    report.metrics.insert(format!("MRR@{MRR_K}"), mean(&mrr));
    report.per_query = queries
        .iter()
        .zip(ranked)
        .zip(relevant)
        .map(|((q, r), rel)| QueryRow { query_id: q.query_id.clone(), rank: first_relevant_rank(r, rel), top: r.first().cloned() })
        .collect();
    report
}

fn search_all(index: &Index, backend: &dyn EncoderBackend, queries: &[Query], k: usize) -> Result<Vec<Vec<(String, f64)>>, EvalError> {
    let zq = backend.encode_queries(queries)?;
    zq.par_iter().map(|z| index.search(z, k).map_err(EvalError::from)).collect()
}

/// Document retrieval: R@K for each `ks` and MRR@10.
pub fn run_document_eval(
    index: &Index,
    backend: &dyn EncoderBackend,
    queries: &[Query],
    qrels: &[QRel],
    ks: &[usize],
) -> Result<EvalReport, EvalError> {
    let relevant = relevant_docs(queries, qrels)?;
    let depth = ks.iter().copied().chain([MRR_K]).max().unwrap();
    let hits = search_all(index, backend, queries, depth)?;
    let ranked: Vec<Vec<String>> = hits.into_iter().map(|h| h.into_iter().map(|(id, _)| id).collect()).collect();
    Ok(score_rankings(0, queries, &ranked, &relevant, ks).with_config("mode", "document"))
}

/// Document retrieval followed by reranking every section of the top `pool`
/// documents; section R@{1,10,20} and MRR@10.
pub fn run_section_eval(
    index: &Index,
    backend: &dyn EncoderBackend,
    corpus: &Corpus,
    reranker: &Reranker,
    queries: &[Query],
    qrels: &[QRel],
    pool: usize,
) -> Result<EvalReport, EvalError> {
    let relevant = relevant_sections(queries, qrels)?;
    let hits = search_all(index, backend, queries, pool)?;
    let ranked: Vec<Vec<String>> = queries
        .par_iter()
        .zip(&hits)
        .map(|(q, h)| {
            let docs: Vec<&Document> = h
                .iter()
                .map(|(id, _)| corpus.get(id).ok_or_else(|| EvalError::Data(format!("index names unknown document {id:?}"))))
                .collect::<Result<_, _>>()?;
            Ok(rerank_sections(reranker, q, &docs).into_iter().map(|r| section_key(&r.doc_id, &r.section_id)).collect())
        })
        .collect::<Result<_, EvalError>>()?;
    Ok(score_rankings(0, queries, &ranked, &relevant, &SECTION_KS)
        .with_config("mode", "section")
        .with_config("pool", pool))
}

/// Each section as its own single-section document with id
/// `doc_id#section_id` (section id kept).
pub fn passage_corpus(corpus: &Corpus) -> Corpus {
    let docs = corpus
        .iter()
        .flat_map(|d| {
            d.sections.iter().map(move |s| Document {
                doc_id: section_key(&d.doc_id, &s.section_id),
                title: d.title.clone(),
                sections: vec![s.clone()],
            })
        })
        .collect();
    Corpus::new(docs).expect("passages of a valid corpus are valid")
}

/// Qrels re-targeted at passage documents; document-level qrels are dropped.
pub fn passage_qrels(qrels: &[QRel]) -> Vec<QRel> {
    qrels
        .iter()
        .filter_map(|r| {
            r.section_id.as_ref().map(|s| QRel { query_id: r.query_id.clone(), doc_id: section_key(&r.doc_id, s), section_id: Some(s.clone()) })
        })
        .collect()
}

/// Passage-level retrieval over a passage index. With a reranker, the top
/// `pool` passages are reranked; without one, the retrieval order is used.
pub fn run_passage_eval(
    passage_index: &Index,
    backend: &dyn EncoderBackend,
    passages: &Corpus,
    reranker: Option<&Reranker>,
    queries: &[Query],
    qrels: &[QRel],
    pool: usize,
) -> Result<EvalReport, EvalError> {
    // Passage qrels already name passages (`doc_id#section_id`) as documents.
    let relevant = relevant_docs(queries, qrels)?;
    let depth = match reranker {
        Some(_) => pool,
        None => SECTION_KS.iter().copied().chain([MRR_K]).max().unwrap(),
    };
    let hits = search_all(passage_index, backend, queries, depth)?;
    let ranked: Vec<Vec<String>> = match reranker {
        None => hits.into_iter().map(|h| h.into_iter().map(|(id, _)| id).collect()).collect(),
        Some(rr) => queries
            .par_iter()
            .zip(&hits)
            .map(|(q, h)| {
                let docs: Vec<&Document> = h
                    .iter()
                    .map(|(id, _)| passages.get(id).ok_or_else(|| EvalError::Data(format!("unknown passage {id:?}"))))
                    .collect::<Result<_, _>>()?;
                Ok(rerank_sections(rr, q, &docs).into_iter().map(|r| r.doc_id).collect())
            })
            .collect::<Result<_, EvalError>>()?,
    };
    Ok(score_rankings(0, queries, &ranked, &relevant, &SECTION_KS)
        .with_config("mode", if reranker.is_some() { "passage_rerank" } else { "passage" })
        .with_config("pool", depth))
}

/// Section classification within the gold document: Acc@1.
pub fn run_classify_eval(reranker: &Reranker, corpus: &Corpus, queries: &[Query], qrels: &[QRel]) -> Result<EvalReport, EvalError> {
    let by_id: HashMap<&str, &Query> = queries.iter().map(|q| (q.query_id.as_str(), q)).collect();
    let labeled: Vec<(&Query, &QRel)> =
        qrels.iter().filter(|r| r.section_id.is_some()).filter_map(|r| by_id.get(r.query_id.as_str()).map(|q| (*q, r))).collect();
    if labeled.is_empty() {
        return Err(EvalError::Data("no section-level labels to classify".into()));
    }
    let rows: Vec<(QueryRow, f64)> = labeled
        .par_iter()
        .map(|(q, r)| {
            let doc = corpus.get(&r.doc_id).ok_or_else(|| EvalError::Data(format!("unknown document {:?}", r.doc_id)))?;
            let pick = classify_gold_doc(reranker, q, doc);
            let hit = Some(&pick) == r.section_id.as_ref();
            Ok((
                QueryRow { query_id: q.query_id.clone(), rank: hit.then_some(1), top: Some(section_key(&r.doc_id, &pick)) },
                if hit { 1.0 } else { 0.0 },
            ))
        })
        .collect::<Result<_, EvalError>>()?;
    let mut report = EvalReport::new(0).with_config("mode", "classify");
    report.metrics.insert("Acc@1".into(), mean(&rows.iter().map(|r| r.1).collect::<Vec<_>>()));
    report.per_query = rows.into_iter().map(|r| r.0).collect();
    Ok(report)
}

/// Retrieval-only qrels (section labels removed), for document views whose
/// section ids no longer match the original document.
pub fn document_qrels(qrels: &[QRel]) -> Vec<QRel> {
    qrels.iter().map(|r| QRel { section_id: None, ..r.clone() }).collect()
}

/// Trains a retriever on the train split of `corpus` and indexes all
/// sections of every document.
pub fn train_and_index(corpus: &Corpus, queries: &[Query], qrels: &[QRel], hp: &Hyperparams) -> Result<(HashEncoder, Index), EvalError> {
    let (enc, _) = train_retriever(corpus, queries, &document_qrels(qrels), hp)?;
    let (index, _) = build_index(corpus, &enc, None, hp.seed)?;
    Ok((enc, index))
}

/// One retriever per document view, each trained on the train split and
/// evaluated on the test split; rows sorted by MRR@10 descending.
pub fn run_format_ablation(data: &SynthData, formats: &[DocFormat], hp: &Hyperparams) -> Result<Vec<(DocFormat, EvalReport)>, EvalError> {
    let mut rows = Vec::with_capacity(formats.len());
    for &fmt in formats {
        let corpus = data.corpus.with_format(fmt);
        let (enc, index) = train_and_index(&corpus, &data.train.queries, &data.train.qrels, hp)?;
        let report = run_document_eval(&index, &enc, &data.test.queries, &document_qrels(&data.test.qrels), &DOC_KS)?;
        let mut report = report.with_config("format", fmt);
        report.seed = hp.seed;
        rows.push((fmt, report));
    }
    rows.sort_by(|a, b| b.1.metric("MRR@10").total_cmp(&a.1.metric("MRR@10")));
    Ok(rows)
}

/// Trains a reranker on the train split; `top_k` negatives use `doc`.
pub fn train_split_reranker(
    data: &SynthData,
    hp: &Hyperparams,
    doc: (&HashEncoder, &Index),
) -> Result<Reranker, EvalError> {
    let ctx = RetrievalContext { backend: doc.0, index: doc.1 };
    let (rr, _) = train_reranker(&data.corpus, &data.train.queries, &data.train.qrels, hp, Some(ctx))?;
    Ok(rr)
}

/// Section retrieval at two granularities on the test split: passages
/// (every section its own retrieval unit) without and with reranking, and
/// document retrieval followed by reranking. Rows are named `passage*`,
/// `passage` and `document`.
pub fn run_granularity(
    data: &SynthData,
    doc: (&HashEncoder, &Index),
    reranker: &Reranker,
    passage_hp: &Hyperparams,
    pool: usize,
) -> Result<Vec<(String, EvalReport)>, EvalError> {
    let passages = passage_corpus(&data.corpus);
    let train_qrels = passage_qrels(&data.train.qrels);
    let test_qrels = passage_qrels(&data.test.qrels);
    let (penc, pindex) = train_and_index(&passages, &data.train.queries, &train_qrels, passage_hp)?;
    let q = &data.test.queries;
    let plain = run_passage_eval(&pindex, &penc, &passages, None, q, &test_qrels, pool)?;
    let reranked = run_passage_eval(&pindex, &penc, &passages, Some(reranker), q, &test_qrels, pool)?;
    let document = run_section_eval(doc.1, doc.0, &data.corpus, reranker, q, &data.test.qrels, pool)?;
    Ok(vec![("passage*".into(), plain), ("passage".into(), reranked), ("document".into(), document)])
}

/// Positions of the training queries kept at `ratio`: all of them, in
/// order, for ratio 1; otherwise a seeded sample, kept in original order.
pub fn subsample_positions(n: usize, ratio: f64, seed: u64) -> Vec<usize> {
    assert!(ratio > 0.0 && ratio <= 1.0, "ratio must be in (0, 1]");
    let keep = ((n as f64 * ratio).ceil() as usize).clamp(1, n.max(1));
    if keep >= n {
        return (0..n).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SUBSAMPLE_STREAM);
    let mut picks = sample(&mut rng, n, keep).into_vec();
    picks.sort_unstable();
    picks
}

/// Document retrieval quality as a function of the fraction of training
/// queries used.
pub fn learning_curve(data: &SynthData, ratios: &[f64], hp: &Hyperparams) -> Result<Vec<(f64, EvalReport)>, EvalError> {
    ratios
        .iter()
        .map(|&ratio| {
            let keep = subsample_positions(data.train.queries.len(), ratio, hp.seed);
            let queries: Vec<Query> = keep.iter().map(|&i| data.train.queries[i].clone()).collect();
            let kept: HashSet<&str> = queries.iter().map(|q| q.query_id.as_str()).collect();
            let qrels: Vec<QRel> = data.train.qrels.iter().filter(|r| kept.contains(r.query_id.as_str())).cloned().collect();
            let (enc, index) = train_and_index(&data.corpus, &queries, &qrels, hp)?;
            let mut report = run_document_eval(&index, &enc, &data.test.queries, &document_qrels(&data.test.qrels), &DOC_KS)?
                .with_config("ratio", ratio)
                .with_config("train_queries", queries.len());
            report.seed = hp.seed;
            Ok((ratio, report))
        })
        .collect()
}

/// A single-section document used when a caller needs sections as units.
pub fn section_as_document(doc_id: &str, title: &str, section: &Section) -> Document {
    Document { doc_id: section_key(doc_id, &section.section_id), title: title.to_string(), sections: vec![section.clone()] }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Segment;

    fn doc(id: &str, n: usize) -> Document {
        Document {
            doc_id: id.into(),
            title: id.into(),
            sections: (0..n).map(|i| Section { section_id: format!("s{i}"), heading: String::new(), segments: vec![Segment::text(format!("t{i}"))] }).collect(),
        }
    }

    /// Embeds queries as fixed vectors keyed by query text.
    struct Fixed(HashMap<String, Vec<f32>>, usize);

    impl EncoderBackend for Fixed {
        fn dim(&self) -> usize {
            self.1
        }
        fn encode_query(&self, q: &Query) -> Result<Vec<f32>, crate::encoder::EncodeError> {
            Ok(self.0[&q.text].clone())
        }
        fn encode_sections(&self, s: &[Section]) -> Result<Vec<Vec<f32>>, crate::encoder::EncodeError> {
            Ok(s.iter().map(|_| vec![1.0; self.1]).collect())
        }
    }

    #[test]
    fn perfect_index_gives_full_recall() {
        let n = 4;
        let entries = (0..n).map(|i| (format!("d{i}"), (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())).collect();
        let index = Index::from_rows(n, entries).unwrap();
        let queries: Vec<Query> = (0..n).map(|i| Query::text(format!("q{i}"), format!("text{i}"))).collect();
        let qrels: Vec<QRel> = (0..n).map(|i| QRel { query_id: format!("q{i}"), doc_id: format!("d{i}"), section_id: None }).collect();
        let backend = Fixed((0..n).map(|i| (format!("text{i}"), (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())).collect(), n);
        let r = run_document_eval(&index, &backend, &queries, &qrels, &DOC_KS).unwrap();
        assert_eq!(r.metric("R@1"), 1.0);
        assert_eq!(r.metric("MRR@10"), 1.0);
        r.check_invariants().unwrap();
    }

    #[test]
    fn missing_relevance_rejected() {
        let index = Index::from_rows(2, vec![("d".into(), vec![1.0, 0.0])]).unwrap();
        let backend = Fixed([("x".to_string(), vec![1.0, 0.0])].into(), 2);
        let err = run_document_eval(&index, &backend, &[Query::text("q", "x")], &[], &[1]).unwrap_err();
        assert!(matches!(err, EvalError::NoRelevant(_)));
    }

    #[test]
    fn single_section_gold_doc_and_pool_one() {
        let corpus = Corpus::new(vec![doc("a", 1), doc("b", 3)]).unwrap();
        let index = Index::from_rows(2, vec![("a".into(), vec![1.0, 0.0]), ("b".into(), vec![0.0, 1.0])]).unwrap();
        let backend = Fixed([("x".to_string(), vec![1.0, 0.1])].into(), 2);
        let rr = Reranker::Classifier(crate::rerank::RerankerParams::zeros(64, 0));
        let q = [Query::text("q", "x")];
        let qrels = [QRel { query_id: "q".into(), doc_id: "a".into(), section_id: Some("s0".into()) }];
        let r = run_section_eval(&index, &backend, &corpus, &rr, &q, &qrels, 1).unwrap();
        assert_eq!(r.metric("R@1"), 1.0);
        // Pool of 1 ranks only the sections of the top document.
        assert_eq!(r.per_query[0].top.as_deref(), Some("a#s0"));
        let r2 = run_section_eval(&index, &backend, &corpus, &rr, &q, &qrels, 2).unwrap();
        assert_eq!(r2.metric("R@10"), 1.0);
    }

    #[test]
    fn passages_split_sections() {
        let corpus = Corpus::new(vec![doc("a", 2), doc("b", 1)]).unwrap();
        let p = passage_corpus(&corpus);
        let ids: Vec<&str> = p.iter().map(|d| d.doc_id.as_str()).collect();
        assert_eq!(ids, ["a#s0", "a#s1", "b#s0"]);
    }

    #[test]
    fn subsample_full_ratio_is_identity() {
        assert_eq!(subsample_positions(7, 1.0, 3), (0..7).collect::<Vec<_>>());
        let half = subsample_positions(10, 0.5, 3);
        assert_eq!(half.len(), 5);
        assert!(half.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(half, subsample_positions(10, 0.5, 3));
    }
}
