//! Top-k reranker negatives against a brute-force enumeration.

use interdoc::encoder::{EncoderBackend, HashEncoder};
use interdoc::eval::{gen_synthetic, SynthConfig};
use interdoc::index::build_index;
use interdoc::train::{labeled_pairs, retrieve_pools, sample_negatives, NegativeStrategy, RetrievalContext, SectionRef};

#[test]
fn top_k_negatives_match_enumerated_pool() {
    let cfg = SynthConfig { num_docs: 120, queries_per_split: 60, seed: 8, ..Default::default() };
    let data = gen_synthetic(&cfg);
    let enc = HashEncoder::new(2048, 16, 8);
    let (index, _) = build_index(&data.corpus, &enc, None, 0).unwrap();
    let (queries, corpus) = (&data.train.queries, &data.corpus);
    let pairs = labeled_pairs(corpus, queries, &data.train.qrels).unwrap();
    let ctx = RetrievalContext { backend: &enc, index: &index };
    let pools = retrieve_pools(corpus, queries, &pairs, ctx, 25).unwrap();

    for (p, pool) in pairs.iter().zip(&pools) {
        // Oracle: cosine against every index row, best first, ties by id.
        let zq = enc.encode_query(&queries[p.query]).unwrap();
        let norm = |v: &[f32]| v.iter().map(|&x| (x as f64).powi(2)).sum::<f64>().sqrt();
        let mut scored: Vec<(f64, &str, usize)> = (0..index.len())
            .map(|i| {
                let row = index.row(i);
                let dot: f64 = row.iter().zip(&zq).map(|(&a, &b)| a as f64 * b as f64).sum();
                let id = index.doc_ids()[i].as_str();
                (dot / (norm(row) * norm(&zq)), id, corpus.position(id).unwrap())
            })
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
        let pos = SectionRef { doc: p.doc, section: p.section.unwrap() };
        let mut expected: Vec<SectionRef> = scored[..25]
            .iter()
            .flat_map(|&(_, _, d)| (0..corpus.docs()[d].sections.len()).map(move |section| SectionRef { doc: d, section }))
            .filter(|r| *r != pos)
            .collect();
        let mut got = sample_negatives(NegativeStrategy::TopK, corpus, pos, &[pos], Some(pool)).unwrap();
        expected.sort();
        got.sort();
        assert_eq!(got, expected, "query {}", queries[p.query].query_id);
    }
}
