//! Retriever training on a corpus where every query shares a unique token
//! with exactly one document.

use interdoc::eval::runners::{document_qrels, run_document_eval};
use interdoc::eval::{gen_synthetic, SynthConfig};
use interdoc::index::build_index;
use interdoc::train::{train_retriever, Hyperparams};

#[test]
fn separable_corpus_is_learned() {
    // One document per entity: titles and templates never collide.
    let cfg = SynthConfig { num_docs: 80, queries_per_split: 80, docs_per_entity: 1, sections_per_doc: 4, seed: 3, ..Default::default() };
    let data = gen_synthetic(&cfg);
    let hp = Hyperparams { epochs: 30, lr: 1e-2, batch_size: 8, features: 4096, d_emb: 32, seed: 3, ..Default::default() };
    let qrels = document_qrels(&data.train.qrels);
    let (enc, log) = train_retriever(&data.corpus, &data.train.queries, &qrels, &hp).unwrap();
    assert_eq!(log.epoch_losses.len(), 30);
    assert!(log.epoch_losses[29] < log.epoch_losses[0], "{:?}", log.epoch_losses);
    let (index, _) = build_index(&data.corpus, &enc, None, 0).unwrap();
    let report = run_document_eval(&index, &enc, &data.train.queries, &qrels, &[1, 10]).unwrap();
    let mrr = report.metric("MRR@10");
    println!("train MRR@10 = {mrr:.3}");
    assert!(mrr >= 0.9, "train MRR@10 {mrr}");
}
