//! The remote encoder client against an in-process stub service that
//! speaks the wire protocol with hash-based fake embeddings.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use interdoc::encoder::EncoderBackend;
use interdoc::eval::runners::{document_qrels, run_document_eval};
use interdoc::eval::{gen_synthetic, SynthConfig};
use interdoc::index::build_index;
use interdoc::remote::{sidecar_check, RemoteEncoder, RemoteError, WireItem};
use serde_json::{json, Value};

const DIM: usize = 24;

fn fake_embedding(item: &WireItem) -> Vec<f32> {
    let mut v = vec![0f32; DIM];
    let words = item.text.split_whitespace().chain(item.images.iter().map(String::as_str)).chain(item.tables.iter().map(String::as_str));
    for w in words {
        let mut h = DefaultHasher::new();
        w.to_lowercase().hash(&mut h);
        let x = h.finish();
        v[(x % DIM as u64) as usize] += if x >> 63 == 0 { 1.0 } else { -1.0 };
    }
    v
}

fn cos(a: &[f32], b: &[f32]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| (*x as f64) * (*y as f64)).sum();
    let n = |v: &[f32]| v.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
    if n(a) == 0.0 || n(b) == 0.0 {
        0.0
    } else {
        dot / (n(a) * n(b))
    }
}

/// Serves the three endpoints on an ephemeral port; with `bad_dim`, embed
/// responses declare the wrong width.
fn spawn_stub(bad_dim: bool) -> String {
    let server = tiny_http::Server::http("127.0.0.1:0").unwrap();
    let port = server.server_addr().to_ip().unwrap().port();
    std::thread::spawn(move || {
        for mut rq in server.incoming_requests() {
            let mut body = String::new();
            rq.as_reader().read_to_string(&mut body).unwrap();
            let (status, reply) = match rq.url() {
                "/v1/health" => (200, json!({ "status": "ok", "model": "stub", "dim": DIM })),
                "/v1/embed" => {
                    let req: Value = serde_json::from_str(&body).unwrap();
                    let items: Vec<WireItem> = serde_json::from_value(req["items"].clone()).unwrap();
                    let embs: Vec<Vec<f32>> = items.iter().map(fake_embedding).collect();
                    (200, json!({ "dim": if bad_dim { DIM + 1 } else { DIM }, "embeddings": embs }))
                }
                "/v1/score" => {
                    let req: Value = serde_json::from_str(&body).unwrap();
                    let q: WireItem = serde_json::from_value(req["query"].clone()).unwrap();
                    let secs: Vec<WireItem> = serde_json::from_value(req["sections"].clone()).unwrap();
                    let zq = fake_embedding(&q);
                    let scores: Vec<f64> = secs.iter().map(|s| 0.5 + 0.49 * cos(&zq, &fake_embedding(s))).collect();
                    (200, json!({ "scores": scores }))
                }
                _ => (404, json!({ "error": "not found" })),
            };
            let header = tiny_http::Header::from_bytes("Content-Type", "application/json").unwrap();
            let resp = tiny_http::Response::from_string(reply.to_string()).with_status_code(status).with_header(header);
            let _ = rq.respond(resp);
        }
    });
    format!("http://127.0.0.1:{port}")
}

#[test]
fn conformance_probe_passes_against_stub() {
    let url = spawn_stub(false);
    let checks = sidecar_check(&url).unwrap();
    assert!(!checks.is_empty());
    for c in &checks {
        assert!(c.passed, "{}: {}", c.name, c.detail);
    }
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_interdoc")).args(["sidecar-check", "--endpoint", &url]).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn wrong_declared_dim_is_protocol_error() {
    let url = spawn_stub(true);
    let client = RemoteEncoder::connect(&url).unwrap();
    let err = client.embed("query", &[WireItem { text: "a".into(), images: vec![], tables: vec![] }]).unwrap_err();
    assert!(matches!(err, RemoteError::ProtocolError(_)), "{err:?}");
    let checks = sidecar_check(&url).unwrap();
    assert!(checks.iter().any(|c| !c.passed));
}

#[test]
fn two_items_give_two_embeddings_in_order() {
    let client = RemoteEncoder::connect(&spawn_stub(false)).unwrap();
    let items = vec![
        WireItem { text: "alpha beta".into(), images: vec![], tables: vec![] },
        WireItem { text: "gamma".into(), images: vec![], tables: vec![] },
    ];
    let embs = client.embed("section", &items).unwrap();
    assert_eq!(embs.len(), 2);
    assert!(embs.iter().all(|e| e.len() == DIM));
    assert_eq!(embs[0], fake_embedding(&items[0]));
    assert_eq!(embs[1], fake_embedding(&items[1]));
    // More than one request chunk: order is still the input order.
    let many: Vec<WireItem> = (0..150).map(|i| WireItem { text: format!("w{i}"), images: vec![], tables: vec![] }).collect();
    let embs = client.embed("section", &many).unwrap();
    for (item, e) in many.iter().zip(&embs) {
        assert_eq!(e, &fake_embedding(item));
    }
}

#[test]
fn retrieval_over_twenty_documents_with_remote_backend() {
    let client = RemoteEncoder::connect(&spawn_stub(false)).unwrap();
    assert_eq!(client.dim(), DIM);
    let cfg = SynthConfig { num_docs: 20, queries_per_split: 20, docs_per_entity: 5, sections_per_doc: 3, seed: 4, ..Default::default() };
    let data = gen_synthetic(&cfg);
    let (index, _) = build_index(&data.corpus, &client, None, 0).unwrap();
    assert_eq!(index.len(), 20);
    let report = run_document_eval(&index, &client, &data.test.queries, &document_qrels(&data.test.qrels), &[1, 10, 20]).unwrap();
    report.check_invariants().unwrap();
    assert_eq!(report.metric("R@20"), 1.0);
    assert_eq!(report.per_query.len(), 20);
}
