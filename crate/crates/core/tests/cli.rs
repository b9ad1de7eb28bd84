//! End-to-end tests of the `interdoc` binary: exit codes, output format,
//! flag precedence and byte-identical reruns.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use interdoc::corpus::{Corpus, Document, Query, Section, Segment};
use interdoc::encoder::{EncoderBackend, HashEncoder};
use interdoc::index::cosine;
use interdoc::ingest::write_corpus;
use interdoc::train::checkpoint::{save_checkpoint, Checkpoint, Model};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_interdoc"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const SYNTH: &str = "num_docs = 40\nqueries_per_split = 24\ndocs_per_entity = 4\nsections_per_doc = 3\n";
const RUN: &str = "features = 1024\nd_emb = 16\nepochs = 2\nbatch_size = 8\n";

#[test]
fn unknown_flag_is_usage_error() {
    let out = bin().arg("--frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
    assert_eq!(bin().args(["eval", "--mode", "nonsense"]).output().unwrap().status.code(), Some(1));
}

#[test]
fn missing_input_is_runtime_and_bad_input_is_data() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let missing = run(d, &["index", "--corpus", "nope.jsonl", "--checkpoint", "x", "--out", "i"]);
    assert_eq!(missing.status.code(), Some(3));
    write(d, "bad.jsonl", "{not json}\n");
    let bad = run(d, &["index", "--corpus", "bad.jsonl", "--checkpoint", "x", "--out", "i"]);
    assert_eq!(bad.status.code(), Some(2));
    write(d, "bad.cfg", "epochs = ten\n");
    let cfg = run(d, &["synth", "--config", "bad.cfg", "--out-dir", "s"]);
    assert_eq!(cfg.status.code(), Some(2));
}

#[test]
fn search_on_one_document_prints_its_cosine() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let doc = Document {
        doc_id: "solo".into(),
        title: "Solo".into(),
        sections: vec![Section { section_id: "s0".into(), heading: String::new(), segments: vec![Segment::text("stone bridge over the river")] }],
    };
    let corpus = Corpus::new(vec![doc]).unwrap();
    write_corpus(&corpus, &d.join("c.jsonl")).unwrap();
    let enc = HashEncoder::new(512, 8, 11);
    save_checkpoint(&Checkpoint { model: Model::Retriever(enc.clone()), steps: 0 }, &d.join("r.idck")).unwrap();
    ok(d, &["index", "--corpus", "c.jsonl", "--checkpoint", "r.idck", "--out", "i.idix"]);
    let stdout = ok(d, &["search", "--index", "i.idix", "--checkpoint", "r.idck", "--query", "bridge river", "-k", "10"]);

    let zq = enc.encode_query(&Query::text("q", "bridge river")).unwrap();
    let zd = enc.encode_sections(&corpus.docs()[0].sections).unwrap().remove(0);
    let expected = cosine(&zq, &zd).unwrap();
    assert_eq!(stdout, format!("1\tsolo\t{expected:.6}\n"));
}

#[test]
fn ingest_reads_html_directory() {
    let dir = tempfile::tempdir().unwrap();
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/html");
    let stdout = ok(dir.path(), &["ingest", "--in", fixtures.to_str().unwrap(), "--out", "c.jsonl"]);
    assert_eq!(stdout, "ingested 5 documents\n");
    let lines = std::fs::read_to_string(dir.path().join("c.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 5);
    let empty = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["ingest", "--in", empty.path().to_str().unwrap(), "--out", "x"]).status.code(), Some(2));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "s.cfg", SYNTH);
    write(d, "r.cfg", RUN);
    ok(d, &["synth", "--config", "s.cfg", "--out-dir", "data"]);
    let data = ["--corpus", "data/corpus.jsonl", "--queries", "data/train_queries.jsonl", "--qrels", "data/train_qrels.jsonl"];
    let from_file = ok(d, &[&["train-retriever"][..], &data, &["--config", "r.cfg", "--out", "a.idck"]].concat());
    assert_eq!(from_file.matches("epoch ").count(), 2);
    let flagged = ok(d, &[&["train-retriever"][..], &data, &["--config", "r.cfg", "--epochs", "3", "--out", "b.idck"]].concat());
    assert_eq!(flagged.matches("epoch ").count(), 3);
}

fn pipeline(d: &Path, threads: Option<&str>) -> Vec<Vec<u8>> {
    write(d, "s.cfg", SYNTH);
    write(d, "r.cfg", RUN);
    let mut pre: Vec<&str> = vec!["--seed", "5"];
    if let Some(t) = threads {
        pre.extend(["--threads", t]);
    }
    let go = |args: &[&str]| ok(d, &[&pre[..], args].concat());
    go(&["synth", "--config", "s.cfg", "--out-dir", "data"]);
    let data = ["--corpus", "data/corpus.jsonl", "--queries", "data/train_queries.jsonl", "--qrels", "data/train_qrels.jsonl"];
    go(&[&["train-retriever"][..], &data, &["--config", "r.cfg", "--out", "r.idck"]].concat());
    go(&["index", "--corpus", "data/corpus.jsonl", "--checkpoint", "r.idck", "--section-limit", "2", "--out", "i.idix"]);
    go(&[&["train-reranker"][..], &data, &["--config", "r.cfg", "--out", "rr.idck"]].concat());
    go(&["eval", "--mode", "document", "--data", "data", "--index", "i.idix", "--checkpoint", "r.idck", "--out", "doc.json"]);
    go(&["eval", "--mode", "section", "--data", "data", "--index", "i.idix", "--checkpoint", "r.idck", "--reranker", "rr.idck", "--out", "sec.json"]);
    ["data/corpus.jsonl", "data/test_qrels.jsonl", "r.idck", "i.idix", "rr.idck", "doc.json", "sec.json"]
        .iter()
        .map(|f| std::fs::read(d.join(f)).unwrap())
        .collect()
}

#[test]
fn identical_invocations_give_identical_files() {
    let (a, b, c) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = pipeline(a.path(), None);
    assert_eq!(first, pipeline(b.path(), None));
    assert_eq!(first, pipeline(c.path(), Some("3")));
}

#[test]
fn seed_changes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "s.cfg", SYNTH);
    ok(d, &["--seed", "1", "synth", "--config", "s.cfg", "--out-dir", "a"]);
    ok(d, &["--seed", "2", "synth", "--config", "s.cfg", "--out-dir", "b"]);
    assert_ne!(std::fs::read(d.join("a/corpus.jsonl")).unwrap(), std::fs::read(d.join("b/corpus.jsonl")).unwrap());
}
