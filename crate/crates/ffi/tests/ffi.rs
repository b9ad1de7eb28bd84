//! The C ABI exercised from Rust: handle lifecycles, agreement with the
//! library, status codes and the generated header.

use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use interdoc::encoder::{EncoderBackend, HashEncoder};
use interdoc::eval::{gen_synthetic, SynthConfig};
use interdoc::index::build_index;
use interdoc::ingest::write_corpus;
use interdoc::rerank::{Reranker, RerankerParams};
use interdoc::train::checkpoint::{save_checkpoint, Checkpoint, Model};
use interdoc_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn c_path(p: &Path) -> CString {
    c(p.to_str().unwrap())
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(idoc_last_error()) }.to_str().unwrap().to_string()
}

struct Fixture {
    _dir: tempfile::TempDir,
    corpus: CString,
    retriever: CString,
    reranker: CString,
    enc: HashEncoder,
    data: interdoc::eval::SynthData,
}

fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let data = gen_synthetic(&SynthConfig { num_docs: 30, queries_per_split: 10, docs_per_entity: 5, sections_per_doc: 3, seed: 2, ..Default::default() });
    write_corpus(&data.corpus, &dir.path().join("c.jsonl")).unwrap();
    let enc = HashEncoder::new(512, 8, 2);
    save_checkpoint(&Checkpoint { model: Model::Retriever(enc.clone()), steps: 0 }, &dir.path().join("r.idck")).unwrap();
    let mut params = RerankerParams::zeros(512, 2);
    params.w.iter_mut().enumerate().for_each(|(i, w)| *w = ((i % 7) as f32 - 3.0) * 0.01);
    save_checkpoint(&Checkpoint { model: Model::Reranker(Reranker::Classifier(params)), steps: 0 }, &dir.path().join("rr.idck")).unwrap();
    Fixture {
        corpus: c_path(&dir.path().join("c.jsonl")),
        retriever: c_path(&dir.path().join("r.idck")),
        reranker: c_path(&dir.path().join("rr.idck")),
        _dir: dir,
        enc,
        data,
    }
}

#[test]
fn search_and_rerank_agree_with_library() {
    let f = fixture();
    unsafe {
        let mut enc = ptr::null_mut();
        assert_eq!(idoc_encoder_load(f.retriever.as_ptr(), &mut enc), IdocStatus::Ok);
        assert_eq!(idoc_encoder_dim(enc), 8);
        let mut corpus = ptr::null_mut();
        assert_eq!(idoc_corpus_load(f.corpus.as_ptr(), &mut corpus), IdocStatus::Ok);
        assert_eq!(idoc_corpus_len(corpus), 30);
        let mut index = ptr::null_mut();
        assert_eq!(idoc_index_build(corpus, enc, &mut index), IdocStatus::Ok);
        assert_eq!(idoc_index_len(index), 30);

        let q = &f.data.test.queries[0];
        let text = c(&q.text);
        let refs: Vec<CString> = q.image_refs.iter().map(|r| c(r)).collect();
        let ref_ptrs: Vec<*const c_char> = refs.iter().map(|r| r.as_ptr()).collect();

        let mut buf = vec![0f32; 8];
        let st = idoc_encoder_embed_query(enc, text.as_ptr(), ref_ptrs.as_ptr(), ref_ptrs.len(), buf.as_mut_ptr(), 8);
        assert_eq!(st, IdocStatus::Ok);
        assert_eq!(buf, f.enc.encode_query(q).unwrap());

        let mut res = ptr::null_mut();
        let st = idoc_search(index, enc, text.as_ptr(), ref_ptrs.as_ptr(), ref_ptrs.len(), 5, &mut res);
        assert_eq!(st, IdocStatus::Ok, "{}", last_error());
        let (lib_index, _) = build_index(&f.data.corpus, &f.enc, None, 0).unwrap();
        let expected = lib_index.search(&f.enc.encode_query(q).unwrap(), 5).unwrap();
        assert_eq!(idoc_results_len(res), 5);
        for (i, (id, score)) in expected.iter().enumerate() {
            assert_eq!(CStr::from_ptr(idoc_results_id(res, i)).to_str().unwrap(), id);
            assert_eq!(idoc_results_score(res, i), *score);
        }
        assert!(idoc_results_id(res, 5).is_null());
        assert!(idoc_results_score(res, 5).is_nan());

        let mut rr = ptr::null_mut();
        assert_eq!(idoc_reranker_load(f.reranker.as_ptr(), &mut rr), IdocStatus::Ok);
        let mut ranked = ptr::null_mut();
        let st = idoc_rerank(rr, corpus, text.as_ptr(), ref_ptrs.as_ptr(), ref_ptrs.len(), res, &mut ranked);
        assert_eq!(st, IdocStatus::Ok, "{}", last_error());
        let sections: usize = expected.iter().map(|(id, _)| f.data.corpus.get(id).unwrap().sections.len()).sum();
        assert_eq!(idoc_results_len(ranked), sections);
        let first = CStr::from_ptr(idoc_results_id(ranked, 0)).to_str().unwrap();
        assert!(first.contains('#'));

        idoc_results_free(ranked);
        idoc_results_free(res);
        idoc_reranker_free(rr);
        idoc_index_free(index);
        idoc_corpus_free(corpus);
        idoc_encoder_free(enc);
    }
}

#[test]
fn index_save_and_load_round_trip() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    let path = c_path(&dir.path().join("x.idix"));
    unsafe {
        let (mut enc, mut corpus, mut index, mut back) = (ptr::null_mut(), ptr::null_mut(), ptr::null_mut(), ptr::null_mut());
        assert_eq!(idoc_encoder_load(f.retriever.as_ptr(), &mut enc), IdocStatus::Ok);
        assert_eq!(idoc_corpus_load(f.corpus.as_ptr(), &mut corpus), IdocStatus::Ok);
        assert_eq!(idoc_index_build(corpus, enc, &mut index), IdocStatus::Ok);
        assert_eq!(idoc_index_save(index, path.as_ptr()), IdocStatus::Ok);
        assert_eq!(idoc_index_load(path.as_ptr(), &mut back), IdocStatus::Ok);
        assert_eq!(idoc_index_len(back), 30);
        let (lib_index, _) = build_index(&f.data.corpus, &f.enc, None, 0).unwrap();
        assert_eq!(std::fs::read(dir.path().join("x.idix")).unwrap(), lib_index.to_bytes());
        idoc_index_free(back);
        idoc_index_free(index);
        idoc_corpus_free(corpus);
        idoc_encoder_free(enc);
    }
}

#[test]
fn failures_map_to_status_codes() {
    let f = fixture();
    unsafe {
        let mut enc = ptr::null_mut();
        assert_eq!(idoc_encoder_load(ptr::null(), &mut enc), IdocStatus::NullArgument);
        assert!(last_error().contains("path"));
        assert_eq!(idoc_encoder_load(c("/nonexistent/r.idck").as_ptr(), &mut enc), IdocStatus::Io);
        assert!(enc.is_null());
        // A reranker checkpoint is not a retriever.
        assert_eq!(idoc_encoder_load(f.reranker.as_ptr(), &mut enc), IdocStatus::Data);
        assert!(last_error().contains("retriever"));
        // A corpus file is not a checkpoint.
        assert_eq!(idoc_encoder_load(f.corpus.as_ptr(), &mut enc), IdocStatus::Data);
        assert_eq!(idoc_encoder_load(f.retriever.as_ptr(), ptr::null_mut()), IdocStatus::NullArgument);

        let bad = [0xffu8, 0xfe, 0];
        assert_eq!(idoc_corpus_load(bad.as_ptr().cast(), &mut ptr::null_mut()), IdocStatus::InvalidUtf8);

        assert_eq!(idoc_encoder_load(f.retriever.as_ptr(), &mut enc), IdocStatus::Ok);
        assert_eq!(last_error(), "");
        let mut buf = [0f32; 3];
        let st = idoc_encoder_embed_query(enc, c("x").as_ptr(), ptr::null(), 0, buf.as_mut_ptr(), 3);
        assert_eq!(st, IdocStatus::OutOfRange);
        let st = idoc_encoder_embed_query(enc, c("x").as_ptr(), ptr::null(), 2, buf.as_mut_ptr(), 8);
        assert_eq!(st, IdocStatus::NullArgument);
        let mut res = ptr::null_mut();
        assert_eq!(idoc_search(ptr::null(), enc, c("x").as_ptr(), ptr::null(), 0, 3, &mut res), IdocStatus::NullArgument);
        idoc_encoder_free(enc);

        // Null handles are harmless for queries and frees.
        assert_eq!(idoc_encoder_dim(ptr::null()), 0);
        assert_eq!(idoc_results_len(ptr::null()), 0);
        idoc_results_free(ptr::null_mut());
        idoc_index_free(ptr::null_mut());
    }
}

#[test]
fn version_is_package_version() {
    let v = unsafe { CStr::from_ptr(idoc_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_api_and_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/interdoc.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["idoc_encoder_load", "idoc_search", "idoc_rerank", "idoc_results_free", "IDOC_STATUS_OK", "IDOC_STATUS_PANIC", "typedef struct IdocIndex IdocIndex"] {
        assert!(text.contains(name), "header lacks {name}");
    }
    let dir = tempfile::tempdir().unwrap();
    let program = dir.path().join("use.c");
    std::fs::write(
        &program,
        "#include \"interdoc.h\"\n\
         int main(void) {\n\
           IdocEncoder *enc = NULL; IdocIndex *idx = NULL; IdocResults *res = NULL;\n\
           if (idoc_encoder_load(\"r.idck\", &enc) != IDOC_STATUS_OK) return 1;\n\
           if (idoc_index_load(\"i.idix\", &idx) != IDOC_STATUS_OK) return 1;\n\
           IdocStatus st = idoc_search(idx, enc, \"query\", NULL, 0, 10, &res);\n\
           size_t n = idoc_results_len(res); double s = n ? idoc_results_score(res, 0) : 0.0;\n\
           idoc_results_free(res); idoc_index_free(idx); idoc_encoder_free(enc);\n\
           return st == IDOC_STATUS_OK && s >= -1.0 ? 0 : 1;\n\
         }\n",
    )
    .unwrap();
    let include = header.parent().unwrap();
    for (compiler, lang) in [("cc", "c"), ("c++", "c++")] {
        let Ok(out) = Command::new(compiler)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang, "-I"])
            .arg(include)
            .arg(&program)
            .output()
        else {
            eprintln!("{compiler} not found; skipping compile check");
            continue;
        };
        assert!(out.status.success(), "{compiler}: {}", String::from_utf8_lossy(&out.stderr));
    }
}
