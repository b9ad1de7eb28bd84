//! C ABI over the retrieval engine.
//!
//! Every object crosses the boundary as an opaque handle created by an
//! `idoc_*_load`/`idoc_*_build` function and released with the matching
//! `idoc_*_free`. Fallible functions return an [`IdocStatus`]; on failure a
//! message is available from [`idoc_last_error`] on the same thread. Panics
//! never unwind into the caller; they are reported as
//! `IDOC_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use interdoc::corpus::{Corpus, Query};
use interdoc::encoder::{EncodeError, EncoderBackend, HashEncoder};
use interdoc::index::{build_index, load_index, save_index, Index, IndexError};
use interdoc::ingest::{read_corpus, IngestError};
use interdoc::rerank::{rerank_sections, Reranker};
use interdoc::train::checkpoint::{load_checkpoint, CheckpointError};

/// Result of a fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdocStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// A file could not be read or written.
    Io = 3,
    /// Input data failed validation (bad file contents, shape mismatch,
    /// wrong checkpoint role, zero query, ...).
    Data = 4,
    /// An argument was out of range (index position, buffer length).
    OutOfRange = 5,
    /// An internal panic was caught.
    Panic = 6,
}

/// Retriever dual encoder loaded from a checkpoint.
pub struct IdocEncoder(HashEncoder);

/// Document embedding index.
pub struct IdocIndex(Index);

/// Corpus of documents.
pub struct IdocCorpus(Corpus);

/// Section reranker loaded from a checkpoint.
pub struct IdocReranker(Reranker);

/// Ranked `(id, score)` list. Document results carry doc ids; reranked
/// results carry `doc_id#section_id` keys.
pub struct IdocResults(Vec<(CString, f64)>);

struct Failure(IdocStatus, String);

impl From<IngestError> for Failure {
    fn from(e: IngestError) -> Self {
        let status = if matches!(e, IngestError::Io { .. }) { IdocStatus::Io } else { IdocStatus::Data };
        Failure(status, e.to_string())
    }
}

impl From<CheckpointError> for Failure {
    fn from(e: CheckpointError) -> Self {
        let status = if matches!(e, CheckpointError::Io { .. }) { IdocStatus::Io } else { IdocStatus::Data };
        Failure(status, e.to_string())
    }
}

impl From<IndexError> for Failure {
    fn from(e: IndexError) -> Self {
        let status = if matches!(e, IndexError::Io { .. }) { IdocStatus::Io } else { IdocStatus::Data };
        Failure(status, e.to_string())
    }
}

impl From<EncodeError> for Failure {
    fn from(e: EncodeError) -> Self {
        Failure(IdocStatus::Data, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

/// Runs `f`, translating failures and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> IdocStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            IdocStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(&format!("internal panic: {msg}"));
            IdocStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(IdocStatus::NullArgument, format!("{what} is null"))
}

/// # Safety
/// `p` is null or a valid NUL-terminated string.
unsafe fn string<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(IdocStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

/// # Safety
/// `p` is null or points to a live `T`.
unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

/// # Safety
/// `out` is null or writable.
unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// # Safety
/// `refs` points to `n` valid strings when `n > 0`.
unsafe fn query(text: *const c_char, refs: *const *const c_char, n: usize) -> Result<Query, Failure> {
    let text = string(text, "query")?.to_string();
    let mut image_refs = Vec::with_capacity(n);
    if n > 0 {
        if refs.is_null() {
            return Err(null("image_refs"));
        }
        for i in 0..n {
            image_refs.push(string(*refs.add(i), "image ref")?.to_string());
        }
    }
    Ok(Query { query_id: "q".into(), text, image_refs })
}

/// Message for the last failed call on this thread; empty after a
/// success. Valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn idoc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn idoc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a retriever checkpoint.
///
/// # Safety
/// `path` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn idoc_encoder_load(path: *const c_char, out: *mut *mut IdocEncoder) -> IdocStatus {
    guard(|| {
        let path = PathBuf::from(string(path, "path")?);
        let enc = load_checkpoint(&path)?.into_retriever()?;
        put(out, IdocEncoder(enc))
    })
}

/// Embedding width of the encoder, or 0 for a null handle.
///
/// # Safety
/// `enc` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn idoc_encoder_dim(enc: *const IdocEncoder) -> usize {
    enc.as_ref().map_or(0, |e| e.0.dim())
}

/// Writes the query embedding into `buf`, which must hold exactly
/// `idoc_encoder_dim(enc)` floats.
///
/// # Safety
/// `enc` is a live handle; `text` is a NUL-terminated string; `image_refs`
/// holds `num_refs` strings; `buf` is writable for `len` floats.
#[no_mangle]
pub unsafe extern "C" fn idoc_encoder_embed_query(
    enc: *const IdocEncoder,
    text: *const c_char,
    image_refs: *const *const c_char,
    num_refs: usize,
    buf: *mut f32,
    len: usize,
) -> IdocStatus {
    guard(|| {
        let enc = handle(enc, "encoder")?;
        let q = query(text, image_refs, num_refs)?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        if len != enc.0.dim() {
            return Err(Failure(IdocStatus::OutOfRange, format!("buffer holds {len} floats, embedding has {}", enc.0.dim())));
        }
        let z = enc.0.encode_query(&q)?;
        std::slice::from_raw_parts_mut(buf, len).copy_from_slice(&z);
        Ok(())
    })
}

/// # Safety
/// `enc` is null or a handle from [`idoc_encoder_load`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn idoc_encoder_free(enc: *mut IdocEncoder) {
    if !enc.is_null() {
        drop(Box::from_raw(enc));
    }
}

/// Loads a corpus JSONL file.
///
/// # Safety
/// `path` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn idoc_corpus_load(path: *const c_char, out: *mut *mut IdocCorpus) -> IdocStatus {
    guard(|| {
        let corpus = read_corpus(&PathBuf::from(string(path, "path")?))?;
        put(out, IdocCorpus(corpus))
    })
}

/// Number of documents, or 0 for a null handle.
///
/// # Safety
/// `corpus` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn idoc_corpus_len(corpus: *const IdocCorpus) -> usize {
    corpus.as_ref().map_or(0, |c| c.0.len())
}

/// # Safety
/// `corpus` is null or a handle from [`idoc_corpus_load`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn idoc_corpus_free(corpus: *mut IdocCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// Loads an index file.
///
/// # Safety
/// `path` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn idoc_index_load(path: *const c_char, out: *mut *mut IdocIndex) -> IdocStatus {
    guard(|| {
        let index = load_index(&PathBuf::from(string(path, "path")?))?;
        put(out, IdocIndex(index))
    })
}

/// Embeds every document of `corpus` with all of its sections.
///
/// # Safety
/// `corpus` and `enc` are live handles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn idoc_index_build(
    corpus: *const IdocCorpus,
    enc: *const IdocEncoder,
    out: *mut *mut IdocIndex,
) -> IdocStatus {
    guard(|| {
        let corpus = handle(corpus, "corpus")?;
        let enc = handle(enc, "encoder")?;
        let (index, _) = build_index(&corpus.0, &enc.0, None, 0)?;
        put(out, IdocIndex(index))
    })
}

/// Writes the index to `path`.
///
/// # Safety
/// `index` is a live handle; `path` is a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn idoc_index_save(index: *const IdocIndex, path: *const c_char) -> IdocStatus {
    guard(|| {
        let index = handle(index, "index")?;
        save_index(&index.0, &PathBuf::from(string(path, "path")?))?;
        Ok(())
    })
}

/// Number of indexed documents, or 0 for a null handle.
///
/// # Safety
/// `index` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn idoc_index_len(index: *const IdocIndex) -> usize {
    index.as_ref().map_or(0, |i| i.0.len())
}

/// # Safety
/// `index` is null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn idoc_index_free(index: *mut IdocIndex) {
    if !index.is_null() {
        drop(Box::from_raw(index));
    }
}

/// Top-`k` documents by cosine for a query.
///
/// # Safety
/// `index` and `enc` are live handles; `text` is a NUL-terminated string;
/// `image_refs` holds `num_refs` strings; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn idoc_search(
    index: *const IdocIndex,
    enc: *const IdocEncoder,
    text: *const c_char,
    image_refs: *const *const c_char,
    num_refs: usize,
    k: usize,
    out: *mut *mut IdocResults,
) -> IdocStatus {
    guard(|| {
        let index = handle(index, "index")?;
        let enc = handle(enc, "encoder")?;
        let q = query(text, image_refs, num_refs)?;
        let hits = index.0.search(&enc.0.encode_query(&q)?, k)?;
        put(out, IdocResults(hits.into_iter().map(|(id, s)| (CString::new(id).unwrap_or_default(), s)).collect()))
    })
}

/// Loads a reranker checkpoint.
///
/// # Safety
/// `path` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn idoc_reranker_load(path: *const c_char, out: *mut *mut IdocReranker) -> IdocStatus {
    guard(|| {
        let rr = load_checkpoint(&PathBuf::from(string(path, "path")?))?.into_reranker()?;
        put(out, IdocReranker(rr))
    })
}

/// Reranks every section of the documents in `docs` (a search result);
/// the output ids are `doc_id#section_id`, scores are probabilities.
///
/// # Safety
/// `reranker`, `corpus` and `docs` are live handles; `text` is a
/// NUL-terminated string; `image_refs` holds `num_refs` strings; `out` is
/// writable.
#[no_mangle]
pub unsafe extern "C" fn idoc_rerank(
    reranker: *const IdocReranker,
    corpus: *const IdocCorpus,
    text: *const c_char,
    image_refs: *const *const c_char,
    num_refs: usize,
    docs: *const IdocResults,
    out: *mut *mut IdocResults,
) -> IdocStatus {
    guard(|| {
        let rr = handle(reranker, "reranker")?;
        let corpus = handle(corpus, "corpus")?;
        let docs = handle(docs, "docs")?;
        let q = query(text, image_refs, num_refs)?;
        let found = docs
            .0
            .iter()
            .map(|(id, _)| {
                let id = id.to_str().unwrap_or_default();
                corpus.0.get(id).ok_or_else(|| Failure(IdocStatus::Data, format!("corpus has no document {id:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let ranked = rerank_sections(&rr.0, &q, &found);
        let rows = ranked
            .into_iter()
            .map(|r| (CString::new(format!("{}#{}", r.doc_id, r.section_id)).unwrap_or_default(), r.score))
            .collect();
        put(out, IdocResults(rows))
    })
}

/// # Safety
/// `reranker` is null or a handle from [`idoc_reranker_load`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn idoc_reranker_free(reranker: *mut IdocReranker) {
    if !reranker.is_null() {
        drop(Box::from_raw(reranker));
    }
}

/// Number of results, or 0 for a null handle.
///
/// # Safety
/// `res` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn idoc_results_len(res: *const IdocResults) -> usize {
    res.as_ref().map_or(0, |r| r.0.len())
}

/// Id at rank `i` (0-based), owned by `res`; null when out of range.
///
/// # Safety
/// `res` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn idoc_results_id(res: *const IdocResults, i: usize) -> *const c_char {
    res.as_ref().and_then(|r| r.0.get(i)).map_or(ptr::null(), |(id, _)| id.as_ptr())
}

/// Score at rank `i` (0-based); NaN when out of range.
///
/// # Safety
/// `res` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn idoc_results_score(res: *const IdocResults, i: usize) -> f64 {
    res.as_ref().and_then(|r| r.0.get(i)).map_or(f64::NAN, |(_, s)| *s)
}

/// # Safety
/// `res` is null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn idoc_results_free(res: *mut IdocResults) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}
