//! HTML parsing and corpus/query/qrel file I/O.

mod html;
mod jsonl;
mod table;

use thiserror::Error;

use crate::corpus::ValidationError;

pub use html::parse_html;
pub use jsonl::{
    read_corpus, read_qrels, read_queries, validate_qrels, write_corpus, write_qrels,
    write_queries,
};
pub use table::linearize_table;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed input: {0}")]
    MalformedInput(String),
    #[error("document {0:?} has no content")]
    NoContent(String),
    #[error("input does not start with <table")]
    NotATable,
    #[error("line {line}: {message}")]
    SchemaError { line: usize, message: String },
    #[error("qrel for query {query_id:?} references unknown {kind} {id:?}")]
    DanglingReference { query_id: String, kind: &'static str, id: String },
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl IngestError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Self::Io { path: path.display().to_string(), source }
    }
}
