//! Interleaved multimodal document retrieval.

pub mod cli;
pub mod config;
pub mod corpus;
pub mod encoder;
pub mod eval;
pub mod index;
pub mod ingest;
pub mod remote;
pub mod rerank;
pub mod tokenize;
pub mod train;
