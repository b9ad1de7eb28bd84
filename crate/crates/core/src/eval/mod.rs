//! Evaluation: ranking metrics, reports, the synthetic benchmark generator
//! and experiment runners.

pub mod metrics;
pub mod report;
pub mod runners;
pub mod synth;

use thiserror::Error;

use crate::encoder::EncodeError;
use crate::index::IndexError;
use crate::train::TrainError;

pub use metrics::{first_relevant_rank, mean, mrr_at_k, recall_at_k};
pub use report::{render_table, EvalReport, QueryRow};
pub use synth::{gen_synthetic, Placement, Plant, Split, SynthConfig, SynthData};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("query {0:?} has no relevant document")]
    NoRelevant(String),
    #[error("invalid evaluation data: {0}")]
    Data(String),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
}
