//! Embedding backends: the trainable linear hash encoder and the interface it
//! shares with the remote encoder client.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::corpus::{Query, Section};
use crate::remote::RemoteError;
use crate::tokenize::{hash_features, tokenize_query, tokenize_section, FeatureVector};

#[derive(Debug, Error)]
pub enum EncodeError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimMismatch { expected: usize, actual: usize },
    #[error(transparent)]
    Remote(#[from] RemoteError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Query,
    Section,
}

/// Anything that maps queries and sections to fixed-width embeddings.
pub trait EncoderBackend: Sync {
    /// Embedding width; constant for the backend's lifetime.
    fn dim(&self) -> usize;

    fn encode_query(&self, q: &Query) -> Result<Vec<f32>, EncodeError>;

    fn encode_sections(&self, sections: &[Section]) -> Result<Vec<Vec<f32>>, EncodeError>;

    fn encode_queries(&self, queries: &[Query]) -> Result<Vec<Vec<f32>>, EncodeError> {
        queries.iter().map(|q| self.encode_query(q)).collect()
    }
}

/// Linear dual encoder over signed hashed features.
///
/// Both projections are stored bucket-major: row `b` of `w_q` (length
/// `d_emb`) is the embedding contribution of one unit in bucket `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct HashEncoder {
    pub d_emb: usize,
    pub features: usize,
    pub w_q: Vec<f32>,
    pub w_s: Vec<f32>,
    pub seed: u64,
}

impl HashEncoder {
    /// Fresh parameters, i.i.d. uniform in `[-1/sqrt(F), 1/sqrt(F)]`.
    pub fn new(features: usize, d_emb: usize, seed: u64) -> Self {
        assert!(features >= 2 && features.is_power_of_two(), "F must be a power of two >= 2");
        assert!(d_emb >= 2, "d_emb must be >= 2");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound = 1.0 / (features as f32).sqrt();
        let mut draw = |n: usize| (0..n).map(|_| rng.gen_range(-bound..=bound)).collect::<Vec<f32>>();
        let w_q = draw(features * d_emb);
        let w_s = draw(features * d_emb);
        Self { d_emb, features, w_q, w_s, seed }
    }

    /// Wraps explicit bucket-major matrices.
    pub fn from_matrices(features: usize, d_emb: usize, w_q: Vec<f32>, w_s: Vec<f32>, seed: u64) -> Self {
        assert_eq!(w_q.len(), features * d_emb);
        assert_eq!(w_s.len(), features * d_emb);
        Self { d_emb, features, w_q, w_s, seed }
    }

    pub fn matrix(&self, role: Role) -> &[f32] {
        match role {
            Role::Query => &self.w_q,
            Role::Section => &self.w_s,
        }
    }

    /// `W_role · fv`, accumulated in f64 in ascending bucket order.
    pub fn encode(&self, fv: &FeatureVector, role: Role) -> Result<Vec<f32>, EncodeError> {
        if fv.dim != self.features {
            return Err(EncodeError::DimMismatch { expected: self.features, actual: fv.dim });
        }
        let w = self.matrix(role);
        let d = self.d_emb;
        let mut z = vec![0f64; d];
        for &(b, c) in &fv.entries {
            let row = &w[b as usize * d..(b as usize + 1) * d];
            let c = c as f64;
            for (zi, &wi) in z.iter_mut().zip(row) {
                *zi += c * wi as f64;
            }
        }
        Ok(z.into_iter().map(|v| v as f32).collect())
    }

    pub fn query_features(&self, q: &Query) -> FeatureVector {
        hash_features(&tokenize_query(q), self.features)
    }

    pub fn section_features(&self, s: &Section) -> FeatureVector {
        hash_features(&tokenize_section(s), self.features)
    }
}

impl EncoderBackend for HashEncoder {
    fn dim(&self) -> usize {
        self.d_emb
    }

    fn encode_query(&self, q: &Query) -> Result<Vec<f32>, EncodeError> {
        self.encode(&self.query_features(q), Role::Query)
    }

    fn encode_sections(&self, sections: &[Section]) -> Result<Vec<Vec<f32>>, EncodeError> {
        sections.iter().map(|s| self.encode(&self.section_features(s), Role::Section)).collect()
    }
}
