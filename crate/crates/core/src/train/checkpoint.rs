//! `IDCK` checkpoint files for trained retrievers and rerankers.
//!
//! Layout (little-endian): magic `IDCK`, u32 version, u32 role tag, u32
//! d_emb, u32 F, the f32 parameter block(s), u64 seed, u64 optimizer steps.
//! Role 1 is a retriever and role 3 a section-encoder reranker (both store
//! `W_Q` then `W_S`, each F×d_emb); role 2 is a classifier reranker (stores
//! d_emb = 0, then 3F weights and the bias).

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::encoder::HashEncoder;
use crate::rerank::{Reranker, RerankerParams};

const MAGIC: &[u8; 4] = b"IDCK";
const VERSION: u32 = 1;
const ROLE_RETRIEVER: u32 = 1;
const ROLE_CLASSIFIER: u32 = 2;
const ROLE_SECTION_ENCODER: u32 = 3;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    VersionMismatch(u32),
    #[error("checkpoint truncated")]
    Truncated,
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
    #[error("expected a {expected} checkpoint, found a {found} checkpoint")]
    WrongRole { expected: &'static str, found: &'static str },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Retriever(HashEncoder),
    Reranker(Reranker),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Retriever(_) => "retriever",
            Model::Reranker(_) => "reranker",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: Model,
    pub steps: u64,
}

impl Checkpoint {
    pub fn into_retriever(self) -> Result<HashEncoder, CheckpointError> {
        match self.model {
            Model::Retriever(e) => Ok(e),
            other => Err(CheckpointError::WrongRole { expected: "retriever", found: other.kind() }),
        }
    }

    pub fn into_reranker(self) -> Result<Reranker, CheckpointError> {
        match self.model {
            Model::Reranker(r) => Ok(r),
            other => Err(CheckpointError::WrongRole { expected: "reranker", found: other.kind() }),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        let put_f32s = |out: &mut Vec<u8>, xs: &[f32]| xs.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes()));
        let seed = match &self.model {
            Model::Retriever(e) | Model::Reranker(Reranker::SectionEncoder(e)) => {
                let role = if matches!(self.model, Model::Retriever(_)) { ROLE_RETRIEVER } else { ROLE_SECTION_ENCODER };
                for v in [role, e.d_emb as u32, e.features as u32] {
                    out.extend_from_slice(&v.to_le_bytes());
                }
                put_f32s(&mut out, &e.w_q);
                put_f32s(&mut out, &e.w_s);
                e.seed
            }
            Model::Reranker(Reranker::Classifier(p)) => {
                for v in [ROLE_CLASSIFIER, 0, p.features as u32] {
                    out.extend_from_slice(&v.to_le_bytes());
                }
                put_f32s(&mut out, &p.w);
                out.extend_from_slice(&p.b.to_le_bytes());
                p.seed
            }
        };
        out.extend_from_slice(&seed.to_le_bytes());
        out.extend_from_slice(&self.steps.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CheckpointError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4).map_err(|_| CheckpointError::BadMagic)? != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(CheckpointError::VersionMismatch(version));
        }
        let role = r.u32()?;
        let d_emb = r.u32()? as usize;
        let features = r.u32()? as usize;
        if features < 2 || !features.is_power_of_two() {
            return Err(CheckpointError::Corrupt(format!("feature width {features}")));
        }
        let model = match role {
            ROLE_RETRIEVER | ROLE_SECTION_ENCODER => {
                if d_emb < 2 {
                    return Err(CheckpointError::Corrupt(format!("d_emb {d_emb}")));
                }
                let w_q = r.f32s(features, d_emb)?;
                let w_s = r.f32s(features, d_emb)?;
                let enc = HashEncoder::from_matrices(features, d_emb, w_q, w_s, r.peek_u64()?);
                if role == ROLE_RETRIEVER {
                    Model::Retriever(enc)
                } else {
                    Model::Reranker(Reranker::SectionEncoder(enc))
                }
            }
            ROLE_CLASSIFIER => {
                let w = r.f32s(3, features)?;
                let b = f32::from_le_bytes(r.take(4)?.try_into().unwrap());
                Model::Reranker(Reranker::Classifier(RerankerParams { features, w, b, seed: r.peek_u64()? }))
            }
            other => return Err(CheckpointError::Corrupt(format!("unknown role tag {other}"))),
        };
        r.u64()?; // seed, already read into the model
        let steps = r.u64()?;
        if r.pos != bytes.len() {
            return Err(CheckpointError::Corrupt(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        Ok(Self { model, steps })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or(CheckpointError::Truncated)?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn peek_u64(&self) -> Result<u64, CheckpointError> {
        let b = self.bytes.get(self.pos..self.pos + 8).ok_or(CheckpointError::Truncated)?;
        Ok(u64::from_le_bytes(b.try_into().unwrap()))
    }

    /// An `rows × cols` block of f32 values.
    fn f32s(&mut self, rows: usize, cols: usize) -> Result<Vec<f32>, CheckpointError> {
        let n = rows.checked_mul(cols).and_then(|x| x.checked_mul(4)).ok_or(CheckpointError::Truncated)?;
        Ok(self.take(n)?.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

pub fn save_checkpoint(ck: &Checkpoint, path: &Path) -> Result<(), CheckpointError> {
    fs::write(path, ck.to_bytes()).map_err(|e| CheckpointError::Io { path: path.display().to_string(), source: e })
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, CheckpointError> {
    let bytes = fs::read(path).map_err(|e| CheckpointError::Io { path: path.display().to_string(), source: e })?;
    Checkpoint::from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        let enc = HashEncoder::new(16, 3, 9);
        let mut p = RerankerParams::zeros(16, 4);
        p.w[5] = -1.5;
        p.b = 0.25;
        for ck in [
            Checkpoint { model: Model::Retriever(enc.clone()), steps: 12 },
            Checkpoint { model: Model::Reranker(Reranker::SectionEncoder(enc)), steps: 1 },
            Checkpoint { model: Model::Reranker(Reranker::Classifier(p)), steps: 0 },
        ] {
            let bytes = ck.to_bytes();
            let back = Checkpoint::from_bytes(&bytes).unwrap();
            assert_eq!(back, ck);
            assert_eq!(back.to_bytes(), bytes);
            assert!(matches!(Checkpoint::from_bytes(&bytes[..bytes.len() - 3]), Err(CheckpointError::Truncated)));
        }
    }

    #[test]
    fn rejects_bad_headers() {
        let bytes = Checkpoint { model: Model::Retriever(HashEncoder::new(4, 2, 0)), steps: 0 }.to_bytes();
        let mut bad = bytes.clone();
        bad[1] = b'?';
        assert!(matches!(Checkpoint::from_bytes(&bad), Err(CheckpointError::BadMagic)));
        let mut ver = bytes;
        ver[4] = 9;
        assert!(matches!(Checkpoint::from_bytes(&ver), Err(CheckpointError::VersionMismatch(9))));
    }

    #[test]
    fn role_accessors() {
        let ck = Checkpoint { model: Model::Retriever(HashEncoder::new(4, 2, 0)), steps: 0 };
        assert!(matches!(ck.clone().into_reranker(), Err(CheckpointError::WrongRole { .. })));
        assert!(ck.into_retriever().is_ok());
    }
}
