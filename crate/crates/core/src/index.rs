//! Document embeddings by section-mean aggregation, exact cosine search, and
//! the `IDIX` binary index format.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fs;
use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::{Corpus, Document};
use crate::encoder::{EncodeError, EncoderBackend};

const MAGIC: &[u8; 4] = b"IDIX";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("dimension mismatch: index has {expected}, got {actual}")]
    DimMismatch { expected: usize, actual: usize },
    #[error("query embedding has zero norm")]
    ZeroQuery,
    #[error("cannot build an index from an empty corpus")]
    EmptyCorpus,
    #[error("duplicate document id {0:?}")]
    DuplicateId(String),
    #[error("encoding document {doc_id:?}: {source}")]
    Encode { doc_id: String, source: EncodeError },
    #[error("not an index file (bad magic)")]
    BadMagic,
    #[error("unsupported index version {0}")]
    VersionMismatch(u32),
    #[error("index file truncated")]
    Truncated,
    #[error("corrupt index file: {0}")]
    Corrupt(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Mean of equal-length vectors. Each coordinate is summed in f64 over its
/// values sorted ascending, so the result is bit-identical under any
/// permutation of the inputs.
pub fn mean_embedding(vectors: &[Vec<f32>]) -> Vec<f32> {
    assert!(!vectors.is_empty(), "mean of zero vectors");
    let d = vectors[0].len();
    let n = vectors.len() as f64;
    let mut column = Vec::with_capacity(vectors.len());
    (0..d)
        .map(|j| {
            column.clear();
            column.extend(vectors.iter().map(|v| v[j]));
            column.sort_by(f32::total_cmp);
            (column.iter().map(|&x| x as f64).sum::<f64>() / n) as f32
        })
        .collect()
}

/// Indices of the sections used for a document embedding: all of them, or
/// `limit` sampled uniformly without replacement (returned ascending).
pub fn pick_sections(num_sections: usize, limit: Option<usize>, rng: &mut ChaCha8Rng) -> Vec<usize> {
    match limit {
        Some(k) if k < num_sections => {
            assert!(k >= 1, "section limit must be >= 1");
            let mut picks = sample(rng, num_sections, k).into_vec();
            picks.sort_unstable();
            picks
        }
        _ => (0..num_sections).collect(),
    }
}

/// Mean of the embeddings of the document's (possibly sampled) sections.
pub fn embed_document(
    backend: &dyn EncoderBackend,
    doc: &Document,
    section_limit: Option<usize>,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f32>, EncodeError> {
    let picks = pick_sections(doc.sections.len(), section_limit, rng);
    let sections: Vec<_> = picks.iter().map(|&i| doc.sections[i].clone()).collect();
    Ok(mean_embedding(&backend.encode_sections(&sections)?))
}

pub fn l2_norm(v: &[f32]) -> f64 {
    v.iter().map(|&x| x as f64 * x as f64).sum::<f64>().sqrt()
}

/// `q / max|q_j|` in f64. Dividing by the largest magnitude is exact under
/// positive rescaling of `q`, so scores derived from it are bit-identical
/// for `q` and `c·q`. `None` for the zero vector.
fn canonical_query(q: &[f32]) -> Option<Vec<f64>> {
    let m = q.iter().fold(0f64, |m, &x| m.max((x as f64).abs()));
    (m > 0.0).then(|| q.iter().map(|&x| x as f64 / m).collect())
}

/// Cosine similarity in f64 of query `q` against `row`; `None` when either
/// side has zero norm.
pub fn cosine(q: &[f32], row: &[f32]) -> Option<f64> {
    let u = canonical_query(q)?;
    let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nr = l2_norm(row);
    if nr == 0.0 {
        return None;
    }
    let dot: f64 = row.iter().zip(&u).map(|(&x, &y)| x as f64 * y).sum();
    Some((dot / (nr * nu)).clamp(-1.0, 1.0))
}

/// Immutable matrix of document embeddings searched exactly by cosine.
#[derive(Debug, Clone, PartialEq)]
pub struct Index {
    dim: usize,
    doc_ids: Vec<String>,
    rows: Vec<f32>,
    norms: Vec<f64>,
}

/// Diagnostics from [`build_index`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BuildReport {
    /// Documents whose embedding is the zero vector; they never rank above a
    /// finite score.
    pub zero_norm: Vec<String>,
}

impl Index {
    pub fn from_rows(dim: usize, entries: Vec<(String, Vec<f32>)>) -> Result<Self, IndexError> {
        let mut seen = HashSet::new();
        let mut doc_ids = Vec::with_capacity(entries.len());
        let mut rows = Vec::with_capacity(entries.len() * dim);
        for (id, row) in entries {
            if row.len() != dim {
                return Err(IndexError::DimMismatch { expected: dim, actual: row.len() });
            }
            if !seen.insert(id.clone()) {
                return Err(IndexError::DuplicateId(id));
            }
            doc_ids.push(id);
            rows.extend_from_slice(&row);
        }
        let norms = rows.chunks(dim.max(1)).map(l2_norm).collect();
        Ok(Self { dim, doc_ids, rows, norms })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_ids.is_empty()
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.rows[i * self.dim..(i + 1) * self.dim]
    }

    pub fn norm(&self, i: usize) -> f64 {
        self.norms[i]
    }

    /// Cosine of every row against `zq`; zero-norm rows score `-inf`.
    pub fn scores(&self, zq: &[f32]) -> Result<Vec<f64>, IndexError> {
        if zq.len() != self.dim {
            return Err(IndexError::DimMismatch { expected: self.dim, actual: zq.len() });
        }
        let u = canonical_query(zq).ok_or(IndexError::ZeroQuery)?;
        let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        Ok((0..self.len())
            .map(|i| {
                if self.norms[i] == 0.0 {
                    return f64::NEG_INFINITY;
                }
                let dot: f64 = self.row(i).iter().zip(&u).map(|(&x, &y)| x as f64 * y).sum();
                (dot / (self.norms[i] * nu)).clamp(-1.0, 1.0)
            })
            .collect())
    }

    /// Top-`min(k, N)` documents by cosine, descending; ties by ascending
    /// doc id.
    pub fn search(&self, zq: &[f32], k: usize) -> Result<Vec<(String, f64)>, IndexError> {
        let scores = self.scores(zq)?;
        let order = |&a: &usize, &b: &usize| -> Ordering {
            scores[b].total_cmp(&scores[a]).then_with(|| self.doc_ids[a].cmp(&self.doc_ids[b]))
        };
        let mut idx: Vec<usize> = (0..self.len()).collect();
        let k = k.min(idx.len());
        if k == 0 {
            return Ok(Vec::new());
        }
        if k < idx.len() {
            idx.select_nth_unstable_by(k - 1, order);
            idx.truncate(k);
        }
        idx.sort_unstable_by(order);
        Ok(idx.into_iter().map(|i| (self.doc_ids[i].clone(), scores[i])).collect())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(20 + self.rows.len() * 4 + self.len() * 16);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.len() as u64).to_le_bytes());
        for (i, id) in self.doc_ids.iter().enumerate() {
            out.extend_from_slice(&(id.len() as u32).to_le_bytes());
            out.extend_from_slice(id.as_bytes());
            for x in self.row(i) {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, IndexError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4).map_err(|_| IndexError::BadMagic)? != MAGIC {
            return Err(IndexError::BadMagic);
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(IndexError::VersionMismatch(version));
        }
        let dim = r.u32()? as usize;
        let n = r.u64()?;
        let mut entries = Vec::new();
        for _ in 0..n {
            let len = r.u32()? as usize;
            let id = std::str::from_utf8(r.take(len)?)
                .map_err(|e| IndexError::Corrupt(format!("doc id: {e}")))?
                .to_string();
            let raw = r.take(dim * 4)?;
            let row = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
            entries.push((id, row));
        }
        if r.pos != bytes.len() {
            return Err(IndexError::Corrupt(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        Self::from_rows(dim, entries).map_err(|e| match e {
            IndexError::DuplicateId(id) => IndexError::Corrupt(format!("duplicate id {id:?}")),
            other => other,
        })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], IndexError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or(IndexError::Truncated)?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, IndexError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, IndexError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn save_index(index: &Index, path: &Path) -> Result<(), IndexError> {
    fs::write(path, index.to_bytes())
        .map_err(|e| IndexError::Io { path: path.display().to_string(), source: e })
}

pub fn load_index(path: &Path) -> Result<Index, IndexError> {
    let bytes = fs::read(path).map_err(|e| IndexError::Io { path: path.display().to_string(), source: e })?;
    Index::from_bytes(&bytes)
}

/// Embeds every document (rows in corpus order). With `section_limit`, each
/// document's sections are sampled from an RNG derived from `seed` and the
/// document's position, so the result does not depend on scheduling.
pub fn build_index(
    corpus: &Corpus,
    backend: &dyn EncoderBackend,
    section_limit: Option<usize>,
    seed: u64,
) -> Result<(Index, BuildReport), IndexError> {
    if corpus.is_empty() {
        return Err(IndexError::EmptyCorpus);
    }
    let rows: Vec<Vec<f32>> = corpus
        .docs()
        .par_iter()
        .enumerate()
        .map(|(i, doc)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            embed_document(backend, doc, section_limit, &mut rng)
                .map_err(|source| IndexError::Encode { doc_id: doc.doc_id.clone(), source })
        })
        .collect::<Result<_, _>>()?;
    let entries = corpus.docs().iter().map(|d| d.doc_id.clone()).zip(rows).collect();
    let index = Index::from_rows(backend.dim(), entries)?;
    let zero_norm = (0..index.len())
        .filter(|&i| index.norms[i] == 0.0)
        .map(|i| index.doc_ids[i].clone())
        .collect();
    Ok((index, BuildReport { zero_norm }))
}
