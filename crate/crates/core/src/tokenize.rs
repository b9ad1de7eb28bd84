//! Modality-prefixed tokenization and signed feature hashing.
//!
//! Text, image, and table content map to `txt:`, `img:`, and `tbl:` tokens so
//! the same word from different modalities never compares equal. Query and
//! section streams end with the unprefixed role tokens [`EOQ`] and [`EOS`].

use std::collections::BTreeMap;

use xxhash_rust::xxh64::xxh64;

use crate::corpus::{Query, Section, SegmentKind};

pub const EOQ: &str = "[EOQ]";
pub const EOS: &str = "[EOS]";
pub const SEP: &str = "[SEP]";

const TXT: &str = "txt:";
const IMG: &str = "img:";
const TBL: &str = "tbl:";

/// Seed for the bucket hash.
pub const BUCKET_SEED: u64 = 0x9E37_79B9_7F4A_7C15;
/// Seed for the sign hash.
pub const SIGN_SEED: u64 = 0xC2B2_AE3D_27D4_EB4F;

/// Ordered, modality-prefixed tokens.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenStream {
    pub tokens: Vec<String>,
}

impl TokenStream {
    fn push_words(&mut self, prefix: &str, text: &str) {
        for word in words(text) {
            self.tokens.push(format!("{prefix}{word}"));
        }
    }

    fn push_image(&mut self, content: &str) {
        let (src, alt) = match content.split_once('|') {
            Some((src, alt)) => (src.trim(), alt),
            None => (content.trim(), ""),
        };
        if !src.is_empty() {
            self.tokens.push(format!("{IMG}{}", src.to_lowercase()));
        }
        self.push_words(IMG, alt);
    }

    fn push_table(&mut self, html: &str) {
        let mut rest = html;
        while !rest.is_empty() {
            match rest.find('<') {
                Some(0) => {
                    let end = rest.find('>').map_or(rest.len(), |i| i + 1);
                    self.tokens.push(format!("{TBL}{}", rest[..end].to_lowercase()));
                    rest = &rest[end..];
                }
                Some(i) => {
                    self.push_words(TBL, &rest[..i]);
                    rest = &rest[i..];
                }
                None => {
                    self.push_words(TBL, rest);
                    rest = "";
                }
            }
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Lowercased alphanumeric runs.
fn words(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()).map(str::to_lowercase)
}

pub fn tokenize_query(q: &Query) -> TokenStream {
    let mut ts = TokenStream::default();
    ts.push_words(TXT, &q.text);
    for image in &q.image_refs {
        ts.push_image(image);
    }
    ts.tokens.push(EOQ.to_string());
    ts
}

pub fn tokenize_section(s: &Section) -> TokenStream {
    let mut ts = TokenStream::default();
    ts.push_words(TXT, &s.heading);
    for seg in &s.segments {
        match seg.kind {
            SegmentKind::Text => ts.push_words(TXT, &seg.content),
            SegmentKind::Image => ts.push_image(&seg.content),
            SegmentKind::Table => ts.push_table(&seg.content),
        }
    }
    ts.tokens.push(EOS.to_string());
    ts
}

/// Sparse signed bucket counts; buckets ascending, no zero entries.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FeatureVector {
    pub dim: usize,
    pub entries: Vec<(u32, i32)>,
}

impl FeatureVector {
    pub fn empty(dim: usize) -> Self {
        Self { dim, entries: Vec::new() }
    }

    /// Builds from arbitrary `(bucket, count)` pairs, summing duplicates.
    pub fn from_counts(dim: usize, counts: impl IntoIterator<Item = (u32, i32)>) -> Self {
        let mut acc = BTreeMap::new();
        for (b, c) in counts {
            assert!((b as usize) < dim, "bucket {b} out of range for dim {dim}");
            *acc.entry(b).or_insert(0i32) += c;
        }
        Self { dim, entries: acc.into_iter().filter(|&(_, c)| c != 0).collect() }
    }

    pub fn get(&self, bucket: u32) -> i32 {
        self.entries
            .binary_search_by_key(&bucket, |&(b, _)| b)
            .map_or(0, |i| self.entries[i].1)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn scaled(&self, c: i32) -> Self {
        Self::from_counts(self.dim, self.entries.iter().map(|&(b, v)| (b, v * c)))
    }
}

/// Bucket index and sign of one token in a `dim`-bucket space.
pub fn token_bucket(token: &str, dim: usize) -> (u32, i32) {
    debug_assert!(dim.is_power_of_two());
    let bucket = xxh64(token.as_bytes(), BUCKET_SEED) & (dim as u64 - 1);
    let sign = if xxh64(token.as_bytes(), SIGN_SEED).is_multiple_of(2) { 1 } else { -1 };
    (bucket as u32, sign)
}

/// Signed hashing of a token stream into `dim` buckets.
///
/// Panics if `dim` is not a power of two ≥ 2.
pub fn hash_features(ts: &TokenStream, dim: usize) -> FeatureVector {
    assert!(dim >= 2 && dim.is_power_of_two(), "feature dim must be a power of two >= 2");
    FeatureVector::from_counts(dim, ts.tokens.iter().map(|t| token_bucket(t, dim)))
}
