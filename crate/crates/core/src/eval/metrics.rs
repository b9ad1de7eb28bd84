//! Ranking metrics over ranked id lists.

use std::collections::HashSet;

/// 1 if any relevant id is within the first `k` ranks, else 0.
pub fn recall_at_k<S: AsRef<str>>(ranked: &[S], relevant: &HashSet<String>, k: usize) -> f64 {
    assert!(k >= 1, "k must be >= 1");
    if ranked.iter().take(k).any(|id| relevant.contains(id.as_ref())) {
        1.0
    } else {
        0.0
    }
}

/// Reciprocal rank of the first relevant id if it is within `k`, else 0.
pub fn mrr_at_k<S: AsRef<str>>(ranked: &[S], relevant: &HashSet<String>, k: usize) -> f64 {
    assert!(k >= 1, "k must be >= 1");
    first_relevant_rank(ranked, relevant).filter(|&r| r <= k).map_or(0.0, |r| 1.0 / r as f64)
}

/// 1-based rank of the first relevant id.
pub fn first_relevant_rank<S: AsRef<str>>(ranked: &[S], relevant: &HashSet<String>) -> Option<usize> {
    ranked.iter().position(|id| relevant.contains(id.as_ref())).map(|p| p + 1)
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}
