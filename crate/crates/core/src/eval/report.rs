//! Evaluation reports: named metrics plus per-query detail, rendered as JSON
//! and as an aligned text table with identical numbers.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Per-query outcome: the 1-based rank of the first relevant item (if it was
/// ranked at all) and the top-ranked item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRow {
    pub query_id: String,
    pub rank: Option<usize>,
    pub top: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: BTreeMap<String, String>,
    pub seed: u64,
    pub metrics: BTreeMap<String, f64>,
    pub per_query: Vec<QueryRow>,
}

impl EvalReport {
    pub fn new(seed: u64) -> Self {
        Self { config: BTreeMap::new(), seed, metrics: BTreeMap::new(), per_query: Vec::new() }
    }

    pub fn with_config(mut self, key: &str, value: impl ToString) -> Self {
        self.config.insert(key.to_string(), value.to_string());
        self
    }

    pub fn metric(&self, name: &str) -> f64 {
        *self.metrics.get(name).unwrap_or_else(|| panic!("report has no metric {name:?}"))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// `R@K` values in ascending K order.
    pub fn recalls(&self) -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64)> = self
            .metrics
            .iter()
            .filter_map(|(k, v)| k.strip_prefix("R@").and_then(|n| n.parse().ok()).map(|n| (n, *v)))
            .collect();
        out.sort_by_key(|p| p.0);
        out
    }

    /// Checks the structural metric invariants: every value in [0, 1], R@K
    /// non-decreasing in K, and MRR@K ≤ R@K wherever both are present.
    pub fn check_invariants(&self) -> Result<(), String> {
        for (k, v) in &self.metrics {
            if !(0.0..=1.0).contains(v) {
                return Err(format!("{k} = {v} outside [0, 1]"));
            }
        }
        let recalls = self.recalls();
        for w in recalls.windows(2) {
            if w[1].1 < w[0].1 {
                return Err(format!("R@{} = {} < R@{} = {}", w[1].0, w[1].1, w[0].0, w[0].1));
            }
        }
        for (k, r) in &recalls {
            if let Some(m) = self.metrics.get(&format!("MRR@{k}")) {
                if *m > *r {
                    return Err(format!("MRR@{k} = {m} > R@{k} = {r}"));
                }
            }
        }
        Ok(())
    }
}

/// Formats metric values as percentages with one decimal.
fn pct(v: f64) -> String {
    format!("{:.1}", v * 100.0)
}

/// Aligned text table: one row per labeled report, one column per metric.
pub fn render_table(rows: &[(String, &EvalReport)]) -> String {
    let mut metrics: Vec<&String> = Vec::new();
    for (_, r) in rows {
        for k in r.metrics.keys() {
            if !metrics.contains(&k) {
                metrics.push(k);
            }
        }
    }
    // R@K ascending, then everything else alphabetically.
    metrics.sort_by_key(|m| match m.strip_prefix("R@").and_then(|n| n.parse::<usize>().ok()) {
        Some(n) => (0, n, String::new()),
        None => (1, 0, m.to_string()),
    });
    let label_w = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0).max(5);
    let col_w: Vec<usize> = metrics.iter().map(|m| m.len().max(5)).collect();
    let mut out = format!("{:<label_w$}", "");
    for (m, w) in metrics.iter().zip(&col_w) {
        out.push_str(&format!("  {m:>w$}"));
    }
    out.push('\n');
    for (label, r) in rows {
        out.push_str(&format!("{label:<label_w$}"));
        for (m, w) in metrics.iter().zip(&col_w) {
            let cell = r.metrics.get(*m).map_or("-".to_string(), |v| pct(*v));
            out.push_str(&format!("  {cell:>w$}"));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(pairs: &[(&str, f64)]) -> EvalReport {
        let mut r = EvalReport::new(1);
        for (k, v) in pairs {
            r.metrics.insert(k.to_string(), *v);
        }
        r
    }

    #[test]
    fn invariants() {
        assert!(report(&[("R@1", 0.2), ("R@10", 0.5), ("MRR@10", 0.3)]).check_invariants().is_ok());
        assert!(report(&[("R@1", 0.6), ("R@10", 0.5)]).check_invariants().is_err());
        assert!(report(&[("R@10", 0.5), ("MRR@10", 0.6)]).check_invariants().is_err());
        assert!(report(&[("Acc@1", 1.5)]).check_invariants().is_err());
    }

    #[test]
    fn json_round_trip() {
        let r = report(&[("R@1", 0.25)]).with_config("format", "interleaved");
        let back: EvalReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert!(r.to_json().contains("\"per_query\""));
    }

    #[test]
    fn table_orders_recall_numerically() {
        let r = report(&[("R@1", 0.25), ("R@10", 0.5), ("R@100", 1.0), ("MRR@10", 0.3)]);
        let t = render_table(&[("interleaved".into(), &r)]);
        let header = t.lines().next().unwrap();
        let cols: Vec<&str> = header.split_whitespace().collect();
        assert_eq!(cols, ["R@1", "R@10", "R@100", "MRR@10"]);
        assert!(t.lines().nth(1).unwrap().contains("25.0"));
    }
}
