use std::collections::HashSet;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::IngestError;
use crate::corpus::{validate_document, validate_query, Corpus, Document, QRel, Query, ValidationError};

/// Marker written in the section column of a document-level qrel.
const NO_SECTION: &str = "-";

fn read_lines(path: &Path) -> Result<String, IngestError> {
    fs::read_to_string(path).map_err(|e| IngestError::io(path, e))
}

fn parse_jsonl<T: DeserializeOwned>(src: &str) -> Result<Vec<(usize, T)>, IngestError> {
    src.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map(|v| (i + 1, v))
                .map_err(|e| IngestError::SchemaError { line: i + 1, message: e.to_string() })
        })
        .collect()
}

fn write_jsonl<T: Serialize>(items: &[T], path: &Path) -> Result<(), IngestError> {
    let file = fs::File::create(path).map_err(|e| IngestError::io(path, e))?;
    let mut out = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut out, item).expect("corpus types serialize");
        out.write_all(b"\n").map_err(|e| IngestError::io(path, e))?;
    }
    out.flush().map_err(|e| IngestError::io(path, e))
}

fn schema(line: usize, e: ValidationError) -> IngestError {
    IngestError::SchemaError { line, message: e.to_string() }
}

pub fn read_corpus(path: &Path) -> Result<Corpus, IngestError> {
    let docs: Vec<(usize, Document)> = parse_jsonl(&read_lines(path)?)?;
    let mut seen = HashSet::new();
    for (line, doc) in &docs {
        validate_document(doc).map_err(|e| schema(*line, e))?;
        if !seen.insert(doc.doc_id.as_str()) {
            return Err(schema(*line, ValidationError::DuplicateDocId(doc.doc_id.clone())));
        }
    }
    Ok(Corpus::new(docs.into_iter().map(|(_, d)| d).collect())?)
}

pub fn write_corpus(corpus: &Corpus, path: &Path) -> Result<(), IngestError> {
    write_jsonl(corpus.docs(), path)
}

pub fn read_queries(path: &Path) -> Result<Vec<Query>, IngestError> {
    let queries: Vec<(usize, Query)> = parse_jsonl(&read_lines(path)?)?;
    let mut seen = HashSet::new();
    for (line, q) in &queries {
        validate_query(q).map_err(|e| schema(*line, e))?;
        if !seen.insert(q.query_id.as_str()) {
            return Err(schema(*line, ValidationError::DuplicateQueryId(q.query_id.clone())));
        }
    }
    Ok(queries.into_iter().map(|(_, q)| q).collect())
}

pub fn write_queries(queries: &[Query], path: &Path) -> Result<(), IngestError> {
    write_jsonl(queries, path)
}

/// Reads `query_id \t doc_id \t section_id` lines; `-` marks a
/// document-level label.
pub fn read_qrels(path: &Path) -> Result<Vec<QRel>, IngestError> {
    let src = read_lines(path)?;
    let mut qrels = Vec::new();
    for (i, line) in src.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let bad = |message: String| IngestError::SchemaError { line: i + 1, message };
        if cols.len() != 3 {
            return Err(bad(format!("expected 3 tab-separated columns, found {}", cols.len())));
        }
        if cols.iter().any(|c| c.is_empty()) {
            return Err(bad("empty column".into()));
        }
        qrels.push(QRel {
            query_id: cols[0].to_string(),
            doc_id: cols[1].to_string(),
            section_id: (cols[2] != NO_SECTION).then(|| cols[2].to_string()),
        });
    }
    Ok(qrels)
}

pub fn write_qrels(qrels: &[QRel], path: &Path) -> Result<(), IngestError> {
    let mut out = String::new();
    for q in qrels {
        let section = q.section_id.as_deref().unwrap_or(NO_SECTION);
        out.push_str(&format!("{}\t{}\t{}\n", q.query_id, q.doc_id, section));
    }
    fs::write(path, out).map_err(|e| IngestError::io(path, e))
}

/// Checks that every qrel names an existing query, document, and section.
pub fn validate_qrels(qrels: &[QRel], corpus: &Corpus, queries: &[Query]) -> Result<(), IngestError> {
    let query_ids: HashSet<&str> = queries.iter().map(|q| q.query_id.as_str()).collect();
    for q in qrels {
        let dangling = |kind, id: &str| IngestError::DanglingReference {
            query_id: q.query_id.clone(),
            kind,
            id: id.to_string(),
        };
        if !query_ids.contains(q.query_id.as_str()) {
            return Err(dangling("query", &q.query_id));
        }
        let doc = corpus.get(&q.doc_id).ok_or_else(|| dangling("document", &q.doc_id))?;
        if let Some(sid) = &q.section_id {
            if doc.section(sid).is_none() {
                return Err(dangling("section", &format!("{}#{sid}", q.doc_id)));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Section, Segment};

    fn doc(id: &str) -> Document {
        Document {
            doc_id: id.into(),
            title: format!("Title {id}"),
            sections: vec![Section {
                section_id: "s0".into(),
                heading: String::new(),
                segments: vec![Segment::text("body"), Segment::image("a.png | alt")],
            }],
        }
    }

    #[test]
    fn corpus_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let corpus = Corpus::new(vec![doc("a"), doc("b"), doc("c")]).unwrap();
        write_corpus(&corpus, &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        let back = read_corpus(&path).unwrap();
        assert_eq!(back, corpus);
        write_corpus(&back, &path).unwrap();
        assert_eq!(fs::read(&path).unwrap(), bytes);
    }

    #[test]
    fn missing_doc_id_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let good = serde_json::to_string(&doc("a")).unwrap();
        fs::write(&path, format!("{good}\n{{\"title\":\"x\",\"sections\":[]}}\n")).unwrap();
        assert!(matches!(read_corpus(&path), Err(IngestError::SchemaError { line: 2, .. })));
    }

    #[test]
    fn qrels_round_trip_and_dangling() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("q.tsv");
        let qrels = vec![
            QRel { query_id: "q1".into(), doc_id: "a".into(), section_id: Some("s0".into()) },
            QRel { query_id: "q2".into(), doc_id: "zz".into(), section_id: None },
        ];
        write_qrels(&qrels, &path).unwrap();
        assert_eq!(read_qrels(&path).unwrap(), qrels);

        let corpus = Corpus::new(vec![doc("a")]).unwrap();
        let queries = vec![Query::text("q1", "x"), Query::text("q2", "y")];
        let err = validate_qrels(&qrels, &corpus, &queries).unwrap_err();
        assert!(matches!(err, IngestError::DanglingReference { kind: "document", .. }));
        assert!(validate_qrels(&qrels[..1], &corpus, &queries).is_ok());
    }

    #[test]
    fn qrels_wrong_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("q.tsv");
        fs::write(&path, "q1\ta\t-\nq2\ta\n").unwrap();
        assert!(matches!(read_qrels(&path), Err(IngestError::SchemaError { line: 2, .. })));
    }
}
