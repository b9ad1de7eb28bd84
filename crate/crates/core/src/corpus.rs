//! Interleaved document model.
//!
//! A [`Document`] is an ordered list of [`Section`]s, and each section is an
//! ordered list of text, image, and table [`Segment`]s. [`apply_format`]
//! derives the reduced document views (entity, summary, text-only,
//! single-image) that the format ablation compares against the full
//! interleaved document.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentKind {
    Text,
    Image,
    Table,
}

/// One modality-typed piece of section content.
///
/// Image content is `"src | alt"` (or just `"src"`); table content is
/// normalized HTML starting with `<table` and ending with `</table>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub kind: SegmentKind,
    pub content: String,
}

impl Segment {
    pub fn text(content: impl Into<String>) -> Self {
        Self { kind: SegmentKind::Text, content: content.into() }
    }

    pub fn image(content: impl Into<String>) -> Self {
        Self { kind: SegmentKind::Image, content: content.into() }
    }

    pub fn table(content: impl Into<String>) -> Self {
        Self { kind: SegmentKind::Table, content: content.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Section {
    pub section_id: String,
    /// Empty for the lead section.
    pub heading: String,
    pub segments: Vec<Segment>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    pub doc_id: String,
    pub title: String,
    pub sections: Vec<Section>,
}

impl Document {
    pub fn section(&self, section_id: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.section_id == section_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Query {
    pub query_id: String,
    pub text: String,
    /// Image references in `"src | alt"` form.
    #[serde(default)]
    pub image_refs: Vec<String>,
}

impl Query {
    pub fn text(query_id: impl Into<String>, text: impl Into<String>) -> Self {
        Self { query_id: query_id.into(), text: text.into(), image_refs: Vec::new() }
    }
}

/// Relevance label linking a query to a document and optionally a section.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QRel {
    pub query_id: String,
    pub doc_id: String,
    pub section_id: Option<String>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ValidationError {
    #[error("document {0:?} has no sections")]
    EmptySections(String),
    #[error("section {section_id:?} of document {doc_id:?} has no segments")]
    NoSegments { doc_id: String, section_id: String },
    #[error("empty segment in section {section_id:?} of document {doc_id:?}")]
    EmptySegment { doc_id: String, section_id: String },
    #[error("table segment in section {section_id:?} of document {doc_id:?} is not <table>...</table>")]
    MalformedTable { doc_id: String, section_id: String },
    #[error("duplicate section id {0:?}")]
    DuplicateSectionId(String),
    #[error("duplicate document id {0:?}")]
    DuplicateDocId(String),
    #[error("query {0:?} has neither text nor image references")]
    EmptyQuery(String),
    #[error("duplicate query id {0:?}")]
    DuplicateQueryId(String),
}

pub fn validate_document(doc: &Document) -> Result<(), ValidationError> {
    if doc.sections.is_empty() {
        return Err(ValidationError::EmptySections(doc.doc_id.clone()));
    }
    let mut seen = HashSet::new();
    for section in &doc.sections {
        if !seen.insert(section.section_id.as_str()) {
            return Err(ValidationError::DuplicateSectionId(section.section_id.clone()));
        }
        if section.segments.is_empty() {
            return Err(ValidationError::NoSegments {
                doc_id: doc.doc_id.clone(),
                section_id: section.section_id.clone(),
            });
        }
        for segment in &section.segments {
            let content = segment.content.trim();
            if content.is_empty() {
                return Err(ValidationError::EmptySegment {
                    doc_id: doc.doc_id.clone(),
                    section_id: section.section_id.clone(),
                });
            }
            if segment.kind == SegmentKind::Table
                && !(content.starts_with("<table") && content.ends_with("</table>"))
            {
                return Err(ValidationError::MalformedTable {
                    doc_id: doc.doc_id.clone(),
                    section_id: section.section_id.clone(),
                });
            }
        }
    }
    Ok(())
}

pub fn validate_query(query: &Query) -> Result<(), ValidationError> {
    let has_text = !query.text.trim().is_empty();
    let has_images = query.image_refs.iter().any(|r| !r.trim().is_empty());
    if has_text || has_images {
        Ok(())
    } else {
        Err(ValidationError::EmptyQuery(query.query_id.clone()))
    }
}

/// A validated collection of documents with unique ids, kept in load order.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    docs: Vec<Document>,
    by_id: HashMap<String, usize>,
}

impl PartialEq for Corpus {
    fn eq(&self, other: &Self) -> bool {
        self.docs == other.docs
    }
}

impl Corpus {
    pub fn new(docs: Vec<Document>) -> Result<Self, ValidationError> {
        let mut by_id = HashMap::with_capacity(docs.len());
        for (i, doc) in docs.iter().enumerate() {
            validate_document(doc)?;
            if by_id.insert(doc.doc_id.clone(), i).is_some() {
                return Err(ValidationError::DuplicateDocId(doc.doc_id.clone()));
            }
        }
        Ok(Self { docs, by_id })
    }

    pub fn docs(&self) -> &[Document] {
        &self.docs
    }

    pub fn get(&self, doc_id: &str) -> Option<&Document> {
        self.by_id.get(doc_id).map(|&i| &self.docs[i])
    }

    pub fn position(&self, doc_id: &str) -> Option<usize> {
        self.by_id.get(doc_id).copied()
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Document> {
        self.docs.iter()
    }

    pub fn into_docs(self) -> Vec<Document> {
        self.docs
    }

    /// Maps every document through `fmt`.
    pub fn with_format(&self, fmt: DocFormat) -> Corpus {
        let docs = self.docs.iter().map(|d| apply_format(d, fmt)).collect();
        Corpus { docs, by_id: self.by_id.clone() }
    }
}

/// Document representations compared by the format ablation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocFormat {
    Entity,
    Summary,
    TextOnly,
    SingleImage,
    Interleaved,
}

impl DocFormat {
    pub const ALL: [DocFormat; 5] = [
        DocFormat::Entity,
        DocFormat::Summary,
        DocFormat::TextOnly,
        DocFormat::SingleImage,
        DocFormat::Interleaved,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DocFormat::Entity => "entity",
            DocFormat::Summary => "summary",
            DocFormat::TextOnly => "text_only",
            DocFormat::SingleImage => "single_image",
            DocFormat::Interleaved => "interleaved",
        }
    }
}

impl fmt::Display for DocFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DocFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DocFormat::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| format!("unknown document format {s:?}"))
    }
}

/// Section id used when a view collapses the document to its title.
pub const TITLE_SECTION_ID: &str = "title";

fn title_section(doc: &Document) -> Section {
    let text = if doc.title.trim().is_empty() { &doc.doc_id } else { &doc.title };
    Section {
        section_id: TITLE_SECTION_ID.to_string(),
        heading: String::new(),
        segments: vec![Segment::text(text.clone())],
    }
}

fn text_segments(section: &Section) -> Vec<Segment> {
    section.segments.iter().filter(|s| s.kind == SegmentKind::Text).cloned().collect()
}

/// Derives the `fmt` view of a valid document.
///
/// Sections that end up with no segments are dropped; if every section
/// drops, the view falls back to a single title section.
pub fn apply_format(doc: &Document, fmt: DocFormat) -> Document {
    let sections: Vec<Section> = match fmt {
        DocFormat::Interleaved => return doc.clone(),
        DocFormat::Entity => vec![title_section(doc)],
        DocFormat::Summary => doc
            .sections
            .first()
            .map(|s| Section { segments: text_segments(s), ..s.clone() })
            .into_iter()
            .collect(),
        DocFormat::TextOnly => doc
            .sections
            .iter()
            .map(|s| Section { segments: text_segments(s), ..s.clone() })
            .collect(),
        DocFormat::SingleImage => {
            let mut first_image_taken = false;
            doc.sections
                .iter()
                .map(|s| {
                    let mut segments = Vec::with_capacity(s.segments.len());
                    if !first_image_taken {
                        if let Some(img) = s.segments.iter().find(|g| g.kind == SegmentKind::Image) {
                            segments.push(img.clone());
                            first_image_taken = true;
                        }
                    }
                    segments.extend(text_segments(s));
                    Section { segments, ..s.clone() }
                })
                .collect()
        }
    };

    let mut sections: Vec<Section> =
        sections.into_iter().filter(|s| !s.segments.is_empty()).collect();
    if sections.is_empty() {
        sections.push(title_section(doc));
    }
    Document { doc_id: doc.doc_id.clone(), title: doc.title.clone(), sections }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn section(id: &str, segments: Vec<Segment>) -> Section {
        Section { section_id: id.into(), heading: String::new(), segments }
    }

    fn mixed_doc() -> Document {
        Document {
            doc_id: "d1".into(),
            title: "X".into(),
            sections: vec![
                section(
                    "s1",
                    vec![
                        Segment::text("lead text"),
                        Segment::image("a.jpg | first"),
                        Segment::table("<table><tr><td>1</td></tr></table>"),
                    ],
                ),
                section("s2", vec![Segment::text("more")]),
            ],
        }
    }

    #[test]
    fn minimal_document_is_valid() {
        let doc = Document {
            doc_id: "d".into(),
            title: "t".into(),
            sections: vec![section("s1", vec![Segment::text("a")])],
        };
        assert_eq!(validate_document(&doc), Ok(()));
    }

    #[test]
    fn invariant_violations() {
        let empty = Document { doc_id: "d".into(), title: "t".into(), sections: vec![] };
        assert_eq!(validate_document(&empty), Err(ValidationError::EmptySections("d".into())));

        let dup = Document {
            doc_id: "d".into(),
            title: "t".into(),
            sections: vec![
                section("s1", vec![Segment::text("a")]),
                section("s1", vec![Segment::text("b")]),
            ],
        };
        assert_eq!(validate_document(&dup), Err(ValidationError::DuplicateSectionId("s1".into())));

        let blank = Document {
            doc_id: "d".into(),
            title: "t".into(),
            sections: vec![section("s1", vec![Segment::text(" \n\t")])],
        };
        assert!(matches!(validate_document(&blank), Err(ValidationError::EmptySegment { .. })));

        let table = Document {
            doc_id: "d".into(),
            title: "t".into(),
            sections: vec![section("s1", vec![Segment::table("<tr></tr>")])],
        };
        assert!(matches!(validate_document(&table), Err(ValidationError::MalformedTable { .. })));
    }

    #[test]
    fn interleaved_is_identity() {
        let doc = mixed_doc();
        assert_eq!(apply_format(&doc, DocFormat::Interleaved), doc);
    }

    #[test]
    fn text_only_keeps_text_segments() {
        let out = apply_format(&mixed_doc(), DocFormat::TextOnly);
        assert_eq!(out.sections.len(), 2);
        assert_eq!(out.sections[0].segments, vec![Segment::text("lead text")]);
        assert_eq!(out.sections[1].segments, vec![Segment::text("more")]);
    }

    #[test]
    fn single_image_golden() {
        let out = apply_format(&mixed_doc(), DocFormat::SingleImage);
        let expected = Document {
            doc_id: "d1".into(),
            title: "X".into(),
            sections: vec![
                section("s1", vec![Segment::image("a.jpg | first"), Segment::text("lead text")]),
                section("s2", vec![Segment::text("more")]),
            ],
        };
        assert_eq!(out, expected);
    }

    #[test]
    fn single_image_restores_image_only_section() {
        let doc = Document {
            doc_id: "d".into(),
            title: "T".into(),
            sections: vec![
                section("s1", vec![Segment::table("<table></table>")]),
                section("s2", vec![Segment::image("p.png | pic"), Segment::image("q.png")]),
                section("s3", vec![Segment::text("body")]),
            ],
        };
        let out = apply_format(&doc, DocFormat::SingleImage);
        let ids: Vec<_> = out.sections.iter().map(|s| s.section_id.as_str()).collect();
        assert_eq!(ids, ["s2", "s3"]);
        assert_eq!(out.sections[0].segments, vec![Segment::image("p.png | pic")]);
    }

    #[test]
    fn entity_and_summary() {
        let doc = mixed_doc();
        let entity = apply_format(&doc, DocFormat::Entity);
        assert_eq!(entity.sections.len(), 1);
        assert_eq!(entity.sections[0].segments, vec![Segment::text("X")]);

        let summary = apply_format(&doc, DocFormat::Summary);
        assert_eq!(summary.sections.len(), 1);
        assert_eq!(summary.sections[0].section_id, "s1");
        assert_eq!(summary.sections[0].segments, vec![Segment::text("lead text")]);
    }

    #[test]
    fn all_dropped_falls_back_to_title() {
        let doc = Document {
            doc_id: "d".into(),
            title: "Only Pictures".into(),
            sections: vec![section("s1", vec![Segment::image("a.jpg")])],
        };
        let out = apply_format(&doc, DocFormat::TextOnly);
        assert_eq!(out.sections, vec![title_section(&doc)]);
        validate_document(&out).unwrap();
    }

    #[test]
    fn format_names_round_trip() {
        for f in DocFormat::ALL {
            assert_eq!(f.as_str().parse::<DocFormat>(), Ok(f));
        }
        assert!("pdf".parse::<DocFormat>().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_segment() -> impl Strategy<Value = Segment> {
            prop_oneof![
                "[a-z]{1,6}( [a-z]{1,6}){0,3}".prop_map(Segment::text),
                "[a-z]{1,5}\\.jpg( \\| [a-z]{1,5})?".prop_map(Segment::image),
                "[a-z]{0,4}".prop_map(|c| Segment::table(format!("<table><tr><td>{c}</td></tr></table>"))),
            ]
        }

        fn arb_doc() -> impl Strategy<Value = Document> {
            (
                "[A-Z][a-z]{1,8}",
                prop::collection::vec(
                    ("[a-z]{0,6}", prop::collection::vec(arb_segment(), 1..5)),
                    1..6,
                ),
            )
                .prop_map(|(title, secs)| Document {
                    doc_id: "doc".into(),
                    title,
                    sections: secs
                        .into_iter()
                        .enumerate()
                        .map(|(i, (heading, segments))| Section {
                            section_id: format!("s{i}"),
                            heading,
                            segments,
                        })
                        .collect(),
                })
        }

        proptest! {
            #[test]
            fn views_are_valid_and_idempotent(doc in arb_doc()) {
                validate_document(&doc).unwrap();
                for fmt in DocFormat::ALL {
                    let once = apply_format(&doc, fmt);
                    prop_assert!(validate_document(&once).is_ok());
                    prop_assert_eq!(&apply_format(&once, fmt), &once);
                }
                prop_assert_eq!(apply_format(&doc, DocFormat::Interleaved), doc.clone());
                let entity = apply_format(&doc, DocFormat::Entity);
                prop_assert_eq!(entity.sections.len(), 1);
                prop_assert_eq!(&entity.sections[0].segments, &vec![Segment::text(doc.title.clone())]);
            }
        }
    }
}
