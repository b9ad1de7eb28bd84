//! HTTP client for an external embedding/scoring service.
//!
//! Endpoints: `POST /v1/embed`, `POST /v1/score`, `GET /v1/health`. Requests
//! carry at most [`MAX_ITEMS`] items; larger inputs are split into chunks that
//! are sent concurrently and reassembled in input order.

use std::time::Duration;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Query, Section, SegmentKind};
use crate::encoder::{EncodeError, EncoderBackend};

/// Per-request item limit enforced by the service.
pub const MAX_ITEMS: usize = 64;

#[derive(Debug, Error)]
pub enum RemoteError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("protocol error: {0}")]
    ProtocolError(String),
    #[error("service returned {status}: {body}")]
    ServiceError { status: u16, body: String },
}

/// One request item. Images travel as base64 of their `"src | alt"`
/// reference string; the service decides whether to fetch pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireItem {
    pub text: String,
    pub images: Vec<String>,
    pub tables: Vec<String>,
}

impl WireItem {
    pub fn from_query(q: &Query) -> Self {
        Self {
            text: q.text.clone(),
            images: q.image_refs.iter().map(|r| BASE64.encode(r)).collect(),
            tables: Vec::new(),
        }
    }

    pub fn from_section(s: &Section) -> Self {
        let mut text: Vec<&str> = Vec::new();
        if !s.heading.is_empty() {
            text.push(&s.heading);
        }
        let mut images = Vec::new();
        let mut tables = Vec::new();
        for seg in &s.segments {
            match seg.kind {
                SegmentKind::Text => text.push(&seg.content),
                SegmentKind::Image => images.push(BASE64.encode(&seg.content)),
                SegmentKind::Table => tables.push(seg.content.clone()),
            }
        }
        Self { text: text.join("\n"), images, tables }
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    role: &'a str,
    items: &'a [WireItem],
}

#[derive(Deserialize)]
struct EmbedResponse {
    dim: usize,
    embeddings: Vec<Vec<f32>>,
}

#[derive(Serialize)]
struct ScoreRequest<'a> {
    query: &'a WireItem,
    sections: &'a [WireItem],
}

#[derive(Deserialize)]
struct ScoreResponse {
    scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct Health {
    pub status: String,
    pub model: String,
    pub dim: usize,
}

/// Remote encoder backend. The embedding width is fixed at connect time
/// from `/v1/health` and every later response is checked against it.
#[derive(Debug, Clone)]
pub struct RemoteEncoder {
    base: String,
    agent: ureq::Agent,
    dim: usize,
}

impl RemoteEncoder {
    pub fn connect(endpoint: &str) -> Result<Self, RemoteError> {
        let agent = ureq::AgentBuilder::new()
            .timeout_connect(Duration::from_secs(5))
            .timeout(Duration::from_secs(120))
            .build();
        let base = endpoint.trim_end_matches('/').to_string();
        let mut client = Self { base, agent, dim: 0 };
        let health = client.health()?;
        if health.dim == 0 {
            return Err(RemoteError::ProtocolError("service declared dim 0".into()));
        }
        client.dim = health.dim;
        Ok(client)
    }

    pub fn health(&self) -> Result<Health, RemoteError> {
        let resp = self.agent.get(&format!("{}/v1/health", self.base)).call().map_err(map_ureq)?;
        resp.into_json().map_err(|e| RemoteError::ProtocolError(format!("health body: {e}")))
    }

    fn post<T: for<'de> Deserialize<'de>>(&self, path: &str, body: impl Serialize) -> Result<T, RemoteError> {
        let resp = self
            .agent
            .post(&format!("{}{path}", self.base))
            .send_json(body)
            .map_err(map_ureq)?;
        resp.into_json().map_err(|e| RemoteError::ProtocolError(format!("{path} body: {e}")))
    }

    fn embed_chunk(&self, role: &str, items: &[WireItem]) -> Result<Vec<Vec<f32>>, RemoteError> {
        let resp: EmbedResponse = self.post("/v1/embed", EmbedRequest { role, items })?;
        if resp.embeddings.len() != items.len() {
            return Err(RemoteError::ProtocolError(format!(
                "sent {} items, received {} embeddings",
                items.len(),
                resp.embeddings.len()
            )));
        }
        if resp.dim != self.dim {
            return Err(RemoteError::ProtocolError(format!(
                "declared dim {} differs from service dim {}",
                resp.dim, self.dim
            )));
        }
        if let Some(bad) = resp.embeddings.iter().find(|e| e.len() != self.dim) {
            return Err(RemoteError::ProtocolError(format!(
                "embedding of length {} where dim is {}",
                bad.len(),
                self.dim
            )));
        }
        Ok(resp.embeddings)
    }

    /// Embeds `items`, splitting into concurrent chunks of at most
    /// [`MAX_ITEMS`]; output order matches input order.
    pub fn embed(&self, role: &str, items: &[WireItem]) -> Result<Vec<Vec<f32>>, RemoteError> {
        if items.is_empty() {
            return Ok(Vec::new());
        }
        let chunks: Vec<&[WireItem]> = items.chunks(MAX_ITEMS).collect();
        let results: Vec<_> = std::thread::scope(|scope| {
            let handles: Vec<_> = chunks
                .iter()
                .map(|chunk| scope.spawn(move || self.embed_chunk(role, chunk)))
                .collect();
            handles.into_iter().map(|h| h.join().expect("embed worker panicked")).collect()
        });
        let mut out = Vec::with_capacity(items.len());
        for r in results {
            out.extend(r?);
        }
        Ok(out)
    }

    /// Pair scores for each section; every score must lie in (0, 1).
    pub fn score(&self, query: &Query, sections: &[Section]) -> Result<Vec<f64>, RemoteError> {
        let q = WireItem::from_query(query);
        let items: Vec<WireItem> = sections.iter().map(WireItem::from_section).collect();
        let resp: ScoreResponse = self.post("/v1/score", ScoreRequest { query: &q, sections: &items })?;
        if resp.scores.len() != items.len() {
            return Err(RemoteError::ProtocolError(format!(
                "sent {} sections, received {} scores",
                items.len(),
                resp.scores.len()
            )));
        }
        if let Some(s) = resp.scores.iter().find(|s| !(**s > 0.0 && **s < 1.0)) {
            return Err(RemoteError::ProtocolError(format!("score {s} outside (0, 1)")));
        }
        Ok(resp.scores)
    }
}

fn map_ureq(e: ureq::Error) -> RemoteError {
    match e {
        ureq::Error::Status(status, resp) => {
            RemoteError::ServiceError { status, body: resp.into_string().unwrap_or_default() }
        }
        ureq::Error::Transport(t) => RemoteError::Transport(t.to_string()),
    }
}

impl EncoderBackend for RemoteEncoder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode_query(&self, q: &Query) -> Result<Vec<f32>, EncodeError> {
        Ok(self.embed("query", &[WireItem::from_query(q)])?.remove(0))
    }

    fn encode_queries(&self, queries: &[Query]) -> Result<Vec<Vec<f32>>, EncodeError> {
        let items: Vec<WireItem> = queries.iter().map(WireItem::from_query).collect();
        Ok(self.embed("query", &items)?)
    }

    fn encode_sections(&self, sections: &[Section]) -> Result<Vec<Vec<f32>>, EncodeError> {
        let items: Vec<WireItem> = sections.iter().map(WireItem::from_section).collect();
        Ok(self.embed("section", &items)?)
    }
}

/// Outcome of one conformance probe.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Probes a service for protocol conformance: health, dim and count
/// consistency, deterministic duplicate items, score cardinality and range.
///
/// Transport failures on connect are returned as errors; every later
/// deviation is reported as a failed check.
pub fn sidecar_check(endpoint: &str) -> Result<Vec<CheckResult>, RemoteError> {
    let client = RemoteEncoder::connect(endpoint)?;
    let mut out = Vec::new();
    let mut record = |name, r: Result<String, RemoteError>| {
        let (passed, detail) = match r {
            Ok(d) => (true, d),
            Err(e) => (false, e.to_string()),
        };
        out.push(CheckResult { name, passed, detail });
    };

    record("health", client.health().and_then(|h| {
        if h.status == "ok" {
            Ok(format!("model {} dim {}", h.model, h.dim))
        } else {
            Err(RemoteError::ProtocolError(format!("status {:?}", h.status)))
        }
    }));

    let q = Query { query_id: "probe".into(), text: "who built the tower".into(), image_refs: vec!["tower.jpg | stone tower".into()] };
    let item = WireItem::from_query(&q);
    record("embed_query_count_dim", client.embed("query", &[item.clone(), item.clone()]).and_then(|e| {
        if e[0] == e[1] {
            Ok(format!("2 embeddings of dim {}", client.dim))
        } else {
            Err(RemoteError::ProtocolError("identical items produced different embeddings".into()))
        }
    }));

    let sections: Vec<Section> = (0..3)
        .map(|i| Section {
            section_id: format!("s{i}"),
            heading: format!("Part {i}"),
            segments: vec![crate::corpus::Segment::text(format!("the tower was built in year {i}"))],
        })
        .collect();
    let section_items: Vec<WireItem> = sections.iter().map(WireItem::from_section).collect();
    record(
        "embed_section_count_dim",
        client.embed("section", &section_items).map(|e| format!("{} embeddings of dim {}", e.len(), client.dim)),
    );
    record("score_range", client.score(&q, &sections).map(|s| format!("{} scores in (0,1)", s.len())));
    Ok(out)
}
