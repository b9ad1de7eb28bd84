use ego_tree::NodeRef;
use scraper::{ElementRef, Html, Node};

use super::{linearize_table, IngestError};
use crate::corpus::{Document, Section, Segment};

const SKIPPED: [&str; 9] =
    ["head", "title", "script", "style", "nav", "footer", "noscript", "template", "h1"];
const SUBTITLES: [&str; 2] = ["h2", "h3"];
/// Elements that do not introduce a word boundary.
const INLINE: [&str; 20] = [
    "a", "abbr", "b", "bdi", "bdo", "cite", "code", "data", "em", "i", "kbd", "mark", "q", "s",
    "samp", "small", "span", "strong", "sub", "sup",
];

/// Parses an HTML page into an interleaved [`Document`].
///
/// The lead section holds content before the first `<h2>`/`<h3>`; every
/// subtitle after that opens a new section. Deeper headings stay inside the
/// enclosing section.
pub fn parse_html(html: &[u8], doc_id: &str) -> Result<Document, IngestError> {
    let source = std::str::from_utf8(html)
        .map_err(|e| IngestError::MalformedInput(format!("{doc_id}: {e}")))?;
    let dom = Html::parse_document(source);

    let title = first_text(&dom, "title")
        .filter(|t| !t.is_empty())
        .or_else(|| first_text(&dom, "h1"))
        .unwrap_or_default();

    let mut builder = SectionBuilder::default();
    for child in dom.tree.root().children() {
        walk(child, &mut builder);
    }
    let sections = builder.finish();
    if sections.is_empty() {
        return Err(IngestError::NoContent(doc_id.to_string()));
    }
    Ok(Document { doc_id: doc_id.to_string(), title, sections })
}

fn first_text(dom: &Html, tag: &str) -> Option<String> {
    let selector = scraper::Selector::parse(tag).expect("tag selector");
    dom.select(&selector).next().map(|el| collapse_whitespace(&el.text().collect::<String>()))
}

fn walk(node: NodeRef<'_, Node>, builder: &mut SectionBuilder) {
    match node.value() {
        Node::Text(text) => builder.text.push_str(text),
        Node::Element(element) => {
            let name = element.name();
            if SKIPPED.contains(&name) {
                return;
            }
            let el = ElementRef::wrap(node).expect("element node");
            if SUBTITLES.contains(&name) {
                builder.start_section(collapse_whitespace(&el.text().collect::<String>()));
                return;
            }
            match name {
                "img" => {
                    builder.push_image(element.attr("src"), element.attr("alt"));
                    return;
                }
                "table" => {
                    builder.push_table(&el.html());
                    return;
                }
                _ => {}
            }
            let block = !INLINE.contains(&name);
            if block {
                builder.text.push(' ');
            }
            for child in node.children() {
                walk(child, builder);
            }
            if block {
                builder.text.push(' ');
            }
        }
        Node::Document | Node::Fragment => {
            for child in node.children() {
                walk(child, builder);
            }
        }
        _ => {}
    }
}

#[derive(Default)]
struct SectionBuilder {
    done: Vec<(String, Vec<Segment>)>,
    heading: String,
    segments: Vec<Segment>,
    text: String,
}

impl SectionBuilder {
    fn flush_text(&mut self) {
        let text = collapse_whitespace(&self.text);
        self.text.clear();
        if !text.is_empty() {
            self.segments.push(Segment::text(text));
        }
    }

    fn start_section(&mut self, heading: String) {
        self.flush_text();
        let segments = std::mem::take(&mut self.segments);
        let previous = std::mem::replace(&mut self.heading, heading);
        if !segments.is_empty() {
            self.done.push((previous, segments));
        }
    }

    fn push_image(&mut self, src: Option<&str>, alt: Option<&str>) {
        let Some(src) = src.map(str::trim).filter(|s| valid_image_src(s)) else {
            return;
        };
        self.flush_text();
        let alt = alt.map(collapse_whitespace).unwrap_or_default();
        let content = if alt.is_empty() { src.to_string() } else { format!("{src} | {alt}") };
        self.segments.push(Segment::image(content));
    }

    fn push_table(&mut self, html: &str) {
        self.flush_text();
        if let Ok(table) = linearize_table(html) {
            self.segments.push(Segment::table(table));
        }
    }

    fn finish(mut self) -> Vec<Section> {
        self.start_section(String::new());
        self.done
            .into_iter()
            .enumerate()
            .map(|(i, (heading, segments))| Section {
                section_id: format!("s{i}"),
                heading,
                segments,
            })
            .collect()
    }
}

/// String-level URL check; nothing is resolved or fetched.
fn valid_image_src(src: &str) -> bool {
    !src.is_empty() && !src.chars().any(|c| c.is_whitespace() || c.is_control() || c == '|')
}

fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}
