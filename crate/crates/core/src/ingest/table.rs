use super::IngestError;

/// Tags kept by [`linearize_table`]; everything else is dropped and only its
/// text survives.
const STRUCTURAL_TAGS: [&str; 7] = ["table", "thead", "tbody", "tfoot", "tr", "th", "td"];
const CAPTION: &str = "caption";
/// Tags that separate words even though they are not kept.
const BREAKING_TAGS: [&str; 6] = ["br", "p", "div", "li", "hr", "img"];

/// Normalizes table markup into a flat "sequence of HTML words": structural
/// tags lowercased with attributes stripped, cell text whitespace-collapsed,
/// and all other markup removed.
pub fn linearize_table(table_html: &str) -> Result<String, IngestError> {
    let input = table_html.trim();
    if !input.get(..6).is_some_and(|p| p.eq_ignore_ascii_case("<table")) {
        return Err(IngestError::NotATable);
    }

    let mut out = String::with_capacity(input.len());
    let mut text = String::new();
    let mut rest = input;
    let mut skip_until: Option<&'static str> = None;

    while let Some(open) = rest.find('<') {
        if skip_until.is_none() {
            text.push_str(&rest[..open]);
        }
        let after = &rest[open..];
        if let Some(comment) = after.strip_prefix("<!--") {
            rest = comment.find("-->").map_or("", |end| &comment[end + 3..]);
            continue;
        }
        let Some(close) = after.find('>') else {
            // Unterminated tag: the remainder is text.
            if skip_until.is_none() {
                text.push_str(after);
            }
            rest = "";
            break;
        };
        let inner = &after[1..close];
        rest = &after[close + 1..];

        let closing = inner.starts_with('/');
        let name: String = inner
            .trim_start_matches('/')
            .chars()
            .take_while(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();

        if let Some(end) = skip_until {
            if closing && name == end {
                skip_until = None;
            }
            continue;
        }
        if !closing && (name == "script" || name == "style") {
            skip_until = Some(if name == "script" { "script" } else { "style" });
            continue;
        }

        if STRUCTURAL_TAGS.contains(&name.as_str()) || name == CAPTION {
            flush_words(&mut text, &mut out);
            out.push('<');
            if closing {
                out.push('/');
            }
            out.push_str(&name);
            out.push('>');
        } else if BREAKING_TAGS.contains(&name.as_str()) {
            text.push(' ');
        }
    }
    if skip_until.is_none() {
        text.push_str(rest);
    }
    flush_words(&mut text, &mut out);
    Ok(out)
}

fn flush_words(text: &mut String, out: &mut String) {
    let mut first = true;
    for word in text.split_whitespace() {
        if !first {
            out.push(' ');
        }
        out.push_str(word);
        first = false;
    }
    text.clear();
}
