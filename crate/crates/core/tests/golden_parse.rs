use std::fs;
use std::path::PathBuf;

use interdoc::corpus::validate_document;
use interdoc::ingest::parse_html;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/html")
}

fn check(name: &str) {
    let dir = fixtures();
    let html = fs::read(dir.join(format!("{name}.html"))).unwrap();
    let expected = fs::read_to_string(dir.join(format!("{name}.json"))).unwrap();
    let doc = parse_html(&html, name).unwrap();
    validate_document(&doc).unwrap();
    let actual = serde_json::to_string(&doc).unwrap() + "\n";
    assert_eq!(actual, expected, "fixture {name}");
}

#[test]
fn mini() {
    check("mini");
}

#[test]
fn only_p() {
    check("only_p");
}

#[test]
fn nested_headings() {
    check("nested_headings");
}

#[test]
fn images_tables() {
    check("images_tables");
}

#[test]
fn entities_whitespace() {
    check("entities_whitespace");
}
