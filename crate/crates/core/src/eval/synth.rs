//! Seeded synthetic corpus with planted answers.
//!
//! Documents come in entity groups: every member of a group describes the
//! same named entity with the same section template (headings, filler text,
//! images, tables), so entity and lead-section information alone cannot tell
//! them apart. Each document carries one unique answer token planted in a
//! gold section, either in text, inside an image's alt text, or inside a
//! table cell. Planting overwrites an existing token of that modality, so
//! gold sections keep the template's structure and length. Queries name the
//! entity and the answer token; image-placed answers also attach the image
//! to the query. Whether a retriever can separate a document from its group
//! mates therefore depends on which modalities the document view keeps.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, Document, QRel, Query, Section, Segment, SegmentKind};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub num_docs: usize,
    pub sections_per_doc: usize,
    /// Size of the filler vocabulary.
    pub vocab_size: usize,
    /// Queries generated for each of the train and test splits.
    pub queries_per_split: usize,
    /// Probability that an answer sits in an image's alt text.
    pub p_img: f64,
    /// Probability that an answer sits in a table cell.
    pub p_tbl: f64,
    /// Documents sharing one entity name and section template.
    pub docs_per_entity: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            num_docs: 500,
            sections_per_doc: 6,
            vocab_size: 2000,
            queries_per_split: 500,
            p_img: 0.3,
            p_tbl: 0.2,
            docs_per_entity: 10,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.num_docs == 0 || self.vocab_size == 0 || self.queries_per_split == 0 || self.docs_per_entity == 0 {
            return Err("counts must be >= 1".into());
        }
        if self.sections_per_doc < 2 {
            return Err("sections_per_doc must be >= 2".into());
        }
        if !(0.0..=1.0).contains(&self.p_img) || !(0.0..=1.0).contains(&self.p_tbl) || self.p_img + self.p_tbl > 1.0 {
            return Err("p_img and p_tbl must be probabilities with p_img + p_tbl <= 1".into());
        }
        Ok(())
    }
}

/// Where a document's answer token was planted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Placement {
    Text,
    Image,
    Table,
}

/// Ground truth for one document.
#[derive(Debug, Clone, PartialEq)]
pub struct Plant {
    pub doc_id: String,
    pub gold_section: String,
    pub answer: String,
    pub placement: Placement,
    /// The answer image reference, for image placements.
    pub image: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub queries: Vec<Query>,
    pub qrels: Vec<QRel>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub corpus: Corpus,
    pub plants: Vec<Plant>,
    pub train: Split,
    pub test: Split,
}

const KINDS: [&str; 10] =
    ["bridge", "tower", "river", "castle", "museum", "station", "temple", "harbour", "palace", "lake"];
const HEADINGS: [&str; 10] =
    ["History", "Geography", "Architecture", "Economy", "Culture", "Transport", "Climate", "Legacy", "Design", "Events"];
const QUESTION_WORDS: [&str; 8] = ["what", "which", "when", "who", "where", "how", "name", "does"];

/// Probability that a template section carries a shared image.
const TEMPLATE_IMAGE_P: f64 = 0.3;
/// Probability that a template section carries a shared table.
const TEMPLATE_TABLE_P: f64 = 0.3;

fn filler(rng: &mut ChaCha8Rng, vocab: usize) -> String {
    format!("w{}", rng.gen_range(0..vocab))
}

fn filler_run(rng: &mut ChaCha8Rng, vocab: usize, lo: usize, hi: usize) -> Vec<String> {
    let n = rng.gen_range(lo..=hi);
    (0..n).map(|_| filler(rng, vocab)).collect()
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next().map_or_else(String::new, |f| f.to_uppercase().collect::<String>() + c.as_str())
}

fn table(rows: &[[String; 2]]) -> String {
    let mut out = String::from("<table>");
    for (i, row) in rows.iter().enumerate() {
        let tag = if i == 0 { "th" } else { "td" };
        out.push_str("<tr>");
        for cell in row {
            out.push_str(&format!("<{tag}>{cell}</{tag}>"));
        }
        out.push_str("</tr>");
    }
    out.push_str("</table>");
    out
}

/// Section template shared by one entity group.
fn group_template(rng: &mut ChaCha8Rng, cfg: &SynthConfig, group: usize, entity: &[String; 2]) -> Vec<Section> {
    let v = cfg.vocab_size;
    let mut headings: Vec<&str> = HEADINGS.to_vec();
    headings.shuffle(rng);
    let mut sections: Vec<Section> = (0..cfg.sections_per_doc)
        .map(|s| {
            let mut words = filler_run(rng, v, 6, 12);
            if s == 0 {
                // The lead names the entity.
                words.insert(0, entity[1].clone());
                words.insert(0, entity[0].clone());
            }
            let mut segments = vec![Segment::text(words.join(" "))];
            if rng.gen_bool(TEMPLATE_IMAGE_P) {
                let alt = filler_run(rng, v, 2, 4).join(" ");
                segments.insert(rng.gen_range(0..=segments.len()), Segment::image(format!("g{group}_{s}.jpg | {alt}")));
            }
            if rng.gen_bool(TEMPLATE_TABLE_P) {
                let rows = [[filler(rng, v), filler(rng, v)], [filler(rng, v), filler(rng, v)]];
                segments.insert(rng.gen_range(0..=segments.len()), Segment::table(table(&rows)));
            }
            let heading = if s == 0 { String::new() } else { headings[s % headings.len()].to_string() };
            Section { section_id: format!("s{s}"), heading, segments }
        })
        .collect();
    // Every template offers at least one image and one table slot, so an
    // answer of any modality can overwrite an existing segment.
    for kind in [SegmentKind::Image, SegmentKind::Table] {
        if !sections.iter().any(|s| has_kind(s, kind)) {
            let s = rng.gen_range(0..sections.len());
            let segment = match kind {
                SegmentKind::Image => Segment::image(format!("g{group}_{s}.jpg | {}", filler_run(rng, v, 2, 4).join(" "))),
                _ => Segment::table(table(&[[filler(rng, v), filler(rng, v)], [filler(rng, v), filler(rng, v)]])),
            };
            sections[s].segments.push(segment);
        }
    }
    sections
}

fn has_kind(section: &Section, kind: SegmentKind) -> bool {
    section.segments.iter().any(|s| s.kind == kind)
}

/// Plants `answer` into `section` by overwriting one existing token of the
/// placement's modality, so the gold section keeps the template's structure
/// and length. Returns the answer image reference for image placements.
fn plant(rng: &mut ChaCha8Rng, section: &mut Section, answer: &str, placement: Placement, lead: bool) -> Option<String> {
    let pick = |rng: &mut ChaCha8Rng, kind| {
        let slots: Vec<usize> = (0..section.segments.len()).filter(|&i| section.segments[i].kind == kind).collect();
        slots[rng.gen_range(0..slots.len())]
    };
    match placement {
        Placement::Text => {
            let at = pick(rng, SegmentKind::Text);
            let seg = &mut section.segments[at];
            let mut words: Vec<&str> = seg.content.split(' ').collect();
            // The lead's first two words name the entity and stay intact.
            let first = if lead { 2 } else { 0 };
            let w = rng.gen_range(first..words.len());
            words[w] = answer;
            seg.content = words.join(" ");
            None
        }
        Placement::Image => {
            let at = pick(rng, SegmentKind::Image);
            let seg = &mut section.segments[at];
            let (src, alt) = seg.content.split_once(" | ").expect("template images carry alt text");
            let rest: Vec<&str> = alt.split(' ').skip(1).collect();
            let image = format!("{src} | {answer} {}", rest.join(" "));
            seg.content = image.clone();
            Some(image)
        }
        Placement::Table => {
            let at = pick(rng, SegmentKind::Table);
            let seg = &mut section.segments[at];
            let cells: Vec<usize> = seg.content.match_indices("<td>").map(|(i, _)| i + 4).collect();
            let start = cells[rng.gen_range(0..cells.len())];
            let end = start + seg.content[start..].find("</td>").expect("closed cell");
            seg.content.replace_range(start..end, answer);
            None
        }
    }
}

fn make_query(rng: &mut ChaCha8Rng, cfg: &SynthConfig, id: String, entity: &[String; 2], p: &Plant) -> Query {
    let mut words: Vec<String> = vec![entity[0].clone(), entity[1].clone(), p.answer.clone()];
    words.extend(QUESTION_WORDS.choose_multiple(rng, 2).map(|w| w.to_string()));
    words.push(filler(rng, cfg.vocab_size));
    words.shuffle(rng);
    let text = format!("{}?", capitalize(&words.join(" ")));
    Query { query_id: id, text, image_refs: p.image.iter().cloned().collect() }
}

/// Generates the corpus and train/test query splits; fully determined by
/// `cfg`. Query `j` of either split targets document `j mod num_docs`, so
/// both splits ask about the same answers with different wording.
pub fn gen_synthetic(cfg: &SynthConfig) -> SynthData {
    cfg.validate().expect("invalid synthetic config");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let groups = cfg.num_docs.div_ceil(cfg.docs_per_entity);

    let mut docs = Vec::with_capacity(cfg.num_docs);
    let mut plants = Vec::with_capacity(cfg.num_docs);
    let mut entities = Vec::with_capacity(cfg.num_docs);
    for g in 0..groups {
        let entity = [format!("ent{g}"), KINDS[g % KINDS.len()].to_string()];
        let template = group_template(&mut rng, cfg, g, &entity);
        let title = format!("{} {}", capitalize(&entity[0]), capitalize(&entity[1]));
        for idx in g * cfg.docs_per_entity..((g + 1) * cfg.docs_per_entity).min(cfg.num_docs) {
            let mut sections = template.clone();
            let u: f64 = rng.gen();
            let (placement, kind) = if u < cfg.p_img {
                (Placement::Image, SegmentKind::Image)
            } else if u < cfg.p_img + cfg.p_tbl {
                (Placement::Table, SegmentKind::Table)
            } else {
                (Placement::Text, SegmentKind::Text)
            };
            let slots: Vec<usize> = (0..sections.len()).filter(|&i| has_kind(&sections[i], kind)).collect();
            let gold = slots[rng.gen_range(0..slots.len())];
            let answer = format!("ans{idx:05}");
            let image = plant(&mut rng, &mut sections[gold], &answer, placement, gold == 0);
            let doc_id = format!("doc{idx:05}");
            plants.push(Plant { doc_id: doc_id.clone(), gold_section: sections[gold].section_id.clone(), answer, placement, image });
            docs.push(Document { doc_id, title: title.clone(), sections });
            entities.push(entity.clone());
        }
    }

    let mut split = |name: &str| {
        let mut queries = Vec::with_capacity(cfg.queries_per_split);
        let mut qrels = Vec::with_capacity(cfg.queries_per_split);
        for j in 0..cfg.queries_per_split {
            let p = &plants[j % cfg.num_docs];
            let id = format!("{name}-q{j:05}");
            queries.push(make_query(&mut rng, cfg, id.clone(), &entities[j % cfg.num_docs], p));
            qrels.push(QRel { query_id: id, doc_id: p.doc_id.clone(), section_id: Some(p.gold_section.clone()) });
        }
        Split { queries, qrels }
    };
    let train = split("train");
    let test = split("test");
    let corpus = Corpus::new(docs).expect("generated documents are valid");
    SynthData { corpus, plants, train, test }
}
