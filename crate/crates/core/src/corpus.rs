//! Corpus model and the three-file tab-separated codec.
//!
//! A corpus is spread over an abstracts file (`doc_id, title, body`), an
//! entities file (`doc_id, mention_id, type, start, end, surface`) and an
//! optional relations file (`doc_id, label, Arg1:id, Arg2:id`). Entity
//! offsets index the document's full text, which is the title and body
//! joined by a single tab, and count code points.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::label::{RelationLabel, UnknownLabel};
use crate::text::{char_len, CharIndex};

/// Separator between title and body in a document's full text.
pub const TITLE_BODY_SEPARATOR: char = '\t';

/// Coarse entity class used for pairing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EntityKind {
    Chemical,
    Gene,
}

/// Entity type as spelled in the entities file. `GENE-Y` and `GENE-N` are
/// kept so that serialization reproduces the input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MentionType {
    #[serde(rename = "CHEMICAL")]
    Chemical,
    #[serde(rename = "GENE")]
    Gene,
    #[serde(rename = "GENE-Y")]
    GeneY,
    #[serde(rename = "GENE-N")]
    GeneN,
}

impl MentionType {
    pub fn kind(self) -> EntityKind {
        match self {
            MentionType::Chemical => EntityKind::Chemical,
            MentionType::Gene | MentionType::GeneY | MentionType::GeneN => EntityKind::Gene,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MentionType::Chemical => "CHEMICAL",
            MentionType::Gene => "GENE",
            MentionType::GeneY => "GENE-Y",
            MentionType::GeneN => "GENE-N",
        }
    }
}

impl FromStr for MentionType {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "CHEMICAL" => Ok(MentionType::Chemical),
            "GENE" => Ok(MentionType::Gene),
            "GENE-Y" => Ok(MentionType::GeneY),
            "GENE-N" => Ok(MentionType::GeneN),
            _ => Err(()),
        }
    }
}

/// An annotated entity span in a document's full text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityMention {
    pub id: String,
    #[serde(rename = "type")]
    pub mention_type: MentionType,
    /// Inclusive start, in code points.
    pub start: usize,
    /// Exclusive end, in code points.
    pub end: usize,
    pub surface: String,
}

impl EntityMention {
    pub fn kind(&self) -> EntityKind {
        self.mention_type.kind()
    }

    pub fn overlaps(&self, other: &EntityMention) -> bool {
        self.start < other.end && other.start < self.end
    }
}

/// A positive gold relation between a chemical (`arg1`) and a gene (`arg2`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GoldRelation {
    pub label: RelationLabel,
    pub arg1: String,
    pub arg2: String,
}

/// One abstract with its mentions and gold relations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub title: String,
    pub body: String,
    pub entities: Vec<EntityMention>,
    pub gold_relations: Vec<GoldRelation>,
}

impl Document {
    /// Title and body joined by a tab; the offset space of every mention.
    pub fn full_text(&self) -> String {
        let mut text = String::with_capacity(self.title.len() + self.body.len() + 1);
        text.push_str(&self.title);
        text.push(TITLE_BODY_SEPARATOR);
        text.push_str(&self.body);
        text
    }

    pub fn mention(&self, id: &str) -> Option<&EntityMention> {
        self.entities.iter().find(|m| m.id == id)
    }

    /// Gold relations as scoreable tuples.
    pub fn gold_tuples(&self) -> impl Iterator<Item = RelationTuple> + '_ {
        self.gold_relations.iter().map(move |r| RelationTuple {
            doc_id: self.doc_id.clone(),
            label: r.label,
            arg1: r.arg1.clone(),
            arg2: r.arg2.clone(),
        })
    }
}

/// `(doc_id, label, arg1, arg2)`: the unit of both gold files and
/// submissions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RelationTuple {
    pub doc_id: String,
    pub label: RelationLabel,
    pub arg1: String,
    pub arg2: String,
}

impl RelationTuple {
    /// Parses `doc_id <TAB> label <TAB> Arg1:id <TAB> Arg2:id`.
    pub fn parse_line(line: &str, file: &str, line_no: usize) -> Result<Self, CorpusError> {
        let cols = split_columns(line, 4, file, line_no)?;
        let label = cols[1].parse::<RelationLabel>().map_err(|source| CorpusError::UnknownLabel {
            file: file.into(),
            line: line_no,
            source,
        })?;
        let arg1 = strip_arg(cols[2], "Arg1:", file, line_no)?;
        let arg2 = strip_arg(cols[3], "Arg2:", file, line_no)?;
        Ok(RelationTuple { doc_id: cols[0].into(), label, arg1: arg1.into(), arg2: arg2.into() })
    }

    /// Parses a whole relations / submission file; duplicates are kept.
    pub fn parse_file(source: Source<'_>) -> Result<Vec<Self>, CorpusError> {
        records(source.text)
            .map(|(line_no, line)| RelationTuple::parse_line(line, source.name, line_no))
            .collect()
    }
}

impl fmt::Display for RelationTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\tArg1:{}\tArg2:{}", self.doc_id, self.label, self.arg1, self.arg2)
    }
}

/// Named file contents handed to the parser.
#[derive(Debug, Clone, Copy)]
pub struct Source<'a> {
    pub name: &'a str,
    pub text: &'a str,
}

impl<'a> Source<'a> {
    pub fn new(name: &'a str, text: &'a str) -> Self {
        Source { name, text }
    }
}

/// Parsed documents plus the number of duplicate gold lines dropped.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub documents: Vec<Document>,
    pub duplicate_relations: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CorpusError {
    #[error("{file}:{line}: expected {expected} tab-separated columns, found {found}")]
    Malformed { file: String, line: usize, expected: usize, found: usize },
    #[error("{file}:{line}: empty document id")]
    EmptyDocId { file: String, line: usize },
    #[error("{file}:{line}: duplicate document `{doc_id}`")]
    DuplicateDocument { file: String, line: usize, doc_id: String },
    #[error("{file}:{line}: document `{doc_id}` is not in the abstracts file")]
    UnknownDocument { file: String, line: usize, doc_id: String },
    #[error("{file}:{line}: unknown entity type `{value}`; accepted: CHEMICAL, GENE, GENE-Y, GENE-N")]
    UnknownEntityType { file: String, line: usize, value: String },
    #[error("{file}:{line}: invalid offset `{value}`")]
    InvalidOffset { file: String, line: usize, value: String },
    #[error("document `{doc_id}`, mention `{mention_id}`: span [{start}, {end}) {found} but the surface column is {surface:?}")]
    OffsetMismatch { doc_id: String, mention_id: String, start: usize, end: usize, found: SliceFound, surface: String },
    #[error("document `{doc_id}`: duplicate mention id `{mention_id}`")]
    DuplicateMention { doc_id: String, mention_id: String },
    #[error("{file}:{line}: {source}")]
    UnknownLabel { file: String, line: usize, source: UnknownLabel },
    #[error("{file}:{line}: NO_RELATION cannot appear in a gold relations file")]
    NegativeGold { file: String, line: usize },
    #[error("{file}:{line}: expected `{prefix}<mention id>`, found `{value}`")]
    BadArgument { file: String, line: usize, prefix: &'static str, value: String },
    #[error("{file}:{line}: document `{doc_id}` has no mention `{mention_id}`")]
    UnknownMention { file: String, line: usize, doc_id: String, mention_id: String },
    #[error("{file}:{line}: `{mention_id}` in document `{doc_id}` must be a {expected:?} mention")]
    ArgumentKind { file: String, line: usize, doc_id: String, mention_id: String, expected: EntityKind },
}

/// What an entity span actually selected, for round-trip errors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SliceFound {
    OutOfRange { text_len: usize },
    Text(String),
}

impl fmt::Display for SliceFound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SliceFound::OutOfRange { text_len } => write!(f, "is out of range for a text of {text_len} code points"),
            SliceFound::Text(s) => write!(f, "selects {s:?}"),
        }
    }
}

/// Non-empty lines with 1-based line numbers; a trailing `\r` is dropped.
fn records(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.split('\n')
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
        .filter(|(_, l)| !l.trim().is_empty())
}

fn split_columns<'l>(line: &'l str, expected: usize, file: &str, line_no: usize) -> Result<Vec<&'l str>, CorpusError> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != expected {
        return Err(CorpusError::Malformed { file: file.into(), line: line_no, expected, found: cols.len() });
    }
    if cols[0].is_empty() {
        return Err(CorpusError::EmptyDocId { file: file.into(), line: line_no });
    }
    Ok(cols)
}

fn strip_arg<'l>(value: &'l str, prefix: &'static str, file: &str, line_no: usize) -> Result<&'l str, CorpusError> {
    match value.strip_prefix(prefix) {
        Some(id) if !id.is_empty() => Ok(id),
        _ => Err(CorpusError::BadArgument { file: file.into(), line: line_no, prefix, value: value.into() }),
    }
}

fn parse_offset(value: &str, file: &str, line_no: usize) -> Result<usize, CorpusError> {
    value
        .parse()
        .map_err(|_| CorpusError::InvalidOffset { file: file.into(), line: line_no, value: value.into() })
}

/// Parses a corpus from its abstracts, entities and (optional) relations
/// files. Documents keep abstracts-file order; mentions and relations keep
/// their file order within each document. Identical gold lines are kept once
/// and counted in [`Corpus::duplicate_relations`].
pub fn parse_corpus(
    abstracts: Source<'_>,
    entities: Source<'_>,
    relations: Option<Source<'_>>,
) -> Result<Corpus, CorpusError> {
    let mut documents = Vec::new();
    let mut by_id: BTreeMap<String, usize> = BTreeMap::new();

    for (line_no, line) in records(abstracts.text) {
        let cols = split_columns(line, 3, abstracts.name, line_no)?;
        let doc_id = cols[0];
        if by_id.insert(doc_id.into(), documents.len()).is_some() {
            return Err(CorpusError::DuplicateDocument { file: abstracts.name.into(), line: line_no, doc_id: doc_id.into() });
        }
        documents.push(Document {
            doc_id: doc_id.into(),
            title: cols[1].into(),
            body: cols[2].into(),
            entities: Vec::new(),
            gold_relations: Vec::new(),
        });
    }

    let lookup = |doc_id: &str, file: &str, line_no: usize| {
        by_id
            .get(doc_id)
            .copied()
            .ok_or_else(|| CorpusError::UnknownDocument { file: file.into(), line: line_no, doc_id: doc_id.into() })
    };

    for (line_no, line) in records(entities.text) {
        let cols = split_columns(line, 6, entities.name, line_no)?;
        let doc = lookup(cols[0], entities.name, line_no)?;
        let mention_type = cols[2].parse::<MentionType>().map_err(|_| CorpusError::UnknownEntityType {
            file: entities.name.into(),
            line: line_no,
            value: cols[2].into(),
        })?;
        let start = parse_offset(cols[3], entities.name, line_no)?;
        let end = parse_offset(cols[4], entities.name, line_no)?;
        documents[doc].entities.push(EntityMention {
            id: cols[1].into(),
            mention_type,
            start,
            end,
            surface: cols[5].into(),
        });
    }

    for doc in &documents {
        check_mentions(doc)?;
    }

    let mut duplicate_relations = 0;
    if let Some(relations) = relations {
        let mut seen: BTreeSet<(usize, GoldRelation)> = BTreeSet::new();
        for (line_no, line) in records(relations.text) {
            let tuple = RelationTuple::parse_line(line, relations.name, line_no)?;
            let doc = lookup(&tuple.doc_id, relations.name, line_no)?;
            if !tuple.label.is_positive() {
                return Err(CorpusError::NegativeGold { file: relations.name.into(), line: line_no });
            }
            for (id, expected) in [(&tuple.arg1, EntityKind::Chemical), (&tuple.arg2, EntityKind::Gene)] {
                let mention = documents[doc].mention(id).ok_or_else(|| CorpusError::UnknownMention {
                    file: relations.name.into(),
                    line: line_no,
                    doc_id: tuple.doc_id.clone(),
                    mention_id: id.clone(),
                })?;
                if mention.kind() != expected {
                    return Err(CorpusError::ArgumentKind {
                        file: relations.name.into(),
                        line: line_no,
                        doc_id: tuple.doc_id.clone(),
                        mention_id: id.clone(),
                        expected,
                    });
                }
            }
            let relation = GoldRelation { label: tuple.label, arg1: tuple.arg1, arg2: tuple.arg2 };
            if seen.insert((doc, relation.clone())) {
                documents[doc].gold_relations.push(relation);
            } else {
                duplicate_relations += 1;
            }
        }
    }

    Ok(Corpus { documents, duplicate_relations })
}

/// Checks id uniqueness and the offset round trip of every mention.
fn check_mentions(doc: &Document) -> Result<(), CorpusError> {
    let full = doc.full_text();
    let index = CharIndex::new(&full);
    let mut ids = BTreeSet::new();
    for m in &doc.entities {
        if !ids.insert(m.id.as_str()) {
            return Err(CorpusError::DuplicateMention { doc_id: doc.doc_id.clone(), mention_id: m.id.clone() });
        }
        let slice = if m.start < m.end { index.slice(m.start, m.end) } else { None };
        if slice != Some(m.surface.as_str()) {
            let found = match slice {
                Some(s) => SliceFound::Text(s.into()),
                None if m.start < m.end => SliceFound::OutOfRange { text_len: index.len() },
                None => SliceFound::Text(String::new()),
            };
            return Err(CorpusError::OffsetMismatch {
                doc_id: doc.doc_id.clone(),
                mention_id: m.id.clone(),
                start: m.start,
                end: m.end,
                found,
                surface: m.surface.clone(),
            });
        }
    }
    Ok(())
}

/// Serialized form of a corpus: `(abstracts, entities, relations)` file
/// contents, each line newline-terminated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusFiles {
    pub abstracts: String,
    pub entities: String,
    pub relations: String,
}

pub fn serialize_corpus(documents: &[Document]) -> CorpusFiles {
    use core::fmt::Write;
    let mut files = CorpusFiles { abstracts: String::new(), entities: String::new(), relations: String::new() };
    for doc in documents {
        let _ = writeln!(files.abstracts, "{}\t{}\t{}", doc.doc_id, doc.title, doc.body);
        for m in &doc.entities {
            let _ = writeln!(
                files.entities,
                "{}\t{}\t{}\t{}\t{}\t{}",
                doc.doc_id,
                m.id,
                m.mention_type.as_str(),
                m.start,
                m.end,
                m.surface
            );
        }
        for tuple in doc.gold_tuples() {
            let _ = writeln!(files.relations, "{tuple}");
        }
    }
    files
}

/// Informational corpus statistics. Never fails; problems that do not break
/// parsing are listed in `issues`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub documents: usize,
    pub entities_by_kind: BTreeMap<EntityKind, usize>,
    pub relations_by_label: BTreeMap<RelationLabel, usize>,
    /// Number of unordered mention pairs whose spans intersect.
    pub overlapping_entities: usize,
    /// Gold relations whose arguments never share a sentence; unknown until
    /// candidates are generated.
    pub cross_sentence_relations: Option<usize>,
    pub duplicate_relations: usize,
    pub issues: Vec<String>,
}

pub fn validate_corpus(documents: &[Document]) -> ValidationReport {
    let mut report = ValidationReport { documents: documents.len(), ..Default::default() };
    let mut seen_ids = BTreeSet::new();
    for doc in documents {
        if !seen_ids.insert(doc.doc_id.as_str()) {
            report.issues.push(format!("duplicate document id `{}`", doc.doc_id));
        }
        if doc.body.trim().is_empty() {
            report.issues.push(format!("document `{}` has an empty body", doc.doc_id));
        }
        for m in &doc.entities {
            *report.entities_by_kind.entry(m.kind()).or_default() += 1;
            if char_len(&m.surface) != m.end.saturating_sub(m.start) {
                report.issues.push(format!("document `{}`: mention `{}` length disagrees with its span", doc.doc_id, m.id));
            }
        }
        for r in &doc.gold_relations {
            *report.relations_by_label.entry(r.label).or_default() += 1;
        }
        for (a, b) in overlapping_pairs(&doc.entities) {
            report.overlapping_entities += 1;
            report.issues.push(format!(
                "document `{}`: mentions `{}` and `{}` overlap",
                doc.doc_id, doc.entities[a].id, doc.entities[b].id
            ));
        }
    }
    report
}

/// Index pairs of intersecting mentions, via a sweep over start offsets.
pub(crate) fn overlapping_pairs(mentions: &[EntityMention]) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..mentions.len()).collect();
    order.sort_by_key(|&i| (mentions[i].start, mentions[i].end, i));
    let mut active: Vec<usize> = Vec::new();
    let mut pairs = Vec::new();
    for &i in &order {
        let start = mentions[i].start;
        active.retain(|&j| mentions[j].end > start);
        for &j in &active {
            pairs.push((j.min(i), j.max(i)));
        }
        active.push(i);
    }
    pairs.sort_unstable();
    pairs
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "documents: {}", self.documents)?;
        for (kind, n) in &self.entities_by_kind {
            writeln!(f, "entities {kind:?}: {n}")?;
        }
        for (label, n) in &self.relations_by_label {
            writeln!(f, "relations {label}: {n}")?;
        }
        writeln!(f, "overlapping entity pairs: {}", self.overlapping_entities)?;
        if let Some(n) = self.cross_sentence_relations {
            writeln!(f, "cross-sentence relations: {n}")?;
        }
        writeln!(f, "duplicate relations dropped: {}", self.duplicate_relations)?;
        if !self.issues.is_empty() {
            writeln!(f, "issues: {}", self.issues.len())?;
        }
        Ok(())
    }
}
