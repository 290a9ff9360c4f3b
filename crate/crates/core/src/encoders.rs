//! Model-input renderings of a candidate.
//!
//! * `MASK`: the pair becomes `BC6ENTC` / `BC6ENTG`, every other mention
//!   `BC6OTHER`.
//! * `TAG`: the pair is wrapped in `<ec>..</ec>` / `<eg>..</eg>`, the rest of
//!   the sentence is left verbatim.
//! * `T5_QA`: a yes/no detection question, followed by a relation-naming
//!   question for positive candidates.
//!
//! When the chemical and gene spans intersect, both encoders render the
//! union of the two spans as one region and set [`EncodedExample::flagged`].

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::candidates::CandidateExample;
use crate::label::RelationLabel;
use crate::text::CharIndex;

pub const MASK_CHEMICAL: &str = "BC6ENTC";
pub const MASK_GENE: &str = "BC6ENTG";
pub const MASK_OTHER: &str = "BC6OTHER";

pub const TAG_CHEMICAL_OPEN: &str = "<ec>";
pub const TAG_CHEMICAL_CLOSE: &str = "</ec>";
pub const TAG_GENE_OPEN: &str = "<eg>";
pub const TAG_GENE_CLOSE: &str = "</eg>";

/// Bumped whenever a question template below changes.
pub const T5_TEMPLATE_VERSION: u32 = 1;
const DETECT_PREFIX: &str = "relation detection: sentence: ";
const DETECT_QUESTION: &str = " question: is there a relationship between ";
const CLASSIFY_PREFIX: &str = "relation classification: sentence: ";
const CLASSIFY_QUESTION: &str = " question: what is the relationship between ";
const QUESTION_SUFFIX: &str = "? answer:";

pub const ANSWER_YES: &str = "yes";
pub const ANSWER_NO: &str = "no";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "MASK")]
    Mask,
    #[serde(rename = "TAG")]
    Tag,
    #[serde(rename = "T5_QA")]
    T5Qa,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Turn {
    Detect,
    Classify,
    None,
}

/// A model-ready input string keyed to its candidate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedExample {
    pub example_id: String,
    pub scheme: Scheme,
    pub turn: Turn,
    pub input_text: String,
    pub target_text: String,
    /// Chemical and gene spans overlapped and were rendered as one region.
    #[serde(default, skip_serializing_if = "core::ops::Not::not")]
    pub flagged: bool,
}

/// Replaces code-point spans of `text`, applied right to left so earlier
/// offsets stay valid. Spans must be disjoint.
fn splice(text: &str, mut edits: Vec<(usize, usize, String)>) -> String {
    let index = CharIndex::new(text);
    let byte_edits: Vec<(usize, usize, String)> = {
        edits.sort_by_key(|e| core::cmp::Reverse(e.0));
        edits.into_iter().map(|(s, e, r)| (index.byte(s), index.byte(e), r)).collect()
    };
    let mut out = String::from(text);
    for (start, end, replacement) in byte_edits {
        out.replace_range(start..end, &replacement);
    }
    out
}

fn pair_overlaps(ex: &CandidateExample) -> bool {
    ex.chem.overlaps(&ex.gene)
}

pub fn encode_mask(ex: &CandidateExample) -> EncodedExample {
    let flagged = pair_overlaps(ex);
    let mut pair_spans: Vec<(usize, usize, String)> = if flagged {
        vec![(
            ex.chem.start.min(ex.gene.start),
            ex.chem.end.max(ex.gene.end),
            format!("{MASK_CHEMICAL} {MASK_GENE}"),
        )]
    } else {
        vec![(ex.chem.start, ex.chem.end, MASK_CHEMICAL.into()), (ex.gene.start, ex.gene.end, MASK_GENE.into())]
    };

    // Other mentions that touch the pair are absorbed by it; other mentions
    // that touch each other collapse into one BC6OTHER.
    let mut others: Vec<(usize, usize)> = ex
        .others
        .iter()
        .filter(|m| !pair_spans.iter().any(|&(s, e, _)| m.start < e && s < m.end))
        .map(|m| (m.start, m.end))
        .collect();
    others.sort_unstable();
    let mut merged: Vec<(usize, usize)> = Vec::with_capacity(others.len());
    for (s, e) in others {
        match merged.last_mut() {
            Some(last) if s < last.1 => last.1 = last.1.max(e),
            _ => merged.push((s, e)),
        }
    }
    pair_spans.extend(merged.into_iter().map(|(s, e)| (s, e, String::from(MASK_OTHER))));

    EncodedExample {
        example_id: ex.example_id.clone(),
        scheme: Scheme::Mask,
        turn: Turn::None,
        input_text: splice(&ex.sentence_text, pair_spans),
        target_text: ex.label.name().into(),
        flagged,
    }
}

pub fn encode_tag(ex: &CandidateExample) -> EncodedExample {
    let flagged = pair_overlaps(ex);
    let index = CharIndex::new(&ex.sentence_text);
    let wrap = |start: usize, end: usize, open: &str, close: &str| {
        (start, end, format!("{open}{}{close}", index.slice(start, end).unwrap_or_default()))
    };
    let edits = if flagged {
        let (start, end) = (ex.chem.start.min(ex.gene.start), ex.chem.end.max(ex.gene.end));
        let open = format!("{TAG_CHEMICAL_OPEN}{TAG_GENE_OPEN}");
        let close = format!("{TAG_GENE_CLOSE}{TAG_CHEMICAL_CLOSE}");
        vec![wrap(start, end, &open, &close)]
    } else {
        vec![
            wrap(ex.chem.start, ex.chem.end, TAG_CHEMICAL_OPEN, TAG_CHEMICAL_CLOSE),
            wrap(ex.gene.start, ex.gene.end, TAG_GENE_OPEN, TAG_GENE_CLOSE),
        ]
    };
    EncodedExample {
        example_id: ex.example_id.clone(),
        scheme: Scheme::Tag,
        turn: Turn::None,
        input_text: splice(&ex.sentence_text, edits),
        target_text: ex.label.name().into(),
        flagged,
    }
}

/// Removes the four pair tags from a `TAG` input.
pub fn detag(input: &str) -> String {
    [TAG_CHEMICAL_OPEN, TAG_CHEMICAL_CLOSE, TAG_GENE_OPEN, TAG_GENE_CLOSE]
        .iter()
        .fold(String::from(input), |s, tag| s.replace(tag, ""))
}

/// Answer text used for a label in classification turns.
pub fn t5_answer(label: RelationLabel) -> String {
    label.name().to_ascii_lowercase()
}

pub fn detect_question(sentence: &str, chem: &str, gene: &str) -> String {
    format!("{DETECT_PREFIX}{sentence}{DETECT_QUESTION}{chem} and {gene}{QUESTION_SUFFIX}")
}

pub fn classify_question(sentence: &str, chem: &str, gene: &str) -> String {
    format!("{CLASSIFY_PREFIX}{sentence}{CLASSIFY_QUESTION}{chem} and {gene}{QUESTION_SUFFIX}")
}

/// The detection turn, plus a classification turn for positive candidates.
pub fn encode_t5(ex: &CandidateExample) -> Vec<EncodedExample> {
    let (chem, gene) = (ex.chem.surface.as_str(), ex.gene.surface.as_str());
    let turn = |turn, input_text, target_text| EncodedExample {
        example_id: ex.example_id.clone(),
        scheme: Scheme::T5Qa,
        turn,
        input_text,
        target_text,
        flagged: false,
    };
    let mut turns = vec![turn(
        Turn::Detect,
        detect_question(&ex.sentence_text, chem, gene),
        String::from(if ex.is_positive() { ANSWER_YES } else { ANSWER_NO }),
    )];
    if ex.is_positive() {
        turns.push(turn(Turn::Classify, classify_question(&ex.sentence_text, chem, gene), t5_answer(ex.label)));
    }
    turns
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ParseStatus {
    Ok,
    Unparseable,
}

fn normalize_answer(raw: &str) -> String {
    let lower = raw.trim().to_lowercase();
    String::from(lower.trim_end_matches(['.', '!', '?', ',', ';', ':']).trim_end())
}

/// Maps generated answers back to a label. Anything but `yes` on the
/// detection turn is `NO_RELATION`; a `yes` needs a classification answer
/// that equals a positive label name or is a prefix of exactly one.
pub fn decode_t5(detect_answer: &str, classify_answer: Option<&str>) -> (RelationLabel, ParseStatus) {
    match normalize_answer(detect_answer).as_str() {
        ANSWER_YES => {}
        ANSWER_NO => return (RelationLabel::NoRelation, ParseStatus::Ok),
        _ => return (RelationLabel::NoRelation, ParseStatus::Unparseable),
    }
    let Some(answer) = classify_answer.map(normalize_answer).filter(|a| !a.is_empty()) else {
        return (RelationLabel::NoRelation, ParseStatus::Unparseable);
    };
    let positives = RelationLabel::positives();
    if let Some(&label) = positives.iter().find(|l| t5_answer(**l) == answer) {
        return (label, ParseStatus::Ok);
    }
    let mut prefixed = positives.iter().filter(|l| t5_answer(**l).starts_with(answer.as_str()));
    match (prefixed.next(), prefixed.next()) {
        (Some(&label), None) => (label, ParseStatus::Ok),
        _ => (RelationLabel::NoRelation, ParseStatus::Unparseable),
    }
}
