//! Rule-based sentence splitting over a document's full text.
//!
//! Boundary candidates are `.`, `!` and `?` (cut after the mark) and
//! newline / tab characters (cut at the character), each followed by
//! whitespace and then an uppercase letter or digit, or by the end of the
//! text. A period ending a known abbreviation never cuts, and no cut is kept
//! if an entity mention would end up straddling it or sitting in the
//! whitespace between two sentences, which merges the neighbours.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::{Document, EntityMention};

const BUILTIN_ABBREVIATIONS: &str = include_str!("../resources/abbreviations.txt");

/// A sentence span of a document's full text (code-point offsets).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub doc_id: String,
    pub sent_index: usize,
    pub start: usize,
    pub end: usize,
    pub text: String,
}

/// Case-insensitive list of period-final abbreviations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Abbreviations {
    entries: Vec<Vec<char>>,
}

impl Default for Abbreviations {
    fn default() -> Self {
        Self::builtin()
    }
}

impl Abbreviations {
    /// The list shipped with the toolkit.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_ABBREVIATIONS)
    }

    /// One entry per line; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Self {
        let mut entries: Vec<Vec<char>> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| l.chars().flat_map(char::to_lowercase).collect())
            .collect();
        entries.sort();
        entries.dedup();
        Abbreviations { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Whether an abbreviation ends at `chars[end - 1]`.
    fn ends_at(&self, chars: &[char], end: usize) -> bool {
        self.entries.iter().any(|entry| {
            let Some(start) = end.checked_sub(entry.len()) else {
                return false;
            };
            let word_start = start == 0 || !chars[start - 1].is_alphanumeric();
            word_start
                && chars[start..end]
                    .iter()
                    .zip(entry)
                    .all(|(c, e)| c.to_lowercase().eq(core::iter::once(*e)))
        })
    }
}

fn starts_sentence(c: char) -> bool {
    c.is_uppercase() || c.is_ascii_digit()
}

/// Whitespace gap between two sentences: `[left, right)`, where `left` is
/// the previous sentence's end and `right` the next sentence's start.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Gap {
    left: usize,
    right: usize,
}

fn candidate_gaps(chars: &[char], abbreviations: &Abbreviations) -> Vec<Gap> {
    let n = chars.len();
    let mut gaps: Vec<Gap> = Vec::new();
    for (i, &c) in chars.iter().enumerate() {
        let cut = match c {
            '.' | '!' | '?' => i + 1,
            '\n' | '\t' => i,
            _ => continue,
        };
        let mut right = cut;
        while right < n && chars[right].is_whitespace() {
            right += 1;
        }
        if right == n {
            // End of text: nothing left to split off.
            continue;
        }
        if right == cut && !c.is_whitespace() {
            // Punctuation glued to the next token, e.g. "3.5" or "IL-2.R".
            continue;
        }
        if !starts_sentence(chars[right]) {
            continue;
        }
        if c == '.' && abbreviations.ends_at(chars, cut) {
            continue;
        }
        let mut left = cut;
        while left > 0 && chars[left - 1].is_whitespace() {
            left -= 1;
        }
        let gap = Gap { left, right };
        if gaps.last() != Some(&gap) {
            gaps.push(gap);
        }
    }
    gaps
}

/// Splits `doc` into sentences. Never fails; with no usable boundary the
/// whole (trimmed) text is one sentence.
pub fn sentencize(doc: &Document, abbreviations: &Abbreviations) -> Vec<Sentence> {
    let full = doc.full_text();
    let chars: Vec<char> = full.chars().collect();
    let n = chars.len();

    let gaps: Vec<Gap> = candidate_gaps(&chars, abbreviations)
        .into_iter()
        .filter(|g| !doc.entities.iter().any(|m| m.start < g.right && m.end > g.left))
        .collect();

    let mut spans = Vec::with_capacity(gaps.len() + 1);
    let mut start = chars.iter().position(|c| !c.is_whitespace()).unwrap_or(n);
    for gap in &gaps {
        if gap.left > start {
            spans.push((start, gap.left));
        }
        start = start.max(gap.right);
    }
    let mut end = n;
    while end > start && chars[end - 1].is_whitespace() {
        end -= 1;
    }
    if end > start {
        spans.push((start, end));
    }

    spans
        .into_iter()
        .enumerate()
        .map(|(sent_index, (start, end))| Sentence {
            doc_id: doc.doc_id.clone(),
            sent_index,
            start,
            end,
            text: chars[start..end].iter().collect(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("document `{doc_id}`: mention `{mention_id}` is not contained in any sentence")]
pub struct UncontainedMention {
    pub doc_id: String,
    pub mention_id: String,
}

/// Assigns every mention of `doc` to its sentence, with offsets re-based to
/// the sentence start. The result has one (possibly empty) list per
/// sentence, indexed by `sent_index`, mentions in document order.
pub fn assign_entities(doc: &Document, sentences: &[Sentence]) -> Result<Vec<Vec<EntityMention>>, UncontainedMention> {
    let mut assigned: Vec<Vec<EntityMention>> = sentences.iter().map(|_| Vec::new()).collect();
    for m in &doc.entities {
        // Sentences are sorted and disjoint: the candidate is the last one
        // starting at or before the mention.
        let idx = sentences.partition_point(|s| s.start <= m.start);
        let slot = idx
            .checked_sub(1)
            .filter(|&i| m.end <= sentences[i].end)
            .ok_or_else(|| UncontainedMention { doc_id: doc.doc_id.clone(), mention_id: m.id.clone() })?;
        let sentence = &sentences[slot];
        assigned[slot].push(EntityMention {
            start: m.start - sentence.start,
            end: m.end - sentence.start,
            ..m.clone()
        });
    }
    Ok(assigned)
}
