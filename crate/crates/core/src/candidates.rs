//! In-sentence chemical-gene pair enumeration.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::{Document, EntityKind, EntityMention, GoldRelation};
use crate::label::RelationLabel;
use crate::sentencize::Sentence;

/// One chemical-gene pair in one sentence: the unit of classification.
/// Mention offsets are local to `sentence_text`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateExample {
    /// `doc_id.sent_index.chem_id.gene_id`, with a `#k` suffix for the
    /// k-th extra gold label of a multi-labelled pair.
    pub example_id: String,
    pub doc_id: String,
    pub sent_index: usize,
    pub sentence_text: String,
    pub chem: EntityMention,
    pub gene: EntityMention,
    pub others: Vec<EntityMention>,
    pub label: RelationLabel,
}

impl CandidateExample {
    pub fn is_positive(&self) -> bool {
        self.label.is_positive()
    }

    /// Document id encoded in an example id (the part before the last
    /// three dots).
    pub fn doc_id_of(example_id: &str) -> Option<&str> {
        let mut parts = example_id.rsplitn(4, '.');
        let (_, _, _) = (parts.next()?, parts.next()?, parts.next()?);
        parts.next()
    }
}

/// Candidates of one document plus the gold relations no candidate carries.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CandidateSet {
    pub candidates: Vec<CandidateExample>,
    pub dropped: Vec<GoldRelation>,
}

/// Builds one candidate per (chemical, gene) mention pair sharing a
/// sentence, in order of sentence, chemical appearance and gene appearance.
/// `entity_map` is the output of
/// [`assign_entities`](crate::sentencize::assign_entities). A pair carrying
/// several gold labels yields one candidate per label, in label-index order.
pub fn generate_candidates(doc: &Document, sentences: &[Sentence], entity_map: &[Vec<EntityMention>]) -> CandidateSet {
    let mut gold: BTreeMap<(&str, &str), Vec<RelationLabel>> = BTreeMap::new();
    for r in &doc.gold_relations {
        gold.entry((r.arg1.as_str(), r.arg2.as_str())).or_default().push(r.label);
    }
    for labels in gold.values_mut() {
        labels.sort_unstable();
        labels.dedup();
    }

    let mut attached: BTreeSet<(&str, &str)> = BTreeSet::new();
    let mut candidates = Vec::new();

    for (sentence, mentions) in sentences.iter().zip(entity_map) {
        let mut ordered: Vec<&EntityMention> = mentions.iter().collect();
        ordered.sort_by_key(|m| (m.start, m.end));
        let chems = ordered.iter().copied().filter(|m| m.kind() == EntityKind::Chemical);
        for chem in chems {
            for gene in ordered.iter().copied().filter(|m| m.kind() == EntityKind::Gene) {
                let base = format!("{}.{}.{}.{}", doc.doc_id, sentence.sent_index, chem.id, gene.id);
                let others: Vec<EntityMention> = ordered
                    .iter()
                    .filter(|m| m.id != chem.id && m.id != gene.id)
                    .map(|m| (*m).clone())
                    .collect();
                let key = (chem.id.as_str(), gene.id.as_str());
                let labels = match gold.get(&key) {
                    Some(labels) => {
                        attached.insert(key);
                        labels.as_slice()
                    }
                    None => &[RelationLabel::NoRelation],
                };
                for (k, &label) in labels.iter().enumerate() {
                    candidates.push(CandidateExample {
                        example_id: if k == 0 { base.clone() } else { format!("{base}#{k}") },
                        doc_id: doc.doc_id.clone(),
                        sent_index: sentence.sent_index,
                        sentence_text: sentence.text.clone(),
                        chem: chem.clone(),
                        gene: gene.clone(),
                        others: others.clone(),
                        label,
                    });
                }
            }
        }
    }

    let dropped = doc
        .gold_relations
        .iter()
        .filter(|r| !attached.contains(&(r.arg1.as_str(), r.arg2.as_str())))
        .cloned()
        .collect();
    CandidateSet { candidates, dropped }
}

/// Label histogram of a candidate list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateStats {
    pub by_label: BTreeMap<RelationLabel, usize>,
    pub positives: usize,
    pub negatives: usize,
}

impl CandidateStats {
    pub fn total(&self) -> usize {
        self.positives + self.negatives
    }

    pub fn count(&self, label: RelationLabel) -> usize {
        self.by_label.get(&label).copied().unwrap_or(0)
    }
}

pub fn candidate_stats(candidates: &[CandidateExample]) -> CandidateStats {
    let mut by_label: BTreeMap<RelationLabel, usize> = RelationLabel::ALL.iter().map(|&l| (l, 0)).collect();
    for c in candidates {
        *by_label.entry(c.label).or_default() += 1;
    }
    let negatives = by_label[&RelationLabel::NoRelation];
    CandidateStats { by_label, positives: candidates.len() - negatives, negatives }
}
