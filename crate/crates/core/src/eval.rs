//! Exact-match micro-averaged scoring of relation tuples.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::RelationTuple;
use crate::label::RelationLabel;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("{side} tuple {tuple} carries NO_RELATION; only positive relations can be scored")]
    NegativeTuple { side: &'static str, tuple: String },
}

/// Precision, recall and F1 with their counts. Zero denominators give 0.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LabelScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl LabelScore {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        LabelScore { precision, recall, f1, tp, fp, fn_ }
    }

    /// Gold support.
    pub fn support(&self) -> usize {
        self.tp + self.fn_
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub overall: LabelScore,
    /// All 13 positive labels, including those without support.
    pub per_label: BTreeMap<RelationLabel, LabelScore>,
}

fn check_positive(tuples: &BTreeSet<RelationTuple>, side: &'static str) -> Result<(), EvalError> {
    match tuples.iter().find(|t| !t.label.is_positive()) {
        Some(t) => Err(EvalError::NegativeTuple { side, tuple: alloc::format!("{t}") }),
        None => Ok(()),
    }
}

/// Scores `predicted` against `gold` by exact `(doc, label, arg1, arg2)`
/// match.
pub fn score(gold: &BTreeSet<RelationTuple>, predicted: &BTreeSet<RelationTuple>) -> Result<ScoreReport, EvalError> {
    check_positive(gold, "gold")?;
    check_positive(predicted, "predicted")?;

    let mut counts: BTreeMap<RelationLabel, (usize, usize, usize)> =
        RelationLabel::positives().iter().map(|&l| (l, (0, 0, 0))).collect();
    for t in predicted {
        let entry = counts.get_mut(&t.label).expect("positive label");
        if gold.contains(t) {
            entry.0 += 1;
        } else {
            entry.1 += 1;
        }
    }
    for t in gold.difference(predicted) {
        counts.get_mut(&t.label).expect("positive label").2 += 1;
    }

    let (tp, fp, fn_) = counts.values().fold((0, 0, 0), |acc, c| (acc.0 + c.0, acc.1 + c.1, acc.2 + c.2));
    Ok(ScoreReport {
        overall: LabelScore::from_counts(tp, fp, fn_),
        per_label: counts.into_iter().map(|(l, (tp, fp, fn_))| (l, LabelScore::from_counts(tp, fp, fn_))).collect(),
    })
}

impl fmt::Display for ScoreReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<24} {:>9} {:>9} {:>9} {:>6} {:>6} {:>6}", "relation", "precision", "recall", "f1", "tp", "fp", "fn")?;
        let row = |f: &mut fmt::Formatter<'_>, name: &str, s: &LabelScore| {
            writeln!(
                f,
                "{:<24} {:>9.4} {:>9.4} {:>9.4} {:>6} {:>6} {:>6}",
                name, s.precision, s.recall, s.f1, s.tp, s.fp, s.fn_
            )
        };
        for (label, s) in &self.per_label {
            row(f, label.name(), s)?;
        }
        row(f, "OVERALL (micro)", &self.overall)
    }
}

/// Errors of one document.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocDiff {
    pub false_positives: Vec<RelationTuple>,
    pub false_negatives: Vec<RelationTuple>,
}

/// False positives and false negatives grouped by document; documents
/// without errors are omitted.
pub fn diff_report(gold: &BTreeSet<RelationTuple>, predicted: &BTreeSet<RelationTuple>) -> BTreeMap<String, DocDiff> {
    let mut out: BTreeMap<String, DocDiff> = BTreeMap::new();
    for t in predicted.difference(gold) {
        out.entry(t.doc_id.clone()).or_default().false_positives.push(t.clone());
    }
    for t in gold.difference(predicted) {
        out.entry(t.doc_id.clone()).or_default().false_negatives.push(t.clone());
    }
    out
}
