//! The 14-way relation label set.

use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Number of classes, including [`RelationLabel::NoRelation`].
pub const NUM_LABELS: usize = 14;

/// Relation between a chemical and a gene mention.
///
/// Indices are a toolkit convention: `NO_RELATION` is 0 and the 13 positive
/// types follow in alphabetical order of their names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum RelationLabel {
    NoRelation = 0,
    Activator,
    Agonist,
    AgonistActivator,
    AgonistInhibitor,
    Antagonist,
    DirectRegulator,
    IndirectDownregulator,
    IndirectUpregulator,
    Inhibitor,
    PartOf,
    ProductOf,
    Substrate,
    SubstrateProductOf,
}

use RelationLabel::*;

const ALL: [RelationLabel; NUM_LABELS] = [
    NoRelation,
    Activator,
    Agonist,
    AgonistActivator,
    AgonistInhibitor,
    Antagonist,
    DirectRegulator,
    IndirectDownregulator,
    IndirectUpregulator,
    Inhibitor,
    PartOf,
    ProductOf,
    Substrate,
    SubstrateProductOf,
];

const NAMES: [&str; NUM_LABELS] = [
    "NO_RELATION",
    "ACTIVATOR",
    "AGONIST",
    "AGONIST-ACTIVATOR",
    "AGONIST-INHIBITOR",
    "ANTAGONIST",
    "DIRECT-REGULATOR",
    "INDIRECT-DOWNREGULATOR",
    "INDIRECT-UPREGULATOR",
    "INHIBITOR",
    "PART-OF",
    "PRODUCT-OF",
    "SUBSTRATE",
    "SUBSTRATE_PRODUCT-OF",
];

impl RelationLabel {
    /// All labels in index order.
    pub const ALL: [RelationLabel; NUM_LABELS] = ALL;

    /// Returns the 13 positive labels in index order.
    pub fn positives() -> &'static [RelationLabel] {
        &ALL[1..]
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        ALL.get(index).copied()
    }

    /// Corpus spelling, e.g. `PRODUCT-OF`.
    pub fn name(self) -> &'static str {
        NAMES[self.index()]
    }

    pub fn is_positive(self) -> bool {
        self != NoRelation
    }
}

impl fmt::Display for RelationLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A label string outside the accepted set.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown relation label `{0}`; accepted labels: {accepted}", accepted = accepted_list())]
pub struct UnknownLabel(pub alloc::string::String);

fn accepted_list() -> alloc::string::String {
    NAMES.join(", ")
}

impl FromStr for RelationLabel {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NAMES
            .iter()
            .position(|n| *n == s)
            .map(|i| ALL[i])
            .ok_or_else(|| UnknownLabel(s.into()))
    }
}

impl Serialize for RelationLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for RelationLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = <alloc::borrow::Cow<'de, str>>::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
