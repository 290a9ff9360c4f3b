//! Pure, allocation-only core of the `relex` relation-extraction toolkit.
//!
//! Every stage that does not touch the filesystem lives here: the corpus
//! model and its TSV codec, the rule-based sentence splitter, chemical-gene
//! candidate enumeration, the mask / tag / text-to-text input encoders,
//! seeded class balancing, probability-vector ensembling, micro-averaged
//! scoring and round-robin sharding. File IO, JSON Lines and the CLI live in
//! the `relex` companion crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod balance;
pub mod candidates;
pub mod corpus;
pub mod encoders;
pub mod ensemble;
pub mod eval;
pub mod label;
pub mod sentencize;
pub mod shard;
mod text;

pub use balance::{balance, BalanceError, BalanceSpec, BalanceStrategy, Ratio};
pub use candidates::{candidate_stats, generate_candidates, CandidateExample, CandidateSet, CandidateStats};
pub use corpus::{
    parse_corpus, serialize_corpus, validate_corpus, Corpus, CorpusError, CorpusFiles, Document, EntityKind, EntityMention, GoldRelation,
    MentionType, RelationTuple, Source, ValidationReport,
};
pub use encoders::{decode_t5, encode_mask, encode_t5, encode_tag, EncodedExample, ParseStatus, Scheme, Turn};
pub use ensemble::{
    combine, predictions_to_submission, EnsembleConfig, EnsembleError, FinalPrediction, ModelPrediction,
};
pub use eval::{diff_report, score, DocDiff, EvalError, LabelScore, ScoreReport};
pub use label::{RelationLabel, UnknownLabel, NUM_LABELS};
pub use sentencize::{assign_entities, sentencize, Abbreviations, Sentence, UncontainedMention};
pub use shard::{merge_keyed, MergeError, ShardPlan};
