//! Seeded synthetic corpora with known entity spans and gold relations.
//!
//! Text is random lowercase filler with chemical and gene mentions
//! injected as whole tokens. A share of mentions deliberately contain a
//! sentence-ending pattern (`". "` before an uppercase letter) so that
//! boundary suppression gets exercised. Gold relations mostly pair
//! mentions of one sentence; a share pair mentions of different sentences.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relex_core::{Document, EntityMention, GoldRelation, MentionType, RelationLabel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthOptions {
    pub documents: usize,
    pub seed: u64,
    /// Upper bound on body sentences per document (at least one).
    pub max_sentences: usize,
    /// Upper bound on mentions of each kind per sentence.
    pub max_mentions: usize,
    /// Probability that a mention surface covers a period.
    pub period_mentions: f64,
    /// Probability that a gold relation pairs mentions of two sentences.
    pub cross_sentence: f64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            documents: 100,
            seed: 0,
            max_sentences: 6,
            max_mentions: 3,
            period_mentions: 0.1,
            cross_sentence: 0.1,
        }
    }
}

const FILLER: &[&str] = &[
    "the", "levels", "of", "were", "measured", "in", "cells", "treated", "with", "and", "expression", "binding",
    "increased", "reduced", "activity", "mice", "patients", "after", "during", "assay", "response", "was", "observed",
    "significantly", "pathway", "receptor", "uptake", "dose", "inhibition", "signal", "tissue", "model", "results",
    "showed", "that", "these", "data", "suggest", "role", "for", "by", "on", "via", "cultured", "plasma",
];

const CHEM_STEMS: &[&str] = &["aspirin", "nicotine", "ethanol", "cisplatin", "glucose", "retinol", "Ca2+", "NADPH", "statin", "caffeine"];
const GENE_STEMS: &[&str] = &["COX1", "CYP3A4", "IL-2R", "p53", "EGFR", "ABCB1", "TNF-alpha", "AKT1", "RDH12", "MAOB"];

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn surface(rng: &mut ChaCha8Rng, stems: &[&str], period_rate: f64) -> String {
    let stem = stems.choose(rng).expect("non-empty stems");
    if rng.gen_bool(period_rate) {
        // "Stem. X12" looks exactly like a sentence end followed by a new
        // sentence unless the mention suppresses the cut.
        let letter = (b'A' + rng.gen_range(0..26)) as char;
        format!("{stem}. {letter}{}", rng.gen_range(1..100))
    } else if rng.gen_bool(0.3) {
        format!("{stem}-{}", rng.gen_range(1..20))
    } else {
        stem.to_string()
    }
}

struct Builder {
    text: String,
    len: usize,
    entities: Vec<EntityMention>,
}

impl Builder {
    /// Title and body are joined by one tab in full-text offsets.
    fn push_separator(&mut self) {
        self.len += 1;
    }

    fn push(&mut self, s: &str) {
        self.text.push_str(s);
        self.len += s.chars().count();
    }

    fn mention(&mut self, ty: MentionType, surface: String) -> usize {
        let id = format!("T{}", self.entities.len() + 1);
        let start = self.len;
        self.push(&surface);
        self.entities.push(EntityMention { id, mention_type: ty, start, end: self.len, surface });
        self.entities.len() - 1
    }

    /// Appends one sentence and returns the indices of its mentions.
    fn sentence(&mut self, rng: &mut ChaCha8Rng, opts: &SynthOptions, with_mentions: bool) -> Vec<usize> {
        let words = rng.gen_range(4..14);
        let (chems, genes) = if with_mentions {
            (rng.gen_range(0..=opts.max_mentions), rng.gen_range(0..=opts.max_mentions))
        } else {
            (0, 0)
        };
        let mut slots: Vec<Option<MentionType>> = vec![None; words];
        slots.extend(std::iter::repeat_n(Some(MentionType::Chemical), chems));
        for _ in 0..genes {
            let ty = *[MentionType::Gene, MentionType::GeneY, MentionType::GeneN].choose(rng).expect("non-empty");
            slots.push(Some(ty));
        }
        // The first token stays filler so every sentence starts with a
        // capitalized word.
        slots[1..].shuffle(rng);

        let mut indices = Vec::new();
        for (i, slot) in slots.into_iter().enumerate() {
            if i > 0 {
                self.push(" ");
            }
            match slot {
                None => {
                    let w = FILLER.choose(rng).expect("non-empty filler");
                    if i == 0 {
                        self.push(&capitalize(w));
                    } else {
                        self.push(w);
                    }
                }
                Some(ty) => {
                    let stems = if ty == MentionType::Chemical { CHEM_STEMS } else { GENE_STEMS };
                    let s = surface(rng, stems, opts.period_mentions);
                    indices.push(self.mention(ty, s));
                }
            }
        }
        self.push(".");
        indices
    }
}

fn labels() -> &'static [RelationLabel] {
    RelationLabel::positives()
}

/// Generates `opts.documents` documents. Equal options give equal output.
pub fn synth_corpus(opts: &SynthOptions) -> Vec<Document> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    (0..opts.documents).map(|i| synth_document(&mut rng, opts, format!("{}", 10_000_000 + i))).collect()
}

fn synth_document(rng: &mut ChaCha8Rng, opts: &SynthOptions, doc_id: String) -> Document {
    let mut b = Builder { text: String::new(), len: 0, entities: Vec::new() };
    let title_has_mentions = rng.gen_bool(0.5);
    let title_mentions = b.sentence(rng, opts, title_has_mentions);
    let title = std::mem::take(&mut b.text);
    b.push_separator();

    let mut groups = vec![title_mentions];
    let sentences = rng.gen_range(1..=opts.max_sentences.max(1));
    for k in 0..sentences {
        if k > 0 {
            b.push(" ");
        }
        groups.push(b.sentence(rng, opts, true));
    }
    let body = std::mem::take(&mut b.text);

    let is_chem = |e: &EntityMention| e.mention_type == MentionType::Chemical;
    let mut gold = Vec::new();
    for group in &groups {
        let chems: Vec<usize> = group.iter().copied().filter(|&i| is_chem(&b.entities[i])).collect();
        let genes: Vec<usize> = group.iter().copied().filter(|&i| !is_chem(&b.entities[i])).collect();
        for &c in &chems {
            for &g in &genes {
                if rng.gen_bool(0.35) {
                    let label = *labels().choose(rng).expect("positive labels");
                    gold.push(GoldRelation { label, arg1: b.entities[c].id.clone(), arg2: b.entities[g].id.clone() });
                    if rng.gen_bool(0.05) {
                        let extra = *labels().choose(rng).expect("positive labels");
                        if extra != label {
                            gold.push(GoldRelation { label: extra, arg1: b.entities[c].id.clone(), arg2: b.entities[g].id.clone() });
                        }
                    }
                }
            }
        }
    }
    // Cross-sentence pairs: a chemical of one sentence with a gene of
    // another.
    if groups.len() > 1 && rng.gen_bool(opts.cross_sentence) {
        let (a, z) = (rng.gen_range(0..groups.len()), rng.gen_range(0..groups.len()));
        if a != z {
            let chem = groups[a].iter().copied().find(|&i| is_chem(&b.entities[i]));
            let gene = groups[z].iter().copied().find(|&i| !is_chem(&b.entities[i]));
            if let (Some(c), Some(g)) = (chem, gene) {
                let label = *labels().choose(rng).expect("positive labels");
                gold.push(GoldRelation { label, arg1: b.entities[c].id.clone(), arg2: b.entities[g].id.clone() });
            }
        }
    }
    gold.sort();
    gold.dedup();

    Document { doc_id, title, body, entities: b.entities, gold_relations: gold }
}
