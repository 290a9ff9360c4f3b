//! Stage helpers shared by the subcommands, and the end-to-end `run`.
//!
//! Every stage reads and writes files so that external model training and
//! inference can slot in between `encode` and `ensemble`. Outputs written by
//! [`run_pipeline`] are order-normalized (sorted by record key), which makes
//! them independent of sharding and thread scheduling.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use relex_core::encoders::Scheme;
use relex_core::{
    assign_entities, balance, candidate_stats, combine, diff_report, encode_mask, encode_t5, encode_tag,
    generate_candidates, merge_keyed, predictions_to_submission, score, sentencize, serialize_corpus, validate_corpus,
    Abbreviations, CandidateExample, CandidateStats, Document, EncodedExample, EnsembleConfig, ModelPrediction,
    RelationTuple, Sentence, ShardPlan,
};
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::{Error, Result, StageContext};
use crate::formats::{ingest_generated, ingest_predictions, DecodeStats};
use crate::io::{
    jsonl_lines, read_corpus, read_to_string, tuples_to_tsv, write_corpus, write_json, write_jsonl, write_string,
    CorpusPaths,
};
use crate::manifest::ManifestBuilder;

pub fn load_abbreviations(path: Option<&Path>) -> Result<Abbreviations> {
    match path {
        Some(p) => Ok(Abbreviations::parse(&read_to_string(p)?)),
        None => Ok(Abbreviations::builtin()),
    }
}

/// Sentences and candidates of a set of documents, in document order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Prepared {
    pub sentences: Vec<Sentence>,
    pub candidates: Vec<CandidateExample>,
    /// Gold relations whose arguments never share a sentence.
    pub dropped: Vec<RelationTuple>,
}

fn prepare_document(doc: &Document, sentences: Vec<Sentence>) -> Result<Prepared> {
    let entity_map = assign_entities(doc, &sentences)?;
    let set = generate_candidates(doc, &sentences, &entity_map);
    let dropped = set
        .dropped
        .into_iter()
        .map(|r| RelationTuple { doc_id: doc.doc_id.clone(), label: r.label, arg1: r.arg1, arg2: r.arg2 })
        .collect();
    Ok(Prepared { sentences, candidates: set.candidates, dropped })
}

fn concat(parts: Vec<Prepared>) -> Prepared {
    parts.into_iter().fold(Prepared::default(), |mut acc, p| {
        acc.sentences.extend(p.sentences);
        acc.candidates.extend(p.candidates);
        acc.dropped.extend(p.dropped);
        acc
    })
}

/// Sentencizes `docs` and enumerates their candidates, in parallel across
/// documents.
pub fn prepare(docs: &[Document], abbreviations: &Abbreviations) -> Result<Prepared> {
    let parts = docs
        .par_iter()
        .map(|doc| prepare_document(doc, sentencize(doc, abbreviations)))
        .collect::<Result<Vec<_>>>()?;
    Ok(concat(parts))
}

/// Candidates from previously dumped sentences (the `candidates` stage
/// resumed from a `sentencize` dump).
pub fn prepare_from_sentences(docs: &[Document], sentences: Vec<Sentence>) -> Result<Prepared> {
    let mut by_doc: BTreeMap<String, Vec<Sentence>> = BTreeMap::new();
    for s in sentences {
        by_doc.entry(s.doc_id.clone()).or_default().push(s);
    }
    let inputs: Vec<(&Document, Vec<Sentence>)> = docs
        .iter()
        .map(|d| {
            let mut sents = by_doc.remove(&d.doc_id).unwrap_or_default();
            sents.sort_by_key(|s| s.sent_index);
            (d, sents)
        })
        .collect();
    if let Some(unknown) = by_doc.keys().next() {
        return Err(Error::Usage(format!("sentence dump mentions document `{unknown}` which is not in the corpus")));
    }
    let parts = inputs.into_par_iter().map(|(doc, sents)| prepare_document(doc, sents)).collect::<Result<Vec<_>>>()?;
    Ok(concat(parts))
}

pub fn encode(candidates: &[CandidateExample], scheme: Scheme) -> Vec<EncodedExample> {
    match scheme {
        Scheme::Mask => candidates.par_iter().map(encode_mask).collect(),
        Scheme::Tag => candidates.par_iter().map(encode_tag).collect(),
        Scheme::T5Qa => candidates.par_iter().flat_map_iter(encode_t5).collect(),
    }
}

pub fn scheme_name(scheme: Scheme) -> &'static str {
    match scheme {
        Scheme::Mask => "mask",
        Scheme::Tag => "tag",
        Scheme::T5Qa => "t5",
    }
}

/// Sort key of a sentence record: document id, then zero-padded index.
pub fn sentence_key(s: &Sentence) -> String {
    format!("{}\u{1f}{:012}", s.doc_id, s.sent_index)
}

/// Canonical (key-sorted) merge of per-shard preparations.
pub fn merge_prepared(parts: Vec<Prepared>) -> Result<Prepared> {
    let mut sentence_parts = Vec::with_capacity(parts.len());
    let mut candidate_parts = Vec::with_capacity(parts.len());
    let mut dropped = Vec::new();
    for p in parts {
        sentence_parts.push(p.sentences);
        candidate_parts.push(p.candidates);
        dropped.extend(p.dropped);
    }
    dropped.sort();
    Ok(Prepared {
        sentences: merge_keyed(sentence_parts, sentence_key)?,
        candidates: merge_keyed(candidate_parts, |c: &CandidateExample| c.example_id.clone())?,
        dropped,
    })
}

/// Writes one shard corpus per plan entry under `out_dir/shard_<k>/` plus
/// `out_dir/plan.json`.
pub fn shard_corpus(docs: Vec<Document>, n: usize, out_dir: &Path, with_relations: bool) -> Result<(ShardPlan, Vec<CorpusPaths>)> {
    let plan = ShardPlan::round_robin(docs.iter().map(|d| d.doc_id.as_str()), n)?;
    if plan.empty_shards() > 0 {
        warn!("{} of {} shards are empty ({} documents)", plan.empty_shards(), n, plan.assignment.len());
    }
    let shards = plan.split(docs, |d| d.doc_id.as_str())?;
    let mut paths = Vec::with_capacity(n);
    for (k, shard) in shards.iter().enumerate() {
        let mut p = CorpusPaths::in_dir(&out_dir.join(format!("shard_{k}")));
        if !with_relations {
            p.relations = None;
        }
        write_corpus(&p, &serialize_corpus(shard))?;
        paths.push(p);
    }
    write_json(&out_dir.join("plan.json"), &plan)?;
    Ok((plan, paths))
}

/// Key and document of one JSON Lines record: `example_id` when present,
/// otherwise `doc_id` + `sent_index` (sentence dumps).
fn record_key(value: &serde_json::Value) -> Option<(String, String)> {
    if let Some(id) = value.get("example_id").and_then(|v| v.as_str()) {
        let doc = CandidateExample::doc_id_of(id).unwrap_or(id).to_string();
        return Some((id.to_string(), doc));
    }
    let doc = value.get("doc_id")?.as_str()?;
    let index = value.get("sent_index")?.as_u64()?;
    Some((format!("{doc}\u{1f}{index:012}"), doc.to_string()))
}

/// Merges JSON Lines files produced from disjoint shards into one
/// key-sorted file body. Lines are copied verbatim. With a plan, every
/// record must belong to one of its documents.
pub fn merge_jsonl_files(files: &[PathBuf], plan: Option<&ShardPlan>) -> Result<String> {
    let mut parts = Vec::with_capacity(files.len());
    for path in files {
        let text = read_to_string(path)?;
        let mut records = Vec::new();
        for (line, l) in jsonl_lines(&text) {
            let value: serde_json::Value =
                serde_json::from_str(l).map_err(|source| Error::Json { path: path.clone(), line, source })?;
            let (key, doc) = record_key(&value).ok_or_else(|| Error::Record {
                path: path.clone(),
                line,
                message: "record has neither `example_id` nor `doc_id` + `sent_index`".into(),
            })?;
            if let Some(plan) = plan {
                if plan.shard_of(&doc).is_none() {
                    return Err(relex_core::MergeError::Unknown(key).into());
                }
            }
            records.push((key, l.to_string()));
        }
        parts.push(records);
    }
    let merged = merge_keyed(parts, |r: &(String, String)| r.0.clone())?;
    Ok(merged.into_iter().map(|(_, line)| line + "\n").collect())
}

/// Reads probability files and decodes generated-text files.
pub fn load_predictions(
    files: &[PathBuf],
    generated: &[(String, PathBuf)],
) -> Result<(Vec<ModelPrediction>, BTreeMap<String, DecodeStats>)> {
    let mut all = Vec::new();
    for f in files {
        all.extend(ingest_predictions(f)?);
    }
    let mut stats = BTreeMap::new();
    for (model, path) in generated {
        let (preds, s) = ingest_generated(path, model)?;
        if s.unparseable > 0 {
            warn!("model `{model}`: {} of {} generated answers were unparseable", s.unparseable, s.ok + s.unparseable);
        }
        all.extend(preds);
        stats.insert(model.clone(), s);
    }
    ModelPrediction::check_unique(&all)?;
    Ok((all, stats))
}

/// Weights from a file, or uniform over the models that appear in
/// `predictions`.
pub fn ensemble_config(weights: Option<&Path>, predictions: &[ModelPrediction]) -> Result<EnsembleConfig> {
    match weights {
        Some(p) => Ok(EnsembleConfig::parse(&read_to_string(p)?)?),
        None => {
            let models: BTreeSet<&str> = predictions.iter().map(|p| p.model_id.as_str()).collect();
            Ok(EnsembleConfig::uniform(models)?)
        }
    }
}

/// Counts reported by a `run`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub documents: usize,
    pub sentences: usize,
    pub candidates: CandidateStats,
    pub dropped_relations: usize,
    pub balanced: Option<CandidateStats>,
    pub encoded: BTreeMap<String, usize>,
    pub flagged_overlaps: usize,
    pub decode: BTreeMap<String, DecodeStats>,
    pub final_predictions: Option<usize>,
    pub submission_rows: Option<usize>,
    pub f1: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
}

/// Output locations of a run under its `out_dir`.
#[derive(Debug, Clone)]
pub struct RunLayout {
    pub root: PathBuf,
}

impl RunLayout {
    pub fn file(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn manifest(&self, stage: &str) -> PathBuf {
        self.root.join("manifests").join(format!("{stage}.json"))
    }
}

fn stage_manifest(layout: &RunLayout, stage: &str, cfg: &PipelineConfig, inputs: &[&Path], outputs: &[&Path]) -> Result<()> {
    let mut m = ManifestBuilder::new(stage);
    m.seed(cfg.seed).flag("shards", cfg.shards);
    for i in inputs {
        m.input(i);
    }
    m.write(&layout.manifest(stage), outputs)?;
    Ok(())
}

/// Runs every configured stage. Preparation runs per shard (concurrently)
/// and is merged; balancing, encoding and the prediction side run on the
/// merged set.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunSummary> {
    let layout = RunLayout { root: cfg.out_dir.clone() };
    let corpus_inputs = cfg.corpus.all();

    let corpus = read_corpus(&cfg.corpus).stage("parse")?;
    let mut report = validate_corpus(&corpus.documents);
    report.duplicate_relations = corpus.duplicate_relations;
    info!("parsed {} documents", corpus.documents.len());
    let gold: BTreeSet<RelationTuple> = corpus.documents.iter().flat_map(Document::gold_tuples).collect();
    let n_docs = corpus.documents.len();

    let abbreviations = load_abbreviations(cfg.abbreviations.as_deref()).stage("sentencize")?;
    let plan = ShardPlan::round_robin(corpus.documents.iter().map(|d| d.doc_id.as_str()), cfg.shards).stage("shard")?;
    if plan.empty_shards() > 0 {
        warn!("{} of {} shards are empty", plan.empty_shards(), cfg.shards);
    }
    let shards = plan.split(corpus.documents, |d| d.doc_id.as_str()).stage("shard")?;
    let parts = shards
        .par_iter()
        .map(|docs| prepare(docs, &abbreviations))
        .collect::<Result<Vec<_>>>()
        .stage("candidates")?;
    if cfg.shards > 1 {
        let shard_root = layout.file("shards");
        write_json(&shard_root.join("plan.json"), &plan)?;
        for (k, part) in parts.iter().enumerate() {
            let dir = shard_root.join(format!("shard_{k}"));
            write_jsonl(&dir.join("sentences.jsonl"), &part.sentences)?;
            write_jsonl(&dir.join("candidates.jsonl"), &part.candidates)?;
        }
    }
    let prepared = merge_prepared(parts).stage("merge")?;

    report.cross_sentence_relations = Some(prepared.dropped.len());
    let validation = layout.file("validation.json");
    write_json(&validation, &report)?;
    stage_manifest(&layout, "parse", cfg, &corpus_inputs, &[&validation])?;

    let sentences_path = layout.file("sentences.jsonl");
    write_jsonl(&sentences_path, &prepared.sentences)?;
    stage_manifest(&layout, "sentencize", cfg, &corpus_inputs, &[&sentences_path])?;

    let candidates_path = layout.file("candidates.jsonl");
    let dropped_path = layout.file("dropped.tsv");
    write_jsonl(&candidates_path, &prepared.candidates)?;
    write_string(&dropped_path, &tuples_to_tsv(&prepared.dropped))?;
    stage_manifest(&layout, "candidates", cfg, &[&sentences_path], &[&candidates_path, &dropped_path])?;

    let mut training = &prepared.candidates;
    let balanced;
    let mut balanced_stats = None;
    if let Some(spec) = &cfg.balance {
        balanced = balance(&prepared.candidates, spec).stage("balance")?;
        let path = layout.file("candidates.balanced.jsonl");
        write_jsonl(&path, &balanced)?;
        stage_manifest(&layout, "balance", cfg, &[&candidates_path], &[&path])?;
        balanced_stats = Some(candidate_stats(&balanced));
        training = &balanced;
    }

    let mut encoded_counts = BTreeMap::new();
    let mut flagged = 0;
    let mut encoded_paths = Vec::new();
    for &scheme in &cfg.schemes {
        let encoded = encode(training, scheme);
        if scheme != Scheme::T5Qa {
            flagged = flagged.max(encoded.iter().filter(|e| e.flagged).count());
        }
        let path = layout.file(&format!("encoded.{}.jsonl", scheme_name(scheme)));
        write_jsonl(&path, &encoded)?;
        encoded_counts.insert(scheme_name(scheme).to_string(), encoded.len());
        encoded_paths.push(path);
    }
    if !encoded_paths.is_empty() {
        let outs: Vec<&Path> = encoded_paths.iter().map(PathBuf::as_path).collect();
        stage_manifest(&layout, "encode", cfg, &[&candidates_path], &outs)?;
    }
    if flagged > 0 {
        warn!("{flagged} candidates have overlapping chemical/gene spans and were rendered as one region");
    }

    let mut summary = RunSummary {
        documents: n_docs,
        sentences: prepared.sentences.len(),
        candidates: candidate_stats(&prepared.candidates),
        dropped_relations: prepared.dropped.len(),
        balanced: balanced_stats,
        encoded: encoded_counts,
        flagged_overlaps: flagged,
        decode: BTreeMap::new(),
        final_predictions: None,
        submission_rows: None,
        f1: None,
        precision: None,
        recall: None,
    };

    if !cfg.predictions.is_empty() || !cfg.generated.is_empty() {
        let (predictions, decode) = load_predictions(&cfg.predictions, &cfg.generated).stage("ensemble")?;
        let config = ensemble_config(cfg.weights.as_deref(), &predictions).stage("ensemble")?;
        let finals = combine(&predictions, &config).stage("ensemble")?;
        let finals_path = layout.file("finals.jsonl");
        write_jsonl(&finals_path, &finals)?;
        let mut ensemble_inputs: Vec<&Path> = cfg.predictions.iter().map(PathBuf::as_path).collect();
        ensemble_inputs.extend(cfg.generated.iter().map(|(_, p)| p.as_path()));
        ensemble_inputs.extend(cfg.weights.as_deref());
        stage_manifest(&layout, "ensemble", cfg, &ensemble_inputs, &[&finals_path])?;

        let rows = predictions_to_submission(&finals, &prepared.candidates).stage("submit")?;
        let submission_path = layout.file("submission.tsv");
        write_string(&submission_path, &tuples_to_tsv(&rows))?;
        stage_manifest(&layout, "submit", cfg, &[&finals_path, &candidates_path], &[&submission_path])?;

        summary.decode = decode;
        summary.final_predictions = Some(finals.len());
        summary.submission_rows = Some(rows.len());

        if let Some(relations) = &cfg.corpus.relations {
            let predicted: BTreeSet<RelationTuple> = rows.into_iter().collect();
            let report = score(&gold, &predicted).stage("score")?;
            let (json, table, diff) = (layout.file("score.json"), layout.file("score.txt"), layout.file("diff.json"));
            write_json(&json, &report)?;
            write_string(&table, &report.to_string())?;
            write_json(&diff, &diff_report(&gold, &predicted))?;
            stage_manifest(&layout, "score", cfg, &[relations, &submission_path], &[&json, &table, &diff])?;
            summary.f1 = Some(report.overall.f1);
            summary.precision = Some(report.overall.precision);
            summary.recall = Some(report.overall.recall);
        }
    }

    let stats_path = layout.file("stats.json");
    write_json(&stats_path, &summary)?;
    stage_manifest(&layout, "run", cfg, &corpus_inputs, &[&stats_path])?;
    Ok(summary)
}
