//! Subcommands. Each one reads its inputs from files, writes one main
//! output and a `<output>.manifest.json` next to it.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use relex_core::balance::{BalanceSpec, BalanceStrategy, Ratio};
use relex_core::{
    balance, combine, diff_report, predictions_to_submission, score, sentencize, validate_corpus, CandidateExample,
    Document, FinalPrediction, RelationTuple, Sentence, ShardPlan,
};

use crate::config::{parse_scheme, PipelineConfig, CONFIG_ENV};
use crate::error::{Error, Result};
use crate::io::{read_corpus, read_json, read_jsonl, read_tuples, tuples_to_tsv, write_json, write_jsonl, write_string, CorpusPaths};
use crate::manifest::{manifest_path_for, ManifestBuilder};
use crate::pipeline::{
    encode, ensemble_config, load_abbreviations, load_predictions, merge_jsonl_files, prepare, prepare_from_sentences,
    run_pipeline, shard_corpus,
};

#[derive(Debug, Parser)]
#[command(name = "relex", version, about = "Chemical-protein relation extraction toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate a TSV corpus into a JSON Lines document dump.
    Parse(ParseArgs),
    /// Split documents into sentences.
    Sentencize(SentencizeArgs),
    /// Enumerate in-sentence chemical-gene pairs.
    Candidates(CandidatesArgs),
    /// Render candidates as model inputs.
    Encode(EncodeArgs),
    /// Resample candidates to a positive/negative ratio.
    Balance(BalanceArgs),
    /// Split a TSV corpus into document shards.
    Shard(ShardArgs),
    /// Merge JSON Lines outputs of disjoint shards.
    Merge(MergeArgs),
    /// Combine model predictions into final labels.
    Ensemble(EnsembleArgs),
    /// Turn final predictions into submission rows.
    Submit(SubmitArgs),
    /// Score a submission against gold relations.
    Score(ScoreArgs),
    /// Run every stage from a config file.
    Run(RunArgs),
}

/// A corpus given either as TSV files or as a `parse` dump.
#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Document dump written by `parse`.
    #[arg(long, conflicts_with_all = ["abstracts", "entities", "relations"])]
    pub corpus: Option<PathBuf>,
    #[arg(long, requires = "entities")]
    pub abstracts: Option<PathBuf>,
    #[arg(long, requires = "abstracts")]
    pub entities: Option<PathBuf>,
    #[arg(long)]
    pub relations: Option<PathBuf>,
}

impl CorpusArgs {
    fn inputs(&self) -> Vec<&Path> {
        [&self.corpus, &self.abstracts, &self.entities, &self.relations].into_iter().flatten().map(PathBuf::as_path).collect()
    }

    fn load(&self) -> Result<Vec<Document>> {
        if let Some(dump) = &self.corpus {
            return read_jsonl(dump);
        }
        Ok(read_corpus(&self.tsv()?)?.documents)
    }

    fn tsv(&self) -> Result<CorpusPaths> {
        match (&self.abstracts, &self.entities) {
            (Some(a), Some(e)) => Ok(CorpusPaths { abstracts: a.clone(), entities: e.clone(), relations: self.relations.clone() }),
            _ => Err(Error::Usage("give --corpus, or --abstracts and --entities".into())),
        }
    }
}

#[derive(Debug, Args)]
pub struct ParseArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// Where to write the validation report (JSON). Printed to stdout too.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SentencizeArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Abbreviation list replacing the built-in one.
    #[arg(long)]
    pub abbreviations: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CandidatesArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Sentence dump from `sentencize`; sentencized afresh when absent.
    #[arg(long)]
    pub sentences: Option<PathBuf>,
    #[arg(long, conflicts_with = "sentences")]
    pub abbreviations: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Gold relations without a candidate, as TSV.
    #[arg(long)]
    pub dropped: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(long)]
    pub candidates: PathBuf,
    /// mask, tag or t5
    #[arg(long)]
    pub scheme: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BalanceArgs {
    #[arg(long)]
    pub candidates: PathBuf,
    /// over_pos, balance or over_neg
    #[arg(long)]
    pub strategy: BalanceStrategy,
    /// Negatives per positive, e.g. `2` or `3/2`.
    #[arg(long)]
    pub ratio: Option<Ratio>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ShardArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long)]
    pub shards: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct MergeArgs {
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// `plan.json` written by `shard`; records outside it are rejected.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EnsembleArgs {
    /// Probability files (JSON Lines).
    #[arg(long = "predictions", num_args = 1..)]
    pub predictions: Vec<PathBuf>,
    /// Generated-text files as `MODEL=FILE`.
    #[arg(long = "generated", num_args = 1.., value_parser = parse_generated)]
    pub generated: Vec<(String, PathBuf)>,
    /// `model_id weight` lines; uniform over the given models when absent.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SubmitArgs {
    #[arg(long)]
    pub finals: PathBuf,
    #[arg(long)]
    pub candidates: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Gold relations TSV.
    #[arg(long)]
    pub gold: PathBuf,
    /// Submission TSV.
    #[arg(long)]
    pub predicted: PathBuf,
    /// Full report as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Per-document false positives and negatives as JSON.
    #[arg(long)]
    pub diff: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Config file of `key = value` lines.
    #[arg(long, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
    /// Overrides as `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

fn parse_generated(s: &str) -> std::result::Result<(String, PathBuf), String> {
    s.split_once('=')
        .filter(|(m, p)| !m.is_empty() && !p.is_empty())
        .map(|(m, p)| (m.to_string(), PathBuf::from(p)))
        .ok_or_else(|| format!("expected MODEL=FILE, found `{s}`"))
}

fn manifest(name: &str, inputs: &[&Path]) -> ManifestBuilder {
    let mut m = ManifestBuilder::new(name);
    for i in inputs {
        m.input(i);
    }
    m
}

pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Parse(a) => parse(a),
        Command::Sentencize(a) => sentencize_cmd(a),
        Command::Candidates(a) => candidates(a),
        Command::Encode(a) => encode_cmd(a),
        Command::Balance(a) => balance_cmd(a),
        Command::Shard(a) => shard(a),
        Command::Merge(a) => merge(a),
        Command::Ensemble(a) => ensemble(a),
        Command::Submit(a) => submit(a),
        Command::Score(a) => score_cmd(a),
        Command::Run(a) => run(a),
    }
}

fn parse(a: ParseArgs) -> Result<()> {
    let corpus = read_corpus(&a.corpus.tsv()?)?;
    let mut report = validate_corpus(&corpus.documents);
    report.duplicate_relations = corpus.duplicate_relations;
    write_jsonl(&a.out, &corpus.documents)?;
    let mut outputs = vec![a.out.as_path()];
    if let Some(r) = &a.report {
        write_json(r, &report)?;
        outputs.push(r);
    }
    print!("{report}");
    manifest("parse", &a.corpus.inputs()).write(&manifest_path_for(&a.out), &outputs)?;
    Ok(())
}

fn sentencize_cmd(a: SentencizeArgs) -> Result<()> {
    let docs = a.corpus.load()?;
    let abbreviations = load_abbreviations(a.abbreviations.as_deref())?;
    let sentences: Vec<Sentence> = docs.iter().flat_map(|d| sentencize(d, &abbreviations)).collect();
    write_jsonl(&a.out, &sentences)?;
    let mut inputs = a.corpus.inputs();
    inputs.extend(a.abbreviations.as_deref());
    manifest("sentencize", &inputs).write(&manifest_path_for(&a.out), &[&a.out])?;
    Ok(())
}

fn candidates(a: CandidatesArgs) -> Result<()> {
    let docs = a.corpus.load()?;
    let prepared = match &a.sentences {
        Some(path) => prepare_from_sentences(&docs, read_jsonl(path)?)?,
        None => prepare(&docs, &load_abbreviations(a.abbreviations.as_deref())?)?,
    };
    write_jsonl(&a.out, &prepared.candidates)?;
    let mut outputs = vec![a.out.as_path()];
    if let Some(d) = &a.dropped {
        write_string(d, &tuples_to_tsv(&prepared.dropped))?;
        outputs.push(d);
    }
    if !prepared.dropped.is_empty() {
        log::warn!("{} gold relations span sentences and have no candidate", prepared.dropped.len());
    }
    let mut inputs = a.corpus.inputs();
    inputs.extend(a.sentences.as_deref());
    inputs.extend(a.abbreviations.as_deref());
    manifest("candidates", &inputs).write(&manifest_path_for(&a.out), &outputs)?;
    Ok(())
}

fn encode_cmd(a: EncodeArgs) -> Result<()> {
    let scheme = parse_scheme(&a.scheme)?;
    let candidates: Vec<CandidateExample> = read_jsonl(&a.candidates)?;
    write_jsonl(&a.out, &encode(&candidates, scheme))?;
    let mut m = manifest("encode", &[&a.candidates]);
    m.flag("scheme", &a.scheme);
    m.write(&manifest_path_for(&a.out), &[&a.out])?;
    Ok(())
}

fn balance_cmd(a: BalanceArgs) -> Result<()> {
    let candidates: Vec<CandidateExample> = read_jsonl(&a.candidates)?;
    let mut spec = BalanceSpec::new(a.strategy, a.seed);
    if let Some(r) = a.ratio {
        spec = spec.with_ratio(r);
    }
    write_jsonl(&a.out, &balance(&candidates, &spec)?)?;
    let mut m = manifest("balance", &[&a.candidates]);
    m.seed(a.seed).flag("strategy", format!("{:?}", a.strategy)).flag("ratio", format!("{:?}", spec.ratio()));
    m.write(&manifest_path_for(&a.out), &[&a.out])?;
    Ok(())
}

fn shard(a: ShardArgs) -> Result<()> {
    let paths = a.corpus.tsv()?;
    let docs = read_corpus(&paths)?.documents;
    let (plan, written) = shard_corpus(docs, a.shards, &a.out_dir, paths.relations.is_some())?;
    println!("{}", plan.sizes().iter().map(ToString::to_string).collect::<Vec<_>>().join(" "));
    let plan_path = a.out_dir.join("plan.json");
    let mut outputs: Vec<&Path> = written.iter().flat_map(CorpusPaths::all).collect();
    outputs.push(&plan_path);
    let mut m = manifest("shard", &a.corpus.inputs());
    m.flag("shards", a.shards);
    m.write(&a.out_dir.join("manifest.json"), &outputs)?;
    Ok(())
}

fn merge(a: MergeArgs) -> Result<()> {
    let plan: Option<ShardPlan> = a.plan.as_deref().map(read_json).transpose()?;
    write_string(&a.out, &merge_jsonl_files(&a.inputs, plan.as_ref())?)?;
    let mut inputs: Vec<&Path> = a.inputs.iter().map(PathBuf::as_path).collect();
    inputs.extend(a.plan.as_deref());
    manifest("merge", &inputs).write(&manifest_path_for(&a.out), &[&a.out])?;
    Ok(())
}

fn ensemble(a: EnsembleArgs) -> Result<()> {
    if a.predictions.is_empty() && a.generated.is_empty() {
        return Err(Error::Usage("give at least one --predictions or --generated file".into()));
    }
    let (predictions, _) = load_predictions(&a.predictions, &a.generated)?;
    let config = ensemble_config(a.weights.as_deref(), &predictions)?;
    write_jsonl(&a.out, &combine(&predictions, &config)?)?;
    let mut inputs: Vec<&Path> = a.predictions.iter().map(PathBuf::as_path).collect();
    inputs.extend(a.generated.iter().map(|(_, p)| p.as_path()));
    inputs.extend(a.weights.as_deref());
    let mut m = manifest("ensemble", &inputs);
    for (model, w) in config.weights() {
        m.flag(&format!("weight.{model}"), w);
    }
    m.write(&manifest_path_for(&a.out), &[&a.out])?;
    Ok(())
}

fn submit(a: SubmitArgs) -> Result<()> {
    let finals: Vec<FinalPrediction> = read_jsonl(&a.finals)?;
    let candidates: Vec<CandidateExample> = read_jsonl(&a.candidates)?;
    write_string(&a.out, &tuples_to_tsv(&predictions_to_submission(&finals, &candidates)?))?;
    manifest("submit", &[&a.finals, &a.candidates]).write(&manifest_path_for(&a.out), &[&a.out])?;
    Ok(())
}

fn score_cmd(a: ScoreArgs) -> Result<()> {
    let gold: BTreeSet<RelationTuple> = read_tuples(&a.gold)?.into_iter().collect();
    let predicted: BTreeSet<RelationTuple> = read_tuples(&a.predicted)?.into_iter().collect();
    let report = score(&gold, &predicted)?;
    print!("{report}");
    let mut outputs = Vec::new();
    if let Some(j) = &a.json {
        write_json(j, &report)?;
        outputs.push(j.as_path());
    }
    if let Some(d) = &a.diff {
        write_json(d, &diff_report(&gold, &predicted))?;
        outputs.push(d.as_path());
    }
    if let Some(first) = outputs.first() {
        manifest("score", &[&a.gold, &a.predicted]).write(&manifest_path_for(first), &outputs)?;
    }
    Ok(())
}

fn run(a: RunArgs) -> Result<()> {
    if a.config.is_none() && a.overrides.is_empty() {
        return Err(Error::Usage(format!("give --config, --set overrides, or set {CONFIG_ENV}")));
    }
    let cfg = PipelineConfig::load(a.config.as_deref(), &a.overrides)?;
    let summary = run_pipeline(&cfg)?;
    println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
    Ok(())
}
