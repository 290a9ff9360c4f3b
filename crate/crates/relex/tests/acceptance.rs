//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on
//! any failure. Every check compares library output against an
//! independently coded oracle.

// Oracles index plainly on purpose.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relex::config::PipelineConfig;
use relex::io::{to_jsonl, write_corpus, CorpusPaths};
use relex::pipeline::{merge_jsonl_files, prepare, run_pipeline, shard_corpus};
use relex::synth::{synth_corpus, SynthOptions};
use relex_core::balance::{BalanceSpec, BalanceStrategy, Ratio};
use relex_core::encoders::{detag, encode_mask, encode_t5, encode_tag, Turn, MASK_CHEMICAL, MASK_GENE, MASK_OTHER};
use relex_core::{
    assign_entities, balance, combine, decode_t5, generate_candidates, parse_corpus, predictions_to_submission, score,
    sentencize, serialize_corpus, Abbreviations, CandidateExample, Document, EncodedExample, EnsembleConfig,
    FinalPrediction, ModelPrediction, ParseStatus, RelationLabel, RelationTuple, Source,
};

type Check = std::result::Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn chars(s: &str) -> Vec<char> {
    s.chars().collect()
}

fn slice(text: &[char], start: usize, end: usize) -> String {
    text[start..end].iter().collect()
}

fn reparse(docs: &[Document]) -> Vec<Document> {
    let f = serialize_corpus(docs);
    parse_corpus(Source::new("a", &f.abstracts), Source::new("e", &f.entities), Some(Source::new("r", &f.relations)))
        .expect("synthetic corpus parses")
        .documents
}

fn criterion_1() -> Check {
    let started = Instant::now();
    let docs = synth_corpus(&SynthOptions { documents: 200, seed: 1, ..Default::default() });
    let files = serialize_corpus(&docs);
    let parsed = parse_corpus(
        Source::new("abstracts", &files.abstracts),
        Source::new("entities", &files.entities),
        Some(Source::new("relations", &files.relations)),
    )
    .map_err(|e| e.to_string())?;
    let again = serialize_corpus(&parsed.documents);
    ensure!(again == files, "serialize(parse(files)) differs from the files");
    let mut mentions = 0;
    for d in &parsed.documents {
        let text = chars(&d.full_text());
        for m in &d.entities {
            ensure!(slice(&text, m.start, m.end) == m.surface, "{} {}: slice differs from surface", d.doc_id, m.id);
            mentions += 1;
        }
    }
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    Ok(format!("200 documents, {mentions} mentions, byte-identical, {:.2} s", elapsed.as_secs_f64()))
}

fn criterion_2() -> Check {
    let docs = reparse(&synth_corpus(&SynthOptions { documents: 1000, seed: 2, period_mentions: 0.1, ..Default::default() }));
    let abbreviations = Abbreviations::builtin();
    let (mut total, mut with_period, mut sentences) = (0usize, 0usize, 0usize);
    for d in &docs {
        let text = chars(&d.full_text());
        let sents = sentencize(d, &abbreviations);
        sentences += sents.len();
        // Reconstruction: sentence texts plus the whitespace between them
        // give back the full text.
        let mut rebuilt = String::new();
        let mut cursor = 0;
        for s in &sents {
            ensure!(s.start >= cursor && s.end <= text.len(), "{}: sentence {} out of order", d.doc_id, s.sent_index);
            let gap = slice(&text, cursor, s.start);
            ensure!(gap.chars().all(char::is_whitespace), "{}: non-whitespace `{gap}` between sentences", d.doc_id);
            ensure!(slice(&text, s.start, s.end) == s.text, "{}: sentence text mismatch", d.doc_id);
            rebuilt.push_str(&gap);
            rebuilt.push_str(&s.text);
            cursor = s.end;
        }
        let tail = slice(&text, cursor, text.len());
        ensure!(tail.chars().all(char::is_whitespace), "{}: text after the last sentence", d.doc_id);
        rebuilt.push_str(&tail);
        ensure!(rebuilt == d.full_text(), "{}: reconstruction differs", d.doc_id);

        for m in &d.entities {
            total += 1;
            with_period += usize::from(m.surface.contains(". "));
            let inside = sents.iter().filter(|s| s.start <= m.start && m.end <= s.end).count();
            let touching = sents.iter().filter(|s| m.start < s.end && m.end > s.start).count();
            ensure!(inside == 1 && touching == 1, "{} {}: straddles a sentence boundary", d.doc_id, m.id);
        }
        let map = assign_entities(d, &sents).map_err(|e| e.to_string())?;
        for (s, ms) in sents.iter().zip(&map) {
            let st = chars(&s.text);
            for m in ms {
                ensure!(slice(&st, m.start, m.end) == m.surface, "{} {}: local offsets wrong", d.doc_id, m.id);
            }
        }
    }
    let share = with_period as f64 / total as f64;
    ensure!((0.05..0.15).contains(&share), "period-covering share {share:.3} is not near 10%");
    Ok(format!(
        "1000 documents, {sentences} sentences, {total} mentions ({with_period} covering a period), 0 straddling"
    ))
}

/// Candidates of the criterion 3 corpus, reused by the encoder, balancing
/// and ensemble-usefulness checks.
fn criterion_3_candidates() -> Result<Vec<CandidateExample>, String> {
    let docs = reparse(&synth_corpus(&SynthOptions { documents: 1000, seed: 3, cross_sentence: 0.3, ..Default::default() }));
    let abbreviations = Abbreviations::builtin();
    let mut all = Vec::new();
    for d in &docs {
        let sents = sentencize(d, &abbreviations);
        let map = assign_entities(d, &sents).map_err(|e| e.to_string())?;
        all.extend(generate_candidates(d, &sents, &map).candidates);
    }
    Ok(all)
}

fn criterion_3() -> Check {
    let docs = reparse(&synth_corpus(&SynthOptions { documents: 1000, seed: 3, cross_sentence: 0.3, ..Default::default() }));
    let abbreviations = Abbreviations::builtin();
    let (mut n_candidates, mut attached, mut dropped) = (0usize, 0usize, 0usize);
    for d in &docs {
        let sents = sentencize(d, &abbreviations);
        let map = assign_entities(d, &sents).map_err(|e| e.to_string())?;
        let set = generate_candidates(d, &sents, &map);

        let mut labels_of: BTreeMap<(&str, &str), usize> = BTreeMap::new();
        for r in &d.gold_relations {
            *labels_of.entry((r.arg1.as_str(), r.arg2.as_str())).or_default() += 1;
        }
        let mut sentence_of: BTreeMap<&str, usize> = BTreeMap::new();
        let mut expected = 0;
        for (k, ms) in map.iter().enumerate() {
            let chems: Vec<_> = ms.iter().filter(|m| m.kind() == relex_core::EntityKind::Chemical).collect();
            let genes: Vec<_> = ms.iter().filter(|m| m.kind() == relex_core::EntityKind::Gene).collect();
            expected += chems.len() * genes.len();
            for c in &chems {
                for g in &genes {
                    expected += labels_of.get(&(c.id.as_str(), g.id.as_str())).map_or(0, |n| n - 1);
                }
            }
            for m in ms {
                sentence_of.insert(&m.id, k);
            }
        }
        ensure!(set.candidates.len() == expected, "{}: {} candidates, expected {expected}", d.doc_id, set.candidates.len());
        n_candidates += set.candidates.len();

        for r in &d.gold_relations {
            let carried = set
                .candidates
                .iter()
                .any(|c| c.chem.id == r.arg1 && c.gene.id == r.arg2 && c.label == r.label);
            let in_dropped = set.dropped.contains(r);
            ensure!(carried != in_dropped, "{}: relation {r:?} attached={carried} dropped={in_dropped}", d.doc_id);
            let same_sentence = sentence_of.get(r.arg1.as_str()) == sentence_of.get(r.arg2.as_str());
            ensure!(carried == same_sentence, "{}: relation {r:?} attachment disagrees with sentence oracle", d.doc_id);
            attached += usize::from(carried);
            dropped += usize::from(in_dropped);
        }
    }
    ensure!(dropped > 0, "the corpus has no cross-sentence relation to exercise");
    Ok(format!("{n_candidates} candidates match c*g (+extra labels); {attached} gold attached, {dropped} dropped"))
}

fn count(haystack: &str, needle: &str) -> usize {
    haystack.matches(needle).count()
}

fn criterion_4(candidates: &[CandidateExample]) -> Check {
    let mut t5_checks = 0;
    for c in candidates {
        let mask = encode_mask(c);
        ensure!(count(&mask.input_text, MASK_CHEMICAL) == 1, "{}: chemical mask count", c.example_id);
        ensure!(count(&mask.input_text, MASK_GENE) == 1, "{}: gene mask count", c.example_id);
        ensure!(count(&mask.input_text, MASK_OTHER) == c.others.len(), "{}: other mask count", c.example_id);
        ensure!(!mask.flagged, "{}: unexpected overlap flag", c.example_id);

        let tag = encode_tag(c);
        ensure!(detag(&tag.input_text) == c.sentence_text, "{}: detag differs from the sentence", c.example_id);

        for &label in RelationLabel::ALL.iter() {
            let relabelled = CandidateExample { label, ..c.clone() };
            let turns: Vec<EncodedExample> = encode_t5(&relabelled);
            let target = |t: Turn| turns.iter().find(|e| e.turn == t).map(|e| e.target_text.as_str());
            let detect = target(Turn::Detect).ok_or_else(|| format!("{}: no detection turn", c.example_id))?;
            ensure!(label.is_positive() == target(Turn::Classify).is_some(), "{}: classify turn presence", c.example_id);
            let decoded = decode_t5(detect, target(Turn::Classify));
            ensure!(decoded == (label, ParseStatus::Ok), "{}: {label:?} decoded as {decoded:?}", c.example_id);
            t5_checks += 1;
        }
    }
    Ok(format!("{} candidates; {t5_checks} T5 round trips over all 14 labels", candidates.len()))
}

fn ceil_mul(r: Ratio, n: usize) -> usize {
    let (num, den) = (r.num as usize, r.den as usize);
    (num * n).div_ceil(den)
}

fn floor_div(r: Ratio, n: usize) -> usize {
    (r.den as usize * n) / r.num as usize
}

fn multiset(items: &[CandidateExample]) -> BTreeMap<&str, usize> {
    let mut m = BTreeMap::new();
    for c in items {
        *m.entry(c.example_id.as_str()).or_default() += 1;
    }
    m
}

fn criterion_5(candidates: &[CandidateExample]) -> Check {
    let pos = candidates.iter().filter(|c| c.is_positive()).count();
    let neg = candidates.len() - pos;
    let original = multiset(candidates);
    let specs = [
        (BalanceStrategy::OverPos, None),
        (BalanceStrategy::Balance, None),
        (BalanceStrategy::OverNeg, None),
        (BalanceStrategy::OverNeg, Some(Ratio::new(3, 1).expect("valid"))),
        (BalanceStrategy::Balance, Some(Ratio::new(1, 2).expect("valid"))),
    ];
    let mut lines = Vec::new();
    for (strategy, ratio) in specs {
        let mut spec = BalanceSpec::new(strategy, 7);
        if let Some(r) = ratio {
            spec = spec.with_ratio(r);
        }
        let r = spec.ratio();
        let out = balance(candidates, &spec).map_err(|e| e.to_string())?;
        let p = out.iter().filter(|c| c.is_positive()).count();
        let n = out.len() - p;
        let (want_p, want_n) = match strategy {
            BalanceStrategy::OverPos => (pos.max(floor_div(r, neg)), neg),
            BalanceStrategy::OverNeg => (pos, neg.max(ceil_mul(r, pos))),
            BalanceStrategy::Balance if neg > ceil_mul(r, pos) => (pos, ceil_mul(r, pos)),
            BalanceStrategy::Balance => (pos.min(floor_div(r, neg)), neg),
        };
        ensure!((p, n) == (want_p, want_n), "{strategy:?} r={r:?}: got {p}/{n}, law says {want_p}/{want_n}");
        if strategy == BalanceStrategy::Balance && r == Ratio::ONE {
            ensure!(p.abs_diff(n) <= 1, "BALANCE left |pos-neg| > 1");
        }
        let got = multiset(&out);
        match strategy {
            BalanceStrategy::Balance => {
                ensure!(got.iter().all(|(id, &k)| original.get(id) >= Some(&k)), "BALANCE output is not a sub-multiset");
            }
            _ => {
                ensure!(original.iter().all(|(id, &k)| got.get(id) >= Some(&k)), "{strategy:?} lost an original");
                ensure!(got.keys().all(|id| original.contains_key(id)), "{strategy:?} invented an example");
            }
        }
        let again = to_jsonl(&balance(candidates, &spec).map_err(|e| e.to_string())?);
        ensure!(to_jsonl(&out) == again, "{strategy:?}: same seed gave different bytes");
        let other = to_jsonl(&balance(candidates, &BalanceSpec { seed: 8, ..spec }).map_err(|e| e.to_string())?);
        ensure!(to_jsonl(&out) != other, "{strategy:?}: different seeds gave identical bytes");
        lines.push(format!("{strategy:?}({}/{}) {p}/{n}", r.num, r.den));
    }
    Ok(format!("from {pos}/{neg}: {}", lines.join(", ")))
}

fn random_vector(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..14).map(|_| rng.gen::<f64>().powi(3)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

fn criterion_6() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut entries = 0usize;
    let mut max_err = 0f64;
    for group in 0..1000 {
        let models = rng.gen_range(2..=5);
        let examples = rng.gen_range(1..=3);
        let raw_weights: Vec<(String, f64)> = (0..models).map(|m| (format!("m{m}"), rng.gen_range(0.05..5.0))).collect();
        let mut preds = Vec::new();
        for e in 0..examples {
            for (model, _) in &raw_weights {
                let p = ModelPrediction::new(model.clone(), format!("g{group}.e{e}"), &random_vector(&mut rng))
                    .map_err(|e| e.to_string())?;
                preds.push(p);
            }
        }
        let config = EnsembleConfig::new(raw_weights.clone()).map_err(|e| e.to_string())?;
        let finals = combine(&preds, &config).map_err(|e| e.to_string())?;
        ensure!(finals.len() == examples, "group {group}: {} finals", finals.len());

        let total: f64 = raw_weights.iter().map(|(_, w)| w).sum();
        for f in &finals {
            let mut expected = [0f64; 14];
            for (model, w) in &raw_weights {
                let p = preds.iter().find(|p| &p.model_id == model && p.example_id == f.example_id).expect("present");
                for i in 0..14 {
                    expected[i] += (w / total) * p.probs[i];
                }
            }
            for i in 0..14 {
                let err = (expected[i] - f.probs[i]).abs();
                max_err = max_err.max(err);
                ensure!(err <= 1e-12, "group {group} entry {i}: error {err:e}");
                entries += 1;
            }
            let mut best = 0;
            for i in 1..14 {
                if expected[i] > expected[best] {
                    best = i;
                }
            }
            ensure!(f.label.index() == best, "group {group}: argmax {} vs brute force {best}", f.label.index());
        }

        let mut shuffled = preds.clone();
        shuffled.shuffle(&mut rng);
        let permuted = combine(&shuffled, &config).map_err(|e| e.to_string())?;
        ensure!(bits(&permuted) == bits(&finals), "group {group}: input order changed the output");

        let c = rng.gen_range(0.01..100.0);
        let scaled_config = EnsembleConfig::new(raw_weights.iter().map(|(m, w)| (m.clone(), w * c))).map_err(|e| e.to_string())?;
        let scaled = combine(&preds, &scaled_config).map_err(|e| e.to_string())?;
        for (a, b) in finals.iter().zip(&scaled) {
            ensure!(a.label == b.label, "group {group}: weight scale changed a label");
            ensure!(a.probs.iter().zip(&b.probs).all(|(x, y)| (x - y).abs() <= 1e-12), "group {group}: weight scale moved probs");
        }
    }
    Ok(format!("1000 groups, {entries} entries, max abs error {max_err:.1e}"))
}

fn bits(finals: &[FinalPrediction]) -> Vec<(String, Vec<u64>)> {
    finals.iter().map(|f| (f.example_id.clone(), f.probs.iter().map(|p| p.to_bits()).collect())).collect()
}

/// Model output that puts most mass on `label`, or leans to a wrong label
/// while keeping the true one close behind.
fn soft(label: RelationLabel, wrong: Option<RelationLabel>) -> Vec<f64> {
    let mut v = vec![0.0; 14];
    match wrong {
        None => {
            v.iter_mut().for_each(|x| *x = 0.3 / 13.0);
            v[label.index()] = 0.7;
        }
        Some(w) => {
            v.iter_mut().for_each(|x| *x = 0.2 / 12.0);
            v[w.index()] = 0.45;
            v[label.index()] = 0.35;
        }
    }
    v
}

fn criterion_7(candidates: &[CandidateExample]) -> Check {
    let pool: Vec<&CandidateExample> = candidates.iter().filter(|c| !c.example_id.contains('#')).take(40).collect();
    ensure!(pool.len() == 40, "not enough candidates");
    let positives = RelationLabel::positives();
    let gold_label = |i: usize| if i < 20 { positives[i % positives.len()] } else { RelationLabel::NoRelation };
    let wrong_label = |i: usize| if gold_label(i).is_positive() { RelationLabel::NoRelation } else { positives[i % 13] };
    let gold: BTreeSet<RelationTuple> = pool
        .iter()
        .enumerate()
        .filter(|&(i, _)| gold_label(i).is_positive())
        .map(|(i, c)| RelationTuple { doc_id: c.doc_id.clone(), label: gold_label(i), arg1: c.chem.id.clone(), arg2: c.gene.id.clone() })
        .collect();
    let a_errs: BTreeSet<usize> = (0..5).chain(20..25).collect();
    let b_errs: BTreeSet<usize> = (5..10).chain(25..30).collect();

    let mut preds = Vec::new();
    for (i, c) in pool.iter().enumerate() {
        for (model, errs) in [("A", &a_errs), ("B", &b_errs)] {
            let wrong = errs.contains(&i).then(|| wrong_label(i));
            preds.push(ModelPrediction::new(model, c.example_id.clone(), &soft(gold_label(i), wrong)).map_err(|e| e.to_string())?);
        }
    }
    let owned: Vec<CandidateExample> = pool.iter().map(|&c| c.clone()).collect();
    let f1 = |config: &EnsembleConfig, preds: &[ModelPrediction]| -> Result<f64, String> {
        let finals = combine(preds, config).map_err(|e| e.to_string())?;
        let rows: BTreeSet<RelationTuple> =
            predictions_to_submission(&finals, &owned).map_err(|e| e.to_string())?.into_iter().collect();
        Ok(score(&gold, &rows).map_err(|e| e.to_string())?.overall.f1)
    };
    let only = |m: &str| preds.iter().filter(|p| p.model_id == m).cloned().collect::<Vec<_>>();
    let fa = f1(&EnsembleConfig::uniform(["A"]).map_err(|e| e.to_string())?, &only("A"))?;
    let fb = f1(&EnsembleConfig::uniform(["B"]).map_err(|e| e.to_string())?, &only("B"))?;
    let fe = f1(&EnsembleConfig::uniform(["A", "B"]).map_err(|e| e.to_string())?, &preds)?;
    ensure!(fa < 1.0 && fb < 1.0, "single models should be imperfect: {fa} {fb}");
    ensure!(fe > fa && fe > fb, "ensemble {fe} does not beat {fa} and {fb}");
    Ok(format!("F1 A={fa:.4} B={fb:.4} uniform ensemble={fe:.4}"))
}

fn tuple(doc: &str, label: RelationLabel, a: &str, b: &str) -> RelationTuple {
    RelationTuple { doc_id: doc.into(), label, arg1: a.into(), arg2: b.into() }
}

fn brute_counts(gold: &[RelationTuple], predicted: &[RelationTuple], label: Option<RelationLabel>) -> (usize, usize, usize) {
    let keep = |t: &&RelationTuple| label.is_none_or(|l| t.label == l);
    let g: Vec<&RelationTuple> = gold.iter().filter(keep).collect();
    let p: Vec<&RelationTuple> = predicted.iter().filter(keep).collect();
    let mut tp = 0;
    for x in &p {
        for y in &g {
            if x == y {
                tp += 1;
            }
        }
    }
    (tp, p.len() - tp, g.len() - tp)
}

fn criterion_8() -> Check {
    use RelationLabel::*;
    let gold: BTreeSet<_> =
        [tuple("d", Inhibitor, "T1", "T2"), tuple("d", Substrate, "T3", "T4"), tuple("e", ProductOf, "T1", "T9")].into();
    let predicted: BTreeSet<_> = [
        tuple("d", Inhibitor, "T1", "T2"),
        tuple("e", ProductOf, "T1", "T9"),
        tuple("d", Activator, "T3", "T4"),
        tuple("e", Agonist, "T5", "T6"),
    ]
    .into();
    let r = score(&gold, &predicted).map_err(|e| e.to_string())?;
    let four = |x: f64| format!("{x:.4}");
    ensure!(
        (four(r.overall.precision), four(r.overall.recall), four(r.overall.f1))
            == ("0.5000".into(), "0.6667".into(), "0.5714".into()),
        "hand case gave {:?}",
        r.overall
    );
    ensure!(r.per_label[&Substrate].tp == 0 && r.per_label[&Substrate].f1 == 0.0, "zero-prediction label row");
    for zero in [SubstrateProductOf, AgonistActivator] {
        let s = r.per_label[&zero];
        ensure!(
            (s.precision, s.recall, s.f1, s.tp, s.fp, s.fn_) == (0.0, 0.0, 0.0, 0, 0, 0),
            "{zero:?} row is not all zero"
        );
    }
    let table = r.to_string();
    ensure!(
        table.lines().any(|l| l.starts_with("SUBSTRATE_PRODUCT-OF") && l.contains("0.0000    0.0000    0.0000")),
        "zero row missing from the table"
    );

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let positives = RelationLabel::positives();
    let random_tuple = |rng: &mut ChaCha8Rng| {
        tuple(
            ["d1", "d2", "d3"].choose(rng).expect("docs"),
            positives[rng.gen_range(0..4)],
            ["T1", "T2"].choose(rng).expect("ids"),
            ["T3", "T4", "T5"].choose(rng).expect("ids"),
        )
    };
    for case in 0..500 {
        let g: BTreeSet<_> = (0..rng.gen_range(0..=25)).map(|_| random_tuple(&mut rng)).collect();
        let p: BTreeSet<_> = (0..rng.gen_range(0..=25)).map(|_| random_tuple(&mut rng)).collect();
        let (gv, pv): (Vec<_>, Vec<_>) = (g.iter().cloned().collect(), p.iter().cloned().collect());
        let r = score(&g, &p).map_err(|e| e.to_string())?;
        let rows = std::iter::once((None, r.overall)).chain(r.per_label.iter().map(|(l, s)| (Some(*l), *s)));
        for (label, s) in rows {
            let (tp, fp, fn_) = brute_counts(&gv, &pv, label);
            ensure!((s.tp, s.fp, s.fn_) == (tp, fp, fn_), "case {case} {label:?}: counts differ");
            let pr = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
            let rc = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
            let f = if pr + rc == 0.0 { 0.0 } else { 2.0 * pr * rc / (pr + rc) };
            ensure!((s.precision, s.recall, s.f1) == (pr, rc, f), "case {case} {label:?}: P/R/F1 differ");
        }
    }
    Ok("hand case 0.5000/0.6667/0.5714; 500 random cases exact; zero-support rows 0.0".into())
}

fn tempdir() -> tempfile::TempDir {
    tempfile::tempdir().expect("temporary directory")
}

fn config(corpus: &Path, out: &Path, shards: usize, predictions: Option<PathBuf>) -> PipelineConfig {
    let mut set = vec![
        format!("abstracts={}", corpus.join("abstracts.tsv").display()),
        format!("entities={}", corpus.join("entities.tsv").display()),
        format!("relations={}", corpus.join("relations.tsv").display()),
        format!("out_dir={}", out.display()),
        "balance=over_neg".into(),
        "seed=5".into(),
        format!("shards={shards}"),
    ];
    if let Some(p) = predictions {
        set.push(format!("predictions={}", p.display()));
    }
    PipelineConfig::load(None, &set).expect("valid config")
}

/// Every file under `dir` except manifests and per-shard scratch dumps.
fn outputs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).expect("output dir") {
        let path = entry.expect("dir entry").path();
        if path.is_file() {
            out.insert(path.file_name().expect("name").to_string_lossy().into_owned(), fs::read(&path).expect("readable"));
        }
    }
    out
}

fn oracle_predictions(candidates_jsonl: &Path, out: &Path, model: &str, oracle: bool) {
    let mut text = String::new();
    for line in fs::read_to_string(candidates_jsonl).expect("candidates").lines() {
        let c: CandidateExample = serde_json::from_str(line).expect("candidate record");
        let mut probs = [0.0; 14];
        probs[if oracle { c.label.index() } else { 0 }] = 1.0;
        text.push_str(&serde_json::json!({"model_id": model, "example_id": c.example_id, "probs": probs}).to_string());
        text.push('\n');
    }
    fs::write(out, text).expect("write predictions");
}

fn criterion_9() -> Check {
    let tmp = tempdir();
    let corpus_dir = tmp.path().join("corpus");
    let docs = synth_corpus(&SynthOptions { documents: 10_000, seed: 9, ..Default::default() });
    write_corpus(&CorpusPaths::in_dir(&corpus_dir), &serialize_corpus(&docs)).map_err(|e| e.to_string())?;

    // Unsharded reference without predictions, then oracle predictions
    // derived from it for the full runs.
    let probe = tmp.path().join("probe");
    run_pipeline(&config(&corpus_dir, &probe, 1, None)).map_err(|e| e.to_string())?;
    let predictions = tmp.path().join("oracle.jsonl");
    oracle_predictions(&probe.join("candidates.jsonl"), &predictions, "oracle", true);

    // Oracle candidates recover every gold relation except the dropped
    // cross-sentence ones.
    let gold: BTreeSet<RelationTuple> = docs.iter().flat_map(Document::gold_tuples).collect();
    let dropped = fs::read_to_string(probe.join("dropped.tsv")).map_err(|e| e.to_string())?.lines().count();
    let expected_recall = (gold.len() - dropped) as f64 / gold.len() as f64;

    let mut reference = None;
    let mut timings = Vec::new();
    for n in [1, 2, 4, 7] {
        let out = tmp.path().join(format!("run{n}"));
        let started = Instant::now();
        let summary = run_pipeline(&config(&corpus_dir, &out, n, Some(predictions.clone()))).map_err(|e| e.to_string())?;
        let elapsed = started.elapsed();
        ensure!(elapsed < Duration::from_secs(120), "n={n}: run took {elapsed:?}");
        ensure!(summary.precision == Some(1.0), "n={n}: oracle precision {:?}", summary.precision);
        ensure!(summary.recall == Some(expected_recall), "n={n}: oracle recall {:?}, expected {expected_recall}", summary.recall);
        timings.push(format!("n={n} {:.1}s", elapsed.as_secs_f64()));
        let files = outputs(&out);
        match &reference {
            None => reference = Some(files),
            Some(r) => {
                ensure!(r.keys().eq(files.keys()), "n={n}: different output files");
                for (name, bytes) in r {
                    ensure!(&files[name] == bytes, "n={n}: {name} differs from the unsharded run");
                }
            }
        }

        // The file-level route: shard, prepare each shard on its own,
        // merge the dumps.
        let shard_dir = tmp.path().join(format!("shards{n}"));
        let (plan, paths) = shard_corpus(docs.clone(), n, &shard_dir, true).map_err(|e| e.to_string())?;
        let sizes = plan.sizes();
        ensure!(sizes.iter().max().unwrap_or(&0) - sizes.iter().min().unwrap_or(&0) <= 1, "n={n}: uneven shards {sizes:?}");
        let mut dumps = Vec::new();
        for (k, p) in paths.iter().enumerate() {
            let shard_docs = relex::io::read_corpus(p).map_err(|e| e.to_string())?.documents;
            let prepared = prepare(&shard_docs, &Abbreviations::builtin()).map_err(|e| e.to_string())?;
            let dump = shard_dir.join(format!("candidates_{k}.jsonl"));
            fs::write(&dump, to_jsonl(&prepared.candidates)).map_err(|e| e.to_string())?;
            dumps.push(dump);
        }
        let merged = merge_jsonl_files(&dumps, Some(&plan)).map_err(|e| e.to_string())?;
        ensure!(
            merged.as_bytes() == reference.as_ref().expect("set")["candidates.jsonl"].as_slice(),
            "n={n}: merged shard candidates differ from the unsharded run"
        );
    }
    Ok(format!("10000 documents, outputs byte-identical for n in 1,2,4,7 ({})", timings.join(", ")))
}

fn criterion_10() -> Check {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let tmp = tempdir();
    let run = |name: &str, predictions: &str| {
        let out = tmp.path().join(name);
        let cfg = config(&data, &out, 1, Some(data.join(predictions)));
        run_pipeline(&cfg).map(|s| (s, out)).map_err(|e| e.to_string())
    };
    let (oracle, first) = run("oracle", "predictions.oracle.jsonl")?;
    ensure!(oracle.f1 == Some(1.0), "oracle F1 {:?}", oracle.f1);
    let (negative, _) = run("negative", "predictions.negative.jsonl")?;
    ensure!(negative.recall == Some(0.0), "always-negative recall {:?}", negative.recall);
    ensure!(negative.submission_rows == Some(0), "always-negative produced rows");
    let (_, second) = run("oracle_again", "predictions.oracle.jsonl")?;
    ensure!(outputs(&first) == outputs(&second), "two identical runs differ");
    Ok(format!(
        "bundled corpus: oracle F1 = {:?}, always-negative R = {:?}; repeat run byte-identical",
        oracle.f1.unwrap_or_default(),
        negative.recall.unwrap_or_default()
    ))
}

fn main() {
    let shared = criterion_3_candidates();
    let with_candidates = |f: fn(&[CandidateExample]) -> Check| -> Check {
        match &shared {
            Ok(c) => f(c),
            Err(e) => Err(e.clone()),
        }
    };
    let results: Vec<(u32, &str, Check)> = vec![
        (1, "corpus round trip", criterion_1()),
        (2, "sentencizer properties", criterion_2()),
        (3, "candidate count law", criterion_3()),
        (4, "encoder invariants", with_candidates(criterion_4)),
        (5, "balancing laws and determinism", with_candidates(criterion_5)),
        (6, "ensemble oracle", criterion_6()),
        (7, "ensemble usefulness", with_candidates(criterion_7)),
        (8, "scorer oracle", criterion_8()),
        (9, "shard/merge identity", criterion_9()),
        (10, "end-to-end oracle run", criterion_10()),
    ];
    let mut failed = 0;
    for (n, name, result) in &results {
        match result {
            Ok(detail) => println!("criterion {n:>2} PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
