//! JSON Lines records that have no direct core type, and their ingestion.
//!
//! Sentences, candidates, encoder outputs and final predictions serialize
//! straight from the core types. Prediction files and generated-text files
//! are validated here on the way in.

use std::collections::BTreeMap;
use std::path::Path;

use relex_core::encoders::Turn;
use relex_core::{decode_t5, ModelPrediction, ParseStatus};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{jsonl_lines, read_to_string};

/// `{model_id, example_id, probs: [14 floats]}` as written by a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub model_id: String,
    pub example_id: String,
    pub probs: Vec<f64>,
}

/// `{example_id, turn, generated_text}` as written by a text-to-text model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedRecord {
    pub example_id: String,
    pub turn: Turn,
    pub generated_text: String,
}

/// Reads a prediction file, validating and renormalizing every vector.
/// A repeated (model_id, example_id) pair is an error.
pub fn ingest_predictions(path: &Path) -> Result<Vec<ModelPrediction>> {
    let text = read_to_string(path)?;
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for (line, l) in jsonl_lines(&text) {
        let record: PredictionRecord =
            serde_json::from_str(l).map_err(|source| Error::Json { path: path.into(), line, source })?;
        let prediction = ModelPrediction::new(record.model_id, record.example_id, &record.probs)
            .map_err(|e| Error::Record { path: path.into(), line, message: e.to_string() })?;
        if !seen.insert((prediction.model_id.clone(), prediction.example_id.clone())) {
            return Err(Error::Record {
                path: path.into(),
                line,
                message: format!(
                    "duplicate prediction for model `{}`, example `{}`",
                    prediction.model_id, prediction.example_id
                ),
            });
        }
        out.push(prediction);
    }
    Ok(out)
}

/// Parse outcome counts for a generated-text file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeStats {
    pub ok: usize,
    pub unparseable: usize,
}

/// Decodes a generated-text file into one-hot predictions for `model_id`,
/// sorted by example id. Every example needs a `DETECT` turn; a `CLASSIFY`
/// turn is optional.
pub fn ingest_generated(path: &Path, model_id: &str) -> Result<(Vec<ModelPrediction>, DecodeStats)> {
    let text = read_to_string(path)?;
    let mut turns: BTreeMap<String, (Option<String>, Option<String>, usize)> = BTreeMap::new();
    for (line, l) in jsonl_lines(&text) {
        let record: GeneratedRecord =
            serde_json::from_str(l).map_err(|source| Error::Json { path: path.into(), line, source })?;
        let entry = turns.entry(record.example_id.clone()).or_insert((None, None, line));
        let slot = match record.turn {
            Turn::Detect => &mut entry.0,
            Turn::Classify => &mut entry.1,
            Turn::None => {
                return Err(Error::Record { path: path.into(), line, message: "generated turn must be DETECT or CLASSIFY".into() })
            }
        };
        if slot.replace(record.generated_text).is_some() {
            return Err(Error::Record {
                path: path.into(),
                line,
                message: format!("duplicate {:?} turn for `{}`", record.turn, record.example_id),
            });
        }
    }
    let mut stats = DecodeStats::default();
    let mut out = Vec::with_capacity(turns.len());
    for (example_id, (detect, classify, line)) in turns {
        let detect = detect.ok_or_else(|| Error::Record {
            path: path.into(),
            line,
            message: format!("example `{example_id}` has no DETECT turn"),
        })?;
        let (label, status) = decode_t5(&detect, classify.as_deref());
        match status {
            ParseStatus::Ok => stats.ok += 1,
            ParseStatus::Unparseable => stats.unparseable += 1,
        }
        out.push(ModelPrediction::one_hot(model_id, example_id, label));
    }
    Ok((out, stats))
}
