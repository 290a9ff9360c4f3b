//! `key = value` pipeline configuration.
//!
//! The file format is a flat, TOML-like list of assignments: one per line,
//! `#` comments, optional double quotes around values. Relative paths are
//! resolved against the directory of the config file. `--set key=value`
//! overrides are applied on top.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use relex_core::balance::{BalanceSpec, BalanceStrategy, Ratio};
use relex_core::encoders::Scheme;

use crate::error::{Error, Result};
use crate::io::{read_to_string, CorpusPaths};

/// Environment variable naming the default config file for `run`.
pub const CONFIG_ENV: &str = "RELEX_CONFIG";

const KEYS: &[&str] = &[
    "abstracts",
    "entities",
    "relations",
    "out_dir",
    "schemes",
    "balance",
    "ratio",
    "seed",
    "abbreviations",
    "shards",
    "predictions",
    "generated",
    "weights",
];

pub fn parse_assignments(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = parse_assignment(line).map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        if map.insert(key.clone(), value).is_some() {
            return Err(Error::Config(format!("line {}: `{key}` set twice", i + 1)));
        }
    }
    Ok(map)
}

/// Parses one `key = value` (or `key=value`) assignment.
pub fn parse_assignment(line: &str) -> std::result::Result<(String, String), String> {
    let (key, value) = line.split_once('=').ok_or_else(|| format!("expected `key = value`, found `{line}`"))?;
    let key = key.trim();
    if !KEYS.contains(&key) {
        return Err(format!("unknown key `{key}`; accepted: {}", KEYS.join(", ")));
    }
    let value = value.trim();
    let value = value.strip_prefix('"').and_then(|v| v.strip_suffix('"')).unwrap_or(value);
    Ok((key.into(), value.into()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub corpus: CorpusPaths,
    pub out_dir: PathBuf,
    pub schemes: Vec<Scheme>,
    pub balance: Option<BalanceSpec>,
    pub seed: u64,
    pub abbreviations: Option<PathBuf>,
    pub shards: usize,
    pub predictions: Vec<PathBuf>,
    /// (model_id, generated-text file)
    pub generated: Vec<(String, PathBuf)>,
    pub weights: Option<PathBuf>,
}

pub fn parse_scheme(s: &str) -> Result<Scheme> {
    match s.trim().to_ascii_lowercase().as_str() {
        "mask" => Ok(Scheme::Mask),
        "tag" => Ok(Scheme::Tag),
        "t5" | "t5_qa" => Ok(Scheme::T5Qa),
        other => Err(Error::Usage(format!("unknown scheme `{other}`; accepted: mask, tag, t5"))),
    }
}

fn list(value: Option<&String>) -> Vec<&str> {
    value.map(|v| v.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()).unwrap_or_default()
}

impl PipelineConfig {
    pub fn from_assignments(map: &BTreeMap<String, String>, base: &Path) -> Result<Self> {
        let path = |key: &str| map.get(key).map(|v| base.join(v));
        let required = |key: &str| path(key).ok_or_else(|| Error::Config(format!("missing required key `{key}`")));
        let number = |key: &str| -> Result<Option<u64>> {
            map.get(key)
                .map(|v| v.parse::<u64>().map_err(|_| Error::Config(format!("`{key}` must be a non-negative integer, found `{v}`"))))
                .transpose()
        };

        let seed = number("seed")?.unwrap_or(0);
        let shards = number("shards")?.unwrap_or(1) as usize;
        if shards == 0 {
            return Err(Error::Config("`shards` must be at least 1".into()));
        }

        let schemes = match map.get("schemes") {
            None => vec![Scheme::Mask, Scheme::Tag, Scheme::T5Qa],
            Some(_) => list(map.get("schemes")).into_iter().map(parse_scheme).collect::<Result<Vec<_>>>().map_err(|e| Error::Config(e.to_string()))?,
        };

        let balance = match map.get("balance").map(String::as_str) {
            None | Some("none") => None,
            Some(s) => {
                let strategy: BalanceStrategy = s.parse().map_err(|e: relex_core::BalanceError| Error::Config(e.to_string()))?;
                let mut spec = BalanceSpec::new(strategy, seed);
                if let Some(r) = map.get("ratio") {
                    spec = spec.with_ratio(r.parse::<Ratio>().map_err(|e| Error::Config(e.to_string()))?);
                }
                Some(spec)
            }
        };

        let generated = list(map.get("generated"))
            .into_iter()
            .map(|item| {
                item.split_once(':')
                    .map(|(m, p)| (m.trim().to_string(), base.join(p.trim())))
                    .ok_or_else(|| Error::Config(format!("`generated` entries are `model_id:path`, found `{item}`")))
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(PipelineConfig {
            corpus: CorpusPaths { abstracts: required("abstracts")?, entities: required("entities")?, relations: path("relations") },
            out_dir: required("out_dir")?,
            schemes,
            balance,
            seed,
            abbreviations: path("abbreviations"),
            shards,
            predictions: list(map.get("predictions")).into_iter().map(|p| base.join(p)).collect(),
            generated,
            weights: path("weights"),
        })
    }

    /// Loads `path` (if any) and applies `overrides` (`key=value`).
    /// Override paths are relative to the working directory.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let (map, base) = match path {
            Some(p) => {
                let text = read_to_string(p)?;
                (parse_assignments(&text)?, p.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (BTreeMap::new(), PathBuf::new()),
        };
        let mut over = BTreeMap::new();
        for o in overrides {
            let (k, v) = parse_assignment(o).map_err(Error::Config)?;
            over.insert(k, v);
        }
        let mut resolved: BTreeMap<String, String> =
            map.iter().map(|(k, v)| (k.clone(), join_if_path(k, v, &base))).collect();
        for (k, v) in over {
            let v = join_if_path(&k, &v, Path::new(""));
            resolved.insert(k, v);
        }
        Self::from_assignments(&resolved, Path::new(""))
    }
}

fn join_if_path(key: &str, value: &str, base: &Path) -> String {
    let join = |v: &str| base.join(v).display().to_string();
    match key {
        "abstracts" | "entities" | "relations" | "out_dir" | "abbreviations" | "weights" => join(value),
        "predictions" => value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(join).collect::<Vec<_>>().join(","),
        "generated" => value
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|item| match item.split_once(':') {
                Some((m, p)) => format!("{}:{}", m.trim(), join(p.trim())),
                None => item.to_string(),
            })
            .collect::<Vec<_>>()
            .join(","),
        _ => value.to_string(),
    }
}
