//! File helpers: JSON Lines, TSV corpora and content digests.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use relex_core::corpus::CorpusFiles;
use relex_core::{parse_corpus, Corpus, RelationTuple, Source};
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(Error::io(path))
}

pub fn write_string(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(Error::io(parent))?;
    }
    fs::write(path, contents).map_err(Error::io(path))
}

/// Non-blank lines of a JSON Lines file with their 1-based numbers.
pub fn jsonl_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.trim().is_empty())
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = read_to_string(path)?;
    jsonl_lines(&text)
        .map(|(line, l)| serde_json::from_str(l).map_err(|source| Error::Json { path: path.into(), line, source }))
        .collect()
}

pub fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("records serialize"));
        out.push('\n');
    }
    out
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(Error::io(parent))?;
    }
    let file = fs::File::create(path).map_err(Error::io(path))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(|e| Error::Io { path: path.into(), source: e.into() })?;
        w.write_all(b"\n").map_err(Error::io(path))?;
    }
    w.flush().map_err(Error::io(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    write_string(path, &text)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_to_string(path)?;
    serde_json::from_str(&text).map_err(|source| Error::Json { path: path.into(), line: 0, source })
}

/// Locations of the three corpus TSV files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusPaths {
    pub abstracts: PathBuf,
    pub entities: PathBuf,
    pub relations: Option<PathBuf>,
}

impl CorpusPaths {
    /// `abstracts.tsv`, `entities.tsv` and `relations.tsv` inside `dir`.
    pub fn in_dir(dir: &Path) -> Self {
        CorpusPaths {
            abstracts: dir.join("abstracts.tsv"),
            entities: dir.join("entities.tsv"),
            relations: Some(dir.join("relations.tsv")),
        }
    }

    pub fn all(&self) -> Vec<&Path> {
        let mut v = vec![self.abstracts.as_path(), self.entities.as_path()];
        v.extend(self.relations.as_deref());
        v
    }
}

pub fn read_corpus(paths: &CorpusPaths) -> Result<Corpus> {
    let abstracts = read_to_string(&paths.abstracts)?;
    let entities = read_to_string(&paths.entities)?;
    let relations = paths.relations.as_deref().map(read_to_string).transpose()?;
    let (a, e) = (paths.abstracts.display().to_string(), paths.entities.display().to_string());
    let r = paths.relations.as_ref().map(|p| p.display().to_string());
    Ok(parse_corpus(
        Source::new(&a, &abstracts),
        Source::new(&e, &entities),
        relations.as_deref().zip(r.as_deref()).map(|(text, name)| Source::new(name, text)),
    )?)
}

pub fn write_corpus(paths: &CorpusPaths, files: &CorpusFiles) -> Result<()> {
    write_string(&paths.abstracts, &files.abstracts)?;
    write_string(&paths.entities, &files.entities)?;
    if let Some(r) = &paths.relations {
        write_string(r, &files.relations)?;
    }
    Ok(())
}

pub fn read_tuples(path: &Path) -> Result<Vec<RelationTuple>> {
    let text = read_to_string(path)?;
    let name = path.display().to_string();
    Ok(RelationTuple::parse_file(Source::new(&name, &text))?)
}

pub fn tuples_to_tsv(tuples: &[RelationTuple]) -> String {
    tuples.iter().map(|t| format!("{t}\n")).collect()
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(Error::io(path))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
