//! Newline-delimited JSON dataset files, prediction files and the TSV export.
//!
//! A dataset file starts with a header object
//! `{"schema_version", "engine_id", "seed", "config_hash", "lang"}` followed by
//! one `{"id", "sentence_id", "lang", "font_id", "gold", "ocr"}` object per line.

use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{OcrPair, PairSet, Prediction, Provenance};
use crate::corpus::Lang;
use crate::io::write_atomic;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{}: schema version {found} is not supported (expected {SCHEMA_VERSION})", path.display())]
    SchemaVersion { path: PathBuf, found: u32 },
    #[error("{}: file is empty (missing header)", path.display())]
    MissingHeader { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetHeader {
    pub schema_version: u32,
    pub engine_id: String,
    pub seed: u64,
    pub config_hash: String,
    pub lang: Lang,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn json_line(w: &mut dyn Write, value: &impl Serialize) -> std::io::Result<()> {
    serde_json::to_writer(&mut *w, value).map_err(std::io::Error::other)?;
    w.write_all(b"\n")
}

/// Writes header then records in pair-set order.
pub fn write_dataset(pairs: &PairSet, path: &Path) -> Result<(), DatasetError> {
    let header = DatasetHeader {
        schema_version: SCHEMA_VERSION,
        engine_id: pairs.provenance.engine_id.clone(),
        seed: pairs.provenance.seed,
        config_hash: pairs.provenance.config_hash.clone(),
        lang: pairs.lang,
    };
    write_atomic(path, |w| {
        json_line(w, &header)?;
        for p in &pairs.pairs {
            json_line(w, p)?;
        }
        Ok(())
    })
    .map_err(io_err(path))
}

#[derive(Deserialize)]
struct VersionProbe {
    schema_version: Option<u32>,
}

pub fn read_dataset(path: &Path) -> Result<PairSet, DatasetError> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    let malformed = |line: usize, message: String| DatasetError::Malformed {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = BufReader::new(file).lines().enumerate();
    let header_line = match lines.next() {
        Some((_, line)) => line.map_err(io_err(path))?,
        None => {
            return Err(DatasetError::MissingHeader {
                path: path.to_path_buf(),
            })
        }
    };
    let probe: VersionProbe =
        serde_json::from_str(&header_line).map_err(|e| malformed(1, format!("bad header: {e}")))?;
    match probe.schema_version {
        Some(SCHEMA_VERSION) => {}
        Some(found) => {
            return Err(DatasetError::SchemaVersion {
                path: path.to_path_buf(),
                found,
            })
        }
        None => return Err(malformed(1, "header lacks schema_version".into())),
    }
    let header: DatasetHeader =
        serde_json::from_str(&header_line).map_err(|e| malformed(1, format!("bad header: {e}")))?;
    let mut pairs = Vec::new();
    for (i, line) in lines {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let pair: OcrPair = serde_json::from_str(&line).map_err(|e| malformed(i + 1, e.to_string()))?;
        pairs.push(pair);
    }
    Ok(PairSet {
        lang: header.lang,
        pairs,
        provenance: Provenance {
            engine_id: header.engine_id,
            config_hash: header.config_hash,
            seed: header.seed,
        },
    })
}

/// `ocr<TAB>gold`, one pair per line, for external trainers.
pub fn write_tsv(pairs: &PairSet, path: &Path) -> Result<(), DatasetError> {
    write_atomic(path, |w| {
        for p in &pairs.pairs {
            writeln!(w, "{}\t{}", p.ocr, p.gold)?;
        }
        Ok(())
    })
    .map_err(io_err(path))
}

pub fn write_predictions(preds: &[Prediction], path: &Path) -> Result<(), DatasetError> {
    write_atomic(path, |w| {
        for p in preds {
            json_line(w, p)?;
        }
        Ok(())
    })
    .map_err(io_err(path))
}

pub fn read_predictions(path: &Path) -> Result<Vec<Prediction>, DatasetError> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    let mut preds = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        preds.push(serde_json::from_str(&line).map_err(|e| DatasetError::Malformed {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(preds)
}
