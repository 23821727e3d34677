//! Dataset manifests: one JSON record per line with the fields
//! `path`, `label`, `device`, `speaker`, `environment`, `split`.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ground-truth class of a clip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Genuine,
    Replayed,
}

impl Label {
    /// Class index used by the network head: genuine = 0, replayed = 1.
    pub fn class_index(self) -> usize {
        match self {
            Label::Genuine => 0,
            Label::Replayed => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Genuine => "genuine",
            Label::Replayed => "replayed",
        }
    }
}

/// Dataset partition a clip belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Eval,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Eval => "eval",
        }
    }
}

/// One manifest row. `path` is relative to the manifest file location.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: String,
    pub label: Label,
    pub device: String,
    pub speaker: String,
    pub environment: String,
    pub split: Split,
}

/// Parse a line-delimited manifest file.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let path = path.as_ref();
    let file = fs::File::open(path)?;
    let mut entries = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: ManifestEntry = serde_json::from_str(&line).map_err(|e| {
            Error::Parse(format!(
                "{}:{}: bad manifest record: {e}",
                path.display(),
                lineno + 1
            ))
        })?;
        entries.push(entry);
    }
    if entries.is_empty() {
        return Err(Error::InvalidInput(format!(
            "manifest {} has no records",
            path.display()
        )));
    }
    Ok(entries)
}

/// Write entries as line-delimited JSON.
pub fn write_manifest(path: impl AsRef<Path>, entries: &[ManifestEntry]) -> Result<()> {
    let mut out = fs::File::create(path)?;
    for entry in entries {
        let line = serde_json::to_string(entry)
            .map_err(|e| Error::Parse(format!("manifest serialization: {e}")))?;
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Load the clip backing a manifest entry, resolving `path` against the
/// manifest's directory and attaching the entry's metadata.
pub fn load_entry(manifest_dir: &Path, entry: &ManifestEntry) -> Result<super::AudioClip> {
    let mut clip = super::load_wav(manifest_dir.join(&entry.path))?;
    clip.label = Some(entry.label);
    clip.device_id = entry.device.clone();
    clip.speaker_id = entry.speaker.clone();
    Ok(clip)
}
