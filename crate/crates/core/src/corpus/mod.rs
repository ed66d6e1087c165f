//! Sample records, manifests and the on-disk formats the pipeline reads and writes.
//!
//! Manifests are JSONL (`id`, `image_path`, `caption`, optional `meta`), score
//! tables are CSV with a `sample_id` header column and blank cells for missing
//! values, and detections are JSONL (`id`, `confidences`).

mod image;
mod scores;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use self::image::{decode_image, encode_pnm, ImageBuffer};
pub use self::scores::{load_detections, load_score_table, DetectionSet, ScoreTable};

/// Identifier of one image-text pair. Non-empty, no whitespace.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SampleId(String);

impl SampleId {
    pub fn new(value: impl Into<String>) -> Result<Self> {
        let value = value.into();
        if value.is_empty() || value.chars().any(char::is_whitespace) {
            return Err(Error::InvalidId(value));
        }
        Ok(SampleId(value))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for SampleId {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        SampleId::new(value)
    }
}

impl From<SampleId> for String {
    fn from(id: SampleId) -> String {
        id.0
    }
}

impl fmt::Display for SampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::borrow::Borrow<str> for SampleId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: SampleId,
    #[serde(default)]
    pub image_path: String,
    #[serde(default)]
    pub caption: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, String>,
}

impl SampleRecord {
    pub fn new(id: SampleId, image_path: impl Into<String>, caption: impl Into<String>) -> Self {
        SampleRecord {
            id,
            image_path: image_path.into(),
            caption: caption.into(),
            meta: BTreeMap::new(),
        }
    }
}

/// Ordered collection of samples with pairwise-distinct ids.
///
/// `root` is the directory relative image paths are resolved against; it is
/// the manifest file's parent directory when loaded from disk.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    samples: Vec<SampleRecord>,
    root: PathBuf,
}

impl Manifest {
    pub fn new(samples: Vec<SampleRecord>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(samples.len());
        for s in &samples {
            if !seen.insert(s.id.as_str()) {
                return Err(Error::DuplicateId(s.id.to_string()));
            }
        }
        Ok(Manifest {
            samples,
            root: PathBuf::new(),
        })
    }

    pub fn with_root(mut self, root: impl Into<PathBuf>) -> Self {
        self.root = root.into();
        self
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn samples(&self) -> &[SampleRecord] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &SampleId> {
        self.samples.iter().map(|s| &s.id)
    }

    pub fn get(&self, id: &str) -> Option<&SampleRecord> {
        self.samples.iter().find(|s| s.id.as_str() == id)
    }

    /// Absolute (or root-relative) location of a sample's image, `None` when
    /// the record has no image reference.
    pub fn image_location(&self, record: &SampleRecord) -> Option<PathBuf> {
        if record.image_path.is_empty() {
            return None;
        }
        let p = Path::new(&record.image_path);
        Some(if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        })
    }

    /// Keeps only the samples whose ids are in `keep`, preserving load order.
    pub fn retain_ids(&self, keep: &HashSet<&str>) -> Manifest {
        Manifest {
            samples: self
                .samples
                .iter()
                .filter(|s| keep.contains(s.id.as_str()))
                .cloned()
                .collect(),
            root: self.root.clone(),
        }
    }

    pub fn write_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for s in &self.samples {
            serde_json::to_writer(&mut w, s)?;
            w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Reads a JSONL manifest. Blank lines are skipped.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut samples = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: SampleRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        samples.push(record);
    }
    let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Manifest::new(samples)?.with_root(root))
}

/// Orders `(id, score)` pairs by descending score, ids ascending on ties.
pub fn rank_by_score<'a>(scores: impl IntoIterator<Item = (&'a SampleId, f64)>) -> Vec<(&'a SampleId, f64)> {
    let mut ranked: Vec<_> = scores.into_iter().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked
}

/// Writes the curated subset as `sample_id,quality_score`, best first.
pub fn write_subset(
    manifest: &Manifest,
    kept: &[SampleId],
    scores: &BTreeMap<SampleId, f64>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let known: HashSet<&str> = manifest.ids().map(SampleId::as_str).collect();
    let mut rows = Vec::with_capacity(kept.len());
    for id in kept {
        if !known.contains(id.as_str()) {
            return Err(Error::UnknownSample(id.to_string()));
        }
        let score = scores
            .get(id)
            .copied()
            .ok_or_else(|| Error::invalid(format!("no quality score for kept sample `{id}`")))?;
        rows.push((id, score));
    }
    let ranked = rank_by_score(rows);

    let mut w = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::invalid(format!("{other:?}")),
    })?;
    w.write_record(["sample_id", "quality_score"])?;
    for (id, score) in ranked {
        w.write_record([id.as_str(), &score.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Writes one id per line, sorted ascending.
pub fn write_id_list(ids: &[SampleId], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut sorted: Vec<&SampleId> = ids.iter().collect();
    sorted.sort();
    let mut out = String::new();
    for id in sorted {
        out.push_str(id.as_str());
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_id_list(path: impl AsRef<Path>) -> Result<Vec<SampleId>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| SampleId::new(l.trim()))
        .collect()
}
