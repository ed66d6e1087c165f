//! Per-sample quality operators.
//!
//! `blurry`, `geometry` and `gdino` are computed here from pixels and detector
//! output. Every other operator (CLIP, flipped CLIP, ICC, language ID, or any
//! user-defined column) is read from the ingested score table.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{decode_image, DetectionSet, ImageBuffer, Manifest, ScoreTable};
use crate::error::{Error, Result};

pub const BLURRY: &str = "blurry";
pub const GEOMETRY: &str = "geometry";
pub const GDINO: &str = "gdino";

/// Default detector confidence threshold.
pub const DEFAULT_GDINO_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct OperatorId(String);

impl OperatorId {
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        if name.is_empty() || name.contains(|c: char| c.is_whitespace() || c == ',') {
            return Err(Error::invalid(format!("invalid operator name `{name}`")));
        }
        Ok(OperatorId(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Whether the operator is computed natively rather than ingested.
    pub fn is_native(&self) -> bool {
        matches!(self.0.as_str(), BLURRY | GEOMETRY | GDINO)
    }
}

impl TryFrom<String> for OperatorId {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        OperatorId::new(value)
    }
}

impl From<OperatorId> for String {
    fn from(id: OperatorId) -> String {
        id.0
    }
}

impl fmt::Display for OperatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct GdinoThreshold(f64);

impl GdinoThreshold {
    pub fn new(t: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&t) {
            return Err(Error::invalid(format!("gdino threshold {t} outside [0, 1)")));
        }
        Ok(GdinoThreshold(t))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for GdinoThreshold {
    fn default() -> Self {
        GdinoThreshold(DEFAULT_GDINO_THRESHOLD)
    }
}

impl TryFrom<f64> for GdinoThreshold {
    type Error = Error;

    fn try_from(t: f64) -> Result<Self> {
        GdinoThreshold::new(t)
    }
}

impl From<GdinoThreshold> for f64 {
    fn from(t: GdinoThreshold) -> f64 {
        t.0
    }
}

/// Which operators to score, in output column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OperatorConfig {
    pub selection: Vec<OperatorId>,
    pub gdino_threshold: GdinoThreshold,
}

impl Default for OperatorConfig {
    fn default() -> Self {
        let selection = [BLURRY, GEOMETRY, "language", "icc", "clip", "hclip", "vclip", GDINO]
            .into_iter()
            .map(|s| OperatorId(s.to_string()))
            .collect();
        OperatorConfig {
            selection,
            gdino_threshold: GdinoThreshold::default(),
        }
    }
}

/// Variance of the 4-neighbour Laplacian response over interior pixels.
pub fn blur_score(image: &ImageBuffer) -> f64 {
    let (w, h) = (image.width(), image.height());
    if w < 3 || h < 3 {
        return 0.0;
    }
    let gray = image.luminance();
    let px = |x: usize, y: usize| i32::from(gray[y * w + x]);
    let mut responses = Vec::with_capacity((w - 2) * (h - 2));
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let lap = px(x - 1, y) + px(x + 1, y) + px(x, y - 1) + px(x, y + 1) - 4 * px(x, y);
            responses.push(f64::from(lap));
        }
    }
    let n = responses.len() as f64;
    let mean = responses.iter().sum::<f64>() / n;
    responses.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n
}

/// Symmetric aspect ratio `min(w/h, h/w)`; 1 for square images.
pub fn geometry_score(width: usize, height: usize) -> Result<f64> {
    if width == 0 || height == 0 {
        return Err(Error::invalid(format!("zero image dimension {width}x{height}")));
    }
    let (w, h) = (width as f64, height as f64);
    Ok((w / h).min(h / w))
}

/// Number of detections with confidence strictly above the threshold.
pub fn gdino_count(confidences: &[f64], threshold: GdinoThreshold) -> Result<usize> {
    if let Some(c) = confidences.iter().find(|c| !(0.0..=1.0).contains(*c)) {
        return Err(Error::invalid(format!("confidence {c} outside [0, 1]")));
    }
    Ok(confidences.iter().filter(|&&c| c > threshold.value()).count())
}

/// Builds the working score table: one column per selected operator, in
/// selection order, rows in manifest order.
///
/// Image-based columns are missing for samples whose image is absent or fails
/// to decode.
pub fn assemble_scores(
    manifest: &Manifest,
    ingested: &ScoreTable,
    detections: &DetectionSet,
    config: &OperatorConfig,
) -> Result<ScoreTable> {
    for op in &config.selection {
        if !op.is_native() && ingested.operator_index(op.as_str()).is_none() {
            return Err(Error::UnknownOperator(op.to_string()));
        }
    }
    let needs_pixels = config
        .selection
        .iter()
        .any(|op| matches!(op.as_str(), BLURRY | GEOMETRY));

    // (blur, geometry) per sample; None when there is no decodable image
    let image_scores: Vec<Option<(f64, f64)>> = if needs_pixels {
        manifest
            .samples()
            .par_iter()
            .map(|rec| {
                let path = manifest.image_location(rec)?;
                let img = decode_image(path).ok()?;
                let geom = geometry_score(img.width(), img.height()).ok()?;
                Some((blur_score(&img), geom))
            })
            .collect()
    } else {
        vec![None; manifest.len()]
    };

    let mut columns = Vec::with_capacity(config.selection.len());
    for op in &config.selection {
        let col: Vec<Option<f64>> = match op.as_str() {
            BLURRY => image_scores.iter().map(|s| s.map(|s| s.0)).collect(),
            GEOMETRY => image_scores.iter().map(|s| s.map(|s| s.1)).collect(),
            GDINO => manifest
                .samples()
                .iter()
                .map(|rec| {
                    gdino_count(detections.get(rec.id.as_str()), config.gdino_threshold)
                        .map(|c| Some(c as f64))
                })
                .collect::<Result<_>>()?,
            name => {
                let c = ingested.operator_index(name).expect("checked above");
                manifest
                    .ids()
                    .map(|id| ingested.row_of(id.as_str()).and_then(|r| ingested.get(r, c)))
                    .collect()
            }
        };
        columns.push((op.clone(), col));
    }
    ScoreTable::from_columns(manifest.ids().cloned().collect(), columns)
}
