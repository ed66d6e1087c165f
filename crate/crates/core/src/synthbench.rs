//! Synthetic corpora with known ground truth.
//!
//! Each sample gets a latent quality label drawn from the prior. Informative
//! operators score `class mean + N(0, σ)`; uninformative ones ignore the
//! label. Planted duplicate groups share a base image that is perturbed
//! until its perceptual hash stays within the configured radius.
//!
//! All randomness comes from one `SplitMix64` stream seeded by
//! [`SynthConfig::seed`]: state advances by `0x9E3779B97F4A7C15` and outputs
//! are mixed with multipliers `0xBF58476D1CE4E5B9` and `0x94D049BB133111EB`
//! (shifts 30, 27, 31).

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{encode_pnm, DetectionSet, ImageBuffer, Manifest, SampleId, SampleRecord, ScoreTable};
use crate::dedup::phash64;
use crate::error::{Error, Result};
use crate::operators::OperatorId;
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorModel {
    pub name: OperatorId,
    pub informative: bool,
    pub mean_keep: f64,
    pub mean_drop: f64,
    pub noise_std: f64,
    pub missing_rate: f64,
}

impl OperatorModel {
    pub fn new(name: &str, informative: bool, mean_keep: f64, mean_drop: f64, noise_std: f64, missing_rate: f64) -> Self {
        OperatorModel {
            name: OperatorId::new(name).expect("valid operator name"),
            informative,
            mean_keep,
            mean_drop,
            noise_std,
            missing_rate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuplicatePlan {
    pub groups: usize,
    pub min_size: usize,
    pub max_size: usize,
    /// Maximum perceptual-hash distance between a member and its base image.
    pub radius: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n: usize,
    pub prior: f64,
    pub operators: Vec<OperatorModel>,
    pub duplicates: DuplicatePlan,
    pub tiny_clean: usize,
    pub tiny_noisy: usize,
    /// Generate image fixtures (needed for dedup and pixel operators).
    pub images: bool,
    pub seed: u64,
}

impl Default for SynthConfig {
    /// 10 000 samples, five informative and two uninformative operators.
    fn default() -> Self {
        SynthConfig {
            n: 10_000,
            prior: 0.5,
            operators: vec![
                OperatorModel::new("clip", true, 0.30, 0.24, 0.05, 0.0),
                OperatorModel::new("hclip", true, 0.29, 0.24, 0.05, 0.02),
                OperatorModel::new("vclip", true, 0.29, 0.245, 0.05, 0.02),
                OperatorModel::new("icc", true, 0.60, 0.48, 0.15, 0.05),
                OperatorModel::new("language", true, 0.85, 0.73, 0.15, 0.05),
                OperatorModel::new("aesthetic", false, 5.0, 5.0, 1.0, 0.0),
                OperatorModel::new("watermark", false, 0.2, 0.2, 0.1, 0.1),
            ],
            duplicates: DuplicatePlan {
                groups: 200,
                min_size: 2,
                max_size: 4,
                radius: 2,
            },
            tiny_clean: 100,
            tiny_noisy: 100,
            images: true,
            seed: 7,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("synthetic corpus needs n >= 1"));
        }
        if !(self.prior > 0.0 && self.prior < 1.0) {
            return Err(Error::invalid("prior must lie in (0, 1)"));
        }
        for op in &self.operators {
            if !(op.noise_std > 0.0) || !(0.0..1.0).contains(&op.missing_rate) {
                return Err(Error::invalid(format!("bad score model for `{}`", op.name)));
            }
        }
        let d = &self.duplicates;
        if d.groups > 0 && (d.min_size < 2 || d.max_size < d.min_size || d.groups * d.max_size > self.n) {
            return Err(Error::invalid("duplicate plan does not fit the corpus"));
        }
        if self.tiny_clean == 0 || self.tiny_noisy == 0 {
            return Err(Error::invalid("evaluation pools must be non-empty"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroundTruth {
    /// `true` = high quality.
    pub labels: BTreeMap<SampleId, bool>,
    /// Planted duplicate groups; the first member is the base image.
    pub groups: Vec<Vec<SampleId>>,
}

impl GroundTruth {
    pub fn to_csv_string(&self) -> String {
        let mut group_of = BTreeMap::new();
        for (g, members) in self.groups.iter().enumerate() {
            for m in members {
                group_of.insert(m, g);
            }
        }
        let mut out = String::from("sample_id,label,group\n");
        for (id, label) in &self.labels {
            let g = group_of.get(id).map(|g| g.to_string()).unwrap_or_default();
            out.push_str(&format!("{id},{},{g}\n", u8::from(*label)));
        }
        out
    }
}

/// One generated pool: records, scores, detections and (optionally) images.
#[derive(Debug, Clone)]
pub struct SynthPool {
    pub manifest: Manifest,
    pub scores: ScoreTable,
    pub detections: DetectionSet,
    /// `(relative path, image)` for every record with an image.
    pub images: Vec<(String, ImageBuffer)>,
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub corpus: SynthPool,
    pub truth: GroundTruth,
    pub tiny_clean: SynthPool,
    pub tiny_noisy: SynthPool,
}

/// File locations written by [`SynthCorpus::write_to`].
#[derive(Debug, Clone, PartialEq)]
pub struct SynthLayout {
    pub manifest: PathBuf,
    pub scores: PathBuf,
    pub detections: PathBuf,
    pub truth: PathBuf,
    pub tiny_clean: PathBuf,
    pub tiny_noisy: PathBuf,
    pub tiny_scores: PathBuf,
    pub tiny_detections: PathBuf,
}

impl SynthLayout {
    pub fn in_dir(dir: &Path) -> Self {
        SynthLayout {
            manifest: dir.join("manifest.jsonl"),
            scores: dir.join("scores.csv"),
            detections: dir.join("detections.jsonl"),
            truth: dir.join("truth.csv"),
            tiny_clean: dir.join("tiny_clean.jsonl"),
            tiny_noisy: dir.join("tiny_noisy.jsonl"),
            tiny_scores: dir.join("tiny_scores.csv"),
            tiny_detections: dir.join("tiny_detections.jsonl"),
        }
    }
}

const ADJECTIVES: &[&str] = &["red", "small", "old", "bright", "wooden", "striped", "quiet", "shiny", "tall", "green"];
const NOUNS: &[&str] = &["dog", "bicycle", "teapot", "house", "boat", "guitar", "tree", "car", "lamp", "cat"];
const PLACES: &[&str] = &["on a beach", "in a kitchen", "near a river", "at night", "in the snow", "on a table"];

fn caption(rng: &mut SplitMix64, tag: &str) -> String {
    format!(
        "a {} {} {} ({tag})",
        ADJECTIVES.choose(rng).expect("non-empty"),
        NOUNS.choose(rng).expect("non-empty"),
        PLACES.choose(rng).expect("non-empty"),
    )
}

/// Smooth random pattern: a 6×6 lattice of gray levels, bilinearly
/// interpolated, plus a little pixel noise.
fn base_image(rng: &mut SplitMix64) -> ImageBuffer {
    const LATTICE: usize = 6;
    let w = rng.random_range(24..=64usize);
    let h = rng.random_range(24..=64usize);
    let lattice: Vec<f64> = (0..LATTICE * LATTICE).map(|_| rng.random_range(0.0..255.0)).collect();
    let mut px = Vec::with_capacity(w * h);
    for y in 0..h {
        let gy = y as f64 / (h - 1) as f64 * (LATTICE - 1) as f64;
        let (y0, fy) = (gy.floor() as usize, gy.fract());
        let y1 = (y0 + 1).min(LATTICE - 1);
        for x in 0..w {
            let gx = x as f64 / (w - 1) as f64 * (LATTICE - 1) as f64;
            let (x0, fx) = (gx.floor() as usize, gx.fract());
            let x1 = (x0 + 1).min(LATTICE - 1);
            let l = |xx: usize, yy: usize| lattice[yy * LATTICE + xx];
            let v = (l(x0, y0) * (1.0 - fx) + l(x1, y0) * fx) * (1.0 - fy)
                + (l(x0, y1) * (1.0 - fx) + l(x1, y1) * fx) * fy;
            let noise = rng.random_range(-6.0..6.0);
            px.push((v + noise).round().clamp(0.0, 255.0) as u8);
        }
    }
    ImageBuffer::new(w, h, 1, px).expect("consistent dimensions")
}

/// Copy of `base` with a few pixels nudged, hash-distance at most `radius`.
fn near_duplicate(rng: &mut SplitMix64, base: &ImageBuffer, radius: u32) -> ImageBuffer {
    let base_hash = phash64(base);
    for _ in 0..16 {
        let mut px = base.pixels().to_vec();
        for _ in 0..rng.random_range(1..=4) {
            let i = rng.random_range(0..px.len());
            let delta: i16 = rng.random_range(-12..=12);
            px[i] = (i16::from(px[i]) + delta).clamp(0, 255) as u8;
        }
        let img = ImageBuffer::new(base.width(), base.height(), 1, px).expect("same shape");
        if phash64(&img).distance(base_hash) <= radius {
            return img;
        }
    }
    base.clone()
}

fn score_row(rng: &mut SplitMix64, models: &[OperatorModel], label: bool) -> Vec<Option<f64>> {
    models
        .iter()
        .map(|m| {
            let mean = if !m.informative {
                (m.mean_keep + m.mean_drop) / 2.0
            } else if label {
                m.mean_keep
            } else {
                m.mean_drop
            };
            let v = mean + Normal::new(0.0, m.noise_std).expect("positive std").sample(rng);
            // draw both numbers unconditionally so the stream does not depend on missingness
            let missing = rng.random_bool(m.missing_rate);
            (!missing).then_some(v)
        })
        .collect()
}

fn detections_for(rng: &mut SplitMix64, label: bool) -> Vec<f64> {
    let count = rng.random_range(0..=if label { 5 } else { 2 });
    let hi = if label { 1.0 } else { 0.3 };
    (0..count)
        .map(|_| (rng.random_range(0.0..hi) * 1000.0f64).round() / 1000.0)
        .collect()
}

struct PoolBuilder<'a> {
    config: &'a SynthConfig,
    records: Vec<SampleRecord>,
    rows: Vec<Vec<Option<f64>>>,
    detections: DetectionSet,
    images: Vec<(String, ImageBuffer)>,
}

impl<'a> PoolBuilder<'a> {
    fn new(config: &'a SynthConfig) -> Self {
        PoolBuilder {
            config,
            records: Vec::new(),
            rows: Vec::new(),
            detections: DetectionSet::new(),
            images: Vec::new(),
        }
    }

    fn push(&mut self, rng: &mut SplitMix64, id: SampleId, label: bool, caption: String, image: Option<ImageBuffer>) {
        let path = match image {
            Some(img) => {
                let rel = format!("images/{id}.pgm");
                self.images.push((rel.clone(), img));
                rel
            }
            None => String::new(),
        };
        self.rows.push(score_row(rng, &self.config.operators, label));
        let dets = detections_for(rng, label);
        if !dets.is_empty() {
            self.detections.insert(id.clone(), dets).expect("confidences in range");
        }
        self.records.push(SampleRecord::new(id, path, caption));
    }

    fn finish(self) -> Result<SynthPool> {
        let manifest = Manifest::new(self.records)?;
        let m = self.config.operators.len();
        let ids: Vec<SampleId> = manifest.ids().cloned().collect();
        let cells = self.rows.into_iter().flatten().collect::<Vec<_>>();
        debug_assert_eq!(cells.len(), ids.len() * m);
        let ops = self.config.operators.iter().map(|o| o.name.clone()).collect();
        Ok(SynthPool {
            manifest,
            scores: ScoreTable::new(ids, ops, cells)?,
            detections: self.detections,
            images: self.images,
        })
    }
}

fn sid(s: String) -> SampleId {
    SampleId::new(s).expect("generated ids are valid")
}

/// Generates a corpus, its ground truth, and clean/noisy evaluation pools.
pub fn generate(config: &SynthConfig) -> Result<SynthCorpus> {
    config.validate()?;
    let mut rng = SplitMix64::seed_from_u64(config.seed);
    let n = config.n;

    let labels: Vec<bool> = (0..n).map(|_| rng.random_bool(config.prior)).collect();

    // planted groups over a random subset of slots; slot order is the base first
    let mut slots: Vec<usize> = (0..n).collect();
    slots.shuffle(&mut rng);
    let mut base_of = vec![None; n];
    let mut groups_idx: Vec<Vec<usize>> = Vec::with_capacity(config.duplicates.groups);
    let mut cursor = 0;
    for _ in 0..config.duplicates.groups {
        let size = rng.random_range(config.duplicates.min_size..=config.duplicates.max_size);
        let mut members = slots[cursor..cursor + size].to_vec();
        members.sort_unstable();
        cursor += size;
        for &m in &members[1..] {
            base_of[m] = Some(members[0]);
        }
        groups_idx.push(members);
    }

    let ids: Vec<SampleId> = (0..n).map(|i| sid(format!("s{i:06}"))).collect();
    let mut captions: Vec<String> = Vec::with_capacity(n);
    let mut images: Vec<Option<ImageBuffer>> = Vec::with_capacity(n);
    for i in 0..n {
        match base_of[i] {
            // bases always precede their members
            Some(b) => {
                captions.push(captions[b].clone());
                let img = images[b]
                    .as_ref()
                    .map(|base| near_duplicate(&mut rng, base, config.duplicates.radius));
                images.push(img);
            }
            None => {
                captions.push(caption(&mut rng, &i.to_string()));
                images.push(config.images.then(|| base_image(&mut rng)));
            }
        }
    }

    let mut pool = PoolBuilder::new(config);
    for (i, (img, cap)) in images.into_iter().zip(captions).enumerate() {
        pool.push(&mut rng, ids[i].clone(), labels[i], cap, img);
    }
    let corpus = pool.finish()?;

    let mut tiny = |prefix: &str, count: usize, label: bool| -> Result<SynthPool> {
        let mut p = PoolBuilder::new(config);
        for i in 0..count {
            let id = sid(format!("{prefix}{i:04}"));
            let cap = caption(&mut rng, id.as_str());
            let img = config.images.then(|| base_image(&mut rng));
            p.push(&mut rng, id, label, cap, img);
        }
        p.finish()
    };
    let tiny_clean = tiny("tc", config.tiny_clean, true)?;
    let tiny_noisy = tiny("tn", config.tiny_noisy, false)?;

    let truth = GroundTruth {
        labels: ids.iter().cloned().zip(labels).collect(),
        groups: groups_idx
            .into_iter()
            .map(|g| g.into_iter().map(|i| ids[i].clone()).collect())
            .collect(),
    };
    Ok(SynthCorpus {
        corpus,
        truth,
        tiny_clean,
        tiny_noisy,
    })
}

fn manifest_bytes(m: &Manifest) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for s in m.samples() {
        serde_json::to_writer(&mut out, s)?;
        out.push(b'\n');
    }
    Ok(out)
}

fn write_pool_images(dir: &Path, pool: &SynthPool) -> Result<()> {
    for (rel, img) in &pool.images {
        let p = dir.join(rel);
        std::fs::write(&p, encode_pnm(img)).map_err(|e| Error::io(&p, e))?;
    }
    Ok(())
}

impl SynthCorpus {
    /// SHA-256 over manifests, score tables, truth and image bytes.
    pub fn digest(&self) -> Result<String> {
        let mut h = Sha256::new();
        for pool in [&self.corpus, &self.tiny_clean, &self.tiny_noisy] {
            h.update(manifest_bytes(&pool.manifest)?);
            h.update(pool.scores.to_csv_string());
            for (rel, img) in &pool.images {
                h.update(rel.as_bytes());
                h.update(encode_pnm(img));
            }
        }
        h.update(self.truth.to_csv_string());
        Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
    }

    /// Evaluation-pool scores in one table (clean rows then noisy rows).
    pub fn tiny_scores(&self) -> Result<ScoreTable> {
        let ops = self.tiny_clean.scores.operator_ids().to_vec();
        let mut ids = self.tiny_clean.scores.sample_ids().to_vec();
        ids.extend_from_slice(self.tiny_noisy.scores.sample_ids());
        let mut cells = Vec::with_capacity(ids.len() * ops.len());
        for pool in [&self.tiny_clean, &self.tiny_noisy] {
            let t = &pool.scores;
            for r in 0..t.n_samples() {
                cells.extend((0..t.n_operators()).map(|c| t.get(r, c)));
            }
        }
        ScoreTable::new(ids, ops, cells)
    }

    pub fn tiny_detections(&self) -> DetectionSet {
        let mut d = DetectionSet::new();
        for pool in [&self.tiny_clean, &self.tiny_noisy] {
            for id in pool.manifest.ids() {
                let c = pool.detections.get(id.as_str());
                if !c.is_empty() {
                    d.insert(id.clone(), c.to_vec()).expect("validated");
                }
            }
        }
        d
    }

    /// Writes every file the pipeline ingests, plus `truth.csv`.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<SynthLayout> {
        let dir = dir.as_ref();
        let images = dir.join("images");
        std::fs::create_dir_all(&images).map_err(|e| Error::io(&images, e))?;
        let layout = SynthLayout::in_dir(dir);

        self.corpus.manifest.write_jsonl(&layout.manifest)?;
        self.corpus.scores.write_csv(&layout.scores)?;
        self.corpus.detections.write_jsonl(&layout.detections)?;
        std::fs::write(&layout.truth, self.truth.to_csv_string()).map_err(|e| Error::io(&layout.truth, e))?;
        self.tiny_clean.manifest.write_jsonl(&layout.tiny_clean)?;
        self.tiny_noisy.manifest.write_jsonl(&layout.tiny_noisy)?;
        self.tiny_scores()?.write_csv(&layout.tiny_scores)?;
        self.tiny_detections().write_jsonl(&layout.tiny_detections)?;
        for pool in [&self.corpus, &self.tiny_clean, &self.tiny_noisy] {
            write_pool_images(dir, pool)?;
        }
        Ok(layout)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    /// Fraction of kept samples that are truly high quality.
    pub precision: f64,
    /// Fraction of all high-quality samples (within `truth`) that were kept.
    pub recall: f64,
    /// AUC of the supplied posterior scores against the latent labels.
    pub auc: Option<f64>,
}

/// Scores a kept set (and optionally the posteriors behind it) against the
/// latent labels.
pub fn evaluate(
    kept: &[SampleId],
    truth: &GroundTruth,
    posteriors: Option<&BTreeMap<SampleId, f64>>,
) -> Result<EvalMetrics> {
    if kept.is_empty() {
        return Err(Error::invalid("cannot evaluate an empty kept set"));
    }
    let mut seen = HashSet::new();
    let mut true_pos = 0usize;
    for id in kept {
        let label = truth
            .labels
            .get(id)
            .ok_or_else(|| Error::UnknownSample(id.to_string()))?;
        if seen.insert(id) && *label {
            true_pos += 1;
        }
    }
    let positives = truth.labels.values().filter(|l| **l).count();
    let auc = match posteriors {
        Some(p) => {
            let mut scores = Vec::with_capacity(p.len());
            let mut labels = Vec::with_capacity(p.len());
            for (id, s) in p {
                let l = truth
                    .labels
                    .get(id)
                    .ok_or_else(|| Error::UnknownSample(id.to_string()))?;
                scores.push(*s);
                labels.push(*l);
            }
            stats::auc(&scores, &labels)
        }
        None => None,
    };
    Ok(EvalMetrics {
        precision: true_pos as f64 / seen.len() as f64,
        recall: if positives == 0 { 0.0 } else { true_pos as f64 / positives as f64 },
        auc,
    })
}

/// AUC of one raw operator column against the latent labels, over the
/// samples where the operator has a score.
pub fn operator_auc(scores: &ScoreTable, operator: &str, truth: &GroundTruth) -> Option<f64> {
    let col = scores.column(operator)?;
    let (mut s, mut l) = (Vec::new(), Vec::new());
    for (id, v) in scores.sample_ids().iter().zip(col) {
        if let (Some(v), Some(label)) = (v, truth.labels.get(id)) {
            s.push(v);
            l.push(*label);
        }
    }
    stats::auc(&s, &l)
}
