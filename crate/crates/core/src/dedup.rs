//! Quality-guided deduplication.
//!
//! Images are fingerprinted with a 64-bit DCT perceptual hash and captions
//! with a normalized FNV-1a hash. Samples within Hamming radius `d` are linked
//! and groups are the transitive closure of those links. From each group the
//! member with the best image-text alignment score survives.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::hash::Hasher;
use std::path::Path;

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

use crate::corpus::{ImageBuffer, SampleId};
use crate::error::{Error, Result};
use crate::operators::OperatorId;

pub const MAX_RADIUS: u32 = 16;

const HASH_SIDE: usize = 32;
const LOW_FREQ: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PHash64(pub u64);

impl PHash64 {
    pub fn distance(self, other: PHash64) -> u32 {
        hamming(self.0, other.0)
    }
}

impl fmt::Display for PHash64 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

pub fn hamming(a: u64, b: u64) -> u32 {
    (a ^ b).count_ones()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DedupMode {
    #[default]
    Image,
    Text,
    ImageAndText,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DedupConfig {
    pub radius: u32,
    pub mode: DedupMode,
    pub alignment_column: OperatorId,
}

impl Default for DedupConfig {
    fn default() -> Self {
        DedupConfig {
            radius: 2,
            mode: DedupMode::Image,
            alignment_column: OperatorId::new("clip").expect("valid name"),
        }
    }
}

/// Bilinear resample of a gray plane, sampling at pixel centres.
fn resize_bilinear(src: &[u8], w: usize, h: usize, out_w: usize, out_h: usize) -> Vec<f64> {
    let sample_axis = |i: usize, src_len: usize, dst_len: usize| {
        let pos = (i as f64 + 0.5) * src_len as f64 / dst_len as f64 - 0.5;
        let pos = pos.clamp(0.0, (src_len - 1) as f64);
        let lo = pos.floor() as usize;
        let hi = (lo + 1).min(src_len - 1);
        (lo, hi, pos - lo as f64)
    };
    let mut out = Vec::with_capacity(out_w * out_h);
    for y in 0..out_h {
        let (y0, y1, fy) = sample_axis(y, h, out_h);
        for x in 0..out_w {
            let (x0, x1, fx) = sample_axis(x, w, out_w);
            let p = |xx: usize, yy: usize| f64::from(src[yy * w + xx]);
            let top = p(x0, y0) * (1.0 - fx) + p(x1, y0) * fx;
            let bottom = p(x0, y1) * (1.0 - fx) + p(x1, y1) * fx;
            out.push(top * (1.0 - fy) + bottom * fy);
        }
    }
    out
}

fn cosine_table() -> [[f64; HASH_SIDE]; LOW_FREQ] {
    let mut t = [[0.0; HASH_SIDE]; LOW_FREQ];
    for (u, row) in t.iter_mut().enumerate() {
        for (x, c) in row.iter_mut().enumerate() {
            *c = (std::f64::consts::PI * (2 * x + 1) as f64 * u as f64 / (2 * HASH_SIDE) as f64).cos();
        }
    }
    t
}

/// Lowest 8×8 block of the unnormalized 2-D DCT-II of a 32×32 plane, indexed
/// `[u][v]` with `u` the vertical frequency.
fn low_frequency_dct(plane: &[f64]) -> [[f64; LOW_FREQ]; LOW_FREQ] {
    let cos = cosine_table();
    // rows first: horizontal frequencies v for each image row y
    let mut rows = [[0.0; LOW_FREQ]; HASH_SIDE];
    for (y, out) in rows.iter_mut().enumerate() {
        let line = &plane[y * HASH_SIDE..(y + 1) * HASH_SIDE];
        for (v, o) in out.iter_mut().enumerate() {
            *o = line.iter().zip(&cos[v]).map(|(p, c)| p * c).sum();
        }
    }
    let mut coeffs = [[0.0; LOW_FREQ]; LOW_FREQ];
    for (u, out) in coeffs.iter_mut().enumerate() {
        for (v, o) in out.iter_mut().enumerate() {
            *o = (0..HASH_SIDE).map(|y| rows[y][v] * cos[u][y]).sum();
        }
    }
    coeffs
}

/// Builds the 64-bit hash from the 8×8 coefficient block: bit `8u+v` is set
/// when the coefficient exceeds the lower median, stored MSB-first.
pub(crate) fn hash_from_coefficients(coeffs: &[[f64; LOW_FREQ]; LOW_FREQ]) -> PHash64 {
    // quantize so that analytically-zero coefficients compare equal
    let q: Vec<f64> = coeffs
        .iter()
        .flatten()
        .map(|c| (c * 1e6).round() / 1e6)
        .collect();
    let mut sorted = q.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2 - 1];
    let bits = q.iter().enumerate().fold(0u64, |acc, (k, &c)| {
        if c > median {
            acc | (1u64 << (63 - k))
        } else {
            acc
        }
    });
    PHash64(bits)
}

/// DCT perceptual hash: luminance, bilinear resize to 32×32, 2-D DCT-II, 8×8
/// low-frequency block thresholded at its lower median.
pub fn phash64(image: &ImageBuffer) -> PHash64 {
    let gray = image.luminance();
    let plane = resize_bilinear(&gray, image.width(), image.height(), HASH_SIDE, HASH_SIDE);
    hash_from_coefficients(&low_frequency_dct(&plane))
}

/// Lowercase, trim and collapse whitespace runs.
pub fn normalize_caption(caption: &str) -> String {
    caption
        .split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// FNV-1a 64 over the normalized caption bytes.
pub fn text_hash(caption: &str) -> u64 {
    let mut h = fnv::FnvHasher::default();
    h.write(normalize_caption(caption).as_bytes());
    h.finish()
}

/// Dedup keys for one sample. `phash` is `None` when the image could not be
/// decoded; such samples never join an image-based group.
#[derive(Debug, Clone, PartialEq)]
pub struct HashedSample {
    pub id: SampleId,
    pub phash: Option<PHash64>,
    pub text: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DuplicateGroup {
    pub members: Vec<SampleId>,
}

/// Splits 64 bits into `parts` contiguous chunks whose widths differ by at
/// most one. Returns `(shift, mask)` per chunk.
fn chunk_layout(parts: u32) -> Vec<(u32, u64)> {
    let base = 64 / parts;
    let extra = 64 % parts;
    let mut shift = 0;
    (0..parts)
        .map(|i| {
            let width = base + u32::from(i < extra);
            let mask = if width == 64 { u64::MAX } else { (1u64 << width) - 1 };
            let chunk = (shift, mask);
            shift += width;
            chunk
        })
        .collect()
}

/// Edges `(i, j)`, `i < j`, between hashes within `radius`. Identical hashes
/// are chained rather than fully paired, so the edge set has the same
/// connected components as the full "distance ≤ radius" graph.
///
/// Pigeonhole multi-index lookup: two hashes within distance `d` agree
/// exactly on at least one of `d + 1` disjoint chunks, so only pairs that
/// share a chunk bucket are verified.
pub fn near_pairs(hashes: &[u64], radius: u32) -> Vec<(usize, usize)> {
    // collapse identical hashes so large exact-duplicate buckets stay linear
    let mut unique: Vec<u64> = hashes.to_vec();
    unique.sort_unstable();
    unique.dedup();

    let mut pairs = Vec::new();
    let mut linked = std::collections::HashSet::new();
    for (shift, mask) in chunk_layout(radius + 1) {
        let mut buckets: HashMap<u64, Vec<usize>> = HashMap::new();
        for (i, &h) in unique.iter().enumerate() {
            buckets.entry((h >> shift) & mask).or_default().push(i);
        }
        for bucket in buckets.values() {
            for (a, &i) in bucket.iter().enumerate() {
                for &j in &bucket[a + 1..] {
                    if hamming(unique[i], unique[j]) <= radius && linked.insert((i, j)) {
                        pairs.push((i, j));
                    }
                }
            }
        }
    }

    // expand back to sample indices
    let mut by_hash: HashMap<u64, Vec<usize>> = HashMap::new();
    for (i, &h) in hashes.iter().enumerate() {
        by_hash.entry(h).or_default().push(i);
    }
    let mut out = Vec::new();
    for members in by_hash.values() {
        out.extend(members.windows(2).map(|w| (w[0], w[1])));
    }
    for (a, b) in pairs {
        let (x, y) = (by_hash[&unique[a]][0], by_hash[&unique[b]][0]);
        out.push((x.min(y), x.max(y)));
    }
    out.sort_unstable();
    out
}

/// Partitions samples into duplicate groups.
///
/// Groups are ordered by the input position of their first member, and
/// members keep input order.
pub fn cluster_duplicates(samples: &[HashedSample], config: &DedupConfig) -> Result<Vec<DuplicateGroup>> {
    if config.radius > MAX_RADIUS {
        return Err(Error::invalid(format!(
            "dedup radius {} exceeds {MAX_RADIUS}",
            config.radius
        )));
    }
    if samples.is_empty() {
        return Err(Error::invalid("nothing to deduplicate"));
    }
    let mut uf = UnionFind::<usize>::new(samples.len());

    match config.mode {
        DedupMode::Text => {
            let mut first: HashMap<u64, usize> = HashMap::new();
            for (i, s) in samples.iter().enumerate() {
                let root = *first.entry(s.text).or_insert(i);
                uf.union(root, i);
            }
        }
        DedupMode::Image | DedupMode::ImageAndText => {
            // in conjunctive mode only samples with equal captions can link,
            // so run the image search inside each caption bucket
            let mut partitions: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
            for (i, s) in samples.iter().enumerate() {
                if s.phash.is_some() {
                    let key = if config.mode == DedupMode::ImageAndText { s.text } else { 0 };
                    partitions.entry(key).or_default().push(i);
                }
            }
            for idx in partitions.values() {
                let hashes: Vec<u64> = idx.iter().map(|&i| samples[i].phash.expect("filtered").0).collect();
                for (a, b) in near_pairs(&hashes, config.radius) {
                    uf.union(idx[a], idx[b]);
                }
            }
        }
    }

    let mut groups: Vec<DuplicateGroup> = Vec::new();
    let mut slot: HashMap<usize, usize> = HashMap::new();
    for (i, s) in samples.iter().enumerate() {
        let root = uf.find(i);
        let g = *slot.entry(root).or_insert_with(|| {
            groups.push(DuplicateGroup { members: Vec::new() });
            groups.len() - 1
        });
        groups[g].members.push(s.id.clone());
    }
    Ok(groups)
}

/// Picks one survivor per group: highest alignment score, missing scores
/// last, ties by smallest id.
pub fn retain_best(
    groups: &[DuplicateGroup],
    alignment: &BTreeMap<SampleId, Option<f64>>,
) -> Result<Vec<SampleId>> {
    groups
        .iter()
        .map(|g| {
            g.members
                .iter()
                .max_by(|a, b| {
                    let sa = alignment.get(*a).copied().flatten();
                    let sb = alignment.get(*b).copied().flatten();
                    let by_score = match (sa, sb) {
                        (Some(x), Some(y)) => x.total_cmp(&y),
                        (Some(_), None) => std::cmp::Ordering::Greater,
                        (None, Some(_)) => std::cmp::Ordering::Less,
                        (None, None) => std::cmp::Ordering::Equal,
                    };
                    // smaller id wins a tie, so it must compare as greater
                    by_score.then_with(|| b.cmp(a))
                })
                .cloned()
                .ok_or_else(|| Error::invalid("empty duplicate group"))
        })
        .collect()
}

/// Writes `group_id,member,kept,alignment`, one row per member.
pub fn write_groups_report(
    groups: &[DuplicateGroup],
    kept: &[SampleId],
    alignment: &BTreeMap<SampleId, Option<f64>>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("group_id,member,kept,alignment\n");
    for (g, (group, keep)) in groups.iter().zip(kept).enumerate() {
        for m in &group.members {
            let score = alignment
                .get(m)
                .copied()
                .flatten()
                .map(|s| s.to_string())
                .unwrap_or_default();
            out.push_str(&format!("{g},{m},{},{score}\n", u8::from(m == keep)));
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
