//! End-to-end curation: dedup, scoring, candidate generation, search, final
//! fit, top-fraction selection and reporting.
//!
//! Every stage reads its inputs from the config and from files written by
//! earlier stages into the output directory, so each one can be re-run on
//! its own:
//!
//! | stage    | writes |
//! |----------|--------|
//! | `dedup`  | `dedup_groups.csv`, `kept_ids.txt` |
//! | `score`  | `scores_assembled.csv` |
//! | `lf-gen` | `candidates.json` |
//! | `search` | `tiny_manifest.jsonl`, `tiny_labels.csv`, `tiny_scores_assembled.csv`, `search_ranking.csv`, `search_best.json` |
//! | `fit`    | `params.json`, `label_matrix.csv`, `quality_scores.csv`, `curated.csv` |
//! | `report` | `report.csv`, `report.json` |

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    decode_image, load_detections, load_manifest, load_score_table, read_id_list, write_id_list, write_subset,
    DetectionSet, Manifest, SampleId, ScoreTable,
};
use crate::dedup::{cluster_duplicates, phash64, retain_best, text_hash, write_groups_report, DedupConfig, DedupMode, DuplicateGroup, HashedSample};
use crate::error::{Error, Result};
use crate::labelmodel::{fit, lf_weights, score_all, FitConfig, FittedModel, LabelModelParams};
use crate::operators::{assemble_scores, OperatorConfig, OperatorId};
use crate::search::{build_tiny_eval, search, CompositeWeights, SearchConfig, SearchOutcome, SearchRecord, SearchStrategy, TinyEval};
use crate::synthbench::SynthLayout;
use crate::weaklabel::{build_matrix, diagnostics, generate_candidates, Diagnostics, LabelMatrix, LfCandidateGrid, LfSpec};

pub const DEFAULT_KEEP_FRACTION: f64 = 0.40;

pub const STAGE_DEDUP: &str = "dedup";
pub const STAGE_SCORE: &str = "score";
pub const STAGE_LF_GEN: &str = "lf-gen";
pub const STAGE_SEARCH: &str = "search";
pub const STAGE_FIT: &str = "fit";
pub const STAGE_REPORT: &str = "report";

pub const DEDUP_GROUPS_FILE: &str = "dedup_groups.csv";
pub const KEPT_IDS_FILE: &str = "kept_ids.txt";
pub const SCORES_FILE: &str = "scores_assembled.csv";
pub const CANDIDATES_FILE: &str = "candidates.json";
pub const TINY_MANIFEST_FILE: &str = "tiny_manifest.jsonl";
pub const TINY_LABELS_FILE: &str = "tiny_labels.csv";
pub const TINY_SCORES_FILE: &str = "tiny_scores_assembled.csv";
pub const RANKING_FILE: &str = "search_ranking.csv";
pub const BEST_FILE: &str = "search_best.json";
pub const PARAMS_FILE: &str = "params.json";
pub const MATRIX_FILE: &str = "label_matrix.csv";
pub const QUALITY_FILE: &str = "quality_scores.csv";
pub const CURATED_FILE: &str = "curated.csv";
pub const REPORT_CSV_FILE: &str = "report.csv";
pub const REPORT_JSON_FILE: &str = "report.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CandidateSettings {
    /// Top-K percentages used as boundary centres.
    pub topk_grid: Vec<u32>,
    /// Half-widths as fractions of each operator's standard deviation.
    pub beta_fractions: Vec<f64>,
}

impl Default for CandidateSettings {
    fn default() -> Self {
        CandidateSettings {
            topk_grid: vec![20, 30, 40, 50, 60, 70, 80],
            beta_fractions: vec![0.0, 0.25, 0.5],
        }
    }
}

/// Clean and noisy pools for the labeled evaluation set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TinySettings {
    pub clean: PathBuf,
    pub noisy: PathBuf,
    /// Ingested scores for both pools.
    pub scores: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detections: Option<PathBuf>,
    pub swap_fraction: f64,
}

impl Default for TinySettings {
    fn default() -> Self {
        TinySettings {
            clean: PathBuf::new(),
            noisy: PathBuf::new(),
            scores: PathBuf::new(),
            detections: None,
            swap_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurationConfig {
    pub manifest: PathBuf,
    pub scores: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detections: Option<PathBuf>,
    pub keep_fraction: f64,
    /// Copied into the search, fit and evaluation-set seeds.
    pub seed: u64,
    pub dedup: DedupConfig,
    pub operators: OperatorConfig,
    pub candidates: CandidateSettings,
    pub composite: CompositeWeights,
    pub fit: FitConfig,
    pub search: SearchConfig,
    pub tiny: TinySettings,
}

impl Default for CurationConfig {
    fn default() -> Self {
        CurationConfig {
            manifest: PathBuf::new(),
            scores: PathBuf::new(),
            detections: None,
            keep_fraction: DEFAULT_KEEP_FRACTION,
            seed: 0,
            dedup: DedupConfig::default(),
            operators: OperatorConfig::default(),
            candidates: CandidateSettings::default(),
            composite: CompositeWeights::default(),
            fit: FitConfig::default(),
            search: SearchConfig::default(),
            tiny: TinySettings::default(),
        }
    }
}

impl CurationConfig {
    /// Reads a TOML config. Relative paths are resolved against the config
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: CurationConfig = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e
                .span()
                .map(|s| text[..s.start].lines().count().max(1))
                .unwrap_or(0),
            message: e.message().to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.resolve_paths(base);
        config.set_seed(config.seed);
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::invalid(format!("cannot serialize config: {e}")))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_toml_string()?).map_err(|e| Error::io(path, e))
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.search.seed = seed;
        self.fit.seed = seed;
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.keep_fraction > 0.0 && self.keep_fraction <= 1.0) {
            return Err(Error::invalid(format!("keep_fraction {} outside (0, 1]", self.keep_fraction)));
        }
        if self.operators.selection.is_empty() {
            return Err(Error::invalid("operator selection is empty"));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = self.operators.selection.iter().find(|op| !seen.insert(*op)) {
            return Err(Error::invalid(format!("operator `{dup}` selected twice")));
        }
        self.composite.validate()?;
        self.fit.validate()?;
        Ok(())
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if !p.as_os_str().is_empty() && p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.manifest);
        fix(&mut self.scores);
        fix(&mut self.tiny.clean);
        fix(&mut self.tiny.noisy);
        fix(&mut self.tiny.scores);
        self.detections.iter_mut().for_each(fix);
        self.tiny.detections.iter_mut().for_each(fix);
    }

    /// Config for a corpus written by the synthetic generator, with paths
    /// relative to the corpus directory. Searches 256 random combinations
    /// over every generated operator plus the native ones, with boundary
    /// centres restricted to the 40-60% band.
    pub fn for_synth(layout: &SynthLayout, operators: &[OperatorId], seed: u64) -> Self {
        let name = |p: &Path| PathBuf::from(p.file_name().expect("layout paths are files"));
        let mut selection: Vec<OperatorId> = ["blurry", "geometry", "gdino"]
            .iter()
            .map(|s| OperatorId::new(*s).expect("valid"))
            .collect();
        selection.extend(operators.iter().cloned());
        let mut config = CurationConfig {
            manifest: name(&layout.manifest),
            scores: name(&layout.scores),
            detections: Some(name(&layout.detections)),
            operators: OperatorConfig {
                selection,
                ..OperatorConfig::default()
            },
            candidates: CandidateSettings {
                topk_grid: vec![40, 50, 60],
                ..CandidateSettings::default()
            },
            search: SearchConfig {
                strategy: SearchStrategy::Random,
                budget: 256,
                ..SearchConfig::default()
            },
            tiny: TinySettings {
                clean: name(&layout.tiny_clean),
                noisy: name(&layout.tiny_noisy),
                scores: name(&layout.tiny_scores),
                detections: Some(name(&layout.tiny_detections)),
                swap_fraction: 0.5,
            },
            ..CurationConfig::default()
        };
        config.set_seed(seed);
        config
    }
}

/// `ceil(q * n)`, computed so that products like `0.4 * 10` land on 4.
pub fn keep_count(n: usize, q: f64) -> usize {
    let exact = q * n as f64;
    let nearest = exact.round();
    let k = if (exact - nearest).abs() < 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        exact.ceil()
    };
    (k as usize).min(n)
}

/// The `ceil(q * n)` highest-scoring ids, best first, ties by id.
pub fn select_top_fraction(scores: &BTreeMap<SampleId, f64>, q: f64) -> Result<Vec<SampleId>> {
    if scores.is_empty() {
        return Err(Error::invalid("no scores to select from"));
    }
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::invalid(format!("keep fraction {q} outside (0, 1]")));
    }
    let ranked = crate::corpus::rank_by_score(scores.iter().map(|(id, s)| (id, *s)));
    Ok(ranked
        .into_iter()
        .take(keep_count(scores.len(), q))
        .map(|(id, _)| id.clone())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    #[serde(rename = "Operators")]
    pub operators: String,
    #[serde(rename = "Coverage")]
    pub coverage: f64,
    #[serde(rename = "Overlaps")]
    pub overlaps: f64,
    #[serde(rename = "Conflicts")]
    pub conflicts: f64,
    #[serde(rename = "Weights")]
    pub weights: f64,
}

/// Per-LF diagnostics next to the fitted weight of each LF.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<ReportRow>,
}

impl Report {
    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row)?;
        }
        if self.rows.is_empty() {
            w.write_record(["Operators", "Coverage", "Overlaps", "Conflicts", "Weights"])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::invalid(e.to_string()))
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let rows = csv::Reader::from_reader(text.as_bytes())
            .deserialize()
            .collect::<std::result::Result<_, _>>()?;
        Ok(Report { rows })
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// Builds the report. `diag.per_lf`, `params` and `lfs` must describe the
/// same LF sequence.
pub fn emit_report(diag: &Diagnostics, params: &LabelModelParams, lfs: &[LfSpec]) -> Result<Report> {
    let m = params.lf_count();
    for len in [diag.per_lf.len(), lfs.len()] {
        if len != m {
            return Err(Error::Shape {
                expected: m,
                actual: len,
            });
        }
    }
    let rows = lfs
        .iter()
        .zip(&diag.per_lf)
        .zip(lf_weights(params))
        .map(|((lf, d), w)| ReportRow {
            operators: lf.to_string(),
            coverage: d.coverage,
            overlaps: d.overlap,
            conflicts: d.conflict,
            weights: w.weight,
        })
        .collect();
    Ok(Report { rows })
}

/// The fitted model together with the LFs it was fit on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsDocument {
    pub lfs: Vec<LfSpec>,
    #[serde(flatten)]
    pub model: FittedModel,
}

/// Result of the in-memory part of the pipeline (candidates through
/// selection).
#[derive(Debug, Clone)]
pub struct Curation {
    pub outcome: SearchOutcome,
    pub lfs: Vec<LfSpec>,
    pub matrix: LabelMatrix,
    pub model: FittedModel,
    pub quality: BTreeMap<SampleId, f64>,
    pub curated: Vec<SampleId>,
}

/// Candidate grid over the operators that have at least one score.
pub fn candidate_grid(scores: &ScoreTable, settings: &CandidateSettings) -> Result<LfCandidateGrid> {
    let scored: Vec<(OperatorId, Vec<Option<f64>>)> = scores
        .operator_ids()
        .iter()
        .map(|op| (op.clone(), scores.column(op.as_str()).expect("own column")))
        .filter(|(_, col)| col.iter().any(Option::is_some))
        .collect();
    if scored.is_empty() {
        return Err(Error::invalid("no operator has any scores"));
    }
    let table = ScoreTable::from_columns(scores.sample_ids().to_vec(), scored)?;
    generate_candidates(&table, &settings.topk_grid, &settings.beta_fractions)
}

/// Fits `lfs` on the corpus scores and keeps the top fraction.
pub fn fit_and_select(
    scores: &ScoreTable,
    lfs: &[LfSpec],
    config: &CurationConfig,
) -> Result<(LabelMatrix, FittedModel, BTreeMap<SampleId, f64>, Vec<SampleId>)> {
    let matrix = build_matrix(lfs, scores)?;
    let model = fit(&matrix, &config.fit)?;
    let quality = score_all(&model.params, &matrix)?;
    let curated = select_top_fraction(&quality, config.keep_fraction)?;
    Ok((matrix, model, quality, curated))
}

/// Candidate generation, search, final fit and selection on tables that are
/// already in memory. Errors carry the stage they came from.
pub fn curate_scores(
    scores: &ScoreTable,
    tiny_scores: &ScoreTable,
    tiny: &TinyEval,
    config: &CurationConfig,
) -> Result<Curation> {
    let grid = candidate_grid(scores, &config.candidates).map_err(|e| e.in_stage(STAGE_LF_GEN))?;
    let outcome = search(
        &grid,
        scores,
        tiny_scores,
        tiny,
        &config.composite,
        &config.fit,
        &config.search,
    )
    .map_err(|e| e.in_stage(STAGE_SEARCH))?;
    let lfs = outcome.best_lfs();
    let (matrix, model, quality, curated) =
        fit_and_select(scores, &lfs, config).map_err(|e| e.in_stage(STAGE_FIT))?;
    Ok(Curation {
        outcome,
        lfs,
        matrix,
        model,
        quality,
        curated,
    })
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

fn load_optional_detections(path: Option<&Path>) -> Result<DetectionSet> {
    path.map_or_else(|| Ok(DetectionSet::new()), load_detections)
}

fn hash_samples(manifest: &Manifest, mode: DedupMode) -> Vec<HashedSample> {
    manifest
        .samples()
        .par_iter()
        .map(|rec| {
            let phash = match mode {
                DedupMode::Text => None,
                DedupMode::Image | DedupMode::ImageAndText => manifest
                    .image_location(rec)
                    .and_then(|p| decode_image(p).ok())
                    .map(|img| phash64(&img)),
            };
            HashedSample {
                id: rec.id.clone(),
                phash,
                text: text_hash(&rec.caption),
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct DedupOutcome {
    pub groups: Vec<DuplicateGroup>,
    pub kept: Vec<SampleId>,
}

/// Stage 1: hash, cluster and keep the best-aligned member of each group.
pub fn stage_dedup(config: &CurationConfig, out: &Path) -> Result<DedupOutcome> {
    let run = || -> Result<DedupOutcome> {
        create_dir(out)?;
        let manifest = load_manifest(&config.manifest)?;
        if manifest.is_empty() {
            return Err(Error::invalid("manifest has no samples"));
        }
        let ingested = load_score_table(&config.scores, &manifest)?;
        let alignment = ingested
            .column_map(config.dedup.alignment_column.as_str())
            .ok_or_else(|| Error::UnknownOperator(config.dedup.alignment_column.to_string()))?;
        let hashed = hash_samples(&manifest, config.dedup.mode);
        let groups = cluster_duplicates(&hashed, &config.dedup)?;
        let kept = retain_best(&groups, &alignment)?;
        write_groups_report(&groups, &kept, &alignment, out.join(DEDUP_GROUPS_FILE))?;
        write_id_list(&kept, out.join(KEPT_IDS_FILE))?;
        Ok(DedupOutcome { groups, kept })
    };
    run().map_err(|e| e.in_stage(STAGE_DEDUP))
}

fn survivors(config: &CurationConfig, out: &Path) -> Result<Manifest> {
    let manifest = load_manifest(&config.manifest)?;
    let kept = read_id_list(out.join(KEPT_IDS_FILE))?;
    let keep: HashSet<&str> = kept.iter().map(SampleId::as_str).collect();
    let survivors = manifest.retain_ids(&keep);
    if survivors.len() != keep.len() {
        return Err(Error::invalid("kept id list names samples outside the manifest"));
    }
    if survivors.is_empty() {
        return Err(Error::invalid("no samples survived deduplication"));
    }
    Ok(survivors)
}

fn load_assembled(config: &CurationConfig, out: &Path) -> Result<(Manifest, ScoreTable)> {
    let manifest = survivors(config, out)?;
    let scores = load_score_table(out.join(SCORES_FILE), &manifest)?;
    Ok((manifest, scores))
}

/// Stage 2: operator scores for the dedup survivors.
pub fn stage_score(config: &CurationConfig, out: &Path) -> Result<ScoreTable> {
    let run = || -> Result<ScoreTable> {
        let manifest = survivors(config, out)?;
        let full = load_manifest(&config.manifest)?;
        let ingested = load_score_table(&config.scores, &full)?;
        let detections = load_optional_detections(config.detections.as_deref())?;
        let table = assemble_scores(&manifest, &ingested, &detections, &config.operators)?;
        table.write_csv(out.join(SCORES_FILE))?;
        Ok(table)
    };
    run().map_err(|e| e.in_stage(STAGE_SCORE))
}

/// Stage 3: candidate LFs from score quantiles.
pub fn stage_lf_gen(config: &CurationConfig, out: &Path) -> Result<LfCandidateGrid> {
    let run = || -> Result<LfCandidateGrid> {
        let (_, scores) = load_assembled(config, out)?;
        let grid = candidate_grid(&scores, &config.candidates)?;
        write_json(&out.join(CANDIDATES_FILE), &grid)?;
        Ok(grid)
    };
    run().map_err(|e| e.in_stage(STAGE_LF_GEN))
}

/// Builds the labeled evaluation set and its operator scores.
pub fn prepare_tiny_eval(config: &CurationConfig) -> Result<(Manifest, TinyEval, ScoreTable)> {
    let clean = load_manifest(&config.tiny.clean)?;
    let noisy = load_manifest(&config.tiny.noisy)?;
    let (manifest, gold) = build_tiny_eval(&clean, &noisy, config.tiny.swap_fraction, config.seed)?;
    let ingested = load_score_table(&config.tiny.scores, &manifest)?;
    let detections = load_optional_detections(config.tiny.detections.as_deref())?;
    let scores = assemble_scores(&manifest, &ingested, &detections, &config.operators)?;
    Ok((manifest, gold, scores))
}

/// Stage 4: Algorithm-style search over LF combinations.
pub fn stage_search(config: &CurationConfig, out: &Path) -> Result<SearchOutcome> {
    let run = || -> Result<SearchOutcome> {
        let (_, scores) = load_assembled(config, out)?;
        let grid: LfCandidateGrid = read_json(&out.join(CANDIDATES_FILE))?;
        let (tiny_manifest, gold, tiny_scores) = prepare_tiny_eval(config)?;
        tiny_manifest.write_jsonl(out.join(TINY_MANIFEST_FILE))?;
        gold.write_csv(out.join(TINY_LABELS_FILE))?;
        tiny_scores.write_csv(out.join(TINY_SCORES_FILE))?;
        let outcome = search(
            &grid,
            &scores,
            &tiny_scores,
            &gold,
            &config.composite,
            &config.fit,
            &config.search,
        )?;
        write_text(&out.join(RANKING_FILE), &outcome.ranking_csv())?;
        write_json(&out.join(BEST_FILE), &outcome.best_record())?;
        Ok(outcome)
    };
    run().map_err(|e| e.in_stage(STAGE_SEARCH))
}

/// Stage 5 and 6: fit the winning LFs on the survivors, score, select.
pub fn stage_fit(config: &CurationConfig, out: &Path) -> Result<ParamsDocument> {
    let run = || -> Result<ParamsDocument> {
        let (manifest, scores) = load_assembled(config, out)?;
        let best: SearchRecord = read_json(&out.join(BEST_FILE))?;
        let lfs = best.lfs();
        let (matrix, model, quality, curated) = fit_and_select(&scores, &lfs, config)?;
        let doc = ParamsDocument { lfs, model };
        write_json(&out.join(PARAMS_FILE), &doc)?;
        write_text(&out.join(MATRIX_FILE), &matrix.to_csv_string())?;
        let all: Vec<SampleId> = manifest.ids().cloned().collect();
        write_subset(&manifest, &all, &quality, out.join(QUALITY_FILE))?;
        write_subset(&manifest, &curated, &quality, out.join(CURATED_FILE))?;
        Ok(doc)
    };
    run().map_err(|e| e.in_stage(STAGE_FIT))
}

/// Stage 7: per-LF diagnostics and weights.
pub fn stage_report(config: &CurationConfig, out: &Path) -> Result<Report> {
    let run = || -> Result<Report> {
        let (_, scores) = load_assembled(config, out)?;
        let doc: ParamsDocument = read_json(&out.join(PARAMS_FILE))?;
        let matrix = build_matrix(&doc.lfs, &scores)?;
        let report = emit_report(&diagnostics(&matrix)?, &doc.model.params, &doc.lfs)?;
        write_text(&out.join(REPORT_CSV_FILE), &report.to_csv_string()?)?;
        write_text(&out.join(REPORT_JSON_FILE), &report.to_json_string()?)?;
        Ok(report)
    };
    run().map_err(|e| e.in_stage(STAGE_REPORT))
}

#[derive(Debug, Clone)]
pub struct PipelineSummary {
    pub samples: usize,
    pub survivors: usize,
    pub curated: usize,
    pub best: String,
    pub metric: f64,
}

/// Runs every stage in order, writing all artifacts into `out`.
pub fn run_pipeline(config: &CurationConfig, out: impl AsRef<Path>) -> Result<PipelineSummary> {
    let out = out.as_ref();
    let dedup = stage_dedup(config, out)?;
    stage_score(config, out)?;
    stage_lf_gen(config, out)?;
    let outcome = stage_search(config, out)?;
    stage_fit(config, out)?;
    stage_report(config, out)?;
    let samples = dedup.groups.iter().map(|g| g.members.len()).sum();
    let best = outcome.best();
    Ok(PipelineSummary {
        samples,
        survivors: dedup.kept.len(),
        curated: keep_count(dedup.kept.len(), config.keep_fraction),
        best: best.combination.encode(&outcome.grid),
        metric: best.metric,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labelmodel::LabelModelParams;
    use crate::weaklabel::LfDiagnostics;

    fn sid(s: &str) -> SampleId {
        SampleId::new(s).unwrap()
    }

    fn scores(pairs: &[(&str, f64)]) -> BTreeMap<SampleId, f64> {
        pairs.iter().map(|(i, s)| (sid(i), *s)).collect()
    }

    #[test]
    fn keep_counts() {
        assert_eq!(keep_count(10, 0.4), 4);
        assert_eq!(keep_count(3, 0.4), 2);
        assert_eq!(keep_count(5, 1.0), 5);
        assert_eq!(keep_count(1, 0.01), 1);
        assert_eq!(keep_count(8_800_000, 0.4), 3_520_000);
    }

    #[test]
    fn select_orders_and_breaks_ties() {
        let s = scores(&[("c", 0.5), ("a", 0.5), ("b", 0.9), ("d", 0.1), ("e", 0.2)]);
        let kept = select_top_fraction(&s, 0.4).unwrap();
        assert_eq!(kept, vec![sid("b"), sid("a")]);
        assert!(select_top_fraction(&BTreeMap::new(), 0.4).is_err());
        assert!(select_top_fraction(&s, 0.0).is_err());
        assert!(select_top_fraction(&s, 1.5).is_err());
    }

    fn report_inputs() -> (Diagnostics, LabelModelParams, Vec<LfSpec>) {
        let lf = |op: &str| LfSpec::new(OperatorId::new(op).unwrap(), 0.3, 0.01).unwrap();
        let diag = Diagnostics {
            coverage: 0.9,
            overlap: 0.6,
            conflict: 0.1,
            per_lf: vec![
                LfDiagnostics {
                    coverage: 0.8,
                    overlap: 0.6,
                    conflict: 0.1,
                },
                LfDiagnostics {
                    coverage: 0.7,
                    overlap: 0.6,
                    conflict: 0.1,
                },
            ],
        };
        let params = LabelModelParams {
            prior: 0.5,
            accuracies: vec![0.915, 0.7],
            propensities: vec![0.8, 0.7],
        };
        (diag, params, vec![lf("hclip"), lf("clip")])
    }

    #[test]
    fn report_layout_and_round_trip() {
        let (diag, params, lfs) = report_inputs();
        let r = emit_report(&diag, &params, &lfs).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert_eq!(r.rows[0].weights, 0.915);
        let csv = r.to_csv_string().unwrap();
        assert!(csv.starts_with("Operators,Coverage,Overlaps,Conflicts,Weights\n"));
        assert_eq!(Report::from_csv_str(&csv).unwrap(), r);
        let json: Report = serde_json::from_str(&r.to_json_string().unwrap()).unwrap();
        assert_eq!(json, r);
    }

    #[test]
    fn report_shape_mismatch() {
        let (diag, params, lfs) = report_inputs();
        assert!(matches!(emit_report(&diag, &params, &lfs[..1]), Err(Error::Shape { .. })));
    }

    #[test]
    fn config_round_trip_and_paths() {
        let dir = tempfile::tempdir().unwrap();
        let layout = SynthLayout::in_dir(dir.path());
        let ops = vec![OperatorId::new("clip").unwrap()];
        let config = CurationConfig::for_synth(&layout, &ops, 9);
        let path = dir.path().join("config.toml");
        config.save(&path).unwrap();
        let loaded = CurationConfig::load(&path).unwrap();
        assert_eq!(loaded.manifest, dir.path().join("manifest.jsonl"));
        assert_eq!(loaded.search.seed, 9);
        assert_eq!(loaded.fit.seed, 9);
        assert_eq!(loaded.operators.selection.len(), 4);
        assert_eq!(loaded.keep_fraction, 0.4);
    }

    #[test]
    fn config_defaults_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "manifest = \"m.jsonl\"\nseed = 3\n").unwrap();
        let c = CurationConfig::load(&path).unwrap();
        assert_eq!(c.candidates.topk_grid, vec![20, 30, 40, 50, 60, 70, 80]);
        assert_eq!(c.operators.gdino_threshold.value(), 0.1);
        assert_eq!(c.search.seed, 3);
        std::fs::write(&path, "keep_fraction = 0.0\n").unwrap();
        assert!(CurationConfig::load(&path).is_err());
        std::fs::write(&path, "keep_fraction = \"x\"\n").unwrap();
        assert!(matches!(CurationConfig::load(&path), Err(Error::Parse { line: 1, .. })));
    }
}
