//! Search over labeling-function combinations.
//!
//! Every combination picks, per operator, one candidate LF or excludes the
//! operator. For each one a label model is fit on the corpus label matrix,
//! scored against a small gold-labelled evaluation set, and ranked by
//!
//! ```text
//! M = a1·F1_tiny + a2·overlap − a3·conflict + a4·coverage
//! ```
//!
//! with the diagnostics taken from the corpus matrix. The best combination
//! wins; ties go to the lexicographically smallest choice vector.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Manifest, SampleId, SampleRecord, ScoreTable};
use crate::error::{Error, Result};
use crate::labelmodel::{fit, score_all, FitConfig, FittedModel};
use crate::operators::OperatorId;
use crate::weaklabel::{apply_lf, diagnostics, Diagnostics, LabelMatrix, LfCandidateGrid, LfSpec, WeakLabel};

/// Largest space [`SearchStrategy::Exhaustive`] will enumerate.
pub const MAX_EXHAUSTIVE: u128 = 1 << 20;

/// Gold labels for the evaluation set: `true` = clean, `false` = noisy.
#[derive(Debug, Clone, PartialEq)]
pub struct TinyEval {
    labels: BTreeMap<SampleId, bool>,
}

impl TinyEval {
    pub fn new(labels: BTreeMap<SampleId, bool>) -> Result<Self> {
        let positives = labels.values().filter(|v| **v).count();
        if positives == 0 || positives == labels.len() {
            return Err(Error::invalid("evaluation set needs both clean and noisy samples"));
        }
        Ok(TinyEval { labels })
    }

    pub fn labels(&self) -> &BTreeMap<SampleId, bool> {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::from("sample_id,label\n");
        for (id, clean) in &self.labels {
            out.push_str(&format!("{id},{}\n", u8::from(*clean)));
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

fn rooted(manifest: &Manifest, rec: &SampleRecord) -> SampleRecord {
    let mut rec = rec.clone();
    if let Some(p) = manifest.image_location(&rec) {
        rec.image_path = p.to_string_lossy().into_owned();
    }
    rec
}

/// Labels `clean` as 1 and `noisy` as 0, and exchanges captions between
/// random pairs drawn from `floor(swap_fraction · |noisy|)` noisy samples
/// (rounded down to an even count). Output order is clean then noisy.
pub fn build_tiny_eval(
    clean: &Manifest,
    noisy: &Manifest,
    swap_fraction: f64,
    seed: u64,
) -> Result<(Manifest, TinyEval)> {
    if clean.is_empty() || noisy.is_empty() {
        return Err(Error::invalid("clean and noisy pools must both be non-empty"));
    }
    if !(0.0..=1.0).contains(&swap_fraction) {
        return Err(Error::invalid(format!("swap fraction {swap_fraction} outside [0, 1]")));
    }
    let clean_ids: HashSet<&str> = clean.ids().map(SampleId::as_str).collect();
    if let Some(dup) = noisy.ids().find(|id| clean_ids.contains(id.as_str())) {
        return Err(Error::DuplicateId(dup.to_string()));
    }

    let mut noisy_recs: Vec<SampleRecord> = noisy.samples().iter().map(|r| rooted(noisy, r)).collect();
    let mut swaps = (swap_fraction * noisy_recs.len() as f64).floor() as usize;
    swaps -= swaps % 2;
    let mut order: Vec<usize> = (0..noisy_recs.len()).collect();
    order.shuffle(&mut SplitMix64::seed_from_u64(seed));
    for pair in order[..swaps].chunks_exact(2) {
        let (a, b) = (pair[0], pair[1]);
        let ca = std::mem::take(&mut noisy_recs[a].caption);
        noisy_recs[a].caption = std::mem::replace(&mut noisy_recs[b].caption, ca);
        let (ida, idb) = (noisy_recs[a].id.to_string(), noisy_recs[b].id.to_string());
        noisy_recs[a].meta.insert("caption_from".into(), idb);
        noisy_recs[b].meta.insert("caption_from".into(), ida);
    }

    let mut labels = BTreeMap::new();
    let mut samples = Vec::with_capacity(clean.len() + noisy_recs.len());
    for r in clean.samples() {
        labels.insert(r.id.clone(), true);
        samples.push(rooted(clean, r));
    }
    for r in noisy_recs {
        labels.insert(r.id.clone(), false);
        samples.push(r);
    }
    Ok((Manifest::new(samples)?, TinyEval::new(labels)?))
}

/// F1 of the clean class when predicting clean iff `score >= threshold`.
pub fn f1_tiny(scores: &BTreeMap<SampleId, f64>, gold: &TinyEval, threshold: f64) -> Result<f64> {
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for (id, &clean) in gold.labels() {
        let s = scores
            .get(id)
            .ok_or_else(|| Error::invalid(format!("no score for evaluation sample `{id}`")))?;
        match (*s >= threshold, clean) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            (false, false) => {}
        }
    }
    let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
    let recall = if tp + fneg == 0 { 0.0 } else { tp as f64 / (tp + fneg) as f64 };
    Ok(if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    })
}

/// Coefficients of the composite metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompositeWeights {
    pub f1: f64,
    pub overlap: f64,
    pub conflict: f64,
    pub coverage: f64,
}

impl Default for CompositeWeights {
    fn default() -> Self {
        CompositeWeights {
            f1: 1.0,
            overlap: 0.25,
            conflict: 0.25,
            coverage: 0.25,
        }
    }
}

impl CompositeWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [self.f1, self.overlap, self.conflict, self.coverage];
        if all.iter().any(|a| !a.is_finite() || *a < 0.0) || self.f1 <= 0.0 {
            return Err(Error::invalid("composite weights must be non-negative with f1 > 0"));
        }
        Ok(())
    }
}

pub fn composite_metric(f1: f64, diag: &Diagnostics, weights: &CompositeWeights) -> f64 {
    weights.f1 * f1 + weights.overlap * diag.overlap - weights.conflict * diag.conflict
        + weights.coverage * diag.coverage
}

/// One choice per grid operator: a candidate index, or `None` to exclude it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CandidateCombination {
    pub choices: Vec<Option<usize>>,
}

impl CandidateCombination {
    /// Ordering key; exclusion sorts after every candidate.
    fn key(&self, grid: &LfCandidateGrid) -> Vec<usize> {
        self.choices
            .iter()
            .zip(&grid.operators)
            .map(|(c, op)| c.unwrap_or(op.candidates.len()))
            .collect()
    }

    pub fn cmp_in(&self, other: &Self, grid: &LfCandidateGrid) -> Ordering {
        self.key(grid).cmp(&other.key(grid))
    }

    pub fn included(&self) -> usize {
        self.choices.iter().filter(|c| c.is_some()).count()
    }

    pub fn lfs(&self, grid: &LfCandidateGrid) -> Vec<LfSpec> {
        self.choices
            .iter()
            .zip(&grid.operators)
            .filter_map(|(c, op)| c.map(|i| op.candidates[i].clone()))
            .collect()
    }

    /// `op=index` per operator joined by `;`, `-` for excluded.
    pub fn encode(&self, grid: &LfCandidateGrid) -> String {
        self.choices
            .iter()
            .zip(&grid.operators)
            .map(|(c, op)| match c {
                Some(i) => format!("{}={i}", op.operator),
                None => format!("{}=-", op.operator),
            })
            .collect::<Vec<_>>()
            .join(";")
    }

    /// Decodes a mixed-radix index (first operator most significant).
    fn from_index(mut index: u128, grid: &LfCandidateGrid) -> Self {
        let mut choices = vec![None; grid.operators.len()];
        for (slot, op) in choices.iter_mut().zip(&grid.operators).rev() {
            let radix = op.candidates.len() as u128 + 1;
            let digit = (index % radix) as usize;
            index /= radix;
            *slot = (digit < op.candidates.len()).then_some(digit);
        }
        CandidateCombination { choices }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStrategy {
    #[default]
    Exhaustive,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub strategy: SearchStrategy,
    /// Number of distinct combinations sampled in random mode.
    pub budget: usize,
    pub seed: u64,
    pub f1_threshold: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            strategy: SearchStrategy::Exhaustive,
            budget: 256,
            seed: 0,
            f1_threshold: 0.5,
        }
    }
}

/// Scores of one evaluated combination.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub combination: CandidateCombination,
    pub f1: f64,
    pub diagnostics: Diagnostics,
    pub metric: f64,
    pub model: FittedModel,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub grid: LfCandidateGrid,
    /// Best first: metric descending, then combination order.
    pub ranking: Vec<Evaluation>,
}

impl SearchOutcome {
    pub fn best(&self) -> &Evaluation {
        &self.ranking[0]
    }

    pub fn best_lfs(&self) -> Vec<LfSpec> {
        self.best().combination.lfs(&self.grid)
    }

    pub fn ranking_csv(&self) -> String {
        let mut out = String::from("rank,combination,f1,coverage,overlap,conflict,metric\n");
        for (rank, e) in self.ranking.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                rank + 1,
                e.combination.encode(&self.grid),
                e.f1,
                e.diagnostics.coverage,
                e.diagnostics.overlap,
                e.diagnostics.conflict,
                e.metric
            ));
        }
        out
    }

    pub fn best_record(&self) -> SearchRecord {
        let best = self.best();
        SearchRecord {
            combination: best
                .combination
                .choices
                .iter()
                .zip(&self.grid.operators)
                .map(|(c, op)| ChoiceRecord {
                    operator: op.operator.clone(),
                    candidate: *c,
                    lf: c.map(|i| op.candidates[i].clone()),
                })
                .collect(),
            encoding: best.combination.encode(&self.grid),
            f1: best.f1,
            coverage: best.diagnostics.coverage,
            overlap: best.diagnostics.overlap,
            conflict: best.diagnostics.conflict,
            metric: best.metric,
            model: best.model.clone(),
        }
    }
}

/// JSON form of the winning combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchRecord {
    pub combination: Vec<ChoiceRecord>,
    pub encoding: String,
    pub f1: f64,
    pub coverage: f64,
    pub overlap: f64,
    pub conflict: f64,
    pub metric: f64,
    pub model: FittedModel,
}

impl SearchRecord {
    pub fn lfs(&self) -> Vec<LfSpec> {
        self.combination.iter().filter_map(|c| c.lf.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceRecord {
    pub operator: OperatorId,
    pub candidate: Option<usize>,
    pub lf: Option<LfSpec>,
}

/// Label columns for every candidate LF, computed once per table.
struct ColumnCache {
    ids: Vec<SampleId>,
    columns: Vec<Vec<Vec<WeakLabel>>>,
}

impl ColumnCache {
    fn new(grid: &LfCandidateGrid, scores: &ScoreTable) -> Result<Self> {
        let columns = grid
            .operators
            .iter()
            .map(|op| {
                let col = scores
                    .column(op.operator.as_str())
                    .ok_or_else(|| Error::UnknownOperator(op.operator.to_string()))?;
                Ok(op.candidates.iter().map(|lf| apply_lf(lf, &col)).collect())
            })
            .collect::<Result<_>>()?;
        Ok(ColumnCache {
            ids: scores.sample_ids().to_vec(),
            columns,
        })
    }

    fn matrix(&self, combo: &CandidateCombination, grid: &LfCandidateGrid) -> Result<LabelMatrix> {
        let cols = combo
            .choices
            .iter()
            .enumerate()
            .filter_map(|(op, c)| {
                c.map(|i| (grid.operators[op].candidates[i].clone(), self.columns[op][i].as_slice()))
            })
            .collect();
        LabelMatrix::from_columns(self.ids.clone(), cols)
    }
}

fn combinations(grid: &LfCandidateGrid, config: &SearchConfig) -> Result<Vec<CandidateCombination>> {
    if grid.operators.is_empty() || grid.operators.iter().all(|o| o.candidates.is_empty()) {
        return Err(Error::invalid("candidate grid has no labeling functions"));
    }
    let total = grid
        .combination_count()
        .ok_or_else(|| Error::invalid("combination space overflows"))?;
    // index total-1 is the all-excluded point
    let valid = total - 1;
    let enumerate_all = |limit: u128| -> Result<Vec<CandidateCombination>> {
        if limit > MAX_EXHAUSTIVE {
            return Err(Error::invalid(format!(
                "{limit} combinations exceed the exhaustive limit; use random search"
            )));
        }
        Ok((0..valid).map(|i| CandidateCombination::from_index(i, grid)).collect())
    };
    match config.strategy {
        SearchStrategy::Exhaustive => enumerate_all(valid),
        SearchStrategy::Random => {
            if config.budget == 0 {
                return Err(Error::invalid("random search budget must be at least 1"));
            }
            if config.budget as u128 >= valid {
                return enumerate_all(valid);
            }
            let mut rng = SplitMix64::seed_from_u64(config.seed);
            let mut seen = HashSet::with_capacity(config.budget);
            let mut out = Vec::with_capacity(config.budget);
            while out.len() < config.budget {
                let idx = rng.random_range(0..valid);
                if seen.insert(idx) {
                    out.push(CandidateCombination::from_index(idx, grid));
                }
            }
            Ok(out)
        }
    }
}

struct EvalContext<'a> {
    grid: &'a LfCandidateGrid,
    corpus: ColumnCache,
    tiny: ColumnCache,
    gold: &'a TinyEval,
    weights: &'a CompositeWeights,
    fit_config: &'a FitConfig,
    threshold: f64,
}

impl EvalContext<'_> {
    fn evaluate(&self, combo: &CandidateCombination) -> Result<Option<Evaluation>> {
        let full = self.corpus.matrix(combo, self.grid)?;
        let model = match fit(&full, self.fit_config) {
            Ok(m) => m,
            // a combination whose LFs never vote cannot be fit; skip it
            Err(Error::NoVotes) => return Ok(None),
            Err(e) => return Err(e),
        };
        let tiny_matrix = self.tiny.matrix(combo, self.grid)?;
        let tiny_scores = score_all(&model.params, &tiny_matrix)?;
        let f1 = f1_tiny(&tiny_scores, self.gold, self.threshold)?;
        let diag = diagnostics(&full)?;
        let metric = composite_metric(f1, &diag, self.weights);
        Ok(Some(Evaluation {
            combination: combo.clone(),
            f1,
            diagnostics: diag,
            metric,
            model,
        }))
    }
}

/// Evaluates candidate LF combinations and ranks them by the composite metric.
///
/// Models are fit on the corpus matrix (`scores`); the gold labels are only
/// used to compute F1 on `tiny_scores` rows.
pub fn search(
    grid: &LfCandidateGrid,
    scores: &ScoreTable,
    tiny_scores: &ScoreTable,
    tiny: &TinyEval,
    weights: &CompositeWeights,
    fit_config: &FitConfig,
    config: &SearchConfig,
) -> Result<SearchOutcome> {
    weights.validate()?;
    if let Some(id) = tiny.labels().keys().find(|id| tiny_scores.row_of(id.as_str()).is_none()) {
        return Err(Error::invalid(format!("evaluation sample `{id}` has no scores")));
    }
    if scores.n_samples() == 0 {
        return Err(Error::invalid("cannot search on an empty corpus"));
    }
    let combos = combinations(grid, config)?;
    let gold_ids: Vec<SampleId> = tiny.labels().keys().cloned().collect();
    let ctx = EvalContext {
        grid,
        corpus: ColumnCache::new(grid, scores)?,
        tiny: ColumnCache::new(grid, &tiny_scores.select_rows(&gold_ids)?)?,
        gold: tiny,
        weights,
        fit_config,
        threshold: config.f1_threshold,
    };
    let evaluated: Vec<Option<Evaluation>> = combos.par_iter().map(|c| ctx.evaluate(c)).collect::<Result<_>>()?;
    let mut ranking: Vec<Evaluation> = evaluated.into_iter().flatten().collect();
    if ranking.is_empty() {
        return Err(Error::invalid("no combination produced a fittable label matrix"));
    }
    ranking.sort_by(|a, b| {
        b.metric
            .total_cmp(&a.metric)
            .then_with(|| a.combination.cmp_in(&b.combination, grid))
    });
    Ok(SearchOutcome {
        grid: grid.clone(),
        ranking,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weaklabel::{LfDiagnostics, OperatorCandidates};

    fn sid(s: &str) -> SampleId {
        SampleId::new(s).unwrap()
    }

    fn manifest(prefix: &str, n: usize) -> Manifest {
        Manifest::new(
            (0..n)
                .map(|i| SampleRecord::new(sid(&format!("{prefix}{i}")), "", format!("caption {prefix}{i}")))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn tiny_eval_counts_and_order() {
        let (m, gold) = build_tiny_eval(&manifest("c", 100), &manifest("n", 100), 0.5, 1).unwrap();
        assert_eq!(m.len(), 200);
        assert_eq!(gold.labels().values().filter(|v| **v).count(), 100);
        assert_eq!(m.samples()[0].id.as_str(), "c0");
        assert_eq!(m.samples()[100].id.as_str(), "n0");
        let swapped = m.samples()[100..]
            .iter()
            .filter(|r| r.caption != format!("caption {}", r.id))
            .count();
        assert_eq!(swapped, 50);
    }

    #[test]
    fn tiny_eval_no_swap_and_determinism() {
        let noisy = manifest("n", 7);
        let (m, _) = build_tiny_eval(&manifest("c", 3), &noisy, 0.0, 9).unwrap();
        assert!(m.samples()[3..].iter().zip(noisy.samples()).all(|(a, b)| a.caption == b.caption));
        let a = build_tiny_eval(&manifest("c", 3), &noisy, 1.0, 9).unwrap().0;
        let b = build_tiny_eval(&manifest("c", 3), &noisy, 1.0, 9).unwrap().0;
        assert_eq!(a, b);
        // 7 noisy -> 6 swapped, one untouched
        let untouched = a.samples()[3..].iter().filter(|r| r.meta.is_empty()).count();
        assert_eq!(untouched, 1);
    }

    #[test]
    fn tiny_eval_rejects_collision() {
        assert!(matches!(
            build_tiny_eval(&manifest("x", 2), &manifest("x", 2), 0.0, 0),
            Err(Error::DuplicateId(_))
        ));
    }

    fn gold(items: &[(&str, bool)]) -> TinyEval {
        TinyEval::new(items.iter().map(|(k, v)| (sid(k), *v)).collect()).unwrap()
    }

    fn scores(items: &[(&str, f64)]) -> BTreeMap<SampleId, f64> {
        items.iter().map(|(k, v)| (sid(k), *v)).collect()
    }

    #[test]
    fn f1_examples() {
        let g = gold(&[("a", true), ("b", true), ("c", false), ("d", false)]);
        let perfect = scores(&[("a", 0.9), ("b", 0.8), ("c", 0.1), ("d", 0.2)]);
        assert_eq!(f1_tiny(&perfect, &g, 0.5).unwrap(), 1.0);
        let none = scores(&[("a", 0.1), ("b", 0.1), ("c", 0.1), ("d", 0.1)]);
        assert_eq!(f1_tiny(&none, &g, 0.5).unwrap(), 0.0);
        // P = 0.5, R = 1.0
        let half = scores(&[("a", 0.9), ("b", 0.9), ("c", 0.9), ("d", 0.9)]);
        assert!((f1_tiny(&half, &g, 0.5).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!(f1_tiny(&scores(&[("a", 0.9)]), &g, 0.5).is_err());
    }

    #[test]
    fn tiny_eval_requires_both_classes() {
        assert!(TinyEval::new([(sid("a"), true)].into_iter().collect()).is_err());
    }

    fn diag(coverage: f64, overlap: f64, conflict: f64) -> Diagnostics {
        Diagnostics {
            coverage,
            overlap,
            conflict,
            per_lf: vec![LfDiagnostics::default()],
        }
    }

    #[test]
    fn composite_examples() {
        let w = CompositeWeights::default();
        assert!((composite_metric(0.8, &diag(0.9, 0.6, 0.3), &w) - 1.1).abs() < 1e-12);
        let f1_only = CompositeWeights {
            f1: 1.0,
            overlap: 0.0,
            conflict: 0.0,
            coverage: 0.0,
        };
        assert_eq!(composite_metric(0.7, &diag(0.9, 0.6, 0.3), &f1_only), 0.7);
        assert_eq!(composite_metric(0.7, &diag(0.0, 0.0, 0.0), &w), 0.7);
        assert!(CompositeWeights { f1: 0.0, ..w }.validate().is_err());
    }

    fn grid(sizes: &[usize]) -> LfCandidateGrid {
        LfCandidateGrid {
            operators: sizes
                .iter()
                .enumerate()
                .map(|(j, &n)| OperatorCandidates {
                    operator: OperatorId::new(format!("o{j}")).unwrap(),
                    candidates: (0..n)
                        .map(|c| LfSpec::new(OperatorId::new(format!("o{j}")).unwrap(), c as f64, 0.0).unwrap())
                        .collect(),
                })
                .collect(),
        }
    }

    #[test]
    fn mixed_radix_enumeration_is_lexicographic() {
        let g = grid(&[2, 1]);
        let all = combinations(&g, &SearchConfig::default()).unwrap();
        let choices: Vec<_> = all.iter().map(|c| c.choices.clone()).collect();
        assert_eq!(
            choices,
            vec![
                vec![Some(0), Some(0)],
                vec![Some(0), None],
                vec![Some(1), Some(0)],
                vec![Some(1), None],
                vec![None, Some(0)],
            ]
        );
        assert!(all.windows(2).all(|w| w[0].cmp_in(&w[1], &g) == Ordering::Less));
    }

    #[test]
    fn random_mode_is_seeded_and_distinct() {
        let g = grid(&[5, 5, 5]);
        let cfg = SearchConfig {
            strategy: SearchStrategy::Random,
            budget: 30,
            seed: 4,
            ..SearchConfig::default()
        };
        let a = combinations(&g, &cfg).unwrap();
        assert_eq!(a, combinations(&g, &cfg).unwrap());
        assert_eq!(a.iter().collect::<HashSet<_>>().len(), 30);
        assert!(a.iter().all(|c| c.included() > 0));
        let zero = SearchConfig { budget: 0, ..cfg };
        assert!(combinations(&g, &zero).is_err());
    }

    #[test]
    fn encoding_marks_exclusions() {
        let g = grid(&[2, 2]);
        let c = CandidateCombination {
            choices: vec![Some(1), None],
        };
        assert_eq!(c.encode(&g), "o0=1;o1=-");
        assert_eq!(c.lfs(&g).len(), 1);
    }

    #[test]
    fn empty_grid_rejected() {
        assert!(combinations(&grid(&[]), &SearchConfig::default()).is_err());
        assert!(combinations(&grid(&[0, 0]), &SearchConfig::default()).is_err());
    }
}
