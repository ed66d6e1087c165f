//! Labeling functions, label matrices and their coverage/overlap/conflict
//! diagnostics.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{SampleId, ScoreTable};
use crate::error::{Error, Result};
use crate::operators::OperatorId;

/// One weak vote. Serialized as 1 (keep), 0 (drop), -1 (abstain).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum WeakLabel {
    Keep,
    Drop,
    Abstain,
}

impl WeakLabel {
    pub fn code(self) -> i8 {
        match self {
            WeakLabel::Keep => 1,
            WeakLabel::Drop => 0,
            WeakLabel::Abstain => -1,
        }
    }

    pub fn from_code(code: i8) -> Result<Self> {
        match code {
            1 => Ok(WeakLabel::Keep),
            0 => Ok(WeakLabel::Drop),
            -1 => Ok(WeakLabel::Abstain),
            other => Err(Error::invalid(format!("invalid weak label code {other}"))),
        }
    }

    pub fn is_vote(self) -> bool {
        self != WeakLabel::Abstain
    }

    /// Keep ↔ Drop; Abstain stays.
    pub fn flipped(self) -> Self {
        match self {
            WeakLabel::Keep => WeakLabel::Drop,
            WeakLabel::Drop => WeakLabel::Keep,
            WeakLabel::Abstain => WeakLabel::Abstain,
        }
    }
}

/// Thresholding rule on one operator's score: keep at or above `b + beta`,
/// drop at or below `b - beta`, abstain strictly in between.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LfSpec {
    pub operator: OperatorId,
    pub b: f64,
    pub beta: f64,
}

impl LfSpec {
    pub fn new(operator: OperatorId, b: f64, beta: f64) -> Result<Self> {
        if !b.is_finite() || !beta.is_finite() || beta < 0.0 {
            return Err(Error::invalid(format!(
                "invalid labeling function b={b} beta={beta}"
            )));
        }
        Ok(LfSpec { operator, b, beta })
    }

    pub fn label(&self, score: Option<f64>) -> WeakLabel {
        match score {
            Some(s) if s >= self.b + self.beta => WeakLabel::Keep,
            Some(s) if s <= self.b - self.beta => WeakLabel::Drop,
            _ => WeakLabel::Abstain,
        }
    }
}

impl fmt::Display for LfSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(b={};beta={})", self.operator, self.b, self.beta)
    }
}

pub fn apply_lf(spec: &LfSpec, scores: &[Option<f64>]) -> Vec<WeakLabel> {
    scores.iter().map(|s| spec.label(*s)).collect()
}

/// Samples × labeling functions, row-major, rows in manifest order.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMatrix {
    sample_ids: Vec<SampleId>,
    lfs: Vec<LfSpec>,
    cells: Vec<WeakLabel>,
}

impl LabelMatrix {
    pub fn new(sample_ids: Vec<SampleId>, lfs: Vec<LfSpec>, cells: Vec<WeakLabel>) -> Result<Self> {
        let expected = sample_ids.len() * lfs.len();
        if cells.len() != expected {
            return Err(Error::Shape {
                expected,
                actual: cells.len(),
            });
        }
        Ok(LabelMatrix {
            sample_ids,
            lfs,
            cells,
        })
    }

    /// Assembles a matrix from precomputed columns, one per LF.
    pub fn from_columns(sample_ids: Vec<SampleId>, columns: Vec<(LfSpec, &[WeakLabel])>) -> Result<Self> {
        let n = sample_ids.len();
        let m = columns.len();
        let mut cells = vec![WeakLabel::Abstain; n * m];
        let mut lfs = Vec::with_capacity(m);
        for (j, (lf, col)) in columns.into_iter().enumerate() {
            if col.len() != n {
                return Err(Error::Shape {
                    expected: n,
                    actual: col.len(),
                });
            }
            for (i, l) in col.iter().enumerate() {
                cells[i * m + j] = *l;
            }
            lfs.push(lf);
        }
        LabelMatrix::new(sample_ids, lfs, cells)
    }

    pub fn n_rows(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn n_lfs(&self) -> usize {
        self.lfs.len()
    }

    pub fn sample_ids(&self) -> &[SampleId] {
        &self.sample_ids
    }

    pub fn lfs(&self) -> &[LfSpec] {
        &self.lfs
    }

    pub fn row(&self, i: usize) -> &[WeakLabel] {
        let m = self.lfs.len();
        &self.cells[i * m..(i + 1) * m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[WeakLabel]> {
        (0..self.n_rows()).map(|i| self.row(i))
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("sample_id");
        for lf in &self.lfs {
            out.push(',');
            out.push_str(&lf.to_string());
        }
        out.push('\n');
        for (i, id) in self.sample_ids.iter().enumerate() {
            out.push_str(id.as_str());
            for l in self.row(i) {
                out.push(',');
                out.push_str(&l.code().to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// Column `j` is `lfs[j]` applied to its operator's scores.
pub fn build_matrix(lfs: &[LfSpec], scores: &ScoreTable) -> Result<LabelMatrix> {
    let mut columns = Vec::with_capacity(lfs.len());
    for lf in lfs {
        let col = scores
            .column(lf.operator.as_str())
            .ok_or_else(|| Error::UnknownOperator(lf.operator.to_string()))?;
        columns.push(apply_lf(lf, &col));
    }
    LabelMatrix::from_columns(
        scores.sample_ids().to_vec(),
        lfs.iter().cloned().zip(columns.iter().map(Vec::as_slice)).collect(),
    )
}

/// Candidate LFs for one operator. Choosing index `candidates.len()` means the
/// operator is excluded from the combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorCandidates {
    pub operator: OperatorId,
    pub candidates: Vec<LfSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LfCandidateGrid {
    pub operators: Vec<OperatorCandidates>,
}

impl LfCandidateGrid {
    /// Size of the Cartesian product including the exclude option (and the
    /// all-excluded point). `None` on overflow.
    pub fn combination_count(&self) -> Option<u128> {
        self.operators
            .iter()
            .try_fold(1u128, |acc, op| acc.checked_mul(op.candidates.len() as u128 + 1))
    }
}

/// Smallest sorted value whose 1-based rank is `ceil(n * (100 - k) / 100)`.
pub(crate) fn nearest_rank_topk(sorted: &[f64], topk_percent: u32) -> f64 {
    let n = sorted.len();
    let rank = (n * (100 - topk_percent as usize)).div_ceil(100).clamp(1, n);
    sorted[rank - 1]
}

/// Per operator: for each top-K percentage, `b` is the score at the top-K
/// boundary and for each fraction `f`, `beta = f * std(scores)`.
pub fn generate_candidates(
    scores: &ScoreTable,
    topk_grid: &[u32],
    beta_fractions: &[f64],
) -> Result<LfCandidateGrid> {
    if let Some(k) = topk_grid.iter().find(|k| **k == 0 || **k >= 100) {
        return Err(Error::invalid(format!("top-K value {k} outside (0, 100)")));
    }
    if let Some(f) = beta_fractions.iter().find(|f| !f.is_finite() || **f < 0.0) {
        return Err(Error::invalid(format!("invalid beta fraction {f}")));
    }
    let mut operators = Vec::with_capacity(scores.n_operators());
    for op in scores.operator_ids() {
        let mut values: Vec<f64> = scores
            .column(op.as_str())
            .expect("own column")
            .into_iter()
            .flatten()
            .collect();
        if values.is_empty() {
            return Err(Error::EmptyOperator(op.to_string()));
        }
        values.sort_by(f64::total_cmp);
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();

        let mut candidates = Vec::with_capacity(topk_grid.len() * beta_fractions.len());
        for &k in topk_grid {
            let b = nearest_rank_topk(&values, k);
            for &f in beta_fractions {
                candidates.push(LfSpec::new(op.clone(), b, f * std)?);
            }
        }
        operators.push(OperatorCandidates {
            operator: op.clone(),
            candidates,
        });
    }
    Ok(LfCandidateGrid { operators })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LfDiagnostics {
    pub coverage: f64,
    pub overlap: f64,
    pub conflict: f64,
}

/// Coverage, overlap and conflict of a label matrix, globally and per LF.
/// Abstain is the non-vote.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub coverage: f64,
    pub overlap: f64,
    pub conflict: f64,
    pub per_lf: Vec<LfDiagnostics>,
}

pub fn diagnostics(matrix: &LabelMatrix) -> Result<Diagnostics> {
    let n = matrix.n_rows();
    if n == 0 {
        return Err(Error::invalid("diagnostics of an empty label matrix"));
    }
    let m = matrix.n_lfs();
    let (mut covered, mut overlapped, mut conflicted) = (0usize, 0usize, 0usize);
    let mut per = vec![[0usize; 3]; m];
    for row in matrix.rows() {
        let keeps = row.iter().filter(|l| **l == WeakLabel::Keep).count();
        let drops = row.iter().filter(|l| **l == WeakLabel::Drop).count();
        let votes = keeps + drops;
        covered += usize::from(votes >= 1);
        overlapped += usize::from(votes >= 2);
        conflicted += usize::from(keeps > 0 && drops > 0);
        for (j, l) in row.iter().enumerate() {
            let disagreeing = match l {
                WeakLabel::Keep => drops,
                WeakLabel::Drop => keeps,
                WeakLabel::Abstain => continue,
            };
            per[j][0] += 1;
            per[j][1] += usize::from(votes >= 2);
            per[j][2] += usize::from(disagreeing > 0);
        }
    }
    let frac = |c: usize| c as f64 / n as f64;
    Ok(Diagnostics {
        coverage: frac(covered),
        overlap: frac(overlapped),
        conflict: frac(conflicted),
        per_lf: per
            .into_iter()
            .map(|[c, o, x]| LfDiagnostics {
                coverage: frac(c),
                overlap: frac(o),
                conflict: frac(x),
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use WeakLabel::{Abstain as A, Drop as D, Keep as K};

    fn op(s: &str) -> OperatorId {
        OperatorId::new(s).unwrap()
    }

    fn ids(n: usize) -> Vec<SampleId> {
        (0..n).map(|i| SampleId::new(format!("s{i}")).unwrap()).collect()
    }

    fn matrix(rows: &[&[WeakLabel]]) -> LabelMatrix {
        let m = rows.first().map_or(0, |r| r.len());
        let lfs = (0..m).map(|j| LfSpec::new(op(&format!("o{j}")), 0.0, 0.0).unwrap()).collect();
        LabelMatrix::new(ids(rows.len()), lfs, rows.concat()).unwrap()
    }

    #[test]
    fn eq2_examples() {
        let lf = LfSpec::new(op("clip"), 0.50, 0.20).unwrap();
        assert_eq!(lf.label(Some(0.82)), K);
        assert_eq!(lf.label(Some(0.70)), K);
        assert_eq!(lf.label(Some(0.55)), A);
        assert_eq!(lf.label(Some(0.30)), D);
        assert_eq!(lf.label(None), A);
    }

    #[test]
    fn zero_beta_never_abstains_on_present_scores() {
        let lf = LfSpec::new(op("clip"), 0.5, 0.0).unwrap();
        // s == b satisfies s >= b + 0 first
        assert_eq!(lf.label(Some(0.5)), K);
        assert_eq!(lf.label(Some(0.4999)), D);
    }

    #[test]
    fn lf_spec_validation() {
        assert!(LfSpec::new(op("x"), f64::NAN, 0.0).is_err());
        assert!(LfSpec::new(op("x"), 0.0, -0.1).is_err());
        assert!(LfSpec::new(op("x"), 0.0, f64::INFINITY).is_err());
    }

    #[test]
    fn label_codes_round_trip() {
        for l in [K, D, A] {
            assert_eq!(WeakLabel::from_code(l.code()).unwrap(), l);
        }
        assert!(WeakLabel::from_code(2).is_err());
    }

    fn one_to_hundred() -> ScoreTable {
        ScoreTable::from_columns(ids(100), vec![(op("s"), (1..=100).map(|v| Some(v as f64)).collect())]).unwrap()
    }

    #[test]
    fn topk_boundaries_by_nearest_rank() {
        // rank ceil(100 * 0.6) = 60 -> value 60; ceil(100 * 0.8) = 80 -> 80
        let grid = generate_candidates(&one_to_hundred(), &[40, 20], &[0.0]).unwrap();
        let c = &grid.operators[0].candidates;
        assert_eq!((c[0].b, c[0].beta), (60.0, 0.0));
        assert_eq!(c[1].b, 80.0);
    }

    #[test]
    fn topk_rank_small_n() {
        // n = 3, K = 50: ceil(1.5) = 2
        assert_eq!(nearest_rank_topk(&[1.0, 2.0, 3.0], 50), 2.0);
        // n = 1 always returns the single value
        assert_eq!(nearest_rank_topk(&[7.0], 99), 7.0);
    }

    #[test]
    fn beta_is_fraction_of_population_std() {
        let t = ScoreTable::from_columns(ids(4), vec![(op("s"), vec![Some(2.0), Some(4.0), Some(4.0), Some(6.0)])]).unwrap();
        let grid = generate_candidates(&t, &[50], &[0.5]).unwrap();
        // population std of {2,4,4,6} = sqrt(2)
        assert!((grid.operators[0].candidates[0].beta - 0.5 * 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn candidate_counting() {
        let cols = ["a", "b", "c"]
            .iter()
            .map(|n| (op(n), (0..10).map(|v| Some(v as f64)).collect()))
            .collect();
        let t = ScoreTable::from_columns(ids(10), cols).unwrap();
        let grid = generate_candidates(&t, &[50], &[0.0, 0.25]).unwrap();
        assert!(grid.operators.iter().all(|o| o.candidates.len() == 2));
        assert_eq!(grid.combination_count(), Some(27));
    }

    #[test]
    fn candidate_errors() {
        let t = ScoreTable::from_columns(ids(2), vec![(op("s"), vec![None, None])]).unwrap();
        assert!(matches!(generate_candidates(&t, &[50], &[0.0]), Err(Error::EmptyOperator(_))));
        assert!(generate_candidates(&one_to_hundred(), &[100], &[0.0]).is_err());
        assert!(generate_candidates(&one_to_hundred(), &[0], &[0.0]).is_err());
        assert!(generate_candidates(&one_to_hundred(), &[50], &[-1.0]).is_err());
    }

    #[test]
    fn build_matrix_examples() {
        let t = ScoreTable::from_columns(
            ids(3),
            vec![
                (op("clip"), vec![Some(0.9), Some(0.1), None]),
                (op("icc"), vec![None, None, None]),
            ],
        )
        .unwrap();
        let m = build_matrix(&[LfSpec::new(op("clip"), 0.5, 0.0).unwrap()], &t).unwrap();
        assert_eq!((m.n_rows(), m.n_lfs()), (3, 1));
        assert_eq!(m.to_csv_string(), "sample_id,clip(b=0.5;beta=0)\ns0,1\ns1,0\ns2,-1\n");
        let m = build_matrix(&[LfSpec::new(op("icc"), 0.5, 0.0).unwrap()], &t).unwrap();
        assert!(m.rows().all(|r| r == [A]));
        assert!(matches!(
            build_matrix(&[LfSpec::new(op("nope"), 0.5, 0.0).unwrap()], &t),
            Err(Error::UnknownOperator(_))
        ));
    }

    #[test]
    fn diagnostics_examples() {
        let d = diagnostics(&matrix(&[&[K, K], &[K, A], &[A, A]])).unwrap();
        assert_eq!((d.coverage, d.overlap, d.conflict), (2.0 / 3.0, 1.0 / 3.0, 0.0));
        assert_eq!(d.per_lf[0], LfDiagnostics { coverage: 2.0 / 3.0, overlap: 1.0 / 3.0, conflict: 0.0 });
        assert_eq!(d.per_lf[1], LfDiagnostics { coverage: 1.0 / 3.0, overlap: 1.0 / 3.0, conflict: 0.0 });

        let d = diagnostics(&matrix(&[&[K, D]])).unwrap();
        assert_eq!((d.coverage, d.overlap, d.conflict), (1.0, 1.0, 1.0));

        let d = diagnostics(&matrix(&[&[A, A], &[A, A]])).unwrap();
        assert_eq!((d.coverage, d.overlap, d.conflict), (0.0, 0.0, 0.0));
    }

    #[test]
    fn diagnostics_rejects_empty() {
        let m = LabelMatrix::new(vec![], vec![], vec![]).unwrap();
        assert!(diagnostics(&m).is_err());
    }
}
