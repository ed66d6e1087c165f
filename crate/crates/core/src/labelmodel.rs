//! Generative label model over weak votes.
//!
//! The latent quality label `y ∈ {keep, drop}` has prior `P(keep)`. Each
//! labeling function votes with a class-independent propensity and, when it
//! votes, agrees with `y` with its own accuracy. Votes are conditionally
//! independent given `y`. Parameters are fit by EM on the label matrix alone.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};

use crate::corpus::SampleId;
use crate::error::{Error, Result};
use crate::weaklabel::{LabelMatrix, WeakLabel};

pub const MIN_ACCURACY: f64 = 0.05;
pub const MAX_ACCURACY: f64 = 0.95;
const PRIOR_EPS: f64 = 1e-6;
const PROPENSITY_FLOOR: f64 = 1e-9;
const POSTERIOR_EPS: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelModelParams {
    /// P(quality = keep).
    pub prior: f64,
    /// P(vote = truth | vote ≠ abstain), per LF.
    pub accuracies: Vec<f64>,
    /// P(vote ≠ abstain), per LF.
    pub propensities: Vec<f64>,
}

impl LabelModelParams {
    pub fn lf_count(&self) -> usize {
        self.accuracies.len()
    }

    /// Swaps the meaning of the two classes.
    pub fn flipped(&self) -> Self {
        LabelModelParams {
            prior: 1.0 - self.prior,
            accuracies: self.accuracies.iter().map(|a| 1.0 - a).collect(),
            propensities: self.propensities.clone(),
        }
    }
}

/// Logarithms of the current parameters, computed once per EM step.
struct LogTable {
    prior: (f64, f64),
    /// `(ln a, ln(1 - a))` per LF.
    acc: Vec<(f64, f64)>,
}

impl LogTable {
    fn new(params: &LabelModelParams) -> Self {
        LogTable {
            prior: (params.prior.ln(), (1.0 - params.prior).ln()),
            acc: params.accuracies.iter().map(|a| (a.ln(), (1.0 - a).ln())).collect(),
        }
    }

    fn joint(&self, row: &[WeakLabel]) -> (f64, f64) {
        let (mut keep, mut drop) = self.prior;
        for (label, &(la, lb)) in row.iter().zip(&self.acc) {
            match label {
                WeakLabel::Keep => {
                    keep += la;
                    drop += lb;
                }
                WeakLabel::Drop => {
                    keep += lb;
                    drop += la;
                }
                WeakLabel::Abstain => {}
            }
        }
        (keep, drop)
    }

    fn posterior(&self, row: &[WeakLabel]) -> f64 {
        let (keep, drop) = self.joint(row);
        posterior_from_joint(keep, drop)
    }
}

fn posterior_from_joint(keep: f64, drop: f64) -> f64 {
    (1.0 / (1.0 + (drop - keep).exp())).clamp(POSTERIOR_EPS, 1.0 - POSTERIOR_EPS)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    /// Stop when no parameter moves by more than this between iterations.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub init_accuracy: f64,
    pub init_prior: f64,
    /// Recorded with the fit; EM initialization is deterministic and does not
    /// draw from it.
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            tolerance: 1e-6,
            max_iterations: 1000,
            init_accuracy: 0.7,
            init_prior: 0.5,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("fit tolerance must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations must be at least 1"));
        }
        if !(self.init_prior > 0.0 && self.init_prior < 1.0) {
            return Err(Error::invalid("init_prior must lie in (0, 1)"));
        }
        if !(MIN_ACCURACY..=MAX_ACCURACY).contains(&self.init_accuracy) {
            return Err(Error::invalid("init_accuracy outside the accuracy clamp range"));
        }
        Ok(())
    }
}

/// Result of [`fit`]: parameters plus convergence bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    #[serde(flatten)]
    pub params: LabelModelParams,
    pub converged: bool,
    pub iterations: usize,
    pub log_likelihood: f64,
    /// Observed-data log-likelihood before the first and after every EM step.
    #[serde(skip)]
    pub log_likelihood_trace: Vec<f64>,
}

/// Distinct rows with multiplicities, in a fixed order.
struct Patterns {
    rows: Vec<(Vec<WeakLabel>, f64)>,
    n: f64,
}

impl Patterns {
    fn from_matrix(matrix: &LabelMatrix) -> Self {
        let mut counts: BTreeMap<&[WeakLabel], usize> = BTreeMap::new();
        for row in matrix.rows() {
            *counts.entry(row).or_default() += 1;
        }
        Patterns {
            rows: counts.into_iter().map(|(r, c)| (r.to_vec(), c as f64)).collect(),
            n: matrix.n_rows() as f64,
        }
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    let hi = a.max(b);
    hi + ((a - hi).exp() + (b - hi).exp()).ln()
}

fn propensity_log_likelihood(votes: &[f64], propensities: &[f64], n: f64) -> f64 {
    votes
        .iter()
        .zip(propensities)
        .map(|(&v, &p)| {
            let mut ll = 0.0;
            if v > 0.0 {
                ll += v * p.ln();
            }
            if n - v > 0.0 {
                ll += (n - v) * (1.0 - p).ln();
            }
            ll
        })
        .sum()
}

/// Fits the label model by EM.
///
/// Accuracies are clamped to [0.05, 0.95] after every M-step. If the fit ends
/// with mean accuracy below one half, the classes are swapped so that the
/// better-than-chance solution is reported.
pub fn fit(matrix: &LabelMatrix, config: &FitConfig) -> Result<FittedModel> {
    config.validate()?;
    let m = matrix.n_lfs();
    let patterns = Patterns::from_matrix(matrix);
    let mut vote_counts = vec![0.0; m];
    for (row, c) in &patterns.rows {
        for (j, l) in row.iter().enumerate() {
            if l.is_vote() {
                vote_counts[j] += c;
            }
        }
    }
    if vote_counts.iter().all(|v| *v == 0.0) {
        return Err(Error::NoVotes);
    }
    let propensities: Vec<f64> = vote_counts
        .iter()
        .map(|v| (v / patterns.n).max(PROPENSITY_FLOOR))
        .collect();
    let prop_ll = propensity_log_likelihood(&vote_counts, &propensities, patterns.n);

    let mut params = LabelModelParams {
        prior: config.init_prior,
        accuracies: vec![config.init_accuracy; m],
        propensities,
    };
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut agree = vec![0.0; m];
    loop {
        // E-step; the log-likelihood of the current parameters comes for free
        let logs = LogTable::new(&params);
        agree.iter_mut().for_each(|a| *a = 0.0);
        let mut keep_mass = 0.0;
        let mut ll = prop_ll;
        for (row, c) in &patterns.rows {
            let (k, d) = logs.joint(row);
            ll += c * log_add(k, d);
            let q = posterior_from_joint(k, d);
            keep_mass += c * q;
            for (j, l) in row.iter().enumerate() {
                match l {
                    WeakLabel::Keep => agree[j] += c * q,
                    WeakLabel::Drop => agree[j] += c * (1.0 - q),
                    WeakLabel::Abstain => {}
                }
            }
        }
        trace.push(ll);
        if converged || iterations == config.max_iterations {
            break;
        }
        iterations += 1;

        let prior = (keep_mass / patterns.n).clamp(PRIOR_EPS, 1.0 - PRIOR_EPS);
        let mut delta = (prior - params.prior).abs();
        params.prior = prior;
        for j in 0..m {
            if vote_counts[j] == 0.0 {
                continue;
            }
            let a = (agree[j] / vote_counts[j]).clamp(MIN_ACCURACY, MAX_ACCURACY);
            delta = delta.max((a - params.accuracies[j]).abs());
            params.accuracies[j] = a;
        }
        converged = delta < config.tolerance;
    }

    let mean_acc = params.accuracies.iter().sum::<f64>() / m as f64;
    if mean_acc < 0.5 {
        params = params.flipped();
    }
    Ok(FittedModel {
        log_likelihood: *trace.last().expect("initial entry"),
        params,
        converged,
        iterations,
        log_likelihood_trace: trace,
    })
}

fn posterior_unchecked(params: &LabelModelParams, row: &[WeakLabel]) -> f64 {
    LogTable::new(params).posterior(row)
}

/// P(keep | row). Abstaining LFs contribute nothing.
pub fn posterior(params: &LabelModelParams, row: &[WeakLabel]) -> Result<f64> {
    if row.len() != params.lf_count() {
        return Err(Error::Shape {
            expected: params.lf_count(),
            actual: row.len(),
        });
    }
    Ok(posterior_unchecked(params, row))
}

pub fn score_all(params: &LabelModelParams, matrix: &LabelMatrix) -> Result<BTreeMap<SampleId, f64>> {
    if matrix.n_lfs() != params.lf_count() {
        return Err(Error::Shape {
            expected: params.lf_count(),
            actual: matrix.n_lfs(),
        });
    }
    Ok(matrix
        .sample_ids()
        .iter()
        .cloned()
        .zip({
            let logs = LogTable::new(params);
            matrix.rows().map(move |r| logs.posterior(r))
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LfWeight {
    /// The LF's estimated accuracy.
    pub weight: f64,
    pub log_odds: f64,
}

pub fn lf_weights(params: &LabelModelParams) -> Vec<LfWeight> {
    params
        .accuracies
        .iter()
        .map(|&a| LfWeight {
            weight: a,
            log_odds: (a / (1.0 - a)).ln(),
        })
        .collect()
}

/// Fraction of non-abstain votes that say keep; 0.5 for an all-abstain row.
pub fn majority_vote(matrix: &LabelMatrix) -> BTreeMap<SampleId, f64> {
    matrix
        .sample_ids()
        .iter()
        .cloned()
        .zip(matrix.rows().map(|row| {
            let keeps = row.iter().filter(|l| **l == WeakLabel::Keep).count();
            let votes = row.iter().filter(|l| l.is_vote()).count();
            if votes == 0 {
                0.5
            } else {
                keeps as f64 / votes as f64
            }
        }))
        .collect()
}

/// Unfitted parameters with accuracies drawn uniformly from [0.05, 0.95].
pub fn random_params(lf_count: usize, seed: u64) -> Result<LabelModelParams> {
    if lf_count == 0 {
        return Err(Error::invalid("random_params needs at least one LF"));
    }
    let mut rng = SplitMix64::seed_from_u64(seed);
    Ok(LabelModelParams {
        prior: 0.5,
        accuracies: (0..lf_count)
            .map(|_| rng.random_range(MIN_ACCURACY..=MAX_ACCURACY))
            .collect(),
        propensities: vec![1.0; lf_count],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::OperatorId;
    use crate::weaklabel::LfSpec;
    use WeakLabel::{Abstain as A, Drop as D, Keep as K};

    fn matrix(rows: &[Vec<WeakLabel>]) -> LabelMatrix {
        let m = rows[0].len();
        let lfs = (0..m)
            .map(|j| LfSpec::new(OperatorId::new(format!("o{j}")).unwrap(), 0.0, 0.0).unwrap())
            .collect();
        let ids = (0..rows.len()).map(|i| SampleId::new(format!("r{i}")).unwrap()).collect();
        LabelMatrix::new(ids, lfs, rows.concat()).unwrap()
    }

    fn params(prior: f64, acc: &[f64]) -> LabelModelParams {
        LabelModelParams {
            prior,
            accuracies: acc.to_vec(),
            propensities: vec![1.0; acc.len()],
        }
    }

    #[test]
    fn posterior_examples() {
        assert_eq!(posterior(&params(0.3, &[0.9, 0.8]), &[A, A]).unwrap(), 0.3);
        assert!((posterior(&params(0.5, &[0.9]), &[K]).unwrap() - 0.9).abs() < 1e-12);
        assert!((posterior(&params(0.5, &[0.8, 0.8]), &[K, D]).unwrap() - 0.5).abs() < 1e-12);
        assert!(posterior(&params(0.5, &[0.8]), &[K, D]).is_err());
    }

    #[test]
    fn weights_and_log_odds() {
        let w = lf_weights(&params(0.5, &[0.5, 0.9]));
        assert_eq!(w[0].log_odds, 0.0);
        assert!((w[1].log_odds - 9f64.ln()).abs() < 1e-12);
        assert!((w[1].log_odds - 2.197).abs() < 1e-3);
        assert_eq!(w[1].weight, 0.9);
    }

    #[test]
    fn majority_vote_examples() {
        let mv = majority_vote(&matrix(&[vec![K, K, D], vec![A, A, A], vec![K, A, A]]));
        let v: Vec<f64> = mv.values().copied().collect();
        assert_eq!(v, vec![2.0 / 3.0, 0.5, 1.0]);
    }

    #[test]
    fn random_params_seeded() {
        let a = random_params(4, 1).unwrap();
        assert_eq!(a, random_params(4, 1).unwrap());
        assert_ne!(a.accuracies, random_params(4, 2).unwrap().accuracies);
        assert!(a.accuracies.iter().all(|x| (MIN_ACCURACY..=MAX_ACCURACY).contains(x)));
        assert_eq!(a.prior, 0.5);
        assert!(random_params(0, 1).is_err());
    }

    #[test]
    fn fit_rejects_all_abstain() {
        let m = matrix(&[vec![A, A], vec![A, A]]);
        assert!(matches!(fit(&m, &FitConfig::default()), Err(Error::NoVotes)));
    }

    #[test]
    fn unanimous_column_clamps() {
        let m = matrix(&vec![vec![K]; 50]);
        let fitted = fit(&m, &FitConfig::default()).unwrap();
        assert_eq!(fitted.params.accuracies, vec![MAX_ACCURACY]);
        assert!(fitted.params.prior > 0.99);
        assert!(fitted.converged);
        assert!(fitted.iterations < 1000);
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let m = matrix(&[vec![K, K], vec![K, D], vec![D, D], vec![A, K]]);
        let cfg = FitConfig {
            max_iterations: 1,
            tolerance: 1e-15,
            ..FitConfig::default()
        };
        let fitted = fit(&m, &cfg).unwrap();
        assert!(!fitted.converged);
        assert_eq!(fitted.iterations, 1);
        assert_eq!(fitted.log_likelihood_trace.len(), 2);
    }

    #[test]
    fn score_all_shape_check() {
        let m = matrix(&[vec![K, D], vec![K, D], vec![A, K]]);
        let s = score_all(&params(0.5, &[0.8, 0.6]), &m).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s[&SampleId::new("r0").unwrap()], s[&SampleId::new("r1").unwrap()]);
        assert!(score_all(&params(0.5, &[0.8]), &m).is_err());
    }

    #[test]
    fn fitted_json_has_expected_fields() {
        let m = matrix(&[vec![K, K], vec![D, D], vec![K, A]]);
        let fitted = fit(&m, &FitConfig::default()).unwrap();
        let v: serde_json::Value = serde_json::to_value(&fitted).unwrap();
        for key in ["prior", "accuracies", "propensities", "converged", "iterations"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }

    #[test]
    fn bad_fit_config_rejected() {
        let m = matrix(&[vec![K]]);
        let bad = FitConfig {
            tolerance: 0.0,
            ..FitConfig::default()
        };
        assert!(fit(&m, &bad).is_err());
        let bad = FitConfig {
            max_iterations: 0,
            ..FitConfig::default()
        };
        assert!(fit(&m, &bad).is_err());
    }
}
