//! Fits the label model on votes sampled from known accuracies and compares
//! it with majority vote and random weights.
//!
//!     cargo run --example label_model

use mmcurate::corpus::SampleId;
use mmcurate::labelmodel::{fit, lf_weights, majority_vote, random_params, score_all, FitConfig};
use mmcurate::operators::OperatorId;
use mmcurate::stats::auc;
use mmcurate::weaklabel::{LabelMatrix, LfSpec, WeakLabel};
use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

fn main() -> mmcurate::Result<()> {
    let accuracies = [0.9, 0.75, 0.6, 0.55];
    let (n, propensity) = (5000, 0.7);
    let mut rng = SplitMix64::seed_from_u64(1);
    let mut truth = Vec::with_capacity(n);
    let mut cells = Vec::with_capacity(n * accuracies.len());
    for _ in 0..n {
        let y = rng.random_bool(0.5);
        truth.push(y);
        for &a in &accuracies {
            cells.push(match (rng.random_bool(propensity), rng.random_bool(a) == y) {
                (false, _) => WeakLabel::Abstain,
                (true, true) => WeakLabel::Keep,
                (true, false) => WeakLabel::Drop,
            });
        }
    }
    let ids: Vec<SampleId> = (0..n).map(|i| SampleId::new(format!("x{i}")).expect("valid id")).collect();
    let lfs = (0..accuracies.len())
        .map(|j| LfSpec::new(OperatorId::new(format!("lf{j}"))?, 0.0, 0.0))
        .collect::<mmcurate::Result<Vec<_>>>()?;
    let matrix = LabelMatrix::new(ids.clone(), lfs, cells)?;

    let model = fit(&matrix, &FitConfig::default())?;
    println!(
        "converged={} after {} iterations, prior {:.3}",
        model.converged, model.iterations, model.params.prior
    );
    for (w, a) in lf_weights(&model.params).iter().zip(accuracies) {
        println!("  true {a:.2}  fitted {:.3}  log-odds {:+.3}", w.weight, w.log_odds);
    }

    let rank_auc = |scores: &std::collections::BTreeMap<SampleId, f64>| {
        let s: Vec<f64> = ids.iter().map(|id| scores[id]).collect();
        auc(&s, &truth).unwrap_or(f64::NAN)
    };
    println!("AUC label model   {:.4}", rank_auc(&score_all(&model.params, &matrix)?));
    println!("AUC majority vote {:.4}", rank_auc(&majority_vote(&matrix)));
    println!("AUC random params {:.4}", rank_auc(&score_all(&random_params(accuracies.len(), 3)?, &matrix)?));
    Ok(())
}
