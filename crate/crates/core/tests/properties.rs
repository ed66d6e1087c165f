use std::collections::BTreeMap;

use mmcurate::corpus::{ImageBuffer, SampleId};
use mmcurate::dedup::{self, DedupConfig, DuplicateGroup, HashedSample, PHash64};
use mmcurate::labelmodel::{self, FitConfig, LabelModelParams};
use mmcurate::operators::{self, GdinoThreshold, OperatorId};
use mmcurate::search::{self, CompositeWeights};
use mmcurate::weaklabel::{self, Diagnostics, LabelMatrix, LfSpec, WeakLabel};
use proptest::prelude::*;

fn sid(i: usize) -> SampleId {
    SampleId::new(format!("s{i:03}")).unwrap()
}

fn lf(j: usize) -> LfSpec {
    LfSpec::new(OperatorId::new(format!("op{j}")).unwrap(), 0.0, 0.0).unwrap()
}

fn label() -> impl Strategy<Value = WeakLabel> {
    prop_oneof![Just(WeakLabel::Keep), Just(WeakLabel::Drop), Just(WeakLabel::Abstain)]
}

fn rows(max_n: usize, max_m: usize) -> impl Strategy<Value = Vec<Vec<WeakLabel>>> {
    (1..=max_m).prop_flat_map(move |m| prop::collection::vec(prop::collection::vec(label(), m), 1..=max_n))
}

fn matrix(rows: &[Vec<WeakLabel>]) -> LabelMatrix {
    let m = rows[0].len();
    LabelMatrix::new(
        (0..rows.len()).map(sid).collect(),
        (0..m).map(lf).collect(),
        rows.concat(),
    )
    .unwrap()
}

fn global(d: &Diagnostics) -> [f64; 3] {
    [d.coverage, d.overlap, d.conflict]
}

proptest! {
    #[test]
    fn lf_cases_partition_and_are_monotone(s1 in -10.0..10.0f64, s2 in -10.0..10.0f64, b in -5.0..5.0f64, beta in 0.0..3.0f64) {
        let spec = LfSpec::new(OperatorId::new("x").unwrap(), b, beta).unwrap();
        let l1 = spec.label(Some(s1));
        let cases = [s1 >= b + beta, s1 <= b - beta && s1 < b + beta, s1 > b - beta && s1 < b + beta];
        prop_assert_eq!(cases.iter().filter(|c| **c).count(), 1);
        let (lo, hi) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
        prop_assert!(!(spec.label(Some(lo)) == WeakLabel::Keep && spec.label(Some(hi)) == WeakLabel::Drop));
        if beta == 0.0 {
            prop_assert_ne!(l1, WeakLabel::Abstain);
        }
        prop_assert_eq!(spec.label(None), WeakLabel::Abstain);
    }

    #[test]
    fn diagnostics_ordered_and_bounded(r in rows(40, 6)) {
        let d = weaklabel::diagnostics(&matrix(&r)).unwrap();
        prop_assert!(0.0 <= d.conflict && d.conflict <= d.overlap && d.overlap <= d.coverage && d.coverage <= 1.0);
        for p in &d.per_lf {
            prop_assert!(p.conflict <= p.overlap && p.overlap <= p.coverage);
        }
    }

    #[test]
    fn diagnostics_permutation_invariant(r in rows(30, 5), rot in 0usize..30, col in 0usize..5) {
        let base = weaklabel::diagnostics(&matrix(&r)).unwrap();
        let mut rows_rot = r.clone();
        let k = rot % rows_rot.len();
        rows_rot.rotate_left(k);
        prop_assert_eq!(global(&weaklabel::diagnostics(&matrix(&rows_rot)).unwrap()), global(&base));
        let m = r[0].len();
        let c = col % m;
        let swapped: Vec<Vec<WeakLabel>> = r.iter().map(|row| {
            let mut row = row.clone();
            row.rotate_left(c);
            row
        }).collect();
        prop_assert_eq!(global(&weaklabel::diagnostics(&matrix(&swapped)).unwrap()), global(&base));
    }

    #[test]
    fn geometry_symmetric(w in 1usize..5000, h in 1usize..5000) {
        let g = operators::geometry_score(w, h).unwrap();
        prop_assert_eq!(g, operators::geometry_score(h, w).unwrap());
        prop_assert!(g > 0.0 && g <= 1.0);
        prop_assert_eq!(g == 1.0, w == h);
    }

    #[test]
    fn gdino_monotone_in_threshold(conf in prop::collection::vec(0.0..=1.0f64, 0..20), t1 in 0.0..0.99f64, t2 in 0.0..0.99f64) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let c_lo = operators::gdino_count(&conf, GdinoThreshold::new(lo).unwrap()).unwrap();
        let c_hi = operators::gdino_count(&conf, GdinoThreshold::new(hi).unwrap()).unwrap();
        prop_assert!(c_hi <= c_lo && c_lo <= conf.len());
    }

    #[test]
    fn blur_ignores_constant_offset(w in 3usize..12, h in 3usize..12, seed in any::<u64>(), offset in 0u8..60) {
        let px: Vec<u8> = (0..w * h).map(|i| ((seed.rotate_left(i as u32 % 64) ^ i as u64) % 190) as u8).collect();
        let shifted: Vec<u8> = px.iter().map(|p| p + offset).collect();
        let a = operators::blur_score(&ImageBuffer::new(w, h, 1, px).unwrap());
        let b = operators::blur_score(&ImageBuffer::new(w, h, 1, shifted).unwrap());
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
    }

    #[test]
    fn retain_best_ignores_member_order(scores in prop::collection::vec(prop::option::of(0u8..5), 1..12), rot in 0usize..12) {
        let ids: Vec<SampleId> = (0..scores.len()).map(sid).collect();
        let alignment: BTreeMap<SampleId, Option<f64>> =
            ids.iter().cloned().zip(scores.iter().map(|s| s.map(f64::from))).collect();
        let mut rotated = ids.clone();
        rotated.rotate_left(rot % ids.len());
        let a = dedup::retain_best(&[DuplicateGroup { members: ids }], &alignment).unwrap();
        let b = dedup::retain_best(&[DuplicateGroup { members: rotated }], &alignment).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn posterior_flip_symmetry(row in prop::collection::vec(label(), 1..6), accs in prop::collection::vec(0.05..0.95f64, 6), prior in 0.05..0.95f64) {
        let m = row.len();
        let params = LabelModelParams { prior, accuracies: accs[..m].to_vec(), propensities: vec![1.0; m] };
        let p = labelmodel::posterior(&params, &row).unwrap();
        prop_assert!(p > 0.0 && p < 1.0);
        // relabelled classes, same votes
        let q = labelmodel::posterior(&params.flipped(), &row).unwrap();
        prop_assert!((p - (1.0 - q)).abs() < 1e-12);
        // flipped votes, mirrored prior, same accuracies
        let flipped_row: Vec<WeakLabel> = row.iter().map(|l| l.flipped()).collect();
        let mirrored = LabelModelParams { prior: 1.0 - prior, ..params.clone() };
        let r = labelmodel::posterior(&mirrored, &flipped_row).unwrap();
        prop_assert!((p - (1.0 - r)).abs() < 1e-12);
    }

    #[test]
    fn abstaining_column_changes_nothing(row in prop::collection::vec(label(), 1..6), accs in prop::collection::vec(0.05..0.95f64, 7), extra in 0.05..0.95f64) {
        let m = row.len();
        let params = LabelModelParams { prior: 0.4, accuracies: accs[..m].to_vec(), propensities: vec![0.5; m] };
        let mut wider = params.clone();
        wider.accuracies.push(extra);
        wider.propensities.push(0.5);
        let mut row2 = row.clone();
        row2.push(WeakLabel::Abstain);
        prop_assert_eq!(labelmodel::posterior(&params, &row).unwrap(), labelmodel::posterior(&wider, &row2).unwrap());
    }

    #[test]
    fn fit_is_deterministic(r in rows(60, 4)) {
        let mx = matrix(&r);
        match (labelmodel::fit(&mx, &FitConfig::default()), labelmodel::fit(&mx, &FitConfig::default())) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(&a, &b);
                prop_assert!(a.params.accuracies.iter().all(|x| (0.05..=0.95).contains(x)));
                let mean = a.params.accuracies.iter().sum::<f64>() / a.params.accuracies.len() as f64;
                prop_assert!(mean >= 0.5);
                for w in a.log_likelihood_trace.windows(2) {
                    prop_assert!(w[1] >= w[0] - 1e-9);
                }
            }
            (Err(_), Err(_)) => prop_assert!(r.iter().flatten().all(|l| *l == WeakLabel::Abstain)),
            _ => prop_assert!(false, "fit not deterministic"),
        }
    }

    #[test]
    fn composite_metric_monotone(f1 in 0.0..1.0f64, cov in 0.0..1.0f64, ovl in 0.0..1.0f64, con in 0.0..1.0f64, step in 0.0..0.5f64) {
        let w = CompositeWeights::default();
        let d = |cov, con| Diagnostics { coverage: cov, overlap: ovl, conflict: con, per_lf: vec![] };
        let base = search::composite_metric(f1, &d(cov, con), &w);
        prop_assert!(search::composite_metric(f1 + step, &d(cov, con), &w) >= base);
        prop_assert!(search::composite_metric(f1, &d(cov + step, con), &w) >= base);
        prop_assert!(search::composite_metric(f1, &d(cov, con + step), &w) <= base);
    }

    #[test]
    fn clustering_matches_brute_force(
        bases in prop::collection::vec(any::<u64>(), 1..20),
        flips in prop::collection::vec((0usize..20, 0u32..64, 0u32..64), 0..60),
        radius in 0u32..5,
    ) {
        let mut hashes = bases.clone();
        for (b, x, y) in flips {
            hashes.push(bases[b % bases.len()] ^ (1 << x) ^ (1 << y));
        }
        let samples: Vec<HashedSample> = hashes.iter().enumerate()
            .map(|(i, h)| HashedSample { id: sid(i), phash: Some(PHash64(*h)), text: 0 })
            .collect();
        let config = DedupConfig { radius, ..DedupConfig::default() };
        let groups = dedup::cluster_duplicates(&samples, &config).unwrap();

        let n = hashes.len();
        let mut comp: Vec<usize> = (0..n).collect();
        loop {
            let mut changed = false;
            for i in 0..n {
                for j in 0..n {
                    if dedup::hamming(hashes[i], hashes[j]) <= radius && comp[j] < comp[i] {
                        comp[i] = comp[j];
                        changed = true;
                    }
                }
            }
            if !changed { break; }
        }
        let mut want: BTreeMap<usize, Vec<SampleId>> = BTreeMap::new();
        for (i, c) in comp.iter().enumerate() {
            want.entry(*c).or_default().push(sid(i));
        }
        let mut want: Vec<Vec<SampleId>> = want.into_values().collect();
        let mut got: Vec<Vec<SampleId>> = groups.into_iter().map(|g| { let mut m = g.members; m.sort(); m }).collect();
        want.sort();
        got.sort();
        prop_assert_eq!(got, want);
    }
}
