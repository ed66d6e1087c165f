//! Turns operator scores into weak labels with top-K candidate LFs and
//! reports coverage, overlap and conflict.
//!
//!     cargo run --example labeling_functions

use mmcurate::corpus::{SampleId, ScoreTable};
use mmcurate::operators::OperatorId;
use mmcurate::weaklabel::{build_matrix, diagnostics, generate_candidates};

fn main() -> mmcurate::Result<()> {
    let ids: Vec<SampleId> = (0..8).map(|i| SampleId::new(format!("s{i}")).expect("valid id")).collect();
    let clip = [0.31, 0.12, 0.27, 0.33, 0.08, 0.22, 0.30, 0.19];
    let geometry = [0.75, 1.0, 0.05, 0.66, 0.5, 0.9, 0.8, 0.3];
    let scores = ScoreTable::from_columns(
        ids,
        vec![
            (OperatorId::new("clip")?, clip.iter().map(|s| Some(*s)).collect()),
            (
                OperatorId::new("geometry")?,
                geometry.iter().enumerate().map(|(i, s)| (i != 4).then_some(*s)).collect(),
            ),
        ],
    )?;

    let grid = generate_candidates(&scores, &[25, 50], &[0.0, 0.5])?;
    for op in &grid.operators {
        for lf in &op.candidates {
            println!("candidate {lf}");
        }
    }
    println!("{} combinations (each operator may also be excluded)", grid.combination_count().unwrap_or(0));

    let lfs = vec![grid.operators[0].candidates[2].clone(), grid.operators[1].candidates[3].clone()];
    let matrix = build_matrix(&lfs, &scores)?;
    print!("{}", matrix.to_csv_string());
    let d = diagnostics(&matrix)?;
    println!("coverage {:.3} overlap {:.3} conflict {:.3}", d.coverage, d.overlap, d.conflict);
    for (lf, p) in lfs.iter().zip(&d.per_lf) {
        println!("  {lf}: coverage {:.3} overlap {:.3} conflict {:.3}", p.coverage, p.overlap, p.conflict);
    }
    Ok(())
}
