//! Searches LF combinations on a synthetic corpus and prints the ranking.
//!
//!     cargo run --release --example lf_search

use mmcurate::corpus::ScoreTable;
use mmcurate::labelmodel::FitConfig;
use mmcurate::operators::OperatorId;
use mmcurate::search::{build_tiny_eval, search, CompositeWeights, SearchConfig};
use mmcurate::synthbench::{generate, SynthConfig};
use mmcurate::weaklabel::generate_candidates;

fn columns(table: &ScoreTable, ops: &[&str]) -> mmcurate::Result<ScoreTable> {
    let cols = ops
        .iter()
        .map(|o| Ok((OperatorId::new(*o)?, table.column(o).expect("generated column"))))
        .collect::<mmcurate::Result<Vec<_>>>()?;
    ScoreTable::from_columns(table.sample_ids().to_vec(), cols)
}

fn main() -> mmcurate::Result<()> {
    let corpus = generate(&SynthConfig {
        n: 3000,
        images: false,
        seed: 3,
        ..SynthConfig::default()
    })?;
    let ops = ["clip", "language", "watermark"];
    let scores = columns(&corpus.corpus.scores, &ops)?;
    let tiny_scores = columns(&corpus.tiny_scores()?, &ops)?;
    let (_, gold) = build_tiny_eval(&corpus.tiny_clean.manifest, &corpus.tiny_noisy.manifest, 0.5, 3)?;

    let grid = generate_candidates(&scores, &[40, 50, 60], &[0.0, 0.25])?;
    let outcome = search(
        &grid,
        &scores,
        &tiny_scores,
        &gold,
        &CompositeWeights::default(),
        &FitConfig::default(),
        &SearchConfig::default(),
    )?;
    println!("{} combinations evaluated; top five:", outcome.ranking.len());
    for line in outcome.ranking_csv().lines().take(6) {
        println!("  {line}");
    }
    let best = outcome.best_record();
    println!("best: {}", serde_json::to_string_pretty(&best.combination)?);
    Ok(())
}
