//! Generates a synthetic corpus with known labels and measures how well
//! single operators rank it.
//!
//!     cargo run --release --example synthetic_benchmark [out_dir]

use mmcurate::synthbench::{generate, operator_auc, SynthConfig};

fn main() -> mmcurate::Result<()> {
    let config = SynthConfig {
        images: std::env::args().nth(1).is_some(),
        ..SynthConfig::default()
    };
    let corpus = generate(&config)?;
    let positives = corpus.truth.labels.values().filter(|l| **l).count();
    println!(
        "{} samples, {:.3} high quality, {} planted duplicate groups",
        config.n,
        positives as f64 / config.n as f64,
        corpus.truth.groups.len()
    );
    for op in &config.operators {
        let auc = operator_auc(&corpus.corpus.scores, op.name.as_str(), &corpus.truth).unwrap_or(f64::NAN);
        println!("  {:<10} informative={:<5} AUC {auc:.3}", op.name, op.informative);
    }
    println!("digest {}", corpus.digest()?);
    if let Some(dir) = std::env::args().nth(1) {
        let layout = corpus.write_to(&dir)?;
        println!("wrote {}", layout.manifest.display());
    }
    Ok(())
}
