//! Full curation run on a synthetic corpus: dedup, scoring, LF search, fit,
//! top-40% selection and the per-LF report. Compares the curated set with
//! the hidden labels.
//!
//!     cargo run --release --example end_to_end

use mmcurate::corpus::read_id_list;
use mmcurate::curate::{self, CurationConfig};
use mmcurate::synthbench::{evaluate, generate, SynthConfig};

fn main() -> mmcurate::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    let synth = SynthConfig {
        n: 3000,
        seed: 11,
        ..SynthConfig::default()
    };
    let corpus = generate(&synth)?;
    let layout = corpus.write_to(dir.path())?;
    let ops: Vec<_> = synth.operators.iter().map(|o| o.name.clone()).collect();
    let config_path = dir.path().join("config.toml");
    CurationConfig::for_synth(&layout, &ops, synth.seed).save(&config_path)?;
    let config = CurationConfig::load(&config_path)?;

    let out = dir.path().join("run");
    let summary = curate::run_pipeline(&config, &out)?;
    println!(
        "{} samples -> {} after dedup -> {} curated",
        summary.samples, summary.survivors, summary.curated
    );
    println!("best combination {} (M = {:.4})", summary.best, summary.metric);
    print!("{}", std::fs::read_to_string(out.join(curate::REPORT_CSV_FILE)).expect("report"));

    let text = std::fs::read_to_string(out.join(curate::CURATED_FILE)).expect("curated");
    let kept = text
        .lines()
        .skip(1)
        .map(|l| mmcurate::corpus::SampleId::new(l.split(',').next().unwrap_or_default()))
        .collect::<mmcurate::Result<Vec<_>>>()?;
    let survivors = read_id_list(out.join(curate::KEPT_IDS_FILE))?;
    let m = evaluate(&kept, &corpus.truth, None)?;
    let base = evaluate(&survivors, &corpus.truth, None)?;
    println!("precision of curated set {:.3} (all survivors {:.3})", m.precision, base.precision);
    Ok(())
}
