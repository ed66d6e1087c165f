//! Loads a manifest, a score table with blank cells and a detections file,
//! then writes a curated subset.
//!
//!     cargo run --example ingest_corpus

use std::collections::BTreeMap;

use mmcurate::corpus::{self, SampleId};

fn main() -> mmcurate::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    let root = dir.path();
    std::fs::write(
        root.join("manifest.jsonl"),
        concat!(
            r#"{"id":"a","image_path":"a.pgm","caption":"a dog on a beach"}"#,
            "\n",
            r#"{"id":"b","image_path":"b.pgm","caption":"a red bicycle","meta":{"source":"web"}}"#,
            "\n",
            r#"{"id":"c","image_path":"","caption":"text only"}"#,
            "\n",
        ),
    )
    .expect("write manifest");
    // rows in any order; blank cells are missing, not zero
    std::fs::write(root.join("scores.csv"), "sample_id,clip,language\nc,0.12,0.9\na,0.31,\nb,0.29,0.7\n")
        .expect("write scores");
    std::fs::write(
        root.join("detections.jsonl"),
        "{\"id\":\"a\",\"confidences\":[0.3,0.05,0.12]}\n",
    )
    .expect("write detections");

    let manifest = corpus::load_manifest(root.join("manifest.jsonl"))?;
    let scores = corpus::load_score_table(root.join("scores.csv"), &manifest)?;
    let detections = corpus::load_detections(root.join("detections.jsonl"))?;

    for rec in manifest.samples() {
        println!(
            "{:<2} clip={:?} language={:?} detections={:?} caption={:?}",
            rec.id.as_str(),
            scores.value(rec.id.as_str(), "clip"),
            scores.value(rec.id.as_str(), "language"),
            detections.get(rec.id.as_str()),
            rec.caption,
        );
    }

    let quality: BTreeMap<SampleId, f64> = scores
        .column_map("clip")
        .expect("clip column")
        .into_iter()
        .filter_map(|(id, s)| s.map(|s| (id, s)))
        .collect();
    let kept: Vec<SampleId> = quality.keys().cloned().collect();
    let out = root.join("curated.csv");
    corpus::write_subset(&manifest, &kept, &quality, &out)?;
    print!("{}", std::fs::read_to_string(out).expect("read back"));
    Ok(())
}
