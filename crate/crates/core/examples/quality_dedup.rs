//! Perceptual-hash deduplication that keeps the best-aligned member of each
//! duplicate group.
//!
//!     cargo run --example quality_dedup

use std::collections::BTreeMap;

use mmcurate::corpus::{ImageBuffer, SampleId};
use mmcurate::dedup::{cluster_duplicates, phash64, retain_best, text_hash, DedupConfig, HashedSample};

fn pattern(seed: u32, w: usize, h: usize) -> ImageBuffer {
    let px = (0..w * h)
        .map(|i| {
            let (x, y) = ((i % w) as u32, (i / w) as u32);
            ((x * seed + y * (seed ^ 5) + (x * y) / 3) % 251) as u8
        })
        .collect();
    ImageBuffer::new(w, h, 1, px).expect("valid size")
}

fn main() -> mmcurate::Result<()> {
    let base = pattern(7, 40, 30);
    let mut tweaked = base.pixels().to_vec();
    tweaked[100] = tweaked[100].saturating_add(9);
    let near = ImageBuffer::new(40, 30, 1, tweaked)?;

    let samples = [
        ("a", base.clone(), "a cat on a sofa", Some(0.29)),
        ("b", near, "a cat on a sofa", Some(0.33)),
        ("c", base, "A  cat on a sofa ", None),
        ("d", pattern(13, 32, 32), "a boat at night", Some(0.21)),
    ];
    let hashed: Vec<HashedSample> = samples
        .iter()
        .map(|(id, img, caption, _)| HashedSample {
            id: SampleId::new(*id).expect("valid id"),
            phash: Some(phash64(img)),
            text: text_hash(caption),
        })
        .collect();
    for h in &hashed {
        println!("{} phash={} text={:016x}", h.id, h.phash.expect("hashed"), h.text);
    }

    let alignment: BTreeMap<SampleId, Option<f64>> = samples
        .iter()
        .map(|(id, _, _, s)| (SampleId::new(*id).expect("valid id"), *s))
        .collect();
    let groups = cluster_duplicates(&hashed, &DedupConfig::default())?;
    let kept = retain_best(&groups, &alignment)?;
    for (g, k) in groups.iter().zip(&kept) {
        let members: Vec<&str> = g.members.iter().map(SampleId::as_str).collect();
        println!("group {members:?} -> keep {k}");
    }
    Ok(())
}
