//! Native image operators on small PGM fixtures: blur (variance of the
//! Laplacian), aspect-ratio geometry and the detection count.
//!
//!     cargo run --example image_operators

use mmcurate::corpus::{decode_image, encode_pnm, ImageBuffer};
use mmcurate::operators::{blur_score, gdino_count, geometry_score, GdinoThreshold};

fn checkerboard(w: usize, h: usize) -> ImageBuffer {
    let px = (0..w * h).map(|i| if (i % w + i / w).is_multiple_of(2) { 0 } else { 255 }).collect();
    ImageBuffer::new(w, h, 1, px).expect("valid size")
}

fn gradient(w: usize, h: usize) -> ImageBuffer {
    let px = (0..w * h).map(|i| ((i % w) * 255 / (w - 1)) as u8).collect();
    ImageBuffer::new(w, h, 1, px).expect("valid size")
}

fn main() -> mmcurate::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    let images = [
        ("sharp", checkerboard(8, 8)),
        ("smooth", gradient(64, 16)),
        ("flat", ImageBuffer::new(20, 20, 1, vec![128; 400])?),
    ];
    for (name, img) in images {
        let path = dir.path().join(format!("{name}.pgm"));
        std::fs::write(&path, encode_pnm(&img)).expect("write fixture");
        let img = decode_image(&path)?;
        println!(
            "{name:<7} {}x{} blur={:>10.1} geometry={:.3}",
            img.width(),
            img.height(),
            blur_score(&img),
            geometry_score(img.width(), img.height())?,
        );
    }

    let confidences = [0.30, 0.05, 0.12, 0.10];
    for t in [0.0, 0.1, 0.2] {
        let n = gdino_count(&confidences, GdinoThreshold::new(t)?)?;
        println!("objects above {t:.1}: {n}");
    }
    Ok(())
}
