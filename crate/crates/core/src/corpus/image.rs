use std::path::Path;

use crate::error::{Error, Result};

/// Row-major 8-bit image with 1 (gray) or 3 (RGB) interleaved channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    channels: usize,
    pixels: Vec<u8>,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize, channels: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Image(format!("zero dimension {width}x{height}")));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::Image(format!("unsupported channel count {channels}")));
        }
        if pixels.len() != width * height * channels {
            return Err(Error::Image(format!(
                "payload of {} bytes does not match {width}x{height}x{channels}",
                pixels.len()
            )));
        }
        Ok(ImageBuffer {
            width,
            height,
            channels,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    /// Gray plane; RGB is converted with 0.299R + 0.587G + 0.114B, rounded.
    pub fn luminance(&self) -> Vec<u8> {
        match self.channels {
            1 => self.pixels.clone(),
            _ => self
                .pixels
                .chunks_exact(3)
                .map(|p| {
                    let y = 0.299 * f64::from(p[0]) + 0.587 * f64::from(p[1]) + 0.114 * f64::from(p[2]);
                    y.round().clamp(0.0, 255.0) as u8
                })
                .collect(),
        }
    }
}

/// Decodes PGM (P5), PPM (P6), PNG or JPEG, chosen by magic bytes.
pub fn decode_image(path: impl AsRef<Path>) -> Result<ImageBuffer> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_bytes(&bytes)
}

pub(crate) fn decode_bytes(bytes: &[u8]) -> Result<ImageBuffer> {
    match bytes {
        [b'P', b'5', ..] => decode_pnm(bytes, 1),
        [b'P', b'6', ..] => decode_pnm(bytes, 3),
        [0x89, b'P', b'N', b'G', ..] | [0xFF, 0xD8, 0xFF, ..] => decode_with_image_crate(bytes),
        _ => Err(Error::Image("unsupported image format".into())),
    }
}

fn decode_with_image_crate(bytes: &[u8]) -> Result<ImageBuffer> {
    let img = image::load_from_memory(bytes).map_err(|e| Error::Image(e.to_string()))?;
    match img.color().channel_count() {
        1 | 2 => {
            let g = img.to_luma8();
            let (w, h) = g.dimensions();
            ImageBuffer::new(w as usize, h as usize, 1, g.into_raw())
        }
        _ => {
            let rgb = img.to_rgb8();
            let (w, h) = rgb.dimensions();
            ImageBuffer::new(w as usize, h as usize, 3, rgb.into_raw())
        }
    }
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&c| c != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Image(format!("bad PNM header: missing {what}")))
    }
}

fn decode_pnm(bytes: &[u8], channels: usize) -> Result<ImageBuffer> {
    let mut cur = HeaderCursor { bytes, pos: 2 };
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval = cur.number("maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::Image(format!("unsupported PNM maxval {maxval}")));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(Error::Image("truncated PNM header".into())),
    }
    let need = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| Error::Image("PNM dimensions overflow".into()))?;
    let payload = &bytes[cur.pos..];
    if payload.len() < need {
        return Err(Error::Image(format!(
            "truncated payload: expected {need} bytes, found {}",
            payload.len()
        )));
    }
    if payload.len() > need {
        return Err(Error::Image(format!(
            "payload of {} bytes exceeds {width}x{height}x{channels}",
            payload.len()
        )));
    }
    ImageBuffer::new(width, height, channels, payload.to_vec())
}

/// Binary PGM/PPM encoding with maxval 255.
pub fn encode_pnm(image: &ImageBuffer) -> Vec<u8> {
    let magic = if image.channels == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend_from_slice(&image.pixels);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p5_two_by_two() {
        let img = decode_bytes(b"P5\n2 2\n255\n\x00\x40\x80\xff").unwrap();
        assert_eq!(img, ImageBuffer::new(2, 2, 1, vec![0, 64, 128, 255]).unwrap());
    }

    #[test]
    fn p5_truncated_payload() {
        let err = decode_bytes(b"P5\n2 2\n255\n\x00\x40\x80").unwrap_err();
        assert!(err.to_string().contains("truncated"), "{err}");
    }

    #[test]
    fn p6_one_pixel() {
        let img = decode_bytes(b"P6 1 1 255\n\x0a\x14\x1e").unwrap();
        assert_eq!(img, ImageBuffer::new(1, 1, 3, vec![10, 20, 30]).unwrap());
    }

    #[test]
    fn header_comments_are_skipped() {
        let img = decode_bytes(b"P5\n# made by hand\n1 1\n# max\n255\n\x07").unwrap();
        assert_eq!(img.pixels(), &[7]);
    }

    #[test]
    fn unsupported_and_mismatched() {
        assert!(decode_bytes(b"GIF89a....").is_err());
        assert!(decode_bytes(b"P5\n1 1\n255\n\x00\x00").is_err());
        assert!(decode_bytes(b"P5\n0 1\n255\n").is_err());
    }

    #[test]
    fn encode_decode_is_identity() {
        let img = ImageBuffer::new(3, 2, 3, (0..18).collect()).unwrap();
        assert_eq!(decode_bytes(&encode_pnm(&img)).unwrap(), img);
    }

    #[test]
    fn png_decodes_through_image_crate() {
        let mut png = Vec::new();
        let src = image::GrayImage::from_raw(2, 1, vec![5, 250]).unwrap();
        src.write_to(&mut std::io::Cursor::new(&mut png), image::ImageFormat::Png)
            .unwrap();
        let img = decode_bytes(&png).unwrap();
        assert_eq!((img.width(), img.height(), img.channels()), (2, 1, 1));
        assert_eq!(img.pixels(), &[5, 250]);
    }

    #[test]
    fn luminance_rounds_to_nearest() {
        // 0.299*10 + 0.587*20 + 0.114*30 = 18.15
        let img = ImageBuffer::new(1, 1, 3, vec![10, 20, 30]).unwrap();
        assert_eq!(img.luminance(), vec![18]);
        let white = ImageBuffer::new(1, 1, 3, vec![255, 255, 255]).unwrap();
        assert_eq!(white.luminance(), vec![255]);
    }
}
