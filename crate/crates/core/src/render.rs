//! Grayscale output: min-max normalization, binary PGM and an SVG wrapper.

use std::fmt::Write as _;
use std::path::Path;

use crate::{Error, Result, Tensor};

/// Rescales to `[0, 1]`; a constant input maps to all zeros.
pub fn normalize_min_max(x: &Tensor) -> Tensor {
    let (lo, hi) = (x.min(), x.max());
    let span = hi - lo;
    if !(span > 0.0) {
        return Tensor::zeros(x.shape());
    }
    x.map(|v| (v - lo) / span)
}

fn image_dims(shape: &[usize]) -> Result<(usize, usize)> {
    match *shape {
        [h, w] => Ok((h, w)),
        [n] => Ok((1, n)),
        _ => Err(Error::dims("[height, width]", shape)),
    }
}

/// A decoded graymap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub pixels: Vec<u16>,
}

impl GrayImage {
    /// Pixel values divided by `maxval`, shaped `[height, width]`.
    pub fn to_tensor(&self) -> Tensor {
        let m = f64::from(self.maxval);
        let data = self.pixels.iter().map(|&p| f64::from(p) / m).collect();
        Tensor::new(vec![self.height, self.width], data).expect("pixel count matches dims")
    }
}

/// 8-bit binary PGM of the min-max normalized input.
pub fn encode_pgm(x: &Tensor) -> Result<Vec<u8>> {
    let (h, w) = image_dims(x.shape())?;
    let norm = normalize_min_max(x);
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.extend(norm.data().iter().map(|v| (v * 255.0).round() as u8));
    Ok(out)
}

/// Parses binary (`P5`) graymaps with 8- or 16-bit samples.
pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    if !bytes.starts_with(b"P5") {
        return Err(Error::format(0, "missing P5 magic"));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(Error::format(pos, "expected a header number"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .expect("digits")
            .parse()
            .map_err(|_| Error::format(start, "header number out of range"))?;
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::format(pos, "expected whitespace after maxval"));
    }
    pos += 1;
    let [width, height, maxval] = fields;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::format(pos, format!("maxval {maxval} outside 1..=65535")));
    }
    let bpp = if maxval < 256 { 1 } else { 2 };
    let need = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(bpp))
        .ok_or_else(|| Error::format(pos, "image too large"))?;
    let body = &bytes[pos..];
    if body.len() < need {
        return Err(Error::format(bytes.len(), format!("need {need} pixel bytes, have {}", body.len())));
    }
    let pixels: Vec<u16> = if bpp == 1 {
        body[..need].iter().map(|&b| u16::from(b)).collect()
    } else {
        body[..need].chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
    };
    if let Some(i) = pixels.iter().position(|&p| usize::from(p) > maxval) {
        return Err(Error::format(pos + i * bpp, "pixel exceeds maxval"));
    }
    Ok(GrayImage {
        width,
        height,
        maxval: maxval as u16,
        pixels,
    })
}

pub fn write_pgm(x: &Tensor, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode_pgm(x)?)?;
    Ok(())
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    decode_pgm(&std::fs::read(path)?)
}

/// One `<rect>` per pixel, gray level from the normalized value.
pub fn encode_svg(x: &Tensor, cell: usize) -> Result<String> {
    let (h, w) = image_dims(x.shape())?;
    let norm = normalize_min_max(x);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" shape-rendering="crispEdges">"#,
        w * cell,
        h * cell
    );
    for r in 0..h {
        for c in 0..w {
            let g = (norm.data()[r * w + c] * 255.0).round() as u8;
            let _ = writeln!(
                s,
                r#"<rect x="{}" y="{}" width="{cell}" height="{cell}" fill="rgb({g},{g},{g})"/>"#,
                c * cell,
                r * cell
            );
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_input_renders_uniform() {
        let x = Tensor::filled(&[3, 4], 0.7);
        let img = decode_pgm(&encode_pgm(&x).unwrap()).unwrap();
        assert!(img.pixels.iter().all(|&p| p == 0));
    }

    #[test]
    fn normalization_is_idempotent() {
        let x = Tensor::new(vec![2, 2], vec![-1.0, 3.0, 0.5, 2.0]).unwrap();
        let a = normalize_min_max(&x);
        assert!(normalize_min_max(&a).bits_eq(&a));
        assert_eq!(a.min(), 0.0);
        assert_eq!(a.max(), 1.0);
    }

    #[test]
    fn round_trip_within_quantization() {
        let x = Tensor::new(vec![3, 5], (0..15).map(|i| (i as f64 * 0.7).sin()).collect()).unwrap();
        let back = decode_pgm(&encode_pgm(&x).unwrap()).unwrap().to_tensor();
        let norm = normalize_min_max(&x);
        assert_eq!(back.shape(), &[3, 5]);
        for (a, b) in back.data().iter().zip(norm.data()) {
            assert!((a - b).abs() <= 0.5 / 255.0 + 1e-12);
        }
    }

    #[test]
    fn parser_accepts_comments_and_wide_samples() {
        let mut bytes = b"P5 # made by hand\n2 1\n# another\n1000\n".to_vec();
        bytes.extend_from_slice(&[0x03, 0xE8, 0x00, 0x10]);
        let img = decode_pgm(&bytes).unwrap();
        assert_eq!(img.pixels, vec![1000, 16]);
    }

    #[test]
    fn parser_rejects_bad_input() {
        assert!(decode_pgm(b"P2\n1 1\n255\n").is_err());
        assert!(decode_pgm(b"P5\n2 2\n255\n\x00").is_err());
        assert!(decode_pgm(b"P5\n1 1\n0\n\x00").is_err());
        assert!(decode_pgm(b"P5\n1 1\n10\n\x0b").is_err());
        assert!(decode_pgm(b"P5\n99999999999999999999 1\n255\n").is_err());
    }

    #[test]
    fn svg_has_one_rect_per_pixel() {
        let s = encode_svg(&Tensor::zeros(&[2, 3]), 4).unwrap();
        assert_eq!(s.matches("<rect").count(), 6);
    }
}
