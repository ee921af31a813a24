//! Procedural glyph images with exact localization masks.
//!
//! Each sample is a `side × side` image whose background is i.i.d.
//! `N(0, noise_std²)` clipped to `[0, 1]`, identically distributed for all
//! classes. One binary glyph of size `glyph_size × glyph_size` is stamped at
//! intensity 1 at a uniform position; its shape is the class. The class
//! evidence therefore lies entirely inside the glyph's footprint.

use rand::Rng;
use rand_distr::StandardNormal;

use super::Dataset;
use crate::seed::{self, stream};
use crate::{Error, Result, Tensor};

pub const GLYPH_NAMES: [&str; 10] = [
    "cross",
    "frame",
    "diagonal",
    "tee",
    "ell",
    "disk",
    "antidiagonal",
    "saltire",
    "aitch",
    "checker",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MaskKind {
    /// Tight bounding box of the stamped glyph.
    #[default]
    BoundingBox,
    /// Exactly the glyph's pixels.
    Glyph,
}

impl MaskKind {
    pub fn name(self) -> &'static str {
        match self {
            MaskKind::BoundingBox => "box",
            MaskKind::Glyph => "glyph",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "box" => Some(MaskKind::BoundingBox),
            "glyph" => Some(MaskKind::Glyph),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlyphSpec {
    pub n: usize,
    pub side: usize,
    pub glyph_size: usize,
    pub classes: usize,
    pub noise_std: f64,
    pub mask: MaskKind,
}

impl Default for GlyphSpec {
    fn default() -> Self {
        Self {
            n: 1024,
            side: 12,
            glyph_size: 5,
            classes: 4,
            noise_std: 0.3,
            mask: MaskKind::BoundingBox,
        }
    }
}

impl GlyphSpec {
    pub fn validate(&self) -> Result<()> {
        if self.side < 8 {
            return Err(Error::Parameter(format!("side must be >= 8, got {}", self.side)));
        }
        if !(2..=10).contains(&self.classes) {
            return Err(Error::Parameter(format!("glyph classes must be in [2, 10], got {}", self.classes)));
        }
        if self.glyph_size < 5 {
            return Err(Error::Parameter(format!("glyph_size must be >= 5, got {}", self.glyph_size)));
        }
        if self.glyph_size > self.side {
            return Err(Error::Parameter(format!(
                "glyph of size {} does not fit a {}x{} image",
                self.glyph_size, self.side, self.side
            )));
        }
        if !(self.noise_std >= 0.0) || !self.noise_std.is_finite() {
            return Err(Error::Parameter(format!("noise_std must be >= 0, got {}", self.noise_std)));
        }
        Ok(())
    }
}

/// Row-major `size × size` stencil for glyph `class`.
pub fn glyph_pattern(class: usize, size: usize) -> Vec<bool> {
    let g = size;
    let mid = g / 2;
    let c = (g as f64 - 1.0) / 2.0;
    let mut out = vec![false; g * g];
    for r in 0..g {
        for col in 0..g {
            out[r * g + col] = match class {
                0 => r == mid || col == mid,
                1 => r == 0 || r == g - 1 || col == 0 || col == g - 1,
                2 => r == col,
                3 => r == 0 || col == mid,
                4 => col == 0 || r == g - 1,
                5 => {
                    let (dr, dc) = (r as f64 - c, col as f64 - c);
                    dr * dr + dc * dc <= (c + 0.5) * (c + 0.5)
                }
                6 => r + col == g - 1,
                7 => r == col || r + col == g - 1,
                8 => col == 0 || col == g - 1 || r == mid,
                9 => (r + col) % 2 == 0,
                _ => panic!("glyph class {class} out of range"),
            };
        }
    }
    out
}

pub fn make_masked_glyph(spec: &GlyphSpec, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    let side = spec.side;
    let g = spec.glyph_size;
    let stencils: Vec<Vec<bool>> = (0..spec.classes).map(|c| glyph_pattern(c, g)).collect();

    let mut inputs = Vec::with_capacity(spec.n);
    let mut labels = Vec::with_capacity(spec.n);
    let mut masks = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let mut rng = seed::rng(seed::mix(seed, stream::DATA, i as u64));
        let class = i % spec.classes;
        let top = rng.random_range(0..=side - g);
        let left = rng.random_range(0..=side - g);

        let mut img: Vec<f64> = (0..side * side)
            .map(|_| (spec.noise_std * rng.sample::<f64, _>(StandardNormal)).clamp(0.0, 1.0))
            .collect();
        let mut mask = vec![0.0; side * side];
        let (mut r0, mut r1, mut c0, mut c1) = (usize::MAX, 0, usize::MAX, 0);
        for r in 0..g {
            for c in 0..g {
                if stencils[class][r * g + c] {
                    let (y, x) = (top + r, left + c);
                    img[y * side + x] = 1.0;
                    if spec.mask == MaskKind::Glyph {
                        mask[y * side + x] = 1.0;
                    }
                    r0 = r0.min(y);
                    r1 = r1.max(y);
                    c0 = c0.min(x);
                    c1 = c1.max(x);
                }
            }
        }
        if spec.mask == MaskKind::BoundingBox {
            for y in r0..=r1 {
                for x in c0..=c1 {
                    mask[y * side + x] = 1.0;
                }
            }
        }
        inputs.push(Tensor::new(vec![side, side], img)?);
        masks.push(Tensor::new(vec![side, side], mask)?);
        labels.push(class);
    }
    Dataset::new(
        format!("glyph-{}c-{}px-{}", spec.classes, side, spec.mask.name()),
        vec![side, side],
        spec.classes,
        inputs,
        labels,
        Some(masks),
    )
}
