//! Eight-color error-diffusion dithering.
//!
//! The dither colors are the corners of the RGB cube. Their indices follow a
//! three-level binary tree (red, then green, then blue), so quantizing a
//! pixel takes exactly three threshold comparisons:
//!
//! | index | color   | R | G | B |
//! |-------|---------|---|---|---|
//! | 1     | black   | 0 | 0 | 0 |
//! | 2     | blue    | 0 | 0 | 1 |
//! | 3     | green   | 0 | 1 | 0 |
//! | 4     | cyan    | 0 | 1 | 1 |
//! | 5     | red     | 1 | 0 | 0 |
//! | 6     | magenta | 1 | 0 | 1 |
//! | 7     | yellow  | 1 | 1 | 0 |
//! | 8     | white   | 1 | 1 | 1 |
//!
//! The quantization error of each pixel is pushed to its right, bottom and
//! bottom-left neighbors in raster order.

use crate::image::{Image, Rotation};
use crate::{Error, Result};

/// Number of dither colors in the RGB-cube palette.
pub const PALETTE_SIZE: usize = 8;

/// The eight RGB cube corners plus the per-channel split points of the search tree.
#[derive(Clone, Debug, PartialEq)]
pub struct DitherPalette {
    colors: [[u8; 3]; PALETTE_SIZE],
    thresholds: [f64; 3],
}

impl DitherPalette {
    pub fn rgb_cube() -> Self {
        let mut colors = [[0u8; 3]; PALETTE_SIZE];
        for (k, c) in colors.iter_mut().enumerate() {
            let bit = |b: usize| if k & b != 0 { 255 } else { 0 };
            *c = [bit(4), bit(2), bit(1)];
        }
        Self {
            colors,
            // midpoint of [0, 255]; values equal to it take the high branch
            thresholds: [127.5; 3],
        }
    }

    /// RGB value of a color index in `1..=8`.
    #[inline]
    pub fn color(&self, index: u8) -> [u8; 3] {
        self.colors[index as usize - 1]
    }

    pub fn colors(&self) -> &[[u8; 3]; PALETTE_SIZE] {
        &self.colors
    }

    pub fn thresholds(&self) -> [f64; 3] {
        self.thresholds
    }
}

impl Default for DitherPalette {
    fn default() -> Self {
        Self::rgb_cube()
    }
}

/// Maps a pixel to the index of its nearest palette corner.
#[inline]
pub fn quantize_pixel(p: [f64; 3], palette: &DitherPalette) -> u8 {
    quantize_with(p, palette, |v, t| v >= t)
}

#[inline(always)]
fn quantize_with(
    p: [f64; 3],
    palette: &DitherPalette,
    mut high: impl FnMut(f64, f64) -> bool,
) -> u8 {
    let [rh, gh, bh] = palette.thresholds;
    let mut index = 1;
    if high(p[0], rh) {
        index += 4;
    }
    if high(p[1], gh) {
        index += 2;
    }
    if high(p[2], bh) {
        index += 1;
    }
    index
}

/// Share of the quantization error sent to each of the three neighbors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiffusionWeights {
    pub right: f64,
    pub bottom: f64,
    pub bottom_left: f64,
}

impl DiffusionWeights {
    pub fn sum(&self) -> f64 {
        self.right + self.bottom + self.bottom_left
    }
}

/// Source of diffusion weights, possibly depending on the pixel being quantized.
///
/// Implementations must return non-negative weights summing to one for every
/// channel.
pub trait CoefficientProvider {
    /// Per-channel weights for a pixel whose pre-quantization value is `pixel`.
    fn weights(&self, pixel: [f64; 3]) -> [DiffusionWeights; 3];
}

/// The same weights for every pixel and channel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixedWeights(DiffusionWeights);

impl FixedWeights {
    pub fn new(right: f64, bottom: f64, bottom_left: f64) -> Result<Self> {
        let w = DiffusionWeights {
            right,
            bottom,
            bottom_left,
        };
        check_weights(&w)?;
        Ok(Self(w))
    }
}

impl Default for FixedWeights {
    /// Floyd–Steinberg weights without the bottom-right tap, renormalized: 7/15, 5/15, 3/15.
    fn default() -> Self {
        Self(DiffusionWeights {
            right: 7.0 / 15.0,
            bottom: 5.0 / 15.0,
            bottom_left: 3.0 / 15.0,
        })
    }
}

impl CoefficientProvider for FixedWeights {
    #[inline]
    fn weights(&self, _pixel: [f64; 3]) -> [DiffusionWeights; 3] {
        [self.0; 3]
    }
}

/// Intensity-indexed weights, one row per 8-bit level, looked up per channel.
///
/// This is the shape of variable-coefficient error diffusion tables; values
/// outside `[0, 255]` use the nearest end of the table.
#[derive(Clone, Debug, PartialEq)]
pub struct TableWeights {
    rows: Vec<DiffusionWeights>,
}

impl TableWeights {
    /// Builds a table from 256 rows of `(right, bottom, bottom_left)`
    /// magnitudes, each row scaled to sum to one.
    pub fn normalized(rows: &[[f64; 3]]) -> Result<Self> {
        if rows.len() != 256 {
            return Err(Error::InvalidConfig(format!(
                "coefficient table needs 256 rows, got {}",
                rows.len()
            )));
        }
        let rows = rows
            .iter()
            .map(|&[r, b, bl]| {
                let sum = r + b + bl;
                if sum.is_nan() || sum <= 0.0 || r < 0.0 || b < 0.0 || bl < 0.0 {
                    return Err(Error::InvalidConfig(format!(
                        "coefficient row ({r}, {b}, {bl}) must be non-negative with a positive sum"
                    )));
                }
                let w = DiffusionWeights {
                    right: r / sum,
                    bottom: b / sum,
                    bottom_left: bl / sum,
                };
                check_weights(&w)?;
                Ok(w)
            })
            .collect::<Result<_>>()?;
        Ok(Self { rows })
    }

    #[inline]
    fn row(&self, v: f64) -> DiffusionWeights {
        self.rows[v.round().clamp(0.0, 255.0) as usize]
    }
}

impl CoefficientProvider for TableWeights {
    #[inline]
    fn weights(&self, pixel: [f64; 3]) -> [DiffusionWeights; 3] {
        [self.row(pixel[0]), self.row(pixel[1]), self.row(pixel[2])]
    }
}

fn check_weights(w: &DiffusionWeights) -> Result<()> {
    let ok = [w.right, w.bottom, w.bottom_left]
        .iter()
        .all(|v| v.is_finite() && *v >= 0.0)
        && (w.sum() - 1.0).abs() <= 1e-9;
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "diffusion weights {w:?} must be non-negative and sum to 1"
        )))
    }
}

/// Splits an error into the amounts sent right, bottom and bottom-left.
#[inline(always)]
pub fn diffuse_error(error: [f64; 3], weights: &[DiffusionWeights; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for c in 0..3 {
        out[0][c] = weights[c].right * error[c];
        out[1][c] = weights[c].bottom * error[c];
        out[2][c] = weights[c].bottom_left * error[c];
    }
    out
}

/// Signed, error-accumulating copy of an image.
#[derive(Clone, Debug)]
pub struct WorkingImage {
    width: usize,
    height: usize,
    pixels: Vec<[f64; 3]>,
}

impl WorkingImage {
    pub fn from_image(img: &Image) -> Self {
        Self {
            width: img.width(),
            height: img.height(),
            pixels: img
                .pixels()
                .iter()
                .map(|p| [p[0] as f64, p[1] as f64, p[2] as f64])
                .collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> [f64; 3] {
        self.pixels[y * self.width + x]
    }

    #[inline(always)]
    fn add(&mut self, idx: usize, v: [f64; 3]) {
        let p = &mut self.pixels[idx];
        p[0] += v[0];
        p[1] += v[1];
        p[2] += v[2];
    }
}

/// Grid of palette indices (`1..=8`), row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexedImage {
    width: usize,
    height: usize,
    indices: Vec<u8>,
}

impl IndexedImage {
    pub fn new(width: usize, height: usize, indices: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || indices.len() != width * height {
            return Err(Error::InvalidDimensions(format!(
                "{width}x{height} indexed image with {} entries",
                indices.len()
            )));
        }
        if let Some(bad) = indices.iter().find(|&&i| !(1..=8).contains(&i)) {
            return Err(Error::InvalidConfig(format!(
                "color index {bad} outside 1..=8"
            )));
        }
        Ok(Self {
            width,
            height,
            indices,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn indices(&self) -> &[u8] {
        &self.indices
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.indices[y * self.width + x]
    }

    /// Maps indices back to palette colors.
    pub fn to_image(&self, palette: &DitherPalette) -> Image {
        Image::new(
            self.width,
            self.height,
            self.indices.iter().map(|&i| palette.color(i)).collect(),
        )
        .expect("same shape")
    }

    /// Same index permutation as [`Image::rotate`].
    pub fn rotate(&self, rotation: Rotation) -> IndexedImage {
        let (w, h) = (self.width, self.height);
        let (nw, nh) = match rotation {
            Rotation::R0 | Rotation::R180 => (w, h),
            Rotation::R90 | Rotation::R270 => (h, w),
        };
        let mut indices = Vec::with_capacity(w * h);
        for y in 0..nh {
            for x in 0..nw {
                indices.push(match rotation {
                    Rotation::R0 => self.get(x, y),
                    Rotation::R90 => self.get(w - 1 - y, x),
                    Rotation::R180 => self.get(w - 1 - x, h - 1 - y),
                    Rotation::R270 => self.get(y, h - 1 - x),
                });
            }
        }
        IndexedImage {
            width: nw,
            height: nh,
            indices,
        }
    }
}

/// Raster-order error-diffusion dithering onto the palette.
///
/// Error pushed past the image border is dropped. The working buffer is not
/// clamped, so accumulated values may leave `[0, 255]`.
pub fn dither<C>(img: &Image, palette: &DitherPalette, coeffs: &C) -> IndexedImage
where
    C: CoefficientProvider + ?Sized,
{
    let mut work = WorkingImage::from_image(img);
    let (w, h) = (work.width, work.height);
    let mut indices = Vec::with_capacity(w * h);
    let corners: [[f64; 3]; PALETTE_SIZE] = palette
        .colors
        .map(|c| [c[0] as f64, c[1] as f64, c[2] as f64]);

    for y in 0..h {
        let has_below = y + 1 < h;
        for x in 0..w {
            let idx = y * w + x;
            let value = work.pixels[idx];
            let q = quantize_pixel(value, palette);
            indices.push(q);
            let corner = corners[q as usize - 1];
            let error = [
                value[0] - corner[0],
                value[1] - corner[1],
                value[2] - corner[2],
            ];
            let [right, bottom, bottom_left] = diffuse_error(error, &coeffs.weights(value));
            if x + 1 < w {
                work.add(idx + 1, right);
            }
            if has_below {
                work.add(idx + w, bottom);
                if x > 0 {
                    work.add(idx + w - 1, bottom_left);
                }
            }
        }
    }
    IndexedImage {
        width: w,
        height: h,
        indices,
    }
}
