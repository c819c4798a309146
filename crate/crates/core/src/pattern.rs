//! Sorted 2×2 dither patterns and the grid they tile.

use crate::dither::IndexedImage;
use crate::{Error, Result};

/// Four color indices of a 2×2 block, sorted ascending.
///
/// Sorting drops the spatial arrangement inside the block, so any
/// permutation of the same four indices yields the same pattern.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DitherPattern([u8; 4]);

impl DitherPattern {
    /// Canonicalizes four raw indices (each in `1..=8`).
    #[inline]
    pub fn new(raw: [u8; 4]) -> Self {
        debug_assert!(raw.iter().all(|c| (1..=8).contains(c)));
        let [mut a, mut b, mut c, mut d] = raw;
        // five compare-exchanges sort four values
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        if c > d {
            std::mem::swap(&mut c, &mut d);
        }
        if a > c {
            std::mem::swap(&mut a, &mut c);
        }
        if b > d {
            std::mem::swap(&mut b, &mut d);
        }
        if b > c {
            std::mem::swap(&mut b, &mut c);
        }
        Self([a, b, c, d])
    }

    pub fn colors(&self) -> [u8; 4] {
        self.0
    }

    /// Number of sorted positions at which the two patterns differ (0..=4).
    #[inline]
    pub fn dissimilarity(&self, other: &DitherPattern) -> u32 {
        let x = u32::from_ne_bytes(self.0) ^ u32::from_ne_bytes(other.0);
        // set the high bit of every non-zero byte (bytes are < 0x80)
        (((x & 0x7f7f_7f7f) + 0x7f7f_7f7f) & 0x8080_8080).count_ones()
    }
}

/// Free-function form of [`DitherPattern::dissimilarity`].
#[inline]
pub fn dissimilarity(a: &DitherPattern, b: &DitherPattern) -> u32 {
    a.dissimilarity(b)
}

/// Non-overlapping 2×2 tiling of an indexed image. Pattern `(i, j)` covers
/// pixels `2i..2i+2` × `2j..2j+2`; an odd trailing row or column is dropped.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternGrid {
    cols: usize,
    rows: usize,
    patterns: Vec<DitherPattern>,
}

impl PatternGrid {
    pub fn from_patterns(cols: usize, rows: usize, patterns: Vec<DitherPattern>) -> Result<Self> {
        if cols == 0 || rows == 0 || patterns.len() != cols * rows {
            return Err(Error::InvalidDimensions(format!(
                "{cols}x{rows} pattern grid with {} patterns",
                patterns.len()
            )));
        }
        Ok(Self {
            cols,
            rows,
            patterns,
        })
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn patterns(&self) -> &[DitherPattern] {
        &self.patterns
    }

    /// Pattern at column `i`, row `j`.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &DitherPattern {
        &self.patterns[j * self.cols + i]
    }
}

pub fn build_grid(indexed: &IndexedImage) -> Result<PatternGrid> {
    let (w, h) = (indexed.width(), indexed.height());
    if w < 2 || h < 2 {
        return Err(Error::InvalidDimensions(format!(
            "need at least 2x2 pixels to form a pattern, got {w}x{h}"
        )));
    }
    let (cols, rows) = (w / 2, h / 2);
    let idx = indexed.indices();
    let mut patterns = Vec::with_capacity(cols * rows);
    for j in 0..rows {
        let top = &idx[2 * j * w..2 * j * w + w];
        let bottom = &idx[(2 * j + 1) * w..(2 * j + 1) * w + w];
        for i in 0..cols {
            let x = 2 * i;
            patterns.push(DitherPattern::new([
                top[x],
                top[x + 1],
                bottom[x],
                bottom[x + 1],
            ]));
        }
    }
    Ok(PatternGrid {
        cols,
        rows,
        patterns,
    })
}
