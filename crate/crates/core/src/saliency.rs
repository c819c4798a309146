//! Salient pattern detection on the pattern grid.
//!
//! Second derivatives are approximated by pattern dissimilarities between
//! neighboring grid cells. A cell becomes a candidate when the absolute
//! Hessian determinant exceeds the sum of dissimilarities around its 8-cell
//! ring, and candidates survive if no other candidate in a square window is
//! stronger. Cells on the grid border lack a full neighborhood and never
//! become candidates.

use crate::pattern::{DitherPattern, PatternGrid};
use crate::{Error, Result};

/// Default side length of the suppression window, in patterns.
pub const DEFAULT_NMS_WINDOW: usize = 5;

/// Hessian terms at one interior grid cell.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct HessianCell {
    pub lxx: f32,
    pub lyy: f32,
    pub lxy: f32,
    pub det: f32,
    /// `|det|`
    pub strength: f32,
}

/// Hessian terms over a pattern grid; border cells carry no response.
#[derive(Clone, Debug, PartialEq)]
pub struct HessianResponse {
    cols: usize,
    rows: usize,
    cells: Vec<HessianCell>,
}

impl HessianResponse {
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn is_interior(&self, i: usize, j: usize) -> bool {
        i >= 1 && j >= 1 && i + 1 < self.cols && j + 1 < self.rows
    }

    /// Response at `(i, j)`, `None` on the border.
    pub fn get(&self, i: usize, j: usize) -> Option<&HessianCell> {
        self.is_interior(i, j)
            .then(|| &self.cells[j * self.cols + i])
    }
}

/// A grid cell whose response passed the ring threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate {
    pub i: usize,
    pub j: usize,
    pub strength: f32,
}

/// Threshold survivors together with the grid shape they live on.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateSet {
    pub cols: usize,
    pub rows: usize,
    pub candidates: Vec<Candidate>,
}

/// A salient dither pattern.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SdpfPoint {
    /// Pattern-grid column.
    pub i: usize,
    /// Pattern-grid row.
    pub j: usize,
    /// Pixel x of the pattern center, `2i + 1`.
    pub x: f64,
    /// Pixel y of the pattern center, `2j + 1`.
    pub y: f64,
    pub strength: f32,
    pub pattern: DitherPattern,
}

impl SdpfPoint {
    pub fn new(i: usize, j: usize, strength: f32, pattern: DitherPattern) -> Self {
        Self {
            i,
            j,
            x: (2 * i + 1) as f64,
            y: (2 * j + 1) as f64,
            strength,
            pattern,
        }
    }
}

fn check_grid(grid: &PatternGrid) -> Result<()> {
    if grid.cols() < 3 || grid.rows() < 3 {
        return Err(Error::GridTooSmall {
            cols: grid.cols(),
            rows: grid.rows(),
        });
    }
    Ok(())
}

pub fn hessian_response(grid: &PatternGrid) -> Result<HessianResponse> {
    check_grid(grid)?;
    let (cols, rows) = (grid.cols(), grid.rows());
    let p = grid.patterns();
    let mut cells = vec![HessianCell::default(); cols * rows];
    for j in 1..rows - 1 {
        let up = &p[(j - 1) * cols..j * cols];
        let mid = &p[j * cols..(j + 1) * cols];
        let down = &p[(j + 1) * cols..(j + 2) * cols];
        let out = &mut cells[j * cols..(j + 1) * cols];
        for i in 1..cols - 1 {
            let c = &mid[i];
            let lxx = (mid[i - 1].dissimilarity(c) + c.dissimilarity(&mid[i + 1])) as f32;
            let lyy = (up[i].dissimilarity(c) + c.dissimilarity(&down[i])) as f32;
            // the four diagonal pairs; the last pair shares (i+1, j+1) with the second
            let diag = up[i - 1].dissimilarity(&down[i - 1])
                + up[i + 1].dissimilarity(&down[i + 1])
                + up[i - 1].dissimilarity(&down[i + 1])
                + down[i - 1].dissimilarity(&down[i + 1]);
            let lxy = 0.25 * diag as f32;
            let det = lxx * lyy - lxy * lxy;
            out[i] = HessianCell {
                lxx,
                lyy,
                lxy,
                det,
                strength: det.abs(),
            };
        }
    }
    Ok(HessianResponse { cols, rows, cells })
}

/// Sum of dissimilarities between consecutive cells of the 8-ring around `(i, j)`.
#[inline]
pub fn ring_threshold(grid: &PatternGrid, i: usize, j: usize) -> u32 {
    let at =
        |di: isize, dj: isize| grid.get((i as isize + di) as usize, (j as isize + dj) as usize);
    const RING: [(isize, isize); 8] = [
        (-1, -1),
        (0, -1),
        (1, -1),
        (1, 0),
        (1, 1),
        (0, 1),
        (-1, 1),
        (-1, 0),
    ];
    let mut t = 0;
    for k in 0..8 {
        let (a, b) = (RING[k], RING[(k + 1) % 8]);
        t += at(a.0, a.1).dissimilarity(at(b.0, b.1));
    }
    t
}

/// Keeps interior cells whose response strictly exceeds their ring threshold.
pub fn threshold_candidates(resp: &HessianResponse, grid: &PatternGrid) -> Result<CandidateSet> {
    if resp.cols != grid.cols() || resp.rows != grid.rows() {
        return Err(Error::DimensionMismatch {
            expected: resp.cols * resp.rows,
            got: grid.cols() * grid.rows(),
        });
    }
    let mut candidates = Vec::new();
    for j in 1..resp.rows - 1 {
        for i in 1..resp.cols - 1 {
            let strength = resp.cells[j * resp.cols + i].strength;
            // cheap reject: the threshold is never negative
            if strength > 0.0 && strength > ring_threshold(grid, i, j) as f32 {
                candidates.push(Candidate { i, j, strength });
            }
        }
    }
    Ok(CandidateSet {
        cols: resp.cols,
        rows: resp.rows,
        candidates,
    })
}

/// Drops every candidate that has a strictly stronger candidate inside the
/// `window × window` square centered on it. Equal strengths all survive.
pub fn non_max_suppress(set: &CandidateSet, window: usize) -> Result<Vec<Candidate>> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::InvalidWindow(window));
    }
    let r = window / 2;
    let (cols, rows) = (set.cols, set.rows);
    // 0.0 marks "no candidate"; candidate strengths are always positive
    let mut map = vec![0.0f32; cols * rows];
    for c in &set.candidates {
        map[c.j * cols + c.i] = c.strength;
    }
    let kept = set
        .candidates
        .iter()
        .filter(|c| {
            let (i0, i1) = (c.i.saturating_sub(r), (c.i + r).min(cols - 1));
            let (j0, j1) = (c.j.saturating_sub(r), (c.j + r).min(rows - 1));
            (j0..=j1).all(|j| {
                map[j * cols + i0..=j * cols + i1]
                    .iter()
                    .all(|&s| s <= c.strength)
            })
        })
        .copied()
        .collect();
    Ok(kept)
}

/// Hessian response, thresholding and suppression in one call.
pub fn detect(grid: &PatternGrid, window: usize) -> Result<Vec<SdpfPoint>> {
    let resp = hessian_response(grid)?;
    let set = threshold_candidates(&resp, grid)?;
    let kept = non_max_suppress(&set, window)?;
    Ok(to_points(&kept, grid))
}

pub fn to_points(kept: &[Candidate], grid: &PatternGrid) -> Vec<SdpfPoint> {
    kept.iter()
        .map(|c| SdpfPoint::new(c.i, c.j, c.strength, *grid.get(c.i, c.j)))
        .collect()
}
