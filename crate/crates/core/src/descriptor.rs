//! Spatial-chromatic histogram over a set of salient patterns.
//!
//! Each salient point gets a distance bin (squared distance to the point-set
//! centroid, split into equal ranges up to the maximum), an angle bin (angle
//! around the centroid measured from the dominant orientation) and
//! contributes once for each of the four colors of its pattern.

use crate::dither::PALETTE_SIZE;
use crate::saliency::SdpfPoint;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DescriptorConfig {
    pub distance_bins: usize,
    pub angle_bins: usize,
    pub color_bins: usize,
    /// L1-normalize the histogram when it is non-empty.
    pub normalize: bool,
}

impl Default for DescriptorConfig {
    fn default() -> Self {
        Self {
            distance_bins: 4,
            angle_bins: 8,
            color_bins: PALETTE_SIZE,
            normalize: true,
        }
    }
}

impl DescriptorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.distance_bins == 0 || self.angle_bins == 0 {
            return Err(Error::InvalidConfig(format!(
                "bin counts must be positive (distance {}, angle {})",
                self.distance_bins, self.angle_bins
            )));
        }
        if self.color_bins != PALETTE_SIZE {
            return Err(Error::InvalidConfig(format!(
                "color bins must equal the palette size {PALETTE_SIZE}, got {}",
                self.color_bins
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.distance_bins * self.angle_bins * self.color_bins
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Flat histogram, distance-major: `index = d * ka * kc + a * kc + (color - 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SdpfDescriptor {
    config: DescriptorConfig,
    values: Vec<f64>,
}

impl SdpfDescriptor {
    pub fn zeros(config: DescriptorConfig) -> Self {
        Self {
            config,
            values: vec![0.0; config.len()],
        }
    }

    pub fn from_values(config: DescriptorConfig, values: Vec<f64>) -> Result<Self> {
        if values.len() != config.len() {
            return Err(Error::DimensionMismatch {
                expected: config.len(),
                got: values.len(),
            });
        }
        Ok(Self { config, values })
    }

    pub fn config(&self) -> &DescriptorConfig {
        &self.config
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn index(&self, distance_bin: usize, angle_bin: usize, color: u8) -> usize {
        let c = &self.config;
        (distance_bin * c.angle_bins + angle_bin) * c.color_bins + (color as usize - 1)
    }

    pub fn get(&self, distance_bin: usize, angle_bin: usize, color: u8) -> f64 {
        self.values[self.index(distance_bin, angle_bin, color)]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Cosine similarity; 0 when either side is all zeros.
    pub fn cosine(&self, other: &SdpfDescriptor) -> f64 {
        let dot: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum();
        let na: f64 = self.values.iter().map(|a| a * a).sum();
        let nb: f64 = other.values.iter().map(|b| b * b).sum();
        if na == 0.0 || nb == 0.0 {
            0.0
        } else {
            dot / (na * nb).sqrt()
        }
    }

    pub fn euclidean(&self, other: &SdpfDescriptor) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

pub fn centroid(points: &[[f64; 2]]) -> Result<[f64; 2]> {
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let n = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(sx, sy), p| (sx + p[0], sy + p[1]));
    Ok([sx / n, sy / n])
}

/// Squared centroid distances; no square roots are taken.
pub fn squared_distances(points: &[[f64; 2]], c: [f64; 2]) -> Vec<f64> {
    points
        .iter()
        .map(|p| {
            let (dx, dy) = (p[0] - c[0], p[1] - c[1]);
            dx * dx + dy * dy
        })
        .collect()
}

/// Bins squared distances into `bins` equal ranges of `[0, max]`.
///
/// Ranges are half-open on the left, `(low, high]`; zero goes to bin 0 and the
/// maximum to the last bin. When every distance is zero all points land in bin 0.
pub fn bin_distances(squared: &[f64], bins: usize) -> Vec<usize> {
    let max = squared.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return vec![0; squared.len()];
    }
    let step = max / bins as f64;
    let mut upper = Vec::with_capacity(bins);
    let mut acc = 0.0;
    for _ in 0..bins {
        acc += step;
        upper.push(acc);
    }
    squared
        .iter()
        .map(|&d| upper.iter().position(|&u| d <= u).unwrap_or(bins - 1))
        .collect()
}

pub fn distance_bins(points: &[[f64; 2]], c: [f64; 2], bins: usize) -> Result<Vec<usize>> {
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    Ok(bin_distances(&squared_distances(points, c), bins))
}

/// Least-squares slope of y on x through the centroid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Slope {
    Finite(f64),
    /// All points share one x coordinate.
    Vertical,
}

impl Slope {
    /// Inclination in degrees, in `(-90, 90]`.
    pub fn degrees(self) -> f64 {
        match self {
            Slope::Finite(m) => m.atan().to_degrees(),
            Slope::Vertical => 90.0,
        }
    }
}

pub fn fit_slope(points: &[[f64; 2]], c: [f64; 2]) -> Slope {
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for p in points {
        let dx = p[0] - c[0];
        sxy += dx * (p[1] - c[1]);
        sxx += dx * dx;
    }
    if sxx == 0.0 {
        Slope::Vertical
    } else {
        Slope::Finite(sxy / sxx)
    }
}

/// Dominant orientation of a point set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrientationFrame {
    pub centroid: [f64; 2],
    pub slope: Slope,
    /// Starting angle in degrees, `[0, 360)`.
    pub theta0: f64,
    /// Points ahead of / behind the centroid along the fitted line.
    pub side_counts: (usize, usize),
}

/// Which side of the line perpendicular to the fit (through the centroid) a
/// point is on: 1 ahead along the line direction `atan(m)`, 2 behind, 0 on it.
#[inline]
pub fn side_of(p: [f64; 2], c: [f64; 2], slope: Slope) -> u8 {
    let s = match slope {
        Slope::Finite(m) => (p[0] - c[0]) + m * (p[1] - c[1]),
        Slope::Vertical => p[1] - c[1],
    };
    if s > 0.0 {
        1
    } else if s < 0.0 {
        2
    } else {
        0
    }
}

/// Resolves the 180° ambiguity of the fitted line: the starting angle points
/// toward the side holding more points (ties keep `atan(m)`).
pub fn resolve_orientation(points: &[[f64; 2]], c: [f64; 2], slope: Slope) -> OrientationFrame {
    let (mut ahead, mut behind) = (0, 0);
    for &p in points {
        match side_of(p, c, slope) {
            1 => ahead += 1,
            2 => behind += 1,
            _ => {}
        }
    }
    let base = slope.degrees();
    let theta0 = if ahead >= behind { base } else { base - 180.0 };
    OrientationFrame {
        centroid: c,
        slope,
        theta0: wrap_degrees(theta0),
        side_counts: (ahead, behind),
    }
}

pub fn dominant_orientation(points: &[[f64; 2]], c: [f64; 2]) -> OrientationFrame {
    resolve_orientation(points, c, fit_slope(points, c))
}

#[inline]
fn wrap_degrees(a: f64) -> f64 {
    let w = a.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

/// Angle of `p` around the centroid relative to the starting angle, `[0, 360)`.
/// A point sitting on the centroid gets 0.
#[inline]
pub fn relative_angle(p: [f64; 2], frame: &OrientationFrame) -> f64 {
    let (dx, dy) = (p[0] - frame.centroid[0], p[1] - frame.centroid[1]);
    if dx == 0.0 && dy == 0.0 {
        return 0.0;
    }
    let absolute = wrap_degrees(dy.atan2(dx).to_degrees());
    wrap_degrees(absolute - frame.theta0)
}

#[inline]
pub fn angle_bin(angle: f64, bins: usize) -> usize {
    let width = 360.0 / bins as f64;
    ((angle / width).floor() as usize).min(bins - 1)
}

pub fn angle_bins(points: &[[f64; 2]], frame: &OrientationFrame, bins: usize) -> Vec<usize> {
    points
        .iter()
        .map(|&p| angle_bin(relative_angle(p, frame), bins))
        .collect()
}

/// Accumulates each point's four colors into its (distance, angle) cell.
pub fn build_descriptor(
    points: &[SdpfPoint],
    distance_bins: &[usize],
    angle_bins: &[usize],
    config: &DescriptorConfig,
) -> Result<SdpfDescriptor> {
    config.validate()?;
    for bins in [distance_bins, angle_bins] {
        if bins.len() != points.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                got: bins.len(),
            });
        }
    }
    let mut desc = SdpfDescriptor::zeros(*config);
    for ((p, &bd), &ba) in points.iter().zip(distance_bins).zip(angle_bins) {
        if bd >= config.distance_bins || ba >= config.angle_bins {
            return Err(Error::InvalidConfig(format!(
                "bin ({bd}, {ba}) outside {}x{}",
                config.distance_bins, config.angle_bins
            )));
        }
        for color in p.pattern.colors() {
            let k = desc.index(bd, ba, color);
            desc.values[k] += 1.0;
        }
    }
    if config.normalize {
        let total = desc.sum();
        if total > 0.0 {
            desc.values.iter_mut().for_each(|v| *v /= total);
        }
    }
    Ok(desc)
}
