//! Seeded synthetic images: colored shapes on black, and uniform noise.

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::eval::{ingest, Dataset};
use crate::image::{save_image, Image};
use crate::{Error, Result};

/// Object classes; colors avoid the RGB cube corners so dithering produces texture.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    Disk,
    Square,
    Triangle,
    Ring,
    Cross,
    Ellipse,
    SplitDisk,
    Target,
    Bars,
    Star,
}

impl Shape {
    pub const ALL: [Shape; 10] = [
        Shape::Disk,
        Shape::Square,
        Shape::Triangle,
        Shape::Ring,
        Shape::Cross,
        Shape::Ellipse,
        Shape::SplitDisk,
        Shape::Target,
        Shape::Bars,
        Shape::Star,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Shape::Disk => "disk",
            Shape::Square => "square",
            Shape::Triangle => "triangle",
            Shape::Ring => "ring",
            Shape::Cross => "cross",
            Shape::Ellipse => "ellipse",
            Shape::SplitDisk => "split_disk",
            Shape::Target => "target",
            Shape::Bars => "bars",
            Shape::Star => "star",
        }
    }

    /// Color at object-frame coordinates `(u, v)` (unit radius), or `None` outside.
    fn paint(self, u: f64, v: f64) -> Option<[f64; 3]> {
        let r = (u * u + v * v).sqrt();
        match self {
            Shape::Disk => (r < 0.8).then_some([230.0, 120.0, 30.0]),
            Shape::Square => (u.abs() < 0.62 && v.abs() < 0.62).then_some([40.0, 160.0, 150.0]),
            Shape::Triangle => {
                // equilateral, circumradius 0.9
                let inside = (0..3).all(|k| {
                    let a = std::f64::consts::TAU * k as f64 / 3.0 + std::f64::consts::FRAC_PI_2;
                    u * a.cos() + v * a.sin() > -0.45
                });
                inside.then_some([150.0, 60.0, 200.0])
            }
            Shape::Ring => (r > 0.45 && r < 0.85).then_some([220.0, 190.0, 60.0]),
            Shape::Cross => {
                let arm = |a: f64, b: f64| a.abs() < 0.85 && b.abs() < 0.22;
                (arm(u, v) || arm(v, u)).then_some([240.0, 110.0, 160.0])
            }
            Shape::Ellipse => {
                ((u / 0.88).powi(2) + (v / 0.42).powi(2) < 1.0).then_some([90.0, 150.0, 230.0])
            }
            Shape::SplitDisk => (r < 0.8).then_some(if u < 0.0 {
                [200.0, 40.0, 40.0]
            } else {
                [140.0, 220.0, 120.0]
            }),
            Shape::Target => {
                if r < 0.32 {
                    Some([60.0, 60.0, 200.0])
                } else if r < 0.8 {
                    Some([230.0, 220.0, 80.0])
                } else {
                    None
                }
            }
            Shape::Bars => {
                let in_bar = (0..3).any(|k| (u - (k as f64 - 1.0) * 0.5).abs() < 0.15);
                (in_bar && v.abs() < 0.8).then_some([160.0, 160.0, 170.0])
            }
            Shape::Star => {
                let t = v.atan2(u);
                // radius oscillates between 0.35 and 0.9 five times per turn
                let edge = 0.625 + 0.275 * (5.0 * t).cos();
                (r < edge).then_some([140.0, 150.0, 40.0])
            }
        }
    }
}

/// Placement and appearance of one rendered object.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShapeParams {
    /// Object center in pixels.
    pub center: [f64; 2],
    /// Object radius in pixels.
    pub radius: f64,
    /// In-plane rotation, degrees counterclockwise.
    pub angle: f64,
    /// Added to every channel of the object color.
    pub tint: [f64; 3],
}

impl ShapeParams {
    pub fn centered(side: usize) -> Self {
        let c = side as f64 / 2.0;
        Self {
            center: [c, c],
            radius: 0.4 * side as f64,
            angle: 0.0,
            tint: [0.0; 3],
        }
    }

    /// Random rotation, and small shifts in position, size and color.
    pub fn random(side: usize, rng: &mut impl Rng) -> Self {
        let s = side as f64;
        let jitter = 0.06 * s;
        Self {
            center: [
                s / 2.0 + rng.random_range(-jitter..=jitter),
                s / 2.0 + rng.random_range(-jitter..=jitter),
            ],
            radius: s * rng.random_range(0.34..=0.42),
            angle: rng.random_range(0.0..360.0),
            tint: [
                rng.random_range(-12.0..=12.0),
                rng.random_range(-12.0..=12.0),
                rng.random_range(-12.0..=12.0),
            ],
        }
    }
}

/// Renders `shape` on a black `side`×`side` canvas with 2×2 supersampling.
pub fn render(shape: Shape, params: &ShapeParams, side: usize) -> Result<Image> {
    let (sin, cos) = params.angle.to_radians().sin_cos();
    Image::from_fn(side, side, |x, y| {
        let mut acc = [0.0; 3];
        for (ox, oy) in [(0.25, 0.25), (0.75, 0.25), (0.25, 0.75), (0.75, 0.75)] {
            let dx = x as f64 + ox - params.center[0];
            // image rows grow downward; flip so positive angles turn counterclockwise
            let dy = params.center[1] - (y as f64 + oy);
            let u = (cos * dx + sin * dy) / params.radius;
            let v = (-sin * dx + cos * dy) / params.radius;
            if let Some(c) = shape.paint(u, v) {
                for k in 0..3 {
                    acc[k] += (c[k] + params.tint[k]).clamp(0.0, 255.0) / 4.0;
                }
            }
        }
        acc.map(|v| v.round() as u8)
    })
}

/// One image per `(shape, index)` pair, reproducible from `seed`.
pub fn shape_image(shape: Shape, index: usize, side: usize, seed: u64) -> Result<Image> {
    let class = Shape::ALL.iter().position(|&s| s == shape).expect("listed") as u64;
    let stream = seed
        .wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(class << 32 | index as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(stream);
    render(shape, &ShapeParams::random(side, &mut rng), side)
}

/// Writes `root/<shape>/<nnn>.png` for the first `classes` shapes and ingests it.
pub fn write_shape_dataset(
    root: impl AsRef<Path>,
    classes: usize,
    per_class: usize,
    side: usize,
    seed: u64,
) -> Result<Dataset> {
    let root = root.as_ref();
    if classes == 0 || classes > Shape::ALL.len() {
        return Err(Error::InvalidConfig(format!(
            "class count must be in 1..={}, got {classes}",
            Shape::ALL.len()
        )));
    }
    if per_class == 0 {
        return Err(Error::InvalidConfig(
            "need at least one image per class".to_string(),
        ));
    }
    for &shape in &Shape::ALL[..classes] {
        let dir = root.join(shape.name());
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for k in 0..per_class {
            save_image(
                &shape_image(shape, k, side, seed)?,
                dir.join(format!("{k:03}.png")),
            )?;
        }
    }
    ingest(root)
}

/// Independent uniform RGB noise.
pub fn noise_image(width: usize, height: usize, seed: u64) -> Result<Image> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pixels = (0..width * height).map(|_| rng.random()).collect();
    Image::new(width, height, pixels)
}
