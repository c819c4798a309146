//! End-to-end extraction: image in, descriptor out.

use std::time::{Duration, Instant};

use crate::descriptor::{
    angle_bins, bin_distances, build_descriptor, centroid, fit_slope, resolve_orientation,
    squared_distances, DescriptorConfig, OrientationFrame, SdpfDescriptor,
};
use crate::dither::{dither, CoefficientProvider, DitherPalette, FixedWeights};
use crate::image::Image;
use crate::pattern::build_grid;
use crate::saliency::{
    hessian_response, non_max_suppress, threshold_candidates, to_points, SdpfPoint,
    DEFAULT_NMS_WINDOW,
};
use crate::{Error, Result};

/// Smallest image side that still has a 3×3 pattern neighborhood.
pub const MIN_IMAGE_SIDE: usize = 6;

/// Pipeline stages in execution order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stage {
    EdDithering,
    ColourSorting,
    CalculateHessian,
    AnalyseHessian,
    NonMaxSuppression,
    Centroid,
    CentroidDistance,
    DistanceBinRanges,
    DominantOrientation,
    ResolvingUpsideDown,
    SdpfAngles,
    DescriptorConstruction,
}

impl Stage {
    pub const ALL: [Stage; 12] = [
        Stage::EdDithering,
        Stage::ColourSorting,
        Stage::CalculateHessian,
        Stage::AnalyseHessian,
        Stage::NonMaxSuppression,
        Stage::Centroid,
        Stage::CentroidDistance,
        Stage::DistanceBinRanges,
        Stage::DominantOrientation,
        Stage::ResolvingUpsideDown,
        Stage::SdpfAngles,
        Stage::DescriptorConstruction,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::EdDithering => "ED-Dithering",
            Stage::ColourSorting => "Colour sorting",
            Stage::CalculateHessian => "Calculate Hessian",
            Stage::AnalyseHessian => "Analyse Hessian",
            Stage::NonMaxSuppression => "Non-max suppression",
            Stage::Centroid => "Centroid",
            Stage::CentroidDistance => "Centroid distance",
            Stage::DistanceBinRanges => "Distance bin ranges",
            Stage::DominantOrientation => "Dominant orientation",
            Stage::ResolvingUpsideDown => "Resolving upside down",
            Stage::SdpfAngles => "SDPF angles",
            Stage::DescriptorConstruction => "Descriptor construction",
        }
    }

    pub fn position(self) -> usize {
        Stage::ALL.iter().position(|&s| s == self).expect("listed")
    }
}

/// Receives a mark after each stage finishes.
pub trait StageClock {
    fn start(&mut self) {}
    fn mark(&mut self, _stage: Stage) {}
}

impl StageClock for () {}

/// Accumulates wall-clock time per stage across runs.
#[derive(Clone, Debug)]
pub struct StageTimer {
    last: Instant,
    totals: [Duration; 12],
}

impl Default for StageTimer {
    fn default() -> Self {
        Self {
            last: Instant::now(),
            totals: [Duration::ZERO; 12],
        }
    }
}

impl StageTimer {
    pub fn totals(&self) -> &[Duration; 12] {
        &self.totals
    }
}

impl StageClock for StageTimer {
    #[inline]
    fn start(&mut self) {
        self.last = Instant::now();
    }

    #[inline]
    fn mark(&mut self, stage: Stage) {
        let now = Instant::now();
        self.totals[stage.position()] += now - self.last;
        self.last = now;
    }
}

/// Everything the pipeline produced for one image.
#[derive(Clone, Debug)]
pub struct Extraction {
    pub points: Vec<SdpfPoint>,
    /// `None` when no salient pattern was found.
    pub frame: Option<OrientationFrame>,
    pub distance_bins: Vec<usize>,
    pub angle_bins: Vec<usize>,
    pub descriptor: SdpfDescriptor,
}

/// Configured extraction pipeline.
#[derive(Clone, Debug)]
pub struct Extractor<C = FixedWeights> {
    config: DescriptorConfig,
    nms_window: usize,
    palette: DitherPalette,
    coefficients: C,
}

impl Extractor<FixedWeights> {
    pub fn new(config: DescriptorConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            nms_window: DEFAULT_NMS_WINDOW,
            palette: DitherPalette::default(),
            coefficients: FixedWeights::default(),
        })
    }
}

impl Default for Extractor<FixedWeights> {
    fn default() -> Self {
        Self::new(DescriptorConfig::default()).expect("default config is valid")
    }
}

impl<C: CoefficientProvider> Extractor<C> {
    pub fn with_nms_window(mut self, window: usize) -> Result<Self> {
        if window == 0 || window.is_multiple_of(2) {
            return Err(Error::InvalidWindow(window));
        }
        self.nms_window = window;
        Ok(self)
    }

    /// Swaps in a different diffusion-coefficient source.
    pub fn with_coefficients<D: CoefficientProvider>(self, coefficients: D) -> Extractor<D> {
        Extractor {
            config: self.config,
            nms_window: self.nms_window,
            palette: self.palette,
            coefficients,
        }
    }

    pub fn config(&self) -> &DescriptorConfig {
        &self.config
    }

    pub fn nms_window(&self) -> usize {
        self.nms_window
    }

    pub fn palette(&self) -> &DitherPalette {
        &self.palette
    }

    pub fn extract(&self, img: &Image) -> Result<SdpfDescriptor> {
        Ok(self.run(img, &mut ())?.descriptor)
    }

    pub fn extract_detailed(&self, img: &Image) -> Result<Extraction> {
        self.run(img, &mut ())
    }

    /// Runs the pipeline, marking `clock` after each stage.
    pub fn run<K: StageClock>(&self, img: &Image, clock: &mut K) -> Result<Extraction> {
        if img.width() < MIN_IMAGE_SIDE || img.height() < MIN_IMAGE_SIDE {
            return Err(Error::InvalidDimensions(format!(
                "image {}x{} is smaller than {MIN_IMAGE_SIDE}x{MIN_IMAGE_SIDE}",
                img.width(),
                img.height()
            )));
        }
        clock.start();
        let indexed = dither(img, &self.palette, &self.coefficients);
        clock.mark(Stage::EdDithering);
        let grid = build_grid(&indexed)?;
        clock.mark(Stage::ColourSorting);
        let resp = hessian_response(&grid)?;
        clock.mark(Stage::CalculateHessian);
        let candidates = threshold_candidates(&resp, &grid)?;
        clock.mark(Stage::AnalyseHessian);
        let kept = non_max_suppress(&candidates, self.nms_window)?;
        let points = to_points(&kept, &grid);
        clock.mark(Stage::NonMaxSuppression);

        if points.is_empty() {
            let descriptor = build_descriptor(&[], &[], &[], &self.config)?;
            clock.mark(Stage::DescriptorConstruction);
            return Ok(Extraction {
                points,
                frame: None,
                distance_bins: Vec::new(),
                angle_bins: Vec::new(),
                descriptor,
            });
        }

        let coords: Vec<[f64; 2]> = points.iter().map(|p| [p.x, p.y]).collect();
        let c = centroid(&coords)?;
        clock.mark(Stage::Centroid);
        let squared = squared_distances(&coords, c);
        clock.mark(Stage::CentroidDistance);
        let dbins = bin_distances(&squared, self.config.distance_bins);
        clock.mark(Stage::DistanceBinRanges);
        let slope = fit_slope(&coords, c);
        clock.mark(Stage::DominantOrientation);
        let frame = resolve_orientation(&coords, c, slope);
        clock.mark(Stage::ResolvingUpsideDown);
        let abins = angle_bins(&coords, &frame, self.config.angle_bins);
        clock.mark(Stage::SdpfAngles);
        let descriptor = build_descriptor(&points, &dbins, &abins, &self.config)?;
        clock.mark(Stage::DescriptorConstruction);
        Ok(Extraction {
            points,
            frame: Some(frame),
            distance_bins: dbins,
            angle_bins: abins,
            descriptor,
        })
    }
}

/// Extracts a descriptor with the default palette, weights and window.
pub fn extract(img: &Image, config: &DescriptorConfig) -> Result<SdpfDescriptor> {
    Extractor::new(*config)?.extract(img)
}
