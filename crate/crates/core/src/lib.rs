//! Salient dither pattern features (SDPF).
//!
//! The pipeline reduces an RGB image to eight colors with error-diffusion
//! dithering, groups the result into sorted 2×2 dither patterns, picks out
//! patterns whose Hessian-style dissimilarity response stands out from their
//! surrounding ring, and summarizes the survivors as a spatial-chromatic
//! histogram (centroid distance × orientation-normalized angle × color).
//!
//! Modules, in pipeline order:
//!
//! - [`image`] – RGB rasters, PPM/PNG I/O, bilinear resize, right-angle rotation.
//! - [`dither`] – binary-tree quantizer over the RGB cube corners and
//!   three-neighbor error diffusion.
//! - [`pattern`] – 2×2 pattern grid and positionwise pattern dissimilarity.
//! - [`saliency`] – Hessian response, ring threshold, non-maximal suppression.
//! - [`descriptor`] – centroid, distance/angle binning, dominant orientation,
//!   histogram construction.
//! - [`pipeline`] – the end-to-end [`Extractor`] with per-stage timing hooks.
//! - [`svm`] – one-vs-rest polynomial-kernel C-SVM and a k-NN baseline.
//! - [`eval`] – dataset ingestion, splits, augmentation, average precision,
//!   per-stage benchmarking.
//! - [`io`] – descriptor CSV files.
//! - [`synth`] – seeded synthetic images for tests and demos.

pub mod descriptor;
pub mod dither;
mod error;
pub mod eval;
pub mod image;
pub mod io;
pub mod pattern;
pub mod pipeline;
pub mod saliency;
pub mod svm;
pub mod synth;

pub use descriptor::{DescriptorConfig, SdpfDescriptor};
pub use dither::{dither, quantize_pixel, DitherPalette, FixedWeights, IndexedImage};
pub use error::{Error, Result};
pub use image::{Image, Rotation};
pub use pattern::{DitherPattern, PatternGrid};
pub use pipeline::{extract, Extraction, Extractor, Stage};
pub use saliency::SdpfPoint;
pub use svm::{Sample, SvmConfig, SvmModel};
