//! Dataset handling, train/test protocol, average precision and timing.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::descriptor::DescriptorConfig;
use crate::dither::CoefficientProvider;
use crate::image::{load_image, Image, Rotation};
use crate::pipeline::{Extractor, Stage, StageTimer};
use crate::saliency::DEFAULT_NMS_WINDOW;
use crate::svm::{self, Sample, SvmConfig};
use crate::{Error, Result};

/// Side length images are resized to before extraction.
pub const EVAL_IMAGE_SIDE: usize = 128;
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.4;
const WARMUP_RUNS: usize = 10;

/// Class-per-subdirectory image collection.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    root: PathBuf,
    classes: Vec<(String, Vec<PathBuf>)>,
}

impl Dataset {
    pub fn new(root: impl Into<PathBuf>, classes: Vec<(String, Vec<PathBuf>)>) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if let Some((label, _)) = classes.iter().find(|(_, p)| p.is_empty()) {
            return Err(Error::EmptyClass {
                label: label.clone(),
            });
        }
        Ok(Self {
            root: root.into(),
            classes,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn classes(&self) -> &[(String, Vec<PathBuf>)] {
        &self.classes
    }

    pub fn labels(&self) -> Vec<&str> {
        self.classes.iter().map(|(l, _)| l.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.classes.iter().map(|(_, p)| p.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn is_image_file(path: &Path) -> bool {
    path.is_file()
        && path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("ppm") || e.eq_ignore_ascii_case("png"))
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        out.push(entry.map_err(|e| Error::io(dir, e))?.path());
    }
    out.sort();
    Ok(out)
}

/// Reads `root/<label>/*.{ppm,png}`. Labels and paths come back sorted.
pub fn ingest(root: impl AsRef<Path>) -> Result<Dataset> {
    let root = root.as_ref();
    let mut classes = Vec::new();
    for dir in sorted_entries(root)?.into_iter().filter(|p| p.is_dir()) {
        let label = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let images: Vec<PathBuf> = sorted_entries(&dir)?
            .into_iter()
            .filter(|p| is_image_file(p))
            .collect();
        classes.push((label, images));
    }
    Dataset::new(root, classes)
}

/// An image reference with the label it is scored against.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledItem {
    pub path: PathBuf,
    pub label: String,
    /// Applied after loading.
    pub rotation: Rotation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Split {
    pub train: Vec<LabeledItem>,
    pub test: Vec<LabeledItem>,
    pub seed: u64,
    pub train_fraction: f64,
}

/// Per-class seeded shuffle, then the first `round(fraction × size)` images train.
pub fn split(ds: &Dataset, fraction: f64, seed: u64) -> Result<Split> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "train fraction must lie strictly between 0 and 1, got {fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (label, paths) in &ds.classes {
        let n = paths.len();
        let n_train = (fraction * n as f64).round() as usize;
        if n < 2 || n_train == 0 || n_train == n {
            return Err(Error::ClassTooSmall {
                label: label.clone(),
                size: n,
            });
        }
        let mut shuffled = paths.clone();
        shuffled.shuffle(&mut rng);
        for (k, path) in shuffled.into_iter().enumerate() {
            let item = LabeledItem {
                path,
                label: label.clone(),
                rotation: Rotation::R0,
            };
            if k < n_train {
                train.push(item);
            } else {
                test.push(item);
            }
        }
    }
    Ok(Split {
        train,
        test,
        seed,
        train_fraction: fraction,
    })
}

fn parse_rotations(angles: &[i64]) -> Result<Vec<Rotation>> {
    let mut out: Vec<Rotation> = Vec::new();
    for &a in angles {
        let r = Rotation::from_degrees(a)?;
        if !out.contains(&r) {
            out.push(r);
        }
    }
    Ok(out)
}

/// Adds a rotated copy of every training item for each non-zero angle.
pub fn augment_rotations(split: &Split, angles: &[i64]) -> Result<Split> {
    let rotations = parse_rotations(angles)?;
    let mut train = Vec::with_capacity(split.train.len() * (rotations.len() + 1));
    for item in &split.train {
        train.push(item.clone());
        for &r in rotations.iter().filter(|&&r| r != Rotation::R0) {
            train.push(LabeledItem {
                rotation: item.rotation.then(r),
                ..item.clone()
            });
        }
    }
    Ok(Split {
        train,
        ..split.clone()
    })
}

/// Replaces each item with one copy per rotation.
pub fn rotate_items(items: &[LabeledItem], rotations: &[Rotation]) -> Vec<LabeledItem> {
    items
        .iter()
        .flat_map(|item| {
            rotations.iter().map(move |&r| LabeledItem {
                rotation: item.rotation.then(r),
                ..item.clone()
            })
        })
        .collect()
}

/// Mean per-class precision, in percent. A class that receives no
/// predictions contributes 0.
pub fn average_precision(predictions: &[usize], truth: &[usize], n_classes: usize) -> Result<f64> {
    if predictions.len() != truth.len() {
        return Err(Error::LengthMismatch(predictions.len(), truth.len()));
    }
    if predictions.is_empty() || n_classes == 0 {
        return Err(Error::EmptyDataset);
    }
    if let Some(bad) = predictions.iter().chain(truth).find(|&&c| c >= n_classes) {
        return Err(Error::InvalidConfig(format!(
            "class index {bad} out of range for {n_classes} classes"
        )));
    }
    let mut predicted = vec![0usize; n_classes];
    let mut correct = vec![0usize; n_classes];
    for (&p, &t) in predictions.iter().zip(truth) {
        predicted[p] += 1;
        if p == t {
            correct[p] += 1;
        }
    }
    let sum: f64 = predicted
        .iter()
        .zip(&correct)
        .map(|(&a, &c)| if a == 0 { 0.0 } else { c as f64 / a as f64 })
        .sum();
    Ok(100.0 * sum / n_classes as f64)
}

/// Resizes to `side`×`side` unless `side` is `None`.
pub fn prepare_image(img: &Image, side: Option<usize>) -> Result<Image> {
    match side {
        Some(s) => img.resize(s, s),
        None => Ok(img.clone()),
    }
}

/// Loads, resizes, rotates and extracts every item in parallel.
pub fn extract_items<C>(
    items: &[LabeledItem],
    extractor: &Extractor<C>,
    side: Option<usize>,
) -> Result<Vec<Sample>>
where
    C: CoefficientProvider + Sync,
{
    let mut unique: Vec<&Path> = items.iter().map(|i| i.path.as_path()).collect();
    unique.sort();
    unique.dedup();
    let loaded: BTreeMap<&Path, Image> = unique
        .par_iter()
        .map(|&p| Ok((p, prepare_image(&load_image(p)?, side)?)))
        .collect::<Result<_>>()?;
    items
        .par_iter()
        .map(|item| {
            let img = loaded[item.path.as_path()].rotate(item.rotation);
            Ok(Sample::new(
                item.label.clone(),
                extractor.extract(&img)?.into_values(),
            ))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalConfig {
    pub descriptor: DescriptorConfig,
    pub nms_window: usize,
    pub svm: SvmConfig,
    pub train_fraction: f64,
    /// Seeds the split; the SVM uses its own seed.
    pub seed: u64,
    /// Training augmentation angles in degrees.
    pub augment: Vec<i64>,
    /// Every test image is scored once per listed rotation.
    pub test_rotations: Vec<Rotation>,
    pub knn_k: usize,
    pub image_side: Option<usize>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            descriptor: DescriptorConfig::default(),
            nms_window: DEFAULT_NMS_WINDOW,
            svm: SvmConfig::default(),
            train_fraction: DEFAULT_TRAIN_FRACTION,
            seed: 0,
            augment: Vec::new(),
            test_rotations: vec![Rotation::R0],
            knn_k: 1,
            image_side: Some(EVAL_IMAGE_SIDE),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub labels: Vec<String>,
    pub train_size: usize,
    pub test_size: usize,
    pub svm_ap: f64,
    pub knn_ap: f64,
}

/// Split, optional augmentation, extraction, SVM and k-NN scoring.
pub fn evaluate(ds: &Dataset, cfg: &EvalConfig) -> Result<EvalReport> {
    if cfg.test_rotations.is_empty() {
        return Err(Error::InvalidConfig("no test rotations given".to_string()));
    }
    let extractor = Extractor::new(cfg.descriptor)?.with_nms_window(cfg.nms_window)?;
    let base = split(ds, cfg.train_fraction, cfg.seed)?;
    let sp = augment_rotations(&base, &cfg.augment)?;
    let test_items = rotate_items(&sp.test, &cfg.test_rotations);

    let train = extract_items(&sp.train, &extractor, cfg.image_side)?;
    let test = extract_items(&test_items, &extractor, cfg.image_side)?;
    let model = svm::train(&train, &cfg.svm)?;

    let labels: Vec<String> = ds.labels().into_iter().map(str::to_string).collect();
    let index = |l: &str| {
        labels
            .binary_search_by(|x| x.as_str().cmp(l))
            .expect("known label")
    };
    let truth: Vec<usize> = test.iter().map(|s| index(&s.label)).collect();
    let svm_pred = test
        .par_iter()
        .map(|s| model.predict(&s.features).map(index))
        .collect::<Result<Vec<_>>>()?;
    let knn_pred = test
        .par_iter()
        .map(|s| svm::knn_predict(&train, &s.features, cfg.knn_k).map(index))
        .collect::<Result<Vec<_>>>()?;

    Ok(EvalReport {
        svm_ap: average_precision(&svm_pred, &truth, labels.len())?,
        knn_ap: average_precision(&knn_pred, &truth, labels.len())?,
        train_size: train.len(),
        test_size: test.len(),
        labels,
    })
}

/// Mean wall-clock time per stage and for the whole extraction.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub repetitions: usize,
    pub stages: Vec<(Stage, Duration)>,
    pub total: Duration,
}

impl BenchReport {
    pub fn largest_stage(&self) -> Stage {
        self.stages
            .iter()
            .max_by_key(|(_, d)| *d)
            .map(|(s, _)| *s)
            .expect("twelve stages")
    }

    pub fn stage_sum(&self) -> Duration {
        self.stages.iter().map(|(_, d)| *d).sum()
    }

    /// `stage,mean_ms` rows in pipeline order, then `Total`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("stage,mean_ms\n");
        let ms = |d: Duration| d.as_secs_f64() * 1e3;
        for (s, d) in &self.stages {
            writeln!(out, "{},{:.6}", s.name(), ms(*d)).expect("string write");
        }
        writeln!(out, "Total,{:.6}", ms(self.total)).expect("string write");
        out
    }
}

/// Times `repetitions` extractions on the calling thread after a warm-up.
pub fn bench<C: CoefficientProvider>(
    extractor: &Extractor<C>,
    img: &Image,
    repetitions: usize,
) -> Result<BenchReport> {
    if repetitions == 0 {
        return Err(Error::InvalidConfig(
            "repetitions must be at least 1".to_string(),
        ));
    }
    for _ in 0..WARMUP_RUNS {
        extractor.extract(img)?;
    }
    let mut timer = StageTimer::default();
    let mut total = Duration::ZERO;
    for _ in 0..repetitions {
        let t0 = Instant::now();
        extractor.run(img, &mut timer)?;
        total += t0.elapsed();
    }
    let n = repetitions as u32;
    Ok(BenchReport {
        repetitions,
        stages: Stage::ALL
            .iter()
            .map(|&s| (s, timer.totals()[s.position()] / n))
            .collect(),
        total: total / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::save_image;
    use rand::Rng;

    fn write_tree(root: &Path, layout: &[(&str, usize)]) {
        for (label, n) in layout {
            let dir = root.join(label);
            std::fs::create_dir_all(&dir).unwrap();
            for k in 0..*n {
                let img = Image::filled(8, 8, [k as u8 * 20, 100, 50]).unwrap();
                save_image(&img, dir.join(format!("{k:02}.ppm"))).unwrap();
            }
        }
    }

    #[test]
    fn ingest_layout() {
        let tmp = tempfile::tempdir().unwrap();
        write_tree(tmp.path(), &[("b", 3), ("a", 2)]);
        std::fs::write(tmp.path().join("a/notes.txt"), "x").unwrap();
        std::fs::write(tmp.path().join("stray.ppm"), "x").unwrap();
        let ds = ingest(tmp.path()).unwrap();
        assert_eq!(ds.labels(), ["a", "b"]);
        assert_eq!(ds.len(), 5);
        assert_eq!(ds, ingest(tmp.path()).unwrap());
        let a = &ds.classes()[0].1;
        assert!(a[0] < a[1]);
    }

    #[test]
    fn ingest_errors() {
        let tmp = tempfile::tempdir().unwrap();
        assert!(matches!(ingest(tmp.path()), Err(Error::EmptyDataset)));
        std::fs::create_dir(tmp.path().join("empty")).unwrap();
        assert!(matches!(ingest(tmp.path()), Err(Error::EmptyClass { .. })));
        assert!(matches!(
            ingest(tmp.path().join("nope")),
            Err(Error::NotFound(_))
        ));
    }

    fn synthetic_dataset(sizes: &[usize]) -> Dataset {
        let classes = sizes
            .iter()
            .enumerate()
            .map(|(c, &n)| {
                let paths = (0..n)
                    .map(|k| PathBuf::from(format!("c{c}/{k}.png")))
                    .collect();
                (format!("c{c}"), paths)
            })
            .collect();
        Dataset::new("root", classes).unwrap()
    }

    #[test]
    fn split_counts_and_disjointness() {
        let ds = synthetic_dataset(&[10, 7, 3]);
        let sp = split(&ds, 0.4, 9).unwrap();
        let count = |items: &[LabeledItem], l: &str| items.iter().filter(|i| i.label == l).count();
        assert_eq!((count(&sp.train, "c0"), count(&sp.test, "c0")), (4, 6));
        assert_eq!((count(&sp.train, "c1"), count(&sp.test, "c1")), (3, 4));
        assert_eq!((count(&sp.train, "c2"), count(&sp.test, "c2")), (1, 2));
        let mut all: Vec<_> = sp
            .train
            .iter()
            .chain(&sp.test)
            .map(|i| i.path.clone())
            .collect();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), ds.len());
        assert_eq!(sp, split(&ds, 0.4, 9).unwrap());
        assert_ne!(sp.train, split(&ds, 0.4, 10).unwrap().train);
    }

    #[test]
    fn split_errors() {
        let ds = synthetic_dataset(&[10, 1]);
        assert!(matches!(
            split(&ds, 0.4, 0),
            Err(Error::ClassTooSmall { .. })
        ));
        let ds = synthetic_dataset(&[10, 10]);
        assert!(split(&ds, 1.0, 0).is_err());
        assert!(split(&ds, 0.0, 0).is_err());
        // round(0.97 * 10) leaves nothing to test
        assert!(matches!(
            split(&ds, 0.97, 0),
            Err(Error::ClassTooSmall { .. })
        ));
    }

    #[test]
    fn augmentation_counts() {
        let ds = synthetic_dataset(&[10]);
        let sp = split(&ds, 0.4, 1).unwrap();
        let aug = augment_rotations(&sp, &[0, 90, 180, 270]).unwrap();
        assert_eq!(aug.train.len(), 16);
        assert_eq!(aug.test, sp.test);
        let rots: Vec<_> = aug.train[..4].iter().map(|i| i.rotation).collect();
        assert_eq!(rots, Rotation::ALL);
        assert_eq!(augment_rotations(&sp, &[0]).unwrap(), sp);
        assert_eq!(augment_rotations(&sp, &[90, 450]).unwrap().train.len(), 8);
        assert!(matches!(
            augment_rotations(&sp, &[45]),
            Err(Error::UnsupportedRotation(45))
        ));
    }

    #[test]
    fn ap_examples() {
        assert_eq!(average_precision(&[0, 1, 2], &[0, 1, 2], 3).unwrap(), 100.0);
        assert_eq!(
            average_precision(&[0, 0, 0, 0], &[0, 0, 1, 1], 2).unwrap(),
            25.0
        );
        assert!(matches!(
            average_precision(&[0], &[0, 1], 2),
            Err(Error::LengthMismatch(1, 2))
        ));
        assert!(average_precision(&[], &[], 2).is_err());
        assert!(average_precision(&[3], &[0], 2).is_err());
    }

    #[test]
    fn ap_of_random_guessing_is_one_over_n() {
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        let (n, per) = (5, 20);
        let truth: Vec<usize> = (0..n * per).map(|k| k / per).collect();
        let trials = 10_000;
        let mut total = 0.0;
        for _ in 0..trials {
            let pred: Vec<usize> = truth.iter().map(|_| rng.random_range(0..n)).collect();
            let ap = average_precision(&pred, &truth, n).unwrap();
            assert!((0.0..=100.0).contains(&ap));
            total += ap;
        }
        let mean = total / trials as f64;
        assert!((mean - 100.0 / n as f64).abs() < 2.0, "mean AP {mean}");
    }

    #[test]
    fn bench_report_shape() {
        let img = Image::from_fn(32, 32, |x, y| [(x * 8) as u8, (y * 8) as u8, 90]).unwrap();
        let report = bench(&Extractor::default(), &img, 3).unwrap();
        assert_eq!(report.stages.len(), 12);
        assert!(report.stage_sum() <= report.total);
        let csv = report.to_csv();
        let names: Vec<&str> = csv
            .lines()
            .skip(1)
            .map(|l| l.split(',').next().unwrap())
            .collect();
        let mut expected: Vec<&str> = Stage::ALL.iter().map(|s| s.name()).collect();
        expected.push("Total");
        assert_eq!(names, expected);
        assert!(bench(&Extractor::default(), &img, 0).is_err());
    }
}
