use std::collections::HashMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use sdpf_core::dither::{dither, FixedWeights};
use sdpf_core::eval::{self, Dataset, EvalConfig, LabeledItem, EVAL_IMAGE_SIDE};
use sdpf_core::image::{load_image, save_image, Image, Rotation};
use sdpf_core::io::{load_descriptors, save_descriptors, DescriptorFile, DescriptorRecord};
use sdpf_core::svm::{self, Sample, SvmConfig, SvmModel};
use sdpf_core::synth::write_shape_dataset;
use sdpf_core::{DescriptorConfig, Extraction, Extractor};

#[derive(Parser)]
#[command(
    name = "sdpf",
    version,
    about = "Salient dither pattern features: extraction, classification, evaluation"
)]
struct Cli {
    #[command(flatten)]
    opts: SharedOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug)]
struct SharedOpts {
    /// Distance bins
    #[arg(long, global = true, default_value_t = 4)]
    kd: usize,
    /// Angle bins
    #[arg(long, global = true, default_value_t = 8)]
    ka: usize,
    /// Color bins (the palette has 8 colors)
    #[arg(long, global = true, default_value_t = 8)]
    kc: usize,
    /// Keep raw histogram counts instead of L1-normalizing
    #[arg(long, global = true)]
    no_normalize: bool,
    /// Non-maximal suppression window (odd, in patterns)
    #[arg(long, global = true, default_value_t = 5)]
    nms_window: usize,
    /// SVM box constraint C
    #[arg(long, global = true, default_value_t = 1.0)]
    svm_c: f64,
    /// Polynomial kernel degree
    #[arg(long, global = true, default_value_t = 3)]
    svm_degree: u32,
}

impl SharedOpts {
    fn descriptor(&self) -> DescriptorConfig {
        DescriptorConfig {
            distance_bins: self.kd,
            angle_bins: self.ka,
            color_bins: self.kc,
            normalize: !self.no_normalize,
        }
    }

    fn extractor(&self, cfg: DescriptorConfig) -> Result<Extractor> {
        Ok(Extractor::new(cfg)?.with_nms_window(self.nms_window)?)
    }

    fn svm(&self, seed: u64) -> SvmConfig {
        SvmConfig {
            c: self.svm_c,
            degree: self.svm_degree,
            seed,
            ..Default::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Error-diffuse an image onto the 8 RGB cube corners
    Dither { input: PathBuf, output: PathBuf },
    /// Draw salient points (red), centroid (blue) and orientation (green)
    Visualize { input: PathBuf, output: PathBuf },
    /// Extract descriptors for every image under <root>/<label>/
    Extract {
        root: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Resize to SIZE×SIZE first; 0 keeps the original size
        #[arg(long, default_value_t = EVAL_IMAGE_SIDE)]
        size: usize,
    },
    /// Train an SVM on a descriptor file; reports held-out AP when fraction < 1
    Train {
        descriptors: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Per-class share of images used for training
        #[arg(long, default_value_t = eval::DEFAULT_TRAIN_FRACTION)]
        fraction: f64,
    },
    /// Predict the label of one image
    Classify {
        model: PathBuf,
        image: PathBuf,
        #[arg(long, default_value_t = EVAL_IMAGE_SIDE)]
        size: usize,
    },
    /// Split, train and score a dataset directory
    Eval {
        root: PathBuf,
        /// Training rotations in degrees, e.g. 0,90,180,270
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        augment: Vec<i64>,
        /// Rotations applied to every test image
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "0",
            allow_hyphen_values = true
        )]
        test_rotations: Vec<i64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = eval::DEFAULT_TRAIN_FRACTION)]
        fraction: f64,
        /// Neighbors for the k-NN baseline
        #[arg(long, default_value_t = 1)]
        knn_k: usize,
        #[arg(long, default_value_t = EVAL_IMAGE_SIDE)]
        size: usize,
    },
    /// Per-stage timing of a single-threaded extraction, as CSV
    Bench {
        image: PathBuf,
        #[arg(long, default_value_t = 100)]
        reps: usize,
    },
    /// Write a synthetic shape dataset
    Synth {
        root: PathBuf,
        #[arg(long, default_value_t = 10)]
        classes: usize,
        #[arg(long, default_value_t = 20)]
        per_class: usize,
        #[arg(long, default_value_t = EVAL_IMAGE_SIDE)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn side(size: usize) -> Option<usize> {
    (size > 0).then_some(size)
}

fn load(path: &Path) -> Result<Image> {
    load_image(path).with_context(|| format!("cannot read image {}", path.display()))
}

fn cmd_dither(input: &Path, output: &Path) -> Result<()> {
    let ex = Extractor::default();
    let indexed = dither(&load(input)?, ex.palette(), &FixedWeights::default());
    save_image(&indexed.to_image(ex.palette()), output)?;
    Ok(())
}

fn mark(img: &mut Image, cx: i64, cy: i64, half: i64, rgb: [u8; 3]) {
    for y in cy - half..=cy + half {
        for x in cx - half..=cx + half {
            if x >= 0 && y >= 0 && (x as usize) < img.width() && (y as usize) < img.height() {
                img.set(x as usize, y as usize, rgb);
            }
        }
    }
}

fn draw_overlay(img: &mut Image, x: &Extraction) {
    for p in &x.points {
        mark(img, p.x as i64, p.y as i64, 1, [255, 0, 0]);
    }
    let Some(frame) = &x.frame else { return };
    let [cx, cy] = frame.centroid;
    let len = img.width().min(img.height()) as f64 / 3.0;
    let (sin, cos) = frame.theta0.to_radians().sin_cos();
    let steps = len.ceil() as usize * 2;
    for s in 0..=steps {
        let t = len * s as f64 / steps as f64;
        mark(
            img,
            (cx + t * cos).round() as i64,
            (cy + t * sin).round() as i64,
            0,
            [0, 255, 0],
        );
    }
    mark(img, cx.round() as i64, cy.round() as i64, 2, [0, 0, 255]);
}

fn cmd_visualize(opts: &SharedOpts, input: &Path, output: &Path) -> Result<()> {
    let mut img = load(input)?;
    let x = opts.extractor(opts.descriptor())?.extract_detailed(&img)?;
    draw_overlay(&mut img, &x);
    save_image(&img, output)?;
    match &x.frame {
        Some(f) => println!(
            "{} salient points, centroid ({:.1}, {:.1}), orientation {:.1} deg",
            x.points.len(),
            f.centroid[0],
            f.centroid[1],
            f.theta0
        ),
        None => println!("no salient points"),
    }
    Ok(())
}

fn cmd_extract(opts: &SharedOpts, root: &Path, output: &Path, size: usize) -> Result<()> {
    let ds = eval::ingest(root)?;
    let config = opts.descriptor();
    let extractor = opts.extractor(config)?;
    let items: Vec<LabeledItem> = ds
        .classes()
        .iter()
        .flat_map(|(label, paths)| {
            paths.iter().map(move |p| LabeledItem {
                path: p.clone(),
                label: label.clone(),
                rotation: Rotation::R0,
            })
        })
        .collect();
    let samples = eval::extract_items(&items, &extractor, side(size))?;
    let records = items
        .iter()
        .zip(samples)
        .map(|(item, s)| DescriptorRecord {
            path: item.path.display().to_string(),
            label: s.label,
            values: s.features,
        })
        .collect::<Vec<_>>();
    let n = records.len();
    save_descriptors(output, &DescriptorFile { config, records })?;
    println!(
        "wrote {n} descriptors for {} classes to {}",
        ds.classes().len(),
        output.display()
    );
    Ok(())
}

fn cmd_train(
    opts: &SharedOpts,
    input: &Path,
    output: &Path,
    seed: u64,
    fraction: f64,
) -> Result<()> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        bail!("--fraction must be in (0, 1], got {fraction}");
    }
    let file = load_descriptors(input)?;
    if file.records.is_empty() {
        bail!("{} holds no descriptors", input.display());
    }
    let samples: Vec<Sample> = file
        .records
        .iter()
        .map(|r| Sample::new(r.label.clone(), r.values.clone()))
        .collect();
    let svm_cfg = opts.svm(seed);

    let (train, test): (Vec<Sample>, Vec<Sample>) = if fraction >= 1.0 {
        (samples, Vec::new())
    } else {
        // split record indices with the same per-class protocol as image datasets
        let mut by_label: Vec<(String, Vec<PathBuf>)> = Vec::new();
        let mut slot: HashMap<&str, usize> = HashMap::new();
        for (k, s) in samples.iter().enumerate() {
            let at = *slot.entry(&s.label).or_insert_with(|| {
                by_label.push((s.label.clone(), Vec::new()));
                by_label.len() - 1
            });
            by_label[at].1.push(PathBuf::from(k.to_string()));
        }
        by_label.sort_by(|a, b| a.0.cmp(&b.0));
        let sp = eval::split(&Dataset::new(input, by_label)?, fraction, seed)?;
        let pick = |items: &[LabeledItem]| -> Vec<Sample> {
            items
                .iter()
                .map(|i| samples[i.path.to_string_lossy().parse::<usize>().expect("index")].clone())
                .collect()
        };
        (pick(&sp.train), pick(&sp.test))
    };

    let model = svm::train(&train, &svm_cfg)?.with_descriptor_config(file.config);
    model.save(output)?;
    println!(
        "trained on {} descriptors, {} classes; model written to {}",
        train.len(),
        model.labels().len(),
        output.display()
    );
    if !test.is_empty() {
        let labels = model.labels();
        let index = |l: &str| labels.binary_search(&l).expect("known label");
        let truth: Vec<usize> = test.iter().map(|s| index(&s.label)).collect();
        let svm_pred = test
            .iter()
            .map(|s| model.predict_index(&s.features))
            .collect::<Result<Vec<_>, _>>()?;
        let knn_pred = test
            .iter()
            .map(|s| svm::knn_predict(&train, &s.features, 1).map(index))
            .collect::<Result<Vec<_>, _>>()?;
        println!("held-out descriptors: {}", test.len());
        println!(
            "SVM AP: {:.2}",
            eval::average_precision(&svm_pred, &truth, labels.len())?
        );
        println!(
            "kNN AP: {:.2}",
            eval::average_precision(&knn_pred, &truth, labels.len())?
        );
    }
    Ok(())
}

fn cmd_classify(opts: &SharedOpts, model_path: &Path, image: &Path, size: usize) -> Result<()> {
    let model = SvmModel::load(model_path)?;
    let config = model
        .descriptor_config()
        .copied()
        .unwrap_or_else(|| opts.descriptor());
    let img = eval::prepare_image(&load(image)?, side(size))?;
    let d = opts.extractor(config)?.extract(&img)?;
    println!("{}", model.predict(d.values())?);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_eval(
    opts: &SharedOpts,
    root: &Path,
    augment: Vec<i64>,
    test_rotations: &[i64],
    seed: u64,
    fraction: f64,
    knn_k: usize,
    size: usize,
) -> Result<()> {
    let ds = eval::ingest(root)?;
    let cfg = EvalConfig {
        descriptor: opts.descriptor(),
        nms_window: opts.nms_window,
        svm: opts.svm(seed),
        train_fraction: fraction,
        seed,
        augment,
        test_rotations: test_rotations
            .iter()
            .map(|&d| Rotation::from_degrees(d))
            .collect::<Result<_, _>>()?,
        knn_k,
        image_side: side(size),
    };
    let r = eval::evaluate(&ds, &cfg)?;
    println!(
        "classes: {}  train: {}  test: {}",
        r.labels.len(),
        r.train_size,
        r.test_size
    );
    println!("SVM AP: {:.2}", r.svm_ap);
    println!("kNN AP: {:.2}", r.knn_ap);
    Ok(())
}

fn cmd_bench(opts: &SharedOpts, image: &Path, reps: usize) -> Result<()> {
    let img = load(image)?;
    let report = eval::bench(&opts.extractor(opts.descriptor())?, &img, reps)?;
    print!("{}", report.to_csv());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let o = &cli.opts;
    o.descriptor().validate()?;
    match cli.command {
        Command::Dither { input, output } => cmd_dither(&input, &output),
        Command::Visualize { input, output } => cmd_visualize(o, &input, &output),
        Command::Extract { root, output, size } => cmd_extract(o, &root, &output, size),
        Command::Train {
            descriptors,
            output,
            seed,
            fraction,
        } => cmd_train(o, &descriptors, &output, seed, fraction),
        Command::Classify { model, image, size } => cmd_classify(o, &model, &image, size),
        Command::Eval {
            root,
            augment,
            test_rotations,
            seed,
            fraction,
            knn_k,
            size,
        } => cmd_eval(
            o,
            &root,
            augment,
            &test_rotations,
            seed,
            fraction,
            knn_k,
            size,
        ),
        Command::Bench { image, reps } => cmd_bench(o, &image, reps),
        Command::Synth {
            root,
            classes,
            per_class,
            size,
            seed,
        } => {
            let ds = write_shape_dataset(&root, classes, per_class, size, seed)?;
            println!(
                "wrote {} images in {} classes to {}",
                ds.len(),
                ds.classes().len(),
                root.display()
            );
            Ok(())
        }
    }
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
