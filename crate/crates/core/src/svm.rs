//! One-vs-rest C-SVM with a polynomial kernel, plus a k-nearest-neighbor baseline.
//!
//! Each binary problem is solved in the dual with pairwise (SMO-style)
//! updates; the working pair is chosen by maximal violation for the first
//! index and second-order gain for the second. The Gram matrix is shared by
//! all binary problems since it does not depend on the labels.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::descriptor::DescriptorConfig;
use crate::{Error, Result};

const TAU: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SvmConfig {
    /// Box constraint on the dual coefficients.
    pub c: f64,
    pub degree: u32,
    /// Kernel scale; `None` means `1 / dimension`.
    pub gamma: Option<f64>,
    pub coef0: f64,
    /// Stopping tolerance on the maximal KKT violation.
    pub tol: f64,
    /// Stop once the violation has not improved for `max_passes × n` pair updates.
    pub max_passes: usize,
    /// Seeds the order in which training examples are presented to the solver.
    pub seed: u64,
    /// Min-max scale every feature to `[0, 1]` over the training set.
    pub scale: bool,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            degree: 3,
            gamma: None,
            coef0: 1.0,
            tol: 1e-3,
            max_passes: 10,
            seed: 0,
            scale: true,
        }
    }
}

impl SvmConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.c > 0.0 && self.c.is_finite()) {
            return bad(format!("C must be positive, got {}", self.c));
        }
        if self.degree < 1 {
            return bad("polynomial degree must be at least 1".to_string());
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return bad(format!("tolerance must be positive, got {}", self.tol));
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return bad(format!("gamma must be positive, got {g}"));
            }
        }
        if self.max_passes == 0 {
            return bad("max_passes must be at least 1".to_string());
        }
        Ok(())
    }
}

/// A labeled feature vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub label: String,
    pub features: Vec<f64>,
}

impl Sample {
    pub fn new(label: impl Into<String>, features: Vec<f64>) -> Self {
        Self {
            label: label.into(),
            features,
        }
    }
}

/// `K(u, v) = (gamma <u, v> + coef0)^degree`
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolyKernel {
    pub gamma: f64,
    pub coef0: f64,
    pub degree: u32,
}

impl PolyKernel {
    #[inline]
    pub fn eval(&self, u: &[f64], v: &[f64]) -> f64 {
        let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
        (self.gamma * dot + self.coef0).powi(self.degree as i32)
    }
}

/// Per-feature affine map fitted on the training set.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureScaling {
    pub min: Vec<f64>,
    pub range: Vec<f64>,
}

impl FeatureScaling {
    fn fit(rows: &[&[f64]]) -> Self {
        let dim = rows[0].len();
        let mut min = vec![f64::INFINITY; dim];
        let mut max = vec![f64::NEG_INFINITY; dim];
        for r in rows {
            for k in 0..dim {
                min[k] = min[k].min(r[k]);
                max[k] = max[k].max(r[k]);
            }
        }
        let range = min.iter().zip(&max).map(|(lo, hi)| hi - lo).collect();
        Self { min, range }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.min.iter().zip(&self.range))
            .map(|(v, (lo, r))| if *r > 0.0 { (v - lo) / r } else { 0.0 })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SupportVector {
    /// `alpha * y`, so `|coef| <= C`.
    pub coef: f64,
    pub features: Vec<f64>,
}

/// One class against the rest.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryModel {
    pub label: String,
    pub bias: f64,
    pub support: Vec<SupportVector>,
}

impl BinaryModel {
    pub fn decision(&self, kernel: &PolyKernel, x: &[f64]) -> f64 {
        self.support
            .iter()
            .map(|sv| sv.coef * kernel.eval(&sv.features, x))
            .sum::<f64>()
            + self.bias
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SvmModel {
    config: SvmConfig,
    kernel: PolyKernel,
    dim: usize,
    scaling: Option<FeatureScaling>,
    models: Vec<BinaryModel>,
    descriptor: Option<DescriptorConfig>,
}

/// Dual solution of one binary problem.
struct DualSolution {
    alpha: Vec<f64>,
    rho: f64,
}

/// Solves `min ½ aᵀQa − Σa` s.t. `0 ≤ a ≤ C`, `yᵀa = 0`, with `Q = yyᵀ ∘ K`.
fn solve_dual(gram: &[Vec<f64>], y: &[f64], cfg: &SvmConfig) -> DualSolution {
    let n = y.len();
    let c = cfg.c;
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let q = |i: usize, j: usize| y[i] * y[j] * gram[i][j];
    let upper = |a: f64| a >= c;
    let lower = |a: f64| a <= 0.0;

    let stall_limit = cfg.max_passes.saturating_mul(n.max(1));
    let max_iter = (100 * n).max(10_000_000);
    let mut best_gap = f64::INFINITY;
    let mut since_best = 0;

    for _ in 0..max_iter {
        // first index: maximal violator in the "up" set
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            let v = -y[t] * grad[t];
            let in_up = if y[t] > 0.0 {
                !upper(alpha[t])
            } else {
                !lower(alpha[t])
            };
            if in_up && v > gmax {
                gmax = v;
                i = t;
            }
        }
        // second index: largest second-order decrease in the "low" set
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut best_obj = f64::INFINITY;
        for t in 0..n {
            let in_low = if y[t] > 0.0 {
                !lower(alpha[t])
            } else {
                !upper(alpha[t])
            };
            if !in_low {
                continue;
            }
            let v = y[t] * grad[t];
            gmax2 = gmax2.max(v);
            if i == usize::MAX {
                continue;
            }
            let diff = gmax + v;
            if diff > 0.0 {
                let mut quad = gram[i][i] + gram[t][t] - 2.0 * gram[i][t];
                if quad <= 0.0 {
                    quad = TAU;
                }
                let obj = -diff * diff / quad;
                if obj < best_obj {
                    best_obj = obj;
                    j = t;
                }
            }
        }
        let gap = gmax + gmax2;
        if i == usize::MAX || j == usize::MAX || gap < cfg.tol {
            break;
        }
        if gap < best_gap {
            best_gap = gap;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= stall_limit {
                break;
            }
        }

        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let mut quad = gram[i][i] + gram[j][j] + 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = gram[i][i] + gram[j][j] - 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for (t, g) in grad.iter_mut().enumerate() {
            *g += q(t, i) * di + q(t, j) * dj;
        }
    }

    // offset: average over free vectors, else the midpoint of the feasible interval
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum_free) = (0usize, 0.0);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if upper(alpha[t]) {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if lower(alpha[t]) {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    let rho = if free > 0 {
        sum_free / free as f64
    } else {
        (ub + lb) / 2.0
    };
    DualSolution { alpha, rho }
}

fn sorted_labels<'a>(labels: impl Iterator<Item = &'a str>) -> Vec<String> {
    labels
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(str::to_string)
        .collect()
}

fn check_samples(samples: &[Sample]) -> Result<usize> {
    let first = samples.first().ok_or(Error::EmptyDataset)?;
    let dim = first.features.len();
    if dim == 0 {
        return Err(Error::InvalidConfig(
            "feature vectors are empty".to_string(),
        ));
    }
    for s in samples {
        if s.features.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: s.features.len(),
            });
        }
        if s.features.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "non-finite feature in sample labeled {:?}",
                s.label
            )));
        }
    }
    Ok(dim)
}

/// Trains one binary model per class.
pub fn train(samples: &[Sample], config: &SvmConfig) -> Result<SvmModel> {
    config.validate()?;
    let dim = check_samples(samples)?;
    let labels = sorted_labels(samples.iter().map(|s| s.label.as_str()));
    if labels.len() < 2 {
        return Err(Error::SingleClass(labels.len()));
    }

    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed));

    let raw: Vec<&[f64]> = order
        .iter()
        .map(|&k| samples[k].features.as_slice())
        .collect();
    let scaling = config.scale.then(|| FeatureScaling::fit(&raw));
    let rows: Vec<Vec<f64>> = match &scaling {
        Some(s) => raw.iter().map(|r| s.apply(r)).collect(),
        None => raw.iter().map(|r| r.to_vec()).collect(),
    };
    let kernel = PolyKernel {
        gamma: config.gamma.unwrap_or(1.0 / dim as f64),
        coef0: config.coef0,
        degree: config.degree,
    };
    let gram: Vec<Vec<f64>> = rows
        .par_iter()
        .map(|a| rows.iter().map(|b| kernel.eval(a, b)).collect())
        .collect();

    let models = labels
        .par_iter()
        .map(|label| {
            let y: Vec<f64> = order
                .iter()
                .map(|&k| {
                    if samples[k].label == *label {
                        1.0
                    } else {
                        -1.0
                    }
                })
                .collect();
            let sol = solve_dual(&gram, &y, config);
            let support = sol
                .alpha
                .iter()
                .enumerate()
                .filter(|(_, &a)| a > 0.0)
                .map(|(t, &a)| SupportVector {
                    coef: a * y[t],
                    features: rows[t].clone(),
                })
                .collect();
            BinaryModel {
                label: label.clone(),
                bias: -sol.rho,
                support,
            }
        })
        .collect();

    Ok(SvmModel {
        config: SvmConfig {
            gamma: Some(kernel.gamma),
            ..*config
        },
        kernel,
        dim,
        scaling,
        models,
        descriptor: None,
    })
}

impl SvmModel {
    pub fn config(&self) -> &SvmConfig {
        &self.config
    }

    pub fn kernel(&self) -> &PolyKernel {
        &self.kernel
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn models(&self) -> &[BinaryModel] {
        &self.models
    }

    pub fn scaling(&self) -> Option<&FeatureScaling> {
        self.scaling.as_ref()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.models.iter().map(|m| m.label.as_str()).collect()
    }

    /// Descriptor layout the model was trained on, if recorded.
    pub fn descriptor_config(&self) -> Option<&DescriptorConfig> {
        self.descriptor.as_ref()
    }

    pub fn with_descriptor_config(mut self, cfg: DescriptorConfig) -> Self {
        self.descriptor = Some(cfg);
        self
    }

    /// Maps a raw feature vector into the space the kernel sees.
    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(match &self.scaling {
            Some(s) => s.apply(x),
            None => x.to_vec(),
        })
    }

    /// One decision value per class, in label order.
    pub fn decision_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        let z = self.transform(x)?;
        Ok(self
            .models
            .iter()
            .map(|m| m.decision(&self.kernel, &z))
            .collect())
    }

    /// Index of the winning class; ties go to the smallest index.
    pub fn predict_index(&self, x: &[f64]) -> Result<usize> {
        let dv = self.decision_values(x)?;
        let mut best = 0;
        for (k, v) in dv.iter().enumerate() {
            if *v > dv[best] {
                best = k;
            }
        }
        Ok(best)
    }

    pub fn predict(&self, x: &[f64]) -> Result<&str> {
        Ok(&self.models[self.predict_index(x)?].label)
    }

    pub fn to_text(&self) -> Result<String> {
        let fmt_err = |msg: String| Error::Format { kind: "model", msg };
        let c = &self.config;
        let mut out = String::from("SDPFSVM1\n");
        write!(
            out,
            "config c={} degree={} gamma={} coef0={} tol={} max_passes={} seed={} scale={} dim={}",
            c.c,
            c.degree,
            self.kernel.gamma,
            c.coef0,
            c.tol,
            c.max_passes,
            c.seed,
            c.scale as u8,
            self.dim
        )
        .expect("string write");
        if let Some(d) = &self.descriptor {
            write!(
                out,
                " kd={} ka={} kc={} normalize={}",
                d.distance_bins, d.angle_bins, d.color_bins, d.normalize as u8
            )
            .expect("string write");
        }
        out.push('\n');
        if let Some(s) = &self.scaling {
            out.push_str("scale_min");
            s.min
                .iter()
                .for_each(|v| write!(out, " {v}").expect("string write"));
            out.push_str("\nscale_range");
            s.range
                .iter()
                .for_each(|v| write!(out, " {v}").expect("string write"));
            out.push('\n');
        }
        writeln!(out, "classes {}", self.models.len()).expect("string write");
        for m in &self.models {
            if m.label.contains('\n') || m.label.contains('\r') {
                return Err(fmt_err(format!(
                    "label {:?} contains a line break",
                    m.label
                )));
            }
            writeln!(out, "class {}", m.label).expect("string write");
            writeln!(out, "bias {}", m.bias).expect("string write");
            writeln!(out, "sv {}", m.support.len()).expect("string write");
            for sv in &m.support {
                write!(out, "{}", sv.coef).expect("string write");
                sv.features
                    .iter()
                    .for_each(|v| write!(out, " {v}").expect("string write"));
                out.push('\n');
            }
        }
        Ok(out)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let err = |msg: String| Error::Format { kind: "model", msg };
        let mut lines = text.lines();
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| err(format!("unexpected end of file, expected {what}")))
        };
        if next("header")?.trim() != "SDPFSVM1" {
            return Err(err("missing SDPFSVM1 header".to_string()));
        }
        let config_line = next("config line")?;
        let kv = config_line
            .strip_prefix("config ")
            .ok_or_else(|| err("expected config line".to_string()))?;
        let mut c = SvmConfig::default();
        let mut dim = None;
        let (mut kd, mut ka, mut kc, mut norm) = (None, None, None, None);
        for pair in kv.split_whitespace() {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| err(format!("bad config entry {pair:?}")))?;
            fn num<T: std::str::FromStr>(k: &str, v: &str) -> Result<T> {
                v.parse().map_err(|_| Error::Format {
                    kind: "model",
                    msg: format!("bad value for {k}: {v:?}"),
                })
            }
            match k {
                "c" => c.c = num(k, v)?,
                "degree" => c.degree = num(k, v)?,
                "gamma" => c.gamma = Some(num(k, v)?),
                "coef0" => c.coef0 = num(k, v)?,
                "tol" => c.tol = num(k, v)?,
                "max_passes" => c.max_passes = num(k, v)?,
                "seed" => c.seed = num(k, v)?,
                "scale" => c.scale = v == "1",
                "dim" => dim = Some(num::<usize>(k, v)?),
                "kd" => kd = Some(num::<usize>(k, v)?),
                "ka" => ka = Some(num::<usize>(k, v)?),
                "kc" => kc = Some(num::<usize>(k, v)?),
                "normalize" => norm = Some(v == "1"),
                _ => return Err(err(format!("unknown config key {k:?}"))),
            }
        }
        c.validate()?;
        let dim = dim.ok_or_else(|| err("config line lacks dim".to_string()))?;
        let gamma = c
            .gamma
            .ok_or_else(|| err("config line lacks gamma".to_string()))?;
        let descriptor = match (kd, ka, kc, norm) {
            (Some(distance_bins), Some(angle_bins), Some(color_bins), Some(normalize)) => {
                Some(DescriptorConfig {
                    distance_bins,
                    angle_bins,
                    color_bins,
                    normalize,
                })
            }
            (None, None, None, None) => None,
            _ => return Err(err("incomplete descriptor settings".to_string())),
        };

        let parse_floats = |s: &str, n: usize| -> Result<Vec<f64>> {
            let v: Vec<f64> = s
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| err(format!("bad number {t:?}")))
                })
                .collect::<Result<_>>()?;
            if v.len() != n {
                return Err(err(format!("expected {n} numbers, found {}", v.len())));
            }
            Ok(v)
        };
        let tagged = |line: &str, tag: &str| -> Result<String> {
            line.strip_prefix(tag)
                .and_then(|r| {
                    r.strip_prefix(' ')
                        .or(if r.is_empty() { Some("") } else { None })
                })
                .map(str::to_string)
                .ok_or_else(|| err(format!("expected {tag:?} line, found {line:?}")))
        };

        let mut line = next("classes")?;
        let scaling = if c.scale {
            let min = parse_floats(&tagged(line, "scale_min")?, dim)?;
            let range = parse_floats(&tagged(next("scale_range")?, "scale_range")?, dim)?;
            line = next("classes")?;
            Some(FeatureScaling { min, range })
        } else {
            None
        };
        let n_classes: usize = tagged(line, "classes")?
            .trim()
            .parse()
            .map_err(|_| err("bad class count".to_string()))?;
        let mut models = Vec::with_capacity(n_classes);
        for _ in 0..n_classes {
            let label = tagged(next("class")?, "class")?;
            let bias = parse_floats(&tagged(next("bias")?, "bias")?, 1)?[0];
            let count: usize = tagged(next("sv")?, "sv")?
                .trim()
                .parse()
                .map_err(|_| err("bad support vector count".to_string()))?;
            let mut support = Vec::with_capacity(count);
            for _ in 0..count {
                let mut v = parse_floats(next("support vector")?, dim + 1)?;
                let coef = v.remove(0);
                support.push(SupportVector { coef, features: v });
            }
            models.push(BinaryModel {
                label,
                bias,
                support,
            });
        }
        if models.len() < 2 {
            return Err(Error::SingleClass(models.len()));
        }
        Ok(SvmModel {
            kernel: PolyKernel {
                gamma,
                coef0: c.coef0,
                degree: c.degree,
            },
            config: c,
            dim,
            scaling,
            models,
            descriptor,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

/// Majority label among the `k` nearest training samples (Euclidean).
///
/// Distance ties keep training order; vote ties go to the smallest label.
pub fn knn_predict<'a>(train: &'a [Sample], query: &[f64], k: usize) -> Result<&'a str> {
    let dim = check_samples(train)?;
    if query.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: query.len(),
        });
    }
    if k == 0 || k > train.len() {
        return Err(Error::InvalidConfig(format!(
            "k must be in 1..={}, got {k}",
            train.len()
        )));
    }
    let mut dist: Vec<(f64, usize)> = train
        .iter()
        .enumerate()
        .map(|(t, s)| {
            let d: f64 = s
                .features
                .iter()
                .zip(query)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            (d, t)
        })
        .collect();
    dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let labels = sorted_labels(train.iter().map(|s| s.label.as_str()));
    let mut votes = vec![0usize; labels.len()];
    for &(_, t) in &dist[..k] {
        let pos = labels
            .binary_search_by(|l| l.as_str().cmp(&train[t].label))
            .expect("label present");
        votes[pos] += 1;
    }
    let mut best = 0;
    for (pos, &v) in votes.iter().enumerate() {
        if v > votes[best] {
            best = pos;
        }
    }
    let winner = &labels[best];
    Ok(train
        .iter()
        .find(|s| &s.label == winner)
        .map(|s| s.label.as_str())
        .expect("label present"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn blobs(
        rng: &mut impl Rng,
        centers: &[(&str, [f64; 2])],
        per: usize,
        spread: f64,
    ) -> Vec<Sample> {
        let mut out = Vec::new();
        for (label, c) in centers {
            for _ in 0..per {
                out.push(Sample::new(
                    *label,
                    vec![
                        c[0] + rng.random_range(-spread..spread),
                        c[1] + rng.random_range(-spread..spread),
                    ],
                ));
            }
        }
        out
    }

    fn accuracy(model: &SvmModel, data: &[Sample]) -> f64 {
        let ok = data
            .iter()
            .filter(|s| model.predict(&s.features).unwrap() == s.label)
            .count();
        ok as f64 / data.len() as f64
    }

    #[test]
    fn two_points() {
        let data = vec![
            Sample::new("a", vec![0.0, 1.0]),
            Sample::new("b", vec![1.0, 0.0]),
        ];
        let model = train(&data, &SvmConfig::default()).unwrap();
        assert_eq!(accuracy(&model, &data), 1.0);
    }

    #[test]
    fn separable_blobs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let data = blobs(&mut rng, &[("a", [0.0, 0.0]), ("b", [5.0, 5.0])], 20, 1.0);
        let model = train(&data, &SvmConfig::default()).unwrap();
        assert_eq!(accuracy(&model, &data), 1.0);
        for m in model.models() {
            for sv in &m.support {
                assert!(sv.coef.abs() <= model.config().c + 1e-12);
            }
        }
    }

    #[test]
    fn xor_needs_the_polynomial() {
        // sign of x*y crossed with radius: no class is a half-plane away from the rest
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut data = Vec::new();
        for (label, r, same_sign) in [
            ("in+", 1.0, true),
            ("in-", 1.0, false),
            ("out+", 3.0, true),
            ("out-", 3.0, false),
        ] {
            for k in 0..12 {
                let s = if k % 2 == 0 { 1.0 } else { -1.0 };
                let t = if same_sign { s } else { -s };
                data.push(Sample::new(
                    label,
                    vec![
                        s * r + rng.random_range(-0.2..0.2),
                        t * r + rng.random_range(-0.2..0.2),
                    ],
                ));
            }
        }
        let cfg = SvmConfig {
            c: 1000.0,
            scale: false,
            ..Default::default()
        };
        let poly = train(&data, &cfg).unwrap();
        assert_eq!(accuracy(&poly, &data), 1.0);
        let linear = train(&data, &SvmConfig { degree: 1, ..cfg }).unwrap();
        assert!(accuracy(&linear, &data) < 0.75);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            train(&[], &SvmConfig::default()),
            Err(Error::EmptyDataset)
        ));
        let one = vec![Sample::new("a", vec![1.0]), Sample::new("a", vec![2.0])];
        assert!(matches!(
            train(&one, &SvmConfig::default()),
            Err(Error::SingleClass(1))
        ));
        let ragged = vec![
            Sample::new("a", vec![1.0]),
            Sample::new("b", vec![2.0, 3.0]),
        ];
        assert!(matches!(
            train(&ragged, &SvmConfig::default()),
            Err(Error::DimensionMismatch { .. })
        ));
        let bad = SvmConfig {
            c: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());

        let data = vec![
            Sample::new("a", vec![0.0, 1.0]),
            Sample::new("b", vec![1.0, 0.0]),
        ];
        let model = train(&data, &SvmConfig::default()).unwrap();
        assert!(matches!(
            model.predict(&[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn predict_is_argmax_of_direct_kernel_expansion() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let data = blobs(
            &mut rng,
            &[("a", [0.0, 0.0]), ("b", [2.0, 0.0]), ("c", [1.0, 2.0])],
            15,
            1.2,
        );
        let model = train(&data, &SvmConfig::default()).unwrap();
        for _ in 0..200 {
            let x = vec![rng.random_range(-2.0..4.0), rng.random_range(-2.0..4.0)];
            let z = model.transform(&x).unwrap();
            let k = model.kernel();
            let direct: Vec<f64> = model
                .models()
                .iter()
                .map(|m| {
                    let mut s = m.bias;
                    for sv in &m.support {
                        let dot = sv.features[0] * z[0] + sv.features[1] * z[1];
                        s += sv.coef * (k.gamma * dot + k.coef0).powi(k.degree as i32);
                    }
                    s
                })
                .collect();
            let best = (0..direct.len()).fold(0, |b, t| if direct[t] > direct[b] { t } else { b });
            assert_eq!(model.predict(&x).unwrap(), model.labels()[best]);
        }
    }

    #[test]
    fn ties_go_to_the_first_label() {
        // a constant feature makes every decision value equal
        let data = vec![Sample::new("b", vec![0.0]), Sample::new("a", vec![0.0])];
        let model = train(&data, &SvmConfig::default()).unwrap();
        assert_eq!(model.predict(&[0.0]).unwrap(), "a");
    }

    #[test]
    fn deterministic_and_order_insensitive() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let data = blobs(
            &mut rng,
            &[("a", [0.0, 0.0]), ("b", [1.5, 1.0]), ("c", [0.0, 2.0])],
            12,
            1.0,
        );
        let cfg = SvmConfig {
            tol: 1e-10,
            ..Default::default()
        };
        let m1 = train(&data, &cfg).unwrap();
        let m2 = train(&data, &cfg).unwrap();
        assert_eq!(m1, m2);

        let mut permuted = data.clone();
        permuted.reverse();
        let m3 = train(&permuted, &cfg).unwrap();
        for _ in 0..100 {
            let x = [rng.random_range(-1.0..3.0), rng.random_range(-1.0..3.0)];
            let (a, b) = (
                m1.decision_values(&x).unwrap(),
                m3.decision_values(&x).unwrap(),
            );
            for (u, v) in a.iter().zip(&b) {
                assert!((u - v).abs() < 1e-6, "{u} vs {v}");
            }
        }
    }

    #[test]
    fn text_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let data = blobs(&mut rng, &[("x y", [0.0, 0.0]), ("z", [2.0, 2.0])], 8, 1.5);
        for scale in [true, false] {
            let model = train(
                &data,
                &SvmConfig {
                    scale,
                    ..Default::default()
                },
            )
            .unwrap()
            .with_descriptor_config(DescriptorConfig::default());
            let back = SvmModel::from_text(&model.to_text().unwrap()).unwrap();
            assert_eq!(back, model);
        }
        assert!(SvmModel::from_text("nope").is_err());
        assert!(SvmModel::from_text("SDPFSVM1\nconfig c=1\n").is_err());
    }

    #[test]
    fn knn_examples() {
        let train = vec![
            Sample::new("b", vec![0.0, 0.0]),
            Sample::new("a", vec![1.0, 0.0]),
            Sample::new("b", vec![5.0, 5.0]),
            Sample::new("a", vec![6.0, 5.0]),
        ];
        assert_eq!(knn_predict(&train, &[5.0, 5.0], 1).unwrap(), "b");
        // everything votes, 2 vs 2
        assert_eq!(knn_predict(&train, &[5.0, 5.0], 4).unwrap(), "a");
        assert!(knn_predict(&train, &[5.0, 5.0], 0).is_err());
        assert!(knn_predict(&train, &[5.0, 5.0], 5).is_err());
        assert!(matches!(
            knn_predict(&[], &[1.0], 1),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn knn_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let train: Vec<Sample> = (0..30)
                .map(|_| {
                    Sample::new(
                        ["p", "q", "r"][rng.random_range(0..3)],
                        vec![
                            rng.random_range(0.0..1.0),
                            rng.random_range(0.0..1.0),
                            rng.random_range(0.0..1.0),
                        ],
                    )
                })
                .collect();
            let q = [
                rng.random_range(0.0..1.0),
                rng.random_range(0.0..1.0),
                rng.random_range(0.0..1.0),
            ];
            let k = rng.random_range(1..8);
            // O(n^2) selection of the k nearest
            let mut taken = vec![false; train.len()];
            let mut counts = std::collections::BTreeMap::new();
            for _ in 0..k {
                let mut best = None;
                for (t, s) in train.iter().enumerate() {
                    if taken[t] {
                        continue;
                    }
                    let d: f64 = s
                        .features
                        .iter()
                        .zip(&q)
                        .map(|(a, b)| (a - b).powi(2))
                        .sum();
                    if best.is_none_or(|(bd, _)| d < bd) {
                        best = Some((d, t));
                    }
                }
                let t = best.unwrap().1;
                taken[t] = true;
                *counts.entry(train[t].label.clone()).or_insert(0) += 1;
            }
            let top = counts.values().max().copied().unwrap();
            let expected = counts.iter().find(|(_, &v)| v == top).unwrap().0.clone();
            assert_eq!(knn_predict(&train, &q, k).unwrap(), expected);
        }
    }
}
