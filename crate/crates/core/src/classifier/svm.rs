//! Linear soft-margin SVM, one-vs-rest, trained by dual coordinate descent
//! on the L1-loss (hinge) problem
//!
//! ```text
//! min_w  1/2 |w|^2 + C * sum_i max(0, 1 - y_i w.x_i)
//! ```
//!
//! Every input is augmented with a constant bias feature whose value is the
//! root-mean-square norm of the training inputs, so the bias is regularised
//! together with `w`. The solver works on the Gram matrix: each coordinate
//! step costs `O(n)` instead of `O(d)`.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const DEFAULT_MAX_EPOCHS: usize = 1000;
pub const DEFAULT_TOLERANCE: f64 = 1e-6;

/// Orders class labels numerically when both parse as numbers, otherwise
/// lexicographically.
pub fn compare_labels(a: &str, b: &str) -> Ordering {
    match (a.trim().parse::<f64>(), b.trim().parse::<f64>()) {
        (Ok(x), Ok(y)) => x.total_cmp(&y).then_with(|| a.cmp(b)),
        _ => a.cmp(b),
    }
}

/// Sorted distinct labels.
pub fn class_list(labels: &[String]) -> Vec<String> {
    let mut classes = labels.to_vec();
    classes.sort_by(|a, b| compare_labels(a, b));
    classes.dedup();
    classes
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmConfig {
    pub c: f64,
    pub max_epochs: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl SvmConfig {
    pub fn new(c: f64, seed: u64) -> Self {
        SvmConfig {
            c,
            max_epochs: DEFAULT_MAX_EPOCHS,
            tolerance: DEFAULT_TOLERANCE,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSvmModel {
    pub classes: Vec<String>,
    /// One weight vector per class (one-vs-rest).
    pub weights: Vec<Vec<f64>>,
    /// Weight of the constant bias feature, per class.
    pub biases: Vec<f64>,
    /// Value of the constant bias feature.
    pub bias_scale: f64,
    pub c: f64,
}

impl LinearSvmModel {
    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| dot(w, x) + b * self.bias_scale)
            .collect()
    }

    /// Index of the highest-scoring class; ties go to the lowest index.
    pub fn predict_index(&self, x: &[f64]) -> usize {
        argmax(&self.scores(x))
    }

    pub fn predict(&self, x: &[f64]) -> &str {
        &self.classes[self.predict_index(x)]
    }

    pub fn accuracy(&self, features: &[Vec<f64>], labels: &[String]) -> f64 {
        let hits = features
            .iter()
            .zip(labels)
            .filter(|(x, y)| self.predict(x) == y.as_str())
            .count();
        hits as f64 / features.len() as f64
    }
}

pub(crate) fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Checks shapes and finiteness and returns the feature dimension.
pub(crate) fn validate_features(features: &[Vec<f64>], labels: &[String]) -> Result<usize> {
    if features.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} feature vectors but {} labels",
            features.len(),
            labels.len()
        )));
    }
    let dim = features
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::invalid("no training instances"))?;
    for (i, f) in features.iter().enumerate() {
        if f.len() != dim {
            return Err(Error::invalid(format!(
                "feature vector {i} has length {}, expected {dim}",
                f.len()
            )));
        }
        if f.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical(format!("non-finite feature in instance {i}")));
        }
    }
    Ok(dim)
}

/// Inner products of the raw (un-augmented) feature vectors.
#[derive(Debug, Clone)]
pub(crate) struct Gram {
    n: usize,
    k: Vec<f64>,
}

impl Gram {
    pub fn new(features: &[Vec<f64>]) -> Self {
        let n = features.len();
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = dot(&features[i], &features[j]);
                k[i * n + j] = v;
                k[j * n + i] = v;
            }
        }
        Gram { n, k }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.k[i * self.n + j]
    }

    /// Bias feature value for a training subset: RMS norm of its inputs.
    pub fn bias_scale(&self, subset: &[usize]) -> f64 {
        let ms = subset.iter().map(|&i| self.get(i, i)).sum::<f64>() / subset.len() as f64;
        if ms > 0.0 {
            ms.sqrt()
        } else {
            1.0
        }
    }
}

/// Dual solution of one binary problem over `subset` of a Gram matrix.
/// Returns `alpha_i * y_i` per subset member.
pub(crate) fn solve_binary(
    gram: &Gram,
    subset: &[usize],
    positive: &[bool],
    bias_sq: f64,
    config: &SvmConfig,
) -> Vec<f64> {
    let n = subset.len();
    let y: Vec<f64> = positive.iter().map(|&p| if p { 1.0 } else { -1.0 }).collect();
    let diag: Vec<f64> = subset.iter().map(|&i| gram.get(i, i) + bias_sq).collect();
    let mut alpha = vec![0.0; n];
    // f_i = w . x_i with w = sum_j alpha_j y_j x_j
    let mut f = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let c = config.c;
    for _ in 0..config.max_epochs {
        order.shuffle(&mut rng);
        let mut pg_max = f64::NEG_INFINITY;
        let mut pg_min = f64::INFINITY;
        for &i in &order {
            let g = y[i] * f[i] - 1.0;
            let pg = if alpha[i] == 0.0 {
                g.min(0.0)
            } else if alpha[i] == c {
                g.max(0.0)
            } else {
                g
            };
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);
            if pg.abs() > 1e-12 && diag[i] > 0.0 {
                let old = alpha[i];
                alpha[i] = (old - g / diag[i]).clamp(0.0, c);
                let delta = (alpha[i] - old) * y[i];
                if delta != 0.0 {
                    let gi = subset[i];
                    for (fj, &sj) in f.iter_mut().zip(subset) {
                        *fj += delta * (gram.get(gi, sj) + bias_sq);
                    }
                }
            }
        }
        if pg_max - pg_min <= config.tolerance {
            break;
        }
    }
    alpha.iter().zip(&y).map(|(a, y)| a * y).collect()
}

/// One-vs-rest dual coefficients for every class over a training subset.
pub(crate) struct DualModel {
    pub coefficients: Vec<Vec<f64>>,
    pub bias_scale: f64,
}

pub(crate) fn train_dual(
    gram: &Gram,
    subset: &[usize],
    class_of: &[usize],
    classes: usize,
    config: &SvmConfig,
) -> DualModel {
    let bias_scale = gram.bias_scale(subset);
    let bias_sq = bias_scale * bias_scale;
    let coefficients = (0..classes)
        .map(|cls| {
            let positive: Vec<bool> = subset.iter().map(|&i| class_of[i] == cls).collect();
            solve_binary(gram, subset, &positive, bias_sq, config)
        })
        .collect();
    DualModel {
        coefficients,
        bias_scale,
    }
}

impl DualModel {
    /// Predicted class of instance `t` using Gram entries against the subset.
    pub fn predict(&self, gram: &Gram, subset: &[usize], t: usize) -> usize {
        let b2 = self.bias_scale * self.bias_scale;
        let scores: Vec<f64> = self
            .coefficients
            .iter()
            .map(|coef| {
                coef.iter()
                    .zip(subset)
                    .map(|(a, &i)| a * (gram.get(i, t) + b2))
                    .sum()
            })
            .collect();
        argmax(&scores)
    }
}

/// Trains a one-vs-rest linear SVM with penalty `c`.
pub fn train_svm(features: &[Vec<f64>], labels: &[String], c: f64, seed: u64) -> Result<LinearSvmModel> {
    train_svm_with(features, labels, &SvmConfig::new(c, seed))
}

pub fn train_svm_with(
    features: &[Vec<f64>],
    labels: &[String],
    config: &SvmConfig,
) -> Result<LinearSvmModel> {
    let dim = validate_features(features, labels)?;
    if !(config.c.is_finite() && config.c > 0.0) {
        return Err(Error::invalid(format!("penalty C must be positive, got {}", config.c)));
    }
    let classes = class_list(labels);
    if classes.len() < 2 {
        return Err(Error::data(format!(
            "training data has a single class ({})",
            classes.first().map_or("", String::as_str)
        )));
    }
    let class_of: Vec<usize> = labels
        .iter()
        .map(|l| classes.iter().position(|c| c == l).unwrap_or(0))
        .collect();
    let gram = Gram::new(features);
    let subset: Vec<usize> = (0..features.len()).collect();
    let dual = train_dual(&gram, &subset, &class_of, classes.len(), config);
    let mut weights = Vec::with_capacity(classes.len());
    let mut biases = Vec::with_capacity(classes.len());
    for coef in &dual.coefficients {
        let mut w = vec![0.0; dim];
        let mut b = 0.0;
        for (a, x) in coef.iter().zip(features) {
            if *a != 0.0 {
                w.iter_mut().zip(x).for_each(|(wj, xj)| *wj += a * xj);
                b += a * dual.bias_scale;
            }
        }
        weights.push(w);
        biases.push(b);
    }
    Ok(LinearSvmModel {
        classes,
        weights,
        biases,
        bias_scale: dual.bias_scale,
        c: config.c,
    })
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
