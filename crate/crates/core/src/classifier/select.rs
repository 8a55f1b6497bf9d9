//! Cross-validation and hyperparameter selection.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::classifier::svm::{class_list, train_dual, validate_features, Gram, SvmConfig};
use crate::error::{Error, Result};

pub const DEFAULT_SIZES: [usize; 5] = [16, 24, 32, 40, 48];
pub const DEFAULT_QUANTILES: [usize; 4] = [8, 16, 32, 64];
pub const DEFAULT_SFC_ORDERS: [u32; 8] = [3, 4, 5, 6, 7, 8, 9, 10];
pub const DEFAULT_FOLDS: usize = 5;

/// `1e-4, 1e-3, ..., 1e4`.
pub fn default_c_values() -> Vec<f64> {
    (-4..=4).map(|e| 10f64.powi(e)).collect()
}

/// Which image channels feed the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EncodingMode {
    Gaf,
    Mtf,
    /// Two channels, GAF first.
    Dual,
}

impl EncodingMode {
    pub fn channels(self) -> usize {
        match self {
            EncodingMode::Dual => 2,
            _ => 1,
        }
    }

    pub fn uses_quantiles(self) -> bool {
        self != EncodingMode::Gaf
    }
}

impl fmt::Display for EncodingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EncodingMode::Gaf => "gaf",
            EncodingMode::Mtf => "mtf",
            EncodingMode::Dual => "dual",
        })
    }
}

impl FromStr for EncodingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaf" => Ok(EncodingMode::Gaf),
            "mtf" => Ok(EncodingMode::Mtf),
            "dual" | "gaf-mtf" | "gafmtf" => Ok(EncodingMode::Dual),
            other => Err(Error::invalid(format!(
                "unknown mode '{other}' (expected gaf, mtf or dual)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelectionRule {
    /// Lowest cross-validated error; ties prefer larger S, larger Q, then
    /// smaller C.
    #[default]
    LowestError,
    /// Highest `mean - 3 std` of CV accuracy over the C grid, then the best C
    /// within the winning configuration.
    ThreeSigma,
}

impl fmt::Display for SelectionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SelectionRule::LowestError => "lowest-error",
            SelectionRule::ThreeSigma => "3sigma",
        })
    }
}

impl FromStr for SelectionRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lowest-error" | "error" | "grid" => Ok(SelectionRule::LowestError),
            "3sigma" | "three-sigma" => Ok(SelectionRule::ThreeSigma),
            other => Err(Error::invalid(format!(
                "unknown selection rule '{other}' (expected lowest-error or 3sigma)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParams {
    pub size: usize,
    /// Unused by GAF-only encoding.
    pub quantiles: Option<usize>,
    pub c: f64,
    /// Hilbert order; trajectory input only.
    pub sfc_order: Option<u32>,
}

/// Sample mean minus three sample standard deviations (`n - 1` denominator;
/// a single value has zero spread).
pub fn score_3sigma(accuracies: &[f64]) -> Result<f64> {
    let (mean, std) = mean_std(accuracies)?;
    Ok(mean - 3.0 * std)
}

pub fn mean_std(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::invalid("mean and deviation of an empty list"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Ok((mean, std))
}

/// Fold id per instance. Each class is shuffled and dealt round-robin,
/// continuing where the previous class stopped, so fold sizes differ by at
/// most one and class proportions are preserved.
pub fn stratified_folds(labels: &[String], folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds == 0 || folds > labels.len() {
        return Err(Error::invalid(format!(
            "cannot split {} instances into {folds} folds",
            labels.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; labels.len()];
    let mut next = 0;
    for class in class_list(labels) {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        for i in members {
            assignment[i] = next % folds;
            next += 1;
        }
    }
    Ok(assignment)
}

/// Cross-validated performance of one penalty value.
#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub c: f64,
    /// Held-out error rate per fold.
    pub fold_errors: Vec<f64>,
    /// Total held-out misclassifications across folds.
    pub misclassified: usize,
    pub instances: usize,
}

impl CvOutcome {
    pub fn error(&self) -> f64 {
        self.misclassified as f64 / self.instances as f64
    }

    pub fn accuracy(&self) -> f64 {
        1.0 - self.error()
    }
}

/// K-fold cross-validation of the linear SVM at every value of `c_values`.
pub fn cross_validate(
    features: &[Vec<f64>],
    labels: &[String],
    c_values: &[f64],
    folds: usize,
    seed: u64,
) -> Result<Vec<CvOutcome>> {
    validate_features(features, labels)?;
    let classes = class_list(labels);
    if classes.len() < 2 {
        return Err(Error::data("cross-validation needs at least two classes"));
    }
    let class_of: Vec<usize> = labels
        .iter()
        .map(|l| classes.iter().position(|c| c == l).unwrap_or(0))
        .collect();
    let assignment = stratified_folds(labels, folds, seed)?;
    let gram = Gram::new(features);
    let n = features.len();
    let mut outcomes: Vec<CvOutcome> = c_values
        .iter()
        .map(|&c| CvOutcome {
            c,
            fold_errors: Vec::with_capacity(folds),
            misclassified: 0,
            instances: n,
        })
        .collect();
    for fold in 0..folds {
        let train: Vec<usize> = (0..n).filter(|&i| assignment[i] != fold).collect();
        let held: Vec<usize> = (0..n).filter(|&i| assignment[i] == fold).collect();
        let present = class_list(&train.iter().map(|&i| labels[i].clone()).collect::<Vec<_>>());
        if present.len() < 2 {
            return Err(Error::data(format!(
                "fold {} leaves a single class in its training part; too few instances per class",
                fold + 1
            )));
        }
        for outcome in outcomes.iter_mut() {
            let config = SvmConfig::new(outcome.c, seed);
            let model = train_dual(&gram, &train, &class_of, classes.len(), &config);
            let wrong = held
                .iter()
                .filter(|&&t| model.predict(&gram, &train, t) != class_of[t])
                .count();
            outcome.fold_errors.push(wrong as f64 / held.len() as f64);
            outcome.misclassified += wrong;
        }
    }
    Ok(outcomes)
}

/// One evaluated encoding configuration and its CV results over C.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigResult {
    pub size: usize,
    pub quantiles: Option<usize>,
    pub sfc_order: Option<u32>,
    pub outcomes: Vec<CvOutcome>,
}

impl ConfigResult {
    /// `score_3sigma` of CV accuracy across the C grid.
    pub fn score_3sigma(&self) -> Result<f64> {
        score_3sigma(&self.outcomes.iter().map(CvOutcome::accuracy).collect::<Vec<_>>())
    }

    fn params(&self, c: f64) -> HyperParams {
        HyperParams {
            size: self.size,
            quantiles: self.quantiles,
            c,
            sfc_order: self.sfc_order,
        }
    }
}

/// Preference between configurations on everything but the score: larger
/// S, then larger Q, then smaller Hilbert order. `Less` means preferred.
fn structural_preference(a: &ConfigResult, b: &ConfigResult) -> Ordering {
    b.size
        .cmp(&a.size)
        .then_with(|| b.quantiles.cmp(&a.quantiles))
        .then_with(|| a.sfc_order.cmp(&b.sfc_order))
}

/// Best C of one configuration: fewest errors, ties to the smaller C.
fn best_outcome(config: &ConfigResult) -> Option<&CvOutcome> {
    config.outcomes.iter().min_by(|a, b| {
        a.misclassified
            .cmp(&b.misclassified)
            .then_with(|| a.c.total_cmp(&b.c))
    })
}

/// Picks hyperparameters from evaluated configurations. The result does not
/// depend on the order of `results`.
pub fn select(results: &[ConfigResult], rule: SelectionRule) -> Result<HyperParams> {
    let mut best: Option<(&ConfigResult, &CvOutcome, f64)> = None;
    for config in results {
        let Some(outcome) = best_outcome(config) else {
            continue;
        };
        let score = match rule {
            SelectionRule::LowestError => -(outcome.misclassified as f64),
            SelectionRule::ThreeSigma => config.score_3sigma()?,
        };
        let better = match best {
            None => true,
            Some((bc, bo, bs)) => match score.total_cmp(&bs) {
                Ordering::Greater => true,
                Ordering::Less => false,
                Ordering::Equal => match structural_preference(config, bc) {
                    Ordering::Less => true,
                    Ordering::Greater => false,
                    Ordering::Equal => outcome.c < bo.c,
                },
            },
        };
        if better {
            best = Some((config, outcome, score));
        }
    }
    best.map(|(config, outcome, _)| config.params(outcome.c))
        .ok_or_else(|| Error::invalid("empty hyperparameter grid"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_sigma_examples() {
        assert!((score_3sigma(&[0.8, 0.8, 0.8]).unwrap() - 0.8).abs() < 1e-15);
        assert!((score_3sigma(&[0.9, 0.8, 0.7]).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(score_3sigma(&[1.0]).unwrap(), 1.0);
        assert!(score_3sigma(&[]).is_err());
    }

    fn cfg(size: usize, q: usize, errs: &[(f64, usize)]) -> ConfigResult {
        ConfigResult {
            size,
            quantiles: Some(q),
            sfc_order: None,
            outcomes: errs
                .iter()
                .map(|&(c, m)| CvOutcome {
                    c,
                    fold_errors: vec![],
                    misclassified: m,
                    instances: 10,
                })
                .collect(),
        }
    }

    #[test]
    fn ties_prefer_larger_size() {
        let a = cfg(16, 8, &[(1.0, 1)]);
        let b = cfg(48, 8, &[(1.0, 1)]);
        let hp = select(&[a.clone(), b.clone()], SelectionRule::LowestError).unwrap();
        assert_eq!(hp.size, 48);
        let hp = select(&[b, a], SelectionRule::LowestError).unwrap();
        assert_eq!(hp.size, 48);
    }

    #[test]
    fn ties_then_larger_q_then_smaller_c() {
        let a = cfg(16, 8, &[(0.1, 2), (10.0, 2)]);
        let b = cfg(16, 32, &[(10.0, 2), (0.1, 2)]);
        let hp = select(&[a, b], SelectionRule::LowestError).unwrap();
        assert_eq!(hp.quantiles, Some(32));
        assert_eq!(hp.c, 0.1);
    }

    #[test]
    fn lower_error_beats_structure() {
        let a = cfg(16, 8, &[(1.0, 0)]);
        let b = cfg(48, 64, &[(1.0, 1)]);
        assert_eq!(select(&[a, b], SelectionRule::LowestError).unwrap().size, 16);
    }

    #[test]
    fn three_sigma_prefers_stable_config() {
        // a: best single C but volatile; b: uniformly decent
        let a = cfg(16, 8, &[(0.1, 0), (1.0, 5), (10.0, 5)]);
        let b = cfg(24, 8, &[(0.1, 2), (1.0, 2), (10.0, 1)]);
        let hp = select(&[a.clone(), b.clone()], SelectionRule::ThreeSigma).unwrap();
        assert_eq!((hp.size, hp.c), (24, 10.0));
        assert_eq!(select(&[a, b], SelectionRule::LowestError).unwrap().size, 16);
    }

    #[test]
    fn single_config() {
        let a = cfg(32, 16, &[(1.0, 3)]);
        let hp = select(&[a], SelectionRule::LowestError).unwrap();
        assert_eq!((hp.size, hp.quantiles, hp.c), (32, Some(16), 1.0));
        assert!(select(&[], SelectionRule::LowestError).is_err());
    }

    #[test]
    fn folds_are_stratified_and_balanced() {
        let labels: Vec<String> = (0..23).map(|i| if i < 15 { "a" } else { "b" }.to_string()).collect();
        let f = stratified_folds(&labels, 5, 3).unwrap();
        let mut sizes = [0; 5];
        let mut per_class = [[0; 5]; 2];
        for (i, &k) in f.iter().enumerate() {
            sizes[k] += 1;
            per_class[usize::from(i >= 15)][k] += 1;
        }
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        assert!(per_class[0].iter().all(|&c| c == 3));
        assert!(per_class[1].iter().all(|&c| c == 1 || c == 2));
    }

    #[test]
    fn one_instance_per_class_fails_cv() {
        let x = vec![vec![0.0], vec![1.0]];
        let y = vec!["a".to_string(), "b".to_string()];
        assert!(cross_validate(&x, &y, &[1.0], 2, 0).is_err());
    }

    #[test]
    fn cv_on_separable_data() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![if i % 2 == 0 { -1.0 } else { 1.0 }, i as f64 * 0.01]).collect();
        let y: Vec<String> = (0..20).map(|i| (i % 2).to_string()).collect();
        let out = cross_validate(&x, &y, &default_c_values(), 5, 0).unwrap();
        assert_eq!(out.len(), 9);
        assert_eq!(out.last().unwrap().misclassified, 0);
        assert!(out.iter().all(|o| o.fold_errors.len() == 5));
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("GAF".parse::<EncodingMode>().unwrap(), EncodingMode::Gaf);
        assert_eq!("gaf-mtf".parse::<EncodingMode>().unwrap(), EncodingMode::Dual);
        assert!("rgb".parse::<EncodingMode>().is_err());
        assert_eq!("3sigma".parse::<SelectionRule>().unwrap(), SelectionRule::ThreeSigma);
    }
}
