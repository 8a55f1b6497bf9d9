//! End-to-end runs: encode, pretrain, extract features, select, evaluate.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::classifier::dual::assemble_dual_channel;
use crate::classifier::select::{
    cross_validate, default_c_values, mean_std, select, ConfigResult, CvOutcome, EncodingMode,
    HyperParams, SelectionRule, DEFAULT_FOLDS, DEFAULT_QUANTILES, DEFAULT_SFC_ORDERS, DEFAULT_SIZES,
};
use crate::classifier::svm::{class_list, train_svm, LinearSvmModel};
use crate::error::{Error, Result};
use crate::gaf::encode_gaf;
use crate::io::dataset::{LabeledDataset, TrajectoryDataset};
use crate::mtf::encode_mtf;
use crate::series::Series;
use crate::sfc::{linearize_in, stretch_series, BoundingBox, HilbertMap};
use crate::tica::{pretrain_network, Image, LayerPretrainSummary, NetworkConfig, Termination, TiledNetwork};

/// Grid ranges and protocol settings.
#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub sizes: Vec<usize>,
    pub quantiles: Vec<usize>,
    pub c_values: Vec<f64>,
    /// Hilbert orders tried for trajectory input.
    pub sfc_orders: Vec<u32>,
    pub folds: usize,
    pub rule: SelectionRule,
    /// Pretrain on training images only instead of train and test.
    pub inductive: bool,
    pub network: NetworkConfig,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            sizes: DEFAULT_SIZES.to_vec(),
            quantiles: DEFAULT_QUANTILES.to_vec(),
            c_values: default_c_values(),
            sfc_orders: DEFAULT_SFC_ORDERS.to_vec(),
            folds: DEFAULT_FOLDS,
            rule: SelectionRule::LowestError,
            inductive: false,
            network: NetworkConfig::default(),
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() || self.c_values.is_empty() || self.quantiles.is_empty() {
            return Err(Error::invalid("grid needs at least one size, quantile count and C"));
        }
        let min = self.network.min_pretrain_side();
        if let Some(&s) = self.sizes.iter().find(|&&s| s < min) {
            return Err(Error::invalid(format!(
                "image size {s} is below the network minimum of {min}"
            )));
        }
        if let Some(&q) = self.quantiles.iter().find(|&&q| q < 2) {
            return Err(Error::invalid(format!("quantile count {q} must be at least 2")));
        }
        if let Some(c) = self.c_values.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
            return Err(Error::invalid(format!("penalty {c} must be positive")));
        }
        if self.folds < 2 {
            return Err(Error::invalid("cross-validation needs at least 2 folds"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedParams {
    pub size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantiles: Option<usize>,
    pub c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sfc_order: Option<u32>,
}

impl From<HyperParams> for SelectedParams {
    fn from(h: HyperParams) -> Self {
        SelectedParams {
            size: h.size,
            quantiles: h.quantiles,
            c: h.c,
            sfc_order: h.sfc_order,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PretrainRecord {
    pub layer: usize,
    pub patches: usize,
    pub iterations: usize,
    pub termination: String,
    pub initial_objective: f64,
    pub final_objective: f64,
}

/// One grid cell: an encoding configuration at one penalty value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantiles: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sfc_order: Option<u32>,
    pub c: f64,
    pub fold_errors: Vec<f64>,
    /// Pooled held-out error over all folds.
    pub error: f64,
    pub mean_error: f64,
    pub std_error: f64,
    /// 3-sigma score of the configuration's CV accuracy across the C grid.
    pub score_3sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub dataset: String,
    pub mode: String,
    pub seed: u64,
    pub selection_rule: String,
    pub transductive: bool,
    pub folds: usize,
    pub train_instances: usize,
    pub test_instances: usize,
    pub train_error: f64,
    pub test_error: f64,
    /// Cross-validated error of the selected cell.
    pub cv_error: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
    pub classes: Vec<String>,
    /// Rows are true classes, columns predicted classes, both in `classes`
    /// order.
    pub confusion: Vec<Vec<u64>>,
    pub warnings: Vec<String>,
    pub selected: SelectedParams,
    pub pretraining: Vec<PretrainRecord>,
    pub cells: Vec<CellRecord>,
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub report: EvaluationReport,
    pub model: LinearSvmModel,
    pub network: TiledNetwork,
}

/// Network features of both splits for one encoding configuration.
#[derive(Debug, Clone)]
pub struct FeatureBlock {
    pub train: Vec<Vec<f64>>,
    pub test: Vec<Vec<f64>>,
    pub network: TiledNetwork,
    pub pretraining: Vec<LayerPretrainSummary>,
}

/// Deterministic sub-seed (splitmix64 finaliser).
pub(crate) fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Encodes one series as a network input. Series shorter than `size` are
/// first stretched by duplication.
pub fn encode_image(
    series: &Series,
    mode: EncodingMode,
    size: usize,
    quantiles: usize,
    seed: u64,
) -> Result<Image> {
    let stretched;
    let series = if series.len() < size {
        stretched = stretch_series(series, size, seed)?;
        &stretched
    } else {
        series
    };
    match mode {
        EncodingMode::Gaf => {
            let g = encode_gaf(series, size)?;
            Image::new(size, 1, g.matrix.as_slice().to_vec())
        }
        EncodingMode::Mtf => {
            let m = encode_mtf(series, quantiles, size)?;
            Image::new(size, 1, m.matrix.as_slice().to_vec())
        }
        EncodingMode::Dual => Ok(assemble_dual_channel(
            encode_gaf(series, size)?,
            encode_mtf(series, quantiles, size)?,
        )?
        .to_image()),
    }
}

/// Encodes a list of series; `offset` keeps stretch seeds distinct across
/// splits.
fn encode_all(
    series: &[Series],
    offset: usize,
    mode: EncodingMode,
    size: usize,
    quantiles: usize,
    seed: u64,
    split: &str,
) -> Result<Vec<Image>> {
    series
        .iter()
        .enumerate()
        .map(|(i, s)| {
            encode_image(s, mode, size, quantiles, derive_seed(seed, (offset + i) as u64))
                .map_err(|e| e.context(format!("{split} instance {}", i + 1)))
        })
        .collect()
}

/// Encodes both splits, pretrains the network and forwards every image.
#[allow(clippy::too_many_arguments)]
pub fn compute_features(
    train: &[Series],
    test: &[Series],
    mode: EncodingMode,
    size: usize,
    quantiles: usize,
    network: &NetworkConfig,
    inductive: bool,
    seed: u64,
) -> Result<FeatureBlock> {
    let train_img = encode_all(train, 0, mode, size, quantiles, seed, "train")?;
    let test_img = encode_all(test, train.len(), mode, size, quantiles, seed, "test")?;
    let (net, pretraining) = if inductive {
        pretrain_network(&train_img, network, seed)?
    } else {
        let all: Vec<Image> = train_img.iter().chain(&test_img).cloned().collect();
        pretrain_network(&all, network, seed)?
    };
    let forward = |imgs: &[Image], split: &str| -> Result<Vec<Vec<f64>>> {
        imgs.iter()
            .enumerate()
            .map(|(i, img)| {
                net.forward(img)
                    .map_err(|e| e.context(format!("{split} instance {}", i + 1)))
            })
            .collect()
    };
    Ok(FeatureBlock {
        train: forward(&train_img, "train")?,
        test: forward(&test_img, "test")?,
        network: net,
        pretraining,
    })
}

/// A labelled train/test pair of series collections.
#[derive(Debug, Clone)]
pub struct SeriesSplit {
    pub name: String,
    pub train: Vec<Series>,
    pub train_labels: Vec<String>,
    pub test: Vec<Series>,
    pub test_labels: Vec<String>,
}

impl SeriesSplit {
    pub fn from_datasets(train: &LabeledDataset, test: &LabeledDataset) -> Self {
        SeriesSplit {
            name: train.name.clone(),
            train: train.series(),
            train_labels: train.labels(),
            test: test.series(),
            test_labels: test.labels(),
        }
    }
}

type ConfigKey = (Option<u32>, usize, Option<usize>);

struct Evaluated {
    results: Vec<ConfigResult>,
    blocks: BTreeMap<ConfigKey, FeatureBlock>,
    warnings: Vec<String>,
}

fn effective_folds(requested: usize, n: usize, warnings: &mut Vec<String>) -> usize {
    if n < requested {
        warnings.push(format!(
            "only {n} training instances: cross-validation reduced to {n} folds"
        ));
        n
    } else {
        requested
    }
}

fn evaluate_grid(
    splits: &[(Option<u32>, SeriesSplit)],
    mode: EncodingMode,
    grid: &GridConfig,
    seed: u64,
    verbose: bool,
) -> Result<Evaluated> {
    grid.validate()?;
    let mut warnings = Vec::new();
    let mut results = Vec::new();
    let mut blocks = BTreeMap::new();
    let quantile_choices: Vec<Option<usize>> = if mode.uses_quantiles() {
        grid.quantiles.iter().copied().map(Some).collect()
    } else {
        vec![None]
    };
    for (order, split) in splits {
        if split.train.is_empty() {
            return Err(Error::data("training set is empty"));
        }
        let folds = effective_folds(grid.folds, split.train.len(), &mut warnings);
        for &size in &grid.sizes {
            for &q in &quantile_choices {
                if verbose {
                    eprintln!(
                        "evaluating S={size}{}{}",
                        q.map(|q| format!(" Q={q}")).unwrap_or_default(),
                        order.map(|p| format!(" order={p}")).unwrap_or_default()
                    );
                }
                let block = compute_features(
                    &split.train,
                    &split.test,
                    mode,
                    size,
                    q.unwrap_or(2),
                    &grid.network,
                    grid.inductive,
                    seed,
                )
                .map_err(|e| e.context(format!("dataset '{}', S={size}", split.name)))?;
                let outcomes = cross_validate(&block.train, &split.train_labels, &grid.c_values, folds, seed)
                    .map_err(|e| e.context(format!("dataset '{}', S={size}", split.name)))?;
                results.push(ConfigResult {
                    size,
                    quantiles: q,
                    sfc_order: *order,
                    outcomes,
                });
                blocks.insert((*order, size, q), block);
            }
        }
    }
    Ok(Evaluated {
        results,
        blocks,
        warnings,
    })
}

fn cell_records(results: &[ConfigResult]) -> Result<Vec<CellRecord>> {
    let mut cells = Vec::new();
    for r in results {
        let score = r.score_3sigma()?;
        for o in &r.outcomes {
            let (mean, std) = mean_std(&o.fold_errors)?;
            cells.push(CellRecord {
                size: r.size,
                quantiles: r.quantiles,
                sfc_order: r.sfc_order,
                c: o.c,
                fold_errors: o.fold_errors.clone(),
                error: o.error(),
                mean_error: mean,
                std_error: std,
                score_3sigma: score,
            });
        }
    }
    Ok(cells)
}

fn termination_name(t: Termination) -> &'static str {
    match t {
        Termination::Converged => "converged",
        Termination::MaxIterations => "max-iterations",
        Termination::Stalled => "stalled",
    }
}

fn pretrain_records(summaries: &[LayerPretrainSummary]) -> Vec<PretrainRecord> {
    summaries
        .iter()
        .enumerate()
        .map(|(i, s)| PretrainRecord {
            layer: i + 1,
            patches: s.patches,
            iterations: s.report.iterations,
            termination: termination_name(s.report.termination).to_string(),
            initial_objective: s.report.objective_history.first().copied().unwrap_or(f64::NAN),
            final_objective: s.report.objective_history.last().copied().unwrap_or(f64::NAN),
        })
        .collect()
}

fn error_rate(model: &LinearSvmModel, features: &[Vec<f64>], labels: &[String]) -> f64 {
    if features.is_empty() {
        0.0
    } else {
        1.0 - model.accuracy(features, labels)
    }
}

/// Trains the final SVM on a feature block and assembles the report.
#[allow(clippy::too_many_arguments)]
fn finish(
    split: &SeriesSplit,
    block: FeatureBlock,
    hp: HyperParams,
    cv: &CvOutcome,
    cells: Vec<CellRecord>,
    warnings: Vec<String>,
    mode: EncodingMode,
    grid: &GridConfig,
    folds: usize,
    seed: u64,
) -> Result<PipelineOutcome> {
    let model = train_svm(&block.train, &split.train_labels, hp.c, seed)
        .map_err(|e| e.context(format!("dataset '{}'", split.name)))?;
    let mut all_labels = split.train_labels.clone();
    all_labels.extend(split.test_labels.iter().cloned());
    let classes = class_list(&all_labels);
    let mut confusion = vec![vec![0u64; classes.len()]; classes.len()];
    for (x, y) in block.test.iter().zip(&split.test_labels) {
        let truth = classes.iter().position(|c| c == y).unwrap_or(0);
        let pred = classes.iter().position(|c| c == model.predict(x)).unwrap_or(0);
        confusion[truth][pred] += 1;
    }
    let report = EvaluationReport {
        dataset: split.name.clone(),
        mode: mode.to_string(),
        seed,
        selection_rule: grid.rule.to_string(),
        transductive: !grid.inductive,
        folds,
        train_instances: split.train.len(),
        test_instances: split.test.len(),
        train_error: error_rate(&model, &block.train, &split.train_labels),
        test_error: error_rate(&model, &block.test, &split.test_labels),
        cv_error: cv.error(),
        wall_time_s: None,
        classes,
        confusion,
        warnings,
        selected: hp.into(),
        pretraining: pretrain_records(&block.pretraining),
        cells,
    };
    Ok(PipelineOutcome {
        report,
        model,
        network: block.network,
    })
}

fn run_splits(
    splits: Vec<(Option<u32>, SeriesSplit)>,
    mode: EncodingMode,
    grid: &GridConfig,
    seed: u64,
    verbose: bool,
) -> Result<PipelineOutcome> {
    let mut evaluated = evaluate_grid(&splits, mode, grid, seed, verbose)?;
    let hp = select(&evaluated.results, grid.rule)?;
    let key = (hp.sfc_order, hp.size, hp.quantiles);
    let cv = evaluated
        .results
        .iter()
        .find(|r| (r.sfc_order, r.size, r.quantiles) == key)
        .and_then(|r| r.outcomes.iter().find(|o| o.c == hp.c))
        .cloned()
        .ok_or_else(|| Error::invalid("selected cell missing from the grid"))?;
    let block = evaluated
        .blocks
        .remove(&key)
        .ok_or_else(|| Error::invalid("selected configuration has no features"))?;
    let split = &splits
        .iter()
        .find(|(o, _)| *o == hp.sfc_order)
        .ok_or_else(|| Error::invalid("selected order missing"))?
        .1;
    let folds = cv.fold_errors.len();
    let cells = cell_records(&evaluated.results)?;
    finish(split, block, hp, &cv, cells, evaluated.warnings, mode, grid, folds, seed)
}

/// Full protocol on series data: grid search with cross-validation on the
/// training split, then a final fit and test evaluation.
pub fn run_experiment(
    train: &LabeledDataset,
    test: &LabeledDataset,
    mode: EncodingMode,
    grid: &GridConfig,
    seed: u64,
    verbose: bool,
) -> Result<PipelineOutcome> {
    run_splits(
        vec![(None, SeriesSplit::from_datasets(train, test))],
        mode,
        grid,
        seed,
        verbose,
    )
}

/// Runs fixed hyperparameters (no search); the CV error of that single cell
/// is still reported.
pub fn run_pipeline(
    train: &LabeledDataset,
    test: &LabeledDataset,
    mode: EncodingMode,
    hp: &HyperParams,
    grid: &GridConfig,
    seed: u64,
) -> Result<PipelineOutcome> {
    let fixed = GridConfig {
        sizes: vec![hp.size],
        quantiles: vec![hp.quantiles.unwrap_or(2)],
        c_values: vec![hp.c],
        ..grid.clone()
    };
    run_experiment(train, test, mode, &fixed, seed, false)
}

/// How trajectory coordinates are mapped onto the Hilbert grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BboxMode {
    /// Each trajectory spans its own box.
    #[default]
    PerTrajectory,
    /// One box over every trajectory of both splits.
    Global,
}

/// Linearises every trajectory of a dataset at one Hilbert order.
pub fn linearize_dataset(
    data: &TrajectoryDataset,
    order: u32,
    bbox: BboxMode,
    global: Option<BoundingBox>,
) -> Result<Vec<Series>> {
    let map = HilbertMap::new(order)?;
    data.instances
        .iter()
        .map(|rec| {
            let b = match (bbox, global) {
                (BboxMode::Global, Some(g)) => g,
                _ => rec.trajectory.bounding_box(),
            };
            linearize_in(&rec.trajectory, &map, &b)
                .map_err(|e| e.context(format!("trajectory '{}'", rec.id)))
        })
        .collect()
}

/// Bounding box of every trajectory in the given datasets.
pub fn global_bbox(datasets: &[&TrajectoryDataset]) -> Option<BoundingBox> {
    datasets
        .iter()
        .flat_map(|d| d.instances.iter())
        .map(|r| r.trajectory.bounding_box())
        .reduce(|a, b| a.union(&b))
}

/// Trajectory protocol: the Hilbert order joins the grid.
pub fn run_trajectory_experiment(
    train: &TrajectoryDataset,
    test: &TrajectoryDataset,
    mode: EncodingMode,
    grid: &GridConfig,
    bbox: BboxMode,
    seed: u64,
    verbose: bool,
) -> Result<PipelineOutcome> {
    let global = global_bbox(&[train, test]);
    let mut splits = Vec::new();
    for &order in &grid.sfc_orders {
        splits.push((
            Some(order),
            SeriesSplit {
                name: train.name.clone(),
                train: linearize_dataset(train, order, bbox, global)?,
                train_labels: train.labels(),
                test: linearize_dataset(test, order, bbox, global)?,
                test_labels: test.labels(),
            },
        ));
    }
    if splits.is_empty() {
        return Err(Error::invalid("no Hilbert orders in the grid"));
    }
    run_splits(splits, mode, grid, seed, verbose)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
    }

    #[test]
    fn encode_image_shapes() {
        let s = Series::from_values((0..30).map(|i| (i as f64).cos()).collect()).unwrap();
        assert_eq!(encode_image(&s, EncodingMode::Gaf, 16, 8, 0).unwrap().channels(), 1);
        let d = encode_image(&s, EncodingMode::Dual, 16, 8, 0).unwrap();
        assert_eq!((d.side(), d.channels()), (16, 2));
        // shorter than S: stretched first
        let m = encode_image(&s, EncodingMode::Dual, 48, 8, 0).unwrap();
        assert_eq!(m.side(), 48);
    }

    #[test]
    fn grid_validation() {
        let mut g = GridConfig::default();
        assert!(g.validate().is_ok());
        g.sizes = vec![8];
        assert!(g.validate().is_err());
    }
}
