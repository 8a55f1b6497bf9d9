//! Markov Transition Field images.
//!
//! Values are discretised into `Q` empirical quantile bins, a first-order
//! transition matrix `W` is counted along the time axis, and the field
//! spreads `W` over every pair of time steps: `F[a][b] = W[bin(a)][bin(b)]`.
//! The `n x n` field is then shrunk by averaging non-overlapping `m x m`
//! patches.

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;
use crate::series::Series;

#[derive(Debug, Clone, PartialEq)]
pub struct QuantileBinning {
    pub quantiles: usize,
    /// `Q - 1` non-decreasing cut points. Empty when built from a raw assignment.
    pub boundaries: Vec<f64>,
    /// Bin index in `0..Q` for every point, in time order.
    pub assignment: Vec<usize>,
    /// Fewer than two distinct bins are occupied.
    pub degenerate: bool,
}

impl QuantileBinning {
    pub fn from_assignment(assignment: Vec<usize>, quantiles: usize) -> Result<Self> {
        if quantiles < 2 {
            return Err(Error::invalid(format!("need at least 2 quantile bins, got {quantiles}")));
        }
        if let Some(&b) = assignment.iter().find(|&&b| b >= quantiles) {
            return Err(Error::invalid(format!("bin {b} out of range for Q = {quantiles}")));
        }
        let degenerate = occupied_bins(&assignment, quantiles) < 2;
        Ok(QuantileBinning {
            quantiles,
            boundaries: Vec::new(),
            assignment,
            degenerate,
        })
    }

    pub fn bin_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.quantiles];
        for &b in &self.assignment {
            counts[b] += 1;
        }
        counts
    }
}

fn occupied_bins(assignment: &[usize], quantiles: usize) -> usize {
    let mut seen = vec![false; quantiles];
    assignment.iter().for_each(|&b| seen[b] = true);
    seen.into_iter().filter(|&s| s).count()
}

/// Linear-interpolation empirical quantile of sorted data at level `p`.
fn empirical_quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Assigns each point to one of `Q` quantile bins.
///
/// Cut points are the empirical quantiles at `i / Q`, `i = 1..Q-1`, with
/// linear interpolation between order statistics. Intervals are right
/// closed: a point equal to a cut point belongs to the lower bin.
pub fn quantize(series: &Series, quantiles: usize) -> Result<QuantileBinning> {
    if quantiles < 2 {
        return Err(Error::invalid(format!("need at least 2 quantile bins, got {quantiles}")));
    }
    let mut sorted = series.values().to_vec();
    sorted.sort_by(f64::total_cmp);
    let boundaries: Vec<f64> = (1..quantiles)
        .map(|i| empirical_quantile(&sorted, i as f64 / quantiles as f64))
        .collect();
    let assignment: Vec<usize> = series
        .values()
        .iter()
        .map(|&x| boundaries.partition_point(|&b| b < x))
        .collect();
    let degenerate = occupied_bins(&assignment, quantiles) < 2;
    Ok(QuantileBinning {
        quantiles,
        boundaries,
        assignment,
        degenerate,
    })
}

/// Which index of `W` names the earlier time step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TransitionOrientation {
    /// `W[i][j] = P(next in j | current in i)`; rows sum to one.
    #[default]
    SourceRow,
    /// The transpose, `W[i][j] = P(next in i | current in j)`; columns sum to one.
    SourceColumn,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkovMatrix {
    pub quantiles: usize,
    /// Row-major `Q x Q` probabilities.
    pub probabilities: Vec<f64>,
    /// Bins that never precede another point; their distribution is uniform.
    pub empty_sources: Vec<usize>,
    pub orientation: TransitionOrientation,
}

impl MarkovMatrix {
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.probabilities[i * self.quantiles + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.probabilities
            .chunks(self.quantiles)
            .map(<[f64]>::to_vec)
            .collect()
    }
}

/// First-order transition matrix with rows indexed by the source bin.
pub fn transition_matrix(binning: &QuantileBinning) -> Result<MarkovMatrix> {
    transition_matrix_oriented(binning, TransitionOrientation::SourceRow)
}

pub fn transition_matrix_oriented(
    binning: &QuantileBinning,
    orientation: TransitionOrientation,
) -> Result<MarkovMatrix> {
    let q = binning.quantiles;
    let a = &binning.assignment;
    if a.len() < 2 {
        return Err(Error::invalid(
            "a transition matrix needs a series of length at least 2",
        ));
    }
    let mut counts = vec![0usize; q * q];
    for w in a.windows(2) {
        counts[w[0] * q + w[1]] += 1;
    }
    let mut probabilities = vec![0.0; q * q];
    let mut empty_sources = Vec::new();
    for i in 0..q {
        let row = &counts[i * q..(i + 1) * q];
        let total: usize = row.iter().sum();
        for j in 0..q {
            let p = if total == 0 {
                1.0 / q as f64
            } else {
                row[j] as f64 / total as f64
            };
            match orientation {
                TransitionOrientation::SourceRow => probabilities[i * q + j] = p,
                TransitionOrientation::SourceColumn => probabilities[j * q + i] = p,
            }
        }
        if total == 0 {
            empty_sources.push(i);
        }
    }
    Ok(MarkovMatrix {
        quantiles: q,
        probabilities,
        empty_sources,
        orientation,
    })
}

/// The un-blurred `n x n` field `F[a][b] = W[bin(a)][bin(b)]`.
pub fn transition_field(binning: &QuantileBinning, w: &MarkovMatrix) -> SquareMatrix {
    let a = &binning.assignment;
    SquareMatrix::from_fn(a.len(), |i, j| w.get(a[i], a[j]))
}

/// Shrinks a field to `target x target` by averaging non-overlapping
/// `m x m` patches, `m = ceil(n / target)`.
///
/// A trailing partial patch is averaged over the cells it actually has.
/// When fewer than `target` patches fit along an axis the patch grid is
/// centred and padded by repeating its edge rows and columns.
pub fn blur(field: &SquareMatrix, target: usize) -> Result<SquareMatrix> {
    let n = field.size();
    if target == 0 || target > n {
        return Err(Error::invalid(format!("blur target {target} must lie in 1..={n}")));
    }
    let m = n.div_ceil(target);
    let blocks = n.div_ceil(m);
    let mut pooled = SquareMatrix::zeros(blocks);
    for bi in 0..blocks {
        let rows = bi * m..((bi + 1) * m).min(n);
        for bj in 0..blocks {
            let cols = bj * m..((bj + 1) * m).min(n);
            let mut sum = 0.0;
            for i in rows.clone() {
                sum += field.row(i)[cols.clone()].iter().sum::<f64>();
            }
            pooled.set(bi, bj, sum / (rows.len() * cols.len()) as f64);
        }
    }
    if blocks == target {
        return Ok(pooled);
    }
    let before = (target - blocks) / 2;
    let src = |k: usize| k.saturating_sub(before).min(blocks - 1);
    Ok(SquareMatrix::from_fn(target, |i, j| pooled.get(src(i), src(j))))
}

/// Parameters of [`encode_mtf_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MtfConfig {
    pub quantiles: usize,
    pub size: usize,
    pub orientation: TransitionOrientation,
}

impl MtfConfig {
    pub fn new(quantiles: usize, size: usize) -> Self {
        MtfConfig {
            quantiles,
            size,
            orientation: TransitionOrientation::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MtfImage {
    pub matrix: SquareMatrix,
    pub quantiles: usize,
    /// Patch side `m` used by the blur.
    pub blur_factor: usize,
    pub source_len: usize,
    pub degenerate: bool,
}

impl MtfImage {
    pub fn size(&self) -> usize {
        self.matrix.size()
    }
}

pub fn encode_mtf(series: &Series, quantiles: usize, size: usize) -> Result<MtfImage> {
    encode_mtf_with(series, &MtfConfig::new(quantiles, size))
}

pub fn encode_mtf_with(series: &Series, config: &MtfConfig) -> Result<MtfImage> {
    let n = series.len();
    if config.size == 0 || config.size > n {
        return Err(Error::invalid(format!("MTF size {} must lie in 1..={n}", config.size)));
    }
    let binning = quantize(series, config.quantiles)?;
    let w = transition_matrix_oriented(&binning, config.orientation)?;
    let field = transition_field(&binning, &w);
    let matrix = blur(&field, config.size)?;
    Ok(MtfImage {
        matrix,
        quantiles: config.quantiles,
        blur_factor: n.div_ceil(config.size),
        source_len: n,
        degenerate: binning.degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(values: &[f64]) -> Series {
        Series::from_values(values.to_vec()).unwrap()
    }

    #[test]
    fn quantize_median_split() {
        let b = quantize(&s(&[1.0, 2.0, 3.0, 4.0]), 2).unwrap();
        assert_eq!(b.assignment, vec![0, 0, 1, 1]);
        assert_eq!(b.boundaries, vec![2.5]);
        assert!(!b.degenerate);
    }

    #[test]
    fn quantize_ties_are_degenerate() {
        let b = quantize(&s(&[5.0; 4]), 2).unwrap();
        assert_eq!(b.assignment, vec![0; 4]);
        assert!(b.degenerate);
    }

    #[test]
    fn quantize_quartiles() {
        // sorted [1,2,3,4,7,8,9,10]; cut points 2.75, 5.5, 8.25
        let b = quantize(&s(&[10.0, 1.0, 7.0, 3.0, 9.0, 2.0, 8.0, 4.0]), 4).unwrap();
        assert_eq!(b.boundaries, vec![2.75, 5.5, 8.25]);
        assert_eq!(b.assignment, vec![3, 0, 2, 1, 3, 0, 2, 1]);
        assert_eq!(b.bin_counts(), vec![2, 2, 2, 2]);
    }

    #[test]
    fn quantize_rejects_single_bin() {
        assert!(quantize(&s(&[1.0, 2.0]), 1).is_err());
    }

    #[test]
    fn transition_examples() {
        let w = transition_matrix(&QuantileBinning::from_assignment(vec![0, 0, 1, 1], 2).unwrap())
            .unwrap();
        assert_eq!(w.rows(), vec![vec![0.5, 0.5], vec![0.0, 1.0]]);
        assert!(w.empty_sources.is_empty());

        let w = transition_matrix(&QuantileBinning::from_assignment(vec![0, 1, 0, 1, 0], 2).unwrap())
            .unwrap();
        assert_eq!(w.rows(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);

        let w = transition_matrix(&QuantileBinning::from_assignment(vec![0, 0, 0], 2).unwrap())
            .unwrap();
        assert_eq!(w.rows(), vec![vec![1.0, 0.0], vec![0.5, 0.5]]);
        assert_eq!(w.empty_sources, vec![1]);
    }

    #[test]
    fn transition_needs_two_points() {
        let b = QuantileBinning::from_assignment(vec![0], 2).unwrap();
        assert!(transition_matrix(&b).is_err());
    }

    #[test]
    fn source_column_orientation_is_transpose() {
        let b = QuantileBinning::from_assignment(vec![0, 0, 1, 1, 2, 0], 3).unwrap();
        let row = transition_matrix(&b).unwrap();
        let col = transition_matrix_oriented(&b, TransitionOrientation::SourceColumn).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(row.get(i, j), col.get(j, i));
            }
        }
    }

    #[test]
    fn field_and_blur_examples() {
        let b = QuantileBinning::from_assignment(vec![0, 0, 1, 1], 2).unwrap();
        let w = transition_matrix(&b).unwrap();
        let f = transition_field(&b, &w);
        assert_eq!(
            f.to_rows(),
            vec![
                vec![0.5, 0.5, 0.5, 0.5],
                vec![0.5, 0.5, 0.5, 0.5],
                vec![0.0, 0.0, 1.0, 1.0],
                vec![0.0, 0.0, 1.0, 1.0],
            ]
        );
        assert_eq!(blur(&f, 4).unwrap(), f);
        assert_eq!(blur(&f, 2).unwrap().to_rows(), vec![vec![0.5, 0.5], vec![0.0, 1.0]]);
    }

    #[test]
    fn blur_partial_patch_and_padding() {
        // n = 5, target 2: m = 3, patches {0,1,2} and {3,4}
        let f = SquareMatrix::from_fn(5, |i, j| (i * 5 + j) as f64);
        let b = blur(&f, 2).unwrap();
        let mean = |rows: std::ops::Range<usize>, cols: std::ops::Range<usize>| {
            let cells: Vec<f64> = rows
                .flat_map(|i| cols.clone().map(move |j| (i * 5 + j) as f64))
                .collect();
            cells.iter().sum::<f64>() / cells.len() as f64
        };
        assert_eq!(b.get(0, 0), mean(0..3, 0..3));
        assert_eq!(b.get(0, 1), mean(0..3, 3..5));
        assert_eq!(b.get(1, 1), mean(3..5, 3..5));

        // n = 9, target 4: m = 3 gives 3 patches, padded by one trailing copy
        let f = SquareMatrix::from_fn(9, |i, j| (i / 3 * 3 + j / 3) as f64);
        let b = blur(&f, 4).unwrap();
        assert_eq!(b.size(), 4);
        assert_eq!(b.row(0), &[0.0, 1.0, 2.0, 2.0]);
        assert_eq!(b.row(3), &[6.0, 7.0, 8.0, 8.0]);
    }

    #[test]
    fn encode_mtf_reports_blur_factor() {
        let series = s(&(0..10).map(|i| ((i * 7) % 10) as f64).collect::<Vec<_>>());
        let img = encode_mtf(&series, 4, 4).unwrap();
        assert_eq!(img.blur_factor, 3);
        assert_eq!(img.size(), 4);
        assert!(encode_mtf(&series, 4, 11).is_err());
        assert!(encode_mtf(&series, 1, 4).is_err());
    }
}
