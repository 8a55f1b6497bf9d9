//! Gramian Angular Field images.
//!
//! A series is shrunk by PAA, rescaled into `[-1, 1]` and read as polar
//! angles `phi = arccos(x)`. The field is `G[i][j] = cos(phi_i + phi_j)`,
//! evaluated here through the equivalent outer-product form
//! `x_i x_j - sqrt(1 - x_i^2) sqrt(1 - x_j^2)`, which needs no
//! transcendental call per entry.

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;
use crate::series::{self, clamp_unit, paa, rescale, RangeMode, RescaledSeries, Series};

#[derive(Debug, Clone, PartialEq)]
pub struct GafImage {
    pub matrix: SquareMatrix,
    pub source_len: usize,
    pub paa_len: usize,
    /// The PAA series was constant, so every entry is -1.
    pub degenerate: bool,
}

impl GafImage {
    pub fn size(&self) -> usize {
        self.matrix.size()
    }
}

/// Encodes `series` as a `size x size` GAF. Requires `1 <= size <= n`.
pub fn encode_gaf(series: &Series, size: usize) -> Result<GafImage> {
    encode_gaf_with_span(series, size, None)
}

/// As [`encode_gaf`] with an explicit polar radius normaliser. The result
/// does not depend on `span`.
pub fn encode_gaf_with_span(series: &Series, size: usize, span: Option<f64>) -> Result<GafImage> {
    if size == 0 || size > series.len() {
        return Err(Error::invalid(format!(
            "GAF size {size} must lie in 1..={}",
            series.len()
        )));
    }
    let reduced = paa(series, size)?;
    let rescaled = rescale(&reduced, RangeMode::MinusOneToOne);
    let matrix = gaf_matrix(&rescaled, span)?;
    Ok(GafImage {
        matrix,
        source_len: series.len(),
        paa_len: size,
        degenerate: rescaled.degenerate,
    })
}

/// Outer-product GAF of an already rescaled series.
pub fn gaf_matrix(rescaled: &RescaledSeries, span: Option<f64>) -> Result<SquareMatrix> {
    // Validates the domain and span exactly as the polar encoding does; the
    // angles themselves are never needed because cos(phi) = x.
    series::to_polar(rescaled, span)?;
    let cos: Vec<f64> = rescaled
        .values
        .iter()
        .map(|&x| clamp_unit(x))
        .collect::<Result<_>>()?;
    let sin: Vec<f64> = cos.iter().map(|&c| (1.0 - c * c).max(0.0).sqrt()).collect();
    let n = cos.len();
    Ok(SquareMatrix::from_fn(n, |i, j| {
        (cos[i] * cos[j] - sin[i] * sin[j]).clamp(-1.0, 1.0)
    }))
}

/// Recovers `|x_i|` of the rescaled PAA series from the GAF main diagonal
/// via `cos(phi) = sqrt((cos(2 phi) + 1) / 2)`; the sign is lost.
pub fn reconstruct_from_diagonal(gaf: &GafImage) -> Result<Series> {
    reconstruct_from_matrix(&gaf.matrix)
}

pub fn reconstruct_from_matrix(matrix: &SquareMatrix) -> Result<Series> {
    let values = matrix
        .diagonal()
        .into_iter()
        .enumerate()
        .map(|(i, d)| {
            let d = clamp_unit(d).map_err(|e| e.context(format!("diagonal entry {i}")))?;
            Ok(((d + 1.0) / 2.0).sqrt())
        })
        .collect::<Result<Vec<_>>>()?;
    Series::from_values(values)
}
