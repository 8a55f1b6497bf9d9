//! Series data model and the primitive transforms shared by the encoders:
//! min-max rescaling, piecewise aggregate approximation (PAA) and the
//! polar-coordinate representation.

use crate::error::{Error, Result};

/// Values within this distance outside `[-1, 1]` are clamped before `arccos`.
pub const ARCCOS_CLAMP_TOLERANCE: f64 = 1e-9;

/// A finite, ordered sequence of real observations with strictly increasing
/// integer timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    values: Vec<f64>,
    timestamps: Vec<u64>,
}

impl Series {
    pub fn new(values: Vec<f64>, timestamps: Vec<u64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("series must contain at least one value"));
        }
        if values.len() != timestamps.len() {
            return Err(Error::invalid(format!(
                "{} values but {} timestamps",
                values.len(),
                timestamps.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::data(format!("non-finite value at position {i}")));
        }
        if let Some(i) = timestamps.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::invalid(format!(
                "timestamps not strictly increasing at position {}",
                i + 1
            )));
        }
        Ok(Series { values, timestamps })
    }

    /// Builds a series with timestamps `1..=n`.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let timestamps = (1..=values.len() as u64).collect();
        Series::new(values, timestamps)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn timestamps(&self) -> &[u64] {
        &self.timestamps
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false; a `Series` holds at least one value.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// Target interval of [`rescale`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RangeMode {
    MinusOneToOne,
    ZeroToOne,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RescaledSeries {
    pub values: Vec<f64>,
    pub timestamps: Vec<u64>,
    pub mode: RangeMode,
    /// Set when the source series was constant and every value was mapped
    /// to the midpoint of the target range.
    pub degenerate: bool,
}

/// Min-max rescaling into `[-1, 1]` or `[0, 1]`.
///
/// The signed form is evaluated as `((x - max) + (x - min)) / (max - min)`,
/// which sends the minimum to exactly -1 and the maximum to exactly 1.
/// A constant series maps to the range midpoint (0 or 0.5) and is flagged
/// `degenerate`.
pub fn rescale(series: &Series, mode: RangeMode) -> RescaledSeries {
    let (min, max) = series
        .values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let span = max - min;
    let degenerate = span == 0.0;
    let values = if degenerate {
        let mid = match mode {
            RangeMode::MinusOneToOne => 0.0,
            RangeMode::ZeroToOne => 0.5,
        };
        vec![mid; series.len()]
    } else {
        series
            .values
            .iter()
            .map(|&x| match mode {
                RangeMode::MinusOneToOne => (((x - max) + (x - min)) / span).clamp(-1.0, 1.0),
                RangeMode::ZeroToOne => ((x - min) / span).clamp(0.0, 1.0),
            })
            .collect()
    };
    RescaledSeries {
        values,
        timestamps: series.timestamps.clone(),
        mode,
        degenerate,
    }
}

/// Piecewise aggregate approximation down to `target_len` segment means.
///
/// Segment `b` covers indices `[floor(b*n/S), floor((b+1)*n/S))`. The output
/// carries timestamps `1..=S`; `paa(s, s.len())` returns `s` unchanged.
pub fn paa(series: &Series, target_len: usize) -> Result<Series> {
    let n = series.len();
    if target_len == 0 {
        return Err(Error::invalid("PAA target length must be positive"));
    }
    if target_len > n {
        return Err(Error::invalid(format!(
            "PAA target length {target_len} exceeds series length {n}; use stretch_series to upscale"
        )));
    }
    if target_len == n {
        return Ok(series.clone());
    }
    let values = (0..target_len)
        .map(|b| {
            let lo = b * n / target_len;
            let hi = (b + 1) * n / target_len;
            let segment = &series.values[lo..hi];
            segment.iter().sum::<f64>() / segment.len() as f64
        })
        .collect();
    Series::from_values(values)
}

/// Polar representation: angle `arccos(x)` and radius `t / N`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarSeries {
    pub angles: Vec<f64>,
    pub radii: Vec<f64>,
    pub span: f64,
}

/// Maps a `[-1, 1]` rescaled series to polar coordinates. `span` is the
/// radius normaliser `N`; `None` uses the series length.
pub fn to_polar(rescaled: &RescaledSeries, span: Option<f64>) -> Result<PolarSeries> {
    if rescaled.mode != RangeMode::MinusOneToOne {
        return Err(Error::invalid(
            "polar encoding requires a series rescaled to [-1, 1]",
        ));
    }
    let span = span.unwrap_or(rescaled.values.len() as f64);
    if !(span.is_finite() && span > 0.0) {
        return Err(Error::invalid(format!("span constant must be positive, got {span}")));
    }
    let angles = rescaled
        .values
        .iter()
        .enumerate()
        .map(|(i, &x)| clamp_unit(x).map(f64::acos).map_err(|e| e.context(format!("position {i}"))))
        .collect::<Result<Vec<_>>>()?;
    let radii = rescaled.timestamps.iter().map(|&t| t as f64 / span).collect();
    Ok(PolarSeries {
        angles,
        radii,
        span,
    })
}

/// Clamps `x` into `[-1, 1]` if it lies within [`ARCCOS_CLAMP_TOLERANCE`]
/// of the interval; larger excursions are data errors and non-finite values
/// numerical ones.
pub(crate) fn clamp_unit(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::numerical(format!("non-finite value {x} where [-1, 1] was expected")));
    }
    if x.abs() > 1.0 + ARCCOS_CLAMP_TOLERANCE {
        return Err(Error::data(format!("value {x} outside [-1, 1]")));
    }
    Ok(x.clamp(-1.0, 1.0))
}
