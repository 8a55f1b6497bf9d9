//! Matrix export as grayscale PNG or CSV.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use image::{GrayImage, Luma};

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Png,
    Csv,
}

impl ImageFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ImageFormat::Png => "png",
            ImageFormat::Csv => "csv",
        }
    }
}

impl FromStr for ImageFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "png" | "grayscale-png" => Ok(ImageFormat::Png),
            "csv" => Ok(ImageFormat::Csv),
            other => Err(Error::invalid(format!(
                "unknown image format '{other}' (expected png or csv)"
            ))),
        }
    }
}

/// 8-bit levels, row 0 first: `[min, max]` maps linearly onto `[0, 255]`
/// and a constant matrix maps to 0.
pub fn to_gray_levels(matrix: &SquareMatrix) -> Result<Vec<u8>> {
    let data = matrix.as_slice();
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("cannot render a matrix with non-finite entries"));
    }
    let lo = data.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    Ok(data
        .iter()
        .map(|&v| {
            if span > 0.0 {
                ((v - lo) / span * 255.0).round().clamp(0.0, 255.0) as u8
            } else {
                0
            }
        })
        .collect())
}

pub fn format_csv(matrix: &SquareMatrix) -> String {
    let mut out = String::new();
    for row in matrix.rows() {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

pub fn parse_csv(text: &str) -> Result<SquareMatrix> {
    let rows = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.split(',')
                .map(|f| {
                    f.trim().parse::<f64>().map_err(|_| {
                        Error::data(format!("line {}: '{}' is not a number", i + 1, f.trim()))
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    SquareMatrix::from_rows(rows)
}

pub fn export_image(matrix: &SquareMatrix, path: impl AsRef<Path>, format: ImageFormat) -> Result<()> {
    let path = path.as_ref();
    match format {
        ImageFormat::Csv => {
            if matrix.as_slice().iter().any(|v| !v.is_finite()) {
                return Err(Error::numerical("cannot export a matrix with non-finite entries"));
            }
            fs::write(path, format_csv(matrix)).map_err(|e| Error::io(path, e))
        }
        ImageFormat::Png => {
            let levels = to_gray_levels(matrix)?;
            let n = matrix.size() as u32;
            let img = GrayImage::from_fn(n, n, |x, y| Luma([levels[(y * n + x) as usize]]));
            img.save_with_format(path, image::ImageFormat::Png).map_err(|e| match e {
                image::ImageError::IoError(io) => Error::io(path, io),
                other => Error::data(format!("{}: {other}", path.display())),
            })
        }
    }
}

pub fn read_csv_matrix(path: impl AsRef<Path>) -> Result<SquareMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text).map_err(|e| e.context(path.display().to_string()))
}
