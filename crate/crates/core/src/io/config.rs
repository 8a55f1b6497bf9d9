//! Grid configuration files.
//!
//! A TOML document; every key is optional and falls back to the default
//! grid:
//!
//! ```toml
//! sizes = [16, 24, 32, 40, 48]
//! quantiles = [8, 16, 32, 64]
//! c_values = [1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3, 1e4]
//! sfc_orders = [3, 4, 5, 6, 7, 8, 9, 10]
//! folds = 5
//! selection = "lowest-error"   # or "3sigma"
//! inductive = false
//! fields = [8, 3]
//! maps = 6
//! tiling = 2
//! window_grid = 4
//! max_patches = 2000
//! tica_max_iters = 200
//! tica_tolerance = 1e-6
//! ```

use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::classifier::pipeline::GridConfig;
use crate::error::{Error, Result};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    sizes: Option<Vec<usize>>,
    quantiles: Option<Vec<usize>>,
    c_values: Option<Vec<f64>>,
    sfc_orders: Option<Vec<u32>>,
    folds: Option<usize>,
    selection: Option<String>,
    inductive: Option<bool>,
    fields: Option<Vec<usize>>,
    maps: Option<usize>,
    tiling: Option<usize>,
    window_grid: Option<usize>,
    max_patches: Option<usize>,
    tica_max_iters: Option<usize>,
    tica_tolerance: Option<f64>,
}

pub fn parse_grid_config(text: &str) -> Result<GridConfig> {
    parse_grid_config_over(text, GridConfig::default())
}

/// Applies the keys present in `text` on top of `base`.
pub fn parse_grid_config_over(text: &str, base: GridConfig) -> Result<GridConfig> {
    let raw: RawGrid =
        toml::from_str(text).map_err(|e| Error::invalid(format!("grid config: {e}")))?;
    let mut g = base;
    if let Some(v) = raw.sizes {
        g.sizes = v;
    }
    if let Some(v) = raw.quantiles {
        g.quantiles = v;
    }
    if let Some(v) = raw.c_values {
        g.c_values = v;
    }
    if let Some(v) = raw.sfc_orders {
        g.sfc_orders = v;
    }
    if let Some(v) = raw.folds {
        g.folds = v;
    }
    if let Some(v) = raw.selection {
        g.rule = v.parse()?;
    }
    if let Some(v) = raw.inductive {
        g.inductive = v;
    }
    if let Some(v) = raw.fields {
        g.network.fields = v;
    }
    if let Some(v) = raw.maps {
        g.network.maps = v;
    }
    if let Some(v) = raw.tiling {
        g.network.tiling = v;
    }
    if let Some(v) = raw.window_grid {
        g.network.window_grid = v;
    }
    if raw.max_patches.is_some() {
        g.network.max_patches = raw.max_patches;
    }
    if let Some(v) = raw.tica_max_iters {
        g.network.tica.max_iters = v;
    }
    if let Some(v) = raw.tica_tolerance {
        g.network.tica.tolerance = v;
    }
    g.validate()?;
    Ok(g)
}

pub fn load_grid_config(path: impl AsRef<Path>, base: GridConfig) -> Result<GridConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_grid_config_over(&text, base).map_err(|e| e.context(path.display().to_string()))
}
