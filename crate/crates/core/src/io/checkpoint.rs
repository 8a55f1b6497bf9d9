//! Text checkpoint of a pretrained network.
//!
//! ```text
//! gafmtf-checkpoint v1
//! seed <u64>
//! layers <count>
//! layer <index> in_channels <c> field <s> maps <l> tiling <k>
//! <one filter per line: s*s*c space-separated weights>
//! ...
//! ```
//!
//! Filters are listed in `[map][tile_row][tile_col]` order and each filter
//! is row-major over `[dy][dx][channel]`. Weights use the shortest decimal
//! form that parses back to the same `f64`, so a checkpoint reloads bit for
//! bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tica::{LayerShape, TiledConvLayer, TiledNetwork};

pub const CHECKPOINT_MAGIC: &str = "gafmtf-checkpoint v1";

pub fn format_checkpoint(network: &TiledNetwork) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{CHECKPOINT_MAGIC}");
    let _ = writeln!(out, "seed {}", network.seed);
    let _ = writeln!(out, "layers {}", network.layers.len());
    for (i, layer) in network.layers.iter().enumerate() {
        let s = layer.shape;
        let _ = writeln!(
            out,
            "layer {} in_channels {} field {} maps {} tiling {}",
            i + 1,
            s.in_channels,
            s.field,
            s.maps,
            s.tiling
        );
        for filter in layer.filters.chunks(s.filter_len()) {
            let line: Vec<String> = filter.iter().map(|w| w.to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
    }
    out
}

fn expect_key<'a>(tokens: &mut impl Iterator<Item = &'a str>, key: &str, line: usize) -> Result<u64> {
    match (tokens.next(), tokens.next()) {
        (Some(k), Some(v)) if k == key => v
            .parse()
            .map_err(|_| Error::data(format!("checkpoint line {line}: bad value for '{key}'"))),
        _ => Err(Error::data(format!("checkpoint line {line}: expected '{key} <value>'"))),
    }
}

pub fn parse_checkpoint(text: &str) -> Result<TiledNetwork> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| Error::data(format!("checkpoint ends before {what}")))
    };
    let (_, magic) = next("the header")?;
    if magic != CHECKPOINT_MAGIC {
        return Err(Error::data(format!(
            "not a checkpoint (expected '{CHECKPOINT_MAGIC}', found '{magic}')"
        )));
    }
    let (n, l) = next("the seed")?;
    let seed = expect_key(&mut l.split_whitespace(), "seed", n)?;
    let (n, l) = next("the layer count")?;
    let count = expect_key(&mut l.split_whitespace(), "layers", n)? as usize;
    let mut layers = Vec::with_capacity(count);
    for i in 0..count {
        let (n, l) = next("a layer header")?;
        let mut t = l.split_whitespace();
        let index = expect_key(&mut t, "layer", n)? as usize;
        if index != i + 1 {
            return Err(Error::data(format!("checkpoint line {n}: expected layer {}", i + 1)));
        }
        let shape = LayerShape {
            in_channels: expect_key(&mut t, "in_channels", n)? as usize,
            field: expect_key(&mut t, "field", n)? as usize,
            maps: expect_key(&mut t, "maps", n)? as usize,
            tiling: expect_key(&mut t, "tiling", n)? as usize,
        };
        let mut filters = Vec::with_capacity(shape.filter_count() * shape.filter_len());
        for _ in 0..shape.filter_count() {
            let (n, l) = next("a filter")?;
            let row = l
                .split_whitespace()
                .map(|w| {
                    w.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| Error::data(format!("checkpoint line {n}: bad weight '{w}'")))
                })
                .collect::<Result<Vec<_>>>()?;
            if row.len() != shape.filter_len() {
                return Err(Error::data(format!(
                    "checkpoint line {n}: {} weights, expected {}",
                    row.len(),
                    shape.filter_len()
                )));
            }
            filters.extend(row);
        }
        layers.push(TiledConvLayer::new(shape, filters).map_err(|e| e.context(format!("layer {}", i + 1)))?);
    }
    Ok(TiledNetwork { layers, seed })
}

pub fn write_checkpoint(network: &TiledNetwork, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_checkpoint(network)).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<TiledNetwork> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_checkpoint(&text).map_err(|e| e.context(path.display().to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn network() -> TiledNetwork {
        let shape = LayerShape {
            in_channels: 2,
            field: 2,
            maps: 1,
            tiling: 2,
        };
        let filters = (0..32).map(|i| (i as f64 * 0.77).sin() / 3.0).collect();
        TiledNetwork {
            layers: vec![TiledConvLayer::new(shape, filters).unwrap()],
            seed: 17,
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let net = network();
        let text = format_checkpoint(&net);
        assert!(text.starts_with(CHECKPOINT_MAGIC));
        assert_eq!(parse_checkpoint(&text).unwrap(), net);
    }

    #[test]
    fn rejects_corruption() {
        let text = format_checkpoint(&network());
        assert!(parse_checkpoint(&text.replace("v1", "v9")).is_err());
        let truncated: String = text.lines().take(5).collect::<Vec<_>>().join("\n");
        assert!(parse_checkpoint(&truncated).is_err());
        assert!(parse_checkpoint(&text.replacen("maps 1", "maps x", 1)).is_err());
    }
}
