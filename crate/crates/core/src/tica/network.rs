//! Two-layer tiled convolutional network with TICA pooling.
//!
//! Each layer convolves `l` maps of `s x s` filters with stride 1. Filters
//! are tiled with period `k`: the unit at output position `(r, c)` of map
//! `m` uses filter `(m, r mod k, c mod k)`. Simple responses are squared,
//! summed over a 3x3 neighbourhood of the same map (clipped at the border,
//! no wraparound) and square-rooted, so each pooled map keeps the size of
//! its simple-unit map. The pooled maps of the last layer, flattened, are
//! the feature vector.
//!
//! Pretraining runs TICA on a small window of units (`grid x grid`
//! positions per map) whose weight matrix contains every tied filter, then
//! copies the learned filters into the full-size layer.

use crate::error::{Error, Result};
use crate::tica::layer::{
    Footprint, PatchSet, PretrainReport, TicaConfig, TicaLayer, Topology,
};

/// Pooling neighbourhood radius (3x3 blocks).
const POOL_RADIUS: usize = 1;

/// Channel-last image tensor `[y][x][c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    side: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(side: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if side == 0 || channels == 0 {
            return Err(Error::invalid("image side and channel count must be positive"));
        }
        if data.len() != side * side * channels {
            return Err(Error::invalid(format!(
                "image {side}x{side}x{channels} needs {} values, got {}",
                side * side * channels,
                data.len()
            )));
        }
        Ok(Image {
            side,
            channels,
            data,
        })
    }

    pub fn zeros(side: usize, channels: usize) -> Self {
        Image {
            side,
            channels,
            data: vec![0.0; side * side * channels],
        }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> f64 {
        self.data[(y * self.side + x) * self.channels + c]
    }

    pub fn scaled(&self, a: f64) -> Image {
        Image {
            side: self.side,
            channels: self.channels,
            data: self.data.iter().map(|v| v * a).collect(),
        }
    }

    /// The `side x side` window with top-left corner `(y0, x0)`, flattened.
    fn window(&self, y0: usize, x0: usize, side: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(side * side * self.channels);
        for y in y0..y0 + side {
            let start = (y * self.side + x0) * self.channels;
            out.extend_from_slice(&self.data[start..start + side * self.channels]);
        }
        out
    }
}

/// Shape of one tiled convolutional layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerShape {
    pub in_channels: usize,
    /// Receptive field side `s`.
    pub field: usize,
    /// Number of maps `l`.
    pub maps: usize,
    /// Tiling period `k`.
    pub tiling: usize,
}

impl LayerShape {
    pub fn filter_len(&self) -> usize {
        self.field * self.field * self.in_channels
    }

    pub fn filter_count(&self) -> usize {
        self.maps * self.tiling * self.tiling
    }

    fn filter_index(&self, map: usize, tr: usize, tc: usize) -> usize {
        (map * self.tiling + tr) * self.tiling + tc
    }
}

/// Units on a `grid x grid` window of every map: the layer TICA trains.
pub fn window_topology(shape: &LayerShape, grid: usize) -> Result<Topology> {
    if grid < shape.tiling {
        return Err(Error::invalid(format!(
            "pretraining window of {grid} positions cannot hold tiling period {}",
            shape.tiling
        )));
    }
    let side = grid + shape.field - 1;
    let ch = shape.in_channels;
    let mut footprints = Vec::new();
    let mut ties = Vec::new();
    let mut pooling = Vec::new();
    for m in 0..shape.maps {
        for r in 0..grid {
            for c in 0..grid {
                footprints.push(Footprint::new(
                    (0..shape.field)
                        .map(|dy| (((r + dy) * side + c) * ch, shape.field * ch))
                        .collect(),
                ));
                ties.push(shape.filter_index(m, r % shape.tiling, c % shape.tiling));
                let mut row = Vec::new();
                for rr in r.saturating_sub(POOL_RADIUS)..(r + POOL_RADIUS + 1).min(grid) {
                    for cc in c.saturating_sub(POOL_RADIUS)..(c + POOL_RADIUS + 1).min(grid) {
                        row.push((m * grid + rr) * grid + cc);
                    }
                }
                pooling.push(row);
            }
        }
    }
    Topology::new(side * side * ch, footprints, ties, pooling)
}

/// A trained tiled convolutional layer.
#[derive(Debug, Clone, PartialEq)]
pub struct TiledConvLayer {
    pub shape: LayerShape,
    /// Filters ordered `[map][tile_row][tile_col][dy][dx][channel]`.
    pub filters: Vec<f64>,
}

impl TiledConvLayer {
    pub fn new(shape: LayerShape, filters: Vec<f64>) -> Result<Self> {
        if shape.field == 0 || shape.maps == 0 || shape.tiling == 0 || shape.in_channels == 0 {
            return Err(Error::invalid(format!("degenerate layer shape {shape:?}")));
        }
        if filters.len() != shape.filter_count() * shape.filter_len() {
            return Err(Error::invalid(format!(
                "layer {shape:?} needs {} filter weights, got {}",
                shape.filter_count() * shape.filter_len(),
                filters.len()
            )));
        }
        Ok(TiledConvLayer { shape, filters })
    }

    /// Copies the tied filters out of a pretrained window layer.
    pub fn from_window(shape: LayerShape, grid: usize, window: &TicaLayer) -> Result<Self> {
        let q = window.topology.inputs();
        let mut filters = Vec::with_capacity(shape.filter_count() * shape.filter_len());
        for m in 0..shape.maps {
            for tr in 0..shape.tiling {
                for tc in 0..shape.tiling {
                    let unit = (m * grid + tr) * grid + tc;
                    let row = &window.weights[unit * q..(unit + 1) * q];
                    filters.extend(window.topology.footprint(unit).indices().map(|j| row[j]));
                }
            }
        }
        TiledConvLayer::new(shape, filters)
    }

    fn filter(&self, map: usize, tr: usize, tc: usize) -> &[f64] {
        let len = self.shape.filter_len();
        let i = self.shape.filter_index(map, tr, tc);
        &self.filters[i * len..(i + 1) * len]
    }

    pub fn output_side(&self, input_side: usize) -> Option<usize> {
        input_side.checked_sub(self.shape.field).map(|d| d + 1)
    }

    /// Pooled activations, `maps` channels on the valid-convolution grid.
    pub fn forward(&self, input: &Image) -> Result<Image> {
        let sh = &self.shape;
        if input.channels != sh.in_channels {
            return Err(Error::invalid(format!(
                "layer expects {} channels, input has {}",
                sh.in_channels, input.channels
            )));
        }
        let out = self.output_side(input.side).ok_or_else(|| {
            Error::invalid(format!(
                "input side {} is smaller than the {}x{} receptive field",
                input.side, sh.field, sh.field
            ))
        })?;
        let row_len = sh.field * sh.in_channels;
        let mut sq = vec![0.0; out * out * sh.maps];
        for r in 0..out {
            for c in 0..out {
                for m in 0..sh.maps {
                    let f = self.filter(m, r % sh.tiling, c % sh.tiling);
                    let mut z = 0.0;
                    for dy in 0..sh.field {
                        let start = ((r + dy) * input.side + c) * input.channels;
                        z += dot(
                            &f[dy * row_len..(dy + 1) * row_len],
                            &input.data[start..start + row_len],
                        );
                    }
                    sq[(r * out + c) * sh.maps + m] = z * z;
                }
            }
        }
        let mut pooled = vec![0.0; out * out * sh.maps];
        for r in 0..out {
            for c in 0..out {
                for m in 0..sh.maps {
                    let mut s = 0.0;
                    for rr in r.saturating_sub(POOL_RADIUS)..(r + POOL_RADIUS + 1).min(out) {
                        for cc in c.saturating_sub(POOL_RADIUS)..(c + POOL_RADIUS + 1).min(out) {
                            s += sq[(rr * out + cc) * sh.maps + m];
                        }
                    }
                    pooled[(r * out + c) * sh.maps + m] = s.sqrt();
                }
            }
        }
        Image::new(out, sh.maps, pooled)
    }
}

/// Architecture and pretraining settings.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    /// Receptive field side per layer.
    pub fields: Vec<usize>,
    pub maps: usize,
    pub tiling: usize,
    /// Unit positions per side of the TICA pretraining window.
    pub window_grid: usize,
    /// Upper bound on pretraining patches per layer; `None` uses every
    /// non-overlapping window.
    pub max_patches: Option<usize>,
    pub tica: TicaConfig,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            fields: vec![8, 3],
            maps: 6,
            tiling: 2,
            window_grid: 4,
            max_patches: None,
            tica: TicaConfig::default(),
        }
    }
}

impl NetworkConfig {
    /// Smallest image side that leaves room for one pretraining window at
    /// every layer.
    pub fn min_pretrain_side(&self) -> usize {
        let mut need = 0;
        for &f in self.fields.iter().rev() {
            need = need.max(self.window_grid) + f - 1;
        }
        need
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TiledNetwork {
    pub layers: Vec<TiledConvLayer>,
    pub seed: u64,
}

/// Pooled activations of every layer for one input.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkActivation {
    pub layers: Vec<Image>,
}

impl TiledNetwork {
    pub fn forward_all(&self, image: &Image) -> Result<NetworkActivation> {
        let mut layers: Vec<Image> = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let input = layers.last().unwrap_or(image);
            let out = layer
                .forward(input)
                .map_err(|e| e.context(format!("layer {}", i + 1)))?;
            layers.push(out);
        }
        Ok(NetworkActivation { layers })
    }

    /// Flattened pooled activations of the last layer.
    pub fn forward(&self, image: &Image) -> Result<Vec<f64>> {
        let act = self.forward_all(image)?;
        Ok(act
            .layers
            .into_iter()
            .last()
            .map(|img| img.data)
            .unwrap_or_else(|| image.data.clone()))
    }

    pub fn feature_len(&self, side: usize) -> Option<usize> {
        let mut s = side;
        for layer in &self.layers {
            s = layer.output_side(s).filter(|&o| o > 0)?;
        }
        Some(s * s * self.layers.last().map_or(0, |l| l.shape.maps))
    }
}

/// Every non-overlapping `window x window` patch of every image.
pub fn extract_patches(images: &[Image], window: usize, max_patches: Option<usize>) -> Result<PatchSet> {
    let channels = images.first().map_or(1, |i| i.channels);
    let mut all = PatchSet::new(window * window * channels);
    for img in images {
        if img.side < window {
            continue;
        }
        let per_side = img.side / window;
        for wy in 0..per_side {
            for wx in 0..per_side {
                all.push(&img.window(wy * window, wx * window, window))?;
            }
        }
    }
    match max_patches {
        Some(cap) if all.len() > cap => {
            let total = all.len();
            let picked: Vec<&[f64]> = all.iter().collect();
            let mut sub = PatchSet::new(all.dim());
            for i in 0..cap {
                sub.push(picked[i * total / cap])?;
            }
            Ok(sub)
        }
        _ => Ok(all),
    }
}

/// Per-layer pretraining outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerPretrainSummary {
    pub patches: usize,
    pub report: PretrainReport,
}

/// Greedy layer-wise TICA pretraining on unlabeled images.
pub fn pretrain_network(
    images: &[Image],
    config: &NetworkConfig,
    seed: u64,
) -> Result<(TiledNetwork, Vec<LayerPretrainSummary>)> {
    let first = images
        .first()
        .ok_or_else(|| Error::invalid("pretraining needs at least one image"))?;
    if images
        .iter()
        .any(|i| i.side != first.side || i.channels != first.channels)
    {
        return Err(Error::invalid("pretraining images must share one shape"));
    }
    if first.side < config.min_pretrain_side() {
        return Err(Error::invalid(format!(
            "image side {} below the minimum {} for this architecture",
            first.side,
            config.min_pretrain_side()
        )));
    }
    let mut layers = Vec::new();
    let mut summaries = Vec::new();
    let mut inputs: Vec<Image> = images.to_vec();
    let mut channels = first.channels;
    for (depth, &field) in config.fields.iter().enumerate() {
        let shape = LayerShape {
            in_channels: channels,
            field,
            maps: config.maps,
            tiling: config.tiling,
        };
        let topology = window_topology(&shape, config.window_grid)?;
        let window = config.window_grid + field - 1;
        let patches = extract_patches(&inputs, window, config.max_patches)?;
        let mut tica = TicaLayer::initialize(topology, layer_seed(seed, depth));
        let report = tica
            .pretrain(&patches, &config.tica)
            .map_err(|e| e.context(format!("pretraining layer {}", depth + 1)))?;
        summaries.push(LayerPretrainSummary {
            patches: patches.len(),
            report,
        });
        let layer = TiledConvLayer::from_window(shape, config.window_grid, &tica)?;
        if depth + 1 < config.fields.len() {
            inputs = inputs
                .iter()
                .map(|img| layer.forward(img))
                .collect::<Result<_>>()?;
        }
        channels = config.maps;
        layers.push(layer);
    }
    Ok((TiledNetwork { layers, seed }, summaries))
}

fn layer_seed(seed: u64, depth: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(depth as u64 + 1)
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
