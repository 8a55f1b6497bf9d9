//! Topographic ICA pretraining and the two-layer tiled convolutional network.

pub mod layer;
pub mod network;

pub use layer::{
    Footprint, PatchSet, PretrainReport, Termination, TicaConfig, TicaLayer, Topology,
};
pub use network::{
    extract_patches, pretrain_network, Image, LayerPretrainSummary, LayerShape, NetworkConfig,
    TiledConvLayer, TiledNetwork,
};
