//! Time-series classification through image encodings.
//!
//! Series are turned into Gramian Angular Field and Markov Transition Field
//! images (or both, as a two-channel image), fed through a two-layer tiled
//! convolutional network pretrained with topographic ICA, and classified by
//! a linear SVM on the pooled features. Trajectories are first linearised
//! along a Hilbert curve.

pub mod classifier;
pub mod cli;
pub mod error;
pub mod gaf;
pub mod io;
pub mod matrix;
pub mod mtf;
pub mod series;
pub mod sfc;
pub mod synthetic;
pub mod tica;

pub use error::{Error, Result};
