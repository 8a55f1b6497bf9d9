//! Dataset loaders, image and checkpoint export, reports and grid config.

pub mod checkpoint;
pub mod config;
pub mod dataset;
pub mod export;
pub mod report;

pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use config::{load_grid_config, parse_grid_config, parse_grid_config_over};
pub use dataset::{
    load_trajectories, load_ucr, load_ucr_variable, write_trajectories, write_ucr, LabeledDataset,
    Split, TrajectoryDataset, TrajectoryRecord,
};
pub use export::{export_image, read_csv_matrix, ImageFormat};
pub use report::{read_report, write_report};
