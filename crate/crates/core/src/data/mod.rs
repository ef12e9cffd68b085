//! Dataset loading, synthetic graph generation and fold assignment.

pub mod folds;
pub mod synthetic;
pub mod tu;

pub use folds::stratified_folds;
pub use synthetic::erdos_renyi;
pub use tu::{load_tu_dataset, save_tu_dataset, DatasetStats, GraphDataset};
