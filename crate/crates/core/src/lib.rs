//! Graph Laplacian spectra as whole-graph embeddings: dense and Lanczos
//! eigensolvers, perturbation models, spectral-distance bounds, TU dataset
//! I/O and RBF-kernel SVM classification.

pub mod bounds;
pub mod classify;
pub mod data;
pub mod eigen;
pub mod embed;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod matrix;
pub mod perturb;

pub use error::{Error, Result};
pub use graph::{Graph, Permutation};
pub use matrix::{DenseMatrix, SymmetricMatrix};
