//! Nested cross-validation of the RBF-kernel classifier over spectrum embeddings.

use rayon::prelude::*;
use serde::Serialize;

use crate::data::folds::stratified_folds;
use crate::data::tu::GraphDataset;
use crate::embed::{
    choose_dimension, embed_all, rbf_from_squared, squared_distance_matrix, EmbeddingConfig,
    SpectrumEmbedding,
};
use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, SymmetricMatrix};

use super::multiclass::MulticlassModel;

pub const MOLECULAR_C_GRID: [f64; 3] = [0.5, 1.0, 5.0];
pub const MOLECULAR_GAMMA_GRID: [f64; 7] = [1e-4, 1e-3, 1e-2, 0.1, 0.5, 1.0, 5.0];
pub const SOCIAL_C_GRID: [f64; 5] = [0.5, 1.0, 5.0, 25.0, 50.0];
pub const SOCIAL_GAMMA_GRID: [f64; 4] = [1e-4, 1e-3, 1e-2, 0.1];

/// Hyperparameter grid, kept sorted ascending on both axes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HyperGrid {
    c: Vec<f64>,
    gamma: Vec<f64>,
}

impl HyperGrid {
    pub fn new(c: &[f64], gamma: &[f64]) -> Result<HyperGrid> {
        if c.is_empty() || gamma.is_empty() {
            return Err(Error::validation("hyperparameter grids must be non-empty"));
        }
        if c.iter().chain(gamma).any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::validation("grid values must be positive and finite"));
        }
        let sorted = |v: &[f64]| {
            let mut v = v.to_vec();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        };
        Ok(HyperGrid {
            c: sorted(c),
            gamma: sorted(gamma),
        })
    }

    pub fn molecular() -> HyperGrid {
        HyperGrid::new(&MOLECULAR_C_GRID, &MOLECULAR_GAMMA_GRID).expect("static grid")
    }

    pub fn social() -> HyperGrid {
        HyperGrid::new(&SOCIAL_C_GRID, &SOCIAL_GAMMA_GRID).expect("static grid")
    }

    pub fn c_values(&self) -> &[f64] {
        &self.c
    }

    pub fn gamma_values(&self) -> &[f64] {
        &self.gamma
    }

    /// Grid points in selection-priority order: C ascending, then γ ascending.
    pub fn points(&self) -> Vec<Hyperparams> {
        self.c
            .iter()
            .flat_map(|&c| self.gamma.iter().map(move |&gamma| Hyperparams { c, gamma }))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Hyperparams {
    #[serde(rename = "C")]
    pub c: f64,
    pub gamma: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CvOptions {
    pub k_outer: usize,
    pub k_inner: usize,
    pub seed: u64,
}

impl Default for CvOptions {
    fn default() -> Self {
        CvOptions {
            k_outer: 10,
            k_inner: 5,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CvResult {
    pub dataset: String,
    pub dim: usize,
    /// Outer-fold test accuracies in `[0, 1]`.
    #[serde(rename = "folds")]
    pub per_fold_accuracy: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation of the fold accuracies.
    pub std: f64,
    #[serde(rename = "per_fold_hyperparams")]
    pub chosen_hyperparams: Vec<Hyperparams>,
    pub seed: u64,
}

/// Picks `d` from the graph sizes, embeds every graph once and runs
/// [`nested_cv_embedded`].
pub fn nested_cv(
    ds: &GraphDataset,
    cfg: &EmbeddingConfig,
    grid: &HyperGrid,
    opts: CvOptions,
) -> Result<CvResult> {
    let d = choose_dimension(&ds.sizes(), cfg)?;
    let embeddings = embed_all(&ds.graphs, d)?;
    nested_cv_embedded(&ds.name, &embeddings, &ds.labels(), grid, opts)
}

/// Outer stratified folds select hyperparameters by inner stratified CV on
/// the outer-training part, retrain there and score the outer test fold.
pub fn nested_cv_embedded(
    name: &str,
    embeddings: &[SpectrumEmbedding],
    labels: &[i64],
    grid: &HyperGrid,
    opts: CvOptions,
) -> Result<CvResult> {
    if embeddings.len() != labels.len() {
        return Err(Error::validation(format!(
            "{} embeddings for {} labels",
            embeddings.len(),
            labels.len()
        )));
    }
    let dim = embeddings.first().map_or(0, SpectrumEmbedding::dim);
    let sq = squared_distance_matrix(embeddings)?;
    let outer = stratified_folds(labels, opts.k_outer, opts.seed)?;

    let per_fold: Vec<(f64, Hyperparams)> = (0..opts.k_outer)
        .into_par_iter()
        .map(|fold| {
            let (train, test) = split(&outer, fold);
            let train_labels: Vec<i64> = train.iter().map(|&t| labels[t]).collect();
            let inner_seed = derive_seed(opts.seed, fold);
            let chosen = select_hyperparams(
                &sq.select(&train),
                &train_labels,
                grid,
                opts.k_inner,
                inner_seed,
            )?;
            let test_labels: Vec<i64> = test.iter().map(|&t| labels[t]).collect();
            let acc = fit_and_score(&sq, &train, &train_labels, &test, &test_labels, chosen)?;
            Ok((acc, chosen))
        })
        .collect::<Result<_>>()?;

    let per_fold_accuracy: Vec<f64> = per_fold.iter().map(|p| p.0).collect();
    let k = per_fold_accuracy.len() as f64;
    let mean = per_fold_accuracy.iter().sum::<f64>() / k;
    let std = (per_fold_accuracy.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / k).sqrt();
    Ok(CvResult {
        dataset: name.to_string(),
        dim,
        per_fold_accuracy,
        mean,
        std,
        chosen_hyperparams: per_fold.iter().map(|p| p.1).collect(),
        seed: opts.seed,
    })
}

fn split(assign: &[usize], fold: usize) -> (Vec<usize>, Vec<usize>) {
    (0..assign.len()).partition(|&t| assign[t] != fold)
}

/// Inner-split seed, a fixed mix of the run seed and the outer fold.
fn derive_seed(seed: u64, fold: usize) -> u64 {
    let mut z = seed ^ (fold as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Best mean inner accuracy; ties resolve to the earliest grid point.
fn select_hyperparams(
    sq: &SymmetricMatrix,
    labels: &[i64],
    grid: &HyperGrid,
    k_inner: usize,
    seed: u64,
) -> Result<Hyperparams> {
    let inner = stratified_folds(labels, k_inner, seed)?;
    let splits: Vec<(Vec<usize>, Vec<usize>)> = (0..k_inner).map(|f| split(&inner, f)).collect();
    let points = grid.points();
    let scores: Vec<f64> = points
        .par_iter()
        .map(|&hp| {
            let mut total = 0.0;
            for (train, test) in &splits {
                let tl: Vec<i64> = train.iter().map(|&t| labels[t]).collect();
                let sl: Vec<i64> = test.iter().map(|&t| labels[t]).collect();
                total += fit_and_score(sq, train, &tl, test, &sl, hp)?;
            }
            Ok(total / k_inner as f64)
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    Ok(points[best])
}

/// Trains on `train` (indices into `sq`) and returns accuracy on `test`.
/// A single-class training set predicts that class.
fn fit_and_score(
    sq: &SymmetricMatrix,
    train: &[usize],
    train_labels: &[i64],
    test: &[usize],
    test_labels: &[i64],
    hp: Hyperparams,
) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::validation("empty test fold"));
    }
    let first = train_labels[0];
    let preds = if train_labels.iter().all(|&l| l == first) {
        vec![first; test.len()]
    } else {
        let gram = rbf_from_squared(&sq.select(train), hp.gamma)?;
        let rows = DenseMatrix::from_fn(test.len(), train.len(), |r, c| {
            (-hp.gamma * sq.get(test[r], train[c])).exp()
        });
        MulticlassModel::train(&gram, train_labels, hp.c)?.predict(&rows)?
    };
    let correct = preds.iter().zip(test_labels).filter(|(p, l)| p == l).count();
    Ok(correct as f64 / test.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;

    fn dataset(graphs: Vec<Graph>) -> GraphDataset {
        GraphDataset::new("toy", graphs).unwrap()
    }

    #[test]
    fn grid_order_and_validation() {
        let g = HyperGrid::new(&[5.0, 0.5], &[0.1, 1e-3]).unwrap();
        let pts = g.points();
        assert_eq!(pts[0], Hyperparams { c: 0.5, gamma: 1e-3 });
        assert_eq!(pts[3], Hyperparams { c: 5.0, gamma: 0.1 });
        assert_eq!(HyperGrid::molecular().points().len(), 21);
        assert_eq!(HyperGrid::social().points().len(), 20);
        assert!(HyperGrid::new(&[], &[1.0]).is_err());
        assert!(HyperGrid::new(&[1.0], &[-1.0]).is_err());
    }

    #[test]
    fn single_label_dataset_is_perfect() {
        let graphs: Vec<Graph> = (0..20).map(|i| Graph::path(3 + i % 4).with_label(1)).collect();
        let r = nested_cv(&dataset(graphs), &EmbeddingConfig::default(), &HyperGrid::molecular(), CvOptions::default())
            .unwrap();
        assert_eq!(r.mean, 1.0);
        assert_eq!(r.std, 0.0);
    }

    #[test]
    fn repeated_families_are_perfect() {
        let graphs: Vec<Graph> = (0..40)
            .map(|i| {
                if i % 2 == 0 {
                    Graph::path(6).with_label(0)
                } else {
                    Graph::complete(6).with_label(1)
                }
            })
            .collect();
        let opts = CvOptions { seed: 3, ..CvOptions::default() };
        let r = nested_cv(&dataset(graphs), &EmbeddingConfig::default(), &HyperGrid::molecular(), opts).unwrap();
        assert_eq!(r.mean, 1.0);
        assert_eq!(r.per_fold_accuracy.len(), 10);
        assert_eq!(r.chosen_hyperparams.len(), 10);
        assert_eq!(r.dim, 6);
    }

    #[test]
    fn deterministic_and_json_shape() {
        let graphs: Vec<Graph> = (0..30)
            .map(|i| {
                crate::data::synthetic::erdos_renyi(8 + i % 5, if i % 3 == 0 { 0.2 } else { 0.5 }, i as u64)
                    .unwrap()
                    .with_label(i64::from(i % 3 == 0))
            })
            .collect();
        let ds = dataset(graphs);
        let opts = CvOptions { k_outer: 5, k_inner: 3, seed: 11 };
        let a = nested_cv(&ds, &EmbeddingConfig::default(), &HyperGrid::molecular(), opts).unwrap();
        let b = nested_cv(&ds, &EmbeddingConfig::default(), &HyperGrid::molecular(), opts).unwrap();
        assert_eq!(a, b);
        let mean: f64 = a.per_fold_accuracy.iter().sum::<f64>() / 5.0;
        assert!((a.mean - mean).abs() < 1e-12);
        let v = serde_json::to_value(&a).unwrap();
        for key in ["dataset", "dim", "folds", "mean", "std", "per_fold_hyperparams", "seed"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }

    #[test]
    fn seeds_are_mixed() {
        assert_ne!(derive_seed(0, 0), derive_seed(0, 1));
        assert_ne!(derive_seed(1, 0), derive_seed(0, 0));
    }
}
