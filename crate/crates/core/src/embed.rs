//! Laplacian-spectrum embeddings, distances and RBF kernels.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::eigen::{eigvals_topk, laplacian_spectrum};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::SymmetricMatrix;

/// Laplacian eigenvalues, largest first, zero-padded at the tail.
///
/// Storing the spectrum descending makes truncation a prefix and padding
/// with isolated nodes a suffix of zeros.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumEmbedding {
    values: Vec<f64>,
}

impl SpectrumEmbedding {
    /// Wraps values, which must be non-increasing.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::validation("embedding values must be non-increasing"));
        }
        Ok(SpectrumEmbedding { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Keeps the first `d` values, padding with zeros if needed.
    pub fn resized(&self, d: usize) -> SpectrumEmbedding {
        let mut values = self.values.clone();
        values.resize(d, 0.0);
        SpectrumEmbedding { values }
    }
}

/// How the embedding dimension is picked for a dataset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum DimRule {
    Explicit(usize),
    /// Nearest-rank percentile of the graph sizes, in `(0, 100]`.
    Percentile(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EmbeddingConfig {
    pub dim_rule: DimRule,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            dim_rule: DimRule::Percentile(95.0),
        }
    }
}

impl EmbeddingConfig {
    pub fn explicit(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::validation("embedding dimension must be at least 1"));
        }
        Ok(EmbeddingConfig {
            dim_rule: DimRule::Explicit(d),
        })
    }

    pub fn percentile(p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 100.0) {
            return Err(Error::validation(format!("percentile {p} outside (0, 100]")));
        }
        Ok(EmbeddingConfig {
            dim_rule: DimRule::Percentile(p),
        })
    }
}

/// Full spectrum, `dim == g.n()`.
pub fn gls(g: &Graph) -> Result<SpectrumEmbedding> {
    let mut values = laplacian_spectrum(g)?;
    values.reverse();
    Ok(SpectrumEmbedding { values })
}

/// The `d` largest eigenvalues, zero-padded when the graph has fewer nodes.
pub fn tgls(g: &Graph, d: usize) -> Result<SpectrumEmbedding> {
    if d == 0 {
        return Err(Error::validation("embedding dimension must be at least 1"));
    }
    if d <= g.n() {
        Ok(SpectrumEmbedding {
            values: eigvals_topk(g, d)?,
        })
    } else {
        Ok(gls(g)?.resized(d))
    }
}

fn check_dims(a: &SpectrumEmbedding, b: &SpectrumEmbedding) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::validation(format!(
            "embedding dimensions differ: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Euclidean distance between two spectra of equal dimension.
pub fn gls_distance(a: &SpectrumEmbedding, b: &SpectrumEmbedding) -> Result<f64> {
    check_dims(a, b)?;
    Ok(squared_distance(&a.values, &b.values).sqrt())
}

/// `exp(-gamma * ||a - b||²)`.
pub fn rbf_kernel(a: &SpectrumEmbedding, b: &SpectrumEmbedding, gamma: f64) -> Result<f64> {
    check_dims(a, b)?;
    check_gamma(gamma)?;
    Ok((-gamma * squared_distance(&a.values, &b.values)).exp())
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(format!("gamma must be positive, got {gamma}")))
    }
}

/// Pairwise squared Euclidean distances. Rows are computed in parallel.
pub fn squared_distance_matrix(embeddings: &[SpectrumEmbedding]) -> Result<SymmetricMatrix> {
    if let Some(first) = embeddings.first() {
        for e in embeddings {
            check_dims(first, e)?;
        }
    }
    let n = embeddings.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    // Evaluate each pair in a fixed orientation so the
                    // matrix is exactly symmetric.
                    let (a, b) = if i <= j { (i, j) } else { (j, i) };
                    squared_distance(&embeddings[a].values, &embeddings[b].values)
                })
                .collect()
        })
        .collect();
    SymmetricMatrix::from_rows(&rows)
}

/// RBF Gram matrix from precomputed squared distances.
pub fn rbf_from_squared(sq: &SymmetricMatrix, gamma: f64) -> Result<SymmetricMatrix> {
    check_gamma(gamma)?;
    Ok(SymmetricMatrix::from_upper_fn(sq.n(), |i, j| {
        (-gamma * sq.get(i, j)).exp()
    }))
}

/// `K[i][j] = rbf_kernel(e_i, e_j, gamma)`.
pub fn gram_matrix(embeddings: &[SpectrumEmbedding], gamma: f64) -> Result<SymmetricMatrix> {
    check_gamma(gamma)?;
    rbf_from_squared(&squared_distance_matrix(embeddings)?, gamma)
}

/// Embedding dimension for a dataset with the given graph sizes.
///
/// The percentile rule returns the smallest size `s` such that at least
/// `p` percent of graphs have at most `s` nodes (nearest rank).
pub fn choose_dimension(sizes: &[usize], cfg: &EmbeddingConfig) -> Result<usize> {
    if sizes.is_empty() {
        return Err(Error::validation("cannot choose a dimension for an empty dataset"));
    }
    match cfg.dim_rule {
        DimRule::Explicit(d) => Ok(d),
        DimRule::Percentile(p) => {
            let mut sorted = sizes.to_vec();
            sorted.sort_unstable();
            let rank = (p / 100.0 * sorted.len() as f64).ceil() as usize;
            Ok(sorted[rank.clamp(1, sorted.len()) - 1])
        }
    }
}

/// `tgls(g, d)` for every graph, in parallel, in input order.
pub fn embed_all(graphs: &[Graph], d: usize) -> Result<Vec<SpectrumEmbedding>> {
    graphs.par_iter().map(|g| tgls(g, d)).collect()
}

/// Formats `v` with `sig` significant digits in the style of C's `%g`.
pub fn format_significant(v: f64, sig: usize) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{:.*e}", sig.saturating_sub(1), v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= sig as i32 {
        let mantissa = trim_zeros(mantissa);
        format!("{mantissa}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Writes `graph_id,label,e_1,...,e_d` rows with 12 significant digits.
pub fn write_embeddings_csv<W: Write>(
    mut out: W,
    graphs: &[Graph],
    embeddings: &[SpectrumEmbedding],
) -> std::io::Result<()> {
    let d = embeddings.first().map_or(0, SpectrumEmbedding::dim);
    let mut header = String::from("graph_id,label");
    for k in 1..=d {
        header.push_str(&format!(",e_{k}"));
    }
    writeln!(out, "{header}")?;
    for (idx, (g, e)) in graphs.iter().zip(embeddings).enumerate() {
        let id = g.id().unwrap_or(idx + 1);
        let label = g.label().map(|l| l.to_string()).unwrap_or_default();
        write!(out, "{id},{label}")?;
        for v in e.values() {
            write!(out, ",{}", format_significant(*v, 12))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn gls_examples() {
        assert_close(gls(&Graph::path(3)).unwrap().values(), &[3.0, 1.0, 0.0], 1e-12);
        assert_close(gls(&Graph::empty(4)).unwrap().values(), &[0.0; 4], 0.0);
        assert_close(gls(&Graph::complete(4)).unwrap().values(), &[4.0, 4.0, 4.0, 0.0], 1e-12);
    }

    #[test]
    fn tgls_truncates_and_pads() {
        assert_close(tgls(&Graph::path(3), 2).unwrap().values(), &[3.0, 1.0], 1e-12);
        assert_close(
            tgls(&Graph::path(3), 5).unwrap().values(),
            &[3.0, 1.0, 0.0, 0.0, 0.0],
            1e-12,
        );
        assert!(tgls(&Graph::path(3), 0).is_err());
    }

    #[test]
    fn distance_examples() {
        let x = gls(&Graph::path(4)).unwrap();
        assert_eq!(gls_distance(&x, &x).unwrap(), 0.0);
        let k2 = gls(&Graph::complete(2)).unwrap();
        let e2 = gls(&Graph::empty(2)).unwrap();
        assert!((gls_distance(&k2, &e2).unwrap() - 2.0).abs() < 1e-12);
        assert!(matches!(gls_distance(&k2, &x), Err(Error::Validation(_))));
    }

    #[test]
    fn padding_equivalence_distance() {
        let g = Graph::path(5);
        let padded = gls(&g.pad_isolated(3)).unwrap();
        let resized = gls(&g).unwrap().resized(8);
        assert!(gls_distance(&padded, &resized).unwrap() < 1e-12);
    }

    #[test]
    fn rbf_examples() {
        let x = gls(&Graph::path(4)).unwrap();
        assert_eq!(rbf_kernel(&x, &x, 3.0).unwrap(), 1.0);
        let k2 = gls(&Graph::complete(2)).unwrap();
        let e2 = gls(&Graph::empty(2)).unwrap();
        assert!((rbf_kernel(&k2, &e2, 0.25).unwrap() - (-1.0f64).exp()).abs() < 1e-12);
        assert!(rbf_kernel(&k2, &e2, 0.0).is_err());
        assert!(rbf_kernel(&k2, &e2, -1.0).is_err());
    }

    #[test]
    fn gram_examples() {
        let x = gls(&Graph::path(3)).unwrap();
        assert_eq!(gram_matrix(std::slice::from_ref(&x), 0.5).unwrap().to_rows(), vec![vec![1.0]]);
        assert_eq!(
            gram_matrix(&[x.clone(), x.clone()], 0.5).unwrap().to_rows(),
            vec![vec![1.0, 1.0], vec![1.0, 1.0]]
        );
        let y = gls(&Graph::path(4)).unwrap();
        assert!(matches!(gram_matrix(&[x, y], 0.5), Err(Error::Validation(_))));
    }

    #[test]
    fn dimension_rules() {
        let cfg = EmbeddingConfig::default();
        assert_eq!(choose_dimension(&[7; 20], &cfg).unwrap(), 7);
        let sizes: Vec<usize> = (1..=20).collect();
        assert_eq!(choose_dimension(&sizes, &cfg).unwrap(), 19);
        let all = EmbeddingConfig::percentile(100.0).unwrap();
        assert_eq!(choose_dimension(&sizes, &all).unwrap(), 20);
        let tiny = EmbeddingConfig::percentile(0.1).unwrap();
        assert_eq!(choose_dimension(&sizes, &tiny).unwrap(), 1);
        assert_eq!(
            choose_dimension(&sizes, &EmbeddingConfig::explicit(4).unwrap()).unwrap(),
            4
        );
        assert!(choose_dimension(&[], &cfg).is_err());
        assert!(EmbeddingConfig::percentile(0.0).is_err());
        assert!(EmbeddingConfig::percentile(100.5).is_err());
        assert!(EmbeddingConfig::explicit(0).is_err());
    }

    #[test]
    fn significant_digits() {
        assert_eq!(format_significant(3.0, 12), "3");
        assert_eq!(format_significant(0.0, 12), "0");
        assert_eq!(format_significant(1.0 / 3.0, 12), "0.333333333333");
        assert_eq!(format_significant(5.23606797749979, 12), "5.2360679775");
        assert_eq!(format_significant(-2.5e-15, 12), "-2.5e-15");
        assert_eq!(format_significant(123456789012345.0, 12), "1.23456789012e+14");
        assert_eq!(format_significant(0.00012345, 12), "0.00012345");
    }

    #[test]
    fn csv_layout() {
        let graphs = vec![
            Graph::path(3).with_label(1).with_id(1),
            Graph::complete(2).with_label(-1).with_id(2),
        ];
        let embs = embed_all(&graphs, 3).unwrap();
        let mut buf = Vec::new();
        write_embeddings_csv(&mut buf, &graphs, &embs).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "graph_id,label,e_1,e_2,e_3");
        assert_eq!(lines.len(), 3);
        assert!(lines[2].starts_with("2,-1,2,"));
    }
}
