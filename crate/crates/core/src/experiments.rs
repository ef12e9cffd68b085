//! Perturbation sweeps, bound sweeps and truncation sweeps producing
//! plot-ready series.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{full_report, BoundReport};
use crate::classify::{nested_cv_embedded, CvOptions, CvResult, HyperGrid};
use crate::data::synthetic::erdos_renyi;
use crate::data::tu::GraphDataset;
use crate::embed::{embed_all, format_significant, gls, gls_distance, tgls};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::perturb::{add_random_nodes, random_edge_perturbation, random_mixed_perturbation};

/// One point of a named series: the mean and population std over trials.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesPoint {
    pub series: String,
    pub x: f64,
    pub mean: f64,
    pub std: f64,
}

fn summarize(series: &str, x: f64, values: &[f64]) -> SeriesPoint {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    SeriesPoint {
        series: series.to_string(),
        x,
        mean,
        std: var.sqrt(),
    }
}

/// Long-format CSV: `series,x,mean,std`.
pub fn write_series_csv<W: Write + ?Sized>(out: &mut W, points: &[SeriesPoint]) -> std::io::Result<()> {
    writeln!(out, "series,x,mean,std")?;
    for p in points {
        writeln!(
            out,
            "{},{},{},{}",
            p.series,
            format_significant(p.x, 12),
            format_significant(p.mean, 12),
            format_significant(p.std, 12)
        )?;
    }
    Ok(())
}

/// Per-trial seed for trial `t` of a sweep seeded with `seed`.
fn trial_seed(seed: u64, t: usize) -> u64 {
    seed.wrapping_mul(1_000_003).wrapping_add(t as u64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeSweepKind {
    Add,
    Remove,
}

impl EdgeSweepKind {
    pub fn series_name(self) -> &'static str {
        match self {
            EdgeSweepKind::Add => "edge_add",
            EdgeSweepKind::Remove => "edge_remove",
        }
    }
}

/// GLS distance between `base` and `k` random binary edge flips of one
/// kind, averaged over `trials` seeds for each `k`.
pub fn edge_sweep(
    base: &Graph,
    kind: EdgeSweepKind,
    ks: &[usize],
    trials: usize,
    seed: u64,
) -> Result<Vec<SeriesPoint>> {
    if trials == 0 {
        return Err(Error::validation("at least one trial is required"));
    }
    let reference = gls(base)?;
    ks.iter()
        .map(|&k| {
            let dists: Vec<f64> = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let s = trial_seed(seed, t);
                    let pert = match kind {
                        EdgeSweepKind::Add => random_edge_perturbation(base, k, 0, s)?,
                        EdgeSweepKind::Remove => random_edge_perturbation(base, 0, k, s)?,
                    };
                    gls_distance(&reference, &gls(&pert.apply(base)?)?)
                })
                .collect::<Result<_>>()?;
            Ok(summarize(kind.series_name(), k as f64, &dists))
        })
        .collect()
}

/// Grows `base` by `steps` nodes with `connectivity` random edges each and
/// records `‖tgls(base, n) − tgls(grown, n)‖` after every addition, with
/// `n = base.n()`. Series are named `node_add_c{connectivity}`.
pub fn node_add_sweep(
    base: &Graph,
    steps: usize,
    connectivities: &[usize],
    trials: usize,
    seed: u64,
) -> Result<Vec<SeriesPoint>> {
    if trials == 0 {
        return Err(Error::validation("at least one trial is required"));
    }
    let n = base.n();
    let reference = gls(base)?;
    let mut out = Vec::new();
    for &conn in connectivities {
        let name = format!("node_add_c{conn}");
        // dists[t][s] is the distance after s additions in trial t.
        let dists: Vec<Vec<f64>> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let (grown, _) = add_random_nodes(base, steps, conn, trial_seed(seed, t))?;
                (0..=steps)
                    .map(|s| gls_distance(&reference, &tgls(&grown.induced_prefix(n + s), n)?))
                    .collect()
            })
            .collect::<Result<_>>()?;
        for s in 0..=steps {
            let col: Vec<f64> = dists.iter().map(|d| d[s]).collect();
            out.push(summarize(&name, s as f64, &col));
        }
    }
    Ok(out)
}

/// `‖tgls(a, d) − tgls(b, d)‖ / d` for `d = 1..=max_dim`.
pub fn per_dimension_distance(a: &Graph, b: &Graph, max_dim: usize) -> Result<Vec<(usize, f64)>> {
    (1..=max_dim)
        .map(|d| Ok((d, gls_distance(&tgls(a, d)?, &tgls(b, d)?)? / d as f64)))
        .collect()
}

/// Seed-averaged [`per_dimension_distance`] between `base` and its
/// `steps`-node growth, one series `per_dim_c{connectivity}` per level.
pub fn per_dimension_sweep(
    base: &Graph,
    steps: usize,
    connectivities: &[usize],
    max_dim: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<SeriesPoint>> {
    if trials == 0 {
        return Err(Error::validation("at least one trial is required"));
    }
    let mut out = Vec::new();
    for &conn in connectivities {
        let name = format!("per_dim_c{conn}");
        let runs: Vec<Vec<(usize, f64)>> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let (grown, _) = add_random_nodes(base, steps, conn, trial_seed(seed, t))?;
                per_dimension_distance(base, &grown, max_dim)
            })
            .collect::<Result<_>>()?;
        for d in 0..max_dim {
            let col: Vec<f64> = runs.iter().map(|r| r[d].1).collect();
            out.push(summarize(&name, (d + 1) as f64, &col));
        }
    }
    Ok(out)
}

/// Seeded random (graph, perturbation) instance with at most `n_max` nodes
/// after perturbation. About a quarter of the graphs carry fractional weights.
pub fn bound_instance(n_max: usize, seed: u64) -> Result<(Graph, crate::perturb::Perturbation)> {
    if n_max == 0 {
        return Err(Error::validation("instances need at least one node"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n1 = rng.gen_range(1..=n_max);
    let extra = rng.gen_range(0..=(n_max - n1).min(5));
    let p = rng.gen_range(0.05..0.7);
    let mut g = erdos_renyi(n1, p, rng.gen())?;
    if rng.gen_bool(0.25) {
        let edges: Vec<(usize, usize, f64)> = g
            .edges()
            .iter()
            .map(|&(i, j, _)| (i, j, rng.gen_range(0.05..=1.0)))
            .collect();
        g = Graph::new(n1, &edges)?;
    }
    let n = n1 + extra;
    let pairs = n * (n - 1) / 2;
    let flips = rng.gen_range(0..=(pairs / 4).max(1));
    let pert = random_mixed_perturbation(&g, extra, flips, &mut rng);
    Ok((g, pert))
}

/// Full bound reports for `count` seeded instances, in instance order.
pub fn bound_sweep(count: usize, n_max: usize, seed: u64, brute_force: bool) -> Result<Vec<BoundReport>> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let (g, pert) = bound_instance(n_max, trial_seed(seed, i))?;
            full_report(&g, &pert, brute_force)
        })
        .collect()
}

/// Nested CV at each explicit dimension, embedding all graphs per `d`.
pub fn truncation_sweep(
    ds: &GraphDataset,
    dims: &[usize],
    grid: &HyperGrid,
    opts: CvOptions,
) -> Result<Vec<CvResult>> {
    let labels = ds.labels();
    dims.iter()
        .map(|&d| {
            let emb = embed_all(&ds.graphs, d)?;
            nested_cv_embedded(&ds.name, &emb, &labels, grid, opts)
        })
        .collect()
}

/// Average ranks (1-based) with ties sharing the mean rank.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation (Pearson correlation of tie-averaged ranks).
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::validation("spearman needs two equal-length series of length ≥ 2"));
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::numerical("spearman is undefined for a constant series"));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spearman_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert!((spearman(&x, &[10.0, 20.0, 25.0, 100.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((spearman(&x, &[4.0, 3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
        // Ranks (1, 2.5, 2.5, 4) against (1, 2, 3, 4): r = 4.5 / sqrt(4.5 * 5).
        let r = spearman(&x, &[1.0, 5.0, 5.0, 9.0]).unwrap();
        assert!((r - 4.5 / (4.5f64 * 5.0).sqrt()).abs() < 1e-12);
        assert!(spearman(&x, &[1.0; 4]).is_err());
    }

    #[test]
    fn zero_connectivity_keeps_distance_zero() {
        let base = erdos_renyi(30, 0.1, 5).unwrap();
        let pts = node_add_sweep(&base, 5, &[0], 3, 1).unwrap();
        assert_eq!(pts.len(), 6);
        assert!(pts.iter().all(|p| p.mean < 1e-9 && p.series == "node_add_c0"));
    }

    #[test]
    fn zero_flips_give_zero_distance() {
        let base = erdos_renyi(20, 0.2, 1).unwrap();
        let pts = edge_sweep(&base, EdgeSweepKind::Remove, &[0, 3], 4, 2).unwrap();
        assert_eq!(pts[0].mean, 0.0);
        assert!(pts[1].mean > 0.0);
        assert!(edge_sweep(&base, EdgeSweepKind::Add, &[1_000], 1, 0).is_err());
    }

    #[test]
    fn bound_instances_respect_size() {
        for s in 0..50 {
            let (g, pert) = bound_instance(9, s).unwrap();
            assert!(g.n() <= pert.n() && pert.n() <= 9);
        }
        let reports = bound_sweep(20, 7, 3, true).unwrap();
        assert!(reports.iter().all(|r| r.violations() == 0));
    }

    #[test]
    fn series_csv_layout() {
        let mut buf = Vec::new();
        write_series_csv(&mut buf, &[summarize("edge_add", 10.0, &[1.0, 3.0])]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "series,x,mean,std\nedge_add,10,2,1\n");
    }

    #[test]
    fn per_dimension_identity_is_zero() {
        let g = erdos_renyi(12, 0.3, 2).unwrap();
        let v = per_dimension_distance(&g, &g, 5).unwrap();
        assert_eq!(v.len(), 5);
        assert!(v.iter().all(|&(_, x)| x == 0.0));
    }
}
