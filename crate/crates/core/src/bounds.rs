//! Exact divergence to isomorphism on small graphs and numerical checks of
//! the spectral-distance bounds.
//!
//! For a source graph `G1` and perturbation `(P, Π)` producing `G2`, the
//! checked chain is
//!
//! ```text
//! ‖L̄1 − Oᵀ L2 O‖_F  =  ‖λ(L̄1) − λ(L2)‖₂  ≤  ‖L_P‖_F
//! ```
//!
//! with `O = Q2 Q̄1ᵀ` built from the two eigenbases, together with the upper
//! bound `‖L_P‖_F ≤ ‖λ(L̄1) − λ(L2)‖₂ + ‖Πᵀ Q̄1 Λ2 Q̄1ᵀ Π − L2‖_F`.

use serde::Serialize;

use crate::eigen::{eigh_full, eigvalsh_full};
use crate::error::{Error, Result};
use crate::graph::{Graph, Permutation};
use crate::matrix::{DenseMatrix, SymmetricMatrix};
use crate::perturb::Perturbation;

/// Largest graph accepted by the factorial searches.
pub const BRUTE_FORCE_MAX_N: usize = 9;
/// Absolute slack for the inequalities.
pub const INEQUALITY_TOL: f64 = 1e-8;
/// Tolerance for `‖L̄1 − Oᵀ L2 O‖_F == ‖λ(L̄1) − λ(L2)‖₂`.
pub const EQUALITY_TOL: f64 = 1e-7;

/// Outcome of each checked relation; `None` when it was not evaluated.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct BoundFlags {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weyl_bound: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigenvector_upper_bound: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orthogonal_equality: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sandwich: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dgi_lower_bound: Option<bool>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct BoundReport {
    /// `‖λ(L2) − λ(L̄1)‖₂` with both spectra ascending.
    pub spectral_distance: f64,
    /// `‖L_P‖_F` of the ground-truth perturbation.
    pub perturbation_norm: f64,
    /// `min_Π ‖L2 − Πᵀ L̄1 Π‖_F`, only when the brute force ran.
    pub dgi_frobenius: Option<f64>,
    /// `‖L̄1 − Oᵀ L2 O‖_F` for `O = Q2 Q̄1ᵀ`.
    pub orthogonal_achieved: Option<f64>,
    /// `spectral_distance + ‖Πᵀ Q̄1 Λ2 Q̄1ᵀ Π − L2‖_F`.
    pub prop2_rhs: Option<f64>,
    pub flags: BoundFlags,
}

impl BoundReport {
    /// Number of evaluated relations that failed.
    pub fn violations(&self) -> usize {
        let f = &self.flags;
        [
            f.weyl_bound,
            f.eigenvector_upper_bound,
            f.orthogonal_equality,
            f.sandwich,
            f.dgi_lower_bound,
        ]
        .iter()
        .filter(|v| **v == Some(false))
        .count()
    }
}

/// Laplacians and spectra shared by the checks.
struct Pair {
    l1: SymmetricMatrix,
    l2: SymmetricMatrix,
    lambda1: Vec<f64>,
    lambda2: Vec<f64>,
    perturbation_norm: f64,
}

impl Pair {
    fn new(g1: &Graph, pert: &Perturbation) -> Result<Pair> {
        let g2 = pert.apply(g1)?;
        let l1 = g1.pad_isolated(pert.n() - g1.n()).laplacian();
        let l2 = g2.laplacian();
        Ok(Pair {
            lambda1: eigvalsh_full(&l1)?,
            lambda2: eigvalsh_full(&l2)?,
            perturbation_norm: pert.laplacian().frobenius_norm(),
            l1,
            l2,
        })
    }

    fn spectral_distance(&self) -> f64 {
        self.lambda1
            .iter()
            .zip(&self.lambda2)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// `‖λ(L2) − λ(L̄1)‖₂ ≤ ‖L_P‖_F`.
pub fn verify_weyl_bound(g1: &Graph, pert: &Perturbation) -> Result<BoundReport> {
    let pair = Pair::new(g1, pert)?;
    let sd = pair.spectral_distance();
    Ok(BoundReport {
        spectral_distance: sd,
        perturbation_norm: pair.perturbation_norm,
        flags: BoundFlags {
            weyl_bound: Some(sd <= pair.perturbation_norm + INEQUALITY_TOL),
            ..BoundFlags::default()
        },
        ..BoundReport::default()
    })
}

fn eigenvector_rhs(pair: &Pair, alignment: &Permutation) -> Result<f64> {
    let q1 = eigh_full(&pair.l1)?.vectors;
    let x = q1.scale_columns(&pair.lambda2).matmul(&q1.transpose());
    let x = symmetrize(&x);
    let aligned = alignment.conjugate(&x);
    Ok(pair.spectral_distance() + aligned.sub(&pair.l2)?.frobenius_norm())
}

/// `‖L_P‖_F ≤ ‖λ(L̄1) − λ(L2)‖₂ + ‖Πᵀ Q̄1 Λ2 Q̄1ᵀ Π − L2‖_F`.
pub fn verify_prop2_bound(g1: &Graph, pert: &Perturbation) -> Result<BoundReport> {
    let pair = Pair::new(g1, pert)?;
    let rhs = eigenvector_rhs(&pair, pert.alignment())?;
    Ok(BoundReport {
        spectral_distance: pair.spectral_distance(),
        perturbation_norm: pair.perturbation_norm,
        prop2_rhs: Some(rhs),
        flags: BoundFlags {
            eigenvector_upper_bound: Some(pair.perturbation_norm <= rhs + INEQUALITY_TOL),
            ..BoundFlags::default()
        },
        ..BoundReport::default()
    })
}

fn orthogonal_witness(pair: &Pair) -> Result<f64> {
    let q1 = eigh_full(&pair.l1)?.vectors;
    let q2 = eigh_full(&pair.l2)?.vectors;
    let o = q2.matmul(&q1.transpose());
    let rotated = o.transpose().matmul(&pair.l2.to_dense()).matmul(&o);
    Ok(pair.l1.to_dense().sub(&rotated).frobenius_norm())
}

/// Builds `O = Q2 Q̄1ᵀ` and checks that it attains the sorted-spectra
/// distance, and that this distance is bounded by `‖L_P‖_F`.
pub fn verify_orthogonal_sandwich(g1: &Graph, pert: &Perturbation) -> Result<BoundReport> {
    let pair = Pair::new(g1, pert)?;
    let sd = pair.spectral_distance();
    let achieved = orthogonal_witness(&pair)?;
    let equality = (achieved - sd).abs() <= EQUALITY_TOL;
    let upper = sd <= pair.perturbation_norm + INEQUALITY_TOL;
    Ok(BoundReport {
        spectral_distance: sd,
        perturbation_norm: pair.perturbation_norm,
        orthogonal_achieved: Some(achieved),
        flags: BoundFlags {
            orthogonal_equality: Some(equality),
            sandwich: Some(achieved <= sd + EQUALITY_TOL && upper),
            ..BoundFlags::default()
        },
        ..BoundReport::default()
    })
}

/// Every check at once; the brute-force divergence is added when
/// `brute_force` is set and the perturbed graph is small enough.
pub fn full_report(g1: &Graph, pert: &Perturbation, brute_force: bool) -> Result<BoundReport> {
    let pair = Pair::new(g1, pert)?;
    let sd = pair.spectral_distance();
    let pn = pair.perturbation_norm;
    let rhs = eigenvector_rhs(&pair, pert.alignment())?;
    let achieved = orthogonal_witness(&pair)?;
    let dgi = if brute_force && pert.n() <= BRUTE_FORCE_MAX_N {
        Some(dgi_bruteforce(g1, &pert.apply(g1)?)?.0)
    } else {
        None
    };
    Ok(BoundReport {
        spectral_distance: sd,
        perturbation_norm: pn,
        dgi_frobenius: dgi,
        orthogonal_achieved: Some(achieved),
        prop2_rhs: Some(rhs),
        flags: BoundFlags {
            weyl_bound: Some(sd <= pn + INEQUALITY_TOL),
            eigenvector_upper_bound: Some(pn <= rhs + INEQUALITY_TOL),
            orthogonal_equality: Some((achieved - sd).abs() <= EQUALITY_TOL),
            sandwich: Some(achieved <= sd + EQUALITY_TOL && sd <= pn + INEQUALITY_TOL),
            dgi_lower_bound: dgi.map(|v| v >= sd - INEQUALITY_TOL),
        },
    })
}

fn symmetrize(m: &DenseMatrix) -> SymmetricMatrix {
    SymmetricMatrix::from_upper_fn(m.rows(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
}

/// Depth-first search over permutations `p` minimizing
/// `Σ_ij cost(a[i][j], b[p(i)][p(j)])`, pruning on partial sums.
fn min_alignment(
    a: &SymmetricMatrix,
    b: &SymmetricMatrix,
    cost: impl Fn(f64, f64) -> f64 + Copy,
) -> (f64, Vec<usize>) {
    struct Search<'a, C> {
        a: &'a SymmetricMatrix,
        b: &'a SymmetricMatrix,
        cost: C,
        map: Vec<usize>,
        used: Vec<bool>,
        best: f64,
        best_map: Vec<usize>,
    }

    impl<C: Fn(f64, f64) -> f64 + Copy> Search<'_, C> {
        fn descend(&mut self, k: usize, acc: f64) {
            let n = self.a.n();
            if k == n {
                if acc < self.best {
                    self.best = acc;
                    self.best_map.clone_from(&self.map);
                }
                return;
            }
            for t in 0..n {
                if self.used[t] {
                    continue;
                }
                let mut add = (self.cost)(self.a.get(k, k), self.b.get(t, t));
                for j in 0..k {
                    add += 2.0 * (self.cost)(self.a.get(k, j), self.b.get(t, self.map[j]));
                }
                let next = acc + add;
                if next >= self.best {
                    continue;
                }
                self.used[t] = true;
                self.map[k] = t;
                self.descend(k + 1, next);
                self.used[t] = false;
                if self.best == 0.0 {
                    return;
                }
            }
        }
    }

    let n = a.n();
    let mut s = Search {
        a,
        b,
        cost,
        map: vec![0; n],
        used: vec![false; n],
        best: f64::INFINITY,
        best_map: (0..n).collect(),
    };
    s.descend(0, 0.0);
    if n == 0 {
        s.best = 0.0;
    }
    (s.best, s.best_map)
}

/// Pads the smaller graph with isolated nodes; returns (first, second).
fn padded_pair(g1: &Graph, g2: &Graph) -> Result<(Graph, Graph)> {
    let n = g1.n().max(g2.n());
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::capacity(format!(
            "brute-force alignment limited to {BRUTE_FORCE_MAX_N} nodes, got {n}"
        )));
    }
    Ok((g1.pad_isolated(n - g1.n()), g2.pad_isolated(n - g2.n())))
}

/// `min_Π ‖L2 − Πᵀ L̄1 Π‖_F` by exhaustive search, with an optimal `Π`
/// (so that `g1` padded and relabelled by it is closest to `g2`).
pub fn dgi_bruteforce(g1: &Graph, g2: &Graph) -> Result<(f64, Permutation)> {
    let (a, b) = padded_pair(g1, g2)?;
    let (sq, map) = min_alignment(&a.laplacian(), &b.laplacian(), |x, y| (x - y) * (x - y));
    Ok((sq.sqrt(), Permutation::new(map)?))
}

/// `min_Π ‖W2 − Πᵀ W̄1 Π‖_1` (entrywise) by exhaustive search.
pub fn sparsest_alignment_l1(g1: &Graph, g2: &Graph) -> Result<(f64, Permutation)> {
    let (a, b) = padded_pair(g1, g2)?;
    let (v, map) = min_alignment(a.weights(), b.weights(), |x, y| (x - y).abs());
    Ok((v, Permutation::new(map)?))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CospectralReport {
    pub cospectral: bool,
    pub isomorphic: bool,
    /// Largest absolute difference between the sorted spectra.
    pub max_eigenvalue_gap: f64,
    pub dgi: f64,
}

impl CospectralReport {
    pub fn cospectral_non_isomorphic(&self) -> bool {
        self.cospectral && !self.isomorphic
    }
}

/// Compares Laplacian spectra (within 1e-8) against exact isomorphism.
pub fn cospectral_probe(g1: &Graph, g2: &Graph) -> Result<CospectralReport> {
    if g1.n() != g2.n() {
        return Err(Error::validation(format!(
            "cospectral probe needs equal sizes, got {} and {}",
            g1.n(),
            g2.n()
        )));
    }
    let (dgi, _) = dgi_bruteforce(g1, g2)?;
    let l1 = eigvalsh_full(&g1.laplacian())?;
    let l2 = eigvalsh_full(&g2.laplacian())?;
    let gap = l1
        .iter()
        .zip(&l2)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(CospectralReport {
        cospectral: gap <= 1e-8,
        isomorphic: dgi <= 1e-6,
        max_eigenvalue_gap: gap,
        dgi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use crate::data::synthetic::erdos_renyi;

    /// Plain enumeration of all permutations, independent of the pruned search.
    fn all_permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in all_permutations(n - 1) {
            for pos in 0..n {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }

    fn naive_dgi(g1: &Graph, g2: &Graph) -> f64 {
        let n = g2.n();
        let l1 = g1.pad_isolated(n - g1.n()).laplacian();
        let l2 = g2.laplacian();
        all_permutations(n)
            .into_iter()
            .map(|p| {
                let pm = Permutation::new(p).unwrap();
                l2.sub(&pm.conjugate(&l1)).unwrap().frobenius_norm()
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn isomorphic_pair_has_zero_divergence() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = erdos_renyi(6, 0.5, 3).unwrap();
        let p = Permutation::random(6, &mut rng);
        let h = g.permute(&p).unwrap();
        let (v, best) = dgi_bruteforce(&g, &h).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(g.permute(&best).unwrap(), h);
    }

    #[test]
    fn padded_k2_against_path() {
        let k2 = Graph::complete(2);
        let p3 = Graph::path(3);
        let (v, best) = dgi_bruteforce(&k2, &p3).unwrap();
        assert!((v - naive_dgi(&k2, &p3)).abs() < 1e-12);
        assert!((v - 2.0).abs() < 1e-12);
        // The optimal relabelling puts the K2 edge on a path edge.
        let moved = k2.pad_isolated(1).permute(&best).unwrap();
        let (i, j, _) = moved.edges()[0];
        assert_eq!(p3.weight(i, j), 1.0);
    }

    #[test]
    fn empty_source_gives_laplacian_norm() {
        let g = Graph::new(4, &[(0, 1, 1.0), (1, 2, 0.5), (2, 3, 1.0)]).unwrap();
        let (v, _) = dgi_bruteforce(&Graph::empty(4), &g).unwrap();
        assert!((v - g.laplacian().frobenius_norm()).abs() < 1e-12);
    }

    #[test]
    fn brute_force_matches_naive_enumeration() {
        for s in 0..20 {
            let g1 = erdos_renyi(3 + s as usize % 3, 0.5, s).unwrap();
            let g2 = erdos_renyi(5, 0.4, 100 + s).unwrap();
            let (v, _) = dgi_bruteforce(&g1, &g2).unwrap();
            assert!((v - naive_dgi(&g1, &g2)).abs() < 1e-12);
        }
    }

    #[test]
    fn divergence_is_symmetric() {
        for s in 0..30 {
            let g1 = erdos_renyi(2 + s as usize % 5, 0.5, s).unwrap();
            let g2 = erdos_renyi(6, 0.3, 50 + s).unwrap();
            let a = dgi_bruteforce(&g1, &g2).unwrap().0;
            let b = dgi_bruteforce(&g2, &g1).unwrap().0;
            assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn capacity_guard() {
        let big = Graph::empty(10);
        assert!(matches!(dgi_bruteforce(&Graph::empty(3), &big), Err(Error::Capacity(_))));
        assert!(matches!(sparsest_alignment_l1(&big, &big), Err(Error::Capacity(_))));
    }

    #[test]
    fn l1_alignment_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = erdos_renyi(6, 0.4, 8).unwrap();
        let h = g.permute(&Permutation::random(6, &mut rng)).unwrap();
        assert_eq!(sparsest_alignment_l1(&g, &h).unwrap().0, 0.0);
        assert_eq!(sparsest_alignment_l1(&Graph::complete(2), &Graph::path(3)).unwrap().0, 2.0);
        assert_eq!(sparsest_alignment_l1(&Graph::empty(3), &Graph::complete(3)).unwrap().0, 6.0);
    }

    #[test]
    fn zero_perturbation_reports_zero() {
        let g = erdos_renyi(7, 0.4, 1).unwrap();
        let r = full_report(&g, &Perturbation::zero(7), true).unwrap();
        assert!(r.spectral_distance < 1e-12);
        assert_eq!(r.perturbation_norm, 0.0);
        assert!(r.prop2_rhs.unwrap() < 1e-10);
        assert!(r.orthogonal_achieved.unwrap() < 1e-10);
        assert_eq!(r.dgi_frobenius, Some(0.0));
        assert_eq!(r.violations(), 0);
    }

    #[test]
    fn single_added_edge_example() {
        let pert = Perturbation::from_entries(3, &[(1, 2, 1.0)]).unwrap();
        let k2 = Graph::complete(2);
        let r = verify_weyl_bound(&k2, &pert).unwrap();
        // λ(L̄1) = (0, 0, 2), λ(L2) = (0, 1, 3).
        assert!((r.spectral_distance - 2f64.sqrt()).abs() < 1e-12);
        assert!((r.perturbation_norm - 2.0).abs() < 1e-12);
        assert_eq!(r.flags.weyl_bound, Some(true));
        let s = verify_orthogonal_sandwich(&k2, &pert).unwrap();
        assert!((s.orthogonal_achieved.unwrap() - 2f64.sqrt()).abs() < 1e-9);
        assert_eq!(s.flags.orthogonal_equality, Some(true));
        assert_eq!(s.flags.sandwich, Some(true));
    }

    #[test]
    fn permutation_only_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = erdos_renyi(8, 0.4, 2).unwrap();
        let pert = Perturbation::zero(8)
            .with_alignment(Permutation::random(8, &mut rng))
            .unwrap();
        let r = verify_prop2_bound(&g, &pert).unwrap();
        assert_eq!(r.perturbation_norm, 0.0);
        assert_eq!(r.flags.eigenvector_upper_bound, Some(true));
        let s = verify_orthogonal_sandwich(&g, &pert).unwrap();
        assert!(s.orthogonal_achieved.unwrap() < 1e-9);
    }

    #[test]
    fn cospectral_probe_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let g = erdos_renyi(6, 0.5, 1).unwrap();
        let h = g.permute(&Permutation::random(6, &mut rng)).unwrap();
        let r = cospectral_probe(&g, &h).unwrap();
        assert!(r.cospectral && r.isomorphic);
        let r = cospectral_probe(&Graph::path(3), &Graph::complete(2).pad_isolated(1)).unwrap();
        assert!(!r.cospectral && !r.isomorphic);
        assert!(cospectral_probe(&Graph::path(3), &Graph::path(4)).is_err());
    }

    #[test]
    fn report_json_keys() {
        let r = full_report(&Graph::path(3), &Perturbation::zero(3), false).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        for key in [
            "spectral_distance",
            "perturbation_norm",
            "dgi_frobenius",
            "orthogonal_achieved",
            "prop2_rhs",
            "flags",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert!(v["dgi_frobenius"].is_null());
    }
}
