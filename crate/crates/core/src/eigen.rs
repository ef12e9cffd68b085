//! Symmetric eigensolvers.
//!
//! The dense path reduces to tridiagonal form with Householder reflections
//! and then runs implicit-shift QL. The top-`d` path is a Lanczos iteration
//! with full reorthogonalization and locking restarts that only touches the
//! sparse edge structure of a graph Laplacian.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::{DenseMatrix, SymmetricMatrix};

const MAX_QL_ITERATIONS: usize = 64;

/// Graphs up to this size are always solved densely.
pub const DENSE_FALLBACK_MAX_N: usize = 128;
const MAX_RESTARTS: usize = 10;
const RESIDUAL_TOL: f64 = 1e-9;

/// Ascending eigenvalues with matching orthonormal column eigenvectors.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

impl EigenDecomposition {
    /// `Q diag(λ) Qᵀ`.
    pub fn reconstruct(&self) -> DenseMatrix {
        self.vectors
            .scale_columns(&self.values)
            .matmul(&self.vectors.transpose())
    }
}

/// All eigenvalues of `m`, ascending.
pub fn eigvalsh_full(m: &SymmetricMatrix) -> Result<Vec<f64>> {
    check_finite(m)?;
    let n = m.n();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut a = m.to_dense();
    let (mut d, mut e) = tridiagonalize(&mut a, false);
    tql(&mut d, &mut e, None)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Eigenvalues (ascending) and eigenvectors of `m`.
///
/// Each eigenvector is signed so that its largest-magnitude component is
/// positive.
pub fn eigh_full(m: &SymmetricMatrix) -> Result<EigenDecomposition> {
    check_finite(m)?;
    let mut v = m.to_dense();
    let (mut d, mut e) = tridiagonalize(&mut v, true);
    tql(&mut d, &mut e, Some(&mut v))?;
    Ok(sorted_decomposition(d, &v))
}

fn check_finite(m: &SymmetricMatrix) -> Result<()> {
    if m.is_finite() {
        Ok(())
    } else {
        Err(Error::numerical("matrix has non-finite entries"))
    }
}

fn sorted_decomposition(d: Vec<f64>, v: &DenseMatrix) -> EigenDecomposition {
    let n = d.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values: Vec<f64> = order.iter().map(|&k| d[k]).collect();
    let mut vectors = DenseMatrix::from_fn(v.rows(), n, |i, j| v[(i, order[j])]);
    for j in 0..n {
        let mut best = 0;
        for i in 0..vectors.rows() {
            if vectors[(i, j)].abs() > vectors[(best, j)].abs() {
                best = i;
            }
        }
        if vectors.rows() > 0 && vectors[(best, j)] < 0.0 {
            for i in 0..vectors.rows() {
                vectors[(i, j)] = -vectors[(i, j)];
            }
        }
    }
    EigenDecomposition { values, vectors }
}

/// Householder reduction to tridiagonal form (EISPACK `tred2`).
///
/// On return `a` holds the accumulated orthogonal transform when
/// `accumulate` is set. Returns the diagonal and the subdiagonal, the
/// latter stored in `e[1..]`.
fn tridiagonalize(a: &mut DenseMatrix, accumulate: bool) -> (Vec<f64>, Vec<f64>) {
    let n = a.rows();
    let mut d: Vec<f64> = (0..n).map(|j| a[(n - 1, j)]).collect();
    let mut e = vec![0.0; n];

    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = a[(i - 1, j)];
                a[(i, j)] = 0.0;
                a[(j, i)] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for j in 0..i {
                e[j] = 0.0;
            }
            for j in 0..i {
                f = d[j];
                a[(j, i)] = f;
                g = e[j] + a[(j, j)] * f;
                for k in (j + 1)..i {
                    g += a[(k, j)] * d[k];
                    e[k] += a[(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    a[(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = a[(i - 1, j)];
                a[(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    for i in 0..n.saturating_sub(1) {
        a[(n - 1, i)] = a[(i, i)];
        if !accumulate {
            continue;
        }
        a[(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = a[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += a[(k, i + 1)] * a[(k, j)];
                }
                for k in 0..=i {
                    a[(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            a[(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = a[(n - 1, j)];
        a[(n - 1, j)] = 0.0;
    }
    if n > 0 {
        a[(n - 1, n - 1)] = 1.0;
        e[0] = 0.0;
    }
    if !accumulate {
        *a = DenseMatrix::zeros(0, 0);
    }
    (d, e)
}

/// Implicit-shift QL on a symmetric tridiagonal matrix (EISPACK `tql2`).
///
/// `d` is the diagonal, `e[1..]` the subdiagonal. When `vectors` is given the
/// rotations are applied to its columns. Eigenvalues are left unsorted in `d`.
fn tql(d: &mut [f64], e: &mut [f64], mut vectors: Option<&mut DenseMatrix>) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_ITERATIONS {
                    return Err(Error::numerical(format!(
                        "QL iteration did not converge for eigenvalue {l}"
                    )));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(v) = vectors.as_deref_mut() {
                        for k in 0..v.rows() {
                            let vh = v[(k, i + 1)];
                            v[(k, i + 1)] = s * v[(k, i)] + c * vh;
                            v[(k, i)] = c * v[(k, i)] - s * vh;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Eigen-decomposition of the symmetric tridiagonal matrix with diagonal
/// `alpha` and off-diagonal `beta`; values ascending.
fn tridiagonal_eigh(alpha: &[f64], beta: &[f64]) -> Result<EigenDecomposition> {
    let m = alpha.len();
    let mut d = alpha.to_vec();
    let mut e = vec![0.0; m];
    e[1..m].copy_from_slice(&beta[..(m - 1)]);
    let mut v = DenseMatrix::identity(m);
    tql(&mut d, &mut e, Some(&mut v))?;
    Ok(sorted_decomposition(d, &v))
}

/// Sparse Laplacian operator `x -> (D - W) x`.
struct LaplacianOperator {
    degree: Vec<f64>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl LaplacianOperator {
    fn new(g: &Graph) -> Self {
        let n = g.n();
        let mut degree = vec![0.0; n];
        let mut adjacency = vec![Vec::new(); n];
        for &(i, j, w) in g.edges() {
            degree[i] += w;
            degree[j] += w;
            adjacency[i].push((j, w));
            adjacency[j].push((i, w));
        }
        LaplacianOperator { degree, adjacency }
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = self.degree[i] * x[i];
            for &(j, w) in &self.adjacency[i] {
                acc -= w * x[j];
            }
            *yi = acc;
        }
    }

    /// Maximum absolute row sum, `2 * max degree` for a Laplacian.
    fn norm_1(&self) -> f64 {
        self.degree.iter().fold(0.0, |m, &d| m.max(2.0 * d))
    }
}

/// The `d` largest Laplacian eigenvalues of `g`, descending.
pub fn eigvals_topk(g: &Graph, d: usize) -> Result<Vec<f64>> {
    let n = g.n();
    if d == 0 || d > n {
        return Err(Error::validation(format!(
            "top-d requested with d = {d} on a graph with {n} nodes"
        )));
    }
    if n <= DENSE_FALLBACK_MAX_N {
        return dense_top(g, d);
    }
    let op = LaplacianOperator::new(g);
    match lanczos_top(&op, n, d)? {
        Some(values) => Ok(values),
        None => {
            log::warn!("Lanczos did not converge for n = {n}, d = {d}; using dense solver");
            dense_top(g, d)
        }
    }
}

/// Laplacian spectrum of `g`, ascending, assembled per connected component.
/// Each component contributes exactly one zero eigenvalue, so isolated
/// nodes yield exact zeros.
pub fn laplacian_spectrum(g: &Graph) -> Result<Vec<f64>> {
    let l = g.laplacian();
    let mut values = Vec::with_capacity(g.n());
    for comp in g.components() {
        if comp.len() == 1 {
            values.push(0.0);
            continue;
        }
        let mut v = eigvalsh_full(&l.select(&comp))?;
        v[0] = 0.0;
        values.extend(v);
    }
    values.sort_by(f64::total_cmp);
    Ok(values)
}

fn dense_top(g: &Graph, d: usize) -> Result<Vec<f64>> {
    let mut values = laplacian_spectrum(g)?;
    values.reverse();
    values.truncate(d);
    Ok(values)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Two passes of classical Gram-Schmidt against every vector in `bases`.
fn orthogonalize(w: &mut [f64], bases: &[&[Vec<f64>]]) {
    for _ in 0..2 {
        for basis in bases {
            for q in basis.iter() {
                let c = dot(q, w);
                axpy(-c, q, w);
            }
        }
    }
}

fn random_unit(n: usize, rng: &mut ChaCha8Rng, bases: &[&[Vec<f64>]]) -> Option<Vec<f64>> {
    for _ in 0..4 {
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        orthogonalize(&mut v, bases);
        let nv = norm(&v);
        if nv > 1e-8 {
            v.iter_mut().for_each(|x| *x /= nv);
            return Some(v);
        }
    }
    None
}

/// Lanczos with full reorthogonalization and locking.
///
/// Each pass builds a Krylov basis deflated against the locked eigenvectors,
/// locks the leading run of converged Ritz pairs, and restarts from the
/// remaining wanted Ritz vectors. A pass whose leading converged Ritz value
/// does not exceed the current `d`-th locked value confirms that no copy of
/// a repeated eigenvalue was skipped. Returns `None` if that confirmation is
/// not reached within the restart budget.
fn lanczos_top(op: &LaplacianOperator, n: usize, d: usize) -> Result<Option<Vec<f64>>> {
    let scale = op.norm_1().max(f64::MIN_POSITIVE);
    let tol = RESIDUAL_TOL * scale;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 ^ n as u64);

    let mut locked_vals: Vec<f64> = Vec::new();
    let mut locked_vecs: Vec<Vec<f64>> = Vec::new();
    let mut start: Option<Vec<f64>> = None;

    for _ in 0..=MAX_RESTARTS {
        let avail = n - locked_vecs.len();
        if avail == 0 {
            break;
        }
        let need = d.saturating_sub(locked_vecs.len()).max(1);
        let m = avail.min(2 * need + 16);

        let first = match start.take() {
            Some(mut v) => {
                orthogonalize(&mut v, &[&locked_vecs]);
                let nv = norm(&v);
                if nv > 1e-8 {
                    v.iter_mut().for_each(|x| *x /= nv);
                    Some(v)
                } else {
                    None
                }
            }
            None => None,
        };
        let first = match first.or_else(|| random_unit(n, &mut rng, &[&locked_vecs])) {
            Some(v) => v,
            None => break,
        };

        let mut basis: Vec<Vec<f64>> = vec![first];
        let mut alpha = Vec::with_capacity(m);
        let mut beta = Vec::with_capacity(m);
        let mut w = vec![0.0; n];
        let mut last_beta = 0.0;
        for j in 0..m {
            op.apply(&basis[j], &mut w);
            let a = dot(&basis[j], &w);
            alpha.push(a);
            orthogonalize(&mut w, &[&locked_vecs, &basis]);
            let b = norm(&w);
            if j + 1 == m {
                last_beta = b;
                break;
            }
            if b <= 1e-10 * scale {
                // Invariant subspace reached; continue from a fresh direction.
                beta.push(0.0);
                match random_unit(n, &mut rng, &[&locked_vecs, &basis]) {
                    Some(v) => basis.push(v),
                    None => {
                        last_beta = 0.0;
                        break;
                    }
                }
            } else {
                beta.push(b);
                basis.push(w.iter().map(|x| x / b).collect());
            }
        }
        let k = alpha.len();
        let ritz = tridiagonal_eigh(&alpha, &beta[..k - 1])?;
        // Descending order of Ritz pairs.
        let order: Vec<usize> = (0..k).rev().collect();
        let residual = |idx: usize| (last_beta * ritz.vectors[(k - 1, idx)]).abs();
        let ritz_vector = |idx: usize| {
            let mut y = vec![0.0; n];
            for (row, q) in basis.iter().enumerate() {
                axpy(ritz.vectors[(row, idx)], q, &mut y);
            }
            y
        };

        if locked_vals.len() >= d {
            let mut top = locked_vals.clone();
            top.sort_by(|a, b| b.total_cmp(a));
            let kth = top[d - 1];
            let lead = order[0];
            if residual(lead) < tol && ritz.values[lead] <= kth + tol {
                top.truncate(d);
                return Ok(Some(top));
            }
        }

        let mut converged = 0;
        for &idx in &order {
            if residual(idx) >= tol {
                break;
            }
            locked_vals.push(ritz.values[idx]);
            locked_vecs.push(ritz_vector(idx));
            converged += 1;
        }
        if locked_vecs.len() == n {
            let mut top = locked_vals;
            top.sort_by(|a, b| b.total_cmp(a));
            top.truncate(d);
            return Ok(Some(top));
        }
        let wanted = d.saturating_sub(locked_vals.len()).max(1);
        let mut next = vec![0.0; n];
        for &idx in order.iter().skip(converged).take(wanted) {
            axpy(1.0, &ritz_vector(idx), &mut next);
        }
        start = Some(next);
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synthetic::erdos_renyi;

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len(), "{a:?} vs {b:?}");
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn diagonal_matrix() {
        let m = SymmetricMatrix::from_diagonal(&[3.0, 1.0, 2.0]);
        assert_close(&eigvalsh_full(&m).unwrap(), &[1.0, 2.0, 3.0], 1e-14);
    }

    #[test]
    fn path_and_complete() {
        assert_close(
            &eigvalsh_full(&Graph::path(3).laplacian()).unwrap(),
            &[0.0, 1.0, 3.0],
            1e-12,
        );
        assert_close(
            &eigvalsh_full(&Graph::complete(4).laplacian()).unwrap(),
            &[0.0, 4.0, 4.0, 4.0],
            1e-12,
        );
    }

    #[test]
    fn empty_and_tiny() {
        assert!(eigvalsh_full(&SymmetricMatrix::zeros(0)).unwrap().is_empty());
        assert_close(
            &eigvalsh_full(&SymmetricMatrix::from_diagonal(&[-2.5])).unwrap(),
            &[-2.5],
            0.0,
        );
    }

    #[test]
    fn non_finite_rejected() {
        let m = SymmetricMatrix::from_diagonal(&[1.0, f64::NAN]);
        assert!(matches!(eigvalsh_full(&m), Err(Error::Numerical(_))));
        assert!(matches!(eigh_full(&m), Err(Error::Numerical(_))));
    }

    #[test]
    fn identity_vectors_orthonormal() {
        let dec = eigh_full(&SymmetricMatrix::identity(3)).unwrap();
        assert_close(&dec.values, &[1.0, 1.0, 1.0], 1e-15);
        let qtq = dec.vectors.transpose().matmul(&dec.vectors);
        assert!(qtq.sub(&DenseMatrix::identity(3)).max_abs() < 1e-12);
    }

    #[test]
    fn k2_vectors() {
        let dec = eigh_full(&Graph::complete(2).laplacian()).unwrap();
        assert_close(&dec.values, &[0.0, 2.0], 1e-14);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_close(&dec.vectors.column(0), &[s, s], 1e-12);
        let v1 = dec.vectors.column(1);
        assert!((v1[0].abs() - s).abs() < 1e-12 && (v1[0] + v1[1]).abs() < 1e-12);
    }

    #[test]
    fn random_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [1usize, 2, 4, 9, 30] {
            let m = SymmetricMatrix::from_upper_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let dec = eigh_full(&m).unwrap();
            assert!(dec.values.windows(2).all(|w| w[0] <= w[1]));
            assert!(dec.reconstruct().sub(&m.to_dense()).max_abs() < 1e-8);
            let qtq = dec.vectors.transpose().matmul(&dec.vectors);
            assert!(qtq.sub(&DenseMatrix::identity(n)).max_abs() < 1e-8);
            assert_close(&eigvalsh_full(&m).unwrap(), &dec.values, 1e-10);
            let mq = m.to_dense().matmul(&dec.vectors);
            let ql = dec.vectors.scale_columns(&dec.values);
            assert!(mq.sub(&ql).max_abs() < 1e-7 * m.norm_1().max(1.0));
        }
    }

    #[test]
    fn sign_convention() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = SymmetricMatrix::from_upper_fn(6, |_, _| rng.gen_range(-1.0..1.0));
        let dec = eigh_full(&m).unwrap();
        for j in 0..6 {
            let col = dec.vectors.column(j);
            let big = col.iter().fold(0.0f64, |acc, v| if v.abs() > acc.abs() { *v } else { acc });
            assert!(big > 0.0);
        }
    }

    #[test]
    fn topk_small_examples() {
        assert_close(&eigvals_topk(&Graph::path(3), 3).unwrap(), &[3.0, 1.0, 0.0], 1e-12);
        assert_close(&eigvals_topk(&Graph::complete(4), 1).unwrap(), &[4.0], 1e-12);
        assert!(matches!(eigvals_topk(&Graph::path(3), 0), Err(Error::Validation(_))));
        assert!(matches!(eigvals_topk(&Graph::path(3), 4), Err(Error::Validation(_))));
    }

    #[test]
    fn lanczos_matches_dense_on_sparse_graph() {
        let g = erdos_renyi(300, 0.03, 7).unwrap();
        let mut dense = eigvalsh_full(&g.laplacian()).unwrap();
        dense.reverse();
        for d in [1usize, 10, 40] {
            let top = eigvals_topk(&g, d).unwrap();
            assert_close(&top, &dense[..d], 1e-7);
        }
    }

    #[test]
    fn lanczos_finds_repeated_eigenvalues() {
        // Four disjoint copies of K5 plus a sparse tail: eigenvalue 5 has
        // multiplicity 16, which a single Krylov space cannot resolve.
        let mut edges = Vec::new();
        for c in 0..4 {
            for i in 0..5 {
                for j in (i + 1)..5 {
                    edges.push((5 * c + i, 5 * c + j, 1.0));
                }
            }
        }
        for i in 20..199 {
            edges.push((i, i + 1, 1.0));
        }
        let g = Graph::new(200, &edges).unwrap();
        let mut dense = eigvalsh_full(&g.laplacian()).unwrap();
        dense.reverse();
        let top = eigvals_topk(&g, 20).unwrap();
        assert_close(&top, &dense[..20], 1e-7);
    }

    #[test]
    fn componentwise_spectrum_matches_whole_matrix() {
        let g = Graph::new(9, &[(0, 1, 1.0), (1, 2, 0.5), (4, 5, 1.0), (5, 6, 1.0), (6, 4, 0.3)]).unwrap();
        let whole = eigvalsh_full(&g.laplacian()).unwrap();
        let parts = laplacian_spectrum(&g).unwrap();
        assert_close(&parts, &whole, 1e-12);
        assert_eq!(parts.iter().filter(|&&v| v == 0.0).count(), g.connected_components());
        let padded = laplacian_spectrum(&g.pad_isolated(3)).unwrap();
        assert_eq!(&padded[3..], &parts[..]);
    }

    #[test]
    fn lanczos_full_spectrum_request() {
        let g = erdos_renyi(150, 0.05, 21).unwrap();
        let mut dense = eigvalsh_full(&g.laplacian()).unwrap();
        dense.reverse();
        assert_close(&eigvals_topk(&g, 150).unwrap(), &dense, 1e-7);
    }
}
