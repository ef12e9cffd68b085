//! Undirected weighted graphs and their Laplacians.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::SymmetricMatrix;

/// Undirected graph with symmetric weights in `[0, 1]` and zero diagonal.
///
/// Weights are stored densely; the upper-triangle edge list is kept next to
/// them for the sparse eigensolver path.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    weights: SymmetricMatrix,
    edges: Vec<(usize, usize, f64)>,
    label: Option<i64>,
    id: Option<usize>,
}

impl Graph {
    /// Builds a graph on `n` nodes from `(i, j, weight)` triples.
    ///
    /// `(i, j)` and `(j, i)` declare the same undirected edge; repeated
    /// declarations must agree on the weight.
    pub fn new(n: usize, edges: &[(usize, usize, f64)]) -> Result<Graph> {
        let mut seen: HashMap<(usize, usize), f64> = HashMap::with_capacity(edges.len());
        for &(i, j, w) in edges {
            if i >= n || j >= n {
                return Err(Error::validation(format!(
                    "edge ({i},{j}) out of range for {n} nodes"
                )));
            }
            if i == j {
                return Err(Error::validation(format!("self-loop at node {i}")));
            }
            if !(w > 0.0 && w <= 1.0) {
                return Err(Error::validation(format!(
                    "edge ({i},{j}) weight {w} outside (0, 1]"
                )));
            }
            let key = (i.min(j), i.max(j));
            match seen.get(&key) {
                Some(&prev) if prev != w => {
                    return Err(Error::validation(format!(
                        "conflicting weights {prev} and {w} for edge ({},{})",
                        key.0, key.1
                    )));
                }
                _ => {
                    seen.insert(key, w);
                }
            }
        }
        let mut weights = SymmetricMatrix::zeros(n);
        for (&(i, j), &w) in &seen {
            weights.set_sym(i, j, w);
        }
        Ok(Self::from_weights_unchecked(weights))
    }

    /// Builds a graph from a weight matrix, checking the graph invariants.
    pub fn from_weights(weights: SymmetricMatrix) -> Result<Graph> {
        let n = weights.n();
        for i in 0..n {
            if weights.get(i, i) != 0.0 {
                return Err(Error::validation(format!("nonzero diagonal at node {i}")));
            }
            for j in (i + 1)..n {
                let w = weights.get(i, j);
                if !(0.0..=1.0).contains(&w) {
                    return Err(Error::validation(format!(
                        "weight {w} at ({i},{j}) outside [0, 1]"
                    )));
                }
            }
        }
        Ok(Self::from_weights_unchecked(weights))
    }

    fn from_weights_unchecked(weights: SymmetricMatrix) -> Graph {
        let n = weights.n();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let w = weights.get(i, j);
                if w != 0.0 {
                    edges.push((i, j, w));
                }
            }
        }
        Graph {
            weights,
            edges,
            label: None,
            id: None,
        }
    }

    pub fn empty(n: usize) -> Graph {
        Self::from_weights_unchecked(SymmetricMatrix::zeros(n))
    }

    pub fn complete(n: usize) -> Graph {
        Self::from_weights_unchecked(SymmetricMatrix::from_upper_fn(n, |i, j| {
            if i == j {
                0.0
            } else {
                1.0
            }
        }))
    }

    /// Path `0 - 1 - ... - (n-1)` with unit weights.
    pub fn path(n: usize) -> Graph {
        Self::from_weights_unchecked(SymmetricMatrix::from_upper_fn(n, |i, j| {
            if j == i + 1 {
                1.0
            } else {
                0.0
            }
        }))
    }

    pub fn with_label(mut self, label: i64) -> Graph {
        self.label = Some(label);
        self
    }

    pub fn with_id(mut self, id: usize) -> Graph {
        self.id = Some(id);
        self
    }

    pub fn n(&self) -> usize {
        self.weights.n()
    }

    pub fn label(&self) -> Option<i64> {
        self.label
    }

    pub fn id(&self) -> Option<usize> {
        self.id
    }

    pub fn weights(&self) -> &SymmetricMatrix {
        &self.weights
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights.get(i, j)
    }

    /// Upper-triangle edges `(i, j, w)` with `i < j`, in row-major order.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.2).sum()
    }

    pub fn degrees(&self) -> Vec<f64> {
        self.weights.row_sums()
    }

    pub fn max_degree(&self) -> f64 {
        self.degrees().into_iter().fold(0.0, f64::max)
    }

    /// `L = D - W`.
    pub fn laplacian(&self) -> SymmetricMatrix {
        let n = self.n();
        let deg = self.degrees();
        let mut l = SymmetricMatrix::zeros(n);
        for &(i, j, w) in &self.edges {
            l.set_sym(i, j, -w);
        }
        for (i, d) in deg.into_iter().enumerate() {
            l.set_sym(i, i, d);
        }
        l
    }

    /// Relabels nodes so that `result.weight(p(i), p(j)) == self.weight(i, j)`.
    pub fn permute(&self, p: &Permutation) -> Result<Graph> {
        if p.len() != self.n() {
            return Err(Error::validation(format!(
                "permutation of size {} applied to graph with {} nodes",
                p.len(),
                self.n()
            )));
        }
        let mut g = Self::from_weights_unchecked(p.conjugate(&self.weights));
        g.label = self.label;
        g.id = self.id;
        Ok(g)
    }

    /// Appends `m` isolated nodes after the existing ones.
    pub fn pad_isolated(&self, m: usize) -> Graph {
        if m == 0 {
            return self.clone();
        }
        let n = self.n();
        let mut weights = SymmetricMatrix::zeros(n + m);
        for &(i, j, w) in &self.edges {
            weights.set_sym(i, j, w);
        }
        Graph {
            weights,
            edges: self.edges.clone(),
            label: self.label,
            id: self.id,
        }
    }

    /// Subgraph induced by the first `k` nodes.
    pub fn induced_prefix(&self, k: usize) -> Graph {
        assert!(k <= self.n(), "prefix {k} larger than graph");
        let idx: Vec<usize> = (0..k).collect();
        let mut g = Self::from_weights_unchecked(self.weights.select(&idx));
        g.label = self.label;
        g.id = self.id;
        g
    }

    /// Number of connected components (edges of any positive weight count).
    pub fn connected_components(&self) -> usize {
        self.components().len()
    }

    /// Node sets of the connected components, each ascending, ordered by
    /// their smallest node.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for &(i, j, _) in &self.edges {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut slot = vec![usize::MAX; n];
        let mut out: Vec<Vec<usize>> = Vec::new();
        for v in 0..n {
            let r = find(&mut parent, v);
            if slot[r] == usize::MAX {
                slot[r] = out.len();
                out.push(Vec::new());
            }
            out[slot[r]].push(v);
        }
        out
    }
}

/// Bijection on `{0, .., n-1}`.
///
/// As a matrix `Π` with `Π[i][p(i)] = 1`, [`Permutation::conjugate`] computes
/// `Πᵀ A Π`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation {
            map: (0..n).collect(),
        }
    }

    pub fn new(map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &v in &map {
            if v >= n || seen[v] {
                return Err(Error::validation(format!(
                    "not a permutation of 0..{n}: {map:?}"
                )));
            }
            seen[v] = true;
        }
        Ok(Permutation { map })
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut map: Vec<usize> = (0..n).collect();
        map.shuffle(rng);
        Permutation { map }
    }

    pub fn reversal(n: usize) -> Self {
        Permutation {
            map: (0..n).rev().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &v)| i == v)
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.map.len()];
        for (i, &v) in self.map.iter().enumerate() {
            inv[v] = i;
        }
        Permutation { map: inv }
    }

    /// `Πᵀ A Π`, i.e. `out[p(i)][p(j)] = a[i][j]`.
    pub fn conjugate(&self, a: &SymmetricMatrix) -> SymmetricMatrix {
        assert_eq!(a.n(), self.len(), "permutation size mismatch");
        let inv = self.inverse();
        SymmetricMatrix::from_upper_fn(a.n(), |k, l| a.get(inv.map[k], inv.map[l]))
    }
}
