//! Edge and node perturbations of a graph.
//!
//! A [`Perturbation`] is a signed symmetric matrix `P` added to the padded
//! adjacency `W̄` of a source graph, followed by a node relabelling `Π`:
//! the perturbed graph has adjacency `Πᵀ (W̄ + P) Π`.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Graph, Permutation};
use crate::matrix::SymmetricMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct Perturbation {
    delta: SymmetricMatrix,
    alignment: Permutation,
}

impl Perturbation {
    pub fn new(delta: SymmetricMatrix, alignment: Permutation) -> Result<Self> {
        if delta.n() != alignment.len() {
            return Err(Error::validation(format!(
                "perturbation of size {} with alignment of size {}",
                delta.n(),
                alignment.len()
            )));
        }
        if (0..delta.n()).any(|i| delta.get(i, i) != 0.0) {
            return Err(Error::validation("perturbation must have a zero diagonal"));
        }
        Ok(Perturbation { delta, alignment })
    }

    pub fn zero(n: usize) -> Self {
        Perturbation {
            delta: SymmetricMatrix::zeros(n),
            alignment: Permutation::identity(n),
        }
    }

    /// Identity alignment with `±w` entries at the given pairs.
    pub fn from_entries(n: usize, entries: &[(usize, usize, f64)]) -> Result<Self> {
        let mut delta = SymmetricMatrix::zeros(n);
        for &(i, j, v) in entries {
            if i >= n || j >= n || i == j {
                return Err(Error::validation(format!("invalid perturbation entry ({i},{j})")));
            }
            delta.set_sym(i, j, v);
        }
        Ok(Perturbation {
            delta,
            alignment: Permutation::identity(n),
        })
    }

    pub fn with_alignment(self, alignment: Permutation) -> Result<Self> {
        Self::new(self.delta, alignment)
    }

    pub fn n(&self) -> usize {
        self.delta.n()
    }

    pub fn delta(&self) -> &SymmetricMatrix {
        &self.delta
    }

    pub fn alignment(&self) -> &Permutation {
        &self.alignment
    }

    /// Number of perturbed unordered pairs.
    pub fn support(&self) -> usize {
        let n = self.n();
        (0..n)
            .map(|i| ((i + 1)..n).filter(|&j| self.delta.get(i, j) != 0.0).count())
            .sum()
    }

    /// `L_P = diag(P 1) - P`. Indefinite in general.
    pub fn laplacian(&self) -> SymmetricMatrix {
        let n = self.n();
        let sums = self.delta.row_sums();
        SymmetricMatrix::from_upper_fn(n, |i, j| {
            if i == j {
                sums[i]
            } else {
                -self.delta.get(i, j)
            }
        })
    }

    /// Pads `g` to this perturbation's size, adds the delta and relabels.
    pub fn apply(&self, g: &Graph) -> Result<Graph> {
        let n = self.n();
        if n < g.n() {
            return Err(Error::validation(format!(
                "perturbation of size {n} smaller than graph with {} nodes",
                g.n()
            )));
        }
        let padded = g.pad_isolated(n - g.n());
        let sum = padded.weights().add(&self.delta)?;
        let perturbed = Graph::from_weights(sum)?;
        perturbed.permute(&self.alignment)
    }
}

/// Flips `k_add` uniformly chosen non-adjacent pairs to unit edges and
/// removes `k_remove` uniformly chosen unit-weight edges. Identity alignment.
pub fn random_edge_perturbation(
    g: &Graph,
    k_add: usize,
    k_remove: usize,
    seed: u64,
) -> Result<Perturbation> {
    let n = g.n();
    let mut non_edges = Vec::new();
    let mut unit_edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let w = g.weight(i, j);
            if w == 0.0 {
                non_edges.push((i, j));
            } else if w == 1.0 {
                unit_edges.push((i, j));
            }
        }
    }
    if k_add > non_edges.len() {
        return Err(Error::capacity(format!(
            "cannot add {k_add} edges: only {} non-adjacent pairs",
            non_edges.len()
        )));
    }
    if k_remove > unit_edges.len() {
        return Err(Error::capacity(format!(
            "cannot remove {k_remove} edges: only {} unit-weight edges",
            unit_edges.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut delta = SymmetricMatrix::zeros(n);
    for idx in sample(&mut rng, non_edges.len(), k_add).into_iter() {
        let (i, j) = non_edges[idx];
        delta.set_sym(i, j, 1.0);
    }
    for idx in sample(&mut rng, unit_edges.len(), k_remove).into_iter() {
        let (i, j) = unit_edges[idx];
        delta.set_sym(i, j, -1.0);
    }
    Ok(Perturbation {
        delta,
        alignment: Permutation::identity(n),
    })
}

/// Appends `count` nodes one at a time; each new node gets `connectivity`
/// unit edges to distinct nodes drawn uniformly from all current nodes,
/// earlier additions included.
///
/// Returns the grown graph and the perturbation that produces it from
/// `g.pad_isolated(count)`.
pub fn add_random_nodes(
    g: &Graph,
    count: usize,
    connectivity: usize,
    seed: u64,
) -> Result<(Graph, Perturbation)> {
    let n0 = g.n();
    if connectivity > n0 {
        return Err(Error::capacity(format!(
            "connectivity {connectivity} exceeds the {n0} available nodes"
        )));
    }
    let total = n0 + count;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut delta = SymmetricMatrix::zeros(total);
    for new in n0..total {
        for target in sample(&mut rng, new, connectivity).into_iter() {
            delta.set_sym(new, target, 1.0);
        }
    }
    let pert = Perturbation {
        delta,
        alignment: Permutation::identity(total),
    };
    let grown = pert.apply(g)?;
    Ok((grown, pert))
}

/// A random perturbation mixing node additions, edge flips and a random
/// relabelling, used by the bound sweeps.
pub fn random_mixed_perturbation<R: Rng + ?Sized>(
    g: &Graph,
    extra_nodes: usize,
    flips: usize,
    rng: &mut R,
) -> Perturbation {
    let n = g.n() + extra_nodes;
    let padded = g.pad_isolated(extra_nodes);
    let pairs = n * n.saturating_sub(1) / 2;
    let mut delta = SymmetricMatrix::zeros(n);
    if pairs > 0 {
        for idx in sample(rng, pairs, flips.min(pairs)).into_iter() {
            let (i, j) = pair_from_index(idx, n);
            let w = padded.weight(i, j);
            // Unweighted flips; partial weights are moved to a random level.
            let v = if w == 0.0 {
                1.0
            } else if w == 1.0 {
                -1.0
            } else {
                rng.gen_range(0.0..=1.0) - w
            };
            delta.set_sym(i, j, v);
        }
    }
    Perturbation {
        delta,
        alignment: Permutation::random(n, rng),
    }
}

/// Maps a linear index over the upper triangle to `(i, j)`, `i < j`.
fn pair_from_index(mut idx: usize, n: usize) -> (usize, usize) {
    for i in 0..n {
        let row = n - i - 1;
        if idx < row {
            return (i, i + 1 + idx);
        }
        idx -= row;
    }
    unreachable!("pair index out of range")
}
