use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::SymmetricMatrix;

/// G(n, p) random graph with unit weights; each unordered pair is drawn
/// independently, in row-major order of the upper triangle.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if n == 0 {
        return Err(Error::validation("Erdos-Renyi graph needs at least one node"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::validation(format!("edge probability {p} outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = SymmetricMatrix::zeros(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen::<f64>() < p {
                w.set_sym(i, j, 1.0);
            }
        }
    }
    Graph::from_weights(w)
}
