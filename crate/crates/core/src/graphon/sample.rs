//! `W`-random graphs `G(n, W)`.
//!
//! Every random draw comes from its own ChaCha8 stream keyed by the vertex
//! or edge index, so the sample depends only on the seed and not on the
//! order (or thread) in which draws are made.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::graph::SimpleGraph;
use super::StepGraphon;
use crate::error::{Error, Result};
use crate::rational::to_f64;

const EDGE_STREAMS: u64 = 1 << 63;

fn uniform(seed: u64, stream: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.random::<f64>()
}

/// Draws block labels for `n` points from the block measures, then keeps
/// each pair `ij` independently with probability `W(x_i, x_j)`.
pub fn sample_random_graph(n: usize, w: &StepGraphon, seed: u64) -> Result<SimpleGraph> {
    if n == 0 {
        return Err(Error::Invalid("sample size must be at least 1".into()));
    }
    let mut cumulative = Vec::with_capacity(w.blocks());
    let mut acc = 0.0;
    for m in w.measures() {
        acc += to_f64(m);
        cumulative.push(acc);
    }
    let last = w.blocks() - 1;
    let labels: Vec<usize> = (0..n as u64)
        .into_par_iter()
        .map(|v| {
            let u = uniform(seed, v);
            cumulative.iter().position(|&c| u < c).unwrap_or(last)
        })
        .collect();
    let probs: Vec<Vec<f64>> = w
        .values()
        .iter()
        .map(|r| r.iter().map(to_f64).collect())
        .collect();
    let edges: Vec<(usize, usize)> = (1..n)
        .into_par_iter()
        .flat_map_iter(|j| {
            let (labels, probs) = (&labels, &probs);
            (0..j).filter_map(move |i| {
                let index = (j * (j - 1) / 2 + i) as u64;
                let p = probs[labels[i]][labels[j]];
                (uniform(seed, EDGE_STREAMS | index) < p).then_some((i, j))
            })
        })
        .collect();
    SimpleGraph::new(n, edges)
}
