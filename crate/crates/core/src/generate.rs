//! Seeded synthetic graph generators used by the experiment harness and the
//! test-suite.

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{Clustering, Graph};
use crate::mechanisms::RandomSource;

/// Planted-partition graph: `n` nodes in `blocks` near-equal contiguous
/// blocks; every intra-block pair is an edge with probability `p_in`, every
/// inter-block pair with probability `p_out`. Returns the graph and the
/// planted ground-truth clustering.
pub fn planted_partition(
    n: usize,
    blocks: usize,
    p_in: f64,
    p_out: f64,
    rng: &mut RandomSource,
) -> Result<(Graph, Clustering)> {
    if blocks == 0 || blocks > n {
        return Err(Error::InvalidParameter(format!(
            "blocks must lie in 1..=n, got {blocks} for n={n}"
        )));
    }
    for (name, p) in [("p_in", p_in), ("p_out", p_out)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!(
                "{name} must lie in [0,1], got {p}"
            )));
        }
    }
    let label = |u: usize| u * blocks / n;
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let p = if label(u) == label(v) { p_in } else { p_out };
            if p > 0.0 && rng.gen::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    let g = Graph::from_simple_edges(n, edges)?;
    let truth = Clustering::from_labels((0..n).map(label));
    Ok((g, truth))
}

/// Uniform random simple graph with exactly `m` distinct edges, by rejection
/// sampling of node pairs. Requires density at most one half so rejection
/// stays cheap.
pub fn gnm(n: usize, m: usize, rng: &mut RandomSource) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "gnm needs at least two nodes, got {n}"
        )));
    }
    let max_pairs = n as u64 * (n as u64 - 1) / 2;
    if m as u64 > max_pairs / 2 {
        return Err(Error::InvalidParameter(format!(
            "gnm with m={m} exceeds half of the {max_pairs} possible pairs"
        )));
    }
    let mut chosen = std::collections::HashSet::with_capacity(m);
    let mut edges = Vec::with_capacity(m);
    while edges.len() < m {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a == b {
            continue;
        }
        let key = (a.min(b), a.max(b));
        if chosen.insert(key) {
            edges.push(key);
        }
    }
    Graph::from_simple_edges(n, edges)
}
