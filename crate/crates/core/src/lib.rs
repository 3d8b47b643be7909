//! Community detection on undirected graphs under edge differential
//! privacy.
//!
//! The crate provides exact (non-private) Louvain modularity optimization
//! as the baseline, four private detection schemes built from shared noise
//! primitives, and the metrics to judge them:
//!
//! - [`louvain`](louvain::louvain) — exact agglomerative modularity
//!   optimization; also the downstream clusterer for every released graph.
//! - [`louvain_dp`](louvain_dp::louvain_dp) — collapse the graph onto
//!   random fixed-size node blocks, release the block-level edge counts
//!   through a geometric-noise high-pass filter, cluster the release.
//! - [`edge_flip_detect`](edge_flip::edge_flip_detect) — flip adjacency
//!   cells with calibrated probability and shrink the result back to the
//!   input's edge count, in time linear in the edges.
//! - [`mod_divisive`](mod_divisive::mod_divisive) — split node sets top-down
//!   with Metropolis chains targeting the exponential mechanism on
//!   modularity, then pick the best tree antichain under noisy scores.
//! - [`hrg_fixed`](hrg::hrg_fixed) — fit a fixed-shape hierarchical
//!   random-graph model by a private chain over leaf permutations and
//!   cluster a graph sampled from it.
//!
//! Everything randomized draws from a seeded [`RandomSource`], so runs
//! reproduce exactly, including across thread-parallel sections.

pub mod edge_flip;
pub mod error;
pub mod generate;
pub mod graph;
pub mod hrg;
pub mod louvain;
pub mod louvain_dp;
pub mod mechanisms;
pub mod metrics;
pub mod mod_divisive;

pub use error::{Error, Result};
pub use graph::{Clustering, Graph};
pub use mechanisms::RandomSource;

/// What a private detection scheme returns: the clustering, the privacy
/// budget the run consumed, and flags recording any degenerate paths taken
/// (clamped noisy counts, exhausted sampling pools, empty releases, oracle
/// mode). An empty flag list is the normal case.
#[derive(Debug, Clone)]
pub struct DetectionOutput {
    pub clustering: graph::Clustering,
    pub budget_spent: f64,
    pub flags: Vec<String>,
}
