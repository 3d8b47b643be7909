//! Private community detection through a hierarchical random-graph model
//! with a fixed balanced dendrogram: a Metropolis chain over leaf
//! permutations samples the model from the exponential mechanism on its
//! log-likelihood, one graph is drawn from the sampled model, and exact
//! Louvain clusters that sample.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::graph::{random_permutation, Clustering, Graph};
use crate::louvain::louvain;
use crate::mechanisms::{mh_accept, RandomSource};
use crate::DetectionOutput;

/// Default chain length multiplier: the chain runs `DEFAULT_BURN_IN * n`
/// leaf-swap steps.
pub const DEFAULT_BURN_IN: usize = 1000;

/// Internal node of the balanced tree: leaf positions `[lo, hi)` split at
/// `mid`. `left`/`right` index further internal nodes, or `usize::MAX` when
/// the side is a single leaf.
#[derive(Debug, Clone)]
struct DNode {
    lo: usize,
    mid: usize,
    hi: usize,
    left: usize,
    right: usize,
}

/// A hierarchical random-graph model with fixed balanced shape: a binary
/// tree over `n` leaf positions, a permutation assigning graph nodes to
/// positions, and per internal node the count of graph edges crossing
/// between its left and right leaf sets.
///
/// Selfloops never cross a split and are ignored; edge multiplicity is one
/// regardless of weight. The cross counts always sum to the number of
/// (non-selfloop) edges.
#[derive(Debug, Clone)]
pub struct Dendrogram {
    n: usize,
    nodes: Vec<DNode>,
    /// Leaf position -> graph node.
    sigma: Vec<usize>,
    /// Graph node -> leaf position.
    pos: Vec<usize>,
    /// Cross-edge count per internal node.
    e: Vec<i64>,
}

/// Likelihood contribution of one internal node with `e` of `pairs` cross
/// pairs present: `e ln p + (pairs - e) ln(1 - p)` at `p = e/pairs`, with
/// `0 ln 0 = 0`. Always <= 0, and exactly 0 when the split predicts its
/// pairs perfectly (p of 0 or 1).
fn node_loglik(e: i64, pairs: u64) -> f64 {
    debug_assert!(e >= 0 && e as u64 <= pairs);
    if e == 0 || e as u64 == pairs {
        return 0.0;
    }
    let p = e as f64 / pairs as f64;
    e as f64 * p.ln() + (pairs - e as u64) as f64 * (1.0 - p).ln()
}

fn build_nodes(nodes: &mut Vec<DNode>, lo: usize, hi: usize) -> usize {
    let idx = nodes.len();
    // Odd ranges put the extra leaf on the left.
    let mid = lo + (hi - lo).div_ceil(2);
    nodes.push(DNode {
        lo,
        mid,
        hi,
        left: usize::MAX,
        right: usize::MAX,
    });
    if mid - lo >= 2 {
        let l = build_nodes(nodes, lo, mid);
        nodes[idx].left = l;
    }
    if hi - mid >= 2 {
        let r = build_nodes(nodes, mid, hi);
        nodes[idx].right = r;
    }
    idx
}

impl Dendrogram {
    /// Balanced dendrogram over `g`'s nodes with the given leaf assignment
    /// (`sigma[p]` = graph node at position `p`); cross counts are computed
    /// from scratch.
    pub fn balanced(g: &Graph, sigma: Vec<usize>) -> Result<Self> {
        let n = g.n();
        if sigma.len() != n {
            return Err(Error::InvalidParameter(format!(
                "permutation length {} does not match n={n}",
                sigma.len()
            )));
        }
        let mut pos = vec![usize::MAX; n];
        for (p, &u) in sigma.iter().enumerate() {
            if u >= n || pos[u] != usize::MAX {
                return Err(Error::InvalidParameter(
                    "not a permutation of the node set".into(),
                ));
            }
            pos[u] = p;
        }
        let mut nodes = Vec::with_capacity(n.saturating_sub(1));
        if n >= 2 {
            build_nodes(&mut nodes, 0, n);
        }
        let mut d = Dendrogram {
            n,
            nodes,
            sigma,
            pos,
            e: Vec::new(),
        };
        d.e = vec![0; d.nodes.len()];
        for (u, v, _) in g.edges() {
            if u != v {
                let r = d.lca(d.pos[u], d.pos[v]);
                d.e[r] += 1;
            }
        }
        Ok(d)
    }

    /// Graph node at each leaf position.
    pub fn leaf_order(&self) -> &[usize] {
        &self.sigma
    }

    /// Lowest node whose range contains both distinct positions.
    fn lca(&self, a: usize, b: usize) -> usize {
        debug_assert!(a != b);
        let (lo, hi) = (a.min(b), a.max(b));
        let mut cur = 0;
        loop {
            let node = &self.nodes[cur];
            if hi < node.mid {
                cur = node.left;
            } else if lo >= node.mid {
                cur = node.right;
            } else {
                return cur;
            }
        }
    }

    fn pairs(&self, i: usize) -> u64 {
        let node = &self.nodes[i];
        ((node.mid - node.lo) * (node.hi - node.mid)) as u64
    }

    /// Model log-likelihood: sum over internal nodes of
    /// `e ln p + (LR - e) ln(1 - p)` with `p = e / (L*R)`.
    pub fn log_likelihood(&self) -> f64 {
        (0..self.nodes.len())
            .map(|i| node_loglik(self.e[i], self.pairs(i)))
            .sum()
    }

    /// Likelihood change and per-node count changes if the leaves at
    /// positions `pa` and `pb` were swapped. The pair between the two
    /// swapped nodes keeps its split, and edges to common neighbors cancel
    /// on their own.
    fn swap_delta(&self, g: &Graph, pa: usize, pb: usize) -> (f64, Vec<(usize, i64)>) {
        let su = self.sigma[pa];
        let sv = self.sigma[pb];
        let mut touched: HashMap<usize, i64> = HashMap::new();
        let mut shift = |d: &Self, from: usize, to: usize, moved: usize, other: usize| {
            for &(w, _) in g.neighbors(moved) {
                if w == moved || w == other {
                    continue;
                }
                let q = d.pos[w];
                *touched.entry(d.lca(from, q)).or_insert(0) -= 1;
                *touched.entry(d.lca(to, q)).or_insert(0) += 1;
            }
        };
        shift(self, pa, pb, su, sv);
        shift(self, pb, pa, sv, su);
        let mut delta = 0.0;
        let changes: Vec<(usize, i64)> = touched
            .into_iter()
            .filter(|&(_, d)| d != 0)
            .collect();
        for &(r, d) in &changes {
            let pairs = self.pairs(r);
            delta += node_loglik(self.e[r] + d, pairs) - node_loglik(self.e[r], pairs);
        }
        (delta, changes)
    }

    /// One Metropolis step at budget `eps`: swap two uniform random leaves,
    /// accepting by the exponential-mechanism rule with the likelihood's
    /// sensitivity `2 ln n`. Returns whether the swap was applied.
    pub fn step(&mut self, g: &Graph, eps: f64, rng: &mut RandomSource) -> Result<bool> {
        if self.n < 2 {
            return Ok(false);
        }
        let pa = rng.gen_range(0..self.n);
        let mut pb = rng.gen_range(0..self.n - 1);
        if pb >= pa {
            pb += 1;
        }
        let (delta, changes) = self.swap_delta(g, pa, pb);
        if !mh_accept(delta, eps, 2.0 * (self.n as f64).ln(), rng)? {
            return Ok(false);
        }
        for (r, d) in changes {
            self.e[r] += d;
        }
        let su = self.sigma[pa];
        let sv = self.sigma[pb];
        self.sigma.swap(pa, pb);
        self.pos[su] = pb;
        self.pos[sv] = pa;
        Ok(true)
    }

    /// Draw one graph from the model: each cross pair of an internal node
    /// appears independently with that node's connection probability.
    /// Expected edge count equals the cross-count total.
    pub fn sample_graph(&self, rng: &mut RandomSource) -> Result<Graph> {
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for i in 0..self.nodes.len() {
            let e = self.e[i];
            if e == 0 {
                continue;
            }
            let pairs = self.pairs(i);
            let count = if e as u64 == pairs {
                pairs
            } else {
                let p = e as f64 / pairs as f64;
                Binomial::new(pairs, p)
                    .map_err(|err| Error::InvalidParameter(err.to_string()))?
                    .sample(rng)
            };
            if count == 0 {
                continue;
            }
            let node = &self.nodes[i];
            if 3 * count >= pairs {
                // Dense draw: enumerate the cross pairs and take a uniform
                // subset instead of rejection-sampling near saturation.
                let mut pool = Vec::with_capacity(pairs as usize);
                for a in node.lo..node.mid {
                    for b in node.mid..node.hi {
                        pool.push((a, b));
                    }
                }
                for idx in rand::seq::index::sample(rng, pool.len(), count as usize) {
                    let (a, b) = pool[idx];
                    edges.push((self.sigma[a], self.sigma[b]));
                }
            } else {
                let mut chosen: std::collections::HashSet<(usize, usize)> = Default::default();
                while (chosen.len() as u64) < count {
                    let a = rng.gen_range(node.lo..node.mid);
                    let b = rng.gen_range(node.mid..node.hi);
                    if chosen.insert((a, b)) {
                        edges.push((self.sigma[a], self.sigma[b]));
                    }
                }
            }
        }
        Graph::from_simple_edges(self.n, edges)
    }

    #[cfg(test)]
    fn cross_counts(&self) -> &[i64] {
        &self.e
    }
}

/// Full private pipeline: chain over leaf permutations of the balanced
/// dendrogram for `burn_in * n` steps at budget `eps`, then sample one
/// graph from the final model and cluster it with exact Louvain.
pub fn hrg_fixed(
    g: &Graph,
    eps: f64,
    burn_in: usize,
    rng: &mut RandomSource,
) -> Result<DetectionOutput> {
    if g.n() == 0 {
        return Err(Error::InvalidParameter("graph has no nodes".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "budget must be positive, got {eps}"
        )));
    }
    let mut d = Dendrogram::balanced(g, random_permutation(g.n(), rng))?;
    for _ in 0..burn_in.saturating_mul(g.n()) {
        d.step(g, eps, rng)?;
    }
    let sample = d.sample_graph(rng)?;
    let mut flags = Vec::new();
    let clustering = if sample.m() > 0.0 {
        louvain(&sample, rng)?.clustering
    } else {
        flags.push("empty_sample".into());
        Clustering::singletons(g.n())
    };
    Ok(DetectionOutput {
        clustering,
        budget_spent: eps,
        flags,
    })
}
