//! Private community detection by noisy supergraph release: group the
//! (permuted) nodes into fixed-size blocks, count edges between blocks, pass
//! the counts through a one-sided high-pass filter built from geometric
//! noise, and run exact Louvain on the filtered weighted supergraph.

use rand::seq::index::sample as index_sample;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{random_permutation, Clustering, Graph};
use crate::louvain::louvain;
use crate::mechanisms::{geometric, laplace, RandomSource};
use crate::DetectionOutput;

/// Default share of the budget spent on the noisy superedge count.
pub const DEFAULT_COUNT_BUDGET: f64 = 0.1;

/// Exact (pre-noise) supergraph: the input graph collapsed onto blocks of
/// `k` consecutive positions of a node permutation.
#[derive(Debug, Clone)]
pub struct SuperGraph {
    /// Weighted graph over the supernodes; selfloops carry intra-block
    /// weight. Total weight always equals the input graph's `m`.
    pub base: Graph,
    /// Supernode each original node belongs to.
    pub assignment: Vec<usize>,
    /// Block size the supergraph was built with.
    pub k: usize,
}

/// Deterministic core of [`build_supergraph`]: collapse onto blocks of `k`
/// consecutive entries of the given permutation (`perm[p]` = node at
/// position `p`); the last block holds the `n mod k` remainder.
pub fn build_supergraph_with_permutation(
    g: &Graph,
    k: usize,
    perm: &[usize],
) -> Result<SuperGraph> {
    let n = g.n();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "group size k must lie in 1..=n, got {k} for n={n}"
        )));
    }
    if perm.len() != n {
        return Err(Error::InvalidParameter(format!(
            "permutation length {} does not match n={n}",
            perm.len()
        )));
    }
    let s_count = n.div_ceil(k);
    let mut assignment = vec![usize::MAX; n];
    for (pos, &node) in perm.iter().enumerate() {
        if node >= n || assignment[node] != usize::MAX {
            return Err(Error::InvalidParameter(
                "not a permutation of the node set".into(),
            ));
        }
        assignment[node] = pos / k;
    }
    let mut weights: std::collections::BTreeMap<(usize, usize), f64> = Default::default();
    for (u, v, w) in g.edges() {
        let a = assignment[u];
        let b = assignment[v];
        *weights.entry((a.min(b), a.max(b))).or_insert(0.0) += w;
    }
    let base = Graph::from_weighted_edges(s_count, weights.into_iter().map(|((a, b), w)| (a, b, w)))?;
    Ok(SuperGraph {
        base,
        assignment,
        k,
    })
}

/// Collapse `g` onto supernodes of `k` nodes each (last block smaller when
/// `k` does not divide `n`), over a uniformly random node permutation drawn
/// from `rng`. The permutation consumes no privacy budget.
pub fn build_supergraph(g: &Graph, k: usize, rng: &mut RandomSource) -> Result<SuperGraph> {
    let perm = random_permutation(g.n(), rng);
    build_supergraph_with_permutation(g, k, &perm)
}

/// Filter calibration: threshold `theta` and zero-superedge sample count `s`
/// for a domain of `m0` cells with (noisy) `m1` non-zero ones under
/// geometric noise `alpha`.
///
/// `theta = ceil(log_alpha((1+alpha)*m1/(m0-m1)))`, clamped to at least 1;
/// `s = floor((m0-m1) * alpha^theta / (1+alpha))`, which never exceeds `m1`.
fn threshold_and_budget(m0: f64, m1: f64, alpha: f64) -> (i64, u64) {
    let ratio = (1.0 + alpha) * m1 / (m0 - m1);
    let raw = ratio.ln() / alpha.ln();
    let theta = (raw.ceil() as i64).max(1);
    let s = ((m0 - m1) * alpha.powi(theta as i32) / (1.0 + alpha)).floor();
    (theta, s.max(0.0) as u64)
}

/// Draw an integral weight from `Pr[X <= x] = 1 - alpha^(x - theta + 1)`
/// (support starts at `theta`).
fn tail_weight(alpha: f64, theta: i64, rng: &mut RandomSource) -> i64 {
    let u = rng.open01();
    theta + ((1.0 - u).ln() / alpha.ln()).floor() as i64
}

/// Uniform unordered supernode pair, selfloops included: every one of the
/// `S(S+1)/2` cells with equal probability.
fn uniform_pair(s_count: usize, rng: &mut RandomSource) -> (usize, usize) {
    loop {
        let i = rng.gen_range(0..s_count);
        let j = rng.gen_range(0..s_count);
        // Ordered draws hit an off-diagonal cell twice as often as a
        // selfloop; thin them by half to even the odds.
        if i != j && rng.gen::<bool>() {
            continue;
        }
        return (i.min(j), i.max(j));
    }
}

/// High-pass filter a supergraph into a noisy weighted graph.
///
/// The non-zero superedge count is released with Laplace noise under
/// `eps_count`; every non-zero superedge gets geometric noise under
/// `eps_edges` and survives iff its noisy weight reaches the threshold; a
/// calibrated number of zero superedges (selfloops included) enter with
/// weights from the filter's tail distribution. Returns the noisy graph and
/// any degeneracy flags.
pub fn high_pass_filter(
    sg: &SuperGraph,
    eps_edges: f64,
    eps_count: f64,
    rng: &mut RandomSource,
) -> Result<(Graph, Vec<String>)> {
    if !(eps_edges > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "edge budget must be positive, got {eps_edges}"
        )));
    }
    let mut flags = Vec::new();
    let s_count = sg.base.n();
    let alpha = (-eps_edges).exp();
    let existing: std::collections::HashSet<(usize, usize)> =
        sg.base.edges().iter().map(|&(a, b, _)| (a, b)).collect();
    let m1_true = existing.len();
    let domain = s_count as u64 * (s_count as u64 + 1) / 2;
    let m0 = domain as f64;

    let mut noisy: Vec<(usize, usize, f64)> = Vec::new();
    if domain < 2 {
        // A single supernode has a one-cell domain: no room for a count in
        // [1, m0-1] and nothing to sample. Keep noisy cells above the
        // minimal threshold and move on.
        flags.push("degenerate_domain".into());
        for (a, b, w) in sg.base.edges() {
            let noised = w as i64 + geometric(alpha, rng)?;
            if noised >= 1 {
                noisy.push((a, b, noised as f64));
            }
        }
        let g1 = Graph::from_weighted_edges(s_count, noisy)?;
        return Ok((g1, flags));
    }

    let mut m1 = m1_true as f64 + laplace(1.0 / eps_count, rng)?;
    if m1 < 1.0 || m1 > m0 - 1.0 {
        m1 = m1.clamp(1.0, m0 - 1.0);
        flags.push("m1_clamped".into());
    }
    let (theta, s) = threshold_and_budget(m0, m1, alpha);
    debug_assert!(s as f64 <= m1 + 1e-9, "s={s} exceeds m1={m1}");

    // Surviving non-zero superedges keep their noisy weights.
    for (a, b, w) in sg.base.edges() {
        let noised = w as i64 + geometric(alpha, rng)?;
        if noised >= theta {
            noisy.push((a, b, noised as f64));
        }
    }

    // Zero superedges: s uniform cells outside the non-zero set.
    let available = domain - m1_true as u64;
    let mut want = s;
    if want > available {
        want = available;
        flags.push("zero_pool_exhausted".into());
    }
    if want > 0 {
        let mut added: std::collections::HashSet<(usize, usize)> = Default::default();
        let dense_pool = s_count <= 4000 && want * 4 >= available;
        if dense_pool {
            // Small or mostly-full domain: enumerate the free cells and take
            // a uniform subset.
            let mut pool: Vec<(usize, usize)> = Vec::with_capacity(available as usize);
            for i in 0..s_count {
                for j in i..s_count {
                    if !existing.contains(&(i, j)) {
                        pool.push((i, j));
                    }
                }
            }
            for idx in index_sample(rng, pool.len(), want as usize) {
                added.insert(pool[idx]);
            }
        } else {
            while (added.len() as u64) < want {
                let cell = uniform_pair(s_count, rng);
                if !existing.contains(&cell) {
                    added.insert(cell);
                }
            }
        }
        let mut cells: Vec<(usize, usize)> = added.into_iter().collect();
        cells.sort_unstable();
        for (a, b) in cells {
            let w = tail_weight(alpha, theta, rng);
            debug_assert!(w >= theta && w > 0);
            noisy.push((a, b, w as f64));
        }
    }

    let g1 = Graph::from_weighted_edges(s_count, noisy)?;
    Ok((g1, flags))
}

/// Full private pipeline: random permutation, supergraph of blocks of `k`,
/// high-pass filtered noisy release, exact Louvain on the release, and the
/// supernode clustering lifted back to original nodes.
///
/// `eps_count` (the noisy-count share, conventionally 0.1) plus the
/// remaining `eps - eps_count` for edge noise together spend exactly `eps`.
pub fn louvain_dp(
    g: &Graph,
    k: usize,
    eps: f64,
    eps_count: f64,
    rng: &mut RandomSource,
) -> Result<DetectionOutput> {
    if !(eps_count > 0.0) || !(eps > eps_count) {
        return Err(Error::InvalidParameter(format!(
            "need eps > eps_count > 0, got eps={eps} eps_count={eps_count}"
        )));
    }
    if g.m() <= 0.0 {
        return Err(Error::UndefinedModularity);
    }
    let sg = build_supergraph(g, k, rng)?;
    let (g1, mut flags) = high_pass_filter(&sg, eps - eps_count, eps_count, rng)?;
    let super_labels: Vec<usize> = if g1.m() > 0.0 {
        louvain(&g1, rng)?.clustering.labels().to_vec()
    } else {
        flags.push("empty_filtered_graph".into());
        (0..g1.n()).collect()
    };
    let lifted = Clustering::from_labels((0..g.n()).map(|u| super_labels[sg.assignment[u]]));
    Ok(DetectionOutput {
        clustering: lifted,
        budget_spent: eps,
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::demo_graph;
    use crate::metrics::modularity;

    #[test]
    fn triangle_blocks_by_hand() {
        let g = Graph::from_simple_edges(3, [(0, 1), (1, 2), (2, 0)]).unwrap();
        let sg = build_supergraph_with_permutation(&g, 2, &[0, 1, 2]).unwrap();
        assert_eq!(sg.base.n(), 2);
        assert_eq!(sg.assignment, vec![0, 0, 1]);
        assert_eq!(sg.base.edges(), vec![(0, 0, 1.0), (0, 1, 2.0)]);
        assert_eq!(sg.base.m(), 3.0);
    }

    #[test]
    fn unit_blocks_relabel_the_graph() {
        let g = demo_graph();
        let mut rng = RandomSource::new(31);
        let perm = random_permutation(g.n(), &mut rng);
        let sg = build_supergraph_with_permutation(&g, 1, &perm).unwrap();
        assert_eq!(sg.base.n(), g.n());
        assert_eq!(sg.base.m(), g.m());
        // Supernode of node u is u's position in the permutation; edges map
        // one-to-one.
        let mut expect: Vec<(usize, usize, f64)> = g
            .edges()
            .into_iter()
            .map(|(u, v, w)| {
                let a = sg.assignment[u];
                let b = sg.assignment[v];
                (a.min(b), a.max(b), w)
            })
            .collect();
        expect.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        assert_eq!(sg.base.edges(), expect);
    }

    #[test]
    fn one_block_collapses_to_selfloop() {
        let g = demo_graph();
        let sg = build_supergraph(&g, g.n(), &mut RandomSource::new(2)).unwrap();
        assert_eq!(sg.base.n(), 1);
        assert_eq!(sg.base.edges(), vec![(0, 0, 20.0)]);
    }

    #[test]
    fn supergraph_preserves_total_weight() {
        let g = demo_graph();
        for k in 1..=13 {
            for seed in 0..5 {
                let sg = build_supergraph(&g, k, &mut RandomSource::new(seed)).unwrap();
                assert_eq!(sg.base.m(), g.m(), "k={k} seed={seed}");
                assert_eq!(sg.base.n(), g.n().div_ceil(k));
            }
        }
    }

    #[test]
    fn supergraph_validates_k() {
        let g = demo_graph();
        let mut rng = RandomSource::new(1);
        assert!(build_supergraph(&g, 0, &mut rng).is_err());
        assert!(build_supergraph(&g, 14, &mut rng).is_err());
    }

    #[test]
    fn threshold_and_budget_worked_example() {
        // m0=100, m1=10, alpha=e^-1: theta = ceil(log_a(1.3679*10/90)) = 2,
        // s = floor(90 * a^2 / (1+a)) = 8.
        let alpha = (-1.0f64).exp();
        let (theta, s) = threshold_and_budget(100.0, 10.0, alpha);
        assert_eq!(theta, 2);
        assert_eq!(s, 8);
    }

    #[test]
    fn threshold_is_clamped_to_one() {
        // Dense domain: raw theta would be <= 0.
        let alpha = (-1.0f64).exp();
        let (theta, s) = threshold_and_budget(100.0, 80.0, alpha);
        assert_eq!(theta, 1);
        assert!(s <= 80);
    }

    #[test]
    fn s_never_exceeds_m1() {
        for &alpha in &[0.05f64, 0.3, 0.6, 0.9, 0.99] {
            for &m1 in &[1.0f64, 5.0, 30.0, 70.0, 99.0] {
                let (_, s) = threshold_and_budget(100.0, m1, alpha);
                assert!(s as f64 <= m1 + 1e-9, "alpha={alpha} m1={m1} s={s}");
            }
        }
    }

    #[test]
    fn vanishing_noise_reproduces_the_supergraph() {
        let g = demo_graph();
        for seed in 0..10 {
            let mut rng = RandomSource::new(seed);
            let sg = build_supergraph(&g, 3, &mut rng).unwrap();
            let (g1, _) = high_pass_filter(&sg, 40.0, 0.1, &mut rng).unwrap();
            assert_eq!(g1.edges(), sg.base.edges(), "seed {seed}");
        }
    }

    #[test]
    fn filtered_edge_count_stays_under_twice_the_input() {
        let g = demo_graph();
        for seed in 0..50 {
            let mut rng = RandomSource::new(seed);
            let sg = build_supergraph(&g, 2, &mut rng).unwrap();
            for eps in [0.5, 1.0, 2.0] {
                let (g1, _) = high_pass_filter(&sg, eps, 0.1, &mut rng).unwrap();
                assert!(
                    g1.num_edges() as f64 <= 2.0 * g.m(),
                    "seed {seed} eps {eps}: {} edges",
                    g1.num_edges()
                );
            }
        }
    }

    #[test]
    fn lifted_clustering_never_splits_a_block() {
        let g = demo_graph();
        for seed in 0..20 {
            let mut rng = RandomSource::new(seed);
            let out = louvain_dp(&g, 3, 1.5, 0.1, &mut rng).unwrap();
            assert_eq!(out.budget_spent, 1.5);
            let sg_rng = &mut RandomSource::new(seed);
            let sg = build_supergraph(&g, 3, sg_rng).unwrap();
            for u in 0..g.n() {
                for v in 0..g.n() {
                    if sg.assignment[u] == sg.assignment[v] {
                        assert_eq!(
                            out.clustering.label(u),
                            out.clustering.label(v),
                            "seed {seed}: block split"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn noiseless_unit_blocks_match_exact_louvain() {
        let g = demo_graph();
        let out = louvain_dp(&g, 1, 40.0, 0.1, &mut RandomSource::new(8)).unwrap();
        let q = modularity(&g, &out.clustering).unwrap();
        assert!((q - 0.47).abs() < 1e-9, "Q = {q}");
    }

    #[test]
    fn whole_graph_block_is_degenerate_but_runs() {
        let g = demo_graph();
        let out = louvain_dp(&g, g.n(), 2.0, 0.1, &mut RandomSource::new(4)).unwrap();
        assert!(out.flags.iter().any(|f| f == "degenerate_domain"));
        assert_eq!(out.clustering.num_communities(), 1);
    }

    #[test]
    fn parameter_validation() {
        let g = demo_graph();
        let mut rng = RandomSource::new(1);
        assert!(louvain_dp(&g, 2, 0.1, 0.1, &mut rng).is_err());
        assert!(louvain_dp(&g, 2, 1.0, 0.0, &mut rng).is_err());
        assert!(louvain_dp(&g, 0, 1.0, 0.1, &mut rng).is_err());
        let empty = Graph::from_simple_edges(3, []).unwrap();
        assert!(louvain_dp(&empty, 1, 1.0, 0.1, &mut rng).is_err());
    }
}
