//! Clustering quality measures: modularity (weighted, with per-subset
//! contributions) and the bidirectional average-F1 agreement score.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::graph::{subset_stats, Clustering, Graph};

/// Modularity of a clustering: sum over communities of
/// `l_c/m - (d_c/2m)^2`, where `l_c` is the community's intra-edge weight
/// (selfloops count once) and `d_c` its degree sum (selfloops count twice).
///
/// Defined only for graphs with positive total weight.
pub fn modularity(g: &Graph, c: &Clustering) -> Result<f64> {
    if c.num_nodes() != g.n() {
        return Err(Error::UniverseMismatch {
            left: c.num_nodes(),
            right: g.n(),
        });
    }
    let m = g.m();
    if m <= 0.0 {
        return Err(Error::UndefinedModularity);
    }
    let k = c.num_communities();
    let mut intra = vec![0.0; k];
    let mut deg = vec![0.0; k];
    for u in 0..g.n() {
        deg[c.label(u)] += g.degree(u);
        for &(v, w) in g.neighbors(u) {
            if v == u {
                intra[c.label(u)] += w;
            } else if v > u && c.label(u) == c.label(v) {
                intra[c.label(u)] += w;
            }
        }
    }
    let mut q = 0.0;
    for i in 0..k {
        let frac = deg[i] / (2.0 * m);
        q += intra[i] / m - frac * frac;
    }
    Ok(q)
}

/// Modularity contribution of one node subset, computed the same way a
/// community's term is. Contributions are additive: summing over the blocks
/// of a partition gives that partition's modularity, and a partition covering
/// only part of the graph still has a well-defined score.
pub fn community_contribution(g: &Graph, nodes: &[usize]) -> Result<f64> {
    let m = g.m();
    if m <= 0.0 {
        return Err(Error::UndefinedModularity);
    }
    let (intra, deg) = subset_stats(g, nodes)?;
    let frac = deg / (2.0 * m);
    Ok(intra / m - frac * frac)
}

/// Upper bound on how much one edge insertion or removal can move any
/// partition's modularity: strictly less than `3/m`.
pub fn modularity_sensitivity(g: &Graph) -> Result<f64> {
    let m = g.m();
    if m <= 0.0 {
        return Err(Error::UndefinedModularity);
    }
    Ok(3.0 / m)
}

/// F1 score between two node sets given their intersection size.
fn f1(overlap: usize, len_a: usize, len_b: usize) -> f64 {
    if len_a == 0 || len_b == 0 || overlap == 0 {
        return 0.0;
    }
    2.0 * overlap as f64 / (len_a + len_b) as f64
}

/// Mean, over the communities of `a`, of each community's best F1 against
/// any community of `b`.
fn mean_best_f1(a: &Clustering, b: &Clustering) -> f64 {
    let b_comms = b.communities();
    let mut total = 0.0;
    for comm in a.communities() {
        // Only communities of `b` sharing a node can score above zero.
        let mut overlap: HashMap<usize, usize> = HashMap::new();
        for &u in &comm {
            *overlap.entry(b.label(u)).or_insert(0) += 1;
        }
        let best = overlap
            .iter()
            .map(|(&lb, &o)| f1(o, comm.len(), b_comms[lb].len()))
            .fold(0.0, f64::max);
        total += best;
    }
    total / a.num_communities() as f64
}

/// Average F1 agreement between two clusterings of the same node universe:
/// the mean of the two directional mean-best-F1 scores. Symmetric, equals 1
/// exactly on identical clusterings.
pub fn avg_f1(a: &Clustering, b: &Clustering) -> Result<f64> {
    if a.num_nodes() != b.num_nodes() {
        return Err(Error::UniverseMismatch {
            left: a.num_nodes(),
            right: b.num_nodes(),
        });
    }
    if a.num_communities() == 0 || b.num_communities() == 0 {
        return Err(Error::EmptyClustering);
    }
    Ok(0.5 * (mean_best_f1(a, b) + mean_best_f1(b, a)))
}

/// Evaluation summary for one detection run.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityReport {
    /// Modularity of the clustering on the evaluation graph, when a graph is
    /// available.
    pub modularity: Option<f64>,
    /// Average F1 against a reference clustering, when one is available.
    pub avg_f1: Option<f64>,
    /// Number of communities in the evaluated clustering.
    pub num_communities: usize,
    /// Wall-clock time of the producing run, in seconds.
    pub wall_time_s: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::demo_graph;
    use proptest::prelude::*;

    fn clustering_of(blocks: &[&[usize]], n: usize) -> Clustering {
        let mut labels = vec![usize::MAX; n];
        for (i, block) in blocks.iter().enumerate() {
            for &u in *block {
                labels[u] = i;
            }
        }
        assert!(labels.iter().all(|&l| l != usize::MAX));
        Clustering::from_labels(labels)
    }

    #[test]
    fn demo_graph_modularity_values() {
        let g = demo_graph();
        let singles = Clustering::singletons(13);
        assert!((modularity(&g, &singles).unwrap() + 0.0825).abs() < 1e-12);

        let four = clustering_of(
            &[&[0, 1, 2], &[3, 4], &[5, 6, 11, 12], &[7, 8, 9, 10]],
            13,
        );
        assert!((modularity(&g, &four).unwrap() - 0.46375).abs() < 1e-12);

        let three = clustering_of(&[&[0, 1, 2], &[3, 4, 5, 6, 11, 12], &[7, 8, 9, 10]], 13);
        assert!((modularity(&g, &three).unwrap() - 0.47).abs() < 1e-12);
    }

    #[test]
    fn modularity_hand_counts() {
        // Triangle plus one pendant edge: Q({0,1,2},{3}) = 3/4 - 49/64 - 1/64.
        let g = Graph::from_simple_edges(4, [(0, 1), (1, 2), (2, 0), (2, 3)]).unwrap();
        let c = clustering_of(&[&[0, 1, 2], &[3]], 4);
        assert!((modularity(&g, &c).unwrap() + 0.03125).abs() < 1e-12);
    }

    #[test]
    fn weighted_modularity_with_selfloop() {
        // Nodes {0,1}, selfloop of weight 2 at 0, edge weight 1: m=3,
        // degrees (5,1). One block: Q = 3/3 - 1 = 0. Singletons:
        // Q = 2/3 - (5/6)^2 - (1/6)^2 = -1/18.
        let g = Graph::from_weighted_edges(2, [(0, 0, 2.0), (0, 1, 1.0)]).unwrap();
        assert!((modularity(&g, &Clustering::one_block(2)).unwrap()).abs() < 1e-12);
        let q = modularity(&g, &Clustering::singletons(2)).unwrap();
        assert!((q + 1.0 / 18.0).abs() < 1e-12);
    }

    #[test]
    fn modularity_requires_edges_and_matching_universe() {
        let empty = Graph::from_simple_edges(3, []).unwrap();
        assert!(matches!(
            modularity(&empty, &Clustering::singletons(3)),
            Err(Error::UndefinedModularity)
        ));
        let g = demo_graph();
        assert!(matches!(
            modularity(&g, &Clustering::singletons(5)),
            Err(Error::UniverseMismatch { .. })
        ));
    }

    #[test]
    fn contribution_matches_partition_terms() {
        let g = demo_graph();
        // The merged middle community: l=9, d=20 -> 9/20 - (20/40)^2 = 0.2.
        let q = community_contribution(&g, &[3, 4, 5, 6, 11, 12]).unwrap();
        assert!((q - 0.2).abs() < 1e-12);
        // A partial cover is fine: single 4-clique block.
        let q = community_contribution(&g, &[5, 6, 11, 12]).unwrap();
        assert!((q - (6.0 / 20.0 - (15.0f64 / 40.0).powi(2))).abs() < 1e-12);
    }

    #[test]
    fn avg_f1_worked_example() {
        // [{0,1},{2,3}] vs [{0,1,2},{3}] scores 11/15 in both directions.
        let a = clustering_of(&[&[0, 1], &[2, 3]], 4);
        let b = clustering_of(&[&[0, 1, 2], &[3]], 4);
        let got = avg_f1(&a, &b).unwrap();
        assert!((got - 11.0 / 15.0).abs() < 1e-12);
    }

    #[test]
    fn avg_f1_identity_and_extremes() {
        let a = clustering_of(&[&[0, 1, 2], &[3, 4]], 5);
        assert!((avg_f1(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        // Singletons vs one block over n nodes: 2/(n+1).
        for n in [2usize, 5, 9] {
            let s = Clustering::singletons(n);
            let b = Clustering::one_block(n);
            let got = avg_f1(&s, &b).unwrap();
            assert!((got - 2.0 / (n as f64 + 1.0)).abs() < 1e-12, "n={n} got {got}");
        }
        let s9 = Clustering::singletons(9);
        let b9 = Clustering::one_block(9);
        assert!((avg_f1(&s9, &b9).unwrap() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn avg_f1_errors() {
        let a = Clustering::singletons(3);
        let b = Clustering::singletons(4);
        assert!(matches!(avg_f1(&a, &b), Err(Error::UniverseMismatch { .. })));
        let e = Clustering::singletons(0);
        assert!(matches!(avg_f1(&e, &e), Err(Error::EmptyClustering)));
    }

    /// Brute-force average F1 with quadratic all-pairs comparison.
    fn avg_f1_brute(a: &Clustering, b: &Clustering) -> f64 {
        let dir = |x: &Clustering, y: &Clustering| -> f64 {
            let xs = x.communities();
            let ys = y.communities();
            let mut total = 0.0;
            for cx in &xs {
                let mut best = 0.0f64;
                for cy in &ys {
                    let o = cx.iter().filter(|u| cy.contains(u)).count();
                    best = best.max(f1(o, cx.len(), cy.len()));
                }
                total += best;
            }
            total / xs.len() as f64
        };
        0.5 * (dir(a, b) + dir(b, a))
    }

    fn arb_edges(n: usize, max: usize) -> impl Strategy<Value = Vec<(usize, usize)>> {
        proptest::collection::vec((0..n, 0..n), 1..max)
            .prop_map(|v| v.into_iter().filter(|(a, b)| a != b).collect())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn avg_f1_matches_brute_force(
            la in proptest::collection::vec(0usize..5, 12),
            lb in proptest::collection::vec(0usize..5, 12),
        ) {
            let a = Clustering::from_labels(la);
            let b = Clustering::from_labels(lb);
            let fast = avg_f1(&a, &b).unwrap();
            let slow = avg_f1_brute(&a, &b);
            prop_assert!((fast - slow).abs() < 1e-12);
        }

        #[test]
        fn avg_f1_is_symmetric(
            la in proptest::collection::vec(0usize..6, 15),
            lb in proptest::collection::vec(0usize..6, 15),
        ) {
            let a = Clustering::from_labels(la);
            let b = Clustering::from_labels(lb);
            prop_assert!((avg_f1(&a, &b).unwrap() - avg_f1(&b, &a).unwrap()).abs() < 1e-15);
        }

        #[test]
        fn modularity_is_additive_over_communities(
            edges in arb_edges(18, 70),
            labels in proptest::collection::vec(0usize..5, 18),
        ) {
            prop_assume!(!edges.is_empty());
            let g = Graph::from_simple_edges(18, edges).unwrap();
            prop_assume!(g.m() > 0.0);
            let c = Clustering::from_labels(labels);
            let q = modularity(&g, &c).unwrap();
            let sum: f64 = c
                .communities()
                .iter()
                .map(|comm| community_contribution(&g, comm).unwrap())
                .sum();
            prop_assert!((q - sum).abs() < 1e-9);
        }

        #[test]
        fn one_edge_moves_modularity_less_than_bound(
            edges in arb_edges(20, 60),
            labels in proptest::collection::vec(0usize..4, 20),
            cover in proptest::collection::vec(proptest::bool::ANY, 20),
            extra in (0usize..20, 0usize..20),
        ) {
            prop_assume!(extra.0 != extra.1);
            let n = 20usize;
            let g = Graph::from_simple_edges(n, edges.clone()).unwrap();
            prop_assume!(g.m() > 0.0);
            let key = (extra.0.min(extra.1), extra.0.max(extra.1));
            let already: std::collections::HashSet<(usize, usize)> =
                g.edges().iter().map(|&(u, v, _)| (u, v)).collect();
            prop_assume!(!already.contains(&key));
            let mut edges2 = edges;
            edges2.push(key);
            let g2 = Graph::from_simple_edges(n, edges2).unwrap();

            // Partition over a (possibly partial) covered subset.
            let blocks: Vec<Vec<usize>> = {
                let mut by_label: std::collections::BTreeMap<usize, Vec<usize>> =
                    Default::default();
                for u in 0..n {
                    if cover[u] {
                        by_label.entry(labels[u]).or_default().push(u);
                    }
                }
                by_label.into_values().collect()
            };
            prop_assume!(!blocks.is_empty());
            let q1: f64 = blocks
                .iter()
                .map(|b| community_contribution(&g, b).unwrap())
                .sum();
            let q2: f64 = blocks
                .iter()
                .map(|b| community_contribution(&g2, b).unwrap())
                .sum();
            let bound = modularity_sensitivity(&g).unwrap();
            prop_assert!((q2 - q1).abs() < bound + 1e-12,
                "delta {} bound {}", (q2 - q1).abs(), bound);
        }
    }
}
