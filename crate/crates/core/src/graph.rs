//! Graph and clustering types shared by every scheme.
//!
//! A [`Graph`] is an immutable, undirected, weighted graph with compact node
//! ids `0..n`. All mutation happens inside constructors; schemes only ever
//! read. Original (file) node ids are kept alongside so output can be written
//! in the caller's id space.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::mechanisms::RandomSource;

/// Immutable weighted undirected graph.
///
/// Conventions: an undirected edge of weight `w` is stored in both endpoint
/// adjacency lists and contributes `w` to the total weight `m` and to each
/// endpoint's degree. A selfloop of weight `w` is stored once, contributes
/// `w` to `m`, and `2w` to its endpoint's degree; the degree sum is therefore
/// always exactly `2m`.
#[derive(Debug, Clone)]
pub struct Graph {
    adj: Vec<Vec<(usize, f64)>>,
    degree: Vec<f64>,
    total_weight: f64,
    original_ids: Vec<u64>,
}

impl Graph {
    /// Build an unweighted simple graph: reverse duplicates collapse into one
    /// edge, repeated edges are kept once, selfloops are dropped.
    pub fn from_simple_edges(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Graph> {
        let mut seen = std::collections::HashSet::new();
        let mut uniq = Vec::new();
        for (a, b) in edges {
            for &v in &[a, b] {
                if v >= n {
                    return Err(Error::NodeOutOfRange { node: v, n });
                }
            }
            if a == b {
                continue;
            }
            let key = (a.min(b), a.max(b));
            if seen.insert(key) {
                uniq.push((key.0, key.1, 1.0));
            }
        }
        Graph::from_weighted_edges(n, uniq)
    }

    /// Build a weighted graph; selfloops are allowed, duplicate pairs are an
    /// error, weights must be positive and finite.
    pub fn from_weighted_edges(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Graph> {
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut degree = vec![0.0; n];
        let mut total_weight = 0.0;
        let mut seen = std::collections::HashSet::new();
        for (a, b, w) in edges {
            for &v in &[a, b] {
                if v >= n {
                    return Err(Error::NodeOutOfRange { node: v, n });
                }
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "edge ({a},{b}) has non-positive weight {w}"
                )));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate edge ({a},{b})"
                )));
            }
            if a == b {
                adj[a].push((a, w));
                degree[a] += 2.0 * w;
            } else {
                adj[a].push((b, w));
                adj[b].push((a, w));
                degree[a] += w;
                degree[b] += w;
            }
            total_weight += w;
        }
        for list in &mut adj {
            list.sort_unstable_by(|x, y| x.0.cmp(&y.0));
        }
        Ok(Graph {
            adj,
            degree,
            total_weight,
            original_ids: (0..n as u64).collect(),
        })
    }

    /// Number of nodes.
    pub fn n(&self) -> usize {
        self.adj.len()
    }

    /// Total edge weight (`m` in modularity formulas).
    pub fn m(&self) -> f64 {
        self.total_weight
    }

    /// Number of stored edges (selfloops count once).
    pub fn num_edges(&self) -> usize {
        let twice: usize = self
            .adj
            .iter()
            .enumerate()
            .map(|(u, l)| l.iter().filter(|&&(v, _)| v != u).count())
            .sum();
        let loops: usize = self
            .adj
            .iter()
            .enumerate()
            .map(|(u, l)| l.iter().filter(|&&(v, _)| v == u).count())
            .sum();
        twice / 2 + loops
    }

    /// Weighted degree of a node (selfloops counted twice).
    pub fn degree(&self, u: usize) -> f64 {
        self.degree[u]
    }

    /// Neighbors of `u` with edge weights, ascending by neighbor id. A
    /// selfloop appears once as `(u, w)`.
    pub fn neighbors(&self, u: usize) -> &[(usize, f64)] {
        &self.adj[u]
    }

    /// External id this node had in its source file (identity for generated
    /// graphs).
    pub fn original_id(&self, u: usize) -> u64 {
        self.original_ids[u]
    }

    /// All edges as `(u, v, w)` with `u <= v`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for (u, list) in self.adj.iter().enumerate() {
            for &(v, w) in list {
                if u <= v {
                    out.push((u, v, w));
                }
            }
        }
        out.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        out
    }

    /// Edge set keyed by original ids — the representation file round-trips
    /// preserve.
    pub fn edges_by_original_id(&self) -> std::collections::BTreeMap<(u64, u64), f64> {
        self.edges()
            .into_iter()
            .map(|(u, v, w)| {
                let a = self.original_ids[u];
                let b = self.original_ids[v];
                ((a.min(b), a.max(b)), w)
            })
            .collect()
    }

    /// Load a whitespace-separated edge list. Lines starting with `#` are
    /// comments; node ids are arbitrary u64 and get compacted to `0..n` in
    /// first-appearance order; reverse duplicates collapse; selfloops drop.
    pub fn load_edge_list(path: impl AsRef<Path>) -> Result<Graph> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let reader = BufReader::new(file);
        let mut ids: HashMap<u64, usize> = HashMap::new();
        let mut original_ids = Vec::new();
        let mut raw_edges = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|source| Error::Io {
                path: path.to_path_buf(),
                source,
            })?;
            let line_no = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut parts = trimmed.split_whitespace();
            let mut field = |name: &str| -> Result<u64> {
                parts
                    .next()
                    .ok_or_else(|| Error::Parse {
                        path: path.to_path_buf(),
                        line: line_no,
                        message: format!("missing {name} node id"),
                    })?
                    .parse::<u64>()
                    .map_err(|e| Error::Parse {
                        path: path.to_path_buf(),
                        line: line_no,
                        message: format!("bad {name} node id: {e}"),
                    })
            };
            let a = field("first")?;
            let b = field("second")?;
            if parts.next().is_some() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: line_no,
                    message: "expected exactly two fields".into(),
                });
            }
            let mut intern = |id: u64| -> usize {
                *ids.entry(id).or_insert_with(|| {
                    original_ids.push(id);
                    original_ids.len() - 1
                })
            };
            let ca = intern(a);
            let cb = intern(b);
            raw_edges.push((ca, cb));
        }
        let mut g = Graph::from_simple_edges(original_ids.len(), raw_edges)?;
        g.original_ids = original_ids;
        Ok(g)
    }

    /// Write the graph as an edge list in original-id space, with a `#`
    /// header carrying node and edge counts. Isolated nodes do not appear
    /// (the format cannot express them).
    pub fn write_edge_list(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut w = BufWriter::new(file);
        let mut emit = |s: String| -> Result<()> {
            writeln!(w, "{s}").map_err(|source| Error::Io {
                path: path.to_path_buf(),
                source,
            })
        };
        emit(format!("# Nodes: {} Edges: {}", self.n(), self.num_edges()))?;
        for (u, v, _) in self.edges() {
            emit(format!("{} {}", self.original_ids[u], self.original_ids[v]))?;
        }
        Ok(())
    }
}

impl PartialEq for Graph {
    /// Structural equality: same node count, same original ids in order, same
    /// edge set and weights.
    fn eq(&self, other: &Self) -> bool {
        self.n() == other.n()
            && self.original_ids == other.original_ids
            && self.edges() == other.edges()
    }
}

/// Assignment of every node of a graph to exactly one community.
///
/// Labels are compact (`0..num_communities`) in first-appearance order, so
/// two clusterings that partition nodes identically compare equal regardless
/// of the label values they were built from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clustering {
    labels: Vec<usize>,
    num_communities: usize,
}

impl Clustering {
    /// Build from arbitrary per-node labels, compacting them.
    pub fn from_labels(raw: impl IntoIterator<Item = usize>) -> Clustering {
        let mut remap: HashMap<usize, usize> = HashMap::new();
        let mut labels = Vec::new();
        for l in raw {
            let next = remap.len();
            labels.push(*remap.entry(l).or_insert(next));
        }
        let num_communities = remap.len();
        Clustering {
            labels,
            num_communities,
        }
    }

    /// Every node in its own community.
    pub fn singletons(n: usize) -> Clustering {
        Clustering::from_labels(0..n)
    }

    /// Every node in one community.
    pub fn one_block(n: usize) -> Clustering {
        Clustering::from_labels(std::iter::repeat(0).take(n))
    }

    /// Number of nodes covered.
    pub fn num_nodes(&self) -> usize {
        self.labels.len()
    }

    /// Number of (non-empty) communities.
    pub fn num_communities(&self) -> usize {
        self.num_communities
    }

    /// Community label of a node.
    pub fn label(&self, u: usize) -> usize {
        self.labels[u]
    }

    /// Per-node labels.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Members of each community, each ascending, indexed by label.
    pub fn communities(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_communities];
        for (u, &l) in self.labels.iter().enumerate() {
            out[l].push(u);
        }
        out
    }

    /// Canonical form for comparisons: members ascending, communities ordered
    /// by smallest member.
    pub fn canonical(&self) -> Vec<Vec<usize>> {
        let mut comms = self.communities();
        comms.sort_by_key(|c| c[0]);
        comms
    }

    /// Write one community per line as space-separated original ids of `g`.
    pub fn write(&self, g: &Graph, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if self.labels.len() != g.n() {
            return Err(Error::UniverseMismatch {
                left: self.labels.len(),
                right: g.n(),
            });
        }
        let file = std::fs::File::create(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut w = BufWriter::new(file);
        for comm in self.canonical() {
            let ids: Vec<String> = comm.iter().map(|&u| g.original_id(u).to_string()).collect();
            writeln!(w, "{}", ids.join(" ")).map_err(|source| Error::Io {
                path: path.to_path_buf(),
                source,
            })?;
        }
        Ok(())
    }
}

/// Read a clustering file (one community per line, space-separated ids) in
/// raw id space.
pub fn read_membership_file(path: impl AsRef<Path>) -> Result<Vec<Vec<u64>>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut comm = Vec::new();
        for tok in trimmed.split_whitespace() {
            comm.push(tok.parse::<u64>().map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                message: format!("bad node id: {e}"),
            })?);
        }
        out.push(comm);
    }
    Ok(out)
}

/// Uniformly random permutation of `0..n`.
pub fn random_permutation(n: usize, rng: &mut RandomSource) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    perm
}

/// Intra-edge weight and degree sum of a node subset: the two aggregates a
/// subset's modularity contribution is made of. Edges leaving the subset
/// count toward the degree sum but not the intra weight; a selfloop inside
/// the subset counts once toward intra weight.
pub fn subset_stats(g: &Graph, nodes: &[usize]) -> Result<(f64, f64)> {
    let mut inside = vec![false; g.n()];
    for &u in nodes {
        if u >= g.n() {
            return Err(Error::NodeOutOfRange { node: u, n: g.n() });
        }
        if inside[u] {
            return Err(Error::InvalidParameter(format!(
                "subset contains node {u} twice"
            )));
        }
        inside[u] = true;
    }
    let mut intra = 0.0;
    let mut degree_sum = 0.0;
    for &u in nodes {
        degree_sum += g.degree(u);
        for &(v, w) in g.neighbors(u) {
            if v == u {
                intra += w; // selfloop: stored once, counted once
            } else if inside[v] && v > u {
                intra += w;
            }
        }
    }
    Ok((intra, degree_sum))
}

/// Edge list of the 13-node, 20-edge demo graph used across the test-suite:
/// a triangle, a pendant pair, a 4-clique, and a near-clique, sparsely
/// interconnected so that greedy optimization first finds four blocks and
/// then merges two of them.
pub const DEMO_GRAPH_EDGES: [(usize, usize); 20] = [
    (0, 1),
    (0, 2),
    (1, 2),
    (0, 7),
    (2, 12),
    (3, 4),
    (3, 6),
    (4, 5),
    (4, 8),
    (5, 6),
    (5, 11),
    (5, 12),
    (6, 11),
    (6, 12),
    (11, 12),
    (7, 8),
    (7, 9),
    (7, 10),
    (8, 9),
    (8, 10),
];

/// The demo graph as a [`Graph`].
pub fn demo_graph() -> Graph {
    Graph::from_simple_edges(13, DEMO_GRAPH_EDGES).expect("demo graph is well-formed")
}
