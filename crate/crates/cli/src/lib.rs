//! Experiment harness: drives the detection schemes across an ε grid with
//! repeated seeded runs, writes one clustering file plus one CSV row per
//! (ε, run) cell, and evaluates clustering files against references.
//!
//! Determinism contract: given the same configuration and master seed, every
//! output file is byte-identical across invocations — except the
//! `wall_time_s` CSV column, which is a physical measurement. Worker count
//! affects scheduling only, never results: each cell derives its own random
//! source from the master seed and its grid position.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use dpcd::edge_flip::{edge_flip_detect, DEFAULT_COUNT_BUDGET as FLIP_COUNT_BUDGET};
use dpcd::generate::planted_partition;
use dpcd::hrg::{hrg_fixed, DEFAULT_BURN_IN as HRG_BURN_IN};
use dpcd::louvain::louvain;
use dpcd::louvain_dp::{louvain_dp, DEFAULT_COUNT_BUDGET};
use dpcd::metrics::{avg_f1, modularity, QualityReport};
use dpcd::mod_divisive::{
    mod_divisive, DEFAULT_BURN_IN as DIV_BURN_IN, DEFAULT_QUALITY_BUDGET, DEFAULT_RATIO,
};
use dpcd::{Clustering, DetectionOutput, Graph, RandomSource};

/// Reserved sub-seed task id for the ground-truth reference run, outside the
/// cell id range so no experiment cell can collide with it.
const TRUTH_TASK: u64 = u64::MAX;

/// Header of the results CSV; one row per (ε, run) cell follows.
pub const CSV_HEADER: &str =
    "scheme,eps,run,seed,modularity,avg_f1,num_communities,wall_time_s,budget_spent,flags";

/// Detection schemes the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Scheme {
    /// Exact (non-private) greedy modularity optimization.
    Louvain,
    /// Supergraph coarsening + filtered noisy edge release, then exact
    /// optimization on the released graph.
    Louvaindp,
    /// Edge flipping with count-calibrated shrinking, then exact
    /// optimization on the perturbed graph.
    Edgeflip,
    /// Top-down Metropolis partitioning with a noisy best-cut selection.
    Moddivisive,
    /// Metropolis over leaf orders of a fixed balanced dendrogram; a graph
    /// sampled from the fitted model is clustered exactly.
    Hrgfixed,
}

impl Scheme {
    /// Name used in file names and the CSV `scheme` column.
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Louvain => "louvain",
            Scheme::Louvaindp => "louvaindp",
            Scheme::Edgeflip => "edgeflip",
            Scheme::Moddivisive => "moddivisive",
            Scheme::Hrgfixed => "hrgfixed",
        }
    }

    /// Whether the scheme consumes a privacy budget (everything except the
    /// exact baseline).
    pub fn is_private(self) -> bool {
        !matches!(self, Scheme::Louvain)
    }
}

/// Per-scheme tuning knobs; `None` fields fall back to scheme defaults.
#[derive(Debug, Clone, Default)]
pub struct SchemeParams {
    /// Group size (supernode block size for the coarsening scheme, fan-out
    /// for the divisive scheme).
    pub k: Option<usize>,
    /// Divisive tree depth.
    pub max_level: Option<usize>,
    /// Geometric ratio of per-level chain budgets.
    pub ratio: Option<f64>,
    /// Per-level cut-selection budget.
    pub eps_m: Option<f64>,
    /// Chain length multiplier.
    pub burn_in: Option<usize>,
    /// Budget share reserved for noisy edge counts.
    pub eps_count: Option<f64>,
}

impl SchemeParams {
    fn k_for(&self, scheme: Scheme) -> usize {
        self.k.unwrap_or(match scheme {
            Scheme::Moddivisive => 4,
            _ => 8,
        })
    }

    fn burn_in_for(&self, scheme: Scheme) -> usize {
        self.burn_in.unwrap_or(match scheme {
            Scheme::Hrgfixed => HRG_BURN_IN,
            _ => DIV_BURN_IN,
        })
    }
}

/// One detection experiment: a scheme swept over ε values with `runs`
/// repetitions per value.
#[derive(Debug, Clone)]
pub struct DetectConfig {
    /// Edge-list file to load.
    pub input: PathBuf,
    pub scheme: Scheme,
    /// Explicit ε values; empty means the standard grid
    /// {0.1, 0.2, 0.3, 0.4, 0.5}·ln n computed from the loaded graph.
    pub eps: Vec<f64>,
    /// Repetitions per ε value.
    pub runs: usize,
    /// Master seed; every cell and the ground-truth run derive from it.
    pub seed: u64,
    /// Output directory (created if missing).
    pub out: PathBuf,
    /// Worker threads; `None` uses all available.
    pub workers: Option<usize>,
    /// Ground-truth clustering file; `None` computes the exact baseline on
    /// the input graph.
    pub truth: Option<PathBuf>,
    pub params: SchemeParams,
}

/// One row of the results CSV, before formatting.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub scheme: &'static str,
    pub eps: f64,
    pub run: usize,
    pub seed: u64,
    pub report: QualityReport,
    pub budget_spent: f64,
    pub flags: Vec<String>,
    pub clustering_file: PathBuf,
}

/// Everything a `detect` invocation produced.
#[derive(Debug)]
pub struct DetectSummary {
    pub csv_path: PathBuf,
    pub rows: Vec<CellResult>,
}

/// The standard ε grid of a graph with `n` nodes: fractions 0.1..0.5 of ln n.
pub fn eps_grid(n: usize) -> Vec<f64> {
    let ln_n = (n as f64).ln();
    [0.1, 0.2, 0.3, 0.4, 0.5].iter().map(|f| f * ln_n).collect()
}

/// Map a membership file (communities of original node ids) onto a graph's
/// compact node space. Every graph node must appear exactly once.
pub fn clustering_from_membership(g: &Graph, communities: &[Vec<u64>]) -> Result<Clustering> {
    let index: BTreeMap<u64, usize> = (0..g.n()).map(|u| (g.original_id(u), u)).collect();
    let mut labels = vec![usize::MAX; g.n()];
    for (c, comm) in communities.iter().enumerate() {
        for &id in comm {
            let &u = index
                .get(&id)
                .with_context(|| format!("membership file names unknown node id {id}"))?;
            if labels[u] != usize::MAX {
                bail!("membership file assigns node id {id} twice");
            }
            labels[u] = c;
        }
    }
    if let Some(u) = labels.iter().position(|&l| l == usize::MAX) {
        bail!(
            "membership file misses node id {} (covers {} of {} nodes)",
            g.original_id(u),
            labels.iter().filter(|&&l| l != usize::MAX).count(),
            g.n()
        );
    }
    Ok(Clustering::from_labels(labels))
}

/// Run one scheme on one graph with one random source. Returns the detection
/// output; the exact baseline is wrapped into the same shape with zero spent
/// budget.
pub fn detect_once(
    g: &Graph,
    scheme: Scheme,
    eps: f64,
    params: &SchemeParams,
    rng: &mut RandomSource,
) -> dpcd::Result<DetectionOutput> {
    match scheme {
        Scheme::Louvain => {
            let res = louvain(g, rng)?;
            Ok(DetectionOutput {
                clustering: res.clustering,
                budget_spent: 0.0,
                flags: Vec::new(),
            })
        }
        Scheme::Louvaindp => louvain_dp(
            g,
            params.k_for(scheme),
            eps,
            params.eps_count.unwrap_or(DEFAULT_COUNT_BUDGET),
            rng,
        ),
        Scheme::Edgeflip => edge_flip_detect(
            g,
            eps,
            params.eps_count.unwrap_or(FLIP_COUNT_BUDGET),
            rng,
        ),
        Scheme::Moddivisive => mod_divisive(
            g,
            params.k_for(scheme),
            eps,
            params.max_level.unwrap_or(3),
            params.ratio.unwrap_or(DEFAULT_RATIO),
            params.eps_m.unwrap_or(DEFAULT_QUALITY_BUDGET),
            params.burn_in_for(scheme),
            rng,
        ),
        Scheme::Hrgfixed => hrg_fixed(g, eps, params.burn_in_for(scheme), rng),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Reject parameter combinations that cannot run, before any output is
/// created or any cell starts.
fn validate(cfg: &DetectConfig, eps_values: &[f64]) -> Result<()> {
    let scheme = cfg.scheme;
    if cfg.params.k_for(scheme) == 0 {
        bail!("group size k must be at least 1");
    }
    if !scheme.is_private() {
        return Ok(());
    }
    for &eps in eps_values {
        if !(eps.is_finite() && eps > 0.0) {
            bail!("privacy budget must be finite and positive, got eps={eps}");
        }
        let eps_count = match scheme {
            Scheme::Louvaindp => Some(cfg.params.eps_count.unwrap_or(DEFAULT_COUNT_BUDGET)),
            Scheme::Edgeflip => Some(cfg.params.eps_count.unwrap_or(FLIP_COUNT_BUDGET)),
            _ => None,
        };
        if let Some(eps_count) = eps_count {
            if !(eps_count > 0.0 && eps > eps_count) {
                bail!(
                    "scheme {} needs eps > eps_count > 0, got eps={eps} eps_count={eps_count}",
                    scheme.name()
                );
            }
        }
    }
    Ok(())
}

/// Execute a detection experiment: one clustering file and one CSV row per
/// (ε, run) cell, in deterministic order.
pub fn run_detect(cfg: &DetectConfig) -> Result<DetectSummary> {
    let g = Graph::load_edge_list(&cfg.input)
        .with_context(|| format!("loading graph {}", cfg.input.display()))?;
    if g.n() == 0 || g.m() <= 0.0 {
        bail!("input graph has no edges; nothing to detect");
    }

    let eps_values: Vec<f64> = if cfg.scheme.is_private() {
        if cfg.eps.is_empty() {
            eps_grid(g.n())
        } else {
            cfg.eps.clone()
        }
    } else {
        // The exact baseline ignores ε; a single unconstrained cell per run.
        vec![f64::INFINITY]
    };

    validate(cfg, &eps_values)?;

    std::fs::create_dir_all(&cfg.out)
        .with_context(|| format!("creating output directory {}", cfg.out.display()))?;

    let master = RandomSource::new(cfg.seed);
    let truth = match &cfg.truth {
        Some(path) => {
            let communities = dpcd::graph::read_membership_file(path)
                .with_context(|| format!("loading reference clustering {}", path.display()))?;
            clustering_from_membership(&g, &communities)?
        }
        None => {
            louvain(&g, &mut master.subsource(TRUTH_TASK))
                .context("computing the exact baseline as ground truth")?
                .clustering
        }
    };

    let cells: Vec<(usize, usize)> = (0..eps_values.len())
        .flat_map(|ei| (0..cfg.runs).map(move |run| (ei, run)))
        .collect();

    let run_cell = |&(ei, run): &(usize, usize)| -> Result<CellResult> {
        let eps = eps_values[ei];
        let cell_id = (ei * cfg.runs + run) as u64;
        let mut rng = master.subsource(cell_id);
        let seed = rng.seed();
        let started = Instant::now();
        let out = detect_once(&g, cfg.scheme, eps, &cfg.params, &mut rng)
            .map_err(anyhow::Error::from)
            .with_context(|| format!("scheme {} at eps={eps} run={run}", cfg.scheme.name()))?;
        let wall_time_s = started.elapsed().as_secs_f64();
        let q = modularity(&g, &out.clustering).map_err(anyhow::Error::from)?;
        let f1 = avg_f1(&truth, &out.clustering).map_err(anyhow::Error::from)?;
        let file = cfg.out.join(format!(
            "clustering_{}_eps{:.4}_run{:02}.txt",
            cfg.scheme.name(),
            eps,
            run
        ));
        out.clustering
            .write(&g, &file)
            .map_err(anyhow::Error::from)?;
        Ok(CellResult {
            scheme: cfg.scheme.name(),
            eps,
            run,
            seed,
            report: QualityReport {
                modularity: Some(q),
                avg_f1: Some(f1),
                num_communities: out.clustering.num_communities(),
                wall_time_s,
            },
            budget_spent: out.budget_spent,
            flags: out.flags,
            clustering_file: file,
        })
    };

    let rows: Vec<CellResult> = match cfg.workers {
        Some(workers) => {
            use rayon::prelude::*;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers.max(1))
                .build()
                .context("building worker pool")?;
            pool.install(|| cells.par_iter().map(run_cell).collect::<Result<Vec<_>>>())?
        }
        None => {
            use rayon::prelude::*;
            cells.par_iter().map(run_cell).collect::<Result<Vec<_>>>()?
        }
    };

    let mut csv = String::new();
    csv.push_str(CSV_HEADER);
    csv.push('\n');
    for row in &rows {
        writeln!(
            csv,
            "{},{},{},{},{:.6},{:.6},{},{:.6},{},{}",
            row.scheme,
            row.eps,
            row.run,
            row.seed,
            row.report.modularity.unwrap(),
            row.report.avg_f1.unwrap(),
            row.report.num_communities,
            row.report.wall_time_s,
            row.budget_spent,
            row.flags.join(";")
        )
        .expect("writing to a String cannot fail");
    }
    let csv_path = cfg.out.join("results.csv");
    write_text(&csv_path, &csv)?;
    Ok(DetectSummary { csv_path, rows })
}

/// Compare a clustering file against a reference file. With a graph, node
/// ids resolve through it and modularity is reported; without one, the two
/// files must cover the same id set.
pub fn run_eval(
    clustering_path: &Path,
    reference_path: &Path,
    graph_path: Option<&Path>,
) -> Result<QualityReport> {
    let left = dpcd::graph::read_membership_file(clustering_path)
        .with_context(|| format!("loading {}", clustering_path.display()))?;
    let right = dpcd::graph::read_membership_file(reference_path)
        .with_context(|| format!("loading {}", reference_path.display()))?;
    let started = Instant::now();
    let (a, b, q) = match graph_path {
        Some(path) => {
            let g = Graph::load_edge_list(path)
                .with_context(|| format!("loading graph {}", path.display()))?;
            let a = clustering_from_membership(&g, &left)?;
            let b = clustering_from_membership(&g, &right)?;
            let q = modularity(&g, &a).map_err(anyhow::Error::from)?;
            (a, b, Some(q))
        }
        None => {
            let mut ids: Vec<u64> = left.iter().flatten().copied().collect();
            ids.sort_unstable();
            ids.dedup();
            let index: BTreeMap<u64, usize> =
                ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
            let to_clustering = |comms: &[Vec<u64>], name: &Path| -> Result<Clustering> {
                let mut labels = vec![usize::MAX; ids.len()];
                for (c, comm) in comms.iter().enumerate() {
                    for &id in comm {
                        let &u = index.get(&id).with_context(|| {
                            format!("{} names node id {id} absent from the other file", name.display())
                        })?;
                        if labels[u] != usize::MAX {
                            bail!("{} assigns node id {id} twice", name.display());
                        }
                        labels[u] = c;
                    }
                }
                if labels.iter().any(|&l| l == usize::MAX) {
                    bail!("{} does not cover every node id", name.display());
                }
                Ok(Clustering::from_labels(labels))
            };
            let a = to_clustering(&left, clustering_path)?;
            let b = to_clustering(&right, reference_path)?;
            (a, b, None)
        }
    };
    let f1 = avg_f1(&b, &a).map_err(anyhow::Error::from)?;
    Ok(QualityReport {
        modularity: q,
        avg_f1: Some(f1),
        num_communities: a.num_communities(),
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}

/// Generate a planted-partition benchmark graph, writing the edge list and
/// optionally the ground-truth membership file.
pub fn run_gen_planted(
    n: usize,
    blocks: usize,
    p_in: f64,
    p_out: f64,
    seed: u64,
    out: &Path,
    truth_out: Option<&Path>,
) -> Result<()> {
    let mut rng = RandomSource::new(seed);
    let (g, truth) = planted_partition(n, blocks, p_in, p_out, &mut rng)
        .map_err(anyhow::Error::from)
        .context("generating planted-partition graph")?;
    g.write_edge_list(out)
        .map_err(anyhow::Error::from)
        .with_context(|| format!("writing {}", out.display()))?;
    if let Some(path) = truth_out {
        truth
            .write(&g, path)
            .map_err(anyhow::Error::from)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}
