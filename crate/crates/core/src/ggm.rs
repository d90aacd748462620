//! Neighbourhood tests for Gaussian graphical models.
//!
//! Node `j` is conditionally independent of its non-neighbours given its
//! neighbours `N(j)` iff, in the regression of `Z_j` on the other variables,
//! every coefficient outside `N(j)` vanishes. That is a linear hypothesis
//! with `V = N(j)`, handed to [`crate::testcore::run_test`] on centered data.

use std::collections::BTreeSet;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::collections::{assign_weights, build_collection, CollectionKind, CollectionParams, Setting, WeightScheme};
use crate::covmodels::{center_unknown_mean, Dataset};
use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::testcore::{run_test, Procedure, TestOutcome};

/// Undirected graph on nodes `1..=len`, without self-loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<BTreeSet<usize>>,
}

impl Graph {
    pub fn empty(nodes: usize) -> Self {
        Graph { adj: vec![BTreeSet::new(); nodes] }
    }

    pub fn complete(nodes: usize) -> Self {
        let mut g = Graph::empty(nodes);
        for i in 1..=nodes {
            for j in i + 1..=nodes {
                g.add_edge(i, j).unwrap();
            }
        }
        g
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn add_edge(&mut self, i: usize, j: usize) -> Result<()> {
        let k = self.len();
        if i == 0 || j == 0 || i > k || j > k {
            return Err(Error::Domain(format!("edge ({i}, {j}) outside nodes 1..={k}")));
        }
        if i == j {
            return Err(Error::Domain(format!("self-loop at node {i}")));
        }
        self.adj[i - 1].insert(j);
        self.adj[j - 1].insert(i);
        Ok(())
    }

    /// `N(j)`, 1-based.
    pub fn neighbors(&self, j: usize) -> &BTreeSet<usize> {
        &self.adj[j - 1]
    }

    /// Parses an edge list: one whitespace-separated `i j` pair per line,
    /// 1-based; blank lines and lines starting with `#` are skipped.
    pub fn parse_edge_list(text: &str, nodes: usize, path: &Path) -> Result<Self> {
        let mut g = Graph::empty(nodes);
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse { path: path.to_path_buf(), line: lineno + 1, message };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(parse_err(format!("expected two node indices, found {}", fields.len())));
            }
            let mut ends = [0usize; 2];
            for (e, f) in ends.iter_mut().zip(&fields) {
                *e = f.parse().map_err(|_| parse_err(format!("`{f}` is not a node index")))?;
            }
            g.add_edge(ends[0], ends[1]).map_err(|e| parse_err(e.to_string()))?;
        }
        Ok(g)
    }

    pub fn from_file(path: &Path, nodes: usize) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_edge_list(&text, nodes, path)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum NodeOutcome {
    Tested {
        node: usize,
        /// Original node label of each covariate column of the regression.
        covariates: Vec<usize>,
        outcome: TestOutcome,
    },
    /// `N(j)` already holds every other node.
    NothingToTest { node: usize },
}

impl NodeOutcome {
    pub fn node(&self) -> usize {
        match self {
            NodeOutcome::Tested { node, .. } | NodeOutcome::NothingToTest { node } => *node,
        }
    }

    pub fn rejected(&self) -> bool {
        matches!(self, NodeOutcome::Tested { outcome, .. } if outcome.rejected)
    }
}

/// Tests whether node `j` (1-based) is independent of its non-neighbours
/// given `N(j)`.
pub fn node_test<R: Rng + ?Sized>(
    rng: &mut R,
    z: &Matrix,
    graph: &Graph,
    j: usize,
    alpha: f64,
    kind: &CollectionKind,
    procedure: Procedure,
) -> Result<NodeOutcome> {
    let k = z.ncols();
    if graph.len() != k {
        return Err(Error::DimensionMismatch { expected: k, found: graph.len() });
    }
    if j == 0 || j > k {
        return Err(Error::Domain(format!("node {j} outside 1..={k}")));
    }
    let nb = graph.neighbors(j);
    if nb.len() + 1 == k {
        return Ok(NodeOutcome::NothingToTest { node: j });
    }
    let n = z.nrows();
    if n < nb.len() + 3 {
        return Err(Error::InsufficientData(format!(
            "node {j}: n = {n} but |N(j)| + 3 = {} observations are needed",
            nb.len() + 3
        )));
    }
    let covariates: Vec<usize> = (1..=k).filter(|&c| c != j).collect();
    let x = Matrix::from_columns(covariates.iter().map(|&c| z.col(c - 1).to_vec()).collect())?;
    let data = Dataset::new(z.col(j - 1).to_vec(), x)?;
    let (data, extra) = center_unknown_mean(&data)?;
    let v: Vec<usize> = covariates
        .iter()
        .enumerate()
        .filter(|(_, c)| nb.contains(c))
        .map(|(i, _)| i + 1)
        .collect();
    let setting = Setting::new(k - 1, n).with_v(v, extra);
    let models = build_collection(kind, &setting, &CollectionParams::default())?;
    let scheme = WeightScheme::default_for(kind, &setting);
    let collection = assign_weights(models, &setting, &scheme, alpha)?;
    let outcome = run_test(rng, &data, &collection, procedure)?;
    Ok(NodeOutcome::Tested { node: j, covariates, outcome })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphOutcome {
    pub nodes: Vec<NodeOutcome>,
    /// Level used for each node test, `α / |J|`.
    pub node_level: f64,
    pub rejected: bool,
}

/// Runs [`node_test`] on every node at level `α/|J|` and rejects the graph
/// if any node rejects.
///
/// Node `j` draws from ChaCha stream `j` of a seed taken from `rng`.
pub fn graph_test<R: Rng + ?Sized>(
    rng: &mut R,
    z: &Matrix,
    graph: &Graph,
    alpha: f64,
    kind: &CollectionKind,
    procedure: Procedure,
) -> Result<GraphOutcome> {
    let k = z.ncols();
    if k == 0 {
        return Err(Error::InsufficientData("no variables".into()));
    }
    let seed = rng.next_u64();
    let node_level = alpha / k as f64;
    let nodes = (1..=k)
        .into_par_iter()
        .map(|j| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(j as u64);
            node_test(&mut r, z, graph, j, node_level, kind, procedure)
        })
        .collect::<Result<Vec<_>>>()?;
    let rejected = nodes.iter().any(NodeOutcome::rejected);
    Ok(GraphOutcome { nodes, node_level, rejected })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    #[test]
    fn parse_edges() {
        let text = "# chain\n1 2\n\n2 3\n";
        let g = Graph::parse_edge_list(text, 3, &PathBuf::from("g.txt")).unwrap();
        assert!(g.neighbors(2).contains(&1) && g.neighbors(1).contains(&2));
        assert_eq!(g.neighbors(3).len(), 1);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let err = Graph::parse_edge_list("1 2\n2 x\n", 3, &PathBuf::from("g.txt")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(Graph::parse_edge_list("1 1\n", 3, &PathBuf::from("g.txt")).is_err());
        assert!(Graph::parse_edge_list("1 4\n", 3, &PathBuf::from("g.txt")).is_err());
        assert!(err.is_input_error());
    }

    #[test]
    fn complete_graph_has_nothing_to_test() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let z = crate::numerics::sample_mvn(&mut rng, &Matrix::identity(4), 20).unwrap();
        let out = graph_test(&mut rng, &z, &Graph::complete(4), 0.05, &CollectionKind::Singletons, Procedure::P1).unwrap();
        assert!(out.nodes.iter().all(|n| matches!(n, NodeOutcome::NothingToTest { .. })));
        assert!(!out.rejected);
    }

    #[test]
    fn too_few_observations() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let z = crate::numerics::sample_mvn(&mut rng, &Matrix::identity(5), 4).unwrap();
        let mut g = Graph::empty(5);
        g.add_edge(1, 2).unwrap();
        g.add_edge(1, 3).unwrap();
        let r = node_test(&mut rng, &z, &g, 1, 0.05, &CollectionKind::Singletons, Procedure::P1);
        assert!(matches!(r, Err(Error::InsufficientData(_))));
    }
}
