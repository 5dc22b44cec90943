//! Dense weighted interaction graphs.

use std::collections::VecDeque;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const WALPOLE_EDGES: &str = include_str!("../data/walpole.edges");

/// Weighted adjacency matrix with a cached strong-connectivity flag.
///
/// Stored dense, row-major: `a(i, j)` is the weight of the arc `i -> j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphRepr", into = "GraphRepr")]
pub struct Graph {
    n: usize,
    adjacency: Vec<f64>,
    strongly_connected: bool,
}

#[derive(Serialize, Deserialize)]
struct GraphRepr {
    adjacency: Vec<Vec<f64>>,
}

impl TryFrom<GraphRepr> for Graph {
    type Error = Error;

    fn try_from(r: GraphRepr) -> Result<Self> {
        Graph::from_rows(&r.adjacency)
    }
}

impl From<Graph> for GraphRepr {
    fn from(g: Graph) -> Self {
        GraphRepr {
            adjacency: (0..g.n).map(|i| g.row(i).to_vec()).collect(),
        }
    }
}

impl Graph {
    /// Builds a graph from a flat row-major `n x n` weight matrix.
    pub fn from_dense(n: usize, adjacency: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("graph has no nodes".into()));
        }
        if adjacency.len() != n * n {
            return Err(Error::InvalidGraph(format!(
                "adjacency has {} entries, expected {}",
                adjacency.len(),
                n * n
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let w = adjacency[i * n + j];
                if !(w >= 0.0 && w.is_finite()) {
                    return Err(Error::InvalidGraph(format!(
                        "weight a[{}][{}] = {w} must be finite and nonnegative",
                        i + 1,
                        j + 1
                    )));
                }
                if i == j && w != 0.0 {
                    return Err(Error::InvalidGraph(format!("self-loop at node {}", i + 1)));
                }
            }
        }
        let mut g = Graph {
            n,
            adjacency,
            strongly_connected: false,
        };
        g.strongly_connected = strongly_connected(&g);
        Ok(g)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidGraph("adjacency matrix is not square".into()));
        }
        Self::from_dense(n, rows.iter().flatten().copied().collect())
    }

    /// Undirected graph from 1-indexed `(i, j, w)` edges, each listed once.
    pub fn from_undirected_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut a = vec![0.0; n * n];
        for &(i, j, w) in edges {
            if i == 0 || j == 0 || i > n || j > n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({i}, {j}) refers to a node outside 1..={n}"
                )));
            }
            if i == j {
                return Err(Error::InvalidGraph(format!("self-loop at node {i}")));
            }
            let (p, q) = (i - 1, j - 1);
            if a[p * n + q] != 0.0 {
                return Err(Error::InvalidGraph(format!("duplicate edge ({i}, {j})")));
            }
            a[p * n + q] = w;
            a[q * n + p] = w;
        }
        Self::from_dense(n, a)
    }

    /// Parses the edge-list text format: one `i j w` edge per line, 1-indexed,
    /// `#` comment lines ignored. The node count is the largest id seen.
    pub fn parse(text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::InvalidGraph(format!("line {}: expected `i j w`, got `{line}`", lineno + 1));
            if fields.len() != 3 {
                return Err(bad());
            }
            let i: usize = fields[0].parse().map_err(|_| bad())?;
            let j: usize = fields[1].parse().map_err(|_| bad())?;
            let w: f64 = fields[2].parse().map_err(|_| bad())?;
            edges.push((i, j, w));
        }
        let n = edges.iter().map(|&(i, j, _)| i.max(j)).max().unwrap_or(0);
        Self::from_undirected_edges(n, &edges)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Writes the edge-list format (upper triangle only; the graph must be symmetric).
    pub fn to_edge_list(&self) -> Result<String> {
        if !self.is_symmetric() {
            return Err(Error::InvalidGraph(
                "edge-list format only holds undirected graphs".into(),
            ));
        }
        let mut out = String::new();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let w = self.a(i, j);
                if w != 0.0 {
                    out.push_str(&format!("{} {} {}\n", i + 1, j + 1, w));
                }
            }
        }
        Ok(out)
    }

    /// The bundled 11-bus Walpole GSP – Peterborough network.
    pub fn walpole() -> Graph {
        Self::parse(WALPOLE_EDGES).expect("bundled graph parses")
    }

    pub fn complete(n: usize) -> Graph {
        let mut a = vec![1.0; n * n];
        for i in 0..n {
            a[i * n + i] = 0.0;
        }
        Self::from_dense(n, a).expect("complete graph is valid")
    }

    pub fn path(n: usize) -> Graph {
        let edges: Vec<_> = (1..n).map(|i| (i, i + 1, 1.0)).collect();
        Self::from_undirected_edges(n, &edges).expect("path graph is valid")
    }

    /// Graph with no edges.
    pub fn empty(n: usize) -> Graph {
        Self::from_dense(n, vec![0.0; n * n]).expect("empty graph is valid")
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn a(&self, i: usize, j: usize) -> f64 {
        self.adjacency[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.adjacency[i * self.n..(i + 1) * self.n]
    }

    pub fn is_strongly_connected(&self) -> bool {
        self.strongly_connected
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.a(i, j) == self.a(j, i)))
    }

    /// Weighted out-degree, `(A 1)_i`.
    pub fn degree(&self, i: usize) -> f64 {
        self.row(i).iter().sum()
    }

    pub fn degrees(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.degree(i)).collect()
    }

    /// Number of positive-weight arcs leaving `i`.
    pub fn link_count(&self, i: usize) -> usize {
        self.row(i).iter().filter(|&&w| w > 0.0).count()
    }

    /// `A x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.apply_into(x, &mut out);
        out
    }

    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    /// Copy with the undirected edge `{i, j}` (0-based) set to weight `w`.
    pub fn with_edge(&self, i: usize, j: usize, w: f64) -> Result<Graph> {
        let mut a = self.adjacency.clone();
        a[i * self.n + j] = w;
        a[j * self.n + i] = w;
        Graph::from_dense(self.n, a)
    }
}

/// True iff every node reaches every other through positive-weight arcs.
pub fn strongly_connected(g: &Graph) -> bool {
    let n = g.n;
    let reach_all = |forward: bool| {
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                let w = if forward { g.a(u, v) } else { g.a(v, u) };
                if w > 0.0 && !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach_all(true) && reach_all(false)
}
