//! Graph construction and the shift operators built from graphs.

use std::collections::{BTreeSet, VecDeque};

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::opspace::{make_operator, ShiftOperator};

/// An undirected edge, stored with `u <= v`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

impl Edge {
    pub fn key(&self) -> (usize, usize) {
        (self.u, self.v)
    }
}

/// Undirected weighted graph on vertices `0..n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    lattice: Option<(usize, usize)>,
}

impl Graph {
    /// Validates indices and weights, normalizes endpoint order and rejects
    /// duplicate pairs. Self-loops are only accepted with `allow_loops`.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>, allow_loops: bool) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for (a, b, w) in edges {
            let (u, v) = if a <= b { (a, b) } else { (b, a) };
            if v >= n {
                return Err(Error::IndexOutOfRange { index: v, len: n });
            }
            if u == v && !allow_loops {
                return Err(Error::InvalidArgument(format!("self-loop at vertex {u}")));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidArgument(format!("edge ({u}, {v}) has non-positive weight {w}")));
            }
            if !seen.insert((u, v)) {
                return Err(Error::InvalidArgument(format!("duplicate edge ({u}, {v})")));
            }
            out.push(Edge { u, v, w });
        }
        Ok(Graph { n, edges: out, lattice: None })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// `(rows, cols)` when built by [`grid_2d`].
    pub fn lattice_shape(&self) -> Option<(usize, usize)> {
        self.lattice
    }

    /// Sorted neighbor lists (self-loops excluded).
    pub fn adjacency_lists(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            if e.u != e.v {
                adj[e.u].push(e.v);
                adj[e.v].push(e.u);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// Hop distances from `source`; `usize::MAX` marks unreachable vertices.
    pub fn bfs_distances(&self, source: usize) -> Vec<usize> {
        bfs_on(&self.adjacency_lists(), source)
    }

    pub fn is_connected(&self) -> bool {
        self.n == 0 || self.bfs_distances(0).iter().all(|&d| d != usize::MAX)
    }

    pub fn adjacency_matrix(&self) -> DMatrix<f64> {
        let mut w = DMatrix::zeros(self.n, self.n);
        for e in &self.edges {
            w[(e.u, e.v)] += e.w;
            if e.u != e.v {
                w[(e.v, e.u)] += e.w;
            }
        }
        w
    }

    /// `D - W`. Self-loops do not contribute.
    pub fn laplacian_matrix(&self) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(self.n, self.n);
        for e in self.edges.iter().filter(|e| e.u != e.v) {
            l[(e.u, e.v)] -= e.w;
            l[(e.v, e.u)] -= e.w;
            l[(e.u, e.u)] += e.w;
            l[(e.v, e.v)] += e.w;
        }
        l
    }
}

pub(crate) fn bfs_on(adj: &[Vec<usize>], source: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; adj.len()];
    let mut queue = VecDeque::new();
    dist[source] = 0;
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// `rows x cols` lattice with unit horizontal and vertical edges; vertex
/// `row * cols + col`.
pub fn grid_2d(rows: usize, cols: usize) -> Graph {
    assert!(rows >= 1 && cols >= 1, "grid_2d needs positive dimensions");
    let mut edges = Vec::with_capacity(2 * rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let v = r * cols + c;
            if c + 1 < cols {
                edges.push(Edge { u: v, v: v + 1, w: 1.0 });
            }
            if r + 1 < rows {
                edges.push(Edge { u: v, v: v + cols, w: 1.0 });
            }
        }
    }
    Graph { n: rows * cols, edges, lattice: Some((rows, cols)) }
}

/// Horizontal-only and vertical-only subgraphs of a lattice.
pub fn split_axes(g: &Graph) -> Result<(Graph, Graph)> {
    let (_, cols) = g.lattice.ok_or(Error::NotLattice)?;
    let (horizontal, vertical): (Vec<Edge>, Vec<Edge>) = g.edges.iter().partition(|e| e.v == e.u + 1 && e.u / cols == e.v / cols);
    if vertical.iter().any(|e| e.v != e.u + cols) {
        return Err(Error::NotLattice);
    }
    Ok((
        Graph { n: g.n, edges: horizontal, lattice: None },
        Graph { n: g.n, edges: vertical, lattice: None },
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum KnnWeighting {
    #[default]
    Unweighted,
    /// `exp(-d² / 2σ²)` with σ the (lower) median pairwise distance.
    Gaussian,
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Symmetrized k-nearest-neighbor graph: `(u, v)` is an edge when either is
/// among the other's `k` nearest points. Distance ties go to the lower index.
pub fn knn_graph(points: &[Vec<f64>], k: usize, weighting: KnnWeighting) -> Result<Graph> {
    let n = points.len();
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!("k = {k} must satisfy 1 <= k < n = {n}")));
    }
    let d = points[0].len();
    if let Some(p) = points.iter().find(|p| p.len() != d) {
        return Err(Error::DimensionMismatch { expected: d, got: p.len() });
    }
    let dist = DMatrix::from_fn(n, n, |i, j| euclidean(&points[i], &points[j]));
    let mut pairs = BTreeSet::new();
    for u in 0..n {
        let mut others: Vec<usize> = (0..n).filter(|&v| v != u).collect();
        others.sort_by(|&a, &b| dist[(u, a)].total_cmp(&dist[(u, b)]).then(a.cmp(&b)));
        for &v in &others[..k] {
            pairs.insert((u.min(v), u.max(v)));
        }
    }
    let sigma = match weighting {
        KnnWeighting::Unweighted => 1.0,
        KnnWeighting::Gaussian => {
            let mut all: Vec<f64> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).map(|(i, j)| dist[(i, j)]).collect();
            all.sort_by(f64::total_cmp);
            let s = all[(all.len() - 1) / 2];
            if s > 0.0 {
                s
            } else {
                1.0
            }
        }
    };
    let edges = pairs.into_iter().map(|(u, v)| {
        let w = match weighting {
            KnnWeighting::Unweighted => 1.0,
            KnnWeighting::Gaussian => (-dist[(u, v)].powi(2) / (2.0 * sigma * sigma)).exp().max(f64::MIN_POSITIVE),
        };
        (u, v, w)
    });
    Graph::new(n, edges, false)
}

/// Pearson correlation matrix of the rows of `signals` (n x m).
pub fn correlation_matrix(signals: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (n, m) = signals.shape();
    if m < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 samples per node, got {m}")));
    }
    let mut centered = signals.clone();
    for i in 0..n {
        let mean = signals.row(i).sum() / m as f64;
        let mut row = centered.row_mut(i);
        row.add_scalar_mut(-mean);
        let norm = row.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroVariance(i));
        }
        row /= norm;
    }
    Ok(&centered * centered.transpose())
}

/// Edge `(u, v)` iff the correlation of rows `u` and `v` is at least `tau`
/// (in absolute value when `absolute`); unit weights.
pub fn correlation_threshold_graph(signals: &DMatrix<f64>, tau: f64, absolute: bool) -> Result<Graph> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidArgument(format!("tau = {tau} must lie in (0, 1)")));
    }
    let c = correlation_matrix(signals)?;
    let n = c.nrows();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let r = if absolute { c[(u, v)].abs() } else { c[(u, v)] };
            if r >= tau {
                edges.push((u, v, 1.0));
            }
        }
    }
    Graph::new(n, edges, false)
}

/// Combinatorial Laplacian `L = D - W` as a shift operator.
pub fn laplacian(g: &Graph) -> Result<ShiftOperator> {
    make_operator(g.laplacian_matrix())
}

/// `I + W` as a shift operator.
pub fn adjacency_with_loops(g: &Graph) -> Result<ShiftOperator> {
    let mut a = g.adjacency_matrix();
    for i in 0..g.n {
        a[(i, i)] += 1.0;
    }
    make_operator(a)
}

/// Synthetic scale-free graph by preferential attachment: each new vertex
/// attaches to `m` distinct existing vertices with probability proportional
/// to degree. Stands in for real social graphs at desk scale.
pub fn preferential_attachment<R: Rng>(n: usize, m: usize, rng: &mut R) -> Result<Graph> {
    if m == 0 || n <= m {
        return Err(Error::InvalidArgument(format!("need 1 <= m < n, got m = {m}, n = {n}")));
    }
    let mut edges = Vec::new();
    let mut ends: Vec<usize> = Vec::new();
    // Seed with a star on the first m + 1 vertices.
    for v in 1..=m {
        edges.push((0, v, 1.0));
        ends.extend([0, v]);
    }
    for v in (m + 1)..n {
        let mut targets = BTreeSet::new();
        while targets.len() < m {
            targets.insert(ends[rng.random_range(0..ends.len())]);
        }
        for t in targets {
            edges.push((t, v, 1.0));
            ends.extend([t, v]);
        }
    }
    Graph::new(n, edges, false)
}
