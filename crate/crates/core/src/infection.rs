//! Infection spreading along propagation trees, the tree-rewiring base change
//! for fast edges, and source localization from a single snapshot.
//!
//! A propagation tree is a spanning tree rooted at the source. Its shift
//! `A_T = I + W_T` grows the infected set by one tree hop per application, so
//! the snapshot after `i` steps is the tree ball of radius `i`. Fast edges `F`
//! are forced into trees by [`rewire_tree`]; scoring candidate sources against
//! the rewired training trees is the pushforward posterior.

use std::collections::{BTreeMap, HashMap, HashSet};

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graphs::{bfs_on, grid_2d, preferential_attachment, Graph};

/// Undirected edge as `(min, max)`.
pub type EdgeKey = (usize, usize);

fn key(a: usize, b: usize) -> EdgeKey {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// A spanning tree rooted at `source`, stored as parent pointers.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PropagationTree {
    source: usize,
    parent: Vec<usize>,
}

impl PropagationTree {
    /// Validates that `parent` describes a spanning tree rooted at `source`
    /// (`parent[source] == source`).
    pub fn new(source: usize, parent: Vec<usize>) -> Result<Self> {
        let n = parent.len();
        if source >= n {
            return Err(Error::IndexOutOfRange { index: source, len: n });
        }
        if parent[source] != source {
            return Err(Error::InvalidArgument("the source must be its own parent".into()));
        }
        if let Some(&p) = parent.iter().find(|&&p| p >= n) {
            return Err(Error::IndexOutOfRange { index: p, len: n });
        }
        let tree = PropagationTree { source, parent };
        if tree.depths().contains(&usize::MAX) {
            return Err(Error::InvalidArgument("parent pointers do not form a tree rooted at the source".into()));
        }
        Ok(tree)
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn parent(&self) -> &[usize] {
        &self.parent
    }

    pub fn n(&self) -> usize {
        self.parent.len()
    }

    /// Tree edges, sorted.
    pub fn edges(&self) -> Vec<EdgeKey> {
        let mut e: Vec<EdgeKey> = (0..self.n()).filter(|&v| v != self.source).map(|v| key(v, self.parent[v])).collect();
        e.sort_unstable();
        e
    }

    fn children(&self) -> Vec<Vec<usize>> {
        let mut ch = vec![Vec::new(); self.n()];
        for v in 0..self.n() {
            if v != self.source {
                ch[self.parent[v]].push(v);
            }
        }
        ch
    }

    /// Tree distance from the source; `usize::MAX` for vertices not reached.
    pub fn depths(&self) -> Vec<usize> {
        bfs_on(&self.children(), self.source)
    }

    /// `H_T`.
    pub fn height(&self) -> usize {
        self.depths().into_iter().max().unwrap_or(0)
    }

    /// `A_T = I + W_T`.
    pub fn shift_matrix(&self) -> DMatrix<f64> {
        let mut a = DMatrix::identity(self.n(), self.n());
        for (u, v) in self.edges() {
            a[(u, v)] = 1.0;
            a[(v, u)] = 1.0;
        }
        a
    }
}

/// Uniformly random BFS tree of `g` rooted at `source`: each vertex, in index
/// order, picks its parent uniformly among its neighbors one layer closer.
pub fn random_bfs_tree<R: Rng + ?Sized>(g: &Graph, source: usize, rng: &mut R) -> Result<PropagationTree> {
    random_bfs_tree_on(&g.adjacency_lists(), source, rng)
}

fn random_bfs_tree_on<R: Rng + ?Sized>(adj: &[Vec<usize>], source: usize, rng: &mut R) -> Result<PropagationTree> {
    let n = adj.len();
    if source >= n {
        return Err(Error::IndexOutOfRange { index: source, len: n });
    }
    let dist = bfs_on(adj, source);
    if let Some(v) = dist.iter().position(|&d| d == usize::MAX) {
        return Err(Error::Disconnected(v));
    }
    let mut parent = vec![source; n];
    let mut options = Vec::new();
    for v in 0..n {
        if v == source {
            continue;
        }
        options.clear();
        options.extend(adj[v].iter().copied().filter(|&u| dist[u] + 1 == dist[v]));
        parent[v] = options[rng.random_range(0..options.len())];
    }
    Ok(PropagationTree { source, parent })
}

/// Infected set after `steps` applications of `A_T`: the tree ball of that
/// radius around the source.
pub fn snapshot(tree: &PropagationTree, steps: usize) -> Vec<bool> {
    tree.depths().iter().map(|&d| d <= steps).collect()
}

/// `min_{0 ≤ i ≤ H_T} ‖τ(A_T^i δ_s) − f‖`, i.e. the square root of the
/// smallest symmetric difference between `f` and a tree ball.
pub fn infection_loss(tree: &PropagationTree, f: &[bool]) -> Result<f64> {
    if f.len() != tree.n() {
        return Err(Error::DimensionMismatch { expected: tree.n(), got: f.len() });
    }
    Ok(loss_from_depths(&tree.depths(), f))
}

fn loss_from_depths(depths: &[usize], f: &[bool]) -> f64 {
    let height = depths.iter().copied().max().unwrap_or(0);
    let mut count = vec![0usize; height + 1];
    let mut hit = vec![0usize; height + 1];
    for (&d, &x) in depths.iter().zip(f) {
        count[d] += 1;
        if x {
            hit[d] += 1;
        }
    }
    let infected = f.iter().filter(|&&x| x).count();
    let (mut ball, mut inter) = (0usize, 0usize);
    let mut best = usize::MAX;
    for i in 0..=height {
        ball += count[i];
        inter += hit[i];
        best = best.min(ball + infected - 2 * inter);
    }
    (best as f64).sqrt()
}

/// Distance of an edge to `source` in `g`: the smaller endpoint distance.
fn edge_distance(dist: &[usize], e: EdgeKey) -> usize {
    dist[e.0].min(dist[e.1])
}

fn sorted_by_distance(dist: &[usize], edges: &[EdgeKey]) -> Vec<EdgeKey> {
    let mut out: Vec<EdgeKey> = edges.iter().map(|&(a, b)| key(a, b)).collect();
    out.sort_by_key(|&e| (edge_distance(dist, e), e));
    out
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra] = rb;
        true
    }
}

fn check_edges_in_graph(g: &Graph, edges: &[EdgeKey]) -> Result<HashSet<EdgeKey>> {
    let all: HashSet<EdgeKey> = g.edges().iter().map(|e| e.key()).collect();
    let mut set = HashSet::with_capacity(edges.len());
    for &(a, b) in edges {
        let e = key(a, b);
        if !all.contains(&e) {
            return Err(Error::InvalidArgument(format!("fast edge ({}, {}) is not an edge of the graph", e.0, e.1)));
        }
        set.insert(e);
    }
    Ok(set)
}

/// Largest acyclic subset of `fast` built greedily in order of distance to
/// `source` (ties by edge key), as in Kruskal's algorithm.
pub fn acyclic_reduction(g: &Graph, fast: &[EdgeKey], source: usize) -> Result<Vec<EdgeKey>> {
    check_edges_in_graph(g, fast)?;
    let dist = g.bfs_distances(source);
    let mut uf = UnionFind::new(g.n());
    Ok(sorted_by_distance(&dist, fast).into_iter().filter(|&(a, b)| uf.union(a, b)).collect())
}

struct FastContext {
    dist: Vec<usize>,
    order: Vec<EdgeKey>,
    set: HashSet<EdgeKey>,
}

impl FastContext {
    fn new(dist: Vec<usize>, fast: &[EdgeKey]) -> Self {
        let order = sorted_by_distance(&dist, fast);
        let set = order.iter().copied().collect();
        FastContext { dist, order, set }
    }
}

/// The base-change map `h` on one tree: insert every fast edge, nearest to the
/// source first, each time removing the lower-median (by distance to the
/// source, ties by key) non-fast edge of the cycle it closes.
///
/// `fast` must be acyclic and contained in `g`. Distances are measured in `g`.
pub fn rewire_tree(g: &Graph, fast: &[EdgeKey], tree: &PropagationTree) -> Result<PropagationTree> {
    if tree.n() != g.n() {
        return Err(Error::DimensionMismatch { expected: g.n(), got: tree.n() });
    }
    check_edges_in_graph(g, fast)?;
    let mut uf = UnionFind::new(g.n());
    for &(a, b) in fast {
        if !uf.union(a, b) {
            let (u, v) = key(a, b);
            return Err(Error::CyclicFastEdges(u, v));
        }
    }
    rewire_with(&FastContext::new(g.bfs_distances(tree.source), fast), tree)
}

fn rewire_with(ctx: &FastContext, tree: &PropagationTree) -> Result<PropagationTree> {
    let root = tree.source;
    let mut parent = tree.parent.clone();
    let mut mark = vec![0usize; parent.len()];
    let mut stamp = 0usize;
    // Path edges as (child, parent) pairs, tagged with the side they came from.
    let mut path: Vec<(usize, usize, bool)> = Vec::new();
    let mut candidates: Vec<(usize, EdgeKey, usize, bool)> = Vec::new();
    for &(u, v) in &ctx.order {
        if parent[u] == v || parent[v] == u {
            continue;
        }
        stamp += 1;
        let mut x = u;
        loop {
            mark[x] = stamp;
            if x == root {
                break;
            }
            x = parent[x];
        }
        let mut lca = v;
        while mark[lca] != stamp {
            lca = parent[lca];
        }
        path.clear();
        let mut x = u;
        while x != lca {
            path.push((x, parent[x], true));
            x = parent[x];
        }
        let mut y = v;
        while y != lca {
            path.push((y, parent[y], false));
            y = parent[y];
        }
        candidates.clear();
        for &(c, p, side_u) in &path {
            let e = key(c, p);
            if !ctx.set.contains(&e) {
                candidates.push((edge_distance(&ctx.dist, e), e, c, side_u));
            }
        }
        if candidates.is_empty() {
            return Err(Error::Invariant(format!("cycle closed by fast edge ({u}, {v}) has no removable edge")));
        }
        candidates.sort_unstable_by_key(|&(d, e, _, _)| (d, e));
        let (_, _, child, side_u) = candidates[(candidates.len() - 1) / 2];
        // Detach the subtree under `child`, then hang it from the new edge,
        // re-rooting it at the endpoint that lies inside it.
        let (inside, outside) = if side_u { (u, v) } else { (v, u) };
        let mut prev = outside;
        let mut x = inside;
        loop {
            let next = parent[x];
            parent[x] = prev;
            if x == child {
                break;
            }
            prev = x;
            x = next;
        }
    }
    let out = PropagationTree { source: root, parent };
    if out.depths().contains(&usize::MAX) {
        return Err(Error::Invariant("rewired edge set is not spanning".into()));
    }
    Ok(out)
}

/// Rewire every weighted tree with the acyclic reduction of `fast` for its own
/// source, then merge identical results (the pushforward measure).
pub fn rewire_atoms(g: &Graph, fast: &[EdgeKey], atoms: &[(PropagationTree, f64)]) -> Result<Vec<(PropagationTree, f64)>> {
    let mut contexts: HashMap<usize, FastContext> = HashMap::new();
    let mut merged: BTreeMap<PropagationTree, f64> = BTreeMap::new();
    for (tree, w) in atoms {
        if tree.n() != g.n() {
            return Err(Error::DimensionMismatch { expected: g.n(), got: tree.n() });
        }
        let ctx = match contexts.get(&tree.source) {
            Some(ctx) => ctx,
            None => {
                let reduced = acyclic_reduction(g, fast, tree.source)?;
                let ctx = FastContext::new(g.bfs_distances(tree.source), &reduced);
                contexts.entry(tree.source).or_insert(ctx)
            }
        };
        let out = if ctx.order.is_empty() { tree.clone() } else { rewire_with(ctx, tree)? };
        *merged.entry(out).or_insert(0.0) += w;
    }
    Ok(merged.into_iter().collect())
}

/// Posterior mass of each candidate source: atoms `(s, T)` weighted by
/// `exp(−γ ℓ((s, T), f))` times their prior weight, summed over `T`.
pub fn source_score(candidates: &[usize], atoms: &[(PropagationTree, f64)], f: &[bool], gamma: f64) -> Result<Vec<f64>> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no candidate sources".into()));
    }
    if atoms.is_empty() {
        return Err(Error::InvalidArgument("no training trees".into()));
    }
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidArgument(format!("gamma must be finite and nonnegative, got {gamma}")));
    }
    let index: HashMap<usize, usize> = candidates.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut logs = Vec::with_capacity(atoms.len());
    for (tree, w) in atoms {
        let slot = *index
            .get(&tree.source)
            .ok_or_else(|| Error::InvalidArgument(format!("training tree rooted at non-candidate {}", tree.source)))?;
        if !(*w >= 0.0) {
            return Err(Error::InvalidWeights(format!("tree weight {w}")));
        }
        let l = infection_loss(tree, f)?;
        let lw = if *w > 0.0 { -gamma * l + w.ln() } else { f64::NEG_INFINITY };
        logs.push((slot, lw));
    }
    let top = logs.iter().map(|&(_, l)| l).fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return Err(Error::PosteriorUnderflow);
    }
    let mut scores = vec![0.0; candidates.len()];
    for (slot, l) in logs {
        scores[slot] += (l - top).exp();
    }
    let total: f64 = scores.iter().sum();
    Ok(scores.iter().map(|s| s / total).collect())
}

/// Index of the largest score, first on ties.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Graph used by the experiment.
#[derive(Clone, Debug, PartialEq)]
pub enum GraphSpec {
    Lattice { rows: usize, cols: usize },
    /// Synthetic preferential-attachment graph built from the experiment seed.
    ScaleFree { n: usize, m: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub graph: GraphSpec,
    /// `|F| / |E|` values.
    pub fast_fractions: Vec<f64>,
    pub candidate_fraction: f64,
    /// Target infected fraction of the snapshot.
    pub infection_fraction: f64,
    pub trials: usize,
    pub trees_per_candidate: usize,
    pub gamma: f64,
    pub bootstrap_resamples: usize,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            graph: GraphSpec::Lattice { rows: 15, cols: 15 },
            fast_fractions: vec![0.2, 0.4, 0.6, 0.8],
            candidate_fraction: 0.2,
            infection_fraction: 0.4,
            trials: 200,
            trees_per_candidate: 4,
            gamma: 2.0,
            bootstrap_resamples: 2000,
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let frac_ok = |x: f64| (0.0..=1.0).contains(&x);
        if self.fast_fractions.is_empty() || !self.fast_fractions.iter().all(|&x| frac_ok(x)) {
            return Err(Error::InvalidArgument("fast-edge fractions must lie in [0, 1]".into()));
        }
        if !(self.candidate_fraction > 0.0 && self.candidate_fraction <= 1.0) {
            return Err(Error::InvalidArgument("candidate fraction must lie in (0, 1]".into()));
        }
        if !(self.infection_fraction > 0.0 && self.infection_fraction <= 1.0) {
            return Err(Error::InvalidArgument("infection fraction must lie in (0, 1]".into()));
        }
        if self.trials == 0 || self.trees_per_candidate == 0 || self.bootstrap_resamples == 0 {
            return Err(Error::InvalidArgument("trials, trees per candidate and bootstrap resamples must be positive".into()));
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::InvalidArgument("gamma must be finite and nonnegative".into()));
        }
        match self.graph {
            GraphSpec::Lattice { rows, cols } if rows * cols < 2 => Err(Error::InvalidArgument("lattice needs at least two vertices".into())),
            GraphSpec::ScaleFree { n, m } if m == 0 || n <= m => Err(Error::InvalidArgument("scale-free graph needs 1 <= m < n".into())),
            _ => Ok(()),
        }
    }

    pub fn build_graph(&self) -> Result<Graph> {
        match self.graph {
            GraphSpec::Lattice { rows, cols } => Ok(grid_2d(rows, cols)),
            GraphSpec::ScaleFree { n, m } => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                rng.set_stream(u64::MAX);
                preferential_attachment(n, m, &mut rng)
            }
        }
    }
}

/// One trial's outcome.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialOutcome {
    pub source: usize,
    pub infected: usize,
    pub fast_edges_used: usize,
    pub error_with: usize,
    pub error_without: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentRow {
    pub fast_fraction: f64,
    pub fast_edges: usize,
    pub mean_error_with: f64,
    pub mean_error_without: f64,
    /// `100 (without − with) / without`; 0 when both are 0.
    pub improvement_pct: f64,
    /// Mean of `error_without − error_with` and its 95% bootstrap interval.
    pub mean_gain: f64,
    pub gain_ci: (f64, f64),
    pub trials: Vec<TrialOutcome>,
}

/// Run one trial: draw fast edges, candidates, a ground-truth rewired tree and
/// its snapshot, and training trees; localize with and without base change.
pub fn run_trial<R: Rng + ?Sized>(g: &Graph, config: &ExperimentConfig, fast_count: usize, rng: &mut R) -> Result<TrialOutcome> {
    let n = g.n();
    let adj = g.adjacency_lists();
    let edges: Vec<EdgeKey> = g.edges().iter().map(|e| e.key()).collect();
    let mut fast: Vec<EdgeKey> = sample(rng, edges.len(), fast_count).into_iter().map(|i| edges[i]).collect();
    fast.sort_unstable();

    let k = ((config.candidate_fraction * n as f64).round() as usize).clamp(1, n);
    let mut candidates = sample(rng, n, k).into_vec();
    candidates.sort_unstable();
    let source = candidates[rng.random_range(0..k)];

    let truth_fast = acyclic_reduction(g, &fast, source)?;
    let truth = rewire_tree(g, &truth_fast, &random_bfs_tree_on(&adj, source, rng)?)?;
    let depths = truth.depths();
    let target = config.infection_fraction * n as f64;
    let height = depths.iter().copied().max().unwrap_or(0);
    let mut counts = vec![0usize; height + 1];
    for &d in &depths {
        counts[d] += 1;
    }
    let (mut ball, mut best_step, mut best_gap) = (0usize, 0usize, f64::INFINITY);
    for (i, c) in counts.iter().enumerate() {
        ball += c;
        let gap = (ball as f64 - target).abs();
        if gap < best_gap {
            best_gap = gap;
            best_step = i;
        }
    }
    let f: Vec<bool> = depths.iter().map(|&d| d <= best_step).collect();

    let weight = 1.0 / (k * config.trees_per_candidate) as f64;
    let mut training = Vec::with_capacity(k * config.trees_per_candidate);
    for &c in &candidates {
        for _ in 0..config.trees_per_candidate {
            training.push((random_bfs_tree_on(&adj, c, rng)?, weight));
        }
    }
    let dist = bfs_on(&adj, source);
    let without = candidates[argmax(&source_score(&candidates, &training, &f, config.gamma)?)];
    let rewired = rewire_atoms(g, &fast, &training)?;
    let with = candidates[argmax(&source_score(&candidates, &rewired, &f, config.gamma)?)];
    Ok(TrialOutcome {
        source,
        infected: f.iter().filter(|&&x| x).count(),
        fast_edges_used: truth_fast.len(),
        error_with: dist[with],
        error_without: dist[without],
    })
}

/// Percentile bootstrap interval (2.5%, 97.5%) for the mean of `values`.
pub fn bootstrap_mean_ci<R: Rng + ?Sized>(values: &[f64], resamples: usize, rng: &mut R) -> (f64, f64) {
    let m = values.len();
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..m).map(|_| values[rng.random_range(0..m)]).sum::<f64>() / m as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let at = |q: f64| means[((q * (resamples - 1) as f64).round() as usize).min(resamples - 1)];
    (at(0.025), at(0.975))
}

/// Source-localization study over fast-edge fractions. Trial `t` of fraction
/// `i` draws from stream `i · 2³² + t` of the seed, so results do not depend on
/// how trials are scheduled.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ExperimentRow>> {
    config.validate()?;
    let g = config.build_graph()?;
    if !g.is_connected() {
        return Err(Error::Disconnected(g.bfs_distances(0).iter().position(|&d| d == usize::MAX).unwrap_or(0)));
    }
    let mut rows = Vec::new();
    for (i, &frac) in config.fast_fractions.iter().enumerate() {
        let fast_count = (frac * g.edge_count() as f64).round() as usize;
        let mut trials = Vec::with_capacity(config.trials);
        for t in 0..config.trials {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(((i as u64) << 32) | t as u64);
            trials.push(run_trial(&g, config, fast_count, &mut rng)?);
        }
        let m = trials.len() as f64;
        let mean_with = trials.iter().map(|o| o.error_with as f64).sum::<f64>() / m;
        let mean_without = trials.iter().map(|o| o.error_without as f64).sum::<f64>() / m;
        let gains: Vec<f64> = trials.iter().map(|o| o.error_without as f64 - o.error_with as f64).collect();
        let mut boot = ChaCha8Rng::seed_from_u64(config.seed);
        boot.set_stream((((i as u64) << 32) | 0xffff_ffff) ^ (1 << 63));
        let gain_ci = bootstrap_mean_ci(&gains, config.bootstrap_resamples, &mut boot);
        let improvement_pct = if mean_without > 0.0 { 100.0 * (mean_without - mean_with) / mean_without } else { 0.0 };
        rows.push(ExperimentRow {
            fast_fraction: frac,
            fast_edges: fast_count,
            mean_error_with: mean_with,
            mean_error_without: mean_without,
            improvement_pct,
            mean_gain: mean_without - mean_with,
            gain_ci,
            trials,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle(n: usize) -> Graph {
        Graph::new(n, (0..n).map(|i| (i, (i + 1) % n, 1.0)), false).unwrap()
    }

    fn is_spanning_tree(g: &Graph, t: &PropagationTree) -> bool {
        let edges = t.edges();
        let all: HashSet<EdgeKey> = g.edges().iter().map(|e| e.key()).collect();
        let mut uf = UnionFind::new(g.n());
        edges.len() == g.n() - 1 && edges.iter().all(|e| all.contains(e) && uf.union(e.0, e.1))
    }

    #[test]
    fn tree_input_is_returned() {
        let g = Graph::new(5, [(0, 1, 1.0), (1, 2, 1.0), (1, 3, 1.0), (3, 4, 1.0)], false).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = random_bfs_tree(&g, 1, &mut rng).unwrap();
        assert_eq!(t.parent(), &[1, 1, 1, 1, 3]);
        assert_eq!(t.height(), 2);
    }

    #[test]
    fn four_cycle_parent_choice_is_fair() {
        let g = cycle(4);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let draws = 10_000;
        let ones = (0..draws).filter(|_| random_bfs_tree(&g, 0, &mut rng).unwrap().parent()[2] == 1).count();
        assert!(((ones as f64 / draws as f64) - 0.5).abs() <= 0.02);
    }

    #[test]
    fn bfs_tree_preserves_distances() {
        let g = grid_2d(6, 7);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for s in [0, 17, 41] {
            let t = random_bfs_tree(&g, s, &mut rng).unwrap();
            assert_eq!(t.depths(), g.bfs_distances(s));
            assert!(is_spanning_tree(&g, &t));
        }
        let split = Graph::new(3, [(0, 1, 1.0)], false).unwrap();
        assert!(matches!(random_bfs_tree(&split, 0, &mut rng), Err(Error::Disconnected(2))));
    }

    #[test]
    fn snapshots_and_loss() {
        let g = grid_2d(5, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let t = random_bfs_tree(&g, 12, &mut rng).unwrap();
        assert_eq!(snapshot(&t, 0).iter().filter(|&&x| x).count(), 1);
        assert!(snapshot(&t, t.height()).iter().all(|&x| x));
        for i in 0..=t.height() {
            assert_eq!(infection_loss(&t, &snapshot(&t, i)).unwrap(), 0.0);
        }
        let mut f = snapshot(&t, 2);
        f[0] = !f[0];
        f[24] = !f[24];
        let brute = (0..=t.height())
            .map(|i| snapshot(&t, i).iter().zip(&f).filter(|(a, b)| a != b).count())
            .min()
            .unwrap();
        assert_eq!(infection_loss(&t, &f).unwrap(), (brute as f64).sqrt());
    }

    #[test]
    fn rewiring_keeps_tree_when_fast_edges_present() {
        let g = grid_2d(4, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = random_bfs_tree(&g, 5, &mut rng).unwrap();
        let fast: Vec<EdgeKey> = t.edges().into_iter().step_by(3).collect();
        assert_eq!(rewire_tree(&g, &fast, &t).unwrap(), t);
    }

    #[test]
    fn rewiring_removes_lower_median_edge() {
        // Ten-cycle, source 0, tree = path 0-1-...-9 (edge (0, 9) missing).
        let g = cycle(10);
        let parent: Vec<usize> = (0..10).map(|v: usize| v.saturating_sub(1)).collect();
        let t = PropagationTree::new(0, parent).unwrap();
        let fast = vec![(0, 9), (2, 3), (6, 7)];
        let out = rewire_tree(&g, &fast, &t).unwrap();
        // Path from 0 to 9 has 9 edges; 7 are not fast. Distances to 0 in the
        // cycle: (0,1)→0, (1,2)→1, (3,4)→3, (4,5)→4, (5,6)→4, (7,8)→2, (8,9)→1.
        // Sorted: (0,1) (1,2) (8,9) (7,8) (3,4) (4,5) (5,6); the median is (7,8).
        let edges = out.edges();
        assert!(!edges.contains(&(7, 8)));
        assert_eq!(edges.len(), 9);
        for e in fast {
            assert!(edges.contains(&e));
        }
        assert!(is_spanning_tree(&g, &out));
    }

    #[test]
    fn cyclic_fast_edges_are_rejected() {
        let g = cycle(4);
        let t = PropagationTree::new(0, vec![0, 0, 1, 0]).unwrap();
        let all = vec![(0, 1), (1, 2), (2, 3), (0, 3)];
        assert!(matches!(rewire_tree(&g, &all, &t), Err(Error::CyclicFastEdges(_, _))));
        assert_eq!(acyclic_reduction(&g, &all, 0).unwrap().len(), 3);
    }

    #[test]
    fn rewiring_invariants_on_lattice() {
        let g = grid_2d(5, 5);
        let edges: Vec<EdgeKey> = g.edges().iter().map(|e| e.key()).collect();
        for seed in 0..200 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = rng.random_range(0..25);
            let t = random_bfs_tree(&g, s, &mut rng).unwrap();
            let raw: Vec<EdgeKey> = sample(&mut rng, edges.len(), 4).into_iter().map(|i| edges[i]).collect();
            let fast = acyclic_reduction(&g, &raw, s).unwrap();
            let out = rewire_tree(&g, &fast, &t).unwrap();
            assert!(is_spanning_tree(&g, &out));
            let before: HashSet<EdgeKey> = t.edges().into_iter().collect();
            let fast_set: HashSet<EdgeKey> = fast.iter().copied().collect();
            for e in out.edges() {
                assert!(before.contains(&e) || fast_set.contains(&e));
            }
            assert!(fast.iter().all(|e| out.edges().contains(e)));
        }
    }

    #[test]
    fn scoring() {
        let g = grid_2d(5, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let candidates = vec![3, 12, 20];
        let trees: Vec<(PropagationTree, f64)> =
            candidates.iter().map(|&c| (random_bfs_tree(&g, c, &mut rng).unwrap(), 1.0 / 3.0)).collect();
        let f = snapshot(&trees[1].0, 2);
        let scores = source_score(&candidates, &trees, &f, 3.0).unwrap();
        assert_eq!(argmax(&scores), 1);
        assert!((scores.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let flat = source_score(&candidates, &trees, &f, 0.0).unwrap();
        assert!(flat.iter().all(|&s| (s - 1.0 / 3.0).abs() < 1e-12));
        assert_eq!(source_score(&[12], &trees[1..2], &f, 3.0).unwrap(), vec![1.0]);
        assert!(source_score(&[], &trees, &f, 1.0).is_err());
    }

    #[test]
    fn no_fast_edges_means_no_difference() {
        let config = ExperimentConfig {
            graph: GraphSpec::Lattice { rows: 6, cols: 6 },
            fast_fractions: vec![0.0],
            trials: 10,
            bootstrap_resamples: 50,
            ..Default::default()
        };
        let rows = run_experiment(&config).unwrap();
        assert!(rows[0].trials.iter().all(|t| t.error_with == t.error_without));
        assert_eq!(rows, run_experiment(&config).unwrap());
    }
}
