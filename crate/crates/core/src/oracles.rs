//! Brute-force reference implementations for the test suite and `selftest`.
//!
//! Each oracle recomputes a quantity along a different path from the library
//! code it checks: explicit outer products instead of scaled eigenvector
//! products, Vandermonde solves instead of barycentric interpolation, dense
//! matrix powers instead of tree depths, and so on. Sizes are meant to stay
//! small (`n ≤ 64`, at most 32 atoms).

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::basechange::{self, stretch_map, stretched_operator, BaseChangeMap};
use crate::error::Result;
use crate::filters::{self, SpectralKernel};
use crate::graphs::{grid_2d, split_axes, Graph};
use crate::infection::{self, EdgeKey, PropagationTree};
use crate::learning;
use crate::opspace::{convex_family, discrete_space, make_operator, Density, OperatorSpace, ShiftOperator, Signal};
use crate::sampling::{self, BandSpec, RecoveryOptions};
use crate::spectral;

/// `Σ_j w_j Σ_i Γ(j, i) (u_{j,i} u_{j,i}ᵀ) f`, built from explicit rank-one
/// matrices.
pub fn oracle_convolve(space: &OperatorSpace, kernel: &SpectralKernel, f: &Signal) -> Signal {
    let n = space.n();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for j in 0..space.len() {
        let w = space.weights()[j];
        let u = space.atom(j).eigenvectors();
        for i in 0..n {
            let g = kernel.values()[(j, i)];
            for r in 0..n {
                for c in 0..n {
                    m[(r, c)] += w * g * u[(r, i)] * u[(c, i)];
                }
            }
        }
    }
    let mut out = vec![0.0; n];
    for r in 0..n {
        for c in 0..n {
            out[r] += m[(r, c)] * f.values()[c];
        }
    }
    Signal::from_vec(out)
}

/// Per-atom GFT by explicit dot products: entry `(j, i)` is `Σ_v u_{j,i}(v) f(v)`.
pub fn oracle_gft(space: &OperatorSpace, f: &Signal) -> DMatrix<f64> {
    let n = space.n();
    DMatrix::from_fn(space.len(), n, |j, i| {
        let u = space.atom(j).eigenvectors();
        (0..n).map(|v| u[(v, i)] * f.values()[v]).sum()
    })
}

/// Monomial coefficients through `(nodes, values)` from an LU solve of the
/// Vandermonde system.
pub fn oracle_vandermonde(nodes: &[f64], values: &[f64]) -> Option<Vec<f64>> {
    let k = nodes.len();
    let v = DMatrix::from_fn(k, k, |r, c| nodes[r].powi(c as i32));
    v.lu().solve(&DVector::from_column_slice(values)).map(|x| x.iter().copied().collect())
}

/// Symmetrized k-NN edge set by sorting all distances from every point
/// (ties to the lower index).
pub fn oracle_knn_edges(points: &[Vec<f64>], k: usize) -> Vec<EdgeKey> {
    let n = points.len();
    let mut set = HashSet::new();
    for u in 0..n {
        let mut others: Vec<(f64, usize)> = (0..n)
            .filter(|&v| v != u)
            .map(|v| (points[u].iter().zip(&points[v]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), v))
            .collect();
        others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, v) in others.iter().take(k) {
            set.insert((u.min(v), u.max(v)));
        }
    }
    let mut out: Vec<EdgeKey> = set.into_iter().collect();
    out.sort_unstable();
    out
}

/// Pearson correlation of rows `a` and `b` by the textbook formula.
pub fn oracle_correlation(signals: &DMatrix<f64>, a: usize, b: usize) -> f64 {
    let m = signals.ncols() as f64;
    let mean = |r: usize| (0..signals.ncols()).map(|c| signals[(r, c)]).sum::<f64>() / m;
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for c in 0..signals.ncols() {
        let (x, y) = (signals[(a, c)] - ma, signals[(b, c)] - mb);
        sab += x * y;
        saa += x * x;
        sbb += y * y;
    }
    sab / (saa * sbb).sqrt()
}

/// `τ(A_T^i δ_s)` by repeated dense matrix-vector products.
pub fn oracle_snapshot(tree: &PropagationTree, steps: usize) -> Vec<bool> {
    let a = tree.shift_matrix();
    let mut x = DVector::zeros(tree.n());
    x[tree.source()] = 1.0;
    for _ in 0..steps {
        x = &a * x;
    }
    x.iter().map(|&v| v != 0.0).collect()
}

/// Infection loss by trying every step with [`oracle_snapshot`].
pub fn oracle_infection_loss(tree: &PropagationTree, f: &[bool]) -> f64 {
    let mut best = usize::MAX;
    let mut x = DVector::zeros(tree.n());
    x[tree.source()] = 1.0;
    let a = tree.shift_matrix();
    for _ in 0..=tree.n() {
        let diff = x.iter().zip(f).filter(|(v, fv)| (**v != 0.0) != **fv).count();
        best = best.min(diff);
        let next = &a * &x;
        if next.iter().zip(x.iter()).all(|(p, q)| (*p != 0.0) == (*q != 0.0)) {
            break;
        }
        x = next;
    }
    (best as f64).sqrt()
}

/// The tree rewiring, recomputed with explicit adjacency lists and a fresh
/// breadth-first path search at every step.
pub fn oracle_rewire(g: &Graph, fast: &[EdgeKey], tree: &PropagationTree) -> Vec<EdgeKey> {
    let n = g.n();
    let dist = g.bfs_distances(tree.source());
    let ed = |e: EdgeKey| dist[e.0].min(dist[e.1]);
    let fast_set: HashSet<EdgeKey> = fast.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
    let mut order: Vec<EdgeKey> = fast_set.iter().copied().collect();
    order.sort_by_key(|&e| (ed(e), e));
    let mut edges: HashSet<EdgeKey> = tree.edges().into_iter().collect();
    for (u, v) in order {
        if edges.contains(&(u, v)) {
            continue;
        }
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in &edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut prev = vec![usize::MAX; n];
        prev[u] = u;
        let mut queue = std::collections::VecDeque::from([u]);
        while let Some(x) = queue.pop_front() {
            for &y in &adj[x] {
                if prev[y] == usize::MAX {
                    prev[y] = x;
                    queue.push_back(y);
                }
            }
        }
        let mut path = Vec::new();
        let mut x = v;
        while x != u {
            path.push((x.min(prev[x]), x.max(prev[x])));
            x = prev[x];
        }
        let mut candidates: Vec<EdgeKey> = path.into_iter().filter(|e| !fast_set.contains(e)).collect();
        candidates.sort_by_key(|&e| (ed(e), e));
        let removed = candidates[(candidates.len() - 1) / 2];
        edges.remove(&removed);
        edges.insert((u, v));
    }
    let mut out: Vec<EdgeKey> = edges.into_iter().collect();
    out.sort_unstable();
    out
}

/// `F_{h#,Γ}(f)` as the double sum over Z-atoms and frequencies.
pub fn oracle_pushforward_conv(h: &BaseChangeMap, z_space: &OperatorSpace, x_space: &OperatorSpace, kernel: &SpectralKernel, f: &Signal) -> Signal {
    let n = x_space.n();
    let mut out = vec![0.0; n];
    for (j, &k) in h.target_of().iter().enumerate() {
        let u = x_space.atom(k).eigenvectors();
        for i in 0..n {
            let coeff: f64 = (0..n).map(|v| u[(v, i)] * f.values()[v]).sum();
            let scale = z_space.weights()[j] * kernel.values()[(k, i)] * coeff;
            for (v, o) in out.iter_mut().enumerate() {
                *o += scale * u[(v, i)];
            }
        }
    }
    Signal::from_vec(out)
}

/// Pullback weights as the double sum over X-atoms and Z-atoms.
pub fn oracle_pullback_weights(h: &BaseChangeMap, x_weights: &[f64]) -> Vec<f64> {
    (0..h.z_len())
        .map(|j| {
            (0..h.x_len())
                .map(|k| x_weights[k] * h.fiber(k).iter().filter(|&&(z, _)| z == j).map(|&(_, w)| w).sum::<f64>())
                .sum()
        })
        .collect()
}

/// Gibbs weights without any stabilization.
pub fn oracle_gibbs(theta: &[f64], prior: &[f64], gamma: f64) -> Vec<f64> {
    let raw: Vec<f64> = theta.iter().zip(prior).map(|(t, p)| (-gamma * t).exp() * p).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|r| r / total).collect()
}

/// Random symmetric operator with entries in `[-1, 1]`.
pub fn random_operator<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ShiftOperator {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    make_operator((&a + a.transpose()) * 0.5).expect("symmetric by construction")
}

/// Random probability vector with entries bounded away from zero.
pub fn random_weights<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|w| w / total).collect()
}

/// Random finite space of `atoms` random operators on `n` vertices.
pub fn random_space<R: Rng + ?Sized>(n: usize, atoms: usize, rng: &mut R) -> OperatorSpace {
    let ops = (0..atoms).map(|_| random_operator(n, rng)).collect();
    discrete_space(ops, &random_weights(atoms, rng)).expect("valid by construction")
}

pub fn random_signal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Signal {
    Signal::from_vec((0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
}

/// Random band mask with at least one kept and one dropped entry when possible.
pub fn random_band<R: Rng + ?Sized>(space: &OperatorSpace, rng: &mut R) -> BandSpec {
    let mask = DMatrix::from_fn(space.len(), space.n(), |_, _| rng.random_bool(0.5));
    BandSpec::from_mask(space, mask).expect("shape matches")
}

/// Outcome of one `selftest` property.
#[derive(Clone, Debug, PartialEq)]
pub struct PropertyResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, worst: f64, tol: f64) -> PropertyResult {
    PropertyResult { name, passed: worst <= tol, detail: format!("worst {worst:.3e}, tolerance {tol:.1e}") }
}

fn flag(name: &'static str, ok: bool, detail: String) -> PropertyResult {
    PropertyResult { name, passed: ok, detail }
}

/// Quick invariant sweep over seeded random instances.
pub fn selftest(seed: u64, instances: usize) -> Result<Vec<PropertyResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    let (mut inv, mut pars) = (0.0f64, 0.0f64);
    for _ in 0..instances {
        let n = rng.random_range(2..=12);
        let s = random_space(n, rng.random_range(1..=6), &mut rng);
        let f = random_signal(n, &mut rng);
        let fhat = spectral::fourier(&s, &f)?;
        let back = spectral::inverse_fourier(&s, &fhat)?;
        inv = inv.max((back.as_vector() - f.as_vector()).norm() / f.norm());
        pars = pars.max((fhat.weighted_energy(&s)? - f.norm().powi(2)).abs() / f.norm().powi(2));
        let gft = oracle_gft(&s, &f);
        inv = inv.max((gft - fhat.values()).amax());
    }
    out.push(check("left inverse", inv, 1e-10));
    out.push(check("parseval", pars, 1e-10));

    let mut conv = 0.0f64;
    for _ in 0..instances {
        let n = rng.random_range(2..=10);
        let atoms = rng.random_range(1..=5);
        let s = random_space(n, atoms, &mut rng);
        let k = SpectralKernel::new(&s, DMatrix::from_fn(atoms, n, |_, _| rng.random_range(-2.0..2.0)))?;
        let f = random_signal(n, &mut rng);
        let m = filters::filter_matrix(&s, &k)?;
        conv = conv.max((m * f.as_vector() - oracle_convolve(&s, &k, &f).as_vector()).amax());
    }
    out.push(check("expectation form", conv, 1e-12));

    let mut poly = 0.0f64;
    for _ in 0..instances {
        let n = rng.random_range(2..=5);
        let s = random_space(n, 2, &mut rng);
        if !s.atoms().iter().all(|a| min_gap(a) > 0.1) {
            continue;
        }
        let k = SpectralKernel::new(&s, DMatrix::from_fn(2, n, |_, _| rng.random_range(-1.0..1.0)))?;
        let rep = filters::polynomial_rep(&s, &k)?;
        poly = poly.max((rep.expected_matrix(&s) - filters::filter_matrix(&s, &k)?).amax());
    }
    out.push(check("polynomial representation", poly, 1e-8));

    let (mut spec_out, mut lemma, mut thm) = (0.0f64, true, true);
    for _ in 0..instances {
        let n = rng.random_range(3..=10);
        let s = random_space(n, rng.random_range(1..=4), &mut rng);
        let y = random_band(&s, &mut rng);
        let sp = sampling::bandpass_spectrum(&s, &y)?;
        for &l in sp.raw_eigenvalues.iter() {
            spec_out = spec_out.max((-l).max(l - 1.0).max(0.0));
        }
        let f = random_signal(n, &mut rng);
        let eps = sampling::bandlimit_residual(&s, &y, &f)?;
        lemma &= sampling::coefficient_bound_check(&s, &y, &f, eps)?;
        let j = rng.random_range(0..n);
        if sp.eigenvalues.get(j.wrapping_sub(1)).is_some_and(|&l| l >= 1.0 - 1e-6) {
            continue;
        }
        let Ok(plan) = sampling::plan_from_spectrum(&sp, j, None, RecoveryOptions::default(), &mut rng) else {
            continue;
        };
        let rec = sampling::recover(&plan, &sampling::observe(&f, &plan.vertices), eps)?;
        let err = (rec.signal.as_vector() - f.as_vector()).norm();
        let res = sampling::bandlimit_residual(&s, &y, &rec.signal)?;
        thm &= err <= rec.bound_a * (1.0 + 1e-9) + 1e-9 && res <= rec.bound_b * (1.0 + 1e-9) + 1e-9;
    }
    out.push(check("band-pass spectrum in [0, 1]", spec_out, 1e-10));
    out.push(flag("coefficient bound", lemma, "all instances".into()));
    out.push(flag("recovery bounds", thm, "all instances".into()));

    let mut push = 0.0f64;
    for _ in 0..instances {
        let n = rng.random_range(2..=8);
        let (xl, zl) = (rng.random_range(1..=4), rng.random_range(1..=6));
        let x = random_space(n, xl, &mut rng);
        let z = random_space(n, zl, &mut rng);
        let h = BaseChangeMap::new((0..zl).map(|_| rng.random_range(0..xl)).collect(), xl)?;
        let k = SpectralKernel::new(&x, DMatrix::from_fn(xl, n, |_, _| rng.random_range(-1.0..1.0)))?;
        let f = random_signal(n, &mut rng);
        let got = basechange::filter_pushforward_conv(&h, &z, &x, &k, &f)?;
        let pushed = basechange::pushforward_measure(&h, &z, &x)?;
        let k2 = SpectralKernel::new(&pushed, k.values().clone())?;
        let via = filters::convolve(&pushed, &k2, &f)?;
        let oracle = oracle_pushforward_conv(&h, &z, &x, &k, &f);
        push = push.max((got.as_vector() - via.as_vector()).amax()).max((got.as_vector() - oracle.as_vector()).amax());
    }
    out.push(check("pushforward filter", push, 1e-12));

    let (h0, h1) = split_axes(&grid_2d(5, 5))?;
    let (l0, l1) = (h0.laplacian_matrix(), h1.laplacian_matrix());
    let mut stretch = 0.0f64;
    for eta in [0.5, 2.0, 5.0] {
        let map = stretch_map(eta)?;
        for i in 0..=10 {
            let z = i as f64 / 10.0;
            let hx = stretched_operator(&l0, &l1, eta, map.apply(z));
            let lz = &l0 * (1.0 - z) + &l1 * z;
            stretch = stretch.max((&hx - &lz * (eta / (1.0 - z + z * eta))).amax());
        }
    }
    out.push(check("stretching identity", stretch, 1e-12));

    let mut gibbs = 0.0f64;
    for _ in 0..instances {
        let len = rng.random_range(1..=8);
        let theta: Vec<f64> = (0..len).map(|_| rng.random_range(0.0..3.0)).collect();
        let prior = random_weights(len, &mut rng);
        let gamma = rng.random_range(0.0..5.0);
        let w = learning::gibbs_posterior_exact(&theta, &prior, gamma)?;
        let o = oracle_gibbs(&theta, &prior, gamma);
        gibbs = gibbs.max(w.iter().zip(&o).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    out.push(check("exact gibbs weights", gibbs, 1e-12));

    let g = grid_2d(5, 5);
    let edges: Vec<EdgeKey> = g.edges().iter().map(|e| e.key()).collect();
    let mut rewire_ok = true;
    for _ in 0..instances {
        let s = rng.random_range(0..25);
        let t = infection::random_bfs_tree(&g, s, &mut rng)?;
        let count = rng.random_range(0..edges.len());
        let raw: Vec<EdgeKey> = rand::seq::index::sample(&mut rng, edges.len(), count).into_iter().map(|i| edges[i]).collect();
        let fast = infection::acyclic_reduction(&g, &raw, s)?;
        let out_tree = infection::rewire_tree(&g, &fast, &t)?;
        let got = out_tree.edges();
        rewire_ok &= got == oracle_rewire(&g, &fast, &t);
        rewire_ok &= got.len() == 24 && fast.iter().all(|e| got.contains(e));
        let i = rng.random_range(0..=t.height());
        rewire_ok &= infection::snapshot(&t, i) == oracle_snapshot(&t, i);
    }
    out.push(flag("tree rewiring", rewire_ok, "spanning, contains fast edges, matches oracle".into()));

    let family = convex_family(&make_operator(l0)?, &make_operator(l1)?, 3, &Density::Uniform)?;
    let lam = SpectralKernel::eigenvalue_power(&family, 1)?;
    let first = filters::filter_matrix(&family, &lam)?;
    let want = (family.atom(0).matrix() + family.atom(2).matrix()) * 0.5;
    out.push(check("convex family mean", (first - want).amax(), 1e-12));
    Ok(out)
}

/// Smallest gap between consecutive eigenvalues of `op` in signed order.
pub fn min_gap(op: &ShiftOperator) -> f64 {
    let mut l: Vec<f64> = op.eigenvalues().iter().copied().collect();
    l.sort_by(f64::total_cmp);
    l.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}
