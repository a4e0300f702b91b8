//! Operator-space and base-change manifests.
//!
//! A space manifest is a TOML file with a `kind` key:
//!
//! ```toml
//! kind = "convex-pair"      # L_t = (1 - t) L0 + t L1 from two edge lists
//! l0 = "horizontal.txt"
//! l1 = "vertical.txt"
//! nodes = 16                # Gauss-Legendre nodes
//! density = "uniform"       # or "linear"
//! ```
//!
//! Other kinds are `discrete` (`matrices` CSV paths or `graphs` edge lists,
//! optional `weights`, `params`, `domain`), `lattice-pair` (`rows`, `cols`,
//! `nodes`, `density`) and `knn-family` (`points` CSV, list `k`, optional
//! `weighting`). Every kind accepts `weights_file`, a CSV of atom weights that
//! replaces the manifest's own.

use std::fs;
use std::path::{Path, PathBuf};

use probgsp::basechange::BaseChangeMap;
use probgsp::graphs::{grid_2d, knn_graph, laplacian, split_axes, Graph, KnnWeighting};
use probgsp::io::{read_edge_list, read_matrix, read_weights};
use probgsp::opspace::{convex_family, discrete_space, make_operator, Density};
use probgsp::OperatorSpace;
use serde::{Deserialize, Serialize};

use crate::config::{read_toml, resolve_existing};
use crate::{invalid, CliError, CliResult};

fn default_nodes() -> usize {
    16
}

fn default_density() -> String {
    "uniform".into()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightingName {
    #[default]
    Unweighted,
    Gaussian,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SpaceManifest {
    Discrete {
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        matrices: Vec<String>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        graphs: Vec<String>,
        n: Option<usize>,
        weights: Option<Vec<f64>>,
        params: Option<Vec<f64>>,
        domain: Option<[f64; 2]>,
        weights_file: Option<String>,
    },
    ConvexPair {
        l0: String,
        l1: String,
        n: Option<usize>,
        #[serde(default = "default_nodes")]
        nodes: usize,
        #[serde(default = "default_density")]
        density: String,
        weights_file: Option<String>,
    },
    LatticePair {
        rows: usize,
        cols: usize,
        #[serde(default = "default_nodes")]
        nodes: usize,
        #[serde(default = "default_density")]
        density: String,
        weights_file: Option<String>,
    },
    KnnFamily {
        points: String,
        k: Vec<usize>,
        #[serde(default)]
        weighting: WeightingName,
        weights: Option<Vec<f64>>,
        weights_file: Option<String>,
    },
}

/// A loaded space plus what the learning code needs to know about it.
pub struct LoadedSpace {
    pub space: OperatorSpace,
    /// Prior density on the parameter interval, when the space has one.
    pub density: Option<Density>,
}

fn read_graph_pair(a: &Path, b: &Path, n: Option<usize>) -> CliResult<(Graph, Graph)> {
    let n = match n {
        Some(n) => n,
        None => read_edge_list(a, None)?.n().max(read_edge_list(b, None)?.n()),
    };
    Ok((read_edge_list(a, Some(n))?, read_edge_list(b, Some(n))?))
}

fn read_points(path: &Path) -> CliResult<Vec<Vec<f64>>> {
    let m = read_matrix(path)?;
    Ok((0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect())
}

impl SpaceManifest {
    fn weights_file(&self) -> Option<&str> {
        match self {
            SpaceManifest::Discrete { weights_file, .. }
            | SpaceManifest::ConvexPair { weights_file, .. }
            | SpaceManifest::LatticePair { weights_file, .. }
            | SpaceManifest::KnnFamily { weights_file, .. } => weights_file.as_deref(),
        }
    }

    /// Build the space; relative paths resolve against `base`.
    pub fn load(&self, base: &Path) -> CliResult<LoadedSpace> {
        let loaded = match self {
            SpaceManifest::Discrete { matrices, graphs, n, weights, params, domain, .. } => {
                let mut ops = Vec::new();
                for p in matrices {
                    ops.push(make_operator(read_matrix(&resolve_existing(base, p)?)?)?);
                }
                if !graphs.is_empty() {
                    let paths = graphs.iter().map(|p| resolve_existing(base, p)).collect::<CliResult<Vec<_>>>()?;
                    let n = match n {
                        Some(n) => *n,
                        None => paths.iter().map(|p| read_edge_list(p, None).map(|g| g.n())).collect::<probgsp::Result<Vec<_>>>()?.into_iter().max().unwrap_or(0),
                    };
                    for p in &paths {
                        ops.push(laplacian(&read_edge_list(p, Some(n))?)?);
                    }
                }
                if ops.is_empty() {
                    return invalid("discrete space needs `matrices` or `graphs`");
                }
                let len = ops.len();
                let w = weights.clone().unwrap_or_else(|| vec![1.0 / len as f64; len]);
                let mut space = discrete_space(ops, &w)?;
                let mut density = None;
                match (params, domain) {
                    (Some(p), Some(d)) => {
                        space = space.with_params(p.clone(), (d[0], d[1]))?;
                        density = Some(Density::Uniform);
                    }
                    (None, None) => {}
                    _ => return invalid("`params` and `domain` must be given together"),
                }
                LoadedSpace { space, density }
            }
            SpaceManifest::ConvexPair { l0, l1, n, nodes, density, .. } => {
                let (g0, g1) = read_graph_pair(&resolve_existing(base, l0)?, &resolve_existing(base, l1)?, *n)?;
                let d = Density::parse(density)?;
                let space = convex_family(&laplacian(&g0)?, &laplacian(&g1)?, *nodes, &d)?;
                LoadedSpace { space, density: Some(d) }
            }
            SpaceManifest::LatticePair { rows, cols, nodes, density, .. } => {
                let (h, v) = split_axes(&grid_2d(*rows, *cols))?;
                let d = Density::parse(density)?;
                let space = convex_family(&laplacian(&h)?, &laplacian(&v)?, *nodes, &d)?;
                LoadedSpace { space, density: Some(d) }
            }
            SpaceManifest::KnnFamily { points, k, weighting, weights, .. } => {
                let pts = read_points(&resolve_existing(base, points)?)?;
                if k.is_empty() || k.windows(2).any(|w| w[0] >= w[1]) {
                    return invalid("`k` must be a nonempty strictly increasing list");
                }
                let wt = match weighting {
                    WeightingName::Unweighted => KnnWeighting::Unweighted,
                    WeightingName::Gaussian => KnnWeighting::Gaussian,
                };
                let ops = k
                    .iter()
                    .map(|&kk| knn_graph(&pts, kk, wt).and_then(|g| laplacian(&g)))
                    .collect::<probgsp::Result<Vec<_>>>()?;
                let len = ops.len();
                let w = weights.clone().unwrap_or_else(|| vec![1.0 / len as f64; len]);
                let params: Vec<f64> = k.iter().map(|&kk| kk as f64).collect();
                let domain = (params[0], params[len - 1]);
                let space = discrete_space(ops, &w)?.with_params(params, domain)?;
                LoadedSpace { space, density: Some(Density::Uniform) }
            }
        };
        match self.weights_file() {
            Some(p) => {
                let w = read_weights(&resolve_existing(base, p)?)?;
                let space = loaded.space.with_weights(&w)?;
                Ok(LoadedSpace { space, density: loaded.density })
            }
            None => Ok(loaded),
        }
    }

    /// The same manifest with input paths made absolute and `weights_file`
    /// replaced.
    pub fn relocated(&self, base: &Path, new_weights: Option<String>) -> CliResult<SpaceManifest> {
        let abs = |p: &String| -> CliResult<String> {
            let path = fs::canonicalize(base.join(p)).map_err(|e| CliError::Invalid(format!("{p}: {e}")))?;
            Ok(path.display().to_string())
        };
        let mut m = self.clone();
        match &mut m {
            SpaceManifest::Discrete { matrices, graphs, weights_file, .. } => {
                *matrices = matrices.iter().map(abs).collect::<CliResult<_>>()?;
                *graphs = graphs.iter().map(abs).collect::<CliResult<_>>()?;
                *weights_file = new_weights;
            }
            SpaceManifest::ConvexPair { l0, l1, weights_file, .. } => {
                *l0 = abs(l0)?;
                *l1 = abs(l1)?;
                *weights_file = new_weights;
            }
            SpaceManifest::LatticePair { weights_file, .. } => *weights_file = new_weights,
            SpaceManifest::KnnFamily { points, weights_file, .. } => {
                *points = abs(points)?;
                *weights_file = new_weights;
            }
        }
        Ok(m)
    }
}

/// Read a manifest file and load its space.
pub fn load_space(path: &Path) -> CliResult<(SpaceManifest, LoadedSpace)> {
    let manifest: SpaceManifest = read_toml(path)?;
    let base: PathBuf = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let loaded = manifest.load(&base)?;
    Ok((manifest, loaded))
}

/// Parse a base-change manifest: one `z -> x` pair per line, optionally
/// followed by a fiber weight. Either every line has a weight or none does.
/// `#` starts a comment.
pub fn parse_map(text: &str, z_len: usize, x_len: usize) -> CliResult<BaseChangeMap> {
    let mut target: Vec<Option<usize>> = vec![None; z_len];
    let mut weight: Vec<Option<f64>> = vec![None; z_len];
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = || CliError::Invalid(format!("map line {}: expected `z -> x [weight]`, got `{raw}`", lineno + 1));
        let (lhs, rhs) = line.split_once("->").ok_or_else(bad)?;
        let z: usize = lhs.trim().parse().map_err(|_| bad())?;
        let mut parts = rhs.split_whitespace();
        let x: usize = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let w: Option<f64> = parts.next().map(|s| s.parse().map_err(|_| bad())).transpose()?;
        if parts.next().is_some() {
            return Err(bad());
        }
        if z >= z_len {
            return invalid(format!("map line {}: Z-atom {z} out of range (Z has {z_len} atoms)", lineno + 1));
        }
        if target[z].is_some() {
            return invalid(format!("map line {}: Z-atom {z} mapped twice", lineno + 1));
        }
        target[z] = Some(x);
        weight[z] = w;
    }
    let target_of = target
        .iter()
        .enumerate()
        .map(|(z, t)| t.ok_or_else(|| CliError::Invalid(format!("Z-atom {z} has no image"))))
        .collect::<CliResult<Vec<_>>>()?;
    let h = BaseChangeMap::new(target_of.clone(), x_len)?;
    let given = weight.iter().filter(|w| w.is_some()).count();
    if given == 0 {
        return Ok(h);
    }
    if given != z_len {
        return invalid("fiber weights must be given on every line or on none");
    }
    let mut fibers = vec![Vec::new(); x_len];
    for (z, &x) in target_of.iter().enumerate() {
        fibers[x].push(weight[z].expect("all present"));
    }
    Ok(h.with_fiber_weights(fibers)?)
}
