//! Base change along a map `h: Z → X` between operator spaces.
//!
//! `h` is stored as an index map from Z-atoms to X-atoms together with a
//! probability vector on every nonempty preimage (the fiberwise measures).
//! Measures and filter families move in both directions, and a kernel `Γ` on
//! `X × [n]` yields two filters: the pullback convolution `F_{h*(Γ)}` on `Z`,
//! and `F_{h#,Γ}`, which convolves with the image operator and aggregates
//! under `μ_Z`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::filters::{convolve, fiber_filter_matrix, filter_matrix, SpectralKernel};
use crate::opspace::{OperatorSpace, ShiftOperator, Signal};
use crate::spectral::check_signal;

/// A monotone bijection between parameter intervals, with its inverse.
#[derive(Clone)]
pub struct ParamMap {
    forward: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    inverse: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl ParamMap {
    pub fn new(
        forward: impl Fn(f64) -> f64 + Send + Sync + 'static,
        inverse: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ParamMap { forward: Arc::new(forward), inverse: Arc::new(inverse) }
    }

    pub fn identity() -> Self {
        Self::new(|t| t, |t| t)
    }

    pub fn apply(&self, t: f64) -> f64 {
        (self.forward)(t)
    }

    pub fn invert(&self, x: f64) -> f64 {
        (self.inverse)(x)
    }
}

impl fmt::Debug for ParamMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ParamMap")
    }
}

/// `h(z) = zη / (1 − z + zη)` on `[0, 1]`, inverse `x / (x + η − xη)`.
pub fn stretch_map(eta: f64) -> Result<ParamMap> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::InvalidArgument(format!("stretch factor must be positive, got {eta}")));
    }
    Ok(ParamMap::new(move |z| z * eta / (1.0 - z + z * eta), move |x| x / (x + eta - x * eta)))
}

/// `H_x = x L1 + (1 − x) η L0`, the horizontally stretched lattice operator.
pub fn stretched_operator(l0: &DMatrix<f64>, l1: &DMatrix<f64>, eta: f64, x: f64) -> DMatrix<f64> {
    l1 * x + l0 * ((1.0 - x) * eta)
}

/// The discretized map `h: Z → X`.
#[derive(Clone, Debug)]
pub struct BaseChangeMap {
    target_of: Vec<usize>,
    x_len: usize,
    /// For every X-atom, `(z index, weight)` over its preimage, ascending z.
    fibers: Vec<Vec<(usize, f64)>>,
    param_map: Option<ParamMap>,
}

impl BaseChangeMap {
    /// `h(Z_j) = X_{target_of[j]}` with uniform fiberwise measures.
    pub fn new(target_of: Vec<usize>, x_len: usize) -> Result<Self> {
        if let Some(&bad) = target_of.iter().find(|&&k| k >= x_len) {
            return Err(Error::IndexOutOfRange { index: bad, len: x_len });
        }
        let mut fibers: Vec<Vec<(usize, f64)>> = vec![Vec::new(); x_len];
        for (j, &k) in target_of.iter().enumerate() {
            fibers[k].push((j, 0.0));
        }
        for fiber in &mut fibers {
            let w = 1.0 / fiber.len().max(1) as f64;
            for entry in fiber.iter_mut() {
                entry.1 = w;
            }
        }
        Ok(BaseChangeMap { target_of, x_len, fibers, param_map: None })
    }

    /// The identity map on a space with `len` atoms.
    pub fn identity(len: usize) -> Self {
        Self::new((0..len).collect(), len).expect("identity indices are in range")
    }

    /// Replace the fiberwise measures. `weights[k]` lists the weights of the
    /// preimage of `X_k` in ascending Z order; each nonempty list must sum to
    /// 1 within 1e-12 and carry nonnegative entries.
    pub fn with_fiber_weights(mut self, weights: Vec<Vec<f64>>) -> Result<Self> {
        if weights.len() != self.x_len {
            return Err(Error::DimensionMismatch { expected: self.x_len, got: weights.len() });
        }
        for (k, (fiber, w)) in self.fibers.iter_mut().zip(weights).enumerate() {
            if w.len() != fiber.len() {
                return Err(Error::DimensionMismatch { expected: fiber.len(), got: w.len() });
            }
            if w.is_empty() {
                continue;
            }
            let sum: f64 = w.iter().sum();
            if w.iter().any(|v| !(*v >= 0.0)) || (sum - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidWeights(format!("fiber weights over X-atom {k} must be a probability vector")));
            }
            for (entry, v) in fiber.iter_mut().zip(w) {
                entry.1 = v;
            }
        }
        Ok(self)
    }

    pub fn with_param_map(mut self, map: ParamMap) -> Self {
        self.param_map = Some(map);
        self
    }

    pub fn target_of(&self) -> &[usize] {
        &self.target_of
    }

    pub fn z_len(&self) -> usize {
        self.target_of.len()
    }

    pub fn x_len(&self) -> usize {
        self.x_len
    }

    /// `(z index, fiber weight)` over the preimage of `X_k`.
    pub fn fiber(&self, k: usize) -> &[(usize, f64)] {
        &self.fibers[k]
    }

    pub fn param_map(&self) -> Option<&ParamMap> {
        self.param_map.as_ref()
    }

    pub fn is_injective(&self) -> bool {
        self.fibers.iter().all(|f| f.len() <= 1)
    }

    fn check_z(&self, z_space: &OperatorSpace) -> Result<()> {
        if z_space.len() != self.z_len() {
            return Err(Error::DimensionMismatch { expected: self.z_len(), got: z_space.len() });
        }
        Ok(())
    }

    fn check_x(&self, x_space: &OperatorSpace) -> Result<()> {
        if x_space.len() != self.x_len {
            return Err(Error::DimensionMismatch { expected: self.x_len, got: x_space.len() });
        }
        Ok(())
    }

    fn check_pair(&self, z_space: &OperatorSpace, x_space: &OperatorSpace) -> Result<()> {
        self.check_z(z_space)?;
        self.check_x(x_space)?;
        if z_space.n() != x_space.n() {
            return Err(Error::DimensionMismatch { expected: x_space.n(), got: z_space.n() });
        }
        Ok(())
    }
}

/// Map each Z parameter through `map` and send it to the nearest X parameter
/// (ties to the lower index). Returns the map and the largest distance between
/// a mapped node and its assigned X node.
pub fn nearest_node_map(z_params: &[f64], x_params: &[f64], map: ParamMap) -> Result<(BaseChangeMap, f64)> {
    if x_params.is_empty() {
        return Err(Error::InvalidArgument("target space has no parameters".into()));
    }
    let mut worst = 0.0f64;
    let target_of = z_params
        .iter()
        .map(|&t| {
            let x = map.apply(t);
            let (k, d) = x_params
                .iter()
                .enumerate()
                .map(|(k, &p)| (k, (p - x).abs()))
                .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
            worst = worst.max(d);
            k
        })
        .collect();
    Ok((BaseChangeMap::new(target_of, x_params.len())?.with_param_map(map), worst))
}

/// Coarsening: Z-nodes in `[breaks[i], breaks[i+1])` (the last interval closed)
/// go to `X_i`.
pub fn coarsening_map(z_params: &[f64], breaks: &[f64]) -> Result<BaseChangeMap> {
    if breaks.len() < 2 || breaks.windows(2).any(|b| !(b[0] < b[1])) {
        return Err(Error::InvalidArgument("breakpoints must be strictly increasing, at least two".into()));
    }
    let k = breaks.len() - 1;
    let target_of = z_params
        .iter()
        .map(|&t| {
            if t < breaks[0] || t > breaks[k] {
                return Err(Error::InvalidArgument(format!("parameter {t} outside the coarsening range")));
            }
            Ok((0..k).find(|&i| t < breaks[i + 1]).unwrap_or(k - 1))
        })
        .collect::<Result<Vec<_>>>()?;
    BaseChangeMap::new(target_of, k)
}

/// `h_*(μ_Z)`: `X_k` receives the total Z-weight of its preimage.
pub fn pushforward_weights(h: &BaseChangeMap, z_space: &OperatorSpace) -> Result<Vec<f64>> {
    h.check_z(z_space)?;
    let mut w = vec![0.0; h.x_len];
    for (j, &k) in h.target_of.iter().enumerate() {
        w[k] += z_space.weights()[j];
    }
    Ok(w)
}

/// `x_space` reweighted by `h_*(μ_Z)`.
pub fn pushforward_measure(h: &BaseChangeMap, z_space: &OperatorSpace, x_space: &OperatorSpace) -> Result<OperatorSpace> {
    h.check_pair(z_space, x_space)?;
    x_space.with_weights(&pushforward_weights(h, z_space)?)
}

/// `h*(μ_X)`: `Z_j` receives `μ_X(h(Z_j))` times its fiber weight.
pub fn pullback_weights(h: &BaseChangeMap, x_space: &OperatorSpace) -> Result<Vec<f64>> {
    h.check_x(x_space)?;
    let mut w = vec![0.0; h.z_len()];
    for (k, fiber) in h.fibers.iter().enumerate() {
        let wx = x_space.weights()[k];
        if fiber.is_empty() {
            if wx > 0.0 {
                return Err(Error::MissingFiber(k));
            }
            continue;
        }
        for &(j, fw) in fiber {
            w[j] += wx * fw;
        }
    }
    Ok(w)
}

/// `z_space` reweighted by `h*(μ_X)`.
pub fn pullback_measure(h: &BaseChangeMap, z_space: &OperatorSpace, x_space: &OperatorSpace) -> Result<OperatorSpace> {
    h.check_pair(z_space, x_space)?;
    z_space.with_weights(&pullback_weights(h, x_space)?)
}

/// `h*(F)(Z_j) = F(h(Z_j))`.
pub fn pullback_filter_family(h: &BaseChangeMap, family: &[DMatrix<f64>]) -> Result<Vec<DMatrix<f64>>> {
    if family.len() != h.x_len {
        return Err(Error::DimensionMismatch { expected: h.x_len, got: family.len() });
    }
    Ok(h.target_of.iter().map(|&k| family[k].clone()).collect())
}

/// `h_*(F)(X_k) = Σ_{Z_j ∈ h⁻¹(X_k)} fiber weight × F(Z_j)`.
///
/// X-atoms with an empty preimage get the zero matrix when their weight in
/// `x_space` is zero and are an error otherwise.
pub fn pushforward_filter_family(
    h: &BaseChangeMap,
    family: &[DMatrix<f64>],
    x_space: &OperatorSpace,
) -> Result<Vec<DMatrix<f64>>> {
    h.check_x(x_space)?;
    if family.len() != h.z_len() {
        return Err(Error::DimensionMismatch { expected: h.z_len(), got: family.len() });
    }
    let n = x_space.n();
    h.fibers
        .iter()
        .enumerate()
        .map(|(k, fiber)| {
            if fiber.is_empty() {
                if x_space.weights()[k] > 0.0 {
                    return Err(Error::MissingFiber(k));
                }
                return Ok(DMatrix::zeros(n, n));
            }
            let mut acc = DMatrix::zeros(n, n);
            for &(j, w) in fiber {
                acc += &family[j] * w;
            }
            Ok(acc)
        })
        .collect()
}

/// The kernel `h*(Γ)` on `Z × [n]`: `(j, i) ↦ Γ(h(Z_j), i)`.
pub fn pullback_kernel(h: &BaseChangeMap, z_space: &OperatorSpace, x_space: &OperatorSpace, x_kernel: &SpectralKernel) -> Result<SpectralKernel> {
    h.check_pair(z_space, x_space)?;
    if x_kernel.space_id() != x_space.id() {
        return Err(Error::SpaceMismatch);
    }
    let values = x_kernel.values();
    SpectralKernel::from_fn(z_space, |j, i, _| values[(h.target_of[j], i)])
}

/// `F_{h*(Γ)}(f)`: convolution on `Z` with the pulled-back kernel.
pub fn filter_pullback_conv(
    h: &BaseChangeMap,
    z_space: &OperatorSpace,
    x_space: &OperatorSpace,
    x_kernel: &SpectralKernel,
    f: &Signal,
) -> Result<Signal> {
    convolve(z_space, &pullback_kernel(h, z_space, x_space, x_kernel)?, f)
}

/// Matrix of `F_{h*(Γ)}`.
pub fn pullback_conv_matrix(h: &BaseChangeMap, z_space: &OperatorSpace, x_space: &OperatorSpace, x_kernel: &SpectralKernel) -> Result<DMatrix<f64>> {
    filter_matrix(z_space, &pullback_kernel(h, z_space, x_space, x_kernel)?)
}

/// Matrix of `F_{h#,Γ}`: `Σ_j w^Z_j U_{h(Z_j)} diag(Γ_{h(Z_j)}) U_{h(Z_j)}ᵀ`,
/// summed in ascending Z order.
pub fn pushforward_conv_matrix(h: &BaseChangeMap, z_space: &OperatorSpace, x_space: &OperatorSpace, x_kernel: &SpectralKernel) -> Result<DMatrix<f64>> {
    h.check_pair(z_space, x_space)?;
    if x_kernel.space_id() != x_space.id() {
        return Err(Error::SpaceMismatch);
    }
    let n = x_space.n();
    let fibers: Vec<DMatrix<f64>> = (0..h.x_len)
        .map(|k| {
            let row: Vec<f64> = x_kernel.values().row(k).iter().copied().collect();
            fiber_filter_matrix(x_space.atom(k), &row)
        })
        .collect();
    let mut acc = DMatrix::zeros(n, n);
    for (j, &k) in h.target_of.iter().enumerate() {
        acc += &fibers[k] * z_space.weights()[j];
    }
    Ok(acc)
}

/// `F_{h#,Γ}(f)`.
pub fn filter_pushforward_conv(
    h: &BaseChangeMap,
    z_space: &OperatorSpace,
    x_space: &OperatorSpace,
    x_kernel: &SpectralKernel,
    f: &Signal,
) -> Result<Signal> {
    check_signal(x_space, f)?;
    let m = pushforward_conv_matrix(h, z_space, x_space, x_kernel)?;
    Ok(Signal::from_vector(m * f.as_vector()))
}

/// Atom of a convex family at an arbitrary parameter.
pub fn family_atom(l0: &ShiftOperator, l1: &ShiftOperator, t: f64) -> DMatrix<f64> {
    l0.matrix() * (1.0 - t) + l1.matrix() * t
}
