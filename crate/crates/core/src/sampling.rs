//! Band-pass filters, bandlimited signals and recovery from vertex samples.
//!
//! Eigenvalues of `B_Y` are indexed from 1 in the formulas below; in code
//! `lambda[j - 1]` is `λ_j`, and the split index `j = 0` uses `λ_0 = 0`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};
use crate::filters::{filter_matrix, SpectralKernel};
use crate::opspace::{canonicalize_signs, OperatorSpace, Signal, SpaceId};
use crate::spectral::check_signal;

/// Default upper bound on the condition number of an accepted recovery matrix.
pub const DEFAULT_CONDITION_THRESHOLD: f64 = 1e8;
/// Default number of random vertex subsets tried before giving up.
pub const DEFAULT_MAX_ATTEMPTS: usize = 1000;

/// The measurable set `Y ⊂ X × [n]`: `mask[(j, i)]` is true when frequency `i`
/// of atom `j` is kept.
#[derive(Clone, Debug, PartialEq)]
pub struct BandSpec {
    mask: DMatrix<bool>,
    space_id: SpaceId,
}

impl BandSpec {
    pub fn from_mask(space: &OperatorSpace, mask: DMatrix<bool>) -> Result<Self> {
        if mask.shape() != (space.len(), space.n()) {
            return Err(Error::DimensionMismatch { expected: space.len() * space.n(), got: mask.len() });
        }
        Ok(BandSpec { mask, space_id: space.id() })
    }

    pub fn everything(space: &OperatorSpace) -> Self {
        BandSpec { mask: DMatrix::from_element(space.len(), space.n(), true), space_id: space.id() }
    }

    pub fn empty(space: &OperatorSpace) -> Self {
        BandSpec { mask: DMatrix::from_element(space.len(), space.n(), false), space_id: space.id() }
    }

    /// The lowest `count` frequencies of every atom.
    pub fn lowpass(space: &OperatorSpace, count: usize) -> Result<Self> {
        if count > space.n() {
            return Err(Error::InvalidArgument(format!("lowpass count {count} exceeds n = {}", space.n())));
        }
        Ok(BandSpec { mask: DMatrix::from_fn(space.len(), space.n(), |_, i| i < count), space_id: space.id() })
    }

    pub fn mask(&self) -> &DMatrix<bool> {
        &self.mask
    }

    pub fn space_id(&self) -> SpaceId {
        self.space_id
    }

    /// The indicator `1_Y` as a spectral kernel.
    pub fn indicator(&self, space: &OperatorSpace) -> Result<SpectralKernel> {
        if self.space_id != space.id() {
            return Err(Error::SpaceMismatch);
        }
        SpectralKernel::new(space, self.mask.map(|b| if b { 1.0 } else { 0.0 }))
    }
}

/// `B_Y`, the convolution filter with kernel `1_Y`.
pub fn bandpass_matrix(space: &OperatorSpace, y: &BandSpec) -> Result<DMatrix<f64>> {
    filter_matrix(space, &y.indicator(space)?)
}

/// `‖B_Y f − f‖`.
pub fn bandlimit_residual(space: &OperatorSpace, y: &BandSpec, f: &Signal) -> Result<f64> {
    check_signal(space, f)?;
    let b = bandpass_matrix(space, y)?;
    Ok((b * f.as_vector() - f.as_vector()).norm())
}

/// Eigendecomposition of a symmetric band-pass matrix, ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct BandpassSpectrum {
    /// Ascending, clamped to `[0, 1]`.
    pub eigenvalues: DVector<f64>,
    /// Column `i` pairs with `eigenvalues[i]`; signs canonicalized.
    pub eigenvectors: DMatrix<f64>,
    /// Eigenvalues before clamping.
    pub raw_eigenvalues: DVector<f64>,
}

/// Spectrum of a band-pass matrix already in hand.
pub fn spectrum_of(b: &DMatrix<f64>) -> BandpassSpectrum {
    let n = b.nrows();
    let sym = (b + b.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &c| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[c]).then(a.cmp(&c)));
    let raw = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    canonicalize_signs(&mut vectors);
    BandpassSpectrum { eigenvalues: raw.map(|l| l.clamp(0.0, 1.0)), eigenvectors: vectors, raw_eigenvalues: raw }
}

pub fn bandpass_spectrum(space: &OperatorSpace, y: &BandSpec) -> Result<BandpassSpectrum> {
    Ok(spectrum_of(&bandpass_matrix(space, y)?))
}

/// Check `Σ_{i≤j} a_i² ≤ ε²/(1−λ_j)²` for every `j` with `λ_j ≠ 1`.
pub fn coefficient_bound_check(space: &OperatorSpace, y: &BandSpec, f: &Signal, epsilon: f64) -> Result<bool> {
    check_signal(space, f)?;
    let spec = bandpass_spectrum(space, y)?;
    let a = spec.eigenvectors.tr_mul(f.as_vector());
    let mut partial = 0.0;
    for (i, &lambda) in spec.eigenvalues.iter().enumerate() {
        partial += a[i] * a[i];
        let gap = 1.0 - lambda;
        if gap <= 1e-12 {
            continue;
        }
        let rhs = (epsilon / gap).powi(2);
        if partial > rhs * (1.0 + 1e-9) + 1e-12 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Everything needed to reconstruct a signal from its values on a uniqueness set.
#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryPlan {
    pub j: usize,
    pub vertices: Vec<usize>,
    /// Columns `u_{j+1}, …, u_n` of the `B_Y` eigenbasis.
    pub u_gt: DMatrix<f64>,
    /// Rows of `u_gt` at `vertices`.
    pub g: DMatrix<f64>,
    /// `‖G⁻¹‖`.
    pub sigma: f64,
    /// `λ_j` (0 when `j = 0`).
    pub lambda_j: f64,
    pub condition: f64,
    pub log_abs_det: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecoveryOptions {
    pub condition_threshold: f64,
    pub max_attempts: usize,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        RecoveryOptions { condition_threshold: DEFAULT_CONDITION_THRESHOLD, max_attempts: DEFAULT_MAX_ATTEMPTS }
    }
}

fn submatrix_stats(g: &DMatrix<f64>) -> (f64, f64, f64) {
    let sv = g.clone().svd(false, false).singular_values;
    let (smax, smin) = (sv.max(), sv.min());
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    let log_abs_det = sv.iter().map(|s| s.ln()).sum();
    (condition, smin, log_abs_det)
}

fn rows_of(u: &DMatrix<f64>, vertices: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(vertices.len(), u.ncols(), |r, c| u[(vertices[r], c)])
}

/// Build a recovery plan for split index `j`.
///
/// With `vertices` given they are used as is (and must form a well-conditioned
/// uniqueness set); otherwise random `(n − j)`-subsets are drawn until one is
/// accepted.
pub fn plan_recovery<R: Rng + ?Sized>(
    space: &OperatorSpace,
    y: &BandSpec,
    j: usize,
    vertices: Option<&[usize]>,
    options: RecoveryOptions,
    rng: &mut R,
) -> Result<RecoveryPlan> {
    let spec = bandpass_spectrum(space, y)?;
    plan_from_spectrum(&spec, j, vertices, options, rng)
}

/// [`plan_recovery`] on a precomputed spectrum.
pub fn plan_from_spectrum<R: Rng + ?Sized>(
    spec: &BandpassSpectrum,
    j: usize,
    vertices: Option<&[usize]>,
    options: RecoveryOptions,
    rng: &mut R,
) -> Result<RecoveryPlan> {
    let n = spec.eigenvalues.len();
    if j >= n {
        return Err(Error::InvalidArgument(format!("split index {j} must be below n = {n}")));
    }
    let m = n - j;
    let u_gt = spec.eigenvectors.columns(j, m).into_owned();
    let lambda_j = if j == 0 { 0.0 } else { spec.eigenvalues[j - 1] };
    let finish = |vertices: Vec<usize>, g: DMatrix<f64>, condition: f64, smin: f64, log_abs_det: f64| RecoveryPlan {
        j,
        vertices,
        u_gt: u_gt.clone(),
        g,
        sigma: 1.0 / smin,
        lambda_j,
        condition,
        log_abs_det,
    };

    if let Some(given) = vertices {
        if given.len() != m {
            return Err(Error::DimensionMismatch { expected: m, got: given.len() });
        }
        let mut seen = vec![false; n];
        for &v in given {
            if v >= n {
                return Err(Error::IndexOutOfRange { index: v, len: n });
            }
            if std::mem::replace(&mut seen[v], true) {
                return Err(Error::InvalidArgument(format!("vertex {v} listed twice")));
            }
        }
        let g = rows_of(&u_gt, given);
        let (condition, smin, log_abs_det) = submatrix_stats(&g);
        if !(condition <= options.condition_threshold) {
            return Err(Error::NoUniquenessSet { attempts: 1, best_condition: condition });
        }
        return Ok(finish(given.to_vec(), g, condition, smin, log_abs_det));
    }

    let mut best = f64::INFINITY;
    for _ in 0..options.max_attempts.max(1) {
        let mut chosen = sample(rng, n, m).into_vec();
        chosen.sort_unstable();
        let g = rows_of(&u_gt, &chosen);
        let (condition, smin, log_abs_det) = submatrix_stats(&g);
        if condition <= options.condition_threshold {
            return Ok(finish(chosen, g, condition, smin, log_abs_det));
        }
        if condition < best {
            best = condition;
        }
    }
    Err(Error::NoUniquenessSet { attempts: options.max_attempts.max(1), best_condition: best })
}

/// Result of [`recover`].
#[derive(Clone, Debug, PartialEq)]
pub struct Recovery {
    pub signal: Signal,
    /// Bound on `‖f′ − f‖`.
    pub bound_a: f64,
    /// Bound on the bandlimit residual of `f′`.
    pub bound_b: f64,
}

/// Reconstruct `f′ = U_{>j} G⁻¹ f_obs` from the observed values at
/// `plan.vertices`, for a signal assumed `(Y, ε)`-bandlimited.
pub fn recover(plan: &RecoveryPlan, f_obs: &[f64], epsilon: f64) -> Result<Recovery> {
    if f_obs.len() != plan.vertices.len() {
        return Err(Error::DimensionMismatch { expected: plan.vertices.len(), got: f_obs.len() });
    }
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidArgument("epsilon must be nonnegative".into()));
    }
    if plan.lambda_j >= 1.0 - 1e-10 {
        return Err(Error::DegenerateBound(plan.lambda_j));
    }
    let obs = DVector::from_column_slice(f_obs);
    let coeffs = plan
        .g
        .clone()
        .lu()
        .solve(&obs)
        .ok_or(Error::NoUniquenessSet { attempts: 0, best_condition: plan.condition })?;
    let signal = Signal::from_vector(&plan.u_gt * coeffs);
    let gap = 1.0 - plan.lambda_j;
    let bound_a = epsilon * (1.0 + plan.sigma) / gap;
    let bound_b = epsilon * (1.0 + 2.0 * (1.0 + plan.sigma) / gap);
    Ok(Recovery { signal, bound_a, bound_b })
}

/// Values of `f` at `vertices`.
pub fn observe(f: &Signal, vertices: &[usize]) -> Vec<f64> {
    vertices.iter().map(|&v| f.values()[v]).collect()
}
