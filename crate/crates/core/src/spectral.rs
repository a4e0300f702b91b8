//! The distributional Fourier transform and its left inverse.
//!
//! `fourier` sends a signal to its classical GFT coefficients with respect to
//! every atom. The left inverse factors as `beta ∘ alpha`: `alpha` is the
//! per-atom inverse GFT and `beta` averages the per-atom signals under the
//! space's weights.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::opspace::{OperatorSpace, Signal, SpaceId};

/// Entry `(j, i)` is `⟨f, u_{X_j, i}⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralCoefficients {
    values: DMatrix<f64>,
    space_id: SpaceId,
}

impl SpectralCoefficients {
    pub fn new(space: &OperatorSpace, values: DMatrix<f64>) -> Result<Self> {
        check_shape(space, &values)?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("spectral coefficients must be finite".into()));
        }
        Ok(SpectralCoefficients { values, space_id: space.id() })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn space_id(&self) -> SpaceId {
        self.space_id
    }

    /// Squared norm in `L²(X × [n])`: `Σ_j w_j Σ_i g(j, i)²`.
    pub fn weighted_energy(&self, space: &OperatorSpace) -> Result<f64> {
        self.check_space(space)?;
        Ok(space
            .weights()
            .iter()
            .enumerate()
            .map(|(j, w)| w * self.values.row(j).norm_squared())
            .sum())
    }

    pub(crate) fn check_space(&self, space: &OperatorSpace) -> Result<()> {
        if self.space_id != space.id() {
            return Err(Error::SpaceMismatch);
        }
        Ok(())
    }
}

/// Entry `(j, v)` is `q(X_j, v)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FiberField {
    values: DMatrix<f64>,
    space_id: SpaceId,
}

impl FiberField {
    pub fn new(space: &OperatorSpace, values: DMatrix<f64>) -> Result<Self> {
        check_shape(space, &values)?;
        Ok(FiberField { values, space_id: space.id() })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn space_id(&self) -> SpaceId {
        self.space_id
    }
}

fn check_shape(space: &OperatorSpace, values: &DMatrix<f64>) -> Result<()> {
    if values.nrows() != space.len() {
        return Err(Error::DimensionMismatch { expected: space.len(), got: values.nrows() });
    }
    if values.ncols() != space.n() {
        return Err(Error::DimensionMismatch { expected: space.n(), got: values.ncols() });
    }
    Ok(())
}

pub(crate) fn check_signal(space: &OperatorSpace, f: &Signal) -> Result<()> {
    if f.len() != space.n() {
        return Err(Error::DimensionMismatch { expected: space.n(), got: f.len() });
    }
    Ok(())
}

/// Distributional Fourier transform.
pub fn fourier(space: &OperatorSpace, f: &Signal) -> Result<SpectralCoefficients> {
    check_signal(space, f)?;
    let mut values = DMatrix::zeros(space.len(), space.n());
    for (j, atom) in space.atoms().iter().enumerate() {
        let row = atom.eigenvectors().tr_mul(f.as_vector());
        values.set_row(j, &row.transpose());
    }
    Ok(SpectralCoefficients { values, space_id: space.id() })
}

/// Left inverse: `Σ_j w_j Σ_i g(j, i) u_{X_j, i}`.
pub fn inverse_fourier(space: &OperatorSpace, g: &SpectralCoefficients) -> Result<Signal> {
    beta(space, &alpha(space, g)?)
}

/// Per-atom inverse GFT.
pub fn alpha(space: &OperatorSpace, g: &SpectralCoefficients) -> Result<FiberField> {
    g.check_space(space)?;
    let mut values = DMatrix::zeros(space.len(), space.n());
    for (j, atom) in space.atoms().iter().enumerate() {
        let coeffs: DVector<f64> = g.values.row(j).transpose();
        let row = atom.eigenvectors() * coeffs;
        values.set_row(j, &row.transpose());
    }
    Ok(FiberField { values, space_id: space.id() })
}

/// Inverse of [`alpha`]: the per-atom GFT of each row.
pub fn alpha_inverse(space: &OperatorSpace, q: &FiberField) -> Result<SpectralCoefficients> {
    if q.space_id != space.id() {
        return Err(Error::SpaceMismatch);
    }
    let mut values = DMatrix::zeros(space.len(), space.n());
    for (j, atom) in space.atoms().iter().enumerate() {
        let row: DVector<f64> = q.values.row(j).transpose();
        values.set_row(j, &atom.eigenvectors().tr_mul(&row).transpose());
    }
    Ok(SpectralCoefficients { values, space_id: space.id() })
}

/// Weighted average of the rows of `q`, ascending atom order.
pub fn beta(space: &OperatorSpace, q: &FiberField) -> Result<Signal> {
    if q.space_id != space.id() {
        return Err(Error::SpaceMismatch);
    }
    let mut acc = DVector::zeros(space.n());
    for (j, &w) in space.weights().iter().enumerate() {
        acc += q.values.row(j).transpose() * w;
    }
    Ok(Signal::from_vector(acc))
}
