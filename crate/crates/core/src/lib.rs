//! # probgsp
//!
//! Graph signal processing when the shift operator is not a single matrix but
//! a random variable: a probability space of symmetric shift operators.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`graphs`] | lattices, k-NN and correlation-threshold graphs, Laplacians |
//! | [`opspace`] | [`ShiftOperator`], [`OperatorSpace`], quadrature-discretized families |
//! | [`spectral`] | distributional Fourier transform and its left inverse |
//! | [`filters`] | convolution filters, polynomial and bi-polynomial representations |
//! | [`sampling`] | band-pass filters, bandlimitedness, recovery with error bounds |
//! | [`basechange`] | pushforward / pullback of measures and filter families |
//! | [`learning`] | losses, empirical risk, Gibbs posterior, Metropolis–Hastings |
//! | [`infection`] | BFS propagation trees, tree rewiring, source scoring |
//! | [`oracles`] | brute-force reference implementations and the self-test suite |
//!
//! Every integral over the operator space is a weighted sum over atoms taken
//! in ascending atom order, so results are reproducible bit for bit.
//!
//! ```
//! use probgsp::graphs::{grid_2d, split_axes, laplacian};
//! use probgsp::opspace::{convex_family, Density};
//! use probgsp::spectral::{fourier, inverse_fourier};
//! use probgsp::Signal;
//!
//! let g = grid_2d(3, 3);
//! let (h, v) = split_axes(&g).unwrap();
//! let space = convex_family(&laplacian(&h).unwrap(), &laplacian(&v).unwrap(), 4, &Density::Uniform).unwrap();
//! let f = Signal::from_vec((0..9).map(|i| i as f64).collect());
//! let back = inverse_fourier(&space, &fourier(&space, &f).unwrap()).unwrap();
//! assert!((back.as_vector() - f.as_vector()).norm() < 1e-10);
//! ```

// `!(x > 0.0)` deliberately rejects NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basechange;
pub mod error;
pub mod filters;
pub mod graphs;
pub mod infection;
pub mod interp;
pub mod io;
pub mod learning;
pub mod opspace;
pub mod oracles;
pub mod quadrature;
pub mod sampling;
pub mod spectral;

pub use error::{Error, Result};
pub use opspace::{OperatorSpace, ShiftOperator, Signal, SpaceId};
