//! Convolution filters over an operator space.
//!
//! A kernel `Γ` assigns a multiplier to every (atom, frequency) pair. The
//! filter is the expectation of the per-atom classical convolutions
//! `U_j diag(Γ_j) U_jᵀ`. When atoms have simple spectra each per-atom filter
//! is a polynomial in the atom ([`polynomial_rep`]); on parametrized spaces
//! the polynomial coefficients can in turn be fitted by polynomials in the
//! parameter ([`fit_bipolynomial`]).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::interp::{eval_poly, matrix_polynomial, monomial_coefficients};
use crate::opspace::{OperatorSpace, ShiftOperator, Signal, SpaceId};
use crate::spectral::{check_signal, fourier, inverse_fourier, SpectralCoefficients};

/// Spectral multiplier `Γ(X_j, i)`, one row per atom.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralKernel {
    values: DMatrix<f64>,
    space_id: SpaceId,
}

impl SpectralKernel {
    pub fn new(space: &OperatorSpace, values: DMatrix<f64>) -> Result<Self> {
        if values.shape() != (space.len(), space.n()) {
            return Err(Error::DimensionMismatch { expected: space.len() * space.n(), got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("kernel entries must be finite".into()));
        }
        Ok(SpectralKernel { values, space_id: space.id() })
    }

    /// Kernel from `(atom, index, eigenvalue) -> value`.
    pub fn from_fn(space: &OperatorSpace, mut f: impl FnMut(usize, usize, f64) -> f64) -> Result<Self> {
        let values = DMatrix::from_fn(space.len(), space.n(), |j, i| f(j, i, space.atom(j).eigenvalues()[i]));
        Self::new(space, values)
    }

    pub fn constant(space: &OperatorSpace, c: f64) -> Result<Self> {
        Self::from_fn(space, |_, _, _| c)
    }

    /// `Λ^k`: `(j, i) ↦ λ_{j,i}^k`.
    pub fn eigenvalue_power(space: &OperatorSpace, k: i32) -> Result<Self> {
        Self::from_fn(space, |_, _, l| l.powi(k))
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn space_id(&self) -> SpaceId {
        self.space_id
    }

    /// `max_{j,i} |Γ(j, i)|`.
    pub fn sup_norm(&self) -> f64 {
        self.values.amax()
    }

    fn check_space(&self, space: &OperatorSpace) -> Result<()> {
        if self.space_id != space.id() {
            return Err(Error::SpaceMismatch);
        }
        Ok(())
    }
}

/// Apply the convolution filter `F† ∘ Γ ∘ F` to `f`.
pub fn convolve(space: &OperatorSpace, kernel: &SpectralKernel, f: &Signal) -> Result<Signal> {
    kernel.check_space(space)?;
    check_signal(space, f)?;
    let fhat = fourier(space, f)?;
    let product = fhat.values().component_mul(&kernel.values);
    inverse_fourier(space, &SpectralCoefficients::new(space, product)?)
}

/// Classical convolution matrix `U diag(γ) Uᵀ` for one operator.
pub fn fiber_filter_matrix(op: &ShiftOperator, gamma: &[f64]) -> DMatrix<f64> {
    let u = op.eigenvectors();
    let mut scaled = u.clone();
    for (i, &g) in gamma.iter().enumerate() {
        scaled.column_mut(i).scale_mut(g);
    }
    scaled * u.transpose()
}

/// Matrix of the convolution filter: `Σ_j w_j U_j diag(Γ_j) U_jᵀ`.
pub fn filter_matrix(space: &OperatorSpace, kernel: &SpectralKernel) -> Result<DMatrix<f64>> {
    kernel.check_space(space)?;
    let n = space.n();
    let mut acc = DMatrix::zeros(n, n);
    for (j, (atom, &w)) in space.atoms().iter().zip(space.weights()).enumerate() {
        let row: Vec<f64> = kernel.values.row(j).iter().copied().collect();
        acc += fiber_filter_matrix(atom, &row) * w;
    }
    Ok(acc)
}

/// Kernel induced by a signal: `Γ = F(g)`.
pub fn signal_kernel(space: &OperatorSpace, g: &Signal) -> Result<SpectralKernel> {
    let ghat = fourier(space, g)?;
    SpectralKernel::new(space, ghat.values().clone())
}

/// Per-atom polynomial coefficients: row `j` holds `a_0(X_j), …, a_{n-1}(X_j)`
/// with `Σ_i a_i(X_j) X_j^i` equal to the fiberwise convolution.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialFilterRep {
    coeffs: DMatrix<f64>,
}

impl PolynomialFilterRep {
    pub fn coeffs(&self) -> &DMatrix<f64> {
        &self.coeffs
    }

    pub fn atom_coeffs(&self, j: usize) -> Vec<f64> {
        self.coeffs.row(j).iter().copied().collect()
    }

    /// `R(X_j) = Σ_i a_i(X_j) X_j^i`.
    pub fn fiber_matrix(&self, space: &OperatorSpace, j: usize) -> DMatrix<f64> {
        matrix_polynomial(&self.atom_coeffs(j), space.atom(j).matrix())
    }

    /// `E[R(X)]`.
    pub fn expected_matrix(&self, space: &OperatorSpace) -> DMatrix<f64> {
        let n = space.n();
        let mut acc = DMatrix::zeros(n, n);
        for (j, &w) in space.weights().iter().enumerate() {
            acc += self.fiber_matrix(space, j) * w;
        }
        acc
    }

    pub fn apply(&self, space: &OperatorSpace, f: &Signal) -> Result<Signal> {
        check_signal(space, f)?;
        Ok(Signal::from_vector(self.expected_matrix(space) * f.as_vector()))
    }
}

fn require_distinct(space: &OperatorSpace) -> Result<()> {
    for (j, atom) in space.atoms().iter().enumerate() {
        if let Some((first, second)) = atom.repeated_eigenvalue_pair() {
            return Err(Error::RepeatedEigenvalues { atom: j, first, second });
        }
    }
    Ok(())
}

/// Interpolate each kernel row through the atom's eigenvalues.
pub fn polynomial_rep(space: &OperatorSpace, kernel: &SpectralKernel) -> Result<PolynomialFilterRep> {
    kernel.check_space(space)?;
    require_distinct(space)?;
    let mut coeffs = DMatrix::zeros(space.len(), space.n());
    for (j, atom) in space.atoms().iter().enumerate() {
        let nodes: Vec<f64> = atom.eigenvalues().iter().copied().collect();
        let values: Vec<f64> = kernel.values.row(j).iter().copied().collect();
        let a = monomial_coefficients(&nodes, &values);
        coeffs.set_row(j, &DVector::from_vec(a).transpose());
    }
    Ok(PolynomialFilterRep { coeffs })
}

/// Filter whose fiber at parameter `t` is `Σ_{i≤k} a_i(t) X_t^i` with each
/// `a_i` a polynomial of degree `≤ d` in `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct BiPolynomialRep {
    /// `coeff_polys[i]` holds the ascending `t`-coefficients of `a_i`.
    pub coeff_polys: Vec<Vec<f64>>,
    /// `(d, k)`.
    pub bi_degree: (usize, usize),
    /// `sqrt(Σ_j w_j ‖fitted fiber_j − fiber_j‖_F²)`.
    pub fit_residual: f64,
}

impl BiPolynomialRep {
    pub fn coefficient(&self, i: usize, t: f64) -> f64 {
        eval_poly(&self.coeff_polys[i], t)
    }

    pub fn fiber_matrix(&self, t: f64, x: &DMatrix<f64>) -> DMatrix<f64> {
        let a: Vec<f64> = (0..self.coeff_polys.len()).map(|i| self.coefficient(i, t)).collect();
        matrix_polynomial(&a, x)
    }
}

/// Least-squares bi-polynomial fit of a convolution filter on a parametrized
/// space.
///
/// Minimizes `Σ_j w_j ‖Σ_{i≤k} a_i(t_j) X_j^i − U_j diag(Γ_j) U_jᵀ‖_F²` over
/// all `a_i` of degree `≤ d`. Because each `X_j^i` shares the eigenbasis of
/// the fiber filter, the Frobenius objective is the weighted spectral
/// objective `Σ_j w_j Σ_ℓ (Σ_{i,m} c_{im} t_j^m λ_{jℓ}^i − Γ(j, ℓ))²`, solved
/// here directly. Raising `d` enlarges the search space, so the residual never
/// increases.
pub fn fit_bipolynomial(space: &OperatorSpace, kernel: &SpectralKernel, d: usize, k: usize) -> Result<BiPolynomialRep> {
    kernel.check_space(space)?;
    let params = space
        .params()
        .ok_or_else(|| Error::InvalidArgument("bi-polynomial fitting needs a parametrized space".into()))?;
    let n = space.n();
    if k >= n {
        return Err(Error::InvalidArgument(format!("k = {k} must be at most n - 1 = {}", n - 1)));
    }
    require_distinct(space)?;

    let cols = (k + 1) * (d + 1);
    let rows = space.len() * n;
    let mut design = DMatrix::zeros(rows, cols);
    let mut target = DVector::zeros(rows);
    for (j, atom) in space.atoms().iter().enumerate() {
        let sw = space.weights()[j].sqrt();
        let t = params[j];
        for l in 0..n {
            let r = j * n + l;
            let lambda = atom.eigenvalues()[l];
            for i in 0..=k {
                let li = lambda.powi(i as i32);
                for m in 0..=d {
                    design[(r, i * (d + 1) + m)] = sw * li * t.powi(m as i32);
                }
            }
            target[r] = sw * kernel.values[(j, l)];
        }
    }

    let scales: Vec<f64> = (0..cols).map(|c| design.column(c).norm()).collect();
    if scales.contains(&0.0) {
        return Err(Error::RankDeficient { d, k });
    }
    for (c, &s) in scales.iter().enumerate() {
        design.column_mut(c).unscale_mut(s);
    }
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if rows < cols || smin <= 1e-11 * smax {
        return Err(Error::RankDeficient { d, k });
    }
    let solution = svd
        .solve(&target, 0.0)
        .map_err(|e| Error::Invariant(format!("least-squares solve failed: {e}")))?;
    let fitted = &design * &solution;
    let fit_residual = (fitted - &target).norm();

    let coeff_polys = (0..=k)
        .map(|i| (0..=d).map(|m| solution[i * (d + 1) + m] / scales[i * (d + 1) + m]).collect())
        .collect();
    Ok(BiPolynomialRep { coeff_polys, bi_degree: (d, k), fit_residual })
}

/// Frequency mask parameters: `r1` on the lowest `cutoff` frequencies, `r2` above.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaskParams {
    pub r1: f64,
    pub r2: f64,
    pub cutoff: usize,
}

/// The same mask on every atom.
pub fn frequency_mask(space: &OperatorSpace, r1: f64, r2: f64, cutoff: usize) -> Result<SpectralKernel> {
    frequency_mask_per_atom(space, &vec![MaskParams { r1, r2, cutoff }; space.len()])
}

/// One mask per atom (e.g. separately tuned masks for heterogeneous graphs).
pub fn frequency_mask_per_atom(space: &OperatorSpace, masks: &[MaskParams]) -> Result<SpectralKernel> {
    if masks.len() != space.len() {
        return Err(Error::DimensionMismatch { expected: space.len(), got: masks.len() });
    }
    let n = space.n();
    for m in masks {
        if m.cutoff < 1 || m.cutoff > n {
            return Err(Error::InvalidArgument(format!("cutoff {} outside 1..={n}", m.cutoff)));
        }
        if m.r1 < 0.0 || m.r2 < 0.0 {
            return Err(Error::InvalidArgument("mask scales must be nonnegative".into()));
        }
    }
    SpectralKernel::from_fn(space, |j, i, _| if i < masks[j].cutoff { masks[j].r1 } else { masks[j].r2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{grid_2d, laplacian, Graph};
    use crate::opspace::{convex_family, discrete_space, expected_operator, make_operator, uniform_space, Density};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_op(n: usize, rng: &mut ChaCha8Rng) -> ShiftOperator {
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        make_operator((&a + a.transpose()) * 0.5).unwrap()
    }

    fn random_space(n: usize, atoms: usize, rng: &mut ChaCha8Rng) -> OperatorSpace {
        let ops = (0..atoms).map(|_| random_op(n, rng)).collect();
        let raw: Vec<f64> = (0..atoms).map(|_| rng.random_range(0.1..1.0)).collect();
        let total: f64 = raw.iter().sum();
        discrete_space(ops, &raw.iter().map(|w| w / total).collect::<Vec<_>>()).unwrap()
    }

    fn random_signal(n: usize, rng: &mut ChaCha8Rng) -> Signal {
        Signal::from_vec((0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
    }

    #[test]
    fn unit_kernel_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = random_space(5, 3, &mut rng);
        let one = SpectralKernel::constant(&s, 1.0).unwrap();
        let f = random_signal(5, &mut rng);
        assert!((convolve(&s, &one, &f).unwrap().as_vector() - f.as_vector()).amax() < 1e-12);
        assert!((filter_matrix(&s, &one).unwrap() - DMatrix::<f64>::identity(5, 5)).amax() < 1e-12);
    }

    #[test]
    fn eigenvalue_kernel_is_expected_operator() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = random_space(6, 4, &mut rng);
        let lam = SpectralKernel::eigenvalue_power(&s, 1).unwrap();
        let f = random_signal(6, &mut rng);
        let want = expected_operator(&s, 1) * f.as_vector();
        assert!((convolve(&s, &lam, &f).unwrap().as_vector() - want).amax() < 1e-12);
    }

    #[test]
    fn convolve_matches_filter_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_space(6, 4, &mut rng);
        let k = SpectralKernel::new(&s, DMatrix::from_fn(4, 6, |_, _| rng.random_range(-2.0..2.0))).unwrap();
        let f = random_signal(6, &mut rng);
        let m = filter_matrix(&s, &k).unwrap();
        assert!((convolve(&s, &k, &f).unwrap().as_vector() - &m * f.as_vector()).amax() < 1e-12);
        // Operator norm bounded by the kernel's sup norm.
        let top = m.clone().symmetric_eigenvalues().amax();
        assert!(top <= k.sup_norm() + 1e-12);
    }

    #[test]
    fn squared_eigenvalue_kernel_on_uniform_family() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (l0, l1) = (random_op(5, &mut rng), random_op(5, &mut rng));
        let s = convex_family(&l0, &l1, 4, &Density::Uniform).unwrap();
        let (a, b) = (l0.matrix(), l1.matrix());
        let first = filter_matrix(&s, &SpectralKernel::eigenvalue_power(&s, 1).unwrap()).unwrap();
        let second = filter_matrix(&s, &SpectralKernel::eigenvalue_power(&s, 2).unwrap()).unwrap();
        assert!((&first - (a + b) * 0.5).norm() < 1e-12);
        assert!((&second - (a * a * 2.0 + b * b * 2.0 + a * b + b * a) / 6.0).norm() < 1e-12);
        let sq = &first * &first;
        assert!((&sq - (a * a + b * b + a * b + b * a) / 4.0).norm() < 1e-12);
        let diff = (&l0.matrix().clone() - l1.matrix()).pow(2);
        assert!(((&second - &sq).norm() - diff.norm() / 12.0).abs() < 1e-10);
        assert!((&second * &sq - &sq * &second).norm() > 1e-6);
    }

    #[test]
    fn constant_signal_kernel_on_path_is_low_pass() {
        let g = Graph::new(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)], false).unwrap();
        let s = uniform_space(vec![laplacian(&g).unwrap()]).unwrap();
        let k = signal_kernel(&s, &Signal::from_vec(vec![1.0; 4])).unwrap();
        assert!((k.values()[(0, 0)] - 2.0).abs() < 1e-12);
        assert!(k.values().row(0).iter().skip(1).all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn single_atom_signal_convolution_commutes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = random_space(5, 1, &mut rng);
        let (f, g) = (random_signal(5, &mut rng), random_signal(5, &mut rng));
        let fg = convolve(&s, &signal_kernel(&s, &g).unwrap(), &f).unwrap();
        let gf = convolve(&s, &signal_kernel(&s, &f).unwrap(), &g).unwrap();
        assert!((fg.as_vector() - gf.as_vector()).amax() < 1e-12);
    }

    #[test]
    fn polynomial_rep_trivial_kernels() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let s = random_space(4, 2, &mut rng);
        let p = polynomial_rep(&s, &SpectralKernel::eigenvalue_power(&s, 1).unwrap()).unwrap();
        for j in 0..2 {
            let c = p.atom_coeffs(j);
            assert!((c[1] - 1.0).abs() < 1e-9);
            assert!(c[0].abs() < 1e-9 && c[2].abs() < 1e-9 && c[3].abs() < 1e-9);
        }
        let p = polynomial_rep(&s, &SpectralKernel::constant(&s, 2.5).unwrap()).unwrap();
        assert!((p.atom_coeffs(0)[0] - 2.5).abs() < 1e-9);
        assert!(p.atom_coeffs(0)[1..].iter().all(|c| c.abs() < 1e-9));
    }

    #[test]
    fn polynomial_rep_refuses_repeated_eigenvalues() {
        let s = uniform_space(vec![laplacian(&grid_2d(2, 2)).unwrap()]).unwrap();
        let k = SpectralKernel::constant(&s, 1.0).unwrap();
        match polynomial_rep(&s, &k) {
            Err(Error::RepeatedEigenvalues { atom, first, second }) => {
                assert_eq!(atom, 0);
                assert!((first - 2.0).abs() < 1e-9 && (second - 2.0).abs() < 1e-9);
            }
            other => panic!("expected repeated-eigenvalue error, got {other:?}"),
        }
    }

    #[test]
    fn polynomial_rep_reproduces_filter() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = random_space(4, 3, &mut rng);
        let k = SpectralKernel::new(&s, DMatrix::from_fn(3, 4, |_, _| rng.random_range(-1.0..1.0))).unwrap();
        let p = polynomial_rep(&s, &k).unwrap();
        assert!((p.expected_matrix(&s) - filter_matrix(&s, &k).unwrap()).amax() < 1e-8);
    }

    fn planted_family() -> (OperatorSpace, SpectralKernel) {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (l0, l1) = (random_op(5, &mut rng), random_op(5, &mut rng));
        let s = convex_family(&l0, &l1, 6, &Density::Uniform).unwrap();
        let t: Vec<f64> = s.params().unwrap().to_vec();
        let (a0, a1, b0, b1) = (0.7, -1.3, 0.4, 2.0);
        let k = SpectralKernel::from_fn(&s, |j, _, l| (a0 + a1 * t[j]) * l + (b0 + b1 * t[j])).unwrap();
        (s, k)
    }

    #[test]
    fn planted_bidegree_one_one_is_recovered() {
        let (s, k) = planted_family();
        let fit = fit_bipolynomial(&s, &k, 1, 1).unwrap();
        assert!(fit.fit_residual <= 1e-9, "residual {}", fit.fit_residual);
        let want = [[0.4, 2.0], [0.7, -1.3]];
        for i in 0..2 {
            for m in 0..2 {
                assert!((fit.coeff_polys[i][m] - want[i][m]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn residual_matches_matrix_space_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (l0, l1) = (random_op(4, &mut rng), random_op(4, &mut rng));
        let s = convex_family(&l0, &l1, 5, &Density::Uniform).unwrap();
        let t: Vec<f64> = s.params().unwrap().to_vec();
        let k = SpectralKernel::from_fn(&s, |j, _, l| (-t[j] * l).exp()).unwrap();
        let fit = fit_bipolynomial(&s, &k, 2, 2).unwrap();
        let mut acc = 0.0;
        for j in 0..s.len() {
            let row: Vec<f64> = k.values().row(j).iter().copied().collect();
            let target = fiber_filter_matrix(s.atom(j), &row);
            acc += s.weights()[j] * (fit.fiber_matrix(t[j], s.atom(j).matrix()) - target).norm_squared();
        }
        assert!((acc.sqrt() - fit.fit_residual).abs() < 1e-9);
    }

    #[test]
    fn constant_kernel_fits_exactly_at_degree_zero() {
        let (s, _) = planted_family();
        let fit = fit_bipolynomial(&s, &SpectralKernel::constant(&s, 1.0).unwrap(), 0, 0).unwrap();
        assert!(fit.fit_residual < 1e-12);
    }

    #[test]
    fn too_many_t_degrees_is_rank_deficient() {
        let (s, k) = planted_family();
        assert!(matches!(fit_bipolynomial(&s, &k, 6, 1), Err(Error::RankDeficient { d: 6, k: 1 })));
    }

    #[test]
    fn masks() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let s = random_space(5, 2, &mut rng);
        let all = frequency_mask(&s, 1.0, 1.0, 3).unwrap();
        assert!((filter_matrix(&s, &all).unwrap() - DMatrix::<f64>::identity(5, 5)).amax() < 1e-12);
        let full = frequency_mask(&s, 0.3, 7.0, 5).unwrap();
        assert!(full.values().iter().all(|&v| v == 0.3));
        let low = frequency_mask(&s, 1.0, 0.0, 2).unwrap();
        assert_eq!(low.values().row(0).iter().copied().collect::<Vec<_>>(), vec![1.0, 1.0, 0.0, 0.0, 0.0]);
        assert!(frequency_mask(&s, 1.0, 0.0, 0).is_err());
        let per = frequency_mask_per_atom(&s, &[MaskParams { r1: 1.0, r2: 0.0, cutoff: 1 }, MaskParams { r1: 2.0, r2: 0.5, cutoff: 4 }]).unwrap();
        assert_eq!(per.values()[(1, 3)], 2.0);
        assert_eq!(per.values()[(1, 4)], 0.5);
    }
}
