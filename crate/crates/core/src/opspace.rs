//! Shift operators and probability spaces of shift operators.
//!
//! A [`ShiftOperator`] is a symmetric matrix together with its
//! eigendecomposition, eigenvalues ordered increasingly by absolute value.
//! An [`OperatorSpace`] is a finite weighted collection of such operators:
//! either a genuinely discrete distribution or a continuous distribution on a
//! parameter interval discretized by Gauss–Legendre quadrature.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

/// Relative tolerance for accepting a matrix as symmetric.
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;
/// Eigenvalues closer than this (relative to the spectral radius) count as repeated.
pub const REPEATED_EIGENVALUE_GAP: f64 = 1e-8;
/// Allowed drift of user-supplied weights from a unit sum before normalization.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-6;

/// A real-valued function on the vertex set.
#[derive(Clone, Debug, PartialEq)]
pub struct Signal(DVector<f64>);

impl Signal {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("signal entry {i} is not finite")));
        }
        Ok(Signal(DVector::from_vec(values)))
    }

    /// Panics on non-finite entries.
    pub fn from_vec(values: Vec<f64>) -> Self {
        Signal::new(values).expect("signal entries must be finite")
    }

    pub fn from_vector(values: DVector<f64>) -> Self {
        assert!(values.iter().all(|v| v.is_finite()), "signal entries must be finite");
        Signal(values)
    }

    pub fn zeros(n: usize) -> Self {
        Signal(DVector::zeros(n))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn values(&self) -> &[f64] {
        self.0.as_slice()
    }
}

/// Content fingerprint of an [`OperatorSpace`].
///
/// Two spaces with identical atoms, weights and parameters share an id, so
/// spectral data can be moved between them; anything else is a mismatch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SpaceId(u64);

struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }
    fn word(&mut self, w: u64) {
        for b in w.to_le_bytes() {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
    }
}

/// A symmetric shift operator with its ordered, sign-canonical eigenbasis.
#[derive(Clone, Debug)]
pub struct ShiftOperator {
    matrix: DMatrix<f64>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

impl ShiftOperator {
    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Eigenvalues ordered increasingly by absolute value.
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// Orthonormal eigenvectors; column `i` pairs with eigenvalue `i`.
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, i: usize) -> DVector<f64> {
        self.eigenvectors.column(i).into_owned()
    }

    /// The first pair of eigenvalues (by signed order) whose gap is below
    /// [`REPEATED_EIGENVALUE_GAP`] times the spectral radius, if any.
    pub fn repeated_eigenvalue_pair(&self) -> Option<(f64, f64)> {
        let mut sorted: Vec<f64> = self.eigenvalues.iter().copied().collect();
        sorted.sort_by(f64::total_cmp);
        let radius = sorted.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let scale = if radius > 0.0 { radius } else { 1.0 };
        sorted
            .windows(2)
            .find(|p| (p[1] - p[0]) < REPEATED_EIGENVALUE_GAP * scale)
            .map(|p| (p[0], p[1]))
    }

    pub fn has_distinct_eigenvalues(&self) -> bool {
        self.repeated_eigenvalue_pair().is_none()
    }
}

/// Flip each column so that its largest-magnitude entry is positive.
///
/// Entries within a relative 1e-10 of the column maximum count as ties; the
/// lowest such index decides.
pub fn canonicalize_signs(vectors: &mut DMatrix<f64>) {
    for mut col in vectors.column_iter_mut() {
        let max = col.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if max == 0.0 {
            continue;
        }
        let cutoff = max * (1.0 - 1e-10);
        let pivot = col.iter().position(|v| v.abs() >= cutoff).unwrap_or(0);
        if col[pivot] < 0.0 {
            col.neg_mut();
        }
    }
}

fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Eigendecompose a symmetric matrix into a [`ShiftOperator`].
///
/// Eigenpairs are ordered by `|λ|` ascending, ties by signed value and then by
/// solver index; eigenvector signs are canonicalized.
pub fn make_operator(matrix: DMatrix<f64>) -> Result<ShiftOperator> {
    let (rows, cols) = matrix.shape();
    if rows != cols {
        return Err(Error::NotSquare { rows, cols });
    }
    if let Some(bad) = matrix.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("matrix entry {bad} is not finite")));
    }
    let scale = matrix.amax().max(1.0);
    let asym = max_asymmetry(&matrix);
    let tolerance = SYMMETRY_TOLERANCE * scale;
    if asym > tolerance {
        return Err(Error::Asymmetric { max_asymmetry: asym, tolerance });
    }
    let matrix = if asym > 0.0 { (&matrix + matrix.transpose()) * 0.5 } else { matrix };

    let eig = SymmetricEigen::new(matrix.clone());
    let mut order: Vec<usize> = (0..rows).collect();
    order.sort_by(|&a, &b| {
        let (la, lb) = (eig.eigenvalues[a], eig.eigenvalues[b]);
        la.abs()
            .total_cmp(&lb.abs())
            .then(la.total_cmp(&lb))
            .then(a.cmp(&b))
    });
    let eigenvalues = DVector::from_iterator(rows, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut eigenvectors = DMatrix::zeros(rows, rows);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    canonicalize_signs(&mut eigenvectors);
    Ok(ShiftOperator { matrix, eigenvalues, eigenvectors })
}

/// Density on the parameter interval of a continuous family.
#[derive(Clone)]
pub enum Density {
    Uniform,
    /// `t ↦ 2t` on `[0, 1]`.
    Linear,
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Density {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Density::Uniform => 1.0,
            Density::Linear => 2.0 * t,
            Density::Custom(f) => f(t),
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "uniform" => Ok(Density::Uniform),
            "linear" => Ok(Density::Linear),
            other => Err(Error::Parse(format!("unknown density '{other}' (expected uniform or linear)"))),
        }
    }
}

impl fmt::Debug for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Density::Uniform => write!(f, "Uniform"),
            Density::Linear => write!(f, "Linear"),
            Density::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// A probability space of shift operators with finitely many atoms.
#[derive(Clone, Debug)]
pub struct OperatorSpace {
    atoms: Vec<Arc<ShiftOperator>>,
    weights: Vec<f64>,
    params: Option<Vec<f64>>,
    domain: Option<(f64, f64)>,
    id: SpaceId,
}

impl OperatorSpace {
    pub fn n(&self) -> usize {
        self.atoms[0].n()
    }

    /// Number of atoms.
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[Arc<ShiftOperator>] {
        &self.atoms
    }

    pub fn atom(&self, j: usize) -> &ShiftOperator {
        &self.atoms[j]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn params(&self) -> Option<&[f64]> {
        self.params.as_deref()
    }

    /// Parameter interval the atoms discretize, when parametrized.
    pub fn domain(&self) -> Option<(f64, f64)> {
        self.domain
    }

    pub fn id(&self) -> SpaceId {
        self.id
    }

    /// Same atoms and parameters, new weights (validated as in [`discrete_space`]).
    pub fn with_weights(&self, weights: &[f64]) -> Result<OperatorSpace> {
        if weights.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), got: weights.len() });
        }
        let weights = normalize_weights(weights)?;
        Ok(Self::assemble(self.atoms.clone(), weights, self.params.clone(), self.domain))
    }

    /// Attach a scalar parametrization. `params` must be strictly increasing and
    /// lie inside `domain`.
    pub fn with_params(&self, params: Vec<f64>, domain: (f64, f64)) -> Result<OperatorSpace> {
        validate_params(&params, self.len(), domain)?;
        Ok(Self::assemble(self.atoms.clone(), self.weights.clone(), Some(params), Some(domain)))
    }

    fn assemble(
        atoms: Vec<Arc<ShiftOperator>>,
        weights: Vec<f64>,
        params: Option<Vec<f64>>,
        domain: Option<(f64, f64)>,
    ) -> OperatorSpace {
        let mut h = Fnv::new();
        h.word(atoms.len() as u64);
        for (atom, w) in atoms.iter().zip(&weights) {
            h.word(w.to_bits());
            h.word(atom.n() as u64);
            for v in atom.matrix.iter() {
                h.word(v.to_bits());
            }
        }
        if let Some(p) = &params {
            for t in p {
                h.word(t.to_bits());
            }
        }
        OperatorSpace { atoms, weights, params, domain, id: SpaceId(h.0) }
    }
}

fn normalize_weights(weights: &[f64]) -> Result<Vec<f64>> {
    if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !w.is_finite() || **w < 0.0) {
        return Err(Error::InvalidWeights(format!("weight {i} is {w}; weights must be finite and nonnegative")));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(Error::InvalidWeights(format!("weights sum to {sum}, not 1")));
    }
    Ok(weights.iter().map(|w| w / sum).collect())
}

fn validate_params(params: &[f64], len: usize, domain: (f64, f64)) -> Result<()> {
    if params.len() != len {
        return Err(Error::DimensionMismatch { expected: len, got: params.len() });
    }
    if !(domain.0 < domain.1) {
        return Err(Error::InvalidArgument(format!("empty parameter domain {domain:?}")));
    }
    if params.windows(2).any(|p| !(p[0] < p[1])) {
        return Err(Error::InvalidArgument("parameters must be strictly increasing".into()));
    }
    if params.iter().any(|&t| t < domain.0 || t > domain.1) {
        return Err(Error::InvalidArgument("parameters must lie inside the domain".into()));
    }
    Ok(())
}

/// A finite space with explicit atoms and weights.
///
/// Weights within [`WEIGHT_SUM_TOLERANCE`] of a unit sum are renormalized;
/// anything further off is rejected.
pub fn discrete_space(atoms: Vec<ShiftOperator>, weights: &[f64]) -> Result<OperatorSpace> {
    discrete_space_shared(atoms.into_iter().map(Arc::new).collect(), weights)
}

pub fn discrete_space_shared(atoms: Vec<Arc<ShiftOperator>>, weights: &[f64]) -> Result<OperatorSpace> {
    if atoms.is_empty() {
        return Err(Error::InvalidArgument("an operator space needs at least one atom".into()));
    }
    if atoms.len() != weights.len() {
        return Err(Error::DimensionMismatch { expected: atoms.len(), got: weights.len() });
    }
    let n = atoms[0].n();
    if let Some(bad) = atoms.iter().find(|a| a.n() != n) {
        return Err(Error::DimensionMismatch { expected: n, got: bad.n() });
    }
    let weights = normalize_weights(weights)?;
    Ok(OperatorSpace::assemble(atoms, weights, None, None))
}

/// Equal weights over `atoms`.
pub fn uniform_space(atoms: Vec<ShiftOperator>) -> Result<OperatorSpace> {
    let m = atoms.len().max(1);
    discrete_space(atoms, &vec![1.0 / m as f64; m])
}

/// A parametrized space with atoms at `params` inside `domain`.
pub fn parametrized_space(
    atoms: Vec<ShiftOperator>,
    weights: &[f64],
    params: Vec<f64>,
    domain: (f64, f64),
) -> Result<OperatorSpace> {
    discrete_space(atoms, weights)?.with_params(params, domain)
}

fn convex_atom(l0: &DMatrix<f64>, l1: &DMatrix<f64>, t: f64) -> Result<ShiftOperator> {
    let m = l0.zip_map(l1, |a, b| (1.0 - t) * a + t * b);
    make_operator(m)
}

fn quadrature_space(
    l0: &ShiftOperator,
    l1: &ShiftOperator,
    nodes: Vec<f64>,
    qweights: Vec<f64>,
    density: &Density,
    domain: (f64, f64),
) -> Result<OperatorSpace> {
    if l0.n() != l1.n() {
        return Err(Error::DimensionMismatch { expected: l0.n(), got: l1.n() });
    }
    let raw: Vec<f64> = nodes.iter().zip(&qweights).map(|(&t, &w)| w * density.eval(t)).collect();
    if let Some((i, w)) = raw.iter().enumerate().find(|(_, w)| !w.is_finite() || **w < 0.0) {
        return Err(Error::InvalidWeights(format!("density gives weight {w} at node {i}")));
    }
    let total: f64 = raw.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidWeights("density integrates to zero on the nodes".into()));
    }
    let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let atoms = nodes
        .iter()
        .map(|&t| convex_atom(l0.matrix(), l1.matrix(), t).map(Arc::new))
        .collect::<Result<Vec<_>>>()?;
    Ok(OperatorSpace::assemble(atoms, weights, Some(nodes), Some(domain)))
}

/// The family `L_t = (1 - t) L0 + t L1`, `t ∈ [0, 1]`, discretized by an
/// `nodes`-point Gauss–Legendre rule; weights are quadrature weights times
/// `density(t_j)`, renormalized.
pub fn convex_family(l0: &ShiftOperator, l1: &ShiftOperator, nodes: usize, density: &Density) -> Result<OperatorSpace> {
    if nodes == 0 {
        return Err(Error::InvalidArgument("convex_family needs at least one node".into()));
    }
    let (t, w) = gauss_legendre(nodes, 0.0, 1.0);
    quadrature_space(l0, l1, t, w, density, (0.0, 1.0))
}

/// Composite version of [`convex_family`]: a Gauss–Legendre rule on each
/// interval `[breaks[i], breaks[i+1]]`, so the mass of every interval is
/// integrated exactly.
pub fn convex_family_on_intervals(
    l0: &ShiftOperator,
    l1: &ShiftOperator,
    breaks: &[f64],
    nodes_per_interval: usize,
    density: &Density,
) -> Result<OperatorSpace> {
    if breaks.len() < 2 || breaks.windows(2).any(|b| !(b[0] < b[1])) {
        return Err(Error::InvalidArgument("breakpoints must be strictly increasing, at least two".into()));
    }
    if nodes_per_interval == 0 {
        return Err(Error::InvalidArgument("need at least one node per interval".into()));
    }
    let mut t = Vec::new();
    let mut w = Vec::new();
    for b in breaks.windows(2) {
        let (ti, wi) = gauss_legendre(nodes_per_interval, b[0], b[1]);
        t.extend(ti);
        w.extend(wi);
    }
    let domain = (breaks[0], breaks[breaks.len() - 1]);
    quadrature_space(l0, l1, t, w, density, domain)
}

/// `Σ_j w_j X_j^k`, accumulated in ascending atom order.
pub fn expected_operator(space: &OperatorSpace, power: u32) -> DMatrix<f64> {
    let n = space.n();
    let mut acc = DMatrix::zeros(n, n);
    for (atom, &w) in space.atoms.iter().zip(&space.weights) {
        let mut p = DMatrix::identity(n, n);
        for _ in 0..power {
            p = &p * atom.matrix();
        }
        acc += p * w;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p2() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0])
    }

    fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        (&a + a.transpose()) * 0.5
    }

    #[test]
    fn p2_laplacian_closed_form() {
        let op = make_operator(p2()).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!(op.eigenvalues()[0].abs() < 1e-14);
        assert!((op.eigenvalues()[1] - 2.0).abs() < 1e-14);
        let u = op.eigenvectors();
        assert!((u[(0, 0)] - s).abs() < 1e-14 && (u[(1, 0)] - s).abs() < 1e-14);
        assert!((u[(0, 1)] - s).abs() < 1e-14 && (u[(1, 1)] + s).abs() < 1e-14);
    }

    #[test]
    fn identity_canonicalizes_to_identity() {
        let op = make_operator(DMatrix::identity(5, 5)).unwrap();
        assert!(op.eigenvalues().iter().all(|&l| (l - 1.0).abs() < 1e-15));
        assert!((op.eigenvectors() - DMatrix::<f64>::identity(5, 5)).amax() < 1e-15);
    }

    #[test]
    fn random_reconstruction_and_ordering() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = random_symmetric(6, &mut rng);
        let op = make_operator(m.clone()).unwrap();
        let u = op.eigenvectors();
        let rec = u * DMatrix::from_diagonal(op.eigenvalues()) * u.transpose();
        assert!((rec - &m).norm() <= 1e-9);
        assert!((u.transpose() * u - DMatrix::<f64>::identity(6, 6)).amax() <= 1e-8);
        let l = op.eigenvalues();
        assert!((1..6).all(|i| l[i - 1].abs() <= l[i].abs()));
        assert!((&m * u - u * DMatrix::from_diagonal(l)).amax() <= 1e-8 * m.norm());
    }

    #[test]
    fn asymmetric_input_reports_asymmetry() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        match make_operator(m) {
            Err(Error::Asymmetric { max_asymmetry, .. }) => assert_eq!(max_asymmetry, 0.5),
            other => panic!("expected asymmetry error, got {other:?}"),
        }
    }

    #[test]
    fn make_operator_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let op = make_operator(random_symmetric(7, &mut rng)).unwrap();
        let again = make_operator(op.matrix().clone()).unwrap();
        assert!((op.eigenvalues() - again.eigenvalues()).amax() < 1e-9);
        assert!((op.eigenvectors() - again.eigenvectors()).amax() < 1e-9);
    }

    #[test]
    fn sign_flips_are_undone() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let op = make_operator(random_symmetric(6, &mut rng)).unwrap();
        for flip in 0..6 {
            let mut u = op.eigenvectors().clone();
            u.column_mut(flip).neg_mut();
            canonicalize_signs(&mut u);
            assert_eq!(&u, op.eigenvectors());
        }
    }

    #[test]
    fn discrete_space_weight_rules() {
        let a = make_operator(p2()).unwrap();
        let s = discrete_space(vec![a.clone()], &[1.0]).unwrap();
        assert_eq!(s.weights(), &[1.0]);
        let s = discrete_space(vec![a.clone(), a.clone()], &[0.5, 0.5]).unwrap();
        assert_eq!(s.weights(), &[0.5, 0.5]);
        assert!(matches!(discrete_space(vec![a.clone(), a.clone()], &[0.3, 0.8]), Err(Error::InvalidWeights(_))));
        let b = make_operator(DMatrix::identity(3, 3)).unwrap();
        assert!(matches!(discrete_space(vec![a, b], &[0.5, 0.5]), Err(Error::DimensionMismatch { .. })));
    }

    fn pair() -> (ShiftOperator, ShiftOperator) {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        (make_operator(random_symmetric(4, &mut rng)).unwrap(), make_operator(random_symmetric(4, &mut rng)).unwrap())
    }

    #[test]
    fn one_node_family_is_midpoint() {
        let (l0, l1) = pair();
        let s = convex_family(&l0, &l1, 1, &Density::Uniform).unwrap();
        assert_eq!(s.params().unwrap(), &[0.5]);
        let mid = (l0.matrix() + l1.matrix()) * 0.5;
        assert!((s.atom(0).matrix() - mid).amax() < 1e-15);
    }

    #[test]
    fn uniform_family_moments() {
        let (l0, l1) = pair();
        for nodes in 2..=10 {
            let s = convex_family(&l0, &l1, nodes, &Density::Uniform).unwrap();
            let t = s.params().unwrap();
            let m1: f64 = s.weights().iter().zip(t).map(|(w, t)| w * t).sum();
            let m2: f64 = s.weights().iter().zip(t).map(|(w, t)| w * t * t).sum();
            assert!((m1 - 0.5).abs() < 1e-14 && (m2 - 1.0 / 3.0).abs() < 1e-14, "nodes={nodes}");
            assert!((s.weights().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn linear_density_mean() {
        let (l0, l1) = pair();
        let s = convex_family(&l0, &l1, 8, &Density::Linear).unwrap();
        let m1: f64 = s.weights().iter().zip(s.params().unwrap()).map(|(w, t)| w * t).sum();
        assert!((m1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn family_atoms_are_exact_convex_combinations() {
        let (l0, l1) = pair();
        let s = convex_family(&l0, &l1, 5, &Density::Uniform).unwrap();
        for (atom, &t) in s.atoms().iter().zip(s.params().unwrap()) {
            let expect = l0.matrix().zip_map(l1.matrix(), |a, b| (1.0 - t) * a + t * b);
            assert_eq!(atom.matrix(), &expect);
        }
    }

    #[test]
    fn expected_operator_closed_forms() {
        let (l0, l1) = pair();
        let (a, b) = (l0.matrix(), l1.matrix());
        let s = convex_family(&l0, &l1, 3, &Density::Uniform).unwrap();
        assert!((expected_operator(&s, 0) - DMatrix::<f64>::identity(4, 4)).amax() < 1e-15);
        assert!((expected_operator(&s, 1) - (a + b) * 0.5).amax() < 1e-12);
        let second = (a * a * 2.0 + b * b * 2.0 + a * b + b * a) / 6.0;
        assert!((expected_operator(&s, 2) - second).amax() < 1e-12);
    }

    #[test]
    fn composite_family_integrates_interval_masses() {
        let (l0, l1) = pair();
        let breaks = [0.0, 0.2, 0.7, 1.0];
        let s = convex_family_on_intervals(&l0, &l1, &breaks, 3, &Density::Uniform).unwrap();
        assert_eq!(s.len(), 9);
        for (i, b) in breaks.windows(2).enumerate() {
            let mass: f64 = s.weights()[3 * i..3 * i + 3].iter().sum();
            assert!((mass - (b[1] - b[0])).abs() < 1e-14);
        }
    }

    #[test]
    fn space_ids_track_content() {
        let (l0, l1) = pair();
        let s = convex_family(&l0, &l1, 3, &Density::Uniform).unwrap();
        let same = convex_family(&l0, &l1, 3, &Density::Uniform).unwrap();
        assert_eq!(s.id(), same.id());
        let other = s.with_weights(&[0.2, 0.3, 0.5]).unwrap();
        assert_ne!(s.id(), other.id());
    }
}
