//! Finite-dimensional Euclidean spaces, linear operators with adjoints and
//! operator-norm bounds.
//!
//! Every space is realized as `R^d` with the standard inner product. Weighted
//! product-space geometry is handled by the solvers' update arithmetic.

use std::fmt;
use std::sync::Arc;

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dim, Error, Result};

pub type Vector = Array1<f64>;

/// Safety factor applied to power-iteration estimates so that the reported
/// value bounds the spectral norm from above.
pub const NORM_SAFETY: f64 = 1.01;
pub const NORM_TOL: f64 = 1e-8;
pub const NORM_MAX_ITER: usize = 100_000;
pub const NORM_SEED: u64 = 0x5eed_2010;

/// Relative discrepancy above which an adjoint pair is rejected.
pub const ADJOINT_TOL: f64 = 1e-10;

/// Tolerance on `sum(weights) == 1`.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

pub fn inner(x: &Vector, y: &Vector) -> Result<f64> {
    check_dim(x.len(), y.len())?;
    Ok(x.dot(y))
}

pub fn norm(x: &Vector) -> f64 {
    x.dot(x).sqrt()
}

pub fn distance(x: &Vector, y: &Vector) -> f64 {
    x.iter()
        .zip(y.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Standard Gaussian vector drawn from `rng`.
pub fn random_vector<R: rand::Rng>(dim: usize, rng: &mut R) -> Vector {
    Array1::from_iter((0..dim).map(|_| StandardNormal.sample(rng)))
}

/// A bounded linear map between Euclidean spaces together with its adjoint.
///
/// `apply` and `adjoint` assume correctly sized inputs; use
/// [`checked_apply`] at API boundaries.
pub trait LinearOperator: fmt::Debug + Send + Sync {
    fn dim_in(&self) -> usize;
    fn dim_out(&self) -> usize;
    fn apply(&self, x: &Vector) -> Vector;
    fn adjoint(&self, u: &Vector) -> Vector;

    /// Analytic upper bound on the spectral norm, when one is known.
    fn known_norm_bound(&self) -> Option<f64> {
        None
    }
}

pub type Operator = Arc<dyn LinearOperator>;

pub fn checked_apply(op: &dyn LinearOperator, x: &Vector) -> Result<Vector> {
    check_dim(op.dim_in(), x.len())?;
    Ok(op.apply(x))
}

pub fn checked_adjoint(op: &dyn LinearOperator, u: &Vector) -> Result<Vector> {
    check_dim(op.dim_out(), u.len())?;
    Ok(op.adjoint(u))
}

/// Upper bound on `||op||`: the analytic bound if the operator carries one,
/// otherwise a power-iteration estimate inflated by [`NORM_SAFETY`].
pub fn norm_upper_bound(op: &dyn LinearOperator) -> Result<f64> {
    match op.known_norm_bound() {
        Some(b) => Ok(b),
        None => estimate_operator_norm(op, NORM_TOL, NORM_MAX_ITER, NORM_SEED),
    }
}

/// Power iteration on `L*L` from a seeded Gaussian start.
///
/// The Rayleigh quotient `||L x||^2` of a unit vector never exceeds
/// `sigma_max^2`, so the raw estimate approaches the norm from below; the
/// returned value is `sqrt(quotient) * NORM_SAFETY`.
pub fn estimate_operator_norm(
    op: &dyn LinearOperator,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tol must be positive, got {tol}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = random_vector(op.dim_in(), &mut rng);
    let n0 = norm(&x);
    if n0 == 0.0 {
        return Err(Error::ZeroOperator);
    }
    x /= n0;
    let mut previous = 0.0;
    for _ in 0..max_iter {
        let lx = op.apply(&x);
        let quotient = lx.dot(&lx);
        let y = op.adjoint(&lx);
        let ny = norm(&y);
        if quotient == 0.0 || ny == 0.0 {
            return Err(Error::ZeroOperator);
        }
        if (quotient - previous).abs() <= tol * quotient {
            return Ok(quotient.sqrt() * NORM_SAFETY);
        }
        previous = quotient;
        x = y / ny;
    }
    Err(Error::NormNotConverged(max_iter))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdjointReport {
    pub trials: usize,
    pub max_discrepancy: f64,
    pub passed: bool,
}

/// Probes `<Lx, u> = <x, L*u>` on Gaussian pairs and reports the worst
/// relative discrepancy.
pub fn check_adjoint(op: &dyn LinearOperator, trials: usize, seed: u64) -> AdjointReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials.max(1) {
        let x = random_vector(op.dim_in(), &mut rng);
        let u = random_vector(op.dim_out(), &mut rng);
        let lx = op.apply(&x);
        let ltu = op.adjoint(&u);
        let lhs = lx.dot(&u);
        let rhs = x.dot(&ltu);
        let scale = (norm(&lx) * norm(&u)).max(norm(&x) * norm(&ltu));
        let rel = if scale > 0.0 {
            (lhs - rhs).abs() / scale
        } else {
            (lhs - rhs).abs()
        };
        worst = worst.max(rel);
    }
    AdjointReport {
        trials: trials.max(1),
        max_discrepancy: worst,
        passed: worst <= ADJOINT_TOL,
    }
}

/// Convex combination weights: each in `(0, 1]`, summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidWeights("no weights given".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && **w <= 1.0)) {
            return Err(Error::InvalidWeights(format!("weight {w} not in (0, 1]")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidWeights(format!(
                "weights sum to {sum}, not 1"
            )));
        }
        Ok(WeightVector(weights))
    }

    pub fn uniform(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidWeights("no weights given".into()));
        }
        WeightVector::new(vec![1.0 / m as f64; m])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct Identity {
    dim: usize,
}

impl Identity {
    pub fn new(dim: usize) -> Self {
        Identity { dim }
    }
}

impl LinearOperator for Identity {
    fn dim_in(&self) -> usize {
        self.dim
    }
    fn dim_out(&self) -> usize {
        self.dim
    }
    fn apply(&self, x: &Vector) -> Vector {
        x.clone()
    }
    fn adjoint(&self, u: &Vector) -> Vector {
        u.clone()
    }
    fn known_norm_bound(&self) -> Option<f64> {
        Some(1.0)
    }
}

/// `x -> scale * x`.
#[derive(Debug, Clone)]
pub struct ScaledIdentity {
    dim: usize,
    scale: f64,
}

impl ScaledIdentity {
    pub fn new(dim: usize, scale: f64) -> Self {
        ScaledIdentity { dim, scale }
    }
}

impl LinearOperator for ScaledIdentity {
    fn dim_in(&self) -> usize {
        self.dim
    }
    fn dim_out(&self) -> usize {
        self.dim
    }
    fn apply(&self, x: &Vector) -> Vector {
        x * self.scale
    }
    fn adjoint(&self, u: &Vector) -> Vector {
        u * self.scale
    }
    fn known_norm_bound(&self) -> Option<f64> {
        Some(self.scale.abs())
    }
}

#[derive(Debug, Clone)]
pub struct Diagonal {
    diag: Vector,
}

impl Diagonal {
    pub fn new(diag: Vector) -> Self {
        Diagonal { diag }
    }
}

impl LinearOperator for Diagonal {
    fn dim_in(&self) -> usize {
        self.diag.len()
    }
    fn dim_out(&self) -> usize {
        self.diag.len()
    }
    fn apply(&self, x: &Vector) -> Vector {
        x * &self.diag
    }
    fn adjoint(&self, u: &Vector) -> Vector {
        u * &self.diag
    }
    fn known_norm_bound(&self) -> Option<f64> {
        Some(self.diag.iter().fold(0.0_f64, |m, d| m.max(d.abs())))
    }
}

/// Dense row-major matrix; the adjoint is the transpose.
#[derive(Debug, Clone)]
pub struct DenseMatrix {
    a: Array2<f64>,
}

impl DenseMatrix {
    pub fn new(a: Array2<f64>) -> Result<Self> {
        if a.nrows() == 0 || a.ncols() == 0 {
            return Err(Error::InvalidParameter(
                "matrix has an empty dimension".into(),
            ));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "matrix has non-finite entries".into(),
            ));
        }
        Ok(DenseMatrix { a })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != ncols) {
            return Err(Error::DimensionMismatch {
                expected: ncols,
                found: bad.len(),
            });
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let a = Array2::from_shape_vec((nrows, ncols), flat)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        DenseMatrix::new(a)
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.a
    }
}

impl LinearOperator for DenseMatrix {
    fn dim_in(&self) -> usize {
        self.a.ncols()
    }
    fn dim_out(&self) -> usize {
        self.a.nrows()
    }
    fn apply(&self, x: &Vector) -> Vector {
        self.a.dot(x)
    }
    fn adjoint(&self, u: &Vector) -> Vector {
        self.a.t().dot(u)
    }
}

/// `(x_1, ..., x_m) -> (L_1 x_1, ..., L_m x_m)` on concatenated coordinates.
///
/// Its norm is the largest block norm, so the bound is the max of the block
/// bounds.
#[derive(Debug, Clone)]
pub struct BlockDiagonal {
    blocks: Vec<Operator>,
}

impl BlockDiagonal {
    pub fn new(blocks: Vec<Operator>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidParameter("no blocks".into()));
        }
        Ok(BlockDiagonal { blocks })
    }

    /// Max of the block bounds, estimating blocks without an analytic bound.
    pub fn composed_bound(&self) -> Result<f64> {
        self.blocks
            .iter()
            .map(|b| norm_upper_bound(b.as_ref()))
            .try_fold(0.0_f64, |m, b| b.map(|b| m.max(b)))
    }
}

impl LinearOperator for BlockDiagonal {
    fn dim_in(&self) -> usize {
        self.blocks.iter().map(|b| b.dim_in()).sum()
    }
    fn dim_out(&self) -> usize {
        self.blocks.iter().map(|b| b.dim_out()).sum()
    }
    fn apply(&self, x: &Vector) -> Vector {
        let mut out = Vec::with_capacity(self.dim_out());
        let mut offset = 0;
        for b in &self.blocks {
            let part = x.slice(ndarray::s![offset..offset + b.dim_in()]).to_owned();
            out.extend(b.apply(&part));
            offset += b.dim_in();
        }
        Array1::from(out)
    }
    fn adjoint(&self, u: &Vector) -> Vector {
        let mut out = Vec::with_capacity(self.dim_in());
        let mut offset = 0;
        for b in &self.blocks {
            let part = u
                .slice(ndarray::s![offset..offset + b.dim_out()])
                .to_owned();
            out.extend(b.adjoint(&part));
            offset += b.dim_out();
        }
        Array1::from(out)
    }
    fn known_norm_bound(&self) -> Option<f64> {
        self.blocks
            .iter()
            .map(|b| b.known_norm_bound())
            .try_fold(0.0_f64, |m, b| b.map(|b| m.max(b)))
    }
}

/// `x -> (L_1 x, ..., L_m x)`; all blocks share the input space.
#[derive(Debug, Clone)]
pub struct Stacked {
    blocks: Vec<Operator>,
}

impl Stacked {
    pub fn new(blocks: Vec<Operator>) -> Result<Self> {
        let first = blocks
            .first()
            .ok_or_else(|| Error::InvalidParameter("no blocks".into()))?;
        let dim = first.dim_in();
        for b in &blocks {
            check_dim(dim, b.dim_in())?;
        }
        Ok(Stacked { blocks })
    }
}

impl LinearOperator for Stacked {
    fn dim_in(&self) -> usize {
        self.blocks[0].dim_in()
    }
    fn dim_out(&self) -> usize {
        self.blocks.iter().map(|b| b.dim_out()).sum()
    }
    fn apply(&self, x: &Vector) -> Vector {
        let mut out = Vec::with_capacity(self.dim_out());
        for b in &self.blocks {
            out.extend(b.apply(x));
        }
        Array1::from(out)
    }
    fn adjoint(&self, u: &Vector) -> Vector {
        let mut acc = Array1::zeros(self.dim_in());
        let mut offset = 0;
        for b in &self.blocks {
            let part = u
                .slice(ndarray::s![offset..offset + b.dim_out()])
                .to_owned();
            acc += &b.adjoint(&part);
            offset += b.dim_out();
        }
        acc
    }
    fn known_norm_bound(&self) -> Option<f64> {
        // ||Lx||^2 = sum ||L_i x||^2 <= (sum ||L_i||^2) ||x||^2
        self.blocks
            .iter()
            .map(|b| b.known_norm_bound())
            .try_fold(0.0_f64, |s, b| b.map(|b| s + b * b))
            .map(f64::sqrt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn inner_examples() {
        assert_eq!(inner(&array![1.0, 0.0], &array![0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(inner(&array![1.0, 2.0], &array![1.0, 2.0]).unwrap(), 5.0);
        assert!(matches!(
            inner(&array![1.0], &array![1.0, 2.0]),
            Err(Error::DimensionMismatch {
                expected: 1,
                found: 2
            })
        ));
    }

    #[test]
    fn inner_positive_definite() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let x = random_vector(7, &mut rng);
            assert!(inner(&x, &x).unwrap() > 0.0);
        }
        let zero = Vector::zeros(4);
        assert_eq!(inner(&zero, &zero).unwrap(), 0.0);
    }

    #[test]
    fn identity_norm_is_one() {
        let est = estimate_operator_norm(&Identity::new(3), NORM_TOL, 1000, 1).unwrap();
        assert!((1.0..=NORM_SAFETY + 1e-12).contains(&est));
    }

    #[test]
    fn diagonal_norm() {
        // no analytic shortcut: go through the dense path
        let op = DenseMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 0.5]]).unwrap();
        let est = estimate_operator_norm(&op, NORM_TOL, 10_000, 9).unwrap();
        assert!((est - 2.0).abs() <= 0.02 * 2.0, "{est}");
        assert!(est >= 2.0);
        assert_eq!(
            Diagonal::new(array![2.0, -0.5]).known_norm_bound(),
            Some(2.0)
        );
    }

    #[test]
    fn zero_operator_rejected() {
        let op = ScaledIdentity::new(3, 0.0);
        assert!(matches!(
            estimate_operator_norm(&op, 1e-8, 100, 1),
            Err(Error::ZeroOperator)
        ));
    }

    #[test]
    fn adjoint_reports() {
        assert_eq!(check_adjoint(&Identity::new(4), 10, 1).max_discrepancy, 0.0);
        let m = DenseMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![-1.0, 0.5, 4.0]]).unwrap();
        let rep = check_adjoint(&m, 20, 2);
        assert!(rep.passed && rep.max_discrepancy <= 1e-12);
        let stacked = Stacked::new(vec![Arc::new(m.clone()), Arc::new(Identity::new(3))]).unwrap();
        assert!(check_adjoint(&stacked, 20, 3).passed);
        let block = BlockDiagonal::new(vec![Arc::new(m), Arc::new(Identity::new(2))]).unwrap();
        assert!(check_adjoint(&block, 20, 4).passed);
    }

    #[test]
    fn weights_validated() {
        assert!(WeightVector::new(vec![0.5, 0.5]).is_ok());
        assert!(WeightVector::new(vec![0.5, 0.6]).is_err());
        assert!(WeightVector::new(vec![1.5, -0.5]).is_err());
        assert!(WeightVector::new(vec![0.0, 1.0]).is_err());
        assert!(WeightVector::new(vec![]).is_err());
        assert!(WeightVector::uniform(3).is_ok());
        assert!(WeightVector::uniform(7).is_ok());
    }

    #[test]
    fn stacked_bound_composition() {
        let s = Stacked::new(vec![
            Arc::new(ScaledIdentity::new(2, 3.0)),
            Arc::new(ScaledIdentity::new(2, 4.0)),
        ])
        .unwrap();
        assert_eq!(s.known_norm_bound(), Some(5.0));
        let est = estimate_operator_norm(&s, NORM_TOL, 1000, 5).unwrap();
        assert!((5.0..=5.0 * NORM_SAFETY + 1e-9).contains(&est));
    }
}
