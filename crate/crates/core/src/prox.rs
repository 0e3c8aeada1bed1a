//! Convex functions with exact proximity operators.
//!
//! `prox(gamma, y)` is the unique minimizer of `g(x) + |x - y|^2 / (2 gamma)`.
//! Conjugate proxes go through Moreau's decomposition
//! `prox_{gamma g*}(v) = v - gamma prox_{g / gamma}(v / gamma)`, except for
//! functions whose conjugate is the indicator of a unit ball of a dual norm,
//! where the projection onto that ball is applied directly.

use std::fmt;
use std::ops::Add;

use ndarray::{Array1, Array2, Zip};

use crate::error::{check_dim, Error, Result};
use crate::spaces::{distance, norm, Vector};

/// Relative slack for set membership: `dist(y, C) <= MEMBERSHIP_TOL * (1 + |y|)`.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// A value in `R ∪ {+inf}`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum ExtendedReal {
    Finite(f64),
    PosInf,
}

impl ExtendedReal {
    pub fn is_finite(self) -> bool {
        matches!(self, ExtendedReal::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(v) => Some(v),
            ExtendedReal::PosInf => None,
        }
    }

    /// `f64::INFINITY` for `PosInf`.
    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    /// Multiplies by a strictly positive scalar.
    pub fn scale(self, w: f64) -> ExtendedReal {
        match self {
            ExtendedReal::Finite(v) => ExtendedReal::Finite(w * v),
            ExtendedReal::PosInf => ExtendedReal::PosInf,
        }
    }
}

impl Add for ExtendedReal {
    type Output = ExtendedReal;
    fn add(self, rhs: ExtendedReal) -> ExtendedReal {
        match (self, rhs) {
            (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => ExtendedReal::Finite(a + b),
            _ => ExtendedReal::PosInf,
        }
    }
}

impl Add<f64> for ExtendedReal {
    type Output = ExtendedReal;
    fn add(self, rhs: f64) -> ExtendedReal {
        self + ExtendedReal::Finite(rhs)
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::Finite(v) => write!(f, "{v}"),
            ExtendedReal::PosInf => write!(f, "inf"),
        }
    }
}

fn membership_slack(y: &Vector) -> f64 {
    MEMBERSHIP_TOL * (1.0 + norm(y))
}

fn indicator_value(inside: bool) -> ExtendedReal {
    if inside {
        ExtendedReal::Finite(0.0)
    } else {
        ExtendedReal::PosInf
    }
}

/// Affine subspace `{x : A x = b}` stored as orthonormal rows `q_k` with
/// `q_k . x = c_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSet {
    matrix: Array2<f64>,
    rhs: Vector,
    basis: Vec<Vector>,
    coeffs: Vec<f64>,
}

impl AffineSet {
    fn new(matrix: Array2<f64>, rhs: Vector) -> Result<Self> {
        check_dim(matrix.nrows(), rhs.len())?;
        if matrix.ncols() == 0 {
            return Err(Error::InvalidParameter(
                "affine set in a zero-dimensional space".into(),
            ));
        }
        let mut basis: Vec<Vector> = Vec::new();
        let mut coeffs: Vec<f64> = Vec::new();
        for (row, &b) in matrix.rows().into_iter().zip(rhs.iter()) {
            let mut w = row.to_owned();
            let mut beta = b;
            let row_norm = norm(&w);
            // two Gram-Schmidt sweeps
            for _ in 0..2 {
                for (q, c) in basis.iter().zip(coeffs.iter()) {
                    let coef = q.dot(&w);
                    w.scaled_add(-coef, q);
                    beta -= coef * c;
                }
            }
            let nw = norm(&w);
            if nw <= 1e-12 * row_norm.max(1.0) {
                if beta.abs() > MEMBERSHIP_TOL * (1.0 + b.abs()) {
                    return Err(Error::InconsistentAffine(beta.abs()));
                }
                continue;
            }
            basis.push(w / nw);
            coeffs.push(beta / nw);
        }
        Ok(AffineSet {
            matrix,
            rhs,
            basis,
            coeffs,
        })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn rhs(&self) -> &Vector {
        &self.rhs
    }

    fn residuals(&self, y: &Vector) -> impl Iterator<Item = f64> + '_ {
        let y = y.clone();
        self.basis
            .iter()
            .zip(self.coeffs.iter())
            .map(move |(q, c)| q.dot(&y) - c)
    }

    fn project(&self, y: &Vector) -> Vector {
        let mut x = y.clone();
        for (q, c) in self.basis.iter().zip(self.coeffs.iter()) {
            let r = q.dot(&x) - c;
            x.scaled_add(-r, q);
        }
        x
    }

    fn distance(&self, y: &Vector) -> f64 {
        self.residuals(y).map(|r| r * r).sum::<f64>().sqrt()
    }

    /// Minimum-norm point of the set.
    fn min_norm_point(&self) -> Vector {
        let mut x = Vector::zeros(self.matrix.ncols());
        for (q, c) in self.basis.iter().zip(self.coeffs.iter()) {
            x.scaled_add(*c, q);
        }
        x
    }

    fn support(&self, u: &Vector) -> ExtendedReal {
        let mut orth = u.clone();
        for q in &self.basis {
            let coef = q.dot(&orth);
            orth.scaled_add(-coef, q);
        }
        if norm(&orth) > membership_slack(u) {
            ExtendedReal::PosInf
        } else {
            ExtendedReal::Finite(u.dot(&self.min_norm_point()))
        }
    }
}

/// Nonempty closed convex sets with closed-form projections.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexSet {
    Ball {
        center: Vector,
        radius: f64,
    },
    Box {
        lo: Vector,
        hi: Vector,
    },
    /// `{x : <normal, x> <= offset}`
    Halfspace {
        normal: Vector,
        offset: f64,
    },
    Affine(AffineSet),
}

impl ConvexSet {
    pub fn ball(center: Vector, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        finite_entries("ball center", &center)?;
        Ok(ConvexSet::Ball { center, radius })
    }

    pub fn unit_ball(dim: usize) -> Self {
        ConvexSet::Ball {
            center: Vector::zeros(dim),
            radius: 1.0,
        }
    }

    pub fn boxed(lo: Vector, hi: Vector) -> Result<Self> {
        check_dim(lo.len(), hi.len())?;
        if lo.iter().zip(hi.iter()).any(|(l, h)| !(l <= h)) {
            return Err(Error::InvalidParameter(
                "box requires lo <= hi componentwise".into(),
            ));
        }
        if lo.iter().chain(hi.iter()).any(|v| v.is_nan()) {
            return Err(Error::InvalidParameter("box bounds contain NaN".into()));
        }
        Ok(ConvexSet::Box { lo, hi })
    }

    pub fn halfspace(normal: Vector, offset: f64) -> Result<Self> {
        finite_entries("halfspace normal", &normal)?;
        if norm(&normal) == 0.0 {
            return Err(Error::InvalidParameter(
                "halfspace normal must be nonzero".into(),
            ));
        }
        if !offset.is_finite() {
            return Err(Error::InvalidParameter(
                "halfspace offset must be finite".into(),
            ));
        }
        Ok(ConvexSet::Halfspace { normal, offset })
    }

    pub fn affine(matrix: Array2<f64>, rhs: Vector) -> Result<Self> {
        Ok(ConvexSet::Affine(AffineSet::new(matrix, rhs)?))
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::Ball { center, .. } => center.len(),
            ConvexSet::Box { lo, .. } => lo.len(),
            ConvexSet::Halfspace { normal, .. } => normal.len(),
            ConvexSet::Affine(a) => a.matrix.ncols(),
        }
    }

    pub fn project(&self, y: &Vector) -> Vector {
        match self {
            ConvexSet::Ball { center, radius } => {
                let d = y - center;
                let nd = norm(&d);
                if nd <= *radius {
                    return y.clone();
                }
                // shrink until the rounded result is inside, so that
                // projecting again is the identity
                let mut scale = *radius / nd;
                loop {
                    let x = center + &(&d * scale);
                    if distance(&x, center) <= *radius {
                        return x;
                    }
                    scale = scale.next_down();
                }
            }
            ConvexSet::Box { lo, hi } => {
                let mut x = y.clone();
                Zip::from(&mut x)
                    .and(lo)
                    .and(hi)
                    .for_each(|x, &l, &h| *x = x.clamp(l, h));
                x
            }
            ConvexSet::Halfspace { normal, offset } => {
                let excess = normal.dot(y) - offset;
                if excess <= 0.0 {
                    y.clone()
                } else {
                    let nn = normal.dot(normal);
                    let mut step = excess / nn;
                    loop {
                        let mut x = y.clone();
                        x.scaled_add(-step, normal);
                        if normal.dot(&x) <= *offset {
                            return x;
                        }
                        let next = step + (normal.dot(&x) - offset) / nn;
                        step = if next > step { next } else { step.next_up() };
                    }
                }
            }
            ConvexSet::Affine(a) => a.project(y),
        }
    }

    pub fn distance(&self, y: &Vector) -> f64 {
        match self {
            ConvexSet::Ball { center, radius } => (distance(y, center) - radius).max(0.0),
            ConvexSet::Box { .. } => distance(y, &self.project(y)),
            ConvexSet::Halfspace { normal, offset } => {
                (normal.dot(y) - offset).max(0.0) / norm(normal)
            }
            ConvexSet::Affine(a) => a.distance(y),
        }
    }

    /// Membership up to [`MEMBERSHIP_TOL`].
    pub fn contains(&self, y: &Vector) -> bool {
        self.distance(y) <= membership_slack(y)
    }

    /// Strict interior membership. Affine sets of positive codimension have
    /// empty interior.
    pub fn contains_interior(&self, y: &Vector) -> bool {
        match self {
            ConvexSet::Ball { center, radius } => distance(y, center) < *radius,
            ConvexSet::Box { lo, hi } => y
                .iter()
                .zip(lo.iter().zip(hi.iter()))
                .all(|(v, (l, h))| l < v && v < h),
            ConvexSet::Halfspace { normal, offset } => normal.dot(y) < *offset,
            ConvexSet::Affine(a) => a.basis.is_empty(),
        }
    }

    /// Support function `sigma_C(u) = sup_{x in C} <x, u>`.
    pub fn support(&self, u: &Vector) -> ExtendedReal {
        match self {
            ConvexSet::Ball { center, radius } => {
                ExtendedReal::Finite(center.dot(u) + radius * norm(u))
            }
            ConvexSet::Box { lo, hi } => {
                let mut total = 0.0;
                for ((&ui, &l), &h) in u.iter().zip(lo.iter()).zip(hi.iter()) {
                    if ui > 0.0 {
                        if h == f64::INFINITY {
                            return ExtendedReal::PosInf;
                        }
                        total += ui * h;
                    } else if ui < 0.0 {
                        if l == f64::NEG_INFINITY {
                            return ExtendedReal::PosInf;
                        }
                        total += ui * l;
                    }
                }
                ExtendedReal::Finite(total)
            }
            ConvexSet::Halfspace { normal, offset } => {
                let nn = normal.dot(normal);
                let t = normal.dot(u) / nn;
                let mut orth = u.clone();
                orth.scaled_add(-t, normal);
                let slack = membership_slack(u);
                if norm(&orth) > slack || t * nn.sqrt() < -slack {
                    ExtendedReal::PosInf
                } else {
                    ExtendedReal::Finite(t.max(0.0) * offset)
                }
            }
            ConvexSet::Affine(a) => a.support(u),
        }
    }
}

fn finite_entries(what: &str, v: &Vector) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{what} has non-finite entries"
        )))
    }
}

/// Effective domain classification, used by the qualification checks.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    FullSpace,
    Set(ConvexSet),
    Other,
}

/// A proper lower semicontinuous convex function with an exact prox.
pub trait ProxFunction: fmt::Debug + Send + Sync {
    fn name(&self) -> String;

    fn eval(&self, y: &Vector) -> ExtendedReal;

    /// Minimizer of `g(x) + |x - y|^2 / (2 gamma)`.
    fn prox(&self, gamma: f64, y: &Vector) -> Vector;

    /// `prox_{gamma g*}(v)`.
    fn prox_conjugate(&self, gamma: f64, v: &Vector) -> Vector {
        moreau_conjugate_prox(self, gamma, v)
    }

    /// `g*(v)` when a closed form is available.
    fn conjugate_eval(&self, _v: &Vector) -> Option<ExtendedReal> {
        None
    }

    fn domain(&self) -> Domain {
        Domain::Other
    }

    /// Fixed ambient dimension, if the function carries one.
    fn dim(&self) -> Option<usize> {
        None
    }

    /// Lipschitz constant of `g` on `dom g ∩ {|y| <= radius}` in `R^dim`.
    fn lipschitz_bound(&self, _dim: usize, _radius: f64) -> Option<f64> {
        None
    }
}

/// `v - gamma prox_{g/gamma}(v/gamma)`.
pub fn moreau_conjugate_prox<G: ProxFunction + ?Sized>(g: &G, gamma: f64, v: &Vector) -> Vector {
    let inner = g.prox(1.0 / gamma, &(v / gamma));
    v - &(inner * gamma)
}

pub fn checked_eval(g: &dyn ProxFunction, y: &Vector) -> Result<ExtendedReal> {
    if let Some(d) = g.dim() {
        check_dim(d, y.len())?;
    }
    Ok(g.eval(y))
}

pub fn checked_prox(g: &dyn ProxFunction, gamma: f64, y: &Vector) -> Result<Vector> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "prox parameter must be positive, got {gamma}"
        )));
    }
    if let Some(d) = g.dim() {
        check_dim(d, y.len())?;
    }
    Ok(g.prox(gamma, y))
}

pub fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// `g = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Zero;

impl ProxFunction for Zero {
    fn name(&self) -> String {
        "zero".into()
    }
    fn eval(&self, _y: &Vector) -> ExtendedReal {
        ExtendedReal::Finite(0.0)
    }
    fn prox(&self, _gamma: f64, y: &Vector) -> Vector {
        y.clone()
    }
    // conjugate is the indicator of {0}
    fn prox_conjugate(&self, _gamma: f64, v: &Vector) -> Vector {
        Vector::zeros(v.len())
    }
    fn conjugate_eval(&self, v: &Vector) -> Option<ExtendedReal> {
        Some(indicator_value(norm(v) <= MEMBERSHIP_TOL))
    }
    fn domain(&self) -> Domain {
        Domain::FullSpace
    }
    fn lipschitz_bound(&self, _dim: usize, _radius: f64) -> Option<f64> {
        Some(0.0)
    }
}

/// `|y|_1`. Its conjugate is the indicator of `[-1, 1]^d`.
#[derive(Debug, Clone, Copy, Default)]
pub struct L1Norm;

impl ProxFunction for L1Norm {
    fn name(&self) -> String {
        "norm1".into()
    }
    fn eval(&self, y: &Vector) -> ExtendedReal {
        ExtendedReal::Finite(y.iter().map(|v| v.abs()).sum())
    }
    fn prox(&self, gamma: f64, y: &Vector) -> Vector {
        y.mapv(|v| soft_threshold(v, gamma))
    }
    fn prox_conjugate(&self, _gamma: f64, v: &Vector) -> Vector {
        v.mapv(|x| x.clamp(-1.0, 1.0))
    }
    fn conjugate_eval(&self, v: &Vector) -> Option<ExtendedReal> {
        let excess = v
            .iter()
            .map(|x| (x.abs() - 1.0).max(0.0))
            .fold(0.0, f64::max);
        Some(indicator_value(excess <= membership_slack(v)))
    }
    fn domain(&self) -> Domain {
        Domain::FullSpace
    }
    fn lipschitz_bound(&self, dim: usize, _radius: f64) -> Option<f64> {
        Some((dim as f64).sqrt())
    }
}

/// `|y|_2`. Its conjugate is the indicator of the closed unit ball.
#[derive(Debug, Clone, Copy, Default)]
pub struct EuclideanNorm;

/// `(1 - gamma / |y|)_+ y`, zero at `y = 0`.
pub fn block_soft_threshold(y: &Vector, gamma: f64) -> Vector {
    let n = norm(y);
    if n <= gamma {
        Vector::zeros(y.len())
    } else {
        y * (1.0 - gamma / n)
    }
}

/// `y / max(1, |y|)`.
pub fn project_unit_ball(y: &Vector) -> Vector {
    let n = norm(y);
    if n <= 1.0 {
        y.clone()
    } else {
        y / n
    }
}

impl ProxFunction for EuclideanNorm {
    fn name(&self) -> String {
        "norm2".into()
    }
    fn eval(&self, y: &Vector) -> ExtendedReal {
        ExtendedReal::Finite(norm(y))
    }
    fn prox(&self, gamma: f64, y: &Vector) -> Vector {
        block_soft_threshold(y, gamma)
    }
    fn prox_conjugate(&self, _gamma: f64, v: &Vector) -> Vector {
        project_unit_ball(v)
    }
    fn conjugate_eval(&self, v: &Vector) -> Option<ExtendedReal> {
        Some(indicator_value(norm(v) - 1.0 <= membership_slack(v)))
    }
    fn domain(&self) -> Domain {
        Domain::FullSpace
    }
    fn lipschitz_bound(&self, _dim: usize, _radius: f64) -> Option<f64> {
        Some(1.0)
    }
}

/// Sum of Euclidean norms over consecutive groups of `group` coordinates.
///
/// With `group = 2` on an interleaved vector field this is the isotropic
/// total-variation integrand; its conjugate is the indicator of the product
/// of unit disks.
#[derive(Debug, Clone, Copy)]
pub struct GroupNorm {
    group: usize,
}

impl GroupNorm {
    pub fn new(group: usize) -> Result<Self> {
        if group == 0 {
            return Err(Error::InvalidParameter(
                "group size must be positive".into(),
            ));
        }
        Ok(GroupNorm { group })
    }

    pub fn group(&self) -> usize {
        self.group
    }

    fn map_groups(&self, y: &Vector, f: impl Fn(&[f64], &mut [f64])) -> Vector {
        let src = y.as_slice().expect("contiguous vector");
        let mut out = vec![0.0; src.len()];
        for (chunk, dst) in src.chunks(self.group).zip(out.chunks_mut(self.group)) {
            f(chunk, dst);
        }
        Array1::from(out)
    }
}

fn slice_norm(s: &[f64]) -> f64 {
    s.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl ProxFunction for GroupNorm {
    fn name(&self) -> String {
        format!("group_norm({})", self.group)
    }
    fn eval(&self, y: &Vector) -> ExtendedReal {
        let src = y.as_slice().expect("contiguous vector");
        ExtendedReal::Finite(src.chunks(self.group).map(slice_norm).sum())
    }
    fn prox(&self, gamma: f64, y: &Vector) -> Vector {
        self.map_groups(y, |src, dst| {
            let n = slice_norm(src);
            if n > gamma {
                let s = 1.0 - gamma / n;
                for (d, v) in dst.iter_mut().zip(src) {
                    *d = s * v;
                }
            }
        })
    }
    fn prox_conjugate(&self, _gamma: f64, v: &Vector) -> Vector {
        self.map_groups(v, |src, dst| {
            let s = 1.0 / slice_norm(src).max(1.0);
            for (d, v) in dst.iter_mut().zip(src) {
                *d = s * v;
            }
        })
    }
    fn conjugate_eval(&self, v: &Vector) -> Option<ExtendedReal> {
        let src = v.as_slice().expect("contiguous vector");
        let worst = src.chunks(self.group).map(slice_norm).fold(0.0, f64::max);
        Some(indicator_value(worst - 1.0 <= membership_slack(v)))
    }
    fn domain(&self) -> Domain {
        Domain::FullSpace
    }
    fn lipschitz_bound(&self, dim: usize, _radius: f64) -> Option<f64> {
        Some((dim.div_ceil(self.group) as f64).sqrt())
    }
}

/// Separable `sum_k alpha |y_k| + beta |y_k|^2`.
#[derive(Debug, Clone, Copy)]
pub struct ElasticNet {
    alpha: f64,
    beta: f64,
}

pub fn elastic_net(alpha: f64, beta: f64) -> Result<ElasticNet> {
    if !(alpha > 0.0 && alpha.is_finite()) || !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "elastic net needs alpha > 0 and beta > 0, got alpha={alpha}, beta={beta}"
        )));
    }
    Ok(ElasticNet { alpha, beta })
}

impl ElasticNet {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
}

impl ProxFunction for ElasticNet {
    fn name(&self) -> String {
        format!("elastic_net({}, {})", self.alpha, self.beta)
    }
    fn eval(&self, y: &Vector) -> ExtendedReal {
        ExtendedReal::Finite(
            y.iter()
                .map(|v| self.alpha * v.abs() + self.beta * v * v)
                .sum(),
        )
    }
    fn prox(&self, gamma: f64, y: &Vector) -> Vector {
        let shrink = 1.0 + 2.0 * gamma * self.beta;
        y.mapv(|v| soft_threshold(v, gamma * self.alpha) / shrink)
    }
    fn conjugate_eval(&self, v: &Vector) -> Option<ExtendedReal> {
        Some(ExtendedReal::Finite(
            v.iter()
                .map(|u| {
                    let e = (u.abs() - self.alpha).max(0.0);
                    e * e / (4.0 * self.beta)
                })
                .sum(),
        ))
    }
    fn domain(&self) -> Domain {
        Domain::FullSpace
    }
    fn lipschitz_bound(&self, dim: usize, radius: f64) -> Option<f64> {
        Some(self.alpha * (dim as f64).sqrt() + 2.0 * self.beta * radius)
    }
}

/// Indicator `iota_C`; its prox is the projector onto `C` for every `gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct Indicator {
    set: ConvexSet,
}

pub fn make_indicator(set: ConvexSet) -> Indicator {
    Indicator { set }
}

impl Indicator {
    pub fn set(&self) -> &ConvexSet {
        &self.set
    }
}

impl ProxFunction for Indicator {
    fn name(&self) -> String {
        let kind = match self.set {
            ConvexSet::Ball { .. } => "ball",
            ConvexSet::Box { .. } => "box",
            ConvexSet::Halfspace { .. } => "halfspace",
            ConvexSet::Affine(_) => "affine",
        };
        format!("indicator({kind})")
    }
    fn eval(&self, y: &Vector) -> ExtendedReal {
        indicator_value(self.set.contains(y))
    }
    fn prox(&self, _gamma: f64, y: &Vector) -> Vector {
        self.set.project(y)
    }
    fn conjugate_eval(&self, v: &Vector) -> Option<ExtendedReal> {
        Some(self.set.support(v))
    }
    fn domain(&self) -> Domain {
        Domain::Set(self.set.clone())
    }
    fn dim(&self) -> Option<usize> {
        Some(self.set.dim())
    }
    fn lipschitz_bound(&self, _dim: usize, _radius: f64) -> Option<f64> {
        Some(0.0)
    }
}
