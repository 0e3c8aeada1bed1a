//! Independent reference solutions with error bounds.
//!
//! * [`grid_oracle`]: exhaustive search over a box in dimension at most 3.
//!   If `x_g` is the best grid point, `x*` the minimizer and `g` a feasible
//!   grid point within `d` of `x*`, strong convexity gives
//!   `|x_g - x*|^2 / 2 <= F(g) - F(x*) <= (Lip + B) d + d^2 / 2`, where `Lip`
//!   bounds the Lipschitz constant of the nonsmooth part on the box and `B`
//!   bounds `|x* - z|`. Without constraints `d` is the grid covering radius;
//!   with constraints an interior ball `B(c, r0)` of the feasible set is
//!   required and `d = delta (1 + |c - x*| / r0)`.
//! * [`scalar_oracle`]: exact piecewise analysis in dimension 1.
//! * [`closed_form_oracle`]: a single term with a scaled identity, equal
//!   functions of the identity, a halfspace preimage, or a ball cut by a
//!   halfspace.
//! * [`long_run_reference`]: agreement of two long runs with different step
//!   sizes. This is evidence, not a bound.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{FunctionSpec, OperatorSpec, ProblemSpec};
use crate::error::{Error, Result};
use crate::prox::{ConvexSet, Domain};
use crate::solver::{
    primal_objective, CompositeProxProblem, Schedule, Solution, SolverConfig, SplittingSolver,
};
use crate::spaces::{distance, norm, norm_upper_bound, Vector};

/// Dimensions up to which the grid oracle applies.
pub const GRID_MAX_DIM: usize = 3;
/// Refinement stops once a level shrinks the radius by less than this factor.
const REFINE_GAIN: f64 = 0.99;
/// Refinement box half-width as a multiple of the current radius.
const REFINE_BOX: f64 = 1.25;
/// Relative allowance for rounding in closed-form and scalar references.
pub const ROUNDING_ALLOWANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateMethod {
    Grid,
    ScalarAnalysis,
    ClosedForm,
    LongRun,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    #[serde(with = "vector_serde")]
    pub reference_x: Vector,
    pub method: CertificateMethod,
    pub guaranteed_radius: f64,
}

impl Certificate {
    /// Whether `x` lies within `max(tol, guaranteed_radius)` of the reference.
    pub fn accepts(&self, x: &Vector, tol: f64) -> bool {
        x.len() == self.reference_x.len()
            && distance(x, &self.reference_x) <= tol.max(self.guaranteed_radius)
    }
}

mod vector_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::spaces::Vector;

    pub fn serialize<S: Serializer>(v: &Vector, s: S) -> Result<S::Ok, S::Error> {
        v.to_vec().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vector, D::Error> {
        Vec::<f64>::deserialize(d).map(Vector::from)
    }
}

#[derive(Debug, Clone)]
pub struct GridOptions {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Points per coordinate on the initial box.
    pub points: usize,
    /// Bounds on points per coordinate on each refinement box.
    pub refine_points: usize,
    pub max_refine_points: usize,
    pub refinements: usize,
    /// A ball `(c, r0)` contained in the feasible set; required when some
    /// term is an indicator.
    pub interior_ball: Option<(Vector, f64)>,
}

impl GridOptions {
    /// `[-5, 5]^dim`, sized so a level costs about a million evaluations.
    pub fn new(dim: usize) -> Self {
        let (points, refine_points, max_refine_points) = match dim {
            1 => (10_001, 2_001, 20_001),
            2 => (1_001, 401, 2_001),
            _ => (101, 81, 161),
        };
        GridOptions {
            lo: vec![-5.0; dim],
            hi: vec![5.0; dim],
            points,
            refine_points,
            max_refine_points,
            refinements: 40,
            interior_ball: None,
        }
    }

    pub fn with_interior_ball(mut self, center: Vector, radius: f64) -> Self {
        self.interior_ball = Some((center, radius));
        self
    }

    pub fn with_points(mut self, points: usize, refine_points: usize) -> Self {
        self.points = points;
        self.refine_points = refine_points;
        self.max_refine_points = refine_points;
        self
    }
}

/// Whether `B(center, radius)` lies inside the set.
fn ball_inside(set: &ConvexSet, center: &Vector, radius: f64) -> bool {
    match set {
        ConvexSet::Ball {
            center: c,
            radius: r,
        } => distance(center, c) + radius <= *r,
        ConvexSet::Box { lo, hi } => center
            .iter()
            .zip(lo.iter().zip(hi.iter()))
            .all(|(y, (l, h))| y - radius >= *l && y + radius <= *h),
        ConvexSet::Halfspace { normal, offset } => {
            normal.dot(center) + norm(normal) * radius <= *offset
        }
        ConvexSet::Affine(_) => false,
    }
}

struct BoxGeometry {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl BoxGeometry {
    fn max_corner_distance(&self, p: &Vector) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .zip(p.iter())
            .map(|((l, h), c)| {
                let d = (c - l).abs().max((h - c).abs());
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }
}

struct GridScan {
    best: Vector,
    best_index: Vec<usize>,
    finite: bool,
}

fn scan(problem: &CompositeProxProblem, geom: &BoxGeometry, points: usize) -> Result<GridScan> {
    let d = geom.lo.len();
    let step: Vec<f64> = geom
        .lo
        .iter()
        .zip(&geom.hi)
        .map(|(l, h)| (h - l) / (points - 1) as f64)
        .collect();
    let mut index = vec![0usize; d];
    let mut x = Vector::from(geom.lo.clone());
    let mut best_value = f64::INFINITY;
    let mut best = x.clone();
    let mut best_index = index.clone();
    loop {
        for j in 0..d {
            x[j] = geom.lo[j] + step[j] * index[j] as f64;
        }
        let value = primal_objective(problem, &x)?.to_f64();
        // strict comparison keeps the lowest lexicographic index on ties
        if value < best_value {
            best_value = value;
            best.assign(&x);
            best_index.clone_from(&index);
        }
        let mut j = d;
        loop {
            if j == 0 {
                return Ok(GridScan {
                    best,
                    best_index,
                    finite: best_value.is_finite(),
                });
            }
            j -= 1;
            index[j] += 1;
            if index[j] < points {
                break;
            }
            index[j] = 0;
        }
    }
}

/// Exhaustive grid search with successive refinement around the incumbent.
pub fn grid_oracle(problem: &CompositeProxProblem, options: &GridOptions) -> Result<Certificate> {
    let d = problem.dim();
    if d == 0 || d > GRID_MAX_DIM {
        return Err(Error::OracleNotApplicable(format!(
            "grid search needs dimension 1..=3, got {d}"
        )));
    }
    if options.lo.len() != d || options.hi.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: options.lo.len().min(options.hi.len()),
        });
    }
    if options.points < 3 || options.refine_points < 3 {
        return Err(Error::InvalidParameter(
            "grid needs at least 3 points per coordinate".into(),
        ));
    }
    if options.lo.iter().zip(&options.hi).any(|(l, h)| !(l < h)) {
        return Err(Error::InvalidParameter("grid bounds need lo < hi".into()));
    }

    let norms = problem
        .terms()
        .iter()
        .map(|t| norm_upper_bound(t.operator.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    let mut constrained = false;
    for (i, t) in problem.terms().iter().enumerate() {
        match t.function.domain() {
            Domain::FullSpace => {}
            Domain::Set(set) => {
                constrained = true;
                let Some((c, r0)) = &options.interior_ball else {
                    return Err(Error::OracleNotApplicable(
                        "constrained problem needs an interior ball of the feasible set".into(),
                    ));
                };
                if c.iter()
                    .zip(options.lo.iter().zip(&options.hi))
                    .any(|(v, (l, h))| v < l || v > h)
                {
                    return Err(Error::OracleNotApplicable(
                        "interior ball center lies outside the grid box".into(),
                    ));
                }
                let y = &t.operator.apply(c) - &t.shift;
                if !ball_inside(&set, &y, norms[i] * r0) {
                    return Err(Error::OracleNotApplicable(format!(
                        "interior ball is not inside the constraint of term {i}"
                    )));
                }
            }
            Domain::Other => {
                return Err(Error::OracleNotApplicable(format!(
                    "term {i} has an unclassified domain"
                )));
            }
        }
    }

    let z = problem.z();
    let mut geom = BoxGeometry {
        lo: options.lo.clone(),
        hi: options.hi.clone(),
    };
    let mut best: Option<Certificate> = None;
    // slack between the current box and the ball known to contain x*
    let mut margin = f64::INFINITY;
    let mut prev_spacing = f64::INFINITY;
    for level in 0..=options.refinements {
        let points = if level == 0 {
            options.points
        } else {
            // aim to halve the spacing at every level
            let width = geom.hi[0] - geom.lo[0];
            let wanted = (2.0 * width / prev_spacing).ceil() as usize + 1;
            wanted.clamp(
                options.refine_points,
                options.max_refine_points.max(options.refine_points),
            )
        };
        let found = scan(problem, &geom, points)?;
        if !found.finite {
            return Err(Error::OracleNotApplicable(
                "no grid point has a finite objective".into(),
            ));
        }
        if level == 0 && found.best_index.iter().any(|&k| k == 0 || k == points - 1) {
            return Err(Error::GridBoundary);
        }

        let spacing = geom
            .lo
            .iter()
            .zip(&geom.hi)
            .map(|(l, h)| (h - l) / (points - 1) as f64)
            .fold(0.0, f64::max);
        let delta = 0.5 * spacing * (d as f64).sqrt();
        let origin_reach = geom.max_corner_distance(&Vector::zeros(d));
        let mut lip = 0.0;
        for (i, t) in problem.terms().iter().enumerate() {
            let radius = norms[i] * origin_reach + norm(&t.shift);
            let l = t
                .function
                .lipschitz_bound(t.operator.dim_out(), radius)
                .ok_or_else(|| {
                    Error::OracleNotApplicable(format!(
                        "no Lipschitz bound for term {i} ({})",
                        t.function.name()
                    ))
                })?;
            lip += t.weight * l * norms[i];
        }
        let reach = geom.max_corner_distance(z);
        let dist = if constrained {
            let (c, r0) = options.interior_ball.as_ref().expect("checked above");
            if delta > *r0 {
                break;
            }
            delta * (1.0 + geom.max_corner_distance(c) / r0)
        } else {
            delta
        };
        // a feasible grid point near x* is only guaranteed inside the box
        if constrained && dist - delta > margin {
            break;
        }
        let radius = (2.0 * (lip + reach) * dist + dist * dist).sqrt();
        log::debug!("grid level {level}: {points} points, radius {radius:.3e}");
        if best
            .as_ref()
            .is_some_and(|b| radius >= REFINE_GAIN * b.guaranteed_radius)
        {
            break;
        }

        let half = REFINE_BOX * radius;
        margin = half - radius;
        prev_spacing = spacing;
        geom = BoxGeometry {
            lo: found.best.iter().map(|c| c - half).collect(),
            hi: found.best.iter().map(|c| c + half).collect(),
        };
        best = Some(Certificate {
            reference_x: found.best,
            method: CertificateMethod::Grid,
            guaranteed_radius: radius,
        });
    }
    best.ok_or_else(|| Error::OracleNotApplicable("grid too coarse for the interior ball".into()))
}

/// `weight |slope x - offset|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarAbs {
    pub weight: f64,
    pub slope: f64,
    pub offset: f64,
}

/// `weight (slope x - offset)^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarQuad {
    pub weight: f64,
    pub slope: f64,
    pub offset: f64,
}

/// `(x - z)^2 / 2 + sum abs + sum quad` restricted to `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarObjective {
    pub z: f64,
    pub abs_terms: Vec<ScalarAbs>,
    pub quad_terms: Vec<ScalarQuad>,
    pub lo: f64,
    pub hi: f64,
}

impl ScalarObjective {
    pub fn new(z: f64) -> Self {
        ScalarObjective {
            z,
            abs_terms: Vec::new(),
            quad_terms: Vec::new(),
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    /// Intersects the feasible interval with `{x : slope x - offset in [a, b]}`.
    pub fn restrict(&mut self, slope: f64, offset: f64, a: f64, b: f64) -> Result<()> {
        if slope == 0.0 {
            if -offset < a || -offset > b {
                return Err(Error::OracleNotApplicable(
                    "constraint is infeasible".into(),
                ));
            }
            return Ok(());
        }
        let (p, q) = ((a + offset) / slope, (b + offset) / slope);
        self.lo = self.lo.max(p.min(q));
        self.hi = self.hi.min(p.max(q));
        if self.lo > self.hi {
            return Err(Error::OracleNotApplicable(
                "constraints are infeasible".into(),
            ));
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x < self.lo || x > self.hi {
            return f64::INFINITY;
        }
        let mut f = 0.5 * (x - self.z).powi(2);
        f += self
            .abs_terms
            .iter()
            .map(|t| t.weight * (t.slope * x - t.offset).abs())
            .sum::<f64>();
        f += self
            .quad_terms
            .iter()
            .map(|t| t.weight * (t.slope * x - t.offset).powi(2))
            .sum::<f64>();
        f
    }

    /// The minimizer, from stationarity on each linear piece of the
    /// derivative and subgradient inclusion at each breakpoint.
    pub fn minimize(&self) -> f64 {
        // derivative on a piece: q x - c + s with s the signed kink sum
        let mut q = 1.0;
        let mut c = self.z;
        for t in &self.quad_terms {
            q += 2.0 * t.weight * t.slope * t.slope;
            c += 2.0 * t.weight * t.slope * t.offset;
        }
        let mut kinks: Vec<(f64, f64)> = self
            .abs_terms
            .iter()
            .filter(|t| t.slope != 0.0 && t.weight != 0.0)
            .map(|t| (t.offset / t.slope, t.weight * t.slope.abs()))
            .collect();
        kinks.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut s: f64 = -kinks.iter().map(|k| k.1).sum::<f64>();
        let mut left = f64::NEG_INFINITY;
        let mut i = 0;
        let unconstrained = loop {
            let right = kinks.get(i).map_or(f64::INFINITY, |k| k.0);
            let x = (c - s) / q;
            if x > left && x < right {
                break x;
            }
            if i == kinks.len() {
                // only reachable through rounding at the last kink
                break left;
            }
            let mut jump = 0.0;
            while i < kinks.len() && kinks[i].0 == right {
                jump += 2.0 * kinks[i].1;
                i += 1;
            }
            let below = q * right - c + s;
            if below <= 0.0 && below + jump >= 0.0 {
                break right;
            }
            s += jump;
            left = right;
        };
        unconstrained.clamp(self.lo, self.hi)
    }

    /// Decomposes a one-dimensional problem description.
    pub fn from_spec(spec: &ProblemSpec, base_dir: &Path) -> Result<Self> {
        if spec.z.len() != 1 {
            return Err(Error::OracleNotApplicable(
                "scalar analysis needs dimension 1".into(),
            ));
        }
        let mut obj = ScalarObjective::new(spec.z[0]);
        for (i, t) in spec.terms.iter().enumerate() {
            let op = t.operator.build(1, base_dir)?;
            if op.dim_out() != 1 {
                return Err(Error::OracleNotApplicable(format!(
                    "term {i} does not map to the line"
                )));
            }
            let a = op.apply(&Vector::from(vec![1.0]))[0];
            let r = t
                .shift
                .as_ref()
                .map_or(0.0, |s| s.first().copied().unwrap_or(0.0));
            let w = t.weight;
            match &t.function {
                FunctionSpec::Zero => {}
                FunctionSpec::Norm1
                | FunctionSpec::Norm2
                | FunctionSpec::GroupNorm { group: 1 } => {
                    obj.abs_terms.push(ScalarAbs {
                        weight: w,
                        slope: a,
                        offset: r,
                    });
                }
                FunctionSpec::ElasticNet { alpha, beta } => {
                    obj.abs_terms.push(ScalarAbs {
                        weight: w * alpha,
                        slope: a,
                        offset: r,
                    });
                    obj.quad_terms.push(ScalarQuad {
                        weight: w * beta,
                        slope: a,
                        offset: r,
                    });
                }
                FunctionSpec::Ball { center, radius } => {
                    obj.restrict(a, r, center[0] - radius, center[0] + radius)?;
                }
                FunctionSpec::Box { lo, hi } => obj.restrict(a, r, lo[0], hi[0])?,
                FunctionSpec::Halfspace { normal, offset } => {
                    let n = normal[0];
                    let bound = offset / n;
                    if n > 0.0 {
                        obj.restrict(a, r, f64::NEG_INFINITY, bound)?;
                    } else {
                        obj.restrict(a, r, bound, f64::INFINITY)?;
                    }
                }
                FunctionSpec::Affine { rows, rhs } => {
                    let m = rows[0][0];
                    if m == 0.0 {
                        return Err(Error::OracleNotApplicable(
                            "degenerate affine constraint".into(),
                        ));
                    }
                    obj.restrict(a, r, rhs[0] / m, rhs[0] / m)?;
                }
                other => {
                    return Err(Error::OracleNotApplicable(format!(
                        "{other:?} is not scalar"
                    )));
                }
            }
        }
        Ok(obj)
    }
}

pub fn scalar_oracle(objective: &ScalarObjective) -> Result<Certificate> {
    let x = objective.minimize();
    Ok(Certificate {
        reference_x: Vector::from(vec![x]),
        method: CertificateMethod::ScalarAnalysis,
        guaranteed_radius: ROUNDING_ALLOWANCE * (1.0 + x.abs()),
    })
}

fn shift_of(t: &crate::config::TermSpec, dim: usize) -> Result<Vector> {
    match &t.shift {
        Some(s) if s.len() == dim => Ok(Vector::from(s.clone())),
        Some(s) => Err(Error::DimensionMismatch {
            expected: dim,
            found: s.len(),
        }),
        None => Ok(Vector::zeros(dim)),
    }
}

/// `m = 1` with `L = a Id`: `x = (r + prox_{a^2 w g}(a z - r)) / a`.
fn scaled_single(spec: &ProblemSpec, z: &Vector) -> Result<Option<Vector>> {
    let [t] = spec.terms.as_slice() else {
        return Ok(None);
    };
    let a = match &t.operator {
        OperatorSpec::Identity => 1.0,
        OperatorSpec::ScaledIdentity { scale } if *scale != 0.0 => *scale,
        _ => return Ok(None),
    };
    let r = shift_of(t, z.len())?;
    let y = t.function.build()?.prox(a * a * t.weight, &(z * a - &r));
    Ok(Some((y + &r) / a))
}

/// Equal functions of the identity with zero shifts: `prox_{sum w g}(z)`.
fn equal_plain(spec: &ProblemSpec, z: &Vector) -> Result<Option<Vector>> {
    let Some(first) = spec.terms.first() else {
        return Ok(None);
    };
    let plain = spec.terms.iter().all(|t| {
        t.function == first.function
            && t.operator == OperatorSpec::Identity
            && t.shift.as_ref().is_none_or(|s| s.iter().all(|v| *v == 0.0))
    });
    if !plain {
        return Ok(None);
    }
    let total: f64 = spec.terms.iter().map(|t| t.weight).sum();
    Ok(Some(first.function.build()?.prox(total, z)))
}

/// A single halfspace constraint `n . (L x - r) <= b` is the halfspace
/// `(L* n) . x <= b + n . r`, whatever the operator.
fn halfspace_preimage(spec: &ProblemSpec, z: &Vector) -> Result<Option<Vector>> {
    let [t] = spec.terms.as_slice() else {
        return Ok(None);
    };
    let FunctionSpec::Halfspace { normal, offset } = &t.function else {
        return Ok(None);
    };
    if matches!(t.operator, OperatorSpec::Csv { .. }) {
        return Ok(None);
    }
    let op = t.operator.build(z.len(), Path::new("."))?;
    let n = Vector::from(normal.clone());
    let a = op.adjoint(&n);
    let b = offset + n.dot(&shift_of(t, op.dim_out())?);
    let excess = a.dot(z) - b;
    if excess <= 0.0 {
        return Ok(Some(z.clone()));
    }
    let aa = a.dot(&a);
    if aa == 0.0 {
        return Err(Error::OracleNotApplicable("empty constraint set".into()));
    }
    Ok(Some(z - &(&a * (excess / aa))))
}

/// Projection onto a ball intersected with a halfspace, both on the identity
/// with zero shifts. When neither single projection is feasible, the answer
/// lies on the sphere of the ball cut by the hyperplane.
fn ball_halfspace(spec: &ProblemSpec, z: &Vector) -> Result<Option<Vector>> {
    let plain = |t: &crate::config::TermSpec| {
        t.operator == OperatorSpec::Identity
            && t.shift.as_ref().is_none_or(|s| s.iter().all(|v| *v == 0.0))
    };
    let (ball, half) = match spec.terms.as_slice() {
        [a, b] if plain(a) && plain(b) => match (&a.function, &b.function) {
            (FunctionSpec::Ball { .. }, FunctionSpec::Halfspace { .. }) => {
                (&a.function, &b.function)
            }
            (FunctionSpec::Halfspace { .. }, FunctionSpec::Ball { .. }) => {
                (&b.function, &a.function)
            }
            _ => return Ok(None),
        },
        _ => return Ok(None),
    };
    let (FunctionSpec::Ball { center, radius }, FunctionSpec::Halfspace { normal, offset }) =
        (ball, half)
    else {
        unreachable!("matched above")
    };
    let (c, n) = (Vector::from(center.clone()), Vector::from(normal.clone()));
    let nn = n.dot(&n);
    if c.len() != z.len() || n.len() != z.len() || nn == 0.0 {
        return Ok(None);
    }
    let onto_plane = |y: &Vector| {
        let e = n.dot(y) - offset;
        if e > 0.0 {
            y - &(&n * (e / nn))
        } else {
            y.clone()
        }
    };
    let onto_ball = |y: &Vector| {
        let d = distance(y, &c);
        if d > *radius {
            &c + &((y - &c) * (radius / d))
        } else {
            y.clone()
        }
    };
    let p = onto_ball(z);
    if n.dot(&p) <= *offset {
        return Ok(Some(p));
    }
    let q = onto_plane(z);
    if distance(&q, &c) <= *radius {
        return Ok(Some(q));
    }
    let e = (n.dot(&c) - offset) / nn.sqrt();
    let cut = radius * radius - e * e;
    if cut < 0.0 {
        return Err(Error::OracleNotApplicable("empty constraint set".into()));
    }
    let c_cut = &c - &(&n * (e / nn.sqrt()));
    let d = distance(&q, &c_cut);
    Ok(Some(&c_cut + &((&q - &c_cut) * (cut.sqrt() / d))))
}

type ClosedForm = fn(&ProblemSpec, &Vector) -> Result<Option<Vector>>;

/// Recognises a few structures with explicit solutions.
pub fn closed_form_oracle(spec: &ProblemSpec) -> Result<Certificate> {
    let z = Vector::from(spec.z.clone());
    let forms: [ClosedForm; 4] = [
        scaled_single,
        equal_plain,
        halfspace_preimage,
        ball_halfspace,
    ];
    for form in forms {
        if let Some(x) = form(spec, &z)? {
            let radius = ROUNDING_ALLOWANCE * (1.0 + norm(&x));
            return Ok(Certificate {
                reference_x: x,
                method: CertificateMethod::ClosedForm,
                guaranteed_radius: radius,
            });
        }
    }
    Err(Error::OracleNotApplicable(
        "no closed form for this structure".into(),
    ))
}

#[derive(Debug, Clone, Copy)]
pub struct LongRunOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Largest admissible distance between the two runs.
    pub agreement: f64,
}

impl Default for LongRunOptions {
    fn default() -> Self {
        LongRunOptions {
            tol: 1e-12,
            max_iter: 1_000_000,
            agreement: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LongRunPair {
    pub short_step: Solution,
    pub long_step: Solution,
    pub distance: f64,
}

/// Runs with `gamma = rho / 2` and `gamma = 3 rho / 2` in any dimension.
pub fn long_run_cross_check(
    problem: &CompositeProxProblem,
    base: &SolverConfig,
    options: &LongRunOptions,
) -> Result<LongRunPair> {
    let run = |multiple: f64| -> Result<Solution> {
        let config = SolverConfig {
            gamma: Schedule::RhoMultiple(multiple),
            tol: options.tol,
            max_iter: options.max_iter,
            ..base.clone()
        };
        Ok(SplittingSolver::new(problem, config)?.solve()?.0)
    };
    let short_step = run(0.5)?;
    let long_step = run(1.5)?;
    let distance = distance(&short_step.x, &long_step.x);
    Ok(LongRunPair {
        short_step,
        long_step,
        distance,
    })
}

/// Reference for problems too large for the other oracles (dimension > 3).
pub fn long_run_reference(
    problem: &CompositeProxProblem,
    base: &SolverConfig,
    options: &LongRunOptions,
) -> Result<Certificate> {
    if problem.dim() <= GRID_MAX_DIM {
        return Err(Error::OracleNotApplicable(format!(
            "dimension {} is covered by the grid oracle",
            problem.dim()
        )));
    }
    let pair = long_run_cross_check(problem, base, options)?;
    if pair.distance > options.agreement {
        return Err(Error::ScheduleDisagreement {
            distance: pair.distance,
            limit: options.agreement,
        });
    }
    Ok(Certificate {
        reference_x: pair.long_step.x,
        method: CertificateMethod::LongRun,
        guaranteed_radius: pair.distance.max(options.tol),
    })
}

/// A ball `B(center, radius)` inside the feasible set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteriorBall {
    pub center: Vec<f64>,
    pub radius: f64,
}

/// A problem with its frozen reference solutions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifiedFixture {
    pub name: String,
    pub problem: ProblemSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interior_ball: Option<InteriorBall>,
    #[serde(default)]
    pub certificates: Vec<Certificate>,
}

impl CertifiedFixture {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(std::fs::write(path, text)?)
    }

    /// Every applicable certificate, in the order closed form, scalar, grid.
    pub fn compute_certificates(&self, base_dir: &Path) -> Result<Vec<Certificate>> {
        let mut out = Vec::new();
        if let Ok(c) = closed_form_oracle(&self.problem) {
            out.push(c);
        }
        if let Ok(obj) = ScalarObjective::from_spec(&self.problem, base_dir) {
            out.push(scalar_oracle(&obj)?);
        }
        let problem = self.problem.build(base_dir)?;
        if problem.dim() <= GRID_MAX_DIM {
            let mut options = GridOptions::new(problem.dim());
            if let Some(ball) = &self.interior_ball {
                options =
                    options.with_interior_ball(Vector::from(ball.center.clone()), ball.radius);
            }
            match grid_oracle(&problem, &options) {
                Ok(c) => out.push(c),
                Err(Error::OracleNotApplicable(why)) => {
                    log::info!("{}: grid oracle skipped: {why}", self.name)
                }
                Err(e) => return Err(e),
            }
        }
        Ok(out)
    }

    /// The certificate with the smallest radius.
    pub fn best(&self) -> Option<&Certificate> {
        self.certificates
            .iter()
            .min_by(|a, b| a.guaranteed_radius.total_cmp(&b.guaranteed_radius))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prox::{make_indicator, L1Norm};
    use crate::solver::Term;
    use crate::spaces::Identity;
    use std::sync::Arc;

    fn spec(text: &str) -> ProblemSpec {
        ProblemSpec::from_json(text, "test").unwrap()
    }

    #[test]
    fn scalar_soft_threshold() {
        let s = spec(r#"{"z": [3.0], "terms": [{"weight": 1.0, "function": {"kind": "norm1"}}]}"#);
        let obj = ScalarObjective::from_spec(&s, Path::new(".")).unwrap();
        let c = scalar_oracle(&obj).unwrap();
        assert_eq!(c.reference_x[0], 2.0);
        let s = spec(r#"{"z": [0.5], "terms": [{"weight": 1.0, "function": {"kind": "norm1"}}]}"#);
        let c = scalar_oracle(&ScalarObjective::from_spec(&s, Path::new(".")).unwrap()).unwrap();
        assert_eq!(c.reference_x[0], 0.0);
    }

    #[test]
    fn scalar_kink_and_interval() {
        let mut obj = ScalarObjective::new(5.0);
        obj.abs_terms.push(ScalarAbs {
            weight: 10.0,
            slope: 2.0,
            offset: 2.0,
        });
        assert_eq!(obj.minimize(), 1.0);
        obj.restrict(1.0, 0.0, f64::NEG_INFINITY, 0.5).unwrap();
        assert_eq!(obj.minimize(), 0.5);
        let mut q = ScalarObjective::new(1.0);
        q.quad_terms.push(ScalarQuad {
            weight: 0.5,
            slope: 1.0,
            offset: 0.0,
        });
        assert!((q.minimize() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn scalar_matches_dense_scan() {
        let mut obj = ScalarObjective::new(0.7);
        for (w, a, b) in [(0.3, 1.0, 0.2), (0.2, -2.0, 1.0), (0.25, 0.5, -0.4)] {
            obj.abs_terms.push(ScalarAbs {
                weight: w,
                slope: a,
                offset: b,
            });
        }
        let x = obj.minimize();
        let f = obj.eval(x);
        for k in -2000..=2000 {
            let t = k as f64 * 1e-3;
            assert!(obj.eval(t) >= f - 1e-12);
        }
    }

    #[test]
    fn closed_form_scaled_identity() {
        // |2x - 1| + (x - 3)^2/2: x = (1 + soft(5, 4)) / 2 = 1
        let s = spec(
            r#"{"z": [3.0], "terms": [{"weight": 1.0, "function": {"kind": "norm1"},
                "operator": {"kind": "scaled_identity", "scale": 2.0}, "shift": [1.0]}]}"#,
        );
        let c = closed_form_oracle(&s).unwrap();
        assert!((c.reference_x[0] - 1.0).abs() < 1e-15);
        let two = spec(
            r#"{"z": [3.0, -0.5], "terms": [{"weight": 0.5, "function": {"kind": "norm1"}},
                {"weight": 0.5, "function": {"kind": "norm1"}}]}"#,
        );
        let c = closed_form_oracle(&two).unwrap();
        assert_eq!(c.reference_x.to_vec(), vec![2.0, 0.0]);
    }

    #[test]
    fn closed_form_projections() {
        let half = spec(
            r#"{"z": [1.0, 1.0], "terms": [{"weight": 1.0,
                "function": {"kind": "halfspace", "normal": [1.0], "offset": 0.5},
                "operator": {"kind": "matrix", "rows": [[1.0, 1.0]]}, "shift": [0.5]}]}"#,
        );
        let c = closed_form_oracle(&half).unwrap();
        assert!(distance(&c.reference_x, &Vector::from(vec![0.5, 0.5])) < 1e-15);

        let cut = |z: &str| {
            spec(&format!(
                r#"{{"z": {z}, "terms": [
                    {{"weight": 0.5, "function": {{"kind": "ball", "center": [0.0, 0.0], "radius": 1.0}}}},
                    {{"weight": 0.5, "function": {{"kind": "halfspace", "normal": [1.0, 0.0], "offset": 0.0}}}}]}}"#
            ))
        };
        for (z, want) in [
            ("[1.0, 1.0]", [0.0, 1.0]),
            ("[-3.0, 0.0]", [-1.0, 0.0]),
            ("[2.0, -0.5]", [0.0, -0.5]),
        ] {
            let c = closed_form_oracle(&cut(z)).unwrap();
            assert!(
                distance(&c.reference_x, &Vector::from(want.to_vec())) < 1e-15,
                "{z}"
            );
        }
        // both constraints active: the nearest point of the cut sphere
        let c = closed_form_oracle(&cut("[3.0, 3.0]")).unwrap();
        assert!(distance(&c.reference_x, &Vector::from(vec![0.0, 1.0])) < 1e-15);
    }

    #[test]
    fn grid_on_soft_threshold() {
        let problem = CompositeProxProblem::new(
            Vector::from(vec![2.0, -0.3]),
            vec![Term::plain(1.0, Arc::new(L1Norm), 2)],
        )
        .unwrap();
        let c = grid_oracle(&problem, &GridOptions::new(2)).unwrap();
        let exact = Vector::from(vec![1.0, 0.0]);
        assert!(distance(&c.reference_x, &exact) <= c.guaranteed_radius);
        assert!(c.guaranteed_radius < 0.05, "{}", c.guaranteed_radius);
    }

    #[test]
    fn grid_boundary_and_constraints() {
        let far = CompositeProxProblem::new(
            Vector::from(vec![50.0]),
            vec![Term::plain(1.0, Arc::new(L1Norm), 1)],
        )
        .unwrap();
        assert!(matches!(
            grid_oracle(&far, &GridOptions::new(1)),
            Err(Error::GridBoundary)
        ));

        let disk = make_indicator(ConvexSet::unit_ball(2));
        let problem = CompositeProxProblem::new(
            Vector::from(vec![2.0, 0.0]),
            vec![Term::plain(1.0, Arc::new(disk), 2)],
        )
        .unwrap();
        let opts = GridOptions::new(2).with_points(201, 101);
        assert!(matches!(
            grid_oracle(&problem, &opts),
            Err(Error::OracleNotApplicable(_))
        ));
        let c = grid_oracle(&problem, &opts.with_interior_ball(Vector::zeros(2), 0.9)).unwrap();
        assert!(distance(&c.reference_x, &Vector::from(vec![1.0, 0.0])) <= c.guaranteed_radius);
    }

    #[test]
    fn long_run_requires_high_dimension() {
        let problem = CompositeProxProblem::new(
            Vector::from(vec![1.0]),
            vec![Term::new(
                1.0,
                Arc::new(L1Norm),
                Arc::new(Identity::new(1)),
                Vector::zeros(1),
            )],
        )
        .unwrap();
        let base = SolverConfig::default();
        assert!(matches!(
            long_run_reference(&problem, &base, &LongRunOptions::default()),
            Err(Error::OracleNotApplicable(_))
        ));
        let pair = long_run_cross_check(&problem, &base, &LongRunOptions::default()).unwrap();
        assert!(pair.distance < 1e-10);
    }

    #[test]
    fn certificate_json_roundtrip() {
        let c = Certificate {
            reference_x: Vector::from(vec![0.25, -1.0]),
            method: CertificateMethod::Grid,
            guaranteed_radius: 1e-3,
        };
        let text = serde_json::to_string(&c).unwrap();
        assert!(text.contains("\"grid\""));
        assert_eq!(serde_json::from_str::<Certificate>(&text).unwrap(), c);
    }
}
