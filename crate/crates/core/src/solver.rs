//! Dual splitting iteration for `prox` of `sum_i w_i g_i(L_i x - r_i)`.
//!
//! With `x_n = z - sum_i w_i L_i^* v_{i,n}` each dual variable is updated by
//!
//! ```text
//! v_{i,n+1} = v_{i,n} + lambda_n (prox_{gamma_n g_i^*}(v_{i,n} + gamma_n (L_i x_n - r_i)) + a_{i,n} - v_{i,n})
//! ```
//!
//! where `rho = (max_i |L_i|)^-2`, `gamma_n in [eps, 2 rho - eps]` and
//! `lambda_n in [eps, 1]`. The primal iterates converge to the unique
//! minimizer of `sum_i w_i g_i(L_i x - r_i) + |x - z|^2 / 2` and the duals to a
//! minimizer of `|z - sum_i w_i L_i^* v_i|^2 / 2 + sum_i w_i (g_i^*(v_i) + <v_i, r_i>)`.

use std::collections::VecDeque;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, Error, Result};
use crate::oracle::Certificate;
use crate::prox::{Domain, ExtendedReal, ProxFunction};
use crate::spaces::{
    distance, norm, norm_upper_bound, random_vector, Identity, Operator, Vector, WeightVector,
};

/// Consecutive small steps required by the step-size stop rule.
pub const STALL_COUNT: usize = 3;
pub const DEFAULT_MAX_ITER: usize = 100_000;
pub const DEFAULT_TOL: f64 = 1e-8;
/// Injected errors must fall this far below the step tolerance before small
/// steps count towards stopping; the bias they leave in `x` is amplified by
/// the contraction factor of the iteration.
pub const INJECTED_MARGIN: f64 = 1e-2;
/// Step ratios are averaged over this many iterations.
pub const RATE_WINDOW: usize = 5;
/// Steps below `DEEP_STEP * tol (1 + |x|)` need no rate estimate.
pub const DEEP_STEP: f64 = 1e-2;
/// Iterations between progress log lines.
const LOG_EVERY: usize = 10_000;

/// One composite term `w g(L x - r)`.
#[derive(Debug, Clone)]
pub struct Term {
    pub weight: f64,
    pub function: Arc<dyn ProxFunction>,
    pub operator: Operator,
    pub shift: Vector,
}

impl Term {
    pub fn new(
        weight: f64,
        function: Arc<dyn ProxFunction>,
        operator: Operator,
        shift: Vector,
    ) -> Self {
        Term {
            weight,
            function,
            operator,
            shift,
        }
    }

    /// `w g(x)` with `L = Id` and `r = 0`.
    pub fn plain(weight: f64, function: Arc<dyn ProxFunction>, dim: usize) -> Self {
        Term::new(
            weight,
            function,
            Arc::new(Identity::new(dim)),
            Vector::zeros(dim),
        )
    }
}

#[derive(Debug, Clone)]
pub struct CompositeProxProblem {
    z: Vector,
    terms: Vec<Term>,
}

impl CompositeProxProblem {
    pub fn new(z: Vector, terms: Vec<Term>) -> Result<Self> {
        if z.is_empty() {
            return Err(Error::InvalidParameter("z must be nonempty".into()));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("z has non-finite entries".into()));
        }
        WeightVector::new(terms.iter().map(|t| t.weight).collect())?;
        for t in &terms {
            check_dim(z.len(), t.operator.dim_in())?;
            check_dim(t.operator.dim_out(), t.shift.len())?;
            if let Some(d) = t.function.dim() {
                check_dim(d, t.operator.dim_out())?;
            }
            if t.shift.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(
                    "shift has non-finite entries".into(),
                ));
            }
        }
        Ok(CompositeProxProblem { z, terms })
    }

    pub fn z(&self) -> &Vector {
        &self.z
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn dim(&self) -> usize {
        self.z.len()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.weight).collect()
    }

    /// `z - sum_i w_i L_i^* v_i`, summed in term order.
    pub fn primal_from_dual(&self, v: &[Vector]) -> Vector {
        let mut x = self.z.clone();
        for (t, vi) in self.terms.iter().zip(v) {
            x.scaled_add(-t.weight, &t.operator.adjoint(vi));
        }
        x
    }
}

/// Step-size or relaxation sequence indexed by the iteration counter.
#[derive(Clone)]
pub enum Schedule {
    Constant(f64),
    /// `c * rho`
    RhoMultiple(f64),
    /// Repeats the listed values.
    Cyclic(Vec<f64>),
    /// Arbitrary `(n, rho) -> value`, validated at every iteration.
    Custom(Arc<dyn Fn(usize, f64) -> f64 + Send + Sync>),
}

impl Schedule {
    pub fn value(&self, n: usize, rho: f64) -> f64 {
        match self {
            Schedule::Constant(c) => *c,
            Schedule::RhoMultiple(c) => c * rho,
            Schedule::Cyclic(values) => values[n % values.len()],
            Schedule::Custom(f) => f(n, rho),
        }
    }

    /// Every value the schedule can take, when that set is finite.
    fn finite_range(&self, rho: f64) -> Option<Vec<f64>> {
        match self {
            Schedule::Constant(c) => Some(vec![*c]),
            Schedule::RhoMultiple(c) => Some(vec![c * rho]),
            Schedule::Cyclic(values) => Some(values.clone()),
            Schedule::Custom(_) => None,
        }
    }
}

impl fmt::Debug for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Schedule::Constant(c) => write!(f, "Constant({c})"),
            Schedule::RhoMultiple(c) => write!(f, "RhoMultiple({c})"),
            Schedule::Cyclic(v) => write!(f, "Cyclic({v:?})"),
            Schedule::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// Perturbations added to the conjugate prox evaluations.
#[derive(Clone)]
pub enum ErrorInjector {
    /// `amplitude / (n + 1)^exponent` times a seeded random unit vector;
    /// summable for `exponent > 1`.
    Summable {
        amplitude: f64,
        exponent: f64,
        seed: u64,
    },
    /// `(term, n, dim) -> a_{term,n}`.
    Custom(Arc<dyn Fn(usize, usize, usize) -> Vector + Send + Sync>),
}

impl ErrorInjector {
    pub fn summable(amplitude: f64, exponent: f64, seed: u64) -> Result<Self> {
        if !(amplitude >= 0.0 && amplitude.is_finite()) || !(exponent > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "summable errors need amplitude >= 0 and exponent > 1, got {amplitude}, {exponent}"
            )));
        }
        Ok(ErrorInjector::Summable {
            amplitude,
            exponent,
            seed,
        })
    }

    pub fn sample(&self, term: usize, n: usize, dim: usize) -> Vector {
        match self {
            ErrorInjector::Summable {
                amplitude,
                exponent,
                seed,
            } => {
                let mixed = seed
                    ^ (term as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
                    ^ (n as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
                let mut rng = ChaCha8Rng::seed_from_u64(mixed);
                let u = random_vector(dim, &mut rng);
                let nu = norm(&u);
                let size = amplitude / ((n + 1) as f64).powf(*exponent);
                if nu == 0.0 {
                    Vector::zeros(dim)
                } else {
                    u * (size / nu)
                }
            }
            ErrorInjector::Custom(f) => f(term, n, dim),
        }
    }
}

impl fmt::Debug for ErrorInjector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ErrorInjector::Summable {
                amplitude,
                exponent,
                seed,
            } => write!(f, "Summable({amplitude} / (n+1)^{exponent}, seed {seed})"),
            ErrorInjector::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Defaults to `1e-3 * min(1, rho)`.
    pub epsilon: Option<f64>,
    pub gamma: Schedule,
    pub lambda: Schedule,
    pub max_iter: usize,
    pub tol: f64,
    pub error_injector: Option<ErrorInjector>,
    /// Per-term replacements for the operator norm bounds.
    pub norm_override: Option<Vec<f64>>,
    /// Defaults to all zeros.
    pub initial_dual: Option<Vec<Vector>>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            epsilon: None,
            gamma: Schedule::RhoMultiple(1.0),
            lambda: Schedule::Constant(1.0),
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
            error_injector: None,
            norm_override: None,
            initial_dual: None,
        }
    }
}

impl SolverConfig {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_gamma(mut self, gamma: Schedule) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_lambda(mut self, lambda: Schedule) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_errors(mut self, injector: ErrorInjector) -> Self {
        self.error_injector = Some(injector);
        self
    }
}

/// `rho`, `eps` and validated schedules shared by the solvers built on the
/// dual iteration.
#[derive(Debug, Clone)]
pub struct StepRules {
    rho: f64,
    epsilon: f64,
    gamma: Schedule,
    lambda: Schedule,
}

impl StepRules {
    /// Validates the configuration against the largest operator norm bound.
    pub fn new(max_norm: f64, config: &SolverConfig) -> Result<Self> {
        if !(max_norm > 0.0 && max_norm.is_finite()) {
            return Err(Error::ZeroOperator);
        }
        if !(config.tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tol must be positive, got {}",
                config.tol
            )));
        }
        let rho = max_norm.powi(-2);
        let cap = rho.min(1.0);
        let epsilon = config.epsilon.unwrap_or(1e-3 * cap);
        if !(epsilon > 0.0 && epsilon < cap) {
            return Err(Error::InvalidParameter(format!(
                "epsilon = {epsilon} must lie in (0, {cap})"
            )));
        }
        let rules = StepRules {
            rho,
            epsilon,
            gamma: config.gamma.clone(),
            lambda: config.lambda.clone(),
        };
        if let Schedule::Cyclic(v) = &config.gamma {
            if v.is_empty() {
                return Err(Error::InvalidParameter("empty gamma schedule".into()));
            }
        }
        if let Schedule::Cyclic(v) = &config.lambda {
            if v.is_empty() {
                return Err(Error::InvalidParameter("empty lambda schedule".into()));
            }
        }
        if let Some(values) = rules.gamma.finite_range(rho) {
            for g in values {
                rules.check_gamma(g, 0)?;
            }
        }
        if let Some(values) = rules.lambda.finite_range(rho) {
            for l in values {
                rules.check_lambda(l, 0)?;
            }
        }
        Ok(rules)
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    fn check_gamma(&self, g: f64, n: usize) -> Result<f64> {
        let (lo, hi) = (self.epsilon, 2.0 * self.rho - self.epsilon);
        if g >= lo && g <= hi {
            Ok(g)
        } else {
            Err(Error::ScheduleOutOfRange {
                name: "gamma",
                value: g,
                lo,
                hi,
                n,
            })
        }
    }

    fn check_lambda(&self, l: f64, n: usize) -> Result<f64> {
        if l >= self.epsilon && l <= 1.0 {
            Ok(l)
        } else {
            Err(Error::ScheduleOutOfRange {
                name: "lambda",
                value: l,
                lo: self.epsilon,
                hi: 1.0,
                n,
            })
        }
    }

    pub fn gamma(&self, n: usize) -> Result<f64> {
        self.check_gamma(self.gamma.value(n, self.rho), n)
    }

    pub fn lambda(&self, n: usize) -> Result<f64> {
        self.check_lambda(self.lambda.value(n, self.rho), n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub n: usize,
    pub v: Vec<Vector>,
    /// Always `z - sum_i w_i L_i^* v_i`.
    pub x: Vector,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub n: usize,
    pub primal: ExtendedReal,
    /// `None` when some conjugate has no closed form.
    pub dual: Option<ExtendedReal>,
    pub step_norm: f64,
    pub gamma: f64,
    pub lambda: f64,
}

/// One record per iteration; record `n` describes `x_n`, `v_n` and the
/// parameters used to produce them.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    records: Vec<TraceRecord>,
}

pub const TRACE_HEADER: &str = "n,primal,dual,step_norm,gamma,lambda";

impl Trace {
    pub fn new() -> Self {
        Trace::default()
    }

    pub fn push(&mut self, record: TraceRecord) {
        self.records.push(record);
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{TRACE_HEADER}")?;
        for r in &self.records {
            let dual = r.dual.map(|d| d.to_string()).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.n, r.primal, dual, r.step_norm, r.gamma, r.lambda
            )?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("trace CSV is ASCII")
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// `|x_n - x_{n-1}| <= tol (1 + |x_n|)` for [`STALL_COUNT`] consecutive iterations.
    StepTolerance,
    /// Duality gap below `tol^2 / 2`, which bounds `|x_n - x| <= tol`.
    DualityGap,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub x: Vector,
    pub v: Vec<Vector>,
    pub iterations: usize,
    pub converged: bool,
    pub stop: StopReason,
    pub certificate: Option<Certificate>,
}

/// `sum_i w_i g_i(L_i x - r_i) + |x - z|^2 / 2`.
pub fn primal_objective(problem: &CompositeProxProblem, x: &Vector) -> Result<ExtendedReal> {
    check_dim(problem.dim(), x.len())?;
    Ok(primal_unchecked(problem, x))
}

fn primal_unchecked(problem: &CompositeProxProblem, x: &Vector) -> ExtendedReal {
    let d = distance(x, problem.z());
    let mut total = ExtendedReal::Finite(0.5 * d * d);
    for t in problem.terms() {
        let y = &t.operator.apply(x) - &t.shift;
        total = total + t.function.eval(&y).scale(t.weight);
        if !total.is_finite() {
            break;
        }
    }
    total
}

/// `|z - sum_i w_i L_i^* v_i|^2 / 2 + sum_i w_i (g_i^*(v_i) + <v_i, r_i>)`,
/// or `None` when some `g_i^*` has no closed form.
pub fn dual_objective(
    problem: &CompositeProxProblem,
    v: &[Vector],
) -> Result<Option<ExtendedReal>> {
    check_dim(problem.terms().len(), v.len())?;
    for (t, vi) in problem.terms().iter().zip(v) {
        check_dim(t.operator.dim_out(), vi.len())?;
    }
    Ok(dual_unchecked(problem, v))
}

fn dual_unchecked(problem: &CompositeProxProblem, v: &[Vector]) -> Option<ExtendedReal> {
    let x = problem.primal_from_dual(v);
    let mut total = ExtendedReal::Finite(0.5 * x.dot(&x));
    for (t, vi) in problem.terms().iter().zip(v) {
        let conj = t.function.conjugate_eval(vi)?;
        total = total + (conj + vi.dot(&t.shift)).scale(t.weight);
    }
    Some(total)
}

/// `P(x) + D(v) - |z|^2 / 2`; nonnegative, zero exactly at a primal-dual
/// optimal pair. `None` when either objective is infinite or unavailable.
pub fn duality_gap(primal: ExtendedReal, dual: Option<ExtendedReal>, z: &Vector) -> Option<f64> {
    let p = primal.finite()?;
    let d = dual?.finite()?;
    Some(p + d - 0.5 * z.dot(z))
}

/// Outcome of the sufficient qualification checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Qualification {
    /// Every `g_i` has full domain.
    FullDomains,
    /// The supplied point maps into the interior of every domain.
    SlaterPoint,
    /// No sufficient rule fired; this never asserts a violation.
    Unknown,
}

impl Qualification {
    pub fn is_satisfied(self) -> bool {
        !matches!(self, Qualification::Unknown)
    }
}

pub fn check_qualification(
    problem: &CompositeProxProblem,
    slater: Option<&Vector>,
) -> Qualification {
    let domains: Vec<Domain> = problem
        .terms()
        .iter()
        .map(|t| t.function.domain())
        .collect();
    if domains.iter().all(|d| *d == Domain::FullSpace) {
        return Qualification::FullDomains;
    }
    let Some(point) = slater else {
        return Qualification::Unknown;
    };
    if point.len() != problem.dim() {
        return Qualification::Unknown;
    }
    let interior = problem
        .terms()
        .iter()
        .zip(&domains)
        .all(|(t, dom)| match dom {
            Domain::FullSpace => true,
            Domain::Set(set) => {
                let y = &t.operator.apply(point) - &t.shift;
                set.contains_interior(&y)
            }
            Domain::Other => false,
        });
    if interior {
        Qualification::SlaterPoint
    } else {
        Qualification::Unknown
    }
}

/// Tracks the stop rule across iterations.
#[derive(Debug, Clone)]
pub(crate) struct StopMonitor {
    tol: f64,
    small_steps: usize,
    /// Effect on `x` of the errors injected in the latest iteration.
    injected: f64,
    recent: VecDeque<f64>,
}

impl StopMonitor {
    pub(crate) fn new(tol: f64) -> Self {
        StopMonitor {
            tol,
            small_steps: 0,
            injected: 0.0,
            recent: VecDeque::with_capacity(RATE_WINDOW + 1),
        }
    }

    /// Records `sum_i w_i |L_i| |a_{i,n}|` for the next [`update`](Self::update).
    pub(crate) fn set_injected(&mut self, magnitude: f64) {
        self.injected = magnitude;
    }

    /// `s q / (1 - q)` with `q` the mean step ratio over the window, which
    /// estimates `|x_n - x|` under linear convergence. Steps far below the
    /// tolerance count as converged whatever the ratio, since rounding makes
    /// the ratio meaningless there.
    fn tail_estimate(&self, scale: f64) -> f64 {
        let last = *self.recent.back().expect("pushed before use");
        if last <= DEEP_STEP * scale {
            return 0.0;
        }
        if self.recent.len() <= RATE_WINDOW {
            return f64::INFINITY;
        }
        let first = self.recent[0];
        let q = (last / first).powf(1.0 / RATE_WINDOW as f64);
        if q < 1.0 {
            last * q / (1.0 - q)
        } else {
            f64::INFINITY
        }
    }

    pub(crate) fn update(
        &mut self,
        x: &Vector,
        step_norm: f64,
        primal: ExtendedReal,
        dual: Option<ExtendedReal>,
        z: &Vector,
    ) -> Option<StopReason> {
        if self.recent.len() > RATE_WINDOW {
            self.recent.pop_front();
        }
        self.recent.push_back(step_norm);
        // small steps mean nothing while the injected errors are comparable
        let scale = self.tol * (1.0 + norm(x));
        if step_norm <= scale
            && self.injected <= INJECTED_MARGIN * scale
            && self.tail_estimate(scale) <= scale
        {
            self.small_steps += 1;
        } else {
            self.small_steps = 0;
        }
        if self.small_steps >= STALL_COUNT {
            return Some(StopReason::StepTolerance);
        }
        if let Some(gap) = duality_gap(primal, dual, z) {
            let target = 0.5 * self.tol * self.tol;
            // only trust the gap when it is resolvable above rounding
            let scale = 1.0
                + primal.to_f64().abs()
                + dual.map_or(0.0, |d| d.to_f64().abs())
                + 0.5 * z.dot(z);
            if target > 1e-14 * scale && gap <= target {
                return Some(StopReason::DualityGap);
            }
        }
        None
    }
}

/// Prepared dual splitting solver bound to one problem.
#[derive(Debug, Clone)]
pub struct SplittingSolver<'p> {
    problem: &'p CompositeProxProblem,
    config: SolverConfig,
    rules: StepRules,
    norm_bounds: Vec<f64>,
}

impl<'p> SplittingSolver<'p> {
    pub fn new(problem: &'p CompositeProxProblem, config: SolverConfig) -> Result<Self> {
        let norm_bounds = match &config.norm_override {
            Some(bounds) => {
                check_dim(problem.terms().len(), bounds.len())?;
                bounds.clone()
            }
            None => problem
                .terms()
                .iter()
                .map(|t| norm_upper_bound(t.operator.as_ref()))
                .collect::<Result<Vec<_>>>()?,
        };
        if norm_bounds.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
            return Err(Error::ZeroOperator);
        }
        let max_norm = norm_bounds.iter().copied().fold(0.0, f64::max);
        let rules = StepRules::new(max_norm, &config)?;
        if let Some(v0) = &config.initial_dual {
            check_dim(problem.terms().len(), v0.len())?;
            for (t, v) in problem.terms().iter().zip(v0) {
                check_dim(t.operator.dim_out(), v.len())?;
            }
        }
        Ok(SplittingSolver {
            problem,
            config,
            rules,
            norm_bounds,
        })
    }

    pub fn rho(&self) -> f64 {
        self.rules.rho()
    }

    pub fn epsilon(&self) -> f64 {
        self.rules.epsilon()
    }

    pub fn norm_bounds(&self) -> &[f64] {
        &self.norm_bounds
    }

    pub fn rules(&self) -> &StepRules {
        &self.rules
    }

    pub fn initial_state(&self) -> SolverState {
        let v = match &self.config.initial_dual {
            Some(v0) => v0.clone(),
            None => self
                .problem
                .terms()
                .iter()
                .map(|t| Vector::zeros(t.operator.dim_out()))
                .collect(),
        };
        let x = self.problem.primal_from_dual(&v);
        SolverState { n: 0, v, x }
    }

    /// One sweep: all dual updates from `x_n`, then `x_{n+1}`.
    pub fn step(&self, state: &SolverState) -> Result<SolverState> {
        let n = state.n;
        let gamma = self.rules.gamma(n)?;
        let lambda = self.rules.lambda(n)?;
        let v: Vec<Vector> = self
            .problem
            .terms()
            .iter()
            .zip(&state.v)
            .enumerate()
            .map(|(i, (t, vi))| {
                let mut w = t.operator.apply(&state.x);
                w -= &t.shift;
                w *= gamma;
                w += vi;
                let mut p = t.function.prox_conjugate(gamma, &w);
                if let Some(inj) = &self.config.error_injector {
                    p += &inj.sample(i, n, vi.len());
                }
                p -= vi;
                p *= lambda;
                p += vi;
                p
            })
            .collect();
        let x = self.problem.primal_from_dual(&v);
        Ok(SolverState { n: n + 1, v, x })
    }

    fn injected_magnitude(&self, injector: &ErrorInjector, n: usize) -> f64 {
        self.problem
            .terms()
            .iter()
            .enumerate()
            .map(|(i, t)| {
                t.weight * self.norm_bounds[i] * norm(&injector.sample(i, n, t.operator.dim_out()))
            })
            .sum()
    }

    pub fn solve(&self) -> Result<(Solution, Trace)> {
        let mut state = self.initial_state();
        let mut trace = Trace::new();
        let mut monitor = StopMonitor::new(self.config.tol);
        let mut stop = StopReason::MaxIterations;
        while state.n < self.config.max_iter {
            let gamma = self.rules.gamma(state.n)?;
            let lambda = self.rules.lambda(state.n)?;
            if let Some(inj) = &self.config.error_injector {
                monitor.set_injected(self.injected_magnitude(inj, state.n));
            }
            let next = self.step(&state)?;
            let step_norm = distance(&next.x, &state.x);
            state = next;
            let primal = primal_unchecked(self.problem, &state.x);
            let dual = dual_unchecked(self.problem, &state.v);
            trace.push(TraceRecord {
                n: state.n,
                primal,
                dual,
                step_norm,
                gamma,
                lambda,
            });
            if state.n.is_multiple_of(LOG_EVERY) {
                log::info!(
                    "iteration {} step {:.3e} primal {}",
                    state.n,
                    step_norm,
                    primal
                );
            }
            if let Some(reason) =
                monitor.update(&state.x, step_norm, primal, dual, self.problem.z())
            {
                stop = reason;
                break;
            }
        }
        let converged = stop != StopReason::MaxIterations;
        if !converged {
            log::warn!("no convergence after {} iterations", state.n);
        }
        Ok((
            Solution {
                x: state.x,
                v: state.v,
                iterations: state.n,
                converged,
                stop,
                certificate: None,
            },
            trace,
        ))
    }
}

pub fn solve(problem: &CompositeProxProblem, config: SolverConfig) -> Result<(Solution, Trace)> {
    SplittingSolver::new(problem, config)?.solve()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DykstraState {
    pub n: usize,
    pub x: Vector,
    /// Auxiliary points; `sum_i w_i z_i = z` at every iteration.
    pub z_aux: Vec<Vector>,
}

pub fn dykstra_initial(z: &Vector, m: usize) -> DykstraState {
    DykstraState {
        n: 0,
        x: z.clone(),
        z_aux: vec![z.clone(); m],
    }
}

/// `x_{n+1} = sum_i w_i prox_{g_i} z_i`, `z_i <- x_{n+1} + z_i - prox_{g_i} z_i`.
pub fn dykstra_step(
    weights: &WeightVector,
    functions: &[Arc<dyn ProxFunction>],
    state: &DykstraState,
) -> DykstraState {
    let proxes: Vec<Vector> = functions
        .iter()
        .zip(&state.z_aux)
        .map(|(g, zi)| g.prox(1.0, zi))
        .collect();
    let mut x = Vector::zeros(state.x.len());
    for (w, p) in weights.as_slice().iter().zip(&proxes) {
        x.scaled_add(*w, p);
    }
    let z_aux = state
        .z_aux
        .iter()
        .zip(&proxes)
        .map(|(zi, p)| &(&x + zi) - p)
        .collect();
    DykstraState {
        n: state.n + 1,
        x,
        z_aux,
    }
}

/// Dykstra-like iteration for `prox` of `sum_i w_i g_i` at `z`; only
/// `max_iter` and `tol` of the configuration are used. The returned duals are
/// `z_i - x`.
pub fn solve_dykstra(
    z: &Vector,
    weights: &WeightVector,
    functions: &[Arc<dyn ProxFunction>],
    config: &SolverConfig,
) -> Result<(Solution, Trace)> {
    check_dim(weights.len(), functions.len())?;
    let problem = CompositeProxProblem::new(
        z.clone(),
        weights
            .as_slice()
            .iter()
            .zip(functions)
            .map(|(w, g)| Term::plain(*w, g.clone(), z.len()))
            .collect(),
    )?;
    if !(config.tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tol must be positive, got {}",
            config.tol
        )));
    }
    let duals = |s: &DykstraState| -> Vec<Vector> { s.z_aux.iter().map(|zi| zi - &s.x).collect() };
    let mut state = dykstra_initial(z, functions.len());
    let mut trace = Trace::new();
    let mut monitor = StopMonitor::new(config.tol);
    let mut stop = StopReason::MaxIterations;
    while state.n < config.max_iter {
        let next = dykstra_step(weights, functions, &state);
        let step_norm = distance(&next.x, &state.x);
        state = next;
        let primal = primal_unchecked(&problem, &state.x);
        let dual = dual_unchecked(&problem, &duals(&state));
        trace.push(TraceRecord {
            n: state.n,
            primal,
            dual,
            step_norm,
            gamma: 1.0,
            lambda: 1.0,
        });
        if let Some(reason) = monitor.update(&state.x, step_norm, primal, dual, z) {
            stop = reason;
            break;
        }
    }
    let converged = stop != StopReason::MaxIterations;
    let v = duals(&state);
    Ok((
        Solution {
            x: state.x,
            v,
            iterations: state.n,
            converged,
            stop,
            certificate: None,
        },
        trace,
    ))
}
