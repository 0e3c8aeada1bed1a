//! Projection onto `D = ∩_i {x : L_i x ∈ r_i + C_i}` using only the
//! projectors onto the sets `C_i`.
//!
//! This is the dual splitting iteration with `g_i = iota_{C_i}` and equal
//! weights `1/m`, rewritten through Moreau's decomposition:
//!
//! ```text
//! v_{i,n+1} = v_{i,n} + gamma_n lambda_n (L_i x_n - r_i - P_{C_i}(v_{i,n} / gamma_n + L_i x_n - r_i) - c_{i,n})
//! ```

use std::sync::Arc;

use crate::error::{check_dim, Error, Result};
use crate::prox::{make_indicator, ConvexSet};
use crate::solver::{
    check_qualification, dual_objective, primal_objective, CompositeProxProblem, ErrorInjector,
    Qualification, Schedule, Solution, SolverConfig, StepRules, StopMonitor, StopReason, Term,
    Trace, TraceRecord, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use crate::spaces::{distance, norm, norm_upper_bound, Operator, Vector};

/// `{x : L x ∈ r + C}`.
#[derive(Debug, Clone)]
pub struct CompositeConstraint {
    pub operator: Operator,
    pub shift: Vector,
    pub set: ConvexSet,
}

impl CompositeConstraint {
    pub fn new(operator: Operator, shift: Vector, set: ConvexSet) -> Result<Self> {
        check_dim(operator.dim_out(), shift.len())?;
        check_dim(operator.dim_out(), set.dim())?;
        Ok(CompositeConstraint {
            operator,
            shift,
            set,
        })
    }

    /// `dist(L x - r, C)`.
    pub fn residual(&self, x: &Vector) -> f64 {
        let y = &self.operator.apply(x) - &self.shift;
        self.set.distance(&y)
    }
}

#[derive(Debug, Clone)]
pub struct ProjectionConfig {
    pub epsilon: Option<f64>,
    pub gamma: Schedule,
    pub lambda: Schedule,
    pub max_iter: usize,
    pub tol: f64,
    /// Defaults to `10 * tol`.
    pub feasibility_tol: Option<f64>,
    /// Errors `c_{i,n}` in the projections; must be [`ErrorInjector::Summable`].
    pub errors: Option<ErrorInjector>,
    pub slater_point: Option<Vector>,
    /// Run even when no sufficient qualification rule fires.
    pub assume_qualified: bool,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        ProjectionConfig {
            epsilon: None,
            gamma: Schedule::RhoMultiple(1.0),
            lambda: Schedule::Constant(1.0),
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
            feasibility_tol: None,
            errors: None,
            slater_point: None,
            assume_qualified: false,
        }
    }
}

impl ProjectionConfig {
    pub fn feasibility_tol(&self) -> f64 {
        self.feasibility_tol.unwrap_or(10.0 * self.tol)
    }

    fn schedule_config(&self) -> SolverConfig {
        SolverConfig {
            epsilon: self.epsilon,
            gamma: self.gamma.clone(),
            lambda: self.lambda.clone(),
            max_iter: self.max_iter,
            tol: self.tol,
            ..SolverConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionStatus {
    Converged,
    MaxIterations,
    /// Ran out of iterations while the feasibility residual had stopped
    /// decreasing above tolerance.
    InfeasibleSuspected,
}

#[derive(Debug, Clone)]
pub struct ProjectionOutcome {
    pub solution: Solution,
    pub trace: Trace,
    pub status: ProjectionStatus,
    pub feasibility_residual: f64,
    pub qualification: Qualification,
}

/// `max_i dist(L_i x - r_i, C_i)`.
pub fn feasibility_residual(x: &Vector, constraints: &[CompositeConstraint]) -> f64 {
    constraints
        .iter()
        .map(|c| c.residual(x))
        .fold(0.0, f64::max)
}

/// The same problem written as a prox computation with indicator terms and
/// weights `1/m`.
pub fn constraints_problem(
    z: &Vector,
    constraints: &[CompositeConstraint],
) -> Result<CompositeProxProblem> {
    if constraints.is_empty() {
        return Err(Error::InvalidParameter(
            "at least one constraint is required".into(),
        ));
    }
    let w = 1.0 / constraints.len() as f64;
    let terms = constraints
        .iter()
        .map(|c| {
            Term::new(
                w,
                Arc::new(make_indicator(c.set.clone())),
                c.operator.clone(),
                c.shift.clone(),
            )
        })
        .collect();
    CompositeProxProblem::new(z.clone(), terms)
}

/// Iterate state exposed for step-by-step comparisons.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionState {
    pub n: usize,
    pub v: Vec<Vector>,
    pub x: Vector,
}

#[derive(Debug)]
pub struct IntersectionProjector<'a> {
    z: Vector,
    constraints: &'a [CompositeConstraint],
    config: ProjectionConfig,
    rules: StepRules,
    norms: Vec<f64>,
    problem: CompositeProxProblem,
    qualification: Qualification,
}

impl<'a> IntersectionProjector<'a> {
    pub fn new(
        z: &Vector,
        constraints: &'a [CompositeConstraint],
        config: ProjectionConfig,
    ) -> Result<Self> {
        let problem = constraints_problem(z, constraints)?;
        if let Some(e) = &config.errors {
            if !matches!(e, ErrorInjector::Summable { .. }) {
                return Err(Error::InvalidParameter(
                    "projection errors must use the summable amplitude / (n+1)^q form".into(),
                ));
            }
        }
        let qualification = check_qualification(&problem, config.slater_point.as_ref());
        if !qualification.is_satisfied() && !config.assume_qualified {
            return Err(Error::QualificationUnverified);
        }
        let norms = constraints
            .iter()
            .map(|c| norm_upper_bound(c.operator.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        let max_norm = norms.iter().copied().fold(0.0, f64::max);
        let rules = StepRules::new(max_norm, &config.schedule_config())?;
        Ok(IntersectionProjector {
            z: z.clone(),
            constraints,
            config,
            rules,
            norms,
            problem,
            qualification,
        })
    }

    pub fn rho(&self) -> f64 {
        self.rules.rho()
    }

    pub fn problem(&self) -> &CompositeProxProblem {
        &self.problem
    }

    fn primal(&self, v: &[Vector]) -> Vector {
        self.problem.primal_from_dual(v)
    }

    pub fn initial_state(&self) -> ProjectionState {
        let v: Vec<Vector> = self
            .constraints
            .iter()
            .map(|c| Vector::zeros(c.operator.dim_out()))
            .collect();
        let x = self.primal(&v);
        ProjectionState { n: 0, v, x }
    }

    pub fn step(&self, state: &ProjectionState) -> Result<ProjectionState> {
        let n = state.n;
        let gamma = self.rules.gamma(n)?;
        let lambda = self.rules.lambda(n)?;
        let v: Vec<Vector> = self
            .constraints
            .iter()
            .zip(&state.v)
            .enumerate()
            .map(|(i, (c, vi))| {
                let residual = &c.operator.apply(&state.x) - &c.shift;
                let probe = &(vi / gamma) + &residual;
                let mut d = residual - c.set.project(&probe);
                if let Some(e) = &self.config.errors {
                    d -= &e.sample(i, n, vi.len());
                }
                let mut out = vi.clone();
                out.scaled_add(gamma * lambda, &d);
                out
            })
            .collect();
        let x = self.primal(&v);
        Ok(ProjectionState { n: n + 1, v, x })
    }

    pub fn run(&self) -> Result<ProjectionOutcome> {
        let feas_tol = self.config.feasibility_tol();
        let mut state = self.initial_state();
        let mut trace = Trace::new();
        let mut monitor = StopMonitor::new(self.config.tol);
        let mut residuals = Vec::new();
        let mut stop = StopReason::MaxIterations;
        let mut residual = feasibility_residual(&state.x, self.constraints);
        while state.n < self.config.max_iter {
            let gamma = self.rules.gamma(state.n)?;
            let lambda = self.rules.lambda(state.n)?;
            if let Some(e) = &self.config.errors {
                let w = 1.0 / self.constraints.len() as f64;
                let injected: f64 = self
                    .constraints
                    .iter()
                    .zip(&self.norms)
                    .enumerate()
                    .map(|(i, (c, b))| {
                        w * b * gamma * lambda * norm(&e.sample(i, state.n, c.operator.dim_out()))
                    })
                    .sum();
                monitor.set_injected(injected);
            }
            let next = self.step(&state)?;
            let step_norm = distance(&next.x, &state.x);
            state = next;
            let primal = primal_objective(&self.problem, &state.x)?;
            let dual = dual_objective(&self.problem, &state.v)?;
            trace.push(TraceRecord {
                n: state.n,
                primal,
                dual,
                step_norm,
                gamma,
                lambda,
            });
            residual = feasibility_residual(&state.x, self.constraints);
            residuals.push(residual);
            if let Some(reason) = monitor.update(&state.x, step_norm, primal, dual, &self.z) {
                if residual <= feas_tol {
                    stop = reason;
                    break;
                }
            }
        }
        let status = if stop != StopReason::MaxIterations {
            ProjectionStatus::Converged
        } else if residual > feas_tol && stagnated(&residuals) {
            ProjectionStatus::InfeasibleSuspected
        } else {
            ProjectionStatus::MaxIterations
        };
        Ok(ProjectionOutcome {
            solution: Solution {
                x: state.x,
                v: state.v,
                iterations: state.n,
                converged: status == ProjectionStatus::Converged,
                stop,
                certificate: None,
            },
            trace,
            status,
            feasibility_residual: residual,
            qualification: self.qualification,
        })
    }
}

/// The best residual in the second half of the run is no better than 99% of
/// the best in the first half.
fn stagnated(residuals: &[f64]) -> bool {
    if residuals.len() < 4 {
        return false;
    }
    let (early, late) = residuals.split_at(residuals.len() / 2);
    let best_early = early.iter().copied().fold(f64::INFINITY, f64::min);
    let best_late = late.iter().copied().fold(f64::INFINITY, f64::min);
    best_late >= 0.99 * best_early
}

pub fn project_intersection(
    z: &Vector,
    constraints: &[CompositeConstraint],
    config: ProjectionConfig,
) -> Result<ProjectionOutcome> {
    IntersectionProjector::new(z, constraints, config)?.run()
}
