mod common;

use std::sync::Arc;

use common::{catalog, certified_dir, certified_fixtures, max_abs_diff, CATALOG_DIM};
use proptest::prelude::*;
use proxsplit::oracle::{long_run_cross_check, LongRunOptions};
use proxsplit::solver::{
    dykstra_initial, dykstra_step, primal_objective, ErrorInjector, Schedule, SolverConfig,
    SplittingSolver, StopReason, Term,
};
use proxsplit::spaces::distance;
use proxsplit::{CompositeProxProblem, ProxFunction, Vector, WeightVector};

fn weights(m: usize) -> impl Strategy<Value = WeightVector> {
    prop::collection::vec(0.1..1.0f64, m).prop_map(|raw| {
        let total: f64 = raw.iter().sum();
        let mut w: Vec<f64> = raw.iter().map(|r| r / total).collect();
        let head: f64 = w[..w.len() - 1].iter().sum();
        *w.last_mut().unwrap() = 1.0 - head;
        WeightVector::new(w).unwrap()
    })
}

/// `(z, weights, functions)` drawn from the catalog, with `m` in {2, 3}.
fn plain_problem() -> impl Strategy<Value = (Vector, WeightVector, Vec<Arc<dyn ProxFunction>>)> {
    let n = catalog().len();
    (2usize..=3).prop_flat_map(move |m| {
        (
            prop::collection::vec(-5.0..5.0f64, CATALOG_DIM).prop_map(Vector::from),
            weights(m),
            prop::collection::vec(0..n, m),
        )
            .prop_map(|(z, w, picks)| {
                let all = catalog();
                (z, w, picks.into_iter().map(|k| all[k].clone()).collect())
            })
    })
}

fn unit_steps() -> SolverConfig {
    SolverConfig::default()
        .with_gamma(Schedule::Constant(1.0))
        .with_lambda(Schedule::Constant(1.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dykstra_matches_splitting((z, w, gs) in plain_problem(), iterations in 1usize..200) {
        let terms = w.as_slice().iter().zip(&gs).map(|(wi, g)| Term::plain(*wi, g.clone(), CATALOG_DIM)).collect();
        let problem = CompositeProxProblem::new(z.clone(), terms).unwrap();
        let solver = SplittingSolver::new(&problem, unit_steps()).unwrap();
        let mut s = solver.initial_state();
        let mut d = dykstra_initial(&z, gs.len());
        for _ in 0..iterations {
            s = solver.step(&s).unwrap();
            d = dykstra_step(&w, &gs, &d);
            prop_assert!(max_abs_diff(&s.x, &d.x) <= 1e-12 * (1.0 + max_abs_diff(&d.x, &Vector::zeros(CATALOG_DIM))));
            let mut mass = Vector::zeros(CATALOG_DIM);
            for (wi, zi) in w.as_slice().iter().zip(&d.z_aux) {
                mass.scaled_add(*wi, zi);
            }
            prop_assert!(max_abs_diff(&mass, &z) <= 1e-12 * (1.0 + max_abs_diff(&z, &Vector::zeros(CATALOG_DIM))));
        }
    }

    #[test]
    fn primal_is_defined_by_the_duals((z, w, gs) in plain_problem(), iterations in 1usize..50) {
        let terms = w.as_slice().iter().zip(&gs).map(|(wi, g)| Term::plain(*wi, g.clone(), CATALOG_DIM)).collect();
        let problem = CompositeProxProblem::new(z, terms).unwrap();
        let (solution, trace) = SplittingSolver::new(&problem, SolverConfig::default().with_max_iter(iterations))
            .unwrap()
            .solve()
            .unwrap();
        prop_assert_eq!(problem.primal_from_dual(&solution.v), solution.x);
        prop_assert_eq!(trace.len(), solution.iterations);
        for (k, r) in trace.records().iter().enumerate() {
            prop_assert_eq!(r.n, k + 1);
        }
    }
}

#[test]
fn step_sizes_outside_the_range_are_rejected() {
    let fixture = &certified_fixtures()[0];
    let problem = fixture.problem.build(&certified_dir()).unwrap();
    let solver = SplittingSolver::new(&problem, SolverConfig::default()).unwrap();
    let rho = solver.rho();
    assert!(SplittingSolver::new(
        &problem,
        SolverConfig::default().with_gamma(Schedule::Constant(2.0 * rho))
    )
    .is_err());
    assert!(SplittingSolver::new(
        &problem,
        SolverConfig::default().with_lambda(Schedule::Constant(1.5))
    )
    .is_err());
    let drifting = Schedule::Custom(Arc::new(|n, rho| if n < 3 { rho } else { 3.0 * rho }));
    let solver =
        SplittingSolver::new(&problem, SolverConfig::default().with_gamma(drifting)).unwrap();
    assert!(solver.solve().is_err());
}

#[test]
fn solutions_match_tight_certificates() {
    let tol = 1e-8;
    for f in certified_fixtures() {
        let best = f.best().unwrap();
        if best.guaranteed_radius > 1e-9 {
            continue;
        }
        let problem = f.problem.build(&certified_dir()).unwrap();
        let (s, _) = proxsplit::solve(&problem, SolverConfig::default().with_tol(tol)).unwrap();
        assert!(s.converged, "{}", f.name);
        let err = distance(&s.x, &best.reference_x);
        assert!(
            err <= 10.0 * tol + best.guaranteed_radius,
            "{}: {err:e}",
            f.name
        );
    }
}

#[test]
fn gap_stop_bounds_the_objective() {
    // a duality gap below tol^2 / 2 bounds the primal excess by the same amount
    let tol = 1e-4;
    let mut checked = 0;
    for f in certified_fixtures() {
        let best = f.best().unwrap();
        if best.guaranteed_radius > 1e-9 {
            continue;
        }
        let problem = f.problem.build(&certified_dir()).unwrap();
        let (s, _) = proxsplit::solve(&problem, SolverConfig::default().with_tol(tol)).unwrap();
        if s.stop != StopReason::DualityGap {
            continue;
        }
        checked += 1;
        let p = primal_objective(&problem, &s.x).unwrap().to_f64();
        let p_ref = primal_objective(&problem, &best.reference_x)
            .unwrap()
            .to_f64();
        let slack = 1e-9 * (1.0 + p_ref.abs());
        assert!(p <= p_ref + tol * tol + slack, "{}: {p} vs {p_ref}", f.name);
        assert!(
            p >= p_ref - slack,
            "{}: {p} below the optimum {p_ref}",
            f.name
        );
    }
    assert!(
        checked >= 3,
        "only {checked} runs stopped on the duality gap"
    );
}

#[test]
fn injected_errors_barely_move_the_limit() {
    let tol = 1e-8;
    for f in certified_fixtures().into_iter().take(8) {
        let problem = f.problem.build(&certified_dir()).unwrap();
        let clean = proxsplit::solve(&problem, SolverConfig::default().with_tol(tol))
            .unwrap()
            .0;
        let noisy = SolverConfig::default()
            .with_tol(tol)
            .with_errors(ErrorInjector::summable(0.1, 2.0, 3).unwrap());
        let perturbed = proxsplit::solve(&problem, noisy).unwrap().0;
        assert!(distance(&clean.x, &perturbed.x) <= 10.0 * tol, "{}", f.name);
    }
}

#[test]
fn dual_distance_is_fejer_monotone() {
    for f in certified_fixtures()
        .into_iter()
        .filter(|f| f.problem.dim() >= 2)
        .take(6)
    {
        let problem = f.problem.build(&certified_dir()).unwrap();
        let pair = long_run_cross_check(
            &problem,
            &SolverConfig::default(),
            &LongRunOptions::default(),
        )
        .unwrap();
        let v_star = pair.short_step.v;
        let w = problem.weights();
        let gap = |v: &[Vector]| -> f64 {
            v.iter()
                .zip(&v_star)
                .zip(&w)
                .map(|((a, b), wi)| wi * (a - b).dot(&(a - b)))
                .sum()
        };
        for gamma in [0.5, 1.0, 1.5] {
            let config = SolverConfig::default().with_gamma(Schedule::RhoMultiple(gamma));
            let solver = SplittingSolver::new(&problem, config).unwrap();
            let mut s = solver.initial_state();
            let mut previous = gap(&s.v);
            for _ in 0..1000 {
                s = solver.step(&s).unwrap();
                let current = gap(&s.v);
                assert!(
                    current <= previous + 1e-10,
                    "{} at gamma {gamma}: {previous} -> {current}",
                    f.name
                );
                previous = current;
            }
        }
    }
}
