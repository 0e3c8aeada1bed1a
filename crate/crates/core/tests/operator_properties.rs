use std::sync::Arc;

use nalgebra::DMatrix;
use ndarray::Array2;
use proptest::prelude::*;
use proxsplit::imaging::{BlockAverage, Gradient2d, Haar2d, OrthonormalBasisOp};
use proxsplit::spaces::{
    check_adjoint, norm, norm_upper_bound, BlockDiagonal, DenseMatrix, Diagonal, Identity,
    ScaledIdentity, Stacked,
};
use proxsplit::{LinearOperator, Operator, Vector};

fn matrix() -> impl Strategy<Value = Array2<f64>> {
    (1usize..7, 1usize..7).prop_flat_map(|(m, n)| {
        prop::collection::vec(-5.0..5.0f64, m * n)
            .prop_map(move |v| Array2::from_shape_vec((m, n), v).unwrap())
    })
}

fn spectral_norm(a: &Array2<f64>) -> f64 {
    let (m, n) = a.dim();
    let dm = DMatrix::from_row_iterator(m, n, a.iter().copied());
    dm.singular_values().max()
}

fn relative_gap(op: &dyn LinearOperator, x: &Vector, u: &Vector) -> f64 {
    let (lx, ltu) = (op.apply(x), op.adjoint(u));
    let scale = (norm(&lx) * norm(u))
        .max(norm(x) * norm(&ltu))
        .max(f64::MIN_POSITIVE);
    (lx.dot(u) - x.dot(&ltu)).abs() / scale
}

fn catalog_operators() -> Vec<Operator> {
    let dense = DenseMatrix::from_rows(&[vec![1.0, -2.0, 0.5], vec![0.0, 3.0, 1.0]]).unwrap();
    let dense: Operator = Arc::new(dense);
    vec![
        Arc::new(Identity::new(3)),
        Arc::new(ScaledIdentity::new(3, -2.5)),
        Arc::new(Diagonal::new(Vector::from(vec![1.0, -3.0, 0.25]))),
        dense.clone(),
        Arc::new(Stacked::new(vec![dense.clone(), Arc::new(Identity::new(3))]).unwrap()),
        Arc::new(BlockDiagonal::new(vec![dense, Arc::new(ScaledIdentity::new(2, 4.0))]).unwrap()),
        Arc::new(Gradient2d::new(5, 3)),
        Arc::new(BlockAverage::new(6, 4, 2).unwrap()),
        Arc::new(Haar2d::new(8, 4).unwrap()),
    ]
}

proptest! {
    #[test]
    fn catalog_adjoints(seed in any::<u64>()) {
        for op in catalog_operators() {
            let report = check_adjoint(op.as_ref(), 5, seed);
            prop_assert!(report.max_discrepancy <= 1e-10, "{op:?}: {}", report.max_discrepancy);
        }
    }

    #[test]
    fn dense_adjoint(a in matrix(), seed in any::<u64>()) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let (m, n) = a.dim();
        let op = DenseMatrix::new(a).unwrap();
        let x = proxsplit::spaces::random_vector(n, &mut rng);
        let u = proxsplit::spaces::random_vector(m, &mut rng);
        prop_assert!(relative_gap(&op, &x, &u) <= 1e-10);
    }

    #[test]
    fn norm_bound_never_under_reports(a in matrix()) {
        let sigma = spectral_norm(&a);
        prop_assume!(sigma > 1e-6);
        let op = DenseMatrix::new(a).unwrap();
        let bound = norm_upper_bound(&op).unwrap();
        prop_assert!(bound >= sigma, "bound {bound} below sigma_max {sigma}");
    }

    #[test]
    fn product_space_bound(a in matrix(), b in matrix(), w in 0.05..0.95f64, seed in any::<u64>()) {
        use rand::SeedableRng;
        prop_assume!(spectral_norm(&a) > 1e-6 && spectral_norm(&b) > 1e-6);
        let n = a.ncols();
        // give b the same input space as a
        let b = Array2::from_shape_fn((b.nrows(), n), |(i, j)| b[[i, j % b.ncols()]]);
        let la = DenseMatrix::new(a).unwrap();
        let lb = DenseMatrix::new(b).unwrap();
        let bound = norm_upper_bound(&la).unwrap().max(norm_upper_bound(&lb).unwrap());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x = proxsplit::spaces::random_vector(n, &mut rng);
        let weighted = w * la.apply(&x).dot(&la.apply(&x)) + (1.0 - w) * lb.apply(&x).dot(&lb.apply(&x));
        prop_assert!(weighted <= bound * bound * x.dot(&x) * (1.0 + 1e-12));
    }
}

#[test]
fn analytic_bounds_dominate_svd() {
    for op in catalog_operators() {
        let (m, n) = (op.dim_out(), op.dim_in());
        let mut a = Array2::zeros((m, n));
        for j in 0..n {
            let mut e = Vector::zeros(n);
            e[j] = 1.0;
            a.column_mut(j).assign(&op.apply(&e));
        }
        let sigma = spectral_norm(&a);
        let bound = norm_upper_bound(op.as_ref()).unwrap();
        assert!(bound >= sigma * (1.0 - 1e-12), "{op:?}: {bound} < {sigma}");
    }
}

#[test]
fn block_diagonal_bound_is_max_of_blocks() {
    let a: Operator = Arc::new(DenseMatrix::from_rows(&[vec![3.0, 0.0], vec![0.0, 1.0]]).unwrap());
    let b: Operator = Arc::new(ScaledIdentity::new(2, 2.0));
    let bd = BlockDiagonal::new(vec![a.clone(), b.clone()]).unwrap();
    let composed = bd.composed_bound().unwrap();
    let expected = norm_upper_bound(a.as_ref()).unwrap().max(2.0);
    assert_eq!(composed, expected);
    assert!(composed >= 3.0);
}

#[test]
fn bases_are_isometries() {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for basis in [
        OrthonormalBasisOp::identity(8, 8),
        OrthonormalBasisOp::haar(8, 8).unwrap(),
        OrthonormalBasisOp::haar(16, 4).unwrap(),
    ] {
        for _ in 0..50 {
            let x = proxsplit::spaces::random_vector(basis.analysis_operator().dim_in(), &mut rng);
            let c = basis.analysis(&x);
            assert!((norm(&c) - norm(&x)).abs() <= 1e-10 * norm(&x));
            let back = basis.synthesis(&c);
            assert!(back.iter().zip(&x).all(|(a, b)| (a - b).abs() <= 1e-10));
        }
    }
}

#[test]
fn weights_must_form_a_convex_combination() {
    use proxsplit::WeightVector;
    assert!(WeightVector::new(vec![0.5, 0.5]).is_ok());
    assert!(WeightVector::new(vec![0.5, 0.4]).is_err());
    assert!(WeightVector::new(vec![1.5, -0.5]).is_err());
    assert!(WeightVector::new(vec![]).is_err());
    assert!(WeightVector::new(vec![0.1; 10]).is_ok());
}
