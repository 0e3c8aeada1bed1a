#![allow(dead_code)]

use std::path::{Path, PathBuf};

use proxsplit::oracle::CertifiedFixture;

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn certified_dir() -> PathBuf {
    fixture_dir().join("certified")
}

pub fn certified_paths() -> Vec<PathBuf> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(certified_dir())
        .expect("fixture directory")
        .map(|e| e.expect("dir entry").path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    paths
}

pub fn certified_fixtures() -> Vec<CertifiedFixture> {
    certified_paths()
        .iter()
        .map(|p| CertifiedFixture::load(p).expect("fixture parses"))
        .collect()
}

use std::sync::Arc;

use ndarray::array;
use proxsplit::prox::{
    elastic_net, make_indicator, EuclideanNorm, GroupNorm, L1Norm, ProxFunction, Zero,
};
use proxsplit::{ConvexSet, Vector};

/// Dimension used by [`catalog`].
pub const CATALOG_DIM: usize = 4;

/// One member of every catalog family, on `R^4`.
pub fn catalog() -> Vec<Arc<dyn ProxFunction>> {
    let sets = [
        ConvexSet::ball(array![0.5, -0.5, 0.0, 1.0], 1.5).unwrap(),
        ConvexSet::boxed(array![-1.0, -2.0, 0.0, -0.5], array![1.0, 0.0, 3.0, 0.5]).unwrap(),
        ConvexSet::halfspace(array![1.0, -2.0, 0.5, 1.0], 0.75).unwrap(),
        ConvexSet::affine(
            array![[1.0, 1.0, 0.0, 0.0], [0.0, 1.0, -1.0, 2.0]],
            array![1.0, -0.5],
        )
        .unwrap(),
    ];
    let mut out: Vec<Arc<dyn ProxFunction>> = vec![
        Arc::new(Zero),
        Arc::new(L1Norm),
        Arc::new(EuclideanNorm),
        Arc::new(GroupNorm::new(2).unwrap()),
        Arc::new(elastic_net(0.7, 0.4).unwrap()),
    ];
    out.extend(
        sets.into_iter()
            .map(|s| Arc::new(make_indicator(s)) as Arc<dyn ProxFunction>),
    );
    out
}

pub fn max_abs_diff(a: &Vector, b: &Vector) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
