//! JSON problem and constraint descriptions.
//!
//! A problem file looks like
//!
//! ```json
//! {
//!   "z": [2.0, -1.0],
//!   "terms": [
//!     {"weight": 0.5, "function": {"kind": "norm1"}},
//!     {"weight": 0.5, "function": {"kind": "ball", "center": [0, 0], "radius": 1},
//!      "operator": {"kind": "matrix", "rows": [[1, 1], [0, 2]]}, "shift": [0.5, 0]}
//!   ]
//! }
//! ```
//!
//! Operators default to the identity and shifts to zero. A `csv` operator
//! reads a header-free row-major matrix relative to the file's directory.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::best_approx::{CompositeConstraint, ProjectionConfig};
use crate::error::{Error, Result};
use crate::io::read_matrix_csv;
use crate::prox::{
    elastic_net, make_indicator, ConvexSet, EuclideanNorm, GroupNorm, L1Norm, ProxFunction, Zero,
};
use crate::solver::{CompositeProxProblem, Schedule, SolverConfig, Term};
use crate::spaces::{DenseMatrix, Diagonal, Identity, Operator, ScaledIdentity, Vector};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatorSpec {
    #[default]
    Identity,
    ScaledIdentity {
        scale: f64,
    },
    Diagonal {
        diag: Vec<f64>,
    },
    Matrix {
        rows: Vec<Vec<f64>>,
    },
    Csv {
        path: PathBuf,
    },
}

impl OperatorSpec {
    pub fn build(&self, dim: usize, base_dir: &Path) -> Result<Operator> {
        let op: Operator = match self {
            OperatorSpec::Identity => Arc::new(Identity::new(dim)),
            OperatorSpec::ScaledIdentity { scale } => {
                if !scale.is_finite() {
                    return Err(Error::InvalidParameter("scale must be finite".into()));
                }
                Arc::new(ScaledIdentity::new(dim, *scale))
            }
            OperatorSpec::Diagonal { diag } => {
                if diag.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: diag.len(),
                    });
                }
                Arc::new(Diagonal::new(Vector::from(diag.clone())))
            }
            OperatorSpec::Matrix { rows } => Arc::new(DenseMatrix::from_rows(rows)?),
            OperatorSpec::Csv { path } => {
                Arc::new(DenseMatrix::new(read_matrix_csv(&base_dir.join(path))?)?)
            }
        };
        if op.dim_in() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: op.dim_in(),
            });
        }
        Ok(op)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetSpec {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Halfspace { normal: Vec<f64>, offset: f64 },
    Affine { rows: Vec<Vec<f64>>, rhs: Vec<f64> },
}

impl SetSpec {
    pub fn build(&self) -> Result<ConvexSet> {
        match self {
            SetSpec::Ball { center, radius } => {
                ConvexSet::ball(Vector::from(center.clone()), *radius)
            }
            SetSpec::Box { lo, hi } => {
                ConvexSet::boxed(Vector::from(lo.clone()), Vector::from(hi.clone()))
            }
            SetSpec::Halfspace { normal, offset } => {
                ConvexSet::halfspace(Vector::from(normal.clone()), *offset)
            }
            SetSpec::Affine { rows, rhs } => {
                ConvexSet::affine(rows_to_array(rows)?, Vector::from(rhs.clone()))
            }
        }
    }
}

pub(crate) fn rows_to_array(rows: &[Vec<f64>]) -> Result<Array2<f64>> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::InvalidParameter(
            "matrix rows must be nonempty and of equal length".into(),
        ));
    }
    Array2::from_shape_vec((rows.len(), ncols), rows.concat())
        .map_err(|e| Error::InvalidParameter(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionSpec {
    Zero,
    Norm1,
    Norm2,
    GroupNorm { group: usize },
    ElasticNet { alpha: f64, beta: f64 },
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Halfspace { normal: Vec<f64>, offset: f64 },
    Affine { rows: Vec<Vec<f64>>, rhs: Vec<f64> },
}

impl FunctionSpec {
    /// The constraint set when this is an indicator.
    pub fn set(&self) -> Option<SetSpec> {
        match self.clone() {
            FunctionSpec::Ball { center, radius } => Some(SetSpec::Ball { center, radius }),
            FunctionSpec::Box { lo, hi } => Some(SetSpec::Box { lo, hi }),
            FunctionSpec::Halfspace { normal, offset } => {
                Some(SetSpec::Halfspace { normal, offset })
            }
            FunctionSpec::Affine { rows, rhs } => Some(SetSpec::Affine { rows, rhs }),
            _ => None,
        }
    }

    pub fn build(&self) -> Result<Arc<dyn ProxFunction>> {
        if let Some(set) = self.set() {
            return Ok(Arc::new(make_indicator(set.build()?)));
        }
        Ok(match self {
            FunctionSpec::Zero => Arc::new(Zero),
            FunctionSpec::Norm1 => Arc::new(L1Norm),
            FunctionSpec::Norm2 => Arc::new(EuclideanNorm),
            FunctionSpec::GroupNorm { group } => Arc::new(GroupNorm::new(*group)?),
            FunctionSpec::ElasticNet { alpha, beta } => Arc::new(elastic_net(*alpha, *beta)?),
            _ => unreachable!("indicators handled above"),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub weight: f64,
    pub function: FunctionSpec,
    #[serde(default)]
    pub operator: OperatorSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<Vec<f64>>,
}

/// Solver settings that may be stored alongside a problem. Command-line
/// flags take precedence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SettingsSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    /// Constant step size.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

impl SettingsSpec {
    /// Overlays `other` on `self`.
    pub fn merged(&self, other: &SettingsSpec) -> SettingsSpec {
        SettingsSpec {
            tol: other.tol.or(self.tol),
            max_iter: other.max_iter.or(self.max_iter),
            gamma: other.gamma.or(self.gamma),
            lambda: other.lambda.or(self.lambda),
        }
    }

    pub fn solver_config(&self) -> SolverConfig {
        let mut config = SolverConfig::default();
        if let Some(tol) = self.tol {
            config.tol = tol;
        }
        if let Some(max_iter) = self.max_iter {
            config.max_iter = max_iter;
        }
        if let Some(gamma) = self.gamma {
            config.gamma = Schedule::Constant(gamma);
        }
        if let Some(lambda) = self.lambda {
            config.lambda = Schedule::Constant(lambda);
        }
        config
    }

    pub fn projection_config(&self) -> ProjectionConfig {
        let s = self.solver_config();
        ProjectionConfig {
            gamma: s.gamma,
            lambda: s.lambda,
            max_iter: s.max_iter,
            tol: s.tol,
            ..ProjectionConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub z: Vec<f64>,
    pub terms: Vec<TermSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slater_point: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "is_default")]
    pub settings: SettingsSpec,
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

fn shift_vector(shift: &Option<Vec<f64>>, dim_out: usize) -> Result<Vector> {
    match shift {
        None => Ok(Vector::zeros(dim_out)),
        Some(s) if s.len() == dim_out => Ok(Vector::from(s.clone())),
        Some(s) => Err(Error::DimensionMismatch {
            expected: dim_out,
            found: s.len(),
        }),
    }
}

fn in_item<T>(what: &str, i: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Format(format!("{what} {i}: {e}")))
}

impl ProblemSpec {
    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        parse_json(text, origin)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn dim(&self) -> usize {
        self.z.len()
    }

    pub fn build(&self, base_dir: &Path) -> Result<CompositeProxProblem> {
        let dim = self.z.len();
        let mut terms = Vec::with_capacity(self.terms.len());
        for (i, t) in self.terms.iter().enumerate() {
            let term = in_item(
                "term",
                i,
                (|| {
                    let op = t.operator.build(dim, base_dir)?;
                    let shift = shift_vector(&t.shift, op.dim_out())?;
                    Ok(Term::new(t.weight, t.function.build()?, op, shift))
                })(),
            )?;
            terms.push(term);
        }
        CompositeProxProblem::new(Vector::from(self.z.clone()), terms)
    }

    pub fn slater_point(&self) -> Option<Vector> {
        self.slater_point.clone().map(Vector::from)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSpec {
    #[serde(default)]
    pub operator: OperatorSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<Vec<f64>>,
    pub set: SetSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintsSpec {
    pub z: Vec<f64>,
    pub constraints: Vec<ConstraintSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slater_point: Option<Vec<f64>>,
    #[serde(default)]
    pub assume_qualified: bool,
    #[serde(default, skip_serializing_if = "is_default")]
    pub settings: SettingsSpec,
}

impl ConstraintsSpec {
    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        parse_json(text, origin)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn build(&self, base_dir: &Path) -> Result<Vec<CompositeConstraint>> {
        let dim = self.z.len();
        self.constraints
            .iter()
            .enumerate()
            .map(|(i, c)| {
                in_item(
                    "constraint",
                    i,
                    (|| {
                        let op = c.operator.build(dim, base_dir)?;
                        let shift = shift_vector(&c.shift, op.dim_out())?;
                        CompositeConstraint::new(op, shift, c.set.build()?)
                    })(),
                )
            })
            .collect()
    }

    /// Projection settings including the qualification inputs.
    pub fn projection_config(&self, overrides: &SettingsSpec) -> ProjectionConfig {
        let mut config = self.settings.merged(overrides).projection_config();
        config.slater_point = self.slater_point.clone().map(Vector::from);
        config.assume_qualified = self.assume_qualified;
        config
    }
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str, origin: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| {
        let msg = e.to_string();
        let msg = msg.split(" at line ").next().unwrap_or(&msg).to_string();
        Error::Format(format!("{origin}:{}:{}: {msg}", e.line(), e.column()))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::solve;

    #[test]
    fn parses_and_builds() {
        let text = r#"{
            "z": [2.0, -1.0],
            "terms": [
                {"weight": 0.5, "function": {"kind": "norm1"}},
                {"weight": 0.5, "function": {"kind": "ball", "center": [0, 0], "radius": 1},
                 "operator": {"kind": "matrix", "rows": [[1, 1], [0, 2]]}, "shift": [0.5, 0]}
            ],
            "settings": {"tol": 1e-10}
        }"#;
        let spec = ProblemSpec::from_json(text, "inline").unwrap();
        assert_eq!(spec.settings.tol, Some(1e-10));
        let problem = spec.build(Path::new(".")).unwrap();
        assert_eq!(problem.dim(), 2);
        assert_eq!(problem.terms().len(), 2);
        let back = ProblemSpec::from_json(&spec.to_json().unwrap(), "roundtrip").unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn errors_are_line_anchored() {
        let text = "{\n  \"z\": [1.0],\n  \"terms\": [\n    {\"weight\": 1.0, \"function\": {\"kind\": \"nope\"}}\n  ]\n}";
        let err = ProblemSpec::from_json(text, "bad.json")
            .unwrap_err()
            .to_string();
        assert!(err.starts_with("bad.json:4:"), "{err}");
        let err = ProblemSpec::from_json("{\"z\": [1.0,]}", "trail.json")
            .unwrap_err()
            .to_string();
        assert!(err.starts_with("trail.json:1:"), "{err}");
    }

    #[test]
    fn semantic_errors_name_the_term() {
        let text = r#"{"z": [1.0, 2.0], "terms": [
            {"weight": 1.0, "function": {"kind": "norm1"}, "operator": {"kind": "diagonal", "diag": [1.0]}}]}"#;
        let err = ProblemSpec::from_json(text, "x")
            .unwrap()
            .build(Path::new("."))
            .unwrap_err();
        assert!(err.to_string().starts_with("term 0:"), "{err}");
    }

    #[test]
    fn csv_operator_is_relative_to_base() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.csv"), "2,0\n0,2\n").unwrap();
        let text = r#"{"z": [4.0, 0.0], "terms": [
            {"weight": 1.0, "function": {"kind": "zero"}, "operator": {"kind": "csv", "path": "a.csv"}}]}"#;
        let problem = ProblemSpec::from_json(text, "x")
            .unwrap()
            .build(dir.path())
            .unwrap();
        let (sol, _) = solve(&problem, SolverConfig::default()).unwrap();
        assert!((sol.x[0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn constraints_parse() {
        let text = r#"{"z": [2.0, 2.0], "constraints": [
            {"set": {"kind": "ball", "center": [0, 0], "radius": 1}},
            {"set": {"kind": "halfspace", "normal": [1, 0], "offset": 0.5}}],
            "slater_point": [0, 0]}"#;
        let spec = ConstraintsSpec::from_json(text, "c").unwrap();
        let cs = spec.build(Path::new(".")).unwrap();
        assert_eq!(cs.len(), 2);
        let config = spec.projection_config(&SettingsSpec::default());
        assert!(config.slater_point.is_some());
    }
}
