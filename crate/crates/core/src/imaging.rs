//! Discrete total-variation image recovery.
//!
//! Recovers an image from measurements `r_i = T_i x + s_i` by minimizing
//!
//! ```text
//! sum_i w_i |T_i x - r_i| + sum_k (w_{p+1} |<x, e_k>| + |<x, e_k>|^2 / 2) + w_{p+2} tv(x)
//! ```
//!
//! for an orthonormal basis `(e_k)`. By Parseval the quadratic part is
//! `|x|^2 / 2`, so this is a prox computation at `z = 0` whose dual updates
//! are all projections: unit balls for the data terms, clipping to `[-1, 1]`
//! for the coefficients and pointwise unit disks for the gradient field.
//!
//! Gradients use forward differences with a replicate boundary (zero
//! difference on the last row/column); the divergence is the exact negative
//! adjoint. The discrete gradient satisfies `|grad| <= sqrt(8)`.

use std::sync::Arc;

use ndarray::Array1;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{check_dim, Error, Result};
use crate::prox::{project_unit_ball, EuclideanNorm, GroupNorm, L1Norm};
use crate::solver::{
    dual_objective, primal_objective, CompositeProxProblem, Solution, SolverConfig, StepRules,
    StopMonitor, StopReason, Term, Trace, TraceRecord,
};
use crate::spaces::{
    distance, norm, norm_upper_bound, Identity, LinearOperator, Operator, Vector, WeightVector,
};

/// Upper bound on the norm of the forward-difference gradient.
pub const GRADIENT_NORM_BOUND: f64 = 2.828_427_124_746_190_3;

/// Scalar image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    width: usize,
    height: usize,
    pixels: Vector,
}

impl ImageGrid {
    pub fn new(width: usize, height: usize, pixels: Vector) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter(
                "image dimensions must be positive".into(),
            ));
        }
        check_dim(width * height, pixels.len())?;
        if pixels.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidParameter(
                "image has non-finite pixels".into(),
            ));
        }
        Ok(ImageGrid {
            width,
            height,
            pixels,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        ImageGrid {
            width,
            height,
            pixels: Vector::zeros(width * height),
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let pixels = Array1::from_iter(
            (0..height)
                .flat_map(|j| (0..width).map(move |k| (j, k)))
                .map(|(j, k)| f(j, k)),
        );
        ImageGrid {
            width,
            height,
            pixels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &Vector {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vector {
        self.pixels
    }

    /// Pixel at row `j`, column `k`.
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.pixels[j * self.width + k]
    }
}

/// A 2-vector per pixel, stored interleaved as `(horizontal, vertical)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualField {
    width: usize,
    height: usize,
    data: Vector,
}

impl DualField {
    pub fn new(width: usize, height: usize, data: Vector) -> Result<Self> {
        check_dim(2 * width * height, data.len())?;
        Ok(DualField {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        DualField {
            width,
            height,
            data: Vector::zeros(2 * width * height),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &Vector {
        &self.data
    }

    pub fn pair(&self, j: usize, k: usize) -> (f64, f64) {
        let i = 2 * (j * self.width + k);
        (self.data[i], self.data[i + 1])
    }

    pub fn horizontal(&self) -> ImageGrid {
        ImageGrid::from_fn(self.width, self.height, |j, k| self.pair(j, k).0)
    }

    pub fn vertical(&self) -> ImageGrid {
        ImageGrid::from_fn(self.width, self.height, |j, k| self.pair(j, k).1)
    }
}

fn gradient_raw(width: usize, height: usize, x: &[f64]) -> Vector {
    let mut out = vec![0.0; 2 * width * height];
    for j in 0..height {
        for k in 0..width {
            let i = j * width + k;
            if k + 1 < width {
                out[2 * i] = x[i + 1] - x[i];
            }
            if j + 1 < height {
                out[2 * i + 1] = x[i + width] - x[i];
            }
        }
    }
    Array1::from(out)
}

fn divergence_raw(width: usize, height: usize, y: &[f64]) -> Vector {
    let mut out = vec![0.0; width * height];
    for j in 0..height {
        for k in 0..width {
            let i = j * width + k;
            let mut d = 0.0;
            if k + 1 < width {
                d += y[2 * i];
            }
            if k > 0 {
                d -= y[2 * (i - 1)];
            }
            if j + 1 < height {
                d += y[2 * i + 1];
            }
            if j > 0 {
                d -= y[2 * (i - width) + 1];
            }
            out[i] = d;
        }
    }
    Array1::from(out)
}

pub fn forward_gradient(x: &ImageGrid) -> DualField {
    let data = gradient_raw(x.width, x.height, x.pixels.as_slice().expect("contiguous"));
    DualField {
        width: x.width,
        height: x.height,
        data,
    }
}

pub fn backward_divergence(y: &DualField) -> ImageGrid {
    let pixels = divergence_raw(y.width, y.height, y.data.as_slice().expect("contiguous"));
    ImageGrid {
        width: y.width,
        height: y.height,
        pixels,
    }
}

/// Sum over pixels of the Euclidean norm of the gradient.
pub fn tv(x: &ImageGrid) -> f64 {
    let g = forward_gradient(x);
    g.data
        .as_slice()
        .expect("contiguous")
        .chunks(2)
        .map(|p| (p[0] * p[0] + p[1] * p[1]).sqrt())
        .sum()
}

/// Per pixel: `pair / max(1, |pair|)`.
pub fn project_disk_field(y: &DualField) -> DualField {
    let mut data = y.data.clone();
    for p in data.as_slice_mut().expect("contiguous").chunks_mut(2) {
        let n = (p[0] * p[0] + p[1] * p[1]).sqrt();
        if n > 1.0 {
            p[0] /= n;
            p[1] /= n;
        }
    }
    DualField {
        width: y.width,
        height: y.height,
        data,
    }
}

/// The gradient as a linear operator on flattened images; its adjoint is
/// `-div`.
#[derive(Debug, Clone, Copy)]
pub struct Gradient2d {
    width: usize,
    height: usize,
}

impl Gradient2d {
    pub fn new(width: usize, height: usize) -> Self {
        Gradient2d { width, height }
    }
}

impl LinearOperator for Gradient2d {
    fn dim_in(&self) -> usize {
        self.width * self.height
    }
    fn dim_out(&self) -> usize {
        2 * self.width * self.height
    }
    fn apply(&self, x: &Vector) -> Vector {
        gradient_raw(self.width, self.height, x.as_slice().expect("contiguous"))
    }
    fn adjoint(&self, u: &Vector) -> Vector {
        -divergence_raw(self.width, self.height, u.as_slice().expect("contiguous"))
    }
    fn known_norm_bound(&self) -> Option<f64> {
        Some(GRADIENT_NORM_BOUND)
    }
}

/// Averages non-overlapping `factor x factor` blocks.
#[derive(Debug, Clone, Copy)]
pub struct BlockAverage {
    width: usize,
    height: usize,
    factor: usize,
}

impl BlockAverage {
    pub fn new(width: usize, height: usize, factor: usize) -> Result<Self> {
        if factor == 0 || !width.is_multiple_of(factor) || !height.is_multiple_of(factor) {
            return Err(Error::InvalidParameter(format!(
                "{width}x{height} grid is not divisible into {factor}x{factor} blocks"
            )));
        }
        Ok(BlockAverage {
            width,
            height,
            factor,
        })
    }

    pub fn output_shape(&self) -> (usize, usize) {
        (self.width / self.factor, self.height / self.factor)
    }
}

impl LinearOperator for BlockAverage {
    fn dim_in(&self) -> usize {
        self.width * self.height
    }
    fn dim_out(&self) -> usize {
        let (w, h) = self.output_shape();
        w * h
    }
    fn apply(&self, x: &Vector) -> Vector {
        let (ow, oh) = self.output_shape();
        let scale = 1.0 / (self.factor * self.factor) as f64;
        let mut out = Vector::zeros(ow * oh);
        for j in 0..self.height {
            for k in 0..self.width {
                out[(j / self.factor) * ow + k / self.factor] += scale * x[j * self.width + k];
            }
        }
        out
    }
    fn adjoint(&self, u: &Vector) -> Vector {
        let (ow, _) = self.output_shape();
        let scale = 1.0 / (self.factor * self.factor) as f64;
        let mut out = Vector::zeros(self.width * self.height);
        for j in 0..self.height {
            for k in 0..self.width {
                out[j * self.width + k] = scale * u[(j / self.factor) * ow + k / self.factor];
            }
        }
        out
    }
    fn known_norm_bound(&self) -> Option<f64> {
        Some(1.0 / self.factor as f64)
    }
}

fn haar_forward_1d(buf: &mut [f64], tmp: &mut [f64]) {
    let mut len = buf.len();
    while len > 1 {
        let half = len / 2;
        for i in 0..half {
            let (a, b) = (buf[2 * i], buf[2 * i + 1]);
            tmp[i] = (a + b) * std::f64::consts::FRAC_1_SQRT_2;
            tmp[half + i] = (a - b) * std::f64::consts::FRAC_1_SQRT_2;
        }
        buf[..len].copy_from_slice(&tmp[..len]);
        len = half;
    }
}

fn haar_inverse_1d(buf: &mut [f64], tmp: &mut [f64]) {
    let n = buf.len();
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        for i in 0..half {
            let (s, d) = (buf[i], buf[half + i]);
            tmp[2 * i] = (s + d) * std::f64::consts::FRAC_1_SQRT_2;
            tmp[2 * i + 1] = (s - d) * std::f64::consts::FRAC_1_SQRT_2;
        }
        buf[..len].copy_from_slice(&tmp[..len]);
        len *= 2;
    }
}

/// Separable orthonormal Haar analysis on a power-of-two grid: full 1-D
/// decompositions of every row, then of every column.
#[derive(Debug, Clone, Copy)]
pub struct Haar2d {
    width: usize,
    height: usize,
}

impl Haar2d {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if !width.is_power_of_two() || !height.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "Haar basis needs power-of-two dimensions, got {width}x{height}"
            )));
        }
        Ok(Haar2d { width, height })
    }

    fn transform(
        &self,
        x: &Vector,
        row_op: fn(&mut [f64], &mut [f64]),
        rows_first: bool,
    ) -> Vector {
        let (w, h) = (self.width, self.height);
        let mut data = x.to_vec();
        let mut tmp = vec![0.0; w.max(h)];
        let rows = |data: &mut Vec<f64>, tmp: &mut Vec<f64>| {
            for row in data.chunks_mut(w) {
                row_op(row, tmp);
            }
        };
        let cols = |data: &mut Vec<f64>, tmp: &mut Vec<f64>| {
            let mut col = vec![0.0; h];
            for k in 0..w {
                for j in 0..h {
                    col[j] = data[j * w + k];
                }
                row_op(&mut col, tmp);
                for j in 0..h {
                    data[j * w + k] = col[j];
                }
            }
        };
        if rows_first {
            rows(&mut data, &mut tmp);
            cols(&mut data, &mut tmp);
        } else {
            cols(&mut data, &mut tmp);
            rows(&mut data, &mut tmp);
        }
        Array1::from(data)
    }
}

impl LinearOperator for Haar2d {
    fn dim_in(&self) -> usize {
        self.width * self.height
    }
    fn dim_out(&self) -> usize {
        self.width * self.height
    }
    fn apply(&self, x: &Vector) -> Vector {
        self.transform(x, haar_forward_1d, true)
    }
    fn adjoint(&self, u: &Vector) -> Vector {
        self.transform(u, haar_inverse_1d, false)
    }
    fn known_norm_bound(&self) -> Option<f64> {
        Some(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    Identity,
    Haar,
}

/// Orthonormal basis given by its analysis operator `x -> (<x, e_k>)_k`;
/// synthesis is the adjoint.
#[derive(Debug, Clone)]
pub struct OrthonormalBasisOp {
    kind: BasisKind,
    analysis: Operator,
}

impl OrthonormalBasisOp {
    pub fn identity(width: usize, height: usize) -> Self {
        OrthonormalBasisOp {
            kind: BasisKind::Identity,
            analysis: Arc::new(Identity::new(width * height)),
        }
    }

    pub fn haar(width: usize, height: usize) -> Result<Self> {
        Ok(OrthonormalBasisOp {
            kind: BasisKind::Haar,
            analysis: Arc::new(Haar2d::new(width, height)?),
        })
    }

    pub fn new(kind: BasisKind, width: usize, height: usize) -> Result<Self> {
        match kind {
            BasisKind::Identity => Ok(Self::identity(width, height)),
            BasisKind::Haar => Self::haar(width, height),
        }
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn analysis_operator(&self) -> &Operator {
        &self.analysis
    }

    pub fn analysis(&self, x: &Vector) -> Vector {
        self.analysis.apply(x)
    }

    pub fn synthesis(&self, coeffs: &Vector) -> Vector {
        self.analysis.adjoint(coeffs)
    }
}

/// Measurements `r_i = T_i x + s_i`.
#[derive(Debug, Clone)]
pub struct MeasurementModel {
    operators: Vec<Operator>,
    data: Vec<Vector>,
}

impl MeasurementModel {
    pub fn new(operators: Vec<Operator>, data: Vec<Vector>) -> Result<Self> {
        if operators.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one measurement is required".into(),
            ));
        }
        check_dim(operators.len(), data.len())?;
        let dim = operators[0].dim_in();
        for (t, r) in operators.iter().zip(&data) {
            check_dim(dim, t.dim_in())?;
            check_dim(t.dim_out(), r.len())?;
        }
        Ok(MeasurementModel { operators, data })
    }

    /// Single direct observation `r = x + s`.
    pub fn denoising(observed: &ImageGrid) -> Self {
        MeasurementModel {
            operators: vec![Arc::new(Identity::new(observed.pixels.len()))],
            data: vec![observed.pixels.clone()],
        }
    }

    pub fn operators(&self) -> &[Operator] {
        &self.operators
    }

    pub fn data(&self) -> &[Vector] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }
}

/// `T x + noise`.
pub fn degrade(x: &ImageGrid, op: &dyn LinearOperator, noise: &Vector) -> Result<Vector> {
    check_dim(op.dim_in(), x.pixels.len())?;
    check_dim(op.dim_out(), noise.len())?;
    Ok(op.apply(&x.pixels) + noise)
}

/// Seeded i.i.d. Gaussian noise with standard deviation `amplitude`.
pub fn gaussian_noise(dim: usize, amplitude: f64, seed: u64) -> Result<Vector> {
    let normal = Normal::new(0.0, amplitude).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(Array1::from_iter((0..dim).map(|_| normal.sample(&mut rng))))
}

/// Piecewise-constant test image: a bright square and a darker disk on a
/// flat background.
pub fn piecewise_constant_phantom(width: usize, height: usize) -> ImageGrid {
    ImageGrid::from_fn(width, height, |j, k| {
        let (y, x) = (
            (j as f64 + 0.5) / height as f64,
            (k as f64 + 0.5) / width as f64,
        );
        if (0.15..0.5).contains(&x) && (0.15..0.5).contains(&y) {
            0.9
        } else if (x - 0.68).powi(2) + (y - 0.65).powi(2) < 0.2 * 0.2 {
            0.6
        } else {
            0.2
        }
    })
}

fn check_weights(model: &MeasurementModel, weights: &WeightVector) -> Result<()> {
    check_dim(model.len() + 2, weights.len())
}

/// The recovery objective, with the coefficient quadratic summed explicitly.
pub fn image_objective(
    model: &MeasurementModel,
    basis: &OrthonormalBasisOp,
    weights: &WeightVector,
    x: &ImageGrid,
) -> Result<f64> {
    check_weights(model, weights)?;
    check_dim(model.operators[0].dim_in(), x.pixels.len())?;
    let w = weights.as_slice();
    let p = model.len();
    let mut total = 0.0;
    for (i, (t, r)) in model.operators.iter().zip(&model.data).enumerate() {
        total += w[i] * norm(&(&t.apply(&x.pixels) - r));
    }
    total += basis
        .analysis(&x.pixels)
        .iter()
        .map(|c| w[p] * c.abs() + 0.5 * c * c)
        .sum::<f64>();
    total += w[p + 1] * tv(x);
    Ok(total)
}

/// The recovery problem as an explicit composite prox problem at `z = 0`.
pub fn image_problem(
    model: &MeasurementModel,
    basis: &OrthonormalBasisOp,
    weights: &WeightVector,
    width: usize,
    height: usize,
) -> Result<CompositeProxProblem> {
    check_weights(model, weights)?;
    let n = width * height;
    let w = weights.as_slice();
    let p = model.len();
    let mut terms: Vec<Term> = model
        .operators
        .iter()
        .zip(&model.data)
        .enumerate()
        .map(|(i, (t, r))| Term::new(w[i], Arc::new(EuclideanNorm), t.clone(), r.clone()))
        .collect();
    check_dim(n, basis.analysis.dim_in())?;
    terms.push(Term::new(
        w[p],
        Arc::new(L1Norm),
        basis.analysis.clone(),
        Vector::zeros(n),
    ));
    terms.push(Term::new(
        w[p + 1],
        Arc::new(GroupNorm::new(2)?),
        Arc::new(Gradient2d::new(width, height)),
        Vector::zeros(2 * n),
    ));
    CompositeProxProblem::new(Vector::zeros(n), terms)
}

#[derive(Debug, Clone)]
pub struct ImageRecovery {
    pub image: ImageGrid,
    pub solution: Solution,
    pub trace: Trace,
}

/// Iterate state: data duals, coefficient duals, gradient-field dual, image.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryState {
    pub n: usize,
    pub data_duals: Vec<Vector>,
    pub coeff_dual: Vector,
    pub field_dual: Vector,
    pub x: Vector,
}

impl RecoveryState {
    pub fn duals(&self) -> Vec<Vector> {
        let mut v = self.data_duals.clone();
        v.push(self.coeff_dual.clone());
        v.push(self.field_dual.clone());
        v
    }
}

#[derive(Debug)]
pub struct ImageRecoverySolver<'a> {
    model: &'a MeasurementModel,
    basis: &'a OrthonormalBasisOp,
    weights: Vec<f64>,
    width: usize,
    height: usize,
    gradient: Gradient2d,
    rules: StepRules,
    config: SolverConfig,
    problem: CompositeProxProblem,
}

impl<'a> ImageRecoverySolver<'a> {
    pub fn new(
        model: &'a MeasurementModel,
        basis: &'a OrthonormalBasisOp,
        weights: &WeightVector,
        width: usize,
        height: usize,
        config: SolverConfig,
    ) -> Result<Self> {
        let problem = image_problem(model, basis, weights, width, height)?;
        // rho = max{sqrt 8, |T_1|, ..., |T_p|, 1}^-2; the basis has norm 1
        let mut max_norm = GRADIENT_NORM_BOUND.max(1.0);
        for t in &model.operators {
            max_norm = max_norm.max(norm_upper_bound(t.as_ref())?);
        }
        let rules = StepRules::new(max_norm, &config)?;
        Ok(ImageRecoverySolver {
            model,
            basis,
            weights: weights.as_slice().to_vec(),
            width,
            height,
            gradient: Gradient2d::new(width, height),
            rules,
            config,
            problem,
        })
    }

    pub fn rho(&self) -> f64 {
        self.rules.rho()
    }

    /// The equivalent composite prox problem.
    pub fn problem(&self) -> &CompositeProxProblem {
        &self.problem
    }

    fn primal(&self, data: &[Vector], coeff: &Vector, field: &Vector) -> Vector {
        let p = self.model.len();
        let mut x = Vector::zeros(self.width * self.height);
        for ((t, v), w) in self.model.operators.iter().zip(data).zip(&self.weights) {
            x.scaled_add(-w, &t.adjoint(v));
        }
        x.scaled_add(-self.weights[p], &self.basis.synthesis(coeff));
        let div = divergence_raw(
            self.width,
            self.height,
            field.as_slice().expect("contiguous"),
        );
        x.scaled_add(self.weights[p + 1], &div);
        x
    }

    pub fn initial_state(&self) -> RecoveryState {
        let n = self.width * self.height;
        let data_duals: Vec<Vector> = self
            .model
            .operators
            .iter()
            .map(|t| Vector::zeros(t.dim_out()))
            .collect();
        let coeff_dual = Vector::zeros(n);
        let field_dual = Vector::zeros(2 * n);
        let x = self.primal(&data_duals, &coeff_dual, &field_dual);
        RecoveryState {
            n: 0,
            data_duals,
            coeff_dual,
            field_dual,
            x,
        }
    }

    pub fn step(&self, state: &RecoveryState) -> Result<RecoveryState> {
        let gamma = self.rules.gamma(state.n)?;
        let lambda = self.rules.lambda(state.n)?;
        let relax = |old: &Vector, target: Vector| -> Vector { old + &((target - old) * lambda) };

        let data_duals = self
            .model
            .operators
            .iter()
            .zip(&self.model.data)
            .zip(&state.data_duals)
            .map(|((t, r), v)| {
                let probe = v + &((&t.apply(&state.x) - r) * gamma);
                relax(v, project_unit_ball(&probe))
            })
            .collect::<Vec<_>>();

        let coeff_probe = &state.coeff_dual + &(self.basis.analysis(&state.x) * gamma);
        let coeff_dual = relax(&state.coeff_dual, coeff_probe.mapv(|c| c.clamp(-1.0, 1.0)));

        let field_probe = &state.field_dual + &(self.gradient.apply(&state.x) * gamma);
        let projected = project_disk_field(&DualField::new(self.width, self.height, field_probe)?);
        let field_dual = relax(&state.field_dual, projected.data);

        let x = self.primal(&data_duals, &coeff_dual, &field_dual);
        Ok(RecoveryState {
            n: state.n + 1,
            data_duals,
            coeff_dual,
            field_dual,
            x,
        })
    }

    pub fn run(&self) -> Result<ImageRecovery> {
        let mut state = self.initial_state();
        let mut trace = Trace::new();
        let mut monitor = StopMonitor::new(self.config.tol);
        let mut stop = StopReason::MaxIterations;
        while state.n < self.config.max_iter {
            let gamma = self.rules.gamma(state.n)?;
            let lambda = self.rules.lambda(state.n)?;
            let next = self.step(&state)?;
            let step_norm = distance(&next.x, &state.x);
            state = next;
            let primal = primal_objective(&self.problem, &state.x)?;
            let dual = dual_objective(&self.problem, &state.duals())?;
            trace.push(TraceRecord {
                n: state.n,
                primal,
                dual,
                step_norm,
                gamma,
                lambda,
            });
            if state.n.is_multiple_of(10_000) {
                log::info!(
                    "iteration {} step {:.3e} objective {}",
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
        let v = state.duals();
        let image = ImageGrid::new(self.width, self.height, state.x.clone())?;
        Ok(ImageRecovery {
            image,
            solution: Solution {
                x: state.x,
                v,
                iterations: state.n,
                converged,
                stop,
                certificate: None,
            },
            trace,
        })
    }
}

pub fn recover_image(
    model: &MeasurementModel,
    basis: &OrthonormalBasisOp,
    weights: &WeightVector,
    width: usize,
    height: usize,
    config: SolverConfig,
) -> Result<ImageRecovery> {
    ImageRecoverySolver::new(model, basis, weights, width, height, config)?.run()
}
