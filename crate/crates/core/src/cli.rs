//! Command-line front end.
//!
//! Every run writes its outputs under `--out` and ends with a line
//! `RESULT converged=<bool> iters=<n> primal=<value>` on stdout. Exit codes:
//! 0 converged, 2 iteration limit reached, 1 invalid input.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::best_approx::{project_intersection, ProjectionStatus};
use crate::config::{ConstraintsSpec, ProblemSpec, SettingsSpec};
use crate::error::{Error, Result};
use crate::imaging::{
    gaussian_noise, image_objective, piecewise_constant_phantom, recover_image, tv, BasisKind,
    DualField, ImageGrid, MeasurementModel, OrthonormalBasisOp,
};
use crate::io::{read_image, write_dual_field_csv, write_image_csv, write_pgm, write_vector_csv};
use crate::oracle::{closed_form_oracle, scalar_oracle, Certificate, ScalarObjective};
use crate::prox::ExtendedReal;
use crate::solver::{solve, Solution, Trace, TRACE_HEADER};
use crate::spaces::{distance, WeightVector};

#[derive(Debug, Parser)]
#[command(
    name = "proxsplit",
    version,
    about = "Proximity operators of sums of composite convex functions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct RunFlags {
    /// Stopping tolerance on the iterates.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Constant step size; defaults to rho = (max_i |L_i|)^-2.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Constant relaxation parameter in (0, 1].
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

impl RunFlags {
    fn settings(&self) -> SettingsSpec {
        SettingsSpec {
            tol: self.tol,
            max_iter: self.max_iter,
            gamma: self.gamma,
            lambda: self.lambda,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BasisArg {
    Identity,
    Haar,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the proximity operator described by a JSON problem file.
    Solve {
        problem: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Project onto an intersection of composite constraints.
    Project {
        constraints: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Total-variation recovery of a noisy image (PGM or CSV grid).
    Denoise {
        image: Option<PathBuf>,
        /// Use an N x N synthetic piecewise-constant image instead of a file.
        #[arg(long, value_name = "N", conflicts_with = "image")]
        demo: Option<usize>,
        /// Weights for the data, coefficient and total-variation terms. A
        /// large coefficient weight drives the recovery to the zero image.
        #[arg(long, value_delimiter = ',', default_value = "0.96,0.004,0.036")]
        weights: Vec<f64>,
        /// Standard deviation of added Gaussian noise.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "identity")]
        basis: BasisArg,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Convert a trace CSV into columns convenient for plotting.
    TracePlotData {
        trace: PathBuf,
        #[arg(long, default_value = "plot.csv")]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub converged: bool,
    pub iterations: usize,
    pub primal: ExtendedReal,
}

impl Outcome {
    pub fn exit_code(&self) -> u8 {
        if self.converged {
            0
        } else {
            2
        }
    }

    pub fn result_line(&self) -> String {
        format!(
            "RESULT converged={} iters={} primal={}",
            self.converged, self.iterations, self.primal
        )
    }
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let (outcome, summary) = match &cli.command {
        Command::Solve { problem, flags } => run_solve(problem, flags)?,
        Command::Project { constraints, flags } => run_project(constraints, flags)?,
        Command::Denoise {
            image,
            demo,
            weights,
            noise,
            seed,
            basis,
            flags,
        } => {
            let basis = match basis {
                BasisArg::Identity => BasisKind::Identity,
                BasisArg::Haar => BasisKind::Haar,
            };
            run_denoise(
                image.as_deref(),
                *demo,
                weights,
                *noise,
                *seed,
                basis,
                flags,
            )?
        }
        Command::TracePlotData { trace, out } => run_trace_plot(trace, out)?,
    };
    print!("{summary}");
    println!("{}", outcome.result_line());
    Ok(outcome)
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn outcome_of(solution: &Solution, trace: &Trace) -> Outcome {
    Outcome {
        converged: solution.converged,
        iterations: solution.iterations,
        primal: trace.last().map_or(ExtendedReal::PosInf, |r| r.primal),
    }
}

fn certify(spec: &ProblemSpec, base: &Path) -> Option<Certificate> {
    closed_form_oracle(spec)
        .or_else(|_| ScalarObjective::from_spec(spec, base).and_then(|o| scalar_oracle(&o)))
        .ok()
}

fn run_solve(path: &Path, flags: &RunFlags) -> Result<(Outcome, String)> {
    let spec = ProblemSpec::load(path)?;
    let base = base_dir(path);
    let problem = spec.build(&base)?;
    let config = spec.settings.merged(&flags.settings()).solver_config();
    prepare_out(&flags.out)?;
    let (mut solution, trace) = solve(&problem, config)?;
    trace.save_csv(&flags.out.join("trace.csv"))?;
    write_vector_csv(&flags.out.join("solution.csv"), &solution.x)?;
    solution.certificate = certify(&spec, &base);

    let outcome = outcome_of(&solution, &trace);
    let mut summary = String::new();
    let _ = writeln!(summary, "iterations: {}", solution.iterations);
    let _ = writeln!(summary, "stop: {:?}", solution.stop);
    let _ = writeln!(summary, "primal: {}", outcome.primal);
    if let Some(d) = trace.last().and_then(|r| r.dual) {
        let _ = writeln!(summary, "dual: {d}");
    }
    if let Some(c) = &solution.certificate {
        let _ = writeln!(
            summary,
            "reference: {:?} distance {:e} radius {:e}",
            c.method,
            distance(&solution.x, &c.reference_x),
            c.guaranteed_radius
        );
    }
    fs::write(flags.out.join("summary.txt"), &summary)?;
    Ok((outcome, summary))
}

fn run_project(path: &Path, flags: &RunFlags) -> Result<(Outcome, String)> {
    let spec = ConstraintsSpec::load(path)?;
    let constraints = spec.build(&base_dir(path))?;
    let config = spec.projection_config(&flags.settings());
    prepare_out(&flags.out)?;
    let z = crate::spaces::Vector::from(spec.z.clone());
    let result = project_intersection(&z, &constraints, config)?;
    result.trace.save_csv(&flags.out.join("trace.csv"))?;
    write_vector_csv(&flags.out.join("solution.csv"), &result.solution.x)?;

    let mut outcome = outcome_of(&result.solution, &result.trace);
    outcome.converged = result.status == ProjectionStatus::Converged;
    let mut summary = String::new();
    let _ = writeln!(summary, "iterations: {}", result.solution.iterations);
    let _ = writeln!(summary, "status: {:?}", result.status);
    let _ = writeln!(summary, "qualification: {:?}", result.qualification);
    let _ = writeln!(
        summary,
        "feasibility residual: {:e}",
        result.feasibility_residual
    );
    let _ = writeln!(
        summary,
        "distance to z: {}",
        distance(&result.solution.x, &z)
    );
    fs::write(flags.out.join("summary.txt"), &summary)?;
    Ok((outcome, summary))
}

/// Image problems contract slowly; the generic default is too small.
const DENOISE_MAX_ITER: usize = 1_000_000;

fn run_denoise(
    image: Option<&Path>,
    demo: Option<usize>,
    weights: &[f64],
    noise: f64,
    seed: u64,
    basis: BasisKind,
    flags: &RunFlags,
) -> Result<(Outcome, String)> {
    let clean = match (image, demo) {
        (Some(path), None) => read_image(path)?,
        (None, Some(n)) if n > 0 => piecewise_constant_phantom(n, n),
        (None, Some(_)) => {
            return Err(Error::InvalidParameter(
                "--demo needs a positive size".into(),
            ))
        }
        _ => {
            return Err(Error::InvalidParameter(
                "give an image path or --demo N".into(),
            ))
        }
    };
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "noise level must be nonnegative, got {noise}"
        )));
    }
    let (w, h) = (clean.width(), clean.height());
    let weights = WeightVector::new(weights.to_vec())?;
    let basis = OrthonormalBasisOp::new(basis, w, h)?;
    let observed = if noise > 0.0 {
        ImageGrid::new(w, h, clean.pixels() + &gaussian_noise(w * h, noise, seed)?)?
    } else {
        clean
    };
    let model = MeasurementModel::denoising(&observed);
    let mut settings = flags.settings();
    settings.max_iter = settings.max_iter.or(Some(DENOISE_MAX_ITER));
    let config = settings.solver_config();
    prepare_out(&flags.out)?;
    let result = recover_image(&model, &basis, &weights, w, h, config)?;
    let out = &flags.out;
    result.trace.save_csv(&out.join("trace.csv"))?;
    write_pgm(&out.join("observed.pgm"), &observed)?;
    write_pgm(&out.join("recovered.pgm"), &result.image)?;
    write_image_csv(&out.join("recovered.csv"), &result.image)?;
    let field = result
        .solution
        .v
        .last()
        .cloned()
        .expect("field dual present");
    write_dual_field_csv(out, "tv_dual", &DualField::new(w, h, field)?)?;

    let outcome = outcome_of(&result.solution, &result.trace);
    let mut summary = String::new();
    let _ = writeln!(summary, "image: {w}x{h}");
    let _ = writeln!(summary, "iterations: {}", result.solution.iterations);
    let _ = writeln!(summary, "tv observed: {}", tv(&observed));
    let _ = writeln!(summary, "tv recovered: {}", tv(&result.image));
    let _ = writeln!(
        summary,
        "objective observed: {}",
        image_objective(&model, &basis, &weights, &observed)?
    );
    let _ = writeln!(
        summary,
        "objective recovered: {}",
        image_objective(&model, &basis, &weights, &result.image)?
    );
    fs::write(out.join("summary.txt"), &summary)?;
    Ok((outcome, summary))
}

fn parse_field(field: &str, line: usize) -> Result<Option<f64>> {
    match field.trim() {
        "" => Ok(None),
        "inf" => Ok(Some(f64::INFINITY)),
        s => s
            .parse()
            .map(Some)
            .map_err(|e| Error::Format(format!("line {line}: {e}: {s:?}"))),
    }
}

/// Columns `n,log10_step_norm,primal,dual,primal_excess` where the excess is
/// measured against the smallest finite primal value in the trace.
pub fn trace_plot_data(trace_csv: &str) -> Result<String> {
    let mut lines = trace_csv.lines();
    if lines.next().map(str::trim) != Some(TRACE_HEADER) {
        return Err(Error::Format(format!(
            "line 1: expected header {TRACE_HEADER:?}"
        )));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::Format(format!("line {}: expected 6 fields", i + 2)));
        }
        let n = fields[0]
            .trim()
            .parse::<usize>()
            .map_err(|e| Error::Format(format!("line {}: {e}", i + 2)))?;
        let primal = parse_field(fields[1], i + 2)?.unwrap_or(f64::INFINITY);
        let dual = parse_field(fields[2], i + 2)?;
        let step = parse_field(fields[3], i + 2)?.unwrap_or(f64::NAN);
        rows.push((n, primal, dual, step));
    }
    let best = rows
        .iter()
        .map(|r| r.1)
        .filter(|p| p.is_finite())
        .fold(f64::INFINITY, f64::min);
    let mut out = String::from("n,log10_step_norm,primal,dual,primal_excess\n");
    for (n, primal, dual, step) in rows {
        let log_step = if step > 0.0 {
            format!("{}", step.log10())
        } else {
            String::new()
        };
        let dual = dual.map(|d| d.to_string()).unwrap_or_default();
        let excess = if primal.is_finite() {
            (primal - best).to_string()
        } else {
            String::new()
        };
        let primal = if primal.is_finite() {
            primal.to_string()
        } else {
            "inf".into()
        };
        let _ = writeln!(out, "{n},{log_step},{primal},{dual},{excess}");
    }
    Ok(out)
}

fn run_trace_plot(trace: &Path, out: &Path) -> Result<(Outcome, String)> {
    let data = trace_plot_data(&fs::read_to_string(trace)?)
        .map_err(|e| Error::Format(format!("{}: {e}", trace.display())))?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(out, &data)?;
    let rows = data.lines().count().saturating_sub(1);
    let last_primal = data
        .lines()
        .last()
        .and_then(|l| l.split(',').nth(2))
        .and_then(|p| p.parse::<f64>().ok())
        .map_or(ExtendedReal::PosInf, ExtendedReal::Finite);
    let outcome = Outcome {
        converged: true,
        iterations: rows,
        primal: last_primal,
    };
    Ok((outcome, format!("rows: {rows}\n")))
}
