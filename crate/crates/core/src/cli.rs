//! Command-line front end.
//!
//! Exit codes: `0` success, `1` hypothesis-gate refusal (a verdict JSON is
//! still written), `2` configuration, numeric or internal error, `3` I/O
//! error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::{parse_config, RunConfig, SolverMode};
use crate::discretization::{assemble, AssembledOperator};
use crate::error::{Error, Result};
use crate::kernel::{audit_kernel, KernelAudit};
use crate::nonlinearity::{
    audit_asymptotic_slopes, audit_growth, check_f2_gap, classify, CaseClassification, GapCheck, GrowthAudit,
    GrowthGrid, SlopeAudit,
};
use crate::report::{eigenvalue_csv, matrix_csv, nodal_csv, write_json, Csv};
use crate::spectral::{poincare_lower_bound, solve_eigenproblem, Spectrum};
use crate::variational::{geometry_probe, solve_case_a, solve_case_b, GeometryProbe, UniquenessVerdict};

#[derive(Debug, Parser)]
#[command(
    name = "nonlocal-saddle",
    version,
    about = "Solver and hypothesis verifier for nonlocal semilinear Dirichlet problems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Random seed (overrides `solver.seed`).
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalues of `A e = λ M e` as `j,lambda` CSV.
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10)]
        count: usize,
        /// Also write nodal eigenvector values.
        #[arg(long)]
        vectors: bool,
    },
    /// Solve the configured problem; writes `solution.csv` and `report.json`.
    Solve {
        #[command(flatten)]
        common: Common,
    },
    /// Audit every checkable hypothesis; writes `verdict.json`.
    Verify {
        #[command(flatten)]
        common: Common,
    },
    /// Sample the saddle geometry; writes `geometry.json`.
    ProbeGeometry {
        #[command(flatten)]
        common: Common,
    },
    /// Dense stiffness, mass and tail-weight CSVs.
    ExportMatrices {
        #[command(flatten)]
        common: Common,
    },
}

/// Process exit status of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success = 0,
    Refused = 1,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => 3,
        Error::HypothesisGate(_) => 1,
        _ => 2,
    }
}

/// Parses arguments, runs, and returns the exit code. Diagnostics go to
/// stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli.command) {
        Ok(o) => o as i32,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

struct Context {
    cfg: RunConfig,
    out: PathBuf,
}

fn load(common: &Common) -> Result<Context> {
    let text = fs::read_to_string(&common.config)?;
    let mut cfg = parse_config(&text)?;
    if let Some(seed) = common.seed {
        cfg.solver.seed = seed;
    }
    let out = common.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    fs::create_dir_all(&out)?;
    Ok(Context { cfg, out })
}

fn operator(cfg: &RunConfig) -> Result<AssembledOperator> {
    assemble(&cfg.mesh()?, &cfg.kernel()?, &cfg.assembly_options())
}

fn full_spectrum(op: &AssembledOperator, count: usize) -> Result<Spectrum> {
    solve_eigenproblem(op, count.clamp(1, op.dim()))
}

/// Runs one subcommand.
pub fn run(command: &Command) -> Result<Outcome> {
    match command {
        Command::Spectrum { common, count, vectors } => {
            let ctx = load(common)?;
            run_spectrum(&ctx.cfg, &ctx.out, *count, *vectors)
        }
        Command::Solve { common } => {
            let ctx = load(common)?;
            run_solve(&ctx.cfg, &ctx.out)
        }
        Command::Verify { common } => {
            let ctx = load(common)?;
            run_verify(&ctx.cfg, &ctx.out)
        }
        Command::ProbeGeometry { common } => {
            let ctx = load(common)?;
            run_probe(&ctx.cfg, &ctx.out)
        }
        Command::ExportMatrices { common } => {
            let ctx = load(common)?;
            run_export(&ctx.cfg, &ctx.out)
        }
    }
}

pub fn run_spectrum(cfg: &RunConfig, out: &Path, count: usize, vectors: bool) -> Result<Outcome> {
    let op = operator(cfg)?;
    if count == 0 || count > op.dim() {
        return Err(Error::InvalidParameter(format!("--count must lie in 1..={}", op.dim())));
    }
    let sp = full_spectrum(&op, count)?;
    let csv = eigenvalue_csv(sp.requested());
    csv.write(&out.join("spectrum.csv"))?;
    print!("{}", csv.render());
    if vectors {
        let names: Vec<String> = (1..=count).map(|j| format!("e{j}")).collect();
        let vecs: Vec<_> = (1..=count).map(|j| sp.eigenvector(j)).collect();
        nodal_csv(op.require_mesh()?, &names, &vecs).write(&out.join("eigenvectors.csv"))?;
    }
    Ok(Outcome::Success)
}

#[derive(Debug, Serialize)]
struct Tolerances {
    tol: f64,
    max_iter: usize,
    quad_order: usize,
    assembly_tol: f64,
}

#[derive(Debug, Serialize)]
struct SolveArtifact {
    case: CaseClassification,
    j_value: f64,
    residual_inf: f64,
    iterations: usize,
    converged: bool,
    f2: Option<GapCheck>,
    uniqueness: UniquenessVerdict,
    geometry: Option<GeometryProbe>,
    seed: u64,
    tolerances: Tolerances,
    residual_trace: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct GateVerdict {
    subcommand: &'static str,
    classification: CaseClassification,
    message: String,
}

fn refuse(
    out: &Path,
    subcommand: &'static str,
    classification: CaseClassification,
    message: String,
) -> Result<Outcome> {
    eprintln!("refused: {message}");
    write_json(&out.join("verdict.json"), &GateVerdict { subcommand, classification, message })?;
    Ok(Outcome::Refused)
}

pub fn run_solve(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let op = operator(cfg)?;
    let sp = full_spectrum(&op, op.dim())?;
    let spec = cfg.nonlinearity()?;
    let opts = cfg.solver_options();
    let case = classify(&spec, &sp);
    let result = match (cfg.solver.mode, &case) {
        (_, CaseClassification::Unsupported { reason }) => {
            let reason = reason.clone();
            return refuse(out, "solve", case, reason);
        }
        (SolverMode::Auto, CaseClassification::Coercive) | (SolverMode::CaseA, _) => {
            solve_case_a(&op, &sp, &spec, &opts)
        }
        (SolverMode::Auto, CaseClassification::Gap { .. }) | (SolverMode::CaseB, _) => {
            solve_case_b(&op, &sp, &spec, &opts)
        }
    };
    let report = match result {
        Ok(r) => r,
        Err(Error::HypothesisGate(msg)) => return refuse(out, "solve", case, msg),
        Err(e) => return Err(e),
    };
    nodal_csv(op.require_mesh()?, &["u".to_string()], std::slice::from_ref(&report.solution))
        .write(&out.join("solution.csv"))?;
    let artifact = SolveArtifact {
        case: report.case,
        j_value: report.j_value,
        residual_inf: report.residual_inf,
        iterations: report.iterations,
        converged: report.converged,
        f2: report.f2,
        uniqueness: report.uniqueness,
        geometry: report.geometry,
        seed: cfg.solver.seed,
        tolerances: Tolerances {
            tol: opts.tol,
            max_iter: opts.max_iter,
            quad_order: cfg.quadrature.order,
            assembly_tol: cfg.quadrature.assembly_tol,
        },
        residual_trace: report.trace,
    };
    write_json(&out.join("report.json"), &artifact)?;
    Ok(Outcome::Success)
}

#[derive(Debug, Serialize)]
struct KernelCheck {
    passed: bool,
    #[serde(flatten)]
    audit: KernelAudit,
}

#[derive(Debug, Serialize)]
struct PoincareCheck {
    passed: bool,
    radius: f64,
    floor: f64,
    lambda_1: f64,
}

#[derive(Debug, Serialize)]
struct F2Check {
    passed: bool,
    detail: Option<GapCheck>,
    note: Option<String>,
}

#[derive(Debug, Serialize)]
struct Verdict {
    all_passed: bool,
    kernel: KernelCheck,
    growth: GrowthAudit,
    asymptotic_slopes: SlopeAudit,
    poincare: PoincareCheck,
    classification: CaseClassification,
    f2: F2Check,
}

pub fn run_verify(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let kernel = cfg.kernel()?;
    let audit = audit_kernel(&kernel, 1e-10, 64)?;
    let kernel_check = KernelCheck { passed: audit.k1_holds && audit.k2_holds, audit };
    let spec = cfg.nonlinearity()?;
    let (a, b) = (cfg.domain.a, cfg.domain.b);
    let growth = audit_growth(&spec, &GrowthGrid::default_for(a, b));

    let op = assemble(&cfg.mesh()?, &kernel, &cfg.assembly_options())?;
    let sp = full_spectrum(&op, op.dim())?;
    let slopes = audit_asymptotic_slopes(&spec, sp.sample_points());
    let radius = a.abs().max(b.abs()) + 0.5 * (b - a);
    let floor = poincare_lower_bound(a, b, cfg.kernel.s, cfg.kernel.theta, radius)?;
    let lambda_1 = sp.lambda(1);
    let poincare = PoincareCheck { passed: lambda_1 >= floor, radius, floor, lambda_1 };

    let classification = classify(&spec, &sp);
    let f2 = match &classification {
        CaseClassification::Gap { k } => match check_f2_gap(&spec, &sp, *k) {
            Ok(c) => F2Check { passed: c.passed, detail: Some(c), note: None },
            Err(Error::Unauditable(m)) => F2Check { passed: false, detail: None, note: Some(m) },
            Err(e) => return Err(e),
        },
        CaseClassification::Coercive => F2Check {
            passed: true,
            detail: None,
            note: Some("coercive case: uniqueness condition not required".into()),
        },
        CaseClassification::Unsupported { .. } => F2Check { passed: false, detail: None, note: None },
    };
    let supported = classification.is_supported();
    let verdict = Verdict {
        all_passed: kernel_check.passed && growth.passed && slopes.passed && poincare.passed && supported && f2.passed,
        kernel: kernel_check,
        growth,
        asymptotic_slopes: slopes,
        poincare,
        classification,
        f2,
    };
    write_json(&out.join("verdict.json"), &verdict)?;
    Ok(if supported { Outcome::Success } else { Outcome::Refused })
}

pub fn run_probe(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let op = operator(cfg)?;
    let sp = full_spectrum(&op, op.dim())?;
    let spec = cfg.nonlinearity()?;
    let case = classify(&spec, &sp);
    let k = match &case {
        CaseClassification::Coercive => 0,
        CaseClassification::Gap { k } => *k,
        CaseClassification::Unsupported { reason } => {
            let reason = reason.clone();
            return refuse(out, "probe-geometry", case, reason);
        }
    };
    let probe = geometry_probe(&op, &sp, &spec, k, &cfg.geometry_options())?;
    write_json(&out.join("geometry.json"), &probe)?;
    Ok(Outcome::Success)
}

pub fn run_export(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let op = operator(cfg)?;
    matrix_csv(&op.stiffness).write(&out.join("stiffness.csv"))?;
    matrix_csv(&op.mass).write(&out.join("mass.csv"))?;
    let mesh = op.require_mesh()?;
    let mut tail = Csv::new(["x", "kappa"]);
    for (x, k) in mesh.interior_nodes().iter().zip(op.tail.iter()) {
        tail.push(vec![crate::report::fmt_real(*x), crate::report::fmt_real(*k)]);
    }
    tail.write(&out.join("tail.csv"))?;
    Ok(Outcome::Success)
}
