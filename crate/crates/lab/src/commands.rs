//! Subcommand definitions and drivers.
//!
//! Relative output paths are resolved against `--out-dir`, so a manifest
//! replayed with another `--out-dir` writes the same files elsewhere.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::Serialize;
use serde_json::json;

use rbf_advect::advection::{exact_solution, initial_condition, rk4_advance, SolveConfig, VelocityField};
use rbf_advect::analysis::{
    build_case, evals_for, fit_loglog, max_cfl, nodes_for, ode_matrix, quadrature_study, relative_errors, run_case,
    spectrum, Case, ConvergenceRow, Integrand, QuadKind, SpectrumReport,
};
use rbf_advect::geometry::EvalKind;
use rbf_advect::linalg::Matrix;
use rbf_advect::methods::Method;
use rbf_advect::voronoi::{build_voronoi, jump_magnitude_1d};
use rbf_advect::{Domain, Error as CoreError};

use crate::config::RunConfig;
use crate::io::{self, write_text};
use crate::manifest::Manifest;
use crate::{par_map, svg, LabError, Result};

#[derive(Parser, Debug, Clone)]
#[command(name = "rbf-lab", version, about = "Meshfree RBF advection experiments")]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Generate node (X) and evaluation (Y) point sets.
    Nodes(NodesArgs),
    /// Run a simulation from a JSON config.
    Solve(SolveArgs),
    /// Eigenvalues of the semi-discrete operator against the RK4 region.
    Spectrum(SpectrumArgs),
    /// Error table and slopes over an h sweep.
    Converge(ConvergeArgs),
    /// Equal-weight quadrature error over an h_y sweep.
    Quadrature(QuadratureArgs),
    /// Cardinal-function jumps of 1D RBF-FD stencils.
    Jumps1d(Jumps1dArgs),
    /// Largest stable RK4 CFL number per oversampling factor.
    Maxcfl(MaxCflArgs),
    /// Write the point sets and operator matrices of one case.
    Export(ExportArgs),
    /// Replay the command recorded in a manifest.
    Rerun(RerunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Nodes(_) => "nodes",
            Command::Solve(_) => "solve",
            Command::Spectrum(_) => "spectrum",
            Command::Converge(_) => "converge",
            Command::Quadrature(_) => "quadrature",
            Command::Jumps1d(_) => "jumps1d",
            Command::Maxcfl(_) => "maxcfl",
            Command::Export(_) => "export",
            Command::Rerun(_) => "rerun",
        }
    }
}

#[derive(ValueEnum, Serialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum DomainArg {
    Star,
    /// Unit disk.
    Disk,
    /// `[0,1]²`.
    Square,
}

impl DomainArg {
    pub fn domain(self) -> Domain {
        match self {
            DomainArg::Star => Domain::Star,
            DomainArg::Disk => Domain::Disk { radius: 1.0 },
            DomainArg::Square => Domain::unit_square(),
        }
    }
}

#[derive(ValueEnum, Serialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    Kansa,
    Pum,
    Fd,
}

impl MethodArg {
    pub fn method(self) -> Method {
        match self {
            MethodArg::Kansa => Method::Kansa,
            MethodArg::Pum => Method::Pum,
            MethodArg::Fd => Method::Fd,
        }
    }
}

#[derive(ValueEnum, Serialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum EvalKindArg {
    QuasiUniform,
    Cartesian,
    Halton,
}

impl EvalKindArg {
    pub fn kind(self) -> EvalKind {
        match self {
            EvalKindArg::QuasiUniform => EvalKind::QuasiUniform,
            EvalKindArg::Cartesian => EvalKind::Cartesian,
            EvalKindArg::Halton => EvalKind::Halton,
        }
    }
}

#[derive(ValueEnum, Serialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum QuadKindArg {
    Cartesian,
    Halton,
    Relaxed,
}

impl QuadKindArg {
    pub fn kind(self) -> QuadKind {
        match self {
            QuadKindArg::Cartesian => QuadKind::Cartesian,
            QuadKindArg::Halton => QuadKind::Halton,
            QuadKindArg::Relaxed => QuadKind::Relaxed,
        }
    }

    /// RMS realizations used unless `--realizations` is given.
    pub fn default_realizations(self) -> usize {
        match self {
            QuadKindArg::Relaxed => 1,
            _ => 16,
        }
    }
}

#[derive(ValueEnum, Serialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum IntegrandArg {
    /// `e^{-3r}`.
    Gaussian,
    /// `r³`.
    Cubic,
    /// Piecewise in `r` with jumps at 0.5 and 0.7.
    Discontinuous,
    Constant,
}

impl IntegrandArg {
    pub fn integrand(self) -> Integrand {
        match self {
            IntegrandArg::Gaussian => Integrand::Gaussian,
            IntegrandArg::Cubic => Integrand::Cubic,
            IntegrandArg::Discontinuous => Integrand::Discontinuous,
            IntegrandArg::Constant => Integrand::Constant,
        }
    }
}

#[derive(Args, Serialize, Debug, Clone)]
pub struct OutArgs {
    /// Directory for outputs and the manifest.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Worker threads for independent parameter combinations.
    #[arg(long, default_value_t = 1)]
    #[serde(skip)]
    pub jobs: usize,
}

impl OutArgs {
    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.out_dir.join(p)
        }
    }
}

/// One discretization; shared by the operator-based subcommands.
#[derive(Args, Serialize, Debug, Clone)]
pub struct CaseArgs {
    #[arg(long, value_enum)]
    pub method: MethodArg,
    #[arg(long)]
    pub p: usize,
    /// FD stencil size or PUM patch target; defaults to 2 and 4 times the polynomial count.
    #[arg(long)]
    pub n: Option<usize>,
    /// Jump penalty (fd only).
    #[arg(long)]
    pub penalty: bool,
    /// Node perturbation as a fraction of h.
    #[arg(long, default_value_t = 0.0)]
    pub perturb: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "quasi-uniform")]
    pub eval_kind: EvalKindArg,
    #[arg(long, value_enum, default_value = "star")]
    pub domain: DomainArg,
}

impl CaseArgs {
    pub fn case(&self, h: f64, q: usize) -> Result<Case> {
        check_spacing(h)?;
        let mut c = Case::new(self.method.method(), h, q, self.p);
        c.n = self.n;
        c.penalty = self.penalty;
        c.perturb = self.perturb;
        c.seed = self.seed;
        c.eval_kind = self.eval_kind.kind();
        c.domain = self.domain.domain();
        Ok(c)
    }

    /// Local size after defaults, recorded in manifests.
    pub fn resolved_n(&self) -> Option<usize> {
        let mut c = Case::new(self.method.method(), 0.1, 1, self.p);
        c.n = self.n;
        c.local_size()
    }
}

fn check_spacing(h: f64) -> Result<()> {
    if !(h > 0.0 && h < 1.0) {
        return Err(LabError::config(format!("spacing h = {h} must lie in (0, 1)")));
    }
    Ok(())
}

#[derive(Args, Serialize, Debug, Clone)]
pub struct NodesArgs {
    #[arg(long, value_enum, default_value = "star")]
    pub domain: DomainArg,
    #[arg(long)]
    pub h: f64,
    /// Oversampling factor of Y.
    #[arg(long, default_value_t = 1)]
    pub q: usize,
    #[arg(long, default_value_t = 0.0)]
    pub perturb: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "quasi-uniform")]
    pub eval_kind: EvalKindArg,
    #[arg(long, default_value = "X.csv")]
    pub out: PathBuf,
    /// Written when given or when q > 1 (then defaults to Y.csv).
    #[arg(long)]
    pub out_eval: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub io: OutArgs,
}

#[derive(Args, Serialize, Debug, Clone)]
pub struct SolveArgs {
    /// JSON run config.
    #[arg(long)]
    pub config: PathBuf,
    /// Energy ratio treated as divergence.
    #[arg(long, default_value_t = 1e8)]
    pub stop_ratio: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub io: OutArgs,
}

#[derive(Args, Serialize, Debug, Clone)]
pub struct SpectrumArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub case: CaseArgs,
    #[arg(long)]
    pub h: f64,
    /// Oversampling factors, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub q: Vec<usize>,
    /// Sets Δt = cfl·h/|F′(t*)| for the classification.
    #[arg(long)]
    pub cfl: f64,
    #[arg(long, default_value_t = 0.0)]
    pub t_star: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub io: OutArgs,
}

#[derive(Args, Serialize, Debug, Clone)]
pub struct ConvergeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub case: CaseArgs,
    #[arg(long, value_delimiter = ',', default_value = "0.08,0.06,0.04")]
    pub hs: Vec<f64>,
    #[arg(long, default_value_t = 9)]
    pub q: usize,
    #[arg(long, default_value_t = 0.2)]
    pub cfl: f64,
    #[arg(long, default_value_t = 1.0)]
    pub t_final: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub io: OutArgs,
}

#[derive(Args, Serialize, Debug, Clone)]
pub struct QuadratureArgs {
    #[arg(long, value_enum, default_value = "star")]
    pub domain: DomainArg,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "cartesian,halton,relaxed")]
    pub kind: Vec<QuadKindArg>,
    #[arg(long = "f", value_enum, value_delimiter = ',', default_value = "gaussian,cubic,discontinuous")]
    pub integrand: Vec<IntegrandArg>,
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.035,0.025,0.0175,0.0125")]
    pub hy: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Point sets per h_y; default 16 for cartesian and halton, 1 for relaxed.
    #[arg(long)]
    pub realizations: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub io: OutArgs,
}

#[derive(Args, Serialize, Debug, Clone)]
pub struct Jumps1dArgs {
    #[arg(long)]
    pub p: usize,
    /// Node counts on [0, 1].
    #[arg(long = "N", value_delimiter = ',')]
    pub nodes: Vec<usize>,
    /// Stencil sizes.
    #[arg(long = "n", value_delimiter = ',')]
    pub stencil: Vec<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub io: OutArgs,
}

#[derive(Args, Serialize, Debug, Clone)]
pub struct MaxCflArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub case: CaseArgs,
    #[arg(long)]
    pub h: f64,
    #[arg(long, value_delimiter = ',', default_value = "5,6,7,8,9,10,11,12,13,14")]
    pub q: Vec<usize>,
    #[arg(long, default_value_t = 0.0)]
    pub t_star: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub io: OutArgs,
}

#[derive(Args, Serialize, Debug, Clone)]
pub struct ExportArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub case: CaseArgs,
    #[arg(long)]
    pub h: f64,
    #[arg(long, default_value_t = 1)]
    pub q: usize,
    /// Also write the Voronoi interior edges.
    #[arg(long)]
    pub edges: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub io: OutArgs,
}

#[derive(Args, Serialize, Debug, Clone)]
pub struct RerunArgs {
    pub manifest: PathBuf,
    /// Write the replayed outputs here instead of the recorded directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

/// What a subcommand produced, before the manifest is written.
pub struct Report {
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub outputs: Vec<PathBuf>,
    pub results: serde_json::Value,
    /// Human-readable summary for standard output.
    pub lines: Vec<String>,
    /// Set when the outputs were written but the run failed (e.g. divergence).
    pub error: Option<LabError>,
}

impl Report {
    fn new(config: impl Serialize, seed: Option<u64>) -> Self {
        Report {
            config: serde_json::to_value(config).expect("serializable args"),
            seed,
            outputs: Vec::new(),
            results: json!({}),
            lines: Vec::new(),
            error: None,
        }
    }

    fn write(&mut self, path: PathBuf, text: &str) -> Result<()> {
        write_text(&path, text)?;
        self.outputs.push(path);
        Ok(())
    }
}

/// Parses `argv` (without the program name) and runs it.
pub fn run_argv(argv: &[String]) -> Result<Vec<String>> {
    let cli = Cli::try_parse_from(std::iter::once("rbf-lab".to_string()).chain(argv.iter().cloned()))
        .map_err(|e| LabError::config(e.to_string()))?;
    run(&cli.command, argv)
}

/// Runs one command and writes its manifest; returns the summary lines.
pub fn run(cmd: &Command, argv: &[String]) -> Result<Vec<String>> {
    if let Command::Rerun(a) = cmd {
        let m = Manifest::read(&a.manifest)?;
        let mut argv = m.argv.clone();
        if let Some(dir) = &a.out_dir {
            argv.push("--out-dir".into());
            argv.push(dir.display().to_string());
        }
        info!("replaying {:?}", argv);
        return run_argv(&argv);
    }
    let start = Instant::now();
    let (mut report, dir) = match cmd {
        Command::Nodes(a) => (nodes(a)?, a.io.out_dir.clone()),
        Command::Solve(a) => (solve(a)?, a.io.out_dir.clone()),
        Command::Spectrum(a) => (spectrum_cmd(a)?, a.io.out_dir.clone()),
        Command::Converge(a) => (converge(a)?, a.io.out_dir.clone()),
        Command::Quadrature(a) => (quadrature(a)?, a.io.out_dir.clone()),
        Command::Jumps1d(a) => (jumps1d(a)?, a.io.out_dir.clone()),
        Command::Maxcfl(a) => (maxcfl_cmd(a)?, a.io.out_dir.clone()),
        Command::Export(a) => (export(a)?, a.io.out_dir.clone()),
        Command::Rerun(_) => unreachable!(),
    };
    let manifest = Manifest {
        command: cmd.name().to_string(),
        config: report.config.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: report.seed,
        wall_clock_s: start.elapsed().as_secs_f64(),
        outputs: report.outputs.clone(),
        argv: argv.to_vec(),
        results: report.results.clone(),
    };
    let path = dir.join(format!("{}.manifest.json", cmd.name()));
    manifest.write(&path)?;
    info!("wrote {}", path.display());
    match report.error.take() {
        Some(e) => Err(e),
        None => Ok(report.lines),
    }
}

fn nodes(a: &NodesArgs) -> Result<Report> {
    check_spacing(a.h)?;
    let mut case = Case::new(Method::Kansa, a.h, a.q, 1);
    case.domain = a.domain.domain();
    case.perturb = a.perturb;
    case.seed = a.seed;
    case.eval_kind = a.eval_kind.kind();
    if a.q == 0 {
        return Err(LabError::config("oversampling q must be at least 1"));
    }
    let x = nodes_for(&case)?;
    let mut r = Report::new(a, Some(a.seed));
    r.write(a.io.resolve(&a.out), &io::points_csv(&x))?;
    let mut results = json!({ "N": x.len(), "boundary": x.boundary_indices().len() });
    r.lines.push(format!("N = {} ({} on the boundary)", x.len(), x.boundary_indices().len()));
    let eval_path = a.out_eval.clone().or_else(|| (a.q > 1).then(|| PathBuf::from("Y.csv")));
    if let Some(p) = eval_path {
        let y = evals_for(&case, &x)?;
        r.write(a.io.resolve(&p), &io::points_csv(&y))?;
        results["M"] = json!(y.len());
        r.lines.push(format!("M = {}", y.len()));
    }
    r.results = results;
    Ok(r)
}

fn solve(a: &SolveArgs) -> Result<Report> {
    let text = std::fs::read_to_string(&a.config).map_err(LabError::io(&a.config))?;
    let cfg = RunConfig::from_json(&text).map_err(|e| LabError::config(format!("{}: {e}", a.config.display())))?;
    let resolved = cfg.resolved()?;
    let case = cfg.case()?;
    check_spacing(case.h)?;
    let setup = build_case(&case, VelocityField::Rotational)?;
    let u0: Vec<f64> = setup.nodes.points.iter().map(|&p| initial_condition(p)).collect();
    let mut sc = SolveConfig::new(cfg.cfl, case.h, cfg.t_final);
    sc.stop_ratio = Some(a.stop_ratio);
    info!("solving {} nodes, {} evaluation points", setup.nodes.len(), setup.evals.len());
    let run = rk4_advance(&setup.system, &u0, &sc)?;
    let mut r = Report::new(json!({ "run": resolved, "stop_ratio": a.stop_ratio, "out_dir": a.io.out_dir }), Some(cfg.seed));
    r.write(a.io.resolve(Path::new("energy.csv")), &io::energy_csv(&run.trace))?;
    r.write(a.io.resolve(Path::new("solution.csv")), &io::solution_csv(&setup.nodes.points, &run.u))?;
    let uh = setup.system.evaluate_solution(&run.u);
    let exact: Vec<f64> = setup.evals.points.iter().map(|&y| exact_solution(y, run.time)).collect();
    let err = relative_errors(&uh, &exact);
    r.results = json!({
        "N": setup.nodes.len(),
        "M": setup.evals.len(),
        "steps": run.steps,
        "time": run.time,
        "max_ratio": run.trace.max_ratio(),
        "final_ratio": run.trace.ratios.last().copied(),
        "cg_iterations": run.cg_iterations,
        "e1": err.e1,
        "e2": err.e2,
        "einf": err.einf,
    });
    r.lines.push(format!(
        "N = {}, {} steps to t = {}, max energy ratio {:.6e}, e2 = {:.3e}",
        setup.nodes.len(),
        run.steps,
        run.time,
        run.trace.max_ratio(),
        err.e2
    ));
    if run.stopped {
        r.error = Some(CoreError::Diverged { time: run.time }.into());
    }
    Ok(r)
}

fn speed(t: f64) -> f64 {
    let f = VelocityField::Rotational.eval(t);
    f[0].hypot(f[1])
}

fn spectrum_at(a: &CaseArgs, h: f64, q: usize, dt: f64, t_star: f64) -> Result<(usize, SpectrumReport)> {
    let case = a.case(h, q)?;
    let setup = build_case(&case, VelocityField::Rotational)?;
    let ode = ode_matrix(&setup.system, t_star, case.penalty)?;
    info!("q = {q}: eigenvalues of a {0}×{0} matrix", ode.kept.len());
    Ok((setup.nodes.len(), spectrum(&ode.matrix, dt, case.seed)?))
}

fn spectrum_cmd(a: &SpectrumArgs) -> Result<Report> {
    if !(a.cfl > 0.0) {
        return Err(LabError::config("--cfl must be positive"));
    }
    let dt = a.cfl * a.h / speed(a.t_star);
    let reports = par_map(&a.q, a.io.jobs, |&q| spectrum_at(&a.case, a.h, q, dt, a.t_star));
    let mut r = Report::new(a, Some(a.case.seed));
    r.config["n"] = json!(a.case.resolved_n());
    let mut rows = Vec::new();
    for (&q, rep) in a.q.iter().zip(reports) {
        let (n, rep) = rep?;
        let stem = if a.q.len() == 1 { "spectrum".to_string() } else { format!("spectrum_q{q}") };
        r.write(a.io.resolve(Path::new(&format!("{stem}.csv"))), &io::spectrum_csv(&rep))?;
        let title = format!("{} p={} q={q} h={}", a.case.method.method().name(), a.case.p, a.h);
        r.write(a.io.resolve(Path::new(&format!("{stem}.svg"))), &svg::spectrum_svg(&rep, &title))?;
        r.lines.push(format!(
            "q = {q}: {} eigenvalues, {} unstable, max Re = {:.6e}",
            rep.len(),
            rep.unstable,
            rep.max_real()
        ));
        rows.push(json!({
            "q": q,
            "N": n,
            "size": rep.len(),
            "unstable": rep.unstable,
            "max_real": rep.max_real(),
            "max_residual": rep.max_residual,
        }));
    }
    r.results = json!({ "dt": dt, "spectra": rows });
    Ok(r)
}

fn maxcfl_cmd(a: &MaxCflArgs) -> Result<Report> {
    let v = speed(a.t_star);
    let found = par_map(&a.q, a.io.jobs, |&q| -> Result<_> {
        let (_, rep) = spectrum_at(&a.case, a.h, q, 1.0, a.t_star)?;
        Ok((max_cfl(&rep.eigenvalues, a.h, v), rep.max_real()))
    });
    let mut r = Report::new(a, Some(a.case.seed));
    r.config["n"] = json!(a.case.resolved_n());
    let mut csv = String::from("q,cfl,stable\n");
    let mut rows = Vec::new();
    let mut cfls = Vec::new();
    for (&q, f) in a.q.iter().zip(found) {
        let (c, max_re) = f?;
        csv.push_str(&format!("{q},{},{}\n", io::fmt_f64(c.cfl), c.stable as u8));
        r.lines.push(format!("q = {q}: max CFL {:.6} ({})", c.cfl, if c.stable { "stable" } else { "unstable, Re λ > 0" }));
        rows.push(json!({ "q": q, "cfl": c.cfl, "stable": c.stable, "max_real": max_re }));
        cfls.push(c);
    }
    r.write(a.io.resolve(Path::new("maxcfl.csv")), &csv)?;
    let spread = if !cfls.is_empty() && cfls.iter().all(|c| c.stable) {
        let hi = cfls.iter().map(|c| c.cfl).fold(f64::NEG_INFINITY, f64::max);
        let lo = cfls.iter().map(|c| c.cfl).fold(f64::INFINITY, f64::min);
        r.lines.push(format!("relative spread {:.3e}", (hi - lo) / hi));
        Some((hi - lo) / hi)
    } else {
        r.lines.push("relative spread undefined (unstable q present)".into());
        None
    };
    r.results = json!({ "maxcfl": rows, "spread": spread });
    Ok(r)
}

fn converge(a: &ConvergeArgs) -> Result<Report> {
    if a.hs.len() < 2 {
        return Err(LabError::config("--hs needs at least two spacings"));
    }
    let rows = par_map(&a.hs, a.io.jobs, |&h| -> Result<ConvergenceRow> {
        let case = a.case.case(h, a.q)?;
        let setup = build_case(&case, VelocityField::Rotational)?;
        info!("h = {h}: {} nodes", setup.nodes.len());
        Ok(ConvergenceRow { h, nodes: setup.nodes.len(), errors: run_case(&setup, a.cfl, a.t_final)? })
    });
    let rows: Vec<ConvergenceRow> = rows.into_iter().collect::<Result<_>>()?;
    let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let fit = |f: fn(&ConvergenceRow) -> f64| fit_loglog(&h, &rows.iter().map(f).collect::<Vec<_>>()).0;
    let slopes = [fit(|r| r.errors.e1), fit(|r| r.errors.e2), fit(|r| r.errors.einf)];
    let mut r = Report::new(a, Some(a.case.seed));
    r.config["n"] = json!(a.case.resolved_n());
    r.write(a.io.resolve(Path::new("convergence.csv")), &io::convergence_csv(&rows))?;
    for row in &rows {
        r.lines.push(format!("h = {}: N = {}, e2 = {:.4e}", row.h, row.nodes, row.errors.e2));
    }
    r.lines.push(format!("slopes e1 {:.3}, e2 {:.3}, einf {:.3}", slopes[0], slopes[1], slopes[2]));
    r.results = json!({ "slopes": { "e1": slopes[0], "e2": slopes[1], "einf": slopes[2] } });
    Ok(r)
}

fn quadrature(a: &QuadratureArgs) -> Result<Report> {
    if a.hy.len() < 2 || a.hy.iter().any(|&h| !(h > 0.0)) {
        return Err(LabError::config("--hy needs at least two positive spacings"));
    }
    let domain = a.domain.domain();
    let fs: Vec<Integrand> = a.integrand.iter().map(|f| f.integrand()).collect();
    let studies = par_map(&a.kind, a.io.jobs, |k| {
        let reps = a.realizations.unwrap_or(k.default_realizations());
        quadrature_study(&domain, &fs, &[k.kind()], &a.hy, a.seed, reps)
    });
    let mut series = Vec::new();
    for s in studies {
        series.extend(s?.series);
    }
    let mut r = Report::new(a, Some(a.seed));
    r.write(a.io.resolve(Path::new("quadrature.csv")), &io::quadrature_csv(&series))?;
    let mut rows = Vec::new();
    for s in &series {
        r.lines.push(format!("{} {}: slope {:.3} (R² {:.3})", s.kind.name(), s.integrand.name(), s.slope, s.r2));
        rows.push(json!({ "kind": s.kind.name(), "integrand": s.integrand.name(), "slope": s.slope, "r2": s.r2 }));
    }
    r.results = json!({ "series": rows });
    Ok(r)
}

fn jumps1d(a: &Jumps1dArgs) -> Result<Report> {
    if a.nodes.is_empty() || a.stencil.is_empty() {
        return Err(LabError::config("--N and --n are required"));
    }
    let mut r = Report::new(a, None);
    let mut csv = String::from("p,N,n,jump\n");
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for &nn in &a.nodes {
        for &n in &a.stencil {
            let j = jump_magnitude_1d(nn, n, a.p)?;
            worst = worst.max(j);
            csv.push_str(&format!("{},{nn},{n},{}\n", a.p, io::fmt_f64(j)));
            r.lines.push(format!("p = {}, N = {nn}, n = {n}: max jump {j:.6e}", a.p));
            rows.push(json!({ "N": nn, "n": n, "jump": j }));
        }
    }
    r.write(a.io.resolve(Path::new("jumps1d.csv")), &csv)?;
    r.lines.push(format!("max jump {worst:.6e}"));
    r.results = json!({ "jumps": rows, "max_jump": worst });
    Ok(r)
}

fn export(a: &ExportArgs) -> Result<Report> {
    let case = a.case.case(a.h, a.q)?;
    let setup = build_case(&case, VelocityField::Rotational)?;
    let mut r = Report::new(a, Some(a.case.seed));
    r.config["n"] = json!(a.case.resolved_n());
    let op = &setup.operator;
    r.write(a.io.resolve(Path::new("X.csv")), &io::points_csv(&setup.nodes))?;
    r.write(a.io.resolve(Path::new("Y.csv")), &io::points_csv(&setup.evals))?;
    r.write(a.io.resolve(Path::new("E.coo")), &io::coo(&op.e))?;
    r.write(a.io.resolve(Path::new("D1.coo")), &io::coo(&op.d1))?;
    r.write(a.io.resolve(Path::new("D2.coo")), &io::coo(&op.d2))?;
    let mut results = json!({ "N": op.nodes(), "M": op.evals(), "nnz_E": op.e.nnz() });
    if let Some(pen) = &setup.penalty {
        r.write(a.io.resolve(Path::new("P.coo")), &io::coo(&Matrix::Sparse(pen.p.clone())))?;
        r.write(a.io.resolve(Path::new("J.coo")), &io::coo(&Matrix::Sparse(pen.jump.clone())))?;
        results["gamma"] = json!(pen.gamma);
    }
    if a.edges {
        let vd = build_voronoi(&setup.nodes.points, &case.domain)?;
        r.write(a.io.resolve(Path::new("edges.csv")), &io::edges_csv(&vd))?;
        results["edges"] = json!(vd.edges.len());
        results["h_edge"] = json!(vd.h_edge);
    }
    r.lines.push(format!("N = {}, M = {}", op.nodes(), op.evals()));
    r.results = results;
    Ok(r)
}
