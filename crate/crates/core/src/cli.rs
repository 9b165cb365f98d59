//! Command-line front end. Each subcommand binds one library operation.
//!
//! Exit codes: 0 success, 1 validation or usage error, 2 solver failure,
//! 3 I/O failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::analytic_ou::{ou_delta_order, OUOracle};
use crate::approx::{approx_residual, assemble, error_report, scaling_study};
use crate::error::Error;
use crate::evolution::{solve_fpe, solve_kappa, Advection, PdeKind, SchemeConfig, Trajectory};
use crate::grid::{Field, Grid1D, Norms};
use crate::hjb::{hjb_residual, to_hj_potential, TAIL_CUTOFF};
use crate::io::{self, PlotKind};
use crate::montecarlo::{mc_vs_pde, simulate, summarize, InitialCondition, MCConfig};
use crate::problem::{PerturbationSpec, PotentialSpec, ProblemSpec};
use crate::stationary::stationary_density;

pub const DEFAULT_GRID_N: usize = 513;
pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_THETA: f64 = 0.5;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_EPSILONS: [f64; 4] = [0.2, 0.1, 0.05, 0.025];
pub const DEFAULT_STRIDE: usize = 100;
pub const DEFAULT_N_PATHS: usize = 10_000;

#[derive(Debug, Parser)]
#[command(name = "fplab", version, about = "One-dimensional Fokker-Planck laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct Common {
    /// Problem specification (JSON). Defaults to the perturbed Ornstein-Uhlenbeck problem.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of grid nodes on the configured domain.
    #[arg(long, default_value_t = DEFAULT_GRID_N)]
    grid_n: usize,
    /// Time step for PDE solves and Euler-Maruyama paths.
    #[arg(long, default_value_t = DEFAULT_DT)]
    dt: f64,
    /// Theta-method weight (0.5 = Crank-Nicolson, 1 = implicit Euler).
    #[arg(long, default_value_t = DEFAULT_THETA)]
    theta: f64,
    /// Interface drift discretisation: exponential, central or upwind.
    #[arg(long, default_value = "exponential")]
    advection: Advection,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for Monte Carlo paths.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Also write a gnuplot script next to --out.
    #[arg(long)]
    gnuplot: bool,
}

#[derive(Debug, Clone, Args)]
struct Window {
    /// Start time (default: start of the configured window).
    #[arg(long)]
    t0: Option<f64>,
    /// End time (default: end of the configured window).
    #[arg(long)]
    t1: Option<f64>,
    /// Keep every n-th time step.
    #[arg(long, default_value_t = DEFAULT_STRIDE)]
    stride: usize,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Normalised stationary density exp(-2V/sigma^2).
    Stationary {
        #[command(flatten)]
        common: Common,
    },
    /// Time-dependent density from p_hat.
    Evolve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        window: Window,
        /// Also write one field file per snapshot into this directory.
        #[arg(long)]
        snapshot_dir: Option<PathBuf>,
    },
    /// First-order correction kappa from zero.
    Kappa {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        window: Window,
        /// Also write one field file per snapshot into this directory.
        #[arg(long)]
        snapshot_dir: Option<PathBuf>,
    },
    /// p_tilde versus the full solution at one time; writes q = p - p_tilde.
    Approx {
        #[command(flatten)]
        common: Common,
        /// Evaluation time (default: end of the configured window).
        #[arg(long)]
        t_eval: Option<f64>,
        /// Snapshot stride of the kappa trajectory used for the residual.
        #[arg(long, default_value_t = DEFAULT_STRIDE)]
        stride: usize,
    },
    /// Errors of the approximation over a list of epsilons, with fitted orders.
    Scaling {
        #[command(flatten)]
        common: Common,
        /// Comma-separated perturbation strengths.
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_EPSILONS)]
        epsilons: Vec<f64>,
        /// Evaluation time (default: end of the configured window).
        #[arg(long)]
        t_eval: Option<f64>,
    },
    /// Euler-Maruyama paths; optional comparison with the PDE.
    Mc {
        #[command(flatten)]
        common: Common,
        /// Number of simulated paths.
        #[arg(long, default_value_t = DEFAULT_N_PATHS)]
        n_paths: usize,
        /// Final time (default: end of the configured window).
        #[arg(long)]
        t1: Option<f64>,
        /// Start every path here instead of sampling p_hat.
        #[arg(long, conflicts_with = "compare")]
        x0: Option<f64>,
        /// Start from p_hat samples and report the L1 distance to the PDE density.
        #[arg(long)]
        compare: bool,
    },
    /// Closed-form Ornstein-Uhlenbeck density; optional order study against p_tilde.
    Oracle {
        #[command(flatten)]
        common: Common,
        /// Time of the emitted density (default: end of the configured window).
        #[arg(long)]
        t: Option<f64>,
        /// Also measure |exact - p_tilde| for these epsilons and print the fitted order.
        #[arg(long, value_delimiter = ',')]
        epsilons: Option<Vec<f64>>,
    },
    /// Hamilton-Jacobi potential and residual.
    Hjb {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        window: Window,
        /// Residual of p_hat repeated in time, with epsilon set to 0.
        #[arg(long)]
        stationary: bool,
    },
    /// Check the problem specification.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Print all defaults as JSON and exit.
        #[arg(long)]
        show_defaults: bool,
    },
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Config { path: PathBuf, reason: String },
    Io { path: Option<PathBuf>, source: std::io::Error },
    Lib(Error),
    /// Already reported on stdout.
    Reported,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } | CliError::Reported => 1,
            CliError::Io { .. } => 3,
            CliError::Lib(e) if e.is_solver_failure() => 2,
            CliError::Lib(_) => 1,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) => m.clone(),
            CliError::Config { path, reason } => format!("{}: {reason}", path.display()),
            CliError::Io {
                path: Some(path),
                source,
            } => format!("{}: {source}", path.display()),
            CliError::Io { path: None, source } => source.to_string(),
            CliError::Lib(e) => e.to_string(),
            CliError::Reported => String::new(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `argv` (including the program name), runs the subcommand and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(CliError::Reported) => 1,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

fn common(cmd: &Command) -> &Common {
    match cmd {
        Command::Stationary { common }
        | Command::Evolve { common, .. }
        | Command::Kappa { common, .. }
        | Command::Approx { common, .. }
        | Command::Scaling { common, .. }
        | Command::Mc { common, .. }
        | Command::Oracle { common, .. }
        | Command::Hjb { common, .. }
        | Command::Validate { common, .. } => common,
    }
}

fn dispatch(cmd: Command) -> CliResult<()> {
    match common(&cmd).workers {
        Some(n) => {
            if n == 0 {
                return Err(CliError::Usage("--workers must be at least 1".into()));
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Usage(e.to_string()))?;
            pool.install(|| execute(cmd))
        }
        None => execute(cmd),
    }
}

struct Context {
    spec: ProblemSpec,
    grid: Grid1D,
    scheme: SchemeConfig,
}

fn load_spec(path: Option<&Path>) -> CliResult<ProblemSpec> {
    let Some(path) = path else {
        return Ok(ProblemSpec::ornstein_uhlenbeck(0.1, 1.0));
    };
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: Some(path.to_path_buf()),
        source,
    })?;
    ProblemSpec::from_json(&text).map_err(|e| CliError::Config {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

fn context(c: &Common) -> CliResult<Context> {
    let spec = load_spec(c.config.as_deref())?;
    let report = spec.validate();
    for w in report.warnings() {
        log::warn!("{}", w.message);
    }
    report.into_result()?;
    let grid = Grid1D::new(spec.domain.0, spec.domain.1, c.grid_n)?;
    let scheme = SchemeConfig::new(c.dt, c.theta, c.advection, 1)?;
    Ok(Context { spec, grid, scheme })
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: Some(dir.to_path_buf()),
            source,
        })?;
    }
    fs::write(path, text).map_err(|source| CliError::Io {
        path: Some(path.to_path_buf()),
        source,
    })
}

fn print(text: &str) -> CliResult<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|source| CliError::Io { path: None, source })
}

/// Writes the main CSV to `--out` (or stdout) and the optional gnuplot script.
fn emit(c: &Common, csv: &str, kind: PlotKind) -> CliResult<()> {
    match &c.out {
        Some(path) => {
            write_text(path, csv)?;
            if c.gnuplot {
                write_text(&path.with_extension("gp"), &io::gnuplot_script(path, kind))?;
            }
            Ok(())
        }
        None if c.gnuplot => Err(CliError::Usage("--gnuplot needs --out".into())),
        None => print(csv),
    }
}

/// JSON report: a `.json` sidecar of `--out`, or stdout.
fn emit_report<T: Serialize>(c: &Common, report: &T) -> CliResult<()> {
    let text = io::json(report);
    match &c.out {
        Some(path) => write_text(&path.with_extension("json"), &text),
        None => print(&text),
    }
}

fn window(ctx: &Context, w: &Window) -> CliResult<(f64, f64, SchemeConfig)> {
    let t0 = w.t0.unwrap_or(ctx.spec.time_window.0);
    let t1 = w.t1.unwrap_or(ctx.spec.time_window.1);
    if w.stride == 0 {
        return Err(CliError::Usage("--stride must be at least 1".into()));
    }
    Ok((t0, t1, ctx.scheme.with_stride(w.stride)))
}

fn execute(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Stationary { common } => {
            let ctx = context(&common)?;
            let p = stationary_density(&ctx.spec, &ctx.grid, true)?.density;
            emit(&common, &io::field_csv(&p), PlotKind::Field)
        }
        Command::Evolve {
            common,
            window: w,
            snapshot_dir,
        } => {
            let ctx = context(&common)?;
            let (t0, t1, scheme) = window(&ctx, &w)?;
            let p0 = stationary_density(&ctx.spec, &ctx.grid, true)?.density.with_time(t0);
            let traj = solve_fpe(&ctx.spec, &ctx.grid, &scheme, &p0, t0, t1)?;
            emit_trajectory(&common, &traj, snapshot_dir.as_deref())
        }
        Command::Kappa {
            common,
            window: w,
            snapshot_dir,
        } => {
            let ctx = context(&common)?;
            let (t0, t1, scheme) = window(&ctx, &w)?;
            let k0 = Field::constant(ctx.grid, 0.0, t0)?;
            let traj = solve_kappa(&ctx.spec, &ctx.grid, &scheme, &k0, t0, t1)?;
            emit_trajectory(&common, &traj, snapshot_dir.as_deref())
        }
        Command::Approx {
            common,
            t_eval,
            stride,
        } => run_approx(&common, t_eval, stride),
        Command::Scaling {
            common,
            epsilons,
            t_eval,
        } => {
            let ctx = context(&common)?;
            let t_eval = t_eval.unwrap_or(ctx.spec.time_window.1);
            let res = scaling_study(&ctx.spec, &ctx.grid, &ctx.scheme, &epsilons, t_eval)?;
            emit(&common, &io::scaling_csv(&res), PlotKind::Scaling)?;
            if common.out.is_some() {
                emit_report(&common, &res)?;
            }
            Ok(())
        }
        Command::Mc {
            common,
            n_paths,
            t1,
            x0,
            compare,
        } => run_mc(&common, n_paths, t1, x0, compare),
        Command::Oracle { common, t, epsilons } => run_oracle(&common, t, epsilons),
        Command::Hjb {
            common,
            window: w,
            stationary,
        } => run_hjb(&common, &w, stationary),
        Command::Validate {
            common,
            show_defaults,
        } => {
            if show_defaults {
                return print(&io::json(&Defaults::new()));
            }
            let spec = load_spec(common.config.as_deref())?;
            let report = spec.validate();
            print(&format!("{report}\n"))?;
            if report.passed() {
                Ok(())
            } else {
                Err(CliError::Reported)
            }
        }
    }
}

fn emit_trajectory(c: &Common, traj: &Trajectory, dir: Option<&Path>) -> CliResult<()> {
    if let Some(dir) = dir {
        io::write_snapshots(dir, traj).map_err(|source| CliError::Io {
            path: Some(dir.to_path_buf()),
            source,
        })?;
    }
    emit(c, &io::trajectory_csv(traj), PlotKind::Trajectory)
}

/// Drops a shortened final interval so that snapshot times are equally spaced.
fn uniform_prefix(traj: Trajectory) -> CliResult<Trajectory> {
    if traj.snapshots().len() < 3 || traj.uniform_spacing().is_ok() {
        return Ok(traj);
    }
    let (kind, advection) = (traj.kind(), traj.advection());
    let mut snaps = traj.into_snapshots();
    snaps.pop();
    Ok(Trajectory::new(snaps, kind, advection)?)
}

#[derive(Serialize)]
struct ApproxReport {
    time: f64,
    epsilon: f64,
    norms_p_ptilde: Norms,
    norms_ptilde_phat: Norms,
    norms_p_phat: Norms,
    approx_residual: Option<f64>,
}

fn run_approx(c: &Common, t_eval: Option<f64>, stride: usize) -> CliResult<()> {
    let ctx = context(c)?;
    if stride == 0 {
        return Err(CliError::Usage("--stride must be at least 1".into()));
    }
    let t0 = ctx.spec.time_window.0;
    let t_eval = t_eval.unwrap_or(ctx.spec.time_window.1);
    let phat = stationary_density(&ctx.spec, &ctx.grid, true)?.density;
    let k0 = Field::constant(ctx.grid, 0.0, t0)?;
    let kappa = solve_kappa(&ctx.spec, &ctx.grid, &ctx.scheme.with_stride(stride), &k0, t0, t_eval)?;
    let p = solve_fpe(
        &ctx.spec,
        &ctx.grid,
        &ctx.scheme.with_stride(usize::MAX),
        &phat.clone().with_time(t0),
        t0,
        t_eval,
    )?;
    let ptilde = assemble(&phat, kappa.last(), ctx.spec.epsilon)?;
    let rep = error_report(p.last(), &ptilde, &phat)?;
    let kappa = uniform_prefix(kappa)?;
    let residual = if kappa.snapshots().len() >= 3 {
        Some(approx_residual(&phat, &kappa, &ctx.spec)?)
    } else {
        None
    };
    emit(c, &io::field_csv(&rep.q_field), PlotKind::Field)?;
    let report = ApproxReport {
        time: rep.time,
        epsilon: ctx.spec.epsilon,
        norms_p_ptilde: rep.norms_p_ptilde,
        norms_ptilde_phat: rep.norms_ptilde_phat,
        norms_p_phat: rep.norms_p_phat,
        approx_residual: residual,
    };
    if c.out.is_some() {
        emit_report(c, &report)?;
    } else {
        eprint!("{}", io::json(&report));
    }
    Ok(())
}

#[derive(Serialize)]
struct McReport {
    n_paths: usize,
    t: f64,
    mean: f64,
    variance: f64,
    out_of_range_fraction: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    l1_vs_pde: Option<f64>,
}

fn run_mc(c: &Common, n_paths: usize, t1: Option<f64>, x0: Option<f64>, compare: bool) -> CliResult<()> {
    let ctx = context(c)?;
    let t0 = ctx.spec.time_window.0;
    let t1 = t1.unwrap_or(ctx.spec.time_window.1);
    let initial = match x0 {
        Some(x) => InitialCondition::Point(x),
        None => InitialCondition::StationarySample,
    };
    let mc = MCConfig::new(n_paths, c.dt, c.seed, initial)?;
    let (samples, l1) = if compare {
        let cmp = mc_vs_pde(&ctx.spec, &mc, &ctx.grid, &ctx.scheme, t1)?;
        (cmp.samples, Some(cmp.l1))
    } else {
        (simulate(&ctx.spec, &mc, t0, t1)?, None)
    };
    let s = summarize(&samples, &ctx.grid)?;
    let report = McReport {
        n_paths: s.n_paths,
        t: s.t,
        mean: s.mean,
        variance: s.variance,
        out_of_range_fraction: s.out_of_range_fraction,
        l1_vs_pde: l1,
    };
    if c.out.is_some() {
        emit(c, &io::samples_csv(&samples), PlotKind::Samples)?;
    }
    emit_report(c, &report)
}

fn require_ou(spec: &ProblemSpec) -> CliResult<()> {
    let ok = spec.potential == PotentialSpec::Quadratic { theta: 1.0, mu: 0.0 }
        && spec.perturbation
            == PerturbationSpec::Cosine {
                amplitude: 1.0,
                omega: 1.0,
            };
    if ok {
        Ok(())
    } else {
        Err(CliError::Lib(Error::param(
            "config",
            "the closed form needs quadratic(theta = 1, mu = 0) with cosine(amplitude = 1, omega = 1)",
        )))
    }
}

fn run_oracle(c: &Common, t: Option<f64>, epsilons: Option<Vec<f64>>) -> CliResult<()> {
    let ctx = context(c)?;
    require_ou(&ctx.spec)?;
    let oracle = OUOracle::new(ctx.spec.epsilon, ctx.spec.sigma)?;
    let t = t.unwrap_or(ctx.spec.time_window.1);
    let density = oracle.density(t, &ctx.grid)?;
    emit(c, &io::field_csv(&density), PlotKind::Field)?;
    if let Some(eps) = epsilons {
        let order = ou_delta_order(&oracle, &ctx.grid, &ctx.scheme, &eps, t)?;
        if c.out.is_some() {
            emit_report(c, &order)?;
        } else {
            eprint!("{}", io::json(&order));
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct HjbReport {
    residual: f64,
    snapshots: usize,
    t0: f64,
    t1: f64,
    tail_cutoff: f64,
}

fn run_hjb(c: &Common, w: &Window, stationary: bool) -> CliResult<()> {
    let mut ctx = context(c)?;
    if stationary {
        ctx.spec.epsilon = 0.0;
    }
    let (t0, t1, scheme) = window(&ctx, w)?;
    let phat = stationary_density(&ctx.spec, &ctx.grid, true)?.density;
    let traj = if stationary {
        let h = scheme.dt * scheme.snapshot_stride as f64;
        let snaps = (0..5).map(|k| phat.clone().with_time(t0 + k as f64 * h)).collect();
        Trajectory::new(snaps, PdeKind::Fpe, scheme.advection)?
    } else {
        let full = solve_fpe(&ctx.spec, &ctx.grid, &scheme, &phat.clone().with_time(t0), t0, t1)?;
        uniform_prefix(full)?
    };
    let residual = hjb_residual(&traj, &ctx.spec)?;
    let s = to_hj_potential(traj.last(), ctx.spec.sigma)?;
    emit(c, &io::field_csv(&s), PlotKind::Field)?;
    let report = HjbReport {
        residual,
        snapshots: traj.snapshots().len(),
        t0: traj.first().time(),
        t1: traj.last().time(),
        tail_cutoff: TAIL_CUTOFF,
    };
    if c.out.is_some() {
        emit_report(c, &report)
    } else {
        eprint!("{}", io::json(&report));
        Ok(())
    }
}

#[derive(Serialize)]
struct Defaults {
    grid_n: usize,
    dt: f64,
    theta: f64,
    advection: Advection,
    seed: u64,
    stride: usize,
    epsilons: Vec<f64>,
    n_paths: usize,
    config: ProblemSpec,
}

impl Defaults {
    fn new() -> Self {
        Defaults {
            grid_n: DEFAULT_GRID_N,
            dt: DEFAULT_DT,
            theta: DEFAULT_THETA,
            advection: Advection::Exponential,
            seed: DEFAULT_SEED,
            stride: DEFAULT_STRIDE,
            epsilons: DEFAULT_EPSILONS.to_vec(),
            n_paths: DEFAULT_N_PATHS,
            config: ProblemSpec::ornstein_uhlenbeck(0.1, 1.0),
        }
    }
}
