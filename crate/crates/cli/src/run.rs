use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use cbggp_core::{solve, SolveReport, Status};
use cbggp_problems::build_problem;
use clap::{Args, Parser, Subcommand};

use crate::config::{solver_config, ExperimentConfig, MetricChoice, RuleChoice};
use crate::trace::emit_trace;

pub const EXIT_CONVERGED: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_MAX_ITERATIONS: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "cbggp", version, about = "Cyclic block generalized gradient projection experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an experiment and write its trace and a summary table.
    Run(RunArgs),
}

/// Flags override the values read from `--config`, which override the defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML experiment file.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// box_quadratic, nmf, simplex_quadratic or rosenbrock_box.
    #[arg(long, value_name = "NAME")]
    pub problem: Option<String>,
    #[arg(long, value_parser = |s: &str| s.parse::<MetricChoice>())]
    pub metric: Option<MetricChoice>,
    #[arg(long, value_parser = |s: &str| s.parse::<RuleChoice>())]
    pub rule: Option<RuleChoice>,
    #[arg(long, value_name = "F")]
    pub sigma: Option<f64>,
    /// Stationarity tolerance.
    #[arg(long, value_name = "F")]
    pub tol: Option<f64>,
    #[arg(long, value_name = "N")]
    pub max_outer: Option<usize>,
    /// Inner caps, one for all blocks or one per block.
    #[arg(long, value_name = "N[,N...]", value_delimiter = ',')]
    pub inner: Option<Vec<usize>>,
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    #[arg(long, value_name = "PATH")]
    pub trace: Option<PathBuf>,
    /// Write zero elapsed times so traces are byte-for-byte reproducible.
    #[arg(long)]
    pub no_timing: bool,
    /// Record inner steps and partial updates too.
    #[arg(long)]
    pub trace_inner: bool,
    /// Independent solves, run concurrently.
    #[arg(long, value_name = "N")]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub cols: Option<usize>,
    #[arg(long)]
    pub rank: Option<usize>,
}

impl RunArgs {
    /// The effective configuration: defaults, then the file, then the flags.
    pub fn resolve(&self) -> Result<ExperimentConfig, String> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::load(path).map_err(|e| e.0)?,
            None => ExperimentConfig::default(),
        };
        let p = &mut c.problem;
        set(&mut p.name, self.problem.clone());
        set(&mut p.n, self.n);
        set(&mut p.m, self.m);
        set(&mut p.kappa, self.kappa);
        set(&mut p.rows, self.rows);
        set(&mut p.cols, self.cols);
        set(&mut p.rank, self.rank);
        set(&mut p.seed, self.seed);
        let s = &mut c.solver;
        set(&mut s.metric, self.metric);
        set(&mut s.rule, self.rule);
        set(&mut s.sigma, self.sigma);
        set(&mut s.tol, self.tol);
        set(&mut s.max_outer, self.max_outer);
        set(&mut s.inner, self.inner.clone());
        s.trace_inner |= self.trace_inner;
        if self.trace.is_some() {
            c.output.trace = self.trace.clone();
        }
        if self.no_timing {
            c.output.timing = false;
        }
        if self.repeats.is_some() {
            c.repeats = self.repeats;
        }
        if c.repeats() == 0 {
            return Err("repeats must be at least 1".into());
        }
        Ok(c)
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// Trace path of repeat `r` out of `repeats`: `out.csv` for a single run, `out.r0.csv`,
/// `out.r1.csv`, ... otherwise.
pub fn repeat_path(path: &Path, r: usize, repeats: usize) -> PathBuf {
    if repeats == 1 {
        return path.to_path_buf();
    }
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.r{r}.{}", ext.to_string_lossy()),
        None => format!("{stem}.r{r}"),
    };
    path.with_file_name(name)
}

pub struct Outcome {
    pub report: SolveReport,
    pub wall_ms: f64,
}

fn status_name(s: Status) -> &'static str {
    match s {
        Status::Converged => "converged",
        Status::MaxIterations => "max_iterations",
        Status::Error => "error",
    }
}

/// Runs a resolved experiment, writing traces and the summary table to `out`.
pub fn execute(config: &ExperimentConfig, out: &mut dyn Write) -> Result<Vec<Outcome>, (i32, String)> {
    let spec = config.problem.spec().map_err(|e| (EXIT_USAGE, e.0))?;
    let built = build_problem(&spec).map_err(|e| (EXIT_USAGE, e.to_string()))?;
    let mut solver = solver_config(&config.solver, &built).map_err(|e| (EXIT_USAGE, e.0))?;
    solver.timing = config.output.timing;
    let repeats = config.repeats();
    log::info!("{spec}: {} blocks, {} repeat(s)", built.problem.num_blocks(), repeats);

    let results: Vec<_> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..repeats)
            .map(|_| {
                scope.spawn(|| {
                    let t = Instant::now();
                    solve(&built.problem, &solver, &built.start).map(|report| Outcome {
                        report,
                        wall_ms: t.elapsed().as_secs_f64() * 1e3,
                    })
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("solver thread panicked")).collect()
    });
    let outcomes = results
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| (EXIT_USAGE, e.to_string()))?;

    if let Some(path) = &config.output.trace {
        for (r, o) in outcomes.iter().enumerate() {
            let p = repeat_path(path, r, repeats);
            emit_trace(&o.report.trace, &p).map_err(|e| (EXIT_NUMERICAL, format!("cannot write {}: {e}", p.display())))?;
        }
    }

    let io = |e: std::io::Error| (EXIT_NUMERICAL, format!("cannot write summary: {e}"));
    writeln!(
        out,
        "{:<18} {:<9} {:<5} {:>6} {:>24} {:>24} {:>12}  status",
        "problem", "metric", "rule", "iters", "f_final", "residual", "wall_ms"
    )
    .map_err(io)?;
    for o in &outcomes {
        let r = &o.report;
        writeln!(
            out,
            "{:<18} {:<9} {:<5} {:>6} {:>24.16e} {:>24.16e} {:>12.3}  {}",
            spec.name(),
            config.solver.metric.name(),
            config.solver.rule.name(),
            r.outer_iterations,
            r.f_final,
            r.residual_final,
            o.wall_ms,
            status_name(r.status)
        )
        .map_err(io)?;
    }
    Ok(outcomes)
}

/// Exit code of a batch: any error wins, then any run that hit a limit.
pub fn exit_code(outcomes: &[Outcome]) -> i32 {
    let statuses = || outcomes.iter().map(|o| o.report.status);
    if statuses().any(|s| s == Status::Error) {
        EXIT_NUMERICAL
    } else if statuses().any(|s| s == Status::MaxIterations) {
        EXIT_MAX_ITERATIONS
    } else {
        EXIT_CONVERGED
    }
}

/// Parses `args` (program name first), runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_CONVERGED };
            let _ = e.print();
            return code;
        }
    };
    let Command::Run(args) = cli.command;
    let config = match args.resolve() {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_USAGE;
        }
    };
    let stdout = std::io::stdout();
    match execute(&config, &mut stdout.lock()) {
        Ok(outcomes) => {
            for o in &outcomes {
                if let Some(f) = &o.report.failure {
                    eprintln!("error: outer {} block {} inner {}: {}", f.outer, f.block, f.inner, f.error);
                }
            }
            exit_code(&outcomes)
        }
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            code
        }
    }
}
