//! Cyclic block generalized gradient projection.
//!
//! Each outer iteration `k` sweeps the blocks in order. Block `i` runs up to `L_i` inner
//! iterations on the current partial update: choose `s_i`, form
//! `d_i = p_i(x~; h^i_{s_i}) - x_i`, backtrack along `d_i` with Armijo, and move block `i`.
//! The objective never increases along the partial updates `z(k, 0), ..., z(k, m)`.

mod params;
mod trace;

pub use params::{choose_parameters, BbKind, BlockHistory, CurvaturePair, ParameterRule};
pub use trace::{Counters, TraceLevel, TraceRecord};

use std::time::Instant;

use crate::error::{invalid, Error, Result};
use crate::linesearch::{armijo_from, LinesearchParams};
use crate::metric::{
    entropy_origin, euclidean_residual, project_with_gradient, DistanceKind, DistanceSpec,
    MetricFamily, MetricSpec, ParameterBounds,
};
use crate::problem::{ObjectiveProblem, Point};
use crate::sets::FeasibleSet;

/// Metric, parameter rule and inner cap `L_i` of one block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockConfig {
    pub family: MetricFamily,
    pub distance: DistanceKind,
    pub rule: ParameterRule,
    pub max_inner: usize,
}

impl BlockConfig {
    pub fn new(family: MetricFamily, distance: DistanceKind, rule: ParameterRule) -> Self {
        Self {
            family,
            distance,
            rule,
            max_inner: 1,
        }
    }

    pub fn with_inner(mut self, max_inner: usize) -> Self {
        self.max_inner = max_inner;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stopping {
    pub max_outer: usize,
    /// Stop once the Euclidean stationarity residual is at most this.
    pub tol_stationarity: f64,
    /// Give up once `|f_k+1 - f_k| <= tol_objective * max(1, |f_k+1|)` and the residual has
    /// not decreased, for `stall_window` consecutive outer iterations.
    pub tol_objective: f64,
    pub stall_window: usize,
}

impl Default for Stopping {
    fn default() -> Self {
        Self {
            max_outer: 5000,
            tol_stationarity: 1e-8,
            tol_objective: 1e-12,
            stall_window: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub blocks: Vec<BlockConfig>,
    pub bounds: ParameterBounds,
    pub linesearch: LinesearchParams,
    pub stopping: Stopping,
    /// Allow leaving the inner loop once `||d_i||_inf <= tol_stationarity / 10` (never on
    /// the first inner iteration).
    pub early_exit: bool,
    pub trace: TraceLevel,
    /// Record wall-clock time in the trace; when off, `elapsed_ms` is zero.
    pub timing: bool,
    /// Keep every outer iterate `x^(k)` in the report.
    pub record_iterates: bool,
}

impl SolverConfig {
    /// Same block configuration for each of `m` blocks, defaults elsewhere.
    pub fn uniform(m: usize, block: BlockConfig) -> Self {
        Self {
            blocks: vec![block; m],
            bounds: ParameterBounds::default(),
            linesearch: LinesearchParams::default(),
            stopping: Stopping::default(),
            early_exit: true,
            trace: TraceLevel::Outer,
            timing: true,
            record_iterates: false,
        }
    }

    pub fn validate(&self, problem: &ObjectiveProblem) -> Result<()> {
        if self.blocks.len() != problem.num_blocks() {
            return Err(invalid(format!(
                "{} block configurations for {} blocks",
                self.blocks.len(),
                problem.num_blocks()
            )));
        }
        self.bounds.validate()?;
        self.linesearch.validate()?;
        let s = &self.stopping;
        if s.max_outer == 0 || !(s.tol_stationarity > 0.0) || !(s.tol_objective >= 0.0) || s.stall_window == 0 {
            return Err(invalid(format!("invalid stopping rule {s:?}")));
        }
        for (i, b) in self.blocks.iter().enumerate() {
            if b.max_inner == 0 {
                return Err(invalid(format!("block {i}: inner cap must be at least 1")));
            }
            let fallback = b.rule.fallback();
            if !(fallback > 0.0) || !fallback.is_finite() {
                return Err(invalid(format!("block {i}: parameter {fallback} is not positive")));
            }
            if let ParameterRule::Fixed { sigma } = b.rule {
                if sigma < self.bounds.sigma_min || sigma > self.bounds.sigma_max {
                    return Err(invalid(format!(
                        "block {i}: fixed parameter {sigma} outside [{}, {}]",
                        self.bounds.sigma_min, self.bounds.sigma_max
                    )));
                }
            }
            // Worst case over S_i: largest sigma and scaling give the weakest proximal term.
            let worst = self.distance(b.distance, self.bounds.sigma_max, vec![self.bounds.scaling_bound; problem.partition().size(i)]);
            MetricSpec::new(b.family, worst)
                .validate(problem, i)
                .map_err(|e| match e {
                    Error::InvalidArgument(m) => invalid(format!("block {i}: {m}")),
                    other => other,
                })?;
        }
        Ok(())
    }

    fn distance(&self, kind: DistanceKind, sigma: f64, diag: Vec<f64>) -> DistanceSpec {
        match kind {
            DistanceKind::Euclidean => DistanceSpec::Euclidean { sigma },
            DistanceKind::Scaled => DistanceSpec::Scaled { alpha: sigma, diag },
            DistanceKind::Entropy => DistanceSpec::BregmanEntropy { sigma },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIterations,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// `x0` already satisfied the stationarity tolerance.
    InitialPointStationary,
    Stationary,
    ObjectiveStalled,
    IterationLimit,
    Failed,
}

/// Evolving state of a run.
#[derive(Debug, Clone)]
pub struct SolverState {
    /// Completed outer iterations.
    pub k: usize,
    /// Current point: `x^(k)` between outer iterations, `z(k, i)` inside a sweep.
    pub x: Point,
    pub f: f64,
    /// `f(z(k, 0)), ..., f(z(k, i))` for the sweep in progress or just completed.
    pub partial_f: Vec<f64>,
    pub residual: f64,
    pub residual_previous: f64,
    pub f_previous_outer: f64,
    pub stall_count: usize,
    pub history: Vec<BlockHistory>,
    pub counters: Counters,
}

/// Snapshot taken when a run aborts.
#[derive(Debug, Clone)]
pub struct Failure {
    pub error: Error,
    pub outer: usize,
    pub block: usize,
    pub inner: usize,
    pub state: SolverState,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub x_final: Point,
    pub f_initial: f64,
    pub f_final: f64,
    pub residual_final: f64,
    pub status: Status,
    pub reason: StopReason,
    pub outer_iterations: usize,
    pub counters: Counters,
    pub trace: Vec<TraceRecord>,
    /// `x^(0), x^(1), ...` when `record_iterates` is set.
    pub iterates: Vec<Vec<f64>>,
    pub failure: Option<Failure>,
}

/// Decides whether to stop after `state.k` completed outer iterations.
pub fn check_convergence(state: &SolverState, config: &SolverConfig) -> Option<(Status, StopReason)> {
    let s = &config.stopping;
    if state.residual <= s.tol_stationarity {
        let reason = if state.k == 0 {
            StopReason::InitialPointStationary
        } else {
            StopReason::Stationary
        };
        return Some((Status::Converged, reason));
    }
    if state.stall_count >= s.stall_window {
        // Converged always means the residual test passed.
        return Some((Status::MaxIterations, StopReason::ObjectiveStalled));
    }
    if state.k >= s.max_outer {
        return Some((Status::MaxIterations, StopReason::IterationLimit));
    }
    None
}

struct Run<'a> {
    problem: &'a ObjectiveProblem,
    config: &'a SolverConfig,
    start: Instant,
    trace: Vec<TraceRecord>,
}

impl Run<'_> {
    fn elapsed_ms(&self) -> f64 {
        if self.config.timing {
            self.start.elapsed().as_secs_f64() * 1e3
        } else {
            0.0
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn record(&mut self, state: &SolverState, block: i64, inner: i64, residual: f64, lambda: f64, sigma: f64) {
        let elapsed_ms = self.elapsed_ms();
        self.trace.push(TraceRecord {
            k: state.k,
            block,
            inner,
            f: state.f,
            residual,
            lambda,
            sigma,
            elapsed_ms,
            counters: state.counters,
        });
    }

    fn residual(&self, state: &mut SolverState) -> Result<f64> {
        state.counters.gradient_evals += 1;
        state.counters.projections += self.problem.num_blocks() as u64;
        euclidean_residual(self.problem, &state.x)
    }

    /// Builds the metric of block `i` at the current point for parameter `sigma`.
    fn metric(&self, i: usize, sigma: f64, x: &Point) -> MetricSpec {
        let b = &self.config.blocks[i];
        let diag = match b.distance {
            DistanceKind::Scaled => self.scaling(i, x),
            _ => Vec::new(),
        };
        MetricSpec::new(b.family, self.config.distance(b.distance, sigma, diag))
    }

    /// `d_j = 1 / H_jj` clamped into `[1/L_D, L_D]`, or ones without Hessian information.
    fn scaling(&self, i: usize, x: &Point) -> Vec<f64> {
        let n = self.problem.dim();
        let mut h = vec![0.0; n];
        let bounds = &self.config.bounds;
        if !self.problem.objective().hessian_diagonal(x.values(), &mut h) {
            return vec![1.0; self.problem.partition().size(i)];
        }
        h[self.problem.partition().range(i)]
            .iter()
            .map(|hj| if *hj > 0.0 { bounds.clamp_scaling(1.0 / hj) } else { bounds.scaling_bound })
            .collect()
    }
}

/// `grad_i f^T d_i`. On a simplex `sum(d) = 0`, so the mean gradient is removed first to
/// avoid cancellation when the gradient is large and nearly constant.
fn block_slope(problem: &ObjectiveProblem, i: usize, g: &[f64], d: &[f64]) -> f64 {
    let mean = centring(problem, i, g);
    g.iter().zip(d).map(|(a, b)| (a - mean) * b).sum()
}

fn centring(problem: &ObjectiveProblem, i: usize, g: &[f64]) -> f64 {
    match problem.set(i) {
        FeasibleSet::Simplex { .. } => g.iter().sum::<f64>() / g.len() as f64,
        _ => 0.0,
    }
}

/// Rounding bound on the slope: each `d_j = p_j - x_j` carries an error of order
/// `eps (|p_j| + |x_j|)`.
fn slope_noise(problem: &ObjectiveProblem, i: usize, g: &[f64], x: &[f64], p: &[f64]) -> f64 {
    let mean = centring(problem, i, g);
    let s: f64 = g.iter().zip(x.iter().zip(p)).map(|(a, (u, v))| (a - mean).abs() * (u.abs() + v.abs())).sum();
    16.0 * f64::EPSILON * s * g.len() as f64
}

/// Runs `inner` iterations on block `i` of the current sweep.
fn inner_block_update(run: &mut Run<'_>, state: &mut SolverState, i: usize) -> std::result::Result<(), (Error, usize)> {
    let problem = run.problem;
    let config = run.config;
    let block = &config.blocks[i];
    let range = problem.partition().range(i);
    let origin = match block.distance {
        DistanceKind::Entropy => Some(entropy_origin(problem.set(i)).map_err(|e| (e, 0))?),
        _ => None,
    };
    let mut grad = vec![0.0; problem.dim()];
    for l in 0..block.max_inner {
        problem.objective().gradient(state.x.values(), &mut grad);
        state.counters.gradient_evals += 1;
        let g = &grad[range.clone()];
        let xi = state.x.block(i).to_vec();

        let pair = state.history[i].pair(&xi, g);
        let sigma = choose_parameters(&block.rule, pair.as_ref(), state.history[i].iterations, &config.bounds);
        state.history[i].remember(&xi, g);

        let spec = run.metric(i, sigma, &state.x);
        let p = project_with_gradient(&spec, problem, &state.x, i, g).map_err(|e| (e, l))?;
        state.counters.projections += 1;

        let d: Vec<f64> = p.iter().zip(&xi).map(|(a, b)| a - b).collect();
        let dnorm = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let slope = block_slope(problem, i, g, &d);
        if dnorm == 0.0 {
            state.history[i].reset();
            break;
        }
        if !(slope < 0.0) {
            // A slope within rounding of zero means the direction has numerically vanished;
            // anything larger is a broken metric.
            if slope <= slope_noise(problem, i, g, &xi, &p) {
                state.history[i].reset();
                break;
            }
            return Err((Error::NonDescent { slope }, l));
        }
        if config.early_exit && l > 0 && dnorm <= config.stopping.tol_stationarity / 10.0 {
            break;
        }

        let mut evals = 0u64;
        let step = armijo_from(problem, &state.x, i, &d, &config.linesearch, state.f, slope, &mut |_| evals += 1);
        state.counters.objective_evals += evals;
        let step = step.map_err(|e| (e, l))?;
        state.counters.backtracks += step.backtracks as u64;

        for ((x, b), dj) in state.x.block_mut(i).iter_mut().zip(&xi).zip(&d) {
            *x = b + step.lambda * dj;
        }
        if let Some(origin) = &origin {
            // An exact step can round onto the boundary of the entropy's domain.
            for (x, o) in state.x.block_mut(i).iter_mut().zip(origin) {
                if *x <= *o {
                    *x = o.next_up();
                }
            }
            state.f = problem.objective().value(state.x.values());
            state.counters.objective_evals += 1;
        } else {
            state.f = step.f_new;
        }
        if config.trace == TraceLevel::Inner {
            run.record(state, i as i64, l as i64, f64::NAN, step.lambda, sigma);
        }
    }
    Ok(())
}

/// Minimizes `problem` from `x0` with the cyclic block scheme.
///
/// Invalid configurations and infeasible starting points are rejected up front. Numerical
/// failures during the run (linesearch, inner solver, domain) end the run with
/// [`Status::Error`] and a [`Failure`] snapshot.
pub fn solve(problem: &ObjectiveProblem, config: &SolverConfig, x0: &Point) -> Result<SolveReport> {
    config.validate(problem)?;
    problem.partition().check_len(x0.dim())?;
    if !problem.is_feasible(x0, 1e-10)? {
        return Err(invalid("starting point is not feasible"));
    }
    for (i, b) in config.blocks.iter().enumerate() {
        if b.distance == DistanceKind::Entropy {
            let origin = entropy_origin(problem.set(i))?;
            if x0.block(i).iter().zip(&origin).any(|(v, o)| !(v > o)) {
                return Err(invalid(format!(
                    "block {i}: the entropy metric needs a starting point strictly inside the domain"
                )));
            }
        }
    }
    let x0 = problem.point(x0.values().to_vec())?;

    let mut run = Run {
        problem,
        config,
        start: Instant::now(),
        trace: Vec::new(),
    };
    let f0 = problem.objective().value(x0.values());
    let mut state = SolverState {
        k: 0,
        x: x0,
        f: f0,
        partial_f: vec![f0],
        residual: f64::NAN,
        residual_previous: f64::NAN,
        f_previous_outer: f0,
        stall_count: 0,
        history: vec![BlockHistory::default(); problem.num_blocks()],
        counters: Counters {
            objective_evals: 1,
            ..Counters::default()
        },
    };
    let mut iterates = Vec::new();
    if config.record_iterates {
        iterates.push(state.x.values().to_vec());
    }
    state.residual = run.residual(&mut state)?;

    let finish = |run: Run<'_>, state: SolverState, status, reason, iterates, failure| SolveReport {
        x_final: state.x,
        f_initial: f0,
        f_final: state.f,
        residual_final: state.residual,
        status,
        reason,
        outer_iterations: state.k,
        counters: state.counters,
        trace: run.trace,
        iterates,
        failure,
    };

    if let Some((status, reason)) = check_convergence(&state, config) {
        return Ok(finish(run, state, status, reason, iterates, None));
    }

    loop {
        state.partial_f.clear();
        state.partial_f.push(state.f);
        state.f_previous_outer = state.f;
        for i in 0..problem.num_blocks() {
            if let Err((error, inner)) = inner_block_update(&mut run, &mut state, i) {
                let failure = Failure {
                    error,
                    outer: state.k,
                    block: i,
                    inner,
                    state: state.clone(),
                };
                return Ok(finish(run, state, Status::Error, StopReason::Failed, iterates, Some(failure)));
            }
            state.partial_f.push(state.f);
            if config.trace == TraceLevel::Inner {
                run.record(&state, i as i64, -1, f64::NAN, f64::NAN, f64::NAN);
            }
        }
        state.residual_previous = state.residual;
        state.residual = match run.residual(&mut state) {
            Ok(r) => r,
            Err(error) => {
                let failure = Failure {
                    error,
                    outer: state.k,
                    block: problem.num_blocks() - 1,
                    inner: 0,
                    state: state.clone(),
                };
                return Ok(finish(run, state, Status::Error, StopReason::Failed, iterates, Some(failure)));
            }
        };
        let change = (state.f - state.f_previous_outer).abs();
        if change <= config.stopping.tol_objective * state.f.abs().max(1.0)
            && !(state.residual < state.residual_previous)
        {
            state.stall_count += 1;
        } else {
            state.stall_count = 0;
        }
        let residual = state.residual;
        run.record(&state, -1, -1, residual, f64::NAN, f64::NAN);
        state.k += 1;
        if config.record_iterates {
            iterates.push(state.x.values().to_vec());
        }
        log::trace!("outer {}: f = {:e}, residual = {:e}", state.k, state.f, state.residual);
        if let Some((status, reason)) = check_convergence(&state, config) {
            return Ok(finish(run, state, status, reason, iterates, None));
        }
    }
}
