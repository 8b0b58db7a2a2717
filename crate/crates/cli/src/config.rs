//! Experiment configuration: a sectioned TOML file, overridden by command-line flags.
//!
//! ```toml
//! repeats = 1
//!
//! [problem]
//! name = "box_quadratic"   # box_quadratic | nmf | simplex_quadratic | rosenbrock_box
//! n = 50
//! m = 5
//! kappa = 10.0
//! seed = 42
//!
//! [solver]
//! metric = "euclidean"     # euclidean | scaled | entropy | prox | proxgrad
//! rule = "bb1"             # fixed | bb1 | bb2 | abb
//! sigma = 1.0
//! tol = 1e-8
//! max_outer = 5000
//! inner = [1]
//!
//! [output]
//! trace = "trace.csv"
//! timing = true
//! ```
//!
//! Every key is optional; the defaults are those of [`ExperimentConfig::default`].
//! Unknown keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use cbggp_core::{
    BbKind, BlockConfig, Convexity, DistanceKind, LinesearchParams, MetricFamily, ParameterBounds, ParameterRule,
    SolverConfig, Stopping, TraceLevel,
};
use cbggp_problems::{BuiltProblem, ProblemSpec};
use serde::Deserialize;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// The five metric choices exposed on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricChoice {
    /// Projected gradient.
    Euclidean,
    /// Projected gradient in the metric of the inverse Hessian diagonal.
    Scaled,
    /// Exponentiated gradient (entropy Bregman distance).
    Entropy,
    /// Proximal point with the Euclidean distance.
    Prox,
    /// Proximal gradient with the Euclidean distance.
    Proxgrad,
}

impl MetricChoice {
    pub const ALL: [MetricChoice; 5] = [
        MetricChoice::Euclidean,
        MetricChoice::Scaled,
        MetricChoice::Entropy,
        MetricChoice::Prox,
        MetricChoice::Proxgrad,
    ];

    pub fn family(self) -> MetricFamily {
        match self {
            MetricChoice::Euclidean | MetricChoice::Scaled | MetricChoice::Entropy => MetricFamily::Linearized,
            MetricChoice::Prox => MetricFamily::Proximity,
            MetricChoice::Proxgrad => MetricFamily::ProximalGradient,
        }
    }

    pub fn distance(self) -> DistanceKind {
        match self {
            MetricChoice::Scaled => DistanceKind::Scaled,
            MetricChoice::Entropy => DistanceKind::Entropy,
            _ => DistanceKind::Euclidean,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MetricChoice::Euclidean => "euclidean",
            MetricChoice::Scaled => "scaled",
            MetricChoice::Entropy => "entropy",
            MetricChoice::Prox => "prox",
            MetricChoice::Proxgrad => "proxgrad",
        }
    }
}

impl FromStr for MetricChoice {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        MetricChoice::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| err(format!("unknown metric '{s}' (expected euclidean, scaled, entropy, prox or proxgrad)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleChoice {
    Fixed,
    Bb1,
    Bb2,
    Abb,
}

impl RuleChoice {
    pub const ALL: [RuleChoice; 4] = [RuleChoice::Fixed, RuleChoice::Bb1, RuleChoice::Bb2, RuleChoice::Abb];

    pub fn name(self) -> &'static str {
        match self {
            RuleChoice::Fixed => "fixed",
            RuleChoice::Bb1 => "bb1",
            RuleChoice::Bb2 => "bb2",
            RuleChoice::Abb => "abb",
        }
    }
}

impl FromStr for RuleChoice {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        RuleChoice::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| err(format!("unknown rule '{s}' (expected fixed, bb1, bb2 or abb)")))
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSection {
    pub name: String,
    pub n: usize,
    pub m: usize,
    pub kappa: f64,
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    pub seed: u64,
}

impl Default for ProblemSection {
    fn default() -> Self {
        Self {
            name: "box_quadratic".into(),
            n: 50,
            m: 5,
            kappa: 10.0,
            rows: 20,
            cols: 15,
            rank: 3,
            seed: 42,
        }
    }
}

impl ProblemSection {
    pub fn spec(&self) -> Result<ProblemSpec, ConfigError> {
        Ok(match self.name.as_str() {
            "box_quadratic" => ProblemSpec::BoxQuadratic { n: self.n, m: self.m, kappa: self.kappa, seed: self.seed },
            "nmf" => ProblemSpec::NmfFrobenius { rows: self.rows, cols: self.cols, rank: self.rank, seed: self.seed },
            "simplex_quadratic" => ProblemSpec::SimplexQuadratic { n: self.n, seed: self.seed },
            "rosenbrock_box" => ProblemSpec::RosenbrockBox { n: self.n },
            other => {
                return Err(err(format!(
                    "unknown problem '{other}' (expected box_quadratic, nmf, simplex_quadratic or rosenbrock_box)"
                )))
            }
        })
    }
}

/// A few ulps of `f`.
pub const DEFAULT_F_NOISE: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub metric: MetricChoice,
    pub rule: RuleChoice,
    /// Fixed parameter, and the fallback of the BB rules.
    pub sigma: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// Bound `L_D` on the diagonal scaling.
    pub scaling_bound: f64,
    /// Switch period of the alternating BB rule.
    pub abb_period: usize,
    pub tol: f64,
    pub tol_objective: f64,
    pub max_outer: usize,
    /// Inner caps `L_i`: one value for every block, or one per block.
    pub inner: Vec<usize>,
    /// Leave a block's inner loop once its direction is below `tol / 10`.
    pub early_exit: bool,
    pub beta: f64,
    pub delta: f64,
    pub max_backtracks: usize,
    /// Relative slack in the Armijo test, so steps whose decrease is below the rounding of
    /// `f` are not rejected.
    pub f_noise: f64,
    /// Record inner steps as well as outer iterations.
    pub trace_inner: bool,
}

impl Default for SolverSection {
    fn default() -> Self {
        let bounds = ParameterBounds::default();
        let ls = LinesearchParams::default();
        let stop = Stopping::default();
        Self {
            metric: MetricChoice::Euclidean,
            rule: RuleChoice::Bb1,
            sigma: 1.0,
            sigma_min: bounds.sigma_min,
            sigma_max: bounds.sigma_max,
            scaling_bound: bounds.scaling_bound,
            abb_period: 2,
            tol: stop.tol_stationarity,
            tol_objective: stop.tol_objective,
            max_outer: stop.max_outer,
            inner: vec![1],
            early_exit: true,
            beta: ls.beta,
            delta: ls.delta,
            max_backtracks: ls.max_backtracks,
            f_noise: DEFAULT_F_NOISE,
            trace_inner: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub trace: Option<PathBuf>,
    /// When false, `elapsed_ms` is written as zero so traces are reproducible.
    pub timing: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { trace: None, timing: true }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSection,
    pub solver: SolverSection,
    pub output: OutputSection,
    pub repeats: Option<usize>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| err(format!("invalid config: {}", e.message())))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| err(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| err(format!("{}: {}", path.display(), e.0)))
    }

    pub fn repeats(&self) -> usize {
        self.repeats.unwrap_or(1)
    }
}

/// Largest proximal parameter admissible for the proximity family on a weakly convex problem:
/// the Euclidean distance `||.||^2 / (2 sigma)` must dominate the negative curvature.
fn proximity_sigma_cap(convexity: Convexity) -> f64 {
    match convexity {
        Convexity::Weak { modulus } if modulus > 0.0 => 0.5 / modulus,
        _ => f64::INFINITY,
    }
}

/// Solver configuration for `built` from the solver section.
pub fn solver_config(section: &SolverSection, built: &BuiltProblem) -> Result<SolverConfig, ConfigError> {
    let m = built.problem.num_blocks();
    let caps: Vec<usize> = match section.inner.len() {
        1 => vec![section.inner[0]; m],
        k if k == m => section.inner.clone(),
        k => return Err(err(format!("inner caps: got {k} values for {m} blocks"))),
    };
    let mut sigma_max = section.sigma_max;
    if section.metric == MetricChoice::Prox {
        sigma_max = sigma_max.min(proximity_sigma_cap(built.convexity()));
    }
    let sigma_min = section.sigma_min.min(sigma_max);
    let bounds = ParameterBounds::new(sigma_min, sigma_max, section.scaling_bound).map_err(|e| err(e.to_string()))?;
    let sigma = section.sigma.clamp(sigma_min, sigma_max);
    let rule = match section.rule {
        RuleChoice::Fixed => ParameterRule::Fixed { sigma },
        RuleChoice::Bb1 => ParameterRule::BarzilaiBorwein { kind: BbKind::Bb1, fallback: sigma },
        RuleChoice::Bb2 => ParameterRule::BarzilaiBorwein { kind: BbKind::Bb2, fallback: sigma },
        RuleChoice::Abb => ParameterRule::AlternatingBb { period: section.abb_period.max(1), fallback: sigma },
    };
    let blocks = caps
        .into_iter()
        .map(|cap| BlockConfig::new(section.metric.family(), section.metric.distance(), rule).with_inner(cap))
        .collect();
    let config = SolverConfig {
        blocks,
        bounds,
        linesearch: LinesearchParams {
            beta: section.beta,
            delta: section.delta,
            block_deltas: None,
            max_backtracks: section.max_backtracks,
            f_noise: section.f_noise,
        },
        stopping: Stopping {
            max_outer: section.max_outer,
            tol_stationarity: section.tol,
            tol_objective: section.tol_objective,
            ..Stopping::default()
        },
        early_exit: section.early_exit,
        trace: if section.trace_inner { TraceLevel::Inner } else { TraceLevel::Outer },
        timing: true,
        record_iterates: false,
    };
    config.validate(&built.problem).map_err(|e| err(e.to_string()))?;
    Ok(config)
}
