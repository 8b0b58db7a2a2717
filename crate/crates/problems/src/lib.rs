//! Seeded, block-structured test problems with references.
//!
//! | name                | variables         | feasible set       | curvature      |
//! |---------------------|-------------------|--------------------|----------------|
//! | `box_quadratic`     | `n`, `m` blocks   | `[0, 1]^n`         | convex         |
//! | `nmf`               | `W`, `H`          | two orthants       | block convex   |
//! | `simplex_quadratic` | `n`, one block    | unit simplex       | convex         |
//! | `rosenbrock_box`    | `n`, pairs        | `[-2, 2]^n`        | weakly convex  |
//!
//! All data is a pure function of the parameters and the seed (see [`rng`]).

pub mod objectives;
pub mod rng;

use std::fmt;
use std::sync::Arc;

use cbggp_core::{
    BlockPartition, Convexity, FeasibleSet, Objective, ObjectiveProblem, Point, SmoothSplit,
};
use thiserror::Error;

use objectives::{Nmf, Quadratic, Rosenbrock, Zero};
use rng::XorShift64Star;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("invalid problem parameters: {0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] cbggp_core::Error),
}

pub type Result<T> = std::result::Result<T, ProblemError>;

/// Smallest eigenvalue floor of the generated convex quadratics.
pub const EIGENVALUE_FLOOR: f64 = 1e-3;

/// Curvature bound of one Rosenbrock pair on `[-2, 2]^2`: the block Hessian's smallest
/// eigenvalue is at least `-798` there.
pub const ROSENBROCK_MODULUS: f64 = 800.0;

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    BoxQuadratic { n: usize, m: usize, kappa: f64, seed: u64 },
    NmfFrobenius { rows: usize, cols: usize, rank: usize, seed: u64 },
    SimplexQuadratic { n: usize, seed: u64 },
    RosenbrockBox { n: usize },
}

impl ProblemSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemSpec::BoxQuadratic { .. } => "box_quadratic",
            ProblemSpec::NmfFrobenius { .. } => "nmf",
            ProblemSpec::SimplexQuadratic { .. } => "simplex_quadratic",
            ProblemSpec::RosenbrockBox { .. } => "rosenbrock_box",
        }
    }

    /// Whether every feasible set is bounded.
    pub fn is_bounded(&self) -> bool {
        !matches!(self, ProblemSpec::NmfFrobenius { .. })
    }
}

impl fmt::Display for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemSpec::BoxQuadratic { n, m, kappa, seed } => {
                write!(f, "box_quadratic(n={n}, m={m}, kappa={kappa}, seed={seed})")
            }
            ProblemSpec::NmfFrobenius { rows, cols, rank, seed } => {
                write!(f, "nmf(rows={rows}, cols={cols}, rank={rank}, seed={seed})")
            }
            ProblemSpec::SimplexQuadratic { n, seed } => write!(f, "simplex_quadratic(n={n}, seed={seed})"),
            ProblemSpec::RosenbrockBox { n } => write!(f, "rosenbrock_box(n={n})"),
        }
    }
}

/// A known solution: a global minimizer for convex instances, the generating factors for NMF.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub x: Vec<f64>,
    pub f: f64,
}

pub struct BuiltProblem {
    pub spec: ProblemSpec,
    pub problem: ObjectiveProblem,
    pub reference: Option<Reference>,
    /// Default starting point: feasible and strictly inside every set.
    pub start: Point,
}

impl BuiltProblem {
    pub fn convexity(&self) -> Convexity {
        self.problem.convexity()
    }

    pub fn split(&self) -> Option<&SmoothSplit> {
        self.problem.split()
    }
}

impl fmt::Debug for BuiltProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BuiltProblem")
            .field("spec", &self.spec)
            .field("problem", &self.problem)
            .field("reference", &self.reference)
            .finish()
    }
}

fn invalid(msg: impl Into<String>) -> ProblemError {
    ProblemError::Invalid(msg.into())
}

pub fn build_problem(spec: &ProblemSpec) -> Result<BuiltProblem> {
    match *spec {
        ProblemSpec::BoxQuadratic { n, m, kappa, seed } => box_quadratic(n, m, kappa, seed),
        ProblemSpec::NmfFrobenius { rows, cols, rank, seed } => nmf(rows, cols, rank, seed),
        ProblemSpec::SimplexQuadratic { n, seed } => simplex_quadratic(n, seed),
        ProblemSpec::RosenbrockBox { n } => rosenbrock_box(n),
    }
}

/// `A = D + rho U U^T` with `D = diag(1, ..., kappa)` spread evenly, `U` two random columns
/// scaled by `1/sqrt(n)` and `rho = (kappa - 1) / 4`. `b = A t` for a random target `t` in
/// `[-0.25, 1.25]^n`, so some bounds are active at the solution.
fn box_quadratic(n: usize, m: usize, kappa: f64, seed: u64) -> Result<BuiltProblem> {
    if n == 0 || m == 0 || m > n {
        return Err(invalid(format!("need 1 <= m <= n, got n={n}, m={m}")));
    }
    if !(kappa >= 1.0) || !kappa.is_finite() {
        return Err(invalid(format!("condition number must be at least 1, got {kappa}")));
    }
    let mut rng = XorShift64Star::new(seed);
    let rho = (kappa - 1.0) / 4.0;
    let scale = 1.0 / (n as f64).sqrt();
    let u: Vec<[f64; 2]> = (0..n)
        .map(|_| [rng.range(-1.0, 1.0) * scale, rng.range(-1.0, 1.0) * scale])
        .collect();
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = rho * (u[i][0] * u[j][0] + u[i][1] * u[j][1]);
        }
        let t = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
        a[i * n + i] += 1.0 + (kappa - 1.0) * t;
    }
    let target: Vec<f64> = (0..n).map(|_| rng.range(-0.25, 1.25)).collect();
    let b = (0..n)
        .map(|i| (0..n).map(|j| a[i * n + j] * target[j]).sum())
        .collect();
    box_quadratic_from(Quadratic { a, b }, m, spec_box(n, m, kappa, seed))
}

fn spec_box(n: usize, m: usize, kappa: f64, seed: u64) -> ProblemSpec {
    ProblemSpec::BoxQuadratic { n, m, kappa, seed }
}

/// Box-constrained quadratic on `[0, 1]^n` from explicit data.
pub fn box_quadratic_from(q: Quadratic, m: usize, spec: ProblemSpec) -> Result<BuiltProblem> {
    let n = q.b.len();
    if q.a.len() != n * n {
        return Err(invalid("matrix and vector sizes differ"));
    }
    let partition = Arc::new(BlockPartition::uniform(n, m)?);
    let sets = partition
        .sizes()
        .iter()
        .map(|s| FeasibleSet::cube(*s, 0.0, 1.0))
        .collect::<cbggp_core::Result<Vec<_>>>()?;
    let start = vec![0.5; n];
    convex_quadratic(q, partition, sets, start, spec)
}

fn convex_quadratic(
    q: Quadratic,
    partition: Arc<BlockPartition>,
    sets: Vec<FeasibleSet>,
    start: Vec<f64>,
    spec: ProblemSpec,
) -> Result<BuiltProblem> {
    let lipschitz = q.lipschitz_bound();
    let (diag, rest) = q.diagonal_split();
    let problem = ObjectiveProblem::new(Arc::new(q), partition.clone(), sets)?
        .with_convexity(Convexity::Convex)
        .with_split(SmoothSplit { convex: Arc::new(diag), smooth: Arc::new(rest) })?;
    let start = Point::new(start, partition)?;
    let (x, f) = cbggp_oracle::reference_solve(&problem, &start, lipschitz, 1e-12, 2_000_000)?;
    Ok(BuiltProblem {
        spec,
        problem,
        reference: Some(Reference { x, f }),
        start,
    })
}

/// `A = G^T G / n + 0.1 I` with `G` uniform in `[-1, 1]`, `b` uniform in `[0, 1]`.
fn simplex_quadratic(n: usize, seed: u64) -> Result<BuiltProblem> {
    if n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    let mut rng = XorShift64Star::new(seed);
    let g: Vec<f64> = (0..n * n).map(|_| rng.range(-1.0, 1.0)).collect();
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = (0..n).map(|k| g[k * n + i] * g[k * n + j]).sum::<f64>() / n as f64;
        }
        a[i * n + i] += 0.1;
    }
    let b = (0..n).map(|_| rng.uniform()).collect();
    let partition = Arc::new(BlockPartition::single(n)?);
    let sets = vec![FeasibleSet::simplex(n, 1.0)?];
    convex_quadratic(Quadratic { a, b }, partition, sets, vec![1.0 / n as f64; n], ProblemSpec::SimplexQuadratic { n, seed })
}

/// `V = W0 H0` with factors uniform in `[0, 1]`; the start is uniform in `[0.01, 0.11]`.
fn nmf(rows: usize, cols: usize, rank: usize, seed: u64) -> Result<BuiltProblem> {
    if rows == 0 || cols == 0 || rank == 0 || rank > rows.min(cols) {
        return Err(invalid(format!("need 1 <= rank <= min(rows, cols), got {rows}x{cols} rank {rank}")));
    }
    let mut rng = XorShift64Star::new(seed);
    let w0: Vec<f64> = (0..rows * rank).map(|_| rng.uniform()).collect();
    let h0: Vec<f64> = (0..rank * cols).map(|_| rng.uniform()).collect();
    let mut v = vec![0.0; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            v[i * cols + j] = (0..rank).map(|l| w0[i * rank + l] * h0[l * cols + j]).sum();
        }
    }
    let obj = Nmf { v, rows, cols, rank };
    let n = obj.dim();
    let partition = Arc::new(BlockPartition::new(vec![rows * rank, rank * cols])?);
    let sets = vec![FeasibleSet::orthant(rows * rank)?, FeasibleSet::orthant(rank * cols)?];
    let reference_x: Vec<f64> = w0.into_iter().chain(h0).collect();
    let start: Vec<f64> = (0..n).map(|_| rng.range(0.01, 0.11)).collect();
    let obj = Arc::new(obj);
    let problem = ObjectiveProblem::new(obj.clone(), partition.clone(), sets)?
        .with_convexity(Convexity::BlockConvex)
        .with_split(SmoothSplit { convex: obj, smooth: Arc::new(Zero(n)) })?;
    Ok(BuiltProblem {
        spec: ProblemSpec::NmfFrobenius { rows, cols, rank, seed },
        problem,
        // Exact factorization; evaluating it only reproduces rounding in the product.
        reference: Some(Reference { x: reference_x, f: 0.0 }),
        start: Point::new(start, partition)?,
    })
}

/// Chained pairs on `[-2, 2]^n`, started from `(-1.2, 1)` in every pair.
fn rosenbrock_box(n: usize) -> Result<BuiltProblem> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(invalid(format!("n must be positive and even, got {n}")));
    }
    let partition = Arc::new(BlockPartition::uniform(n, n / 2)?);
    let sets = (0..n / 2)
        .map(|_| FeasibleSet::cube(2, -2.0, 2.0))
        .collect::<cbggp_core::Result<Vec<_>>>()?;
    let split = SmoothSplit {
        convex: Arc::new(Rosenbrock { n, valley: 0.0, offset: 1.0 }),
        smooth: Arc::new(Rosenbrock { n, valley: 100.0, offset: 0.0 }),
    };
    let problem = ObjectiveProblem::new(Arc::new(Rosenbrock::full(n)), partition.clone(), sets)?
        .with_convexity(Convexity::Weak { modulus: ROSENBROCK_MODULUS })
        .with_split(split)?;
    let start = (0..n).map(|j| if j % 2 == 0 { -1.2 } else { 1.0 }).collect();
    Ok(BuiltProblem {
        spec: ProblemSpec::RosenbrockBox { n },
        problem,
        reference: Some(Reference { x: vec![1.0; n], f: 0.0 }),
        start: Point::new(start, partition)?,
    })
}
