//! Cyclic block generalized gradient projection for smooth problems over products of
//! simple convex sets.
//!
//! The building blocks are [`ObjectiveProblem`] (objective, block partition and one
//! [`FeasibleSet`] per block), [`MetricSpec`] (the block metric defining a generalized
//! projection), Armijo backtracking along block directions, and [`solve`].

pub mod error;
pub mod linesearch;
pub mod metric;
pub mod problem;
pub mod sets;
pub mod solver;

#[cfg(test)]
mod testing;

pub use error::{Error, Result};
pub use linesearch::{armijo_backtrack, armijo_from, ArmijoStep, LinesearchParams};
pub use metric::{
    entropy_origin, euclidean_residual, generalized_project, metric_eval, metric_grad1, project_all,
    project_with_gradient, stationarity_residual, DistanceKind, DistanceSpec, MetricFamily, MetricSpec,
    ParameterBounds,
};
pub use problem::{
    BlockPartition, Convexity, Objective, ObjectiveProblem, Point, SeparableQuadratic, SmoothSplit,
};
pub use sets::FeasibleSet;
pub use solver::{
    check_convergence, choose_parameters, solve, BbKind, BlockConfig, BlockHistory, Counters, CurvaturePair,
    Failure, ParameterRule, SolveReport, SolverConfig, SolverState, Status, StopReason, Stopping, TraceLevel,
    TraceRecord,
};
