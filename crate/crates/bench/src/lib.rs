//! Benchmark fixtures shared by the `projections` and `solve` benches.

use cbggp_core::{BlockConfig, DistanceKind, MetricFamily, ParameterRule, SolverConfig};
use cbggp_problems::{build_problem, BuiltProblem, ProblemSpec};

pub fn problem(spec: ProblemSpec) -> BuiltProblem {
    build_problem(&spec).expect("benchmark problem parameters are valid")
}

/// BB1 with one inner step per block, timing off.
pub fn config(problem: &BuiltProblem, family: MetricFamily, distance: DistanceKind, max_outer: usize) -> SolverConfig {
    let rule = ParameterRule::BarzilaiBorwein { kind: cbggp_core::BbKind::Bb1, fallback: 1.0 };
    let mut c = SolverConfig::uniform(problem.problem.num_blocks(), BlockConfig::new(family, distance, rule));
    c.stopping.max_outer = max_outer;
    c.timing = false;
    c
}
