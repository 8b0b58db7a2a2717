//! Block Armijo backtracking.

use crate::error::{invalid, Error, Result};
use crate::problem::{ObjectiveProblem, Point};

/// Sufficient-decrease coefficient `beta`, backtracking factor `delta` (optionally one per
/// block) and a cap on the number of reductions.
#[derive(Debug, Clone, PartialEq)]
pub struct LinesearchParams {
    pub beta: f64,
    pub delta: f64,
    pub block_deltas: Option<Vec<f64>>,
    pub max_backtracks: usize,
    /// Relative rounding allowance `eta`: a trial is also accepted when it exceeds the
    /// Armijo bound by at most `eta max(1, |f(z)|)`. Zero gives the exact test.
    pub f_noise: f64,
}

impl Default for LinesearchParams {
    fn default() -> Self {
        Self {
            beta: 1e-4,
            delta: 0.5,
            block_deltas: None,
            max_backtracks: 60,
            f_noise: 0.0,
        }
    }
}

impl LinesearchParams {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| v > 0.0 && v < 1.0;
        if !in_unit(self.beta) {
            return Err(invalid(format!("beta must lie in (0, 1), got {}", self.beta)));
        }
        if !in_unit(self.delta) {
            return Err(invalid(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if let Some(ds) = &self.block_deltas {
            if let Some(d) = ds.iter().find(|d| !in_unit(**d)) {
                return Err(invalid(format!("block delta must lie in (0, 1), got {d}")));
            }
        }
        if !(self.f_noise >= 0.0 && self.f_noise < 1e-6) {
            return Err(invalid(format!("f_noise must lie in [0, 1e-6), got {}", self.f_noise)));
        }
        if self.max_backtracks == 0 {
            return Err(invalid("max_backtracks must be at least 1"));
        }
        Ok(())
    }

    pub fn delta_for(&self, block: usize) -> f64 {
        self.block_deltas
            .as_ref()
            .and_then(|d| d.get(block).copied())
            .unwrap_or(self.delta)
    }
}

/// Result of one backtracking search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmijoStep {
    /// Accepted steplength, exactly `delta^backtracks`.
    pub lambda: f64,
    pub f_new: f64,
    pub f_old: f64,
    pub backtracks: usize,
}

/// Finds `lambda = delta^j` for the smallest `j >= 0` with
/// `f(z_1, ..., z_i + lambda d_i, ..., z_m) <= f(z) + beta lambda grad_i f(z)^T d_i`, up to the
/// rounding allowance `f_noise`.
pub fn armijo_backtrack(
    problem: &ObjectiveProblem,
    z: &Point,
    block: usize,
    direction: &[f64],
    params: &LinesearchParams,
) -> Result<ArmijoStep> {
    let f_old = problem.eval_objective(z)?;
    let g = problem.block_gradient(z, block)?;
    let slope = dot(&g, direction);
    armijo_from(problem, z, block, direction, params, f_old, slope, &mut |_| {})
}

/// As [`armijo_backtrack`], with `f(z)` and the slope `grad_i f(z)^T d_i` supplied.
/// `on_trial` is called once per objective evaluation.
#[allow(clippy::too_many_arguments)]
pub fn armijo_from(
    problem: &ObjectiveProblem,
    z: &Point,
    block: usize,
    direction: &[f64],
    params: &LinesearchParams,
    f_old: f64,
    slope: f64,
    on_trial: &mut dyn FnMut(f64),
) -> Result<ArmijoStep> {
    problem.partition().check_block(block)?;
    if direction.len() != problem.partition().size(block) {
        return Err(invalid(format!(
            "direction has {} entries, block {block} has {}",
            direction.len(),
            problem.partition().size(block)
        )));
    }
    if !(slope < 0.0) {
        return Err(Error::NonDescent { slope });
    }
    let delta = params.delta_for(block);
    let base = z.block(block).to_vec();
    let mut trial = z.clone();
    let mut last = (1.0, f64::NAN);
    let allowance = params.f_noise * f_old.abs().max(1.0);
    for j in 0..params.max_backtracks {
        let lambda = delta.powi(j as i32);
        for ((t, b), d) in trial.block_mut(block).iter_mut().zip(&base).zip(direction) {
            *t = b + lambda * d;
        }
        debug_assert!(
            problem.set(block).contains(trial.block(block), 1e-10).unwrap_or(false),
            "Armijo trial left the feasible set"
        );
        let f_new = problem.objective().value(trial.values());
        on_trial(f_new);
        if f_new <= f_old + params.beta * lambda * slope + allowance {
            return Ok(ArmijoStep {
                lambda,
                f_new,
                f_old,
                backtracks: j,
            });
        }
        last = (lambda, f_new);
    }
    Err(Error::LinesearchFailure {
        backtracks: params.max_backtracks,
        lambda: last.0,
        f_trial: last.1,
        f_old,
    })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
