//! Block metric functions `h^i_s(x_i, y)` and the generalized gradient projection
//! `p_i(y) = argmin_{z in Omega_i} h^i_s(z, y)`.
//!
//! Three families are provided, each paired with any [`DistanceSpec`]:
//!
//! * [`MetricFamily::Linearized`]: `grad_i f(y)^T (x - y_i) + d(x, y_i)`. With the Euclidean
//!   distance this is the classic projected-gradient step `P(y_i - sigma grad_i f(y))`.
//! * [`MetricFamily::Proximity`]: `f(x, y_{-i}) + d(x, y_i)`, the resolvent of `f` on the block.
//!   Needs `f` convex in the block, or weakly convex with a distance that dominates the
//!   negative curvature.
//! * [`MetricFamily::ProximalGradient`]: `f0(x, y_{-i}) + d(x, y_i) + grad_i f1(y)^T (x - y_i)`
//!   for a registered split `f = f0 + f1`.
//!
//! All families satisfy `grad_1 h(y_i, y) = grad_i f(y)`, so `p_i(y) = y_i` exactly at
//! stationary points and `p_i(y) - y_i` is a descent direction elsewhere.

mod distance;
mod inner;

pub use distance::{entropy_origin, DistanceKind, DistanceSpec};

use crate::error::{invalid, Error, Result};
use crate::problem::{Objective, ObjectiveProblem, Point};
use crate::sets::FeasibleSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricFamily {
    Linearized,
    Proximity,
    ProximalGradient,
}

/// A block metric: family plus parameterized distance.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpec {
    pub family: MetricFamily,
    pub distance: DistanceSpec,
}

impl MetricSpec {
    pub fn new(family: MetricFamily, distance: DistanceSpec) -> Self {
        Self { family, distance }
    }

    pub fn linearized(distance: DistanceSpec) -> Self {
        Self::new(MetricFamily::Linearized, distance)
    }

    /// Linearized family with the Euclidean distance: the classic projected-gradient map.
    pub fn euclidean(sigma: f64) -> Self {
        Self::linearized(DistanceSpec::Euclidean { sigma })
    }

    /// Checks that this metric is a valid metric function for `block` of `problem`.
    pub fn validate(&self, problem: &ObjectiveProblem, block: usize) -> Result<()> {
        problem.partition().check_block(block)?;
        let set = problem.set(block);
        self.distance.validate(set)?;
        match self.family {
            MetricFamily::Linearized => {}
            MetricFamily::Proximity => {
                let rho = problem.convexity().block_modulus().ok_or_else(|| {
                    invalid("the proximity family needs a problem with known convexity")
                })?;
                if rho > 0.0 && self.distance.modulus_on(set) <= rho {
                    return Err(invalid(format!(
                        "proximity term (modulus {:e}) does not dominate the negative curvature {rho:e}",
                        self.distance.modulus_on(set)
                    )));
                }
            }
            MetricFamily::ProximalGradient => {
                if problem.split().is_none() {
                    return Err(invalid(
                        "the proximal-gradient family needs a registered split f = f0 + f1",
                    ));
                }
            }
        }
        Ok(())
    }

    fn convex_part<'a>(&self, problem: &'a ObjectiveProblem) -> &'a dyn Objective {
        match self.family {
            MetricFamily::ProximalGradient => problem.split().unwrap().convex.as_ref(),
            _ => problem.objective().as_ref(),
        }
    }
}

/// Compact parameter set `S_i`: steplength-like parameters in `[sigma_min, sigma_max]`
/// and diagonal scalings with entries in `[1 / scaling_bound, scaling_bound]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParameterBounds {
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub scaling_bound: f64,
}

impl Default for ParameterBounds {
    fn default() -> Self {
        Self {
            sigma_min: 1e-5,
            sigma_max: 1e5,
            scaling_bound: 1e4,
        }
    }
}

impl ParameterBounds {
    pub fn new(sigma_min: f64, sigma_max: f64, scaling_bound: f64) -> Result<Self> {
        let b = Self {
            sigma_min,
            sigma_max,
            scaling_bound,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_min > 0.0) || !(self.sigma_min <= self.sigma_max) || !self.sigma_max.is_finite() {
            return Err(invalid(format!(
                "need 0 < sigma_min <= sigma_max < inf, got [{}, {}]",
                self.sigma_min, self.sigma_max
            )));
        }
        if !(self.scaling_bound >= 1.0) || !self.scaling_bound.is_finite() {
            return Err(invalid(format!(
                "scaling bound must be >= 1, got {}",
                self.scaling_bound
            )));
        }
        Ok(())
    }

    pub fn clamp_sigma(&self, sigma: f64) -> f64 {
        sigma.clamp(self.sigma_min, self.sigma_max)
    }

    pub fn clamp_scaling(&self, d: f64) -> f64 {
        d.clamp(1.0 / self.scaling_bound, self.scaling_bound)
    }

    /// True when all parameters of `distance` lie in `S_i`.
    pub fn admits(&self, distance: &DistanceSpec) -> bool {
        let s = distance.scale();
        let in_sigma = s >= self.sigma_min && s <= self.sigma_max;
        match distance {
            DistanceSpec::Scaled { diag, .. } => {
                in_sigma
                    && diag
                        .iter()
                        .all(|d| *d >= 1.0 / self.scaling_bound && *d <= self.scaling_bound)
            }
            _ => in_sigma,
        }
    }
}

/// Restriction of the metric to block `block`: everything needed to evaluate
/// `h(x, y)` for varying `x` with `y` fixed.
struct BlockMetric<'a> {
    spec: &'a MetricSpec,
    problem: &'a ObjectiveProblem,
    y: &'a Point,
    block: usize,
    set: &'a FeasibleSet,
    origin: Option<Vec<f64>>,
    /// `grad_i f(y)` for the linearized family, `grad_i f1(y)` for proximal gradient.
    linear: Option<Vec<f64>>,
}

impl<'a> BlockMetric<'a> {
    fn new(
        spec: &'a MetricSpec,
        problem: &'a ObjectiveProblem,
        y: &'a Point,
        block: usize,
        grad_block: Option<&[f64]>,
    ) -> Result<Self> {
        problem.partition().check_len(y.dim())?;
        spec.validate(problem, block)?;
        let set = problem.set(block);
        let origin = match spec.distance {
            DistanceSpec::BregmanEntropy { .. } => {
                let o = entropy_origin(set)?;
                if let Some(j) = y.block(block).iter().zip(&o).position(|(v, l)| !(v > l)) {
                    return Err(Error::Domain(format!(
                        "entropy metric needs y_i strictly inside the domain (coordinate {j})"
                    )));
                }
                Some(o)
            }
            _ => None,
        };
        let range = problem.partition().range(block);
        let linear = match spec.family {
            MetricFamily::Linearized => Some(match grad_block {
                Some(g) => g.to_vec(),
                None => problem.block_gradient(y, block)?,
            }),
            MetricFamily::ProximalGradient => {
                let smooth = &problem.split().unwrap().smooth;
                let mut g = vec![0.0; problem.dim()];
                smooth.gradient(y.values(), &mut g);
                Some(g[range].to_vec())
            }
            MetricFamily::Proximity => None,
        };
        Ok(Self {
            spec,
            problem,
            y,
            block,
            set,
            origin,
            linear,
        })
    }

    fn y_block(&self) -> &[f64] {
        self.y.block(self.block)
    }

    fn check_x(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.set.dim() {
            return Err(invalid(format!(
                "block point has {} entries, block {} has {}",
                x.len(),
                self.block,
                self.set.dim()
            )));
        }
        Ok(())
    }

    fn linear_term(&self, x: &[f64]) -> f64 {
        match &self.linear {
            Some(g) => g
                .iter()
                .zip(x.iter().zip(self.y_block()))
                .map(|(gj, (xj, yj))| gj * (xj - yj))
                .sum(),
            None => 0.0,
        }
    }

    fn with_block(&self, x: &[f64]) -> Vec<f64> {
        let mut full = self.y.values().to_vec();
        full[self.problem.partition().range(self.block)].copy_from_slice(x);
        full
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_x(x)?;
        let d = self.spec.distance.eval(x, self.y_block(), self.origin.as_deref())?;
        let smooth_part = match self.spec.family {
            MetricFamily::Linearized => 0.0,
            _ => self.spec.convex_part(self.problem).value(&self.with_block(x)),
        };
        Ok(smooth_part + d + self.linear_term(x))
    }

    fn grad1(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_x(x)?;
        let mut g = self.spec.distance.grad1(x, self.y_block(), self.origin.as_deref())?;
        if let Some(lin) = &self.linear {
            g.iter_mut().zip(lin).for_each(|(a, b)| *a += b);
        }
        if self.spec.family != MetricFamily::Linearized {
            let full = self.with_block(x);
            let mut fg = vec![0.0; full.len()];
            self.spec.convex_part(self.problem).gradient(&full, &mut fg);
            let range = self.problem.partition().range(self.block);
            g.iter_mut().zip(&fg[range]).for_each(|(a, b)| *a += b);
        }
        Ok(g)
    }

    fn project(&self, grad_block: &[f64]) -> Result<Vec<f64>> {
        let y = self.y_block();
        // Stationary for the block: every admissible metric returns y_i.
        if grad_block.iter().all(|g| *g == 0.0) {
            return Ok(y.to_vec());
        }
        match self.spec.family {
            MetricFamily::Linearized => self.project_linearized(self.linear.as_deref().unwrap()),
            _ => {
                if let Some(p) = self.project_separable_quadratic()? {
                    return Ok(p);
                }
                inner::solve(self)
            }
        }
    }

    fn project_linearized(&self, g: &[f64]) -> Result<Vec<f64>> {
        let y = self.y_block();
        match &self.spec.distance {
            DistanceSpec::Euclidean { sigma } => {
                let u: Vec<f64> = y.iter().zip(g).map(|(yj, gj)| yj - sigma * gj).collect();
                self.set.euclidean_project(&u)
            }
            DistanceSpec::Scaled { alpha, diag } => {
                let u: Vec<f64> = y
                    .iter()
                    .zip(g.iter().zip(diag))
                    .map(|(yj, (gj, dj))| yj - alpha * dj * gj)
                    .collect();
                self.set.scaled_project(&u, diag)
            }
            DistanceSpec::BregmanEntropy { sigma } => {
                Ok(entropy_step(self.set, self.origin.as_deref().unwrap(), y, g, *sigma))
            }
        }
    }

    /// Closed form when the smooth part restricted to the block is a separable quadratic and
    /// the distance is quadratic: the minimizer is a weighted projection.
    fn project_separable_quadratic(&self) -> Result<Option<Vec<f64>>> {
        let steps: Vec<f64> = match &self.spec.distance {
            DistanceSpec::Euclidean { sigma } => vec![*sigma; self.set.dim()],
            DistanceSpec::Scaled { alpha, diag } => diag.iter().map(|d| alpha * d).collect(),
            DistanceSpec::BregmanEntropy { .. } => return Ok(None),
        };
        let range = self.problem.partition().range(self.block);
        let Some(q) = self
            .spec
            .convex_part(self.problem)
            .separable_quadratic(self.y.values(), range)
        else {
            return Ok(None);
        };
        let y = self.y_block();
        let mut u = Vec::with_capacity(y.len());
        let mut w = Vec::with_capacity(y.len());
        for j in 0..y.len() {
            let lin = self.linear.as_ref().map_or(0.0, |l| l[j]);
            let wj = 1.0 / (q.curvature[j] + 1.0 / steps[j]);
            u.push(wj * (q.linear[j] - lin + y[j] / steps[j]));
            w.push(wj);
        }
        self.set.scaled_project(&u, &w).map(Some)
    }
}

/// Closed-form entropic (multiplicative) step `l + (y - l) exp(-sigma g)`, restricted to the
/// set: clipped to the upper bounds of a box, renormalized on a simplex.
pub(crate) fn entropy_step(set: &FeasibleSet, origin: &[f64], y: &[f64], g: &[f64], sigma: f64) -> Vec<f64> {
    match set {
        FeasibleSet::Simplex { radius, .. } => {
            let gmin = g.iter().cloned().fold(f64::INFINITY, f64::min);
            let w: Vec<f64> = y
                .iter()
                .zip(g)
                .map(|(yj, gj)| yj * (-sigma * (gj - gmin)).exp())
                .collect();
            let total: f64 = w.iter().sum();
            w.iter()
                .map(|wj| (radius * wj / total).max(f64::MIN_POSITIVE))
                .collect()
        }
        _ => {
            let upper = set.upper_bounds();
            y.iter()
                .zip(g)
                .zip(origin.iter().zip(&upper))
                .map(|((yj, gj), (l, u))| {
                    let x = l + (yj - l) * (-sigma * gj).exp();
                    // Keep the iterate representable strictly inside the entropy's domain.
                    let x = if x > *l { x } else { l.next_up() };
                    x.min(*u)
                })
                .collect()
        }
    }
}

/// `h^i_s(x, y)` for block `block`.
pub fn metric_eval(
    spec: &MetricSpec,
    problem: &ObjectiveProblem,
    x: &[f64],
    y: &Point,
    block: usize,
) -> Result<f64> {
    BlockMetric::new(spec, problem, y, block, None)?.eval(x)
}

/// `grad_1 h^i_s(x, y)` for block `block`.
pub fn metric_grad1(
    spec: &MetricSpec,
    problem: &ObjectiveProblem,
    x: &[f64],
    y: &Point,
    block: usize,
) -> Result<Vec<f64>> {
    BlockMetric::new(spec, problem, y, block, None)?.grad1(x)
}

/// `p_i(y; h^i_s)`: the unique minimizer of `h^i_s(., y)` over the block's feasible set.
pub fn generalized_project(
    spec: &MetricSpec,
    problem: &ObjectiveProblem,
    y: &Point,
    block: usize,
) -> Result<Vec<f64>> {
    let g = problem.block_gradient(y, block)?;
    project_with_gradient(spec, problem, y, block, &g)
}

/// As [`generalized_project`], reusing an already computed `grad_i f(y)`.
pub fn project_with_gradient(
    spec: &MetricSpec,
    problem: &ObjectiveProblem,
    y: &Point,
    block: usize,
    grad_block: &[f64],
) -> Result<Vec<f64>> {
    BlockMetric::new(spec, problem, y, block, Some(grad_block))?.project(grad_block)
}

/// Full generalized projection of a block-separable metric: the concatenation of the
/// block projections, one spec per block.
pub fn project_all(specs: &[MetricSpec], problem: &ObjectiveProblem, y: &Point) -> Result<Vec<f64>> {
    check_spec_count(specs, problem)?;
    let g = problem.gradient(y)?;
    let mut out = Vec::with_capacity(problem.dim());
    for (i, spec) in specs.iter().enumerate() {
        let gi = &g[problem.partition().range(i)];
        out.extend(project_with_gradient(spec, problem, y, i, gi)?);
    }
    Ok(out)
}

/// `max_i ||p_i(x) - x_i||_inf`; zero exactly at stationary points.
pub fn stationarity_residual(specs: &[MetricSpec], problem: &ObjectiveProblem, x: &Point) -> Result<f64> {
    let p = project_all(specs, problem, x)?;
    Ok(p.iter()
        .zip(x.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Residual under the linearized Euclidean metric with `sigma = 1`, i.e.
/// `||P_Omega(x - grad f(x)) - x||_inf`. Metric-independent measure used for stopping.
pub fn euclidean_residual(problem: &ObjectiveProblem, x: &Point) -> Result<f64> {
    let specs = vec![MetricSpec::euclidean(1.0); problem.num_blocks()];
    stationarity_residual(&specs, problem, x)
}

fn check_spec_count(specs: &[MetricSpec], problem: &ObjectiveProblem) -> Result<()> {
    if specs.len() != problem.num_blocks() {
        return Err(invalid(format!(
            "{} metric specs for {} blocks",
            specs.len(),
            problem.num_blocks()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests;
