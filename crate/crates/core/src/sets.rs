//! Closed convex sets for a single block, with exact Euclidean and diagonally scaled projections.

use crate::error::{invalid, Result};

/// Feasible set `Omega_i` of one block.
#[derive(Debug, Clone, PartialEq)]
pub enum FeasibleSet {
    /// `lower <= x <= upper` componentwise. Bounds may be infinite.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// `x >= 0`.
    NonnegativeOrthant { dim: usize },
    /// `x >= 0, sum(x) = radius`.
    Simplex { dim: usize, radius: f64 },
    /// `||x - center|| <= radius`.
    L2Ball { center: Vec<f64>, radius: f64 },
}

impl FeasibleSet {
    pub fn bounded_box(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(invalid("box bounds must be non-empty and of equal length"));
        }
        for (j, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if l.is_nan() || u.is_nan() || l > u || *l == f64::INFINITY || *u == f64::NEG_INFINITY {
                return Err(invalid(format!("invalid box bounds at {j}: [{l}, {u}]")));
            }
        }
        Ok(FeasibleSet::Box { lower, upper })
    }

    /// `[lower, upper]^dim`.
    pub fn cube(dim: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::bounded_box(vec![lower; dim], vec![upper; dim])
    }

    /// All of `R^dim`, as a box with infinite bounds.
    pub fn unbounded(dim: usize) -> Self {
        FeasibleSet::Box {
            lower: vec![f64::NEG_INFINITY; dim],
            upper: vec![f64::INFINITY; dim],
        }
    }

    pub fn orthant(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("orthant dimension must be positive"));
        }
        Ok(FeasibleSet::NonnegativeOrthant { dim })
    }

    pub fn simplex(dim: usize, radius: f64) -> Result<Self> {
        if dim == 0 || !(radius > 0.0) || !radius.is_finite() {
            return Err(invalid(format!("invalid simplex (dim {dim}, radius {radius})")));
        }
        Ok(FeasibleSet::Simplex { dim, radius })
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() || !(radius > 0.0) || !radius.is_finite() {
            return Err(invalid(format!("invalid ball (radius {radius})")));
        }
        Ok(FeasibleSet::L2Ball { center, radius })
    }

    pub fn dim(&self) -> usize {
        match self {
            FeasibleSet::Box { lower, .. } => lower.len(),
            FeasibleSet::NonnegativeOrthant { dim } | FeasibleSet::Simplex { dim, .. } => *dim,
            FeasibleSet::L2Ball { center, .. } => center.len(),
        }
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(invalid(format!(
                "dimension mismatch: got {len}, set has {}",
                self.dim()
            )));
        }
        Ok(())
    }

    /// Componentwise lower bounds implied by the set, `-inf` where there is none.
    pub fn lower_bounds(&self) -> Vec<f64> {
        match self {
            FeasibleSet::Box { lower, .. } => lower.clone(),
            FeasibleSet::NonnegativeOrthant { dim } | FeasibleSet::Simplex { dim, .. } => vec![0.0; *dim],
            FeasibleSet::L2Ball { center, radius } => center.iter().map(|c| c - radius).collect(),
        }
    }

    /// Componentwise upper bounds implied by the set, `+inf` where there is none.
    pub fn upper_bounds(&self) -> Vec<f64> {
        match self {
            FeasibleSet::Box { upper, .. } => upper.clone(),
            FeasibleSet::NonnegativeOrthant { dim } => vec![f64::INFINITY; *dim],
            FeasibleSet::Simplex { dim, radius } => vec![*radius; *dim],
            FeasibleSet::L2Ball { center, radius } => center.iter().map(|c| c + radius).collect(),
        }
    }

    /// True iff `u` violates no constraint by more than `tol`.
    pub fn contains(&self, u: &[f64], tol: f64) -> Result<bool> {
        self.check_dim(u.len())?;
        if !(tol >= 0.0) {
            return Err(invalid(format!("tolerance must be nonnegative, got {tol}")));
        }
        if u.iter().any(|v| v.is_nan()) {
            return Ok(false);
        }
        Ok(match self {
            FeasibleSet::Box { lower, upper } => u
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(x, (l, h))| *x >= l - tol && *x <= h + tol),
            FeasibleSet::NonnegativeOrthant { .. } => u.iter().all(|x| *x >= -tol),
            FeasibleSet::Simplex { radius, .. } => {
                u.iter().all(|x| *x >= -tol) && (u.iter().sum::<f64>() - radius).abs() <= tol
            }
            FeasibleSet::L2Ball { center, radius } => distance(u, center) <= radius + tol,
        })
    }

    /// `argmin_{x in set} ||x - u||^2`.
    pub fn euclidean_project(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(u.len())?;
        Ok(match self {
            FeasibleSet::Box { lower, upper } => clip(u, lower, upper),
            FeasibleSet::NonnegativeOrthant { .. } => u.iter().map(|x| x.max(0.0)).collect(),
            FeasibleSet::Simplex { radius, .. } => project_simplex(u, *radius),
            FeasibleSet::L2Ball { center, radius } => project_ball(u, center, *radius),
        })
    }

    /// `argmin_{x in set} (x - u)^T diag(d)^{-1} (x - u)` for a strictly positive `d`.
    pub fn scaled_project(&self, u: &[f64], d: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(u.len())?;
        self.check_dim(d.len())?;
        if let Some(j) = d.iter().position(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(invalid(format!("scaling entry {j} is not positive: {}", d[j])));
        }
        Ok(match self {
            // Separable objective: the weights do not move the minimizer.
            FeasibleSet::Box { lower, upper } => clip(u, lower, upper),
            FeasibleSet::NonnegativeOrthant { .. } => u.iter().map(|x| x.max(0.0)).collect(),
            FeasibleSet::Simplex { radius, .. } => project_simplex_weighted(u, d, *radius),
            FeasibleSet::L2Ball { center, radius } => {
                if d.iter().all(|w| *w == d[0]) {
                    project_ball(u, center, *radius)
                } else {
                    project_ball_weighted(u, d, center, *radius)
                }
            }
        })
    }
}

fn clip(u: &[f64], lower: &[f64], upper: &[f64]) -> Vec<f64> {
    u.iter()
        .zip(lower.iter().zip(upper))
        .map(|(x, (l, h))| x.max(*l).min(*h))
        .collect()
}

fn distance(u: &[f64], c: &[f64]) -> f64 {
    u.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Sort-based threshold search: `x = max(u - tau, 0)` with `tau` from the largest
/// consistent support.
fn project_simplex(u: &[f64], radius: f64) -> Vec<f64> {
    let mut sorted = u.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut tau = 0.0;
    for (k, s) in sorted.iter().enumerate() {
        cum += s;
        let t = (cum - radius) / (k + 1) as f64;
        if s - t > 0.0 {
            tau = t;
        }
    }
    u.iter().map(|x| (x - tau).max(0.0)).collect()
}

/// Weighted variant: `x_j = max(u_j - d_j tau, 0)`; breakpoints are `u_j / d_j`.
fn project_simplex_weighted(u: &[f64], d: &[f64], radius: f64) -> Vec<f64> {
    let mut order: Vec<usize> = (0..u.len()).collect();
    order.sort_by(|&a, &b| (u[b] / d[b]).total_cmp(&(u[a] / d[a])));
    let (mut su, mut sd) = (0.0, 0.0);
    let mut tau = 0.0;
    for &j in &order {
        su += u[j];
        sd += d[j];
        let t = (su - radius) / sd;
        if u[j] / d[j] - t > 0.0 {
            tau = t;
        }
    }
    u.iter().zip(d).map(|(x, w)| (x - w * tau).max(0.0)).collect()
}

fn project_ball(u: &[f64], center: &[f64], radius: f64) -> Vec<f64> {
    let norm = distance(u, center);
    if norm <= radius {
        return u.to_vec();
    }
    let scale = radius / norm;
    u.iter()
        .zip(center)
        .map(|(x, c)| c + (x - c) * scale)
        .collect()
}

/// Weighted ball projection. KKT gives `x - c = (u - c) / (1 + mu d)`; the multiplier `mu`
/// solves `sum_j (v_j / (1 + mu d_j))^2 = r^2`, found by Newton safeguarded with bisection.
fn project_ball_weighted(u: &[f64], d: &[f64], center: &[f64], radius: f64) -> Vec<f64> {
    let v: Vec<f64> = u.iter().zip(center).map(|(a, c)| a - c).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm <= radius {
        return u.to_vec();
    }
    let r2 = radius * radius;
    let phi = |mu: f64| -> (f64, f64) {
        let (mut val, mut der) = (-r2, 0.0);
        for (vj, dj) in v.iter().zip(d) {
            let t = 1.0 + mu * dj;
            val += vj * vj / (t * t);
            der -= 2.0 * dj * vj * vj / (t * t * t);
        }
        (val, der)
    };
    let dmin = d.iter().cloned().fold(f64::INFINITY, f64::min);
    let (mut lo, mut hi) = (0.0, (norm / radius - 1.0) / dmin);
    let mut mu = 0.0;
    for _ in 0..200 {
        let (val, der) = phi(mu);
        if val.abs() <= 1e-12 * r2 {
            break;
        }
        if val > 0.0 {
            lo = mu;
        } else {
            hi = mu;
        }
        let newton = mu - val / der;
        mu = if newton > lo && newton < hi && der < 0.0 {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= f64::EPSILON * hi.max(1.0) {
            break;
        }
    }
    let mut x: Vec<f64> = v.iter().zip(d).map(|(vj, dj)| vj / (1.0 + mu * dj)).collect();
    let nx = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nx > radius {
        x.iter_mut().for_each(|a| *a *= radius / nx);
    }
    x.iter().zip(center).map(|(a, c)| a + c).collect()
}
