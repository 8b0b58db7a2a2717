//! Slow reference computations for checking `cbggp-core`.
//!
//! Everything here is written from the definitions using only arithmetic: core types are
//! read as data (objective values and gradients, set parameters, metric parameters) but no
//! core projection, metric or linesearch routine is called.

use cbggp_core::{DistanceSpec, Error, FeasibleSet, LinesearchParams, MetricFamily, MetricSpec, ObjectiveProblem, Point, Result};

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn inner(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    inner(a, a).sqrt()
}

/// Central differences `(f(x + h e_j) - f(x - h e_j)) / (2h)`.
pub fn finite_difference_gradient(problem: &ObjectiveProblem, x: &Point, h: f64) -> Vec<f64> {
    let f = problem.objective();
    let mut z = x.values().to_vec();
    (0..z.len())
        .map(|j| {
            let orig = z[j];
            z[j] = orig + h;
            let fp = f.value(&z);
            z[j] = orig - h;
            let fm = f.value(&z);
            z[j] = orig;
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

/// Componentwise agreement of an analytic gradient with central differences (step `1e-6`):
/// relative error at most `1e-5`, or absolute error at most `1e-8` on components below
/// `1e-3` in magnitude. Returns the worst offending component, if any.
pub fn gradient_mismatch(problem: &ObjectiveProblem, x: &Point) -> Option<(usize, f64, f64)> {
    let mut g = vec![0.0; x.dim()];
    problem.objective().gradient(x.values(), &mut g);
    let fd = finite_difference_gradient(problem, x, 1e-6);
    g.iter().zip(&fd).enumerate().find_map(|(j, (a, b))| {
        let err = (a - b).abs();
        let ok = if a.abs() < 1e-3 { err <= 1e-8 || err <= 1e-5 * a.abs() } else { err <= 1e-5 * a.abs() };
        (!ok).then_some((j, *a, *b))
    })
}

// ---- sets, written out again -----------------------------------------------------------

fn set_lower(set: &FeasibleSet) -> Vec<f64> {
    match set {
        FeasibleSet::Box { lower, .. } => lower.clone(),
        FeasibleSet::NonnegativeOrthant { dim } | FeasibleSet::Simplex { dim, .. } => vec![0.0; *dim],
        FeasibleSet::L2Ball { center, radius } => center.iter().map(|c| c - radius).collect(),
    }
}

fn set_upper(set: &FeasibleSet) -> Vec<f64> {
    match set {
        FeasibleSet::Box { upper, .. } => upper.clone(),
        FeasibleSet::NonnegativeOrthant { dim } => vec![f64::INFINITY; *dim],
        FeasibleSet::Simplex { dim, radius } => vec![*radius; *dim],
        FeasibleSet::L2Ball { center, radius } => center.iter().map(|c| c + radius).collect(),
    }
}

fn member(set: &FeasibleSet, v: &[f64], tol: f64) -> bool {
    match set {
        FeasibleSet::Simplex { radius, .. } => {
            v.iter().all(|x| *x >= -tol) && (v.iter().sum::<f64>() - radius).abs() <= tol
        }
        FeasibleSet::L2Ball { center, radius } => {
            let d: Vec<f64> = v.iter().zip(center).map(|(a, c)| a - c).collect();
            norm2(&d) <= radius + tol
        }
        _ => {
            let (lo, hi) = (set_lower(set), set_upper(set));
            v.iter().zip(lo.iter().zip(&hi)).all(|(x, (l, h))| *x >= l - tol && *x <= h + tol)
        }
    }
}

/// Euclidean projection: clipping, simplex by bisection on the shift, ball by scaling.
fn plain_projection(set: &FeasibleSet, u: &[f64]) -> Vec<f64> {
    match set {
        FeasibleSet::Simplex { radius, .. } => {
            let mass = |t: f64| u.iter().map(|x| (x - t).max(0.0)).sum::<f64>();
            let mut lo = u.iter().cloned().fold(f64::INFINITY, f64::min) - radius;
            let mut hi = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if mass(mid) > *radius {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let t = 0.5 * (lo + hi);
            u.iter().map(|x| (x - t).max(0.0)).collect()
        }
        FeasibleSet::L2Ball { center, radius } => {
            let d: Vec<f64> = u.iter().zip(center).map(|(a, c)| a - c).collect();
            let r = norm2(&d);
            if r <= *radius {
                u.to_vec()
            } else {
                center.iter().zip(&d).map(|(c, v)| c + v * radius / r).collect()
            }
        }
        _ => {
            let (lo, hi) = (set_lower(set), set_upper(set));
            u.iter().zip(lo.iter().zip(&hi)).map(|(x, (l, h))| x.max(*l).min(*h)).collect()
        }
    }
}

// ---- metric values from the definitions ------------------------------------------------

fn entropy_shift(set: &FeasibleSet) -> Result<Vec<f64>> {
    let lo = set_lower(set);
    match set {
        FeasibleSet::L2Ball { .. } => Err(bad("entropy needs a set bounded below")),
        _ if lo.iter().all(|l| l.is_finite()) => Ok(lo),
        _ => Err(bad("entropy needs finite lower bounds")),
    }
}

/// `h(z, y)` for block `block`, computed straight from the family and distance formulas.
pub fn metric_value(spec: &MetricSpec, problem: &ObjectiveProblem, z: &[f64], y: &Point, block: usize) -> Result<f64> {
    let range = problem.partition().range(block);
    let yb = &y.values()[range.clone()];
    let set = &problem.sets()[block];
    let dist = match &spec.distance {
        DistanceSpec::Euclidean { sigma } => z.iter().zip(yb).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (2.0 * sigma),
        DistanceSpec::Scaled { alpha, diag } => {
            z.iter().zip(yb).zip(diag).map(|((a, b), d)| (a - b) * (a - b) / d).sum::<f64>() / (2.0 * alpha)
        }
        DistanceSpec::BregmanEntropy { sigma } => {
            let l = entropy_shift(set)?;
            let mut s = 0.0;
            for j in 0..z.len() {
                let (a, b) = (z[j] - l[j], yb[j] - l[j]);
                if a < 0.0 || b <= 0.0 {
                    return Err(Error::Domain(format!("entropy at ({a}, {b})")));
                }
                let t = if a == 0.0 { 0.0 } else { a * (a / b).ln() };
                s += t - a + b;
            }
            s / sigma
        }
    };
    let mut full = y.values().to_vec();
    full[range.clone()].copy_from_slice(z);
    let shift: Vec<f64> = z.iter().zip(yb).map(|(a, b)| a - b).collect();
    let model = match spec.family {
        MetricFamily::Linearized => {
            let mut g = vec![0.0; full.len()];
            problem.objective().gradient(y.values(), &mut g);
            inner(&g[range], &shift)
        }
        MetricFamily::Proximity => problem.objective().value(&full),
        MetricFamily::ProximalGradient => {
            let split = problem.split().ok_or_else(|| bad("no split registered"))?;
            let mut g = vec![0.0; full.len()];
            split.smooth.gradient(y.values(), &mut g);
            split.convex.value(&full) + inner(&g[range], &shift)
        }
    };
    Ok(model + dist)
}

/// Axis-aligned grid for the brute-force projection.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub spacing: f64,
}

impl GridSpec {
    pub const MAX_POINTS: f64 = 1e7;

    pub fn new(lower: Vec<f64>, upper: Vec<f64>, spacing: f64) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() || lower.len() > 2 {
            return Err(bad("grid dimension must be 1 or 2"));
        }
        if !(spacing > 0.0) {
            return Err(bad("grid spacing must be positive"));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l.is_finite() && u.is_finite() && l <= u)) {
            return Err(bad("grid bounds must be finite and ordered"));
        }
        let g = Self { lower, upper, spacing };
        if g.counts().iter().map(|c| *c as f64).product::<f64>() > Self::MAX_POINTS {
            return Err(bad("grid has more than 1e7 points"));
        }
        Ok(g)
    }

    /// Grid with spacing `1e-3` over the part of `set` within `half_width` of `center`.
    pub fn around(set: &FeasibleSet, center: &[f64], half_width: f64) -> Result<Self> {
        let (lo, hi) = (set_lower(set), set_upper(set));
        let lower = center.iter().zip(&lo).map(|(c, l)| (c - half_width).max(*l)).collect();
        let upper = center.iter().zip(&hi).map(|(c, h)| (c + half_width).min(*h)).collect();
        Self::new(lower, upper, 1e-3)
    }

    fn counts(&self) -> Vec<usize> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| ((u - l) / self.spacing).floor() as usize + 1)
            .collect()
    }

    fn coord(&self, axis: usize, k: usize) -> f64 {
        (self.lower[axis] + k as f64 * self.spacing).min(self.upper[axis])
    }
}

/// The feasible grid point minimizing `h(., y)` over block `block`. Ties go to the lowest
/// lexicographic grid index.
///
/// On a simplex the grid runs over the last coordinate and the first is fixed by the
/// radius; on a 1-d simplex the set is a single point.
pub fn brute_force_project(spec: &MetricSpec, problem: &ObjectiveProblem, y: &Point, block: usize, grid: &GridSpec) -> Result<Vec<f64>> {
    let set = &problem.sets()[block];
    let n = problem.partition().size(block);
    if n != grid.lower.len() {
        return Err(bad("grid dimension differs from the block"));
    }
    let counts = grid.counts();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut consider = |z: Vec<f64>| -> Result<()> {
        if !member(set, &z, 1e-12) {
            return Ok(());
        }
        let v = metric_value(spec, problem, &z, y, block)?;
        if v.is_finite() && best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, z));
        }
        Ok(())
    };
    match (set, n) {
        (FeasibleSet::Simplex { radius, .. }, 1) => consider(vec![*radius])?,
        (FeasibleSet::Simplex { radius, .. }, 2) => {
            for k in 0..counts[1] {
                let t = grid.coord(1, k);
                consider(vec![radius - t, t])?;
            }
        }
        (_, 1) => {
            for k in 0..counts[0] {
                consider(vec![grid.coord(0, k)])?;
            }
        }
        _ => {
            for a in 0..counts[0] {
                let x0 = grid.coord(0, a);
                for b in 0..counts[1] {
                    consider(vec![x0, grid.coord(1, b)])?;
                }
            }
        }
    }
    best.map(|(_, z)| z).ok_or_else(|| bad("no feasible grid point"))
}

// ---- stationarity by sampling ----------------------------------------------------------

/// Deterministic 64-bit generator for the sample (splitmix64).
struct Sampler(u64);

impl Sampler {
    fn next(&mut self) -> f64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        (z >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Feasible points of `set` near `x`: random points, extreme points, coordinate moves and
/// the minimizer of the linear function `g^T v` over the set.
fn block_candidates(set: &FeasibleSet, x: &[f64], g: &[f64], rng: &mut Sampler, samples: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let (lo, hi) = (set_lower(set), set_upper(set));
    let mut out = Vec::new();
    let pick = |rng: &mut Sampler, j: usize| -> f64 {
        let (l, h) = (lo[j], hi[j]);
        match (l.is_finite(), h.is_finite()) {
            (true, true) => l + (h - l) * rng.next(),
            (true, false) => l + (x[j] - l + 1.0) * 2.0 * rng.next(),
            (false, true) => h - (h - x[j] + 1.0) * 2.0 * rng.next(),
            (false, false) => x[j] + 2.0 * rng.next() - 1.0,
        }
    };
    for _ in 0..samples {
        let v: Vec<f64> = match set {
            FeasibleSet::Simplex { radius, .. } => {
                let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.next()).ln()).collect();
                let s: f64 = e.iter().sum();
                e.iter().map(|w| w / s * radius).collect()
            }
            FeasibleSet::L2Ball { center, radius } => {
                let d: Vec<f64> = (0..n).map(|_| 2.0 * rng.next() - 1.0).collect();
                let r = norm2(&d).max(1e-300);
                let t = rng.next() * radius;
                center.iter().zip(&d).map(|(c, v)| c + v / r * t).collect()
            }
            _ => (0..n).map(|j| pick(rng, j)).collect(),
        };
        out.push(v);
    }
    match set {
        FeasibleSet::Simplex { radius, .. } => {
            for j in 0..n {
                let mut v = vec![0.0; n];
                v[j] = *radius;
                out.push(v);
            }
        }
        FeasibleSet::L2Ball { center, radius } => {
            let r = norm2(g);
            if r > 0.0 {
                out.push(center.iter().zip(g).map(|(c, gj)| c - gj / r * radius).collect());
            }
        }
        _ => {
            // Linear minimizer (where bounded) and single-coordinate moves to each bound.
            let lp: Vec<f64> = (0..n)
                .map(|j| if g[j] > 0.0 { lo[j] } else if g[j] < 0.0 { hi[j] } else { x[j] })
                .collect();
            if lp.iter().all(|v| v.is_finite()) {
                out.push(lp);
            }
            for j in 0..n {
                for bound in [lo[j], hi[j], x[j] + 1.0, x[j] - 1.0] {
                    let mut v = x.to_vec();
                    v[j] = bound.max(lo[j]).min(hi[j]);
                    if v[j].is_finite() {
                        out.push(v);
                    }
                }
            }
            if n <= 10 {
                for mask in 0..(1usize << n) {
                    let v: Vec<f64> = (0..n).map(|j| if mask >> j & 1 == 1 { hi[j] } else { lo[j] }).collect();
                    if v.iter().all(|t| t.is_finite()) {
                        out.push(v);
                    }
                }
            }
        }
    }
    out
}

/// `max(0, -min_v grad f(x)^T (v - x) / max(1, ||v - x||))` over a fixed sample of feasible
/// points `v`. Candidates differ from `x` in one block at a time, plus 1000 points that
/// move every block.
pub fn kkt_residual(problem: &ObjectiveProblem, x: &Point) -> f64 {
    let mut g = vec![0.0; x.dim()];
    problem.objective().gradient(x.values(), &mut g);
    let mut rng = Sampler(0x005E_ED0F_CAFE);
    let m = problem.num_blocks();
    let per_block = (1000 / m).max(20);
    let mut worst = 0.0f64;
    let mut blocks: Vec<Vec<Vec<f64>>> = Vec::with_capacity(m);
    for i in 0..m {
        let r = problem.partition().range(i);
        let cands = block_candidates(&problem.sets()[i], &x.values()[r.clone()], &g[r.clone()], &mut rng, per_block);
        for v in &cands {
            let d: Vec<f64> = v.iter().zip(&x.values()[r.clone()]).map(|(a, b)| a - b).collect();
            worst = worst.min(inner(&g[r.clone()], &d) / norm2(&d).max(1.0));
        }
        blocks.push(cands);
    }
    for _ in 0..1000 {
        let mut num = 0.0;
        let mut sq = 0.0;
        for (i, cands) in blocks.iter().enumerate() {
            let r = problem.partition().range(i);
            let v = &cands[(rng.next() * cands.len() as f64) as usize % cands.len()];
            for (k, j) in r.enumerate() {
                let d = v[k] - x.values()[j];
                num += g[j] * d;
                sq += d * d;
            }
        }
        worst = worst.min(num / sq.sqrt().max(1.0));
    }
    (-worst).max(0.0)
}

// ---- reference solver ------------------------------------------------------------------

fn project_all(problem: &ObjectiveProblem, u: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(u.len());
    for (i, set) in problem.sets().iter().enumerate() {
        out.extend(plain_projection(set, &u[problem.partition().range(i)]));
    }
    out
}

/// `K + 1` iterates `x^0, ..., x^K` of the classic projected gradient method on the whole
/// vector: `x <- x + lambda (P(x - sigma grad f(x)) - x)` with Armijo backtracking
/// `lambda = delta^j`. Once the direction vanishes the iterate is repeated.
pub fn reference_projected_gradient(problem: &ObjectiveProblem, sigma: f64, linesearch: &LinesearchParams, iterations: usize, x0: &Point) -> Result<Vec<Vec<f64>>> {
    let f = problem.objective();
    let mut x = x0.values().to_vec();
    let mut g = vec![0.0; x.len()];
    let mut out = vec![x.clone()];
    for _ in 0..iterations {
        f.gradient(&x, &mut g);
        let u: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - sigma * b).collect();
        let d: Vec<f64> = project_all(problem, &u).iter().zip(&x).map(|(p, a)| p - a).collect();
        let slope = inner(&g, &d);
        if d.iter().all(|v| *v == 0.0) || !(slope < 0.0) {
            out.push(x.clone());
            continue;
        }
        let fx = f.value(&x);
        let mut accepted = None;
        for j in 0..linesearch.max_backtracks {
            let lambda = linesearch.delta.powi(j as i32);
            let t: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + lambda * b).collect();
            let ft = f.value(&t);
            if ft <= fx + linesearch.beta * lambda * slope + linesearch.f_noise * fx.abs().max(1.0) {
                accepted = Some(t);
                break;
            }
        }
        x = accepted.ok_or(Error::LinesearchFailure {
            backtracks: linesearch.max_backtracks,
            lambda: linesearch.delta.powi(linesearch.max_backtracks as i32 - 1),
            f_trial: f64::NAN,
            f_old: fx,
        })?;
        out.push(x.clone());
    }
    Ok(out)
}

/// `||P(x - grad f(x)) - x||_inf`.
pub fn projected_gradient_residual(problem: &ObjectiveProblem, x: &[f64]) -> f64 {
    let mut g = vec![0.0; x.len()];
    problem.objective().gradient(x, &mut g);
    let u: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - b).collect();
    project_all(problem, &u).iter().zip(x).map(|(p, a)| (p - a).abs()).fold(0.0, f64::max)
}

/// Fixed-step projected gradient `x <- P(x - grad f(x) / L)` for a convex objective whose
/// gradient is `L`-Lipschitz, run until the projected gradient residual is at most `tol`.
/// No linesearch is needed (the step always decreases `f`), so the iteration is not
/// limited by rounding in objective values. Returns the final point and its value.
pub fn reference_solve(problem: &ObjectiveProblem, x0: &Point, lipschitz: f64, tol: f64, max_iterations: usize) -> Result<(Vec<f64>, f64)> {
    let f = problem.objective();
    let mut x = x0.values().to_vec();
    let mut g = vec![0.0; x.len()];
    let mut r = f64::INFINITY;
    for _ in 0..=max_iterations {
        r = projected_gradient_residual(problem, &x);
        if r <= tol {
            let fx = f.value(&x);
            return Ok((x, fx));
        }
        f.gradient(&x, &mut g);
        let u: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - b / lipschitz).collect();
        x = project_all(problem, &u);
    }
    Err(Error::InnerSolver { residual: r, iterations: max_iterations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_bisection_matches_hand_solution() {
        let s = FeasibleSet::Simplex { dim: 2, radius: 1.0 };
        let p = plain_projection(&s, &[1.2, 0.2]);
        assert!((p[0] - 1.0).abs() < 1e-12 && p[1].abs() < 1e-12);
        let p = plain_projection(&s, &[0.3, 0.3]);
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn grid_rejects_bad_shapes() {
        assert!(GridSpec::new(vec![0.0; 3], vec![1.0; 3], 0.1).is_err());
        assert!(GridSpec::new(vec![0.0], vec![1.0], 0.0).is_err());
        assert!(GridSpec::new(vec![0.0, 0.0], vec![10.0, 10.0], 1e-3).is_err());
        assert!(GridSpec::new(vec![0.0], vec![f64::INFINITY], 1e-3).is_err());
        assert_eq!(GridSpec::new(vec![0.0], vec![1.0], 0.25).unwrap().counts(), vec![5]);
    }
}
