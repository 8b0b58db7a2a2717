//! Iterative solver for block subproblems `min_{z in Omega_i} h(z, y)` without a closed form.
//!
//! Quadratic distances use projected gradient with a Lipschitz estimate that is doubled
//! until `||grad h(z+) - grad h(z)|| <= L ||z+ - z||`. The entropy uses the matching
//! multiplicative (mirror) step, with the step accepted under a relative smoothness test.
//! Both stop when the subproblem residual `||z - P(z - grad h(z))||_inf` drops to `INNER_TOL`.

use super::{entropy_step, BlockMetric, DistanceSpec};
use crate::error::{Error, Result};

pub(crate) const INNER_TOL: f64 = 1e-10;
pub(crate) const INNER_MAX_STEPS: usize = 10_000;

fn residual(m: &BlockMetric<'_>, z: &[f64], g: &[f64]) -> Result<f64> {
    let u: Vec<f64> = z.iter().zip(g).map(|(a, b)| a - b).collect();
    let p = m.set.euclidean_project(&u)?;
    Ok(p.iter().zip(z).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

fn norm(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|a| a * a).sum::<f64>().sqrt()
}

pub(crate) fn solve(m: &BlockMetric<'_>) -> Result<Vec<f64>> {
    match m.spec.distance {
        DistanceSpec::BregmanEntropy { .. } => solve_mirror(m),
        _ => solve_projected(m),
    }
}

fn solve_projected(m: &BlockMetric<'_>) -> Result<Vec<f64>> {
    let mut z = m.y_block().to_vec();
    let mut g = m.grad1(&z)?;
    let mut lip = m.spec.distance.curvature_hint();
    let mut r = residual(m, &z, &g)?;
    for _ in 0..INNER_MAX_STEPS {
        if r <= INNER_TOL {
            return Ok(z);
        }
        let (zn, gn) = loop {
            let u: Vec<f64> = z.iter().zip(&g).map(|(a, b)| a - b / lip).collect();
            let zn = m.set.euclidean_project(&u)?;
            let gn = m.grad1(&zn)?;
            let dz = norm(zn.iter().zip(&z).map(|(a, b)| a - b));
            let dg = norm(gn.iter().zip(&g).map(|(a, b)| a - b));
            if dz == 0.0 || dg <= lip * dz * (1.0 + 1e-12) {
                break (zn, gn);
            }
            lip *= 2.0;
            if !lip.is_finite() {
                return Err(Error::InnerSolver { residual: r, iterations: 0 });
            }
        };
        z = zn;
        g = gn;
        lip *= 0.75;
        r = residual(m, &z, &g)?;
    }
    if r <= INNER_TOL {
        return Ok(z);
    }
    Err(Error::InnerSolver {
        residual: r,
        iterations: INNER_MAX_STEPS,
    })
}

fn solve_mirror(m: &BlockMetric<'_>) -> Result<Vec<f64>> {
    let origin = m.origin.as_deref().unwrap();
    let mut z = m.y_block().to_vec();
    let mut g = m.grad1(&z)?;
    let mut lip = m.spec.distance.curvature_hint();
    let mut r = residual(m, &z, &g)?;
    for _ in 0..INNER_MAX_STEPS {
        if r <= INNER_TOL {
            return Ok(z);
        }
        let (zn, gn) = loop {
            let zn = entropy_step(m.set, origin, &z, &g, 1.0 / lip);
            let gn = m.grad1(&zn)?;
            // Relative smoothness along the step: <dg, dz> <= L <grad phi(zn) - grad phi(z), dz>.
            let mut lhs = 0.0;
            let mut rhs = 0.0;
            for j in 0..z.len() {
                let (a, b) = (zn[j] - origin[j], z[j] - origin[j]);
                let dz = zn[j] - z[j];
                lhs += (gn[j] - g[j]) * dz;
                rhs += dz * ((a - b) / b).ln_1p();
            }
            if rhs == 0.0 || lhs <= lip * rhs * (1.0 + 1e-12) {
                break (zn, gn);
            }
            lip *= 2.0;
            if !lip.is_finite() {
                return Err(Error::InnerSolver { residual: r, iterations: 0 });
            }
        };
        z = zn;
        g = gn;
        lip *= 0.75;
        r = residual(m, &z, &g)?;
    }
    if r <= INNER_TOL {
        return Ok(z);
    }
    Err(Error::InnerSolver {
        residual: r,
        iterations: INNER_MAX_STEPS,
    })
}
