use crate::error::{invalid, Error, Result};
use crate::sets::FeasibleSet;

/// Distance-like term `d(x, y)` of a metric function.
///
/// Admissible distances satisfy `d >= 0`, `d(y, y) = 0`, `grad_1 d(y, y) = 0` and strict
/// convexity of `d(., y)`; all three variants here do.
#[derive(Debug, Clone, PartialEq)]
pub enum DistanceSpec {
    /// `||x - y||^2 / (2 sigma)`.
    Euclidean { sigma: f64 },
    /// `(x - y)^T diag(d)^{-1} (x - y) / (2 alpha)`.
    Scaled { alpha: f64, diag: Vec<f64> },
    /// Bregman distance of the entropy `b(x) = sum (x_j - l_j) ln(x_j - l_j) - (x_j - l_j)`,
    /// divided by `sigma`. The origin `l` is the lower bound of the block's set
    /// (zero for orthants and simplices).
    BregmanEntropy { sigma: f64 },
}

/// Which distance, without its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DistanceKind {
    Euclidean,
    Scaled,
    Entropy,
}

impl DistanceSpec {
    pub fn kind(&self) -> DistanceKind {
        match self {
            DistanceSpec::Euclidean { .. } => DistanceKind::Euclidean,
            DistanceSpec::Scaled { .. } => DistanceKind::Scaled,
            DistanceSpec::BregmanEntropy { .. } => DistanceKind::Entropy,
        }
    }

    /// The scalar steplength-like parameter (`sigma` or `alpha`).
    pub fn scale(&self) -> f64 {
        match self {
            DistanceSpec::Euclidean { sigma } | DistanceSpec::BregmanEntropy { sigma } => *sigma,
            DistanceSpec::Scaled { alpha, .. } => *alpha,
        }
    }

    pub(crate) fn validate(&self, set: &FeasibleSet) -> Result<()> {
        let s = self.scale();
        if !(s > 0.0) || !s.is_finite() {
            return Err(invalid(format!("distance parameter must be positive, got {s}")));
        }
        match self {
            DistanceSpec::Scaled { diag, .. } => {
                if diag.len() != set.dim() {
                    return Err(invalid(format!(
                        "scaling has {} entries, block has {}",
                        diag.len(),
                        set.dim()
                    )));
                }
                if diag.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
                    return Err(invalid("scaling entries must be positive"));
                }
            }
            DistanceSpec::BregmanEntropy { .. } => {
                entropy_origin(set)?;
            }
            DistanceSpec::Euclidean { .. } => {}
        }
        Ok(())
    }

    /// `d(x, y)`. `origin` is required for the entropy and ignored otherwise.
    pub fn eval(&self, x: &[f64], y: &[f64], origin: Option<&[f64]>) -> Result<f64> {
        Ok(match self {
            DistanceSpec::Euclidean { sigma } => {
                x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (2.0 * sigma)
            }
            DistanceSpec::Scaled { alpha, diag } => {
                x.iter()
                    .zip(y)
                    .zip(diag)
                    .map(|((a, b), w)| (a - b) * (a - b) / w)
                    .sum::<f64>()
                    / (2.0 * alpha)
            }
            DistanceSpec::BregmanEntropy { sigma } => {
                let origin = origin.ok_or_else(|| invalid("entropy distance needs an origin"))?;
                let mut acc = 0.0;
                for ((a, b), l) in x.iter().zip(y).zip(origin) {
                    let (a, b) = (a - l, b - l);
                    check_positive(a, b)?;
                    acc += a * (a / b).ln() - a + b;
                }
                acc / sigma
            }
        })
    }

    /// `grad_1 d(x, y)`.
    pub fn grad1(&self, x: &[f64], y: &[f64], origin: Option<&[f64]>) -> Result<Vec<f64>> {
        Ok(match self {
            DistanceSpec::Euclidean { sigma } => x.iter().zip(y).map(|(a, b)| (a - b) / sigma).collect(),
            DistanceSpec::Scaled { alpha, diag } => x
                .iter()
                .zip(y)
                .zip(diag)
                .map(|((a, b), w)| (a - b) / (alpha * w))
                .collect(),
            DistanceSpec::BregmanEntropy { sigma } => {
                let origin = origin.ok_or_else(|| invalid("entropy distance needs an origin"))?;
                let mut out = Vec::with_capacity(x.len());
                for ((a, b), l) in x.iter().zip(y).zip(origin) {
                    let (a, b) = (a - l, b - l);
                    check_positive(a, b)?;
                    out.push((a.ln() - b.ln()) / sigma);
                }
                out
            }
        })
    }

    /// Lower bound on the strong-convexity modulus of `d(., y)` over `set`.
    pub fn modulus_on(&self, set: &FeasibleSet) -> f64 {
        match self {
            DistanceSpec::Euclidean { sigma } => 1.0 / sigma,
            DistanceSpec::Scaled { alpha, diag } => {
                1.0 / (alpha * diag.iter().cloned().fold(0.0, f64::max))
            }
            DistanceSpec::BregmanEntropy { sigma } => {
                // b'' = 1 / (x - l) >= 1 / width on a bounded set.
                let width = set
                    .lower_bounds()
                    .iter()
                    .zip(set.upper_bounds())
                    .map(|(l, u)| u - l)
                    .fold(0.0, f64::max);
                if width.is_finite() {
                    1.0 / (sigma * width)
                } else {
                    0.0
                }
            }
        }
    }

    /// Curvature of `d(., y)` along the steepest direction, used to seed inner solvers.
    pub(crate) fn curvature_hint(&self) -> f64 {
        match self {
            DistanceSpec::Euclidean { sigma } | DistanceSpec::BregmanEntropy { sigma } => 1.0 / sigma,
            DistanceSpec::Scaled { alpha, diag } => {
                1.0 / (alpha * diag.iter().cloned().fold(f64::INFINITY, f64::min))
            }
        }
    }
}

fn check_positive(a: f64, b: f64) -> Result<()> {
    if !(a > 0.0) || !(b > 0.0) {
        return Err(Error::Domain(format!(
            "entropy needs points strictly inside its domain (offsets {a:e}, {b:e})"
        )));
    }
    Ok(())
}

/// Origin `l` of the entropy generator for a block set: zero for orthants and simplices,
/// the lower bound for boxes with finite lower bounds.
pub fn entropy_origin(set: &FeasibleSet) -> Result<Vec<f64>> {
    match set {
        FeasibleSet::NonnegativeOrthant { dim } | FeasibleSet::Simplex { dim, .. } => Ok(vec![0.0; *dim]),
        FeasibleSet::Box { lower, .. } if lower.iter().all(|l| l.is_finite()) => Ok(lower.clone()),
        FeasibleSet::Box { .. } => Err(Error::Domain(
            "entropy distance needs finite lower bounds on a box".into(),
        )),
        FeasibleSet::L2Ball { .. } => Err(Error::Domain(
            "entropy distance is not defined on a ball".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_distance_values() {
        let d = DistanceSpec::BregmanEntropy { sigma: 1.0 };
        let o = [0.0];
        let e = std::f64::consts::E;
        let v = d.eval(&[1.0], &[e], Some(&o)).unwrap();
        assert!((v - (e - 2.0)).abs() < 1e-15);
        assert_eq!(d.eval(&[2.5], &[2.5], Some(&o)).unwrap(), 0.0);
        assert!(matches!(d.eval(&[0.0], &[1.0], Some(&o)), Err(Error::Domain(_))));
        assert!(matches!(d.grad1(&[1.0], &[-1.0], Some(&o)), Err(Error::Domain(_))));
        let g = d.grad1(&[1.0], &[2.0], Some(&o)).unwrap();
        assert!((g[0] + std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn distances_vanish_on_the_diagonal() {
        let y = [0.3, 0.9];
        let o = [0.0, 0.0];
        for d in [
            DistanceSpec::Euclidean { sigma: 0.3 },
            DistanceSpec::Scaled { alpha: 2.0, diag: vec![0.5, 4.0] },
            DistanceSpec::BregmanEntropy { sigma: 0.7 },
        ] {
            assert_eq!(d.eval(&y, &y, Some(&o)).unwrap(), 0.0);
            assert!(d.grad1(&y, &y, Some(&o)).unwrap().iter().all(|g| *g == 0.0));
            assert!(d.eval(&[0.1, 1.2], &y, Some(&o)).unwrap() > 0.0);
        }
    }

    #[test]
    fn entropy_origin_by_set() {
        assert_eq!(entropy_origin(&FeasibleSet::orthant(2).unwrap()).unwrap(), vec![0.0; 2]);
        assert_eq!(
            entropy_origin(&FeasibleSet::cube(2, -2.0, 2.0).unwrap()).unwrap(),
            vec![-2.0; 2]
        );
        assert!(entropy_origin(&FeasibleSet::unbounded(2)).is_err());
        assert!(entropy_origin(&FeasibleSet::ball(vec![0.0], 1.0).unwrap()).is_err());
    }
}
