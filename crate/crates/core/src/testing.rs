//! Small objectives shared by the unit tests.

use std::ops::Range;
use std::sync::Arc;

use crate::problem::{BlockPartition, Objective, ObjectiveProblem, SeparableQuadratic};
use crate::sets::FeasibleSet;

/// `0.5 ||x - c||^2`.
pub struct HalfSqNorm {
    pub center: Vec<f64>,
}

impl HalfSqNorm {
    pub fn new(n: usize) -> Self {
        Self { center: vec![0.0; n] }
    }

    pub fn centered(center: Vec<f64>) -> Self {
        Self { center }
    }
}

impl Objective for HalfSqNorm {
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        0.5 * x.iter().zip(&self.center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>()
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        for ((o, a), c) in out.iter_mut().zip(x).zip(&self.center) {
            *o = a - c;
        }
    }
    fn hessian_diagonal(&self, _x: &[f64], out: &mut [f64]) -> bool {
        out.fill(1.0);
        true
    }
    fn separable_quadratic(&self, _x: &[f64], range: Range<usize>) -> Option<SeparableQuadratic> {
        Some(SeparableQuadratic {
            curvature: vec![1.0; range.len()],
            linear: self.center[range].to_vec(),
        })
    }
}

/// `g^T x`.
pub struct Linear {
    pub coef: Vec<f64>,
}

impl Objective for Linear {
    fn dim(&self) -> usize {
        self.coef.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.coef).map(|(a, b)| a * b).sum()
    }
    fn gradient(&self, _x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.coef);
    }
}

/// `0.5 x^T A x - b^T x` with a dense symmetric `A` (row-major).
pub struct DenseQuadratic {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl DenseQuadratic {
    /// A fixed coupled SPD quadratic in `n` variables.
    pub fn coupled(n: usize) -> Self {
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = if i == j { 2.0 + i as f64 } else { 0.5 / (1.0 + (i + j) as f64) };
            }
        }
        let b = (0..n).map(|i| 1.0 - 0.3 * i as f64).collect();
        Self { a, b }
    }
}

impl Objective for DenseQuadratic {
    fn dim(&self) -> usize {
        self.b.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        let n = self.b.len();
        let mut v = 0.0;
        for i in 0..n {
            let row: f64 = (0..n).map(|j| self.a[i * n + j] * x[j]).sum();
            v += 0.5 * x[i] * row - self.b[i] * x[i];
        }
        v
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let n = self.b.len();
        for i in 0..n {
            out[i] = (0..n).map(|j| self.a[i * n + j] * x[j]).sum::<f64>() - self.b[i];
        }
    }
    fn hessian_diagonal(&self, _x: &[f64], out: &mut [f64]) -> bool {
        let n = self.b.len();
        for i in 0..n {
            out[i] = self.a[i * n + i];
        }
        true
    }
}

/// `100 (x2 - x1^2)^2 + (1 - x1)^2`.
pub struct Rosenbrock2;

impl Objective for Rosenbrock2 {
    fn dim(&self) -> usize {
        2
    }
    fn value(&self, x: &[f64]) -> f64 {
        100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2)
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let t = x[1] - x[0] * x[0];
        out[0] = -400.0 * x[0] * t - 2.0 * (1.0 - x[0]);
        out[1] = 200.0 * t;
    }
}

pub fn problem(obj: Arc<dyn Objective>, sizes: Vec<usize>, sets: Vec<FeasibleSet>) -> ObjectiveProblem {
    let p = Arc::new(BlockPartition::new(sizes).unwrap());
    ObjectiveProblem::new(obj, p, sets).unwrap()
}

/// `f + g`.
pub struct Sum(pub Arc<dyn Objective>, pub Arc<dyn Objective>);

impl Objective for Sum {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.0.value(x) + self.1.value(x)
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let mut tmp = vec![0.0; out.len()];
        self.0.gradient(x, out);
        self.1.gradient(x, &mut tmp);
        out.iter_mut().zip(tmp).for_each(|(a, b)| *a += b);
    }
}
