use std::ops::Range;

use cbggp_core::{Objective, SeparableQuadratic};

/// `0.5 x^T A x - b^T x`, `A` dense symmetric (row-major).
#[derive(Debug, Clone)]
pub struct Quadratic {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl Quadratic {
    fn n(&self) -> usize {
        self.b.len()
    }

    fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let n = self.n();
        self.a[i * n..(i + 1) * n].iter().zip(x).map(|(a, v)| a * v).sum()
    }

    /// Gershgorin bound on the largest eigenvalue.
    pub fn lipschitz_bound(&self) -> f64 {
        let n = self.n();
        (0..n)
            .map(|i| self.a[i * n..(i + 1) * n].iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Diagonal part `0.5 sum_j A_jj x_j^2 - b^T x` and the remainder `0.5 x^T (A - diag A) x`.
    pub fn diagonal_split(&self) -> (Quadratic, Quadratic) {
        let n = self.n();
        let mut diag = vec![0.0; n * n];
        let mut rest = self.a.clone();
        for j in 0..n {
            diag[j * n + j] = self.a[j * n + j];
            rest[j * n + j] = 0.0;
        }
        (Quadratic { a: diag, b: self.b.clone() }, Quadratic { a: rest, b: vec![0.0; n] })
    }
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.n()
    }

    fn value(&self, x: &[f64]) -> f64 {
        (0..self.n()).map(|i| x[i] * (0.5 * self.row_dot(i, x) - self.b[i])).sum()
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row_dot(i, x) - self.b[i];
        }
    }

    fn hessian_diagonal(&self, _x: &[f64], out: &mut [f64]) -> bool {
        let n = self.n();
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.a[j * n + j];
        }
        true
    }

    fn separable_quadratic(&self, x: &[f64], range: Range<usize>) -> Option<SeparableQuadratic> {
        let n = self.n();
        // Separable on the block iff the block's off-diagonal entries vanish; coupling to the
        // frozen coordinates becomes part of the linear term.
        let mut linear = Vec::with_capacity(range.len());
        for i in range.clone() {
            if range.clone().any(|j| j != i && self.a[i * n + j] != 0.0) {
                return None;
            }
            let coupling: f64 = (0..n).filter(|j| !range.contains(j)).map(|j| self.a[i * n + j] * x[j]).sum();
            linear.push(self.b[i] - coupling);
        }
        Some(SeparableQuadratic {
            curvature: range.clone().map(|i| self.a[i * n + i]).collect(),
            linear,
        })
    }
}

/// `0.5 ||V - W H||_F^2` over `x = (vec W, vec H)`, both row-major.
#[derive(Debug, Clone)]
pub struct Nmf {
    pub v: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
}

impl Nmf {
    fn split<'a>(&self, x: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        x.split_at(self.rows * self.rank)
    }

    /// `W H - V`.
    fn residual(&self, x: &[f64]) -> Vec<f64> {
        let (w, h) = self.split(x);
        let (r, c, k) = (self.rows, self.cols, self.rank);
        let mut out = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                let mut s = -self.v[i * c + j];
                for l in 0..k {
                    s += w[i * k + l] * h[l * c + j];
                }
                out[i * c + j] = s;
            }
        }
        out
    }
}

impl Objective for Nmf {
    fn dim(&self) -> usize {
        self.rank * (self.rows + self.cols)
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * self.residual(x).iter().map(|e| e * e).sum::<f64>()
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let res = self.residual(x);
        let (w, h) = self.split(x);
        let (r, c, k) = (self.rows, self.cols, self.rank);
        let (gw, gh) = out.split_at_mut(r * k);
        for i in 0..r {
            for l in 0..k {
                gw[i * k + l] = (0..c).map(|j| res[i * c + j] * h[l * c + j]).sum();
            }
        }
        for l in 0..k {
            for j in 0..c {
                gh[l * c + j] = (0..r).map(|i| w[i * k + l] * res[i * c + j]).sum();
            }
        }
    }

    fn hessian_diagonal(&self, x: &[f64], out: &mut [f64]) -> bool {
        let (w, h) = self.split(x);
        let (r, c, k) = (self.rows, self.cols, self.rank);
        let (dw, dh) = out.split_at_mut(r * k);
        for l in 0..k {
            let hh: f64 = (0..c).map(|j| h[l * c + j] * h[l * c + j]).sum();
            let ww: f64 = (0..r).map(|i| w[i * k + l] * w[i * k + l]).sum();
            for i in 0..r {
                dw[i * k + l] = hh;
            }
            for j in 0..c {
                dh[l * c + j] = ww;
            }
        }
        true
    }
}

/// `sum_j 100 (x_2j - x_2j-1^2)^2 + (1 - x_2j-1)^2` (1-based pairs), with optional weights
/// on the two terms so the same type serves as both halves of the split.
#[derive(Debug, Clone, Copy)]
pub struct Rosenbrock {
    pub n: usize,
    pub valley: f64,
    pub offset: f64,
}

impl Rosenbrock {
    pub fn full(n: usize) -> Self {
        Self { n, valley: 100.0, offset: 1.0 }
    }
}

impl Objective for Rosenbrock {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[f64]) -> f64 {
        x.chunks_exact(2)
            .map(|p| self.valley * (p[1] - p[0] * p[0]).powi(2) + self.offset * (1.0 - p[0]).powi(2))
            .sum()
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        for (p, g) in x.chunks_exact(2).zip(out.chunks_exact_mut(2)) {
            let t = p[1] - p[0] * p[0];
            g[0] = -4.0 * self.valley * p[0] * t - 2.0 * self.offset * (1.0 - p[0]);
            g[1] = 2.0 * self.valley * t;
        }
    }

    fn hessian_diagonal(&self, x: &[f64], out: &mut [f64]) -> bool {
        for (p, d) in x.chunks_exact(2).zip(out.chunks_exact_mut(2)) {
            d[0] = self.valley * (12.0 * p[0] * p[0] - 4.0 * p[1]) + 2.0 * self.offset;
            d[1] = 2.0 * self.valley;
        }
        true
    }

    fn separable_quadratic(&self, _x: &[f64], range: Range<usize>) -> Option<SeparableQuadratic> {
        if self.valley != 0.0 || !range.start.is_multiple_of(2) || !range.len().is_multiple_of(2) {
            return None;
        }
        // offset (1 - a)^2 = offset a^2 - 2 offset a + offset.
        let curvature = range.clone().map(|j| if j % 2 == 0 { 2.0 * self.offset } else { 0.0 }).collect();
        let linear = range.map(|j| if j % 2 == 0 { 2.0 * self.offset } else { 0.0 }).collect();
        Some(SeparableQuadratic { curvature, linear })
    }
}

/// The zero function.
#[derive(Debug, Clone, Copy)]
pub struct Zero(pub usize);

impl Objective for Zero {
    fn dim(&self) -> usize {
        self.0
    }

    fn value(&self, _x: &[f64]) -> f64 {
        0.0
    }

    fn gradient(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
}
