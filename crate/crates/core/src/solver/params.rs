use crate::linesearch::dot;
use crate::metric::ParameterBounds;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BbKind {
    /// `s^T s / s^T g`.
    Bb1,
    /// `s^T g / g^T g`.
    Bb2,
}

/// How the steplength-like parameter `sigma` (or `alpha`) of each inner iteration is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParameterRule {
    Fixed { sigma: f64 },
    /// Barzilai-Borwein quotient from the last block step and gradient change.
    BarzilaiBorwein { kind: BbKind, fallback: f64 },
    /// BB1 for `period` block iterations, then BB2 for `period`, and so on.
    AlternatingBb { period: usize, fallback: f64 },
}

impl ParameterRule {
    pub fn fallback(&self) -> f64 {
        match self {
            ParameterRule::Fixed { sigma } => *sigma,
            ParameterRule::BarzilaiBorwein { fallback, .. } | ParameterRule::AlternatingBb { fallback, .. } => {
                *fallback
            }
        }
    }
}

/// Step `s = x_new - x_old` and gradient change `g = grad_new - grad_old` of one block.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvaturePair {
    pub step: Vec<f64>,
    pub grad_change: Vec<f64>,
}

/// Picks `s_i` for the next inner iteration. Always returns a value inside the bounds.
pub fn choose_parameters(
    rule: &ParameterRule,
    pair: Option<&CurvaturePair>,
    iteration: usize,
    bounds: &ParameterBounds,
) -> f64 {
    let kind = match rule {
        ParameterRule::Fixed { sigma } => return bounds.clamp_sigma(*sigma),
        ParameterRule::BarzilaiBorwein { kind, .. } => *kind,
        ParameterRule::AlternatingBb { period, .. } => {
            if (iteration / (*period).max(1)).is_multiple_of(2) {
                BbKind::Bb1
            } else {
                BbKind::Bb2
            }
        }
    };
    let quotient = pair.map(|p| {
        let sy = dot(&p.step, &p.grad_change);
        match kind {
            BbKind::Bb1 => dot(&p.step, &p.step) / sy,
            BbKind::Bb2 => sy / dot(&p.grad_change, &p.grad_change),
        }
    });
    match quotient {
        Some(q) if q > 0.0 && q.is_finite() => bounds.clamp_sigma(q),
        _ => bounds.clamp_sigma(rule.fallback()),
    }
}

/// Per-block memory for the BB rules.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BlockHistory {
    last: Option<(Vec<f64>, Vec<f64>)>,
    /// Parameter choices made for this block so far.
    pub iterations: usize,
}

impl BlockHistory {
    /// Curvature pair between the remembered state and `(x, g)`.
    pub fn pair(&self, x: &[f64], g: &[f64]) -> Option<CurvaturePair> {
        self.last.as_ref().map(|(xo, go)| CurvaturePair {
            step: x.iter().zip(xo).map(|(a, b)| a - b).collect(),
            grad_change: g.iter().zip(go).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn remember(&mut self, x: &[f64], g: &[f64]) {
        self.last = Some((x.to_vec(), g.to_vec()));
        self.iterations += 1;
    }

    pub fn reset(&mut self) {
        self.last = None;
    }
}
