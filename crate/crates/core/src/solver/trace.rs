/// Cumulative work counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    pub objective_evals: u64,
    pub gradient_evals: u64,
    pub projections: u64,
    pub backtracks: u64,
}

/// One row of convergence history.
///
/// `block` and `inner` are `-1` on outer-iteration summaries; `inner` is `-1` on the
/// per-block rows that mark a partial update `z(k, i)`. Fields that do not apply to a row
/// are `NaN`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    pub block: i64,
    pub inner: i64,
    pub f: f64,
    pub residual: f64,
    pub lambda: f64,
    pub sigma: f64,
    pub elapsed_ms: f64,
    pub counters: Counters,
}

impl TraceRecord {
    pub fn is_outer(&self) -> bool {
        self.block < 0
    }

    pub fn is_inner(&self) -> bool {
        self.block >= 0 && self.inner >= 0
    }
}

/// How much history a solve records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraceLevel {
    /// One row per outer iteration.
    #[default]
    Outer,
    /// Additionally one row per inner step and one per partial update.
    Inner,
}
