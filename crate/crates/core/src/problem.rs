//! Block-partitioned points and smooth objectives over a product of convex sets.

use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::sets::FeasibleSet;

/// Sizes `n_1, ..., n_m` of the blocks of a vector in `R^n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPartition {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
}

impl BlockPartition {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(invalid("a partition needs at least one block"));
        }
        if let Some(i) = sizes.iter().position(|&s| s == 0) {
            return Err(invalid(format!("block {i} is empty")));
        }
        let mut offsets = Vec::with_capacity(sizes.len() + 1);
        offsets.push(0);
        for s in &sizes {
            offsets.push(offsets.last().unwrap() + s);
        }
        Ok(Self { sizes, offsets })
    }

    /// `n` coordinates as one block.
    pub fn single(n: usize) -> Result<Self> {
        Self::new(vec![n])
    }

    /// Splits `n` coordinates into `m` contiguous blocks whose sizes differ by at most one
    /// (the first `n mod m` blocks get the extra coordinate).
    pub fn uniform(n: usize, m: usize) -> Result<Self> {
        if m == 0 || m > n {
            return Err(invalid(format!("cannot split {n} coordinates into {m} blocks")));
        }
        let (q, r) = (n / m, n % m);
        Self::new((0..m).map(|i| q + usize::from(i < r)).collect())
    }

    pub fn num_blocks(&self) -> usize {
        self.sizes.len()
    }

    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn size(&self, block: usize) -> usize {
        self.sizes[block]
    }

    /// Coordinate range of `block` inside the full vector.
    pub fn range(&self, block: usize) -> Range<usize> {
        self.offsets[block]..self.offsets[block + 1]
    }

    pub fn check_block(&self, block: usize) -> Result<()> {
        if block >= self.num_blocks() {
            return Err(invalid(format!(
                "block index {block} out of range (m = {})",
                self.num_blocks()
            )));
        }
        Ok(())
    }

    pub fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(invalid(format!(
                "dimension mismatch: got {len}, expected {}",
                self.dim()
            )));
        }
        Ok(())
    }
}

/// A dense point of `R^n` together with its block structure.
#[derive(Clone, PartialEq)]
pub struct Point {
    values: Vec<f64>,
    partition: Arc<BlockPartition>,
}

impl Point {
    pub fn new(values: Vec<f64>, partition: Arc<BlockPartition>) -> Result<Self> {
        partition.check_len(values.len())?;
        Ok(Self { values, partition })
    }

    /// Reassembles a point from its block views.
    pub fn assemble(blocks: &[Vec<f64>], partition: Arc<BlockPartition>) -> Result<Self> {
        if blocks.len() != partition.num_blocks() {
            return Err(invalid(format!(
                "expected {} blocks, got {}",
                partition.num_blocks(),
                blocks.len()
            )));
        }
        let mut values = Vec::with_capacity(partition.dim());
        for (i, b) in blocks.iter().enumerate() {
            if b.len() != partition.size(i) {
                return Err(invalid(format!(
                    "block {i} has {} entries, expected {}",
                    b.len(),
                    partition.size(i)
                )));
            }
            values.extend_from_slice(b);
        }
        Ok(Self { values, partition })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn partition(&self) -> &Arc<BlockPartition> {
        &self.partition
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn block(&self, i: usize) -> &[f64] {
        &self.values[self.partition.range(i)]
    }

    pub fn block_mut(&mut self, i: usize) -> &mut [f64] {
        let r = self.partition.range(i);
        &mut self.values[r]
    }

    /// Copy of `self` with block `i` replaced by `block`.
    pub fn with_block(&self, i: usize, block: &[f64]) -> Result<Self> {
        self.partition.check_block(i)?;
        if block.len() != self.partition.size(i) {
            return Err(invalid(format!(
                "block {i} has {} entries, expected {}",
                block.len(),
                self.partition.size(i)
            )));
        }
        let mut out = self.clone();
        out.block_mut(i).copy_from_slice(block);
        Ok(out)
    }

    pub fn split(&self) -> Vec<Vec<f64>> {
        (0..self.partition.num_blocks())
            .map(|i| self.block(i).to_vec())
            .collect()
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Point")
            .field("values", &self.values)
            .field("blocks", &self.partition.sizes())
            .finish()
    }
}

/// Restriction of an objective to one block when it is a separable quadratic there:
/// `z -> sum_j (curvature_j / 2) z_j^2 - linear_j z_j + const`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableQuadratic {
    pub curvature: Vec<f64>,
    pub linear: Vec<f64>,
}

/// A smooth function on `R^n` with an analytic gradient.
///
/// Implementations must be deterministic: equal inputs give bitwise-equal outputs.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Writes `grad f(x)` into `out` (length `dim`).
    fn gradient(&self, x: &[f64], out: &mut [f64]);

    /// Diagonal of the Hessian at `x`, if the objective can provide it cheaply.
    /// Used to build diagonal scalings. Returns `false` when unavailable.
    fn hessian_diagonal(&self, _x: &[f64], _out: &mut [f64]) -> bool {
        false
    }

    /// Closed form of the objective restricted to `range` (other coordinates frozen at `x`),
    /// when that restriction is a separable quadratic with nonnegative curvature.
    fn separable_quadratic(&self, _x: &[f64], _range: Range<usize>) -> Option<SeparableQuadratic> {
        None
    }
}

/// What is known about the curvature of the objective, per block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Convexity {
    /// Jointly convex.
    Convex,
    /// Convex in each block with the other blocks held fixed.
    BlockConvex,
    /// Each block restriction plus `(modulus/2)||.||^2` is convex on the block's feasible set.
    Weak { modulus: f64 },
    Nonconvex,
}

impl Convexity {
    /// Smallest strong-convexity modulus a proximal term must exceed so that
    /// `f(., y_{-i}) + d(., y_i)` is strictly convex on a block. `None` when no bound is known.
    pub fn block_modulus(&self) -> Option<f64> {
        match self {
            Convexity::Convex | Convexity::BlockConvex => Some(0.0),
            Convexity::Weak { modulus } => Some(*modulus),
            Convexity::Nonconvex => None,
        }
    }
}

/// A split `f = f0 + f1` with `f0` convex in each block.
#[derive(Clone)]
pub struct SmoothSplit {
    pub convex: Arc<dyn Objective>,
    pub smooth: Arc<dyn Objective>,
}

/// `min f(x)` over `Omega_1 x ... x Omega_m`.
#[derive(Clone)]
pub struct ObjectiveProblem {
    partition: Arc<BlockPartition>,
    sets: Vec<FeasibleSet>,
    objective: Arc<dyn Objective>,
    convexity: Convexity,
    split: Option<SmoothSplit>,
}

impl ObjectiveProblem {
    pub fn new(
        objective: Arc<dyn Objective>,
        partition: Arc<BlockPartition>,
        sets: Vec<FeasibleSet>,
    ) -> Result<Self> {
        partition.check_len(objective.dim())?;
        if sets.len() != partition.num_blocks() {
            return Err(invalid(format!(
                "{} feasible sets for {} blocks",
                sets.len(),
                partition.num_blocks()
            )));
        }
        for (i, s) in sets.iter().enumerate() {
            if s.dim() != partition.size(i) {
                return Err(invalid(format!(
                    "feasible set {i} has dimension {}, block has {}",
                    s.dim(),
                    partition.size(i)
                )));
            }
        }
        Ok(Self {
            partition,
            sets,
            objective,
            convexity: Convexity::Nonconvex,
            split: None,
        })
    }

    pub fn with_convexity(mut self, convexity: Convexity) -> Self {
        self.convexity = convexity;
        self
    }

    pub fn with_split(mut self, split: SmoothSplit) -> Result<Self> {
        let n = self.dim();
        if split.convex.dim() != n || split.smooth.dim() != n {
            return Err(invalid("split parts must have the problem dimension"));
        }
        self.split = Some(split);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.partition.dim()
    }

    pub fn num_blocks(&self) -> usize {
        self.partition.num_blocks()
    }

    pub fn partition(&self) -> &Arc<BlockPartition> {
        &self.partition
    }

    pub fn sets(&self) -> &[FeasibleSet] {
        &self.sets
    }

    pub fn set(&self, block: usize) -> &FeasibleSet {
        &self.sets[block]
    }

    pub fn objective(&self) -> &Arc<dyn Objective> {
        &self.objective
    }

    pub fn convexity(&self) -> Convexity {
        self.convexity
    }

    pub fn split(&self) -> Option<&SmoothSplit> {
        self.split.as_ref()
    }

    /// Wraps raw values in a [`Point`] carrying this problem's partition.
    pub fn point(&self, values: Vec<f64>) -> Result<Point> {
        Point::new(values, Arc::clone(&self.partition))
    }

    pub fn eval_objective(&self, x: &Point) -> Result<f64> {
        self.partition.check_len(x.dim())?;
        Ok(self.objective.value(x.values()))
    }

    pub fn gradient(&self, x: &Point) -> Result<Vec<f64>> {
        self.partition.check_len(x.dim())?;
        let mut g = vec![0.0; self.dim()];
        self.objective.gradient(x.values(), &mut g);
        Ok(g)
    }

    /// `grad_i f(x)`: the block-`i` slice of the full gradient.
    pub fn block_gradient(&self, x: &Point, block: usize) -> Result<Vec<f64>> {
        self.partition.check_block(block)?;
        let g = self.gradient(x)?;
        Ok(g[self.partition.range(block)].to_vec())
    }

    /// True when every block lies in its set up to `tol`.
    pub fn is_feasible(&self, x: &Point, tol: f64) -> Result<bool> {
        self.partition.check_len(x.dim())?;
        for (i, set) in self.sets.iter().enumerate() {
            if !set.contains(x.block(i), tol)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

impl fmt::Debug for ObjectiveProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ObjectiveProblem")
            .field("partition", &self.partition)
            .field("sets", &self.sets)
            .field("convexity", &self.convexity)
            .field("split", &self.split.is_some())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::{HalfSqNorm, Rosenbrock2};
    use proptest::prelude::*;

    fn sq_problem(sizes: Vec<usize>) -> ObjectiveProblem {
        let p = Arc::new(BlockPartition::new(sizes).unwrap());
        let sets = p
            .sizes()
            .iter()
            .map(|&s| FeasibleSet::unbounded(s))
            .collect();
        ObjectiveProblem::new(Arc::new(HalfSqNorm::new(p.dim())), p, sets).unwrap()
    }

    #[test]
    fn partition_rejects_empty_blocks() {
        assert!(BlockPartition::new(vec![]).is_err());
        assert!(BlockPartition::new(vec![2, 0]).is_err());
        let p = BlockPartition::uniform(7, 3).unwrap();
        assert_eq!(p.sizes(), &[3, 2, 2]);
        assert_eq!(p.dim(), 7);
        assert_eq!(p.range(2), 5..7);
        assert!(BlockPartition::uniform(2, 3).is_err());
    }

    #[test]
    fn eval_objective_examples() {
        let pr = sq_problem(vec![2]);
        assert_eq!(pr.eval_objective(&pr.point(vec![0.0, 0.0]).unwrap()).unwrap(), 0.0);
        assert_eq!(pr.eval_objective(&pr.point(vec![1.0, 2.0]).unwrap()).unwrap(), 2.5);
        let wrong = Point::new(vec![1.0; 3], Arc::new(BlockPartition::single(3).unwrap())).unwrap();
        assert!(matches!(
            pr.eval_objective(&wrong),
            Err(crate::Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn block_gradient_examples() {
        let pr = sq_problem(vec![1, 2]);
        let x = pr.point(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(pr.block_gradient(&x, 1).unwrap(), vec![2.0, 3.0]);
        assert!(pr.block_gradient(&x, 2).is_err());

        let p = Arc::new(BlockPartition::new(vec![1, 1]).unwrap());
        let ros = ObjectiveProblem::new(
            Arc::new(Rosenbrock2),
            p,
            vec![FeasibleSet::unbounded(1), FeasibleSet::unbounded(1)],
        )
        .unwrap();
        let x = ros.point(vec![1.0, 1.0]).unwrap();
        assert_eq!(ros.block_gradient(&x, 0).unwrap(), vec![0.0]);
    }

    proptest! {
        #[test]
        fn split_assemble_is_identity(sizes in prop::collection::vec(1usize..5, 1..5), seed in any::<u64>()) {
            let p = Arc::new(BlockPartition::new(sizes).unwrap());
            let vals: Vec<f64> = (0..p.dim()).map(|j| ((seed.wrapping_mul(j as u64 + 1)) as f64).sin()).collect();
            let x = Point::new(vals.clone(), Arc::clone(&p)).unwrap();
            let back = Point::assemble(&x.split(), p).unwrap();
            prop_assert_eq!(back.values(), &vals[..]);
        }

        #[test]
        fn block_gradients_concatenate_to_gradient(sizes in prop::collection::vec(1usize..4, 1..4), seed in any::<u32>()) {
            let pr = sq_problem(sizes);
            let vals: Vec<f64> = (0..pr.dim()).map(|j| (seed as f64 + j as f64).cos()).collect();
            let x = pr.point(vals).unwrap();
            let full = pr.gradient(&x).unwrap();
            let cat: Vec<f64> = (0..pr.num_blocks()).flat_map(|i| pr.block_gradient(&x, i).unwrap()).collect();
            prop_assert_eq!(cat, full);
        }
    }
}
