//! Dyadic intervals of (0,1], step functions at a fixed depth, averages and Haar analysis.
//!
//! A dyadic interval at level `j` with index `k` is `(k 2^-j, (k+1) 2^-j]`. The left child is
//! called `I+` throughout the crate, and the Haar difference is
//! `Δ_I f = <f>_{I+} - <f>_{I-}` with no factor of one half.

use std::fmt;

use crate::error::{input, Error, Result};

/// Deepest supported lattice; `2^30` cells is already well beyond desk-scale memory.
pub const MAX_DEPTH: u32 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyadicInterval {
    level: u32,
    index: u32,
}

impl DyadicInterval {
    pub const ROOT: DyadicInterval = DyadicInterval { level: 0, index: 0 };

    pub fn new(level: u32, index: u32) -> Result<Self> {
        if level > MAX_DEPTH {
            return input(format!("level {level} exceeds maximum depth {MAX_DEPTH}"));
        }
        if (index as u64) >= (1u64 << level) {
            return input(format!("index {index} out of range for level {level}"));
        }
        Ok(Self { level, index })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn index(&self) -> u32 {
        self.index
    }

    /// `|I| = 2^-level`.
    pub fn length(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    /// Left endpoint (open) and right endpoint (closed).
    pub fn bounds(&self) -> (f64, f64) {
        let len = self.length();
        (self.index as f64 * len, (self.index as f64 + 1.0) * len)
    }

    /// The left child `I+`.
    pub fn left(&self) -> Self {
        Self {
            level: self.level + 1,
            index: 2 * self.index,
        }
    }

    /// The right child `I-`.
    pub fn right(&self) -> Self {
        Self {
            level: self.level + 1,
            index: 2 * self.index + 1,
        }
    }

    pub fn parent(&self) -> Option<Self> {
        (self.level > 0).then(|| Self {
            level: self.level - 1,
            index: self.index / 2,
        })
    }

    /// True when `self ⊆ other`.
    pub fn is_within(&self, other: &DyadicInterval) -> bool {
        self.level >= other.level && (self.index >> (self.level - other.level)) == other.index
    }

    /// True when `self ⊊ other`.
    pub fn is_strictly_within(&self, other: &DyadicInterval) -> bool {
        self.level > other.level && self.is_within(other)
    }

    /// Half-open range of leaf cells covered at lattice depth `depth`.
    pub fn cell_range(&self, depth: u32) -> std::ops::Range<usize> {
        debug_assert!(self.level <= depth);
        let shift = depth - self.level;
        let start = (self.index as usize) << shift;
        start..start + (1usize << shift)
    }

    /// The ancestor of this interval at `level` (itself when the levels agree).
    pub fn ancestor_at(&self, level: u32) -> Option<Self> {
        (level <= self.level).then(|| Self {
            level,
            index: self.index >> (self.level - level),
        })
    }

    /// All intervals of the lattice up to and including `max_level`, level by level.
    pub fn all_up_to(max_level: u32) -> impl Iterator<Item = DyadicInterval> {
        (0..=max_level).flat_map(|level| (0..(1u32 << level)).map(move |index| Self { level, index }))
    }
}

impl fmt::Display for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = self.bounds();
        write!(f, "I({},{}) = ({a}, {b}]", self.level, self.index)
    }
}

/// A real function on (0,1] that is constant on each of the `2^depth` dyadic cells.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    depth: u32,
    cells: Vec<f64>,
}

impl StepFunction {
    pub fn new(depth: u32, cells: Vec<f64>) -> Result<Self> {
        if depth > MAX_DEPTH {
            return input(format!("depth {depth} exceeds maximum depth {MAX_DEPTH}"));
        }
        if cells.len() != 1usize << depth {
            return input(format!(
                "depth {depth} needs {} cells, got {}",
                1usize << depth,
                cells.len()
            ));
        }
        if let Some(k) = cells.iter().position(|c| !c.is_finite()) {
            return input(format!("cell {k} is not finite"));
        }
        Ok(Self { depth, cells })
    }

    pub fn constant(depth: u32, value: f64) -> Result<Self> {
        if depth > MAX_DEPTH {
            return input(format!("depth {depth} exceeds maximum depth {MAX_DEPTH}"));
        }
        Self::new(depth, vec![value; 1usize << depth])
    }

    /// Builds a step function from the value on each cell index.
    pub fn from_fn(depth: u32, f: impl FnMut(usize) -> f64) -> Result<Self> {
        if depth > MAX_DEPTH {
            return input(format!("depth {depth} exceeds maximum depth {MAX_DEPTH}"));
        }
        Self::new(depth, (0..1usize << depth).map(f).collect())
    }

    /// Indicator of a dyadic interval.
    pub fn indicator(depth: u32, interval: DyadicInterval) -> Result<Self> {
        if interval.level() > depth {
            return input("interval finer than the lattice");
        }
        let range = interval.cell_range(depth);
        Self::from_fn(depth, |k| if range.contains(&k) { 1.0 } else { 0.0 })
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn into_cells(self) -> Vec<f64> {
        self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Length of one cell, `2^-depth`.
    pub fn cell_length(&self) -> f64 {
        (-(self.depth as f64)).exp2()
    }

    pub fn integral(&self) -> f64 {
        pairwise_sum(&self.cells) * self.cell_length()
    }

    pub fn is_zero(&self) -> bool {
        self.cells.iter().all(|&c| c == 0.0)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.depth, self.cells.iter().map(|&c| f(c)).collect())
    }

    /// Pointwise combination of two step functions of the same depth.
    pub fn zip_with(&self, other: &StepFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.depth != other.depth {
            return input(format!(
                "depth mismatch: {} vs {}",
                self.depth, other.depth
            ));
        }
        Self::new(
            self.depth,
            self.cells
                .iter()
                .zip(&other.cells)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn mul(&self, other: &StepFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    /// The same function viewed on a finer lattice: every cell is split into `2^(depth - self.depth)` equal cells.
    pub fn refine(&self, depth: u32) -> Result<Self> {
        if depth < self.depth {
            return input("cannot refine to a coarser depth");
        }
        let shift = depth - self.depth;
        Self::from_fn(depth, |k| self.cells[k >> shift])
    }

    fn check_level(&self, interval: &DyadicInterval) -> Result<()> {
        if interval.level() > self.depth {
            return input(format!(
                "interval level {} exceeds function depth {}",
                interval.level(),
                self.depth
            ));
        }
        Ok(())
    }

    fn check_non_leaf(&self, interval: &DyadicInterval) -> Result<()> {
        if interval.level() >= self.depth {
            return input(format!(
                "interval {interval} is a leaf at depth {}; it has no Haar scale",
                self.depth
            ));
        }
        Ok(())
    }
}

/// Sum with pairwise (tree) reduction for reproducible rounding.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Mean of `f` over `I`, `(1/|I|) ∫_I f`.
pub fn average(f: &StepFunction, interval: DyadicInterval) -> Result<f64> {
    f.check_level(&interval)?;
    let range = interval.cell_range(f.depth);
    let n = range.len() as f64;
    Ok(pairwise_sum(&f.cells[range]) / n)
}

/// `Δ_I f = <f>_{I+} - <f>_{I-}`.
pub fn haar_diff(f: &StepFunction, interval: DyadicInterval) -> Result<f64> {
    f.check_non_leaf(&interval)?;
    Ok(average(f, interval.left())? - average(f, interval.right())?)
}

/// `(f, h_I)` for the `L²`-normalised Haar function `h_I = ±|I|^{-1/2}` on `I±`.
pub fn haar_coefficient(f: &StepFunction, interval: DyadicInterval) -> Result<f64> {
    let delta = haar_diff(f, interval)?;
    Ok(0.5 * interval.length().sqrt() * delta)
}

/// Averages of a step function on every dyadic interval of its lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct AverageTree {
    depth: u32,
    /// `levels[j][k]` is the average over `(j, k)`.
    levels: Vec<Vec<f64>>,
}

impl AverageTree {
    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn get(&self, interval: DyadicInterval) -> f64 {
        self.levels[interval.level() as usize][interval.index() as usize]
    }

    pub fn level(&self, level: u32) -> &[f64] {
        &self.levels[level as usize]
    }

    pub fn root(&self) -> f64 {
        self.levels[0][0]
    }

    /// `Δ_I` read off the tree; `I` must be a non-leaf interval.
    pub fn delta(&self, interval: DyadicInterval) -> f64 {
        let child = &self.levels[interval.level() as usize + 1];
        let k = 2 * interval.index() as usize;
        child[k] - child[k + 1]
    }
}

/// Builds all averages bottom-up in a single pass.
pub fn build_average_tree(f: &StepFunction) -> AverageTree {
    let mut levels = Vec::with_capacity(f.depth as usize + 1);
    levels.push(f.cells.clone());
    for _ in 0..f.depth {
        let finer = levels.last().expect("at least one level");
        let coarser: Vec<f64> = finer.chunks_exact(2).map(|p| 0.5 * (p[0] + p[1])).collect();
        levels.push(coarser);
    }
    levels.reverse();
    AverageTree {
        depth: f.depth,
        levels,
    }
}

impl TryFrom<(u32, Vec<f64>)> for StepFunction {
    type Error = Error;

    fn try_from((depth, cells): (u32, Vec<f64>)) -> Result<Self> {
        Self::new(depth, cells)
    }
}
