//! Dyadic hierarchical partition of a box domain.
//!
//! Every algorithm in this crate searches the unit cube `[0,1]^D`; a
//! [`BoxDomain`] maps that cube affinely onto the user's decision box. A depth
//! `h` cell has edge `2^-h` on every axis and is identified by its integer
//! per-axis coordinates, so `(depth, index)` with a row-major index is a stable
//! global key.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Deepest depth a cell can have in dimension `dim`.
///
/// Per-axis coordinates are `u64` and the row-major index is `u128`, so
/// `depth <= 62` and `dim * depth <= 128`.
pub fn max_supported_depth(dim: usize) -> u32 {
    (128 / dim.max(1)).min(62) as u32
}

/// Axis-aligned decision box with an affine bijection to the unit cube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::InvalidInput("domain must have at least one axis".into()));
        }
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), got: upper.len() });
        }
        if lower.iter().zip(&upper).any(|(lo, hi)| !(lo < hi) || !lo.is_finite() || !hi.is_finite()) {
            return Err(Error::InvalidInput(format!("degenerate box {lower:?} .. {upper:?}")));
        }
        Ok(Self { lower, upper })
    }

    /// `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn unit(dim: usize) -> Self {
        Self { lower: vec![0.0; dim], upper: vec![1.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Largest side length. A unit-cube distance `d` maps to at most
    /// `max_width() * d` in the original box.
    pub fn max_width(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(lo, hi)| hi - lo).fold(0.0, f64::max)
    }

    /// Maps a unit-cube point into the box. Corners map exactly onto corners.
    pub fn to_original(&self, unit: &[f64]) -> Vec<f64> {
        unit.iter().zip(self.lower.iter().zip(&self.upper)).map(|(&u, (&lo, &hi))| (1.0 - u) * lo + u * hi).collect()
    }

    pub fn to_unit(&self, point: &[f64]) -> Vec<f64> {
        point.iter().zip(self.lower.iter().zip(&self.upper)).map(|(&x, (&lo, &hi))| (x - lo) / (hi - lo)).collect()
    }

    /// Membership with a relative slack of `1e-9` of each side length.
    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dim()
            && point.iter().zip(self.lower.iter().zip(&self.upper)).all(|(&x, (&lo, &hi))| {
                let slack = 1e-9 * (hi - lo);
                x >= lo - slack && x <= hi + slack
            })
    }

    pub fn check(&self, point: &[f64]) -> Result<()> {
        if point.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: point.len() });
        }
        if !self.contains(point) {
            return Err(Error::OutOfDomain { point: point.to_vec() });
        }
        Ok(())
    }

    /// Regular grid with `per_axis` points per axis including both faces,
    /// row-major with axis 0 slowest.
    pub fn grid(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let dim = self.dim();
        let total = per_axis.pow(dim as u32);
        let mut points = Vec::with_capacity(total);
        let mut digits = vec![0usize; dim];
        for _ in 0..total {
            let unit: Vec<f64> =
                digits.iter().map(|&d| if per_axis == 1 { 0.5 } else { d as f64 / (per_axis - 1) as f64 }).collect();
            points.push(self.to_original(&unit));
            for axis in (0..dim).rev() {
                digits[axis] += 1;
                if digits[axis] < per_axis {
                    break;
                }
                digits[axis] = 0;
            }
        }
        points
    }
}

/// A cell `𝒫_{h,i}` of the dyadic partition of the unit cube.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    depth: u32,
    coords: Vec<u64>,
}

/// The depth-0 cell covering `[0,1]^dim`.
pub fn root(dim: usize) -> Cell {
    Cell { depth: 0, coords: vec![0; dim] }
}

/// The `2^D` children of `cell`, ordered row-major with axis 0 most significant.
pub fn children(cell: &Cell) -> Vec<Cell> {
    cell.children()
}

impl Cell {
    /// Builds a cell from its depth and per-axis integer coordinates.
    pub fn from_coords(depth: u32, coords: Vec<u64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidInput("cell needs at least one axis".into()));
        }
        if depth > max_supported_depth(coords.len()) {
            return Err(Error::InvalidInput(format!(
                "depth {depth} exceeds the supported maximum {} for dimension {}",
                max_supported_depth(coords.len()),
                coords.len()
            )));
        }
        let side = 1u64 << depth;
        if coords.iter().any(|&c| c >= side) {
            return Err(Error::InvalidInput(format!("coordinates {coords:?} out of range at depth {depth}")));
        }
        Ok(Self { depth, coords })
    }

    /// Cell at `depth` containing the unit-cube point `unit` (faces belong
    /// to the upper cell, except the cube's upper face).
    pub fn containing(unit: &[f64], depth: u32) -> Result<Self> {
        let side = 1u64 << depth;
        let coords = unit.iter().map(|&u| ((u * side as f64).floor().max(0.0) as u64).min(side - 1)).collect();
        Self::from_coords(depth, coords)
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[u64] {
        &self.coords
    }

    /// Row-major position among the `2^(D·h)` cells of this depth.
    pub fn index(&self) -> u128 {
        self.coords.iter().fold(0u128, |acc, &c| (acc << self.depth) | c as u128)
    }

    pub fn edge(&self) -> f64 {
        (-(self.depth as f64)).exp2()
    }

    pub fn lower(&self) -> Vec<f64> {
        let edge = self.edge();
        self.coords.iter().map(|&c| c as f64 * edge).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        let edge = self.edge();
        self.coords.iter().map(|&c| (c + 1) as f64 * edge).collect()
    }

    pub fn center(&self) -> Vec<f64> {
        let edge = self.edge();
        self.coords.iter().map(|&c| (c as f64 + 0.5) * edge).collect()
    }

    /// Euclidean diameter `√D · 2^-h`.
    pub fn diameter(&self) -> f64 {
        (self.dim() as f64).sqrt() * self.edge()
    }

    pub fn contains(&self, unit: &[f64]) -> bool {
        let edge = self.edge();
        unit.len() == self.dim()
            && unit.iter().zip(&self.coords).all(|(&u, &c)| {
                let lo = c as f64 * edge;
                u >= lo && u <= lo + edge
            })
    }

    pub fn children(&self) -> Vec<Cell> {
        let dim = self.dim();
        (0..1usize << dim)
            .map(|j| Cell {
                depth: self.depth + 1,
                coords: self
                    .coords
                    .iter()
                    .enumerate()
                    .map(|(axis, &c)| 2 * c + ((j >> (dim - 1 - axis)) & 1) as u64)
                    .collect(),
            })
            .collect()
    }

    pub fn parent(&self) -> Option<Cell> {
        (self.depth > 0).then(|| Cell { depth: self.depth - 1, coords: self.coords.iter().map(|c| c / 2).collect() })
    }

    /// Cell center followed by `k - 1` scrambled Halton points inside the
    /// cell. Pure function of `(depth, index, k, salt)`.
    pub fn candidate_points(&self, k: usize, salt: u64) -> Vec<Vec<f64>> {
        let mut points = Vec::with_capacity(k);
        if k == 0 {
            return points;
        }
        points.push(self.center());
        if k == 1 {
            return points;
        }
        let dim = self.dim();
        let index = self.index();
        let key = splitmix64(
            splitmix64(self.depth as u64 ^ salt.rotate_left(17)) ^ (index as u64) ^ splitmix64((index >> 64) as u64),
        );
        let shifts: Vec<f64> = (0..dim).map(|axis| unit_from_bits(splitmix64(key ^ (axis as u64 + 1)))).collect();
        let lower = self.lower();
        let edge = self.edge();
        for j in 1..k as u64 {
            let point = (0..dim)
                .map(|axis| {
                    let mut u = (radical_inverse(j, prime(axis)) + shifts[axis]).fract();
                    if u == 0.0 {
                        u = 0.5;
                    }
                    lower[axis] + u * edge
                })
                .collect();
            points.push(point);
        }
        points
    }
}

/// Knobs shared by the tree-search algorithms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PartitionConfig {
    /// Candidate points per cell searched when picking a representative.
    pub candidates: usize,
    /// Salt for the candidate-point scrambling.
    pub salt: u64,
    /// Cells at this depth are never opened. `None` means the dimension's
    /// supported maximum.
    pub max_depth: Option<u32>,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        Self { candidates: 9, salt: 0, max_depth: None }
    }
}

impl PartitionConfig {
    pub fn with_candidates(candidates: usize) -> Self {
        Self { candidates, ..Self::default() }
    }

    pub fn depth_limit(&self, dim: usize) -> u32 {
        let cap = max_supported_depth(dim);
        self.max_depth.map_or(cap, |d| d.min(cap))
    }

    pub fn validate(&self) -> Result<()> {
        if self.candidates == 0 {
            return Err(Error::InvalidInput("candidates must be at least 1".into()));
        }
        Ok(())
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn unit_from_bits(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn radical_inverse(mut n: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut out = 0.0;
    while n > 0 {
        out += (n % base) as f64 * scale;
        n /= base;
        scale *= inv;
    }
    out
}

fn prime(axis: usize) -> u64 {
    const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];
    if axis < PRIMES.len() {
        return PRIMES[axis];
    }
    let mut candidate = PRIMES[PRIMES.len() - 1];
    let mut found = PRIMES.len() - 1;
    while found < axis {
        candidate += 2;
        if (3..).step_by(2).take_while(|d| d * d <= candidate).all(|d| !candidate.is_multiple_of(d)) {
            found += 1;
        }
    }
    candidate
}
