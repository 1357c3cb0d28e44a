//! Periodic grids on the unit torus `[0,1)^{2n}` and centered finite differences.

use crate::error::{Error, Result};

/// Real axes supported by the stencil tables (complex dimension ≤ 2).
pub const MAX_AXES: usize = 4;

/// Uniform periodic grid with unit period on every real axis.
///
/// Axis `2a` and `2a+1` carry the real and imaginary parts of the complex
/// coordinate `z_a` for the standard structure. Points are stored row-major
/// with the last axis fastest.
#[derive(Debug, Clone)]
pub struct PeriodicGrid {
    n: usize,
    sizes: Vec<usize>,
    spacing: Vec<f64>,
    strides: Vec<usize>,
    neighbors: Vec<u32>,
    stride_per_point: usize,
}

impl PartialEq for PeriodicGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.sizes == other.sizes
    }
}

/// First and second centered differences of a field at one point.
#[derive(Debug, Clone, Copy, Default)]
pub struct Derivatives {
    pub first: [f64; MAX_AXES],
    pub second: [[f64; MAX_AXES]; MAX_AXES],
}

fn pair_count(d: usize) -> usize {
    d * (d.saturating_sub(1)) / 2
}

impl PeriodicGrid {
    /// `n` complex dimensions with `sizes.len() == 2n` real axes.
    pub fn new(n: usize, sizes: &[usize]) -> Result<Self> {
        if !(1..=2).contains(&n) {
            return Err(Error::Argument(format!(
                "complex dimension must be 1 or 2, got {n}"
            )));
        }
        if sizes.len() != 2 * n {
            return Err(Error::Argument(format!(
                "need {} axis sizes for n = {n}, got {}",
                2 * n,
                sizes.len()
            )));
        }
        if let Some(bad) = sizes.iter().find(|&&s| s < 4 || s % 2 != 0) {
            return Err(Error::Argument(format!(
                "axis sizes must be even and >= 4, got {bad}"
            )));
        }
        let d = sizes.len();
        let mut strides = vec![1; d];
        for a in (0..d - 1).rev() {
            strides[a] = strides[a + 1] * sizes[a + 1];
        }
        let total: usize = sizes.iter().product();
        if total > u32::MAX as usize {
            return Err(Error::Argument("grid too large".into()));
        }
        let spacing = sizes.iter().map(|&s| 1.0 / s as f64).collect();
        let stride_per_point = 2 * d + 4 * pair_count(d);
        let mut grid = Self {
            n,
            sizes: sizes.to_vec(),
            spacing,
            strides,
            neighbors: Vec::new(),
            stride_per_point,
        };
        grid.neighbors = grid.build_neighbors();
        Ok(grid)
    }

    /// `size` points along each of the `2n` axes.
    pub fn cubic(n: usize, size: usize) -> Result<Self> {
        Self::new(n, &vec![size; 2 * n])
    }

    fn build_neighbors(&self) -> Vec<u32> {
        let d = self.axes();
        let mut table = Vec::with_capacity(self.len() * self.stride_per_point);
        let mut coords = vec![0usize; d];
        for idx in 0..self.len() {
            self.coords_into(idx, &mut coords);
            let shift = |c: &[usize], a: usize, s: isize| -> usize {
                let m = self.sizes[a] as isize;
                let ca = (c[a] as isize + s).rem_euclid(m) as usize;
                idx - c[a] * self.strides[a] + ca * self.strides[a]
            };
            for a in 0..d {
                table.push(shift(&coords, a, 1) as u32);
                table.push(shift(&coords, a, -1) as u32);
            }
            for a in 0..d {
                for b in a + 1..d {
                    for (sa, sb) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
                        let p = shift(&coords, a, sa);
                        let m = self.sizes[b] as isize;
                        let cb = (coords[b] as isize + sb).rem_euclid(m) as usize;
                        table.push((p - coords[b] * self.strides[b] + cb * self.strides[b]) as u32);
                    }
                }
            }
        }
        table
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn axes(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn len(&self) -> usize {
        self.sizes.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn coords_into(&self, mut idx: usize, out: &mut [usize]) {
        for a in (0..self.axes()).rev() {
            out[a] = idx % self.sizes[a];
            idx /= self.sizes[a];
        }
    }

    pub fn coords(&self, idx: usize) -> Vec<usize> {
        let mut c = vec![0; self.axes()];
        self.coords_into(idx, &mut c);
        c
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        coords
            .iter()
            .zip(&self.strides)
            .zip(&self.sizes)
            .map(|((c, s), m)| (c % m) * s)
            .sum()
    }

    /// Physical coordinates `x^α = i_α h_α` of a point.
    pub fn position(&self, idx: usize) -> [f64; MAX_AXES] {
        let mut x = [0.0; MAX_AXES];
        let c = self.coords(idx);
        for a in 0..self.axes() {
            x[a] = c[a] as f64 * self.spacing[a];
        }
        x
    }

    /// Centered differences of `u` at point `idx`: first differences
    /// `(u₊ − u₋)/2h`, the 3-point second difference on the diagonal and the
    /// 4-point cross stencil off the diagonal.
    #[inline]
    pub fn derivatives(&self, u: &[f64], idx: usize) -> Derivatives {
        let d = self.axes();
        let nb = &self.neighbors[idx * self.stride_per_point..(idx + 1) * self.stride_per_point];
        let mut out = Derivatives::default();
        let center = u[idx];
        for a in 0..d {
            let (p, m) = (u[nb[2 * a] as usize], u[nb[2 * a + 1] as usize]);
            let h = self.spacing[a];
            out.first[a] = (p - m) / (2.0 * h);
            out.second[a][a] = ((p - 2.0 * center) + m) / (h * h);
        }
        let mut off = 2 * d;
        for a in 0..d {
            for b in a + 1..d {
                let (pp, pm, mp, mm) = (
                    u[nb[off] as usize],
                    u[nb[off + 1] as usize],
                    u[nb[off + 2] as usize],
                    u[nb[off + 3] as usize],
                );
                let v = ((pp - pm) - (mp - mm)) / (4.0 * self.spacing[a] * self.spacing[b]);
                out.second[a][b] = v;
                out.second[b][a] = v;
                off += 4;
            }
        }
        out
    }
}

/// A real function sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(grid: &PeriodicGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &PeriodicGrid, value: f64) -> Self {
        Self {
            values: vec![value; grid.len()],
        }
    }

    pub fn from_fn(grid: &PeriodicGrid, f: impl Fn([f64; MAX_AXES]) -> f64) -> Self {
        Self {
            values: (0..grid.len()).map(|i| f(grid.position(i))).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn shifted(&self, by: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v + by).collect(),
        }
    }

    pub fn scaled(&self, by: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * by).collect(),
        }
    }

    /// `self + s·other`.
    pub fn axpy(&self, s: f64, other: &ScalarField) -> Self {
        Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + s * b)
                .collect(),
        }
    }

    pub fn sup_distance(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}
