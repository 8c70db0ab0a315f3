//! Real rasters tagged with their grid.

use crate::error::{Error, Result};
use crate::geometry::{GridKind, GridSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub grid: GridSpec,
    pub data: Vec<f64>,
}

/// An `N x N` raster on the Cartesian grid.
pub type Image = Raster;
/// An `N_theta x N_s` raster on the polar grid.
pub type Sinogram = Raster;

/// Log-polar data of one sector.
#[derive(Debug, Clone, PartialEq)]
pub struct LpData {
    pub sector: usize,
    pub raster: Raster,
}

impl Raster {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            data: vec![0.0; grid.len()],
        }
    }

    pub fn filled(grid: GridSpec, v: f64) -> Self {
        Self {
            grid,
            data: vec![v; grid.len()],
        }
    }

    pub fn from_vec(grid: GridSpec, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::Shape(format!(
                "{} values for a {}x{} grid",
                data.len(),
                grid.rows,
                grid.cols
            )));
        }
        Ok(Self { grid, data })
    }

    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for r in 0..grid.rows {
            for c in 0..grid.cols {
                let (a, b) = grid.coord(r, c);
                data.push(f(a, b));
            }
        }
        Self { grid, data }
    }

    pub fn rows(&self) -> usize {
        self.grid.rows
    }

    pub fn cols(&self) -> usize {
        self.grid.cols
    }

    pub fn kind(&self) -> GridKind {
        self.grid.kind
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.grid.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.grid.cols..(r + 1) * self.grid.cols]
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn check_grid(&self, expected: &GridSpec) -> Result<()> {
        if self.grid.rows != expected.rows
            || self.grid.cols != expected.cols
            || self.grid.kind != expected.kind
        {
            return Err(Error::Shape(format!(
                "expected a {:?} {}x{} raster, got {:?} {}x{}",
                expected.kind,
                expected.rows,
                expected.cols,
                self.grid.kind,
                self.grid.rows,
                self.grid.cols
            )));
        }
        if self.data.len() != expected.len() {
            return Err(Error::Shape("raster length does not match its grid".into()));
        }
        Ok(())
    }
}

/// `||a - b|| / ||b||` over all samples.
pub fn relative_l2(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

/// [`relative_l2`] restricted to the samples where `mask` is true.
pub fn relative_l2_masked(a: &[f64], b: &[f64], mask: &[bool]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for ((x, y), &m) in a.iter().zip(b).zip(mask) {
        if m {
            num += (x - y) * (x - y);
            den += y * y;
        }
    }
    (num / den).sqrt()
}

/// Pixels whose centre lies in the closed disc of `radius`.
pub fn disc_mask(grid: &GridSpec, radius: f64) -> Vec<bool> {
    let mut m = Vec::with_capacity(grid.len());
    for r in 0..grid.rows {
        for c in 0..grid.cols {
            let (x2, x1) = grid.coord(r, c);
            m.push(x1 * x1 + x2 * x2 <= radius * radius);
        }
    }
    m
}
