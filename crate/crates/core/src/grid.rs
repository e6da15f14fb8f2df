//! Periodic uniform grids on the flat torus T^n, n = 2 or 3.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Discretization of the boundary manifold: a uniform periodic grid.
///
/// Points are laid out row-major with the last axis fastest, axis `a`
/// carrying `dims[a]` points over one period `periods[a]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryGrid {
    dims: Vec<usize>,
    periods: Vec<f64>,
    #[serde(skip)]
    strides: Vec<usize>,
    #[serde(skip)]
    len: usize,
}

impl BoundaryGrid {
    pub fn new(dims: Vec<usize>, periods: Vec<f64>) -> Result<Arc<Self>> {
        let n = dims.len();
        if n < 2 || n > 3 {
            return Err(Error::InvalidGrid(format!("dimension must be 2 or 3, got {n}")));
        }
        if periods.len() != n {
            return Err(Error::InvalidGrid("periods length != dims length".into()));
        }
        for &d in &dims {
            if d < 8 || d % 2 != 0 {
                return Err(Error::InvalidGrid(format!(
                    "resolution {d} must be even and >= 8 for spectral differentiation"
                )));
            }
        }
        for &p in &periods {
            if !(p > 0.0 && p.is_finite()) {
                return Err(Error::InvalidGrid(format!("period {p} must be positive")));
            }
        }
        let mut strides = vec![1usize; n];
        for a in (0..n - 1).rev() {
            strides[a] = strides[a + 1] * dims[a + 1];
        }
        let len = dims.iter().product();
        Ok(Arc::new(Self { dims, periods, strides, len }))
    }

    /// Unit-period torus with the same resolution on every axis.
    pub fn unit_torus(n: usize, res: usize) -> Result<Arc<Self>> {
        Self::new(vec![res; n], vec![1.0; n])
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn periods(&self) -> &[f64] {
        &self.periods
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.periods[axis] / self.dims[axis] as f64
    }

    /// Product of grid spacings (quadrature cell volume).
    pub fn cell_volume(&self) -> f64 {
        (0..self.ndim()).map(|a| self.spacing(a)).product()
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        i as f64 * self.spacing(axis)
    }

    pub fn coords(&self, axis: usize) -> Vec<f64> {
        (0..self.dims[axis]).map(|i| self.coord(axis, i)).collect()
    }

    pub fn multi_index(&self, idx: usize) -> [usize; 3] {
        let mut m = [0usize; 3];
        for a in 0..self.ndim() {
            m[a] = (idx / self.strides[a]) % self.dims[a];
        }
        m
    }

    pub fn point(&self, idx: usize) -> [f64; 3] {
        let m = self.multi_index(idx);
        let mut y = [0.0; 3];
        for a in 0..self.ndim() {
            y[a] = self.coord(a, m[a]);
        }
        y
    }

    /// Signed integer wavenumber for FFT bin `i` on `axis`.
    pub fn wave_index(&self, axis: usize, i: usize) -> i64 {
        let d = self.dims[axis];
        if i <= d / 2 {
            i as i64
        } else {
            i as i64 - d as i64
        }
    }

    /// Angular wavenumber 2*pi*m/P for FFT bin `i`; the Nyquist bin maps to 0
    /// so that spectral differentiation stays real and antisymmetric.
    pub fn wavenumber(&self, axis: usize, i: usize) -> f64 {
        let d = self.dims[axis];
        if i == d / 2 {
            return 0.0;
        }
        2.0 * std::f64::consts::PI * self.wave_index(axis, i) as f64 / self.periods[axis]
    }

    /// Rebuild derived data after deserialization.
    pub fn rehydrate(mut self) -> Result<Arc<Self>> {
        let dims = std::mem::take(&mut self.dims);
        let periods = std::mem::take(&mut self.periods);
        Self::new(dims, periods)
    }

    pub fn same_grid(a: &Arc<Self>, b: &Arc<Self>) -> bool {
        Arc::ptr_eq(a, b) || (a.dims == b.dims && a.periods == b.periods)
    }
}
