//! Scalar, vector and symmetric-tensor fields over a periodic grid, with
//! CSV and binary-blob serialization.

use crate::error::{Error, Result};
use crate::grid::BoundaryGrid;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

/// One real value per grid point.
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub(crate) grid: Arc<BoundaryGrid>,
    pub(crate) data: Vec<f64>,
}

/// One n-vector per grid point, layout `[point][component]`.
#[derive(Debug, Clone)]
pub struct VectorField {
    pub(crate) grid: Arc<BoundaryGrid>,
    pub(crate) data: Vec<f64>,
}

/// One symmetric n x n matrix per grid point, upper triangle stored
/// row-major: n=2 -> (00,01,11), n=3 -> (00,01,02,11,12,22).
#[derive(Debug, Clone)]
pub struct SymTensorField {
    pub(crate) grid: Arc<BoundaryGrid>,
    pub(crate) data: Vec<f64>,
}

pub fn tri_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Index of (i,j) within the stored upper triangle.
pub fn tri_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    // offset of row i in the packed upper triangle
    i * n - i * (i + 1) / 2 + j
}

impl ScalarField {
    pub fn zeros(grid: &Arc<BoundaryGrid>) -> Self {
        Self { grid: grid.clone(), data: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: &Arc<BoundaryGrid>, c: f64) -> Self {
        Self { grid: grid.clone(), data: vec![c; grid.len()] }
    }

    pub fn from_fn(grid: &Arc<BoundaryGrid>, f: impl Fn(&[f64]) -> f64) -> Self {
        let n = grid.ndim();
        let data = (0..grid.len()).map(|i| f(&grid.point(i)[..n])).collect();
        Self { grid: grid.clone(), data }
    }

    pub fn from_data(grid: &Arc<BoundaryGrid>, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid: grid.clone(), data })
    }

    pub fn grid(&self) -> &Arc<BoundaryGrid> {
        &self.grid
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync) -> Self {
        Self { grid: self.grid.clone(), data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert!(BoundaryGrid::same_grid(&self.grid, &other.grid));
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Self { grid: self.grid.clone(), data }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn axpy(&mut self, a: f64, x: &Self) {
        for (s, &v) in self.data.iter_mut().zip(&x.data) {
            *s += a * v;
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.data.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl VectorField {
    pub fn zeros(grid: &Arc<BoundaryGrid>) -> Self {
        Self { grid: grid.clone(), data: vec![0.0; grid.len() * grid.ndim()] }
    }

    pub fn grid(&self) -> &Arc<BoundaryGrid> {
        &self.grid
    }

    pub fn comp(&self, idx: usize, a: usize) -> f64 {
        self.data[idx * self.grid.ndim() + a]
    }

    pub fn set_comp(&mut self, idx: usize, a: usize, v: f64) {
        self.data[idx * self.grid.ndim() + a] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Borrow the n components at one point.
    pub fn at(&self, idx: usize) -> &[f64] {
        let n = self.grid.ndim();
        &self.data[idx * n..(idx + 1) * n]
    }
}

impl SymTensorField {
    pub fn zeros(grid: &Arc<BoundaryGrid>) -> Self {
        Self { grid: grid.clone(), data: vec![0.0; grid.len() * tri_len(grid.ndim())] }
    }

    /// The identity metric (flat torus).
    pub fn identity(grid: &Arc<BoundaryGrid>) -> Self {
        let n = grid.ndim();
        let mut f = Self::zeros(grid);
        for idx in 0..grid.len() {
            for i in 0..n {
                f.set(idx, i, i, 1.0);
            }
        }
        f
    }

    pub fn from_fn(grid: &Arc<BoundaryGrid>, f: impl Fn(&[f64], usize, usize) -> f64) -> Self {
        let n = grid.ndim();
        let mut out = Self::zeros(grid);
        for idx in 0..grid.len() {
            let y = grid.point(idx);
            for i in 0..n {
                for j in i..n {
                    out.set(idx, i, j, f(&y[..n], i, j));
                }
            }
        }
        out
    }

    pub fn grid(&self) -> &Arc<BoundaryGrid> {
        &self.grid
    }

    pub fn ncomp(&self) -> usize {
        tri_len(self.grid.ndim())
    }

    pub fn get(&self, idx: usize, i: usize, j: usize) -> f64 {
        self.data[idx * self.ncomp() + tri_index(self.grid.ndim(), i, j)]
    }

    pub fn set(&mut self, idx: usize, i: usize, j: usize, v: f64) {
        let c = tri_index(self.grid.ndim(), i, j);
        let m = self.ncomp();
        self.data[idx * m + c] = v;
    }

    /// Borrow the packed triangle at one point.
    pub fn tri(&self, idx: usize) -> &[f64] {
        let m = self.ncomp();
        &self.data[idx * m..(idx + 1) * m]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Component (i,j) as a scalar field.
    pub fn component(&self, i: usize, j: usize) -> ScalarField {
        let c = tri_index(self.grid.ndim(), i, j);
        let m = self.ncomp();
        let data = (0..self.grid.len()).map(|idx| self.data[idx * m + c]).collect();
        ScalarField { grid: self.grid.clone(), data }
    }

    pub fn set_component(&mut self, i: usize, j: usize, f: &ScalarField) {
        let c = tri_index(self.grid.ndim(), i, j);
        let m = self.ncomp();
        for (idx, &v) in f.data.iter().enumerate() {
            self.data[idx * m + c] = v;
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid.clone(), data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert!(BoundaryGrid::same_grid(&self.grid, &other.grid));
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect();
        Self { grid: self.grid.clone(), data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert!(BoundaryGrid::same_grid(&self.grid, &other.grid));
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect();
        Self { grid: self.grid.clone(), data }
    }

    pub fn axpy(&mut self, a: f64, x: &Self) {
        for (s, &v) in self.data.iter_mut().zip(&x.data) {
            *s += a * v;
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }
}

// ---------------------------------------------------------------------------
// Serialization: CSV (coordinates then components) and a single-file format
// consisting of one JSON header line followed by a little-endian f64 blob.
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct FieldHeader {
    kind: String,
    dims: Vec<usize>,
    periods: Vec<f64>,
    components: usize,
}

pub(crate) fn write_blob<W: Write>(w: &mut W, data: &[f64]) -> Result<()> {
    for v in data {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub(crate) fn read_blob<R: Read>(r: &mut R, len: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; len * 8];
    r.read_exact(&mut buf)?;
    Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

fn save_generic(path: &Path, kind: &str, grid: &BoundaryGrid, comps: usize, data: &[f64]) -> Result<()> {
    let header = FieldHeader {
        kind: kind.to_string(),
        dims: grid.dims().to_vec(),
        periods: grid.periods().to_vec(),
        components: comps,
    };
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    write_blob(&mut w, data)?;
    Ok(())
}

fn load_generic(path: &Path) -> Result<(FieldHeader, Arc<BoundaryGrid>, Vec<f64>)> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut line = String::new();
    r.read_line(&mut line)?;
    let header: FieldHeader = serde_json::from_str(line.trim_end())?;
    let grid = BoundaryGrid::new(header.dims.clone(), header.periods.clone())?;
    let data = read_blob(&mut r, grid.len() * header.components)?;
    Ok((header, grid, data))
}

fn write_csv_generic(path: &Path, grid: &BoundaryGrid, comps: usize, at: impl Fn(usize, usize) -> f64) -> Result<()> {
    let n = grid.ndim();
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    let mut header: Vec<String> = (0..n).map(|a| format!("y{a}")).collect();
    header.extend((0..comps).map(|c| format!("c{c}")));
    writeln!(w, "{}", header.join(","))?;
    for idx in 0..grid.len() {
        let y = grid.point(idx);
        let mut row: Vec<String> = (0..n).map(|a| format!("{}", y[a])).collect();
        row.extend((0..comps).map(|c| format!("{}", at(idx, c))));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

impl ScalarField {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        save_generic(path.as_ref(), "scalar", &self.grid, 1, &self.data)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let (header, grid, data) = load_generic(path.as_ref())?;
        if header.kind != "scalar" || header.components != 1 {
            return Err(Error::Validation(format!("{} is not a scalar field file", path.as_ref().display())));
        }
        Ok(Self { grid, data })
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_csv_generic(path.as_ref(), &self.grid, 1, |idx, _| self.data[idx])
    }
}

impl VectorField {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        save_generic(path.as_ref(), "vector", &self.grid, self.grid.ndim(), &self.data)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let (header, grid, data) = load_generic(path.as_ref())?;
        if header.kind != "vector" || header.components != grid.ndim() {
            return Err(Error::Validation("not a vector field file".into()));
        }
        Ok(Self { grid, data })
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let n = self.grid.ndim();
        write_csv_generic(path.as_ref(), &self.grid, n, |idx, c| self.data[idx * n + c])
    }
}

impl SymTensorField {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        save_generic(path.as_ref(), "symtensor", &self.grid, self.ncomp(), &self.data)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let (header, grid, data) = load_generic(path.as_ref())?;
        if header.kind != "symtensor" || header.components != tri_len(grid.ndim()) {
            return Err(Error::Validation("not a symmetric tensor field file".into()));
        }
        Ok(Self { grid, data })
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let m = self.ncomp();
        write_csv_generic(path.as_ref(), &self.grid, m, |idx, c| self.data[idx * m + c])
    }
}
