//! Pseudo-spectral machinery on periodic grids: Fourier differentiation,
//! full n-d transforms, trigonometric interpolation at arbitrary points,
//! and the optional 2/3-rule dealiasing filter.

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::BoundaryGrid;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

struct PlanCache {
    fwd: HashMap<usize, Arc<dyn Fft<f64>>>,
    inv: HashMap<usize, Arc<dyn Fft<f64>>>,
}

fn plans(len: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    static CACHE: OnceLock<Mutex<PlanCache>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(PlanCache { fwd: HashMap::new(), inv: HashMap::new() }));
    let mut c = cache.lock().unwrap();
    let fwd = c
        .fwd
        .entry(len)
        .or_insert_with(|| FftPlanner::new().plan_fft_forward(len))
        .clone();
    let inv = c
        .inv
        .entry(len)
        .or_insert_with(|| FftPlanner::new().plan_fft_inverse(len))
        .clone();
    (fwd, inv)
}

/// Starting flat indices of all grid lines along `axis`.
fn line_bases(grid: &BoundaryGrid, axis: usize) -> Vec<usize> {
    let stride = grid.strides()[axis];
    let d = grid.dims()[axis];
    (0..grid.len()).filter(|idx| (idx / stride) % d == 0).collect()
}

/// Apply `f` to the complex spectrum of every line along `axis`, in place.
fn transform_lines(
    data: &mut [f64],
    grid: &BoundaryGrid,
    axis: usize,
    f: impl Fn(usize, &mut [Complex64]) + Sync,
) {
    let d = grid.dims()[axis];
    let stride = grid.strides()[axis];
    let (fwd, inv) = plans(d);
    let bases = line_bases(grid, axis);
    let chunks: Vec<(usize, Vec<f64>)> = bases
        .par_iter()
        .map(|&base| {
            let mut buf: Vec<Complex64> =
                (0..d).map(|i| Complex64::new(data[base + i * stride], 0.0)).collect();
            let mut scratch = vec![Complex64::default(); fwd.get_inplace_scratch_len()];
            fwd.process_with_scratch(&mut buf, &mut scratch);
            f(d, &mut buf);
            inv.process_with_scratch(&mut buf, &mut scratch);
            let scale = 1.0 / d as f64;
            (base, buf.iter().map(|c| c.re * scale).collect())
        })
        .collect();
    for (base, line) in chunks {
        for (i, v) in line.into_iter().enumerate() {
            data[base + i * stride] = v;
        }
    }
}

/// Spectral coordinate derivative of order `order` along a periodic axis.
/// Exact for band-limited fields; the Nyquist mode is zeroed for odd orders.
pub fn partial_derivative_order(f: &ScalarField, axis: usize, order: usize) -> Result<ScalarField> {
    let grid = f.grid().clone();
    if axis >= grid.ndim() {
        return Err(Error::Validation(format!("axis {axis} out of range")));
    }
    if !f.is_finite() {
        return Err(Error::NonFinite("partial_derivative"));
    }
    if order == 0 {
        return Ok(f.clone());
    }
    let ks: Vec<f64> = (0..grid.dims()[axis]).map(|i| grid.wavenumber(axis, i)).collect();
    let mut out = f.clone();
    transform_lines(out.data_mut(), &grid, axis, |_d, spec| {
        for (i, c) in spec.iter_mut().enumerate() {
            let ik = Complex64::new(0.0, ks[i]);
            *c *= ik.powu(order as u32);
        }
    });
    Ok(out)
}

/// First spectral derivative along `axis`.
pub fn partial_derivative(f: &ScalarField, axis: usize) -> Result<ScalarField> {
    partial_derivative_order(f, axis, 1)
}

/// Zero all modes with |k| above two thirds of Nyquist on every axis.
pub fn dealias_two_thirds(f: &ScalarField) -> ScalarField {
    let grid = f.grid().clone();
    let mut out = f.clone();
    for axis in 0..grid.ndim() {
        let d = grid.dims()[axis];
        let cut = d / 3; // keep |m| <= d/3
        transform_lines(out.data_mut(), &grid, axis, |_dd, spec| {
            for (i, c) in spec.iter_mut().enumerate() {
                if grid.wave_index(axis, i).unsigned_abs() as usize > cut {
                    *c = Complex64::new(0.0, 0.0);
                }
            }
        });
    }
    out
}

/// Full n-d complex spectrum of a real field, normalized so that
/// f(y) = sum_k coeffs[k] exp(i k.y).
pub fn fourier_coefficients(f: &ScalarField) -> Vec<Complex64> {
    let grid = f.grid();
    let mut buf: Vec<Complex64> = f.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    for axis in 0..grid.ndim() {
        let d = grid.dims()[axis];
        let stride = grid.strides()[axis];
        let (fwd, _) = plans(d);
        let bases = line_bases(grid, axis);
        for base in bases {
            let mut line: Vec<Complex64> = (0..d).map(|i| buf[base + i * stride]).collect();
            let mut scratch = vec![Complex64::default(); fwd.get_inplace_scratch_len()];
            fwd.process_with_scratch(&mut line, &mut scratch);
            for (i, v) in line.into_iter().enumerate() {
                buf[base + i * stride] = v;
            }
        }
    }
    let scale = 1.0 / grid.len() as f64;
    buf.iter_mut().for_each(|c| *c *= scale);
    buf
}

/// Inverse n-d transform of a coefficient array normalized like
/// `fourier_coefficients`.
pub fn fourier_synthesis(grid: &Arc<BoundaryGrid>, coeffs: &[Complex64]) -> ScalarField {
    let mut buf = coeffs.to_vec();
    for axis in 0..grid.ndim() {
        let d = grid.dims()[axis];
        let stride = grid.strides()[axis];
        let (_, inv) = plans(d);
        let bases = line_bases(grid, axis);
        for base in bases {
            let mut line: Vec<Complex64> = (0..d).map(|i| buf[base + i * stride]).collect();
            let mut scratch = vec![Complex64::default(); inv.get_inplace_scratch_len()];
            inv.process_with_scratch(&mut line, &mut scratch);
            for (i, v) in line.into_iter().enumerate() {
                buf[base + i * stride] = v;
            }
        }
    }
    let data = buf.iter().map(|c| c.re).collect();
    ScalarField::from_data(grid, data).expect("length preserved")
}

/// Apply a Fourier-diagonal operator: multiply every mode by diag[bin].
pub fn fourier_diagonal_apply(f: &ScalarField, diag: &[f64]) -> ScalarField {
    let grid = f.grid().clone();
    let mut coeffs = fourier_coefficients(f);
    for (c, d) in coeffs.iter_mut().zip(diag) {
        *c *= *d;
    }
    fourier_synthesis(&grid, &coeffs)
}

/// Fraction of spectral energy carried by the top third of wavenumbers
/// on any axis. A smoothness diagnostic: near zero for resolved fields.
pub fn spectral_tail_fraction(f: &ScalarField) -> f64 {
    let grid = f.grid();
    let coeffs = fourier_coefficients(f);
    let mut total = 0.0;
    let mut tail = 0.0;
    for (idx, c) in coeffs.iter().enumerate() {
        let m = grid.multi_index(idx);
        let e = c.norm_sqr();
        let mut in_tail = false;
        for axis in 0..grid.ndim() {
            let d = grid.dims()[axis];
            if grid.wave_index(axis, m[axis]).unsigned_abs() as usize > d / 3 {
                in_tail = true;
            }
        }
        if idx > 0 {
            total += e;
            if in_tail {
                tail += e;
            }
        }
    }
    if total == 0.0 {
        0.0
    } else {
        tail / total
    }
}

/// Trigonometric interpolant of a grid field, evaluable (with first
/// derivatives) at arbitrary points of the torus. Coefficients below
/// 1e-15 of the largest are dropped, which keeps evaluation cheap for
/// smooth fields without measurable accuracy loss.
pub struct SpectralSampler {
    grid: Arc<BoundaryGrid>,
    terms: Vec<([usize; 3], [f64; 3], Complex64)>, // bin indices, wavenumbers, coeff
}

impl SpectralSampler {
    pub fn new(f: &ScalarField) -> Self {
        let grid = f.grid().clone();
        let coeffs = fourier_coefficients(f);
        let peak = coeffs.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
        let cut = 1e-15 * peak;
        let n = grid.ndim();
        let mut terms = Vec::new();
        for (idx, c) in coeffs.into_iter().enumerate() {
            if idx == 0 || c.norm() > cut {
                let m = grid.multi_index(idx);
                let mut ks = [0.0; 3];
                for axis in 0..n {
                    ks[axis] = grid.wavenumber(axis, m[axis]);
                }
                terms.push((m, ks, c));
            }
        }
        Self { grid, terms }
    }

    fn phase_tables(&self, y: &[f64]) -> Vec<Vec<Complex64>> {
        (0..self.grid.ndim())
            .map(|axis| {
                (0..self.grid.dims()[axis])
                    .map(|i| {
                        let k = self.grid.wavenumber(axis, i);
                        Complex64::from_polar(1.0, k * y[axis])
                    })
                    .collect()
            })
            .collect()
    }

    /// Value at an arbitrary point.
    pub fn eval(&self, y: &[f64]) -> f64 {
        let tables = self.phase_tables(y);
        let mut acc = Complex64::new(0.0, 0.0);
        for (m, _, c) in &self.terms {
            let mut phase = Complex64::new(1.0, 0.0);
            for axis in 0..self.grid.ndim() {
                phase *= tables[axis][m[axis]];
            }
            acc += c * phase;
        }
        acc.re
    }

    /// Value and gradient at an arbitrary point.
    pub fn eval_with_grad(&self, y: &[f64]) -> (f64, [f64; 3]) {
        let n = self.grid.ndim();
        let tables = self.phase_tables(y);
        let mut acc = Complex64::new(0.0, 0.0);
        let mut grad = [Complex64::new(0.0, 0.0); 3];
        for (m, ks, c) in &self.terms {
            let mut phase = Complex64::new(1.0, 0.0);
            for axis in 0..n {
                phase *= tables[axis][m[axis]];
            }
            let term = c * phase;
            acc += term;
            for axis in 0..n {
                grad[axis] += term * Complex64::new(0.0, ks[axis]);
            }
        }
        (acc.re, [grad[0].re, grad[1].re, grad[2].re])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_derivative_is_zero() {
        let grid = BoundaryGrid::unit_torus(2, 16).unwrap();
        let f = ScalarField::constant(&grid, 3.0);
        let d = partial_derivative(&f, 0).unwrap();
        assert!(d.sup_norm() < 1e-13);
    }

    #[test]
    fn single_mode_is_exact() {
        let grid = BoundaryGrid::new(vec![16, 16], vec![2.0, 1.0]).unwrap();
        let f = ScalarField::from_fn(&grid, |y| (2.0 * PI * y[0] / 2.0).sin());
        let d = partial_derivative(&f, 0).unwrap();
        let expect = ScalarField::from_fn(&grid, |y| (PI) * (2.0 * PI * y[0] / 2.0).cos());
        assert!(d.sub(&expect).sup_norm() < 1e-10);
    }

    #[test]
    fn matches_fourth_order_finite_differences() {
        // f = exp(sin(2 pi y0)): smooth, all harmonics. The difference to a
        // 4th-order centered stencil is the stencil truncation error, so it
        // must shrink ~16x per grid doubling.
        let err_at = |res: usize| -> f64 {
            let grid = BoundaryGrid::unit_torus(2, res).unwrap();
            let f = ScalarField::from_fn(&grid, |y| (2.0 * PI * y[0]).sin().exp());
            let d = partial_derivative(&f, 0).unwrap();
            let hy = grid.spacing(0);
            let nx = grid.dims()[0];
            let ny = grid.dims()[1];
            let mut err: f64 = 0.0;
            for i in 0..nx {
                for j in 0..ny {
                    let v = |ii: i64| f.data()[((ii.rem_euclid(nx as i64)) as usize) * ny + j];
                    let fd = (-v(i as i64 + 2) + 8.0 * v(i as i64 + 1) - 8.0 * v(i as i64 - 1)
                        + v(i as i64 - 2))
                        / (12.0 * hy);
                    err = err.max((fd - d.data()[i * ny + j]).abs());
                }
            }
            err
        };
        let e32 = err_at(32);
        let e64 = err_at(64);
        assert!(e32 / e64 > 12.0, "order ratio {} (e32={e32:.3e}, e64={e64:.3e})", e32 / e64);
        assert!(e64 < 1e-3);
    }

    #[test]
    fn sampler_matches_grid_values() {
        let grid = BoundaryGrid::unit_torus(2, 16).unwrap();
        let f = ScalarField::from_fn(&grid, |y| (2.0 * PI * y[0]).sin() * (4.0 * PI * y[1]).cos());
        let s = SpectralSampler::new(&f);
        for idx in [0usize, 5, 100, 200] {
            let y = grid.point(idx);
            assert_relative_eq!(s.eval(&y[..2]), f.data()[idx], epsilon = 1e-12);
        }
        // off grid
        let y = [0.13, 0.77];
        let exact = (2.0 * PI * y[0]).sin() * (4.0 * PI * y[1]).cos();
        assert_relative_eq!(s.eval(&y), exact, epsilon = 1e-12);
        let (_, g) = s.eval_with_grad(&y);
        let gx = 2.0 * PI * (2.0 * PI * y[0]).cos() * (4.0 * PI * y[1]).cos();
        assert_relative_eq!(g[0], gx, epsilon = 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn fourier_modes_differentiate_exactly(m1 in -5i64..=5, m2 in -5i64..=5, axis in 0usize..2) {
            let grid = BoundaryGrid::unit_torus(2, 16).unwrap();
            let f = ScalarField::from_fn(&grid, |y| {
                (2.0 * PI * (m1 as f64 * y[0] + m2 as f64 * y[1])).cos()
            });
            let d = partial_derivative(&f, axis).unwrap();
            let m = [m1 as f64, m2 as f64];
            let expect = ScalarField::from_fn(&grid, |y| {
                -2.0 * PI * m[axis] * (2.0 * PI * (m1 as f64 * y[0] + m2 as f64 * y[1])).sin()
            });
            prop_assert!(d.sub(&expect).sup_norm() < 1e-9);
        }
    }
}
