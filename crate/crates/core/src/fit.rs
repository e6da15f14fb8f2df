//! Least-squares polynomial fits along parameter ladders, used to extract
//! expansion coefficients and convergence orders from sampled data.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Pseudo-inverse (via QR) of the scaled Vandermonde for nodes `xs` and the
/// given polynomial degree. Returns (pinv, scale) where coefficients in the
/// original variable are `pinv * y` with column j divided by scale^j.
fn vandermonde_pinv(xs: &[f64], degree: usize) -> Result<(DMatrix<f64>, f64)> {
    if xs.len() < degree + 1 {
        return Err(Error::InsufficientSamples(format!(
            "{} nodes for degree {degree} fit",
            xs.len()
        )));
    }
    let scale = xs.iter().cloned().fold(0.0f64, |a, b| a.max(b.abs())).max(1e-300);
    let m = xs.len();
    let mut v = DMatrix::zeros(m, degree + 1);
    for (i, &x) in xs.iter().enumerate() {
        let t = x / scale;
        let mut p = 1.0;
        for j in 0..=degree {
            v[(i, j)] = p;
            p *= t;
        }
    }
    let qr = v.clone().qr();
    let r = qr.r();
    let q = qr.q();
    // pinv = R^{-1} Q^T
    let rinv = r
        .try_inverse()
        .ok_or_else(|| Error::LinearSolveFailure("rank-deficient Vandermonde".into()))?;
    Ok((rinv * q.transpose(), scale))
}

/// Fit y(x) ~ sum_j c_j x^j in least squares; returns c_0..c_degree.
pub fn polyfit(xs: &[f64], ys: &[f64], degree: usize) -> Result<Vec<f64>> {
    let (pinv, scale) = vandermonde_pinv(xs, degree)?;
    let y = DVector::from_column_slice(ys);
    let c = &pinv * y;
    Ok((0..=degree).map(|j| c[j] / scale.powi(j as i32)).collect())
}

/// Per-point polynomial fit of a family of sampled vectors (one vector per
/// ladder node, all the same length). Returns one coefficient vector per
/// polynomial order.
pub fn polyfit_many(xs: &[f64], ys: &[&[f64]], degree: usize) -> Result<Vec<Vec<f64>>> {
    let (pinv, scale) = vandermonde_pinv(xs, degree)?;
    let npts = ys[0].len();
    if ys.iter().any(|v| v.len() != npts) || ys.len() != xs.len() {
        return Err(Error::Validation("inconsistent ladder sample lengths".into()));
    }
    let mut out = vec![vec![0.0; npts]; degree + 1];
    for p in 0..npts {
        for j in 0..=degree {
            let mut s = 0.0;
            for (i, y) in ys.iter().enumerate() {
                s += pinv[(j, i)] * y[p];
            }
            out[j][p] = s / scale.powi(j as i32);
        }
    }
    Ok(out)
}

/// Slope of log|y| against log x by least squares; pairs with |y| below
/// `floor` are dropped. Returns None if fewer than two usable pairs remain.
pub fn loglog_slope(xs: &[f64], ys: &[f64], floor: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(_, &y)| y.abs() > floor)
        .map(|(&x, &y)| (x.ln(), y.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

/// Log-spaced ladder from lo to hi inclusive.
pub fn log_ladder(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2 && lo > 0.0 && hi > lo);
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (llo + (lhi - llo) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Linearly spaced ladder from lo to hi inclusive.
pub fn linear_ladder(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2);
    (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect()
}
