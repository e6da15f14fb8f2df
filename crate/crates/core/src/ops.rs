//! Intrinsic differential operators of a metric on the boundary grid:
//! gradient, Laplace-Beltrami, tensor contractions and quadrature.

use crate::error::{Error, Result};
use crate::field::{ScalarField, SymTensorField, VectorField};
use crate::smallmat::{self, Mat};
use crate::spectral::partial_derivative;

/// Pointwise packed inverse metric together with sqrt(det h).
pub(crate) struct MetricData {
    pub inv: Vec<Mat>,
    pub sqrt_det: Vec<f64>,
}

pub(crate) fn metric_data(h: &SymTensorField) -> Result<MetricData> {
    let n = h.grid().ndim();
    let len = h.grid().len();
    let mut inv = Vec::with_capacity(len);
    let mut sqrt_det = Vec::with_capacity(len);
    for idx in 0..len {
        let m = smallmat::from_tri(n, h.tri(idx));
        if !smallmat::is_positive_definite(n, &m) {
            return Err(Error::SingularMetric { point: idx });
        }
        let d = smallmat::det(n, &m);
        inv.push(smallmat::inverse(n, &m).ok_or(Error::SingularMetric { point: idx })?);
        sqrt_det.push(d.sqrt());
    }
    Ok(MetricData { inv, sqrt_det })
}

/// Coordinate partials of a scalar field along every axis.
pub(crate) fn coordinate_gradient(f: &ScalarField) -> Result<VectorField> {
    let grid = f.grid().clone();
    let n = grid.ndim();
    let mut out = VectorField::zeros(&grid);
    for a in 0..n {
        let da = partial_derivative(f, a)?;
        for idx in 0..grid.len() {
            out.set_comp(idx, a, da.data()[idx]);
        }
    }
    Ok(out)
}

/// Riemannian gradient: raises the coordinate differential with h^{-1}.
pub fn gradient(f: &ScalarField, h: &SymTensorField) -> Result<VectorField> {
    let md = metric_data(h)?;
    gradient_with(f, h.grid().ndim(), &md)
}

pub(crate) fn gradient_with(f: &ScalarField, n: usize, md: &MetricData) -> Result<VectorField> {
    let grid = f.grid().clone();
    let df = coordinate_gradient(f)?;
    let mut out = VectorField::zeros(&grid);
    let mut tmp = [0.0; 3];
    for idx in 0..grid.len() {
        smallmat::matvec(n, &md.inv[idx], df.at(idx), &mut tmp[..n]);
        for a in 0..n {
            out.set_comp(idx, a, tmp[a]);
        }
    }
    Ok(out)
}

/// |grad f|^2_h as a scalar field.
pub fn gradient_norm_sq(f: &ScalarField, h: &SymTensorField) -> Result<ScalarField> {
    let md = metric_data(h)?;
    gradient_norm_sq_with(f, h.grid().ndim(), &md)
}

pub(crate) fn gradient_norm_sq_with(f: &ScalarField, n: usize, md: &MetricData) -> Result<ScalarField> {
    let df = coordinate_gradient(f)?;
    let grid = f.grid().clone();
    let mut out = ScalarField::zeros(&grid);
    for idx in 0..grid.len() {
        let d = df.at(idx);
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += smallmat::at(&md.inv[idx], i, j) * d[i] * d[j];
            }
        }
        out.data_mut()[idx] = s;
    }
    Ok(out)
}

/// Laplace-Beltrami operator in divergence form,
/// (1/sqrt(det h)) d_i ( sqrt(det h) h^{ij} d_j f ).
pub fn laplace_beltrami(f: &ScalarField, h: &SymTensorField) -> Result<ScalarField> {
    let md = metric_data(h)?;
    laplace_beltrami_with(f, h.grid().ndim(), &md)
}

pub(crate) fn laplace_beltrami_with(f: &ScalarField, n: usize, md: &MetricData) -> Result<ScalarField> {
    if !f.is_finite() {
        return Err(Error::NonFinite("laplace_beltrami"));
    }
    let grid = f.grid().clone();
    let df = coordinate_gradient(f)?;
    let mut flux = vec![ScalarField::zeros(&grid); n];
    for idx in 0..grid.len() {
        let d = df.at(idx);
        let w = md.sqrt_det[idx];
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                s += smallmat::at(&md.inv[idx], i, j) * d[j];
            }
            flux[i].data_mut()[idx] = w * s;
        }
    }
    let mut out = ScalarField::zeros(&grid);
    for (i, fi) in flux.iter().enumerate() {
        let div_i = partial_derivative(fi, i)?;
        out.axpy(1.0, &div_i);
    }
    for idx in 0..grid.len() {
        out.data_mut()[idx] /= md.sqrt_det[idx];
    }
    Ok(out)
}

/// Metric trace and squared norm of a symmetric 2-tensor:
/// trace = h^{ij} a_{ij}, norm_sq = h^{ik} h^{jl} a_{ij} a_{kl}.
pub fn tensor_norms(a: &SymTensorField, h: &SymTensorField) -> Result<(ScalarField, ScalarField)> {
    let md = metric_data(h)?;
    let n = h.grid().ndim();
    let grid = h.grid().clone();
    let mut trace = ScalarField::zeros(&grid);
    let mut norm_sq = ScalarField::zeros(&grid);
    for idx in 0..grid.len() {
        let am = smallmat::from_tri(n, a.tri(idx));
        let hi = &md.inv[idx];
        // raised = h^{-1} a
        let raised = smallmat::mul(n, hi, &am);
        trace.data_mut()[idx] = smallmat::trace(n, &raised);
        // norm^2 = tr( (h^{-1} a)^2 )
        let sq = smallmat::mul(n, &raised, &raised);
        norm_sq.data_mut()[idx] = smallmat::trace(n, &sq);
    }
    Ok((trace, norm_sq))
}

/// Quadrature of f dV_h over the periodic grid (trapezoidal = spectral
/// accuracy on the torus).
pub fn integrate(f: &ScalarField, h: &SymTensorField) -> Result<f64> {
    let md = metric_data(h)?;
    Ok(integrate_with(f, &md))
}

pub(crate) fn integrate_with(f: &ScalarField, md: &MetricData) -> f64 {
    let cell = f.grid().cell_volume();
    f.data().iter().zip(&md.sqrt_det).map(|(&v, &w)| v * w).sum::<f64>() * cell
}

/// Riemannian volume of the grid torus.
pub fn volume(h: &SymTensorField) -> Result<f64> {
    let one = ScalarField::constant(h.grid(), 1.0);
    integrate(&one, h)
}

/// Weighted L2 inner product <f, g>_h.
pub fn inner_product(f: &ScalarField, g: &ScalarField, h: &SymTensorField) -> Result<f64> {
    integrate(&f.zip_with(g, |a, b| a * b), h)
}
