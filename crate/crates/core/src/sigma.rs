//! sigma_k curvature machinery: elementary symmetric functions of the
//! shape operator via characteristic-polynomial recursions, Newton
//! polynomials and the derivative identities, the S_k(x) expansion with
//! its closed-form/fitted arbitration, and constant-sigma_k leaf solves.

use crate::error::{Error, Result};
use crate::extension::{extend, locate_level_set, ExtendedFactor};
use crate::field::ScalarField;
use crate::fit;
use crate::foliation::{newton_solve, Leaf, NewtonProblem, SolverOptions};
use crate::grid::BoundaryGrid;
use crate::leaf::leaf_tensors;
use crate::metric::MetricExpansion;
use crate::smallmat::{self, Mat};
use nalgebra::DMatrix;
use std::sync::Arc;

/// Binomial coefficient with the usual vanishing convention outside range.
pub fn binomial(n: i64, k: i64) -> i64 {
    if k < 0 || n < 0 || k > n {
        return 0;
    }
    let mut c: i64 = 1;
    for j in 0..k.min(n - k) {
        c = c * (n - j) / (j + 1);
    }
    c
}

// ---------------------------------------------------------------------------
// matrix kernels (exact, used for identities up to n = 8)
// ---------------------------------------------------------------------------

/// Newton polynomial T_{k-1}(B) = sum_{j=0}^{k-1} (-1)^j sigma_{k-1-j}(B) B^j.
pub fn newton_polynomial_matrix(b: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let n = b.nrows();
    let sig = sigma_values(b);
    let mut out = DMatrix::<f64>::zeros(n, n);
    let mut bj = DMatrix::<f64>::identity(n, n);
    for j in 0..k {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        out += &bj * (sign * sig[k - 1 - j]);
        bj = &bj * b;
    }
    out
}

/// d/ds sigma_k(B + s E) at s = 0: tr(E T_{k-1}(B)).
pub fn sigma_k_derivative(b: &DMatrix<f64>, e: &DMatrix<f64>, k: usize) -> f64 {
    (e * newton_polynomial_matrix(b, k)).trace()
}

/// Exact second derivative d^2/ds^2 sigma_k(B + s E) at s = 0:
/// tr(E dT_{k-1}/ds) with the full product rule on the matrix powers.
pub fn sigma_k_second_derivative(b: &DMatrix<f64>, e: &DMatrix<f64>, k: usize) -> f64 {
    let n = b.nrows();
    let sig = sigma_values(b);
    // powers of B
    let mut powers: Vec<DMatrix<f64>> = Vec::with_capacity(k);
    powers.push(DMatrix::identity(n, n));
    for _ in 1..k.max(1) {
        let next = powers.last().unwrap() * b;
        powers.push(next);
    }
    let mut dt = DMatrix::<f64>::zeros(n, n);
    for j in 0..k {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        // d sigma_{k-1-j}(B(s)) / ds = tr(E T_{k-2-j}(B)) for k-1-j >= 1
        if k - 1 - j >= 1 {
            let dsig = sigma_k_derivative(b, e, k - 1 - j);
            dt += &powers[j] * (sign * dsig);
        }
        // sigma_{k-1-j} * d(B^j)/ds, noncommutative product rule
        if j >= 1 {
            let mut dpow = DMatrix::<f64>::zeros(n, n);
            for i in 0..j {
                dpow += &powers[i] * e * &powers[j - 1 - i];
            }
            dt += dpow * (sign * sig[k - 1 - j]);
        }
    }
    (e * dt).trace()
}

/// Max discrepancy between the exact second-derivative formula and second
/// central differences of s -> sigma_k(B + sE).
pub fn sigma_k_second_derivative_check(b: &DMatrix<f64>, e: &DMatrix<f64>, k: usize) -> f64 {
    let exact = sigma_k_second_derivative(b, e, k);
    let h = 1e-4;
    let f = |s: f64| sigma_values(&(b + e * s))[k];
    let fd = (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h);
    (exact - fd).abs()
}

/// sigma_0..sigma_n of the eigenvalues of a square matrix from power sums
/// p_j = tr(B^j) via Newton's identities (characteristic-polynomial
/// coefficients; no eigendecomposition).
pub fn sigma_values(b: &DMatrix<f64>) -> Vec<f64> {
    let n = b.nrows();
    let mut p = vec![0.0; n + 1];
    let mut bj = b.clone();
    for j in 1..=n {
        p[j] = bj.trace();
        if j < n {
            bj = &bj * b;
        }
    }
    let mut e = vec![0.0; n + 1];
    e[0] = 1.0;
    for j in 1..=n {
        let mut s = 0.0;
        for i in 1..=j {
            let sign = if (i - 1) % 2 == 0 { 1.0 } else { -1.0 };
            s += sign * e[j - i] * p[i];
        }
        e[j] = s / j as f64;
    }
    e
}

// ---------------------------------------------------------------------------
// grid fields of shape operators
// ---------------------------------------------------------------------------

/// One n x n (generally non-symmetric) matrix per grid point: the shape
/// operator B = g_ind^{-1} II with real eigenvalues.
#[derive(Debug, Clone)]
pub struct ShapeMatrixField {
    grid: Arc<BoundaryGrid>,
    data: Vec<f64>, // [point][n*n] row-major
}

impl ShapeMatrixField {
    pub fn grid(&self) -> &Arc<BoundaryGrid> {
        &self.grid
    }

    pub fn mat(&self, idx: usize) -> Mat {
        let n = self.grid.ndim();
        let mut m = smallmat::ZERO;
        for i in 0..n {
            for j in 0..n {
                m[i * 3 + j] = self.data[idx * n * n + i * n + j];
            }
        }
        m
    }

    pub fn from_mats(grid: &Arc<BoundaryGrid>, mats: &[Mat]) -> Self {
        let n = grid.ndim();
        let mut data = vec![0.0; grid.len() * n * n];
        for (idx, m) in mats.iter().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    data[idx * n * n + i * n + j] = m[i * 3 + j];
                }
            }
        }
        Self { grid: grid.clone(), data }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

fn small_to_dm(n: usize, m: &Mat) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| m[i * 3 + j])
}

/// Pointwise sigma_k of a shape-matrix field.
pub fn sigma_k(b: &ShapeMatrixField, k: usize) -> Result<ScalarField> {
    let n = b.grid().ndim();
    if k < 1 || k > n {
        return Err(Error::Validation(format!("k = {k} outside 1..={n}")));
    }
    let mut out = ScalarField::zeros(b.grid());
    for idx in 0..b.grid().len() {
        let m = small_to_dm(n, &b.mat(idx));
        out.data_mut()[idx] = sigma_values(&m)[k];
    }
    Ok(out)
}

/// Pointwise Newton polynomial T_{k-1}(B) of a shape-matrix field.
pub fn newton_polynomial(b: &ShapeMatrixField, k: usize) -> Result<ShapeMatrixField> {
    let n = b.grid().ndim();
    if k < 1 || k > n {
        return Err(Error::Validation(format!("k = {k} outside 1..={n}")));
    }
    let mut mats = Vec::with_capacity(b.grid().len());
    for idx in 0..b.grid().len() {
        let m = small_to_dm(n, &b.mat(idx));
        let t = newton_polynomial_matrix(&m, k);
        let mut out = smallmat::ZERO;
        for i in 0..n {
            for j in 0..n {
                out[i * 3 + j] = t[(i, j)];
            }
        }
        mats.push(out);
    }
    Ok(ShapeMatrixField::from_mats(b.grid(), &mats))
}

/// Shape operator of the located leaf {x e^phi = eps}.
pub fn shape_operator(
    m: &MetricExpansion,
    ef: &ExtendedFactor,
    eps: f64,
) -> Result<ShapeMatrixField> {
    let n = m.ndim();
    let (_, g_mats, ii_mats) = leaf_tensors(m, ef, eps)?;
    let mut mats = Vec::with_capacity(g_mats.len());
    for (g, a) in g_mats.iter().zip(&ii_mats) {
        let gi = smallmat::inverse(n, g).ok_or(Error::SingularMetric { point: 0 })?;
        mats.push(smallmat::mul(n, &gi, a));
    }
    Ok(ShapeMatrixField::from_mats(m.grid(), &mats))
}

/// (sigma_k(B) - binom(n,k)) via sigma_j(B - I) (no large-term
/// cancellation): sigma_k(I + E) = sum_j binom(n-j, k-j) sigma_j(E).
fn sigma_k_shifted(n: usize, b: &Mat, k: usize) -> f64 {
    let mut e = small_to_dm(n, b);
    for i in 0..n {
        e[(i, i)] -= 1.0;
    }
    let sig_e = sigma_values(&e);
    let mut out = 0.0;
    for j in 1..=k {
        out += binomial((n - j) as i64, (k - j) as i64) as f64 * sig_e[j];
    }
    out
}

/// The scaled sigma_k operator (sigma_k(leaf) - binom(n,k)) / eps^2
/// through the full pipeline.
pub fn eval_sigma_scaled(
    m: &MetricExpansion,
    phi0: &ScalarField,
    eps: f64,
    k: usize,
    cfg: &crate::leaf::PipelineCfg,
) -> Result<ScalarField> {
    let n = m.ndim();
    let x_eval = cfg.x_eval(m, phi0, eps);
    let ef = extend(phi0, m, x_eval, cfg.steps)?;
    let (_, g_mats, ii_mats) = leaf_tensors(m, &ef, eps)?;
    let mut out = ScalarField::zeros(m.grid());
    for idx in 0..m.grid().len() {
        let gi = smallmat::inverse(n, &g_mats[idx])
            .ok_or(Error::SingularMetric { point: idx })?;
        let b = smallmat::mul(n, &gi, &ii_mats[idx]);
        out.data_mut()[idx] = sigma_k_shifted(n, &b, k) / (eps * eps);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// S_k(x) expansion
// ---------------------------------------------------------------------------

/// The expansion S_k(x) = sigma_k of the unperturbed level sets: closed
/// form and ladder-fitted coefficients are both reported; the x^2
/// coefficients disagree in general and the fitted value is authoritative.
#[derive(Debug, Clone)]
pub struct SigmaExpansion {
    pub k: usize,
    /// binom(n, k), exact leading coefficient
    pub s0: f64,
    pub closed_s1: ScalarField,
    pub closed_s2: ScalarField,
    pub fitted_s1: ScalarField,
    pub fitted_s2: ScalarField,
    pub s1_discrepancy: f64,
    pub s2_discrepancy: f64,
}

/// Shape operator of the unperturbed level set at depth x, pointwise:
/// B(x) = h(x)^{-1} (h(x) - x d_x h(x) / 2).
pub fn level_shape_matrix(m: &MetricExpansion, x: f64) -> Result<ShapeMatrixField> {
    let n = m.ndim();
    let mut mats = Vec::with_capacity(m.grid().len());
    for idx in 0..m.grid().len() {
        let h = m.h_point(idx, x);
        let dxh = m.dxh_point(idx, x);
        let hi = smallmat::inverse(n, &h).ok_or(Error::SingularMetric { point: idx })?;
        let inner = smallmat::add(n, &h, &smallmat::scale(n, &dxh, -0.5 * x));
        mats.push(smallmat::mul(n, &hi, &inner));
    }
    Ok(ShapeMatrixField::from_mats(m.grid(), &mats))
}

pub fn sk_expansion(m: &MetricExpansion, k: usize) -> Result<SigmaExpansion> {
    let grid = m.grid().clone();
    let n = grid.ndim();
    if k < 1 || k > n {
        return Err(Error::Validation(format!("k = {k} outside 1..={n}")));
    }
    let kappas = m.kappas()?;
    let ni = n as i64;
    let ki = k as i64;
    let b_nk = binomial(ni, ki) as f64;
    let b1 = binomial(ni - 1, ki - 1) as f64;
    let b2 = binomial(ni - 2, ki - 2) as f64;
    // sigma_2 of the raised h1
    let mut sigma2_h1 = ScalarField::zeros(&grid);
    for idx in 0..grid.len() {
        let h0 = smallmat::from_tri(n, m.h0().tri(idx));
        let h1 = smallmat::from_tri(n, m.h1().tri(idx));
        let hi = smallmat::inverse(n, &h0).ok_or(Error::SingularMetric { point: idx })?;
        let raised = small_to_dm(n, &smallmat::mul(n, &hi, &h1));
        sigma2_h1.data_mut()[idx] = if n >= 2 { sigma_values(&raised)[2] } else { 0.0 };
    }
    let closed_s1 = kappas.kappa1.scale(-b1);
    let closed_s2 = kappas
        .kappa2
        .scale(-2.0 * b1)
        .add(&sigma2_h1.scale(0.5 * b2));

    // ladder fit of sigma_k(B(x)) - binom against powers of x
    let xs = fit::log_ladder(1e-3, f64::min(0.12, 0.8 * m.x_max()), 12);
    let mut samples: Vec<Vec<f64>> = Vec::with_capacity(xs.len());
    for &x in &xs {
        let b = level_shape_matrix(m, x)?;
        let mut vals = vec![0.0; grid.len()];
        for idx in 0..grid.len() {
            vals[idx] = sigma_k_shifted(n, &b.mat(idx), k) / x;
        }
        samples.push(vals);
    }
    let ys: Vec<&[f64]> = samples.iter().map(|v| v.as_slice()).collect();
    let coeffs = fit::polyfit_many(&xs, &ys, 4)?;
    let fitted_s1 = ScalarField::from_data(&grid, coeffs[0].clone())?;
    let fitted_s2 = ScalarField::from_data(&grid, coeffs[1].clone())?;
    let s1_discrepancy = closed_s1.sub(&fitted_s1).sup_norm();
    let s2_discrepancy = closed_s2.sub(&fitted_s2).sup_norm();
    Ok(SigmaExpansion {
        k,
        s0: b_nk,
        closed_s1,
        closed_s2,
        fitted_s1,
        fitted_s2,
        s1_discrepancy,
        s2_discrepancy,
    })
}

// ---------------------------------------------------------------------------
// constant sigma_k leaves
// ---------------------------------------------------------------------------

/// Newton solve of sigma_k(leaf) = target at eps. The equation is solved
/// in the scaled form (sigma_k - binom)/eps^2 = (target - binom)/eps^2 so
/// that k = 1 shares units (and roots) with the CMC solver.
pub fn solve_sigma_k_leaf(
    m: &MetricExpansion,
    eps: f64,
    k: usize,
    target_sigma: f64,
    init: &ScalarField,
    opts: &SolverOptions,
) -> Result<Leaf> {
    let n = m.ndim();
    let ni = n as i64;
    let b_nk = binomial(ni, k as i64) as f64;
    let b1 = binomial(ni - 1, k as i64 - 1) as f64;
    let target2 = (target_sigma - b_nk) / (eps * eps);
    let cfg = opts.cfg;
    let problem = NewtonProblem {
        m,
        eval: Box::new(move |phi: &ScalarField, e: f64| eval_sigma_scaled(m, phi, e, k, &cfg)),
        // principal part ~ -binom(n-1,k-1)(Lap - 2 kappa2-bar)
        symbol: Box::new(move |s| b1 * s - 2.0 * target2),
    };
    let (phi0, residual, iters, upd, history) = newton_solve(&problem, eps, target2, init, opts)?;
    // recompute sigma_k through the public pipeline
    let x_eval = opts.cfg.x_eval(m, &phi0, eps);
    let ef = extend(&phi0, m, x_eval, opts.cfg.steps)?;
    let b = shape_operator(m, &ef, eps)?;
    let achieved = sigma_k(&b, k)?;
    let level = locate_level_set(&ef, eps)?;
    Ok(Leaf {
        eps,
        phi0,
        target: target2,
        target_h: target_sigma,
        achieved_h: achieved,
        residual,
        newton_iters: iters,
        x_star: level.x_star,
        scaled_update: upd,
        residual_history: history,
    })
}
