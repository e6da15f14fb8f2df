//! Krylov solvers over grid vectors: preconditioned conjugate gradients in
//! a weighted inner product, and right-preconditioned restarted GMRES.

use crate::error::{Error, Result};

pub type ApplyFn<'a> = dyn Fn(&[f64], &mut [f64]) + 'a;

fn dot_w(a: &[f64], b: &[f64], w: Option<&[f64]>) -> f64 {
    match w {
        Some(w) => a.iter().zip(b).zip(w).map(|((x, y), ww)| x * y * ww).sum(),
        None => a.iter().zip(b).map(|(x, y)| x * y).sum(),
    }
}

/// Conjugate gradients for an operator self-adjoint and positive definite
/// in the (optionally weighted) inner product; optional preconditioner
/// must be self-adjoint positive in the same product.
pub fn cg(
    apply: &ApplyFn,
    b: &[f64],
    x0: Option<&[f64]>,
    precond: Option<&ApplyFn>,
    weights: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize)> {
    let n = b.len();
    let mut x = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![0.0; n]);
    let mut r = vec![0.0; n];
    apply(&x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let bnorm = dot_w(b, b, weights).sqrt().max(1e-300);
    let mut z = vec![0.0; n];
    let precond_apply = |r: &[f64], z: &mut [f64]| match precond {
        Some(p) => p(r, z),
        None => z.copy_from_slice(r),
    };
    precond_apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot_w(&r, &z, weights);
    let mut ap = vec![0.0; n];
    for it in 0..max_iter {
        if dot_w(&r, &r, weights).sqrt() <= tol * bnorm {
            return Ok((x, it));
        }
        apply(&p, &mut ap);
        let pap = dot_w(&p, &ap, weights);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(Error::LinearSolveFailure(format!(
                "CG encountered non-positive curvature ({pap:.3e}) at iteration {it}"
            )));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        precond_apply(&r, &mut z);
        let rz_new = dot_w(&r, &z, weights);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    if dot_w(&r, &r, weights).sqrt() <= tol * bnorm {
        Ok((x, max_iter))
    } else {
        Err(Error::LinearSolveFailure(format!(
            "CG did not reach tol {tol:.1e} in {max_iter} iterations"
        )))
    }
}

/// Restarted GMRES with right preconditioning: solves A M^{-1} u = b,
/// x = M^{-1} u. Returns (x, total iterations).
pub fn gmres(
    apply: &ApplyFn,
    b: &[f64],
    x0: Option<&[f64]>,
    precond: Option<&ApplyFn>,
    tol: f64,
    restart: usize,
    max_outer: usize,
) -> Result<(Vec<f64>, usize)> {
    let n = b.len();
    let mut x = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![0.0; n]);
    let bnorm = dot_w(b, b, None).sqrt().max(1e-300);
    let mut total_it = 0usize;
    let precond_apply = |v: &[f64], out: &mut [f64]| match precond {
        Some(p) => p(v, out),
        None => out.copy_from_slice(v),
    };

    for _outer in 0..max_outer {
        let mut r = vec![0.0; n];
        apply(&x, &mut r);
        for i in 0..n {
            r[i] = b[i] - r[i];
        }
        let beta = dot_w(&r, &r, None).sqrt();
        if beta <= tol * bnorm {
            return Ok((x, total_it));
        }
        let m = restart;
        let mut v: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        v.push(r.iter().map(|x| x / beta).collect());
        let mut h = vec![vec![0.0f64; m]; m + 1];
        let mut cs = vec![0.0f64; m];
        let mut sn = vec![0.0f64; m];
        let mut g = vec![0.0f64; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            total_it += 1;
            let mut z = vec![0.0; n];
            precond_apply(&v[k], &mut z);
            let mut w = vec![0.0; n];
            apply(&z, &mut w);
            // modified Gram-Schmidt
            for j in 0..=k {
                let hjk = dot_w(&w, &v[j], None);
                h[j][k] = hjk;
                for i in 0..n {
                    w[i] -= hjk * v[j][i];
                }
            }
            let hk1 = dot_w(&w, &w, None).sqrt();
            h[k + 1][k] = hk1;
            // Givens rotations
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let denom = (h[k][k] * h[k][k] + hk1 * hk1).sqrt();
            if denom < 1e-300 {
                k_used = k;
                break;
            }
            cs[k] = h[k][k] / denom;
            sn[k] = hk1 / denom;
            h[k][k] = denom;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            if g[k + 1].abs() <= tol * bnorm || hk1 < 1e-300 {
                break;
            }
            v.push(w.iter().map(|x| x / hk1).collect());
        }
        // back substitution for y
        let kk = k_used;
        let mut y = vec![0.0f64; kk];
        for irow in (0..kk).rev() {
            let mut s = g[irow];
            for jc in irow + 1..kk {
                s -= h[irow][jc] * y[jc];
            }
            y[irow] = s / h[irow][irow];
        }
        // x += M^{-1} (V y)
        let mut update = vec![0.0; n];
        for (j, yj) in y.iter().enumerate() {
            for i in 0..n {
                update[i] += yj * v[j][i];
            }
        }
        let mut z = vec![0.0; n];
        precond_apply(&update, &mut z);
        for i in 0..n {
            x[i] += z[i];
        }
        if g[kk].abs() <= tol * bnorm {
            return Ok((x, total_it));
        }
    }
    // final residual check
    let mut r = vec![0.0; n];
    apply(&x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    if dot_w(&r, &r, None).sqrt() <= 10.0 * tol * bnorm {
        Ok((x, total_it))
    } else {
        Err(Error::LinearSolveFailure(format!(
            "GMRES stalled at relative residual {:.3e}",
            dot_w(&r, &r, None).sqrt() / bnorm
        )))
    }
}
