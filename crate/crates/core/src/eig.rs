//! Eigenvalue machinery for grid operators that are self-adjoint with
//! respect to a weighted L2 product: dense symmetrized eigendecomposition
//! (the oracle-grade route on coarse grids), shifted inverse iteration for
//! extremal eigenvalues, and a low-mode Fourier-Galerkin reduction for
//! larger grids.

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::BoundaryGrid;
use crate::linsolve::cg;
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

/// Apply-closure type for grid operators.
pub trait GridOp: Sync {
    fn apply(&self, v: &ScalarField) -> Result<ScalarField>;
    fn grid(&self) -> &Arc<BoundaryGrid>;
}

impl<F> GridOp for (Arc<BoundaryGrid>, F)
where
    F: Fn(&ScalarField) -> Result<ScalarField> + Sync,
{
    fn apply(&self, v: &ScalarField) -> Result<ScalarField> {
        (self.1)(v)
    }
    fn grid(&self) -> &Arc<BoundaryGrid> {
        &self.0
    }
}

/// Dense eigendecomposition of a weighted-self-adjoint operator by
/// symmetrization with D^{1/2} (D = quadrature weights). Returns
/// eigenvalues ascending and eigenvectors (columns, physical basis,
/// D-orthonormal).
pub fn dense_sym_eig(op: &dyn GridOp, weights: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let grid = op.grid().clone();
    let n = grid.len();
    let sqrt_w: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut basis = ScalarField::zeros(&grid);
    for j in 0..n {
        basis.data_mut().fill(0.0);
        basis.data_mut()[j] = 1.0 / sqrt_w[j];
        let col = op.apply(&basis)?;
        for i in 0..n {
            a[(i, j)] = col.data()[i] * sqrt_w[i];
        }
    }
    // the operator is self-adjoint in the weighted product, so the
    // symmetrized matrix is symmetric up to roundoff
    let a_sym = (&a + a.transpose()) * 0.5;
    let se = a_sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].partial_cmp(&se.eigenvalues[j]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vecs = DMatrix::<f64>::zeros(n, n);
    for (c, &oi) in order.iter().enumerate() {
        for i in 0..n {
            vecs[(i, c)] = se.eigenvectors[(i, oi)] / sqrt_w[i];
        }
    }
    Ok((vals, vecs))
}

/// Smallest eigenvalue (and eigenvector) of a weighted-self-adjoint
/// operator that is bounded below, by shifted inverse power iteration:
/// power iteration on (A - sigma)^{-1} with sigma below the spectrum,
/// inner solves by CG.
pub fn smallest_eig_inverse_iteration(
    op: &dyn GridOp,
    weights: &[f64],
    sigma: f64,
    precond: Option<&dyn Fn(&ScalarField) -> Result<ScalarField>>,
    tol: f64,
    max_iter: usize,
) -> Result<(f64, ScalarField)> {
    let grid = op.grid().clone();
    let n = grid.len();
    let grid_a = grid.clone();
    let apply_shifted = move |v: &[f64], out: &mut [f64]| {
        let vf = ScalarField::from_data(&grid_a, v.to_vec()).unwrap();
        let av = op.apply(&vf).expect("operator apply failed");
        for i in 0..n {
            out[i] = av.data()[i] - sigma * v[i];
        }
    };
    let grid_p = grid.clone();
    let pc_closure = precond.map(|p| {
        move |v: &[f64], out: &mut [f64]| {
            let vf = ScalarField::from_data(&grid_p, v.to_vec()).unwrap();
            let pv = p(&vf).expect("preconditioner failed");
            out.copy_from_slice(pv.data());
        }
    });

    let mut v: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.3 * ((i * 2654435761usize) as f64 / usize::MAX as f64 - 0.5))
        .collect();
    let norm = |x: &[f64]| -> f64 {
        x.iter().zip(weights).map(|(a, w)| a * a * w).sum::<f64>().sqrt()
    };
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut lambda_old = f64::INFINITY;
    for it in 0..max_iter {
        let (z, _) = match &pc_closure {
            Some(p) => cg(&apply_shifted, &v, None, Some(p), Some(weights), 1e-10, 20 * n)?,
            None => cg(&apply_shifted, &v, None, None, Some(weights), 1e-10, 20 * n)?,
        };
        let nz = norm(&z);
        if !nz.is_finite() || nz == 0.0 {
            return Err(Error::EigenFailure("inverse iteration broke down".into()));
        }
        let zn: Vec<f64> = z.iter().map(|x| x / nz).collect();
        // Rayleigh quotient
        let zf = ScalarField::from_data(&grid, zn.clone()).unwrap();
        let az = op.apply(&zf)?;
        let lambda: f64 =
            az.data().iter().zip(&zn).zip(weights).map(|((a, b), w)| a * b * w).sum();
        v = zn;
        if (lambda - lambda_old).abs() <= tol * (1.0 + lambda.abs()) && it >= 2 {
            return Ok((lambda, ScalarField::from_data(&grid, v).unwrap()));
        }
        lambda_old = lambda;
    }
    Err(Error::EigenFailure(format!(
        "inverse iteration did not converge in {max_iter} sweeps"
    )))
}

/// Real trigonometric low-mode basis: constant, cos(k.y), sin(k.y) for a
/// set of representative lattice vectors.
pub struct FourierBasis {
    pub grid: Arc<BoundaryGrid>,
    pub fields: Vec<ScalarField>,
    pub labels: Vec<(Vec<i64>, bool)>, // lattice vector, is_sine
}

impl FourierBasis {
    /// All modes with |k|^2 <= k2_max (one representative per +-k pair).
    pub fn lowpass(grid: &Arc<BoundaryGrid>, k2_max: i64) -> Self {
        let n = grid.ndim();
        let mut reps: Vec<Vec<i64>> = Vec::new();
        let kmax = (k2_max as f64).sqrt().floor() as i64;
        let push_unique = |k: Vec<i64>, reps: &mut Vec<Vec<i64>>| {
            let neg: Vec<i64> = k.iter().map(|x| -x).collect();
            if !reps.contains(&k) && !reps.contains(&neg) {
                reps.push(k);
            }
        };
        let mut enumerate = vec![0i64; n];
        fn rec(
            axis: usize,
            n: usize,
            kmax: i64,
            k2max: i64,
            cur: &mut Vec<i64>,
            out: &mut Vec<Vec<i64>>,
        ) {
            if axis == n {
                let k2: i64 = cur.iter().map(|x| x * x).sum();
                if k2 > 0 && k2 <= k2max {
                    out.push(cur.clone());
                }
                return;
            }
            for k in -kmax..=kmax {
                cur[axis] = k;
                rec(axis + 1, n, kmax, k2max, cur, out);
            }
        }
        let mut all = Vec::new();
        rec(0, n, kmax, k2_max, &mut enumerate, &mut all);
        for k in all {
            push_unique(k, &mut reps);
        }

        let mut fields = Vec::new();
        let mut labels = Vec::new();
        fields.push(ScalarField::constant(grid, 1.0));
        labels.push((vec![0i64; n], false));
        for k in reps {
            let kk = k.clone();
            let phase = |y: &[f64]| -> f64 {
                let mut s = 0.0;
                for a in 0..y.len() {
                    s += 2.0 * std::f64::consts::PI * kk[a] as f64 * y[a]
                        / grid.periods()[a];
                }
                s
            };
            fields.push(ScalarField::from_fn(grid, |y| phase(y).cos()));
            labels.push((k.clone(), false));
            fields.push(ScalarField::from_fn(grid, |y| phase(y).sin()));
            labels.push((k, true));
        }
        Self { grid: grid.clone(), fields, labels }
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }
}

/// Rayleigh-Ritz eigenvalues of a weighted-self-adjoint operator on the
/// span of a low-mode Fourier basis (generalized problem with the weighted
/// mass matrix). Exact for constant-coefficient operators; a spectrally
/// accurate reduction for smooth ones. Returns ascending eigenvalues with
/// basis-coefficient eigenvectors.
pub fn lowmode_eig(
    op: &dyn GridOp,
    weights: &[f64],
    basis: &FourierBasis,
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let m = basis.len();
    let dot = |a: &ScalarField, b: &ScalarField| -> f64 {
        a.data().iter().zip(b.data()).zip(weights).map(|((x, y), w)| x * y * w).sum()
    };
    let mut amat = DMatrix::<f64>::zeros(m, m);
    let mut mmat = DMatrix::<f64>::zeros(m, m);
    let applied: Vec<ScalarField> = basis
        .fields
        .iter()
        .map(|f| op.apply(f))
        .collect::<Result<_>>()?;
    for i in 0..m {
        for j in 0..m {
            amat[(i, j)] = dot(&basis.fields[i], &applied[j]);
        }
        for j in i..m {
            let v = dot(&basis.fields[i], &basis.fields[j]);
            mmat[(i, j)] = v;
            mmat[(j, i)] = v;
        }
    }
    let amat = (&amat + amat.transpose()) * 0.5;
    let chol = mmat
        .cholesky()
        .ok_or_else(|| Error::EigenFailure("mass matrix not positive definite".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::EigenFailure("mass factor not invertible".into()))?;
    let c = &linv * amat * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let se = c.symmetric_eigen();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].partial_cmp(&se.eigenvalues[j]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    // eigenvectors in basis coefficients: y = L^{-T} q
    let mut vecs = DMatrix::<f64>::zeros(m, m);
    let lit = linv.transpose();
    for (col, &oi) in order.iter().enumerate() {
        let q = se.eigenvectors.column(oi);
        let y = &lit * DVector::from_column_slice(q.as_slice());
        for i in 0..m {
            vecs[(i, col)] = y[i];
        }
    }
    Ok((vals, vecs))
}
