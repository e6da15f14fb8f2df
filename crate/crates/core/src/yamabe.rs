//! Generalized conformal Laplacian, the sign of the generalized boundary
//! Yamabe invariant, and the normalization solver that makes kappa2 a
//! constant by a conformal change of the boundary representative.

use crate::error::{Error, Result};
use crate::field::{ScalarField, SymTensorField};
use crate::leaf::{mean_symbol, transform_kappas};
use crate::linsolve::cg;
use crate::metric::{KappaPair, MetricExpansion};
use crate::ops::{gradient_norm_sq, integrate, laplace_beltrami, metric_data, volume};
use crate::spectral::fourier_diagonal_apply;
use serde::Serialize;

/// Generalized conformal Laplacian: L u = -(Lap_{h0} u + (n-2)/2 kappa2 u).
/// For n = 2 this reduces to -Lap.
pub fn apply_gcl(
    u: &ScalarField,
    h0: &SymTensorField,
    kappa2: &ScalarField,
) -> Result<ScalarField> {
    let n = h0.grid().ndim() as f64;
    let lap = laplace_beltrami(u, h0)?;
    let c2 = (n - 2.0) / 2.0;
    Ok(lap.zip_with(&u.zip_with(kappa2, |uu, k| c2 * k * uu), |l, v| -(l + v)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InvariantSign {
    Positive,
    Negative,
    ZeroIndeterminate,
}

/// Sign of the generalized boundary Yamabe invariant: least eigenvalue of
/// the generalized conformal Laplacian for n >= 3, sign of -int kappa2 dV
/// for n = 2. Returns the sign with the determining value.
pub fn invariant_sign(m: &MetricExpansion) -> Result<(InvariantSign, f64)> {
    let n = m.ndim();
    let k = m.kappas()?;
    if n == 2 {
        let v = -integrate(&k.kappa2, m.h0())?;
        return Ok((classify(v), v));
    }
    let lambda = gcl_least_eigenvalue(m.h0(), &k.kappa2)?;
    Ok((classify(lambda), lambda))
}

fn classify(v: f64) -> InvariantSign {
    if v.abs() < 1e-8 {
        InvariantSign::ZeroIndeterminate
    } else if v > 0.0 {
        InvariantSign::Positive
    } else {
        InvariantSign::Negative
    }
}

/// Least eigenvalue of -(Lap + c2 kappa2), inverse iteration with a dense
/// fallback on coarse grids.
pub fn gcl_least_eigenvalue(h0: &SymTensorField, kappa2: &ScalarField) -> Result<f64> {
    let grid = h0.grid().clone();
    let n = grid.ndim() as f64;
    let c2 = (n - 2.0) / 2.0;
    let md = metric_data(h0)?;
    let weights: Vec<f64> = md.sqrt_det.iter().map(|w| w * grid.cell_volume()).collect();
    let h0c = h0.clone();
    let k2c = kappa2.clone();
    let op = (grid.clone(), move |v: &ScalarField| apply_gcl(v, &h0c, &k2c));
    if grid.len() <= 1100 {
        let (vals, _) = crate::eig::dense_sym_eig(&op, &weights)?;
        return Ok(vals[0]);
    }
    // spectrum bounded below by -c2 max kappa2
    let sigma = -c2 * kappa2.max() - 1.0;
    let sym = mean_symbol(h0)?;
    let diag: Vec<f64> = sym.iter().map(|s| 1.0 / (s - sigma + 1.0)).collect();
    let pc = move |r: &ScalarField| -> Result<ScalarField> {
        Ok(fourier_diagonal_apply(r, &diag))
    };
    let (lambda, _) = crate::eig::smallest_eig_inverse_iteration(
        &op,
        &weights,
        sigma,
        Some(&pc),
        1e-11,
        300,
    )?;
    Ok(lambda)
}

/// Result of the kappa2 normalization.
#[derive(Debug, Clone)]
pub struct YamabeSolution {
    pub phi0: ScalarField,
    /// e^{(n-2) phi0 / 2} for n >= 3
    pub u0: Option<ScalarField>,
    pub kappa_bar2: f64,
    pub residual: f64,
    pub nondegenerate: bool,
    pub lambda_min: f64,
    pub sign: InvariantSign,
    pub sign_value: f64,
    pub a_priori_ok: bool,
    pub p_ladder: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct YamabeOptions {
    pub tol: f64,
    pub max_newton: usize,
    /// proceed in the positive / indeterminate regime with this start
    pub init_override: Option<ScalarField>,
}

impl Default for YamabeOptions {
    fn default() -> Self {
        Self { tol: 1e-11, max_newton: 60, init_override: None }
    }
}

/// Solve e^{-2 phi0}(kappa2 + Lap phi0 + (n-2)/2 |grad phi0|^2) = const.
pub fn normalize_kappa2(m: &MetricExpansion, opts: &YamabeOptions) -> Result<YamabeSolution> {
    let n = m.ndim();
    let (sign, sign_value) = invariant_sign(m)?;
    if sign != InvariantSign::Negative && opts.init_override.is_none() {
        return Err(Error::SignIncompatibility(format!(
            "generalized boundary Yamabe invariant is {sign:?} (value {sign_value:.3e}); \
             normalization is only claimed in the negative regime, pass an explicit start to override"
        )));
    }
    let mut sol = if n == 2 {
        normalize_n2(m, opts)?
    } else {
        normalize_subcritical(m, opts)?
    };
    sol.sign = sign;
    sol.sign_value = sign_value;
    let (nd, lam) = nondegeneracy(&sol, m)?;
    sol.nondegenerate = nd;
    sol.lambda_min = lam;
    Ok(sol)
}

fn fourier_pc(h0: &SymTensorField, shift: f64) -> Result<impl Fn(&[f64], &mut [f64]) + '_> {
    let sym = mean_symbol(h0)?;
    let grid = h0.grid().clone();
    let diag: Vec<f64> = sym.iter().map(|s| 1.0 / (s + shift)).collect();
    Ok(move |r: &[f64], out: &mut [f64]| {
        let f = ScalarField::from_data(&grid, r.to_vec()).unwrap();
        out.copy_from_slice(fourier_diagonal_apply(&f, &diag).data());
    })
}

/// n = 2: direct Newton on F(phi) = Lap phi + kappa2 - kbar2 e^{2 phi}
/// with kbar2 fixed to the h0-average of kappa2.
fn normalize_n2(m: &MetricExpansion, opts: &YamabeOptions) -> Result<YamabeSolution> {
    let grid = m.grid().clone();
    let h0 = m.h0();
    let k = m.kappas()?;
    let vol = volume(h0)?;
    let kbar = integrate(&k.kappa2, h0)? / vol;
    if kbar.abs() < 1e-10 {
        return Err(Error::Degenerate(
            "kappa1 = 0 with average kappa2 = 0: the linearization is not invertible".into(),
        ));
    }
    let md = metric_data(h0)?;
    let len = grid.len();
    let near_null = kbar.abs() < 1e-8;

    let mut phi = opts.init_override.clone().unwrap_or_else(|| ScalarField::zeros(&grid));
    let f_of = |phi: &ScalarField| -> Result<ScalarField> {
        let lap = laplace_beltrami(phi, h0)?;
        Ok(lap.add(&k.kappa2).zip_with(phi, |v, p| v - kbar * (2.0 * p).exp()))
    };
    let mut f = f_of(&phi)?;
    let mut iters = 0;
    for _ in 0..opts.max_newton {
        let r = f.sup_norm();
        if r < opts.tol {
            break;
        }
        iters += 1;
        // solve (-Lap + 2 kbar e^{2 phi}) delta = F in symmetrized form
        let sqrt_w: Vec<f64> = md.sqrt_det.iter().map(|w| w.sqrt()).collect();
        let e2phi: Vec<f64> = phi.data().iter().map(|p| (2.0 * p).exp()).collect();
        let apply = |v: &[f64], out: &mut [f64]| {
            let vf = ScalarField::from_data(
                &grid,
                v.iter().zip(&sqrt_w).map(|(x, s)| x / s).collect(),
            )
            .unwrap();
            let lap = laplace_beltrami(&vf, h0).expect("laplacian in newton solve");
            for i in 0..len {
                out[i] =
                    (-lap.data()[i] + 2.0 * kbar * e2phi[i] * vf.data()[i]) * sqrt_w[i];
            }
        };
        let pc = fourier_pc(h0, (2.0 * kbar.abs()).max(1e-6))?;
        let rhs: Vec<f64> = f.data().iter().zip(&sqrt_w).map(|(x, s)| x * s).collect();
        let (delta_t, _) = cg(&apply, &rhs, None, Some(&pc), None, 1e-13, 4000)?;
        let mut delta = ScalarField::from_data(
            &grid,
            delta_t.iter().zip(&sqrt_w).map(|(x, s)| x / s).collect(),
        )?;
        if near_null {
            let mean = delta.mean();
            delta = delta.map(|v| v - mean);
        }
        // Armijo on the residual norm
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..10 {
            let mut trial = phi.clone();
            trial.axpy(t, &delta);
            let ft = f_of(&trial)?;
            if ft.sup_norm() <= (1.0 - 1e-4 * t) * r {
                phi = trial;
                f = ft;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(Error::NewtonDiverged { residual: r, iters });
        }
    }
    let residual = residual_yyttee(m, &phi, kbar)?;
    if residual >= 1e-9 {
        return Err(Error::NewtonDiverged { residual, iters });
    }
    Ok(YamabeSolution {
        phi0: phi,
        u0: None,
        kappa_bar2: kbar,
        residual,
        nondegenerate: false,
        lambda_min: 0.0,
        sign: InvariantSign::Negative,
        sign_value: 0.0,
        a_priori_ok: true,
        p_ladder: Vec::new(),
    })
}

/// Residual of the normalization equation in its conformal form.
pub fn residual_yyttee(m: &MetricExpansion, phi0: &ScalarField, kbar: f64) -> Result<f64> {
    let k = m.kappas()?;
    let transformed = transform_kappas(&k, phi0, m.h0())?;
    Ok(transformed.kappa2.map(|v| v - kbar).sup_norm())
}

/// n >= 3: subcritical continuation. Minimize E_p for p = 1.2 by descent,
/// Newton-polish, then follow p geometrically to 0.999 p_crit and finish
/// with Newton at the critical exponent.
fn normalize_subcritical(m: &MetricExpansion, opts: &YamabeOptions) -> Result<YamabeSolution> {
    let grid = m.grid().clone();
    let nf = m.ndim() as f64;
    let c2 = (nf - 2.0) / 2.0;
    let h0 = m.h0();
    let k = m.kappas()?;
    let md = metric_data(h0)?;
    let len = grid.len();
    let vol = volume(h0)?;
    let kappa2_avg = integrate(&k.kappa2, h0)? / vol;
    let kbar = if kappa2_avg > 1e-8 { kappa2_avg } else { 0.5 * k.kappa2.max() };
    if kbar <= 0.0 {
        return Err(Error::SignIncompatibility(
            "kappa2 admits no positive normalization constant".into(),
        ));
    }
    let p_crit = (nf + 2.0) / (nf - 2.0);
    let mut ps = vec![1.2];
    loop {
        let last = *ps.last().unwrap();
        if last >= 0.999 * p_crit {
            break;
        }
        ps.push((last * 1.35).min(0.999 * p_crit));
    }
    ps.push(p_crit);

    let g_of = |u: &ScalarField, p: f64| -> Result<ScalarField> {
        let lap = laplace_beltrami(u, h0)?;
        Ok(ScalarField::from_data(
            &grid,
            (0..len)
                .map(|i| {
                    let uu = u.data()[i];
                    lap.data()[i] + c2 * k.kappa2.data()[i] * uu
                        - c2 * kbar * uu.abs().powf(p - 1.0) * uu
                })
                .collect(),
        )?)
    };
    let energy = |u: &ScalarField, p: f64| -> Result<f64> {
        let gsq = gradient_norm_sq(u, h0)?;
        let integrand = ScalarField::from_data(
            &grid,
            (0..len)
                .map(|i| {
                    let uu = u.data()[i];
                    0.5 * (gsq.data()[i] - c2 * k.kappa2.data()[i] * uu * uu)
                        + c2 * kbar / (p + 1.0) * uu.abs().powf(p + 1.0)
                })
                .collect(),
        )?;
        integrate(&integrand, h0)
    };

    // start: constant minimizing E_p along constants, or the caller's start
    let p0 = ps[0];
    let mut u = match &opts.init_override {
        Some(phi) => phi.map(|v| ((nf - 2.0) / 2.0 * v).exp()),
        None => {
            let c = (kappa2_avg.max(0.1 * kbar) / kbar).powf(1.0 / (p0 - 1.0));
            ScalarField::constant(&grid, c)
        }
    };
    // descent phase at the first exponent
    let mut e = energy(&u, p0)?;
    for _ in 0..400 {
        let g = g_of(&u, p0)?;
        if g.sup_norm() < 1e-3 {
            break;
        }
        let mut eta = 0.05;
        let mut moved = false;
        for _ in 0..20 {
            let mut trial = u.clone();
            trial.axpy(eta, &g); // descent direction of E is +G (G = -grad E)
            if trial.min() > 0.0 {
                let et = energy(&trial, p0)?;
                if et < e {
                    u = trial;
                    e = et;
                    moved = true;
                    break;
                }
            }
            eta *= 0.5;
        }
        if !moved {
            break;
        }
    }

    let mut a_priori_ok = true;
    let mut iters_total = 0;
    for &p in &ps {
        // Newton polish at this exponent
        let mut g = g_of(&u, p)?;
        for _ in 0..opts.max_newton {
            let r = g.sup_norm();
            if r < opts.tol {
                break;
            }
            iters_total += 1;
            let sqrt_w: Vec<f64> = md.sqrt_det.iter().map(|w| w.sqrt()).collect();
            let pot: Vec<f64> = (0..len)
                .map(|i| {
                    -c2 * k.kappa2.data()[i]
                        + c2 * kbar * p * u.data()[i].abs().powf(p - 1.0)
                })
                .collect();
            let apply = |v: &[f64], out: &mut [f64]| {
                let vf = ScalarField::from_data(
                    &grid,
                    v.iter().zip(&sqrt_w).map(|(x, s)| x / s).collect(),
                )
                .unwrap();
                let lap = laplace_beltrami(&vf, h0).expect("laplacian in newton solve");
                for i in 0..len {
                    out[i] = (-lap.data()[i] + pot[i] * vf.data()[i]) * sqrt_w[i];
                }
            };
            let shift = (c2 * kbar * p).max(1e-4);
            let pc = fourier_pc(h0, shift)?;
            let rhs: Vec<f64> = g.data().iter().zip(&sqrt_w).map(|(x, s)| x * s).collect();
            let (delta_t, _) = cg(&apply, &rhs, None, Some(&pc), None, 1e-13, 6000)?;
            let delta = ScalarField::from_data(
                &grid,
                delta_t.iter().zip(&sqrt_w).map(|(x, s)| x / s).collect(),
            )?;
            let mut t = 1.0;
            let mut ok = false;
            for _ in 0..12 {
                let mut trial = u.clone();
                trial.axpy(t, &delta);
                if trial.min() > 0.0 {
                    let gt = g_of(&trial, p)?;
                    if gt.sup_norm() <= (1.0 - 1e-4 * t) * r {
                        u = trial;
                        g = gt;
                        ok = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if !ok {
                return Err(Error::NewtonDiverged { residual: r, iters: iters_total });
            }
        }
        // sup estimate from the maximum principle
        if kbar * u.max().powf(p - 1.0) > k.kappa2.map(f64::abs).max() * (1.0 + 1e-9) {
            a_priori_ok = false;
        }
    }

    let phi0 = u.map(|v| 2.0 / (nf - 2.0) * v.ln());
    // at the critical exponent the conjugation identity gives exactly
    // kappa2-transformed = kbar, so the conformal-form residual applies
    let residual = residual_yyttee(m, &phi0, kbar)?;
    Ok(YamabeSolution {
        phi0,
        u0: Some(u),
        kappa_bar2: kbar,
        residual,
        nondegenerate: false,
        lambda_min: 0.0,
        sign: InvariantSign::Negative,
        sign_value: 0.0,
        a_priori_ok,
        p_ladder: ps,
    })
}

/// Least-magnitude eigenvalue of the linearized normalization and the
/// nondegeneracy verdict. For n = 2 the operator is Lap_{hbar} - 2 kbar in
/// the transformed gauge; for n >= 3 it is
/// Lap + c2 kappa2 - (n+2)/2 kbar u0^{4/(n-2)}.
pub fn nondegeneracy(sol: &YamabeSolution, m: &MetricExpansion) -> Result<(bool, f64)> {
    let grid = m.grid().clone();
    let n = m.ndim();
    let nf = n as f64;
    let h0 = m.h0();
    let md = metric_data(h0)?;
    let kbar = sol.kappa_bar2;
    let op: Box<dyn Fn(&ScalarField) -> Result<ScalarField> + Sync>;
    let weights: Vec<f64>;
    if n == 2 {
        let e2phi = sol.phi0.map(|p| (2.0 * p).exp());
        weights = (0..grid.len())
            .map(|i| md.sqrt_det[i] * e2phi.data()[i] * grid.cell_volume())
            .collect();
        let h0c = h0.clone();
        let e2 = e2phi.clone();
        op = Box::new(move |v: &ScalarField| {
            let lap = laplace_beltrami(v, &h0c)?;
            Ok(ScalarField::from_data(
                v.grid(),
                (0..lap.data().len())
                    .map(|i| -(lap.data()[i] / e2.data()[i] - 2.0 * kbar * v.data()[i]))
                    .collect(),
            )?)
        });
    } else {
        let u0 = sol
            .u0
            .clone()
            .ok_or_else(|| Error::Validation("missing u0 in Yamabe solution".into()))?;
        weights = md.sqrt_det.iter().map(|w| w * grid.cell_volume()).collect();
        let k = m.kappas()?;
        let c2 = (nf - 2.0) / 2.0;
        let h0c = h0.clone();
        op = Box::new(move |v: &ScalarField| {
            let lap = laplace_beltrami(v, &h0c)?;
            Ok(ScalarField::from_data(
                v.grid(),
                (0..lap.data().len())
                    .map(|i| {
                        -(lap.data()[i]
                            + (c2 * k.kappa2.data()[i]
                                - (nf + 2.0) / 2.0
                                    * kbar
                                    * u0.data()[i].powf(4.0 / (nf - 2.0)))
                                * v.data()[i])
                    })
                    .collect(),
            )?)
        });
    }
    // op = -(linearization): positive semidefinite at a stable solution;
    // its smallest eigenvalue is the least-magnitude eigenvalue sought.
    let gop = (grid.clone(), move |v: &ScalarField| op(v));
    let lam_min = if grid.len() <= 1100 {
        let (vals, _) = crate::eig::dense_sym_eig(&gop, &weights)?;
        vals[0]
    } else {
        let (lam, _) = crate::eig::smallest_eig_inverse_iteration(
            &gop,
            &weights,
            -0.5,
            None,
            1e-11,
            300,
        )?;
        lam
    };
    // report the eigenvalue of the linearization itself (sign flipped back)
    Ok((lam_min.abs() > 1e-8, -lam_min))
}

/// The kappa invariants after applying a Yamabe solution (diagnostic).
pub fn transformed_kappas(m: &MetricExpansion, sol: &YamabeSolution) -> Result<KappaPair> {
    transform_kappas(&m.kappas()?, &sol.phi0, m.h0())
}
