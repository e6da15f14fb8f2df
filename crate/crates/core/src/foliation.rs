//! Newton continuation of constant-curvature leaves in all three kappa1
//! regimes, the improved-approximation defect iteration for the resonant
//! regime, and the foliation audit.

use crate::error::{Error, Result};
use crate::extension::{extend, locate_level_set};
use crate::field::ScalarField;
use crate::fit::loglog_slope;
use crate::leaf::{
    eval_n, eval_ntilde, jacobi_potential, mean_curvature, mean_symbol, scaled_norm,
    PipelineCfg,
};
use crate::linsolve::gmres;
use crate::metric::{KappaSign, MetricExpansion};
use crate::spectral::{fourier_diagonal_apply, spectral_tail_fraction};
use crate::yamabe::{normalize_kappa2, YamabeOptions, YamabeSolution};
use serde::{Deserialize, Serialize};
use std::sync::Mutex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Kappa1Zero,
    Kappa1Pos,
    Kappa1Neg,
}

/// Solver options for leaf construction.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub cfg: PipelineCfg,
    pub tol_residual: f64,
    pub tol_update: f64,
    pub max_iters: usize,
    pub gmres_restart: usize,
    pub gmres_max_outer: usize,
    pub fd_step: f64,
    /// central Jacobian differences (2 evals per action) instead of
    /// one-sided (1 eval); central is used by convergence-order studies
    pub jac_central: bool,
    /// J(N) exponent gating the resonant regime.
    pub gate_exponent: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            cfg: PipelineCfg::default(),
            tol_residual: 1e-10,
            tol_update: 1e-10,
            max_iters: 25,
            gmres_restart: 30,
            gmres_max_outer: 4,
            fd_step: 1e-5,
            jac_central: false,
            gate_exponent: 3.0,
        }
    }
}

/// One constructed constant-curvature hypersurface.
#[derive(Debug, Clone)]
pub struct Leaf {
    pub eps: f64,
    pub phi0: ScalarField,
    /// target in operator units (kappa_bar2 for the quadratic regime,
    /// +-1 for the linear regimes, the sigma constant for sigma_k leaves)
    pub target: f64,
    /// the corresponding constant mean curvature
    pub target_h: f64,
    pub achieved_h: ScalarField,
    /// sup-norm residual in operator units
    pub residual: f64,
    pub newton_iters: usize,
    pub x_star: ScalarField,
    pub scaled_update: f64,
    pub residual_history: Vec<f64>,
}

/// A skipped ladder point in the resonant regime.
#[derive(Debug, Clone, Serialize)]
pub struct Gap {
    pub eps: f64,
    pub min_eig: f64,
    pub gate: f64,
}

/// An ordered family of leaves with gauge metadata.
#[derive(Debug, Clone)]
pub struct Foliation {
    pub regime: Regime,
    pub leaves: Vec<Leaf>,
    pub gauge_base: ScalarField,
    pub kappa_bar2: Option<f64>,
    pub yamabe: Option<YamabeSolution>,
    pub gaps: Vec<Gap>,
    pub aborted: Option<String>,
}

// ---------------------------------------------------------------------------
// operator abstraction shared by the CMC and sigma_k solvers
// ---------------------------------------------------------------------------

pub(crate) struct NewtonProblem<'a> {
    pub m: &'a MetricExpansion,
    pub eval: Box<dyn Fn(&ScalarField, f64) -> Result<ScalarField> + 'a>,
    /// Fourier symbol of the approximate linearization at wavenumber-square s
    pub symbol: Box<dyn Fn(f64) -> f64 + 'a>,
}

pub(crate) fn newton_solve(
    problem: &NewtonProblem,
    eps: f64,
    target: f64,
    init: &ScalarField,
    opts: &SolverOptions,
) -> Result<(ScalarField, f64, usize, f64, Vec<f64>)> {
    let grid = init.grid().clone();
    let len = grid.len();
    let sym = mean_symbol(problem.m.h0())?;
    let diag: Vec<f64> = sym
        .iter()
        .map(|&s| {
            let v = (problem.symbol)(s);
            if v.abs() < 1e-6 {
                1e-6_f64.copysign(if v == 0.0 { 1.0 } else { v })
            } else {
                v
            }
        })
        .map(|v| 1.0 / v)
        .collect();

    let mut phi = init.clone();
    let mut f = (problem.eval)(&phi, eps)?.map(|v| v - target);
    let r0 = f.sup_norm().max(1e-300);
    let mut history = vec![f.sup_norm()];
    let mut last_update = 0.0f64;
    let mut iters = 0usize;
    for _ in 0..opts.max_iters {
        let r = f.sup_norm();
        if r < opts.tol_residual && (iters == 0 || last_update < opts.tol_update) {
            return Ok((phi, r, iters, last_update, history));
        }
        iters += 1;
        // matrix-free Jacobian action by central differences through the
        // full pipeline
        let poison: Mutex<Option<Error>> = Mutex::new(None);
        let phi_ref = &phi;
        let f_ref = &f;
        let apply = |v: &[f64], out: &mut [f64]| {
            let vs = v.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            if vs == 0.0 {
                out.fill(0.0);
                return;
            }
            let h = opts.fd_step / vs;
            let vf = ScalarField::from_data(&grid, v.to_vec()).unwrap();
            let mut plus = phi_ref.clone();
            plus.axpy(h, &vf);
            if opts.jac_central {
                let mut minus = phi_ref.clone();
                minus.axpy(-h, &vf);
                match ((problem.eval)(&plus, eps), (problem.eval)(&minus, eps)) {
                    (Ok(a), Ok(b)) => {
                        for i in 0..len {
                            out[i] = (a.data()[i] - b.data()[i]) / (2.0 * h);
                        }
                    }
                    (Err(e), _) | (_, Err(e)) => {
                        *poison.lock().unwrap() = Some(e);
                        out.fill(0.0);
                    }
                }
            } else {
                // one-sided using the cached residual: op(phi) = f + target
                match (problem.eval)(&plus, eps) {
                    Ok(a) => {
                        for i in 0..len {
                            out[i] = (a.data()[i] - (f_ref.data()[i] + target)) / h;
                        }
                    }
                    Err(e) => {
                        *poison.lock().unwrap() = Some(e);
                        out.fill(0.0);
                    }
                }
            }
        };
        let pc = |v: &[f64], out: &mut [f64]| {
            let vf = ScalarField::from_data(&grid, v.to_vec()).unwrap();
            out.copy_from_slice(fourier_diagonal_apply(&vf, &diag).data());
        };
        let rhs: Vec<f64> = f.data().iter().map(|v| -v).collect();
        let eta = (0.1 * r / r0).clamp(if opts.jac_central { 1e-7 } else { 1e-5 }, 1e-2);
        let (delta, _) = gmres(
            &apply,
            &rhs,
            None,
            Some(&pc),
            eta,
            opts.gmres_restart,
            opts.gmres_max_outer,
        )?;
        if let Some(e) = poison.into_inner().unwrap() {
            return Err(e);
        }
        let delta = ScalarField::from_data(&grid, delta)?;
        // Armijo backtracking on the residual norm
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..10 {
            let mut trial = phi.clone();
            trial.axpy(t, &delta);
            match (problem.eval)(&trial, eps) {
                Ok(val) => {
                    let ft = val.map(|v| v - target);
                    if ft.sup_norm() <= (1.0 - 1e-4 * t) * r {
                        phi = trial;
                        f = ft;
                        last_update = scaled_norm(&delta.scale(t), eps, 2)?.value;
                        accepted = true;
                        break;
                    }
                }
                Err(_) => {}
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(Error::NewtonDiverged { residual: r, iters });
        }
        history.push(f.sup_norm());
    }
    let r = f.sup_norm();
    if r < opts.tol_residual {
        return Ok((phi, r, iters, last_update, history));
    }
    Err(Error::NewtonDiverged { residual: r, iters })
}

// ---------------------------------------------------------------------------
// leaf solver
// ---------------------------------------------------------------------------

fn cmc_problem<'a>(
    m: &'a MetricExpansion,
    regime: Regime,
    eps: f64,
    target: f64,
    cfg: PipelineCfg,
) -> NewtonProblem<'a> {
    match regime {
        Regime::Kappa1Zero => NewtonProblem {
            m,
            eval: Box::new(move |phi, e| eval_n(m, phi, e, &cfg)),
            // D N ~ Lap - 2 kappa_bar2
            symbol: Box::new(move |s| -s - 2.0 * target),
        },
        Regime::Kappa1Pos => NewtonProblem {
            m,
            eval: Box::new(move |phi, e| eval_ntilde(m, phi, e, &cfg)),
            symbol: Box::new(move |s| -eps * s - 1.0),
        },
        Regime::Kappa1Neg => NewtonProblem {
            m,
            eval: Box::new(move |phi, e| eval_ntilde(m, phi, e, &cfg)),
            symbol: Box::new(move |s| -eps * s + 1.0),
        },
    }
}

/// Solve a single constant-mean-curvature leaf at eps. `target` is in
/// operator units: the constant value of N (quadratic regime) or of
/// N-tilde (+1 / -1 after normalization).
pub fn solve_leaf(
    m: &MetricExpansion,
    eps: f64,
    target: f64,
    regime: Regime,
    init: &ScalarField,
    opts: &SolverOptions,
) -> Result<Leaf> {
    if regime == Regime::Kappa1Neg {
        let (min_eig, gate) = crate::resonance::resonance_gate(m, eps, opts.gate_exponent)?;
        if min_eig <= gate {
            return Err(Error::ResonantEpsilon { eps, min_eig, gate });
        }
    }
    let problem = cmc_problem(m, regime, eps, target, opts.cfg);
    let (phi0, residual, iters, upd, history) =
        newton_solve(&problem, eps, target, init, opts)?;
    // recompute the achieved mean curvature through the public extrinsic path
    let x_eval = opts.cfg.x_eval(m, &phi0, eps);
    let ef = extend(&phi0, m, x_eval, opts.cfg.steps)?;
    let rep = mean_curvature(m, &ef, eps)?;
    let level = locate_level_set(&ef, eps)?;
    let n = m.ndim() as f64;
    let target_h = match regime {
        Regime::Kappa1Zero => n - eps * eps * target,
        _ => n - eps * target,
    };
    Ok(Leaf {
        eps,
        phi0,
        target,
        target_h,
        achieved_h: rep.h,
        residual,
        newton_iters: iters,
        x_star: level.x_star,
        scaled_update: upd,
        residual_history: history,
    })
}

/// Per-eps operator target in the kappa1 = 0 regime. When the base-gauge
/// level set is already exactly CMC (closed-form models), the target snaps
/// to that constant so the continuation reproduces the model leaves;
/// otherwise it is the normalized constant kappa_bar2 (the quadratic
/// mean-curvature schedule H = n - kappa_bar2 eps^2).
pub fn zero_regime_target(
    m: &MetricExpansion,
    base: &ScalarField,
    kbar: f64,
    eps: f64,
    cfg: &PipelineCfg,
) -> Result<f64> {
    let f = eval_n(m, base, eps, cfg)?;
    let mean = f.mean();
    let dev = f.data().iter().fold(0.0f64, |a, &v| a.max((v - mean).abs()));
    if dev < 1e-11 {
        Ok(mean)
    } else {
        Ok(kbar)
    }
}

/// Gauge base for a regime: the Yamabe solution for kappa1 = 0, the
/// pointwise log-normalization phi0 = log|kappa1| otherwise.
pub fn gauge_base(
    m: &MetricExpansion,
    regime: Regime,
) -> Result<(ScalarField, f64, Option<YamabeSolution>)> {
    let k = m.kappas()?;
    let sign = k.kappa1_sign(1e-10);
    match regime {
        Regime::Kappa1Zero => {
            if sign != KappaSign::Zero {
                return Err(Error::Validation(format!(
                    "regime kappa1_zero requested but kappa1 sign is {sign:?}"
                )));
            }
            let sol = normalize_kappa2(m, &YamabeOptions::default())?;
            Ok((sol.phi0.clone(), sol.kappa_bar2, Some(sol)))
        }
        Regime::Kappa1Pos => {
            if sign != KappaSign::Positive {
                return Err(Error::Validation(format!(
                    "regime kappa1_pos requested but kappa1 sign is {sign:?}"
                )));
            }
            Ok((k.kappa1.map(|v| v.ln()), 1.0, None))
        }
        Regime::Kappa1Neg => {
            if sign != KappaSign::Negative {
                return Err(Error::Validation(format!(
                    "regime kappa1_neg requested but kappa1 sign is {sign:?}"
                )));
            }
            Ok((k.kappa1.map(|v| (-v).ln()), -1.0, None))
        }
    }
}

/// Continue a foliation over an ascending eps ladder with warm starts.
/// In the resonant regime, ladder points failing the J(N) gate are skipped
/// and recorded as gaps. Any other failure aborts with partial results.
pub fn continue_foliation(
    m: &MetricExpansion,
    ladder: &[f64],
    regime: Regime,
    opts: &SolverOptions,
) -> Result<Foliation> {
    let (base, target, yamabe) = gauge_base(m, regime)?;
    let mut eps_sorted = ladder.to_vec();
    eps_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut leaves: Vec<Leaf> = Vec::new();
    let mut gaps = Vec::new();
    let mut aborted = None;
    let mut warm = base.clone();
    // decide once (at the deepest ladder point, where deviation is largest)
    // whether the base gauge is already exactly CMC
    let snap_exact = regime == Regime::Kappa1Zero && {
        let top = *eps_sorted.last().unwrap();
        let f = eval_n(m, &base, top, &opts.cfg)?;
        let mean = f.mean();
        f.data().iter().fold(0.0f64, |a, &v| a.max((v - mean).abs())) < 1e-11
    };
    for &eps in &eps_sorted {
        let leaf_target = if snap_exact {
            eval_n(m, &base, eps, &opts.cfg)?.mean()
        } else {
            target
        };
        match solve_leaf(m, eps, leaf_target, regime, &warm, opts) {
            Ok(leaf) => {
                warm = leaf.phi0.clone();
                leaves.push(leaf);
            }
            Err(Error::ResonantEpsilon { eps, min_eig, gate }) if regime == Regime::Kappa1Neg => {
                gaps.push(Gap { eps, min_eig, gate });
            }
            Err(e) => {
                aborted = Some(format!("leaf at eps = {eps:.6e} failed: {e}"));
                break;
            }
        }
    }
    Ok(Foliation {
        regime,
        leaves,
        gauge_base: base,
        kappa_bar2: yamabe.as_ref().map(|s| s.kappa_bar2),
        yamabe,
        gaps,
        aborted,
    })
}

// ---------------------------------------------------------------------------
// improved approximate solutions (resonant regime)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ImprovedApprox {
    pub phi0: ScalarField,
    /// residual sup-norms |Ntilde(phi^{(j)}, eps) + 1| for j = 0..=q
    pub residuals: Vec<f64>,
}

/// Defect iteration phi <- phi - (Ntilde(phi, eps) + 1) starting from 0,
/// gaining one power of eps per step. Requires the kappa1 = -1
/// normalization (checked); each step loses two derivatives, so spectral
/// tail growth aborts the iteration.
pub fn improved_approximation(
    m: &MetricExpansion,
    eps: f64,
    q: usize,
    cfg: &PipelineCfg,
) -> Result<ImprovedApprox> {
    if q > 6 {
        return Err(Error::Validation("q > 6 is not supported (derivative loss)".into()));
    }
    let k = m.kappas()?;
    if k.kappa1.map(|v| v + 1.0).sup_norm() > 1e-8 {
        return Err(Error::Validation(
            "improved approximation requires the kappa1 = -1 normalization".into(),
        ));
    }
    let grid = m.grid().clone();
    let mut phi = ScalarField::zeros(&grid);
    let mut residuals = Vec::with_capacity(q + 1);
    for step in 0..=q {
        let r = eval_ntilde(m, &phi, eps, cfg)?.map(|v| v + 1.0);
        residuals.push(r.sup_norm());
        if step == q {
            break;
        }
        phi = phi.sub(&r);
        let tail = spectral_tail_fraction(&phi);
        if tail > 0.15 {
            return Err(Error::SpectralBlowup { tail });
        }
    }
    Ok(ImprovedApprox { phi0: phi, residuals })
}

// ---------------------------------------------------------------------------
// audit
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotonicity {
    Increasing,
    Decreasing,
    Neither,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum UniquenessVerdict {
    Unique,
    NotUnique,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum JacobiBranch {
    /// potential < 0: the maximum-principle argument applies directly
    MaximumPrinciple,
    /// otherwise: the quantitative graph estimate psi = O(eps^2) applies
    GraphEstimate,
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub monotonicity: Monotonicity,
    pub unique: UniquenessVerdict,
    pub mean_h: Vec<(f64, f64)>,
    pub min_gap: f64,
    pub disjoint: bool,
    pub psi: Vec<(f64, f64)>,
    pub psi_slope: Option<f64>,
    pub jacobi_branch: JacobiBranch,
    pub jacobi_potential_max: f64,
    pub gaps: Vec<Gap>,
    pub max_residual: f64,
}

/// Audit a foliation: monotonicity classification, leaf disjointness,
/// normal-graph deviation order, Jacobi-potential branch and the
/// uniqueness verdict from monotone decrease.
pub fn audit_foliation(
    f: &Foliation,
    m: &MetricExpansion,
    cfg: &PipelineCfg,
) -> Result<AuditReport> {
    if f.leaves.len() < 3 {
        return Err(Error::InsufficientSamples(format!(
            "audit needs >= 3 leaves, got {}",
            f.leaves.len()
        )));
    }
    let mean_h: Vec<(f64, f64)> =
        f.leaves.iter().map(|l| (l.eps, l.achieved_h.mean())).collect();
    let n = m.ndim() as f64;
    let tol = 1e-12 * n;
    let mut inc = true;
    let mut dec = true;
    for w in mean_h.windows(2) {
        if w[1].1 <= w[0].1 + tol {
            inc = false;
        }
        if w[1].1 >= w[0].1 - tol {
            dec = false;
        }
    }
    let monotonicity = if inc {
        Monotonicity::Increasing
    } else if dec {
        Monotonicity::Decreasing
    } else {
        Monotonicity::Neither
    };

    // disjointness via x_star ordering
    let mut min_gap = f64::INFINITY;
    for w in f.leaves.windows(2) {
        let gap = w[1]
            .x_star
            .data()
            .iter()
            .zip(w[0].x_star.data())
            .map(|(b, a)| b - a)
            .fold(f64::INFINITY, f64::min);
        min_gap = min_gap.min(gap);
        if gap <= 0.0 {
            return Err(Error::OverlappingLeaves { eps_a: w[0].eps, eps_b: w[1].eps });
        }
    }

    // normal-graph deviation in the gauge-base frame
    let max_x = f.leaves.iter().map(|l| l.x_star.max()).fold(0.0f64, f64::max);
    let x_eval = (1.05 * max_x).min(m.x_max());
    let base_ext = extend(&f.gauge_base, m, x_eval, cfg.steps)?;
    let mut psi = Vec::with_capacity(f.leaves.len());
    for leaf in &f.leaves {
        let delta_mean = leaf.phi0.sub(&f.gauge_base).mean();
        let reference = leaf.eps * (-delta_mean).exp();
        let mut worst: f64 = 0.0;
        for idx in 0..m.grid().len() {
            let xs = leaf.x_star.data()[idx];
            let xbar = xs * base_ext.phi_at(idx, xs).exp();
            worst = worst.max((xbar - reference).abs());
        }
        psi.push((leaf.eps, worst));
    }
    let xs: Vec<f64> = psi.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = psi.iter().map(|p| p.1).collect();
    let psi_slope = loglog_slope(&xs, &ys, 1e-13);

    // Jacobi potential at mid-ladder
    let eps_mid = f.leaves[f.leaves.len() / 2].eps;
    let pot = jacobi_potential(m, eps_mid)?;
    let jacobi_branch = if pot.max() < 0.0 {
        JacobiBranch::MaximumPrinciple
    } else {
        JacobiBranch::GraphEstimate
    };

    let unique = match monotonicity {
        Monotonicity::Decreasing => UniquenessVerdict::Unique,
        Monotonicity::Increasing => UniquenessVerdict::NotUnique,
        Monotonicity::Neither => UniquenessVerdict::Indeterminate,
    };
    let max_residual = f.leaves.iter().map(|l| l.residual).fold(0.0f64, f64::max);
    Ok(AuditReport {
        monotonicity,
        unique,
        mean_h,
        min_gap,
        disjoint: true,
        psi,
        psi_slope,
        jacobi_branch,
        jacobi_potential_max: pot.max(),
        gaps: f.gaps.clone(),
        max_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::SymTensorField;
    use crate::grid::BoundaryGrid;
    use crate::metric::ModelKind;
    use std::f64::consts::PI;

    fn model(kind: ModelKind, res: usize, x_max: f64) -> MetricExpansion {
        let grid = BoundaryGrid::unit_torus(2, res).unwrap();
        let h0 = SymTensorField::identity(&grid);
        MetricExpansion::model(kind, h0, x_max).unwrap()
    }

    #[test]
    fn exact_root_converges_immediately() {
        // on a closed-form model with target = exact value, phi0 = 0 is a root
        let m = model(ModelKind::Fuchsian, 16, 1.2);
        let eps = 0.3;
        // exact N(0,eps) for the fuchsian warp: T(eps)/eps with H = n - eps T
        let t = m.t_point(0, eps);
        let target = t / eps;
        let init = ScalarField::zeros(m.grid());
        let leaf =
            solve_leaf(&m, eps, target, Regime::Kappa1Zero, &init, &SolverOptions::default())
                .unwrap();
        assert_eq!(leaf.newton_iters, 0);
        assert!(leaf.residual < 1e-12, "residual {}", leaf.residual);
        assert!(leaf.phi0.sup_norm() == 0.0);
    }

    #[test]
    fn perturbed_leaf_converges_with_flat_h() {
        // kappa1 = 0 metric with non-constant kappa2, normalized first
        let grid = BoundaryGrid::unit_torus(2, 24).unwrap();
        let h0 = SymTensorField::identity(&grid);
        let pert = SymTensorField::from_fn(&grid, |y, i, j| {
            if i == j {
                0.05 * (2.0 * PI * y[0]).cos()
            } else {
                0.0
            }
        });
        let m = MetricExpansion::model_with_terms(ModelKind::Fuchsian, h0, vec![(2, pert)], 1.0)
            .unwrap();
        let (base, kbar, _) = gauge_base(&m, Regime::Kappa1Zero).unwrap();
        let opts = SolverOptions::default();
        let leaf = solve_leaf(&m, 0.2, kbar, Regime::Kappa1Zero, &base, &opts).unwrap();
        assert!(leaf.residual < 1e-10, "residual {}", leaf.residual);
        // spatial H deviation small
        let mean = leaf.achieved_h.mean();
        let dev = leaf
            .achieved_h
            .data()
            .iter()
            .fold(0.0f64, |a, &v| a.max((v - mean).abs()));
        assert!(dev < 1e-9, "H deviation {dev}");
        // warm start path independence: re-solve from zero init
        let l2 = solve_leaf(&m, 0.2, kbar, Regime::Kappa1Zero, &ScalarField::zeros(&grid), &opts)
            .unwrap();
        assert!(l2.phi0.sub(&leaf.phi0).sup_norm() < 1e-9);
    }

    #[test]
    fn newton_history_is_quadratic() {
        // residual sequence r_{k+1} <= C r_k^2 over the final iterations
        let grid = BoundaryGrid::unit_torus(2, 24).unwrap();
        let h0 = SymTensorField::identity(&grid);
        let pert = SymTensorField::from_fn(&grid, |y, i, j| {
            if i == j {
                0.2 * (2.0 * PI * y[0]).cos()
            } else {
                0.0
            }
        });
        let m = MetricExpansion::model_with_terms(ModelKind::Fuchsian, h0, vec![(2, pert)], 1.0)
            .unwrap();
        let (_, kbar, _) = gauge_base(&m, Regime::Kappa1Zero).unwrap();
        let opts = SolverOptions { jac_central: true, ..Default::default() };
        // cold start so Newton takes several steps
        let leaf = solve_leaf(
            &m,
            0.25,
            kbar,
            Regime::Kappa1Zero,
            &ScalarField::zeros(&grid),
            &opts,
        )
        .unwrap();
        let hist: Vec<f64> = leaf
            .residual_history
            .iter()
            .cloned()
            .filter(|r| *r > 1e-11)
            .collect();
        assert!(hist.len() >= 3, "history too short: {:?}", leaf.residual_history);
        let tail = &hist[hist.len().saturating_sub(4)..];
        for w in tail.windows(2) {
            assert!(
                w[1] <= 1e3 * w[0] * w[0],
                "not quadratic: {} -> {} (history {:?})",
                w[0],
                w[1],
                leaf.residual_history
            );
        }
        // independent recomputation through extrinsic stays within the
        // leaf invariant
        let n = 2.0;
        let dev = leaf.achieved_h.map(|v| v - leaf.target_h).sup_norm();
        assert!(dev < 1e-9 * n, "H vs target dev {dev}");
    }

    #[test]
    fn collar_foliation_pos_regime() {
        let m = model(ModelKind::ExponentialCollar { kappa1: 1 }, 16, 1.0);
        let ladder: Vec<f64> = crate::fit::linear_ladder(0.05, 0.3, 4);
        let fol = continue_foliation(&m, &ladder, Regime::Kappa1Pos, &SolverOptions::default())
            .unwrap();
        assert!(fol.aborted.is_none(), "{:?}", fol.aborted);
        assert_eq!(fol.leaves.len(), 4);
        for leaf in &fol.leaves {
            assert!(leaf.residual < 1e-10);
            assert!(leaf.scaled_update < 1e-10);
            // H = n - eps exactly for the reflected collar
            let expect = 2.0 - leaf.eps;
            assert!((leaf.achieved_h.mean() - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn hyperbolic_ball_monotone_increasing() {
        let m = model(ModelKind::HyperbolicBall, 16, 1.5);
        let opts = SolverOptions::default();
        let ladder = crate::fit::linear_ladder(0.2, 0.8, 4);
        // targets: exact model values (kappa1_zero regime, kappa2 constant)
        let mut leaves = Vec::new();
        for &eps in &ladder {
            let target = m.t_point(0, eps) / eps;
            let leaf = solve_leaf(
                &m,
                eps,
                target,
                Regime::Kappa1Zero,
                &ScalarField::zeros(m.grid()),
                &opts,
            )
            .unwrap();
            leaves.push(leaf);
        }
        let fol = Foliation {
            regime: Regime::Kappa1Zero,
            leaves,
            gauge_base: ScalarField::zeros(m.grid()),
            kappa_bar2: None,
            yamabe: None,
            gaps: Vec::new(),
            aborted: None,
        };
        let audit = audit_foliation(&fol, &m, &PipelineCfg::default()).unwrap();
        assert_eq!(audit.monotonicity, Monotonicity::Increasing);
        assert_eq!(audit.unique, UniquenessVerdict::NotUnique);
        assert!(audit.disjoint);
    }

    #[test]
    fn fuchsian_foliation_unique_and_decreasing() {
        let m = model(ModelKind::Fuchsian, 16, 1.5);
        let opts = SolverOptions::default();
        let ladder = crate::fit::linear_ladder(0.2, 0.8, 4);
        let mut leaves = Vec::new();
        for &eps in &ladder {
            let target = m.t_point(0, eps) / eps;
            let leaf = solve_leaf(
                &m,
                eps,
                target,
                Regime::Kappa1Zero,
                &ScalarField::zeros(m.grid()),
                &opts,
            )
            .unwrap();
            leaves.push(leaf);
        }
        let fol = Foliation {
            regime: Regime::Kappa1Zero,
            leaves,
            gauge_base: ScalarField::zeros(m.grid()),
            kappa_bar2: None,
            yamabe: None,
            gaps: Vec::new(),
            aborted: None,
        };
        let audit = audit_foliation(&fol, &m, &PipelineCfg::default()).unwrap();
        assert_eq!(audit.monotonicity, Monotonicity::Decreasing);
        assert_eq!(audit.unique, UniquenessVerdict::Unique);
        assert_eq!(audit.jacobi_branch, JacobiBranch::MaximumPrinciple);
    }

    #[test]
    fn horospherical_neither_monotone() {
        let m = model(ModelKind::Horospherical, 16, 1.5);
        let opts = SolverOptions::default();
        let ladder = crate::fit::linear_ladder(0.2, 0.8, 3);
        let mut leaves = Vec::new();
        for &eps in &ladder {
            let leaf = solve_leaf(
                &m,
                eps,
                0.0,
                Regime::Kappa1Zero,
                &ScalarField::zeros(m.grid()),
                &opts,
            )
            .unwrap();
            leaves.push(leaf);
        }
        let fol = Foliation {
            regime: Regime::Kappa1Zero,
            leaves,
            gauge_base: ScalarField::zeros(m.grid()),
            kappa_bar2: None,
            yamabe: None,
            gaps: Vec::new(),
            aborted: None,
        };
        let audit = audit_foliation(&fol, &m, &PipelineCfg::default()).unwrap();
        assert_eq!(audit.monotonicity, Monotonicity::Neither);
        assert_eq!(audit.unique, UniquenessVerdict::Indeterminate);
    }

    #[test]
    fn improved_approximation_residual_zero_for_pure_collar() {
        // the pure collar solves Ntilde = -1 exactly at phi = 0
        let m = model(ModelKind::ExponentialCollar { kappa1: -1 }, 16, 1.0);
        let out = improved_approximation(&m, 0.1, 2, &PipelineCfg::default()).unwrap();
        for r in &out.residuals {
            assert!(*r < 1e-12, "residual {r}");
        }
    }

    #[test]
    fn improved_approximation_gains_order() {
        // collar + x^3 perturbation keeps kappa1 = -1, kappa2 = 0 but makes
        // the defect nontrivial: slopes of |Ntilde(phi^{(q)}) + 1| vs eps
        // must be 2 + q
        let grid = BoundaryGrid::unit_torus(2, 16).unwrap();
        let h0 = SymTensorField::identity(&grid);
        let pert = SymTensorField::from_fn(&grid, |y, i, j| {
            if i == j {
                0.3 * (1.0 + 0.5 * (2.0 * PI * y[0]).cos())
            } else {
                0.0
            }
        });
        let m = MetricExpansion::model_with_terms(
            ModelKind::ExponentialCollar { kappa1: -1 },
            h0,
            vec![(3, pert)],
            0.8,
        )
        .unwrap();
        let cfg = PipelineCfg::default();
        let ladder = crate::fit::log_ladder(0.006, 0.07, 8);
        for q in 0..=2usize {
            let res: Vec<f64> = ladder
                .iter()
                .map(|&e| improved_approximation(&m, e, q, &cfg).unwrap().residuals[q])
                .collect();
            let slope = loglog_slope(&ladder, &res, 1e-14).unwrap();
            let expect = 2.0 + q as f64;
            assert!(
                (slope - expect).abs() < 0.2,
                "q = {q}: slope {slope} vs {expect}"
            );
        }
    }
}
