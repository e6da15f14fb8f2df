//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line. Oracles are closed-form model values, independently derived
//! expansions, and Fourier predictions; tolerances are pinned in code.
//!
//! Run with: cargo test -p foliation-core --test acceptance -- --nocapture

use foliation_core::extension::{characteristics_oracle, extend};
use foliation_core::field::{ScalarField, SymTensorField};
use foliation_core::fit::{linear_ladder, log_ladder, loglog_slope, polyfit_many};
use foliation_core::foliation::{
    audit_foliation, continue_foliation, improved_approximation, solve_leaf, Foliation,
    Monotonicity, Regime, SolverOptions, UniquenessVerdict,
};
use foliation_core::grid::BoundaryGrid;
use foliation_core::leaf::{
    linearize_n, mean_curvature, n_operator, ntilde_operator, second_fundamental_form,
    transform_kappas, PipelineCfg,
};
use foliation_core::metric::{MetricExpansion, ModelKind};
use foliation_core::ops::laplace_beltrami;
use foliation_core::resonance::{
    collar_crossing_oracle, eigenvalue_speed_check, scan_resonances, ScanOptions,
};
use foliation_core::sigma::{sk_expansion, solve_sigma_k_leaf};
use foliation_core::yamabe::{normalize_kappa2, InvariantSign, YamabeOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

/// The whole suite runs serialized so that the wall-clock budgets of the
/// timed criteria are meaningful on small machines.
fn suite_lock() -> std::sync::MutexGuard<'static, ()> {
    static LOCK: OnceLock<Mutex<()>> = OnceLock::new();
    LOCK.get_or_init(|| Mutex::new(()))
        .lock()
        .unwrap_or_else(|e| e.into_inner())
}

fn criterion(id: usize, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("ACCEPTANCE {id:02} {name}: {verdict} ({detail})");
    assert!(pass, "criterion {id} {name} failed: {detail}");
}

fn flat_torus(n: usize, res: usize) -> Arc<BoundaryGrid> {
    BoundaryGrid::unit_torus(n, res).unwrap()
}

fn diag_pert(grid: &Arc<BoundaryGrid>, amp: f64) -> SymTensorField {
    SymTensorField::from_fn(grid, |y, i, j| if i == j { amp * (2.0 * PI * y[0]).cos() } else { 0.0 })
}

fn random_smooth(grid: &Arc<BoundaryGrid>, rng: &mut ChaCha8Rng, amp: f64) -> ScalarField {
    let n = grid.ndim();
    let mut modes: Vec<(Vec<i64>, f64, f64)> = Vec::new();
    let range: Vec<i64> = (-2..=2).collect();
    let mut idx = vec![0usize; n];
    loop {
        let k: Vec<i64> = idx.iter().map(|&i| range[i]).collect();
        if k.iter().any(|&v| v != 0) {
            modes.push((k, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0 * PI)));
        }
        let mut carry = true;
        for d in (0..n).rev() {
            if carry {
                idx[d] += 1;
                if idx[d] == range.len() {
                    idx[d] = 0;
                } else {
                    carry = false;
                }
            }
        }
        if carry {
            break;
        }
    }
    let norm: f64 = modes.iter().map(|m| m.1.abs()).sum();
    ScalarField::from_fn(grid, |y| {
        let mut s = 0.0;
        for (k, a, ph) in &modes {
            let mut arg = *ph;
            for (d, kk) in k.iter().enumerate() {
                arg += 2.0 * PI * *kk as f64 * y[d];
            }
            s += a * arg.cos();
        }
        amp * s / norm
    })
}

// ---------------------------------------------------------------------------

#[test]
fn acceptance_01_model_exactness() {
    let _serial = suite_lock();
    let start = Instant::now();
    let grid = flat_torus(2, 64);
    let h0 = SymTensorField::identity(&grid);
    let cases: [(ModelKind, Box<dyn Fn(f64) -> f64>, Box<dyn Fn(f64) -> f64>); 3] = [
        (
            ModelKind::HyperbolicBall,
            Box::new(|e| 2.0 * (4.0 + e * e) / (4.0 - e * e)),
            Box::new(|e| (4.0 + e * e) / (4.0 - e * e)),
        ),
        (
            ModelKind::Fuchsian,
            Box::new(|e| 2.0 * (4.0 - e * e) / (4.0 + e * e)),
            Box::new(|e| (4.0 - e * e) / (4.0 + e * e)),
        ),
        (ModelKind::Horospherical, Box::new(|_| 2.0), Box::new(|_| 1.0)),
    ];
    let mut worst_h: f64 = 0.0;
    let mut worst_pc: f64 = 0.0;
    for (kind, h_exact, pc_exact) in cases {
        let m = MetricExpansion::model(kind, h0.clone(), 1.4).unwrap();
        let phi0 = ScalarField::zeros(&grid);
        let ef = extend(&phi0, &m, 1.3, 96).unwrap();
        for eps in [0.1, 0.5, 1.0] {
            let rep = mean_curvature(&m, &ef, eps).unwrap();
            let expect = h_exact(eps);
            let rel = rep
                .h
                .data()
                .iter()
                .fold(0.0f64, |a, &v| a.max((v - expect).abs()))
                / expect.abs();
            worst_h = worst_h.max(rel);
            let sd = second_fundamental_form(&m, &ef, eps).unwrap();
            let pc = pc_exact(eps);
            for idx in 0..grid.len() {
                for a in 0..2 {
                    worst_pc =
                        worst_pc.max((sd.principal.comp(idx, a) - pc).abs() / pc.abs());
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    criterion(
        1,
        "model exactness",
        worst_h < 1e-8 && worst_pc < 1e-8 && secs < 5.0,
        &format!("H rel dev {worst_h:.2e}, principal rel dev {worst_pc:.2e}, {secs:.2} s"),
    );
}

#[test]
fn acceptance_02_expansion_order() {
    let _serial = suite_lock();
    // fuchsian + generic smooth h2 perturbation: residual of the quadratic
    // truncation falls off with log-log slope >= 2.9
    let grid = flat_torus(2, 32);
    let h0 = SymTensorField::identity(&grid);
    let pert = SymTensorField::from_fn(&grid, |y, i, j| match (i, j) {
        (0, 0) => 0.1 * (2.0 * PI * y[0]).cos(),
        (1, 1) => 0.08 * (2.0 * PI * y[1]).sin(),
        _ => 0.05 * (2.0 * PI * (y[0] + y[1])).cos(),
    });
    let m = MetricExpansion::model_with_terms(ModelKind::Fuchsian, h0, vec![(2, pert)], 1.0)
        .unwrap();
    let k = m.kappas().unwrap();
    assert!(k.kappa1.sup_norm() < 1e-13);
    let ladder = log_ladder(1e-3, 1e-1, 12);
    let n = 2.0;
    let mut errs = Vec::new();
    for &eps in &ladder {
        let h = m.h_of_level(eps).unwrap();
        let dev = (0..grid.len())
            .map(|i| {
                let trunc = n - k.kappa1.data()[i] * eps - k.kappa2.data()[i] * eps * eps;
                (h.data()[i] - trunc).abs()
            })
            .fold(0.0f64, f64::max);
        errs.push(dev);
    }
    let slope = loglog_slope(&ladder, &errs, 1e-15).unwrap();
    criterion(2, "expansion order", slope >= 2.9, &format!("slope {slope:.3}"));
}

#[test]
fn acceptance_03_hj_extension() {
    let _serial = suite_lock();
    let grid = flat_torus(2, 32);
    let h0 = SymTensorField::identity(&grid);
    let m = MetricExpansion::model(ModelKind::Fuchsian, h0, 1.0).unwrap();
    let phi0 = ScalarField::from_fn(&grid, |y| 0.1 * (2.0 * PI * y[0]).sin());

    // quadratic coefficient of the extension
    let ef = extend(&phi0, &m, 0.3, 96).unwrap();
    let expect = foliation_core::ops::gradient_norm_sq(&phi0, m.h0())
        .unwrap()
        .scale(-0.25);
    let nodes: Vec<usize> = (4..=48).collect();
    let xs: Vec<f64> = nodes.iter().map(|&k| ef.xs()[k]).collect();
    let ratios: Vec<Vec<f64>> = nodes
        .iter()
        .map(|&k| {
            let x = ef.xs()[k];
            ef.phi_node(k).sub(&phi0).data().iter().map(|v| v / (x * x)).collect()
        })
        .collect();
    let ys: Vec<&[f64]> = ratios.iter().map(|v| v.as_slice()).collect();
    let coeffs = polyfit_many(&xs, &ys, 4).unwrap();
    let c2 = ScalarField::from_data(&grid, coeffs[0].clone()).unwrap();
    let coeff_dev = c2.sub(&expect).sup_norm();

    // independent characteristics solve at x = 0.5
    let ef2 = extend(&phi0, &m, 0.5, 160).unwrap();
    let oracle = characteristics_oracle(&phi0, &m, 0.5, 160).unwrap();
    let top = ef2.n_nodes() - 1;
    let osc_dev = ef2.phi_node(top).sub(oracle.phi_node(top)).sup_norm();

    criterion(
        3,
        "HJ extension",
        coeff_dev < 1e-6 && osc_dev < 1e-6,
        &format!("x^2 coefficient dev {coeff_dev:.2e}, vs characteristics {osc_dev:.2e}"),
    );
}

#[test]
fn acceptance_04_conformal_covariance() {
    let _serial = suite_lock();
    // kappas recomputed from the mean-curvature expansion in the changed
    // gauge (intercept/slope of N-tilde) vs transform_kappas
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst: f64 = 0.0;
    let cfg = PipelineCfg { steps: 128, ..Default::default() };

    let mut run_case = |m: &MetricExpansion, phi0: &ScalarField, worst: &mut f64| {
        let grid = m.grid().clone();
        let k = m.kappas().unwrap();
        let kt = transform_kappas(&k, phi0, m.h0()).unwrap();
        let ladder = log_ladder(2e-3, 0.04, 12);
        let x_eval = cfg.x_eval(m, phi0, *ladder.last().unwrap());
        let ef = extend(phi0, m, x_eval, cfg.steps).unwrap();
        let samples: Vec<Vec<f64>> = ladder
            .iter()
            .map(|&e| ntilde_operator(m, &ef, e).unwrap().data().to_vec())
            .collect();
        // two-stage intercept extraction: kappa1 from N-tilde, then kappa2
        // from (N-tilde - kappa1)/eps; intercepts are far better
        // conditioned than slope coefficients
        let ys: Vec<&[f64]> = samples.iter().map(|v| v.as_slice()).collect();
        let coeffs = polyfit_many(&ladder, &ys, 5).unwrap();
        let k1_fit = ScalarField::from_data(&grid, coeffs[0].clone()).unwrap();
        let ratios: Vec<Vec<f64>> = samples
            .iter()
            .zip(&ladder)
            .map(|(s, &e)| {
                s.iter()
                    .zip(k1_fit.data())
                    .map(|(v, k1)| (v - k1) / e)
                    .collect()
            })
            .collect();
        let rys: Vec<&[f64]> = ratios.iter().map(|v| v.as_slice()).collect();
        let rcoeffs = polyfit_many(&ladder, &rys, 4).unwrap();
        let k2_fit = ScalarField::from_data(&grid, rcoeffs[0].clone()).unwrap();
        *worst = worst.max(k1_fit.sub(&kt.kappa1).sup_norm());
        *worst = worst.max(k2_fit.sub(&kt.kappa2).sup_norm());
    };

    // three boundary data on an n = 2 collar-type metric (kappa1 < 0)
    {
        let grid = flat_torus(2, 24);
        let h0 = SymTensorField::identity(&grid);
        let m = MetricExpansion::model_with_terms(
            ModelKind::ExponentialCollar { kappa1: -1 },
            h0,
            vec![(2, diag_pert(&grid, 0.05))],
            0.6,
        )
        .unwrap();
        for _ in 0..3 {
            let phi0 = random_smooth(&grid, &mut rng, 0.08);
            run_case(&m, &phi0, &mut worst);
        }
    }
    // two boundary data on an n = 3 metric (exercises the (n-2)/2 term)
    {
        let grid = flat_torus(3, 12);
        let h0 = SymTensorField::identity(&grid);
        let pert = SymTensorField::from_fn(&grid, |y, i, j| {
            if i == j {
                0.06 * (2.0 * PI * y[2]).cos()
            } else {
                0.0
            }
        });
        let m = MetricExpansion::model_with_terms(
            ModelKind::ExponentialCollar { kappa1: -1 },
            h0,
            vec![(2, pert)],
            0.6,
        )
        .unwrap();
        for _ in 0..2 {
            let phi0 = random_smooth(&grid, &mut rng, 0.06);
            run_case(&m, &phi0, &mut worst);
        }
    }
    criterion(4, "conformal covariance", worst < 1e-5, &format!("max dev {worst:.2e}"));
}

#[test]
fn acceptance_05_linearization() {
    let _serial = suite_lock();
    let grid = flat_torus(2, 32);
    let h0 = SymTensorField::identity(&grid);
    let m = MetricExpansion::model_with_terms(
        ModelKind::Fuchsian,
        h0.clone(),
        vec![(2, diag_pert(&grid, 0.1))],
        1.0,
    )
    .unwrap();
    let k = m.kappas().unwrap();
    let lin = linearize_n(&m, &ScalarField::zeros(&grid), 0.0, &PipelineCfg::default());
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let psi = random_smooth(&grid, &mut rng, 1.0);
        let d = lin.apply(&psi).unwrap();
        let lap = laplace_beltrami(&psi, &h0).unwrap();
        let expect = lap.zip_with(&psi.zip_with(&k.kappa2, |p, kk| 2.0 * kk * p), |l, v| l - v);
        let rel = d.sub(&expect).sup_norm() / expect.sup_norm();
        worst = worst.max(rel);
    }
    criterion(5, "linearization at the boundary", worst < 1e-4, &format!("max rel {worst:.2e}"));
}

#[test]
fn acceptance_06_yamabe_normalization() {
    let _serial = suite_lock();
    // n = 2: kappa2 = 1 + 0.3 cos(2 pi y1)
    let grid = flat_torus(2, 32);
    let h0 = SymTensorField::identity(&grid);
    let m = MetricExpansion::model_with_terms(
        ModelKind::Fuchsian,
        h0,
        vec![(2, diag_pert(&grid, 0.15))],
        1.0,
    )
    .unwrap();
    let (sign, _) = foliation_core::yamabe::invariant_sign(&m).unwrap();
    let sol = normalize_kappa2(&m, &YamabeOptions::default()).unwrap();
    // two random starts agree
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let s1 = normalize_kappa2(
        &m,
        &YamabeOptions {
            init_override: Some(random_smooth(&grid, &mut rng, 0.15)),
            ..Default::default()
        },
    )
    .unwrap();
    let s2 = normalize_kappa2(
        &m,
        &YamabeOptions {
            init_override: Some(random_smooth(&grid, &mut rng, 0.15)),
            ..Default::default()
        },
    )
    .unwrap();
    let two_start = s1.phi0.sub(&s2.phi0).sup_norm();
    // discrete maximum principle at the solved top point
    let k = m.kappas().unwrap();
    let arg_max = (0..grid.len())
        .max_by(|&a, &b| sol.phi0.data()[a].partial_cmp(&sol.phi0.data()[b]).unwrap())
        .unwrap();
    let mp = k.kappa2.data()[arg_max]
        - sol.kappa_bar2 * (2.0 * sol.phi0.data()[arg_max]).exp();

    // n = 3 subcritical ladder
    let grid3 = flat_torus(3, 12);
    let h03 = SymTensorField::identity(&grid3);
    let pert3 = SymTensorField::from_fn(&grid3, |y, i, j| {
        if i == j {
            0.1 * (2.0 * PI * y[0]).sin()
        } else {
            0.0
        }
    });
    let m3 =
        MetricExpansion::model_with_terms(ModelKind::Fuchsian, h03, vec![(2, pert3)], 1.0)
            .unwrap();
    let sol3 = normalize_kappa2(&m3, &YamabeOptions::default()).unwrap();
    let reaches = sol3.p_ladder.iter().any(|&p| (p - 0.999 * 5.0).abs() < 1e-12)
        && *sol3.p_ladder.last().unwrap() == 5.0;

    criterion(
        6,
        "Yamabe normalization",
        sign == InvariantSign::Negative
            && sol.residual < 1e-10
            && two_start < 1e-8
            && mp > -1e-6
            && sol3.residual < 1e-8
            && reaches
            && sol3.a_priori_ok
            && sol.nondegenerate,
        &format!(
            "n2 residual {:.2e}, two-start {two_start:.2e}, max-principle slack {mp:.2e}, \
             n3 residual {:.2e}, ladder {:?}",
            sol.residual, sol3.residual, sol3.p_ladder
        ),
    );
}

#[test]
fn acceptance_07_cmc_foliation_kappa1_zero() {
    let _serial = suite_lock();
    let start = Instant::now();
    let grid = flat_torus(2, 64);
    let h0 = SymTensorField::identity(&grid);
    let pert2 = SymTensorField::from_fn(&grid, |y, i, j| {
        if i == j {
            0.05 * (2.0 * PI * y[0]).cos()
        } else {
            0.0
        }
    });
    // a generic h3 term breaks the evenness of the warp so that the
    // normal-graph deviation carries its generic eps^2 order
    let pert3 = SymTensorField::from_fn(&grid, |y, i, j| {
        if i == j {
            0.04 * (2.0 * PI * y[0]).sin() + 0.03
        } else {
            0.0
        }
    });
    // delta h2 = 0.1 cos(2 pi y1) h0 gives kappa2 = 1 + 0.1 cos after trace
    let m = MetricExpansion::model_with_terms(
        ModelKind::Fuchsian,
        h0,
        vec![(2, pert2), (3, pert3)],
        1.2,
    )
    .unwrap();
    let opts = SolverOptions {
        cfg: PipelineCfg { steps: 64, ..Default::default() },
        ..Default::default()
    };
    let ladder = linear_ladder(0.05, 0.5, 16);
    let fol = continue_foliation(&m, &ladder, Regime::Kappa1Zero, &opts).unwrap();
    assert!(fol.aborted.is_none(), "{:?}", fol.aborted);
    assert_eq!(fol.leaves.len(), 16);
    let mut max_h_dev: f64 = 0.0;
    for leaf in &fol.leaves {
        let mean = leaf.achieved_h.mean();
        let dev = leaf
            .achieved_h
            .data()
            .iter()
            .fold(0.0f64, |a, &v| a.max((v - mean).abs()));
        max_h_dev = max_h_dev.max(dev);
    }
    let audit = audit_foliation(&fol, &m, &opts.cfg).unwrap();
    let slope = audit.psi_slope.unwrap_or(f64::NAN);
    let secs = start.elapsed().as_secs_f64();
    criterion(
        7,
        "CMC foliation, kappa1 = 0",
        max_h_dev < 1e-9
            && audit.monotonicity == Monotonicity::Decreasing
            && audit.disjoint
            && (slope - 2.0).abs() <= 0.2
            && secs < 120.0,
        &format!(
            "H dev {max_h_dev:.2e}, monotone {:?}, psi slope {slope:.3}, {secs:.1} s",
            audit.monotonicity
        ),
    );
}

#[test]
fn acceptance_08_kappa1_positive_regime() {
    let _serial = suite_lock();
    let grid = flat_torus(2, 32);
    let h0 = SymTensorField::identity(&grid);
    let m = MetricExpansion::model(ModelKind::ExponentialCollar { kappa1: 1 }, h0, 0.8).unwrap();
    // no resonances over the window
    let report = scan_resonances(&m, 0.01, 0.3, 20, 10, 3.0, &ScanOptions::default()).unwrap();
    let ladder = linear_ladder(0.01, 0.3, 12);
    let fol = continue_foliation(&m, &ladder, Regime::Kappa1Pos, &SolverOptions::default())
        .unwrap();
    let all_converged = fol.aborted.is_none() && fol.leaves.len() == 12;
    let max_update = fol.leaves.iter().map(|l| l.scaled_update).fold(0.0f64, f64::max);
    let max_res = fol.leaves.iter().map(|l| l.residual).fold(0.0f64, f64::max);
    criterion(
        8,
        "kappa1 > 0 regime",
        report.crossings.is_empty() && all_converged && max_update < 1e-10 && max_res < 1e-10,
        &format!(
            "crossings {}, leaves {}, max scaled update {max_update:.2e}, max residual {max_res:.2e}",
            report.crossings.len(),
            fol.leaves.len()
        ),
    );
}

#[test]
fn acceptance_09_kappa1_negative_resonances() {
    let _serial = suite_lock();
    let grid = flat_torus(2, 16);
    let h0 = SymTensorField::identity(&grid);
    let m =
        MetricExpansion::model(ModelKind::ExponentialCollar { kappa1: -1 }, h0.clone(), 1.0)
            .unwrap();

    // (a) first five crossings against the Fourier prediction
    let report = scan_resonances(&m, 2e-3, 0.05, 30, 12, 3.0, &ScanOptions::default()).unwrap();
    let oracle = collar_crossing_oracle(2, &[1, 2, 4, 5, 8]);
    let mut crossings_ok = report.crossings.len() >= 5;
    let mut worst_cross: f64 = 0.0;
    if crossings_ok {
        for (c, o) in report.crossings.iter().take(5).zip(&oracle) {
            worst_cross = worst_cross.max((c.eps - o).abs() / o);
        }
        crossings_ok = worst_cross < 0.01;
    }

    // (b) counting-function slope over two decades (n = 2 -> -1)
    let grid24 = flat_torus(2, 24);
    let m24 = MetricExpansion::model(
        ModelKind::ExponentialCollar { kappa1: -1 },
        SymTensorField::identity(&grid24),
        1.0,
    )
    .unwrap();
    let count_opts = ScanOptions { max_crossings: 0, ..Default::default() };
    let count_rep = scan_resonances(&m24, 4e-4, 4e-2, 28, 10, 3.0, &count_opts).unwrap();
    let pts: Vec<(f64, f64)> = count_rep
        .counting
        .iter()
        .filter(|(_, n)| *n >= 3)
        .map(|(e, n)| (*e, *n as f64))
        .collect();
    let cxs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let cys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let count_slope = loglog_slope(&cxs, &cys, 0.0).unwrap_or(f64::NAN);
    let counting_ok = (count_slope + 1.0).abs() <= 0.15;

    // (c) eigenvalue-speed diagnostic, stable under grid refinement
    let speed16 = eigenvalue_speed_check(&report).unwrap();
    let report24 =
        scan_resonances(&m24, 5e-3, 0.05, 25, 12, 3.0, &ScanOptions::default()).unwrap();
    let speed24 = eigenvalue_speed_check(&report24).unwrap();
    let c_stable = (speed16.c_fitted - speed24.c_fitted).abs()
        <= 0.3 * speed16.c_fitted.max(speed24.c_fitted);
    let speed_ok = speed16.violations == 0 && speed24.violations == 0 && c_stable;

    // (d) improved approximation residual orders 2 + q
    let pert3 = SymTensorField::from_fn(&grid, |y, i, j| {
        if i == j {
            0.3 * (1.0 + 0.5 * (2.0 * PI * y[0]).cos())
        } else {
            0.0
        }
    });
    let mpert = MetricExpansion::model_with_terms(
        ModelKind::ExponentialCollar { kappa1: -1 },
        h0,
        vec![(3, pert3)],
        0.8,
    )
    .unwrap();
    let cfg = PipelineCfg::default();
    let ia_ladder = log_ladder(0.006, 0.07, 8);
    let mut ia_ok = true;
    let mut ia_slopes = Vec::new();
    for q in 0..=2usize {
        let res: Vec<f64> = ia_ladder
            .iter()
            .map(|&e| improved_approximation(&mpert, e, q, &cfg).unwrap().residuals[q])
            .collect();
        let slope = loglog_slope(&ia_ladder, &res, 1e-14).unwrap();
        ia_slopes.push(slope);
        if (slope - (2.0 + q as f64)).abs() > 0.2 {
            ia_ok = false;
        }
        // amplitude bound |phi^(q)| <= c_q eps
        let sup: Vec<f64> = ia_ladder
            .iter()
            .map(|&e| improved_approximation(&mpert, e, q, &cfg).unwrap().phi0.sup_norm())
            .collect();
        for (e, s) in ia_ladder.iter().zip(&sup) {
            if *s > 10.0 * e {
                ia_ok = false;
            }
        }
    }

    // (e) foliation with gaps on J(3): ladder deliberately containing two
    // resonant points
    let mut ladder = linear_ladder(0.015, 0.05, 8);
    ladder.push(report.crossings[0].eps);
    ladder.push(report.crossings[1].eps);
    let fol =
        continue_foliation(&m, &ladder, Regime::Kappa1Neg, &SolverOptions::default()).unwrap();
    let gaps_ok = fol.gaps.len() == 2
        && fol.aborted.is_none()
        && fol.leaves.len() == 8
        && fol
            .gaps
            .iter()
            .all(|g| report.crossings.iter().any(|c| (c.eps - g.eps).abs() < 1e-9));

    criterion(
        9,
        "kappa1 < 0 resonance analysis",
        crossings_ok && counting_ok && speed_ok && ia_ok && gaps_ok,
        &format!(
            "crossings rel {worst_cross:.2e}, counting slope {count_slope:.3}, \
             C {:.3}/{:.3}, defect slopes {:?}, gaps {}",
            speed16.c_fitted,
            speed24.c_fitted,
            ia_slopes.iter().map(|s| (s * 100.0).round() / 100.0).collect::<Vec<_>>(),
            fol.gaps.len()
        ),
    );
}

#[test]
fn acceptance_10_sigma_k_suite() {
    let _serial = suite_lock();
    use foliation_core::sigma::{
        binomial, newton_polynomial_matrix, sigma_k_derivative, sigma_k_second_derivative_check,
        sigma_values,
    };
    use nalgebra::DMatrix;

    // combinatorial identities exact for n <= 8
    let mut identities = true;
    for n in 2..=8i64 {
        let id = DMatrix::<f64>::identity(n as usize, n as usize);
        for l in 0..n {
            let t = newton_polynomial_matrix(&id, (l + 1) as usize);
            for i in 0..n as usize {
                for j in 0..n as usize {
                    let want = if i == j { binomial(n - 1, l) as f64 } else { 0.0 };
                    if t[(i, j)] != want {
                        identities = false;
                    }
                }
            }
        }
        for l in 0..=n {
            let mut s = 0i64;
            for j in 0..=l {
                s += if j % 2 == 0 { 1 } else { -1 } * j * binomial(n, l - j);
            }
            if s != -binomial(n - 2, l - 1) {
                identities = false;
            }
        }
    }

    // derivative identities vs finite differences
    let mut rng = ChaCha8Rng::seed_from_u64(1234);
    let mut fd_worst: f64 = 0.0;
    for k in 1..=4usize {
        let mut b = DMatrix::<f64>::zeros(4, 4);
        let mut e = DMatrix::<f64>::zeros(4, 4);
        for i in 0..4 {
            for j in i..4 {
                let vb = rng.gen_range(-1.0..1.0);
                let ve = rng.gen_range(-1.0..1.0);
                b[(i, j)] = vb;
                b[(j, i)] = vb;
                e[(i, j)] = ve;
                e[(j, i)] = ve;
            }
        }
        let d1 = sigma_k_derivative(&b, &e, k);
        let h = 1e-6;
        let fd1 = (sigma_values(&(&b + &e * h))[k] - sigma_values(&(&b - &e * h))[k]) / (2.0 * h);
        fd_worst = fd_worst.max((d1 - fd1).abs());
        fd_worst = fd_worst.max(sigma_k_second_derivative_check(&b, &e, k));
    }

    // fuchsian constant-Gauss leaves exact
    let grid = flat_torus(2, 32);
    let h0 = SymTensorField::identity(&grid);
    let m = MetricExpansion::model(ModelKind::Fuchsian, h0.clone(), 1.2).unwrap();
    let eps = 0.4;
    let lambda = (4.0 - eps * eps) / (4.0 + eps * eps);
    let leaf_exact = solve_sigma_k_leaf(
        &m,
        eps,
        2,
        lambda * lambda,
        &ScalarField::zeros(&grid),
        &SolverOptions::default(),
    )
    .unwrap();
    let exact_ok = leaf_exact.phi0.sup_norm() == 0.0 && leaf_exact.residual < 1e-12;

    // perturbed-Fuchsian Gauss foliation with audit + k = 1 consistency
    let pert = SymTensorField::from_fn(&grid, |y, i, j| {
        if i == j {
            0.05 * (2.0 * PI * y[0]).cos()
        } else {
            0.0
        }
    });
    let mp = MetricExpansion::model_with_terms(ModelKind::Fuchsian, h0, vec![(2, pert)], 1.0)
        .unwrap();
    let opts = SolverOptions {
        cfg: PipelineCfg { steps: 96, ..Default::default() },
        ..Default::default()
    };
    let (base, kbar, yam) =
        foliation_core::foliation::gauge_base(&mp, Regime::Kappa1Zero).unwrap();
    let mut leaves = Vec::new();
    let mut warm = base.clone();
    let mut sigma_dev: f64 = 0.0;
    let ladder = linear_ladder(0.08, 0.4, 6);
    for &e in &ladder {
        let target = 1.0 - kbar * e * e; // binom(2,2) + eps^2 * (-kbar)
        let leaf = solve_sigma_k_leaf(&mp, e, 2, target, &warm, &opts).unwrap();
        warm = leaf.phi0.clone();
        let dev = leaf.achieved_h.map(|v| v - target).sup_norm();
        sigma_dev = sigma_dev.max(dev);
        leaves.push(leaf);
    }
    let fol = Foliation {
        regime: Regime::Kappa1Zero,
        leaves,
        gauge_base: base.clone(),
        kappa_bar2: Some(kbar),
        yamabe: yam,
        gaps: Vec::new(),
        aborted: None,
    };
    let audit = audit_foliation(&fol, &mp, &opts.cfg).unwrap();
    let audit_ok = audit.monotonicity == Monotonicity::Decreasing
        && audit.disjoint
        && audit.unique == UniquenessVerdict::Unique;

    // k = 1 path equals the CMC path
    let e1 = 0.2;
    let sigma_leaf = solve_sigma_k_leaf(&mp, e1, 1, 2.0 - kbar * e1 * e1, &base, &opts).unwrap();
    let cmc_leaf = solve_leaf(&mp, e1, kbar, Regime::Kappa1Zero, &base, &opts).unwrap();
    let k1_dev = sigma_leaf.phi0.sub(&cmc_leaf.phi0).sup_norm();

    criterion(
        10,
        "sigma_k suite",
        identities && fd_worst < 1e-7 && exact_ok && sigma_dev < 1e-8 && audit_ok
            && k1_dev < 1e-10,
        &format!(
            "identities {identities}, FD dev {fd_worst:.2e}, exact fuchsian {exact_ok}, \
             sigma dev {sigma_dev:.2e}, k1-vs-CMC {k1_dev:.2e}"
        ),
    );
}

#[test]
fn acceptance_11_sk_arbitration() {
    let _serial = suite_lock();
    let grid = flat_torus(2, 24);
    let h0 = SymTensorField::identity(&grid);
    let m = MetricExpansion::model_with_terms(
        ModelKind::Fuchsian,
        h0,
        vec![(2, diag_pert(&grid, 0.1))],
        1.0,
    )
    .unwrap();
    let k = m.kappas().unwrap();
    let exp = sk_expansion(&m, 1).unwrap();
    // fitted S_1 x^2 coefficient must equal -kappa2
    let fit_dev = exp.fitted_s2.add(&k.kappa2).sup_norm();
    // the closed-form/fitted discrepancy must be reported (nonzero here)
    let reported = exp.s2_discrepancy > 0.5 * k.kappa2.sup_norm();
    criterion(
        11,
        "S_k arbitration",
        fit_dev < 1e-4 && reported,
        &format!(
            "fitted-vs(-kappa2) {fit_dev:.2e}, reported discrepancy {:.3}",
            exp.s2_discrepancy
        ),
    );
}
