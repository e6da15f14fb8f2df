//! Resonance analysis of the linearized operator family
//! L_eps = eps Lap_{h(eps)} + q_eps with q_eps = -tr^h d_x h(eps)/2:
//! eigenvalue sweeps, crossing detection by negative-count bisection,
//! safe-interval assembly and the eigenvalue-speed diagnostic.

use crate::eig::{dense_sym_eig, lowmode_eig, FourierBasis, GridOp};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::metric::MetricExpansion;
use crate::ops::{laplace_beltrami_with, metric_data};
use serde::Serialize;
use std::sync::Arc;

/// Apply -L_eps = -(eps Lap_{h(eps)} + q_eps) together with quadrature
/// weights of dV_{h(eps)}.
pub(crate) fn neg_l_operator(
    m: &MetricExpansion,
    eps: f64,
) -> Result<(impl GridOp + '_, Vec<f64>)> {
    let grid = m.grid().clone();
    let n = grid.ndim();
    let h = m.eval_h(eps)?;
    let md = metric_data(&h)?;
    let weights: Vec<f64> = md.sqrt_det.iter().map(|w| w * grid.cell_volume()).collect();
    let q: Vec<f64> = (0..grid.len()).map(|idx| -m.t_point(idx, eps)).collect();
    let op = move |v: &ScalarField| -> Result<ScalarField> {
        let lap = laplace_beltrami_with(v, n, &md)?;
        Ok(ScalarField::from_data(
            v.grid(),
            lap.data()
                .iter()
                .zip(v.data())
                .zip(&q)
                .map(|((l, vv), qq)| -(eps * l + qq * vv))
                .collect(),
        )?)
    };
    Ok(((grid, op), weights))
}

#[derive(Debug, Clone, Copy)]
pub struct ScanOptions {
    /// grids up to this size use the dense route for samples
    pub dense_limit: usize,
    /// safety factor on the low-mode cutoff
    pub k2_margin: f64,
    pub locate_tol: f64,
    /// locate at most this many crossings (largest eps first); deeper
    /// jumps still enter the counting function
    pub max_crossings: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { dense_limit: 1600, k2_margin: 1.6, locate_tol: 1e-10, max_crossings: 12 }
    }
}

/// Low-mode cutoff |k|^2 needed so that every eigenvalue of -L_eps below
/// ~ +q is represented.
fn k2_cutoff(m: &MetricExpansion, eps: f64, margin: f64) -> Result<i64> {
    let grid = m.grid();
    let h = m.eval_h(eps)?;
    let md = metric_data(&h)?;
    let n = grid.ndim();
    // smallest symbol growth per unit |k|^2
    let mut min_diag = f64::INFINITY;
    for idx in 0..grid.len() {
        for i in 0..n {
            let v = crate::smallmat::at(&md.inv[idx], i, i);
            min_diag = min_diag.min(v);
        }
    }
    let p_max = grid.periods().iter().cloned().fold(0.0f64, f64::max);
    let rate = min_diag * (2.0 * std::f64::consts::PI / p_max).powi(2);
    let q_max = (0..grid.len()).map(|i| -m.t_point(i, eps)).fold(0.0f64, f64::max);
    Ok(((margin * (q_max.max(0.1) + 0.5) / (eps * rate)).ceil()) as i64)
}

/// min |eig(-L_eps)| via the low-mode reduction, together with the J(N)
/// gate value eps^N. Grids too coarse to resolve the crossing band fall
/// back to the dense route.
pub fn resonance_gate(m: &MetricExpansion, eps: f64, exponent: f64) -> Result<(f64, f64)> {
    let grid = m.grid();
    let gate = eps.powf(exponent);
    let k2 = k2_cutoff(m, eps, 1.6)?;
    let kmax_grid = (grid.dims().iter().cloned().min().unwrap() / 2 - 1) as i64;
    let (op, weights) = neg_l_operator(m, eps)?;
    let vals = if (k2 as f64).sqrt() <= kmax_grid as f64 {
        let basis = FourierBasis::lowpass(grid, k2);
        lowmode_eig(&op, &weights, &basis)?.0
    } else if grid.len() <= 1600 {
        dense_sym_eig(&op, &weights)?.0
    } else {
        return Err(Error::Validation(format!(
            "grid too coarse to resolve the resonance band at eps = {eps:.3e}"
        )));
    };
    let min_abs = vals.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    Ok((min_abs, gate))
}

/// One spectral sample of -L_eps.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumSample {
    pub eps: f64,
    pub eigs: Vec<f64>,
    pub n_neg: usize,
}

/// A located resonance with its dense re-check residual.
#[derive(Debug, Clone, Serialize)]
pub struct Crossing {
    pub eps: f64,
    pub multiplicity: usize,
    pub checked_eig: f64,
}

/// A tracked eigenvalue branch point.
#[derive(Debug, Clone, Serialize)]
pub struct BranchPoint {
    pub eps: f64,
    pub lambda: f64,
    pub lambda_dot: Option<f64>,
    /// eps * lambda_dot / (lambda + 1)
    pub speed_ratio: Option<f64>,
    pub ambiguous: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub samples: Vec<SpectrumSample>,
    /// crossings sorted decreasing in eps
    pub crossings: Vec<Crossing>,
    /// counting function per sample: crossings at or above eps within range
    pub counting: Vec<(f64, usize)>,
    /// safe intervals where min |eig| > eps^N
    pub j_intervals: Vec<(f64, f64)>,
    pub jn_exponent: f64,
    pub branches: Vec<Vec<BranchPoint>>,
    pub ambiguous_points: usize,
}

struct SampleData {
    eps: f64,
    vals: Vec<f64>,
    vecs: nalgebra::DMatrix<f64>,
    n_neg: usize,
}

fn sample_at(
    m: &MetricExpansion,
    eps: f64,
    m_eigs: usize,
    basis: Option<&FourierBasis>,
) -> Result<SampleData> {
    let (op, weights) = neg_l_operator(m, eps)?;
    let (vals, vecs) = match basis {
        Some(b) => lowmode_eig(&op, &weights, b)?,
        None => dense_sym_eig(&op, &weights)?,
    };
    let n_neg = vals.iter().filter(|v| **v < 0.0).count();
    let keep = m_eigs.min(vals.len());
    Ok(SampleData {
        eps,
        vals: vals[..keep].to_vec(),
        vecs: vecs.columns(0, keep).into_owned(),
        n_neg,
    })
}

fn n_neg_at(m: &MetricExpansion, eps: f64, basis: Option<&FourierBasis>) -> Result<usize> {
    let (op, weights) = neg_l_operator(m, eps)?;
    let vals = match basis {
        Some(b) => lowmode_eig(&op, &weights, b)?.0,
        None => dense_sym_eig(&op, &weights)?.0,
    };
    Ok(vals.iter().filter(|v| **v < 0.0).count())
}


fn nearest_zero_eig(m: &MetricExpansion, eps: f64, opts: &ScanOptions) -> Result<f64> {
    let grid = m.grid();
    let k2 = k2_cutoff(m, eps, 1.6)?;
    let kmax_grid = (grid.dims().iter().cloned().min().unwrap() / 2 - 1) as i64;
    let (op, weights) = neg_l_operator(m, eps)?;
    let vals = if (k2 as f64).sqrt() <= kmax_grid as f64 {
        let basis = FourierBasis::lowpass(grid, k2);
        lowmode_eig(&op, &weights, &basis)?.0
    } else if grid.len() <= opts.dense_limit {
        dense_sym_eig(&op, &weights)?.0
    } else {
        return Err(Error::Validation(format!(
            "grid too coarse at eps = {eps:.3e}"
        )));
    };
    Ok(vals
        .iter()
        .cloned()
        .min_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap())
        .unwrap())
}

/// Dense-grid re-check of the eigenvalue nearest zero (the oracle-grade
/// verification stored with each located crossing).
fn nearest_zero_dense(m: &MetricExpansion, eps: f64) -> Result<f64> {
    let (op, weights) = neg_l_operator(m, eps)?;
    let vals = dense_sym_eig(&op, &weights)?.0;
    Ok(vals
        .iter()
        .cloned()
        .min_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap())
        .unwrap())
}

/// Scan the family -L_eps over [eps_lo, eps_hi]: lowest eigenvalues per
/// sample, crossing set by negative-count bisection (located to
/// `locate_tol` and re-checked densely), counting function, safe J(N)
/// intervals, and eigenvalue branches with speed diagnostics.
pub fn scan_resonances(
    m: &MetricExpansion,
    eps_lo: f64,
    eps_hi: f64,
    n_samples: usize,
    m_eigs: usize,
    jn_exponent: f64,
    opts: &ScanOptions,
) -> Result<SpectrumReport> {
    if !(eps_lo > 0.0 && eps_hi > eps_lo && eps_hi <= m.x_max()) {
        return Err(Error::Validation("bad resonance scan range".into()));
    }
    if m_eigs > 50 {
        return Err(Error::Validation("m_eigs must be <= 50".into()));
    }
    let grid = m.grid().clone();
    // a fixed low-mode basis across the sweep when the grid resolves it
    let k2_need = k2_cutoff(m, eps_lo, opts.k2_margin)?;
    let kmax_grid = (grid.dims().iter().cloned().min().unwrap() / 2 - 1) as i64;
    let fixed_basis = if (k2_need as f64).sqrt() <= kmax_grid as f64 {
        Some(FourierBasis::lowpass(&grid, k2_need))
    } else if grid.len() <= opts.dense_limit {
        None
    } else {
        return Err(Error::Validation(
            "grid resolves neither the dense route nor the crossing band".into(),
        ));
    };
    let basis_ref = fixed_basis.as_ref();

    let ladder = crate::fit::log_ladder(eps_lo, eps_hi, n_samples);
    let mut data = Vec::with_capacity(n_samples);
    for &eps in &ladder {
        data.push(sample_at(m, eps, m_eigs, basis_ref)?);
    }

    // ---- crossings: bisect negative-count jumps, largest eps first ----
    let mut crossings: Vec<Crossing> = Vec::new();
    'gaps: for w in (0..data.len() - 1).rev() {
        let (lo, lo_n) = (data[w].eps, data[w].n_neg);
        let (hi, hi_n) = (data[w + 1].eps, data[w + 1].n_neg);
        // negatives decrease as eps increases
        let mut pending: Vec<(f64, usize, f64, usize)> = if lo_n > hi_n {
            vec![(lo, lo_n, hi, hi_n)]
        } else {
            Vec::new()
        };
        while let Some((a, na, b, nb)) = pending.pop() {
            if na == nb {
                continue;
            }
            if crossings.len() >= opts.max_crossings {
                break 'gaps;
            }
            if na < nb {
                continue;
            }
            if (b - a) <= opts.locate_tol.max(1e-14 * b) {
                let mid = 0.5 * (a + b);
                let checked = nearest_zero_dense(m, mid)?;
                crossings.push(Crossing {
                    eps: mid,
                    multiplicity: na - nb,
                    checked_eig: checked.abs(),
                });
                continue;
            }
            let mid = 0.5 * (a + b);
            let nm = n_neg_at(m, mid, basis_ref)?;
            // keep the upper sub-interval first so larger crossings resolve
            // before the quota runs out
            pending.push((a, na, mid, nm));
            pending.push((mid, nm, b, nb));
        }
    }
    crossings.sort_by(|a, b| b.eps.partial_cmp(&a.eps).unwrap());

    // ---- counting function ----
    let n_neg_top = data.last().unwrap().n_neg;
    let counting: Vec<(f64, usize)> =
        data.iter().map(|s| (s.eps, s.n_neg.saturating_sub(n_neg_top))).collect();

    // ---- J(N) intervals ----
    let gate = |e: f64| -> f64 { e.powf(jn_exponent) };
    let min_abs = |m_: &MetricExpansion, e: f64| -> Result<f64> {
        Ok(nearest_zero_eig(m_, e, opts)?.abs())
    };
    let mut boundaries: Vec<f64> = crossings.iter().map(|c| c.eps).collect();
    // below the smallest located crossing the gap structure is unknown
    let locate_floor = if crossings.len() >= opts.max_crossings && !crossings.is_empty() {
        crossings.iter().map(|c| c.eps).fold(f64::INFINITY, f64::min)
    } else {
        eps_lo
    };
    boundaries.push(locate_floor);
    boundaries.push(eps_hi);
    boundaries.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut j_intervals = Vec::new();
    if opts.max_crossings == 0 {
        boundaries.clear();
    }
    for w in boundaries.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b - a < 1e-12 {
            continue;
        }
        let mid = (a * b).sqrt();
        if min_abs(m, mid)? <= gate(mid) {
            continue;
        }
        // left endpoint: between a (crossing, fails) and mid (passes)
        let left = if (min_abs(m, a)?) > gate(a) {
            a
        } else {
            let (mut x0, mut x1) = (a, mid);
            for _ in 0..48 {
                let xm = 0.5 * (x0 + x1);
                if min_abs(m, xm)? > gate(xm) {
                    x1 = xm;
                } else {
                    x0 = xm;
                }
            }
            x1
        };
        let right = if (min_abs(m, b)?) > gate(b) {
            b
        } else {
            let (mut x0, mut x1) = (mid, b);
            for _ in 0..48 {
                let xm = 0.5 * (x0 + x1);
                if min_abs(m, xm)? > gate(xm) {
                    x0 = xm;
                } else {
                    x1 = xm;
                }
            }
            x0
        };
        j_intervals.push((left, right));
    }

    // ---- branch tracking by eigenvector overlap ----
    let nsamp = data.len();
    let keep = data.iter().map(|d| d.vals.len()).min().unwrap_or(0);
    let mut successor: Vec<Vec<Option<usize>>> = Vec::with_capacity(nsamp.saturating_sub(1));
    let mut ambiguous_flags: Vec<Vec<bool>> = vec![vec![false; keep]; nsamp];
    let (_, weights) = neg_l_operator(m, ladder[0])?;
    for i in 0..nsamp - 1 {
        let a = &data[i];
        let b = &data[i + 1];
        let mut succ = vec![None; keep];
        let mut taken = vec![false; keep];
        for j in 0..keep {
            let mut best = (0usize, 0.0f64);
            let mut second = 0.0f64;
            for k in 0..keep {
                let mut ov = 0.0;
                if basis_ref.is_some() {
                    for r in 0..a.vecs.nrows() {
                        ov += a.vecs[(r, j)] * b.vecs[(r, k)];
                    }
                } else {
                    for r in 0..a.vecs.nrows() {
                        ov += a.vecs[(r, j)] * b.vecs[(r, k)] * weights[r];
                    }
                }
                let ov = ov.abs();
                if ov > best.1 {
                    second = best.1;
                    best = (k, ov);
                } else if ov > second {
                    second = ov;
                }
            }
            let norm_a: f64 = if basis_ref.is_some() {
                (0..a.vecs.nrows()).map(|r| a.vecs[(r, j)].powi(2)).sum::<f64>().sqrt()
            } else {
                (0..a.vecs.nrows())
                    .map(|r| a.vecs[(r, j)].powi(2) * weights[r])
                    .sum::<f64>()
                    .sqrt()
            };
            let confident = best.1 > 0.5 * norm_a && second < 0.8 * best.1;
            if !taken[best.0] && confident {
                succ[j] = Some(best.0);
                taken[best.0] = true;
            } else {
                ambiguous_flags[i][j] = true;
            }
        }
        successor.push(succ);
    }

    // assemble trajectories
    let mut used = vec![vec![false; keep]; nsamp];
    let mut branches: Vec<Vec<BranchPoint>> = Vec::new();
    let mut ambiguous_points = 0usize;
    for start_i in 0..nsamp {
        for start_j in 0..keep {
            if used[start_i][start_j] {
                continue;
            }
            let mut traj: Vec<(usize, usize)> = Vec::new();
            let (mut i, mut j) = (start_i, start_j);
            loop {
                used[i][j] = true;
                traj.push((i, j));
                if i + 1 >= nsamp {
                    break;
                }
                match successor[i][j] {
                    Some(k) if !used[i + 1][k] => {
                        i += 1;
                        j = k;
                    }
                    _ => break,
                }
            }
            if traj.len() < 2 {
                if ambiguous_flags[start_i][start_j] {
                    ambiguous_points += 1;
                }
                continue;
            }
            let mut pts: Vec<BranchPoint> = traj
                .iter()
                .map(|&(i, j)| BranchPoint {
                    eps: data[i].eps,
                    lambda: data[i].vals[j],
                    lambda_dot: None,
                    speed_ratio: None,
                    ambiguous: ambiguous_flags[i][j],
                })
                .collect();
            // nonuniform central differences along the branch
            for t in 1..pts.len() - 1 {
                let (e0, e1, e2) = (pts[t - 1].eps, pts[t].eps, pts[t + 1].eps);
                let (l0, l1, l2) = (pts[t - 1].lambda, pts[t].lambda, pts[t + 1].lambda);
                let h1 = e1 - e0;
                let h2 = e2 - e1;
                let dot = (l2 * h1 * h1 - l0 * h2 * h2 + l1 * (h2 * h2 - h1 * h1))
                    / (h1 * h2 * (h1 + h2));
                pts[t].lambda_dot = Some(dot);
                pts[t].speed_ratio = Some(e1 * dot / (l1 + 1.0));
            }
            ambiguous_points += pts.iter().filter(|p| p.ambiguous).count();
            branches.push(pts);
        }
    }

    let samples = data
        .into_iter()
        .map(|d| SpectrumSample { eps: d.eps, eigs: d.vals, n_neg: d.n_neg })
        .collect();
    Ok(SpectrumReport {
        samples,
        crossings,
        counting,
        j_intervals,
        jn_exponent,
        branches,
        ambiguous_points,
    })
}

/// Result of the eigenvalue-speed diagnostic |eps l' / (l + 1) - 1| <= C eps.
#[derive(Debug, Clone, Serialize)]
pub struct SpeedCheck {
    /// smallest C validating the bound over all usable branch points
    pub c_fitted: f64,
    pub n_points: usize,
    /// points flagged as outliers (> 10x the median normalized deviation)
    pub violations: usize,
}

/// Evaluate the speed bound on all tracked branch points with |lambda| < 1/2.
/// Points whose one-sided slopes disagree are treated as set-valued
/// derivative data at a cluster and excluded.
pub fn eigenvalue_speed_check(report: &SpectrumReport) -> Result<SpeedCheck> {
    let mut values = Vec::new();
    for branch in &report.branches {
        for (t, p) in branch.iter().enumerate() {
            if p.ambiguous || p.lambda.abs() >= 0.5 {
                continue;
            }
            if t == 0 || t + 1 >= branch.len() {
                continue;
            }
            let left = (branch[t].lambda - branch[t - 1].lambda)
                / (branch[t].eps - branch[t - 1].eps);
            let right = (branch[t + 1].lambda - branch[t].lambda)
                / (branch[t + 1].eps - branch[t].eps);
            if (left - right).abs() > 0.3 * left.abs().max(right.abs()) {
                continue;
            }
            if let Some(r) = p.speed_ratio {
                values.push(((r - 1.0).abs()) / p.eps);
            }
        }
    }
    if values.len() < 3 {
        return Err(Error::InsufficientSamples(format!(
            "only {} usable branch points with |lambda| < 1/2",
            values.len()
        )));
    }
    let mut sorted = values.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = sorted[sorted.len() / 2];
    let c = sorted.last().cloned().unwrap();
    let violations = values.iter().filter(|v| **v > 10.0 * median.max(1e-12)).count();
    Ok(SpeedCheck { c_fitted: c, n_points: values.len(), violations })
}

/// Fourier-prediction oracle for the pure exponential collar on the unit
/// flat torus: the crossing of mode |k|^2 solves eps e^{2 eps/n} 4 pi^2
/// |k|^2 = q with q = 1; returns crossings for the distinct |k|^2 values,
/// largest first.
pub fn collar_crossing_oracle(n: usize, k2_values: &[i64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(k2_values.len());
    for &k2 in k2_values {
        let omega = 4.0 * std::f64::consts::PI * std::f64::consts::PI * k2 as f64;
        // solve eps e^{2 eps / n} omega = 1 by Newton from the leading order
        let mut eps = 1.0 / omega;
        for _ in 0..60 {
            let e = (2.0 * eps / n as f64).exp();
            let f = eps * e * omega - 1.0;
            let df = e * omega * (1.0 + 2.0 * eps / n as f64);
            eps -= f / df;
        }
        out.push(eps);
    }
    out
}

/// Grid handle passthrough for callers constructing operators directly.
pub fn operator_grid(m: &MetricExpansion) -> Arc<crate::grid::BoundaryGrid> {
    m.grid().clone()
}
