//! Extrinsic geometry of the located level sets {x e^phi = eps}: second
//! fundamental form, mean curvature, the curvature operators N and
//! N-tilde, their matrix-free linearization, conformal transformation of
//! the kappa invariants, and the Jacobi potential.
//!
//! All phi-dependent node fields are interpolated in x with 6-point
//! stencils; everything that depends only on the metric family (h, d_x h,
//! T = tr^h d_x h / 2) is evaluated exactly at x_star per point, so model
//! metrics with phi = 0 are computed to machine precision.

use crate::error::{Error, Result};
use crate::extension::{extend, locate_level_set, ExtendedFactor, LevelSet};
use crate::field::{ScalarField, SymTensorField, VectorField};
use crate::grid::BoundaryGrid;
use crate::metric::{KappaPair, MetricExpansion};
use crate::ops::{
    coordinate_gradient, gradient_norm_sq, laplace_beltrami, metric_data,
};
use crate::smallmat::{self, Mat};
use std::sync::Arc;

/// Discretization choices threaded through every pipeline evaluation of a
/// curvature operator: ladder resolution and collar padding beyond the
/// deepest expected level set.
#[derive(Debug, Clone, Copy)]
pub struct PipelineCfg {
    pub steps: usize,
    pub pad: f64,
    pub dealias: bool,
}

impl Default for PipelineCfg {
    fn default() -> Self {
        Self { steps: 192, pad: 1.35, dealias: false }
    }
}

impl PipelineCfg {
    /// Collar depth needed to restrict at eps below boundary data phi0.
    pub fn x_eval(&self, m: &MetricExpansion, phi0: &ScalarField, eps: f64) -> f64 {
        (self.pad * eps * (-phi0.min()).exp()).min(m.x_max())
    }
}

// ---------------------------------------------------------------------------
// per-node building blocks and restriction to the level set
// ---------------------------------------------------------------------------

/// d^2_x phi from the branch formula differentiated in x:
/// with s = sqrt(1 - x^2 G),
/// d2 = -G/(s(1+s)) - (x/(2s)) dG/dx,
/// dG/dx = (d_x h^{ij}) di phi dj phi + 2 h^{ij} di phi dj p.
fn node_blocks(
    m: &MetricExpansion,
    x: f64,
    phi: &ScalarField,
    p: &ScalarField,
) -> Result<NodeBlock> {
    let grid = phi.grid().clone();
    let n = grid.ndim();
    let len = grid.len();
    let dphi = coordinate_gradient(phi)?;
    let dp = coordinate_gradient(p)?;

    let h_field = m.eval_h(x)?;
    let md = metric_data(&h_field)?;
    let lap = crate::ops::laplace_beltrami_with(phi, n, &md)?;

    let mut g = vec![0.0; len];
    let mut d2 = vec![0.0; len];
    let mut dtilde = ScalarField::zeros(&grid);
    let c = (n as f64 - 1.0) / 2.0;
    for idx in 0..len {
        let hinv = &md.inv[idx];
        let dxh = m.dxh_point(idx, x);
        let d = dphi.at(idx);
        let dpv = dp.at(idx);
        let mut gg = 0.0;
        for i in 0..n {
            for j in 0..n {
                gg += smallmat::at(hinv, i, j) * d[i] * d[j];
            }
        }
        g[idx] = gg;
        let u = x * x * gg;
        if u >= 1.0 {
            return Err(Error::DiscriminantFailure { x });
        }
        let s = (1.0 - u).sqrt();
        // dG/dx: d_x h^{-1} = -h^{-1} dxh h^{-1}
        let tmp = smallmat::mul(n, hinv, &smallmat::mul(n, &dxh, hinv));
        let mut dg = 0.0;
        for i in 0..n {
            for j in 0..n {
                dg -= smallmat::at(&tmp, i, j) * d[i] * d[j];
                dg += 2.0 * smallmat::at(hinv, i, j) * d[i] * dpv[j];
            }
        }
        let d2v = -gg / (s * (1.0 + s)) - 0.5 * x / s * dg;
        d2[idx] = d2v;
        let pv = p.data()[idx];
        dtilde.data_mut()[idx] = d2v + lap.data()[idx] + c * (pv * pv + gg);
    }
    Ok(NodeBlock { dphi, dp, grad_sq: g, d2, dtilde })
}

struct NodeBlock {
    dphi: VectorField,
    dp: VectorField,
    grad_sq: Vec<f64>,
    d2: Vec<f64>,
    dtilde: ScalarField,
}

/// phi-dependent data of one leaf, interpolated to x_star pointwise.
pub(crate) struct RestrictedMean {
    pub level: LevelSet,
    pub phi: Vec<f64>,
    pub p: Vec<f64>,
    pub dtilde: Vec<f64>,
}

fn band_of(ef: &ExtendedFactor, level: &LevelSet) -> (usize, usize) {
    let lo = level.x_star.min();
    let hi = level.x_star.max();
    let (i_lo, _) = ef.stencil(lo);
    let (i_hi, _) = ef.stencil(hi);
    (i_lo, (i_hi + 6).min(ef.n_nodes()))
}

pub(crate) fn restrict_mean(
    m: &MetricExpansion,
    ef: &ExtendedFactor,
    eps: f64,
) -> Result<RestrictedMean> {
    let level = locate_level_set(ef, eps)?;
    let (k_lo, k_hi) = band_of(ef, &level);
    let mut blocks: Vec<Option<NodeBlock>> = (0..ef.n_nodes()).map(|_| None).collect();
    for k in k_lo..k_hi {
        blocks[k] = Some(node_blocks(m, ef.xs()[k], ef.phi_node(k), ef.p_node(k))?);
    }
    let len = ef.grid().len();
    let mut out = RestrictedMean {
        level,
        phi: vec![0.0; len],
        p: vec![0.0; len],
        dtilde: vec![0.0; len],
    };
    for idx in 0..len {
        let x = out.level.x_star.data()[idx];
        let (i0, w) = ef.stencil(x);
        let mut phi = 0.0;
        let mut p = 0.0;
        let mut dt = 0.0;
        for j in 0..6 {
            let k = i0 + j;
            phi += w[j] * ef.phi_node(k).data()[idx];
            p += w[j] * ef.p_node(k).data()[idx];
            dt += w[j] * blocks[k].as_ref().expect("node in band").dtilde.data()[idx];
        }
        out.phi[idx] = phi;
        out.p[idx] = p;
        out.dtilde[idx] = dt;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// curvature operators
// ---------------------------------------------------------------------------

/// Mean curvature of the leaf together with its spatial statistics.
#[derive(Debug, Clone)]
pub struct CurvatureReport {
    pub eps: f64,
    pub h: ScalarField,
    pub mean: f64,
    pub max_dev: f64,
}

/// N(phi0, eps): the quadratic-scale curvature density with
/// H = n - eps^2 N. Assembled directly on the level set (no division of
/// noisy differences).
pub fn n_operator(m: &MetricExpansion, ef: &ExtendedFactor, eps: f64) -> Result<ScalarField> {
    let r = restrict_mean(m, ef, eps)?;
    let grid = ef.grid().clone();
    let mut out = ScalarField::zeros(&grid);
    for idx in 0..grid.len() {
        let x = r.level.x_star.data()[idx];
        let t = m.t_point(idx, x);
        let a = (-2.0 * r.phi[idx]).exp() * (t * (1.0 / x + r.p[idx]) + r.dtilde[idx]);
        out.data_mut()[idx] = a;
    }
    Ok(out)
}

/// N-tilde(phi0, eps) = eps * N: the linear-scale variant used in the
/// nonvanishing-kappa1 regimes, assembled without forming N first.
pub fn ntilde_operator(m: &MetricExpansion, ef: &ExtendedFactor, eps: f64) -> Result<ScalarField> {
    let r = restrict_mean(m, ef, eps)?;
    let grid = ef.grid().clone();
    let mut out = ScalarField::zeros(&grid);
    for idx in 0..grid.len() {
        let x = r.level.x_star.data()[idx];
        let t = m.t_point(idx, x);
        let v = (-r.phi[idx]).exp() * (t * (1.0 + x * r.p[idx]) + x * r.dtilde[idx]);
        out.data_mut()[idx] = v;
    }
    Ok(out)
}

/// Mean curvature H(phi0, eps) of {x e^phi = eps}, pulled back to the grid.
pub fn mean_curvature(
    m: &MetricExpansion,
    ef: &ExtendedFactor,
    eps: f64,
) -> Result<CurvatureReport> {
    let n = m.ndim() as f64;
    let nop = n_operator(m, ef, eps)?;
    let h = nop.map(|v| n - eps * eps * v);
    let mean = h.mean();
    let max_dev = h.data().iter().fold(0.0f64, |acc, &v| acc.max((v - mean).abs()));
    Ok(CurvatureReport { eps, h, mean, max_dev })
}

// ---------------------------------------------------------------------------
// second fundamental form and shape data
// ---------------------------------------------------------------------------

/// Leaf shape data: induced metric and second fundamental form in the
/// ambient-metric normalization, plus sorted principal curvatures.
#[derive(Debug, Clone)]
pub struct ShapeData {
    pub level: LevelSet,
    pub induced_metric: SymTensorField,
    pub second_form: SymTensorField,
    pub principal: VectorField,
}

/// Scaled leaf tensors (x*^2 g_ind, x*^2 II) per point: O(1) quantities
/// assembled from the collar expression for the second fundamental form
/// projected onto the leaf tangent basis e_a = d_a + (d_a x_star) d_x.
pub(crate) fn leaf_tensors(
    m: &MetricExpansion,
    ef: &ExtendedFactor,
    eps: f64,
) -> Result<(LevelSet, Vec<Mat>, Vec<Mat>)> {
    let grid = ef.grid().clone();
    let n = grid.ndim();
    let len = grid.len();
    let level = locate_level_set(ef, eps)?;
    let (k_lo, k_hi) = band_of(ef, &level);

    // per-node phi blocks + ambient Hessian blocks
    struct ShapeNode {
        block: NodeBlock,
        hess_yy: SymTensorField, // Hess^{h(x)}(phi) + (dxh/2) p
        hess_xa: VectorField,    // d_a p - (h^{cb} dxh_{ba}/2) d_c phi
    }
    let mut nodes: Vec<Option<ShapeNode>> = (0..ef.n_nodes()).map(|_| None).collect();
    for k in k_lo..k_hi {
        let x = ef.xs()[k];
        let phi = ef.phi_node(k);
        let p = ef.p_node(k);
        let block = node_blocks(m, x, phi, p)?;
        let h_field = m.eval_h(x)?;
        let mut hess_yy = crate::curvature::hessian(phi, &h_field)?;
        let md = metric_data(&h_field)?;
        let mut hess_xa = VectorField::zeros(&grid);
        for idx in 0..len {
            let dxh = m.dxh_point(idx, x);
            let pv = p.data()[idx];
            for i in 0..n {
                for j in i..n {
                    let v = hess_yy.get(idx, i, j) + 0.5 * smallmat::at(&dxh, i, j) * pv;
                    hess_yy.set(idx, i, j, v);
                }
            }
            let hinv = &md.inv[idx];
            let d = block.dphi.at(idx);
            let dpv = block.dp.at(idx);
            for a in 0..n {
                let mut v = dpv[a];
                for c_i in 0..n {
                    for b in 0..n {
                        v -= 0.5
                            * smallmat::at(hinv, c_i, b)
                            * smallmat::at(&dxh, b, a)
                            * d[c_i];
                    }
                }
                hess_xa.set_comp(idx, a, v);
            }
        }
        nodes[k] = Some(ShapeNode { block, hess_yy, hess_xa });
    }

    let tri = crate::field::tri_len(n);
    let mut g_mats = Vec::with_capacity(len);
    let mut ii_mats = Vec::with_capacity(len);
    for idx in 0..len {
        let x = level.x_star.data()[idx];
        let (i0, w) = ef.stencil(x);
        // interpolate phi-dependent data
        let mut phi_s = 0.0;
        let mut p_s = 0.0;
        let mut d2_s = 0.0;
        let mut gsq_s = 0.0;
        let mut dphi_s = [0.0; 3];
        let mut hyy_s = vec![0.0; tri];
        let mut hxa_s = [0.0; 3];
        for j in 0..6 {
            let k = i0 + j;
            let nd = nodes[k].as_ref().expect("node in band");
            phi_s += w[j] * ef.phi_node(k).data()[idx];
            p_s += w[j] * ef.p_node(k).data()[idx];
            d2_s += w[j] * nd.block.d2[idx];
            gsq_s += w[j] * nd.block.grad_sq[idx];
            for a in 0..n {
                dphi_s[a] += w[j] * nd.block.dphi.comp(idx, a);
                hxa_s[a] += w[j] * nd.hess_xa.comp(idx, a);
            }
            for (c, v) in nd.hess_yy.tri(idx).iter().enumerate() {
                hyy_s[c] += w[j] * v;
            }
        }
        let _ = phi_s;
        let h = m.h_point(idx, x);
        let dxh = m.dxh_point(idx, x);
        let grad_sq_full = p_s * p_s + gsq_s;
        // graph slope v_a = d_a x_star
        let denom = 1.0 + x * p_s;
        let mut v = [0.0; 3];
        for a in 0..n {
            v[a] = -x * dphi_s[a] / denom;
        }
        // W = x^2 * (collar second-form expression), O(1) entries
        let hyy = smallmat::from_tri(n, &hyy_s);
        let mut w_yy = smallmat::ZERO;
        for i in 0..n {
            for j in 0..n {
                let hv = smallmat::at(&h, i, j);
                w_yy[i * 3 + j] = hv - 0.5 * x * smallmat::at(&dxh, i, j)
                    - x * x * (smallmat::at(&hyy, i, j) + 0.5 * grad_sq_full * hv);
            }
        }
        let mut w_xa = [0.0; 3];
        for a in 0..n {
            w_xa[a] = -x * dphi_s[a] - x * x * hxa_s[a];
        }
        let w_xx = -2.0 * x * p_s - x * x * (d2_s + 0.5 * grad_sq_full);
        // tangential projection onto e_a = d_a + v_a d_x
        let mut ii = smallmat::ZERO;
        let mut g = smallmat::ZERO;
        for a in 0..n {
            for b in 0..n {
                ii[a * 3 + b] = w_yy[a * 3 + b]
                    + w_xa[a] * v[b]
                    + w_xa[b] * v[a]
                    + w_xx * v[a] * v[b];
                g[a * 3 + b] = smallmat::at(&h, a, b) + v[a] * v[b];
            }
        }
        g_mats.push(g);
        ii_mats.push(ii);
    }
    Ok((level, g_mats, ii_mats))
}

/// Second fundamental form of the leaf in the ambient normalization
/// (entries scale like x^{-2}) together with the induced metric and the
/// sorted principal curvatures.
pub fn second_fundamental_form(
    m: &MetricExpansion,
    ef: &ExtendedFactor,
    eps: f64,
) -> Result<ShapeData> {
    let grid = ef.grid().clone();
    let n = grid.ndim();
    let (level, g_mats, ii_mats) = leaf_tensors(m, ef, eps)?;
    let mut induced = SymTensorField::zeros(&grid);
    let mut second = SymTensorField::zeros(&grid);
    let mut principal = VectorField::zeros(&grid);
    let tri = crate::field::tri_len(n);
    for idx in 0..grid.len() {
        let x = level.x_star.data()[idx];
        let s = 1.0 / (x * x);
        let mut packed = vec![0.0; tri];
        smallmat::to_tri(n, &g_mats[idx].map(|v| v * s), &mut packed);
        induced.data_mut()[idx * tri..(idx + 1) * tri].copy_from_slice(&packed);
        smallmat::to_tri(n, &ii_mats[idx].map(|v| v * s), &mut packed);
        second.data_mut()[idx * tri..(idx + 1) * tri].copy_from_slice(&packed);
        let ev = smallmat::metric_sym_eigenvalues(n, &g_mats[idx], &ii_mats[idx])
            .ok_or(Error::SingularMetric { point: idx })?;
        for a in 0..n {
            principal.set_comp(idx, a, ev[a]);
        }
    }
    Ok(ShapeData { level, induced_metric: induced, second_form: second, principal })
}

// ---------------------------------------------------------------------------
// conformal transformation of the kappa invariants
// ---------------------------------------------------------------------------

/// kappa1 -> e^{-phi0} kappa1,
/// kappa2 -> e^{-2 phi0} (kappa2 + Lap_{h0} phi0 + (n-2)/2 |grad phi0|^2).
pub fn transform_kappas(
    k: &KappaPair,
    phi0: &ScalarField,
    h0: &SymTensorField,
) -> Result<KappaPair> {
    let n = h0.grid().ndim() as f64;
    let lap = laplace_beltrami(phi0, h0)?;
    let gsq = gradient_norm_sq(phi0, h0)?;
    let kappa1 = k.kappa1.zip_with(phi0, |k1, p| (-p).exp() * k1);
    let mut kappa2 = k.kappa2.add(&lap);
    kappa2.axpy((n - 2.0) / 2.0, &gsq);
    let kappa2 = kappa2.zip_with(phi0, |v, p| (-2.0 * p).exp() * v);
    Ok(KappaPair { kappa1, kappa2 })
}

/// The eps -> 0 limit of N(phi0, .): the conformally transformed kappa2.
pub fn n_operator_at_zero(m: &MetricExpansion, phi0: &ScalarField) -> Result<ScalarField> {
    let k = m.kappas()?;
    Ok(transform_kappas(&k, phi0, m.h0())?.kappa2)
}

// ---------------------------------------------------------------------------
// pipeline evaluation and matrix-free linearization
// ---------------------------------------------------------------------------

/// Full pipeline evaluation of N: extend phi0, restrict at eps, assemble.
pub fn eval_n(
    m: &MetricExpansion,
    phi0: &ScalarField,
    eps: f64,
    cfg: &PipelineCfg,
) -> Result<ScalarField> {
    if eps == 0.0 {
        return n_operator_at_zero(m, phi0);
    }
    let x_eval = cfg.x_eval(m, phi0, eps);
    let ef = crate::extension::extend_with(phi0, m, x_eval, cfg.steps, cfg.dealias)?;
    n_operator(m, &ef, eps)
}

/// Full pipeline evaluation of N-tilde.
pub fn eval_ntilde(
    m: &MetricExpansion,
    phi0: &ScalarField,
    eps: f64,
    cfg: &PipelineCfg,
) -> Result<ScalarField> {
    let x_eval = cfg.x_eval(m, phi0, eps);
    let ef = crate::extension::extend_with(phi0, m, x_eval, cfg.steps, cfg.dealias)?;
    ntilde_operator(m, &ef, eps)
}

/// Matrix-free directional derivative of phi0 -> N(phi0, eps) through the
/// full nonlocal pipeline, by Richardson-combined central differences at
/// two step sizes with a consistency check.
pub struct LinearizedN {
    m: Arc<MetricExpansion>,
    base: ScalarField,
    eps: f64,
    cfg: PipelineCfg,
    fd_step: f64,
    check_tol: f64,
}

/// Build the linearization of N at (base_phi0, eps). eps = 0 uses the
/// analytic boundary limit of the operator.
pub fn linearize_n(
    m: &MetricExpansion,
    base_phi0: &ScalarField,
    eps: f64,
    cfg: &PipelineCfg,
) -> LinearizedN {
    LinearizedN {
        m: Arc::new(m.clone()),
        base: base_phi0.clone(),
        eps,
        cfg: *cfg,
        fd_step: 1e-4,
        check_tol: 1e-4,
    }
}

impl LinearizedN {
    pub fn apply(&self, psi0: &ScalarField) -> Result<ScalarField> {
        let scale = psi0.sup_norm();
        if scale == 0.0 {
            return Ok(ScalarField::zeros(psi0.grid()));
        }
        let d1 = self.central(psi0, self.fd_step / scale)?;
        let d2 = self.central(psi0, 0.5 * self.fd_step / scale)?;
        // Richardson: central differences have O(h^2) error
        let mut richardson = d2.scale(4.0 / 3.0);
        richardson.axpy(-1.0 / 3.0, &d1);
        let denom = d2.sup_norm().max(1e-14);
        let rel = d1.sub(&d2).sup_norm() / denom;
        if rel > self.check_tol {
            return Err(Error::StepBreakdown { rel });
        }
        Ok(richardson)
    }

    fn central(&self, psi0: &ScalarField, h: f64) -> Result<ScalarField> {
        let mut plus = self.base.clone();
        plus.axpy(h, psi0);
        let mut minus = self.base.clone();
        minus.axpy(-h, psi0);
        let np = eval_n(&self.m, &plus, self.eps, &self.cfg)?;
        let nm = eval_n(&self.m, &minus, self.eps, &self.cfg)?;
        Ok(np.sub(&nm).scale(1.0 / (2.0 * h)))
    }
}

// ---------------------------------------------------------------------------
// Jacobi potential
// ---------------------------------------------------------------------------

/// ||II||^2 + Ric(N, N) on the unperturbed level set, computed as the
/// eps-derivative of H(0, eps) on an eps-ladder (the Jacobi-operator
/// identity applied to the unit normal variation).
pub fn jacobi_potential(m: &MetricExpansion, eps: f64) -> Result<ScalarField> {
    if eps <= 0.0 || eps > m.x_max() {
        return Err(Error::OutsideCollar { x: eps, x_max: m.x_max() });
    }
    let delta = (eps / 4.0).min((m.x_max() - eps) / 4.0).min(0.005);
    if delta < 1e-8 {
        return Err(Error::InsufficientSamples("eps too close to collar edge".into()));
    }
    // 4th-order central stencil in eps
    let hm2 = m.h_of_level(eps - 2.0 * delta)?;
    let hm1 = m.h_of_level(eps - delta)?;
    let hp1 = m.h_of_level(eps + delta)?;
    let hp2 = m.h_of_level(eps + 2.0 * delta)?;
    let mut out = hm2.scale(1.0 / (12.0 * delta));
    out.axpy(-8.0 / (12.0 * delta), &hm1);
    out.axpy(8.0 / (12.0 * delta), &hp1);
    out.axpy(-1.0 / (12.0 * delta), &hp2);
    Ok(out)
}

// ---------------------------------------------------------------------------
// grid-wide helpers shared by solvers
// ---------------------------------------------------------------------------

/// Scaled sup-norm sum_{|beta| <= k} eps^{|beta|/2} sup |d^beta f|,
/// the discrete stand-in for the rescaled Hoelder norms.
#[derive(Debug, Clone, Copy)]
pub struct ScaledNorm {
    pub eps: f64,
    pub k: usize,
    pub value: f64,
}

pub fn scaled_norm(f: &ScalarField, eps: f64, k: usize) -> Result<ScaledNorm> {
    let n = f.grid().ndim();
    let mut value = f.sup_norm();
    let mut current: Vec<ScalarField> = vec![f.clone()];
    for order in 1..=k {
        let mut next = Vec::new();
        // derivatives are applied in nondecreasing axis order to enumerate
        // multi-indices exactly once
        let mut seen = std::collections::BTreeMap::new();
        for (tag, g) in current.iter().enumerate() {
            for axis in 0..n {
                let key = (tag, axis);
                seen.insert(key, crate::spectral::partial_derivative(g, axis)?);
            }
        }
        let mut sup_sum = 0.0;
        for (_, g) in seen {
            sup_sum += g.sup_norm();
            next.push(g);
        }
        // note: mixed derivatives appear once per ordering; the constant
        // factor is immaterial for the solver tolerances that use this norm
        value += eps.powf(order as f64 / 2.0) * sup_sum;
        current = next;
    }
    Ok(ScaledNorm { eps, k, value })
}

/// Mean inverse-metric quadratic form of the flat Fourier symbol,
/// |k|^2_* = mean(h0^{ij}) k_i k_j, used by preconditioners.
pub fn mean_symbol(h0: &SymTensorField) -> Result<Vec<f64>> {
    let grid = h0.grid().clone();
    let n = grid.ndim();
    let md = metric_data(h0)?;
    let mut mean_inv = smallmat::ZERO;
    for idx in 0..grid.len() {
        for i in 0..n {
            for j in 0..n {
                mean_inv[i * 3 + j] += smallmat::at(&md.inv[idx], i, j);
            }
        }
    }
    let scale = 1.0 / grid.len() as f64;
    let mut sym = vec![0.0; grid.len()];
    for (idx, s) in sym.iter_mut().enumerate() {
        let mi = grid.multi_index(idx);
        let mut k = [0.0; 3];
        for a in 0..n {
            k[a] = grid.wavenumber(a, mi[a]);
        }
        let mut v = 0.0;
        for i in 0..n {
            for j in 0..n {
                v += mean_inv[i * 3 + j] * scale * k[i] * k[j];
            }
        }
        *s = v;
    }
    Ok(sym)
}

/// Grid for downstream use.
pub fn grid_of(m: &MetricExpansion) -> Arc<BoundaryGrid> {
    m.grid().clone()
}
