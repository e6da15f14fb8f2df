//! Hamilton-Jacobi extension of boundary conformal factors into the collar.
//!
//! For the normal-form metric dx^2 + h(x) the special-bdf equation
//! -2 d_x phi = x |grad phi|^2 is quadratic in p = d_x phi; the branch
//! regular at x = 0 is p = -x G / (1 + sqrt(1 - x^2 G)) with
//! G = |grad^{h(x)} phi|^2. `extend` marches this in x with RK4;
//! `characteristics_oracle` solves the Hamiltonian system of the same
//! equation characteristic-by-characteristic as an independent check.

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::BoundaryGrid;
use crate::metric::MetricExpansion;
use crate::ops::coordinate_gradient;
use crate::smallmat::{self, Mat};
use crate::spectral::SpectralSampler;
use rayon::prelude::*;
use std::sync::Arc;

/// The extension phi(x, y) sampled on a uniform x-ladder, together with
/// its x-derivative p = d_x phi from the defining branch.
#[derive(Debug, Clone)]
pub struct ExtendedFactor {
    grid: Arc<BoundaryGrid>,
    xs: Vec<f64>,
    phi: Vec<ScalarField>,
    p: Vec<ScalarField>,
}

/// Pointwise inverse metric of h(x) over the grid.
pub(crate) fn inverse_metric_at(m: &MetricExpansion, x: f64) -> Result<Vec<Mat>> {
    let n = m.ndim();
    (0..m.grid().len())
        .map(|idx| {
            let h = m.h_point(idx, x);
            smallmat::inverse(n, &h).ok_or(Error::SingularMetric { point: idx })
        })
        .collect()
}

/// G = h^{ij}(x) d_i phi d_j phi from a precomputed coordinate gradient.
fn grad_norm_sq(n: usize, dphi: &VectorField, hinv: &[Mat]) -> ScalarField {
    let grid = dphi.grid().clone();
    let mut out = ScalarField::zeros(&grid);
    for idx in 0..grid.len() {
        let d = dphi.at(idx);
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += smallmat::at(&hinv[idx], i, j) * d[i] * d[j];
            }
        }
        out.data_mut()[idx] = s;
    }
    out
}

/// Stable evaluation of the regular branch p = (-1 + sqrt(1 - x^2 G)) / x.
#[inline]
pub(crate) fn branch_p(x: f64, g: f64) -> Result<f64> {
    let u = x * x * g;
    if u >= 1.0 {
        return Err(Error::DiscriminantFailure { x });
    }
    Ok(-x * g / (1.0 + (1.0 - u).sqrt()))
}

/// One evaluation of d_x phi over the grid at collar depth x.
fn march_rhs(m: &MetricExpansion, x: f64, phi: &ScalarField) -> Result<ScalarField> {
    let n = m.ndim();
    let dphi = coordinate_gradient(phi)?;
    let hinv = inverse_metric_at(m, x)?;
    let g = grad_norm_sq(n, &dphi, &hinv);
    let mut out = ScalarField::zeros(phi.grid());
    for idx in 0..phi.grid().len() {
        out.data_mut()[idx] = branch_p(x, g.data()[idx])?;
    }
    Ok(out)
}

/// March the special-bdf equation from phi(0,.) = phi0 to x_eval with a
/// classical 4th-order step on a uniform ladder of `steps` intervals.
pub fn extend(
    phi0: &ScalarField,
    m: &MetricExpansion,
    x_eval: f64,
    steps: usize,
) -> Result<ExtendedFactor> {
    extend_with(phi0, m, x_eval, steps, false)
}

/// `extend` with the optional 2/3-rule dealiasing filter applied to the
/// marched state after every step.
pub fn extend_with(
    phi0: &ScalarField,
    m: &MetricExpansion,
    x_eval: f64,
    steps: usize,
    dealias: bool,
) -> Result<ExtendedFactor> {
    if !phi0.is_finite() {
        return Err(Error::NonFinite("extend"));
    }
    if x_eval <= 0.0 || x_eval > m.x_max() {
        return Err(Error::OutsideCollar { x: x_eval, x_max: m.x_max() });
    }
    if steps < 32 {
        return Err(Error::Validation(format!("steps = {steps} < 32")));
    }
    let grid = phi0.grid().clone();
    let dx = x_eval / steps as f64;
    let mut xs = Vec::with_capacity(steps + 1);
    let mut phis = Vec::with_capacity(steps + 1);
    let mut ps = Vec::with_capacity(steps + 1);

    let mut phi = phi0.clone();
    for k in 0..=steps {
        let x = k as f64 * dx;
        xs.push(x);
        let p_here = march_rhs(m, x, &phi)?;
        phis.push(phi.clone());
        ps.push(p_here.clone());
        if k == steps {
            break;
        }
        let k1 = p_here;
        let mut s2 = phi.clone();
        s2.axpy(0.5 * dx, &k1);
        let k2 = march_rhs(m, x + 0.5 * dx, &s2)?;
        let mut s3 = phi.clone();
        s3.axpy(0.5 * dx, &k2);
        let k3 = march_rhs(m, x + 0.5 * dx, &s3)?;
        let mut s4 = phi.clone();
        s4.axpy(dx, &k3);
        let k4 = march_rhs(m, x + dx, &s4)?;
        phi.axpy(dx / 6.0, &k1);
        phi.axpy(dx / 3.0, &k2);
        phi.axpy(dx / 3.0, &k3);
        phi.axpy(dx / 6.0, &k4);
        if dealias {
            phi = crate::spectral::dealias_two_thirds(&phi);
        }
    }
    Ok(ExtendedFactor { grid, xs, phi: phis, p: ps })
}

impl ExtendedFactor {
    pub fn grid(&self) -> &Arc<BoundaryGrid> {
        &self.grid
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn x_top(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    pub fn boundary_data(&self) -> &ScalarField {
        &self.phi[0]
    }

    pub fn phi_node(&self, k: usize) -> &ScalarField {
        &self.phi[k]
    }

    pub fn p_node(&self, k: usize) -> &ScalarField {
        &self.p[k]
    }

    pub fn n_nodes(&self) -> usize {
        self.xs.len()
    }

    /// 6-point Lagrange stencil (start index and weights) for a query x.
    pub(crate) fn stencil(&self, x: f64) -> (usize, [f64; 6]) {
        lagrange_stencil(&self.xs, x)
    }

    /// Interpolate phi at (x, y_idx).
    pub fn phi_at(&self, idx: usize, x: f64) -> f64 {
        let (i0, w) = self.stencil(x);
        (0..6).map(|k| w[k] * self.phi[i0 + k].data()[idx]).sum()
    }

    /// Interpolate p = d_x phi at (x, y_idx).
    pub fn p_at(&self, idx: usize, x: f64) -> f64 {
        let (i0, w) = self.stencil(x);
        (0..6).map(|k| w[k] * self.p[i0 + k].data()[idx]).sum()
    }

    /// Pointwise residual of the special-bdf identity |d log(e^phi x)|^2 = 1,
    /// with d_x phi taken from ladder finite differences so the check is
    /// independent of the branch formula used by the march.
    pub fn special_bdf_residual(&self, m: &MetricExpansion) -> Result<f64> {
        let n = self.grid.ndim();
        let steps = self.xs.len() - 1;
        if steps < 8 {
            return Err(Error::InsufficientSamples("ladder too short".into()));
        }
        let dx = self.xs[1] - self.xs[0];
        let mut worst: f64 = 0.0;
        for k in 2..steps.saturating_sub(2) {
            let x = self.xs[k];
            // 4th-order centered FD of phi in x
            let mut p_fd = self.phi[k - 2].scale(1.0 / (12.0 * dx));
            p_fd.axpy(-8.0 / (12.0 * dx), &self.phi[k - 1]);
            p_fd.axpy(8.0 / (12.0 * dx), &self.phi[k + 1]);
            p_fd.axpy(-1.0 / (12.0 * dx), &self.phi[k + 2]);
            let dphi = coordinate_gradient(&self.phi[k])?;
            let hinv = inverse_metric_at(m, x)?;
            let g = grad_norm_sq(n, &dphi, &hinv);
            for idx in 0..self.grid.len() {
                let lhs = (1.0 + x * p_fd.data()[idx]).powi(2) + x * x * g.data()[idx];
                worst = worst.max((lhs - 1.0).abs());
            }
        }
        Ok(worst)
    }
}

impl ExtendedFactor {
    /// Single-file serialization: one JSON header line (grid and ladder)
    /// followed by one little-endian f64 blob per ladder node (phi values,
    /// then the stored d_x phi values).
    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        use std::io::Write;
        #[derive(serde::Serialize)]
        struct Header<'a> {
            dims: &'a [usize],
            periods: &'a [f64],
            xs: &'a [f64],
        }
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(
            &mut w,
            &Header { dims: self.grid.dims(), periods: self.grid.periods(), xs: &self.xs },
        )?;
        w.write_all(b"\n")?;
        for f in self.phi.iter().chain(self.p.iter()) {
            crate::field::write_blob(&mut w, f.data())?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        use std::io::BufRead;
        #[derive(serde::Deserialize)]
        struct Header {
            dims: Vec<usize>,
            periods: Vec<f64>,
            xs: Vec<f64>,
        }
        let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut line = String::new();
        r.read_line(&mut line)?;
        let header: Header = serde_json::from_str(line.trim_end())?;
        let grid = crate::grid::BoundaryGrid::new(header.dims, header.periods)?;
        let n_nodes = header.xs.len();
        let mut phi = Vec::with_capacity(n_nodes);
        let mut p = Vec::with_capacity(n_nodes);
        for _ in 0..n_nodes {
            phi.push(ScalarField::from_data(&grid, crate::field::read_blob(&mut r, grid.len())?)?);
        }
        for _ in 0..n_nodes {
            p.push(ScalarField::from_data(&grid, crate::field::read_blob(&mut r, grid.len())?)?);
        }
        Ok(Self { grid, xs: header.xs, phi, p })
    }
}

/// 6-point Lagrange interpolation stencil on a uniform ascending ladder.
pub(crate) fn lagrange_stencil(xs: &[f64], x: f64) -> (usize, [f64; 6]) {
    let n = xs.len();
    debug_assert!(n >= 6);
    let dx = xs[1] - xs[0];
    let pos = ((x - xs[0]) / dx).floor() as isize - 2;
    let i0 = pos.clamp(0, n as isize - 6) as usize;
    let mut w = [0.0; 6];
    for j in 0..6 {
        let mut num = 1.0;
        let mut den = 1.0;
        for k in 0..6 {
            if k != j {
                num *= x - xs[i0 + k];
                den *= xs[i0 + j] - xs[i0 + k];
            }
        }
        w[j] = num / den;
    }
    (i0, w)
}

// ---------------------------------------------------------------------------
// Level sets {x e^phi = eps}
// ---------------------------------------------------------------------------

/// A located hypersurface x_star(y) e^{phi(x_star(y), y)} = eps.
#[derive(Debug, Clone)]
pub struct LevelSet {
    pub eps: f64,
    pub x_star: ScalarField,
}

/// Per-point safeguarded Newton (bisection fallback) on x e^{phi(x,y)} = eps.
pub fn locate_level_set(ef: &ExtendedFactor, eps: f64) -> Result<LevelSet> {
    if eps <= 0.0 {
        return Err(Error::Validation("eps must be positive".into()));
    }
    let grid = ef.grid().clone();
    let x_top = ef.x_top();
    let mut x_star = ScalarField::zeros(&grid);
    for idx in 0..grid.len() {
        let r = |x: f64| x * ef.phi_at(idx, x).exp() - eps;
        // bracket: r(0) = -eps < 0; scan ladder nodes for a sign change
        let mut lo = 0.0;
        let mut hi = f64::NAN;
        for k in 1..ef.n_nodes() {
            let x = ef.xs()[k];
            if r(x) >= 0.0 {
                hi = x;
                break;
            }
            lo = x;
        }
        if !hi.is_finite() {
            return Err(Error::NoBracket { eps, x_top });
        }
        let mut x = 0.5 * (lo + hi);
        let mut converged = false;
        for _ in 0..80 {
            let rv = r(x);
            if rv.abs() < 0.5e-12 * eps {
                converged = true;
                break;
            }
            if rv > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let phi = ef.phi_at(idx, x);
            let drdx = phi.exp() * (1.0 + x * ef.p_at(idx, x));
            let mut next = x - rv / drdx;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            x = next;
        }
        if !converged && r(x).abs() >= 1e-12 * eps {
            return Err(Error::NewtonDiverged { residual: r(x).abs(), iters: 80 });
        }
        x_star.data_mut()[idx] = x;
    }
    Ok(LevelSet { eps, x_star })
}

// ---------------------------------------------------------------------------
// Characteristics oracle
// ---------------------------------------------------------------------------

struct MetricSampler {
    n: usize,
    // samplers for every independent component of every polynomial / model
    // coefficient of h(x), ordered like the expansion
    comp: Vec<Vec<SpectralSampler>>, // [term][triangle comp]
    powers: Vec<TermPower>,
}

enum TermPower {
    Warp(crate::metric::ModelKind), // f(x)^2 applied to term 0
    Poly(usize),
}

impl MetricSampler {
    fn new(m: &MetricExpansion) -> Self {
        let n = m.ndim();
        let tri = crate::field::tri_len(n);
        let mut comp = Vec::new();
        let mut powers = Vec::new();
        let push_term = |t: &crate::field::SymTensorField, p: TermPower, comp: &mut Vec<Vec<SpectralSampler>>, powers: &mut Vec<TermPower>| {
            let mut per = Vec::with_capacity(tri);
            for i in 0..n {
                for j in i..n {
                    per.push(SpectralSampler::new(&t.component(i, j)));
                }
            }
            comp.push(per);
            powers.push(p);
        };
        match m.model_kind() {
            Some(kind) => {
                push_term(m.h0(), TermPower::Warp(kind), &mut comp, &mut powers);
                for (p, t) in m.extra_terms() {
                    push_term(t, TermPower::Poly(*p), &mut comp, &mut powers);
                }
            }
            None => {
                for (j, c) in m.coefficients().iter().enumerate() {
                    push_term(c, TermPower::Poly(j), &mut comp, &mut powers);
                }
            }
        }
        Self { n, comp, powers }
    }

    /// h, d_x h and d_{y_c} h at an arbitrary point of the collar.
    fn eval(&self, x: f64, y: &[f64]) -> (Mat, Mat, Vec<Mat>) {
        let n = self.n;
        let mut h = smallmat::ZERO;
        let mut dxh = smallmat::ZERO;
        let mut dyh = vec![smallmat::ZERO; n];
        for (term, samplers) in self.comp.iter().enumerate() {
            let (w, dw) = match &self.powers[term] {
                TermPower::Warp(kind) => {
                    let (f2, df2, _) = kind_warp(kind, n, x);
                    (f2, df2)
                }
                TermPower::Poly(p) => {
                    let w = x.powi(*p as i32);
                    let dw = if *p == 0 { 0.0 } else { *p as f64 * x.powi(*p as i32 - 1) };
                    (w, dw)
                }
            };
            let mut c = 0;
            for i in 0..n {
                for j in i..n {
                    let (v, g) = samplers[c].eval_with_grad(y);
                    c += 1;
                    for (mat, scale) in [(&mut h, w), (&mut dxh, dw)] {
                        mat[i * 3 + j] += scale * v;
                        if i != j {
                            mat[j * 3 + i] += scale * v;
                        }
                    }
                    for a in 0..n {
                        dyh[a][i * 3 + j] += w * g[a];
                        if i != j {
                            dyh[a][j * 3 + i] += w * g[a];
                        }
                    }
                }
            }
        }
        (h, dxh, dyh)
    }
}

fn kind_warp(kind: &crate::metric::ModelKind, n: usize, x: f64) -> (f64, f64, f64) {
    kind.warp_sq_public(n, x)
}

/// Independent solve of the special-bdf equation by the method of
/// characteristics: integrates the Hamiltonian system per launch point and
/// interpolates the characteristic fan back to the grid. Used as a
/// cross-validation oracle for `extend`; intended for modest grids.
pub fn characteristics_oracle(
    phi0: &ScalarField,
    m: &MetricExpansion,
    x_eval: f64,
    steps: usize,
) -> Result<ExtendedFactor> {
    if x_eval <= 0.0 || x_eval > m.x_max() {
        return Err(Error::OutsideCollar { x: x_eval, x_max: m.x_max() });
    }
    if steps < 32 {
        return Err(Error::Validation(format!("steps = {steps} < 32")));
    }
    let grid = phi0.grid().clone();
    let n = grid.ndim();
    let npts = grid.len();
    let dx = x_eval / steps as f64;
    let sampler = MetricSampler::new(m);
    let dphi0 = coordinate_gradient(phi0)?;

    // state per characteristic: y[n], p, q[n], phi
    #[derive(Clone)]
    struct CharState {
        y: [f64; 3],
        p: f64,
        q: [f64; 3],
        phi: f64,
    }

    let deriv = |x: f64, st: &CharState| -> Result<CharState> {
        let (h, dxh, dyh) = sampler.eval(x, &st.y[..n]);
        let hinv = smallmat::inverse(n, &h).ok_or(Error::SingularMetric { point: 0 })?;
        // q-norm and inverse-metric derivative contractions
        let mut qq = 0.0;
        for i in 0..n {
            for j in 0..n {
                qq += smallmat::at(&hinv, i, j) * st.q[i] * st.q[j];
            }
        }
        // d_x h^{ij} = -(hinv dxh hinv); contract with q q
        let tmp = smallmat::mul(n, &hinv, &smallmat::mul(n, &dxh, &hinv));
        let mut dx_qq = 0.0;
        for i in 0..n {
            for j in 0..n {
                dx_qq -= smallmat::at(&tmp, i, j) * st.q[i] * st.q[j];
            }
        }
        let fp = 1.0 + x * st.p;
        if fp <= 1e-10 {
            return Err(Error::CharacteristicCrossing { x });
        }
        let mut d = CharState { y: [0.0; 3], p: 0.0, q: [0.0; 3], phi: 0.0 };
        for a in 0..n {
            let mut ha_q = 0.0;
            for j in 0..n {
                ha_q += smallmat::at(&hinv, a, j) * st.q[j];
            }
            d.y[a] = x * ha_q / fp;
        }
        d.p = -(0.5 * (st.p * st.p + qq) + 0.5 * x * dx_qq) / fp;
        for c in 0..n {
            let tmp_c = smallmat::mul(n, &hinv, &smallmat::mul(n, &dyh[c], &hinv));
            let mut dy_qq = 0.0;
            for i in 0..n {
                for j in 0..n {
                    dy_qq -= smallmat::at(&tmp_c, i, j) * st.q[i] * st.q[j];
                }
            }
            d.q[c] = -0.5 * x * dy_qq / fp;
        }
        d.phi = st.p + x * qq / fp;
        Ok(d)
    };

    // integrate all characteristics, storing (y, phi) per ladder node
    let trajectories: Vec<Result<Vec<([f64; 3], f64)>>> = (0..npts)
        .into_par_iter()
        .map(|idx| {
            let y0 = grid.point(idx);
            let mut st = CharState { y: y0, p: 0.0, q: [0.0; 3], phi: phi0.data()[idx] };
            for a in 0..n {
                st.q[a] = dphi0.comp(idx, a);
            }
            let mut traj = Vec::with_capacity(steps + 1);
            traj.push((st.y, st.phi));
            for k in 0..steps {
                let x = k as f64 * dx;
                let k1 = deriv(x, &st)?;
                let mut s2 = st.clone();
                add_state(&mut s2, &k1, 0.5 * dx, n);
                let k2 = deriv(x + 0.5 * dx, &s2)?;
                let mut s3 = st.clone();
                add_state(&mut s3, &k2, 0.5 * dx, n);
                let k3 = deriv(x + 0.5 * dx, &s3)?;
                let mut s4 = st.clone();
                add_state(&mut s4, &k3, dx, n);
                let k4 = deriv(x + dx, &s4)?;
                add_state(&mut st, &k1, dx / 6.0, n);
                add_state(&mut st, &k2, dx / 3.0, n);
                add_state(&mut st, &k3, dx / 3.0, n);
                add_state(&mut st, &k4, dx / 6.0, n);
                traj.push((st.y, st.phi));
            }
            Ok(traj)
        })
        .collect();
    let mut fan_y: Vec<Vec<[f64; 3]>> = vec![Vec::with_capacity(npts); steps + 1];
    let mut fan_phi: Vec<Vec<f64>> = vec![Vec::with_capacity(npts); steps + 1];
    for traj in trajectories {
        let traj = traj?;
        for (k, (y, phi)) in traj.into_iter().enumerate() {
            fan_y[k].push(y);
            fan_phi[k].push(phi);
        }
    }

    #[allow(clippy::needless_range_loop)]
    fn add_state(st: &mut CharState, d: &CharState, w: f64, n: usize) {
        for a in 0..n {
            st.y[a] += w * d.y[a];
            st.q[a] += w * d.q[a];
        }
        st.p += w * d.p;
        st.phi += w * d.phi;
    }

    // invert the fan back onto the grid at every node
    let mut xs = Vec::with_capacity(steps + 1);
    let mut phis = Vec::with_capacity(steps + 1);
    let mut ps = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let x = k as f64 * dx;
        xs.push(x);
        let phi_k = if k == 0 {
            phi0.clone()
        } else {
            // displacement fields delta_a(eta) = y_a(x; eta) - eta_a
            let mut delta_fields = Vec::with_capacity(n);
            for a in 0..n {
                let mut f = ScalarField::zeros(&grid);
                for idx in 0..npts {
                    f.data_mut()[idx] = fan_y[k][idx][a] - grid.point(idx)[a];
                }
                delta_fields.push(SpectralSampler::new(&f));
            }
            let phi_fan = {
                let f = ScalarField::from_data(&grid, fan_phi[k].clone())?;
                SpectralSampler::new(&f)
            };
            let values: Vec<Result<f64>> = (0..npts)
                .into_par_iter()
                .map(|idx| {
                    let target = grid.point(idx);
                    // fixed point eta = target - delta(eta)
                    let mut eta = target;
                    let mut ok = false;
                    for _ in 0..50 {
                        let mut next = target;
                        let mut moved: f64 = 0.0;
                        for a in 0..n {
                            next[a] = target[a] - delta_fields[a].eval(&eta[..n]);
                        }
                        for a in 0..n {
                            moved = moved.max((next[a] - eta[a]).abs());
                        }
                        eta = next;
                        if moved < 1e-14 {
                            ok = true;
                            break;
                        }
                    }
                    if !ok {
                        return Err(Error::CharacteristicCrossing { x });
                    }
                    Ok(phi_fan.eval(&eta[..n]))
                })
                .collect();
            let mut out = ScalarField::zeros(&grid);
            for (idx, v) in values.into_iter().enumerate() {
                out.data_mut()[idx] = v?;
            }
            out
        };
        let p_k = march_rhs(m, x, &phi_k)?;
        phis.push(phi_k);
        ps.push(p_k);
    }

    Ok(ExtendedFactor { grid, xs, phi: phis, p: ps })
}
