//! The ambient metric in normal form dx^2 + h(x) over the collar, stored
//! through its boundary expansion h(x) = h0 + h1 x + h2 x^2 + ... or an
//! exact closed-form family, plus the invariants kappa_1, kappa_2.

use crate::curvature::schouten;
use crate::error::{Error, Result};
use crate::field::{ScalarField, SymTensorField};
use crate::grid::BoundaryGrid;
use crate::ops::tensor_norms;
use crate::smallmat::{self, Mat};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Built-in closed-form collar families h(x) = f(x)^2 h0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// f = 1 - x^2/4: geodesic-sphere foliation of hyperbolic space.
    HyperbolicBall,
    /// f = 1 + x^2/4: equidistants in the warped product cosh^2 collar.
    Fuchsian,
    /// f = 1: horospherical collar, all principal curvatures 1.
    Horospherical,
    /// h(x) = e^{2 s x / n} h0 with s = kappa1 = +-1; the canonical
    /// nonvanishing-kappa1 test family.
    ExponentialCollar { kappa1: i8 },
}

impl ModelKind {
    pub fn name(&self) -> String {
        match self {
            ModelKind::HyperbolicBall => "hyperbolic_ball".into(),
            ModelKind::Fuchsian => "fuchsian".into(),
            ModelKind::Horospherical => "horospherical".into(),
            ModelKind::ExponentialCollar { kappa1 } => {
                if *kappa1 > 0 {
                    "exponential_collar_reflected".into()
                } else {
                    "exponential_collar".into()
                }
            }
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "hyperbolic_ball" => Some(Self::HyperbolicBall),
            "fuchsian" => Some(Self::Fuchsian),
            "horospherical" => Some(Self::Horospherical),
            "exponential_collar" => Some(Self::ExponentialCollar { kappa1: -1 }),
            "exponential_collar_reflected" => Some(Self::ExponentialCollar { kappa1: 1 }),
            _ => None,
        }
    }

    /// Warp-square f(x)^2 and its first two x-derivatives (n = boundary dim).
    pub(crate) fn warp_sq_public(&self, n: usize, x: f64) -> (f64, f64, f64) {
        self.warp_sq(n, x)
    }

    fn warp_sq(&self, n: usize, x: f64) -> (f64, f64, f64) {
        match self {
            ModelKind::HyperbolicBall => {
                let f = 1.0 - 0.25 * x * x;
                (f * f, -x * f, -1.0 + 0.75 * x * x)
            }
            ModelKind::Fuchsian => {
                let f = 1.0 + 0.25 * x * x;
                (f * f, x * f, 1.0 + 0.75 * x * x)
            }
            ModelKind::Horospherical => (1.0, 0.0, 0.0),
            ModelKind::ExponentialCollar { kappa1 } => {
                let a = 2.0 * *kappa1 as f64 / n as f64;
                let e = (a * x).exp();
                (e, a * e, a * a * e)
            }
        }
    }

    /// Taylor coefficient of f(x)^2 at order j.
    fn warp_sq_taylor(&self, n: usize, j: usize) -> f64 {
        match self {
            ModelKind::HyperbolicBall => match j {
                0 => 1.0,
                2 => -0.5,
                4 => 1.0 / 16.0,
                _ => 0.0,
            },
            ModelKind::Fuchsian => match j {
                0 => 1.0,
                2 => 0.5,
                4 => 1.0 / 16.0,
                _ => 0.0,
            },
            ModelKind::Horospherical => {
                if j == 0 {
                    1.0
                } else {
                    0.0
                }
            }
            ModelKind::ExponentialCollar { kappa1 } => {
                let a = 2.0 * *kappa1 as f64 / n as f64;
                let mut c = 1.0;
                for i in 1..=j {
                    c *= a / i as f64;
                }
                c
            }
        }
    }

    /// Largest collar depth on which the closed form stays a metric.
    pub fn max_collar(&self) -> f64 {
        match self {
            ModelKind::HyperbolicBall => 2.0,
            _ => f64::INFINITY,
        }
    }

    /// Constant kappa values of the model (kappa1, kappa2) on a flat torus.
    pub fn kappa_constants(&self, n: usize) -> (f64, f64) {
        match self {
            ModelKind::HyperbolicBall => (0.0, -(n as f64) / 2.0),
            ModelKind::Fuchsian => (0.0, n as f64 / 2.0),
            ModelKind::Horospherical => (0.0, 0.0),
            ModelKind::ExponentialCollar { kappa1 } => (*kappa1 as f64, 0.0),
        }
    }
}

/// The kappa invariants of the expansion: kappa1 = tr(h1)/2 and
/// kappa2 = tr(h2) - |h1|^2/2 (traces and norms w.r.t. h0).
#[derive(Debug, Clone)]
pub struct KappaPair {
    pub kappa1: ScalarField,
    pub kappa2: ScalarField,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaSign {
    Zero,
    Positive,
    Negative,
    Mixed,
}

impl KappaPair {
    pub fn kappa1_sign(&self, tol: f64) -> KappaSign {
        let min = self.kappa1.min();
        let max = self.kappa1.max();
        if max.abs() <= tol && min.abs() <= tol {
            KappaSign::Zero
        } else if min > tol {
            KappaSign::Positive
        } else if max < -tol {
            KappaSign::Negative
        } else {
            KappaSign::Mixed
        }
    }
}

/// Ambient metric in normal form. Closed-form models evaluate exactly;
/// otherwise the truncated polynomial in x is used. Either way the stored
/// coefficients h0, h1, h2 agree with the Taylor expansion at x = 0.
#[derive(Debug, Clone)]
pub struct MetricExpansion {
    grid: Arc<BoundaryGrid>,
    coeffs: Vec<SymTensorField>, // h0, h1, h2, then any stored higher terms
    model: Option<ModelKind>,
    extra: Vec<(usize, SymTensorField)>, // polynomial terms on top of the model
    x_max: f64,
}

impl MetricExpansion {
    /// Truncated polynomial expansion from explicit coefficients
    /// (h0, h1, h2, optionally higher).
    pub fn truncated(coeffs: Vec<SymTensorField>, x_max: f64) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Validation("need at least h0".into()));
        }
        let grid = coeffs[0].grid().clone();
        let mut coeffs = coeffs;
        while coeffs.len() < 3 {
            coeffs.push(SymTensorField::zeros(&grid));
        }
        let m = Self { grid, coeffs, model: None, extra: Vec::new(), x_max };
        m.check_positivity()?;
        Ok(m)
    }

    /// Closed-form model over a boundary metric h0.
    pub fn model(kind: ModelKind, h0: SymTensorField, x_max: f64) -> Result<Self> {
        Self::model_with_terms(kind, h0, Vec::new(), x_max)
    }

    /// Closed-form model plus polynomial perturbation terms x^p t_p.
    pub fn model_with_terms(
        kind: ModelKind,
        h0: SymTensorField,
        extra: Vec<(usize, SymTensorField)>,
        x_max: f64,
    ) -> Result<Self> {
        let grid = h0.grid().clone();
        let n = grid.ndim();
        if x_max >= kind.max_collar() {
            return Err(Error::LossOfPositivity { x: kind.max_collar() });
        }
        let mut coeffs = Vec::with_capacity(3);
        for j in 0..3 {
            let mut c = h0.scale(kind.warp_sq_taylor(n, j));
            for (p, t) in &extra {
                if *p == j {
                    c.axpy(1.0, t);
                }
            }
            coeffs.push(c);
        }
        let m = Self { grid, coeffs, model: Some(kind), extra, x_max };
        m.check_positivity()?;
        Ok(m)
    }

    /// Weakly Poincare-Einstein data: h1 = 0, h2 = -schouten(h0). n >= 3.
    pub fn weakly_pe(h0: SymTensorField, x_max: f64) -> Result<Self> {
        let p = schouten(&h0)?;
        let grid = h0.grid().clone();
        let h1 = SymTensorField::zeros(&grid);
        Self::truncated(vec![h0, h1, p.scale(-1.0)], x_max)
    }

    fn check_positivity(&self) -> Result<()> {
        let n = self.grid.ndim();
        for k in 0..=32 {
            let x = self.x_max * k as f64 / 32.0;
            for idx in 0..self.grid.len() {
                let h = self.h_point(idx, x);
                if !smallmat::is_positive_definite(n, &h) {
                    return Err(Error::LossOfPositivity { x });
                }
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> &Arc<BoundaryGrid> {
        &self.grid
    }

    pub fn ndim(&self) -> usize {
        self.grid.ndim()
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn model_kind(&self) -> Option<ModelKind> {
        self.model
    }

    pub fn h0(&self) -> &SymTensorField {
        &self.coeffs[0]
    }

    pub fn h1(&self) -> &SymTensorField {
        &self.coeffs[1]
    }

    pub fn h2(&self) -> &SymTensorField {
        &self.coeffs[2]
    }

    /// All stored polynomial coefficients (h0, h1, h2, ...).
    pub fn coefficients(&self) -> &[SymTensorField] {
        &self.coeffs
    }

    /// Polynomial perturbation terms sitting on top of a closed-form model.
    pub fn extra_terms(&self) -> &[(usize, SymTensorField)] {
        &self.extra
    }

    fn guard_x(&self, x: f64) -> Result<()> {
        if x < 0.0 || x > self.x_max {
            return Err(Error::OutsideCollar { x, x_max: self.x_max });
        }
        Ok(())
    }

    /// h(x) at one grid point, as a packed small matrix.
    pub fn h_point(&self, idx: usize, x: f64) -> Mat {
        let n = self.grid.ndim();
        match self.model {
            Some(kind) => {
                let (f2, _, _) = kind.warp_sq(n, x);
                let mut m = smallmat::scale(n, &smallmat::from_tri(n, self.coeffs[0].tri(idx)), f2);
                // note coeffs[0] here is the model Taylor order 0 = h0 exactly
                for (p, t) in &self.extra {
                    let tm = smallmat::from_tri(n, t.tri(idx));
                    m = smallmat::add(n, &m, &smallmat::scale(n, &tm, x.powi(*p as i32)));
                }
                m
            }
            None => {
                let mut m = smallmat::ZERO;
                let mut xp = 1.0;
                for c in &self.coeffs {
                    let cm = smallmat::from_tri(n, c.tri(idx));
                    m = smallmat::add(n, &m, &smallmat::scale(n, &cm, xp));
                    xp *= x;
                }
                m
            }
        }
    }

    /// d/dx h(x) at one grid point.
    pub fn dxh_point(&self, idx: usize, x: f64) -> Mat {
        let n = self.grid.ndim();
        match self.model {
            Some(kind) => {
                let (_, df2, _) = kind.warp_sq(n, x);
                let mut m = smallmat::scale(n, &smallmat::from_tri(n, self.coeffs[0].tri(idx)), df2);
                for (p, t) in &self.extra {
                    if *p >= 1 {
                        let tm = smallmat::from_tri(n, t.tri(idx));
                        m = smallmat::add(
                            n,
                            &m,
                            &smallmat::scale(n, &tm, *p as f64 * x.powi(*p as i32 - 1)),
                        );
                    }
                }
                m
            }
            None => {
                let mut m = smallmat::ZERO;
                for (j, c) in self.coeffs.iter().enumerate().skip(1) {
                    let cm = smallmat::from_tri(n, c.tri(idx));
                    m = smallmat::add(n, &m, &smallmat::scale(n, &cm, j as f64 * x.powi(j as i32 - 1)));
                }
                m
            }
        }
    }

    /// d^2/dx^2 h(x) at one grid point.
    pub fn dx2h_point(&self, idx: usize, x: f64) -> Mat {
        let n = self.grid.ndim();
        match self.model {
            Some(kind) => {
                let (_, _, d2f2) = kind.warp_sq(n, x);
                let mut m = smallmat::scale(n, &smallmat::from_tri(n, self.coeffs[0].tri(idx)), d2f2);
                for (p, t) in &self.extra {
                    if *p >= 2 {
                        let tm = smallmat::from_tri(n, t.tri(idx));
                        let c = (*p as f64) * (*p as f64 - 1.0) * x.powi(*p as i32 - 2);
                        m = smallmat::add(n, &m, &smallmat::scale(n, &tm, c));
                    }
                }
                m
            }
            None => {
                let mut m = smallmat::ZERO;
                for (j, c) in self.coeffs.iter().enumerate().skip(2) {
                    let cm = smallmat::from_tri(n, c.tri(idx));
                    let f = j as f64 * (j as f64 - 1.0) * x.powi(j as i32 - 2);
                    m = smallmat::add(n, &m, &smallmat::scale(n, &cm, f));
                }
                m
            }
        }
    }

    /// h(x) as a tensor field.
    pub fn eval_h(&self, x: f64) -> Result<SymTensorField> {
        self.guard_x(x)?;
        let n = self.grid.ndim();
        let mut out = SymTensorField::zeros(&self.grid);
        let m = out.ncomp();
        for idx in 0..self.grid.len() {
            let hm = self.h_point(idx, x);
            if !smallmat::is_positive_definite(n, &hm) {
                return Err(Error::LossOfPositivity { x });
            }
            let mut packed = vec![0.0; m];
            smallmat::to_tri(n, &hm, &mut packed);
            out.data[idx * m..(idx + 1) * m].copy_from_slice(&packed);
        }
        Ok(out)
    }

    /// d/dx h(x) as a tensor field.
    pub fn eval_dxh(&self, x: f64) -> Result<SymTensorField> {
        self.guard_x(x)?;
        let n = self.grid.ndim();
        let mut out = SymTensorField::zeros(&self.grid);
        let m = out.ncomp();
        for idx in 0..self.grid.len() {
            let hm = self.dxh_point(idx, x);
            let mut packed = vec![0.0; m];
            smallmat::to_tri(n, &hm, &mut packed);
            out.data[idx * m..(idx + 1) * m].copy_from_slice(&packed);
        }
        Ok(out)
    }

    /// T(x) = tr^{h(x)} d_x h(x) / 2 at one point.
    pub fn t_point(&self, idx: usize, x: f64) -> f64 {
        let n = self.grid.ndim();
        let h = self.h_point(idx, x);
        let dh = self.dxh_point(idx, x);
        let hi = smallmat::inverse(n, &h).expect("metric positive on collar");
        0.5 * smallmat::trace(n, &smallmat::mul(n, &hi, &dh))
    }

    /// d/dx of t_point: T'(x) = tr(h^{-1} h'' - (h^{-1} h')^2) / 2.
    pub fn tprime_point(&self, idx: usize, x: f64) -> f64 {
        let n = self.grid.ndim();
        let h = self.h_point(idx, x);
        let dh = self.dxh_point(idx, x);
        let d2h = self.dx2h_point(idx, x);
        let hi = smallmat::inverse(n, &h).expect("metric positive on collar");
        let a = smallmat::mul(n, &hi, &d2h);
        let b = smallmat::mul(n, &hi, &dh);
        let b2 = smallmat::mul(n, &b, &b);
        0.5 * (smallmat::trace(n, &a) - smallmat::trace(n, &b2))
    }

    /// T(x) as a scalar field.
    pub fn t_field(&self, x: f64) -> Result<ScalarField> {
        self.guard_x(x)?;
        let mut out = ScalarField::zeros(&self.grid);
        for idx in 0..self.grid.len() {
            out.data_mut()[idx] = self.t_point(idx, x);
        }
        Ok(out)
    }

    /// Mean curvature field of the unperturbed level set {x = const}:
    /// H(0, x) = n - x T(x), evaluated exactly.
    pub fn h_of_level(&self, x: f64) -> Result<ScalarField> {
        let t = self.t_field(x)?;
        Ok(t.map(|v| self.grid.ndim() as f64 - x * v))
    }

    /// The kappa invariants from the stored coefficients.
    pub fn kappas(&self) -> Result<KappaPair> {
        let h0 = &self.coeffs[0];
        let (tr1, norm1) = tensor_norms(&self.coeffs[1], h0)?;
        let (tr2, _) = tensor_norms(&self.coeffs[2], h0)?;
        let kappa1 = tr1.scale(0.5);
        let kappa2 = tr2.zip_with(&norm1, |t, n| t - 0.5 * n);
        Ok(KappaPair { kappa1, kappa2 })
    }

    /// Conformal rescale of the boundary data only: rebuilds the expansion
    /// with h0 -> c^2 h0 keeping the same model (test helper).
    pub fn with_scaled_h0(&self, c: f64) -> Result<Self> {
        match self.model {
            Some(kind) => Self::model_with_terms(
                kind,
                self.coeffs[0].scale(c * c),
                self.extra.iter().map(|(p, t)| (*p, t.scale(c * c))).collect(),
                self.x_max,
            ),
            None => {
                Self::truncated(self.coeffs.iter().map(|f| f.scale(c * c)).collect(), self.x_max)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn flat_grid(n: usize, res: usize) -> Arc<BoundaryGrid> {
        BoundaryGrid::unit_torus(n, res).unwrap()
    }

    #[test]
    fn model_taylor_coefficients() {
        let grid = flat_grid(2, 8);
        let h0 = SymTensorField::identity(&grid);
        let m = MetricExpansion::model(ModelKind::HyperbolicBall, h0.clone(), 1.5).unwrap();
        assert!(m.h1().sup_norm() == 0.0);
        // h2 = -h0/2
        assert!(m.h2().sub(&h0.scale(-0.5)).sup_norm() < 1e-15);

        let f = MetricExpansion::model(ModelKind::Fuchsian, h0.clone(), 1.5).unwrap();
        assert!(f.h2().sub(&h0.scale(0.5)).sup_norm() < 1e-15);
    }

    #[test]
    fn model_eval_matches_warp() {
        let grid = flat_grid(2, 8);
        let h0 = SymTensorField::identity(&grid);
        let m = MetricExpansion::model(ModelKind::Fuchsian, h0, 1.5).unwrap();
        let h = m.eval_h(1.0).unwrap();
        let expect = (1.0f64 + 0.25).powi(2);
        assert_relative_eq!(h.get(0, 0, 0), expect, epsilon = 1e-15);
        assert_relative_eq!(h.get(0, 1, 1), expect, epsilon = 1e-15);
        assert!(h.get(0, 0, 1).abs() < 1e-15);
    }

    #[test]
    fn finite_difference_reproduces_h1_h2() {
        // FD of eval_h at x = 0 reproduces h1 and 2 h2 to 1e-8
        let grid = flat_grid(2, 8);
        let h0 = SymTensorField::identity(&grid);
        for kind in [
            ModelKind::HyperbolicBall,
            ModelKind::Fuchsian,
            ModelKind::Horospherical,
            ModelKind::ExponentialCollar { kappa1: -1 },
        ] {
            let m = MetricExpansion::model(kind, h0.clone(), 1.0).unwrap();
            let d = 1e-4;
            let hp = m.eval_h(d).unwrap();
            let hpp = m.eval_h(2.0 * d).unwrap();
            let h00 = m.eval_h(0.0).unwrap();
            // one-sided 2nd order: h'(0) ~ (-3 h0 + 4 h(d) - h(2d)) / (2d)
            let mut fd1 = h00.scale(-3.0);
            fd1.axpy(4.0, &hp);
            fd1.axpy(-1.0, &hpp);
            let fd1 = fd1.scale(1.0 / (2.0 * d));
            assert!(
                fd1.sub(m.h1()).sup_norm() < 1e-6,
                "{:?}: h1 fd dev {}",
                kind,
                fd1.sub(m.h1()).sup_norm()
            );
            // h''(0) ~ (h0 - 2h(d) + h(2d)) / d^2 = 2 h2
            let mut fd2 = h00.clone();
            fd2.axpy(-2.0, &hp);
            fd2.axpy(1.0, &hpp);
            let fd2 = fd2.scale(1.0 / (d * d));
            assert!(fd2.sub(&m.h2().scale(2.0)).sup_norm() < 1e-4, "{:?}", kind);
        }
    }

    #[test]
    fn kappa_values_of_models() {
        let grid = flat_grid(2, 8);
        let h0 = SymTensorField::identity(&grid);
        for (kind, k1, k2) in [
            (ModelKind::HyperbolicBall, 0.0, -1.0),
            (ModelKind::Fuchsian, 0.0, 1.0),
            (ModelKind::Horospherical, 0.0, 0.0),
            (ModelKind::ExponentialCollar { kappa1: -1 }, -1.0, 0.0),
            (ModelKind::ExponentialCollar { kappa1: 1 }, 1.0, 0.0),
        ] {
            let m = MetricExpansion::model(kind, h0.clone(), 1.0).unwrap();
            let k = m.kappas().unwrap();
            assert!((k.kappa1.mean() - k1).abs() < 1e-13, "{kind:?} kappa1");
            assert!((k.kappa2.mean() - k2).abs() < 1e-13, "{kind:?} kappa2");
            assert!(k.kappa1.sub(&ScalarField::constant(&grid, k1)).sup_norm() < 1e-13);
            assert!(k.kappa2.sub(&ScalarField::constant(&grid, k2)).sup_norm() < 1e-13);
            let (ek1, ek2) = kind.kappa_constants(2);
            assert_eq!((ek1, ek2), (k1, k2));
        }
    }

    #[test]
    fn weakly_pe_flat_is_horospherical() {
        let grid = BoundaryGrid::new(vec![8, 8, 8], vec![1.0, 1.0, 1.0]).unwrap();
        let h0 = SymTensorField::identity(&grid);
        let m = MetricExpansion::weakly_pe(h0, 1.0).unwrap();
        assert!(m.h1().sup_norm() < 1e-12);
        assert!(m.h2().sup_norm() < 1e-10);
    }

    #[test]
    fn weakly_pe_kappa2_is_scalar_curvature_combination() {
        // kappa2 = -R / (2(n-1)) pointwise for weakly PE data, n = 3
        let grid = BoundaryGrid::new(vec![24, 24, 24], vec![1.0, 1.0, 1.0]).unwrap();
        let u = ScalarField::from_fn(&grid, |y| {
            0.05 * (2.0 * std::f64::consts::PI * y[0]).sin()
                + 0.04 * (2.0 * std::f64::consts::PI * (y[1] - y[2])).cos()
        });
        let e2u = u.map(|v| (2.0 * v).exp());
        let mut h0 = SymTensorField::identity(&grid);
        for i in 0..3 {
            h0.set_component(i, i, &e2u);
        }
        let m = MetricExpansion::weakly_pe(h0.clone(), 0.3).unwrap();
        let k = m.kappas().unwrap();
        let (_, r) = crate::curvature::ricci_scalar(&h0).unwrap();
        let expect = r.scale(-1.0 / (2.0 * 2.0));
        let dev = k.kappa2.sub(&expect).sup_norm();
        assert!(dev < 1e-6, "dev {dev}");
    }

    #[test]
    fn exponential_collar_kappas_by_hand() {
        // Taylor-expanded by hand: tr h2 = 2/n, |h1|^2 = 4/n, kappa2 = 0
        for n in [2usize, 3] {
            let grid = flat_grid(n, 8);
            let h0 = SymTensorField::identity(&grid);
            let m =
                MetricExpansion::model(ModelKind::ExponentialCollar { kappa1: -1 }, h0, 1.0).unwrap();
            let k = m.kappas().unwrap();
            assert!((k.kappa1.mean() + 1.0).abs() < 1e-14);
            assert!(k.kappa2.sup_norm() < 1e-14);
        }
    }

    #[test]
    fn positivity_guard() {
        let grid = flat_grid(2, 8);
        let h0 = SymTensorField::identity(&grid);
        // hyperbolic ball degenerates at x = 2
        assert!(matches!(
            MetricExpansion::model(ModelKind::HyperbolicBall, h0, 2.5),
            Err(Error::LossOfPositivity { .. })
        ));
    }

    #[test]
    fn t_field_matches_models() {
        // T = n f'/f; H(0,x) = n - x T = n (f - x f')/f
        let grid = flat_grid(2, 8);
        let h0 = SymTensorField::identity(&grid);
        let m = MetricExpansion::model(ModelKind::HyperbolicBall, h0, 1.5).unwrap();
        let x = 0.8;
        let h = m.h_of_level(x).unwrap();
        let expect = 2.0 * (4.0 + x * x) / (4.0 - x * x);
        assert_relative_eq!(h.mean(), expect, epsilon = 1e-13);
        assert!(h.sub(&ScalarField::constant(&grid, expect)).sup_norm() < 1e-12);
    }
}
