//! Intrinsic curvature of a grid metric by direct Christoffel assembly
//! from spectral derivatives.

use crate::error::{Error, Result};
use crate::field::{ScalarField, SymTensorField};
use crate::ops::metric_data;
use crate::smallmat;
use crate::spectral::partial_derivative;

/// Christoffel symbols Gamma^k_{ij} of h, layout `gamma[k][i][j]` as
/// scalar fields (symmetric in i,j; full storage for direct indexing).
pub(crate) struct Christoffels {
    pub gamma: Vec<Vec<Vec<ScalarField>>>,
}

pub(crate) fn christoffels(h: &SymTensorField) -> Result<Christoffels> {
    let grid = h.grid().clone();
    let n = grid.ndim();
    let md = metric_data(h)?;

    // dh[c][(i,j)] = d_c h_{ij}
    let mut dh: Vec<Vec<ScalarField>> = Vec::with_capacity(n);
    for c in 0..n {
        let mut per_comp: Vec<ScalarField> = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                if j < i {
                    per_comp.push(per_comp[j * n + i].clone());
                } else {
                    per_comp.push(partial_derivative(&h.component(i, j), c)?);
                }
            }
        }
        dh.push(per_comp);
    }

    let zero = ScalarField::zeros(&grid);
    let mut gamma = vec![vec![vec![zero; n]; n]; n];
    for k in 0..n {
        for i in 0..n {
            for j in i..n {
                let mut out = ScalarField::zeros(&grid);
                for idx in 0..grid.len() {
                    let hi = &md.inv[idx];
                    let mut s = 0.0;
                    for l in 0..n {
                        s += smallmat::at(hi, k, l)
                            * (dh[i][j * n + l].data()[idx] + dh[j][i * n + l].data()[idx]
                                - dh[l][i * n + j].data()[idx]);
                    }
                    out.data_mut()[idx] = 0.5 * s;
                }
                gamma[k][i][j] = out.clone();
                gamma[k][j][i] = out;
            }
        }
    }
    Ok(Christoffels { gamma })
}

/// Ricci tensor and scalar curvature of h:
/// R_{ij} = d_k Gamma^k_{ij} - d_i Gamma^k_{kj} + Gamma^k_{kl} Gamma^l_{ij}
///          - Gamma^k_{il} Gamma^l_{kj},  R = h^{ij} R_{ij}.
pub fn ricci_scalar(h: &SymTensorField) -> Result<(SymTensorField, ScalarField)> {
    let grid = h.grid().clone();
    let n = grid.ndim();
    if !h.is_finite() {
        return Err(Error::NonFinite("ricci_scalar"));
    }
    let md = metric_data(h)?;
    let ch = christoffels(h)?;

    // contracted symbol Gamma^k_{kj} as field per j
    let mut contracted = Vec::with_capacity(n);
    for j in 0..n {
        let mut f = ScalarField::zeros(&grid);
        for k in 0..n {
            f.axpy(1.0, &ch.gamma[k][k][j]);
        }
        contracted.push(f);
    }

    let mut ric = SymTensorField::zeros(&grid);
    for i in 0..n {
        for j in i..n {
            let mut term = ScalarField::zeros(&grid);
            // d_k Gamma^k_{ij}
            for k in 0..n {
                term.axpy(1.0, &partial_derivative(&ch.gamma[k][i][j], k)?);
            }
            // - d_i Gamma^k_{kj}
            term.axpy(-1.0, &partial_derivative(&contracted[j], i)?);
            // quadratic terms
            for idx in 0..grid.len() {
                let mut q = 0.0;
                for k in 0..n {
                    for l in 0..n {
                        q += ch.gamma[k][k][l].data()[idx] * ch.gamma[l][i][j].data()[idx]
                            - ch.gamma[k][i][l].data()[idx] * ch.gamma[l][k][j].data()[idx];
                    }
                }
                term.data_mut()[idx] += q;
            }
            ric.set_component(i, j, &term);
        }
    }

    let mut scalar = ScalarField::zeros(&grid);
    for idx in 0..grid.len() {
        let rm = smallmat::from_tri(n, ric.tri(idx));
        let prod = smallmat::mul(n, &md.inv[idx], &rm);
        scalar.data_mut()[idx] = smallmat::trace(n, &prod);
    }
    Ok((ric, scalar))
}

/// Schouten tensor P = (Ric - R h / (2(n-1))) / (n-2); requires n >= 3.
pub fn schouten(h0: &SymTensorField) -> Result<SymTensorField> {
    let n = h0.grid().ndim();
    if n < 3 {
        return Err(Error::DimensionTooLow(n));
    }
    let (ric, r) = ricci_scalar(h0)?;
    let mut p = SymTensorField::zeros(h0.grid());
    let c1 = 1.0 / (n as f64 - 2.0);
    let c2 = 1.0 / (2.0 * (n as f64 - 1.0));
    for i in 0..n {
        for j in i..n {
            let hij = h0.component(i, j);
            let rij = ric.component(i, j);
            let comp = rij.zip_with(&hij.zip_with(&r, |h, rr| h * rr * c2), |a, b| c1 * (a - b));
            p.set_component(i, j, &comp);
        }
    }
    Ok(p)
}

/// Hessian of f w.r.t. h: Hess_{ij} = d_i d_j f - Gamma^k_{ij} d_k f.
pub fn hessian(f: &ScalarField, h: &SymTensorField) -> Result<SymTensorField> {
    let grid = f.grid().clone();
    let n = grid.ndim();
    let ch = christoffels(h)?;
    let df: Vec<ScalarField> = (0..n).map(|a| partial_derivative(f, a)).collect::<Result<_>>()?;
    let mut out = SymTensorField::zeros(&grid);
    for i in 0..n {
        for j in i..n {
            let mut comp = partial_derivative(&df[j], i)?;
            for k in 0..n {
                for idx in 0..grid.len() {
                    comp.data_mut()[idx] -= ch.gamma[k][i][j].data()[idx] * df[k].data()[idx];
                }
            }
            out.set_component(i, j, &comp);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BoundaryGrid;
    use crate::ops::laplace_beltrami;
    use std::f64::consts::PI;

    #[test]
    fn flat_metric_is_ricci_flat() {
        let grid = BoundaryGrid::unit_torus(2, 16).unwrap();
        let h = SymTensorField::identity(&grid);
        let (ric, r) = ricci_scalar(&h).unwrap();
        assert!(ric.sup_norm() < 1e-12);
        assert!(r.sup_norm() < 1e-12);
    }

    #[test]
    fn conformal_scalar_curvature_2d() {
        // h = e^{2u} I in n=2: R = -2 e^{-2u} Delta_flat u
        let grid = BoundaryGrid::unit_torus(2, 48).unwrap();
        let u = ScalarField::from_fn(&grid, |y| {
            0.15 * (2.0 * PI * y[0]).sin() + 0.1 * (2.0 * PI * y[1]).cos()
        });
        let e2u = u.map(|v| (2.0 * v).exp());
        let mut h = SymTensorField::zeros(&grid);
        h.set_component(0, 0, &e2u);
        h.set_component(1, 1, &e2u);
        let (_, r) = ricci_scalar(&h).unwrap();
        let flat = SymTensorField::identity(&grid);
        let lap_u = laplace_beltrami(&u, &flat).unwrap();
        let expect = lap_u.zip_with(&e2u, |l, w| -2.0 * l / w);
        let dev = r.sub(&expect).sup_norm();
        assert!(dev < 1e-6, "dev {dev}");
    }

    #[test]
    fn product_metric_3d_matches_2d_curvature() {
        // 2-d conformally flat block x flat circle: R_3d equals the 2-d value
        let grid3 = BoundaryGrid::new(vec![32, 32, 8], vec![1.0, 1.0, 1.0]).unwrap();
        let grid2 = BoundaryGrid::unit_torus(2, 32).unwrap();
        let uf = |y: &[f64]| 0.1 * (2.0 * PI * y[0]).sin() * (2.0 * PI * y[1]).cos();
        let mut h3 = SymTensorField::identity(&grid3);
        let e2u3 = ScalarField::from_fn(&grid3, |y| (2.0 * uf(y)).exp());
        h3.set_component(0, 0, &e2u3);
        h3.set_component(1, 1, &e2u3);
        let (_, r3) = ricci_scalar(&h3).unwrap();

        let mut h2 = SymTensorField::zeros(&grid2);
        let e2u2 = ScalarField::from_fn(&grid2, |y| (2.0 * uf(y)).exp());
        h2.set_component(0, 0, &e2u2);
        h2.set_component(1, 1, &e2u2);
        let (_, r2) = ricci_scalar(&h2).unwrap();

        // compare on the slice z = 0
        let nz = grid3.dims()[2];
        let mut dev: f64 = 0.0;
        for idx2 in 0..grid2.len() {
            let m = grid2.multi_index(idx2);
            let idx3 = (m[0] * 32 + m[1]) * nz;
            dev = dev.max((r3.data()[idx3] - r2.data()[idx2]).abs());
        }
        assert!(dev < 1e-7, "dev {dev}");
    }

    #[test]
    fn schouten_flat_zero_and_scale_invariant() {
        let grid = BoundaryGrid::new(vec![16, 16, 8], vec![1.0, 1.0, 1.0]).unwrap();
        let h = SymTensorField::identity(&grid);
        let p = schouten(&h).unwrap();
        assert!(p.sup_norm() < 1e-12);

        let u = ScalarField::from_fn(&grid, |y| 0.1 * (2.0 * PI * y[0]).cos());
        let e2u = u.map(|v| (2.0 * v).exp());
        let mut hc = SymTensorField::identity(&grid);
        hc.set_component(0, 0, &e2u);
        hc.set_component(1, 1, &e2u);
        let p1 = schouten(&hc).unwrap();
        let p2 = schouten(&hc.scale(4.0)).unwrap();
        assert!(p1.sub(&p2).sup_norm() < 1e-9);
    }

    #[test]
    fn schouten_rejects_n2() {
        let grid = BoundaryGrid::unit_torus(2, 8).unwrap();
        let h = SymTensorField::identity(&grid);
        assert!(matches!(schouten(&h), Err(Error::DimensionTooLow(2))));
    }

    #[test]
    fn schouten_conformal_oracle_3d() {
        // For h0 = e^{2u} I in R^n (n=3):
        // P = -(Hess u - du (x) du + |grad u|^2/2 I)   (flat background operators)
        let grid = BoundaryGrid::new(vec![24, 24, 24], vec![1.0, 1.0, 1.0]).unwrap();
        let u = ScalarField::from_fn(&grid, |y| {
            0.08 * (2.0 * PI * y[0]).sin() + 0.06 * (2.0 * PI * (y[1] + y[2])).cos()
        });
        let e2u = u.map(|v| (2.0 * v).exp());
        let mut h = SymTensorField::identity(&grid);
        for i in 0..3 {
            h.set_component(i, i, &e2u);
        }
        let p = schouten(&h).unwrap();
        let flat = SymTensorField::identity(&grid);
        let hess = hessian(&u, &flat).unwrap();
        let du: Vec<ScalarField> =
            (0..3).map(|a| partial_derivative(&u, a).unwrap()).collect();
        let grad_sq = {
            let mut g = ScalarField::zeros(&grid);
            for a in 0..3 {
                g.axpy(1.0, &du[a].zip_with(&du[a], |x, y| x * y));
            }
            g
        };
        let mut dev: f64 = 0.0;
        for i in 0..3 {
            for j in i..3 {
                let delta = if i == j { 1.0 } else { 0.0 };
                for idx in 0..grid.len() {
                    let expect = -(hess.get(idx, i, j) - du[i].data()[idx] * du[j].data()[idx]
                        + 0.5 * grad_sq.data()[idx] * delta);
                    dev = dev.max((p.get(idx, i, j) - expect).abs());
                }
            }
        }
        assert!(dev < 1e-6, "dev {dev}");
    }

    #[test]
    fn operators_commute_with_grid_refinement() {
        // band-limited inputs: doubling resolution changes values at common
        // points below 1e-10
        let g1 = BoundaryGrid::unit_torus(2, 24).unwrap();
        let g2 = BoundaryGrid::unit_torus(2, 48).unwrap();
        let uf = |y: &[f64]| 0.04 * (2.0 * PI * y[0]).sin() + 0.03 * (2.0 * PI * y[1]).cos();
        let ff = |y: &[f64]| (2.0 * PI * y[1]).sin() + (2.0 * PI * (y[0] + y[1])).cos();
        let build = |grid: &std::sync::Arc<BoundaryGrid>| {
            let e2u = ScalarField::from_fn(grid, |y| (2.0 * uf(y)).exp());
            let mut h = SymTensorField::zeros(grid);
            h.set_component(0, 0, &e2u);
            h.set_component(1, 1, &e2u);
            let f = ScalarField::from_fn(grid, ff);
            (h, f)
        };
        let (h1, f1) = build(&g1);
        let (h2, f2) = build(&g2);
        let l1 = laplace_beltrami(&f1, &h1).unwrap();
        let l2 = laplace_beltrami(&f2, &h2).unwrap();
        let (_, r1) = ricci_scalar(&h1).unwrap();
        let (_, r2) = ricci_scalar(&h2).unwrap();
        let mut dev_l: f64 = 0.0;
        let mut dev_r: f64 = 0.0;
        for i in 0..24 {
            for j in 0..24 {
                let idx1 = i * 24 + j;
                let idx2 = (2 * i) * 48 + 2 * j;
                dev_l = dev_l.max((l1.data()[idx1] - l2.data()[idx2]).abs());
                dev_r = dev_r.max((r1.data()[idx1] - r2.data()[idx2]).abs());
            }
        }
        assert!(dev_l < 1e-10, "laplacian refinement dev {dev_l}");
        assert!(dev_r < 1e-10, "ricci refinement dev {dev_r}");
    }
}
