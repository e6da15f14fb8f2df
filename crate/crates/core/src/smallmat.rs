//! Per-point linear algebra for n x n matrices with n <= 3.
//!
//! Matrices are `[f64; 9]` row-major regardless of n; entries beyond
//! the active block are ignored.

pub type Mat = [f64; 9];

pub const ZERO: Mat = [0.0; 9];

#[inline]
pub fn at(m: &Mat, i: usize, j: usize) -> f64 {
    m[i * 3 + j]
}

#[inline]
pub fn set(m: &mut Mat, i: usize, j: usize, v: f64) {
    m[i * 3 + j] = v;
}

pub fn identity(n: usize) -> Mat {
    let mut m = ZERO;
    for i in 0..n {
        m[i * 3 + i] = 1.0;
    }
    m
}

/// Expand a packed upper triangle into a full symmetric matrix.
pub fn from_tri(n: usize, tri: &[f64]) -> Mat {
    let mut m = ZERO;
    let mut c = 0;
    for i in 0..n {
        for j in i..n {
            m[i * 3 + j] = tri[c];
            m[j * 3 + i] = tri[c];
            c += 1;
        }
    }
    m
}

pub fn to_tri(n: usize, m: &Mat, tri: &mut [f64]) {
    let mut c = 0;
    for i in 0..n {
        for j in i..n {
            tri[c] = 0.5 * (m[i * 3 + j] + m[j * 3 + i]);
            c += 1;
        }
    }
}

pub fn add(n: usize, a: &Mat, b: &Mat) -> Mat {
    let mut out = ZERO;
    for i in 0..n {
        for j in 0..n {
            out[i * 3 + j] = a[i * 3 + j] + b[i * 3 + j];
        }
    }
    out
}

pub fn scale(n: usize, a: &Mat, c: f64) -> Mat {
    let mut out = ZERO;
    for i in 0..n {
        for j in 0..n {
            out[i * 3 + j] = c * a[i * 3 + j];
        }
    }
    out
}

pub fn mul(n: usize, a: &Mat, b: &Mat) -> Mat {
    let mut out = ZERO;
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..n {
                s += a[i * 3 + k] * b[k * 3 + j];
            }
            out[i * 3 + j] = s;
        }
    }
    out
}

pub fn matvec(n: usize, a: &Mat, v: &[f64], out: &mut [f64]) {
    for i in 0..n {
        let mut s = 0.0;
        for j in 0..n {
            s += a[i * 3 + j] * v[j];
        }
        out[i] = s;
    }
}

pub fn trace(n: usize, a: &Mat) -> f64 {
    (0..n).map(|i| a[i * 3 + i]).sum()
}

pub fn det(n: usize, a: &Mat) -> f64 {
    match n {
        2 => a[0] * a[4] - a[1] * a[3],
        3 => {
            a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6])
                + a[2] * (a[3] * a[7] - a[4] * a[6])
        }
        _ => unreachable!("n must be 2 or 3"),
    }
}

/// Inverse; returns None when the determinant vanishes.
pub fn inverse(n: usize, a: &Mat) -> Option<Mat> {
    let d = det(n, a);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    let mut out = ZERO;
    match n {
        2 => {
            out[0] = a[4] / d;
            out[1] = -a[1] / d;
            out[3] = -a[3] / d;
            out[4] = a[0] / d;
        }
        3 => {
            out[0] = (a[4] * a[8] - a[5] * a[7]) / d;
            out[1] = (a[2] * a[7] - a[1] * a[8]) / d;
            out[2] = (a[1] * a[5] - a[2] * a[4]) / d;
            out[3] = (a[5] * a[6] - a[3] * a[8]) / d;
            out[4] = (a[0] * a[8] - a[2] * a[6]) / d;
            out[5] = (a[2] * a[3] - a[0] * a[5]) / d;
            out[6] = (a[3] * a[7] - a[4] * a[6]) / d;
            out[7] = (a[1] * a[6] - a[0] * a[7]) / d;
            out[8] = (a[0] * a[4] - a[1] * a[3]) / d;
        }
        _ => unreachable!(),
    }
    Some(out)
}

/// Cholesky factor L (lower) of a symmetric positive definite matrix.
pub fn cholesky(n: usize, a: &Mat) -> Option<Mat> {
    let mut l = ZERO;
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * 3 + j];
            for k in 0..j {
                s -= l[i * 3 + k] * l[j * 3 + k];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return None;
                }
                l[i * 3 + i] = s.sqrt();
            } else {
                l[i * 3 + j] = s / l[j * 3 + j];
            }
        }
    }
    Some(l)
}

pub fn is_positive_definite(n: usize, a: &Mat) -> bool {
    cholesky(n, a).is_some()
}

/// Solve L x = b with L lower triangular.
pub fn solve_lower(n: usize, l: &Mat, b: &[f64], x: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * 3 + k] * x[k];
        }
        x[i] = s / l[i * 3 + i];
    }
}

/// Solve L^T x = b with L lower triangular.
pub fn solve_lower_t(n: usize, l: &Mat, b: &[f64], x: &mut [f64]) {
    for ii in 0..n {
        let i = n - 1 - ii;
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[k * 3 + i] * x[k];
        }
        x[i] = s / l[i * 3 + i];
    }
}

/// Eigenvalues of a symmetric matrix, ascending. 2x2 closed form,
/// 3x3 by cyclic Jacobi sweeps.
pub fn sym_eigenvalues(n: usize, a: &Mat) -> [f64; 3] {
    match n {
        2 => {
            let half_tr = 0.5 * (a[0] + a[4]);
            let off = 0.5 * (a[1] + a[3]);
            let d = ((0.5 * (a[0] - a[4])).powi(2) + off * off).sqrt();
            [half_tr - d, half_tr + d, 0.0]
        }
        3 => {
            let mut m = *a;
            // symmetrize defensively
            for i in 0..3 {
                for j in (i + 1)..3 {
                    let v = 0.5 * (m[i * 3 + j] + m[j * 3 + i]);
                    m[i * 3 + j] = v;
                    m[j * 3 + i] = v;
                }
            }
            for _sweep in 0..32 {
                let off = m[1] * m[1] + m[2] * m[2] + m[5] * m[5];
                if off < 1e-30 * (m[0] * m[0] + m[4] * m[4] + m[8] * m[8] + 1e-300) {
                    break;
                }
                for &(p, q) in &[(0usize, 1usize), (0, 2), (1, 2)] {
                    let apq = m[p * 3 + q];
                    if apq.abs() < 1e-300 {
                        continue;
                    }
                    let app = m[p * 3 + p];
                    let aqq = m[q * 3 + q];
                    let theta = 0.5 * (aqq - app) / apq;
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    // rotate rows/cols p,q
                    for k in 0..3 {
                        let akp = m[k * 3 + p];
                        let akq = m[k * 3 + q];
                        m[k * 3 + p] = c * akp - s * akq;
                        m[k * 3 + q] = s * akp + c * akq;
                    }
                    for k in 0..3 {
                        let apk = m[p * 3 + k];
                        let aqk = m[q * 3 + k];
                        m[p * 3 + k] = c * apk - s * aqk;
                        m[q * 3 + k] = s * apk + c * aqk;
                    }
                }
            }
            let mut ev = [m[0], m[4], m[8]];
            ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
            ev
        }
        _ => unreachable!(),
    }
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn sym_min_eigenvalue(n: usize, a: &Mat) -> f64 {
    sym_eigenvalues(n, a)[0]
}

/// Eigenvalues of B that is symmetric with respect to an SPD metric g,
/// i.e. of g^{-1} s with s symmetric: computed from L^{-1} s L^{-T}
/// where g = L L^T. Returns ascending eigenvalues.
pub fn metric_sym_eigenvalues(n: usize, g: &Mat, s: &Mat) -> Option<[f64; 3]> {
    let l = cholesky(n, g)?;
    // c = L^{-1} s L^{-T}
    let mut c = ZERO;
    let mut col = [0.0; 3];
    let mut tmp = [0.0; 3];
    // first w = L^{-1} s  (column by column of s)
    let mut w = ZERO;
    for j in 0..n {
        for i in 0..n {
            col[i] = s[i * 3 + j];
        }
        solve_lower(n, &l, &col[..n], &mut tmp[..n]);
        for i in 0..n {
            w[i * 3 + j] = tmp[i];
        }
    }
    // c = w L^{-T}: solve row-wise  c L^T = w  =>  L c^T = w^T
    for i in 0..n {
        for j in 0..n {
            col[j] = w[i * 3 + j];
        }
        solve_lower(n, &l, &col[..n], &mut tmp[..n]);
        for j in 0..n {
            c[i * 3 + j] = tmp[j];
        }
    }
    Some(sym_eigenvalues(n, &c))
}
