//! Numerical kernel for the ambient geometry: the contact form, the
//! symplectic form, the almost complex structure, the Reeb field, and the
//! pseudoholomorphic PDE residual on cylinder grids.
//!
//! Everything at a point is assembled from the coordinate expressions in
//! the `(s, t, theta, phi)` frame.  The poles are excluded, since the
//! Jacobian-based construction of `J` degenerates there.

use thiserror::Error;

use crate::algebra::{IntegerPair, SQRT6};
use crate::par::{map2, Exec};

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("theta = {0} is outside the open interval (0, pi)")]
    ThetaAtPole(f64),
    #[error("sigma interval [{0}, {1}] touches a pole")]
    IntervalAtPole(f64, f64),
    #[error("grid too small: need at least {0} points")]
    GridTooSmall(usize),
}

/// A point of `R x (S^1 x S^2)` in `(s, t, theta, phi)` coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    pub s: f64,
    pub t: f64,
    pub theta: f64,
    pub phi: f64,
}

impl GeoPoint {
    pub fn new(s: f64, t: f64, theta: f64, phi: f64) -> Self {
        GeoPoint { s, t, theta, phi }
    }
}

pub type Vec4 = [f64; 4];
pub type Mat4 = [[f64; 4]; 4];

/// Pointwise frame data in the coordinate basis `(s, t, theta, phi)`.
#[derive(Debug, Clone)]
pub struct FrameEval {
    /// Covector components of the contact form.
    pub alpha: Vec4,
    /// `d(alpha)` as an antisymmetric matrix.
    pub d_alpha: Mat4,
    /// The symplectic form.
    pub omega: Mat4,
    /// The almost complex structure, columns `J(d/dx_i)`.
    pub j: Mat4,
    /// The Reeb vector field.
    pub reeb: Vec4,
    /// The compatibility metric `g^{-1} omega(., J.)`.
    pub g_metric: Mat4,
    /// The conformal factor used in the compatibility pairing.
    pub g_factor: f64,
}

pub fn mat_vec(m: &Mat4, v: &Vec4) -> Vec4 {
    let mut out = [0.0; 4];
    for (i, row) in m.iter().enumerate() {
        out[i] = row.iter().zip(v).map(|(a, b)| a * b).sum();
    }
    out
}

pub fn mat_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

/// Antisymmetric pairing `m(u, v)` for a 2-form stored as a matrix.
pub fn form_eval(m: &Mat4, u: &Vec4, v: &Vec4) -> f64 {
    let mv = mat_vec(m, v);
    u.iter().zip(&mv).map(|(a, b)| a * b).sum()
}

/// Contact form components at `theta`: `alpha = -(1 - 3c^2) dt - sqrt6 c sn^2 dphi`.
pub fn alpha_covector(theta: f64) -> Vec4 {
    let c = theta.cos();
    let sn = theta.sin();
    [0.0, -(1.0 - 3.0 * c * c), 0.0, -SQRT6 * c * sn * sn]
}

/// `e^{-sqrt6 s} alpha`, the primitive of the symplectic form.
pub fn symplectic_primitive(p: &GeoPoint) -> Vec4 {
    let e = (-SQRT6 * p.s).exp();
    let a = alpha_covector(p.theta);
    [0.0, e * a[1], 0.0, e * a[3]]
}

/// Evaluate the full frame at an interior point.
pub fn frame_at(p: &GeoPoint) -> Result<FrameEval, GeometryError> {
    let theta = p.theta;
    if !(theta > 0.0 && theta < std::f64::consts::PI) {
        return Err(GeometryError::ThetaAtPole(theta));
    }
    let c = theta.cos();
    let sn = theta.sin();
    let e = (-SQRT6 * p.s).exp();
    let one_m3c2 = 1.0 - 3.0 * c * c;

    let alpha = alpha_covector(theta);

    // d(alpha) = -6 c sn dtheta ^ dt + sqrt6 sn (1 - 3c^2) dtheta ^ dphi.
    let mut d_alpha = [[0.0; 4]; 4];
    let da_tt = -6.0 * c * sn;
    let da_tp = SQRT6 * sn * one_m3c2;
    d_alpha[2][1] = da_tt;
    d_alpha[1][2] = -da_tt;
    d_alpha[2][3] = da_tp;
    d_alpha[3][2] = -da_tp;

    // omega = dt ^ df + dphi ^ dh with f, h the moment-map pair.
    let f_s = -SQRT6 * e * one_m3c2;
    let f_th = 6.0 * e * c * sn;
    let h_s = -6.0 * e * c * sn * sn;
    let h_th = SQRT6 * e * sn * (3.0 * c * c - 1.0);
    let mut omega = [[0.0; 4]; 4];
    omega[1][0] = f_s;
    omega[0][1] = -f_s;
    omega[1][2] = f_th;
    omega[2][1] = -f_th;
    omega[3][0] = h_s;
    omega[0][3] = -h_s;
    omega[3][2] = h_th;
    omega[2][3] = -h_th;

    // J via the (f, h) chart: J dt = g df-dual, J dphi = sn^2 g dh-dual,
    // closed up by J^2 = -1.  The conformal factor carries the square
    // root of (1 + 3 c^4) so that J preserves the product metric and
    // J d/ds is the unit multiple of the Reeb field.
    let norm = 1.0 + 3.0 * c.powi(4);
    let g_factor = SQRT6 * e * norm.sqrt();
    let det = 6.0 * e * e * sn * norm;
    // Coordinate duals: d/df = (h_th d/ds - h_s d/dtheta)/det, and
    // d/dh = (-f_th d/ds + f_s d/dtheta)/det.
    let jt = [g_factor * h_th / det, 0.0, g_factor * (-h_s) / det, 0.0];
    let jp = [
        sn * sn * g_factor * (-f_th) / det,
        0.0,
        sn * sn * g_factor * f_s / det,
        0.0,
    ];
    // Solve d/ds = A J dt + B J dphi and d/dtheta = C J dt + D J dphi.
    let det2 = jt[0] * jp[2] - jp[0] * jt[2];
    let (a, b) = (jp[2] / det2, -jt[2] / det2);
    let (cc, dd) = (-jp[0] / det2, jt[0] / det2);
    // Then J d/ds = -A dt - B dphi and J d/dtheta = -C dt - D dphi.
    let mut j = [[0.0; 4]; 4];
    // Column 0: J d/ds.
    j[1][0] = -a;
    j[3][0] = -b;
    // Column 1: J d/dt.
    j[0][1] = jt[0];
    j[2][1] = jt[2];
    // Column 2: J d/dtheta.
    j[1][2] = -cc;
    j[3][2] = -dd;
    // Column 3: J d/dphi.
    j[0][3] = jp[0];
    j[2][3] = jp[2];

    let reeb = [0.0, one_m3c2, 0.0, SQRT6 * c];

    // g^{-1} omega(., J.).
    let mut g_metric = [[0.0; 4]; 4];
    let basis: [Vec4; 4] = [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ];
    for (r, u) in basis.iter().enumerate() {
        for (s_, v) in basis.iter().enumerate() {
            g_metric[r][s_] = form_eval(&omega, u, &mat_vec(&j, v)) / g_factor;
        }
    }

    Ok(FrameEval { alpha, d_alpha, omega, j, reeb, g_metric, g_factor })
}

/// Pair a covector with a vector.
pub fn pair_covector(cov: &Vec4, v: &Vec4) -> f64 {
    cov.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Fourth-order central difference of a scalar function.
pub fn fd4<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

/// Finite-difference exterior derivative of a covector field, fourth
/// order, returned as an antisymmetric matrix.
pub fn exterior_derivative_fd<F: Fn(&GeoPoint) -> Vec4>(field: F, p: &GeoPoint, h: f64) -> Mat4 {
    let shift = |p: &GeoPoint, mu: usize, d: f64| {
        let mut q = *p;
        match mu {
            0 => q.s += d,
            1 => q.t += d,
            2 => q.theta += d,
            3 => q.phi += d,
            _ => unreachable!(),
        }
        q
    };
    let mut out = [[0.0; 4]; 4];
    for (mu, row) in out.iter_mut().enumerate() {
        for (nu, slot) in row.iter_mut().enumerate() {
            if mu == nu {
                continue;
            }
            // (d lambda)_{mu nu} = d_mu lambda_nu - d_nu lambda_mu.
            let dmu = fd4(|x| field(&shift(p, mu, x - read(p, mu)))[nu], read(p, mu), h);
            let dnu = fd4(|x| field(&shift(p, nu, x - read(p, nu)))[mu], read(p, nu), h);
            *slot = dmu - dnu;
        }
    }
    out
}

fn read(p: &GeoPoint, mu: usize) -> f64 {
    match mu {
        0 => p.s,
        1 => p.t,
        2 => p.theta,
        3 => p.phi,
        _ => unreachable!(),
    }
}

/// `alpha_Q(sigma)` as a float.
pub fn alpha_q(q: &IntegerPair, sigma: f64) -> f64 {
    let c = sigma.cos();
    (1.0 - 3.0 * c * c) * (q.pp as f64) - SQRT6 * c * (q.p as f64)
}

/// `beta(sigma) = q (1 - 3 cos^2) + q' sqrt6 cos sin^2`.
pub fn beta_q(q: &IntegerPair, sigma: f64) -> f64 {
    let c = sigma.cos();
    let sn = sigma.sin();
    (q.p as f64) * (1.0 - 3.0 * c * c) + (q.pp as f64) * SQRT6 * c * sn * sn
}

/// Uniform grid data for a pair of functions `(a, w)` on
/// `[sigma_lo, sigma_hi] x [0, 2pi)`, row-major in `sigma` then `v`.
#[derive(Debug, Clone)]
pub struct Grid2 {
    pub sigma: Vec<f64>,
    pub v: Vec<f64>,
    pub a: Vec<f64>,
    pub w: Vec<f64>,
}

impl Grid2 {
    pub fn from_fns<A, W>(sigma_lo: f64, sigma_hi: f64, n_sigma: usize, n_v: usize, fa: A, fw: W) -> Self
    where
        A: Fn(f64, f64) -> f64,
        W: Fn(f64, f64) -> f64,
    {
        let sigma: Vec<f64> = (0..n_sigma)
            .map(|i| sigma_lo + (sigma_hi - sigma_lo) * i as f64 / (n_sigma - 1) as f64)
            .collect();
        let v: Vec<f64> =
            (0..n_v).map(|j| 2.0 * std::f64::consts::PI * j as f64 / n_v as f64).collect();
        let mut a = Vec::with_capacity(n_sigma * n_v);
        let mut w = Vec::with_capacity(n_sigma * n_v);
        for &s in &sigma {
            for &vv in &v {
                a.push(fa(s, vv));
                w.push(fw(s, vv));
            }
        }
        Grid2 { sigma, v, a, w }
    }

    pub fn at(&self, i: usize, j: usize) -> (f64, f64) {
        let n_v = self.v.len();
        (self.a[i * n_v + j], self.w[i * n_v + j])
    }
}

/// Residuals of the two pseudoholomorphic equations, evaluated with
/// second-order central differences at interior `sigma` nodes (all `v`
/// nodes; `v` is periodic).  Stored as right side minus left side.
#[derive(Debug, Clone)]
pub struct ResidualGrid {
    pub sigma: Vec<f64>,
    pub v: Vec<f64>,
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
}

impl ResidualGrid {
    pub fn sup_norm(&self) -> f64 {
        self.r1
            .iter()
            .chain(&self.r2)
            .fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

/// Central-difference evaluation of the cylinder equations for the label
/// `Q` on a periodic grid.
pub fn pde_residual(q: &IntegerPair, grid: &Grid2, exec: Exec) -> Result<ResidualGrid, GeometryError> {
    let n_s = grid.sigma.len();
    let n_v = grid.v.len();
    if n_s < 3 || n_v < 3 {
        return Err(GeometryError::GridTooSmall(3));
    }
    let lo = grid.sigma[0];
    let hi = grid.sigma[n_s - 1];
    if lo <= 0.0 || hi >= std::f64::consts::PI {
        return Err(GeometryError::IntervalAtPole(lo, hi));
    }
    let h_s = grid.sigma[1] - grid.sigma[0];
    let h_v = grid.v[1] - grid.v[0];

    let alpha: Vec<f64> = grid.sigma.iter().map(|&s| alpha_q(q, s)).collect();
    let idx = |i: usize, j: usize| i * n_v + j;

    let rows = n_s - 2;
    let eval = |r: usize, j: usize| -> (f64, f64) {
        let i = r + 1;
        let sigma = grid.sigma[i];
        let c = sigma.cos();
        let sn = sigma.sin();
        let jp = (j + 1) % n_v;
        let jm = (j + n_v - 1) % n_v;

        let a_sig = (grid.a[idx(i + 1, j)] - grid.a[idx(i - 1, j)]) / (2.0 * h_s);
        let a_v = (grid.a[idx(i, jp)] - grid.a[idx(i, jm)]) / (2.0 * h_v);
        let w_v = (grid.w[idx(i, jp)] - grid.w[idx(i, jm)]) / (2.0 * h_v);
        let aw_sig = (alpha[i + 1] * grid.w[idx(i + 1, j)] - alpha[i - 1] * grid.w[idx(i - 1, j)])
            / (2.0 * h_s);
        let w = grid.w[idx(i, j)];

        let beta = beta_q(q, sigma);
        let norm = 1.0 + 3.0 * c.powi(4);
        let transport = SQRT6 * sn * (1.0 + 3.0 * c * c) * w;

        let lhs1 = alpha[i] * a_sig - transport * a_v;
        let rhs1 = -(norm / sn) * (w_v - beta / norm);
        let lhs2 = aw_sig - transport * w_v;
        let rhs2 = a_v / sn;
        (rhs1 - lhs1, rhs2 - lhs2)
    };

    let cells = map2(rows, n_v, exec, eval);
    let mut r1 = Vec::with_capacity(rows * n_v);
    let mut r2 = Vec::with_capacity(rows * n_v);
    for (x, y) in cells {
        r1.push(x);
        r2.push(y);
    }
    Ok(ResidualGrid {
        sigma: grid.sigma[1..n_s - 1].to_vec(),
        v: grid.v.clone(),
        r1,
        r2,
    })
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::par::Exec;

    const PI: f64 = std::f64::consts::PI;

    #[test]
    fn reeb_at_equator() {
        let f = frame_at(&GeoPoint::new(0.3, 0.1, PI / 2.0, 0.2)).unwrap();
        assert!((f.reeb[1] - 1.0).abs() < 1e-15);
        assert!(f.reeb[3].abs() < 1e-15);
    }

    #[test]
    fn alpha_of_reeb() {
        for &theta in &[PI / 2.0, 0.7, 2.1, 1.3] {
            let f = frame_at(&GeoPoint::new(-0.4, 0.0, theta, 1.0)).unwrap();
            let c = theta.cos();
            let want = -(1.0 + 3.0 * c.powi(4));
            assert!((pair_covector(&f.alpha, &f.reeb) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn reeb_in_kernel_of_d_alpha() {
        let f = frame_at(&GeoPoint::new(0.0, 0.0, 1.1, 0.5)).unwrap();
        let dv = mat_vec(&f.d_alpha, &f.reeb);
        for x in dv {
            assert!(x.abs() < 1e-12);
        }
    }

    #[test]
    fn j_squares_to_minus_one() {
        for &theta in &[0.3, 1.0, PI / 2.0, 2.5] {
            let f = frame_at(&GeoPoint::new(0.2, 0.0, theta, 0.0)).unwrap();
            let jj = mat_mul(&f.j, &f.j);
            for (i, row) in jj.iter().enumerate() {
                for (k, x) in row.iter().enumerate() {
                    let want = if i == k { -1.0 } else { 0.0 };
                    assert!((x - want).abs() < 1e-11, "jj[{i}][{k}] = {x}");
                }
            }
        }
    }

    #[test]
    fn j_ds_is_normalized_reeb() {
        for &theta in &[0.4, 1.2, 2.8] {
            let f = frame_at(&GeoPoint::new(-0.1, 0.0, theta, 0.0)).unwrap();
            let c = theta.cos();
            let scale = (1.0 + 3.0 * c.powi(4)).powf(-0.5);
            let jds = mat_vec(&f.j, &[1.0, 0.0, 0.0, 0.0]);
            for (got, want) in jds.iter().zip(f.reeb.iter().map(|x| x * scale)) {
                assert!((got - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn metric_is_product() {
        for &theta in &[0.5, 1.5, 2.2] {
            let f = frame_at(&GeoPoint::new(0.7, 0.3, theta, 0.1)).unwrap();
            let sn2 = theta.sin().powi(2);
            for i in 0..4 {
                for k in 0..4 {
                    let want = match (i, k) {
                        (0, 0) | (1, 1) | (2, 2) => 1.0,
                        (3, 3) => sn2,
                        _ => 0.0,
                    };
                    assert!((f.g_metric[i][k] - want).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn omega_is_d_of_primitive() {
        let p = GeoPoint::new(0.15, 0.4, 1.3, 2.0);
        let f = frame_at(&p).unwrap();
        let fd = exterior_derivative_fd(symplectic_primitive, &p, 1e-4);
        for i in 0..4 {
            for k in 0..4 {
                assert!((fd[i][k] - f.omega[i][k]).abs() < 1e-6, "omega[{i}][{k}]");
            }
        }
    }

    #[test]
    fn residual_zero_w_constant_a() {
        // a constant, w = 0: the second equation residual vanishes and the
        // first reduces to beta / sin.
        let q = IntegerPair::new(0, 1);
        let grid = Grid2::from_fns(1.2, 1.9, 51, 8, |_, _| 0.7, |_, _| 0.0);
        let res = pde_residual(&q, &grid, Exec::Seq).unwrap();
        for (k, &s) in res.sigma.iter().enumerate() {
            let want = beta_q(&q, s) / s.sin();
            for j in 0..res.v.len() {
                let r1 = res.r1[k * res.v.len() + j];
                let r2 = res.r2[k * res.v.len() + j];
                assert!((r1 - want).abs() < 1e-12);
                assert!(r2.abs() < 1e-14);
            }
        }
    }

    #[test]
    fn residual_second_order_on_exact_family() {
        // Exact v-independent solution: w = c0/alpha, a = log(alpha)/sqrt6.
        let q = IntegerPair::new(0, 1);
        let exact_a = |s: f64, _: f64| {
            let c = s.cos();
            (1.0 - 3.0 * c * c).ln() / SQRT6
        };
        let exact_w = |s: f64, _: f64| 0.35 / alpha_q(&q, s);
        let sup = |n: usize| {
            let grid = Grid2::from_fns(1.2, 1.9, n, 8, exact_a, exact_w);
            pde_residual(&q, &grid, Exec::Seq).unwrap().sup_norm()
        };
        let e1 = sup(101);
        let e2 = sup(201);
        let ratio = e1 / e2;
        assert!(
            (3.2..=4.8).contains(&ratio),
            "expected second-order decay, got ratio {ratio} ({e1} -> {e2})"
        );
    }
}
