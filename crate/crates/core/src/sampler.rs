//! Cylinder chart sampling and verification.
//!
//! A chart is a labelled rectangle `(sigma, v)` mapped into the ambient
//! space through
//!
//! ```text
//! s = a,  t = q v + (1 - 3 cos^2 sigma) w,  theta = sigma,
//! phi = q' v + sqrt6 cos(sigma) w   (t, phi mod 2pi)
//! ```
//!
//! with the mid-cylinder profile `a = a0 + eps cos(v + v0)`,
//! `w = w0 - eps sin(v + v0)` and optional end-collar models that splice
//! in the logarithmic behaviour of concave/convex ends.  `theta` always
//! equals `sigma` on the nose, and `t`, `phi` are kept unwrapped
//! internally so finite differences see smooth data.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{
    alpha_positive_on, Angle, AngleClass, IntegerPair, SQRT6,
};
use crate::geometry::alpha_q;
use crate::jsonc::fmt_g12;
use crate::par::{map2, Exec};

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("sigma bounds are not an increasing pair inside [0, pi]")]
    BadInterval,
    #[error("end model needs {side} bound at {want}, got {got}")]
    EndBoundMismatch { side: &'static str, want: &'static str, got: f64 },
    #[error("kappa vanishes for the end model (q'/q = {0})")]
    KappaZero(f64),
    #[error("eps * alpha_Q reaches {value} at sigma = {sigma}; the embedding bound needs < 1/2")]
    EpsTooLarge { sigma: f64, value: f64 },
    #[error("eps must be non-negative (eps({sigma}) = {value})")]
    EpsNegative { sigma: f64, value: f64 },
    #[error("alpha_Q is not positive on the interval (alpha({sigma}) = {value})")]
    AlphaNotPositive { sigma: f64, value: f64 },
    #[error("profile {name} is not constant on the {side} collar")]
    ProfileNotConstant { name: &'static str, side: &'static str },
    #[error("grid needs at least 3 x 3 nodes")]
    GridTooSmall,
    #[error("profile table needs at least one entry")]
    EmptyProfile,
    #[error("collar holds {got} sigma samples; the decay fit needs at least {want}")]
    TailTooShort { got: usize, want: usize },
    #[error("chart has no {0} collar to fit")]
    NoCollar(&'static str),
    #[error("nothing to export")]
    NothingToExport,
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Smooth cutoff: 1 on `[0, 1]`, 0 on `[2, inf)`, monotone between.
pub fn bump(x: f64) -> f64 {
    fn g(t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else {
            (-1.0 / t).exp()
        }
    }
    let (a, b) = (g(2.0 - x), g(x - 1.0));
    if a == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

/// Collar cutoff: `bump(|sigma - theta_star| / rho^4)`.
pub fn beta_prime(sigma: f64, theta_star: f64, rho: f64) -> f64 {
    bump((sigma - theta_star).abs() / rho.powi(4))
}

/// A scalar profile of `sigma`: a constant or a natural-cubic-spline
/// table, clamped outside its knot range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Profile {
    Const(f64),
    Table(Vec<(f64, f64)>),
}

impl Profile {
    pub fn eval(&self, sigma: f64) -> f64 {
        match self {
            Profile::Const(c) => *c,
            Profile::Table(pts) => spline_eval(pts, sigma),
        }
    }
    fn validate(&self) -> Result<(), SamplerError> {
        if let Profile::Table(pts) = self {
            if pts.is_empty() {
                return Err(SamplerError::EmptyProfile);
            }
        }
        Ok(())
    }
}

/// Natural cubic spline through the table, constant extrapolation.
fn spline_eval(pts: &[(f64, f64)], x: f64) -> f64 {
    let n = pts.len();
    if n == 1 {
        return pts[0].1;
    }
    if x <= pts[0].0 {
        return pts[0].1;
    }
    if x >= pts[n - 1].0 {
        return pts[n - 1].1;
    }
    if n == 2 {
        let t = (x - pts[0].0) / (pts[1].0 - pts[0].0);
        return pts[0].1 + t * (pts[1].1 - pts[0].1);
    }
    // Second derivatives by the tridiagonal natural-spline system.
    let mut m = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut upper = vec![0.0; n];
    diag[0] = 1.0;
    diag[n - 1] = 1.0;
    for i in 1..n - 1 {
        let h0 = pts[i].0 - pts[i - 1].0;
        let h1 = pts[i + 1].0 - pts[i].0;
        diag[i] = 2.0 * (h0 + h1);
        upper[i] = h1;
        rhs[i] = 6.0 * ((pts[i + 1].1 - pts[i].1) / h1 - (pts[i].1 - pts[i - 1].1) / h0);
    }
    // Forward sweep (lower diagonal is h0, zero rows at the ends).
    for i in 1..n - 1 {
        let h0 = pts[i].0 - pts[i - 1].0;
        let w = if i == 1 { 0.0 } else { h0 / diag[i - 1] };
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    for i in (1..n - 1).rev() {
        m[i] = (rhs[i] - upper[i] * m[i + 1]) / diag[i];
    }
    let k = pts.partition_point(|p| p.0 <= x).min(n - 1);
    let (x0, y0) = pts[k - 1];
    let (x1, y1) = pts[k];
    let h = x1 - x0;
    let a = (x1 - x) / h;
    let b = (x - x0) / h;
    a * y0 + b * y1 + ((a.powi(3) - a) * m[k - 1] + (b.powi(3) - b) * m[k]) * h * h / 6.0
}

/// One end of the `sigma` interval, either a float or an exact anchor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SigmaBound {
    Value(f64),
    Pair { p: i64, pp: i64 },
    Named(String),
}

impl SigmaBound {
    pub fn resolve(&self) -> Result<(f64, Option<Angle>), SamplerError> {
        match self {
            SigmaBound::Value(x) => Ok((*x, None)),
            SigmaBound::Pair { p, pp } => {
                let class = AngleClass::from_pair(IntegerPair::new(*p, *pp))
                    .map_err(|_| SamplerError::BadInterval)?;
                Ok((class.theta_approx(), Some(Angle::Orbit(class))))
            }
            SigmaBound::Named(name) => match name.as_str() {
                "pole0" => Ok((0.0, Some(Angle::Pole0))),
                "polePi" => Ok((std::f64::consts::PI, Some(Angle::PolePi))),
                _ => Err(SamplerError::BadInterval),
            },
        }
    }
}

/// End-collar model attached to one side of the chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndKind {
    None,
    /// Logarithmic end limiting on the `theta = 0` circle.
    Theta0End,
    /// Closed disk cap through a pole point.
    PolePoint,
    /// Convex end limiting on an interior orbit angle.
    InteriorConvex,
    /// Logarithmic end limiting on the `theta = pi` circle.
    ThetaPiEnd,
}

impl EndKind {
    fn is_open(&self) -> bool {
        matches!(self, EndKind::Theta0End | EndKind::InteriorConvex | EndKind::ThetaPiEnd)
    }
}

/// Full specification of a single cylinder chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub q: i64,
    pub qp: i64,
    pub sigma_lo: SigmaBound,
    pub sigma_hi: SigmaBound,
    #[serde(default = "Profile::zero")]
    pub a0: Profile,
    #[serde(default = "Profile::zero")]
    pub w0: Profile,
    #[serde(default = "Profile::zero")]
    pub v0: Profile,
    #[serde(default = "Profile::default_eps")]
    pub eps: Profile,
    #[serde(default = "default_rho")]
    pub rho0: f64,
    #[serde(default = "default_rho")]
    pub rho1: f64,
    #[serde(default = "EndKind::none")]
    pub end_lo: EndKind,
    #[serde(default = "EndKind::none")]
    pub end_hi: EndKind,
}

fn default_rho() -> f64 {
    0.2
}

impl Profile {
    fn zero() -> Profile {
        Profile::Const(0.0)
    }
    fn default_eps() -> Profile {
        Profile::Const(0.05)
    }
}

impl EndKind {
    fn none() -> EndKind {
        EndKind::None
    }
}

/// Everything resolved once per chart: bounds, the decay constants and
/// the collar geometry.
#[derive(Debug, Clone)]
pub struct ResolvedSpec {
    pub q: IntegerPair,
    pub lo: f64,
    pub hi: f64,
    pub lo_angle: Option<Angle>,
    pub hi_angle: Option<Angle>,
}

impl ChartSpec {
    pub fn pair(&self) -> IntegerPair {
        IntegerPair::new(self.q, self.qp)
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn resolve(&self) -> Result<ResolvedSpec, SamplerError> {
        for p in [&self.a0, &self.w0, &self.v0, &self.eps] {
            p.validate()?;
        }
        let (lo, lo_angle) = self.sigma_lo.resolve()?;
        let (hi, hi_angle) = self.sigma_hi.resolve()?;
        if !(0.0..=std::f64::consts::PI).contains(&lo)
            || !(0.0..=std::f64::consts::PI).contains(&hi)
            || lo >= hi
        {
            return Err(SamplerError::BadInterval);
        }
        match self.end_lo {
            EndKind::Theta0End | EndKind::PolePoint if lo != 0.0 => {
                return Err(SamplerError::EndBoundMismatch { side: "lo", want: "0", got: lo });
            }
            EndKind::ThetaPiEnd => {
                return Err(SamplerError::EndBoundMismatch { side: "lo", want: "pi end only at hi", got: lo });
            }
            _ => {}
        }
        match self.end_hi {
            EndKind::ThetaPiEnd | EndKind::PolePoint if hi != std::f64::consts::PI => {
                return Err(SamplerError::EndBoundMismatch { side: "hi", want: "pi", got: hi });
            }
            EndKind::Theta0End => {
                return Err(SamplerError::EndBoundMismatch { side: "hi", want: "theta0 end only at lo", got: hi });
            }
            _ => {}
        }
        // kappa of the logarithmic pole ends must not vanish.
        if matches!(self.end_lo, EndKind::Theta0End) {
            if self.q == 0 {
                return Err(SamplerError::KappaZero(f64::INFINITY));
            }
            let kappa = self.qp as f64 / self.q as f64 + (1.5f64).sqrt();
            if kappa == 0.0 {
                return Err(SamplerError::KappaZero(self.qp as f64 / self.q as f64));
            }
        }
        if matches!(self.end_hi, EndKind::ThetaPiEnd) {
            if self.q == 0 {
                return Err(SamplerError::KappaZero(f64::INFINITY));
            }
            let kappa = -(self.qp as f64) / self.q as f64 + (1.5f64).sqrt();
            if kappa == 0.0 {
                return Err(SamplerError::KappaZero(-(self.qp as f64) / self.q as f64));
            }
        }
        Ok(ResolvedSpec { q: self.pair(), lo, hi, lo_angle, hi_angle })
    }

    /// Validate the analytic invariants: positivity of `alpha_Q`
    /// (exactly, when the bounds are anchors), the embedding bound
    /// `eps * alpha_Q < 1/2`, and profile constancy on collars.
    pub fn validate(&self) -> Result<ResolvedSpec, SamplerError> {
        let r = self.resolve()?;
        let q = r.q;

        // Exact positivity when both bounds are anchors; zeros of alpha
        // are tolerated exactly at convex-end anchors.
        if let (Some(lo), Some(hi)) = (&r.lo_angle, &r.hi_angle) {
            let allow_lo = matches!(self.end_lo, EndKind::InteriorConvex);
            let allow_hi = matches!(self.end_hi, EndKind::InteriorConvex);
            if alpha_positive_on(&q, lo, hi, allow_lo, allow_hi).is_err() {
                return Err(SamplerError::AlphaNotPositive { sigma: r.lo, value: alpha_q(&q, r.lo) });
            }
        }
        // Float probe for positivity and the embedding bound.
        let probes = 4096;
        for k in 0..=probes {
            let sigma = r.lo + (r.hi - r.lo) * k as f64 / probes as f64;
            let interior = sigma > r.lo && sigma < r.hi;
            let a = alpha_q(&q, sigma);
            if interior && a <= 0.0 {
                return Err(SamplerError::AlphaNotPositive { sigma, value: a });
            }
            let e = self.eps.eval(sigma);
            if e < 0.0 {
                return Err(SamplerError::EpsNegative { sigma, value: e });
            }
            if e * a >= 0.5 {
                return Err(SamplerError::EpsTooLarge { sigma, value: e * a });
            }
        }

        // Profiles must be constant where the end models blend.
        let mut collars: Vec<(&'static str, f64, f64)> = Vec::new();
        if self.end_lo != EndKind::None {
            collars.push(("lo", r.lo, (r.lo + 2.0 * self.rho0).min(r.hi)));
        }
        if self.end_hi != EndKind::None {
            collars.push(("hi", (r.hi - 2.0 * self.rho1).max(r.lo), r.hi));
        }
        for (side, a, b) in collars {
            for (name, prof) in
                [("a0", &self.a0), ("w0", &self.w0), ("v0", &self.v0), ("eps", &self.eps)]
            {
                let base = prof.eval((a + b) / 2.0);
                for k in 0..=64 {
                    let sigma = a + (b - a) * k as f64 / 64.0;
                    if (prof.eval(sigma) - base).abs() > 1e-9 {
                        return Err(SamplerError::ProfileNotConstant { name, side });
                    }
                }
            }
        }
        Ok(r)
    }

    /// The profile pair `(a, w)` with end-collar models spliced in.
    pub fn profile_at(&self, r: &ResolvedSpec, sigma: f64, v: f64) -> (f64, f64) {
        let a0 = self.a0.eval(sigma);
        let w0 = self.w0.eval(sigma);
        let v0 = self.v0.eval(sigma);
        let eps = self.eps.eval(sigma);
        let phase = v + v0;

        // Pick the governing end model, if any.
        let lo_active = self.end_lo != EndKind::None && sigma < r.lo + 2.0 * self.rho0;
        let hi_active = self.end_hi != EndKind::None && sigma > r.hi - 2.0 * self.rho1;
        let (kind, theta_star, rho, u) = if lo_active {
            (self.end_lo, r.lo, self.rho0, sigma - r.lo)
        } else if hi_active {
            (self.end_hi, r.hi, self.rho1, r.hi - sigma)
        } else {
            (EndKind::None, 0.0, 1.0, 0.0)
        };

        match kind {
            EndKind::None => (a0 + eps * phase.cos(), w0 - eps * phase.sin()),
            EndKind::PolePoint => {
                let bp = beta_prime(sigma, theta_star, rho);
                (a0 + eps * (1.0 - bp) * phase.cos(), w0 - eps * (1.0 - bp) * phase.sin())
            }
            EndKind::Theta0End | EndKind::ThetaPiEnd | EndKind::InteriorConvex => {
                let bp = beta_prime(sigma, theta_star, rho);
                let rate = match kind {
                    EndKind::Theta0End => self.qp as f64 / self.q as f64 + (1.5f64).sqrt(),
                    EndKind::ThetaPiEnd => -(self.qp as f64) / self.q as f64 + (1.5f64).sqrt(),
                    _ => zeta_rate(theta_star),
                };
                let amp = eps * (1.0 - bp) + u * bp;
                (
                    bp * u.ln() / rate + a0 + amp * phase.cos(),
                    (1.0 - bp) * w0 - amp * phase.sin(),
                )
            }
        }
    }
}

/// The end decay rate `zeta = sqrt6 sin^2 (1 + 3 cos^2) / (1 + 3 cos^4)`.
pub fn zeta_rate(theta: f64) -> f64 {
    let c = theta.cos();
    let sn2 = theta.sin().powi(2);
    SQRT6 * sn2 * (1.0 + 3.0 * c * c) / (1.0 + 3.0 * c.powi(4))
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// A sampled chart: the grid, the raw (unwrapped) image coordinates and
/// metadata.  Index layout is row-major in `sigma` then `v`.
#[derive(Debug, Clone)]
pub struct SampledChart {
    pub spec: ChartSpec,
    pub resolved: ResolvedSpec,
    pub sigma: Vec<f64>,
    pub v: Vec<f64>,
    /// `(s, t, theta, phi)` with `t`, `phi` unwrapped.
    pub points: Vec<[f64; 4]>,
    pub spec_hash: u64,
}

impl SampledChart {
    pub fn n_sigma(&self) -> usize {
        self.sigma.len()
    }
    pub fn n_v(&self) -> usize {
        self.v.len()
    }
    pub fn point(&self, i: usize, j: usize) -> [f64; 4] {
        self.points[i * self.v.len() + j]
    }
}

/// Sample the chart on an `n_sigma x n_v` grid.  Sides carrying an open
/// end model get a half-cell inset so the grid never touches the limit
/// angle; pole-point caps are sampled up to the pole itself.
pub fn sample_cylinder(
    spec: &ChartSpec,
    n_sigma: usize,
    n_v: usize,
    exec: Exec,
) -> Result<SampledChart, SamplerError> {
    if n_sigma < 3 || n_v < 3 {
        return Err(SamplerError::GridTooSmall);
    }
    let resolved = spec.validate()?;
    let half_lo = if spec.end_lo.is_open() { 0.5 } else { 0.0 };
    let half_hi = if spec.end_hi.is_open() { 0.5 } else { 0.0 };
    let denom = (n_sigma as f64 - 1.0) + half_lo + half_hi;
    let sigma: Vec<f64> = (0..n_sigma)
        .map(|i| resolved.lo + (resolved.hi - resolved.lo) * (i as f64 + half_lo) / denom)
        .collect();
    let v: Vec<f64> =
        (0..n_v).map(|j| 2.0 * std::f64::consts::PI * j as f64 / n_v as f64).collect();

    let q = resolved.q;
    let points = map2(n_sigma, n_v, exec, |i, j| {
        let sg = sigma[i];
        let vv = v[j];
        let (a, w) = spec.profile_at(&resolved, sg, vv);
        let c = sg.cos();
        [
            a,
            (q.p as f64) * vv + (1.0 - 3.0 * c * c) * w,
            sg,
            (q.pp as f64) * vv + SQRT6 * c * w,
        ]
    });

    let spec_hash = fnv1a64(
        serde_json::to_string(spec).unwrap_or_default().as_bytes(),
    );
    Ok(SampledChart { spec: spec.clone(), resolved, sigma, v, points, spec_hash })
}

/// Winding numbers of `t` and `phi` around the constant-`sigma` circle at
/// row `i`, computed from the unwrapped grid.
pub fn winding(chart: &SampledChart, i: usize) -> (f64, f64) {
    let n_v = chart.n_v();
    let q = chart.resolved.q;
    let mut sum_t = 0.0;
    let mut sum_phi = 0.0;
    for j in 0..n_v {
        let here = chart.point(i, j);
        let next = if j + 1 == n_v {
            let p = chart.point(i, 0);
            [
                p[0],
                p[1] + 2.0 * std::f64::consts::PI * q.p as f64,
                p[2],
                p[3] + 2.0 * std::f64::consts::PI * q.pp as f64,
            ]
        } else {
            chart.point(i, j + 1)
        };
        sum_t += next[1] - here[1];
        sum_phi += next[3] - here[3];
    }
    (sum_t / (2.0 * std::f64::consts::PI), sum_phi / (2.0 * std::f64::consts::PI))
}

/// Diagnostics produced by [`verify_chart`].
#[derive(Debug, Clone)]
pub struct ChartDiagnostics {
    /// Minimum of the discrete pullback of `d(alpha)` over interior nodes.
    pub min_pullback: f64,
    /// Sup of the relative deviation from `sqrt6 sin(sigma) alpha_Q`.
    pub max_rel_pullback_err: f64,
    /// Far-apart node pairs whose images coincide.
    pub collisions: Vec<(usize, usize, f64)>,
    /// Sup over deck-transformed nodes of the distance to the original
    /// image set, when a transform was requested.
    pub deck_max_dev: Option<f64>,
    /// Comparison scale: twice the largest neighbour image spacing.
    pub cell_scale: f64,
}

/// Ambient distance with wrapped `t` and `phi` (the product metric with
/// the flat bound `dphi^2`; an overestimate near the poles never hides a
/// true collision).
fn image_dist(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    let wrap = |x: f64| {
        let two_pi = 2.0 * std::f64::consts::PI;
        let mut d = (x % two_pi + two_pi) % two_pi;
        if d > std::f64::consts::PI {
            d = two_pi - d;
        }
        d
    };
    let ds = a[0] - b[0];
    let dt = wrap(a[1] - b[1]);
    let dth = a[2] - b[2];
    let dph = wrap(a[3] - b[3]);
    (ds * ds + dt * dt + dth * dth + dph * dph).sqrt()
}

struct SpatialHash {
    cell: f64,
    map: std::collections::HashMap<[i64; 4], Vec<usize>>,
}

impl SpatialHash {
    fn build(points: &[[f64; 4]], cell: f64) -> Self {
        let mut map: std::collections::HashMap<[i64; 4], Vec<usize>> = Default::default();
        for (k, p) in points.iter().enumerate() {
            map.entry(Self::key(p, cell)).or_default().push(k);
        }
        SpatialHash { cell, map }
    }
    fn key(p: &[f64; 4], cell: f64) -> [i64; 4] {
        [
            (p[0] / cell).floor() as i64,
            (p[1] / cell).floor() as i64,
            (p[2] / cell).floor() as i64,
            (p[3] / cell).floor() as i64,
        ]
    }
    fn near(&self, p: &[f64; 4]) -> impl Iterator<Item = usize> + '_ {
        let k = Self::key(p, self.cell);
        let mut out = Vec::new();
        for d0 in -1..=1i64 {
            for d1 in -1..=1i64 {
                for d2 in -1..=1i64 {
                    for d3 in -1..=1i64 {
                        if let Some(v) = self.map.get(&[k[0] + d0, k[1] + d1, k[2] + d2, k[3] + d3])
                        {
                            out.extend_from_slice(v);
                        }
                    }
                }
            }
        }
        out.into_iter()
    }
}

/// Collision threshold: far-apart grid nodes closer than this in the
/// ambient space indicate a sampling bug rather than geometry.
const COLLISION_TOL: f64 = 1e-8;

/// Verify a sampled chart: the discrete pullback of `d(alpha)` against
/// its closed form, an embedding scan, and (optionally) invariance under
/// one deck transform.
pub fn verify_chart(
    chart: &SampledChart,
    deck: Option<IntegerPair>,
    exec: Exec,
) -> Result<ChartDiagnostics, SamplerError> {
    let n_s = chart.n_sigma();
    let n_v = chart.n_v();
    if n_s < 3 || n_v < 3 {
        return Err(SamplerError::GridTooSmall);
    }
    let q = chart.resolved.q;
    let h_v = chart.v[1] - chart.v[0];
    let two_pi = 2.0 * std::f64::consts::PI;

    // Discrete pullback of d(alpha): first the components of the
    // pulled-back contact form along the grid directions (central
    // differences of the raw map), then the discrete curl of those, so
    // that discretization commutes with the exterior derivative.
    let alpha_cov = |sigma: f64| {
        let c = sigma.cos();
        let sn = sigma.sin();
        (-(1.0 - 3.0 * c * c), -SQRT6 * c * sn * sn)
    };
    // F at rows 1..n_s-1 (central sigma stencils); row r stores i = r + 1.
    let f_rows = n_s - 2;
    let f_grid = map2(f_rows, n_v, exec, |r, j| {
        let i = r + 1;
        let h_s = (chart.sigma[i + 1] - chart.sigma[i - 1]) / 2.0;
        let up = chart.point(i + 1, j);
        let dn = chart.point(i - 1, j);
        let t_sig: Vec<f64> = (0..4).map(|k| (up[k] - dn[k]) / (2.0 * h_s)).collect();
        let jp = (j + 1) % n_v;
        let jm = (j + n_v - 1) % n_v;
        let mut pp = chart.point(i, jp);
        let mut pm = chart.point(i, jm);
        if jp == 0 {
            pp[1] += two_pi * q.p as f64;
            pp[3] += two_pi * q.pp as f64;
        }
        if j == 0 {
            pm[1] -= two_pi * q.p as f64;
            pm[3] -= two_pi * q.pp as f64;
        }
        let t_v: Vec<f64> = (0..4).map(|k| (pp[k] - pm[k]) / (2.0 * h_v)).collect();
        let (a_t, a_p) = alpha_cov(chart.sigma[i]);
        // (pullback of alpha)(d/dsigma) and (d/dv).
        (a_t * t_sig[1] + a_p * t_sig[3], a_t * t_v[1] + a_p * t_v[3])
    });
    let f_at = |i: usize, j: usize| f_grid[(i - 1) * n_v + j];

    let rows = n_s - 4;
    if n_s < 5 {
        return Err(SamplerError::GridTooSmall);
    }
    let cells = map2(rows, n_v, exec, |r, j| {
        let i = r + 2;
        let h_s = (chart.sigma[i + 1] - chart.sigma[i - 1]) / 2.0;
        let jp = (j + 1) % n_v;
        let jm = (j + n_v - 1) % n_v;
        let d_sig_fv = (f_at(i + 1, j).1 - f_at(i - 1, j).1) / (2.0 * h_s);
        let d_v_fsig = (f_at(i, jp).0 - f_at(i, jm).0) / (2.0 * h_v);
        let val = d_sig_fv - d_v_fsig;
        let sigma = chart.sigma[i];
        let exact = SQRT6 * sigma.sin() * alpha_q(&q, sigma);
        (val, (val - exact).abs() / exact.abs().max(1e-300))
    });
    let mut min_pullback = f64::INFINITY;
    let mut max_rel = 0.0f64;
    for (v, rel) in cells {
        min_pullback = min_pullback.min(v);
        max_rel = max_rel.max(rel);
    }

    // Neighbour image spacing, for the deck comparison scale.
    let mut max_spacing = 0.0f64;
    for i in 0..n_s {
        for j in 0..n_v {
            let here = chart.point(i, j);
            if i + 1 < n_s {
                max_spacing = max_spacing.max(image_dist(&here, &chart.point(i + 1, j)));
            }
            max_spacing = max_spacing.max(image_dist(&here, &chart.point(i, (j + 1) % n_v)));
        }
    }

    // Embedding scan: hash every node and look for far-apart pairs with
    // coincident images.
    let wrapped: Vec<[f64; 4]> = chart
        .points
        .iter()
        .map(|p| {
            let wrap = |x: f64| ((x % two_pi) + two_pi) % two_pi;
            [p[0], wrap(p[1]), p[2], wrap(p[3])]
        })
        .collect();
    let hash = SpatialHash::build(&wrapped, 1e-6_f64.max(4.0 * COLLISION_TOL));
    let row_hits = map2(n_s, 1, exec, |i, _| {
        let mut hits = Vec::new();
        for j in 0..n_v {
            let k = i * n_v + j;
            let p = &wrapped[k];
            for other in hash.near(p) {
                if other <= k {
                    continue;
                }
                let (i2, j2) = (other / n_v, other % n_v);
                let dj = (j as i64 - j2 as i64).rem_euclid(n_v as i64);
                let dj = dj.min(n_v as i64 - dj);
                let far = (i as i64 - i2 as i64).abs().max(dj) > 2;
                if far {
                    let d = image_dist(p, &wrapped[other]);
                    if d < COLLISION_TOL * (1.0 + chart.points[k][0].abs()) {
                        hits.push((k, other, d));
                    }
                }
            }
        }
        hits
    });
    let collisions: Vec<(usize, usize, f64)> = row_hits.into_iter().flatten().collect();

    // Deck invariance: resample with the transformed profile and measure
    // the distance from each new image to the original image set.
    let deck_max_dev = match deck {
        None => None,
        Some(n_pair) => {
            let mut max_dev = 0.0f64;
            for i in 0..n_s {
                let sigma = chart.sigma[i];
                let aq = alpha_q(&q, sigma);
                let an = alpha_q(&n_pair, sigma);
                let shift = two_pi * an / aq;
                let w_add = two_pi
                    * ((q.p * n_pair.pp - q.pp * n_pair.p) as f64)
                    / aq;
                for j in 0..n_v {
                    let vv = chart.v[j];
                    let v_shifted = ((vv - shift) % two_pi + two_pi) % two_pi;
                    let (a, w) = chart.spec.profile_at(&chart.resolved, sigma, v_shifted);
                    let w = w + w_add;
                    let c = sigma.cos();
                    let img = [
                        a,
                        (q.p as f64) * vv + (1.0 - 3.0 * c * c) * w,
                        sigma,
                        (q.pp as f64) * vv + SQRT6 * c * w,
                    ];
                    let wrap = |x: f64| ((x % two_pi) + two_pi) % two_pi;
                    let img_w = [img[0], wrap(img[1]), img[2], wrap(img[3])];
                    // Nearest original image on the same sigma row.
                    let mut best = f64::INFINITY;
                    for jj in 0..n_v {
                        best = best.min(image_dist(&img_w, &wrapped[i * n_v + jj]));
                    }
                    max_dev = max_dev.max(best);
                }
            }
            Some(max_dev)
        }
    };

    Ok(ChartDiagnostics {
        min_pullback,
        max_rel_pullback_err: max_rel,
        collisions,
        deck_max_dev,
        cell_scale: 2.0 * max_spacing,
    })
}

/// Result of fitting the exponential approach of `theta` to its end limit.
#[derive(Debug, Clone, Copy)]
pub struct EndFit {
    pub fitted_rate: f64,
    pub target_rate: f64,
    pub rel_err: f64,
    pub samples: usize,
}

/// Least-squares fit of `log(theta - theta_E)` against `|s|` over the
/// chart nodes inside the flat part of the collar (`beta' = 1`).
pub fn fit_end_decay(chart: &SampledChart) -> Result<EndFit, SamplerError> {
    let spec = &chart.spec;
    let r = &chart.resolved;
    let (theta_star, rho, side_lo, kind) = if spec.end_lo.is_open() {
        (r.lo, spec.rho0, true, spec.end_lo)
    } else if spec.end_hi.is_open() {
        (r.hi, spec.rho1, false, spec.end_hi)
    } else {
        return Err(SamplerError::NoCollar("logarithmic"));
    };
    let target_rate = match kind {
        EndKind::Theta0End => (spec.qp as f64 / spec.q as f64 + (1.5f64).sqrt()).abs(),
        EndKind::ThetaPiEnd => (-(spec.qp as f64) / spec.q as f64 + (1.5f64).sqrt()).abs(),
        EndKind::InteriorConvex => zeta_rate(theta_star),
        _ => unreachable!("is_open"),
    };

    let flat = rho.powi(4);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, &sigma) in chart.sigma.iter().enumerate() {
        let u = if side_lo { sigma - theta_star } else { theta_star - sigma };
        if u > 0.0 && u <= flat {
            let s = chart.point(i, 0)[0];
            xs.push(s.abs());
            ys.push(u.ln());
        }
    }
    if xs.len() < 64 {
        return Err(SamplerError::TailTooShort { got: xs.len(), want: 64 });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let fitted_rate = -slope;
    Ok(EndFit {
        fitted_rate,
        target_rate,
        rel_err: (fitted_rate - target_rate).abs() / target_rate,
        samples: xs.len(),
    })
}

/// Lossless CSV of the intrinsic and image coordinates, one node per row.
pub fn export_csv<W: std::io::Write>(charts: &[SampledChart], out: &mut W) -> Result<(), SamplerError> {
    if charts.is_empty() {
        return Err(SamplerError::NothingToExport);
    }
    writeln!(out, "sigma,v,s,t,theta,phi")?;
    let two_pi = 2.0 * std::f64::consts::PI;
    let wrap = |x: f64| ((x % two_pi) + two_pi) % two_pi;
    for chart in charts {
        for i in 0..chart.n_sigma() {
            for j in 0..chart.n_v() {
                let p = chart.point(i, j);
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    fmt_g12(chart.sigma[i]),
                    fmt_g12(chart.v[j]),
                    fmt_g12(p[0]),
                    fmt_g12(wrap(p[1])),
                    fmt_g12(p[2]),
                    fmt_g12(wrap(p[3]))
                )?;
            }
        }
    }
    Ok(())
}

/// OBJ mesh under the fixed projection
/// `(x, y, z) = ((2 + tanh s) cos t, (2 + tanh s) sin t, cos theta)`,
/// with `phi` as the texture coordinate; one group per chart and quad
/// faces wrapping around in `v`.
pub fn export_obj<W: std::io::Write>(charts: &[SampledChart], out: &mut W) -> Result<(), SamplerError> {
    if charts.is_empty() {
        return Err(SamplerError::NothingToExport);
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let wrap = |x: f64| ((x % two_pi) + two_pi) % two_pi;
    let mut base = 1usize;
    for (k, chart) in charts.iter().enumerate() {
        writeln!(out, "g chart{k}")?;
        let (n_s, n_v) = (chart.n_sigma(), chart.n_v());
        for i in 0..n_s {
            for j in 0..n_v {
                let p = chart.point(i, j);
                let radius = 2.0 + p[0].tanh();
                let x = radius * p[1].cos();
                let y = radius * p[1].sin();
                let z = p[2].cos();
                writeln!(out, "v {} {} {}", fmt_g12(x), fmt_g12(y), fmt_g12(z))?;
                writeln!(out, "vt {} 0", fmt_g12(wrap(p[3]) / two_pi))?;
            }
        }
        for i in 0..n_s - 1 {
            for j in 0..n_v {
                let jn = (j + 1) % n_v;
                let a = base + i * n_v + j;
                let b = base + (i + 1) * n_v + j;
                let c = base + (i + 1) * n_v + jn;
                let d = base + i * n_v + jn;
                writeln!(out, "f {a}/{a} {b}/{b} {c}/{c} {d}/{d}")?;
            }
        }
        base += n_s * n_v;
    }
    Ok(())
}
