//! Exact integer predicates for Reeb orbit angles.
//!
//! Every ordering or sign decision made by the graph layers reduces to
//! integer arithmetic on ordered pairs `(p, p')`.  An orbit angle is the
//! unique root in `(0, pi)` of
//!
//! ```text
//! p' (1 - 3 cos^2 t) - sqrt(6) p cos t = 0,     p' cos t >= 0,
//! ```
//!
//! and the function `alpha_Q(t) = (1 - 3 cos^2 t) q' - sqrt(6) q cos t`
//! controls whether a cylinder labelled `Q` is an immersion over an angle
//! interval.  Floats appear only as advisory caches; no decision below
//! depends on one.
//!
//! Coordinates are bounded (see [`COORD_LIMIT`]) so that every product
//! formed here fits in `i128` with room to spare.

use std::cmp::Ordering;

use num::BigRational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest coordinate magnitude accepted for a pair used in exact
/// predicates.  With |p|, |p'| <= 2^40, brackets and squared comparisons
/// stay below 2^82, so `i128` arithmetic is exact for every reachable
/// input, including labels telescoped over millions of ends.
pub const COORD_LIMIT: i64 = 1 << 40;

pub const SQRT6: f64 = 2.449489742783178;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("pair ({0}, {1}) does not define an angle")]
    NotAnAngle(i64, i64),
    #[error("coordinate {0} exceeds the supported magnitude 2^40")]
    CoordTooLarge(i64),
    #[error("interval endpoints are not strictly increasing")]
    MalformedInterval,
}

/// Ordered pair of integers `(p, p')`, the universal label currency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntegerPair {
    pub p: i64,
    pub pp: i64,
}

impl IntegerPair {
    pub const fn new(p: i64, pp: i64) -> Self {
        IntegerPair { p, pp }
    }

    pub fn is_zero(&self) -> bool {
        self.p == 0 && self.pp == 0
    }

    pub fn checked(self) -> Result<Self, AlgebraError> {
        for c in [self.p, self.pp] {
            if c.abs() > COORD_LIMIT {
                return Err(AlgebraError::CoordTooLarge(c));
            }
        }
        Ok(self)
    }

    pub fn neg(&self) -> Self {
        IntegerPair::new(-self.p, -self.pp)
    }

    pub fn add(&self, other: &Self) -> Self {
        IntegerPair::new(self.p + other.p, self.pp + other.pp)
    }

    pub fn sub(&self, other: &Self) -> Self {
        IntegerPair::new(self.p - other.p, self.pp - other.pp)
    }

    pub fn scale(&self, k: i64) -> Self {
        IntegerPair::new(self.p * k, self.pp * k)
    }

    /// Greatest common divisor of the coordinate magnitudes; 0 only for
    /// the zero pair.
    pub fn gcd(&self) -> i64 {
        fn g(a: i64, b: i64) -> i64 {
            if b == 0 {
                a
            } else {
                g(b, a % b)
            }
        }
        g(self.p.abs().max(self.pp.abs()), self.p.abs().min(self.pp.abs()))
    }

    /// A pair is relatively prime when the coordinates have no common
    /// positive divisor other than 1; (0, 1), (0, -1) and (-1, -1) all
    /// qualify.
    pub fn is_primitive(&self) -> bool {
        !self.is_zero() && self.gcd() == 1
    }

    /// The primitive pair pointing the same way, plus the multiplier.
    pub fn primitive(&self) -> Option<(IntegerPair, i64)> {
        if self.is_zero() {
            return None;
        }
        let g = self.gcd();
        Some((IntegerPair::new(self.p / g, self.pp / g), g))
    }

    /// True when `self` is a positive rational multiple of `other`.
    pub fn positively_proportional(&self, other: &IntegerPair) -> bool {
        if self.is_zero() || other.is_zero() {
            return false;
        }
        bracket(self, other) == 0
            && (sign64(self.p) == sign64(other.p))
            && (sign64(self.pp) == sign64(other.pp))
    }
}

impl std::fmt::Display for IntegerPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.p, self.pp)
    }
}

fn sign64(x: i64) -> i8 {
    match x.cmp(&0) {
        Ordering::Less => -1,
        Ordering::Equal => 0,
        Ordering::Greater => 1,
    }
}

fn sign128(x: i128) -> i8 {
    match x.cmp(&0) {
        Ordering::Less => -1,
        Ordering::Equal => 0,
        Ordering::Greater => 1,
    }
}

/// The bracket `[P, Q] = p q' - p' q`, exact.
pub fn bracket(p: &IntegerPair, q: &IntegerPair) -> i128 {
    (p.p as i128) * (q.pp as i128) - (p.pp as i128) * (q.p as i128)
}

/// Whether `(p, p')` labels a Reeb orbit angle: the pair is non-zero and,
/// when `p < 0`, satisfies `|p'/p| > sqrt(3)/sqrt(2)` in the squared form
/// `2 p'^2 > 3 p^2`.
pub fn defines_angle(p: &IntegerPair) -> bool {
    if p.is_zero() {
        return false;
    }
    if p.p >= 0 {
        return true;
    }
    2 * (p.pp as i128) * (p.pp as i128) > 3 * (p.p as i128) * (p.p as i128)
}

/// Exact sign of `a + b * sqrt(6)`.
pub fn sign_a_plus_b_sqrt6(a: i64, b: i64) -> i8 {
    let (sa, sb) = (sign64(a), sign64(b));
    if sa >= 0 && sb >= 0 {
        return if sa == 0 && sb == 0 { 0 } else { 1 };
    }
    if sa <= 0 && sb <= 0 {
        return -1;
    }
    // Opposite signs: compare a^2 against 6 b^2 and let the positive term win.
    let a2 = (a as i128) * (a as i128);
    let b6 = 6 * (b as i128) * (b as i128);
    if sa > 0 {
        sign128(a2 - b6)
    } else {
        sign128(b6 - a2)
    }
}

/// Exact root data for `cos` of an orbit angle: the root of
/// `a2 c^2 + a1 sqrt(6) c + a0 = 0` selected by `p' c >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosDescriptor {
    /// Coefficient of `c^2`, equal to `3 p'`.
    pub a2: i64,
    /// Coefficient of `sqrt(6) c`, equal to `p`.
    pub a1_sqrt6: i64,
    /// Constant term, equal to `-p'`.
    pub a0: i64,
    /// Float approximation of the selected root.
    pub value: f64,
}

/// Exact-plus-float description of `cos(theta_P)`.
pub fn angle_cos(p: &IntegerPair) -> Result<CosDescriptor, AlgebraError> {
    if !defines_angle(p) {
        return Err(AlgebraError::NotAnAngle(p.p, p.pp));
    }
    Ok(CosDescriptor {
        a2: 3 * p.pp,
        a1_sqrt6: p.p,
        a0: -p.pp,
        value: cos_approx(p),
    })
}

fn cos_approx(pair: &IntegerPair) -> f64 {
    let (p, pp) = (pair.p as f64, pair.pp as f64);
    if pair.pp == 0 {
        return 0.0;
    }
    let r = (p * p + 2.0 * pp * pp).sqrt();
    if pair.p > 0 {
        // r - p cancels; use the conjugate form.
        SQRT6 * pp / (3.0 * (r + p))
    } else {
        SQRT6 * (r - p) / (6.0 * pp)
    }
}

/// An orbit angle in `(0, pi)`: a primitive admissible pair plus cached
/// floats (advisory only; ordering is exact).
#[derive(Debug, Clone, Copy)]
pub struct AngleClass {
    pair: IntegerPair,
    cos: f64,
    theta: f64,
}

impl AngleClass {
    pub fn from_pair(raw: IntegerPair) -> Result<Self, AlgebraError> {
        raw.checked()?;
        if !defines_angle(&raw) {
            return Err(AlgebraError::NotAnAngle(raw.p, raw.pp));
        }
        let (pair, _) = raw.primitive().expect("non-zero by defines_angle");
        let cos = cos_approx(&pair);
        Ok(AngleClass { pair, cos, theta: cos.acos() })
    }

    /// The primitive defining pair.
    pub fn pair(&self) -> IntegerPair {
        self.pair
    }

    pub fn cos_approx(&self) -> f64 {
        self.cos
    }

    pub fn theta_approx(&self) -> f64 {
        self.theta
    }
}

impl PartialEq for AngleClass {
    fn eq(&self, other: &Self) -> bool {
        compare_angles(&self.pair, &other.pair) == Ordering::Equal
    }
}
impl Eq for AngleClass {}

impl PartialOrd for AngleClass {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for AngleClass {
    fn cmp(&self, other: &Self) -> Ordering {
        compare_angles(&self.pair, &other.pair)
    }
}

/// Exact order of `theta_P` against `theta_Q`.
///
/// `cos(theta)` carries the sign of `p'`, which splits the comparison by
/// sign class; within one class the order is the sign of `[P, Q]`.  Pairs
/// that are positive multiples of each other are equal.
pub fn compare_angles(p: &IntegerPair, q: &IntegerPair) -> Ordering {
    debug_assert!(defines_angle(p) && defines_angle(q));
    let (sp, sq) = (sign64(p.pp), sign64(q.pp));
    match sp.cmp(&sq) {
        // Larger p' sign class means larger cosine, hence smaller angle.
        Ordering::Greater => Ordering::Less,
        Ordering::Less => Ordering::Greater,
        Ordering::Equal => {
            if sp == 0 {
                return Ordering::Equal; // both at pi/2
            }
            match sign128(bracket(p, q)) {
                1 => Ordering::Greater,
                -1 => Ordering::Less,
                _ => Ordering::Equal,
            }
        }
    }
}

/// `alpha_Q(theta) = (1 - 3 cos^2 theta) q' - sqrt(6) cos(theta) q`, float.
pub fn alpha_eval(q: &IntegerPair, theta: f64) -> f64 {
    let c = theta.cos();
    (1.0 - 3.0 * c * c) * (q.pp as f64) - SQRT6 * c * (q.p as f64)
}

/// Exact sign of `alpha_Q` at the orbit angle of `P`.
///
/// The defining pair of an angle is a positive multiple of
/// `(1 - 3 cos^2, sqrt(6) cos)` there, so the sign collapses to `[P, Q]`.
pub fn alpha_sign_at_orbit(q: &IntegerPair, p: &AngleClass) -> i8 {
    sign128(bracket(&p.pair(), q))
}

/// Exact sign of `alpha_Q` at a pole (`theta = 0` or `pi`).
pub fn alpha_sign_at_pole(q: &IntegerPair, at_pi: bool) -> i8 {
    // alpha_Q(0) = -2 q' - sqrt(6) q,   alpha_Q(pi) = -2 q' + sqrt(6) q.
    if at_pi {
        sign_a_plus_b_sqrt6(-2 * q.pp, q.p)
    } else {
        sign_a_plus_b_sqrt6(-2 * q.pp, -q.p)
    }
}

/// A point of the closed angle segment `[0, pi]` that the graph layers can
/// name exactly: one of the poles or an orbit angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Angle {
    Pole0,
    Orbit(AngleClass),
    PolePi,
}

impl Angle {
    pub fn orbit(pair: IntegerPair) -> Result<Self, AlgebraError> {
        Ok(Angle::Orbit(AngleClass::from_pair(pair)?))
    }

    pub fn theta_approx(&self) -> f64 {
        match self {
            Angle::Pole0 => 0.0,
            Angle::Orbit(a) => a.theta_approx(),
            Angle::PolePi => std::f64::consts::PI,
        }
    }

    pub fn is_pole(&self) -> bool {
        !matches!(self, Angle::Orbit(_))
    }

    pub fn as_orbit(&self) -> Option<&AngleClass> {
        match self {
            Angle::Orbit(a) => Some(a),
            _ => None,
        }
    }
}

impl PartialOrd for Angle {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Angle {
    fn cmp(&self, other: &Self) -> Ordering {
        use Angle::*;
        match (self, other) {
            (Pole0, Pole0) | (PolePi, PolePi) => Ordering::Equal,
            (Pole0, _) | (_, PolePi) => Ordering::Less,
            (_, Pole0) | (PolePi, _) => Ordering::Greater,
            (Orbit(a), Orbit(b)) => a.cmp(b),
        }
    }
}

/// An angle with an infinitesimal rational offset.  Offsets order points
/// that share an anchor; in every numeric statement they stand for
/// `anchor + offset * eps` in the limit of small positive `eps`.  Graph
/// constructions park trivalent vertices at such tokens so that all order
/// and sign tests stay exact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AngleToken {
    pub anchor: Angle,
    pub offset: BigRational,
}

impl AngleToken {
    pub fn exact(anchor: Angle) -> Self {
        AngleToken { anchor, offset: BigRational::from_integer(0.into()) }
    }

    pub fn with_offset(anchor: Angle, offset: BigRational) -> Self {
        debug_assert!(!(anchor == Angle::Pole0 && offset < BigRational::from_integer(0.into())));
        debug_assert!(!(anchor == Angle::PolePi && offset > BigRational::from_integer(0.into())));
        AngleToken { anchor, offset }
    }

    pub fn is_exact(&self) -> bool {
        self.offset == BigRational::from_integer(0.into())
    }

    /// Float rendering with a caller-chosen offset scale.
    pub fn theta_approx(&self, eps_scale: f64) -> f64 {
        let off: f64 = num::ToPrimitive::to_f64(&self.offset).unwrap_or(0.0);
        self.anchor.theta_approx() + off * eps_scale
    }
}

impl PartialOrd for AngleToken {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for AngleToken {
    fn cmp(&self, other: &Self) -> Ordering {
        self.anchor.cmp(&other.anchor).then_with(|| self.offset.cmp(&other.offset))
    }
}

/// One reason `alpha_Q` fails to be positive on an interval.
#[derive(Debug, Clone, PartialEq)]
pub enum PositivityViolation {
    /// Negative (or unallowed zero) value at an interval endpoint.
    Endpoint { at: Angle, sign: i8 },
    /// A zero of `alpha_Q` in the open interval.
    InteriorZero { at: IntegerPair },
    /// A zero at an endpoint anchor with the wrong slope for the interval.
    WrongSlopeZero { at: IntegerPair },
}

/// Exact decision of `alpha_Q > 0` on `[lo, hi]`, with an exact zero
/// permitted only at endpoints flagged `allow_zero_*`.
///
/// Endpoints may carry infinitesimal offsets; the verdict is then the one
/// holding for every sufficiently small positive offset scale.  The zeros
/// of `alpha_Q` on `[0, pi]` are exactly the angles of `Q` and `-Q`
/// (whichever are defined); the slope is positive at the former and
/// negative at the latter, which decides every one-sided case.
pub fn alpha_positive_on_tokens(
    q: &IntegerPair,
    lo: &AngleToken,
    hi: &AngleToken,
    allow_zero_lo: bool,
    allow_zero_hi: bool,
) -> Result<(), Vec<PositivityViolation>> {
    assert!(!q.is_zero(), "alpha label must be non-zero");
    if lo >= hi {
        // Callers validate interval shape first; treat as a violation.
        return Err(vec![PositivityViolation::Endpoint { at: lo.anchor, sign: -1 }]);
    }
    let mut violations = Vec::new();

    let zero_plus = AngleClass::from_pair(*q).ok(); // rising zero, theta_Q
    let zero_minus = AngleClass::from_pair(q.neg()).ok(); // falling zero

    let anchor_sign = |a: &Angle| -> i8 {
        match a {
            Angle::Pole0 => alpha_sign_at_pole(q, false),
            Angle::PolePi => alpha_sign_at_pole(q, true),
            Angle::Orbit(c) => alpha_sign_at_orbit(q, c),
        }
    };
    let rising_at = |a: &Angle| -> bool {
        matches!((a, &zero_plus), (Angle::Orbit(c), Some(z)) if c == z)
    };
    let falling_at = |a: &Angle| -> bool {
        matches!((a, &zero_minus), (Angle::Orbit(c), Some(z)) if c == z)
    };

    let zero = BigRational::from_integer(0.into());
    let single_anchor = lo.anchor == hi.anchor;

    // Left endpoint.
    let s_lo = anchor_sign(&lo.anchor);
    if lo.offset == zero {
        if s_lo < 0 {
            violations.push(PositivityViolation::Endpoint { at: lo.anchor, sign: s_lo });
        } else if s_lo == 0 {
            if !allow_zero_lo {
                violations.push(PositivityViolation::Endpoint { at: lo.anchor, sign: 0 });
            } else if !rising_at(&lo.anchor) {
                violations.push(PositivityViolation::WrongSlopeZero { at: *q });
            }
        }
    } else if s_lo < 0 {
        violations.push(PositivityViolation::Endpoint { at: lo.anchor, sign: s_lo });
    } else if s_lo == 0 {
        if lo.offset > zero {
            // Interval starts just above the anchor zero.
            if !rising_at(&lo.anchor) {
                violations.push(PositivityViolation::WrongSlopeZero { at: *q });
            }
        } else if !single_anchor || hi.offset > zero {
            // The anchor point itself sits strictly inside the interval.
            if let Angle::Orbit(c) = lo.anchor {
                violations.push(PositivityViolation::InteriorZero { at: c.pair() });
            }
        } else {
            // Whole interval just below the anchor: need a falling zero.
            if !falling_at(&lo.anchor) {
                violations.push(PositivityViolation::WrongSlopeZero { at: *q });
            }
        }
    }

    // Right endpoint.
    let s_hi = anchor_sign(&hi.anchor);
    if hi.offset == zero {
        if s_hi < 0 {
            violations.push(PositivityViolation::Endpoint { at: hi.anchor, sign: s_hi });
        } else if s_hi == 0 {
            if !allow_zero_hi {
                violations.push(PositivityViolation::Endpoint { at: hi.anchor, sign: 0 });
            } else if !falling_at(&hi.anchor) {
                violations.push(PositivityViolation::WrongSlopeZero { at: *q });
            }
        }
    } else if s_hi < 0 {
        violations.push(PositivityViolation::Endpoint { at: hi.anchor, sign: s_hi });
    } else if s_hi == 0 && !single_anchor {
        if hi.offset < zero {
            if !falling_at(&hi.anchor) {
                violations.push(PositivityViolation::WrongSlopeZero { at: *q });
            }
        } else if let Angle::Orbit(c) = hi.anchor {
            // Anchor zero strictly inside.
            violations.push(PositivityViolation::InteriorZero { at: c.pair() });
        }
    } else if s_hi == 0 && single_anchor && hi.offset > zero && lo.offset < zero {
        if let Angle::Orbit(c) = hi.anchor {
            violations.push(PositivityViolation::InteriorZero { at: c.pair() });
        }
    }

    // Zeros strictly between the anchors.
    for z in [&zero_plus, &zero_minus].into_iter().flatten() {
        let za = Angle::Orbit(*z);
        if za > lo.anchor && za < hi.anchor {
            violations.push(PositivityViolation::InteriorZero { at: z.pair() });
        }
    }

    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// Exact-anchor version of [`alpha_positive_on_tokens`].
pub fn alpha_positive_on(
    q: &IntegerPair,
    lo: &Angle,
    hi: &Angle,
    allow_zero_lo: bool,
    allow_zero_hi: bool,
) -> Result<(), Vec<PositivityViolation>> {
    alpha_positive_on_tokens(
        q,
        &AngleToken::exact(*lo),
        &AngleToken::exact(*hi),
        allow_zero_lo,
        allow_zero_hi,
    )
}
