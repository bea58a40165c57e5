//! Asymptotic data sets and their validation.
//!
//! A data set is a multiset of end 4-tuples `(delta, sign, (p, p'))`
//! together with a pair of non-negative intersection counts.  The rules
//! checked by [`validate_data_set`] are the necessary conditions for the
//! corresponding moduli space to be non-empty; the line-graph layer adds
//! the sufficient ones.

use std::cmp::Ordering;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::algebra::{defines_angle, Angle, AngleClass, IntegerPair, COORD_LIMIT};

/// Concave (`+`, `s -> +inf`) or convex (`-`, `s -> -inf`) end marker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn as_i64(&self) -> i64 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
    pub fn glyph(&self) -> &'static str {
        match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        }
    }
}

impl Serialize for Sign {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.glyph())
    }
}

impl<'de> Deserialize<'de> for Sign {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        match raw.as_str() {
            "+" => Ok(Sign::Plus),
            "-" | "\u{2212}" => Ok(Sign::Minus),
            other => Err(D::Error::custom(format!("sign must be \"+\" or \"-\", got {other:?}"))),
        }
    }
}

/// First component of an end tuple; restricted to -1, 0, 1 at parse time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct Delta(i8);

impl Delta {
    pub fn new(v: i8) -> Option<Self> {
        matches!(v, -1..=1).then_some(Delta(v))
    }
    pub fn get(&self) -> i8 {
        self.0
    }
}

impl<'de> Deserialize<'de> for Delta {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = i8::deserialize(d)?;
        Delta::new(raw).ok_or_else(|| D::Error::custom(format!("delta must be -1, 0 or 1, got {raw}")))
    }
}

/// One end 4-tuple `(delta, sign, (p, p'))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndTuple {
    pub delta: Delta,
    pub sign: Sign,
    pub p: i64,
    pub pp: i64,
}

impl EndTuple {
    pub fn new(delta: i8, sign: Sign, p: i64, pp: i64) -> Self {
        EndTuple { delta: Delta::new(delta).expect("delta in {-1,0,1}"), sign, p, pp }
    }

    pub fn pair(&self) -> IntegerPair {
        IntegerPair::new(self.p, self.pp)
    }
}

impl std::fmt::Display for EndTuple {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, ({}, {}))", self.delta.get(), self.sign.glyph(), self.p, self.pp)
    }
}

/// Multiset of end tuples plus the pair of intersection counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymptoticDataSet {
    pub ends: Vec<EndTuple>,
    pub c_plus: u32,
    pub c_minus: u32,
}

impl AsymptoticDataSet {
    pub fn new(ends: Vec<EndTuple>, c_plus: u32, c_minus: u32) -> Self {
        AsymptoticDataSet { ends, c_plus, c_minus }
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Sum of `sign * pair` over a filtered subset of ends.
    pub fn signed_sum<F: Fn(&EndTuple) -> bool>(&self, keep: F) -> IntegerPair {
        let mut acc = IntegerPair::new(0, 0);
        for e in self.ends.iter().filter(|e| keep(e)) {
            acc = acc.add(&e.pair().scale(e.sign.as_i64()));
        }
        acc
    }

    /// Sum of pairs (unsigned) over a filtered subset.
    pub fn pair_sum<F: Fn(&EndTuple) -> bool>(&self, keep: F) -> IntegerPair {
        let mut acc = IntegerPair::new(0, 0);
        for e in self.ends.iter().filter(|e| keep(e)) {
            acc = acc.add(&e.pair());
        }
        acc
    }
}

/// Tallies entering the dimension formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IndexCounts {
    pub n_plus: u32,
    pub n_minus: u32,
    pub n_hat: u32,
    pub c_hat: u32,
}

pub fn counts(data: &AsymptoticDataSet) -> IndexCounts {
    let mut n_plus = 0;
    let mut n_minus = 0;
    let mut n_hat = 0;
    for e in &data.ends {
        match (e.delta.get(), e.sign) {
            (0, Sign::Plus) => n_plus += 1,
            (0, Sign::Minus) => n_minus += 1,
            _ => n_hat += 1,
        }
    }
    IndexCounts { n_plus, n_minus, n_hat, c_hat: data.c_plus + data.c_minus }
}

/// Identifier of a validation rule, as reported to callers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuleId {
    Structural,
    R1_14,
    R1_15,
    R1_16,
    R1_17,
    /// Line-graph constraint; the payload is the list point (1-6).
    R1_18(u8),
}

impl RuleId {
    pub fn as_str(&self) -> String {
        match self {
            RuleId::Structural => "structural".to_string(),
            RuleId::R1_14 => "1.14".to_string(),
            RuleId::R1_15 => "1.15".to_string(),
            RuleId::R1_16 => "1.16".to_string(),
            RuleId::R1_17 => "1.17".to_string(),
            RuleId::R1_18(pt) => format!("1.18.{pt}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RuleFailure {
    pub rule: RuleId,
    pub detail: String,
}

/// Complete validation report; every rule is evaluated even after a
/// failure so the CLI can show everything at once.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub failures: Vec<RuleFailure>,
}

impl ValidationReport {
    pub fn pass(&self) -> bool {
        self.failures.is_empty()
    }
    fn fail(&mut self, rule: RuleId, detail: impl Into<String>) {
        self.failures.push(RuleFailure { rule, detail: detail.into() });
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum DatasetError {
    #[error("end {index} has pair (0, 0)")]
    ZeroPair { index: usize },
    #[error("end {index} pair does not define an angle")]
    NoAngle { index: usize },
    #[error("data set has no ends")]
    Empty,
}

/// True when `2 pp^2 > 3 p^2`, the squared form of `|pp/p| > sqrt(3/2)`.
fn ratio_exceeds(p: i64, pp: i64) -> bool {
    2 * (pp as i128) * (pp as i128) > 3 * (p as i128) * (p as i128)
}

fn end_rule_1_14(e: &EndTuple) -> Result<(), String> {
    let (p, pp) = (e.p, e.pp);
    match e.delta.get() {
        0 => {
            if p < 0 && !ratio_exceeds(p, pp) {
                return Err(format!("delta=0 end {e} has p<0 but |p'/p| <= sqrt(3/2)"));
            }
        }
        1 => {
            if p >= 0 {
                return Err(format!("delta=1 end {e} needs p < 0"));
            }
            // p'/p < -sqrt(3/2) with p<0 means p' > sqrt(3/2)|p|.
            let steep_pos = pp > 0 && ratio_exceeds(p, pp);
            match e.sign {
                Sign::Plus if !steep_pos => {
                    return Err(format!("delta=1 concave end {e} needs p'/p < -sqrt(3/2)"));
                }
                Sign::Minus if steep_pos => {
                    return Err(format!("delta=1 convex end {e} needs p'/p > -sqrt(3/2)"));
                }
                _ => {}
            }
        }
        -1 => {
            if p >= 0 {
                return Err(format!("delta=-1 end {e} needs p < 0"));
            }
            // p'/p > sqrt(3/2) with p<0 means p' < -sqrt(3/2)|p|.
            let steep_neg = pp < 0 && ratio_exceeds(p, pp);
            match e.sign {
                Sign::Plus if !steep_neg => {
                    return Err(format!("delta=-1 concave end {e} needs p'/p > sqrt(3/2)"));
                }
                Sign::Minus if steep_neg => {
                    return Err(format!("delta=-1 convex end {e} needs p'/p < sqrt(3/2)"));
                }
                _ => {}
            }
        }
        _ => unreachable!(),
    }
    Ok(())
}

/// One entry of the angle spectrum: an angle plus the pair sums of the
/// `(0, +)` and `(0, -)` ends defining it.
#[derive(Debug, Clone)]
pub struct SpectrumEntry {
    pub angle: Angle,
    pub plus_sum: IntegerPair,
    pub minus_sum: IntegerPair,
    pub plus_refs: Vec<usize>,
    pub minus_refs: Vec<usize>,
    /// Indices of the `(+-1, ...)` ends responsible for a pole entry.
    pub pole_refs: Vec<usize>,
}

impl SpectrumEntry {
    fn new(angle: Angle) -> Self {
        SpectrumEntry {
            angle,
            plus_sum: IntegerPair::new(0, 0),
            minus_sum: IntegerPair::new(0, 0),
            plus_refs: Vec::new(),
            minus_refs: Vec::new(),
            pole_refs: Vec::new(),
        }
    }
}

/// The ordered angle spectrum of a data set.
#[derive(Debug, Clone)]
pub struct AngleSpectrum {
    pub entries: Vec<SpectrumEntry>,
}

impl AngleSpectrum {
    pub fn len(&self) -> usize {
        self.entries.len()
    }
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
    pub fn min(&self) -> &SpectrumEntry {
        self.entries.first().expect("spectrum non-empty")
    }
    pub fn max(&self) -> &SpectrumEntry {
        self.entries.last().expect("spectrum non-empty")
    }
}

/// Build the sorted spectrum.  Requires every `(0, ...)` pair to define an
/// angle; pole entries appear exactly when mandated by the counts or by
/// `(+-1, ...)` ends.
pub fn angle_spectrum(data: &AsymptoticDataSet) -> Result<AngleSpectrum, DatasetError> {
    if data.ends.is_empty() {
        return Err(DatasetError::Empty);
    }
    let mut entries: Vec<SpectrumEntry> = Vec::new();

    let mut want_pole0 = data.c_plus > 0;
    let mut want_pole_pi = data.c_minus > 0;
    let mut pole0_refs = Vec::new();
    let mut pole_pi_refs = Vec::new();

    for (i, e) in data.ends.iter().enumerate() {
        match e.delta.get() {
            1 => {
                want_pole0 = true;
                pole0_refs.push(i);
            }
            -1 => {
                want_pole_pi = true;
                pole_pi_refs.push(i);
            }
            _ => {
                let pair = e.pair();
                if pair.is_zero() {
                    return Err(DatasetError::ZeroPair { index: i });
                }
                if !defines_angle(&pair) {
                    return Err(DatasetError::NoAngle { index: i });
                }
                let class = AngleClass::from_pair(pair).map_err(|_| DatasetError::NoAngle { index: i })?;
                let angle = Angle::Orbit(class);
                let slot = match entries.iter_mut().find(|s| s.angle == angle) {
                    Some(s) => s,
                    None => {
                        entries.push(SpectrumEntry::new(angle));
                        entries.last_mut().unwrap()
                    }
                };
                match e.sign {
                    Sign::Plus => {
                        slot.plus_sum = slot.plus_sum.add(&pair);
                        slot.plus_refs.push(i);
                    }
                    Sign::Minus => {
                        slot.minus_sum = slot.minus_sum.add(&pair);
                        slot.minus_refs.push(i);
                    }
                }
            }
        }
    }

    if want_pole0 {
        let mut s = SpectrumEntry::new(Angle::Pole0);
        s.pole_refs = pole0_refs;
        entries.push(s);
    }
    if want_pole_pi {
        let mut s = SpectrumEntry::new(Angle::PolePi);
        s.pole_refs = pole_pi_refs;
        entries.push(s);
    }

    entries.sort_by_key(|e| e.angle);
    Ok(AngleSpectrum { entries })
}

/// Evaluate every data-set constraint and return the full report.
pub fn validate_data_set(data: &AsymptoticDataSet) -> ValidationReport {
    let mut report = ValidationReport::default();

    if data.ends.is_empty() {
        report.fail(RuleId::Structural, "data set has no ends");
        return report;
    }
    for (i, e) in data.ends.iter().enumerate() {
        if e.pair().is_zero() {
            report.fail(RuleId::Structural, format!("end {i} has the zero pair"));
        }
        if e.p.abs() > COORD_LIMIT || e.pp.abs() > COORD_LIMIT {
            report.fail(RuleId::Structural, format!("end {i} coordinates exceed 2^40"));
        }
    }
    if !report.pass() {
        return report;
    }

    // (1.14): per-end slope constraints, exact squared form.
    for (i, e) in data.ends.iter().enumerate() {
        if let Err(msg) = end_rule_1_14(e) {
            report.fail(RuleId::R1_14, format!("end {i}: {msg}"));
        }
        if e.delta.get() == 0 && !defines_angle(&e.pair()) {
            report.fail(RuleId::R1_14, format!("end {i}: pair {} defines no angle", e.pair()));
        }
    }
    // (1.15): Stokes sums.
    let total = data.signed_sum(|_| true);
    if total.p != 0 {
        report.fail(RuleId::R1_15, format!("sum of sign*p is {}, expected 0", total.p));
    }
    let expected_pp = -((data.c_plus as i64) - (data.c_minus as i64));
    if total.pp != expected_pp {
        report.fail(
            RuleId::R1_15,
            format!("sum of sign*p' is {}, expected {}", total.pp, expected_pp),
        );
    }

    // (1.16): two-tuple cylinder sets need relatively prime pairs.
    if data.ends.len() == 2 && data.c_plus == 0 && data.c_minus == 0 {
        for (i, e) in data.ends.iter().enumerate() {
            if !e.pair().is_primitive() {
                report.fail(RuleId::R1_16, format!("end {i} pair {} is not relatively prime", e.pair()));
            }
        }
    }

    // (1.17): spectrum-shape constraints.  Needs the spectrum, hence (1.14).
    let structurally_ok = data
        .ends
        .iter()
        .all(|e| e.delta.get() != 0 || defines_angle(&e.pair()));
    if structurally_ok {
        let spectrum = angle_spectrum(data).expect("checked above");
        if spectrum.len() == 1 {
            let one_angle_form = data.c_plus == 0
                && data.c_minus == 0
                && data.ends.len() == 2
                && {
                    let a = &data.ends[0];
                    let b = &data.ends[1];
                    let opposite = a.sign != b.sign;
                    let same_pair = a.pair() == b.pair();
                    let zero_delta = a.delta.get() == 0 && b.delta.get() == 0;
                    let primitive = a.pair().is_primitive();
                    opposite && same_pair && zero_delta && primitive
                };
            if !one_angle_form {
                report.fail(
                    RuleId::R1_17,
                    "one-angle spectrum must be exactly {(0,+,P),(0,-,P)} with P relatively prime and c=(0,0)",
                );
            }
        } else {
            for entry in [spectrum.min(), spectrum.max()] {
                if !entry.plus_refs.is_empty() {
                    report.fail(
                        RuleId::R1_17,
                        format!(
                            "extremal angle (theta ~ {:.4}) is defined by a (0,+,...) end",
                            entry.angle.theta_approx()
                        ),
                    );
                }
            }
        }
    }

    report
}

/// Deterministic total order on end tuples, used only for canonical output.
pub fn end_order(a: &EndTuple, b: &EndTuple) -> Ordering {
    (a.delta.get(), a.sign.as_i64(), a.p, a.pp).cmp(&(b.delta.get(), b.sign.as_i64(), b.p, b.pp))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(ends: Vec<EndTuple>, c: (u32, u32)) -> AsymptoticDataSet {
        AsymptoticDataSet::new(ends, c.0, c.1)
    }

    fn e(delta: i8, sign: Sign, p: i64, pp: i64) -> EndTuple {
        EndTuple::new(delta, sign, p, pp)
    }

    #[test]
    fn validate_examples() {
        // R-invariant cylinder: passes.
        let cyl = ds(vec![e(0, Sign::Plus, 0, 1), e(0, Sign::Minus, 0, 1)], (0, 0));
        assert!(validate_data_set(&cyl).pass());

        // Opposite pairs break the p' Stokes sum.
        let bad = ds(vec![e(0, Sign::Plus, 0, 1), e(0, Sign::Minus, 0, -1)], (0, 0));
        let rep = validate_data_set(&bad);
        assert!(rep.failures.iter().any(|f| f.rule == RuleId::R1_15));

        // Non-primitive two-tuple set.
        let bad = ds(vec![e(0, Sign::Plus, 2, 2), e(0, Sign::Minus, 2, 2)], (0, 0));
        let rep = validate_data_set(&bad);
        assert!(rep.failures.iter().any(|f| f.rule == RuleId::R1_16));
        assert!(rep.failures.iter().any(|f| f.rule == RuleId::R1_17));
    }

    #[test]
    fn pants_passes() {
        let pants = ds(
            vec![e(0, Sign::Minus, 0, 1), e(0, Sign::Minus, 1, 1), e(0, Sign::Plus, 1, 2)],
            (0, 0),
        );
        assert!(validate_data_set(&pants).pass());
    }

    #[test]
    fn spectrum_ordering() {
        let pants = ds(
            vec![e(0, Sign::Minus, 0, 1), e(0, Sign::Minus, 1, 1), e(0, Sign::Plus, 1, 2)],
            (0, 0),
        );
        let spec = angle_spectrum(&pants).unwrap();
        assert_eq!(spec.len(), 3);
        let thetas: Vec<f64> = spec.entries.iter().map(|s| s.angle.theta_approx()).collect();
        assert!(thetas[0] < thetas[1] && thetas[1] < thetas[2]);
        assert_eq!(spec.entries[0].minus_refs, vec![0]);
        assert_eq!(spec.entries[1].plus_refs, vec![2]);
        assert_eq!(spec.entries[2].minus_refs, vec![1]);
    }

    #[test]
    fn spectrum_includes_pole() {
        // Partial data (not 1.15-consistent); the spectrum itself is defined.
        let d = ds(vec![e(1, Sign::Plus, -1, 2), e(0, Sign::Minus, 0, 1)], (0, 0));
        let spec = angle_spectrum(&d).unwrap();
        assert_eq!(spec.len(), 2);
        assert_eq!(spec.entries[0].angle, Angle::Pole0);
        assert_eq!(spec.entries[0].pole_refs, vec![0]);
    }

    #[test]
    fn one_angle_case() {
        let d = ds(vec![e(0, Sign::Plus, 1, 1), e(0, Sign::Minus, 1, 1)], (0, 0));
        let spec = angle_spectrum(&d).unwrap();
        assert_eq!(spec.len(), 1);
        assert!(validate_data_set(&d).pass());

        // Positive intersection counts put both poles into the spectrum,
        // so the one-angle clause cannot fire; validation passes and the
        // instance is left to the line-graph constraints.
        let d = ds(vec![e(0, Sign::Plus, 1, 1), e(0, Sign::Minus, 1, 1)], (1, 1));
        let spec = angle_spectrum(&d).unwrap();
        assert_eq!(spec.len(), 3);
        assert!(validate_data_set(&d).pass());

        // A lone (0,+) pair with no counterweight is caught by 1.17.
        let d = ds(vec![e(0, Sign::Plus, 1, 1), e(0, Sign::Plus, -1, -2)], (0, 0));
        let rep = validate_data_set(&d);
        assert!(rep.failures.iter().any(|f| f.rule == RuleId::R1_17));
    }

    #[test]
    fn counts_examples() {
        let cyl = ds(vec![e(0, Sign::Plus, 0, 1), e(0, Sign::Minus, 0, 1)], (0, 0));
        assert_eq!(counts(&cyl), IndexCounts { n_plus: 1, n_minus: 1, n_hat: 0, c_hat: 0 });
        let pants = ds(
            vec![e(0, Sign::Minus, 0, 1), e(0, Sign::Minus, 1, 1), e(0, Sign::Plus, 1, 2)],
            (0, 0),
        );
        assert_eq!(counts(&pants), IndexCounts { n_plus: 1, n_minus: 2, n_hat: 0, c_hat: 0 });
        let disk = ds(vec![e(0, Sign::Minus, 0, 1)], (1, 0));
        assert_eq!(counts(&disk), IndexCounts { n_plus: 0, n_minus: 1, n_hat: 0, c_hat: 1 });
    }

    #[test]
    fn json_schema() {
        let text = r#"{"ends":[{"delta":0,"sign":"+","p":1,"pp":2}],"c_plus":0,"c_minus":0}"#;
        let d = AsymptoticDataSet::from_json(text).unwrap();
        assert_eq!(d.ends[0], e(0, Sign::Plus, 1, 2));

        // Unknown fields are rejected.
        let bad = r#"{"ends":[],"c_plus":0,"c_minus":0,"extra":1}"#;
        assert!(AsymptoticDataSet::from_json(bad).is_err());
        let bad = r#"{"ends":[{"delta":0,"sign":"+","p":1,"pp":2,"x":3}],"c_plus":0,"c_minus":0}"#;
        assert!(AsymptoticDataSet::from_json(bad).is_err());
        // Out-of-range delta is a parse error.
        let bad = r#"{"ends":[{"delta":2,"sign":"+","p":1,"pp":2}],"c_plus":0,"c_minus":0}"#;
        assert!(AsymptoticDataSet::from_json(bad).is_err());
        // Unicode minus is accepted for the sign.
        let uni = "{\"ends\":[{\"delta\":0,\"sign\":\"\u{2212}\",\"p\":1,\"pp\":2}],\"c_plus\":0,\"c_minus\":0}";
        let d = AsymptoticDataSet::from_json(uni).unwrap();
        assert_eq!(d.ends[0].sign, Sign::Minus);
    }

    #[test]
    fn delta_pm1_rules() {
        // (1,+,(-1,2)): p<0, p' > sqrt(3/2)|p| -> ok.
        assert!(end_rule_1_14(&e(1, Sign::Plus, -1, 2)).is_ok());
        // (1,+,(-1,1)): 2*1 < 3*1 -> violates the concave steepness.
        assert!(end_rule_1_14(&e(1, Sign::Plus, -1, 1)).is_err());
        // (1,-,(-1,1)): shallow is exactly what the convex side wants.
        assert!(end_rule_1_14(&e(1, Sign::Minus, -1, 1)).is_ok());
        // (-1,+,(-2,-3)): p' < -sqrt(3/2)|p| -> ok.
        assert!(end_rule_1_14(&e(-1, Sign::Plus, -2, -3)).is_ok());
        assert!(end_rule_1_14(&e(-1, Sign::Plus, -2, 3)).is_err());
        assert!(end_rule_1_14(&e(-1, Sign::Minus, -2, 3)).is_ok());
        // delta=+-1 with p >= 0 always fails.
        assert!(end_rule_1_14(&e(1, Sign::Plus, 1, 5)).is_err());
    }
}
