//! Positive line graphs and the non-emptiness decision.
//!
//! A line graph for a data set is the ordered angle spectrum with one
//! integer pair per edge.  The endpoint rules and the bivalent telescoping
//! rule force the labels completely, so there is a unique candidate; the
//! data set admits a positive line graph exactly when that candidate
//! passes the positivity constraints, and the moduli space is non-empty
//! exactly in that case (plus the degenerate one-angle cylinder family).

use serde_json::json;
use thiserror::Error;

use crate::algebra::{
    alpha_positive_on, bracket, Angle, IntegerPair, PositivityViolation,
};
use crate::dataset::{
    angle_spectrum, validate_data_set, AsymptoticDataSet, RuleFailure, RuleId, Sign,
    SpectrumEntry, ValidationReport,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineVertexKind {
    Mono,
    Bi,
}

#[derive(Debug, Clone)]
pub struct LineVertex {
    pub angle: Angle,
    pub plus_sum: IntegerPair,
    pub minus_sum: IntegerPair,
    pub plus_refs: Vec<usize>,
    pub minus_refs: Vec<usize>,
    pub pole_refs: Vec<usize>,
}

impl LineVertex {
    fn from_entry(e: &SpectrumEntry) -> Self {
        LineVertex {
            angle: e.angle,
            plus_sum: e.plus_sum,
            minus_sum: e.minus_sum,
            plus_refs: e.plus_refs.clone(),
            minus_refs: e.minus_refs.clone(),
            pole_refs: e.pole_refs.clone(),
        }
    }
}

/// Linear graph over the angle spectrum; `edges[i]` joins `vertices[i]`
/// and `vertices[i + 1]`.
#[derive(Debug, Clone)]
pub struct PositiveLineGraph {
    pub vertices: Vec<LineVertex>,
    pub edges: Vec<IntegerPair>,
}

impl PositiveLineGraph {
    pub fn kind(&self, i: usize) -> LineVertexKind {
        if i == 0 || i + 1 == self.vertices.len() {
            LineVertexKind::Mono
        } else {
            LineVertexKind::Bi
        }
    }

    /// Structural equality of angles and labels.
    pub fn label_isomorphic(&self, other: &PositiveLineGraph) -> bool {
        self.vertices.len() == other.vertices.len()
            && self.edges == other.edges
            && self
                .vertices
                .iter()
                .zip(&other.vertices)
                .all(|(a, b)| a.angle == b.angle)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let vertices: Vec<_> = self
            .vertices
            .iter()
            .enumerate()
            .map(|(i, v)| {
                json!({
                    "id": i,
                    "kind": match self.kind(i) { LineVertexKind::Mono => "mono", LineVertexKind::Bi => "bi" },
                    "angle": angle_json(&v.angle),
                    "label": {
                        "plus": pair_json(&v.plus_sum),
                        "minus": pair_json(&v.minus_sum),
                        "plus_refs": v.plus_refs,
                        "minus_refs": v.minus_refs,
                        "pole_refs": v.pole_refs,
                    },
                })
            })
            .collect();
        let edges: Vec<_> = self
            .edges
            .iter()
            .enumerate()
            .map(|(i, q)| json!({"src": i, "dst": i + 1, "q": q.p, "qp": q.pp}))
            .collect();
        json!({"kind": "line_graph", "vertices": vertices, "edges": edges})
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph linegraph {\n  rankdir=BT;\n");
        for (i, v) in self.vertices.iter().enumerate() {
            let angle = match &v.angle {
                Angle::Pole0 => "0".to_string(),
                Angle::PolePi => "pi".to_string(),
                Angle::Orbit(a) => {
                    format!("{:.4} {}", a.theta_approx(), a.pair())
                }
            };
            out.push_str(&format!("  v{i} [label=\"{angle}\"];\n"));
        }
        for (i, q) in self.edges.iter().enumerate() {
            out.push_str(&format!("  v{i} -- v{} [label=\"{q}\"];\n", i + 1));
        }
        out.push_str("}\n");
        out
    }
}

pub fn angle_json(a: &Angle) -> serde_json::Value {
    match a {
        Angle::Pole0 => json!("pole0"),
        Angle::PolePi => json!("polePi"),
        Angle::Orbit(c) => {
            let p = c.pair();
            json!({"p": p.p, "pp": p.pp})
        }
    }
}

fn pair_json(p: &IntegerPair) -> serde_json::Value {
    json!({"p": p.p, "pp": p.pp})
}

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("spectrum has fewer than two angles")]
    TooFewAngles,
    #[error("data set fails structural validation")]
    InvalidData,
    #[error("telescoped bottom label {got} differs from the prescribed {want}")]
    TelescopeMismatch { got: IntegerPair, want: IntegerPair },
}

/// Endpoint prescriptions of the labelling rules.
fn top_label(data: &AsymptoticDataSet, top: &LineVertex) -> IntegerPair {
    match top.angle {
        Angle::PolePi => {
            let plus = data.pair_sum(|e| e.delta.get() == -1 && e.sign == Sign::Plus);
            let minus = data.pair_sum(|e| e.delta.get() == -1 && e.sign == Sign::Minus);
            plus.sub(&minus).sub(&IntegerPair::new(0, data.c_minus as i64))
        }
        _ => top.minus_sum.neg(),
    }
}

fn bottom_label(data: &AsymptoticDataSet, bottom: &LineVertex) -> IntegerPair {
    match bottom.angle {
        Angle::Pole0 => {
            let minus = data.pair_sum(|e| e.delta.get() == 1 && e.sign == Sign::Minus);
            let plus = data.pair_sum(|e| e.delta.get() == 1 && e.sign == Sign::Plus);
            minus.sub(&plus).sub(&IntegerPair::new(0, data.c_plus as i64))
        }
        _ => bottom.minus_sum,
    }
}

/// Build the unique candidate line graph: fix the top edge from the
/// endpoint rule, telescope down through the bivalent vertices, and check
/// the bottom edge against its own rule.  The bottom-up construction is
/// repeated internally as a cross-check.
pub fn build_candidate_line_graph(data: &AsymptoticDataSet) -> Result<PositiveLineGraph, BuildError> {
    let spectrum = angle_spectrum(data).map_err(|_| BuildError::InvalidData)?;
    let n = spectrum.len();
    if n < 2 {
        return Err(BuildError::TooFewAngles);
    }
    let vertices: Vec<LineVertex> = spectrum.entries.iter().map(LineVertex::from_entry).collect();

    let mut edges = vec![IntegerPair::new(0, 0); n - 1];
    edges[n - 2] = top_label(data, &vertices[n - 1]);
    for i in (1..n - 1).rev() {
        let v = &vertices[i];
        // Lower edge = upper edge + (plus sum - minus sum) at the vertex.
        edges[i - 1] = edges[i].add(&v.plus_sum).sub(&v.minus_sum);
    }
    let want = bottom_label(data, &vertices[0]);
    if edges[0] != want {
        return Err(BuildError::TelescopeMismatch { got: edges[0], want });
    }

    // Bottom-up cross-check.
    let mut up = vec![IntegerPair::new(0, 0); n - 1];
    up[0] = want;
    for i in 1..n - 1 {
        let v = &vertices[i];
        up[i] = up[i - 1].sub(&v.plus_sum).add(&v.minus_sum);
    }
    debug_assert_eq!(up, edges, "top-down and bottom-up telescoping disagree");

    Ok(PositiveLineGraph { vertices, edges })
}

/// Report from [`validate_line_graph`]; failures cite (1.18) points.
#[derive(Debug, Clone, Default)]
pub struct LineGraphReport {
    pub failures: Vec<RuleFailure>,
}

impl LineGraphReport {
    pub fn pass(&self) -> bool {
        self.failures.is_empty()
    }
    fn fail(&mut self, point: u8, detail: impl Into<String>) {
        self.failures.push(RuleFailure { rule: RuleId::R1_18(point), detail: detail.into() });
    }
}

/// Check a line graph against the label prescriptions, the edge
/// positivity (with exact zeros permitted only at interior monovalent
/// endpoints) and the bracket constraints.
pub fn validate_line_graph(graph: &PositiveLineGraph, data: &AsymptoticDataSet) -> LineGraphReport {
    let mut report = LineGraphReport::default();
    let n = graph.vertices.len();
    if n < 2 || graph.edges.len() + 1 != n {
        report.fail(0, "graph is not linear over the spectrum");
        return report;
    }

    // Vertex set must be the spectrum, in order.
    match angle_spectrum(data) {
        Ok(spec) => {
            if spec.len() != n
                || spec.entries.iter().zip(&graph.vertices).any(|(s, v)| s.angle != v.angle)
            {
                report.fail(0, "vertex angles do not match the data-set spectrum");
                return report;
            }
        }
        Err(_) => {
            report.fail(0, "data set has no well-defined spectrum");
            return report;
        }
    }

    // Points 1-5: the labels are forced.
    let top_want = top_label(data, &graph.vertices[n - 1]);
    if graph.edges[n - 2] != top_want {
        let point = if graph.vertices[n - 1].angle == Angle::PolePi { 2 } else { 1 };
        report.fail(point, format!("top edge is {}, rules force {}", graph.edges[n - 2], top_want));
    }
    let bottom_want = bottom_label(data, &graph.vertices[0]);
    if graph.edges[0] != bottom_want {
        let point = if graph.vertices[0].angle == Angle::Pole0 { 4 } else { 3 };
        report.fail(point, format!("bottom edge is {}, rules force {}", graph.edges[0], bottom_want));
    }
    for i in 1..n - 1 {
        let v = &graph.vertices[i];
        let want = v.plus_sum.sub(&v.minus_sum);
        let got = graph.edges[i - 1].sub(&graph.edges[i]);
        if got != want {
            report.fail(5, format!("bivalent vertex {i}: edge difference {got}, rules force {want}"));
        }
    }

    // Point 6 plus the positivity consequence of the full rule set.
    for (i, q) in graph.edges.iter().enumerate() {
        if q.is_zero() {
            report.fail(6, format!("edge {i} carries the zero pair"));
            continue;
        }
        let lo = &graph.vertices[i];
        let hi = &graph.vertices[i + 1];

        // Zeros of alpha are allowed only at interior monovalent endpoints.
        let allow_lo = graph.kind(i) == LineVertexKind::Mono && !lo.angle.is_pole();
        let allow_hi = graph.kind(i + 1) == LineVertexKind::Mono && !hi.angle.is_pole();
        if let Err(violations) = alpha_positive_on(q, &lo.angle, &hi.angle, allow_lo, allow_hi) {
            for v in violations {
                report.fail(6, describe_violation(i, q, &v));
            }
        }

        // Strict bracket positivity at bivalent vertex angles.
        for (j, v) in [(i, lo), (i + 1, hi)] {
            if graph.kind(j) == LineVertexKind::Bi {
                if let Angle::Orbit(class) = v.angle {
                    let b = bracket(&class.pair(), q);
                    if b <= 0 {
                        report.fail(
                            6,
                            format!(
                                "edge {i}: bracket of bivalent vertex pair {} with {} is {}",
                                class.pair(),
                                q,
                                b
                            ),
                        );
                    }
                }
            }
        }

        // Sign clause: q' < 0 on an interior edge cannot mix p' signs.
        if q.pp < 0 && !lo.angle.is_pole() && !hi.angle.is_pole() {
            let lo_pp = lo.angle.as_orbit().expect("interior").pair().pp;
            let hi_pp = hi.angle.as_orbit().expect("interior").pair().pp;
            if (lo_pp > 0) != (hi_pp > 0) && (lo_pp > 0 || hi_pp > 0) {
                report.fail(
                    6,
                    format!("edge {i} has q' < 0 but only one vertex pair with positive p'"),
                );
            }
        }
    }

    report
}

fn describe_violation(edge: usize, q: &IntegerPair, v: &PositivityViolation) -> String {
    match v {
        PositivityViolation::Endpoint { at, sign } => format!(
            "edge {edge}: alpha_{q} has sign {sign} at endpoint theta ~ {:.4}",
            at.theta_approx()
        ),
        PositivityViolation::InteriorZero { at } => {
            format!("edge {edge}: alpha_{q} vanishes at the interior angle of {at}")
        }
        PositivityViolation::WrongSlopeZero { at } => {
            format!("edge {edge}: alpha_{q} has a wrong-slope zero at the angle of {at}")
        }
    }
}

/// Outcome of the non-emptiness decision.
#[derive(Debug, Clone)]
pub enum Verdict {
    Empty { reasons: Vec<RuleFailure> },
    /// The one-angle spectrum: the moduli space holds only R-invariant
    /// cylinders over the orbit of `pair`.
    NonemptyOneAngle { pair: IntegerPair },
    Nonempty { witness: PositiveLineGraph },
}

impl Verdict {
    pub fn is_nonempty(&self) -> bool {
        !matches!(self, Verdict::Empty { .. })
    }
}

/// Decide whether the moduli space of the data set is non-empty, running
/// the full validation pipeline and returning either a witness line graph
/// (or the one-angle tag) or the violated rules.
pub fn decide_nonempty(data: &AsymptoticDataSet) -> Verdict {
    let report: ValidationReport = validate_data_set(data);
    if !report.pass() {
        return Verdict::Empty { reasons: report.failures };
    }
    let spectrum = angle_spectrum(data).expect("validated");
    if spectrum.len() == 1 {
        // Validation already pinned the exact one-angle form.
        return Verdict::NonemptyOneAngle { pair: data.ends[0].pair() };
    }
    let graph = match build_candidate_line_graph(data) {
        Ok(g) => g,
        Err(err) => {
            return Verdict::Empty {
                reasons: vec![RuleFailure { rule: RuleId::R1_15, detail: err.to_string() }],
            }
        }
    };
    let lg = validate_line_graph(&graph, data);
    if lg.pass() {
        Verdict::Nonempty { witness: graph }
    } else {
        Verdict::Empty { reasons: lg.failures }
    }
}
