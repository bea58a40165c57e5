//! Constraint checking for positive graphs and moduli-space graphs.

use std::collections::BTreeMap;

use crate::algebra::{
    alpha_positive_on_tokens, Angle, AngleClass, AngleToken, IntegerPair,
};
use crate::dataset::{counts, AsymptoticDataSet, Sign};

use super::graph::{PositiveGraph, VertexKind};

/// A violated constraint; `rule` names the list and point, for example
/// "5.7.4" or "3.1.2".
#[derive(Debug, Clone)]
pub struct ConstraintFailure {
    pub rule: &'static str,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct GraphReport {
    pub failures: Vec<ConstraintFailure>,
}

impl GraphReport {
    pub fn pass(&self) -> bool {
        self.failures.is_empty()
    }
    fn fail(&mut self, rule: &'static str, detail: impl Into<String>) {
        self.failures.push(ConstraintFailure { rule, detail: detail.into() });
    }
}

/// The integer pair attached to a monovalent or bivalent vertex: for a
/// monovalent vertex `+-Q_e` with `+` exactly when the vertex carries the
/// smaller angle of its edge; for a bivalent vertex the downward edge
/// label minus the upward one.
fn derived_pair(graph: &PositiveGraph, v: usize) -> Option<IntegerPair> {
    let vert = graph.vertex(v);
    let nbrs = graph.neighbors(v);
    match vert.kind {
        VertexKind::Mono(_) => {
            let (e, w) = *nbrs.first()?;
            let q = graph.edge(e).q;
            if vert.angle < graph.vertex(w).angle {
                Some(q)
            } else {
                Some(q.neg())
            }
        }
        VertexKind::Bi(_) => {
            if nbrs.len() != 2 {
                return None;
            }
            let (e1, w1) = nbrs[0];
            let (e2, _) = nbrs[1];
            let (down, up) = if graph.vertex(w1).angle < vert.angle { (e1, e2) } else { (e2, e1) };
            Some(graph.edge(down).q.sub(&graph.edge(up).q))
        }
        VertexKind::Tri => None,
    }
}

/// Check the positive-graph constraints: tree shape, the angle rules, the
/// edge label rules with the per-edge positivity of `alpha`, and the
/// bookkeeping that ties the labels back to the data set.
pub fn validate_positive_graph(graph: &PositiveGraph, data: &AsymptoticDataSet) -> GraphReport {
    let mut report = GraphReport::default();

    if !graph.is_tree() {
        report.fail("tree", "graph is not a connected tree");
        return report;
    }

    for (i, v) in graph.vertices() {
        let deg = graph.degree(i);
        let want = match v.kind {
            VertexKind::Mono(_) => 1,
            VertexKind::Bi(_) => 2,
            VertexKind::Tri => 3,
        };
        if deg != want {
            report.fail("valence", format!("vertex {i} is {} but has degree {deg}", v.kind.name()));
        }
        if !matches!(v.kind, VertexKind::Tri) && !v.angle.is_exact() {
            report.fail("5.6.3", format!("vertex {i} is {} at an offset angle", v.kind.name()));
        }
    }
    if !report.pass() {
        return report;
    }

    // (5.6): angle constraints.
    for (_, e) in graph.live_edges() {
        if graph.vertex(e.a).angle == graph.vertex(e.b).angle {
            report.fail("5.6.1", format!("edge {}-{} joins equal angles", e.a, e.b));
        }
    }
    for (i, v) in graph.vertices() {
        if matches!(v.kind, VertexKind::Mono(_)) {
            continue;
        }
        let mut above = 0;
        let mut below = 0;
        for (_, w) in graph.neighbors(i) {
            match graph.vertex(w).angle.cmp(&v.angle) {
                std::cmp::Ordering::Greater => above += 1,
                std::cmp::Ordering::Less => below += 1,
                std::cmp::Ordering::Equal => {}
            }
        }
        if above == 0 || below == 0 {
            report.fail(
                "5.6.2",
                format!("multivalent vertex {i} is extremal among its neighbours"),
            );
        }
    }

    // (5.7) points 1-3: label rules per vertex.
    for (i, v) in graph.vertices() {
        match &v.kind {
            VertexKind::Mono(_) => {
                if let Angle::Orbit(class) = &v.angle.anchor {
                    let p = derived_pair(graph, i).expect("mono has an edge");
                    if !p.positively_proportional(&class.pair()) {
                        report.fail(
                            "5.7.1",
                            format!("monovalent vertex {i}: pair {p} does not define its angle"),
                        );
                    }
                }
            }
            VertexKind::Bi(_) => {
                let nbrs = graph.neighbors(i);
                let (q1, q2) = (graph.edge(nbrs[0].0).q, graph.edge(nbrs[1].0).q);
                if q1 != q2 {
                    let d = q1.sub(&q2);
                    let defines = match &v.angle.anchor {
                        Angle::Orbit(class) => {
                            d.positively_proportional(&class.pair())
                                || d.neg().positively_proportional(&class.pair())
                        }
                        _ => false,
                    };
                    if !defines {
                        report.fail(
                            "5.7.2",
                            format!("bivalent vertex {i}: difference {d} does not define its angle"),
                        );
                    }
                }
            }
            VertexKind::Tri => {
                let nbrs = graph.neighbors(i);
                let mut up = Vec::new();
                let mut down = Vec::new();
                for (e, w) in &nbrs {
                    if graph.vertex(*w).angle > v.angle {
                        up.push(*e);
                    } else {
                        down.push(*e);
                    }
                }
                let (minority, majority) = if up.len() == 1 && down.len() == 2 {
                    (up[0], down)
                } else if down.len() == 1 && up.len() == 2 {
                    (down[0], up)
                } else {
                    // Already reported by 5.6.2.
                    continue;
                };
                let sum = graph.edge(majority[0]).q.add(&graph.edge(majority[1]).q);
                if graph.edge(minority).q != sum {
                    report.fail(
                        "5.7.3",
                        format!(
                            "trivalent vertex {i}: {} != {} + {}",
                            graph.edge(minority).q,
                            graph.edge(majority[0]).q,
                            graph.edge(majority[1]).q
                        ),
                    );
                }
            }
        }
    }

    // (5.7) point 4: positivity of alpha on each edge, zeros only at
    // interior monovalent endpoints.
    for (ei, e) in graph.live_edges() {
        let (lo, hi) = if graph.vertex(e.a).angle < graph.vertex(e.b).angle {
            (e.a, e.b)
        } else {
            (e.b, e.a)
        };
        let allow = |v: usize| {
            let vert = graph.vertex(v);
            matches!(vert.kind, VertexKind::Mono(_))
                && vert.angle.is_exact()
                && !vert.angle.anchor.is_pole()
        };
        if e.q.is_zero() {
            report.fail("5.7.4", format!("edge {ei} carries the zero pair"));
            continue;
        }
        if let Err(violations) = alpha_positive_on_tokens(
            &e.q,
            &graph.vertex(lo).angle,
            &graph.vertex(hi).angle,
            allow(lo),
            allow(hi),
        ) {
            for v in violations {
                report.fail("5.7.4", format!("edge {ei} ({}): {v:?}", e.q));
            }
        }
    }

    // (5.8): pole sums and the per-angle balance.
    check_data_bookkeeping(graph, data, &mut report);

    report
}

fn check_data_bookkeeping(
    graph: &PositiveGraph,
    data: &AsymptoticDataSet,
    report: &mut GraphReport,
) {
    let pole_sum = |at_pi: bool| -> IntegerPair {
        let target = if at_pi { Angle::PolePi } else { Angle::Pole0 };
        let mut acc = IntegerPair::new(0, 0);
        for (_, e) in graph.live_edges() {
            for v in [e.a, e.b] {
                let t = &graph.vertex(v).angle;
                if t.is_exact() && t.anchor == target {
                    acc = acc.add(&e.q);
                }
            }
        }
        acc
    };

    let want_pi = data
        .pair_sum(|e| e.delta.get() == -1 && e.sign == Sign::Plus)
        .sub(&data.pair_sum(|e| e.delta.get() == -1 && e.sign == Sign::Minus))
        .sub(&IntegerPair::new(0, data.c_minus as i64));
    let got_pi = pole_sum(true);
    let has_pi = graph
        .vertices()
        .any(|(_, v)| v.angle.is_exact() && v.angle.anchor == Angle::PolePi);
    if (has_pi || want_pi != IntegerPair::new(0, 0)) && got_pi != want_pi {
        report.fail("5.8.1", format!("theta=pi edge sum is {got_pi}, data forces {want_pi}"));
    }

    let want_0 = data
        .pair_sum(|e| e.delta.get() == 1 && e.sign == Sign::Minus)
        .sub(&data.pair_sum(|e| e.delta.get() == 1 && e.sign == Sign::Plus))
        .sub(&IntegerPair::new(0, data.c_plus as i64));
    let got_0 = pole_sum(false);
    let has_0 = graph
        .vertices()
        .any(|(_, v)| v.angle.is_exact() && v.angle.anchor == Angle::Pole0);
    if (has_0 || want_0 != IntegerPair::new(0, 0)) && got_0 != want_0 {
        report.fail("5.8.2", format!("theta=0 edge sum is {got_0}, data forces {want_0}"));
    }

    // Per interior angle: bivalent pair sum minus monovalent pair sum must
    // equal the (0,+) minus (0,-) pair sums of the data set there.  Angles
    // are keyed by the primitive defining pair.
    let mut balance: BTreeMap<(i64, i64), IntegerPair> = BTreeMap::new();
    let key_of = |class: &AngleClass| (class.pair().p, class.pair().pp);
    for (i, v) in graph.vertices() {
        if !v.angle.is_exact() {
            continue;
        }
        if let Angle::Orbit(class) = &v.angle.anchor {
            let signed = match v.kind {
                VertexKind::Bi(_) => derived_pair(graph, i),
                VertexKind::Mono(_) => derived_pair(graph, i).map(|p| p.neg()),
                VertexKind::Tri => None,
            };
            if let Some(p) = signed {
                let slot = balance.entry(key_of(class)).or_insert(IntegerPair::new(0, 0));
                *slot = slot.add(&p);
            }
        }
    }
    let mut want: BTreeMap<(i64, i64), IntegerPair> = BTreeMap::new();
    for e in &data.ends {
        if e.delta.get() != 0 {
            continue;
        }
        if let Ok(class) = AngleClass::from_pair(e.pair()) {
            let slot = want.entry(key_of(&class)).or_insert(IntegerPair::new(0, 0));
            *slot = slot.add(&e.pair().scale(e.sign.as_i64()));
        }
    }
    let keys: Vec<_> = balance.keys().chain(want.keys()).cloned().collect();
    for k in keys {
        let got = balance.get(&k).copied().unwrap_or(IntegerPair::new(0, 0));
        let wanted = want.get(&k).copied().unwrap_or(IntegerPair::new(0, 0));
        if got != wanted {
            report.fail(
                "5.8.3",
                format!(
                    "angle of ({}, {}): graph balance {got}, data forces {wanted}",
                    k.0, k.1
                ),
            );
        }
    }
}

/// Check the full moduli-space-graph conditions: everything a positive
/// graph needs, plus the vertex-label bijections, the partition labels,
/// the vertex counts and the genericity of the trivalent angles.
pub fn validate_moduli_graph(graph: &PositiveGraph, data: &AsymptoticDataSet) -> GraphReport {
    let mut report = validate_positive_graph(graph, data);

    let tally = counts(data);
    let n_mono = graph.vertices().filter(|(_, v)| matches!(v.kind, VertexKind::Mono(_))).count();
    let n_bi = graph.vertices().filter(|(_, v)| matches!(v.kind, VertexKind::Bi(_))).count();
    let n_tri = graph.trivalent_vertices().len();

    let mono_want = (tally.n_minus + tally.n_hat + tally.c_hat) as usize;
    if n_mono != mono_want {
        report.fail("3.1.count", format!("{n_mono} monovalent vertices, data forces {mono_want}"));
    }
    if mono_want >= 2 && n_tri != mono_want - 2 {
        report.fail(
            "3.1.count",
            format!("{n_tri} trivalent vertices, data forces {}", mono_want - 2),
        );
    }

    // Label bijection: every (0,-) and (+-1) end labels exactly one
    // monovalent vertex; the pole tags account for c_plus and c_minus.
    let mut used = vec![0u32; data.ends.len()];
    let mut plus_tags = 0;
    let mut minus_tags = 0;
    for (i, v) in graph.vertices() {
        if let VertexKind::Mono(m) = &v.kind {
            if m.elements.len() + (m.plus_tags + m.minus_tags) as usize != 1 {
                report.fail("3.1.label", format!("monovalent vertex {i} label is not a single end or tag"));
            }
            for &e in &m.elements {
                if e >= data.ends.len() {
                    report.fail("3.1.label", format!("vertex {i} references end {e} out of range"));
                    continue;
                }
                used[e] += 1;
                let end = &data.ends[e];
                let angle_ok = match end.delta.get() {
                    1 => v.angle == AngleToken::exact(Angle::Pole0),
                    -1 => v.angle == AngleToken::exact(Angle::PolePi),
                    _ => match AngleClass::from_pair(end.pair()) {
                        Ok(class) => v.angle == AngleToken::exact(Angle::Orbit(class)),
                        Err(_) => false,
                    },
                };
                if !angle_ok {
                    report.fail("3.1.label", format!("vertex {i} angle does not match end {e}"));
                }
                if end.delta.get() == 0 && end.sign == Sign::Plus {
                    report.fail("3.1.label", format!("vertex {i} is labeled by a (0,+,...) end"));
                }
                // Pole-labeled ends fix the sign of the edge pair outright;
                // the interior case is covered by 5.7.1.
                if end.delta.get() != 0 {
                    let want = match (end.delta.get(), end.sign) {
                        (1, Sign::Minus) | (-1, Sign::Plus) => end.pair(),
                        _ => end.pair().neg(),
                    };
                    let (e_idx, _) = graph.neighbors(i)[0];
                    let edge_q = graph.edge(e_idx).q;
                    if edge_q != want {
                        report.fail(
                            "3.1.1",
                            format!("vertex {i}: edge pair {edge_q}, label forces {want}"),
                        );
                    }
                }
            }
            plus_tags += m.plus_tags;
            minus_tags += m.minus_tags;
            if m.plus_tags > 0 && v.angle != AngleToken::exact(Angle::Pole0) {
                report.fail("3.1.label", format!("(1) tag at vertex {i} away from theta=0"));
            }
            if m.minus_tags > 0 && v.angle != AngleToken::exact(Angle::PolePi) {
                report.fail("3.1.label", format!("(-1) tag at vertex {i} away from theta=pi"));
            }
            if m.plus_tags + m.minus_tags == 1 && m.elements.is_empty() {
                let (e_idx, _) = graph.neighbors(i)[0];
                let q = graph.edge(e_idx).q;
                if q != IntegerPair::new(0, -1) {
                    report.fail("3.1.2", format!("tag vertex {i} edge pair {q}, rules force (0, -1)"));
                }
            }
        }
    }
    if plus_tags != data.c_plus {
        report.fail("3.1.label", format!("{plus_tags} (1) tags, data forces {}", data.c_plus));
    }
    if minus_tags != data.c_minus {
        report.fail("3.1.label", format!("{minus_tags} (-1) tags, data forces {}", data.c_minus));
    }
    for (e, end) in data.ends.iter().enumerate() {
        let expect = if end.delta.get() != 0 || end.sign == Sign::Minus { 1 } else { 0 };
        if used[e] != expect {
            report.fail(
                "3.1.label",
                format!("end {e} labels {} monovalent vertices, expected {expect}", used[e]),
            );
        }
    }

    // Partition labels on bivalent vertices.
    let mut part_used = vec![0u32; data.ends.len()];
    for (i, v) in graph.vertices() {
        if let VertexKind::Bi(b) = &v.kind {
            match &b.partition {
                None => report.fail("3.1.partition", format!("bivalent vertex {i} has no partition subset")),
                Some(subset) => {
                    if subset.is_empty() {
                        report.fail("3.1.partition", format!("vertex {i} has an empty partition subset"));
                    }
                    let mut sum = IntegerPair::new(0, 0);
                    for &e in subset {
                        if e >= data.ends.len() {
                            report.fail("3.1.partition", format!("vertex {i} references end {e}"));
                            continue;
                        }
                        part_used[e] += 1;
                        let end = &data.ends[e];
                        if end.delta.get() != 0 || end.sign != Sign::Plus {
                            report.fail(
                                "3.1.partition",
                                format!("vertex {i} partition holds non-(0,+) end {e}"),
                            );
                        }
                        sum = sum.add(&end.pair());
                        match AngleClass::from_pair(end.pair()) {
                            Ok(class) if v.angle == AngleToken::exact(Angle::Orbit(class)) => {}
                            _ => report.fail(
                                "3.1.partition",
                                format!("vertex {i} partition end {e} defines a different angle"),
                            ),
                        }
                    }
                    if let Some(p) = derived_pair(graph, i) {
                        if p != sum {
                            report.fail(
                                "3.1.3",
                                format!("vertex {i}: edge difference {p}, partition sums to {sum}"),
                            );
                        }
                    }
                }
            }
        }
    }
    if n_bi > 0 || tally.n_plus > 0 {
        for (e, end) in data.ends.iter().enumerate() {
            let expect = if end.delta.get() == 0 && end.sign == Sign::Plus { 1 } else { 0 };
            if part_used[e] != expect {
                report.fail(
                    "3.1.partition",
                    format!("(0,+) end {e} appears in {} partition subsets, expected {expect}", part_used[e]),
                );
            }
        }
    }

    // Trivalent angles are generic: pairwise distinct and distinct from
    // every monovalent or bivalent angle.
    let tri: Vec<(usize, AngleToken)> = graph
        .vertices()
        .filter(|(_, v)| v.kind == VertexKind::Tri)
        .map(|(i, v)| (i, v.angle.clone()))
        .collect();
    for (n, (i, ti)) in tri.iter().enumerate() {
        for (j, tj) in tri.iter().skip(n + 1) {
            if ti == tj {
                report.fail("3.1.angles", format!("trivalent vertices {i} and {j} share an angle"));
            }
        }
        for (j, v) in graph.vertices() {
            if v.kind != VertexKind::Tri && v.angle == *ti {
                report.fail(
                    "3.1.angles",
                    format!("trivalent vertex {i} shares its angle with vertex {j}"),
                );
            }
        }
    }

    report
}
