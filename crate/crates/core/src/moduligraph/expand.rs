//! Expansion of a positive line graph into a moduli-space graph.
//!
//! Each extremal vertex of the line graph fans out into a chain of
//! trivalent vertices capped by one monovalent vertex per contributing
//! end (and per pole tag); each interior angle with convex-end content
//! gains a trivalent vertex hanging the convex caps next to the spine.
//! All inserted trivalent vertices live at infinitesimal offset tokens,
//! so the result is generic by construction.

use num::BigRational;
use thiserror::Error;

use crate::algebra::{Angle, AngleToken, IntegerPair};
use crate::dataset::{AsymptoticDataSet, Sign};
use crate::linegraph::{validate_line_graph, PositiveLineGraph};

use super::graph::{BiPayload, ModuliSpaceGraph, MonoPayload, PositiveGraph, VertexKind};
use super::validate::validate_moduli_graph;

#[derive(Debug, Error)]
pub enum ExpandError {
    #[error("line graph does not validate for the data set: {0}")]
    InvalidLineGraph(String),
    #[error("delta {delta} exceeds half the minimal spectrum gap {gap}")]
    DeltaTooLarge { delta: f64, gap: f64 },
    #[error("delta must be positive")]
    DeltaNotPositive,
    #[error("expansion produced an invalid graph: {0}")]
    Internal(String),
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// One cap of a cluster: payload, the angle it sits at, and the label of
/// its incident edge.
struct Cap {
    payload: MonoPayload,
    anchor: Angle,
    edge_q: IntegerPair,
}

/// Hang a descending chain of trivalent vertices below `anchor`, capped
/// by `caps`, attached to `attach` by an edge labelled `q1`.  `mirror`
/// flips the construction upside down for the minimal angle.  Offsets are
/// confined to the open window `(off_lo, off_hi)` at `anchor`.  Returns
/// the index of the attachment edge.
#[allow(clippy::too_many_arguments)]
fn build_cluster(
    graph: &mut PositiveGraph,
    attach: usize,
    q1: IntegerPair,
    caps: Vec<Cap>,
    anchor: Angle,
    off_lo: BigRational,
    off_hi: BigRational,
    mirror: bool,
) -> usize {
    let n = caps.len();
    assert!(n >= 1);
    if n == 1 {
        let cap = &caps[0];
        debug_assert_eq!(cap.edge_q, q1, "single cap label must match the spine edge");
        let v = graph.add_vertex(
            AngleToken::exact(cap.anchor),
            VertexKind::Mono(caps.into_iter().next().unwrap().payload),
        );
        return graph.add_edge(attach, v, q1);
    }

    // n - 1 trivalent vertices at strictly ordered offsets inside the
    // window; index 0 is nearest the attachment.
    let step = (&off_hi - &off_lo) / BigRational::from_integer((n as i64).into());
    let tri: Vec<usize> = (1..n)
        .map(|k| {
            let off = if mirror {
                // Ascending cluster above a minimal angle: nearest the
                // attachment means the largest offset.
                &off_hi - &step * BigRational::from_integer((k as i64).into())
            } else {
                &off_lo + &step * BigRational::from_integer((k as i64).into())
            };
            graph.add_vertex(AngleToken::with_offset(anchor, off), VertexKind::Tri)
        })
        .collect();

    let mut q = q1;
    let attach_edge = graph.add_edge(attach, tri[0], q);
    for (k, cap) in caps.iter().enumerate().take(n - 1) {
        let cap_v = graph.add_vertex(AngleToken::exact(cap.anchor), VertexKind::Mono(cap.payload.clone()));
        graph.add_edge(tri[k], cap_v, cap.edge_q);
        let next = q.sub(&cap.edge_q);
        if k + 1 < n - 1 {
            graph.add_edge(tri[k], tri[k + 1], next);
        } else {
            let last = &caps[n - 1];
            debug_assert_eq!(next, last.edge_q, "cluster telescoping must close");
            let cap_v = graph
                .add_vertex(AngleToken::exact(last.anchor), VertexKind::Mono(last.payload.clone()));
            graph.add_edge(tri[k], cap_v, next);
        }
        q = next;
    }
    attach_edge
}

/// Caps for an extremal pole vertex: tags first, then the convex-side
/// elements, then the concave-side ones.  Edge labels follow the
/// monovalent label rules.
fn pole_caps(data: &AsymptoticDataSet, at_pi: bool) -> Vec<Cap> {
    let anchor = if at_pi { Angle::PolePi } else { Angle::Pole0 };
    let delta = if at_pi { -1 } else { 1 };
    let tags = if at_pi { data.c_minus } else { data.c_plus };
    let mut caps = Vec::new();
    for _ in 0..tags {
        caps.push(Cap {
            payload: MonoPayload::tag(at_pi),
            anchor,
            edge_q: IntegerPair::new(0, -1),
        });
    }
    for (i, e) in data.ends.iter().enumerate() {
        if e.delta.get() == delta && e.sign == Sign::Minus {
            let q = if at_pi { e.pair().neg() } else { e.pair() };
            caps.push(Cap { payload: MonoPayload::element(i), anchor, edge_q: q });
        }
    }
    for (i, e) in data.ends.iter().enumerate() {
        if e.delta.get() == delta && e.sign == Sign::Plus {
            let q = if at_pi { e.pair() } else { e.pair().neg() };
            caps.push(Cap { payload: MonoPayload::element(i), anchor, edge_q: q });
        }
    }
    caps
}

/// Caps for an extremal interior vertex: one per `(0,-)` end there; the
/// edge label is the pair itself at a minimal angle and its negative at a
/// maximal one.
fn interior_caps(data: &AsymptoticDataSet, refs: &[usize], anchor: Angle, at_top: bool) -> Vec<Cap> {
    refs.iter()
        .map(|&i| {
            let p = data.ends[i].pair();
            Cap {
                payload: MonoPayload::element(i),
                anchor,
                edge_q: if at_top { p.neg() } else { p },
            }
        })
        .collect()
}

/// Expand a validated line graph into a moduli-space graph.  `delta` only
/// scales how offset tokens render as floats; it must stay below half the
/// smallest spectrum gap so rendered angles cannot collide.
pub fn expand_to_moduli_graph(
    line: &PositiveLineGraph,
    data: &AsymptoticDataSet,
    delta: f64,
) -> Result<ModuliSpaceGraph, ExpandError> {
    let report = validate_line_graph(line, data);
    if !report.pass() {
        return Err(ExpandError::InvalidLineGraph(
            report.failures.iter().map(|f| f.rule.as_str()).collect::<Vec<_>>().join(", "),
        ));
    }
    if delta <= 0.0 {
        return Err(ExpandError::DeltaNotPositive);
    }
    let mut min_gap = f64::INFINITY;
    for w in line.vertices.windows(2) {
        min_gap = min_gap.min(w[1].angle.theta_approx() - w[0].angle.theta_approx());
    }
    if delta >= min_gap / 2.0 {
        return Err(ExpandError::DeltaTooLarge { delta, gap: min_gap });
    }

    let n = line.vertices.len();
    let mut graph = PositiveGraph::new();

    // Spine: interior vertices become bivalent placeholders; the extremes
    // are replaced by clusters below.
    let spine: Vec<usize> = line
        .vertices
        .iter()
        .map(|v| {
            graph.add_vertex(
                AngleToken::exact(v.angle),
                VertexKind::Bi(BiPayload::default()),
            )
        })
        .collect();
    let mut spine_edges = Vec::new();
    for i in 0..n - 1 {
        spine_edges.push(graph.add_edge(spine[i], spine[i + 1], line.edges[i]));
    }

    // Top cluster.
    {
        let top = &line.vertices[n - 1];
        let caps = match top.angle {
            Angle::PolePi => pole_caps(data, true),
            angle => interior_caps(data, &top.minus_refs, angle, true),
        };
        graph.remove_vertex(spine[n - 1]);
        graph.remove_edge(spine_edges[n - 2]);
        spine_edges[n - 2] = build_cluster(
            &mut graph,
            spine[n - 2],
            line.edges[n - 2],
            caps,
            top.angle,
            ratio(-1, 2),
            ratio(0, 1),
            false,
        );
    }

    // Bottom cluster (mirrored).  For a two-angle spectrum the attachment
    // is the lowest vertex of the freshly built top cluster.
    {
        let bottom = &line.vertices[0];
        let caps = match bottom.angle {
            Angle::Pole0 => pole_caps(data, false),
            angle => interior_caps(data, &bottom.minus_refs, angle, false),
        };
        let attach = graph.edge(spine_edges[0]).other(spine[0]);
        graph.remove_vertex(spine[0]);
        graph.remove_edge(spine_edges[0]);
        spine_edges[0] = build_cluster(
            &mut graph,
            attach,
            line.edges[0],
            caps,
            bottom.angle,
            ratio(0, 1),
            ratio(1, 2),
            true,
        );
    }

    // Interior vertices.
    for i in 1..n - 1 {
        let v = &line.vertices[i];
        let minus = &v.minus_refs;
        let plus = &v.plus_refs;
        if minus.is_empty() {
            // Pure concave content: the spine vertex becomes the bivalent
            // vertex labelled by the one-set partition.
            graph.vertex_mut(spine[i]).kind =
                VertexKind::Bi(BiPayload { partition: Some(plus.clone()) });
            continue;
        }
        let q_lower = line.edges[i - 1];
        let q_upper = line.edges[i];
        let p_minus = minus
            .iter()
            .fold(IntegerPair::new(0, 0), |acc, &r| acc.add(&data.ends[r].pair()));
        let caps = interior_caps(data, minus, v.angle, true);

        // Trivalent pivot just below the angle.
        let pivot = graph.add_vertex(
            AngleToken::with_offset(v.angle, ratio(-1, 2)),
            VertexKind::Tri,
        );
        // Reconnect the lower spine edge to the pivot.
        let lower_nbr = graph.edge(spine_edges[i - 1]).other(spine[i]);
        graph.remove_edge(spine_edges[i - 1]);
        spine_edges[i - 1] = graph.add_edge(lower_nbr, pivot, q_lower);

        if plus.is_empty() {
            // No bivalent vertex remains at this angle; the upper spine
            // edge also moves to the pivot.
            let upper_nbr = graph.edge(spine_edges[i]).other(spine[i]);
            graph.remove_edge(spine_edges[i]);
            spine_edges[i] = graph.add_edge(pivot, upper_nbr, q_upper);
            graph.remove_vertex(spine[i]);
        } else {
            // Bivalent vertex stays at the angle with the one-set
            // partition; the pivot joins it from below.
            graph.vertex_mut(spine[i]).kind =
                VertexKind::Bi(BiPayload { partition: Some(plus.clone()) });
            graph.add_edge(pivot, spine[i], q_lower.add(&p_minus));
        }

        // Hang the convex caps above the pivot, inside (-1/2, 0).
        build_cluster(
            &mut graph,
            pivot,
            p_minus.neg(),
            caps,
            v.angle,
            ratio(-1, 2),
            ratio(0, 1),
            false,
        );
    }

    let report = validate_moduli_graph(&graph, data);
    if !report.pass() {
        return Err(ExpandError::Internal(
            report
                .failures
                .iter()
                .map(|f| format!("{}: {}", f.rule, f.detail))
                .collect::<Vec<_>>()
                .join("; "),
        ));
    }
    Ok(ModuliSpaceGraph { graph })
}
