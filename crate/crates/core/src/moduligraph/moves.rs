//! Zipper moves on positive graphs and the linearization loop.
//!
//! A trivalent vertex with one upward edge descends (its mirror ascends)
//! past whatever blocks it, one move at a time; the last move of each
//! descent removes the vertex.  Running the descending vertices from the
//! bottom up and then the ascending ones from the top down empties the
//! graph of trivalent vertices, leaving a line graph.

use num::BigRational;
use thiserror::Error;

use crate::algebra::AngleToken;
use crate::dataset::{angle_spectrum, AsymptoticDataSet};
use crate::linegraph::{LineVertex, PositiveLineGraph};

use super::graph::{BiPayload, PositiveGraph, VertexKind};

#[derive(Debug, Error)]
pub enum MoveError {
    #[error("vertex {0} is not trivalent")]
    NotTrivalent(usize),
    #[error("no applicable move at vertex {vertex}: {reason}")]
    NoApplicableMove { vertex: usize, reason: String },
    #[error("graph is malformed: {0}")]
    Malformed(String),
}

/// Record of one applied move, including the termination metric before
/// and after: `(trivalent count, vertices strictly ahead of the mover)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MoveRecord {
    pub kind: u8,
    pub mirrored: bool,
    pub vertex: usize,
    pub metric_before: (usize, usize),
    pub metric_after: (usize, usize),
    /// False once the move eliminated the trivalent vertex.
    pub still_trivalent: bool,
}

/// A token strictly between `lo` and `hi`; `hug_hi` picks a point
/// infinitesimally below `hi`, otherwise infinitesimally above `lo`.
fn token_between(lo: &AngleToken, hi: &AngleToken, hug_hi: bool) -> AngleToken {
    debug_assert!(lo < hi);
    if lo.anchor == hi.anchor {
        let two = BigRational::from_integer(2.into());
        AngleToken::with_offset(lo.anchor, (&lo.offset + &hi.offset) / two)
    } else if hug_hi {
        let one = BigRational::from_integer(1.into());
        AngleToken::with_offset(hi.anchor, &hi.offset - one)
    } else {
        let one = BigRational::from_integer(1.into());
        AngleToken::with_offset(lo.anchor, &lo.offset + one)
    }
}

/// Direction a trivalent vertex moves: `Down` for one upward edge and two
/// downward ones, `Up` for the mirror image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dir {
    Down,
    Up,
}

struct TriShape {
    dir: Dir,
    /// The single edge on the minority side (upward for `Down`).
    behind_edge: usize,
    behind_vertex: usize,
    /// The two edges on the majority side, with their far vertices.
    ahead: [(usize, usize); 2],
}

fn classify(graph: &PositiveGraph, v: usize) -> Result<TriShape, MoveError> {
    if graph.vertex(v).kind != VertexKind::Tri {
        return Err(MoveError::NotTrivalent(v));
    }
    let nbrs = graph.neighbors(v);
    if nbrs.len() != 3 {
        return Err(MoveError::Malformed(format!("trivalent vertex {v} has degree {}", nbrs.len())));
    }
    let angle = graph.vertex(v).angle.clone();
    let mut up = Vec::new();
    let mut down = Vec::new();
    for (e, w) in nbrs {
        if graph.vertex(w).angle > angle {
            up.push((e, w));
        } else if graph.vertex(w).angle < angle {
            down.push((e, w));
        } else {
            return Err(MoveError::Malformed(format!("vertex {v} has a neighbour at its own angle")));
        }
    }
    match (up.len(), down.len()) {
        (1, 2) => Ok(TriShape {
            dir: Dir::Down,
            behind_edge: up[0].0,
            behind_vertex: up[0].1,
            ahead: [down[0], down[1]],
        }),
        (2, 1) => Ok(TriShape {
            dir: Dir::Up,
            behind_edge: down[0].0,
            behind_vertex: down[0].1,
            ahead: [up[0], up[1]],
        }),
        _ => Err(MoveError::Malformed(format!("vertex {v} does not straddle its neighbours"))),
    }
}

/// Vertices strictly ahead of the mover: the total size of the two
/// subtrees hanging off its majority-side edges.
fn ahead_count(graph: &PositiveGraph, v: usize) -> usize {
    match classify(graph, v) {
        Ok(shape) => {
            shape.ahead.iter().map(|&(e, w)| graph.subtree_size(w, e)).sum()
        }
        Err(_) => 0,
    }
}

fn metric(graph: &PositiveGraph, v: usize) -> (usize, usize) {
    (graph.trivalent_vertices().len(), ahead_count(graph, v))
}

/// Apply one move to the trivalent vertex `o`, in place.
fn apply_move_mut(graph: &mut PositiveGraph, o: usize) -> Result<MoveRecord, MoveError> {
    let metric_before = metric(graph, o);
    let shape = classify(graph, o)?;
    let dir = shape.dir;
    // The blocking angle: the ahead-side far angle nearest the mover.
    let (a0, a1) = (graph.vertex(shape.ahead[0].1).angle.clone(), graph.vertex(shape.ahead[1].1).angle.clone());
    let blocker_angle = match dir {
        Dir::Down => a0.clone().max(a1.clone()),
        Dir::Up => a0.clone().min(a1.clone()),
    };
    let blockers: Vec<(usize, usize)> = shape
        .ahead
        .iter()
        .copied()
        .filter(|&(_, w)| graph.vertex(w).angle == blocker_angle)
        .collect();
    let other: Vec<(usize, usize)> = shape
        .ahead
        .iter()
        .copied()
        .filter(|&(_, w)| graph.vertex(w).angle != blocker_angle)
        .collect();

    let finish = |graph: &PositiveGraph, kind: u8, o: usize| -> MoveRecord {
        let still = graph.verts[o].is_some() && graph.vertex(o).kind == VertexKind::Tri;
        MoveRecord {
            kind,
            mirrored: dir == Dir::Up,
            vertex: o,
            metric_before,
            metric_after: (
                graph.trivalent_vertices().len(),
                if still { ahead_count(graph, o) } else { 0 },
            ),
            still_trivalent: still,
        }
    };

    if blockers.len() == 1 {
        let (b_edge, b) = blockers[0];
        let (o_edge, o_far) = other[0];
        match graph.vertex(b).kind.clone() {
            VertexKind::Bi(_) => {
                // Move 1: the bivalent blocker hops to the behind side,
                // payload and all.
                let b_nbrs = graph.neighbors(b);
                let (far_edge, far) = b_nbrs
                    .into_iter()
                    .find(|&(e, _)| e != b_edge)
                    .ok_or_else(|| MoveError::Malformed("bivalent blocker has one edge".into()))?;
                let q_far = graph.edge(far_edge).q;
                let q_other = graph.edge(o_edge).q;
                let q_behind = graph.edge(shape.behind_edge).q;

                // Rewire: behind_vertex -- b -- o, and o keeps the other
                // branch plus the blocker's far branch.
                graph.remove_edge(shape.behind_edge);
                graph.remove_edge(b_edge);
                graph.remove_edge(far_edge);
                graph.add_edge(shape.behind_vertex, b, q_behind);
                graph.add_edge(b, o, q_other.add(&q_far));
                graph.add_edge(o, far, q_far);

                // The mover slides past the blocker's angle.
                let far_angles = [graph.vertex(o_far).angle.clone(), graph.vertex(far).angle.clone()];
                let new_angle = match dir {
                    Dir::Down => {
                        let floor = far_angles.iter().max().unwrap();
                        token_between(floor, &blocker_angle, true)
                    }
                    Dir::Up => {
                        let ceil = far_angles.iter().min().unwrap();
                        token_between(&blocker_angle, ceil, false)
                    }
                };
                graph.vertex_mut(o).angle = new_angle;
                Ok(finish(graph, 1, o))
            }
            VertexKind::Tri => {
                // Move 3: swap past an opposing trivalent vertex.
                let b_shape = classify(graph, b)?;
                if b_shape.dir == dir {
                    return Err(MoveError::NoApplicableMove {
                        vertex: o,
                        reason: "trivalent blocker moves the same way".into(),
                    });
                }
                // b's edges: e0 = toward o, e4 = its behind edge, e3 = other.
                let e0 = b_edge;
                let (e3, f3) = b_shape
                    .ahead
                    .iter()
                    .copied()
                    .find(|&(e, _)| e != e0)
                    .ok_or_else(|| MoveError::Malformed("blocker shares both ahead edges".into()))?;
                let (e4, f4) = (b_shape.behind_edge, b_shape.behind_vertex);
                let (e1, f1) = (shape.behind_edge, shape.behind_vertex);
                let (e2, f2) = (o_edge, o_far);

                let (q1, q2, q3, q4) =
                    (graph.edge(e1).q, graph.edge(e2).q, graph.edge(e3).q, graph.edge(e4).q);
                let swap_q = q2.add(&q4);
                debug_assert_eq!(swap_q, q1.add(&q3), "swap label identity");

                // After the swap, o's ahead side is {e2, e4} and b's is
                // {e1, e3}; each must clear its new far vertices.
                let (o_new, b_new) = match dir {
                    Dir::Down => {
                        let floor = graph.vertex(f2).angle.clone().max(graph.vertex(f4).angle.clone());
                        let ceil = graph.vertex(f1).angle.clone().min(graph.vertex(f3).angle.clone());
                        if ceil <= graph.vertex(o).angle {
                            return Err(MoveError::NoApplicableMove {
                                vertex: o,
                                reason: "no room above the mover for the swapped vertex".into(),
                            });
                        }
                        (
                            token_between(&floor, &blocker_angle, true),
                            token_between(&graph.vertex(o).angle, &ceil, false),
                        )
                    }
                    Dir::Up => {
                        let ceil = graph.vertex(f2).angle.clone().min(graph.vertex(f4).angle.clone());
                        let floor = graph.vertex(f1).angle.clone().max(graph.vertex(f3).angle.clone());
                        if floor >= graph.vertex(o).angle {
                            return Err(MoveError::NoApplicableMove {
                                vertex: o,
                                reason: "no room below the mover for the swapped vertex".into(),
                            });
                        }
                        (
                            token_between(&blocker_angle, &ceil, false),
                            token_between(&floor, &graph.vertex(o).angle, true),
                        )
                    }
                };

                graph.remove_edge(e0);
                graph.remove_edge(e1);
                graph.remove_edge(e2);
                graph.remove_edge(e3);
                graph.remove_edge(e4);
                graph.add_edge(o, b, swap_q);
                graph.add_edge(b, f1, q1);
                graph.add_edge(b, f3, q3);
                graph.add_edge(o, f2, q2);
                graph.add_edge(o, f4, q4);
                graph.vertex_mut(o).angle = o_new;
                graph.vertex_mut(b).angle = b_new;
                Ok(finish(graph, 3, o))
            }
            VertexKind::Mono(_) => {
                // Move 4: the mover lands on the blocker's angle as a
                // bivalent vertex; the monovalent branch disappears.
                if blocker_angle.anchor.is_pole() || !blocker_angle.is_exact() {
                    return Err(MoveError::Malformed(
                        "single monovalent blocker at a pole or offset angle".into(),
                    ));
                }
                graph.remove_edge(b_edge);
                graph.remove_vertex(b);
                graph.vertex_mut(o).angle = blocker_angle;
                graph.vertex_mut(o).kind = VertexKind::Bi(BiPayload::default());
                Ok(finish(graph, 4, o))
            }
        }
    } else {
        // Two blockers at the same angle.
        let (ea, va) = blockers[0];
        let (eb, vb) = blockers[1];
        let kinds = (graph.vertex(va).kind.clone(), graph.vertex(vb).kind.clone());
        match kinds {
            (VertexKind::Bi(pa), VertexKind::Bi(pb)) => {
                // Move 2: merge the two bivalent blockers into one that
                // hops behind the mover.
                let (fa_edge, fa) = graph
                    .neighbors(va)
                    .into_iter()
                    .find(|&(e, _)| e != ea)
                    .ok_or_else(|| MoveError::Malformed("bivalent blocker has one edge".into()))?;
                let (fb_edge, fb) = graph
                    .neighbors(vb)
                    .into_iter()
                    .find(|&(e, _)| e != eb)
                    .ok_or_else(|| MoveError::Malformed("bivalent blocker has one edge".into()))?;
                let q_fa = graph.edge(fa_edge).q;
                let q_fb = graph.edge(fb_edge).q;
                let q_behind = graph.edge(shape.behind_edge).q;

                let partition = match (pa.partition, pb.partition) {
                    (Some(mut x), Some(y)) => {
                        x.extend(y);
                        x.sort_unstable();
                        Some(x)
                    }
                    (x, y) => x.or(y),
                };

                graph.remove_edge(shape.behind_edge);
                graph.remove_edge(ea);
                graph.remove_edge(eb);
                graph.remove_edge(fa_edge);
                graph.remove_edge(fb_edge);
                graph.remove_vertex(vb);
                graph.vertex_mut(va).kind = VertexKind::Bi(BiPayload { partition });
                graph.add_edge(shape.behind_vertex, va, q_behind);
                graph.add_edge(va, o, q_fa.add(&q_fb));
                graph.add_edge(o, fa, q_fa);
                graph.add_edge(o, fb, q_fb);

                let far_angles = [graph.vertex(fa).angle.clone(), graph.vertex(fb).angle.clone()];
                let new_angle = match dir {
                    Dir::Down => token_between(far_angles.iter().max().unwrap(), &blocker_angle, true),
                    Dir::Up => token_between(&blocker_angle, far_angles.iter().min().unwrap(), false),
                };
                graph.vertex_mut(o).angle = new_angle;
                Ok(finish(graph, 2, o))
            }
            (VertexKind::Bi(pp), VertexKind::Mono(_)) | (VertexKind::Mono(_), VertexKind::Bi(pp)) => {
                // Move 5: the mover and the monovalent blocker vanish; the
                // bivalent blocker absorbs the junction.
                let (bi_v, bi_e, m_v, m_e) =
                    if matches!(graph.vertex(va).kind, VertexKind::Bi(_)) {
                        (va, ea, vb, eb)
                    } else {
                        (vb, eb, va, ea)
                    };
                let (far_edge, far) = graph
                    .neighbors(bi_v)
                    .into_iter()
                    .find(|&(e, _)| e != bi_e)
                    .ok_or_else(|| MoveError::Malformed("bivalent blocker has one edge".into()))?;
                let q_far = graph.edge(far_edge).q;
                let q_behind = graph.edge(shape.behind_edge).q;
                graph.remove_edge(shape.behind_edge);
                graph.remove_edge(bi_e);
                graph.remove_edge(m_e);
                graph.remove_edge(far_edge);
                graph.remove_vertex(bi_v);
                graph.remove_vertex(m_v);
                graph.vertex_mut(o).angle = blocker_angle;
                graph.vertex_mut(o).kind = VertexKind::Bi(BiPayload { partition: pp.partition });
                graph.add_edge(o, far, q_far);
                graph.add_edge(o, shape.behind_vertex, q_behind);
                Ok(finish(graph, 5, o))
            }
            (VertexKind::Mono(ma), VertexKind::Mono(mb)) => {
                // Moves 6 and 7: both branches collapse into one
                // monovalent vertex at the blocking angle (interior or
                // pole respectively).
                let merged = ma.merge(&mb);
                graph.remove_edge(ea);
                graph.remove_edge(eb);
                graph.remove_vertex(va);
                graph.remove_vertex(vb);
                graph.vertex_mut(o).angle = blocker_angle.clone();
                graph.vertex_mut(o).kind = VertexKind::Mono(merged);
                let kind = if blocker_angle.anchor.is_pole() { 7 } else { 6 };
                Ok(finish(graph, kind, o))
            }
            _ => Err(MoveError::NoApplicableMove {
                vertex: o,
                reason: "blockers include a trivalent vertex at a shared angle".into(),
            }),
        }
    }
}

/// Apply one zipper move to the trivalent vertex `o`, returning the new
/// graph and the move record.
pub fn apply_move(graph: &PositiveGraph, o: usize) -> Result<(PositiveGraph, MoveRecord), MoveError> {
    let mut next = graph.clone();
    let record = apply_move_mut(&mut next, o)?;
    Ok((next, record))
}

/// Pick the next vertex per the four-step schedule: downward movers from
/// the smallest angle up, then upward movers from the largest down.
fn select_active(graph: &PositiveGraph) -> Option<usize> {
    let mut v_plus: Vec<usize> = Vec::new();
    let mut v_minus: Vec<usize> = Vec::new();
    for v in graph.trivalent_vertices() {
        match classify(graph, v) {
            Ok(s) if s.dir == Dir::Down => v_plus.push(v),
            Ok(_) => v_minus.push(v),
            Err(_) => {}
        }
    }
    if let Some(&v) = v_plus
        .iter()
        .min_by(|&&a, &&b| graph.vertex(a).angle.cmp(&graph.vertex(b).angle).then(a.cmp(&b)))
    {
        return Some(v);
    }
    v_minus
        .iter()
        .max_by(|&&a, &&b| graph.vertex(a).angle.cmp(&graph.vertex(b).angle).then(b.cmp(&a)))
        .copied()
}

/// Run moves until no trivalent vertex remains and read off the line
/// graph.  Returns the move trace alongside.
pub fn linearize(
    graph: &PositiveGraph,
    data: &AsymptoticDataSet,
) -> Result<(PositiveLineGraph, Vec<MoveRecord>), MoveError> {
    let mut g = graph.clone();
    let mut trace = Vec::new();
    let budget = 16 * (g.n_vertices() * g.n_vertices() + 16);
    while let Some(active) = select_active(&g) {
        if trace.len() > budget {
            return Err(MoveError::Malformed("move budget exceeded; graph does not terminate".into()));
        }
        let record = apply_move_mut(&mut g, active)?;
        trace.push(record);
    }
    let line = read_line_graph(&g, data)?;
    Ok((line, trace))
}

/// Convert a trivalent-free positive graph into a `PositiveLineGraph`,
/// rebuilding the per-vertex end bookkeeping from the data set.
fn read_line_graph(
    graph: &PositiveGraph,
    data: &AsymptoticDataSet,
) -> Result<PositiveLineGraph, MoveError> {
    let mut order: Vec<usize> = graph.vertices().map(|(i, _)| i).collect();
    order.sort_by(|&a, &b| graph.vertex(a).angle.cmp(&graph.vertex(b).angle));

    for &v in &order {
        if !graph.vertex(v).angle.is_exact() {
            return Err(MoveError::Malformed(format!("vertex {v} still sits at an offset token")));
        }
    }
    let spectrum = angle_spectrum(data)
        .map_err(|e| MoveError::Malformed(format!("data set has no spectrum: {e}")))?;
    if spectrum.len() != order.len() {
        return Err(MoveError::Malformed(format!(
            "linear graph has {} vertices, spectrum has {}",
            order.len(),
            spectrum.len()
        )));
    }
    let mut vertices = Vec::new();
    for (&v, entry) in order.iter().zip(&spectrum.entries) {
        if graph.vertex(v).angle.anchor != entry.angle {
            return Err(MoveError::Malformed("vertex angles do not match the spectrum".into()));
        }
        vertices.push(LineVertex {
            angle: entry.angle,
            plus_sum: entry.plus_sum,
            minus_sum: entry.minus_sum,
            plus_refs: entry.plus_refs.clone(),
            minus_refs: entry.minus_refs.clone(),
            pole_refs: entry.pole_refs.clone(),
        });
    }
    let mut edges = Vec::new();
    for w in order.windows(2) {
        let q = graph
            .live_edges()
            .find(|(_, e)| (e.a == w[0] && e.b == w[1]) || (e.a == w[1] && e.b == w[0]))
            .map(|(_, e)| e.q)
            .ok_or_else(|| {
                MoveError::Malformed("sorted vertices are not consecutively adjacent".into())
            })?;
        edges.push(q);
    }
    Ok(PositiveLineGraph { vertices, edges })
}
