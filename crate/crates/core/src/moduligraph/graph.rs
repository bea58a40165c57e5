//! Graph storage for positive and moduli-space graphs.

use num::{BigInt, BigRational};
use serde_json::json;
use thiserror::Error;

use crate::algebra::{Angle, AngleClass, AngleToken, IntegerPair};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("graph JSON is malformed: {0}")]
    Json(String),
    #[error("vertex {0} is not present")]
    NoVertex(usize),
}

/// Payload of a monovalent vertex.  Element indices refer into the data
/// set's `ends`; pole tags count the `(1)` / `(-1)` labels.  Moves can
/// merge several caps into one vertex, so all fields are collections.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MonoPayload {
    pub elements: Vec<usize>,
    pub plus_tags: u32,
    pub minus_tags: u32,
}

impl MonoPayload {
    pub fn element(i: usize) -> Self {
        MonoPayload { elements: vec![i], ..Default::default() }
    }
    pub fn tag(at_pi: bool) -> Self {
        if at_pi {
            MonoPayload { minus_tags: 1, ..Default::default() }
        } else {
            MonoPayload { plus_tags: 1, ..Default::default() }
        }
    }
    pub fn merge(&self, other: &MonoPayload) -> Self {
        let mut elements = self.elements.clone();
        elements.extend_from_slice(&other.elements);
        elements.sort_unstable();
        MonoPayload {
            elements,
            plus_tags: self.plus_tags + other.plus_tags,
            minus_tags: self.minus_tags + other.minus_tags,
        }
    }
}

/// Payload of a bivalent vertex: the partition subset (indices of
/// `(0, +, ...)` ends) when the graph is a moduli-space graph; plain
/// positive graphs leave it empty.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BiPayload {
    pub partition: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VertexKind {
    Mono(MonoPayload),
    Bi(BiPayload),
    Tri,
}

impl VertexKind {
    pub fn name(&self) -> &'static str {
        match self {
            VertexKind::Mono(_) => "mono",
            VertexKind::Bi(_) => "bi",
            VertexKind::Tri => "tri",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Vertex {
    pub angle: AngleToken,
    pub kind: VertexKind,
}

#[derive(Debug, Clone)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub q: IntegerPair,
}

impl Edge {
    pub fn other(&self, v: usize) -> usize {
        if self.a == v {
            self.b
        } else {
            self.a
        }
    }
}

/// A tree with labeled vertices and edges; slots are tombstoned so that
/// vertex identity survives the rewriting moves.
#[derive(Debug, Clone, Default)]
pub struct PositiveGraph {
    pub(crate) verts: Vec<Option<Vertex>>,
    pub(crate) edges: Vec<Option<Edge>>,
}

impl PositiveGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self, angle: AngleToken, kind: VertexKind) -> usize {
        self.verts.push(Some(Vertex { angle, kind }));
        self.verts.len() - 1
    }

    pub fn add_edge(&mut self, a: usize, b: usize, q: IntegerPair) -> usize {
        debug_assert!(self.verts[a].is_some() && self.verts[b].is_some());
        self.edges.push(Some(Edge { a, b, q }));
        self.edges.len() - 1
    }

    pub fn remove_vertex(&mut self, v: usize) {
        self.verts[v] = None;
    }

    pub fn remove_edge(&mut self, e: usize) {
        self.edges[e] = None;
    }

    pub fn set_edge_label(&mut self, e: usize, q: IntegerPair) {
        self.edges[e].as_mut().expect("edge alive").q = q;
    }

    pub fn vertex(&self, v: usize) -> &Vertex {
        self.verts[v].as_ref().expect("vertex alive")
    }

    pub fn vertex_mut(&mut self, v: usize) -> &mut Vertex {
        self.verts[v].as_mut().expect("vertex alive")
    }

    pub fn edge(&self, e: usize) -> &Edge {
        self.edges[e].as_ref().expect("edge alive")
    }

    pub fn vertices(&self) -> impl Iterator<Item = (usize, &Vertex)> {
        self.verts.iter().enumerate().filter_map(|(i, v)| v.as_ref().map(|v| (i, v)))
    }

    pub fn live_edges(&self) -> impl Iterator<Item = (usize, &Edge)> {
        self.edges.iter().enumerate().filter_map(|(i, e)| e.as_ref().map(|e| (i, e)))
    }

    pub fn n_vertices(&self) -> usize {
        self.verts.iter().flatten().count()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.iter().flatten().count()
    }

    /// Incident (edge index, neighbor) pairs.
    pub fn neighbors(&self, v: usize) -> Vec<(usize, usize)> {
        self.live_edges()
            .filter(|(_, e)| e.a == v || e.b == v)
            .map(|(i, e)| (i, e.other(v)))
            .collect()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors(v).len()
    }

    /// Number of live vertices in the component of `start` after cutting
    /// the edge `cut`.
    pub fn subtree_size(&self, start: usize, cut: usize) -> usize {
        let mut seen = vec![start];
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for (e, w) in self.neighbors(v) {
                if e != cut && !seen.contains(&w) {
                    seen.push(w);
                    stack.push(w);
                }
            }
        }
        seen.len()
    }

    pub fn is_tree(&self) -> bool {
        let n = self.n_vertices();
        if n == 0 {
            return false;
        }
        if self.n_edges() + 1 != n {
            return false;
        }
        let start = match self.vertices().next() {
            Some((i, _)) => i,
            None => return false,
        };
        let mut seen = vec![start];
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for (_, w) in self.neighbors(v) {
                if !seen.contains(&w) {
                    seen.push(w);
                    stack.push(w);
                }
            }
        }
        seen.len() == n
    }

    pub fn trivalent_vertices(&self) -> Vec<usize> {
        self.vertices().filter(|(_, v)| v.kind == VertexKind::Tri).map(|(i, _)| i).collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut vertices = Vec::new();
        for (i, v) in self.vertices() {
            let mut obj = json!({
                "id": i,
                "kind": v.kind.name(),
                "angle": token_json(&v.angle),
            });
            match &v.kind {
                VertexKind::Mono(m) => {
                    obj["label"] = json!({
                        "elements": m.elements,
                        "plus_tags": m.plus_tags,
                        "minus_tags": m.minus_tags,
                    });
                }
                VertexKind::Bi(b) => {
                    if let Some(part) = &b.partition {
                        obj["partition"] = json!(part);
                    }
                }
                VertexKind::Tri => {}
            }
            vertices.push(obj);
        }
        let edges: Vec<_> = self
            .live_edges()
            .map(|(_, e)| json!({"src": e.a, "dst": e.b, "q": e.q.p, "qp": e.q.pp}))
            .collect();
        json!({"kind": "positive_graph", "vertices": vertices, "edges": edges})
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self, GraphError> {
        let bad = |m: &str| GraphError::Json(m.to_string());
        let vs = value["vertices"].as_array().ok_or_else(|| bad("missing vertices"))?;
        let es = value["edges"].as_array().ok_or_else(|| bad("missing edges"))?;
        let max_id = vs
            .iter()
            .map(|v| v["id"].as_u64().unwrap_or(0) as usize)
            .max()
            .ok_or_else(|| bad("no vertices"))?;
        let mut graph = PositiveGraph { verts: vec![None; max_id + 1], edges: Vec::new() };
        for v in vs {
            let id = v["id"].as_u64().ok_or_else(|| bad("vertex id"))? as usize;
            let angle = token_from_json(&v["angle"])?;
            let kind = match v["kind"].as_str().ok_or_else(|| bad("vertex kind"))? {
                "mono" => {
                    let label = &v["label"];
                    let elements = label["elements"]
                        .as_array()
                        .map(|a| a.iter().filter_map(|x| x.as_u64().map(|u| u as usize)).collect())
                        .unwrap_or_default();
                    VertexKind::Mono(MonoPayload {
                        elements,
                        plus_tags: label["plus_tags"].as_u64().unwrap_or(0) as u32,
                        minus_tags: label["minus_tags"].as_u64().unwrap_or(0) as u32,
                    })
                }
                "bi" => VertexKind::Bi(BiPayload {
                    partition: v["partition"].as_array().map(|a| {
                        a.iter().filter_map(|x| x.as_u64().map(|u| u as usize)).collect()
                    }),
                }),
                "tri" => VertexKind::Tri,
                other => return Err(bad(&format!("unknown vertex kind {other}"))),
            };
            graph.verts[id] = Some(Vertex { angle, kind });
        }
        for e in es {
            let a = e["src"].as_u64().ok_or_else(|| bad("edge src"))? as usize;
            let b = e["dst"].as_u64().ok_or_else(|| bad("edge dst"))? as usize;
            let q = e["q"].as_i64().ok_or_else(|| bad("edge q"))?;
            let qp = e["qp"].as_i64().ok_or_else(|| bad("edge qp"))?;
            if a > max_id || b > max_id || graph.verts[a].is_none() || graph.verts[b].is_none() {
                return Err(bad("edge endpoint not a vertex"));
            }
            graph.edges.push(Some(Edge { a, b, q: IntegerPair::new(q, qp) }));
        }
        Ok(graph)
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph positivegraph {\n  rankdir=BT;\n");
        for (i, v) in self.vertices() {
            let theta = v.angle.theta_approx(1e-4);
            let extra = match &v.angle.anchor {
                Angle::Orbit(c) => format!(" {}", c.pair()),
                _ => String::new(),
            };
            out.push_str(&format!(
                "  v{i} [label=\"{} {theta:.4}{extra}\"];\n",
                v.kind.name()
            ));
        }
        for (_, e) in self.live_edges() {
            out.push_str(&format!("  v{} -- v{} [label=\"{}\"];\n", e.a, e.b, e.q));
        }
        out.push_str("}\n");
        out
    }
}

/// A positive graph whose labels satisfy the moduli-space constraints;
/// produced by [`super::expand_to_moduli_graph`] or accepted by
/// [`super::validate_moduli_graph`].
#[derive(Debug, Clone)]
pub struct ModuliSpaceGraph {
    pub graph: PositiveGraph,
}

pub(crate) fn token_json(t: &AngleToken) -> serde_json::Value {
    let anchor = match &t.anchor {
        Angle::Pole0 => json!("pole0"),
        Angle::PolePi => json!("polePi"),
        Angle::Orbit(c) => {
            let p = c.pair();
            json!({"p": p.p, "pp": p.pp})
        }
    };
    if t.is_exact() {
        anchor
    } else {
        json!({"anchor": anchor, "offset": format!("{}/{}", t.offset.numer(), t.offset.denom())})
    }
}

pub(crate) fn token_from_json(value: &serde_json::Value) -> Result<AngleToken, GraphError> {
    let bad = |m: &str| GraphError::Json(m.to_string());
    fn anchor_of(value: &serde_json::Value) -> Option<Angle> {
        if let Some(s) = value.as_str() {
            return match s {
                "pole0" => Some(Angle::Pole0),
                "polePi" => Some(Angle::PolePi),
                _ => None,
            };
        }
        let p = value["p"].as_i64()?;
        let pp = value["pp"].as_i64()?;
        AngleClass::from_pair(IntegerPair::new(p, pp)).ok().map(Angle::Orbit)
    }
    if value.get("offset").is_some() {
        let anchor = anchor_of(&value["anchor"]).ok_or_else(|| bad("bad anchor"))?;
        let text = value["offset"].as_str().ok_or_else(|| bad("offset must be a string"))?;
        let (n, d) = text.split_once('/').ok_or_else(|| bad("offset must be num/den"))?;
        let n: BigInt = n.parse().map_err(|_| bad("offset numerator"))?;
        let d: BigInt = d.parse().map_err(|_| bad("offset denominator"))?;
        if d == BigInt::from(0) {
            return Err(bad("offset denominator is zero"));
        }
        Ok(AngleToken::with_offset(anchor, BigRational::new(n, d)))
    } else {
        Ok(AngleToken::exact(anchor_of(value).ok_or_else(|| bad("bad angle"))?))
    }
}
