//! Finite weighted graphs and their dyadic subdivisions.
//!
//! A [`SubdividedGraph`] at level `r` replaces each base edge by a series of
//! `2^r` edges. Subdivision vertices are named by their dyadic position on the
//! base edge, reduced to lowest terms, so the nested vertex sets
//! `Λ_0 ⊆ Λ_1 ⊆ … ⊆ Λ_r` compare by value.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::linalg::WeightMatrix;

/// Largest vertex count for which a dense weight matrix is materialized.
pub const DENSE_LIMIT: usize = 4096;

/// An undirected edge stored with `tail < head` (vertex indices).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    vertices: Vec<String>,
    index: HashMap<String, usize>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(usize, usize)>>,
}

/// On-disk graph schema: `{"vertices": [...], "edges": [[u, v, w], ...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GraphJson {
    pub vertices: Vec<Value>,
    pub edges: Vec<(Value, Value, f64)>,
}

fn label(v: &Value) -> Result<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        other => Err(Error::InvalidGraph(format!("unsupported vertex id {other}"))),
    }
}

impl Graph {
    /// Builds a graph from vertex ids and `(u, v, w)` triples.
    ///
    /// Rejects self-loops, duplicate vertices or edges, nonpositive or
    /// non-finite weights, and disconnected graphs.
    pub fn new(vertices: Vec<String>, edges: &[(String, String, f64)]) -> Result<Self> {
        let mut index = HashMap::with_capacity(vertices.len());
        for (i, v) in vertices.iter().enumerate() {
            if index.insert(v.clone(), i).is_some() {
                return Err(Error::InvalidGraph(format!("duplicate vertex {v}")));
            }
        }
        let mut idx_edges = Vec::with_capacity(edges.len());
        for (u, v, w) in edges {
            let a = *index
                .get(u)
                .ok_or_else(|| Error::InvalidGraph(format!("unknown vertex {u}")))?;
            let b = *index
                .get(v)
                .ok_or_else(|| Error::InvalidGraph(format!("unknown vertex {v}")))?;
            idx_edges.push((a, b, *w));
        }
        Self::build(vertices, index, &idx_edges)
    }

    /// Builds a graph on vertices `"0".."n-1"`.
    pub fn from_indexed(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let vertices: Vec<String> = (0..n).map(|i| i.to_string()).collect();
        let index = vertices.iter().cloned().zip(0..).collect();
        for &(a, b, _) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidGraph(format!("edge ({a}, {b}) out of range")));
            }
        }
        Self::build(vertices, index, edges)
    }

    fn build(
        vertices: Vec<String>,
        index: HashMap<String, usize>,
        edges: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let n = vertices.len();
        let mut adjacency = vec![Vec::new(); n];
        let mut out = Vec::with_capacity(edges.len());
        let mut seen = HashMap::new();
        for &(a, b, w) in edges {
            if a == b {
                return Err(Error::InvalidGraph(format!(
                    "self-loop at {}",
                    vertices[a]
                )));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidGraph(format!(
                    "edge {{{}, {}}} has nonpositive weight {w}",
                    vertices[a], vertices[b]
                )));
            }
            let (tail, head) = if a < b { (a, b) } else { (b, a) };
            if seen.insert((tail, head), ()).is_some() {
                return Err(Error::InvalidGraph(format!(
                    "duplicate edge {{{}, {}}}",
                    vertices[tail], vertices[head]
                )));
            }
            let id = out.len();
            adjacency[tail].push((head, id));
            adjacency[head].push((tail, id));
            out.push(Edge { tail, head, weight: w });
        }
        let g = Graph { vertices, index, edges: out, adjacency };
        if !g.is_connected() {
            return Err(Error::InvalidGraph("graph is not connected".into()));
        }
        Ok(g)
    }

    pub fn from_json(json: &GraphJson) -> Result<Self> {
        let vertices = json.vertices.iter().map(label).collect::<Result<Vec<_>>>()?;
        let edges = json
            .edges
            .iter()
            .map(|(u, v, w)| Ok((label(u)?, label(v)?, *w)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(vertices, &edges)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Self::from_json(&serde_json::from_str(s)?)
    }

    /// Edge list with header `u,v,weight`; vertices in order of first appearance.
    pub fn from_csv_str(s: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(s.as_bytes());
        let mut vertices: Vec<String> = Vec::new();
        let mut edges = Vec::new();
        for rec in rdr.deserialize() {
            let (u, v, w): (String, String, f64) = rec?;
            for x in [&u, &v] {
                if !vertices.contains(x) {
                    vertices.push(x.clone());
                }
            }
            edges.push((u, v, w));
        }
        Self::new(vertices, &edges)
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            vertices: self.vertices.iter().map(|v| Value::String(v.clone())).collect(),
            edges: self
                .edges
                .iter()
                .map(|e| {
                    (
                        Value::String(self.vertices[e.tail].clone()),
                        Value::String(self.vertices[e.head].clone()),
                        e.weight,
                    )
                })
                .collect(),
        }
    }

    pub fn path(n: usize, w: f64) -> Result<Self> {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i, w)).collect();
        Self::from_indexed(n, &edges)
    }

    pub fn cycle(n: usize, w: f64) -> Result<Self> {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n, w)).collect();
        Self::from_indexed(n, &edges)
    }

    pub fn complete(n: usize, w: f64) -> Result<Self> {
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                edges.push((a, b, w));
            }
        }
        Self::from_indexed(n, &edges)
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// `(neighbor, edge id)` pairs of vertex `v`.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Returns a copy with edge weights replaced (same edge order).
    pub fn with_weights(&self, weights: &[f64]) -> Result<Self> {
        if weights.len() != self.edges.len() {
            return Err(Error::DimensionMismatch {
                expected: self.edges.len(),
                actual: weights.len(),
            });
        }
        let edges: Vec<_> = self
            .edges
            .iter()
            .zip(weights)
            .map(|(e, &w)| (e.tail, e.head, w))
            .collect();
        Self::build(self.vertices.clone(), self.index.clone(), &edges)
    }

    pub fn weight_matrix(&self) -> WeightMatrix {
        let w: Vec<f64> = self.edges.iter().map(|e| e.weight).collect();
        self.weight_matrix_with(&w)
    }

    /// Dense weight matrix using `weights[k]` for edge `k`.
    pub fn weight_matrix_with(&self, weights: &[f64]) -> WeightMatrix {
        let n = self.n_vertices();
        let mut m = nalgebra::DMatrix::zeros(n, n);
        for (e, &w) in self.edges.iter().zip(weights) {
            m[(e.tail, e.head)] = w;
            m[(e.head, e.tail)] = w;
        }
        WeightMatrix::from_matrix_unchecked(m)
    }

    fn is_connected(&self) -> bool {
        let n = self.n_vertices();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &(u, _) in &self.adjacency[v] {
                if !seen[u] {
                    seen[u] = true;
                    count += 1;
                    queue.push_back(u);
                }
            }
        }
        count == n
    }
}

/// A vertex of a subdivided graph.
///
/// `Interior { edge, num, level }` is the point at dyadic position
/// `num / 2^level` along base edge `edge`, with `num` odd. It first appears in
/// `Λ_level` and belongs to every `Λ_l` with `l ≥ level`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SubVertex {
    Base(usize),
    Interior { edge: usize, num: u64, level: u32 },
}

impl SubVertex {
    /// The level at which this vertex first appears.
    pub fn birth_level(&self) -> u32 {
        match *self {
            SubVertex::Base(_) => 0,
            SubVertex::Interior { level, .. } => level,
        }
    }
}

/// The edge `e_{j,level}`: the `j`-th of the `2^level` pieces of base edge `edge`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubEdge {
    pub edge: usize,
    pub j: u64,
    pub level: u32,
}

impl SubEdge {
    pub fn new(edge: usize, j: u64, level: u32) -> Self {
        SubEdge { edge, j, level }
    }
}

impl fmt::Display for SubEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e[{}]_{{{},{}}}", self.edge, self.j, self.level)
    }
}

#[derive(Clone, Debug)]
pub struct SubdividedGraph {
    base: Graph,
    level: u32,
    vertices: Vec<SubVertex>,
    index: HashMap<SubVertex, usize>,
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl SubdividedGraph {
    /// Subdivides every edge of `base` into `2^r` edges.
    ///
    /// Vertex order: base vertices first (same indices as in `base`), then for
    /// each base edge its interior vertices `j = 1..2^r-1` in order along the
    /// edge. Edge order: base edge major, `j` minor.
    pub fn build(base: &Graph, r: u32) -> Result<Self> {
        if r > 30 {
            return Err(Error::Level { level: r, reason: "subdivision level above 30".into() });
        }
        let pieces = 1u64 << r;
        let n0 = base.n_vertices();
        let mut vertices: Vec<SubVertex> = (0..n0).map(SubVertex::Base).collect();
        for e in 0..base.n_edges() {
            for j in 1..pieces {
                vertices.push(canonical(e, j, r));
            }
        }
        let index: HashMap<SubVertex, usize> =
            vertices.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        let mut sg = SubdividedGraph {
            base: base.clone(),
            level: r,
            vertices,
            index,
            adjacency: Vec::new(),
        };
        let mut adjacency = vec![Vec::new(); sg.vertices.len()];
        for (id, (a, b)) in sg.edge_endpoints_at_top().enumerate() {
            adjacency[a].push((b, id));
            adjacency[b].push((a, id));
        }
        sg.adjacency = adjacency;
        Ok(sg)
    }

    fn edge_endpoints_at_top(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let r = self.level;
        (0..self.base.n_edges()).flat_map(move |e| {
            (1..=(1u64 << r)).map(move |j| {
                let (a, b) = self.endpoints(SubEdge::new(e, j, r)).expect("valid edge");
                (self.index[&a], self.index[&b])
            })
        })
    }

    pub fn base(&self) -> &Graph {
        &self.base
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_edges(&self) -> usize {
        self.base.n_edges() << self.level
    }

    pub fn vertex(&self, i: usize) -> SubVertex {
        self.vertices[i]
    }

    pub fn vertices(&self) -> &[SubVertex] {
        &self.vertices
    }

    pub fn index_of(&self, v: &SubVertex) -> Option<usize> {
        self.index.get(v).copied()
    }

    /// `(neighbor, top-level edge index)` pairs.
    pub fn neighbors(&self, i: usize) -> &[(usize, usize)] {
        &self.adjacency[i]
    }

    /// The vertex at position `j / 2^level` on base edge `edge`, oriented from
    /// the lower-index endpoint (`j = 0`) to the higher one (`j = 2^level`).
    pub fn vertex_at(&self, edge: usize, j: u64, level: u32) -> Result<SubVertex> {
        if edge >= self.base.n_edges() {
            return Err(Error::NotFound(format!("base edge {edge}")));
        }
        if level > self.level {
            return Err(Error::Level { level, reason: format!("above subdivision level {}", self.level) });
        }
        let pieces = 1u64 << level;
        if j > pieces {
            return Err(Error::NotFound(format!("position {j}/{pieces} on edge {edge}")));
        }
        let e = self.base.edges()[edge];
        Ok(if j == 0 {
            SubVertex::Base(e.tail)
        } else if j == pieces {
            SubVertex::Base(e.head)
        } else {
            canonical(edge, j, level)
        })
    }

    /// True iff `v ∈ Λ_l`.
    pub fn level_member(&self, v: &SubVertex, l: u32) -> bool {
        l <= self.level && self.index.contains_key(v) && v.birth_level() <= l
    }

    /// Indices (into this graph's vertex list) of `Λ_l`, in vertex order.
    pub fn vertices_at(&self, l: u32) -> Vec<usize> {
        (0..self.vertices.len())
            .filter(|&i| self.vertices[i].birth_level() <= l)
            .collect()
    }

    /// All edges `E_l` in base-edge-major order.
    pub fn edges_at(&self, l: u32) -> Vec<SubEdge> {
        (0..self.base.n_edges())
            .flat_map(|e| (1..=(1u64 << l)).map(move |j| SubEdge::new(e, j, l)))
            .collect()
    }

    pub fn endpoints(&self, e: SubEdge) -> Result<(SubVertex, SubVertex)> {
        if e.j == 0 || e.j > (1u64 << e.level) {
            return Err(Error::NotFound(format!("edge {e}")));
        }
        Ok((
            self.vertex_at(e.edge, e.j - 1, e.level)?,
            self.vertex_at(e.edge, e.j, e.level)?,
        ))
    }

    /// Index of a top-level edge `e_{j,r}` in `E_r`.
    pub fn edge_index(&self, e: SubEdge) -> Result<usize> {
        if e.level != self.level || e.edge >= self.base.n_edges() || e.j == 0 || e.j > (1u64 << e.level) {
            return Err(Error::NotFound(format!("edge {e} at level {}", self.level)));
        }
        Ok((e.edge << self.level) + (e.j as usize - 1))
    }

    /// Children of `ē = e_{j,l-1}`: `(e_{2j-1,l}, e_{2j,l}, v_{e,(2j-1)/2^l})`.
    pub fn split_lookup(&self, l: u32, parent: SubEdge) -> Result<(SubEdge, SubEdge, SubVertex)> {
        if l == 0 || l > self.level {
            return Err(Error::Level { level: l, reason: format!("split needs 1 <= l <= {}", self.level) });
        }
        if parent.level != l - 1 || parent.j == 0 || parent.j > (1u64 << (l - 1)) || parent.edge >= self.base.n_edges() {
            return Err(Error::NotFound(format!("edge {parent} in E_{}", l - 1)));
        }
        let j = parent.j;
        Ok((
            SubEdge::new(parent.edge, 2 * j - 1, l),
            SubEdge::new(parent.edge, 2 * j, l),
            self.vertex_at(parent.edge, 2 * j - 1, l)?,
        ))
    }

    /// Neighborhood of a surviving vertex `v̄ ∈ Λ_{l-1} \ Λ_0` inside `G_l`:
    /// `(e¹, e², v¹, v²)` with `e¹ = {v¹, v̄}` and `e² = {v̄, v²}`.
    pub fn survivor_lookup(
        &self,
        l: u32,
        v: SubVertex,
    ) -> Result<(SubEdge, SubEdge, SubVertex, SubVertex)> {
        if l < 2 || l > self.level {
            return Err(Error::Level { level: l, reason: format!("survivor lookup needs 2 <= l <= {}", self.level) });
        }
        let SubVertex::Interior { edge, num, level } = v else {
            return Err(Error::NotFound(format!("{v:?} is a base vertex")));
        };
        if level > l - 1 {
            return Err(Error::NotFound(format!("{v:?} is not in Λ_{}", l - 1)));
        }
        let j = num << (l - 1 - level);
        Ok((
            SubEdge::new(edge, 2 * j, l),
            SubEdge::new(edge, 2 * j + 1, l),
            self.vertex_at(edge, 2 * j - 1, l)?,
            self.vertex_at(edge, 2 * j + 1, l)?,
        ))
    }

    /// Label used in JSON output: base ids unchanged, interior vertices as
    /// `e:<edge>:<j>/<2^r>`.
    pub fn label(&self, i: usize) -> String {
        match self.vertices[i] {
            SubVertex::Base(b) => self.base.vertices()[b].clone(),
            SubVertex::Interior { edge, num, level } => {
                let shift = self.level - level;
                format!("e:{edge}:{}/{}", num << shift, 1u64 << self.level)
            }
        }
    }

    /// Dense weight matrix on `Λ_r` from per-edge weights in `E_r` order.
    pub fn weight_matrix(&self, weights: &[f64]) -> Result<WeightMatrix> {
        if weights.len() != self.n_edges() {
            return Err(Error::DimensionMismatch { expected: self.n_edges(), actual: weights.len() });
        }
        let n = self.n_vertices();
        if n > DENSE_LIMIT {
            return Err(Error::Guard(format!("{n} vertices exceed the dense limit {DENSE_LIMIT}")));
        }
        let mut m = nalgebra::DMatrix::zeros(n, n);
        for (k, (a, b)) in self.edge_endpoints_at_top().enumerate() {
            m[(a, b)] = weights[k];
            m[(b, a)] = weights[k];
        }
        Ok(WeightMatrix::from_matrix_unchecked(m))
    }

    /// Subdivided graph in the base JSON schema; each piece inherits the
    /// weight of its base edge unless `weights` (in `E_r` order) is given.
    pub fn to_json(&self, weights: Option<&[f64]>) -> Result<GraphJson> {
        if let Some(w) = weights {
            if w.len() != self.n_edges() {
                return Err(Error::DimensionMismatch { expected: self.n_edges(), actual: w.len() });
            }
        }
        let vertices = (0..self.n_vertices()).map(|i| Value::String(self.label(i))).collect();
        let edges = self
            .edge_endpoints_at_top()
            .enumerate()
            .map(|(k, (a, b))| {
                let w = match weights {
                    Some(w) => w[k],
                    None => self.base.edges()[k >> self.level].weight,
                };
                (Value::String(self.label(a)), Value::String(self.label(b)), w)
            })
            .collect();
        Ok(GraphJson { vertices, edges })
    }

    /// The subdivided graph as a plain [`Graph`] (labels as in [`Self::label`]).
    pub fn to_graph(&self, weights: Option<&[f64]>) -> Result<Graph> {
        Graph::from_json(&self.to_json(weights)?)
    }
}

fn canonical(edge: usize, j: u64, level: u32) -> SubVertex {
    debug_assert!(j > 0 && j < (1u64 << level));
    let tz = j.trailing_zeros();
    SubVertex::Interior { edge, num: j >> tz, level: level - tz }
}
