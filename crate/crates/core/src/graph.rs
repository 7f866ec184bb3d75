//! Metric graphs with exact rational edge lengths, points on them, walks, and
//! edge subdivision.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt::{self, Write as _};

use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub u: VertexId,
    pub v: VertexId,
    pub length: Rational,
}

impl Edge {
    pub fn other(&self, x: VertexId) -> VertexId {
        if x == self.u {
            self.v
        } else {
            self.u
        }
    }

    pub fn has_endpoint(&self, x: VertexId) -> bool {
        self.u == x || self.v == x
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("no edge between `{0}` and `{1}`")]
    UnknownEdge(String, String),
    #[error("invalid graph: {0}")]
    Invalid(String),
    #[error("subdivision granularity must be positive")]
    InvalidGranularity,
    #[error("walk broken between points {0} and {1}")]
    BrokenWalk(usize, usize),
    #[error("interior offset {0} outside (0,1)")]
    BadOffset(Rational),
}

/// An undirected multigraph with positive rational edge lengths.
///
/// Each edge keeps a fixed orientation `u -> v`; offsets of interior points are
/// measured from `u`. Graphs read from text orient every edge from the
/// lexicographically smaller label to the larger one.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MetricGraph {
    labels: Vec<String>,
    index: HashMap<String, VertexId>,
    edges: Vec<Edge>,
    incident: Vec<Vec<EdgeId>>,
    undeclared: Vec<bool>,
}

impl MetricGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a vertex (or returns the existing one with the same label).
    pub fn add_vertex(&mut self, label: &str) -> VertexId {
        if let Some(&id) = self.index.get(label) {
            self.undeclared[id.0] = false;
            return id;
        }
        let id = VertexId(self.labels.len());
        self.labels.push(label.to_string());
        self.index.insert(label.to_string(), id);
        self.incident.push(Vec::new());
        self.undeclared.push(false);
        id
    }

    fn touch_vertex(&mut self, label: &str) -> VertexId {
        if let Some(&id) = self.index.get(label) {
            return id;
        }
        let id = self.add_vertex(label);
        self.undeclared[id.0] = true;
        id
    }

    /// Adds an edge oriented from the lexicographically smaller label.
    pub fn add_edge(&mut self, a: VertexId, b: VertexId, length: Rational) -> EdgeId {
        if self.labels[a.0] <= self.labels[b.0] {
            self.add_edge_oriented(a, b, length)
        } else {
            self.add_edge_oriented(b, a, length)
        }
    }

    /// Adds an edge keeping the given orientation `u -> v`.
    pub fn add_edge_oriented(&mut self, u: VertexId, v: VertexId, length: Rational) -> EdgeId {
        let id = EdgeId(self.edges.len());
        self.edges.push(Edge { u, v, length });
        self.incident[u.0].push(id);
        if u != v {
            self.incident[v.0].push(id);
        }
        id
    }

    pub fn add_edge_by_label(&mut self, a: &str, b: &str, length: Rational) -> EdgeId {
        let a = self.add_vertex(a);
        let b = self.add_vertex(b);
        self.add_edge(a, b, length)
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.labels.len()).map(VertexId)
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeId> + '_ {
        (0..self.edges.len()).map(EdgeId)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e.0]
    }

    pub fn label(&self, v: VertexId) -> &str {
        &self.labels[v.0]
    }

    pub fn vertex(&self, label: &str) -> Option<VertexId> {
        self.index.get(label).copied()
    }

    pub fn require_vertex(&self, label: &str) -> Result<VertexId, GraphError> {
        self.vertex(label)
            .ok_or_else(|| GraphError::UnknownVertex(label.to_string()))
    }

    pub fn incident(&self, v: VertexId) -> &[EdgeId] {
        &self.incident[v.0]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.incident[v.0]
            .iter()
            .map(|&e| if self.edges[e.0].u == self.edges[e.0].v { 2 } else { 1 })
            .sum()
    }

    /// Edges joining `a` and `b`, in id order.
    pub fn edges_between(&self, a: VertexId, b: VertexId) -> impl Iterator<Item = EdgeId> + '_ {
        self.incident[a.0].iter().copied().filter(move |&e| {
            let ed = &self.edges[e.0];
            (ed.u == a && ed.v == b) || (ed.u == b && ed.v == a)
        })
    }

    /// The shortest edge between `a` and `b` (lowest id on ties).
    pub fn shortest_edge_between(&self, a: VertexId, b: VertexId) -> Option<EdgeId> {
        self.edges_between(a, b)
            .min_by(|x, y| self.edges[x.0].length.cmp(&self.edges[y.0].length).then(x.cmp(y)))
    }

    pub fn total_length(&self) -> Rational {
        self.edges.iter().map(|e| &e.length).sum()
    }

    pub fn odd_vertices(&self) -> Vec<VertexId> {
        self.vertices().filter(|&v| self.degree(v) % 2 == 1).collect()
    }

    /// `Some(d)` if every vertex has degree `d`.
    pub fn regular_degree(&self) -> Option<usize> {
        let mut degs = self.vertices().map(|v| self.degree(v));
        let first = degs.next()?;
        degs.all(|d| d == first).then_some(first)
    }

    /// `Some(len)` if every edge has the same length.
    pub fn uniform_edge_length(&self) -> Option<Rational> {
        let first = self.edges.first()?.length.clone();
        self.edges.iter().all(|e| e.length == first).then_some(first)
    }

    pub fn is_connected(&self) -> bool {
        self.component_count() <= 1
    }

    pub fn component_count(&self) -> usize {
        let n = self.vertex_count();
        let mut seen = vec![false; n];
        let mut count = 0;
        for s in 0..n {
            if seen[s] {
                continue;
            }
            count += 1;
            seen[s] = true;
            let mut queue = VecDeque::from([VertexId(s)]);
            while let Some(x) = queue.pop_front() {
                for &e in &self.incident[x.0] {
                    let y = self.edges[e.0].other(x);
                    if !seen[y.0] {
                        seen[y.0] = true;
                        queue.push_back(y);
                    }
                }
            }
        }
        count
    }

    /// Parses the line-oriented graph format:
    ///
    /// ```text
    /// # comment
    /// v A
    /// e A B 3/2
    /// e B C        # length defaults to 1
    /// ```
    ///
    /// Edges may mention undeclared vertices; `validate` reports them.
    pub fn parse(text: &str) -> Result<Self, GraphError> {
        let mut g = MetricGraph::new();
        for (i, raw) in text.lines().enumerate() {
            let line = strip_comment(raw);
            if line.is_empty() {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            let err = |message: String| GraphError::Parse { line: i + 1, message };
            match toks[0] {
                "v" if toks.len() == 2 => {
                    g.add_vertex(toks[1]);
                }
                "e" if toks.len() == 3 || toks.len() == 4 => {
                    let length = match toks.get(3) {
                        Some(t) => t.parse::<Rational>().map_err(|e| err(e.to_string()))?,
                        None => Rational::one(),
                    };
                    let a = g.touch_vertex(toks[1]);
                    let b = g.touch_vertex(toks[2]);
                    g.add_edge(a, b, length);
                }
                _ => return Err(err(format!("unrecognised line `{}`", line))),
            }
        }
        Ok(g)
    }

    /// Writes the graph in the text format accepted by [`MetricGraph::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for v in self.vertices() {
            let _ = writeln!(out, "v {}", self.label(v));
        }
        for e in &self.edges {
            let _ = writeln!(out, "e {} {} {}", self.label(e.u), self.label(e.v), e.length);
        }
        out
    }

    /// Checks structural well-formedness without failing.
    pub fn validate(&self) -> ValidationReport {
        let mut issues = Vec::new();
        for v in self.vertices() {
            if self.undeclared[v.0] {
                issues.push(ValidationIssue::DanglingEndpoint(self.label(v).to_string()));
            }
        }
        for (i, e) in self.edges.iter().enumerate() {
            if e.u == e.v {
                issues.push(ValidationIssue::SelfLoop(EdgeId(i)));
            }
            if !e.length.is_positive() {
                issues.push(ValidationIssue::NonpositiveLength(EdgeId(i)));
            }
        }
        let components = self.component_count();
        if components > 1 {
            issues.push(ValidationIssue::Disconnected { components });
        }
        ValidationReport {
            vertex_count: self.vertex_count(),
            edge_count: self.edge_count(),
            trivial: self.edges.is_empty(),
            issues,
        }
    }

    /// Returns an error describing the first validation issue, if any.
    pub fn ensure_valid(&self) -> Result<(), GraphError> {
        let report = self.validate();
        match report.issues.first() {
            None => Ok(()),
            Some(issue) => Err(GraphError::Invalid(issue.describe(self))),
        }
    }

    /// Resolves one step of a walk into an edge interval, or `None` for a
    /// zero-length step between coincident vertices.
    pub fn segment(&self, a: &PointOnGraph, b: &PointOnGraph) -> Option<Option<Segment>> {
        use PointOnGraph::*;
        match (a, b) {
            (Vertex(x), Vertex(y)) if x == y => Some(None),
            (Vertex(x), Vertex(y)) => {
                let e = self.shortest_edge_between(*x, *y)?;
                let (from, to) = if self.edges[e.0].u == *x {
                    (Rational::zero(), Rational::one())
                } else {
                    (Rational::one(), Rational::zero())
                };
                Some(Some(Segment { edge: e, from, to }))
            }
            (Vertex(x), Interior { edge, offset }) => {
                let end = self.endpoint_offset(*edge, *x)?;
                Some(Some(Segment {
                    edge: *edge,
                    from: end,
                    to: offset.clone(),
                }))
            }
            (Interior { edge, offset }, Vertex(y)) => {
                let end = self.endpoint_offset(*edge, *y)?;
                Some(Some(Segment {
                    edge: *edge,
                    from: offset.clone(),
                    to: end,
                }))
            }
            (Interior { edge: e1, offset: t1 }, Interior { edge: e2, offset: t2 }) => (e1 == e2).then(|| {
                Some(Segment {
                    edge: *e1,
                    from: t1.clone(),
                    to: t2.clone(),
                })
            }),
        }
    }

    fn endpoint_offset(&self, e: EdgeId, x: VertexId) -> Option<Rational> {
        let ed = &self.edges[e.0];
        if ed.u == x {
            Some(Rational::zero())
        } else if ed.v == x {
            Some(Rational::one())
        } else {
            None
        }
    }

    /// The position of a point on edge `e` as an offset, if the point lies on it.
    pub fn offset_on_edge(&self, p: &PointOnGraph, e: EdgeId) -> Option<Rational> {
        match p {
            PointOnGraph::Vertex(x) => self.endpoint_offset(e, *x),
            PointOnGraph::Interior { edge, offset } => (*edge == e).then(|| offset.clone()),
        }
    }
}

fn strip_comment(raw: &str) -> &str {
    let line = raw.trim();
    if line.starts_with('#') {
        return "";
    }
    match line.find(" #") {
        Some(i) => line[..i].trim(),
        None => line,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValidationIssue {
    SelfLoop(EdgeId),
    NonpositiveLength(EdgeId),
    DanglingEndpoint(String),
    Disconnected { components: usize },
}

impl ValidationIssue {
    pub fn describe(&self, g: &MetricGraph) -> String {
        match self {
            ValidationIssue::SelfLoop(e) => format!("self-loop at `{}`", g.label(g.edge(*e).u)),
            ValidationIssue::NonpositiveLength(e) => {
                let ed = g.edge(*e);
                format!(
                    "nonpositive length {} on {}-{}",
                    ed.length,
                    g.label(ed.u),
                    g.label(ed.v)
                )
            }
            ValidationIssue::DanglingEndpoint(l) => format!("edge endpoint `{}` is not declared", l),
            ValidationIssue::Disconnected { components } => {
                format!("graph has {} connected components", components)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub vertex_count: usize,
    pub edge_count: usize,
    /// No edges at all; valid as a graph but useless as a covering target.
    pub trivial: bool,
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

/// A location on a metric graph: a vertex or a strictly interior edge point.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PointOnGraph {
    Vertex(VertexId),
    /// `offset` is a fraction of the edge length measured from the edge's `u`.
    Interior {
        edge: EdgeId,
        offset: Rational,
    },
}

impl PointOnGraph {
    /// A point on `edge` at `offset`, snapping offsets 0 and 1 to the endpoints.
    pub fn on_edge(g: &MetricGraph, edge: EdgeId, offset: Rational) -> Result<Self, GraphError> {
        if offset.is_zero() {
            Ok(PointOnGraph::Vertex(g.edge(edge).u))
        } else if offset == Rational::one() {
            Ok(PointOnGraph::Vertex(g.edge(edge).v))
        } else if offset.is_negative() || offset > Rational::one() {
            Err(GraphError::BadOffset(offset))
        } else {
            Ok(PointOnGraph::Interior { edge, offset })
        }
    }

    /// Parses `v <label>` or `e <u> <v> <offset>`; the offset is measured from
    /// the first named endpoint.
    pub fn parse(g: &MetricGraph, text: &str) -> Result<Self, GraphError> {
        let toks: Vec<&str> = text.split_whitespace().collect();
        let bad = || GraphError::Parse {
            line: 0,
            message: format!("bad point `{}`", text.trim()),
        };
        match toks.as_slice() {
            ["v", label] => Ok(PointOnGraph::Vertex(g.require_vertex(label)?)),
            ["e", a, b, off] => {
                let a_id = g.require_vertex(a)?;
                let b_id = g.require_vertex(b)?;
                let offset: Rational = off.parse().map_err(|_| bad())?;
                let edge = g
                    .edges_between(a_id, b_id)
                    .next()
                    .ok_or_else(|| GraphError::UnknownEdge(a.to_string(), b.to_string()))?;
                let offset = if g.edge(edge).u == a_id {
                    offset
                } else {
                    Rational::one() - offset
                };
                if offset.is_negative() || offset > Rational::one() {
                    return Err(GraphError::BadOffset(offset));
                }
                PointOnGraph::on_edge(g, edge, offset)
            }
            _ => Err(bad()),
        }
    }

    pub fn display<'a>(&'a self, g: &'a MetricGraph) -> PointDisplay<'a> {
        PointDisplay { point: self, graph: g }
    }
}

pub struct PointDisplay<'a> {
    point: &'a PointOnGraph,
    graph: &'a MetricGraph,
}

impl fmt::Display for PointDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.point {
            PointOnGraph::Vertex(v) => write!(f, "v {}", self.graph.label(*v)),
            PointOnGraph::Interior { edge, offset } => {
                let e = self.graph.edge(*edge);
                write!(f, "e {} {} {}", self.graph.label(e.u), self.graph.label(e.v), offset)
            }
        }
    }
}

/// A traversed sub-interval `[from, to]` (in either direction) of one edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub edge: EdgeId,
    pub from: Rational,
    pub to: Rational,
}

impl Segment {
    pub fn length(&self, g: &MetricGraph) -> Rational {
        (&self.to - &self.from).abs() * &g.edge(self.edge).length
    }
}

/// A sequence of points where consecutive points share an edge or coincide.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Walk(pub Vec<PointOnGraph>);

impl Walk {
    pub fn points(&self) -> &[PointOnGraph] {
        &self.0
    }

    pub fn first(&self) -> Option<&PointOnGraph> {
        self.0.first()
    }

    pub fn last(&self) -> Option<&PointOnGraph> {
        self.0.last()
    }

    pub fn segments(&self, g: &MetricGraph) -> Result<Vec<Segment>, GraphError> {
        let mut out = Vec::new();
        for (i, pair) in self.0.windows(2).enumerate() {
            match g.segment(&pair[0], &pair[1]) {
                Some(Some(seg)) => out.push(seg),
                Some(None) => {}
                None => return Err(GraphError::BrokenWalk(i, i + 1)),
            }
        }
        Ok(out)
    }

    /// Joins two walks, dropping the duplicated meeting point.
    pub fn concat(&self, other: &Walk) -> Walk {
        let mut pts = self.0.clone();
        let mut rest = other.0.as_slice();
        if let (Some(a), Some(b)) = (pts.last(), rest.first()) {
            if a == b {
                rest = &rest[1..];
            }
        }
        pts.extend_from_slice(rest);
        Walk(pts)
    }
}

/// Exact length of a walk; fails on consecutive points that share no edge.
pub fn walk_length(w: &Walk, g: &MetricGraph) -> Result<Rational, GraphError> {
    Ok(w.segments(g)?.iter().map(|s| s.length(g)).sum())
}

/// Shortest-path distances between all vertex pairs; `None` marks unreachable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceTable {
    dist: Vec<Vec<Option<Rational>>>,
}

impl DistanceTable {
    pub fn get(&self, a: VertexId, b: VertexId) -> Option<&Rational> {
        self.dist[a.0][b.0].as_ref()
    }

    pub fn has_unreachable(&self) -> bool {
        self.dist.iter().flatten().any(Option::is_none)
    }

    pub fn len(&self) -> usize {
        self.dist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }
}

/// Floyd-Warshall over exact rationals.
pub fn all_pairs_shortest(g: &MetricGraph) -> DistanceTable {
    let n = g.vertex_count();
    let mut dist: Vec<Vec<Option<Rational>>> = vec![vec![None; n]; n];
    for (i, row) in dist.iter_mut().enumerate() {
        row[i] = Some(Rational::zero());
    }
    for e in g.edges() {
        if e.u == e.v {
            continue;
        }
        for (a, b) in [(e.u, e.v), (e.v, e.u)] {
            let slot = &mut dist[a.0][b.0];
            if slot.as_ref().is_none_or(|d| e.length < *d) {
                *slot = Some(e.length.clone());
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            let Some(dik) = dist[i][k].clone() else { continue };
            for j in 0..n {
                let Some(dkj) = dist[k][j].as_ref() else { continue };
                let cand = &dik + dkj;
                if dist[i][j].as_ref().is_none_or(|d| cand < *d) {
                    dist[i][j] = Some(cand);
                }
            }
        }
    }
    DistanceTable { dist }
}

/// Where a vertex of a subdivided graph sits on the base graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BasePosition {
    Vertex(VertexId),
    /// `index` is the 0-based rank among the auxiliary vertices of `edge`.
    Aux {
        edge: EdgeId,
        index: usize,
        offset: Rational,
    },
}

/// A base graph refined with ordered auxiliary vertices on each edge.
///
/// Derived edges are oriented from the lower to the higher vertex in the
/// order along their base edge.
#[derive(Debug, Clone)]
pub struct TargetSubdivision {
    base: MetricGraph,
    derived: MetricGraph,
    positions: Vec<BasePosition>,
    aux: Vec<Vec<VertexId>>,
    origin: Vec<(EdgeId, Rational, Rational)>,
    chains: Vec<Vec<EdgeId>>,
}

impl TargetSubdivision {
    /// Inserts auxiliary vertices at the given (sorted, non-decreasing) offsets
    /// on each base edge. Offsets may repeat or sit at 0/1, giving
    /// zero-length derived edges.
    pub fn with_offsets(base: &MetricGraph, offsets: &[Vec<Rational>]) -> Self {
        assert_eq!(offsets.len(), base.edge_count());
        let mut derived = MetricGraph::new();
        let mut positions = Vec::new();
        for v in base.vertices() {
            derived.add_vertex(base.label(v));
            positions.push(BasePosition::Vertex(v));
        }
        let mut aux = Vec::with_capacity(base.edge_count());
        let mut origin = Vec::new();
        let mut chains = Vec::new();
        for (ei, e) in base.edges().iter().enumerate() {
            let mut ids = Vec::new();
            for (k, off) in offsets[ei].iter().enumerate() {
                let label = format!("{}~{}#{}", base.label(e.u), base.label(e.v), k + 1);
                let id = derived.add_vertex(&label);
                positions.push(BasePosition::Aux {
                    edge: EdgeId(ei),
                    index: k,
                    offset: off.clone(),
                });
                ids.push(id);
            }
            let mut chain_pts: Vec<(VertexId, Rational)> = vec![(e.u, Rational::zero())];
            chain_pts.extend(ids.iter().copied().zip(offsets[ei].iter().cloned()));
            chain_pts.push((e.v, Rational::one()));
            let mut chain = Vec::new();
            for w in chain_pts.windows(2) {
                let len = (&w[1].1 - &w[0].1) * &e.length;
                let de = derived.add_edge_oriented(w[0].0, w[1].0, len);
                origin.push((EdgeId(ei), w[0].1.clone(), w[1].1.clone()));
                chain.push(de);
            }
            aux.push(ids);
            chains.push(chain);
        }
        TargetSubdivision {
            base: base.clone(),
            derived,
            positions,
            aux,
            origin,
            chains,
        }
    }

    /// Splits every edge into `q` equal parts.
    pub fn uniform(base: &MetricGraph, q: usize) -> Result<Self, GraphError> {
        if q == 0 {
            return Err(GraphError::InvalidGranularity);
        }
        let offs: Vec<Rational> = (1..q).map(|i| Rational::new(i as i64, q as i64)).collect();
        Ok(Self::with_offsets(base, &vec![offs; base.edge_count()]))
    }

    pub fn base(&self) -> &MetricGraph {
        &self.base
    }

    pub fn derived(&self) -> &MetricGraph {
        &self.derived
    }

    pub fn position(&self, v: VertexId) -> &BasePosition {
        &self.positions[v.0]
    }

    /// Auxiliary vertices of a base edge in order from `u` to `v`.
    pub fn aux(&self, e: EdgeId) -> &[VertexId] {
        &self.aux[e.0]
    }

    /// Derived edges along a base edge in order from `u` to `v`.
    pub fn chain(&self, e: EdgeId) -> &[EdgeId] {
        &self.chains[e.0]
    }

    /// Base edge and offset interval covered by a derived edge.
    pub fn origin(&self, de: EdgeId) -> (EdgeId, &Rational, &Rational) {
        let (e, a, b) = &self.origin[de.0];
        (*e, a, b)
    }

    /// The base-graph point a derived vertex stands for.
    pub fn to_base_point(&self, v: VertexId) -> PointOnGraph {
        match &self.positions[v.0] {
            BasePosition::Vertex(b) => PointOnGraph::Vertex(*b),
            BasePosition::Aux { edge, offset, .. } => {
                PointOnGraph::on_edge(&self.base, *edge, offset.clone()).expect("aux offsets lie in [0,1]")
            }
        }
    }

    /// Rank of a derived vertex along base edge `e` (0 = `u`, last = `v`).
    pub fn rank_on(&self, v: VertexId, e: EdgeId) -> Option<usize> {
        match &self.positions[v.0] {
            BasePosition::Vertex(b) => {
                let ed = self.base.edge(e);
                if ed.u == *b {
                    Some(0)
                } else if ed.v == *b {
                    Some(self.aux[e.0].len() + 1)
                } else {
                    None
                }
            }
            BasePosition::Aux { edge, index, .. } => (*edge == e).then_some(index + 1),
        }
    }

    /// Rebuilds the base graph by splicing out auxiliary vertices.
    pub fn splice(&self) -> MetricGraph {
        let mut g = MetricGraph::new();
        for v in self.base.vertices() {
            g.add_vertex(self.base.label(v));
        }
        for (ei, chain) in self.chains.iter().enumerate() {
            let len: Rational = chain.iter().map(|&d| &self.derived.edge(d).length).sum();
            let e = self.base.edge(EdgeId(ei));
            g.add_edge_oriented(e.u, e.v, len);
        }
        g
    }
}

/// Uniform subdivision of every edge into `q` parts.
pub fn subdivide(g: &MetricGraph, q: usize) -> Result<TargetSubdivision, GraphError> {
    TargetSubdivision::uniform(g, q)
}

/// Degree histogram, handy for reports.
pub fn degree_histogram(g: &MetricGraph) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for v in g.vertices() {
        *h.entry(g.degree(v)).or_insert(0) += 1;
    }
    h
}
