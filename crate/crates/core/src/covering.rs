//! Folding certificates and the exact isometric-covering verifier.
//!
//! A certificate places each source vertex on the target and routes each
//! source edge along a target walk. It is accepted at scale `α` when every
//! route starts and ends at its endpoints' images, no route is longer than
//! `α` times its source edge, and the routes together cover every target edge
//! completely. A route shorter than its budget is fine: the leftover length is
//! absorbed by folding back and forth inside an edge at one of its points.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::graph::{EdgeId, GraphError, MetricGraph, PointOnGraph, VertexId, Walk};
use crate::rational::Rational;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum CertificateError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("source vertex `{0}` has no placement")]
    MissingPlacement(String),
    #[error("source edge {0}-{1} has no route")]
    MissingRoute(String, String),
    #[error("certificate has no scale line")]
    MissingScale,
}

/// Placement of every source vertex plus a routed walk per source edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldingMap {
    pub scale: Rational,
    /// Indexed by source vertex id.
    pub placement: Vec<PointOnGraph>,
    /// Indexed by source edge id; each walk runs from the image of the edge's
    /// `u` to the image of its `v`.
    pub routes: Vec<Walk>,
}

impl FoldingMap {
    /// Each vertex to itself, each edge along itself.
    pub fn identity(g: &MetricGraph) -> FoldingMap {
        FoldingMap {
            scale: Rational::one(),
            placement: g.vertices().map(PointOnGraph::Vertex).collect(),
            routes: g
                .edges()
                .iter()
                .enumerate()
                .map(|(i, e)| {
                    if g.edges_between(e.u, e.v).count() > 1 {
                        let mid = PointOnGraph::Interior {
                            edge: EdgeId(i),
                            offset: Rational::new(1, 2),
                        };
                        Walk(vec![PointOnGraph::Vertex(e.u), mid, PointOnGraph::Vertex(e.v)])
                    } else {
                        Walk(vec![PointOnGraph::Vertex(e.u), PointOnGraph::Vertex(e.v)])
                    }
                })
                .collect(),
        }
    }

    /// Serialises to the line-oriented certificate format.
    pub fn to_text(&self, src: &MetricGraph, dst: &MetricGraph) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scale {}", self.scale);
        for v in src.vertices() {
            let _ = writeln!(out, "place {} {}", src.label(v), self.placement[v.0].display(dst));
        }
        for (i, e) in src.edges().iter().enumerate() {
            let pts: Vec<String> = self.routes[i]
                .points()
                .iter()
                .map(|p| p.display(dst).to_string())
                .collect();
            let _ = writeln!(out, "route {} {} : {}", src.label(e.u), src.label(e.v), pts.join(" ; "));
        }
        out
    }

    /// Parses a certificate.
    ///
    /// ```text
    /// scale 3/2
    /// place a v B
    /// place b e B C 1/2
    /// route a b : v B ; e B C 1/2
    /// ```
    ///
    /// A route may name its edge in either direction; it is stored oriented
    /// like the source edge. Parallel source edges are filled in id order.
    pub fn parse(src: &MetricGraph, dst: &MetricGraph, text: &str) -> Result<FoldingMap, CertificateError> {
        let mut scale = None;
        let mut placement: Vec<Option<PointOnGraph>> = vec![None; src.vertex_count()];
        let mut routes: Vec<Option<Walk>> = vec![None; src.edge_count()];
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| CertificateError::Parse { line: i + 1, message };
            let (kw, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            match kw {
                "scale" => {
                    scale = Some(rest.trim().parse::<Rational>().map_err(|e| err(e.to_string()))?);
                }
                "place" => {
                    let (label, point) = rest
                        .trim()
                        .split_once(char::is_whitespace)
                        .ok_or_else(|| err("bad place".into()))?;
                    let v = src.require_vertex(label)?;
                    let p = PointOnGraph::parse(dst, point).map_err(|e| err(e.to_string()))?;
                    placement[v.0] = Some(p);
                }
                "route" => {
                    let (head, body) = rest.split_once(':').ok_or_else(|| err("route needs `:`".into()))?;
                    let ends: Vec<&str> = head.split_whitespace().collect();
                    if ends.len() != 2 {
                        return Err(err("route needs two source endpoints".into()));
                    }
                    let a = src.require_vertex(ends[0])?;
                    let b = src.require_vertex(ends[1])?;
                    let edge = src
                        .edges_between(a, b)
                        .find(|e| routes[e.0].is_none())
                        .ok_or_else(|| err(format!("no unrouted source edge {}-{}", ends[0], ends[1])))?;
                    let mut pts = body
                        .split(';')
                        .map(|p| PointOnGraph::parse(dst, p).map_err(|e| err(e.to_string())))
                        .collect::<Result<Vec<_>, _>>()?;
                    if src.edge(edge).u != a {
                        pts.reverse();
                    }
                    routes[edge.0] = Some(Walk(pts));
                }
                _ => return Err(err(format!("unknown keyword `{}`", kw))),
            }
        }
        let scale = scale.ok_or(CertificateError::MissingScale)?;
        let placement = placement
            .into_iter()
            .enumerate()
            .map(|(i, p)| p.ok_or_else(|| CertificateError::MissingPlacement(src.label(VertexId(i)).into())))
            .collect::<Result<Vec<_>, _>>()?;
        let routes = routes
            .into_iter()
            .enumerate()
            .map(|(i, w)| {
                w.ok_or_else(|| {
                    let e = src.edge(EdgeId(i));
                    CertificateError::MissingRoute(src.label(e.u).into(), src.label(e.v).into())
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(FoldingMap {
            scale,
            placement,
            routes,
        })
    }
}

/// A maximal piece of a target edge covered a constant number of times.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoveredInterval {
    pub from: Rational,
    pub to: Rational,
    pub multiplicity: usize,
}

/// Per target edge, the covered pieces in increasing offset order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageProfile {
    pub edges: Vec<Vec<CoveredInterval>>,
    lengths: Vec<Rational>,
}

impl CoverageProfile {
    /// Sweeps the traversed segments of all walks over `dst`.
    pub fn from_walks<'a>(dst: &MetricGraph, walks: impl IntoIterator<Item = &'a Walk>) -> Result<Self, GraphError> {
        let mut raw: Vec<Vec<(Rational, Rational)>> = vec![Vec::new(); dst.edge_count()];
        for w in walks {
            for seg in w.segments(dst)? {
                let (a, b) = if seg.from <= seg.to {
                    (seg.from, seg.to)
                } else {
                    (seg.to, seg.from)
                };
                if a < b {
                    raw[seg.edge.0].push((a, b));
                }
            }
        }
        let edges = raw.into_iter().map(sweep).collect();
        let lengths = dst.edges().iter().map(|e| e.length.clone()).collect();
        Ok(CoverageProfile { edges, lengths })
    }

    /// Uncovered offset intervals of one edge.
    pub fn gaps(&self, e: EdgeId) -> Vec<(Rational, Rational)> {
        let mut gaps = Vec::new();
        let mut cursor = Rational::zero();
        for piece in &self.edges[e.0] {
            if piece.from > cursor {
                gaps.push((cursor.clone(), piece.from.clone()));
            }
            cursor = piece.to.clone();
        }
        if cursor < Rational::one() {
            gaps.push((cursor, Rational::one()));
        }
        gaps
    }

    /// Total target length covered at least `k` times.
    pub fn length_with_multiplicity_at_least(&self, k: usize) -> Rational {
        self.edges
            .iter()
            .zip(&self.lengths)
            .map(|(pieces, len)| {
                pieces
                    .iter()
                    .filter(|p| p.multiplicity >= k)
                    .map(|p| (&p.to - &p.from) * len)
                    .sum::<Rational>()
            })
            .sum()
    }

    /// Σ (multiplicity − 1) × length over covered pieces.
    pub fn excess_length(&self) -> Rational {
        self.edges
            .iter()
            .zip(&self.lengths)
            .map(|(pieces, len)| {
                pieces
                    .iter()
                    .map(|p| (&p.to - &p.from) * len * Rational::from(p.multiplicity as i64 - 1))
                    .sum::<Rational>()
            })
            .sum()
    }
}

fn sweep(mut intervals: Vec<(Rational, Rational)>) -> Vec<CoveredInterval> {
    if intervals.is_empty() {
        return Vec::new();
    }
    let mut events: BTreeMap<Rational, i64> = BTreeMap::new();
    for (a, b) in intervals.drain(..) {
        *events.entry(a).or_insert(0) += 1;
        *events.entry(b).or_insert(0) -= 1;
    }
    let mut out: Vec<CoveredInterval> = Vec::new();
    let mut depth = 0i64;
    let mut prev: Option<Rational> = None;
    for (x, delta) in events {
        if let Some(p) = prev.take() {
            if depth > 0 && p < x {
                let m = depth as usize;
                match out.last_mut() {
                    Some(last) if last.to == p && last.multiplicity == m => last.to = x.clone(),
                    _ => out.push(CoveredInterval {
                        from: p,
                        to: x.clone(),
                        multiplicity: m,
                    }),
                }
            }
        }
        depth += delta;
        prev = Some(x);
    }
    out
}

/// Total target length covered two or more times.
pub fn doubled_length(profile: &CoverageProfile) -> Rational {
    profile.length_with_multiplicity_at_least(2)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VerifyFailure {
    /// Route does not start/end at the images of its source edge's endpoints.
    RouteEndpoint {
        edge: EdgeId,
    },
    /// Consecutive route points share no target edge.
    BrokenRoute {
        edge: EdgeId,
    },
    LengthExcess {
        edge: EdgeId,
        length: Rational,
        budget: Rational,
    },
    /// Leftover budget at an isolated point cannot be folded away.
    UnrealizableSlack {
        edge: EdgeId,
    },
    CoverageGap {
        edge: EdgeId,
        from: Rational,
        to: Rational,
    },
    NonpositiveScale,
    ShapeMismatch,
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub failures: Vec<VerifyFailure>,
    pub profile: Option<CoverageProfile>,
    pub route_lengths: Vec<Rational>,
    /// Unused budget per source edge (never negative in accepted reports).
    pub slack: Vec<Rational>,
    pub doubled_length: Rational,
    pub total_routed_length: Rational,
}

impl VerifyReport {
    pub fn accepted(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn describe(&self, src: &MetricGraph, dst: &MetricGraph) -> Vec<String> {
        self.failures
            .iter()
            .map(|f| match f {
                VerifyFailure::RouteEndpoint { edge } => format!("route {} has wrong endpoints", edge_name(src, *edge)),
                VerifyFailure::BrokenRoute { edge } => format!("route {} is not a walk", edge_name(src, *edge)),
                VerifyFailure::LengthExcess { edge, length, budget } => {
                    format!(
                        "route {} has length {} > budget {}",
                        edge_name(src, *edge),
                        length,
                        budget
                    )
                }
                VerifyFailure::UnrealizableSlack { edge } => {
                    format!("route {} cannot absorb its slack", edge_name(src, *edge))
                }
                VerifyFailure::CoverageGap { edge, from, to } => {
                    format!("target edge {} uncovered on [{}, {}]", edge_name(dst, *edge), from, to)
                }
                VerifyFailure::NonpositiveScale => "scale must be positive".into(),
                VerifyFailure::ShapeMismatch => "certificate does not match the source graph".into(),
            })
            .collect()
    }
}

fn edge_name(g: &MetricGraph, e: EdgeId) -> String {
    let ed = g.edge(e);
    format!("{}-{}", g.label(ed.u), g.label(ed.v))
}

/// Checks a certificate exactly; never panics on malformed certificates.
pub fn verify(src: &MetricGraph, dst: &MetricGraph, fm: &FoldingMap) -> VerifyReport {
    let mut failures = Vec::new();
    let mut route_lengths = Vec::new();
    let mut slack = Vec::new();
    if !fm.scale.is_positive() {
        failures.push(VerifyFailure::NonpositiveScale);
    }
    if fm.placement.len() != src.vertex_count() || fm.routes.len() != src.edge_count() {
        failures.push(VerifyFailure::ShapeMismatch);
        return VerifyReport {
            failures,
            profile: None,
            route_lengths,
            slack,
            doubled_length: Rational::zero(),
            total_routed_length: Rational::zero(),
        };
    }
    let mut walks_ok = true;
    for (i, e) in src.edges().iter().enumerate() {
        let edge = EdgeId(i);
        let w = &fm.routes[i];
        if w.first() != Some(&fm.placement[e.u.0]) || w.last() != Some(&fm.placement[e.v.0]) {
            failures.push(VerifyFailure::RouteEndpoint { edge });
        }
        let len = match crate::graph::walk_length(w, dst) {
            Ok(l) => l,
            Err(_) => {
                failures.push(VerifyFailure::BrokenRoute { edge });
                walks_ok = false;
                route_lengths.push(Rational::zero());
                slack.push(Rational::zero());
                continue;
            }
        };
        let budget = &fm.scale * &e.length;
        if len > budget {
            failures.push(VerifyFailure::LengthExcess {
                edge,
                length: len.clone(),
                budget: budget.clone(),
            });
        } else if len < budget && !slack_realizable(dst, w) {
            failures.push(VerifyFailure::UnrealizableSlack { edge });
        }
        slack.push(&budget - &len);
        route_lengths.push(len);
    }
    let total_routed_length: Rational = route_lengths.iter().sum();
    let profile = if walks_ok {
        CoverageProfile::from_walks(dst, &fm.routes).ok()
    } else {
        None
    };
    if let Some(p) = &profile {
        for e in dst.edge_ids() {
            for (from, to) in p.gaps(e) {
                failures.push(VerifyFailure::CoverageGap { edge: e, from, to });
            }
        }
    }
    let doubled = profile.as_ref().map(doubled_length).unwrap_or_else(Rational::zero);
    VerifyReport {
        failures,
        profile,
        route_lengths,
        slack,
        doubled_length: doubled,
        total_routed_length,
    }
}

fn slack_realizable(dst: &MetricGraph, w: &Walk) -> bool {
    match w.points() {
        [] => false,
        [PointOnGraph::Vertex(v)] => dst.degree(*v) > 0,
        _ => true,
    }
}
