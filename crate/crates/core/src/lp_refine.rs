//! Rational refinement of a discrete folding.
//!
//! A certificate fixes which subdivision edges every route uses. With those
//! choices frozen the remaining system is a linear program over the
//! auxiliary vertex positions, the per-edge lengths and the flows, and its
//! optimum is an exact rational scale.

use std::collections::BTreeMap;

use crate::covering::{verify, FoldingMap};
use crate::graph::{EdgeId, GraphError, MetricGraph, PointOnGraph, TargetSubdivision, VertexId, Walk};
use crate::lp::{solve, LinearProgram, LpStatus, Sense};
use crate::rational::Rational;

#[derive(Debug, thiserror::Error)]
pub enum RefineError {
    #[error("certificate does not verify: {0}")]
    Unverified(String),
    #[error("edge {edge} needs {needed} auxiliary points but only {cap} are allowed")]
    TooManyAux { edge: String, needed: usize, cap: usize },
    #[error("fixed choices violate `{0}`")]
    SkeletonViolation(String),
    #[error("the linear program is {0:?}")]
    Lp(LpStatus),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Directed use of a derived edge; `forward` follows the edge's orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Arc {
    pub edge: usize,
    pub forward: bool,
}

impl Arc {
    pub fn index(&self) -> usize {
        2 * self.edge + usize::from(!self.forward)
    }
}

/// The integer part of a solution: subdivision, placements and edge uses.
#[derive(Debug, Clone)]
pub struct Skeleton {
    pub sub: TargetSubdivision,
    pub c: usize,
    /// Derived vertex of each source vertex.
    pub placement: Vec<usize>,
    /// Arc sequence of each source edge's route.
    pub routes: Vec<Vec<Arc>>,
    pub source_lengths: Vec<Rational>,
    pub source_ends: Vec<(usize, usize)>,
    /// Flow capacity constant. Large enough that every walk using each arc
    /// at most once carries a feasible flow.
    pub flow_cap: Rational,
}

impl Skeleton {
    /// Reads the skeleton off a verified certificate. Every distinct interior
    /// offset on an edge becomes an auxiliary vertex.
    pub fn from_certificate(
        src: &MetricGraph,
        dst: &MetricGraph,
        fm: &FoldingMap,
        c: usize,
    ) -> Result<Skeleton, RefineError> {
        Self::build(src, dst, fm, c, false)
    }

    /// Like `from_certificate` but with exactly `c` auxiliary vertices per
    /// edge; the surplus sits at offset 0.
    pub fn padded(src: &MetricGraph, dst: &MetricGraph, fm: &FoldingMap, c: usize) -> Result<Skeleton, RefineError> {
        Self::build(src, dst, fm, c, true)
    }

    fn build(
        src: &MetricGraph,
        dst: &MetricGraph,
        fm: &FoldingMap,
        c: usize,
        pad: bool,
    ) -> Result<Skeleton, RefineError> {
        let rep = verify(src, dst, fm);
        if !rep.accepted() {
            return Err(RefineError::Unverified(rep.describe(src, dst).join("; ")));
        }
        let mut offsets: Vec<Vec<Rational>> = vec![Vec::new(); dst.edge_count()];
        let mut note = |p: &PointOnGraph| {
            if let PointOnGraph::Interior { edge, offset } = p {
                offsets[edge.0].push(offset.clone());
            }
        };
        fm.placement.iter().for_each(&mut note);
        fm.routes.iter().flat_map(|w| w.points()).for_each(&mut note);
        for (i, list) in offsets.iter_mut().enumerate() {
            list.sort();
            list.dedup();
            if list.len() > c {
                let e = dst.edge(EdgeId(i));
                return Err(RefineError::TooManyAux {
                    edge: format!("{}-{}", dst.label(e.u), dst.label(e.v)),
                    needed: list.len(),
                    cap: c,
                });
            }
            if pad {
                let extra = c - list.len();
                list.splice(0..0, std::iter::repeat_n(Rational::zero(), extra));
            }
        }
        let sub = TargetSubdivision::with_offsets(dst, &offsets);
        let vertex_of = |p: &PointOnGraph| -> usize {
            match p {
                PointOnGraph::Vertex(v) => v.0,
                PointOnGraph::Interior { edge, offset } => {
                    let k = offsets[edge.0]
                        .iter()
                        .rposition(|o| o == offset)
                        .expect("offset recorded");
                    sub.aux(*edge)[k].0
                }
            }
        };
        let placement: Vec<usize> = fm.placement.iter().map(vertex_of).collect();
        let mut routes = Vec::with_capacity(fm.routes.len());
        for w in &fm.routes {
            let mut arcs = Vec::new();
            for seg in w.segments(dst)? {
                if seg.from == seg.to {
                    continue;
                }
                let e = seg.edge;
                let rank = |t: &Rational| -> usize {
                    if t.is_zero() {
                        0
                    } else if *t == Rational::one() {
                        offsets[e.0].len() + 1
                    } else {
                        offsets[e.0].iter().rposition(|o| o == t).expect("offset recorded") + 1
                    }
                };
                let (r1, r2) = (rank(&seg.from), rank(&seg.to));
                let chain = sub.chain(e);
                if r1 < r2 {
                    arcs.extend(chain[r1..r2].iter().map(|d| Arc {
                        edge: d.0,
                        forward: true,
                    }));
                } else {
                    arcs.extend(chain[r2..r1].iter().rev().map(|d| Arc {
                        edge: d.0,
                        forward: false,
                    }));
                }
            }
            routes.push(arcs);
        }
        let flow_cap = flow_capacity(dst, sub.derived());
        Ok(Skeleton {
            sub,
            c,
            placement,
            routes,
            source_lengths: src.edges().iter().map(|e| e.length.clone()).collect(),
            source_ends: src.edges().iter().map(|e| (e.u.0, e.v.0)).collect(),
            flow_cap,
        })
    }

    fn arc_ends(&self, a: Arc) -> (usize, usize) {
        let e = self.sub.derived().edge(EdgeId(a.edge));
        if a.forward {
            (e.u.0, e.v.0)
        } else {
            (e.v.0, e.u.0)
        }
    }

    /// A flow along the route: the i-th of k arcs carries k - i units, so
    /// every vertex after the start gains one unit per visit.
    pub fn walk_flow(&self, s: usize) -> Vec<Rational> {
        let mut f = vec![Rational::zero(); 2 * self.sub.derived().edge_count()];
        let k = self.routes[s].len();
        for (i, a) in self.routes[s].iter().enumerate() {
            f[a.index()] += Rational::from((k - i) as i64);
        }
        f
    }

    /// Binary edge decisions per source edge.
    pub fn used(&self, s: usize) -> Vec<bool> {
        let mut used = vec![false; 2 * self.sub.derived().edge_count()];
        for a in &self.routes[s] {
            used[a.index()] = true;
        }
        used
    }

    /// Reachability per source edge: vertices touching a used arc.
    pub fn reach(&self, s: usize) -> Vec<bool> {
        let mut r = vec![false; self.sub.derived().vertex_count()];
        for a in &self.routes[s] {
            let (x, y) = self.arc_ends(*a);
            r[x] = true;
            r[y] = true;
        }
        r
    }

    /// Checks the constraints that only involve fixed binaries.
    pub fn check(&self) -> Result<(), RefineError> {
        let d = self.sub.derived();
        let mut covered = vec![false; d.edge_count()];
        for (s, route) in self.routes.iter().enumerate() {
            let used = self.used(s);
            if used.iter().filter(|u| **u).count() != route.len() {
                return Err(RefineError::SkeletonViolation(format!(
                    "degree constr. (arc repeated by source edge {})",
                    s
                )));
            }
            let (u, v) = self.source_ends[s];
            let mut balance = vec![0i64; d.vertex_count()];
            for a in route {
                let (x, y) = self.arc_ends(*a);
                balance[x] += 1;
                balance[y] -= 1;
                covered[a.edge] = true;
            }
            balance[self.placement[u]] -= 1;
            balance[self.placement[v]] += 1;
            if balance.iter().any(|b| *b != 0) {
                return Err(RefineError::SkeletonViolation(format!(
                    "degree constr. (source edge {})",
                    s
                )));
            }
        }
        if let Some(e) = covered.iter().position(|c| !c) {
            return Err(RefineError::SkeletonViolation(format!(
                "edges covered (derived edge {})",
                e
            )));
        }
        Ok(())
    }
}

/// Flow constant used in place of the scale cap in the flow rows: twice the
/// derived edge count, and never below the target edge count.
pub fn flow_capacity(dst: &MetricGraph, derived: &MetricGraph) -> Rational {
    Rational::from(dst.edge_count().max(2 * derived.edge_count()) as i64)
}

/// Where each family of variables lives in the program.
#[derive(Debug, Clone)]
pub struct LpIndex {
    /// Position variable per auxiliary derived vertex.
    pub position: BTreeMap<usize, usize>,
    /// `length[s][arc]`
    pub length: Vec<Vec<usize>>,
    /// `flow[s][arc]`
    pub flow: Vec<Vec<usize>>,
    pub objective: usize,
}

/// The residual program after fixing the binaries of `sk`.
pub fn build_lp(sk: &Skeleton) -> Result<(LinearProgram, LpIndex), RefineError> {
    sk.check()?;
    let d = sk.sub.derived();
    let base = sk.sub.base();
    let one = Rational::one;
    let mut lp = LinearProgram::default();
    let mut position = BTreeMap::new();
    for v in d.vertices() {
        if let crate::graph::BasePosition::Aux { .. } = sk.sub.position(v) {
            let j = lp.add_var(format!("a_n{}", v.0), Rational::zero(), Some(one()));
            position.insert(v.0, j);
        }
    }
    // Position of a derived vertex along the base edge of derived edge `de`:
    // either a variable or a pinned endpoint constant.
    let pos_term = |v: usize, de: usize| -> Result<usize, Rational> {
        match position.get(&v) {
            Some(&j) => Ok(j),
            None => {
                let (be, _, _) = sk.sub.origin(EdgeId(de));
                let e = base.edge(be);
                Err(if e.u.0 == v && e.v.0 != v {
                    Rational::zero()
                } else {
                    Rational::one()
                })
            }
        }
    };
    let objective = lp.add_var("o", Rational::zero(), None);
    let mut length = Vec::new();
    let mut flow = Vec::new();
    for s in 0..sk.routes.len() {
        let used = sk.used(s);
        let reach = sk.reach(s);
        let mut ls = Vec::with_capacity(2 * d.edge_count());
        let mut fs = Vec::with_capacity(2 * d.edge_count());
        for de in 0..d.edge_count() {
            for forward in [true, false] {
                let arc = Arc { edge: de, forward };
                let e_val = if used[arc.index()] { one() } else { Rational::zero() };
                let dir = if forward { "x" } else { "y" };
                let l = lp.add_var(format!("l_s{}_d{}_{}", s, de, dir), Rational::zero(), None);
                let f = lp.add_var(format!("f_s{}_d{}_{}", s, de, dir), Rational::zero(), None);
                let (be, _, _) = sk.sub.origin(EdgeId(de));
                let big_l = base.edge(be).length.clone();
                // edge/flow rel.
                lp.add_constraint(
                    format!("edge_flow_lo_s{}_d{}_{}", s, de, dir),
                    vec![(f, one())],
                    Sense::Ge,
                    e_val.clone(),
                );
                lp.add_constraint(
                    format!("edge_flow_hi_s{}_d{}_{}", s, de, dir),
                    vec![(f, one())],
                    Sense::Le,
                    &sk.flow_cap * &e_val,
                );
                // edge/length rel.
                lp.add_constraint(
                    format!("len_use_s{}_d{}_{}", s, de, dir),
                    vec![(l, one())],
                    Sense::Le,
                    &big_l * &e_val,
                );
                let ed = d.edge(EdgeId(de));
                let mut upper_row = vec![(l, one())];
                let mut rhs_up = Rational::zero();
                let mut lower_row = vec![(l, one())];
                let mut rhs_lo = &big_l * (&e_val - one());
                // l <= L (a_y - a_x) and l - L (a_y - a_x) >= L (e - 1).
                for (vtx, sign) in [(ed.v.0, -one()), (ed.u.0, one())] {
                    match pos_term(vtx, de) {
                        Ok(j) => {
                            upper_row.push((j, &sign * &big_l));
                            lower_row.push((j, &sign * &big_l));
                        }
                        Err(k) => {
                            rhs_up -= &sign * &big_l * &k;
                            rhs_lo -= &sign * &big_l * &k;
                        }
                    }
                }
                lp.add_constraint(format!("len_pos_s{}_d{}_{}", s, de, dir), upper_row, Sense::Le, rhs_up);
                lp.add_constraint(
                    format!("len_tight_s{}_d{}_{}", s, de, dir),
                    lower_row,
                    Sense::Ge,
                    rhs_lo,
                );
                ls.push(l);
                fs.push(f);
            }
        }
        // >= demand 1
        let (u, _) = sk.source_ends[s];
        for n in d.vertices() {
            let mut row = Vec::new();
            for &de in d.incident(n) {
                let ed = d.edge(de);
                // Arc into n and arc out of n.
                let (inn, out) = if ed.v == n {
                    (
                        Arc {
                            edge: de.0,
                            forward: true,
                        },
                        Arc {
                            edge: de.0,
                            forward: false,
                        },
                    )
                } else {
                    (
                        Arc {
                            edge: de.0,
                            forward: false,
                        },
                        Arc {
                            edge: de.0,
                            forward: true,
                        },
                    )
                };
                row.push((fs[inn.index()], one()));
                row.push((fs[out.index()], -one()));
            }
            let supply = if sk.placement[u] == n.0 {
                sk.flow_cap.clone()
            } else {
                Rational::zero()
            };
            let need = if reach[n.0] { one() } else { Rational::zero() };
            lp.add_constraint(format!("demand_s{}_n{}", s, n.0), row, Sense::Ge, need - supply);
        }
        // lengths <= o, normalised by the source edge length.
        let mut row: Vec<(usize, Rational)> = ls.iter().map(|&l| (l, one())).collect();
        row.push((objective, -sk.source_lengths[s].clone()));
        lp.add_constraint(format!("lengths_le_o_s{}", s), row, Sense::Le, Rational::zero());
        length.push(ls);
        flow.push(fs);
    }
    // Monotone positions along each base edge.
    for be in base.edge_ids() {
        let chain = sk.sub.chain(be);
        for &de in chain {
            let ed = d.edge(de);
            let mut row = Vec::new();
            let mut rhs = Rational::zero();
            for (vtx, sign) in [(ed.v.0, one()), (ed.u.0, -one())] {
                match pos_term(vtx, de.0) {
                    Ok(j) => row.push((j, sign)),
                    Err(k) => rhs -= &sign * &k,
                }
            }
            if !row.is_empty() {
                lp.add_constraint(format!("monotone_d{}", de.0), row, Sense::Ge, rhs);
            }
        }
    }
    lp.objective = vec![(objective, one())];
    Ok((
        lp,
        LpIndex {
            position,
            length,
            flow,
            objective,
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: Rational,
    /// Offset of each auxiliary derived vertex along its base edge.
    pub positions: BTreeMap<usize, Rational>,
    pub lengths: Vec<Vec<Rational>>,
    pub flows: Vec<Vec<Rational>>,
    /// Whether the dual objective matched the primal.
    pub duality_gap_closed: bool,
}

pub fn solve_lp(lp: &LinearProgram, idx: &LpIndex) -> LpSolution {
    let res = solve(lp);
    let pick = |rows: &Vec<Vec<usize>>| -> Vec<Vec<Rational>> {
        rows.iter()
            .map(|r| r.iter().map(|&j| res.x[j].clone()).collect())
            .collect()
    };
    LpSolution {
        status: res.status,
        objective: res.x[idx.objective].clone(),
        positions: idx.position.iter().map(|(&v, &j)| (v, res.x[j].clone())).collect(),
        lengths: pick(&idx.length),
        flows: pick(&idx.flow),
        duality_gap_closed: res.status == LpStatus::Optimal && res.dual_objective == res.objective,
    }
}

/// Re-solves the positions of a certificate exactly. The returned scale is
/// never larger than the input scale.
pub fn refine(
    src: &MetricGraph,
    dst: &MetricGraph,
    fm: &FoldingMap,
    c: usize,
) -> Result<(FoldingMap, Rational), RefineError> {
    let (out, sol) = refine_detailed(src, dst, fm, c)?;
    Ok((out, sol.objective))
}

pub fn refine_detailed(
    src: &MetricGraph,
    dst: &MetricGraph,
    fm: &FoldingMap,
    c: usize,
) -> Result<(FoldingMap, LpSolution), RefineError> {
    let sk = Skeleton::from_certificate(src, dst, fm, c)?;
    let (lp, idx) = build_lp(&sk)?;
    let sol = solve_lp(&lp, &idx);
    if sol.status != LpStatus::Optimal {
        return Err(RefineError::Lp(sol.status));
    }
    let point = |v: usize| -> PointOnGraph {
        match sk.sub.position(VertexId(v)) {
            crate::graph::BasePosition::Vertex(b) => PointOnGraph::Vertex(*b),
            crate::graph::BasePosition::Aux { edge, .. } => {
                PointOnGraph::on_edge(dst, *edge, sol.positions[&v].clone()).expect("position in [0,1]")
            }
        }
    };
    let placement: Vec<PointOnGraph> = sk.placement.iter().map(|&v| point(v)).collect();
    let routes: Vec<Walk> = sk
        .routes
        .iter()
        .enumerate()
        .map(|(s, arcs)| {
            let mut pts = vec![placement[sk.source_ends[s].0].clone()];
            for a in arcs {
                let (_, y) = sk.arc_ends(*a);
                let p = point(y);
                if pts.last() != Some(&p) {
                    pts.push(p);
                }
            }
            Walk(tidy(dst, pts))
        })
        .collect();
    let out = FoldingMap {
        scale: sol.objective.clone(),
        placement,
        routes,
    };
    Ok((out, sol))
}

/// Drops pass-through interior points and keeps vertex-to-vertex steps
/// unambiguous.
fn tidy(g: &MetricGraph, pts: Vec<PointOnGraph>) -> Vec<PointOnGraph> {
    let mut out: Vec<PointOnGraph> = Vec::with_capacity(pts.len());
    for (i, p) in pts.iter().enumerate() {
        if let (Some(prev), Some(next), PointOnGraph::Interior { edge, offset }) = (out.last(), pts.get(i + 1), p) {
            if let (Some(a), Some(b)) = (g.offset_on_edge(prev, *edge), g.offset_on_edge(next, *edge)) {
                let through = (a < *offset && *offset < b) || (b < *offset && *offset < a);
                let resolves = match (prev, next) {
                    (PointOnGraph::Vertex(x), PointOnGraph::Vertex(y)) => {
                        g.shortest_edge_between(*x, *y) == Some(*edge)
                    }
                    _ => true,
                };
                if through && resolves {
                    continue;
                }
            }
        }
        out.push(p.clone());
    }
    out
}
