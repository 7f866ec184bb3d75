//! Integer-unit view of a subdivided target used by the discrete search.

use std::collections::{HashMap, HashSet};

use num_traits::ToPrimitive;

use crate::graph::{EdgeId, GraphError, MetricGraph, PointOnGraph, TargetSubdivision, VertexId, Walk};
use crate::rational::Rational;

pub(crate) const UNREACHABLE: u32 = u32::MAX;

/// Fixed-width bit set over derived edges.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub(crate) struct Bits(Box<[u64]>);

impl Bits {
    pub fn new(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64).max(1)].into_boxed_slice())
    }

    pub fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn or_assign(&mut self, o: &Bits) {
        for (a, b) in self.0.iter_mut().zip(o.0.iter()) {
            *a |= b;
        }
    }

    pub fn is_subset(&self, o: &Bits) -> bool {
        self.0.iter().zip(o.0.iter()).all(|(a, b)| a & !b == 0)
    }

    pub fn count(&self) -> u32 {
        self.0.iter().map(|w| w.count_ones()).sum()
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(wi, &w)| {
            let mut bits = w;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(wi * 64 + b)
            })
        })
    }

    /// Indices set in `self` but not in `o`.
    pub fn minus<'a>(&'a self, o: &'a Bits) -> impl Iterator<Item = usize> + 'a {
        self.0.iter().zip(o.0.iter()).enumerate().flat_map(|(wi, (&a, &b))| {
            let mut bits = a & !b;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let t = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(wi * 64 + t)
            })
        })
    }
}

/// A walk in the derived graph: start vertex plus derived edges in order.
#[derive(Clone, Debug)]
pub(crate) struct GridWalk {
    pub start: usize,
    pub edges: Vec<usize>,
}

#[derive(Clone, Debug)]
pub(crate) struct RouteOption {
    pub cover: Bits,
    pub covered_len: u64,
    pub walk: GridWalk,
}

pub(crate) struct Grid {
    pub sub: TargetSubdivision,
    pub unit: Rational,
    pub n: usize,
    pub m: usize,
    pub w: Vec<u32>,
    pub ends: Vec<(usize, usize)>,
    pub adj: Vec<Vec<(usize, usize)>>,
    pub dist: Vec<Vec<u32>>,
    pub perimeter: u64,
    pub odd: Vec<usize>,
    /// `near[x][e]`: shortest walk from `x` that traverses `e` completely.
    pub near: Vec<Vec<u32>>,
}

impl Grid {
    pub fn new(base: &MetricGraph, q: usize) -> Result<Self, GraphError> {
        let sub = TargetSubdivision::uniform(base, q)?;
        let d = sub.derived();
        let mut unit: Option<Rational> = None;
        for e in d.edges() {
            unit = Some(match unit {
                None => e.length.clone(),
                Some(u) => u.gcd(&e.length),
            });
        }
        let unit = unit.unwrap_or_else(Rational::one);
        let n = d.vertex_count();
        let m = d.edge_count();
        let mut w = Vec::with_capacity(m);
        let mut ends = Vec::with_capacity(m);
        let mut adj = vec![Vec::new(); n];
        for (i, e) in d.edges().iter().enumerate() {
            let units = (&e.length / &unit)
                .numer()
                .to_u32()
                .ok_or_else(|| GraphError::Invalid("edge lengths too far apart for the grid".into()))?;
            w.push(units);
            ends.push((e.u.0, e.v.0));
            adj[e.u.0].push((i, e.v.0));
            if e.u != e.v {
                adj[e.v.0].push((i, e.u.0));
            }
        }
        let dist = integer_apsp(n, &ends, &w);
        let perimeter = w.iter().map(|&x| x as u64).sum();
        let odd = (0..n).filter(|&x| adj[x].len() % 2 == 1).collect();
        let near = (0..n)
            .map(|x| {
                (0..m)
                    .map(|e| {
                        let (a, b) = ends[e];
                        let d0 = dist[x][a].min(dist[x][b]);
                        if d0 == UNREACHABLE {
                            UNREACHABLE
                        } else {
                            d0 + w[e]
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(Grid {
            sub,
            unit,
            n,
            m,
            w,
            ends,
            adj,
            dist,
            perimeter,
            odd,
            near,
        })
    }

    /// Budget of a source edge in grid units, rounded down.
    pub fn budget(&self, alpha: &Rational, len: &Rational) -> u64 {
        let b = (alpha * len / &self.unit).floor();
        b.to_u64().unwrap_or(if b.sign() == num_bigint::Sign::Minus {
            0
        } else {
            u64::MAX
        })
    }

    /// Arc-once walks from `a` to `b` of length at most `budget`, reduced to
    /// those whose covered edge sets are maximal. `None` when `tick` asks to
    /// stop.
    pub fn route_options(
        &self,
        a: usize,
        b: usize,
        budget: u64,
        tick: &mut dyn FnMut() -> bool,
    ) -> Option<Vec<RouteOption>> {
        let mut found: HashMap<Bits, (u64, Vec<usize>)> = HashMap::new();
        let mut used = vec![false; 2 * self.m];
        let mut path = Vec::new();
        let mut cover = Bits::new(self.m);
        let mut counts = vec![0u8; self.m];
        let mut stopped = false;
        self.walk_dfs(
            a,
            b,
            budget,
            0,
            &mut used,
            &mut path,
            &mut cover,
            &mut counts,
            &mut found,
            tick,
            &mut stopped,
        );
        if stopped {
            return None;
        }
        let mut all: Vec<(Bits, u64, Vec<usize>)> = found.into_iter().map(|(bits, (len, p))| (bits, len, p)).collect();
        all.sort_by(|x, y| y.0.count().cmp(&x.0.count()).then_with(|| x.2.cmp(&y.2)));
        let mut kept: Vec<RouteOption> = Vec::new();
        for (bits, _, p) in all {
            if kept.iter().any(|k| bits.is_subset(&k.cover)) {
                continue;
            }
            let covered_len = bits.ones().map(|e| self.w[e] as u64).sum();
            kept.push(RouteOption {
                cover: bits,
                covered_len,
                walk: GridWalk { start: a, edges: p },
            });
        }
        kept.sort_by(|x, y| {
            y.covered_len
                .cmp(&x.covered_len)
                .then_with(|| x.walk.edges.cmp(&y.walk.edges))
        });
        Some(kept)
    }

    #[allow(clippy::too_many_arguments)]
    fn walk_dfs(
        &self,
        cur: usize,
        target: usize,
        budget: u64,
        len: u64,
        used: &mut [bool],
        path: &mut Vec<usize>,
        cover: &mut Bits,
        counts: &mut [u8],
        found: &mut HashMap<Bits, (u64, Vec<usize>)>,
        tick: &mut dyn FnMut() -> bool,
        stopped: &mut bool,
    ) {
        if *stopped {
            return;
        }
        if tick() {
            *stopped = true;
            return;
        }
        if cur == target {
            let entry = found.entry(cover.clone());
            // Keep the shortest walk for each covered set.
            match entry {
                std::collections::hash_map::Entry::Occupied(mut o) => {
                    if len < o.get().0 {
                        o.insert((len, path.clone()));
                    }
                }
                std::collections::hash_map::Entry::Vacant(v) => {
                    v.insert((len, path.clone()));
                }
            }
        }
        for &(e, other) in &self.adj[cur] {
            let nl = len + self.w[e] as u64;
            let back = self.dist[other][target];
            if back == UNREACHABLE || nl + back as u64 > budget {
                continue;
            }
            let arc = 2 * e + usize::from(self.ends[e].0 != cur);
            if used[arc] {
                continue;
            }
            used[arc] = true;
            path.push(e);
            counts[e] += 1;
            let fresh = counts[e] == 1;
            if fresh {
                cover.set(e);
            }
            self.walk_dfs(
                other, target, budget, nl, used, path, cover, counts, found, tick, stopped,
            );
            counts[e] -= 1;
            if fresh {
                cover.0[e / 64] &= !(1 << (e % 64));
            }
            path.pop();
            used[arc] = false;
        }
    }

    /// Converts a derived walk into a walk on the base graph.
    pub fn to_base_walk(&self, walk: &GridWalk) -> Walk {
        let d = self.sub.derived();
        let base = self.sub.base();
        let mut pts = vec![self.sub.to_base_point(VertexId(walk.start))];
        let mut cur = walk.start;
        for &e in &walk.edges {
            let next = d.edge(EdgeId(e)).other(VertexId(cur)).0;
            let a = self.sub.to_base_point(VertexId(cur));
            let b = self.sub.to_base_point(VertexId(next));
            if let (PointOnGraph::Vertex(x), PointOnGraph::Vertex(y)) = (&a, &b) {
                let (be, _, _) = self.sub.origin(EdgeId(e));
                if base.shortest_edge_between(*x, *y) != Some(be) {
                    pts.push(PointOnGraph::Interior {
                        edge: be,
                        offset: Rational::new(1, 2),
                    });
                }
            }
            pts.push(b);
            cur = next;
        }
        Walk(straighten(base, pts))
    }

    /// Exact minimum T-join length when small, nearest-neighbour bound
    /// otherwise.
    pub fn t_join_lower(&self, t: &[usize]) -> u64 {
        if t.is_empty() {
            return 0;
        }
        if t.len() <= 14 {
            let d: Vec<Vec<u64>> = t
                .iter()
                .map(|&a| t.iter().map(|&b| self.dist[a][b] as u64).collect())
                .collect();
            let full = (1usize << t.len()) - 1;
            let mut dp = vec![u64::MAX; full + 1];
            dp[0] = 0;
            for mask in 1..=full {
                if mask.count_ones() % 2 == 1 {
                    continue;
                }
                let i = mask.trailing_zeros() as usize;
                let rest = mask & !(1 << i);
                let mut bits = rest;
                let mut best = u64::MAX;
                while bits != 0 {
                    let j = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    let sub = dp[rest & !(1 << j)];
                    if sub != u64::MAX && d[i][j] != UNREACHABLE as u64 {
                        best = best.min(sub + d[i][j]);
                    }
                }
                dp[mask] = best;
            }
            return dp[full];
        }
        let mut total = 0u64;
        for &a in t {
            let nn = t
                .iter()
                .filter(|&&b| b != a)
                .map(|&b| self.dist[a][b])
                .min()
                .unwrap_or(0);
            total += nn as u64;
        }
        total.div_ceil(2)
    }

    /// Smallest distance between two distinct odd-degree vertices.
    pub fn min_odd_gap(&self) -> u64 {
        let mut best = UNREACHABLE;
        for (i, &a) in self.odd.iter().enumerate() {
            for &b in &self.odd[i + 1..] {
                best = best.min(self.dist[a][b]);
            }
        }
        best as u64
    }
}

/// Drops interior points that a walk passes straight through.
fn straighten(g: &MetricGraph, pts: Vec<PointOnGraph>) -> Vec<PointOnGraph> {
    let mut out: Vec<PointOnGraph> = Vec::with_capacity(pts.len());
    for (i, p) in pts.iter().enumerate() {
        if let (Some(prev), Some(next), PointOnGraph::Interior { edge, offset }) = (out.last(), pts.get(i + 1), p) {
            if let (Some(a), Some(b)) = (g.offset_on_edge(prev, *edge), g.offset_on_edge(next, *edge)) {
                let through = (a < *offset && *offset < b) || (b < *offset && *offset < a);
                // A bare vertex-to-vertex step must still resolve to this edge.
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

fn integer_apsp(n: usize, ends: &[(usize, usize)], w: &[u32]) -> Vec<Vec<u32>> {
    let mut dist = vec![vec![UNREACHABLE; n]; n];
    for (i, row) in dist.iter_mut().enumerate() {
        row[i] = 0;
    }
    for (e, &(a, b)) in ends.iter().enumerate() {
        dist[a][b] = dist[a][b].min(w[e]);
        dist[b][a] = dist[b][a].min(w[e]);
    }
    for k in 0..n {
        for i in 0..n {
            let dik = dist[i][k];
            if dik == UNREACHABLE {
                continue;
            }
            for j in 0..n {
                let dkj = dist[k][j];
                if dkj != UNREACHABLE && dik + dkj < dist[i][j] {
                    dist[i][j] = dik + dkj;
                }
            }
        }
    }
    dist
}

/// Deduplicates covered sets while preserving order; used by tests.
#[allow(dead_code)]
pub(crate) fn distinct_covers(opts: &[RouteOption]) -> usize {
    opts.iter().map(|o| o.cover.clone()).collect::<HashSet<_>>().len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{platonic, PlatonicName};
    use crate::graph::walk_length;

    #[test]
    fn cube_grid_basics() {
        let g = Grid::new(&platonic(PlatonicName::Cube), 2).unwrap();
        assert_eq!((g.n, g.m), (20, 24));
        assert_eq!(g.perimeter, 24);
        assert_eq!(g.odd.len(), 8);
        assert_eq!(g.min_odd_gap(), 2);
        assert_eq!(g.budget(&Rational::new(3, 2), &Rational::one()), 3);
        assert_eq!(g.budget(&Rational::new(7, 5), &Rational::one()), 2);
    }

    #[test]
    fn route_options_are_maximal_and_valid() {
        let base = platonic(PlatonicName::Cube);
        let g = Grid::new(&base, 2).unwrap();
        let mut never = || false;
        let opts = g.route_options(0, 0, 4, &mut never).unwrap();
        assert!(!opts.is_empty());
        assert_eq!(distinct_covers(&opts), opts.len());
        for (i, a) in opts.iter().enumerate() {
            for (j, b) in opts.iter().enumerate() {
                if i != j {
                    assert!(!a.cover.is_subset(&b.cover));
                }
            }
            let walk = g.to_base_walk(&a.walk);
            assert!(walk_length(&walk, &base).unwrap() <= Rational::from(2));
            assert_eq!(walk.first(), walk.last());
        }
        // A closed walk of 4 units from a cube corner doubles back along one edge.
        assert!(opts.iter().all(|o| o.covered_len == 2));
    }

    #[test]
    fn parallel_edges_get_midpoints() {
        let base = MetricGraph::parse("e a b\ne a b 2\n").unwrap();
        let g = Grid::new(&base, 1).unwrap();
        let mut never = || false;
        let opts = g.route_options(0, 1, 3, &mut never).unwrap();
        let long = opts.iter().find(|o| o.cover.get(1)).unwrap();
        let walk = g.to_base_walk(&long.walk);
        assert_eq!(walk_length(&walk, &base).unwrap(), Rational::from(2));
        assert_eq!(walk.0.len(), 3);
    }

    #[test]
    fn t_join_bound() {
        let g = Grid::new(&platonic(PlatonicName::Cube), 1).unwrap();
        assert_eq!(g.t_join_lower(&g.odd), 4);
        let d = Grid::new(&platonic(PlatonicName::Dodecahedron), 1).unwrap();
        assert_eq!(d.t_join_lower(&d.odd), 10);
    }
}
