//! Chinese postman tours and minimum T-joins.
//!
//! When the source is a cycle (or a path) the optimal scale factor is the
//! shortest closed (or open) walk covering every target edge, divided by the
//! source length. Both reduce to a minimum T-join on the odd-degree
//! vertices, solved here with shortest paths plus an exact bitmask DP for the
//! minimum-weight perfect matching on `T`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};

use crate::graph::{EdgeId, MetricGraph, VertexId};
use crate::rational::Rational;

/// Largest terminal set the subset DP accepts.
pub const MAX_TERMINALS: usize = 24;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum PostmanError {
    #[error("T-join needs an even number of terminals, got {0}")]
    Parity(usize),
    #[error("{0} terminals exceed the matching DP limit of {MAX_TERMINALS}")]
    TooLarge(usize),
    #[error("graph is disconnected")]
    Disconnected,
    #[error("edge lengths too large for the integer DP")]
    Overflow,
    #[error("source length must be positive")]
    NonpositiveSource,
}

#[derive(Debug, Clone)]
pub struct TJoinProblem<'a> {
    pub graph: &'a MetricGraph,
    pub terminals: Vec<VertexId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TJoin {
    pub length: Rational,
    /// Edges of the join; each appears once.
    pub edges: Vec<EdgeId>,
}

/// Shortest paths in integer units of a common length denominator, with
/// first-hop edges for path recovery.
pub(crate) struct IntegerPaths {
    pub unit: Rational,
    pub dist: Vec<Vec<Option<u64>>>,
    next: Vec<Vec<Option<EdgeId>>>,
}

impl IntegerPaths {
    pub fn new(g: &MetricGraph) -> Result<Self, PostmanError> {
        let den = g.edges().iter().fold(BigInt::one(), |acc, e| acc.lcm(e.length.denom()));
        let unit = Rational::from_big(BigInt::one(), den.clone());
        let n = g.vertex_count();
        let mut dist = vec![vec![None; n]; n];
        let mut next = vec![vec![None; n]; n];
        for (i, row) in dist.iter_mut().enumerate() {
            row[i] = Some(0u64);
        }
        for (i, e) in g.edges().iter().enumerate() {
            if e.u == e.v {
                continue;
            }
            let w = (e.length.numer() * (&den / e.length.denom()))
                .to_u64()
                .ok_or(PostmanError::Overflow)?;
            for (a, b) in [(e.u, e.v), (e.v, e.u)] {
                if dist[a.0][b.0].is_none_or(|d| w < d) {
                    dist[a.0][b.0] = Some(w);
                    next[a.0][b.0] = Some(EdgeId(i));
                }
            }
        }
        for k in 0..n {
            for i in 0..n {
                let Some(dik) = dist[i][k] else { continue };
                for j in 0..n {
                    let Some(dkj) = dist[k][j] else { continue };
                    let cand = dik.checked_add(dkj).ok_or(PostmanError::Overflow)?;
                    if dist[i][j].is_none_or(|d| cand < d) {
                        dist[i][j] = Some(cand);
                        next[i][j] = next[i][k];
                    }
                }
            }
        }
        Ok(IntegerPaths { unit, dist, next })
    }

    fn path(&self, g: &MetricGraph, a: VertexId, b: VertexId) -> Vec<EdgeId> {
        let mut out = Vec::new();
        let mut cur = a;
        while cur != b {
            let e = self.next[cur.0][b.0].expect("reachable");
            out.push(e);
            cur = g.edge(e).other(cur);
        }
        out
    }
}

/// `dp[mask]` = cheapest perfect matching of the terminals in `mask`.
fn matching_table(d: &[Vec<u64>]) -> Vec<u64> {
    let t = d.len();
    let full = 1usize << t;
    let mut dp = vec![u64::MAX; full];
    dp[0] = 0;
    for mask in 1..full {
        if mask.count_ones() % 2 == 1 {
            continue;
        }
        let i = mask.trailing_zeros() as usize;
        let rest = mask & !(1 << i);
        let mut best = u64::MAX;
        let mut bits = rest;
        while bits != 0 {
            let j = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let sub = dp[rest & !(1 << j)];
            if sub != u64::MAX {
                best = best.min(sub + d[i][j]);
            }
        }
        dp[mask] = best;
    }
    dp
}

fn recover_pairs(d: &[Vec<u64>], dp: &[u64], mut mask: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    while mask != 0 {
        let i = mask.trailing_zeros() as usize;
        let rest = mask & !(1 << i);
        let mut bits = rest;
        loop {
            let j = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let sub = rest & !(1 << j);
            if dp[sub] != u64::MAX && dp[sub] + d[i][j] == dp[mask] {
                pairs.push((i, j));
                mask = sub;
                break;
            }
        }
    }
    pairs
}

fn terminal_distances(paths: &IntegerPaths, terms: &[VertexId]) -> Result<Vec<Vec<u64>>, PostmanError> {
    terms
        .iter()
        .map(|a| {
            terms
                .iter()
                .map(|b| paths.dist[a.0][b.0].ok_or(PostmanError::Disconnected))
                .collect()
        })
        .collect()
}

fn dedup_terminals(terminals: &[VertexId]) -> Vec<VertexId> {
    // A terminal listed twice cancels out.
    let mut sorted = terminals.to_vec();
    sorted.sort();
    let mut out: Vec<VertexId> = Vec::new();
    for v in sorted {
        if out.last() == Some(&v) {
            out.pop();
        } else {
            out.push(v);
        }
    }
    out
}

fn join_from_pairs(g: &MetricGraph, paths: &IntegerPaths, terms: &[VertexId], pairs: &[(usize, usize)]) -> Vec<EdgeId> {
    let mut parity = vec![false; g.edge_count()];
    for &(i, j) in pairs {
        for e in paths.path(g, terms[i], terms[j]) {
            parity[e.0] = !parity[e.0];
        }
    }
    parity
        .iter()
        .enumerate()
        .filter(|(_, &p)| p)
        .map(|(i, _)| EdgeId(i))
        .collect()
}

/// Minimum-length edge set whose odd-degree vertices are exactly `T`.
pub fn min_t_join(p: &TJoinProblem<'_>) -> Result<TJoin, PostmanError> {
    if p.terminals.len() % 2 == 1 {
        return Err(PostmanError::Parity(p.terminals.len()));
    }
    let terms = dedup_terminals(&p.terminals);
    if terms.is_empty() {
        return Ok(TJoin {
            length: Rational::zero(),
            edges: Vec::new(),
        });
    }
    if terms.len() > MAX_TERMINALS {
        return Err(PostmanError::TooLarge(terms.len()));
    }
    let paths = IntegerPaths::new(p.graph)?;
    let d = terminal_distances(&paths, &terms)?;
    let dp = matching_table(&d);
    let full = (1usize << terms.len()) - 1;
    let pairs = recover_pairs(&d, &dp, full);
    let edges = join_from_pairs(p.graph, &paths, &terms, &pairs);
    let length = Rational::from(BigInt::from(dp[full])) * &paths.unit;
    Ok(TJoin { length, edges })
}

/// Length of the shortest closed walk traversing every edge.
pub fn postman_closed(dst: &MetricGraph) -> Result<Rational, PostmanError> {
    if !dst.is_connected() {
        return Err(PostmanError::Disconnected);
    }
    let join = min_t_join(&TJoinProblem {
        graph: dst,
        terminals: dst.odd_vertices(),
    })?;
    Ok(dst.total_length() + join.length)
}

/// Length of the shortest walk (open or closed) traversing every edge.
///
/// Equal to the perimeter plus the cheapest matching of the odd vertices with
/// one pair left unmatched; those two become the walk's ends.
pub fn postman_open(dst: &MetricGraph) -> Result<Rational, PostmanError> {
    if !dst.is_connected() {
        return Err(PostmanError::Disconnected);
    }
    let odd = dst.odd_vertices();
    if odd.is_empty() {
        return Ok(dst.total_length());
    }
    if odd.len() > MAX_TERMINALS {
        return Err(PostmanError::TooLarge(odd.len()));
    }
    let paths = IntegerPaths::new(dst)?;
    let d = terminal_distances(&paths, &odd)?;
    let dp = matching_table(&d);
    let full = (1usize << odd.len()) - 1;
    let mut best = u64::MAX;
    for i in 0..odd.len() {
        for j in i + 1..odd.len() {
            best = best.min(dp[full & !(1 << i) & !(1 << j)]);
        }
    }
    Ok(dst.total_length() + Rational::from(BigInt::from(best)) * &paths.unit)
}

/// Optimal scale for folding a cycle of the given total length onto `dst`.
pub fn optimal_scale_cycle_source(src_cycle_length: &Rational, dst: &MetricGraph) -> Result<Rational, PostmanError> {
    if !src_cycle_length.is_positive() {
        return Err(PostmanError::NonpositiveSource);
    }
    Ok(postman_closed(dst)? / src_cycle_length)
}

/// Optimal scale for folding a path of the given total length onto `dst`.
pub fn optimal_scale_path_source(src_path_length: &Rational, dst: &MetricGraph) -> Result<Rational, PostmanError> {
    if !src_path_length.is_positive() {
        return Err(PostmanError::NonpositiveSource);
    }
    Ok(postman_open(dst)? / src_path_length)
}
