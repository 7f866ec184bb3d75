//! Lower bounds on the optimal scale factor.
//!
//! The naive bound compares perimeters. The improved bound adds the length
//! that must be covered twice: with `o_t` odd-degree target vertices and `n_s`
//! source vertices, at least `(o_t - n_s) / 2` target edges end up doubled.

use std::collections::BTreeSet;
use std::fmt;

use crate::catalog::{platonic, published_bounds, LowerBoundSource, PlatonicName};
use crate::graph::MetricGraph;
use crate::rational::Rational;

/// Ratio of target perimeter to source perimeter.
pub fn naive_lower(src: &MetricGraph, dst: &MetricGraph) -> Rational {
    dst.total_length() / src.total_length()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LowerBoundComponents {
    pub perimeter_t: Rational,
    pub doubling_term: Rational,
    pub perimeter_s: Rational,
    pub o_t: usize,
    pub n_s: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LowerBoundResult {
    pub value: Rational,
    pub strict: bool,
    pub components: LowerBoundComponents,
    /// Target edges differ in length, so only the naive bound was used.
    pub non_uniform: bool,
    pub source: LowerBoundSource,
}

impl fmt::Display for LowerBoundResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} ({})",
            self.value,
            if self.strict { "strict" } else { "non-strict" }
        )
    }
}

impl LowerBoundResult {
    /// One-line breakdown, e.g. `7/3 = (12/1 + (8-4)/2) / 6/1`.
    pub fn breakdown(&self) -> String {
        let c = &self.components;
        if c.doubling_term.is_zero() {
            format!("{} = {} / {}", self.value, c.perimeter_t, c.perimeter_s)
        } else {
            format!(
                "{} = ({} + ({}-{})/2) / {}",
                self.value, c.perimeter_t, c.o_t, c.n_s, c.perimeter_s
            )
        }
    }
}

fn degree_set(g: &MetricGraph) -> BTreeSet<usize> {
    g.vertices().map(|v| g.degree(v)).collect()
}

/// The improved counting bound.
///
/// The strictness flag is calibrated on the Platonic solids: it is set when
/// the two graphs use different vertex degrees, or when there are more source
/// vertices than target vertices. For other graphs it is only advisory.
pub fn improved_lower(src: &MetricGraph, dst: &MetricGraph) -> LowerBoundResult {
    let perimeter_t = dst.total_length();
    let perimeter_s = src.total_length();
    let o_t = dst.odd_vertices().len();
    debug_assert!(o_t % 2 == 0, "handshake parity");
    let n_s = src.vertex_count();
    let uniform = dst.uniform_edge_length();
    let doubling_term = match &uniform {
        Some(len) if o_t > n_s => Rational::new((o_t - n_s) as i64, 2) * len,
        _ => Rational::zero(),
    };
    let value = (&perimeter_t + &doubling_term) / &perimeter_s;
    let strict = degree_set(src) != degree_set(dst) || n_s > dst.vertex_count();
    LowerBoundResult {
        value,
        strict,
        components: LowerBoundComponents {
            perimeter_t,
            doubling_term,
            perimeter_s,
            o_t,
            n_s,
        },
        non_uniform: uniform.is_none() && dst.edge_count() > 0,
        source: LowerBoundSource::Formula,
    }
}

/// The lower bound for a pair of solids, applying the topological override
/// where the published table has one.
pub fn platonic_lower(src: PlatonicName, dst: PlatonicName) -> LowerBoundResult {
    let mut res = improved_lower(&platonic(src), &platonic(dst));
    let published = published_bounds(src, dst);
    if published.source == LowerBoundSource::Topological && published.lower > res.value {
        res.value = published.lower;
        res.strict = published.lower_strict;
        res.source = LowerBoundSource::Topological;
    }
    res
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::r;
    use PlatonicName::*;

    fn g(n: PlatonicName) -> MetricGraph {
        platonic(n)
    }

    #[test]
    fn naive_examples() {
        assert_eq!(naive_lower(&g(Dodecahedron), &g(Tetrahedron)), r(1, 5));
        assert_eq!(naive_lower(&g(Tetrahedron), &g(Octahedron)), r(2, 1));
        for n in PlatonicName::ALL {
            assert_eq!(naive_lower(&g(n), &g(n)), r(1, 1));
        }
    }

    #[test]
    fn improved_examples() {
        let tc = improved_lower(&g(Tetrahedron), &g(Cube));
        assert_eq!((tc.value.clone(), tc.strict), (r(7, 3), false));
        assert_eq!(tc.components.o_t, 8);
        assert_eq!(tc.components.n_s, 4);
        let od = improved_lower(&g(Octahedron), &g(Dodecahedron));
        assert_eq!((od.value, od.strict), (r(37, 12), true));
        let id = improved_lower(&g(Icosahedron), &g(Dodecahedron));
        assert_eq!((id.value, id.strict), (r(17, 15), true));
    }

    #[test]
    fn improved_dominates_naive() {
        for s in PlatonicName::ALL {
            for d in PlatonicName::ALL {
                let imp = improved_lower(&g(s), &g(d));
                let naive = naive_lower(&g(s), &g(d));
                assert!(imp.value >= naive);
                assert_eq!(imp.value == naive, imp.components.o_t <= imp.components.n_s);
            }
        }
    }

    #[test]
    fn topological_override() {
        let ic = platonic_lower(Icosahedron, Cube);
        assert_eq!(ic.value, r(1, 1));
        assert!(ic.strict);
        assert_eq!(ic.source, LowerBoundSource::Topological);
        assert_eq!(improved_lower(&g(Icosahedron), &g(Cube)).value, r(2, 5));
    }

    #[test]
    fn non_uniform_falls_back() {
        let s = MetricGraph::parse("e a b").unwrap();
        let d = MetricGraph::parse("e A B\ne B C 2\ne B D\n").unwrap();
        let res = improved_lower(&s, &d);
        assert!(res.non_uniform);
        assert_eq!(res.value, naive_lower(&s, &d));
    }

    #[test]
    fn breakdown_format() {
        let tc = improved_lower(&g(Tetrahedron), &g(Cube));
        assert_eq!(tc.breakdown(), "7/3 = (12/1 + (8-4)/2) / 6/1");
        assert_eq!(tc.to_string(), "7/3 (non-strict)");
    }
}
