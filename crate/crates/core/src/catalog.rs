//! Unit-edge Platonic solid graphs and the published bound intervals for
//! folding one solid onto another.

use std::fmt;
use std::str::FromStr;

use crate::graph::{MetricGraph, VertexId};
use crate::rational::{r, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PlatonicName {
    Tetrahedron,
    Cube,
    Octahedron,
    Dodecahedron,
    Icosahedron,
}

impl PlatonicName {
    pub const ALL: [PlatonicName; 5] = [
        PlatonicName::Tetrahedron,
        PlatonicName::Cube,
        PlatonicName::Octahedron,
        PlatonicName::Dodecahedron,
        PlatonicName::Icosahedron,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PlatonicName::Tetrahedron => "tetrahedron",
            PlatonicName::Cube => "cube",
            PlatonicName::Octahedron => "octahedron",
            PlatonicName::Dodecahedron => "dodecahedron",
            PlatonicName::Icosahedron => "icosahedron",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for PlatonicName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PlatonicName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PlatonicName::ALL
            .into_iter()
            .find(|n| n.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown solid `{}`", s))
    }
}

/// The 1-skeleton of a Platonic solid with unit edge lengths.
pub fn platonic(name: PlatonicName) -> MetricGraph {
    match name {
        PlatonicName::Tetrahedron => {
            let labels: Vec<String> = (0..4).map(|i| format!("t{}", i)).collect();
            let mut g = MetricGraph::new();
            let ids: Vec<VertexId> = labels.iter().map(|l| g.add_vertex(l)).collect();
            for i in 0..4 {
                for j in i + 1..4 {
                    g.add_edge(ids[i], ids[j], Rational::one());
                }
            }
            g
        }
        PlatonicName::Cube => {
            let mut g = MetricGraph::new();
            let ids: Vec<VertexId> = (0..8).map(|i| g.add_vertex(&format!("c{:03b}", i))).collect();
            for i in 0..8usize {
                for bit in [1, 2, 4] {
                    let j = i ^ bit;
                    if i < j {
                        g.add_edge(ids[i], ids[j], Rational::one());
                    }
                }
            }
            g
        }
        PlatonicName::Octahedron => {
            let names = ["o+x", "o-x", "o+y", "o-y", "o+z", "o-z"];
            let mut g = MetricGraph::new();
            let ids: Vec<VertexId> = names.iter().map(|l| g.add_vertex(l)).collect();
            for i in 0..6 {
                for j in i + 1..6 {
                    // opposite poles are (0,1), (2,3), (4,5)
                    if i / 2 != j / 2 {
                        g.add_edge(ids[i], ids[j], Rational::one());
                    }
                }
            }
            g
        }
        PlatonicName::Icosahedron => {
            let mut g = MetricGraph::new();
            let ids: Vec<VertexId> = (0..12).map(|i| g.add_vertex(&format!("i{:02}", i))).collect();
            for (a, b) in icosahedron_edges() {
                g.add_edge(ids[a], ids[b], Rational::one());
            }
            g
        }
        PlatonicName::Dodecahedron => {
            // Dual of the icosahedron: one vertex per triangular face, adjacent
            // when the faces share an edge.
            let faces = icosahedron_faces();
            let mut g = MetricGraph::new();
            let ids: Vec<VertexId> = (0..faces.len()).map(|i| g.add_vertex(&format!("d{:02}", i))).collect();
            for i in 0..faces.len() {
                for j in i + 1..faces.len() {
                    let shared = faces[i].iter().filter(|x| faces[j].contains(x)).count();
                    if shared == 2 {
                        g.add_edge(ids[i], ids[j], Rational::one());
                    }
                }
            }
            g
        }
    }
}

/// Top vertex 0, upper ring 1..=5, lower ring 6..=10, bottom 11.
fn icosahedron_edges() -> Vec<(usize, usize)> {
    let mut edges = Vec::with_capacity(30);
    for i in 0..5 {
        let up = 1 + i;
        let up_next = 1 + (i + 1) % 5;
        let low = 6 + i;
        let low_next = 6 + (i + 1) % 5;
        edges.push((0, up));
        edges.push((up, up_next));
        edges.push((up, low));
        edges.push((up, low_next));
        edges.push((low, low_next));
        edges.push((low, 11));
    }
    edges
}

fn icosahedron_faces() -> Vec<[usize; 3]> {
    let edges = icosahedron_edges();
    let adj = |a: usize, b: usize| edges.iter().any(|&(x, y)| (x, y) == (a, b) || (x, y) == (b, a));
    let mut faces = Vec::new();
    for a in 0..12 {
        for b in a + 1..12 {
            for c in b + 1..12 {
                if adj(a, b) && adj(b, c) && adj(a, c) {
                    faces.push([a, b, c]);
                }
            }
        }
    }
    faces
}

/// Where a lower bound comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LowerBoundSource {
    Formula,
    /// Obtained from a contraction/connectivity argument rather than counting.
    Topological,
}

/// A published interval for the optimal scale factor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundInterval {
    pub lower: Rational,
    pub lower_strict: bool,
    pub upper: Rational,
    pub source: LowerBoundSource,
}

impl fmt::Display for BoundInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let open = if self.lower_strict { "(" } else { "[" };
        let star = if self.source == LowerBoundSource::Topological {
            "*"
        } else {
            ""
        };
        write!(f, "{}{}{}, {}]", open, self.lower, star, self.upper)
    }
}

// Rows are sources, columns targets, both in `PlatonicName::ALL` order.
// Entries are (lower num, lower den, strict, upper num, upper den).
const TABLE: [[(i64, i64, bool, i64, i64); 5]; 5] = [
    // tetrahedron
    [
        (1, 1, false, 1, 1),
        (7, 3, false, 17, 6),
        (2, 1, true, 5, 2),
        (19, 3, false, 41, 6),
        (17, 3, true, 47, 8),
    ],
    // cube
    [
        (1, 2, true, 5, 6),
        (1, 1, false, 1, 1),
        (1, 1, true, 3, 2),
        (3, 1, false, 3, 1),
        (8, 3, true, 3, 1),
    ],
    // octahedron
    [
        (1, 2, true, 1, 1),
        (13, 12, true, 3, 2),
        (1, 1, false, 1, 1),
        (37, 12, true, 4, 1),
        (5, 2, true, 3, 1),
    ],
    // dodecahedron
    [
        (1, 5, true, 3, 5),
        (2, 5, true, 4, 5),
        (2, 5, true, 3, 4),
        (1, 1, false, 1, 1),
        (1, 1, true, 4, 3),
    ],
    // icosahedron
    [
        (1, 5, true, 1, 1),
        (1, 1, true, 4, 3),
        (2, 5, true, 1, 1),
        (17, 15, true, 2, 1),
        (1, 1, false, 1, 1),
    ],
];

/// The published bound interval for folding `src` onto `dst`, verbatim.
pub fn published_bounds(src: PlatonicName, dst: PlatonicName) -> BoundInterval {
    let (ln, ld, strict, un, ud) = TABLE[src.index()][dst.index()];
    let source = if (src, dst) == (PlatonicName::Icosahedron, PlatonicName::Cube) {
        LowerBoundSource::Topological
    } else {
        LowerBoundSource::Formula
    };
    BoundInterval {
        lower: r(ln, ld),
        lower_strict: strict,
        upper: r(un, ud),
        source,
    }
}

/// Renders the 5x5 interval table.
pub fn bound_table() -> String {
    let mut out = String::from("src\\dst");
    for d in PlatonicName::ALL {
        out.push('\t');
        out.push_str(d.as_str());
    }
    out.push('\n');
    for s in PlatonicName::ALL {
        out.push_str(s.as_str());
        for d in PlatonicName::ALL {
            out.push('\t');
            out.push_str(&published_bounds(s, d).to_string());
        }
        out.push('\n');
    }
    out
}

/// Reads `name` as a solid if it is one.
pub fn lookup(name: &str) -> Option<MetricGraph> {
    name.parse::<PlatonicName>().ok().map(platonic)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::degree_histogram;

    #[test]
    fn counts_and_degrees() {
        let expect = [(4, 6, 3), (8, 12, 3), (6, 12, 4), (20, 30, 3), (12, 30, 5)];
        for (name, (n, m, d)) in PlatonicName::ALL.into_iter().zip(expect) {
            let g = platonic(name);
            assert!(g.validate().is_valid(), "{}", name);
            assert_eq!(g.vertex_count(), n, "{}", name);
            assert_eq!(g.edge_count(), m, "{}", name);
            assert_eq!(g.regular_degree(), Some(d), "{}", name);
            let deg_sum: usize = g.vertices().map(|v| g.degree(v)).sum();
            assert_eq!(deg_sum, 2 * m);
            assert_eq!(g.total_length(), Rational::from(m as i64));
        }
    }

    #[test]
    fn octahedron_and_dodecahedron() {
        let o = platonic(PlatonicName::Octahedron);
        assert_eq!(degree_histogram(&o).into_iter().collect::<Vec<_>>(), vec![(4, 6)]);
        assert_eq!(o.odd_vertices().len(), 0);
        let d = platonic(PlatonicName::Dodecahedron);
        assert_eq!(d.vertex_count(), 20);
        assert_eq!(d.total_length(), r(30, 1));
        assert_eq!(d.odd_vertices().len(), 20);
    }

    #[test]
    fn tetrahedron_is_k4() {
        let t = platonic(PlatonicName::Tetrahedron);
        for a in t.vertices() {
            for b in t.vertices() {
                if a != b {
                    assert_eq!(t.edges_between(a, b).count(), 1);
                }
            }
        }
    }

    #[test]
    fn published_entries() {
        use PlatonicName::*;
        let tc = published_bounds(Tetrahedron, Cube);
        assert_eq!(
            (tc.lower.clone(), tc.lower_strict, tc.upper.clone()),
            (r(7, 3), false, r(17, 6))
        );
        let cd = published_bounds(Cube, Dodecahedron);
        assert_eq!((cd.lower.clone(), cd.upper.clone()), (r(3, 1), r(3, 1)));
        let ic = published_bounds(Icosahedron, Cube);
        assert_eq!(
            (ic.lower.clone(), ic.lower_strict, ic.upper.clone()),
            (r(1, 1), true, r(4, 3))
        );
        assert_eq!(ic.source, LowerBoundSource::Topological);
    }

    #[test]
    fn table_is_consistent() {
        for s in PlatonicName::ALL {
            for d in PlatonicName::ALL {
                let b = published_bounds(s, d);
                assert!(b.lower <= b.upper);
                if s == d {
                    assert_eq!(
                        (b.lower.clone(), b.upper.clone(), b.lower_strict),
                        (r(1, 1), r(1, 1), false)
                    );
                }
            }
        }
    }

    #[test]
    fn names_parse() {
        assert_eq!("Cube".parse::<PlatonicName>().unwrap(), PlatonicName::Cube);
        assert!("prism".parse::<PlatonicName>().is_err());
    }
}
