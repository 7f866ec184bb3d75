//! Set-cover gadgets: a tree that folds onto a target at scale 1 exactly
//! when `k` of the 3-element sets cover every element.

use std::collections::BTreeSet;

use crate::graph::{GraphError, MetricGraph, VertexId};
use crate::rational::Rational;

#[derive(Debug, thiserror::Error)]
pub enum HardnessError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Instance(String),
    #[error("budget k = {k} exceeds the number of sets {sets}")]
    Budget { k: usize, sets: usize },
    #[error("anchor count must be positive")]
    NoAnchors,
    #[error("{0} sets are too many for exhaustive search (limit 20)")]
    OracleTooLarge(usize),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetCoverInstance {
    pub elements: Vec<String>,
    pub sets: Vec<[usize; 3]>,
    pub k: usize,
}

impl SetCoverInstance {
    pub fn new(elements: Vec<String>, sets: Vec<[usize; 3]>, k: usize) -> Result<Self, HardnessError> {
        let inst = SetCoverInstance { elements, sets, k };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<(), HardnessError> {
        let n = self.elements.len();
        if self.elements.iter().collect::<BTreeSet<_>>().len() != n {
            return Err(HardnessError::Instance("duplicate element label".into()));
        }
        for s in &self.sets {
            if s.iter().any(|&x| x >= n) || s[0] == s[1] || s[1] == s[2] || s[0] == s[2] {
                return Err(HardnessError::Instance(
                    "every set needs three distinct known elements".into(),
                ));
            }
        }
        for (i, e) in self.elements.iter().enumerate() {
            if !self.sets.iter().any(|s| s.contains(&i)) {
                return Err(HardnessError::Instance(format!("element {} is in no set", e)));
            }
        }
        Ok(())
    }

    /// `elem <label>`, `set <a> <b> <c>` and `k <n>` lines; `#` comments.
    pub fn parse(text: &str) -> Result<Self, HardnessError> {
        let mut elements: Vec<String> = Vec::new();
        let mut sets = Vec::new();
        let mut k = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| HardnessError::Parse { line: i + 1, message };
            let toks: Vec<&str> = line.split_whitespace().collect();
            match toks.as_slice() {
                ["elem", label] => elements.push(label.to_string()),
                ["set", a, b, c] => {
                    let mut s = [0; 3];
                    for (slot, l) in s.iter_mut().zip([a, b, c]) {
                        *slot = elements
                            .iter()
                            .position(|e| e == l)
                            .ok_or_else(|| err(format!("unknown element `{}`", l)))?;
                    }
                    sets.push(s);
                }
                ["k", n] => k = Some(n.parse().map_err(|_| err(format!("bad budget `{}`", n)))?),
                _ => return Err(err(format!("cannot read `{}`", line))),
            }
        }
        let k = k.ok_or(HardnessError::Parse {
            line: 0,
            message: "missing `k` line".into(),
        })?;
        SetCoverInstance::new(elements, sets, k)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.elements {
            out.push_str(&format!("elem {}\n", e));
        }
        for s in &self.sets {
            out.push_str(&format!(
                "set {} {} {}\n",
                self.elements[s[0]], self.elements[s[1]], self.elements[s[2]]
            ));
        }
        out.push_str(&format!("k {}\n", self.k));
        out
    }
}

/// True iff some `k` of the sets cover every element.
pub fn set_cover_oracle(inst: &SetCoverInstance) -> Result<bool, HardnessError> {
    let m = inst.sets.len();
    if m > 20 {
        return Err(HardnessError::OracleTooLarge(m));
    }
    if inst.k > m {
        return Ok(false);
    }
    let full: u32 = if inst.elements.len() >= 32 {
        u32::MAX
    } else {
        (1u32 << inst.elements.len()) - 1
    };
    let masks: Vec<u32> = inst
        .sets
        .iter()
        .map(|s| s.iter().fold(0, |acc, &x| acc | 1 << x))
        .collect();
    Ok((0u32..1 << m)
        .filter(|c| c.count_ones() as usize == inst.k)
        .any(|choice| {
            let covered = (0..m)
                .filter(|&i| choice >> i & 1 == 1)
                .fold(0, |acc, i| acc | masks[i]);
            covered == full
        }))
}

#[derive(Debug, Clone)]
pub struct ReductionOutput {
    pub source: MetricGraph,
    pub target: MetricGraph,
    pub anchors: usize,
    pub notes: Vec<String>,
}

/// Closed-form sizes `(source nodes, source edges, target nodes, target edges)`.
pub fn expected_counts(inst: &SetCoverInstance, a: usize) -> (usize, usize, usize, usize) {
    let (c, x, k) = (inst.sets.len(), inst.elements.len(), inst.k);
    (
        4 * c + 3 * k + 1 + a,
        4 * c + 3 * k + a,
        c + 2 * x + 1 + a,
        4 * c + x + a,
    )
}

pub fn generate(inst: &SetCoverInstance, a: usize) -> Result<ReductionOutput, HardnessError> {
    inst.validate()?;
    if inst.k > inst.sets.len() {
        return Err(HardnessError::Budget {
            k: inst.k,
            sets: inst.sets.len(),
        });
    }
    if a == 0 {
        return Err(HardnessError::NoAnchors);
    }
    let one = Rational::one;
    let mut notes = vec![format!(
        "{} elements, {} sets, budget {}, {} anchors",
        inst.elements.len(),
        inst.sets.len(),
        inst.k,
        a
    )];
    if a <= 4 * inst.sets.len() {
        notes.push(format!(
            "warning: {} anchors do not force the root onto the top node; use more than {}",
            a,
            4 * inst.sets.len()
        ));
    }

    let mut t = MetricGraph::new();
    let top = t.add_vertex("top");
    for i in 0..a {
        let v = t.add_vertex(&format!("anchor{}", i));
        t.add_edge(top, v, one());
    }
    let set_nodes: Vec<VertexId> = (0..inst.sets.len())
        .map(|i| {
            let v = t.add_vertex(&format!("set{}", i));
            t.add_edge(top, v, one());
            v
        })
        .collect();
    for (i, e) in inst.elements.iter().enumerate() {
        let x = t.add_vertex(&format!("elem_{}", e));
        for (j, s) in inst.sets.iter().enumerate() {
            if s.contains(&i) {
                t.add_edge(set_nodes[j], x, one());
            }
        }
        let leaf = t.add_vertex(&format!("leaf_{}", e));
        t.add_edge(x, leaf, one());
    }

    let mut s = MetricGraph::new();
    let root = s.add_vertex("root");
    for i in 0..a {
        let v = s.add_vertex(&format!("leaf{}", i));
        s.add_edge(root, v, one());
    }
    for j in 0..inst.sets.len() {
        let child = s.add_vertex(&format!("child{}", j));
        s.add_edge(root, child, one());
        for i in 0..3 {
            if j < inst.k {
                let mid = s.add_vertex(&format!("mid{}_{}", j, i));
                let end = s.add_vertex(&format!("end{}_{}", j, i));
                s.add_edge(child, mid, one());
                s.add_edge(mid, end, one());
            } else {
                let twig = s.add_vertex(&format!("twig{}_{}", j, i));
                s.add_edge(child, twig, one());
            }
        }
    }
    Ok(ReductionOutput {
        source: s,
        target: t,
        anchors: a,
        notes,
    })
}

/// Replaces every edge by a path of `parts` unit edges.
pub fn subdivide_paths(g: &MetricGraph, parts: usize) -> MetricGraph {
    let mut out = MetricGraph::new();
    for v in g.vertices() {
        out.add_vertex(g.label(v));
    }
    for (i, e) in g.edges().iter().enumerate() {
        let mut prev = e.u;
        for p in 1..parts {
            let v = out.add_vertex(&format!("{}~{}#{}.{}", g.label(e.u), g.label(e.v), i, p));
            out.add_edge(prev, v, Rational::one());
            prev = v;
        }
        out.add_edge(prev, e.v, Rational::one());
    }
    out
}

/// The pair `(P, P')`: `P'` as in `generate`, `P` with `2a` anchors, source
/// edges split in three and target edges split in four.
pub fn generate_dp_variant(
    inst_p: &SetCoverInstance,
    inst_q: &SetCoverInstance,
    a: usize,
) -> Result<(ReductionOutput, ReductionOutput), HardnessError> {
    let q = generate(inst_q, a)?;
    let base = generate(inst_p, 2 * a)?;
    let mut notes = base.notes.clone();
    notes.push("source edges x3, target edges x4".into());
    let p = ReductionOutput {
        source: subdivide_paths(&base.source, 3),
        target: subdivide_paths(&base.target, 4),
        anchors: 2 * a,
        notes,
    };
    Ok((p, q))
}

/// Every instance with at most `max_elements` elements, at most `max_sets`
/// distinct sets covering all elements, and every budget `1..=|C|`.
pub fn enumerate_instances(max_elements: usize, max_sets: usize) -> Vec<SetCoverInstance> {
    let mut out = Vec::new();
    for n in 3..=max_elements {
        let mut triples = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    triples.push([a, b, c]);
                }
            }
        }
        let elements: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
        let mut pick = Vec::new();
        collect(&triples, 0, max_sets, &mut pick, &mut |sets| {
            let covered: BTreeSet<usize> = sets.iter().flatten().copied().collect();
            if covered.len() == n {
                for k in 1..=sets.len() {
                    out.push(SetCoverInstance {
                        elements: elements.clone(),
                        sets: sets.to_vec(),
                        k,
                    });
                }
            }
        });
    }
    out
}

fn collect(
    all: &[[usize; 3]],
    from: usize,
    left: usize,
    pick: &mut Vec<[usize; 3]>,
    f: &mut impl FnMut(&[[usize; 3]]),
) {
    if !pick.is_empty() {
        f(pick);
    }
    if left == 0 {
        return;
    }
    for i in from..all.len() {
        pick.push(all[i]);
        collect(all, i + 1, left - 1, pick, f);
        pick.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::all_pairs_shortest;
    use crate::rational::r;

    fn inst(n: usize, sets: &[[usize; 3]], k: usize) -> SetCoverInstance {
        SetCoverInstance::new((1..=n).map(|i| i.to_string()).collect(), sets.to_vec(), k).unwrap()
    }

    #[test]
    fn oracle_examples() {
        assert!(set_cover_oracle(&inst(3, &[[0, 1, 2]], 1)).unwrap());
        let uncovered = SetCoverInstance {
            elements: (1..=4).map(|i| i.to_string()).collect(),
            sets: vec![[0, 1, 2]],
            k: 1,
        };
        assert!(!set_cover_oracle(&uncovered).unwrap());
        assert!(set_cover_oracle(&inst(6, &[[0, 1, 2], [3, 4, 5], [0, 3, 4]], 2)).unwrap());
        assert!(!set_cover_oracle(&inst(6, &[[0, 1, 2], [3, 4, 5], [0, 3, 4]], 1)).unwrap());
        let big = SetCoverInstance {
            elements: (0..3).map(|i| i.to_string()).collect(),
            sets: vec![[0, 1, 2]; 21],
            k: 1,
        };
        assert!(matches!(set_cover_oracle(&big), Err(HardnessError::OracleTooLarge(21))));
    }

    #[test]
    fn counts_and_shape() {
        let i = inst(3, &[[0, 1, 2]], 1);
        let out = generate(&i, 5).unwrap();
        assert_eq!(out.target.vertex_count(), 13);
        assert_eq!(out.target.edge_count(), 12);
        assert_eq!(out.source.vertex_count(), 13);
        assert_eq!(out.source.edge_count(), 12);
        for inst in enumerate_instances(5, 3) {
            let a = 4 * inst.sets.len() + 1;
            let out = generate(&inst, a).unwrap();
            let (sn, se, tn, te) = expected_counts(&inst, a);
            assert_eq!((out.source.vertex_count(), out.source.edge_count()), (sn, se));
            assert_eq!((out.target.vertex_count(), out.target.edge_count()), (tn, te));
            assert!(out.source.is_connected() && out.source.vertex_count() == out.source.edge_count() + 1);
            let d = all_pairs_shortest(&out.target);
            let top = out.target.vertex("top").unwrap();
            let leaves: Vec<VertexId> = inst
                .elements
                .iter()
                .map(|e| out.target.vertex(&format!("leaf_{}", e)).unwrap())
                .collect();
            for (i, &x) in leaves.iter().enumerate() {
                assert_eq!(d.get(top, x), Some(&r(3, 1)));
                for (j, &y) in leaves.iter().enumerate() {
                    if i == j {
                        continue;
                    }
                    let shared = inst.sets.iter().any(|s| s.contains(&i) && s.contains(&j));
                    let want = if shared { r(4, 1) } else { r(6, 1) };
                    assert_eq!(d.get(x, y), Some(&want));
                }
            }
        }
    }

    #[test]
    fn budget_and_anchor_errors() {
        let i = SetCoverInstance {
            k: 2,
            ..inst(3, &[[0, 1, 2]], 1)
        };
        assert!(matches!(generate(&i, 5), Err(HardnessError::Budget { .. })));
        assert!(matches!(
            generate(&inst(3, &[[0, 1, 2]], 1), 0),
            Err(HardnessError::NoAnchors)
        ));
        assert!(generate(&inst(3, &[[0, 1, 2]], 1), 2)
            .unwrap()
            .notes
            .iter()
            .any(|n| n.starts_with("warning")));
    }

    #[test]
    fn text_round_trip() {
        let i = inst(5, &[[0, 1, 2], [2, 3, 4]], 2);
        assert_eq!(SetCoverInstance::parse(&i.to_text()).unwrap(), i);
        assert!(SetCoverInstance::parse("elem a\nelem b\nset a b b\nk 1\n").is_err());
        assert!(SetCoverInstance::parse("elem a\nk 1\n").is_err());
    }

    #[test]
    fn dp_variant_bookkeeping() {
        let i = inst(3, &[[0, 1, 2]], 1);
        let (p, q) = generate_dp_variant(&i, &i, 5).unwrap();
        let base = generate(&i, 10).unwrap();
        assert_eq!(p.source.edge_count(), 3 * base.source.edge_count());
        assert_eq!(p.target.edge_count(), 4 * base.target.edge_count());
        assert_eq!(p.anchors, 10);
        assert_eq!(q.anchors, 5);
        assert_eq!(p.target.degree(p.target.vertex("top").unwrap()), 10 + 1);
        assert_eq!(p.source.total_length(), r(3 * base.source.edge_count() as i64, 1));
    }

    #[test]
    fn enumeration_is_nonempty_and_valid() {
        let all = enumerate_instances(5, 3);
        assert!(all.len() > 100);
        for i in &all {
            i.validate().unwrap();
        }
    }
}
