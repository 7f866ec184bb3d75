//! Independent brute-force oracles shared by the integration tests.

#![allow(dead_code)]

use std::collections::HashSet;

use isofold::{MetricGraph, Rational};

/// Subdivided target with integer edge weights, built from scratch.
pub struct Sub {
    pub n: usize,
    /// `(a, b, weight)`
    pub edges: Vec<(usize, usize, u64)>,
}

/// Splits each edge of a target with integer lengths into `q` pieces; every
/// piece then weighs `len` units of `1/q`.
pub fn subdivide_integer(g: &MetricGraph, q: usize) -> Sub {
    let mut n = g.vertex_count();
    let mut edges = Vec::new();
    for e in g.edges() {
        assert!(e.length.is_integer(), "oracle wants integer lengths");
        let w: u64 = e.length.floor_i64() as u64;
        let mut prev = e.u.0;
        for _ in 1..q {
            edges.push((prev, n, w));
            prev = n;
            n += 1;
        }
        edges.push((prev, e.v.0, w));
    }
    Sub { n, edges }
}

/// Covered-edge masks of every walk from `a` to `b` of weight at most
/// `budget` that uses each directed edge at most once.
pub fn walk_masks(sub: &Sub, a: usize, b: usize, budget: u64) -> HashSet<u64> {
    fn go(sub: &Sub, cur: usize, b: usize, left: u64, used: &mut Vec<bool>, mask: u64, out: &mut HashSet<u64>) {
        if cur == b {
            out.insert(mask);
        }
        for (i, &(x, y, w)) in sub.edges.iter().enumerate() {
            for (from, to, arc) in [(x, y, 2 * i), (y, x, 2 * i + 1)] {
                if from != cur || used[arc] || w > left {
                    continue;
                }
                used[arc] = true;
                go(sub, to, b, left - w, used, mask | 1 << i, out);
                used[arc] = false;
            }
        }
    }
    let mut out = HashSet::new();
    let mut used = vec![false; 2 * sub.edges.len()];
    go(sub, a, b, budget, &mut used, 0, &mut out);
    out
}

/// Is there a placement onto subdivision vertices with routes covering
/// everything? Source lengths must be integers as well.
pub fn brute_decide(src: &MetricGraph, dst: &MetricGraph, q: usize, alpha: &Rational) -> bool {
    let sub = subdivide_integer(dst, q);
    let full: u64 = (1u64 << sub.edges.len()) - 1;
    let budgets: Vec<u64> = src
        .edges()
        .iter()
        .map(|e| {
            let x = alpha * &e.length * Rational::from(q as i64);
            x.floor_i64().max(0) as u64
        })
        .collect();
    let perimeter: u64 = sub.edges.iter().map(|e| e.2).sum();
    if budgets.iter().sum::<u64>() < perimeter {
        return false;
    }
    let ns = src.vertex_count();
    let mut cache: std::collections::HashMap<(usize, usize, u64), Vec<u64>> = std::collections::HashMap::new();
    let mut img = vec![0usize; ns];
    let total = sub.n.pow(ns as u32);
    for code in 0..total {
        let mut c = code;
        for slot in img.iter_mut() {
            *slot = c % sub.n;
            c /= sub.n;
        }
        let mut reach: HashSet<u64> = HashSet::from([0]);
        let mut ok = true;
        for (i, e) in src.edges().iter().enumerate() {
            let key = (img[e.u.0], img[e.v.0], budgets[i]);
            let masks = cache
                .entry(key)
                .or_insert_with(|| walk_masks(&sub, key.0, key.1, key.2).into_iter().collect());
            if masks.is_empty() {
                ok = false;
                break;
            }
            reach = reach.iter().flat_map(|r| masks.iter().map(move |m| r | m)).collect();
        }
        if ok && reach.contains(&full) {
            return true;
        }
    }
    false
}

/// Smallest feasible scale on the `1/(q*g)` grid, `g` the gcd of source
/// lengths (integers here), searched upward from the grid step.
pub fn brute_minimize(src: &MetricGraph, dst: &MetricGraph, q: usize, cap: &Rational) -> Option<Rational> {
    let g = src.edges().iter().map(|e| e.length.floor_i64()).fold(0, num_gcd);
    let step = Rational::new(1, q as i64 * g);
    let mut alpha = step.clone();
    while &alpha <= cap {
        if brute_decide(src, dst, q, &alpha) {
            return Some(alpha);
        }
        alpha += &step;
    }
    None
}

fn num_gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        num_gcd(b, a % b)
    }
}

/// Small connected graphs with integer edge lengths, named for messages.
pub fn small_graphs() -> Vec<(&'static str, MetricGraph)> {
    let specs: [(&str, &str); 14] = [
        ("P2", "e a b"),
        ("P3", "e a b\ne b c"),
        ("P3-long", "e a b 2\ne b c"),
        ("K3", "e a b\ne b c\ne a c"),
        ("P4", "e a b\ne b c\ne c d"),
        ("K13", "e a b\ne a c\ne a d"),
        ("C4", "e a b\ne b c\ne c d\ne d a"),
        ("paw", "e a b\ne b c\ne a c\ne c d"),
        ("K4-e", "e a b\ne b c\ne c d\ne d a\ne a c"),
        ("P5", "e a b\ne b c\ne c d\ne d e"),
        ("C5", "e a b\ne b c\ne c d\ne d e\ne e a"),
        ("bull", "e a b\ne b c\ne a c\ne b d\ne c e"),
        ("K4", "e a b\ne a c\ne a d\ne b c\ne b d\ne c d"),
        ("house", "e a b\ne b c\ne c d\ne d a\ne a e\ne b e"),
    ];
    specs
        .iter()
        .map(|(name, body)| {
            let mut text = String::new();
            let mut seen = Vec::new();
            for line in body.lines() {
                for v in line.split_whitespace().skip(1).take(2) {
                    if !seen.contains(&v) {
                        seen.push(v);
                        text.push_str(&format!("v {}\n", v));
                    }
                }
            }
            text.push_str(body);
            (*name, MetricGraph::parse(&text).unwrap())
        })
        .collect()
}
