//! Invariants of search and refinement over random pairs of small graphs.

mod common;

use isofold::bounds::improved_lower;
use isofold::lp_refine::refine;
use isofold::search::{decide, fold_contracted, minimize, Decision, MinimizeOutcome, SearchConfig};
use isofold::{verify, FoldingMap, MetricGraph, Rational};
use proptest::prelude::*;

fn pair() -> impl Strategy<Value = (MetricGraph, MetricGraph)> {
    let n = common::small_graphs().len();
    (0..n, 0..n).prop_map(|(i, j)| {
        let g = common::small_graphs();
        (g[i].1.clone(), g[j].1.clone())
    })
}

fn optimum(src: &MetricGraph, dst: &MetricGraph) -> (Rational, FoldingMap) {
    // Room for large sources on tiny targets.
    let cfg = SearchConfig { scale_max: Some(Rational::from(16)), ..SearchConfig::with_q(1) };
    match minimize(src, dst, &cfg).unwrap() {
        MinimizeOutcome::Optimal { scale, map } => (scale, map),
        other => panic!("{:?}", other),
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn minimum_is_certified_and_above_the_bound((src, dst) in pair()) {
        let (scale, map) = optimum(&src, &dst);
        prop_assert!(verify(&src, &dst, &map).accepted());
        prop_assert_eq!(&map.scale, &scale);
        prop_assert!(scale >= improved_lower(&src, &dst).value);
    }

    #[test]
    fn feasibility_is_monotone_in_scale((src, dst) in pair()) {
        let (scale, _) = optimum(&src, &dst);
        let larger = &scale + &Rational::from(1);
        let d = decide(&src, &dst, &larger, &SearchConfig::with_q(1)).unwrap();
        match d {
            Decision::Feasible(m) => prop_assert!(verify(&src, &dst, &m).accepted()),
            other => prop_assert!(false, "{:?} at {}", other, larger),
        }
    }

    #[test]
    fn refinement_never_worsens((src, dst) in pair()) {
        let (scale, map) = optimum(&src, &dst);
        let (out, value) = refine(&src, &dst, &map, src.vertex_count()).unwrap();
        prop_assert!(value <= scale);
        prop_assert_eq!(&out.scale, &value);
        prop_assert!(verify(&src, &dst, &out).accepted());
        let back = FoldingMap::parse(&src, &dst, &out.to_text(&src, &dst)).unwrap();
        prop_assert_eq!(back.to_text(&src, &dst), out.to_text(&src, &dst));
    }

    #[test]
    fn contracted_search_only_returns_valid_maps((src, dst) in pair()) {
        let (scale, _) = optimum(&src, &dst);
        if let Some(m) = fold_contracted(&src, &dst, &scale, &SearchConfig::with_q(1)).unwrap() {
            prop_assert!(verify(&src, &dst, &m).accepted());
        }
    }
}
