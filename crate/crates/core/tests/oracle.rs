mod common;

use std::time::Duration;

use isofold::search::{decide, minimize, Decision, MinimizeOutcome, SearchConfig};
use isofold::{r, verify, Rational};

fn cfg(q: usize) -> SearchConfig {
    SearchConfig {
        q,
        time_budget: Duration::from_secs(60),
        ..Default::default()
    }
}

#[test]
fn minimize_matches_brute_force_q1() {
    let graphs = common::small_graphs();
    for (sn, s) in &graphs {
        if s.edge_count() > 5 {
            continue;
        }
        for (dn, d) in &graphs {
            let cap = Rational::from(d.edge_count() as i64 + 1);
            let expect = common::brute_minimize(s, d, 1, &cap);
            let mut c = cfg(1);
            c.scale_max = Some(cap.clone());
            let got = match minimize(s, d, &c).unwrap() {
                MinimizeOutcome::Optimal { scale, map } => {
                    assert!(verify(s, d, &map).accepted(), "{} -> {}", sn, dn);
                    Some(scale)
                }
                MinimizeOutcome::NoneUpTo(_) => None,
                MinimizeOutcome::Timeout { .. } => panic!("timeout {} -> {}", sn, dn),
            };
            assert_eq!(got, expect, "{} -> {}", sn, dn);
        }
    }
}

#[test]
fn minimize_matches_brute_force_q2() {
    let graphs = common::small_graphs();
    for (sn, s) in &graphs {
        if s.edge_count() > 5 {
            continue;
        }
        for (dn, d) in &graphs {
            let cap = Rational::from(d.edge_count() as i64 + 1);
            let expect = common::brute_minimize(s, d, 2, &cap);
            let mut c = cfg(2);
            c.scale_max = Some(cap.clone());
            let got = match minimize(s, d, &c).unwrap() {
                MinimizeOutcome::Optimal { scale, map } => {
                    assert!(verify(s, d, &map).accepted(), "{} -> {}", sn, dn);
                    Some(scale)
                }
                MinimizeOutcome::NoneUpTo(_) => None,
                MinimizeOutcome::Timeout { .. } => panic!("timeout {} -> {}", sn, dn),
            };
            assert_eq!(got, expect, "{} -> {} at q=2", sn, dn);
        }
    }
}

#[test]
fn decide_is_monotone_on_samples() {
    let graphs = common::small_graphs();
    for (_, s) in graphs.iter().take(8) {
        for (_, d) in graphs.iter().take(8) {
            let mut prev = false;
            for k in 1..=8 {
                let a = r(k, 2);
                let now = matches!(decide(s, d, &a, &cfg(2)).unwrap(), Decision::Feasible(_));
                assert!(!prev || now);
                prev = now;
            }
        }
    }
}
