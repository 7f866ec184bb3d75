//! Local improvement: freeze part of a folding, search the rest one grid step
//! lower, then tighten the result with the exact LP.

use std::time::Duration;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bounds::improved_lower;
use crate::covering::{verify, FoldingMap};
use crate::graph::MetricGraph;
use crate::lp_refine::refine;
use crate::rational::Rational;
use crate::search::{decide, grid_step, minimize, on_grid, Decision, MinimizeOutcome, SearchConfig, SearchError};

#[derive(Debug, thiserror::Error)]
pub enum ImproveError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error("no initial folding found at grid q={q} (scale refuted below {refuted_below})")]
    NoInitial { q: usize, refuted_below: Rational },
}

#[derive(Debug, Clone)]
pub struct ImproveConfig {
    pub rounds: usize,
    /// Fraction of placements frozen per round.
    pub keep_fraction: Rational,
    /// Candidates up to `(1 + eps)` times the working scale are accepted.
    pub worsen_tolerance: Rational,
    pub seed: u64,
    pub round_budget: Duration,
    /// Grid of the initial solution; doubled when a grid is exhausted.
    pub q_start: usize,
    pub q_max: usize,
    pub workers: usize,
}

impl Default for ImproveConfig {
    fn default() -> Self {
        ImproveConfig {
            rounds: 12,
            keep_fraction: Rational::new(1, 2),
            worsen_tolerance: Rational::new(1, 20),
            seed: 0,
            round_budget: Duration::from_secs(60),
            q_start: 1,
            q_max: 4,
            workers: 1,
        }
    }
}

impl ImproveConfig {
    pub fn validate(&self) -> Result<(), ImproveError> {
        if self.keep_fraction.is_negative() || self.keep_fraction > Rational::one() {
            return Err(ImproveError::Config(format!(
                "keep fraction {} is outside [0,1]",
                self.keep_fraction
            )));
        }
        if self.worsen_tolerance.is_negative() {
            return Err(ImproveError::Config(format!(
                "tolerance {} is negative",
                self.worsen_tolerance
            )));
        }
        if self.q_start == 0 || self.q_max < self.q_start {
            return Err(ImproveError::Config("grid range is empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundTrace {
    pub round: usize,
    pub q: usize,
    pub target: Rational,
    pub pinned: usize,
    pub verdict: &'static str,
    pub candidate: Option<Rational>,
    pub accepted: bool,
    pub best: Rational,
}

#[derive(Debug, Clone)]
pub struct ImproveResult {
    pub best: FoldingMap,
    pub scale: Rational,
    pub initial: Rational,
    pub trace: Vec<RoundTrace>,
}

fn tighten(src: &MetricGraph, dst: &MetricGraph, fm: FoldingMap) -> FoldingMap {
    match refine(src, dst, &fm, src.vertex_count()) {
        Ok((out, scale)) if scale <= fm.scale && verify(src, dst, &out).accepted() => out,
        _ => fm,
    }
}

pub fn improve(src: &MetricGraph, dst: &MetricGraph, cfg: &ImproveConfig) -> Result<ImproveResult, ImproveError> {
    cfg.validate()?;
    let mut q = cfg.q_start;
    let start_cfg = SearchConfig {
        q,
        time_budget: cfg.round_budget,
        seed: cfg.seed,
        workers: cfg.workers,
        ..Default::default()
    };
    let first = match minimize(src, dst, &start_cfg)? {
        MinimizeOutcome::Optimal { map, .. } => map,
        MinimizeOutcome::NoneUpTo(x) | MinimizeOutcome::Timeout { refuted_below: x } => {
            return Err(ImproveError::NoInitial { q, refuted_below: x })
        }
    };
    let initial = first.scale.clone();
    let mut working = tighten(src, dst, first);
    let mut best = working.clone();
    let lower = improved_lower(src, dst).value;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut trace = Vec::new();
    let mut use_pins = true;
    let mut round = 0;
    while round < cfg.rounds && best.scale > lower {
        let step = grid_step(src, dst, q)?;
        let k = (&working.scale / &step).ceil() - 1;
        let target = Rational::from(k) * &step;
        let floor = Rational::from((&lower / &step).ceil().max(1.into())) * &step;
        if target < floor {
            if q * 2 > cfg.q_max {
                break;
            }
            q *= 2;
            use_pins = true;
            continue;
        }
        round += 1;
        let mut pins = std::collections::BTreeMap::new();
        if use_pins {
            let mut free: Vec<usize> = (0..src.vertex_count())
                .filter(|&v| on_grid(dst, q, &working.placement[v]))
                .collect();
            free.shuffle(&mut rng);
            let keep = (Rational::from(src.vertex_count() as i64) * &cfg.keep_fraction).floor();
            let keep = num_traits::ToPrimitive::to_usize(&keep).unwrap_or(0).min(free.len());
            for &v in &free[..keep] {
                pins.insert(v, working.placement[v].clone());
            }
        }
        let search = SearchConfig {
            q,
            time_budget: cfg.round_budget,
            seed: cfg.seed.wrapping_add(round as u64),
            workers: cfg.workers,
            pins,
            ..Default::default()
        };
        let pinned = search.pins.len();
        let decision = decide(src, dst, &target, &search)?;
        let mut entry = RoundTrace {
            round,
            q,
            target: target.clone(),
            pinned,
            verdict: "",
            candidate: None,
            accepted: false,
            best: best.scale.clone(),
        };
        match decision {
            Decision::Feasible(map) => {
                let cand = tighten(src, dst, map);
                entry.verdict = "feasible";
                entry.candidate = Some(cand.scale.clone());
                let limit = &working.scale * &(Rational::one() + &cfg.worsen_tolerance);
                if cand.scale <= limit {
                    entry.accepted = true;
                    if cand.scale < best.scale {
                        best = cand.clone();
                    }
                    working = cand;
                }
                use_pins = true;
            }
            Decision::Infeasible | Decision::Timeout => {
                entry.verdict = if decision == Decision::Infeasible {
                    "infeasible"
                } else {
                    "timeout"
                };
                if pinned > 0 {
                    use_pins = false;
                } else if q * 2 <= cfg.q_max {
                    q *= 2;
                    use_pins = true;
                } else {
                    entry.best = best.scale.clone();
                    trace.push(entry);
                    break;
                }
            }
        }
        entry.best = best.scale.clone();
        trace.push(entry);
    }
    Ok(ImproveResult {
        scale: best.scale.clone(),
        best,
        initial,
        trace,
    })
}
