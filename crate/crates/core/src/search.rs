//! Exact branch-and-bound for folding at grid scales.
//!
//! Every target edge is split into `q` parts. Source vertices go to vertices
//! of the subdivision and each source edge becomes a walk that uses every
//! directed subdivision edge at most once and whose length fits the scaled
//! budget. Infeasibility is only claimed for this grid model.

use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use num_traits::ToPrimitive;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bounds::improved_lower;
use crate::covering::FoldingMap;
use crate::graph::{GraphError, MetricGraph, PointOnGraph, VertexId, Walk};
use crate::grid::{Bits, Grid, GridWalk, RouteOption, UNREACHABLE};
use crate::rational::Rational;

#[derive(Debug, thiserror::Error)]
pub enum SearchError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("{0} graph is empty or disconnected")]
    Disconnected(&'static str),
    #[error("scale must be positive")]
    NonpositiveScale,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchMode {
    Decide(Rational),
    Minimize,
}

#[derive(Debug, Clone)]
pub struct SearchConfig {
    /// Parts per target edge.
    pub q: usize,
    /// Largest scale tried by `minimize`; `None` means the target edge count.
    pub scale_max: Option<Rational>,
    pub time_budget: Duration,
    pub seed: u64,
    pub mode: SearchMode,
    pub workers: usize,
    /// Source vertex index to a fixed target point. Points off the grid make
    /// the decision infeasible.
    pub pins: BTreeMap<usize, PointOnGraph>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            q: 1,
            scale_max: None,
            time_budget: Duration::from_secs(600),
            seed: 0,
            mode: SearchMode::Minimize,
            workers: 1,
            pins: BTreeMap::new(),
        }
    }
}

impl SearchConfig {
    pub fn with_q(q: usize) -> Self {
        SearchConfig {
            q,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decision {
    Feasible(FoldingMap),
    Infeasible,
    Timeout,
}

impl Decision {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Decision::Feasible(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MinimizeOutcome {
    /// Smallest feasible grid scale.
    Optimal { scale: Rational, map: FoldingMap },
    /// Every grid scale up to the cap is infeasible.
    NoneUpTo(Rational),
    /// Every grid scale strictly below `refuted_below` was refuted before the
    /// time ran out.
    Timeout { refuted_below: Rational },
}

/// One entry per decision call made by `minimize`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinimizeTrace {
    pub scale: Rational,
    pub verdict: &'static str,
}

fn check_inputs(src: &MetricGraph, dst: &MetricGraph) -> Result<(), SearchError> {
    src.ensure_valid()?;
    dst.ensure_valid()?;
    if src.vertex_count() == 0 || !src.is_connected() {
        return Err(SearchError::Disconnected("source"));
    }
    if dst.vertex_count() == 0 || !dst.is_connected() {
        return Err(SearchError::Disconnected("target"));
    }
    Ok(())
}

/// Decides whether `src` scaled by `alpha` folds onto `dst` in the grid model.
pub fn decide(
    src: &MetricGraph,
    dst: &MetricGraph,
    alpha: &Rational,
    cfg: &SearchConfig,
) -> Result<Decision, SearchError> {
    check_inputs(src, dst)?;
    if !alpha.is_positive() {
        return Err(SearchError::NonpositiveScale);
    }
    let grid = Grid::new(dst, cfg.q)?;
    let deadline = Instant::now() + cfg.time_budget;
    Ok(decide_on(src, &grid, alpha, cfg, deadline))
}

/// Grid step: the smallest scale increment that keeps every budget integral.
pub fn grid_step(src: &MetricGraph, dst: &MetricGraph, q: usize) -> Result<Rational, SearchError> {
    let grid = Grid::new(dst, q)?;
    Ok(step_for(src, &grid))
}

fn step_for(src: &MetricGraph, grid: &Grid) -> Rational {
    match src.edges().split_first() {
        Some((first, rest)) => {
            let g = rest.iter().fold(first.length.clone(), |acc, e| acc.gcd(&e.length));
            &grid.unit / &g
        }
        None => grid.unit.clone(),
    }
}

/// Ascends the grid from the improved lower bound until a feasible scale is
/// found.
pub fn minimize(src: &MetricGraph, dst: &MetricGraph, cfg: &SearchConfig) -> Result<MinimizeOutcome, SearchError> {
    minimize_traced(src, dst, cfg).map(|(o, _)| o)
}

pub fn minimize_traced(
    src: &MetricGraph,
    dst: &MetricGraph,
    cfg: &SearchConfig,
) -> Result<(MinimizeOutcome, Vec<MinimizeTrace>), SearchError> {
    check_inputs(src, dst)?;
    let grid = Grid::new(dst, cfg.q)?;
    let deadline = Instant::now() + cfg.time_budget;
    let step = step_for(src, &grid);
    let lower = improved_lower(src, dst).value;
    let mut k = (&lower / &step).ceil();
    if k < 1.into() {
        k = 1.into();
    }
    let mut alpha = Rational::from(k) * &step;
    let cap = cfg
        .scale_max
        .clone()
        .unwrap_or_else(|| Rational::from(dst.edge_count() as i64));
    let mut trace = Vec::new();
    while alpha <= cap {
        let d = decide_on(src, &grid, &alpha, cfg, deadline);
        let verdict = match &d {
            Decision::Feasible(_) => "feasible",
            Decision::Infeasible => "infeasible",
            Decision::Timeout => "timeout",
        };
        trace.push(MinimizeTrace {
            scale: alpha.clone(),
            verdict,
        });
        match d {
            Decision::Feasible(map) => return Ok((MinimizeOutcome::Optimal { scale: alpha, map }, trace)),
            Decision::Timeout => return Ok((MinimizeOutcome::Timeout { refuted_below: alpha }, trace)),
            Decision::Infeasible => alpha += &step,
        }
    }
    Ok((MinimizeOutcome::NoneUpTo(cap), trace))
}

/// Runs whichever mode the config asks for.
pub fn run(src: &MetricGraph, dst: &MetricGraph, cfg: &SearchConfig) -> Result<MinimizeOutcome, SearchError> {
    match &cfg.mode {
        SearchMode::Minimize => minimize(src, dst, cfg),
        SearchMode::Decide(alpha) => Ok(match decide(src, dst, alpha, cfg)? {
            Decision::Feasible(map) => MinimizeOutcome::Optimal {
                scale: alpha.clone(),
                map,
            },
            Decision::Infeasible => MinimizeOutcome::NoneUpTo(alpha.clone()),
            Decision::Timeout => MinimizeOutcome::Timeout {
                refuted_below: Rational::zero(),
            },
        }),
    }
}

struct Source {
    n: usize,
    /// `(u, v, budget)` per source edge.
    edges: Vec<(usize, usize, u64)>,
    inc: Vec<Vec<(usize, usize)>>,
    order: Vec<usize>,
    /// Earlier-placed interchangeable vertex whose image must not exceed ours.
    sym_prev: Vec<Option<usize>>,
    pin: Vec<Option<usize>>,
    odd_count: usize,
    total_budget: u64,
}

impl Source {
    fn new(g: &MetricGraph, grid: &Grid, alpha: &Rational) -> Source {
        let n = g.vertex_count();
        let edges: Vec<(usize, usize, u64)> = g
            .edges()
            .iter()
            .map(|e| (e.u.0, e.v.0, grid.budget(alpha, &e.length)))
            .collect();
        let mut inc = vec![Vec::new(); n];
        for (i, &(u, v, _)) in edges.iter().enumerate() {
            inc[u].push((i, v));
            inc[v].push((i, u));
        }
        let deg: Vec<usize> = (0..n).map(|v| inc[v].len()).collect();
        let order = placement_order(n, &inc, &deg);
        let sym_prev = symmetry(g, &order);
        let odd_count = deg.iter().filter(|d| *d % 2 == 1).count();
        let total_budget = edges.iter().map(|e| e.2).sum();
        Source {
            n,
            edges,
            inc,
            order,
            sym_prev,
            pin: vec![None; n],
            odd_count,
            total_budget,
        }
    }
}

/// Highest degree first; then repeatedly the frontier vertex of largest
/// degree, deeper vertices first on ties.
fn placement_order(n: usize, inc: &[Vec<(usize, usize)>], deg: &[usize]) -> Vec<usize> {
    let root = (0..n).max_by_key(|&v| (deg[v], std::cmp::Reverse(v))).unwrap();
    let mut depth = vec![usize::MAX; n];
    depth[root] = 0;
    let mut queue = std::collections::VecDeque::from([root]);
    while let Some(x) = queue.pop_front() {
        for &(_, y) in &inc[x] {
            if depth[y] == usize::MAX {
                depth[y] = depth[x] + 1;
                queue.push_back(y);
            }
        }
    }
    let mut placed = vec![false; n];
    let mut order = vec![root];
    placed[root] = true;
    while order.len() < n {
        let next = (0..n)
            .filter(|&v| !placed[v] && inc[v].iter().any(|&(_, y)| placed[y]))
            .max_by_key(|&v| (deg[v], depth[v], std::cmp::Reverse(v)))
            .expect("connected source");
        placed[next] = true;
        order.push(next);
    }
    order
}

fn neighbour_signature(g: &MetricGraph, v: usize, skip: Option<usize>) -> Vec<(usize, Rational)> {
    let mut sig: Vec<(usize, Rational)> = g
        .incident(VertexId(v))
        .iter()
        .map(|&e| {
            let ed = g.edge(e);
            (ed.other(VertexId(v)).0, ed.length.clone())
        })
        .filter(|(x, _)| Some(*x) != skip)
        .collect();
    sig.sort();
    sig
}

/// Interchangeable vertices: sibling subtrees with equal shape in a tree,
/// twins otherwise.
fn symmetry(g: &MetricGraph, order: &[usize]) -> Vec<Option<usize>> {
    let n = g.vertex_count();
    let mut class_of: Vec<usize> = (0..n).collect();
    if g.edge_count() + 1 == n {
        let canon = tree_canon(g, order[0]);
        let parent = tree_parents(g, order[0]);
        for v in 0..n {
            for w in 0..v {
                if class_of[w] == w && parent[v].is_some() && parent[v] == parent[w] && canon[v] == canon[w] {
                    class_of[v] = w;
                    break;
                }
            }
        }
    } else {
        let twins = |a: usize, b: usize| -> bool {
            let adjacent = g.edges_between(VertexId(a), VertexId(b)).count();
            if adjacent == 0 {
                neighbour_signature(g, a, None) == neighbour_signature(g, b, None)
            } else {
                adjacent == 1 && neighbour_signature(g, a, Some(b)) == neighbour_signature(g, b, Some(a))
            }
        };
        for v in 0..n {
            for w in 0..v {
                if class_of[w] != w {
                    continue;
                }
                let members: Vec<usize> = (0..v).filter(|&x| class_of[x] == w).collect();
                if members.iter().all(|&x| twins(x, v)) {
                    class_of[v] = w;
                    break;
                }
            }
        }
    }
    let mut last: HashMap<usize, usize> = HashMap::new();
    let mut prev = vec![None; n];
    for &v in order {
        let c = class_of[v];
        prev[v] = last.get(&c).copied();
        last.insert(c, v);
    }
    prev
}

fn tree_parents(g: &MetricGraph, root: usize) -> Vec<Option<usize>> {
    let n = g.vertex_count();
    let mut parent = vec![None; n];
    let mut seen = vec![false; n];
    seen[root] = true;
    let mut stack = vec![root];
    while let Some(x) = stack.pop() {
        for &e in g.incident(VertexId(x)) {
            let y = g.edge(e).other(VertexId(x)).0;
            if !seen[y] {
                seen[y] = true;
                parent[y] = Some(x);
                stack.push(y);
            }
        }
    }
    parent
}

/// Canonical string of each rooted subtree including the edge to its parent.
fn tree_canon(g: &MetricGraph, root: usize) -> Vec<String> {
    let n = g.vertex_count();
    let parent = tree_parents(g, root);
    let mut canon = vec![String::new(); n];
    fn build(g: &MetricGraph, v: usize, parent: &[Option<usize>], canon: &mut [String]) {
        let mut parts = Vec::new();
        let mut up = String::new();
        for &e in g.incident(VertexId(v)) {
            let ed = g.edge(e);
            let y = ed.other(VertexId(v)).0;
            if parent[v] == Some(y) {
                up = ed.length.to_string();
            } else {
                build(g, y, parent, canon);
                parts.push(canon[y].clone());
            }
        }
        parts.sort();
        canon[v] = format!("{}({})", up, parts.join(","));
    }
    build(g, root, &parent, &mut canon);
    canon
}

struct Ctx<'a> {
    grid: &'a Grid,
    src: &'a Source,
    deadline: Instant,
    stop: &'a AtomicBool,
    ticks: u64,
    timed_out: bool,
    rng: ChaCha8Rng,
    cache: HashMap<(usize, usize, u64), Rc<Vec<RouteOption>>>,
    possible: HashMap<(usize, usize, u64), Rc<Bits>>,
    img: Vec<usize>,
    allowance: u64,
}

impl Ctx<'_> {
    fn tick(&mut self) -> bool {
        self.ticks += 1;
        if self.ticks % 1024 == 0 && (Instant::now() >= self.deadline || self.stop.load(Ordering::Relaxed)) {
            self.timed_out = true;
        }
        self.timed_out
    }

    fn options(&mut self, a: usize, b: usize, budget: u64) -> Option<Rc<Vec<RouteOption>>> {
        let key = (a.min(b), a.max(b), budget);
        if let Some(o) = self.cache.get(&key) {
            return Some(o.clone());
        }
        let deadline = self.deadline;
        let stop = self.stop;
        let mut count = 0u64;
        let mut tick = move || {
            count += 1;
            count % 4096 == 0 && (Instant::now() >= deadline || stop.load(Ordering::Relaxed))
        };
        let opts = Rc::new(self.grid.route_options(key.0, key.1, budget, &mut tick)?);
        let mut union = Bits::new(self.grid.m);
        for o in opts.iter() {
            union.or_assign(&o.cover);
        }
        self.possible.insert(key, Rc::new(union));
        self.cache.insert(key, opts.clone());
        Some(opts)
    }

    /// Longest budget path from `p` through unplaced vertices only.
    fn reach(&mut self, p: usize, placed: &[bool]) -> u64 {
        let mut best = 0u64;
        let mut steps = 0usize;
        let mut on_path = vec![false; self.src.n];
        on_path[p] = true;
        let exact = longest(self.src, p, 0, placed, &mut on_path, &mut best, &mut steps);
        if exact {
            return best;
        }
        // Fall back to summing every unplaced edge reachable from `p`.
        let mut seen = vec![false; self.src.n];
        let mut stack: Vec<usize> = Vec::new();
        let mut first = 0u64;
        for &(e, y) in &self.src.inc[p] {
            if !placed[y] {
                first = first.max(self.src.edges[e].2);
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        let mut total = first;
        let mut counted = vec![false; self.src.edges.len()];
        while let Some(x) = stack.pop() {
            for &(e, y) in &self.src.inc[x] {
                if placed[y] || counted[e] {
                    continue;
                }
                counted[e] = true;
                total += self.src.edges[e].2;
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        total
    }

    /// Every target edge must still be coverable by some route, and the
    /// unplaced routes must have enough length for what only they can reach.
    fn reach_ok(&mut self, k: usize) -> bool {
        let mut placed = vec![false; self.src.n];
        for &v in &self.src.order[..k] {
            placed[v] = true;
        }
        // Unplaced vertices grouped into components; each component spends
        // its own budget near the placed vertices it hangs from.
        let n = self.src.n;
        let mut comp = vec![usize::MAX; n];
        let mut comps = 0usize;
        for v in 0..n {
            if placed[v] || comp[v] != usize::MAX {
                continue;
            }
            comp[v] = comps;
            let mut stack = vec![v];
            while let Some(x) = stack.pop() {
                for &(_, y) in &self.src.inc[x] {
                    if !placed[y] && comp[y] == usize::MAX {
                        comp[y] = comps;
                        stack.push(y);
                    }
                }
            }
            comps += 1;
        }
        let mut budget = vec![0u64; comps];
        let mut attach: Vec<Vec<usize>> = vec![Vec::new(); comps];
        for &(u, v, b) in &self.src.edges {
            match (placed[u], placed[v]) {
                (true, true) => {}
                (false, _) => {
                    budget[comp[u]] += b;
                    if placed[v] && !attach[comp[u]].contains(&v) {
                        attach[comp[u]].push(v);
                    }
                }
                (true, false) => {
                    budget[comp[v]] += b;
                    if !attach[comp[v]].contains(&u) {
                        attach[comp[v]].push(u);
                    }
                }
            }
        }
        let mut reach = vec![0u64; n];
        for c in 0..comps {
            for &p in &attach[c] {
                if reach[p] == 0 {
                    reach[p] = self.reach(p, &placed);
                }
            }
        }
        let fixed: Vec<(usize, usize, u64)> = self
            .src
            .edges
            .iter()
            .filter(|e| placed[e.0] && placed[e.1])
            .map(|&(u, v, b)| (self.img[u], self.img[v], b))
            .collect();
        let g = self.grid;
        // Target edges out of reach of every fixed route, with the components
        // able to get there.
        let mut need: Vec<(u64, Vec<usize>)> = Vec::new();
        let mut total = 0u64;
        for e in 0..g.m {
            let (eu, ev) = g.ends[e];
            let by_fixed = fixed.iter().any(|&(a, b, budget)| {
                let via = |s: usize, t: usize| -> u64 {
                    let (d1, d2) = (g.dist[a][s], g.dist[t][b]);
                    if d1 == UNREACHABLE || d2 == UNREACHABLE {
                        u64::MAX
                    } else {
                        d1 as u64 + g.w[e] as u64 + d2 as u64
                    }
                };
                via(eu, ev).min(via(ev, eu)) <= budget
            });
            if by_fixed {
                continue;
            }
            let who: Vec<usize> = (0..comps)
                .filter(|&c| attach[c].iter().any(|&p| g.near[self.img[p]][e] as u64 <= reach[p]))
                .collect();
            if who.is_empty() {
                return false;
            }
            total += g.w[e] as u64;
            need.push((g.w[e] as u64, who));
        }
        if total > budget.iter().sum::<u64>() {
            return false;
        }
        supply_meets_demand(&budget, &need)
    }

    fn place(&mut self, k: usize) -> Option<Vec<usize>> {
        if self.tick() {
            return None;
        }
        let src = self.src;
        if k == src.n {
            return self.full_placement();
        }
        let v = src.order[k];
        let g = self.grid;
        let mut cands: Vec<usize> = (0..g.n)
            .filter(|&x| {
                src.inc[v].iter().all(|&(e, y)| {
                    let pos = src.order[..k].contains(&y);
                    !pos || (g.dist[self.img[y]][x] != UNREACHABLE && g.dist[self.img[y]][x] as u64 <= src.edges[e].2)
                })
            })
            .filter(|&x| src.sym_prev[v].is_none_or(|p| x >= self.img[p]))
            .filter(|&x| src.pin[v].is_none_or(|p| p == x))
            .collect();
        cands.shuffle(&mut self.rng);
        for x in cands {
            self.img[v] = x;
            if k + 1 < src.n && !self.reach_ok(k + 1) {
                continue;
            }
            if let Some(r) = self.place(k + 1) {
                return Some(r);
            }
            if self.timed_out {
                return None;
            }
        }
        None
    }

    fn full_placement(&mut self) -> Option<Vec<usize>> {
        let g = self.grid;
        let mut parity = vec![false; g.n];
        for &(u, v, _) in &self.src.edges {
            parity[self.img[u]] ^= true;
            parity[self.img[v]] ^= true;
        }
        for &o in &g.odd {
            parity[o] ^= true;
        }
        let t: Vec<usize> = (0..g.n).filter(|&x| parity[x]).collect();
        if g.t_join_lower(&t) > self.allowance {
            return None;
        }
        let keys: Vec<(usize, usize, u64)> = self
            .src
            .edges
            .iter()
            .map(|&(u, v, b)| (self.img[u], self.img[v], b))
            .collect();
        let mut opts = Vec::with_capacity(keys.len());
        let mut poss = Vec::with_capacity(keys.len());
        for &(a, b, budget) in &keys {
            let o = self.options(a, b, budget);
            let Some(o) = o else {
                self.timed_out = true;
                return None;
            };
            if o.is_empty() {
                return None;
            }
            opts.push(o);
            poss.push(self.possible[&(a.min(b), a.max(b), budget)].clone());
        }
        let mut chosen = vec![None; keys.len()];
        let mut covered = Bits::new(g.m);
        if self.route(&keys, &opts, &poss, &mut chosen, &mut covered, 0, 0) {
            Some(chosen.into_iter().map(|c| c.unwrap_or(0)).collect())
        } else {
            None
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn route(
        &mut self,
        keys: &[(usize, usize, u64)],
        opts: &[Rc<Vec<RouteOption>>],
        poss: &[Rc<Bits>],
        chosen: &mut Vec<Option<usize>>,
        covered: &mut Bits,
        covered_len: u64,
        spent: u64,
    ) -> bool {
        if self.tick() {
            return false;
        }
        if spent - covered_len > self.allowance {
            return false;
        }
        let g = self.grid;
        if covered_len == g.perimeter {
            return true;
        }
        let mut counts = vec![0u32; g.m];
        for (s, c) in chosen.iter().enumerate() {
            if c.is_none() {
                for e in poss[s].minus(covered) {
                    counts[e] += 1;
                }
            }
        }
        let mut pick: Option<usize> = None;
        for e in 0..g.m {
            if covered.get(e) {
                continue;
            }
            if counts[e] == 0 {
                return false;
            }
            if pick.is_none_or(|p| counts[e] < counts[p]) {
                pick = Some(e);
            }
        }
        let target = pick.expect("uncovered edge exists");
        let mut sources: Vec<usize> = (0..keys.len())
            .filter(|&s| chosen[s].is_none() && poss[s].get(target))
            .collect();
        sources.sort_by_key(|&s| (opts[s].len(), s));
        for s in sources {
            for (i, o) in opts[s].iter().enumerate() {
                if !o.cover.get(target) {
                    continue;
                }
                let mut next = covered.clone();
                next.or_assign(&o.cover);
                let gained: u64 = o.cover.minus(covered).map(|e| g.w[e] as u64).sum();
                chosen[s] = Some(i);
                if self.route(
                    keys,
                    opts,
                    poss,
                    chosen,
                    &mut next,
                    covered_len + gained,
                    spent + keys[s].2,
                ) {
                    *covered = next;
                    return true;
                }
                chosen[s] = None;
                if self.timed_out {
                    return false;
                }
            }
        }
        false
    }
}

/// Whether components with the given supplies can serve every demand, each
/// demand drawing only from its listed components.
fn supply_meets_demand(supply: &[u64], demand: &[(u64, Vec<usize>)]) -> bool {
    let (nc, nd) = (supply.len(), demand.len());
    let (s, t) = (nc + nd, nc + nd + 1);
    let mut graph = FlowGraph::new(nc + nd + 2);
    for (c, &cap) in supply.iter().enumerate() {
        graph.add(s, c, cap);
    }
    let mut total = 0;
    for (d, (cap, from)) in demand.iter().enumerate() {
        for &c in from {
            graph.add(c, nc + d, *cap);
        }
        graph.add(nc + d, t, *cap);
        total += cap;
    }
    graph.max_flow(s, t) == total
}

struct FlowGraph {
    to: Vec<usize>,
    cap: Vec<u64>,
    head: Vec<Vec<usize>>,
}

impl FlowGraph {
    fn new(n: usize) -> Self {
        FlowGraph {
            to: Vec::new(),
            cap: Vec::new(),
            head: vec![Vec::new(); n],
        }
    }

    fn add(&mut self, a: usize, b: usize, c: u64) {
        self.head[a].push(self.to.len());
        self.to.push(b);
        self.cap.push(c);
        self.head[b].push(self.to.len());
        self.to.push(a);
        self.cap.push(0);
    }

    /// Dinic.
    fn max_flow(&mut self, s: usize, t: usize) -> u64 {
        let n = self.head.len();
        let mut flow = 0;
        loop {
            let mut level = vec![usize::MAX; n];
            level[s] = 0;
            let mut queue = std::collections::VecDeque::from([s]);
            while let Some(x) = queue.pop_front() {
                for &a in &self.head[x] {
                    if self.cap[a] > 0 && level[self.to[a]] == usize::MAX {
                        level[self.to[a]] = level[x] + 1;
                        queue.push_back(self.to[a]);
                    }
                }
            }
            if level[t] == usize::MAX {
                return flow;
            }
            let mut next = vec![0usize; n];
            loop {
                let f = self.push(s, t, u64::MAX, &level, &mut next);
                if f == 0 {
                    break;
                }
                flow += f;
            }
        }
    }

    fn push(&mut self, x: usize, t: usize, limit: u64, level: &[usize], next: &mut [usize]) -> u64 {
        if x == t {
            return limit;
        }
        while next[x] < self.head[x].len() {
            let a = self.head[x][next[x]];
            let y = self.to[a];
            if self.cap[a] > 0 && level[y] == level[x] + 1 {
                let f = self.push(y, t, limit.min(self.cap[a]), level, next);
                if f > 0 {
                    self.cap[a] -= f;
                    self.cap[a ^ 1] += f;
                    return f;
                }
            }
            next[x] += 1;
        }
        0
    }
}

fn longest(
    src: &Source,
    x: usize,
    len: u64,
    placed: &[bool],
    on_path: &mut [bool],
    best: &mut u64,
    steps: &mut usize,
) -> bool {
    *steps += 1;
    if *steps > 20_000 {
        return false;
    }
    *best = (*best).max(len);
    for &(e, y) in &src.inc[x] {
        if placed[y] || on_path[y] {
            continue;
        }
        on_path[y] = true;
        let ok = longest(src, y, len + src.edges[e].2, placed, on_path, best, steps);
        on_path[y] = false;
        if !ok {
            return false;
        }
    }
    true
}

fn reverse_walk(grid: &Grid, w: &GridWalk) -> GridWalk {
    let mut cur = w.start;
    for &e in &w.edges {
        let (a, b) = grid.ends[e];
        cur = if a == cur { b } else { a };
    }
    GridWalk {
        start: cur,
        edges: w.edges.iter().rev().copied().collect(),
    }
}

fn decide_on(src: &MetricGraph, grid: &Grid, alpha: &Rational, cfg: &SearchConfig, deadline: Instant) -> Decision {
    let mut s = Source::new(src, grid, alpha);
    if !cfg.pins.is_empty() {
        // Pins break the interchangeability the symmetry rule relies on.
        s.sym_prev = vec![None; s.n];
        for (&v, p) in &cfg.pins {
            match (0..grid.n).find(|&x| grid.sub.to_base_point(VertexId(x)) == *p) {
                Some(x) if v < s.n => s.pin[v] = Some(x),
                _ => return Decision::Infeasible,
            }
        }
    }
    if s.total_budget < grid.perimeter {
        return Decision::Infeasible;
    }
    let allowance = s.total_budget - grid.perimeter;
    // Parity: odd target vertices not matched by odd source images need
    // extra length between pairs of them.
    let unmatched = grid.odd.len().saturating_sub(s.odd_count) as u64 / 2;
    if unmatched > 0 && unmatched.saturating_mul(grid.min_odd_gap()) > allowance {
        return Decision::Infeasible;
    }
    let stop = AtomicBool::new(false);
    let workers = cfg.workers.max(1);
    let outcome = if workers == 1 {
        run_worker(&s, grid, cfg.seed, deadline, &stop, allowance, None)
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let (s, stop) = (&s, &stop);
                    scope.spawn(move || {
                        let r = run_worker(
                            s,
                            grid,
                            cfg.seed.wrapping_add(w as u64),
                            deadline,
                            stop,
                            allowance,
                            Some((w, workers)),
                        );
                        if matches!(r, WorkerResult::Found(..)) {
                            stop.store(true, Ordering::Relaxed);
                        }
                        r
                    })
                })
                .collect();
            let results: Vec<WorkerResult> = handles
                .into_iter()
                .map(|h| h.join().expect("worker panicked"))
                .collect();
            let mut timed_out = false;
            for r in results {
                match r {
                    WorkerResult::Found(..) => return r,
                    WorkerResult::TimedOut => timed_out = true,
                    WorkerResult::Exhausted => {}
                }
            }
            if timed_out {
                WorkerResult::TimedOut
            } else {
                WorkerResult::Exhausted
            }
        })
    };
    match outcome {
        WorkerResult::Found(img, routes) => Decision::Feasible(certificate(src, grid, alpha, &img, &routes)),
        WorkerResult::Exhausted => Decision::Infeasible,
        WorkerResult::TimedOut => Decision::Timeout,
    }
}

enum WorkerResult {
    Found(Vec<usize>, Vec<GridWalk>),
    Exhausted,
    TimedOut,
}

fn run_worker(
    s: &Source,
    grid: &Grid,
    seed: u64,
    deadline: Instant,
    stop: &AtomicBool,
    allowance: u64,
    share: Option<(usize, usize)>,
) -> WorkerResult {
    let mut ctx = Ctx {
        grid,
        src: s,
        deadline,
        stop,
        ticks: 0,
        timed_out: false,
        rng: ChaCha8Rng::seed_from_u64(seed),
        cache: HashMap::new(),
        possible: HashMap::new(),
        img: vec![0; s.n],
        allowance,
    };
    let root = s.order[0];
    let mut roots: Vec<usize> = match s.pin[root] {
        Some(x) => vec![x],
        None => (0..grid.n).collect(),
    };
    roots.shuffle(&mut ctx.rng);
    if let Some((w, total)) = share {
        roots = roots
            .into_iter()
            .enumerate()
            .filter(|(i, _)| i % total == w)
            .map(|(_, x)| x)
            .collect();
    }
    for x in roots {
        ctx.img[root] = x;
        if s.n > 1 && !ctx.reach_ok(1) {
            continue;
        }
        if let Some(choice) = ctx.place(1) {
            let routes = s
                .edges
                .iter()
                .zip(choice)
                .map(|(&(u, v, b), i)| {
                    let (a, bb) = (ctx.img[u], ctx.img[v]);
                    let opts = &ctx.cache[&(a.min(bb), a.max(bb), b)];
                    let w = opts[i].walk.clone();
                    if w.start == a {
                        w
                    } else {
                        reverse_walk(grid, &w)
                    }
                })
                .collect();
            return WorkerResult::Found(ctx.img.clone(), routes);
        }
        if ctx.timed_out {
            return WorkerResult::TimedOut;
        }
    }
    if ctx.timed_out {
        WorkerResult::TimedOut
    } else {
        WorkerResult::Exhausted
    }
}

fn certificate(src: &MetricGraph, grid: &Grid, alpha: &Rational, img: &[usize], routes: &[GridWalk]) -> FoldingMap {
    let placement = (0..src.vertex_count())
        .map(|v| grid.sub.to_base_point(VertexId(img[v])))
        .collect();
    let routes: Vec<Walk> = routes.iter().map(|w| grid.to_base_walk(w)).collect();
    FoldingMap {
        scale: alpha.clone(),
        placement,
        routes,
    }
}

/// Whether `p` is a vertex of the `q`-grid on `dst`.
pub fn on_grid(dst: &MetricGraph, q: usize, p: &PointOnGraph) -> bool {
    match p {
        PointOnGraph::Vertex(_) => true,
        PointOnGraph::Interior { edge, offset } => match Grid::new(dst, q) {
            Ok(g) => (&(offset * &dst.edge(*edge).length) / &g.unit).is_integer(),
            Err(_) => false,
        },
    }
}

/// Sizes of the grid for reporting.
pub fn grid_summary(dst: &MetricGraph, q: usize) -> Result<BTreeMap<&'static str, u64>, SearchError> {
    let g = Grid::new(dst, q)?;
    let mut m = BTreeMap::new();
    m.insert("vertices", g.n as u64);
    m.insert("edges", g.m as u64);
    m.insert("perimeter_units", g.perimeter);
    m.insert("unit_den", g.unit.denom().to_u64().unwrap_or(0));
    Ok(m)
}

/// Source with every path of degree-2 vertices merged into one edge.
struct Contracted {
    graph: MetricGraph,
    /// Original vertex of each kept vertex.
    kept: Vec<VertexId>,
    /// Per contracted edge, the original edges from its `u` to its `v`, each
    /// with whether it is walked from its own `u`.
    chains: Vec<Vec<(usize, bool)>>,
}

fn follow(
    src: &MetricGraph,
    keep: &[bool],
    start: VertexId,
    e0: crate::graph::EdgeId,
) -> (Vec<(usize, bool)>, VertexId, Vec<VertexId>) {
    let (mut chain, mut inner) = (Vec::new(), Vec::new());
    let (mut at, mut e) = (start, e0);
    loop {
        let ed = src.edge(e);
        chain.push((e.0, ed.u == at));
        at = ed.other(at);
        if keep[at.0] {
            return (chain, at, inner);
        }
        inner.push(at);
        e = *src.incident(at).iter().find(|&&f| f != e).expect("degree two");
    }
}

fn contract(src: &MetricGraph) -> Contracted {
    let n = src.vertex_count();
    let mut keep: Vec<bool> = (0..n).map(|v| src.degree(VertexId(v)) != 2).collect();
    if !keep.iter().any(|&k| k) {
        keep[0] = true;
    }
    // Chains closing on themselves keep a middle vertex so no loop appears.
    for start in 0..n {
        if !keep[start] {
            continue;
        }
        for &e in src.incident(VertexId(start)) {
            let (_, end, inner) = follow(src, &keep, VertexId(start), e);
            if end.0 == start && !inner.is_empty() {
                keep[inner[inner.len() / 2].0] = true;
            }
        }
    }
    let mut graph = MetricGraph::new();
    let mut new_id = vec![None; n];
    let mut kept = Vec::new();
    for v in 0..n {
        if keep[v] {
            new_id[v] = Some(graph.add_vertex(src.label(VertexId(v))));
            kept.push(VertexId(v));
        }
    }
    let mut done = vec![false; src.edge_count()];
    let mut chains = Vec::new();
    for start in 0..n {
        if !keep[start] {
            continue;
        }
        for &e in src.incident(VertexId(start)) {
            if done[e.0] {
                continue;
            }
            let (chain, end, _) = follow(src, &keep, VertexId(start), e);
            let mut length = Rational::zero();
            for &(f, _) in &chain {
                done[f] = true;
                length = length + &src.edges()[f].length;
            }
            graph.add_edge_oriented(new_id[start].unwrap(), new_id[end.0].unwrap(), length);
            chains.push(chain);
        }
    }
    Contracted { graph, kept, chains }
}

/// Cuts `walk` at the given distances from its start.
fn cut_walk(dst: &MetricGraph, walk: &Walk, cuts: &[Rational]) -> Result<Vec<Walk>, GraphError> {
    let first = walk.first().cloned().ok_or(GraphError::BrokenWalk(0, 0))?;
    let mut pieces = Vec::new();
    let mut cur = vec![first];
    let mut travelled = Rational::zero();
    let mut next = 0;
    for seg in walk.segments(dst)? {
        let len = dst.edge(seg.edge).length.clone();
        let seg_len = (&seg.to - &seg.from).abs() * &len;
        while next < cuts.len() && cuts[next] <= &travelled + &seg_len {
            let t = &seg.from + &(&seg.to - &seg.from) * &((&cuts[next] - &travelled) / &seg_len);
            let p = PointOnGraph::on_edge(dst, seg.edge, t)?;
            cur.push(p.clone());
            pieces.push(Walk(std::mem::replace(&mut cur, vec![p])));
            next += 1;
        }
        cur.push(PointOnGraph::on_edge(dst, seg.edge, seg.to.clone())?);
        travelled = travelled + seg_len;
    }
    while pieces.len() < cuts.len() {
        let p = cur.last().cloned().expect("nonempty");
        pieces.push(Walk(std::mem::replace(&mut cur, vec![p])));
    }
    pieces.push(Walk(cur));
    Ok(pieces)
}

/// Searches with chains of degree-2 source vertices merged into single edges
/// and splits the walks back, cutting each at the scaled length of its piece.
/// Only verified certificates are returned; `None` settles nothing about `src`.
pub fn fold_contracted(
    src: &MetricGraph,
    dst: &MetricGraph,
    alpha: &Rational,
    cfg: &SearchConfig,
) -> Result<Option<FoldingMap>, SearchError> {
    check_inputs(src, dst)?;
    let c = contract(src);
    let mut inner = cfg.clone();
    inner.pins = cfg
        .pins
        .iter()
        .filter_map(|(&v, p)| c.kept.iter().position(|k| k.0 == v).map(|i| (i, p.clone())))
        .collect();
    let Decision::Feasible(fm) = decide(&c.graph, dst, alpha, &inner)? else {
        return Ok(None);
    };
    let mut placement: Vec<Option<PointOnGraph>> = vec![None; src.vertex_count()];
    for (i, v) in c.kept.iter().enumerate() {
        placement[v.0] = Some(fm.placement[i].clone());
    }
    let mut routes: Vec<Option<Walk>> = vec![None; src.edge_count()];
    for (ce, chain) in c.chains.iter().enumerate() {
        let mut cuts = Vec::new();
        let mut acc = Rational::zero();
        for &(e, _) in &chain[..chain.len() - 1] {
            acc = acc + &(alpha * &src.edges()[e].length);
            cuts.push(acc.clone());
        }
        let pieces = cut_walk(dst, &fm.routes[ce], &cuts)?;
        let mut at = c.kept[c.graph.edge(crate::graph::EdgeId(ce)).u.0];
        for (&(e, forward), piece) in chain.iter().zip(pieces) {
            let ed = &src.edges()[e];
            let next = ed.other(at);
            if placement[next.0].is_none() {
                placement[next.0] = piece.last().cloned();
            }
            routes[e] = Some(if forward {
                piece
            } else {
                Walk(piece.0.into_iter().rev().collect())
            });
            at = next;
        }
    }
    let out = FoldingMap {
        scale: alpha.clone(),
        placement: placement
            .into_iter()
            .map(|p| p.expect("every vertex lies on a chain"))
            .collect(),
        routes: routes
            .into_iter()
            .map(|w| w.expect("every edge lies on a chain"))
            .collect(),
    };
    Ok(crate::covering::verify(src, dst, &out).accepted().then_some(out))
}
