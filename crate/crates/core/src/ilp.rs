//! The full mixed-integer folding model, written in LP or free-MPS text.
//!
//! Naming: `f_s<i>_x<j>_y<k>`, `e_…` and `l_…` for source edge `i` on the
//! derived arc `j -> k`; `m_u<i>_n<j>`, `r_s<i>_n<j>`; `a_d<e>_k<k>` for the
//! `k`-th vertex along target edge `e`; and `o`. A derived edge parallel to
//! an earlier one gets the suffix `_d<id>`. Lengths `l` are fractions of
//! their target edge.
//!
//! Per source edge the model has `6|E'|` arc variables and `12|E'| + 3|V'| + 1`
//! rows; globally `|V(S)||V'|` placements, `|E(D)|(c+2)` positions and
//! `|E'| + 2|E(D)| + |V(S)| + |E'| + 1` rows.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::One;

use crate::covering::FoldingMap;
use crate::graph::{EdgeId, GraphError, MetricGraph, TargetSubdivision};
use crate::lp::Sense;
use crate::lp_refine::{flow_capacity, RefineError, Skeleton};
use crate::rational::Rational;

#[derive(Debug, thiserror::Error)]
pub enum ParameterError {
    #[error("c = {c} exceeds the source vertex count {max}")]
    TooManyAux { c: usize, max: usize },
    #[error("scale cap {alpha} is outside (0, {max}]")]
    Alpha { alpha: Rational, max: Rational },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, thiserror::Error)]
pub enum ReadError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Bounded { lower: Rational, upper: Rational },
    NonNegative,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IlpVar {
    pub name: String,
    pub kind: VarKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Group {
    EdgeFlow,
    EdgeReach,
    EdgeLength,
    PositionOrder,
    EndpointPins,
    Demand,
    Degree,
    OneTarget,
    EdgesCovered,
    LengthsLeO,
    ScaleCap,
}

const PREFIXES: [(&str, Group); 15] = [
    ("flow_lo", Group::EdgeFlow),
    ("flow_hi", Group::EdgeFlow),
    ("reach_arc", Group::EdgeReach),
    ("reach_any", Group::EdgeReach),
    ("len_use", Group::EdgeLength),
    ("len_pos", Group::EdgeLength),
    ("len_tight", Group::EdgeLength),
    ("order", Group::PositionOrder),
    ("pin", Group::EndpointPins),
    ("demand", Group::Demand),
    ("degree", Group::Degree),
    ("target", Group::OneTarget),
    ("cover", Group::EdgesCovered),
    ("lengths", Group::LengthsLeO),
    ("scale_cap", Group::ScaleCap),
];

impl Group {
    pub fn label(&self) -> &'static str {
        match self {
            Group::EdgeFlow => "edge/flow rel.",
            Group::EdgeReach => "edge/reach rel.",
            Group::EdgeLength => "edge/length rel.",
            Group::PositionOrder => "position order",
            Group::EndpointPins => "endpoint pins",
            Group::Demand => ">= demand 1",
            Group::Degree => "degree constr.",
            Group::OneTarget => "1 target per src",
            Group::EdgesCovered => "edges covered",
            Group::LengthsLeO => "lengths <= o",
            Group::ScaleCap => "scale cap",
        }
    }

    fn of_name(name: &str) -> Option<Group> {
        PREFIXES.iter().find(|(p, _)| name.starts_with(p)).map(|(_, g)| *g)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IlpRow {
    pub name: String,
    pub group: Group,
    /// Sorted by variable index.
    pub coeffs: Vec<(usize, Rational)>,
    pub sense: Sense,
    pub rhs: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IlpModel {
    pub vars: Vec<IlpVar>,
    pub rows: Vec<IlpRow>,
    pub objective: usize,
    pub c: usize,
    pub alpha: Rational,
    pub flow_cap: Rational,
}

impl IlpModel {
    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    pub fn group_counts(&self) -> Vec<(Group, usize)> {
        let mut out: Vec<(Group, usize)> = Vec::new();
        for r in &self.rows {
            match out.iter_mut().find(|(g, _)| *g == r.group) {
                Some((_, n)) => *n += 1,
                None => out.push((r.group, 1)),
            }
        }
        out
    }

    /// Every bound, integrality and row violated by `x`.
    pub fn violations(&self, x: &[Rational]) -> Vec<String> {
        let mut out = Vec::new();
        for (v, val) in self.vars.iter().zip(x) {
            let ok = match &v.kind {
                VarKind::Binary => val.is_zero() || *val == Rational::one(),
                VarKind::Bounded { lower, upper } => lower <= val && val <= upper,
                VarKind::NonNegative => !val.is_negative(),
            };
            if !ok {
                out.push(format!("{} = {} violates its domain", v.name, val));
            }
        }
        for r in &self.rows {
            let lhs: Rational = r.coeffs.iter().map(|(j, c)| c * &x[*j]).sum();
            let ok = match r.sense {
                Sense::Le => lhs <= r.rhs,
                Sense::Ge => lhs >= r.rhs,
                Sense::Eq => lhs == r.rhs,
            };
            if !ok {
                out.push(format!(
                    "{} ({}): {} {} {} fails",
                    r.name,
                    r.group.label(),
                    lhs,
                    r.sense,
                    r.rhs
                ));
            }
        }
        out
    }
}

struct Builder {
    vars: Vec<IlpVar>,
    index: HashMap<String, usize>,
    rows: Vec<IlpRow>,
}

impl Builder {
    fn var(&mut self, name: String, kind: VarKind) -> usize {
        let j = self.vars.len();
        self.index.insert(name.clone(), j);
        self.vars.push(IlpVar { name, kind });
        j
    }

    fn row(&mut self, name: String, terms: Vec<(usize, Rational)>, sense: Sense, rhs: Rational) {
        let mut coeffs: Vec<(usize, Rational)> = Vec::with_capacity(terms.len());
        let mut terms = terms;
        terms.sort_by_key(|t| t.0);
        for (j, c) in terms {
            match coeffs.last_mut() {
                Some((k, acc)) if *k == j => *acc += c,
                _ => coeffs.push((j, c)),
            }
        }
        coeffs.retain(|(_, c)| !c.is_zero());
        let group = Group::of_name(&name).expect("row prefix");
        self.rows.push(IlpRow {
            name,
            group,
            coeffs,
            sense,
            rhs,
        });
    }
}

/// Naming shared by the builder and the certificate assignment.
struct Names<'a> {
    d: &'a MetricGraph,
    duplicate: Vec<bool>,
}

impl<'a> Names<'a> {
    fn new(d: &'a MetricGraph) -> Self {
        let mut seen = std::collections::HashSet::new();
        let duplicate = d
            .edges()
            .iter()
            .map(|e| !seen.insert((e.u.0.min(e.v.0), e.u.0.max(e.v.0))))
            .collect();
        Names { d, duplicate }
    }

    fn arc(&self, de: usize, forward: bool) -> String {
        let e = self.d.edge(EdgeId(de));
        let (x, y) = if forward { (e.u.0, e.v.0) } else { (e.v.0, e.u.0) };
        if self.duplicate[de] {
            format!("x{}_y{}_d{}", x, y, de)
        } else {
            format!("x{}_y{}", x, y)
        }
    }
}

fn skeleton_sub(dst: &MetricGraph, c: usize) -> TargetSubdivision {
    let offsets: Vec<Vec<Rational>> = (0..dst.edge_count())
        .map(|_| (1..=c).map(|i| Rational::new(i as i64, c as i64 + 1)).collect())
        .collect();
    TargetSubdivision::with_offsets(dst, &offsets)
}

/// Base edge and rank along it for each derived edge.
fn chain_rank(sub: &TargetSubdivision) -> Vec<(usize, usize)> {
    let mut out = vec![(0, 0); sub.derived().edge_count()];
    for e in sub.base().edge_ids() {
        for (k, de) in sub.chain(e).iter().enumerate() {
            out[de.0] = (e.0, k);
        }
    }
    out
}

pub fn build_model(
    src: &MetricGraph,
    dst: &MetricGraph,
    c: usize,
    alpha: &Rational,
) -> Result<IlpModel, ParameterError> {
    src.ensure_valid()?;
    dst.ensure_valid()?;
    if c > src.vertex_count() {
        return Err(ParameterError::TooManyAux {
            c,
            max: src.vertex_count(),
        });
    }
    let max = Rational::from(dst.edge_count() as i64);
    if !alpha.is_positive() || *alpha > max {
        return Err(ParameterError::Alpha {
            alpha: alpha.clone(),
            max,
        });
    }
    let sub = skeleton_sub(dst, c);
    let d = sub.derived();
    let names = Names::new(d);
    let rank = chain_rank(&sub);
    let cap = flow_capacity(dst, d);
    let one = Rational::one;
    let neg = || -Rational::one();
    let mut b = Builder {
        vars: Vec::new(),
        index: HashMap::new(),
        rows: Vec::new(),
    };
    let unit = || VarKind::Bounded {
        lower: Rational::zero(),
        upper: Rational::one(),
    };

    let mut fel = Vec::new();
    for s in 0..src.edge_count() {
        let mut per = Vec::new();
        for de in 0..d.edge_count() {
            for forward in [true, false] {
                let a = names.arc(de, forward);
                let f = b.var(format!("f_s{}_{}", s, a), VarKind::NonNegative);
                let e = b.var(format!("e_s{}_{}", s, a), VarKind::Binary);
                let l = b.var(format!("l_s{}_{}", s, a), unit());
                per.push((f, e, l));
            }
        }
        fel.push(per);
    }
    let m: Vec<Vec<usize>> = (0..src.vertex_count())
        .map(|u| {
            d.vertices()
                .map(|n| b.var(format!("m_u{}_n{}", u, n.0), VarKind::Binary))
                .collect()
        })
        .collect();
    let r: Vec<Vec<usize>> = (0..src.edge_count())
        .map(|s| {
            d.vertices()
                .map(|n| b.var(format!("r_s{}_n{}", s, n.0), VarKind::Binary))
                .collect()
        })
        .collect();
    let a: Vec<Vec<usize>> = (0..dst.edge_count())
        .map(|e| (0..c + 2).map(|k| b.var(format!("a_d{}_k{}", e, k), unit())).collect())
        .collect();
    let o = b.var("o".into(), VarKind::NonNegative);

    for (s, se) in src.edges().iter().enumerate() {
        let (u, v) = (se.u.0, se.v.0);
        for de in 0..d.edge_count() {
            let ed = d.edge(EdgeId(de));
            let (be, k) = rank[de];
            let (lo, hi) = (a[be][k], a[be][k + 1]);
            for forward in [true, false] {
                let (f, e, l) = fel[s][2 * de + usize::from(!forward)];
                let tail = if forward { ed.u.0 } else { ed.v.0 };
                let tag = format!("s{}_{}", s, names.arc(de, forward));
                b.row(
                    format!("flow_lo_{}", tag),
                    vec![(e, one()), (f, neg())],
                    Sense::Le,
                    Rational::zero(),
                );
                b.row(
                    format!("flow_hi_{}", tag),
                    vec![(f, one()), (e, -cap.clone())],
                    Sense::Le,
                    Rational::zero(),
                );
                b.row(
                    format!("reach_arc_{}", tag),
                    vec![(e, one()), (r[s][tail], neg())],
                    Sense::Le,
                    Rational::zero(),
                );
                b.row(
                    format!("len_use_{}", tag),
                    vec![(l, one()), (e, neg())],
                    Sense::Le,
                    Rational::zero(),
                );
                b.row(
                    format!("len_pos_{}", tag),
                    vec![(l, one()), (hi, neg()), (lo, one())],
                    Sense::Le,
                    Rational::zero(),
                );
                b.row(
                    format!("len_tight_{}", tag),
                    vec![(l, one()), (hi, neg()), (lo, one()), (e, neg())],
                    Sense::Ge,
                    neg(),
                );
            }
        }
        for n in d.vertices() {
            let mut any = vec![(r[s][n.0], one())];
            let mut demand = vec![(m[u][n.0], cap.clone()), (r[s][n.0], neg())];
            let mut degree = vec![(m[u][n.0], neg()), (m[v][n.0], one())];
            for &de in d.incident(n) {
                let out_forward = d.edge(de).u == n;
                let (f_out, e_out, _) = fel[s][2 * de.0 + usize::from(!out_forward)];
                let (f_in, e_in, _) = fel[s][2 * de.0 + usize::from(out_forward)];
                any.push((e_out, neg()));
                any.push((e_in, neg()));
                demand.push((f_in, one()));
                demand.push((f_out, neg()));
                degree.push((e_out, one()));
                degree.push((e_in, neg()));
            }
            b.row(format!("reach_any_s{}_n{}", s, n.0), any, Sense::Le, Rational::zero());
            b.row(format!("demand_s{}_n{}", s, n.0), demand, Sense::Ge, Rational::zero());
            b.row(format!("degree_s{}_n{}", s, n.0), degree, Sense::Eq, Rational::zero());
        }
        let mut lengths: Vec<(usize, Rational)> = Vec::new();
        for (de, &(be, _)) in rank.iter().enumerate() {
            let len = &dst.edge(EdgeId(be)).length;
            for dir in 0..2 {
                lengths.push((fel[s][2 * de + dir].2, len.clone()));
            }
        }
        lengths.push((o, -se.length.clone()));
        b.row(format!("lengths_s{}", s), lengths, Sense::Le, Rational::zero());
    }
    for &(be, k) in &rank {
        b.row(
            format!("order_d{}_k{}", be, k),
            vec![(a[be][k + 1], one()), (a[be][k], neg())],
            Sense::Ge,
            Rational::zero(),
        );
    }
    for (e, pos) in a.iter().enumerate() {
        b.row(
            format!("pin_d{}_lo", e),
            vec![(pos[0], one())],
            Sense::Eq,
            Rational::zero(),
        );
        b.row(format!("pin_d{}_hi", e), vec![(pos[c + 1], one())], Sense::Eq, one());
    }
    for (u, mu) in m.iter().enumerate() {
        b.row(
            format!("target_u{}", u),
            mu.iter().map(|&j| (j, one())).collect(),
            Sense::Eq,
            one(),
        );
    }
    for de in 0..d.edge_count() {
        let terms = (0..src.edge_count())
            .flat_map(|s| [(fel[s][2 * de].1, one()), (fel[s][2 * de + 1].1, one())])
            .collect();
        b.row(format!("cover_{}", names.arc(de, true)), terms, Sense::Ge, one());
    }
    b.row("scale_cap".into(), vec![(o, one())], Sense::Le, alpha.clone());
    Ok(IlpModel {
        vars: b.vars,
        rows: b.rows,
        objective: o,
        c,
        alpha: alpha.clone(),
        flow_cap: cap,
    })
}

/// Variable values read off a certificate, with the certificate's scale as `o`.
pub fn induced_assignment(
    model: &IlpModel,
    src: &MetricGraph,
    dst: &MetricGraph,
    fm: &FoldingMap,
) -> Result<Vec<Rational>, RefineError> {
    let sk = Skeleton::padded(src, dst, fm, model.c)?;
    let d = sk.sub.derived();
    let names = Names::new(d);
    let rank = chain_rank(&sk.sub);
    let mut x = vec![Rational::zero(); model.vars.len()];
    let mut set = |name: String, val: Rational| {
        let j = model.var_index(&name).unwrap_or_else(|| panic!("model lacks {}", name));
        x[j] = val;
    };
    // Offsets of every chain vertex.
    let mut pos = Vec::new();
    for e in dst.edge_ids() {
        let mut list = vec![Rational::zero()];
        for de in sk.sub.chain(e) {
            let v = d.edge(*de).v;
            list.push(match sk.sub.position(v) {
                crate::graph::BasePosition::Aux { offset, .. } => offset.clone(),
                crate::graph::BasePosition::Vertex(_) => Rational::one(),
            });
        }
        for (k, p) in list.iter().enumerate() {
            set(format!("a_d{}_k{}", e.0, k), p.clone());
        }
        pos.push(list);
    }
    for s in 0..sk.routes.len() {
        let used = sk.used(s);
        let flow = sk.walk_flow(s);
        for de in 0..d.edge_count() {
            let (be, k) = rank[de];
            for forward in [true, false] {
                let i = 2 * de + usize::from(!forward);
                if used[i] {
                    let a = names.arc(de, forward);
                    set(format!("e_s{}_{}", s, a), Rational::one());
                    set(format!("f_s{}_{}", s, a), flow[i].clone());
                    set(format!("l_s{}_{}", s, a), &pos[be][k + 1] - &pos[be][k]);
                }
            }
        }
        for (n, reached) in sk.reach(s).into_iter().enumerate() {
            if reached {
                set(format!("r_s{}_n{}", s, n), Rational::one());
            }
        }
    }
    for (u, &n) in sk.placement.iter().enumerate() {
        set(format!("m_u{}_n{}", u, n), Rational::one());
    }
    set("o".into(), fm.scale.clone());
    Ok(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Lp,
    Mps,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "lp" => Ok(Format::Lp),
            "mps" => Ok(Format::Mps),
            _ => Err(format!("unknown format `{}` (lp or mps)", s)),
        }
    }
}

pub fn write_model(m: &IlpModel, format: Format) -> String {
    match format {
        Format::Lp => write_lp(m),
        Format::Mps => write_mps(m),
    }
}

/// Row multiplier that makes every number a finite decimal.
fn row_scale(r: &IlpRow) -> BigInt {
    let finite = r
        .coeffs
        .iter()
        .map(|(_, c)| c)
        .chain([&r.rhs])
        .all(|c| c.to_finite_decimal().is_some());
    if finite {
        return BigInt::one();
    }
    r.coeffs
        .iter()
        .map(|(_, c)| c.denom().clone())
        .fold(r.rhs.denom().clone(), |acc, d| acc.lcm(&d))
}

fn num(x: &Rational) -> String {
    x.to_finite_decimal().expect("scaled to a finite decimal")
}

fn sense_op(s: Sense) -> &'static str {
    match s {
        Sense::Le => "<=",
        Sense::Ge => ">=",
        Sense::Eq => "=",
    }
}

fn header(m: &IlpModel, comment: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} folding model: c={} alpha={} flow_cap={}",
        comment, m.c, m.alpha, m.flow_cap
    );
    out
}

pub fn write_lp(m: &IlpModel) -> String {
    let mut out = header(m, "\\");
    let _ = writeln!(out, "Minimize\n obj: {}\nSubject To", m.vars[m.objective].name);
    for r in &m.rows {
        let k = row_scale(r);
        let kr = Rational::from(k.clone());
        if !k.is_one() {
            let _ = writeln!(out, "\\ scaled {} {}", r.name, k);
        }
        let _ = write!(out, " {}:", r.name);
        for (i, (j, c)) in r.coeffs.iter().enumerate() {
            if i > 0 && i % 8 == 0 {
                out.push_str("\n  ");
            }
            let c = c * &kr;
            let sign = if c.is_negative() { "-" } else { "+" };
            let _ = write!(out, " {} {} {}", sign, num(&c.abs()), m.vars[*j].name);
        }
        let _ = writeln!(out, " {} {}", sense_op(r.sense), num(&(&r.rhs * &kr)));
    }
    out.push_str("Bounds\n");
    for v in &m.vars {
        let _ = match &v.kind {
            VarKind::Binary => writeln!(out, " 0 <= {} <= 1", v.name),
            VarKind::Bounded { lower, upper } => writeln!(out, " {} <= {} <= {}", num(lower), v.name, num(upper)),
            VarKind::NonNegative => writeln!(out, " {} >= 0", v.name),
        };
    }
    out.push_str("Binaries\n");
    for v in m.vars.iter().filter(|v| v.kind == VarKind::Binary) {
        let _ = writeln!(out, " {}", v.name);
    }
    out.push_str("End\n");
    out
}

pub fn write_mps(m: &IlpModel) -> String {
    let mut out = header(m, "*");
    let scales: Vec<BigInt> = m.rows.iter().map(row_scale).collect();
    out.push_str("NAME folding\nROWS\n N obj\n");
    for (r, k) in m.rows.iter().zip(&scales) {
        if !k.is_one() {
            let _ = writeln!(out, "* scaled {} {}", r.name, k);
        }
        let t = match r.sense {
            Sense::Le => "L",
            Sense::Ge => "G",
            Sense::Eq => "E",
        };
        let _ = writeln!(out, " {} {}", t, r.name);
    }
    let mut cols: Vec<Vec<(usize, Rational)>> = vec![Vec::new(); m.vars.len()];
    for (i, r) in m.rows.iter().enumerate() {
        let kr = Rational::from(scales[i].clone());
        for (j, c) in &r.coeffs {
            cols[*j].push((i, c * &kr));
        }
    }
    out.push_str("COLUMNS\n");
    let mut in_int = false;
    for (j, v) in m.vars.iter().enumerate() {
        let bin = v.kind == VarKind::Binary;
        if bin != in_int {
            let _ = writeln!(out, "    MARKER 'MARKER' '{}'", if bin { "INTORG" } else { "INTEND" });
            in_int = bin;
        }
        if j == m.objective {
            let _ = writeln!(out, "    {} obj 1", v.name);
        }
        for (i, c) in &cols[j] {
            let _ = writeln!(out, "    {} {} {}", v.name, m.rows[*i].name, num(c));
        }
    }
    if in_int {
        out.push_str("    MARKER 'MARKER' 'INTEND'\n");
    }
    out.push_str("RHS\n");
    for (r, k) in m.rows.iter().zip(&scales) {
        let rhs = &r.rhs * &Rational::from(k.clone());
        if !rhs.is_zero() {
            let _ = writeln!(out, "    RHS {} {}", r.name, num(&rhs));
        }
    }
    out.push_str("BOUNDS\n");
    for v in &m.vars {
        match &v.kind {
            VarKind::Binary => {
                let _ = writeln!(out, " BV BND {}", v.name);
            }
            VarKind::Bounded { lower, upper } => {
                let _ = writeln!(out, " LO BND {} {}", v.name, num(lower));
                let _ = writeln!(out, " UP BND {} {}", v.name, num(upper));
            }
            VarKind::NonNegative => {
                let _ = writeln!(out, " PL BND {}", v.name);
            }
        }
    }
    out.push_str("ENDATA\n");
    out
}

fn parse_header(line: &str) -> Option<(usize, Rational, Rational)> {
    let rest = line.split_once("folding model:")?.1;
    let mut c = None;
    let mut alpha = None;
    let mut cap = None;
    for kv in rest.split_whitespace() {
        let (k, v) = kv.split_once('=')?;
        match k {
            "c" => c = v.parse().ok(),
            "alpha" => alpha = v.parse().ok(),
            "flow_cap" => cap = v.parse().ok(),
            _ => {}
        }
    }
    Some((c?, alpha?, cap?))
}

struct Reading {
    vars: Vec<IlpVar>,
    index: HashMap<String, usize>,
}

impl Reading {
    fn var(&mut self, name: &str) -> usize {
        if let Some(&j) = self.index.get(name) {
            return j;
        }
        self.index.insert(name.to_string(), self.vars.len());
        self.vars.push(IlpVar {
            name: name.to_string(),
            kind: VarKind::NonNegative,
        });
        self.vars.len() - 1
    }
}

fn finish(
    rd: Reading,
    rows: Vec<(String, Vec<(String, Rational)>, Sense, Rational)>,
    objective: &str,
    head: (usize, Rational, Rational),
) -> Result<IlpModel, ReadError> {
    let err = |message: String| ReadError::Syntax { line: 0, message };
    let mut out_rows = Vec::new();
    for (name, terms, sense, rhs) in rows {
        let group = Group::of_name(&name).ok_or_else(|| err(format!("unknown row `{}`", name)))?;
        let mut coeffs = Vec::new();
        for (v, c) in terms {
            let j = *rd
                .index
                .get(&v)
                .ok_or_else(|| err(format!("undeclared variable `{}`", v)))?;
            coeffs.push((j, c));
        }
        coeffs.sort_by_key(|t| t.0);
        out_rows.push(IlpRow {
            name,
            group,
            coeffs,
            sense,
            rhs,
        });
    }
    let objective = *rd
        .index
        .get(objective)
        .ok_or_else(|| err("objective variable undeclared".into()))?;
    Ok(IlpModel {
        vars: rd.vars,
        rows: out_rows,
        objective,
        c: head.0,
        alpha: head.1,
        flow_cap: head.2,
    })
}

fn parse_num(s: &str, line: usize) -> Result<Rational, ReadError> {
    s.parse().map_err(|_| ReadError::Syntax {
        line,
        message: format!("bad number `{}`", s),
    })
}

/// Reads text produced by `write_lp`.
pub fn read_lp(text: &str) -> Result<IlpModel, ReadError> {
    let mut head = None;
    let mut scales: HashMap<String, Rational> = HashMap::new();
    let mut section = "";
    let mut objective = String::new();
    let mut rd = Reading {
        vars: Vec::new(),
        index: HashMap::new(),
    };
    let mut rows = Vec::new();
    let mut pending: Option<(usize, String)> = None;
    let flush = |pending: &mut Option<(usize, String)>,
                 rows: &mut Vec<_>,
                 scales: &HashMap<String, Rational>|
     -> Result<(), ReadError> {
        if let Some((line, text)) = pending.take() {
            let err = |message: &str| ReadError::Syntax {
                line,
                message: message.into(),
            };
            let (name, body) = text.split_once(':').ok_or_else(|| err("missing row name"))?;
            let toks: Vec<&str> = body.split_whitespace().collect();
            if toks.len() < 2 || (toks.len() - 2) % 3 != 0 {
                return Err(err("malformed row"));
            }
            let k = scales.get(name.trim()).cloned().unwrap_or_else(Rational::one);
            let mut terms = Vec::new();
            for t in toks[..toks.len() - 2].chunks(3) {
                let mut c = parse_num(t[1], line)? / &k;
                match t[0] {
                    "+" => {}
                    "-" => c = -c,
                    _ => return Err(err("expected a sign")),
                }
                terms.push((t[2].to_string(), c));
            }
            let sense = match toks[toks.len() - 2] {
                "<=" => Sense::Le,
                ">=" => Sense::Ge,
                "=" => Sense::Eq,
                _ => return Err(err("expected a relation")),
            };
            let rhs = parse_num(toks[toks.len() - 1], line)? / &k;
            rows.push((name.trim().to_string(), terms, sense, rhs));
        }
        Ok(())
    };
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(c) = line.strip_prefix('\\') {
            let c = c.trim();
            if let Some(rest) = c.strip_prefix("scaled ") {
                let (name, k) = rest.split_once(' ').unwrap_or((rest, "1"));
                scales.insert(name.to_string(), parse_num(k, i + 1)?);
            } else if head.is_none() {
                head = parse_header(c);
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        match line {
            "Minimize" | "Subject To" | "Bounds" | "Binaries" | "End" => {
                flush(&mut pending, &mut rows, &scales)?;
                section = match line {
                    "Minimize" => "min",
                    "Subject To" => "st",
                    "Bounds" => "bounds",
                    "Binaries" => "bin",
                    _ => "end",
                };
                continue;
            }
            _ => {}
        }
        match section {
            "min" => objective = line.split_once(':').map_or(line, |(_, v)| v).trim().to_string(),
            "st" => {
                if line.contains(':') {
                    flush(&mut pending, &mut rows, &scales)?;
                    pending = Some((i + 1, line.to_string()));
                } else if let Some((_, t)) = pending.as_mut() {
                    t.push(' ');
                    t.push_str(line);
                }
            }
            "bounds" => {
                let toks: Vec<&str> = line.split_whitespace().collect();
                match toks.as_slice() {
                    [lo, "<=", v, "<=", hi] => {
                        let j = rd.var(v);
                        rd.vars[j].kind = VarKind::Bounded {
                            lower: parse_num(lo, i + 1)?,
                            upper: parse_num(hi, i + 1)?,
                        };
                    }
                    [v, ">=", "0"] => {
                        rd.var(v);
                    }
                    _ => {
                        return Err(ReadError::Syntax {
                            line: i + 1,
                            message: "unreadable bound".into(),
                        })
                    }
                }
            }
            "bin" => {
                let j = rd.var(line);
                rd.vars[j].kind = VarKind::Binary;
            }
            _ => {
                return Err(ReadError::Syntax {
                    line: i + 1,
                    message: "text outside a section".into(),
                })
            }
        }
    }
    flush(&mut pending, &mut rows, &scales)?;
    let head = head.ok_or(ReadError::Syntax {
        line: 1,
        message: "missing header".into(),
    })?;
    finish(rd, rows, &objective, head)
}

/// Reads text produced by `write_mps`.
pub fn read_mps(text: &str) -> Result<IlpModel, ReadError> {
    let mut head = None;
    let mut scales: HashMap<String, Rational> = HashMap::new();
    let mut section = "";
    let mut rd = Reading {
        vars: Vec::new(),
        index: HashMap::new(),
    };
    let mut row_order: Vec<(String, Sense)> = Vec::new();
    let mut terms: HashMap<String, Vec<(String, Rational)>> = HashMap::new();
    let mut rhs: HashMap<String, Rational> = HashMap::new();
    let mut objective = String::new();
    for (i, raw) in text.lines().enumerate() {
        let err = |message: &str| ReadError::Syntax {
            line: i + 1,
            message: message.into(),
        };
        if let Some(c) = raw.strip_prefix('*') {
            let c = c.trim();
            if let Some(rest) = c.strip_prefix("scaled ") {
                let (name, k) = rest.split_once(' ').unwrap_or((rest, "1"));
                scales.insert(name.to_string(), parse_num(k, i + 1)?);
            } else if head.is_none() {
                head = parse_header(c);
            }
            continue;
        }
        let toks: Vec<&str> = raw.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if !raw.starts_with(' ') {
            section = toks[0];
            continue;
        }
        match (section, toks.as_slice()) {
            ("ROWS", ["N", _]) => {}
            ("ROWS", [t, name]) => {
                let s = match *t {
                    "L" => Sense::Le,
                    "G" => Sense::Ge,
                    "E" => Sense::Eq,
                    _ => return Err(err("bad row type")),
                };
                row_order.push((name.to_string(), s));
            }
            ("COLUMNS", [_, "'MARKER'", _]) => {}
            ("COLUMNS", [v, "obj", _]) => {
                rd.var(v);
                objective = v.to_string();
            }
            ("COLUMNS", [v, row, c]) => {
                rd.var(v);
                let k = scales.get(*row).cloned().unwrap_or_else(Rational::one);
                terms
                    .entry(row.to_string())
                    .or_default()
                    .push((v.to_string(), parse_num(c, i + 1)? / &k));
            }
            ("RHS", [_, row, c]) => {
                let k = scales.get(*row).cloned().unwrap_or_else(Rational::one);
                rhs.insert(row.to_string(), parse_num(c, i + 1)? / &k);
            }
            ("BOUNDS", ["BV", _, v]) => {
                let j = rd.var(v);
                rd.vars[j].kind = VarKind::Binary;
            }
            ("BOUNDS", ["PL", _, v]) => {
                rd.var(v);
            }
            ("BOUNDS", ["LO", _, v, x]) => {
                let j = rd.var(v);
                rd.vars[j].kind = VarKind::Bounded {
                    lower: parse_num(x, i + 1)?,
                    upper: Rational::zero(),
                };
            }
            ("BOUNDS", ["UP", _, v, x]) => {
                let j = rd.var(v);
                let upper = parse_num(x, i + 1)?;
                match &mut rd.vars[j].kind {
                    VarKind::Bounded { upper: u, .. } => *u = upper,
                    _ => return Err(err("upper bound without lower")),
                }
            }
            _ => return Err(err("unreadable line")),
        }
    }
    let rows = row_order
        .into_iter()
        .map(|(name, sense)| {
            let t = terms.remove(&name).unwrap_or_default();
            let r = rhs.remove(&name).unwrap_or_else(Rational::zero);
            (name, t, sense, r)
        })
        .collect();
    let head = head.ok_or(ReadError::Syntax {
        line: 1,
        message: "missing header".into(),
    })?;
    finish(rd, rows, &objective, head)
}
