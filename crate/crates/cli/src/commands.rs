use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use isofold::bounds::{improved_lower, naive_lower, platonic_lower, LowerBoundResult};
use isofold::catalog::{bound_table, lookup, published_bounds, LowerBoundSource};
use isofold::covering::{verify, FoldingMap};
use isofold::hardness::{generate, generate_dp_variant, SetCoverInstance};
use isofold::ilp::{build_model, write_model, Format};
use isofold::improve::{improve, ImproveConfig, ImproveError};
use isofold::lp_refine::{refine, RefineError};
use isofold::postman::{optimal_scale_cycle_source, optimal_scale_path_source, postman_closed, postman_open};
use isofold::search::{decide, minimize, Decision, MinimizeOutcome, SearchConfig};
use isofold::{platonic, MetricGraph, PlatonicName, Rational};
use serde_json::{json, Value};

use crate::args::Command;

pub const SCHEMA: u32 = 1;
pub const NEGATIVE: i32 = 1;
pub const TIMEOUT: i32 = 2;
pub const USAGE: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("{0}")]
    Input(String),
    #[error("catalog needs a solid name or --table")]
    NothingToShow,
}

pub struct Output {
    pub code: i32,
    pub human: String,
    pub json: Value,
}

impl Output {
    fn ok(human: String, json: Value) -> Self {
        Output { code: 0, human, json }
    }
}

fn input<E: std::fmt::Display>(what: &str) -> impl FnOnce(E) -> CliError + '_ {
    move |e| CliError::Input(format!("{}: {}", what, e))
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn load_graph(arg: &str) -> Result<MetricGraph, CliError> {
    if let Some(g) = lookup(arg) {
        return Ok(g);
    }
    let g = MetricGraph::parse(&read(Path::new(arg))?).map_err(input(arg))?;
    g.ensure_valid().map_err(input(arg))?;
    Ok(g)
}

fn load_cert(src: &MetricGraph, dst: &MetricGraph, path: &Path) -> Result<FoldingMap, CliError> {
    FoldingMap::parse(src, dst, &read(path)?).map_err(input(&path.display().to_string()))
}

/// Writes the certificate to `out` or appends it to the human output.
fn emit_cert(human: &mut String, text: &str, out: &Option<PathBuf>) -> Result<Value, CliError> {
    match out {
        Some(p) => {
            write(p, text)?;
            let _ = writeln!(human, "wrote {}", p.display());
            Ok(json!({ "out": p.display().to_string() }))
        }
        None => {
            human.push_str(text);
            Ok(json!({ "certificate": text }))
        }
    }
}

fn merge(mut a: Value, b: Value) -> Value {
    if let (Some(x), Value::Object(y)) = (a.as_object_mut(), b) {
        x.extend(y);
    }
    a
}

pub fn run(cmd: Command) -> Result<Output, CliError> {
    match cmd {
        Command::Catalog { name, table } => catalog(name, table),
        Command::Bounds { src, dst } => bounds(&src, &dst),
        Command::Postman {
            dst,
            open,
            source_length,
        } => postman(&dst, open, source_length),
        Command::Solve {
            src,
            dst,
            alpha,
            q,
            scale_max,
            time,
            seed,
            workers,
            out,
        } => {
            let cfg = SearchConfig {
                q,
                scale_max,
                time_budget: Duration::from_secs(time),
                seed,
                workers,
                ..Default::default()
            };
            solve(&src, &dst, alpha, &cfg, &out)
        }
        Command::Verify { src, dst, cert } => verify_cmd(&src, &dst, &cert),
        Command::Refine { src, dst, cert, c, out } => refine_cmd(&src, &dst, &cert, c, &out),
        Command::Improve {
            src,
            dst,
            rounds,
            rho,
            eps,
            seed,
            q_start,
            q_max,
            time,
            workers,
            out,
        } => {
            let cfg = ImproveConfig {
                rounds,
                keep_fraction: rho,
                worsen_tolerance: eps,
                seed,
                round_budget: Duration::from_secs(time),
                q_start,
                q_max,
                workers,
            };
            improve_cmd(&src, &dst, &cfg, &out)
        }
        Command::ExportIlp {
            src,
            dst,
            c,
            alpha,
            format,
            out,
        } => export(&src, &dst, c, alpha, format, &out),
        Command::Gadget {
            instance,
            a,
            dp,
            out_prefix,
        } => gadget(&instance, a, dp, &out_prefix),
    }
}

fn catalog(name: Option<String>, table: bool) -> Result<Output, CliError> {
    if table {
        let mut rows = Vec::new();
        for s in PlatonicName::ALL {
            for d in PlatonicName::ALL {
                let b = published_bounds(s, d);
                rows.push(json!({
                    "source": s.as_str(),
                    "target": d.as_str(),
                    "lower": b.lower.to_string(),
                    "lower_strict": b.lower_strict,
                    "upper": b.upper.to_string(),
                    "topological": b.source == LowerBoundSource::Topological,
                }));
            }
        }
        return Ok(Output::ok(
            bound_table(),
            json!({ "command": "catalog", "table": rows }),
        ));
    }
    let name = name.ok_or(CliError::NothingToShow)?;
    let solid: PlatonicName = name.parse().map_err(input("catalog"))?;
    let g = platonic(solid);
    let text = g.to_text();
    let json = json!({
        "command": "catalog",
        "name": solid.as_str(),
        "vertices": g.vertex_count(),
        "edges": g.edge_count(),
        "perimeter": g.total_length().to_string(),
        "graph": text,
    });
    Ok(Output::ok(text, json))
}

fn bounds(src_arg: &str, dst_arg: &str) -> Result<Output, CliError> {
    let (src, dst) = (load_graph(src_arg)?, load_graph(dst_arg)?);
    let lb: LowerBoundResult = match (src_arg.parse::<PlatonicName>(), dst_arg.parse::<PlatonicName>()) {
        (Ok(s), Ok(d)) => platonic_lower(s, d),
        _ => improved_lower(&src, &dst),
    };
    let naive = naive_lower(&src, &dst);
    let topological = lb.source == LowerBoundSource::Topological;
    let mut human = format!("{}\n", lb);
    if topological {
        let _ = writeln!(
            human,
            "topological bound; counting gives {}",
            improved_lower(&src, &dst).breakdown()
        );
    } else {
        let _ = writeln!(human, "{}", lb.breakdown());
    }
    let _ = writeln!(human, "naive {}", naive);
    let c = &lb.components;
    let json = json!({
        "command": "bounds",
        "value": lb.value.to_string(),
        "strict": lb.strict,
        "topological": topological,
        "non_uniform": lb.non_uniform,
        "naive": naive.to_string(),
        "breakdown": lb.breakdown(),
        "perimeter_source": c.perimeter_s.to_string(),
        "perimeter_target": c.perimeter_t.to_string(),
        "odd_target": c.o_t,
        "source_vertices": c.n_s,
    });
    Ok(Output::ok(human, json))
}

fn postman(dst_arg: &str, open: bool, source_length: Option<Rational>) -> Result<Output, CliError> {
    let dst = load_graph(dst_arg)?;
    let length = if open { postman_open(&dst) } else { postman_closed(&dst) }.map_err(input(dst_arg))?;
    let mut human = format!("length {}\n", length);
    let mut json = json!({ "command": "postman", "open": open, "length": length.to_string() });
    if let Some(l) = source_length {
        let scale = if open {
            optimal_scale_path_source(&l, &dst)
        } else {
            optimal_scale_cycle_source(&l, &dst)
        }
        .map_err(input(dst_arg))?;
        let _ = writeln!(human, "scale {}", scale);
        json["scale"] = json!(scale.to_string());
    }
    Ok(Output::ok(human, json))
}

fn solve(
    src_arg: &str,
    dst_arg: &str,
    alpha: Option<Rational>,
    cfg: &SearchConfig,
    out: &Option<PathBuf>,
) -> Result<Output, CliError> {
    let (src, dst) = (load_graph(src_arg)?, load_graph(dst_arg)?);
    let (code, mut human, json, map) = match &alpha {
        Some(a) => match decide(&src, &dst, a, cfg).map_err(input("solve"))? {
            Decision::Feasible(map) => (
                0,
                format!("feasible {}\n", a),
                json!({ "verdict": "feasible", "scale": a.to_string() }),
                Some(map),
            ),
            Decision::Infeasible => (
                NEGATIVE,
                format!("infeasible {}\n", a),
                json!({ "verdict": "infeasible", "scale": a.to_string() }),
                None,
            ),
            Decision::Timeout => (
                TIMEOUT,
                format!("timeout {}\n", a),
                json!({ "verdict": "timeout", "scale": a.to_string() }),
                None,
            ),
        },
        None => match minimize(&src, &dst, cfg).map_err(input("solve"))? {
            MinimizeOutcome::Optimal { scale, map } => (
                0,
                format!("optimal {}\n", scale),
                json!({ "verdict": "optimal", "scale": scale.to_string() }),
                Some(map),
            ),
            MinimizeOutcome::NoneUpTo(cap) => (
                NEGATIVE,
                format!("none up to {}\n", cap),
                json!({ "verdict": "none", "scale_max": cap.to_string() }),
                None,
            ),
            MinimizeOutcome::Timeout { refuted_below } => (
                TIMEOUT,
                format!("timeout, refuted below {}\n", refuted_below),
                json!({ "verdict": "timeout", "refuted_below": refuted_below.to_string() }),
                None,
            ),
        },
    };
    let mut json = merge(json!({ "command": "solve", "q": cfg.q }), json);
    if let Some(map) = map {
        json = merge(json, emit_cert(&mut human, &map.to_text(&src, &dst), out)?);
    }
    Ok(Output { code, human, json })
}

fn verify_cmd(src_arg: &str, dst_arg: &str, cert: &Path) -> Result<Output, CliError> {
    let (src, dst) = (load_graph(src_arg)?, load_graph(dst_arg)?);
    let fm = load_cert(&src, &dst, cert)?;
    let rep = verify(&src, &dst, &fm);
    let failures = rep.describe(&src, &dst);
    let mut human = String::new();
    if rep.accepted() {
        let _ = writeln!(human, "accepted {}", fm.scale);
        let _ = writeln!(human, "doubled {}", rep.doubled_length);
    } else {
        let _ = writeln!(human, "rejected {}", fm.scale);
        for f in &failures {
            let _ = writeln!(human, "  {}", f);
        }
    }
    let json = json!({
        "command": "verify",
        "accepted": rep.accepted(),
        "scale": fm.scale.to_string(),
        "doubled_length": rep.accepted().then(|| rep.doubled_length.to_string()),
        "failures": failures,
    });
    Ok(Output {
        code: if rep.accepted() { 0 } else { NEGATIVE },
        human,
        json,
    })
}

fn refine_cmd(
    src_arg: &str,
    dst_arg: &str,
    cert: &Path,
    c: Option<usize>,
    out: &Option<PathBuf>,
) -> Result<Output, CliError> {
    let (src, dst) = (load_graph(src_arg)?, load_graph(dst_arg)?);
    let fm = load_cert(&src, &dst, cert)?;
    let c = c.unwrap_or(src.vertex_count());
    match refine(&src, &dst, &fm, c) {
        Ok((map, scale)) => {
            let mut human = format!("input {}\nrefined {}\n", fm.scale, scale);
            let json =
                json!({ "command": "refine", "input": fm.scale.to_string(), "refined": scale.to_string(), "c": c });
            let extra = emit_cert(&mut human, &map.to_text(&src, &dst), out)?;
            Ok(Output::ok(human, merge(json, extra)))
        }
        Err(e @ (RefineError::Unverified(_) | RefineError::TooManyAux { .. })) => Ok(Output {
            code: NEGATIVE,
            human: format!("not refined: {}\n", e),
            json: json!({ "command": "refine", "input": fm.scale.to_string(), "refined": null, "reason": e.to_string() }),
        }),
        Err(e) => Err(CliError::Input(e.to_string())),
    }
}

fn improve_cmd(src_arg: &str, dst_arg: &str, cfg: &ImproveConfig, out: &Option<PathBuf>) -> Result<Output, CliError> {
    let (src, dst) = (load_graph(src_arg)?, load_graph(dst_arg)?);
    let res = match improve(&src, &dst, cfg) {
        Ok(r) => r,
        Err(e @ ImproveError::NoInitial { .. }) => {
            return Ok(Output {
                code: NEGATIVE,
                human: format!("{}\n", e),
                json: json!({ "command": "improve", "best": null, "reason": e.to_string() }),
            })
        }
        Err(e) => return Err(CliError::Input(e.to_string())),
    };
    let mut human = format!("initial {}\n", res.initial);
    let mut rounds = Vec::new();
    for t in &res.trace {
        let cand = t.candidate.as_ref().map_or("-".to_string(), |c| c.to_string());
        let _ = writeln!(
            human,
            "round {} q {} target {} pinned {} {} candidate {}{} best {}",
            t.round,
            t.q,
            t.target,
            t.pinned,
            t.verdict,
            cand,
            if t.accepted { " accepted" } else { "" },
            t.best
        );
        rounds.push(json!({
            "round": t.round,
            "q": t.q,
            "target": t.target.to_string(),
            "pinned": t.pinned,
            "verdict": t.verdict,
            "candidate": t.candidate.as_ref().map(|c| c.to_string()),
            "accepted": t.accepted,
            "best": t.best.to_string(),
        }));
    }
    let _ = writeln!(human, "best {}", res.scale);
    let json = json!({ "command": "improve", "initial": res.initial.to_string(), "best": res.scale.to_string(), "rounds": rounds });
    let extra = emit_cert(&mut human, &res.best.to_text(&src, &dst), out)?;
    Ok(Output::ok(human, merge(json, extra)))
}

fn export(
    src_arg: &str,
    dst_arg: &str,
    c: Option<usize>,
    alpha: Option<Rational>,
    format: Format,
    out: &Option<PathBuf>,
) -> Result<Output, CliError> {
    let (src, dst) = (load_graph(src_arg)?, load_graph(dst_arg)?);
    let c = c.unwrap_or(src.vertex_count());
    let alpha = alpha.unwrap_or_else(|| Rational::from(dst.edge_count() as i64));
    let model = build_model(&src, &dst, c, &alpha).map_err(input("export-ilp"))?;
    let text = write_model(&model, format);
    let groups: serde_json::Map<String, Value> = model
        .group_counts()
        .into_iter()
        .map(|(g, n)| (g.label().to_string(), json!(n)))
        .collect();
    let fmt = match format {
        Format::Lp => "lp",
        Format::Mps => "mps",
    };
    let mut json = json!({
        "command": "export-ilp",
        "format": fmt,
        "c": c,
        "alpha": alpha.to_string(),
        "variables": model.vars.len(),
        "rows": model.rows.len(),
        "groups": groups,
    });
    let human = match out {
        Some(p) => {
            write(p, &text)?;
            json["out"] = json!(p.display().to_string());
            format!(
                "wrote {} ({} variables, {} rows)\n",
                p.display(),
                model.vars.len(),
                model.rows.len()
            )
        }
        None => {
            json["model"] = json!(text);
            text
        }
    };
    Ok(Output::ok(human, json))
}

fn gadget(path: &Path, a: Option<usize>, dp: bool, prefix: &Option<PathBuf>) -> Result<Output, CliError> {
    let inst = SetCoverInstance::parse(&read(path)?).map_err(input(&path.display().to_string()))?;
    let a = a.unwrap_or(4 * inst.sets.len() + 1);
    let g = if dp {
        generate_dp_variant(&inst, &inst, a).map(|(p, _)| p)
    } else {
        generate(&inst, a)
    }
    .map_err(input("gadget"))?;
    let (s, t) = (g.source.to_text(), g.target.to_text());
    let mut human = String::new();
    for n in &g.notes {
        let _ = writeln!(human, "# {}", n);
    }
    let mut json = json!({
        "command": "gadget",
        "anchors": g.anchors,
        "dp": dp,
        "source_vertices": g.source.vertex_count(),
        "source_edges": g.source.edge_count(),
        "target_vertices": g.target.vertex_count(),
        "target_edges": g.target.edge_count(),
        "notes": g.notes,
    });
    let _ = writeln!(
        human,
        "# source {} vertices {} edges, target {} vertices {} edges",
        g.source.vertex_count(),
        g.source.edge_count(),
        g.target.vertex_count(),
        g.target.edge_count()
    );
    match prefix {
        Some(p) => {
            let (sp, tp) = (
                PathBuf::from(format!("{}.source.graph", p.display())),
                PathBuf::from(format!("{}.target.graph", p.display())),
            );
            write(&sp, &s)?;
            write(&tp, &t)?;
            let _ = writeln!(human, "wrote {}\nwrote {}", sp.display(), tp.display());
            json["source_out"] = json!(sp.display().to_string());
            json["target_out"] = json!(tp.display().to_string());
        }
        None => {
            let _ = write!(human, "# source\n{}# target\n{}", s, t);
            json["source"] = json!(s);
            json["target"] = json!(t);
        }
    }
    Ok(Output::ok(human, json))
}
