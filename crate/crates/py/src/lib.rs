//! Python access to graphs, certificates, bounds, search and refinement.
//! Scales cross the boundary as `fractions.Fraction`.

use std::time::Duration;

use isofold::bounds::{improved_lower, platonic_lower};
use isofold::covering::verify as verify_map;
use isofold::hardness::{generate, generate_dp_variant, SetCoverInstance};
use isofold::ilp::{build_model, write_model, Format};
use isofold::improve::{improve as improve_map, ImproveConfig};
use isofold::lp_refine::refine as refine_map;
use isofold::postman::{postman_closed, postman_open};
use isofold::search::{decide, minimize, Decision, MinimizeOutcome, SearchConfig};
use isofold::{platonic, FoldingMap, MetricGraph, PlatonicName, Rational};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn fraction<'py>(py: Python<'py>, r: &Rational) -> PyResult<Bound<'py, PyAny>> {
    py.import("fractions")?.getattr("Fraction")?.call1((r.to_string(),))
}

/// Accepts a `Fraction`, an `int`, or a string such as `"3/2"`.
fn rational(x: &Bound<'_, PyAny>) -> PyResult<Rational> {
    x.str()?.to_str()?.parse().map_err(err)
}

#[pyclass(name = "Graph", module = "isofold_py", skip_from_py_object)]
#[derive(Clone)]
pub struct PyGraph {
    inner: MetricGraph,
}

#[pymethods]
impl PyGraph {
    /// Parses the graph text format.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        let inner = MetricGraph::parse(text).map_err(err)?;
        inner.ensure_valid().map_err(err)?;
        Ok(PyGraph { inner })
    }

    #[staticmethod]
    fn platonic(name: &str) -> PyResult<Self> {
        let n: PlatonicName = name.parse().map_err(err)?;
        Ok(PyGraph { inner: platonic(n) })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[getter]
    fn vertex_count(&self) -> usize {
        self.inner.vertex_count()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    fn total_length<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        fraction(py, &self.inner.total_length())
    }

    fn __repr__(&self) -> String {
        format!(
            "Graph({} vertices, {} edges)",
            self.inner.vertex_count(),
            self.inner.edge_count()
        )
    }
}

/// A folding certificate tied to its source and target graphs.
#[pyclass(name = "Certificate", module = "isofold_py", skip_from_py_object)]
#[derive(Clone)]
pub struct PyCertificate {
    inner: FoldingMap,
    src: MetricGraph,
    dst: MetricGraph,
}

#[pymethods]
impl PyCertificate {
    #[staticmethod]
    fn parse(src: &PyGraph, dst: &PyGraph, text: &str) -> PyResult<Self> {
        let inner = FoldingMap::parse(&src.inner, &dst.inner, text).map_err(err)?;
        Ok(PyCertificate {
            inner,
            src: src.inner.clone(),
            dst: dst.inner.clone(),
        })
    }

    fn to_text(&self) -> String {
        self.inner.to_text(&self.src, &self.dst)
    }

    #[getter]
    fn scale<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        fraction(py, &self.inner.scale)
    }

    /// Returns a dict with `accepted`, `doubled_length` and `failures`.
    fn verify<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let rep = verify_map(&self.src, &self.dst, &self.inner);
        let d = PyDict::new(py);
        d.set_item("accepted", rep.accepted())?;
        d.set_item("doubled_length", fraction(py, &rep.doubled_length)?)?;
        d.set_item("failures", rep.describe(&self.src, &self.dst))?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("Certificate(scale={})", self.inner.scale)
    }
}

fn wrap(fm: FoldingMap, src: &PyGraph, dst: &PyGraph) -> PyCertificate {
    PyCertificate {
        inner: fm,
        src: src.inner.clone(),
        dst: dst.inner.clone(),
    }
}

/// Improved lower bound as a dict with `value`, `strict` and `breakdown`.
/// Two solid names use the published override where there is one.
#[pyfunction]
#[pyo3(signature = (src, dst, solids = None))]
fn lower_bound<'py>(
    py: Python<'py>,
    src: &PyGraph,
    dst: &PyGraph,
    solids: Option<(String, String)>,
) -> PyResult<Bound<'py, PyDict>> {
    let lb = match solids {
        Some((s, d)) => platonic_lower(s.parse().map_err(err)?, d.parse().map_err(err)?),
        None => improved_lower(&src.inner, &dst.inner),
    };
    let d = PyDict::new(py);
    d.set_item("value", fraction(py, &lb.value)?)?;
    d.set_item("strict", lb.strict)?;
    d.set_item("breakdown", lb.breakdown())?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (dst, open = false))]
fn postman<'py>(py: Python<'py>, dst: &PyGraph, open: bool) -> PyResult<Bound<'py, PyAny>> {
    let len = if open {
        postman_open(&dst.inner)
    } else {
        postman_closed(&dst.inner)
    }
    .map_err(err)?;
    fraction(py, &len)
}

/// Grid search. Returns `(verdict, certificate or None)` where the verdict is
/// `feasible`/`infeasible` with `alpha`, or `optimal`/`none` without.
#[pyfunction]
#[pyo3(signature = (src, dst, alpha = None, q = 1, time = 600.0, seed = 0))]
fn solve(
    py: Python<'_>,
    src: &PyGraph,
    dst: &PyGraph,
    alpha: Option<&Bound<'_, PyAny>>,
    q: usize,
    time: f64,
    seed: u64,
) -> PyResult<(String, Option<PyCertificate>)> {
    let cfg = SearchConfig {
        q,
        time_budget: Duration::from_secs_f64(time),
        seed,
        ..Default::default()
    };
    let alpha = alpha.map(rational).transpose()?;
    let (s, d) = (&src.inner, &dst.inner);
    let found = py.detach(|| match &alpha {
        Some(a) => decide(s, d, a, &cfg).map(|dec| match dec {
            Decision::Feasible(m) => ("feasible", Some(m)),
            Decision::Infeasible => ("infeasible", None),
            Decision::Timeout => ("timeout", None),
        }),
        None => minimize(s, d, &cfg).map(|out| match out {
            MinimizeOutcome::Optimal { map, .. } => ("optimal", Some(map)),
            MinimizeOutcome::NoneUpTo(_) => ("none", None),
            MinimizeOutcome::Timeout { .. } => ("timeout", None),
        }),
    });
    let (verdict, map) = found.map_err(err)?;
    Ok((verdict.to_string(), map.map(|m| wrap(m, src, dst))))
}

/// Exact LP re-solve of a certificate's continuous choices.
#[pyfunction]
#[pyo3(signature = (cert, c = None))]
fn refine(py: Python<'_>, cert: &PyCertificate, c: Option<usize>) -> PyResult<PyCertificate> {
    let c = c.unwrap_or(cert.src.vertex_count());
    let (map, _) = py
        .detach(|| refine_map(&cert.src, &cert.dst, &cert.inner, c))
        .map_err(err)?;
    Ok(PyCertificate {
        inner: map,
        src: cert.src.clone(),
        dst: cert.dst.clone(),
    })
}

#[pyfunction]
#[pyo3(signature = (src, dst, rounds = 12, seed = 0, q_max = 4, time = 600.0))]
fn improve(
    py: Python<'_>,
    src: &PyGraph,
    dst: &PyGraph,
    rounds: usize,
    seed: u64,
    q_max: usize,
    time: f64,
) -> PyResult<PyCertificate> {
    let cfg = ImproveConfig {
        rounds,
        seed,
        q_max,
        round_budget: Duration::from_secs_f64(time),
        ..Default::default()
    };
    let res = py.detach(|| improve_map(&src.inner, &dst.inner, &cfg)).map_err(err)?;
    Ok(wrap(res.best, src, dst))
}

/// The mixed integer model as LP or MPS text.
#[pyfunction]
#[pyo3(signature = (src, dst, c = None, alpha = None, format = "lp"))]
fn export_ilp(
    src: &PyGraph,
    dst: &PyGraph,
    c: Option<usize>,
    alpha: Option<&Bound<'_, PyAny>>,
    format: &str,
) -> PyResult<String> {
    let c = c.unwrap_or(src.inner.vertex_count());
    let alpha = match alpha {
        Some(a) => rational(a)?,
        None => Rational::from(dst.inner.edge_count() as i64),
    };
    let format: Format = format.parse().map_err(err)?;
    let model = build_model(&src.inner, &dst.inner, c, &alpha).map_err(err)?;
    Ok(write_model(&model, format))
}

/// Source and target graphs of the set-cover reduction.
#[pyfunction]
#[pyo3(signature = (instance, a = None, dp = false))]
fn gadget(instance: &str, a: Option<usize>, dp: bool) -> PyResult<(PyGraph, PyGraph)> {
    let inst = SetCoverInstance::parse(instance).map_err(err)?;
    let a = a.unwrap_or(4 * inst.sets.len() + 1);
    let out = if dp {
        generate_dp_variant(&inst, &inst, a).map(|p| p.0)
    } else {
        generate(&inst, a)
    }
    .map_err(err)?;
    Ok((PyGraph { inner: out.source }, PyGraph { inner: out.target }))
}

#[pymodule]
pub fn isofold_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_class::<PyCertificate>()?;
    m.add_function(wrap_pyfunction!(lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(postman, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(refine, m)?)?;
    m.add_function(wrap_pyfunction!(improve, m)?)?;
    m.add_function(wrap_pyfunction!(export_ilp, m)?)?;
    m.add_function(wrap_pyfunction!(gadget, m)?)?;
    Ok(())
}
