//! Python bindings: graphs, generation, deconstruction, estimation and
//! arrival-order scoring.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use dmc_core::engine::{self, Params, SufficientStats, Theta};
use dmc_core::estimation::{estimate_all, EmOptions, Estimate, ThetaEnsemble};
use dmc_core::evaluation::{self, kendall_tau, lenient_order, strict_order, Method, MethodContext};
use dmc_core::io::{ingest_edge_list, EdgeListSpec};
use dmc_core::reconstruction::DeconstructionResult;
use dmc_core::{DmcError, NodeId};

fn to_py(e: DmcError) -> PyErr {
    match e {
        DmcError::InvalidConfig(_)
        | DmcError::InvalidProbability { .. }
        | DmcError::UnknownNode(_)
        | DmcError::SelfPair(_)
        | DmcError::InvalidTheta(_)
        | DmcError::ExhaustiveCap { .. } => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn ids(v: &[NodeId]) -> Vec<u32> {
    v.iter().map(|n| n.0).collect()
}

fn theta_from(arrival_order: Vec<u32>, anchors: Vec<u32>) -> Theta {
    Theta {
        arrival_order: arrival_order.into_iter().map(NodeId).collect(),
        anchors: anchors.into_iter().map(NodeId).collect(),
    }
}

/// Undirected simple graph on integer node ids.
#[pyclass(name = "Graph", module = "dmc", skip_from_py_object)]
#[derive(Clone)]
struct PyGraph {
    inner: dmc_core::Graph,
}

#[pymethods]
impl PyGraph {
    #[new]
    #[pyo3(signature = (n, edges=Vec::new()))]
    fn new(n: usize, edges: Vec<(u32, u32)>) -> PyResult<Self> {
        Ok(PyGraph {
            inner: dmc_core::Graph::from_edges(n, &edges).map_err(to_py)?,
        })
    }

    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    fn nodes(&self) -> Vec<u32> {
        self.inner.nodes().map(|v| v.0).collect()
    }

    fn edges(&self) -> Vec<(u32, u32)> {
        self.inner
            .edges()
            .into_iter()
            .map(|(u, v)| (u.0, v.0))
            .collect()
    }

    fn degree(&self, v: u32) -> PyResult<usize> {
        self.inner.degree(NodeId(v)).map_err(to_py)
    }

    fn has_edge(&self, u: u32, v: u32) -> PyResult<bool> {
        self.inner.has_edge(NodeId(u), NodeId(v)).map_err(to_py)
    }

    /// Reverses one step in place and returns `(w, x, y)`.
    fn reverse_step(&mut self, new: u32, anchor: u32) -> PyResult<(u32, u32, u32)> {
        let s = self
            .inner
            .reverse_step(NodeId(new), NodeId(anchor))
            .map_err(to_py)?;
        Ok((s.w, s.x, s.y))
    }

    fn __len__(&self) -> usize {
        self.inner.node_count()
    }

    fn __repr__(&self) -> String {
        format!(
            "Graph(nodes={}, edges={})",
            self.inner.node_count(),
            self.inner.edge_count()
        )
    }
}

/// Grows an `n`-node graph; returns `(graph, arrival_order, anchors)`.
#[pyfunction]
fn generate(n: usize, q_m: f64, q_c: f64, seed: u64) -> PyResult<(PyGraph, Vec<u32>, Vec<u32>)> {
    let params = Params::new(q_m, q_c).map_err(to_py)?;
    let (g, theta) = engine::forward_generate(n, params, seed).map_err(to_py)?;
    Ok((
        PyGraph { inner: g },
        ids(&theta.arrival_order),
        ids(&theta.anchors),
    ))
}

/// Sufficient statistics `(w, x, y, n)` of a history.
#[pyfunction]
fn deconstruct(
    graph: &PyGraph,
    arrival_order: Vec<u32>,
    anchors: Vec<u32>,
) -> PyResult<(u64, u64, u64, u64)> {
    let s =
        engine::deconstruct(&graph.inner, &theta_from(arrival_order, anchors)).map_err(to_py)?;
    Ok((s.w, s.x, s.y, s.n))
}

#[pyfunction]
#[pyo3(signature = (w, x, y, n, q_m, q_c))]
fn log_likelihood(w: u64, x: u64, y: u64, n: u64, q_m: Option<f64>, q_c: f64) -> f64 {
    engine::log_likelihood_at(&SufficientStats { w, x, y, n }, q_m, q_c)
}

/// Closed-form MLE `(q_m, q_c)`; `q_m` is `None` when undefined.
#[pyfunction]
fn mle(w: u64, x: u64, y: u64, n: u64) -> (Option<f64>, f64) {
    let e = engine::mle(&SufficientStats { w, x, y, n });
    (e.q_m, e.q_c)
}

#[pyfunction]
fn theta_space_size(n: usize) -> String {
    engine::theta_space_size(n).to_string()
}

fn result_dict<'py>(py: Python<'py>, r: &DeconstructionResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    let est = engine::mle(&r.stats);
    d.set_item("arrival_order", ids(&r.theta.arrival_order))?;
    d.set_item("anchors", ids(&r.theta.anchors))?;
    d.set_item("stats", (r.stats.w, r.stats.x, r.stats.y, r.stats.n))?;
    d.set_item("q_m_hat", est.q_m)?;
    d.set_item("q_c_hat", est.q_c)?;
    d.set_item("log_likelihood", r.log_likelihood_at_mle)?;
    Ok(d)
}

fn estimate_dict<'py>(py: Python<'py>, e: &Estimate) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("q_m_hat", e.q_m_hat)?;
    d.set_item("q_c_hat", e.q_c_hat)?;
    d.set_item("log_likelihood", e.log_likelihood)?;
    d.set_item("ci_m", e.ci_m.map(|c| (c.lo, c.hi)))?;
    d.set_item("ci_c", e.ci_c.map(|c| (c.lo, c.hi)))?;
    Ok(d)
}

#[allow(clippy::too_many_arguments)]
fn ensemble(
    graph: &PyGraph,
    algorithm: &str,
    seed: u64,
    arrival_order: Option<Vec<u32>>,
    anchors: Option<Vec<u32>>,
    q_m: Option<f64>,
    q_c: Option<f64>,
    exhaustive_cap: usize,
) -> PyResult<ThetaEnsemble> {
    let method: Method = algorithm.parse().map_err(to_py)?;
    let theta = match (arrival_order, anchors) {
        (Some(o), Some(a)) => Some(theta_from(o, a)),
        (None, None) => None,
        _ => return Err(PyValueError::new_err("pass both arrival_order and anchors")),
    };
    let params = match (q_m, q_c) {
        (Some(m), Some(c)) => Params::new(m, c).map_err(to_py)?,
        (None, None) => Params { q_m: 0.5, q_c: 0.5 },
        _ => return Err(PyValueError::new_err("pass both q_m and q_c")),
    };
    let ctx = MethodContext {
        exhaustive_cap,
        ..MethodContext::default()
    };
    evaluation::run_method(
        method,
        &graph.inner,
        theta.as_ref().map(|t| (t, params)),
        seed,
        &ctx,
    )
    .map_err(to_py)
}

/// Runs a named deconstruction algorithm and returns its distinct histories.
#[pyfunction]
#[pyo3(signature = (graph, algorithm, seed=0, arrival_order=None, anchors=None, q_m=None, q_c=None, exhaustive_cap=8))]
#[allow(clippy::too_many_arguments)]
fn reconstruct<'py>(
    py: Python<'py>,
    graph: &PyGraph,
    algorithm: &str,
    seed: u64,
    arrival_order: Option<Vec<u32>>,
    anchors: Option<Vec<u32>>,
    q_m: Option<f64>,
    q_c: Option<f64>,
    exhaustive_cap: usize,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let ens = ensemble(
        graph,
        algorithm,
        seed,
        arrival_order,
        anchors,
        q_m,
        q_c,
        exhaustive_cap,
    )?;
    ens.results().iter().map(|r| result_dict(py, r)).collect()
}

/// Deconstructs with a named algorithm, then applies the max, EM and
/// averaged estimators.
#[pyfunction]
#[pyo3(signature = (graph, algorithm, seed=0, arrival_order=None, anchors=None, q_m=None, q_c=None, exhaustive_cap=8))]
#[allow(clippy::too_many_arguments)]
fn estimate<'py>(
    py: Python<'py>,
    graph: &PyGraph,
    algorithm: &str,
    seed: u64,
    arrival_order: Option<Vec<u32>>,
    anchors: Option<Vec<u32>>,
    q_m: Option<f64>,
    q_c: Option<f64>,
    exhaustive_cap: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let ens = ensemble(
        graph,
        algorithm,
        seed,
        arrival_order,
        anchors,
        q_m,
        q_c,
        exhaustive_cap,
    )?;
    let all = estimate_all(&ens, EmOptions::default()).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("ensemble_size", all.ensemble_size)?;
    d.set_item("best", result_dict(py, &all.best)?)?;
    d.set_item("max", estimate_dict(py, &all.max)?)?;
    d.set_item("em", estimate_dict(py, &all.em.estimate)?)?;
    d.set_item("em_iterations", all.em.iterations)?;
    d.set_item("averaged", estimate_dict(py, &all.averaged)?)?;
    Ok(d)
}

/// Kendall's tau of an estimated arrival history against the true one.
/// `strict` breaks each reversed pair with a coin flip; otherwise the
/// estimated arrival order is used as is.
#[pyfunction]
#[pyo3(signature = (true_order, arrival_order, anchors, strict=false, seed=0))]
fn arrival_tau(
    true_order: Vec<u32>,
    arrival_order: Vec<u32>,
    anchors: Vec<u32>,
    strict: bool,
    seed: u64,
) -> PyResult<f64> {
    let truth = evaluation::ArrivalOrder::from_sequence(
        &true_order.into_iter().map(NodeId).collect::<Vec<_>>(),
    );
    let theta = theta_from(arrival_order, anchors);
    let est = if strict {
        strict_order(&theta, seed)
    } else {
        lenient_order(&theta)
    };
    kendall_tau(&truth, &est).map_err(to_py)
}

/// Reads an edge list; returns `(graph, labels, report)`.
#[pyfunction]
#[pyo3(signature = (path, delimiter=None, has_header=false, score_column=None, score_threshold=None))]
fn ingest<'py>(
    py: Python<'py>,
    path: std::path::PathBuf,
    delimiter: Option<char>,
    has_header: bool,
    score_column: Option<usize>,
    score_threshold: Option<f64>,
) -> PyResult<(PyGraph, Vec<String>, Bound<'py, PyDict>)> {
    let spec = EdgeListSpec {
        delimiter,
        has_header,
        score_column,
        score_threshold,
        ..EdgeListSpec::new(path)
    };
    let out = ingest_edge_list(&spec).map_err(to_py)?;
    let labels = (0..out.labels.len())
        .map(|i| {
            out.labels
                .label(NodeId(i as u32))
                .unwrap_or_default()
                .to_owned()
        })
        .collect();
    let r = out.report;
    let d = PyDict::new(py);
    d.set_item("rows", r.rows)?;
    d.set_item("self_loops", r.self_loops)?;
    d.set_item("duplicates", r.duplicates)?;
    d.set_item("filtered", r.filtered)?;
    d.set_item("edges", r.edges)?;
    d.set_item("nodes", r.nodes)?;
    Ok((PyGraph { inner: out.graph }, labels, d))
}

#[pymodule]
fn dmc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(deconstruct, m)?)?;
    m.add_function(wrap_pyfunction!(log_likelihood, m)?)?;
    m.add_function(wrap_pyfunction!(mle, m)?)?;
    m.add_function(wrap_pyfunction!(theta_space_size, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(arrival_tau, m)?)?;
    m.add_function(wrap_pyfunction!(ingest, m)?)?;
    m.add(
        "ALGORITHMS",
        Method::ALL.iter().map(|m| m.tag()).collect::<Vec<_>>(),
    )?;
    Ok(())
}
