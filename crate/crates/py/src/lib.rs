//! Python bindings for the `treeplace` solvers.

use std::collections::{BTreeMap, HashMap};

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use treeplace::hardness::{self, ThreePartitionInstance, DEFAULT_SIZE_CAP};
use treeplace::topology::NodeId;
use treeplace::{ClusterRequest, RequestGraph, RequestSpec, Topology, TopologySpec};

fn err(e: treeplace::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_rational(s: &str) -> PyResult<treeplace::Rational> {
    s.parse().map_err(|e: treeplace::rational::ParseRationalError| PyValueError::new_err(e.to_string()))
}

#[pyclass(frozen, name = "Topology", module = "treeplace_py")]
struct PyTopology {
    inner: Topology,
}

#[pymethods]
impl PyTopology {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let spec: TopologySpec = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(PyTopology {
            inner: Topology::from_spec(&spec).map_err(err)?,
        })
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner.to_spec()).expect("topology specs serialize")
    }

    fn leaves(&self) -> Vec<String> {
        self.inner.leaves().into_iter().map(|u| self.inner.label(u).to_string()).collect()
    }

    fn total_slots(&self) -> u64 {
        self.inner.total_slots()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Topology(nodes={}, leaves={})", self.inner.len(), self.inner.leaves().len())
    }
}

#[pyclass(frozen, name = "Request", module = "treeplace_py")]
struct PyRequest {
    inner: RequestGraph,
}

#[pymethods]
impl PyRequest {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let spec: RequestSpec = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(PyRequest {
            inner: RequestGraph::from_spec(&spec).map_err(err)?,
        })
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner.to_spec()).expect("request specs serialize")
    }

    #[getter]
    fn vms(&self) -> Vec<String> {
        self.inner.vm_labels().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.k()
    }

    fn __repr__(&self) -> String {
        format!("Request(vms={}, chatter={})", self.inner.k(), self.inner.chatter().len())
    }
}

/// A placement: exact congestion as a string plus a VM to leaf map.
#[pyclass(frozen, name = "Embedding", module = "treeplace_py")]
struct PyEmbedding {
    #[pyo3(get)]
    congestion: String,
    #[pyo3(get)]
    assignment: BTreeMap<String, String>,
    value: f64,
}

impl PyEmbedding {
    fn new(t: &Topology, r: &RequestGraph, e: &treeplace::Embedding) -> Self {
        let assignment = (0..r.k())
            .map(|i| (r.vm_label(i).to_string(), t.label(e.assignment[i]).to_string()))
            .collect();
        PyEmbedding {
            congestion: e.congestion.to_string(),
            assignment,
            value: e.congestion.to_f64(),
        }
    }
}

#[pymethods]
impl PyEmbedding {
    fn __float__(&self) -> f64 {
        self.value
    }

    fn __repr__(&self) -> String {
        format!("Embedding(congestion={}, vms={})", self.congestion, self.assignment.len())
    }
}

#[pyclass(frozen, name = "HardInstance", module = "treeplace_py")]
struct PyHardInstance {
    #[pyo3(get)]
    topology: Py<PyTopology>,
    #[pyo3(get)]
    request: Py<PyRequest>,
    #[pyo3(get)]
    certificate: Option<Py<PyEmbedding>>,
    #[pyo3(get)]
    gap_bound: String,
}

/// Returns the binarized tree. Synthetic switches sit behind unbounded links.
#[pyfunction]
fn to_binary(t: &PyTopology) -> PyTopology {
    PyTopology {
        inner: treeplace::to_binary(&t.inner).into_tree(),
    }
}

/// Minimum-congestion embedding, or None when the request does not fit.
#[pyfunction]
fn solve(py: Python<'_>, t: &PyTopology, r: &PyRequest) -> PyResult<Option<PyEmbedding>> {
    let (tree, req) = (&t.inner, &r.inner);
    let e = py.detach(|| treeplace::solve(&treeplace::to_binary(tree), req)).map_err(err)?;
    Ok(e.map(|e| PyEmbedding::new(tree, req, &e)))
}

/// Brute force over every allocation. Tiny instances only.
#[pyfunction]
fn linear_scan(py: Python<'_>, t: &PyTopology, r: &PyRequest) -> PyResult<Option<PyEmbedding>> {
    let (tree, req) = (&t.inner, &r.inner);
    let e = py.detach(|| treeplace::linear_scan(tree, req)).map_err(err)?;
    Ok(e.map(|e| PyEmbedding::new(tree, req, &e)))
}

/// Virtual cluster of `k` VMs with per-VM bandwidth `bandwidth`.
/// Returns `(congestion, {leaf: count})` or None.
#[pyfunction]
fn cluster_solve(
    py: Python<'_>,
    t: &PyTopology,
    k: usize,
    bandwidth: &str,
) -> PyResult<Option<(String, BTreeMap<String, usize>)>> {
    let c = ClusterRequest::new(k, parse_rational(bandwidth)?).map_err(err)?;
    let tree = &t.inner;
    let p = py.detach(|| treeplace::cluster_solve(&treeplace::to_binary(tree), &c)).map_err(err)?;
    Ok(p.map(|p| {
        let counts = p.counts.iter().map(|(&u, &n)| (tree.label(u).to_string(), n)).collect();
        (p.congestion.to_string(), counts)
    }))
}

#[pyfunction]
fn evaluate(t: &PyTopology, r: &PyRequest, assignment: HashMap<String, String>) -> PyResult<String> {
    let (tree, req) = (&t.inner, &r.inner);
    let leaves = (0..req.k())
        .map(|i| {
            let vm = req.vm_label(i);
            let leaf = assignment
                .get(vm)
                .ok_or_else(|| PyValueError::new_err(format!("VM `{vm}` is not assigned")))?;
            tree.lookup(leaf).map_err(err)
        })
        .collect::<PyResult<Vec<NodeId>>>()?;
    Ok(treeplace::evaluate(tree, req, &leaves).map_err(err)?.to_string())
}

#[pyfunction]
fn gen_three_tier(servers_per_rack: usize, racks_per_as: usize, as_count: usize) -> PyResult<PyTopology> {
    Ok(PyTopology {
        inner: treeplace::gen_three_tier(servers_per_rack, racks_per_as, as_count).map_err(err)?,
    })
}

#[pyfunction]
fn apply_residuals(t: &PyTopology, seed: u64) -> PyResult<PyTopology> {
    Ok(PyTopology {
        inner: treeplace::apply_residuals(&t.inner, seed).map_err(err)?,
    })
}

/// Hard instance from a 3-partition input. `model` is "path" or "tree".
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (model, m, b, values, w = 100, epsilon = "1/2", relaxed = false))]
fn gen_hard(
    py: Python<'_>,
    model: &str,
    m: usize,
    b: u64,
    values: Vec<u64>,
    w: u64,
    epsilon: &str,
    relaxed: bool,
) -> PyResult<PyHardInstance> {
    let tp = ThreePartitionInstance::new(m, b, values).map_err(err)?.solved();
    let h = match (model, relaxed) {
        ("path", false) => hardness::gen_weighted_path(&tp, w),
        ("path", true) => hardness::gen_weighted_path_relaxed(&tp, w),
        ("tree", false) => hardness::gen_unweighted_tree(&tp, parse_rational(epsilon)?, DEFAULT_SIZE_CAP),
        _ => return Err(PyValueError::new_err(format!("unknown model `{model}` (relaxed={relaxed})"))),
    }
    .map_err(err)?;
    let certificate = match &h.certificate {
        Some(e) => Some(Py::new(py, PyEmbedding::new(&h.topology, &h.request, e))?),
        None => None,
    };
    Ok(PyHardInstance {
        topology: Py::new(py, PyTopology { inner: h.topology })?,
        request: Py::new(py, PyRequest { inner: h.request })?,
        certificate,
        gap_bound: h.gap_bound.to_string(),
    })
}

#[pymodule]
pub fn treeplace_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTopology>()?;
    m.add_class::<PyRequest>()?;
    m.add_class::<PyEmbedding>()?;
    m.add_class::<PyHardInstance>()?;
    m.add_function(wrap_pyfunction!(to_binary, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(linear_scan, m)?)?;
    m.add_function(wrap_pyfunction!(cluster_solve, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(gen_three_tier, m)?)?;
    m.add_function(wrap_pyfunction!(apply_residuals, m)?)?;
    m.add_function(wrap_pyfunction!(gen_hard, m)?)?;
    Ok(())
}
