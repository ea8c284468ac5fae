//! Python bindings: graphs, the HOTS solvers, rates, PageRank and rank
//! correlation. Solvers release the GIL while they run.

use std::fs::File;
use std::io::BufReader;

use hotskit::effective::{
    effective_cd_solve, effective_solve, rate_effective, AugmentedState, EffectiveOptions, EffectiveRateMethod,
};
use hotskit::graph::{from_edge_list, from_matrix_market, is_strongly_connected, EdgeListOptions};
use hotskit::ideal::{
    deformed_solve, dss_solve, ideal_solve, rate_ideal, DeformedOptions, IdealOptions, IdealRateMethod,
};
use hotskit::normalized::{build_normalized, normalized_solve};
use hotskit::ranking::{self, Ranking};
use hotskit::synth::{self, SynthModel};
use hotskit::truncated::{bounded_hots_solve, BoundsSet};
use hotskit::{GraphMeta, HotsError, ScoreState, SolveReport, SparseMatrix};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

create_exception!(pyhotskit, HotsKitError, PyValueError, "Invalid input or model for a hotskit routine.");

fn err(e: HotsError) -> PyErr {
    HotsKitError::new_err(e.to_string())
}

/// A sparse nonnegative matrix, optionally with a uniform shift on every entry.
#[pyclass(frozen, module = "pyhotskit")]
struct Graph {
    a: SparseMatrix,
    meta: GraphMeta,
}

impl Graph {
    fn wrap(a: SparseMatrix) -> Self {
        let meta = GraphMeta::from_matrix(&a);
        Graph { a, meta }
    }
}

#[pymethods]
impl Graph {
    /// Builds a graph from `(src, dst)` or `(src, dst, weight)` arcs over
    /// `n` nodes. Repeated arcs are summed.
    #[staticmethod]
    #[pyo3(signature = (n, arcs, shift = 0.0))]
    fn from_arcs(n: usize, arcs: Vec<Vec<f64>>, shift: f64) -> PyResult<Self> {
        let mut triplets = Vec::with_capacity(arcs.len());
        for arc in &arcs {
            let index = |v: f64| -> PyResult<usize> {
                if v >= 0.0 && v.fract() == 0.0 {
                    Ok(v as usize)
                } else {
                    Err(HotsKitError::new_err(format!("node id {v} is not a nonnegative integer")))
                }
            };
            match arc.as_slice() {
                [i, j] => triplets.push((index(*i)?, index(*j)?, 1.0)),
                [i, j, w] => triplets.push((index(*i)?, index(*j)?, *w)),
                _ => return Err(HotsKitError::new_err("each arc must be (src, dst) or (src, dst, weight)")),
            }
        }
        let a = SparseMatrix::from_triplets(n, triplets).and_then(|a| a.with_shift(shift)).map_err(err)?;
        Ok(Self::wrap(a))
    }

    /// Reads a whitespace-separated edge list file.
    #[staticmethod]
    #[pyo3(signature = (path, weighted = false, shift = 0.0))]
    fn from_edge_list(path: &str, weighted: bool, shift: f64) -> PyResult<Self> {
        let file = File::open(path).map_err(|e| HotsKitError::new_err(format!("{path}: {e}")))?;
        let (a, _) = from_edge_list(BufReader::new(file), EdgeListOptions { weighted }).map_err(err)?;
        Ok(Self::wrap(a.with_shift(shift).map_err(err)?))
    }

    /// Reads a Matrix Market coordinate file.
    #[staticmethod]
    #[pyo3(signature = (path, shift = 0.0))]
    fn from_matrix_market(path: &str, shift: f64) -> PyResult<Self> {
        let file = File::open(path).map_err(|e| HotsKitError::new_err(format!("{path}: {e}")))?;
        let a = from_matrix_market(BufReader::new(file)).map_err(err)?;
        Ok(Self::wrap(a.with_shift(shift).map_err(err)?))
    }

    #[getter]
    fn n(&self) -> usize {
        self.a.n()
    }

    #[getter]
    fn nnz(&self) -> usize {
        self.a.nnz()
    }

    #[getter]
    fn shift(&self) -> f64 {
        self.a.shift()
    }

    #[getter]
    fn dangling(&self) -> Vec<bool> {
        self.meta.dangling.clone()
    }

    fn is_strongly_connected(&self) -> bool {
        is_strongly_connected(&self.a)
    }

    /// `A·x + shift·Σx`.
    fn apply(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.a.apply(&x).map_err(err)
    }

    /// `Aᵀ·x + shift·Σx`, without forming the transpose.
    fn apply_transpose(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.a.apply_transpose(&x).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Graph(n={}, nnz={}, shift={})", self.a.n(), self.a.nnz(), self.a.shift())
    }
}

/// Scores, their order and the solver report.
#[pyclass(frozen, get_all, module = "pyhotskit")]
struct Solution {
    /// Score per node; higher ranks first.
    scores: Vec<f64>,
    /// Node ids by descending score, ties by ascending id.
    order: Vec<usize>,
    /// One of "Converged", "MaxIter", "Oscillating", "Diverged".
    status: String,
    iterations: usize,
    residual: f64,
    rate_estimate: f64,
    theta_trace: Vec<f64>,
    residual_trace: Vec<f64>,
}

#[pymethods]
impl Solution {
    #[getter]
    fn converged(&self) -> bool {
        self.status == "Converged"
    }

    fn __repr__(&self) -> String {
        format!("Solution(status={}, iterations={}, residual={:e})", self.status, self.iterations, self.residual)
    }
}

fn solution(scores: Vec<f64>, rep: SolveReport) -> Solution {
    let r = Ranking::new(scores, "", Vec::new());
    Solution {
        scores: r.scores,
        order: r.order,
        status: rep.status.to_string(),
        iterations: rep.iterations,
        residual: rep.residual,
        rate_estimate: rep.rate_estimate,
        theta_trace: rep.theta_trace,
        residual_trace: rep.residual_trace,
    }
}

fn start(n: usize, p0: Option<Vec<f64>>) -> Vec<f64> {
    p0.unwrap_or_else(|| vec![0.0; n])
}

fn effective_options(tol: f64, max_iter: Option<usize>) -> EffectiveOptions {
    EffectiveOptions { tol, max_iter, ..Default::default() }
}

fn page_scores(p: &[f64], n: usize) -> Vec<f64> {
    ScoreState::new(p[..n].to_vec(), hotskit::Normalization::MeanZero).scores()
}

/// Ideal HOTS fixed-point iteration; needs a strongly connected graph.
#[pyfunction]
#[pyo3(signature = (graph, tol = 1e-9, max_iter = None, p0 = None, add_diagonal = None))]
fn ideal(
    py: Python<'_>,
    graph: &Graph,
    tol: f64,
    max_iter: Option<usize>,
    p0: Option<Vec<f64>>,
    add_diagonal: Option<f64>,
) -> PyResult<Solution> {
    let opts = IdealOptions { tol, max_iter, add_diagonal, ..Default::default() };
    let p0 = ScoreState::new(start(graph.a.n(), p0), opts.normalization);
    let (p, rep) = py.detach(|| ideal_solve(&graph.a, &p0, &opts)).map_err(err)?;
    Ok(solution(p.scores(), rep))
}

/// Coordinate-descent matrix balancing; converges without primitivity.
#[pyfunction]
#[pyo3(signature = (graph, tol = 1e-9, max_iter = None, p0 = None))]
fn dss(py: Python<'_>, graph: &Graph, tol: f64, max_iter: Option<usize>, p0: Option<Vec<f64>>) -> PyResult<Solution> {
    let opts = IdealOptions { tol, max_iter, ..Default::default() };
    let p0 = ScoreState::new(start(graph.a.n(), p0), opts.normalization);
    let (p, rep) = py.detach(|| dss_solve(&graph.a, &p0, &opts)).map_err(err)?;
    Ok(solution(p.scores(), rep))
}

/// Deformed iteration `x ← (Aᵀx)^α ∘ (A x⁻¹)^{α−1}`, rescaled each step.
#[pyfunction]
#[pyo3(signature = (graph, alpha, tol = 1e-9, max_iter = None))]
fn deformed(py: Python<'_>, graph: &Graph, alpha: f64, tol: f64, max_iter: Option<usize>) -> PyResult<Solution> {
    let opts = DeformedOptions { tol, max_iter, ..Default::default() };
    let x0 = vec![1.0; graph.a.n()];
    let (x, rep) = py.detach(|| deformed_solve(&graph.a, &x0, alpha, &opts)).map_err(err)?;
    Ok(solution(x, rep))
}

/// Effective HOTS on an arbitrary graph. `method` is "fixed-point" or "cd".
#[pyfunction]
#[pyo3(signature = (graph, alpha = 0.9, method = "fixed-point", tol = 1e-9, max_iter = None))]
fn effective(
    py: Python<'_>,
    graph: &Graph,
    alpha: f64,
    method: &str,
    tol: f64,
    max_iter: Option<usize>,
) -> PyResult<Solution> {
    let n = graph.a.n();
    let opts = effective_options(tol, max_iter);
    let p0 = AugmentedState::zeros(n);
    let run = match method {
        "fixed-point" => effective_solve,
        "cd" => effective_cd_solve,
        other => return Err(HotsKitError::new_err(format!("unknown method '{other}'"))),
    };
    let (p, _, rep) = py.detach(|| run(&graph.a, &p0, alpha, &opts)).map_err(err)?;
    Ok(solution(page_scores(&p.p, n), rep))
}

/// Effective HOTS with flow bounds given as `(src, dst, lower, upper)`.
#[pyfunction]
#[pyo3(signature = (graph, bounds, alpha = 0.9, tol = 1e-9, max_iter = None))]
fn bounded(
    py: Python<'_>,
    graph: &Graph,
    bounds: Vec<(usize, usize, f64, f64)>,
    alpha: f64,
    tol: f64,
    max_iter: Option<usize>,
) -> PyResult<Solution> {
    let n = graph.a.n();
    let b = BoundsSet::from_entries(&graph.a, bounds).map_err(err)?;
    let opts = effective_options(tol, max_iter);
    let p0 = AugmentedState::zeros(n);
    let (p, _, rep) = py.detach(|| bounded_hots_solve(&graph.a, &b, alpha, &p0, &opts)).map_err(err)?;
    Ok(solution(page_scores(&p.p, n), rep))
}

/// Normalized HOTS: row-normalized links plus a link node for dangling pages.
#[pyfunction]
#[pyo3(signature = (graph, alpha = 0.9, tol = 1e-9, max_iter = None))]
fn normalized(py: Python<'_>, graph: &Graph, alpha: f64, tol: f64, max_iter: Option<usize>) -> PyResult<Solution> {
    let model = build_normalized(&graph.a, &graph.meta, alpha).map_err(err)?;
    let opts = effective_options(tol, max_iter);
    let p0 = vec![0.0; graph.a.n()];
    let (sol, rep) = py.detach(|| normalized_solve(&model, &p0, &opts)).map_err(err)?;
    Ok(solution(sol.pages.scores(), rep))
}

/// PageRank by power iteration; dangling pages spread uniformly.
#[pyfunction]
#[pyo3(signature = (graph, damping = 0.85, tol = 1e-9))]
fn pagerank(py: Python<'_>, graph: &Graph, damping: f64, tol: f64) -> PyResult<Solution> {
    let (r, rep) = py.detach(|| ranking::pagerank(&graph.a, damping, tol)).map_err(err)?;
    Ok(solution(r.scores, rep))
}

/// `|λ₂(P)|` of the ideal iteration, at the balancing found by coordinate
/// descent. `method` is "dense" or "power".
#[pyfunction]
#[pyo3(signature = (graph, method = "dense"))]
fn rate_ideal_at_solution(py: Python<'_>, graph: &Graph, method: &str) -> PyResult<f64> {
    let method = match method {
        "dense" => IdealRateMethod::Dense,
        "power" => IdealRateMethod::Power,
        other => return Err(HotsKitError::new_err(format!("unknown method '{other}'"))),
    };
    let opts = IdealOptions { tol: 1e-12, ..Default::default() };
    py.detach(|| {
        let (p, rep) = dss_solve(&graph.a, &ScoreState::zeros(graph.a.n()), &opts)?;
        if !rep.status.is_converged() {
            return Err(HotsError::Precondition(format!("balancing ended {}", rep.status)));
        }
        rate_ideal(&graph.a, &p.p, method).map(|r| r.rate)
    })
    .map_err(err)
}

/// Spectral rate of the effective iteration at its solution. `method` is
/// "fd-dense" or "fd-power".
#[pyfunction]
#[pyo3(signature = (graph, alpha = 0.9, method = "fd-dense"))]
fn rate_effective_at_solution(py: Python<'_>, graph: &Graph, alpha: f64, method: &str) -> PyResult<f64> {
    let method = match method {
        "fd-dense" => EffectiveRateMethod::FdDense,
        "fd-power" => EffectiveRateMethod::FdPower,
        other => return Err(HotsKitError::new_err(format!("unknown method '{other}'"))),
    };
    let opts = effective_options(1e-12, None);
    py.detach(|| {
        let (p, _, rep) = effective_cd_solve(&graph.a, &AugmentedState::zeros(graph.a.n()), alpha, &opts)?;
        if !rep.status.is_converged() {
            return Err(HotsError::Precondition(format!("effective solve ended {}", rep.status)));
        }
        rate_effective(&graph.a, &p.p, alpha, method).map(|r| r.rate)
    })
    .map_err(err)
}

/// Kendall tau-b between two score vectors.
#[pyfunction]
fn kendall_tau(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    ranking::kendall_tau_scores(&x, &y).map_err(err)
}

/// Synthetic arc list. `model` is "cycle-plus-chords" or "preferential".
#[pyfunction]
#[pyo3(signature = (n, model = "preferential", seed = 0, chords = None))]
fn synth_graph(n: usize, model: &str, seed: u64, chords: Option<usize>) -> PyResult<Vec<(usize, usize)>> {
    let model = match model {
        "cycle-plus-chords" => SynthModel::CyclePlusChords { chords: chords.unwrap_or(n) },
        "preferential" => SynthModel::preferential(),
        other => return Err(HotsKitError::new_err(format!("unknown model '{other}'"))),
    };
    synth::synth_graph(n, model, seed).map_err(err)
}

#[pymodule]
fn pyhotskit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("HotsKitError", m.py().get_type::<HotsKitError>())?;
    m.add_class::<Graph>()?;
    m.add_class::<Solution>()?;
    m.add_function(wrap_pyfunction!(ideal, m)?)?;
    m.add_function(wrap_pyfunction!(dss, m)?)?;
    m.add_function(wrap_pyfunction!(deformed, m)?)?;
    m.add_function(wrap_pyfunction!(effective, m)?)?;
    m.add_function(wrap_pyfunction!(bounded, m)?)?;
    m.add_function(wrap_pyfunction!(normalized, m)?)?;
    m.add_function(wrap_pyfunction!(pagerank, m)?)?;
    m.add_function(wrap_pyfunction!(rate_ideal_at_solution, m)?)?;
    m.add_function(wrap_pyfunction!(rate_effective_at_solution, m)?)?;
    m.add_function(wrap_pyfunction!(kendall_tau, m)?)?;
    m.add_function(wrap_pyfunction!(synth_graph, m)?)?;
    Ok(())
}
