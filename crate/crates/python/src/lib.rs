//! Python bindings: `import pyvodcache`.

use std::time::Duration;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use vodcache::adaptive;
use vodcache::allocate::{self, Policy};
use vodcache::analytic;
use vodcache::experiment::{self, RunOptions, Strategy, SystemParams};
use vodcache::io as vio;
use vodcache::model::{self, StorageMode};
use vodcache::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Convergence { .. } => PyRuntimeError::new_err(e.to_string()),
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for vodcache::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

#[pyclass(name = "Topology", module = "pyvodcache", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyTopology(model::Topology);

#[pymethods]
impl PyTopology {
    /// Each peer connects to a uniformly random `degree`-subset of caches.
    #[staticmethod]
    fn sample(caches: usize, peers: usize, degree: usize, seed: u64) -> PyResult<Self> {
        model::sample_topology(caches, peers, degree, seed).py().map(Self)
    }

    #[staticmethod]
    #[pyo3(signature = (caches, adjacency, seed=0))]
    fn from_adjacency(caches: usize, adjacency: Vec<Vec<usize>>, seed: u64) -> PyResult<Self> {
        model::Topology::from_adjacency(caches, adjacency, seed).py().map(Self)
    }

    #[staticmethod]
    fn from_tsv(text: &str) -> PyResult<Self> {
        vio::read_topology(text.as_bytes()).py().map(Self)
    }

    fn to_tsv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        vio::write_topology(&mut buf, &self.0).py()?;
        Ok(String::from_utf8(buf).expect("ascii output"))
    }

    #[getter]
    fn num_caches(&self) -> usize {
        self.0.num_caches
    }

    #[getter]
    fn num_peers(&self) -> usize {
        self.0.num_peers
    }

    #[getter]
    fn degree(&self) -> usize {
        self.0.degree
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.0.seed
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        self.0.adjacency.clone()
    }

    fn caches_of(&self, peer: usize) -> PyResult<Vec<usize>> {
        self.0
            .adjacency
            .get(peer)
            .cloned()
            .ok_or_else(|| PyValueError::new_err(format!("no peer {peer}")))
    }

    fn cache_degrees(&self) -> Vec<usize> {
        self.0.cache_degrees()
    }

    fn __repr__(&self) -> String {
        format!(
            "Topology(caches={}, peers={}, degree={}, seed={})",
            self.0.num_caches, self.0.num_peers, self.0.degree, self.0.seed
        )
    }
}

#[pyclass(name = "Demand", module = "pyvodcache", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyDemand(model::Demand);

#[pymethods]
impl PyDemand {
    /// Zipf popularity with one i.i.d. request per peer.
    #[staticmethod]
    fn generate(videos: usize, exponent: f64, peers: usize, seed: u64) -> PyResult<Self> {
        model::Demand::generate(videos, exponent, peers, seed).py().map(Self)
    }

    #[staticmethod]
    #[pyo3(signature = (videos, exponent, requests, seed=0))]
    fn from_requests(videos: usize, exponent: f64, requests: Vec<usize>, seed: u64) -> PyResult<Self> {
        model::Demand::from_requests(videos, exponent, requests, seed).py().map(Self)
    }

    #[staticmethod]
    fn from_tsv(text: &str) -> PyResult<Self> {
        vio::read_demand(text.as_bytes()).py().map(Self)
    }

    fn to_tsv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        vio::write_demand(&mut buf, &self.0).py()?;
        Ok(String::from_utf8(buf).expect("ascii output"))
    }

    #[getter]
    fn num_videos(&self) -> usize {
        self.0.num_videos
    }

    #[getter]
    fn num_peers(&self) -> usize {
        self.0.num_peers()
    }

    #[getter]
    fn zipf_exponent(&self) -> f64 {
        self.0.zipf_exponent
    }

    #[getter]
    fn popularity(&self) -> Vec<f64> {
        self.0.popularity.clone()
    }

    #[getter]
    fn requests(&self) -> Vec<usize> {
        self.0.requests.clone()
    }

    fn request_counts(&self) -> Vec<usize> {
        self.0.request_counts()
    }

    fn requesters(&self) -> Vec<Vec<usize>> {
        self.0.requesters()
    }

    fn __repr__(&self) -> String {
        format!(
            "Demand(videos={}, exponent={}, peers={}, seed={})",
            self.0.num_videos,
            self.0.zipf_exponent,
            self.0.num_peers(),
            self.0.seed
        )
    }
}

#[pyclass(name = "Placement", module = "pyvodcache", skip_from_py_object)]
#[derive(Clone)]
struct PyPlacement(model::Placement);

#[pymethods]
impl PyPlacement {
    #[new]
    #[pyo3(signature = (caches, videos, whole=false))]
    fn new(caches: usize, videos: usize, whole: bool) -> Self {
        let mode = if whole { StorageMode::Whole } else { StorageMode::Fractional };
        Self(model::Placement::empty(caches, videos, mode))
    }

    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        vio::read_placement(text.as_bytes()).py().map(|(_, p)| Self(p))
    }

    fn to_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        vio::write_placement(&mut buf, &self.0, &vio::Header::new("")).py()?;
        Ok(String::from_utf8(buf).expect("ascii output"))
    }

    #[getter]
    fn num_caches(&self) -> usize {
        self.0.num_caches
    }

    #[getter]
    fn num_videos(&self) -> usize {
        self.0.num_videos
    }

    #[getter]
    fn whole(&self) -> bool {
        self.0.mode == StorageMode::Whole
    }

    fn get(&self, cache: usize, video: usize) -> PyResult<f64> {
        if cache >= self.0.num_caches || video >= self.0.num_videos {
            return Err(PyValueError::new_err("index out of range"));
        }
        Ok(self.0.get(cache, video))
    }

    fn set(&mut self, cache: usize, video: usize, fraction: f64) -> PyResult<()> {
        if cache >= self.0.num_caches || video >= self.0.num_videos {
            return Err(PyValueError::new_err("index out of range"));
        }
        self.0.set(cache, video, fraction).py()
    }

    /// Copies per video (sum of stored fractions).
    fn copies(&self) -> Vec<f64> {
        self.0.copies()
    }

    fn cache_loads(&self) -> Vec<f64> {
        self.0.cache_loads()
    }

    fn total(&self) -> f64 {
        self.0.total()
    }

    /// Nonzero `(video, cache, fraction)` entries.
    fn entries(&self) -> Vec<(usize, usize, f64)> {
        self.0.entries()
    }

    fn __repr__(&self) -> String {
        format!(
            "Placement(caches={}, videos={}, whole={}, total={})",
            self.0.num_caches,
            self.0.num_videos,
            self.whole(),
            self.0.total()
        )
    }
}

/// Served rate of a placement on a realized system.
#[pyclass(name = "Evaluation", module = "pyvodcache", frozen, get_all)]
struct PyEvaluation {
    total: f64,
    per_video: Vec<f64>,
    expected_total: f64,
}

impl From<allocate::Evaluation> for PyEvaluation {
    fn from(e: allocate::Evaluation) -> Self {
        Self {
            total: e.total,
            per_video: e.per_video,
            expected_total: e.expected_total,
        }
    }
}

#[pymethods]
impl PyEvaluation {
    fn __repr__(&self) -> String {
        format!("Evaluation(total={}, expected_total={})", self.total, self.expected_total)
    }
}

/// Result of one multi-video placement strategy.
#[pyclass(name = "RunResult", module = "pyvodcache", frozen, get_all)]
struct PyRunResult {
    strategy: String,
    served: f64,
    served_expected: f64,
    estimate: f64,
    copies: Vec<f64>,
    /// Policy name per video for hybrid strategies, else None.
    policies: Option<Vec<String>>,
    converged: bool,
    seconds: f64,
    placement: PyPlacement,
    /// `(hull_value, achieved, last_gap)` for the hull-based hybrid.
    certificate: Option<(f64, f64, f64)>,
}

#[pymethods]
impl PyRunResult {
    fn __repr__(&self) -> String {
        format!("RunResult(strategy={}, served={})", self.strategy, self.served)
    }
}

#[pyclass(name = "System", module = "pyvodcache", frozen)]
struct PySystem(experiment::System);

#[pymethods]
impl PySystem {
    /// Defaults are the 50-cache, 40 000-peer, 2000-video reference system.
    #[new]
    #[pyo3(signature = (caches=50, peers=40_000, degree=4, videos=2000, zipf=0.8, budget=5000.0, seed=1))]
    fn new(caches: usize, peers: usize, degree: usize, videos: usize, zipf: f64, budget: f64, seed: u64) -> PyResult<Self> {
        let params = SystemParams {
            caches,
            peers,
            degree,
            videos,
            zipf_exponent: zipf,
            budget,
        };
        experiment::System::generate(params, seed).py().map(Self)
    }

    #[getter]
    fn topology(&self) -> PyTopology {
        PyTopology(self.0.topology.clone())
    }

    #[getter]
    fn demand(&self) -> PyDemand {
        PyDemand(self.0.demand.clone())
    }

    #[getter]
    fn budget(&self) -> f64 {
        self.0.params.budget
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.0.seed
    }

    /// Runs `strategy`: one of fw, ff, aw, af, hybrid (or the long names).
    /// `hybrid_threshold` switches hybrid to a fixed popularity cut.
    #[pyo3(signature = (strategy, balance=true, hybrid_threshold=None, max_iters=None, time_limit=None))]
    fn run(
        &self,
        py: Python<'_>,
        strategy: &str,
        balance: bool,
        hybrid_threshold: Option<usize>,
        max_iters: Option<usize>,
        time_limit: Option<f64>,
    ) -> PyResult<PyRunResult> {
        let mut strategy: Strategy = strategy.parse().py()?;
        if let Some(n) = hybrid_threshold {
            if strategy != Strategy::Hybrid {
                return Err(PyValueError::new_err("hybrid_threshold needs the hybrid strategy"));
            }
            strategy = Strategy::HybridThreshold(n);
        }
        let mut options = RunOptions::for_system(&self.0.params);
        options.balance = balance;
        if let Some(n) = max_iters {
            options.solver.max_iters = n;
        }
        if let Some(t) = time_limit {
            options.time_budget = Some(Duration::from_secs_f64(t));
        }
        let system = &self.0;
        let run = py.detach(|| experiment::run_strategy(system, strategy, &options)).py()?;
        let a = &run.allocation;
        Ok(PyRunResult {
            strategy: strategy.to_string(),
            served: run.evaluation.total,
            served_expected: run.evaluation.expected_total,
            estimate: a.objective,
            copies: a.copies.clone(),
            policies: a.policy.as_ref().map(|p| p.iter().map(Policy::to_string).collect()),
            converged: a.converged,
            seconds: run.elapsed.as_secs_f64(),
            placement: PyPlacement(a.placement.clone().expect("run_strategy always places")),
            certificate: run
                .hybrid
                .as_ref()
                .map(|h| (h.certificate.hull_value, h.certificate.achieved, h.certificate.last_gap)),
        })
    }
}

#[pyfunction]
fn zipf_popularity(videos: usize, exponent: f64) -> PyResult<Vec<f64>> {
    model::zipf_popularity(videos, exponent).py()
}

fn check_grid(caches: usize, degree: usize, copies: f64) -> PyResult<()> {
    if degree == 0 || degree > caches || !(0.0..=caches as f64).contains(&copies) {
        return Err(PyValueError::new_err(format!(
            "need 1 <= degree <= caches and 0 <= copies <= caches (caches={caches}, degree={degree}, copies={copies})"
        )));
    }
    Ok(())
}

#[pyfunction]
fn pmiss_exact(caches: usize, degree: usize, copies: usize) -> PyResult<f64> {
    check_grid(caches, degree, copies as f64)?;
    Ok(analytic::pmiss_exact(caches, degree, copies))
}

#[pyfunction]
fn pmiss_randomized(caches: usize, degree: usize, copies: f64) -> PyResult<f64> {
    check_grid(caches, degree, copies)?;
    Ok(analytic::pmiss_randomized(caches, degree, copies))
}

#[pyfunction]
fn pmiss_bound(caches: usize, degree: usize, copies: f64) -> PyResult<f64> {
    check_grid(caches, degree, copies)?;
    Ok(analytic::pmiss_bound(caches, degree, copies))
}

#[pyfunction]
fn fw_curve(caches: usize, degree: usize, requesters: f64, copies: f64) -> PyResult<f64> {
    check_grid(caches, degree, copies)?;
    Ok(analytic::fw_curve(caches, degree, requesters, copies))
}

#[pyfunction]
fn ff_curve(caches: usize, degree: usize, requesters: f64, copies: f64) -> PyResult<f64> {
    check_grid(caches, degree, copies)?;
    Ok(analytic::ff_curve(caches, degree, requesters, copies))
}

#[pyfunction]
fn aw_upper_bound(caches: usize, degree: usize, requesters: usize, copies: usize) -> PyResult<f64> {
    check_grid(caches, degree, copies as f64)?;
    Ok(analytic::aw_upper_bound(caches, degree, requesters, copies))
}

/// Returns `(alpha per video, lagrange multiplier, bisection iterations)`.
#[pyfunction]
fn optimize_alpha(popularity: Vec<f64>, degree: usize, per_cache: f64) -> PyResult<(Vec<f64>, f64, usize)> {
    let s = analytic::optimize_alpha(&popularity, degree, per_cache).py()?;
    Ok((s.alpha, s.lagrange, s.iterations))
}

#[pyfunction]
fn dependent_rounding(alpha: Vec<f64>, caches: usize, seed: u64) -> PyResult<Vec<usize>> {
    analytic::dependent_rounding(&alpha, caches, seed).py()
}

/// Returns `(chosen caches, gain of each)`.
#[pyfunction]
fn greedy_peel(topology: &PyTopology, requesters: Vec<usize>, copies: usize) -> PyResult<(Vec<usize>, Vec<usize>)> {
    if requesters.iter().any(|&u| u >= topology.0.num_peers) {
        return Err(PyValueError::new_err("requester outside the topology"));
    }
    let peel = adaptive::greedy_peel(&topology.0, &requesters, copies);
    Ok((peel.caches, peel.gains))
}

#[pyfunction]
fn exact_cover(topology: &PyTopology, requesters: Vec<usize>, copies: usize) -> PyResult<usize> {
    if requesters.iter().any(|&u| u >= topology.0.num_peers) {
        return Err(PyValueError::new_err("requester outside the topology"));
    }
    adaptive::exact_cover(&topology.0, &requesters, copies).py()
}

/// Returns `(hull values, max gap, where the gap occurs)`.
#[pyfunction]
fn concave_hull(values: Vec<f64>) -> (Vec<f64>, f64, usize) {
    let h = allocate::concave_hull(&values);
    (h.values, h.gap, h.gap_at)
}

/// Greedy split of `budget` unit copies over concave per-video curves
/// sampled at whole copies. Returns copies per video.
#[pyfunction]
fn greedy_allocate(curves: Vec<Vec<f64>>, budget: f64) -> PyResult<Vec<f64>> {
    let curves: Vec<_> = curves
        .into_iter()
        .enumerate()
        .map(|(m, values)| {
            let len = values.len().saturating_sub(1);
            allocate::ServiceCurve {
                video: m,
                policy: Policy::AdaptiveWhole,
                step: 1.0,
                values,
                provenance: allocate::Provenance::Realized,
                capacity_units: len,
            }
        })
        .collect();
    if curves.iter().any(|c| c.values.is_empty()) {
        return Err(PyValueError::new_err("every curve needs at least its value at zero copies"));
    }
    allocate::greedy_allocate(&curves, budget).py().map(|r| r.copies)
}

#[pyfunction]
fn evaluate_placement(topology: &PyTopology, demand: &PyDemand, placement: &PyPlacement) -> PyResult<PyEvaluation> {
    allocate::evaluate_placement(&topology.0, &demand.0, &placement.0)
        .py()
        .map(Into::into)
}

/// Rows of `(copies, fw, fw_bound, ff, aw_mean, aw_bound)` for one video.
#[pyfunction]
#[pyo3(signature = (caches, degree, requesters, replications=200, seed=1))]
fn single_video_curves(
    py: Python<'_>,
    caches: usize,
    degree: usize,
    requesters: usize,
    replications: usize,
    seed: u64,
) -> PyResult<Vec<(usize, f64, f64, f64, f64, f64)>> {
    let pts = py
        .detach(|| experiment::single_video_curves(caches, degree, requesters, replications, seed))
        .py()?;
    Ok(pts
        .into_iter()
        .map(|p| {
            (
                p.copies,
                p.fixed_whole,
                p.fixed_whole_bound,
                p.fixed_fractional,
                p.adaptive_whole_mean,
                p.adaptive_whole_bound,
            )
        })
        .collect())
}

#[pymodule]
fn pyvodcache(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTopology>()?;
    m.add_class::<PyDemand>()?;
    m.add_class::<PyPlacement>()?;
    m.add_class::<PyEvaluation>()?;
    m.add_class::<PyRunResult>()?;
    m.add_class::<PySystem>()?;
    m.add_function(wrap_pyfunction!(zipf_popularity, m)?)?;
    m.add_function(wrap_pyfunction!(pmiss_exact, m)?)?;
    m.add_function(wrap_pyfunction!(pmiss_randomized, m)?)?;
    m.add_function(wrap_pyfunction!(pmiss_bound, m)?)?;
    m.add_function(wrap_pyfunction!(fw_curve, m)?)?;
    m.add_function(wrap_pyfunction!(ff_curve, m)?)?;
    m.add_function(wrap_pyfunction!(aw_upper_bound, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_alpha, m)?)?;
    m.add_function(wrap_pyfunction!(dependent_rounding, m)?)?;
    m.add_function(wrap_pyfunction!(greedy_peel, m)?)?;
    m.add_function(wrap_pyfunction!(exact_cover, m)?)?;
    m.add_function(wrap_pyfunction!(concave_hull, m)?)?;
    m.add_function(wrap_pyfunction!(greedy_allocate, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_placement, m)?)?;
    m.add_function(wrap_pyfunction!(single_video_curves, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
