//! Python bindings for the knotrho library.
//!
//! Exposes the two curve types (`Knot`, `Smoothed`) and module-level
//! functions for the estimators (`rho`, `oracle_rho`, `delta_rho`),
//! lattice reduction, and the invariant arithmetic. Long-running
//! estimators release the GIL.

// The argument-extraction glue generated by #[pyfunction] trips this lint.
#![allow(clippy::useless_conversion)]

use pyo3::exceptions::{PyTypeError, PyValueError};
use pyo3::prelude::*;

use knotrho::{
    delta, invariant, knot, mc, oracle, reduce, smooth, DiscreteKnot, EpsilonSpec, GenKind,
    SamplerConfig, SmoothedKnot, V3,
};

type Triple = (f64, f64, f64);

fn pe<T>(r: knotrho::Result<T>) -> PyResult<T> {
    r.map_err(|e| PyValueError::new_err(e.to_string()))
}

fn tup(v: V3) -> Triple {
    (v.x, v.y, v.z)
}

fn epsilon_spec(rel: Option<f64>, abs: Option<f64>) -> PyResult<EpsilonSpec> {
    match (rel, abs) {
        (Some(_), Some(_)) => {
            Err(PyValueError::new_err("pass epsilon_rel or epsilon_abs, not both"))
        }
        (Some(r), None) => Ok(EpsilonSpec::Relative(r)),
        (None, Some(a)) => Ok(EpsilonSpec::Absolute(a)),
        (None, None) => Ok(EpsilonSpec::default()),
    }
}

/// Either curve type, extracted by value so the GIL can be released.
enum AnyCurve {
    Raw(DiscreteKnot),
    Smoothed(SmoothedKnot),
}

impl AnyCurve {
    fn extract(obj: &Bound<'_, PyAny>) -> PyResult<Self> {
        if let Ok(k) = obj.downcast::<Knot>() {
            return Ok(AnyCurve::Raw(k.borrow().inner.clone()));
        }
        if let Ok(s) = obj.downcast::<Smoothed>() {
            return Ok(AnyCurve::Smoothed(s.borrow().inner.clone()));
        }
        Err(PyTypeError::new_err("expected a Knot or a Smoothed curve"))
    }
}

/// A closed polygonal space curve.
#[pyclass]
struct Knot {
    inner: DiscreteKnot,
}

#[pymethods]
impl Knot {
    #[new]
    #[pyo3(signature = (vertices, name = None))]
    fn new(vertices: Vec<[f64; 3]>, name: Option<String>) -> PyResult<Self> {
        let verts = vertices.into_iter().map(V3::from).collect();
        Ok(Knot { inner: pe(DiscreteKnot::new(verts, name))? })
    }

    #[staticmethod]
    #[pyo3(signature = (text, name = None))]
    fn parse_text(text: &str, name: Option<String>) -> PyResult<Self> {
        Ok(Knot { inner: pe(knot::parse_knot_text(text, name))? })
    }

    #[staticmethod]
    fn parse_json(text: &str) -> PyResult<Self> {
        Ok(Knot { inner: pe(knot::parse_knot_json(text))? })
    }

    /// Load a `.knot` or `.json` file.
    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        Ok(Knot { inner: pe(knot::load_knot(&path))? })
    }

    /// One of the built-in catalog knots, by name.
    #[staticmethod]
    fn shipped(name: &str) -> PyResult<Self> {
        Ok(Knot { inner: pe(knot::shipped(name))? })
    }

    /// Regular m-gon of radius 1 in the z = 0 plane.
    #[staticmethod]
    fn circle(m: usize) -> PyResult<Self> {
        Ok(Knot { inner: pe(knot::generate(&GenKind::Circle { m }))? })
    }

    /// Unit square unknot on the lattice.
    #[staticmethod]
    fn square() -> PyResult<Self> {
        Ok(Knot { inner: pe(knot::generate(&GenKind::Square))? })
    }

    /// (p, q) torus knot with m vertices.
    #[staticmethod]
    fn torus(p: u32, q: u32, m: usize) -> PyResult<Self> {
        Ok(Knot { inner: pe(knot::generate(&GenKind::Torus { p, q, m }))? })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    #[getter]
    fn total_length(&self) -> f64 {
        self.inner.total_length()
    }

    #[getter]
    fn min_segment_length(&self) -> f64 {
        self.inner.min_segment_length()
    }

    #[getter]
    fn is_cubic_lattice(&self) -> bool {
        self.inner.is_cubic_lattice()
    }

    #[getter]
    fn vertices(&self) -> Vec<Triple> {
        self.inner.vertices().iter().map(|&v| tup(v)).collect()
    }

    fn to_text(&self) -> String {
        knot::knot_to_text(&self.inner)
    }

    fn to_json(&self) -> PyResult<String> {
        pe(knot::knot_to_json(&self.inner))
    }

    fn save(&self, path: std::path::PathBuf) -> PyResult<()> {
        pe(knot::save_knot(&self.inner, &path))
    }

    /// Uniformly rescale all vertices by eta.
    fn rescale(&self, eta: f64) -> PyResult<Self> {
        Ok(Knot { inner: pe(self.inner.rescale(eta))? })
    }

    /// Point on the polygon at arc parameter s in [0, n).
    fn point_at(&self, s: f64) -> PyResult<Triple> {
        Ok(tup(pe(self.inner.point_at(s))?))
    }

    fn tangent_at(&self, s: f64) -> PyResult<Triple> {
        Ok(tup(pe(self.inner.tangent_at(s))?))
    }

    /// Replace each corner with a tangent-matched circular arc.
    fn smooth(&self) -> PyResult<Smoothed> {
        Ok(Smoothed { inner: pe(SmoothedKnot::new(self.inner.clone()))? })
    }

    fn __len__(&self) -> usize {
        self.inner.n()
    }

    fn __repr__(&self) -> String {
        format!("Knot(name={:?}, n={})", self.inner.name(), self.inner.n())
    }
}

/// A corner-smoothed curve: straight trunks joined by circular arcs.
#[pyclass]
struct Smoothed {
    inner: SmoothedKnot,
}

#[pymethods]
impl Smoothed {
    #[getter]
    fn n(&self) -> usize {
        self.inner.base().n()
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.base().name().to_string()
    }

    /// The polygon this curve was built from.
    #[getter]
    fn base(&self) -> Knot {
        Knot { inner: self.inner.base().clone() }
    }

    /// Arc radius at each corner (0 where the corner was left straight).
    #[getter]
    fn corner_radii(&self) -> Vec<f64> {
        let plan = self.inner.plan();
        (0..self.inner.base().n()).map(|j| plan.corners[j].radius()).collect()
    }

    /// Position and tangent at parameter s; the tangent is unnormalized.
    fn eval(&self, s: f64) -> PyResult<(Triple, Triple)> {
        let (p, t) = pe(self.inner.sample_smoothed(s))?;
        Ok((tup(p), tup(t)))
    }

    fn __repr__(&self) -> String {
        format!("Smoothed(name={:?}, n={})", self.inner.base().name(), self.inner.base().n())
    }
}

/// Monte Carlo estimate of the combined invariant.
#[pyclass(frozen, get_all)]
struct RhoResult {
    rho: f64,
    stderr: f64,
    rho1: f64,
    rho1_stderr: f64,
    rho2: f64,
    rho2_stderr: f64,
    a2: f64,
    n_total: u64,
    hit_threshold: bool,
}

#[pymethods]
impl RhoResult {
    fn __repr__(&self) -> String {
        format!("RhoResult(rho={}, stderr={}, n_total={})", self.rho, self.stderr, self.n_total)
    }
}

#[pyclass(frozen, get_all)]
struct OracleResult {
    rho1: f64,
    rho2: f64,
    rho: f64,
    m: usize,
}

#[pymethods]
impl OracleResult {
    fn __repr__(&self) -> String {
        format!("OracleResult(rho={}, m={})", self.rho, self.m)
    }
}

#[pyclass(frozen, get_all)]
struct ReductionReport {
    n_before: usize,
    n_after: usize,
    tadpoles: usize,
    two_segment: usize,
    three_segment: usize,
    merged_parallel: usize,
    passes: usize,
    rewrites: usize,
}

#[pymethods]
impl ReductionReport {
    fn __repr__(&self) -> String {
        format!(
            "ReductionReport(n_before={}, n_after={}, rewrites={}, passes={})",
            self.n_before, self.n_after, self.rewrites, self.passes
        )
    }
}

/// Estimated invariant shift for a localized deformation.
#[pyclass(frozen, get_all)]
struct DeltaResult {
    mean: f64,
    stderr: f64,
    n_used: u64,
    verdict: String,
    declared_range: (usize, usize),
    effective_range: (usize, usize),
}

#[pymethods]
impl DeltaResult {
    fn __repr__(&self) -> String {
        format!(
            "DeltaResult(mean={}, stderr={}, verdict={:?})",
            self.mean, self.stderr, self.verdict
        )
    }
}

fn sampler_config(
    n: u64,
    seed: u64,
    epsilon_rel: Option<f64>,
    epsilon_abs: Option<f64>,
    workers: Option<usize>,
    rho1_fraction: Option<f64>,
    threshold_sigma: Option<f64>,
) -> PyResult<SamplerConfig> {
    let mut cfg = SamplerConfig {
        n,
        seed,
        epsilon: epsilon_spec(epsilon_rel, epsilon_abs)?,
        workers,
        rho1_fraction,
        ..SamplerConfig::default()
    };
    if let Some(t) = threshold_sigma {
        cfg.threshold_sigma = t;
    }
    pe(cfg.validate())?;
    Ok(cfg)
}

/// Monte Carlo estimate of rho for a raw or smoothed curve.
#[pyfunction]
#[pyo3(signature = (curve, n = 1_000_000, seed = 1, epsilon_rel = None, epsilon_abs = None,
                    workers = None, rho1_fraction = None, threshold_sigma = None))]
#[allow(clippy::too_many_arguments)]
fn rho(
    py: Python<'_>,
    curve: &Bound<'_, PyAny>,
    n: u64,
    seed: u64,
    epsilon_rel: Option<f64>,
    epsilon_abs: Option<f64>,
    workers: Option<usize>,
    rho1_fraction: Option<f64>,
    threshold_sigma: Option<f64>,
) -> PyResult<RhoResult> {
    let curve = AnyCurve::extract(curve)?;
    let cfg =
        sampler_config(n, seed, epsilon_rel, epsilon_abs, workers, rho1_fraction, threshold_sigma)?;
    let est = py.allow_threads(|| match &curve {
        AnyCurve::Raw(k) => mc::rho(k, &cfg),
        AnyCurve::Smoothed(s) => mc::rho(s, &cfg),
    });
    let est = pe(est)?;
    Ok(RhoResult {
        rho: est.mean(),
        stderr: est.stderr(),
        rho1: est.rho1.mean,
        rho1_stderr: est.rho1.stderr,
        rho2: est.rho2.mean,
        rho2_stderr: est.rho2.stderr,
        a2: est.a2(),
        n_total: est.n_total(),
        hit_threshold: est.hit_threshold,
    })
}

/// Deterministic midpoint-quadrature reference on a grid of q points
/// per unit parameter.
#[pyfunction]
#[pyo3(signature = (curve, q = 4, cap = 512, epsilon_rel = None, epsilon_abs = None))]
fn oracle_rho(
    py: Python<'_>,
    curve: &Bound<'_, PyAny>,
    q: usize,
    cap: usize,
    epsilon_rel: Option<f64>,
    epsilon_abs: Option<f64>,
) -> PyResult<OracleResult> {
    let curve = AnyCurve::extract(curve)?;
    let spec =
        oracle::QuadratureSpec { q, cap, epsilon: epsilon_spec(epsilon_rel, epsilon_abs)? };
    let res = py.allow_threads(|| match &curve {
        AnyCurve::Raw(k) => oracle::oracle_rho(k, &spec),
        AnyCurve::Smoothed(s) => oracle::oracle_rho(s, &spec),
    });
    let res = pe(res)?;
    Ok(OracleResult { rho1: res.rho1, rho2: res.rho2, rho: res.rho, m: res.m })
}

/// Shrink a cubic-lattice knot with knot-type-preserving rewrites.
#[pyfunction]
fn reduce_lattice(knot: &Knot) -> PyResult<(Knot, ReductionReport)> {
    let (reduced, rep) = pe(reduce::reduce_lattice(&knot.inner))?;
    Ok((
        Knot { inner: reduced },
        ReductionReport {
            n_before: rep.n_before,
            n_after: rep.n_after,
            tadpoles: rep.tadpoles,
            two_segment: rep.two_segment,
            three_segment: rep.three_segment,
            merged_parallel: rep.merged_parallel,
            passes: rep.passes,
            rewrites: rep.rewrites(),
        },
    ))
}

/// Estimate the invariant shift between two knots that differ only in
/// k segments starting at `start`, and classify the outcome.
#[pyfunction]
#[pyo3(signature = (reference, transformed, start, k, n = 1_000_000, seed = 1,
                    epsilon_rel = None, epsilon_abs = None, workers = None))]
#[allow(clippy::too_many_arguments)]
fn delta_rho(
    py: Python<'_>,
    reference: &Knot,
    transformed: &Knot,
    start: usize,
    k: usize,
    n: u64,
    seed: u64,
    epsilon_rel: Option<f64>,
    epsilon_abs: Option<f64>,
    workers: Option<usize>,
) -> PyResult<DeltaResult> {
    let def = pe(delta::Deformation::new(
        reference.inner.clone(),
        transformed.inner.clone(),
        start,
        k,
    ))?;
    let cfg = sampler_config(n, seed, epsilon_rel, epsilon_abs, workers, None, None)?;
    let est = pe(py.allow_threads(|| delta::delta_rho(&def, &cfg)))?;
    Ok(DeltaResult {
        mean: est.mean,
        stderr: est.stderr,
        n_used: est.n_used,
        verdict: delta::classify(&est).to_string(),
        declared_range: def.declared_range(),
        effective_range: def.effective_range(),
    })
}

/// Conway coefficient a2 from rho.
#[pyfunction]
fn conway_a2(rho: f64) -> f64 {
    invariant::conway_a2(rho)
}

/// Invert conway_a2.
#[pyfunction]
fn rho_from_a2(a2: f64) -> f64 {
    invariant::rho_from_a2(a2)
}

/// Analytic rho for a catalog knot class, or None if unknown.
#[pyfunction]
fn analytic_rho(name: &str) -> Option<f64> {
    invariant::analytic_rho(name)
}

/// Nearest catalog class for an estimated rho: (name, distance).
#[pyfunction]
fn nearest_class(rho: f64) -> (String, f64) {
    let (class, dist) = invariant::nearest_class(rho);
    (class.name.to_string(), dist)
}

/// Volume of ordered 4-tuples in [0, n] with at least one coordinate
/// inside a range of length k.
#[pyfunction]
fn s_k(n: u64, k: u64) -> PyResult<f64> {
    pe(delta::s_k(n, k))
}

/// Names of the built-in catalog knots.
#[pyfunction]
fn shipped_names() -> Vec<&'static str> {
    knot::shipped_names()
}

/// Largest corner rounding radius allowed at each vertex, as planned
/// by the smoothing pass; useful for inspecting tight geometry.
#[pyfunction]
fn corner_plan(knot: &Knot) -> PyResult<Vec<(f64, f64)>> {
    let plan = pe(smooth::plan_corners(&knot.inner))?;
    Ok(plan.corners.iter().map(|c| (c.d_in, c.d_out)).collect())
}

#[pymodule]
#[pyo3(name = "knotrho")]
fn knotrho_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Knot>()?;
    m.add_class::<Smoothed>()?;
    m.add_class::<RhoResult>()?;
    m.add_class::<OracleResult>()?;
    m.add_class::<ReductionReport>()?;
    m.add_class::<DeltaResult>()?;
    m.add_function(wrap_pyfunction!(rho, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_rho, m)?)?;
    m.add_function(wrap_pyfunction!(reduce_lattice, m)?)?;
    m.add_function(wrap_pyfunction!(delta_rho, m)?)?;
    m.add_function(wrap_pyfunction!(conway_a2, m)?)?;
    m.add_function(wrap_pyfunction!(rho_from_a2, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_rho, m)?)?;
    m.add_function(wrap_pyfunction!(nearest_class, m)?)?;
    m.add_function(wrap_pyfunction!(s_k, m)?)?;
    m.add_function(wrap_pyfunction!(shipped_names, m)?)?;
    m.add_function(wrap_pyfunction!(corner_plan, m)?)?;
    Ok(())
}
