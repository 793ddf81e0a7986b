use std::f64::consts::TAU;

use flatspace::groups::{GroupElement, GroupSpec};
use flatspace::markov::{self, ChainSampler, MappedConfiguration, MarkovRatio, ReversibleChain, TargetSpace};
use flatspace::metric::{self, ScaleFactor};
use flatspace::numeric::euclidean;
use flatspace::quotient::{self, DiagonalQuotientPoint, FiniteIsometryGroup, LatticeShiftAction};
use flatspace::tower::{self, TowerConfig};
use flatspace::transport::{self, DiscreteMeasure, TuplePoint};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

create_exception!(flatspace, FlatspaceError, PyValueError);

fn err(e: flatspace::Error) -> PyErr {
    FlatspaceError::new_err(e.to_string())
}

fn json_err(e: serde_json::Error) -> PyErr {
    FlatspaceError::new_err(e.to_string())
}

fn metric(a: &Vec<f64>, b: &Vec<f64>) -> f64 {
    euclidean(a, b)
}

/// A finite metric space with a validated distance matrix.
#[pyclass(name = "FiniteMetricSpace", module = "flatspace", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyFiniteMetricSpace {
    inner: metric::FiniteMetricSpace,
}

#[pymethods]
impl PyFiniteMetricSpace {
    #[new]
    #[pyo3(signature = (matrix, labels=None))]
    fn new(matrix: Vec<Vec<f64>>, labels: Option<Vec<String>>) -> PyResult<Self> {
        let inner = match labels {
            Some(labels) => metric::FiniteMetricSpace::new(labels, matrix),
            None => metric::FiniteMetricSpace::from_matrix(matrix),
        }
        .map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: metric::FiniteMetricSpace::from_json(text).map_err(err)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn distance(&self, i: usize, j: usize) -> PyResult<f64> {
        if i >= self.inner.len() || j >= self.inner.len() {
            return Err(FlatspaceError::new_err(format!("index out of range for {} points", self.inner.len())));
        }
        Ok(self.inner.distance(i, j))
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.labels().to_vec()
    }

    #[getter]
    fn matrix(&self) -> Vec<Vec<f64>> {
        self.inner.matrix().to_vec()
    }

    fn diameter(&self) -> f64 {
        self.inner.diameter()
    }

    fn scaled(&self, factor: f64) -> PyResult<Self> {
        let factor = ScaleFactor::new(factor).map_err(err)?;
        Ok(Self {
            inner: metric::scale_space(&self.inner, factor).map_err(err)?,
        })
    }

    fn product(&self, other: &Self) -> PyResult<Self> {
        Ok(Self {
            inner: metric::product_space(&self.inner, &other.inner).map_err(err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!("FiniteMetricSpace({} points)", self.inner.len())
    }
}

/// A compact group with a bi-invariant metric. Elements are passed as flat
/// coordinates: angles for tori, unit quaternions for SU(2).
#[pyclass(name = "Group", module = "flatspace", frozen, from_py_object)]
#[derive(Clone)]
struct PyGroup {
    spec: GroupSpec,
}

impl PyGroup {
    fn element(&self, coords: &[f64]) -> PyResult<GroupElement> {
        self.spec.element_from_coordinates(coords).map_err(err)
    }

    fn coords(&self, g: &GroupElement) -> PyResult<Vec<f64>> {
        self.spec.to_coordinates(g).map_err(err)
    }
}

#[pymethods]
impl PyGroup {
    #[staticmethod]
    #[pyo3(signature = (circumference=TAU))]
    fn circle(circumference: f64) -> PyResult<Self> {
        Ok(Self {
            spec: GroupSpec::circle(circumference).map_err(err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (dims, circumference=TAU))]
    fn torus(dims: usize, circumference: f64) -> PyResult<Self> {
        Ok(Self {
            spec: GroupSpec::torus(dims, circumference).map_err(err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (radius=1.0))]
    fn su2(radius: f64) -> PyResult<Self> {
        Ok(Self {
            spec: GroupSpec::su2(radius).map_err(err)?,
        })
    }

    #[staticmethod]
    fn product(factors: Vec<PyGroup>) -> PyResult<Self> {
        Ok(Self {
            spec: GroupSpec::product(factors.into_iter().map(|g| g.spec).collect()).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            spec: serde_json::from_str(text).map_err(json_err)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.spec).map_err(json_err)
    }

    fn scaled(&self, factor: f64) -> PyResult<Self> {
        Ok(Self {
            spec: GroupSpec::scaled(self.spec.clone(), factor).map_err(err)?,
        })
    }

    fn identity(&self) -> PyResult<Vec<f64>> {
        self.coords(&self.spec.identity())
    }

    fn compose(&self, a: Vec<f64>, b: Vec<f64>) -> PyResult<Vec<f64>> {
        let c = self.spec.compose(&self.element(&a)?, &self.element(&b)?).map_err(err)?;
        self.coords(&c)
    }

    fn inverse(&self, a: Vec<f64>) -> PyResult<Vec<f64>> {
        let c = self.spec.inverse(&self.element(&a)?).map_err(err)?;
        self.coords(&c)
    }

    fn distance(&self, a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
        self.spec.distance(&self.element(&a)?, &self.element(&b)?).map_err(err)
    }

    fn embed(&self, a: Vec<f64>) -> PyResult<Vec<f64>> {
        self.spec.embed(&self.element(&a)?).map_err(err)
    }

    fn embed_inverse(&self, p: Vec<f64>) -> PyResult<Vec<f64>> {
        let g = self.spec.embed_inverse(&p).map_err(err)?;
        self.coords(&g)
    }

    /// `n` seeded random elements.
    fn random(&self, n: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| self.coords(&self.spec.random_element(&mut r))).collect()
    }

    /// Net elements and their covering radius.
    #[pyo3(signature = (q, seed=None))]
    fn net(&self, q: usize, seed: Option<u64>) -> PyResult<(Vec<Vec<f64>>, f64)> {
        let net = match seed {
            Some(s) => self.spec.net_with_seed(q, s),
            None => self.spec.net(q),
        }
        .map_err(err)?;
        let coords = net.elements.iter().map(|g| self.coords(g)).collect::<PyResult<_>>()?;
        Ok((coords, net.mesh))
    }

    fn local_embedding_distortion(&self, threshold: f64) -> PyResult<f64> {
        self.spec.local_embedding_distortion(threshold).map_err(err)
    }

    fn diameter(&self) -> f64 {
        self.spec.diameter()
    }

    fn __repr__(&self) -> String {
        format!(
            "Group({})",
            serde_json::to_string(&self.spec).unwrap_or_else(|_| "?".into())
        )
    }
}

/// Optimal permutation and total cost of a square cost matrix.
#[pyfunction]
fn solve_assignment(cost: Vec<Vec<f64>>) -> PyResult<(Vec<usize>, f64)> {
    let a = transport::solve_assignment(&cost).map_err(err)?;
    Ok((a.permutation, a.cost))
}

/// Exact 2-Wasserstein distance between discrete measures on Euclidean space.
#[pyfunction]
fn w2_discrete(
    atoms_a: Vec<Vec<f64>>,
    weights_a: Vec<f64>,
    atoms_b: Vec<Vec<f64>>,
    weights_b: Vec<f64>,
) -> PyResult<f64> {
    let mu = DiscreteMeasure::new(atoms_a, weights_a).map_err(err)?;
    let nu = DiscreteMeasure::new(atoms_b, weights_b).map_err(err)?;
    Ok(transport::w2_discrete(&mu, &nu, metric).map_err(err)?.distance)
}

/// Distance between tuples of Euclidean points up to reordering.
#[pyfunction]
#[pyo3(signature = (x, y, normalized=false))]
fn perm_quotient_distance(x: Vec<Vec<f64>>, y: Vec<Vec<f64>>, normalized: bool) -> PyResult<f64> {
    let x = TuplePoint::new(x).map_err(err)?;
    let y = TuplePoint::new(y).map_err(err)?;
    if normalized {
        transport::normalized_perm_quotient_distance(&x, &y, metric).map_err(err)
    } else {
        transport::perm_quotient_distance(&x, &y, metric).map_err(err)
    }
}

/// `min_g |x − g y|` over the group generated by coordinate permutations.
#[pyfunction]
fn euclidean_quotient_distance(x: Vec<f64>, y: Vec<f64>, permutations: Vec<Vec<usize>>) -> PyResult<f64> {
    let g = FiniteIsometryGroup::from_permutations(&permutations).map_err(err)?;
    quotient::euclidean_quotient_distance(&x, &y, &g).map_err(err)
}

/// Distance modulo coordinate permutations and the lattice `scale·Z^m`.
#[pyfunction]
fn compactified_distance(
    x: Vec<f64>,
    y: Vec<f64>,
    permutations: Vec<Vec<usize>>,
    scale: f64,
) -> PyResult<f64> {
    let g = FiniteIsometryGroup::from_permutations(&permutations).map_err(err)?;
    let shifts = LatticeShiftAction::new(scale, x.len()).map_err(err)?;
    quotient::compactified_distance(&x, &y, &g, &shifts).map_err(err)
}

/// Distance between diagonal orbits `[(a₁, a₂)]` and `[(b₁, b₂)]`, minimized
/// over a net of size `q`.
#[pyfunction]
fn diagonal_quotient_distance(
    group: &PyGroup,
    a: (Vec<f64>, Vec<f64>),
    b: (Vec<f64>, Vec<f64>),
    q: usize,
) -> PyResult<f64> {
    let g = &group.spec;
    let point = |(first, second): (Vec<f64>, Vec<f64>)| {
        DiagonalQuotientPoint::new(g, group.element(&first)?, group.element(&second)?).map_err(err)
    };
    let net = g.net(q).map_err(err)?;
    quotient::diagonal_quotient_distance(&point(a)?, &point(b)?, g, &net.elements).map_err(err)
}

/// Runs the tower pipeline; `config` and the result are JSON documents.
#[pyfunction]
#[pyo3(signature = (config, points, labels=None))]
fn run_pipeline(py: Python<'_>, config: &str, points: Vec<Vec<f64>>, labels: Option<Vec<String>>) -> PyResult<String> {
    let config: TowerConfig = serde_json::from_str(config).map_err(json_err)?;
    let elements = points
        .iter()
        .map(|c| config.group.element_from_coordinates(c))
        .collect::<flatspace::Result<Vec<_>>>()
        .map_err(err)?;
    let labels = labels.unwrap_or_else(|| (0..points.len()).map(|i| format!("p{i}")).collect());
    let report = py
        .detach(|| tower::run_pipeline(&elements, &labels, &config))
        .map_err(err)?;
    report.without_timings().to_json().map_err(err)
}

/// `E d²(Z_t, Z_0) / (t E d²(Z_1, Z_0))`, or `None` when the chain never
/// moves between distinct images.
#[pyfunction]
fn markov_ratio(
    pi: Vec<f64>,
    transitions: Vec<Vec<f64>>,
    squared_distances: Vec<Vec<f64>>,
    t: usize,
) -> PyResult<Option<f64>> {
    let chain = ReversibleChain::new(pi, transitions).map_err(err)?;
    let n = chain.len();
    if squared_distances.len() != n || squared_distances.iter().any(|r| r.len() != n) {
        return Err(FlatspaceError::new_err("squared_distances must be n x n"));
    }
    let cfg = MappedConfiguration {
        chain,
        squared_distances,
    };
    Ok(match markov::markov_ratio(&cfg, t).map_err(err)? {
        MarkovRatio::Value(v) => Some(v),
        MarkovRatio::Vacuous => None,
    })
}

/// Exact Markov type 2 check over random chains; returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (target="sphere", max_states=6, trials=100, t_max=10, k=1.0, seed=0))]
fn verify_markov_type2(
    py: Python<'_>,
    target: &str,
    max_states: usize,
    trials: usize,
    t_max: usize,
    k: f64,
    seed: u64,
) -> PyResult<String> {
    let target: TargetSpace =
        serde_json::from_value(serde_json::Value::String(target.into())).map_err(json_err)?;
    let sampler = ChainSampler::new(target, max_states).map_err(err)?;
    let report = py
        .detach(|| markov::verify_markov_type2(&sampler, trials, t_max, k, seed))
        .map_err(err)?;
    serde_json::to_string(&report).map_err(json_err)
}

/// Adds the classes and functions of the `flatspace` module to `m`.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("FlatspaceError", m.py().get_type::<FlatspaceError>())?;
    m.add_class::<PyFiniteMetricSpace>()?;
    m.add_class::<PyGroup>()?;
    m.add_function(wrap_pyfunction!(solve_assignment, m)?)?;
    m.add_function(wrap_pyfunction!(w2_discrete, m)?)?;
    m.add_function(wrap_pyfunction!(perm_quotient_distance, m)?)?;
    m.add_function(wrap_pyfunction!(euclidean_quotient_distance, m)?)?;
    m.add_function(wrap_pyfunction!(compactified_distance, m)?)?;
    m.add_function(wrap_pyfunction!(diagonal_quotient_distance, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    m.add_function(wrap_pyfunction!(markov_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(verify_markov_type2, m)?)?;
    Ok(())
}

#[pymodule]
#[pyo3(name = "flatspace")]
fn flatspace_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}
