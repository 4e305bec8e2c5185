//! Python bindings: configuration, synthetic worlds, metrics, the ranker and
//! the command-line stages.

use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use kdcn::config::RunConfig;
use kdcn::datagen::{generate_world, World};
use kdcn::model::{load_model, rank_candidates, KdcnModel, Resolver, Variant};
use kdcn::numeric::Tensor2D;
use kdcn::pipeline::{Assets, OutDir};
use kdcn::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyOSError::new_err(io.to_string()),
        Error::Training(_) | Error::Sampling(_) => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn variant(name: &str) -> PyResult<Variant> {
    Variant::parse(name).ok_or_else(|| PyValueError::new_err(format!("unknown variant {name:?}")))
}

/// Flat `key = value` run configuration.
#[pyclass(name = "RunConfig", module = "kdcn_py", skip_from_py_object)]
#[derive(Clone)]
struct PyRunConfig {
    inner: RunConfig,
}

#[pymethods]
impl PyRunConfig {
    #[new]
    #[pyo3(signature = (text = None))]
    fn new(text: Option<&str>) -> PyResult<Self> {
        let inner = match text {
            Some(t) => RunConfig::parse(t).map_err(py_err)?,
            None => RunConfig::default(),
        };
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: RunConfig::load(&path).map_err(py_err)? })
    }

    fn set(&mut self, key: &str, value: &str) -> PyResult<()> {
        self.inner.set(key, value).map_err(py_err)
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(py_err)
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[setter]
    fn set_seed(&mut self, seed: u64) {
        self.inner.seed = seed;
    }

    fn __repr__(&self) -> String {
        format!("RunConfig(seed={})", self.inner.seed)
    }
}

/// A generated synthetic world.
#[pyclass(name = "World", module = "kdcn_py", frozen)]
struct PyWorld {
    inner: World,
}

#[pymethods]
impl PyWorld {
    #[new]
    #[pyo3(signature = (config = None))]
    fn new(config: Option<&PyRunConfig>) -> PyResult<Self> {
        let cfg = config.map_or_else(RunConfig::default, |c| c.inner.clone());
        Ok(Self { inner: generate_world(&cfg.world_config()).map_err(py_err)? })
    }

    #[getter]
    fn n_entities(&self) -> usize {
        self.inner.triples.n_entities()
    }

    #[getter]
    fn n_triples(&self) -> usize {
        self.inner.triples.len()
    }

    /// `(head, relation, tail)` name triples.
    fn triples(&self) -> Vec<(String, String, String)> {
        let set = &self.inner.triples;
        let v = set.vocab();
        set.triples()
            .iter()
            .map(|t| (v.name(t.head).to_owned(), t.relation.to_string(), v.name(t.tail).to_owned()))
            .collect()
    }
}

/// A trained variant with the pretrained embeddings and catalog it needs.
#[pyclass(name = "Ranker", module = "kdcn_py", frozen)]
struct PyRanker {
    assets: Assets,
    model: KdcnModel,
    resolver: Resolver,
}

#[pymethods]
impl PyRanker {
    #[new]
    #[pyo3(signature = (out_dir, variant = "kdcn"))]
    fn new(out_dir: PathBuf, variant: &str) -> PyResult<Self> {
        let out = OutDir::new(out_dir);
        let v = self::variant(variant)?;
        let assets = Assets::load(&out).map_err(py_err)?;
        let model = load_model(out.model(v)).map_err(py_err)?;
        let m = &model.config.model;
        let resolver = Resolver::new(&assets.vocab, &assets.catalog, m.m_q, m.n_t);
        Ok(Self { assets, model, resolver })
    }

    /// Candidates sorted by descending click probability.
    fn rank(&self, py: Python<'_>, user: &str, query: &str, candidates: Vec<String>) -> PyResult<Vec<(String, f64)>> {
        let ranked = py
            .detach(|| {
                rank_candidates(
                    user,
                    query,
                    &candidates,
                    &self.model,
                    &self.assets.checkpoint,
                    &self.assets.catalog,
                    &self.resolver,
                )
            })
            .map_err(py_err)?;
        Ok(ranked.into_iter().map(|r| (r.item, r.p)).collect())
    }

    #[getter]
    fn parameter_count(&self) -> usize {
        self.model.params.parameter_count()
    }
}

/// Area under the ROC curve, ties counting one half.
#[pyfunction]
fn auc(scores: Vec<f64>, labels: Vec<u8>) -> PyResult<f64> {
    kdcn::eval::auc(&scores, &labels).map_err(py_err)
}

#[pyfunction]
fn transe_score(h: Vec<f64>, r: Vec<f64>, t: Vec<f64>) -> PyResult<f64> {
    kdcn::pretrain::transe_score(&h, &r, &t).map_err(py_err)
}

#[pyfunction]
fn margin_loss(pos: Vec<f64>, neg: Vec<f64>, margin: f64) -> PyResult<f64> {
    kdcn::pretrain::margin_loss(&pos, &neg, margin).map_err(py_err)
}

#[pyfunction]
fn softmax_rows(rows: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    let m = Tensor2D::from_rows(&rows).map_err(py_err)?;
    let s = kdcn::numeric::softmax_rows(&m).map_err(py_err)?;
    Ok((0..s.rows()).map(|r| s.row(r).to_vec()).collect())
}

/// Runs the command-line tool on `args` (without the program name) and
/// returns `(exit_code, stdout, stderr)`.
#[pyfunction]
fn run_cli(py: Python<'_>, args: Vec<String>) -> (i32, String, String) {
    py.detach(|| {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let argv = std::iter::once("kdcn".to_owned()).chain(args);
        let code = kdcn::cli::run(argv, &mut out, &mut err);
        (code, String::from_utf8_lossy(&out).into_owned(), String::from_utf8_lossy(&err).into_owned())
    })
}

#[pymodule]
fn kdcn_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRunConfig>()?;
    m.add_class::<PyWorld>()?;
    m.add_class::<PyRanker>()?;
    m.add_function(wrap_pyfunction!(auc, m)?)?;
    m.add_function(wrap_pyfunction!(transe_score, m)?)?;
    m.add_function(wrap_pyfunction!(margin_loss, m)?)?;
    m.add_function(wrap_pyfunction!(softmax_rows, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
