//! Python bindings: grids, fields, Littlewood-Paley and paraproduct ops, the solver,
//! configs, full experiments and verification suites.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyBytes;
use std::collections::BTreeMap;
use std::path::PathBuf;

use torus_cascade as core;
use core::dyadic::{tail_mass, AdaptedNormContext, DyadicPartition};
use core::euler::{evolve, invariants_report, SolverState};
use core::fourier::{forward, inverse, Grid2D, PhysicalField, SpectralField};
use core::harness::{decode_pcf1, encode_pcf1, RunConfig};
use core::paracalc::AdmissibleCutoff;

fn err(e: core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "Grid", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyGrid(Grid2D);

#[pymethods]
impl PyGrid {
    #[new]
    #[pyo3(signature = (n, length = std::f64::consts::TAU))]
    fn new(n: usize, length: f64) -> PyResult<Self> {
        Grid2D::new(n, length).map(PyGrid).map_err(err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn length(&self) -> f64 {
        self.0.length()
    }

    fn __repr__(&self) -> String {
        format!("Grid(n={}, length={})", self.0.n(), self.0.length())
    }
}

/// A real scalar field, held by its Fourier coefficients.
#[pyclass(name = "Field", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyField(SpectralField);

#[pymethods]
impl PyField {
    /// From `n*n` row-major grid values.
    #[staticmethod]
    fn from_values(grid: &PyGrid, values: Vec<f64>) -> PyResult<Self> {
        Ok(PyField(forward(&PhysicalField::new(grid.0, values).map_err(err)?)))
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid(*self.0.grid())
    }

    /// Row-major grid values.
    fn values(&self) -> Vec<f64> {
        inverse(&self.0).values().to_vec()
    }

    fn l2_norm(&self) -> f64 {
        self.0.l2_norm()
    }

    /// `||(Id - P_{<1/eps}) f||`.
    fn tail_mass(&self, eps: f64) -> f64 {
        tail_mass(&self.0, eps)
    }

    /// Littlewood-Paley block `Delta_k f`.
    fn block(&self, k: usize) -> PyResult<PyField> {
        DyadicPartition::new(*self.0.grid()).block(&self.0, k).map(PyField).map_err(err)
    }

    fn __add__(&self, other: &PyField) -> PyResult<PyField> {
        self.0.add(&other.0).map(PyField).map_err(err)
    }

    fn __sub__(&self, other: &PyField) -> PyResult<PyField> {
        self.0.sub(&other.0).map(PyField).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Field(n={}, l2={:.6e})", self.0.grid().n(), self.0.l2_norm())
    }
}

fn cutoff(big_b: f64, small_b: f64) -> PyResult<AdmissibleCutoff> {
    AdmissibleCutoff::new(big_b, small_b).map_err(err)
}

/// Seeded power-law vorticity with `dr(eps) ~ eps^s`.
#[pyfunction]
#[pyo3(signature = (grid, s, amplitude = 1.0, seed = 7))]
fn power_law_field(grid: &PyGrid, s: f64, amplitude: f64, seed: u64) -> PyField {
    PyField(core::harness::power_law_field(grid.0, s, amplitude, seed, grid.0.n() as f64 / 3.0))
}

/// Fitted decay exponent of the tail mass.
#[pyfunction]
fn tail_exponent(f: &PyField) -> PyResult<f64> {
    core::harness::tail_exponent(&f.0).map_err(err)
}

#[pyfunction]
fn product(f: &PyField, g: &PyField) -> PyResult<PyField> {
    core::fourier::product(&f.0, &g.0).map(PyField).map_err(err)
}

/// `T_f g`.
#[pyfunction]
#[pyo3(signature = (f, g, big_b = 4.0, small_b = 1.0))]
fn paraproduct(f: &PyField, g: &PyField, big_b: f64, small_b: f64) -> PyResult<PyField> {
    core::paracalc::paraproduct(&f.0, &g.0, &cutoff(big_b, small_b)?).map(PyField).map_err(err)
}

/// `R(f, g)`.
#[pyfunction]
#[pyo3(signature = (f, g, big_b = 4.0, small_b = 1.0))]
fn remainder(f: &PyField, g: &PyField, big_b: f64, small_b: f64) -> PyResult<PyField> {
    core::paracalc::remainder(&f.0, &g.0, &cutoff(big_b, small_b)?).map(PyField).map_err(err)
}

/// Adapted norm of `f` against the tail profile of `reference`.
#[pyfunction]
fn adapted_norm(f: &PyField, reference: &PyField) -> PyResult<f64> {
    core::dyadic::adapted_norm(&f.0, &AdaptedNormContext::for_field(&reference.0)).map_err(err)
}

/// RK4 evolution of Euler (`alpha = 2`) or gSQG; returns the final field.
#[pyfunction]
#[pyo3(signature = (omega, t_end, dt = 1e-3, alpha = 2.0, dealias = true))]
fn evolve_field(py: Python<'_>, omega: &PyField, t_end: f64, dt: f64, alpha: f64, dealias: bool) -> PyResult<PyField> {
    let w = omega.0.clone();
    py.detach(|| {
        let state = if alpha == 2.0 { SolverState::euler(w, dealias) } else { SolverState::gsqg(w, alpha, dealias) }?;
        evolve(state, t_end, dt, usize::MAX, |_| Ok(())).map(|s| PyField(s.omega().clone()))
    })
    .map_err(err)
}

/// Energy, enstrophy and extrema of a vorticity field.
#[pyfunction]
fn invariants(omega: &PyField) -> PyResult<BTreeMap<&'static str, f64>> {
    let state = SolverState::euler(omega.0.clone(), false).map_err(err)?;
    let r = invariants_report(&state, &[], None).map_err(err)?;
    Ok(BTreeMap::from([
        ("energy", r.energy),
        ("enstrophy", r.enstrophy),
        ("omega_min", r.omega_min),
        ("omega_max", r.omega_max),
        ("near_band_fraction", r.near_band_fraction),
    ]))
}

#[pyfunction]
fn encode_pcf1_bytes<'py>(py: Python<'py>, f: &PyField) -> Bound<'py, PyBytes> {
    PyBytes::new(py, &encode_pcf1(&inverse(&f.0)))
}

#[pyfunction]
fn decode_pcf1_bytes(data: &[u8]) -> PyResult<PyField> {
    decode_pcf1(data).map(|p| PyField(forward(&p))).map_err(err)
}

/// Flat key/value run configuration.
#[pyclass(name = "RunConfig", skip_from_py_object)]
#[derive(Clone)]
struct PyRunConfig(RunConfig);

#[pymethods]
impl PyRunConfig {
    #[new]
    #[pyo3(signature = (preset = "cascade-default"))]
    fn new(preset: &str) -> PyResult<Self> {
        RunConfig::preset(preset).map(PyRunConfig).map_err(err)
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        RunConfig::parse(text).map(PyRunConfig).map_err(err)
    }

    fn set(&mut self, key: &str, value: &str) -> PyResult<()> {
        self.0.set(key, value).map_err(err)
    }

    fn set_outdir(&mut self, path: PathBuf) {
        self.0.outdir = path;
    }

    fn validate(&self) -> PyResult<()> {
        self.0.validate().map_err(err)
    }

    fn to_text(&self) -> String {
        self.0.to_text()
    }
}

/// Full pipeline; returns `(passed, verdicts text)` and writes the run directory.
#[pyfunction]
fn run_experiment(py: Python<'_>, config: &PyRunConfig) -> PyResult<(bool, String)> {
    let cfg = config.0.clone();
    py.detach(|| core::harness::run_experiment(&cfg))
        .map(|o| (o.passed(), o.report.verdicts.to_text()))
        .map_err(err)
}

/// Named property suite; returns `(passed, report text)`.
#[pyfunction]
fn verify(py: Python<'_>, suite: &str) -> PyResult<(bool, String)> {
    let suite = suite.to_string();
    py.detach(|| core::harness::verify(&suite)).map(|r| (r.passed(), r.to_text())).map_err(err)
}

#[pymodule(name = "torus_cascade")]
pub fn torus_cascade_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyField>()?;
    m.add_class::<PyRunConfig>()?;
    m.add_function(wrap_pyfunction!(power_law_field, m)?)?;
    m.add_function(wrap_pyfunction!(tail_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(product, m)?)?;
    m.add_function(wrap_pyfunction!(paraproduct, m)?)?;
    m.add_function(wrap_pyfunction!(remainder, m)?)?;
    m.add_function(wrap_pyfunction!(adapted_norm, m)?)?;
    m.add_function(wrap_pyfunction!(evolve_field, m)?)?;
    m.add_function(wrap_pyfunction!(invariants, m)?)?;
    m.add_function(wrap_pyfunction!(encode_pcf1_bytes, m)?)?;
    m.add_function(wrap_pyfunction!(decode_pcf1_bytes, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
