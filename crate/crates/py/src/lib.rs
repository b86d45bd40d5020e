//! Python bindings: model construction, band edges, analytic resonances,
//! correlation series, harmonic inversion and the spectral statistics.
//!
//! Structured results (reports, edge estimates, resonance lists) cross the
//! boundary as plain dicts and lists decoded from their JSON form.

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyAny;
use ruelle_bands::anosov::verify_anosov;
use ruelle_bands::birkhoff::{band_edges as core_band_edges, SamplingPlan, Seeding};
use ruelle_bands::correlation::{correlation_series, ObservableSpec};
use ruelle_bands::error::Error;
use ruelle_bands::hyperbolic::C64;
use ruelle_bands::inversion::harmonic_inversion as core_inversion;
use ruelle_bands::model::{build_model, FlowModel, ModelConfig};
use ruelle_bands::potential::PotentialSpec;
use ruelle_bands::resonances::{resonances_from_laplacian, synthetic_weyl_spectrum, LaplaceSpectrum, Resonance, SpectrumSource};
use ruelle_bands::stats;

create_exception!(ruelle, RuelleError, PyException);

fn err(e: Error) -> PyErr {
    RuelleError::new_err(format!("{}: {e}", e.kind()))
}

fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| RuelleError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_py<T: serde::de::DeserializeOwned>(value: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = value.py().import("json")?.call_method1("dumps", (value,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| RuelleError::new_err(format!("input: {e}")))
}

/// A validated flow model: constant curvature when `epsilon == 0`, otherwise
/// the conformal perturbation of that size. `config` takes TOML text and
/// overrides `epsilon`.
#[pyclass(frozen, module = "ruelle")]
struct Model {
    inner: FlowModel,
}

#[pymethods]
impl Model {
    #[new]
    #[pyo3(signature = (epsilon = 0.0, config = None))]
    fn new(py: Python<'_>, epsilon: f64, config: Option<&str>) -> PyResult<Self> {
        let config = match config {
            Some(text) => ModelConfig::from_toml_str(text).map_err(err)?,
            None if epsilon == 0.0 => ModelConfig::constant_curvature(),
            None => ModelConfig::perturbed(epsilon),
        };
        let inner = py.detach(|| build_model(&config)).map_err(err)?;
        Ok(Model { inner })
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.inner.epsilon()
    }

    /// Surface area.
    #[getter]
    fn area(&self) -> f64 {
        self.inner.area()
    }

    /// Liouville volume of the unit tangent bundle.
    #[getter]
    fn volume(&self) -> f64 {
        self.inner.volume()
    }

    fn gaussian_curvature(&self, x: f64, y: f64) -> f64 {
        self.inner.gaussian_curvature(C64::new(x, y))
    }

    #[pyo3(signature = (n_samples = 64, t_check = 1.0, seed = 0))]
    fn verify_anosov<'py>(&self, py: Python<'py>, n_samples: usize, t_check: f64, seed: u64) -> PyResult<Bound<'py, PyAny>> {
        let report = py.detach(|| verify_anosov(&self.inner, n_samples, t_check, seed));
        to_py(py, &report)
    }

    fn __repr__(&self) -> String {
        format!("Model(epsilon={})", self.inner.epsilon())
    }
}

/// Band edges `gamma_-^k, gamma_+^k` for the potential `c0 + c1 psi + c2 psi^2`.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (model, k = 0, potential = (0.0, 0.0, 0.0), n_orbits = 256, seeding = "liouville", windows = None, seed = 0))]
fn band_edges<'py>(
    py: Python<'py>,
    model: &Model,
    k: usize,
    potential: (f64, f64, f64),
    n_orbits: usize,
    seeding: &str,
    windows: Option<Vec<f64>>,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let seeding = match seeding {
        "liouville" => Seeding::Liouville,
        "closed_geodesics" => Seeding::ClosedGeodesics,
        "both" => Seeding::Both,
        other => return Err(RuelleError::new_err(format!("config: unknown seeding {other:?}"))),
    };
    let mut plan = SamplingPlan { n_orbits, seeding, seed, ..SamplingPlan::default() };
    if let Some(w) = windows {
        plan.windows = w;
    }
    let v = PotentialSpec { c0: potential.0, c1: potential.1, c2: potential.2 };
    let edges = py.detach(|| core_band_edges(&model.inner, &v, k, &plan)).map_err(err)?;
    to_py(py, &edges)
}

/// Sorted synthetic Laplace eigenvalues with Weyl density for the given area.
#[pyfunction]
#[pyo3(signature = (area, mu_max, jitter = 0.0, seed = 0))]
fn synthetic_spectrum(area: f64, mu_max: f64, jitter: f64, seed: u64) -> PyResult<Vec<f64>> {
    Ok(synthetic_weyl_spectrum(area, mu_max, jitter, seed).map_err(err)?.eigenvalues().to_vec())
}

/// Resonance catalogue of a constant-curvature surface from its Laplace
/// spectrum, as a list of `{re, im, band, provenance}` dicts.
#[pyfunction]
#[pyo3(signature = (area, eigenvalues, k_max = 3, n_max = 0))]
fn resonances<'py>(py: Python<'py>, area: f64, eigenvalues: Vec<f64>, k_max: usize, n_max: usize) -> PyResult<Bound<'py, PyAny>> {
    let spec = LaplaceSpectrum::new(area, eigenvalues, SpectrumSource::File).map_err(err)?;
    to_py(py, &resonances_from_laplacian(&spec, k_max, n_max))
}

/// Correlation series `C(m dt)` for two observables given in the CLI syntax
/// (`bump0:x,y,s`, `psi`, ...). Returns `(values, stderr)`.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (model, dt, n, n_samples, u = "bump0:0,0,0.5", v = "bump0:0,0,0.5", seed = 0))]
fn correlation(
    py: Python<'_>,
    model: &Model,
    dt: f64,
    n: usize,
    n_samples: usize,
    u: &str,
    v: &str,
    seed: u64,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let u: ObservableSpec = u.parse().map_err(err)?;
    let v: ObservableSpec = v.parse().map_err(err)?;
    let s = py.detach(|| correlation_series(&model.inner, &u, &v, dt, n, n_samples, seed)).map_err(err)?;
    Ok((s.values, s.stderr))
}

/// Matrix-pencil inversion of a uniformly sampled real signal. Returns a list
/// of `(exponent, amplitude)` complex pairs.
#[pyfunction]
#[pyo3(signature = (values, dt, max_modes = 8, sv_threshold = 1e-3))]
fn harmonic_inversion(values: Vec<f64>, dt: f64, max_modes: usize, sv_threshold: f64) -> PyResult<Vec<(Complex64, Complex64)>> {
    let set = core_inversion(&values, dt, max_modes, sv_threshold).map_err(err)?;
    Ok(set.modes.iter().map(|m| (m.z, m.amplitude)).collect())
}

/// Number of band-`k` resonances with `b <= Im z < b + b^eps_exp`.
#[pyfunction]
#[pyo3(signature = (resonances, k, b, eps_exp = 0.0))]
fn weyl_count(resonances: &Bound<'_, PyAny>, k: usize, b: f64, eps_exp: f64) -> PyResult<usize> {
    let list: Vec<Resonance> = from_py(resonances)?;
    Ok(stats::weyl_count(&list, k, b, eps_exp))
}

/// Mean distance of first-band real parts from `d_mean` below each height in `ladder`.
#[pyfunction]
fn concentration<'py>(py: Python<'py>, resonances: &Bound<'py, PyAny>, d_mean: f64, ladder: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
    let list: Vec<Resonance> = from_py(resonances)?;
    to_py(py, &stats::concentration(&list, d_mean, &ladder))
}

/// Membership of each resonance in the strips `[gamma_- - eps, gamma_+ + eps]`,
/// given `bands` as a list of `{k, gamma_minus, gamma_plus}` dicts.
#[pyfunction]
#[pyo3(signature = (resonances, bands, eps = 0.0, c0 = 5.0))]
fn band_membership<'py>(
    py: Python<'py>,
    resonances: &Bound<'py, PyAny>,
    bands: &Bound<'py, PyAny>,
    eps: f64,
    c0: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let list: Vec<Resonance> = from_py(resonances)?;
    let bands: Vec<stats::BandInterval> = from_py(bands)?;
    to_py(py, &stats::band_membership(&list, &bands, eps, c0).map_err(err)?)
}

#[pymodule]
fn ruelle(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("RuelleError", m.py().get_type::<RuelleError>())?;
    m.add_class::<Model>()?;
    m.add_function(wrap_pyfunction!(band_edges, m)?)?;
    m.add_function(wrap_pyfunction!(synthetic_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(resonances, m)?)?;
    m.add_function(wrap_pyfunction!(correlation, m)?)?;
    m.add_function(wrap_pyfunction!(harmonic_inversion, m)?)?;
    m.add_function(wrap_pyfunction!(weyl_count, m)?)?;
    m.add_function(wrap_pyfunction!(concentration, m)?)?;
    m.add_function(wrap_pyfunction!(band_membership, m)?)?;
    Ok(())
}
