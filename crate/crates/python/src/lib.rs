//! Python bindings for `qmeasure`.
//!
//! Density matrices cross the boundary as nested lists of complex numbers,
//! pure states as flat lists.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use qmeasure::bloch::{build_grid, continuum_measurement, CompressionMap, QuadratureGrid};
use qmeasure::information;
use qmeasure::measurement::{self as meas, DephasingMatrix, MeasurementEntry, MeasurementSpec, Preset};
use qmeasure::oracle;
use qmeasure::qstate::{ComplexMatrix, DensityMatrix, PureState};

type Matrix = Vec<Vec<Complex64>>;

fn err(e: qmeasure::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_matrix(rows: &Matrix) -> PyResult<ComplexMatrix> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("matrix must be square"));
    }
    ComplexMatrix::from_vec(n, n, rows.concat()).map_err(err)
}

fn from_matrix(m: &ComplexMatrix) -> Matrix {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

fn density(rows: &Matrix) -> PyResult<DensityMatrix> {
    DensityMatrix::new(to_matrix(rows)?).map_err(err)
}

fn grid(theta_nodes: usize, phi_nodes: usize) -> PyResult<QuadratureGrid> {
    build_grid(theta_nodes, phi_nodes).map_err(err)
}

fn compression(q: f64) -> PyResult<CompressionMap> {
    CompressionMap::new(q).map_err(err)
}

/// A generalized measurement: probes, outputs and weights.
#[pyclass(name = "Measurement", module = "qmeasure_py", frozen)]
struct PyMeasurement {
    spec: MeasurementSpec,
}

#[pymethods]
impl PyMeasurement {
    /// `entries` is a list of `(weight, probe, output)` with states as lists
    /// of complex amplitudes.
    #[new]
    #[pyo3(signature = (entries, tol = 1e-10))]
    fn new(entries: Vec<(f64, Vec<Complex64>, Vec<Complex64>)>, tol: f64) -> PyResult<Self> {
        let dim = entries
            .first()
            .map(|e| e.1.len())
            .ok_or_else(|| PyValueError::new_err("no entries"))?;
        let built = entries
            .into_iter()
            .map(|(w, probe, output)| {
                Ok(MeasurementEntry::new(
                    PureState::new(probe).map_err(err)?,
                    PureState::new(output).map_err(err)?,
                    w,
                ))
            })
            .collect::<PyResult<Vec<_>>>()?;
        Ok(Self {
            spec: MeasurementSpec::new(dim, built, tol).map_err(err)?,
        })
    }

    /// Named preset: `projective`, `entangling` or `complete_transfer`.
    #[staticmethod]
    fn preset(name: &str, dim: usize) -> PyResult<Self> {
        let kind = match name {
            "projective" => Preset::Projective,
            "entangling" => Preset::Entangling,
            "complete_transfer" => Preset::CompleteTransfer,
            other => return Err(PyValueError::new_err(format!("unknown preset `{other}`"))),
        };
        Ok(Self {
            spec: meas::preset(&kind, dim).map_err(err)?,
        })
    }

    /// Discretized continuum measurement of a qubit with compression `q`.
    #[staticmethod]
    #[pyo3(signature = (q, theta_nodes = 32, phi_nodes = 16))]
    fn continuum(q: f64, theta_nodes: usize, phi_nodes: usize) -> PyResult<Self> {
        Ok(Self {
            spec: continuum_measurement(&compression(q)?, &grid(theta_nodes, phi_nodes)?, 2).map_err(err)?,
        })
    }

    #[getter]
    fn object_dim(&self) -> usize {
        self.spec.object_dim()
    }

    #[getter]
    fn meter_dim(&self) -> usize {
        self.spec.meter_dim()
    }

    fn completeness_deviation(&self) -> f64 {
        self.spec.completeness_deviation()
    }

    fn povm(&self) -> Vec<Matrix> {
        meas::povm_elements(&self.spec)
            .elements()
            .iter()
            .map(from_matrix)
            .collect()
    }

    fn outcome_distribution(&self, rho: Matrix) -> PyResult<Vec<f64>> {
        meas::outcome_distribution(&self.spec, &density(&rho)?).map_err(err)
    }

    /// Meter state; `r` defaults to the fully coherent dephasing matrix.
    #[pyo3(signature = (rho, r = None))]
    fn meter_state(&self, rho: Matrix, r: Option<Matrix>) -> PyResult<Matrix> {
        let r = self.dephasing(r)?;
        let out = meas::contract_to_meter(&self.spec, &r, &density(&rho)?).map_err(err)?;
        Ok(from_matrix(out.matrix()))
    }

    /// Joint object-meter state after the dephased measurement.
    #[pyo3(signature = (rho, r = None))]
    fn apply(&self, rho: Matrix, r: Option<Matrix>) -> PyResult<Matrix> {
        let r = self.dephasing(r)?;
        let out = meas::apply_dephased(&self.spec, &r, &density(&rho)?).map_err(err)?;
        Ok(from_matrix(out.matrix()))
    }

    /// Smallest eigenvalue of the Choi matrix for dephasing `r`.
    #[pyo3(signature = (r = None))]
    fn choi_min_eigenvalue(&self, r: Option<Matrix>) -> PyResult<f64> {
        let r = match r {
            Some(r) => to_matrix(&r)?,
            None => DephasingMatrix::coherent(self.spec.meter_dim()).matrix().clone(),
        };
        Ok(oracle::choi_cp_check(&self.spec, &r, 0.0).map_err(err)?.main)
    }

    fn __repr__(&self) -> String {
        format!(
            "Measurement(object_dim={}, meter_dim={})",
            self.spec.object_dim(),
            self.spec.meter_dim()
        )
    }
}

impl PyMeasurement {
    fn dephasing(&self, r: Option<Matrix>) -> PyResult<DephasingMatrix> {
        match r {
            Some(r) => DephasingMatrix::new(to_matrix(&r)?, 1e-10).map_err(err),
            None => Ok(DephasingMatrix::coherent(self.spec.meter_dim())),
        }
    }
}

/// Entanglement (bits) of object and meter after measuring the input at polar angle `s`.
#[pyfunction]
#[pyo3(signature = (s, q, theta_nodes = 96, phi_nodes = 48))]
fn entanglement(s: f64, q: f64, theta_nodes: usize, phi_nodes: usize) -> PyResult<f64> {
    information::entanglement(s, &compression(q)?, &grid(theta_nodes, phi_nodes)?).map_err(err)
}

/// Post-measurement object state for the input at polar angle `s`.
#[pyfunction]
#[pyo3(signature = (s, q, theta_nodes = 96, phi_nodes = 48))]
fn object_state(s: f64, q: f64, theta_nodes: usize, phi_nodes: usize) -> PyResult<Matrix> {
    let rho =
        information::post_measurement_object_state(s, &compression(q)?, &grid(theta_nodes, phi_nodes)?).map_err(err)?;
    Ok(from_matrix(rho.matrix()))
}

/// Closed-form population of `|0⟩` for the input `|1⟩`.
#[pyfunction]
fn p1(q: f64) -> PyResult<f64> {
    information::p1_closed_form(q).map_err(err)
}

/// `(I_A, I_B)` in bits at compression `q`.
#[pyfunction]
#[pyo3(signature = (q, theta_nodes = 96, phi_nodes = 48, ensemble_nodes = information::DEFAULT_ENSEMBLE_NODES))]
fn holevo(q: f64, theta_nodes: usize, phi_nodes: usize, ensemble_nodes: usize) -> PyResult<(f64, f64)> {
    let h = information::holevo_pair(&compression(q)?, &grid(theta_nodes, phi_nodes)?, ensemble_nodes).map_err(err)?;
    Ok((h.object, h.meter))
}

/// `(q*, E*)` maximizing the entanglement at fixed `s` over `[lo, hi]`.
#[pyfunction]
#[pyo3(signature = (s, lo = 0.0, hi = 1.0, theta_nodes = 96, phi_nodes = 48))]
fn maximize(s: f64, lo: f64, hi: f64, theta_nodes: usize, phi_nodes: usize) -> PyResult<(f64, f64)> {
    information::maximize_entanglement(s, &grid(theta_nodes, phi_nodes)?, (lo, hi)).map_err(err)
}

/// Monte-Carlo estimate of the post-measurement object state.
#[pyfunction]
#[pyo3(signature = (s, q, samples = 1_000_000, seed = 0))]
fn mc_object_state(py: Python<'_>, s: f64, q: f64, samples: usize, seed: u64) -> PyResult<Matrix> {
    let rho = py
        .detach(|| oracle::mc_integrate_rho(s, q, samples, seed))
        .map_err(err)?;
    Ok(from_matrix(rho.matrix()))
}

/// Von Neumann entropy in bits.
#[pyfunction]
fn entropy(rho: Matrix) -> PyResult<f64> {
    qmeasure::qstate::von_neumann_entropy(&density(&rho)?).map_err(err)
}

#[pymodule]
fn qmeasure_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMeasurement>()?;
    m.add_function(wrap_pyfunction!(entanglement, m)?)?;
    m.add_function(wrap_pyfunction!(object_state, m)?)?;
    m.add_function(wrap_pyfunction!(p1, m)?)?;
    m.add_function(wrap_pyfunction!(holevo, m)?)?;
    m.add_function(wrap_pyfunction!(maximize, m)?)?;
    m.add_function(wrap_pyfunction!(mc_object_state, m)?)?;
    m.add_function(wrap_pyfunction!(entropy, m)?)?;
    Ok(())
}
