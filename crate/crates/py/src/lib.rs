//! Python bindings: systems, schedules, and verification reports.
//!
//! Reports cross the boundary as plain dictionaries (parsed from the same
//! JSON the CLI writes), so Python sees exactly the file-format fields.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use gramsched::nalgebra::DMatrix;
use gramsched::schedule as sched;
use gramsched::system;
use gramsched::verify;

fn to_py_err(e: gramsched::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn matrix_from_row_major(
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    name: &str,
) -> PyResult<DMatrix<f64>> {
    if data.len() != rows * cols {
        return Err(PyValueError::new_err(format!(
            "{name} has {} entries, expected {rows}x{cols} = {}",
            data.len(),
            rows * cols
        )));
    }
    Ok(DMatrix::from_row_slice(rows, cols, &data))
}

/// A discrete-time LTI system (A, B, C).
#[pyclass(module = "gramsched_py", skip_from_py_object)]
#[derive(Clone)]
struct System {
    inner: system::LtiSystem,
}

#[pymethods]
impl System {
    /// Build from row-major matrices.
    #[new]
    fn new(n: usize, m: usize, p: usize, a: Vec<f64>, b: Vec<f64>, c: Vec<f64>) -> PyResult<Self> {
        let a = matrix_from_row_major(n, n, a, "A")?;
        let b = matrix_from_row_major(n, m, b, "B")?;
        let c = matrix_from_row_major(p, n, c, "C")?;
        Ok(System {
            inner: system::LtiSystem::new(a, b, c).map_err(to_py_err)?,
        })
    }

    /// Parse the CLI's system JSON format.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(System {
            inner: system::LtiSystem::from_json_str(text).map_err(to_py_err)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json_string().map_err(to_py_err)
    }

    /// Seeded random minimal system with the given spectral radius.
    #[staticmethod]
    #[pyo3(signature = (n, m, p, seed, spectral_radius = system::DEFAULT_SPECTRAL_RADIUS))]
    fn random(n: usize, m: usize, p: usize, seed: u64, spectral_radius: f64) -> PyResult<Self> {
        Ok(System {
            inner: system::random_system(n, m, p, seed, spectral_radius).map_err(to_py_err)?,
        })
    }

    /// Zero-order-hold discretized swing dynamics; `coupling` is the
    /// row-major g-by-g Laplacian-like matrix.
    #[staticmethod]
    fn swing(inertia: Vec<f64>, damping: Vec<f64>, coupling: Vec<f64>, dt: f64) -> PyResult<Self> {
        let g = inertia.len();
        let k = matrix_from_row_major(g, g, coupling, "coupling")?;
        let params = system::SwingParams::new(inertia, damping, k, dt).map_err(to_py_err)?;
        Ok(System {
            inner: system::swing_system(&params).map_err(to_py_err)?,
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    #[getter]
    fn p(&self) -> usize {
        self.inner.p()
    }

    /// Ranks of the reachability and observability matrices at horizon `t`.
    fn minimality(&self, t: usize) -> PyResult<(usize, usize, bool)> {
        let report = system::validate_minimal(&self.inner, t).map_err(to_py_err)?;
        Ok((report.rank_reach, report.rank_obs, report.is_minimal()))
    }

    /// Hankel singular values at horizon `t`, descending.
    fn hankel_singular_values(&self, t: usize) -> PyResult<Vec<f64>> {
        let gram = gramsched::gramians(&self.inner, t).map_err(to_py_err)?;
        let spectrum = gramsched::hankel_spectrum(&gram).map_err(to_py_err)?;
        Ok(spectrum.values().to_vec())
    }

    fn hankel_norm(&self, t: usize) -> PyResult<f64> {
        Ok(self.hankel_singular_values(t)?[0])
    }

    fn __repr__(&self) -> String {
        format!(
            "System(n={}, m={}, p={})",
            self.inner.n(),
            self.inner.m(),
            self.inner.p()
        )
    }
}

/// A sparse time-varying sensor/actuator schedule.
#[pyclass(module = "gramsched_py", skip_from_py_object)]
#[derive(Clone)]
struct Schedule {
    inner: sched::Schedule,
}

#[pymethods]
impl Schedule {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Schedule {
            inner: sched::Schedule::from_json_str(text).map_err(to_py_err)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json_string().map_err(to_py_err)
    }

    #[getter]
    fn t(&self) -> usize {
        self.inner.horizon()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.inputs()
    }

    #[getter]
    fn p(&self) -> usize {
        self.inner.outputs()
    }

    #[getter]
    fn provenance(&self) -> &'static str {
        verify::provenance_str(self.inner.provenance())
    }

    /// Positive sensor scalings as (k, i, scale) triples sorted by (k, i).
    fn sensor_scalings(&self) -> Vec<(usize, usize, f64)> {
        self.inner
            .sensor_scalings()
            .iter()
            .map(|(&(k, i), &s)| (k, i, s))
            .collect()
    }

    fn actuator_scalings(&self) -> Vec<(usize, usize, f64)> {
        self.inner
            .actuator_scalings()
            .iter()
            .map(|(&(k, i), &s)| (k, i, s))
            .collect()
    }

    /// Average active (sensors, actuators) per step.
    fn average_cardinalities(&self) -> (f64, f64) {
        sched::average_cardinalities(&self.inner)
    }

    /// Fair-comparison rescaling: squared scalings sum to `n * d` per side.
    #[pyo3(signature = (n, d_s = None, d_a = None))]
    fn normalized(&self, n: usize, d_s: Option<f64>, d_a: Option<f64>) -> PyResult<Schedule> {
        Ok(Schedule {
            inner: sched::normalize_schedule(&self.inner, d_s, d_a, n).map_err(to_py_err)?,
        })
    }

    fn __repr__(&self) -> String {
        let (sensors, actuators) = self.inner.active_pairs();
        format!(
            "Schedule(t={}, provenance={:?}, active_pairs=({sensors}, {actuators}))",
            self.inner.horizon(),
            verify::provenance_str(self.inner.provenance()),
        )
    }
}

#[pyfunction]
fn joint_schedule(sys: &System, t: usize, d_s: f64, d_a: f64) -> PyResult<Schedule> {
    Ok(Schedule {
        inner: sched::joint_schedule(&sys.inner, t, d_s, d_a).map_err(to_py_err)?,
    })
}

#[pyfunction]
fn sensor_schedule(sys: &System, t: usize, d_s: f64) -> PyResult<Schedule> {
    Ok(Schedule {
        inner: sched::sensor_schedule(&sys.inner, t, d_s).map_err(to_py_err)?,
    })
}

#[pyfunction]
fn actuator_schedule(sys: &System, t: usize, d_a: f64) -> PyResult<Schedule> {
    Ok(Schedule {
        inner: sched::actuator_schedule(&sys.inner, t, d_a).map_err(to_py_err)?,
    })
}

#[pyfunction]
fn separation_schedule(sys: &System, t: usize, d_s: f64, d_a: f64) -> PyResult<Schedule> {
    Ok(Schedule {
        inner: sched::separation_schedule(&sys.inner, t, d_s, d_a).map_err(to_py_err)?,
    })
}

/// Certify `schedule` against `sys`; returns the verification report as a
/// dict with the same fields as the report JSON file.
#[pyfunction]
#[pyo3(signature = (sys, schedule, d_s = None, d_a = None))]
fn verify_schedule<'py>(
    py: Python<'py>,
    sys: &System,
    schedule: &Schedule,
    d_s: Option<f64>,
    d_a: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let report = verify::verify_schedule_with(&sys.inner, &schedule.inner, d_s, d_a, &[])
        .map_err(to_py_err)?;
    let json = report.to_json_string().map_err(to_py_err)?;
    let loads = py.import("json")?.getattr("loads")?;
    loads.call1((json,))
}

/// Closed-form approximation factor `2 atanh(sqrt(n / kappa))`.
#[pyfunction]
fn theoretical_epsilon(n: usize, kappa: usize) -> PyResult<f64> {
    verify::theoretical_epsilon(n, kappa).map_err(to_py_err)
}

#[pymodule]
fn gramsched_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<System>()?;
    m.add_class::<Schedule>()?;
    m.add_function(wrap_pyfunction!(joint_schedule, m)?)?;
    m.add_function(wrap_pyfunction!(sensor_schedule, m)?)?;
    m.add_function(wrap_pyfunction!(actuator_schedule, m)?)?;
    m.add_function(wrap_pyfunction!(separation_schedule, m)?)?;
    m.add_function(wrap_pyfunction!(verify_schedule, m)?)?;
    m.add_function(wrap_pyfunction!(theoretical_epsilon, m)?)?;
    Ok(())
}
